use nalgebra::{DMatrix, DVector};

use crate::dynamics::{FullRate, FullState, InertiaOperator};
use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::{algebra_dim, AdAction, SkewMatrix};

const COMMUTE_TOL: f64 = 1e-12;
const C_CONDITION_TOL: f64 = 1e-10;

fn coord_matrix(basis: &[SkewMatrix], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, basis.len());
    for (k, e) in basis.iter().enumerate() {
        m.set_column(k, &e.coords());
    }
    m
}

/// `A_{a,b,C}(ξ) = ad_a⁻¹ ad_b pr_𝔡 ξ + C pr_{𝔤_a} ξ`, with `𝔡 = 𝔤_a^⊥`.
#[derive(Clone, Debug)]
pub struct SectionalOperator {
    a: SkewMatrix,
    b: SkewMatrix,
    c: DMatrix<f64>,
    ga_basis: Vec<SkewMatrix>,
    d_basis: Vec<SkewMatrix>,
    matrix: DMatrix<f64>,
}

impl SectionalOperator {
    /// `C` is given in the orthonormal centralizer basis returned by
    /// [`AdAction::centralizer_basis`] for `a`.
    pub fn new(a: SkewMatrix, b: SkewMatrix, c: DMatrix<f64>) -> Result<Self> {
        let basis = AdAction::new(&a).centralizer_basis();
        Self::with_centralizer_basis(a, b, basis, c)
    }

    /// As [`Self::new`] with a caller-chosen orthonormal basis of `𝔤_a`, so
    /// that `C` can be written in a convenient basis.
    pub fn with_centralizer_basis(
        a: SkewMatrix,
        b: SkewMatrix,
        ga_basis: Vec<SkewMatrix>,
        c: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.dim();
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.dim(),
            });
        }
        let act = AdAction::new(&a);
        let r = act.centralizer_dim();
        if ga_basis.len() != r || ga_basis.iter().any(|e| e.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: ga_basis.len(),
            });
        }
        for (i, ei) in ga_basis.iter().enumerate() {
            if a.bracket(ei).norm() > COMMUTE_TOL * a.norm().max(1.0) {
                return Err(Error::Constraint {
                    what: "basis element outside the centralizer of a",
                    defect: a.bracket(ei).norm(),
                });
            }
            for (j, ej) in ga_basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                let defect = (ei.killing(ej) - expect).abs();
                if defect > 1e-12 {
                    return Err(Error::Constraint {
                        what: "centralizer basis not orthonormal",
                        defect,
                    });
                }
            }
        }
        if c.nrows() != r || c.ncols() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c.nrows(),
            });
        }
        let asym = (&c - c.transpose()).amax();
        if asym > 1e-12 * c.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let scale = (a.norm() * b.norm()).max(1.0);
        let ab = a.bracket(&b).norm();
        if ab > COMMUTE_TOL * scale {
            return Err(Error::Constraint {
                what: "[a, b] = 0",
                defect: ab,
            });
        }
        for e in &ga_basis {
            let d = b.bracket(e).norm();
            if d > COMMUTE_TOL * b.norm().max(1.0) {
                return Err(Error::Constraint {
                    what: "b central in the centralizer of a",
                    defect: d,
                });
            }
        }

        let d_basis = act.complement_basis();
        let dim = algebra_dim(n);
        let k = coord_matrix(&ga_basis, dim);
        let d = coord_matrix(&d_basis, dim);
        let mut md = DMatrix::zeros(d_basis.len(), d_basis.len());
        for (j, dj) in d_basis.iter().enumerate() {
            let img = act.inverse(&b.bracket(dj))?;
            for (i, di) in d_basis.iter().enumerate() {
                md[(i, j)] = di.killing(&img);
            }
        }
        let raw = &d * &md * d.transpose() + &k * &c * k.transpose();
        let matrix = (&raw + raw.transpose()) * 0.5;
        let lam = matrix.clone().symmetric_eigen().eigenvalues.min();
        if !(lam > 0.0) {
            return Err(Error::NotPositiveDefinite(lam));
        }
        Ok(Self {
            a,
            b,
            c,
            ga_basis,
            d_basis,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &SkewMatrix {
        &self.a
    }

    pub fn b(&self) -> &SkewMatrix {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn centralizer_basis(&self) -> &[SkewMatrix] {
        &self.ga_basis
    }

    pub fn complement_basis(&self) -> &[SkewMatrix] {
        &self.d_basis
    }

    /// Wedge-basis matrix of the operator.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn project_centralizer(&self, xi: &SkewMatrix) -> SkewMatrix {
        let mut out = SkewMatrix::zeros(self.dim());
        for e in &self.ga_basis {
            out += &e.scale(e.killing(xi));
        }
        out
    }

    pub fn apply(&self, xi: &SkewMatrix) -> Result<SkewMatrix> {
        if xi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: xi.dim(),
            });
        }
        SkewMatrix::from_coord_vector(self.dim(), &(&self.matrix * xi.coords()))
    }

    pub fn to_operator(&self) -> Result<InertiaOperator> {
        InertiaOperator::generic(self.dim(), self.matrix.clone())
    }

    /// `A_δ = A + K B_δ Dᵀ + D B_δᵀ Kᵀ + K C_δ Kᵀ`, the operator of
    /// `h_δ = h + ⟨B_δ pr_𝔡 ξ, ξ⟩ + ½⟨C_δ pr_{𝔤_a} ξ, ξ⟩`.
    pub fn perturbed(&self, delta: &PerturbationDelta) -> Result<InertiaOperator> {
        let (r, d) = (self.ga_basis.len(), self.d_basis.len());
        if delta.b_delta.nrows() != r || delta.b_delta.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: r * d,
                found: delta.b_delta.nrows() * delta.b_delta.ncols(),
            });
        }
        if delta.c_delta.nrows() != r || delta.c_delta.ncols() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: delta.c_delta.nrows(),
            });
        }
        let dim = algebra_dim(self.dim());
        let k = coord_matrix(&self.ga_basis, dim);
        let dm = coord_matrix(&self.d_basis, dim);
        let kb = &k * &delta.b_delta * dm.transpose();
        let m = &self.matrix + &kb + kb.transpose() + &k * &delta.c_delta * k.transpose();
        InertiaOperator::generic(self.dim(), (&m + m.transpose()) * 0.5)
    }
}

/// `B_δ : 𝔡 → 𝔤_a` and symmetric `C_δ` on `𝔤_a`, in the bases of the
/// unperturbed [`SectionalOperator`].
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationDelta {
    pub b_delta: DMatrix<f64>,
    pub c_delta: DMatrix<f64>,
}

impl PerturbationDelta {
    pub fn zero(op: &SectionalOperator) -> Self {
        let (r, d) = (op.centralizer_basis().len(), op.complement_basis().len());
        Self {
            b_delta: DMatrix::zeros(r, d),
            c_delta: DMatrix::zeros(r, r),
        }
    }
}

pub fn sectional_apply(op: &SectionalOperator, xi: &SkewMatrix) -> Result<SkewMatrix> {
    op.apply(xi)
}

/// `[ξ, Cξ] = 0` on `𝔤_a`, checked in polarized form on basis pairs.
pub fn check_c_condition(op: &SectionalOperator) -> bool {
    let basis = op.centralizer_basis();
    let c = op.c();
    let image = |j: usize| {
        let mut out = SkewMatrix::zeros(op.dim());
        for (k, e) in basis.iter().enumerate() {
            out += &e.scale(c[(k, j)]);
        }
        out
    };
    let images: Vec<SkewMatrix> = (0..basis.len()).map(image).collect();
    let scale = c.amax().max(1.0);
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let s = &basis[i].bracket(&images[j]) + &basis[j].bracket(&images[i]);
            if s.norm() > C_CONDITION_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// `ξ̇ = [ξ, Aξ]`, `ġ = g·Aξ`.
pub fn vf_geodesic(s: &FullState, op: &InertiaOperator) -> Result<FullRate> {
    if op.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: s.dim(),
        });
    }
    let omega = op.apply(&s.m);
    Ok(FullRate {
        m_dot: s.m.bracket(&omega),
        omega,
    })
}

/// Geodesic flow of a left-invariant metric; layout of [`FullState::to_phase`].
#[derive(Clone, Debug)]
pub struct GeodesicFlow {
    pub op: InertiaOperator,
}

impl Flow for GeodesicFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = FullState::from_phase(self.op.dim(), state)?;
        let d = vf_geodesic(&s, &self.op)?;
        Ok(PhaseRate {
            body_velocity: Some(d.omega),
            flat: d.m_dot.coords(),
        })
    }
}

/// `½⟨Aξ, ξ⟩`.
pub fn geodesic_energy(s: &FullState, op: &InertiaOperator) -> f64 {
    0.5 * op.quadratic_form(&s.m)
}

/// Coordinates of `pr_{𝔤_a} ξ` in the operator's centralizer basis.
pub fn momentum_map(op: &SectionalOperator, xi: &SkewMatrix) -> DVector<f64> {
    DVector::from_iterator(
        op.centralizer_basis().len(),
        op.centralizer_basis().iter().map(|e| e.killing(xi)),
    )
}
