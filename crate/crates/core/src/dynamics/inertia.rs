use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{algebra_dim, SkewMatrix, SymmetricPairSplit};

/// Absolute tolerance on `‖pr_𝔡 A pr_𝔡 − a·Id‖_max` in [`check_ha_condition`].
pub const HA_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InertiaMode {
    GenericSpd,
    PhysicalJ,
    HessAppelrotBlock,
}

/// The operator `A = 𝕀⁻¹ : so(n) → so(n)`, `ω = A m`, stored as a symmetric
/// positive-definite matrix in the lexicographic wedge basis.
#[derive(Clone, Debug, PartialEq)]
pub struct InertiaOperator {
    n: usize,
    mode: InertiaMode,
    matrix: DMatrix<f64>,
    j: Option<DMatrix<f64>>,
}

fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

fn check_spd(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(1.0);
    let defect = symmetry_defect(m);
    if !(defect <= SYMMETRY_TOL * scale) {
        return Err(Error::NotSymmetric(defect));
    }
    let lam = min_eigenvalue(m);
    if !(lam > 0.0) {
        return Err(Error::NotPositiveDefinite(lam));
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

impl InertiaOperator {
    pub fn identity(n: usize) -> Self {
        let dim = algebra_dim(n);
        Self {
            n,
            mode: InertiaMode::GenericSpd,
            matrix: DMatrix::identity(dim, dim),
            j: None,
        }
    }

    /// A generic operator given by its wedge-basis matrix.
    pub fn generic(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let dim = algebra_dim(n);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        check_spd(&matrix)?;
        Ok(Self {
            n,
            mode: InertiaMode::GenericSpd,
            matrix: symmetrize(matrix),
            j: None,
        })
    }

    /// Physical rigid body: `𝕀ω = Jω + ωJ` with `J` the symmetric mass tensor.
    pub fn physical(j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if j.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: j.ncols(),
            });
        }
        let defect = symmetry_defect(&j);
        if !(defect <= SYMMETRY_TOL * j.amax().max(1.0)) {
            return Err(Error::NotSymmetric(defect));
        }
        let dim = algebra_dim(n);
        let mut inertia = DMatrix::zeros(dim, dim);
        for (k, e) in SkewMatrix::full_basis(n).iter().enumerate() {
            let img = &j * e.as_matrix() + e.as_matrix() * &j;
            inertia.set_column(k, &SkewMatrix::antisymmetrize(img).coords());
        }
        check_spd(&inertia)?;
        let a = inertia
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite(0.0))?;
        Ok(Self {
            n,
            mode: InertiaMode::PhysicalJ,
            matrix: symmetrize(a),
            j: Some(j),
        })
    }

    /// Operator satisfying the Hess–Appel'rot condition by construction:
    /// `A_𝔨` on 𝔨, the cross term `B : 𝔡 → 𝔨` (a `k×d` matrix) and `a·Id` on 𝔡.
    /// Block rows and columns follow the order of
    /// [`SymmetricPairSplit::k_indices`] and [`SymmetricPairSplit::d_indices`].
    pub fn hess_appelrot(n: usize, a_k: DMatrix<f64>, b: DMatrix<f64>, a: f64) -> Result<Self> {
        let pair = SymmetricPairSplit::new(n);
        let (ki, di) = (pair.k_indices(), pair.d_indices());
        if a_k.nrows() != ki.len() || a_k.ncols() != ki.len() {
            return Err(Error::DimensionMismatch {
                expected: ki.len(),
                found: a_k.nrows(),
            });
        }
        if b.nrows() != ki.len() || b.ncols() != di.len() {
            return Err(Error::DimensionMismatch {
                expected: ki.len() * di.len(),
                found: b.nrows() * b.ncols(),
            });
        }
        let dim = algebra_dim(n);
        let mut m = DMatrix::zeros(dim, dim);
        for (r, &p) in ki.iter().enumerate() {
            for (c, &q) in ki.iter().enumerate() {
                m[(p, q)] = a_k[(r, c)];
            }
            for (c, &q) in di.iter().enumerate() {
                m[(p, q)] = b[(r, c)];
                m[(q, p)] = b[(r, c)];
            }
        }
        for &p in di {
            m[(p, p)] = a;
        }
        check_spd(&m)?;
        Ok(Self {
            n,
            mode: InertiaMode::HessAppelrotBlock,
            matrix: symmetrize(m),
            j: None,
        })
    }

    /// n = 3 operator given in vector coordinates `(m₁, m₂, m₃)`, where
    /// `m = hat(m⃗)` and the wedge coordinates are `(m₁₂, m₁₃, m₂₃) = (−m₃, m₂, −m₁)`.
    pub fn from_vector_form(a: &Matrix3<f64>) -> Result<Self> {
        let p = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        let w = p * a * p;
        Self::generic(3, DMatrix::from_fn(3, 3, |i, j| w[(i, j)]))
    }

    /// `A + Δ` where `Δ` acts on the 𝔡 block only (`(n−1)×(n−1)`, symmetric).
    /// The result is generic; used to break the Hess–Appel'rot condition.
    pub fn with_d_block_perturbation(&self, delta: &DMatrix<f64>) -> Result<Self> {
        let pair = SymmetricPairSplit::new(self.n);
        let di = pair.d_indices();
        if delta.nrows() != di.len() || delta.ncols() != di.len() {
            return Err(Error::DimensionMismatch {
                expected: di.len(),
                found: delta.nrows(),
            });
        }
        let mut m = self.matrix.clone();
        for (r, &p) in di.iter().enumerate() {
            for (c, &q) in di.iter().enumerate() {
                m[(p, q)] += delta[(r, c)];
            }
        }
        Self::generic(self.n, m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> InertiaMode {
        self.mode
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The mass tensor `J` of a physical operator.
    pub fn mass_tensor(&self) -> Option<&DMatrix<f64>> {
        self.j.as_ref()
    }

    /// `ω = A m`. Panics on dimension mismatch; see [`apply_inertia_inverse`].
    pub fn apply(&self, m: &SkewMatrix) -> SkewMatrix {
        assert_eq!(m.dim(), self.n, "inertia operator: dimension mismatch");
        let c = &self.matrix * m.coords();
        SkewMatrix::from_coord_vector(self.n, &c).expect("dimension checked")
    }

    /// `⟨A m, m⟩`.
    pub fn quadratic_form(&self, m: &SkewMatrix) -> f64 {
        let c = m.coords();
        c.dot(&(&self.matrix * &c))
    }

    /// `(A_𝔨, B, A_𝔡)` read from the matrix, with `B = pr_𝔨 A|_𝔡`.
    pub fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let pair = SymmetricPairSplit::new(self.n);
        let (ki, di) = (pair.k_indices(), pair.d_indices());
        let pick = |rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.matrix[(rows[r], cols[c])])
        };
        (pick(ki, ki), pick(ki, di), pick(di, di))
    }
}

/// `ω = A m`.
pub fn apply_inertia_inverse(op: &InertiaOperator, m: &SkewMatrix) -> Result<SkewMatrix> {
    if m.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: m.dim(),
        });
    }
    Ok(op.apply(m))
}

/// Tests whether `pr_𝔡 ∘ A ∘ pr_𝔡 = a·Id_𝔡`, estimating `a` as the mean of the
/// 𝔡-block diagonal. Returns `a` when the condition holds.
pub fn check_ha_condition(op: &InertiaOperator) -> (bool, Option<f64>) {
    let (_, _, ad) = op.blocks();
    let d = ad.nrows();
    if d == 0 {
        return (false, None);
    }
    let a = ad.trace() / d as f64;
    let dev = (ad - DMatrix::<f64>::identity(d, d) * a).amax();
    if dev <= HA_TOL {
        (true, Some(a))
    } else {
        (false, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn identity_acts_trivially() {
        let m = sampling::skew(&mut sampling::rng(1), 5, 1.0);
        let w = apply_inertia_inverse(&InertiaOperator::identity(5), &m).unwrap();
        assert_eq!(w, m);
        assert_eq!(check_ha_condition(&InertiaOperator::identity(5)), (true, Some(1.0)));
    }

    #[test]
    fn physical_diagonal_scaling() {
        let jd = [0.7, 1.1, 1.9, 2.6];
        let op = InertiaOperator::physical(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&jd)))
            .unwrap();
        let m = sampling::skew(&mut sampling::rng(2), 4, 1.0);
        let w = op.apply(&m);
        for i in 0..4 {
            for j in i + 1..4 {
                let expect = m.entry(i, j) / (jd[i] + jd[j]);
                assert!((w.entry(i, j) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn killing_symmetric() {
        let mut rng = sampling::rng(3);
        let op = InertiaOperator::generic(5, sampling::spd(&mut rng, 10, 0.3, 2.0)).unwrap();
        let x = sampling::skew(&mut rng, 5, 1.0);
        let y = sampling::skew(&mut rng, 5, 1.0);
        assert!((op.apply(&x).killing(&y) - x.killing(&op.apply(&y))).abs() < 1e-13);
    }

    #[test]
    fn block_action_without_cross_term() {
        let n = 4;
        let a_k = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.5, 2.0, 2.5]));
        let op = InertiaOperator::hess_appelrot(n, a_k.clone(), DMatrix::zeros(3, 3), 0.8).unwrap();
        let pair = SymmetricPairSplit::new(n);
        let m = sampling::skew(&mut sampling::rng(4), n, 1.0);
        let (wk, wd) = pair.split(&op.apply(&m));
        let (mk, md) = pair.split(&m);
        let kc = pair.k_coords(&mk);
        let expect_k = &a_k * nalgebra::DVector::from_vec(kc);
        assert!((nalgebra::DVector::from_vec(pair.k_coords(&wk)) - expect_k).amax() < 1e-15);
        assert!((&wd - &md.scale(0.8)).norm() < 1e-15);
        assert_eq!(op.mode(), InertiaMode::HessAppelrotBlock);
        let (holds, a) = check_ha_condition(&op);
        assert!(holds && (a.unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ha_condition_for_classical_operators() {
        let ha = Matrix3::new(2.0, 0.0, 0.3, 0.0, 2.0, -0.1, 0.3, -0.1, 3.5);
        let (holds, a) = check_ha_condition(&InertiaOperator::from_vector_form(&ha).unwrap());
        assert!(holds);
        assert!((a.unwrap() - 2.0).abs() < 1e-15);
        let diag = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(
            check_ha_condition(&InertiaOperator::from_vector_form(&diag).unwrap()),
            (false, None)
        );
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 0)] = -1.0;
        assert!(matches!(
            InertiaOperator::generic(3, m),
            Err(Error::NotPositiveDefinite(_))
        ));
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(InertiaOperator::generic(3, m), Err(Error::NotSymmetric(_))));
        assert!(InertiaOperator::generic(4, DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn d_block_perturbation_breaks_condition() {
        let op = InertiaOperator::identity(4);
        let mut delta = DMatrix::zeros(3, 3);
        delta[(0, 0)] = 0.1;
        let p = op.with_d_block_perturbation(&delta).unwrap();
        assert_eq!(check_ha_condition(&p), (false, None));
    }
}
