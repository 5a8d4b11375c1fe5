//! The Hess–Appel'rot system on `so(4) × so(4)` and its reduction to the
//! oriented Grassmannian `Gr⁺(4, 2) ≅ O(a)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::orbit::{BTransport, OrbitPoint};
use super::sectional::{PerturbationDelta, SectionalOperator};
use crate::dynamics::{FullRate, FullState, InertiaOperator};
use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::{coadjoint_unchecked, AdAction, SkewMatrix};

/// `a = a₁₂ f₁∧f₂ + a₃₄ f₃∧f₄` and the mass tensor
/// ```text
/// J = [[J₁, 0, J₁₃, 0], [0, J₁, 0, J₂₄], [J₁₃, 0, J₃, 0], [0, J₂₄, 0, J₃]]
/// ```
/// with `A_δ(m) = Jm + mJ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DG4Params {
    pub a12: f64,
    pub a34: f64,
    pub j1: f64,
    pub j3: f64,
    pub j13: f64,
    pub j24: f64,
}

impl DG4Params {
    pub fn a(&self) -> SkewMatrix {
        &SkewMatrix::basis(4, 0, 1).scale(self.a12) + &SkewMatrix::basis(4, 2, 3).scale(self.a34)
    }

    /// `J₁ + J₃`, the factor in `b = (J₁ + J₃) a`.
    pub fn b_factor(&self) -> f64 {
        self.j1 + self.j3
    }

    pub fn j_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                self.j1, 0.0, self.j13, 0.0, //
                0.0, self.j1, 0.0, self.j24, //
                self.j13, 0.0, self.j3, 0.0, //
                0.0, self.j24, 0.0, self.j3,
            ],
        )
    }

    /// `A_δ`; fails unless `m ↦ Jm + mJ` is positive definite.
    pub fn operator(&self) -> Result<InertiaOperator> {
        let j = self.j_matrix();
        let basis = SkewMatrix::full_basis(4);
        let mut matrix = DMatrix::zeros(basis.len(), basis.len());
        for (k, e) in basis.iter().enumerate() {
            let img = &j * e.as_matrix() + e.as_matrix() * &j;
            matrix.set_column(k, &SkewMatrix::antisymmetrize(img).coords());
        }
        InertiaOperator::generic(4, matrix)
    }

    /// The unperturbed operator `A_{a,b,C}` with `b = (J₁+J₃)a` and
    /// `C = diag(2J₁, 2J₃)` on `span{f₁∧f₂, f₃∧f₄}`. Requires `a` regular.
    pub fn sectional(&self) -> Result<SectionalOperator> {
        let basis = vec![SkewMatrix::basis(4, 0, 1), SkewMatrix::basis(4, 2, 3)];
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0 * self.j1, 2.0 * self.j3]));
        let a = self.a();
        SectionalOperator::with_centralizer_basis(a.clone(), a.scale(self.b_factor()), basis, c)
    }

    /// The perturbation taking [`Self::sectional`] to [`Self::operator`].
    pub fn delta(&self, op: &SectionalOperator) -> Result<PerturbationDelta> {
        let target = self.operator()?;
        let ga = op.centralizer_basis();
        let d = op.complement_basis();
        let img = |e: &SkewMatrix| target.apply(e);
        let b_delta = DMatrix::from_fn(ga.len(), d.len(), |i, j| ga[i].killing(&img(&d[j])));
        let c_delta = DMatrix::from_fn(ga.len(), ga.len(), |i, j| {
            ga[i].killing(&img(&ga[j])) - op.c()[(i, j)]
        });
        Ok(PerturbationDelta { b_delta, c_delta })
    }

    pub fn transport(&self) -> BTransport {
        BTransport::multiple(self.b_factor())
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.a12, self.a34, self.j1, self.j3, self.j13, self.j24];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("DG4 parameters must be finite".into()));
        }
        self.operator().map(|_| ())
    }
}

/// `½⟨A_δ m, m⟩`.
pub fn dg4_kinetic_energy(m: &SkewMatrix, params: &DG4Params) -> Result<f64> {
    Ok(0.5 * params.operator()?.quadratic_form(m))
}

/// Closed system state `(m, γ)` on `(so(4) × so(4))*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dg4ClosedState {
    pub m: SkewMatrix,
    pub gamma: SkewMatrix,
}

impl Dg4ClosedState {
    /// `γ = a₁₂ e₁∧e₂ + a₃₄ e₃∧e₄ = gᵀ a g`.
    pub fn from_full(s: &FullState, params: &DG4Params) -> Self {
        Self {
            m: s.m.clone(),
            gamma: coadjoint_unchecked(s.g.as_matrix(), &params.a()),
        }
    }

    pub fn to_phase(&self) -> PhaseState {
        let (cm, cg) = (self.m.coords(), self.gamma.coords());
        PhaseState::flat(DVector::from_iterator(12, cm.iter().chain(cg.iter()).copied()))
    }

    pub fn from_phase(s: &PhaseState) -> Result<Self> {
        if s.flat.len() != 12 {
            return Err(Error::DimensionMismatch {
                expected: 12,
                found: s.flat.len(),
            });
        }
        Ok(Self {
            m: SkewMatrix::from_coords(4, &s.flat.as_slice()[..6])?,
            gamma: SkewMatrix::from_coords(4, &s.flat.as_slice()[6..])?,
        })
    }
}

fn check4(n: usize) -> Result<()> {
    if n != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: n,
        });
    }
    Ok(())
}

/// Left form: `ṁ = [m, A_δ m] + [γ, a]`, `ġ = g·A_δ m`, `γ = gᵀ a g`.
pub fn vf_dg4_full(s: &FullState, op: &InertiaOperator, params: &DG4Params) -> Result<FullRate> {
    check4(s.dim())?;
    let omega = op.apply(&s.m);
    let gamma = coadjoint_unchecked(s.g.as_matrix(), &params.a());
    Ok(FullRate {
        m_dot: &s.m.bracket(&omega) + &gamma.bracket(&params.a()),
        omega,
    })
}

/// Closed form: `ṁ = [m, ω] + [γ, a]`, `γ̇ = [γ, ω]`, `ω = A_δ m`.
pub fn vf_dg4_closed(s: &Dg4ClosedState, op: &InertiaOperator, params: &DG4Params) -> Result<Dg4ClosedState> {
    check4(s.m.dim())?;
    check4(s.gamma.dim())?;
    let omega = op.apply(&s.m);
    Ok(Dg4ClosedState {
        m: &s.m.bracket(&omega) + &s.gamma.bracket(&params.a()),
        gamma: s.gamma.bracket(&omega),
    })
}

/// `½⟨A_δ m, m⟩ + ⟨γ, a⟩`.
pub fn dg4_energy(s: &Dg4ClosedState, op: &InertiaOperator, params: &DG4Params) -> f64 {
    0.5 * op.quadratic_form(&s.m) + s.gamma.killing(&params.a())
}

/// `ℱ = γ₃₄a₁₂ + γ₁₂a₃₄ + (J₁+J₃)(m₁₂m₃₄ + m₂₃m₁₄ − m₁₃m₂₄)`.
pub fn dg4_integral(s: &Dg4ClosedState, params: &DG4Params) -> f64 {
    let m = |i: usize, j: usize| s.m.entry(i - 1, j - 1);
    let g = |i: usize, j: usize| s.gamma.entry(i - 1, j - 1);
    g(3, 4) * params.a12
        + g(1, 2) * params.a34
        + params.b_factor() * (m(1, 2) * m(3, 4) + m(2, 3) * m(1, 4) - m(1, 3) * m(2, 4))
}

/// Hodge star on so(4): `f₁∧f₂ ↔ f₃∧f₄`, `f₁∧f₃ ↔ −f₂∧f₄`, `f₁∧f₄ ↔ f₂∧f₃`.
pub fn hodge_star(x: &SkewMatrix) -> Result<SkewMatrix> {
    check4(x.dim())?;
    let c = x.coords();
    // coordinates (12, 13, 14, 23, 24, 34)
    SkewMatrix::from_coords(4, &[c[5], -c[4], c[3], c[2], -c[1], c[0]])
}

/// Casimirs of the semidirect product: `⟨γ,γ⟩, ⟨γ,⋆γ⟩, ⟨m,γ⟩, ⟨m,⋆γ⟩`.
pub fn dg4_casimirs(s: &Dg4ClosedState) -> Result<[f64; 4]> {
    let star = hodge_star(&s.gamma)?;
    Ok([
        s.gamma.killing(&s.gamma),
        s.gamma.killing(&star),
        s.m.killing(&s.gamma),
        s.m.killing(&star),
    ])
}

/// `(p1)`/`(p2)`: `ẋ = (J₁+J₃)[[x,p],x]`, `ṗ = (J₁+J₃)[[x,p],p] − a + pr_{𝔤_x} a`.
pub fn vf_grassmann(pt: &OrbitPoint, params: &DG4Params) -> Result<OrbitPoint> {
    check4(pt.dim())?;
    let k = params.b_factor();
    let a = params.a();
    let xp = pt.x.bracket(&pt.p);
    let act = AdAction::new(&pt.x);
    Ok(OrbitPoint {
        x: xp.bracket(&pt.x).scale(k),
        p: &(&xp.bracket(&pt.p).scale(k) - &a) + &act.project_centralizer(&a),
    })
}

/// `H = ((J₁+J₃)/2)⟨[x,p],[x,p]⟩ + ⟨x, a⟩`.
pub fn grassmann_hamiltonian(pt: &OrbitPoint, params: &DG4Params) -> f64 {
    let xp = pt.x.bracket(&pt.p);
    0.5 * params.b_factor() * xp.killing(&xp) + pt.x.killing(&params.a())
}

/// `(x, p)` of a point on `m₁₂ = m₃₄ = 0`: `x = Ad_g a`, `[x, p] = Ad_g m`.
pub fn grassmann_from_full(s: &FullState, params: &DG4Params) -> Result<OrbitPoint> {
    OrbitPoint::from_group(&s.g, &s.m, &params.a())
}

/// `Ψ(x) = F₁∧F₂`, recovered from `x = a₁₂F₁∧F₂ + a₃₄F₃∧F₄` as
/// `(a₃₄² x + x³) / (a₁₂(a₃₄² − a₁₂²))`; needs `a₁₂ ≠ 0`, `a₁₂² ≠ a₃₄²`.
pub fn psi(x: &SkewMatrix, params: &DG4Params) -> Result<SkewMatrix> {
    check4(x.dim())?;
    let denom = params.a12 * (params.a34 * params.a34 - params.a12 * params.a12);
    if denom.abs() < 1e-12 {
        return Err(Error::InvalidParameter(
            "psi needs a12 != 0 and a12^2 != a34^2".into(),
        ));
    }
    let xm = x.as_matrix();
    let num = xm * (params.a34 * params.a34) + xm * xm * xm;
    Ok(SkewMatrix::antisymmetrize(num / denom))
}

/// Left form on `SO(4) × so(4)`; layout of [`FullState::to_phase`].
#[derive(Clone, Debug)]
pub struct Dg4FullFlow {
    pub params: DG4Params,
    pub op: InertiaOperator,
}

impl Dg4FullFlow {
    pub fn new(params: DG4Params) -> Result<Self> {
        Ok(Self {
            op: params.operator()?,
            params,
        })
    }
}

impl Flow for Dg4FullFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = FullState::from_phase(4, state)?;
        let d = vf_dg4_full(&s, &self.op, &self.params)?;
        Ok(PhaseRate {
            body_velocity: Some(d.omega),
            flat: d.m_dot.coords(),
        })
    }
}

/// Closed form; layout of [`Dg4ClosedState::to_phase`].
#[derive(Clone, Debug)]
pub struct Dg4ClosedFlow {
    pub params: DG4Params,
    pub op: InertiaOperator,
}

impl Dg4ClosedFlow {
    pub fn new(params: DG4Params) -> Result<Self> {
        Ok(Self {
            op: params.operator()?,
            params,
        })
    }
}

impl Flow for Dg4ClosedFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = Dg4ClosedState::from_phase(state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: vf_dg4_closed(&s, &self.op, &self.params)?.to_phase().flat,
        })
    }
}

/// Reduced system on `T*Gr⁺(4, 2)`; layout of [`OrbitPoint::to_phase`].
#[derive(Clone, Debug)]
pub struct GrassmannFlow {
    pub params: DG4Params,
}

impl Flow for GrassmannFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let pt = OrbitPoint::from_phase(4, state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: vf_grassmann(&pt, &self.params)?.to_phase().flat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::orbit::vf_orbit;
    use crate::sampling;

    fn params() -> DG4Params {
        DG4Params {
            a12: 1.2,
            a34: 0.5,
            j1: 1.0,
            j3: 1.6,
            j13: 0.2,
            j24: -0.15,
        }
    }

    fn invariant_state(seed: u64) -> FullState {
        let mut r = sampling::rng(seed);
        let mut m = sampling::skew(&mut r, 4, 1.0);
        let mut c = m.coords();
        c[0] = 0.0;
        c[5] = 0.0;
        m = SkewMatrix::from_coord_vector(4, &c).unwrap();
        FullState::new(sampling::rotation(&mut r, 4), m).unwrap()
    }

    #[test]
    fn energy_matches_coordinate_expansion() {
        let p = params();
        let mut r = sampling::rng(51);
        for _ in 0..10 {
            let m = sampling::skew(&mut r, 4, 1.0);
            let e = |i: usize, j: usize| m.entry(i - 1, j - 1);
            let h0 = p.j1 * e(1, 2).powi(2)
                + p.j3 * e(3, 4).powi(2)
                + 0.5 * (p.j1 + p.j3) * (e(1, 3).powi(2) + e(1, 4).powi(2) + e(2, 3).powi(2) + e(2, 4).powi(2));
            // δ with the mass-tensor entry J₂₄ in the role of the coefficient of m₁₂m₁₄
            let delta = e(1, 2) * (p.j24 * e(1, 4) - p.j13 * e(2, 3)) + e(3, 4) * (p.j13 * e(1, 4) - p.j24 * e(2, 3));
            assert!((dg4_kinetic_energy(&m, &p).unwrap() - h0 - delta).abs() < 1e-13);
        }
    }

    #[test]
    fn sectional_plus_delta_is_the_mass_tensor_operator() {
        let p = params();
        let sec = p.sectional().unwrap();
        let pert = sec.perturbed(&p.delta(&sec).unwrap()).unwrap();
        assert!((pert.matrix() - p.operator().unwrap().matrix()).amax() < 1e-13);
        // unperturbed kinetic energy
        let free = DG4Params { j13: 0.0, j24: 0.0, ..p };
        assert!((sec.matrix() - free.operator().unwrap().matrix()).amax() < 1e-13);
    }

    #[test]
    fn hodge_star_commutes_with_bracket() {
        let mut r = sampling::rng(52);
        let x = sampling::skew(&mut r, 4, 1.0);
        let y = sampling::skew(&mut r, 4, 1.0);
        let lhs = hodge_star(&x.bracket(&y)).unwrap();
        let rhs = hodge_star(&x).unwrap().bracket(&y);
        assert!((&lhs - &rhs).norm() < 1e-14);
    }

    #[test]
    fn closed_field_preserves_integrals_pointwise() {
        let p = params();
        let op = p.operator().unwrap();
        let mut r = sampling::rng(53);
        let eps = 1e-6;
        for _ in 0..5 {
            let s = Dg4ClosedState {
                m: sampling::skew(&mut r, 4, 1.0),
                gamma: sampling::skew(&mut r, 4, 1.0),
            };
            let d = vf_dg4_closed(&s, &op, &p).unwrap();
            let step = |h: f64| Dg4ClosedState {
                m: &s.m + &d.m.scale(h),
                gamma: &s.gamma + &d.gamma.scale(h),
            };
            let (f, b) = (step(eps), step(-eps));
            let rate = |fun: &dyn Fn(&Dg4ClosedState) -> f64| (fun(&f) - fun(&b)) / (2.0 * eps);
            assert!(rate(&|q| dg4_energy(q, &op, &p)).abs() < 1e-8);
            for k in 0..4 {
                assert!(rate(&|q| dg4_casimirs(q).unwrap()[k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn supplementary_integral_on_invariant_set() {
        let p = params();
        let op = p.operator().unwrap();
        let eps = 1e-6;
        for seed in 0..5 {
            let full = invariant_state(60 + seed);
            let s = Dg4ClosedState::from_full(&full, &p);
            let d = vf_dg4_closed(&s, &op, &p).unwrap();
            assert!(d.m.entry(0, 1).abs() < 1e-13 && d.m.entry(2, 3).abs() < 1e-13);
            let q = |h: f64| Dg4ClosedState {
                m: &s.m + &d.m.scale(h),
                gamma: &s.gamma + &d.gamma.scale(h),
            };
            let rate = (dg4_integral(&q(eps), &p) - dg4_integral(&q(-eps), &p)) / (2.0 * eps);
            assert!(rate.abs() < 1e-8);
        }
    }

    #[test]
    fn full_and_closed_forms_agree() {
        let p = params();
        let op = p.operator().unwrap();
        let full = invariant_state(70);
        let a = vf_dg4_full(&full, &op, &p).unwrap();
        let b = vf_dg4_closed(&Dg4ClosedState::from_full(&full, &p), &op, &p).unwrap();
        assert!((&a.m_dot - &b.m).norm() < 1e-14);
        // γ = gᵀ a g ⇒ γ̇ = [γ, ω]
        let gdot = full.g.as_matrix() * a.omega.as_matrix();
        let gm = full.g.as_matrix();
        let am = p.a();
        let am = am.as_matrix();
        let gamma_dot = gdot.transpose() * am * gm + gm.transpose() * am * &gdot;
        assert!((gamma_dot - b.gamma.as_matrix()).amax() < 1e-14);
    }

    #[test]
    fn grassmann_is_the_orbit_flow_with_linear_potential() {
        let p = params();
        for seed in 0..5 {
            let pt = grassmann_from_full(&invariant_state(80 + seed), &p).unwrap();
            let g = vf_grassmann(&pt, &p).unwrap();
            let o = vf_orbit(&pt, &p.transport(), Some(&p.a())).unwrap();
            assert!((&g.x - &o.x).norm() < 1e-12);
            assert!((&g.p - &o.p).norm() < 1e-12);
        }
    }

    #[test]
    fn grassmann_equilibrium() {
        let p = params();
        let pt = OrbitPoint::new(p.a(), SkewMatrix::zeros(4)).unwrap();
        let d = vf_grassmann(&pt, &p).unwrap();
        assert!(d.x.norm() < 1e-15 && d.p.norm() < 1e-14);
    }

    #[test]
    fn psi_recovers_the_body_plane() {
        let p = params();
        let full = invariant_state(90);
        let x = coadjoint_unchecked(&full.g.as_matrix().transpose(), &p.a());
        let f = full.g.as_matrix();
        let plane = crate::liealg::wedge(&f.column(0).into_owned(), &f.column(1).into_owned()).unwrap();
        assert!((&psi(&x, &p).unwrap() - &plane).norm() < 1e-12);
    }
}
