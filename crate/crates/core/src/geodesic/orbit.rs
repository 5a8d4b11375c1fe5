use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::{adjoint_unchecked, algebra_dim, AdAction, Rotation, SkewMatrix};

/// Tolerance for orbit membership and the `p ⟂ 𝔤_x` constraint in
/// [`OrbitPoint::validate`].
pub const ORBIT_TOL: f64 = 1e-8;

/// A point `(x, p)` of `T*O(a) = {x = Ad_g a, p ∈ 𝔤_x^⊥}`. Also used as its
/// own tangent.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPoint {
    pub x: SkewMatrix,
    pub p: SkewMatrix,
}

/// Orbit invariant of a skew matrix: its singular values in ascending order
/// (the moduli of its eigenvalues, each pair listed twice).
pub fn spectrum(x: &SkewMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = x.as_matrix().singular_values().iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

impl OrbitPoint {
    pub fn new(x: SkewMatrix, p: SkewMatrix) -> Result<Self> {
        if x.dim() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                found: p.dim(),
            });
        }
        Ok(Self { x, p })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// `x = Ad_g a` and `p = ad_x⁻¹(Ad_g ξ)`, so that `[x, p] = Ad_g ξ`.
    /// Requires `ξ ⟂ 𝔤_a` (the zero momentum level).
    pub fn from_group(g: &Rotation, xi: &SkewMatrix, a: &SkewMatrix) -> Result<Self> {
        let n = a.dim();
        if g.dim() != n || xi.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if g.dim() != n { g.dim() } else { xi.dim() },
            });
        }
        let x = adjoint_unchecked(g.as_matrix(), a);
        let p = AdAction::new(&x).inverse(&adjoint_unchecked(g.as_matrix(), xi))?;
        Ok(Self { x, p })
    }

    /// Checks orbit membership against `a` and `⟨p, ξ⟩ = 0` on `𝔤_x`.
    pub fn validate(&self, a: &SkewMatrix) -> Result<()> {
        let (sx, sa) = (spectrum(&self.x), spectrum(a));
        if sx.len() != sa.len() {
            return Err(Error::DimensionMismatch {
                expected: sa.len(),
                found: sx.len(),
            });
        }
        let dev = sx
            .iter()
            .zip(&sa)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        if dev > ORBIT_TOL {
            return Err(Error::Constraint {
                what: "x on the orbit of a",
                defect: dev,
            });
        }
        let c = constraint_defect(self);
        if c > ORBIT_TOL {
            return Err(Error::Constraint {
                what: "p orthogonal to the centralizer of x",
                defect: c,
            });
        }
        Ok(())
    }

    /// Flat layout: wedge coordinates of `x`, then of `p`.
    pub fn to_phase(&self) -> PhaseState {
        let (cx, cp) = (self.x.coords(), self.p.coords());
        PhaseState::flat(DVector::from_iterator(
            cx.len() + cp.len(),
            cx.iter().chain(cp.iter()).copied(),
        ))
    }

    pub fn from_phase(n: usize, s: &PhaseState) -> Result<Self> {
        let dim = algebra_dim(n);
        if s.flat.len() != 2 * dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * dim,
                found: s.flat.len(),
            });
        }
        Ok(Self {
            x: SkewMatrix::from_coords(n, &s.flat.as_slice()[..dim])?,
            p: SkewMatrix::from_coords(n, &s.flat.as_slice()[dim..])?,
        })
    }
}

/// `max_i |⟨p, ξ_i⟩|` over an orthonormal basis of `𝔤_x`.
pub fn constraint_defect(pt: &OrbitPoint) -> f64 {
    AdAction::new(&pt.x)
        .centralizer_basis()
        .iter()
        .map(|xi| xi.killing(&pt.p).abs())
        .fold(0.0, f64::max)
}

/// Transport of `b` along the orbit, `b_x = Ad_g b`, without carrying `g`.
///
/// `b` central in `𝔤_a` is an odd polynomial in `a`; the same polynomial of
/// `x = Ad_g a` gives `Ad_g b`.
#[derive(Clone, Debug, PartialEq)]
pub struct BTransport {
    /// `b = Σ_k c_k a^{2k+1}`.
    coeffs: Vec<f64>,
}

impl BTransport {
    /// `b = c·a`.
    pub fn multiple(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Least-squares fit of `b` by odd powers of `a`, one per distinct nonzero
    /// eigenvalue modulus of `a`. Fails if the residual exceeds `1e-9·max(1, ‖b‖)`.
    pub fn fit(a: &SkewMatrix, b: &SkewMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let s = spectrum(a);
        let smax = s.last().copied().unwrap_or(0.0);
        let mut distinct: Vec<f64> = Vec::new();
        for v in s {
            if v > 1e-9 * smax.max(1e-300) && distinct.iter().all(|d| (d - v).abs() > 1e-8 * smax) {
                distinct.push(v);
            }
        }
        let k = distinct.len().max(1);
        let am = a.as_matrix();
        let a2 = am * am;
        let dim = algebra_dim(a.dim());
        let mut design = DMatrix::zeros(dim, k);
        let mut pow = am.clone();
        for col in 0..k {
            design.set_column(col, &SkewMatrix::antisymmetrize(pow.clone()).coords());
            pow = &a2 * pow;
        }
        let target = b.coords();
        let sol = design
            .clone()
            .svd(true, true)
            .solve(&target, 1e-14)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let resid = (&design * &sol - &target).norm() / std::f64::consts::SQRT_2;
        if resid > 1e-9 * b.norm().max(1.0) {
            return Err(Error::FitResidual(resid));
        }
        Ok(Self {
            coeffs: sol.iter().copied().collect(),
        })
    }

    pub fn apply(&self, x: &SkewMatrix) -> SkewMatrix {
        let xm = x.as_matrix();
        let x2 = xm * xm;
        let mut pow = xm.clone();
        let mut out = DMatrix::zeros(x.dim(), x.dim());
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                pow = &x2 * pow;
            }
            out += &pow * *c;
        }
        SkewMatrix::antisymmetrize(out)
    }
}

/// `H = ½⟨[b_x, p], [x, p]⟩`.
pub fn reduced_hamiltonian(pt: &OrbitPoint, bt: &BTransport) -> f64 {
    let bx = bt.apply(&pt.x);
    0.5 * bx.bracket(&pt.p).killing(&pt.x.bracket(&pt.p))
}

/// `H + ⟨x, c⟩` for the linear potential `V(x) = ⟨x, c⟩`.
pub fn orbit_energy(pt: &OrbitPoint, bt: &BTransport, potential: Option<&SkewMatrix>) -> f64 {
    reduced_hamiltonian(pt, bt) + potential.map_or(0.0, |c| pt.x.killing(c))
}

/// ```text
/// ẋ = [[b_x, p], x]
/// ṗ = −ad_x⁻¹[p, [x, [b_x, p]]] − ∂V/∂x + Σ λ_i ξ_i(x)
/// ```
/// For `V(x) = ⟨x, c⟩`, `∂V/∂x = c`. The multipliers replace the `𝔤_x`
/// component of the raw `ṗ` by the value the constraint `p ⟂ 𝔤_x` forces
/// along `ẋ = [u, x]`, namely `pr_{𝔤_x}[u, p]` with `u = [b_x, p]`; without a
/// potential this reproduces the free equations.
pub fn vf_orbit(pt: &OrbitPoint, bt: &BTransport, potential: Option<&SkewMatrix>) -> Result<OrbitPoint> {
    let n = pt.dim();
    if let Some(c) = potential {
        if c.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.dim(),
            });
        }
    }
    let act = AdAction::new(&pt.x);
    let u = bt.apply(&pt.x).bracket(&pt.p);
    let x_dot = u.bracket(&pt.x);
    let free = -act.inverse(&pt.p.bracket(&pt.x.bracket(&u)))?;
    let raw = match potential {
        Some(c) => &free - c,
        None => free,
    };
    let target = act.project_centralizer(&u.bracket(&pt.p));
    let mut lambda = Vec::with_capacity(act.centralizer_dim());
    let residual = &target - &raw;
    for xi in act.centralizer_basis() {
        lambda.push((xi.killing(&residual), xi));
    }
    let mut p_dot = raw;
    for (l, xi) in lambda {
        p_dot += &xi.scale(l);
    }
    Ok(OrbitPoint { x: x_dot, p: p_dot })
}

/// Reduced flow on `T*O(a)`; layout of [`OrbitPoint::to_phase`].
#[derive(Clone, Debug)]
pub struct OrbitFlow {
    pub n: usize,
    pub transport: BTransport,
    pub potential: Option<SkewMatrix>,
}

impl Flow for OrbitFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let pt = OrbitPoint::from_phase(self.n, state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: vf_orbit(&pt, &self.transport, self.potential.as_ref())?
                .to_phase()
                .flat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::adjoint;
    use crate::sampling;

    fn a5() -> SkewMatrix {
        &SkewMatrix::basis(5, 0, 1).scale(1.4) + &SkewMatrix::basis(5, 2, 3).scale(0.5)
    }

    fn random_point(seed: u64, a: &SkewMatrix) -> (Rotation, OrbitPoint) {
        let mut r = sampling::rng(seed);
        let g = sampling::rotation(&mut r, a.dim());
        let mut xi = sampling::skew(&mut r, a.dim(), 1.0);
        xi = AdAction::new(a).project_complement(&xi);
        let pt = OrbitPoint::from_group(&g, &xi, a).unwrap();
        (g, pt)
    }

    #[test]
    fn projected_points_are_valid() {
        let a = a5();
        for seed in 0..5 {
            let (g, pt) = random_point(seed, &a);
            pt.validate(&a).unwrap();
            assert!((&pt.x - &adjoint(&g, &a).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn transport_fit_recovers_polynomial() {
        let a = a5();
        let am = a.as_matrix();
        let b = SkewMatrix::antisymmetrize(am * am * am * 0.7 + am * 1.9);
        let bt = BTransport::fit(&a, &b).unwrap();
        assert!((&bt.apply(&a) - &b).norm() < 1e-12);
        let (g, pt) = random_point(3, &a);
        let bx = adjoint(&g, &b).unwrap();
        assert!((&bt.apply(&pt.x) - &bx).norm() < 1e-12);
    }

    #[test]
    fn transport_fit_rejects_non_central_b() {
        assert!(matches!(
            BTransport::fit(&a5(), &SkewMatrix::basis(5, 0, 4)),
            Err(Error::FitResidual(_))
        ));
    }

    #[test]
    fn zero_momentum_is_stationary() {
        let (_, mut pt) = random_point(4, &a5());
        pt.p = SkewMatrix::zeros(5);
        let d = vf_orbit(&pt, &BTransport::multiple(1.0), None).unwrap();
        assert_eq!(d.x.norm(), 0.0);
        assert_eq!(d.p.norm(), 0.0);
        assert_eq!(reduced_hamiltonian(&pt, &BTransport::multiple(2.0)), 0.0);
    }

    #[test]
    fn hamiltonian_nonnegative_for_b_equal_a() {
        let a = a5();
        for seed in 0..5 {
            let (_, pt) = random_point(seed, &a);
            let h = reduced_hamiltonian(&pt, &BTransport::multiple(1.0));
            let xp = pt.x.bracket(&pt.p);
            assert!((h - 0.5 * xp.killing(&xp)).abs() < 1e-14 && h >= 0.0);
        }
    }

    #[test]
    fn field_is_tangent_to_the_realization() {
        let a = a5();
        let c = SkewMatrix::basis(5, 1, 4).scale(0.8);
        let am = a.as_matrix();
        let bt = BTransport::fit(&a, &SkewMatrix::antisymmetrize(am * am * am * 0.3 + am * 2.0)).unwrap();
        for seed in 0..5 {
            let (_, pt) = random_point(seed + 10, &a);
            let d = vf_orbit(&pt, &bt, Some(&c)).unwrap();
            // spectrum is stationary: d/dt tr(x²ᵏ) = 0
            let x = pt.x.as_matrix();
            let dx = d.x.as_matrix();
            assert!((x * dx).trace().abs() < 1e-12);
            assert!((x * x * x * dx).trace().abs() < 1e-12);
            // d/dt ⟨p, ξ(x)⟩ = 0 via finite differences of the projection
            let eps = 1e-6;
            let fwd = OrbitPoint {
                x: &pt.x + &d.x.scale(eps),
                p: &pt.p + &d.p.scale(eps),
            };
            let bwd = OrbitPoint {
                x: &pt.x - &d.x.scale(eps),
                p: &pt.p - &d.p.scale(eps),
            };
            let proj = |q: &OrbitPoint| AdAction::new(&q.x).project_centralizer(&q.p);
            assert!((&proj(&fwd) - &proj(&bwd)).norm() / (2.0 * eps) < 1e-7);
            // energy is stationary
            let e = |q: &OrbitPoint| orbit_energy(q, &bt, Some(&c));
            assert!(((e(&fwd) - e(&bwd)) / (2.0 * eps)).abs() < 1e-7);
        }
    }
}
