use nalgebra::DVector;

use super::inertia::InertiaOperator;
use super::state::{BodyParams, FullState, PendulumState};
use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::adjoint_unchecked;

/// Admissible violation of `|F|² = 1` and `(F, Ḟ) = 0` in [`vf_pendulum`].
pub const CONSTRAINT_TOL: f64 = 1e-6;

fn check_constraint(s: &PendulumState) -> Result<()> {
    let norm = (s.f.norm_squared() - 1.0).abs();
    if !(norm <= CONSTRAINT_TOL) {
        return Err(Error::Constraint {
            what: "|F|^2 = 1",
            defect: norm,
        });
    }
    let tangency = s.f.dot(&s.f_dot).abs();
    if !(tangency <= CONSTRAINT_TOL) {
        return Err(Error::Constraint {
            what: "(F, dF/dt) = 0",
            defect: tangency,
        });
    }
    Ok(())
}

/// `F̈ = −aρ𝔊𝔐 E + μF`, `μ = aρ𝔊𝔐 (E, F) − |Ḟ|²`; returns `(Ḟ, F̈)`.
pub fn vf_pendulum(
    s: &PendulumState,
    a: f64,
    params: &BodyParams,
    e: &DVector<f64>,
) -> Result<PendulumState> {
    if e.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: e.len(),
        });
    }
    check_constraint(s)?;
    Ok(pendulum_rhs(s, a, params, e))
}

fn pendulum_rhs(s: &PendulumState, a: f64, params: &BodyParams, e: &DVector<f64>) -> PendulumState {
    let k = a * params.weight();
    let mu = k * e.dot(&s.f) - s.f_dot.norm_squared();
    PendulumState {
        f: s.f_dot.clone(),
        f_dot: &s.f * mu - e * k,
    }
}

/// `½|Ḟ|² + aρ𝔊𝔐 (F, E)`.
pub fn pendulum_energy(s: &PendulumState, a: f64, params: &BodyParams, e: &DVector<f64>) -> f64 {
    0.5 * s.f_dot.norm_squared() + a * params.weight() * s.f.dot(e)
}

/// `⟨Ḟ∧F, E_i∧E_j⟩ = Ḟ_i F_j − Ḟ_j F_i` for `i < j ≤ n−1`, lexicographic.
pub fn pendulum_integrals(s: &PendulumState) -> Vec<f64> {
    let n = s.dim();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            out.push(s.f_dot[i] * s.f[j] - s.f_dot[j] * s.f[i]);
        }
    }
    out
}

/// `F = F_n = g f_n` and `Ḟ = Ω F_n`, `Ω = Ad_g A m`.
pub fn pendulum_from_full(s: &FullState, op: &InertiaOperator) -> PendulumState {
    let n = s.dim();
    let f = s.g.column(n - 1);
    let omega = adjoint_unchecked(s.g.as_matrix(), &op.apply(&s.m));
    PendulumState {
        f_dot: omega.apply(&f),
        f,
    }
}

/// Spherical pendulum; layout of [`PendulumState::to_phase`].
///
/// Runge–Kutta stage points leave the constraint by `O(h²|Ḟ|²)`, so the
/// flow evaluates the field without the check of [`vf_pendulum`].
#[derive(Clone, Debug)]
pub struct PendulumFlow {
    pub a: f64,
    pub params: BodyParams,
    /// Gravity direction `E`.
    pub e: DVector<f64>,
}

impl PendulumFlow {
    /// Gravity along `E_n`.
    pub fn vertical(n: usize, a: f64, params: BodyParams) -> Self {
        let mut e = DVector::zeros(n);
        e[n - 1] = 1.0;
        Self { a, params, e }
    }
}

impl Flow for PendulumFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = PendulumState::from_phase(self.e.len(), state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: pendulum_rhs(&s, self.a, &self.params, &self.e).to_phase().flat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    fn e(n: usize) -> DVector<f64> {
        let mut e = DVector::zeros(n);
        e[n - 1] = 1.0;
        e
    }

    #[test]
    fn equilibrium_at_gravity_direction() {
        let s = PendulumState::new(e(4), DVector::zeros(4)).unwrap();
        let d = vf_pendulum(&s, 1.3, &BodyParams::new(0.5, 2.0).unwrap(), &e(4)).unwrap();
        assert!(d.f_dot.amax() < 1e-15);
        assert_eq!(d.f.amax(), 0.0);
    }

    #[test]
    fn constraint_preserved_to_second_order() {
        let mut r = sampling::rng(31);
        for n in 3..=6 {
            let f = sampling::unit_vector(&mut r, n);
            let v = sampling::vector(&mut r, n, 1.0);
            let v = &v - &f * f.dot(&v);
            let s = PendulumState::new(f.clone(), v.clone()).unwrap();
            let d = vf_pendulum(&s, 0.8, &BodyParams::default(), &e(n)).unwrap();
            // d²/dt² |F|² = 2(|Ḟ|² + (F, F̈)) = 0
            assert!((v.norm_squared() + f.dot(&d.f_dot)).abs() < 1e-14);
            // d/dt energy = 0
            let de = v.dot(&d.f_dot) + 0.8 * v.dot(&e(n));
            assert!(de.abs() < 1e-14);
        }
    }

    #[test]
    fn violated_constraint_is_reported() {
        let s = PendulumState::new(DVector::from_vec(vec![0.0, 0.0, 1.1]), DVector::zeros(3)).unwrap();
        assert!(matches!(
            vf_pendulum(&s, 1.0, &BodyParams::default(), &e(3)),
            Err(Error::Constraint { .. })
        ));
        let s = PendulumState::new(e(3), DVector::from_vec(vec![0.0, 0.0, 0.1])).unwrap();
        assert!(vf_pendulum(&s, 1.0, &BodyParams::default(), &e(3)).is_err());
    }
}
