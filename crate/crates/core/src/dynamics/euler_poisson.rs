use std::ops::Range;

use nalgebra::DVector;

use super::inertia::InertiaOperator;
use super::state::{BodyParams, EulerPoissonState, FullState, RightState};
use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::{adjoint_unchecked, algebra_dim, coadjoint_unchecked, wedge, SkewMatrix};

fn check(op: &InertiaOperator, n: usize) -> Result<()> {
    if op.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: n,
        });
    }
    Ok(())
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// `ṁ = [m, ω] + ρ𝔊𝔐 f_n∧γ`, `γ̇ = −ωγ`, `ω = A m`.
pub fn vf_euler_poisson(
    s: &EulerPoissonState,
    op: &InertiaOperator,
    params: &BodyParams,
) -> Result<EulerPoissonState> {
    let n = s.dim();
    check(op, n)?;
    let omega = op.apply(&s.m);
    let torque = wedge(&unit(n, n - 1), &s.gamma)?.scale(params.weight());
    Ok(EulerPoissonState {
        m: &s.m.bracket(&omega) + &torque,
        gamma: -omega.apply(&s.gamma),
    })
}

/// `½⟨m, A m⟩ + ρ𝔊𝔐 γ_n`.
pub fn energy(s: &EulerPoissonState, op: &InertiaOperator, params: &BodyParams) -> f64 {
    0.5 * op.quadratic_form(&s.m) + params.weight() * s.gamma[s.dim() - 1]
}

/// Derivative of the left-trivialized system: `ġ = g·ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullRate {
    pub m_dot: SkewMatrix,
    pub omega: SkewMatrix,
}

/// `ṁ = [m, ω] + ρ𝔊𝔐 f_n∧e_n`, `ġ = g ω`, so that `ė_i = −ω e_i`.
pub fn vf_full_left(s: &FullState, op: &InertiaOperator, params: &BodyParams) -> Result<FullRate> {
    let n = s.dim();
    check(op, n)?;
    let omega = op.apply(&s.m);
    let torque = wedge(&unit(n, n - 1), &s.gamma())?.scale(params.weight());
    Ok(FullRate {
        m_dot: &s.m.bracket(&omega) + &torque,
        omega,
    })
}

/// Derivative of the right-trivialized system: `ġ = Ω g`.
#[derive(Clone, Debug, PartialEq)]
pub struct RightRate {
    pub m_dot: SkewMatrix,
    pub omega: SkewMatrix,
}

/// `Ṁ = ρ𝔊𝔐 F_n∧E_n`, `Ḟ_i = Ω F_i` with `Ω = Ad_g A Ad_{g⁻¹} M`.
pub fn vf_right(s: &RightState, op: &InertiaOperator, params: &BodyParams) -> Result<RightRate> {
    let n = s.dim();
    check(op, n)?;
    let g = s.g.as_matrix();
    let omega = adjoint_unchecked(g, &op.apply(&coadjoint_unchecked(g, &s.m_space)));
    let m_dot = wedge(&s.g.column(n - 1), &unit(n, n - 1))?.scale(params.weight());
    Ok(RightRate { m_dot, omega })
}

/// Reduced Euler–Poisson flow; layout of [`EulerPoissonState::to_phase`].
#[derive(Clone, Debug)]
pub struct EulerPoissonFlow {
    pub op: InertiaOperator,
    pub params: BodyParams,
}

impl Flow for EulerPoissonFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = EulerPoissonState::from_phase(self.op.dim(), state)?;
        let d = vf_euler_poisson(&s, &self.op, &self.params)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: d.to_phase().flat,
        })
    }

    fn unit_vector_range(&self) -> Option<Range<usize>> {
        let n = self.op.dim();
        let dim = algebra_dim(n);
        Some(dim..dim + n)
    }
}

/// Full system on `SO(n) × so(n)`; layout of [`FullState::to_phase`].
#[derive(Clone, Debug)]
pub struct FullLeftFlow {
    pub op: InertiaOperator,
    pub params: BodyParams,
}

impl Flow for FullLeftFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = FullState::from_phase(self.op.dim(), state)?;
        let d = vf_full_left(&s, &self.op, &self.params)?;
        Ok(PhaseRate {
            body_velocity: Some(d.omega),
            flat: d.m_dot.coords(),
        })
    }
}

/// Space-frame system; layout of [`RightState::to_phase`].
#[derive(Clone, Debug)]
pub struct RightFlow {
    pub op: InertiaOperator,
    pub params: BodyParams,
}

impl Flow for RightFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = RightState::from_phase(self.op.dim(), state)?;
        let d = vf_right(&s, &self.op, &self.params)?;
        // ġ = Ω g = g (gᵀ Ω g)
        let body = coadjoint_unchecked(s.g.as_matrix(), &d.omega);
        Ok(PhaseRate {
            body_velocity: Some(body),
            flat: d.m_dot.coords(),
        })
    }
}
