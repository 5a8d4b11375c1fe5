//! The three-dimensional heavy top in vector form.

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::inertia::InertiaOperator;
use super::state::{BodyParams, EulerPoissonState};
use crate::error::{Error, Result};
use crate::integrate::{Flow, PhaseRate, PhaseState};
use crate::liealg::hat;

/// `A = 𝕀⁻¹` in vector coordinates, mass-center vector `r` and `𝔊𝔐`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTop {
    pub a: Matrix3<f64>,
    pub r: Vector3<f64>,
    pub grav_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalState {
    pub m: Vector3<f64>,
    pub gamma: Vector3<f64>,
}

impl ClassicalState {
    pub fn to_phase(&self) -> PhaseState {
        PhaseState::flat(DVector::from_iterator(
            6,
            self.m.iter().chain(self.gamma.iter()).copied(),
        ))
    }

    pub fn from_phase(s: &PhaseState) -> Result<Self> {
        if s.flat.len() != 6 {
            return Err(Error::DimensionMismatch {
                expected: 6,
                found: s.flat.len(),
            });
        }
        Ok(Self {
            m: Vector3::new(s.flat[0], s.flat[1], s.flat[2]),
            gamma: Vector3::new(s.flat[3], s.flat[4], s.flat[5]),
        })
    }

    /// `m = hat(m⃗)`, same `γ`.
    pub fn to_euler_poisson(&self) -> EulerPoissonState {
        EulerPoissonState {
            m: hat(&self.m),
            gamma: DVector::from_column_slice(self.gamma.as_slice()),
        }
    }
}

/// `ṁ = m × ω + 𝔊𝔐 γ × r`, `γ̇ = γ × ω`, `ω = A m`.
pub fn vector_field(top: &ClassicalTop, s: &ClassicalState) -> ClassicalState {
    let omega = top.a * s.m;
    ClassicalState {
        m: s.m.cross(&omega) + s.gamma.cross(&top.r) * top.grav_mass,
        gamma: s.gamma.cross(&omega),
    }
}

/// `(ℱ₁, ℱ₂, ℱ₃, ℱ₄) = (½(m, Am) + 𝔊𝔐(r, γ), (γ, γ), (m, γ), (m, r))`.
pub fn classical_integrals(top: &ClassicalTop, s: &ClassicalState) -> [f64; 4] {
    [
        0.5 * s.m.dot(&(top.a * s.m)) + top.grav_mass * top.r.dot(&s.gamma),
        s.gamma.norm_squared(),
        s.m.dot(&s.gamma),
        s.m.dot(&top.r),
    ]
}

/// Sign choice in `r₁√(a₃−a₂) ± r₃√(a₂−a₁) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaBranch {
    Plus,
    Minus,
}

impl ClassicalTop {
    /// Principal-axis top `A = diag(a₁, a₂, a₃)`, `a₃ > a₂ > a₁ > 0`, with
    /// `r = (r₁, 0, r₃)`, `|r| = ρ`, on the chosen branch. The plane
    /// orthogonal to `r` cuts the ellipsoids `(Am, m) = c` in circles.
    pub fn hess_appelrot(
        a1: f64,
        a2: f64,
        a3: f64,
        rho: f64,
        grav_mass: f64,
        branch: HaBranch,
    ) -> Result<Self> {
        if !(a3 > a2 && a2 > a1 && a1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need a3 > a2 > a1 > 0, got ({a1}, {a2}, {a3})"
            )));
        }
        BodyParams::new(rho, grav_mass)?;
        let s = (a3 - a1).sqrt();
        let r3 = rho * (a3 - a2).sqrt() / s;
        let r1 = rho * (a2 - a1).sqrt() / s;
        let r1 = match branch {
            HaBranch::Plus => -r1,
            HaBranch::Minus => r1,
        };
        Ok(Self {
            a: Matrix3::from_diagonal(&Vector3::new(a1, a2, a3)),
            r: Vector3::new(r1, 0.0, r3),
            grav_mass,
        })
    }

    /// Rotation `R` about `f₂` with `R r = |r| f₃`; requires `r₂ = 0`.
    pub fn frame_rotation(&self) -> Result<Matrix3<f64>> {
        let rho = self.r.norm();
        if rho == 0.0 || self.r.y.abs() > 1e-14 * rho {
            return Err(Error::InvalidParameter(
                "frame rotation needs r ≠ 0 with r₂ = 0".into(),
            ));
        }
        let (c, s) = (self.r.z / rho, self.r.x / rho);
        Ok(Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c))
    }

    /// The same top in the frame where `r = ρ f₃`: `A' = R A Rᵀ`, `r' = R r`.
    pub fn rotated(&self) -> Result<Self> {
        let rot = self.frame_rotation()?;
        Ok(Self {
            a: rot * self.a * rot.transpose(),
            r: Vector3::new(0.0, 0.0, self.r.norm()),
            grav_mass: self.grav_mass,
        })
    }

    /// so(3) form of a top with `r = ρ f₃`: the operator and `(ρ, 𝔊𝔐)`.
    pub fn to_wedge(&self) -> Result<(InertiaOperator, BodyParams)> {
        let rho = self.r.z;
        if self.r.x != 0.0 || self.r.y != 0.0 || rho < 0.0 {
            return Err(Error::InvalidParameter("to_wedge needs r = ρ f₃, ρ ≥ 0".into()));
        }
        Ok((
            InertiaOperator::from_vector_form(&self.a)?,
            BodyParams::new(rho, self.grav_mass)?,
        ))
    }
}

/// The operator in the rotated frame where the plane `m₃ = 0` is invariant:
/// `[[a₂, 0, a₁₃], [0, a₂, a₂₃], [a₁₃, a₂₃, a₃₃]]`.
pub fn ha_operator(a2: f64, a13: f64, a23: f64, a33: f64) -> Matrix3<f64> {
    Matrix3::new(a2, 0.0, a13, 0.0, a2, a23, a13, a23, a33)
}

/// Vector-form heavy top; layout of [`ClassicalState::to_phase`].
#[derive(Clone, Debug)]
pub struct ClassicalFlow {
    pub top: ClassicalTop,
}

impl Flow for ClassicalFlow {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        let s = ClassicalState::from_phase(state)?;
        Ok(PhaseRate {
            body_velocity: None,
            flat: vector_field(&self.top, &s).to_phase().flat,
        })
    }

    fn unit_vector_range(&self) -> Option<std::ops::Range<usize>> {
        Some(3..6)
    }
}
