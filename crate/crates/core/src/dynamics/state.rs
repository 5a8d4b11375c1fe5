use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::PhaseState;
use crate::liealg::{adjoint_unchecked, algebra_dim, coadjoint_unchecked, Rotation, SkewMatrix};

fn expect_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `ρ` (mass-center offset along `f_n`) and `𝔊𝔐`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyParams {
    pub rho: f64,
    pub grav_mass: f64,
}

impl BodyParams {
    pub fn new(rho: f64, grav_mass: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
        }
        if !(grav_mass >= 0.0 && grav_mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grav_mass must be >= 0, got {grav_mass}"
            )));
        }
        Ok(Self { rho, grav_mass })
    }

    /// `ρ𝔊𝔐`, the coefficient of the potential `ρ𝔊𝔐 (f_n, γ)`.
    pub fn weight(&self) -> f64 {
        self.rho * self.grav_mass
    }
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            grav_mass: 1.0,
        }
    }
}

/// Reduced heavy-body state on `(so(n) × ℝⁿ)*`. Also used as its own
/// tangent (`ṁ`, `γ̇`).
#[derive(Clone, Debug, PartialEq)]
pub struct EulerPoissonState {
    pub m: SkewMatrix,
    pub gamma: DVector<f64>,
}

impl EulerPoissonState {
    pub fn new(m: SkewMatrix, gamma: DVector<f64>) -> Result<Self> {
        expect_len(m.dim(), gamma.len())?;
        Ok(Self { m, gamma })
    }

    /// `m = 0`, `γ = f_n`.
    pub fn hanging(n: usize) -> Self {
        let mut gamma = DVector::zeros(n);
        gamma[n - 1] = 1.0;
        Self {
            m: SkewMatrix::zeros(n),
            gamma,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// Flat layout: wedge coordinates of `m`, then `γ`.
    pub fn to_phase(&self) -> PhaseState {
        let c = self.m.coords();
        PhaseState::flat(DVector::from_iterator(
            c.len() + self.gamma.len(),
            c.iter().chain(self.gamma.iter()).copied(),
        ))
    }

    pub fn from_phase(n: usize, s: &PhaseState) -> Result<Self> {
        let dim = algebra_dim(n);
        expect_len(dim + n, s.flat.len())?;
        Ok(Self {
            m: SkewMatrix::from_coords(n, &s.flat.as_slice()[..dim])?,
            gamma: s.flat.rows(dim, n).into_owned(),
        })
    }
}

/// Left-trivialized state `(g, m)` on `T*SO(n)`; `e_i = gᵀE_i` are the rows of `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    pub g: Rotation,
    pub m: SkewMatrix,
}

impl FullState {
    pub fn new(g: Rotation, m: SkewMatrix) -> Result<Self> {
        expect_len(g.dim(), m.dim())?;
        Ok(Self { g, m })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `γ = e_n`.
    pub fn gamma(&self) -> DVector<f64> {
        self.g.row_vector(self.dim() - 1)
    }

    pub fn to_euler_poisson(&self) -> EulerPoissonState {
        EulerPoissonState {
            m: self.m.clone(),
            gamma: self.gamma(),
        }
    }

    pub fn to_right(&self) -> RightState {
        RightState {
            m_space: adjoint_unchecked(self.g.as_matrix(), &self.m),
            g: self.g.clone(),
        }
    }

    pub fn to_phase(&self) -> PhaseState {
        PhaseState::with_group(self.g.clone(), self.m.coords())
    }

    pub fn from_phase(n: usize, s: &PhaseState) -> Result<Self> {
        let g = s
            .group
            .clone()
            .ok_or_else(|| Error::InvalidParameter("phase state lacks a group component".into()))?;
        expect_len(n, g.dim())?;
        expect_len(algebra_dim(n), s.flat.len())?;
        Ok(Self {
            g,
            m: SkewMatrix::from_coord_vector(n, &s.flat)?,
        })
    }
}

/// Right-trivialized state `(g, M)` with `M = Ad_g m` the space-frame
/// momentum; the body axes `F_i` are the columns of `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct RightState {
    pub g: Rotation,
    pub m_space: SkewMatrix,
}

impl RightState {
    pub fn dim(&self) -> usize {
        self.m_space.dim()
    }

    pub fn to_full(&self) -> FullState {
        FullState {
            m: coadjoint_unchecked(self.g.as_matrix(), &self.m_space),
            g: self.g.clone(),
        }
    }

    pub fn to_phase(&self) -> PhaseState {
        PhaseState::with_group(self.g.clone(), self.m_space.coords())
    }

    pub fn from_phase(n: usize, s: &PhaseState) -> Result<Self> {
        let full = FullState::from_phase(n, s)?;
        Ok(Self {
            g: full.g,
            m_space: full.m,
        })
    }
}

/// `(F, Ḟ)` with `F = F_n` the mass-center axis in the space frame. Also used
/// as its own tangent (`Ḟ`, `F̈`).
#[derive(Clone, Debug, PartialEq)]
pub struct PendulumState {
    pub f: DVector<f64>,
    pub f_dot: DVector<f64>,
}

impl PendulumState {
    pub fn new(f: DVector<f64>, f_dot: DVector<f64>) -> Result<Self> {
        expect_len(f.len(), f_dot.len())?;
        Ok(Self { f, f_dot })
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn to_phase(&self) -> PhaseState {
        PhaseState::flat(DVector::from_iterator(
            2 * self.f.len(),
            self.f.iter().chain(self.f_dot.iter()).copied(),
        ))
    }

    pub fn from_phase(n: usize, s: &PhaseState) -> Result<Self> {
        expect_len(2 * n, s.flat.len())?;
        Ok(Self {
            f: s.flat.rows(0, n).into_owned(),
            f_dot: s.flat.rows(n, n).into_owned(),
        })
    }
}

/// Coordinates on the invariant set `m_𝔨 = 0`: `m_d = (m_{1n}, …, m_{n−1,n})`
/// and `γ`. Also used as its own tangent.
#[derive(Clone, Debug, PartialEq)]
pub struct HessChartState {
    pub m_d: DVector<f64>,
    pub gamma: DVector<f64>,
}

impl HessChartState {
    pub fn new(m_d: DVector<f64>, gamma: DVector<f64>) -> Result<Self> {
        expect_len(m_d.len() + 1, gamma.len())?;
        Ok(Self { m_d, gamma })
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// `m = Σ m_{in} f_i∧f_n`.
    pub fn momentum(&self) -> SkewMatrix {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, n - 1)] = self.m_d[i];
            m[(n - 1, i)] = -self.m_d[i];
        }
        SkewMatrix::antisymmetrize(m)
    }

    pub fn to_euler_poisson(&self) -> EulerPoissonState {
        EulerPoissonState {
            m: self.momentum(),
            gamma: self.gamma.clone(),
        }
    }

    /// Reads the 𝔡 coordinates; the 𝔨 part of `s.m` is discarded.
    pub fn from_euler_poisson(s: &EulerPoissonState) -> Self {
        let n = s.dim();
        Self {
            m_d: DVector::from_fn(n - 1, |i, _| s.m.entry(i, n - 1)),
            gamma: s.gamma.clone(),
        }
    }

    pub fn to_phase(&self) -> PhaseState {
        PhaseState::flat(DVector::from_iterator(
            self.m_d.len() + self.gamma.len(),
            self.m_d.iter().chain(self.gamma.iter()).copied(),
        ))
    }

    pub fn from_phase(n: usize, s: &PhaseState) -> Result<Self> {
        expect_len(2 * n - 1, s.flat.len())?;
        Ok(Self {
            m_d: s.flat.rows(0, n - 1).into_owned(),
            gamma: s.flat.rows(n - 1, n).into_owned(),
        })
    }
}
