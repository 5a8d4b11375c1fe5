//! Comparison of two geodesic flows that share the reduced system.

use serde::Serialize;

use super::orbit::{vf_orbit, BTransport, OrbitPoint};
use crate::dynamics::FullState;
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::liealg::SkewMatrix;

/// Result of [`local_phase_compare`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseComparison {
    pub times: Vec<f64>,
    /// `‖x_b − x_c‖ + ‖p_b − p_c‖` at each time.
    pub reduced_distance: Vec<f64>,
    /// `max |g_bᵀ g_c − I|` at each time.
    pub phase_discrepancy: Vec<f64>,
}

impl PhaseComparison {
    pub fn max_reduced_distance(&self) -> f64 {
        self.reduced_distance.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_phase_discrepancy(&self) -> f64 {
        self.phase_discrepancy.iter().copied().fold(0.0, f64::max)
    }
}

/// Projects a left-trivialized trajectory `(g, ξ)` on the zero momentum
/// level to `(x, p)` on `T*O(a)`.
pub fn project_to_orbit(traj: &Trajectory, a: &SkewMatrix) -> Result<Vec<OrbitPoint>> {
    traj.states
        .iter()
        .map(|s| {
            let full = FullState::from_phase(a.dim(), s)?;
            OrbitPoint::from_group(&full.g, &full.m, a)
        })
        .collect()
}

/// Compares two trajectories sampled on the same grid, typically of the
/// unperturbed and the perturbed metric from the same zero-momentum start.
pub fn local_phase_compare(traj_b: &Trajectory, traj_c: &Trajectory, a: &SkewMatrix) -> Result<PhaseComparison> {
    if traj_b.len() != traj_c.len() {
        return Err(Error::DimensionMismatch {
            expected: traj_b.len(),
            found: traj_c.len(),
        });
    }
    let n = a.dim();
    let (pb, pc) = (project_to_orbit(traj_b, a)?, project_to_orbit(traj_c, a)?);
    let mut phase = Vec::with_capacity(pb.len());
    for (sb, sc) in traj_b.states.iter().zip(&traj_c.states) {
        let (gb, gc) = (FullState::from_phase(n, sb)?.g, FullState::from_phase(n, sc)?.g);
        let rel = gb.as_matrix().transpose() * gc.as_matrix();
        phase.push((rel - nalgebra::DMatrix::<f64>::identity(n, n)).amax());
    }
    Ok(PhaseComparison {
        times: traj_b.times.clone(),
        reduced_distance: pb
            .iter()
            .zip(&pc)
            .map(|(u, v)| (&u.x - &v.x).norm() + (&u.p - &v.p).norm())
            .collect(),
        phase_discrepancy: phase,
    })
}

/// Largest residual of the reduced system along sampled orbit points, with
/// the time derivative taken by fourth-order central differences on a
/// uniform grid of spacing `dt`. Returns 0 for fewer than five samples.
pub fn red_system_residual(
    points: &[OrbitPoint],
    dt: f64,
    bt: &BTransport,
    potential: Option<&SkewMatrix>,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("sample spacing must be positive".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 2..points.len().saturating_sub(2) {
        let d = |f: fn(&OrbitPoint) -> &SkewMatrix| {
            let v = |k: usize| f(&points[k]).as_matrix().clone();
            SkewMatrix::antisymmetrize((v(i - 2) - v(i - 1) * 8.0 + v(i + 1) * 8.0 - v(i + 2)) / (12.0 * dt))
        };
        let field = vf_orbit(&points[i], bt, potential)?;
        let rx = (&d(|q| &q.x) - &field.x).norm();
        let rp = (&d(|q| &q.p) - &field.p).norm();
        worst = worst.max(rx).max(rp);
    }
    Ok(worst)
}
