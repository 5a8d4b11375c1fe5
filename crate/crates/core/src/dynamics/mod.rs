//! Heavy rigid body on SO(n): inertia operators, the Euler–Poisson equations
//! in reduced, body and space form, the Hess–Appel'rot invariant set and its
//! chart, the spherical-pendulum reduction and the classical n = 3 top.

pub mod classical;
mod euler_poisson;
mod hess;
mod inertia;
mod pendulum;
mod state;

pub use euler_poisson::{
    energy, vf_euler_poisson, vf_full_left, vf_right, EulerPoissonFlow, FullLeftFlow, FullRate,
    RightFlow, RightRate,
};
pub use hess::{
    divergence_hess4, hess4_integrals, hess4_k_rates, integrals_hess, vf_hess4, vf_hess_coords,
    Hess4Coeffs, Hess4Flow, HessChart, DIVERGENCE_STEP,
};
pub use inertia::{apply_inertia_inverse, check_ha_condition, InertiaMode, InertiaOperator, HA_TOL};
pub use pendulum::{
    pendulum_energy, pendulum_from_full, pendulum_integrals, vf_pendulum, PendulumFlow,
    CONSTRAINT_TOL,
};
pub use state::{BodyParams, EulerPoissonState, FullState, HessChartState, PendulumState, RightState};
