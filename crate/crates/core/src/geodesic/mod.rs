//! Geodesic flows of left-invariant metrics on SO(n) with the sectional
//! operators `A_{a,b,C}`, their reduction to adjoint orbits, and the
//! Hess–Appel'rot system on `so(4) × so(4)`.

mod compare;
mod dg4;
mod orbit;
mod sectional;

pub use compare::{local_phase_compare, project_to_orbit, red_system_residual, PhaseComparison};
pub use dg4::{
    dg4_casimirs, dg4_energy, dg4_integral, dg4_kinetic_energy, grassmann_from_full,
    grassmann_hamiltonian, hodge_star, psi, vf_dg4_closed, vf_dg4_full, vf_grassmann, DG4Params,
    Dg4ClosedFlow, Dg4ClosedState, Dg4FullFlow, GrassmannFlow,
};
pub use orbit::{
    constraint_defect, orbit_energy, reduced_hamiltonian, spectrum, vf_orbit, BTransport,
    OrbitFlow, OrbitPoint, ORBIT_TOL,
};
pub use sectional::{
    check_c_condition, geodesic_energy, momentum_map, sectional_apply, vf_geodesic, GeodesicFlow,
    PerturbationDelta, SectionalOperator,
};
