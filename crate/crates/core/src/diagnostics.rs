//! Pass/fail computations on trajectories: drift of invariant relations and
//! first integrals, full-versus-reduced comparisons and the measure test.

use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::{
    check_ha_condition, divergence_hess4, pendulum_from_full, FullState, Hess4Coeffs,
    HessChartState, InertiaOperator, BodyParams, PendulumFlow, RightFlow,
};
use crate::error::{Error, Result};
use crate::geodesic::{
    dg4_energy, dg4_integral, grassmann_from_full, DG4Params, Dg4ClosedState, Dg4FullFlow,
    GrassmannFlow, OrbitPoint,
};
use crate::integrate::{integrate, Flow, IntegratorConfig, Observer, PhaseState};
use crate::liealg::adjoint_unchecked;

/// Pointwise algebraic identities.
pub const TIER_ALGEBRAIC: f64 = 1e-12;
/// Drift of a conserved quantity or invariant relation along one trajectory.
pub const TIER_DRIFT: f64 = 1e-8;
/// Distance between two independently integrated trajectories.
pub const TIER_COMPARISON: f64 = 1e-6;
/// Bound on `|div|` for the measure verdict.
pub const MEASURE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObserverRow {
    pub name: String,
    pub initial: f64,
    pub max_drift: f64,
    pub time_of_max: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConservationReport {
    pub rows: Vec<ObserverRow>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&ObserverRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<24} {:>14} {:>12} {:>10} {:>10} verdict\n",
            "observer", "initial", "max_drift", "t_max", "tol"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<24} {:>14.6e} {:>12.3e} {:>10.4} {:>10.1e} {}",
                r.name,
                r.initial,
                r.max_drift,
                r.time_of_max,
                r.tolerance,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Quantities monitored along the first trajectory of the pair.
    pub conservation: Option<ConservationReport>,
}

impl ComparisonReport {
    fn new(name: &str, times: Vec<f64>, distances: Vec<f64>, tolerance: f64) -> Self {
        let max_distance = distances.iter().copied().fold(0.0, f64::max);
        Self {
            name: name.to_string(),
            times,
            distances,
            max_distance,
            tolerance,
            pass: max_distance <= tolerance,
            conservation: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.pass && self.conservation.as_ref().is_none_or(ConservationReport::passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<24} max_distance {:.3e} tol {:.1e} {}\n",
            self.name,
            self.max_distance,
            self.tolerance,
            if self.pass { "pass" } else { "FAIL" }
        );
        if let Some(c) = &self.conservation {
            out.push_str(&c.to_text());
        }
        out
    }
}

fn drift_row(name: &str, times: &[f64], values: &[f64], reference: f64, tolerance: f64) -> ObserverRow {
    let (mut max_drift, mut time_of_max) = (0.0, 0.0);
    for (&t, &v) in times.iter().zip(values) {
        let d = (v - reference).abs();
        if d > max_drift || d.is_nan() {
            max_drift = d;
            time_of_max = t;
            if d.is_nan() {
                break;
            }
        }
    }
    ObserverRow {
        name: name.to_string(),
        initial: values.first().copied().unwrap_or(f64::NAN),
        max_drift,
        time_of_max,
        tolerance,
        pass: max_drift <= tolerance,
    }
}

/// Integrates once and reports `max_t |o(t) − o(0)|` for each observer
/// against its tolerance.
pub fn conservation_suite<F: Flow + ?Sized>(
    field: &F,
    state0: &PhaseState,
    observers: &[Observer],
    tolerances: &[f64],
    config: &IntegratorConfig,
) -> Result<ConservationReport> {
    if observers.len() != tolerances.len() {
        return Err(Error::DimensionMismatch {
            expected: observers.len(),
            found: tolerances.len(),
        });
    }
    let out = integrate(field, state0, config, observers)?;
    let times = &out.trajectory.times;
    Ok(ConservationReport {
        rows: out
            .series
            .iter()
            .zip(tolerances)
            .map(|(s, &tol)| drift_row(&s.name, times, &s.values, s.values[0], tol))
            .collect(),
    })
}

/// Reports `max_t relation(state(t))`, where `relation` is the norm of the
/// residual of an invariant relation satisfied at `t = 0`.
pub fn invariance_drift<F: Flow + ?Sized>(
    field: &F,
    state0: &PhaseState,
    relation: Observer,
    tolerance: f64,
    config: &IntegratorConfig,
) -> Result<ConservationReport> {
    let out = integrate(field, state0, config, std::slice::from_ref(&relation))?;
    let s = &out.series[0];
    Ok(ConservationReport {
        rows: vec![drift_row(&s.name, &out.trajectory.times, &s.values, 0.0, tolerance)],
    })
}

/// `‖pr_𝔨 m‖` on the Euler–Poisson layout `[m, γ]`.
pub fn k_relation(n: usize) -> Observer {
    let pair = crate::liealg::SymmetricPairSplit::new(n);
    Observer::new("|m_k|", move |s: &PhaseState| {
        pair.k_indices().iter().map(|&i| s.flat[i] * s.flat[i]).sum::<f64>().sqrt()
    })
}

/// Integrates the right-trivialized full flow and the spherical pendulum
/// from matching data and reports `sup_t |F_n(t) − F(t)|`.
pub fn reduction_compare_pendulum(
    full_state0: &FullState,
    op: &InertiaOperator,
    params: &BodyParams,
    config: &IntegratorConfig,
) -> Result<ComparisonReport> {
    let n = full_state0.dim();
    let a = match check_ha_condition(op) {
        (_, Some(a)) => a,
        (_, None) => {
            return Err(Error::Constraint {
                what: "Hess-Appel'rot condition",
                defect: f64::INFINITY,
            })
        }
    };
    let right = RightFlow {
        op: op.clone(),
        params: *params,
    };
    let pend = PendulumFlow::vertical(n, a, *params);
    let p0 = pendulum_from_full(full_state0, op);
    let full_run = integrate(&right, &full_state0.to_right().to_phase(), config, &[])?;
    let pend_run = integrate(&pend, &p0.to_phase(), config, &[])?;
    let distances = full_run
        .trajectory
        .states
        .iter()
        .zip(&pend_run.trajectory.states)
        .map(|(sf, sp)| {
            let g = sf.group.as_ref().expect("right flow carries g");
            let fp = sp.flat.rows(0, n);
            (g.column(n - 1) - fp).norm()
        })
        .collect();
    Ok(ComparisonReport::new(
        "pendulum reduction",
        full_run.trajectory.times,
        distances,
        TIER_COMPARISON,
    ))
}

/// Integrates the so(4) × so(4) system in left form and the Grassmannian
/// system from matching data and reports `sup_t ‖Ad_{g(t)} a − x(t)‖`. The
/// integral `ℱ` and the energy are monitored along the full run.
pub fn reduction_compare_grassmann(
    state0: &FullState,
    params: &DG4Params,
    config: &IntegratorConfig,
) -> Result<ComparisonReport> {
    let full = Dg4FullFlow::new(*params)?;
    let grass = GrassmannFlow { params: *params };
    let x0 = grassmann_from_full(state0, params)?;
    let a = params.a();
    let observers = dg4_observers(params)?;
    let tol = vec![TIER_DRIFT; observers.len()];
    let full_run = integrate(&full, &state0.to_phase(), config, &observers)?;
    let grass_run = integrate(&grass, &x0.to_phase(), config, &[])?;
    let distances = full_run
        .trajectory
        .states
        .iter()
        .zip(&grass_run.trajectory.states)
        .map(|(sf, sg)| -> Result<f64> {
            let g = sf.group.as_ref().expect("left flow carries g");
            let x_full = adjoint_unchecked(g.as_matrix(), &a);
            let x_red = OrbitPoint::from_phase(4, sg)?.x;
            Ok((&x_full - &x_red).norm())
        })
        .collect::<Result<Vec<_>>>()?;
    let times = full_run.trajectory.times.clone();
    let mut report = ComparisonReport::new("grassmann reduction", times.clone(), distances, TIER_COMPARISON);
    report.conservation = Some(ConservationReport {
        rows: full_run
            .series
            .iter()
            .zip(tol)
            .map(|(s, t)| drift_row(&s.name, &times, &s.values, s.values[0], t))
            .collect(),
    });
    Ok(report)
}

/// `ℱ`, the energy and `‖(m₁₂, m₃₄)‖` on the left-form layout of the
/// so(4) × so(4) system. The last one is measured from zero.
pub fn dg4_observers(params: &DG4Params) -> Result<Vec<Observer>> {
    let op = params.operator()?;
    let (p1, p2) = (*params, *params);
    let closed = move |s: &PhaseState| {
        FullState::from_phase(4, s).map(|f| Dg4ClosedState::from_full(&f, &p1))
    };
    let closed2 = closed;
    Ok(vec![
        Observer::new("F", move |s: &PhaseState| {
            closed(s).map_or(f64::NAN, |c| dg4_integral(&c, &p2))
        }),
        Observer::new("energy", move |s: &PhaseState| {
            closed2(s).map_or(f64::NAN, |c| dg4_energy(&c, &op, &p1))
        }),
    ])
}

/// `‖(m₁₂, m₃₄)‖` on the left-form layout of the so(4) × so(4) system.
pub fn dg4_relation() -> Observer {
    Observer::new("|(m12,m34)|", |s: &PhaseState| s.flat[0].hypot(s.flat[5]))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureVerdict {
    pub preserving: bool,
    pub max_abs_divergence: f64,
    /// Sample with the largest `|div|`, flattened as `[m₁₄, m₂₄, m₃₄, γ]`.
    pub witness: Option<Vec<f64>>,
}

/// Evaluates the divergence of the n = 4 chart field on the samples; the
/// flow is declared measure preserving iff every `|div| ≤ 1e−6`.
pub fn measure_test(coeffs: &Hess4Coeffs, samples: &[HessChartState]) -> Result<MeasureVerdict> {
    let mut worst = 0.0;
    let mut witness = None;
    for s in samples {
        let d = divergence_hess4(s, coeffs)?.abs();
        if d > worst {
            worst = d;
            witness = Some(s.to_phase().flat.iter().copied().collect());
        }
    }
    let preserving = worst <= MEASURE_TOL;
    Ok(MeasureVerdict {
        preserving,
        max_abs_divergence: worst,
        witness: if preserving { None } else { witness },
    })
}

/// Seeded sample of chart states with `|m_d| ≤ 1` coordinates and unit `γ`.
pub fn chart_samples(n: usize, count: usize, seed: u64) -> Result<Vec<HessChartState>> {
    let mut r = crate::sampling::rng(seed);
    (0..count)
        .map(|_| {
            HessChartState::new(
                crate::sampling::vector(&mut r, n - 1, 1.0),
                crate::sampling::unit_vector(&mut r, n),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{EulerPoissonFlow, EulerPoissonState};
    use crate::integrate::Method;
    use crate::liealg::{Rotation, SkewMatrix};
    use crate::sampling;
    use nalgebra::DMatrix;

    fn ha(n: usize, seed: u64) -> InertiaOperator {
        let mut r = sampling::rng(seed);
        let k = (n - 1) * (n - 2) / 2;
        let a_k = sampling::spd(&mut r, k, 0.5, 2.0);
        let b = DMatrix::from_fn(k, n - 1, |_, _| sampling::uniform(&mut r, 0.3));
        InertiaOperator::hess_appelrot(n, a_k, b, 1.2).unwrap()
    }

    fn invariant_full(n: usize, seed: u64) -> FullState {
        let mut r = sampling::rng(seed);
        let g = sampling::rotation(&mut r, n);
        let pair = crate::liealg::SymmetricPairSplit::new(n);
        let m = pair.from_d_coords(sampling::vector(&mut r, n - 1, 0.8).as_slice());
        FullState::new(g, m).unwrap()
    }

    #[test]
    fn zero_state_has_no_drift() {
        let op = ha(4, 1);
        let flow = EulerPoissonFlow { op, params: BodyParams::default() };
        let s = EulerPoissonState::hanging(4).to_phase();
        let cfg = IntegratorConfig::new(Method::Rk4, 1e-2, 1.0);
        let rep = invariance_drift(&flow, &s, k_relation(4), TIER_DRIFT, &cfg).unwrap();
        assert_eq!(rep.rows[0].max_drift, 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn drift_row_records_worst_time() {
        let row = drift_row("x", &[0.0, 1.0, 2.0], &[1.0, 1.5, 0.8], 1.0, 0.1);
        assert_eq!((row.max_drift, row.time_of_max, row.pass), (0.5, 1.0, false));
        assert!(ConservationReport { rows: vec![row] }.to_text().contains("FAIL"));
    }

    #[test]
    fn pendulum_equilibrium_distance_is_zero() {
        let op = ha(4, 2);
        let s = FullState::new(Rotation::identity(4), SkewMatrix::zeros(4)).unwrap();
        let cfg = IntegratorConfig::new(Method::LieRk4, 1e-2, 1.0);
        let rep = reduction_compare_pendulum(&s, &op, &BodyParams::default(), &cfg).unwrap();
        assert_eq!(rep.max_distance, 0.0);
    }

    #[test]
    fn pendulum_reduction_short_run() {
        let op = ha(4, 3);
        let cfg = IntegratorConfig::new(Method::LieRk4, 1e-3, 1.0).with_stride(50);
        let rep = reduction_compare_pendulum(&invariant_full(4, 4), &op, &BodyParams::new(0.8, 1.1).unwrap(), &cfg)
            .unwrap();
        assert!(rep.pass, "{}", rep.max_distance);
    }

    #[test]
    fn measure_verdicts() {
        let samples = chart_samples(4, 50, 5).unwrap();
        let base = Hess4Coeffs { a1: 1.0, a2: 1.5, a3: 2.0, a: 1.2, b1: 0.0, b2: 0.0, b3: 1.0 };
        assert!(measure_test(&base, &samples).unwrap().preserving);
        let v = measure_test(&Hess4Coeffs { b1: 0.5, ..base }, &samples).unwrap();
        assert!(!v.preserving && v.witness.is_some());
    }

    #[test]
    fn grassmann_equilibrium_distance_is_zero() {
        let p = DG4Params { a12: 1.2, a34: 0.5, j1: 1.0, j3: 1.6, j13: 0.2, j24: -0.15 };
        let s = FullState::new(Rotation::identity(4), SkewMatrix::zeros(4)).unwrap();
        let cfg = IntegratorConfig::new(Method::LieRk4, 1e-2, 1.0);
        let rep = reduction_compare_grassmann(&s, &p, &cfg).unwrap();
        assert!(rep.max_distance < 1e-14, "{}", rep.max_distance);
        assert!(rep.passed());
    }
}
