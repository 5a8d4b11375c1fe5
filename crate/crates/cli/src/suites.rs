//! Diagnostic suites run by `check` and `scan`.

use std::fmt::Write as _;

use hessflow_core::diagnostics::{
    chart_samples, conservation_suite, k_relation, measure_test, reduction_compare_grassmann,
    reduction_compare_pendulum, ConservationReport, ObserverRow, MEASURE_TOL, TIER_ALGEBRAIC,
    TIER_COMPARISON, TIER_DRIFT,
};
use hessflow_core::dynamics::{integrals_hess, EulerPoissonFlow, EulerPoissonState, HessChartState};
use hessflow_core::integrate::{integrate, Flow, Observer, PhaseState};
use hessflow_core::lax::{lax_residual, spectral_invariants, SpectralData};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Suite, System};
use crate::error::CliError;
use crate::scenario::Scenario;

/// Number of samples of the sampled state space used by the measure test.
pub const MEASURE_SAMPLES: usize = 1000;

/// One number compared against its tolerance; passes iff `value ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Metric {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub metrics: Vec<Metric>,
    /// Set when the diagnostic itself could not be evaluated.
    pub error: Option<String>,
    #[serde(skip)]
    pub text: String,
    pub details: Value,
}

impl SuiteReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("== {} : {}\n", self.suite.name(), if self.pass { "PASS" } else { "FAIL" });
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(out, "{:<32} {:>12} {:>10} verdict", "metric", "value", "tol");
        for m in &self.metrics {
            let _ = writeln!(
                out,
                "{:<32} {:>12.3e} {:>10.1e} {}",
                m.name,
                m.value,
                m.tolerance,
                if m.pass { "pass" } else { "FAIL" }
            );
        }
        out.push_str(&self.text);
        out
    }
}

fn ha_only(scn: &Scenario, suite: Suite) -> Result<(), CliError> {
    if scn.ha.is_none() {
        return Err(unavailable(scn, suite));
    }
    Ok(())
}

fn unavailable(scn: &Scenario, suite: Suite) -> CliError {
    CliError::config(format!(
        "scenario.suite: suite {} is not available for system {}",
        suite.name(),
        scn.system.name()
    ))
}

/// Metric names a suite produces for this scenario, fixed before running.
pub fn plan(scn: &Scenario, suite: Suite) -> Result<Vec<String>, CliError> {
    Ok(match suite {
        Suite::Invariance => {
            let name = match (scn.relation, &scn.ha) {
                (Some(i), _) => scn.observers[i].name.clone(),
                (None, Some(_)) => k_relation(scn.n).name,
                (None, None) => return Err(unavailable(scn, suite)),
            };
            vec![format!("max {name}")]
        }
        Suite::Conservation => scn
            .conserved
            .iter()
            .map(|&i| format!("drift {}", scn.observers[i].name))
            .collect(),
        Suite::Lax => {
            ha_only(scn, suite)?;
            (0..LAX_TERMS).flat_map(|k| [format!("initial lambda^{k}"), format!("flow lambda^{k}")]).collect()
        }
        Suite::Spectral => {
            ha_only(scn, suite)?;
            let mut v = vec!["fit vs integrals".to_string()];
            v.extend(["c0", "c2", "c4", "Q"].iter().map(|c| format!("drift {c}")));
            v
        }
        Suite::ReducePendulum => {
            ha_only(scn, suite)?;
            vec!["max |F_n - F|".into()]
        }
        Suite::ReduceGrassmann => {
            if scn.dg4.is_none() {
                return Err(unavailable(scn, suite));
            }
            vec!["max |Ad_g a - x|".into(), "drift F".into(), "drift energy".into()]
        }
        Suite::Measure => {
            if scn.hess4.is_none() {
                return Err(unavailable(scn, suite));
            }
            vec!["max |div|".into()]
        }
    })
}

/// Runs one suite. A non-finite state is a hard error; any other failure of
/// the diagnostic is reported as a failed suite.
pub fn run(scn: &Scenario, suite: Suite) -> Result<SuiteReport, CliError> {
    let names = plan(scn, suite)?;
    let result = match suite {
        Suite::Invariance => invariance(scn),
        Suite::Conservation => conservation(scn),
        Suite::Lax => lax(scn),
        Suite::Spectral => spectral(scn),
        Suite::ReducePendulum => reduce_pendulum(scn),
        Suite::ReduceGrassmann => reduce_grassmann(scn),
        Suite::Measure => measure(scn),
    };
    let (metrics, text, details, error) = match result {
        Ok((metrics, text, details)) => (metrics, text, details, None),
        Err(e @ hessflow_core::Error::NonFinite(_)) => {
            return Err(CliError::Numeric(format!("suite {}: {e}", suite.name())))
        }
        Err(e) => (
            names.iter().map(|n| Metric::new(n.clone(), f64::NAN, f64::NAN)).collect(),
            String::new(),
            Value::Null,
            Some(e.to_string()),
        ),
    };
    debug_assert_eq!(metrics.iter().map(|m| &m.name).collect::<Vec<_>>(), names.iter().collect::<Vec<_>>());
    Ok(SuiteReport {
        suite,
        pass: error.is_none() && metrics.iter().all(|m| m.pass),
        metrics,
        error,
        text,
        details,
    })
}

type Outcome = hessflow_core::Result<(Vec<Metric>, String, Value)>;

fn row_from_series(name: &str, times: &[f64], values: &[f64], reference: f64, tolerance: f64) -> ObserverRow {
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

/// Ten evenly spaced points of a sampled curve.
fn curve_summary(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let len = times.len();
    if len == 0 {
        return Vec::new();
    }
    let picks = 10.min(len);
    (0..picks)
        .map(|k| {
            let i = if picks == 1 { 0 } else { k * (len - 1) / (picks - 1) };
            (times[i], values[i])
        })
        .collect()
}

fn invariance(scn: &Scenario) -> Outcome {
    let cfg = &scn.config.integrator;
    let (flow, state0, relation): (Box<dyn Flow>, PhaseState, Observer) = match (scn.relation, &scn.ha) {
        (Some(i), _) => {
            let o = scn.observers[i].clone();
            let out = integrate(&*scn.flow, &scn.state0, cfg, std::slice::from_ref(&o))?;
            return Ok(invariance_outcome(&o.name, &out.trajectory.times, &out.series[0].values));
        }
        (None, Some(ha)) => (
            Box::new(EulerPoissonFlow { op: ha.op.clone(), params: ha.body }),
            ha.ep0.to_phase(),
            k_relation(scn.n),
        ),
        (None, None) => unreachable!("checked by plan"),
    };
    let out = integrate(&*flow, &state0, cfg, std::slice::from_ref(&relation))?;
    Ok(invariance_outcome(&relation.name, &out.trajectory.times, &out.series[0].values))
}

fn invariance_outcome(name: &str, times: &[f64], values: &[f64]) -> (Vec<Metric>, String, Value) {
    let row = row_from_series(name, times, values, 0.0, TIER_DRIFT);
    let curve = curve_summary(times, values);
    let mut text = ConservationReport { rows: vec![row.clone()] }.to_text();
    text.push_str("drift curve:\n");
    for (t, v) in &curve {
        let _ = writeln!(text, "  t = {t:>10.4}  {v:.3e}");
    }
    let metrics = vec![Metric::new(format!("max {name}"), row.max_drift, TIER_DRIFT)];
    (metrics, text, json!({ "report": { "rows": [row] }, "curve": curve }))
}

fn conservation(scn: &Scenario) -> Outcome {
    let observers: Vec<Observer> = scn.conserved.iter().map(|&i| scn.observers[i].clone()).collect();
    let tol = vec![TIER_DRIFT; observers.len()];
    let rep = conservation_suite(&*scn.flow, &scn.state0, &observers, &tol, &scn.config.integrator)?;
    let metrics = rep
        .rows
        .iter()
        .map(|r| Metric::new(format!("drift {}", r.name), r.max_drift, r.tolerance))
        .collect();
    Ok((metrics, rep.to_text(), json!({ "report": rep })))
}

fn ha_trajectory(scn: &Scenario, observers: &[Observer]) -> hessflow_core::Result<hessflow_core::integrate::IntegrationOutput> {
    let ha = scn.ha.as_ref().expect("checked by plan");
    let flow = EulerPoissonFlow { op: ha.op.clone(), params: ha.body };
    integrate(&flow, &ha.ep0.to_phase(), &scn.config.integrator, observers)
}

/// Coefficients of the residual polynomial: degree 2 for L times degree 1 for A.
const LAX_TERMS: usize = 4;

fn lax(scn: &Scenario) -> Outcome {
    let ha = scn.ha.as_ref().expect("checked by plan");
    let n = scn.n;
    let initial = lax_residual(&ha.ep0, &ha.op, ha.a, &ha.body)?.coeff_norms();
    let out = ha_trajectory(scn, &[])?;
    let mut along = [0.0f64; LAX_TERMS];
    for s in &out.trajectory.states {
        let ep = EulerPoissonState::from_phase(n, s)?;
        for (k, v) in lax_residual(&ep, &ha.op, ha.a, &ha.body)?.coeff_norms().into_iter().take(LAX_TERMS).enumerate() {
            along[k] = along[k].max(v);
        }
    }
    let mut metrics = Vec::new();
    for (k, &flow) in along.iter().enumerate() {
        let init = initial.get(k).copied().unwrap_or(0.0);
        metrics.push(Metric::new(format!("initial lambda^{k}"), init, TIER_ALGEBRAIC));
        metrics.push(Metric::new(format!("flow lambda^{k}"), flow, TIER_DRIFT));
    }
    let text = format!(
        "residual [L, A] - dL/dt, max over {} samples: {:.3e}\n",
        out.trajectory.len(),
        along.iter().copied().fold(0.0, f64::max)
    );
    Ok((metrics, text, json!({ "initial": initial, "along_flow": along })))
}

fn spectral(scn: &Scenario) -> Outcome {
    let ha = scn.ha.as_ref().expect("checked by plan");
    let n = scn.n;
    let fitted = spectral_invariants(&ha.ep0, ha.a, &ha.body)?;
    let (f1, f2, f3) = integrals_hess(&HessChartState::from_euler_poisson(&ha.ep0), ha.a, &ha.body);
    let direct = SpectralData::from_integrals(f1, f2, f3, ha.a, &ha.body);
    let (a, body) = (ha.a, ha.body);
    let observers: Vec<Observer> = ["c0", "c2", "c4", "Q"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            Observer::new(*name, move |s: &PhaseState| {
                let Ok(ep) = EulerPoissonState::from_phase(n, s) else { return f64::NAN };
                match spectral_invariants(&ep, a, &body) {
                    Ok(d) if k < 3 => d.p_coeffs[k],
                    Ok(d) => d.q_coeff,
                    Err(_) => f64::NAN,
                }
            })
        })
        .collect();
    let out = ha_trajectory(scn, &observers)?;
    let times = &out.trajectory.times;
    let rows: Vec<ObserverRow> = out
        .series
        .iter()
        .map(|s| row_from_series(&s.name, times, &s.values, s.values[0], TIER_DRIFT))
        .collect();
    let mut metrics = vec![Metric::new("fit vs integrals", fitted.max_deviation(&direct), 1e-9)];
    metrics.extend(rows.iter().map(|r| Metric::new(format!("drift {}", r.name), r.max_drift, r.tolerance)));
    let rep = ConservationReport { rows };
    let text = format!(
        "fitted  c0 {:.12e} c2 {:.12e} c4 {:.12e} Q {:.12e}\nfrom F  c0 {:.12e} c2 {:.12e} c4 {:.12e} Q {:.12e}\n{}",
        fitted.p_coeffs[0],
        fitted.p_coeffs[1],
        fitted.p_coeffs[2],
        fitted.q_coeff,
        direct.p_coeffs[0],
        direct.p_coeffs[1],
        direct.p_coeffs[2],
        direct.q_coeff,
        rep.to_text()
    );
    Ok((
        metrics,
        text,
        json!({
            "fitted": { "p": fitted.p_coeffs, "q": fitted.q_coeff },
            "from_integrals": { "p": direct.p_coeffs, "q": direct.q_coeff },
            "report": rep,
        }),
    ))
}

fn reduce_pendulum(scn: &Scenario) -> Outcome {
    let ha = scn.ha.as_ref().expect("checked by plan");
    let rep = reduction_compare_pendulum(&ha.full0, &ha.op, &ha.body, &scn.config.integrator)?;
    let metrics = vec![Metric::new("max |F_n - F|", rep.max_distance, TIER_COMPARISON)];
    Ok((metrics, rep.to_text(), json!({ "report": rep })))
}

fn reduce_grassmann(scn: &Scenario) -> Outcome {
    let (params, full0) = scn.dg4.as_ref().expect("checked by plan");
    let rep = reduction_compare_grassmann(full0, params, &scn.config.integrator)?;
    let mut metrics = vec![Metric::new("max |Ad_g a - x|", rep.max_distance, TIER_COMPARISON)];
    if let Some(c) = &rep.conservation {
        metrics.extend(c.rows.iter().map(|r| Metric::new(format!("drift {}", r.name), r.max_drift, r.tolerance)));
    }
    Ok((metrics, rep.to_text(), json!({ "report": rep })))
}

fn measure(scn: &Scenario) -> Outcome {
    let coeffs = scn.hess4.expect("checked by plan");
    let samples = chart_samples(4, MEASURE_SAMPLES, scn.config.scenario.seed)?;
    let verdict = measure_test(&coeffs, &samples)?;
    let mut text = format!(
        "{}: max |div| = {:.3e} over {} samples (b1 = {}, b2 = {})\n",
        if verdict.preserving { "measure-preserving" } else { "not measure-preserving" },
        verdict.max_abs_divergence,
        samples.len(),
        coeffs.b1,
        coeffs.b2
    );
    if let Some(w) = &verdict.witness {
        let _ = writeln!(text, "witness [m14, m24, m34, g1..g4] = {w:?}");
    }
    let metrics = vec![Metric::new("max |div|", verdict.max_abs_divergence, MEASURE_TOL)];
    Ok((metrics, text, json!({ "verdict": verdict })))
}

/// Suites run by `check` when neither the config nor the command line
/// names any.
pub fn default_suites(system: System) -> Vec<Suite> {
    match system {
        System::ClassicalHa => vec![Suite::Conservation, Suite::Invariance, Suite::Lax, Suite::Spectral],
        System::NdimHa => vec![
            Suite::Conservation,
            Suite::Invariance,
            Suite::Lax,
            Suite::Spectral,
            Suite::ReducePendulum,
        ],
        System::Hess4 => vec![Suite::Invariance, Suite::Lax, Suite::Spectral],
        System::Lagrange4 => vec![Suite::Conservation, Suite::Invariance, Suite::Lax, Suite::Measure],
        System::Pendulum | System::EulerPoissonGeneric | System::GeodesicB => vec![Suite::Conservation],
        System::GeodesicC | System::Orbit | System::Dg4Grassmann => vec![Suite::Conservation, Suite::Invariance],
        System::Dg4Full => vec![Suite::Conservation, Suite::Invariance, Suite::ReduceGrassmann],
    }
}
