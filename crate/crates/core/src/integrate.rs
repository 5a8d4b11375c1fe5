//! Fixed-step time integration.
//!
//! A phase point is an optional rotation `g` plus a flat coordinate vector.
//! Fields report the group velocity in body form, `ġ = g·ω`. Two steppers are
//! provided: classical RK4 on the flat chart (matrix entries of `g` included)
//! and a Runge–Kutta–Munthe-Kaas variant that advances `g` by exponentials so
//! it stays on SO(n) up to roundoff.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{exp_so, Rotation, SkewMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub group: Option<Rotation>,
    pub flat: DVector<f64>,
}

impl PhaseState {
    pub fn flat(flat: DVector<f64>) -> Self {
        Self { group: None, flat }
    }

    pub fn with_group(group: Rotation, flat: DVector<f64>) -> Self {
        Self {
            group: Some(group),
            flat,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flat.iter().all(|v| v.is_finite())
            && self.group.as_ref().is_none_or(Rotation::is_finite)
    }

    /// Group entries (row-major) followed by the flat coordinates.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(g) = &self.group {
            let m = g.as_matrix();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.push(m[(i, j)]);
                }
            }
        }
        out.extend(self.flat.iter());
        out
    }
}

/// Time derivative of a [`PhaseState`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRate {
    /// `ω` with `ġ = g·ω`; `None` iff the state has no group component.
    pub body_velocity: Option<SkewMatrix>,
    pub flat: DVector<f64>,
}

/// An autonomous vector field on phase points.
pub trait Flow: Sync {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate>;

    /// Flat coordinates holding a unit vector (the gravity direction), if
    /// any. Used by the optional renormalization.
    fn unit_vector_range(&self) -> Option<Range<usize>> {
        None
    }
}

impl<F: Flow + ?Sized> Flow for &F {
    fn rate(&self, state: &PhaseState) -> Result<PhaseRate> {
        (**self).rate(state)
    }

    fn unit_vector_range(&self) -> Option<Range<usize>> {
        (**self).unit_vector_range()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    LieRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub t_end: f64,
    pub project_gamma: bool,
    pub reorthogonalize_g: bool,
    pub observer_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: 1e-3,
            t_end: 10.0,
            project_gamma: false,
            reorthogonalize_g: false,
            observer_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn new(method: Method, step: f64, t_end: f64) -> Self {
        Self {
            method,
            step,
            t_end,
            ..Self::default()
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.observer_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "integrator.step must be positive, got {}",
                self.step
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "integrator.t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.observer_stride == 0 {
            return Err(Error::InvalidParameter(
                "integrator.observer_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps; `t_end` is rounded to the nearest multiple of `step`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.step).round() as usize
    }
}

fn axpy(base: &DVector<f64>, h: f64, dir: &DVector<f64>) -> DVector<f64> {
    base + dir * h
}

fn group_stage(g: &Rotation, h: f64, dg: &DMatrix<f64>) -> Rotation {
    Rotation::from_matrix_unchecked(g.as_matrix() + dg * h)
}

fn expect_group(rate: &PhaseRate) -> Result<&SkewMatrix> {
    rate.body_velocity
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("field returned no group velocity".into()))
}

/// Classical four-stage Runge–Kutta on the flat chart. A group component is
/// advanced through its matrix entries using `ġ = g·ω`, so it drifts off SO(n)
/// at the truncation-error level.
pub fn rk4_step<F: Flow + ?Sized>(field: &F, state: &PhaseState, h: f64) -> Result<PhaseState> {
    let y = &state.flat;
    let k1 = field.rate(state)?;
    let dg = |s: &PhaseState, r: &PhaseRate| -> Result<Option<DMatrix<f64>>> {
        match &s.group {
            Some(g) => Ok(Some(g.as_matrix() * expect_group(r)?.as_matrix())),
            None => Ok(None),
        }
    };
    let g1 = dg(state, &k1)?;
    let stage = |h: f64, r: &PhaseRate, dgi: &Option<DMatrix<f64>>| PhaseState {
        group: state
            .group
            .as_ref()
            .map(|g| group_stage(g, h, dgi.as_ref().unwrap())),
        flat: axpy(y, h, &r.flat),
    };
    let s2 = stage(0.5 * h, &k1, &g1);
    let k2 = field.rate(&s2)?;
    let g2 = dg(&s2, &k2)?;
    let s3 = stage(0.5 * h, &k2, &g2);
    let k3 = field.rate(&s3)?;
    let g3 = dg(&s3, &k3)?;
    let s4 = stage(h, &k3, &g3);
    let k4 = field.rate(&s4)?;
    let g4 = dg(&s4, &k4)?;

    let flat = y + (&k1.flat + &k2.flat * 2.0 + &k3.flat * 2.0 + &k4.flat) * (h / 6.0);
    let group = match (&state.group, g1, g2, g3, g4) {
        (Some(g), Some(a), Some(b), Some(c), Some(d)) => Some(Rotation::from_matrix_unchecked(
            g.as_matrix() + (a + b * 2.0 + c * 2.0 + d) * (h / 6.0),
        )),
        _ => None,
    };
    Ok(PhaseState { group, flat })
}

/// Inverse of the right-trivialized exponential derivative, truncated after
/// the second commutator: `u̇ = ω + ½[u, ω] + (1/12)[u, [u, ω]]`.
fn dexp_inv(u: &SkewMatrix, w: &SkewMatrix) -> SkewMatrix {
    let uw = u.bracket(w);
    let uuw = u.bracket(&uw);
    &(w + &uw.scale(0.5)) + &uuw.scale(1.0 / 12.0)
}

/// Runge–Kutta–Munthe-Kaas step of order four. The group part moves by
/// `g ← g·exp(Ω̄)` with `Ω̄` the RK4 combination of the stage increments in
/// exponential coordinates; flat coordinates follow the ordinary RK4 tableau.
pub fn lie_rk4_step<F: Flow + ?Sized>(
    field: &F,
    state: &PhaseState,
    h: f64,
) -> Result<PhaseState> {
    let Some(g) = &state.group else {
        return rk4_step(field, state, h);
    };
    let y = &state.flat;

    let r1 = field.rate(state)?;
    let k1 = expect_group(&r1)?.scale(h);

    let u2 = k1.scale(0.5);
    let s2 = PhaseState::with_group(g.compose(&exp_so(&u2)), axpy(y, 0.5 * h, &r1.flat));
    let r2 = field.rate(&s2)?;
    let k2 = dexp_inv(&u2, expect_group(&r2)?).scale(h);

    let u3 = k2.scale(0.5);
    let s3 = PhaseState::with_group(g.compose(&exp_so(&u3)), axpy(y, 0.5 * h, &r2.flat));
    let r3 = field.rate(&s3)?;
    let k3 = dexp_inv(&u3, expect_group(&r3)?).scale(h);

    let s4 = PhaseState::with_group(g.compose(&exp_so(&k3)), axpy(y, h, &r3.flat));
    let r4 = field.rate(&s4)?;
    let k4 = dexp_inv(&k3, expect_group(&r4)?).scale(h);

    let u = (&(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4)).scale(1.0 / 6.0);
    let flat = y + (&r1.flat + &r2.flat * 2.0 + &r3.flat * 2.0 + &r4.flat) * (h / 6.0);
    Ok(PhaseState::with_group(g.compose(&exp_so(&u)), flat))
}

pub fn step<F: Flow + ?Sized>(
    method: Method,
    field: &F,
    state: &PhaseState,
    h: f64,
) -> Result<PhaseState> {
    match method {
        Method::Rk4 => rk4_step(field, state, h),
        Method::LieRk4 => lie_rk4_step(field, state, h),
    }
}

/// A named scalar function of the phase point, sampled along a run.
#[derive(Clone)]
pub struct Observer {
    pub name: String,
    f: Arc<dyn Fn(&PhaseState) -> f64 + Send + Sync>,
}

impl Observer {
    pub fn new(name: impl Into<String>, f: impl Fn(&PhaseState) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, state: &PhaseState) -> f64 {
        (self.f)(state)
    }
}

impl std::fmt::Debug for Observer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observer").field("name", &self.name).finish()
    }
}

/// Snapshots every `observer_stride` steps, starting with the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverSeries {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct IntegrationOutput {
    pub trajectory: Trajectory,
    pub series: Vec<ObserverSeries>,
}

fn post_process<F: Flow + ?Sized>(field: &F, config: &IntegratorConfig, state: &mut PhaseState) {
    if config.project_gamma {
        if let Some(r) = field.unit_vector_range() {
            let norm = state.flat.rows(r.start, r.len()).norm();
            if norm > 0.0 {
                state.flat.rows_mut(r.start, r.len()).scale_mut(1.0 / norm);
            }
        }
    }
    if config.reorthogonalize_g {
        if let Some(g) = &state.group {
            state.group = Some(g.reorthogonalize());
        }
    }
}

/// Fixed-step integration from `t = 0` to `config.t_end`.
///
/// Aborts with [`Error::NonFinite`] at the first step producing a NaN or
/// infinite coordinate.
pub fn integrate<F: Flow + ?Sized>(
    field: &F,
    state0: &PhaseState,
    config: &IntegratorConfig,
    observers: &[Observer],
) -> Result<IntegrationOutput> {
    config.validate()?;
    let steps = config.steps();
    let h = config.step;
    let stride = config.observer_stride;

    let mut times = vec![0.0];
    let mut states = vec![state0.clone()];
    let mut series: Vec<ObserverSeries> = observers
        .iter()
        .map(|o| ObserverSeries {
            name: o.name.clone(),
            values: vec![o.eval(state0)],
        })
        .collect();

    let mut state = state0.clone();
    for k in 1..=steps {
        let t = k as f64 * h;
        state = step(config.method, field, &state, h)?;
        post_process(field, config, &mut state);
        if !state.is_finite() {
            return Err(Error::NonFinite(t));
        }
        if k % stride == 0 {
            for (s, o) in series.iter_mut().zip(observers) {
                s.values.push(o.eval(&state));
            }
            times.push(t);
            states.push(state.clone());
        }
    }
    Ok(IntegrationOutput {
        trajectory: Trajectory { times, states },
        series,
    })
}
