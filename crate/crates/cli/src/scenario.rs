//! Turns a validated [`Config`] into a vector field, an initial phase point,
//! CSV column names and observers.

use std::collections::BTreeMap;

use hessflow_core::dynamics::classical::{
    classical_integrals, ClassicalFlow, ClassicalState, ClassicalTop, HaBranch,
};
use hessflow_core::dynamics::{
    check_ha_condition, divergence_hess4, energy, hess4_integrals, integrals_hess,
    pendulum_energy, pendulum_integrals, BodyParams, EulerPoissonFlow, EulerPoissonState,
    FullState, Hess4Coeffs, Hess4Flow, HessChartState, InertiaOperator, PendulumFlow,
    PendulumState,
};
use hessflow_core::geodesic::{
    constraint_defect, geodesic_energy, grassmann_from_full, grassmann_hamiltonian, momentum_map,
    orbit_energy, spectrum, BTransport, DG4Params, Dg4FullFlow, GeodesicFlow, GrassmannFlow,
    OrbitFlow, OrbitPoint, PerturbationDelta, SectionalOperator,
};
use hessflow_core::integrate::{Flow, Observer, PhaseState};
use hessflow_core::liealg::{wedge_pairs, AdAction, Rotation, SkewMatrix, SymmetricPairSplit, MAX_DIM};
use hessflow_core::sampling::{self, SampleRng};
use hessflow_core::diagnostics::{dg4_observers, dg4_relation, k_relation};
use nalgebra::{DMatrix, DVector, Vector3};

use crate::config::{Config, InitialSpec, Matrix, OperatorSpec, SkewInput, System};
use crate::error::{at, CliError};

/// Added to the scenario seed for the initial-data stream, so that the
/// operator and the initial data are drawn from independent streams.
pub const INITIAL_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Hess–Appel'rot data in Euler–Poisson form, shared by the systems for
/// which the invariant relation `m_𝔨 = 0`, the Lax pair and the pendulum
/// reduction apply.
#[derive(Clone, Debug)]
pub struct HaView {
    pub op: InertiaOperator,
    pub a: f64,
    pub body: BodyParams,
    pub ep0: EulerPoissonState,
    /// A full state `(g, m)` with `γ = e_n` matching `ep0`.
    pub full0: FullState,
}

pub struct Scenario {
    pub config: Config,
    pub system: System,
    pub n: usize,
    pub flow: Box<dyn Flow>,
    pub state0: PhaseState,
    /// Names of [`PhaseState::coordinates`], in order.
    pub columns: Vec<String>,
    pub observers: Vec<Observer>,
    /// Observers that are first integrals of the flow.
    pub conserved: Vec<usize>,
    /// Observer measuring an invariant relation, zero on the invariant set.
    pub relation: Option<usize>,
    pub ha: Option<HaView>,
    pub hess4: Option<Hess4Coeffs>,
    pub dg4: Option<(DG4Params, FullState)>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("system", &self.system)
            .field("n", &self.n)
            .field("columns", &self.columns)
            .field("observers", &self.observers)
            .finish_non_exhaustive()
    }
}

fn pair_label(prefix: &str, n: usize, i: usize, j: usize) -> String {
    if n < 10 {
        format!("{prefix}{}{}", i + 1, j + 1)
    } else {
        format!("{prefix}{}_{}", i + 1, j + 1)
    }
}

fn wedge_labels(prefix: &str, n: usize) -> Vec<String> {
    wedge_pairs(n).into_iter().map(|(i, j)| pair_label(prefix, n, i, j)).collect()
}

fn vector_labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn group_labels(n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(pair_label("R", n, i, j));
        }
    }
    out
}

fn dmatrix(key: &str, rows: &Matrix) -> Result<DMatrix<f64>, CliError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::config(format!("{key}: rows have different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!("{key}: entries must be finite")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn square(key: &str, rows: &Matrix, dim: usize) -> Result<DMatrix<f64>, CliError> {
    let m = dmatrix(key, rows)?;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(CliError::config(format!(
            "{key}: expected a {dim}x{dim} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn skew_rows(key: &str, rows: &Matrix) -> Result<SkewMatrix, CliError> {
    SkewMatrix::from_rows(rows).map_err(at(key))
}

fn skew_input(key: &str, n: usize, input: &SkewInput) -> Result<SkewMatrix, CliError> {
    let m = match input {
        SkewInput::Coords(c) => SkewMatrix::from_coords(n, c).map_err(at(key))?,
        SkewInput::Matrix(rows) => skew_rows(key, rows)?,
    };
    if m.dim() != n {
        return Err(CliError::config(format!("{key}: expected so({n}), got so({})", m.dim())));
    }
    Ok(m)
}

fn vector(key: &str, v: &[f64], len: usize) -> Result<DVector<f64>, CliError> {
    if v.len() != len {
        return Err(CliError::config(format!("{key}: expected {len} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::config(format!("{key}: entries must be finite")));
    }
    Ok(DVector::from_column_slice(v))
}

fn unit(key: &str, v: &[f64], len: usize) -> Result<DVector<f64>, CliError> {
    let v = vector(key, v, len)?;
    let defect = (v.norm() - 1.0).abs();
    if defect > 1e-9 {
        return Err(CliError::config(format!("{key}: must be a unit vector (| |v| - 1 | = {defect:.3e})")));
    }
    Ok(v)
}

fn rotation(key: &str, rows: &Matrix, n: usize) -> Result<Rotation, CliError> {
    Rotation::from_matrix(square(key, rows, n)?).map_err(at(key))
}

/// A rotation whose last row is the unit vector `gamma`: the Householder
/// reflection exchanging `E_n` and `gamma`, with its first row negated.
pub fn rotation_with_last_row(gamma: &DVector<f64>) -> Rotation {
    let n = gamma.len();
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    let v = &e - gamma;
    if v.norm() < 1e-14 {
        return Rotation::identity(n);
    }
    let mut h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    h.row_mut(0).neg_mut();
    Rotation::from_matrix_unchecked(h)
}

/// Parameters merged with the system defaults; unknown keys are rejected.
#[derive(Clone, Debug)]
pub struct Params {
    values: BTreeMap<String, f64>,
    given: BTreeMap<String, f64>,
}

impl Params {
    pub fn resolve(system: System, given: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        let defaults = system.param_defaults();
        let mut values: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in given {
            if !values.contains_key(k) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(CliError::config(format!(
                    "params.{k}: not a parameter of system {} (known: {})",
                    system.name(),
                    if known.is_empty() { "none".to_string() } else { known.join(", ") }
                )));
            }
            if !v.is_finite() {
                return Err(CliError::config(format!("params.{k}: must be finite")));
            }
            values.insert(k.clone(), *v);
        }
        Ok(Self {
            values,
            given: given.clone(),
        })
    }

    pub fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    fn body(&self) -> Result<BodyParams, CliError> {
        BodyParams::new(self.get("rho"), self.get("grav_mass")).map_err(at("params.rho/params.grav_mass"))
    }

    fn dg4(&self) -> Result<DG4Params, CliError> {
        let p = DG4Params {
            a12: self.get("a12"),
            a34: self.get("a34"),
            j1: self.get("j1"),
            j3: self.get("j3"),
            j13: self.get("j13"),
            j24: self.get("j24"),
        };
        p.validate().map_err(at("params"))?;
        Ok(p)
    }
}

/// Which explicit-initial fields a system reads.
fn explicit_fields(system: System) -> &'static [&'static str] {
    match system {
        System::ClassicalHa => &["m", "gamma"],
        System::NdimHa | System::EulerPoissonGeneric => &["m", "gamma", "g"],
        System::Hess4 | System::Lagrange4 => &["m_d", "gamma"],
        System::Pendulum => &["f", "f_dot"],
        System::GeodesicB | System::GeodesicC | System::Dg4Full => &["g", "m"],
        System::Orbit | System::Dg4Grassmann => &["x", "p", "g", "m"],
    }
}

/// Explicit initial data, borrowed field by field.
struct Explicit<'a> {
    m: Option<&'a SkewInput>,
    gamma: Option<&'a Vec<f64>>,
    g: Option<&'a Matrix>,
    m_d: Option<&'a Vec<f64>>,
    f: Option<&'a Vec<f64>>,
    f_dot: Option<&'a Vec<f64>>,
    x: Option<&'a SkewInput>,
    p: Option<&'a SkewInput>,
}

fn required<T>(field: Option<T>, name: &str, system: System) -> Result<T, CliError> {
    field.ok_or_else(|| CliError::config(format!("initial.{name}: required for system {}", system.name())))
}

enum Initial<'a> {
    Random { rng: SampleRng, scale: f64, on_set: bool },
    Explicit(Explicit<'a>),
}

fn initial<'a>(cfg: &'a Config, system: System) -> Result<Initial<'a>, CliError> {
    match &cfg.initial {
        InitialSpec::Random { scale, on_invariant_set } => {
            if !(scale.is_finite() && *scale >= 0.0) {
                return Err(CliError::config("initial.scale: must be finite and non-negative"));
            }
            Ok(Initial::Random {
                rng: sampling::rng(cfg.scenario.seed.wrapping_add(INITIAL_STREAM)),
                scale: *scale,
                on_set: *on_invariant_set,
            })
        }
        InitialSpec::Explicit { m, gamma, g, m_d, f, f_dot, x, p } => {
            let present = [
                ("m", m.is_some()),
                ("gamma", gamma.is_some()),
                ("g", g.is_some()),
                ("m_d", m_d.is_some()),
                ("f", f.is_some()),
                ("f_dot", f_dot.is_some()),
                ("x", x.is_some()),
                ("p", p.is_some()),
            ];
            let allowed = explicit_fields(system);
            if let Some((name, _)) = present.iter().find(|(k, set)| *set && !allowed.contains(k)) {
                return Err(CliError::config(format!(
                    "initial.{name}: not used by system {} (expected {})",
                    system.name(),
                    allowed.join(", ")
                )));
            }
            Ok(Initial::Explicit(Explicit {
                m: m.as_ref(),
                gamma: gamma.as_ref(),
                g: g.as_ref(),
                m_d: m_d.as_ref(),
                f: f.as_ref(),
                f_dot: f_dot.as_ref(),
                x: x.as_ref(),
                p: p.as_ref(),
            }))
        }
    }
}

fn dimension(cfg: &Config, system: System, fixed: Option<usize>, min: usize) -> Result<usize, CliError> {
    let n = match (fixed, cfg.scenario.n) {
        (Some(f), Some(n)) if f != n => {
            return Err(CliError::config(format!(
                "scenario.n: system {} has n = {f}, got {n}",
                system.name()
            )))
        }
        (Some(f), _) => f,
        (None, Some(n)) => n,
        (None, None) => {
            return Err(CliError::config(format!("scenario.n: required for system {}", system.name())))
        }
    };
    if n < min || n > MAX_DIM {
        return Err(CliError::config(format!(
            "scenario.n: system {} needs {min} <= n <= {MAX_DIM}, got {n}",
            system.name()
        )));
    }
    Ok(n)
}

fn no_operator(cfg: &Config, system: System) -> Result<(), CliError> {
    if cfg.operator.is_some() {
        return Err(CliError::config(format!("operator: not used by system {}", system.name())));
    }
    Ok(())
}

fn random_ha(rng: &mut SampleRng, n: usize, a: f64, lo: f64, hi: f64, coupling: f64) -> Result<InertiaOperator, CliError> {
    if !(0.0 < lo && lo <= hi && coupling >= 0.0) {
        return Err(CliError::config("operator: need 0 < lo <= hi and coupling >= 0"));
    }
    let k = (n - 1) * (n - 2) / 2;
    let a_k = sampling::spd(rng, k, lo, hi);
    let b = DMatrix::from_fn(k, n - 1, |_, _| sampling::uniform(rng, coupling));
    InertiaOperator::hess_appelrot(n, a_k, b, a).map_err(at("operator"))
}

/// Operators on so(n) for the Euler–Poisson systems.
fn body_operator(cfg: &Config, n: usize, a: Option<f64>) -> Result<InertiaOperator, CliError> {
    let mut rng = sampling::rng(cfg.scenario.seed);
    let dim = n * (n - 1) / 2;
    let default = if a.is_some() {
        OperatorSpec::RandomHessAppelrot { lo: 0.6, hi: 2.0, coupling: 0.4 }
    } else {
        OperatorSpec::RandomSpd { lo: 0.6, hi: 2.0 }
    };
    match cfg.operator.as_ref().unwrap_or(&default) {
        OperatorSpec::Identity => Ok(InertiaOperator::identity(n)),
        OperatorSpec::Generic { matrix, .. } => {
            InertiaOperator::generic(n, square("operator.matrix", matrix, dim)?).map_err(at("operator.matrix"))
        }
        OperatorSpec::Physical { j } => InertiaOperator::physical(square("operator.j", j, n)?).map_err(at("operator.j")),
        OperatorSpec::HessAppelrot { a_k, b, .. } => {
            let a = a.ok_or_else(|| CliError::config("operator: hess-appelrot needs params.a (use system ndim-ha)"))?;
            let k = (n - 1) * (n - 2) / 2;
            let a_k = square("operator.a_k", a_k, k)?;
            let b = dmatrix("operator.b", b)?;
            if b.nrows() != k || b.ncols() != n - 1 {
                return Err(CliError::config(format!("operator.b: expected a {k}x{} matrix", n - 1)));
            }
            InertiaOperator::hess_appelrot(n, a_k, b, a).map_err(at("operator"))
        }
        OperatorSpec::RandomHessAppelrot { lo, hi, coupling } => {
            let a = a.ok_or_else(|| CliError::config("operator: random-hess-appelrot needs params.a (use system ndim-ha)"))?;
            random_ha(&mut rng, n, a, *lo, *hi, *coupling)
        }
        OperatorSpec::RandomSpd { lo, hi } => {
            if !(0.0 < *lo && lo <= hi) {
                return Err(CliError::config("operator: need 0 < lo <= hi"));
            }
            InertiaOperator::generic(n, sampling::spd(&mut rng, dim, *lo, *hi)).map_err(at("operator"))
        }
        OperatorSpec::Sectional { .. } => Err(CliError::config(
            "operator.kind: sectional operators are used by geodesic-b, geodesic-c and orbit",
        )),
    }
}

struct SectionalData {
    op: SectionalOperator,
    delta: Option<PerturbationDelta>,
    potential: Option<SkewMatrix>,
}

fn sectional(cfg: &Config, system: System) -> Result<SectionalData, CliError> {
    let Some(OperatorSpec::Sectional { a, b, c, delta, potential }) = &cfg.operator else {
        return Err(CliError::config(format!(
            "operator: system {} needs an operator of kind sectional",
            system.name()
        )));
    };
    let a = skew_rows("operator.a", a)?;
    let b = skew_rows("operator.b", b)?;
    let r = AdAction::new(&a).centralizer_dim();
    let c = match c {
        Some(c) => square("operator.c", c, r)?,
        None => DMatrix::identity(r, r),
    };
    let op = SectionalOperator::new(a, b, c).map_err(at("operator"))?;
    let delta = match (delta, system) {
        (Some(d), System::GeodesicC) => {
            let (r, dd) = (op.centralizer_basis().len(), op.complement_basis().len());
            let b = dmatrix("operator.delta.b", &d.b)?;
            if b.nrows() != r || b.ncols() != dd {
                return Err(CliError::config(format!("operator.delta.b: expected a {r}x{dd} matrix")));
            }
            Some(PerturbationDelta {
                b_delta: b,
                c_delta: square("operator.delta.c", &d.c, r)?,
            })
        }
        (None, System::GeodesicC) => {
            return Err(CliError::config("operator.delta: required for system geodesic-c"))
        }
        (Some(_), _) => {
            return Err(CliError::config(format!("operator.delta: not used by system {}", system.name())))
        }
        (None, _) => None,
    };
    let potential = match (potential, system) {
        (Some(v), System::Orbit) => Some(skew_rows("operator.potential", v)?),
        (Some(_), _) => {
            return Err(CliError::config(format!("operator.potential: not used by system {}", system.name())))
        }
        (None, _) => None,
    };
    Ok(SectionalData { op, delta, potential })
}

fn phase_observer<T: 'static>(
    name: impl Into<String>,
    read: impl Fn(&PhaseState) -> hessflow_core::Result<T> + Send + Sync + 'static,
    eval: impl Fn(&T) -> f64 + Send + Sync + 'static,
) -> Observer {
    Observer::new(name, move |s: &PhaseState| read(s).map_or(f64::NAN, |t| eval(&t)))
}

/// Full state from explicit `g` and `m`, or random data. `project` maps the
/// random momentum onto the invariant set when requested.
fn full_state(
    init: &mut Initial<'_>,
    n: usize,
    project: &dyn Fn(SkewMatrix) -> hessflow_core::Result<SkewMatrix>,
    system: System,
) -> Result<FullState, CliError> {
    match init {
        Initial::Random { rng, scale, on_set } => {
            let g = sampling::rotation(rng, n);
            let mut m = sampling::skew(rng, n, *scale);
            if *on_set {
                m = project(m).map_err(at("initial"))?;
            }
            FullState::new(g, m).map_err(at("initial"))
        }
        Initial::Explicit(e) => {
            let g = rotation("initial.g", required(e.g, "g", system)?, n)?;
            let m = skew_input("initial.m", n, required(e.m, "m", system)?)?;
            FullState::new(g, m).map_err(at("initial"))
        }
    }
}

/// Builds the runtime scenario; every configuration error is reported here,
/// before anything is integrated.
pub fn build(config: &Config) -> Result<Scenario, CliError> {
    config.integrator.validate().map_err(|e| CliError::config(e.to_string()))?;
    let system = config.scenario.system;
    let params = Params::resolve(system, &config.params)?;
    let mut init = initial(config, system)?;
    let mut scn = match system {
        System::ClassicalHa => classical(config, &params, &mut init)?,
        System::NdimHa => ndim_ha(config, &params, &mut init)?,
        System::Hess4 | System::Lagrange4 => hess4(config, &params, &mut init, system)?,
        System::Pendulum => pendulum(config, &params, &mut init)?,
        System::EulerPoissonGeneric => generic_ep(config, &params, &mut init)?,
        System::GeodesicB | System::GeodesicC => geodesic(config, &mut init, system)?,
        System::Orbit => orbit(config, &mut init)?,
        System::Dg4Full | System::Dg4Grassmann => dg4(config, &params, &mut init, system)?,
    };
    if scn.columns.len() != scn.state0.coordinates().len() {
        return Err(CliError::config("internal: column layout does not match the state"));
    }
    if !scn.state0.is_finite() {
        return Err(CliError::config("initial: data must be finite"));
    }
    scn.config = config.clone();
    Ok(scn)
}

fn base(config: &Config, system: System, n: usize, flow: Box<dyn Flow>, state0: PhaseState, columns: Vec<String>) -> Scenario {
    Scenario {
        config: config.clone(),
        system,
        n,
        flow,
        state0,
        columns,
        observers: Vec::new(),
        conserved: Vec::new(),
        relation: None,
        ha: None,
        hess4: None,
        dg4: None,
    }
}

fn classical(config: &Config, params: &Params, init: &mut Initial<'_>) -> Result<Scenario, CliError> {
    let system = System::ClassicalHa;
    dimension(config, system, Some(3), 3)?;
    no_operator(config, system)?;
    let branch = match params.get("branch") {
        1.0 => HaBranch::Plus,
        -1.0 => HaBranch::Minus,
        b => return Err(CliError::config(format!("params.branch: must be 1 or -1, got {b}"))),
    };
    let body = params.body()?;
    let top = ClassicalTop::hess_appelrot(
        params.get("a1"),
        params.get("a2"),
        params.get("a3"),
        body.rho,
        body.grav_mass,
        branch,
    )
    .map_err(at("params"))?;
    let cs = match init {
        Initial::Random { rng, scale, on_set } => {
            let mut v = || Vector3::new(sampling::uniform(rng, *scale), sampling::uniform(rng, *scale), sampling::uniform(rng, *scale));
            let raw = v();
            let m = if *on_set { top.r.cross(&raw) / top.r.norm() } else { raw };
            let g = sampling::unit_vector(rng, 3);
            ClassicalState {
                m,
                gamma: Vector3::new(g[0], g[1], g[2]),
            }
        }
        Initial::Explicit(e) => {
            let m = vector("initial.m", coords_of("initial.m", required(e.m, "m", system)?)?, 3)?;
            let g = unit("initial.gamma", required(e.gamma, "gamma", system)?, 3)?;
            ClassicalState {
                m: Vector3::new(m[0], m[1], m[2]),
                gamma: Vector3::new(g[0], g[1], g[2]),
            }
        }
    };

    let rot = top.frame_rotation().map_err(at("params"))?;
    let (op, wbody) = top.rotated().and_then(|t| t.to_wedge()).map_err(at("params"))?;
    let rotated = ClassicalState {
        m: rot * cs.m,
        gamma: rot * cs.gamma,
    };
    let ep0 = rotated.to_euler_poisson();
    let full0 = FullState::new(rotation_with_last_row(&ep0.gamma), ep0.m.clone()).map_err(at("initial"))?;

    let mut columns = vector_labels("m", 3);
    columns.extend(vector_labels("g", 3));
    let mut scn = base(config, system, 3, Box::new(ClassicalFlow { top: top.clone() }), cs.to_phase(), columns);
    scn.observers = (0..4)
        .map(|k| {
            let top = top.clone();
            phase_observer(format!("F{}", k + 1), ClassicalState::from_phase, move |c| classical_integrals(&top, c)[k])
        })
        .collect();
    scn.conserved = vec![0, 1, 2];
    scn.relation = Some(3);
    scn.ha = Some(HaView {
        op,
        a: params.get("a2"),
        body: wbody,
        ep0,
        full0,
    });
    Ok(scn)
}

fn coords_of<'a>(key: &str, input: &'a SkewInput) -> Result<&'a [f64], CliError> {
    match input {
        SkewInput::Coords(c) => Ok(c),
        SkewInput::Matrix(_) => Err(CliError::config(format!("{key}: expected a vector"))),
    }
}

/// Euler–Poisson state with a matching full state.
fn ep_state(
    init: &mut Initial<'_>,
    n: usize,
    on_set_projection: bool,
    system: System,
) -> Result<(EulerPoissonState, FullState), CliError> {
    let pair = SymmetricPairSplit::new(n);
    match init {
        Initial::Random { rng, scale, on_set } => {
            let g = sampling::rotation(rng, n);
            let m = if *on_set && on_set_projection {
                pair.from_d_coords(sampling::vector(rng, n - 1, *scale).as_slice())
            } else {
                sampling::skew(rng, n, *scale)
            };
            let full = FullState::new(g, m).map_err(at("initial"))?;
            Ok((full.to_euler_poisson(), full))
        }
        Initial::Explicit(e) => {
            let m = skew_input("initial.m", n, required(e.m, "m", system)?)?;
            let g = match (e.g, e.gamma) {
                (Some(g), gamma) => {
                    let g = rotation("initial.g", g, n)?;
                    if let Some(gamma) = gamma {
                        let gamma = vector("initial.gamma", gamma, n)?;
                        if (g.row_vector(n - 1) - gamma).amax() > 1e-9 {
                            return Err(CliError::config("initial.gamma: must equal the last row of initial.g"));
                        }
                    }
                    g
                }
                (None, Some(gamma)) => rotation_with_last_row(&unit("initial.gamma", gamma, n)?),
                (None, None) => return Err(CliError::config(format!("initial.gamma: required for system {}", system.name()))),
            };
            let full = FullState::new(g, m).map_err(at("initial"))?;
            Ok((full.to_euler_poisson(), full))
        }
    }
}

fn ep_columns(n: usize) -> Vec<String> {
    let mut columns = wedge_labels("m", n);
    columns.extend(vector_labels("g", n));
    columns
}

fn ndim_ha(config: &Config, params: &Params, init: &mut Initial<'_>) -> Result<Scenario, CliError> {
    let system = System::NdimHa;
    let n = dimension(config, system, None, 3)?;
    let body = params.body()?;
    let explicit_a = params.given.contains_key("a");
    let ha_kind = matches!(
        config.operator,
        None | Some(OperatorSpec::HessAppelrot { .. }) | Some(OperatorSpec::RandomHessAppelrot { .. })
    );
    let op = body_operator(config, n, Some(params.get("a")))?;
    let a = if ha_kind {
        params.get("a")
    } else {
        match check_ha_condition(&op) {
            (true, Some(a)) if !explicit_a || (a - params.get("a")).abs() <= 1e-10 * a.abs().max(1.0) => a,
            (true, Some(a)) => {
                return Err(CliError::config(format!(
                    "params.a: the operator has a = {a}, but params.a = {}",
                    params.get("a")
                )))
            }
            _ => return Err(CliError::config("operator: does not satisfy the Hess-Appel'rot condition")),
        }
    };
    let eps = params.get("epsilon");
    let op = if eps != 0.0 {
        let mut d = DMatrix::zeros(n - 1, n - 1);
        d[(0, 0)] = eps;
        op.with_d_block_perturbation(&d).map_err(at("params.epsilon"))?
    } else {
        op
    };
    let (ep0, full0) = ep_state(init, n, true, system)?;
    let flow = EulerPoissonFlow { op: op.clone(), params: body };
    let mut scn = base(config, system, n, Box::new(flow), ep0.to_phase(), ep_columns(n));
    let read = move |s: &PhaseState| EulerPoissonState::from_phase(n, s);
    let op_e = op.clone();
    scn.observers = vec![phase_observer("energy", read, move |s| energy(s, &op_e, &body))];
    for k in 0..3 {
        scn.observers.push(phase_observer(format!("F{}", k + 1), read, move |s| {
            let f = integrals_hess(&HessChartState::from_euler_poisson(s), a, &body);
            [f.0, f.1, f.2][k]
        }));
    }
    scn.observers.push(k_relation(n));
    scn.conserved = vec![0, 1, 2, 3];
    scn.relation = Some(4);
    scn.ha = Some(HaView { op, a, body, ep0, full0 });
    Ok(scn)
}

fn hess4(config: &Config, params: &Params, init: &mut Initial<'_>, system: System) -> Result<Scenario, CliError> {
    let n = dimension(config, system, Some(4), 4)?;
    no_operator(config, system)?;
    let body = params.body()?;
    let coeffs = if system == System::Lagrange4 {
        let a1 = params.get("a1");
        Hess4Coeffs { a1, a2: a1, a3: a1, a: params.get("a"), b1: 0.0, b2: 0.0, b3: 0.0 }
    } else {
        Hess4Coeffs {
            a1: params.get("a1"),
            a2: params.get("a2"),
            a3: params.get("a3"),
            a: params.get("a"),
            b1: params.get("b1"),
            b2: params.get("b2"),
            b3: params.get("b3"),
        }
    };
    let op = coeffs.operator().map_err(at("params"))?;
    let chart = match init {
        Initial::Random { rng, scale, .. } => {
            HessChartState::new(sampling::vector(rng, 3, *scale), sampling::unit_vector(rng, 4)).map_err(at("initial"))?
        }
        Initial::Explicit(e) => HessChartState::new(
            vector("initial.m_d", required(e.m_d, "m_d", system)?, 3)?,
            unit("initial.gamma", required(e.gamma, "gamma", system)?, 4)?,
        )
        .map_err(at("initial"))?,
    };
    let ep0 = chart.to_euler_poisson();
    let full0 = FullState::new(rotation_with_last_row(&ep0.gamma), ep0.m.clone()).map_err(at("initial"))?;

    let mut columns = vec!["m14".to_string(), "m24".into(), "m34".into()];
    columns.extend(vector_labels("g", 4));
    let mut scn = base(config, system, n, Box::new(Hess4Flow { coeffs, params: body }), chart.to_phase(), columns);
    let read = |s: &PhaseState| HessChartState::from_phase(4, s).and_then(|c| hess4_integrals(&c));
    scn.observers = vec![
        phase_observer("F12", read, |f| f.0),
        phase_observer("F13", read, |f| f.1),
        phase_observer("F23", read, |f| f.2),
        phase_observer(
            "div",
            move |s: &PhaseState| HessChartState::from_phase(4, s).and_then(|c| divergence_hess4(&c, &coeffs)),
            |d| *d,
        ),
    ];
    scn.conserved = vec![0, 1, 2];
    scn.ha = Some(HaView { op, a: coeffs.a, body, ep0, full0 });
    scn.hess4 = Some(coeffs);
    Ok(scn)
}

fn pendulum(config: &Config, params: &Params, init: &mut Initial<'_>) -> Result<Scenario, CliError> {
    let system = System::Pendulum;
    let n = dimension(config, system, None, 2)?;
    no_operator(config, system)?;
    let body = params.body()?;
    let a = params.get("a");
    if !(a > 0.0) {
        return Err(CliError::config("params.a: must be positive"));
    }
    let s0 = match init {
        Initial::Random { rng, scale, .. } => {
            let f = sampling::unit_vector(rng, n);
            let v = sampling::vector(rng, n, *scale);
            let f_dot = &v - &f * f.dot(&v);
            PendulumState::new(f, f_dot).map_err(at("initial"))?
        }
        Initial::Explicit(e) => {
            let f = unit("initial.f", required(e.f, "f", system)?, n)?;
            let f_dot = vector("initial.f_dot", required(e.f_dot, "f_dot", system)?, n)?;
            if f.dot(&f_dot).abs() > 1e-9 {
                return Err(CliError::config("initial.f_dot: must be orthogonal to initial.f"));
            }
            PendulumState::new(f, f_dot).map_err(at("initial"))?
        }
    };
    let flow = PendulumFlow::vertical(n, a, body);
    let e = flow.e.clone();
    let mut columns = vector_labels("F", n);
    columns.extend(vector_labels("dF", n));
    let mut scn = base(config, system, n, Box::new(flow), s0.to_phase(), columns);
    let read = move |s: &PhaseState| PendulumState::from_phase(n, s);
    scn.observers.push(phase_observer("energy", read, move |p| pendulum_energy(p, a, &body, &e)));
    let mut k = 0;
    for i in 0..n - 1 {
        for j in i + 1..n - 1 {
            let idx = k;
            scn.observers.push(phase_observer(pair_label("L", n, i, j), read, move |p| pendulum_integrals(p)[idx]));
            k += 1;
        }
    }
    scn.observers.push(phase_observer("constraint", read, |p| {
        (p.f.norm_squared() - 1.0).hypot(p.f.dot(&p.f_dot))
    }));
    scn.conserved = (0..=k).collect();
    scn.relation = Some(k + 1);
    Ok(scn)
}

fn generic_ep(config: &Config, params: &Params, init: &mut Initial<'_>) -> Result<Scenario, CliError> {
    let system = System::EulerPoissonGeneric;
    let n = dimension(config, system, None, 2)?;
    let body = params.body()?;
    let op = body_operator(config, n, None)?;
    let (ep0, _) = ep_state(init, n, false, system)?;
    let flow = EulerPoissonFlow { op: op.clone(), params: body };
    let mut scn = base(config, system, n, Box::new(flow), ep0.to_phase(), ep_columns(n));
    let read = move |s: &PhaseState| EulerPoissonState::from_phase(n, s);
    scn.observers = vec![
        phase_observer("energy", read, move |s| energy(s, &op, &body)),
        phase_observer("|gamma|^2", read, |s| s.gamma.norm_squared()),
    ];
    scn.conserved = vec![0, 1];
    Ok(scn)
}

fn full_columns(n: usize) -> Vec<String> {
    let mut columns = group_labels(n);
    columns.extend(wedge_labels("m", n));
    columns
}

fn geodesic(config: &Config, init: &mut Initial<'_>, system: System) -> Result<Scenario, CliError> {
    let data = sectional(config, system)?;
    let n = dimension(config, system, Some(data.op.dim()), 2)?;
    let op = match &data.delta {
        Some(d) => data.op.perturbed(d).map_err(at("operator.delta"))?,
        None => data.op.to_operator().map_err(at("operator"))?,
    };
    let act = AdAction::new(data.op.a());
    let project = |m: SkewMatrix| -> hessflow_core::Result<SkewMatrix> {
        Ok(if system == System::GeodesicC { act.project_complement(&m) } else { m })
    };
    let s0 = full_state(init, n, &project, system)?;
    let mut scn = base(config, system, n, Box::new(GeodesicFlow { op: op.clone() }), s0.to_phase(), full_columns(n));
    let read = move |s: &PhaseState| FullState::from_phase(n, s);
    scn.observers.push(phase_observer("energy", read, move |f| geodesic_energy(f, &op)));
    let sec = data.op.clone();
    if system == System::GeodesicB {
        for k in 0..sec.centralizer_basis().len() {
            let sec = sec.clone();
            scn.observers.push(phase_observer(format!("J{}", k + 1), read, move |f| momentum_map(&sec, &f.m)[k]));
        }
        scn.conserved = (0..scn.observers.len()).collect();
    } else {
        scn.observers.push(phase_observer("|pr_ga xi|", read, move |f| momentum_map(&sec, &f.m).norm()));
        scn.conserved = vec![0];
        scn.relation = Some(1);
    }
    Ok(scn)
}

fn orbit_columns(n: usize) -> Vec<String> {
    let mut columns = wedge_labels("x", n);
    columns.extend(wedge_labels("p", n));
    columns
}

fn orbit_point(init: &mut Initial<'_>, n: usize, a: &SkewMatrix, system: System) -> Result<OrbitPoint, CliError> {
    if let Initial::Explicit(e) = init {
        if e.x.is_some() || e.p.is_some() {
            let x = skew_input("initial.x", n, required(e.x, "x", system)?)?;
            let p = skew_input("initial.p", n, required(e.p, "p", system)?)?;
            let pt = OrbitPoint::new(x, p).map_err(at("initial"))?;
            pt.validate(a).map_err(at("initial"))?;
            return Ok(pt);
        }
    }
    let act = AdAction::new(a);
    let s = full_state(init, n, &|m| Ok(act.project_complement(&m)), system)?;
    let xi = act.project_complement(&s.m);
    OrbitPoint::from_group(&s.g, &xi, a).map_err(at("initial"))
}

fn orbit_defect(n: usize, a: &SkewMatrix) -> Observer {
    let spec0 = spectrum(a);
    phase_observer(
        "orbit defect",
        move |s: &PhaseState| OrbitPoint::from_phase(n, s),
        move |p| {
            let spec = spectrum(&p.x).iter().zip(&spec0).map(|(u, w)| (u - w).abs()).fold(0.0, f64::max);
            spec.max(constraint_defect(p))
        },
    )
}

fn orbit(config: &Config, init: &mut Initial<'_>) -> Result<Scenario, CliError> {
    let system = System::Orbit;
    let data = sectional(config, system)?;
    let n = dimension(config, system, Some(data.op.dim()), 2)?;
    let a = data.op.a().clone();
    let bt = BTransport::fit(&a, data.op.b()).map_err(at("operator.b"))?;
    let pt = orbit_point(init, n, &a, system)?;
    let flow = OrbitFlow {
        n,
        transport: bt.clone(),
        potential: data.potential.clone(),
    };
    let mut scn = base(config, system, n, Box::new(flow), pt.to_phase(), orbit_columns(n));
    let potential = data.potential;
    scn.observers = vec![
        phase_observer("H", move |s: &PhaseState| OrbitPoint::from_phase(n, s), move |p| {
            orbit_energy(p, &bt, potential.as_ref())
        }),
        orbit_defect(n, &a),
    ];
    scn.conserved = vec![0];
    scn.relation = Some(1);
    Ok(scn)
}

fn dg4(config: &Config, params: &Params, init: &mut Initial<'_>, system: System) -> Result<Scenario, CliError> {
    let n = dimension(config, system, Some(4), 4)?;
    no_operator(config, system)?;
    let p = params.dg4()?;
    let zero_pair = |m: SkewMatrix| -> hessflow_core::Result<SkewMatrix> {
        let mut c = m.coords();
        c[0] = 0.0;
        c[5] = 0.0;
        SkewMatrix::from_coord_vector(4, &c)
    };
    if system == System::Dg4Full {
        let s0 = full_state(init, n, &zero_pair, system)?;
        let flow = Dg4FullFlow::new(p).map_err(at("params"))?;
        let mut scn = base(config, system, n, Box::new(flow), s0.to_phase(), full_columns(n));
        scn.observers = dg4_observers(&p).map_err(at("params"))?;
        scn.observers.push(dg4_relation());
        scn.conserved = vec![0, 1];
        scn.relation = Some(2);
        scn.dg4 = Some((p, s0));
        return Ok(scn);
    }
    let a = p.a();
    let (pt, full) = match init {
        Initial::Explicit(e) if e.x.is_some() || e.p.is_some() => (orbit_point(init, n, &a, system)?, None),
        _ => {
            let s0 = full_state(init, n, &zero_pair, system)?;
            (grassmann_from_full(&s0, &p).map_err(at("initial"))?, Some(s0))
        }
    };
    let mut scn = base(config, system, n, Box::new(GrassmannFlow { params: p }), pt.to_phase(), orbit_columns(n));
    scn.observers = vec![
        phase_observer("H", |s: &PhaseState| OrbitPoint::from_phase(4, s), move |q| grassmann_hamiltonian(q, &p)),
        orbit_defect(n, &a),
    ];
    scn.conserved = vec![0];
    scn.relation = Some(1);
    scn.dg4 = full.map(|f| (p, f));
    Ok(scn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_completion_has_the_requested_last_row() {
        let mut r = sampling::rng(3);
        for n in 2..7 {
            let gamma = sampling::unit_vector(&mut r, n);
            let g = rotation_with_last_row(&gamma);
            assert!(g.orthogonality_defect() < 1e-14);
            assert!(g.as_matrix().determinant() > 0.0);
            assert!((g.row_vector(n - 1) - &gamma).amax() < 1e-14);
        }
        let mut e = DVector::zeros(3);
        e[2] = 1.0;
        assert_eq!(rotation_with_last_row(&e), Rotation::identity(3));
    }

    #[test]
    fn labels_follow_the_coordinate_layout() {
        assert_eq!(wedge_labels("m", 3), ["m12", "m13", "m23"]);
        assert_eq!(group_labels(2), ["R11", "R12", "R21", "R22"]);
        assert_eq!(wedge_labels("x", 10)[0], "x1_2");
    }

    #[test]
    fn unknown_params_are_rejected_by_name() {
        let mut given = BTreeMap::new();
        given.insert("b9".to_string(), 1.0);
        let err = Params::resolve(System::Hess4, &given).unwrap_err().to_string();
        assert!(err.contains("params.b9"), "{err}");
    }
}
