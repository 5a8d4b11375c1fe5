//! Scenario configuration: one JSON object with the keys `scenario`,
//! `operator`, `params`, `initial`, `integrator` and `output`.

use std::collections::BTreeMap;
use std::path::Path;

use hessflow_core::integrate::IntegratorConfig;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub type Matrix = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub system: System,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, deserialize_with = "one_or_many")]
    pub suite: Vec<Suite>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    ClassicalHa,
    NdimHa,
    Hess4,
    Lagrange4,
    Pendulum,
    EulerPoissonGeneric,
    GeodesicB,
    GeodesicC,
    Orbit,
    Dg4Full,
    Dg4Grassmann,
}

impl System {
    pub const ALL: [System; 11] = [
        System::ClassicalHa,
        System::NdimHa,
        System::Hess4,
        System::Lagrange4,
        System::Pendulum,
        System::EulerPoissonGeneric,
        System::GeodesicB,
        System::GeodesicC,
        System::Orbit,
        System::Dg4Full,
        System::Dg4Grassmann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            System::ClassicalHa => "classical-ha",
            System::NdimHa => "ndim-ha",
            System::Hess4 => "hess4",
            System::Lagrange4 => "lagrange4",
            System::Pendulum => "pendulum",
            System::EulerPoissonGeneric => "euler-poisson-generic",
            System::GeodesicB => "geodesic-b",
            System::GeodesicC => "geodesic-c",
            System::Orbit => "orbit",
            System::Dg4Full => "dg4-full",
            System::Dg4Grassmann => "dg4-grassmann",
        }
    }

    /// Recognized `params` keys with their defaults.
    pub fn param_defaults(self) -> &'static [(&'static str, f64)] {
        const BODY: [(&str, f64); 2] = [("rho", 1.0), ("grav_mass", 1.0)];
        match self {
            System::ClassicalHa => &[
                ("rho", 1.0),
                ("grav_mass", 1.0),
                ("a1", 1.0),
                ("a2", 1.6),
                ("a3", 2.5),
                ("branch", 1.0),
            ],
            System::NdimHa => &[("rho", 1.0), ("grav_mass", 1.0), ("a", 1.3), ("epsilon", 0.0)],
            System::Hess4 => &[
                ("rho", 1.0),
                ("grav_mass", 1.0),
                ("a1", 0.9),
                ("a2", 1.4),
                ("a3", 2.1),
                ("a", 1.2),
                ("b1", 0.3),
                ("b2", -0.2),
                ("b3", 0.25),
            ],
            System::Lagrange4 => &[("rho", 1.0), ("grav_mass", 1.0), ("a1", 1.4), ("a", 1.2)],
            System::Pendulum => &[("rho", 1.0), ("grav_mass", 1.0), ("a", 1.25)],
            System::EulerPoissonGeneric => &BODY,
            System::GeodesicB | System::GeodesicC | System::Orbit => &[],
            System::Dg4Full | System::Dg4Grassmann => &[
                ("a12", 1.2),
                ("a34", 0.5),
                ("j1", 1.0),
                ("j3", 1.6),
                ("j13", 0.2),
                ("j24", -0.15),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Invariance,
    Conservation,
    Lax,
    Spectral,
    ReducePendulum,
    ReduceGrassmann,
    Measure,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Invariance => "invariance",
            Suite::Conservation => "conservation",
            Suite::Lax => "lax",
            Suite::Spectral => "spectral",
            Suite::ReducePendulum => "reduce-pendulum",
            Suite::ReduceGrassmann => "reduce-grassmann",
            Suite::Measure => "measure",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
            CliError::config(format!(
                "unknown suite '{s}' (expected one of invariance, conservation, lax, spectral, \
                 reduce-pendulum, reduce-grassmann, measure)"
            ))
        })
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Suite>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Suite),
        Many(Vec<Suite>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

/// Declared ordering of wedge-basis matrices. Only the lexicographic order
/// `(12, 13, …, 1n, 23, …)` is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    #[serde(rename = "lex-wedge")]
    LexWedge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    /// Full symmetric matrix of `A` on so(n).
    Generic { basis: Basis, matrix: Matrix },
    /// Mass tensor `J`; the operator is the inverse of `m ↦ Jm + mJ`.
    Physical { j: Matrix },
    /// Blocks `A_𝔨` (on `so(n−1)`) and `B : 𝔡 → 𝔨`; the 𝔡 block is `a·Id`
    /// with `a` taken from `params.a`.
    HessAppelrot { basis: Basis, a_k: Matrix, b: Matrix },
    /// Seeded Hess–Appel'rot operator: `A_𝔨` with eigenvalues in `[lo, hi]`,
    /// entries of `B` uniform in `[−coupling, coupling]`.
    RandomHessAppelrot {
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
        #[serde(default = "default_coupling")]
        coupling: f64,
    },
    /// Seeded symmetric positive-definite operator with eigenvalues in `[lo, hi]`.
    RandomSpd {
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
    },
    /// Sectional operator `A_{a,b,C}` given by n×n skew matrices `a`, `b` and
    /// `C` on the centralizer of `a`. `delta` perturbs it to `A_{a,b,C,δ}`;
    /// `potential` adds `V(x) = ⟨potential, x⟩` to the reduced orbit flow.
    Sectional {
        a: Matrix,
        b: Matrix,
        #[serde(default)]
        c: Option<Matrix>,
        #[serde(default)]
        delta: Option<DeltaSpec>,
        #[serde(default)]
        potential: Option<Matrix>,
    },
}

fn default_lo() -> f64 {
    0.6
}

fn default_hi() -> f64 {
    2.0
}

fn default_coupling() -> f64 {
    0.4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSpec {
    /// `B_δ : 𝔡 → 𝔤_a`, rows indexed by the centralizer basis.
    pub b: Matrix,
    /// Symmetric `C_δ` on `𝔤_a`.
    pub c: Matrix,
}

/// A skew-symmetric matrix given either as its full row-major array or as
/// lexicographic wedge coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SkewInput {
    Coords(Vec<f64>),
    Matrix(Matrix),
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Uniform on coordinate boxes of half-width `scale`, then projected to
    /// the constraints of the system. With `on_invariant_set` the data are
    /// also projected onto the invariant relation of the system, if any.
    Random {
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default = "default_true")]
        on_invariant_set: bool,
    },
    /// Explicit data; which fields are required depends on the system.
    Explicit {
        #[serde(default)]
        m: Option<SkewInput>,
        #[serde(default)]
        gamma: Option<Vec<f64>>,
        #[serde(default)]
        g: Option<Matrix>,
        #[serde(default)]
        m_d: Option<Vec<f64>>,
        #[serde(default)]
        f: Option<Vec<f64>>,
        #[serde(default)]
        f_dot: Option<Vec<f64>>,
        #[serde(default)]
        x: Option<SkewInput>,
        #[serde(default)]
        p: Option<SkewInput>,
    },
}

fn default_scale() -> f64 {
    0.8
}

fn default_true() -> bool {
    true
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self::Random {
            scale: default_scale(),
            on_invariant_set: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "hessflow-out".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Parses a configuration document; errors name the offending key.
pub fn from_value(value: Value) -> Result<Config, CliError> {
    let cfg: Config = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::config(e.into_inner().to_string())
        } else {
            CliError::config(format!("{path}: {}", e.into_inner()))
        }
    })?;
    Ok(cfg)
}

pub fn read_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Parses the right-hand side of `--set key=value`: JSON if it parses,
/// otherwise a bare string.
pub fn parse_override(spec: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override '{spec}' is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::config(format!("override '{spec}' has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Sets a dotted path (`integrator.t_end`, `initial.gamma.2`), creating
/// missing object members. Unknown keys are rejected later by the schema.
pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::config(format!("{key}: '{part}' is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::config(format!("{key}: index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::config(format!("{key}: '{part}' does not name a container"))),
        };
    }
    Ok(())
}

/// Whether a dotted path names an existing entry, counting recognized
/// `params` keys of the system as present.
pub fn path_exists(root: &Value, key: &str) -> bool {
    if let Some(name) = key.strip_prefix("params.") {
        if let Some(system) = root
            .pointer("/scenario/system")
            .and_then(|v| serde_json::from_value::<System>(v.clone()).ok())
        {
            if system.param_defaults().iter().any(|(k, _)| *k == name) {
                return true;
            }
        }
    }
    let mut cur = root;
    for part in key.split('.') {
        cur = match cur {
            Value::Object(map) => match map.get(part) {
                Some(v) => v,
                None => return false,
            },
            Value::Array(items) => match part.parse::<usize>().ok().and_then(|i| items.get(i)) {
                Some(v) => v,
                None => return false,
            },
            _ => return false,
        };
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({ "scenario": { "name": "t", "system": "pendulum", "n": 3 } })
    }

    #[test]
    fn defaults_fill_in() {
        let c = from_value(minimal()).unwrap();
        assert_eq!(c.integrator, IntegratorConfig::default());
        assert_eq!(c.initial, InitialSpec::default());
        assert!(c.scenario.suite.is_empty());
    }

    #[test]
    fn suite_accepts_string_or_list() {
        let mut v = minimal();
        set_path(&mut v, "scenario.suite", json!("lax")).unwrap();
        assert_eq!(from_value(v.clone()).unwrap().scenario.suite, vec![Suite::Lax]);
        set_path(&mut v, "scenario.suite", json!(["lax", "measure"])).unwrap();
        assert_eq!(from_value(v).unwrap().scenario.suite, vec![Suite::Lax, Suite::Measure]);
    }

    #[test]
    fn errors_name_the_offending_key() {
        let mut v = minimal();
        set_path(&mut v, "integrator.stepp", json!(0.1)).unwrap();
        let msg = from_value(v).unwrap_err().to_string();
        assert!(msg.contains("integrator") && msg.contains("stepp"), "{msg}");

        let mut v = minimal();
        set_path(&mut v, "scenario.system", json!("nope")).unwrap();
        let msg = from_value(v).unwrap_err().to_string();
        assert!(msg.contains("scenario.system"), "{msg}");
    }

    #[test]
    fn overrides_parse_json_or_string() {
        assert_eq!(parse_override("a.b=0.5").unwrap(), ("a.b".into(), json!(0.5)));
        assert_eq!(parse_override("a=lie-rk4").unwrap().1, json!("lie-rk4"));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn set_path_indexes_arrays() {
        let mut v = json!({ "x": [1, 2, 3] });
        set_path(&mut v, "x.1", json!(9)).unwrap();
        assert_eq!(v, json!({ "x": [1, 9, 3] }));
        assert!(set_path(&mut v, "x.7", json!(0)).is_err());
    }

    #[test]
    fn params_of_the_system_exist() {
        let v = minimal();
        assert!(path_exists(&v, "params.a"));
        assert!(!path_exists(&v, "params.b1"));
        assert!(path_exists(&v, "scenario.n"));
        assert!(!path_exists(&v, "integrator.step"));
    }
}
