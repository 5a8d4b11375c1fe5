//! Built-in scenarios, one per system.

use serde_json::{json, Value};

use crate::config::System;

fn integrator(method: &str, step: f64, t_end: f64, stride: usize) -> Value {
    json!({ "method": method, "step": step, "t_end": t_end, "observer_stride": stride })
}

fn random(scale: f64) -> Value {
    json!({ "kind": "random", "scale": scale, "on_invariant_set": true })
}

fn skew4(m12: f64, m34: f64) -> Value {
    json!([
        [0.0, m12, 0.0, 0.0],
        [-m12, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, m34],
        [0.0, 0.0, -m34, 0.0]
    ])
}

fn skew5(m12: f64, m34: f64) -> Value {
    json!([
        [0.0, m12, 0.0, 0.0, 0.0],
        [-m12, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, m34, 0.0],
        [0.0, 0.0, -m34, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0]
    ])
}

fn params(system: System, overrides: &[(&str, f64)]) -> Value {
    let mut map = serde_json::Map::new();
    for (k, v) in system.param_defaults() {
        map.insert(k.to_string(), json!(v));
    }
    for (k, v) in overrides {
        map.insert(k.to_string(), json!(v));
    }
    Value::Object(map)
}

pub fn names() -> Vec<&'static str> {
    System::ALL.iter().map(|s| s.name()).collect()
}

/// The preset configuration document for a system name.
pub fn preset(name: &str) -> Option<Value> {
    let system = System::ALL.into_iter().find(|s| s.name() == name)?;
    let (n, operator, params, initial, integ, suite): (Option<usize>, Option<Value>, Value, Value, Value, Value) = match system {
        System::ClassicalHa => (
            Some(3),
            None,
            params(system, &[("rho", 0.8), ("grav_mass", 1.3)]),
            random(1.0),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance", "lax", "spectral"]),
        ),
        System::NdimHa => (
            Some(5),
            Some(json!({ "kind": "random-hess-appelrot", "lo": 0.6, "hi": 2.0, "coupling": 0.4 })),
            params(system, &[("rho", 0.9), ("grav_mass", 1.2)]),
            random(0.8),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance", "lax", "spectral", "reduce-pendulum"]),
        ),
        System::Hess4 => (
            Some(4),
            None,
            params(system, &[("grav_mass", 1.2)]),
            random(0.8),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["invariance", "lax", "spectral"]),
        ),
        System::Lagrange4 => (
            Some(4),
            None,
            params(system, &[("grav_mass", 1.2)]),
            random(0.8),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance", "lax", "measure"]),
        ),
        System::Pendulum => (
            Some(4),
            None,
            params(system, &[("rho", 0.8), ("grav_mass", 1.1)]),
            random(0.8),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance"]),
        ),
        System::EulerPoissonGeneric => (
            Some(4),
            Some(json!({ "kind": "random-spd", "lo": 0.6, "hi": 2.0 })),
            params(system, &[]),
            random(0.8),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation"]),
        ),
        System::GeodesicB => (
            Some(4),
            Some(json!({
                "kind": "sectional",
                "a": skew4(1.3, 0.4),
                "b": skew4(1.95, 0.6),
                "c": [[1.0, 0.2], [0.2, 1.4]]
            })),
            params(system, &[]),
            random(0.7),
            integrator("lie-rk4", 1e-3, 10.0, 10),
            json!(["conservation"]),
        ),
        System::GeodesicC => (
            Some(4),
            Some(json!({
                "kind": "sectional",
                "a": skew4(1.3, 0.4),
                "b": skew4(1.95, 0.6),
                "c": [[1.0, 0.2], [0.2, 1.4]],
                "delta": {
                    "b": [[0.0, 0.3, 0.0, 0.0], [0.0, 0.0, -0.25, 0.0]],
                    "c": [[0.2, 0.0], [0.0, 0.0]]
                }
            })),
            params(system, &[]),
            random(0.6),
            integrator("lie-rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance"]),
        ),
        System::Orbit => (
            Some(5),
            Some(json!({
                "kind": "sectional",
                "a": skew5(1.4, 0.5),
                "b": skew5(1.96, 0.25)
            })),
            params(system, &[]),
            random(0.6),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance"]),
        ),
        System::Dg4Full => (
            Some(4),
            None,
            params(system, &[]),
            random(0.8),
            integrator("lie-rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance", "reduce-grassmann"]),
        ),
        System::Dg4Grassmann => (
            Some(4),
            None,
            params(system, &[]),
            random(0.8),
            integrator("rk4", 1e-3, 10.0, 10),
            json!(["conservation", "invariance", "reduce-grassmann"]),
        ),
    };
    let mut doc = json!({
        "scenario": { "name": name, "system": name, "n": n, "seed": 1, "suite": suite },
        "params": params,
        "initial": initial,
        "integrator": integ,
        "output": { "dir": format!("hessflow-out/{name}") }
    });
    if let Some(op) = operator {
        doc["operator"] = op;
    }
    Some(doc)
}
