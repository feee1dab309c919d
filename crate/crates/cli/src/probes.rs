//! Named scalar probe fields for the interpolant accuracy study.
//!
//! Probes are selected by name in the configuration; a fixed registry keeps
//! runs reproducible without a formula parser.

use std::f64::consts::PI;

use nudgefem::mesh::Point2;

use crate::CliResult;

pub struct Probe {
    pub name: &'static str,
    pub field: fn(Point2) -> f64,
}

pub const REGISTRY: &[Probe] = &[
    Probe { name: "constant", field: |_| 1.0 },
    Probe { name: "sin-x", field: |p| (2.0 * PI * p.x).sin() },
    Probe { name: "sin-y", field: |p| (2.0 * PI * p.y).sin() },
    Probe { name: "quadratic-bowl", field: |p| p.x * p.x + p.y * p.y },
    Probe { name: "exp-diag", field: |p| (p.x - p.y).exp() },
];

pub fn lookup(name: &str) -> CliResult<&'static Probe> {
    REGISTRY.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = REGISTRY.iter().map(|p| p.name).collect();
        format!("unknown probe {name:?}; available probes: {}", known.join(", ")).into()
    })
}
