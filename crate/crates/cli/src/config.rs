//! JSON experiment configurations.
//!
//! Configurations are plain JSON objects with strict field checking and
//! round-trip fidelity: serializing a parsed configuration and parsing it
//! again yields an equal value. Defaults follow the studies the verbs were
//! built around and are documented per field.

use std::f64::consts::PI;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use nudgefem::mesh::{
    build_channel_mesh, build_cylinder_channel_mesh, build_uniform_tri_mesh, read_tri_mesh,
    CylinderMeshParams, Point2, TriMesh,
};

use crate::CliResult;

/// Where a run's triangulation comes from: one of the built-in generated
/// families, or a mesh file in the plain-text format `gen-mesh` writes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Uniform right-triangle grid on the unit square, `resolution` cells
    /// per side.
    UnitSquare { resolution: usize },
    /// Channel of height 1 between the curves y = sin(x) and y = 1 + sin(x)
    /// for x in [0, 4*pi] (the river demo domain), as an nx-by-ny grid.
    WavyChannel { nx: usize, ny: usize },
    /// Channel [0, 2.2] x [0, 0.41] with a radius-0.05 cylinder at
    /// (0.2, 0.2); `near_h`/`far_h` set the target edge lengths near and
    /// away from the cylinder.
    CylinderChannel { near_h: f64, far_h: f64 },
    /// Read a triangulation from a mesh file.
    File { path: String },
}

impl MeshSpec {
    pub fn build(&self) -> CliResult<TriMesh> {
        match self {
            MeshSpec::UnitSquare { resolution } => Ok(build_uniform_tri_mesh(
                *resolution,
                *resolution,
                (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
            )?),
            MeshSpec::WavyChannel { nx, ny } => {
                Ok(build_channel_mesh(*nx, *ny, (0.0, 4.0 * PI), 1.0, f64::sin)?)
            }
            MeshSpec::CylinderChannel { near_h, far_h } => Ok(build_cylinder_channel_mesh(
                &CylinderMeshParams { near_h: *near_h, far_h: *far_h },
            )?),
            MeshSpec::File { path } => read_mesh_file(Path::new(path)),
        }
    }
}

/// Read a mesh file with a diagnostic that names the missing file.
pub fn read_mesh_file(path: &Path) -> CliResult<TriMesh> {
    if !path.exists() {
        return Err(format!(
            "mesh file not found: {} (generate one with `nudgefem gen-mesh`)",
            path.display()
        )
        .into());
    }
    Ok(read_tri_mesh(path)?)
}

/// Uniform sampling raster for field snapshots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterSpec {
    pub nx: usize,
    pub ny: usize,
}

/// Transport wind for the river demo: either a steady Stokes solve on the
/// same mesh, or a velocity field file written by the `stokes` verb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindSpec {
    Stokes {
        #[serde(default = "d_viscosity_river")]
        viscosity: f64,
        #[serde(default = "d_inflow_speed")]
        inflow_speed: f64,
    },
    File { path: String },
}

/// `interp-check`: sampling-interpolant accuracy over probe fields and a
/// ladder of observation cell widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpCheckConfig {
    pub mesh: MeshSpec,
    /// Polynomial degree of the probed space (1 or 2).
    #[serde(default = "d_degree")]
    pub degree: usize,
    /// Probe field names; see the registry in `probes.rs`.
    pub probes: Vec<String>,
    /// Observation cell widths, coarsest to finest.
    pub cover_widths: Vec<f64>,
    /// Echoed into the manifest; reserved for randomized checks.
    #[serde(default)]
    pub seed: u64,
}

/// `conv-rate`: manufactured-solution convergence ladder. The exact
/// solution sin(x + y + t) is transported with unit wind and diffusivity;
/// each level uses h = 1/resolution, observation width 4h and a time step
/// tied to h^{3/2} so the spatial error dominates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvRateConfig {
    /// Cells per side of the unit square at each level (h = 1/resolution).
    pub mesh_resolutions: Vec<usize>,
    #[serde(default = "d_final_time_conv")]
    pub final_time: f64,
    /// Time step dt = dt_factor * h^{3/2}, rounded so the run lands on the
    /// final time exactly.
    #[serde(default = "d_dt_factor")]
    pub dt_factor: f64,
    /// Observation width as a multiple of h.
    #[serde(default = "d_cover_ratio")]
    pub cover_ratio: usize,
    #[serde(default = "d_mu_one")]
    pub mu: f64,
    #[serde(default = "d_diffusivity_one")]
    pub diffusivity: f64,
    #[serde(default)]
    pub seed: u64,
}

/// `mu-sweep`: error versus time for a grid of feedback strengths and
/// observation widths on the manufactured transport problem, started from
/// zero data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuSweepConfig {
    /// Cells per side of the unit square (h = 1/resolution).
    #[serde(default = "d_resolution_sweep")]
    pub mesh_resolution: usize,
    #[serde(default = "d_dt_sweep")]
    pub dt: f64,
    #[serde(default = "d_viscosity_river")]
    pub diffusivity: f64,
    pub final_time: f64,
    /// Feedback strengths; 0 is the unforced baseline.
    pub mu_values: Vec<f64>,
    /// Observation grid resolutions (width H = 1/resolution each).
    pub cover_resolutions: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

/// `transport-demo`: contaminant transport in a wavy river channel. A
/// reference run spreads two contaminant blobs with the configured wind;
/// assimilation runs then start from zero data and track it through
/// observations on a crude rectangular cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportDemoConfig {
    pub mesh_file: String,
    pub velocity: WindSpec,
    #[serde(default = "d_viscosity_river")]
    pub diffusivity: f64,
    #[serde(default = "d_dt_demo")]
    pub dt: f64,
    #[serde(default = "d_final_time_demo")]
    pub final_time: f64,
    /// Feedback strengths; 0 keeps the assimilated run at zero data.
    #[serde(default = "d_mu_values_demo")]
    pub mu_values: Vec<f64>,
    /// Width of the rectangular observation cover intersected with the
    /// channel.
    #[serde(default = "d_cover_width_demo")]
    pub cover_width: f64,
    /// Times at which reference-field raster snapshots are written
    /// (rounded to the step grid).
    #[serde(default = "d_snapshot_times_demo")]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "d_raster_demo")]
    pub raster: RasterSpec,
    #[serde(default)]
    pub seed: u64,
}

/// `stokes`: steady Stokes wind generator for the river demo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StokesConfig {
    pub mesh_file: String,
    #[serde(default = "d_viscosity_river")]
    pub viscosity: f64,
    #[serde(default = "d_inflow_speed")]
    pub inflow_speed: f64,
    /// Optional speed-magnitude snapshot of the solved field.
    #[serde(default)]
    pub raster: Option<RasterSpec>,
    #[serde(default)]
    pub seed: u64,
}

/// `gen-mesh`: write a generated triangulation to a mesh file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenMeshConfig {
    pub mesh: MeshSpec,
    #[serde(default = "d_mesh_file_name")]
    pub file_name: String,
    #[serde(default)]
    pub seed: u64,
}

/// `cylinder dns`: reference flow past the cylinder from rest, archiving
/// every state from the assimilation start time onward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderDnsConfig {
    pub mesh: MeshSpec,
    #[serde(default = "d_viscosity_cylinder")]
    pub viscosity: f64,
    #[serde(default = "d_dt_cylinder")]
    pub dt: f64,
    #[serde(default = "d_final_time_cylinder")]
    pub final_time: f64,
    /// Archive states from this time onward so an assimilating run can
    /// start here.
    #[serde(default = "d_assimilation_start")]
    pub assimilation_start: f64,
    #[serde(default)]
    pub seed: u64,
}

/// `cylinder da`: assimilation against an archived reference, one run per
/// observation width. Time step and viscosity are taken from the archive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderDaConfig {
    /// Must rebuild the discretization the archive was produced on; the
    /// archive's mesh fingerprint is checked.
    pub mesh: MeshSpec,
    /// Directory holding the archived reference states (the `archive/`
    /// subdirectory of a `cylinder dns` run).
    pub archive_dir: String,
    #[serde(default = "d_mu_cylinder")]
    pub mu: f64,
    /// Observation cover widths, one assimilation run each.
    pub cover_widths: Vec<f64>,
    /// Stop time; defaults to the end of the archive.
    #[serde(default)]
    pub end_time: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn d_degree() -> usize {
    2
}
fn d_final_time_conv() -> f64 {
    5.0
}
fn d_dt_factor() -> f64 {
    0.9051
}
fn d_cover_ratio() -> usize {
    4
}
fn d_mu_one() -> f64 {
    1.0
}
fn d_diffusivity_one() -> f64 {
    1.0
}
fn d_resolution_sweep() -> usize {
    32
}
fn d_dt_sweep() -> f64 {
    0.01
}
fn d_viscosity_river() -> f64 {
    0.01
}
fn d_inflow_speed() -> f64 {
    3.0
}
fn d_dt_demo() -> f64 {
    0.02
}
fn d_final_time_demo() -> f64 {
    4.0
}
fn d_mu_values_demo() -> Vec<f64> {
    vec![0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]
}
fn d_cover_width_demo() -> f64 {
    2.0
}
fn d_snapshot_times_demo() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.5, 4.0]
}
fn d_raster_demo() -> RasterSpec {
    RasterSpec { nx: 200, ny: 50 }
}
fn d_mesh_file_name() -> String {
    "mesh.tri".to_string()
}
fn d_viscosity_cylinder() -> f64 {
    0.001
}
fn d_dt_cylinder() -> f64 {
    0.005
}
fn d_final_time_cylinder() -> f64 {
    10.0
}
fn d_assimilation_start() -> f64 {
    5.0
}
fn d_mu_cylinder() -> f64 {
    10.0
}

/// Parse a configuration file with strict field checking.
pub fn load<C: DeserializeOwned>(path: &Path) -> CliResult<C> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read configuration {}: {e}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| format!("invalid configuration {}: {e}", path.display()).into())
}

/// Guard for list-valued parameters that must name at least one point.
pub fn require_nonempty<T>(list: &[T], what: &str) -> CliResult<()> {
    if list.is_empty() {
        return Err(format!("{what} must not be empty").into());
    }
    Ok(())
}
