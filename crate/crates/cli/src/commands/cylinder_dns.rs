//! `cylinder dns`: reference flow past the cylinder.
//!
//! The flow starts from rest and is driven by a parabolic profile imposed
//! at both the inflow and the outflow (all-Dirichlet mode with a zero-mean
//! pressure gauge). Every state from the assimilation start time onward is
//! archived; lift/drag on the cylinder and kinetic energy are recorded at
//! every step.

use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::build_fe_space;
use nudgefem::mesh::{
    BoundaryTag, Point2, TAG_CYLINDER, TAG_INFLOW, TAG_OUTFLOW, TAG_WALL,
};
use nudgefem::nse::{run_dns, DnsConfig, FlowConfig, MixedSpace};

use crate::commands::{mesh_bbox, steps_for};
use crate::config::{self, CylinderDnsConfig};
use crate::outdir::{csv, num, OutDir};
use crate::CliResult;

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: CylinderDnsConfig = config::load(config_path)?;
    if !(cfg.assimilation_start >= 0.0 && cfg.assimilation_start <= cfg.final_time) {
        return Err("assimilation_start must lie within [0, final_time]".into());
    }

    let mesh = Arc::new(cfg.mesh.build()?);
    let (lo, hi) = mesh_bbox(&mesh);
    let height = hi.y - lo.y;
    let velocity = build_fe_space(
        mesh.clone(),
        2,
        2,
        &[TAG_INFLOW, TAG_OUTFLOW, TAG_WALL, TAG_CYLINDER],
    )?;
    let pressure = build_fe_space(mesh.clone(), 1, 1, &[])?;
    let mixed = MixedSpace::new(velocity, pressure, true)?;

    let n_steps = steps_for(cfg.final_time, cfg.dt);
    let archive_from_step = (cfg.assimilation_start / cfg.dt).round() as usize;
    let bc = move |p: Point2, _t: f64, tag: BoundaryTag| -> [f64; 2] {
        channel_profile(p, tag, lo.y, height)
    };

    let dns_cfg = DnsConfig {
        flow: FlowConfig { viscosity: cfg.viscosity, dt: cfg.dt, skew: true },
        n_steps,
        archive_from_step,
        probe_surface: Some(TAG_CYLINDER),
    };
    let mut dir = OutDir::create(out)?;
    let output = run_dns(&mixed, &dns_cfg, &bc, None, Some(&dir.path("archive")))?;

    let force_rows: Vec<Vec<String>> = output
        .forces
        .iter()
        .map(|f| vec![num(f.t), num(f.drag), num(f.lift)])
        .collect();
    dir.write_file("forces.csv", &csv("t,cd,cl", &force_rows))?;
    let energy_rows: Vec<Vec<String>> = output
        .kinetic_energy
        .iter()
        .map(|&(t, ke)| vec![num(t), num(ke)])
        .collect();
    dir.write_file("kinetic_energy.csv", &csv("t,kinetic_energy", &energy_rows))?;
    dir.register_tree("archive")?;
    dir.finish("cylinder-dns", &cfg)
}

/// Parabolic velocity profile spanning the channel height, peak 1.5 times
/// the mean, imposed at the inflow and outflow; solid boundaries are
/// no-slip.
pub fn channel_profile(p: Point2, tag: BoundaryTag, floor: f64, height: f64) -> [f64; 2] {
    if tag == TAG_INFLOW || tag == TAG_OUTFLOW {
        let y = p.y - floor;
        [6.0 * y * (height - y) / (height * height), 0.0]
    } else {
        [0.0, 0.0]
    }
}
