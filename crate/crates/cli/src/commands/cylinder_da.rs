//! `cylinder da`: assimilation of an archived cylinder reference run.
//!
//! Each configured observation width gets its own run: starting from rest
//! at the archive's first state, the flow is nudged toward the archived
//! velocities on a rectangular observation grid while the velocity error
//! and the lift/drag on the cylinder are recorded. Time step and viscosity
//! come from the archive so the discretizations match exactly.

use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::build_fe_space;
use nudgefem::mesh::{
    build_coarse_cover, BoundaryTag, CoverGrid, Point2, TAG_CYLINDER, TAG_INFLOW, TAG_OUTFLOW,
    TAG_WALL,
};
use nudgefem::nse::archive::ArchiveReader;
use nudgefem::nse::{run_nse_da, DaConfig, DaOutput, FlowConfig, MixedSpace};

use crate::commands::{cylinder_dns::channel_profile, mesh_bbox};
use crate::config::{self, require_nonempty, CylinderDaConfig};
use crate::jobs;
use crate::outdir::{csv, num, OutDir};
use crate::CliResult;

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: CylinderDaConfig = config::load(config_path)?;
    require_nonempty(&cfg.cover_widths, "the cover width list")?;

    let reader = ArchiveReader::open(Path::new(&cfg.archive_dir))?;
    let manifest = reader.manifest();
    if manifest.bc_mode != "dirichlet" {
        return Err(format!(
            "archive was produced with boundary mode {:?}; the cylinder \
             assimilation expects the all-dirichlet benchmark",
            manifest.bc_mode
        )
        .into());
    }
    let dt = manifest.dt;
    let start_step = manifest.first_step;
    let end_step = match cfg.end_time {
        Some(t) => (t / dt).round() as usize,
        None => manifest.last_step().ok_or("the archive contains no states")?,
    };
    if end_step <= start_step {
        return Err(format!(
            "empty assimilation window: archive starts at step {start_step} \
             (t = {}), requested end step {end_step}",
            start_step as f64 * dt
        )
        .into());
    }
    let n_steps = end_step - start_step;

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
    let bc = move |p: Point2, _t: f64, tag: BoundaryTag| -> [f64; 2] {
        channel_profile(p, tag, lo.y, height)
    };

    let runs: Vec<_> = cfg
        .cover_widths
        .iter()
        .map(|&width| {
            let (cfg, mixed, bc, reader, origin) = (&cfg, &mixed, &bc, &reader, lo);
            move || -> CliResult<(usize, DaOutput)> {
                let cover = build_coarse_cover(
                    mixed.velocity(),
                    &CoverGrid { h: width, origin },
                )?;
                let da_cfg = DaConfig {
                    flow: FlowConfig { viscosity: manifest.viscosity, dt, skew: true },
                    mu: cfg.mu,
                    n_steps,
                    start_step,
                    probe_surface: Some(TAG_CYLINDER),
                };
                let output = run_nse_da(mixed, &cover, &da_cfg, bc, None, reader)?;
                Ok((cover.num_cells(), output))
            }
        })
        .collect();
    let results = jobs::run_all(runs)?;

    let mut dir = OutDir::create(out)?;
    let mut summary = Vec::new();
    for (&width, (num_cells, output)) in cfg.cover_widths.iter().zip(&results) {
        let label = num(width);
        let error_rows: Vec<Vec<String>> = output
            .errors
            .iter()
            .map(|s| vec![num(s.t), num(s.l2_error), num(s.relative_l2_error)])
            .collect();
        dir.write_file(
            &format!("errors_H{label}.csv"),
            &csv("t,l2_error,relative_l2_error", &error_rows),
        )?;
        let force_rows: Vec<Vec<String>> = output
            .forces
            .iter()
            .map(|f| vec![num(f.t), num(f.drag), num(f.lift)])
            .collect();
        dir.write_file(&format!("forces_H{label}.csv"), &csv("t,cd,cl", &force_rows))?;

        let final_rel = output.errors.last().map(|s| s.relative_l2_error);
        let min_rel = output
            .errors
            .iter()
            .map(|s| s.relative_l2_error)
            .fold(f64::MAX, f64::min);
        summary.push(vec![
            label,
            num_cells.to_string(),
            final_rel.map(num).unwrap_or_default(),
            num(min_rel),
        ]);
    }
    dir.write_file(
        "summary.csv",
        &csv("cover_width,cells,final_relative_error,min_relative_error", &summary),
    )?;
    dir.finish("cylinder-da", &cfg)
}
