//! `conv-rate`: manufactured-solution convergence of the assimilating
//! transport stepper.
//!
//! The exact solution sin(x + y + t) on the unit square is transported with
//! wind (1, 0); the forcing follows from the equation. Runs start from zero
//! data and assimilate through an observation grid of width `cover_ratio*h`,
//! with the time step tied to h^{3/2}, so the final-time L2 error contracts
//! at third order in h.

use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::{build_fe_space, VelocityField};
use nudgefem::mesh::{
    build_coarse_cover, build_uniform_tri_mesh, CoverGrid, Point2, GAMMA1,
};
use nudgefem::transport::{
    run_transport, TransportConfig, TransportProblem, TruthSource,
};

use crate::commands::steps_for;
use crate::config::{self, require_nonempty, ConvRateConfig};
use crate::jobs;
use crate::outdir::{csv, num, OutDir};
use crate::CliResult;

fn exact(p: Point2, t: f64) -> f64 {
    (p.x + p.y + t).sin()
}

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: ConvRateConfig = config::load(config_path)?;
    require_nonempty(&cfg.mesh_resolutions, "the resolution ladder")?;
    if cfg.cover_ratio == 0 {
        return Err("cover_ratio must be positive".into());
    }

    let jobs: Vec<_> = cfg
        .mesh_resolutions
        .iter()
        .map(|&n| {
            let cfg = &cfg;
            move || level_error(cfg, n)
        })
        .collect();
    let errors = jobs::run_all(jobs)?;

    let mut rows = Vec::new();
    for (i, (&n, &error)) in cfg.mesh_resolutions.iter().zip(&errors).enumerate() {
        let rate = if i == 0 {
            String::new()
        } else {
            num((errors[i - 1] / error).log2())
        };
        rows.push(vec![num(1.0 / n as f64), num(error), rate]);
    }
    let mut dir = OutDir::create(out)?;
    dir.write_file("rates.csv", &csv("h,error,rate", &rows))?;
    dir.finish("conv-rate", &cfg)
}

/// Final-time L2 error of one ladder level.
fn level_error(cfg: &ConvRateConfig, resolution: usize) -> CliResult<f64> {
    let h = 1.0 / resolution as f64;
    let mesh = Arc::new(build_uniform_tri_mesh(
        resolution,
        resolution,
        (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
    )?);
    let space = build_fe_space(mesh, 2, 1, &[GAMMA1])?;
    let cover = build_coarse_cover(
        &space,
        &CoverGrid { h: cfg.cover_ratio as f64 * h, origin: Point2::new(0.0, 0.0) },
    )?;

    let n_steps = steps_for(cfg.final_time, cfg.dt_factor * h.powf(1.5));
    let dt = cfg.final_time / n_steps as f64;

    let eps = cfg.diffusivity;
    let forcing = move |p: Point2, t: f64| {
        2.0 * (p.x + p.y + t).cos() + 2.0 * eps * (p.x + p.y + t).sin()
    };
    let truth = TruthSource::Analytic(&exact);
    let output = run_transport(
        &TransportProblem {
            space: &space,
            velocity: VelocityField::Constant([1.0, 0.0]),
            forcing: Some(&forcing),
            dirichlet: &exact,
            initial: None,
        },
        &TransportConfig { dt, n_steps, diffusivity: cfg.diffusivity, skew: false },
        Some((cfg.mu, &cover)),
        Some(&truth),
        false,
    )?;
    let last = output.series.last().ok_or("the run produced no error samples")?;
    Ok(last.l2_error)
}
