//! `mu-sweep`: error versus time across feedback strengths and observation
//! widths.
//!
//! Every sweep point runs the manufactured transport problem from zero data
//! and records the L2 difference to the exact solution at every step. The
//! summary reports, per point, the time needed to settle onto the terminal
//! plateau, the plateau level, and the exponential decay rate fitted up to
//! that time.

use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::{build_fe_space, FeSpace, VelocityField};
use nudgefem::mesh::{
    build_coarse_cover, build_uniform_tri_mesh, CoarseCover, CoverGrid, Point2, GAMMA1,
};
use nudgefem::transport::{
    run_transport, ErrorSample, TransportConfig, TransportProblem, TruthSource,
};

use crate::commands::steps_for;
use crate::config::{self, require_nonempty, MuSweepConfig};
use crate::jobs;
use crate::outdir::{csv, num, OutDir};
use crate::CliResult;

/// A curve has reached its plateau once every later error is within this
/// factor of the terminal level.
const PLATEAU_BAND: f64 = 1.10;

fn exact(p: Point2, t: f64) -> f64 {
    (p.x + p.y + t).sin()
}

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: MuSweepConfig = config::load(config_path)?;
    require_nonempty(&cfg.mu_values, "the feedback strength list")?;
    require_nonempty(&cfg.cover_resolutions, "the observation resolution list")?;

    let mesh = Arc::new(build_uniform_tri_mesh(
        cfg.mesh_resolution,
        cfg.mesh_resolution,
        (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)),
    )?);
    let space = build_fe_space(mesh, 2, 1, &[GAMMA1])?;
    let covers: Vec<CoarseCover> = cfg
        .cover_resolutions
        .iter()
        .map(|&n| {
            build_coarse_cover(
                &space,
                &CoverGrid { h: 1.0 / n as f64, origin: Point2::new(0.0, 0.0) },
            )
        })
        .collect::<nudgefem::Result<_>>()?;

    let mut points = Vec::new();
    for &mu in &cfg.mu_values {
        for (cover_res, cover) in cfg.cover_resolutions.iter().zip(&covers) {
            points.push((mu, *cover_res, cover));
        }
    }
    let jobs: Vec<_> = points
        .iter()
        .map(|&(mu, _, cover)| {
            let (cfg, space) = (&cfg, &space);
            move || sweep_point(cfg, space, mu, cover)
        })
        .collect();
    let series = jobs::run_all(jobs)?;

    let mut dir = OutDir::create(out)?;
    let mut summary = Vec::new();
    for ((mu, cover_res, _), samples) in points.iter().zip(&series) {
        let rows: Vec<Vec<String>> = samples
            .iter()
            .map(|s| vec![num(s.t), num(s.l2_error), num(s.relative_l2_error)])
            .collect();
        dir.write_file(
            &format!("errors_mu{}_H{}.csv", num(*mu), cover_res),
            &csv("t,l2_error,relative_l2_error", &rows),
        )?;
        let stats = plateau_stats(samples);
        summary.push(vec![
            num(*mu),
            num(1.0 / *cover_res as f64),
            num(stats.time_to_plateau),
            num(stats.plateau_level),
            num(stats.decay_rate),
        ]);
    }
    dir.write_file(
        "summary.csv",
        &csv("mu,cover_width,time_to_plateau,plateau_level,decay_rate", &summary),
    )?;
    dir.finish("mu-sweep", &cfg)
}

fn sweep_point(
    cfg: &MuSweepConfig,
    space: &FeSpace,
    mu: f64,
    cover: &CoarseCover,
) -> CliResult<Vec<ErrorSample>> {
    let n_steps = steps_for(cfg.final_time, cfg.dt);
    let eps = cfg.diffusivity;
    let forcing = move |p: Point2, t: f64| {
        2.0 * (p.x + p.y + t).cos() + 2.0 * eps * (p.x + p.y + t).sin()
    };
    let truth = TruthSource::Analytic(&exact);
    let nudging = if mu != 0.0 { Some((mu, cover)) } else { None };
    let output = run_transport(
        &TransportProblem {
            space,
            velocity: VelocityField::Constant([1.0, 0.0]),
            forcing: Some(&forcing),
            dirichlet: &exact,
            initial: None,
        },
        &TransportConfig { dt: cfg.dt, n_steps, diffusivity: cfg.diffusivity, skew: false },
        nudging,
        Some(&truth),
        false,
    )?;
    Ok(output.series)
}

pub struct PlateauStats {
    /// First time from which the error stays within [`PLATEAU_BAND`] of the
    /// terminal level.
    pub time_to_plateau: f64,
    /// Largest error over the trailing quarter of the run.
    pub plateau_level: f64,
    /// Least-squares slope of ln(error) against t up to the plateau time
    /// (negative for decaying curves).
    pub decay_rate: f64,
}

/// Settling-time analysis of an error history: the terminal plateau is the
/// worst error over the last quarter of the run, and the curve counts as
/// settled once all later errors stay within a small band of it.
pub fn plateau_stats(samples: &[ErrorSample]) -> PlateauStats {
    assert!(!samples.is_empty());
    let n = samples.len();
    let tail_start = n - (n / 4).max(1);
    let plateau_level =
        samples[tail_start..].iter().map(|s| s.l2_error).fold(f64::MIN, f64::max);

    // Suffix maxima locate the first sample after which nothing exceeds the
    // plateau band again.
    let mut time_to_plateau = samples[n - 1].t;
    let mut suffix_max = f64::MIN;
    for s in samples.iter().rev() {
        suffix_max = suffix_max.max(s.l2_error);
        if suffix_max <= PLATEAU_BAND * plateau_level {
            time_to_plateau = s.t;
        }
    }

    let fit: Vec<(f64, f64)> = samples
        .iter()
        .take_while(|s| s.t <= time_to_plateau)
        .filter(|s| s.l2_error > 0.0)
        .map(|s| (s.t, s.l2_error.ln()))
        .collect();
    let decay_rate = if fit.len() >= 2 { least_squares_slope(&fit) } else { 0.0 };
    PlateauStats { time_to_plateau, plateau_level, decay_rate }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(x, y) in points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    if var == 0.0 {
        0.0
    } else {
        cov / var
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_detection_on_a_synthetic_decay() {
        // Error decays like exp(-4t) until it hits a 1e-3 floor at about
        // t = ln(1000)/4, then stays there.
        let samples: Vec<ErrorSample> = (0..=300)
            .map(|k| {
                let t = k as f64 * 0.01;
                let e = (-4.0 * t).exp().max(1e-3);
                ErrorSample { t, l2_error: e, relative_l2_error: e }
            })
            .collect();
        let stats = plateau_stats(&samples);
        assert!((stats.plateau_level - 1e-3).abs() < 1e-12);
        let expected_tau = (1000.0f64.ln() - PLATEAU_BAND.ln()) / 4.0;
        assert!(
            (stats.time_to_plateau - expected_tau).abs() < 0.02,
            "tau = {}, expected about {expected_tau}",
            stats.time_to_plateau
        );
        assert!(
            (stats.decay_rate + 4.0).abs() < 0.1,
            "fitted decay {} should be near -4",
            stats.decay_rate
        );
    }
}
