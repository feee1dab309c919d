//! `interp-check`: accuracy of the piecewise-constant sampling interpolant.
//!
//! For each probe field w and each observation width H the run measures the
//! interpolation error against the field itself and against the cellwise
//! L2 averages, together with the measured constant of the first-order
//! bound (error / (H * |grad w|)). Fitted log-log rates over the width
//! ladder summarize both errors per probe.

use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::{assemble_operator, build_fe_space, OperatorKind};
use nudgefem::mesh::{build_coarse_cover, CoverGrid};
use nudgefem::nudge::interp_error_report;
use nudgefem::util::fit_log_slope;

use crate::commands::mesh_bbox;
use crate::config::{self, require_nonempty, InterpCheckConfig};
use crate::outdir::{csv, num, OutDir};
use crate::probes;
use crate::CliResult;

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: InterpCheckConfig = config::load(config_path)?;
    require_nonempty(&cfg.probes, "the probe list")?;
    require_nonempty(&cfg.cover_widths, "the cover width ladder")?;

    let mesh = Arc::new(cfg.mesh.build()?);
    let (origin, _) = mesh_bbox(&mesh);
    let space = build_fe_space(mesh, cfg.degree, 1, &[])?;
    let stiffness = assemble_operator(&space, &OperatorKind::Stiffness)?;

    let mut dir = OutDir::create(out)?;
    let mut rate_rows = Vec::new();
    for name in &cfg.probes {
        let probe = probes::lookup(name)?;
        let coeffs: Vec<f64> = space.node_coords().iter().map(|&p| (probe.field)(p)).collect();
        let grad_norm = stiffness.bilinear(&coeffs, &coeffs).max(0.0).sqrt();

        let mut rows = Vec::new();
        let mut widths = Vec::new();
        let mut errs_field = Vec::new();
        let mut errs_proj = Vec::new();
        for &width in &cfg.cover_widths {
            let cover = build_coarse_cover(&space, &CoverGrid { h: width, origin })?;
            let report = interp_error_report(&cover, &space, &coeffs)?;
            let c_meas = if grad_norm > 0.0 {
                report.err_vs_field / (report.h * grad_norm)
            } else {
                0.0
            };
            rows.push(vec![
                num(width),
                num(report.h),
                num(report.err_vs_field),
                num(c_meas),
                num(report.err_vs_l2proj),
            ]);
            widths.push(report.h);
            errs_field.push(report.err_vs_field);
            errs_proj.push(report.err_vs_l2proj);
        }
        dir.write_file(
            &format!("probe_{}.csv", probe.name),
            &csv("width,h_max,err_vs_field,c_meas,err_vs_l2proj", &rows),
        )?;
        rate_rows.push(vec![
            probe.name.to_string(),
            fitted_rate(&widths, &errs_field),
            fitted_rate(&widths, &errs_proj),
        ]);
    }
    dir.write_file("rates.csv", &csv("probe,rate_vs_field,rate_vs_l2proj", &rate_rows))?;
    dir.finish("interp-check", &cfg)
}

/// Least-squares slope of log(error) against log(width); empty when a rate
/// cannot be fitted (exactly reproduced probes, single-width ladders).
fn fitted_rate(widths: &[f64], errors: &[f64]) -> String {
    if widths.len() < 2 || errors.iter().any(|&e| e <= 0.0) {
        return String::new();
    }
    num(fit_log_slope(widths, errors))
}
