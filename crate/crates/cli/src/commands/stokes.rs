//! `stokes`: steady Stokes wind generator for the river demo.
//!
//! Solves the steady Stokes equations on the channel mesh with a plug
//! inflow, no-slip walls and a natural outflow, and writes the velocity
//! coefficients to a field file that `transport-demo` can consume.

use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::build_fe_space;
use nudgefem::mesh::{TAG_INFLOW, TAG_WALL};
use nudgefem::nse::{solve_stokes, MixedSpace};

use crate::commands::field_file;
use crate::config::{self, StokesConfig};
use crate::outdir::{csv, num, OutDir};
use crate::raster::{raster_rows, PointLocator};
use crate::CliResult;

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: StokesConfig = config::load(config_path)?;
    let mesh = Arc::new(config::read_mesh_file(Path::new(&cfg.mesh_file))?);

    let velocity = build_fe_space(mesh.clone(), 2, 2, &[TAG_INFLOW, TAG_WALL])?;
    let pressure = build_fe_space(mesh.clone(), 1, 1, &[])?;
    let mixed = MixedSpace::new(velocity, pressure, false)?;
    let speed = cfg.inflow_speed;
    let (v, _p) = solve_stokes(
        &mixed,
        cfg.viscosity,
        &|_, tag| if tag == TAG_INFLOW { [speed, 0.0] } else { [0.0, 0.0] },
        None,
    )?;

    let mut dir = OutDir::create(out)?;
    field_file::write_velocity_field(&dir.path("velocity.field"), mixed.velocity(), &v)?;
    dir.register_file("velocity.field");

    if let Some(spec) = &cfg.raster {
        let locator = PointLocator::new(&mesh);
        let space = mixed.velocity();
        let rows = raster_rows(&locator, spec, |elem, bary| {
            let ux = space.eval_in_elem(&v, elem, bary, 0);
            let uy = space.eval_in_elem(&v, elem, bary, 1);
            ux.hypot(uy)
        });
        dir.write_file("snapshot_speed.csv", &csv("x,y,value", &rows))?;
    }

    let max_speed = (0..mixed.velocity().node_coords().len())
        .map(|n| {
            let g = mixed.velocity().node_coords().len();
            v[n].hypot(v[g + n])
        })
        .fold(0.0f64, f64::max);
    dir.write_file(
        "flow_summary.csv",
        &csv("max_speed", &[vec![num(max_speed)]]),
    )?;
    dir.finish("stokes", &cfg)
}
