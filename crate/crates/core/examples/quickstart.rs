//! Minimal end-to-end run: build a mesh and a P2 space, pair a 8x8
//! observation cover, then track an analytic field from a cold start by
//! nudging toward its point samples.
//!
//! Run with `cargo run -p nudgefem --example quickstart`.

use std::sync::Arc;

use nudgefem::error::Result;
use nudgefem::fem::{build_fe_space, VelocityField};
use nudgefem::mesh::{build_coarse_cover, build_uniform_tri_mesh, CoverGrid, Point2, GAMMA1};
use nudgefem::transport::{run_transport, TransportConfig, TransportProblem, TruthSource};

fn main() -> Result<()> {
    let mesh = build_uniform_tri_mesh(32, 32, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))?;
    let space = build_fe_space(Arc::new(mesh), 2, 1, &[GAMMA1])?;
    let cover =
        build_coarse_cover(&space, &CoverGrid { h: 0.125, origin: Point2::new(0.0, 0.0) })?;

    let truth = |p: Point2, t: f64| (p.x + p.y + t).sin();
    let problem = TransportProblem {
        space: &space,
        velocity: VelocityField::Constant([1.0, 0.0]),
        forcing: None,
        dirichlet: &|p, t| truth(p, t),
        initial: None, // cold start from zero
    };
    let out = run_transport(
        &problem,
        &TransportConfig { dt: 0.01, n_steps: 300, diffusivity: 0.01, skew: false },
        Some((100.0, &cover)),                // feedback strength and observation cover
        Some(&TruthSource::Analytic(&truth)), // what the observations sample
        false,
    )?;
    println!("final relative L2 error: {}", out.series.last().unwrap().relative_l2_error);
    Ok(())
}
