//! End-to-end checks that the public surface composes: mesh -> space ->
//! cover -> evolution for the scalar solver, and reference run -> archive ->
//! assimilation replay for the flow solver.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::{build_fe_space, VelocityField};
use nudgefem::mesh::{
    build_coarse_cover, build_uniform_tri_mesh, BoundaryTag, CoverGrid, Point2, GAMMA1,
};
use nudgefem::nse::archive::ArchiveReader;
use nudgefem::nse::{run_dns, run_nse_da, DaConfig, DnsConfig, FlowConfig, MixedSpace};
use nudgefem::transport::{run_transport, TransportConfig, TransportProblem, TruthSource};

/// A forced scalar run from a cold start: point-sample feedback must land the
/// final error far below the run without feedback, and repeating the nudged
/// run must reproduce the state bitwise.
#[test]
fn feedback_accelerates_tracking_from_a_cold_start() {
    let mesh = Arc::new(
        build_uniform_tri_mesh(16, 16, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))).unwrap(),
    );
    let space = build_fe_space(mesh, 2, 1, &[GAMMA1]).unwrap();
    let cover =
        build_coarse_cover(&space, &CoverGrid { h: 0.25, origin: Point2::new(0.0, 0.0) }).unwrap();

    let pi = std::f64::consts::PI;
    let eps = 0.1;
    let wind = [1.0, 0.5];
    let truth_fn =
        move |p: Point2, t: f64| -> f64 { (-t).exp() * (pi * p.x).sin() * (pi * p.y).sin() };
    // Forcing chosen so `truth_fn` solves the advection-diffusion equation
    // with the wind and diffusivity above.
    let forcing = move |p: Point2, t: f64| -> f64 {
        let w = truth_fn(p, t);
        let wx = (-t).exp() * pi * (pi * p.x).cos() * (pi * p.y).sin();
        let wy = (-t).exp() * pi * (pi * p.x).sin() * (pi * p.y).cos();
        -w + wind[0] * wx + wind[1] * wy + 2.0 * eps * pi * pi * w
    };
    let dirichlet = move |p: Point2, t: f64| truth_fn(p, t);
    let problem = TransportProblem {
        space: &space,
        velocity: VelocityField::Constant(wind),
        forcing: Some(&forcing),
        dirichlet: &dirichlet,
        initial: None,
    };
    let cfg = TransportConfig { dt: 0.02, n_steps: 50, diffusivity: eps, skew: false };
    let truth = TruthSource::Analytic(&truth_fn);

    let nudged =
        run_transport(&problem, &cfg, Some((200.0, &cover)), Some(&truth), false).unwrap();
    let free = run_transport(&problem, &cfg, None, Some(&truth), false).unwrap();

    let nudged_final = nudged.series.last().unwrap().relative_l2_error;
    let free_final = free.series.last().unwrap().relative_l2_error;
    assert!(
        free_final > 0.05,
        "the run without feedback should still carry visible error at this horizon, got {free_final}"
    );
    assert!(
        nudged_final < 0.05 * free_final,
        "feedback should beat the free run decisively: {nudged_final} vs {free_final}"
    );
    assert!(nudged_final < 2e-2, "nudged run should track closely, got {nudged_final}");

    let again =
        run_transport(&problem, &cfg, Some((200.0, &cover)), Some(&truth), false).unwrap();
    assert_eq!(
        nudged.final_state, again.final_state,
        "identical inputs must reproduce the state bitwise"
    );
}

/// A flow reference run archived to disk must replay through the assimilation
/// entry point: manifest metadata round-trips, archived states read back at
/// the expected times, and feedback pulls a cold start toward the reference.
#[test]
fn archived_flow_reference_drives_assimilation_toward_it() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("pipeline-archive");
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();

    let mesh = Arc::new(
        build_uniform_tri_mesh(10, 10, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))).unwrap(),
    );
    let velocity = build_fe_space(mesh.clone(), 2, 2, &[GAMMA1]).unwrap();
    let pressure = build_fe_space(mesh, 1, 1, &[]).unwrap();
    let mixed = MixedSpace::new(velocity, pressure, true).unwrap();

    // Regularized lid: tangential drive on the top edge, zero at the corners.
    let lid = |p: Point2, _t: f64, _tag: BoundaryTag| -> [f64; 2] {
        if p.y > 1.0 - 1e-12 {
            [16.0 * p.x * p.x * (1.0 - p.x) * (1.0 - p.x), 0.0]
        } else {
            [0.0, 0.0]
        }
    };
    let flow = FlowConfig { viscosity: 0.05, dt: 0.05, skew: true };

    let dns = run_dns(
        &mixed,
        &DnsConfig { flow, n_steps: 30, archive_from_step: 10, probe_surface: None },
        &lid,
        None,
        Some(&dir),
    )
    .unwrap();
    let manifest = dns.manifest.expect("archiving was requested");
    assert_eq!(manifest.first_step, 10);
    assert_eq!(manifest.last_step(), Some(30));

    let reader = ArchiveReader::open(&dir).unwrap();
    let mid = reader.read_state(20).unwrap();
    assert_eq!(mid.step, 20);
    assert!((mid.t - 20.0 * flow.dt).abs() <= 1e-12, "archived time drifted: {}", mid.t);
    assert_eq!(mid.velocity.len(), mixed.num_velocity_dofs());
    assert_eq!(mid.pressure.len(), mixed.num_pressure_dofs());

    let cover = build_coarse_cover(
        mixed.velocity(),
        &CoverGrid { h: 0.25, origin: Point2::new(0.0, 0.0) },
    )
    .unwrap();
    let da = run_nse_da(
        &mixed,
        &cover,
        &DaConfig { flow, mu: 50.0, n_steps: 20, start_step: 10, probe_surface: None },
        &lid,
        None,
        &reader,
    )
    .unwrap();

    let first = da.errors.first().unwrap().relative_l2_error;
    let last = da.errors.last().unwrap().relative_l2_error;
    assert!(
        (first - 1.0).abs() <= 1e-12,
        "a cold start differs from the reference by all of it, got {first}"
    );
    assert!(
        last < 0.05 * first,
        "feedback should close most of the gap over the window: {last} vs {first}"
    );
    assert_eq!(da.final_velocity.len(), mixed.num_velocity_dofs());

    fs::remove_dir_all(&dir).unwrap();
}
