//! `transport-demo`: contaminant transport in a wavy river channel.
//!
//! A reference run spreads two contaminant blobs downstream with the
//! configured wind (zero inflow concentration, natural conditions
//! elsewhere). Assimilation runs then start from zero data and are nudged
//! toward the recorded reference through observations on a crude
//! rectangular cover of the channel, one run per feedback strength; a
//! strength of zero leaves the run at zero data, so its relative error
//! stays at one.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use nudgefem::fem::{build_fe_space, FeSpace, VelocityField};
use nudgefem::mesh::{
    build_coarse_cover, CoverGrid, Point2, TriMesh, TAG_INFLOW, TAG_WALL,
};
use nudgefem::nse::{solve_stokes, MixedSpace};
use nudgefem::transport::{
    run_transport, ErrorSample, TransportConfig, TransportProblem, TruthSource,
};

use crate::commands::{field_file, mesh_bbox, steps_for};
use crate::config::{self, require_nonempty, TransportDemoConfig, WindSpec};
use crate::jobs;
use crate::outdir::{csv, num, OutDir};
use crate::raster::{raster_rows, PointLocator};
use crate::CliResult;

const BLOB_VALUE: f64 = 3.0;
const BLOB_RADIUS: f64 = 0.1;
const BLOB_CENTERS: [Point2; 2] =
    [Point2 { x: 1.0, y: 1.5 }, Point2 { x: 5.0, y: -0.5 }];

/// Initial contaminant: two blobs of value 3, zero elsewhere.
fn blobs(p: Point2) -> f64 {
    if BLOB_CENTERS.iter().any(|c| p.dist(c) <= BLOB_RADIUS) {
        BLOB_VALUE
    } else {
        0.0
    }
}

/// Zero inflow concentration.
fn zero_dirichlet(_: Point2, _: f64) -> f64 {
    0.0
}

/// The demo wind: either freshly solved or loaded from a field file.
enum Wind {
    Solved(MixedSpace, Vec<f64>),
    Loaded(FeSpace, Vec<f64>),
}

impl Wind {
    fn parts(&self) -> (&FeSpace, &[f64]) {
        match self {
            Wind::Solved(mixed, coeffs) => (mixed.velocity(), coeffs),
            Wind::Loaded(space, coeffs) => (space, coeffs),
        }
    }
}

pub fn run(config_path: &Path, out: &Path) -> CliResult<()> {
    let cfg: TransportDemoConfig = config::load(config_path)?;
    require_nonempty(&cfg.mu_values, "the feedback strength list")?;
    if !(cfg.cover_width > 0.0) {
        return Err("cover_width must be positive".into());
    }

    let mesh = Arc::new(config::read_mesh_file(Path::new(&cfg.mesh_file))?);
    let wind = make_wind(&cfg, &mesh)?;
    let (wind_space, wind_coeffs) = wind.parts();

    let space = build_fe_space(mesh.clone(), 2, 1, &[TAG_INFLOW])?;
    let (origin, _) = mesh_bbox(&mesh);
    let cover =
        build_coarse_cover(&space, &CoverGrid { h: cfg.cover_width, origin })?;

    let n_steps = steps_for(cfg.final_time, cfg.dt);
    let transport_cfg = TransportConfig {
        dt: cfg.dt,
        n_steps,
        diffusivity: cfg.diffusivity,
        skew: false,
    };
    // Reference run: genuine blob initial condition, trajectory recorded so
    // the assimilation runs can observe it.
    let reference = run_transport(
        &make_problem(&space, wind_space, wind_coeffs, Some(&blobs)),
        &transport_cfg,
        None,
        None,
        true,
    )?;
    let states = reference.states.ok_or("the reference run recorded no states")?;

    let mut dir = OutDir::create(out)?;
    let locator = PointLocator::new(&mesh);
    let mut snapshot_steps = BTreeSet::new();
    for &t in &cfg.snapshot_times {
        snapshot_steps.insert(((t / cfg.dt).round() as usize).min(n_steps));
    }
    for &step in &snapshot_steps {
        let rows = raster_rows(&locator, &cfg.raster, |elem, bary| {
            space.eval_in_elem(&states[step], elem, bary, 0)
        });
        dir.write_file(
            &format!("snapshot_reference_t{}.csv", num(step as f64 * cfg.dt)),
            &csv("x,y,value", &rows),
        )?;
    }

    let runs: Vec<_> = cfg
        .mu_values
        .iter()
        .map(|&mu| {
            let (space, transport_cfg, cover, states) =
                (&space, &transport_cfg, &cover, &states);
            move || -> CliResult<(Vec<ErrorSample>, Vec<f64>)> {
                let nudging = if mu != 0.0 { Some((mu, cover)) } else { None };
                let truth = TruthSource::Recorded(states);
                let output = run_transport(
                    &make_problem(space, wind_space, wind_coeffs, None),
                    transport_cfg,
                    nudging,
                    Some(&truth),
                    false,
                )?;
                Ok((output.series, output.final_state))
            }
        })
        .collect();
    let results = jobs::run_all(runs)?;

    let mut summary = Vec::new();
    for (&mu, (series, final_state)) in cfg.mu_values.iter().zip(&results) {
        let label = num(mu);
        let rows: Vec<Vec<String>> = series
            .iter()
            .map(|s| vec![num(s.t), num(s.l2_error), num(s.relative_l2_error)])
            .collect();
        dir.write_file(
            &format!("errors_mu{label}.csv"),
            &csv("t,l2_error,relative_l2_error", &rows),
        )?;
        let rows = raster_rows(&locator, &cfg.raster, |elem, bary| {
            space.eval_in_elem(final_state, elem, bary, 0)
        });
        dir.write_file(&format!("snapshot_assimilated_mu{label}.csv"), &csv("x,y,value", &rows))?;
        let last = series.last().ok_or("an assimilation run produced no error samples")?;
        summary.push(vec![label, num(last.l2_error), num(last.relative_l2_error)]);
    }
    dir.write_file(
        "summary.csv",
        &csv("mu,final_l2_error,final_relative_error", &summary),
    )?;
    dir.finish("transport-demo", &cfg)
}

fn make_problem<'a>(
    space: &'a FeSpace,
    wind_space: &'a FeSpace,
    wind_coeffs: &'a [f64],
    initial: Option<&'a dyn Fn(Point2) -> f64>,
) -> TransportProblem<'a> {
    TransportProblem {
        space,
        velocity: VelocityField::Finite { space: wind_space, coeffs: wind_coeffs },
        forcing: None,
        dirichlet: &zero_dirichlet,
        initial,
    }
}

fn make_wind(cfg: &TransportDemoConfig, mesh: &Arc<TriMesh>) -> CliResult<Wind> {
    match &cfg.velocity {
        WindSpec::Stokes { viscosity, inflow_speed } => {
            let velocity =
                build_fe_space(mesh.clone(), 2, 2, &[TAG_INFLOW, TAG_WALL])?;
            let pressure = build_fe_space(mesh.clone(), 1, 1, &[])?;
            let mixed = MixedSpace::new(velocity, pressure, false)?;
            let speed = *inflow_speed;
            let (v, _pressure) = solve_stokes(
                &mixed,
                *viscosity,
                &|_, tag| if tag == TAG_INFLOW { [speed, 0.0] } else { [0.0, 0.0] },
                None,
            )?;
            Ok(Wind::Solved(mixed, v))
        }
        WindSpec::File { path } => {
            let space = build_fe_space(mesh.clone(), 2, 2, &[])?;
            let coeffs = field_file::read_velocity_field(Path::new(path), &space)?;
            Ok(Wind::Loaded(space, coeffs))
        }
    }
}
