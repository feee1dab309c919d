//! Scalar advection-diffusion in time, with optional feedback toward
//! observed values of a reference field.
//!
//! The stepper treats convection, diffusion and the feedback term fully
//! implicitly with a second-order backward difference in time; the system
//! matrix is constant for steady winds, so it is factored once per run.
//! Essential boundary values are imposed by replacing the constrained rows
//! of the system with identity rows.

use crate::fem::solve::DIRECT_SOLVE_REL_TOL;
use crate::fem::sparse::{check_finite, norm2};
use crate::fem::{
    assemble_load, assemble_operator, factorize, l2_error, FeSpace, OperatorKind, SparseLu,
    SparseOperator, VelocityField,
};
use crate::mesh::{CoarseCover, Point2};
use crate::nudge::{build_nudging_matrix, sample_observations, NudgeWeight};
use crate::{Error, Result};

/// Time discretization of the evolution term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScheme {
    /// Backward Euler; used to produce the second starting level when the
    /// run begins from a genuine initial condition.
    Bdf1,
    /// Second-order backward differences over three levels.
    Bdf2,
}

/// The factored implicit system for one time step size.
pub struct TransportSystem<'a> {
    space: &'a FeSpace,
    scheme: TimeScheme,
    dt: f64,
    mass: SparseOperator,
    /// Feedback matrix already scaled by its strength.
    nudge_scaled: Option<SparseOperator>,
    lhs: SparseOperator,
    lu: SparseLu,
}

/// Assemble and factor the stepping system. `nudging` carries the feedback
/// strength and the diagonal observation matrix.
pub fn build_transport_system<'a>(
    space: &'a FeSpace,
    velocity: &VelocityField,
    scheme: TimeScheme,
    dt: f64,
    diffusivity: f64,
    skew: bool,
    nudging: Option<(f64, &SparseOperator)>,
) -> Result<TransportSystem<'a>> {
    if space.components() != 1 {
        return Err(Error::IncompatibleSpace(
            "the transport stepper evolves scalar fields".into(),
        ));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidDomain(format!("time step must be positive, got {dt}")));
    }
    if !(diffusivity >= 0.0) {
        return Err(Error::InvalidDomain(format!(
            "diffusivity must be nonnegative, got {diffusivity}"
        )));
    }
    let mass = assemble_operator(space, &OperatorKind::Mass)?;
    let conv = assemble_operator(space, &OperatorKind::Convection { velocity, skew })?;
    let stiff = assemble_operator(space, &OperatorKind::Stiffness)?;
    let mass_coef = match scheme {
        TimeScheme::Bdf1 => 1.0 / dt,
        TimeScheme::Bdf2 => 1.5 / dt,
    };
    let nudge_scaled = match nudging {
        Some((mu, d)) if mu != 0.0 => {
            if d.nrows() != space.num_dofs() {
                return Err(Error::DimensionMismatch(format!(
                    "feedback matrix is {} x {} but the space has {} dofs",
                    d.nrows(),
                    d.ncols(),
                    space.num_dofs()
                )));
            }
            Some(SparseOperator::linear_combination(&[(mu, d)]))
        }
        _ => None,
    };
    let mut terms = vec![(mass_coef, &mass), (1.0, &conv), (diffusivity, &stiff)];
    if let Some(nd) = &nudge_scaled {
        terms.push((1.0, nd));
    }
    let lhs = SparseOperator::linear_combination(&terms)
        .replace_rows_with_identity(&space.essential_dofs());
    let lu = factorize(&lhs)?;
    Ok(TransportSystem { space, scheme, dt, mass, nudge_scaled, lhs, lu })
}

impl TransportSystem<'_> {
    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    /// Advance one step. `prev`/`curr` are the two known levels (`prev` is
    /// ignored under Bdf1), `load_next` the assembled forcing at the new
    /// time, `observations_next` nodal values of the observed field at the
    /// new time, and `dirichlet_next` the boundary trace at the new time.
    pub fn step(
        &self,
        prev: &[f64],
        curr: &[f64],
        load_next: &[f64],
        observations_next: Option<&[f64]>,
        dirichlet_next: &dyn Fn(Point2) -> f64,
    ) -> Result<Vec<f64>> {
        let n = self.space.num_dofs();
        if curr.len() != n || prev.len() != n || load_next.len() != n {
            return Err(Error::DimensionMismatch(
                "state or load length does not match the space".into(),
            ));
        }
        let mut history = vec![0.0; n];
        match self.scheme {
            TimeScheme::Bdf1 => {
                for i in 0..n {
                    history[i] = curr[i] / self.dt;
                }
            }
            TimeScheme::Bdf2 => {
                for i in 0..n {
                    history[i] = (2.0 * curr[i] - 0.5 * prev[i]) / self.dt;
                }
            }
        }
        let mut rhs = self.mass.matvec(&history);
        for (r, l) in rhs.iter_mut().zip(load_next) {
            *r += l;
        }
        if let Some(nd) = &self.nudge_scaled {
            let obs = observations_next.ok_or_else(|| {
                Error::DimensionMismatch(
                    "feedback is active but no observations were supplied".into(),
                )
            })?;
            let fb = nd.matvec(obs);
            for (r, f) in rhs.iter_mut().zip(&fb) {
                *r += f;
            }
        }
        for (node, _) in self.space.essential_nodes() {
            rhs[node] = dirichlet_next(self.space.node_coords()[node]);
        }
        let x = self.lu.solve(&rhs)?;
        // Guard against silent factorization drift: one matvec per step.
        let mut res = self.lhs.matvec(&x);
        for (r, b) in res.iter_mut().zip(&rhs) {
            *r -= b;
        }
        let rel = norm2(&res) / norm2(&rhs).max(f64::MIN_POSITIVE.sqrt());
        if !(rel <= DIRECT_SOLVE_REL_TOL) {
            return Err(Error::SolverTolerance { residual: rel, tol: DIRECT_SOLVE_REL_TOL });
        }
        Ok(x)
    }
}

/// Truth used for observations and error reporting.
pub enum TruthSource<'a> {
    /// Analytic space-time field.
    Analytic(&'a dyn Fn(Point2, f64) -> f64),
    /// A recorded trajectory on the same space and step grid, indexed by
    /// step number (entry k holds the state at time k * dt).
    Recorded(&'a [Vec<f64>]),
}

/// Time integration setup shared by the transport runs.
#[derive(Clone, Copy)]
pub struct TransportConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub diffusivity: f64,
    /// Skew-symmetrize the convection term.
    pub skew: bool,
}

/// Problem data: wind, forcing, boundary and initial values.
pub struct TransportProblem<'a> {
    pub space: &'a FeSpace,
    pub velocity: VelocityField<'a>,
    pub forcing: Option<&'a dyn Fn(Point2, f64) -> f64>,
    pub dirichlet: &'a dyn Fn(Point2, f64) -> f64,
    /// Genuine initial condition; `None` starts cold from zero at both
    /// initial levels.
    pub initial: Option<&'a dyn Fn(Point2) -> f64>,
}

/// One row of an error history.
#[derive(Clone, Copy, Debug)]
pub struct ErrorSample {
    pub t: f64,
    pub l2_error: f64,
    pub relative_l2_error: f64,
}

pub struct TransportOutput {
    /// Error vs truth at every step, when a truth was supplied.
    pub series: Vec<ErrorSample>,
    pub final_state: Vec<f64>,
    /// Full trajectory by step when recording was requested.
    pub states: Option<Vec<Vec<f64>>>,
}

/// Run the evolution, optionally assimilating observations of `truth`
/// through the cover pairing with strength `mu`.
pub fn run_transport(
    problem: &TransportProblem,
    cfg: &TransportConfig,
    nudging: Option<(f64, &CoarseCover)>,
    truth: Option<&TruthSource>,
    record: bool,
) -> Result<TransportOutput> {
    let space = problem.space;
    let n = space.num_dofs();
    if cfg.n_steps < 2 {
        return Err(Error::InvalidDomain("a run needs at least two steps".into()));
    }
    let feedback = match nudging {
        Some((mu, cover)) if mu != 0.0 => {
            if truth.is_none() {
                return Err(Error::DimensionMismatch(
                    "assimilation requested without a truth source".into(),
                ));
            }
            let d = build_nudging_matrix(cover, space, NudgeWeight::CellArea)?;
            Some((mu, d, cover))
        }
        _ => None,
    };
    let system = build_transport_system(
        space,
        &problem.velocity,
        TimeScheme::Bdf2,
        cfg.dt,
        cfg.diffusivity,
        cfg.skew,
        feedback.as_ref().map(|(mu, d, _)| (*mu, d)),
    )?;
    if let Some(TruthSource::Recorded(states)) = truth {
        if states.len() < cfg.n_steps + 1 {
            return Err(Error::DimensionMismatch(format!(
                "recorded truth has {} states but the run takes {} steps",
                states.len(),
                cfg.n_steps
            )));
        }
    }
    let observations_at = |step: usize| -> Result<Option<Vec<f64>>> {
        match (&feedback, truth) {
            (Some((_, _, cover)), Some(TruthSource::Analytic(f))) => {
                let t = step as f64 * cfg.dt;
                Ok(Some(sample_observations(cover, space, |p, _| f(p, t))?))
            }
            (Some(_), Some(TruthSource::Recorded(states))) => Ok(Some(states[step].clone())),
            _ => Ok(None),
        }
    };
    let error_at = |step: usize, state: &[f64]| -> Result<Option<ErrorSample>> {
        let t = step as f64 * cfg.dt;
        match truth {
            None => Ok(None),
            Some(TruthSource::Analytic(f)) => {
                let quad_degree = 2 * space.degree() + 2;
                let err = l2_error(space, state, |p, _| f(p, t), quad_degree)?;
                let zero = vec![0.0; n];
                let denom = l2_error(space, &zero, |p, _| f(p, t), quad_degree)?;
                Ok(Some(ErrorSample {
                    t,
                    l2_error: err,
                    relative_l2_error: err / denom.max(f64::MIN_POSITIVE),
                }))
            }
            Some(TruthSource::Recorded(states)) => {
                let reference = &states[step];
                let mut diff = state.to_vec();
                for (d, r) in diff.iter_mut().zip(reference) {
                    *d -= r;
                }
                let err = system.mass.bilinear(&diff, &diff).max(0.0).sqrt();
                let denom = system.mass.bilinear(reference, reference).max(0.0).sqrt();
                Ok(Some(ErrorSample {
                    t,
                    l2_error: err,
                    relative_l2_error: err / denom.max(f64::MIN_POSITIVE),
                }))
            }
        }
    };
    // Starting levels: cold start uses zero at steps 0 and 1; a genuine
    // initial condition is advanced once with the first-order scheme.
    let mut prev = match problem.initial {
        None => vec![0.0; n],
        Some(f) => space.interpolate(|p, _| f(p)),
    };
    check_finite(&prev, "initial state")?;
    let mut states = if record { Some(vec![prev.clone()]) } else { None };
    let mut series = Vec::new();
    if let Some(s) = error_at(0, &prev)? {
        series.push(s);
    }
    let load_at = |step: usize| -> Result<Vec<f64>> {
        match problem.forcing {
            None => Ok(vec![0.0; n]),
            Some(f) => {
                let t = step as f64 * cfg.dt;
                assemble_load(space, 2 * space.degree() + 2, |p, _| f(p, t))
            }
        }
    };
    let mut curr = match problem.initial {
        None => vec![0.0; n],
        Some(_) => {
            let bdf1 = build_transport_system(
                space,
                &problem.velocity,
                TimeScheme::Bdf1,
                cfg.dt,
                cfg.diffusivity,
                cfg.skew,
                feedback.as_ref().map(|(mu, d, _)| (*mu, d)),
            )?;
            let t1 = cfg.dt;
            bdf1.step(
                &prev,
                &prev,
                &load_at(1)?,
                observations_at(1)?.as_deref(),
                &|p| (problem.dirichlet)(p, t1),
            )?
        }
    };
    if let Some(states) = &mut states {
        states.push(curr.clone());
    }
    if let Some(s) = error_at(1, &curr)? {
        series.push(s);
    }
    for step in 2..=cfg.n_steps {
        let t = step as f64 * cfg.dt;
        let next = system.step(
            &prev,
            &curr,
            &load_at(step)?,
            observations_at(step)?.as_deref(),
            &|p| (problem.dirichlet)(p, t),
        )?;
        prev = curr;
        curr = next;
        if let Some(states) = &mut states {
            states.push(curr.clone());
        }
        if let Some(s) = error_at(step, &curr)? {
            series.push(s);
        }
    }
    Ok(TransportOutput { series, final_state: curr, states })
}
