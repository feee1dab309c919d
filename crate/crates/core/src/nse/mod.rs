//! Incompressible Navier–Stokes stepping with optional observation feedback.
//!
//! The velocity/pressure pair is approximated with Taylor–Hood elements
//! (vector quadratics, scalar linears). Time stepping is second-order
//! backward differencing with the convecting field extrapolated from the two
//! previous velocities, so every step solves one linear saddle-point system:
//!
//! ```text
//! (1.5/dt) (v, X) + nu (grad v, grad X) + b(2v_n - v_{n-1}, v, X)
//!     + mu (D v, X) - (p, div X) = (1/dt) (2 v_n - 0.5 v_{n-1}, X)
//!                                  + (f, X) + mu (D v_obs, X)
//! (div v, q) = 0
//! ```
//!
//! The feedback matrix `D` is the diagonal nodal-observation operator from
//! [`crate::nudge`]; with `mu = 0` the scheme is a plain flow solver, which
//! is how reference runs are produced. A reference run can archive its
//! states ([`archive`]) so an assimilating run on the same discretization
//! can replay them as observations and measure its tracking error.

pub mod archive;

use std::collections::BTreeSet;
use std::path::Path;

use crate::fem::{
    assemble_divergence, assemble_load, assemble_operator, factorize, norm2,
    set_essential_values, CooBuilder, FeSpace, GaussLegendre, OperatorKind, SparseOperator,
    VelocityField,
};
use crate::mesh::{BoundaryTag, CoarseCover, Point2};
use crate::nudge::{build_nudging_matrix, NudgeWeight};
use crate::transport::ErrorSample;
use crate::{Error, Result};

use archive::{ArchiveManifest, ArchiveReader, ArchiveWriter, ARCHIVE_FORMAT};

/// Every accepted velocity satisfies max_q |(div v, q)| below this bound.
pub const DIVERGENCE_TOL: f64 = 1e-8;

/// Relative residual accepted from the saddle-point solves.
const SADDLE_SOLVE_REL_TOL: f64 = crate::fem::DIRECT_SOLVE_REL_TOL;

/// Inf-sup stable velocity/pressure pair on one mesh: vector quadratic
/// velocities with scalar linear pressures. When every piece of the boundary
/// carries velocity data the pressure is only determined up to a constant,
/// and the pair must be built with the zero-mean pressure gauge.
pub struct MixedSpace {
    velocity: FeSpace,
    pressure: FeSpace,
    zero_mean_pressure: bool,
}

impl MixedSpace {
    pub fn new(velocity: FeSpace, pressure: FeSpace, zero_mean_pressure: bool) -> Result<MixedSpace> {
        if !velocity.same_mesh(&pressure) {
            return Err(Error::IncompatibleSpace(
                "velocity and pressure must share one mesh".into(),
            ));
        }
        if velocity.components() != 2 || pressure.components() != 1 {
            return Err(Error::IncompatibleSpace(format!(
                "need a two-component velocity and a scalar pressure, got {} and {}",
                velocity.components(),
                pressure.components()
            )));
        }
        if velocity.degree() != 2 || pressure.degree() != 1 {
            return Err(Error::NotInfSup {
                vel: format!("P{} x P{}", velocity.degree(), velocity.degree()),
                pres: format!("P{}", pressure.degree()),
            });
        }
        if pressure.essential_nodes().next().is_some() {
            return Err(Error::IncompatibleSpace(
                "pressure space must not carry essential boundary conditions".into(),
            ));
        }
        let mixed = MixedSpace { velocity, pressure, zero_mean_pressure };
        let all_dirichlet = mixed.all_velocity_boundaries_essential();
        if all_dirichlet && !zero_mean_pressure {
            return Err(Error::SingularSystem(
                "all boundaries carry velocity data, so the pressure is only determined \
                 up to a constant; build the pair with the zero-mean pressure gauge"
                    .into(),
            ));
        }
        if !all_dirichlet && zero_mean_pressure {
            return Err(Error::IncompatibleSpace(
                "the zero-mean pressure gauge conflicts with a natural (traction) \
                 boundary, which already fixes the pressure level"
                    .into(),
            ));
        }
        Ok(mixed)
    }

    pub fn velocity(&self) -> &FeSpace {
        &self.velocity
    }

    pub fn pressure(&self) -> &FeSpace {
        &self.pressure
    }

    pub fn zero_mean_pressure(&self) -> bool {
        self.zero_mean_pressure
    }

    pub fn num_velocity_dofs(&self) -> usize {
        self.velocity.num_dofs()
    }

    pub fn num_pressure_dofs(&self) -> usize {
        self.pressure.num_dofs()
    }

    /// True when every boundary tag present in the mesh is an essential
    /// (Dirichlet) tag of the velocity space.
    fn all_velocity_boundaries_essential(&self) -> bool {
        let mesh_tags: BTreeSet<u16> = self
            .velocity
            .mesh()
            .boundary_edges
            .iter()
            .map(|e| e.tag.0)
            .collect();
        let essential_tags: BTreeSet<u16> =
            self.velocity.essential_nodes().map(|(_, tag)| tag.0).collect();
        mesh_tags.iter().all(|t| essential_tags.contains(t))
    }

    fn bc_mode_label(&self) -> &'static str {
        if self.all_velocity_boundaries_essential() {
            "dirichlet"
        } else {
            "natural_outflow"
        }
    }
}

/// Per-run discretization parameters of the flow solver.
#[derive(Clone, Copy, Debug)]
pub struct FlowConfig {
    pub viscosity: f64,
    pub dt: f64,
    /// Use the skew-symmetrized convective form. Keep this on with full
    /// Dirichlet velocity boundaries; with a natural outflow the plain
    /// convective form is used instead.
    pub skew: bool,
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        if !(self.viscosity > 0.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "viscosity and time step must be positive, got {} and {}",
                self.viscosity, self.dt
            )));
        }
        Ok(())
    }
}

/// Two velocity levels, the latest pressure, and the clock.
#[derive(Clone, Debug)]
pub struct NseState {
    pub v_prev: Vec<f64>,
    pub v_curr: Vec<f64>,
    pub p_curr: Vec<f64>,
    /// Time of `v_curr`.
    pub t: f64,
    /// Step index of `v_curr`.
    pub n: usize,
}

/// Pieces of the saddle-point system that do not change between steps: the
/// divergence constraint, its transpose, the essential-row mask, and the
/// pressure-gauge data.
///
/// When every boundary carries velocity data the pressure is determined only
/// up to a constant. A global zero-mean row would be dense and causes severe
/// fill-in in the factorization, so the solve instead pins one pressure dof
/// to zero (replacing its constraint row); the velocity is unaffected by the
/// gauge choice, the dropped constraint row is still verified by the
/// divergence check afterwards, and the returned pressure is shifted to
/// exact zero mean.
struct SaddleContext {
    divergence: SparseOperator,
    div_t: SparseOperator,
    /// Integral of each pressure basis function, used to re-gauge the
    /// pressure to zero mean; `None` when a natural boundary fixes it.
    pressure_weights: Option<Vec<f64>>,
    essential: Vec<bool>,
    nv: usize,
    np: usize,
}

/// Pressure dof pinned during gauged solves.
const PINNED_PRESSURE_DOF: usize = 0;

impl SaddleContext {
    fn new(mixed: &MixedSpace) -> Result<SaddleContext> {
        let divergence = assemble_divergence(&mixed.velocity, &mixed.pressure)?;
        let div_t = divergence.transpose();
        let pressure_weights = if mixed.zero_mean_pressure {
            Some(assemble_load(&mixed.pressure, 2, |_, _| 1.0)?)
        } else {
            None
        };
        let nv = mixed.num_velocity_dofs();
        let mut essential = vec![false; nv];
        for dof in mixed.velocity.essential_dofs() {
            essential[dof] = true;
        }
        Ok(SaddleContext {
            divergence,
            div_t,
            pressure_weights,
            essential,
            nv,
            np: mixed.num_pressure_dofs(),
        })
    }

    fn system_size(&self) -> usize {
        self.nv + self.np
    }

    /// Assemble the saddle-point matrix around a prepared velocity block:
    ///
    /// ```text
    /// [ A   -B^T ]      momentum rows (essential rows -> identity)
    /// [ B    0   ]      incompressibility rows
    /// ```
    ///
    /// In gauged mode one incompressibility row is replaced by the pin
    /// `p_k = 0`.
    fn build_matrix(&self, a_vel: &SparseOperator) -> SparseOperator {
        let n = self.system_size();
        let pinned = self.pressure_weights.is_some();
        let mut coo = CooBuilder::new(n, n);
        for r in 0..self.nv {
            if self.essential[r] {
                coo.push(r, r, 1.0);
                continue;
            }
            for (c, v) in a_vel.row(r) {
                coo.push(r, c, v);
            }
            for (q, v) in self.div_t.row(r) {
                coo.push(r, self.nv + q, -v);
            }
        }
        for q in 0..self.np {
            if pinned && q == PINNED_PRESSURE_DOF {
                coo.push(self.nv + q, self.nv + q, 1.0);
                continue;
            }
            for (c, v) in self.divergence.row(q) {
                coo.push(self.nv + q, c, v);
            }
        }
        coo.build()
    }

    /// Extend a momentum right-hand side by zero constraint rows.
    fn extend_rhs(&self, mut rhs_vel: Vec<f64>) -> Vec<f64> {
        rhs_vel.resize(self.system_size(), 0.0);
        rhs_vel
    }

    /// Shift a solved pressure to exact zero mean in gauged mode.
    fn apply_pressure_gauge(&self, pressure: &mut [f64]) {
        if let Some(weights) = &self.pressure_weights {
            let area: f64 = weights.iter().sum();
            let mean: f64 =
                weights.iter().zip(pressure.iter()).map(|(w, p)| w * p).sum::<f64>() / area;
            for p in pressure.iter_mut() {
                *p -= mean;
            }
        }
    }

    /// max_q |(div v, q)|, the quantity bounded by [`DIVERGENCE_TOL`].
    /// Includes the constraint row dropped by the pressure pin, so an
    /// incompatible boundary dataset cannot pass unnoticed.
    fn max_divergence(&self, v: &[f64]) -> f64 {
        self.divergence
            .matvec(v)
            .iter()
            .fold(0.0_f64, |acc, d| acc.max(d.abs()))
    }
}

fn solve_saddle(matrix: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = factorize(matrix)?;
    let x = lu.solve(rhs)?;
    let mut r = matrix.matvec(&x);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri -= bi;
    }
    let rel = norm2(&r) / norm2(rhs).max(f64::MIN_POSITIVE.sqrt());
    if !(rel <= SADDLE_SOLVE_REL_TOL) {
        return Err(Error::SolverTolerance { residual: rel, tol: SADDLE_SOLVE_REL_TOL });
    }
    Ok(x)
}

fn check_divergence(ctx: &SaddleContext, v: &[f64]) -> Result<f64> {
    let div = ctx.max_divergence(v);
    if !(div <= DIVERGENCE_TOL) {
        return Err(Error::Incompressibility { divergence: div, tol: DIVERGENCE_TOL });
    }
    Ok(div)
}

/// Time stepper for the assimilating flow scheme. Built once per run; each
/// [`FlowStepper::step`] assembles the convecting-field-dependent system,
/// factors it, solves, and verifies the divergence constraint.
pub struct FlowStepper<'a> {
    mixed: &'a MixedSpace,
    config: FlowConfig,
    dirichlet: &'a dyn Fn(Point2, f64, BoundaryTag) -> [f64; 2],
    forcing: Option<&'a dyn Fn(Point2, f64) -> [f64; 2]>,
    /// Feedback strength and diagonal observation operator.
    nudging: Option<(f64, SparseOperator)>,
    mass: SparseOperator,
    stiffness: SparseOperator,
    ctx: SaddleContext,
    state: NseState,
    last_divergence: f64,
}

impl<'a> FlowStepper<'a> {
    /// `initial` provides the two starting velocity levels `(v0, v1)`; the
    /// state clock is positioned so `v1` lives at `start_time` and carries
    /// index `start_step`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mixed: &'a MixedSpace,
        config: FlowConfig,
        dirichlet: &'a dyn Fn(Point2, f64, BoundaryTag) -> [f64; 2],
        forcing: Option<&'a dyn Fn(Point2, f64) -> [f64; 2]>,
        nudging: Option<(f64, &CoarseCover)>,
        initial: (Vec<f64>, Vec<f64>),
        start_time: f64,
        start_step: usize,
    ) -> Result<FlowStepper<'a>> {
        config.validate()?;
        let nv = mixed.num_velocity_dofs();
        let (v0, v1) = initial;
        if v0.len() != nv || v1.len() != nv {
            return Err(Error::DimensionMismatch(format!(
                "initial velocity levels have {} and {} entries for {} dofs",
                v0.len(),
                v1.len(),
                nv
            )));
        }
        let nudging = match nudging {
            Some((mu, cover)) => {
                if !(mu >= 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "feedback strength must be nonnegative, got {mu}"
                    )));
                }
                let d = build_nudging_matrix(cover, &mixed.velocity, NudgeWeight::CellArea)?;
                Some((mu, d))
            }
            None => None,
        };
        let mass = assemble_operator(&mixed.velocity, &OperatorKind::Mass)?;
        let stiffness = assemble_operator(&mixed.velocity, &OperatorKind::Stiffness)?;
        let ctx = SaddleContext::new(mixed)?;
        Ok(FlowStepper {
            mixed,
            config,
            dirichlet,
            forcing,
            nudging,
            mass,
            stiffness,
            ctx,
            state: NseState {
                v_prev: v0,
                v_curr: v1,
                p_curr: vec![0.0; mixed.num_pressure_dofs()],
                t: start_time,
                n: start_step,
            },
            last_divergence: 0.0,
        })
    }

    pub fn state(&self) -> &NseState {
        &self.state
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    /// Velocity mass matrix (used by callers for L2-norm comparisons).
    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    /// max_q |(div v, q)| of the most recently accepted velocity.
    pub fn last_divergence(&self) -> f64 {
        self.last_divergence
    }

    /// Kinetic energy 0.5 (v, v) of the current velocity.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass.bilinear(&self.state.v_curr, &self.state.v_curr)
    }

    /// Assemble the saddle-point system for the step ending at `t_next`.
    /// `observations` holds observed velocity values at the paired nodes
    /// (entries elsewhere are ignored by the diagonal feedback operator).
    fn assemble_system(
        &self,
        t_next: f64,
        observations: Option<&[f64]>,
    ) -> Result<(SparseOperator, Vec<f64>)> {
        let nv = self.ctx.nv;
        let dt = self.config.dt;
        let w: Vec<f64> = self
            .state
            .v_curr
            .iter()
            .zip(&self.state.v_prev)
            .map(|(c, p)| 2.0 * c - p)
            .collect();
        let convection = assemble_operator(
            &self.mixed.velocity,
            &OperatorKind::Convection {
                velocity: &VelocityField::Finite { space: &self.mixed.velocity, coeffs: &w },
                skew: self.config.skew,
            },
        )?;
        let mut terms: Vec<(f64, &SparseOperator)> = vec![
            (1.5 / dt, &self.mass),
            (self.config.viscosity, &self.stiffness),
            (1.0, &convection),
        ];
        if let Some((mu, d)) = &self.nudging {
            terms.push((*mu, d));
        }
        let a_vel = SparseOperator::linear_combination(&terms);
        let matrix = self.ctx.build_matrix(&a_vel);

        // History term (1/dt) (2 v_n - 0.5 v_{n-1}).
        let hist: Vec<f64> = self
            .state
            .v_curr
            .iter()
            .zip(&self.state.v_prev)
            .map(|(c, p)| (2.0 * c - 0.5 * p) / dt)
            .collect();
        let mut rhs_vel = self.mass.matvec(&hist);
        if let Some(f) = self.forcing {
            let load = assemble_load(&self.mixed.velocity, 2 * 2 + 2, |p, comp| f(p, t_next)[comp])?;
            for (r, l) in rhs_vel.iter_mut().zip(load) {
                *r += l;
            }
        }
        if let Some((mu, d)) = &self.nudging {
            let obs = observations.ok_or_else(|| {
                Error::DimensionMismatch(
                    "an assimilating step needs an observation vector".into(),
                )
            })?;
            if obs.len() != nv {
                return Err(Error::DimensionMismatch(format!(
                    "observation vector has {} entries for {} velocity dofs",
                    obs.len(),
                    nv
                )));
            }
            for (r, dv) in rhs_vel.iter_mut().zip(d.matvec(obs)) {
                *r += mu * dv;
            }
        }
        set_essential_values(&mut rhs_vel, &self.mixed.velocity, |p, comp, tag| {
            (self.dirichlet)(p, t_next, tag)[comp]
        });
        Ok((matrix, self.ctx.extend_rhs(rhs_vel)))
    }

    /// Advance one step. Observations are required exactly when the stepper
    /// was built with feedback; they are nodal velocity values of the
    /// observed solution (a full coefficient vector works, since the
    /// diagonal operator reads only the paired entries).
    pub fn step(&mut self, observations: Option<&[f64]>) -> Result<&NseState> {
        let t_next = self.state.t + self.config.dt;
        let (matrix, rhs) = self.assemble_system(t_next, observations)?;
        let x = solve_saddle(&matrix, &rhs)?;
        let nv = self.ctx.nv;
        let np = self.ctx.np;
        self.last_divergence = check_divergence(&self.ctx, &x[..nv])?;
        let v_next = x[..nv].to_vec();
        let mut p_next = x[nv..nv + np].to_vec();
        self.ctx.apply_pressure_gauge(&mut p_next);
        self.state.p_curr = p_next;
        self.state.v_prev = std::mem::replace(&mut self.state.v_curr, v_next);
        self.state.t = t_next;
        self.state.n += 1;
        Ok(&self.state)
    }
}

/// Steady Stokes solve: viscous momentum balance plus incompressibility,
/// with the same boundary handling as the stepper and no convection. Used
/// to manufacture steady transporting velocities.
pub fn solve_stokes(
    mixed: &MixedSpace,
    viscosity: f64,
    dirichlet: &dyn Fn(Point2, BoundaryTag) -> [f64; 2],
    forcing: Option<&dyn Fn(Point2) -> [f64; 2]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(viscosity > 0.0) {
        return Err(Error::InvalidDomain(format!(
            "viscosity must be positive, got {viscosity}"
        )));
    }
    let ctx = SaddleContext::new(mixed)?;
    let stiffness = assemble_operator(&mixed.velocity, &OperatorKind::Stiffness)?;
    let a_vel = SparseOperator::linear_combination(&[(viscosity, &stiffness)]);
    let matrix = ctx.build_matrix(&a_vel);
    let mut rhs_vel = match forcing {
        Some(f) => assemble_load(&mixed.velocity, 2 * 2 + 2, |p, comp| f(p)[comp])?,
        None => vec![0.0; mixed.num_velocity_dofs()],
    };
    set_essential_values(&mut rhs_vel, &mixed.velocity, |p, comp, tag| {
        dirichlet(p, tag)[comp]
    });
    let x = solve_saddle(&matrix, &ctx.extend_rhs(rhs_vel))?;
    let nv = ctx.nv;
    check_divergence(&ctx, &x[..nv])?;
    let mut pressure = x[nv..nv + ctx.np].to_vec();
    ctx.apply_pressure_gauge(&mut pressure);
    Ok((x[..nv].to_vec(), pressure))
}

/// Drag and lift coefficients of the flow past a tagged closed surface:
///
/// ```text
/// cd = 20 * integral_S ( nu * d(u.t)/dn * n_y - p n_x ) dS
/// cl = 20 * integral_S ( nu * d(u.t)/dn * n_x - p n_y ) dS
/// ```
///
/// where `n` is the unit normal on the surface pointing into the fluid and
/// `t = (n_y, -n_x)` the matching tangent. The integrals are evaluated by
/// Gauss quadrature on each tagged boundary edge with one-sided traces from
/// the adjacent triangle.
pub fn lift_drag(
    mixed: &MixedSpace,
    velocity_coeffs: &[f64],
    pressure_coeffs: &[f64],
    viscosity: f64,
    surface_tag: BoundaryTag,
) -> Result<(f64, f64)> {
    let velocity = &mixed.velocity;
    let pressure = &mixed.pressure;
    if velocity_coeffs.len() != velocity.num_dofs()
        || pressure_coeffs.len() != pressure.num_dofs()
    {
        return Err(Error::DimensionMismatch(format!(
            "state has {} velocity / {} pressure entries for {} / {} dofs",
            velocity_coeffs.len(),
            pressure_coeffs.len(),
            velocity.num_dofs(),
            pressure.num_dofs()
        )));
    }
    let mesh = velocity.mesh();
    // Boundary edges have exactly one adjacent triangle (mesh validation).
    let mut edge_owner = std::collections::BTreeMap::new();
    for (e, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            edge_owner.entry(key).and_modify(|o| *o = usize::MAX).or_insert(e);
        }
    }
    let gauss = GaussLegendre::new(3)?;
    let mut cd = 0.0;
    let mut cl = 0.0;
    let mut edges = 0usize;
    for edge in &mesh.boundary_edges {
        if edge.tag != surface_tag {
            continue;
        }
        edges += 1;
        let key = (edge.v[0].min(edge.v[1]), edge.v[0].max(edge.v[1]));
        let elem = match edge_owner.get(&key) {
            Some(&e) if e != usize::MAX => e,
            _ => {
                return Err(Error::NonConforming(format!(
                    "boundary edge ({}, {}) has no unique adjacent triangle",
                    edge.v[0], edge.v[1]
                )))
            }
        };
        let pa = mesh.vertices[edge.v[0]];
        let pb = mesh.vertices[edge.v[1]];
        let (ex, ey) = (pb.x - pa.x, pb.y - pa.y);
        let len = (ex * ex + ey * ey).sqrt();
        // Candidate normal; orient it into the fluid, i.e. toward the third
        // vertex of the adjacent triangle.
        let mut n = [ey / len, -ex / len];
        let tri = mesh.triangles[elem];
        let other = tri
            .iter()
            .copied()
            .find(|v| *v != edge.v[0] && *v != edge.v[1])
            .expect("triangle contains its boundary edge");
        let po = mesh.vertices[other];
        let mid = Point2::new(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y));
        if n[0] * (po.x - mid.x) + n[1] * (po.y - mid.y) < 0.0 {
            n = [-n[0], -n[1]];
        }
        let tangent = [n[1], -n[0]];
        // Local barycentric coordinates of the edge endpoints.
        let la = tri.iter().position(|v| *v == edge.v[0]).unwrap();
        let lb = tri.iter().position(|v| *v == edge.v[1]).unwrap();
        for (s, w) in gauss.nodes01.iter().zip(&gauss.weights01) {
            let mut bary = [0.0; 3];
            bary[la] = 1.0 - s;
            bary[lb] = *s;
            let p = pressure.eval_in_elem(pressure_coeffs, elem, bary, 0);
            let gu = velocity.eval_grad_in_elem(velocity_coeffs, elem, bary, 0);
            let gv = velocity.eval_grad_in_elem(velocity_coeffs, elem, bary, 1);
            let dun = tangent[0] * (n[0] * gu[0] + n[1] * gu[1])
                + tangent[1] * (n[0] * gv[0] + n[1] * gv[1]);
            let ds = w * len;
            cd += 20.0 * ds * (viscosity * dun * n[1] - p * n[0]);
            cl += 20.0 * ds * (viscosity * dun * n[0] - p * n[1]);
        }
    }
    if edges == 0 {
        return Err(Error::InvalidDomain(format!(
            "no boundary edges carry tag {}",
            surface_tag.0
        )));
    }
    Ok((cd, cl))
}

/// One sample of the surface force coefficients.
#[derive(Clone, Copy, Debug)]
pub struct ForceSample {
    pub t: f64,
    pub drag: f64,
    pub lift: f64,
}

/// Reference-run parameters: step count, which trailing states to archive,
/// and an optional surface to probe for force coefficients.
#[derive(Clone, Copy, Debug)]
pub struct DnsConfig {
    pub flow: FlowConfig,
    pub n_steps: usize,
    /// States with index >= this are archived (both start levels count as
    /// steps 0 and 1).
    pub archive_from_step: usize,
    pub probe_surface: Option<BoundaryTag>,
}

/// Series produced by a reference run.
pub struct DnsOutput {
    pub forces: Vec<ForceSample>,
    /// (t, kinetic energy) per step.
    pub kinetic_energy: Vec<(f64, f64)>,
    pub final_velocity: Vec<f64>,
    pub final_pressure: Vec<f64>,
    pub manifest: Option<ArchiveManifest>,
}

/// Run the flow solver without feedback, starting from rest, archiving
/// states for later assimilation runs.
pub fn run_dns(
    mixed: &MixedSpace,
    config: &DnsConfig,
    dirichlet: &dyn Fn(Point2, f64, BoundaryTag) -> [f64; 2],
    forcing: Option<&dyn Fn(Point2, f64) -> [f64; 2]>,
    archive_dir: Option<&Path>,
) -> Result<DnsOutput> {
    let nv = mixed.num_velocity_dofs();
    let mut stepper = FlowStepper::new(
        mixed,
        config.flow,
        dirichlet,
        forcing,
        None,
        (vec![0.0; nv], vec![0.0; nv]),
        config.flow.dt,
        1,
    )?;
    let mut writer = match archive_dir {
        Some(dir) => Some(ArchiveWriter::create(
            dir,
            ArchiveManifest {
                format: ARCHIVE_FORMAT,
                mesh_fingerprint: format!("{:016x}", mixed.velocity.mesh().fingerprint()),
                dt: config.flow.dt,
                viscosity: config.flow.viscosity,
                bc_mode: mixed.bc_mode_label().into(),
                num_velocity_dofs: nv,
                num_pressure_dofs: mixed.num_pressure_dofs(),
                first_step: config.archive_from_step,
                num_steps: 0,
            },
        )?),
        None => None,
    };
    let np = mixed.num_pressure_dofs();
    // The two rest states occupy steps 0 and 1.
    if let Some(w) = writer.as_mut() {
        if config.archive_from_step == 0 {
            w.write_state(0, 0.0, &vec![0.0; nv], &vec![0.0; np])?;
        }
        if config.archive_from_step <= 1 {
            w.write_state(1, config.flow.dt, &vec![0.0; nv], &vec![0.0; np])?;
        }
    }
    let mut forces = Vec::new();
    let mut kinetic_energy = Vec::new();
    for step in 2..=config.n_steps {
        let state = stepper.step(None)?;
        if let (Some(w), true) = (writer.as_mut(), step >= config.archive_from_step) {
            w.write_state(step, state.t, &state.v_curr, &state.p_curr)?;
        }
        if let Some(tag) = config.probe_surface {
            let (drag, lift) = lift_drag(
                mixed,
                &stepper.state().v_curr,
                &stepper.state().p_curr,
                config.flow.viscosity,
                tag,
            )?;
            forces.push(ForceSample { t: stepper.state().t, drag, lift });
        }
        kinetic_energy.push((stepper.state().t, stepper.kinetic_energy()));
    }
    let manifest = writer.map(ArchiveWriter::finish).transpose()?;
    Ok(DnsOutput {
        forces,
        kinetic_energy,
        final_velocity: stepper.state().v_curr.clone(),
        final_pressure: stepper.state().p_curr.clone(),
        manifest,
    })
}

/// Assimilation-run parameters.
#[derive(Clone, Copy, Debug)]
pub struct DaConfig {
    pub flow: FlowConfig,
    /// Feedback strength.
    pub mu: f64,
    /// Number of steps to run.
    pub n_steps: usize,
    /// Archive step aligned with the assimilation start: the run's first
    /// velocity level sits at this reference step's time.
    pub start_step: usize,
    pub probe_surface: Option<BoundaryTag>,
}

/// Series produced by an assimilation run against an archived reference.
pub struct DaOutput {
    /// Per-step velocity difference to the reference, absolute and relative
    /// in the mass-matrix norm.
    pub errors: Vec<ErrorSample>,
    pub forces: Vec<ForceSample>,
    pub final_velocity: Vec<f64>,
}

/// Replay an archived reference run as observations: start from rest at the
/// reference time of `config.start_step` and track the reference through
/// nodal feedback on the cover's paired nodes.
pub fn run_nse_da(
    mixed: &MixedSpace,
    cover: &CoarseCover,
    config: &DaConfig,
    dirichlet: &dyn Fn(Point2, f64, BoundaryTag) -> [f64; 2],
    forcing: Option<&dyn Fn(Point2, f64) -> [f64; 2]>,
    reader: &ArchiveReader,
) -> Result<DaOutput> {
    let manifest = reader.manifest();
    let fingerprint = format!("{:016x}", mixed.velocity.mesh().fingerprint());
    if manifest.mesh_fingerprint != fingerprint {
        return Err(Error::Archive(format!(
            "archive mesh fingerprint {} does not match the run's mesh {}",
            manifest.mesh_fingerprint, fingerprint
        )));
    }
    if manifest.dt != config.flow.dt || manifest.viscosity != config.flow.viscosity {
        return Err(Error::Archive(format!(
            "archive was produced with dt = {}, viscosity = {}; this run uses {}, {}",
            manifest.dt, manifest.viscosity, config.flow.dt, config.flow.viscosity
        )));
    }
    if manifest.num_velocity_dofs != mixed.num_velocity_dofs()
        || manifest.num_pressure_dofs != mixed.num_pressure_dofs()
    {
        return Err(Error::Archive(format!(
            "archive stores {} velocity / {} pressure dofs, run has {} / {}",
            manifest.num_velocity_dofs,
            manifest.num_pressure_dofs,
            mixed.num_velocity_dofs(),
            mixed.num_pressure_dofs()
        )));
    }
    let last_needed = config.start_step + config.n_steps;
    if !manifest.contains_step(config.start_step) || !manifest.contains_step(last_needed) {
        return Err(Error::Archive(format!(
            "assimilation needs reference steps {}..={last_needed}, archive stores {}..={}",
            config.start_step,
            manifest.first_step,
            manifest.last_step().unwrap_or(manifest.first_step)
        )));
    }

    let nv = mixed.num_velocity_dofs();
    let start = reader.read_state(config.start_step)?;
    let mut stepper = FlowStepper::new(
        mixed,
        config.flow,
        dirichlet,
        forcing,
        Some((config.mu, cover)),
        (vec![0.0; nv], vec![0.0; nv]),
        start.t + config.flow.dt,
        config.start_step + 1,
    )?;
    let mass = stepper.mass().clone();
    let diff_norm = |a: &[f64], b: &[f64]| -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        mass.bilinear(&d, &d).max(0.0).sqrt()
    };
    let zeros = vec![0.0; nv];
    let mut errors = Vec::new();
    let mut forces = Vec::new();
    // Record the cold-start level against its reference state.
    let ref1 = reader.read_state(config.start_step + 1)?;
    let denom1 = mass.bilinear(&ref1.velocity, &ref1.velocity).max(0.0).sqrt();
    let e1 = diff_norm(&zeros, &ref1.velocity);
    errors.push(ErrorSample {
        t: ref1.t,
        l2_error: e1,
        relative_l2_error: if denom1 > 0.0 { e1 / denom1 } else { e1 },
    });
    for m in 2..=config.n_steps {
        let truth = reader.read_state(config.start_step + m)?;
        let expected_t = stepper.state().t + config.flow.dt;
        if (truth.t - expected_t).abs() > 1e-9 * expected_t.abs().max(1.0) {
            return Err(Error::Archive(format!(
                "reference step {} is at t = {}, expected {expected_t}",
                truth.step, truth.t
            )));
        }
        let state = stepper.step(Some(&truth.velocity))?;
        let err = diff_norm(&state.v_curr, &truth.velocity);
        let denom = mass.bilinear(&truth.velocity, &truth.velocity).max(0.0).sqrt();
        errors.push(ErrorSample {
            t: state.t,
            l2_error: err,
            relative_l2_error: if denom > 0.0 { err / denom } else { err },
        });
        if let Some(tag) = config.probe_surface {
            let (drag, lift) = lift_drag(
                mixed,
                &stepper.state().v_curr,
                &stepper.state().p_curr,
                config.flow.viscosity,
                tag,
            )?;
            forces.push(ForceSample { t: stepper.state().t, drag, lift });
        }
    }
    Ok(DaOutput { errors, forces, final_velocity: stepper.state().v_curr.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_fe_space;
    use crate::mesh::{
        build_coarse_cover, build_uniform_tri_mesh, CoverGrid, TriMesh, GAMMA1, TAG_CYLINDER,
    };
    use crate::fem::{shape_ref_gradients, shape_values, ElementMap, TriQuadrature};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn unit_square_mesh(n: usize) -> Arc<TriMesh> {
        Arc::new(
            build_uniform_tri_mesh(n, n, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
                .unwrap(),
        )
    }

    fn taylor_hood(mesh: &Arc<TriMesh>, essential: &[crate::mesh::BoundaryTag], zero_mean: bool) -> MixedSpace {
        let velocity = build_fe_space(mesh.clone(), 2, 2, essential).unwrap();
        let pressure = build_fe_space(mesh.clone(), 1, 1, &[]).unwrap();
        MixedSpace::new(velocity, pressure, zero_mean).unwrap()
    }

    #[test]
    fn pairing_and_gauge_validation() {
        let mesh = unit_square_mesh(2);
        // Equal-order pair rejected.
        let p1v = build_fe_space(mesh.clone(), 1, 2, &[GAMMA1]).unwrap();
        let p1p = build_fe_space(mesh.clone(), 1, 1, &[]).unwrap();
        assert!(matches!(
            MixedSpace::new(p1v, p1p, true),
            Err(Error::NotInfSup { .. })
        ));
        // All-Dirichlet without the gauge is singular.
        let v = build_fe_space(mesh.clone(), 2, 2, &[GAMMA1]).unwrap();
        let p = build_fe_space(mesh.clone(), 1, 1, &[]).unwrap();
        assert!(matches!(
            MixedSpace::new(v, p, false),
            Err(Error::SingularSystem(_))
        ));
        // Natural outflow with the gauge over-constrains.
        let v = build_fe_space(mesh.clone(), 2, 2, &[]).unwrap();
        let p = build_fe_space(mesh.clone(), 1, 1, &[]).unwrap();
        assert!(matches!(
            MixedSpace::new(v, p, true),
            Err(Error::IncompatibleSpace(_))
        ));
        // Different meshes rejected.
        let v = build_fe_space(unit_square_mesh(2), 2, 2, &[GAMMA1]).unwrap();
        let p = build_fe_space(unit_square_mesh(2), 1, 1, &[]).unwrap();
        assert!(matches!(
            MixedSpace::new(v, p, true),
            Err(Error::IncompatibleSpace(_))
        ));
    }

    /// The assembled saddle-point action must equal the weak form evaluated
    /// by direct quadrature of point values, for random states.
    #[test]
    fn saddle_matches_quadrature_oracle_on_two_triangles() {
        let mesh = unit_square_mesh(1);
        // No essential data and no gauge: compare the raw operator.
        let mixed = taylor_hood(&mesh, &[], false);
        let cover = build_coarse_cover(
            &mixed.velocity,
            &CoverGrid { h: 1.0, origin: Point2::new(0.0, 0.0) },
        )
        .unwrap();
        let (nu, dt, mu) = (0.7, 0.3, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let nv = mixed.num_velocity_dofs();
        let np = mixed.num_pressure_dofs();
        let rand_vec = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let v_prev = rand_vec(&mut rng, nv);
        let v_curr = rand_vec(&mut rng, nv);
        let stepper = FlowStepper::new(
            &mixed,
            FlowConfig { viscosity: nu, dt, skew: true },
            &|_, _, _| [0.0, 0.0],
            None,
            Some((mu, &cover)),
            (v_prev.clone(), v_curr.clone()),
            0.0,
            1,
        )
        .unwrap();
        let (matrix, _) = stepper.assemble_system(dt, Some(&vec![0.0; nv])).unwrap();

        let u = rand_vec(&mut rng, nv);
        let p = rand_vec(&mut rng, np);
        let mut x = u.clone();
        x.extend_from_slice(&p);
        let got = matrix.matvec(&x);

        // Direct quadrature of the weak form: momentum action on each
        // velocity basis function and divergence action on each pressure
        // basis function.
        let w: Vec<f64> =
            v_curr.iter().zip(&v_prev).map(|(c, q)| 2.0 * c - q).collect();
        let vel = &mixed.velocity;
        let pres = &mixed.pressure;
        let quad = TriQuadrature::for_degree(8).unwrap();
        let g = vel.num_geometric_nodes();
        let mut want = vec![0.0; nv + np];
        for elem in 0..mesh.num_triangles() {
            let map = ElementMap::new(&mesh, elem);
            let vnodes = vel.elem_nodes(elem).to_vec();
            let pnodes = pres.elem_nodes(elem).to_vec();
            for (q, bary) in quad.points.iter().enumerate() {
                let wq = quad.weights[q] * map.det;
                let shapes = shape_values(2, *bary);
                let grads = shape_ref_gradients(2, *bary);
                let pshapes = shape_values(1, *bary);
                let uval = [
                    vel.eval_in_elem(&u, elem, *bary, 0),
                    vel.eval_in_elem(&u, elem, *bary, 1),
                ];
                let ugrad = [
                    vel.eval_grad_in_elem(&u, elem, *bary, 0),
                    vel.eval_grad_in_elem(&u, elem, *bary, 1),
                ];
                let wval = [
                    vel.eval_in_elem(&w, elem, *bary, 0),
                    vel.eval_in_elem(&w, elem, *bary, 1),
                ];
                let pval = pres.eval_in_elem(&p, elem, *bary, 0);
                let div_u = ugrad[0][0] + ugrad[1][1];
                for (loc, &node) in vnodes.iter().enumerate() {
                    let phi = shapes[loc];
                    let gphi = map.physical_gradient(grads[loc]);
                    for comp in 0..2 {
                        // (w . grad u_c) phi and the skew partner
                        // (w . grad phi) u_c.
                        let conv_u = wval[0] * ugrad[comp][0] + wval[1] * ugrad[comp][1];
                        let conv_phi = wval[0] * gphi[0] + wval[1] * gphi[1];
                        let momentum = (1.5 / dt) * uval[comp] * phi
                            + nu * (ugrad[comp][0] * gphi[0] + ugrad[comp][1] * gphi[1])
                            + 0.5 * (conv_u * phi - conv_phi * uval[comp])
                            - pval * gphi[comp];
                        want[comp * g + node] += wq * momentum;
                    }
                }
                for (loc, &node) in pnodes.iter().enumerate() {
                    want[nv + node] += wq * div_u * pshapes[loc];
                }
            }
        }
        // Feedback: diagonal contribution mu * area at each paired dof.
        for cell in &cover.cells {
            for comp in 0..2 {
                let dof = vel.dof_index(comp, cell.paired_node);
                want[dof] += mu * cell.area * u[dof];
            }
        }
        let scale = want.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!(
                (g - w).abs() <= 1e-10 * scale,
                "entry {k}: assembled {g} vs quadrature {w}"
            );
        }
    }

    #[test]
    fn feedback_only_changes_paired_diagonals() {
        let mesh = unit_square_mesh(4);
        let mixed = taylor_hood(&mesh, &[GAMMA1], true);
        let cover = build_coarse_cover(
            &mixed.velocity,
            &CoverGrid { h: 0.5, origin: Point2::new(0.0, 0.0) },
        )
        .unwrap();
        let nv = mixed.num_velocity_dofs();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v0: Vec<f64> = (0..nv).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v1: Vec<f64> = (0..nv).map(|_| rng.random_range(-1.0..1.0)).collect();
        let config = FlowConfig { viscosity: 0.01, dt: 0.1, skew: true };
        let bc = |_: Point2, _: f64, _: crate::mesh::BoundaryTag| [0.0, 0.0];
        let mu = 3.5;
        let plain = FlowStepper::new(&mixed, config, &bc, None, None, (v0.clone(), v1.clone()), 0.0, 1)
            .unwrap();
        let nudged = FlowStepper::new(
            &mixed,
            config,
            &bc,
            None,
            Some((mu, &cover)),
            (v0, v1),
            0.0,
            1,
        )
        .unwrap();
        let (a0, _) = plain.assemble_system(0.1, None).unwrap();
        let (a1, _) = nudged.assemble_system(0.1, Some(&vec![0.0; nv])).unwrap();
        let d0 = a0.to_dense();
        let d1 = a1.to_dense();
        let vel = &mixed.velocity;
        let mut expected = std::collections::BTreeMap::new();
        let essential = {
            let mut mask = vec![false; nv];
            for dof in vel.essential_dofs() {
                mask[dof] = true;
            }
            mask
        };
        for cell in &cover.cells {
            for comp in 0..2 {
                let dof = vel.dof_index(comp, cell.paired_node);
                if !essential[dof] {
                    expected.insert(dof, mu * cell.area);
                }
            }
        }
        assert!(!expected.is_empty());
        for r in 0..d0.len() {
            for c in 0..d0.len() {
                let diff = d1[r][c] - d0[r][c];
                let want = if r == c { expected.get(&r).copied().unwrap_or(0.0) } else { 0.0 };
                assert!(
                    (diff - want).abs() < 1e-14,
                    "entry ({r}, {c}): difference {diff}, expected {want}"
                );
            }
        }
    }

    /// A quadratic-in-y channel profile with a linear pressure drop is a
    /// steady state the scheme must hold point-exactly (the profile lies in
    /// the velocity space and the convective term vanishes on it).
    #[test]
    fn channel_profile_is_a_fixed_point() {
        let mesh = Arc::new(
            build_uniform_tri_mesh(6, 3, (Point2::new(0.0, 0.0), Point2::new(2.2, 0.41)))
                .unwrap(),
        );
        let mixed = taylor_hood(&mesh, &[GAMMA1], true);
        let height = 0.41;
        let nu = 0.001;
        let umax_coef = 6.0 / (height * height);
        let profile = move |p: Point2| [umax_coef * p.y * (height - p.y), 0.0];
        let exact = mixed.velocity.interpolate(|p, c| profile(p)[c]);
        let bc = move |p: Point2, _: f64, _: crate::mesh::BoundaryTag| profile(p);
        let mut stepper = FlowStepper::new(
            &mixed,
            FlowConfig { viscosity: nu, dt: 0.1, skew: true },
            &bc,
            None,
            None,
            (exact.clone(), exact.clone()),
            0.0,
            1,
        )
        .unwrap();
        for _ in 0..5 {
            stepper.step(None).unwrap();
            assert!(stepper.last_divergence() <= DIVERGENCE_TOL);
        }
        let max_err = stepper
            .state()
            .v_curr
            .iter()
            .zip(&exact)
            .fold(0.0_f64, |a, (got, want)| a.max((got - want).abs()));
        assert!(max_err <= 1e-9, "profile drifted by {max_err}");
        // Pressure must be the linear drop with zero mean: grad p = nu u''.
        let dpdx = -2.0 * umax_coef * nu;
        let area = 2.2 * 0.41;
        let mean = dpdx * 2.2 / 2.0; // mean of dpdx * x over the rectangle
        let p_exact =
            mixed.pressure.interpolate(|p, _| dpdx * p.x - mean);
        let p_err = stepper
            .state()
            .p_curr
            .iter()
            .zip(&p_exact)
            .fold(0.0_f64, |a, (got, want)| a.max((got - want).abs()));
        assert!(p_err <= 1e-8, "pressure off by {p_err} (area {area})");
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let mesh = unit_square_mesh(3);
        let mixed = taylor_hood(&mesh, &[GAMMA1], true);
        let nv = mixed.num_velocity_dofs();
        let bc = |_: Point2, _: f64, _: crate::mesh::BoundaryTag| [0.0, 0.0];
        let mut stepper = FlowStepper::new(
            &mixed,
            FlowConfig { viscosity: 1.0, dt: 0.1, skew: true },
            &bc,
            None,
            None,
            (vec![0.0; nv], vec![0.0; nv]),
            0.0,
            1,
        )
        .unwrap();
        for _ in 0..3 {
            let state = stepper.step(None).unwrap();
            assert!(state.v_curr.iter().all(|v| *v == 0.0));
            assert!(state.p_curr.iter().all(|p| *p == 0.0));
        }
    }

    #[test]
    fn stokes_reproduces_channel_profile() {
        let mesh = Arc::new(
            build_uniform_tri_mesh(5, 4, (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)))
                .unwrap(),
        );
        let mixed = taylor_hood(&mesh, &[GAMMA1], true);
        let profile = |p: Point2| [p.y * (1.0 - p.y), 0.0];
        let (v, p) = solve_stokes(&mixed, 0.3, &|pt, _| profile(pt), None).unwrap();
        let exact = mixed.velocity.interpolate(|pt, c| profile(pt)[c]);
        let verr = v
            .iter()
            .zip(&exact)
            .fold(0.0_f64, |a, (got, want)| a.max((got - want).abs()));
        assert!(verr <= 1e-10, "Stokes velocity off by {verr}");
        // p = -2 nu x + mean gauge.
        let p_exact = mixed.pressure.interpolate(|pt, _| -0.6 * pt.x + 0.3);
        let perr = p
            .iter()
            .zip(&p_exact)
            .fold(0.0_f64, |a, (got, want)| a.max((got - want).abs()));
        assert!(perr <= 1e-9, "Stokes pressure off by {perr}");
    }

    #[test]
    fn stokes_plug_inflow_conserves_mass() {
        use crate::mesh::{build_channel_mesh, TAG_INFLOW, TAG_OUTFLOW, TAG_WALL};
        let mesh = Arc::new(
            build_channel_mesh(24, 6, (0.0, 4.0), 1.0, &|x: f64| 0.3 * (x * 0.9).sin())
                .unwrap(),
        );
        let velocity =
            build_fe_space(mesh.clone(), 2, 2, &[TAG_INFLOW, TAG_WALL]).unwrap();
        let pressure = build_fe_space(mesh.clone(), 1, 1, &[]).unwrap();
        let mixed = MixedSpace::new(velocity, pressure, false).unwrap();
        let bc = |_: Point2, tag: crate::mesh::BoundaryTag| {
            if tag == TAG_INFLOW {
                [3.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        };
        let (v, _p) = solve_stokes(&mixed, 0.01, &bc, None).unwrap();
        // Whatever enters through the (discretized) plug inflow must leave
        // through the outflow; both ends are vertical edges, so throughput
        // is the integral of the horizontal component.
        let mut edge_owner = std::collections::BTreeMap::new();
        for (e, tri) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                edge_owner.insert((a.min(b), a.max(b)), e);
            }
        }
        let gauss = GaussLegendre::new(3).unwrap();
        let throughput = |tag: crate::mesh::BoundaryTag| -> f64 {
            let mut flux = 0.0;
            for edge in &mesh.boundary_edges {
                if edge.tag != tag {
                    continue;
                }
                let elem =
                    edge_owner[&(edge.v[0].min(edge.v[1]), edge.v[0].max(edge.v[1]))];
                let tri = mesh.triangles[elem];
                let la = tri.iter().position(|v| *v == edge.v[0]).unwrap();
                let lb = tri.iter().position(|v| *v == edge.v[1]).unwrap();
                let pa = mesh.vertices[edge.v[0]];
                let pb = mesh.vertices[edge.v[1]];
                let len = pa.dist(&pb);
                for (s, w) in gauss.nodes01.iter().zip(&gauss.weights01) {
                    let mut bary = [0.0; 3];
                    bary[la] = 1.0 - s;
                    bary[lb] = *s;
                    flux += w * len * mixed.velocity.eval_in_elem(&v, elem, bary, 0);
                }
            }
            flux
        };
        let inflow = throughput(TAG_INFLOW);
        let outflow = throughput(TAG_OUTFLOW);
        // Plug value 3 over unit height, reduced a little where the profile
        // is pinned to zero at the no-slip corners.
        assert!(inflow > 2.5 && inflow < 3.0, "inflow throughput {inflow}");
        assert!(
            (outflow - inflow).abs() < 1e-8,
            "mass not conserved: in {inflow}, out {outflow}"
        );
    }

    #[test]
    fn surface_forces_vanish_for_rest_state_and_uniform_pressure() {
        use crate::mesh::{build_cylinder_channel_mesh, CylinderMeshParams};
        let mesh = Arc::new(
            build_cylinder_channel_mesh(&CylinderMeshParams { near_h: 0.04, far_h: 0.12 })
                .unwrap(),
        );
        let velocity = build_fe_space(mesh.clone(), 2, 2, &[]).unwrap();
        let pressure = build_fe_space(mesh.clone(), 1, 1, &[]).unwrap();
        let mixed = MixedSpace::new(velocity, pressure, false).unwrap();
        let v = vec![0.0; mixed.num_velocity_dofs()];
        let p0 = vec![0.0; mixed.num_pressure_dofs()];
        let (cd, cl) = lift_drag(&mixed, &v, &p0, 0.001, TAG_CYLINDER).unwrap();
        assert_eq!((cd, cl), (0.0, 0.0));
        // Uniform pressure on a closed surface integrates to zero force.
        let p1 = vec![1.0; mixed.num_pressure_dofs()];
        let (cd, cl) = lift_drag(&mixed, &v, &p1, 0.001, TAG_CYLINDER).unwrap();
        assert!(cd.abs() < 1e-11 && cl.abs() < 1e-11, "({cd}, {cl})");
        // Missing tag reported.
        let square = unit_square_mesh(1);
        let sv = build_fe_space(square.clone(), 2, 2, &[]).unwrap();
        let sp = build_fe_space(square.clone(), 1, 1, &[]).unwrap();
        let smixed = MixedSpace::new(sv, sp, false).unwrap();
        let v = vec![0.0; smixed.num_velocity_dofs()];
        let p = vec![0.0; smixed.num_pressure_dofs()];
        assert!(matches!(
            lift_drag(&smixed, &v, &p, 0.001, TAG_CYLINDER),
            Err(Error::InvalidDomain(_))
        ));
    }

    /// End-to-end: a short reference run is archived, then an assimilating
    /// run with a dense cover and strong feedback tracks it far better than
    /// an identical run without feedback.
    #[test]
    fn assimilation_tracks_archived_reference() {
        let dir = std::env::temp_dir()
            .join(format!("nudgefem-nse-da-{}", std::process::id()));
        if dir.exists() {
            std::fs::remove_dir_all(&dir).unwrap();
        }
        let mesh = unit_square_mesh(4);
        let mixed = taylor_hood(&mesh, &[GAMMA1], true);
        // A rotating boundary-driven flow: u = (y - 0.5, 0.5 - x) on the
        // boundary (divergence-free, tangential on the square's midlines).
        let bc = |p: Point2, _: f64, _: crate::mesh::BoundaryTag| [p.y - 0.5, 0.5 - p.x];
        let config = FlowConfig { viscosity: 0.05, dt: 0.05, skew: true };
        let n_steps = 30;
        run_dns(
            &mixed,
            &DnsConfig { flow: config, n_steps, archive_from_step: 0, probe_surface: None },
            &bc,
            None,
            Some(&dir),
        )
        .unwrap();
        let reader = ArchiveReader::open(&dir).unwrap();
        let cover = build_coarse_cover(
            &mixed.velocity,
            &CoverGrid { h: 0.25, origin: Point2::new(0.0, 0.0) },
        )
        .unwrap();
        let da = |mu: f64| {
            run_nse_da(
                &mixed,
                &cover,
                &DaConfig {
                    flow: config,
                    mu,
                    n_steps: 20,
                    start_step: 8,
                    probe_surface: None,
                },
                &bc,
                None,
                &reader,
            )
            .unwrap()
        };
        let nudged = da(200.0);
        let free = da(0.0);
        let last = |out: &DaOutput| out.errors.last().unwrap().relative_l2_error;
        assert!(
            last(&nudged) < 0.2 * last(&free),
            "feedback did not help: {} vs {}",
            last(&nudged),
            last(&free)
        );
        // Misaligned requests are refused.
        let bad = run_nse_da(
            &mixed,
            &cover,
            &DaConfig { flow: config, mu: 1.0, n_steps: 40, start_step: 8, probe_surface: None },
            &bc,
            None,
            &reader,
        );
        assert!(matches!(bad, Err(Error::Archive(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
