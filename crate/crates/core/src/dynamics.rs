//! Time integration of the Moreau–Yosida penalized target and controlled
//! systems.
//!
//! The stiff part `A_h = νK_h + M_h` is treated by Crank–Nicolson; reaction,
//! convection, source, penalty and feedback are explicit second-order
//! Adams–Bashforth terms, bootstrapped by one explicit Euler step:
//!
//! ```text
//! (M + dt/2 A) u¹⁺ⁿ = (M − dt/2 A) uⁿ + dt (3/2 Lⁿ − 1/2 Lⁿ⁻¹)
//! ```
//!
//! where `Lⁿ = M_h Eⁿ` is the load vector of the explicit terms.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fem::{
    assemble_a, assemble_mass, positive_part_norm_slice, BandedOperator, Field, Mesh,
    TridiagonalFactor,
};
use crate::feedback::FeedbackOperator;

/// Space-time coefficient `(x, t) ↦ value`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Initial profile `x ↦ value`.
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Data of `∂ₜy + (−νΔ+1)y + a y + b ∂ₓy − f + k(y−ψ)⁺ = 0`.
#[derive(Clone)]
pub struct ProblemData {
    pub nu: f64,
    pub a: SpaceTimeFn,
    pub b: SpaceTimeFn,
    pub f: SpaceTimeFn,
    pub psi: SpaceTimeFn,
    pub k_my: f64,
    pub y_init: SpaceFn,
    pub w_init: SpaceFn,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("nu", &self.nu)
            .field("k_my", &self.k_my)
            .finish_non_exhaustive()
    }
}

/// Allowed excess of an initial state over `ψ(·, 0)`.
pub const INITIAL_VIOLATION_TOL: f64 = 1e-12;
/// `‖w‖` beyond this aborts a run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Explicit penalty stability: `dt · k_MY` must not exceed this.
pub const PENALTY_STABILITY_LIMIT: f64 = 1.0;

impl ProblemData {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(invalid("nu", format!("must be positive, got {}", self.nu)));
        }
        if !(self.k_my >= 0.0) || !self.k_my.is_finite() {
            return Err(invalid("k_my", format!("must be nonnegative, got {}", self.k_my)));
        }
        Ok(())
    }

    /// Samples an initial profile and checks it lies below `ψ(·, 0)`.
    pub fn initial_field(&self, mesh: &Mesh, init: &SpaceFn) -> Result<Field> {
        let field = Field::from_fn(*mesh, |x| init(x));
        for (x, &v) in mesh.nodes().zip(field.values()) {
            let excess = v - (self.psi)(x, 0.0);
            if excess > INITIAL_VIOLATION_TOL {
                return Err(Error::InitialViolation { x, excess });
            }
        }
        Ok(field)
    }

    pub fn psi_at(&self, mesh: &Mesh, t: f64) -> Field {
        Field::from_fn(*mesh, |x| (self.psi)(x, t))
    }
}

/// Largest step of the form `dt / 10^j` satisfying the penalty stability rule.
/// Returns the step and whether it had to be reduced.
pub fn stable_dt(dt: f64, k_max: f64) -> (f64, bool) {
    let mut out = dt;
    while out * k_max > PENALTY_STABILITY_LIMIT * (1.0 + 1e-12) {
        out /= 10.0;
    }
    (out, out < dt)
}

/// `k · max(y − ψ, 0)` nodally.
pub fn penalty(y: &Field, psi_t: &Field, k_my: f64) -> Result<Field> {
    y.check_mesh(psi_t)?;
    let values = y
        .values()
        .iter()
        .zip(psi_t.values())
        .map(|(u, p)| k_my * (u - p).max(0.0))
        .collect();
    Field::new(*y.mesh(), values)
}

/// Pointwise `k((z + y − ψ)⁺ − (y − ψ)⁺)`.
pub fn n_k(z: f64, y: f64, psi: f64, k_my: f64) -> f64 {
    k_my * ((z + y - psi).max(0.0) - (y - psi).max(0.0))
}

/// `N_k(z)` at the nodes.
pub fn nonlinearity_n(z: &Field, y: &Field, psi_t: &Field, k_my: f64) -> Result<Field> {
    z.check_mesh(y)?;
    z.check_mesh(psi_t)?;
    let values = z
        .values()
        .iter()
        .zip(y.values())
        .zip(psi_t.values())
        .map(|((&z, &y), &p)| n_k(z, y, p, k_my))
        .collect();
    Field::new(*z.mesh(), values)
}

/// Centred nodal differences, one-sided at the two end nodes.
pub fn nodal_gradient(values: &[f64], h: f64, out: &mut [f64]) {
    let n = values.len();
    out[0] = (values[1] - values[0]) / h;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (values[n - 1] - values[n - 2]) / h;
}

/// Coefficients sampled at the nodes at a fixed time.
#[derive(Debug, Clone)]
pub struct CoefficientSnapshot {
    pub t: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub f: Vec<f64>,
    pub psi: Vec<f64>,
}

impl CoefficientSnapshot {
    pub fn new(n: usize) -> Self {
        Self {
            t: f64::NAN,
            a: vec![0.0; n],
            b: vec![0.0; n],
            f: vec![0.0; n],
            psi: vec![0.0; n],
        }
    }

    pub fn at(data: &ProblemData, mesh: &Mesh, t: f64) -> Self {
        let mut s = Self::new(mesh.n_nodes());
        s.update(data, mesh, t);
        s
    }

    pub fn update(&mut self, data: &ProblemData, mesh: &Mesh, t: f64) {
        self.t = t;
        for (i, x) in mesh.nodes().enumerate() {
            self.a[i] = (data.a)(x, t);
            self.b[i] = (data.b)(x, t);
            self.f[i] = (data.f)(x, t);
            self.psi[i] = (data.psi)(x, t);
        }
    }

    /// Nodal `−a u − b D_h u + f − k(u − ψ)⁺`; `grad` is scratch space.
    pub fn explicit_nodal(&self, u: &[f64], k_my: f64, h: f64, grad: &mut [f64], out: &mut [f64]) {
        nodal_gradient(u, h, grad);
        for i in 0..u.len() {
            out[i] = -self.a[i] * u[i] - self.b[i] * grad[i] + self.f[i]
                - k_my * (u[i] - self.psi[i]).max(0.0);
        }
    }
}

/// Explicit right-hand side at time `t`, plus an optional control field.
pub fn explicit_rhs(
    data: &ProblemData,
    t: f64,
    field: &Field,
    control: Option<&Field>,
) -> Result<Field> {
    let mesh = *field.mesh();
    let snap = CoefficientSnapshot::at(data, &mesh, t);
    let n = mesh.n_nodes();
    let mut grad = vec![0.0; n];
    let mut out = Field::zeros(mesh);
    snap.explicit_nodal(field.values(), data.k_my, mesh.h(), &mut grad, out.values_mut());
    if let Some(c) = control {
        out.axpy(1.0, c)?;
    }
    Ok(out)
}

/// Fixed-step Crank–Nicolson/Adams–Bashforth integrator for one mesh and `dt`.
#[derive(Debug, Clone)]
pub struct Integrator {
    mesh: Mesh,
    dt: f64,
    mass: BandedOperator,
    /// `M − dt/2 A`
    explicit_op: BandedOperator,
    /// factors of `M + dt/2 A`
    implicit: TridiagonalFactor,
}

impl Integrator {
    pub fn new(mesh: &Mesh, nu: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let a = assemble_a(mesh, nu)?;
        let mass = assemble_mass(mesh);
        let explicit_op = mass.combine(1.0, &a, -0.5 * dt)?;
        let implicit = mass.combine(1.0, &a, 0.5 * dt)?.factor()?;
        Ok(Self {
            mesh: *mesh,
            dt,
            mass,
            explicit_op,
            implicit,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &BandedOperator {
        &self.mass
    }

    /// One step given the current and previous explicit load vectors.
    /// `prev = None` gives the explicit Euler bootstrap.
    pub fn advance(&self, u: &mut [f64], load_now: &[f64], load_prev: Option<&[f64]>, rhs: &mut [f64]) {
        self.explicit_op.apply_slice(u, rhs);
        let dt = self.dt;
        match load_prev {
            Some(prev) => {
                for i in 0..rhs.len() {
                    rhs[i] += dt * (1.5 * load_now[i] - 0.5 * prev[i]);
                }
            }
            None => {
                for i in 0..rhs.len() {
                    rhs[i] += dt * load_now[i];
                }
            }
        }
        self.implicit.solve_in_place(rhs);
        u.copy_from_slice(rhs);
    }
}

/// State of a single uncoupled system.
#[derive(Debug, Clone)]
pub struct StepperState {
    pub step: usize,
    pub u: Field,
    history: Option<Vec<f64>>,
}

impl StepperState {
    pub fn new(u: Field) -> Self {
        Self {
            step: 0,
            u,
            history: None,
        }
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }
}

/// Advances one system by one step; `control` is added to the explicit terms.
pub fn cnab_step(
    integrator: &Integrator,
    state: &mut StepperState,
    data: &ProblemData,
    control: Option<&Field>,
) -> Result<()> {
    let t = state.time(integrator.dt);
    let e = explicit_rhs(data, t, &state.u, control)?;
    let mut load = vec![0.0; e.len()];
    integrator.mass.apply_slice(e.values(), &mut load);
    let mut rhs = vec![0.0; e.len()];
    integrator.advance(state.u.values_mut(), &load, state.history.as_deref(), &mut rhs);
    state.history = Some(load);
    state.step += 1;
    Ok(())
}

/// Integration controls for [`run_coupled`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t_final: f64,
    pub dt: f64,
    /// Metrics are recorded every this many steps (and at the final step).
    pub record_every: usize,
    /// Obstacle gaps `u − ψ` are stored every this many steps, if set.
    pub contact_every: Option<usize>,
}

impl RunSettings {
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(invalid("t_final", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.record_every == 0 || self.contact_every == Some(0) {
            return Err(invalid("record_every", "strides must be at least 1"));
        }
        Ok(())
    }
}

/// Obstacle gaps `u − ψ` at selected times, for contact-set analysis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapFrames {
    pub times: Vec<f64>,
    pub gap_y: Vec<Vec<f64>>,
    pub gap_w: Vec<Vec<f64>>,
}

/// Per-record metrics of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// `‖w − y‖_{L²}`
    pub diff_norm: Vec<f64>,
    /// `‖K(w − y)‖_{L²}`, zero while the feedback is off
    pub control_norm: Vec<f64>,
    /// `max_x (y − ψ)⁺`
    pub max_viol_y: Vec<f64>,
    pub max_viol_w: Vec<f64>,
    /// `‖(y − ψ)⁺‖_{L²}`
    pub viol_l2_y: Vec<f64>,
    pub viol_l2_w: Vec<f64>,
    pub gaps: GapFrames,
    pub final_y: Field,
    pub final_w: Field,
    pub dt: f64,
    pub k_my: f64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the recorded time closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn diff_ratio(&self) -> f64 {
        self.diff_norm[self.len() - 1] / self.diff_norm[0]
    }
}

/// Whether `t` lies in one of the half-open windows `[start, end)`.
pub fn feedback_active(windows: &[(f64, f64)], t: f64) -> bool {
    windows.iter().any(|&(a, b)| t >= a && t < b)
}

/// Largest nodal violation and the exact `‖(u − ψ)⁺‖` of the P1 gap.
fn violation(u: &[f64], psi: &[f64], mesh: &Mesh, scratch: &mut [f64]) -> (f64, f64) {
    let mut max = 0.0_f64;
    for i in 0..u.len() {
        scratch[i] = u[i] - psi[i];
        max = max.max(scratch[i]);
    }
    (max, positive_part_norm_slice(scratch, mesh.h()))
}

/// Integrates the target `y` and the controlled `w` side by side.
///
/// The feedback `K(w − y)` is added to the `w` equation only while the time
/// lies in one of `feed_on`.
pub fn run_coupled(
    data: &ProblemData,
    mesh: &Mesh,
    feedback: &FeedbackOperator,
    feed_on: &[(f64, f64)],
    settings: &RunSettings,
) -> Result<TimeSeries> {
    data.validate()?;
    settings.validate()?;
    if feedback.pair().mesh() != mesh {
        return Err(Error::MeshMismatch);
    }
    if settings.dt * data.k_my > PENALTY_STABILITY_LIMIT * (1.0 + 1e-12) {
        log::warn!(
            "dt * k_MY = {:.3} exceeds the explicit penalty limit {}",
            settings.dt * data.k_my,
            PENALTY_STABILITY_LIMIT
        );
    }

    let n = mesh.n_nodes();
    let h = mesh.h();
    let dt = settings.dt;
    let integrator = Integrator::new(mesh, data.nu, dt)?;
    let actuators = feedback.pair().actuators();
    let gram_u = feedback.pair().gram_u();

    let mut y = data.initial_field(mesh, &data.y_init)?.into_values();
    let mut w = data.initial_field(mesh, &data.w_init)?.into_values();

    let mut snap = CoefficientSnapshot::new(n);
    let mut grad = vec![0.0; n];
    let mut nodal = vec![0.0; n];
    let mut load_y = vec![0.0; n];
    let mut load_w = vec![0.0; n];
    let mut prev_y: Option<Vec<f64>> = None;
    let mut prev_w: Option<Vec<f64>> = None;
    let mut control_load = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let n_steps = settings.n_steps();
    let capacity = n_steps / settings.record_every + 2;
    let mut series = TimeSeries {
        times: Vec::with_capacity(capacity),
        diff_norm: Vec::with_capacity(capacity),
        control_norm: Vec::with_capacity(capacity),
        max_viol_y: Vec::with_capacity(capacity),
        max_viol_w: Vec::with_capacity(capacity),
        viol_l2_y: Vec::with_capacity(capacity),
        viol_l2_w: Vec::with_capacity(capacity),
        gaps: GapFrames::default(),
        final_y: Field::zeros(*mesh),
        final_w: Field::zeros(*mesh),
        dt,
        k_my: data.k_my,
    };

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        snap.update(data, mesh, t);

        for i in 0..n {
            diff[i] = w[i] - y[i];
        }
        let active = feedback_active(feed_on, t);
        let control_norm = if active {
            let moments = nalgebra::DVector::from_iterator(
                actuators.len(),
                actuators
                    .loads()
                    .iter()
                    .map(|b| b.iter().zip(&diff).map(|(p, q)| p * q).sum::<f64>()),
            );
            let coeffs = feedback.core() * moments;
            actuators.combine_loads(&coeffs, &mut control_load);
            (coeffs.transpose() * gram_u * &coeffs)[(0, 0)].max(0.0).sqrt()
        } else {
            0.0
        };

        let is_last = step == n_steps;
        if step % settings.record_every == 0 || is_last {
            series.times.push(t);
            series.diff_norm.push(mesh.inner_slices(&diff, &diff).sqrt());
            series.control_norm.push(control_norm);
            let (my, ly) = violation(&y, &snap.psi, mesh, &mut nodal);
            let (mw, lw) = violation(&w, &snap.psi, mesh, &mut nodal);
            series.max_viol_y.push(my);
            series.max_viol_w.push(mw);
            series.viol_l2_y.push(ly);
            series.viol_l2_w.push(lw);
        }
        if let Some(stride) = settings.contact_every {
            if step % stride == 0 || is_last {
                series.gaps.times.push(t);
                series
                    .gaps
                    .gap_y
                    .push(y.iter().zip(&snap.psi).map(|(u, p)| u - p).collect());
                series
                    .gaps
                    .gap_w
                    .push(w.iter().zip(&snap.psi).map(|(u, p)| u - p).collect());
            }
        }
        if is_last {
            break;
        }

        snap.explicit_nodal(&y, data.k_my, h, &mut grad, &mut nodal);
        integrator.mass.apply_slice(&nodal, &mut load_y);
        snap.explicit_nodal(&w, data.k_my, h, &mut grad, &mut nodal);
        integrator.mass.apply_slice(&nodal, &mut load_w);
        if active {
            for (l, c) in load_w.iter_mut().zip(&control_load) {
                *l += c;
            }
        }

        integrator.advance(&mut y, &load_y, prev_y.as_deref(), &mut rhs);
        integrator.advance(&mut w, &load_w, prev_w.as_deref(), &mut rhs);
        match (&mut prev_y, &mut prev_w) {
            (Some(py), Some(pw)) => {
                py.copy_from_slice(&load_y);
                pw.copy_from_slice(&load_w);
            }
            _ => {
                prev_y = Some(load_y.clone());
                prev_w = Some(load_w.clone());
            }
        }

        let w_max = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(w_max <= DIVERGENCE_THRESHOLD) {
            let norm = mesh.inner_slices(&w, &w).sqrt();
            return Err(Error::Divergence {
                t: t + dt,
                norm: if norm.is_finite() { norm } else { f64::INFINITY },
            });
        }
    }

    series.final_y = Field::new(*mesh, y)?;
    series.final_w = Field::new(*mesh, w)?;
    Ok(series)
}
