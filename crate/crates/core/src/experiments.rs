//! Scenario presets and the studies built on top of [`run_coupled`].

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_coupled, stable_dt, ProblemData, RunSettings, SpaceTimeFn, TimeSeries};
use crate::error::{invalid, Error, Result};
use crate::feedback::{build_feedback, FeedbackOperator};
use crate::fem::{build_mesh, BoundaryCondition, Mesh};
use crate::spaces::SubspacePair;

/// Named coefficient sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Smooth moving obstacle.
    Smooth,
    /// Smooth obstacle replaced by constants on `[0, 0.1]` and `[0.8, 1]`.
    Nonsmooth,
}

pub fn coefficient_a(x: f64, t: f64) -> f64 {
    -6.0 + x + 2.0 * (t + x).sin().abs()
}

pub fn coefficient_b(x: f64, t: f64) -> f64 {
    t.cos() * x * x
}

pub fn source_f(x: f64, t: f64) -> f64 {
    -t.sin() * x
}

pub fn smooth_obstacle(x: f64, t: f64) -> f64 {
    2.0 + t.cos() + (10.0 * PI * x * (x - 1.0) * (x - 0.25 * (5.0 * t).cos())).cos()
}

/// Left-closed at both jumps: `[0, 0.1]` and `[0.8, 1]` take the constants.
pub fn nonsmooth_obstacle(x: f64, t: f64) -> f64 {
    if x <= 0.1 {
        3.1
    } else if x < 0.8 {
        smooth_obstacle(x, t)
    } else {
        -0.5
    }
}

pub fn target_initial(x: f64) -> f64 {
    3.0 * (PI * x).cos()
}

pub fn controlled_initial(_x: f64) -> f64 {
    -1.0
}

impl Preset {
    pub fn obstacle(&self) -> SpaceTimeFn {
        match self {
            Preset::Smooth => Arc::new(smooth_obstacle),
            Preset::Nonsmooth => Arc::new(nonsmooth_obstacle),
        }
    }

    pub fn problem_data(&self, nu: f64, k_my: f64) -> ProblemData {
        ProblemData {
            nu,
            a: Arc::new(coefficient_a),
            b: Arc::new(coefficient_b),
            f: Arc::new(source_f),
            psi: self.obstacle(),
            k_my,
            y_init: Arc::new(target_initial),
            w_init: Arc::new(controlled_initial),
        }
    }
}

/// Complete description of one family of runs (one per `k_my`).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub preset: Preset,
    pub n_nodes: usize,
    pub bc: BoundaryCondition,
    pub nu: f64,
    pub m: usize,
    pub lambda: f64,
    pub support_ratio: f64,
    pub k_my: Vec<f64>,
    /// Requested step; runs with large `k_my` may use a smaller one.
    pub dt: f64,
    pub t_final: f64,
    pub feed_on: Vec<(f64, f64)>,
    /// Record stride in steps of the requested `dt`.
    pub record_every: usize,
    /// Gap-frame stride in steps of the requested `dt`.
    pub contact_every: Option<usize>,
    pub contact_eps: f64,
}

/// Default stabilization setup: 5 actuators, `λ = 4`, `k = 1000`, `T = 4`.
pub fn scenario_default() -> Scenario {
    Scenario {
        name: "lam4M5Feed04T4".into(),
        preset: Preset::Smooth,
        n_nodes: 2001,
        bc: BoundaryCondition::NeumannHomogeneous,
        nu: 0.1,
        m: 5,
        lambda: 4.0,
        support_ratio: 0.1,
        k_my: vec![1000.0],
        dt: 1e-4,
        t_final: 4.0,
        feed_on: vec![(0.0, 4.0)],
        record_every: 100,
        contact_every: None,
        contact_eps: 1e-3,
    }
}

/// Nonsmooth obstacle, 10 actuators, `λ = 5`, `T = 2`, `k ∈ {5000, 20000}`.
pub fn scenario_nonsmooth() -> Scenario {
    Scenario {
        name: "lam5M10Feed02T2".into(),
        preset: Preset::Nonsmooth,
        m: 10,
        lambda: 5.0,
        k_my: vec![5000.0, 20000.0],
        t_final: 2.0,
        feed_on: vec![(0.0, 2.0)],
        contact_every: Some(100),
        ..scenario_default()
    }
}

impl Scenario {
    /// Decodes stems like `lam5M6Feed14T4`: `λ = 5`, `M = 6`, feedback on
    /// `(1, 4)`, `T = 4`. The two digits after `Feed` are the window ends.
    pub fn from_stem(stem: &str, preset: Preset) -> Result<Self> {
        let bad = || Error::Config(format!("cannot decode scenario stem `{stem}`"));
        let rest = stem.strip_prefix("lam").ok_or_else(bad)?;
        let (lam, rest) = rest.split_once('M').ok_or_else(bad)?;
        let (m, rest) = rest.split_once("Feed").ok_or_else(bad)?;
        let (feed, t) = rest.split_once('T').ok_or_else(bad)?;
        let t = t.strip_suffix("KTK").unwrap_or(t);
        let digits: Vec<f64> = feed
            .chars()
            .map(|c| c.to_digit(10).map(f64::from))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        if digits.len() != 2 {
            return Err(bad());
        }
        let base = match preset {
            Preset::Smooth => scenario_default(),
            Preset::Nonsmooth => scenario_nonsmooth(),
        };
        Ok(Scenario {
            name: stem.to_string(),
            lambda: lam.parse().map_err(|_| bad())?,
            m: m.parse().map_err(|_| bad())?,
            feed_on: if digits[0] < digits[1] {
                vec![(digits[0], digits[1])]
            } else {
                Vec::new()
            },
            t_final: t.parse().map_err(|_| bad())?,
            ..base
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(invalid("nu", "must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("lambda", "must be nonnegative"));
        }
        if self.m == 0 {
            return Err(invalid("m", "must be at least 1"));
        }
        if self.k_my.is_empty() || self.k_my.iter().any(|&k| !(k > 0.0)) {
            return Err(invalid("k_my", "need at least one positive value"));
        }
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(invalid("dt", "dt and t_final must be positive"));
        }
        if self.record_every == 0 || self.contact_every == Some(0) {
            return Err(invalid("record_every", "strides must be at least 1"));
        }
        for &(a, b) in &self.feed_on {
            if !(a >= 0.0 && b > a) {
                return Err(invalid("feed_on", format!("bad window ({a}, {b})")));
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.n_nodes, self.bc)
    }

    pub fn feedback(&self, mesh: &Mesh) -> Result<FeedbackOperator> {
        let pair = SubspacePair::standard(self.m, self.support_ratio, self.nu, mesh)?;
        build_feedback(pair, self.lambda)
    }

    /// Settings for a run at `k_my`. Strides are converted to time intervals
    /// of the requested `dt`, so runs with a tightened step record at the
    /// same instants.
    pub fn settings_for(&self, k_my: f64) -> RunSettings {
        let (dt, tightened) = stable_dt(self.dt, k_my);
        if tightened {
            log::warn!(
                "{}: dt {:e} too large for k_MY = {k_my}; using {dt:e}",
                self.name,
                self.dt
            );
        }
        let factor = (self.dt / dt).round() as usize;
        RunSettings {
            t_final: self.t_final,
            dt,
            record_every: self.record_every * factor,
            contact_every: self.contact_every.map(|c| c * factor),
        }
    }

    pub fn run_single(&self, k_my: f64) -> Result<TimeSeries> {
        self.validate()?;
        let mesh = self.mesh()?;
        let feedback = self.feedback(&mesh)?;
        self.run_with(&mesh, &feedback, k_my)
    }

    fn run_with(&self, mesh: &Mesh, feedback: &FeedbackOperator, k_my: f64) -> Result<TimeSeries> {
        let data = self.preset.problem_data(self.nu, k_my);
        run_coupled(&data, mesh, feedback, &self.feed_on, &self.settings_for(k_my))
    }

    /// One run per entry of `k_my`, in parallel, returned in input order.
    pub fn run(&self) -> Result<Vec<TimeSeries>> {
        self.validate()?;
        let mesh = self.mesh()?;
        let feedback = self.feedback(&mesh)?;
        self.k_my
            .par_iter()
            .map(|&k| self.run_with(&mesh, &feedback, k))
            .collect()
    }

    pub fn with(&self, m: usize, lambda: f64) -> Scenario {
        Scenario {
            name: format!("lam{lambda}M{m}"),
            m,
            lambda,
            ..self.clone()
        }
    }
}

/// Runs `base` once per penalty parameter; all series share the record grid.
pub fn sweep_kmy(base: &Scenario, ks: &[f64]) -> Result<Vec<TimeSeries>> {
    if ks.is_empty() {
        return Err(invalid("k_my", "empty sweep"));
    }
    Scenario {
        k_my: ks.to_vec(),
        ..base.clone()
    }
    .run()
}

/// Least-squares fit `ln ‖z(t)‖ ≈ intercept − μ t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub mu: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Decay-fit window start; excludes the bootstrap and control transient.
pub const DECAY_FIT_START: f64 = 0.05;

pub fn fit_decay(series: &TimeSeries, t_start: f64, t_end: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.diff_norm)
        .filter(|(&t, &d)| t >= t_start - 1e-12 && t <= t_end + 1e-12 && d > 0.0)
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(invalid("fit window", "fewer than three usable samples"));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sll: f64 = pts.iter().map(|p| (p.1 - ml).powi(2)).sum();
    let slope = stl / stt;
    let intercept = ml - slope * mt;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if sll > 0.0 { 1.0 - ss_res / sll } else { 1.0 };
    Ok(DecayFit {
        mu: -slope,
        intercept,
        r_squared,
    })
}

/// Final over initial difference norm of one `(M, λ)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NecessityRow {
    pub m: usize,
    pub lambda: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityReport {
    /// Single actuator, increasing gain.
    pub few_actuators: Vec<NecessityRow>,
    /// Unit gain, increasing actuator count.
    pub small_gain: Vec<NecessityRow>,
    /// The stabilizing reference configuration `(5, 4)`.
    pub reference: NecessityRow,
}

/// Horizon of the necessity runs.
pub const NECESSITY_HORIZON: f64 = 1.0;

fn ratios(base: &Scenario, configs: &[(usize, f64)]) -> Result<Vec<NecessityRow>> {
    let k = base.k_my[0];
    configs
        .par_iter()
        .map(|&(m, lambda)| {
            let s = base.with(m, lambda);
            let series = s.run_single(k)?;
            Ok(NecessityRow {
                m,
                lambda,
                ratio: series.diff_ratio(),
            })
        })
        .collect()
}

/// Single actuator with `λ ∈ {1, 10, 50}` and unit gain with
/// `M ∈ {1, 10, 20}`, each over `T = 1`, plus the `(5, 4)` reference.
pub fn necessity_studies(base: &Scenario) -> Result<NecessityReport> {
    let base = Scenario {
        t_final: NECESSITY_HORIZON,
        feed_on: vec![(0.0, NECESSITY_HORIZON)],
        ..base.clone()
    };
    let configs = [
        (1, 1.0),
        (1, 10.0),
        (1, 50.0),
        (1, 1.0),
        (10, 1.0),
        (20, 1.0),
        (5, 4.0),
    ];
    let rows = ratios(&base, &configs)?;
    Ok(NecessityReport {
        few_actuators: rows[0..3].to_vec(),
        small_gain: rows[3..6].to_vec(),
        reference: rows[6],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub m: usize,
    pub lambda: f64,
    pub fit: DecayFit,
    pub ratio: f64,
    /// First recorded time at which the difference norm increased.
    pub first_increase: Option<f64>,
}

/// Decay fits for `(M, λ) ∈ {(2, 2), (4, 3), (10, 6)}` over `T = 4`.
pub fn decay_rate_study(base: &Scenario) -> Result<(Vec<DecayRow>, Vec<TimeSeries>)> {
    let base = Scenario {
        t_final: 4.0,
        feed_on: vec![(0.0, 4.0)],
        ..base.clone()
    };
    let configs = [(2usize, 2.0), (4, 3.0), (10, 6.0)];
    let k = base.k_my[0];
    let runs: Vec<(DecayRow, TimeSeries)> = configs
        .par_iter()
        .map(|&(m, lambda)| {
            let series = base.with(m, lambda).run_single(k)?;
            let fit = fit_decay(&series, DECAY_FIT_START, base.t_final)?;
            let first_increase = series
                .diff_norm
                .windows(2)
                .position(|w| w[1] > w[0])
                .map(|i| series.times[i]);
            Ok((
                DecayRow {
                    m,
                    lambda,
                    fit,
                    ratio: series.diff_ratio(),
                    first_increase,
                },
                series,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(runs.into_iter().unzip())
}

/// `(M, λ) = (6, 5)` over `T = 4` with the feedback active only in `windows`.
pub fn feed_on_study(base: &Scenario, windows: &[(f64, f64)]) -> Result<TimeSeries> {
    let s = Scenario {
        name: "lam5M6FeedOn".into(),
        m: 6,
        lambda: 5.0,
        t_final: 4.0,
        feed_on: windows.to_vec(),
        ..base.clone()
    };
    s.validate()?;
    s.run_single(s.k_my[0])
}

/// Obstacle violation (or near-contact) sets over the stored gap frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSet {
    pub times: Vec<f64>,
    pub mask_y: Vec<Vec<bool>>,
    pub mask_w: Vec<Vec<bool>>,
    pub components_y: Vec<usize>,
    pub components_w: Vec<usize>,
}

fn components(mask: &[bool]) -> usize {
    let mut count = 0;
    let mut inside = false;
    for &m in mask {
        if m && !inside {
            count += 1;
        }
        inside = m;
    }
    count
}

/// Nodes with `u − ψ > 0` (strict) when `eps` is `None`, or
/// `u − ψ > −eps` for the near-contact set.
pub fn contact_set(series: &TimeSeries, eps: Option<f64>) -> Result<ContactSet> {
    let threshold = match eps {
        None => 0.0,
        Some(e) if e > 0.0 => -e,
        Some(e) => return Err(invalid("contact_eps", format!("must be positive, got {e}"))),
    };
    let mask = |frames: &[Vec<f64>]| -> Vec<Vec<bool>> {
        frames
            .iter()
            .map(|g| g.iter().map(|&v| v > threshold).collect())
            .collect()
    };
    let mask_y = mask(&series.gaps.gap_y);
    let mask_w = mask(&series.gaps.gap_w);
    Ok(ContactSet {
        times: series.gaps.times.clone(),
        components_y: mask_y.iter().map(|m| components(m)).collect(),
        components_w: mask_w.iter().map(|m| components(m)).collect(),
        mask_y,
        mask_w,
    })
}

/// Summary statistics written to `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub preset: Preset,
    pub n_nodes: usize,
    pub m: usize,
    pub lambda: f64,
    pub k_my: f64,
    pub dt: f64,
    pub t_final: f64,
    pub initial_diff: f64,
    pub final_diff: f64,
    pub ratio: f64,
    pub max_viol_y: f64,
    pub max_viol_w: f64,
    pub mu_hat: f64,
    pub r_squared: f64,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, series: &TimeSeries) -> Self {
        let fit = fit_decay(series, DECAY_FIT_START, scenario.t_final).ok();
        let max = |v: &[f64]| v.iter().cloned().fold(0.0_f64, f64::max);
        RunSummary {
            name: scenario.name.clone(),
            preset: scenario.preset,
            n_nodes: scenario.n_nodes,
            m: scenario.m,
            lambda: scenario.lambda,
            k_my: series.k_my,
            dt: series.dt,
            t_final: scenario.t_final,
            initial_diff: series.diff_norm[0],
            final_diff: *series.diff_norm.last().expect("nonempty series"),
            ratio: series.diff_ratio(),
            max_viol_y: max(&series.max_viol_y),
            max_viol_w: max(&series.max_viol_w),
            mu_hat: fit.map_or(f64::NAN, |f| f.mu),
            r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
        }
    }
}
