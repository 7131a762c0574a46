//! Drivers behind the `obstab` subcommands. Each writes its CSV files and a
//! `manifest.json` into the configured output directory and returns the
//! list of files written.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::config::RunConfig;
use crate::dynamics::TimeSeries;
use crate::error::Result;
use crate::experiments::{
    contact_set, decay_rate_study, feed_on_study, necessity_studies, RunSummary, Scenario,
};
use crate::feedback::{build_feedback, BoundReport};
use crate::io::{self, fmt_f64, OutputDir, RunManifest};
use crate::spaces::{pair_diagnostics, SubspacePair};

/// Penalty parameters of the default sweep.
pub const SWEEP_KS: [f64; 4] = [500.0, 1000.0, 5000.0, 20000.0];

/// `(M, λ)` pairs whose operator bound is always certified.
pub const BOUND_CASES: [(usize, f64); 4] = [(5, 4.0), (10, 6.0), (1, 50.0), (20, 1.0)];

/// Window of the delayed-feedback study.
pub const FEEDON_WINDOW: (f64, f64) = (1.0, 4.0);

fn k_tag(k: f64) -> String {
    format!("{k}")
}

fn finish(cmd: &str, cfg: &RunConfig, out: OutputDir, started: Instant) -> Result<Vec<PathBuf>> {
    let mut files = out.files().to_vec();
    let manifest = RunManifest {
        command: cmd.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: files.clone(),
    };
    files.push(manifest.write(out.root())?);
    Ok(files)
}

fn write_runs(
    out: &mut OutputDir,
    scenario: &Scenario,
    series: &[TimeSeries],
) -> Result<Vec<RunSummary>> {
    let mut rows = Vec::with_capacity(series.len());
    for s in series {
        let name = format!("{}_k{}", scenario.name, k_tag(s.k_my));
        out.write(&format!("series_{name}.csv"), &io::series_csv(s))?;
        if !s.gaps.times.is_empty() {
            let contact = contact_set(s, None)?;
            out.write(&format!("contact_{name}.csv"), &io::contact_csv(&contact))?;
            out.write(
                &format!("components_{name}.csv"),
                &io::components_csv(&contact),
            )?;
        }
        rows.push(RunSummary::new(scenario, s));
    }
    out.write("runs.csv", &io::runs_csv(&rows))?;
    Ok(rows)
}

/// One coupled run per configured penalty parameter.
pub fn cmd_run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let scenario = cfg.to_scenario();
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let series = scenario.run()?;
    write_runs(&mut out, &scenario, &series)?;
    finish("run", cfg, out, started)
}

/// Runs every configured `k_MY` and tabulates the obstacle violation.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let scenario = cfg.to_scenario();
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let series = scenario.run()?;
    let rows = write_runs(&mut out, &scenario, &series)?;
    let mut csv = String::from("k_my,dt,max_viol_y,max_viol_w,k_times_viol_y,k_times_viol_w\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(r.k_my),
            fmt_f64(r.dt),
            fmt_f64(r.max_viol_y),
            fmt_f64(r.max_viol_w),
            fmt_f64(r.k_my * r.max_viol_y),
            fmt_f64(r.k_my * r.max_viol_w),
        );
    }
    out.write("sweep.csv", &csv)?;
    finish("sweep", cfg, out, started)
}

/// Few-actuator and small-gain runs over a unit horizon.
pub fn cmd_necessity(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let report = necessity_studies(&cfg.to_scenario())?;
    let mut csv = String::from("group,M,lambda,ratio,contracts\n");
    let groups = [
        ("few_actuators", &report.few_actuators[..]),
        ("small_gain", &report.small_gain[..]),
        ("reference", std::slice::from_ref(&report.reference)),
    ];
    for (group, rows) in groups {
        for r in rows {
            let _ = writeln!(
                csv,
                "{group},{},{},{},{}",
                r.m,
                fmt_f64(r.lambda),
                fmt_f64(r.ratio),
                r.ratio < 1.0
            );
        }
    }
    out.write("necessity.csv", &csv)?;
    finish("necessity", cfg, out, started)
}

/// Decay fits for `(2, 2)`, `(4, 3)` and `(10, 6)`.
pub fn cmd_decay(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let (rows, series) = decay_rate_study(&cfg.to_scenario())?;
    let mut csv = String::from("M,lambda,mu_hat,intercept,r_squared,ratio,first_increase\n");
    for (r, s) in rows.iter().zip(&series) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.m,
            fmt_f64(r.lambda),
            fmt_f64(r.fit.mu),
            fmt_f64(r.fit.intercept),
            fmt_f64(r.fit.r_squared),
            fmt_f64(r.ratio),
            r.first_increase.map_or(String::new(), fmt_f64),
        );
        out.write(
            &format!("series_decay_lam{}M{}.csv", r.lambda, r.m),
            &io::series_csv(s),
        )?;
    }
    out.write("decay.csv", &csv)?;
    finish("decay", cfg, out, started)
}

/// `(M, λ) = (6, 5)` with the feedback switched on only inside `windows`.
pub fn cmd_feedon(cfg: &RunConfig, windows: &[(f64, f64)]) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let base = cfg.to_scenario();
    let series = feed_on_study(&base, windows)?;
    let tag = if windows.is_empty() {
        "FeedOff".to_string()
    } else {
        windows
            .iter()
            .map(|(a, b)| format!("Feed{a}-{b}"))
            .collect::<Vec<_>>()
            .join("_")
    };
    out.write(&format!("series_lam5M6{tag}.csv"), &io::series_csv(&series))?;
    let scenario = Scenario {
        name: format!("lam5M6{tag}"),
        m: 6,
        lambda: 5.0,
        t_final: series.times.last().copied().unwrap_or(base.t_final),
        feed_on: windows.to_vec(),
        ..base
    };
    out.write(
        "runs.csv",
        &io::runs_csv(&[RunSummary::new(&scenario, &series)]),
    )?;
    finish("feedon", cfg, out, started)
}

/// Runs with gap frames and writes the violation sets.
pub fn cmd_contact(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let mut scenario = cfg.to_scenario();
    scenario.contact_every = scenario.contact_every.or(Some(scenario.record_every));
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let series = scenario.run()?;
    write_runs(&mut out, &scenario, &series)?;
    for s in &series {
        let near = contact_set(s, Some(scenario.contact_eps))?;
        out.write(
            &format!("near_contact_{}_k{}.csv", scenario.name, k_tag(s.k_my)),
            &io::contact_csv(&near),
        )?;
    }
    finish("contact", cfg, out, started)
}

/// Subspace constants for each `M` in `ms`, plus operator-bound checks.
pub fn cmd_diagnostics(cfg: &RunConfig, ms: &[usize]) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    let mut out = OutputDir::create(&cfg.output.dir)?;
    let scenario = cfg.to_scenario();
    let mesh = scenario.mesh()?;
    let rows = pair_diagnostics(ms, scenario.support_ratio, scenario.nu, &mesh)?;
    out.write("diagnostics.csv", &io::diagnostics_csv(&rows))?;

    let mut cases = BOUND_CASES.to_vec();
    if !cases.contains(&(scenario.m, scenario.lambda)) {
        cases.push((scenario.m, scenario.lambda));
    }
    let mut csv = String::from(BoundReport::CSV_HEADER);
    csv.push_str(",holds\n");
    for (m, lambda) in cases {
        let pair = SubspacePair::standard(m, scenario.support_ratio, scenario.nu, &mesh)?;
        let report = build_feedback(pair, lambda)?.certify()?;
        if !report.holds() {
            log::warn!("operator bound fails for M = {m}, lambda = {lambda}");
        }
        let _ = writeln!(csv, "{},{}", report.csv_row(), report.holds());
    }
    out.write("bounds.csv", &csv)?;
    finish("diagnostics", cfg, out, started)
}
