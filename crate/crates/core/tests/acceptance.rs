//! Acceptance criteria. Each check prints one PASS/FAIL line to stdout,
//! bypassing the test harness capture, and the test fails if any check fails.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use obstab::dynamics::{run_coupled, ProblemData, RunSettings};
use obstab::experiments::{
    contact_set, decay_rate_study, feed_on_study, fit_decay, necessity_studies, scenario_default,
    scenario_nonsmooth, sweep_kmy, RunSummary, Scenario, DECAY_FIT_START,
};
use obstab::feedback::build_feedback;
use obstab::fem::{inner_positive_part, l2_inner, positive_part_norm};
use obstab::io::{contact_csv, runs_csv, series_csv};
use obstab::spaces::SubspacePair;
use obstab::{BoundaryCondition, Field, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Resolution of the dynamic checks run on every `cargo test`.
const CI_NODES: usize = 401;
/// Resolution of the full-size runs.
const FULL_NODES: usize = 2001;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: &str, title: &str, started: Instant, budget: Option<Duration>, outcome: Outcome) -> bool {
    let elapsed = started.elapsed();
    let in_time = budget.map_or(true, |b| elapsed <= b);
    let pass = outcome.pass && in_time;
    let budget_note = match budget {
        Some(b) if !in_time => format!(" [over budget {:.0?}]", b),
        _ => String::new(),
    };
    let line = format!(
        "{} criterion {id:>3}: {title} | {} | {:.1?}{budget_note}",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed
    );
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
    pass
}

fn check(
    id: &str,
    title: &str,
    budget: Option<Duration>,
    f: impl FnOnce() -> obstab::Result<Outcome>,
) -> bool {
    let started = Instant::now();
    let outcome = f().unwrap_or_else(|e| Outcome {
        pass: false,
        detail: format!("error: {e}"),
    });
    report(id, title, started, budget, outcome)
}

fn at(n_nodes: usize) -> Scenario {
    Scenario {
        n_nodes,
        ..scenario_default()
    }
}

fn heat_ratio(n_nodes: usize, dt: f64) -> obstab::Result<(f64, f64)> {
    let nu = 0.1;
    let t_final = 0.5;
    let zero = Arc::new(|_: f64, _: f64| 0.0);
    let y0 = |x: f64| (PI * x).cos();
    let data = ProblemData {
        nu,
        a: zero.clone(),
        b: zero.clone(),
        f: zero,
        psi: Arc::new(|_: f64, _: f64| 10.0),
        k_my: 0.0,
        y_init: Arc::new(y0),
        w_init: Arc::new(y0),
    };
    let mesh = Mesh::new(n_nodes, BoundaryCondition::NeumannHomogeneous)?;
    let feedback = build_feedback(SubspacePair::standard(1, 0.1, nu, &mesh)?, 0.0)?;
    let settings = RunSettings {
        t_final,
        dt,
        record_every: 1000,
        contact_every: None,
    };
    let series = run_coupled(&data, &mesh, &feedback, &[], &settings)?;
    let ratio = series.final_y.norm() / Field::from_fn(mesh, y0).norm();
    let exact = (-(nu * PI * PI + 1.0) * t_final).exp();
    Ok((ratio, (ratio - exact).abs() / exact))
}

fn criterion_1() -> bool {
    check("1", "analytic heat oracle", Some(Duration::from_secs(10)), || {
        let (ratio, err) = heat_ratio(401, 1e-4)?;
        let coarse = heat_ratio(101, 4e-4)?.1;
        let mid = heat_ratio(201, 2e-4)?.1;
        let orders = [(coarse / mid).log2(), (mid / err).log2()];
        Ok(Outcome {
            pass: err <= 1e-3 && orders.iter().all(|&p| p >= 1.8),
            detail: format!(
                "ratio {ratio:.8}, rel err {err:.2e} (≤ 1e-3), observed orders {:.3}, {:.3} (≥ 1.8)",
                orders[0], orders[1]
            ),
        })
    })
}

fn criterion_2() -> bool {
    check("2", "projection oracle equivalence", Some(Duration::from_secs(5)), || {
        let n = 41;
        let mesh = Mesh::new(n, BoundaryCondition::NeumannHomogeneous)?;
        let mass = dense_mass(n);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut dense_err, mut idem, mut annih) = (0.0_f64, 0.0_f64, 0.0_f64);
        for m in [1, 2, 3, 5] {
            let pair = SubspacePair::standard(m, 0.1, 0.1, &mesh)?;
            let u = actuator_matrix(n, m, 0.1);
            let (e, _) = neumann_eigen(n, m, 0.1);
            let p_e = dense_projector(&e, &u, &mass);
            let p_u = dense_projector(&u, &e, &mass);
            for k in 0..n {
                let mut unit = vec![0.0; n];
                unit[k] = 1.0;
                let h = Field::new(mesh, unit)?;
                let ge = dvec(&pair.project_e_along_u_perp(&h)?);
                let gu = dvec(&pair.project_u_along_e_perp(&h)?);
                dense_err = dense_err
                    .max(max_abs_diff(&ge, &p_e.column(k).into_owned()))
                    .max(max_abs_diff(&gu, &p_u.column(k).into_owned()));
            }
            for _ in 0..1000 {
                let h = random_field(&mut rng, mesh);
                let scale = h.norm();
                let pe = pair.project_e_along_u_perp(&h)?;
                let pu = pair.project_u_along_e_perp(&h)?;
                idem = idem
                    .max(pair.project_e_along_u_perp(&pe)?.sub(&pe)?.norm() / scale)
                    .max(pair.project_u_along_e_perp(&pu)?.sub(&pu)?.norm() / scale);
                let (re, ru) = (h.sub(&pe)?, h.sub(&pu)?);
                for psi in pair.actuators().fields() {
                    annih = annih.max(l2_inner(&re, psi)?.abs() / scale);
                }
                for ev in pair.eigen().fields() {
                    annih = annih.max(l2_inner(&ru, ev)?.abs() / scale);
                }
            }
        }
        Ok(Outcome {
            pass: dense_err <= 1e-10 && idem <= 1e-8 && annih <= 1e-8,
            detail: format!(
                "M ∈ {{1,2,3,5}}: dense max diff {dense_err:.1e} (≤ 1e-10), idempotence {idem:.1e}, annihilation {annih:.1e} (≤ 1e-8)"
            ),
        })
    })
}

fn criterion_3() -> bool {
    check("3", "operator-bound certification", Some(Duration::from_secs(5)), || {
        let mesh = Mesh::new(FULL_NODES, BoundaryCondition::NeumannHomogeneous)?;
        let mut pass = true;
        let mut parts = Vec::new();
        for (m, lambda) in [(5, 4.0), (10, 6.0), (1, 50.0), (20, 1.0)] {
            let r = build_feedback(SubspacePair::standard(m, 0.1, 0.1, &mesh)?, lambda)?.certify()?;
            pass &= r.holds();
            parts.push(format!(
                "({m},{lambda}) |K| {:.6} vs {:.6} margin {:+.1e}",
                r.computed_norm, r.bound, r.margin
            ));
        }
        Ok(Outcome {
            pass,
            detail: parts.join("; "),
        })
    })
}

fn criterion_4() -> bool {
    check("4", "nonlinearity lemmas", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut lip, mut mono, mut ident) = (0.0_f64, 0.0_f64, 0.0_f64);
        for _ in 0..10_000 {
            let n = rng.gen_range(3..=65);
            let h = 1.0 / (n - 1) as f64;
            let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect() };
            let (z1, z2, y, psi) = (draw(), draw(), draw(), draw());
            let k = 10f64.powf(rng.gen_range(0.0..4.5));
            let (dn2, cross, dz2) = nk_moments(&z1, &z2, &y, &psi, k, h);
            if dz2 > 0.0 {
                lip = lip.max(dn2.sqrt() / (k * dz2.sqrt()) - 1.0);
                mono = mono.max(-cross / (dn2 * dz2).sqrt().max(f64::MIN_POSITIVE));
            }
            let mesh = Mesh::new(n, BoundaryCondition::NeumannHomogeneous)?;
            let f = Field::new(mesh, z1)?;
            let lhs = inner_positive_part(&f, &f)?;
            let rhs = positive_part_norm(&f).powi(2);
            ident = ident.max((lhs - rhs).abs() / (1.0 + rhs));
        }
        Ok(Outcome {
            pass: lip <= 1e-10 && mono <= 1e-10 && ident <= 1e-12,
            detail: format!(
                "10⁴ pairs: Lipschitz excess {lip:.1e}, monotonicity deficit {mono:.1e} (≤ 1e-10), (h,h⁺)−‖h⁺‖² {ident:.1e} (≤ 1e-12)"
            ),
        })
    })
}

fn stabilization(n_nodes: usize) -> obstab::Result<Outcome> {
    let scenario = at(n_nodes);
    let series = scenario.run_single(1000.0)?;
    let fit = fit_decay(&series, DECAY_FIT_START, scenario.t_final)?;
    let ratio = series.diff_ratio();
    Ok(Outcome {
        pass: fit.mu > 0.0 && fit.r_squared >= 0.95 && ratio <= 1e-2,
        detail: format!(
            "n = {n_nodes}: μ̂ = {:.3} (> 0), R² = {:.4} (≥ 0.95), final/initial = {ratio:.2e} (≤ 1e-2)",
            fit.mu, fit.r_squared
        ),
    })
}

fn criterion_5() -> bool {
    let ci = check("5a", "stabilization, CI mesh", Some(Duration::from_secs(30)), || {
        stabilization(CI_NODES)
    });
    let full = check("5b", "stabilization, full mesh", Some(Duration::from_secs(300)), || {
        stabilization(FULL_NODES)
    });
    ci && full
}

fn criterion_6(n_nodes: usize) -> bool {
    check("6", "necessity", None, || {
        let r = necessity_studies(&at(n_nodes))?;
        let one_actuator = r.few_actuators.iter().find(|x| x.lambda == 50.0).unwrap();
        let small_gain = r.small_gain.iter().find(|x| x.m == 20).unwrap();
        Ok(Outcome {
            pass: one_actuator.ratio >= 1.0 && small_gain.ratio >= 1.0 && r.reference.ratio < 1.0,
            detail: format!(
                "n = {n_nodes}, T = 1: (M=1,λ=50) ratio {:.3} (≥ 1), (M=20,λ=1) ratio {:.3} (≥ 1), (5,4) ratio {:.3e} (< 1)",
                one_actuator.ratio, small_gain.ratio, r.reference.ratio
            ),
        })
    })
}

fn criterion_7(n_nodes: usize) -> bool {
    check("7", "rate ordering", None, || {
        let (rows, series) = decay_rate_study(&at(n_nodes))?;
        let (r22, r43, r106) = (&rows[0], &rows[1], &rows[2]);
        let s22 = &series[0];
        // an increase of the difference norm within the first time unit
        let early = s22
            .diff_norm
            .windows(2)
            .zip(&s22.times)
            .any(|(w, &t)| t < 1.0 && w[1] > w[0]);
        let peak = (0..s22.index_at(1.0))
            .max_by(|&i, &j| s22.diff_norm[i].total_cmp(&s22.diff_norm[j]))
            .unwrap();
        let pass = r106.fit.mu > r43.fit.mu && r43.fit.mu > 0.0 && early && r22.ratio < 1.0;
        Ok(Outcome {
            pass,
            detail: format!(
                "n = {n_nodes}: μ̂(10,6) = {:.3} > μ̂(4,3) = {:.3} > 0; (2,2) rises from {:.4} to {:.4} at t = {:.2}, |z(4)|/|z(0)| = {:.2e}",
                r106.fit.mu, r43.fit.mu, s22.diff_norm[0], s22.diff_norm[peak], s22.times[peak], r22.ratio
            ),
        })
    })
}

fn criterion_8(n_nodes: usize) -> bool {
    check("8", "free-dynamics instability", None, || {
        let base = at(n_nodes);
        let free = feed_on_study(&base, &[])?;
        let late = feed_on_study(&base, &[(1.0, 4.0)])?;
        let free_growth = free.diff_norm[free.index_at(1.0)] / free.diff_norm[0];
        let i1 = late.index_at(1.0);
        let growth = late.diff_norm[i1] / late.diff_norm[0];
        let decay = *late.diff_norm.last().unwrap() / late.diff_norm[i1];
        let fit = fit_decay(&late, 1.0 + DECAY_FIT_START, 4.0)?;
        Ok(Outcome {
            pass: free_growth > 1.0 && growth > 1.0 && decay < 1.0 && fit.mu > 0.0,
            detail: format!(
                "n = {n_nodes}: off: z(1)/z(0) = {free_growth:.3} (> 1); window (1,4): z(1)/z(0) = {growth:.3}, z(4)/z(1) = {decay:.2e}, μ̂ on [1.05,4] = {:.3}",
                fit.mu
            ),
        })
    })
}

fn criterion_9(n_nodes: usize) -> bool {
    check("9", "violation scaling", None, || {
        let ks = [500.0, 1000.0, 5000.0, 20000.0];
        let runs = sweep_kmy(&at(n_nodes), &ks)?;
        let viol: Vec<f64> = runs
            .iter()
            .map(|s| s.max_viol_y.iter().cloned().fold(0.0, f64::max))
            .collect();
        let scaled: Vec<f64> = ks.iter().zip(&viol).map(|(k, v)| k * v).collect();
        let nonincreasing = viol.windows(2).all(|w| w[1] <= w[0]);
        let bounded = scaled.iter().all(|&s| s <= 4.0 * scaled[0] && s >= scaled[0] / 4.0);
        Ok(Outcome {
            pass: nonincreasing && bounded,
            detail: format!(
                "n = {n_nodes}, k = 500…20000: max (y−ψ)⁺ = [{}] (nonincreasing), k·viol = [{}] (within ×4 of first), dt = {:?}",
                viol.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
                scaled.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>().join(", "),
                runs.iter().map(|s| s.dt).collect::<Vec<_>>()
            ),
        })
    })
}

fn criterion_10(n_nodes: usize) -> bool {
    check("10", "nonsmooth obstacle contact", None, || {
        let scenario = Scenario {
            n_nodes,
            ..scenario_nonsmooth()
        };
        let mesh = scenario.mesh()?;
        let runs = scenario.run()?;
        let mut any_y = false;
        let mut any_w = false;
        for s in &runs {
            let c = contact_set(s, None)?;
            any_y |= c.mask_y.iter().flatten().any(|&m| m);
            any_w |= c.mask_w.iter().flatten().any(|&m| m);
        }
        let top = runs.last().unwrap();
        let c = contact_set(top, None)?;
        let hits: Vec<bool> = c
            .mask_w
            .iter()
            .map(|mask| {
                mask.iter()
                    .enumerate()
                    .any(|(j, &m)| m && (mesh.node(j) - 0.8).abs() <= 0.005)
            })
            .collect();
        let in_window: Vec<(f64, bool)> = c
            .times
            .iter()
            .zip(&hits)
            .filter(|(&t, _)| (1.0..=2.0).contains(&t))
            .map(|(&t, &h)| (t, h))
            .collect();
        // longest run of consecutive frames touching the jump
        let (mut best, mut cur, mut span) = (0usize, 0usize, (f64::NAN, f64::NAN));
        let mut start = f64::NAN;
        for &(t, h) in &in_window {
            if h {
                if cur == 0 {
                    start = t;
                }
                cur += 1;
                if cur > best {
                    best = cur;
                    span = (start, t);
                }
            } else {
                cur = 0;
            }
        }
        Ok(Outcome {
            pass: any_y && any_w && best >= 2,
            detail: format!(
                "n = {n_nodes}, k = {}: y/w violation sets nonempty: {any_y}/{any_w}; w-set meets [0.795, 0.805] on t ∈ [{:.2}, {:.2}] ({best} frames)",
                top.k_my, span.0, span.1
            ),
        })
    })
}

fn criterion_11() -> bool {
    check("11", "determinism", None, || {
        let smooth = Scenario {
            t_final: 1.0,
            feed_on: vec![(0.0, 1.0)],
            k_my: vec![1000.0, 5000.0],
            ..at(CI_NODES)
        };
        let contact = Scenario {
            n_nodes: 201,
            t_final: 0.5,
            feed_on: vec![(0.0, 0.5)],
            k_my: vec![20000.0],
            ..scenario_nonsmooth()
        };
        let render = || -> obstab::Result<Vec<String>> {
            let mut files = Vec::new();
            for s in [&smooth, &contact] {
                let runs = s.run()?;
                let rows: Vec<RunSummary> = runs.iter().map(|r| RunSummary::new(s, r)).collect();
                files.push(runs_csv(&rows));
                for r in &runs {
                    files.push(series_csv(r));
                    if !r.gaps.times.is_empty() {
                        files.push(contact_csv(&contact_set(r, None)?));
                    }
                }
            }
            Ok(files)
        };
        let (a, b) = (render()?, render()?);
        let bytes: usize = a.iter().map(String::len).sum();
        Ok(Outcome {
            pass: a == b,
            detail: format!("{} CSV files, {bytes} bytes, identical across two runs: {}", a.len(), a == b),
        })
    })
}

fn dynamic_criteria(n_nodes: usize) -> Vec<bool> {
    vec![
        criterion_6(n_nodes),
        criterion_7(n_nodes),
        criterion_8(n_nodes),
        criterion_9(n_nodes),
        criterion_10(n_nodes),
    ]
}

#[test]
fn acceptance_criteria() {
    let mut results = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
    ];
    results.extend(dynamic_criteria(CI_NODES));
    results.push(criterion_11());
    let failed = results.iter().filter(|&&p| !p).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}

/// Criteria 6–10 at the full resolution: `cargo test --test acceptance -- --ignored`.
#[test]
#[ignore]
fn acceptance_criteria_full_resolution() {
    let results = dynamic_criteria(FULL_NODES);
    assert!(results.iter().all(|&p| p));
}
