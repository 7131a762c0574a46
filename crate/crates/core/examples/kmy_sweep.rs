//! Obstacle violation shrinks roughly like 1/k as the penalty grows.

use obstab::commands::SWEEP_KS;
use obstab::experiments::{scenario_default, sweep_kmy, Scenario};

fn main() -> obstab::Result<()> {
    let base = Scenario {
        n_nodes: 401,
        ..scenario_default()
    };
    let runs = sweep_kmy(&base, &SWEEP_KS)?;
    println!("{:>7} {:>8} {:>12} {:>10}", "k", "dt", "max (y-ψ)⁺", "k·viol");
    for s in &runs {
        let v = s.max_viol_y.iter().cloned().fold(0.0, f64::max);
        println!("{:>7} {:>8.0e} {:>12.4e} {:>10.3}", s.k_my, s.dt, v, s.k_my * v);
    }
    Ok(())
}
