//! Default scenario: five actuators, λ = 4, k = 1000, feedback on for t ∈ [0, 4).
//!
//! Usage: `cargo run --release --example stabilization [n_nodes]`

use obstab::experiments::{fit_decay, scenario_default, Scenario, DECAY_FIT_START};

fn main() -> obstab::Result<()> {
    let n_nodes = std::env::args().nth(1).map_or(401, |s| s.parse().expect("n_nodes"));
    let scenario = Scenario {
        n_nodes,
        ..scenario_default()
    };
    let series = scenario.run_single(1000.0)?;
    for i in (0..series.len()).step_by(25) {
        println!(
            "t = {:4.2}  |w - y| = {:.4e}  |K(w - y)| = {:.4e}",
            series.times[i], series.diff_norm[i], series.control_norm[i]
        );
    }
    let fit = fit_decay(&series, DECAY_FIT_START, scenario.t_final)?;
    println!("fitted rate μ = {:.3}, R² = {:.4}", fit.mu, fit.r_squared);
    println!("final / initial = {:.3e}", series.diff_ratio());
    Ok(())
}
