//! Fitted exponential rates for (M, λ) ∈ {(2, 2), (4, 3), (10, 6)}.

use obstab::experiments::{decay_rate_study, scenario_default, Scenario};

fn main() -> obstab::Result<()> {
    let base = Scenario {
        n_nodes: 401,
        ..scenario_default()
    };
    let (rows, _) = decay_rate_study(&base)?;
    for r in &rows {
        println!(
            "M = {:2}, λ = {}: μ = {:6.3}, R² = {:.3}, |z(4)|/|z(0)| = {:.2e}, first increase at {:?}",
            r.m, r.lambda, r.fit.mu, r.fit.r_squared, r.ratio, r.first_increase
        );
    }
    Ok(())
}
