//! Too few actuators or too small a gain: no contraction over t ∈ [0, 1].

use obstab::experiments::{necessity_studies, scenario_default, Scenario};

fn main() -> obstab::Result<()> {
    let base = Scenario {
        n_nodes: 401,
        ..scenario_default()
    };
    let report = necessity_studies(&base)?;
    let rows = report
        .few_actuators
        .iter()
        .chain(&report.small_gain)
        .chain(std::iter::once(&report.reference));
    for r in rows {
        let verdict = if r.ratio < 1.0 { "contracts" } else { "no decay" };
        println!("M = {:2}, λ = {:4}: |z(1)|/|z(0)| = {:9.3e}  {verdict}", r.m, r.lambda, r.ratio);
    }
    Ok(())
}
