//! Violation sets under the discontinuous obstacle; the w-set reaches the
//! jump at x = 0.8 for part of the run.

use obstab::experiments::{contact_set, scenario_nonsmooth, Scenario};

fn main() -> obstab::Result<()> {
    let scenario = Scenario {
        n_nodes: 401,
        k_my: vec![20000.0],
        ..scenario_nonsmooth()
    };
    let mesh = scenario.mesh()?;
    let series = scenario.run_single(20000.0)?;
    let contact = contact_set(&series, None)?;
    for (i, &t) in contact.times.iter().enumerate().step_by(5) {
        let nodes: Vec<f64> = contact.mask_w[i]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(j, _)| mesh.node(j))
            .collect();
        let span = nodes.first().zip(nodes.last());
        println!(
            "t = {t:4.2}: {:3} nodes, {} component(s), x-range {span:.4?}",
            nodes.len(),
            contact.components_w[i]
        );
    }
    Ok(())
}
