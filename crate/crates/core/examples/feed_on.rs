//! Free dynamics grows; switching the feedback on at t = 1 brings it back.

use obstab::experiments::{feed_on_study, scenario_default, Scenario};

fn main() -> obstab::Result<()> {
    let base = Scenario {
        n_nodes: 401,
        ..scenario_default()
    };
    let free = feed_on_study(&base, &[])?;
    let late = feed_on_study(&base, &[(1.0, 4.0)])?;
    println!("{:>5} {:>12} {:>12}", "t", "off", "on at t=1");
    for i in (0..free.len()).step_by(20) {
        println!("{:5.2} {:12.4e} {:12.4e}", free.times[i], free.diff_norm[i], late.diff_norm[i]);
    }
    Ok(())
}
