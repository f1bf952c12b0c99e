//! Computes minimal-trace gramians of a ring, balances it and checks the
//! balanced realization.
//!
//! cargo run --example balance_gramians

use netbt::balance::{balance, balancing_margin_factor, check_balanced};
use netbt::lmi::default_margin;
use netbt::pipeline::gramians;
use netbt::sdp::SolveOptions;

fn main() -> netbt::Result<()> {
    let system = netbt::sysmodel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ring.json"))?;
    let beta = default_margin(&system);
    let (x, y, summary) = gramians(&system, beta, &SolveOptions::default())?;
    println!("trace X = {:.6}, trace Y = {:.6}", summary.ctrl_trace, summary.obs_trace);

    let balanced = balance(&system, &x, &y)?;
    let report = check_balanced(&balanced)?;
    println!(
        "margin factor {:.3e}, balanced margin {:.3e}, off-diagonal {:.1e}, inequalities hold: {}",
        balancing_margin_factor(&balanced.transforms),
        balanced.sigma.beta,
        report.max_off_diagonal,
        report.ctrl.all_satisfied() && report.obs.all_satisfied()
    );
    let g = balanced.system.graph();
    for (slot, t, _) in balanced.sigma.matrices.iter() {
        let d = balanced.sigma_diagonal(slot, t);
        println!("{:>7} t={t}: {d:.6?}", slot.label(g));
    }
    Ok(())
}
