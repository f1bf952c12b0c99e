//! Distinct-entry and monotone-stage bounds on a small truncated set, with
//! the stage decomposition and the hold-rule extension.
//!
//! cargo run --example error_bounds

use std::collections::BTreeMap;

use netbt::bounds::{error_bounds, extend_hold_rule, OmegaSet};

fn main() -> netbt::Result<()> {
    let omega = OmegaSet::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/toy_omega.json"))?;
    let report = error_bounds(&omega)?;
    println!("bound_distinct = {}, staged = {}, bound = {}", report.distinct, report.staged, report.bound);
    for decomposition in &report.stages {
        for (i, stage) in decomposition.stages.iter().enumerate() {
            let weights: Vec<String> = stage.points.iter().map(|p| format!("t{}: {} x{}", p.t, p.weight, p.count)).collect();
            println!("{:?} stage {}: [{}] monotone {} contributes {}", decomposition.slot, i + 1, weights.join(", "), stage.monotone, stage.contribution);
        }
    }

    let known: BTreeMap<usize, f64> = [(3, 1.0), (5, 2.0)].into();
    println!("hold rule of {{3: 1, 5: 2}} over 0..=7: {:?}", extend_hold_rule(&known, 7)?);
    Ok(())
}
