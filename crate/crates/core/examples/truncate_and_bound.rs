//! Balances a ring, re-solves for a diagonal gramian with a common floor,
//! truncates at the floor and at a coarser threshold, and prints the
//! a priori bounds next to the measured error gain.
//!
//! cargo run --example truncate_and_bound

use netbt::balance::balance;
use netbt::bounds::error_bounds;
use netbt::lmi::default_margin;
use netbt::pipeline::{balanced_stage, gramians, FLOOR_SLACK};
use netbt::sdp::SolveOptions;
use netbt::sim::{gain_lower_bound, ErrorSystem};
use netbt::truncate::{select_plan, truncate, verify_reduced};

fn main() -> netbt::Result<()> {
    let system = netbt::sysmodel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ring.json"))?;
    let opts = SolveOptions::default();
    let beta = default_margin(&system);
    let (x, y, _) = gramians(&system, beta, &opts)?;
    let balanced = balance(&system, &x, &y)?;
    let (staged, stage) = balanced_stage(&balanced.system, beta, 750.0, &opts)?;
    println!("floor epsilon = {:.6e}", stage.epsilon);

    let mut entries: Vec<f64> = staged.sigma.matrices.iter().flat_map(|(_, _, m)| m.diagonal().iter().copied().collect::<Vec<_>>()).collect();
    entries.sort_by(f64::total_cmp);
    let horizon = 4 * system.schedule().len();
    for tau in [stage.epsilon * (1.0 + FLOOR_SLACK), entries[entries.len() / 2]] {
        let plan = select_plan(&staged, tau)?;
        let (reduced, split) = truncate(&staged, &plan)?;
        let holds = verify_reduced(&reduced, &split, beta)?.all_satisfied();
        let bounds = error_bounds(&split.omega)?;
        let op = ErrorSystem::new(&system, &reduced)?;
        let gain = (0..20).map(|s| gain_lower_bound(&op, horizon, 50, s).map(|e| e[e.len() - 1])).try_fold(0.0f64, |m, g| g.map(|g| m.max(g)))?;
        println!(
            "tau {tau:.3e}: truncated per time {:?}, reduced inequalities hold {holds}, bound_distinct {:.4e}, bound {:.4e}, gain >= {gain:.4e}",
            plan.truncated_counts(&staged.system),
            bounds.distinct,
            bounds.bound
        );
    }
    Ok(())
}
