//! Minimizes the l2-induced performance level of a small ring and shows
//! how an unstable subsystem is reported.
//!
//! cargo run --example analyze_performance

use netbt::lmi::default_margin;
use netbt::pipeline::analyze;
use netbt::sdp::SolveOptions;
use netbt::sysmodel::{DirectedGraph, DistributedSystem, EtpSchedule, SubsystemMatrices};
use netbt::Matrix;

fn scalar(a: f64) -> netbt::Result<DistributedSystem> {
    let m = SubsystemMatrices::from_blocks(
        &[vec![Matrix::from_element(1, 1, a)]],
        &[Matrix::from_element(1, 1, 1.0)],
        &[Matrix::from_element(1, 1, 1.0)],
        Matrix::zeros(1, 1),
    )?;
    DistributedSystem::new(DirectedGraph::new(1, [])?, EtpSchedule::new(0, 1)?, vec![vec![m]])
}

fn main() -> netbt::Result<()> {
    let opts = SolveOptions::default();
    let ring = netbt::sysmodel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ring.json"))?;
    let beta = default_margin(&ring);
    let p = analyze(&ring, beta, &opts)?;
    println!("ring: gamma = {:.6} ({} iterations, beta = {beta:e})", p.gamma, p.iterations);

    let stable = scalar(0.5)?;
    println!("x+ = 0.5 x + u: gamma = {:.6}", analyze(&stable, default_margin(&stable), &opts)?.gamma);
    let unstable = scalar(1.1)?;
    match analyze(&unstable, default_margin(&unstable), &opts) {
        Ok(p) => println!("x+ = 1.1 x + u: unexpectedly gamma = {}", p.gamma),
        Err(e) => println!("x+ = 1.1 x + u: {e} (exit code {})", e.exit_code()),
    }
    Ok(())
}
