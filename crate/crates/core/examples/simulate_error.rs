//! Simulates a ring from zero initial state, checks the adjoint against
//! the forward map and estimates the l2-induced gain.
//!
//! cargo run --example simulate_error

use netbt::sim::{adjoint, gain_lower_bound, l2_norm, random_excitation, simulate};

fn main() -> netbt::Result<()> {
    let system = netbt::sysmodel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/ring.json"))?;
    let horizon = 60;
    let u = random_excitation(&system, horizon, 40, 10.0, 42);
    let (y, state) = simulate(&system, &u)?;
    println!("||u|| = {:.6}, ||y|| = {:.6}", l2_norm(&u), l2_norm(&y));
    println!("norm of the final temporal state of vertex 1: {:.3e}", state.temporal[0].norm());

    let v = random_excitation(&system, horizon, horizon, 1.0, 7);
    let w = simulate(&system, &v)?.0;
    let lhs = y.dot(&w);
    let rhs = u.dot(&adjoint(&system, &w)?);
    println!("<Gu, w> = {lhs:.12e}, <u, G*w> = {rhs:.12e}");

    let estimates = gain_lower_bound(&system, horizon, 50, 1)?;
    println!("gain lower bounds after 1, 10, 50 iterations: {:.6} {:.6} {:.6}", estimates[0], estimates[9], estimates[49]);
    Ok(())
}
