//! Builds the five-agent reference system, validates it and prints the
//! sizes of the performance and gramian programs.
//!
//! cargo run --example reference_counts

use netbt::pipeline::{generate_reference, RECONSTRUCTION_NOTE};
use netbt::sysmodel::dimension_counts;

fn main() -> netbt::Result<()> {
    let system = generate_reference()?;
    system.ensure_valid()?;
    let sched = system.schedule();
    println!("{RECONSTRUCTION_NOTE}");
    println!("vertices {}, edges {}, h = {}, q = {}", system.vertex_count(), system.graph().edge_count(), sched.horizon(), sched.period());
    let c = dimension_counts(&system);
    println!("performance program: {} unknowns, {} constraint rows", c.p1_variable_dim, c.p1_constraints);
    println!("gramian programs:    {} unknowns, {} constraint rows", c.p2_variable_dim, c.p23_constraints);
    println!("matrix unknown blocks: {}", c.block_count);
    Ok(())
}
