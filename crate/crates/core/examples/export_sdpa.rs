//! Writes the performance and gramian programs of the reference system in
//! SDPA sparse format and reads them back.
//!
//! cargo run --example export_sdpa -- [out_dir]

use netbt::lmi::default_margin;
use netbt::pipeline::{generate_reference, standard_forms};
use netbt::sdp::{export_sdpa, import_sdpa, SolveOptions};

fn main() -> netbt::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sdpa_out".into());
    std::fs::create_dir_all(&out)?;
    let system = generate_reference()?;
    for (name, form) in standard_forms(&system, default_margin(&system), &SolveOptions::default())? {
        let path = std::path::Path::new(&out).join(format!("{name}.dat-s"));
        export_sdpa(&form, &path)?;
        let identical = import_sdpa(&path)? == form;
        println!("{}: {} variables, {} blocks, round trip identical: {identical}", path.display(), form.variable_count(), form.blocks.len());
    }
    Ok(())
}
