//! Runs the full reduction pipeline on the reference system and writes
//! every artifact (about a minute in release mode).
//!
//! cargo run --release --example reproduce_reference -- [out_dir]

use netbt::pipeline::{run_pipeline, PipelineConfig};

fn main() -> netbt::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out".into());
    let config = PipelineConfig { out: out.into(), ..PipelineConfig::default() };
    let r = run_pipeline(&config)?;
    println!("beta {:e}", r.beta);
    println!("gamma {:.6} ({} iterations)", r.performance.gamma, r.performance.iterations);
    println!("trace X {:.4}, trace Y {:.4}", r.gramians.ctrl_trace, r.gramians.obs_trace);
    println!("epsilon {:.6e}, threshold {:.6e}", r.balanced_stage.epsilon, r.truncation.threshold);
    println!("truncated per time {:?}", r.truncation.truncated_per_time);
    println!("bound_distinct {:.6}, bound {:.6}", r.bounds.distinct, r.bounds.bound);
    println!("error ratio {:.6}, gain estimate {:.6}, bound holds {}", r.simulation.error_ratio, r.simulation.gain_estimate, r.simulation.bound_holds);
    println!("artifacts in {}", config.out.display());
    Ok(())
}
