//! Reproduce the two sensitivity studies: DMD forecast accuracy as the
//! sampling period grows, and response-surface accuracy as the training
//! set shrinks (full vs. reduced parameter space).
//!
//! Run with `cargo run --release --example sensitivity_sweeps`.

use foilrom::config::PipelineConfig;
use foilrom::pipeline::sensitivity_sweeps;

fn main() -> foilrom::Result<()> {
    let mut cfg = PipelineConfig::default();
    cfg.output_dir = "target/example-output/sweeps".into();

    let tables = sensitivity_sweeps(&cfg)?;

    println!("DMD forecast error at the final time vs. sampling period:");
    println!("{:>8} {:>14}", "dt [s]", "rel. error");
    for (dt, err) in &tables.dmd_dt {
        println!("{dt:>8} {err:>14.3e}");
    }

    println!("\nresponse-surface test error at the window end vs. training size:");
    println!("{:>8} {:>14} {:>14}", "n", "full", "reduced");
    for (n, full, reduced) in &tables.gpr_train {
        println!("{n:>8} {full:>14.3e} {reduced:>14.3e}");
    }

    println!("\nCSV tables in {}", cfg.output_dir.display());
    Ok(())
}
