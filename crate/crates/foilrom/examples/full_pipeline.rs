//! Run the complete pipeline with the default config and
//! print the report summary.
//!
//! Run with `cargo run --release --example full_pipeline`.

use foilrom::config::PipelineConfig;
use foilrom::pipeline::run_pipeline;

fn main() -> foilrom::Result<()> {
    let mut cfg = PipelineConfig::default();
    cfg.output_dir = "target/example-output/full_pipeline".into();

    println!(
        "running: {} train / {} test samples, window [{}, {}) s at dt = {}, seed {}",
        cfg.n_train, cfg.n_test, cfg.fom.window[0], cfg.fom.window[1], cfg.fom.dt, cfg.seed
    );
    let report = run_pipeline(&cfg)?;

    println!(
        "\nDMD: rank {}, training residual {:.3e}",
        report.dmd.rank, report.dmd.training_residual
    );
    let frozen: Vec<&str> = report
        .frozen_parameters
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    println!("frozen parameters: {frozen:?}");

    println!("\n{:>6} {:>14} {:>14} {:>8}", "t [s]", "full-space", "reduced-space", "gain");
    for e in report.errors.iter().filter(|e| e.t as u64 % 5 == 0) {
        println!(
            "{:>6} {:>14.3e} {:>14.3e} {:>7.2}x",
            e.t,
            e.full,
            e.reduced,
            e.full / e.reduced
        );
    }

    println!("\nstage timings:");
    for (stage, secs) in &report.timings {
        println!("  {stage:<10} {secs:>8.3} s");
    }
    println!("\nartifacts in {}", cfg.output_dir.display());
    Ok(())
}
