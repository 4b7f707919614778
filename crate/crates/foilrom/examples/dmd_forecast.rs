//! Fit a DMD model on the lift-coefficient ensemble of the training
//! window and forecast the regime state ten seconds past the data.
//!
//! Run with `cargo run --example dmd_forecast`.

use foilrom::config::PipelineConfig;
use foilrom::dmd::{fit_dmd, forecast};
use foilrom::pipeline::relative_error;
use foilrom::sample::sample_parameters;
use foilrom::surrogate::{lift, run_ensemble};

fn main() -> foilrom::Result<()> {
    let cfg = PipelineConfig::default();
    let dom = cfg.domain()?;
    let spec = cfg.surrogate_spec()?;
    let grid = cfg.time_grid()?;

    let samples = sample_parameters(&dom, cfg.n_train, cfg.seed, cfg.sampling);
    let ensemble = run_ensemble(&spec, &dom, &samples, &grid)?;
    println!(
        "ensemble: {} samples x {} instants on [{}, {}) s",
        ensemble.n_samples(),
        ensemble.n_instants(),
        grid.t0,
        grid.t0 + grid.m as f64 * grid.dt
    );

    let model = fit_dmd(&ensemble, &cfg.rank_spec()?)?;
    println!("retained rank: {}", model.rank());
    for lam in model.eigenvalues() {
        println!(
            "  lambda = {:+.6} {:+.6}i  (|lambda| = {:.6})",
            lam.re,
            lam.im,
            lam.re.hypot(lam.im)
        );
    }

    for t in [20.0, 22.0, 25.0, 30.0] {
        let predicted = forecast(&model, t)?;
        let truth: Vec<f64> = samples
            .iter()
            .map(|mu| lift(&spec, &dom, mu.values(), t))
            .collect::<foilrom::Result<_>>()?;
        println!(
            "t = {t:>4} s: forecast vs truth relative error {:.3e}",
            relative_error(&truth, &predicted)?
        );
    }
    Ok(())
}
