//! Fit a Gaussian process response surface to the lift coefficient at a
//! fixed instant and inspect its accuracy and gradients.
//!
//! Run with `cargo run --example gpr_surface`.

use foilrom::config::PipelineConfig;
use foilrom::gpr::{fit_gpr, fit_gpr_with_params, optimize_hyperparameters};
use foilrom::pipeline::relative_error;
use foilrom::sample::sample_parameters;
use foilrom::surrogate::{lift, lift_gradient};

fn main() -> foilrom::Result<()> {
    let cfg = PipelineConfig::default();
    let dom = cfg.domain()?;
    let spec = cfg.surrogate_spec()?;
    let t = 20.0;

    let train = sample_parameters(&dom, cfg.n_train, cfg.seed, cfg.sampling);
    let test = sample_parameters(&dom, cfg.n_test, cfg.seed.wrapping_add(1), cfg.sampling);
    let train_x: Vec<Vec<f64>> = train
        .iter()
        .map(|mu| dom.normalize(mu.values()))
        .collect::<foilrom::Result<_>>()?;
    let train_y: Vec<f64> = train
        .iter()
        .map(|mu| lift(&spec, &dom, mu.values(), t))
        .collect::<foilrom::Result<_>>()?;

    // default hyperparameters vs. marginal-likelihood optimization
    let plain = fit_gpr(&train_x, &train_y, false)?;
    let tuned_params = optimize_hyperparameters(&train_x, &train_y, true)?;
    let tuned = fit_gpr_with_params(&train_x, &train_y, tuned_params)?;
    println!(
        "log marginal likelihood: {:.2} (defaults) -> {:.2} (optimized)",
        plain.log_marginal_likelihood(),
        tuned.log_marginal_likelihood()
    );
    println!(
        "optimized hyperparameters: lengthscale {:.3}, signal variance {:.3e}, noise {:.3e}",
        tuned.params().lengthscale,
        tuned.params().signal_variance,
        tuned.params().noise_variance
    );

    let truth: Vec<f64> = test
        .iter()
        .map(|mu| lift(&spec, &dom, mu.values(), t))
        .collect::<foilrom::Result<_>>()?;
    let preds: Vec<f64> = test
        .iter()
        .map(|mu| Ok(tuned.predict(&dom.normalize(mu.values())?)?.0))
        .collect::<foilrom::Result<_>>()?;
    println!(
        "test error over {} unseen samples at t = {t} s: {:.3e}",
        test.len(),
        relative_error(&truth, &preds)?
    );

    // the posterior-mean gradient approximates the analytic one
    let probe = &train[0];
    let g_model = tuned.posterior_mean_gradient(&dom.normalize(probe.values())?)?;
    let g_true = lift_gradient(&spec, &dom, probe.values(), t)?;
    let g_true_norm = dom.scale_gradient(&g_true)?;
    println!("\ngradient at the first training sample (normalized coordinates):");
    println!("  surface:  {:?}", g_model.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());
    println!("  analytic: {:?}", g_true_norm.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());
    Ok(())
}
