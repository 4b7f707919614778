//! Track the active subspace of the lift coefficient over time and
//! detect which shape parameters can be frozen.
//!
//! Run with `cargo run --example dyas_freeze`.

use foilrom::config::PipelineConfig;
use foilrom::sample::sample_parameters;
use foilrom::subspace::{compute_dyas, frozen_parameters, parameter_names};
use foilrom::surrogate::SurrogateGradientProvider;

fn main() -> foilrom::Result<()> {
    let cfg = PipelineConfig::default();
    let dom = cfg.domain()?;
    let spec = cfg.surrogate_spec()?;

    let samples: Vec<Vec<f64>> =
        sample_parameters(&dom, cfg.dyas.n_samples, cfg.seed, cfg.sampling)
            .into_iter()
            .map(|p| p.values().to_vec())
            .collect();
    let provider = SurrogateGradientProvider {
        spec: &spec,
        dom: &dom,
    };
    let series = compute_dyas(&samples, &provider, &dom, &cfg.dyas.times)?;

    let names = parameter_names(dom.dim());
    for (t, sub) in series.times().iter().zip(series.subspaces()) {
        let w1 = sub.eigenvector(0);
        let gap = sub.eigenvalues()[0] / sub.eigenvalues()[1].max(1e-300);
        println!("t = {t:>4} s  (spectral gap {gap:.1e}, active dim {})", sub.active_dim());
        for (name, w) in names.iter().zip(&w1) {
            let bar_len = (w.abs() * 40.0).round() as usize;
            println!("  {name:<3} {w:+.4} {}", "#".repeat(bar_len));
        }
    }

    let frozen = frozen_parameters(&series, cfg.dyas.freeze_threshold);
    let frozen_names: Vec<&str> = frozen.iter().map(|&j| names[j].as_str()).collect();
    println!(
        "\nparameters below threshold {} at every instant: {frozen_names:?}",
        cfg.dyas.freeze_threshold
    );
    println!("the response surface can drop from {} to {} dimensions", dom.dim(), dom.dim() - frozen.len());
    Ok(())
}
