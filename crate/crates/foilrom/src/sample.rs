//! Deterministic parameter-space sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::shape::ParameterVector;
use crate::subspace::ParameterDomain;

/// Sampling scheme for the design of experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingStrategy {
    /// Independent uniform draws per coordinate.
    #[default]
    Uniform,
    /// Latin hypercube: each coordinate is stratified into `n` equal bins
    /// with exactly one sample per bin.
    LatinHypercube,
}

/// Draws `n` samples from the box domain. Deterministic for a given
/// `(seed, strategy)` pair (ChaCha12 stream, fixed draw order).
pub fn sample_parameters(
    dom: &ParameterDomain,
    n: usize,
    seed: u64,
    strategy: SamplingStrategy,
) -> Vec<ParameterVector> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let k = dom.dim();
    match strategy {
        SamplingStrategy::Uniform => (0..n)
            .map(|_| {
                ParameterVector::new(
                    (0..k)
                        .map(|j| {
                            let (l, u) = (dom.lower()[j], dom.upper()[j]);
                            l + (u - l) * rng.gen::<f64>()
                        })
                        .collect(),
                )
            })
            .collect(),
        SamplingStrategy::LatinHypercube => {
            let mut values = vec![vec![0.0; k]; n];
            for j in 0..k {
                let (l, u) = (dom.lower()[j], dom.upper()[j]);
                let mut bins: Vec<usize> = (0..n).collect();
                bins.shuffle(&mut rng);
                for (i, &bin) in bins.iter().enumerate() {
                    let jittered = (bin as f64 + rng.gen::<f64>()) / n as f64;
                    values[i][j] = l + (u - l) * jittered;
                }
            }
            values.into_iter().map(ParameterVector::new).collect()
        }
    }
}
