//! Gaussian process regression with an isotropic squared-exponential
//! kernel.
//!
//! Targets are modeled as a zero-mean GP (optionally after subtracting
//! the training-target mean) with covariance
//! `k(x, x') = sigma_f^2 exp(-||x - x'||^2 / (2 l^2))` plus observation
//! noise `sigma_n^2`. Fitting caches a Cholesky factorization of the
//! kernel matrix and the weight vector `alpha = K_y^-1 (y - mean)`, so
//! predictions cost O(n) for the mean and O(n^2) for the variance.
//! Hyperparameters can be optimized by maximizing the log marginal
//! likelihood with a deterministic multi-start coordinate search.
//!
//! Inputs are expected on a normalized scale (the pipeline maps its
//! parameter box to [-1, 1]^p before fitting).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{GradientProvider, ParameterDomain};

/// Squared-exponential kernel value.
pub fn se_kernel(x: &[f64], x_prime: &[f64], lengthscale: f64, signal_variance: f64) -> f64 {
    debug_assert_eq!(x.len(), x_prime.len());
    let d2: f64 = x
        .iter()
        .zip(x_prime)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    signal_variance * (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

/// Kernel hyperparameters and the prior-mean convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprParams {
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    /// Subtract the training-target mean before fitting (added back on
    /// predict). Off by default so the textbook zero-mean posterior
    /// formulas hold verbatim; the pipeline turns it on.
    pub center: bool,
}

impl Default for GprParams {
    fn default() -> Self {
        Self {
            lengthscale: 1.0,
            signal_variance: 1.0,
            noise_variance: 0.0,
            center: false,
        }
    }
}

impl GprParams {
    fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lengthscale must be positive, got {}",
                self.lengthscale
            )));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// Dense lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone)]
struct CholFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholFactor {
    /// Returns `None` when the matrix is not positive definite.
    fn factor(a: &[f64], n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    /// Forward substitution `L z = b`.
    fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                z[i] -= self.l[i * n + k] * z[k];
            }
            z[i] /= self.l[i * n + i];
        }
        z
    }

    /// Full solve `L L^T x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.solve_lower(b);
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.l[k * n + i] * x[k];
            }
            x[i] /= self.l[i * n + i];
        }
        x
    }

    fn log_det_sqrt(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum()
    }
}

/// Fitted model with the cached factorization and weights.
#[derive(Debug, Clone)]
pub struct GprModel {
    train_inputs: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    params: GprParams,
    y_mean: f64,
    /// Extra diagonal term (absolute) added on top of the noise variance
    /// to make the factorization succeed.
    jitter: f64,
    chol: CholFactor,
    alpha: Vec<f64>,
    log_marginal_likelihood: f64,
}

fn validate_training_data(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} inputs but {} targets",
            x.len(),
            y.len()
        )));
    }
    let p = x[0].len();
    if p == 0 {
        return Err(Error::InvalidInput("zero-dimensional inputs".into()));
    }
    if x.iter().any(|row| row.len() != p) {
        return Err(Error::InvalidInput("ragged training inputs".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite training data".into()));
    }
    Ok(p)
}

fn kernel_matrix(x: &[Vec<f64>], params: &GprParams) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = se_kernel(&x[i], &x[j], params.lengthscale, params.signal_variance);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Relative jitter ladder tried until the factorization succeeds.
const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

fn factor_with_jitter(x: &[Vec<f64>], params: &GprParams) -> Result<(CholFactor, f64)> {
    let n = x.len();
    let mut k = kernel_matrix(x, params);
    for &rel in &JITTER_LADDER {
        let jitter = rel * params.signal_variance;
        let mut ky = k.clone();
        for i in 0..n {
            ky[i * n + i] += params.noise_variance + jitter;
        }
        if let Some(chol) = CholFactor::factor(&ky, n) {
            return Ok((chol, jitter));
        }
        k = kernel_matrix(x, params); // keep k pristine for the next rung
    }
    Err(Error::Fit(format!(
        "kernel matrix is not positive definite even with jitter {:.1e} * sigma_f^2 \
         (lengthscale {}, {} points)",
        JITTER_LADDER[JITTER_LADDER.len() - 1],
        params.lengthscale,
        n
    )))
}

/// Fits a model with the given hyperparameters.
pub fn fit_gpr_with_params(x: &[Vec<f64>], y: &[f64], params: GprParams) -> Result<GprModel> {
    params.validate()?;
    let _p = validate_training_data(x, y)?;
    if params.noise_variance == 0.0 {
        for i in 0..x.len() {
            for j in 0..i {
                if x[i] == x[j] {
                    return Err(Error::InvalidInput(format!(
                        "duplicate training inputs {j} and {i} with zero noise make the \
                         kernel matrix singular"
                    )));
                }
            }
        }
    }
    let n = x.len();
    let y_mean = if params.center {
        y.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let (chol, jitter) = factor_with_jitter(x, &params)?;
    let alpha = chol.solve(&centered);
    let data_fit: f64 = centered.iter().zip(&alpha).map(|(c, a)| c * a).sum();
    let lml = -0.5 * data_fit
        - chol.log_det_sqrt()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    Ok(GprModel {
        train_inputs: x.to_vec(),
        train_targets: y.to_vec(),
        params,
        y_mean,
        jitter,
        chol,
        alpha,
        log_marginal_likelihood: lml,
    })
}

/// Fits a model; with `optimize` the hyperparameters maximize the log
/// marginal likelihood (deterministic multi-start coordinate search),
/// otherwise sensible defaults are used (`l = 1`, `sigma_f^2 = var(y)`,
/// noiseless).
pub fn fit_gpr(x: &[Vec<f64>], y: &[f64], optimize: bool) -> Result<GprModel> {
    validate_training_data(x, y)?;
    let vy = target_variance(y);
    let base = GprParams {
        lengthscale: 1.0,
        signal_variance: vy,
        noise_variance: 0.0,
        center: false,
    };
    if !optimize {
        return fit_gpr_with_params(x, y, base);
    }
    let params = optimize_hyperparameters(x, y, base.center)?;
    fit_gpr_with_params(x, y, params)
}

fn target_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.max(1e-12)
}

/// Maximizes the log marginal likelihood over
/// `(log l, log sigma_f^2, log sigma_n^2)`. Eight restarts on a
/// log-uniform grid of lengthscales and noise levels, each refined by a
/// cyclic coordinate search with halving steps. Fully deterministic.
pub fn optimize_hyperparameters(x: &[Vec<f64>], y: &[f64], center: bool) -> Result<GprParams> {
    validate_training_data(x, y)?;
    let vy = target_variance(y);
    let y_mean = if center {
        y.iter().sum::<f64>() / y.len() as f64
    } else {
        0.0
    };
    let centered: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let lml_of = |theta: &[f64; 3]| -> f64 {
        let params = GprParams {
            lengthscale: theta[0].exp(),
            signal_variance: theta[1].exp(),
            noise_variance: theta[2].exp(),
            center,
        };
        match factor_with_jitter(x, &params) {
            Ok((chol, _)) => {
                let alpha = chol.solve(&centered);
                let data_fit: f64 = centered.iter().zip(&alpha).map(|(c, a)| c * a).sum();
                -0.5 * data_fit
                    - chol.log_det_sqrt()
                    - 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let bounds = [
        ((1e-2f64).ln(), (1e2f64).ln()),
        ((1e-6 * vy).ln(), (1e6 * vy).ln()),
        ((1e-12 * vy).ln(), (10.0 * vy).ln()),
    ];
    let clamp = |theta: &mut [f64; 3]| {
        for (v, (lo, hi)) in theta.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };

    let mut best: Option<([f64; 3], f64)> = None;
    for &l0 in &[0.1f64, 0.5, 1.0, 3.0] {
        for &noise_rel in &[1e-6f64, 1e-2] {
            let mut theta = [l0.ln(), vy.ln(), (noise_rel * vy).ln()];
            clamp(&mut theta);
            let mut value = lml_of(&theta);
            let mut step = 0.5;
            let mut cycles = 0;
            while step >= 5e-3 && cycles < 60 {
                let mut improved = false;
                for coord in 0..3 {
                    for dir in [1.0, -1.0] {
                        let mut cand = theta;
                        cand[coord] += dir * step;
                        clamp(&mut cand);
                        let v = lml_of(&cand);
                        if v > value {
                            theta = cand;
                            value = v;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
                cycles += 1;
            }
            if best.is_none_or(|(_, bv)| value > bv) {
                best = Some((theta, value));
            }
        }
    }
    let (theta, value) = best.unwrap();
    if value == f64::NEG_INFINITY {
        return Err(Error::Fit(
            "no hyperparameter candidate produced a positive-definite kernel".into(),
        ));
    }
    Ok(GprParams {
        lengthscale: theta[0].exp(),
        signal_variance: theta[1].exp(),
        noise_variance: theta[2].exp(),
        center,
    })
}

impl GprModel {
    pub fn params(&self) -> &GprParams {
        &self.params
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn n_train(&self) -> usize {
        self.train_inputs.len()
    }

    pub fn input_dim(&self) -> usize {
        self.train_inputs[0].len()
    }

    fn check_query(&self, x_star: &[f64]) -> Result<()> {
        if x_star.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "query has {} entries, model expects {}",
                x_star.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Posterior mean and (latent) variance at a query point.
    pub fn predict(&self, x_star: &[f64]) -> Result<(f64, f64)> {
        self.check_query(x_star)?;
        let k_star: Vec<f64> = self
            .train_inputs
            .iter()
            .map(|xi| {
                se_kernel(
                    x_star,
                    xi,
                    self.params.lengthscale,
                    self.params.signal_variance,
                )
            })
            .collect();
        let mean = self.y_mean
            + k_star
                .iter()
                .zip(&self.alpha)
                .map(|(k, a)| k * a)
                .sum::<f64>();
        let z = self.chol.solve_lower(&k_star);
        let mut var = self.params.signal_variance - z.iter().map(|v| v * v).sum::<f64>();
        let tol = 1e-12 * self.params.signal_variance.max(1.0);
        if var < -tol {
            return Err(Error::Numerical(format!(
                "posterior variance {var:.3e} is negative beyond tolerance"
            )));
        }
        if var < 0.0 {
            var = 0.0;
        }
        Ok((mean, var))
    }

    /// Analytic gradient of the posterior mean:
    /// `sum_i alpha_i k(x*, x_i) (x_i - x*) / l^2`.
    pub fn posterior_mean_gradient(&self, x_star: &[f64]) -> Result<Vec<f64>> {
        self.check_query(x_star)?;
        let p = self.input_dim();
        let inv_l2 = 1.0 / (self.params.lengthscale * self.params.lengthscale);
        let mut grad = vec![0.0; p];
        for (xi, &alpha) in self.train_inputs.iter().zip(&self.alpha) {
            let k = se_kernel(
                x_star,
                xi,
                self.params.lengthscale,
                self.params.signal_variance,
            );
            let w = alpha * k * inv_l2;
            for j in 0..p {
                grad[j] += w * (xi[j] - x_star[j]);
            }
        }
        Ok(grad)
    }

    pub fn to_json(&self) -> String {
        let file = GprModelFile {
            params: self.params,
            y_mean: self.y_mean,
            jitter: self.jitter,
            train_inputs: self.train_inputs.clone(),
            train_targets: self.train_targets.clone(),
            alpha: self.alpha.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    /// Rebuilds a model from JSON. The factorization is recomputed and
    /// the stored weight vector must be reproduced, which revalidates the
    /// positive-definiteness invariant.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GprModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
        file.params.validate()?;
        validate_training_data(&file.train_inputs, &file.train_targets)?;
        let n = file.train_inputs.len();
        let mut ky = kernel_matrix(&file.train_inputs, &file.params);
        for i in 0..n {
            ky[i * n + i] += file.params.noise_variance + file.jitter;
        }
        let chol = CholFactor::factor(&ky, n).ok_or_else(|| {
            Error::Fit("stored model's kernel matrix is no longer positive definite".into())
        })?;
        let centered: Vec<f64> = file.train_targets.iter().map(|v| v - file.y_mean).collect();
        let alpha = chol.solve(&centered);
        if alpha.len() != file.alpha.len() {
            return Err(Error::InvalidInput("inconsistent weight vector length".into()));
        }
        let scale = file
            .alpha
            .iter()
            .map(|a| a.abs())
            .fold(1.0f64, f64::max);
        for (a, b) in alpha.iter().zip(&file.alpha) {
            if (a - b).abs() > 1e-8 * scale {
                return Err(Error::InvalidInput(
                    "stored weight vector does not match the recomputed solve; \
                     the model file is corrupt"
                        .into(),
                ));
            }
        }
        let data_fit: f64 = centered.iter().zip(&alpha).map(|(c, a)| c * a).sum();
        let lml = -0.5 * data_fit
            - chol.log_det_sqrt()
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(GprModel {
            train_inputs: file.train_inputs,
            train_targets: file.train_targets,
            params: file.params,
            y_mean: file.y_mean,
            jitter: file.jitter,
            chol,
            alpha,
            log_marginal_likelihood: lml,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct GprModelFile {
    params: GprParams,
    y_mean: f64,
    jitter: f64,
    train_inputs: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    alpha: Vec<f64>,
}

/// Gradient provider backed by per-instant GPR response surfaces: the
/// data-driven alternative to analytic surrogate gradients. Models are
/// fitted on normalized inputs; gradients are chain-ruled back to
/// original coordinates.
pub struct GprGradientProvider {
    dom: ParameterDomain,
    times: Vec<f64>,
    models: Vec<GprModel>,
}

impl GprGradientProvider {
    /// Fits one optimized model per analysis instant from per-instant
    /// target values (`targets[ti][sample]`).
    pub fn fit(
        dom: &ParameterDomain,
        samples: &[Vec<f64>],
        times: &[f64],
        targets: &[Vec<f64>],
    ) -> Result<Self> {
        if times.len() != targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} instants but {} target rows",
                times.len(),
                targets.len()
            )));
        }
        let normalized: Vec<Vec<f64>> = samples
            .iter()
            .map(|mu| dom.normalize(mu))
            .collect::<Result<_>>()?;
        let mut models = Vec::with_capacity(times.len());
        for target_row in targets {
            let params = optimize_hyperparameters(&normalized, target_row, true)?;
            models.push(fit_gpr_with_params(&normalized, target_row, params)?);
        }
        Ok(Self {
            dom: dom.clone(),
            times: times.to_vec(),
            models,
        })
    }
}

impl GradientProvider for GprGradientProvider {
    fn gradient(&self, mu: &[f64], t: f64) -> Result<Vec<f64>> {
        let idx = self
            .times
            .iter()
            .position(|&ti| (ti - t).abs() < 1e-9 * ti.abs().max(1.0))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "no response surface fitted at t = {t}; available: {:?}",
                    self.times
                ))
            })?;
        let x = self.dom.normalize(mu)?;
        let g_norm = self.models[idx].posterior_mean_gradient(&x)?;
        // d/d(mu) = d/d(normalized) / half_width
        Ok(g_norm
            .iter()
            .zip(self.dom.half_widths())
            .map(|(g, h)| g / h)
            .collect())
    }
}
