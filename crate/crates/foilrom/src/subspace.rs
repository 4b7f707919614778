//! Active subspaces of a scalar target function, extended over time
//! (dynamic active subspaces).
//!
//! The uncentered covariance of the gradient, `C = E[grad f grad f^T]`,
//! is estimated by Monte Carlo over parameter samples and
//! eigendecomposed; the leading eigenspace spans the directions along
//! which the target varies most on average. Repeating the analysis at a
//! set of instants tracks how those directions drift, and parameters
//! whose first-eigenvector weight stays below a threshold over the whole
//! window can be frozen out of downstream regressions.
//!
//! All subspaces are computed in normalized [-1, 1]^k coordinates;
//! gradients supplied in original coordinates are chain-rule scaled by
//! the affine normalization map.

use std::collections::BTreeSet;
use std::io::Write;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::csvio::fmt_f64;
use crate::error::{Error, Result};

/// Box parameter domain with uniform density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParameterDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidInput(format!(
                "domain bounds disagree in length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "domain interval {j} is empty or non-finite: [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The reference 10-parameter box [0, 0.03]^10.
    pub fn unit_bump_box() -> Self {
        Self {
            lower: vec![0.0; 10],
            upper: vec![0.03; 10],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim()
            && mu
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    /// Affine map sending each interval to [-1, 1].
    pub fn normalize(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if mu.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "parameter vector has {} entries, domain has {}",
                mu.len(),
                self.dim()
            )));
        }
        if !self.contains(mu) {
            return Err(Error::InvalidInput(format!(
                "parameter vector {mu:?} lies outside the domain"
            )));
        }
        Ok(mu
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| 2.0 * (v - l) / (u - l) - 1.0)
            .collect())
    }

    /// Inverse of [`normalize`](ParameterDomain::normalize).
    pub fn denormalize(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "normalized vector has {} entries, domain has {}",
                y.len(),
                self.dim()
            )));
        }
        Ok(y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| l + 0.5 * (v + 1.0) * (u - l))
            .collect())
    }

    /// Per-coordinate factors d(original)/d(normalized) = (u - l)/2, the
    /// chain-rule scale turning original-coordinate gradients into
    /// normalized-coordinate ones.
    pub fn half_widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| 0.5 * (u - l))
            .collect()
    }

    /// Scales a gradient w.r.t. original coordinates into the gradient
    /// w.r.t. normalized coordinates.
    pub fn scale_gradient(&self, grad: &[f64]) -> Result<Vec<f64>> {
        if grad.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "gradient has {} entries, domain has {}",
                grad.len(),
                self.dim()
            )));
        }
        Ok(grad
            .iter()
            .zip(self.half_widths())
            .map(|(&g, h)| g * h)
            .collect())
    }
}

/// Eigen-structure of the gradient covariance: descending non-negative
/// eigenvalues, orthogonal eigenvectors (columns, sign-fixed so the
/// largest-magnitude component of each is positive), and the partition
/// into an active block W1 (first `active_dim` columns) and the inactive
/// remainder W2.
#[derive(Debug, Clone)]
pub struct ActiveSubspace {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    active_dim: usize,
}

impl ActiveSubspace {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn active_dim(&self) -> usize {
        self.active_dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> faer::MatRef<'_, f64> {
        self.eigenvectors.as_ref()
    }

    /// Column `i` of W.
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|r| self.eigenvectors[(r, i)]).collect()
    }

    /// Active block W1 (k x M).
    pub fn w1(&self) -> faer::MatRef<'_, f64> {
        self.eigenvectors
            .as_ref()
            .submatrix(0, 0, self.dim(), self.active_dim)
    }

    /// Inactive block W2 (k x (k - M)).
    pub fn w2(&self) -> faer::MatRef<'_, f64> {
        self.eigenvectors.as_ref().submatrix(
            0,
            self.active_dim,
            self.dim(),
            self.dim() - self.active_dim,
        )
    }

    /// Active variable `W1^T mu` of a normalized parameter vector.
    pub fn active_variable(&self, mu_normalized: &[f64]) -> Result<Vec<f64>> {
        if mu_normalized.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector has {} entries, subspace expects {}",
                mu_normalized.len(),
                self.dim()
            )));
        }
        let w1 = self.w1();
        Ok((0..self.active_dim)
            .map(|c| (0..self.dim()).map(|r| w1[(r, c)] * mu_normalized[r]).sum())
            .collect())
    }

    /// Inactive variable `W2^T mu`.
    pub fn inactive_variable(&self, mu_normalized: &[f64]) -> Result<Vec<f64>> {
        if mu_normalized.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector has {} entries, subspace expects {}",
                mu_normalized.len(),
                self.dim()
            )));
        }
        let w2 = self.w2();
        Ok((0..self.dim() - self.active_dim)
            .map(|c| (0..self.dim()).map(|r| w2[(r, c)] * mu_normalized[r]).sum())
            .collect())
    }
}

/// Monte Carlo estimate `C = (1/N) sum grad_i grad_i^T` of the uncentered
/// gradient covariance.
pub fn estimate_covariance(gradients: &[Vec<f64>]) -> Result<Mat<f64>> {
    if gradients.is_empty() {
        return Err(Error::InvalidInput("no gradients supplied".into()));
    }
    let k = gradients[0].len();
    if k == 0 {
        return Err(Error::InvalidInput("zero-dimensional gradients".into()));
    }
    if gradients.iter().any(|g| g.len() != k) {
        return Err(Error::InvalidInput("gradients disagree in dimension".into()));
    }
    if gradients.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite gradient".into()));
    }
    let n = gradients.len() as f64;
    let mut c = Mat::<f64>::zeros(k, k);
    for g in gradients {
        for i in 0..k {
            for j in 0..k {
                c[(i, j)] += g[i] * g[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            c[(i, j)] /= n;
        }
    }
    Ok(c)
}

/// Eigendecomposes a symmetric covariance matrix into an
/// [`ActiveSubspace`]. When `active_dim` is `None`, the split is placed
/// at the largest spectral gap `lambda_i / lambda_{i+1}` over
/// `i in [1, k-1]` (ties break toward the smallest dimension; eigenvalues
/// below `1e-14 * lambda_1` are floored before forming ratios).
pub fn fit_active_subspace(
    c: faer::MatRef<'_, f64>,
    active_dim: Option<usize>,
) -> Result<ActiveSubspace> {
    let k = c.nrows();
    if c.ncols() != k || k < 2 {
        return Err(Error::InvalidInput(format!(
            "covariance must be square with k >= 2, got {k} x {}",
            c.ncols()
        )));
    }
    let mut max_abs: f64 = 0.0;
    let mut max_asym: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            if !c[(i, j)].is_finite() {
                return Err(Error::InvalidInput("non-finite covariance entry".into()));
            }
            max_abs = max_abs.max(c[(i, j)].abs());
            max_asym = max_asym.max((c[(i, j)] - c[(j, i)]).abs());
        }
    }
    if max_asym > 1e-10 * max_abs.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "covariance is not symmetric: max |C - C^T| = {max_asym:.3e}"
        )));
    }

    let sym = Mat::<f64>::from_fn(k, k, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = sym.as_ref().selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();

    // descending order, negatives clamped to zero
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| s[i].max(0.0)).collect();

    let mut eigenvectors = Mat::<f64>::zeros(k, k);
    for (col, &src) in order.iter().enumerate() {
        // sign convention: largest-magnitude component positive
        let mut pivot = 0;
        for r in 1..k {
            if u[(r, src)].abs() > u[(pivot, src)].abs() {
                pivot = r;
            }
        }
        let sign = if u[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..k {
            eigenvectors[(r, col)] = sign * u[(r, src)];
        }
    }

    let active_dim = match active_dim {
        Some(m) => {
            if m == 0 || m >= k {
                return Err(Error::InvalidInput(format!(
                    "active dimension must lie in [1, {}], got {m}",
                    k - 1
                )));
            }
            m
        }
        None => {
            if eigenvalues[0] <= 0.0 {
                1 // zero spectrum carries no information; keep one direction
            } else {
                let floor = 1e-14 * eigenvalues[0];
                let mut best = (0usize, f64::NEG_INFINITY);
                for i in 0..k - 1 {
                    let ratio = eigenvalues[i].max(floor) / eigenvalues[i + 1].max(floor);
                    if ratio > best.1 {
                        best = (i, ratio);
                    }
                }
                best.0 + 1
            }
        }
    };

    Ok(ActiveSubspace {
        eigenvalues,
        eigenvectors,
        active_dim,
    })
}

/// Supplies the target-function gradient w.r.t. the original (physical)
/// parameters at a sample and an instant.
pub trait GradientProvider {
    fn gradient(&self, mu: &[f64], t: f64) -> Result<Vec<f64>>;
}

/// Time-indexed family of active subspaces.
#[derive(Debug, Clone)]
pub struct DyasSeries {
    times: Vec<f64>,
    subspaces: Vec<ActiveSubspace>,
}

impl DyasSeries {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn subspaces(&self) -> &[ActiveSubspace] {
        &self.subspaces
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs the analysis at each instant: gathers gradients at all samples,
/// chain-rules them into normalized coordinates, estimates the
/// covariance, and fits the subspace (automatic gap selection).
pub fn compute_dyas(
    samples: &[Vec<f64>],
    provider: &dyn GradientProvider,
    dom: &ParameterDomain,
    times: &[f64],
) -> Result<DyasSeries> {
    if times.is_empty() {
        return Err(Error::InvalidInput("no analysis instants given".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("no parameter samples given".into()));
    }
    let k = dom.dim();
    if samples.len() < k + 1 {
        eprintln!(
            "warning: {} gradient samples for a {k}-dimensional space; the covariance \
             estimate is rank-deficient by construction",
            samples.len()
        );
    }
    let mut subspaces = Vec::with_capacity(times.len());
    for &t in times {
        let mut grads = Vec::with_capacity(samples.len());
        for (i, mu) in samples.iter().enumerate() {
            let g = provider.gradient(mu, t).map_err(|e| Error::Gradient {
                sample: i,
                time: t,
                source: Box::new(e),
            })?;
            grads.push(dom.scale_gradient(&g)?);
        }
        let c = estimate_covariance(&grads)?;
        subspaces.push(fit_active_subspace(c.as_ref(), None)?);
    }
    Ok(DyasSeries {
        times: times.to_vec(),
        subspaces,
    })
}

/// Indices (0-based) whose first-eigenvector weight stays strictly below
/// `tau` at every analysis instant.
pub fn frozen_parameters(series: &DyasSeries, tau: f64) -> BTreeSet<usize> {
    let mut frozen = BTreeSet::new();
    if series.subspaces.is_empty() {
        return frozen;
    }
    let k = series.subspaces[0].dim();
    for j in 0..k {
        let max_weight = series
            .subspaces
            .iter()
            .map(|s| s.eigenvectors[(j, 0)].abs())
            .fold(0.0, f64::max);
        if max_weight < tau {
            frozen.insert(j);
        }
    }
    frozen
}

/// Rows `(w1^T mu_i, f_i)` sorted by the active variable; requires a
/// one-dimensional active subspace.
pub fn sufficiency_summary(
    subspace: &ActiveSubspace,
    samples_normalized: &[Vec<f64>],
    f_values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if subspace.active_dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "sufficiency summary needs a 1-dimensional active subspace, got M = {}",
            subspace.active_dim()
        )));
    }
    if samples_normalized.len() != f_values.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples but {} target values",
            samples_normalized.len(),
            f_values.len()
        )));
    }
    let mut rows = Vec::with_capacity(f_values.len());
    for (mu, &f) in samples_normalized.iter().zip(f_values) {
        let av = subspace.active_variable(mu)?;
        rows.push((av[0], f));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(rows)
}

/// Parameter names for reports: `c1..c5, d1..d5` in the standard
/// 10-dimensional case, `p1..pk` otherwise.
pub fn parameter_names(k: usize) -> Vec<String> {
    if k == 10 {
        (1..=5)
            .map(|i| format!("c{i}"))
            .chain((1..=5).map(|i| format!("d{i}")))
            .collect()
    } else {
        (1..=k).map(|i| format!("p{i}")).collect()
    }
}

/// Writes `parameter_index,parameter_name,w1_component` (indices 1-based,
/// matching the c/d naming).
pub fn write_w1_csv<W: Write>(subspace: &ActiveSubspace, mut w: W) -> Result<()> {
    let names = parameter_names(subspace.dim());
    writeln!(w, "parameter_index,parameter_name,w1_component")?;
    for j in 0..subspace.dim() {
        writeln!(
            w,
            "{},{},{}",
            j + 1,
            names[j],
            fmt_f64(subspace.eigenvectors[(j, 0)])
        )?;
    }
    Ok(())
}

/// Writes `index,lambda` (1-based, descending).
pub fn write_eigenvalues_csv<W: Write>(subspace: &ActiveSubspace, mut w: W) -> Result<()> {
    writeln!(w, "index,lambda")?;
    for (i, lam) in subspace.eigenvalues.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, fmt_f64(*lam))?;
    }
    Ok(())
}

/// Writes `active_variable,f_value` rows.
pub fn write_sufficiency_csv<W: Write>(rows: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "active_variable,f_value")?;
    for (av, f) in rows {
        writeln!(w, "{},{}", fmt_f64(*av), fmt_f64(*f))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn domain(k: usize) -> ParameterDomain {
        ParameterDomain::new(vec![0.0; k], vec![0.03; k]).unwrap()
    }

    #[test]
    fn normalization_endpoints_and_midpoint() {
        let dom = domain(3);
        assert_eq!(dom.normalize(&[0.0, 0.0, 0.0]).unwrap(), vec![-1.0; 3]);
        assert_eq!(dom.normalize(&[0.03, 0.03, 0.03]).unwrap(), vec![1.0; 3]);
        let mid = dom.normalize(&[0.015, 0.015, 0.015]).unwrap();
        for v in mid {
            assert!(v.abs() < 1e-15);
        }
        assert!(dom.normalize(&[0.05, 0.0, 0.0]).is_err());
        assert!(dom.normalize(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn covariance_basic_cases() {
        // constant f: zero gradients, zero matrix
        let c = estimate_covariance(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(c[(0, 0)], 0.0);
        assert_eq!(c[(1, 1)], 0.0);

        // linear f: every gradient is a, C = a a^T regardless of N
        let a = vec![0.5, -1.0, 2.0];
        let c = estimate_covariance(&[a.clone(), a.clone(), a.clone()]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[(i, j)] - a[i] * a[j]).abs() < 1e-14);
            }
        }

        // two canonical gradients: C = diag(1, 1, 0) / 2
        let c = estimate_covariance(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(c[(0, 0)], 0.5);
        assert_eq!(c[(1, 1)], 0.5);
        assert_eq!(c[(2, 2)], 0.0);
        assert_eq!(c[(0, 1)], 0.0);

        assert!(estimate_covariance(&[]).is_err());
    }

    #[test]
    fn rank_one_covariance_recovers_direction() {
        let a = [0.6, -0.3, 0.1, 0.9];
        let norm = (a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let c = Mat::from_fn(4, 4, |i, j| a[i] * a[j]);
        let s = fit_active_subspace(c.as_ref(), None).unwrap();
        assert_eq!(s.active_dim(), 1);
        let w1 = s.eigenvector(0);
        let cosine: f64 = w1.iter().zip(&a).map(|(w, v)| w * v / norm).sum();
        assert!(cosine.abs() > 1.0 - 1e-10, "cosine = {cosine}");
        assert!(s.eigenvalues()[1] <= 1e-12 * s.eigenvalues()[0]);
    }

    #[test]
    fn identity_covariance_breaks_ties_at_one() {
        let c = Mat::<f64>::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.0 });
        let s = fit_active_subspace(c.as_ref(), None).unwrap();
        assert_eq!(s.active_dim(), 1);
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let mut c = Mat::<f64>::zeros(3, 3);
        c[(0, 1)] = 1.0;
        assert!(fit_active_subspace(c.as_ref(), None).is_err());
    }

    #[test]
    fn explicit_active_dim_validated() {
        let c = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        assert!(fit_active_subspace(c.as_ref(), Some(0)).is_err());
        assert!(fit_active_subspace(c.as_ref(), Some(3)).is_err());
        let s = fit_active_subspace(c.as_ref(), Some(2)).unwrap();
        assert_eq!(s.active_dim(), 2);
        assert_eq!(s.w1().ncols(), 2);
        assert_eq!(s.w2().ncols(), 1);
    }

    #[test]
    fn active_variable_and_recomposition() {
        let w = [2.0, 1.5, 1.0, 0.1];
        let c = Mat::from_fn(4, 4, |i, j| w[i] * w[j] + if i == j { 0.5 } else { 0.0 });
        let s = fit_active_subspace(c.as_ref(), Some(2)).unwrap();

        assert_eq!(s.active_variable(&vec![0.0; 4]).unwrap(), vec![0.0, 0.0]);
        // first eigenvector maps to (1, 0)
        let w1 = s.eigenvector(0);
        let av = s.active_variable(&w1).unwrap();
        assert!((av[0] - 1.0).abs() < 1e-12);
        assert!(av[1].abs() < 1e-12);

        // W1 mu_M + W2 eta reassembles mu
        let mu = vec![0.3, -0.7, 0.2, 0.9];
        let av = s.active_variable(&mu).unwrap();
        let iv = s.inactive_variable(&mu).unwrap();
        for r in 0..4 {
            let mut rec = 0.0;
            for c in 0..2 {
                rec += s.w1()[(r, c)] * av[c];
            }
            for c in 0..2 {
                rec += s.w2()[(r, c)] * iv[c];
            }
            assert!((rec - mu[r]).abs() < 1e-12);
        }
        assert!(s.active_variable(&vec![0.0; 3]).is_err());
    }

    #[test]
    fn orthonormality_of_eigenvectors() {
        let c = Mat::from_fn(6, 6, |i, j| {
            1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { 2.0 } else { 0.0 }
        });
        let s = fit_active_subspace(c.as_ref(), None).unwrap();
        let w = s.eigenvectors();
        for a in 0..6 {
            for b in 0..6 {
                let dot: f64 = (0..6).map(|r| w[(r, a)] * w[(r, b)]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
    }

    struct RidgeProvider {
        weights: Vec<f64>,
    }

    impl GradientProvider for RidgeProvider {
        fn gradient(&self, mu: &[f64], t: f64) -> Result<Vec<f64>> {
            // f(mu, t) = (1 - e^-t) * h(w . mu) with h'(s) = 1 + 0.3 s^2
            let s: f64 = self.weights.iter().zip(mu).map(|(w, m)| w * m).sum();
            let scale = (1.0 - (-t).exp()) * (1.0 + 0.3 * s * s);
            Ok(self.weights.iter().map(|w| w * scale).collect())
        }
    }

    fn grid_samples(dom: &ParameterDomain, n: usize, seed: u64) -> Vec<Vec<f64>> {
        // simple deterministic LCG so this module does not depend on the
        // sampling module
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| {
                (0..dom.dim())
                    .map(|j| dom.lower()[j] + (dom.upper()[j] - dom.lower()[j]) * next())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn dyas_detects_planted_ridge() {
        let dom = domain(10);
        let mut weights = vec![0.0; 10];
        for (j, w) in [(1, 0.8), (2, 1.3), (3, 0.9), (6, 0.5), (7, 1.1), (8, 0.7)] {
            weights[j] = w;
        }
        let provider = RidgeProvider {
            weights: weights.clone(),
        };
        let samples = grid_samples(&dom, 60, 7);
        let series = compute_dyas(&samples, &provider, &dom, &[6.0, 10.0, 14.0, 18.0]).unwrap();
        assert_eq!(series.len(), 4);
        for s in series.subspaces() {
            let w1 = s.eigenvector(0);
            for j in [0usize, 4, 5, 9] {
                assert!(w1[j].abs() < 0.05, "component {j} = {}", w1[j]);
            }
        }
        // zero-weight directions freeze out at tau = 0.1
        let frozen = frozen_parameters(&series, 0.1);
        assert_eq!(frozen, BTreeSet::from([0, 4, 5, 9]));
        // tau = 0 freezes nothing (strict inequality)
        assert!(frozen_parameters(&series, 0.0).is_empty());
    }

    #[test]
    fn constant_target_gives_zero_spectra() {
        struct Zero;
        impl GradientProvider for Zero {
            fn gradient(&self, mu: &[f64], _t: f64) -> Result<Vec<f64>> {
                Ok(vec![0.0; mu.len()])
            }
        }
        let dom = domain(4);
        let samples = grid_samples(&dom, 10, 3);
        let series = compute_dyas(&samples, &Zero, &dom, &[1.0, 2.0]).unwrap();
        for s in series.subspaces() {
            assert!(s.eigenvalues().iter().all(|&l| l == 0.0));
        }
    }

    #[test]
    fn provider_failures_carry_context() {
        struct Failing;
        impl GradientProvider for Failing {
            fn gradient(&self, _mu: &[f64], _t: f64) -> Result<Vec<f64>> {
                Err(Error::Numerical("boom".into()))
            }
        }
        let dom = domain(3);
        let samples = grid_samples(&dom, 5, 1);
        let err = compute_dyas(&samples, &Failing, &dom, &[2.0]).unwrap_err();
        match err {
            Error::Gradient { sample, time, .. } => {
                assert_eq!(sample, 0);
                assert_eq!(time, 2.0);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn sufficiency_summary_of_monotone_ridge() {
        let a = [0.9, 0.3, -0.1];
        let c = Mat::from_fn(3, 3, |i, j| a[i] * a[j]);
        let s = fit_active_subspace(c.as_ref(), Some(1)).unwrap();
        let samples: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64 / 19.0 * 2.0 - 1.0;
                vec![t * 0.9, t * 0.3, -t * 0.1]
            })
            .collect();
        // monotone h applied to the ridge coordinate
        let f: Vec<f64> = samples
            .iter()
            .map(|mu| {
                let s: f64 = a.iter().zip(mu).map(|(w, m)| w * m).sum();
                s + 0.1 * s * s * s
            })
            .collect();
        let rows = sufficiency_summary(&s, &samples, &f).unwrap();
        assert_eq!(rows.len(), 20);
        for w in rows.windows(2) {
            assert!(w[0].0 <= w[1].0);
            assert!(w[0].1 <= w[1].1, "f not monotone along the active variable");
        }
        // single sample still works
        let one = sufficiency_summary(&s, &samples[..1].to_vec(), &f[..1].to_vec()).unwrap();
        assert_eq!(one.len(), 1);
        // mismatched lengths rejected
        assert!(sufficiency_summary(&s, &samples, &f[..5].to_vec()).is_err());
    }

    #[test]
    fn rotation_equivariance() {
        // plane rotation applied to all gradients maps eigenvectors
        // accordingly and leaves eigenvalues unchanged
        let grads: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() + 1.2, (2.0 * t).cos(), 0.3 * t.sin() - 0.5]
            })
            .collect();
        let theta: f64 = 0.7;
        let rot = |v: &[f64]| -> Vec<f64> {
            vec![
                theta.cos() * v[0] - theta.sin() * v[1],
                theta.sin() * v[0] + theta.cos() * v[1],
                v[2],
            ]
        };
        let c1 = estimate_covariance(&grads).unwrap();
        let rotated: Vec<Vec<f64>> = grads.iter().map(|g| rot(g)).collect();
        let c2 = estimate_covariance(&rotated).unwrap();
        let s1 = fit_active_subspace(c1.as_ref(), Some(1)).unwrap();
        let s2 = fit_active_subspace(c2.as_ref(), Some(1)).unwrap();
        for (l1, l2) in s1.eigenvalues().iter().zip(s2.eigenvalues()) {
            assert!((l1 - l2).abs() < 1e-10 * s1.eigenvalues()[0].max(1.0));
        }
        let w1_rot = rot(&s1.eigenvector(0));
        let w2 = s2.eigenvector(0);
        let dot: f64 = w1_rot.iter().zip(&w2).map(|(a, b)| a * b).sum();
        assert!(dot.abs() > 1.0 - 1e-10, "|cos| = {}", dot.abs());
    }

    #[test]
    fn covariance_is_psd() {
        let grads = grid_samples(&domain(5), 25, 11);
        let c = estimate_covariance(&grads).unwrap();
        let s = fit_active_subspace(c.as_ref(), None).unwrap();
        let max = s.eigenvalues()[0];
        // clamped eigenvalues are non-negative and bounded by the largest
        assert!(s
            .eigenvalues()
            .iter()
            .all(|&l| l >= 0.0 && l <= max * (1.0 + 1e-12)));
    }

    #[test]
    fn csv_writers_shape() {
        let c = Mat::from_fn(10, 10, |i, j| if i == j { 10.0 - i as f64 } else { 0.0 });
        let s = fit_active_subspace(c.as_ref(), Some(1)).unwrap();
        let mut buf = Vec::new();
        write_w1_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "parameter_index,parameter_name,w1_component");
        assert_eq!(lines.len(), 11);
        assert!(lines[1].starts_with("1,c1,"));
        assert!(lines[10].starts_with("10,d5,"));

        let mut buf = Vec::new();
        write_eigenvalues_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert_eq!(text.lines().nth(1).unwrap(), "1,10");
    }

    proptest! {
        /// normalize / denormalize round-trip to 1e-14.
        #[test]
        fn normalize_round_trip(vals in proptest::collection::vec(0.0..1.0f64, 6)) {
            let dom = ParameterDomain::new(vec![-0.5; 6], vec![2.0; 6]).unwrap();
            let mu: Vec<f64> = vals.iter().map(|v| -0.5 + v * 2.5).collect();
            let y = dom.normalize(&mu).unwrap();
            let back = dom.denormalize(&y).unwrap();
            for (a, b) in mu.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }

        /// The frozen set grows monotonically with tau.
        #[test]
        fn frozen_set_monotone_in_tau(tau1 in 0.0..1.0f64, tau2 in 0.0..1.0f64) {
            let dom = domain(6);
            let mut weights = vec![0.0; 6];
            weights[1] = 1.0;
            weights[3] = 0.4;
            let provider = RidgeProvider { weights };
            let samples = grid_samples(&dom, 12, 5);
            let series = compute_dyas(&samples, &provider, &dom, &[3.0, 9.0]).unwrap();
            let (lo, hi) = if tau1 <= tau2 { (tau1, tau2) } else { (tau2, tau1) };
            let f_lo = frozen_parameters(&series, lo);
            let f_hi = frozen_parameters(&series, hi);
            prop_assert!(f_lo.is_subset(&f_hi));
        }
    }
}
