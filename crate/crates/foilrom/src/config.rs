//! Pipeline configuration: a single TOML file covering every stage.
//!
//! Every field has a default matching the reference setup (10
//! parameters on [0, 0.03]^10, a 70/100 train/test split, an 8 s FOM
//! window sampled at 1 ms, rank-10 DMD, sensitivity analysis at
//! t = 6, 10, 14, 18 s). Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dmd::RankSpec;
use crate::error::{Error, Result};
use crate::gpr::GprParams;
use crate::rbf::CutoffConfig;
use crate::sample::SamplingStrategy;
use crate::shape::BumpBasis;
use crate::subspace::ParameterDomain;
use crate::surrogate::{SurrogateSpec, TimeGrid};

fn default_seed() -> u64 {
    202
}
fn default_n_train() -> usize {
    70
}
fn default_n_test() -> usize {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("foilrom-out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub sampling: SamplingStrategy,
    pub output_dir: PathBuf,
    pub domain: DomainConfig,
    pub fom: FomConfig,
    pub dmd: DmdConfig,
    pub forecast: ForecastConfig,
    pub dyas: DyasConfig,
    pub gpr: GprConfig,
    pub eval: EvalConfig,
    pub surrogate: SurrogateConfig,
    pub geometry: GeometryConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            n_train: default_n_train(),
            n_test: default_n_test(),
            sampling: SamplingStrategy::default(),
            output_dir: default_output_dir(),
            domain: DomainConfig::default(),
            fom: FomConfig::default(),
            dmd: DmdConfig::default(),
            forecast: ForecastConfig::default(),
            dyas: DyasConfig::default(),
            gpr: GprConfig::default(),
            eval: EvalConfig::default(),
            surrogate: SurrogateConfig::default(),
            geometry: GeometryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            lower: vec![0.0; 10],
            upper: vec![0.03; 10],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FomConfig {
    /// Training window `[t_a, t_b)`; instants are `t_a + j * dt`.
    pub window: [f64; 2],
    pub dt: f64,
}

impl Default for FomConfig {
    fn default() -> Self {
        Self {
            window: [12.0, 20.0],
            dt: 0.001,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmdConfig {
    /// Fixed truncation rank; mutually exclusive with `energy`.
    pub rank: Option<usize>,
    /// Cumulative-energy threshold in (0, 1]; mutually exclusive with
    /// `rank`.
    pub energy: Option<f64>,
}

impl Default for DmdConfig {
    fn default() -> Self {
        Self {
            rank: Some(10),
            energy: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    /// Instants at which DMD forecasts are emitted.
    pub times: Vec<f64>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            times: (21..=30).map(|t| t as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DyasConfig {
    /// Analysis instants.
    pub times: Vec<f64>,
    /// First-eigenvector weight below which a parameter freezes.
    pub freeze_threshold: f64,
    pub gradient_provider: GradientProviderKind,
    /// Monte Carlo samples for the covariance estimate.
    pub n_samples: usize,
}

impl Default for DyasConfig {
    fn default() -> Self {
        Self {
            times: vec![6.0, 10.0, 14.0, 18.0],
            freeze_threshold: 0.1,
            gradient_provider: GradientProviderKind::Surrogate,
            n_samples: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientProviderKind {
    /// Analytic gradients of the surrogate lift model.
    Surrogate,
    /// Gradients of a GPR posterior mean fitted per analysis instant.
    Gpr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GprConfig {
    /// Maximize the log marginal likelihood; when false the explicit
    /// hyperparameters below are used.
    pub optimize: bool,
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for GprConfig {
    fn default() -> Self {
        Self {
            optimize: true,
            lengthscale: 1.0,
            signal_variance: 1.0,
            noise_variance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Times at which the dual response surfaces are compared.
    pub times: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            times: (1..=30).map(|t| t as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateConfig {
    pub baseline: f64,
    pub steady_weights: Vec<f64>,
    pub decay_baseline: f64,
    pub decay_weights: Vec<f64>,
    pub transient_weights: Vec<f64>,
    pub quadrature_weights: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub omega: f64,
    /// 1-based parameter indices (matching the c1..c5, d1..d5 naming).
    pub frozen_indices: Vec<usize>,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        let spec = SurrogateSpec::default();
        Self {
            baseline: spec.baseline(),
            steady_weights: spec.steady_weights().to_vec(),
            decay_baseline: spec.decay_baseline(),
            decay_weights: spec.decay_weights().to_vec(),
            transient_weights: spec.transient_weights().to_vec(),
            quadrature_weights: spec.quadrature_weights().to_vec(),
            tau1: 3.0,
            tau2: 5.0,
            omega: 1.0,
            frozen_indices: spec.frozen_indices().iter().map(|j| j + 1).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub naca_code: String,
    /// Stations per surface (cosine spacing).
    pub n_points: usize,
    pub closed_te: bool,
    pub bump_peaks: Vec<f64>,
    pub bump_exponent: f64,
    /// Wendland kernel support radius (m).
    pub kernel_radius: f64,
    /// Cutoff plateau radius around the focal point (m).
    pub r_inner: f64,
    /// Radius beyond which interior points do not move (m).
    pub r_out: f64,
    /// Optional reference mesh CSV; when absent a mesh is generated.
    pub mesh_path: Option<PathBuf>,
    /// Generated-mesh extents and spacings.
    pub mesh_x_range: [f64; 2],
    pub mesh_y_range: [f64; 2],
    pub mesh_interior_spacing: f64,
    pub mesh_outer_spacing: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            naca_code: "4412".to_string(),
            n_points: 200,
            closed_te: false,
            bump_peaks: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            bump_exponent: 3.0,
            kernel_radius: 0.1,
            r_inner: 1.5,
            r_out: 7.0,
            mesh_path: None,
            mesh_x_range: [-8.0, 16.0],
            mesh_y_range: [-8.0, 8.0],
            mesh_interior_spacing: 0.25,
            mesh_outer_spacing: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Cross-field invariants; every typed accessor below also succeeds
    /// once this passes.
    pub fn validate(&self) -> Result<()> {
        if self.n_train < 1 || self.n_test < 1 {
            return Err(Error::Config(
                "n_train and n_test must both be at least 1".into(),
            ));
        }
        let dom = self.domain()?;
        let [t_a, t_b] = self.fom.window;
        if !(t_a < t_b) || t_a < 0.0 {
            return Err(Error::Config(format!(
                "fom.window must satisfy 0 <= t_a < t_b, got [{t_a}, {t_b}]"
            )));
        }
        self.time_grid()?;
        self.rank_spec()?;
        for &t in &self.forecast.times {
            if t < t_a {
                return Err(Error::Config(format!(
                    "forecast time {t} precedes the training window start {t_a}"
                )));
            }
        }
        if self.dyas.times.is_empty() {
            return Err(Error::Config("dyas.times must not be empty".into()));
        }
        if self.dyas.times.iter().any(|&t| t < 0.0) {
            return Err(Error::Config("dyas.times must be non-negative".into()));
        }
        if !(self.dyas.freeze_threshold >= 0.0) {
            return Err(Error::Config(
                "dyas.freeze_threshold must be non-negative".into(),
            ));
        }
        if self.dyas.n_samples == 0 {
            return Err(Error::Config("dyas.n_samples must be at least 1".into()));
        }
        if self.eval.times.is_empty() {
            return Err(Error::Config("eval.times must not be empty".into()));
        }
        if self.eval.times.iter().any(|&t| t < 0.0) {
            return Err(Error::Config("eval.times must be non-negative".into()));
        }
        self.gpr_params().map_err(|e| Error::Config(e.to_string()))?;
        let spec = self.surrogate_spec()?;
        if spec.dim() != dom.dim() {
            return Err(Error::Config(format!(
                "surrogate has {} weights but the domain has {} parameters",
                spec.dim(),
                dom.dim()
            )));
        }
        self.bump_basis()?;
        self.cutoff()?;
        if !(self.geometry.kernel_radius > 0.0) {
            return Err(Error::Config("geometry.kernel_radius must be positive".into()));
        }
        if !(self.geometry.mesh_interior_spacing > 0.0)
            || !(self.geometry.mesh_outer_spacing > 0.0)
        {
            return Err(Error::Config("mesh spacings must be positive".into()));
        }
        if self.geometry.mesh_x_range[0] >= self.geometry.mesh_x_range[1]
            || self.geometry.mesh_y_range[0] >= self.geometry.mesh_y_range[1]
        {
            return Err(Error::Config("mesh ranges must be non-empty".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<ParameterDomain> {
        ParameterDomain::new(self.domain.lower.clone(), self.domain.upper.clone())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_window(self.fom.window[0], self.fom.window[1], self.fom.dt)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn rank_spec(&self) -> Result<RankSpec> {
        match (self.dmd.rank, self.dmd.energy) {
            (Some(r), None) => {
                if r == 0 {
                    Err(Error::Config("dmd.rank must be at least 1".into()))
                } else {
                    Ok(RankSpec::Fixed(r))
                }
            }
            (None, Some(e)) => {
                if e > 0.0 && e <= 1.0 {
                    Ok(RankSpec::EnergyThreshold(e))
                } else {
                    Err(Error::Config(format!(
                        "dmd.energy must lie in (0, 1], got {e}"
                    )))
                }
            }
            (None, None) => Ok(RankSpec::default()),
            (Some(_), Some(_)) => Err(Error::Config(
                "dmd.rank and dmd.energy are mutually exclusive".into(),
            )),
        }
    }

    pub fn gpr_params(&self) -> Result<GprParams> {
        let params = GprParams {
            lengthscale: self.gpr.lengthscale,
            signal_variance: self.gpr.signal_variance,
            noise_variance: self.gpr.noise_variance,
            center: true,
        };
        if !(params.lengthscale > 0.0) || !(params.signal_variance > 0.0) {
            return Err(Error::Config(
                "gpr.lengthscale and gpr.signal_variance must be positive".into(),
            ));
        }
        if !(params.noise_variance >= 0.0) {
            return Err(Error::Config("gpr.noise_variance must be non-negative".into()));
        }
        Ok(params)
    }

    pub fn surrogate_spec(&self) -> Result<SurrogateSpec> {
        let mut frozen = BTreeSet::new();
        for &idx in &self.surrogate.frozen_indices {
            if idx == 0 {
                return Err(Error::Config(
                    "surrogate.frozen_indices are 1-based; 0 is not a valid index".into(),
                ));
            }
            frozen.insert(idx - 1);
        }
        SurrogateSpec::new(
            self.surrogate.baseline,
            self.surrogate.steady_weights.clone(),
            self.surrogate.decay_baseline,
            self.surrogate.decay_weights.clone(),
            self.surrogate.transient_weights.clone(),
            self.surrogate.quadrature_weights.clone(),
            self.surrogate.tau1,
            self.surrogate.tau2,
            self.surrogate.omega,
            frozen,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn bump_basis(&self) -> Result<BumpBasis> {
        BumpBasis::new(self.geometry.bump_peaks.clone(), self.geometry.bump_exponent)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Cutoff with the focal point at the center of the unit chord.
    pub fn cutoff(&self) -> Result<CutoffConfig> {
        CutoffConfig::new([0.5, 0.0], self.geometry.r_inner, self.geometry.r_out)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }
}
