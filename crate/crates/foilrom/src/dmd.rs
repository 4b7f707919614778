//! Dynamic mode decomposition of snapshot ensembles.
//!
//! Snapshots of a scalar quantity, collected over equispaced instants for
//! a set of parameter samples, are stacked as columns `x_1 .. x_m`
//! (state dimension = number of samples). A best-fit linear operator
//! `x_{k+1} = A x_k` is identified through a truncated SVD of the first
//! snapshot block: the reduced operator is `A~ = U* Y V S^-1`, its
//! eigenpairs give the spectrum, and the exact modes `Phi = Y V S^-1 W`
//! let the state be forecast at any later time as
//! `x(t) = Re( Phi diag(lambda^((t - t0)/dt)) b )`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::complex_native::c64;
use faer::prelude::SpSolverLstsq;
use faer::solvers::Eigendecomposition;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::csvio::{fmt_f64, parse_f64, split_line};
use crate::error::{Error, Result};

/// Ns x m matrix of scalar outputs: one row per parameter sample, one
/// column per time instant. Instants are implicit (`t0 + j * dt`) so the
/// grid is equispaced by construction.
#[derive(Debug, Clone)]
pub struct SnapshotEnsemble {
    values: Mat<f64>,
    t0: f64,
    dt: f64,
    sample_ids: Vec<String>,
}

impl SnapshotEnsemble {
    /// Builds an ensemble from per-sample rows. When `sample_ids` is
    /// `None`, samples are labeled `s1, s2, ...`.
    pub fn new(
        rows: Vec<Vec<f64>>,
        t0: f64,
        dt: f64,
        sample_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("ensemble needs at least one sample".into()));
        }
        let m = rows[0].len();
        if m < 2 {
            return Err(Error::InvalidInput(
                "ensemble needs at least two time instants".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("ragged ensemble rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("ensemble contains non-finite values".into()));
        }
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "invalid time metadata: t0 = {t0}, dt = {dt}"
            )));
        }
        let ns = rows.len();
        let ids = match sample_ids {
            Some(ids) => {
                if ids.len() != ns {
                    return Err(Error::InvalidInput(format!(
                        "{ns} samples but {} ids",
                        ids.len()
                    )));
                }
                ids
            }
            None => (1..=ns).map(|i| format!("s{i}")).collect(),
        };
        let values = Mat::from_fn(ns, m, |i, j| rows[i][j]);
        Ok(Self {
            values,
            t0,
            dt,
            sample_ids: ids,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_instants(&self) -> usize {
        self.values.ncols()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn values(&self) -> faer::MatRef<'_, f64> {
        self.values.as_ref()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_instants())
            .map(|j| self.t0 + j as f64 * self.dt)
            .collect()
    }

    /// The snapshot (state vector across samples) at instant `j`.
    pub fn snapshot(&self, j: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|i| self.values[(i, j)]).collect()
    }

    /// Writes `t,<id_1>,...,<id_Ns>` with one row per instant.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for id in &self.sample_ids {
            write!(w, ",{id}")?;
        }
        writeln!(w)?;
        for j in 0..self.n_instants() {
            write!(w, "{}", fmt_f64(self.t0 + j as f64 * self.dt))?;
            for i in 0..self.n_samples() {
                write!(w, ",{}", fmt_f64(self.values[(i, j)]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the transposed CSV layout written by [`write_csv`]. The time
    /// column must be equispaced; a relative tolerance of 1e-6 * dt
    /// absorbs the round-trip rounding of instants much larger than dt.
    ///
    /// [`write_csv`]: SnapshotEnsemble::write_csv
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty ensemble file".into()))??;
        let fields = split_line(&header);
        if fields.first() != Some(&"t") || fields.len() < 2 {
            return Err(Error::Parse(format!(
                "ensemble header must be 't,<id>,...', got '{header}'"
            )));
        }
        let ids: Vec<String> = fields[1..].iter().map(|s| s.to_string()).collect();
        let ns = ids.len();

        let mut times = Vec::new();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields = split_line(&line);
            if fields.len() != ns + 1 {
                return Err(Error::Parse(format!(
                    "ensemble row {}: expected {} fields, got {}",
                    row + 2,
                    ns + 1,
                    fields.len()
                )));
            }
            times.push(parse_f64(fields[0], "t")?);
            columns.push(
                fields[1..]
                    .iter()
                    .map(|f| parse_f64(f, "value"))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        let m = times.len();
        if m < 2 {
            return Err(Error::InvalidInput(
                "ensemble needs at least two time instants".into(),
            ));
        }
        let t0 = times[0];
        let dt = (times[m - 1] - t0) / (m - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("time column must be increasing".into()));
        }
        for (j, &t) in times.iter().enumerate() {
            if (t - (t0 + j as f64 * dt)).abs() > 1e-6 * dt {
                return Err(Error::InvalidInput(format!(
                    "time column is not equispaced at row {} (t = {t})",
                    j + 2
                )));
            }
        }
        let mut rows = vec![vec![0.0; m]; ns];
        for (j, col) in columns.iter().enumerate() {
            for i in 0..ns {
                rows[i][j] = col[i];
            }
        }
        Self::new(rows, t0, dt, Some(ids))
    }
}

/// Truncation rule for the SVD projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSpec {
    /// Keep exactly this many modes (capped at the numerical rank).
    Fixed(usize),
    /// Keep the smallest rank whose cumulative squared singular values
    /// reach this fraction of the total energy.
    EnergyThreshold(f64),
}

impl Default for RankSpec {
    fn default() -> Self {
        RankSpec::EnergyThreshold(1.0 - 1e-6)
    }
}

/// Picks the truncation rank from a descending singular-value list.
/// Singular values below `eps * sigma_1 * guard_dim` are treated as zero
/// (numerical rank), which guards the later inversion of the singular
/// values. `guard_dim` should be the larger matrix dimension.
pub fn select_rank(singular_values: &[f64], spec: &RankSpec, guard_dim: usize) -> Result<usize> {
    if singular_values.is_empty() || !(singular_values[0] > 0.0) {
        return Err(Error::Numerical(
            "degenerate data: all singular values are zero".into(),
        ));
    }
    let cutoff = f64::EPSILON * singular_values[0] * guard_dim.max(1) as f64;
    let numerical_rank = singular_values.iter().take_while(|&&s| s > cutoff).count();
    match *spec {
        RankSpec::Fixed(r) => {
            if r == 0 {
                return Err(Error::InvalidInput("fixed rank must be at least 1".into()));
            }
            Ok(r.min(numerical_rank))
        }
        RankSpec::EnergyThreshold(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "energy threshold must lie in (0, 1], got {e}"
                )));
            }
            let total: f64 = singular_values.iter().map(|s| s * s).sum();
            let mut cum = 0.0;
            for (i, s) in singular_values.iter().enumerate() {
                cum += s * s;
                if cum / total >= e {
                    return Ok((i + 1).min(numerical_rank).max(1));
                }
            }
            Ok(numerical_rank.max(1))
        }
    }
}

/// Splits the ensemble into the shifted snapshot blocks
/// `X = [x_1 .. x_{m-1}]` and `Y = [x_2 .. x_m]`.
pub fn build_snapshot_matrices(ens: &SnapshotEnsemble) -> (Mat<f64>, Mat<f64>) {
    let ns = ens.n_samples();
    let m = ens.n_instants();
    let x = Mat::from_fn(ns, m - 1, |i, j| ens.values[(i, j)]);
    let y = Mat::from_fn(ns, m - 1, |i, j| ens.values[(i, j + 1)]);
    (x, y)
}

/// Fitted decomposition: spectrum, exact modes, and amplitudes, with the
/// time metadata needed to forecast.
#[derive(Debug, Clone)]
pub struct DmdModel {
    rank: usize,
    eigenvalues: Vec<c64>,
    /// Exact modes, Ns x rank.
    modes: Mat<c64>,
    amplitudes: Vec<c64>,
    dt: f64,
    t0: f64,
}

impl DmdModel {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn modes(&self) -> faer::MatRef<'_, c64> {
        self.modes.as_ref()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn state_dim(&self) -> usize {
        self.modes.nrows()
    }
}

/// Fits the decomposition on an ensemble.
pub fn fit_dmd(ens: &SnapshotEnsemble, spec: &RankSpec) -> Result<DmdModel> {
    let ns = ens.n_samples();
    let m = ens.n_instants();
    let (x, y) = build_snapshot_matrices(ens);

    let svd = x.as_ref().thin_svd();
    let s = svd.s_diagonal();
    let singular_values: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    let rank = select_rank(&singular_values, spec, ns.max(m))?;

    // B = Y V_r S_r^-1; reused for both the reduced operator and the modes
    let mut v_scaled = Mat::<f64>::zeros(m - 1, rank);
    for j in 0..rank {
        let inv = 1.0 / singular_values[j];
        for i in 0..m - 1 {
            v_scaled[(i, j)] = svd.v()[(i, j)] * inv;
        }
    }
    let b_op = &y * &v_scaled; // Ns x r
    let u_r = svd.u().submatrix(0, 0, ns, rank);
    let a_tilde = u_r.transpose() * &b_op; // r x r

    let evd: Eigendecomposition<c64> = a_tilde.as_ref().eigendecomposition();
    let lam = evd.s().column_vector();
    let eigenvalues: Vec<c64> = (0..rank).map(|i| lam[i]).collect();
    let w = evd.u(); // r x r complex eigenvectors

    let b_complex = Mat::<c64>::from_fn(ns, rank, |i, j| c64::new(b_op[(i, j)], 0.0));
    let modes = &b_complex * w; // exact modes, Ns x r

    // amplitudes from the first snapshot, least squares
    let x1 = Mat::<c64>::from_fn(ns, 1, |i, _| c64::new(x[(i, 0)], 0.0));
    let amp = modes.as_ref().qr().solve_lstsq(&x1);
    let amplitudes: Vec<c64> = (0..rank).map(|i| amp[(i, 0)]).collect();

    Ok(DmdModel {
        rank,
        eigenvalues,
        modes,
        amplitudes,
        dt: ens.dt,
        t0: ens.t0,
    })
}

/// Principal-branch complex power `lambda^j` for real exponents; integer
/// exponents reduce to the usual power. `0^0 = 1`, `0^j = 0` for j > 0.
fn complex_pow(lambda: c64, j: f64) -> c64 {
    if lambda.re == 0.0 && lambda.im == 0.0 {
        return if j == 0.0 {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        };
    }
    let modulus = lambda.re.hypot(lambda.im);
    let arg = lambda.im.atan2(lambda.re);
    let scale = (j * modulus.ln()).exp();
    c64::new(scale * (j * arg).cos(), scale * (j * arg).sin())
}

/// Forecasts the state at time `t >= t0`. The exponent `(t - t0)/dt` need
/// not be an integer; powers use the principal logarithm, so integer
/// steps reduce to the plain eigenvalue powers.
pub fn forecast(model: &DmdModel, t: f64) -> Result<Vec<f64>> {
    let tol = 1e-9 * model.dt.max(model.t0.abs() * 1e-3);
    if t < model.t0 - tol {
        return Err(Error::InvalidInput(format!(
            "forecast time {t} precedes the training start {}; backward extrapolation \
             is not offered",
            model.t0
        )));
    }
    let j = ((t - model.t0) / model.dt).max(0.0);

    let weights: Vec<c64> = model
        .eigenvalues
        .iter()
        .zip(&model.amplitudes)
        .map(|(&lam, &b)| {
            let p = complex_pow(lam, j);
            c64::new(p.re * b.re - p.im * b.im, p.re * b.im + p.im * b.re)
        })
        .collect();

    let ns = model.state_dim();
    let mut out = Vec::with_capacity(ns);
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for i in 0..ns {
        let mut acc = c64::new(0.0, 0.0);
        for (k, &wk) in weights.iter().enumerate() {
            let phi = model.modes[(i, k)];
            acc.re += phi.re * wk.re - phi.im * wk.im;
            acc.im += phi.re * wk.im + phi.im * wk.re;
        }
        max_re = max_re.max(acc.re.abs());
        max_im = max_im.max(acc.im.abs());
        out.push(acc.re);
    }
    if max_im > 1e-8 * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "forecast at t = {t} is not real: imaginary residual {max_im:.3e} vs \
             real magnitude {max_re:.3e}"
        )));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct DmdModelFile {
    rank: usize,
    dt: f64,
    t0: f64,
    eigenvalues: Vec<(f64, f64)>,
    /// Row-major: modes[i][k] = (re, im) of mode k at sample i.
    modes: Vec<Vec<(f64, f64)>>,
    amplitudes: Vec<(f64, f64)>,
}

impl DmdModel {
    pub fn to_json(&self) -> String {
        let file = DmdModelFile {
            rank: self.rank,
            dt: self.dt,
            t0: self.t0,
            eigenvalues: self.eigenvalues.iter().map(|l| (l.re, l.im)).collect(),
            modes: (0..self.modes.nrows())
                .map(|i| {
                    (0..self.rank)
                        .map(|k| (self.modes[(i, k)].re, self.modes[(i, k)].im))
                        .collect()
                })
                .collect(),
            amplitudes: self.amplitudes.iter().map(|b| (b.re, b.im)).collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DmdModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
        if file.rank == 0
            || file.eigenvalues.len() != file.rank
            || file.amplitudes.len() != file.rank
            || file.modes.is_empty()
            || file.modes.iter().any(|row| row.len() != file.rank)
        {
            return Err(Error::InvalidInput("inconsistent model dimensions".into()));
        }
        if !(file.dt > 0.0 && file.dt.is_finite() && file.t0.is_finite()) {
            return Err(Error::InvalidInput("invalid model time metadata".into()));
        }
        let ns = file.modes.len();
        let modes = Mat::<c64>::from_fn(ns, file.rank, |i, k| {
            c64::new(file.modes[i][k].0, file.modes[i][k].1)
        });
        Ok(DmdModel {
            rank: file.rank,
            eigenvalues: file
                .eigenvalues
                .iter()
                .map(|&(re, im)| c64::new(re, im))
                .collect(),
            modes,
            amplitudes: file
                .amplitudes
                .iter()
                .map(|&(re, im)| c64::new(re, im))
                .collect(),
            dt: file.dt,
            t0: file.t0,
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
