//! RBF mesh morphing: Wendland-kernel displacement interpolation with a
//! linear polynomial term, and cutoff-blended propagation to interior
//! mesh points.
//!
//! Boundary displacements prescribed at wing control points are
//! interpolated by `s(x) = sum_i beta_i * xi(||x - x_i||) + q(x)` where
//! `q` is a linear polynomial subject to the side constraint
//! `sum_i beta_i q(x_i) = 0`. Interior points move by `psi(d) * s(x)`
//! where `psi` fades from 1 inside `r_inner` of a focal point to 0 beyond
//! `r_out`, so the far field (and the pinned outer boundary) stays put.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use faer::prelude::SpSolver;
use faer::Mat;

use crate::csvio::{fmt_f64, parse_f64, split_line};
use crate::error::{Error, Result};

/// Mesh point classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Moving wall; carries prescribed displacements and hosts the RBF
    /// control points.
    Wing,
    /// Fixed outer boundary, excluded from the fit and pinned exactly.
    Outer,
    /// Everything else; displaced by the blended interpolant.
    Interior,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Wing => "wing",
            BoundaryTag::Outer => "outer",
            BoundaryTag::Interior => "interior",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wing" => Ok(BoundaryTag::Wing),
            "outer" => Ok(BoundaryTag::Outer),
            "interior" => Ok(BoundaryTag::Interior),
            other => Err(Error::Parse(format!("unknown boundary tag '{other}'"))),
        }
    }
}

/// Tagged 2-D point cloud. Wing-tagged points must be pairwise distinct
/// (they become RBF centers).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet2D {
    points: Vec<[f64; 2]>,
    tags: Vec<BoundaryTag>,
}

pub(crate) fn coord_key(p: [f64; 2]) -> (u64, u64) {
    // normalize -0.0 so numerically equal points collide
    let x = if p[0] == 0.0 { 0.0 } else { p[0] };
    let y = if p[1] == 0.0 { 0.0 } else { p[1] };
    (x.to_bits(), y.to_bits())
}

impl PointSet2D {
    pub fn new(points: Vec<[f64; 2]>, tags: Vec<BoundaryTag>) -> Result<Self> {
        if points.len() != tags.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} tags",
                points.len(),
                tags.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite point coordinates".into()));
        }
        let mut seen = HashMap::new();
        for (i, (&p, &t)) in points.iter().zip(&tags).enumerate() {
            if t == BoundaryTag::Wing {
                if let Some(j) = seen.insert(coord_key(p), i) {
                    return Err(Error::InvalidInput(format!(
                        "wing points {j} and {i} coincide at ({}, {})",
                        p[0], p[1]
                    )));
                }
            }
        }
        Ok(Self { points, tags })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of points carrying the given tag.
    pub fn tagged(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.tags[i] == tag).collect()
    }

    /// Writes `x,y,tag` rows, preserving point order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,tag")?;
        for (p, t) in self.points.iter().zip(&self.tags) {
            writeln!(w, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), t.as_str())?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mesh file".into()))??;
        if split_line(&header) != ["x", "y", "tag"] {
            return Err(Error::Parse(format!("unexpected mesh header '{header}'")));
        }
        let mut points = Vec::new();
        let mut tags = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields = split_line(&line);
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "mesh row {}: expected 3 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            points.push([parse_f64(fields[0], "x")?, parse_f64(fields[1], "y")?]);
            tags.push(BoundaryTag::parse(fields[2].trim())?);
        }
        Self::new(points, tags)
    }
}

/// Wendland C2 kernel `(1 - r/rho)^4 (4 r/rho + 1)` with compact support
/// `rho`; 1 at the origin, identically 0 for `r >= rho`.
pub fn wendland_c2(r: f64, radius: f64) -> f64 {
    debug_assert!(r >= 0.0 && radius > 0.0);
    let u = r / radius;
    if u >= 1.0 {
        return 0.0;
    }
    let a = 1.0 - u;
    let a2 = a * a;
    a2 * a2 * (4.0 * u + 1.0)
}

/// Fitted displacement interpolant: per-component kernel weights plus a
/// linear polynomial, with the prescribed center displacements retained
/// for exact lookups during morphing.
#[derive(Debug, Clone)]
pub struct RbfModel {
    centers: Vec<[f64; 2]>,
    prescribed: Vec<[f64; 2]>,
    /// beta[i] = kernel weights of center i, one per displacement component.
    beta: Vec<[f64; 2]>,
    /// delta[c] = (constant, x, y) polynomial coefficients of component c.
    delta: [[f64; 3]; 2],
    kernel_radius: f64,
}

impl RbfModel {
    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn prescribed(&self) -> &[[f64; 2]] {
        &self.prescribed
    }

    pub fn kernel_radius(&self) -> f64 {
        self.kernel_radius
    }

    /// Evaluates `s(x)` at a single query point.
    pub fn evaluate(&self, q: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (center, beta) in self.centers.iter().zip(&self.beta) {
            let r = ((q[0] - center[0]).powi(2) + (q[1] - center[1]).powi(2)).sqrt();
            let phi = wendland_c2(r, self.kernel_radius);
            if phi != 0.0 {
                out[0] += beta[0] * phi;
                out[1] += beta[1] * phi;
            }
        }
        for c in 0..2 {
            out[c] += self.delta[c][0] + self.delta[c][1] * q[0] + self.delta[c][2] * q[1];
        }
        out
    }
}

/// Solves the saddle-point system
/// `[[M, P], [P^T, 0]] [beta; delta] = [d; 0]`
/// once for both displacement components and validates the interpolation
/// conditions and the side constraint to 1e-9.
pub fn fit_rbf(
    centers: &[[f64; 2]],
    displacements: &[[f64; 2]],
    kernel_radius: f64,
) -> Result<RbfModel> {
    let nb = centers.len();
    if nb < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 control points for the linear polynomial, got {nb}"
        )));
    }
    if displacements.len() != nb {
        return Err(Error::InvalidInput(format!(
            "{nb} centers but {} displacements",
            displacements.len()
        )));
    }
    if !(kernel_radius > 0.0) {
        return Err(Error::InvalidInput("kernel radius must be positive".into()));
    }
    if centers.iter().flatten().any(|v| !v.is_finite())
        || displacements.iter().flatten().any(|v| !v.is_finite())
    {
        return Err(Error::InvalidInput("non-finite fit input".into()));
    }

    let dim = nb + 3;
    let mut a = Mat::<f64>::zeros(dim, dim);
    for i in 0..nb {
        for j in 0..nb {
            let r = ((centers[i][0] - centers[j][0]).powi(2)
                + (centers[i][1] - centers[j][1]).powi(2))
            .sqrt();
            a[(i, j)] = wendland_c2(r, kernel_radius);
        }
        a[(i, nb)] = 1.0;
        a[(i, nb + 1)] = centers[i][0];
        a[(i, nb + 2)] = centers[i][1];
        a[(nb, i)] = 1.0;
        a[(nb + 1, i)] = centers[i][0];
        a[(nb + 2, i)] = centers[i][1];
    }

    let mut rhs = Mat::<f64>::zeros(dim, 2);
    for i in 0..nb {
        rhs[(i, 0)] = displacements[i][0];
        rhs[(i, 1)] = displacements[i][1];
    }

    let lu = a.as_ref().partial_piv_lu();
    let sol = lu.solve(&rhs);
    if (0..dim).any(|i| !sol[(i, 0)].is_finite() || !sol[(i, 1)].is_finite()) {
        return Err(Error::Fit(format!(
            "singular RBF system (estimated condition number {:.3e}); \
             coincident or collinear control points?",
            condition_estimate(&lu)
        )));
    }

    let beta: Vec<[f64; 2]> = (0..nb).map(|i| [sol[(i, 0)], sol[(i, 1)]]).collect();
    let delta = [
        [sol[(nb, 0)], sol[(nb + 1, 0)], sol[(nb + 2, 0)]],
        [sol[(nb, 1)], sol[(nb + 1, 1)], sol[(nb + 2, 1)]],
    ];
    let model = RbfModel {
        centers: centers.to_vec(),
        prescribed: displacements.to_vec(),
        beta,
        delta,
        kernel_radius,
    };

    // interpolation conditions
    let mut interp_residual: f64 = 0.0;
    for (center, d) in centers.iter().zip(displacements) {
        let s = model.evaluate(*center);
        interp_residual = interp_residual
            .max((s[0] - d[0]).abs())
            .max((s[1] - d[1]).abs());
    }
    // side constraint sum_i beta_i q(x_i) = 0 for q in {1, x, y}
    let mut side_residual: f64 = 0.0;
    for c in 0..2 {
        let mut sums = [0.0; 3];
        for (center, beta) in centers.iter().zip(&model.beta) {
            sums[0] += beta[c];
            sums[1] += beta[c] * center[0];
            sums[2] += beta[c] * center[1];
        }
        for s in sums {
            side_residual = side_residual.max(s.abs());
        }
    }
    if interp_residual >= 1e-9 || side_residual >= 1e-9 {
        return Err(Error::Fit(format!(
            "ill-conditioned RBF system: interpolation residual {interp_residual:.3e}, \
             side-constraint residual {side_residual:.3e} \
             (estimated condition number {:.3e})",
            condition_estimate(&lu)
        )));
    }
    Ok(model)
}

/// Cheap condition proxy: ratio of extreme |U_ii| from the LU factors.
fn condition_estimate(lu: &faer::solvers::PartialPivLu<f64>) -> f64 {
    let u = lu.compute_u();
    let n = u.nrows();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..n {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Evaluates the interpolant at every point of `queries` (tags ignored).
pub fn evaluate_rbf(model: &RbfModel, queries: &PointSet2D) -> Vec<[f64; 2]> {
    queries.points().iter().map(|&p| model.evaluate(p)).collect()
}

/// Focal-point cutoff: full RBF displacement inside `r_inner`, zero
/// beyond `r_out`, C1 smoothstep in between.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffConfig {
    pub focal_point: [f64; 2],
    pub r_inner: f64,
    pub r_out: f64,
}

impl CutoffConfig {
    pub fn new(focal_point: [f64; 2], r_inner: f64, r_out: f64) -> Result<Self> {
        if !(0.0 < r_inner && r_inner < r_out) {
            return Err(Error::InvalidInput(format!(
                "cutoff radii must satisfy 0 < r_inner < r_out (got {r_inner}, {r_out})"
            )));
        }
        Ok(Self {
            focal_point,
            r_inner,
            r_out,
        })
    }

    /// Blend factor at distance `t` from the focal point.
    pub fn blend(&self, t: f64) -> f64 {
        if t <= self.r_inner {
            1.0
        } else if t >= self.r_out {
            0.0
        } else {
            let u = (t - self.r_inner) / (self.r_out - self.r_inner);
            1.0 - u * u * (3.0 - 2.0 * u)
        }
    }
}

/// Moves the mesh: wing points receive their prescribed displacement
/// exactly, outer points are pinned, interior points move by the blended
/// interpolant. Point order and tags are preserved.
pub fn morph_mesh(mesh: &PointSet2D, model: &RbfModel, cutoff: &CutoffConfig) -> Result<PointSet2D> {
    let mut center_index: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, &c) in model.centers().iter().enumerate() {
        center_index.insert(coord_key(c), i);
    }

    let mut points = Vec::with_capacity(mesh.len());
    for (&p, &tag) in mesh.points().iter().zip(mesh.tags()) {
        let moved = match tag {
            BoundaryTag::Outer => p,
            BoundaryTag::Wing => {
                let dist = ((p[0] - cutoff.focal_point[0]).powi(2)
                    + (p[1] - cutoff.focal_point[1]).powi(2))
                .sqrt();
                if dist > cutoff.r_inner {
                    return Err(Error::InvalidInput(format!(
                        "wing point ({}, {}) lies {dist} m from the focal point, outside \
                         r_inner = {}; the cutoff would corrupt the prescribed displacement",
                        p[0], p[1], cutoff.r_inner
                    )));
                }
                let d = match center_index.get(&coord_key(p)) {
                    Some(&i) => model.prescribed()[i],
                    None => model.evaluate(p),
                };
                [p[0] + d[0], p[1] + d[1]]
            }
            BoundaryTag::Interior => {
                let dist = ((p[0] - cutoff.focal_point[0]).powi(2)
                    + (p[1] - cutoff.focal_point[1]).powi(2))
                .sqrt();
                let psi = cutoff.blend(dist);
                if psi == 0.0 {
                    p
                } else {
                    let s = model.evaluate(p);
                    [p[0] + psi * s[0], p[1] + psi * s[1]]
                }
            }
        };
        points.push(moved);
    }
    PointSet2D::new(points, mesh.tags().to_vec())
}
