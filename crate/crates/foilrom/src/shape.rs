//! Airfoil geometry: NACA 4-digit sections and Hicks-Henne bump
//! deformations.
//!
//! The reference section is the classical 4-digit family sampled on
//! cosine-spaced chord stations. Deformations add weighted sine-power
//! bumps to the upper surface ordinates and subtract them from the lower
//! surface ordinates, so a parameter vector `(c_1..c_n, d_1..d_n)` in a
//! box domain spans a family of thickened/cambered sections around the
//! reference.

use std::io::{BufRead, BufReader, Read, Write};

use crate::csvio::{fmt_f64, parse_f64, split_line};
use crate::error::{Error, Result};

/// Discrete wing section: upper/lower ordinates on shared chordwise
/// stations, all in chord fractions.
///
/// Invariants (enforced by [`AirfoilProfile::new`]): stations strictly
/// increasing from 0 to 1, ordinate arrays as long as the station array,
/// and `y_upper >= y_lower` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct AirfoilProfile {
    stations: Vec<f64>,
    y_upper: Vec<f64>,
    y_lower: Vec<f64>,
}

impl AirfoilProfile {
    pub fn new(stations: Vec<f64>, y_upper: Vec<f64>, y_lower: Vec<f64>) -> Result<Self> {
        if stations.len() != y_upper.len() || stations.len() != y_lower.len() {
            return Err(Error::InvalidInput(format!(
                "profile arrays disagree in length: {} stations, {} upper, {} lower",
                stations.len(),
                y_upper.len(),
                y_lower.len()
            )));
        }
        if stations.len() < 2 {
            return Err(Error::InvalidInput(
                "a profile needs at least two stations".into(),
            ));
        }
        if stations[0] != 0.0 || *stations.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput(
                "stations must start at 0 and end at 1".into(),
            ));
        }
        if stations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "stations must be strictly increasing".into(),
            ));
        }
        for i in 0..stations.len() {
            if !stations[i].is_finite() || !y_upper[i].is_finite() || !y_lower[i].is_finite() {
                return Err(Error::InvalidInput("profile contains non-finite values".into()));
            }
            if y_upper[i] < y_lower[i] {
                return Err(Error::Geometry(format!(
                    "section self-intersects at station {} (x = {}): y_upper = {} < y_lower = {}",
                    i, stations[i], y_upper[i], y_lower[i]
                )));
            }
        }
        Ok(Self {
            stations,
            y_upper,
            y_lower,
        })
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn y_upper(&self) -> &[f64] {
        &self.y_upper
    }

    pub fn y_lower(&self) -> &[f64] {
        &self.y_lower
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    /// Thickness distribution `y_upper - y_lower`.
    pub fn thickness(&self) -> Vec<f64> {
        self.y_upper
            .iter()
            .zip(&self.y_lower)
            .map(|(u, l)| u - l)
            .collect()
    }

    /// Mean line `(y_upper + y_lower) / 2`.
    pub fn camber(&self) -> Vec<f64> {
        self.y_upper
            .iter()
            .zip(&self.y_lower)
            .map(|(u, l)| 0.5 * (u + l))
            .collect()
    }

    /// True when `(x, y)` lies strictly inside the section. Ordinates are
    /// interpolated linearly between stations.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        if x <= 0.0 || x >= 1.0 {
            return false;
        }
        let i = match self
            .stations
            .binary_search_by(|s| s.partial_cmp(&x).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let i = i.min(self.stations.len() - 2);
        let t = (x - self.stations[i]) / (self.stations[i + 1] - self.stations[i]);
        let yu = self.y_upper[i] + t * (self.y_upper[i + 1] - self.y_upper[i]);
        let yl = self.y_lower[i] + t * (self.y_lower[i + 1] - self.y_lower[i]);
        y > yl && y < yu
    }

    /// Writes `station,y_upper,y_lower` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "station,y_upper,y_lower")?;
        for i in 0..self.stations.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(self.stations[i]),
                fmt_f64(self.y_upper[i]),
                fmt_f64(self.y_lower[i])
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty profile file".into()))??;
        if split_line(&header) != ["station", "y_upper", "y_lower"] {
            return Err(Error::Parse(format!(
                "unexpected profile header '{header}'"
            )));
        }
        let (mut stations, mut y_upper, mut y_lower) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields = split_line(&line);
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "profile row {}: expected 3 fields, got {}",
                    i + 2,
                    fields.len()
                )));
            }
            stations.push(parse_f64(fields[0], "station")?);
            y_upper.push(parse_f64(fields[1], "y_upper")?);
            y_lower.push(parse_f64(fields[2], "y_lower")?);
        }
        Self::new(stations, y_upper, y_lower)
    }
}

/// Shape-deformation weights. By convention the first half of the entries
/// are the upper-surface weights `c_i` and the second half the
/// lower-surface weights `d_i`; the reference configuration has k = 10.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            values: vec![0.0; k],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Upper-surface weights (first half).
    pub fn upper_weights(&self) -> &[f64] {
        &self.values[..self.values.len() / 2]
    }

    /// Lower-surface weights (second half).
    pub fn lower_weights(&self) -> &[f64] {
        &self.values[self.values.len() / 2..]
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Hicks-Henne bump family `r_i(x) = sin^e(pi * x^(ln 0.5 / ln p_i))`.
///
/// Each bump vanishes at both chord ends and peaks at exactly 1 at its
/// own peak location `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpBasis {
    peaks: Vec<f64>,
    exponent: f64,
}

impl BumpBasis {
    pub fn new(peaks: Vec<f64>, exponent: f64) -> Result<Self> {
        if peaks.is_empty() {
            return Err(Error::InvalidInput("bump basis needs at least one peak".into()));
        }
        if peaks.iter().any(|&p| p <= 0.0 || p >= 1.0) {
            return Err(Error::InvalidInput(
                "bump peaks must lie strictly inside (0, 1)".into(),
            ));
        }
        if peaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "bump peaks must be strictly increasing".into(),
            ));
        }
        if !(exponent > 0.0) {
            return Err(Error::InvalidInput("bump exponent must be positive".into()));
        }
        Ok(Self { peaks, exponent })
    }

    pub fn peaks(&self) -> &[f64] {
        &self.peaks
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Number of bumps per surface.
    pub fn count(&self) -> usize {
        self.peaks.len()
    }

    /// Evaluates bump `i` (0-based) at chord fraction `x`. Values lie in
    /// [0, 1]; both chord ends map to exactly 0.
    pub fn value(&self, i: usize, x: f64) -> Result<f64> {
        if i >= self.peaks.len() {
            return Err(Error::InvalidInput(format!(
                "bump index {} out of range (basis has {})",
                i,
                self.peaks.len()
            )));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidInput(format!(
                "bump abscissa {x} outside [0, 1]"
            )));
        }
        // sin(pi * 1^m) is ~1e-16 rather than 0 in floats; pin the ends.
        if x == 0.0 || x == 1.0 {
            return Ok(0.0);
        }
        let m = 0.5f64.ln() / self.peaks[i].ln();
        Ok((std::f64::consts::PI * x.powf(m)).sin().powf(self.exponent))
    }
}

impl Default for BumpBasis {
    /// Five bumps peaking at {0.1, 0.3, 0.5, 0.7, 0.9} with exponent 3.
    fn default() -> Self {
        Self {
            peaks: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            exponent: 3.0,
        }
    }
}

/// Builds the standard NACA 4-digit section on `n_points` cosine-spaced
/// stations. With `closed_te` the thickness polynomial uses the closed
/// trailing-edge coefficient and the thickness at x = 1 is exactly zero.
pub fn naca4_profile(code: &str, n_points: usize, closed_te: bool) -> Result<AirfoilProfile> {
    let digits: Vec<u32> = code.chars().filter_map(|c| c.to_digit(10)).collect();
    if code.len() != 4 || digits.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "NACA code '{code}' is not 4 decimal digits"
        )));
    }
    if n_points < 3 {
        return Err(Error::InvalidInput(
            "need at least 3 stations per surface".into(),
        ));
    }
    let max_camber = digits[0] as f64 / 100.0;
    let camber_pos = digits[1] as f64 / 10.0;
    let thickness = (digits[2] * 10 + digits[3]) as f64 / 100.0;
    if max_camber > 0.0 && camber_pos == 0.0 {
        return Err(Error::InvalidInput(format!(
            "NACA code '{code}': cambered section needs a nonzero position digit"
        )));
    }

    let mut stations = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let theta = std::f64::consts::PI * i as f64 / (n_points - 1) as f64;
        stations.push(0.5 * (1.0 - theta.cos()));
    }
    stations[0] = 0.0;
    stations[n_points - 1] = 1.0;

    let mut y_upper = Vec::with_capacity(n_points);
    let mut y_lower = Vec::with_capacity(n_points);
    for &x in &stations {
        let yt = half_thickness(x, thickness, closed_te);
        let yc = camber_ordinate(x, max_camber, camber_pos);
        y_upper.push(yc + yt);
        y_lower.push(yc - yt);
    }
    AirfoilProfile::new(stations, y_upper, y_lower)
}

/// Standard 4-digit half-thickness polynomial. The x^4 coefficient is
/// -0.1015 for the open trailing edge and -0.1036 for the closed one.
fn half_thickness(x: f64, t: f64, closed_te: bool) -> f64 {
    if closed_te && x == 1.0 {
        return 0.0;
    }
    let c4 = if closed_te { -0.1036 } else { -0.1015 };
    5.0 * t * (0.2969 * x.sqrt() + x * (-0.1260 + x * (-0.3516 + x * (0.2843 + x * c4))))
}

/// 4-digit mean camber line (two parabolic arcs joined at the position of
/// maximum camber).
fn camber_ordinate(x: f64, m: f64, p: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    if x < p {
        m / (p * p) * (2.0 * p * x - x * x)
    } else {
        m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x)
    }
}

/// Applies the bump deformation: `y_u = y_u_ref + sum c_i r_i`,
/// `y_l = y_l_ref - sum d_i r_i`, stations unchanged.
///
/// The first `basis.count()` entries of `mu` are the upper weights, the
/// rest the lower weights. Fails with a geometry error if the deformed
/// surfaces cross.
pub fn deform_profile(
    reference: &AirfoilProfile,
    mu: &ParameterVector,
    basis: &BumpBasis,
) -> Result<AirfoilProfile> {
    let nb = basis.count();
    if mu.len() != 2 * nb {
        return Err(Error::InvalidInput(format!(
            "parameter vector has {} entries, expected {} (two weights per bump)",
            mu.len(),
            2 * nb
        )));
    }
    let upper_w = mu.upper_weights();
    let lower_w = mu.lower_weights();

    let mut y_upper = Vec::with_capacity(reference.n_stations());
    let mut y_lower = Vec::with_capacity(reference.n_stations());
    for (i, &x) in reference.stations().iter().enumerate() {
        let mut du = 0.0;
        let mut dl = 0.0;
        for b in 0..nb {
            let r = basis.value(b, x)?;
            du += upper_w[b] * r;
            dl += lower_w[b] * r;
        }
        let yu = reference.y_upper()[i] + du;
        let yl = reference.y_lower()[i] - dl;
        if yu < yl {
            return Err(Error::Geometry(format!(
                "deformation too large: surfaces cross at x = {x} (y_upper = {yu}, y_lower = {yl})"
            )));
        }
        y_upper.push(yu);
        y_lower.push(yl);
    }
    Ok(AirfoilProfile {
        stations: reference.stations().to_vec(),
        y_upper,
        y_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn naca_4412_encoding() {
        let p = naca4_profile("4412", 400, false).unwrap();
        // max camber 0.04 at 0.4 chord, max thickness 0.12
        let camber = p.camber();
        let (imax, &cmax) = camber
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert!((cmax - 0.04).abs() < 1e-4, "cmax = {cmax}");
        assert!((p.stations()[imax] - 0.4).abs() < 0.01);
        let tmax = p
            .thickness()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((tmax - 0.12).abs() < 2e-3, "tmax = {tmax}");
    }

    #[test]
    fn naca_0012_symmetric() {
        let p = naca4_profile("0012", 200, false).unwrap();
        for i in 0..p.n_stations() {
            assert_eq!(p.y_lower()[i], -p.y_upper()[i]);
        }
    }

    #[test]
    fn closed_te_thickness_matches_polynomial_at_030() {
        // Independent hand evaluation of the closed-TE thickness
        // polynomial at x = 0.3 for t = 0.12.
        let x: f64 = 0.3;
        let expected = 5.0
            * 0.12
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x
                - 0.1036 * x * x * x * x);
        let p = naca4_profile("0012", 2001, true).unwrap();
        // station grid contains no exact 0.3; evaluate the internal
        // polynomial directly instead
        let got = half_thickness(0.3, 0.12, true);
        assert!((got - expected).abs() < 1e-15);
        // and the sampled profile stays close to it near x = 0.3
        let i = p
            .stations()
            .iter()
            .position(|&s| s >= 0.3)
            .unwrap();
        assert!((p.y_upper()[i] - expected).abs() < 1e-3);
    }

    #[test]
    fn closed_te_is_exactly_zero_at_one() {
        let p = naca4_profile("0012", 50, true).unwrap();
        assert_eq!(p.y_upper()[49], 0.0);
        assert_eq!(p.y_lower()[49], 0.0);
    }

    #[test]
    fn malformed_codes_rejected() {
        assert!(naca4_profile("44a2", 50, false).is_err());
        assert!(naca4_profile("441", 50, false).is_err());
        assert!(naca4_profile("44123", 50, false).is_err());
        assert!(naca4_profile("4412", 2, false).is_err());
        // nonzero camber with zero position digit is degenerate
        assert!(naca4_profile("1012", 50, false).is_err());
    }

    #[test]
    fn bumps_vanish_at_chord_ends_and_peak_at_one() {
        let basis = BumpBasis::default();
        for i in 0..basis.count() {
            assert_eq!(basis.value(i, 0.0).unwrap(), 0.0);
            assert_eq!(basis.value(i, 1.0).unwrap(), 0.0);
            let at_peak = basis.value(i, basis.peaks()[i]).unwrap();
            assert!((at_peak - 1.0).abs() < 1e-12, "peak {i}: {at_peak}");
        }
        assert!(basis.value(5, 0.2).is_err());
        assert!(basis.value(0, 1.5).is_err());
    }

    #[test]
    fn bump_closed_form_at_quarter_chord() {
        // peak 0.5 makes the exponent ln(0.5)/ln(0.5) = 1, so
        // r_3(0.25) = sin^3(pi/4) exactly.
        let basis = BumpBasis::default();
        let expected = std::f64::consts::FRAC_PI_4.sin().powi(3);
        let got = basis.value(2, 0.25).unwrap();
        assert!((got - expected).abs() < 1e-12, "got {got}, want {expected}");
    }

    #[test]
    fn zero_deformation_is_identity() {
        let reference = naca4_profile("4412", 200, false).unwrap();
        let mu = ParameterVector::zeros(10);
        let out = deform_profile(&reference, &mu, &BumpBasis::default()).unwrap();
        assert_eq!(out, reference);
    }

    #[test]
    fn equal_weights_preserve_symmetry() {
        let reference = naca4_profile("0012", 150, false).unwrap();
        let w = vec![0.01, 0.02, 0.03, 0.02, 0.01];
        let mu = ParameterVector::new([w.clone(), w].concat());
        let out = deform_profile(&reference, &mu, &BumpBasis::default()).unwrap();
        for i in 0..out.n_stations() {
            assert!(
                (out.y_lower()[i] + out.y_upper()[i]).abs() < 1e-12,
                "asymmetry at station {i}"
            );
        }
    }

    #[test]
    fn domain_corner_stays_valid() {
        let reference = naca4_profile("4412", 200, false).unwrap();
        let mu = ParameterVector::new(vec![0.03; 10]);
        let out = deform_profile(&reference, &mu, &BumpBasis::default()).unwrap();
        for i in 0..out.n_stations() {
            assert!(out.y_upper()[i] >= out.y_lower()[i]);
        }
    }

    #[test]
    fn wrong_parameter_count_rejected() {
        let reference = naca4_profile("0012", 50, false).unwrap();
        let mu = ParameterVector::zeros(7);
        assert!(deform_profile(&reference, &mu, &BumpBasis::default()).is_err());
    }

    #[test]
    fn crossing_surfaces_are_a_geometry_error() {
        let reference = naca4_profile("0012", 80, false).unwrap();
        // strongly negative lower weights pull the lower surface up
        // through the upper one at mid chord
        let mu = ParameterVector::new(vec![
            0.0, 0.0, 0.0, 0.0, 0.0, -0.2, -0.2, -0.2, -0.2, -0.2,
        ]);
        let err = deform_profile(&reference, &mu, &BumpBasis::default()).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let p = naca4_profile("4412", 64, true).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = AirfoilProfile::read_csv(&buf[..]).unwrap();
        assert_eq!(p, q);
        // writing the reloaded profile reproduces the bytes
        let mut buf2 = Vec::new();
        q.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn contains_basic() {
        let p = naca4_profile("0012", 200, false).unwrap();
        assert!(p.contains(0.3, 0.0));
        assert!(!p.contains(0.3, 0.2));
        assert!(!p.contains(-0.1, 0.0));
        assert!(!p.contains(1.1, 0.0));
    }

    proptest! {
        /// Deformation is linear in the weights.
        #[test]
        fn deformation_linear_in_mu(
            w1 in proptest::collection::vec(0.0..0.01f64, 10),
            w2 in proptest::collection::vec(0.0..0.01f64, 10),
            alpha in 0.0..1.0f64,
            beta in 0.0..1.0f64,
        ) {
            let reference = naca4_profile("4412", 60, false).unwrap();
            let basis = BumpBasis::default();
            let combo: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| alpha * a + beta * b).collect();
            let d_combo = deform_profile(&reference, &combo.clone().into(), &basis).unwrap();
            let d1 = deform_profile(&reference, &w1.clone().into(), &basis).unwrap();
            let d2 = deform_profile(&reference, &w2.clone().into(), &basis).unwrap();
            for i in 0..reference.n_stations() {
                let lhs_u = d_combo.y_upper()[i] - reference.y_upper()[i];
                let rhs_u = alpha * (d1.y_upper()[i] - reference.y_upper()[i])
                    + beta * (d2.y_upper()[i] - reference.y_upper()[i]);
                prop_assert!((lhs_u - rhs_u).abs() < 1e-12);
                let lhs_l = d_combo.y_lower()[i] - reference.y_lower()[i];
                let rhs_l = alpha * (d1.y_lower()[i] - reference.y_lower()[i])
                    + beta * (d2.y_lower()[i] - reference.y_lower()[i]);
                prop_assert!((lhs_l - rhs_l).abs() < 1e-12);
            }
        }

        /// Increasing any upper weight never lowers the upper surface.
        #[test]
        fn upper_surface_monotone_in_c(
            base in proptest::collection::vec(0.0..0.02f64, 10),
            idx in 0usize..5,
            bump in 0.0..0.01f64,
        ) {
            let reference = naca4_profile("4412", 60, false).unwrap();
            let basis = BumpBasis::default();
            let mut raised = base.clone();
            raised[idx] += bump;
            let a = deform_profile(&reference, &base.into(), &basis).unwrap();
            let b = deform_profile(&reference, &raised.into(), &basis).unwrap();
            for i in 0..reference.n_stations() {
                prop_assert!(b.y_upper()[i] >= a.y_upper()[i]);
            }
        }
    }
}
