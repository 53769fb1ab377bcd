//! Variance-ratio thresholds on `lambda / n`.
//!
//! For every design point and spec the exact variance ratio is computed and
//! paired with `x = lambda / n`. Rows with ratio below 0.7 are dropped and a
//! centered cubic
//!
//! ```text
//! ratio = b0 + b1 x + b2 (x - c)^2 + b3 (x - c)^3,   c = mean(x)
//! ```
//!
//! is fitted by least squares. The threshold at a target ratio is where the
//! fitted curve crosses the target, and its interval is `x +/- 1.96 * RMSE`.
//! RMSE is a residual scale on the ratio axis applied here to the `x` axis;
//! the convention is kept as is, so read the interval as a heuristic band
//! rather than a calibrated confidence interval.
//!
//! The ratio really depends on `n` and `lambda` jointly, so rows scatter
//! around the curve; [`crate::sizing::exact_sample_size`] avoids the
//! approximation entirely.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::design::{Design, DesignProvenance};
use crate::error::{Error, Result};
use crate::variance_formulas::{self, ModelSpec};

pub const DEFAULT_MIN_RATIO: f64 = 0.7;
pub const DEFAULT_TARGETS: [f64; 4] = [0.75, 0.80, 0.90, 0.95];
/// Normal quantile used for the threshold interval.
pub const INTERVAL_Z: f64 = 1.96;
/// Minimum rows for a cubic fit.
pub const MIN_FIT_ROWS: usize = 8;
/// Grid resolution used to check that the target is crossed exactly once.
const CROSSING_SCAN_POINTS: usize = 1024;
/// Bisection stops once the bracket is narrower than this.
const ROOT_TOLERANCE: f64 = 1e-10;

/// A single model/estimand, or the pooled fit over all five.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ThresholdSpec {
    Model(ModelSpec),
    Agnostic,
}

impl ThresholdSpec {
    /// The five model specs followed by the agnostic pool.
    pub const TABLE_ORDER: [ThresholdSpec; 6] = [
        ThresholdSpec::Model(ModelSpec::INTERCEPT_ONLY),
        ThresholdSpec::Model(ModelSpec::SLOPE_ONLY),
        ThresholdSpec::Model(ModelSpec::FULL_INTERCEPT),
        ThresholdSpec::Model(ModelSpec::FULL_SLOPE),
        ThresholdSpec::Model(ModelSpec::FULL_COVARIANCE),
        ThresholdSpec::Agnostic,
    ];

    /// Specs whose rows enter the fit.
    pub fn members(&self) -> Vec<ModelSpec> {
        match self {
            ThresholdSpec::Model(s) => vec![*s],
            ThresholdSpec::Agnostic => ModelSpec::ALL.to_vec(),
        }
    }
}

impl From<ModelSpec> for ThresholdSpec {
    fn from(s: ModelSpec) -> Self {
        ThresholdSpec::Model(s)
    }
}

impl fmt::Display for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdSpec::Model(s) => s.fmt(f),
            ThresholdSpec::Agnostic => f.write_str("agnostic"),
        }
    }
}

impl FromStr for ThresholdSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "agnostic" {
            Ok(ThresholdSpec::Agnostic)
        } else {
            s.parse().map(ThresholdSpec::Model)
        }
    }
}

impl Serialize for ThresholdSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub spec: ModelSpec,
    pub n: usize,
    pub lambda: f64,
    /// `lambda / n`
    pub x: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DatasetProvenance {
    pub design: Option<DesignProvenance>,
    /// Set once the dataset has been through [`restrict`].
    pub min_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioDataset {
    rows: Vec<RatioRow>,
    provenance: DatasetProvenance,
}

impl RatioDataset {
    pub fn from_rows(rows: Vec<RatioRow>) -> Self {
        Self {
            rows,
            provenance: DatasetProvenance::default(),
        }
    }

    pub fn rows(&self) -> &[RatioRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn provenance(&self) -> DatasetProvenance {
        self.provenance
    }

    /// Rows belonging to `spec` (all rows for the agnostic pool).
    pub fn select(&self, spec: ThresholdSpec) -> RatioDataset {
        let members = spec.members();
        RatioDataset {
            rows: self
                .rows
                .iter()
                .filter(|r| members.contains(&r.spec))
                .copied()
                .collect(),
            provenance: self.provenance,
        }
    }
}

/// One row per (design point, spec), spec-major.
pub fn build_ratio_dataset(design: &Design, specs: &[ModelSpec]) -> Result<RatioDataset> {
    if design.is_empty() {
        return Err(Error::InsufficientData("design has no points".into()));
    }
    let mut rows = Vec::with_capacity(design.len() * specs.len());
    for &spec in specs {
        for p in design.points() {
            rows.push(RatioRow {
                spec,
                n: p.n,
                lambda: p.lambda,
                x: p.lambda / p.n as f64,
                ratio: variance_formulas::variance_ratio(spec, p.n, p.lambda)?,
            });
        }
    }
    Ok(RatioDataset {
        rows,
        provenance: DatasetProvenance {
            design: design.provenance(),
            min_ratio: None,
        },
    })
}

/// Keeps rows with `ratio >= min_ratio`.
pub fn restrict(dataset: &RatioDataset, min_ratio: f64) -> Result<RatioDataset> {
    let rows: Vec<RatioRow> = dataset
        .rows
        .iter()
        .filter(|r| r.ratio >= min_ratio)
        .copied()
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no rows with ratio >= {min_ratio}"
        )));
    }
    Ok(RatioDataset {
        rows,
        provenance: DatasetProvenance {
            min_ratio: Some(min_ratio),
            ..dataset.provenance
        },
    })
}

/// `b0 + b1 x + b2 (x - c)^2 + b3 (x - c)^3` with fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicFit {
    pub coefficients: [f64; 4],
    pub center: f64,
    pub r2_adj: f64,
    pub rmse: f64,
    /// Range of `x` the curve was fitted on; it is only valid there.
    pub x_domain: (f64, f64),
    pub n_rows: usize,
}

impl CubicFit {
    /// A curve from known coefficients, e.g. a published equation.
    pub fn from_coefficients(
        coefficients: [f64; 4],
        center: f64,
        x_domain: (f64, f64),
        rmse: f64,
    ) -> Self {
        Self {
            coefficients,
            center,
            r2_adj: f64::NAN,
            rmse,
            x_domain,
            n_rows: 0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [b0, b1, b2, b3] = self.coefficients;
        let d = x - self.center;
        b0 + b1 * x + d * d * (b2 + b3 * d)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let [_, b1, b2, b3] = self.coefficients;
        let d = x - self.center;
        b1 + 2.0 * b2 * d + 3.0 * b3 * d * d
    }
}

/// Least-squares cubic with the center at the mean of `x`.
pub fn fit_cubic(dataset: &RatioDataset) -> Result<CubicFit> {
    let xs: Vec<f64> = dataset.rows.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = dataset.rows.iter().map(|r| r.ratio).collect();
    if xs.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    let center = xs.iter().sum::<f64>() / xs.len() as f64;
    fit_cubic_xy(&xs, &ys, center)
}

/// Least-squares cubic about a caller-chosen center.
pub fn fit_cubic_xy(xs: &[f64], ys: &[f64], center: f64) -> Result<CubicFit> {
    let k = xs.len();
    if k != ys.len() {
        return Err(Error::Domain(format!(
            "{k} x values but {} y values",
            ys.len()
        )));
    }
    if k < MIN_FIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "a cubic fit needs at least {MIN_FIT_ROWS} rows, got {k}"
        )));
    }
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if lo == hi {
        return Err(Error::DegenerateData("all x values are equal".into()));
    }

    let design = DMatrix::from_fn(k, 4, |i, j| {
        let d = xs[i] - center;
        match j {
            0 => 1.0,
            1 => xs[i],
            2 => d * d,
            _ => d * d * d,
        }
    });
    let y = DVector::from_column_slice(ys);
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > smax * 1e-12) {
        return Err(Error::DegenerateData(format!(
            "cubic design is rank deficient (singular values {smin:e} / {smax:e})"
        )));
    }
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::DegenerateData(e.to_string()))?;

    let fitted = &design * &beta;
    let sse: f64 = (&y - &fitted).iter().map(|e| e * e).sum();
    let mean = ys.iter().sum::<f64>() / k as f64;
    let sst: f64 = ys.iter().map(|v| (v - mean) * (v - mean)).sum();
    let dof = (k - 4) as f64;
    let r2_adj = if sst == 0.0 {
        1.0
    } else {
        1.0 - (sse / dof) / (sst / (k - 1) as f64)
    };

    Ok(CubicFit {
        coefficients: [beta[0], beta[1], beta[2], beta[3]],
        center,
        r2_adj,
        rmse: (sse / dof).sqrt(),
        x_domain: (lo, hi),
        n_rows: k,
    })
}

/// The `x` in the fitted domain where the curve falls through
/// `target_ratio`. The target must be crossed exactly once, going down.
pub fn solve_ratio_threshold(fit: &CubicFit, target_ratio: f64) -> Result<f64> {
    let (lo, hi) = fit.x_domain;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::DegenerateData(format!(
            "empty fit domain [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / CROSSING_SCAN_POINTS as f64;
    let xs: Vec<f64> = (0..=CROSSING_SCAN_POINTS)
        .map(|k| {
            if k == CROSSING_SCAN_POINTS {
                hi
            } else {
                lo + step * k as f64
            }
        })
        .collect();
    let gs: Vec<f64> = xs.iter().map(|&x| fit.eval(x) - target_ratio).collect();

    let (ymin, ymax) = gs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| {
            (a.min(g + target_ratio), b.max(g + target_ratio))
        });
    if !(ymin..=ymax).contains(&target_ratio) {
        return Err(Error::OutOfRange {
            target: target_ratio,
            lo: ymin,
            hi: ymax,
        });
    }

    let mut brackets = Vec::new();
    for k in 0..CROSSING_SCAN_POINTS {
        let (a, b) = (gs[k], gs[k + 1]);
        if a == 0.0 || a * b < 0.0 {
            brackets.push(k);
        }
    }
    if gs[CROSSING_SCAN_POINTS] == 0.0 {
        brackets.push(CROSSING_SCAN_POINTS);
    }
    if brackets.len() != 1 {
        return Err(Error::NonMonotone(format!(
            "curve crosses {target_ratio} {} times on [{lo:.4}, {hi:.4}]",
            brackets.len()
        )));
    }
    let k = brackets[0];
    if gs[k] == 0.0 {
        return Ok(xs[k]);
    }
    if gs[k] < 0.0 {
        return Err(Error::NonMonotone(format!(
            "curve rises through {target_ratio} near x = {:.4}",
            xs[k]
        )));
    }

    let (mut a, mut b) = (xs[k], xs[k + 1]);
    while b - a > ROOT_TOLERANCE {
        let m = 0.5 * (a + b);
        let g = fit.eval(m) - target_ratio;
        if g == 0.0 {
            return Ok(m);
        }
        if g > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `(x - 1.96 rmse, x + 1.96 rmse)`.
pub fn threshold_ci(x_at_target: f64, rmse: f64) -> (f64, f64) {
    (
        x_at_target - INTERVAL_Z * rmse,
        x_at_target + INTERVAL_Z * rmse,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub spec: ThresholdSpec,
    pub target_ratio: f64,
    /// Any `lambda / n` below this reaches at least `target_ratio` on the
    /// fitted curve.
    pub x_at_target: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// The fit behind the threshold, absent for preset thresholds.
    pub fit: Option<CubicFit>,
}

impl ThresholdResult {
    pub fn from_fit(spec: ThresholdSpec, fit: &CubicFit, target_ratio: f64) -> Result<Self> {
        let x = solve_ratio_threshold(fit, target_ratio)?;
        let (ci_lo, ci_hi) = threshold_ci(x, fit.rmse);
        Ok(Self {
            spec,
            target_ratio,
            x_at_target: x,
            ci_lo,
            ci_hi,
            fit: Some(*fit),
        })
    }
}

fn check_target(target: f64, min_ratio: f64) -> Result<()> {
    if !(target > min_ratio && target < 1.0) {
        return Err(Error::Domain(format!(
            "target ratio must lie in ({min_ratio}, 1), got {target}"
        )));
    }
    Ok(())
}

/// Fits and thresholds for every spec and target over one design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub rows: Vec<ThresholdResult>,
    pub fits: Vec<(ThresholdSpec, CubicFit)>,
    pub design: Option<DesignProvenance>,
}

impl ThresholdTable {
    pub fn lookup(&self, spec: ThresholdSpec, target: f64) -> Option<&ThresholdResult> {
        self.rows
            .iter()
            .find(|r| r.spec == spec && r.target_ratio == target)
    }

    pub fn fit(&self, spec: ThresholdSpec) -> Option<&CubicFit> {
        self.fits.iter().find(|(s, _)| *s == spec).map(|(_, f)| f)
    }
}

/// Fits the restricted cubic for each spec in `specs` over `design`.
pub fn fit_specs(
    design: &Design,
    specs: &[ThresholdSpec],
) -> Result<Vec<(ThresholdSpec, CubicFit)>> {
    let data = restrict(
        &build_ratio_dataset(design, &ModelSpec::ALL)?,
        DEFAULT_MIN_RATIO,
    )?;
    specs
        .iter()
        .map(|&spec| Ok((spec, fit_cubic(&data.select(spec))?)))
        .collect()
}

/// Thresholds for the five specs and the agnostic pool at each target,
/// spec-major in [`ThresholdSpec::TABLE_ORDER`].
pub fn threshold_table(design: &Design, targets: &[f64]) -> Result<ThresholdTable> {
    for &t in targets {
        check_target(t, DEFAULT_MIN_RATIO)?;
    }
    let fits = fit_specs(design, &ThresholdSpec::TABLE_ORDER)?;
    let mut rows = Vec::with_capacity(fits.len() * targets.len());
    for (spec, fit) in &fits {
        for &t in targets {
            rows.push(ThresholdResult::from_fit(*spec, fit, t)?);
        }
    }
    Ok(ThresholdTable {
        rows,
        fits,
        design: design.provenance(),
    })
}

/// Published reference values: the fitted curves and threshold tables for
/// the five specs and the agnostic pool.
pub mod reference {
    use super::*;

    /// Center used by every published curve.
    pub const CENTER: f64 = 1.062;

    /// Restricted range used when solving a published curve; each curve is
    /// below 0.7 by `x = 2.5`.
    pub const DOMAIN: (f64, f64) = (0.0, 2.5);

    /// `(b0, b1, b2, b3)` in table order; the covariance curve equals the
    /// full-model slope curve.
    pub const CURVES: [(ThresholdSpec, [f64; 4]); 6] = [
        (
            ThresholdSpec::Model(ModelSpec::INTERCEPT_ONLY),
            [1.068, -0.143, -0.042, 0.017],
        ),
        (
            ThresholdSpec::Model(ModelSpec::SLOPE_ONLY),
            [1.069, -0.143, -0.041, 0.018],
        ),
        (
            ThresholdSpec::Model(ModelSpec::FULL_INTERCEPT),
            [1.069, -0.140, -0.041, 0.019],
        ),
        (
            ThresholdSpec::Model(ModelSpec::FULL_SLOPE),
            [1.069, -0.140, -0.041, 0.020],
        ),
        (
            ThresholdSpec::Model(ModelSpec::FULL_COVARIANCE),
            [1.069, -0.140, -0.041, 0.020],
        ),
        (ThresholdSpec::Agnostic, [1.069, -0.141, -0.041, 0.019]),
    ];

    /// `(target, [(ci_lo, x, ci_hi); 6])` in table order.
    pub const THRESHOLDS: [(f64, [(f64, f64, f64); 6]); 4] = [
        (
            0.75,
            [
                (2.045, 2.047, 2.049),
                (2.065, 2.066, 2.068),
                (2.096, 2.101, 2.105),
                (2.116, 2.123, 2.131),
                (2.116, 2.123, 2.131),
                (2.088, 2.091, 2.094),
            ],
        ),
        (
            0.80,
            [
                (1.762, 1.764, 1.766),
                (1.776, 1.778, 1.779),
                (1.800, 1.804, 1.807),
                (1.813, 1.819, 1.824),
                (1.813, 1.819, 1.824),
                (1.794, 1.796, 1.799),
            ],
        ),
        (
            0.90,
            [
                (1.166, 1.168, 1.170),
                (1.176, 1.177, 1.178),
                (1.192, 1.195, 1.199),
                (1.200, 1.205, 1.210),
                (1.200, 1.205, 1.210),
                (1.188, 1.190, 1.193),
            ],
        ),
        (
            0.95,
            [
                (0.799, 0.802, 0.804),
                (0.810, 0.812, 0.813),
                (0.823, 0.828, 0.832),
                (0.831, 0.838, 0.844),
                (0.831, 0.838, 0.844),
                (0.820, 0.823, 0.826),
            ],
        ),
    ];

    /// Rule-of-thumb cutoff: keep `lambda / n` below 1 for about 90% of the
    /// limiting precision.
    pub const RULE_OF_THUMB_X: f64 = 1.0;
    pub const RULE_OF_THUMB_TARGET: f64 = 0.90;

    pub fn curve(spec: ThresholdSpec) -> CubicFit {
        let (_, b) = CURVES
            .iter()
            .find(|(s, _)| *s == spec)
            .copied()
            .unwrap_or(CURVES[5]);
        CubicFit::from_coefficients(b, CENTER, DOMAIN, 0.0)
    }

    /// The tabulated threshold, if `target` is one of the four tabulated
    /// ratios.
    pub fn threshold(spec: ThresholdSpec, target: f64) -> Option<ThresholdResult> {
        let idx = ThresholdSpec::TABLE_ORDER.iter().position(|s| *s == spec)?;
        let (_, row) = THRESHOLDS
            .iter()
            .find(|(t, _)| (*t - target).abs() < 1e-12)?;
        let (ci_lo, x, ci_hi) = row[idx];
        Some(ThresholdResult {
            spec,
            target_ratio: target,
            x_at_target: x,
            ci_lo,
            ci_hi,
            fit: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignPoint;
    use approx::assert_relative_eq;

    fn synthetic(b: [f64; 4], c: f64, xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|&x| b[0] + b[1] * x + b[2] * (x - c).powi(2) + b[3] * (x - c).powi(3))
            .collect()
    }

    #[test]
    fn recovers_exact_cubic() {
        let b = [1.068, -0.143, -0.042, 0.017];
        let xs: Vec<f64> = (0..40).map(|k| 0.05 + 0.06 * k as f64).collect();
        let ys = synthetic(b, 1.062, &xs);
        let fit = fit_cubic_xy(&xs, &ys, 1.062).unwrap();
        for (got, want) in fit.coefficients.iter().zip(b) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        assert_relative_eq!(fit.r2_adj, 1.0, epsilon = 1e-12);
        assert!(fit.rmse < 1e-12);
    }

    #[test]
    fn constant_data() {
        let xs: Vec<f64> = (0..12).map(|k| k as f64 * 0.2).collect();
        let ys = vec![0.83; 12];
        let fit = fit_cubic_xy(&xs, &ys, 1.1).unwrap();
        assert_relative_eq!(fit.coefficients[0], 0.83, epsilon = 1e-12);
        for b in &fit.coefficients[1..] {
            assert!(b.abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        let xs = vec![1.0; 10];
        assert!(matches!(
            fit_cubic_xy(&xs, &xs, 1.0),
            Err(Error::DegenerateData(_))
        ));
        let xs: Vec<f64> = (0..5).map(f64::from).collect();
        assert!(matches!(
            fit_cubic_xy(&xs, &xs, 1.0),
            Err(Error::InsufficientData(_))
        ));
        // three distinct x values cannot pin four coefficients
        let xs: Vec<f64> = (0..12).map(|k| (k % 3) as f64).collect();
        assert!(matches!(
            fit_cubic_xy(&xs, &xs, 1.0),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn published_curve_crossings() {
        let fit = reference::curve(ThresholdSpec::Model(ModelSpec::INTERCEPT_ONLY));
        // crossings of the three-decimal coefficients, from scipy brentq:
        // 0.75 -> 2.0514, 0.80 -> 1.7693, 0.90 -> 1.1715, 0.95 -> 0.8035
        for (t, x) in [
            (0.75, 2.0514),
            (0.80, 1.7693),
            (0.90, 1.1715),
            (0.95, 0.8035),
        ] {
            assert!((solve_ratio_threshold(&fit, t).unwrap() - x).abs() < 1e-4);
        }
        assert!((solve_ratio_threshold(&fit, 0.95).unwrap() - 0.802).abs() <= 5e-3);
        assert!(matches!(
            solve_ratio_threshold(&fit, 1.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn rising_or_wiggling_curves_are_rejected() {
        let rising = CubicFit::from_coefficients([0.0, 0.5, 0.0, 0.0], 0.0, (0.0, 2.0), 0.0);
        assert!(matches!(
            solve_ratio_threshold(&rising, 0.8),
            Err(Error::NonMonotone(_))
        ));
        // 3 + (x - 0.5)(x - 1)(x - 1.5) crosses 3 three times
        let wiggle = CubicFit::from_coefficients([3.25, -0.25, 0.0, 1.0], 1.0, (0.0, 2.0), 0.0);
        let g = |x: f64| 3.0 + (x - 0.5) * (x - 1.0) * (x - 1.5);
        assert_relative_eq!(wiggle.eval(0.3), g(0.3), epsilon = 1e-12);
        assert!(matches!(
            solve_ratio_threshold(&wiggle, 3.0),
            Err(Error::NonMonotone(_))
        ));
    }

    #[test]
    fn interval_arithmetic() {
        let (lo, hi) = threshold_ci(1.168, 0.0012);
        assert_relative_eq!(lo, 1.165648, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.170352, epsilon = 1e-12);
        assert_eq!(
            (
                (lo * 1000.0).round() / 1000.0,
                (hi * 1000.0).round() / 1000.0
            ),
            (1.166, 1.170)
        );
        assert_eq!(threshold_ci(0.9, 0.0), (0.9, 0.9));
        let (lo, hi) = threshold_ci(1.205, 0.0026);
        assert!((lo - 1.200).abs() < 1e-3 && (hi - 1.210).abs() < 1e-3);
    }

    #[test]
    fn dataset_rows() {
        let design = Design::from_points(vec![
            DesignPoint {
                n: 10,
                lambda: 11.9,
            },
            DesignPoint { n: 40, lambda: 3.0 },
        ])
        .unwrap();
        let one = build_ratio_dataset(&design, &[ModelSpec::INTERCEPT_ONLY]).unwrap();
        let row = one.rows()[0];
        assert_relative_eq!(row.x, 1.19, epsilon = 1e-15);
        assert!((row.ratio - 0.9).abs() < 0.02);

        let all = build_ratio_dataset(&design, &ModelSpec::ALL).unwrap();
        assert_eq!(all.len(), 10);
        assert!(all.rows().iter().all(|r| r.ratio > 0.0));
        assert_eq!(restrict(&all, 0.0).unwrap().rows(), all.rows());
        assert!(matches!(
            restrict(&all, 1.01),
            Err(Error::InsufficientData(_))
        ));
        assert_eq!(
            restrict(&all, 0.7).unwrap().provenance().min_ratio,
            Some(0.7)
        );
    }

    #[test]
    fn targets_outside_fitting_range_are_rejected() {
        let design = crate::design::latin_hypercube(40, 1, 2).unwrap();
        assert!(threshold_table(&design, &[0.65]).is_err());
        assert!(threshold_table(&design, &[1.0]).is_err());
    }

    #[test]
    fn reference_lookup() {
        let r = reference::threshold(ThresholdSpec::Agnostic, 0.90).unwrap();
        assert_eq!((r.ci_lo, r.x_at_target, r.ci_hi), (1.188, 1.190, 1.193));
        assert!(reference::threshold(ThresholdSpec::Agnostic, 0.85).is_none());
        for (_, row) in reference::THRESHOLDS {
            for (lo, x, hi) in row {
                assert!(lo < x && x < hi);
            }
        }
    }

    #[test]
    fn spec_labels_round_trip() {
        for s in ThresholdSpec::TABLE_ORDER {
            assert_eq!(s.to_string().parse::<ThresholdSpec>().unwrap(), s);
        }
    }
}
