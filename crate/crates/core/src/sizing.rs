//! From a signal-to-noise ratio to a sample size.
//!
//! `lambda` is tied to the SNR (an effect size in standard deviations, i.e.
//! Cohen's d) through `sqrt(lambda) * sigma2 = snr`. Given `lambda` and a
//! target variance ratio, two sample sizes are reported:
//!
//! - `n_approx`: the smallest `n` with `lambda / n < x`, where `x` is a
//!   threshold on `lambda / n` from a fitted curve or a preset.
//! - `n_exact`: the smallest `n >= 3` whose closed-form variance ratio
//!   reaches the target. For the agnostic spec this is the largest of the
//!   five per-spec answers.
//!
//! The two can disagree by a sample or two; both are always reported.

use serde::Serialize;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::ou_model::MIN_GRID_POINTS;
use crate::threshold_fit::{self, reference, ThresholdResult, ThresholdSpec, ThresholdTable};
use crate::variance_formulas::{self, ModelSpec};

/// Upper bound for the exact search.
pub const MAX_SAMPLE_SIZE: usize = 1_000_000;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Solves `sqrt(lambda) * sigma2 = snr` for `lambda`.
pub fn lambda_from_snr(snr: f64, sigma2: f64) -> Result<f64> {
    check_positive("snr", snr)?;
    check_positive("sigma2", sigma2)?;
    let root = snr / sigma2;
    Ok(root * root)
}

pub fn snr_from_lambda(lambda: f64, sigma2: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("sigma2", sigma2)?;
    Ok(lambda.sqrt() * sigma2)
}

/// Smallest `n` with `lambda / n < x`, i.e. `floor(lambda / x) + 1`, but
/// never below 3.
pub fn approx_sample_size(lambda: f64, x_at_target: f64) -> Result<usize> {
    check_positive("lambda", lambda)?;
    check_positive("threshold", x_at_target)?;
    let bound = (lambda / x_at_target).floor();
    if bound >= MAX_SAMPLE_SIZE as f64 {
        return Err(Error::Overflow(MAX_SAMPLE_SIZE as u64));
    }
    Ok((bound as usize + 1).max(MIN_GRID_POINTS))
}

/// Smallest `n >= 3` with `variance_ratio(spec, n, lambda) >= target_ratio`.
///
/// The ratio is nondecreasing in `n` and tends to one, so an ascending scan
/// stops at the first hit.
pub fn exact_sample_size(spec: ModelSpec, lambda: f64, target_ratio: f64) -> Result<usize> {
    check_positive("lambda", lambda)?;
    if target_ratio >= 1.0 {
        return Err(Error::Unattainable(target_ratio));
    }
    if !(target_ratio > 0.0) {
        return Err(Error::Domain(format!(
            "target ratio must be positive, got {target_ratio}"
        )));
    }
    for n in MIN_GRID_POINTS..=MAX_SAMPLE_SIZE {
        if variance_formulas::variance_ratio(spec, n, lambda)? >= target_ratio {
            return Ok(n);
        }
    }
    Err(Error::Overflow(MAX_SAMPLE_SIZE as u64))
}

/// Where `n_approx` takes its `lambda / n` threshold from.
#[derive(Debug, Clone)]
pub enum ThresholdSource {
    /// Thresholds fitted over a design.
    Fitted(ThresholdTable),
    /// The published reference tables (targets 0.75, 0.80, 0.90, 0.95).
    Published,
    /// `lambda / n < 1`, valid for targets up to 0.90.
    RuleOfThumb,
}

impl ThresholdSource {
    /// Fits thresholds for one spec and target over `design`.
    pub fn fitted(design: &Design, spec: ThresholdSpec, target: f64) -> Result<Self> {
        let fits = threshold_fit::fit_specs(design, &[spec])?;
        let rows = fits
            .iter()
            .map(|(s, f)| ThresholdResult::from_fit(*s, f, target))
            .collect::<Result<Vec<_>>>()?;
        Ok(ThresholdSource::Fitted(ThresholdTable {
            rows,
            fits,
            design: design.provenance(),
        }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ThresholdSource::Fitted(_) => "fitted",
            ThresholdSource::Published => "published",
            ThresholdSource::RuleOfThumb => "rule-of-thumb",
        }
    }

    pub fn threshold(&self, spec: ThresholdSpec, target: f64) -> Result<ThresholdResult> {
        match self {
            ThresholdSource::Fitted(table) => {
                if let Some(r) = table.lookup(spec, target) {
                    return Ok(*r);
                }
                let fit = table
                    .fit(spec)
                    .ok_or_else(|| Error::Config(format!("no fitted curve for {spec}")))?;
                ThresholdResult::from_fit(spec, fit, target)
            }
            ThresholdSource::Published => reference::threshold(spec, target).ok_or_else(|| {
                Error::Config(format!(
                    "published thresholds exist only for targets 0.75, 0.80, 0.90 and 0.95, got {target}"
                ))
            }),
            ThresholdSource::RuleOfThumb => {
                if target > reference::RULE_OF_THUMB_TARGET {
                    return Err(Error::Config(format!(
                        "the rule of thumb covers targets up to {}, got {target}",
                        reference::RULE_OF_THUMB_TARGET
                    )));
                }
                let x = reference::RULE_OF_THUMB_X;
                Ok(ThresholdResult {
                    spec,
                    target_ratio: target,
                    x_at_target: x,
                    ci_lo: x,
                    ci_hi: x,
                    fit: None,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaInput {
    Snr(f64),
    Lambda(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingRequest {
    pub input: LambdaInput,
    pub sigma2: f64,
    pub target_ratio: f64,
    pub spec: ThresholdSpec,
}

impl SizingRequest {
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma2", self.sigma2)?;
        match self.input {
            LambdaInput::Snr(v) => check_positive("snr", v)?,
            LambdaInput::Lambda(v) => check_positive("lambda", v)?,
        }
        if !(self.target_ratio > threshold_fit::DEFAULT_MIN_RATIO && self.target_ratio < 1.0) {
            return Err(Error::Domain(format!(
                "target ratio must lie in ({}, 1), got {}",
                threshold_fit::DEFAULT_MIN_RATIO,
                self.target_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizingResult {
    pub spec: ThresholdSpec,
    pub target_ratio: f64,
    pub snr: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub threshold_source: &'static str,
    pub threshold_used: Option<ThresholdResult>,
    pub n_approx: Option<usize>,
    pub n_exact: usize,
    /// Exact size per member spec (five entries for the agnostic spec).
    pub per_spec_exact: Vec<(ModelSpec, usize)>,
    pub notes: Vec<String>,
}

/// Resolves `lambda`, then sizes by threshold and by exact search.
pub fn size(request: &SizingRequest, source: &ThresholdSource) -> Result<SizingResult> {
    request.validate()?;
    let (lambda, snr) = match request.input {
        LambdaInput::Snr(snr) => (lambda_from_snr(snr, request.sigma2)?, snr),
        LambdaInput::Lambda(l) => (l, snr_from_lambda(l, request.sigma2)?),
    };
    let mut notes = Vec::new();
    if let LambdaInput::Snr(s) = request.input {
        notes.push(format!(
            "lambda = (snr / sigma2)^2 = ({s} / {})^2 = {lambda}",
            request.sigma2
        ));
    }

    let threshold = source.threshold(request.spec, request.target_ratio)?;
    let x = threshold.x_at_target;
    let n_approx = approx_sample_size(lambda, x)?;
    notes.push(format!(
        "{} threshold lambda/n < {x:.3} at ratio {}: n > lambda/x = {:.3}, so n_approx = {n_approx}",
        source.name(),
        request.target_ratio,
        lambda / x
    ));
    notes.push(format!(
        "not used: the product reading n > lambda*x = {:.3} inverts the inequality and would give n = {}; \
         it is the origin of the published figure n > 19.04 = 16 * 1.190",
        lambda * x,
        ((lambda * x).floor() as usize + 1).max(MIN_GRID_POINTS)
    ));

    let per_spec_exact = request
        .spec
        .members()
        .into_iter()
        .map(|s| Ok((s, exact_sample_size(s, lambda, request.target_ratio)?)))
        .collect::<Result<Vec<_>>>()?;
    let n_exact = per_spec_exact
        .iter()
        .map(|(_, n)| *n)
        .max()
        .unwrap_or(MIN_GRID_POINTS);
    if request.spec == ThresholdSpec::Agnostic {
        notes.push("n_exact is the largest exact size over the five specs".into());
    }
    if n_approx != n_exact {
        notes.push(format!(
            "n_approx and n_exact differ by {}",
            n_approx.abs_diff(n_exact)
        ));
    }

    Ok(SizingResult {
        spec: request.spec,
        target_ratio: request.target_ratio,
        snr,
        sigma2: request.sigma2,
        lambda,
        threshold_source: source.name(),
        threshold_used: Some(threshold),
        n_approx: Some(n_approx),
        n_exact,
        per_spec_exact,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn snr_conversions() {
        assert_eq!(lambda_from_snr(2.0, 1.0).unwrap(), 4.0);
        assert_eq!(lambda_from_snr(2.0, 0.5).unwrap(), 16.0);
        assert_eq!(lambda_from_snr(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(snr_from_lambda(4.0, 1.0).unwrap(), 2.0);
        assert_eq!(snr_from_lambda(16.0, 0.5).unwrap(), 2.0);
        let l = lambda_from_snr(3.7, 0.8).unwrap();
        assert_relative_eq!(snr_from_lambda(l, 0.8).unwrap(), 3.7, epsilon = 1e-12);
        assert!(lambda_from_snr(0.0, 1.0).is_err());
        assert!(lambda_from_snr(1.0, -1.0).is_err());
    }

    #[test]
    fn approx_examples() {
        assert_eq!(approx_sample_size(4.0, 1.190).unwrap(), 4);
        assert_eq!(approx_sample_size(1.19, 1.190).unwrap(), 3);
        assert_eq!(approx_sample_size(16.0, 1.190).unwrap(), 14);
        assert_eq!(approx_sample_size(148.9, 1.190).unwrap(), 126);
        assert!(approx_sample_size(1.0, 0.0).is_err());
    }

    #[test]
    fn exact_examples() {
        // closed form: ratio(n=3) = 0.8411, ratio(n=4) = 0.9161
        let n = exact_sample_size(ModelSpec::INTERCEPT_ONLY, 4.0, 0.90).unwrap();
        assert_eq!(n, 4);
        assert!(n.abs_diff(approx_sample_size(4.0, 1.168).unwrap()) <= 1);
        for spec in ModelSpec::ALL {
            assert_eq!(exact_sample_size(spec, 1e-6, 0.90).unwrap(), 3);
        }
        assert!(matches!(
            exact_sample_size(ModelSpec::FULL_SLOPE, 2.0, 1.0),
            Err(Error::Unattainable(_))
        ));
    }

    #[test]
    fn exact_size_is_minimal() {
        for spec in ModelSpec::ALL {
            for l in [0.5, 2.0, 10.0, 50.0] {
                for t in [0.75, 0.8, 0.9, 0.95] {
                    let n = exact_sample_size(spec, l, t).unwrap();
                    assert!(variance_formulas::variance_ratio(spec, n, l).unwrap() >= t);
                    if n > 3 {
                        assert!(variance_formulas::variance_ratio(spec, n - 1, l).unwrap() < t);
                    }
                }
            }
        }
    }

    #[test]
    fn published_sizing_worked_examples() {
        let req = SizingRequest {
            input: LambdaInput::Snr(2.0),
            sigma2: 1.0,
            target_ratio: 0.90,
            spec: ThresholdSpec::Agnostic,
        };
        let r = size(&req, &ThresholdSource::Published).unwrap();
        assert_eq!(r.lambda, 4.0);
        assert_eq!(r.n_approx, Some(4));
        assert_eq!(r.per_spec_exact.len(), 5);
        assert_eq!(
            r.n_exact,
            r.per_spec_exact.iter().map(|p| p.1).max().unwrap()
        );

        let r = size(
            &SizingRequest {
                sigma2: 0.5,
                ..req.clone()
            },
            &ThresholdSource::Published,
        )
        .unwrap();
        assert_eq!(r.lambda, 16.0);
        assert_eq!(r.n_approx, Some(14));
        assert!(r.notes.iter().any(|n| n.contains("lambda*x = 19.040")));

        let r = size(
            &SizingRequest {
                input: LambdaInput::Lambda(148.9),
                ..req.clone()
            },
            &ThresholdSource::Published,
        )
        .unwrap();
        assert_eq!(r.n_approx, Some(126));
    }

    #[test]
    fn rule_of_thumb_preset() {
        let src = ThresholdSource::RuleOfThumb;
        assert_eq!(
            src.threshold(ThresholdSpec::Agnostic, 0.9)
                .unwrap()
                .x_at_target,
            1.0
        );
        assert!(src.threshold(ThresholdSpec::Agnostic, 0.95).is_err());
    }

    #[test]
    fn invalid_requests() {
        let req = SizingRequest {
            input: LambdaInput::Lambda(4.0),
            sigma2: 1.0,
            target_ratio: 0.6,
            spec: ThresholdSpec::Agnostic,
        };
        assert!(size(&req, &ThresholdSource::Published).is_err());
        assert!(size(
            &SizingRequest {
                target_ratio: 0.85,
                ..req
            },
            &ThresholdSource::Published
        )
        .is_err());
    }
}
