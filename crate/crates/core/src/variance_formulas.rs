//! Closed-form estimator variances under AR(1) errors on the unit interval.
//!
//! Every function here assumes unit overall variance; multiply by `sigma2`
//! for other scales (the ratio is scale free). The finite-sample forms are
//! written in terms of `rho` and `q = 1 - rho`, with `q` taken from
//! `expm1` so that small `lambda` does not lose precision. Each factored
//! expression is algebraically identical to its expanded polynomial, e.g.
//! `n (8 rho - 1) + rho^2 (6 - 7 n) = n q (7 rho - 1) + 6 rho^2`.
//!
//! All five forms coincide with the GLS covariance `(X' S^-1 X)^-1`; see
//! `matrix_oracle` and the `verify` subcommand.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ou_model::{self, OuParameters, MIN_GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    InterceptOnly,
    SlopeOnly,
    InterceptSlope,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [Self::InterceptOnly, Self::SlopeOnly, Self::InterceptSlope];

    /// Number of regression coefficients.
    pub fn parameters(self) -> usize {
        match self {
            Self::InterceptSlope => 2,
            _ => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::InterceptOnly => "intercept-only",
            Self::SlopeOnly => "slope-only",
            Self::InterceptSlope => "intercept-slope",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intercept-only" => Ok(Self::InterceptOnly),
            "slope-only" => Ok(Self::SlopeOnly),
            "intercept-slope" => Ok(Self::InterceptSlope),
            _ => Err(Error::Usage(format!("unknown model kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterTarget {
    Intercept,
    Slope,
    /// `Cov(b0, b1)` in the intercept+slope model.
    Covariance,
}

impl ParameterTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Intercept => "intercept",
            Self::Slope => "slope",
            Self::Covariance => "covariance",
        }
    }
}

impl fmt::Display for ParameterTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParameterTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intercept" => Ok(Self::Intercept),
            "slope" => Ok(Self::Slope),
            "covariance" => Ok(Self::Covariance),
            _ => Err(Error::Usage(format!("unknown parameter '{s}'"))),
        }
    }
}

/// An admissible (model, estimand) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelSpec {
    kind: ModelKind,
    target: ParameterTarget,
}

impl ModelSpec {
    pub const INTERCEPT_ONLY: ModelSpec = ModelSpec {
        kind: ModelKind::InterceptOnly,
        target: ParameterTarget::Intercept,
    };
    pub const SLOPE_ONLY: ModelSpec = ModelSpec {
        kind: ModelKind::SlopeOnly,
        target: ParameterTarget::Slope,
    };
    pub const FULL_INTERCEPT: ModelSpec = ModelSpec {
        kind: ModelKind::InterceptSlope,
        target: ParameterTarget::Intercept,
    };
    pub const FULL_SLOPE: ModelSpec = ModelSpec {
        kind: ModelKind::InterceptSlope,
        target: ParameterTarget::Slope,
    };
    pub const FULL_COVARIANCE: ModelSpec = ModelSpec {
        kind: ModelKind::InterceptSlope,
        target: ParameterTarget::Covariance,
    };

    /// The five admissible specs in table order.
    pub const ALL: [ModelSpec; 5] = [
        Self::INTERCEPT_ONLY,
        Self::SLOPE_ONLY,
        Self::FULL_INTERCEPT,
        Self::FULL_SLOPE,
        Self::FULL_COVARIANCE,
    ];

    pub fn new(kind: ModelKind, target: ParameterTarget) -> Result<Self> {
        use ModelKind::*;
        use ParameterTarget::*;
        match (kind, target) {
            (InterceptOnly, Intercept) | (SlopeOnly, Slope) | (InterceptSlope, _) => {
                Ok(Self { kind, target })
            }
            _ => Err(Error::Inadmissible {
                kind: kind.to_string(),
                target: target.to_string(),
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn target(&self) -> ParameterTarget {
        self.target
    }

    pub fn is_covariance(&self) -> bool {
        self.target == ParameterTarget::Covariance
    }

    /// Position of this estimand in the `p x p` estimator covariance matrix.
    pub fn matrix_entry(&self) -> (usize, usize) {
        match (self.kind, self.target) {
            (ModelKind::InterceptSlope, ParameterTarget::Slope) => (1, 1),
            (ModelKind::InterceptSlope, ParameterTarget::Covariance) => (0, 1),
            _ => (0, 0),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.target)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Parses `kind:target`, e.g. `intercept-slope:covariance`. The target
    /// may be omitted for the one-parameter models.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((k, t)) => Self::new(k.parse()?, t.parse()?),
            None => match s.parse::<ModelKind>()? {
                ModelKind::InterceptOnly => Ok(Self::INTERCEPT_ONLY),
                ModelKind::SlopeOnly => Ok(Self::SLOPE_ONLY),
                ModelKind::InterceptSlope => Err(Error::Usage(
                    "intercept-slope needs a parameter (intercept, slope or covariance)".into(),
                )),
            },
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Finite-sample and limiting variance of one estimand, with their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    pub spec: ModelSpec,
    pub n: usize,
    pub lambda: f64,
    pub sigma2: f64,
    pub actual: f64,
    pub limiting: f64,
    /// `limiting / actual`; scale free.
    pub ratio: f64,
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_GRID_POINTS {
        return Err(Error::Domain(format!(
            "sample size must be at least {MIN_GRID_POINTS}, got {n}"
        )));
    }
    Ok(())
}

fn finite_quotient(what: &'static str, n: usize, lambda: f64, num: f64, den: f64) -> Result<f64> {
    let value = num / den;
    if den == 0.0 || !den.is_finite() || !value.is_finite() {
        return Err(Error::NumericDegeneracy {
            what,
            n: n as u64,
            lambda,
            detail: format!("numerator {num:e}, denominator {den:e}"),
        });
    }
    Ok(value)
}

/// Finite-sample variance (or covariance) of the GLS estimator with unit
/// overall variance.
pub fn actual_variance(spec: ModelSpec, n: usize, lambda: f64) -> Result<f64> {
    check_n(n)?;
    let r = ou_model::rho(n, lambda)?;
    let q = ou_model::one_minus_rho(n, lambda);
    let nf = n as f64;
    // 1 - rho^2
    let q2 = q * (1.0 + r);

    match (spec.kind, spec.target) {
        (ModelKind::InterceptOnly, _) => finite_quotient(
            "intercept-only variance",
            n,
            lambda,
            1.0 + r,
            nf * q + 2.0 * r,
        ),
        (ModelKind::SlopeOnly, _) => {
            // 2n^2 (1 - 2rho + rho^2) + n (8rho - 1) + rho^2 (6 - 7n)
            let den = 2.0 * nf * nf * q * q + nf * q * (7.0 * r - 1.0) + 6.0 * r * r;
            finite_quotient("slope-only variance", n, lambda, 6.0 * q2 * (nf - 1.0), den)
        }
        (ModelKind::InterceptSlope, target) => {
            // n^2 (1 + rho^2 - 2rho) + n (1 + 4rho - 5rho^2) + 6rho (1 + rho)
            let d = nf * nf * q * q + nf * q * (1.0 + 5.0 * r) + 6.0 * r * (1.0 + r);
            match target {
                ParameterTarget::Intercept => {
                    // 2n^2 (1 - 2rho + rho^2) + n (8rho - 1 - 7rho^2) + 6rho^2
                    let bracket = 2.0 * nf * nf * q * q + nf * q * (7.0 * r - 1.0) + 6.0 * r * r;
                    let num = 2.0 * (1.0 + r) * bracket;
                    let den = (nf * q + 2.0 * r) * d;
                    finite_quotient("full-model intercept variance", n, lambda, num, den)
                }
                ParameterTarget::Slope => finite_quotient(
                    "full-model slope variance",
                    n,
                    lambda,
                    12.0 * q2 * (nf - 1.0),
                    d,
                ),
                ParameterTarget::Covariance => finite_quotient(
                    "full-model covariance",
                    n,
                    lambda,
                    -6.0 * q2 * (nf - 1.0),
                    d,
                ),
            }
        }
    }
}

/// Limit of [`actual_variance`] as `n` grows without bound on `[0, 1]`.
pub fn limiting_variance(spec: ModelSpec, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let l = lambda;
    Ok(match (spec.kind, spec.target) {
        (ModelKind::InterceptOnly, _) => 2.0 / (2.0 + l),
        (ModelKind::SlopeOnly, _) => 2.0 / (1.0 / l + 1.0 + l / 3.0),
        (ModelKind::InterceptSlope, ParameterTarget::Intercept) => {
            8.0 * (l * l + 3.0 * l + 3.0) / ((l + 2.0) * (l * l + 6.0 * l + 12.0))
        }
        (ModelKind::InterceptSlope, ParameterTarget::Slope) => 4.0 / (2.0 / l + 1.0 + l / 6.0),
        (ModelKind::InterceptSlope, ParameterTarget::Covariance) => {
            -2.0 / (l / 6.0 + 1.0 + 2.0 / l)
        }
    })
}

/// Limiting over finite-sample variance; below one whenever `n` samples have
/// not yet reached the limiting precision.
pub fn variance_ratio(spec: ModelSpec, n: usize, lambda: f64) -> Result<f64> {
    let actual = actual_variance(spec, n, lambda)?;
    let limiting = limiting_variance(spec, lambda)?;
    Ok(limiting / actual)
}

pub fn variance_report(spec: ModelSpec, n: usize, params: &OuParameters) -> Result<VarianceReport> {
    let actual = actual_variance(spec, n, params.lambda())?;
    let limiting = limiting_variance(spec, params.lambda())?;
    Ok(VarianceReport {
        spec,
        n,
        lambda: params.lambda(),
        sigma2: params.sigma2(),
        actual: actual * params.sigma2(),
        limiting: limiting * params.sigma2(),
        ratio: limiting / actual,
    })
}
