//! Brute-force estimator covariances used to check the closed forms.
//!
//! The dense path factors the covariance with a Cholesky decomposition and
//! never forms its inverse. The AR(1) path uses the known tridiagonal
//! precision matrix instead; it is faster but assumes the structure being
//! verified, so the dense path is the reference.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ou_model::{self, CovarianceMatrix, Grid, OuParameters, PathSampler};
use crate::variance_formulas::{self, ModelKind, ModelSpec};

/// Largest `n` accepted by the dense oracle.
pub const MAX_ORACLE_N: usize = 2000;

/// Smallest replication count for the Monte Carlo harness.
pub const MIN_MONTE_CARLO_REPS: usize = 10_000;

/// Relative error below which a closed form is said to match an oracle.
pub const MATCH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    kind: ModelKind,
    x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }
}

/// Columns `[1]`, `[t]` or `[1, t]` on the grid times.
pub fn design_matrix(kind: ModelKind, grid: &Grid) -> DesignMatrix {
    let t = grid.times();
    let x = match kind {
        ModelKind::InterceptOnly => DMatrix::from_element(grid.len(), 1, 1.0),
        ModelKind::SlopeOnly => DMatrix::from_column_slice(grid.len(), 1, &t),
        ModelKind::InterceptSlope => {
            DMatrix::from_fn(grid.len(), 2, |i, j| if j == 0 { 1.0 } else { t[i] })
        }
    };
    DesignMatrix { kind, x }
}

/// Symmetric `p x p` covariance of the coefficient estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCovariance(DMatrix<f64>);

impl EstimatorCovariance {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// The entry a closed-form spec describes.
    pub fn entry(&self, spec: ModelSpec) -> f64 {
        let (i, j) = spec.matrix_entry();
        self.get(i, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Estimator {
    Gls,
    Ols,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Gls => "GLS",
            Estimator::Ols => "OLS",
        })
    }
}

fn check_shapes(x: &DesignMatrix, s: &CovarianceMatrix) -> Result<()> {
    if x.rows() != s.dim() {
        return Err(Error::Domain(format!(
            "design has {} rows but covariance is {}x{}",
            x.rows(),
            s.dim(),
            s.dim()
        )));
    }
    if x.rows() > MAX_ORACLE_N {
        return Err(Error::Domain(format!(
            "oracle runs are capped at n = {MAX_ORACLE_N}, got {}",
            x.rows()
        )));
    }
    Ok(())
}

fn spd_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular(what.to_string()))
}

/// `(X' S^-1 X)^-1` via a Cholesky solve against `S`.
pub fn gls_covariance(x: &DesignMatrix, s: &CovarianceMatrix) -> Result<EstimatorCovariance> {
    check_shapes(x, s)?;
    let chol = s
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("error covariance".into()))?;
    // W = L^-1 X, so X' S^-1 X = W' W
    let w = chol
        .l_dirty()
        .solve_lower_triangular(x.as_matrix())
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    let info = w.transpose() * &w;
    Ok(EstimatorCovariance(symmetrize(spd_inverse(
        info,
        "GLS information matrix",
    )?)))
}

/// GLS covariance using the tridiagonal AR(1) precision
/// `(1 / (sigma2 (1 - rho^2))) * tridiag(-rho; 1, 1 + rho^2, ..., 1 + rho^2, 1; -rho)`.
///
/// The precision factors as `W' W` with prewhitened rows
/// `sqrt(1 - rho^2) x_1` and `x_{k+1} - rho x_k`; the latter are formed as
/// `(x_{k+1} - x_k) + (1 - rho) x_k` so nothing cancels when `rho` is near one.
pub fn gls_covariance_ar1(x: &DesignMatrix, params: &OuParameters) -> Result<EstimatorCovariance> {
    let n = x.rows();
    let r = ou_model::rho(n, params.lambda())?;
    let q = ou_model::one_minus_rho(n, params.lambda());
    let q2 = q * (1.0 + r);
    let xm = x.as_matrix();
    let p = x.cols();
    let mut info = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let mut acc = q2 * xm[(0, a)] * xm[(0, b)];
            for k in 0..n - 1 {
                let wa = (xm[(k + 1, a)] - xm[(k, a)]) + q * xm[(k, a)];
                let wb = (xm[(k + 1, b)] - xm[(k, b)]) + q * xm[(k, b)];
                acc += wa * wb;
            }
            info[(a, b)] = acc / (params.sigma2() * q2);
        }
    }
    Ok(EstimatorCovariance(symmetrize(spd_inverse(
        info,
        "AR(1) information matrix",
    )?)))
}

/// True covariance of OLS under correlated errors,
/// `(X'X)^-1 X' S X (X'X)^-1`.
pub fn ols_sandwich_covariance(
    x: &DesignMatrix,
    s: &CovarianceMatrix,
) -> Result<EstimatorCovariance> {
    check_shapes(x, s)?;
    let xm = x.as_matrix();
    let bread = spd_inverse(xm.transpose() * xm, "X'X")?;
    let meat = xm.transpose() * s.as_matrix() * xm;
    Ok(EstimatorCovariance(symmetrize(&bread * meat * &bread)))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Linear map from an error path to the coefficient estimates.
fn estimator_weights(
    x: &DesignMatrix,
    s: &CovarianceMatrix,
    estimator: Estimator,
) -> Result<DMatrix<f64>> {
    let xm = x.as_matrix();
    match estimator {
        Estimator::Ols => Ok(spd_inverse(xm.transpose() * xm, "X'X")? * xm.transpose()),
        Estimator::Gls => {
            let chol = s
                .as_matrix()
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Singular("error covariance".into()))?;
            // S^-1 X
            let six = chol.solve(xm);
            let info = xm.transpose() * &six;
            Ok(spd_inverse(info, "GLS information matrix")? * six.transpose())
        }
    }
}

/// Sample covariance of estimates fitted to `reps` simulated zero-mean
/// paths. One ChaCha8 stream seeded from `seed` feeds every path in order,
/// so the result is reproducible and a larger `reps` extends the same
/// sequence of paths.
pub fn monte_carlo_estimator_covariance(
    kind: ModelKind,
    grid: &Grid,
    params: &OuParameters,
    estimator: Estimator,
    reps: usize,
    seed: u64,
) -> Result<EstimatorCovariance> {
    if reps < MIN_MONTE_CARLO_REPS {
        return Err(Error::Domain(format!(
            "Monte Carlo needs at least {MIN_MONTE_CARLO_REPS} replications, got {reps}"
        )));
    }
    let x = design_matrix(kind, grid);
    let s = ou_model::covariance_matrix(grid, params)?;
    let w = estimator_weights(&x, &s, estimator)?;
    let p = w.nrows();

    let mut sampler = PathSampler::with_rng(grid, params, ChaCha8Rng::seed_from_u64(seed))?;
    let mut path = DVector::zeros(grid.len());
    let mut estimates = Vec::with_capacity(reps * p);
    for _ in 0..reps {
        sampler.fill(path.as_mut_slice());
        let beta = &w * &path;
        estimates.extend_from_slice(beta.as_slice());
    }

    let r = reps as f64;
    let mut mean = vec![0.0; p];
    for e in estimates.chunks_exact(p) {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let mut cov = DMatrix::zeros(p, p);
    for e in estimates.chunks_exact(p) {
        for a in 0..p {
            for b in 0..p {
                cov[(a, b)] += (e[a] - mean[a]) * (e[b] - mean[b]);
            }
        }
    }
    Ok(EstimatorCovariance(cov / (r - 1.0)))
}

/// One closed-form value checked against both oracles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRow {
    pub spec: ModelSpec,
    pub n: usize,
    pub lambda: f64,
    pub sigma2: f64,
    pub closed_form: f64,
    pub gls: f64,
    pub ols: f64,
    pub rel_err_gls: f64,
    pub rel_err_ols: f64,
    /// Closest oracle within [`MATCH_TOLERANCE`], if any.
    pub verdict: Verdict,
    /// False when both oracles pass the gate, i.e. GLS and OLS coincide at
    /// this point and the row cannot tell them apart.
    pub discriminating: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Gls,
    Ols,
    Neither,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Gls => "GLS",
            Verdict::Ols => "OLS",
            Verdict::Neither => "NEITHER",
        })
    }
}

fn relative_error(value: f64, reference: f64) -> f64 {
    if value == reference {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// Sweep settings for [`verify_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationGrid {
    pub ns: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub sigma2s: Vec<f64>,
}

impl Default for VerificationGrid {
    fn default() -> Self {
        Self {
            ns: (3..=50).collect(),
            lambdas: vec![0.01, 0.1, 1.0, 5.0, 20.0, 100.0, 150.0],
            sigma2s: vec![1.0],
        }
    }
}

/// Summary of a sweep: every row and the per-spec verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
    pub per_spec: Vec<SpecVerdict>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecVerdict {
    pub spec: ModelSpec,
    /// The single verdict of all rows of this spec, or `None` if they differ.
    pub verdict: Option<Verdict>,
    pub rows: usize,
    pub discriminating_rows: usize,
    pub max_rel_err: f64,
}

/// Checks `closed_form(spec, n, lambda)` (unit variance, scaled by sigma2
/// here) against the dense GLS and OLS oracles over the grid. The sweep
/// passes when no row is `NEITHER` and each spec has one uniform verdict.
pub fn verify_sweep<F>(grid: &VerificationGrid, closed_form: F) -> Result<VerificationReport>
where
    F: Fn(ModelSpec, usize, f64) -> Result<f64>,
{
    let mut rows = Vec::new();
    for &sigma2 in &grid.sigma2s {
        for kind in ModelKind::ALL {
            for &n in &grid.ns {
                let g = Grid::new(n)?;
                let x = design_matrix(kind, &g);
                for &lambda in &grid.lambdas {
                    let params = OuParameters::new(lambda, sigma2)?;
                    let s = ou_model::covariance_matrix(&g, &params)?;
                    let gls = gls_covariance(&x, &s)?;
                    let ols = ols_sandwich_covariance(&x, &s)?;
                    for spec in ModelSpec::ALL.iter().copied().filter(|s| s.kind() == kind) {
                        let cf = closed_form(spec, n, lambda)? * sigma2;
                        let (g_val, o_val) = (gls.entry(spec), ols.entry(spec));
                        let (eg, eo) = (relative_error(cf, g_val), relative_error(cf, o_val));
                        let (g_ok, o_ok) = (eg <= MATCH_TOLERANCE, eo <= MATCH_TOLERANCE);
                        let verdict = match (g_ok, o_ok) {
                            (true, true) if eo < eg => Verdict::Ols,
                            (true, _) => Verdict::Gls,
                            (false, true) => Verdict::Ols,
                            (false, false) => Verdict::Neither,
                        };
                        rows.push(VerificationRow {
                            spec,
                            n,
                            lambda,
                            sigma2,
                            closed_form: cf,
                            gls: g_val,
                            ols: o_val,
                            rel_err_gls: eg,
                            rel_err_ols: eo,
                            verdict,
                            discriminating: !(g_ok && o_ok),
                        });
                    }
                }
            }
        }
    }

    let per_spec: Vec<SpecVerdict> = ModelSpec::ALL
        .iter()
        .map(|&spec| {
            let mine: Vec<&VerificationRow> = rows.iter().filter(|r| r.spec == spec).collect();
            // non-discriminating rows agree with either oracle, so the
            // discriminating ones decide
            let decisive: Vec<&&VerificationRow> =
                mine.iter().filter(|r| r.discriminating).collect();
            let pool: Vec<Verdict> = if decisive.is_empty() {
                mine.iter().map(|r| r.verdict).collect()
            } else {
                decisive.iter().map(|r| r.verdict).collect()
            };
            let uniform = pool
                .first()
                .copied()
                .filter(|v| pool.iter().all(|w| w == v));
            let max_rel_err = mine
                .iter()
                .map(|r| match uniform {
                    Some(Verdict::Ols) => r.rel_err_ols,
                    _ => r.rel_err_gls,
                })
                .fold(0.0, f64::max);
            SpecVerdict {
                spec,
                verdict: uniform,
                rows: mine.len(),
                discriminating_rows: decisive.len(),
                max_rel_err,
            }
        })
        .collect();

    let passed = rows.iter().all(|r| r.verdict != Verdict::Neither)
        && per_spec
            .iter()
            .all(|s| matches!(s.verdict, Some(Verdict::Gls) | Some(Verdict::Ols)));
    Ok(VerificationReport {
        rows,
        per_spec,
        passed,
    })
}

/// [`verify_sweep`] against the shipped closed forms.
pub fn verify_closed_forms(grid: &VerificationGrid) -> Result<VerificationReport> {
    verify_sweep(grid, variance_formulas::actual_variance)
}
