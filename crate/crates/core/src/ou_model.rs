//! Ornstein-Uhlenbeck error structure on an evenly spaced grid over `[0, 1]`.
//!
//! With `n` observations at `t_k = (k - 1) / (n - 1)` the OU covariance
//! `sigma2 * exp(-lambda * |t_i - t_j|)` becomes the AR(1) form
//! `sigma2 * rho^|i - j|` with `rho = exp(-lambda / (n - 1))`.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded through `seed_from_u64`, and
//! normal variates from the ziggurat sampler in `rand_distr`. Both are
//! platform independent, so a seed reproduces the same path everywhere.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Smallest sample size accepted by the planning operations.
pub const MIN_GRID_POINTS: usize = 3;

/// OU covariance parameters: mean-reversion rate and overall variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParameters {
    lambda: f64,
    sigma2: f64,
}

impl OuParameters {
    pub fn new(lambda: f64, sigma2: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        Ok(Self { lambda, sigma2 })
    }

    /// Unit overall variance.
    pub fn with_lambda(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// `n` evenly spaced observation times on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Time of the zero-based observation `k`.
    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            1.0
        } else {
            k as f64 / (self.n - 1) as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.time(k)).collect()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "lambda must be positive and finite, got {lambda}"
        )))
    }
}

/// Lag-one correlation `exp(-lambda / (n - 1))` of the OU process sampled at
/// `n` evenly spaced points on `[0, 1]`.
///
/// Underflows to exactly zero once `lambda / (n - 1)` exceeds roughly 745.
pub fn rho(n: usize, lambda: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("rho needs n >= 2, got {n}")));
    }
    check_lambda(lambda)?;
    Ok((-lambda / (n - 1) as f64).exp())
}

/// `1 - rho`, computed without cancellation when `rho` is close to one.
pub(crate) fn one_minus_rho(n: usize, lambda: f64) -> f64 {
    -(-lambda / (n - 1) as f64).exp_m1()
}

/// Dense AR(1) covariance `sigma2 * rho^|i - j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    rho: f64,
    sigma2: f64,
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Builds the Toeplitz matrix from a lag-one correlation directly.
    pub fn from_rho(n: usize, rho: f64, sigma2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Domain(format!("rho must lie in [0, 1), got {rho}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        // powers of rho by lag, shared by every diagonal
        let mut lags = Vec::with_capacity(n);
        let mut p = 1.0;
        for _ in 0..n {
            lags.push(sigma2 * p);
            p *= rho;
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
        Ok(Self {
            rho,
            sigma2,
            matrix,
        })
    }

    pub fn identity(n: usize, sigma2: f64) -> Result<Self> {
        Self::from_rho(n, 0.0, sigma2)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// OU covariance of the errors on `grid`: entry `(i, j)` is
/// `sigma2 * exp(-lambda * |i - j| / (n - 1))`.
pub fn covariance_matrix(grid: &Grid, params: &OuParameters) -> Result<CovarianceMatrix> {
    let r = rho(grid.len(), params.lambda())?;
    let n = grid.len();
    let step = params.lambda() / (n - 1) as f64;
    // exp per lag rather than repeated products keeps entry (1, n) at exactly
    // sigma2 * exp(-lambda)
    let lags: Vec<f64> = (0..n)
        .map(|d| params.sigma2() * (-step * d as f64).exp())
        .collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
    Ok(CovarianceMatrix {
        rho: r,
        sigma2: params.sigma2(),
        matrix,
    })
}

/// Draws stationary OU paths on a fixed grid from one random stream.
#[derive(Debug, Clone)]
pub struct PathSampler {
    n: usize,
    rho: f64,
    sd: f64,
    innovation_sd: f64,
    rng: ChaCha8Rng,
}

impl PathSampler {
    pub fn new(grid: &Grid, params: &OuParameters, seed: u64) -> Result<Self> {
        Self::with_rng(grid, params, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(grid: &Grid, params: &OuParameters, rng: ChaCha8Rng) -> Result<Self> {
        let r = rho(grid.len(), params.lambda())?;
        let q = one_minus_rho(grid.len(), params.lambda());
        Ok(Self {
            n: grid.len(),
            rho: r,
            sd: params.sigma2().sqrt(),
            innovation_sd: (params.sigma2() * q * (1.0 + r)).sqrt(),
            rng,
        })
    }

    /// Overwrites `out` (length `n`) with a fresh path.
    pub fn fill(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.n, "path buffer has the wrong length");
        let z: f64 = self.rng.sample(StandardNormal);
        out[0] = self.sd * z;
        for k in 1..self.n {
            let z: f64 = self.rng.sample(StandardNormal);
            out[k] = self.rho * out[k - 1] + self.innovation_sd * z;
        }
    }

    pub fn next_path(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.fill(&mut out);
        out
    }
}

/// One stationary path: `e_1 ~ N(0, sigma2)`, then
/// `e_k = rho * e_{k-1} + sqrt(sigma2 * (1 - rho^2)) * z_k`.
pub fn simulate_path(grid: &Grid, params: &OuParameters, seed: u64) -> Result<Vec<f64>> {
    Ok(PathSampler::new(grid, params, seed)?.next_path())
}
