//! Space-filling designs over the `(n, lambda)` planning box.
//!
//! Designs are Latin hypercubes on the unit square: each axis is cut into
//! `n_points` equal strata and every stratum holds exactly one point, at its
//! midpoint. Each restart draws a random pair of stratum permutations and
//! then improves it by coordinate swaps between points, which keep the
//! Latin property. A swap is accepted when it lowers the Morris-Mitchell
//! criterion `sum d_ij^-p` with `p = 50`, a smooth stand-in for the minimum
//! distance. Restarts run in parallel; the one with the largest minimum
//! pairwise distance wins, ties going to the lowest restart index.
//!
//! The winning design is mapped to the box, `n` rounded to an integer and
//! `lambda` to two decimals. Points that collide after rounding are dropped,
//! keeping the first occurrence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub const N_MIN: usize = 3;
pub const N_MAX: usize = 50;
pub const LAMBDA_MIN: f64 = 0.001;
pub const LAMBDA_MAX: f64 = 150.0;

pub const DEFAULT_POINTS: usize = 200;
pub const DEFAULT_RESTARTS: usize = 50;
pub const MIN_POINTS: usize = 10;

/// Exponent of the Morris-Mitchell criterion used by the swap search.
const PHI_EXPONENT: i32 = 50;
/// Swap proposals per point in each restart.
const SWAPS_PER_POINT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint {
    pub n: usize,
    pub lambda: f64,
}

impl DesignPoint {
    /// Coordinates after scaling each axis of the box to `[0, 1]`.
    pub fn unit(&self) -> [f64; 2] {
        [
            (self.n as f64 - N_MIN as f64) / (N_MAX - N_MIN) as f64,
            (self.lambda - LAMBDA_MIN) / (LAMBDA_MAX - LAMBDA_MIN),
        ]
    }

    pub fn ratio(&self) -> f64 {
        self.lambda / self.n as f64
    }
}

/// How a design was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DesignProvenance {
    pub n_points: usize,
    pub seed: u64,
    pub restarts: usize,
}

/// Rounded, deduplicated design points with their quality metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Design {
    points: Vec<DesignPoint>,
    min_pairwise_distance: f64,
    centered_l2_discrepancy: f64,
    provenance: Option<DesignProvenance>,
}

impl Design {
    /// Validates, deduplicates and measures a set of points.
    pub fn from_points(points: Vec<DesignPoint>) -> Result<Self> {
        let mut kept: Vec<DesignPoint> = Vec::with_capacity(points.len());
        for p in points {
            if !(N_MIN..=N_MAX).contains(&p.n) || !(LAMBDA_MIN..=LAMBDA_MAX).contains(&p.lambda) {
                return Err(Error::Domain(format!(
                    "design point (n={}, lambda={}) is outside the box",
                    p.n, p.lambda
                )));
            }
            if !kept.iter().any(|k| k.n == p.n && k.lambda == p.lambda) {
                kept.push(p);
            }
        }
        let min_pairwise_distance = min_pairwise_distance(&kept)?;
        let centered_l2_discrepancy = centered_l2_discrepancy(&kept)?;
        Ok(Self {
            points: kept,
            min_pairwise_distance,
            centered_l2_discrepancy,
            provenance: None,
        })
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        self.min_pairwise_distance
    }

    pub fn centered_l2_discrepancy(&self) -> f64 {
        self.centered_l2_discrepancy
    }

    pub fn provenance(&self) -> Option<DesignProvenance> {
        self.provenance
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn min_dist_unit(u: &[[f64; 2]]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            best = best.min(dist2(u[i], u[j]));
        }
    }
    best.sqrt()
}

/// Smallest Euclidean distance between two points on the unit-scaled box.
pub fn min_pairwise_distance(points: &[DesignPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Domain(format!(
            "minimum distance needs at least 2 points, got {}",
            points.len()
        )));
    }
    let u: Vec<[f64; 2]> = points.iter().map(DesignPoint::unit).collect();
    Ok(min_dist_unit(&u))
}

/// Squared centered L2 discrepancy (Hickernell) on the unit-scaled box,
/// the same quantity `scipy.stats.qmc.discrepancy(method="CD")` returns.
pub fn centered_l2_discrepancy(points: &[DesignPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Domain("discrepancy needs at least one point".into()));
    }
    let u: Vec<[f64; 2]> = points.iter().map(DesignPoint::unit).collect();
    Ok(centered_l2_unit(&u))
}

fn centered_l2_unit(u: &[[f64; 2]]) -> f64 {
    let m = u.len() as f64;
    let c: Vec<[f64; 2]> = u
        .iter()
        .map(|p| [(p[0] - 0.5).abs(), (p[1] - 0.5).abs()])
        .collect();
    let single: f64 = c
        .iter()
        .map(|a| {
            a.iter()
                .map(|&z| 1.0 + 0.5 * z - 0.5 * z * z)
                .product::<f64>()
        })
        .sum();
    let mut pairs = 0.0;
    for (i, a) in c.iter().enumerate() {
        for (j, b) in c.iter().enumerate() {
            let mut prod = 1.0;
            for k in 0..2 {
                prod *= 1.0 + 0.5 * a[k] + 0.5 * b[k] - 0.5 * (u[i][k] - u[j][k]).abs();
            }
            pairs += prod;
        }
    }
    (13.0f64 / 12.0).powi(2) - 2.0 / m * single + pairs / (m * m)
}

/// `d^-p` from a squared distance.
fn phi_term(d2: f64) -> f64 {
    d2.powi(-PHI_EXPONENT / 2)
}

/// Change in the criterion if coordinate `axis` of points `i` and `m` were
/// exchanged.
fn swap_delta(u: &[[f64; 2]], i: usize, m: usize, axis: usize) -> f64 {
    let mut pi = u[i];
    let mut pm = u[m];
    std::mem::swap(&mut pi[axis], &mut pm[axis]);
    let mut delta = 0.0;
    for (k, &pk) in u.iter().enumerate() {
        if k == i || k == m {
            continue;
        }
        delta += phi_term(dist2(pi, pk)) - phi_term(dist2(u[i], pk));
        delta += phi_term(dist2(pm, pk)) - phi_term(dist2(u[m], pk));
    }
    // the (i, m) distance is unchanged by a single-axis exchange
    delta
}

fn restart_design(n_points: usize, seed: u64, restart: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let mut axes = [
        (0..n_points).collect::<Vec<_>>(),
        (0..n_points).collect::<Vec<_>>(),
    ];
    for a in axes.iter_mut() {
        a.shuffle(&mut rng);
    }
    let width = 1.0 / n_points as f64;
    let mut u: Vec<[f64; 2]> = (0..n_points)
        .map(|i| {
            [
                (axes[0][i] as f64 + 0.5) * width,
                (axes[1][i] as f64 + 0.5) * width,
            ]
        })
        .collect();

    for _ in 0..SWAPS_PER_POINT * n_points {
        let i = rng.gen_range(0..n_points);
        let m = rng.gen_range(0..n_points);
        let axis = rng.gen_range(0..2);
        if i == m {
            continue;
        }
        if swap_delta(&u, i, m, axis) < 0.0 {
            let tmp = u[i][axis];
            u[i][axis] = u[m][axis];
            u[m][axis] = tmp;
        }
    }
    u
}

/// Unrounded maximin Latin hypercube on the unit square.
pub fn latin_hypercube_unit(n_points: usize, seed: u64, restarts: usize) -> Result<Vec<[f64; 2]>> {
    if n_points < MIN_POINTS {
        return Err(Error::Domain(format!(
            "a design needs at least {MIN_POINTS} points, got {n_points}"
        )));
    }
    if restarts == 0 {
        return Err(Error::Domain("at least one restart is required".into()));
    }
    let candidates: Vec<(f64, Vec<[f64; 2]>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let u = restart_design(n_points, seed, r);
            (min_dist_unit(&u), u)
        })
        .collect();
    // first strict maximum, so ties go to the lowest restart index
    let mut best = 0;
    for (r, (d, _)) in candidates.iter().enumerate() {
        if *d > candidates[best].0 {
            best = r;
        }
    }
    Ok(candidates
        .into_iter()
        .nth(best)
        .map(|(_, u)| u)
        .unwrap_or_default())
}

fn round_to_box(u: [f64; 2]) -> DesignPoint {
    let n = (N_MIN as f64 + u[0] * (N_MAX - N_MIN) as f64).round() as usize;
    let lambda = LAMBDA_MIN + u[1] * (LAMBDA_MAX - LAMBDA_MIN);
    let lambda = ((lambda * 100.0).round() / 100.0).clamp(0.01, LAMBDA_MAX);
    DesignPoint {
        n: n.clamp(N_MIN, N_MAX),
        lambda,
    }
}

/// Maximin Latin hypercube over the box, rounded and deduplicated.
pub fn latin_hypercube(n_points: usize, seed: u64, restarts: usize) -> Result<Design> {
    let u = latin_hypercube_unit(n_points, seed, restarts)?;
    let mut design = Design::from_points(u.into_iter().map(round_to_box).collect())?;
    design.provenance = Some(DesignProvenance {
        n_points,
        seed,
        restarts,
    });
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(n: usize, lambda: f64) -> DesignPoint {
        DesignPoint { n, lambda }
    }

    #[test]
    fn opposite_corners() {
        let d = min_pairwise_distance(&[pt(3, LAMBDA_MIN), pt(50, LAMBDA_MAX)]).unwrap();
        assert_relative_eq!(d, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn duplicate_points_have_zero_distance() {
        let d = min_pairwise_distance(&[pt(10, 4.0), pt(20, 9.0), pt(10, 4.0)]).unwrap();
        assert_eq!(d, 0.0);
        assert!(min_pairwise_distance(&[pt(10, 4.0)]).is_err());
    }

    #[test]
    fn from_points_drops_later_duplicates() {
        let d = Design::from_points(vec![pt(10, 4.0), pt(20, 9.0), pt(10, 4.0)]).unwrap();
        assert_eq!(d.points(), &[pt(10, 4.0), pt(20, 9.0)]);
        assert!(d.min_pairwise_distance() > 0.0);
        assert!(Design::from_points(vec![pt(2, 1.0), pt(4, 1.0)]).is_err());
    }

    /// Direct evaluation of the closed-form sums with explicit loops.
    fn cd2_brute(u: &[[f64; 2]]) -> f64 {
        let m = u.len() as f64;
        let mut s1 = 0.0;
        for p in u {
            let mut prod = 1.0;
            for &x in p {
                prod *= 1.0 + 0.5 * (x - 0.5).abs() - 0.5 * (x - 0.5).powi(2);
            }
            s1 += prod;
        }
        let mut s2 = 0.0;
        for p in u {
            for q in u {
                let mut prod = 1.0;
                for k in 0..2 {
                    prod *= 1.0 + 0.5 * (p[k] - 0.5).abs() + 0.5 * (q[k] - 0.5).abs()
                        - 0.5 * (p[k] - q[k]).abs();
                }
                s2 += prod;
            }
        }
        (13.0f64 / 12.0).powi(2) - 2.0 * s1 / m + s2 / (m * m)
    }

    #[test]
    fn discrepancy_of_center_point() {
        // one point at the center: (13/12)^2 - 2 + 1
        let u = [[0.5, 0.5]];
        let expected = cd2_brute(&u);
        assert_relative_eq!(expected, 169.0 / 144.0 - 1.0, epsilon = 1e-15);
        assert_relative_eq!(centered_l2_unit(&u), expected, epsilon = 1e-15);
    }

    #[test]
    fn discrepancy_matches_reference_value() {
        // scipy.stats.qmc.discrepancy(
        //   [[0.1, 0.2], [0.4, 0.9], [0.7, 0.5], [0.95, 0.05]], method="CD")
        let u = [[0.1, 0.2], [0.4, 0.9], [0.7, 0.5], [0.95, 0.05]];
        assert_relative_eq!(centered_l2_unit(&u), cd2_brute(&u), epsilon = 1e-14);
        assert_relative_eq!(centered_l2_unit(&u), 0.03961032986111079, epsilon = 1e-12);
    }

    #[test]
    fn discrepancy_is_order_free_and_prefers_spread() {
        let design = latin_hypercube(60, 3, 5).unwrap();
        let mut rev = design.points().to_vec();
        rev.reverse();
        assert_relative_eq!(
            centered_l2_discrepancy(&rev).unwrap(),
            design.centered_l2_discrepancy(),
            epsilon = 1e-14
        );
        let clumped: Vec<DesignPoint> = (0..60)
            .map(|k| pt(3 + k % 5, 0.01 + 0.01 * k as f64))
            .collect();
        assert!(centered_l2_discrepancy(&clumped).unwrap() > design.centered_l2_discrepancy());
    }

    #[test]
    fn strata_hold_one_point_each() {
        let n = 73;
        let u = latin_hypercube_unit(n, 11, 4).unwrap();
        for axis in 0..2 {
            let mut seen = vec![0; n];
            for p in &u {
                seen[(p[axis] * n as f64).floor() as usize] += 1;
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn generated_design_respects_box_and_is_deterministic() {
        let a = latin_hypercube(200, 42, 10).unwrap();
        for p in a.points() {
            assert!((N_MIN..=N_MAX).contains(&p.n));
            assert!((LAMBDA_MIN..=LAMBDA_MAX).contains(&p.lambda));
            assert_eq!(p.lambda, (p.lambda * 100.0).round() / 100.0);
        }
        assert_eq!(a, latin_hypercube(200, 42, 10).unwrap());
        assert_ne!(a, latin_hypercube(200, 43, 10).unwrap());
    }

    #[test]
    fn rejects_tiny_designs() {
        assert!(latin_hypercube(9, 1, 1).is_err());
        assert!(latin_hypercube(20, 1, 0).is_err());
    }
}
