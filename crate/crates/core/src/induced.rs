//! First-return machinery for the intermittent map: the induced map on
//! [1/2, 1), accumulated return times, and Birkhoff estimation of the
//! invariant measure.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::lab::derive_substream;
use crate::maps::{mp_in_right_branch, mp_step, sample_mp_point, MpAlpha, PrecisionReal, ValueStream};
use crate::stats::mean;
use crate::{Error, Result};

/// Step guard for a single return: left-branch escape times are finite off
/// a null set but unbounded, so hitting the guard is reported, not dropped.
pub const RETURN_GUARD: u64 = 1_000_000_000;

/// Piecewise-linear CDF built from binned visit frequencies.
///
/// `edges` has one more entry than `cum`; `cum[i]` is the mass of
/// `[edges[0], edges[i+1])`. Queries interpolate linearly inside bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    pub edges: Vec<f64>,
    pub cum: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_masses(edges: Vec<f64>, masses: &[f64]) -> Result<Self> {
        if edges.len() != masses.len() + 1 {
            return Err(Error::Domain(
                "edges must have one more entry than masses".into(),
            ));
        }
        let mut cum = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for m in masses {
            if *m < 0.0 {
                return Err(Error::Domain("negative bin mass".into()));
            }
            acc += m;
            cum.push(acc);
        }
        Ok(EmpiricalCdf { edges, cum })
    }

    /// F(x): mass of [edges[0], x), linear within bins.
    pub fn value(&self, x: f64) -> f64 {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return *self.cum.last().unwrap();
        }
        let i = match self.edges.binary_search_by(|e| e.total_cmp(&x)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let left = if i == 0 { 0.0 } else { self.cum[i - 1] };
        let frac = (x - self.edges[i]) / (self.edges[i + 1] - self.edges[i]);
        left + frac * (self.cum[i] - left)
    }

    /// Interval mass F(b) − F(a).
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        (self.value(b) - self.value(a)).max(0.0)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap())
    }
}

/// Advance `x` (in [1/2, 1)) until it re-enters [1/2, 1); returns the
/// number of steps taken. `x` ends at the re-entry point.
pub fn first_return(x: &mut PrecisionReal, alpha: &MpAlpha) -> Result<u64> {
    assert!(mp_in_right_branch(x), "base point must lie in [1/2, 1)");
    let mut steps = 0u64;
    loop {
        mp_step(x, alpha);
        steps += 1;
        if x.is_zero() {
            return Err(Error::ExceptionalPoint);
        }
        if mp_in_right_branch(x) {
            return Ok(steps);
        }
        if steps >= RETURN_GUARD {
            return Err(Error::ReturnGuard { steps });
        }
    }
}

/// Return times of the induced map along one base orbit.
#[derive(Debug, Clone, Serialize)]
pub struct ReturnTrace {
    pub alpha: f64,
    /// R(S^j x) for j = 0..k
    pub returns: Vec<u64>,
    /// R_k = sum of the first k returns (strictly increasing)
    pub partial_sums: Vec<u64>,
}

/// Accumulate `k` returns from `x0` in [1/2, 1). At each index listed in
/// `checkpoints` the conjugacy S^k(x) = g^{R_k}(x) is re-verified by
/// iterating the raw map R_k times from the start; disagreement beyond
/// 2^{-prec/2} is a hard error.
pub fn return_sums(
    x0: &PrecisionReal,
    alpha: &MpAlpha,
    k: usize,
    checkpoints: &[usize],
) -> Result<ReturnTrace> {
    assert!(k >= 1);
    let mut x = x0.clone();
    let mut returns = Vec::with_capacity(k);
    let mut partial_sums = Vec::with_capacity(k);
    let mut total = 0u64;
    let tol = 2f64.powi(-(x0.prec() as i32) / 2);
    for j in 1..=k {
        let r = first_return(&mut x, alpha)?;
        total += r;
        returns.push(r);
        partial_sums.push(total);
        if checkpoints.contains(&j) {
            let mut direct = x0.clone();
            for _ in 0..total {
                mp_step(&mut direct, alpha);
            }
            let gap = (direct.value_f64() - x.value_f64()).abs();
            if gap > tol {
                return Err(Error::Domain(format!(
                    "induced/direct orbit mismatch {gap:.3e} at checkpoint {j}"
                )));
            }
        }
    }
    Ok(ReturnTrace {
        alpha: alpha.value(),
        returns,
        partial_sums,
    })
}

/// Distribution summary of the accumulated return time R_n.
#[derive(Debug, Clone, Serialize)]
pub struct RnStats {
    pub alpha: f64,
    pub n: usize,
    pub samples: u64,
    /// C values (alpha < 1) or kappa values (alpha >= 1)
    pub grid: Vec<f64>,
    /// fraction with n <= R_n <= C n, or with log R_n / log n in
    /// [alpha-kappa, alpha+kappa], per grid entry
    pub fractions: Vec<f64>,
    /// per-sample growth exponent log R_n / log n (infinite if censored)
    pub exponents: Vec<f64>,
    /// samples whose R_n exceeded the censoring cap implied by the grid;
    /// they fail every grid entry by construction
    pub censored: u64,
    pub mean_exponent: f64,
}

/// Monte Carlo R_n statistics from base points on [1/2, 1). Orbits whose
/// R_n provably exceeds every grid bound are censored early at the cap
/// instead of being run to completion.
pub fn rn_exponent_stats(
    alpha: &MpAlpha,
    n: usize,
    samples: usize,
    master_seed: u64,
    prec: u32,
    grid: &[f64],
) -> Result<RnStats> {
    assert!(n >= 10 && !grid.is_empty());
    let a = alpha.value();
    let grid_max = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // any R_n above the cap lies outside every grid interval
    let cap = if a < 1.0 {
        (grid_max * n as f64).ceil() as u64 + 1
    } else {
        (n as f64).powf(a + grid_max).ceil() as u64 + 1
    };
    let per_sample: Result<Vec<Option<u64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut attempt = 0usize;
            loop {
                match rn_one_sample(alpha, n, master_seed, i + attempt * samples, prec, cap) {
                    Ok(rn) => return Ok(rn),
                    Err(Error::ExceptionalPoint) if attempt < 16 => attempt += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let rn_values = per_sample?;
    let censored = rn_values.iter().filter(|r| r.is_none()).count() as u64;
    let exponents: Vec<f64> = rn_values
        .iter()
        .map(|r| match r {
            Some(r) => (*r as f64).ln() / (n as f64).ln(),
            None => f64::INFINITY,
        })
        .collect();
    debug_assert!(rn_values.iter().flatten().all(|&r| r >= n as u64));
    let fractions = grid
        .iter()
        .map(|&g| {
            let ok = rn_values
                .iter()
                .zip(&exponents)
                .filter(|(r, &e)| match r {
                    // n <= R_n always holds (each return is >= 1 step)
                    Some(r) if a < 1.0 => (*r as f64) <= g * n as f64,
                    Some(_) => (a - g..=a + g).contains(&e),
                    None => false,
                })
                .count();
            ok as f64 / exponents.len() as f64
        })
        .collect();
    let finite: Vec<f64> = exponents.iter().cloned().filter(|e| e.is_finite()).collect();
    Ok(RnStats {
        alpha: a,
        n,
        samples: samples as u64,
        grid: grid.to_vec(),
        fractions,
        mean_exponent: mean(&finite),
        exponents,
        censored,
    })
}

fn rn_one_sample(
    alpha: &MpAlpha,
    n: usize,
    master_seed: u64,
    draw: usize,
    prec: u32,
    cap: u64,
) -> Result<Option<u64>> {
    let key = derive_substream(master_seed, &format!("mp-returns/{draw}"));
    let mut rng = ChaCha12Rng::from_seed(key);
    let mut x = sample_mp_point(&mut rng, alpha, prec, 1000)?;
    // first entry into the base [1/2, 1)
    let mut guard = 0u64;
    while !mp_in_right_branch(&x) {
        mp_step(&mut x, alpha);
        if x.is_zero() {
            return Err(Error::ExceptionalPoint);
        }
        guard += 1;
        if guard >= RETURN_GUARD {
            return Err(Error::ReturnGuard { steps: guard });
        }
    }
    let mut total = 0u64;
    let mut returns = 0usize;
    while returns < n {
        mp_step(&mut x, alpha);
        total += 1;
        if x.is_zero() {
            return Err(Error::ExceptionalPoint);
        }
        if mp_in_right_branch(&x) {
            returns += 1;
        }
        if total > cap {
            return Ok(None);
        }
    }
    Ok(Some(total))
}

/// Binned visit frequencies of a trajectory after burn-in, normalized over
/// the partition range (so restricted partitions estimate the normalized
/// induced measure).
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalMeasure {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub steps: u64,
    pub burn_in: u64,
    pub seeds: u64,
    /// raw visit counts per bin, summed over seeds
    pub counts: Vec<u64>,
}

impl EmpiricalMeasure {
    pub fn to_cdf(&self) -> Result<EmpiricalCdf> {
        EmpiricalCdf::from_masses(self.edges.clone(), &self.masses)
    }
}

/// Ergodic-average measure estimate, averaged over independent seeds.
/// Counts are integers summed in seed order, so the result is identical
/// for any worker count.
pub fn birkhoff_measure<S, F>(
    make_stream: F,
    seeds: usize,
    edges: &[f64],
    steps: u64,
    burn_in: u64,
) -> Result<EmpiricalMeasure>
where
    S: ValueStream,
    F: Fn(usize) -> Result<S> + Sync,
{
    assert!(edges.len() >= 2 && edges.windows(2).all(|w| w[0] < w[1]));
    let per_seed: Result<Vec<Vec<u64>>> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let mut attempt = 0usize;
            loop {
                match birkhoff_counts(&make_stream, i + attempt * seeds, edges, steps, burn_in) {
                    Ok(c) => return Ok(c),
                    Err(Error::ExceptionalPoint) if attempt < 16 => attempt += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let per_seed = per_seed?;
    let mut counts = vec![0u64; edges.len() - 1];
    for c in &per_seed {
        for (acc, v) in counts.iter_mut().zip(c) {
            *acc += v;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("no trajectory point fell in the partition".into()));
    }
    let masses = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(EmpiricalMeasure {
        edges: edges.to_vec(),
        masses,
        steps,
        burn_in,
        seeds: seeds as u64,
        counts,
    })
}

fn birkhoff_counts<S: ValueStream>(
    make_stream: &impl Fn(usize) -> Result<S>,
    draw: usize,
    edges: &[f64],
    steps: u64,
    burn_in: u64,
) -> Result<Vec<u64>> {
    let mut stream = make_stream(draw)?;
    for _ in 0..burn_in {
        stream.advance()?;
    }
    let lo = edges[0];
    let hi = *edges.last().unwrap();
    let mut counts = vec![0u64; edges.len() - 1];
    for _ in 0..steps {
        let v = stream.value()?;
        if v >= lo && v < hi {
            let i = match edges.binary_search_by(|e| e.total_cmp(&v)) {
                Ok(i) => i,
                Err(i) => i - 1,
            };
            let i = i.min(counts.len() - 1);
            counts[i] += 1;
        }
        stream.advance()?;
    }
    Ok(counts)
}

#[cfg(test)]
mod cdf_tests {
    use super::*;

    #[test]
    fn uniform_cdf_is_identity() {
        let edges: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let cdf = EmpiricalCdf::from_masses(edges, &[0.1; 10]).unwrap();
        for x in [0.0, 0.05, 0.33, 0.5, 0.999, 1.0] {
            assert!((cdf.value(x) - x).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn interval_mass_is_nonnegative_and_additive() {
        let edges = vec![0.0, 0.25, 0.5, 1.0];
        let cdf = EmpiricalCdf::from_masses(edges, &[0.5, 0.3, 0.2]).unwrap();
        let total = cdf.interval(0.0, 1.0);
        assert!((total - 1.0).abs() < 1e-12);
        let sum = cdf.interval(0.0, 0.4) + cdf.interval(0.4, 1.0);
        assert!((sum - total).abs() < 1e-12);
    }
}
