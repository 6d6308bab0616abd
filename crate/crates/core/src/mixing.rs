//! Empirical correlation decay estimation and model fitting.
//!
//! The fitted decay model feeds [`crate::targets::classify`]: an
//! exponential rate or a polynomial exponent for the correlation bound
//! |∫ f∘Tⁿ g dμ − ∫f dμ ∫g dμ| ≤ ‖f‖₁ ‖g‖_BV p(n).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::maps::ValueStream;
use crate::stats::{linear_fit, mean, pairwise_sum};
use crate::Result;

/// Fitted form of the correlation bound p(n).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum DecayModel {
    /// p(n) ≤ C e^{-rate·n}
    Exponential {
        rate: f64,
        rate_se: f64,
        amplitude: f64,
    },
    /// p(n) ≤ C / n^exponent
    Polynomial {
        exponent: f64,
        exponent_se: f64,
        amplitude: f64,
    },
    /// Series indistinguishable from noise.
    Unknown,
}

/// Indicator of a finite union of half-open intervals; total variation of
/// such an indicator is at most 2 × (number of intervals), so these are
/// always admissible BV observables.
#[derive(Debug, Clone)]
pub struct IntervalIndicator {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalIndicator {
    pub fn new(intervals: Vec<(f64, f64)>) -> Self {
        for &(a, b) in &intervals {
            assert!((0.0..=1.0).contains(&a) && a < b && b <= 1.0);
        }
        IntervalIndicator { intervals }
    }

    pub fn eval(&self, x: f64) -> f64 {
        for &(a, b) in &self.intervals {
            if x >= a && x < b {
                return 1.0;
            }
        }
        0.0
    }

    pub fn variation_bound(&self) -> f64 {
        2.0 * self.intervals.len() as f64
    }
}

/// A pair of BV observables for a correlation estimate.
#[derive(Debug, Clone)]
pub struct ObservablePair {
    pub f: IntervalIndicator,
    pub g: IntervalIndicator,
}

/// One correlation estimate with its standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CorrelationEstimate {
    pub lag: usize,
    pub rho: f64,
    pub se: f64,
    pub samples: u64,
}

/// Estimate |∫ f∘Tⁿ g dμ − ∫f ∫g| from `orbits` independent stationary
/// orbits, each contributing a time series of `series_len` values.
///
/// Per orbit the three means (f∘Tⁿ·g, f, g) come from the same series;
/// the per-orbit correlation estimates are averaged and their spread gives
/// the standard error.
pub fn empirical_correlation<S, F>(
    mut make_orbit: F,
    pair: &ObservablePair,
    lag: usize,
    orbits: usize,
    series_len: usize,
) -> Result<CorrelationEstimate>
where
    S: ValueStream,
    F: FnMut(usize) -> Result<S>,
{
    assert!(series_len > lag + 1);
    let mut per_orbit = Vec::with_capacity(orbits);
    for i in 0..orbits {
        let mut orbit = make_orbit(i)?;
        let mut values = Vec::with_capacity(series_len);
        for _ in 0..series_len {
            values.push(orbit.value()?);
            orbit.advance()?;
        }
        let pairs: Vec<f64> = (0..series_len - lag)
            .map(|k| pair.f.eval(values[k + lag]) * pair.g.eval(values[k]))
            .collect();
        let fs: Vec<f64> = values.iter().map(|&v| pair.f.eval(v)).collect();
        let gs: Vec<f64> = values.iter().map(|&v| pair.g.eval(v)).collect();
        per_orbit.push(mean(&pairs) - mean(&fs) * mean(&gs));
    }
    let rho_signed = mean(&per_orbit);
    let se = if orbits > 1 {
        crate::stats::sample_std(&per_orbit) / (orbits as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(CorrelationEstimate {
        lag,
        rho: rho_signed.abs(),
        se,
        samples: (orbits * series_len) as u64,
    })
}

/// Cross-check estimator: fresh pair of points per sample, no long series.
/// Slower per effective sample but free of serial correlation.
pub fn empirical_correlation_fresh<S, F>(
    mut make_orbit: F,
    pair: &ObservablePair,
    lag: usize,
    samples: usize,
) -> Result<CorrelationEstimate>
where
    S: ValueStream,
    F: FnMut(usize) -> Result<S>,
{
    let mut prods = Vec::with_capacity(samples);
    let mut fs = Vec::with_capacity(samples);
    let mut gs = Vec::with_capacity(samples);
    for i in 0..samples {
        let mut orbit = make_orbit(i)?;
        let x0 = orbit.value()?;
        for _ in 0..lag {
            orbit.advance()?;
        }
        let xn = orbit.value()?;
        prods.push(pair.f.eval(xn) * pair.g.eval(x0));
        fs.push(pair.f.eval(xn));
        gs.push(pair.g.eval(x0));
    }
    let rho = (mean(&prods) - mean(&fs) * mean(&gs)).abs();
    let centered: Vec<f64> = prods.iter().map(|p| p - mean(&prods)).collect();
    let se = (pairwise_sum(&centered.iter().map(|c| c * c).collect::<Vec<_>>())
        / (samples as f64 - 1.0))
        .sqrt()
        / (samples as f64).sqrt();
    Ok(CorrelationEstimate {
        lag,
        rho,
        se,
        samples: samples as u64,
    })
}

/// Outcome of fitting both decay families to a correlation series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub exp_rss: f64,
    pub poly_rss: f64,
    pub lags_used: Vec<usize>,
    pub noise_floor: f64,
}

/// Fit exponential (log-linear) and polynomial (log-log) decay to the
/// estimates and keep the family with the smaller residual.
///
/// Only lags whose ρ̂ exceeds the noise floor (3 × pooled standard error)
/// enter the fits; fewer than 5 usable lags yields `Unknown`.
pub fn fit_decay(series: &[CorrelationEstimate]) -> DecayFit {
    let pooled_se = {
        let ses: Vec<f64> = series.iter().map(|e| e.se * e.se).collect();
        (pairwise_sum(&ses) / ses.len() as f64).sqrt()
    };
    let noise_floor = 3.0 * pooled_se;
    let usable: Vec<&CorrelationEstimate> = series
        .iter()
        .filter(|e| e.lag >= 1 && e.rho > noise_floor && e.rho > 0.0)
        .collect();
    let lags_used: Vec<usize> = usable.iter().map(|e| e.lag).collect();
    if usable.len() < 5 {
        return DecayFit {
            model: DecayModel::Unknown,
            exp_rss: f64::NAN,
            poly_rss: f64::NAN,
            lags_used,
            noise_floor,
        };
    }
    let ns: Vec<f64> = usable.iter().map(|e| e.lag as f64).collect();
    let log_ns: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let log_rhos: Vec<f64> = usable.iter().map(|e| e.rho.ln()).collect();

    let exp_fit = linear_fit(&ns, &log_rhos);
    let poly_fit = linear_fit(&log_ns, &log_rhos);

    let model = if exp_fit.rss <= poly_fit.rss {
        DecayModel::Exponential {
            rate: -exp_fit.slope,
            rate_se: exp_fit.slope_se,
            amplitude: exp_fit.intercept.exp(),
        }
    } else {
        DecayModel::Polynomial {
            exponent: -poly_fit.slope,
            exponent_se: poly_fit.slope_se,
            amplitude: poly_fit.intercept.exp(),
        }
    };
    DecayFit {
        model,
        exp_rss: exp_fit.rss,
        poly_rss: poly_fit.rss,
        lags_used,
        noise_floor,
    }
}

/// Lag grid, estimator choice and sizes for a correlation-decay run.
pub fn decay_series_doubling(
    pair: &ObservablePair,
    lags: &[usize],
    orbits: usize,
    series_len: usize,
    master_seed: u64,
) -> Result<Vec<CorrelationEstimate>> {
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        let est = empirical_correlation(
            |i| {
                let seed = crate::lab::derive_substream(master_seed, &format!("corr/{lag}/{i}"));
                Ok(crate::maps::BinaryOrbit::random(
                    ChaCha12Rng::from_seed(seed),
                ))
            },
            pair,
            lag,
            orbits,
            series_len,
        )?;
        out.push(est);
    }
    Ok(out)
}

/// Synthetic correlation series with planted decay and additive noise,
/// for estimator roundtrip checks.
pub fn synthetic_series(
    shape: impl Fn(f64) -> f64,
    lags: &[usize],
    noise_sd: f64,
    seed: u64,
) -> Vec<CorrelationEstimate> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    lags.iter()
        .map(|&lag| {
            let noise: f64 = rng.gen_range(-1.0..1.0) * noise_sd;
            CorrelationEstimate {
                lag,
                rho: (shape(lag as f64) + noise).max(0.0),
                se: noise_sd.max(1e-12),
                samples: 0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_exponential_recovered() {
        let lags: Vec<usize> = (1..=20).collect();
        let series = synthetic_series(|n| 3.0 * (-0.7 * n).exp(), &lags, 0.0, 1);
        let fit = fit_decay(&series);
        match fit.model {
            DecayModel::Exponential { rate, .. } => {
                assert!((rate - 0.7).abs() < 0.01, "rate={rate}")
            }
            other => panic!("expected exponential, got {other:?}"),
        }
    }

    #[test]
    fn planted_polynomial_recovered() {
        let lags: Vec<usize> = (1..=30).collect();
        let series = synthetic_series(|n| n.powf(-2.0), &lags, 0.0, 2);
        let fit = fit_decay(&series);
        match fit.model {
            DecayModel::Polynomial { exponent, .. } => {
                assert!((exponent - 2.0).abs() < 0.05, "exponent={exponent}")
            }
            other => panic!("expected polynomial, got {other:?}"),
        }
    }

    #[test]
    fn all_noise_gives_unknown() {
        let lags: Vec<usize> = (1..=20).collect();
        let series: Vec<CorrelationEstimate> = lags
            .iter()
            .map(|&lag| CorrelationEstimate {
                lag,
                rho: 1e-6,
                se: 1e-3,
                samples: 0,
            })
            .collect();
        assert_eq!(fit_decay(&series).model, DecayModel::Unknown);
    }

    #[test]
    fn doubling_lag_zero_is_variance_of_fair_bit() {
        let pair = ObservablePair {
            f: IntervalIndicator::new(vec![(0.0, 0.5)]),
            g: IntervalIndicator::new(vec![(0.0, 0.5)]),
        };
        let series = decay_series_doubling(&pair, &[0], 20, 4000, 99).unwrap();
        // lag 0: E[f g] - E[f]E[g] = 1/2 - 1/4 = 1/4
        assert!((series[0].rho - 0.25).abs() < 3.0 * series[0].se.max(0.005));
    }

    #[test]
    fn doubling_dyadic_indicators_decorrelate_past_depth() {
        // depth-1 dyadic indicators depend only on the first bit; bits of a
        // Lebesgue point are independent, so every positive lag is 0
        let pair = ObservablePair {
            f: IntervalIndicator::new(vec![(0.0, 0.5)]),
            g: IntervalIndicator::new(vec![(0.5, 1.0)]),
        };
        for lag in [1usize, 2, 5] {
            let series = decay_series_doubling(&pair, &[lag], 20, 4000, 7).unwrap();
            assert!(
                series[0].rho < 3.0 * series[0].se,
                "lag={lag} rho={} se={}",
                series[0].rho,
                series[0].se
            );
        }
    }

    #[test]
    fn estimators_agree_on_doubling_lag_one() {
        let pair = ObservablePair {
            f: IntervalIndicator::new(vec![(0.0, 0.5)]),
            g: IntervalIndicator::new(vec![(0.0, 0.5)]),
        };
        let long = decay_series_doubling(&pair, &[1], 20, 4000, 11).unwrap();
        let fresh = empirical_correlation_fresh(
            |i| {
                let seed = crate::lab::derive_substream(11, &format!("corr-fresh/{i}"));
                Ok(crate::maps::BinaryOrbit::random(
                    ChaCha12Rng::from_seed(seed),
                ))
            },
            &pair,
            1,
            20_000,
        )
        .unwrap();
        let tol = 3.0 * (long[0].se.max(0.005) + fresh.se);
        assert!(
            (long[0].rho - fresh.rho).abs() < tol,
            "long={} fresh={} tol={tol}",
            long[0].rho,
            fresh.rho
        );
    }

    #[test]
    fn symmetric_at_lag_zero() {
        let pair_fg = ObservablePair {
            f: IntervalIndicator::new(vec![(0.0, 0.25)]),
            g: IntervalIndicator::new(vec![(0.125, 0.75)]),
        };
        let pair_gf = ObservablePair {
            f: pair_fg.g.clone(),
            g: pair_fg.f.clone(),
        };
        let a = decay_series_doubling(&pair_fg, &[0], 10, 2000, 5).unwrap();
        let b = decay_series_doubling(&pair_gf, &[0], 10, 2000, 5).unwrap();
        assert!((a[0].rho - b[0].rho).abs() < 1e-12);
    }
}
