//! Hitting-time and eventually-always-hitting estimators.
//!
//! Everything here works on orbit traces (distance-to-center sequences with
//! precomputed prefix minima), so a window check over all m in [n, M] costs
//! O(M) instead of O(M²).

use rayon::prelude::*;
use serde::Serialize;

use crate::maps::ValueStream;
use crate::stats::{binomial_ci_95, ks_statistic_on_grid};
use crate::targets::{radius_of, Geometry, TargetSchedule};
use crate::{Error, Result};

/// Distances of an orbit segment to the target center, with prefix minima.
#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub distances: Vec<f64>,
    pub prefix_min: Vec<f64>,
}

impl OrbitTrace {
    pub fn from_distances(distances: Vec<f64>) -> Self {
        let mut prefix_min = Vec::with_capacity(distances.len());
        let mut cur = f64::INFINITY;
        for &d in &distances {
            cur = cur.min(d);
            prefix_min.push(cur);
        }
        OrbitTrace {
            distances,
            prefix_min,
        }
    }

    /// Record `len` distances from a value stream (consuming `len - 1`
    /// map applications). One-sided geometry at center 0 uses the value
    /// itself as the distance.
    pub fn from_stream<S: ValueStream>(
        stream: &mut S,
        center: f64,
        geometry: Geometry,
        len: usize,
    ) -> Result<Self> {
        let mut distances = Vec::with_capacity(len);
        for i in 0..len {
            let v = stream.value()?;
            let d = match geometry {
                Geometry::OneSidedAtZero => v,
                Geometry::TwoSidedClipped => (v - center).abs(),
            };
            distances.push(d);
            if i + 1 < len {
                stream.advance()?;
            }
        }
        Ok(Self::from_distances(distances))
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Index convention for the first hitting time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauConvention {
    /// smallest k ≥ 0 (the window convention)
    FromZero,
    /// smallest k ≥ 1 (the hitting-time functional τ)
    FromOne,
}

/// Hit index window for the per-m check: k < m or k ≤ m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KWindow {
    KLessM,
    KLeqM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    At(usize),
    /// no hit within the trace; carries the horizon
    NoHit(usize),
}

/// Smallest admissible k with distance_k < r.
pub fn first_hitting_time(trace: &OrbitTrace, r: f64, convention: TauConvention) -> Hit {
    assert!(r > 0.0);
    let start = match convention {
        TauConvention::FromZero => 0,
        TauConvention::FromOne => 1,
    };
    for (k, &d) in trace.distances.iter().enumerate().skip(start) {
        if d < r {
            return Hit::At(k);
        }
    }
    Hit::NoHit(trace.len())
}

/// True iff the orbit window {x, …, T^{m-1}x} (or k ≤ m) meets B_m for
/// every m in [n, m_cap]. `radii[m - 1]` is r_m.
pub fn eah_window_indicator(
    trace: &OrbitTrace,
    radii: &[f64],
    n: usize,
    m_cap: usize,
    window: KWindow,
) -> bool {
    assert!(n >= 1 && n <= m_cap && m_cap <= radii.len());
    let needed = match window {
        KWindow::KLessM => m_cap,
        KWindow::KLeqM => m_cap + 1,
    };
    assert!(trace.len() >= needed, "trace shorter than the window");
    for m in n..=m_cap {
        let idx = match window {
            KWindow::KLessM => m - 1,
            KWindow::KLeqM => m,
        };
        if trace.prefix_min[idx] >= radii[m - 1] {
            return false;
        }
    }
    true
}

/// Precompute r_1..r_{m_cap} for a schedule.
pub fn schedule_radii(schedule: &TargetSchedule, m_cap: usize) -> Result<Vec<f64>> {
    (1..=m_cap as u64)
        .map(|m| radius_of(schedule, m))
        .collect()
}

/// Monte Carlo estimate of the window event mass.
#[derive(Debug, Clone, Serialize)]
pub struct AnEstimate {
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub hits: u64,
    pub samples: u64,
    /// fraction of samples that never hit B_{m_cap} within the window:
    /// the mass of the all-miss event at the final target size
    pub nohit_fraction: f64,
    /// orbits that failed (precision or exceptional point) and were
    /// replaced by a fresh draw index
    pub resampled: u64,
}

fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::PrecisionExhausted { .. } | Error::DigitsExhausted { .. } | Error::ExceptionalPoint
    )
}

/// Per-sample outcomes plus the aggregate estimate.
pub struct AnOutcome {
    pub estimate: AnEstimate,
    pub indicators: Vec<bool>,
}

/// Estimate the fraction of points whose window indicator is true.
///
/// `make_trace(draw_index)` must return an independent trace for each draw
/// index, derived deterministically (index → substream). Failed draws are
/// retried at draw index `i + attempt·samples`, so results do not depend
/// on scheduling. Results are aggregated in sample order, making the
/// output identical for any worker count.
pub fn estimate_an<F>(
    make_trace: F,
    radii: &[f64],
    n: usize,
    m_cap: usize,
    samples: usize,
    window: KWindow,
) -> Result<AnOutcome>
where
    F: Fn(usize) -> Result<OrbitTrace> + Sync,
{
    let per_sample: Result<Vec<(bool, bool, u32)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut attempt = 0u32;
            loop {
                match make_trace(i + attempt as usize * samples) {
                    Ok(trace) => {
                        let ind = eah_window_indicator(&trace, radii, n, m_cap, window);
                        let idx = match window {
                            KWindow::KLessM => m_cap - 1,
                            KWindow::KLeqM => m_cap,
                        };
                        let nohit = trace.prefix_min[idx] >= radii[m_cap - 1];
                        return Ok((ind, nohit, attempt));
                    }
                    Err(e) if retryable(&e) && attempt < 16 => attempt += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let per_sample = per_sample?;
    let hits = per_sample.iter().filter(|r| r.0).count() as u64;
    let nohits = per_sample.iter().filter(|r| r.1).count() as u64;
    let resampled = per_sample.iter().map(|r| r.2 as u64).sum();
    let fraction = hits as f64 / samples as f64;
    let (ci_lo, ci_hi) = binomial_ci_95(hits, samples as u64);
    Ok(AnOutcome {
        estimate: AnEstimate {
            fraction,
            ci_lo,
            ci_hi,
            hits,
            samples: samples as u64,
            nohit_fraction: nohits as f64 / samples as f64,
            resampled,
        },
        indicators: per_sample.into_iter().map(|r| r.0).collect(),
    })
}

/// Empirical hitting-time law on a normalized time grid.
#[derive(Debug, Clone, Serialize)]
pub struct HtsEstimate {
    pub t_grid: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub samples: u64,
    pub target_measure: f64,
    /// set when μ(B) > 0.1, where the normalized-law approximation is poor
    pub large_target_flag: bool,
    pub nohit_fraction: f64,
}

impl HtsEstimate {
    pub fn ks_against(&self, law: impl Fn(f64) -> f64) -> f64 {
        let reference: Vec<f64> = self.t_grid.iter().map(|&t| law(t)).collect();
        ks_statistic_on_grid(&self.g_hat, &reference)
    }
}

/// Reference limiting laws for normalized hitting times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HtsLaw {
    /// 1 − e^{−t}
    Exponential,
    /// doubling map, periodic center of period p: 1 − e^{−t/2^p}
    DoublingPeriodic { p: u32 },
    /// intermittent map, periodic center: 1 − e^{−(1 − 1/|D|) t}
    /// where D is the derivative along the cycle
    MpPeriodic { cycle_derivative: f64 },
    /// intermittent map, center 0: degenerate law 0
    MpOrigin,
}

pub fn reference_hts_law(law: HtsLaw, t: f64) -> f64 {
    assert!(t >= 0.0);
    match law {
        HtsLaw::Exponential => 1.0 - (-t).exp(),
        HtsLaw::DoublingPeriodic { p } => 1.0 - (-t * 0.5f64.powi(p as i32)).exp(),
        HtsLaw::MpPeriodic { cycle_derivative } => {
            1.0 - (-t * (1.0 - 1.0 / cycle_derivative.abs())).exp()
        }
        HtsLaw::MpOrigin => 0.0,
    }
}

/// Estimate Ĝ(t) = fraction of samples with τ_B ≤ t/μ(B), convention k ≥ 1.
///
/// `tau_of(draw_index, horizon)` returns the first hitting index (≥ 1) or
/// None when the orbit avoids the target for `horizon` steps.
pub fn empirical_hts<F>(
    tau_of: F,
    target_measure: f64,
    t_grid: &[f64],
    samples: usize,
) -> Result<HtsEstimate>
where
    F: Fn(usize, u64) -> Result<Option<u64>> + Sync,
{
    assert!(!t_grid.is_empty() && target_measure > 0.0);
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let horizon = (t_max / target_measure).ceil() as u64;
    let taus: Result<Vec<Option<u64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut attempt = 0u32;
            loop {
                match tau_of(i + attempt as usize * samples, horizon) {
                    Ok(t) => return Ok(t),
                    Err(e) if retryable(&e) && attempt < 16 => attempt += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let taus = taus?;
    let mut g_hat = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let cutoff = t / target_measure;
        let count = taus
            .iter()
            .filter(|tau| matches!(tau, Some(k) if (*k as f64) <= cutoff))
            .count();
        g_hat.push(count as f64 / samples as f64);
    }
    let nohit = taus.iter().filter(|t| t.is_none()).count();
    Ok(HtsEstimate {
        t_grid: t_grid.to_vec(),
        g_hat,
        samples: samples as u64,
        target_measure,
        large_target_flag: target_measure > 0.1,
        nohit_fraction: nohit as f64 / samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::BinaryOrbit;
    use crate::targets::{MeasureModel, RateProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn doubling_trace_from_seed(seed: u64, len: usize) -> OrbitTrace {
        let rng = ChaCha12Rng::seed_from_u64(seed);
        let mut orbit = BinaryOrbit::random(rng);
        let values = orbit.lookahead_values(len).unwrap();
        OrbitTrace::from_distances(values)
    }

    #[test]
    fn first_hit_conventions_on_period_two_orbit() {
        // x = 1/3: orbit 1/3, 2/3, 1/3, ...
        let orbit = BinaryOrbit::periodic(vec![false, true]);
        let mut orbit = orbit;
        let values = orbit.lookahead_values(50).unwrap();
        let trace = OrbitTrace::from_distances(values);
        assert_eq!(
            first_hitting_time(&trace, 0.4, TauConvention::FromZero),
            Hit::At(0)
        );
        assert_eq!(
            first_hitting_time(&trace, 0.4, TauConvention::FromOne),
            Hit::At(2)
        );
        assert_eq!(
            first_hitting_time(&trace, 0.1, TauConvention::FromZero),
            Hit::NoHit(50)
        );
    }

    #[test]
    fn from_zero_never_later_than_from_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..200 {
            let trace = doubling_trace_from_seed(rng.gen(), 64);
            let r = rng.gen_range(0.01..0.5);
            let z = first_hitting_time(&trace, r, TauConvention::FromZero);
            let o = first_hitting_time(&trace, r, TauConvention::FromOne);
            match (z, o) {
                (Hit::At(a), Hit::At(b)) => {
                    assert!(a <= b);
                    if a != b {
                        // they differ only when x itself is in the target
                        assert_eq!(a, 0);
                        assert!(trace.distances[0] < r);
                    }
                }
                (Hit::At(a), Hit::NoHit(_)) => assert_eq!(a, 0),
                (Hit::NoHit(_), Hit::At(_)) => panic!("FromZero missed a hit FromOne found"),
                (Hit::NoHit(_), Hit::NoHit(_)) => {}
            }
        }
    }

    #[test]
    fn indicator_matches_quadratic_check() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..100 {
            let m_cap = rng.gen_range(10..500usize);
            let n = rng.gen_range(1..=m_cap);
            let trace = doubling_trace_from_seed(rng.gen(), m_cap + 1);
            let s: f64 = rng.gen_range(0.001..0.02);
            let radii: Vec<f64> = (1..=m_cap)
                .map(|m| (-(s * m as f64)).exp2().max(1e-12))
                .collect();
            for window in [KWindow::KLessM, KWindow::KLeqM] {
                let fast = eah_window_indicator(&trace, &radii, n, m_cap, window);
                let mut slow = true;
                for m in n..=m_cap {
                    let k_max = match window {
                        KWindow::KLessM => m - 1,
                        KWindow::KLeqM => m,
                    };
                    let hit = (0..=k_max).any(|k| trace.distances[k] < radii[m - 1]);
                    if !hit {
                        slow = false;
                        break;
                    }
                }
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn indicator_monotone_in_n() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..100 {
            let trace = doubling_trace_from_seed(rng.gen(), 201);
            let radii: Vec<f64> = (1..=200).map(|m| 1.0 / (1.0 + m as f64)).collect();
            let mut prev = eah_window_indicator(&trace, &radii, 1, 200, KWindow::KLessM);
            for n in 2..=200 {
                let cur = eah_window_indicator(&trace, &radii, n, 200, KWindow::KLessM);
                // larger n only drops constraints: true stays true
                assert!(!prev || cur, "monotonicity violated at n={n}");
                prev = cur;
            }
        }
    }

    #[test]
    fn enlarging_radii_preserves_true_indicator() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for _ in 0..100 {
            let trace = doubling_trace_from_seed(rng.gen(), 101);
            let radii: Vec<f64> = (1..=100).map(|m| 0.5 / m as f64).collect();
            let bigger: Vec<f64> = radii.iter().map(|r| r * 2.0).collect();
            let small = eah_window_indicator(&trace, &radii, 3, 100, KWindow::KLessM);
            let big = eah_window_indicator(&trace, &bigger, 3, 100, KWindow::KLessM);
            assert!(!small || big);
        }
    }

    #[test]
    fn window_shift_preserves_indicator_for_nested_radii() {
        // if every m in [n, M] has a hit at index k ≥ 1, the shifted orbit
        // satisfies the window [n-1, M-1] (hit indices drop by one and
        // nested targets only grow toward smaller m)
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let mut checked = 0;
        for _ in 0..1000 {
            let m_cap = 80usize;
            let n = 5usize;
            let rng_orbit = ChaCha12Rng::seed_from_u64(rng.gen());
            let mut orbit = BinaryOrbit::random(rng_orbit);
            let values = orbit.lookahead_values(m_cap + 1).unwrap();
            let radii: Vec<f64> = (1..=m_cap).map(|m| 1.2 / (m as f64)).collect();
            // nested: radii non-increasing
            let trace = OrbitTrace::from_distances(values.clone());
            // require a hit with k >= 1 for every m in [n, m_cap]
            let all_hit_late = (n..=m_cap).all(|m| {
                (1..m).any(|k| values[k] < radii[m - 1])
            });
            if !all_hit_late {
                continue;
            }
            checked += 1;
            let shifted = OrbitTrace::from_distances(values[1..].to_vec());
            assert!(
                eah_window_indicator(&shifted, &radii, n - 1, m_cap - 1, KWindow::KLessM),
                "shift property failed"
            );
            let _ = trace;
        }
        assert!(checked > 10, "too few instances exercised: {checked}");
    }

    #[test]
    fn full_space_targets_give_fraction_one() {
        let radii = vec![2.0; 100];
        let outcome = estimate_an(
            |i| Ok(doubling_trace_from_seed(i as u64, 100)),
            &radii,
            1,
            100,
            200,
            KWindow::KLessM,
        )
        .unwrap();
        assert_eq!(outcome.estimate.fraction, 1.0);
        assert_eq!(outcome.estimate.nohit_fraction, 0.0);
    }

    #[test]
    fn estimate_is_deterministic_and_order_independent() {
        let radii: Vec<f64> = (1..=200).map(|m| 2.0 / m as f64).collect();
        let run = || {
            estimate_an(
                |i| Ok(doubling_trace_from_seed(i as u64 * 77 + 1, 200)),
                &radii,
                10,
                200,
                500,
                KWindow::KLessM,
            )
            .unwrap()
            .estimate
        };
        let a = run();
        let b = run();
        assert_eq!(a.fraction.to_bits(), b.fraction.to_bits());
        assert_eq!(a.hits, b.hits);
    }

    #[test]
    fn hts_ghat_monotone_and_bounded() {
        let t_grid: Vec<f64> = (1..=30).map(|i| i as f64 / 10.0).collect();
        let est = empirical_hts(
            |i, horizon| {
                let trace = doubling_trace_from_seed(i as u64, horizon as usize + 1);
                Ok(match first_hitting_time(&trace, 0.01, TauConvention::FromOne) {
                    Hit::At(k) => Some(k as u64),
                    Hit::NoHit(_) => None,
                })
            },
            0.01,
            &t_grid,
            2000,
        )
        .unwrap();
        for w in est.g_hat.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert!(est.g_hat.iter().all(|&g| (0.0..=1.0).contains(&g)));
        // center 0 is a fixed point: modified exponential with rate 1/2
        assert!(est.ks_against(|t| reference_hts_law(HtsLaw::DoublingPeriodic { p: 1 }, t)) < 0.08);
    }

    #[test]
    fn reference_laws_at_known_points() {
        assert_eq!(reference_hts_law(HtsLaw::Exponential, 0.0), 0.0);
        let v = reference_hts_law(HtsLaw::DoublingPeriodic { p: 1 }, 1.0);
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((v - 0.39347).abs() < 1e-5);
        assert_eq!(reference_hts_law(HtsLaw::MpOrigin, 7.0), 0.0);
        let mp = reference_hts_law(
            HtsLaw::MpPeriodic {
                cycle_derivative: 2.0,
            },
            1.0,
        );
        assert!((mp - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn schedule_radii_match_profile() {
        let sched = TargetSchedule {
            center: 0.0,
            profile: RateProfile::GeometricRadius { s: 1.0 },
            geometry: Geometry::OneSidedAtZero,
            measure: MeasureModel::Lebesgue,
        };
        let radii = schedule_radii(&sched, 10).unwrap();
        assert_eq!(radii[0], 0.5);
        assert_eq!(radii[9], 1.0 / 1024.0);
    }
}
