//! Shrinking-target schedules: rate profiles, measure/radius conversion
//! under each invariant measure, threshold classification, and the dyadic
//! partial-sum diagnostic.

use serde::{Deserialize, Serialize};

use crate::induced::EmpiricalCdf;
use crate::maps::{gauss_cdf, gauss_inverse_cdf};
use crate::mixing::DecayModel;
use crate::{Error, Result};

/// How the target size shrinks with the index m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateProfile {
    /// μ(B_m) = c / m^a
    PowerLaw { c: f64, a: f64 },
    /// μ(B_m) = c (log m)^{2+eps} / m
    LogSquared { c: f64, eps: f64 },
    /// r_m = 2^{-s m} (a radius profile; measure depends on the model)
    GeometricRadius { s: f64 },
    /// Tabulated (m, μ) pairs, interpolated log-linearly between entries.
    Custom { table: Vec<(u64, f64)> },
}

impl RateProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            RateProfile::PowerLaw { c, a } => *c > 0.0 && *a > 0.0,
            RateProfile::LogSquared { c, eps } => *c > 0.0 && *eps >= 0.0,
            RateProfile::GeometricRadius { s } => *s > 0.0,
            RateProfile::Custom { table } => {
                !table.is_empty()
                    && table.windows(2).all(|w| w[0].0 < w[1].0)
                    && table.iter().all(|&(m, mu)| m >= 1 && mu > 0.0 && mu <= 1.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid rate profile {self:?}")))
        }
    }

    /// Raw (unclamped) measure value, for profiles that prescribe measure.
    /// `GeometricRadius` prescribes a radius instead and returns None.
    fn raw_measure(&self, m: u64) -> Result<Option<f64>> {
        match self {
            RateProfile::PowerLaw { c, a } => Ok(Some(c / (m as f64).powf(*a))),
            RateProfile::LogSquared { c, eps } => {
                if m <= 1 {
                    return Err(Error::Domain(format!(
                        "log-squared profile undefined at m={m}"
                    )));
                }
                let lm = (m as f64).ln();
                Ok(Some(c * lm.powf(2.0 + eps) / m as f64))
            }
            RateProfile::GeometricRadius { .. } => Ok(None),
            RateProfile::Custom { table } => {
                let first = table[0];
                let last = *table.last().unwrap();
                if m <= first.0 {
                    return Ok(Some(first.1));
                }
                if m >= last.0 {
                    return Ok(Some(last.1));
                }
                let i = table.partition_point(|&(tm, _)| tm <= m) - 1;
                let (m0, mu0) = table[i];
                let (m1, mu1) = table[i + 1];
                let t = ((m as f64).ln() - (m0 as f64).ln())
                    / ((m1 as f64).ln() - (m0 as f64).ln());
                Ok(Some((mu0.ln() * (1.0 - t) + mu1.ln() * t).exp()))
            }
        }
    }

    /// First index from which the measure values are ≤ 1 and non-increasing.
    pub fn m_min(&self) -> u64 {
        match self {
            RateProfile::PowerLaw { c, a } => c.powf(1.0 / a).ceil().max(1.0) as u64,
            RateProfile::LogSquared { c: _, eps } => {
                // decreasing once (2+eps)/log m < 1; then scan for value <= 1
                let mut m = ((2.0 + eps).exp().ceil() as u64).max(2);
                while self
                    .raw_measure(m)
                    .map(|v| v.unwrap() > 1.0)
                    .unwrap_or(true)
                {
                    m += 1;
                    assert!(m < 1 << 40, "profile never drops below 1");
                }
                m
            }
            RateProfile::GeometricRadius { .. } => 1,
            RateProfile::Custom { table } => {
                let mut idx = table.len() - 1;
                while idx > 0 && table[idx - 1].1 >= table[idx].1 && table[idx - 1].1 <= 1.0 {
                    idx -= 1;
                }
                table[idx].0
            }
        }
    }
}

/// Target interval shape around the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// [0, r); the natural shape for targets at the fixed point 0.
    OneSidedAtZero,
    /// B(y, r) ∩ [0, 1)
    TwoSidedClipped,
}

/// Invariant measure the schedule is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureModel {
    Lebesgue,
    /// density 1/((1+x) log 2)
    Gauss,
    /// cached empirical CDF for the intermittent map
    MpEmpirical(EmpiricalCdf),
}

/// A fully specified shrinking-target schedule.
#[derive(Debug, Clone)]
pub struct TargetSchedule {
    pub center: f64,
    pub profile: RateProfile,
    pub geometry: Geometry,
    pub measure: MeasureModel,
}

/// A measure evaluation, with a flag when the raw profile value exceeded 1
/// and was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureValue {
    pub value: f64,
    pub clamped: bool,
}

/// Interval measure of B(y, r) (respecting geometry and clipping).
pub fn measure_from_radius(
    model: &MeasureModel,
    center: f64,
    geometry: Geometry,
    r: f64,
) -> f64 {
    let (lo, hi) = match geometry {
        Geometry::OneSidedAtZero => (0.0, r.min(1.0)),
        Geometry::TwoSidedClipped => ((center - r).max(0.0), (center + r).min(1.0)),
    };
    match model {
        MeasureModel::Lebesgue => (hi - lo).max(0.0),
        MeasureModel::Gauss => gauss_cdf(hi) - gauss_cdf(lo),
        MeasureModel::MpEmpirical(cdf) => cdf.interval(lo, hi),
    }
}

/// Invert `measure_from_radius` at fixed center/geometry.
pub fn radius_from_measure(
    model: &MeasureModel,
    center: f64,
    geometry: Geometry,
    mu0: f64,
) -> Result<f64> {
    if !(mu0 > 0.0 && mu0 <= 1.0) {
        return Err(Error::Domain(format!("target measure {mu0} outside (0,1]")));
    }
    match (model, geometry) {
        (MeasureModel::Lebesgue, Geometry::OneSidedAtZero) => Ok(mu0),
        (MeasureModel::Lebesgue, Geometry::TwoSidedClipped) => {
            // measure(r) = min(r, y) + min(r, 1-y)
            let near = center.min(1.0 - center);
            if mu0 <= 2.0 * near {
                Ok(mu0 / 2.0)
            } else {
                Ok(mu0 - near)
            }
        }
        (MeasureModel::Gauss, Geometry::OneSidedAtZero) => Ok(gauss_inverse_cdf(mu0)),
        _ => bisect_radius(model, center, geometry, mu0),
    }
}

/// Monotone bisection on r with relative tolerance 1e-14 on the measure.
fn bisect_radius(
    model: &MeasureModel,
    center: f64,
    geometry: Geometry,
    mu0: f64,
) -> Result<f64> {
    let full = measure_from_radius(model, center, geometry, 1.0);
    if mu0 > full * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "target measure {mu0} exceeds total available mass {full}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = measure_from_radius(model, center, geometry, mid);
        if (v - mu0).abs() <= 1e-14 * mu0 {
            return Ok(mid);
        }
        if v < mu0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// μ(B_m) under the schedule, clamped to (0, 1].
pub fn measure_of(schedule: &TargetSchedule, m: u64) -> Result<MeasureValue> {
    if m < 1 {
        return Err(Error::Domain("target index m must be >= 1".into()));
    }
    let raw = match schedule.profile.raw_measure(m)? {
        Some(mu) => mu,
        None => {
            let RateProfile::GeometricRadius { s } = schedule.profile else {
                unreachable!()
            };
            let r = (-s * m as f64).exp2();
            measure_from_radius(&schedule.measure, schedule.center, schedule.geometry, r)
        }
    };
    if raw > 1.0 {
        Ok(MeasureValue {
            value: 1.0,
            clamped: true,
        })
    } else {
        Ok(MeasureValue {
            value: raw,
            clamped: false,
        })
    }
}

/// r_m under the schedule.
pub fn radius_of(schedule: &TargetSchedule, m: u64) -> Result<f64> {
    if let RateProfile::GeometricRadius { s } = schedule.profile {
        return Ok((-s * m as f64).exp2());
    }
    let mu = measure_of(schedule, m)?;
    radius_from_measure(
        &schedule.measure,
        schedule.center,
        schedule.geometry,
        mu.value,
    )
}

/// Flags about the system that the classification rules require.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyContext {
    /// targets are nested from some index on
    pub nested: bool,
    /// the map is ergodic for the reference measure
    pub ergodic: bool,
    /// the reference measure is a probability measure (vs infinite)
    pub finite_measure: bool,
    /// a non-degenerate hitting-time law G(t) < 1 for all t is known
    pub hts_nondegenerate: bool,
}

/// Which zero-measure rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroRule {
    /// nested targets + ergodic map, with m·μ(B_m) bounded infinitely often
    NestedErgodic,
    /// same sparseness, any constant, via a non-degenerate hitting-time law
    KnownHts,
}

/// Which full-measure rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FullRule {
    /// exponential correlation decay with μ(B_m) ≥ c (log m)²/m
    ExponentialDecay,
    /// polynomial decay of exponent t with μ(B_m) ≥ c/m^a, a < t/(1+t)
    PolynomialDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Verdict {
    ZeroMeasure { rule: ZeroRule, reason: String },
    FullMeasure { rule: FullRule, reason: String },
    Inconclusive { reason: String },
}

/// Infinitely-often upper bound m·μ(B_m) ≤ c extracted from the profile.
enum Sparseness {
    /// holds for arbitrarily small c (m·μ → 0)
    AnyC,
    /// holds with this specific constant
    WithC(f64),
    /// m·μ(B_m) → ∞; no sparseness
    None,
}

fn sparseness(profile: &RateProfile) -> Sparseness {
    match profile {
        RateProfile::PowerLaw { c, a } => {
            if *a > 1.0 {
                Sparseness::AnyC
            } else if *a == 1.0 {
                Sparseness::WithC(*c)
            } else {
                Sparseness::None
            }
        }
        RateProfile::LogSquared { .. } => Sparseness::None,
        RateProfile::GeometricRadius { .. } => Sparseness::AnyC,
        RateProfile::Custom { table } => {
            // inspect the tabulated tail: use the last half of the entries
            let tail = &table[table.len() / 2..];
            let t_last = tail.iter().map(|&(m, mu)| m as f64 * mu).fold(f64::INFINITY, f64::min);
            let head = &table[..(table.len() / 2).max(1)];
            let t_head = head.iter().map(|&(m, mu)| m as f64 * mu).fold(f64::INFINITY, f64::min);
            if t_last <= t_head {
                Sparseness::WithC(t_last)
            } else {
                Sparseness::None
            }
        }
    }
}

/// Does the profile dominate c (log m)² / m eventually, and for which c?
enum LogSquaredLowerBound {
    /// dominates with any constant (extra diverging factor)
    AnyC,
    /// exactly c (log m)²/m with this c
    WithC(f64),
    No,
}

fn log_squared_lower_bound(profile: &RateProfile) -> LogSquaredLowerBound {
    match profile {
        // c/m^a with a<1 exceeds c'(log m)²/m for every c' eventually
        RateProfile::PowerLaw { a, .. } if *a < 1.0 => LogSquaredLowerBound::AnyC,
        RateProfile::LogSquared { c, eps } => {
            if *eps > 0.0 {
                LogSquaredLowerBound::AnyC
            } else {
                LogSquaredLowerBound::WithC(*c)
            }
        }
        RateProfile::Custom { table } => {
            let tail = &table[table.len() / 2..];
            let c = tail
                .iter()
                .filter(|&&(m, _)| m > 1)
                .map(|&(m, mu)| m as f64 * mu / (m as f64).ln().powi(2))
                .fold(f64::INFINITY, f64::min);
            if c.is_finite() {
                LogSquaredLowerBound::WithC(c)
            } else {
                LogSquaredLowerBound::No
            }
        }
        _ => LogSquaredLowerBound::No,
    }
}

/// Decide the measure of the eventually-always-hitting set from the rate
/// profile, the correlation-decay model and the system flags, returning
/// the inequality that fired.
pub fn classify(profile: &RateProfile, decay: &DecayModel, ctx: &ClassifyContext) -> Verdict {
    // zero-measure rules need m·μ(B_m) ≤ c infinitely often
    let sparse = sparseness(profile);
    if let Sparseness::AnyC | Sparseness::WithC(_) = sparse {
        if ctx.nested && ctx.ergodic {
            let c_txt = match sparse {
                Sparseness::AnyC => "arbitrarily small c".to_string(),
                Sparseness::WithC(c) => format!("c = {c}"),
                Sparseness::None => unreachable!(),
            };
            if !ctx.finite_measure {
                return Verdict::ZeroMeasure {
                    rule: ZeroRule::NestedErgodic,
                    reason: format!(
                        "infinite invariant measure and m·μ(B_m) ≤ {c_txt} infinitely often"
                    ),
                };
            }
            let c_below_one = matches!(sparse, Sparseness::AnyC)
                || matches!(sparse, Sparseness::WithC(c) if c < 1.0);
            if c_below_one {
                return Verdict::ZeroMeasure {
                    rule: ZeroRule::NestedErgodic,
                    reason: format!("m·μ(B_m) ≤ {c_txt} < 1 infinitely often"),
                };
            }
            if ctx.hts_nondegenerate {
                return Verdict::ZeroMeasure {
                    rule: ZeroRule::KnownHts,
                    reason: format!(
                        "non-degenerate hitting-time law and m·μ(B_m) ≤ {c_txt} infinitely often"
                    ),
                };
            }
            return Verdict::Inconclusive {
                reason: format!(
                    "m·μ(B_m) ≤ {c_txt} infinitely often but c ≥ 1 with a probability \
                     measure and no non-degenerate hitting-time law"
                ),
            };
        }
        return Verdict::Inconclusive {
            reason: "sparse targets but the nested/ergodic hypotheses are not asserted".into(),
        };
    }

    // full-measure rules need a decay model and a lower bound on μ(B_m)
    match decay {
        DecayModel::Exponential { rate, rate_se, .. } => {
            // conservative: shrink the fitted rate by its standard error
            let tau = rate - rate_se.max(0.0);
            if tau <= 0.0 {
                return Verdict::Inconclusive {
                    reason: "exponential decay rate not significantly positive".into(),
                };
            }
            match log_squared_lower_bound(profile) {
                LogSquaredLowerBound::AnyC => Verdict::FullMeasure {
                    rule: FullRule::ExponentialDecay,
                    reason: "μ(B_m) exceeds c (log m)²/m for every c eventually".into(),
                },
                LogSquaredLowerBound::WithC(c) => {
                    if c > 1.0 / tau {
                        Verdict::FullMeasure {
                            rule: FullRule::ExponentialDecay,
                            reason: format!("c = {c} > 1/τ = {}", 1.0 / tau),
                        }
                    } else {
                        Verdict::Inconclusive {
                            reason: format!("c = {c} ≤ 1/τ = {}", 1.0 / tau),
                        }
                    }
                }
                LogSquaredLowerBound::No => Verdict::Inconclusive {
                    reason: "profile does not dominate (log m)²/m".into(),
                },
            }
        }
        DecayModel::Polynomial {
            exponent,
            exponent_se,
            ..
        } => {
            let t = exponent - exponent_se.max(0.0);
            if t <= 0.0 {
                return Verdict::Inconclusive {
                    reason: "polynomial decay exponent not significantly positive".into(),
                };
            }
            let threshold = t / (1.0 + t);
            match profile {
                RateProfile::PowerLaw { a, .. } if *a < threshold => Verdict::FullMeasure {
                    rule: FullRule::PolynomialDecay,
                    reason: format!("a = {a} < t/(1+t) = {threshold}"),
                },
                RateProfile::PowerLaw { a, .. } => Verdict::Inconclusive {
                    reason: format!("a = {a} ≥ t/(1+t) = {threshold}"),
                },
                _ => Verdict::Inconclusive {
                    reason: "polynomial rule needs a power-law profile with a < t/(1+t)".into(),
                },
            }
        }
        DecayModel::Unknown => Verdict::Inconclusive {
            reason: "no usable correlation-decay model".into(),
        },
    }
}

/// Convergence heuristic for the dyadic partial sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SumHeuristic {
    Convergent,
    Divergent,
    Borderline,
}

#[derive(Debug, Clone, Serialize)]
pub struct DyadicSum {
    /// partial sums over the evaluated j range
    pub partial_sums: Vec<f64>,
    pub first_j: u32,
    pub verdict: SumHeuristic,
}

/// Partial sums Σ_j 1/(2^j μ(B_{2^j})) with a tail-behavior heuristic.
///
/// Convergence of this series is the sufficient full-measure condition in
/// the stronger hyperbolic-flow setting; the heuristic reports where the
/// profile stands relative to it. Evaluation starts at the first j with
/// 2^j ≥ m_min to skip the clamped head.
pub fn dyadic_partial_sums(schedule: &TargetSchedule, j_max: u32) -> Result<DyadicSum> {
    assert!(j_max >= 1);
    let m_min = schedule.profile.m_min();
    let first_j = (m_min.max(2) as f64).log2().ceil() as u32;
    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for j in first_j..=j_max {
        let m = 1u64 << j;
        let mu = measure_of(schedule, m)?.value;
        if mu <= 0.0 {
            return Ok(DyadicSum {
                partial_sums,
                first_j,
                verdict: SumHeuristic::Divergent,
            });
        }
        let term = 1.0 / ((m as f64) * mu);
        terms.push(term);
        acc += term;
        partial_sums.push(acc);
    }
    // geometric tail → convergent; otherwise judge the power of the
    // j-indexed terms by a log-log fit over the second half
    let tail = &terms[terms.len() / 2..];
    let max_ratio = tail
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0f64, f64::max);
    let verdict = if max_ratio <= 0.95 {
        SumHeuristic::Convergent
    } else {
        let js: Vec<f64> = (0..tail.len())
            .map(|i| ((terms.len() / 2 + i) as f64 + first_j as f64).ln())
            .collect();
        let ys: Vec<f64> = tail.iter().map(|t| t.ln()).collect();
        let fit = crate::stats::linear_fit(&js, &ys);
        if fit.slope < -1.1 {
            SumHeuristic::Convergent
        } else if fit.slope > -0.9 {
            SumHeuristic::Divergent
        } else {
            SumHeuristic::Borderline
        }
    };
    Ok(DyadicSum {
        partial_sums,
        first_j,
        verdict,
    })
}
