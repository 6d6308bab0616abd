//! Small statistical helpers shared by the estimator modules.

/// Pairwise summation in a fixed tree order.
///
/// The reduction order depends only on the slice length, so results are
/// bit-identical regardless of how the inputs were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Sample standard deviation (n-1 normalisation).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&sq) / (n as f64 - 1.0)).sqrt()
}

/// Wilson score interval at 95% confidence for `successes` out of `trials`.
pub fn binomial_ci_95(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Standard error of a binomial fraction.
pub fn binomial_se(fraction: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    (fraction * (1.0 - fraction) / trials as f64).sqrt()
}

/// Sup-distance between an empirical curve and a reference curve evaluated
/// on the same grid.
pub fn ks_statistic_on_grid(empirical: &[f64], reference: &[f64]) -> f64 {
    empirical
        .iter()
        .zip(reference)
        .map(|(e, r)| (e - r).abs())
        .fold(0.0, f64::max)
}

/// Dvoretzky--Kiefer--Wolfowitz deviation bound: with probability at least
/// `confidence` the empirical CDF of `n` samples stays within the returned
/// epsilon of the true CDF.
pub fn dkw_epsilon(n: u64, confidence: f64) -> f64 {
    let alpha = 1.0 - confidence;
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Least-squares line fit.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let sxx = pairwise_sum(&xs.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    let sxy = pairwise_sum(
        &xs.iter()
            .zip(ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .collect::<Vec<_>>(),
    );
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = pairwise_sum(
        &xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .collect::<Vec<_>>(),
    );
    let slope_se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        rss,
        slope_se,
    }
}

/// Best small-denominator rational approximation of `x` via its continued
/// fraction, with denominator at most `max_den`. Exact for values like 0.5
/// or 2.0 that are themselves small rationals.
pub fn rational_approx(x: f64, max_den: u64) -> (u64, u64) {
    assert!(x >= 0.0 && x.is_finite());
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..40 {
        if frac.abs() < 1e-15 {
            break;
        }
        let a = (1.0 / frac).floor();
        if !(a.is_finite()) || a as u64 > u64::MAX / 2 {
            break;
        }
        frac = 1.0 / frac - a;
        let a = a as u64;
        let (p2, q2) = (
            a.saturating_mul(p1).saturating_add(p0),
            a.saturating_mul(q1).saturating_add(q0),
        );
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    (p1, q1)
}
