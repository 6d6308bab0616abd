//! Experiment dispatch: map construction, substream labelling, worker-pool
//! control and report assembly.

use std::path::PathBuf;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cf::max_digit_fractions;
use crate::hitting::{
    empirical_hts, estimate_an, reference_hts_law, HtsLaw, KWindow, OrbitTrace,
};
use crate::induced::{birkhoff_measure, rn_exponent_stats};
use crate::lab::config::{
    DecaySpec, ExperimentConfig, ExperimentKind, LawSpec, MapSpec, ScheduleSpec,
};
use crate::lab::report::{emit_report, fmt_f64, Plot, Report, Series};
use crate::lab::stream::derive_substream;
use crate::maps::{
    sample_gauss_point, sample_gauss_seed, sample_mp_point, BinaryOrbit, CfDigitStream,
    MapKind, MpAlpha, MpOrbit, ValueStream,
};
use crate::mixing::{
    decay_series_doubling, fit_decay, DecayModel, IntervalIndicator, ObservablePair,
};
use crate::stats::rational_approx;
use crate::symbolic::{
    bl_hausdorff_reference, box_dim_estimate, count_compatible, f_set_count, inductive_schedule,
    log2_biguint, Density,
};
use crate::targets::{
    classify, measure_from_radius, radius_from_measure, ClassifyContext, Geometry, MeasureModel,
    TargetSchedule, Verdict,
};
use crate::{Error, Result};

/// Worker count requested through the `EAH_WORKERS` environment variable.
/// Unset means "let the pool pick"; anything non-numeric is a config error.
pub fn requested_workers() -> Result<Option<usize>> {
    match std::env::var("EAH_WORKERS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("EAH_WORKERS: {e}"))),
        Ok(s) => {
            let n: usize = s
                .parse()
                .map_err(|_| Error::Config(format!("EAH_WORKERS must be a number, got {s:?}")))?;
            if n == 0 {
                return Err(Error::Config("EAH_WORKERS must be >= 1".into()));
            }
            Ok(Some(n))
        }
    }
}

/// Files written by a run, together with the in-memory report.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Validate, compute inside a worker pool sized by `EAH_WORKERS`, and emit
/// the CSV/JSON/SVG outputs into the configured directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let report = match requested_workers()? {
        None => build_report(config)?,
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| build_report(config))?
        }
    };
    let files = emit_report(&report, &config.output_dir)?;
    Ok(RunOutput { report, files })
}

/// Run the experiment in the current thread pool and assemble the report.
pub fn build_report(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.kind {
        ExperimentKind::EahFraction => run_eah_fraction(config),
        ExperimentKind::Hts => run_hts(config),
        ExperimentKind::CfMaxdigit => run_cf_maxdigit(config),
        ExperimentKind::CylinderCount => run_cylinder_count(config),
        ExperimentKind::BoxDim => run_box_dim(config),
        ExperimentKind::FSet => run_f_set(config),
        ExperimentKind::ReturnTimes => run_return_times(config),
        ExperimentKind::Birkhoff => run_birkhoff(config),
        ExperimentKind::Correlation => run_correlation(config),
        ExperimentKind::Classify => run_classify(config),
    }
}

fn substream_rng(master_seed: u64, label: &str) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_substream(master_seed, label))
}

fn mp_alpha(map: &MapSpec) -> MpAlpha {
    let a = map.alpha.expect("validated");
    let (num, den) = rational_approx(a, 64);
    MpAlpha::from_f64(num as f64 / den as f64)
}

/// Reference measure of the map, for schedules expressed in measure terms.
/// The intermittent map gets an empirical Birkhoff estimate (its density
/// has no usable closed form), which requires a finite invariant measure.
fn measure_model(map: &MapSpec, master_seed: u64) -> Result<MeasureModel> {
    match map.name {
        MapKind::Doubling => Ok(MeasureModel::Lebesgue),
        MapKind::Gauss => Ok(MeasureModel::Gauss),
        MapKind::MannevillePomeau => {
            let a = map.alpha.expect("validated");
            if a >= 1.0 {
                return Err(Error::Config(
                    "schedules in measure terms need alpha < 1 (finite invariant measure)".into(),
                ));
            }
            let alpha = mp_alpha(map);
            let prec = map.precision;
            let burn_in = map.burn_in;
            let edges: Vec<f64> = (0..=512).map(|i| i as f64 / 512.0).collect();
            let measure = birkhoff_measure(
                |i| {
                    let mut rng = substream_rng(master_seed, &format!("measure-cache/{i}"));
                    Ok(MpOrbit {
                        x: sample_mp_point(&mut rng, &alpha, prec, burn_in)?,
                        alpha: alpha.clone(),
                    })
                },
                4,
                &edges,
                200_000,
                1_000,
            )?;
            Ok(MeasureModel::MpEmpirical(measure.to_cdf()?))
        }
    }
}

fn target_schedule(
    spec: &ScheduleSpec,
    map: &MapSpec,
    master_seed: u64,
) -> Result<TargetSchedule> {
    Ok(TargetSchedule {
        center: spec.center,
        profile: spec.profile.clone(),
        geometry: spec.geometry,
        measure: measure_model(map, master_seed)?,
    })
}

/// Schedule radii with the head below the profile's first valid index
/// replaced by full-measure targets (which every orbit hits).
pub fn clamped_radii(schedule: &TargetSchedule, m_cap: usize) -> Result<Vec<f64>> {
    let m_min = schedule.profile.m_min().min(m_cap as u64 + 1);
    let full = radius_from_measure(
        &schedule.measure,
        schedule.center,
        schedule.geometry,
        1.0,
    )? + 1.0;
    let mut radii = vec![full; (m_min - 1) as usize];
    radii.extend(schedule_radii_from(schedule, m_min, m_cap)?);
    Ok(radii)
}

fn schedule_radii_from(schedule: &TargetSchedule, m_min: u64, m_cap: usize) -> Result<Vec<f64>> {
    (m_min..=m_cap as u64)
        .map(|m| crate::targets::radius_of(schedule, m))
        .collect()
}

/// One orbit trace of `len` values for the window estimator.
fn make_trace(
    map: &MapSpec,
    master_seed: u64,
    label: &str,
    draw: usize,
    center: f64,
    geometry: Geometry,
    len: usize,
) -> Result<OrbitTrace> {
    let mut rng = substream_rng(master_seed, &format!("{label}/{draw}"));
    match map.name {
        MapKind::Doubling => {
            let mut orbit = BinaryOrbit::random(rng);
            OrbitTrace::from_stream(&mut orbit, center, geometry, len)
        }
        MapKind::Gauss => {
            // ~1.71 source bits per digit; 3 per digit leaves slack for the
            // 24-digit value window past the last step
            let bits = 3 * (len + 64);
            let mut point = sample_gauss_point(&mut rng, bits);
            OrbitTrace::from_stream(&mut point, center, geometry, len)
        }
        MapKind::MannevillePomeau => {
            let alpha = mp_alpha(map);
            let x = sample_mp_point(&mut rng, &alpha, map.precision, map.burn_in)?;
            let mut orbit = MpOrbit { x, alpha };
            OrbitTrace::from_stream(&mut orbit, center, geometry, len)
        }
    }
}

fn run_eah_fraction(config: &ExperimentConfig) -> Result<Report> {
    let map = config.map.as_ref().unwrap();
    let window = config.window.unwrap();
    let samples = config.samples.unwrap();
    let schedule = target_schedule(config.schedule.as_ref().unwrap(), map, config.master_seed)?;
    let radii = clamped_radii(&schedule, window.m)?;
    let seed = config.master_seed;
    let outcome = estimate_an(
        |i| {
            make_trace(
                map,
                seed,
                "eah",
                i,
                schedule.center,
                schedule.geometry,
                window.m,
            )
        },
        &radii,
        window.n,
        window.m,
        samples,
        KWindow::KLessM,
    )?;
    let e = &outcome.estimate;
    let mut report = Report::new(
        "eah-fraction",
        &config.hash(),
        seed,
        &[
            "n",
            "m",
            "samples",
            "fraction",
            "ci-lo",
            "ci-hi",
            "hits",
            "nohit-fraction",
            "resampled",
        ],
        vec![vec![
            window.n.to_string(),
            window.m.to_string(),
            e.samples.to_string(),
            fmt_f64(e.fraction),
            fmt_f64(e.ci_lo),
            fmt_f64(e.ci_hi),
            e.hits.to_string(),
            fmt_f64(e.nohit_fraction),
            e.resampled.to_string(),
        ]],
    );
    report.meta = serde_json::json!({
        "map": map.name,
        "first-radius": radii[0],
        "last-radius": radii[window.m - 1],
    });
    Ok(report)
}

/// Distance from the current stream value to the target center.
fn distance(value: f64, center: f64, geometry: Geometry) -> f64 {
    match geometry {
        Geometry::OneSidedAtZero => value,
        Geometry::TwoSidedClipped => (value - center).abs(),
    }
}

/// First index k >= 1 with T^k x inside the target, scanning at most
/// `horizon` steps. Starts from the sampled point itself at k = 0.
fn stream_first_hit<S: ValueStream>(
    stream: &mut S,
    center: f64,
    geometry: Geometry,
    radius: f64,
    horizon: u64,
) -> Result<Option<u64>> {
    for k in 1..=horizon {
        stream.advance()?;
        if distance(stream.value()?, center, geometry) < radius {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Hitting times of [0, r) under the continued-fraction map, read directly
/// from the digits: G^k x < r exactly when the digit a_{k+1} >= ceil(1/r).
fn gauss_digit_first_hit(
    rng: &mut ChaCha12Rng,
    radius: f64,
    horizon: u64,
) -> Result<Option<u64>> {
    let threshold = (1.0 / radius).ceil() as u64;
    let digits_needed = horizon as usize + 1;
    let bits = 2 * digits_needed + 256;
    let seed = sample_gauss_seed(rng, bits);
    let mut stream = CfDigitStream::from_dyadic(seed, bits);
    for j in 1..=digits_needed {
        match stream.next_digit() {
            Some(d) => {
                if j >= 2 && d >= threshold {
                    return Ok(Some(j as u64 - 1));
                }
            }
            None => {
                return Err(Error::DigitsExhausted {
                    digits: stream.emitted() as usize,
                })
            }
        }
    }
    Ok(None)
}

fn hts_law(spec: &LawSpec) -> HtsLaw {
    match spec {
        LawSpec::Exponential => HtsLaw::Exponential,
        LawSpec::DoublingPeriodic { p } => HtsLaw::DoublingPeriodic { p: *p },
        LawSpec::MpPeriodic { cycle_derivative } => HtsLaw::MpPeriodic {
            cycle_derivative: *cycle_derivative,
        },
        LawSpec::MpOrigin => HtsLaw::MpOrigin,
    }
}

fn run_hts(config: &ExperimentConfig) -> Result<Report> {
    let map = config.map.as_ref().unwrap();
    let hts = config.hts.as_ref().unwrap();
    let samples = config.samples.unwrap();
    let seed = config.master_seed;
    let model = measure_model(map, seed)?;
    let mu = measure_from_radius(&model, hts.center, hts.geometry, hts.radius);
    if !(mu > 0.0) {
        return Err(Error::Config("target has zero reference measure".into()));
    }
    let t_grid: Vec<f64> = (1..=hts.t_points)
        .map(|i| hts.t_max * i as f64 / hts.t_points as f64)
        .collect();
    let alpha = match map.name {
        MapKind::MannevillePomeau => Some(mp_alpha(map)),
        _ => None,
    };
    let use_digit_scan =
        map.name == MapKind::Gauss && hts.geometry == Geometry::OneSidedAtZero;
    let estimate = empirical_hts(
        |draw, horizon| {
            let mut rng = substream_rng(seed, &format!("hts/{draw}"));
            match map.name {
                MapKind::Doubling => {
                    let mut orbit = BinaryOrbit::random(rng);
                    stream_first_hit(&mut orbit, hts.center, hts.geometry, hts.radius, horizon)
                }
                MapKind::Gauss if use_digit_scan => {
                    gauss_digit_first_hit(&mut rng, hts.radius, horizon)
                }
                MapKind::Gauss => {
                    let bits = 2 * horizon as usize + 256;
                    let mut point = sample_gauss_point(&mut rng, bits);
                    stream_first_hit(&mut point, hts.center, hts.geometry, hts.radius, horizon)
                }
                MapKind::MannevillePomeau => {
                    let alpha = alpha.clone().unwrap();
                    let x = sample_mp_point(&mut rng, &alpha, map.precision, map.burn_in)?;
                    let mut orbit = MpOrbit { x, alpha };
                    stream_first_hit(&mut orbit, hts.center, hts.geometry, hts.radius, horizon)
                }
            }
        },
        mu,
        &t_grid,
        samples,
    )?;
    let law = hts_law(&hts.law);
    let reference: Vec<f64> = t_grid.iter().map(|&t| reference_hts_law(law, t)).collect();
    let ks = estimate.ks_against(|t| reference_hts_law(law, t));

    let rows: Vec<Vec<String>> = t_grid
        .iter()
        .zip(&estimate.g_hat)
        .zip(&reference)
        .map(|((&t, &g), &r)| vec![fmt_f64(t), fmt_f64(g), fmt_f64(r)])
        .collect();
    let mut report = Report::new(
        "hts",
        &config.hash(),
        seed,
        &["t", "g-hat", "reference"],
        rows,
    );
    report.meta = serde_json::json!({
        "map": map.name,
        "radius": hts.radius,
        "target-measure": mu,
        "large-target": estimate.large_target_flag,
        "samples": estimate.samples,
        "nohit-fraction": estimate.nohit_fraction,
        "ks": ks,
    });
    report.plot = Some(Plot {
        title: "normalized hitting-time law".into(),
        x_label: "t".into(),
        y_label: "G(t)".into(),
        series: vec![
            Series {
                name: "empirical".into(),
                points: t_grid.iter().cloned().zip(estimate.g_hat.clone()).collect(),
            },
            Series {
                name: "reference".into(),
                points: t_grid.iter().cloned().zip(reference).collect(),
            },
        ],
        annotation: Some(format!("KS distance = {ks:.4}")),
    });
    Ok(report)
}

fn run_cf_maxdigit(config: &ExperimentConfig) -> Result<Report> {
    let cf = config.cf.as_ref().unwrap();
    let window = config.window.unwrap();
    let samples = config.samples.unwrap();
    let estimates = max_digit_fractions(
        cf.bound,
        &cf.c_grid,
        window.n,
        window.m,
        samples,
        config.master_seed,
    )?;
    let rows: Vec<Vec<String>> = estimates
        .iter()
        .map(|e| {
            vec![
                fmt_f64(e.c),
                window.n.to_string(),
                window.m.to_string(),
                fmt_f64(e.fraction),
                fmt_f64(e.ci_lo),
                fmt_f64(e.ci_hi),
                e.hits.to_string(),
                e.samples.to_string(),
            ]
        })
        .collect();
    let mut report = Report::new(
        "cf-maxdigit",
        &config.hash(),
        config.master_seed,
        &["c", "n", "m", "fraction", "ci-lo", "ci-hi", "hits", "samples"],
        rows,
    );
    report.meta = serde_json::json!({ "bound": cf.bound });
    report.plot = Some(Plot {
        title: "max-digit growth indicator fraction".into(),
        x_label: "c".into(),
        y_label: "fraction".into(),
        series: vec![Series {
            name: "indicator fraction".into(),
            points: estimates.iter().map(|e| (e.c, e.fraction)).collect(),
        }],
        annotation: None,
    });
    Ok(report)
}

/// Counts above 2^64 are emitted as hex big-integer text.
fn fmt_count(count: &BigUint) -> String {
    match count.to_u64() {
        Some(v) => v.to_string(),
        None => format!("0x{}", count.to_str_radix(16)),
    }
}

fn run_cylinder_count(config: &ExperimentConfig) -> Result<Report> {
    let spec = config.count.as_ref().unwrap();
    let s = Density::new(spec.s_num, spec.s_den);
    let word_len = spec.word_len.unwrap();
    let result = count_compatible(word_len, s, spec.n)?;
    let report = Report::new(
        "cylinder-count",
        &config.hash(),
        config.master_seed,
        &["s-num", "s-den", "n", "word-len", "log2-count", "count"],
        vec![vec![
            spec.s_num.to_string(),
            spec.s_den.to_string(),
            spec.n.to_string(),
            word_len.to_string(),
            fmt_f64(result.log2_count()),
            fmt_count(&result.count),
        ]],
    );
    Ok(report)
}

fn run_box_dim(config: &ExperimentConfig) -> Result<Report> {
    let spec = config.count.as_ref().unwrap();
    let s = Density::new(spec.s_num, spec.s_den);
    let (start, end) = (spec.len_start.unwrap(), spec.len_end.unwrap());
    let step = spec.len_step.unwrap_or(1).max(1);
    if end < start {
        return Err(Error::Config("box-dim needs len-start <= len-end".into()));
    }
    let lens: Vec<usize> = (start..=end).step_by(step).collect();
    let estimate = box_dim_estimate(s, spec.n, &lens)?;
    let rows: Vec<Vec<String>> = estimate
        .word_lens
        .iter()
        .zip(&estimate.log2_counts)
        .zip(&estimate.residuals)
        .map(|((&len, &lc), &res)| vec![len.to_string(), fmt_f64(lc), fmt_f64(res)])
        .collect();
    let mut report = Report::new(
        "box-dim",
        &config.hash(),
        config.master_seed,
        &["word-len", "log2-count", "residual"],
        rows,
    );
    report.meta = serde_json::json!({
        "s": s.value(),
        "n": spec.n,
        "slope": estimate.fit.slope,
        "slope-se": estimate.fit.slope_se,
        "intercept": estimate.fit.intercept,
        "expected-slope": 1.0 - s.value(),
    });
    let fit_line: Vec<(f64, f64)> = estimate
        .word_lens
        .iter()
        .map(|&len| {
            (
                len as f64,
                estimate.fit.intercept + estimate.fit.slope * len as f64,
            )
        })
        .collect();
    report.plot = Some(Plot {
        title: "compatible-word growth".into(),
        x_label: "word length N".into(),
        y_label: "log2 count".into(),
        series: vec![
            Series {
                name: "exact count".into(),
                points: estimate
                    .word_lens
                    .iter()
                    .zip(&estimate.log2_counts)
                    .map(|(&len, &lc)| (len as f64, lc))
                    .collect(),
            },
            Series {
                name: "fit".into(),
                points: fit_line,
            },
        ],
        annotation: Some(format!(
            "slope = {:.4} (expected 1 - s = {:.4})",
            estimate.fit.slope,
            1.0 - s.value()
        )),
    });
    Ok(report)
}

fn run_f_set(config: &ExperimentConfig) -> Result<Report> {
    let spec = config.f_set.as_ref().unwrap();
    let s = Density::new(spec.s_num, spec.s_den);
    let schedule = match (&spec.schedule, spec.stages) {
        (Some(stages), None) => stages.clone(),
        (None, Some(k)) => inductive_schedule(k),
        _ => unreachable!("validated"),
    };
    let result = f_set_count(&schedule, s)?;
    let rows: Vec<Vec<String>> = result
        .schedule
        .iter()
        .zip(&result.local_dims)
        .enumerate()
        .map(|(i, (&m, &dim))| vec![(i + 1).to_string(), m.to_string(), fmt_f64(dim)])
        .collect();
    let mut report = Report::new(
        "f-set",
        &config.hash(),
        config.master_seed,
        &["stage", "m", "local-dim"],
        rows,
    );
    report.meta = serde_json::json!({
        "s": s.value(),
        "free-positions": result.free_positions,
        "exact-count": fmt_count(&result.exact_count),
        "log2-exact-count": log2_biguint(&result.exact_count),
        "idealized-exponent": result.idealized_exponent,
        "local-dim-limit": 1.0 - s.value(),
        "hausdorff-reference": bl_hausdorff_reference(s.value()),
    });
    Ok(report)
}

fn run_return_times(config: &ExperimentConfig) -> Result<Report> {
    let map = config.map.as_ref().unwrap();
    if map.name != MapKind::MannevillePomeau {
        return Err(Error::Config(
            "return-times runs on the intermittent map only".into(),
        ));
    }
    let spec = config.returns.as_ref().unwrap();
    let samples = config.samples.unwrap();
    let alpha = mp_alpha(map);
    let stats = rn_exponent_stats(
        &alpha,
        spec.n,
        samples,
        config.master_seed,
        map.precision,
        &spec.grid,
    )?;
    let label = if alpha.value() < 1.0 { "c" } else { "kappa" };
    let rows: Vec<Vec<String>> = stats
        .grid
        .iter()
        .zip(&stats.fractions)
        .map(|(&g, &f)| vec![fmt_f64(g), fmt_f64(f)])
        .collect();
    let mut report = Report::new(
        "return-times",
        &config.hash(),
        config.master_seed,
        &[label, "fraction"],
        rows,
    );
    report.meta = serde_json::json!({
        "alpha": stats.alpha,
        "n": stats.n,
        "samples": stats.samples,
        "mean-exponent": stats.mean_exponent,
        "censored": stats.censored,
    });
    report.plot = Some(Plot {
        title: "accumulated-return growth".into(),
        x_label: label.into(),
        y_label: "fraction within bound".into(),
        series: vec![Series {
            name: "fraction".into(),
            points: stats.grid.iter().cloned().zip(stats.fractions.clone()).collect(),
        }],
        annotation: Some(format!("alpha = {}", stats.alpha)),
    });
    Ok(report)
}

fn run_birkhoff(config: &ExperimentConfig) -> Result<Report> {
    let map = config.map.as_ref().unwrap();
    let spec = config.birkhoff.as_ref().unwrap();
    let seed = config.master_seed;
    let alpha = match map.name {
        MapKind::MannevillePomeau => Some(mp_alpha(map)),
        _ => None,
    };
    let measure = match map.name {
        MapKind::Doubling => birkhoff_measure(
            |i| {
                let rng = substream_rng(seed, &format!("birkhoff/{i}"));
                Ok(BinaryOrbit::random(rng))
            },
            spec.seeds,
            &spec.edges,
            spec.steps,
            spec.burn_in,
        )?,
        MapKind::Gauss => birkhoff_measure(
            |i| {
                let mut rng = substream_rng(seed, &format!("birkhoff/{i}"));
                let bits = 3 * (spec.steps + spec.burn_in) as usize + 256;
                Ok(sample_gauss_point(&mut rng, bits))
            },
            spec.seeds,
            &spec.edges,
            spec.steps,
            spec.burn_in,
        )?,
        MapKind::MannevillePomeau => {
            let alpha = alpha.clone().unwrap();
            birkhoff_measure(
                |i| {
                    let mut rng = substream_rng(seed, &format!("birkhoff/{i}"));
                    Ok(MpOrbit {
                        x: sample_mp_point(&mut rng, &alpha, map.precision, map.burn_in)?,
                        alpha: alpha.clone(),
                    })
                },
                spec.seeds,
                &spec.edges,
                spec.steps,
                spec.burn_in,
            )?
        }
    };
    let rows: Vec<Vec<String>> = measure
        .edges
        .windows(2)
        .zip(&measure.counts)
        .zip(&measure.masses)
        .map(|((edge, &count), &mass)| {
            vec![
                fmt_f64(edge[0]),
                fmt_f64(edge[1]),
                count.to_string(),
                fmt_f64(mass),
            ]
        })
        .collect();
    let mut report = Report::new(
        "birkhoff",
        &config.hash(),
        seed,
        &["bin-lo", "bin-hi", "count", "mass"],
        rows,
    );
    report.meta = serde_json::json!({
        "map": map.name,
        "steps": measure.steps,
        "burn-in": measure.burn_in,
        "seeds": measure.seeds,
    });
    let density: Vec<(f64, f64)> = measure
        .edges
        .windows(2)
        .zip(&measure.masses)
        .map(|(edge, &mass)| (0.5 * (edge[0] + edge[1]), mass / (edge[1] - edge[0])))
        .collect();
    report.plot = Some(Plot {
        title: "empirical invariant density".into(),
        x_label: "x".into(),
        y_label: "density".into(),
        series: vec![Series {
            name: "ergodic average".into(),
            points: density,
        }],
        annotation: None,
    });
    Ok(report)
}

fn run_correlation(config: &ExperimentConfig) -> Result<Report> {
    let map = config.map.as_ref().unwrap();
    if map.name != MapKind::Doubling {
        return Err(Error::Config(
            "correlation estimation runs on the doubling map only".into(),
        ));
    }
    let spec = config.correlation.as_ref().unwrap();
    let pair = ObservablePair {
        f: IntervalIndicator::new(spec.f.clone()),
        g: IntervalIndicator::new(spec.g.clone()),
    };
    let series = decay_series_doubling(
        &pair,
        &spec.lags,
        spec.orbits,
        spec.series_len,
        config.master_seed,
    )?;
    let fit = fit_decay(&series);
    let rows: Vec<Vec<String>> = series
        .iter()
        .map(|e| vec![e.lag.to_string(), fmt_f64(e.rho), fmt_f64(e.se)])
        .collect();
    let mut report = Report::new(
        "correlation",
        &config.hash(),
        config.master_seed,
        &["lag", "rho", "se"],
        rows,
    );
    let model_txt = match &fit.model {
        DecayModel::Exponential { rate, rate_se, .. } => {
            format!("exponential, rate {rate:.4} +- {rate_se:.4}")
        }
        DecayModel::Polynomial {
            exponent,
            exponent_se,
            ..
        } => format!("polynomial, exponent {exponent:.4} +- {exponent_se:.4}"),
        DecayModel::Unknown => "unknown".to_string(),
    };
    report.meta = serde_json::json!({
        "model": model_txt,
        "exp-rss": fit.exp_rss,
        "poly-rss": fit.poly_rss,
        "noise-floor": fit.noise_floor,
        "lags-used": fit.lags_used,
    });
    report.plot = Some(Plot {
        title: "correlation decay".into(),
        x_label: "lag".into(),
        y_label: "|correlation|".into(),
        series: vec![Series {
            name: "empirical".into(),
            points: series.iter().map(|e| (e.lag as f64, e.rho)).collect(),
        }],
        annotation: Some(model_txt),
    });
    Ok(report)
}

fn run_classify(config: &ExperimentConfig) -> Result<Report> {
    let spec = config.classify.as_ref().unwrap();
    let decay = match &spec.decay {
        DecaySpec::Exponential { rate, rate_se } => DecayModel::Exponential {
            rate: *rate,
            rate_se: *rate_se,
            amplitude: 1.0,
        },
        DecaySpec::Polynomial {
            exponent,
            exponent_se,
        } => DecayModel::Polynomial {
            exponent: *exponent,
            exponent_se: *exponent_se,
            amplitude: 1.0,
        },
        DecaySpec::Unknown => DecayModel::Unknown,
    };
    let ctx = ClassifyContext {
        nested: spec.nested,
        ergodic: spec.ergodic,
        finite_measure: spec.finite_measure,
        hts_nondegenerate: spec.hts_nondegenerate,
    };
    let verdict = classify(&spec.profile, &decay, &ctx);
    let (verdict_txt, rule_txt, reason) = match &verdict {
        Verdict::ZeroMeasure { rule, reason } => {
            ("zero-measure".to_string(), format!("{rule:?}"), reason.clone())
        }
        Verdict::FullMeasure { rule, reason } => {
            ("full-measure".to_string(), format!("{rule:?}"), reason.clone())
        }
        Verdict::Inconclusive { reason } => {
            ("inconclusive".to_string(), "-".to_string(), reason.clone())
        }
    };
    let mut report = Report::new(
        "classify",
        &config.hash(),
        config.master_seed,
        &["verdict", "rule", "reason"],
        vec![vec![verdict_txt, rule_txt, reason.replace(',', ";")]],
    );
    report.meta = serde_json::json!({ "verdict": verdict });
    Ok(report)
}
