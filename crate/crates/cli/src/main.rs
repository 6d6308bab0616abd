//! Command-line front end: thin wrappers that assemble an experiment
//! configuration and hand it to the runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eah_core::cf::BoundKind;
use eah_core::lab::config::{
    CfSpec, ClassifySpec, CountSpec, DecaySpec, ExperimentConfig, ExperimentKind, HtsSpec,
    LawSpec, MapSpec, ReturnsSpec, WindowSpec,
};
use eah_core::lab::run_experiment;
use eah_core::maps::MapKind;
use eah_core::targets::{Geometry, RateProfile};
use eah_core::Error;

#[derive(Parser)]
#[command(
    name = "eah",
    about = "Shrinking-target and hitting-time experiments on interval maps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run {
        /// path to the experiment config
        config: PathBuf,
    },
    /// Classify a rate profile with the zero-one threshold rules.
    Classify(ClassifyArgs),
    /// Count compatible symbolic words (single length or slope fit).
    Count(CountArgs),
    /// Estimate the normalized hitting-time law against a reference.
    Hts(HtsArgs),
    /// Continued-fraction max-digit growth fractions over a c grid.
    Cf(CfArgs),
    /// Accumulated first-return statistics of the intermittent map.
    MpReturns(MpReturnsArgs),
}

#[derive(Args)]
struct Common {
    /// master seed for all substreams
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// output directory for CSV/JSON/SVG
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    OneSidedAtZero,
    TwoSidedClipped,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Geometry {
        match g {
            GeometryArg::OneSidedAtZero => Geometry::OneSidedAtZero,
            GeometryArg::TwoSidedClipped => Geometry::TwoSidedClipped,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Doubling,
    Gauss,
    MannevillePomeau,
}

impl From<MapArg> for MapKind {
    fn from(m: MapArg) -> MapKind {
        match m {
            MapArg::Doubling => MapKind::Doubling,
            MapArg::Gauss => MapKind::Gauss,
            MapArg::MannevillePomeau => MapKind::MannevillePomeau,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    Linear,
    LinearOverLogSq,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> BoundKind {
        match b {
            BoundArg::Linear => BoundKind::Linear,
            BoundArg::LinearOverLogSq => BoundKind::LinearOverLogSq,
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    /// rate profile as JSON, e.g. '{"kind":"power-law","c":0.5,"a":1.0}'
    #[arg(long)]
    profile: String,
    /// decay model as JSON, e.g. '{"kind":"unknown"}'
    #[arg(long, default_value = r#"{"kind":"unknown"}"#)]
    decay: String,
    #[arg(long)]
    nested: bool,
    #[arg(long)]
    ergodic: bool,
    #[arg(long)]
    finite_measure: bool,
    #[arg(long)]
    hts_nondegenerate: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CountArgs {
    /// zero-run density numerator
    #[arg(long)]
    s_num: u64,
    /// zero-run density denominator
    #[arg(long)]
    s_den: u64,
    /// window start index
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// single word length (exact count)
    #[arg(long, conflicts_with_all = ["len_start", "len_end"])]
    word_len: Option<usize>,
    /// first word length of a slope fit
    #[arg(long, requires = "len_end")]
    len_start: Option<usize>,
    /// last word length of a slope fit
    #[arg(long, requires = "len_start")]
    len_end: Option<usize>,
    /// word-length step of a slope fit
    #[arg(long)]
    len_step: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct HtsArgs {
    #[arg(long, value_enum)]
    map: MapArg,
    /// intermittency exponent (intermittent map only)
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    #[arg(long, value_enum, default_value_t = GeometryArg::OneSidedAtZero)]
    geometry: GeometryArg,
    /// fixed target radius
    #[arg(long)]
    radius: f64,
    /// reference law as JSON, e.g. '{"kind":"doubling-periodic","p":1}'
    #[arg(long, default_value = r#"{"kind":"exponential"}"#)]
    law: String,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    #[arg(long, default_value_t = 50)]
    t_points: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CfArgs {
    #[arg(long, value_enum)]
    bound: BoundArg,
    /// comma-separated grid of c values
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1_000)]
    samples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct MpReturnsArgs {
    #[arg(long)]
    alpha: f64,
    /// number of accumulated returns per sample
    #[arg(long)]
    n: usize,
    /// comma-separated C grid (alpha < 1) or kappa grid (alpha >= 1)
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 1_000)]
    samples: usize,
    /// fraction bits of the fixed-point orbit
    #[arg(long, default_value_t = 62)]
    precision: u32,
    #[command(flatten)]
    common: Common,
}

fn base_config(kind: ExperimentKind, common: &Common) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        master_seed: common.seed,
        output_dir: common.out.clone(),
        samples: None,
        map: None,
        schedule: None,
        window: None,
        hts: None,
        cf: None,
        count: None,
        f_set: None,
        returns: None,
        birkhoff: None,
        correlation: None,
        classify: None,
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(label: &str, text: &str) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{label}: {e}")))
}

fn build_config(command: &Command) -> Result<ExperimentConfig, Error> {
    match command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            ExperimentConfig::from_toml(&text)
        }
        Command::Classify(args) => {
            let profile: RateProfile = parse_json("profile", &args.profile)?;
            let decay: DecaySpec = parse_json("decay", &args.decay)?;
            let mut config = base_config(ExperimentKind::Classify, &args.common);
            config.classify = Some(ClassifySpec {
                profile,
                decay,
                nested: args.nested,
                ergodic: args.ergodic,
                finite_measure: args.finite_measure,
                hts_nondegenerate: args.hts_nondegenerate,
            });
            Ok(config)
        }
        Command::Count(args) => {
            let kind = if args.word_len.is_some() {
                ExperimentKind::CylinderCount
            } else {
                ExperimentKind::BoxDim
            };
            let mut config = base_config(kind, &args.common);
            config.count = Some(CountSpec {
                s_num: args.s_num,
                s_den: args.s_den,
                n: args.n,
                word_len: args.word_len,
                len_start: args.len_start,
                len_end: args.len_end,
                len_step: args.len_step,
            });
            Ok(config)
        }
        Command::Hts(args) => {
            let law: LawSpec = parse_json("law", &args.law)?;
            let mut config = base_config(ExperimentKind::Hts, &args.common);
            config.samples = Some(args.samples);
            config.map = Some(MapSpec {
                name: args.map.into(),
                alpha: args.alpha,
                precision: 62,
                burn_in: 1_000,
            });
            config.hts = Some(HtsSpec {
                center: args.center,
                geometry: args.geometry.into(),
                radius: args.radius,
                law,
                t_max: args.t_max,
                t_points: args.t_points,
            });
            Ok(config)
        }
        Command::Cf(args) => {
            let mut config = base_config(ExperimentKind::CfMaxdigit, &args.common);
            config.samples = Some(args.samples);
            config.cf = Some(CfSpec {
                bound: args.bound.into(),
                c_grid: args.c.clone(),
            });
            config.window = Some(WindowSpec {
                n: args.n,
                m: args.m,
            });
            Ok(config)
        }
        Command::MpReturns(args) => {
            let mut config = base_config(ExperimentKind::ReturnTimes, &args.common);
            config.samples = Some(args.samples);
            config.map = Some(MapSpec {
                name: MapKind::MannevillePomeau,
                alpha: Some(args.alpha),
                precision: args.precision,
                burn_in: 1_000,
            });
            config.returns = Some(ReturnsSpec {
                n: args.n,
                grid: args.grid.clone(),
            });
            Ok(config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run_experiment(&config) {
        Ok(out) => {
            for file in &out.files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(Error::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
