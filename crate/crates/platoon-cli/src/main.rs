//! Batch front-end: solve single instances in one of three scenario modes,
//! or run the bundled experiment suites and emit CSV reports.

mod report;
mod suites;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

use platoon_core::alns::AlnsConfig;
use platoon_core::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioMode {
    /// Platooning disabled (platoon size limit forced to 1).
    NoPlatoon,
    /// Platooning with whole-arc leaders only.
    PlatoonNoSwap,
    /// Full model with en-route leader swapping.
    PlatoonSwap,
}

impl ScenarioMode {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioMode::NoPlatoon => "no-platoon",
            ScenarioMode::PlatoonNoSwap => "platoon-no-swap",
            ScenarioMode::PlatoonSwap => "platoon-swap",
        }
    }

    /// Applies the mode's restrictions: a clamped platoon limit and/or
    /// binary leading ratios.
    pub fn apply(self, instance: &Instance) -> (Instance, bool) {
        match self {
            ScenarioMode::NoPlatoon => {
                let mut inst = instance.clone();
                inst.params.max_platoon_size = 1;
                (inst, false)
            }
            ScenarioMode::PlatoonNoSwap => (instance.clone(), true),
            ScenarioMode::PlatoonSwap => (instance.clone(), false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteName {
    Illustrative,
    Small3,
    Scaling,
    SensitivityBeta,
    SensitivityBattery,
    SensitivityAlpha1,
}

/// Electric-truck platooning optimizer: joint routing, charging, scheduling
/// and platoon formation with en-route leader swapping.
#[derive(Debug, Parser)]
#[command(name = "platoon-opt", version, about)]
struct Cli {
    /// Instance file to solve (JSON; see schema/instance.schema.json).
    #[arg(long, conflicts_with = "suite")]
    instance: Option<PathBuf>,

    /// Scenario mode for --instance runs.
    #[arg(long, value_enum, default_value = "platoon-swap")]
    mode: ScenarioMode,

    /// RNG seed; recorded in every output.
    #[arg(long, default_value_t = 1234)]
    seed: u64,

    /// Wall-clock limit per run, seconds.
    #[arg(long = "time-limit-s", default_value_t = 600)]
    time_limit_s: u64,

    /// Stop after this many consecutive non-improving iterations.
    #[arg(long = "no-improve-limit", default_value_t = 50)]
    no_improve_limit: u64,

    /// Output directory for solutions, run logs and reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Experiment suite to run instead of a single instance.
    #[arg(long, value_enum)]
    suite: Option<SuiteName>,

    /// Concurrent runs for suites.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn alns_config(cli: &Cli, binary_ratios: bool) -> AlnsConfig {
    AlnsConfig {
        time_limit_s: cli.time_limit_s as f64,
        no_improve_limit: cli.no_improve_limit,
        binary_leading_ratios: binary_ratios,
        ..AlnsConfig::default()
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PLATOON_OPT_LOG")).init();
    let cli = Cli::parse();
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;

    if let Some(suite) = cli.suite {
        return suites::run_suite(suite, &cli);
    }
    let Some(path) = &cli.instance else {
        bail!("either --instance or --suite is required (see --help)");
    };
    let instance = Instance::load(path)
        .with_context(|| format!("loading instance {}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "instance".into());
    let row = suites::solve_one(&instance, &stem, cli.mode, cli.seed, &cli, None)?;
    report::append_report(&cli.out.join("report.csv"), &[row])?;
    Ok(())
}
