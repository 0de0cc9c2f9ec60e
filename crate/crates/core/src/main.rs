use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use citysim::export::{self, Manifest};
use citysim::report::{run_variants, Report, SYSTEMS};
use citysim::scenario::{self, ScenarioConfig, ScenarioError, Variant};
use citysim::toy;

#[derive(Parser)]
#[command(name = "citysim", version, about = "Interdependent city infrastructure risk simulator")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report every problem found.
    Validate { scenario: PathBuf },
    /// Run variants of a scenario and write CSV, summary and manifest.
    Run {
        scenario: PathBuf,
        /// baseline, risk, a mitigation name, or mitigations joined by `+`.
        #[arg(long = "variant")]
        variants: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the file seed and CITYSIM_SEED.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run baseline, risk and every declared mitigation and print the deltas.
    Compare {
        scenario: PathBuf,
        #[arg(long, required = true)]
        all: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare toy runs with the independent reference computations.
    Oracle {
        #[arg(value_enum)]
        which: OracleKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Sir,
    Attack,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Report(#[from] citysim::report::ReportError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("invalid CITYSIM_SEED `{0}`")]
    Env(String),
    #[error("{0}")]
    Oracle(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let code = match self {
            CliError::Scenario(e) => e.exit_code(),
            CliError::Report(e) => e.exit_code(),
            CliError::Io { .. } => 3,
            CliError::Env(_) => 2,
            CliError::Oracle(_) => 4,
        };
        code as u8
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Applies the seed override, flag first, then environment.
fn resolve_seed(config: &mut ScenarioConfig, flag: Option<u64>) -> Result<&'static str, CliError> {
    if let Some(s) = flag {
        info!("seed {s} from --seed (file had {})", config.seed);
        config.seed = s;
        return Ok("flag");
    }
    match std::env::var("CITYSIM_SEED") {
        Ok(text) => {
            let s = text.trim().parse().map_err(|_| CliError::Env(text.clone()))?;
            warn!("CITYSIM_SEED overrides the scenario seed: {} -> {s}", config.seed);
            config.seed = s;
            Ok("env")
        }
        Err(_) => Ok("file"),
    }
}

fn load_valid(path: &Path) -> Result<(ScenarioConfig, String), CliError> {
    let (config, text) = scenario::load(path)?;
    let errors = scenario::validate(&config);
    if !errors.is_empty() {
        return Err(ScenarioError::Invalid(errors).into());
    }
    Ok((config, text))
}

fn execute(
    path: &Path,
    names: &[String],
    out: &Path,
    seed: Option<u64>,
    all: bool,
) -> Result<Report, CliError> {
    let started = Instant::now();
    let (mut config, text) = load_valid(path)?;
    let seed_source = resolve_seed(&mut config, seed)?;
    let variants = if all {
        Variant::all(&config)
    } else if names.is_empty() {
        vec![Variant::risk()]
    } else {
        names
            .iter()
            .map(|n| Variant::parse(n, &config))
            .collect::<Result<_, _>>()?
    };
    info!(
        "running {} with seed {} ({} variants)",
        config.name,
        config.seed,
        variants.len()
    );
    let report = run_variants(&config, &variants)?;
    let files = export::write_report(&report, out).map_err(io_err(format!("writing {}", out.display())))?;
    let manifest = Manifest {
        scenario: config.name.clone(),
        config_sha256: export::sha256_hex(text.as_bytes()),
        seed: config.seed,
        seed_source: seed_source.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        variants: report.runs.iter().map(|r| r.name.clone()).collect(),
        files: Vec::new(),
    };
    export::write_manifest(out, manifest, &files).map_err(io_err(format!("writing {}", out.display())))?;
    info!("wrote {} files to {}", files.len() + 1, out.display());
    Ok(report)
}

fn print_summary(report: &Report) {
    println!(
        "{:<24} {:>8} {}",
        "variant",
        "deaths",
        SYSTEMS.map(|s| format!("{:>11} {:>11} {:>8}", format!("{s} min"), "mean", "degraded")).join(" ")
    );
    for s in report.summaries() {
        let cols: Vec<String> = SYSTEMS
            .iter()
            .map(|k| {
                let x = &s.systems[*k];
                format!("{:>11.4} {:>11.4} {:>8}", x.min, x.mean, x.ticks_below)
            })
            .collect();
        println!("{:<24} {:>8} {}", s.variant, s.final_deaths, cols.join(" "));
    }
    for s in report.summaries() {
        if let Some(d) = &s.vs_risk {
            let parts: Vec<String> = SYSTEMS
                .iter()
                .map(|k| format!("{k} {:+} ticks", d.ticks_below[*k]))
                .collect();
            println!("{} vs risk: deaths {:+}, degraded {}", s.variant, d.deaths, parts.join(", "));
        }
    }
}

fn oracle(which: OracleKind) -> Result<(), CliError> {
    match which {
        OracleKind::Sir => {
            let params = toy::SirToy::default();
            let c = toy::sir_comparison(&params, 100..110).map_err(CliError::Oracle)?;
            println!("tick,day,simulated_mean,integrator");
            for (t, (s, r)) in c.simulated.iter().zip(&c.reference).enumerate().step_by(24) {
                println!("{t},{},{s:.3},{r:.3}", t / 24);
            }
            println!(
                "N={} I0={} beta={} k={} gamma={}: sup error {:.4} of the integrator peak",
                params.n, params.i0, params.beta, params.k, params.gamma, c.sup_error
            );
        }
        OracleKind::Attack => {
            for target in ["root", "a", "b1"] {
                let (sim, want) = toy::attack_timing(toy::TREE, target).map_err(CliError::Oracle)?;
                println!("tree, attack on {target}:");
                for (id, t) in &sim {
                    let fmt = |t: &Option<u64>| t.map_or("-".to_string(), |t| t.to_string());
                    let mark = if *t == want[id] { "" } else { "  MISMATCH" };
                    println!("  {id:<5} simulated {:>3} oracle {:>3}{mark}", fmt(t), fmt(&want[id]));
                }
            }
            let mean = toy::star_mean(0.5, 1000).map_err(CliError::Oracle)?;
            let mc = citysim::oracle::star_leaves_monte_carlo(4, 1.0, 0.5, 1000, 99);
            println!("star, 4 leaves, p=0.5, 1000 seeds: simulated mean {mean:.3}, independent monte carlo {mc:.3}, expected 2");
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { scenario } => {
            let (config, _) = load_valid(&scenario)?;
            println!(
                "{}: ok ({} days, {} mitigations, {} hazards)",
                config.name,
                config.horizon_days,
                config.mitigations.len(),
                config.hazards.len()
            );
        }
        Command::Run { scenario, variants, out, seed } => {
            let report = execute(&scenario, &variants, &out, seed, false)?;
            print_summary(&report);
        }
        Command::Compare { scenario, all, out, seed } => {
            let report = execute(&scenario, &[], &out, seed, all)?;
            print_summary(&report);
        }
        Command::Oracle { which } => oracle(which)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Scenario(ScenarioError::Invalid(list)) = &e {
                eprintln!("invalid scenario:");
                for m in list {
                    eprintln!("  {m}");
                }
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
