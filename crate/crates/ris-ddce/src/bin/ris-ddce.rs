use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ris_ddce::config::{ConfigError, Protocol, ScenarioConfig, SweepAxis};
use ris_ddce::report::{analyze, write_analysis_csv, write_simulation_csv, ReportError};
use ris_ddce::scenarios;
use ris_ddce::sim::{run, simulated_crossovers, ExperimentError};
use ris_ddce::validation::{self, CRITERIA};
use ris_ddce_core::analysis::{find_crossover, AnalysisError};

const THREADS_ENV: &str = "RIS_DDCE_THREADS";

#[derive(Parser)]
#[command(name = "ris-ddce", version, about = "Hybrid-RIS channel estimation: analysis, simulation and validation")]
struct Cli {
    /// Worker threads (falls back to RIS_DDCE_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytical BER and SE over the scenario sweep.
    Analyze(RunArgs),
    /// Run the Monte Carlo experiment of a scenario.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Append a wall_time_s column (makes the output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Power at which DD overtakes PD, per series.
    Crossover {
        #[command(flatten)]
        run: RunArgs,
        /// Also locate the crossover in simulation.
        #[arg(long)]
        simulate: bool,
    },
    /// Run the acceptance criteria and print a PASS/FAIL report.
    Validate {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file, or the name of a built-in scenario (fig2..fig7).
    config: String,
    /// Output CSV; the effective config is written next to it as
    /// `<out>.config.toml`. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// PSK order of the base system.
    #[arg(long = "mod")]
    order: Option<usize>,
    /// Override any scenario key, e.g. `--set system.rho=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Report(ReportError),
    #[error(transparent)]
    Experiment(ExperimentError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error("{0} of {1} criteria failed")]
    Validation(usize, usize),
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Config(c) => CliError::Config(c),
            other => CliError::Report(other),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => CliError::Config(c),
            other => CliError::Experiment(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Threads(_) => 2,
            CliError::Validation(..) => 1,
            _ => 3,
        }
    }
}

impl RunArgs {
    fn load(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut overrides = Vec::new();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(t) = self.trials {
            overrides.push(format!("trials={t}"));
        }
        if let Some(d) = self.order {
            overrides.push(format!("system.psk={d}"));
        }
        overrides.extend(self.overrides.iter().cloned());
        let path = Path::new(&self.config);
        match scenarios::builtin(&self.config) {
            Some(text) if !path.exists() => ScenarioConfig::from_toml_with(text, &overrides),
            _ => ScenarioConfig::load(path, &overrides),
        }
    }

    /// Output sink plus the effective config echoed next to a file output.
    fn sink(&self, cfg: &ScenarioConfig) -> Result<Box<dyn Write>, CliError> {
        match &self.out {
            None => Ok(Box::new(io::stdout().lock())),
            Some(path) => {
                let output = |source| CliError::Output {
                    path: path.clone(),
                    source,
                };
                let mut echo = path.clone().into_os_string();
                echo.push(".config.toml");
                fs::write(&echo, cfg.to_toml()).map_err(|source| CliError::Output {
                    path: echo.into(),
                    source,
                })?;
                Ok(Box::new(BufWriter::new(File::create(path).map_err(output)?)))
            }
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Threads(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(args) => {
            let cfg = args.load()?;
            let rows = analyze(&cfg)?;
            let sink = args.sink(&cfg)?;
            write_analysis_csv(sink, &cfg, &rows)?;
        }
        Command::Simulate { run: args, timing } => {
            let cfg = args.load()?;
            let rows = run(&cfg)?;
            let sink = args.sink(&cfg)?;
            write_simulation_csv(sink, &cfg, &rows, timing)?;
        }
        Command::Crossover { run: args, simulate } => {
            let cfg = args.load()?;
            if cfg.sweep.axis != SweepAxis::PowerDbm {
                return Err(ConfigError::Invalid("crossover needs a power_dbm sweep".into()).into());
            }
            let lo = cfg.sweep.values[0];
            let hi = *cfg.sweep.values.last().expect("validated non-empty sweep");
            let simulated = if simulate {
                let mut sim_cfg = cfg.clone();
                sim_cfg.protocols = vec![Protocol::Pd, Protocol::Dd];
                simulated_crossovers(&run(&sim_cfg)?)
            } else {
                Vec::new()
            };
            for series in cfg.series() {
                let inp = cfg.analysis_input(&series.system)?;
                let name = if series.label.is_empty() {
                    format!("{}-PSK", series.system.psk)
                } else {
                    series.label.clone()
                };
                let analytic = find_crossover(&inp, lo, hi)?;
                print!("{name}: analytical crossover {analytic:.1} dBm");
                if let Some((_, sim)) = simulated.iter().find(|(l, _)| *l == series.label) {
                    match sim {
                        Some(x) => print!(", simulated {x:.1} dBm"),
                        None => print!(", simulated: no crossing in [{lo}, {hi}] dBm"),
                    }
                }
                println!();
            }
        }
        Command::Validate { only } => {
            let ids: Vec<u8> = if only.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                only
            };
            let mut failed = 0;
            for id in &ids {
                match validation::run_criterion(*id) {
                    Some(report) => {
                        println!("{report}");
                        failed += usize::from(!report.passed);
                    }
                    None => return Err(ConfigError::Invalid(format!("no criterion {id}")).into()),
                }
            }
            if failed > 0 {
                return Err(CliError::Validation(failed, ids.len()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let result = builder
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))
        .and_then(|pool| pool.install(|| execute(cli.command)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
