use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dbrt_sim::config::{parse_config, ScenarioConfig};
use dbrt_sim::metrics::TRAFFIC_LOAD_DEFINITION;
use dbrt_sim::sim::{report_row, write_outputs, SimError, Simulation, Variant, REPORT_COLUMNS};
use dbrt_sim::sweep::{sweep, write_sweep_csv, Execution, SweepError, SweepSpec, SweepVar};
use dbrt_sim::verify::verify;
use dbrt_sim::{NodeId, SimTime};

/// Environment variable overriding the output directory.
const OUT_DIR_ENV: &str = "DBRT_OUT_DIR";

#[derive(Parser)]
#[command(name = "dbrt-sim", version, about = "MANET simulator: DSDV with driven backup routing tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV outputs.
    Run {
        config: PathBuf,
        /// Also write events.csv with every dispatched event.
        #[arg(long)]
        events: bool,
    },
    /// Run a parameter sweep and write sweep.csv.
    Sweep {
        config: PathBuf,
        /// Swept variable: nodes or pause.
        #[arg(long = "var")]
        variable: String,
        /// Comma-separated values; defaults depend on the variable.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "dsdv,dbrt")]
        variants: Vec<String>,
        /// Number of seeds, numbered from 1.
        #[arg(long, default_value_t = SweepSpec::DEFAULT_SEEDS)]
        seeds: u64,
        /// Run points one after another instead of on a thread pool.
        #[arg(long)]
        sequential: bool,
    },
    /// Run with all invariant monitors armed.
    Verify { config: PathBuf },
    /// Write routing and backup tables as they stand at a given time.
    DumpTables {
        config: PathBuf,
        #[arg(long)]
        at: f64,
    },
}

enum Failure {
    Config(String),
    Invariant,
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Invariant => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Flow { .. } | SimError::FlowCount { .. } | SimError::Placement { .. } => {
                Failure::Config(e.to_string())
            }
            SimError::Io { .. } | SimError::Csv { .. } => Failure::Internal(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Spec(_) => Failure::Config(e.to_string()),
            SweepError::Scenario { ref source, .. } => match Failure::from_sim(source) {
                Failure::Config(_) => Failure::Config(e.to_string()),
                _ => Failure::Internal(e.to_string()),
            },
            SweepError::Csv(_) => Failure::Internal(e.to_string()),
        }
    }
}

impl Failure {
    fn from_sim(e: &SimError) -> Failure {
        match e {
            SimError::Io { .. } | SimError::Csv { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn run(config: &Path, events: bool) -> Result<(), Failure> {
    let cfg = load(config)?;
    let mut sim = Simulation::new(&cfg)?;
    if events {
        sim = sim.with_event_log();
    }
    let out = sim.run();
    let dir = out_dir();
    write_outputs(&out, &dir)?;
    for (k, v) in REPORT_COLUMNS.iter().zip(report_row(&out)) {
        println!("{k:>20} = {v}");
    }
    println!("{TRAFFIC_LOAD_DEFINITION}");
    println!("outputs written to {}", dir.display());
    Ok(())
}

fn run_sweep(
    config: &Path,
    variable: &str,
    values: Vec<f64>,
    variants: &[String],
    seeds: u64,
    sequential: bool,
) -> Result<(), Failure> {
    let base = load(config)?;
    let variable: SweepVar = variable.parse()?;
    let values = if values.is_empty() {
        match variable {
            SweepVar::NodeCount => SweepSpec::DEFAULT_NODE_COUNTS.to_vec(),
            SweepVar::PauseTime => SweepSpec::DEFAULT_PAUSE_TIMES.to_vec(),
        }
    } else {
        values
    };
    let spec = SweepSpec {
        variable,
        values,
        variants: variants
            .iter()
            .map(|v| v.parse::<Variant>())
            .collect::<Result<_, _>>()?,
        seeds: (1..=seeds).collect(),
    };
    let exec = if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let rows = sweep(&spec, &base, exec)?;
    let dir = out_dir();
    std::fs::create_dir_all(&dir).map_err(internal)?;
    let file = std::fs::File::create(dir.join("sweep.csv")).map_err(internal)?;
    write_sweep_csv(&spec, &rows, file)?;
    println!("{} rows written to {}", rows.len(), dir.join("sweep.csv").display());
    println!("{TRAFFIC_LOAD_DEFINITION}");
    Ok(())
}

fn run_verify(config: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    let report = verify(&cfg)?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Invariant)
    }
}

fn dump_tables(config: &Path, at: f64) -> Result<(), Failure> {
    let cfg = load(config)?;
    if !(at >= 0.0 && at <= cfg.duration) {
        return Err(Failure::Config(format!("--at {at} lies outside 0..{}", cfg.duration)));
    }
    let mut sim = Simulation::new(&cfg)?;
    sim.run_until(SimTime::from_secs(at));
    let dir = out_dir();
    std::fs::create_dir_all(&dir).map_err(internal)?;
    let f = std::fs::File::create(dir.join("tables.csv")).map_err(internal)?;
    dbrt_sim::dsdv::write_tables(sim.tables(), f).map_err(internal)?;
    let f = std::fs::File::create(dir.join("backup_tables.csv")).map_err(internal)?;
    dbrt_sim::dbrt::write_backup_tables(
        sim.agents()
            .iter()
            .enumerate()
            .map(|(i, a)| (NodeId::from_index(i), &a.backup)),
        f,
    )
    .map_err(internal)?;
    println!("tables at t={at} written to {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, events } => run(&config, events),
        Command::Sweep {
            config,
            variable,
            values,
            variants,
            seeds,
            sequential,
        } => run_sweep(&config, &variable, values, &variants, seeds, sequential),
        Command::Verify { config } => run_verify(&config),
        Command::DumpTables { config, at } => dump_tables(&config, at),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Invariant => eprintln!("invariant violated"),
                Failure::Internal(m) => eprintln!("internal error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
