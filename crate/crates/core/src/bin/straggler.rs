use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use straggler::cli::{
    cmd_analyze, cmd_compare_fig4, cmd_coverage, cmd_simulate, cmd_sweep, parse_int_list, CliError,
    CliResult, CoverageMode, OutputFormat, SweepSpec, Table,
};
use straggler::model::SystemParams;
use straggler::policies::PolicySpec;
use straggler::sim::SimConfig;

/// Thread count for simulations; results do not depend on it.
const THREADS_ENV: &str = "STRAGGLER_THREADS";

#[derive(Parser)]
#[command(
    name = "straggler",
    version,
    about = "Completion time of redundant batch assignments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability that random batch draws cover every batch.
    Coverage(CoverageArgs),
    /// Exact expected completion time of a policy.
    Analyze(AnalyzeArgs),
    /// Monte Carlo estimate of a policy's completion time.
    Simulate(SimulateArgs),
    /// Mean completion time over a grid of rates, batch counts and policies.
    Sweep(SweepArgs),
    /// Compare the cyclic, grouped and replicated layouts at N = S = 6, B = 3.
    CompareFig4(CompareArgs),
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

impl Output {
    fn emit(&self, table: &Table, default: OutputFormat) -> CliResult<()> {
        let format = self.format.unwrap_or(default);
        match &self.out {
            Some(path) => table.write_to_path(format, path),
            None => table.write(format, std::io::stdout().lock()),
        }
    }
}

#[derive(Args)]
struct CoverageArgs {
    /// Batch counts, e.g. `1-10` or `2,3,5`.
    #[arg(short = 'B', long = "n-batches", default_value = "1-10")]
    n_batches: String,
    /// Worker counts, e.g. `10,15,20,25`.
    #[arg(short = 'N', long = "n-workers", default_value = "10")]
    n_workers: String,
    #[arg(long, value_enum, default_value = "exact")]
    mode: CoverageMode,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(short = 'N', long = "n-workers")]
    n_workers: usize,
    #[arg(short = 'B', long = "n-batches")]
    n_batches: usize,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// balanced, random-cc, cyclic, grouped-overlap, vector:3,2,1 or structure:0,2,4/1,3,5
    #[arg(long, default_value = "balanced")]
    policy: String,
}

impl SystemArgs {
    fn resolve(&self) -> CliResult<(PolicySpec, SystemParams)> {
        let policy: PolicySpec = self.policy.parse()?;
        let system = SystemParams::new(self.n_workers, self.n_workers, self.n_batches, self.rate);
        Ok((policy, system))
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with SweepSpec keys; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short = 'N', long = "n-workers")]
    n_workers: Option<usize>,
    /// Batch counts, e.g. `5,10,25`.
    #[arg(short = 'B', long = "n-batches")]
    n_batches: Option<String>,
    /// Service rates, comma separated.
    #[arg(long, value_delimiter = ',')]
    rate: Option<Vec<f64>>,
    /// Policies, repeatable.
    #[arg(long)]
    policy: Vec<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

impl SweepArgs {
    fn spec(&self) -> CliResult<SweepSpec> {
        let mut spec = match &self.config {
            Some(path) => SweepSpec::load(path)?,
            None => SweepSpec::default(),
        };
        if let Some(n) = self.n_workers {
            spec.n_workers = n;
        }
        if let Some(b) = &self.n_batches {
            spec.b_values = parse_int_list(b)?;
        }
        if let Some(r) = &self.rate {
            spec.rates = r.clone();
        }
        if !self.policy.is_empty() {
            spec.policies = self
                .policy
                .iter()
                .map(|p| p.parse())
                .collect::<Result<_, _>>()?;
        }
        if let Some(s) = self.samples {
            spec.n_samples = s;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(o) = &self.out {
            spec.output_path = o.clone();
        }
        if let Some(f) = self.format {
            spec.format = f;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV}={value} is not a thread count")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Coverage(a) => {
            let table = cmd_coverage(
                &parse_int_list(&a.n_batches)?,
                &parse_int_list(&a.n_workers)?,
                a.mode,
                a.samples,
                a.seed,
            )?;
            a.output.emit(&table, OutputFormat::Csv)
        }
        Command::Analyze(a) => {
            let (policy, system) = a.system.resolve()?;
            a.output
                .emit(&cmd_analyze(&policy, &system)?, OutputFormat::Text)
        }
        Command::Simulate(a) => {
            let (policy, system) = a.system.resolve()?;
            let cfg = SimConfig {
                n_samples: a.samples,
                seed: a.seed,
                rate: system.rate,
                policy,
                system,
            };
            a.output.emit(&cmd_simulate(&cfg)?, OutputFormat::Text)
        }
        Command::Sweep(a) => {
            let spec = a.spec()?;
            let table = cmd_sweep(&spec)?;
            eprintln!(
                "wrote {} rows to {}",
                table.rows.len(),
                spec.output_path.display()
            );
            Ok(())
        }
        Command::CompareFig4(a) => {
            let table = cmd_compare_fig4(a.rate, a.samples, a.seed)?;
            a.output.emit(&table, OutputFormat::Csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
