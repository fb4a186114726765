use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "spsc", version, about = "Monte Carlo and SPSC runs of the prey-predator model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plain Monte Carlo: estimates.csv and finals.csv.
    Mc(Flags),
    /// SPSC run: estimates, finals, per-stage transitions and clusters.
    Spsc(Flags),
    /// Pilot-based replication count for a target relative error.
    Nreps(Flags),
    /// Repeated MC vs SPSC campaign with detection and error statistics.
    Compare(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON file with `model`, `policy` and `output` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Replications per run.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Pilot replications.
    #[arg(long)]
    n0: Option<usize>,
    /// Long MC run computing the comparison references.
    #[arg(long)]
    baseline_reps: Option<usize>,
    /// Desk-scale campaign: 200 repeats and a 5000-replication baseline.
    #[arg(long)]
    ci_mode: bool,
    /// Cluster on z-scored observables.
    #[arg(long)]
    standardize: bool,
    /// CSV `solution,reference` replacing the baseline run.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Skip the pilot and use `NAME=S,MEAN` (repeatable).
    #[arg(long = "pilot-stat", value_name = "NAME=S,MEAN")]
    pilot_stats: Vec<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let p = &mut cfg.policy;
        macro_rules! set {
            ($flag:ident => $field:expr) => {
                if let Some(v) = self.$flag.clone() {
                    $field = v;
                }
            };
        }
        set!(seed => p.seed);
        set!(n => p.n);
        set!(horizon => p.horizon);
        set!(stages => p.stages);
        set!(clusters => p.clusters);
        set!(epsilon => p.epsilon);
        set!(alpha => p.alpha);
        set!(n0 => p.n0);
        set!(out => cfg.output.dir);
        if self.repeats.is_some() {
            p.repeats = self.repeats;
        }
        if self.baseline_reps.is_some() {
            p.baseline_reps = self.baseline_reps;
        }
        p.ci_mode |= self.ci_mode;
        p.standardize |= self.standardize;
        if let Some(path) = &self.references {
            p.references = Some(commands::read_references(path)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, run): (&Flags, fn(&RunConfig, &Flags) -> spsc_core::Result<()>) = match &cli.command {
        Command::Mc(f) => (f, commands::mc),
        Command::Spsc(f) => (f, commands::spsc),
        Command::Nreps(f) => (f, commands::nreps),
        Command::Compare(f) => (f, commands::compare),
    };
    let cfg = match flags.resolve().and_then(|c| commands::parse_pilot_stats(&flags.pilot_stats).map(|_| c)) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = flags.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cfg, flags)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (spsc_core::Error::Config(_) | spsc_core::Error::Precondition(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
