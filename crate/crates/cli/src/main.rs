//! `lidarsafe` command-line tool.
//!
//! Exit codes: 0 success, 1 the run finished but some check was
//! inconclusive (budget exhausted), 2 invalid input or any other error.

use clap::{Args, Parser, Subcommand};
use lidarsafe::io;
use lidarsafe::pipeline::{
    bench_networks, bench_partition, cmd_abstract, cmd_partition, cmd_preprocess, cmd_simulate, cmd_verify, network_bench_csv,
    partition_bench_csv, report, ArtifactPaths, BudgetConfig, LidarConfig, PipelineError, RunConfig,
};
use lidarsafe::smc::SmcBudget;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

#[derive(Parser)]
#[command(name = "lidarsafe", version, about = "Safe initial sets for LiDAR-driven robots with ReLU network controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Imaging-adapted partition with imaging maps (JSON) and an SVG.
    Partition(RunArgs),
    /// Partition plus per-region conflict caches.
    Preprocess(RunArgs),
    /// Transition system dump (reuses a valid conflict cache).
    Abstract(RunArgs),
    /// Full pipeline: abstraction, safe set and report.
    Verify(RunArgs),
    /// Closed-loop trajectory using ray-cast LiDAR images.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Scaling sweeps on generated workspaces and networks (CSV).
    #[command(subcommand)]
    Bench(Bench),
}

#[derive(Subcommand)]
enum Bench {
    /// Partition size and time over obstacle vertex and laser counts.
    Partition {
        #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
        vertices: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "8,38,118")]
        lasers: Vec<usize>,
        /// Points slower than this are reported as censored.
        #[arg(long)]
        time_limit_ms: Option<u64>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Preprocessing of one region over network architectures.
    Networks {
        /// Hidden widths per architecture, layers separated by `x` (e.g. 32 72 16x16).
        #[arg(long, num_args = 1.., default_values = ["32", "72"])]
        architectures: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct BudgetArgs {
    /// SAT/LP rounds per SMC call.
    #[arg(long, env = "LIDARSAFE_MAX_ROUNDS")]
    max_rounds: Option<u64>,
    /// Conflicts per SAT call.
    #[arg(long, env = "LIDARSAFE_MAX_SAT_CONFLICTS")]
    max_sat_conflicts: Option<u64>,
    /// Wall-clock limit per SMC call.
    #[arg(long, env = "LIDARSAFE_TIME_LIMIT_MS")]
    time_limit_ms: Option<u64>,
    #[arg(long)]
    lp_tol: Option<f64>,
}

impl BudgetArgs {
    fn apply(&self, b: &mut BudgetConfig) {
        if let Some(v) = self.max_rounds {
            b.max_rounds = Some(v);
        }
        if let Some(v) = self.max_sat_conflicts {
            b.max_sat_conflicts = Some(v);
        }
        if let Some(v) = self.time_limit_ms {
            b.time_limit_ms = Some(v);
        }
        if let Some(v) = self.lp_tol {
            b.lp_tol = v;
        }
    }
}

/// A JSON run config, or the same fields given as flags; flags override
/// the file.
#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    workspace: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    dynamics: Option<PathBuf>,
    #[arg(long)]
    laser_count: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    heading: Option<f64>,
    /// 1-based primary laser indices, comma separated.
    #[arg(long, value_delimiter = ',')]
    primary: Option<Vec<usize>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    strict_closed: bool,
    #[arg(long)]
    refine_intra: bool,
    #[arg(long)]
    no_boundary_vertices: bool,
    #[arg(long)]
    no_preprocessing: bool,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, env = "LIDARSAFE_WORKERS")]
    workers: Option<usize>,
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

fn missing(flag: &str) -> PipelineError {
    PipelineError::Config(format!("--{flag} is required without --config"))
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, PipelineError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig {
                workspace: self.workspace.clone().ok_or_else(|| missing("workspace"))?,
                network: self.network.clone().ok_or_else(|| missing("network"))?,
                dynamics: self.dynamics.clone().ok_or_else(|| missing("dynamics"))?,
                lidar: LidarConfig {
                    laser_count: self.laser_count.ok_or_else(|| missing("laser-count"))?,
                    heading: 0.0,
                    primary: None,
                },
                epsilon: None,
                strict_closed: false,
                refine_intra: false,
                include_boundary_vertices: true,
                use_preprocessing: true,
                budget: BudgetConfig::default(),
                workers: None,
                output_dir: self.output_dir.clone().ok_or_else(|| missing("output-dir"))?,
            },
        };
        for (dst, src) in [
            (&mut c.workspace, &self.workspace),
            (&mut c.network, &self.network),
            (&mut c.dynamics, &self.dynamics),
            (&mut c.output_dir, &self.output_dir),
        ] {
            if let Some(p) = src {
                dst.clone_from(p);
            }
        }
        if let Some(n) = self.laser_count {
            c.lidar.laser_count = n;
        }
        if let Some(h) = self.heading {
            c.lidar.heading = h;
        }
        if self.primary.is_some() {
            c.lidar.primary.clone_from(&self.primary);
        }
        if self.epsilon.is_some() {
            c.epsilon = self.epsilon;
        }
        c.strict_closed |= self.strict_closed;
        c.refine_intra |= self.refine_intra;
        c.include_boundary_vertices &= !self.no_boundary_vertices;
        c.use_preprocessing &= !self.no_preprocessing;
        self.budget.apply(&mut c.budget);
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        c.validate()?;
        Ok(c)
    }
}

enum Status {
    Ok,
    Incomplete,
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), PipelineError> {
    match output {
        Some(p) => Ok(io::write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_architecture(s: &str) -> Result<Vec<usize>, PipelineError> {
    s.split('x')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(PipelineError::Config(format!("bad architecture {s:?}: widths must be positive integers"))),
        })
        .collect()
}

fn show(path: &Path) -> String {
    path.display().to_string()
}

fn run(cli: Cli) -> Result<Status, PipelineError> {
    match cli.command {
        Command::Partition(args) => {
            let c = args.resolve()?;
            let a = cmd_partition(&c)?;
            let free = a.partition.free_regions().count();
            println!(
                "regions {} ({} free, {} obstacle), aggregate regions {}",
                a.partition.fine_regions.len(),
                free,
                a.partition.fine_regions.len() - free,
                a.partition.aggregate_regions.len()
            );
            println!("partition {}", show(&ArtifactPaths::new(&c.output_dir).partition));
            Ok(Status::Ok)
        }
        Command::Preprocess(args) => {
            let c = args.resolve()?;
            let s = cmd_preprocess(&c)?;
            let conflicts: usize = s.regions.iter().map(|r| r.conflicts).sum();
            println!(
                "regions {}, conflicts {}, timeouts {}, time {:.3} s",
                s.regions.len(),
                conflicts,
                s.timeouts,
                s.time_s
            );
            Ok(if s.timeouts == 0 { Status::Ok } else { Status::Incomplete })
        }
        Command::Abstract(args) => {
            let c = args.resolve()?;
            let v = cmd_abstract(&c)?;
            let r = report(&v, ArtifactPaths::new(&c.output_dir));
            println!("states {} (+ sink), transitions {}, complete {}", r.states, r.transitions, r.complete);
            println!("abstraction {}", show(&r.artifacts.abstraction));
            Ok(if r.complete { Status::Ok } else { Status::Incomplete })
        }
        Command::Verify(args) => {
            let c = args.resolve()?;
            let r = cmd_verify(&c)?;
            print!("{}", r.to_text());
            Ok(if r.complete { Status::Ok } else { Status::Incomplete })
        }
        Command::Simulate { run, x0, steps } => {
            let c = run.resolve()?;
            let r = cmd_simulate(&c, &x0, steps)?;
            match r.violation {
                None => println!("safe for {steps} steps"),
                Some((t, v)) => println!("violation at step {t}: {v:?}"),
            }
            println!("trajectory {}", show(&c.output_dir.join("simulation.json")));
            Ok(Status::Ok)
        }
        Command::Bench(Bench::Partition { vertices, lasers, time_limit_ms, output }) => {
            let rows = bench_partition(&vertices, &lasers, time_limit_ms.map(Duration::from_millis))?;
            emit(&output, &partition_bench_csv(&rows))?;
            Ok(Status::Ok)
        }
        Command::Bench(Bench::Networks { architectures, seed, budget, output }) => {
            let archs = architectures.iter().map(|a| parse_architecture(a)).collect::<Result<Vec<_>, _>>()?;
            let mut b = BudgetConfig::default();
            budget.apply(&mut b);
            let b: SmcBudget = b.budget();
            let rows = bench_networks(&archs, seed, &b)?;
            emit(&output, &network_bench_csv(&rows))?;
            Ok(Status::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Incomplete) => {
            eprintln!("warning: some checks were inconclusive; their transitions were kept");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
