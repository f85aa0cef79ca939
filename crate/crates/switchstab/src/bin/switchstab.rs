//! Thin command-line front end over the library pipeline runners.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use switchstab::config::{self, LawChoice, RunConfig};

#[derive(Parser)]
#[command(
    name = "switchstab",
    about = "Switched affine stability toolbox for grid-side converter LVRT dynamics",
    version
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (flat key = value sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $SWITCHSTAB_OUT, then config, then cwd).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on concurrent evaluator workers.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed override for randomized subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory; writes trajectory.csv, events.csv, metrics.json.
    Simulate {
        /// Simulation horizon in seconds.
        #[arg(long)]
        t_end: Option<f64>,
        /// Integration step in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Switching law: threshold | fixed1 | fixed2.
        #[arg(long)]
        law: Option<String>,
    },
    /// Classify both subsystem equilibria; writes equilibria.json.
    Equilibria,
    /// Compute the stability certificate; writes certificate.json.
    Stability,
    /// Sobol' sensitivity of the stability index; writes sobol.csv + summary.
    Sobol {
        /// Sample count per matrix (power of two).
        #[arg(long = "M")]
        m: Option<usize>,
    },
    /// Particle swarm maximization of the stability index; writes pso.json.
    Pso {
        #[arg(long)]
        swarm_size: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Run the bundled fixtures and write a pass/fail summary.
    Reproduce,
}

fn run(cli: Cli) -> switchstab::Result<bool> {
    if let Some(jobs) = cli.common.jobs {
        // global pool; ignore the error if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }

    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.pso.seed = Some(seed);
    }
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| std::env::var_os("SWITCHSTAB_OUT").map(PathBuf::from))
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    match cli.command {
        Command::Simulate { t_end, dt, law } => {
            if let Some(v) = t_end {
                cfg.sim.t_end = v;
            }
            if let Some(v) = dt {
                cfg.sim.dt = v;
            }
            if let Some(l) = law {
                cfg.sim.law = match l.as_str() {
                    "threshold" => LawChoice::Threshold,
                    "fixed1" => LawChoice::Fixed(1),
                    "fixed2" => LawChoice::Fixed(2),
                    other => {
                        return Err(switchstab::Error::Config(format!(
                            "unknown law `{other}` (threshold|fixed1|fixed2)"
                        )))
                    }
                };
            }
            config::run_simulate(&cfg, &out)?;
            Ok(true)
        }
        Command::Equilibria => {
            config::run_equilibria(&cfg, &out)?;
            Ok(true)
        }
        Command::Stability => {
            let cert = config::run_stability(&cfg, &out)?;
            println!(
                "stability: feasible = {}, mu = {:.6}",
                cert.feasible, cert.mu
            );
            Ok(true)
        }
        Command::Sobol { m } => {
            if let Some(v) = m {
                cfg.sobol.m = v;
            }
            let res = config::run_sobol(&cfg, &out)?;
            for (i, name) in res.names.iter().enumerate() {
                println!("{name}: S = {:.4}, S_T = {:.4}", res.s[i], res.s_t[i]);
            }
            Ok(true)
        }
        Command::Pso {
            swarm_size,
            max_iters,
        } => {
            if let Some(v) = swarm_size {
                cfg.pso.swarm_size = v;
            }
            if let Some(v) = max_iters {
                cfg.pso.max_iters = v;
            }
            let res = config::run_pso(&cfg, &out)?;
            println!(
                "pso: best fitness = {:.6} after {} evaluations",
                res.best_fitness, res.evaluations
            );
            Ok(true)
        }
        Command::Reproduce => {
            let all_pass = config::run_reproduce(&out)?;
            println!(
                "reproduce: {}",
                if all_pass { "all checks passed" } else { "CHECKS FAILED" }
            );
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is_criterion_inapplicable() => {
            eprintln!("criterion inapplicable: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
