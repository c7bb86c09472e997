use std::path::{Path, PathBuf};
use std::process::ExitCode;

use a3cnp::allocation::{lower_bound_report, SolverConfig};
use a3cnp::engine::{run_with_oracle, EngineContext, Policy, RunConfig};
use a3cnp::harness::{self, SweepConfig, DEFAULT_DELTAS};
use a3cnp::model::{bell_number, Catalog};
use a3cnp::oracle::{write_trace, Recording, SimulatedOracle};
use a3cnp::stopping::{StatisticKind, ThresholdKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "a3cnp", version, about = "Active clustering with a noisy pairwise oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower bound, optimal allocation and gap constants for an instance.
    SolveLb {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1e-3)]
        sigma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One simulated run.
    Run {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the query trace (`t,i,j,y`) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo sweep over a grid of confidence levels.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// Comma-separated, descending.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Trial k runs with seed `seed + k`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Number of clusterings of M items.
    Bell {
        #[arg(long)]
        m: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Instance JSON; the built-in six-item fixture when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 1e-3)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = StatisticArg::Feasible)]
    statistic: StatisticArg,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Experimental)]
    threshold: ThresholdArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Tracking)]
    policy: PolicyArg,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
    #[arg(long, default_value_t = 1)]
    resolve_every: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Feasible,
    Glr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Theory,
    Experimental,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Tracking,
    RoundRobin,
}

impl RunArgs {
    fn config(&self, delta: f64, seed: u64) -> RunConfig {
        RunConfig {
            delta,
            eps: self.eps,
            sigma: self.sigma,
            statistic: match self.statistic {
                StatisticArg::Feasible => StatisticKind::Feasible,
                StatisticArg::Glr => StatisticKind::Glr,
            },
            threshold: match self.threshold {
                ThresholdArg::Theory => ThresholdKind::Theory,
                ThresholdArg::Experimental => ThresholdKind::Experimental,
            },
            resolve_every: self.resolve_every,
            max_steps: self.max_steps,
            seed,
            ..RunConfig::default()
        }
    }

    fn policy(&self) -> Policy {
        match self.policy {
            PolicyArg::Tracking => Policy::Tracking,
            PolicyArg::RoundRobin => Policy::RoundRobin,
        }
    }

    fn instance(&self) -> a3cnp::Result<a3cnp::model::Instance> {
        match &self.instance {
            Some(p) => harness::load_instance(p),
            None => Ok(harness::default_fixture()),
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> a3cnp::Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|source| a3cnp::Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json values serialize")
}

fn execute(command: Command) -> a3cnp::Result<()> {
    match command {
        Command::Bell { m } => {
            println!("{}", bell_number(m)?);
            Ok(())
        }
        Command::SolveLb {
            instance,
            eps,
            sigma,
            out,
        } => {
            let inst = harness::load_instance(&instance)?;
            let catalog = Catalog::new(inst.items())?;
            let r = lower_bound_report(&inst, eps, sigma, &catalog, &SolverConfig::default())?;
            let value = json!({
                "d_star": r.d_star,
                "d_star_inv": r.d_star_inv,
                "lambda": r.lambda.weights(),
                "sigma": r.sigma,
                "eps": r.eps,
                "sg_bound": r.sg_bound,
                "tilde_d": r.tilde_d.value,
            });
            if r.tilde_d.warning {
                eprintln!("warning: tilde_d = {} is not positive; sigma is too large", r.tilde_d.value);
            }
            emit(&pretty(&value), out.as_deref())
        }
        Command::Run {
            common,
            delta,
            seed,
            trace,
            out,
        } => {
            let inst = common.instance()?;
            let cfg = common.config(delta, seed);
            let ctx = EngineContext::new(inst.items())?;
            let mut oracle = Recording::new(SimulatedOracle::new(inst.clone(), seed));
            let r = run_with_oracle(&ctx, &cfg, common.policy(), &mut oracle, Some(inst.partition()), None)?;
            if let Some(path) = trace {
                write_trace(&path, oracle.records())?;
            }
            let value = json!({
                "stop_time": r.stop_time,
                "clusters": r.output_partition.clusters_one_based(),
                "correct": r.correct,
                "sg_proxy": r.sg_proxy_at_stop,
                "truncated": r.truncated,
            });
            emit(&pretty(&value), out.as_deref())
        }
        Command::Sweep {
            common,
            deltas,
            trials,
            seed,
            out,
        } => {
            let cfg = SweepConfig {
                instance_path: common.instance.clone(),
                deltas: deltas.unwrap_or_else(|| DEFAULT_DELTAS.to_vec()),
                trials,
                base_seed: seed,
                run: common.config(0.1, seed),
                policy: common.policy(),
                out: out.clone(),
            };
            let rows = harness::sweep(&cfg)?;
            match &out {
                Some(path) => harness::emit_csv(&rows, path),
                None => harness::write_csv(&rows, std::io::stdout().lock()).map_err(|source| a3cnp::Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                }),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
