//! Instance files, Monte-Carlo sweeps over `delta` and CSV output.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{lower_bound_report, LowerBoundReport, SolverConfig};
use crate::engine::{run_a3cnp_in, run_baseline_uniform_in, EngineContext, Policy, RunConfig, RunResult};
use crate::error::{Error, Result};
use crate::model::{Instance, Partition};

/// Default `delta` grid, largest first.
pub const DEFAULT_DELTAS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8];

pub const CSV_HEADER: &str = "delta,trial,seed,stop_time,correct,sg_proxy,lb_curve,ub_curve";

/// On-disk instance: `{"M": 6, "clusters": [[1,2],[3,4,5],[6]], "p": 0.6, "q": 0.4}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub clusters: Vec<Vec<usize>>,
    pub p: f64,
    pub q: f64,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        let part = Partition::from_clusters(&self.clusters)?;
        if part.items() != self.m {
            return Err(Error::InvalidPartition(format!(
                "clusters cover {} items but M = {}",
                part.items(),
                self.m
            )));
        }
        Instance::new(part, self.p, self.q)
    }

    pub fn from_instance(instance: &Instance) -> Self {
        InstanceFile {
            m: instance.items(),
            clusters: instance.partition().clusters_one_based(),
            p: instance.p(),
            q: instance.q(),
        }
    }
}

pub fn parse_instance(json: &str, path: &Path) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(json).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    file.into_instance()
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance(&text, path)
}

/// The experiment fixture: `{1,2}{3,4,5}{6}` with `p = 0.6`, `q = 0.4`.
pub fn default_fixture() -> Instance {
    let part = Partition::from_clusters(&[vec![1, 2], vec![3, 4, 5], vec![6]]).expect("valid fixture");
    Instance::new(part, 0.6, 0.4).expect("valid fixture")
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub instance_path: Option<PathBuf>,
    /// Descending.
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    /// `delta`, `seed` and `max_steps` are set per run from the sweep.
    pub run: RunConfig,
    pub policy: Policy,
    pub out: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            instance_path: None,
            deltas: DEFAULT_DELTAS.to_vec(),
            trials: 10,
            base_seed: 0,
            run: RunConfig::default(),
            policy: Policy::Tracking,
            out: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(Error::Config("every delta must lie in (0, 1)".into()));
        }
        if self.deltas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Config("deltas must be strictly descending".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub delta: f64,
    pub trial: usize,
    pub seed: u64,
    pub stop_time: u64,
    pub correct: bool,
    pub sg_proxy: f64,
    pub lb_curve: f64,
    pub ub_curve: f64,
}

/// Reference curves per unit of `ln(1/delta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curves {
    pub d_star_inv: f64,
    /// The explicit suboptimality bound (`NaN` when the regularization is too large).
    pub sg_bound: f64,
}

impl Curves {
    pub fn from_report(r: &LowerBoundReport) -> Self {
        Curves {
            d_star_inv: r.d_star_inv,
            sg_bound: r.sg_bound.unwrap_or(f64::NAN),
        }
    }

    pub fn lb(&self, delta: f64) -> f64 {
        self.d_star_inv * (1.0 / delta).ln()
    }

    pub fn ub(&self, delta: f64) -> f64 {
        self.sg_bound * self.lb(delta)
    }
}

/// Runs `trials` seeds for every `delta` of the sweep, in parallel. Trial `k`
/// uses seed `base_seed + k` at every `delta`, so levels share random streams.
pub fn sweep_instance(instance: &Instance, cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let ctx = EngineContext::new(instance.items())?;
    let report = lower_bound_report(
        instance,
        cfg.run.eps,
        cfg.run.sigma,
        ctx.catalog(),
        &SolverConfig::default(),
    )?;
    let curves = Curves::from_report(&report);
    let jobs: Vec<(f64, usize)> = cfg
        .deltas
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |k| (d, k)))
        .collect();
    jobs.par_iter()
        .map(|&(delta, trial)| {
            let seed = cfg.base_seed + trial as u64;
            let run = RunConfig { delta, seed, ..cfg.run };
            let r = match cfg.policy {
                Policy::Tracking => run_a3cnp_in(&ctx, instance, &run)?,
                Policy::RoundRobin => run_baseline_uniform_in(&ctx, instance, &run)?,
            };
            Ok(ResultRow {
                delta,
                trial,
                seed,
                stop_time: r.stop_time,
                correct: r.correct,
                sg_proxy: r.sg_proxy_at_stop,
                lb_curve: curves.lb(delta),
                ub_curve: curves.ub(delta),
            })
        })
        .collect()
}

/// Loads the configured instance (or the default fixture) and sweeps it.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    let instance = match &cfg.instance_path {
        Some(p) => load_instance(p)?,
        None => default_fixture(),
    };
    sweep_instance(&instance, cfg)
}

/// Runs many seeds of one configuration in parallel.
pub fn run_trials(
    instance: &Instance,
    cfg: &RunConfig,
    policy: Policy,
    seeds: impl IntoParallelIterator<Item = u64>,
) -> Result<Vec<RunResult>> {
    let ctx = EngineContext::new(instance.items())?;
    seeds
        .into_par_iter()
        .map(|seed| {
            let run = RunConfig { seed, ..*cfg };
            match policy {
                Policy::Tracking => run_a3cnp_in(&ctx, instance, &run),
                Policy::RoundRobin => run_baseline_uniform_in(&ctx, instance, &run),
            }
        })
        .collect()
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the rows as CSV with 17 significant digits.
pub fn write_csv<W: Write>(rows: &[ResultRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.delta),
            r.trial,
            r.seed,
            r.stop_time,
            r.correct,
            fmt_float(r.sg_proxy),
            fmt_float(r.lb_curve),
            fmt_float(r.ub_curve)
        )?;
    }
    w.flush()
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(io_err)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Mean stop time per `delta`, in the order the `delta`s first appear.
pub fn mean_stop_times(rows: &[ResultRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(d, _, _)| *d == r.delta) {
            Some(e) => {
                e.1 += r.stop_time as f64;
                e.2 += 1;
            }
            None => out.push((r.delta, r.stop_time as f64, 1)),
        }
    }
    out.into_iter().map(|(d, s, n)| (d, s / n as f64)).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Domain("a slope needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x values coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Slope of mean stop time against `ln(1/delta)` over the three smallest `delta`s.
pub fn stop_time_slope(rows: &[ResultRow]) -> Result<f64> {
    let mut means = mean_stop_times(rows);
    means.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts: Vec<(f64, f64)> = means.iter().take(3).map(|(d, s)| ((1.0 / d).ln(), *s)).collect();
    ls_slope(&pts)
}

/// Fraction of rows whose output was wrong.
pub fn error_fraction(rows: &[ResultRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| !r.correct).count() as f64 / rows.len() as f64
}
