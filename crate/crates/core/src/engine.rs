//! The run loop: initial round, then project, track, query and test until
//! the statistic clears the threshold. A round-robin baseline shares the
//! loop and the stopping rule.

use std::collections::HashMap;

use crate::allocation::{AllocationProblem, SolverConfig, SolverState};
use crate::error::{Error, Result};
use crate::estimator::{project, PairStats, ProjectedInstance};
use crate::model::{pair_count, Catalog, Instance, Pair, Partition};
use crate::oracle::{Oracle, SimulatedOracle};
use crate::sampling::select_index;
use crate::stopping::{ClassGroups, StatisticKind, StopDecision, ThresholdConfig, ThresholdKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub delta: f64,
    pub eps: f64,
    pub sigma: f64,
    pub statistic: StatisticKind,
    pub threshold: ThresholdKind,
    /// Re-solve the allocation every this many steps (and whenever the
    /// projected clustering changes).
    pub resolve_every: u64,
    pub max_steps: u64,
    pub seed: u64,
    /// Ascent steps spent the first time a clustering is projected.
    pub cold_iters: usize,
    /// Ascent steps per re-solve afterwards, continuing from the cached iterate.
    pub warm_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta: 0.1,
            eps: 0.1,
            sigma: 1e-3,
            statistic: StatisticKind::Feasible,
            threshold: ThresholdKind::Experimental,
            resolve_every: 1,
            max_steps: 1_000_000,
            seed: 0,
            cold_iters: 2_000,
            warm_iters: 10,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.resolve_every == 0 {
            return bad("resolve_every must be at least 1".into());
        }
        if m < 2 {
            return bad("a run needs at least two items".into());
        }
        if self.max_steps <= pair_count(m) as u64 {
            return bad(format!(
                "max_steps = {} does not exceed the initial round of {} queries",
                self.max_steps,
                pair_count(m)
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// D-tracking towards the regularized optimal allocation.
    Tracking,
    /// Cycle through the pairs in lexicographic order.
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub stop_time: u64,
    pub output_partition: Partition,
    pub correct: bool,
    pub sg_proxy_at_stop: f64,
    pub final_statistic: f64,
    pub final_threshold: f64,
    pub truncated: bool,
    pub counts: Vec<u64>,
}

/// One query and what the loop concluded right after it.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub t: u64,
    pub pair: Pair,
    pub y: bool,
    /// Absent during the initial round.
    pub decision: Option<StopDecision>,
    pub class_id: Option<usize>,
    /// Extremes of the allocation the pair was chosen against, if any.
    pub target_min: Option<f64>,
    pub target_max: Option<f64>,
}

/// Catalog and class grouping, shared by every run on the same item count.
#[derive(Clone, Debug)]
pub struct EngineContext {
    catalog: Catalog,
    groups: ClassGroups,
}

impl EngineContext {
    pub fn new(m: usize) -> Result<Self> {
        let catalog = Catalog::new(m)?;
        let groups = ClassGroups::new(&catalog);
        Ok(EngineContext { catalog, groups })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn items(&self) -> usize {
        self.catalog.items()
    }
}

struct CachedSolve {
    problem: AllocationProblem,
    state: SolverState,
}

/// Step-by-step driver; [`run_with_oracle`] loops it to a decision.
pub struct Engine<'a> {
    ctx: &'a EngineContext,
    cfg: RunConfig,
    policy: Policy,
    thresholds: ThresholdConfig,
    solver: SolverConfig,
    stats: PairStats,
    projection: Option<ProjectedInstance>,
    decision: Option<StopDecision>,
    cache: HashMap<usize, CachedSolve>,
    target: Vec<f64>,
    target_class: Option<usize>,
}

impl<'a> Engine<'a> {
    pub fn new(ctx: &'a EngineContext, cfg: RunConfig, policy: Policy) -> Result<Self> {
        let m = ctx.items();
        cfg.validate(m)?;
        let n = pair_count(m);
        Ok(Engine {
            ctx,
            cfg,
            policy,
            thresholds: ThresholdConfig::new(cfg.threshold, cfg.delta, m)?,
            solver: SolverConfig::default(),
            stats: PairStats::new(m)?,
            projection: None,
            decision: None,
            cache: HashMap::new(),
            target: vec![1.0 / n as f64; n],
            target_class: None,
        })
    }

    pub fn stats(&self) -> &PairStats {
        &self.stats
    }

    pub fn projection(&self) -> Option<&ProjectedInstance> {
        self.projection.as_ref()
    }

    pub fn decision(&self) -> Option<&StopDecision> {
        self.decision.as_ref()
    }

    /// The allocation currently being tracked (mixture included).
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    fn n_pairs(&self) -> usize {
        self.target.len()
    }

    fn next_index(&self) -> usize {
        let t = self.stats.t() as usize;
        if t < self.n_pairs() {
            return t;
        }
        match self.policy {
            Policy::Tracking => select_index(&self.stats, &self.target),
            Policy::RoundRobin => t % self.n_pairs(),
        }
    }

    /// Updates the tracked allocation for the current projection.
    fn refresh_target(&mut self, force: bool) -> Result<()> {
        let proj = self.projection.as_ref().expect("projection precedes tracking");
        let changed = self.target_class != Some(proj.class_id);
        if !force && !changed && self.stats.t() % self.cfg.resolve_every != 0 {
            return Ok(());
        }
        let solver = self.solver;
        let entry = match self.cache.entry(proj.class_id) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let problem = AllocationProblem::new(&proj.partition, proj.p, proj.q)?;
                let mut state = problem.initial_state(None);
                problem.ascend(&mut state, self.cfg.sigma, self.cfg.cold_iters, &solver);
                e.insert(CachedSolve { problem, state })
            }
        };
        entry.problem.set_parameters(proj.p, proj.q)?;
        entry
            .problem
            .ascend(&mut entry.state, self.cfg.sigma, self.cfg.warm_iters, &solver);
        let u = self.cfg.eps / self.target.len() as f64;
        for (t, l) in self.target.iter_mut().zip(&entry.state.lambda) {
            *t = (1.0 - self.cfg.eps) * l + u;
        }
        self.target_class = Some(proj.class_id);
        Ok(())
    }

    /// Queries one pair, updates the statistics and evaluates the stopping
    /// rule once every pair has been seen.
    pub fn step<O: Oracle>(&mut self, oracle: &mut O) -> Result<TraceStep> {
        let tracked = self.stats.t() as usize >= self.n_pairs() && self.policy == Policy::Tracking;
        let (target_min, target_max) = if tracked {
            let lo = self.target.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = self.target.iter().copied().fold(0.0, f64::max);
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };

        let k = self.next_index();
        let pair = self.stats.pair_index().pair(k);
        let y = oracle.query(pair)?;
        self.stats.update_index(k, y);

        let mut step = TraceStep {
            t: self.stats.t(),
            pair,
            y,
            decision: None,
            class_id: None,
            target_min,
            target_max,
        };
        if (self.stats.t() as usize) < self.n_pairs() {
            return Ok(step);
        }

        let proj = project(&self.stats, &self.ctx.catalog)?;
        let statistic = self
            .ctx
            .groups
            .statistic(self.cfg.statistic, &self.stats, &proj.partition)?;
        let threshold = self.thresholds.threshold(&self.stats)?;
        let decision = StopDecision::new(statistic, threshold, self.cfg.statistic);
        step.decision = Some(decision);
        step.class_id = Some(proj.class_id);
        self.projection = Some(proj);
        self.decision = Some(decision);
        if self.policy == Policy::Tracking && !decision.stop {
            self.refresh_target(false)?;
        }
        Ok(step)
    }

    /// Max over min coordinate of the tracked allocation, re-solved for the
    /// final projection. Round-robin tracks the uniform allocation.
    fn final_sg_proxy(&mut self) -> Result<f64> {
        match self.policy {
            Policy::RoundRobin => Ok(1.0),
            Policy::Tracking => {
                self.refresh_target(true)?;
                let lo = self.target.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = self.target.iter().copied().fold(0.0, f64::max);
                Ok(hi / lo)
            }
        }
    }
}

/// Runs one policy against any oracle until it stops or hits `max_steps`.
/// `truth`, when known, decides `correct`.
pub fn run_with_oracle<O: Oracle>(
    ctx: &EngineContext,
    cfg: &RunConfig,
    policy: Policy,
    oracle: &mut O,
    truth: Option<&Partition>,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<RunResult> {
    if oracle.items() != ctx.items() {
        return Err(Error::ItemCountMismatch {
            left: oracle.items(),
            right: ctx.items(),
        });
    }
    let mut engine = Engine::new(ctx, *cfg, policy)?;
    loop {
        let step = engine.step(oracle)?;
        let stop = step.decision.is_some_and(|d| d.stop);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(step);
        }
        let truncated = !stop && engine.stats.t() >= cfg.max_steps;
        if stop || truncated {
            let decision = *engine.decision.as_ref().expect("decision after initial round");
            let output = engine.projection.as_ref().expect("projection").partition.clone();
            let correct = match truth {
                Some(t) => t.same_class(&output)?,
                None => false,
            };
            return Ok(RunResult {
                stop_time: engine.stats.t(),
                correct,
                sg_proxy_at_stop: engine.final_sg_proxy()?,
                final_statistic: decision.statistic,
                final_threshold: decision.threshold,
                truncated,
                counts: engine.stats.counts().to_vec(),
                output_partition: output,
            });
        }
    }
}

fn run_simulated(
    ctx: &EngineContext,
    instance: &Instance,
    cfg: &RunConfig,
    policy: Policy,
    trace: Option<&mut Vec<TraceStep>>,
) -> Result<RunResult> {
    let mut oracle = SimulatedOracle::new(instance.clone(), cfg.seed);
    run_with_oracle(ctx, cfg, policy, &mut oracle, Some(instance.partition()), trace)
}

pub fn run_a3cnp_in(ctx: &EngineContext, instance: &Instance, cfg: &RunConfig) -> Result<RunResult> {
    run_simulated(ctx, instance, cfg, Policy::Tracking, None)
}

pub fn run_baseline_uniform_in(ctx: &EngineContext, instance: &Instance, cfg: &RunConfig) -> Result<RunResult> {
    run_simulated(ctx, instance, cfg, Policy::RoundRobin, None)
}

/// Runs the tracking algorithm on a simulated oracle seeded with `cfg.seed`.
pub fn run_a3cnp(instance: &Instance, cfg: &RunConfig) -> Result<RunResult> {
    run_a3cnp_in(&EngineContext::new(instance.items())?, instance, cfg)
}

/// Round-robin sampling with the same stopping rule.
pub fn run_baseline_uniform(instance: &Instance, cfg: &RunConfig) -> Result<RunResult> {
    run_baseline_uniform_in(&EngineContext::new(instance.items())?, instance, cfg)
}

/// [`run_a3cnp`] that also returns every step.
pub fn run_a3cnp_traced(instance: &Instance, cfg: &RunConfig) -> Result<(RunResult, Vec<TraceStep>)> {
    let ctx = EngineContext::new(instance.items())?;
    let mut trace = Vec::new();
    let result = run_simulated(&ctx, instance, cfg, Policy::Tracking, Some(&mut trace))?;
    Ok((result, trace))
}
