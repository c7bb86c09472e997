//! The sup-inf allocation problem: per-move values with their closed-form
//! inner optimum, a projected supergradient solver for the regularized
//! allocation, the exploration mixture and the derived hardness constants.

use std::collections::HashMap;

use crate::divergence::bernoulli_kl;
use crate::error::{Error, Result};
use crate::model::{check_oracle_parameters, min_moves, AltMove, Catalog, Instance, PairSet, Partition};

/// Supergradient entries are capped here. Only the noiseless corner
/// (`p = 1` or `q = 0`) produces infinite entries, where any large finite
/// value steers the ascent the same way.
const GRADIENT_CAP: f64 = 10.0;

/// Tolerance on `sum(weights) = 1` when validating an allocation.
const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over the pair index.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidAllocation("no pairs".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidAllocation("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidAllocation(format!("weights sum to {total}")));
        }
        Ok(Allocation(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Allocation(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, k: usize) -> Self {
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Allocation(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum()
    }
}

/// `(1 - eps) lam + eps u`.
pub fn mixture(lam: &Allocation, eps: f64) -> Result<Allocation> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidMixture(eps));
    }
    let u = eps / lam.len() as f64;
    Ok(Allocation(lam.0.iter().map(|w| (1.0 - eps) * w + u).collect()))
}

/// Max coordinate over min coordinate.
pub fn sg_proxy(lam_eps: &Allocation) -> Result<f64> {
    let lo = lam_eps.min();
    if lo <= 0.0 {
        return Err(Error::InvalidAllocation("zero coordinate in sg proxy".into()));
    }
    Ok(lam_eps.max() / lo)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &mut [f64]) {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// `w * d(x, y)` with `0 * inf = 0`.
#[inline]
fn weighted_kl(w: f64, x: f64, y: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else {
        w * bernoulli_kl(x, y)
    }
}

/// Value of one alternative at its inner optimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveValue {
    pub value: f64,
    pub pstar: f64,
    pub qstar: f64,
}

/// Group masses of a move under `lam`.
#[derive(Clone, Copy, Debug)]
struct Masses {
    n1: f64,
    n1c: f64,
    n2: f64,
    n2c: f64,
}

impl Masses {
    fn of(lam: &[f64], mv: &AltMove, np: PairSet, nq: PairSet) -> Self {
        let n1 = mv.n1.sum(lam);
        let n2 = mv.n2.sum(lam);
        Masses {
            n1,
            n1c: ((np - mv.n1).sum(lam)).max(0.0),
            n2,
            n2c: ((nq - mv.n2).sum(lam)).max(0.0),
        }
    }

    /// Inner optimum; an empty group reports `fallback` for its parameter.
    fn optimum(&self, p: f64, q: f64, fallback_q: f64, fallback_p: f64) -> (f64, f64) {
        let dq = self.n1 + self.n2c;
        let qstar = if dq > 0.0 {
            ((self.n1 * p + self.n2c * q) / dq).min(0.5)
        } else {
            fallback_q
        };
        let dp = self.n1c + self.n2;
        let pstar = if dp > 0.0 {
            ((self.n1c * p + self.n2 * q) / dp).max(0.5)
        } else {
            fallback_p
        };
        (pstar, qstar)
    }

    fn value(&self, p: f64, q: f64, pstar: f64, qstar: f64) -> f64 {
        weighted_kl(self.n1, p, qstar)
            + weighted_kl(self.n2c, q, qstar)
            + weighted_kl(self.n2, q, pstar)
            + weighted_kl(self.n1c, p, pstar)
    }
}

/// `h(lam, C')` for a single move, with the inner `(p'', q'')` in closed form.
///
/// Empty-group conventions: `qstar = 0` and `pstar = 1` when the group
/// carries no mass, which leaves the value unchanged.
pub fn move_value(lam: &Allocation, mv: &AltMove, p: f64, q: f64) -> Result<MoveValue> {
    check_oracle_parameters(p, q)?;
    let (np, nq) = mv.source.within_cross_pairs();
    if lam.len() != np.len() + nq.len() {
        return Err(Error::InvalidAllocation(format!(
            "expected {} weights, got {}",
            np.len() + nq.len(),
            lam.len()
        )));
    }
    let masses = Masses::of(lam.weights(), mv, np, nq);
    let (pstar, qstar) = masses.optimum(p, q, 0.0, 1.0);
    Ok(MoveValue {
        value: masses.value(p, q, pstar, qstar),
        pstar,
        qstar,
    })
}

/// `sum_k w_k d(c_k, target_k)` where the target is the clamped weighted mean
/// of `c` over the class's same pairs (at least 1/2) and cross pairs (at most
/// 1/2). This is the exact infimum over all instances in that class.
pub fn class_value(weights: &[f64], c: &[f64], same: PairSet) -> f64 {
    let (mut wp, mut sp, mut wq, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..c.len() {
        if same.contains(k) {
            wp += weights[k];
            sp += weights[k] * c[k];
        } else {
            wq += weights[k];
            sq += weights[k] * c[k];
        }
    }
    let pt = if wp > 0.0 { (sp / wp).max(0.5) } else { 1.0 };
    let qt = if wq > 0.0 { (sq / wq).min(0.5) } else { 0.0 };
    (0..c.len())
        .map(|k| {
            let target = if same.contains(k) { pt } else { qt };
            weighted_kl(weights[k], c[k], target)
        })
        .sum()
}

/// Minimum of [`class_value`] over every catalog class except `exclude`.
pub fn catalog_inf(weights: &[f64], c: &[f64], catalog: &Catalog, exclude: &Partition) -> f64 {
    let own = exclude.same_pairs();
    catalog
        .same_masks()
        .iter()
        .filter(|s| **s != own)
        .map(|s| class_value(weights, c, *s))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Step size numerator `a` in `a / (b + sqrt(k))`.
    pub step_a: f64,
    pub step_b: f64,
    /// Sup-norm change between iterates that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of final iterates averaged into the returned candidate.
    pub tail_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step_a: 1.0,
            step_b: 10.0,
            tol: 1e-8,
            max_iter: 20_000,
            tail_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub lambda_star: Allocation,
    /// Regularized objective at `lambda_star`.
    pub value: f64,
    /// The unregularized value, filled in for `sigma = 0` solves.
    pub d_star: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Index into [`AllocationProblem::moves`] attaining the minimum.
    pub binding_move: usize,
}

/// Iterate and step counter carried across engine steps.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub lambda: Vec<f64>,
    pub k: u64,
}

/// The max-min problem for one clustering and oracle parameters.
///
/// The objective only depends on group masses, so it is invariant under item
/// permutations that preserve the clustering. Those map pairs onto pairs in
/// orbits (within-pairs of equal-size clusters, cross pairs between clusters
/// of the same two sizes), and the solver keeps every iterate constant on
/// each orbit by averaging supergradients over it.
#[derive(Clone, Debug)]
pub struct AllocationProblem {
    partition: Partition,
    p: f64,
    q: f64,
    np: PairSet,
    nq: PairSet,
    n_pairs: usize,
    moves: Vec<AltMove>,
    orbits: Vec<Vec<usize>>,
}

impl AllocationProblem {
    pub fn new(partition: &Partition, p: f64, q: f64) -> Result<Self> {
        check_oracle_parameters(p, q)?;
        let moves = min_moves(partition);
        if moves.is_empty() {
            return Err(Error::NoMoves);
        }
        let (np, nq) = partition.within_cross_pairs();
        Ok(AllocationProblem {
            partition: partition.clone(),
            p,
            q,
            np,
            nq,
            n_pairs: np.len() + nq.len(),
            moves,
            orbits: pair_orbits(partition),
        })
    }

    pub fn from_instance(instance: &Instance) -> Result<Self> {
        AllocationProblem::new(instance.partition(), instance.p(), instance.q())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn moves(&self) -> &[AltMove] {
        &self.moves
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    /// Orbits of pairs under the clustering's symmetries.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    /// Replaces `p` and `q` while keeping the clustering.
    pub fn set_parameters(&mut self, p: f64, q: f64) -> Result<()> {
        check_oracle_parameters(p, q)?;
        self.p = p;
        self.q = q;
        Ok(())
    }

    fn move_masses(&self, lam: &[f64], m: usize) -> Masses {
        Masses::of(lam, &self.moves[m], self.np, self.nq)
    }

    /// `min_m h(lam, m) - sigma/2 |lam|^2` and the first minimizing move.
    pub fn objective(&self, lam: &[f64], sigma: f64) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for m in 0..self.moves.len() {
            let masses = self.move_masses(lam, m);
            let (ps, qs) = masses.optimum(self.p, self.q, 0.0, 1.0);
            let v = masses.value(self.p, self.q, ps, qs);
            if v < best.0 {
                best = (v, m);
            }
        }
        let reg = 0.5 * sigma * lam.iter().map(|w| w * w).sum::<f64>();
        (best.0 - reg, best.1)
    }

    /// A supergradient of the objective at `lam` (envelope theorem on the
    /// binding move, inner optimum held fixed), with the objective value.
    pub fn supergradient(&self, lam: &[f64], sigma: f64) -> (Vec<f64>, f64, usize) {
        let (value, m) = self.objective(lam, sigma);
        let mv = &self.moves[m];
        let masses = self.move_masses(lam, m);
        // an empty group leaves its parameter free on [0, 1/2] or [1/2, 1];
        // the boundary keeps every entry finite
        let (ps, qs) = masses.optimum(self.p, self.q, 0.5, 0.5);
        let (p, q) = (self.p, self.q);
        let cap = |v: f64| v.min(GRADIENT_CAP);
        let on_n1 = cap(bernoulli_kl(p, qs));
        let on_np = cap(bernoulli_kl(p, ps));
        let on_n2 = cap(bernoulli_kl(q, ps));
        let on_nq = cap(bernoulli_kl(q, qs));
        let grad = (0..self.n_pairs)
            .map(|k| {
                let g = if mv.n1.contains(k) {
                    on_n1
                } else if self.np.contains(k) {
                    on_np
                } else if mv.n2.contains(k) {
                    on_n2
                } else {
                    on_nq
                };
                g - sigma * lam[k]
            })
            .collect();
        (grad, value, m)
    }

    /// Averages `v` over each orbit in place.
    pub fn symmetrize(&self, v: &mut [f64]) {
        for orbit in &self.orbits {
            let mean = orbit.iter().map(|&k| v[k]).sum::<f64>() / orbit.len() as f64;
            for &k in orbit {
                v[k] = mean;
            }
        }
    }

    fn step_size(cfg: &SolverConfig, k: u64) -> f64 {
        cfg.step_a / (cfg.step_b + (k as f64).sqrt())
    }

    /// One ascent step; returns the sup-norm movement.
    fn step(&self, lam: &mut [f64], k: u64, sigma: f64, cfg: &SolverConfig) -> f64 {
        let (mut g, _, _) = self.supergradient(lam, sigma);
        self.symmetrize(&mut g);
        let eta = Self::step_size(cfg, k);
        let mut next: Vec<f64> = lam.iter().zip(&g).map(|(l, gi)| l + eta * gi).collect();
        project_simplex(&mut next);
        let moved = lam
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        lam.copy_from_slice(&next);
        moved
    }

    /// Starting point: the symmetrized warm start if it fits, else uniform.
    pub fn initial_state(&self, warm: Option<&[f64]>) -> SolverState {
        let lambda = match warm {
            Some(w) if w.len() == self.n_pairs => {
                let mut v = w.to_vec();
                self.symmetrize(&mut v);
                project_simplex(&mut v);
                v
            }
            _ => vec![1.0 / self.n_pairs as f64; self.n_pairs],
        };
        SolverState { lambda, k: 0 }
    }

    /// Runs `iters` plain ascent steps, continuing the state's step counter.
    pub fn ascend(&self, state: &mut SolverState, sigma: f64, iters: usize, cfg: &SolverConfig) {
        for _ in 0..iters {
            let moved = self.step(&mut state.lambda, state.k, sigma, cfg);
            state.k += 1;
            if moved < cfg.tol {
                break;
            }
        }
    }

    /// Maximizes the regularized objective over the simplex.
    ///
    /// Returns the best of the final iterate, the average of the last
    /// `tail_fraction` of iterates and the best iterate seen; with `sigma = 0`
    /// the maximizer need not be unique and only the value is meaningful.
    pub fn solve(&self, sigma: f64, cfg: &SolverConfig, warm: Option<&[f64]>) -> SolveReport {
        let mut state = self.initial_state(warm);
        let tail_start = cfg.max_iter - ((cfg.max_iter as f64 * cfg.tail_fraction) as usize);
        let mut tail_sum = vec![0.0; self.n_pairs];
        let mut tail_len = 0usize;
        let mut best = (self.objective(&state.lambda, sigma).0, state.lambda.clone());
        let mut converged = false;
        let mut iterations = 0;

        for it in 0..cfg.max_iter {
            let moved = self.step(&mut state.lambda, state.k, sigma, cfg);
            state.k += 1;
            iterations = it + 1;
            let v = self.objective(&state.lambda, sigma).0;
            if v > best.0 {
                best = (v, state.lambda.clone());
            }
            if it >= tail_start {
                for (s, l) in tail_sum.iter_mut().zip(&state.lambda) {
                    *s += l;
                }
                tail_len += 1;
            }
            if moved < cfg.tol {
                converged = true;
                break;
            }
        }

        let mut candidates = vec![state.lambda.clone(), best.1];
        if tail_len > 0 {
            let mut avg: Vec<f64> = tail_sum.iter().map(|s| s / tail_len as f64).collect();
            project_simplex(&mut avg);
            candidates.push(avg);
        }
        let (value, lam) = candidates
            .into_iter()
            .map(|c| (self.objective(&c, sigma).0, c))
            .fold((f64::NEG_INFINITY, Vec::new()), |acc, c| if c.0 > acc.0 { c } else { acc });
        let binding_move = self.objective(&lam, sigma).1;
        SolveReport {
            lambda_star: Allocation(lam),
            value,
            d_star: (sigma == 0.0).then_some(value),
            iterations,
            converged,
            binding_move,
        }
    }
}

/// Groups pairs by `(same cluster?, sorted cluster sizes)`.
fn pair_orbits(partition: &Partition) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = partition.blocks().iter().map(Vec::len).collect();
    let m = partition.items();
    let mut orbits: HashMap<(bool, usize, usize), Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    let mut idx = 0;
    for i in 0..m {
        for j in i + 1..m {
            let (a, b) = (sizes[partition.label(i)], sizes[partition.label(j)]);
            let key = (partition.same_cluster(i, j), a.min(b), a.max(b));
            orbits
                .entry(key)
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(idx);
            idx += 1;
        }
    }
    order.into_iter().map(|k| orbits.remove(&k).unwrap()).collect()
}

/// `D*(C)`: the unregularized sup-inf value.
pub fn d_star(instance: &Instance, cfg: &SolverConfig) -> Result<f64> {
    Ok(AllocationProblem::from_instance(instance)?.solve(0.0, cfg, None).value)
}

/// `lambda*_eps(sigma; C)`.
pub fn lambda_eps(instance: &Instance, eps: f64, sigma: f64, cfg: &SolverConfig) -> Result<Allocation> {
    let problem = AllocationProblem::from_instance(instance)?;
    mixture(&problem.solve(sigma, cfg, None).lambda_star, eps)
}

/// `A(C)`: the smallest unit-weight divergence to any other clustering.
pub fn separation_constant(instance: &Instance, catalog: &Catalog) -> Result<f64> {
    check_catalog(instance, catalog)?;
    let c = instance.pair_means();
    let ones = vec![1.0; c.len()];
    Ok(catalog_inf(&ones, &c, catalog, instance.partition()))
}

fn check_catalog(instance: &Instance, catalog: &Catalog) -> Result<()> {
    if catalog.items() != instance.items() {
        return Err(Error::ItemCountMismatch {
            left: catalog.items(),
            right: instance.items(),
        });
    }
    Ok(())
}

/// Value of a fixed allocation: `inf_{alt} sum lam KL - sigma/2 |lam|^2`,
/// computed over the merge/split neighbourhood.
pub fn allocation_value(instance: &Instance, lam: &Allocation, sigma: f64) -> Result<f64> {
    let problem = AllocationProblem::from_instance(instance)?;
    if lam.len() != problem.n_pairs {
        return Err(Error::InvalidAllocation("length does not match pair count".into()));
    }
    Ok(problem.objective(lam.weights(), sigma).0)
}

/// `D*_eps(sigma; C)`: the value of `lambda*_eps(sigma; C)`.
pub fn d_eps_sigma_star(
    instance: &Instance,
    eps: f64,
    sigma: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let lam = lambda_eps(instance, eps, sigma, cfg)?;
    allocation_value(instance, &lam, sigma)
}

/// `D~*_eps(sigma; C)`, flagged when non-positive (regularization too large
/// for the sample complexity bound to be meaningful).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TildeD {
    pub value: f64,
    pub warning: bool,
}

pub fn tilde_d_from(lam_eps: &Allocation, separation: f64, sigma: f64) -> TildeD {
    let value = lam_eps.min() * separation - 0.5 * sigma * lam_eps.norm_sq();
    TildeD {
        value,
        warning: value <= 0.0,
    }
}

pub fn tilde_d(
    instance: &Instance,
    eps: f64,
    sigma: f64,
    catalog: &Catalog,
    cfg: &SolverConfig,
) -> Result<TildeD> {
    let lam = lambda_eps(instance, eps, sigma, cfg)?;
    Ok(tilde_d_from(&lam, separation_constant(instance, catalog)?, sigma))
}

/// The explicit suboptimality bound from the max/min allocation ratio and
/// the norm bound on `lambda*_eps`.
pub fn sg_bound_from(lam_eps: &Allocation, separation: f64, eps: f64, sigma: f64) -> Result<f64> {
    let (hi, lo) = (lam_eps.max(), lam_eps.min());
    let n = lam_eps.len() as f64;
    let norm_bound = (1.0 - eps).powi(2) + (2.0 * eps - eps * eps) / n;
    let denom = 1.0 - sigma / (2.0 * lo * separation) * norm_bound;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::RegularizationTooLarge(denom));
    }
    Ok(hi / lo / denom)
}

pub fn sg_bound(
    instance: &Instance,
    eps: f64,
    sigma: f64,
    catalog: &Catalog,
    cfg: &SolverConfig,
) -> Result<f64> {
    let lam = lambda_eps(instance, eps, sigma, cfg)?;
    sg_bound_from(&lam, separation_constant(instance, catalog)?, eps, sigma)
}

/// Everything the `solve-lb` command and the sweep curves need.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundReport {
    pub d_star: f64,
    pub d_star_inv: f64,
    /// `lambda*(sigma; C)` before mixing.
    pub lambda: Allocation,
    pub lambda_eps: Allocation,
    pub sigma: f64,
    pub eps: f64,
    pub separation: f64,
    pub sg_bound: Option<f64>,
    pub tilde_d: TildeD,
}

pub fn lower_bound_report(
    instance: &Instance,
    eps: f64,
    sigma: f64,
    catalog: &Catalog,
    cfg: &SolverConfig,
) -> Result<LowerBoundReport> {
    let problem = AllocationProblem::from_instance(instance)?;
    let d_star = problem.solve(0.0, cfg, None).value;
    let lambda = problem.solve(sigma, cfg, None).lambda_star;
    let lam_eps = mixture(&lambda, eps)?;
    let separation = separation_constant(instance, catalog)?;
    Ok(LowerBoundReport {
        d_star,
        d_star_inv: 1.0 / d_star,
        sg_bound: sg_bound_from(&lam_eps, separation, eps, sigma).ok(),
        tilde_d: tilde_d_from(&lam_eps, separation, sigma),
        lambda,
        lambda_eps: lam_eps,
        sigma,
        eps,
        separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MoveKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn instance(clusters: &[&[usize]], p: f64, q: f64) -> Instance {
        let part = Partition::from_clusters(&clusters.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap();
        Instance::new(part, p, q).unwrap()
    }

    fn fixture() -> Instance {
        instance(&[&[1, 2], &[3, 4, 5], &[6]], 0.6, 0.4)
    }

    fn random_allocation(rng: &mut impl Rng, n: usize) -> Allocation {
        let mut w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        Allocation(w)
    }

    #[test]
    fn allocation_validation() {
        assert!(Allocation::new(vec![0.5, 0.5]).is_ok());
        assert!(Allocation::new(vec![0.5, 0.6]).is_err());
        assert!(Allocation::new(vec![1.5, -0.5]).is_err());
        assert!(Allocation::new(vec![]).is_err());
    }

    #[test]
    fn merge_of_two_singletons() {
        let inst = instance(&[&[1], &[2]], 0.6, 0.4);
        let mv = &min_moves(inst.partition())[0];
        assert_eq!(mv.kind, MoveKind::Merge);
        let v = move_value(&Allocation::uniform(1), mv, 0.6, 0.4).unwrap();
        assert_eq!(v.pstar, 0.5);
        assert!((v.value - bernoulli_kl(0.4, 0.5)).abs() < 1e-15);
        assert!((v.value - 0.0201360).abs() < 1e-6);
    }

    #[test]
    fn zero_mass_moves() {
        let inst = fixture();
        let moves = min_moves(inst.partition());
        let split12 = moves.iter().find(|m| m.kind == MoveKind::Split && m.n1.len() == 1).unwrap();
        // all weight away from (1,2)
        let mut w = vec![1.0 / 14.0; 15];
        w[0] = 0.0;
        let v = move_value(&Allocation(w), split12, 0.6, 0.4).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.qstar, 0.4);
        // point mass on an unflipped pair
        for mv in &moves {
            let untouched = (0..15).find(|k| !mv.n1.contains(*k) && !mv.n2.contains(*k)).unwrap();
            let v = move_value(&Allocation::point_mass(15, untouched), mv, 0.6, 0.4).unwrap();
            assert_eq!(v.value, 0.0);
        }
        assert!(move_value(&Allocation::uniform(15), split12, 0.4, 0.6).is_err());
    }

    #[test]
    fn objective_and_regularizer() {
        let inst = fixture();
        let problem = AllocationProblem::from_instance(&inst).unwrap();
        let lam = Allocation::uniform(15);
        let direct = problem
            .moves()
            .iter()
            .map(|m| move_value(&lam, m, 0.6, 0.4).unwrap().value)
            .fold(f64::INFINITY, f64::min);
        let (v0, _) = problem.objective(lam.weights(), 0.0);
        let (v1, _) = problem.objective(lam.weights(), 0.3);
        assert!((v0 - direct).abs() < 1e-15);
        assert!((v0 - v1 - 0.15 * lam.norm_sq()).abs() < 1e-15);
        let (vp, _) = problem.objective(Allocation::point_mass(15, 3).weights(), 0.2);
        assert!(vp <= -0.1 + 1e-15);
    }

    #[test]
    fn explicit_fixture_lower_bound() {
        // optimum puts 1/6 on each within pair and 1/24 on each cross pair
        let inst = instance(&[&[1, 2], &[3, 4], &[5, 6]], 0.6, 0.4);
        let exact = bernoulli_kl(0.6, 0.45) / 6.0 + bernoulli_kl(0.4, 0.45) / 2.0;
        let d = d_star(&inst, &SolverConfig::default()).unwrap();
        assert!((d - exact).abs() < 1e-7 * exact.max(1.0), "{d} vs {exact}");
        assert!((exact - 0.0100847645).abs() < 1e-9);
    }

    #[test]
    fn section_five_fixture_constants() {
        let inst = fixture();
        let cat = Catalog::new(6).unwrap();
        // independent value from a derivative-free search over the symmetric allocations
        let d = d_star(&inst, &SolverConfig::default()).unwrap();
        assert!((d - 0.0106342).abs() < 1e-3 * 0.0106342, "{d}");
        let a = separation_constant(&inst, &cat).unwrap();
        assert!((a - 0.074179).abs() < 1e-6, "{a}");
    }

    #[test]
    fn uniform_for_extreme_clusterings() {
        for m in [4usize, 6] {
            for clusters in [vec![(1..=m).collect::<Vec<_>>()], (1..=m).map(|i| vec![i]).collect()] {
                let part = Partition::from_clusters(&clusters).unwrap();
                let problem = AllocationProblem::new(&part, 0.6, 0.4).unwrap();
                for sigma in [0.0, 1e-3] {
                    let r = problem.solve(sigma, &SolverConfig::default(), None);
                    let u = 1.0 / problem.n_pairs() as f64;
                    assert!(r.lambda_star.weights().iter().all(|w| (w - u).abs() < 1e-4));
                }
            }
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let problem = AllocationProblem::from_instance(&fixture()).unwrap();
        let cfg = SolverConfig::default();
        let cold = problem.solve(1e-3, &cfg, None);
        let warm_from = Allocation::point_mass(15, 4);
        let warm = problem.solve(1e-3, &cfg, Some(warm_from.weights()));
        assert!((cold.value - warm.value).abs() < 1e-6);
    }

    #[test]
    fn separation_examples() {
        let cat6 = Catalog::new(6).unwrap();
        let noiseless = instance(&[&[1, 2], &[3, 4, 5], &[6]], 1.0, 0.0);
        let a = separation_constant(&noiseless, &cat6).unwrap();
        let expected = (12f64).ln() + 11.0 * (12f64 / 11.0).ln();
        assert!((a - expected).abs() < 1e-9);
        assert!((a - 3.4420).abs() < 1e-4);

        let two = instance(&[&[1], &[2]], 0.6, 0.4);
        let a = separation_constant(&two, &Catalog::new(2).unwrap()).unwrap();
        assert!((a - bernoulli_kl(0.4, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn mixture_properties() {
        let u = Allocation::uniform(15);
        assert_eq!(mixture(&u, 0.4).unwrap(), u);
        let pm = Allocation::point_mass(15, 0);
        let mixed = mixture(&pm, 0.3).unwrap();
        assert!((mixed.min() - 0.02).abs() < 1e-15);
        let tiny = mixture(&pm, 1e-12).unwrap();
        assert!(tiny.weights().iter().zip(pm.weights()).all(|(a, b)| (a - b).abs() <= 1e-12));
        assert!(mixture(&pm, 0.0).is_err());
        assert!(mixture(&pm, 1.0).is_err());
    }

    #[test]
    fn sg_quantities() {
        assert_eq!(sg_proxy(&Allocation::uniform(6)).unwrap(), 1.0);
        assert!((sg_proxy(&Allocation(vec![0.6, 0.4])).unwrap() - 1.5).abs() < 1e-15);
        assert!(sg_proxy(&Allocation::point_mass(3, 0)).is_err());

        let u = Allocation::uniform(15);
        assert!((sg_bound_from(&u, 0.07, 0.1, 1e-15).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            sg_bound_from(&u, 0.07, 0.1, 10.0),
            Err(Error::RegularizationTooLarge(_))
        ));

        let t = tilde_d_from(&u, 0.3, 0.01);
        assert!((t.value - (0.3 / 15.0 - 0.005 / 15.0)).abs() < 1e-15);
        assert!(!t.warning);
        assert!(tilde_d_from(&u, 0.3, 100.0).warning);
    }

    #[test]
    fn report_on_fixture() {
        let inst = fixture();
        let cat = Catalog::new(6).unwrap();
        let r = lower_bound_report(&inst, 0.1, 1e-3, &cat, &SolverConfig::default()).unwrap();
        assert!(r.tilde_d.value > 0.0);
        assert!(r.sg_bound.unwrap() >= 1.0);
        let d = d_eps_sigma_star(&inst, 0.1, 1e-3, &SolverConfig::default()).unwrap();
        assert!(r.tilde_d.value <= d + 1e-12);
        assert!(d <= r.d_star + 1e-9);
    }

    #[test]
    fn neighbourhood_equals_full_catalog() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 3..=5 {
            let cat = Catalog::new(m).unwrap();
            for class in 0..cat.len() {
                let inst = Instance::new(cat.partition(class).clone(), 0.7, 0.2).unwrap();
                let problem = AllocationProblem::from_instance(&inst).unwrap();
                let c = inst.pair_means();
                for _ in 0..3 {
                    let lam = random_allocation(&mut rng, problem.n_pairs());
                    let (local, _) = problem.objective(lam.weights(), 0.0);
                    let full = catalog_inf(lam.weights(), &c, &cat, inst.partition());
                    assert!((local - full).abs() < 1e-9, "{local} vs {full}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn concave_objective(seed in 0u64..10_000, theta in 0.01f64..0.99, sigma in 0.0f64..0.1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let problem = AllocationProblem::from_instance(&fixture()).unwrap();
            let a = random_allocation(&mut rng, 15);
            let b = random_allocation(&mut rng, 15);
            let mix: Vec<f64> = a.weights().iter().zip(b.weights()).map(|(x, y)| theta * x + (1.0 - theta) * y).collect();
            let f = |w: &[f64]| problem.objective(w, sigma).0;
            prop_assert!(f(&mix) >= theta * f(a.weights()) + (1.0 - theta) * f(b.weights()) - 1e-9);
        }

        #[test]
        fn supergradient_inequality(seed in 0u64..10_000, sigma in 0.0f64..0.1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let problem = AllocationProblem::from_instance(&fixture()).unwrap();
            let a = random_allocation(&mut rng, 15);
            let b = random_allocation(&mut rng, 15);
            let (g, fa, _) = problem.supergradient(a.weights(), sigma);
            let fb = problem.objective(b.weights(), sigma).0;
            let lin: f64 = g.iter().zip(b.weights().iter().zip(a.weights())).map(|(gi, (x, y))| gi * (x - y)).sum();
            prop_assert!(fb <= fa + lin + 1e-9);
        }

        #[test]
        fn simplex_projection_is_feasible(v in proptest::collection::vec(-3.0f64..3.0, 1..20)) {
            let mut w = v.clone();
            project_simplex(&mut w);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
