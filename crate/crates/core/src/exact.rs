//! Exact minimization of WOWA: exhaustive enumeration and branch-and-bound.
//!
//! The branch-and-bound bound rests on the fact that, for nonincreasing
//! weights, every rank-weight vector `omega` built along some scenario order
//! (and every convex combination of such vectors, the expectation `p`
//! included) satisfies `sum_j lambda_j F(X, c_j) <= WOWA(X)`. Minimizing the
//! left-hand side is a deterministic problem with element costs
//! `sum_j lambda_j c_ji`, solved by the base solver under the node's
//! fixing. `lambda` is improved by a few Frank-Wolfe steps toward the rank
//! weights of each minimizer; the first candidate is always `p`, so the
//! bound is never weaker than the minimum expected cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use itertools::Itertools;

use crate::approx::approx_solve;
use crate::error::{Error, Result};
use crate::model::{ProblemKind, ScenarioInstance, Solution};
use crate::scalar::Scalar;
use crate::solvers::{BuiltinSolver, DeterministicSolver, PartialFixing};

/// Enumeration refuses search spaces larger than this.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Default time limit for [`exact_bb`].
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofStatus {
    Optimal,
    TimeLimit,
}

impl ProofStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ProofStatus::Optimal => "optimal",
            ProofStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult<T> {
    pub solution: Solution,
    /// WOWA value of `solution`.
    pub objective: T,
    /// Nodes whose bound was evaluated (solutions, for enumeration).
    pub node_count: u64,
    pub status: ProofStatus,
    /// Best proven lower bound on the optimum.
    pub lower_bound: T,
    /// Enumeration only: whether the returned optimum is Pareto efficient
    /// among all feasible solutions.
    pub pareto_efficient: Option<bool>,
}

/// Number of feasible solutions (as a float, it may be astronomically large).
pub fn search_space_size(kind: &ProblemKind, n: usize) -> f64 {
    match kind {
        ProblemKind::Selection { q } => {
            if *q > n {
                return 0.0;
            }
            (0..(*q).min(n - q)).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
        }
        ProblemKind::Assignment { m } => (1..=*m).fold(1.0, |acc, i| acc * i as f64),
        ProblemKind::Explicit { solutions } => solutions.len() as f64,
    }
}

fn for_each_feasible(inst_kind: &ProblemKind, n: usize, mut f: impl FnMut(&[usize])) {
    match inst_kind {
        ProblemKind::Selection { q } => (0..n).combinations(*q).for_each(|c| f(&c)),
        ProblemKind::Assignment { m } => (0..*m).permutations(*m).for_each(|p| {
            let flat: Vec<usize> = p.iter().enumerate().map(|(r, &c)| r * m + c).collect();
            f(&flat)
        }),
        ProblemKind::Explicit { solutions } => {
            solutions.iter().for_each(|s| f(Solution::new(s.iter().copied()).chosen()))
        }
    }
}

/// `a` Pareto-dominates `b`: no worse in every scenario, better in one.
pub fn dominates<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Global minimum of WOWA by enumerating every feasible solution.
///
/// Among solutions tied with the minimum (within tolerance) a Pareto
/// efficient one is returned when one exists.
pub fn brute_force<T: Scalar>(inst: &ScenarioInstance<T>) -> Result<ExactResult<T>> {
    let size = search_space_size(inst.kind(), inst.n());
    if size > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::SearchSpaceTooLarge { estimate: size, limit: BRUTE_FORCE_LIMIT });
    }
    let tol = T::tolerance();
    let mut best = T::infinity();
    let mut ties: Vec<(Vec<usize>, Vec<T>, T)> = Vec::new();
    let mut count = 0u64;
    for_each_feasible(inst.kind(), inst.n(), |chosen| {
        count += 1;
        let costs = inst.scenario_costs_unchecked(chosen);
        let value = inst.operator().eval_unchecked(&costs);
        if value < best {
            best = value;
            ties.retain(|(_, _, v)| *v <= best + tol * best.abs().max(T::one()));
        }
        if value <= best + tol * best.abs().max(T::one()) {
            ties.push((chosen.to_vec(), costs, value));
        }
    });
    if ties.is_empty() {
        return Err(Error::Infeasible("the feasible set is empty".into()));
    }
    let mut efficient = vec![true; ties.len()];
    for_each_feasible(inst.kind(), inst.n(), |chosen| {
        let costs = inst.scenario_costs_unchecked(chosen);
        for (flag, (_, tie_costs, _)) in efficient.iter_mut().zip(&ties) {
            if *flag && dominates(&costs, tie_costs) {
                *flag = false;
            }
        }
    });
    let pick = |only_efficient: bool| {
        ties.iter()
            .zip(&efficient)
            .filter(|(_, &e)| e || !only_efficient)
            .min_by(|a, b| a.0 .2.partial_cmp(&b.0 .2).unwrap_or(Ordering::Equal))
            .map(|(t, &e)| (t, e))
    };
    let ((chosen, _, value), is_efficient) = pick(true).or_else(|| pick(false)).expect("non-empty ties");
    Ok(ExactResult {
        solution: Solution::new(chosen.iter().copied()),
        objective: *value,
        node_count: count,
        status: ProofStatus::Optimal,
        lower_bound: *value,
        pareto_efficient: Some(is_efficient),
    })
}

/// Extends `fix` with every assignment it implies; `Err` when no completion exists.
fn propagate(kind: &ProblemKind, n: usize, mut fix: PartialFixing) -> Result<PartialFixing> {
    let infeasible = || Error::Infeasible("fixing admits no feasible completion".into());
    match kind {
        ProblemKind::Selection { q } => {
            let free: Vec<usize> = (0..n).filter(|&e| !fix.is_fixed(e)).collect();
            let have = fix.forced_in.len();
            if have > *q || have + free.len() < *q {
                return Err(infeasible());
            }
            if have == *q {
                fix.forced_out.extend(free);
            } else if have + free.len() == *q {
                fix.forced_in.extend(free);
            }
        }
        ProblemKind::Assignment { m } => {
            let m = *m;
            loop {
                let mut changed = false;
                let forced: Vec<usize> = fix.forced_in.iter().copied().collect();
                for e in forced {
                    let (r, c) = (e / m, e % m);
                    for o in (0..m).map(|k| r * m + k).chain((0..m).map(|k| k * m + c)) {
                        if o != e && !fix.forced_out.contains(&o) {
                            if fix.forced_in.contains(&o) {
                                return Err(infeasible());
                            }
                            fix.forced_out.insert(o);
                            changed = true;
                        }
                    }
                }
                let lines = (0..m)
                    .map(|r| (0..m).map(|k| r * m + k).collect::<Vec<_>>())
                    .chain((0..m).map(|c| (0..m).map(|k| k * m + c).collect::<Vec<_>>()));
                for line in lines {
                    let open: Vec<usize> = line.iter().copied().filter(|e| !fix.forced_out.contains(e)).collect();
                    match open.as_slice() {
                        [] => return Err(infeasible()),
                        [only] if !fix.forced_in.contains(only) => {
                            fix.forced_in.insert(*only);
                            changed = true;
                        }
                        _ => {}
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        ProblemKind::Explicit { solutions } => {
            let admitted: Vec<Solution> =
                solutions.iter().map(|s| Solution::new(s.iter().copied())).filter(|s| fix.admits(s)).collect();
            if admitted.is_empty() {
                return Err(infeasible());
            }
            for e in 0..n {
                if fix.is_fixed(e) {
                    continue;
                }
                let hits = admitted.iter().filter(|s| s.contains(e)).count();
                if hits == admitted.len() {
                    fix.forced_in.insert(e);
                } else if hits == 0 {
                    fix.forced_out.insert(e);
                }
            }
        }
    }
    if fix.forced_in.intersection(&fix.forced_out).next().is_some() {
        return Err(infeasible());
    }
    Ok(fix)
}

struct Bounder<'a, T> {
    inst: &'a ScenarioInstance<T>,
    solver: BuiltinSolver,
}

struct NodeBound<T> {
    value: T,
    lambda: Vec<T>,
    /// Minimizers found while bounding, each with its WOWA value.
    candidates: Vec<(Solution, T)>,
}

impl<'a, T: Scalar> Bounder<'a, T> {
    fn weighted_costs(&self, lambda: &[T]) -> Vec<T> {
        let costs = self.inst.costs();
        (0..self.inst.n()).map(|i| lambda.iter().zip(costs).map(|(&l, row)| l * row[i]).sum()).collect()
    }

    /// Lower bound over completions of `fix`; `None` when there is none.
    fn bound(&self, fix: &PartialFixing, warm: Option<&[T]>, iterations: usize, cutoff: T) -> Option<NodeBound<T>> {
        let p = self.inst.probabilities().values().to_vec();
        let mut best = NodeBound { value: T::neg_infinity(), lambda: p.clone(), candidates: Vec::new() };
        let mut lambda = warm.map_or_else(|| p.clone(), <[T]>::to_vec);
        let starts: Vec<Vec<T>> = if warm.is_some() { vec![p, lambda.clone()] } else { vec![p] };
        let evaluate = |lambda: &[T], best: &mut NodeBound<T>| -> Option<Vec<T>> {
            let (sol, value) = self.solver.solve(self.inst.kind(), &self.weighted_costs(lambda), fix).ok()?;
            let costs = self.inst.scenario_costs_unchecked(sol.chosen());
            let rank = self.inst.operator().rank_weights_for(&costs).expect("K costs").per_scenario();
            best.candidates.push((sol, self.inst.operator().eval_unchecked(&costs)));
            if value > best.value {
                best.value = value;
                best.lambda = lambda.to_vec();
            }
            Some(rank)
        };
        let mut target = None;
        for start in &starts {
            target = Some(evaluate(start, &mut best)?);
        }
        for t in 0..iterations {
            if best.value >= cutoff {
                break;
            }
            let step = T::lit(2.0) / T::from_count(t + 2);
            let toward = target.take().expect("previous evaluation");
            for (l, g) in lambda.iter_mut().zip(&toward) {
                *l = (T::one() - step) * *l + step * *g;
            }
            target = Some(evaluate(&lambda, &mut best)?);
        }
        Some(best)
    }
}

/// Lower bound used by [`exact_bb`] for the subtree of `fix`, or `None`
/// when `fix` has no feasible completion.
pub fn node_lower_bound<T: Scalar>(inst: &ScenarioInstance<T>, fix: &PartialFixing) -> Result<Option<T>> {
    if !inst.weights().is_nonincreasing() {
        return Err(Error::Unsupported("branch-and-bound bounds need nonincreasing weights".into()));
    }
    let bounder = Bounder { inst, solver: BuiltinSolver };
    let fix = match propagate(inst.kind(), inst.n(), fix.clone()) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    Ok(bounder.bound(&fix, None, ROOT_ITERATIONS, T::infinity()).map(|b| b.value))
}

const ROOT_ITERATIONS: usize = 60;
const NODE_ITERATIONS: usize = 6;

struct Node<T> {
    bound: T,
    seq: u64,
    fix: PartialFixing,
    lambda: Vec<T>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Node<T> {}

impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Node<T> {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first branch-and-bound over the element variables.
///
/// Branches on the lowest-index free element, include branch first. The
/// incumbent starts from [`approx_solve`]. Returns the best incumbent with
/// [`ProofStatus::TimeLimit`] if `time_limit` expires.
pub fn exact_bb<T: Scalar>(inst: &ScenarioInstance<T>, time_limit: Duration) -> Result<ExactResult<T>> {
    if !inst.weights().is_nonincreasing() {
        return Err(Error::Unsupported("branch-and-bound needs nonincreasing weights".into()));
    }
    let start = Instant::now();
    let n = inst.n();
    let bounder = Bounder { inst, solver: BuiltinSolver };
    let approx = approx_solve(inst)?;
    let mut incumbent = (approx.solution, approx.wowa_objective);
    let prune_at = |inc: T| inc - T::lit(1e-12) * inc.abs().max(T::one());

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0u64;

    let mut consider = |fix: PartialFixing,
                        warm: Option<&[T]>,
                        iterations: usize,
                        incumbent: &mut (Solution, T),
                        heap: &mut BinaryHeap<Node<T>>| {
        let Ok(fix) = propagate(inst.kind(), n, fix) else { return };
        nodes += 1;
        let Some(b) = bounder.bound(&fix, warm, iterations, prune_at(incumbent.1)) else { return };
        for (sol, value) in b.candidates {
            if value < incumbent.1 {
                *incumbent = (sol, value);
            }
        }
        if b.value < prune_at(incumbent.1) && (0..n).any(|e| !fix.is_fixed(e)) {
            seq += 1;
            heap.push(Node { bound: b.value, seq, fix, lambda: b.lambda });
        }
    };

    consider(PartialFixing::new(), None, ROOT_ITERATIONS, &mut incumbent, &mut heap);
    let mut status = ProofStatus::Optimal;
    while let Some(node) = heap.pop() {
        if node.bound >= prune_at(incumbent.1) {
            continue;
        }
        if start.elapsed() >= time_limit {
            heap.push(node);
            status = ProofStatus::TimeLimit;
            break;
        }
        let Some(e) = (0..n).find(|&e| !node.fix.is_fixed(e)) else { continue };
        let include = node.fix.clone().with_in(e);
        let exclude = node.fix.with_out(e);
        consider(include, Some(&node.lambda), NODE_ITERATIONS, &mut incumbent, &mut heap);
        consider(exclude, Some(&node.lambda), NODE_ITERATIONS, &mut incumbent, &mut heap);
    }
    let lower_bound = match status {
        ProofStatus::Optimal => incumbent.1,
        ProofStatus::TimeLimit => heap.iter().map(|n| n.bound).fold(incumbent.1, T::min),
    };
    Ok(ExactResult {
        solution: incumbent.0,
        objective: incumbent.1,
        node_count: nodes,
        status,
        lower_bound,
        pareto_efficient: None,
    })
}
