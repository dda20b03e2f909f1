//! Scenario instances, solutions and their evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::wowa::{ProbabilityVector, RankWeights, WeightVector, Wowa};

/// The feasible set of an instance.
///
/// Assignment elements are flattened row-major: edge `(row, col)` of the
/// `m x m` bipartite graph is element `row * m + col` (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Choose exactly `q` of the `n` elements.
    Selection { q: usize },
    /// Perfect matchings of the complete `m x m` bipartite graph, `n = m^2`.
    Assignment { m: usize },
    /// An explicitly listed family of feasible subsets.
    Explicit { solutions: Vec<Vec<usize>> },
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Selection { .. } => "selection",
            ProblemKind::Assignment { .. } => "assignment",
            ProblemKind::Explicit { .. } => "explicit",
        }
    }
}

/// One broken rule found by [`validate_parts`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: &str, rule: impl Into<String>) -> Self {
        Self { field: field.to_string(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every instance invariant and reports all violations.
pub fn validate_parts<T: Scalar>(
    n: usize,
    k: usize,
    kind: &ProblemKind,
    costs: &[Vec<T>],
    p: &[T],
    v: &[T],
) -> Vec<Violation> {
    let mut out = Vec::new();
    let tol = T::tolerance();
    if k == 0 {
        out.push(Violation::new("K", "must be positive"));
    }
    if costs.len() != k {
        out.push(Violation::new("costs", format!("has {} rows, expected K = {k}", costs.len())));
    }
    for (j, row) in costs.iter().enumerate() {
        if row.len() != n {
            out.push(Violation::new("costs", format!("row {j} has {} entries, expected n = {n}", row.len())));
        }
        if let Some(i) = row.iter().position(|&c| !(c >= T::zero() && c.is_finite())) {
            out.push(Violation::new(
                "costs",
                format!("costs[{j}][{i}] = {} is not a finite nonnegative number", row[i]),
            ));
        }
    }
    if p.len() != k {
        out.push(Violation::new("p", format!("has {} entries, expected K = {k}", p.len())));
    }
    if let Some(j) = p.iter().position(|&x| !(x > T::zero() && x <= T::one())) {
        out.push(Violation::new("p", format!("p[{j}] = {} must lie in (0, 1]", p[j])));
    }
    let ps: T = p.iter().copied().sum();
    if (ps - T::one()).abs() > tol {
        out.push(Violation::new("p", format!("sums to {ps}, expected 1")));
    }
    if v.len() != k {
        out.push(Violation::new("v", format!("has {} entries, expected K = {k}", v.len())));
    }
    if let Some(j) = v.iter().position(|&x| !(x >= T::zero() && x <= T::one())) {
        out.push(Violation::new("v", format!("v[{j}] = {} must lie in [0, 1]", v[j])));
    }
    let vs: T = v.iter().copied().sum();
    if (vs - T::one()).abs() > tol {
        out.push(Violation::new("v", format!("sums to {vs}, expected 1")));
    }
    match kind {
        ProblemKind::Selection { q } => {
            if *q == 0 || *q > n {
                out.push(Violation::new("kind", format!("selection requires 1 <= q <= n, got q = {q}, n = {n}")));
            }
        }
        ProblemKind::Assignment { m } => {
            if *m == 0 || m.checked_mul(*m) != Some(n) {
                out.push(Violation::new(
                    "kind",
                    format!("assignment requires n = m^2 with m >= 1, got m = {m}, n = {n}"),
                ));
            }
        }
        ProblemKind::Explicit { solutions } => {
            if solutions.is_empty() {
                out.push(Violation::new("kind", "explicit family must list at least one solution"));
            }
            if let Some(s) = solutions.iter().position(|s| s.iter().any(|&e| e >= n)) {
                out.push(Violation::new("kind", format!("explicit solution {s} references an element >= n = {n}")));
            }
        }
    }
    out
}

/// A feasible-solution candidate: the set of chosen element indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Solution {
    chosen: Vec<usize>,
}

impl Solution {
    pub fn new(chosen: impl IntoIterator<Item = usize>) -> Self {
        let mut chosen: Vec<usize> = chosen.into_iter().collect();
        chosen.sort_unstable();
        chosen.dedup();
        Self { chosen }
    }

    /// Row `r` is matched to column `cols[r]`.
    pub fn from_assignment(cols: &[usize]) -> Self {
        let m = cols.len();
        Self::new(cols.iter().enumerate().map(|(r, &c)| r * m + c))
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn contains(&self, e: usize) -> bool {
        self.chosen.binary_search(&e).is_ok()
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn characteristic(&self, n: usize) -> Vec<bool> {
        let mut x = vec![false; n];
        for &e in &self.chosen {
            if e < n {
                x[e] = true;
            }
        }
        x
    }
}

/// A discrete optimization problem with `K` cost scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInstance<T> {
    kind: ProblemKind,
    n: usize,
    costs: Vec<Vec<T>>,
    raw_p: Vec<T>,
    raw_v: Vec<T>,
    wowa: Wowa<T>,
}

impl<T: Scalar> ScenarioInstance<T> {
    /// `costs[j][i]` is the cost of element `i` under scenario `j`.
    pub fn new(kind: ProblemKind, costs: Vec<Vec<T>>, p: Vec<T>, v: Vec<T>) -> Result<Self> {
        let n = costs.first().map_or(0, Vec::len);
        let violations = validate_parts(n, costs.len(), &kind, &costs, &p, &v);
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let wowa = Wowa::new(WeightVector::new(v.clone())?, ProbabilityVector::new(p.clone())?)?;
        Ok(Self { kind, n, costs, raw_p: p, raw_v: v, wowa })
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    /// Number of elements.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of scenarios.
    pub fn k(&self) -> usize {
        self.costs.len()
    }

    pub fn costs(&self) -> &[Vec<T>] {
        &self.costs
    }

    /// Costs of element `i` across all scenarios.
    pub fn element_costs(&self, i: usize) -> Vec<T> {
        self.costs.iter().map(|row| row[i]).collect()
    }

    /// Probabilities exactly as supplied (before renormalization).
    pub fn raw_p(&self) -> &[T] {
        &self.raw_p
    }

    /// Weights exactly as supplied (before renormalization).
    pub fn raw_v(&self) -> &[T] {
        &self.raw_v
    }

    pub fn operator(&self) -> &Wowa<T> {
        &self.wowa
    }

    pub fn weights(&self) -> &WeightVector<T> {
        self.wowa.weights()
    }

    pub fn probabilities(&self) -> &ProbabilityVector<T> {
        self.wowa.probabilities()
    }

    /// Ok if `sol` belongs to the feasible set of this instance.
    pub fn check_feasible(&self, sol: &Solution) -> Result<()> {
        let chosen = sol.chosen();
        if let Some(&e) = chosen.iter().find(|&&e| e >= self.n) {
            return Err(Error::Infeasible(format!("element {e} out of range for n = {}", self.n)));
        }
        match &self.kind {
            ProblemKind::Selection { q } => {
                if chosen.len() != *q {
                    return Err(Error::Infeasible(format!("{} elements chosen, expected q = {q}", chosen.len())));
                }
            }
            ProblemKind::Assignment { m } => {
                let mut rows = vec![false; *m];
                let mut cols = vec![false; *m];
                for &e in chosen {
                    let (r, c) = (e / m, e % m);
                    if rows[r] || cols[c] {
                        return Err(Error::Infeasible(format!("edge ({r}, {c}) conflicts with another chosen edge")));
                    }
                    rows[r] = true;
                    cols[c] = true;
                }
                if chosen.len() != *m {
                    return Err(Error::Infeasible(format!(
                        "{} edges chosen, a perfect matching needs {m}",
                        chosen.len()
                    )));
                }
            }
            ProblemKind::Explicit { solutions } => {
                if !solutions.iter().any(|s| Solution::new(s.iter().copied()) == *sol) {
                    return Err(Error::Infeasible(format!("{chosen:?} is not one of the listed solutions")));
                }
            }
        }
        Ok(())
    }

    /// `F(X, c_j)` without the feasibility check; indices must be `< n`.
    pub fn subset_cost(&self, chosen: &[usize], j: usize) -> T {
        let row = &self.costs[j];
        chosen.iter().map(|&e| row[e]).sum()
    }

    /// Cost of a feasible solution under scenario `j` (0-based).
    pub fn scenario_cost(&self, sol: &Solution, j: usize) -> Result<T> {
        self.check_feasible(sol)?;
        if j >= self.k() {
            return Err(Error::Argument(format!("scenario {j} out of range for K = {}", self.k())));
        }
        Ok(self.subset_cost(sol.chosen(), j))
    }

    /// The vector `(F(X, c_1), ..., F(X, c_K))`.
    pub fn scenario_costs(&self, sol: &Solution) -> Result<Vec<T>> {
        self.check_feasible(sol)?;
        Ok(self.scenario_costs_unchecked(sol.chosen()))
    }

    pub(crate) fn scenario_costs_unchecked(&self, chosen: &[usize]) -> Vec<T> {
        (0..self.k()).map(|j| self.subset_cost(chosen, j)).collect()
    }

    /// `WOWA(X)`.
    pub fn wowa_value(&self, sol: &Solution) -> Result<T> {
        let costs = self.scenario_costs(sol)?;
        Ok(self.wowa.eval_unchecked(&costs))
    }

    /// Rank weights of the scenarios for a feasible solution.
    pub fn rank_weights(&self, sol: &Solution) -> Result<RankWeights<T>> {
        let costs = self.scenario_costs(sol)?;
        self.wowa.rank_weights_for(&costs)
    }

    /// `sum_j p_j F(X, c_j)`.
    pub fn expected_cost(&self, sol: &Solution) -> Result<T> {
        Ok(self.probabilities().expectation(&self.scenario_costs(sol)?))
    }

    /// Same instance with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let costs = self.costs.iter().map(|r| r.iter().map(|&c| c * factor).collect()).collect();
        Self::new(self.kind.clone(), costs, self.raw_p.clone(), self.raw_v.clone())
    }

    /// Same instance with scenarios reordered: scenario `j` of the result is
    /// scenario `order[j]` of `self` (costs and probabilities together).
    pub fn with_scenario_order(&self, order: &[usize]) -> Result<Self> {
        let costs = order.iter().map(|&j| self.costs[j].clone()).collect();
        let p = order.iter().map(|&j| self.raw_p[j]).collect();
        Self::new(self.kind.clone(), costs, p, self.raw_v.clone())
    }
}
