//! Deterministic single-scenario solvers.
//!
//! Both built-in solvers accept a [`PartialFixing`] so the branch-and-bound
//! search can reuse them for completion bounds.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{ProblemKind, Solution};
use crate::scalar::{cmp_desc, Scalar};

/// Elements forced into or out of every completion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialFixing {
    pub forced_in: BTreeSet<usize>,
    pub forced_out: BTreeSet<usize>,
}

impl PartialFixing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_in(mut self, e: usize) -> Self {
        self.forced_in.insert(e);
        self
    }

    pub fn with_out(mut self, e: usize) -> Self {
        self.forced_out.insert(e);
        self
    }

    pub fn is_fixed(&self, e: usize) -> bool {
        self.forced_in.contains(&e) || self.forced_out.contains(&e)
    }

    fn check(&self, n: usize) -> Result<()> {
        if let Some(e) = self.forced_in.intersection(&self.forced_out).next() {
            return Err(Error::Infeasible(format!("element {e} is both forced in and forced out")));
        }
        if let Some(&e) = self.forced_in.iter().chain(&self.forced_out).find(|&&e| e >= n) {
            return Err(Error::Argument(format!("fixed element {e} out of range for n = {n}")));
        }
        Ok(())
    }

    /// True if `sol` is a completion of this fixing.
    pub fn admits(&self, sol: &Solution) -> bool {
        self.forced_in.iter().all(|&e| sol.contains(e)) && self.forced_out.iter().all(|&e| !sol.contains(e))
    }
}

/// Choose exactly `q` elements of minimum total cost; ties by ascending index.
pub fn solve_selection<T: Scalar>(costs: &[T], q: usize, fix: &PartialFixing) -> Result<(Solution, T)> {
    let n = costs.len();
    fix.check(n)?;
    if q > n {
        return Err(Error::Infeasible(format!("cannot choose {q} of {n} elements")));
    }
    if fix.forced_in.len() > q {
        return Err(Error::Infeasible(format!("{} elements forced in, q = {q}", fix.forced_in.len())));
    }
    let need = q - fix.forced_in.len();
    let mut free: Vec<usize> = (0..n).filter(|&e| !fix.is_fixed(e)).collect();
    if free.len() < need {
        return Err(Error::Infeasible(format!("{} free elements, {need} still needed", free.len())));
    }
    free.sort_by(|&a, &b| cmp_desc(&costs[b], &costs[a]));
    let chosen = Solution::new(fix.forced_in.iter().copied().chain(free.into_iter().take(need)));
    let value = chosen.chosen().iter().map(|&e| costs[e]).sum();
    Ok((chosen, value))
}

/// Minimum-cost perfect matching of a square matrix; `result[row] = col`.
///
/// Shortest augmenting path Hungarian method with row and column
/// potentials, `O(m^3)`. Rows are inserted in order and the first column of
/// minimal reduced cost wins, which makes the output deterministic.
pub fn hungarian<T: Scalar>(matrix: &[Vec<T>]) -> Vec<usize> {
    let m = matrix.len();
    if m == 0 {
        return Vec::new();
    }
    let inf = T::infinity();
    let mut u = vec![T::zero(); m + 1];
    let mut v = vec![T::zero(); m + 1];
    // owner[j]: row (1-based) matched to column j, 0 if none
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=m {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = matrix[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for j in 1..=m {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

/// Minimum-cost perfect matching respecting `fix`. Element indices follow
/// the flat `row * m + col` convention.
///
/// Forced-in edges remove their row and column; forced-out edges get a cost
/// larger than any perfect matching of the remaining entries, so a result
/// using one proves the fixing cannot be extended.
pub fn solve_assignment<T: Scalar>(matrix: &[Vec<T>], fix: &PartialFixing) -> Result<(Solution, T)> {
    let m = matrix.len();
    if let Some(r) = matrix.iter().position(|row| row.len() != m) {
        return Err(Error::Argument(format!("row {r} has {} entries, matrix must be {m} x {m}", matrix[r].len())));
    }
    fix.check(m * m)?;
    let mut row_used = vec![false; m];
    let mut col_used = vec![false; m];
    for &e in &fix.forced_in {
        let (r, c) = (e / m, e % m);
        if row_used[r] || col_used[c] {
            return Err(Error::Infeasible(format!("forced edge ({r}, {c}) shares a row or column")));
        }
        row_used[r] = true;
        col_used[c] = true;
    }
    let rows: Vec<usize> = (0..m).filter(|&r| !row_used[r]).collect();
    let cols: Vec<usize> = (0..m).filter(|&c| !col_used[c]).collect();
    let max = rows.iter().flat_map(|&r| cols.iter().map(move |&c| matrix[r][c])).fold(T::zero(), T::max);
    let sentinel = T::from_count(m.max(1)) * max + T::one();
    let reduced: Vec<Vec<T>> = rows
        .iter()
        .map(|&r| {
            cols.iter().map(|&c| if fix.forced_out.contains(&(r * m + c)) { sentinel } else { matrix[r][c] }).collect()
        })
        .collect();
    let mut chosen: Vec<usize> = fix.forced_in.iter().copied().collect();
    for (ri, ci) in hungarian(&reduced).into_iter().enumerate() {
        let e = rows[ri] * m + cols[ci];
        if fix.forced_out.contains(&e) {
            return Err(Error::Infeasible("fixing cannot be extended to a perfect matching".into()));
        }
        chosen.push(e);
    }
    let sol = Solution::new(chosen);
    let value = sol.chosen().iter().map(|&e| matrix[e / m][e % m]).sum();
    Ok((sol, value))
}

/// Cheapest listed solution admitted by `fix`; ties keep list order.
pub fn solve_explicit<T: Scalar>(solutions: &[Vec<usize>], costs: &[T], fix: &PartialFixing) -> Result<(Solution, T)> {
    fix.check(costs.len())?;
    let mut best: Option<(Solution, T)> = None;
    for s in solutions {
        let sol = Solution::new(s.iter().copied());
        if !fix.admits(&sol) {
            continue;
        }
        let value: T = sol.chosen().iter().map(|&e| costs[e]).sum();
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((sol, value));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no listed solution respects the fixing".into()))
}

/// A solver for the deterministic problem `min sum_{i in X} c_i` over the
/// feasible set of `kind`, returning a solution within factor
/// [`gamma`](DeterministicSolver::gamma) of optimal.
pub trait DeterministicSolver<T: Scalar>: Sync {
    fn solve(&self, kind: &ProblemKind, costs: &[T], fix: &PartialFixing) -> Result<(Solution, T)>;

    fn gamma(&self) -> T {
        T::one()
    }
}

/// Exact solvers: greedy selection, Hungarian assignment, enumeration for
/// explicit families.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinSolver;

impl<T: Scalar> DeterministicSolver<T> for BuiltinSolver {
    fn solve(&self, kind: &ProblemKind, costs: &[T], fix: &PartialFixing) -> Result<(Solution, T)> {
        match kind {
            ProblemKind::Selection { q } => solve_selection(costs, *q, fix),
            ProblemKind::Assignment { m } => {
                if costs.len() != m * m {
                    return Err(Error::Argument(format!("{} costs for an {m} x {m} assignment", costs.len())));
                }
                let matrix: Vec<Vec<T>> = costs.chunks(*m).map(<[T]>::to_vec).collect();
                solve_assignment(&matrix, fix)
            }
            ProblemKind::Explicit { solutions } => solve_explicit(solutions, costs, fix),
        }
    }
}
