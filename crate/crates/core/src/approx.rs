//! Aggregated-cost approximation.
//!
//! Each element's scenario costs are collapsed into one number with the
//! instance's WOWA operator, and the resulting deterministic problem is
//! solved. For nonincreasing `v` and an exact base solver the result is
//! within factor `v_1 K` of the optimal WOWA value; a `gamma`-approximate
//! base solver gives `gamma v_1 K`.

use crate::error::Result;
use crate::model::{ScenarioInstance, Solution};
use crate::scalar::Scalar;
use crate::solvers::{BuiltinSolver, DeterministicSolver, PartialFixing};

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxResult<T> {
    pub solution: Solution,
    /// Sum of aggregated element costs over the solution.
    pub aggregated_objective: T,
    /// WOWA value of the solution.
    pub wowa_objective: T,
    /// `gamma * v_1 * K`, or `None` when `v` is not nonincreasing.
    pub ratio_bound: Option<T>,
}

/// `c_i = wowa(c_1i, ..., c_Ki)` for every element.
pub fn aggregate_costs<T: Scalar>(inst: &ScenarioInstance<T>) -> Vec<T> {
    let op = inst.operator();
    (0..inst.n()).map(|i| op.eval_unchecked(&inst.element_costs(i))).collect()
}

/// A-priori ratio `gamma v_1 K` when the guarantee applies.
pub fn ratio_bound<T: Scalar>(inst: &ScenarioInstance<T>, gamma: T) -> Option<T> {
    let v = inst.weights();
    v.is_nonincreasing().then(|| gamma * v.first() * T::from_count(inst.k()))
}

pub fn approx_solve<T: Scalar>(inst: &ScenarioInstance<T>) -> Result<ApproxResult<T>> {
    approx_solve_with(inst, &BuiltinSolver)
}

pub fn approx_solve_with<T: Scalar, S: DeterministicSolver<T> + ?Sized>(
    inst: &ScenarioInstance<T>,
    solver: &S,
) -> Result<ApproxResult<T>> {
    let aggregated = aggregate_costs(inst);
    let (solution, aggregated_objective) = solver.solve(inst.kind(), &aggregated, &PartialFixing::new())?;
    let wowa_objective = inst.wowa_value(&solution)?;
    Ok(ApproxResult { solution, aggregated_objective, wowa_objective, ratio_bound: ratio_bound(inst, solver.gamma()) })
}
