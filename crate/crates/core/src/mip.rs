//! Tail-integral decomposition of WOWA and the mixed integer model built on it.
//!
//! For a solution `x` with scenario costs `F_1, ..., F_K`, let `h_x` be the
//! nonincreasing step function that takes value `F_s(i)` on a probability
//! interval of length `p_s(i)`. With `L_j(x)` the integral of `h_x` over
//! `[0, j/K]` and `v'_j = v_j - v_{j+1}` (`v_{K+1} = 0`):
//!
//! ```text
//! WOWA(x) = K * sum_j v'_j * L_j(x)
//! ```
//!
//! `L_j` is the value of a fractional knapsack, whose LP dual yields the
//! linear model
//!
//! ```text
//! min  K * sum_j v'_j * ((j/K) b_j + sum_i p_i a_i_j)
//! s.t. b_j + a_i_j >= sum_k c_ik x_k      for all i, j
//!      a_i_j >= 0, b_j free, x in the feasible set
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ProblemKind, ScenarioInstance, Solution};
use crate::scalar::Scalar;
use crate::wowa::{sorting_permutation, ProbabilityVector};

/// `int_0^budget h(theta) d theta` for the step function defined by
/// `values` and `p`: fill the budget with probability mass taken from the
/// largest values first.
pub fn tail_integral<T: Scalar>(values: &[T], p: &ProbabilityVector<T>, budget: T) -> T {
    let mut left = budget;
    let mut acc = T::zero();
    for s in sorting_permutation(values) {
        if left <= T::zero() {
            break;
        }
        let take = p.values()[s].min(left);
        acc = acc + take * values[s];
        left = left - take;
    }
    acc
}

/// `h_x(theta)`: the value whose probability interval contains `theta`.
fn step_value<T: Scalar>(values: &[T], p: &ProbabilityVector<T>, theta: T) -> T {
    let order = sorting_permutation(values);
    let mut mass = T::zero();
    for &s in &order {
        mass = mass + p.values()[s];
        if mass >= theta - T::tolerance() {
            return values[s];
        }
    }
    values[*order.last().expect("at least one scenario")]
}

/// `L_j(x)` for `j` in `1..=K`.
pub fn compute_lj<T: Scalar>(inst: &ScenarioInstance<T>, sol: &Solution, j: usize) -> Result<T> {
    let k = inst.k();
    if j == 0 || j > k {
        return Err(Error::Argument(format!("j = {j} outside 1..={k}")));
    }
    let costs = inst.scenario_costs(sol)?;
    Ok(tail_integral(&costs, inst.probabilities(), T::from_count(j) / T::from_count(k)))
}

/// `K * sum_j (v_j - v_{j+1}) * L_j(x)`.
pub fn wowa_via_decomposition<T: Scalar>(inst: &ScenarioInstance<T>, sol: &Solution) -> Result<T> {
    let costs = inst.scenario_costs(sol)?;
    let k = inst.k();
    let v = inst.weights().values();
    let kk = T::from_count(k);
    let total = (1..=k)
        .map(|j| {
            let next = if j < k { v[j] } else { T::zero() };
            (v[j - 1] - next) * tail_integral(&costs, inst.probabilities(), T::from_count(j) / kk)
        })
        .sum::<T>();
    Ok(kk * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarType {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<T> {
    pub name: String,
    pub var_type: VarType,
    /// `None` means unbounded below.
    pub lower: Option<T>,
    pub upper: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<T> {
    pub name: String,
    pub terms: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

/// A minimization MIP. Variables `0..n` are the element binaries `x`, then
/// `K` free `b_j`, then `K^2` nonnegative `a_i_j` (row-major in `i`), then
/// any kind-specific auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MipModel<T> {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub variables: Vec<Variable<T>>,
    pub objective: Vec<(usize, T)>,
    pub constraints: Vec<LinearConstraint<T>>,
}

impl<T: Scalar> MipModel<T> {
    pub fn x_index(&self, i: usize) -> usize {
        i
    }

    /// `j` is 0-based here; the exported name is `b{j+1}`.
    pub fn beta_index(&self, j: usize) -> usize {
        self.n + j
    }

    pub fn alpha_index(&self, i: usize, j: usize) -> usize {
        self.n + self.k + i * self.k + j
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.var_type == VarType::Binary).count()
    }

    pub fn continuous_count(&self) -> usize {
        self.variables.iter().filter(|v| v.var_type == VarType::Continuous).count()
    }

    pub fn objective_value(&self, values: &[T]) -> T {
        self.objective.iter().map(|&(i, c)| c * values[i]).sum()
    }

    /// Largest violation of any constraint or bound at `values`; zero if feasible.
    pub fn max_violation(&self, values: &[T]) -> T {
        let mut worst = T::zero();
        for c in &self.constraints {
            let lhs: T = c.terms.iter().map(|&(i, a)| a * values[i]).sum();
            let gap = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        for (var, &x) in self.variables.iter().zip(values) {
            if let Some(lo) = var.lower {
                worst = worst.max(lo - x);
            }
            if let Some(hi) = var.upper {
                worst = worst.max(x - hi);
            }
            if var.var_type == VarType::Binary {
                worst = worst.max(x.min(T::one() - x).abs());
            }
        }
        worst
    }
}

/// Builds the model for an instance with nonincreasing weights.
pub fn build_mip<T: Scalar>(inst: &ScenarioInstance<T>) -> Result<MipModel<T>> {
    if !inst.weights().is_nonincreasing() {
        return Err(Error::Unsupported("the linear model needs nonincreasing weights v (v_j - v_{j+1} >= 0)".into()));
    }
    let (n, k) = (inst.n(), inst.k());
    let v = inst.weights().values();
    let p = inst.probabilities().values();
    let mut variables = Vec::with_capacity(n + k + k * k);
    for i in 0..n {
        variables.push(Variable {
            name: format!("x{}", i + 1),
            var_type: VarType::Binary,
            lower: Some(T::zero()),
            upper: Some(T::one()),
        });
    }
    for j in 0..k {
        variables.push(Variable {
            name: format!("b{}", j + 1),
            var_type: VarType::Continuous,
            lower: None,
            upper: None,
        });
    }
    for i in 0..k {
        for j in 0..k {
            variables.push(Variable {
                name: format!("a_{}_{}", i + 1, j + 1),
                var_type: VarType::Continuous,
                lower: Some(T::zero()),
                upper: None,
            });
        }
    }
    let mut model = MipModel {
        name: format!("minwowa {} n={n} K={k}", inst.kind().name()),
        n,
        k,
        variables,
        objective: Vec::new(),
        constraints: Vec::new(),
    };

    let kk = T::from_count(k);
    for j in 0..k {
        let next = if j + 1 < k { v[j + 1] } else { T::zero() };
        let vp = (v[j] - next).max(T::zero());
        if vp == T::zero() {
            continue;
        }
        model.objective.push((model.beta_index(j), T::from_count(j + 1) * vp));
        for (i, &pi) in p.iter().enumerate() {
            model.objective.push((model.alpha_index(i, j), kk * vp * pi));
        }
    }
    for i in 0..k {
        for j in 0..k {
            let mut terms = vec![(model.beta_index(j), T::one()), (model.alpha_index(i, j), T::one())];
            terms.extend(inst.costs()[i].iter().enumerate().filter(|(_, &c)| c != T::zero()).map(|(e, &c)| (e, -c)));
            model.constraints.push(LinearConstraint {
                name: format!("c_{}_{}", i + 1, j + 1),
                terms,
                sense: Sense::Ge,
                rhs: T::zero(),
            });
        }
    }
    match inst.kind() {
        ProblemKind::Selection { q } => {
            model.constraints.push(LinearConstraint {
                name: "card".into(),
                terms: (0..n).map(|e| (e, T::one())).collect(),
                sense: Sense::Eq,
                rhs: T::from_count(*q),
            });
        }
        ProblemKind::Assignment { m } => {
            for r in 0..*m {
                model.constraints.push(LinearConstraint {
                    name: format!("row_{}", r + 1),
                    terms: (0..*m).map(|c| (r * m + c, T::one())).collect(),
                    sense: Sense::Eq,
                    rhs: T::one(),
                });
            }
            for c in 0..*m {
                model.constraints.push(LinearConstraint {
                    name: format!("col_{}", c + 1),
                    terms: (0..*m).map(|r| (r * m + c, T::one())).collect(),
                    sense: Sense::Eq,
                    rhs: T::one(),
                });
            }
        }
        ProblemKind::Explicit { solutions } => {
            // one selector per listed solution; x_e = sum of selectors containing e
            let first = model.variables.len();
            for s in 0..solutions.len() {
                model.variables.push(Variable {
                    name: format!("y{}", s + 1),
                    var_type: VarType::Binary,
                    lower: Some(T::zero()),
                    upper: Some(T::one()),
                });
            }
            model.constraints.push(LinearConstraint {
                name: "pick".into(),
                terms: (0..solutions.len()).map(|s| (first + s, T::one())).collect(),
                sense: Sense::Eq,
                rhs: T::one(),
            });
            for e in 0..n {
                let mut terms = vec![(e, T::one())];
                for (s, sol) in solutions.iter().enumerate() {
                    if sol.contains(&e) {
                        terms.push((first + s, -T::one()));
                    }
                }
                model.constraints.push(LinearConstraint {
                    name: format!("link_{}", e + 1),
                    terms,
                    sense: Sense::Eq,
                    rhs: T::zero(),
                });
            }
        }
    }
    Ok(model)
}

/// A feasible point of `model` at solution `sol` whose objective equals
/// `WOWA(sol)`: `b_j = h_x(j/K)` and `a_i_j = max(0, F(x, c_i) - b_j)`.
pub fn dual_point<T: Scalar>(model: &MipModel<T>, inst: &ScenarioInstance<T>, sol: &Solution) -> Result<Vec<T>> {
    let costs = inst.scenario_costs(sol)?;
    let mut values = vec![T::zero(); model.variables.len()];
    for &e in sol.chosen() {
        values[model.x_index(e)] = T::one();
    }
    let k = inst.k();
    for j in 0..k {
        let beta = step_value(&costs, inst.probabilities(), T::from_count(j + 1) / T::from_count(k));
        values[model.beta_index(j)] = beta;
        for (i, &f) in costs.iter().enumerate() {
            values[model.alpha_index(i, j)] = (f - beta).max(T::zero());
        }
    }
    if let ProblemKind::Explicit { solutions } = inst.kind() {
        let first = model.n + k + k * k;
        if let Some(s) = solutions.iter().position(|s| Solution::new(s.iter().copied()) == *sol) {
            values[first + s] = T::one();
        }
    }
    Ok(values)
}

const TERMS_PER_LINE: usize = 8;

fn write_expr<T: Scalar>(out: &mut String, model: &MipModel<T>, terms: &[(usize, T)]) {
    for (pos, &(idx, coef)) in terms.iter().enumerate() {
        if pos > 0 && pos % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &model.variables[idx].name;
        let neg = coef < T::zero();
        let mag = coef.abs();
        match (pos, neg) {
            (0, false) => {}
            (0, true) => out.push_str("- "),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        if mag == T::one() {
            out.push_str(name);
        } else {
            let _ = write!(out, "{mag} {name}");
        }
    }
}

/// Renders `model` in the CPLEX LP text format.
pub fn export_lp<T: Scalar>(model: &MipModel<T>) -> Result<String> {
    if model.n == 0 || model.binary_count() == 0 {
        return Err(Error::Unsupported("model has no element variables to export".into()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str("Minimize\n obj: ");
    if model.objective.is_empty() {
        let _ = write!(out, "0 {}", model.variables[0].name);
    } else {
        write_expr(&mut out, model, &model.objective);
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}: ", c.name);
        write_expr(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for var in model.variables.iter().filter(|v| v.var_type == VarType::Continuous) {
        match (var.lower, var.upper) {
            (None, None) => {
                let _ = writeln!(out, " {} free", var.name);
            }
            (Some(lo), None) => {
                let _ = writeln!(out, " {} >= {lo}", var.name);
            }
            (None, Some(hi)) => {
                let _ = writeln!(out, " -inf <= {} <= {hi}", var.name);
            }
            (Some(lo), Some(hi)) => {
                let _ = writeln!(out, " {lo} <= {} <= {hi}", var.name);
            }
        }
    }
    out.push_str("Binary\n");
    let binaries: Vec<&str> =
        model.variables.iter().filter(|v| v.var_type == VarType::Binary).map(|v| v.name.as_str()).collect();
    for chunk in binaries.chunks(TERMS_PER_LINE * 2) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    Ok(out)
}
