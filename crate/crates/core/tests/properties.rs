use approx::assert_abs_diff_eq;
use itertools::Itertools;
use proptest::prelude::*;

use minwowa::exact::node_lower_bound;
use minwowa::experiments::{gen_instance, ProblemSpec, WeightMode};
use minwowa::wowa::{f_pi, generate_weights, owa, sorting_permutation, wowa};
use minwowa::{
    approx_solve_with, brute_force, compute_lj, wowa_via_decomposition, DeterministicSolver, Instance, PartialFixing,
    Probabilities, ProblemKind, Result, Solution, Weights,
};

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..=100, k).prop_map(|raw| {
        let total: u32 = raw.iter().sum();
        raw.iter().map(|&r| f64::from(r) / f64::from(total)).collect()
    })
}

fn nonincreasing(k: usize) -> impl Strategy<Value = Vec<f64>> {
    simplex(k).prop_map(|mut v| {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    })
}

fn costs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..=100, k).prop_map(|c| c.into_iter().map(f64::from).collect())
}

/// K, v, p, a and a second vector componentwise at least a.
fn wowa_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=7).prop_flat_map(|k| (simplex(k), simplex(k), costs(k), costs(k))).prop_map(|(v, p, a, d)| {
        let b = a.iter().zip(&d).map(|(x, y)| x + y).collect();
        (v, p, a, b)
    })
}

fn max(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::INFINITY, f64::min)
}

proptest! {
    #[test]
    fn wowa_is_monotone_and_bounded((v, p, a, b) in wowa_case()) {
        let (v, p) = (Weights::new(v).unwrap(), Probabilities::new(p).unwrap());
        let wa = wowa(&a, &v, &p).unwrap();
        let wb = wowa(&b, &v, &p).unwrap();
        prop_assert!(wa <= wb + 1e-9);
        prop_assert!(min(&a) - 1e-9 <= wa && wa <= max(&a) + 1e-9);
    }

    #[test]
    fn wowa_reduces_to_owa_and_expectation((v, p, a, _b) in wowa_case()) {
        let k = a.len();
        let (v, p) = (Weights::new(v).unwrap(), Probabilities::new(p).unwrap());
        let owa_value = wowa(&a, &v, &Probabilities::uniform(k).unwrap()).unwrap();
        prop_assert!((owa_value - owa(&a, &v).unwrap()).abs() <= 1e-9);
        let mean = wowa(&a, &Weights::uniform(k).unwrap(), &p).unwrap();
        prop_assert!((mean - p.expectation(&a)).abs() <= 1e-9);
    }

    #[test]
    fn ties_do_not_change_the_value((v, p, a, _b) in wowa_case(), cut in 0u32..=100) {
        // clamp to create ties, then try every order that sorts the vector
        let a: Vec<f64> = a.iter().map(|&x| x.min(f64::from(cut))).collect();
        let (v, p) = (Weights::new(v).unwrap(), Probabilities::new(p).unwrap());
        let reference = wowa(&a, &v, &p).unwrap();
        let k = a.len();
        for perm in (0..k).permutations(k).take(720) {
            if perm.windows(2).all(|w| a[w[0]] >= a[w[1]]) {
                prop_assert!((f_pi(&a, &v, &p, &perm).unwrap() - reference).abs() <= 1e-9);
            }
        }
        prop_assert_eq!(sorting_permutation(&a).len(), k);
    }

    #[test]
    fn any_order_is_a_lower_bound(
        (v, p, a) in (1usize..=6).prop_flat_map(|k| (nonincreasing(k), simplex(k), costs(k))),
        seed in any::<u64>(),
    ) {
        let k = a.len();
        let (v, p) = (Weights::new(v).unwrap(), Probabilities::new(p).unwrap());
        let value = wowa(&a, &v, &p).unwrap();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut s = seed;
        for i in (1..k).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert!(f_pi(&a, &v, &p, &perm).unwrap() <= value + 1e-9);
        let cap = v.first() * k as f64 * p.expectation(&a);
        prop_assert!(value <= cap + 1e-9);
    }

    #[test]
    fn relabelled_scenarios_and_scaling(seed in 0u64..5_000, k in 1usize..=6, factor in 0.1f64..10.0) {
        let inst = gen_instance(&ProblemSpec::selection(7), k, WeightMode::Alpha(0.05), seed).unwrap();
        let inst = inst_with_v(&inst, &generate_weights(0.05, k).unwrap());
        let order: Vec<usize> = (0..k).rev().collect();
        let sol = brute_force(&inst).unwrap().solution;
        let base = inst.wowa_value(&sol).unwrap();
        let shuffled = inst.with_scenario_order(&order).unwrap();
        prop_assert!((shuffled.wowa_value(&sol).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        let scaled = inst.scaled(factor).unwrap();
        prop_assert!((scaled.wowa_value(&sol).unwrap() - factor * base).abs() <= 1e-9 * (factor * base).max(1.0));
    }

    #[test]
    fn tail_integrals_are_monotone_and_capped(seed in 0u64..10_000, k in 1usize..=8) {
        let inst = gen_instance(&ProblemSpec::selection(6), k, WeightMode::Alpha(0.01), seed).unwrap();
        let sol = Solution::new([0, 2]);
        let f = inst.scenario_costs(&sol).unwrap();
        let l: Vec<f64> = (1..=k).map(|j| compute_lj(&inst, &sol, j).unwrap()).collect();
        for w in l.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-9);
        }
        for (j, lj) in l.iter().enumerate() {
            prop_assert!(*lj <= (j + 1) as f64 / k as f64 * max(&f) + 1e-9);
        }
        prop_assert!((l[k - 1] - inst.expected_cost(&sol).unwrap()).abs() <= 1e-9);
    }
}

fn inst_with_v(inst: &Instance, v: &Weights) -> Instance {
    Instance::new(inst.kind().clone(), inst.costs().to_vec(), inst.raw_p().to_vec(), v.values().to_vec()).unwrap()
}

/// Best vertex of `max sum p_i a_i y_i` with `sum p_i y_i = budget`, `0 <= y <= 1`.
/// A vertex has at most one fractional coordinate.
fn lp_by_vertices(a: &[f64], p: &[f64], budget: f64) -> f64 {
    let k = a.len();
    let mut best = f64::NEG_INFINITY;
    for frac in std::iter::once(None).chain((0..k).map(Some)) {
        let others: Vec<usize> = (0..k).filter(|&i| Some(i) != frac).collect();
        for mask in 0u32..(1 << others.len()) {
            let ones: Vec<usize> =
                others.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
            let mass: f64 = ones.iter().map(|&i| p[i]).sum();
            let value: f64 = ones.iter().map(|&i| p[i] * a[i]).sum();
            match frac {
                None if (mass - budget).abs() <= 1e-12 => best = best.max(value),
                Some(f) => {
                    let y = (budget - mass) / p[f];
                    if (-1e-12..=1.0 + 1e-12).contains(&y) {
                        best = best.max(value + y.clamp(0.0, 1.0) * p[f] * a[f]);
                    }
                }
                None => {}
            }
        }
    }
    best
}

#[test]
fn greedy_tail_integral_matches_vertex_enumeration() {
    for seed in 0..300u64 {
        let k = 1 + (seed % 5) as usize;
        let spec = ProblemSpec::Selection { n: 5, q: Some(2), q_fraction: 0.25 };
        let inst = gen_instance(&spec, k, WeightMode::Uniform, seed).unwrap();
        let sol = Solution::new([1, 3]);
        let f = inst.scenario_costs(&sol).unwrap();
        let p = inst.probabilities().values();
        for j in 1..=k {
            let greedy = compute_lj(&inst, &sol, j).unwrap();
            let lp = lp_by_vertices(&f, p, j as f64 / k as f64);
            assert_abs_diff_eq!(greedy, lp, epsilon = 1e-9);
        }
    }
}

#[test]
fn decomposition_matches_direct_evaluation() {
    let mut checked = 0;
    for seed in 0..500u64 {
        let k = 1 + (seed % 8) as usize;
        let alpha = [0.0001, 0.01, 0.1, 0.5][seed as usize % 4];
        let spec = if seed % 3 == 0 { ProblemSpec::Assignment { m: 4 } } else { ProblemSpec::selection(10) };
        let inst = gen_instance(&spec, k, WeightMode::Alpha(alpha), seed).unwrap();
        let candidates = match inst.kind() {
            ProblemKind::Selection { q } => vec![Solution::new(0..*q), Solution::new(10 - q..10)],
            _ => vec![Solution::from_assignment(&[0, 1, 2, 3]), Solution::from_assignment(&[3, 2, 1, 0])],
        };
        for sol in candidates {
            let direct = inst.wowa_value(&sol).unwrap();
            let split = wowa_via_decomposition(&inst, &sol).unwrap();
            assert!((direct - split).abs() <= 1e-9 * direct.max(1.0), "seed {seed}: {direct} vs {split}");
            checked += 1;
        }
    }
    assert_eq!(checked, 1000);
}

#[test]
fn node_bounds_never_exceed_the_restricted_optimum() {
    for seed in 0..60u64 {
        let k = 2 + (seed % 4) as usize;
        let inst = gen_instance(&ProblemSpec::selection(8), k, WeightMode::Alpha(0.01), seed).unwrap();
        let mut fix = PartialFixing::new();
        for e in 0..8 {
            match (seed >> e) % 5 {
                0 => fix = fix.with_in(e),
                1 => fix = fix.with_out(e),
                _ => {}
            }
        }
        let q = 2;
        let best = (0..8)
            .combinations(q)
            .map(Solution::new)
            .filter(|s| fix.admits(s))
            .map(|s| inst.wowa_value(&s).unwrap())
            .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
        match (node_lower_bound(&inst, &fix).unwrap(), best) {
            (Some(bound), Some(opt)) => assert!(bound <= opt + 1e-9, "seed {seed}: {bound} > {opt}"),
            (None, None) => {}
            (bound, opt) => panic!("seed {seed}: bound {bound:?} but optimum {opt:?}"),
        }
    }
}

/// Picks the costliest selection whose deterministic cost stays within
/// `gamma` times the optimum.
struct Sloppy {
    gamma: f64,
}

impl DeterministicSolver<f64> for Sloppy {
    fn solve(&self, kind: &ProblemKind, costs: &[f64], _fix: &PartialFixing) -> Result<(Solution, f64)> {
        let ProblemKind::Selection { q } = kind else { unreachable!() };
        let cost = |s: &[usize]| s.iter().map(|&i| costs[i]).sum::<f64>();
        let all: Vec<Vec<usize>> = (0..costs.len()).combinations(*q).collect();
        let opt = all.iter().map(|s| cost(s)).fold(f64::INFINITY, f64::min);
        let pick = all
            .into_iter()
            .filter(|s| cost(s) <= self.gamma * opt + 1e-9)
            .max_by(|a, b| cost(a).partial_cmp(&cost(b)).unwrap())
            .unwrap();
        let c = cost(&pick);
        Ok((Solution::new(pick), c))
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[test]
fn approximate_solver_keeps_its_scaled_guarantee() {
    for seed in 0..80u64 {
        let gamma = [1.0, 1.2, 1.5, 2.0][seed as usize % 4];
        let k = 2 + (seed % 5) as usize;
        let inst = gen_instance(&ProblemSpec::selection(9), k, WeightMode::Alpha(0.01), seed).unwrap();
        let res = approx_solve_with(&inst, &Sloppy { gamma }).unwrap();
        let opt = brute_force(&inst).unwrap().objective;
        let bound = res.ratio_bound.unwrap();
        assert_abs_diff_eq!(bound, gamma * inst.weights().first() * k as f64, epsilon = 1e-12);
        assert!(res.wowa_objective <= bound * opt + 1e-9, "seed {seed}");
    }
}
