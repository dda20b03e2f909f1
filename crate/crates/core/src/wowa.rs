//! OWA and WOWA aggregation.
//!
//! A [`WeightVector`] `v` induces the piecewise-linear distortion `w*` on
//! `[0, 1]` with breakpoints at `j/K` and ordinates equal to the cumulative
//! sums of `v`. Combined with a [`ProbabilityVector`] `p` it yields
//! rank-dependent weights
//!
//! ```text
//! omega_j = w*(p_s(1) + ... + p_s(j)) - w*(p_s(1) + ... + p_s(j-1))
//! ```
//!
//! where `s` orders the aggregated values from largest to smallest. WOWA is
//! the `omega`-weighted sum of the sorted values.

use crate::error::{Error, Result};
use crate::scalar::{cmp_desc, Scalar};

fn check_unit_sum<T: Scalar>(what: &str, values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Argument(format!("{what} must not be empty")));
    }
    let tol = T::tolerance();
    let sum: T = values.iter().copied().sum();
    if !sum.is_finite() || (sum - T::one()).abs() > tol {
        return Err(Error::Argument(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(sum)
}

/// Importance weights `v_1, ..., v_K` over rank positions.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    values: Vec<T>,
    nonincreasing: bool,
}

impl<T: Scalar> WeightVector<T> {
    /// Validates and renormalizes. Components must lie in `[0, 1]` and sum to
    /// one within [`Scalar::tolerance`].
    pub fn new(values: Vec<T>) -> Result<Self> {
        let tol = T::tolerance();
        for (j, &x) in values.iter().enumerate() {
            if !(x >= -tol && x <= T::one() + tol) {
                return Err(Error::Argument(format!("v[{j}] = {x} outside [0, 1]")));
            }
        }
        let clamped: Vec<T> = values.iter().map(|&x| x.max(T::zero()).min(T::one())).collect();
        let sum = check_unit_sum("v", &clamped)?;
        let values: Vec<T> = clamped.into_iter().map(|x| x / sum).collect();
        let nonincreasing = values.windows(2).all(|w| w[0] + tol >= w[1]);
        Ok(Self { values, nonincreasing })
    }

    /// `(1/K, ..., 1/K)`: the expectation case.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("K must be positive".into()));
        }
        Self::new(vec![T::one() / T::from_count(k); k])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `v_1 >= v_2 >= ... >= v_K` (within tolerance). Approximation
    /// guarantees and the MIP model require it.
    pub fn is_nonincreasing(&self) -> bool {
        self.nonincreasing
    }

    pub fn first(&self) -> T {
        self.values[0]
    }
}

/// Scenario probabilities, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> ProbabilityVector<T> {
    /// Components must be strictly positive and sum to one within
    /// tolerance. Zero-probability scenarios are rejected here; see
    /// [`remove_zero_probability`].
    pub fn new(values: Vec<T>) -> Result<Self> {
        for (j, &x) in values.iter().enumerate() {
            if !(x > T::zero() && x <= T::one() + T::tolerance()) {
                return Err(Error::Argument(format!("p[{j}] = {x} must lie in (0, 1]")));
            }
        }
        let sum = check_unit_sum("p", &values)?;
        Ok(Self { values: values.into_iter().map(|x| x / sum).collect() })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("K must be positive".into()));
        }
        Self::new(vec![T::one() / T::from_count(k); k])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sum_j p_j a_j`.
    pub fn expectation(&self, a: &[T]) -> T {
        self.values.iter().zip(a).map(|(&p, &x)| p * x).sum()
    }
}

/// Drops the entries of `values` whose probability is exactly zero and
/// renormalizes the remaining probabilities.
///
/// Zero-probability scenarios receive zero rank weight under any ordering, so
/// the WOWA value is unchanged as long as the distortion function (built from
/// the original `K`) is kept.
pub fn remove_zero_probability<T: Scalar>(values: &[T], probabilities: &[T]) -> Result<(Vec<T>, ProbabilityVector<T>)> {
    if values.len() != probabilities.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} values, {} probabilities",
            values.len(),
            probabilities.len()
        )));
    }
    let (kept, p): (Vec<T>, Vec<T>) =
        values.iter().zip(probabilities).filter(|(_, &q)| q != T::zero()).map(|(&a, &q)| (a, q)).unzip();
    Ok((kept, ProbabilityVector::new(p)?))
}

/// The piecewise-linear distortion `w*` induced by a weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionFunction<T> {
    breakpoints: Vec<T>,
    concave: bool,
}

impl<T: Scalar> DistortionFunction<T> {
    pub fn new(v: &WeightVector<T>) -> Self {
        let mut breakpoints = Vec::with_capacity(v.len() + 1);
        let mut acc = T::zero();
        breakpoints.push(acc);
        for &x in v.values() {
            acc = acc + x;
            breakpoints.push(acc);
        }
        Self { breakpoints, concave: v.is_nonincreasing() }
    }

    /// Ordinates `w*(0), w*(1/K), ..., w*(1)`.
    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Number of linear pieces, i.e. `K`.
    pub fn pieces(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_concave(&self) -> bool {
        self.concave
    }

    /// Evaluates `w*(t)` for `t` in `[0, 1]`.
    pub fn eval(&self, t: T) -> Result<T> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::Domain(format!("w* evaluated at {t}, outside [0, 1]")));
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: T) -> T {
        let k = self.pieces();
        let s = t * T::from_count(k);
        let seg = s.floor().to_usize().unwrap_or(0).min(k - 1);
        let frac = s - T::from_count(seg);
        if frac <= T::zero() {
            return self.breakpoints[seg];
        }
        let lo = self.breakpoints[seg];
        let hi = self.breakpoints[seg + 1];
        lo + frac * (hi - lo)
    }
}

/// Rank-dependent weights together with the scenario order producing them.
#[derive(Debug, Clone, PartialEq)]
pub struct RankWeights<T> {
    /// `omegas[j]` is the weight of scenario `permutation[j]`.
    pub omegas: Vec<T>,
    pub permutation: Vec<usize>,
}

impl<T: Scalar> RankWeights<T> {
    /// The weight attached to each scenario, indexed by scenario.
    pub fn per_scenario(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.omegas.len()];
        for (&s, &w) in self.permutation.iter().zip(&self.omegas) {
            out[s] = w;
        }
        out
    }
}

fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    if perm.len() != k {
        return Err(Error::Argument(format!("permutation has length {}, expected {k}", perm.len())));
    }
    let mut seen = vec![false; k];
    for &i in perm {
        if i >= k || seen[i] {
            return Err(Error::Argument(format!("{perm:?} is not a permutation of 0..{k}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Indices of `a` sorted by nonincreasing value; ties by ascending index.
pub fn sorting_permutation<T: Scalar>(a: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| cmp_desc(&a[i], &a[j]));
    idx
}

/// A WOWA operator with fixed `(v, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wowa<T> {
    weights: WeightVector<T>,
    probabilities: ProbabilityVector<T>,
    distortion: DistortionFunction<T>,
}

impl<T: Scalar> Wowa<T> {
    pub fn new(weights: WeightVector<T>, probabilities: ProbabilityVector<T>) -> Result<Self> {
        if weights.len() != probabilities.len() {
            return Err(Error::Argument(format!(
                "v has {} components but p has {}",
                weights.len(),
                probabilities.len()
            )));
        }
        let distortion = DistortionFunction::new(&weights);
        Ok(Self { weights, probabilities, distortion })
    }

    pub fn weights(&self) -> &WeightVector<T> {
        &self.weights
    }

    pub fn probabilities(&self) -> &ProbabilityVector<T> {
        &self.probabilities
    }

    pub fn distortion(&self) -> &DistortionFunction<T> {
        &self.distortion
    }

    pub fn scenarios(&self) -> usize {
        self.probabilities.len()
    }

    /// Rank weights for an arbitrary scenario order.
    pub fn rank_weights(&self, permutation: &[usize]) -> Result<RankWeights<T>> {
        check_permutation(permutation, self.scenarios())?;
        Ok(self.rank_weights_unchecked(permutation.to_vec()))
    }

    pub(crate) fn rank_weights_unchecked(&self, permutation: Vec<usize>) -> RankWeights<T> {
        let p = self.probabilities.values();
        let mut omegas = Vec::with_capacity(permutation.len());
        let mut mass = T::zero();
        let mut prev = T::zero();
        for &s in &permutation {
            mass = (mass + p[s]).min(T::one());
            let cur = self.distortion.eval_unchecked(mass);
            omegas.push(cur - prev);
            prev = cur;
        }
        RankWeights { omegas, permutation }
    }

    /// `f_pi(a) = sum_j omega_j a_pi(j)` with `omega` computed along `pi`.
    pub fn f_pi(&self, a: &[T], permutation: &[usize]) -> Result<T> {
        self.check_len(a)?;
        let rw = self.rank_weights(permutation)?;
        Ok(rw.omegas.iter().zip(&rw.permutation).map(|(&w, &s)| w * a[s]).sum())
    }

    /// Rank weights along the nonincreasing order of `a`.
    pub fn rank_weights_for(&self, a: &[T]) -> Result<RankWeights<T>> {
        self.check_len(a)?;
        Ok(self.rank_weights_unchecked(sorting_permutation(a)))
    }

    pub fn eval(&self, a: &[T]) -> Result<T> {
        self.check_len(a)?;
        Ok(self.eval_unchecked(a))
    }

    pub(crate) fn eval_unchecked(&self, a: &[T]) -> T {
        let rw = self.rank_weights_unchecked(sorting_permutation(a));
        rw.omegas.iter().zip(&rw.permutation).map(|(&w, &s)| w * a[s]).sum()
    }

    fn check_len(&self, a: &[T]) -> Result<()> {
        if a.len() != self.scenarios() {
            return Err(Error::Argument(format!("vector has length {}, expected {}", a.len(), self.scenarios())));
        }
        Ok(())
    }
}

/// `w*(t)` for the distortion induced by `v`.
pub fn wstar_eval<T: Scalar>(d: &DistortionFunction<T>, t: T) -> Result<T> {
    d.eval(t)
}

pub fn rank_weights<T: Scalar>(
    v: &WeightVector<T>,
    p: &ProbabilityVector<T>,
    permutation: &[usize],
) -> Result<RankWeights<T>> {
    Wowa::new(v.clone(), p.clone())?.rank_weights(permutation)
}

pub fn wowa<T: Scalar>(a: &[T], v: &WeightVector<T>, p: &ProbabilityVector<T>) -> Result<T> {
    Wowa::new(v.clone(), p.clone())?.eval(a)
}

pub fn f_pi<T: Scalar>(a: &[T], v: &WeightVector<T>, p: &ProbabilityVector<T>, permutation: &[usize]) -> Result<T> {
    Wowa::new(v.clone(), p.clone())?.f_pi(a, permutation)
}

/// Ordered weighted average: `sum_j w_j a_s(j)` with `a` sorted nonincreasingly.
pub fn owa<T: Scalar>(a: &[T], w: &WeightVector<T>) -> Result<T> {
    if a.len() != w.len() {
        return Err(Error::Argument(format!("vector has length {}, weights {}", a.len(), w.len())));
    }
    Ok(sorting_permutation(a).iter().zip(w.values()).map(|(&s, &x)| x * a[s]).sum())
}

/// Weights from `g(z) = (1 - alpha^z) / (1 - alpha)`:
/// `v_j = g(j/K) - g((j-1)/K)`. Smaller `alpha` concentrates more weight on
/// the worst ranks.
pub fn generate_weights<T: Scalar>(alpha: T, k: usize) -> Result<WeightVector<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Argument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if k == 0 {
        return Err(Error::Argument("K must be positive".into()));
    }
    let kk = T::from_count(k);
    let g = |z: T| (T::one() - alpha.powf(z)) / (T::one() - alpha);
    let values = (1..=k).map(|j| g(T::from_count(j) / kk) - g(T::from_count(j - 1) / kk)).collect();
    WeightVector::new(values)
}
