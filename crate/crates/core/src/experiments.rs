//! Random instance generation and the benchmark harness.
//!
//! Instances are drawn from a [`SplitMix64`] stream in a fixed order: first
//! `K` integers `a_j` uniform in `1..=100` (so `p_j = a_j / sum a`), then the
//! costs scenario by scenario, element by element, uniform in `0..=100`.
//! Weights come from [`generate_weights`] unless uniform weights are
//! requested. Each benchmark instance uses its own stream seeded with
//! `seed ^ h`, where `h` chains [`mix64`] over the kind tag (1 selection,
//! 2 assignment), the size, `K`, the bits of `alpha` and the instance index.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::approx_solve;
use crate::error::{Error, Result};
use crate::exact::{brute_force, exact_bb, ProofStatus};
use crate::mip::{build_mip, export_lp};
use crate::model::{ProblemKind, ScenarioInstance};
use crate::rng::{mix64, SplitMix64};
use crate::wowa::generate_weights;

/// Fraction of items chosen in selection instances unless overridden.
pub const DEFAULT_Q_FRACTION: f64 = 0.25;

/// Problem family and size of generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSpec {
    Selection {
        n: usize,
        #[serde(default)]
        q: Option<usize>,
        #[serde(default = "default_q_fraction")]
        q_fraction: f64,
    },
    Assignment {
        m: usize,
    },
}

fn default_q_fraction() -> f64 {
    DEFAULT_Q_FRACTION
}

impl ProblemSpec {
    pub fn selection(n: usize) -> Self {
        ProblemSpec::Selection { n, q: None, q_fraction: DEFAULT_Q_FRACTION }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Selection { .. } => "selection",
            ProblemSpec::Assignment { .. } => "assignment",
        }
    }

    /// `n` for selection, `m` for assignment.
    pub fn size(&self) -> usize {
        match *self {
            ProblemSpec::Selection { n, .. } => n,
            ProblemSpec::Assignment { m } => m,
        }
    }

    fn tag(&self) -> u64 {
        match self {
            ProblemSpec::Selection { .. } => 1,
            ProblemSpec::Assignment { .. } => 2,
        }
    }

    /// Number of elements.
    pub fn elements(&self) -> usize {
        match *self {
            ProblemSpec::Selection { n, .. } => n,
            ProblemSpec::Assignment { m } => m * m,
        }
    }

    pub fn kind(&self) -> Result<ProblemKind> {
        match *self {
            ProblemSpec::Selection { n, q, q_fraction } => {
                let q = match q {
                    Some(q) => q,
                    None => {
                        if !(q_fraction > 0.0 && q_fraction < 1.0) {
                            return Err(Error::Argument(format!("q_fraction = {q_fraction} must lie in (0, 1)")));
                        }
                        // round half up, at least one item
                        ((q_fraction * n as f64 + 0.5).floor() as usize).max(1)
                    }
                };
                if n == 0 || q == 0 || q > n {
                    return Err(Error::Argument(format!("selection needs 1 <= q <= n, got q = {q}, n = {n}")));
                }
                Ok(ProblemKind::Selection { q })
            }
            ProblemSpec::Assignment { m } => {
                if m == 0 {
                    return Err(Error::Argument("assignment needs m >= 1".into()));
                }
                Ok(ProblemKind::Assignment { m })
            }
        }
    }
}

/// How the rank weights `v` are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    Alpha(f64),
    Uniform,
}

/// Draws one instance from the stream seeded with `seed`.
pub fn gen_instance(spec: &ProblemSpec, k: usize, weights: WeightMode, seed: u64) -> Result<ScenarioInstance<f64>> {
    if k == 0 {
        return Err(Error::Argument("K must be positive".into()));
    }
    let kind = spec.kind()?;
    let v = match weights {
        WeightMode::Alpha(alpha) => generate_weights(alpha, k)?.values().to_vec(),
        WeightMode::Uniform => vec![1.0 / k as f64; k],
    };
    let mut rng = SplitMix64::new(seed);
    let a: Vec<f64> = (0..k).map(|_| rng.uniform_inclusive(1, 100) as f64).collect();
    let total: f64 = a.iter().sum();
    let p = a.iter().map(|x| x / total).collect();
    let n = spec.elements();
    let costs = (0..k).map(|_| (0..n).map(|_| rng.uniform_inclusive(0, 100) as f64).collect()).collect();
    ScenarioInstance::new(kind, costs, p, v)
}

/// Seed of the stream for one benchmark instance. Alpha only shapes `v`,
/// so every alpha level of a `(problem, K)` pair sees the same costs and
/// probabilities.
pub fn stream_seed(seed: u64, spec: &ProblemSpec, k: usize, instance: usize) -> u64 {
    let mut h = mix64(spec.tag());
    for x in [spec.size() as u64, k as u64, instance as u64] {
        h = mix64(h ^ x);
    }
    seed ^ h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    /// Built-in branch-and-bound.
    Bb,
    BruteForce,
    /// Write the model for an external solver; no exact value is computed.
    LpExport,
}

/// Benchmark grid, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_format")]
    pub format: u32,
    pub problems: Vec<ProblemSpec>,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    pub alpha: Vec<f64>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
    #[serde(default = "default_exact")]
    pub exact: ExactMethod,
    /// Use `v = (1/K, ..., 1/K)` instead of the alpha generator.
    #[serde(default)]
    pub uniform_v: bool,
    /// Directory for `.lp` files when `exact` is `lp_export`.
    #[serde(default)]
    pub lp_dir: Option<PathBuf>,
}

fn default_format() -> u32 {
    1
}
fn default_instances() -> usize {
    10
}
fn default_time_limit() -> f64 {
    3600.0
}
fn default_exact() -> ExactMethod {
    ExactMethod::Bb
}

impl Default for ExperimentConfig {
    /// The desk-scale grid: selection n = 40 and assignment m = 8, K in
    /// {2, 5, 10}, alpha in {1e-2, 1e-4}, ten instances per cell.
    fn default() -> Self {
        Self {
            format: 1,
            problems: vec![ProblemSpec::selection(40), ProblemSpec::Assignment { m: 8 }],
            k: vec![2, 5, 10],
            alpha: vec![1e-2, 1e-4],
            instances: default_instances(),
            seed: 0,
            time_limit_s: default_time_limit(),
            exact: ExactMethod::Bb,
            uniform_v: false,
            lp_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Argument(s));
        if self.format != 1 {
            return bad(format!("unsupported config format {}", self.format));
        }
        if self.problems.is_empty() || self.k.is_empty() || self.alpha.is_empty() || self.instances == 0 {
            return bad("problems, K, alpha and instances must all be non-empty / positive".into());
        }
        if self.k.contains(&0) {
            return bad("K values must be positive".into());
        }
        if !self.uniform_v {
            if let Some(a) = self.alpha.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
                return bad(format!("alpha = {a} must lie in (0, 1)"));
            }
        }
        if self.time_limit_s.is_nan() || self.time_limit_s < 0.0 {
            return bad(format!("time limit {} must be nonnegative", self.time_limit_s));
        }
        for p in &self.problems {
            p.kind()?;
        }
        Ok(())
    }

    fn weight_mode(&self, alpha: f64) -> WeightMode {
        if self.uniform_v {
            WeightMode::Uniform
        } else {
            WeightMode::Alpha(alpha)
        }
    }

    /// Cells in run order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for problem in &self.problems {
            for &k in &self.k {
                for &alpha in &self.alpha {
                    out.push(CellKey { problem: *problem, k, alpha });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub problem: ProblemSpec,
    pub k: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    Optimal,
    TimeLimit,
    NotSolved,
    Error,
}

impl ExactStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExactStatus::Optimal => "optimal",
            ExactStatus::TimeLimit => "time_limit",
            ExactStatus::NotSolved => "not_solved",
            ExactStatus::Error => "error",
        }
    }
}

/// One benchmark row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub kind: &'static str,
    pub size: usize,
    pub k: usize,
    pub alpha: f64,
    pub instance: usize,
    pub seed: u64,
    /// Optimum, or the incumbent when the time limit was hit.
    pub exact_value: Option<f64>,
    pub exact_status: ExactStatus,
    pub approx_value: Option<f64>,
    pub deviation_pct: Option<f64>,
    pub exact_ms: f64,
    pub approx_ms: f64,
    /// `v_1 K` of the generated instance.
    pub ratio_bound: Option<f64>,
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// `100 (approx - exact) / exact`; zero when both vanish.
pub fn deviation_pct(approx: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        if approx == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (approx - exact) / exact
    }
}

fn run_instance(cfg: &ExperimentConfig, cell: &CellKey, instance: usize) -> BenchmarkRecord {
    let seed = stream_seed(cfg.seed, &cell.problem, cell.k, instance);
    let mut record = BenchmarkRecord {
        kind: cell.problem.name(),
        size: cell.problem.size(),
        k: cell.k,
        alpha: cell.alpha,
        instance,
        seed,
        exact_value: None,
        exact_status: ExactStatus::Error,
        approx_value: None,
        deviation_pct: None,
        exact_ms: 0.0,
        approx_ms: 0.0,
        ratio_bound: None,
    };
    let Ok(inst) = gen_instance(&cell.problem, cell.k, cfg.weight_mode(cell.alpha), seed) else {
        return record;
    };
    let t = Instant::now();
    if let Ok(r) = approx_solve(&inst) {
        record.approx_value = Some(r.wowa_objective);
        record.ratio_bound = r.ratio_bound;
    }
    record.approx_ms = millis(t.elapsed());

    let t = Instant::now();
    let limit = Duration::from_secs_f64(cfg.time_limit_s);
    let exact = match cfg.exact {
        ExactMethod::Bb => exact_bb(&inst, limit).map(Some),
        ExactMethod::BruteForce => brute_force(&inst).map(Some),
        ExactMethod::LpExport => {
            let written = build_mip(&inst).and_then(|m| export_lp(&m)).and_then(|text| match &cfg.lp_dir {
                Some(dir) => {
                    let name =
                        format!("{}_{}_K{}_a{}_{}.lp", record.kind, record.size, record.k, record.alpha, instance);
                    std::fs::write(dir.join(name), text).map_err(|e| Error::Argument(e.to_string()))
                }
                None => Ok(()),
            });
            written.map(|()| None)
        }
    };
    record.exact_ms = millis(t.elapsed());
    match exact {
        Ok(Some(r)) => {
            record.exact_value = Some(r.objective);
            record.exact_status = match r.status {
                ProofStatus::Optimal => ExactStatus::Optimal,
                ProofStatus::TimeLimit => ExactStatus::TimeLimit,
            };
            record.deviation_pct = record.approx_value.map(|a| deviation_pct(a, r.objective));
        }
        Ok(None) => record.exact_status = ExactStatus::NotSolved,
        Err(_) => record.exact_status = ExactStatus::Error,
    }
    record
}

/// Runs every cell of the grid. `progress` is called once per finished
/// cell with that cell's records. Instances within a cell run in parallel;
/// records come back in grid order regardless of scheduling.
pub fn run_benchmark(
    cfg: &ExperimentConfig,
    progress: &(dyn Fn(&CellKey, &[BenchmarkRecord]) + Sync),
) -> Result<Vec<BenchmarkRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for cell in cfg.cells() {
        let records: Vec<BenchmarkRecord> =
            (0..cfg.instances).into_par_iter().map(|i| run_instance(cfg, &cell, i)).collect();
        progress(&cell, &records);
        out.extend(records);
    }
    Ok(out)
}

/// Aggregates for one `(kind, size, K, alpha)` cell. Only instances solved
/// to optimality enter the deviation statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub kind: &'static str,
    pub size: usize,
    pub k: usize,
    pub alpha: f64,
    pub instances: usize,
    pub solved: usize,
    pub unsolved: usize,
    pub mean_deviation_pct: Option<f64>,
    pub max_deviation_pct: Option<f64>,
    pub mean_exact_ms: f64,
    pub mean_approx_ms: f64,
}

pub fn summarize(records: &[BenchmarkRecord]) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(Error::Argument("no records to summarize".into()));
    }
    let mut order: Vec<(&'static str, usize, usize, u64)> = Vec::new();
    let mut groups: BTreeMap<(&'static str, usize, usize, u64), Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.kind, r.size, r.k, r.alpha.to_bits());
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(r);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let devs: Vec<f64> =
                rs.iter().filter(|r| r.exact_status == ExactStatus::Optimal).filter_map(|r| r.deviation_pct).collect();
            let count = rs.len() as f64;
            CellSummary {
                kind: key.0,
                size: key.1,
                k: key.2,
                alpha: f64::from_bits(key.3),
                instances: rs.len(),
                solved: devs.len(),
                unsolved: rs.len() - devs.len(),
                mean_deviation_pct: (!devs.is_empty()).then(|| devs.iter().sum::<f64>() / devs.len() as f64),
                max_deviation_pct: devs.iter().copied().reduce(f64::max),
                mean_exact_ms: rs.iter().map(|r| r.exact_ms).sum::<f64>() / count,
                mean_approx_ms: rs.iter().map(|r| r.approx_ms).sum::<f64>() / count,
            }
        })
        .collect())
}

pub const RECORD_HEADER: [&str; 12] = [
    "kind",
    "size",
    "K",
    "alpha",
    "instance",
    "seed",
    "exact_value",
    "exact_status",
    "approx_value",
    "deviation_pct",
    "exact_ms",
    "approx_ms",
];

pub const SUMMARY_HEADER: [&str; 11] = [
    "kind",
    "size",
    "K",
    "alpha",
    "instances",
    "solved",
    "unsolved",
    "mean_deviation_pct",
    "max_deviation_pct",
    "mean_exact_ms",
    "mean_approx_ms",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Argument(format!("csv output failed: {e}"))
}

pub fn write_records_csv<W: Write>(out: W, records: &[BenchmarkRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.kind.to_string(),
            r.size.to_string(),
            r.k.to_string(),
            r.alpha.to_string(),
            r.instance.to_string(),
            r.seed.to_string(),
            opt(r.exact_value),
            r.exact_status.as_str().to_string(),
            opt(r.approx_value),
            opt(r.deviation_pct),
            format!("{:.3}", r.exact_ms),
            format!("{:.3}", r.approx_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

pub fn write_summary_csv<W: Write>(out: W, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for c in cells {
        w.write_record([
            c.kind.to_string(),
            c.size.to_string(),
            c.k.to_string(),
            c.alpha.to_string(),
            c.instances.to_string(),
            c.solved.to_string(),
            c.unsolved.to_string(),
            opt(c.mean_deviation_pct),
            opt(c.max_deviation_pct),
            format!("{:.3}", c.mean_exact_ms),
            format!("{:.3}", c.mean_approx_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(dev: Option<f64>, status: ExactStatus) -> BenchmarkRecord {
        BenchmarkRecord {
            kind: "selection",
            size: 40,
            k: 2,
            alpha: 0.01,
            instance: 0,
            seed: 0,
            exact_value: Some(10.0),
            exact_status: status,
            approx_value: Some(11.0),
            deviation_pct: dev,
            exact_ms: 2.0,
            approx_ms: 1.0,
            ratio_bound: Some(1.9),
        }
    }

    #[test]
    fn generator_is_deterministic_and_well_formed() {
        let spec = ProblemSpec::selection(20);
        let a = gen_instance(&spec, 4, WeightMode::Alpha(0.01), 7).unwrap();
        let b = gen_instance(&spec, 4, WeightMode::Alpha(0.01), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.kind(), &ProblemKind::Selection { q: 5 });
        let ps: f64 = a.raw_p().iter().sum();
        assert!((ps - 1.0).abs() <= 1e-12);
        assert!(a.raw_p().iter().all(|&p| p > 0.0));
        assert!(a.costs().iter().flatten().all(|&c| (0.0..=100.0).contains(&c) && c.fract() == 0.0));
        assert_ne!(a, gen_instance(&spec, 4, WeightMode::Alpha(0.01), 8).unwrap());
        let asg = gen_instance(&ProblemSpec::Assignment { m: 3 }, 2, WeightMode::Uniform, 1).unwrap();
        assert_eq!(asg.n(), 9);
        assert!(gen_instance(&spec, 4, WeightMode::Alpha(1.5), 7).is_err());
        assert!(gen_instance(&spec, 0, WeightMode::Alpha(0.5), 7).is_err());
    }

    #[test]
    fn generated_weights_are_nonincreasing_over_grid() {
        for alpha in [1e-2, 1e-3, 1e-4] {
            for k in 1..=20 {
                let inst = gen_instance(&ProblemSpec::selection(8), k, WeightMode::Alpha(alpha), 3).unwrap();
                assert!(inst.weights().is_nonincreasing());
                assert!(inst.raw_v().windows(2).all(|w| w[0] >= w[1]), "alpha {alpha} K {k}");
            }
        }
    }

    #[test]
    fn q_rounds_half_up() {
        assert_eq!(ProblemSpec::selection(40).kind().unwrap(), ProblemKind::Selection { q: 10 });
        assert_eq!(ProblemSpec::selection(10).kind().unwrap(), ProblemKind::Selection { q: 3 });
        assert_eq!(ProblemSpec::selection(2).kind().unwrap(), ProblemKind::Selection { q: 1 });
        assert_eq!(ProblemSpec::selection(1).kind().unwrap(), ProblemKind::Selection { q: 1 });
        let p = ProblemSpec::Selection { n: 10, q: Some(4), q_fraction: 0.25 };
        assert_eq!(p.kind().unwrap(), ProblemKind::Selection { q: 4 });
    }

    #[test]
    fn summaries() {
        let s = summarize(&[record(Some(7.0), ExactStatus::Optimal)]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_deviation_pct, Some(7.0));
        assert_eq!(s[0].max_deviation_pct, Some(7.0));
        let s = summarize(&[
            record(Some(0.0), ExactStatus::Optimal),
            record(Some(10.0), ExactStatus::Optimal),
            record(Some(50.0), ExactStatus::TimeLimit),
        ])
        .unwrap();
        assert_eq!(s[0].mean_deviation_pct, Some(5.0));
        assert_eq!(s[0].max_deviation_pct, Some(10.0));
        assert_eq!((s[0].solved, s[0].unsolved), (2, 1));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn config_json() {
        let cfg = ExperimentConfig::from_json(
            r#"{"problems":[{"selection":{"n":12}},{"assignment":{"m":4}}],"K":[2],"alpha":[0.01],"instances":2,"seed":5}"#,
        )
        .unwrap();
        assert_eq!(cfg.exact, ExactMethod::Bb);
        assert_eq!(cfg.cells().len(), 2);
        assert!(ExperimentConfig::from_json(r#"{"problems":[],"K":[2],"alpha":[0.01]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"problems":[{"assignment":{"m":4}}],"K":[2],"alpha":[2.0]}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"problems":[{"assignment":{"m":4}}],"K":[2],"alpha":[0.5],"bogus":1}"#
        )
        .is_err());
    }

    #[test]
    fn deviation_edge_cases() {
        assert_eq!(deviation_pct(11.0, 10.0), 10.0);
        assert_eq!(deviation_pct(0.0, 0.0), 0.0);
        assert!(deviation_pct(1.0, 0.0).is_infinite());
    }
}
