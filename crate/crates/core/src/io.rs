//! JSON instance and solution files (format version 1).
//!
//! Instance:
//!
//! ```json
//! {"format": 1, "n": 2, "K": 1, "kind": {"selection": {"q": 1}},
//!  "p": [1.0], "v": [1.0], "costs": [[3.0, 4.0]]}
//! ```
//!
//! Solution: `{"format": 1, "chosen": [0, 3]}` with 0-based element indices.
//! A bare JSON array of indices is accepted on input.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_parts, ProblemKind, ScenarioInstance, Solution, Violation};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

/// Raw, unvalidated instance file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument<T> {
    pub format: u32,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub kind: ProblemKind,
    pub p: Vec<T>,
    pub v: Vec<T>,
    pub costs: Vec<Vec<T>>,
}

impl<T: Scalar> InstanceDocument<T> {
    pub fn from_instance(inst: &ScenarioInstance<T>) -> Self {
        Self {
            format: FORMAT_VERSION,
            n: inst.n(),
            k: inst.k(),
            kind: inst.kind().clone(),
            p: inst.raw_p().to_vec(),
            v: inst.raw_v().to_vec(),
            costs: inst.costs().to_vec(),
        }
    }

    /// Every broken invariant; empty iff the document describes a valid instance.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.format != FORMAT_VERSION {
            out.push(Violation { field: "format".into(), rule: format!("unsupported version {}", self.format) });
        }
        out.extend(validate_parts(self.n, self.k, &self.kind, &self.costs, &self.p, &self.v));
        out
    }

    pub fn into_instance(self) -> Result<ScenarioInstance<T>> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        ScenarioInstance::new(self.kind, self.costs, self.p, self.v)
    }
}

pub fn parse_instance_document<T: Scalar + DeserializeOwned>(text: &str) -> Result<InstanceDocument<T>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_instance<T: Scalar + DeserializeOwned>(text: &str) -> Result<ScenarioInstance<T>> {
    parse_instance_document(text)?.into_instance()
}

pub fn write_instance<T: Scalar + Serialize>(inst: &ScenarioInstance<T>) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceDocument::from_instance(inst)).expect("instance serializes");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDocument {
    format: u32,
    chosen: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SolutionInput {
    Versioned(SolutionDocument),
    Bare(Vec<usize>),
}

pub fn read_solution(text: &str) -> Result<Solution> {
    match serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))? {
        SolutionInput::Versioned(doc) if doc.format != FORMAT_VERSION => {
            Err(Error::Parse(format!("unsupported solution format version {}", doc.format)))
        }
        SolutionInput::Versioned(doc) => Ok(Solution::new(doc.chosen)),
        SolutionInput::Bare(chosen) => Ok(Solution::new(chosen)),
    }
}

pub fn write_solution(sol: &Solution) -> String {
    let doc = SolutionDocument { format: FORMAT_VERSION, chosen: sol.chosen().to_vec() };
    let mut s = serde_json::to_string(&doc).expect("solution serializes");
    s.push('\n');
    s
}
