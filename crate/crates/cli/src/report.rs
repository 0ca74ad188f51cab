//! JSON report documents.
//!
//! Every report opens with a [`Header`], keys are emitted in a fixed order
//! (struct order, `BTreeMap` for maps) and nothing depends on wall time or
//! worker count, so repeated runs are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hvbell_core::metrics::EpsilonEstimate;
use hvbell_core::{InequalityReport, Scalar, TheoremId, Verdict};

use crate::config::{InstanceDoc, Num, SCHEMA};

pub const TOOL: &str = "hvbell";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the raw input bytes (config, instance or records).
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
}

impl Header {
    pub fn new(command: &str, input: Option<&[u8]>, seed: Option<u64>) -> Self {
        Self {
            schema: SCHEMA,
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input_sha256: input.map(sha256_hex),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityDoc {
    pub theorem: String,
    pub lhs: Num,
    pub rhs: Num,
    pub slack: Num,
    pub epsilon: Option<Num>,
    pub epsilon_prime: Option<Num>,
    pub verdict: String,
}

impl InequalityDoc {
    pub fn from_report<T: Scalar>(r: &InequalityReport<T>) -> Self {
        Self {
            theorem: r.theorem.as_str().into(),
            lhs: Num::from_scalar(&r.lhs),
            rhs: Num::from_scalar(&r.rhs),
            slack: Num::from_scalar(&r.slack),
            epsilon: r.epsilon.as_ref().map(Num::from_scalar),
            epsilon_prime: r.epsilon_prime.as_ref().map(Num::from_scalar),
            verdict: r.verdict.as_str().into(),
        }
    }

    pub fn theorem_id(&self) -> Result<TheoremId> {
        Ok(self.theorem.parse()?)
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds.as_str()
    }
}

pub fn inequality_docs<T: Scalar>(reports: &[InequalityReport<T>]) -> Vec<InequalityDoc> {
    reports.iter().map(InequalityDoc::from_report).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDoc {
    pub value: Num,
    pub argmax: Option<(String, String)>,
    pub members: usize,
    /// Always true: a finite family cannot witness the supremum.
    pub underestimate: bool,
}

impl EpsilonDoc {
    pub fn from_estimate<T: Scalar>(e: &EpsilonEstimate<T>) -> Self {
        Self {
            value: Num::from_scalar(&e.value),
            argmax: e.argmax.clone(),
            members: e.members,
            underestimate: e.underestimate,
        }
    }
}

pub type Table = BTreeMap<String, Num>;

pub fn table<T: Scalar>(entries: impl IntoIterator<Item = (impl Into<String>, T)>) -> Table {
    entries.into_iter().map(|(k, v)| (k.into(), Num::from_scalar(&v))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub records: Option<String>,
    pub ground_truth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub header: Header,
    pub numeric: String,
    pub n: usize,
    pub hidden: usize,
    pub states: Option<usize>,
    pub drift: BTreeMap<String, String>,
    pub device: Option<String>,
    pub frequency_covariation: Table,
    pub ensemble_covariation: Table,
    pub delta: Table,
    pub sigma: Option<Table>,
    pub epsilon: EpsilonDoc,
    pub epsilon_prime: Option<Num>,
    pub reports: Vec<InequalityDoc>,
    pub instance: InstanceDoc,
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub theorem: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub theorem: String,
    pub expected: String,
    pub actual: String,
    pub values_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChainDoc {
    pub difference: Num,
    pub linear_form: Num,
    pub squared_form: Num,
    pub bound: Num,
    pub rhs: Num,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub header: Header,
    pub numeric: String,
    pub mode: String,
    pub hidden: usize,
    pub states: Option<usize>,
    pub covariation: Table,
    pub delta: Table,
    pub sigma: Option<Table>,
    /// `given` when the instance names its budgets, else `observed`.
    pub budget_source: String,
    pub epsilon: Num,
    pub epsilon_prime: Option<Num>,
    pub evaluated: Vec<InequalityDoc>,
    pub skipped: Vec<Skipped>,
    pub proof_chain: Option<ProofChainDoc>,
    /// Present when the input was a report: its verdicts against this run.
    pub reproduced: Option<Vec<Reproduction>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDoc {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub n: usize,
    /// Outcome counts keyed `u,v`.
    pub counts: BTreeMap<String, u64>,
    pub frequency_covariation: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub header: Header,
    pub numeric: String,
    pub inputs: Vec<InputDoc>,
    pub pairs: BTreeMap<String, PairStats>,
    /// δ between outcome distributions of two pairs.
    pub outcome_delta: Table,
    /// δ between the marginals of an observable shared by two pairs.
    pub marginal_delta: Table,
    /// The largest marginal δ. Pushing an ensemble forward through an
    /// observable cannot increase δ, so any budget covering the runs is at
    /// least this large.
    pub epsilon_lower_bound: Num,
    pub classical: InequalityDoc,
    /// Smallest ε for which the deterministic corrected bound holds.
    pub required_epsilon: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResultDoc {
    pub method: String,
    pub evaluations: usize,
    pub exhaustive: bool,
    pub violation: f64,
    pub delta: Table,
    pub sigma: Option<Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub mode: String,
    pub hidden: usize,
    pub states: usize,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub fix_observables: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuntCellDoc {
    pub hidden: usize,
    pub states: usize,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub method: String,
    pub exhaustive: bool,
    pub evaluations: usize,
    pub violation: f64,
    pub target_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleDoc {
    pub origin: String,
    pub report: InequalityDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuntDoc {
    pub target: String,
    pub found: bool,
    pub cells: Vec<HuntCellDoc>,
    pub random_checked: usize,
    pub random_min_slack: f64,
    pub exact_rechecks: usize,
    pub counterexample: Option<CounterexampleDoc>,
}

/// `instance` and `reports` hold the best instance (or the counterexample)
/// and its verdicts, in the same layout as a simulate report, so `check`
/// can re-evaluate either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub header: Header,
    pub problem: Option<ProblemDoc>,
    pub result: Option<SearchResultDoc>,
    pub hunt: Option<HuntDoc>,
    pub records: Option<String>,
    pub instance: Option<InstanceDoc>,
    pub reports: Vec<InequalityDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRowDoc {
    pub n: usize,
    pub median_delta: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeReport {
    pub header: Header,
    pub drift: String,
    pub hidden: usize,
    pub rows: Vec<ConvergeRowDoc>,
    pub slope: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletDoc {
    pub angles: [f64; 3],
    pub e_ab: f64,
    pub e_cb: f64,
    pub e_ac: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub required_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletGridDoc {
    pub step_degrees: f64,
    pub evaluated: usize,
    pub best: SingletDoc,
    pub analytic_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletReport {
    pub header: Header,
    pub reference: Option<SingletDoc>,
    pub grid: Option<SingletGridDoc>,
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    Ok(text)
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

/// Writes to `path`, or stdout when `None`.
pub fn emit<T: Serialize>(doc: &T, path: Option<&Path>) -> Result<()> {
    let text = to_json(doc)?;
    match path {
        Some(p) => {
            ensure_parent(p)?;
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hvbell_core::Rational;

    #[test]
    fn rational_values_are_strings() {
        let r = InequalityReport::new(
            TheoremId::T1,
            Rational::from_ratio(1, 2),
            Rational::from_ratio(3, 4),
            None,
            None,
        );
        let doc = InequalityDoc::from_report(&r);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains(r#""lhs":"1/2""#), "{json}");
        assert!(json.contains(r#""slack":"1/4""#), "{json}");
        let back: InequalityDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        assert!(back.holds());
    }

    #[test]
    fn header_hash_is_stable() {
        let h = Header::new("check", Some(b"abc"), None);
        assert_eq!(
            h.input_sha256.as_deref(),
            Some("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
        );
    }
}
