//! TOML configuration documents and the instance format shared with reports.
//!
//! Probabilities and budgets accept integers, floats or strings such as
//! `"3/8"`. In rational mode a float literal is read as its shortest decimal
//! rendering, so `0.1` means one tenth.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use hvbell_core::search::{HuntConfig, SearchProblem};
use hvbell_core::simulate::{DeviceKind, DeviceModel, DriftModel, Pair};
use hvbell_core::{
    BellInstance, BellInstanceDet, BellInstanceStoch, DetObservable, Distribution, NumericMode, Observable,
    Scalar, StochObservable, TheoremId, TripleDistribution, TripleShape,
};

pub const SCHEMA: u32 = 1;

fn check_schema(schema: u32) -> Result<()> {
    if schema != SCHEMA {
        bail!("unsupported schema {schema}; this build reads schema {SCHEMA}");
    }
    Ok(())
}

/// A numeric literal as written in a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn to_scalar<T: Scalar>(&self) -> Result<T> {
        match self {
            Num::Int(i) => Ok(T::from_int(*i)),
            Num::Float(x) if T::EXACT => {
                T::parse_literal(&x.to_string()).ok_or_else(|| anyhow!("non-finite number {x}"))
            }
            Num::Float(x) => T::from_f64(*x).ok_or_else(|| anyhow!("non-finite number {x}")),
            Num::Text(s) => T::parse_literal(s).ok_or_else(|| anyhow!("cannot parse number {s:?}")),
        }
    }

    /// Exact backends render as strings (`"3/8"`), floats as JSON numbers.
    pub fn from_scalar<T: Scalar>(x: &T) -> Num {
        if T::EXACT {
            Num::Text(x.to_string())
        } else {
            Num::Float(x.to_f64())
        }
    }
}

fn scalars<T: Scalar>(values: &[Num], what: &str) -> Result<Vec<T>> {
    values
        .iter()
        .map(|v| v.to_scalar())
        .collect::<Result<_>>()
        .with_context(|| format!("in {what}"))
}

pub fn distribution<T: Scalar>(values: &[Num], what: &str) -> Result<Distribution<T>> {
    Distribution::new(scalars(values, what)?).with_context(|| format!("in {what}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Numeric {
    Float,
    #[default]
    Rational,
}

impl From<Numeric> for NumericMode {
    fn from(n: Numeric) -> Self {
        match n {
            Numeric::Float => NumericMode::Float,
            Numeric::Rational => NumericMode::Rational,
        }
    }
}

impl Numeric {
    pub fn as_str(self) -> &'static str {
        match self {
            Numeric::Float => "float",
            Numeric::Rational => "rational",
        }
    }
}

/// `[1, -1]` for a deterministic observable, `[[1, -1], [-1, -1]]` (rows by
/// device state) for a stochastic one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Det(Vec<i64>),
    Stoch(Vec<Vec<i64>>),
}

impl ObservableSpec {
    pub fn build(&self, name: &str) -> Result<Observable> {
        let o = match self {
            ObservableSpec::Det(v) => DetObservable::from_ints(v).map(Observable::Det),
            ObservableSpec::Stoch(rows) => StochObservable::from_rows(rows).map(Observable::Stoch),
        };
        o.with_context(|| format!("in observable {name}"))
    }

    pub fn from_observable(o: &Observable) -> Self {
        match o {
            Observable::Det(d) => ObservableSpec::Det(d.values().iter().map(|s| s.value()).collect()),
            Observable::Stoch(s) => ObservableSpec::Stoch(
                s.rows().iter().map(|r| r.iter().map(|v| v.value()).collect()).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesSpec {
    pub a: ObservableSpec,
    pub b: ObservableSpec,
    pub c: ObservableSpec,
}

impl ObservablesSpec {
    pub fn build(&self) -> Result<[Observable; 3]> {
        Ok([self.a.build("A")?, self.b.build("B")?, self.c.build("C")?])
    }

    pub fn from_observables(obs: [&Observable; 3]) -> Self {
        let [a, b, c] = obs.map(ObservableSpec::from_observable);
        Self { a, b, c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftSpec {
    Stationary {
        base: Vec<Num>,
    },
    RandomWalk {
        base: Vec<Num>,
        step: f64,
    },
    RegimeSwitch {
        regimes: Vec<Vec<Num>>,
        switch_probability: f64,
    },
}

impl DriftSpec {
    pub fn build(&self) -> Result<DriftModel> {
        let model = match self {
            DriftSpec::Stationary { base } => DriftModel::Stationary {
                base: distribution(base, "drift base")?,
            },
            DriftSpec::RandomWalk { base, step } => DriftModel::RandomWalk {
                base: distribution(base, "drift base")?,
                step: *step,
            },
            DriftSpec::RegimeSwitch {
                regimes,
                switch_probability,
            } => DriftModel::RegimeSwitch {
                regimes: regimes
                    .iter()
                    .enumerate()
                    .map(|(i, r)| distribution(r, &format!("regime {}", i + 1)))
                    .collect::<Result<_>>()?,
                switch_probability: *switch_probability,
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DriftSpec::Stationary { .. } => "stationary",
            DriftSpec::RandomWalk { .. } => "random-walk",
            DriftSpec::RegimeSwitch { .. } => "regime-switch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKindSpec {
    Consistent,
    Independent,
    Correlated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub kind: DeviceKindSpec,
    pub states: Vec<Num>,
    pub coupling: Option<f64>,
}

impl DeviceSpec {
    pub fn build(&self) -> Result<DeviceModel> {
        let kind = match (self.kind, self.coupling) {
            (DeviceKindSpec::Consistent, None) => DeviceKind::Consistent,
            (DeviceKindSpec::Independent, None) => DeviceKind::Independent,
            (DeviceKindSpec::Correlated, Some(coupling)) => DeviceKind::Correlated { coupling },
            (DeviceKindSpec::Correlated, None) => bail!("correlated devices need a coupling"),
            (_, Some(_)) => bail!("coupling only applies to correlated devices"),
        };
        Ok(DeviceModel::new(kind, distribution(&self.states, "device states")?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOutput {
    pub records: PathBuf,
    pub report: PathBuf,
    pub ground_truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema: u32,
    #[serde(default)]
    pub numeric: Numeric,
    pub seed: u64,
    pub n: usize,
    pub observables: ObservablesSpec,
    pub drift: DriftSpec,
    /// Replaces `drift` for individual pairs, keyed `AB`, `CB`, `AC`.
    #[serde(default)]
    pub drift_overrides: BTreeMap<String, DriftSpec>,
    pub device: Option<DeviceSpec>,
    pub output: SimulateOutput,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema)
    }

    pub fn drift_models(&self) -> Result<[DriftModel; 3]> {
        let shared = self.drift.build()?;
        let mut models = [shared.clone(), shared.clone(), shared];
        for (key, spec) in &self.drift_overrides {
            let pair: Pair = key.parse()?;
            models[pair.index()] = spec.build().with_context(|| format!("in drift override {key}"))?;
        }
        Ok(models)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportOutput {
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub schema: u32,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub drift: DriftSpec,
    pub output: Option<ReportOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Deterministic,
    Stochastic,
}

impl ModeSpec {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeSpec::Deterministic => "deterministic",
            ModeSpec::Stochastic => "stochastic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub mode: ModeSpec,
    pub hidden: usize,
    pub states: Option<usize>,
    pub epsilon: Num,
    pub epsilon_prime: Option<Num>,
    pub method: Option<String>,
    pub restarts: Option<usize>,
    pub max_enumeration_bits: Option<usize>,
    pub anchor: Option<Vec<Num>>,
    pub observables: Option<ObservablesSpec>,
    #[serde(default)]
    pub fix_observables: bool,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<SearchProblem> {
        let eps: f64 = self.epsilon.to_scalar()?;
        let eps_p: f64 = self.epsilon_prime.as_ref().map_or(Ok(0.0), Num::to_scalar)?;
        let mut p = match self.mode {
            ModeSpec::Deterministic => {
                if self.states.is_some_and(|l| l != 1) {
                    bail!("deterministic search has a single device state");
                }
                if eps_p != 0.0 {
                    bail!("epsilon_prime only applies to stochastic search");
                }
                SearchProblem::deterministic(self.hidden, eps)
            }
            ModeSpec::Stochastic => SearchProblem::stochastic(self.hidden, self.states.unwrap_or(2), eps, eps_p),
        };
        if let Some(m) = &self.method {
            p.method = m.parse()?;
        }
        if let Some(r) = self.restarts {
            p.restarts = r;
        }
        if let Some(b) = self.max_enumeration_bits {
            p.max_enumeration_bits = b;
        }
        if let Some(anchor) = &self.anchor {
            p.anchor = Some(distribution(anchor, "anchor")?);
        }
        if let Some(obs) = &self.observables {
            p.observables = Some(obs.build()?);
        }
        p.fix_observables = self.fix_observables;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuntSpec {
    pub target: String,
    pub dims: Vec<(usize, usize)>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub epsilon_primes: Vec<f64>,
    pub random_instances: usize,
    pub restarts: Option<usize>,
    pub max_enumeration_bits: Option<usize>,
}

impl HuntSpec {
    pub fn build(&self, seed: u64) -> Result<HuntConfig> {
        let target: TheoremId = self.target.parse()?;
        let mut cfg = HuntConfig::new(target, self.dims.clone(), seed);
        cfg.epsilons = self.epsilons.clone();
        cfg.epsilon_primes = self.epsilon_primes.clone();
        cfg.random_instances = self.random_instances;
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(b) = self.max_enumeration_bits {
            cfg.max_enumeration_bits = b;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOutput {
    pub report: Option<PathBuf>,
    /// Records realizing the best instance, for `analyze`.
    pub records: Option<PathBuf>,
    pub records_per_pair: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub schema: u32,
    pub seed: u64,
    pub problem: Option<ProblemSpec>,
    pub hunt: Option<HuntSpec>,
    pub output: Option<SearchOutput>,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema)?;
        match (&self.problem, &self.hunt) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => bail!("a search config needs exactly one of [problem] or [hunt]"),
        }
    }
}

impl ConvergeConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionsSpec {
    pub ab: Vec<Num>,
    pub cb: Vec<Num>,
    pub ac: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetsSpec {
    pub epsilon: Num,
    pub epsilon_prime: Option<Num>,
}

/// An explicit instance. Stochastic distributions are flattened over
/// `(k, s, q)` as `(k·L + s)·L + q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub schema: u32,
    #[serde(default)]
    pub numeric: Numeric,
    pub mode: ModeSpec,
    pub hidden: usize,
    pub states: Option<usize>,
    pub distributions: DistributionsSpec,
    pub observables: ObservablesSpec,
    pub budgets: Option<BudgetsSpec>,
}

impl InstanceDoc {
    pub fn from_instance<T: Scalar>(inst: &BellInstance<T>, budgets: Option<(T, Option<T>)>) -> Self {
        let nums = |d: &Distribution<T>| d.weights().iter().map(Num::from_scalar).collect::<Vec<_>>();
        let (mode, states, distributions, observables) = match inst {
            BellInstance::Det(i) => (
                ModeSpec::Deterministic,
                None,
                DistributionsSpec {
                    ab: nums(&i.ab),
                    cb: nums(&i.cb),
                    ac: nums(&i.ac),
                },
                ObservablesSpec::from_observables([
                    &Observable::Det(i.a.clone()),
                    &Observable::Det(i.b.clone()),
                    &Observable::Det(i.c.clone()),
                ]),
            ),
            BellInstance::Stoch(i) => (
                ModeSpec::Stochastic,
                Some(i.ab.shape().states_u),
                DistributionsSpec {
                    ab: nums(i.ab.dist()),
                    cb: nums(i.cb.dist()),
                    ac: nums(i.ac.dist()),
                },
                ObservablesSpec::from_observables([
                    &Observable::Stoch(i.a.clone()),
                    &Observable::Stoch(i.b.clone()),
                    &Observable::Stoch(i.c.clone()),
                ]),
            ),
        };
        InstanceDoc {
            schema: SCHEMA,
            numeric: if T::EXACT { Numeric::Rational } else { Numeric::Float },
            mode,
            hidden: inst.hidden_size(),
            states,
            distributions,
            observables,
            budgets: budgets.map(|(e, ep)| BudgetsSpec {
                epsilon: Num::from_scalar(&e),
                epsilon_prime: ep.as_ref().map(Num::from_scalar),
            }),
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<BellInstance<T>> {
        check_schema(self.schema)?;
        let [a, b, c] = self.observables.build()?;
        let d = &self.distributions;
        match self.mode {
            ModeSpec::Deterministic => {
                if self.states.is_some_and(|l| l != 1) {
                    bail!("deterministic instances have a single device state");
                }
                let (Observable::Det(a), Observable::Det(b), Observable::Det(c)) = (a, b, c) else {
                    bail!("deterministic instances need flat observable lists");
                };
                let (ab, cb, ac) = (distribution(&d.ab, "ab")?, distribution(&d.cb, "cb")?, distribution(&d.ac, "ac")?);
                if ab.dim() != self.hidden {
                    bail!("distribution ab has {} entries, expected hidden = {}", ab.dim(), self.hidden);
                }
                Ok(BellInstance::Det(BellInstanceDet::new(ab, cb, ac, a, b, c)?))
            }
            ModeSpec::Stochastic => {
                let l = self.states.ok_or_else(|| anyhow!("stochastic instances need `states`"))?;
                let (Observable::Stoch(a), Observable::Stoch(b), Observable::Stoch(c)) = (a, b, c) else {
                    bail!("stochastic instances need observable tables (rows by device state)");
                };
                let shape = TripleShape::square(self.hidden, l);
                let t = |v: &[Num], name: &str| -> Result<TripleDistribution<T>> {
                    Ok(TripleDistribution::new(shape, distribution(v, name)?)?)
                };
                Ok(BellInstance::Stoch(BellInstanceStoch::new(
                    t(&d.ab, "ab")?,
                    t(&d.cb, "cb")?,
                    t(&d.ac, "ac")?,
                    a,
                    b,
                    c,
                )?))
            }
        }
    }

    pub fn budgets<T: Scalar>(&self) -> Result<Option<(T, Option<T>)>> {
        self.budgets
            .as_ref()
            .map(|b| -> Result<_> {
                Ok((b.epsilon.to_scalar()?, b.epsilon_prime.as_ref().map(Num::to_scalar).transpose()?))
            })
            .transpose()
    }
}

pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).with_context(|| format!("malformed {what}"))
}
