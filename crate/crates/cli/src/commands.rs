//! Subcommand implementations. Each returns the process exit code on
//! success: `0` for a clean result, `3` for a flagged finding and `2` when a
//! proven bound fails or a report does not reproduce.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use hvbell_core::covariation::frequency_covariation;
use hvbell_core::inequalities::{
    check_theorem1, check_theorem2, check_theorem3, check_theorem4, theorem1_proof_chain,
};
use hvbell_core::metrics::{convergence_probe, delta, delta_triple, ConvergenceVerdict};
use hvbell_core::search::{counterexample_hunt, maximize_violation, SearchMode};
use hvbell_core::simulate::{run_experiment, singlet_grid, singlet_reference, ExperimentPlan, Pair, SingletReference};
use hvbell_core::{
    BellInstance, Distribution, Error as CoreError, InequalityReport, Rational, RecordSequence, Scalar, Spin,
    T4Variant, TheoremId,
};

use crate::config::{
    parse_toml, ConvergeConfig, DeviceKindSpec, InstanceDoc, Num, Numeric, SearchConfig, SimulateConfig,
};
use crate::records::{read_records, write_ground_truth, write_records};
use crate::report::{
    emit, inequality_docs, table, AnalyzeReport, CheckReport, ConvergeReport, ConvergeRowDoc, CounterexampleDoc,
    EpsilonDoc, Header, HuntCellDoc, HuntDoc, InequalityDoc, InputDoc, Outputs, PairStats, ProblemDoc,
    ProofChainDoc, Reproduction, SearchReport, SearchResultDoc, SimulateReport, SingletDoc, SingletGridDoc,
    SingletReport, Skipped,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_BREACH: u8 = 2;
pub const EXIT_FINDING: u8 = 3;

const DELTA_KEYS: [&str; 3] = ["AB-CB", "AB-AC", "CB-AC"];

fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn utf8<'a>(bytes: &'a [u8], path: &Path) -> Result<&'a str> {
    std::str::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

/// Output paths in a config are relative to the config's directory.
fn resolve(config: &Path, target: &Path) -> PathBuf {
    if target.is_absolute() {
        target.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new("")).join(target)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    crate::report::ensure_parent(path)?;
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn pair_table<T: Scalar>(values: [T; 3]) -> crate::report::Table {
    table(Pair::ALL.iter().map(|p| p.as_str()).zip(values))
}

// ---------------------------------------------------------------- simulate

pub fn simulate(path: &Path) -> Result<u8> {
    let bytes = read_input(path)?;
    let cfg: SimulateConfig = parse_toml(utf8(&bytes, path)?, "simulate config")?;
    cfg.validate()?;
    match cfg.numeric {
        Numeric::Rational => simulate_with::<Rational>(&cfg, path, &bytes),
        Numeric::Float => simulate_with::<f64>(&cfg, path, &bytes),
    }
}

fn simulate_with<T: Scalar>(cfg: &SimulateConfig, path: &Path, bytes: &[u8]) -> Result<u8> {
    let drift = cfg.drift_models()?;
    let device = cfg.device.as_ref().map(|d| d.build()).transpose()?;
    let observables = cfg.observables.build()?;
    let plan = ExperimentPlan::per_pair(cfg.n, drift, device, cfg.seed)?;
    let outcome = run_experiment::<T>(&plan, &observables)?;

    let records: BTreeMap<Pair, RecordSequence> =
        Pair::ALL.iter().map(|&p| (p, outcome.records[p.index()].clone())).collect();
    write_records(create(&resolve(path, &cfg.output.records))?, &records)?;
    if let Some(truth) = &cfg.output.ground_truth {
        write_ground_truth(create(&resolve(path, truth))?, &outcome.runs)?;
    }

    let inst = &outcome.instance;
    let eps_prime = matches!(inst, BellInstance::Stoch(_)).then(|| inst.observed_epsilon_prime());
    let report = SimulateReport {
        header: Header::new("simulate", Some(bytes), Some(cfg.seed)),
        numeric: cfg.numeric.as_str().into(),
        n: cfg.n,
        hidden: plan.hidden_size(),
        states: plan.device.as_ref().map(|d| d.states.dim()),
        drift: Pair::ALL
            .iter()
            .map(|&p| {
                let spec = cfg.drift_overrides.get(p.as_str()).unwrap_or(&cfg.drift);
                (p.as_str().to_owned(), spec.kind().to_owned())
            })
            .collect(),
        device: cfg.device.as_ref().map(|d| {
            match d.kind {
                DeviceKindSpec::Consistent => "consistent",
                DeviceKindSpec::Independent => "independent",
                DeviceKindSpec::Correlated => "correlated",
            }
            .to_owned()
        }),
        frequency_covariation: pair_table(outcome.frequency.clone()),
        ensemble_covariation: pair_table(outcome.ensemble.clone()),
        delta: table(DELTA_KEYS.into_iter().zip(outcome.deltas.clone())),
        sigma: outcome.sigmas.clone().map(pair_table),
        epsilon: EpsilonDoc::from_estimate(&outcome.epsilon),
        epsilon_prime: eps_prime.as_ref().map(Num::from_scalar),
        reports: inequality_docs(&outcome.reports),
        instance: InstanceDoc::from_instance(inst, Some((inst.observed_epsilon(), eps_prime))),
        outputs: Outputs {
            records: Some(cfg.output.records.display().to_string()),
            ground_truth: cfg.output.ground_truth.as_ref().map(|p| p.display().to_string()),
        },
    };
    emit(&report, Some(&resolve(path, &cfg.output.report)))?;
    Ok(EXIT_OK)
}

// ----------------------------------------------------------------- analyze

const OUTCOMES: [(Spin, Spin, &str); 4] = [
    (Spin::Up, Spin::Up, "+1,+1"),
    (Spin::Up, Spin::Down, "+1,-1"),
    (Spin::Down, Spin::Up, "-1,+1"),
    (Spin::Down, Spin::Down, "-1,-1"),
];

fn outcome_counts(seq: &RecordSequence) -> [u64; 4] {
    let mut counts = [0u64; 4];
    for &(u, v) in seq.outcomes() {
        let i = OUTCOMES.iter().position(|&(a, b, _)| a == u && b == v).expect("four outcomes");
        counts[i] += 1;
    }
    counts
}

/// `[#(+1), #(-1)]` of one side of a pair's records.
fn marginal_counts(seq: &RecordSequence, first: bool) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for &(u, v) in seq.outcomes() {
        let s = if first { u } else { v };
        counts[usize::from(s == Spin::Down)] += 1;
    }
    counts
}

pub fn analyze(paths: &[PathBuf], numeric: Numeric, output: Option<&Path>) -> Result<u8> {
    let mut inputs = Vec::new();
    let mut all: BTreeMap<Pair, RecordSequence> = BTreeMap::new();
    let mut hasher_input = Vec::new();
    for path in paths {
        let bytes = read_input(path)?;
        for (pair, seq) in read_records(bytes.as_slice(), &path.display().to_string())? {
            if all.insert(pair, seq).is_some() {
                bail!("pair {} appears in more than one records file", pair.as_str());
            }
        }
        inputs.push(InputDoc {
            path: path.display().to_string(),
            sha256: crate::report::sha256_hex(&bytes),
        });
        hasher_input.extend_from_slice(&bytes);
    }
    for pair in Pair::ALL {
        if !all.contains_key(&pair) {
            bail!("no records for pair {}", pair.as_str());
        }
    }
    let header = Header::new("analyze", Some(&hasher_input), None);
    match numeric {
        Numeric::Rational => analyze_with::<Rational>(header, inputs, &all, output),
        Numeric::Float => analyze_with::<f64>(header, inputs, &all, output),
    }
}

fn analyze_with<T: Scalar>(
    header: Header,
    inputs: Vec<InputDoc>,
    records: &BTreeMap<Pair, RecordSequence>,
    output: Option<&Path>,
) -> Result<u8> {
    let seq = |p: Pair| &records[&p];
    let freq: [T; 3] = Pair::ALL.map(|p| frequency_covariation(seq(p))).into_iter().collect::<Result<Vec<_>, _>>()?
        .try_into()
        .expect("three pairs");
    let outcome_dist: Vec<Distribution<T>> = Pair::ALL
        .iter()
        .map(|&p| Distribution::from_counts(&outcome_counts(seq(p))))
        .collect::<Result<_, _>>()?;
    let outcome_delta = [
        delta(&outcome_dist[0], &outcome_dist[1])?,
        delta(&outcome_dist[0], &outcome_dist[2])?,
        delta(&outcome_dist[1], &outcome_dist[2])?,
    ];
    let marginal = |p: Pair, first: bool| Distribution::<T>::from_counts(&marginal_counts(seq(p), first));
    let marginal_delta = [
        ("A", delta(&marginal(Pair::AB, true)?, &marginal(Pair::AC, true)?)?),
        ("B", delta(&marginal(Pair::AB, false)?, &marginal(Pair::CB, false)?)?),
        ("C", delta(&marginal(Pair::CB, true)?, &marginal(Pair::AC, false)?)?),
    ];
    let lower = marginal_delta
        .iter()
        .map(|(_, d)| d.clone())
        .fold(T::zero(), T::max_of);
    let [e_ab, e_cb, e_ac] = freq.clone();
    let classical = InequalityReport::new(TheoremId::Classical, (e_ab - e_cb).abs(), T::one() - e_ac, None, None);
    let required = T::max_of(T::zero(), classical.violation() * T::half());

    let pairs = Pair::ALL
        .iter()
        .zip(&freq)
        .map(|(&p, f)| {
            let counts = outcome_counts(seq(p));
            let stats = PairStats {
                n: seq(p).len(),
                counts: OUTCOMES.iter().zip(counts).map(|(o, c)| (o.2.to_owned(), c)).collect(),
                frequency_covariation: Num::from_scalar(f),
            };
            (p.as_str().to_owned(), stats)
        })
        .collect();
    let violated = !classical.holds();
    let report = AnalyzeReport {
        header,
        numeric: if T::EXACT { "rational" } else { "float" }.into(),
        inputs,
        pairs,
        outcome_delta: table(DELTA_KEYS.into_iter().zip(outcome_delta)),
        marginal_delta: table(marginal_delta),
        epsilon_lower_bound: Num::from_scalar(&lower),
        classical: InequalityDoc::from_report(&classical),
        required_epsilon: Num::from_scalar(&required),
    };
    emit(&report, output)?;
    Ok(if violated { EXIT_FINDING } else { EXIT_OK })
}

// ------------------------------------------------------------------- check

/// `Ok(Err(reason))` when the theorem's hypotheses do not apply to the
/// instance; other failures propagate.
fn hypothesis<T>(r: hvbell_core::Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (CoreError::BudgetViolation { .. } | CoreError::PreconditionFailed(_))) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

struct Evaluation {
    report: CheckReport,
    breach: bool,
    finding: bool,
}

fn evaluate<T: Scalar>(doc: &InstanceDoc, header: Header) -> Result<Evaluation> {
    let inst: BellInstance<T> = doc.build()?;
    let given = doc.budgets::<T>()?;
    let mut evaluated: Vec<InequalityReport<T>> = vec![inst.classical()];
    let mut skipped = Vec::new();
    let mut proof_chain = None;
    let mut skip = |theorem: TheoremId, reason: String| {
        skipped.push(Skipped {
            theorem: theorem.as_str().into(),
            reason,
        })
    };

    let (covariation, deltas, sigma, epsilon, epsilon_prime) = match &inst {
        BellInstance::Det(i) => {
            let eps = match &given {
                Some((_, Some(_))) => bail!("epsilon_prime only applies to stochastic instances"),
                Some((e, None)) => e.clone(),
                None => i.observed_epsilon(),
            };
            if i.observed_epsilon() <= T::tolerance() {
                evaluated.push(check_theorem1(&i.ab, &i.a, &i.b, &i.c)?);
                let chain = theorem1_proof_chain(&i.ab, &i.a, &i.b, &i.c)?;
                proof_chain = Some(ProofChainDoc {
                    consistent: chain.is_consistent(),
                    difference: Num::from_scalar(&chain.difference),
                    linear_form: Num::from_scalar(&chain.linear_form),
                    squared_form: Num::from_scalar(&chain.squared_form),
                    bound: Num::from_scalar(&chain.bound),
                    rhs: Num::from_scalar(&chain.rhs),
                });
            } else {
                skip(TheoremId::T1, format!("the three distributions differ (max δ = {})", i.observed_epsilon()));
            }
            match hypothesis(check_theorem2(i, &eps))? {
                Ok(r) => evaluated.push(r),
                Err(reason) => skip(TheoremId::T2, reason),
            }
            let d = [i.delta_ab_cb(), i.delta_ab_ac(), delta(&i.cb, &i.ac)?];
            ([i.cov_ab(), i.cov_cb(), i.cov_ac()], d, None, eps, None)
        }
        BellInstance::Stoch(i) => {
            let (eps, eps_p) = match &given {
                Some((e, p)) => (e.clone(), p.clone().unwrap_or_else(|| i.observed_epsilon_prime())),
                None => (i.observed_epsilon(), i.observed_epsilon_prime()),
            };
            match hypothesis(check_theorem3(i))? {
                Ok(r) => evaluated.push(r),
                Err(reason) => skip(TheoremId::T3, reason),
            }
            for variant in [T4Variant::Proven, T4Variant::Stated] {
                match hypothesis(check_theorem4(i, &eps, &eps_p, variant))? {
                    Ok(r) => evaluated.push(r),
                    Err(reason) => skip(variant.theorem(), reason),
                }
            }
            let d = [i.delta_ab_cb(), i.delta_ab_ac(), delta_triple(&i.cb, &i.ac)?];
            let cov = [i.cov_ab(), i.cov_cb(), i.cov_ac()];
            (cov, d, Some(i.sigmas()), eps, Some(eps_p))
        }
    };

    let breach = evaluated.iter().any(|r| r.theorem.is_proven() && !r.holds())
        || proof_chain.as_ref().is_some_and(|c| !c.consistent);
    let finding = evaluated.iter().any(|r| !r.theorem.is_proven() && !r.holds());
    let report = CheckReport {
        header,
        numeric: doc.numeric.as_str().into(),
        mode: doc.mode.as_str().into(),
        hidden: inst.hidden_size(),
        states: doc.states,
        covariation: pair_table(covariation),
        delta: table(DELTA_KEYS.into_iter().zip(deltas)),
        sigma: sigma.map(pair_table),
        budget_source: if given.is_some() { "given" } else { "observed" }.into(),
        epsilon: Num::from_scalar(&epsilon),
        epsilon_prime: epsilon_prime.as_ref().map(Num::from_scalar),
        evaluated: inequality_docs(&evaluated),
        skipped,
        proof_chain,
        reproduced: None,
    };
    Ok(Evaluation {
        report,
        breach,
        finding,
    })
}

/// Compares a report's recorded verdicts with a fresh evaluation.
fn reproduce(expected: &[InequalityDoc], actual: &[InequalityDoc]) -> Vec<Reproduction> {
    expected
        .iter()
        .map(|e| match actual.iter().find(|a| a.theorem == e.theorem) {
            Some(a) => Reproduction {
                theorem: e.theorem.clone(),
                expected: e.verdict.clone(),
                actual: a.verdict.clone(),
                values_match: a == e,
            },
            None => Reproduction {
                theorem: e.theorem.clone(),
                expected: e.verdict.clone(),
                actual: "skipped".into(),
                values_match: false,
            },
        })
        .collect()
}

pub fn check(path: &Path, output: Option<&Path>) -> Result<u8> {
    let bytes = read_input(path)?;
    let text = utf8(&bytes, path)?;
    let (doc, expected): (InstanceDoc, Option<Vec<InequalityDoc>>) = if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text).context("malformed report JSON")?;
        let instance = value
            .get("instance")
            .filter(|v| !v.is_null())
            .ok_or_else(|| anyhow!("report has no embedded instance"))?;
        let doc = serde_json::from_value(instance.clone()).context("malformed embedded instance")?;
        let reports = match value.get("reports") {
            Some(r) => serde_json::from_value(r.clone()).context("malformed embedded reports")?,
            None => Vec::new(),
        };
        (doc, Some(reports))
    } else {
        (parse_toml(text, "instance file")?, None)
    };
    let header = Header::new("check", Some(&bytes), None);
    let Evaluation {
        mut report,
        breach,
        finding,
    } = match doc.numeric {
        Numeric::Rational => evaluate::<Rational>(&doc, header)?,
        Numeric::Float => evaluate::<f64>(&doc, header)?,
    };
    let mut mismatch = false;
    if let Some(expected) = expected {
        let rows = reproduce(&expected, &report.evaluated);
        mismatch = rows.iter().any(|r| r.expected != r.actual || !r.values_match);
        report.reproduced = Some(rows);
    }
    emit(&report, output)?;
    Ok(if breach || mismatch {
        EXIT_BREACH
    } else if finding {
        EXIT_FINDING
    } else {
        EXIT_OK
    })
}

// ------------------------------------------------------------------ search

/// Largest-remainder apportionment of `n` draws to `weights`; ties go to the
/// lower index.
fn quotas(weights: &[f64], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Records whose per-pair empirical hidden (and device) statistics are the
/// apportioned instance distributions, listed in index order.
fn realize_quota(inst: &BellInstance<f64>, n: usize) -> Result<BTreeMap<Pair, RecordSequence>> {
    let mut out = BTreeMap::new();
    match inst {
        BellInstance::Det(i) => {
            for (pair, p, u, v) in [
                (Pair::AB, &i.ab, &i.a, &i.b),
                (Pair::CB, &i.cb, &i.c, &i.b),
                (Pair::AC, &i.ac, &i.a, &i.c),
            ] {
                let mut outcomes = Vec::with_capacity(n);
                for (k, &count) in quotas(p.weights(), n).iter().enumerate() {
                    outcomes.extend(std::iter::repeat_n((u.at(k), v.at(k)), count));
                }
                out.insert(pair, RecordSequence::new(outcomes)?);
            }
        }
        BellInstance::Stoch(i) => {
            for (pair, p, u, v) in [
                (Pair::AB, &i.ab, &i.a, &i.b),
                (Pair::CB, &i.cb, &i.c, &i.b),
                (Pair::AC, &i.ac, &i.a, &i.c),
            ] {
                let shape = p.shape();
                let mut outcomes = Vec::with_capacity(n);
                for (idx, &count) in quotas(p.dist().weights(), n).iter().enumerate() {
                    let (k, s, q) = shape.unindex(idx);
                    outcomes.extend(std::iter::repeat_n((u.at(s, k), v.at(q, k)), count));
                }
                out.insert(pair, RecordSequence::new(outcomes)?);
            }
        }
    }
    Ok(out)
}

pub fn search(path: &Path) -> Result<u8> {
    let bytes = read_input(path)?;
    let cfg: SearchConfig = parse_toml(utf8(&bytes, path)?, "search config")?;
    cfg.validate()?;
    let header = Header::new("search", Some(&bytes), Some(cfg.seed));
    let output = cfg.output.as_ref();
    let report_path = output.and_then(|o| o.report.as_ref()).map(|p| resolve(path, p));

    if let Some(spec) = &cfg.problem {
        let problem = spec.build()?;
        let result = maximize_violation(&problem, cfg.seed)?;
        let stochastic = problem.mode == SearchMode::Stochastic;
        let mut records = None;
        if let Some(target) = output.and_then(|o| o.records.as_ref()) {
            let n = output.and_then(|o| o.records_per_pair).unwrap_or(1000);
            if n == 0 {
                bail!("records_per_pair must be positive");
            }
            write_records(create(&resolve(path, target))?, &realize_quota(&result.instance, n)?)?;
            records = Some(target.display().to_string());
        }
        let budgets = (problem.epsilon, stochastic.then_some(problem.epsilon_prime));
        let report = SearchReport {
            header,
            problem: Some(ProblemDoc {
                mode: spec.mode.as_str().into(),
                hidden: problem.hidden,
                states: problem.states,
                epsilon: problem.epsilon,
                epsilon_prime: problem.epsilon_prime,
                fix_observables: problem.fix_observables,
            }),
            result: Some(SearchResultDoc {
                method: result.method.as_str().into(),
                evaluations: result.evaluations,
                exhaustive: result.exhaustive,
                violation: result.violation,
                delta: table(DELTA_KEYS[..2].iter().copied().zip(result.deltas)),
                sigma: result.sigmas.map(pair_table),
            }),
            hunt: None,
            records,
            instance: Some(InstanceDoc::from_instance(&result.instance, Some(budgets))),
            reports: inequality_docs(&[result.classical, result.corrected]),
        };
        emit(&report, report_path.as_deref())?;
        return Ok(EXIT_OK);
    }

    let spec = cfg.hunt.as_ref().expect("validated");
    let hunt = counterexample_hunt(&spec.build(cfg.seed)?)?;
    let found = hunt.found();
    let (instance, reports, counterexample) = match &hunt.counterexample {
        Some(c) => (
            Some(InstanceDoc::from_instance(
                &c.instance,
                c.report.epsilon.clone().map(|e| (e, c.report.epsilon_prime.clone())),
            )),
            vec![InequalityDoc::from_report(&c.report)],
            Some(CounterexampleDoc {
                origin: c.origin.clone(),
                report: InequalityDoc::from_report(&c.report),
            }),
        ),
        None => (None, Vec::new(), None),
    };
    let report = SearchReport {
        header,
        problem: None,
        result: None,
        hunt: Some(HuntDoc {
            target: hunt.target.as_str().into(),
            found,
            cells: hunt
                .cells
                .iter()
                .map(|c| HuntCellDoc {
                    hidden: c.hidden,
                    states: c.states,
                    epsilon: c.epsilon,
                    epsilon_prime: c.epsilon_prime,
                    method: c.method.as_str().into(),
                    exhaustive: c.exhaustive,
                    evaluations: c.evaluations,
                    violation: c.violation,
                    target_slack: c.target_slack,
                })
                .collect(),
            random_checked: hunt.random_checked,
            random_min_slack: hunt.random_min_slack,
            exact_rechecks: hunt.exact_rechecks,
            counterexample,
        }),
        records: None,
        instance,
        reports,
    };
    emit(&report, report_path.as_deref())?;
    Ok(match (found, hunt.target.is_proven()) {
        (false, _) => EXIT_OK,
        (true, true) => EXIT_BREACH,
        (true, false) => EXIT_FINDING,
    })
}

// ---------------------------------------------------------------- converge

pub fn converge(path: &Path) -> Result<u8> {
    let bytes = read_input(path)?;
    let cfg: ConvergeConfig = parse_toml(utf8(&bytes, path)?, "converge config")?;
    cfg.validate()?;
    let drift = cfg.drift.build()?;
    let t = convergence_probe(&drift, &cfg.sizes, cfg.trials, cfg.seed)?;
    let report = ConvergeReport {
        header: Header::new("converge", Some(&bytes), Some(cfg.seed)),
        drift: cfg.drift.kind().into(),
        hidden: drift.hidden_size(),
        rows: t
            .rows
            .iter()
            .map(|r| ConvergeRowDoc {
                n: r.n,
                median_delta: r.median_delta,
                trials: r.trials,
            })
            .collect(),
        slope: t.slope,
        verdict: match t.verdict {
            ConvergenceVerdict::Degenerate => "degenerate",
            ConvergenceVerdict::Converging => "converging",
            ConvergenceVerdict::NotConverging => "not-converging",
        }
        .into(),
    };
    let out = cfg.output.as_ref().and_then(|o| o.report.as_ref()).map(|p| resolve(path, p));
    emit(&report, out.as_deref())?;
    Ok(EXIT_OK)
}

// ----------------------------------------------------------------- singlet

fn singlet_doc(r: &SingletReference) -> SingletDoc {
    SingletDoc {
        angles: r.angles,
        e_ab: r.e_ab,
        e_cb: r.e_cb,
        e_ac: r.e_ac,
        lhs: r.lhs,
        rhs: r.rhs,
        slack: r.slack,
        required_epsilon: r.required_epsilon,
    }
}

pub fn singlet(angles: Option<&[f64]>, grid: Option<f64>, output: Option<&Path>) -> Result<u8> {
    if angles.is_none() && grid.is_none() {
        bail!("singlet needs --angles, --grid or both");
    }
    let reference = match angles {
        Some(&[a, b, c]) => Some(singlet_doc(&singlet_reference(a, b, c))),
        Some(other) => bail!("--angles takes three values, got {}", other.len()),
        None => None,
    };
    let grid = grid
        .map(|step| -> Result<_> {
            let g = singlet_grid(step)?;
            Ok(SingletGridDoc {
                step_degrees: g.step_degrees,
                evaluated: g.evaluated,
                best: singlet_doc(&g.best),
                analytic_max: g.analytic_max,
            })
        })
        .transpose()?;
    let report = SingletReport {
        header: Header::new("singlet", None, None),
        reference,
        grid,
    };
    emit(&report, output)?;
    Ok(EXIT_OK)
}
