//! Run generators and the end-to-end experiment pipeline.
//!
//! Each of the three ensembles `S_AB`, `S_CB`, `S_AC` is prepared separately:
//! hidden values are drawn step by step from a distribution that may drift
//! within the run, and in the stochastic model every measurement also draws
//! a device state for each apparatus.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariation::{
    ensemble_covariation_det, ensemble_covariation_stoch, frequency_covariation, hidden_probabilities,
    realize_records, triple_probabilities,
};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::inequalities::{
    check_theorem2, check_theorem4, classical_det, classical_stoch, BellInstance, BellInstanceDet, BellInstanceStoch,
    InequalityReport, T4Variant,
};
use crate::metrics::{delta, epsilon_estimate, EpsilonEstimate, HiddenSampler, StateEnsembleFamily};
use crate::model::{DetObservable, DeviceSpace, DeviceTrace, HiddenSpace, Observable, RecordSequence, Run, StochObservable};
use crate::rng::{self, StreamRng};
use crate::scalar::Scalar;

/// One of the three measured observable pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pair {
    AB,
    CB,
    AC,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::AB, Pair::CB, Pair::AC];

    pub fn as_str(self) -> &'static str {
        match self {
            Pair::AB => "AB",
            Pair::CB => "CB",
            Pair::AC => "AC",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn domain(self) -> u64 {
        match self {
            Pair::AB => rng::domain::RUN_AB,
            Pair::CB => rng::domain::RUN_CB,
            Pair::AC => rng::domain::RUN_AC,
        }
    }
}

impl std::str::FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "AB" => Ok(Pair::AB),
            "CB" => Ok(Pair::CB),
            "AC" => Ok(Pair::AC),
            other => Err(Error::InvalidParameter(format!("unknown pair {other:?}"))),
        }
    }
}

/// How the hidden-value distribution evolves over the systems of one run.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftModel {
    Stationary { base: Distribution<f64> },
    /// After every draw `p_k ← |p_k + step·Z_k|`, `Z_k ~ N(0,1)`, then
    /// renormalized.
    RandomWalk { base: Distribution<f64>, step: f64 },
    /// Starts in regime 0; before each draw, moves to a uniformly chosen other
    /// regime with the given probability.
    RegimeSwitch {
        regimes: Vec<Distribution<f64>>,
        switch_probability: f64,
    },
}

fn draw(weights: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

impl DriftModel {
    pub fn stationary(base: Distribution<f64>) -> Self {
        DriftModel::Stationary { base }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftModel::Stationary { .. } => Ok(()),
            DriftModel::RandomWalk { step, .. } => {
                if step.is_finite() && *step >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("random-walk step {step} must be finite and nonnegative")))
                }
            }
            DriftModel::RegimeSwitch {
                regimes,
                switch_probability,
            } => {
                let first = regimes
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("regime switch needs at least one regime".into()))?;
                if regimes.iter().any(|r| r.dim() != first.dim()) {
                    return Err(Error::InvalidParameter("regimes must share the hidden space".into()));
                }
                if !(0.0..=1.0).contains(switch_probability) {
                    return Err(Error::InvalidParameter(format!(
                        "switch probability {switch_probability} outside [0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn hidden_size(&self) -> usize {
        match self {
            DriftModel::Stationary { base } | DriftModel::RandomWalk { base, .. } => base.dim(),
            DriftModel::RegimeSwitch { regimes, .. } => regimes[0].dim(),
        }
    }

    /// `n` hidden indices drawn sequentially from the evolving distribution.
    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Vec<usize> {
        match self {
            DriftModel::Stationary { base } => (0..n).map(|_| draw(base.weights(), rng)).collect(),
            DriftModel::RandomWalk { base, step } => {
                let mut p = base.weights().to_vec();
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    out.push(draw(&p, rng));
                    for w in p.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *w = (*w + step * z).abs();
                    }
                    let total: f64 = p.iter().sum();
                    if total > 0.0 && total.is_finite() {
                        p.iter_mut().for_each(|w| *w /= total);
                    } else {
                        p.copy_from_slice(base.weights());
                    }
                }
                out
            }
            DriftModel::RegimeSwitch {
                regimes,
                switch_probability,
            } => {
                let mut current = 0usize;
                (0..n)
                    .map(|_| {
                        if regimes.len() > 1 && rng.random::<f64>() < *switch_probability {
                            let other = rng.random_range(0..regimes.len() - 1);
                            current = if other >= current { other + 1 } else { other };
                        }
                        draw(regimes[current].weights(), rng)
                    })
                    .collect()
            }
        }
    }
}

impl HiddenSampler for DriftModel {
    fn hidden_size(&self) -> usize {
        DriftModel::hidden_size(self)
    }

    fn sample_hidden(&self, n: usize, rng: &mut StreamRng) -> Vec<usize> {
        self.sample(n, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceKind {
    /// `ω^U(i) = ω^V(i)`.
    Consistent,
    Independent,
    /// With probability `coupling` the second device copies the first;
    /// otherwise it draws independently.
    Correlated { coupling: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    pub kind: DeviceKind,
    pub states: Distribution<f64>,
}

impl DeviceModel {
    pub fn new(kind: DeviceKind, states: Distribution<f64>) -> Result<Self> {
        if let DeviceKind::Correlated { coupling } = kind {
            if !(0.0..=1.0).contains(&coupling) {
                return Err(Error::InvalidParameter(format!("coupling {coupling} outside [0, 1]")));
            }
        }
        Ok(Self { kind, states })
    }

    pub fn space(&self) -> DeviceSpace {
        DeviceSpace::new(self.states.dim()).expect("distributions are non-empty")
    }

    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> DeviceTrace {
        let w = self.states.weights();
        let mut states_u = Vec::with_capacity(n);
        let mut states_v = Vec::with_capacity(n);
        for _ in 0..n {
            let s = draw(w, rng);
            let q = match self.kind {
                DeviceKind::Consistent => s,
                DeviceKind::Independent => draw(w, rng),
                DeviceKind::Correlated { coupling } => {
                    if rng.random::<f64>() < coupling {
                        s
                    } else {
                        draw(w, rng)
                    }
                }
            };
            states_u.push(s);
            states_v.push(q);
        }
        DeviceTrace {
            space_u: self.space(),
            space_v: self.space(),
            states_u,
            states_v,
        }
    }
}

/// Preparation parameters for the three ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub n: usize,
    /// Drift model per pair, indexed by [`Pair::index`].
    pub drift: [DriftModel; 3],
    pub device: Option<DeviceModel>,
    pub seed: u64,
}

impl ExperimentPlan {
    /// All three ensembles prepared by the same drift model.
    pub fn new(n: usize, drift: DriftModel, device: Option<DeviceModel>, seed: u64) -> Result<Self> {
        Self::per_pair(n, [drift.clone(), drift.clone(), drift], device, seed)
    }

    pub fn per_pair(n: usize, drift: [DriftModel; 3], device: Option<DeviceModel>, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("runs need at least one system".into()));
        }
        for d in &drift {
            d.validate()?;
        }
        let m = drift[0].hidden_size();
        if drift.iter().any(|d| d.hidden_size() != m) {
            return Err(Error::InvalidParameter("all pairs must share the hidden space".into()));
        }
        Ok(Self { n, drift, device, seed })
    }

    pub fn hidden_size(&self) -> usize {
        self.drift[0].hidden_size()
    }
}

/// One ensemble. Hidden values use stream 0 of the pair's domain and device
/// states stream 1.
pub fn generate_run(
    drift: &DriftModel,
    device: Option<&DeviceModel>,
    n: usize,
    seed: u64,
    pair: Pair,
) -> Result<Run> {
    drift.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("runs need at least one system".into()));
    }
    let space = HiddenSpace::new(drift.hidden_size())?;
    let hidden = drift.sample(n, &mut rng::stream(seed, pair.domain(), 0));
    match device {
        None => Run::deterministic(&space, hidden),
        Some(model) => {
            let trace = model.sample(n, &mut rng::stream(seed, pair.domain(), 1));
            Run::stochastic(&space, hidden, trace)
        }
    }
}

/// Everything derived from one plan.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome<T> {
    pub runs: [Run; 3],
    pub records: [RecordSequence; 3],
    /// Frequency covariations of the records, by pair.
    pub frequency: [T; 3],
    /// Ensemble covariations of the empirical distributions, by pair.
    pub ensemble: [T; 3],
    pub instance: BellInstance<T>,
    /// `δ(AB,CB)`, `δ(AB,AC)`, `δ(CB,AC)` on the ensemble distributions.
    pub deltas: [T; 3],
    pub sigmas: Option<[T; 3]>,
    pub epsilon: EpsilonEstimate<T>,
    /// Classical check followed by the corrected bounds with budgets set to
    /// the observed deviations.
    pub reports: Vec<InequalityReport<T>>,
}

fn observable_pair(pair: Pair, obs: &[Observable; 3]) -> (&Observable, &Observable) {
    let [a, b, c] = obs;
    match pair {
        Pair::AB => (a, b),
        Pair::CB => (c, b),
        Pair::AC => (a, c),
    }
}

fn det_observables(obs: &[Observable; 3]) -> Option<[DetObservable; 3]> {
    match obs {
        [Observable::Det(a), Observable::Det(b), Observable::Det(c)] => Some([a.clone(), b.clone(), c.clone()]),
        _ => None,
    }
}

fn stoch_observables(obs: &[Observable; 3]) -> Option<[StochObservable; 3]> {
    match obs {
        [Observable::Stoch(a), Observable::Stoch(b), Observable::Stoch(c)] => {
            Some([a.clone(), b.clone(), c.clone()])
        }
        _ => None,
    }
}

pub fn run_experiment<T: Scalar>(plan: &ExperimentPlan, observables: &[Observable; 3]) -> Result<ExperimentOutcome<T>> {
    let m = plan.hidden_size();
    for o in observables {
        if o.hidden_size() != m {
            return Err(Error::DimensionMismatch {
                context: "observable hidden size",
                expected: m,
                found: o.hidden_size(),
            });
        }
    }
    let runs: Vec<Run> = Pair::ALL
        .par_iter()
        .map(|&pair| generate_run(&plan.drift[pair.index()], plan.device.as_ref(), plan.n, plan.seed, pair))
        .collect::<Result<_>>()?;
    let runs: [Run; 3] = runs.try_into().expect("three pairs");
    let records: Vec<RecordSequence> = Pair::ALL
        .iter()
        .map(|&pair| {
            let (u, v) = observable_pair(pair, observables);
            realize_records(&runs[pair.index()], u, v)
        })
        .collect::<Result<_>>()?;
    let records: [RecordSequence; 3] = records.try_into().expect("three pairs");
    let frequency = [0, 1, 2].map(|i| frequency_covariation::<T>(&records[i]).expect("non-empty records"));

    let (instance, flat, sigmas, reports) = match &plan.device {
        None => {
            let [a, b, c] = det_observables(observables)
                .ok_or_else(|| Error::ModeMismatch("a plan without devices needs deterministic observables".into()))?;
            let [ab, cb, ac] = [0, 1, 2].map(|i| hidden_probabilities::<T>(&runs[i]));
            let inst = BellInstanceDet::new(ab.clone(), cb.clone(), ac.clone(), a, b, c)?;
            let reports = vec![
                classical_det(&inst),
                check_theorem2(&inst, &inst.observed_epsilon())?,
            ];
            (BellInstance::Det(inst), [ab, cb, ac], None, reports)
        }
        Some(model) => {
            let [a, b, c] = stoch_observables(observables)
                .ok_or_else(|| Error::ModeMismatch("a plan with devices needs stochastic observables".into()))?;
            for o in [&a, &b, &c] {
                if o.states() != model.states.dim() {
                    return Err(Error::DimensionMismatch {
                        context: "observable device states",
                        expected: model.states.dim(),
                        found: o.states(),
                    });
                }
            }
            let triples: Vec<_> = runs.iter().map(triple_probabilities::<T>).collect::<Result<_>>()?;
            let [ab, cb, ac]: [_; 3] = triples.try_into().expect("three pairs");
            let flat = [ab.dist().clone(), cb.dist().clone(), ac.dist().clone()];
            let inst = BellInstanceStoch::new(ab, cb, ac, a, b, c)?;
            let (eps, eps_p) = (inst.observed_epsilon(), inst.observed_epsilon_prime());
            let reports = vec![
                classical_stoch(&inst),
                check_theorem4(&inst, &eps, &eps_p, T4Variant::Proven)?,
                check_theorem4(&inst, &eps, &eps_p, T4Variant::Stated)?,
            ];
            let sigmas = inst.sigmas();
            (BellInstance::Stoch(inst), flat, Some(sigmas), reports)
        }
    };

    let ensemble = match &instance {
        BellInstance::Det(inst) => [
            ensemble_covariation_det(&inst.ab, &inst.a, &inst.b)?,
            ensemble_covariation_det(&inst.cb, &inst.c, &inst.b)?,
            ensemble_covariation_det(&inst.ac, &inst.a, &inst.c)?,
        ],
        BellInstance::Stoch(inst) => [
            ensemble_covariation_stoch(&inst.ab, &inst.a, &inst.b)?,
            ensemble_covariation_stoch(&inst.cb, &inst.c, &inst.b)?,
            ensemble_covariation_stoch(&inst.ac, &inst.a, &inst.c)?,
        ],
    };
    let deltas = [
        delta(&flat[0], &flat[1])?,
        delta(&flat[0], &flat[2])?,
        delta(&flat[1], &flat[2])?,
    ];
    let family = StateEnsembleFamily::new(
        Pair::ALL
            .iter()
            .zip(flat)
            .map(|(p, d)| (p.as_str().to_string(), d))
            .collect(),
    )?;
    Ok(ExperimentOutcome {
        runs,
        records,
        frequency,
        ensemble,
        instance,
        deltas,
        sigmas,
        epsilon: epsilon_estimate(&family),
        reports,
    })
}

/// Singlet-state correlations `E(x,y) = −cos(θ_x − θ_y)` checked against
/// the classical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletReference {
    pub angles: [f64; 3],
    pub e_ab: f64,
    pub e_cb: f64,
    pub e_ac: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    /// Smallest `ε` for which the corrected deterministic bound admits these
    /// correlations: `max(0, (lhs − rhs)/2)`.
    pub required_epsilon: f64,
}

pub fn singlet_reference(theta_a: f64, theta_b: f64, theta_c: f64) -> SingletReference {
    let e = |x: f64, y: f64| -(x - y).cos();
    let (e_ab, e_cb, e_ac) = (e(theta_a, theta_b), e(theta_c, theta_b), e(theta_a, theta_c));
    let lhs = (e_ab - e_cb).abs();
    let rhs = 1.0 - e_ac;
    SingletReference {
        angles: [theta_a, theta_b, theta_c],
        e_ab,
        e_cb,
        e_ac,
        lhs,
        rhs,
        slack: rhs - lhs,
        required_epsilon: ((lhs - rhs) / 2.0).max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingletGrid {
    pub step_degrees: f64,
    pub evaluated: usize,
    /// First angle triple (in scan order) attaining the largest required `ε`.
    pub best: SingletReference,
    /// `1`, attained at `θ_a − θ_b = 0`, `θ_c − θ_b = π`.
    pub analytic_max: f64,
}

/// Scans `θ_a, θ_c ∈ [0°, 360°)` at the given resolution with `θ_b = 0`;
/// correlations depend only on angle differences.
pub fn singlet_grid(step_degrees: f64) -> Result<SingletGrid> {
    if !(step_degrees.is_finite() && step_degrees > 0.0 && step_degrees <= 360.0) {
        return Err(Error::InvalidParameter(format!("grid step {step_degrees} must be in (0, 360]")));
    }
    let steps = (360.0 / step_degrees).ceil() as usize;
    let angle = |i: usize| (i as f64 * step_degrees).to_radians();
    let mut best: Option<SingletReference> = None;
    for i in 0..steps {
        for j in 0..steps {
            let r = singlet_reference(angle(i), 0.0, angle(j));
            if best.is_none_or(|b| r.required_epsilon > b.required_epsilon) {
                best = Some(r);
            }
        }
    }
    Ok(SingletGrid {
        step_degrees,
        evaluated: steps * steps,
        best: best.expect("at least one grid point"),
        analytic_max: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::sigma;
    use crate::scalar::Rational;

    fn uniform(m: usize) -> Distribution<f64> {
        Distribution::uniform(m).unwrap()
    }

    #[test]
    fn point_mass_drift_repeats_one_index() {
        let drift = DriftModel::stationary(Distribution::point_mass(4, 2).unwrap());
        let run = generate_run(&drift, None, 50, 9, Pair::AB).unwrap();
        assert!(run.hidden().iter().all(|&k| k == 2));
    }

    #[test]
    fn consistent_devices_have_zero_sigma() {
        let device = DeviceModel::new(DeviceKind::Consistent, uniform(3)).unwrap();
        let run = generate_run(&DriftModel::stationary(uniform(2)), Some(&device), 500, 1, Pair::CB).unwrap();
        let p = triple_probabilities::<Rational>(&run).unwrap();
        assert_eq!(sigma(&p).unwrap(), Rational::from_int(0));
    }

    #[test]
    fn independent_devices_sigma_near_half() {
        let device = DeviceModel::new(DeviceKind::Independent, uniform(2)).unwrap();
        let run = generate_run(&DriftModel::stationary(uniform(2)), Some(&device), 20_000, 4, Pair::AB).unwrap();
        let s = sigma(&triple_probabilities::<f64>(&run).unwrap()).unwrap();
        assert!((s - 0.5).abs() < 0.02, "sigma = {s}");
    }

    #[test]
    fn generation_is_reproducible() {
        let drift = DriftModel::RandomWalk { base: uniform(3), step: 0.05 };
        let a = generate_run(&drift, None, 300, 77, Pair::AC).unwrap();
        let b = generate_run(&drift, None, 300, 77, Pair::AC).unwrap();
        let c = generate_run(&drift, None, 300, 78, Pair::AC).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn regime_switch_visits_regimes() {
        let drift = DriftModel::RegimeSwitch {
            regimes: vec![Distribution::point_mass(2, 0).unwrap(), Distribution::point_mass(2, 1).unwrap()],
            switch_probability: 0.1,
        };
        let run = generate_run(&drift, None, 1000, 3, Pair::AB).unwrap();
        let ones = run.hidden().iter().filter(|&&k| k == 1).count();
        assert!(ones > 100 && ones < 900);
        let frozen = DriftModel::RegimeSwitch {
            regimes: vec![Distribution::point_mass(2, 0).unwrap(), Distribution::point_mass(2, 1).unwrap()],
            switch_probability: 0.0,
        };
        assert!(generate_run(&frozen, None, 100, 3, Pair::AB).unwrap().hidden().iter().all(|&k| k == 0));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DriftModel::RandomWalk { base: uniform(2), step: -1.0 }.validate().is_err());
        assert!(DeviceModel::new(DeviceKind::Correlated { coupling: 1.5 }, uniform(2)).is_err());
        assert!(ExperimentPlan::new(0, DriftModel::stationary(uniform(2)), None, 0).is_err());
    }

    fn det_obs(v: &[i64]) -> Observable {
        Observable::Det(DetObservable::from_ints(v).unwrap())
    }

    #[test]
    fn single_system_plan() {
        let plan = ExperimentPlan::new(1, DriftModel::stationary(uniform(3)), None, 5).unwrap();
        let obs = [det_obs(&[1, -1, 1]), det_obs(&[1, 1, -1]), det_obs(&[-1, 1, 1])];
        let out = run_experiment::<Rational>(&plan, &obs).unwrap();
        match &out.instance {
            BellInstance::Det(inst) => {
                for p in [&inst.ab, &inst.cb, &inst.ac] {
                    assert_eq!(p.support().count(), 1);
                }
            }
            BellInstance::Stoch(_) => unreachable!(),
        }
        assert_eq!(out.frequency, out.ensemble);
    }

    #[test]
    fn stationary_experiment_corrected_bound_holds() {
        let plan = ExperimentPlan::new(2000, DriftModel::stationary(uniform(4)), None, 11).unwrap();
        let obs = [det_obs(&[1, -1, 1, -1]), det_obs(&[1, 1, -1, -1]), det_obs(&[-1, 1, 1, -1])];
        let out = run_experiment::<f64>(&plan, &obs).unwrap();
        assert!(out.reports[1].holds());
        let classical = &out.reports[0];
        assert!(classical.slack >= -2.0 * out.epsilon.value - 1e-12);
    }

    #[test]
    fn stochastic_experiment_reports() {
        let device = DeviceModel::new(DeviceKind::Correlated { coupling: 0.7 }, uniform(2)).unwrap();
        let plan = ExperimentPlan::new(400, DriftModel::stationary(uniform(2)), Some(device), 2).unwrap();
        let o = |rows: &[Vec<i64>]| Observable::Stoch(StochObservable::from_rows(rows).unwrap());
        let obs = [
            o(&[vec![1, -1], vec![-1, -1]]),
            o(&[vec![1, 1], vec![-1, 1]]),
            o(&[vec![-1, 1], vec![1, 1]]),
        ];
        let out = run_experiment::<Rational>(&plan, &obs).unwrap();
        assert_eq!(out.frequency, out.ensemble);
        assert_eq!(out.reports.len(), 3);
        assert!(out.reports[1].holds());
        assert!(out.sigmas.is_some());
        assert!(run_experiment::<f64>(&plan, &[det_obs(&[1, 1]), det_obs(&[1, 1]), det_obs(&[1, 1])]).is_err());
    }

    #[test]
    fn singlet_examples() {
        let aligned = singlet_reference(0.3, 0.3, 0.3);
        assert_eq!((aligned.e_ab, aligned.e_cb, aligned.e_ac), (-1.0, -1.0, -1.0));
        assert_eq!((aligned.lhs, aligned.rhs, aligned.required_epsilon), (0.0, 2.0, 0.0));
        let extreme = singlet_reference(0.0, 0.0, std::f64::consts::PI);
        assert_eq!(extreme.e_ac, 1.0);
        assert!((extreme.lhs - 2.0).abs() < 1e-15);
        assert!(extreme.rhs.abs() < 1e-15);
        assert!((extreme.required_epsilon - 1.0).abs() < 1e-15);
        let near = singlet_reference(0.0, 1e-4, std::f64::consts::PI);
        assert!((near.required_epsilon - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singlet_grid_matches_analytic_maximum() {
        let grid = singlet_grid(1.0).unwrap();
        assert_eq!(grid.evaluated, 360 * 360);
        assert!((grid.best.required_epsilon - grid.analytic_max).abs() < 1e-12);
        assert!(singlet_grid(0.0).is_err());
    }
}
