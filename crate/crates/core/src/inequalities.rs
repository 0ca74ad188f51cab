//! Bell-type inequality checkers.
//!
//! Four bounds on `|<A,B> − <C,B>|` are evaluated:
//!
//! | id          | model         | hypotheses                              | right-hand side        |
//! |-------------|---------------|-----------------------------------------|------------------------|
//! | `T1`        | deterministic | one shared distribution                 | `1 − <A,C>`            |
//! | `T2`        | deterministic | pairwise `δ ≤ ε`                         | `1 + 2ε − <A,C>`       |
//! | `T3`        | stochastic    | shared distribution, `σ = 0`            | `1 − <A,C>` (diagonal) |
//! | `T4`        | stochastic    | pairwise `δ ≤ ε`, every `σ ≤ ε′`         | `1 + 2ε + Kε′ − <A,C>` |
//!
//! `T4` comes in two variants: `K = 4` ([`T4Variant::Proven`]) and the
//! tighter `K = 3` ([`T4Variant::Stated`]), which is only conjectured here and
//! is what the counterexample hunt in [`crate::search`] targets.
//!
//! `Classical` applies the uncorrected right-hand side `1 − <A,C>` to
//! ensembles that may not share a distribution; its violation is a finding,
//! not a bug.

use std::fmt;

use crate::distribution::Distribution;
use crate::covariation::{ensemble_covariation_det, ensemble_covariation_stoch, ideal_covariation};
use crate::error::{check_dim, Error, Result};
use crate::metrics::{delta, delta_triple, sigma};
use crate::model::{DetObservable, Spin, StochObservable, TripleDistribution};
use crate::scalar::{approx_ge, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    Classical,
    T1,
    T2,
    T3,
    T4Proven,
    T4Stated,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Classical => "classical",
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T3 => "T3",
            TheoremId::T4Proven => "T4-proven",
            TheoremId::T4Stated => "T4-stated",
        }
    }

    /// Whether a violation under satisfied hypotheses contradicts a proof.
    pub fn is_proven(self) -> bool {
        matches!(
            self,
            TheoremId::T1 | TheoremId::T2 | TheoremId::T3 | TheoremId::T4Proven
        )
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "classical" => TheoremId::Classical,
            "T1" => TheoremId::T1,
            "T2" => TheoremId::T2,
            "T3" => TheoremId::T3,
            "T4-proven" => TheoremId::T4Proven,
            "T4-stated" => TheoremId::T4Stated,
            other => return Err(Error::InvalidParameter(format!("unknown theorem id {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Holds,
    Violated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum T4Variant {
    /// `1 + 2ε + 4ε′ − <A,C>`.
    Proven,
    /// `1 + 2ε + 3ε′ − <A,C>`.
    Stated,
}

impl T4Variant {
    pub fn coefficient(self) -> i64 {
        match self {
            T4Variant::Proven => 4,
            T4Variant::Stated => 3,
        }
    }

    pub fn theorem(self) -> TheoremId {
        match self {
            T4Variant::Proven => TheoremId::T4Proven,
            T4Variant::Stated => TheoremId::T4Stated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport<T> {
    pub theorem: TheoremId,
    pub lhs: T,
    pub rhs: T,
    /// `rhs − lhs`.
    pub slack: T,
    pub epsilon: Option<T>,
    pub epsilon_prime: Option<T>,
    pub verdict: Verdict,
}

impl<T: Scalar> InequalityReport<T> {
    pub fn new(theorem: TheoremId, lhs: T, rhs: T, epsilon: Option<T>, epsilon_prime: Option<T>) -> Self {
        let slack = rhs.clone() - lhs.clone();
        let verdict = if approx_ge(&slack, &T::zero()) {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        Self {
            theorem,
            lhs,
            rhs,
            slack,
            epsilon,
            epsilon_prime,
            verdict,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// `lhs − rhs`, the amount by which the bound is exceeded.
    pub fn violation(&self) -> T {
        self.lhs.clone() - self.rhs.clone()
    }

    /// Same numbers, ignoring which theorem produced them.
    pub fn same_values(&self, other: &Self) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs && self.slack == other.slack
    }
}

fn two<T: Scalar>() -> T {
    T::from_int(2)
}

/// Three ensembles over one hidden space together with the observables
/// measured on them: `A,B` on `ab`, `C,B` on `cb`, `A,C` on `ac`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellInstanceDet<T> {
    pub ab: Distribution<T>,
    pub cb: Distribution<T>,
    pub ac: Distribution<T>,
    pub a: DetObservable,
    pub b: DetObservable,
    pub c: DetObservable,
}

impl<T: Scalar> BellInstanceDet<T> {
    pub fn new(
        ab: Distribution<T>,
        cb: Distribution<T>,
        ac: Distribution<T>,
        a: DetObservable,
        b: DetObservable,
        c: DetObservable,
    ) -> Result<Self> {
        let m = ab.dim();
        check_dim("distribution CB", m, cb.dim())?;
        check_dim("distribution AC", m, ac.dim())?;
        check_dim("observable A", m, a.hidden_size())?;
        check_dim("observable B", m, b.hidden_size())?;
        check_dim("observable C", m, c.hidden_size())?;
        Ok(Self { ab, cb, ac, a, b, c })
    }

    /// The instance where every pair is measured on the same distribution.
    pub fn shared(p: Distribution<T>, a: DetObservable, b: DetObservable, c: DetObservable) -> Result<Self> {
        Self::new(p.clone(), p.clone(), p, a, b, c)
    }

    pub fn hidden_size(&self) -> usize {
        self.ab.dim()
    }

    pub fn cov_ab(&self) -> T {
        ensemble_covariation_det(&self.ab, &self.a, &self.b).expect("validated")
    }

    pub fn cov_cb(&self) -> T {
        ensemble_covariation_det(&self.cb, &self.c, &self.b).expect("validated")
    }

    pub fn cov_ac(&self) -> T {
        ensemble_covariation_det(&self.ac, &self.a, &self.c).expect("validated")
    }

    pub fn delta_ab_cb(&self) -> T {
        delta(&self.ab, &self.cb).expect("validated")
    }

    pub fn delta_ab_ac(&self) -> T {
        delta(&self.ab, &self.ac).expect("validated")
    }

    /// The smallest `ε` satisfying the `T2` hypotheses.
    pub fn observed_epsilon(&self) -> T {
        T::max_of(self.delta_ab_cb(), self.delta_ab_ac())
    }

    fn lhs(&self) -> T {
        (self.cov_ab() - self.cov_cb()).abs()
    }

    pub fn to_f64(&self) -> BellInstanceDet<f64> {
        BellInstanceDet {
            ab: self.ab.to_f64(),
            cb: self.cb.to_f64(),
            ac: self.ac.to_f64(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }
}

/// `|<A,B> − <C,B>|` against `1 − <A,C>` on a single distribution.
pub fn check_theorem1<T: Scalar>(
    p: &Distribution<T>,
    a: &DetObservable,
    b: &DetObservable,
    c: &DetObservable,
) -> Result<InequalityReport<T>> {
    let lhs = (ensemble_covariation_det(p, a, b)? - ensemble_covariation_det(p, c, b)?).abs();
    let rhs = T::one() - ensemble_covariation_det(p, a, c)?;
    Ok(InequalityReport::new(TheoremId::T1, lhs, rhs, None, None))
}

/// Intermediate quantities of the classical derivation, each computed
/// directly so the chain of (in)equalities between them can be asserted.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofChain<T> {
    /// `<A,B> − <C,B>`.
    pub difference: T,
    /// `Σ p_k (a_k − c_k) b_k`.
    pub linear_form: T,
    /// `|Σ p_k (1 − a_k c_k) a_k b_k|`.
    pub squared_form: T,
    /// `Σ p_k (1 − a_k c_k)`.
    pub bound: T,
    /// `1 − <A,C>`.
    pub rhs: T,
}

impl<T: Scalar> ProofChain<T> {
    /// `difference = linear_form`, `|linear_form| = squared_form ≤ bound = rhs`
    /// within the backend tolerance.
    pub fn is_consistent(&self) -> bool {
        use crate::scalar::approx_eq;
        approx_eq(&self.difference, &self.linear_form)
            && approx_eq(&self.linear_form.abs(), &self.squared_form)
            && approx_ge(&self.bound, &self.squared_form)
            && approx_eq(&self.bound, &self.rhs)
    }
}

pub fn theorem1_proof_chain<T: Scalar>(
    p: &Distribution<T>,
    a: &DetObservable,
    b: &DetObservable,
    c: &DetObservable,
) -> Result<ProofChain<T>> {
    let difference = ensemble_covariation_det(p, a, b)? - ensemble_covariation_det(p, c, b)?;
    let mut linear_form = T::zero();
    let mut squared_form = T::zero();
    let mut bound = T::zero();
    for (k, w) in p.weights().iter().enumerate() {
        let (ak, bk, ck) = (a.at(k).value(), b.at(k).value(), c.at(k).value());
        linear_form = linear_form + w.clone() * T::from_int((ak - ck) * bk);
        squared_form = squared_form + w.clone() * T::from_int((1 - ak * ck) * ak * bk);
        bound = bound + w.clone() * T::from_int(1 - ak * ck);
    }
    Ok(ProofChain {
        difference,
        linear_form,
        squared_form: squared_form.abs(),
        bound,
        rhs: T::one() - ensemble_covariation_det(p, a, c)?,
    })
}

fn budget_check<T: Scalar>(quantity: &str, observed: &T, budget: &T) -> Result<()> {
    if approx_ge(budget, observed) {
        Ok(())
    } else {
        Err(Error::BudgetViolation {
            quantity: quantity.to_string(),
            observed: observed.to_f64(),
            budget: budget.to_f64(),
        })
    }
}

fn nonnegative_budget<T: Scalar>(name: &str, value: &T) -> Result<()> {
    if value.is_negative() {
        Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {value}")))
    } else {
        Ok(())
    }
}

/// The uncorrected comparison on three possibly different ensembles.
pub fn classical_det<T: Scalar>(inst: &BellInstanceDet<T>) -> InequalityReport<T> {
    InequalityReport::new(TheoremId::Classical, inst.lhs(), T::one() - inst.cov_ac(), None, None)
}

/// `|<A,B>_AB − <C,B>_CB| ≤ (1 + 2ε) − <A,C>_AC` given
/// `δ(AB,CB), δ(AB,AC) ≤ ε`.
pub fn check_theorem2<T: Scalar>(inst: &BellInstanceDet<T>, epsilon: &T) -> Result<InequalityReport<T>> {
    nonnegative_budget("epsilon", epsilon)?;
    budget_check("delta(AB,CB)", &inst.delta_ab_cb(), epsilon)?;
    budget_check("delta(AB,AC)", &inst.delta_ab_ac(), epsilon)?;
    let rhs = T::one() + two::<T>() * epsilon.clone() - inst.cov_ac();
    Ok(InequalityReport::new(TheoremId::T2, inst.lhs(), rhs, Some(epsilon.clone()), None))
}

/// Stochastic-model instance: triple-indexed distributions over a shared
/// device state set.
#[derive(Debug, Clone, PartialEq)]
pub struct BellInstanceStoch<T> {
    pub ab: TripleDistribution<T>,
    pub cb: TripleDistribution<T>,
    pub ac: TripleDistribution<T>,
    pub a: StochObservable,
    pub b: StochObservable,
    pub c: StochObservable,
}

impl<T: Scalar> BellInstanceStoch<T> {
    pub fn new(
        ab: TripleDistribution<T>,
        cb: TripleDistribution<T>,
        ac: TripleDistribution<T>,
        a: StochObservable,
        b: StochObservable,
        c: StochObservable,
    ) -> Result<Self> {
        let shape = ab.shape();
        if !shape.is_square() {
            return Err(Error::DeviceSpaceMismatch {
                left: shape.states_u,
                right: shape.states_v,
            });
        }
        for other in [cb.shape(), ac.shape()] {
            if other != shape {
                return Err(Error::DimensionMismatch {
                    context: "triple distribution shape",
                    expected: shape.len(),
                    found: other.len(),
                });
            }
        }
        for (name, o) in [("A", &a), ("B", &b), ("C", &c)] {
            if o.hidden_size() != shape.hidden || o.states() != shape.states_u {
                return Err(Error::InvalidObservable(format!(
                    "observable {name} is {}x{}, expected {}x{} (states x hidden)",
                    o.states(),
                    o.hidden_size(),
                    shape.states_u,
                    shape.hidden
                )));
            }
        }
        Ok(Self { ab, cb, ac, a, b, c })
    }

    /// Embeds a deterministic instance with a single device state.
    pub fn from_det(inst: &BellInstanceDet<T>) -> Self {
        Self {
            ab: TripleDistribution::from_hidden(&inst.ab),
            cb: TripleDistribution::from_hidden(&inst.cb),
            ac: TripleDistribution::from_hidden(&inst.ac),
            a: inst.a.lift(1).expect("non-empty"),
            b: inst.b.lift(1).expect("non-empty"),
            c: inst.c.lift(1).expect("non-empty"),
        }
    }

    pub fn cov_ab(&self) -> T {
        ensemble_covariation_stoch(&self.ab, &self.a, &self.b).expect("validated")
    }

    pub fn cov_cb(&self) -> T {
        ensemble_covariation_stoch(&self.cb, &self.c, &self.b).expect("validated")
    }

    pub fn cov_ac(&self) -> T {
        ensemble_covariation_stoch(&self.ac, &self.a, &self.c).expect("validated")
    }

    pub fn delta_ab_cb(&self) -> T {
        delta_triple(&self.ab, &self.cb).expect("validated")
    }

    pub fn delta_ab_ac(&self) -> T {
        delta_triple(&self.ab, &self.ac).expect("validated")
    }

    /// `(σ_AB, σ_CB, σ_AC)`.
    pub fn sigmas(&self) -> [T; 3] {
        [&self.ab, &self.cb, &self.ac].map(|p| sigma(p).expect("square shape"))
    }

    pub fn observed_epsilon(&self) -> T {
        T::max_of(self.delta_ab_cb(), self.delta_ab_ac())
    }

    pub fn observed_epsilon_prime(&self) -> T {
        let [x, y, z] = self.sigmas();
        T::max_of(T::max_of(x, y), z)
    }

    fn lhs(&self) -> T {
        (self.cov_ab() - self.cov_cb()).abs()
    }

    pub fn to_f64(&self) -> BellInstanceStoch<f64> {
        BellInstanceStoch {
            ab: self.ab.to_f64(),
            cb: self.cb.to_f64(),
            ac: self.ac.to_f64(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }
}

pub fn classical_stoch<T: Scalar>(inst: &BellInstanceStoch<T>) -> InequalityReport<T> {
    InequalityReport::new(TheoremId::Classical, inst.lhs(), T::one() - inst.cov_ac(), None, None)
}

/// Classical bound on the diagonal ("ideal") covariations, valid when the
/// three ensembles coincide and both devices always share their state.
pub fn check_theorem3<T: Scalar>(inst: &BellInstanceStoch<T>) -> Result<InequalityReport<T>> {
    let zero = T::zero();
    for (name, d) in [("CB", inst.delta_ab_cb()), ("AC", inst.delta_ab_ac())] {
        if !approx_ge(&zero, &d) {
            return Err(Error::PreconditionFailed(format!(
                "ensemble distributions differ: delta(AB,{name}) = {d}"
            )));
        }
    }
    for (name, s) in ["AB", "CB", "AC"].into_iter().zip(inst.sigmas()) {
        if !approx_ge(&zero, &s) {
            return Err(Error::PreconditionFailed(format!(
                "device states inconsistent: sigma({name}) = {s}"
            )));
        }
    }
    let cov_ab = ideal_covariation(&inst.ab, &inst.a, &inst.b)?;
    let cov_cb = ideal_covariation(&inst.cb, &inst.c, &inst.b)?;
    let cov_ac = ideal_covariation(&inst.ac, &inst.a, &inst.c)?;
    Ok(InequalityReport::new(
        TheoremId::T3,
        (cov_ab - cov_cb).abs(),
        T::one() - cov_ac,
        None,
        None,
    ))
}

/// `|<A,B>_AB − <C,B>_CB| ≤ (1 + 2ε + Kε′) − <A,C>_AC` given
/// `δ(AB,CB), δ(AB,AC) ≤ ε` and `σ_AB, σ_CB, σ_AC ≤ ε′`.
pub fn check_theorem4<T: Scalar>(
    inst: &BellInstanceStoch<T>,
    epsilon: &T,
    epsilon_prime: &T,
    variant: T4Variant,
) -> Result<InequalityReport<T>> {
    nonnegative_budget("epsilon", epsilon)?;
    nonnegative_budget("epsilon_prime", epsilon_prime)?;
    budget_check("delta(AB,CB)", &inst.delta_ab_cb(), epsilon)?;
    budget_check("delta(AB,AC)", &inst.delta_ab_ac(), epsilon)?;
    for (name, s) in ["sigma(AB)", "sigma(CB)", "sigma(AC)"].into_iter().zip(inst.sigmas()) {
        budget_check(name, &s, epsilon_prime)?;
    }
    let rhs = T::one()
        + two::<T>() * epsilon.clone()
        + T::from_int(variant.coefficient()) * epsilon_prime.clone()
        - inst.cov_ac();
    Ok(InequalityReport::new(
        variant.theorem(),
        inst.lhs(),
        rhs,
        Some(epsilon.clone()),
        Some(epsilon_prime.clone()),
    ))
}

/// Either kind of instance.
#[derive(Debug, Clone, PartialEq)]
pub enum BellInstance<T> {
    Det(BellInstanceDet<T>),
    Stoch(BellInstanceStoch<T>),
}

impl<T: Scalar> BellInstance<T> {
    pub fn hidden_size(&self) -> usize {
        match self {
            BellInstance::Det(i) => i.hidden_size(),
            BellInstance::Stoch(i) => i.ab.shape().hidden,
        }
    }

    pub fn classical(&self) -> InequalityReport<T> {
        match self {
            BellInstance::Det(i) => classical_det(i),
            BellInstance::Stoch(i) => classical_stoch(i),
        }
    }

    /// `(δ(AB,CB), δ(AB,AC))`.
    pub fn deltas(&self) -> [T; 2] {
        match self {
            BellInstance::Det(i) => [i.delta_ab_cb(), i.delta_ab_ac()],
            BellInstance::Stoch(i) => [i.delta_ab_cb(), i.delta_ab_ac()],
        }
    }

    pub fn sigmas(&self) -> Option<[T; 3]> {
        match self {
            BellInstance::Det(_) => None,
            BellInstance::Stoch(i) => Some(i.sigmas()),
        }
    }

    pub fn observed_epsilon(&self) -> T {
        let [x, y] = self.deltas();
        T::max_of(x, y)
    }

    /// Largest `σ`; zero for deterministic instances.
    pub fn observed_epsilon_prime(&self) -> T {
        match self {
            BellInstance::Det(_) => T::zero(),
            BellInstance::Stoch(i) => i.observed_epsilon_prime(),
        }
    }

    pub fn to_f64(&self) -> BellInstance<f64> {
        match self {
            BellInstance::Det(i) => BellInstance::Det(i.to_f64()),
            BellInstance::Stoch(i) => BellInstance::Stoch(i.to_f64()),
        }
    }
}

/// The eight joint outcomes `(ε₁, ε₂, ε₃)` in index order: index bit 2 is
/// `A`, bit 1 is `B`, bit 0 is `C`, with a set bit meaning `−1`.
pub fn joint_outcome(index: usize) -> [Spin; 3] {
    [
        Spin::from_bool(index & 4 == 0),
        Spin::from_bool(index & 2 == 0),
        Spin::from_bool(index & 1 == 0),
    ]
}

/// `A`, `B`, `C` as observables on the eight joint outcomes, so that a joint
/// distribution can be fed to [`check_theorem1`].
pub fn joint_observables() -> [DetObservable; 3] {
    [0, 1, 2].map(|j| {
        DetObservable::new((0..8).map(|o| joint_outcome(o)[j]).collect()).expect("eight outcomes")
    })
}

/// `P(U = +1) = Σ_k ρ_k P(U = +1 | λ_k)`.
pub fn mixture_marginal<T: Scalar>(rho: &Distribution<T>, cond: &[T]) -> Result<T> {
    check_dim("conditional probabilities", rho.dim(), cond.len())?;
    Ok(rho
        .weights()
        .iter()
        .zip(cond)
        .fold(T::zero(), |acc, (r, c)| acc + r.clone() * c.clone()))
}

/// `P(U = +1)` read off a joint distribution for observable `which ∈ {0,1,2}`.
pub fn joint_marginal<T: Scalar>(joint: &Distribution<T>, which: usize) -> Result<T> {
    check_dim("joint distribution", 8, joint.dim())?;
    if which > 2 {
        return Err(Error::InvalidParameter(format!("observable index {which} not in 0..3")));
    }
    Ok((0..8)
        .filter(|&o| joint_outcome(o)[which] == Spin::Up)
        .fold(T::zero(), |acc, o| acc + joint.get(o).clone()))
}

/// Joint distribution of three dichotomic observables in a local stochastic
/// model: `P(ε₁,ε₂,ε₃) = Σ_k ρ_k q_A(ε₁|k) q_B(ε₂|k) q_C(ε₃|k)` where
/// `cond_x[k] = P(X = +1 | λ_k)`.
pub fn joint_distribution_kolmogorov<T: Scalar>(
    rho: &Distribution<T>,
    cond_a: &[T],
    cond_b: &[T],
    cond_c: &[T],
) -> Result<Distribution<T>> {
    let m = rho.dim();
    for (name, cond) in [("A", cond_a), ("B", cond_b), ("C", cond_c)] {
        check_dim("conditional probabilities", m, cond.len())?;
        if let Some((k, bad)) = cond
            .iter()
            .enumerate()
            .find(|(_, x)| x.is_negative() || **x > T::one())
        {
            return Err(Error::InvalidParameter(format!(
                "P({name}=+1 | λ{}) = {bad} outside [0, 1]",
                k + 1
            )));
        }
    }
    let conditional = |cond: &T, spin: Spin| match spin {
        Spin::Up => cond.clone(),
        Spin::Down => T::one() - cond.clone(),
    };
    let weights = (0..8)
        .map(|o| {
            let [ea, eb, ec] = joint_outcome(o);
            (0..m).fold(T::zero(), |acc, k| {
                acc + rho.get(k).clone()
                    * conditional(&cond_a[k], ea)
                    * conditional(&cond_b[k], eb)
                    * conditional(&cond_c[k], ec)
            })
        })
        .collect();
    Distribution::new(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TripleShape;
    use crate::scalar::Rational;

    fn obs(v: &[i64]) -> DetObservable {
        DetObservable::from_ints(v).unwrap()
    }

    fn r(n: i64, d: u64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn theorem1_identity_case() {
        let p = Distribution::new(vec![r(1, 3), r(2, 3)]).unwrap();
        let a = obs(&[1, -1]);
        let rep = check_theorem1(&p, &a, &a, &a).unwrap();
        assert_eq!(rep.lhs, r(0, 1));
        assert_eq!(rep.rhs, r(0, 1));
        assert_eq!(rep.slack, r(0, 1));
        assert!(rep.holds());
    }

    #[test]
    fn theorem1_saturating_case() {
        let p = Distribution::new(vec![r(1, 2), r(1, 2)]).unwrap();
        let a = obs(&[1, -1]);
        let rep = check_theorem1(&p, &a, &a, &a.negated()).unwrap();
        assert_eq!(rep.lhs, Rational::from_int(2));
        assert_eq!(rep.rhs, Rational::from_int(2));
        assert!(rep.holds());
        let chain = theorem1_proof_chain(&p, &a, &a, &a.negated()).unwrap();
        assert!(chain.is_consistent());
    }

    #[test]
    fn theorem1_dimension_mismatch() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert!(check_theorem1(&p, &obs(&[1]), &obs(&[1, 1]), &obs(&[1, 1])).is_err());
    }

    #[test]
    fn theorem2_hand_example() {
        let inst = BellInstanceDet::new(
            Distribution::new(vec![1.0, 0.0]).unwrap(),
            Distribution::new(vec![0.0, 1.0]).unwrap(),
            Distribution::new(vec![1.0, 0.0]).unwrap(),
            obs(&[1, -1]),
            obs(&[1, -1]),
            obs(&[1, 1]),
        )
        .unwrap();
        let classical = classical_det(&inst);
        assert_eq!(classical.lhs, 2.0);
        assert_eq!(classical.rhs, 0.0);
        assert!(!classical.holds());
        let rep = check_theorem2(&inst, &2.0).unwrap();
        assert_eq!(rep.lhs, 2.0);
        assert_eq!(rep.rhs, 4.0);
        assert!(rep.holds());
        assert!(matches!(
            check_theorem2(&inst, &1.5),
            Err(Error::BudgetViolation { .. })
        ));
        assert!(check_theorem2(&inst, &-1.0).is_err());
    }

    #[test]
    fn theorem2_at_zero_budget_is_theorem1() {
        let p = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let (a, b, c) = (obs(&[1, -1, 1]), obs(&[-1, -1, 1]), obs(&[1, 1, -1]));
        let t1 = check_theorem1(&p, &a, &b, &c).unwrap();
        let inst = BellInstanceDet::shared(p, a, b, c).unwrap();
        let t2 = check_theorem2(&inst, &0.0).unwrap();
        assert!(t1.same_values(&t2));
        assert_eq!(t1.lhs.to_bits(), t2.lhs.to_bits());
        assert_eq!(t1.rhs.to_bits(), t2.rhs.to_bits());
    }

    fn lifted_saturating() -> BellInstanceStoch<Rational> {
        // diagonal uniform p over (k, s, s), b = a, c = -a
        let shape = TripleShape::square(2, 2);
        let mut w = vec![r(0, 1); shape.len()];
        for k in 0..2 {
            for s in 0..2 {
                w[shape.index(k, s, s)] = r(1, 4);
            }
        }
        let p = TripleDistribution::new(shape, Distribution::new(w).unwrap()).unwrap();
        let a = StochObservable::from_rows(&[vec![1, -1], vec![-1, 1]]).unwrap();
        BellInstanceStoch::new(p.clone(), p.clone(), p, a.clone(), a.clone(), a.negated()).unwrap()
    }

    #[test]
    fn theorem3_equality_case() {
        let inst = lifted_saturating();
        let rep = check_theorem3(&inst).unwrap();
        assert_eq!(rep.lhs, rep.rhs);
        assert_eq!(rep.lhs, Rational::from_int(2));
    }

    #[test]
    fn theorem3_single_state_matches_theorem1() {
        let p = Distribution::new(vec![r(1, 5), r(4, 5)]).unwrap();
        let (a, b, c) = (obs(&[1, -1]), obs(&[1, 1]), obs(&[-1, 1]));
        let t1 = check_theorem1(&p, &a, &b, &c).unwrap();
        let det = BellInstanceDet::shared(p, a, b, c).unwrap();
        let t3 = check_theorem3(&BellInstanceStoch::from_det(&det)).unwrap();
        assert!(t1.same_values(&t3));
    }

    #[test]
    fn theorem3_preconditions() {
        let base = lifted_saturating();
        let shape = base.ab.shape();
        let off = TripleDistribution::<Rational>::point_mass(shape, 0, 0, 1).unwrap();
        let inst = BellInstanceStoch::new(
            off.clone(),
            off.clone(),
            off,
            base.a.clone(),
            base.b.clone(),
            base.c.clone(),
        )
        .unwrap();
        assert!(matches!(check_theorem3(&inst), Err(Error::PreconditionFailed(_))));
        let other = TripleDistribution::point_mass(shape, 1, 1, 1).unwrap();
        let inst = BellInstanceStoch {
            cb: other,
            ..base
        };
        assert!(matches!(check_theorem3(&inst), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn theorem4_zero_budget_is_theorem3() {
        let inst = lifted_saturating();
        let t3 = check_theorem3(&inst).unwrap();
        let zero = r(0, 1);
        for variant in [T4Variant::Proven, T4Variant::Stated] {
            let t4 = check_theorem4(&inst, &zero, &zero, variant).unwrap();
            assert!(t3.same_values(&t4));
        }
    }

    #[test]
    fn theorem4_budget_errors() {
        let base = lifted_saturating();
        let shape = base.ab.shape();
        let off = TripleDistribution::<Rational>::point_mass(shape, 0, 0, 1).unwrap();
        let inst = BellInstanceStoch {
            ab: off.clone(),
            cb: off.clone(),
            ac: off,
            ..base
        };
        let half = r(1, 2);
        assert!(matches!(
            check_theorem4(&inst, &r(0, 1), &half, T4Variant::Proven),
            Err(Error::BudgetViolation { .. })
        ));
        let rep = check_theorem4(&inst, &r(0, 1), &r(1, 1), T4Variant::Proven).unwrap();
        assert_eq!(rep.epsilon_prime, Some(r(1, 1)));
    }

    #[test]
    fn stochastic_instance_requires_shared_state_set() {
        let shape = TripleShape::new(1, 1, 2);
        let p = TripleDistribution::<f64>::point_mass(shape, 0, 0, 0).unwrap();
        let a = StochObservable::from_rows(&[vec![1]]).unwrap();
        assert!(matches!(
            BellInstanceStoch::new(p.clone(), p.clone(), p, a.clone(), a.clone(), a),
            Err(Error::DeviceSpaceMismatch { .. })
        ));
    }

    #[test]
    fn joint_distribution_degenerate_conditionals() {
        // deterministic conditionals recover the deterministic model
        let rho = Distribution::new(vec![r(1, 4), r(3, 4)]).unwrap();
        let (a, b, c) = (obs(&[1, -1]), obs(&[-1, -1]), obs(&[1, 1]));
        let cond = |o: &DetObservable| -> Vec<Rational> {
            o.values().iter().map(|s| Rational::from_int(i64::from(*s == Spin::Up))).collect()
        };
        let joint = joint_distribution_kolmogorov(&rho, &cond(&a), &cond(&b), &cond(&c)).unwrap();
        assert_eq!(joint.support().count(), 2);
        let [ja, jb, jc] = joint_observables();
        assert_eq!(
            ensemble_covariation_det(&joint, &ja, &jb).unwrap(),
            ensemble_covariation_det(&rho, &a, &b).unwrap()
        );
        assert_eq!(
            ensemble_covariation_det(&joint, &ja, &jc).unwrap(),
            ensemble_covariation_det(&rho, &a, &c).unwrap()
        );
    }

    #[test]
    fn joint_distribution_independent_fair_coins() {
        let rho = Distribution::new(vec![r(1, 1)]).unwrap();
        let half = vec![r(1, 2)];
        let joint = joint_distribution_kolmogorov(&rho, &half, &half, &half).unwrap();
        assert!(joint.weights().iter().all(|w| *w == r(1, 8)));
        let [ja, jb, jc] = joint_observables();
        for (x, y) in [(&ja, &jb), (&jc, &jb), (&ja, &jc)] {
            assert_eq!(ensemble_covariation_det(&joint, x, y).unwrap(), r(0, 1));
        }
        assert_eq!(joint_marginal(&joint, 0).unwrap(), r(1, 2));
    }

    #[test]
    fn joint_distribution_rejects_bad_conditionals() {
        let rho = Distribution::new(vec![1.0]).unwrap();
        assert!(joint_distribution_kolmogorov(&rho, &[1.5], &[0.5], &[0.5]).is_err());
        assert!(joint_distribution_kolmogorov(&rho, &[0.5, 0.5], &[0.5], &[0.5]).is_err());
    }
}
