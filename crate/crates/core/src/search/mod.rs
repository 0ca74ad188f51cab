//! Worst-case search for classical-inequality violations within deviation
//! budgets, and a counterexample hunt against the corrected bounds.
//!
//! The objective `|<A,B>_AB − <C,B>_CB| − (1 − <A,C>_AC)` is bilinear: linear
//! in each distribution for fixed observables. For a fixed observable triple
//! the distribution block is solved exactly, either in closed form (a shift of
//! at most `ε/2` mass from the lowest-weight indices onto the best index, when
//! `pAB` is pinned) or as a small linear program. Observables are enumerated
//! exhaustively when `3·L·M` is small and hill-climbed from random restarts
//! otherwise.
//!
//! Results are re-evaluated through [`crate::inequalities`]; tightness
//! statements are empirical at the dimensions tested.

mod lp;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::inequalities::{
    check_theorem1, check_theorem2, check_theorem4, BellInstance, BellInstanceDet, BellInstanceStoch,
    InequalityReport, T4Variant, TheoremId,
};
use crate::model::{DetObservable, Observable, Spin, StochObservable, TripleDistribution, TripleShape};
use crate::rng::{self, StreamRng};
use crate::scalar::{Rational, Scalar};

use lp::{LinearProgram, LpOutcome, Relation};

pub const DEFAULT_ENUMERATION_BITS: usize = 16;
const MAX_CODE_BITS: usize = 63;
const IMPROVEMENT: f64 = 1e-12;
const RECHECK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    /// Exhaustive over observables; exact distribution block.
    VertexEnumeration,
    /// Exhaustive over observables; distribution block by projected gradient
    /// ascent. Deterministic mode with a pinned `pAB` only.
    ProjectedAscent,
    /// Single-flip hill climbing over observables from random starts.
    RandomRestart,
}

impl SearchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMethod::VertexEnumeration => "vertex-enumeration",
            SearchMethod::ProjectedAscent => "projected-ascent",
            SearchMethod::RandomRestart => "random-restart",
        }
    }
}

impl std::str::FromStr for SearchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertex-enumeration" => Ok(SearchMethod::VertexEnumeration),
            "projected-ascent" => Ok(SearchMethod::ProjectedAscent),
            "random-restart" => Ok(SearchMethod::RandomRestart),
            other => Err(Error::InvalidParameter(format!("unknown search method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchProblem {
    pub mode: SearchMode,
    pub hidden: usize,
    /// Device states; `1` in deterministic mode.
    pub states: usize,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub method: SearchMethod,
    /// Pins `pAB`: a distribution over hidden values (deterministic) or over
    /// flattened `(k,s,q)` triples (stochastic).
    pub anchor: Option<Distribution<f64>>,
    /// Starting observables `[A, B, C]`.
    pub observables: Option<[Observable; 3]>,
    /// Optimize distributions only, keeping `observables` fixed.
    pub fix_observables: bool,
    pub restarts: usize,
    pub max_enumeration_bits: usize,
}

impl SearchProblem {
    pub fn deterministic(hidden: usize, epsilon: f64) -> Self {
        Self {
            mode: SearchMode::Deterministic,
            hidden,
            states: 1,
            epsilon,
            epsilon_prime: 0.0,
            method: SearchMethod::VertexEnumeration,
            anchor: None,
            observables: None,
            fix_observables: false,
            restarts: 16,
            max_enumeration_bits: DEFAULT_ENUMERATION_BITS,
        }
    }

    pub fn stochastic(hidden: usize, states: usize, epsilon: f64, epsilon_prime: f64) -> Self {
        Self {
            mode: SearchMode::Stochastic,
            states,
            epsilon_prime,
            ..Self::deterministic(hidden, epsilon)
        }
    }

    pub fn with_method(mut self, method: SearchMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_anchor(mut self, anchor: Distribution<f64>) -> Self {
        self.anchor = Some(anchor);
        self
    }

    pub fn with_observables(mut self, observables: [Observable; 3], fixed: bool) -> Self {
        self.observables = Some(observables);
        self.fix_observables = fixed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn cells(&self) -> usize {
        self.hidden * self.states
    }

    /// Number of free `±1` entries across the three observables.
    pub fn observable_bits(&self) -> usize {
        3 * self.cells()
    }

    fn triple_len(&self) -> usize {
        self.hidden * self.states * self.states
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.states == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        if self.mode == SearchMode::Deterministic && self.states != 1 {
            return Err(Error::InvalidParameter("deterministic search has a single device state".into()));
        }
        for (name, b) in [("epsilon", self.epsilon), ("epsilon_prime", self.epsilon_prime)] {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {b}")));
            }
        }
        if self.observable_bits() > MAX_CODE_BITS {
            return Err(Error::DimensionCap(format!(
                "{} observable entries exceed the limit of {MAX_CODE_BITS}",
                self.observable_bits()
            )));
        }
        let exhaustive = !self.fix_observables && self.method != SearchMethod::RandomRestart;
        if exhaustive && self.observable_bits() > self.max_enumeration_bits {
            return Err(Error::DimensionCap(format!(
                "enumerating {} observable entries exceeds the cap of {}",
                self.observable_bits(),
                self.max_enumeration_bits
            )));
        }
        if self.method == SearchMethod::RandomRestart && !self.fix_observables && self.restarts == 0 {
            return Err(Error::InvalidParameter("random restart needs at least one restart".into()));
        }
        if self.method == SearchMethod::ProjectedAscent
            && (self.mode != SearchMode::Deterministic || self.anchor.is_none())
        {
            return Err(Error::Unsupported(
                "projected ascent needs deterministic mode with a pinned AB distribution".into(),
            ));
        }
        if let Some(anchor) = &self.anchor {
            if anchor.dim() != self.triple_len() {
                return Err(Error::DimensionMismatch {
                    context: "search anchor",
                    expected: self.triple_len(),
                    found: anchor.dim(),
                });
            }
        }
        if self.fix_observables && self.observables.is_none() {
            return Err(Error::InvalidParameter("fixed observables were not given".into()));
        }
        if let Some(obs) = &self.observables {
            encode(self, obs)?;
        }
        Ok(())
    }
}

/// Observables packed into bits: entry `(s,k)` of observable `j ∈ {A,B,C}`
/// is bit `j·L·M + s·M + k`, set for `−1`.
fn encode(problem: &SearchProblem, obs: &[Observable; 3]) -> Result<u64> {
    let cells = problem.cells();
    let mut code = 0u64;
    for (j, o) in obs.iter().enumerate() {
        let values: Vec<Spin> = match (problem.mode, o) {
            (SearchMode::Deterministic, Observable::Det(d)) if d.hidden_size() == problem.hidden => d.values().to_vec(),
            (SearchMode::Stochastic, Observable::Stoch(s))
                if s.hidden_size() == problem.hidden && s.states() == problem.states =>
            {
                s.values().to_vec()
            }
            _ => {
                return Err(Error::InvalidObservable(format!(
                    "observable {} does not match the search dimensions",
                    ["A", "B", "C"][j]
                )))
            }
        };
        for (cell, v) in values.iter().enumerate() {
            if *v == Spin::Down {
                code |= 1 << (j * cells + cell);
            }
        }
    }
    Ok(code)
}

fn decode(problem: &SearchProblem, code: u64) -> [Observable; 3] {
    let cells = problem.cells();
    [0, 1, 2].map(|j| {
        let values: Vec<Spin> = (0..cells)
            .map(|cell| Spin::from_bool((code >> (j * cells + cell)) & 1 == 0))
            .collect();
        match problem.mode {
            SearchMode::Deterministic => Observable::Det(DetObservable::new(values).expect("non-empty")),
            SearchMode::Stochastic => Observable::Stoch(
                StochObservable::new(problem.states, problem.hidden, values).expect("shape matches"),
            ),
        }
    })
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    ab: Vec<f64>,
    cb: Vec<f64>,
    ac: Vec<f64>,
}

struct Evaluator<'a> {
    problem: &'a SearchProblem,
    shape: TripleShape,
    off_diagonal: Vec<usize>,
}

/// Maximizes `w·q` over `{q on the simplex : ‖q − p‖₁ ≤ ε}` by moving up to
/// `ε/2` mass onto the first maximal index, taken from the lowest-weight
/// indices first.
fn best_shift(p: &[f64], w: &[f64], epsilon: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    let target = (0..w.len()).fold(0, |best, j| if w[j] > w[best] { j } else { best });
    let mut donors: Vec<usize> = (0..w.len()).filter(|&j| w[j] < w[target]).collect();
    donors.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let mut budget = epsilon / 2.0;
    for j in donors {
        if budget <= 0.0 {
            break;
        }
        let moved = q[j].min(budget);
        q[j] -= moved;
        q[target] += moved;
        budget -= moved;
    }
    q
}

/// Euclidean projection onto `{q ≥ 0, Σq = 1, ‖q − p‖₁ ≤ ε}` via the KKT form
/// `q_j = max(0, p_j + soft(y_j − μ − p_j, λ))`, bisecting `μ` inside `λ`.
fn project_ball_simplex(y: &[f64], p: &[f64], epsilon: f64) -> Vec<f64> {
    let soft = |x: f64, l: f64| x.signum() * (x.abs() - l).max(0.0);
    let at = |mu: f64, lambda: f64| -> Vec<f64> {
        y.iter()
            .zip(p)
            .map(|(&yj, &pj)| (pj + soft(yj - mu - pj, lambda)).max(0.0))
            .collect()
    };
    // Σq is continuous, piecewise linear and nonincreasing in μ; locate the
    // piece where it crosses 1 among the breakpoints and interpolate.
    let solve_mu = |lambda: f64| -> Vec<f64> {
        let total = |mu: f64| at(mu, lambda).iter().sum::<f64>();
        let mut points: Vec<f64> = y
            .iter()
            .zip(p)
            .flat_map(|(&yj, &pj)| [yj - pj - lambda, yj - pj + lambda, yj - lambda, yj + lambda])
            .collect();
        points.sort_by(f64::total_cmp);
        let (first, last) = (points[0], points[points.len() - 1]);
        points.insert(0, first - 2.0);
        points.push(last + 1.0);
        let values: Vec<f64> = points.iter().map(|&mu| total(mu)).collect();
        let i = (0..points.len() - 1)
            .find(|&i| values[i + 1] <= 1.0)
            .expect("total reaches zero at the last point");
        let (f0, f1) = (values[i], values[i + 1]);
        let mu = if f0 - f1 > 0.0 {
            points[i] + (f0 - 1.0) / (f0 - f1) * (points[i + 1] - points[i])
        } else {
            points[i + 1]
        };
        at(mu, lambda)
    };
    let dist = |q: &[f64]| q.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let free = solve_mu(0.0);
    if dist(&free) <= epsilon {
        return free;
    }
    let mut hi = 1.0;
    while dist(&solve_mu(hi)) > epsilon {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dist(&solve_mu(mid)) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    solve_mu(hi)
}

fn projected_ascent(p: &[f64], w: &[f64], epsilon: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    for t in 0..40 {
        let eta = f64::from(1u32 << t.min(10));
        let y: Vec<f64> = q.iter().zip(w).map(|(a, b)| a + eta * b).collect();
        let next = project_ball_simplex(&y, p, epsilon);
        let moved = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if t > 10 && moved < 1e-15 {
            break;
        }
    }
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clean(q: &[f64]) -> Vec<f64> {
    Distribution::normalized(q.iter().map(|&x| x.max(0.0)).collect())
        .expect("solver output has positive mass")
        .into_weights()
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a SearchProblem) -> Self {
        let shape = TripleShape::square(problem.hidden, problem.states);
        let off_diagonal = shape
            .iter()
            .filter(|&(_, s, q)| s != q)
            .map(|(k, s, q)| shape.index(k, s, q))
            .collect();
        Self {
            problem,
            shape,
            off_diagonal,
        }
    }

    /// Products `u_ks v_kq` per triple index for pairs AB, CB, AC.
    fn products(&self, code: u64) -> [Vec<f64>; 3] {
        let (m, cells) = (self.problem.hidden, self.problem.cells());
        let spin = |j: usize, s: usize, k: usize| {
            if (code >> (j * cells + s * m + k)) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let table = |u: usize, v: usize| -> Vec<f64> {
            self.shape.iter().map(|(k, s, q)| spin(u, s, k) * spin(v, q, k)).collect()
        };
        [table(0, 1), table(2, 1), table(0, 2)]
    }

    fn evaluate(&self, code: u64) -> Candidate {
        let [w_ab, w_cb, w_ac] = self.products(code);
        let p = self.problem;
        let mut best: Option<Candidate> = None;
        for sign in [1.0, -1.0] {
            let cand = match (&p.anchor, p.mode) {
                (Some(anchor), SearchMode::Deterministic) => {
                    let base = anchor.weights();
                    let neg_cb: Vec<f64> = w_cb.iter().map(|w| -sign * w).collect();
                    let (cb, ac) = if p.method == SearchMethod::ProjectedAscent {
                        (projected_ascent(base, &neg_cb, p.epsilon), projected_ascent(base, &w_ac, p.epsilon))
                    } else {
                        (best_shift(base, &neg_cb, p.epsilon), best_shift(base, &w_ac, p.epsilon))
                    };
                    let value = sign * (dot(base, &w_ab) - dot(&cb, &w_cb)) + dot(&ac, &w_ac) - 1.0;
                    Candidate {
                        value,
                        ab: base.to_vec(),
                        cb,
                        ac,
                    }
                }
                _ => self.solve_lp(sign, &w_ab, &w_cb, &w_ac),
            };
            if best.as_ref().is_none_or(|b| cand.value > b.value) {
                best = Some(cand);
            }
        }
        best.expect("two signs tried")
    }

    /// Variables: `pAB`, then `d⁺, d⁻` for `pCB = pAB + d⁺ − d⁻` and likewise
    /// for `pAC`.
    fn solve_lp(&self, sign: f64, w_ab: &[f64], w_cb: &[f64], w_ac: &[f64]) -> Candidate {
        let p = self.problem;
        let n = self.shape.len();
        let (ab, cbp, cbm, acp, acm) = (0, n, 2 * n, 3 * n, 4 * n);
        let mut lp = LinearProgram::new(5 * n);
        for j in 0..n {
            lp.set_objective(ab + j, sign * (w_ab[j] - w_cb[j]) + w_ac[j]);
            lp.set_objective(cbp + j, -sign * w_cb[j]);
            lp.set_objective(cbm + j, sign * w_cb[j]);
            lp.set_objective(acp + j, w_ac[j]);
            lp.set_objective(acm + j, -w_ac[j]);
        }
        lp.add_row((0..n).map(|j| (ab + j, 1.0)).collect(), Relation::Eq, 1.0);
        if let Some(anchor) = &p.anchor {
            for (j, &a) in anchor.weights().iter().enumerate() {
                lp.add_row(vec![(ab + j, 1.0)], Relation::Eq, a);
            }
        }
        for (plus, minus) in [(cbp, cbm), (acp, acm)] {
            let mut balance = Vec::with_capacity(2 * n);
            let mut size = Vec::with_capacity(2 * n);
            for j in 0..n {
                balance.push((plus + j, 1.0));
                balance.push((minus + j, -1.0));
                size.push((plus + j, 1.0));
                size.push((minus + j, 1.0));
                lp.add_row(vec![(ab + j, 1.0), (plus + j, 1.0), (minus + j, -1.0)], Relation::Ge, 0.0);
            }
            lp.add_row(balance, Relation::Eq, 0.0);
            lp.add_row(size, Relation::Le, p.epsilon);
        }
        if !self.off_diagonal.is_empty() {
            lp.add_row(self.off_diagonal.iter().map(|&j| (ab + j, 1.0)).collect(), Relation::Le, p.epsilon_prime);
            for (plus, minus) in [(cbp, cbm), (acp, acm)] {
                let row = self
                    .off_diagonal
                    .iter()
                    .flat_map(|&j| [(ab + j, 1.0), (plus + j, 1.0), (minus + j, -1.0)])
                    .collect();
                lp.add_row(row, Relation::Le, p.epsilon_prime);
            }
        }
        let LpOutcome::Optimal { x, .. } = lp.solve() else {
            unreachable!("a diagonal pAB = pCB = pAC is always feasible and the region is bounded")
        };
        let ab_w = match &p.anchor {
            Some(anchor) => anchor.weights().to_vec(),
            None => clean(&x[ab..ab + n]),
        };
        let shifted = |plus: usize, minus: usize| -> Vec<f64> {
            clean(&(0..n).map(|j| ab_w[j] + x[plus + j] - x[minus + j]).collect::<Vec<_>>())
        };
        let (cb, ac) = (shifted(cbp, cbm), shifted(acp, acm));
        let value = (dot(&ab_w, w_ab) - dot(&cb, w_cb)).abs() + dot(&ac, w_ac) - 1.0;
        Candidate { value, ab: ab_w, cb, ac }
    }
}

/// Best code: highest value, lowest code on ties.
fn pick(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn hill_climb(eval: &Evaluator<'_>, start: u64, bits: usize) -> (f64, u64, usize) {
    let mut code = start;
    let mut value = eval.evaluate(code).value;
    let mut evaluations = 1;
    for _ in 0..4 * bits.max(1) {
        let (v, c) = (0..bits)
            .into_par_iter()
            .map(|b| {
                let c = code ^ (1 << b);
                (eval.evaluate(c).value, c)
            })
            .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick);
        evaluations += bits;
        if v > value + IMPROVEMENT {
            value = v;
            code = c;
        } else {
            break;
        }
    }
    (value, code, evaluations)
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub instance: BellInstance<f64>,
    /// `lhs − rhs` of the classical check on `instance`.
    pub violation: f64,
    /// `δ(AB,CB)`, `δ(AB,AC)`.
    pub deltas: [f64; 2],
    pub sigmas: Option<[f64; 3]>,
    pub classical: InequalityReport<f64>,
    /// The proven corrected bound at the problem budgets.
    pub corrected: InequalityReport<f64>,
    pub method: SearchMethod,
    /// Observable triples whose distribution block was solved.
    pub evaluations: usize,
    /// Whether every observable triple was covered.
    pub exhaustive: bool,
}

fn build_instance(problem: &SearchProblem, code: u64, cand: &Candidate) -> Result<BellInstance<f64>> {
    let [a, b, c] = decode(problem, code);
    let dist = |w: &[f64]| Distribution::new(w.to_vec());
    match (a, b, c) {
        (Observable::Det(a), Observable::Det(b), Observable::Det(c)) => Ok(BellInstance::Det(BellInstanceDet::new(
            dist(&cand.ab)?,
            dist(&cand.cb)?,
            dist(&cand.ac)?,
            a,
            b,
            c,
        )?)),
        (Observable::Stoch(a), Observable::Stoch(b), Observable::Stoch(c)) => {
            let shape = TripleShape::square(problem.hidden, problem.states);
            let triple = |w: &[f64]| TripleDistribution::new(shape, dist(w)?);
            Ok(BellInstance::Stoch(BellInstanceStoch::new(
                triple(&cand.ab)?,
                triple(&cand.cb)?,
                triple(&cand.ac)?,
                a,
                b,
                c,
            )?))
        }
        _ => unreachable!("decode yields one kind"),
    }
}

fn internal(context: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Internal(format!("{context}: {e}"))
}

pub fn maximize_violation(problem: &SearchProblem, seed: u64) -> Result<SearchResult> {
    problem.validate()?;
    let eval = Evaluator::new(problem);
    let bits = problem.observable_bits();
    let initial = problem.observables.as_ref().map(|o| encode(problem, o)).transpose()?;

    let (value, code, evaluations, exhaustive) = if problem.fix_observables {
        let code = initial.expect("validated");
        (eval.evaluate(code).value, code, 1, false)
    } else if problem.method == SearchMethod::RandomRestart {
        let mask = (1u64 << bits) - 1;
        let runs: Vec<(f64, u64, usize)> = (0..problem.restarts)
            .into_par_iter()
            .map(|r| {
                let start = match (r, initial) {
                    (0, Some(code)) => code,
                    _ => rng::stream(seed, rng::domain::SEARCH_RESTART, r as u64).random::<u64>() & mask,
                };
                hill_climb(&eval, start, bits)
            })
            .collect();
        let evaluations = runs.iter().map(|r| r.2).sum();
        let (value, code, _) = runs
            .into_iter()
            .fold((f64::NEG_INFINITY, 0, 0), |best, r| if r.0 > best.0 { r } else { best });
        (value, code, evaluations, false)
    } else {
        // Negating all three observables leaves every product unchanged.
        let half = 1u64 << (bits - 1);
        let (value, code) = (0..half)
            .into_par_iter()
            .map(|i| (eval.evaluate(i << 1).value, i << 1))
            .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick);
        (value, code, half as usize, true)
    };

    let cand = eval.evaluate(code);
    let instance = build_instance(problem, code, &cand).map_err(internal("search produced an invalid instance"))?;
    let classical = instance.classical();
    let violation = classical.violation();
    if (violation - value).abs() > RECHECK {
        return Err(Error::Internal(format!(
            "re-evaluated violation {violation} differs from optimizer value {value}"
        )));
    }
    let (corrected, proven_cap) = match &instance {
        BellInstance::Det(inst) => (
            check_theorem2(inst, &problem.epsilon).map_err(internal("search exceeded its budget"))?,
            2.0 * problem.epsilon,
        ),
        BellInstance::Stoch(inst) => (
            check_theorem4(inst, &problem.epsilon, &problem.epsilon_prime, T4Variant::Proven)
                .map_err(internal("search exceeded its budget"))?,
            2.0 * problem.epsilon + 4.0 * problem.epsilon_prime,
        ),
    };
    if violation > proven_cap + RECHECK || !corrected.holds() {
        return Err(Error::Internal(format!(
            "violation {violation} exceeds the proven bound {proven_cap}"
        )));
    }
    Ok(SearchResult {
        deltas: instance.deltas(),
        sigmas: instance.sigmas(),
        instance,
        violation,
        classical,
        corrected,
        method: problem.method,
        evaluations,
        exhaustive,
    })
}

/// Converts a float instance to exact arithmetic at the floats' binary values.
pub fn to_exact(inst: &BellInstance<f64>) -> Result<BellInstance<Rational>> {
    Ok(match inst {
        BellInstance::Det(i) => BellInstance::Det(BellInstanceDet::new(
            i.ab.to_exact()?,
            i.cb.to_exact()?,
            i.ac.to_exact()?,
            i.a.clone(),
            i.b.clone(),
            i.c.clone(),
        )?),
        BellInstance::Stoch(i) => {
            let t = |d: &TripleDistribution<f64>| TripleDistribution::new(d.shape(), d.dist().to_exact()?);
            BellInstance::Stoch(BellInstanceStoch::new(
                t(&i.ab)?,
                t(&i.cb)?,
                t(&i.ac)?,
                i.a.clone(),
                i.b.clone(),
                i.c.clone(),
            )?)
        }
    })
}

/// Evaluates `target` with budgets set to the instance's own observed
/// deviations, the tightest budgets its hypotheses allow.
pub fn check_target<T: Scalar>(target: TheoremId, inst: &BellInstance<T>) -> Result<InequalityReport<T>> {
    match (target, inst) {
        (TheoremId::T1, BellInstance::Det(i)) => {
            if !crate::scalar::approx_ge(&T::zero(), &i.observed_epsilon()) {
                return Err(Error::PreconditionFailed("T1 needs one shared distribution".into()));
            }
            check_theorem1(&i.ab, &i.a, &i.b, &i.c)
        }
        (TheoremId::T2, BellInstance::Det(i)) => check_theorem2(i, &i.observed_epsilon()),
        (TheoremId::T4Proven | TheoremId::T4Stated, BellInstance::Stoch(i)) => {
            let variant = if target == TheoremId::T4Proven {
                T4Variant::Proven
            } else {
                T4Variant::Stated
            };
            check_theorem4(i, &i.observed_epsilon(), &i.observed_epsilon_prime(), variant)
        }
        _ => Err(Error::Unsupported(format!("hunt target {target} on this instance kind"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuntConfig {
    pub target: TheoremId,
    /// `(M, L)` pairs; `L` is ignored for deterministic targets.
    pub dims: Vec<(usize, usize)>,
    pub epsilons: Vec<f64>,
    pub epsilon_primes: Vec<f64>,
    pub random_instances: usize,
    pub restarts: usize,
    pub max_enumeration_bits: usize,
    pub seed: u64,
}

impl HuntConfig {
    pub fn new(target: TheoremId, dims: Vec<(usize, usize)>, seed: u64) -> Self {
        Self {
            target,
            dims,
            epsilons: vec![0.0, 0.1, 0.25],
            epsilon_primes: vec![0.05, 0.1, 0.2],
            random_instances: 10_000,
            restarts: 8,
            max_enumeration_bits: DEFAULT_ENUMERATION_BITS,
            seed,
        }
    }

    fn stochastic(&self) -> bool {
        matches!(self.target, TheoremId::T4Proven | TheoremId::T4Stated)
    }
}

/// Outcome of the optimized search in one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HuntCell {
    pub hidden: usize,
    pub states: usize,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub method: SearchMethod,
    pub exhaustive: bool,
    pub evaluations: usize,
    /// Largest classical violation found.
    pub violation: f64,
    /// Exact slack of the target theorem on that instance at its observed
    /// budgets, rounded for display.
    pub target_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub origin: String,
    pub instance: BellInstance<Rational>,
    pub report: InequalityReport<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuntReport {
    pub target: TheoremId,
    pub cells: Vec<HuntCell>,
    pub random_checked: usize,
    /// Smallest float slack of the target over the random instances.
    pub random_min_slack: f64,
    /// Random instances re-checked exactly because their float slack was
    /// within `1e-9` of zero.
    pub exact_rechecks: usize,
    /// First exactly verified violation, cells before random instances.
    pub counterexample: Option<Counterexample>,
}

impl HuntReport {
    pub fn found(&self) -> bool {
        self.counterexample.is_some()
    }
}

fn random_simplex(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    let sparse = rng.random_bool(0.3);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = rng.sample(Exp1);
            if sparse && rng.random_bool(0.5) {
                0.0
            } else {
                x
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        let k = rng.random_range(0..n);
        w[k] = 1.0;
    }
    clean(&w)
}

fn mix(p: &[f64], q: &[f64], t: f64) -> Vec<f64> {
    clean(&p.iter().zip(q).map(|(a, b)| (1.0 - t) * a + t * b).collect::<Vec<_>>())
}

fn random_spins(n: usize, rng: &mut StreamRng) -> Vec<Spin> {
    (0..n).map(|_| Spin::from_bool(rng.random_bool(0.5))).collect()
}

/// A random instance near the hypotheses of `target`: small deviations are
/// favoured so budgets are tight.
pub fn random_instance(target: TheoremId, hidden: usize, states: usize, rng: &mut StreamRng) -> BellInstance<f64> {
    let stochastic = matches!(target, TheoremId::T4Proven | TheoremId::T4Stated);
    let l = if stochastic { states } else { 1 };
    let shape = TripleShape::square(hidden, l);
    let n = shape.len();
    let mut base = random_simplex(n, rng);
    if stochastic {
        let mut diag = vec![0.0; n];
        let raw = random_simplex(hidden * l, rng);
        for k in 0..hidden {
            for s in 0..l {
                diag[shape.index(k, s, s)] = raw[k * l + s];
            }
        }
        let t: f64 = rng.random::<f64>().powi(2);
        base = mix(&diag, &base, t);
    }
    let mut perturbed = || {
        if target == TheoremId::T1 {
            base.clone()
        } else {
            let other = random_simplex(n, rng);
            let t: f64 = rng.random::<f64>().powi(2);
            mix(&base, &other, t)
        }
    };
    let (cb, ac) = (perturbed(), perturbed());
    let dist = |w: Vec<f64>| Distribution::new(w).expect("normalized");
    if stochastic {
        let obs = |rng: &mut StreamRng| StochObservable::new(l, hidden, random_spins(l * hidden, rng)).expect("shape");
        let (a, b, c) = (obs(rng), obs(rng), obs(rng));
        let t = |w: Vec<f64>| TripleDistribution::new(shape, dist(w)).expect("shape");
        BellInstance::Stoch(BellInstanceStoch::new(t(base), t(cb), t(ac), a, b, c).expect("consistent shapes"))
    } else {
        let obs = |rng: &mut StreamRng| DetObservable::new(random_spins(hidden, rng)).expect("non-empty");
        let (a, b, c) = (obs(rng), obs(rng), obs(rng));
        BellInstance::Det(BellInstanceDet::new(dist(base), dist(cb), dist(ac), a, b, c).expect("consistent shapes"))
    }
}

/// Searches for an exactly verified violation of `target` among optimized
/// instances over the dimension and budget grid and among random instances.
pub fn counterexample_hunt(config: &HuntConfig) -> Result<HuntReport> {
    if !matches!(
        config.target,
        TheoremId::T1 | TheoremId::T2 | TheoremId::T4Proven | TheoremId::T4Stated
    ) {
        return Err(Error::Unsupported(format!("hunt target {}", config.target)));
    }
    if config.dims.is_empty() {
        return Err(Error::InvalidParameter("hunt needs at least one dimension pair".into()));
    }
    let stochastic = config.stochastic();
    let epsilons = if config.target == TheoremId::T1 {
        vec![0.0]
    } else if config.epsilons.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon grid".into()));
    } else {
        config.epsilons.clone()
    };
    let epsilon_primes = if !stochastic {
        vec![0.0]
    } else if config.epsilon_primes.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon_prime grid".into()));
    } else {
        config.epsilon_primes.clone()
    };

    let mut cells = Vec::new();
    let mut counterexample = None;
    let mut cell_index = 0u64;
    for &(m, l) in &config.dims {
        let l = if stochastic { l } else { 1 };
        for &eps in &epsilons {
            for &eps_p in &epsilon_primes {
                let mut problem = if stochastic {
                    SearchProblem::stochastic(m, l, eps, eps_p)
                } else {
                    SearchProblem::deterministic(m, eps)
                };
                problem.max_enumeration_bits = config.max_enumeration_bits;
                problem.restarts = config.restarts;
                if config.target == TheoremId::T1 {
                    problem.anchor = Some(Distribution::uniform(m)?);
                }
                if problem.observable_bits() > config.max_enumeration_bits {
                    problem.method = SearchMethod::RandomRestart;
                }
                let result = maximize_violation(&problem, rng::derive(config.seed, cell_index))?;
                cell_index += 1;
                let exact = to_exact(&result.instance)?;
                let report = check_target(config.target, &exact)?;
                if !report.holds() && counterexample.is_none() {
                    counterexample = Some(Counterexample {
                        origin: format!("optimized M={m} L={l} epsilon={eps} epsilon_prime={eps_p}"),
                        instance: exact,
                        report: report.clone(),
                    });
                }
                cells.push(HuntCell {
                    hidden: m,
                    states: l,
                    epsilon: eps,
                    epsilon_prime: eps_p,
                    method: problem.method,
                    exhaustive: result.exhaustive,
                    evaluations: result.evaluations,
                    violation: result.violation,
                    target_slack: report.slack.to_f64(),
                });
            }
        }
    }

    let dims = &config.dims;
    let checked: Vec<(f64, Option<Counterexample>, bool)> = (0..config.random_instances)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut rng = rng::stream(config.seed, rng::domain::HUNT, i as u64);
            let (m, l) = dims[i % dims.len()];
            let inst = random_instance(config.target, m, l, &mut rng);
            let slack = check_target(config.target, &inst)?.slack;
            if slack > RECHECK {
                return Ok((slack, None, false));
            }
            let exact = to_exact(&inst)?;
            let report = check_target(config.target, &exact)?;
            let found = (!report.holds()).then(|| Counterexample {
                origin: format!("random #{i}"),
                instance: exact,
                report,
            });
            Ok((slack, found, true))
        })
        .collect::<Result<_>>()?;
    let random_min_slack = checked.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let exact_rechecks = checked.iter().filter(|c| c.2).count();
    if counterexample.is_none() {
        counterexample = checked.into_iter().find_map(|c| c.1);
    }
    Ok(HuntReport {
        target: config.target,
        cells,
        random_checked: config.random_instances,
        random_min_slack,
        exact_rechecks,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(v: &[i64]) -> Observable {
        Observable::Det(DetObservable::from_ints(v).unwrap())
    }

    #[test]
    fn zero_budget_gives_zero_violation() {
        let res = maximize_violation(&SearchProblem::deterministic(3, 0.0), 0).unwrap();
        assert!(res.violation.abs() < 1e-12, "{}", res.violation);
        assert!(res.exhaustive);
    }

    #[test]
    fn best_shift_moves_half_budget() {
        let q = best_shift(&[0.5, 0.5], &[1.0, -1.0], 0.25);
        assert_eq!(q, vec![0.625, 0.375]);
        let q = best_shift(&[0.1, 0.9], &[1.0, -1.0], 2.0);
        assert_eq!(q, vec![1.0, 0.0]);
    }

    #[test]
    fn projection_matches_closed_form_optimum() {
        let p = [0.2, 0.3, 0.5];
        let w = [1.0, -1.0, 1.0];
        let a = best_shift(&p, &w, 0.3);
        let b = projected_ascent(&p, &w, 0.3);
        assert!((dot(&a, &w) - dot(&b, &w)).abs() < 1e-9);
    }

    #[test]
    fn anchored_example_reaches_twice_budget() {
        for eps in [0.05, 0.1, 0.25, 0.5] {
            let problem = SearchProblem::deterministic(2, eps)
                .with_anchor(Distribution::new(vec![0.5, 0.5]).unwrap())
                .with_observables([det(&[1, -1]), det(&[1, -1]), det(&[-1, 1])], false);
            let res = maximize_violation(&problem, 1).unwrap();
            assert!(res.violation >= 2.0 * eps - 1e-9);
            assert!(res.violation <= 2.0 * eps + 1e-12);
        }
    }

    #[test]
    fn fixed_constant_product_observables_cannot_violate() {
        let problem = SearchProblem::deterministic(2, 0.25)
            .with_anchor(Distribution::new(vec![0.5, 0.5]).unwrap())
            .with_observables([det(&[1, -1]), det(&[1, -1]), det(&[-1, 1])], true);
        let res = maximize_violation(&problem, 1).unwrap();
        assert!(res.violation.abs() < 1e-12);
    }

    #[test]
    fn free_anchor_lp_reaches_twice_budget() {
        let res = maximize_violation(&SearchProblem::deterministic(2, 0.2), 3).unwrap();
        assert!((res.violation - 0.4).abs() < 1e-9, "{}", res.violation);
    }

    #[test]
    fn stochastic_device_inconsistency_alone() {
        let res = maximize_violation(&SearchProblem::stochastic(2, 2, 0.0, 0.1), 0).unwrap();
        assert!(res.violation > 0.0);
        assert!(res.violation <= 0.4 + 1e-9);
        assert!(res.exhaustive);
    }

    #[test]
    fn methods_agree_on_anchored_problems() {
        let anchor = Distribution::new(vec![0.1, 0.6, 0.3]).unwrap();
        let base = SearchProblem::deterministic(3, 0.3).with_anchor(anchor);
        let v = maximize_violation(&base, 0).unwrap().violation;
        let pa = maximize_violation(&base.clone().with_method(SearchMethod::ProjectedAscent), 0)
            .unwrap()
            .violation;
        assert!((v - pa).abs() < 1e-9, "{v} vs {pa}");
    }

    #[test]
    fn random_restart_is_reproducible() {
        let p = SearchProblem::stochastic(2, 2, 0.1, 0.05)
            .with_method(SearchMethod::RandomRestart)
            .with_restarts(3);
        let a = maximize_violation(&p, 42).unwrap();
        let b = maximize_violation(&p, 42).unwrap();
        assert_eq!(a.violation.to_bits(), b.violation.to_bits());
        assert_eq!(a.instance, b.instance);
    }

    #[test]
    fn problem_validation() {
        assert!(matches!(
            maximize_violation(&SearchProblem::deterministic(8, 0.1), 0),
            Err(Error::DimensionCap(_))
        ));
        assert!(maximize_violation(&SearchProblem::deterministic(2, -0.1), 0).is_err());
        assert!(matches!(
            maximize_violation(&SearchProblem::deterministic(2, 0.1).with_method(SearchMethod::ProjectedAscent), 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn small_hunt_sanity_targets() {
        for target in [TheoremId::T1, TheoremId::T2, TheoremId::T4Proven] {
            let mut cfg = HuntConfig::new(target, vec![(2, 2)], 5);
            cfg.random_instances = 500;
            cfg.epsilons = vec![0.0, 0.1];
            cfg.epsilon_primes = vec![0.1];
            let rep = counterexample_hunt(&cfg).unwrap();
            assert!(!rep.found(), "{target}: {:?}", rep.counterexample);
        }
    }
}
