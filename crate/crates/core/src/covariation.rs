//! Ensemble probabilities and the frequency / ensemble covariations.
//!
//! For a run of `N` systems with hidden values `λ(i)` the frequency
//! covariation `(1/N) Σ U(λ(i)) V(λ(i))` equals `Σ_k p_k u_k v_k` with `p_k`
//! the relative frequency of `λ_k` in the run. The stochastic model carries
//! the device states along and the identity becomes
//! `Σ_{ksq} p_ksq u_ks v_kq` over the diagonal ensemble.

use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::model::{
    DetObservable, Observable, RecordSequence, Run, Spin, StochObservable, TripleDistribution,
    TripleShape,
};
use crate::scalar::Scalar;

/// What property of the run's elements to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityMode {
    /// `π = λ`.
    HiddenOnly,
    /// `π = (λ, ω^U, ω^V)`, flattened as `(k·L_U + s)·L_V + q`.
    Triple,
}

pub fn hidden_counts(run: &Run) -> Vec<u64> {
    let mut counts = vec![0u64; run.hidden_size()];
    for &k in run.hidden() {
        counts[k] += 1;
    }
    counts
}

/// The counts `l_ksq = |D^U_ks ∩ D^V_kq|`.
pub fn triple_counts(run: &Run) -> Result<(TripleShape, Vec<u64>)> {
    let trace = run
        .devices()
        .ok_or_else(|| Error::ModeMismatch("triple mode needs device state sequences".into()))?;
    let shape = TripleShape::new(run.hidden_size(), trace.space_u.size(), trace.space_v.size());
    let mut counts = vec![0u64; shape.len()];
    for ((&k, &s), &q) in run.hidden().iter().zip(&trace.states_u).zip(&trace.states_v) {
        counts[shape.index(k, s, q)] += 1;
    }
    Ok((shape, counts))
}

pub fn hidden_probabilities<T: Scalar>(run: &Run) -> Distribution<T> {
    Distribution::from_counts(&hidden_counts(run)).expect("runs are non-empty")
}

pub fn triple_probabilities<T: Scalar>(run: &Run) -> Result<TripleDistribution<T>> {
    let (shape, counts) = triple_counts(run)?;
    TripleDistribution::new(shape, Distribution::from_counts(&counts)?)
}

/// Ensemble probabilities of a run as a flat distribution.
pub fn ensemble_probabilities<T: Scalar>(run: &Run, mode: ProbabilityMode) -> Result<Distribution<T>> {
    match mode {
        ProbabilityMode::HiddenOnly => Ok(hidden_probabilities(run)),
        ProbabilityMode::Triple => Ok(triple_probabilities(run)?.dist().clone()),
    }
}

/// `(1/N) Σ u_i v_i`.
pub fn frequency_covariation<T: Scalar>(records: &RecordSequence) -> Result<T> {
    if records.is_empty() {
        return Err(Error::EmptyInput("record sequence"));
    }
    let total: i64 = records
        .outcomes()
        .iter()
        .map(|&(u, v)| (u * v).value())
        .sum();
    Ok(T::from_ratio(total, records.len() as u64))
}

/// `Σ_k p_k u_k v_k`.
pub fn ensemble_covariation_det<T: Scalar>(
    p: &Distribution<T>,
    u: &DetObservable,
    v: &DetObservable,
) -> Result<T> {
    check_dim("observable U", p.dim(), u.hidden_size())?;
    check_dim("observable V", p.dim(), v.hidden_size())?;
    Ok(p
        .weights()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, w)| signed_add(acc, w, u.at(k) * v.at(k))))
}

fn check_stoch_dims<T: Scalar>(
    p: &TripleDistribution<T>,
    u: &StochObservable,
    v: &StochObservable,
) -> Result<TripleShape> {
    let shape = p.shape();
    check_dim("observable U hidden size", shape.hidden, u.hidden_size())?;
    check_dim("observable V hidden size", shape.hidden, v.hidden_size())?;
    check_dim("observable U device states", shape.states_u, u.states())?;
    check_dim("observable V device states", shape.states_v, v.states())?;
    Ok(shape)
}

/// `Σ_{ksq} p_ksq u_ks v_kq`.
pub fn ensemble_covariation_stoch<T: Scalar>(
    p: &TripleDistribution<T>,
    u: &StochObservable,
    v: &StochObservable,
) -> Result<T> {
    let shape = check_stoch_dims(p, u, v)?;
    Ok(p
        .dist()
        .weights()
        .iter()
        .zip(shape.iter())
        .fold(T::zero(), |acc, (w, (k, s, q))| {
            signed_add(acc, w, u.at(s, k) * v.at(q, k))
        }))
}

/// The diagonal form `Σ_{ks} p_kss u_ks v_ks`, meaningful when both devices
/// share one state set. Summation order matches
/// [`ensemble_covariation_stoch`] so the two agree bit-for-bit whenever all
/// off-diagonal mass is zero.
pub fn ideal_covariation<T: Scalar>(
    p: &TripleDistribution<T>,
    u: &StochObservable,
    v: &StochObservable,
) -> Result<T> {
    let shape = check_stoch_dims(p, u, v)?;
    if !shape.is_square() {
        return Err(Error::DeviceSpaceMismatch {
            left: shape.states_u,
            right: shape.states_v,
        });
    }
    let mut acc = T::zero();
    for k in 0..shape.hidden {
        for s in 0..shape.states_u {
            acc = signed_add(acc, p.get(k, s, s), u.at(s, k) * v.at(s, k));
        }
    }
    Ok(acc)
}

#[inline]
fn signed_add<T: Scalar>(acc: T, w: &T, sign: Spin) -> T {
    match sign {
        Spin::Up => acc + w.clone(),
        Spin::Down => acc - w.clone(),
    }
}

/// Materializes the collective `x_UV` a run produces under a pair of
/// observables.
pub fn realize_records(run: &Run, u: &Observable, v: &Observable) -> Result<RecordSequence> {
    match (u, v) {
        (Observable::Det(u), Observable::Det(v)) => {
            if run.is_stochastic() {
                return Err(Error::ModeMismatch(
                    "deterministic observables applied to a stochastic run".into(),
                ));
            }
            check_dim("observable U", run.hidden_size(), u.hidden_size())?;
            check_dim("observable V", run.hidden_size(), v.hidden_size())?;
            RecordSequence::new(run.hidden().iter().map(|&k| (u.at(k), v.at(k))).collect())
        }
        (Observable::Stoch(u), Observable::Stoch(v)) => {
            let trace = run.devices().ok_or_else(|| {
                Error::ModeMismatch("stochastic observables need device state sequences".into())
            })?;
            check_dim("observable U hidden size", run.hidden_size(), u.hidden_size())?;
            check_dim("observable V hidden size", run.hidden_size(), v.hidden_size())?;
            check_dim("observable U device states", trace.space_u.size(), u.states())?;
            check_dim("observable V device states", trace.space_v.size(), v.states())?;
            RecordSequence::new(
                run.hidden()
                    .iter()
                    .zip(&trace.states_u)
                    .zip(&trace.states_v)
                    .map(|((&k, &s), &q)| (u.at(s, k), v.at(q, k)))
                    .collect(),
            )
        }
        _ => Err(Error::ModeMismatch(
            "observables U and V must be the same kind".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeviceSpace, DeviceTrace, HiddenSpace};
    use crate::scalar::Rational;

    fn r(n: i64, d: u64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn stoch_example_run() -> Run {
        // hidden=[1,2,1], deviceU=[1,1,2], deviceV=[1,2,2] (1-based)
        let h = HiddenSpace::new(2).unwrap();
        let d = DeviceSpace::new(2).unwrap();
        Run::stochastic(
            &h,
            vec![0, 1, 0],
            DeviceTrace {
                space_u: d,
                space_v: d,
                states_u: vec![0, 0, 1],
                states_v: vec![0, 1, 1],
            },
        )
        .unwrap()
    }

    #[test]
    fn hidden_only_probabilities() {
        let h = HiddenSpace::new(2).unwrap();
        let run = Run::deterministic(&h, vec![0, 0, 1, 1]).unwrap();
        let p: Distribution<Rational> = ensemble_probabilities(&run, ProbabilityMode::HiddenOnly).unwrap();
        assert_eq!(p.weights(), &[r(1, 2), r(1, 2)]);
        let run = Run::deterministic(&h, vec![0, 0, 0, 0]).unwrap();
        let p: Distribution<f64> = ensemble_probabilities(&run, ProbabilityMode::HiddenOnly).unwrap();
        assert_eq!(p.weights(), &[1.0, 0.0]);
    }

    #[test]
    fn triple_probabilities_hand_count() {
        let run = stoch_example_run();
        let p: TripleDistribution<Rational> = triple_probabilities(&run).unwrap();
        let third = r(1, 3);
        for k in 0..2 {
            for s in 0..2 {
                for q in 0..2 {
                    let expected = match (k, s, q) {
                        (0, 0, 0) | (1, 0, 1) | (0, 1, 1) => third.clone(),
                        _ => Rational::from_int(0),
                    };
                    assert_eq!(p.get(k, s, q), &expected, "({k},{s},{q})");
                }
            }
        }
    }

    #[test]
    fn triple_mode_needs_devices() {
        let h = HiddenSpace::new(2).unwrap();
        let run = Run::deterministic(&h, vec![0, 1]).unwrap();
        assert!(matches!(
            ensemble_probabilities::<f64>(&run, ProbabilityMode::Triple),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn frequency_covariation_examples() {
        let seq = RecordSequence::from_ints(&[(1, 1), (-1, -1)]).unwrap();
        assert_eq!(frequency_covariation::<f64>(&seq).unwrap(), 1.0);
        let seq = RecordSequence::from_ints(&[(1, -1), (-1, 1)]).unwrap();
        assert_eq!(frequency_covariation::<f64>(&seq).unwrap(), -1.0);
        let seq = RecordSequence::from_ints(&[(1, 1), (1, -1), (-1, -1), (-1, -1)]).unwrap();
        assert_eq!(frequency_covariation::<Rational>(&seq).unwrap(), r(1, 2));
        assert!(RecordSequence::from_ints(&[]).is_err());
    }

    #[test]
    fn deterministic_covariation_examples() {
        let half = Distribution::new(vec![0.5, 0.5]).unwrap();
        let u = DetObservable::from_ints(&[1, -1]).unwrap();
        assert_eq!(ensemble_covariation_det(&half, &u, &u).unwrap(), 1.0);
        assert_eq!(ensemble_covariation_det(&half, &u, &u.negated()).unwrap(), -1.0);
        let p = Distribution::new(vec![r(3, 4), r(1, 4)]).unwrap();
        let v = DetObservable::from_ints(&[1, 1]).unwrap();
        assert_eq!(ensemble_covariation_det(&p, &u, &v).unwrap(), r(1, 2));
        let short = DetObservable::from_ints(&[1]).unwrap();
        assert!(matches!(
            ensemble_covariation_det(&half, &u, &short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stochastic_covariation_examples() {
        let shape = TripleShape::square(2, 2);
        let u = StochObservable::from_rows(&[vec![1, -1], vec![-1, 1]]).unwrap();
        let v = StochObservable::from_rows(&[vec![-1, -1], vec![1, -1]]).unwrap();
        for (k, s, q) in shape.iter() {
            let p = TripleDistribution::<Rational>::point_mass(shape, k, s, q).unwrap();
            let expected = Rational::from_int((u.at(s, k) * v.at(q, k)).value());
            assert_eq!(ensemble_covariation_stoch(&p, &u, &v).unwrap(), expected);
        }

        let p: TripleDistribution<Rational> = triple_probabilities(&stoch_example_run()).unwrap();
        let ones = StochObservable::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(ensemble_covariation_stoch(&p, &ones, &ones).unwrap(), Rational::from_int(1));

        // M=1, L=2, p_(1,1,2)=1, u_11=+1, v_12=-1
        let shape = TripleShape::square(1, 2);
        let p = TripleDistribution::<f64>::point_mass(shape, 0, 0, 1).unwrap();
        let u = StochObservable::from_rows(&[vec![1], vec![1]]).unwrap();
        let v = StochObservable::from_rows(&[vec![1], vec![-1]]).unwrap();
        assert_eq!(ensemble_covariation_stoch(&p, &u, &v).unwrap(), -1.0);
    }

    #[test]
    fn realize_records_lookups() {
        let h = HiddenSpace::new(2).unwrap();
        let run = Run::deterministic(&h, vec![0, 1]).unwrap();
        let u = Observable::Det(DetObservable::from_ints(&[1, -1]).unwrap());
        let v = Observable::Det(DetObservable::from_ints(&[1, 1]).unwrap());
        let rec = realize_records(&run, &u, &v).unwrap();
        assert_eq!(rec, RecordSequence::from_ints(&[(1, 1), (-1, 1)]).unwrap());
        let same = realize_records(&run, &u, &u).unwrap();
        assert!(same.outcomes().iter().all(|(a, b)| a == b));
        assert_eq!(frequency_covariation::<f64>(&same).unwrap(), 1.0);
    }

    #[test]
    fn realize_records_stochastic_matches_brute_force() {
        let run = stoch_example_run();
        let ut = vec![vec![1, -1], vec![-1, -1]];
        let vt = vec![vec![-1, 1], vec![1, 1]];
        let u = Observable::Stoch(StochObservable::from_rows(&ut).unwrap());
        let v = Observable::Stoch(StochObservable::from_rows(&vt).unwrap());
        let rec = realize_records(&run, &u, &v).unwrap();
        let trace = run.devices().unwrap();
        for i in 0..run.len() {
            let (k, s, q) = (run.hidden()[i], trace.states_u[i], trace.states_v[i]);
            assert_eq!(rec.outcomes()[i].0.value(), ut[s][k]);
            assert_eq!(rec.outcomes()[i].1.value(), vt[q][k]);
        }
        let det = Observable::Det(DetObservable::from_ints(&[1, 1]).unwrap());
        assert!(matches!(realize_records(&run, &det, &det), Err(Error::ModeMismatch(_))));
        assert!(matches!(realize_records(&run, &u, &det), Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn ideal_requires_shared_state_set() {
        let shape = TripleShape::new(1, 1, 2);
        let p = TripleDistribution::<f64>::point_mass(shape, 0, 0, 0).unwrap();
        let u = StochObservable::from_rows(&[vec![1]]).unwrap();
        let v = StochObservable::from_rows(&[vec![1], vec![1]]).unwrap();
        assert!(matches!(
            ideal_covariation(&p, &u, &v),
            Err(Error::DeviceSpaceMismatch { .. })
        ));
    }
}
