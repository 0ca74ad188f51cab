//! Deviation measures between ensembles.

use rayon::prelude::*;

use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::model::TripleDistribution;
use crate::rng::{self, StreamRng};
use crate::scalar::Scalar;

/// `δ(p, q) = Σ_i |p_i − q_i|`, the ℓ1 pseudometric between the ensemble
/// distributions of one property. Lies in `[0, 2]`.
pub fn delta<T: Scalar>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    check_dim("delta", p.dim(), q.dim())?;
    Ok(p
        .weights()
        .iter()
        .zip(q.weights())
        .fold(T::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs()))
}

/// `δ` on the flattened `(λ, ω^U, ω^V)` property.
pub fn delta_triple<T: Scalar>(p: &TripleDistribution<T>, q: &TripleDistribution<T>) -> Result<T> {
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch {
            context: "delta over (k,s,q)",
            expected: p.shape().len(),
            found: q.shape().len(),
        });
    }
    delta(p.dist(), q.dist())
}

/// `σ = Σ_k Σ_{s≠q} p_ksq`: the mass on mismatched device states.
pub fn sigma<T: Scalar>(p: &TripleDistribution<T>) -> Result<T> {
    let shape = p.shape();
    if !shape.is_square() {
        return Err(Error::DeviceSpaceMismatch {
            left: shape.states_u,
            right: shape.states_v,
        });
    }
    Ok(p
        .dist()
        .weights()
        .iter()
        .zip(shape.iter())
        .filter(|(_, (_, s, q))| s != q)
        .fold(T::zero(), |acc, (w, _)| acc + w.clone()))
}

/// `δ` between two named ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport<T> {
    pub delta: T,
    pub pair: (String, String),
}

/// A finite sample of the ensembles one preparation procedure produced.
#[derive(Debug, Clone)]
pub struct StateEnsembleFamily<T> {
    members: Vec<(String, Distribution<T>)>,
}

impl<T: Scalar> StateEnsembleFamily<T> {
    pub fn new(members: Vec<(String, Distribution<T>)>) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::EmptyInput("ensemble family"));
        };
        let dim = first.dim();
        for (_, d) in &members {
            check_dim("ensemble family member", dim, d.dim())?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(String, Distribution<T>)] {
        &self.members
    }

    pub fn push(&mut self, id: String, d: Distribution<T>) -> Result<()> {
        check_dim("ensemble family member", self.members[0].1.dim(), d.dim())?;
        self.members.push((id, d));
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        Self::new(members)
    }

    /// All pairwise deviations, in member order.
    pub fn deviations(&self) -> Vec<DeviationReport<T>> {
        let mut out = Vec::new();
        for i in 0..self.members.len() {
            for j in i + 1..self.members.len() {
                let d = delta(&self.members[i].1, &self.members[j].1)
                    .expect("members share a dimension");
                out.push(DeviationReport {
                    delta: d,
                    pair: (self.members[i].0.clone(), self.members[j].0.clone()),
                });
            }
        }
        out
    }
}

/// The running maximum of `δ` over a finite family. The invariant itself is a
/// supremum over every ensemble the preparation can yield, so this is always
/// an underestimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonEstimate<T> {
    pub value: T,
    /// The maximizing pair; `None` for a singleton family.
    pub argmax: Option<(String, String)>,
    pub members: usize,
    pub underestimate: bool,
}

pub fn epsilon_estimate<T: Scalar>(family: &StateEnsembleFamily<T>) -> EpsilonEstimate<T> {
    let mut best: Option<DeviationReport<T>> = None;
    for d in family.deviations() {
        if best.as_ref().is_none_or(|b| d.delta > b.delta) {
            best = Some(d);
        }
    }
    EpsilonEstimate {
        value: best.as_ref().map_or_else(T::zero, |b| b.delta.clone()),
        argmax: best.map(|b| b.pair),
        members: family.members.len(),
        underestimate: true,
    }
}

/// A source of hidden-value sequences for the convergence probe.
pub trait HiddenSampler: Sync {
    fn hidden_size(&self) -> usize;
    fn sample_hidden(&self, n: usize, rng: &mut StreamRng) -> Vec<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceVerdict {
    /// Every observed deviation is zero.
    Degenerate,
    /// Medians strictly decrease with `N`.
    Converging,
    NotConverging,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub median_delta: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Log–log slope of median δ against `N` between the first and last size;
    /// `-0.5` for i.i.d. sampling. `None` when a median is zero.
    pub slope: Option<f64>,
    pub verdict: ConvergenceVerdict,
}

fn empirical(m: usize, hidden: &[usize]) -> Distribution<f64> {
    let mut counts = vec![0u64; m];
    for &k in hidden {
        counts[k] += 1;
    }
    Distribution::from_counts(&counts).expect("non-empty sample")
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// For each `N`, the median `δ` between the empirical distributions of two
/// independent size-`N` runs. Each trial owns its random streams, so the
/// table is identical for any worker count.
pub fn convergence_probe<S: HiddenSampler>(
    sampler: &S,
    sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no sample sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("sample sizes must be positive".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sample sizes must be strictly ascending".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let m = sampler.hidden_size();
    let mut rows = Vec::with_capacity(sizes.len());
    for (j, &n) in sizes.iter().enumerate() {
        let size_seed = rng::derive(seed, j as u64);
        let mut deltas: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut first = rng::stream(size_seed, rng::domain::PROBE, 2 * t as u64);
                let mut second = rng::stream(size_seed, rng::domain::PROBE, 2 * t as u64 + 1);
                let p = empirical(m, &sampler.sample_hidden(n, &mut first));
                let q = empirical(m, &sampler.sample_hidden(n, &mut second));
                delta(&p, &q).expect("same hidden space")
            })
            .collect();
        rows.push(ConvergenceRow {
            n,
            median_delta: median(&mut deltas),
            trials,
        });
    }
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let slope = (rows.len() > 1 && first.median_delta > 0.0 && last.median_delta > 0.0).then(|| {
        (last.median_delta / first.median_delta).ln() / (last.n as f64 / first.n as f64).ln()
    });
    let verdict = if rows.iter().all(|r| r.median_delta == 0.0) {
        ConvergenceVerdict::Degenerate
    } else if rows.windows(2).all(|w| w[1].median_delta < w[0].median_delta) {
        ConvergenceVerdict::Converging
    } else {
        ConvergenceVerdict::NotConverging
    };
    Ok(ConvergenceTable {
        rows,
        slope,
        verdict,
    })
}
