//! Domain types for finite hidden-variable models.
//!
//! Indices are 0-based in this crate. File formats and user-facing numbering
//! are 1-based; the conversion lives in the IO layer.

use std::collections::HashSet;
use std::fmt;

use crate::distribution::Distribution;
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

/// Default cap on `M` and `L` for exact-mode instances.
pub const DEFAULT_EXACT_CAP: usize = 64;

/// The finite set of hidden values `λ_1 … λ_M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl HiddenSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("hidden space must be non-empty".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter("hidden space must be non-empty".into()));
        }
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidParameter("hidden labels must be unique".into()));
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, k: usize) -> String {
        match &self.labels {
            Some(labels) => labels[k].clone(),
            None => format!("λ{}", k + 1),
        }
    }
}

/// The state set `Σ = {ω_1 … ω_L}` of a measuring device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceSpace {
    size: usize,
}

impl DeviceSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("device space must be non-empty".into()));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// A dichotomic outcome, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> i64 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn from_bool(up: bool) -> Spin {
        if up {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    pub fn scalar<T: Scalar>(self) -> T {
        T::from_int(self.value())
    }
}

impl std::ops::Mul for Spin {
    type Output = Spin;

    fn mul(self, rhs: Spin) -> Spin {
        Spin::from_bool(self == rhs)
    }
}

impl TryFrom<i64> for Spin {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Spin::Up),
            -1 => Ok(Spin::Down),
            other => Err(Error::InvalidObservable(format!(
                "value {other} is not +1 or -1"
            ))),
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Up => "+1",
            Spin::Down => "-1",
        })
    }
}

/// `U(λ_k)` for each hidden value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetObservable {
    values: Vec<Spin>,
}

impl DetObservable {
    pub fn new(values: Vec<Spin>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidObservable("observable has no entries".into()));
        }
        Ok(Self { values })
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Spin::try_from(v)).collect::<Result<_>>()?)
    }

    pub fn constant(m: usize, spin: Spin) -> Result<Self> {
        Self::new(vec![spin; m])
    }

    pub fn hidden_size(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, k: usize) -> Spin {
        self.values[k]
    }

    pub fn values(&self) -> &[Spin] {
        &self.values
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|s| s.flip()).collect(),
        }
    }

    /// The stochastic observable that ignores the device state.
    pub fn lift(&self, states: usize) -> Result<StochObservable> {
        let mut table = Vec::with_capacity(states * self.values.len());
        for _ in 0..states {
            table.extend_from_slice(&self.values);
        }
        StochObservable::new(states, self.values.len(), table)
    }
}

/// `U(ω_s, λ_k)`, stored row-major with rows indexed by device state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StochObservable {
    states: usize,
    hidden: usize,
    values: Vec<Spin>,
}

impl StochObservable {
    pub fn new(states: usize, hidden: usize, values: Vec<Spin>) -> Result<Self> {
        if states == 0 || hidden == 0 {
            return Err(Error::InvalidObservable("observable table is empty".into()));
        }
        check_dim("observable table", states * hidden, values.len())?;
        Ok(Self {
            states,
            hidden,
            values,
        })
    }

    /// Builds from `rows[s][k]`.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let states = rows.len();
        let hidden = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(states * hidden);
        for row in rows {
            check_dim("observable row", hidden, row.len())?;
            for &v in row {
                values.push(Spin::try_from(v)?);
            }
        }
        Self::new(states, hidden, values)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    /// Value at device state `s`, hidden value `k`.
    pub fn at(&self, s: usize, k: usize) -> Spin {
        self.values[s * self.hidden + k]
    }

    pub fn values(&self) -> &[Spin] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<Spin>> {
        self.values.chunks(self.hidden).map(<[Spin]>::to_vec).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            states: self.states,
            hidden: self.hidden,
            values: self.values.iter().map(|s| s.flip()).collect(),
        }
    }
}

/// Either kind of observable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observable {
    Det(DetObservable),
    Stoch(StochObservable),
}

impl Observable {
    pub fn hidden_size(&self) -> usize {
        match self {
            Observable::Det(o) => o.hidden_size(),
            Observable::Stoch(o) => o.hidden_size(),
        }
    }
}

/// Per-measurement device states of one run (`i → ω^U(i)`, `i → ω^V(i)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceTrace {
    pub space_u: DeviceSpace,
    pub space_v: DeviceSpace,
    pub states_u: Vec<usize>,
    pub states_v: Vec<usize>,
}

/// One ensemble `S_UV`: the hidden value of every system in measurement order
/// and, for stochastic models, the device states at each measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    hidden_size: usize,
    hidden: Vec<usize>,
    devices: Option<DeviceTrace>,
}

impl Run {
    pub fn deterministic(space: &HiddenSpace, hidden: Vec<usize>) -> Result<Self> {
        Self::validate_hidden(space.size(), &hidden)?;
        Ok(Self {
            hidden_size: space.size(),
            hidden,
            devices: None,
        })
    }

    pub fn stochastic(space: &HiddenSpace, hidden: Vec<usize>, devices: DeviceTrace) -> Result<Self> {
        Self::validate_hidden(space.size(), &hidden)?;
        check_dim("device trace U", hidden.len(), devices.states_u.len())?;
        check_dim("device trace V", hidden.len(), devices.states_v.len())?;
        for (trace, space, name) in [
            (&devices.states_u, devices.space_u, "U"),
            (&devices.states_v, devices.space_v, "V"),
        ] {
            if let Some(&bad) = trace.iter().find(|&&s| s >= space.size()) {
                return Err(Error::InvalidRun(format!(
                    "device {name} state {} outside 1..={}",
                    bad + 1,
                    space.size()
                )));
            }
        }
        Ok(Self {
            hidden_size: space.size(),
            hidden,
            devices: Some(devices),
        })
    }

    fn validate_hidden(m: usize, hidden: &[usize]) -> Result<()> {
        if hidden.is_empty() {
            return Err(Error::InvalidRun("a run needs at least one system".into()));
        }
        if let Some(&bad) = hidden.iter().find(|&&k| k >= m) {
            return Err(Error::InvalidRun(format!(
                "hidden index {} outside 1..={m}",
                bad + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hidden.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hidden.is_empty()
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn devices(&self) -> Option<&DeviceTrace> {
        self.devices.as_ref()
    }

    pub fn is_stochastic(&self) -> bool {
        self.devices.is_some()
    }
}

/// A collective `x_UV = ((u_1, v_1), …, (u_N, v_N))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordSequence {
    outcomes: Vec<(Spin, Spin)>,
}

impl RecordSequence {
    pub fn new(outcomes: Vec<(Spin, Spin)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::EmptyInput("record sequence"));
        }
        Ok(Self { outcomes })
    }

    pub fn from_ints(pairs: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(u, v)| Ok((Spin::try_from(u)?, Spin::try_from(v)?)))
                .collect::<Result<_>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[(Spin, Spin)] {
        &self.outcomes
    }
}

/// Shape of a `(k, s, q)`-indexed table: hidden value, state of device U,
/// state of device V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TripleShape {
    pub hidden: usize,
    pub states_u: usize,
    pub states_v: usize,
}

impl TripleShape {
    pub fn new(hidden: usize, states_u: usize, states_v: usize) -> Self {
        Self {
            hidden,
            states_u,
            states_v,
        }
    }

    pub fn square(hidden: usize, states: usize) -> Self {
        Self::new(hidden, states, states)
    }

    pub fn len(&self) -> usize {
        self.hidden * self.states_u * self.states_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, k: usize, s: usize, q: usize) -> usize {
        (k * self.states_u + s) * self.states_v + q
    }

    pub fn unindex(&self, i: usize) -> (usize, usize, usize) {
        let q = i % self.states_v;
        let rest = i / self.states_v;
        (rest / self.states_u, rest % self.states_u, q)
    }

    /// All `(k, s, q)` in flattened order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.len()).map(|i| self.unindex(i))
    }

    pub fn is_square(&self) -> bool {
        self.states_u == self.states_v
    }
}

/// The distribution of the objective property `π = (λ, ω^U, ω^V)` over the
/// diagonal ensemble of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleDistribution<T> {
    shape: TripleShape,
    dist: Distribution<T>,
}

impl<T: Scalar> TripleDistribution<T> {
    pub fn new(shape: TripleShape, dist: Distribution<T>) -> Result<Self> {
        check_dim("triple distribution", shape.len(), dist.dim())?;
        Ok(Self { shape, dist })
    }

    pub fn point_mass(shape: TripleShape, k: usize, s: usize, q: usize) -> Result<Self> {
        let dist = Distribution::point_mass(shape.len(), shape.index(k, s, q))?;
        Ok(Self { shape, dist })
    }

    pub fn shape(&self) -> TripleShape {
        self.shape
    }

    pub fn dist(&self) -> &Distribution<T> {
        &self.dist
    }

    pub fn get(&self, k: usize, s: usize, q: usize) -> &T {
        self.dist.get(self.shape.index(k, s, q))
    }

    /// Marginal over `λ`, summing out both device states.
    pub fn hidden_marginal(&self) -> Distribution<T> {
        let mut out = vec![T::zero(); self.shape.hidden];
        for (i, w) in self.dist.weights().iter().enumerate() {
            let (k, _, _) = self.shape.unindex(i);
            out[k] = out[k].clone() + w.clone();
        }
        Distribution::new(out).expect("marginal of a distribution is a distribution")
    }

    /// A deterministic-model distribution viewed with one device state each.
    pub fn from_hidden(p: &Distribution<T>) -> Self {
        Self {
            shape: TripleShape::square(p.dim(), 1),
            dist: p.clone(),
        }
    }

    pub fn to_f64(&self) -> TripleDistribution<f64> {
        TripleDistribution {
            shape: self.shape,
            dist: self.dist.to_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_must_be_unique() {
        assert!(HiddenSpace::with_labels(vec!["a".into(), "a".into()]).is_err());
        let h = HiddenSpace::with_labels(vec!["up".into(), "down".into()]).unwrap();
        assert_eq!(h.size(), 2);
        assert_eq!(h.label(1), "down");
        assert!(HiddenSpace::new(0).is_err());
        assert!(DeviceSpace::new(0).is_err());
    }

    #[test]
    fn observables_reject_non_spins() {
        assert!(DetObservable::from_ints(&[1, 0]).is_err());
        assert!(DetObservable::from_ints(&[]).is_err());
        assert!(StochObservable::from_rows(&[vec![1, -1], vec![1]]).is_err());
        let o = StochObservable::from_rows(&[vec![1, -1], vec![-1, -1]]).unwrap();
        assert_eq!(o.at(0, 1), Spin::Down);
        assert_eq!(o.at(1, 0), Spin::Down);
        assert_eq!(o.at(0, 0), Spin::Up);
    }

    #[test]
    fn runs_validate_indices_and_lengths() {
        let h = HiddenSpace::new(2).unwrap();
        assert!(Run::deterministic(&h, vec![]).is_err());
        assert!(Run::deterministic(&h, vec![0, 2]).is_err());
        let d = DeviceSpace::new(2).unwrap();
        let trace = DeviceTrace {
            space_u: d,
            space_v: d,
            states_u: vec![0],
            states_v: vec![0, 1],
        };
        assert!(Run::stochastic(&h, vec![0, 1], trace).is_err());
    }

    #[test]
    fn triple_index_roundtrip() {
        let shape = TripleShape::new(3, 2, 4);
        for i in 0..shape.len() {
            let (k, s, q) = shape.unindex(i);
            assert_eq!(shape.index(k, s, q), i);
        }
    }

    #[test]
    fn spin_product() {
        assert_eq!(Spin::Up * Spin::Down, Spin::Down);
        assert_eq!(Spin::Down * Spin::Down, Spin::Up);
    }
}
