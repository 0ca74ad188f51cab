//! Hidden-variable models of Bell-type experiments whose three measurement
//! ensembles need not share a distribution, with exact and floating-point
//! checkers for the corrected inequalities, drift simulation, and a
//! worst-case search.

pub mod covariation;
pub mod distribution;
pub mod error;
pub mod inequalities;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod simulate;

pub use distribution::Distribution;
pub use error::{Error, Result};
pub use inequalities::{
    BellInstance, BellInstanceDet, BellInstanceStoch, InequalityReport, T4Variant, TheoremId, Verdict,
};
pub use model::{
    DetObservable, DeviceSpace, DeviceTrace, HiddenSpace, Observable, RecordSequence, Run, Spin,
    StochObservable, TripleDistribution, TripleShape,
};
pub use scalar::{NumericMode, Rational, Scalar};
