//! Interval exchange transformations, Rauzy-Veech renormalization and
//! isometric embeddings of IETs into planar piecewise isometries.
//!
//! The pipeline: induce `(lambda, pi)` with exact integer cocycles
//! ([`rauzy`]), push a rotation vector through the cocycle on the torus, and
//! bend the straight segment `[0, |lambda|)` level by level with the breaking
//! operator ([`breaking`]). The limit curve is invariant under a piecewise
//! isometry whose maps are built in [`pwi`]; [`spectral`] picks rotation
//! vectors in the contracting subspace and [`verify`] checks the identities
//! numerically.

pub mod breaking;
pub mod curve;
pub mod error;
pub mod iet;
pub mod perm;
pub mod presets;
pub mod pwi;
pub mod rauzy;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use breaking::{BreakingSequence, IntervalSeq, ThetaSeq};
pub use curve::PlCurve;
pub use error::{Error, Result};
pub use iet::{Iet, IetSpec};
pub use perm::Permutation;
pub use pwi::{AdaptedPwi, Isometry};
pub use rauzy::{InductionTrace, IntMatrix, RauzyGraph, TorusPoint, ZorichTrace};
pub use scalar::{Length, Real};

/// Double precision IET, the default for everything numerical.
pub type Iet64 = Iet<f64>;
/// Exact IET with rational lengths, used by oracles.
pub type IetQ = Iet<num_rational::BigRational>;
pub type Trace64 = InductionTrace<f64>;
pub type TraceQ = InductionTrace<num_rational::BigRational>;
