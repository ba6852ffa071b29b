//! Computational machinery for step-two Carnot groups.
//!
//! The crate is organized around four pillars:
//!
//! * [`group`] — exact group algebra: the law `(z,t)·(ζ,τ) = (z+ζ, t+τ+Q(z,ζ))`,
//!   dilations, horizontal exponentials and lines, a homogeneous quasi-norm,
//!   and the Hörmander / Métivier structural predicates.
//! * [`multiexp`] — the multiexponential map `Γ(u₁,…,u_p) = e^{u_p·X}⋯e^{u_1·X}(0)`
//!   and a constructive solver that inverts it with quadratically open bounds,
//!   built from a weighted-pair reduction and a triangular change of variables.
//! * [`cone`] — sampling certificates for the inner-cone property of
//!   horizontally convex sets given only membership oracles.
//! * [`monotone`] — horizontal convexity and precise monotonicity checkers,
//!   intrinsic graphs, the classified boundary families of the
//!   Heisenberg-times-line group, and a boundary classifier.
//!
//! Sampling everywhere is driven by counter-based sub-streams ([`rng`]), so
//! any fixed seed reproduces results bit-for-bit regardless of evaluation
//! order. All types are immutable after construction and all operations are
//! pure, hence freely shareable across threads.

pub mod cone;
pub mod error;
pub mod group;
pub mod monotone;
pub mod multiexp;
pub mod oracle;
pub mod rng;
pub mod sampling;

mod guide;

pub use error::{Error, Result};
pub use group::{GroupSpec, HorizontalLine, HormanderReport, MetivierKind, MetivierVerdict, Point};
pub use oracle::{SetOracle, Verdict};
