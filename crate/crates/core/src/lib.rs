//! Randomized identity testing for arithmetic circuits with exponentiation
//! gates (at most one `exp` on any input-to-output path).
//!
//! Circuits are evaluated gate by gate over a pair of prime fields: values
//! under an exponent live in `F_p`, values on an exponent live in `F_q`, and
//! `exp(x)` is read as `a^x mod p` for an element `a` of order `q`, where
//! `q | p - 1`. A circuit that is identically zero over the reals evaluates
//! to zero (or is undefined) at every such point; a nonzero circuit is caught
//! with probability bounded away from zero.
//!
//! Modules, bottom-up:
//!
//! - [`field`]: word-sized modular arithmetic and `(p, q, a)` discovery.
//! - [`intpoly`]: exact sparse integer polynomials.
//! - [`exppoly`]: sums `sum_i f_i * exp(g_i / h_i)`, condensation, and
//!   evaluation both over `(F_p, F_q)` and exactly at integer points.
//! - [`circuit`]: the circuit IR, validation, dual-track evaluation, and
//!   conversion to a fraction of exponential polynomials.
//! - [`pit`]: parameter selection, the randomized testers, and the exact
//!   zero oracle.
//! - [`descartes`]: root-counting experiments for sparse polynomials on the
//!   order-`q` subgroup.

pub mod circuit;
pub mod descartes;
pub mod error;
pub mod exppoly;
pub mod field;
pub mod intpoly;
pub mod pit;

pub use circuit::{Circuit, CircuitBuilder, CircuitDef, DualValue, GateDef, GateId, GateKind};
pub use error::{CircuitError, ExpPolyError, FieldError, LabError, PitError, PolyError, ValidationError};
pub use exppoly::{ExpPoly, ExpTerm, SignClass};
pub use field::{FieldParams, PrimePair};
pub use intpoly::{Monomial, SparsePoly};
pub use pit::{OracleOutcome, TestPlan, TestReport, Verdict, Witness};
