//! Exact moment sequences of compactly supported measures, the tail order
//! they induce, finite-stage counterexample constructions, filter and
//! harmonic-density set algebra, and distribution-valued games under the
//! lexicographic order.
//!
//! All decisions are made in exact rational arithmetic; floats appear only
//! in search heuristics and plot data.

pub mod artifact;
pub mod config;
pub mod constructions;
pub mod filters;
pub mod games;
pub mod linalg;
pub mod measures;
pub mod poly;
pub mod rational;
pub mod roots;
pub mod tailorder;

pub use artifact::{build_artifact, verify_artifact, ArtifactCheck, ConstructRequest, RunArtifact};
pub use config::Config;
pub use constructions::{BumpMode, BumpSpec, ConstructionError};
pub use filters::{FilterError, StructuredSet, Theta};
pub use games::{DistGame, EquilibriumReport, GameError, MixedProfile};
pub use measures::{Measure, MeasureError, MomentValue, PiecewiseDensity};
pub use poly::Poly;
pub use rational::{format_rational, parse_rational, Rational};
pub use tailorder::{Certificate, TailError, TailVerdict};
