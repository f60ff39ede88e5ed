//! Minimality of sequences over the square and their continuous images.
//!
//! The crate builds a sequence `x` over `[0,1]^2` that is not minimal even
//! though its image under every continuous `f: [0,1]^2 -> [0,1]` is, and the
//! two-coordinate detector that exposes non-minimality of any sequence over
//! a compact metric space. Everything is checked on finite prefixes:
//!
//! - [`metric`]: letters, blocks, the d-bar metric and tail enclosures.
//! - [`symbolic`]: lazy sequences, the shift, gap scans and witness checks.
//! - [`toeplitz`]: 2-Toeplitz sequences and the seeding enumerations.
//! - [`construction`]: the counterexample `x` and the rational toy model.
//! - [`detector`]: function specs, image recurrence, and the `(f, g)` detector.

pub mod construction;
pub mod detector;
pub mod error;
pub mod metric;
pub mod symbolic;
pub mod toeplitz;

pub use construction::{build_toy, build_x, CounterexampleSeq, ToyModelSeq};
pub use detector::{DetectorPair, FunctionSpec, VertexOrder};
pub use error::{Error, Result};
pub use metric::{Block, Letter, Point2, Rational, Space, TailInterval, UnitPair, UnitRational, UnitValue};
pub use symbolic::{LazySequence, MaxGap, RecurrenceReport, Verdict, Window};
pub use toeplitz::{EdgeId, Enumeration, VTriple};
