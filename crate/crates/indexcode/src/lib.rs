//! Rate bounds and code constructions for groupcast index coding.
//!
//! A sender broadcasts to `m` decoders over a noiseless channel. Each of the
//! `s` source bits is demanded by a set of decoders and already held, as
//! side information, by a disjoint set. The object of interest is the
//! minimum number of broadcast bits after which every decoder can recover
//! everything it demands.
//!
//! The crate provides, in matched pairs of lower and upper bounds:
//!
//! - [`dsm_bound`] — a decoder-sequencing lower bound: order the decoders,
//!   charge each one for the demanded bits that nothing earlier in the
//!   order can explain, and maximize over orders (exact DP over subsets,
//!   plus a direct enumerator for cross-checks).
//! - [`capm`] — an integral packing heuristic: place each bit in a message
//!   indexed by the decoders that interact with it, rebalance overloaded
//!   messages upward through the subset lattice, then XOR-merge compatible
//!   component pairs. Produces an explicit, decodable transmission plan.
//! - [`scapm`] — the fractional refinement: bits carry rational masses that
//!   split across several messages; the final mass table expands into an
//!   ordinary integral plan on `t` copies of every bit, so the fractional
//!   rate is realized by a finite code.
//! - [`closed_form`] — exact optima for special shapes: acyclic instances,
//!   single directed cycles, near-complete side information, and plans
//!   whose packing never needed rebalancing.
//! - [`oracle`] — an exhaustive scalar-linear oracle over GF(2) for small
//!   instances, enumerating row spaces in canonical form.
//!
//! [`instance`] defines the problem datum with a text format, validation,
//! normalization, and classification; [`fixtures`] and [`generate`] supply
//! worked examples and seeded random families for testing.
//!
//! # Example
//!
//! ```
//! use indexcode::instance::{parse, normalize, NormalizeOptions};
//! use indexcode::dsm_bound::dsm_plus_dp;
//! use indexcode::capm::run_capm;
//!
//! let inst = parse("decoders 3\n\
//!                   bit a need 1 has 3\n\
//!                   bit b need 2 has 1\n\
//!                   bit c need 3 has 2\n").unwrap();
//! let inst = normalize(&inst, NormalizeOptions::default()).instance;
//! let lower = dsm_plus_dp(&inst);
//! let plan = run_capm(&inst);
//! // Bounds meet: two transmissions are both achievable and necessary.
//! assert_eq!(lower.value, 2);
//! assert_eq!(plan.rate, 2);
//! ```

pub mod capm;
pub mod closed_form;
pub mod dsm_bound;
pub mod fixtures;
pub mod generate;
pub mod instance;
pub mod oracle;
pub mod scapm;
pub mod sets;

pub use instance::{BitId, BitSpec, Instance, MAX_BITS};
pub use sets::{DecoderId, DecoderSet, SourceSet, MAX_DECODERS};

use thiserror::Error;

/// An operation was asked to exceed its configured exhaustive-search budget.
///
/// The affected operations are documented with their limits; callers decide
/// whether a violation is a hard error or a reason to skip.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{operation}: {quantity} = {actual} exceeds limit {limit}")]
pub struct GuardViolation {
    /// Which operation refused to run.
    pub operation: &'static str,
    /// The limited quantity (e.g. `"decoders"`, `"bits"`).
    pub quantity: &'static str,
    /// The instance's value.
    pub actual: u64,
    /// The configured maximum.
    pub limit: u64,
}
