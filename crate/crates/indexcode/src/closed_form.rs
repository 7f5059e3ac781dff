//! Exact optimal rates for instance classes where the bounds provably meet.
//!
//! Four families admit a closed answer, and for each the general machinery
//! (the chain lower bound of [`crate::dsm_bound`] and the partition
//! heuristic of [`crate::capm`]) provably lands on it:
//!
//! * **Near-complete side information** — every bit held by all, all but
//!   one, all but two, or none of the decoders. The optimum is a per-decoder
//!   bottleneck formula ([`near_complete_rate`]); any instance with at most
//!   three decoders is automatically in this class. The realizing code
//!   XORs aligned blocks in the staircase pattern ([`staircase_xor`]).
//! * **Balanced placements** — when the initial placement needs no
//!   rebalancing, its rate is already optimal and equals the best of `m`
//!   front-loaded chains ([`no_excess_rate`]).
//! * **Directed cycles** — `m` decoders in a single demand ring need
//!   exactly `m − 1` transmissions ([`directed_cycle_rate`]).
//! * **Acyclic instances** — nothing beats sending every demanded bit;
//!   a peeling order certifies the matching lower bound ([`dag_analysis`]).
//!
//! Design notes:
//!
//! * All rate formulas are evaluated as set cardinalities over disjoint
//!   uniform bit blocks; there is no symbolic entropy engine.
//! * The balanced-placement precondition is checked dynamically by running
//!   the heuristic and counting promotions, since no static
//!   characterization is available.
//! * [`staircase_xor`] returns the combination *structure* (which vector
//!   positions are XORed into each output symbol) rather than applying it,
//!   so callers can drive any payload type through it.

use thiserror::Error;

use crate::capm::run_capm;
use crate::dsm_bound::{chain_value, ChainBound};
use crate::instance::Instance;
use crate::sets::{DecoderId, DecoderSet};

/// Why a closed-form evaluation refused its input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosedFormError {
    /// Staircase input vectors must be sorted ascending by length.
    #[error("input vectors must be sorted ascending by length (violated at index {index})")]
    UnsortedLengths {
        /// First 0-based index whose vector is shorter than its predecessor.
        index: usize,
    },
    /// The bottleneck formula needs every bit held by all, all but one,
    /// all but two, or none of the decoders.
    #[error("some bit's holder count is not one of {{0, m, m-1, m-2}}")]
    NotNearComplete,
    /// The balanced-placement formula applies only when the heuristic's
    /// rebalancing pass has nothing to move.
    #[error("placement required {promotions} promotions, so the balanced-placement formula does not apply")]
    RequiresBalancedPlacement {
        /// Promotions the rebalancing pass performed.
        promotions: usize,
    },
    /// The cycle formula needs at least two decoders.
    #[error("a directed cycle needs at least 2 decoders, got {m}")]
    CycleTooShort {
        /// Offending decoder count.
        m: u8,
    },
    /// Peeling stalled, so the instance contains a directed cycle.
    #[error("instance is not acyclic: decoder peeling stalled on a directed cycle")]
    NotAcyclic,
}

// ============================================================================
// Staircase XOR structure
// ============================================================================

/// One output symbol: the 0-based `(vector index, symbol position)` pairs
/// whose XOR it carries.
pub type XorGroup = Vec<(usize, usize)>;

/// One output segment: consecutive [`XorGroup`]s of equal depth.
pub type Segment = Vec<XorGroup>;

/// Computes the staircase-XOR combination structure of length-sorted
/// vectors.
///
/// With lengths `l_1 ≤ … ≤ l_n`, output symbol `q` (1-based) is the XOR of
/// symbol `q` of every vector long enough to reach it (`l_j ≥ q`), so the
/// total output length is `l_n`. Symbols are grouped into `n` segments:
/// segment `p` covers positions `l_{p−1}+1 ..= l_p` and therefore combines
/// exactly vectors `p ..= n`; segments with zero width are empty. Element
/// values are never touched — only lengths matter — so the vectors may
/// hold any payload.
///
/// # Errors
///
/// Returns [`ClosedFormError::UnsortedLengths`] when lengths are not
/// ascending.
///
/// # Example
///
/// ```
/// use indexcode::closed_form::staircase_xor;
///
/// // (x) and (y, z) combine into (x⊕y, z).
/// let segments = staircase_xor(&[vec!["x"], vec!["y", "z"]]).unwrap();
/// assert_eq!(segments[0], vec![vec![(0, 0), (1, 0)]]);
/// assert_eq!(segments[1], vec![vec![(1, 1)]]);
/// ```
pub fn staircase_xor<T>(vectors: &[Vec<T>]) -> Result<Vec<Segment>, ClosedFormError> {
    if let Some(index) = (1..vectors.len()).find(|&i| vectors[i].len() < vectors[i - 1].len()) {
        return Err(ClosedFormError::UnsortedLengths { index });
    }
    let n = vectors.len();
    let mut segments = Vec::with_capacity(n);
    let mut start = 0;
    for (p, v) in vectors.iter().enumerate() {
        let segment: Segment = (start..v.len())
            .map(|q| (p..n).map(|j| (j, q)).collect())
            .collect();
        start = v.len();
        segments.push(segment);
    }
    debug_assert_eq!(
        segments.iter().map(Vec::len).sum::<usize>(),
        vectors.last().map_or(0, Vec::len),
        "total output length is the longest input length"
    );
    Ok(segments)
}

// ============================================================================
// Near-complete side information
// ============================================================================

/// Optimal rate of a near-complete instance, with the decoder whose
/// bottleneck attains it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearCompleteRate {
    /// The optimal rate.
    pub rate: usize,
    /// Least-index decoder attaining the per-decoder maximum.
    pub bottleneck: DecoderId,
}

/// Optimal rate when every bit is held by all, all but one, all but two,
/// or none of the decoders.
///
/// Decoder `i`'s bottleneck counts every bit it lacks — except those that
/// a *single* other decoder demands while exactly two decoders (the
/// demander and one more) lack them, which pair up across decoders and
/// ride along via XOR — plus the largest such pair-block that decoder `i`
/// itself blocks. The optimum is the worst bottleneck; the general lower
/// bound and heuristic both meet it on this class.
///
/// # Errors
///
/// Returns [`ClosedFormError::NotNearComplete`] when some bit's holder
/// count is outside `{0, m, m−1, m−2}`.
pub fn near_complete_rate(inst: &Instance) -> Result<NearCompleteRate, ClosedFormError> {
    if !inst.classify().near_complete {
        return Err(ClosedFormError::NotNearComplete);
    }
    let m = inst.m();
    let pair_width = i64::from(m) - 2;
    let mut best: Option<NearCompleteRate> = None;
    for i in 1..=m {
        let solo = inst
            .bits()
            .iter()
            .filter(|spec| {
                !spec.has.contains(i)
                    && (spec.need.contains(i)
                        || spec.need.len() > 1
                        || i64::from(spec.has.len()) != pair_width)
            })
            .count();
        let paired = (1..=m)
            .filter(|&j| j != i)
            .map(|j| {
                let mut held_by_rest = DecoderSet::full(m);
                held_by_rest.remove(i);
                held_by_rest.remove(j);
                inst.bits()
                    .iter()
                    .filter(|spec| {
                        spec.need == DecoderSet::singleton(j) && spec.has == held_by_rest
                    })
                    .count()
            })
            .max()
            .unwrap_or(0);
        let rate = solo + paired;
        if best.as_ref().is_none_or(|b| rate > b.rate) {
            best = Some(NearCompleteRate { rate, bottleneck: i });
        }
    }
    Ok(best.expect("instances have at least one decoder"))
}

// ============================================================================
// Balanced placements
// ============================================================================

/// Optimal rate when the initial placement is already balanced.
///
/// Runs the partition heuristic to verify that its rebalancing pass has
/// nothing to move, then evaluates the chain bound over the `m`
/// front-loaded decoder orders `(k, 1, 2, …, k−1, k+1, …, m)` and returns
/// the largest — which the placement provably achieves.
///
/// # Errors
///
/// Returns [`ClosedFormError::RequiresBalancedPlacement`] when rebalancing
/// performed any promotion.
pub fn no_excess_rate(inst: &Instance) -> Result<ChainBound, ClosedFormError> {
    let run = run_capm(inst);
    if run.promotions != 0 {
        return Err(ClosedFormError::RequiresBalancedPlacement {
            promotions: run.promotions,
        });
    }
    let m = inst.m();
    let mut best: Option<ChainBound> = None;
    for k in 1..=m {
        let perm: Vec<DecoderId> = std::iter::once(k)
            .chain((1..=m).filter(|&d| d != k))
            .collect();
        let chain = chain_value(inst, &perm).expect("front-loaded order is a permutation");
        if best.as_ref().is_none_or(|b| chain.value > b.value) {
            best = Some(chain);
        }
    }
    let best = best.expect("instances have at least one decoder");
    debug_assert_eq!(best.value, run.rate, "balanced placement achieves the chain optimum");
    Ok(best)
}

// ============================================================================
// Directed cycles
// ============================================================================

/// Optimal rate of a directed `m`-cycle: `m − 1`.
///
/// Each decoder in the ring demands one bit held only by its predecessor;
/// chaining all but one decoder shows `m − 1` is necessary, and XORing
/// around the ring achieves it.
///
/// # Errors
///
/// Returns [`ClosedFormError::CycleTooShort`] when `m < 2`.
pub fn directed_cycle_rate(m: u8) -> Result<usize, ClosedFormError> {
    if m < 2 {
        return Err(ClosedFormError::CycleTooShort { m });
    }
    Ok(usize::from(m) - 1)
}

// ============================================================================
// Acyclic instances
// ============================================================================

/// Peeling certificate for an acyclic instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagAnalysis {
    /// Decoder order in which each decoder's side information is covered
    /// by the demands of earlier decoders.
    pub order: Vec<DecoderId>,
    /// The optimal rate: every demanded bit must be sent, so this is `s`.
    pub rate: usize,
}

/// Optimal rate and certifying order for an acyclic instance.
///
/// Repeatedly peels the lowest-index decoder whose entire side information
/// has already been demanded by peeled decoders (initially: decoders with
/// no side information at all). The resulting order witnesses that no
/// transmission can be saved — evaluating the chain bound along it counts
/// every bit — so the optimal rate is exactly `s`. Expects a normalized
/// instance (every bit demanded).
///
/// # Errors
///
/// Returns [`ClosedFormError::NotAcyclic`] when peeling stalls, which
/// happens exactly when the instance contains a directed cycle of
/// hold/demand dependencies.
pub fn dag_analysis(inst: &Instance) -> Result<DagAnalysis, ClosedFormError> {
    debug_assert!(
        inst.bits().iter().all(|spec| !spec.need.is_empty()),
        "peeling expects a normalized instance"
    );
    let m = inst.m();
    let mut picked = DecoderSet::EMPTY;
    let mut order = Vec::with_capacity(usize::from(m));
    while order.len() < usize::from(m) {
        let next = (1..=m).find(|&d| {
            !picked.contains(d)
                && inst
                    .side_info(d)
                    .iter()
                    .all(|k| inst.bit(k).need.is_subset(picked))
        });
        let Some(d) = next else {
            return Err(ClosedFormError::NotAcyclic);
        };
        picked.insert(d);
        order.push(d);
    }
    Ok(DagAnalysis {
        order,
        rate: inst.s(),
    })
}

// ============================================================================
// Tests
// ============================================================================
