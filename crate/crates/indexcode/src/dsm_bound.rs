//! Decoder-sequencing lower bound on the broadcast rate.
//!
//! Order the decoders as `σ(1), …, σ(m)`. When decoder `σ(i)` takes its
//! turn, everything held or demanded by earlier decoders is treated as
//! already explained; `σ(i)` is charged for its demanded bits that neither
//! its own side information nor that accumulated pool covers:
//!
//! ```text
//! term(i) = | f_σ(i) \ ( Y_σ(i) ∪ ⋃_{j<i} (Y_σ(j) ∪ f_σ(j)) ) |
//! ```
//!
//! Every broadcast code must spend at least `Σ term(i)` bits for every
//! order, so the maximum over orders lower-bounds the optimal rate.
//!
//! Design notes:
//!
//! - [`dsm_plus_dp`] maximizes over all `m!` orders with a `2^m`-state
//!   subset DP (the charge for the next decoder depends only on the *set*
//!   of predecessors, not their order), so `m = 16` stays tractable.
//! - [`dsm_plus_enumerate`] walks the permutations directly. It exists to
//!   cross-check the DP and is guarded at `m <= 8`.
//! - Both report a witness permutation and its per-decoder charges; the DP
//!   breaks ties toward lexicographically smaller witnesses.

use crate::instance::{Instance, InstanceError};
use crate::sets::{DecoderId, DecoderSet, SourceSet};
use crate::GuardViolation;

use itertools::Itertools;

/// Maximum decoder count for [`dsm_plus_enumerate`].
pub const MAX_ENUMERATE_DECODERS: u8 = 8;

/// A decoder order together with the lower-bound value it certifies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainBound {
    /// Sum of the per-position charges.
    pub value: usize,
    /// The decoder order (a permutation of `1..=m`).
    pub permutation: Vec<DecoderId>,
    /// `terms[i]` is the charge collected at position `i`.
    pub terms: Vec<usize>,
}

/// `Y_d ∪ f_d` for each decoder, plus the residual demand `f_d \ Y_d`.
struct DecoderPools {
    /// `pool[d-1] = Y_d ∪ f_d`.
    pool: Vec<SourceSet>,
    /// `residual[d-1] = f_d \ Y_d` — the most a decoder can be charged.
    residual: Vec<SourceSet>,
}

fn pools(inst: &Instance) -> DecoderPools {
    let mut pool = Vec::with_capacity(inst.m() as usize);
    let mut residual = Vec::with_capacity(inst.m() as usize);
    for d in inst.decoders() {
        let y = inst.side_info(d);
        let f = inst.demand(d);
        let mut p = y.clone();
        p.union_with(&f);
        let mut r = SourceSet::empty(inst.s());
        for k in f.iter() {
            if !y.contains(k) {
                r.insert(k);
            }
        }
        pool.push(p);
        residual.push(r);
    }
    DecoderPools { pool, residual }
}

/// Evaluates the bound along one explicit decoder order.
///
/// # Errors
///
/// Returns [`InstanceError::NotAPermutation`] unless `perm` is a
/// permutation of `1..=m`.
///
/// # Example
///
/// ```
/// use indexcode::fixtures::xor_merge_pair;
/// use indexcode::dsm_bound::chain_value;
///
/// let inst = xor_merge_pair();
/// let chain = chain_value(&inst, &[1, 3, 2, 4]).unwrap();
/// assert_eq!(chain.value, 5);
/// assert_eq!(chain.terms, vec![2, 1, 1, 1]);
/// ```
pub fn chain_value(inst: &Instance, perm: &[DecoderId]) -> Result<ChainBound, InstanceError> {
    let m = inst.m();
    if perm.len() != m as usize
        || DecoderSet::from_ids(perm.iter().copied()) != DecoderSet::full(m)
    {
        return Err(InstanceError::NotAPermutation(m));
    }
    let p = pools(inst);
    let mut covered = SourceSet::empty(inst.s());
    let mut terms = Vec::with_capacity(perm.len());
    let mut value = 0;
    for &d in perm {
        let i = d as usize - 1;
        let term = p.residual[i].difference_len(&covered);
        terms.push(term);
        value += term;
        covered.union_with(&p.pool[i]);
    }
    Ok(ChainBound {
        value,
        permutation: perm.to_vec(),
        terms,
    })
}

/// The lower bound: maximum of [`chain_value`] over all decoder orders,
/// computed by dynamic programming over predecessor sets.
///
/// For a predecessor set `T`, the best completion satisfies
/// `W(T) = max_{d ∉ T} term(T, d) + W(T ∪ {d})` with `W([m]) = 0`; the
/// answer is `W(∅)`. The witness is rebuilt front-to-back, preferring the
/// smallest decoder index at every step, so equal-valued runs are
/// deterministic.
///
/// Runs in `O(2^m · m · s/64)` time and `O(2^m · s/64)` space.
#[must_use]
pub fn dsm_plus_dp(inst: &Instance) -> ChainBound {
    let m = inst.m() as usize;
    let p = pools(inst);
    let full: usize = (1usize << m) - 1;

    // covers[t] = ⋃_{d ∈ t} (Y_d ∪ f_d), built from each mask's
    // lowest-bit predecessor.
    let mut covers: Vec<SourceSet> = Vec::with_capacity(full + 1);
    covers.push(SourceSet::empty(inst.s()));
    for t in 1..=full {
        let low = t.trailing_zeros() as usize;
        let mut c = covers[t & (t - 1)].clone();
        c.union_with(&p.pool[low]);
        covers.push(c);
    }

    // W[t]: best value obtainable by ordering the decoders outside t,
    // given that everything covered by t is already explained.
    let mut w = vec![0usize; full + 1];
    for t in (0..full).rev() {
        let mut best = 0;
        for d in 0..m {
            if t & (1 << d) == 0 {
                let gain = p.residual[d].difference_len(&covers[t]) + w[t | (1 << d)];
                best = best.max(gain);
            }
        }
        w[t] = best;
    }

    // Witness: walk forward, smallest decoder index first among optimal
    // continuations.
    let mut t = 0usize;
    let mut permutation = Vec::with_capacity(m);
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let d = (0..m)
            .find(|&d| {
                t & (1 << d) == 0
                    && p.residual[d].difference_len(&covers[t]) + w[t | (1 << d)] == w[t]
            })
            .expect("some continuation attains the DP value");
        terms.push(p.residual[d].difference_len(&covers[t]));
        permutation.push(d as DecoderId + 1);
        t |= 1 << d;
    }

    let value = w[0];
    debug_assert_eq!(value, terms.iter().sum::<usize>());
    ChainBound {
        value,
        permutation,
        terms,
    }
}

/// Brute-force maximum of [`chain_value`] over all `m!` orders.
///
/// Exists to cross-check [`dsm_plus_dp`]; the witness is the
/// lexicographically smallest maximizing permutation.
///
/// # Errors
///
/// Returns a [`GuardViolation`] when `m > 8` (`8! = 40320` orders is the
/// intended ceiling).
pub fn dsm_plus_enumerate(inst: &Instance) -> Result<ChainBound, GuardViolation> {
    let m = inst.m();
    if m > MAX_ENUMERATE_DECODERS {
        return Err(GuardViolation {
            operation: "exhaustive order search",
            quantity: "decoders",
            actual: u64::from(m),
            limit: u64::from(MAX_ENUMERATE_DECODERS),
        });
    }
    let mut best: Option<ChainBound> = None;
    for perm in (1..=m).permutations(m as usize) {
        let cand = chain_value(inst, &perm).expect("permutations(m) yields valid orders");
        if best.as_ref().is_none_or(|b| cand.value > b.value) {
            best = Some(cand);
        }
    }
    Ok(best.expect("m >= 1 yields at least one order"))
}

// ============================================================================
// Tests
// ============================================================================
