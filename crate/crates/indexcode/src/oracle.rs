//! Exact optimum over scalar linear GF(2) codes, by exhaustive search.
//!
//! A scalar linear index code is a binary matrix: the sender transmits one
//! parity (row) per channel use, and a decoder succeeds when every bit it
//! demands is a GF(2) combination of the received parities and its own
//! side information. The least feasible row count is found by enumerating
//! *row spaces* rather than matrices — each candidate subspace is visited
//! exactly once via its canonical reduced row-echelon basis, in ascending
//! dimension — so the first hit is the exact scalar-linear optimum.
//!
//! This is deliberately independent of the rest of the crate: it shares no
//! search state with the bound or heuristic modules, which is what makes
//! sandwich tests (`lower bound ≤ oracle ≤ heuristic`) meaningful.
//!
//! Scope notes:
//!
//! * Zero-error scalar linear codes over GF(2) only. Fractional schemes
//!   can beat this optimum (the 5-cycle: scalar 3 vs fractional 5/2), so
//!   report the quantity as "exact scalar-linear", never "capacity".
//! * The subspace count grows like `2^(s²/4)`, so the search is guarded by
//!   a caller-supplied bit budget ([`DEFAULT_MAX_BITS`] by default).

use crate::instance::Instance;
use crate::GuardViolation;

/// Default guard for [`exact_scalar_linear`]: 9-bit instances mean ~8.4M
/// candidate subspaces, the most a desk-scale run should attempt.
pub const DEFAULT_MAX_BITS: usize = 9;

/// Rows are bit-packed: column `k` (bit id `k`) is the `1 << k` bit, which
/// caps the search at 63 columns regardless of the requested guard.
const PACKING_LIMIT: usize = 63;

// ============================================================================
// Codes and decodability
// ============================================================================

/// A scalar linear code: one GF(2) parity row per transmission.
///
/// Witnesses produced by [`exact_scalar_linear`] are the canonical reduced
/// row-echelon basis of their row space (pivot positions strictly
/// ascending, each pivot column zeroed elsewhere). Hand-built codes passed
/// to [`decodable`] may use any spanning rows — decodability only depends
/// on the row space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    /// Parity rows; bit `k` of a row means column `k` (source bit `k`).
    pub rows: Vec<u64>,
    /// Number of columns (source bits).
    pub s: usize,
}

impl LinearCode {
    /// Rows rendered as 0/1 strings, leftmost character = column 0.
    #[must_use]
    pub fn row_strings(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|row| (0..self.s).map(|k| if row >> k & 1 == 1 { '1' } else { '0' }).collect())
            .collect()
    }

    /// 0-based pivot column of each row (its lowest set column).
    ///
    /// Meaningful for the echelon-form witnesses the search returns.
    #[must_use]
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rows.iter().map(|row| row.trailing_zeros() as usize).collect()
    }
}

/// Reduces `v` against a lowest-set-bit-indexed basis; returns the residue.
#[inline]
fn reduce(mut v: u64, basis: &[u64; 64]) -> u64 {
    while v != 0 {
        let lead = v.trailing_zeros() as usize;
        if basis[lead] == 0 {
            break;
        }
        v ^= basis[lead];
    }
    v
}

/// Inserts `v` into the basis unless it reduces to zero.
#[inline]
fn insert(v: u64, basis: &mut [u64; 64]) {
    let r = reduce(v, basis);
    if r != 0 {
        basis[r.trailing_zeros() as usize] = r;
    }
}

/// Whether every decoder can recover all its demanded bits from the coded
/// rows plus its side information.
///
/// Decoder `d` succeeds when each demanded unit vector lies in
/// `rowspace(code) + span{e_y : y held by d}` — checked by zeroing `d`'s
/// held columns out of the rows and reducing each demanded unit vector to
/// nothing against the projected basis.
///
/// # Panics
///
/// Panics if `code.s` differs from the instance's bit count (the rows
/// would be over the wrong column universe).
#[must_use]
pub fn decodable(inst: &Instance, code: &LinearCode) -> bool {
    assert_eq!(
        code.s,
        inst.s(),
        "code has {} columns but the instance has {} bits",
        code.s,
        inst.s()
    );
    assert!(code.s <= PACKING_LIMIT, "rows pack at most {PACKING_LIMIT} columns");
    for d in 1..=inst.m() {
        let mut y_mask = 0u64;
        for k in inst.side_info(d).iter() {
            y_mask |= 1 << k;
        }
        let mut basis = [0u64; 64];
        for &row in &code.rows {
            insert(row & !y_mask, &mut basis);
        }
        for b in inst.demand(d).iter() {
            if reduce(1 << b, &basis) != 0 {
                return false;
            }
        }
    }
    true
}

// ============================================================================
// Exhaustive search
// ============================================================================

/// Outcome of the exhaustive scalar-linear search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactResult {
    /// Least number of transmissions any scalar linear GF(2) code needs.
    pub rate: usize,
    /// First feasible code found: the canonical echelon basis of the
    /// lexicographically first decodable `rate`-dimensional row space.
    pub code: LinearCode,
    /// Candidate subspaces tested, including the winner.
    pub examined: u64,
}

/// Next bitmask with the same popcount (Gosper's hack).
#[inline]
fn next_same_weight(v: u64) -> u64 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    (((r ^ v) >> 2) / c) | r
}

/// Exact minimum scalar-linear rate, by enumerating row spaces in
/// ascending dimension.
///
/// Within a dimension, pivot-column sets advance in ascending bitmask
/// order and the non-pivot entries of the echelon basis count up as a
/// binary odometer, so the search order — and therefore the witness — is
/// deterministic. The identity at dimension `s` is always decodable,
/// bounding the search. Nothing here consults the bound or heuristic
/// modules.
///
/// # Errors
///
/// Returns a [`GuardViolation`] when the instance has more than
/// `max_bits` bits (or more than 63, the row-packing cap).
///
/// # Example
///
/// ```
/// use indexcode::fixtures::directed_cycle;
/// use indexcode::oracle::{decodable, exact_scalar_linear, DEFAULT_MAX_BITS};
///
/// let inst = directed_cycle(4);
/// let found = exact_scalar_linear(&inst, DEFAULT_MAX_BITS).unwrap();
/// assert_eq!(found.rate, 3);
/// assert!(decodable(&inst, &found.code));
/// ```
pub fn exact_scalar_linear(
    inst: &Instance,
    max_bits: usize,
) -> Result<ExactResult, GuardViolation> {
    let s = inst.s();
    let limit = max_bits.min(PACKING_LIMIT);
    if s > limit {
        return Err(GuardViolation {
            operation: "exhaustive scalar-linear search",
            quantity: "bits",
            actual: s as u64,
            limit: limit as u64,
        });
    }

    let mut examined = 0u64;
    for r in 0..=s {
        if let Some(code) = search_dimension(inst, s, r, &mut examined) {
            return Ok(ExactResult { rate: r, code, examined });
        }
    }
    unreachable!("the identity code at dimension s always decodes");
}

/// Tests every `r`-dimensional row space of GF(2)^`s` in canonical order;
/// returns the first decodable basis.
fn search_dimension(inst: &Instance, s: usize, r: usize, examined: &mut u64) -> Option<LinearCode> {
    if r == 0 {
        *examined += 1;
        let empty = LinearCode { rows: Vec::new(), s };
        return decodable(inst, &empty).then_some(empty);
    }

    let full = 1u64 << s;
    let mut pivots = (1u64 << r) - 1;
    while pivots < full {
        // Echelon skeleton: row i starts as its pivot column's unit vector.
        let cols: Vec<u32> = (0..s as u32).filter(|&c| pivots >> c & 1 == 1).collect();
        let mut rows: Vec<u64> = cols.iter().map(|&c| 1u64 << c).collect();

        // Free entries (row-major, columns ascending): positions right of
        // the row's pivot in non-pivot columns. They count up as a binary
        // odometer, each step toggling one entry in place.
        let free: Vec<(usize, u64)> = cols
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| {
                (c + 1..s as u32)
                    .filter(|&j| pivots >> j & 1 == 0)
                    .map(move |j| (i, 1u64 << j))
            })
            .collect();
        let mut odometer = vec![false; free.len()];

        loop {
            *examined += 1;
            let candidate = LinearCode { rows: rows.clone(), s };
            if decodable(inst, &candidate) {
                return Some(candidate);
            }
            // Advance the odometer; carry clears entries back to zero.
            let Some(flip) = odometer.iter().position(|&set| !set) else {
                break;
            };
            for (entry, &(row, bit)) in odometer.iter_mut().zip(&free).take(flip + 1) {
                *entry = !*entry;
                rows[row] ^= bit;
            }
        }
        pivots = next_same_weight(pivots);
    }
    None
}

// ============================================================================
// Subspace counting
// ============================================================================

/// Number of subspaces of GF(2)^`s` — the exact candidate total the
/// search examines when nothing short of the full space decodes.
///
/// Computed from the Gaussian binomial recurrence
/// `[n r] = [n−1 r−1] + 2^r · [n−1 r]`.
///
/// # Panics
///
/// Panics for `s > 22`, where the count overflows `u128`.
#[must_use]
pub fn count_subspaces(s: usize) -> u128 {
    assert!(s <= 22, "subspace count of GF(2)^{s} overflows u128");
    // row[r] = [n r]_2, built up from n = 0.
    let mut row = vec![0u128; s + 2];
    row[0] = 1;
    for _ in 0..s {
        for r in (1..row.len()).rev() {
            row[r] = row[r - 1] + (row[r] << r);
        }
    }
    row.iter().take(s + 1).sum()
}

// ============================================================================
// Tests
// ============================================================================
