//! The problem datum: decoders, source bits, demands, and side information.
//!
//! An [`Instance`] is a broadcast problem with `m` decoders (`m <= 16`) and
//! an ordered list of `s` source bits (`s <= 4096`). Every bit carries two
//! disjoint decoder sets: `need` (who demands it) and `has` (who already
//! holds it as side information). The same bit may be demanded by several
//! decoders, so demands are groupcast, not merely unicast.
//!
//! Derived views used by the algorithms:
//!
//! - `Y_d` = [`Instance::side_info`]: the bits decoder `d` holds.
//! - `f_d` = [`Instance::demand`]: the bits decoder `d` wants.
//! - [`Instance::group_by_absence`]: bits grouped by the set `J` of decoders
//!   that do *not* hold them (`J = complement(has)`).
//!
//! The module also provides the line-oriented text format ([`parse`] /
//! [`render`]), [`normalize`] (purge undemanded bits, merge decoders with
//! identical side information), and structural classification
//! ([`Instance::classify`]).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::sets::{DecoderId, DecoderSet, SourceSet, MAX_DECODERS};

/// Maximum number of source bits in an instance.
pub const MAX_BITS: usize = 4096;

/// 0-based index of a source bit (file order is canonical).
pub type BitId = usize;

// ============================================================================
// Core types
// ============================================================================

/// One source bit: a label plus its demand and side-information sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSpec {
    /// Unique textual label (single token, e.g. `b3`).
    pub label: String,
    /// Decoders that demand this bit. Empty only before normalization.
    pub need: DecoderSet,
    /// Decoders that hold this bit as side information. Disjoint from `need`.
    pub has: DecoderSet,
}

/// A groupcast broadcast problem with side information.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    m: u8,
    bits: Vec<BitSpec>,
}

/// Errors from [`Instance::new`] and the other constructors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    /// Decoder count outside `1..=16`.
    #[error("decoder count {0} outside 1..={max}", max = MAX_DECODERS)]
    DecoderCount(u8),
    /// More than [`MAX_BITS`] source bits.
    #[error("instance has {0} bits (limit {max})", max = MAX_BITS)]
    TooManyBits(usize),
    /// A need/has set mentions a decoder index above `m`.
    #[error("bit `{label}` references decoder {index}, but there are only {m} decoders")]
    DecoderOutOfRange { label: String, index: DecoderId, m: u8 },
    /// A bit is simultaneously demanded and held by some decoder.
    #[error("bit `{label}` is both needed and held by decoder(s) {overlap}")]
    NeedHasOverlap { label: String, overlap: DecoderSet },
    /// Two bits share a label.
    #[error("duplicate bit label `{0}`")]
    DuplicateLabel(String),
    /// A label is empty or contains whitespace or `#`.
    #[error("invalid bit label `{0}` (must be a single token without `#`)")]
    BadLabel(String),
    /// A permutation argument does not permute `1..=m`.
    #[error("not a permutation of 1..={0}")]
    NotAPermutation(u8),
}

impl Instance {
    /// Creates an instance after validating all structural invariants.
    ///
    /// Bits with empty `need` sets are accepted here (they occur in freshly
    /// parsed files) and are removed by [`normalize`].
    ///
    /// # Errors
    ///
    /// Returns an [`InstanceError`] if any invariant fails: `1 <= m <= 16`,
    /// `s <= 4096`, all indices in range, `need` and `has` disjoint per bit,
    /// labels unique single tokens.
    pub fn new(m: u8, bits: Vec<BitSpec>) -> Result<Self, InstanceError> {
        if m == 0 || m > MAX_DECODERS {
            return Err(InstanceError::DecoderCount(m));
        }
        if bits.len() > MAX_BITS {
            return Err(InstanceError::TooManyBits(bits.len()));
        }
        let all = DecoderSet::full(m);
        let mut seen = std::collections::HashSet::new();
        for b in &bits {
            if b.label.is_empty()
                || b.label.contains(char::is_whitespace)
                || b.label.contains('#')
            {
                return Err(InstanceError::BadLabel(b.label.clone()));
            }
            if !seen.insert(b.label.clone()) {
                return Err(InstanceError::DuplicateLabel(b.label.clone()));
            }
            for set in [b.need, b.has] {
                if !set.is_subset(all) {
                    let index = set.difference(all).lowest().expect("nonempty difference");
                    return Err(InstanceError::DecoderOutOfRange {
                        label: b.label.clone(),
                        index,
                        m,
                    });
                }
            }
            let overlap = b.need.intersection(b.has);
            if !overlap.is_empty() {
                return Err(InstanceError::NeedHasOverlap {
                    label: b.label.clone(),
                    overlap,
                });
            }
        }
        Ok(Self { m, bits })
    }

    /// Convenience constructor for fixtures and tests: bits are labeled
    /// `b1, b2, ...` in order.
    ///
    /// # Errors
    ///
    /// Same validation as [`Instance::new`].
    pub fn from_need_has(
        m: u8,
        sets: impl IntoIterator<Item = (DecoderSet, DecoderSet)>,
    ) -> Result<Self, InstanceError> {
        let bits = sets
            .into_iter()
            .enumerate()
            .map(|(k, (need, has))| BitSpec {
                label: format!("b{}", k + 1),
                need,
                has,
            })
            .collect();
        Self::new(m, bits)
    }

    /// Number of decoders.
    #[inline]
    #[must_use]
    pub fn m(&self) -> u8 {
        self.m
    }

    /// Number of source bits.
    #[inline]
    #[must_use]
    pub fn s(&self) -> usize {
        self.bits.len()
    }

    /// The bit with the given 0-based id.
    #[inline]
    #[must_use]
    pub fn bit(&self, k: BitId) -> &BitSpec {
        &self.bits[k]
    }

    /// All bits in canonical (file) order.
    #[inline]
    #[must_use]
    pub fn bits(&self) -> &[BitSpec] {
        &self.bits
    }

    /// Iterates over decoder ids `1..=m`.
    pub fn decoders(&self) -> impl Iterator<Item = DecoderId> {
        1..=self.m
    }

    /// `Y_d`: the set of bits decoder `d` holds as side information.
    #[must_use]
    pub fn side_info(&self, d: DecoderId) -> SourceSet {
        let mut y = SourceSet::empty(self.s());
        for (k, b) in self.bits.iter().enumerate() {
            if b.has.contains(d) {
                y.insert(k);
            }
        }
        y
    }

    /// `f_d`: the set of bits decoder `d` demands.
    #[must_use]
    pub fn demand(&self, d: DecoderId) -> SourceSet {
        let mut f = SourceSet::empty(self.s());
        for (k, b) in self.bits.iter().enumerate() {
            if b.need.contains(d) {
                f.insert(k);
            }
        }
        f
    }

    /// Number of bits decoder `d` does *not* hold (`s - |Y_d|`).
    #[must_use]
    pub fn cond_count(&self, d: DecoderId) -> usize {
        self.s() - self.side_info(d).len()
    }

    /// Groups bit ids by the decoder set that lacks them:
    /// key `J = complement(has)`, value = bits with that exact absence set,
    /// in file order.
    #[must_use]
    pub fn group_by_absence(&self) -> BTreeMap<DecoderSet, Vec<BitId>> {
        let mut groups: BTreeMap<DecoderSet, Vec<BitId>> = BTreeMap::new();
        for (k, b) in self.bits.iter().enumerate() {
            groups.entry(b.has.complement(self.m)).or_default().push(k);
        }
        groups
    }

    /// True if every bit is demanded by at least one decoder and no two
    /// decoders hold identical side information — the state [`normalize`]
    /// establishes.
    #[must_use]
    pub fn is_normalized(&self) -> bool {
        if self.bits.iter().any(|b| b.need.is_empty()) {
            return false;
        }
        let infos: Vec<SourceSet> = self.decoders().map(|d| self.side_info(d)).collect();
        for i in 0..infos.len() {
            for j in i + 1..infos.len() {
                if infos[i] == infos[j] {
                    return false;
                }
            }
        }
        true
    }

    /// Applies a decoder relabeling: decoder `d` becomes `perm[d - 1]`.
    /// Bit order and labels are unchanged.
    ///
    /// # Errors
    ///
    /// Returns [`InstanceError::NotAPermutation`] if `perm` is not a
    /// permutation of `1..=m`.
    pub fn relabel_decoders(&self, perm: &[DecoderId]) -> Result<Self, InstanceError> {
        if perm.len() != self.m as usize
            || DecoderSet::from_ids(perm.iter().copied()) != DecoderSet::full(self.m)
        {
            return Err(InstanceError::NotAPermutation(self.m));
        }
        let map = |set: DecoderSet| DecoderSet::from_ids(set.iter().map(|d| perm[d as usize - 1]));
        let bits = self
            .bits
            .iter()
            .map(|b| BitSpec {
                label: b.label.clone(),
                need: map(b.need),
                has: map(b.has),
            })
            .collect();
        Self::new(self.m, bits)
    }
}

// ============================================================================
// Classification
// ============================================================================

/// Structural classes an instance may fall into (all computed on the
/// normalized instance).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    /// Every bit is demanded by exactly one decoder and every decoder
    /// demands exactly one bit.
    pub unicast: bool,
    /// The bipartite side-information/demand digraph has no directed cycle.
    pub acyclic: bool,
    /// Unicast, every decoder holds exactly one bit, and the
    /// hold-then-demand relation forms a single cycle through all decoders.
    pub directed_cycle: bool,
    /// Every bit is held by all, all-but-one, all-but-two, or none of the
    /// decoders — the "near-complete side information" class with a
    /// closed-form optimum.
    pub near_complete: bool,
}

impl Instance {
    /// Classifies the instance structurally. See [`Classification`].
    #[must_use]
    pub fn classify(&self) -> Classification {
        Classification {
            unicast: self.is_unicast(),
            acyclic: self.is_acyclic(),
            directed_cycle: self.is_directed_cycle(),
            near_complete: self.is_near_complete(),
        }
    }

    fn is_unicast(&self) -> bool {
        let every_bit_single = self.bits.iter().all(|b| b.need.len() == 1);
        let mut demand_count = vec![0usize; self.m as usize + 1];
        for b in &self.bits {
            for d in b.need.iter() {
                demand_count[d as usize] += 1;
            }
        }
        every_bit_single && (1..=self.m as usize).all(|d| demand_count[d] == 1)
    }

    /// Cycle detection on the bipartite digraph with a node per decoder and
    /// per bit, edges decoder → bit it holds and bit → decoder that demands
    /// it. Iterative three-color DFS.
    fn is_acyclic(&self) -> bool {
        let m = self.m as usize;
        let s = self.s();
        // Node ids: 0..m are decoders (id d-1), m..m+s are bits (m + k).
        let n = m + s;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, b) in self.bits.iter().enumerate() {
            for d in b.has.iter() {
                adj[d as usize - 1].push(m + k);
            }
            for d in b.need.iter() {
                adj[m + k].push(d as usize - 1);
            }
        }
        let mut color = vec![0u8; n]; // 0 white, 1 on stack, 2 done
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            // (node, next child index)
            let mut stack = vec![(start, 0usize)];
            color[start] = 1;
            while let Some(&mut (v, ref mut ci)) = stack.last_mut() {
                if *ci < adj[v].len() {
                    let w = adj[v][*ci];
                    *ci += 1;
                    match color[w] {
                        0 => {
                            color[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return false,
                        _ => {}
                    }
                } else {
                    color[v] = 2;
                    stack.pop();
                }
            }
        }
        true
    }

    fn is_directed_cycle(&self) -> bool {
        if self.m < 2 || !self.is_unicast() {
            return false;
        }
        // Unicast implies s == m and a demand bijection decoder <-> bit.
        let mut held_by_one = vec![None; self.s()];
        for (k, b) in self.bits.iter().enumerate() {
            if b.has.len() != 1 {
                return false;
            }
            held_by_one[k] = b.has.lowest();
        }
        let mut holds: Vec<Option<BitId>> = vec![None; self.m as usize + 1];
        for (k, holder) in held_by_one.iter().enumerate() {
            let h = holder.expect("checked") as usize;
            if holds[h].is_some() {
                return false; // some decoder holds two bits
            }
            holds[h] = Some(k);
        }
        let demander = |k: BitId| self.bits[k].need.lowest().expect("unicast");
        // Follow: decoder -> the demander of the bit it holds.
        let mut seen = DecoderSet::EMPTY;
        let mut d: DecoderId = 1;
        for _ in 0..self.m {
            if seen.contains(d) {
                return false; // cycle closed early
            }
            seen.insert(d);
            let Some(k) = holds[d as usize] else {
                return false; // a decoder holds nothing
            };
            d = demander(k);
        }
        d == 1 && seen == DecoderSet::full(self.m)
    }

    fn is_near_complete(&self) -> bool {
        self.bits.iter().all(|b| {
            let h = b.has.len();
            let m = u32::from(self.m);
            h == 0 || h == m || h + 1 == m || h + 2 == m
        })
    }
}

// ============================================================================
// Normalization
// ============================================================================

/// Options for [`normalize`].
#[derive(Clone, Copy, Debug)]
pub struct NormalizeOptions {
    /// Merge decoders whose side-information sets coincide, unioning their
    /// demands (on by default).
    pub merge_identical_side_info: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            merge_identical_side_info: true,
        }
    }
}

/// A non-fatal event reported by [`normalize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    /// A bit demanded by nobody was removed.
    PurgedUndemanded { label: String },
    /// Two decoders held identical side information; the higher index was
    /// folded into the lower one (demands unioned, indices compacted).
    MergedDecoders { kept: DecoderId, dropped: DecoderId },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::PurgedUndemanded { label } => {
                write!(f, "bit `{label}` is demanded by nobody; removed")
            }
            Warning::MergedDecoders { kept, dropped } => write!(
                f,
                "decoders {kept} and {dropped} hold identical side information; \
                 merged into {kept}"
            ),
        }
    }
}

/// Result of [`normalize`].
#[derive(Clone, Debug)]
pub struct Normalized {
    /// The normalized instance.
    pub instance: Instance,
    /// Everything that was changed, in order.
    pub warnings: Vec<Warning>,
}

/// Normalizes an instance: removes undemanded bits, then (optionally) merges
/// decoders with identical side information and compacts decoder indices
/// preserving relative order.
///
/// Merging decoders `i < j` with `Y_i = Y_j` unions their demands into `i`;
/// `j` disappears and every higher index shifts down. Side-information sets
/// of the surviving decoders are unchanged, so a single grouping pass
/// suffices.
#[must_use]
pub fn normalize(inst: &Instance, opts: NormalizeOptions) -> Normalized {
    let mut warnings = Vec::new();

    // Pass 1: purge undemanded bits.
    let mut bits: Vec<BitSpec> = Vec::with_capacity(inst.s());
    for b in inst.bits() {
        if b.need.is_empty() {
            warnings.push(Warning::PurgedUndemanded {
                label: b.label.clone(),
            });
        } else {
            bits.push(b.clone());
        }
    }

    let mut m = inst.m();
    if opts.merge_identical_side_info {
        // Pass 2: group decoders by side-information set over the surviving
        // bits; the lowest index of each group survives.
        let side_of = |d: DecoderId| -> Vec<BitId> {
            bits.iter()
                .enumerate()
                .filter(|(_, b)| b.has.contains(d))
                .map(|(k, _)| k)
                .collect()
        };
        let mut rep_of: BTreeMap<Vec<BitId>, DecoderId> = BTreeMap::new();
        let mut replace: Vec<DecoderId> = (0..=m).collect(); // identity, 1-based
        for d in 1..=m {
            let key = side_of(d);
            match rep_of.get(&key) {
                Some(&kept) => {
                    replace[d as usize] = kept;
                    warnings.push(Warning::MergedDecoders { kept, dropped: d });
                }
                None => {
                    rep_of.insert(key, d);
                }
            }
        }
        // Compact surviving indices, preserving order.
        let survivors: Vec<DecoderId> = (1..=m).filter(|&d| replace[d as usize] == d).collect();
        let mut new_id = vec![0 as DecoderId; m as usize + 1];
        for (pos, &d) in survivors.iter().enumerate() {
            new_id[d as usize] = pos as DecoderId + 1;
        }
        let final_id = |d: DecoderId| new_id[replace[d as usize] as usize];
        for b in &mut bits {
            b.need = DecoderSet::from_ids(b.need.iter().map(final_id));
            b.has = DecoderSet::from_ids(b.has.iter().map(final_id));
        }
        m = survivors.len() as u8;
    }

    let instance = Instance::new(m, bits).expect("normalization preserves validity");
    debug_assert!(
        !opts.merge_identical_side_info || instance.is_normalized(),
        "normalize must produce a normalized instance"
    );
    Normalized { instance, warnings }
}

// ============================================================================
// Text format
// ============================================================================

/// Errors from [`parse`], with 1-based line and column positions.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    /// The first directive must be `decoders <m>`.
    #[error("line {line}: expected `decoders <m>` before any `bit` line")]
    MissingHeader { line: usize },
    /// A second `decoders` directive appeared.
    #[error("line {line}: repeated `decoders` directive")]
    RepeatedHeader { line: usize },
    /// The decoder count is not an integer in `1..=16`.
    #[error("line {line}, col {col}: invalid decoder count `{token}` (want 1..={max})", max = MAX_DECODERS)]
    BadDecoderCount { line: usize, col: usize, token: String },
    /// An unknown directive.
    #[error("line {line}, col {col}: unknown directive `{token}` (expected `bit`)")]
    UnknownDirective { line: usize, col: usize, token: String },
    /// A keyword (`need` / `has`) was missing or misplaced.
    #[error("line {line}, col {col}: expected `{expected}`{}", found_fmt(.found))]
    ExpectedKeyword {
        line: usize,
        col: usize,
        expected: &'static str,
        found: Option<String>,
    },
    /// A decoder index was not an integer.
    #[error("line {line}, col {col}: invalid decoder index `{token}`")]
    BadIndex { line: usize, col: usize, token: String },
    /// A decoder index exceeded `m`.
    #[error("line {line}, col {col}: decoder {index} out of range (m = {m})")]
    IndexOutOfRange { line: usize, col: usize, index: u64, m: u8 },
    /// Structural validation failed after reading all lines.
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: InstanceError,
    },
}

fn found_fmt(found: &Option<String>) -> String {
    match found {
        Some(tok) => format!(", found `{tok}`"),
        None => ", found end of line".to_string(),
    }
}

/// One whitespace-separated token plus its 1-based starting column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        // Positions are byte offsets; tokens are unique slices of `line`.
        let col = tok.as_ptr() as usize - line.as_ptr() as usize + 1;
        (col, tok)
    })
}

/// Parses the line-oriented instance format:
///
/// ```text
/// # comment
/// decoders 4
/// bit b1 need 1 has 2
/// bit b5 need 4 has
/// ```
///
/// `#` starts a comment (full line or trailing). Decoder indices are
/// 1-based. The `has` keyword is mandatory even when the list is empty.
/// A bit with an empty `need` list parses successfully and is removed by
/// [`normalize`].
///
/// # Errors
///
/// Returns a [`ParseError`] carrying the offending line/column.
pub fn parse(text: &str) -> Result<Instance, ParseError> {
    let mut m: Option<u8> = None;
    let mut bits: Vec<BitSpec> = Vec::new();
    let mut bit_lines: Vec<usize> = Vec::new();

    for (li, raw) in text.lines().enumerate() {
        let line_no = li + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut toks = tokens(line).peekable();
        let Some(&(dcol, directive)) = toks.peek() else {
            continue; // blank or comment-only line
        };
        toks.next();
        match directive {
            "decoders" => {
                if m.is_some() {
                    return Err(ParseError::RepeatedHeader { line: line_no });
                }
                let (col, tok) = toks.next().ok_or(ParseError::BadDecoderCount {
                    line: line_no,
                    col: dcol + directive.len(),
                    token: String::new(),
                })?;
                let value: u8 = tok
                    .parse()
                    .ok()
                    .filter(|v| (1..=MAX_DECODERS).contains(v))
                    .ok_or_else(|| ParseError::BadDecoderCount {
                        line: line_no,
                        col,
                        token: tok.to_string(),
                    })?;
                if let Some(&(col, tok)) = toks.peek() {
                    return Err(ParseError::UnknownDirective {
                        line: line_no,
                        col,
                        token: tok.to_string(),
                    });
                }
                m = Some(value);
            }
            "bit" => {
                let Some(m) = m else {
                    return Err(ParseError::MissingHeader { line: line_no });
                };
                let (_, label) = toks.next().ok_or(ParseError::ExpectedKeyword {
                    line: line_no,
                    col: dcol + directive.len(),
                    expected: "<label>",
                    found: None,
                })?;
                fn expect_kw<'t>(
                    expected: &'static str,
                    toks: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'t str)>>,
                    line_no: usize,
                    line_end: usize,
                ) -> Result<(), ParseError> {
                    match toks.next() {
                        Some((_, tok)) if tok == expected => Ok(()),
                        Some((col, tok)) => Err(ParseError::ExpectedKeyword {
                            line: line_no,
                            col,
                            expected,
                            found: Some(tok.to_string()),
                        }),
                        None => Err(ParseError::ExpectedKeyword {
                            line: line_no,
                            col: line_end,
                            expected,
                            found: None,
                        }),
                    }
                }
                fn read_ids<'t>(
                    stop: Option<&'static str>,
                    toks: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'t str)>>,
                    line_no: usize,
                    m: u8,
                ) -> Result<DecoderSet, ParseError> {
                    let mut set = DecoderSet::EMPTY;
                    while let Some(&(col, tok)) = toks.peek() {
                        if Some(tok) == stop {
                            break;
                        }
                        toks.next();
                        let idx: u64 = tok.parse().map_err(|_| ParseError::BadIndex {
                            line: line_no,
                            col,
                            token: tok.to_string(),
                        })?;
                        if idx == 0 || idx > u64::from(m) {
                            return Err(ParseError::IndexOutOfRange {
                                line: line_no,
                                col,
                                index: idx,
                                m,
                            });
                        }
                        set.insert(idx as DecoderId);
                    }
                    Ok(set)
                }

                let line_end = line.len() + 1;
                expect_kw("need", &mut toks, line_no, line_end)?;
                let need = read_ids(Some("has"), &mut toks, line_no, m)?;
                expect_kw("has", &mut toks, line_no, line_end)?;
                let has = read_ids(None, &mut toks, line_no, m)?;
                bits.push(BitSpec {
                    label: label.to_string(),
                    need,
                    has,
                });
                bit_lines.push(line_no);
            }
            _ => {
                return Err(ParseError::UnknownDirective {
                    line: line_no,
                    col: dcol,
                    token: directive.to_string(),
                });
            }
        }
    }

    let Some(m) = m else {
        return Err(ParseError::MissingHeader {
            line: text.lines().count() + 1,
        });
    };
    let labels: Vec<String> = bits.iter().map(|b| b.label.clone()).collect();
    Instance::new(m, bits).map_err(|source| {
        // Point at the offending bit line when the error names a label.
        let line_of = |label: &str| {
            labels
                .iter()
                .zip(&bit_lines)
                .rfind(|(l, _)| l.as_str() == label)
                .map_or(1, |(_, &l)| l)
        };
        let line = match &source {
            InstanceError::DuplicateLabel(label)
            | InstanceError::BadLabel(label)
            | InstanceError::DecoderOutOfRange { label, .. }
            | InstanceError::NeedHasOverlap { label, .. } => line_of(label),
            _ => bit_lines.last().copied().unwrap_or(1),
        };
        ParseError::Invalid { line, source }
    })
}

/// Renders an instance in the text format accepted by [`parse`].
/// `parse(&render(inst))` reproduces `inst` exactly.
#[must_use]
pub fn render(inst: &Instance) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "decoders {}", inst.m()).unwrap();
    for b in inst.bits() {
        write!(out, "bit {} need", b.label).unwrap();
        for d in b.need.iter() {
            write!(out, " {d}").unwrap();
        }
        write!(out, " has").unwrap();
        for d in b.has.iter() {
            write!(out, " {d}").unwrap();
        }
        out.push('\n');
    }
    out
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(ids: &[DecoderId]) -> DecoderSet {
        DecoderSet::from_ids(ids.iter().copied())
    }

    /// Four decoders, six bits; decoder 2 holds the first four bits and
    /// decoder 4 holds nothing.
    fn sample() -> Instance {
        Instance::from_need_has(
            4,
            [
                (ds(&[1]), ds(&[2])),
                (ds(&[3]), ds(&[2])),
                (ds(&[3]), ds(&[1, 2])),
                (ds(&[1]), ds(&[2, 3])),
                (ds(&[4]), ds(&[])),
                (ds(&[2]), ds(&[])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn side_info_and_demand_views() {
        let inst = sample();
        assert_eq!(inst.side_info(2).iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(inst.side_info(4).len(), 0);
        assert_eq!(inst.demand(1).iter().collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(inst.demand(4).iter().collect::<Vec<_>>(), vec![4]);
        assert_eq!(inst.cond_count(2), 2);
        assert_eq!(inst.cond_count(4), 6);
    }

    #[test]
    fn absence_groups_partition_the_bits() {
        let inst = sample();
        let groups = inst.group_by_absence();
        let get = |ids: &[DecoderId]| groups.get(&ds(ids)).cloned().unwrap_or_default();
        assert_eq!(get(&[1, 3, 4]), vec![0, 1]);
        assert_eq!(get(&[3, 4]), vec![2]);
        assert_eq!(get(&[1, 4]), vec![3]);
        assert_eq!(get(&[1, 2, 3, 4]), vec![4, 5]);
        assert_eq!(groups.values().map(Vec::len).sum::<usize>(), inst.s());
    }

    #[test]
    fn construction_rejects_invalid_shapes() {
        assert_eq!(
            Instance::from_need_has(0, []).unwrap_err(),
            InstanceError::DecoderCount(0)
        );
        assert!(matches!(
            Instance::from_need_has(2, [(ds(&[1]), ds(&[3]))]).unwrap_err(),
            InstanceError::DecoderOutOfRange { index: 3, .. }
        ));
        assert!(matches!(
            Instance::from_need_has(3, [(ds(&[1, 2]), ds(&[2, 3]))]).unwrap_err(),
            InstanceError::NeedHasOverlap { .. }
        ));
        let dup = Instance::new(
            2,
            vec![
                BitSpec { label: "x".into(), need: ds(&[1]), has: ds(&[]) },
                BitSpec { label: "x".into(), need: ds(&[2]), has: ds(&[]) },
            ],
        );
        assert_eq!(dup.unwrap_err(), InstanceError::DuplicateLabel("x".into()));
    }

    #[test]
    fn parse_happy_path_and_roundtrip() {
        let text = "\
# demo instance
decoders 4

bit b1 need 1 has 2
bit b2 need 3 has 2   # trailing comment
bit b5 need 4 has
";
        let inst = parse(text).unwrap();
        assert_eq!(inst.m(), 4);
        assert_eq!(inst.s(), 3);
        assert_eq!(inst.bit(2).label, "b5");
        assert!(inst.bit(2).has.is_empty());

        let text2 = render(&inst);
        assert_eq!(parse(&text2).unwrap(), inst);
    }

    #[test]
    fn parse_reports_positions() {
        match parse("decoders 99\n") {
            Err(ParseError::BadDecoderCount { line: 1, col: 10, token }) => {
                assert_eq!(token, "99");
            }
            other => panic!("unexpected: {other:?}"),
        }
        match parse("decoders 3\nbit a need 1 has 4\n") {
            Err(ParseError::IndexOutOfRange { line: 2, index: 4, m: 3, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        match parse("decoders 3\nbit a hax 1\n") {
            Err(ParseError::ExpectedKeyword { expected: "need", found: Some(f), .. }) => {
                assert_eq!(f, "hax");
            }
            other => panic!("unexpected: {other:?}"),
        }
        match parse("decoders 2\nbit a need 1\n") {
            Err(ParseError::ExpectedKeyword { expected: "has", found: None, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        match parse("bit a need 1 has\n") {
            Err(ParseError::MissingHeader { line: 1 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        match parse("decoders 2\nbit a need 2 has 1\nbit a need 1 has\n") {
            Err(ParseError::Invalid { line: 3, source: InstanceError::DuplicateLabel(_) }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn normalize_purges_and_merges() {
        // Bit u is undemanded; decoders 2 and 3 hold identical side info
        // ({u} differs only on the purged bit), decoder 4 holds nothing.
        let text = "\
decoders 4
bit a need 1 has 2 3
bit u need  has 3
bit c need 2 4 has 1
";
        let inst = parse(text).unwrap();
        let Normalized { instance, warnings } =
            normalize(&inst, NormalizeOptions::default());
        assert_eq!(
            warnings,
            vec![
                Warning::PurgedUndemanded { label: "u".into() },
                Warning::MergedDecoders { kept: 2, dropped: 3 },
            ]
        );
        assert_eq!(instance.m(), 3);
        assert_eq!(instance.s(), 2);
        // Old decoder 4 is now 3; old 3 merged into 2.
        assert_eq!(instance.bit(0).need, ds(&[1]));
        assert_eq!(instance.bit(0).has, ds(&[2]));
        assert_eq!(instance.bit(1).need, ds(&[2, 3]));
        assert_eq!(instance.bit(1).has, ds(&[1]));
        assert!(instance.is_normalized());

        // Merging disabled: both decoders survive.
        let keep = normalize(
            &inst,
            NormalizeOptions { merge_identical_side_info: false },
        );
        assert_eq!(keep.instance.m(), 4);
        assert_eq!(keep.warnings.len(), 1);
    }

    #[test]
    fn merge_unions_demands() {
        // Decoders 1 and 2 hold identical (empty) side info and demand
        // different bits: the merged decoder demands both.
        let text = "\
decoders 3
bit a need 1 has 3
bit b need 2 has 3
";
        let norm = normalize(&parse(text).unwrap(), NormalizeOptions::default());
        assert_eq!(norm.instance.m(), 2);
        assert_eq!(norm.instance.bit(0).need, ds(&[1]));
        assert_eq!(norm.instance.bit(1).need, ds(&[1]));
        assert_eq!(norm.instance.bit(0).has, ds(&[2]));
    }

    #[test]
    fn classify_sample_shapes() {
        let inst = sample();
        let c = inst.classify();
        assert!(!c.unicast && !c.acyclic && !c.directed_cycle && !c.near_complete);

        // Two-decoder chain: decoder 1 has nothing, decoder 2 holds the bit
        // decoder 1 wants.
        let chain = Instance::from_need_has(
            2,
            [(ds(&[1]), ds(&[2])), (ds(&[2]), ds(&[]))],
        )
        .unwrap();
        let c = chain.classify();
        assert!(c.unicast && c.acyclic && !c.directed_cycle);

        // Directed triangle.
        let tri = Instance::from_need_has(
            3,
            [
                (ds(&[1]), ds(&[3])),
                (ds(&[2]), ds(&[1])),
                (ds(&[3]), ds(&[2])),
            ],
        )
        .unwrap();
        let c = tri.classify();
        assert!(c.unicast && !c.acyclic && c.directed_cycle && c.near_complete);
    }

    #[test]
    fn near_complete_accepts_only_wide_side_info() {
        // m = 5: |has| = 3 (= m-2) fine, |has| = 2 breaks the class.
        let ok = Instance::from_need_has(5, [(ds(&[1]), ds(&[2, 3, 4]))]).unwrap();
        assert!(ok.classify().near_complete);
        let no = Instance::from_need_has(5, [(ds(&[1]), ds(&[2, 3]))]).unwrap();
        assert!(!no.classify().near_complete);
    }

    #[test]
    fn relabel_decoders_swaps_sets() {
        let inst = sample();
        let swapped = inst.relabel_decoders(&[3, 2, 1, 4]).unwrap();
        assert_eq!(swapped.bit(0).need, ds(&[3]));
        assert_eq!(swapped.bit(3).has, ds(&[1, 2]));
        assert_eq!(swapped.bit(4).need, ds(&[4]));
        assert!(inst.relabel_decoders(&[1, 1, 2, 3]).is_err());
    }
}
