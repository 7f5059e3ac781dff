//! Integral packing heuristic: place, rebalance, XOR-merge.
//!
//! The scheme builds one *message* per decoder subset `I`; message `I` is
//! served to exactly the decoders in `I` by an MDS code, so its cost is the
//! largest number of its components any single decoder in `I` is missing.
//! The heuristic has three phases:
//!
//! 1. **Place** ([`place`]): each source bit becomes a single-bit component
//!    in the message indexed by `need ∪ has` — the decoders that interact
//!    with it — or in the all-decoders message when nobody holds it.
//! 2. **Rebalance** ([`rebalance`]): a message is *balanced* when every
//!    decoder in its subset is missing equally many components. Working up
//!    the subset lattice, an unbalanced message repeatedly moves one
//!    component that its most-served decoder holds and its least-served
//!    decoder lacks into a one-larger superset message. Moving such a
//!    component lowers the maximum without hurting anyone else, and the
//!    receiving message serves a superset of the decoders, so correctness
//!    is preserved.
//! 3. **XOR-merge** ([`xor_merge`]): two components that were displaced
//!    from the same original message can share a slot when each one's
//!    demanders all hold the other; the merged component transmits the XOR
//!    and each demander strips the part it knows.
//!
//! Every phase appends [`TraceEvent`]s; [`replay`] rebuilds the final table
//! from the trace alone, which pins the heuristic's determinism in tests.
//! [`verify_feasible`] checks the end-to-end decoding story per decoder.

use std::collections::BTreeMap;
use std::fmt;

use crate::instance::{BitId, BitSpec, Instance};
use crate::sets::{DecoderId, DecoderSet, LevelOrdered};

// ============================================================================
// Components, messages, and the message table
// ============================================================================

/// One transmitted GF(2) symbol: the XOR of `bits`.
///
/// Component slots are what messages count; a decoder is "missing" a
/// component when it cannot reconstruct the XOR from its side information.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Constituent source bits, ascending. Disjoint across all components
    /// of a table, so `bits[0]` uniquely identifies a component.
    pub bits: Vec<BitId>,
    /// Decoders demanding at least one constituent.
    pub need: DecoderSet,
    /// Decoders holding *every* constituent (they can cancel the XOR).
    pub has: DecoderSet,
    /// The message where placement originally put this component.
    pub origin: DecoderSet,
    /// True once the component has been displaced by rebalancing.
    pub excess: bool,
}

impl Component {
    /// A fresh single-bit component for `bit`, placed at `origin`.
    #[must_use]
    pub fn single(bit: BitId, spec: &BitSpec, origin: DecoderSet) -> Self {
        Self {
            bits: vec![bit],
            need: spec.need,
            has: spec.has,
            origin,
            excess: false,
        }
    }

    /// The identifying bit: lowest constituent id.
    #[inline]
    #[must_use]
    pub fn ident(&self) -> BitId {
        self.bits[0]
    }

    /// Folds `other` into `self` (XOR of the two symbols).
    fn absorb(&mut self, other: Component) {
        debug_assert_eq!(self.origin, other.origin, "merge requires a common origin");
        let mut merged = Vec::with_capacity(self.bits.len() + other.bits.len());
        let (mut a, mut b) = (self.bits.iter().peekable(), other.bits.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            debug_assert_ne!(x, y, "components must not share bits");
            if x < y {
                merged.push(x);
                a.next();
            } else {
                merged.push(y);
                b.next();
            }
        }
        merged.extend(a.copied());
        merged.extend(b.copied());
        self.bits = merged;
        self.need = self.need.union(other.need);
        self.has = self.has.intersection(other.has);
        self.excess = self.excess && other.excess;
    }
}

/// An ordered list of components destined for one decoder subset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Message {
    /// Components in arrival order; rebalancing appends at the tail.
    pub components: Vec<Component>,
}

impl Message {
    /// How many components decoder `d` cannot reconstruct from side
    /// information — the residual uncertainty this message must resolve
    /// for `d`.
    #[must_use]
    pub fn count_unknown(&self, d: DecoderId) -> usize {
        self.components.iter().filter(|c| !c.has.contains(d)).count()
    }
}

/// Cost of transmitting `msg` to the decoders in `subset`: an MDS code lets
/// each listener recover everything once it receives as many symbols as it
/// is missing, so the message costs the worst listener's count.
#[must_use]
pub fn message_rate(subset: DecoderSet, msg: &Message) -> usize {
    subset
        .iter()
        .map(|d| msg.count_unknown(d))
        .max()
        .unwrap_or(0)
}

/// All messages of a transmission plan, keyed by decoder subset and
/// iterated in (size, bitmask) order — the order every phase processes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageTable {
    messages: BTreeMap<LevelOrdered, Message>,
}

impl MessageTable {
    /// An empty table.
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `component` at the tail of message `subset`, creating the
    /// message if absent.
    pub fn push(&mut self, subset: DecoderSet, component: Component) {
        self.messages
            .entry(LevelOrdered(subset))
            .or_default()
            .components
            .push(component);
    }

    /// The message for `subset`, if present.
    #[must_use]
    pub fn get(&self, subset: DecoderSet) -> Option<&Message> {
        self.messages.get(&LevelOrdered(subset))
    }

    /// Messages in (size, bitmask) order.
    pub fn iter(&self) -> impl Iterator<Item = (DecoderSet, &Message)> {
        self.messages.iter().map(|(k, v)| (k.0, v))
    }

    /// Number of (nonempty) messages.
    #[must_use]
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    /// True when the table holds no messages.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Total transmission cost: the sum of every message's rate.
    #[must_use]
    pub fn rate(&self) -> usize {
        self.iter().map(|(s, msg)| message_rate(s, msg)).sum()
    }

    /// Every constituent bit in the table, sorted. Equals `0..s` exactly
    /// once per bit for any table produced from an `s`-bit instance.
    #[must_use]
    pub fn bit_ids(&self) -> Vec<BitId> {
        let mut ids: Vec<BitId> = self
            .iter()
            .flat_map(|(_, m)| m.components.iter().flat_map(|c| c.bits.iter().copied()))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Removes and returns the component identified by `ident` from message
    /// `subset`, dropping the message if it empties.
    fn take_component(&mut self, subset: DecoderSet, ident: BitId) -> Component {
        let key = LevelOrdered(subset);
        let msg = self.messages.get_mut(&key).expect("message exists");
        let pos = msg
            .components
            .iter()
            .position(|c| c.ident() == ident)
            .expect("component exists");
        let c = msg.components.remove(pos);
        if msg.components.is_empty() {
            self.messages.remove(&key);
        }
        c
    }

    /// Merges component `drop` into component `keep` within message
    /// `subset` (both named by their identifying bit).
    fn merge_pair(&mut self, subset: DecoderSet, keep: BitId, drop: BitId) {
        let msg = self
            .messages
            .get_mut(&LevelOrdered(subset))
            .expect("message exists");
        let find = |msg: &Message, ident: BitId| {
            msg.components
                .iter()
                .position(|c| c.ident() == ident)
                .expect("component exists")
        };
        let dpos = find(msg, drop);
        let dropped = msg.components.remove(dpos);
        let kpos = find(msg, keep);
        msg.components[kpos].absorb(dropped);
    }
}

// ============================================================================
// Trace
// ============================================================================

/// One structural step of the heuristic. The full event list determines the
/// final table (see [`replay`]); bit ids are 0-based in the fields and
/// rendered 1-based by `Display`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    /// Placement put `bit` into message `to`.
    Placed { bit: BitId, to: DecoderSet },
    /// Rebalancing moved the component identified by `bit` from message
    /// `from` to message `to`, because decoder `low` was missing the
    /// fewest components of `from` and decoder `high` the most.
    Promoted {
        bit: BitId,
        from: DecoderSet,
        to: DecoderSet,
        low: DecoderId,
        high: DecoderId,
    },
    /// In message `subset`, the component identified by `drop` was XORed
    /// into the one identified by `keep`.
    Xored {
        subset: DecoderSet,
        keep: BitId,
        drop: BitId,
    },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Placed { bit, to } => write!(f, "placed bit={} to={to}", bit + 1),
            TraceEvent::Promoted {
                bit,
                from,
                to,
                low,
                high,
            } => write!(
                f,
                "promoted bit={} from={from} to={to} low={low} high={high}",
                bit + 1
            ),
            TraceEvent::Xored { subset, keep, drop } => {
                write!(f, "xored msg={subset} keep={} drop={}", keep + 1, drop + 1)
            }
        }
    }
}

// ============================================================================
// Phase 1: placement
// ============================================================================

/// The message a bit starts in: `need ∪ has` — the decoders that interact
/// with it — or the all-decoders set when nobody holds it (an unheld bit
/// constrains every decoder). Never a singleton, since a held bit has a
/// distinct demander.
#[must_use]
pub fn placement_subset(m: u8, spec: &BitSpec) -> DecoderSet {
    if spec.has.is_empty() {
        DecoderSet::full(m)
    } else {
        spec.need.union(spec.has)
    }
}

/// Places every bit in its [`placement_subset`] message.
#[must_use]
pub fn place(inst: &Instance) -> (MessageTable, Vec<TraceEvent>) {
    let mut table = MessageTable::new();
    let mut trace = Vec::with_capacity(inst.s());
    for (k, spec) in inst.bits().iter().enumerate() {
        debug_assert!(!spec.need.is_empty(), "placement expects a normalized instance");
        let dest = placement_subset(inst.m(), spec);
        table.push(dest, Component::single(k, spec, dest));
        trace.push(TraceEvent::Placed { bit: k, to: dest });
    }
    (table, trace)
}

// ============================================================================
// Phase 2: rebalancing
// ============================================================================

/// Rebalances every message except the all-decoders one, smallest subsets
/// first, appending the moves to `trace`. Returns the number of moves.
///
/// For an unbalanced message `I`, let `low` be the decoder missing the
/// fewest components and `high` the one missing the most (ties to the
/// smaller index). The first component in the message that `low` holds and
/// `high` lacks is displaced — marked excess — into the existing nonempty
/// superset message with one more decoder, preferring the smallest added
/// decoder, or into a fresh `I ∪ {smallest absent decoder}` when no such
/// message exists yet. Displacements only flow upward in the lattice, so a
/// single smallest-first pass settles every message.
pub fn rebalance(table: &mut MessageTable, m: u8, trace: &mut Vec<TraceEvent>) -> usize {
    let mut moves = 0;
    for level in 1..u32::from(m) {
        let keys: Vec<DecoderSet> = table
            .iter()
            .map(|(s, _)| s)
            .filter(|s| s.len() == level)
            .collect();
        for subset in keys {
            // Detach the message so pushes into (strictly larger) other
            // messages don't alias it.
            let mut msg = table
                .messages
                .remove(&LevelOrdered(subset))
                .expect("level keys are live");
            loop {
                let Some((low, min, high, max)) = spread(subset, &msg) else {
                    break;
                };
                if min == max {
                    break;
                }
                let pos = msg
                    .components
                    .iter()
                    .position(|c| c.has.contains(low) && !c.has.contains(high))
                    .expect("a component separating low from high exists");
                let mut c = msg.components.remove(pos);
                c.excess = true;
                let to = destination(table, subset, m);
                trace.push(TraceEvent::Promoted {
                    bit: c.ident(),
                    from: subset,
                    to,
                    low,
                    high,
                });
                table.push(to, c);
                moves += 1;
            }
            if !msg.components.is_empty() {
                table.messages.insert(LevelOrdered(subset), msg);
            }
        }
    }
    moves
}

/// Minimum and maximum missing-component counts over `subset`, with the
/// smallest decoder index winning ties. `None` for an empty subset.
fn spread(subset: DecoderSet, msg: &Message) -> Option<(DecoderId, usize, DecoderId, usize)> {
    let mut it = subset.iter();
    let first = it.next()?;
    let c0 = msg.count_unknown(first);
    let (mut low, mut min, mut high, mut max) = (first, c0, first, c0);
    for d in it {
        let c = msg.count_unknown(d);
        if c < min {
            low = d;
            min = c;
        }
        if c > max {
            high = d;
            max = c;
        }
    }
    Some((low, min, high, max))
}

/// The superset message one decoder larger than `subset` that a displaced
/// component should join: the existing one whose added decoder is
/// smallest, else the fresh subset adding the smallest absent decoder.
fn destination(table: &MessageTable, subset: DecoderSet, m: u8) -> DecoderSet {
    let mut fallback = None;
    for d in subset.complement(m).iter() {
        let mut j = subset;
        j.insert(d);
        if table.get(j).is_some() {
            return j;
        }
        if fallback.is_none() {
            fallback = Some(j);
        }
    }
    fallback.expect("rebalanced subsets are proper")
}

// ============================================================================
// Phase 3: XOR-merging
// ============================================================================

/// Greedily merges component pairs within each message, appending the
/// merges to `trace`. Returns the number of merges.
///
/// A pair qualifies when both components are excess, share an origin, and
/// mutually cover each other: everyone demanding either component holds
/// the other, so transmitting the XOR serves both demands in one slot.
/// Within a message, position pairs are scanned in lexicographic order and
/// the scan restarts after every merge, so the result is deterministic.
pub fn xor_merge(table: &mut MessageTable, trace: &mut Vec<TraceEvent>) -> usize {
    let mut merges = 0;
    let keys: Vec<DecoderSet> = table.iter().map(|(s, _)| s).collect();
    for subset in keys {
        'rescan: loop {
            let msg = table.get(subset).expect("key is live");
            let n = msg.components.len();
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (&msg.components[i], &msg.components[j]);
                    let mergeable = a.excess
                        && b.excess
                        && a.origin == b.origin
                        && a.need.is_subset(b.has)
                        && b.need.is_subset(a.has);
                    if mergeable {
                        let (keep, drop) = (a.ident(), b.ident());
                        table.merge_pair(subset, keep, drop);
                        trace.push(TraceEvent::Xored { subset, keep, drop });
                        merges += 1;
                        continue 'rescan;
                    }
                }
            }
            break;
        }
    }
    merges
}

// ============================================================================
// Full pipeline
// ============================================================================

/// Everything the heuristic produced for one instance.
#[derive(Clone, Debug)]
pub struct CapmRun {
    /// Final message table (after merging).
    pub table: MessageTable,
    /// Final rate: total cost of [`CapmRun::table`].
    pub rate: usize,
    /// Rate after rebalancing but before XOR-merging.
    pub post_balance_rate: usize,
    /// Number of components displaced by rebalancing.
    pub promotions: usize,
    /// Complete event log; [`replay`] rebuilds the table from it.
    pub trace: Vec<TraceEvent>,
}

/// Runs place → rebalance → XOR-merge and reports the resulting plan.
///
/// The run is fully deterministic: ties are broken by decoder index,
/// component arrival order, and scan order, never by hashing or randomness.
///
/// # Example
///
/// ```
/// use indexcode::fixtures::xor_merge_pair;
/// use indexcode::capm::run_capm;
///
/// let run = run_capm(&xor_merge_pair());
/// assert_eq!((run.rate, run.post_balance_rate), (5, 6));
/// ```
#[must_use]
pub fn run_capm(inst: &Instance) -> CapmRun {
    let (mut table, mut trace) = place(inst);
    let promotions = rebalance(&mut table, inst.m(), &mut trace);
    let post_balance_rate = table.rate();
    xor_merge(&mut table, &mut trace);
    let rate = table.rate();
    debug_assert!(rate <= post_balance_rate, "merging never raises the rate");
    debug_assert_eq!(
        table.bit_ids(),
        (0..inst.s()).collect::<Vec<_>>(),
        "every bit appears exactly once"
    );
    CapmRun {
        table,
        rate,
        post_balance_rate,
        promotions,
        trace,
    }
}

/// Rebuilds the message table a trace describes, starting from nothing.
/// `replay(inst, &run.trace)` equals `run.table` for any [`run_capm`] run.
#[must_use]
pub fn replay(inst: &Instance, trace: &[TraceEvent]) -> MessageTable {
    let mut table = MessageTable::new();
    for ev in trace {
        match *ev {
            TraceEvent::Placed { bit, to } => {
                table.push(to, Component::single(bit, inst.bit(bit), to));
            }
            TraceEvent::Promoted { bit, from, to, .. } => {
                let mut c = table.take_component(from, bit);
                c.excess = true;
                table.push(to, c);
            }
            TraceEvent::Xored { subset, keep, drop } => {
                table.merge_pair(subset, keep, drop);
            }
        }
    }
    table
}

// ============================================================================
// Feasibility
// ============================================================================

/// Checks that every decoder can recover all its demands from the plan.
///
/// Decoder `d` receives every message whose subset contains `d` and — the
/// MDS guarantee — learns the value (XOR) of every component in those
/// messages. Starting from its side information, any component with
/// exactly one unknown constituent reveals that constituent; the closure
/// of that peeling must cover the decoder's demands.
#[must_use]
pub fn verify_feasible(inst: &Instance, table: &MessageTable) -> bool {
    inst.decoders().all(|d| {
        let mut known = inst.side_info(d);
        loop {
            let mut changed = false;
            for (subset, msg) in table.iter() {
                if !subset.contains(d) {
                    continue;
                }
                for c in &msg.components {
                    let mut unknown = c.bits.iter().filter(|&&b| !known.contains(b));
                    if let (Some(&b), None) = (unknown.next(), unknown.next()) {
                        known.insert(b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        inst.demand(d).is_subset(&known)
    })
}

// ============================================================================
// Tests
// ============================================================================
