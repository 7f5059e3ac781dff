//! Fractional packing: bit masses split across messages, then expand.
//!
//! The integral heuristic ([`crate::capm`]) must move whole bits when it
//! rebalances a message, which can overshoot: displacing a full component
//! swings the counts by 1 even when the imbalance is smaller. Here every
//! bit instead carries a rational *mass* spread over messages. Rebalancing
//! moves the exact imbalance, and a displaced amount is divided evenly
//! among *all* the one-larger supersets rather than committing to one.
//!
//! The final mass table is realized by a finite code: choose `t` as the
//! least common denominator of all masses, split every source bit into `t`
//! equal sub-bits, and hand each message an integer number of sub-bits per
//! bit. That expanded placement is an ordinary integral plan — the XOR
//! merge pass and the message-rate accounting are reused verbatim — and
//! its rate divided by `t` is the fractional rate. Since sub-bit splitting
//! is an operation on the actual source stream (take `t` consecutive bits
//! per symbol), the fractional rate is genuinely achievable, not just a
//! relaxation value.
//!
//! Everything is exact `BigRational` arithmetic; no floating point.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use num_integer::Integer;

use crate::capm::{placement_subset, Component, MessageTable};
use crate::instance::{BitId, BitSpec, Instance};
use crate::sets::{DecoderId, DecoderSet, LevelOrdered};
use crate::GuardViolation;

/// Exact rational mass.
pub type Mass = BigRational;

/// Expansion guard: `s · t` may not exceed this many sub-bits.
///
/// The expanded plan is an ordinary [`Instance`] over the sub-bits, so it
/// obeys the same size cap ([`crate::instance::MAX_BITS`]). Splitting can
/// in principle demand astronomically large `t` (denominators compound by
/// a factor of up to `m − level` per spread), and refusing is the only
/// honest answer — the realizing code would be longer than any practical
/// block.
pub const MAX_EXPANDED_BITS: u64 = crate::instance::MAX_BITS as u64;

// ============================================================================
// The mass table
// ============================================================================

/// How much of each bit sits in each message. All stored entries are
/// strictly positive; per bit, the masses over all messages sum to 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ThetaTable {
    masses: BTreeMap<LevelOrdered, BTreeMap<BitId, Mass>>,
}

impl ThetaTable {
    /// An empty table.
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Mass of `bit` in message `subset`, if positive.
    #[must_use]
    pub fn get(&self, subset: DecoderSet, bit: BitId) -> Option<&Mass> {
        self.masses.get(&LevelOrdered(subset))?.get(&bit)
    }

    /// All masses of message `subset`, keyed by bit.
    #[must_use]
    pub fn subset(&self, subset: DecoderSet) -> Option<&BTreeMap<BitId, Mass>> {
        self.masses.get(&LevelOrdered(subset))
    }

    /// Messages in (size, bitmask) order.
    pub fn iter(&self) -> impl Iterator<Item = (DecoderSet, &BTreeMap<BitId, Mass>)> {
        self.masses.iter().map(|(k, v)| (k.0, v))
    }

    /// Total mass of `bit` across all messages (1 for any live bit).
    #[must_use]
    pub fn total_mass(&self, bit: BitId) -> Mass {
        self.iter()
            .filter_map(|(_, m)| m.get(&bit))
            .fold(Mass::zero(), |acc, x| acc + x)
    }

    fn add(&mut self, subset: DecoderSet, bit: BitId, amount: Mass) {
        debug_assert!(amount.is_positive());
        let cell = self
            .masses
            .entry(LevelOrdered(subset))
            .or_default()
            .entry(bit)
            .or_insert_with(Mass::zero);
        *cell += amount;
    }

    /// Subtracts `amount` from a cell, dropping it (and an emptied message)
    /// at exactly zero.
    fn subtract(&mut self, subset: DecoderSet, bit: BitId, amount: &Mass) {
        let key = LevelOrdered(subset);
        let msg = self.masses.get_mut(&key).expect("cell exists");
        let cell = msg.get_mut(&bit).expect("cell exists");
        *cell -= amount;
        debug_assert!(!cell.is_negative(), "mass cannot go negative");
        if cell.is_zero() {
            msg.remove(&bit);
            if msg.is_empty() {
                self.masses.remove(&key);
            }
        }
    }
}

/// Residual fractional uncertainty of message `subset` for decoder `j`:
/// the total mass of bits `j` does not hold.
#[must_use]
pub fn frac_entropy(inst: &Instance, masses: &BTreeMap<BitId, Mass>, j: DecoderId) -> Mass {
    masses
        .iter()
        .filter(|(&k, _)| !inst.bit(k).has.contains(j))
        .fold(Mass::zero(), |acc, (_, m)| acc + m)
}

// ============================================================================
// Trace
// ============================================================================

/// One structural step of the fractional heuristic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum STraceEvent {
    /// Seeding put all of `bit`'s mass into message `to`.
    Seeded { bit: BitId, to: DecoderSet },
    /// Rebalancing moved `amount` of `bit`'s mass out of `from`, split
    /// evenly over all one-larger supersets, because decoder `low` was
    /// missing the least mass and decoder `high` the most.
    Spread {
        bit: BitId,
        from: DecoderSet,
        amount: Mass,
        low: DecoderId,
        high: DecoderId,
    },
}

impl fmt::Display for STraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STraceEvent::Seeded { bit, to } => write!(f, "seeded bit={} to={to}", bit + 1),
            STraceEvent::Spread {
                bit,
                from,
                amount,
                low,
                high,
            } => write!(
                f,
                "spread bit={} from={from} amount={amount} low={low} high={high}",
                bit + 1
            ),
        }
    }
}

// ============================================================================
// Seeding and mass rebalancing
// ============================================================================

/// Puts mass 1 of every bit into its [`placement_subset`] message.
#[must_use]
pub fn seed(inst: &Instance) -> (ThetaTable, Vec<STraceEvent>) {
    let mut table = ThetaTable::new();
    let mut trace = Vec::with_capacity(inst.s());
    for (k, spec) in inst.bits().iter().enumerate() {
        debug_assert!(!spec.need.is_empty(), "seeding expects a normalized instance");
        let dest = placement_subset(inst.m(), spec);
        table.add(dest, k, Mass::one());
        trace.push(STraceEvent::Seeded { bit: k, to: dest });
    }
    (table, trace)
}

/// Rebalances mass in every message except the all-decoders one, smallest
/// subsets first. Returns the number of spread moves.
///
/// For an unbalanced message, the moved bit is chosen among those the
/// least-missing decoder holds and the most-missing decoder lacks: prefer
/// the bit with the *largest* mass that still fits inside the imbalance
/// (moving all of it), else move exactly the imbalance from the bit with
/// the *smallest* mass. Ties go to the lowest bit id. The amount is split
/// evenly over all one-larger supersets.
///
/// Termination: within one message's loop every removed amount is at least
/// `1/L`, where `L` is the least common denominator of the masses present
/// when the loop starts (moved amounts are sums/differences of existing
/// masses, so denominators never leave the `1/L` lattice), and total mass
/// only decreases — a safety counter asserts the `s·L` ceiling.
pub fn spread_mass(inst: &Instance, table: &mut ThetaTable, trace: &mut Vec<STraceEvent>) -> usize {
    let m = inst.m();
    let mut moves = 0;
    for level in 1..u32::from(m) {
        let keys: Vec<DecoderSet> = table
            .iter()
            .map(|(s, _)| s)
            .filter(|s| s.len() == level)
            .collect();
        for subset in keys {
            moves += settle_subset(inst, table, subset, trace);
        }
    }
    moves
}

/// Runs the rebalancing loop for one message until it is balanced.
fn settle_subset(
    inst: &Instance,
    table: &mut ThetaTable,
    subset: DecoderSet,
    trace: &mut Vec<STraceEvent>,
) -> usize {
    let m = inst.m();
    let supersets: Vec<DecoderSet> = subset
        .complement(m)
        .iter()
        .map(|d| {
            let mut j = subset;
            j.insert(d);
            j
        })
        .collect();
    let ceiling = termination_ceiling(inst.s(), table.subset(subset));

    let mut moves = 0;
    loop {
        let Some(masses) = table.subset(subset) else {
            break; // fully drained
        };
        // Least- and most-missing decoders, smallest index on ties.
        let mut it = subset.iter();
        let first = it.next().expect("messages have nonempty subsets");
        let h0 = frac_entropy(inst, masses, first);
        let (mut low, mut min, mut high, mut max) = (first, h0.clone(), first, h0);
        for d in it {
            let h = frac_entropy(inst, masses, d);
            if h < min {
                low = d;
                min = h.clone();
            }
            if h > max {
                high = d;
                max = h;
            }
        }
        let gap = &max - &min;
        if gap.is_zero() {
            break;
        }

        // Candidates: bits `low` holds and `high` lacks. Prefer the largest
        // mass not exceeding the gap (move all of it); otherwise move
        // exactly the gap out of the smallest mass.
        let mut best_full: Option<(BitId, &Mass)> = None;
        let mut smallest: Option<(BitId, &Mass)> = None;
        for (&k, mass) in masses {
            let spec = inst.bit(k);
            if !(spec.has.contains(low) && !spec.has.contains(high)) {
                continue;
            }
            if *mass <= gap && best_full.is_none_or(|(_, best)| mass > best) {
                best_full = Some((k, mass));
            }
            if smallest.is_none_or(|(_, s)| mass < s) {
                smallest = Some((k, mass));
            }
        }
        let (bit, amount) = match (best_full, smallest) {
            (Some((k, mass)), _) => (k, mass.clone()),
            (None, Some((k, _))) => (k, gap),
            // A positive gap implies a separating bit exists, but an empty
            // candidate set still ends the loop rather than spinning.
            (None, None) => break,
        };

        let share = &amount / BigInt::from(supersets.len());
        table.subtract(subset, bit, &amount);
        for &sup in &supersets {
            table.add(sup, bit, share.clone());
        }
        trace.push(STraceEvent::Spread {
            bit,
            from: subset,
            amount,
            low,
            high,
        });
        moves += 1;
        assert!(
            (moves as u64) <= ceiling,
            "mass rebalancing exceeded its termination ceiling"
        );
    }
    moves
}

/// `s · lcm(denominators)` as a saturating `u64` — the proven upper bound
/// on one message's rebalancing moves.
fn termination_ceiling(s: usize, masses: Option<&BTreeMap<BitId, Mass>>) -> u64 {
    let mut l = BigInt::one();
    if let Some(masses) = masses {
        for mass in masses.values() {
            l = l.lcm(mass.denom());
        }
    }
    (l * BigInt::from(s)).to_u64().unwrap_or(u64::MAX)
}

// ============================================================================
// Expansion
// ============================================================================

/// A mass table realized as an integral plan over sub-bits.
#[derive(Clone, Debug)]
pub struct ExpandedPlan {
    /// Sub-bits per source bit (least common denominator of all masses).
    pub t: u64,
    /// The instance over `s · t` sub-bits. Sub-bit `j` of bit `k` has id
    /// `k·t + j`, label `<parent label>.<j+1>`, and its parent's sets.
    pub instance: Instance,
    /// The sub-bit placement. Components are single sub-bits (until an
    /// XOR-merge pass), ordered by (bit, sub-index) within each message;
    /// a sub-bit is marked excess iff its message differs from its
    /// parent's seeding message.
    pub table: MessageTable,
}

/// Realizes a mass table as sub-bit placement: bit `k`'s masses, scanned
/// in ascending order of the message bitmask, receive consecutive
/// sub-indices.
///
/// # Errors
///
/// Returns a [`GuardViolation`] when the expansion would exceed
/// [`MAX_EXPANDED_BITS`] sub-bits.
pub fn expand(inst: &Instance, theta: &ThetaTable) -> Result<ExpandedPlan, GuardViolation> {
    let m = inst.m();
    let s = inst.s();

    let mut t_big = BigInt::one();
    for (_, masses) in theta.iter() {
        for mass in masses.values() {
            t_big = t_big.lcm(mass.denom());
        }
    }
    let total = BigInt::from(s) * &t_big;
    if total > BigInt::from(MAX_EXPANDED_BITS) {
        return Err(GuardViolation {
            operation: "fractional plan expansion",
            quantity: "expanded bits",
            actual: total.to_u64().unwrap_or(u64::MAX),
            limit: MAX_EXPANDED_BITS,
        });
    }
    let t = t_big.to_u64().expect("guard keeps t within u64");

    // Per bit: (message, sub-bit count) in ascending-bitmask order.
    let mut shares: Vec<Vec<(DecoderSet, u64)>> = vec![Vec::new(); s];
    for (subset, masses) in theta.iter() {
        for (&k, mass) in masses {
            let count = (mass * &t_big)
                .to_integer()
                .to_u64()
                .expect("t clears every denominator");
            shares[k].push((subset, count));
        }
    }
    for row in &mut shares {
        row.sort_by_key(|(subset, _)| subset.mask());
        debug_assert_eq!(row.iter().map(|(_, c)| c).sum::<u64>(), t, "mass sums to 1");
    }

    // Sub-bit k·t + j goes to the message owning sub-index j; iterating
    // k-major keeps each message's components in (bit, sub-index) order.
    let mut bits = Vec::with_capacity(s * t as usize);
    let mut table = MessageTable::new();
    for (k, spec) in inst.bits().iter().enumerate() {
        let origin = placement_subset(m, spec);
        let mut j = 0u64;
        for &(subset, count) in &shares[k] {
            for _ in 0..count {
                let id = bits.len();
                bits.push(BitSpec {
                    label: format!("{}.{}", spec.label, j + 1),
                    need: spec.need,
                    has: spec.has,
                });
                let mut comp = Component::single(id, &bits[id], origin);
                comp.excess = subset != origin;
                table.push(subset, comp);
                j += 1;
            }
        }
        debug_assert_eq!(j, t);
    }
    let instance = Instance::new(m, bits).expect("expansion preserves validity");
    Ok(ExpandedPlan { t, instance, table })
}

// ============================================================================
// Full pipeline
// ============================================================================

/// Everything the fractional heuristic produced for one instance.
#[derive(Clone, Debug)]
pub struct ScapmRun {
    /// Final mass table.
    pub theta: ThetaTable,
    /// Achieved rate: expanded plan rate divided by `t`.
    pub rate: BigRational,
    /// Sub-bits per source bit in the realizing plan.
    pub t: u64,
    /// The realizing sub-bit plan, after the XOR-merge pass.
    pub plan: ExpandedPlan,
    /// Number of spread moves during mass rebalancing.
    pub promotions: usize,
    /// Seeding and spreading events.
    pub trace: Vec<STraceEvent>,
    /// XOR merges applied to the expanded plan (same event type as the
    /// integral pipeline).
    pub merges: Vec<crate::capm::TraceEvent>,
}

/// Runs seed → spread → expand → XOR-merge and reports the fractional plan.
///
/// # Errors
///
/// Returns a [`GuardViolation`] when expansion would exceed
/// [`MAX_EXPANDED_BITS`] sub-bits; the mass table itself has no size limit.
///
/// # Example
///
/// ```
/// use indexcode::fixtures::pentagon;
/// use indexcode::scapm::run_scapm;
/// use num::BigRational;
/// use num::bigint::BigInt;
///
/// let run = run_scapm(&pentagon()).unwrap();
/// assert_eq!(run.rate, BigRational::new(BigInt::from(5), BigInt::from(2)));
/// assert_eq!(run.t, 2);
/// ```
pub fn run_scapm(inst: &Instance) -> Result<ScapmRun, GuardViolation> {
    let (mut theta, mut trace) = seed(inst);
    let promotions = spread_mass(inst, &mut theta, &mut trace);
    debug_assert!(
        (0..inst.s()).all(|k| theta.total_mass(k).is_one()),
        "mass is conserved"
    );
    let mut plan = expand(inst, &theta)?;
    let mut merges = Vec::new();
    crate::capm::xor_merge(&mut plan.table, &mut merges);
    let rate = BigRational::new(BigInt::from(plan.table.rate()), BigInt::from(plan.t));
    Ok(ScapmRun {
        theta,
        rate,
        t: plan.t,
        plan,
        promotions,
        trace,
        merges,
    })
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capm::verify_feasible;
    use crate::fixtures::{
        coded_caching, directed_cycle, fractional_split, label_sensitive, late_promotion,
        pentagon, two_chain, xor_merge_pair,
    };

    fn ds(ids: &[DecoderId]) -> DecoderSet {
        DecoderSet::from_ids(ids.iter().copied())
    }

    fn half() -> Mass {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    fn mass_int(n: u64) -> Mass {
        Mass::from_integer(BigInt::from(n))
    }

    #[test]
    fn four_decoder_example_needs_no_splitting() {
        let run = run_scapm(&xor_merge_pair()).unwrap();
        assert_eq!(run.t, 1);
        assert_eq!(run.rate, mass_int(5));
        assert_eq!(run.promotions, 8);
        // All mass drains into the all-decoders message.
        let full = run.theta.subset(ds(&[1, 2, 3, 4])).unwrap();
        assert_eq!(full.len(), 6);
        assert!(full.values().all(Mass::is_one));
        // The same XOR merge as the integral pipeline fires on expansion.
        assert_eq!(run.merges.len(), 1);
    }

    #[test]
    fn thirteen_bit_groupcast_reaches_twenty_one_halves() {
        let run = run_scapm(&fractional_split()).unwrap();
        assert_eq!(run.t, 2);
        assert_eq!(run.rate, BigRational::new(BigInt::from(21), BigInt::from(2)));

        // The exact final mass table, message by message.
        let u124 = run.theta.subset(ds(&[1, 2, 4])).unwrap();
        let expect_124: BTreeMap<BitId, Mass> =
            [(3, half()), (7, half()), (12, half())].into_iter().collect();
        assert_eq!(u124, &expect_124);

        let u134 = run.theta.subset(ds(&[1, 3, 4])).unwrap();
        let expect_134: BTreeMap<BitId, Mass> =
            [(5, half()), (9, half()), (12, half())].into_iter().collect();
        assert_eq!(u134, &expect_134);

        let full = run.theta.subset(ds(&[1, 2, 3, 4])).unwrap();
        let mut expect_full: BTreeMap<BitId, Mass> = BTreeMap::new();
        for k in [0, 1, 2, 4, 6, 8, 10, 11] {
            expect_full.insert(k, Mass::one());
        }
        for k in [3, 5, 7, 9] {
            expect_full.insert(k, half());
        }
        assert_eq!(full, &expect_full);

        assert_eq!(run.theta.iter().count(), 3);
        assert!(run.merges.is_empty());
    }

    #[test]
    fn pentagon_reaches_five_halves() {
        let run = run_scapm(&pentagon()).unwrap();
        assert_eq!(run.t, 2);
        assert_eq!(run.rate, BigRational::new(BigInt::from(5), BigInt::from(2)));

        // Five four-decoder messages, each holding half a bit twice.
        assert_eq!(run.theta.iter().count(), 5);
        for (subset, masses) in run.theta.iter() {
            assert_eq!(subset.len(), 4);
            assert_eq!(masses.len(), 2);
            assert!(masses.values().all(|m| *m == half()));
        }

        // Sub-bit routing: ascending message bitmask takes the earlier
        // sub-index. Message {1,2,3,5} holds bit 1's first sub-bit and
        // bit 2's second (ids 0 and 3 after two-fold expansion).
        let msg = run.plan.table.get(ds(&[1, 2, 3, 5])).unwrap();
        let ids: Vec<BitId> = msg.components.iter().map(|c| c.ident()).collect();
        assert_eq!(ids, vec![0, 3]);
        assert_eq!(run.plan.instance.bit(0).label, "b1.1");
        assert_eq!(run.plan.instance.bit(3).label, "b2.2");
        assert!(run.merges.is_empty());
    }

    #[test]
    fn expanded_plans_decode() {
        for inst in [
            xor_merge_pair(),
            label_sensitive(),
            late_promotion(),
            fractional_split(),
            pentagon(),
            two_chain(),
            directed_cycle(6),
            coded_caching(3, 3, 1),
        ] {
            let run = run_scapm(&inst).unwrap();
            assert!(
                verify_feasible(&run.plan.instance, &run.plan.table),
                "expanded plan must decode"
            );
        }
    }

    #[test]
    fn mass_is_conserved_per_bit() {
        for inst in [fractional_split(), pentagon(), late_promotion()] {
            let run = run_scapm(&inst).unwrap();
            for k in 0..inst.s() {
                assert!(run.theta.total_mass(k).is_one(), "bit {k}");
            }
        }
    }

    #[test]
    fn fractional_rates_on_the_fixture_gallery() {
        // Frozen rates for every fixture, next to the integral heuristic's.
        // The fractional pass is not uniformly better: on `label_sensitive`
        // its equalization rule keeps spilling half-masses toward the
        // all-decoders message, where decoder 4's empty cache pays for every
        // one of them, and it lands at 13/2 against the integral 5. The wins
        // show up on `fractional_split` (21/2 vs 11) and `pentagon` (5/2 vs 3).
        let gallery: [(_, u64, u64, u64); 7] = [
            (xor_merge_pair(), 5, 1, 1),
            (label_sensitive(), 13, 2, 2),
            (late_promotion(), 5, 1, 1),
            (fractional_split(), 21, 2, 2),
            (pentagon(), 5, 2, 2),
            (two_chain(), 2, 1, 1),
            (coded_caching(3, 3, 1), 3, 1, 1),
        ];
        for (inst, num, den, t) in gallery {
            let run = run_scapm(&inst).unwrap();
            assert_eq!(
                run.rate,
                Mass::new(BigInt::from(num), BigInt::from(den)),
                "rate for m={} s={}",
                inst.m(),
                inst.s()
            );
            assert_eq!(run.t, t);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run_scapm(&fractional_split()).unwrap();
        let b = run_scapm(&fractional_split()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.rate, b.rate);
    }

    #[test]
    fn trace_lines_render_with_exact_fractions() {
        let run = run_scapm(&pentagon()).unwrap();
        let lines: Vec<String> = run.trace.iter().map(ToString::to_string).collect();
        assert_eq!(lines[0], "seeded bit=1 to={1,2,5}");
        assert!(lines
            .iter()
            .any(|l| l == "spread bit=2 from={1,2,3} amount=1 low=1 high=2"));
    }

    #[test]
    fn expansion_guard_trips_on_huge_denominators() {
        // 6 bits at denominator 1024 would expand to 6144 sub-bits.
        let inst = xor_merge_pair();
        let mut theta = ThetaTable::new();
        let tiny = BigRational::new(BigInt::from(1), BigInt::from(1024));
        let rest = Mass::one() - &tiny;
        for k in 0..inst.s() {
            theta.add(ds(&[1, 2, 3]), k, tiny.clone());
            theta.add(ds(&[1, 2, 3, 4]), k, rest.clone());
        }
        let err = expand(&inst, &theta).unwrap_err();
        assert_eq!(err.limit, MAX_EXPANDED_BITS);
        assert_eq!(err.actual, 6 * 1024);
    }
}
