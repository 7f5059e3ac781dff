//! Report assembly: one deterministic record combining the lower bound,
//! both heuristics, the exhaustive search, and an optimality certificate.
//!
//! Design notes:
//!
//! - Serialized field order is fixed by struct declaration order, so JSON
//!   output is byte-identical across runs of the same build on the same
//!   input. Nothing here hashes or consults the clock.
//! - Fractional rates travel as exact strings (`"21/2"` plus separate
//!   numerator/denominator); a decimal form is attached only when the
//!   expansion terminates. No floating point is computed anywhere.
//! - A certificate is only claimed when the tool can prove it from its own
//!   numbers: a closed form whose precondition was checked and whose value
//!   matches both the heuristic and the lower bound, or a lower bound that
//!   meets an achievable rate exactly.
//! - Components that refuse to run (budget guards) become `null` fields
//!   plus a note; they never abort the rest of the report.

use std::io::{self, Write};

use indexcode::capm::{self, CapmRun};
use indexcode::closed_form;
use indexcode::dsm_bound;
use indexcode::instance::{Classification, Instance, Warning};
use indexcode::oracle;
use indexcode::scapm::{self, ScapmRun};
use indexcode::GuardViolation;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use serde::Serialize;

// ============================================================================
// Report shapes
// ============================================================================

/// Structural flags from classification, in report form.
#[derive(Clone, Debug, Serialize)]
pub struct ClassFlags {
    /// Every bit is demanded by exactly one decoder.
    pub unicast: bool,
    /// The demand/side-information digraph has no directed cycle.
    pub acyclic: bool,
    /// The instance is a single directed cycle over all decoders.
    pub directed_cycle: bool,
    /// Every bit is cached everywhere except at most two decoders (or
    /// nowhere at all).
    pub near_complete: bool,
}

impl From<Classification> for ClassFlags {
    fn from(c: Classification) -> Self {
        Self {
            unicast: c.unicast,
            acyclic: c.acyclic,
            directed_cycle: c.directed_cycle,
            near_complete: c.near_complete,
        }
    }
}

/// Instance summary: sizes plus structural classification.
#[derive(Clone, Debug, Serialize)]
pub struct Digest {
    /// Number of decoders.
    pub m: u8,
    /// Number of source bits (after normalization, unless disabled).
    pub s: usize,
    /// Structural classification flags.
    pub classification: ClassFlags,
}

/// The sequencing lower bound with its witness.
#[derive(Clone, Debug, Serialize)]
pub struct LowerReport {
    /// Best chain value over all decoder orderings.
    pub value: usize,
    /// An ordering attaining it.
    pub witness: Vec<u8>,
    /// Per-position contributions along the witness (they sum to `value`).
    pub terms: Vec<usize>,
}

/// One message of an integral plan.
#[derive(Clone, Debug, Serialize)]
pub struct MessageSummary {
    /// Decoders the message serves.
    pub decoders: Vec<u8>,
    /// Coded components carried.
    pub components: usize,
    /// Transmissions the message costs (worst listener's unknown count).
    pub cost: usize,
}

/// Integral packing heuristic results.
#[derive(Clone, Debug, Serialize)]
pub struct CapmReport {
    /// Final rate after rebalancing and XOR-merging.
    pub rate: usize,
    /// Rate after rebalancing but before XOR-merging.
    pub post_balance_rate: usize,
    /// Components displaced during rebalancing.
    pub promotions: usize,
    /// Final message table, one entry per nonempty message.
    pub messages: Vec<MessageSummary>,
    /// Event log (`null` unless traces were requested).
    pub trace: Option<Vec<String>>,
}

impl CapmReport {
    /// Summarizes a finished run; `with_trace` embeds the event log.
    #[must_use]
    pub fn from_run(run: &CapmRun, with_trace: bool) -> Self {
        let messages = run
            .table
            .iter()
            .map(|(subset, msg)| MessageSummary {
                decoders: subset.iter().collect(),
                components: msg.components.len(),
                cost: capm::message_rate(subset, msg),
            })
            .collect();
        Self {
            rate: run.rate,
            post_balance_rate: run.post_balance_rate,
            promotions: run.promotions,
            messages,
            trace: with_trace.then(|| run.trace.iter().map(ToString::to_string).collect()),
        }
    }
}

/// Fractional packing heuristic results. All rate fields are exact.
#[derive(Clone, Debug, Serialize)]
pub struct ScapmReport {
    /// Exact rate as a reduced fraction (`"21/2"`, or `"5"` when integral).
    pub rate: String,
    /// Numerator of the reduced fraction, as a decimal string.
    pub numerator: String,
    /// Denominator of the reduced fraction, as a decimal string.
    pub denominator: String,
    /// Exact decimal form, present only when the expansion terminates.
    pub decimal: Option<String>,
    /// Sub-bits per source bit in the realizing plan.
    pub t: u64,
    /// Mass moves during rebalancing.
    pub spreads: usize,
    /// XOR merges applied to the expanded plan.
    pub merges: usize,
    /// Event log: seeding and spreading, then merges (`null` unless
    /// traces were requested).
    pub trace: Option<Vec<String>>,
}

impl ScapmReport {
    /// Summarizes a finished run; `with_trace` embeds the event log.
    #[must_use]
    pub fn from_run(run: &ScapmRun, with_trace: bool) -> Self {
        let trace = with_trace.then(|| {
            run.trace
                .iter()
                .map(ToString::to_string)
                .chain(run.merges.iter().map(ToString::to_string))
                .collect()
        });
        Self {
            rate: run.rate.to_string(),
            numerator: run.rate.numer().to_string(),
            denominator: run.rate.denom().to_string(),
            decimal: terminating_decimal(&run.rate),
            t: run.t,
            spreads: run.promotions,
            merges: run.merges.len(),
            trace,
        }
    }
}

/// Exhaustive scalar-linear search results.
#[derive(Clone, Debug, Serialize)]
pub struct ExactReport {
    /// Least transmissions any scalar-linear plan over GF(2) needs.
    pub rate: usize,
    /// Candidate row spaces tested, including the winner.
    pub examined: u64,
    /// Witness code, one `0`/`1` row per transmission (column `b` is
    /// source bit `b`).
    pub witness: Vec<String>,
}

/// A component that refused to run because a budget guard tripped.
#[derive(Clone, Debug, Serialize)]
pub struct SkippedReport {
    /// Which operation refused.
    pub operation: String,
    /// The limited quantity.
    pub quantity: String,
    /// The instance's value of that quantity.
    pub actual: u64,
    /// The configured maximum.
    pub limit: u64,
}

impl From<&GuardViolation> for SkippedReport {
    fn from(g: &GuardViolation) -> Self {
        Self {
            operation: g.operation.to_string(),
            quantity: g.quantity.to_string(),
            actual: g.actual,
            limit: g.limit,
        }
    }
}

/// The full record `check` emits.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    /// Instance sizes and classification.
    pub instance: Digest,
    /// Sequencing lower bound.
    pub lower: LowerReport,
    /// Integral heuristic.
    pub capm: CapmReport,
    /// Fractional heuristic (`null` when its expansion guard tripped).
    pub scapm: Option<ScapmReport>,
    /// Exhaustive search (`null` when over the bit budget).
    pub exact: Option<ExactReport>,
    /// Whether the optimal rate is pinned down exactly.
    pub certified_optimal: bool,
    /// How: `directed-cycle`, `dag`, `near-complete`, `no-excess`,
    /// `bounds-met`, or `none`.
    pub certificate: String,
    /// Normalization warnings, skip reasons, and certificate commentary.
    pub notes: Vec<String>,
}

// ============================================================================
// Assembly
// ============================================================================

/// Knobs for [`build_report`].
#[derive(Clone, Debug)]
pub struct ReportOptions {
    /// Skip the exhaustive search on instances with more bits than this.
    pub max_oracle_bits: usize,
    /// Embed event logs in the heuristic sections.
    pub with_trace: bool,
}

/// A built report plus how many components a guard kept from running.
#[derive(Clone, Debug)]
pub struct BuiltReport {
    /// The assembled record.
    pub report: RateReport,
    /// Number of skipped components (`--strict` turns any into exit 3).
    pub guard_violations: usize,
}

/// Runs every component on `inst` and assembles the record.
///
/// `warnings` are normalization events to surface in the notes; pass an
/// empty slice when normalization was skipped.
#[must_use]
pub fn build_report(inst: &Instance, warnings: &[Warning], opts: &ReportOptions) -> BuiltReport {
    let class = inst.classify();
    let mut notes: Vec<String> = warnings
        .iter()
        .map(|w| format!("normalization: {w}"))
        .collect();
    let mut guard_violations = 0usize;

    let lower = dsm_bound::dsm_plus_dp(inst);
    let capm_run = capm::run_capm(inst);

    let scapm_run = match scapm::run_scapm(inst) {
        Ok(run) => Some(run),
        Err(g) => {
            notes.push(format!("skipped: {g}"));
            guard_violations += 1;
            None
        }
    };

    let exact_res = match oracle::exact_scalar_linear(inst, opts.max_oracle_bits) {
        Ok(found) => Some(found),
        Err(g) => {
            notes.push(format!("skipped: {g} (raise --max-oracle-bits to run it)"));
            guard_violations += 1;
            None
        }
    };

    let (certified_optimal, certificate) = certify(
        inst,
        &class,
        lower.value,
        capm_run.rate,
        scapm_run.as_ref().map(|r| &r.rate),
        exact_res.as_ref().map(|r| r.rate),
        &mut notes,
    );

    let report = RateReport {
        instance: Digest {
            m: inst.m(),
            s: inst.s(),
            classification: class.into(),
        },
        lower: LowerReport {
            value: lower.value,
            witness: lower.permutation,
            terms: lower.terms,
        },
        capm: CapmReport::from_run(&capm_run, opts.with_trace),
        scapm: scapm_run
            .as_ref()
            .map(|r| ScapmReport::from_run(r, opts.with_trace)),
        exact: exact_res.as_ref().map(|r| ExactReport {
            rate: r.rate,
            examined: r.examined,
            witness: r.code.row_strings(),
        }),
        certified_optimal,
        certificate: certificate.to_string(),
        notes,
    };
    BuiltReport {
        report,
        guard_violations,
    }
}

/// Decides the certificate, appending an explanatory note.
///
/// Closed forms are tried in order of how specific their precondition is;
/// each must both apply and agree with the heuristic *and* the lower bound
/// before it certifies anything. Failing all of those, the lower bound may
/// still meet the best achievable rate exactly.
fn certify(
    inst: &Instance,
    class: &Classification,
    lower: usize,
    capm_rate: usize,
    scapm_rate: Option<&BigRational>,
    exact_rate: Option<usize>,
    notes: &mut Vec<String>,
) -> (bool, &'static str) {
    if class.directed_cycle {
        if let Ok(rate) = closed_form::directed_cycle_rate(inst.m()) {
            if rate == capm_rate && rate == lower {
                notes.push(format!(
                    "a directed cycle over {} decoders takes exactly {} transmissions: \
                     XOR around the ring achieves it and the chain bound matches",
                    inst.m(),
                    rate
                ));
                return (true, "directed-cycle");
            }
        }
    }
    if class.acyclic {
        if let Ok(dag) = closed_form::dag_analysis(inst) {
            if dag.rate == capm_rate && dag.rate == lower {
                notes.push(
                    "acyclic side information leaves no coding gain: every bit must be \
                     sent, and the peeling order witnesses the matching lower bound"
                        .to_string(),
                );
                return (true, "dag");
            }
        }
    }
    if class.near_complete {
        if let Ok(nc) = closed_form::near_complete_rate(inst) {
            if nc.rate == capm_rate && nc.rate == lower {
                notes.push(format!(
                    "caches miss at most two decoders per bit: the per-decoder load \
                     formula is tight, bottlenecked at decoder {}",
                    nc.bottleneck
                ));
                return (true, "near-complete");
            }
        }
    }
    if let Ok(chain) = closed_form::no_excess_rate(inst) {
        if chain.value == capm_rate && chain.value == lower {
            notes.push(
                "the packing needed no rebalancing, and a front-loaded chain \
                 certifies it cannot be beaten"
                    .to_string(),
            );
            return (true, "no-excess");
        }
    }

    let mut best = BigRational::from_integer(BigInt::from(capm_rate));
    if let Some(rate) = scapm_rate {
        if *rate < best {
            best = rate.clone();
        }
    }
    if let Some(rate) = exact_rate {
        let rate = BigRational::from_integer(BigInt::from(rate));
        if rate < best {
            best = rate;
        }
    }
    if BigRational::from_integer(BigInt::from(lower)) == best {
        notes.push(format!(
            "the chain lower bound meets an achievable rate at {}",
            fraction_str(&best)
        ));
        (true, "bounds-met")
    } else {
        notes.push(format!(
            "optimality open: lower bound {} sits below the best achievable rate {}; \
             closing such gaps needs converses stronger than chain bounds (linear \
             programs over joint entropies), which this tool does not compute",
            lower,
            fraction_str(&best)
        ));
        (false, "none")
    }
}

// ============================================================================
// Exact arithmetic helpers
// ============================================================================

/// Renders a rational as `num/den`, or plain `num` when integral.
#[must_use]
pub fn fraction_str(r: &BigRational) -> String {
    r.to_string()
}

/// Exact decimal expansion of `r`, when one exists.
///
/// Returns `None` unless the reduced denominator factors as 2^a·5^b; never
/// rounds. `21/2` becomes `"10.5"`, `3` becomes `"3"`, `1/3` becomes `None`.
#[must_use]
pub fn terminating_decimal(r: &BigRational) -> Option<String> {
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut rest = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = (r.numer() * BigInt::from(10).pow(places)) / r.denom();
    let negative = scaled < BigInt::zero();
    let digits = if negative {
        (-&scaled).to_string()
    } else {
        scaled.to_string()
    };
    let places = places as usize;
    let mut body = if digits.len() <= places {
        format!("0.{}{}", "0".repeat(places - digits.len()), digits)
    } else if places == 0 {
        digits
    } else {
        let split = digits.len() - places;
        format!("{}.{}", &digits[..split], &digits[split..])
    };
    if negative {
        body.insert(0, '-');
    }
    Some(body)
}

// ============================================================================
// Human rendering
// ============================================================================

/// Formats decoder ids as `{1,2,3}`.
#[must_use]
pub fn set_str(ids: &[u8]) -> String {
    let inner: Vec<String> = ids.iter().map(u8::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn join_usize(values: &[usize]) -> String {
    let parts: Vec<String> = values.iter().map(usize::to_string).collect();
    parts.join(" ")
}

fn join_u8(values: &[u8]) -> String {
    let parts: Vec<String> = values.iter().map(u8::to_string).collect();
    parts.join(" ")
}

/// Renders the lower-bound section (shared by `bound` and `check`).
pub fn render_lower(rep: &LowerReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "value: {}", rep.value)?;
    writeln!(out, "witness: {}", join_u8(&rep.witness))?;
    writeln!(out, "terms: {}", join_usize(&rep.terms))
}

/// Renders the integral-heuristic section (shared by `capm` and `check`).
pub fn render_capm(rep: &CapmReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "rate: {}", rep.rate)?;
    writeln!(out, "post_balance_rate: {}", rep.post_balance_rate)?;
    writeln!(out, "promotions: {}", rep.promotions)?;
    for msg in &rep.messages {
        writeln!(
            out,
            "message {}: components {} cost {}",
            set_str(&msg.decoders),
            msg.components,
            msg.cost
        )?;
    }
    if let Some(trace) = &rep.trace {
        writeln!(out, "trace:")?;
        for line in trace {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// One-line exact-rate summary: `21/2 = 10.5 (t=2, spreads 37, merges 0)`.
#[must_use]
pub fn scapm_summary(rep: &ScapmReport) -> String {
    let decimal = match (&rep.decimal, rep.denominator.as_str()) {
        (Some(d), den) if den != "1" => format!(" = {d}"),
        _ => String::new(),
    };
    format!(
        "{}{} (t={}, spreads {}, merges {})",
        rep.rate, decimal, rep.t, rep.spreads, rep.merges
    )
}

/// Renders the fractional-heuristic section (shared by `scapm` and `check`).
pub fn render_scapm(rep: &ScapmReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "rate: {}", scapm_summary(rep))?;
    if let Some(trace) = &rep.trace {
        writeln!(out, "trace:")?;
        for line in trace {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Renders the exhaustive-search section (shared by `exact` and `check`).
pub fn render_exact(rep: &ExactReport, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "rate: {}", rep.rate)?;
    writeln!(out, "examined: {}", rep.examined)?;
    writeln!(out, "witness:")?;
    for row in &rep.witness {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Renders the full `check` record as a compact table.
pub fn render_report(rep: &RateReport, out: &mut dyn Write) -> io::Result<()> {
    let d = &rep.instance;
    let c = &d.classification;
    writeln!(out, "instance: m={} s={}", d.m, d.s)?;
    writeln!(
        out,
        "classes: unicast={} acyclic={} directed_cycle={} near_complete={}",
        c.unicast, c.acyclic, c.directed_cycle, c.near_complete
    )?;
    writeln!(
        out,
        "lower: {} (witness {})",
        rep.lower.value,
        join_u8(&rep.lower.witness)
    )?;
    writeln!(
        out,
        "capm: {} (post-balance {}, promotions {}, messages {})",
        rep.capm.rate,
        rep.capm.post_balance_rate,
        rep.capm.promotions,
        rep.capm.messages.len()
    )?;
    match &rep.scapm {
        Some(s) => writeln!(out, "scapm: {}", scapm_summary(s))?,
        None => writeln!(out, "scapm: skipped")?,
    }
    match &rep.exact {
        Some(e) => writeln!(out, "exact: {} (examined {})", e.rate, e.examined)?,
        None => writeln!(out, "exact: skipped")?,
    }
    writeln!(out, "certificate: {}", rep.certificate)?;
    writeln!(out, "certified_optimal: {}", rep.certified_optimal)?;
    for note in &rep.notes {
        writeln!(out, "note: {note}")?;
    }
    if let Some(trace) = &rep.capm.trace {
        writeln!(out, "capm trace:")?;
        for line in trace {
            writeln!(out, "{line}")?;
        }
    }
    if let Some(s) = &rep.scapm {
        if let Some(trace) = &s.trace {
            writeln!(out, "scapm trace:")?;
            for line in trace {
                writeln!(out, "{line}")?;
            }
        }
    }
    if let Some(e) = &rep.exact {
        if rep.capm.trace.is_some() {
            writeln!(out, "exact witness:")?;
            for row in &e.witness {
                writeln!(out, "{row}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexcode::fixtures::{directed_cycle, fractional_split, pentagon, xor_merge_pair};
    use indexcode::oracle::DEFAULT_MAX_BITS;

    fn options() -> ReportOptions {
        ReportOptions {
            max_oracle_bits: DEFAULT_MAX_BITS,
            with_trace: false,
        }
    }

    #[test]
    fn decimal_expansion_is_exact() {
        let rat = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(terminating_decimal(&rat(21, 2)).unwrap(), "10.5");
        assert_eq!(terminating_decimal(&rat(5, 2)).unwrap(), "2.5");
        assert_eq!(terminating_decimal(&rat(3, 1)).unwrap(), "3");
        assert_eq!(terminating_decimal(&rat(1, 20)).unwrap(), "0.05");
        assert_eq!(terminating_decimal(&rat(3, 8)).unwrap(), "0.375");
        assert_eq!(terminating_decimal(&rat(-21, 2)).unwrap(), "-10.5");
        assert_eq!(terminating_decimal(&rat(1, 3)), None);
        assert_eq!(terminating_decimal(&rat(5, 6)), None);
    }

    #[test]
    fn merge_example_certifies_by_meeting_bounds() {
        let built = build_report(&xor_merge_pair(), &[], &options());
        let rep = &built.report;
        assert_eq!(rep.lower.value, 5);
        assert_eq!(rep.capm.rate, 5);
        assert_eq!(rep.capm.post_balance_rate, 6);
        assert_eq!(rep.exact.as_ref().unwrap().rate, 5);
        assert!(rep.certified_optimal);
        assert_eq!(rep.certificate, "bounds-met");
        assert_eq!(built.guard_violations, 0);
    }

    #[test]
    fn cycles_certify_by_the_cycle_formula() {
        let built = build_report(&directed_cycle(5), &[], &options());
        let rep = &built.report;
        assert!(rep.instance.classification.directed_cycle);
        assert_eq!(rep.lower.value, 4);
        assert_eq!(rep.capm.rate, 4);
        assert!(rep.certified_optimal);
        assert_eq!(rep.certificate, "directed-cycle");
    }

    #[test]
    fn fractional_gap_reports_open_and_skips_oracle() {
        let built = build_report(&fractional_split(), &[], &options());
        let rep = &built.report;
        assert_eq!(rep.lower.value, 10);
        assert_eq!(rep.capm.rate, 11);
        let s = rep.scapm.as_ref().unwrap();
        assert_eq!(s.rate, "21/2");
        assert_eq!(s.decimal.as_deref(), Some("10.5"));
        assert_eq!(s.t, 2);
        assert!(rep.exact.is_none(), "13 bits exceed the default budget");
        assert!(!rep.certified_optimal);
        assert_eq!(rep.certificate, "none");
        assert_eq!(built.guard_violations, 1);
        assert!(rep.notes.iter().any(|n| n.starts_with("skipped:")));
        assert!(rep.notes.iter().any(|n| n.contains("optimality open")));
    }

    #[test]
    fn pentagon_reports_all_three_rates() {
        let built = build_report(&pentagon(), &[], &options());
        let rep = &built.report;
        assert_eq!(rep.lower.value, 2);
        assert_eq!(rep.scapm.as_ref().unwrap().rate, "5/2");
        assert_eq!(rep.exact.as_ref().unwrap().rate, 3);
        assert!(!rep.certified_optimal);
    }

    #[test]
    fn reports_serialize_with_stable_field_order() {
        let built = build_report(&directed_cycle(3), &[], &options());
        let text = serde_json::to_string(&built.report).unwrap();
        let top_level: Vec<&str> = ["instance", "lower", "capm", "scapm", "exact"]
            .iter()
            .copied()
            .filter(|k| text.contains(&format!("\"{k}\"")))
            .collect();
        assert_eq!(top_level.len(), 5);
        let positions: Vec<usize> = top_level
            .iter()
            .map(|k| text.find(&format!("\"{k}\"")).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
