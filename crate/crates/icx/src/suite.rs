//! Built-in reproduction suite: reruns the worked examples and compares
//! every number against its frozen expected value.
//!
//! The suite ignores tuning flags on purpose — it always runs with the
//! default search budget and no traces, so its output is byte-identical
//! everywhere and a mismatch always means the code changed behavior, not
//! the configuration.

use std::io::Write;

use indexcode::oracle::DEFAULT_MAX_BITS;
use indexcode::{capm, dsm_bound, fixtures};

use crate::report::{build_report, ReportOptions};
use crate::{Failure, R};

fn options() -> ReportOptions {
    ReportOptions {
        max_oracle_bits: DEFAULT_MAX_BITS,
        with_trace: false,
    }
}

/// Runs every row, printing one `PASS`/`FAIL` line each plus a summary.
///
/// # Errors
///
/// Returns exit code 1 (as a [`Failure`]) when any row fails.
pub fn run_suite(out: &mut dyn Write) -> R {
    let mut checks = 0usize;
    let mut failures = 0usize;
    let mut row = |out: &mut dyn Write, name: &str, ok: bool, got: &str| -> R {
        checks += 1;
        if !ok {
            failures += 1;
        }
        writeln!(out, "{} {} — {}", if ok { "PASS" } else { "FAIL" }, name, got)?;
        Ok(())
    };

    {
        let built = build_report(&fixtures::xor_merge_pair(), &[], &options());
        let rep = &built.report;
        let ok = rep.lower.value == 5
            && rep.capm.rate == 5
            && rep.capm.post_balance_rate == 6
            && rep.certified_optimal;
        let got = format!(
            "lower {} capm {} post-balance {} certified {}",
            rep.lower.value, rep.capm.rate, rep.capm.post_balance_rate, rep.certified_optimal
        );
        row(out, "four-decoder-merge", ok, &got)?;
    }

    {
        let base = capm::run_capm(&fixtures::label_sensitive()).rate;
        let swapped = capm::run_capm(&fixtures::label_sensitive_relabeled()).rate;
        let ok = base == 5 && swapped == 6;
        let got = format!("capm {base} after-relabel {swapped}");
        row(out, "labeling-sensitivity", ok, &got)?;
    }

    {
        let run = capm::run_capm(&fixtures::late_promotion());
        let ok = run.rate == 5;
        let got = format!("capm {}", run.rate);
        row(out, "promotion-cascade", ok, &got)?;
    }

    {
        let built = build_report(&fixtures::fractional_split(), &[], &options());
        let rep = &built.report;
        let scapm = rep.scapm.as_ref();
        let ok = rep.lower.value == 10
            && rep.capm.rate == 11
            && scapm.is_some_and(|s| s.rate == "21/2" && s.t == 2)
            && !rep.certified_optimal;
        let got = format!(
            "lower {} capm {} scapm {} certified {}",
            rep.lower.value,
            rep.capm.rate,
            scapm.map_or("-", |s| s.rate.as_str()),
            rep.certified_optimal
        );
        row(out, "fractional-split", ok, &got)?;
    }

    {
        let built = build_report(&fixtures::pentagon(), &[], &options());
        let rep = &built.report;
        let ok = rep.lower.value == 2
            && rep.scapm.as_ref().is_some_and(|s| s.rate == "5/2" && s.t == 2)
            && rep.exact.as_ref().is_some_and(|e| e.rate == 3);
        let got = format!(
            "lower {} scapm {} exact {}",
            rep.lower.value,
            rep.scapm.as_ref().map_or("-", |s| s.rate.as_str()),
            rep.exact
                .as_ref()
                .map_or_else(|| "-".to_string(), |e| e.rate.to_string())
        );
        row(out, "pentagon", ok, &got)?;
    }

    for m in 3..=10u8 {
        let inst = fixtures::directed_cycle(m);
        let lower = dsm_bound::dsm_plus_dp(&inst).value;
        let rate = capm::run_capm(&inst).rate;
        let want = usize::from(m) - 1;
        let ok = lower == want && rate == want;
        let got = format!("lower {lower} capm {rate} (expect {want})");
        row(out, &format!("cycle m={m}"), ok, &got)?;
    }

    writeln!(out, "suite: {checks} checks, {failures} failed")?;
    if failures > 0 {
        Err(Failure::Exit(1))
    } else {
        Ok(())
    }
}
