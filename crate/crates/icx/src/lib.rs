//! `icx` — command-line analyzer for groupcast index-coding instances.
//!
//! One binary, seven subcommands: classify an instance (`analyze`), compute
//! the sequencing lower bound (`bound`), run the integral and fractional
//! packing heuristics (`capm`, `scapm`), search exhaustively for the optimal
//! scalar-linear plan (`exact`), combine everything into a certified report
//! (`check`), and construct instances (`generate`).
//!
//! Design notes:
//!
//! - Every command writes results to stdout and warnings/diagnostics to
//!   stderr, and is byte-deterministic for fixed input and flags.
//! - All logic takes `&mut dyn Write` so tests can capture output without
//!   spawning processes; `main` stays a thin argument-parsing shim.
//! - Exit codes: 0 success, 1 internal failure or suite mismatch, 2 unusable
//!   input (unreadable file, parse error, bad parameters), 3 a budget guard
//!   tripped under `--strict`.
//! - Rates are exact integers and fractions end to end; no floating point.

pub mod report;
pub mod suite;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexcode::instance::{self, Instance, NormalizeOptions, Warning};
use indexcode::{capm, dsm_bound, fixtures, generate, oracle, scapm, GuardViolation};
use serde::Serialize;

use report::{
    build_report, CapmReport, ClassFlags, ExactReport, LowerReport, ReportOptions, ScapmReport,
    SkippedReport,
};

// ============================================================================
// Command-line surface
// ============================================================================

/// Top-level argument structure.
#[derive(Debug, Parser)]
#[command(
    name = "icx",
    version,
    about = "Analyze groupcast index-coding instances: bounds, heuristics, \
             exhaustive search, and optimality certificates"
)]
pub struct Cli {
    /// Which command to run.
    #[command(subcommand)]
    pub command: Command,
    /// Flags shared by every command.
    #[command(flatten)]
    pub opts: GlobalOpts,
}

/// Flags shared by every command.
#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Emit machine-readable JSON instead of the human summary.
    #[arg(long, global = true)]
    pub json: bool,

    /// Embed step-by-step event logs in heuristic output.
    #[arg(long, global = true)]
    pub trace: bool,

    /// Analyze the instance exactly as written: keep undemanded bits and
    /// duplicate caches instead of normalizing them away.
    #[arg(long = "no-normalize", global = true)]
    pub no_normalize: bool,

    /// Exit 3 when any component is skipped by a budget guard.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Skip the exhaustive search on instances with more bits than this.
    #[arg(
        long,
        global = true,
        value_name = "N",
        default_value_t = oracle::DEFAULT_MAX_BITS
    )]
    pub max_oracle_bits: usize,

    /// Seed for the random instance generators.
    #[arg(long, global = true, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
}

/// The subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, normalize, and classify an instance.
    Analyze {
        /// Instance file (`-` for stdin).
        path: String,
    },
    /// Compute the sequencing lower bound with its witness ordering.
    Bound {
        /// Instance file (`-` for stdin).
        path: String,
    },
    /// Run the integral packing heuristic.
    Capm {
        /// Instance file (`-` for stdin).
        path: String,
    },
    /// Run the fractional packing heuristic.
    Scapm {
        /// Instance file (`-` for stdin).
        path: String,
    },
    /// Exhaustively find the optimal scalar-linear plan over GF(2).
    Exact {
        /// Instance file (`-` for stdin).
        path: String,
    },
    /// Full report: bounds, heuristics, search, and a certificate.
    Check {
        /// Instance file (`-` for stdin); omit with `--suite`.
        path: Option<String>,
        /// Rerun the built-in worked examples against their frozen
        /// expected values instead of reading a file.
        #[arg(long)]
        suite: bool,
    },
    /// Construct an instance and write its text form.
    Generate {
        /// Which family to construct.
        #[arg(value_enum)]
        kind: GenerateKind,
        /// Decoder count (exact for `cycle`, upper bound for random kinds).
        #[arg(long)]
        m: u8,
        /// Bit-count upper bound (random kinds only; drawn from the seed).
        #[arg(long)]
        s: Option<usize>,
        /// Write here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

/// Instance families `generate` can construct.
#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GenerateKind {
    /// One directed cycle: decoder k wants a bit held only by decoder k−1.
    Cycle,
    /// Random instance whose demands admit a topological order.
    Dag,
    /// Random instance where every bit is cached by none, all-but-one, or
    /// all-but-two decoders.
    NearComplete,
    /// Unconstrained random instance.
    Random,
}

// ============================================================================
// Control flow
// ============================================================================

/// Why a command stopped: an output-stream failure, or a deliberate exit.
#[derive(Debug)]
pub enum Failure {
    /// Writing to stdout/stderr failed (e.g. a closed pipe).
    Io(io::Error),
    /// Deliberate nonzero exit; diagnostics were already written.
    Exit(u8),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Command result: `Ok` means exit 0.
pub type R<T = ()> = Result<T, Failure>;

/// Runs one parsed command, returning the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Exit(code)) => code,
        // The reader closed the pipe (e.g. `icx … | head`); stop quietly.
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> R {
    let opts = &cli.opts;
    match &cli.command {
        Command::Analyze { path } => cmd_analyze(path, opts, out, err),
        Command::Bound { path } => cmd_bound(path, opts, out, err),
        Command::Capm { path } => cmd_capm(path, opts, out, err),
        Command::Scapm { path } => cmd_scapm(path, opts, out, err),
        Command::Exact { path } => cmd_exact(path, opts, out, err),
        Command::Check { path, suite } => cmd_check(path.as_deref(), *suite, opts, out, err),
        Command::Generate { kind, m, s, out: dest } => {
            cmd_generate(*kind, *m, *s, dest.as_deref(), opts, out, err)
        }
    }
}

// ============================================================================
// Input plumbing
// ============================================================================

/// Reads and parses an instance, normalizing unless disabled.
///
/// Diagnostics go to `err`; any failure to obtain a usable instance is
/// exit code 2.
fn load(path: &str, opts: &GlobalOpts, err: &mut dyn Write) -> R<(Instance, Vec<Warning>)> {
    let text = if path == "-" {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf).map(|_| buf)
    } else {
        fs::read_to_string(path)
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "error: cannot read `{path}`: {e}")?;
            return Err(Failure::Exit(2));
        }
    };
    let inst = match instance::parse(&text) {
        Ok(inst) => inst,
        Err(e) => {
            writeln!(err, "parse error: {e}")?;
            return Err(Failure::Exit(2));
        }
    };
    if opts.no_normalize {
        return Ok((inst, Vec::new()));
    }
    let normalized = instance::normalize(&inst, NormalizeOptions::default());
    for warning in &normalized.warnings {
        writeln!(err, "warning: {warning}")?;
    }
    Ok((normalized.instance, normalized.warnings))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> R {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::Io(io::Error::other(e)))?;
    writeln!(out)?;
    Ok(())
}

/// Reports a tripped budget guard on the appropriate stream and picks the
/// exit code: 3 under `--strict`, 0 otherwise.
fn report_skip(g: &GuardViolation, opts: &GlobalOpts, out: &mut dyn Write) -> R {
    if opts.json {
        #[derive(Serialize)]
        struct Envelope {
            skipped: SkippedReport,
        }
        write_json(
            out,
            &Envelope {
                skipped: SkippedReport::from(g),
            },
        )?;
    } else {
        writeln!(out, "skipped: {g}")?;
    }
    if opts.strict {
        Err(Failure::Exit(3))
    } else {
        Ok(())
    }
}

// ============================================================================
// Commands
// ============================================================================

#[derive(Serialize)]
struct AnalyzeReport {
    m: u8,
    s: usize,
    classification: ClassFlags,
    warnings: Vec<String>,
}

fn cmd_analyze(path: &str, opts: &GlobalOpts, out: &mut dyn Write, err: &mut dyn Write) -> R {
    let (inst, warnings) = load(path, opts, err)?;
    let class = inst.classify();
    if opts.json {
        write_json(
            out,
            &AnalyzeReport {
                m: inst.m(),
                s: inst.s(),
                classification: class.into(),
                warnings: warnings.iter().map(ToString::to_string).collect(),
            },
        )
    } else {
        writeln!(
            out,
            "m={} s={} unicast={} acyclic={} directed_cycle={} near_complete={}",
            inst.m(),
            inst.s(),
            class.unicast,
            class.acyclic,
            class.directed_cycle,
            class.near_complete
        )?;
        Ok(())
    }
}

fn cmd_bound(path: &str, opts: &GlobalOpts, out: &mut dyn Write, err: &mut dyn Write) -> R {
    let (inst, _) = load(path, opts, err)?;
    let chain = dsm_bound::dsm_plus_dp(&inst);
    let rep = LowerReport {
        value: chain.value,
        witness: chain.permutation,
        terms: chain.terms,
    };
    if opts.json {
        write_json(out, &rep)
    } else {
        report::render_lower(&rep, out)?;
        Ok(())
    }
}

fn cmd_capm(path: &str, opts: &GlobalOpts, out: &mut dyn Write, err: &mut dyn Write) -> R {
    let (inst, _) = load(path, opts, err)?;
    let run = capm::run_capm(&inst);
    let rep = CapmReport::from_run(&run, opts.trace);
    if opts.json {
        write_json(out, &rep)
    } else {
        report::render_capm(&rep, out)?;
        Ok(())
    }
}

fn cmd_scapm(path: &str, opts: &GlobalOpts, out: &mut dyn Write, err: &mut dyn Write) -> R {
    let (inst, _) = load(path, opts, err)?;
    match scapm::run_scapm(&inst) {
        Ok(run) => {
            let rep = ScapmReport::from_run(&run, opts.trace);
            if opts.json {
                write_json(out, &rep)
            } else {
                report::render_scapm(&rep, out)?;
                Ok(())
            }
        }
        Err(g) => report_skip(&g, opts, out),
    }
}

fn cmd_exact(path: &str, opts: &GlobalOpts, out: &mut dyn Write, err: &mut dyn Write) -> R {
    let (inst, _) = load(path, opts, err)?;
    match oracle::exact_scalar_linear(&inst, opts.max_oracle_bits) {
        Ok(found) => {
            let rep = ExactReport {
                rate: found.rate,
                examined: found.examined,
                witness: found.code.row_strings(),
            };
            if opts.json {
                write_json(out, &rep)
            } else {
                report::render_exact(&rep, out)?;
                Ok(())
            }
        }
        Err(g) => report_skip(&g, opts, out),
    }
}

fn cmd_check(
    path: Option<&str>,
    run_suite: bool,
    opts: &GlobalOpts,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> R {
    if run_suite {
        if path.is_some() {
            writeln!(err, "error: --suite takes no instance path")?;
            return Err(Failure::Exit(2));
        }
        return suite::run_suite(out);
    }
    let Some(path) = path else {
        writeln!(err, "error: `check` needs an instance path or --suite")?;
        return Err(Failure::Exit(2));
    };
    let (inst, warnings) = load(path, opts, err)?;
    let built = build_report(
        &inst,
        &warnings,
        &ReportOptions {
            max_oracle_bits: opts.max_oracle_bits,
            with_trace: opts.trace,
        },
    );
    if opts.json {
        write_json(out, &built.report)?;
    } else {
        report::render_report(&built.report, out)?;
    }
    if opts.strict && built.guard_violations > 0 {
        return Err(Failure::Exit(3));
    }
    Ok(())
}

fn cmd_generate(
    kind: GenerateKind,
    m: u8,
    s: Option<usize>,
    dest: Option<&std::path::Path>,
    opts: &GlobalOpts,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> R {
    const MAX_M: u8 = 16;
    let need_s = |s: Option<usize>, err: &mut dyn Write| -> R<usize> {
        match s {
            Some(s) if (1..=instance::MAX_BITS).contains(&s) => Ok(s),
            Some(s) => {
                writeln!(
                    err,
                    "error: --s must be between 1 and {} (got {s})",
                    instance::MAX_BITS
                )?;
                Err(Failure::Exit(2))
            }
            None => {
                writeln!(err, "error: this kind needs --s (bit-count upper bound)")?;
                Err(Failure::Exit(2))
            }
        }
    };
    let check_m = |min: u8, err: &mut dyn Write| -> R {
        if (min..=MAX_M).contains(&m) {
            Ok(())
        } else {
            writeln!(err, "error: --m must be between {min} and {MAX_M} (got {m})")?;
            Err(Failure::Exit(2))
        }
    };

    let inst = match kind {
        GenerateKind::Cycle => {
            check_m(2, err)?;
            if s.is_some() {
                writeln!(err, "error: `cycle` takes no --s; its bit count equals --m")?;
                return Err(Failure::Exit(2));
            }
            fixtures::directed_cycle(m)
        }
        GenerateKind::Dag => {
            check_m(2, err)?;
            generate::random_acyclic(opts.seed, m, need_s(s, err)?)
        }
        GenerateKind::NearComplete => {
            check_m(3, err)?;
            generate::random_near_complete(opts.seed, m, m, need_s(s, err)?)
        }
        GenerateKind::Random => {
            check_m(2, err)?;
            generate::random_instance(opts.seed, m, need_s(s, err)?)
        }
    };

    let text = instance::render(&inst);
    match dest {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                writeln!(err, "error: cannot write `{}`: {e}", path.display())?;
                return Err(Failure::Exit(1));
            }
            Ok(())
        }
        None => {
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let cli = Cli::try_parse_from(args).expect("arguments parse");
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(&cli, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).expect("stdout is UTF-8"),
            String::from_utf8(err).expect("stderr is UTF-8"),
        )
    }

    #[test]
    fn generate_cycle_round_trips_through_analyze() {
        let (code, text, _) = run_args(&["icx", "generate", "cycle", "--m", "4"]);
        assert_eq!(code, 0);
        let inst = instance::parse(&text).expect("generated text parses");
        assert!(inst.classify().directed_cycle);
    }

    #[test]
    fn generate_is_seed_deterministic() {
        let args = ["icx", "generate", "random", "--m", "5", "--s", "8", "--seed", "7"];
        let (code_a, a, _) = run_args(&args);
        let (code_b, b, _) = run_args(&args);
        assert_eq!((code_a, code_b), (0, 0));
        assert_eq!(a, b);
        let (_, c, _) = run_args(&[
            "icx", "generate", "random", "--m", "5", "--s", "8", "--seed", "8",
        ]);
        assert_ne!(a, c, "different seeds give different instances");
    }

    #[test]
    fn generate_rejects_bad_parameters() {
        let (code, _, err) = run_args(&["icx", "generate", "cycle", "--m", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("--m"));
        let (code, _, err) = run_args(&["icx", "generate", "dag", "--m", "5"]);
        assert_eq!(code, 2);
        assert!(err.contains("--s"));
        let (code, _, err) = run_args(&["icx", "generate", "cycle", "--m", "4", "--s", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("takes no --s"));
    }

    #[test]
    fn check_requires_a_path_or_suite() {
        let (code, _, err) = run_args(&["icx", "check"]);
        assert_eq!(code, 2);
        assert!(err.contains("--suite"));
    }

    #[test]
    fn suite_passes_and_reports_every_row() {
        let (code, text, _) = run_args(&["icx", "check", "--suite"]);
        assert_eq!(code, 0, "suite output:\n{text}");
        assert!(!text.contains("FAIL"));
        assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 13);
        assert!(text.ends_with("suite: 13 checks, 0 failed\n"));
    }
}
