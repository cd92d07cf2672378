//! The commands behind the binary, as functions from input text to output text.

use std::fmt::Write as _;
use std::time::Instant;

use twopt_core::conflict::{color_conflict_graph, colors_used, conflict_graph, decode_witness, encode_witness, is_proper, max_stain_load};
use twopt_core::dealternation::{dealternation_report, global_dealternate};
use twopt_core::io::{parse_gr, parse_td, write_td};
use twopt_core::oracle::{exact_treewidth, optimum_reduced_sepforest, MAX_ORACLE_VERTICES};
use twopt_core::{Graph, TreeDecomposition};
use twopt_msonf::{check_equivalence, normalize, EquivalenceError, EvalError, Limits, Pipeline};

use crate::report::{CommandOutput, Exit, RunReport};

fn read_pair(gr: &str, td: &str) -> Result<(Graph, twopt_core::io::TdFile), CommandOutput> {
    let g = parse_gr(gr).map_err(|e| CommandOutput::error(Exit::ParseError, format!("graph: {e}")))?;
    let t = parse_td(td).map_err(|e| CommandOutput::error(Exit::ParseError, format!("decomposition: {e}")))?;
    Ok((g, t))
}

/// Checks a decomposition against its graph: exit 0 when valid, 1 with the
/// violations otherwise, 2 on unreadable input.
pub fn validate(gr: &str, td: &str) -> CommandOutput {
    let (g, file) = match read_pair(gr, td) {
        Ok(p) => p,
        Err(out) => return out,
    };
    let t = match file.into_decomposition(&g) {
        Ok(t) => t,
        Err(e) => return CommandOutput::new(Exit::CheckFailed, format!("invalid: {e}\n"), ""),
    };
    let violations = t.validate();
    if violations.is_empty() {
        return CommandOutput::new(Exit::Ok, format!("valid width {}\n", t.width()), "");
    }
    let mut out = String::from("invalid\n");
    for v in violations {
        let _ = writeln!(out, "violation: {v}");
    }
    CommandOutput::new(Exit::CheckFailed, out, "")
}

/// Result of [`solve`]: the command output and, when the solver ran, its report.
pub struct Solved {
    pub output: CommandOutput,
    pub report: Option<RunReport>,
}

/// Turns a valid decomposition into an optimum-width one through the dealternated
/// separation forest, checking every intermediate bound. The new decomposition
/// goes to standard output and the report to standard error.
pub fn solve(instance: &str, gr: &str, td: &str, with_timings: bool) -> Solved {
    let fail = |output| Solved { output, report: None };
    let (g, file) = match read_pair(gr, td) {
        Ok(p) => p,
        Err(out) => return fail(out),
    };
    let t = match file.into_decomposition(&g) {
        Ok(t) => t,
        Err(e) => return fail(CommandOutput::error(Exit::CheckFailed, format!("input decomposition: {e}"))),
    };
    if let Some(v) = t.validate().first() {
        return fail(CommandOutput::error(Exit::CheckFailed, format!("input decomposition is invalid: {v}")));
    }
    if g.vertex_count() > MAX_ORACLE_VERTICES {
        return fail(CommandOutput::error(
            Exit::GuardExceeded,
            format!(
                "graph has {} vertices, the exact oracle accepts at most {MAX_ORACLE_VERTICES}; there is no oracle-free mode",
                g.vertex_count()
            ),
        ));
    }
    let mut report = RunReport::new(instance, t.width());
    match run_solver(&t, &mut report) {
        Ok(text) => {
            let exit = if report.passed() { Exit::Ok } else { Exit::CheckFailed };
            let stdout = if report.passed() { text } else { String::new() };
            let output = CommandOutput::new(exit, stdout, report.render(with_timings));
            Solved { output, report: Some(report) }
        }
        Err(message) => {
            let stderr = format!("{}error: {message}\n", report.render(with_timings));
            Solved { output: CommandOutput::new(Exit::CheckFailed, "", stderr), report: Some(report) }
        }
    }
}

fn run_solver(t: &TreeDecomposition<'_>, report: &mut RunReport) -> Result<String, String> {
    let g = t.graph();
    let k = t.width();
    let bounds = report.bounds;

    let start = Instant::now();
    let tw = exact_treewidth(g).map_err(|e| e.to_string())?;
    let f0 = optimum_reduced_sepforest(g).map_err(|e| e.to_string())?;
    report.optimum_width = tw;
    report.timings.push(("oracle", start.elapsed()));

    let start = Instant::now();
    let global = global_dealternate(t, &f0).map_err(|e| e.to_string())?;
    let f = global.forest;
    let nodes = dealternation_report(t, &f, k);
    let max_factors = nodes.iter().map(|r| r.factors).max().unwrap_or(0);
    let max_children = nodes.iter().map(|r| r.context_children).max().unwrap_or(0);
    report.check("dealternation-suite", format!("d1 factors {max_factors} <= f {}", bounds.f()), max_factors <= bounds.f());
    report.check(
        "dealternation-suite",
        format!("d2 context children {max_children} <= g {}", bounds.g()),
        max_children <= bounds.g(),
    );
    report.check(
        "dealternation-suite",
        format!("width {} = optimum {tw}", f.width()),
        f.width() == tw,
    );
    let steps_ok = global.steps.iter().all(|s| s.reduced && s.width == tw);
    report.check("dealternation-suite", format!("{} local steps reduced and optimum", global.steps.len()), steps_ok);
    report.timings.push(("dealternation", start.elapsed()));

    let start = Instant::now();
    let load = max_stain_load(t, &f).map_err(|e| e.to_string())?;
    report.check("conflict-suite", format!("stain load {load} <= h {}", bounds.h()), load <= bounds.h());
    let h = conflict_graph(t, &f).map_err(|e| e.to_string())?;
    report.check("conflict-suite", "conflict graph chordal", h.is_chordal());
    let coloring = color_conflict_graph(t, &f).map_err(|e| e.to_string())?;
    let used = colors_used(&coloring);
    report.check(
        "conflict-suite",
        format!("coloring proper with {used} colors"),
        is_proper(&h, &coloring) && used <= load.max(usize::from(g.vertex_count() > 0)),
    );
    let witness = encode_witness(t, &f, &coloring).map_err(|e| e.to_string())?;
    let decoded = decode_witness(t, &witness).map_err(|e| e.to_string())?;
    report.check(
        "witness-round-trip",
        "decode(encode) reproduces the forest",
        decoded.forest().parents() == f.forest().parents(),
    );
    report.timings.push(("conflict", start.elapsed()));

    let out = f.induced_decomposition();
    report.check("end-to-end-solve", "output decomposition valid", out.is_valid());
    report.check("end-to-end-solve", format!("output width {} = treewidth {tw}", out.width()), out.width() == tw);
    Ok(write_td(&out))
}

fn read_pipeline(text: &str, which: &str) -> Result<Pipeline, CommandOutput> {
    Pipeline::parse(text).map_err(|e| CommandOutput::error(Exit::ParseError, format!("{which}: {e}")))
}

/// Prints the normal form of a pipeline, with rule counts and sizes on standard error.
pub fn mso_normalize(text: &str) -> CommandOutput {
    let p = match read_pipeline(text, "pipeline") {
        Ok(p) => p,
        Err(out) => return out,
    };
    match normalize(&p) {
        Ok(n) => {
            let mut stderr = format!("size {} -> {}\n", p.size(), n.pipeline.size());
            for (rule, count) in &n.applications {
                let _ = writeln!(stderr, "rule {rule} applied {count}");
            }
            CommandOutput::new(Exit::Ok, n.pipeline.to_string(), stderr)
        }
        Err(e) => CommandOutput::error(Exit::CheckFailed, e),
    }
}

/// Compares two pipelines, or one pipeline and its normal form, on random structures.
pub fn mso_check_equiv(
    first: &str,
    second: Option<&str>,
    trials: usize,
    universe_max: usize,
    seed: u64,
) -> CommandOutput {
    let p = match read_pipeline(first, "pipeline") {
        Ok(p) => p,
        Err(out) => return out,
    };
    let q = match second {
        Some(text) => match read_pipeline(text, "pipeline2") {
            Ok(q) => q,
            Err(out) => return out,
        },
        None => match normalize(&p) {
            Ok(n) => n.pipeline,
            Err(e) => return CommandOutput::error(Exit::CheckFailed, e),
        },
    };
    match check_equivalence(&p, &q, trials, universe_max, seed, Limits::default()) {
        Ok(report) => {
            let exit = if report.equivalent() { Exit::Ok } else { Exit::CheckFailed };
            CommandOutput::new(exit, format!("{report}\n"), "")
        }
        Err(EquivalenceError::Eval(e @ (EvalError::Guard(_) | EvalError::Structure(_)))) => {
            CommandOutput::error(Exit::GuardExceeded, e)
        }
        Err(e) => CommandOutput::error(Exit::CheckFailed, e),
    }
}
