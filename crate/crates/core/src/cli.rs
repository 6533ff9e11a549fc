//! The `incdeg` command line.
//!
//! Exit codes: 0 success (or consistent, for `check`), 1 inconsistent
//! (`check` only), 2 input error, 3 solver unavailable or failing.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asp::{emit_repair_program, run_external_solver, run_solver_on_file, SolverError, SOLVER_ENV};
use crate::measure::{inc_deg_g3_with, MeasureRequest, Normalizer};
use crate::model::{ConstraintSet, DatabaseInstance, Semantics, Tid, ViolationWitness};
use crate::repair::{RepairEngine, DEFAULT_REPAIR_CAP};
use crate::text::{parse_constraints_source, parse_instance_source, serialize_report, Source};
use crate::violations::{dump, find_conflicts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCONSISTENT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "incdeg", version, about = "Repairs and the g3 inconsistency degree of a database under denial constraints")]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    S,
    C,
    #[value(name = "c-endo")]
    CEndo,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::S => Semantics::Subset,
            SemanticsArg::C => Semantics::Cardinality,
            SemanticsArg::CEndo => Semantics::EndogenousCardinality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormalizerArg {
    Full,
    Endo,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Report the violations of the constraints.
    Check {
        instance: PathBuf,
        constraints: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also print the conflict hypergraph, one edge per line, to stderr.
        #[arg(long)]
        dump: bool,
    },
    /// Compute the g3 inconsistency degree.
    Measure {
        instance: PathBuf,
        constraints: PathBuf,
        #[arg(long, value_enum, default_value_t = SemanticsArg::C)]
        semantics: SemanticsArg,
        #[arg(long, value_enum, default_value_t = NormalizerArg::Full)]
        normalizer: NormalizerArg,
        /// Number of witness repairs to report.
        #[arg(long, default_value_t = 1)]
        witnesses: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Enumerate repairs.
    Repairs {
        instance: PathBuf,
        constraints: PathBuf,
        #[arg(long, value_enum, default_value_t = SemanticsArg::C)]
        semantics: SemanticsArg,
        /// Stop after this many repairs.
        #[arg(long, default_value_t = DEFAULT_REPAIR_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
        cap: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Write the repair program; optionally solve it and compare.
    EmitAsp {
        instance: PathBuf,
        constraints: PathBuf,
        /// Program file; stdout when absent (and not solving).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the external solver and compare with the internal optimum.
        #[arg(long)]
        solve: bool,
        /// Solver command; `{file}` is replaced by the program path.
        #[arg(long, env = SOLVER_ENV)]
        solver_cmd: Option<String>,
    },
}

/// Everything a run produced, so tests can drive the CLI in-process.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Outcome {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome::fail(EXIT_INPUT, text)
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            }
        }
    }
}

struct Inputs {
    db: DatabaseInstance,
    constraints: ConstraintSet,
    warnings: String,
}

fn load(instance: &Path, constraints: &Path) -> Result<Inputs, Outcome> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|e| Outcome::fail(EXIT_INPUT, format!("error: cannot read {}: {e}", p.display())))
    };
    let facts = read(instance)?;
    let sigma = read(constraints)?;
    let (iname, cname) = (instance.display().to_string(), constraints.display().to_string());
    let parsed = parse_instance_source(Source::new(&iname, &facts))
        .map_err(|e| Outcome::fail(EXIT_INPUT, format!("error: {e}")))?;
    let constraints = parse_constraints_source(Source::new(&cname, &sigma), parsed.instance.schema())
        .map_err(|e| Outcome::fail(EXIT_INPUT, format!("error: {e}")))?;
    let mut warnings = String::new();
    for w in &parsed.warnings {
        let _ = writeln!(warnings, "{w}");
    }
    Ok(Inputs {
        db: parsed.instance,
        constraints,
        warnings,
    })
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn tid_list(tids: &[Tid]) -> String {
    let parts: Vec<String> = tids.iter().map(Tid::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

fn execute(cli: Cli) -> Outcome {
    let (instance, constraints) = match &cli.command {
        Cmd::Check { instance, constraints, .. }
        | Cmd::Measure { instance, constraints, .. }
        | Cmd::Repairs { instance, constraints, .. }
        | Cmd::EmitAsp { instance, constraints, .. } => (instance, constraints),
    };
    let inputs = match load(instance, constraints) {
        Ok(i) => i,
        Err(o) => return o,
    };
    let mut outcome = match cli.command {
        Cmd::Check { format, dump: show, .. } => check(&inputs, format, show),
        Cmd::Measure {
            semantics,
            normalizer,
            witnesses,
            format,
            ..
        } => measure(&inputs, semantics.into(), normalizer, witnesses, format),
        Cmd::Repairs {
            semantics, cap, format, ..
        } => repairs(&inputs, semantics.into(), usize::try_from(cap).unwrap_or(usize::MAX), format),
        Cmd::EmitAsp {
            out, solve, solver_cmd, ..
        } => emit_asp(&inputs, out.as_deref(), solve, solver_cmd.as_deref()),
    };
    outcome.stderr.insert_str(0, &inputs.warnings);
    outcome
}

#[derive(Serialize)]
struct CheckJson<'a> {
    consistent: bool,
    violations: usize,
    edges: &'a [ViolationWitness],
}

fn check(inputs: &Inputs, format: Format, show: bool) -> Outcome {
    let h = find_conflicts(&inputs.db, &inputs.constraints);
    let consistent = h.is_empty();
    let stdout = match format {
        Format::Json => json(&CheckJson {
            consistent,
            violations: h.edges.len(),
            edges: &h.edges,
        }),
        Format::Text if consistent => "consistent\n".to_string(),
        Format::Text => {
            let mut s = format!("inconsistent: {} violation(s)\n", h.edges.len());
            for e in &h.edges {
                let tuples: Vec<String> = e
                    .tids
                    .iter()
                    .filter_map(|t| inputs.db.tuple(*t))
                    .map(|t| format!("{}:{}", t.tid, t))
                    .collect();
                let _ = writeln!(s, "  {}: {}", e.constraint, tuples.join(" "));
            }
            s
        }
    };
    Outcome {
        code: if consistent { EXIT_OK } else { EXIT_INCONSISTENT },
        stdout,
        stderr: if show { dump(&h) } else { String::new() },
    }
}

fn measure(inputs: &Inputs, semantics: Semantics, normalizer: NormalizerArg, witnesses: usize, format: Format) -> Outcome {
    let normalizer = match normalizer {
        NormalizerArg::Full => Normalizer::Full,
        NormalizerArg::Endo => Normalizer::Endogenous,
    };
    let req = match MeasureRequest::new(semantics, normalizer) {
        Ok(r) => r.with_witnesses(witnesses),
        Err(e) => return Outcome::fail(EXIT_INPUT, format!("error: {e}")),
    };
    let engine = RepairEngine::new(&inputs.db, &inputs.constraints);
    let report = inc_deg_g3_with(&engine, &req);
    let stdout = match format {
        Format::Json => serialize_report(&report) + "\n",
        Format::Text => {
            let mut s = format!(
                "inc-deg[{}, g3] = {}/{} = {}\n",
                report.semantics, report.numerator, report.denominator,
                report.decimal()
            );
            match report.min_deletions {
                None => s.push_str("irreparable: no repair under this semantics\n"),
                Some(k) => {
                    let _ = writeln!(s, "min deletions: {k} of {} ({})", report.normalizer_size, report.normalizer);
                    for w in &report.witnesses {
                        let _ = writeln!(s, "witness: delete {}", tid_list(&w.deleted));
                    }
                }
            }
            s
        }
    };
    Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    }
}

#[derive(Serialize)]
struct RepairJson {
    kept: Vec<Tid>,
    deleted: Vec<Tid>,
    kept_tuples: Vec<String>,
    deleted_tuples: Vec<String>,
}

#[derive(Serialize)]
struct RepairsJson {
    semantics: Semantics,
    irreparable: bool,
    truncated: bool,
    count: usize,
    repairs: Vec<RepairJson>,
}

fn repairs(inputs: &Inputs, semantics: Semantics, cap: usize, format: Format) -> Outcome {
    let engine = RepairEngine::new(&inputs.db, &inputs.constraints);
    let set = engine.repairs(semantics, cap);
    let render = |tids: &[Tid]| -> Vec<String> {
        tids.iter()
            .filter_map(|t| inputs.db.tuple(*t))
            .map(ToString::to_string)
            .collect()
    };
    let stdout = match format {
        Format::Json => json(&RepairsJson {
            semantics,
            irreparable: set.is_irreparable(),
            truncated: set.truncated,
            count: set.repairs.len(),
            repairs: set
                .repairs
                .iter()
                .map(|r| RepairJson {
                    kept: r.kept.clone(),
                    deleted: r.deleted.clone(),
                    kept_tuples: render(&r.kept),
                    deleted_tuples: render(&r.deleted),
                })
                .collect(),
        }),
        Format::Text => {
            let mut s = String::new();
            if set.is_irreparable() {
                s.push_str("irreparable: no repair under this semantics\n");
            }
            for (i, r) in set.repairs.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "repair {}: keep {{{}}} delete {{{}}}",
                    i + 1,
                    render(&r.kept).join(", "),
                    render(&r.deleted).join(", ")
                );
            }
            if set.truncated {
                let _ = writeln!(s, "(stopped after {cap} repairs)");
            }
            s
        }
    };
    Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    }
}

#[derive(Serialize)]
struct SolveJson {
    external_numdel: Option<usize>,
    internal_min_deletions: Option<usize>,
    agree: bool,
}

fn emit_asp(inputs: &Inputs, out: Option<&Path>, solve: bool, solver_cmd: Option<&str>) -> Outcome {
    let program = emit_repair_program(&inputs.db, &inputs.constraints);
    let text = program.render();
    let mut outcome = Outcome::default();
    match out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                return Outcome::fail(EXIT_INPUT, format!("error: cannot write {}: {e}", path.display()));
            }
        }
        None if !solve => outcome.stdout = text.clone(),
        None => {}
    }
    if !solve {
        return outcome;
    }
    let Some(template) = solver_cmd.filter(|t| !t.trim().is_empty()) else {
        return Outcome::fail(
            EXIT_SOLVER,
            format!("error: no solver configured; pass --solver-cmd or set {SOLVER_ENV}"),
        );
    };
    let answer = match out {
        Some(path) => run_solver_on_file(path, template),
        None => run_external_solver(&program, template),
    };
    let answer = match answer {
        Ok(a) => a,
        Err(e @ (SolverError::Unavailable { .. } | SolverError::EmptyCommand)) => {
            return Outcome::fail(EXIT_SOLVER, format!("error: solver unavailable: {e}"))
        }
        Err(e) => return Outcome::fail(EXIT_SOLVER, format!("error: {e}")),
    };
    let internal = RepairEngine::new(&inputs.db, &inputs.constraints).min_deletions(Semantics::EndogenousCardinality);
    outcome.stdout = json(&SolveJson {
        external_numdel: answer.numdel,
        internal_min_deletions: internal,
        agree: answer.numdel == internal,
    });
    outcome
}
