//! Repair programs in answer-set syntax, and a bridge to an external solver.
//!
//! Every tuple becomes a fact carrying its tid as first argument. Each
//! relation `P` gets a primed copy `p_x` whose last argument is `s` (stays)
//! or `d` (deleted); every denial constraint yields a disjunctive rule that
//! deletes at least one tuple of each violation. Weak constraints charge one
//! unit per deleted tid, so optimal models are C-repairs and their `numdel`
//! atom is the minimum number of deletions.
//!
//! ```text
//! p(4,a).
//! p_x(T1,X1,d) | q_x(T2,X1,X2,d) :- p(T1,X1), q(T2,X1,X2).
//! p_x(T,X1,s) :- p(T,X1), not p_x(T,X1,d).
//! del(T) :- p_x(T,X1,d).
//! numdel(N) :- N = #count{T : del(T)}.
//! :~ p(T,X1), p_x(T,X1,d). [1@1, T]
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::process::Command;

use thiserror::Error;

use crate::model::{ConstraintSet, DatabaseInstance, Term, Tid};

/// Environment variable holding the solver command template.
pub const SOLVER_ENV: &str = "INCDEG_SOLVER";

const RESERVED: [&str; 2] = ["del", "numdel"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspProgram {
    pub facts: Vec<String>,
    pub rules: Vec<String>,
    pub weak_constraints: Vec<String>,
    /// The brave query; written to the file as a comment since solvers
    /// differ in query syntax.
    pub query: String,
}

impl AspProgram {
    pub fn render(&self) -> String {
        let mut out = String::from("% facts\n");
        for line in &self.facts {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("% rules\n");
        for line in &self.rules {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("% weak constraints\n");
        for line in &self.weak_constraints {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&format!("% brave query: {}\n", self.query));
        out
    }
}

impl fmt::Display for AspProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Solver-safe names: lowercased, with a numeric suffix when lowercasing
/// collides with another relation, a primed `_x` name or a reserved name.
fn mangle<'a>(predicates: impl IntoIterator<Item = &'a str>) -> HashMap<String, String> {
    let mut used: BTreeSet<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    let mut names = HashMap::new();
    for p in predicates {
        let base = p.to_ascii_lowercase();
        let mut candidate = base.clone();
        let mut i = 1;
        while used.contains(&candidate) || used.contains(&format!("{candidate}_x")) {
            i += 1;
            candidate = format!("{base}_{i}");
        }
        used.insert(format!("{candidate}_x"));
        used.insert(candidate.clone());
        names.insert(p.to_string(), candidate);
    }
    names
}

/// Bare when it is a plain lowercase identifier, quoted otherwise. Numbers
/// are quoted too so that `03` and `3` stay distinct.
pub fn asp_constant(value: &str) -> String {
    let mut chars = value.chars();
    let bare = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && value != "not";
    if bare {
        return value.to_string();
    }
    let mut out = String::from("\"");
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn vars(arity: usize) -> String {
    (1..=arity).map(|i| format!("X{i}")).collect::<Vec<_>>().join(",")
}

/// The repair program for `db` and `constraints`. Output depends only on the
/// inputs: facts in tid order, one repair rule per constraint in order.
pub fn emit_repair_program(db: &DatabaseInstance, constraints: &ConstraintSet) -> AspProgram {
    let mut schema: Vec<(String, usize)> = db.schema().iter().map(|(p, a)| (p.to_string(), a)).collect();
    if let Ok(extra) = constraints.schema() {
        for (p, a) in extra.iter() {
            if !db.schema().contains(p) {
                schema.push((p.to_string(), a));
            }
        }
    }
    let names = mangle(schema.iter().map(|(p, _)| p.as_str()));
    let name = |p: &str| names[p].as_str();

    let mut facts = Vec::new();
    for t in db.tuples() {
        let mut args = vec![t.tid.to_string()];
        args.extend(t.args.iter().map(|a| asp_constant(a)));
        facts.push(format!("{}({}).", name(&t.predicate), args.join(",")));
    }

    let mut rules = Vec::new();
    for dc in constraints.dcs() {
        let var_names: BTreeMap<&str, String> = dc
            .variables()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, format!("X{}", i + 1)))
            .collect();
        let term = |t: &Term| match t {
            Term::Var(v) => var_names[v.as_str()].clone(),
            Term::Const(c) => asp_constant(c),
        };
        let mut head = Vec::new();
        let mut body = Vec::new();
        for (i, atom) in dc.atoms().iter().enumerate() {
            let mut args = vec![format!("T{}", i + 1)];
            args.extend(atom.terms.iter().map(term));
            let args = args.join(",");
            head.push(format!("{}_x({args},d)", name(&atom.predicate)));
            body.push(format!("{}({args})", name(&atom.predicate)));
        }
        body.extend(
            dc.disequalities()
                .iter()
                .map(|d| format!("{} != {}", term(&d.left), term(&d.right))),
        );
        rules.push(format!("{} :- {}.", head.join(" | "), body.join(", ")));
    }
    for (p, arity) in &schema {
        let (n, xs) = (name(p), vars(*arity));
        rules.push(format!("{n}_x(T,{xs},s) :- {n}(T,{xs}), not {n}_x(T,{xs},d)."));
    }
    for t in db.tuples().iter().filter(|t| db.is_exogenous(t.tid)) {
        let mut args = vec![t.tid.to_string()];
        args.extend(t.args.iter().map(|a| asp_constant(a)));
        rules.push(format!(":- {}_x({},d).", name(&t.predicate), args.join(",")));
    }
    for (p, arity) in &schema {
        rules.push(format!("del(T) :- {}_x(T,{},d).", name(p), vars(*arity)));
    }
    rules.push("numdel(N) :- N = #count{T : del(T)}.".to_string());

    let weak_constraints = schema
        .iter()
        .map(|(p, arity)| {
            let (n, xs) = (name(p), vars(*arity));
            format!(":~ {n}(T,{xs}), {n}_x(T,{xs},d). [1@1, T]")
        })
        .collect();

    AspProgram {
        facts,
        rules,
        weak_constraints,
        query: "numdel(X)?".to_string(),
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("the solver command is empty")]
    EmptyCommand,
    #[error("solver `{command}` could not be started: {source}")]
    Unavailable {
        command: String,
        #[source]
        source: io::Error,
    },
    #[error("solver exited with {status}\n{output}")]
    Failed { status: String, output: String },
    #[error("could not read the solver output: {reason}\n{output}")]
    Unparseable { reason: String, output: String },
    #[error("i/o error around the solver run: {0}")]
    Io(#[from] io::Error),
}

/// What the solver reported about the optimal models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverAnswer {
    /// `numdel` of an optimal model; `None` when there is no model.
    pub numdel: Option<usize>,
    /// Deleted tids of every distinct optimal model, sorted.
    pub optimal_deletions: Vec<Vec<Tid>>,
}

/// Writes `program` to a temporary `.lp` file and runs `template` on it.
pub fn run_external_solver(program: &AspProgram, template: &str) -> Result<SolverAnswer, SolverError> {
    let mut file = tempfile::Builder::new().prefix("incdeg-").suffix(".lp").tempfile()?;
    file.write_all(program.render().as_bytes())?;
    file.flush()?;
    run_solver_on_file(file.path(), template)
}

/// Runs `template` with `{file}` replaced by `path`; the path is appended
/// when the template has no placeholder. Exit codes 0, 10, 20 and 30 count
/// as success (the last three are the usual satisfiable/unsatisfiable/optimum
/// codes).
pub fn run_solver_on_file(path: &Path, template: &str) -> Result<SolverAnswer, SolverError> {
    let path = path.to_string_lossy();
    let mut words: Vec<String> = template.split_whitespace().map(str::to_string).collect();
    if words.is_empty() {
        return Err(SolverError::EmptyCommand);
    }
    if words.iter().any(|w| w.contains("{file}")) {
        for w in &mut words {
            *w = w.replace("{file}", &path);
        }
    } else {
        words.push(path.to_string());
    }
    let output = Command::new(&words[0])
        .args(&words[1..])
        .output()
        .map_err(|source| SolverError::Unavailable {
            command: words[0].clone(),
            source,
        })?;
    let mut text = String::from_utf8_lossy(&output.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&output.stderr);
    match output.status.code() {
        Some(0 | 10 | 20 | 30) => parse_solver_output(&text),
        _ => {
            text.push_str(&stderr);
            Err(SolverError::Failed {
                status: output.status.to_string(),
                output: text,
            })
        }
    }
}

/// Splits a model line into atoms, keeping quoted strings intact.
fn atoms(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let (mut depth, mut quoted, mut escaped) = (0i32, false, false);
    for c in line.chars() {
        if quoted {
            current.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                quoted = false;
            }
            continue;
        }
        match c {
            '"' => {
                quoted = true;
                current.push(c);
            }
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth -= 1;
                current.push(c);
            }
            c if depth == 0 && (c.is_whitespace() || c == ',' || c == '{' || c == '}') => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn unary_number(atom: &str, predicate: &str) -> Option<usize> {
    atom.strip_prefix(predicate)?
        .strip_prefix('(')?
        .strip_suffix(')')?
        .trim()
        .parse()
        .ok()
}

struct Model {
    atoms: Vec<String>,
    cost: Vec<i64>,
}

fn numbers(s: &str) -> Vec<i64> {
    s.split(|c: char| !(c.is_ascii_digit() || c == '-'))
        .filter_map(|w| w.parse().ok())
        .collect()
}

/// Reads models from clingo-style output (`Answer:` lines followed by the
/// atoms and an `Optimization:` line) or DLV-style output (`{...}` models,
/// optionally followed by a `COST` line). The optimal models are those of
/// least cost.
pub fn parse_solver_output(output: &str) -> Result<SolverAnswer, SolverError> {
    let unparseable = |reason: &str| SolverError::Unparseable {
        reason: reason.to_string(),
        output: output.to_string(),
    };
    let mut models: Vec<Model> = Vec::new();
    let mut unsat = false;
    let mut lines = output.lines().peekable();
    while let Some(line) = lines.next() {
        let trimmed = line.trim();
        if trimmed.starts_with("Answer:") {
            let atom_line = lines.next().unwrap_or("");
            models.push(Model {
                atoms: atoms(atom_line),
                cost: Vec::new(),
            });
        } else if let Some(rest) = trimmed.strip_prefix("Optimization:") {
            if let Some(m) = models.last_mut() {
                m.cost = numbers(rest);
            }
        } else if trimmed.starts_with('{') && trimmed.ends_with('}') {
            models.push(Model {
                atoms: atoms(trimmed),
                cost: Vec::new(),
            });
        } else if trimmed.starts_with("COST") || trimmed.starts_with("Cost") {
            if let Some(m) = models.last_mut() {
                m.cost = numbers(trimmed.split_once(':').map_or(trimmed, |(_, r)| r));
            }
        } else if trimmed == "UNSATISFIABLE" || trimmed == "INCOHERENT" {
            unsat = true;
        }
    }

    if models.is_empty() {
        return if unsat {
            Ok(SolverAnswer {
                numdel: None,
                optimal_deletions: Vec::new(),
            })
        } else {
            Err(unparseable("no models and no unsatisfiability verdict"))
        };
    }

    let best = models.iter().map(|m| m.cost.clone()).min().expect("nonempty");
    let mut numdel = None;
    let mut optimal = BTreeSet::new();
    for m in models.iter().filter(|m| m.cost == best) {
        let n = m
            .atoms
            .iter()
            .find_map(|a| unary_number(a, "numdel"))
            .ok_or_else(|| unparseable("optimal model without a numdel atom"))?;
        if numdel.is_some_and(|k| k != n) {
            return Err(unparseable("optimal models disagree on numdel"));
        }
        numdel = Some(n);
        let mut deleted: Vec<Tid> = m
            .atoms
            .iter()
            .filter_map(|a| unary_number(a, "del"))
            .map(|t| Tid(t as u32))
            .collect();
        deleted.sort();
        optimal.insert(deleted);
    }
    Ok(SolverAnswer {
        numdel,
        optimal_deletions: optimal.into_iter().collect(),
    })
}
