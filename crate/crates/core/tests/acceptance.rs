//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed. The external-solver part of criterion 6
//! runs only when `INCDEG_SOLVER` holds a solver command template.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{corpus, Oracle};
use incdeg::asp::{emit_repair_program, run_external_solver, SOLVER_ENV};
use incdeg::measure::{inc_deg_g3, MeasureRequest, Normalizer};
use incdeg::model::{ConstraintSet, DatabaseInstance, Semantics, Tid};
use incdeg::repair::{is_repair, RepairEngine};
use incdeg::text::{parse_constraints_with_schema, parse_instance};
use incdeg::violations::find_conflicts;
use num_rational::Ratio;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect()
}

fn load(facts: &str, sigma: &str) -> (DatabaseInstance, ConstraintSet) {
    let facts = std::fs::read_to_string(fixture(facts)).unwrap();
    let sigma = std::fs::read_to_string(fixture(sigma)).unwrap();
    let db = parse_instance(&facts).unwrap();
    let cs = parse_constraints_with_schema(&sigma, db.schema()).unwrap();
    (db, cs)
}

fn tids(ids: &[u32]) -> Vec<Tid> {
    ids.iter().map(|&i| Tid(i)).collect()
}

fn running_example() -> Verdict {
    let start = Instant::now();
    let (db, cs) = load("example1.facts", "example1.dc");
    let h = find_conflicts(&db, &cs);
    let engine = RepairEngine::from_hypergraph(&db, h.clone());
    let s = engine.s_repairs(64);
    let c = engine.c_repairs(64);
    let elapsed = start.elapsed();

    let edges: Vec<Vec<Tid>> = h.edges.iter().map(|e| e.tids.clone()).collect();
    ensure!(edges == vec![tids(&[1, 3]), tids(&[1, 4])], "edges {edges:?}");
    // D1 = {P(e),Q(a,b),R(a,c)}, D2 = {P(a),P(e)}
    let s_kept: BTreeSet<Vec<Tid>> = s.repairs.iter().map(|r| r.kept.clone()).collect();
    ensure!(
        s_kept == BTreeSet::from([tids(&[2, 3, 4]), tids(&[1, 2])]) && !s.truncated,
        "S-repairs {s_kept:?}"
    );
    let c_kept: Vec<Vec<Tid>> = c.repairs.iter().map(|r| r.kept.clone()).collect();
    ensure!(c_kept == vec![tids(&[2, 3, 4])], "C-repairs {c_kept:?}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("2 edges, S-repairs {{D1, D2}}, C-repairs {{D1}} in {elapsed:?}"))
}

fn measure_values() -> Verdict {
    let (db, cs) = load("example1.facts", "example1.dc");
    let s = inc_deg_g3(&db, &cs, &MeasureRequest::new(Semantics::Subset, Normalizer::Full).unwrap());
    let c = inc_deg_g3(&db, &cs, &MeasureRequest::new(Semantics::Cardinality, Normalizer::Full).unwrap());
    ensure!(s.measure() == Ratio::new(1, 4), "S-measure {}", s.measure());
    ensure!(c.measure() == Ratio::new(1, 4), "C-measure {}", c.measure());
    Ok("S-measure = C-measure = 1/4".into())
}

fn endogenous() -> Verdict {
    let req = MeasureRequest::new(Semantics::EndogenousCardinality, Normalizer::Full).unwrap();
    let (db, cs) = load("example3.facts", "example1.dc");
    let r = inc_deg_g3(&db, &cs, &req);
    ensure!(r.measure() == Ratio::new(1, 2), "measure {}", r.measure());
    ensure!(!r.irreparable, "reported irreparable");
    let witness: Vec<Vec<Tid>> = r.witnesses.iter().map(|w| w.kept.clone()).collect();
    ensure!(witness == vec![tids(&[1, 2])], "witness {witness:?}, expected D2 = {{P(a),P(e)}}");

    let (db, cs) = load("example3_swapped.facts", "example1.dc");
    let r = inc_deg_g3(&db, &cs, &req);
    ensure!(r.irreparable, "protected conflict not reported irreparable");
    ensure!(r.measure() == Ratio::from_integer(1), "measure {}", r.measure());
    let oracle = Oracle::new(&db, &cs);
    ensure!(oracle.min_endo_deletions().is_none(), "oracle finds an endogenous repair");
    Ok("1/2 with witness D2; protected conflict gives 1 and irreparable".into())
}

const CORPUS_SEED: u64 = 0x1dc0_2017;
const CORPUS_SIZE: usize = 250;

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let cases = corpus(CORPUS_SEED, CORPUS_SIZE, 12);
    let mut inconsistent = 0;
    for (i, case) in cases.iter().enumerate() {
        let (db, cs) = case.load();
        ensure!(db.len() <= 12 && cs.len() <= 4, "case {i} out of bounds");
        let oracle = Oracle::new(&db, &cs);
        let engine = RepairEngine::new(&db, &cs);
        let consistent = engine.hypergraph().is_empty();
        ensure!(consistent == oracle.is_consistent(), "case {i}: consistency verdict\n{case:?}");
        inconsistent += usize::from(!consistent);

        let s = engine.s_repairs(1 << 16);
        let s_kept: BTreeSet<Vec<Tid>> = s.repairs.iter().map(|r| r.kept.clone()).collect();
        ensure!(!s.truncated && s_kept == oracle.s_repairs(), "case {i}: S-repairs\n{case:?}");

        let min = oracle.min_deletions();
        ensure!(engine.min_deletions(Semantics::Cardinality) == Some(min), "case {i}: min deletions\n{case:?}");
        ensure!(
            engine.min_deletions(Semantics::EndogenousCardinality) == oracle.min_endo_deletions(),
            "case {i}: endogenous min deletions\n{case:?}"
        );

        let expected = if db.is_empty() { Ratio::from_integer(0) } else { Ratio::new(min as u64, db.len() as u64) };
        for sem in [Semantics::Subset, Semantics::Cardinality] {
            let r = inc_deg_g3(&db, &cs, &MeasureRequest::new(sem, Normalizer::Full).unwrap());
            ensure!(r.measure() == expected, "case {i}: {sem} measure {} vs {expected}\n{case:?}", r.measure());
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "{} instances ({inconsistent} inconsistent), 100% agreement in {elapsed:?}",
        cases.len()
    ))
}

fn measure_laws() -> Verdict {
    let cases = corpus(CORPUS_SEED, CORPUS_SIZE, 12);
    let mut violations = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let (db, cs) = case.load();
        let engine = RepairEngine::new(&db, &cs);
        let s = inc_deg_g3(&db, &cs, &MeasureRequest::new(Semantics::Subset, Normalizer::Full).unwrap());
        let c = inc_deg_g3(&db, &cs, &MeasureRequest::default());
        for r in [&s, &c] {
            let m = r.measure();
            if m < Ratio::from_integer(0) || m > Ratio::from_integer(1) {
                violations.push(format!("case {i}: measure {m} out of range"));
            }
            if (*m.numer() == 0) != engine.hypergraph().is_empty() {
                violations.push(format!("case {i}: zero iff consistent fails"));
            }
        }
        if s.measure() != c.measure() {
            violations.push(format!("case {i}: S {} vs C {}", s.measure(), c.measure()));
        }
        for r in engine.c_repairs(1 << 16).repairs {
            if let Err(d) = is_repair(&db, &cs, &r.kept_set(), Semantics::Subset) {
                violations.push(format!("case {i}: C-repair {:?} is not an S-repair: {d}", r.kept));
            }
        }
    }
    ensure!(violations.is_empty(), "{} violations: {}", violations.len(), violations.join("; "));
    Ok(format!("{} instances, zero violations", cases.len()))
}

fn asp_emission() -> Verdict {
    let (db, cs) = load("example1_tids.facts", "example1.dc");
    let emitted = emit_repair_program(&db, &cs).render();
    let golden = std::fs::read_to_string(fixture("example1.lp")).unwrap();
    ensure!(emitted == golden, "program differs from golden file:\n{emitted}");

    let Ok(template) = std::env::var(SOLVER_ENV) else {
        return Ok(format!("golden file identical; external check skipped ({SOLVER_ENV} not set)"));
    };
    let cases = corpus(CORPUS_SEED ^ 0xa5, 20, 8);
    for (i, case) in cases.iter().enumerate() {
        let (db, cs) = case.load();
        let engine = RepairEngine::new(&db, &cs);
        let internal: BTreeSet<Vec<Tid>> = engine
            .endogenous_c_repairs(1 << 16)
            .repairs
            .into_iter()
            .map(|r| r.deleted)
            .collect();
        let answer = run_external_solver(&emit_repair_program(&db, &cs), &template)
            .map_err(|e| format!("case {i}: solver: {e}"))?;
        let external: BTreeSet<Vec<Tid>> = answer.optimal_deletions.into_iter().collect();
        ensure!(external == internal, "case {i}: optimal models {external:?} vs c-repairs {internal:?}\n{case:?}");
        ensure!(
            answer.numdel == engine.min_deletions(Semantics::EndogenousCardinality),
            "case {i}: numdel {:?}\n{case:?}",
            answer.numdel
        );
    }
    Ok(format!("golden file identical; {} solver runs match internal C-repairs", cases.len()))
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_incdeg"))
        .args(args)
        .env_remove(SOLVER_ENV)
        .output()
        .expect("binary runs");
    (out.status.code(), out.stdout)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut inputs: Vec<(PathBuf, PathBuf)> = [
        ("example1.facts", "example1.dc"),
        ("example3.facts", "example1.dc"),
        ("example3_swapped.facts", "example1.dc"),
        ("keys.facts", "keys.dc"),
    ]
    .iter()
    .map(|(f, d)| (fixture(f), fixture(d)))
    .collect();
    for (i, case) in corpus(CORPUS_SEED ^ 0x77, 5, 12).iter().enumerate() {
        let f = dir.path().join(format!("case{i}.facts"));
        let d = dir.path().join(format!("case{i}.dc"));
        std::fs::write(&f, &case.facts).unwrap();
        std::fs::write(&d, &case.sigma).unwrap();
        inputs.push((f, d));
    }
    let commands: &[&[&str]] = &[
        &["check"],
        &["measure", "--semantics", "s"],
        &["measure", "--semantics", "c", "--witnesses", "5"],
        &["measure", "--semantics", "c-endo", "--normalizer", "endo"],
        &["repairs", "--semantics", "s"],
        &["repairs", "--semantics", "c"],
        &["repairs", "--semantics", "c-endo"],
        &["emit-asp"],
    ];
    let mut runs = 0;
    for (facts, sigma) in &inputs {
        let (facts, sigma) = (path(facts), path(sigma));
        for cmd in commands {
            let mut args: Vec<&str> = cmd.to_vec();
            args.extend([facts, sigma]);
            let first = run_cli(&args);
            let second = run_cli(&args);
            ensure!(first == second, "`incdeg {}` differs between runs", args.join(" "));
            ensure!(!first.1.is_empty(), "`incdeg {}` printed nothing", args.join(" "));
            runs += 1;
        }
    }
    Ok(format!("{runs} command/input pairs byte-identical across runs"))
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("running example", running_example),
        ("measure values", measure_values),
        ("endogenous semantics", endogenous),
        ("oracle equivalence", oracle_equivalence),
        ("measure laws", measure_laws),
        ("ASP emission", asp_emission),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
