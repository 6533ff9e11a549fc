//! Exhaustive reference implementation and random instance generator shared
//! by the integration tests. Nothing here calls the engines under test: the
//! oracle evaluates constraints by trying every variable assignment over the
//! active domain and decides repairs by looking at all 2^|D| sub-instances.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use incdeg::model::{ConstraintSet, DatabaseInstance, Term, Tid};
use incdeg::text::{parse_constraints_with_schema, parse_instance};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct Oracle {
    tids: Vec<Tid>,
    exogenous: u32,
    /// (constraint, sorted tids) of every ground violation.
    violations: BTreeSet<(String, Vec<Tid>)>,
    edge_masks: Vec<u32>,
    consistent: Vec<bool>,
}

fn domain(db: &DatabaseInstance, cs: &ConstraintSet) -> Vec<String> {
    let mut dom: BTreeSet<String> = db.tuples().iter().flat_map(|t| t.args.iter().cloned()).collect();
    for dc in cs.dcs() {
        for a in dc.atoms() {
            dom.extend(a.terms.iter().filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            }));
        }
        for d in dc.disequalities() {
            for t in [&d.left, &d.right] {
                if let Term::Const(c) = t {
                    dom.insert(c.clone());
                }
            }
        }
    }
    dom.into_iter().collect()
}

impl Oracle {
    pub fn new(db: &DatabaseInstance, cs: &ConstraintSet) -> Self {
        assert!(db.len() <= 16, "the oracle enumerates 2^|D| subsets");
        let tids: Vec<Tid> = db.tuples().iter().map(|t| t.tid).collect();
        let lookup: HashMap<(&str, &[String]), Tid> = db
            .tuples()
            .iter()
            .map(|t| ((t.predicate.as_str(), t.args.as_slice()), t.tid))
            .collect();
        let dom = domain(db, cs);

        let mut violations = BTreeSet::new();
        for dc in cs.dcs() {
            let mut vars: Vec<&str> = Vec::new();
            for a in dc.atoms() {
                for t in &a.terms {
                    if let Term::Var(v) = t {
                        if !vars.contains(&v.as_str()) {
                            vars.push(v);
                        }
                    }
                }
            }
            if dom.is_empty() && !vars.is_empty() {
                continue;
            }
            // odometer over dom^|vars|
            let mut digits = vec![0usize; vars.len()];
            loop {
                let value = |t: &Term| -> String {
                    match t {
                        Term::Const(c) => c.clone(),
                        Term::Var(v) => dom[digits[vars.iter().position(|x| x == v).unwrap()]].clone(),
                    }
                };
                let diseqs_hold = dc.disequalities().iter().all(|d| value(&d.left) != value(&d.right));
                if diseqs_hold {
                    let mut matched = Vec::new();
                    for a in dc.atoms() {
                        let args: Vec<String> = a.terms.iter().map(value).collect();
                        match lookup.get(&(a.predicate.as_str(), args.as_slice())) {
                            Some(&tid) => matched.push(tid),
                            None => {
                                matched.clear();
                                break;
                            }
                        }
                    }
                    if !matched.is_empty() {
                        matched.sort();
                        matched.dedup();
                        violations.insert((dc.name().to_string(), matched));
                    }
                }
                let mut i = 0;
                while i < digits.len() {
                    digits[i] += 1;
                    if digits[i] < dom.len() {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    break;
                }
            }
        }

        let bit = |t: &Tid| 1u32 << tids.iter().position(|x| x == t).unwrap();
        let edge_masks: Vec<u32> = violations.iter().map(|(_, ts)| ts.iter().map(bit).sum()).collect();
        let consistent = (0..1u32 << tids.len())
            .map(|m| edge_masks.iter().all(|&e| e & m != e))
            .collect();
        let exogenous = db.exogenous().iter().map(bit).sum();
        Oracle {
            tids,
            exogenous,
            violations,
            edge_masks,
            consistent,
        }
    }

    fn full(&self) -> u32 {
        ((1u64 << self.tids.len()) - 1) as u32
    }

    fn kept(&self, mask: u32) -> Vec<Tid> {
        (0..self.tids.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.tids[i]).collect()
    }

    pub fn violations(&self) -> &BTreeSet<(String, Vec<Tid>)> {
        &self.violations
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent[self.full() as usize]
    }

    /// Kept-tid lists of all ⊆-maximal consistent sub-instances.
    pub fn s_repairs(&self) -> BTreeSet<Vec<Tid>> {
        let full = self.full();
        let mut out = BTreeSet::new();
        for m in 0..=full {
            if !self.consistent[m as usize] {
                continue;
            }
            // walk every strict superset of m
            let mut maximal = true;
            let mut sup = (m + 1) | m;
            while sup <= full && sup != m {
                if self.consistent[sup as usize] {
                    maximal = false;
                    break;
                }
                sup = (sup + 1) | m;
            }
            if maximal {
                out.insert(self.kept(m));
            }
        }
        out
    }

    fn best(&self, required: u32) -> Option<u32> {
        (0..=self.full())
            .filter(|&m| m & required == required && self.consistent[m as usize])
            .map(u32::count_ones)
            .max()
    }

    fn repairs_of_size(&self, required: u32) -> BTreeSet<Vec<Tid>> {
        let Some(best) = self.best(required) else {
            return BTreeSet::new();
        };
        (0..=self.full())
            .filter(|&m| m & required == required && self.consistent[m as usize] && m.count_ones() == best)
            .map(|m| self.kept(m))
            .collect()
    }

    pub fn c_repairs(&self) -> BTreeSet<Vec<Tid>> {
        self.repairs_of_size(0)
    }

    pub fn c_endo_repairs(&self) -> BTreeSet<Vec<Tid>> {
        self.repairs_of_size(self.exogenous)
    }

    pub fn min_deletions(&self) -> usize {
        self.tids.len() - self.best(0).expect("the empty sub-instance is consistent") as usize
    }

    /// `None` when every consistent sub-instance drops an exogenous tuple.
    pub fn min_endo_deletions(&self) -> Option<usize> {
        self.best(self.exogenous).map(|b| self.tids.len() - b as usize)
    }

    pub fn len(&self) -> usize {
        self.tids.len()
    }
}

/// A generated instance and constraint file.
#[derive(Debug, Clone)]
pub struct Case {
    pub facts: String,
    pub sigma: String,
}

impl Case {
    pub fn load(&self) -> (DatabaseInstance, ConstraintSet) {
        let db = parse_instance(&self.facts).unwrap_or_else(|e| panic!("{e}\n{}", self.facts));
        let cs = parse_constraints_with_schema(&self.sigma, db.schema()).unwrap_or_else(|e| panic!("{e}\n{}", self.sigma));
        (db, cs)
    }
}

const PREDICATES: [(&str, usize); 4] = [("P", 1), ("Q", 2), ("R", 2), ("S", 3)];
const CONSTANTS: [&str; 3] = ["a", "b", "c"];
const VARIABLES: [&str; 4] = ["x", "y", "z", "w"];

/// Up to `max_tuples` facts over P/1, Q/2, R/2, S/3 and 1 to 4 constraints
/// mixing denial constraints of at most three atoms with dependencies.
pub fn random_case(rng: &mut StdRng, max_tuples: usize) -> Case {
    let mut facts = String::from("@schema P/1, Q/2, R/2, S/3\n");
    let n = rng.random_range(0..=max_tuples);
    for _ in 0..n {
        let (p, arity) = PREDICATES[rng.random_range(0..PREDICATES.len())];
        let args: Vec<&str> = (0..arity).map(|_| CONSTANTS[rng.random_range(0..CONSTANTS.len())]).collect();
        let star = if rng.random_bool(0.2) { "*" } else { "" };
        facts.push_str(&format!("{star}{p}({}).\n", args.join(",")));
    }

    let mut sigma = String::new();
    for k in 0..rng.random_range(1..=4) {
        if rng.random_bool(0.35) {
            let (p, arity) = PREDICATES[rng.random_range(1..PREDICATES.len())];
            let rhs = rng.random_range(1..=arity);
            let lhs: Vec<String> = (1..=arity)
                .filter(|&i| i != rhs && rng.random_bool(0.7))
                .map(|i| i.to_string())
                .collect();
            sigma.push_str(&format!("fd f{k}: {p}[{} -> {rhs}].\n", lhs.join(",")));
            continue;
        }
        let mut body = Vec::new();
        let mut used_vars = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let (p, arity) = PREDICATES[rng.random_range(0..PREDICATES.len())];
            let terms: Vec<String> = (0..arity)
                .map(|_| {
                    if rng.random_bool(0.85) {
                        let v = VARIABLES[rng.random_range(0..VARIABLES.len())];
                        used_vars.push(v);
                        v.to_string()
                    } else {
                        format!("\"{}\"", CONSTANTS[rng.random_range(0..CONSTANTS.len())])
                    }
                })
                .collect();
            body.push(format!("{p}({})", terms.join(",")));
        }
        if !used_vars.is_empty() && rng.random_bool(0.5) {
            let left = used_vars[rng.random_range(0..used_vars.len())];
            let right = if rng.random_bool(0.7) {
                used_vars[rng.random_range(0..used_vars.len())].to_string()
            } else {
                format!("\"{}\"", CONSTANTS[rng.random_range(0..CONSTANTS.len())])
            };
            body.push(format!("{left} != {right}"));
        }
        sigma.push_str(&format!("dc d{k}: <- {}.\n", body.join(", ")));
    }
    Case { facts, sigma }
}

/// The seeded corpus used by the acceptance suite.
pub fn corpus(seed: u64, count: usize, max_tuples: usize) -> Vec<Case> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_case(&mut rng, max_tuples)).collect()
}

/// Groups violation tid-sets by constraint, for readable failure output.
pub fn by_constraint(v: &BTreeSet<(String, Vec<Tid>)>) -> BTreeMap<String, Vec<Vec<Tid>>> {
    let mut out: BTreeMap<String, Vec<Vec<Tid>>> = BTreeMap::new();
    for (c, t) in v {
        out.entry(c.clone()).or_default().push(t.clone());
    }
    out
}
