//! Evaluation of denial-constraint bodies over an instance.
//!
//! Each constraint is compiled into a join plan: atoms sorted by ascending
//! relation size, every atom probing a hash index keyed on the positions
//! already bound by earlier atoms, disequalities checked as soon as both of
//! their sides are bound. [`EvalStrategy::NestedLoop`] skips the reordering
//! and indexing and is kept for differential testing.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::ops::ControlFlow;

use crate::model::{
    Atom, ConflictHypergraph, ConstraintSet, DatabaseInstance, DenialConstraint, Disequality,
    FunctionalDependency, Term, Tid, Tuple, ViolationWitness,
};

/// Rewrites `R[lhs -> rhs]` as `<- R(.., z1, ..), R(.., z2, ..), z1 != z2`.
///
/// Determinant positions share `v` (or `v1, v2, ..`), the dependent position
/// gets `z1`/`z2`, and the remaining positions get fresh `y1`/`y2` variables
/// (`y1_k`/`y2_k` when there are several).
pub fn compile_fd_to_dc(fd: &FunctionalDependency) -> DenialConstraint {
    let lhs = fd.lhs();
    let others: Vec<usize> = (0..fd.arity())
        .filter(|p| *p != fd.rhs() && !lhs.contains(p))
        .collect();
    let atom = |side: usize| {
        let terms = (0..fd.arity())
            .map(|p| {
                if p == fd.rhs() {
                    Term::Var(format!("z{side}"))
                } else if let Some(i) = lhs.iter().position(|&q| q == p) {
                    if lhs.len() == 1 {
                        Term::var("v")
                    } else {
                        Term::Var(format!("v{}", i + 1))
                    }
                } else {
                    let i = others.iter().position(|&q| q == p).unwrap_or(0);
                    if others.len() == 1 {
                        Term::Var(format!("y{side}"))
                    } else {
                        Term::Var(format!("y{side}_{}", i + 1))
                    }
                }
            })
            .collect();
        Atom::new(fd.predicate(), terms)
    };
    DenialConstraint::new(
        fd.name(),
        vec![atom(1), atom(2)],
        vec![Disequality::new(Term::var("z1"), Term::var("z2"))],
    )
    .expect("compiled dependency is safe and nonempty")
}

/// How constraint bodies are joined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalStrategy {
    /// Size-ordered atoms, hash-indexed probes, early disequality checks.
    #[default]
    Indexed,
    /// Atoms in written order, full scans, disequalities checked last.
    NestedLoop,
}

/// Builds the conflict hypergraph: one edge per distinct tid set matched by
/// some constraint body, in constraint order then tid-set order.
pub fn find_conflicts(db: &DatabaseInstance, constraints: &ConstraintSet) -> ConflictHypergraph {
    find_conflicts_with(db, constraints, EvalStrategy::Indexed)
}

pub fn find_conflicts_with(
    db: &DatabaseInstance,
    constraints: &ConstraintSet,
    strategy: EvalStrategy,
) -> ConflictHypergraph {
    let relations = db.relations();
    let mut edges = Vec::new();
    for dc in constraints.dcs() {
        let plan = Plan::compile(dc, &relations, strategy);
        let mut found: BTreeMap<Vec<Tid>, BTreeMap<String, String>> = BTreeMap::new();
        plan.run(|tids, assignment| {
            let mut key = tids.to_vec();
            key.sort_unstable();
            key.dedup();
            found.entry(key).or_insert_with(|| plan.named(assignment));
            ControlFlow::Continue(())
        });
        edges.extend(found.into_iter().map(|(tids, assignment)| ViolationWitness {
            constraint: dc.name().to_string(),
            tids,
            assignment,
        }));
    }
    ConflictHypergraph {
        vertices: db.tids().collect(),
        edges,
    }
}

/// True iff no constraint body is satisfied in `db`. Stops at the first match.
pub fn is_consistent(db: &DatabaseInstance, constraints: &ConstraintSet) -> bool {
    let relations = db.relations();
    constraints.dcs().iter().all(|dc| {
        let plan = Plan::compile(dc, &relations, EvalStrategy::Indexed);
        let mut violated = false;
        plan.run(|_, _| {
            violated = true;
            ControlFlow::Break(())
        });
        !violated
    })
}

/// Re-checks a witness: its assignment must ground every atom to a tuple of
/// `db` whose tid is listed, and satisfy every disequality.
pub fn witness_holds(db: &DatabaseInstance, dc: &DenialConstraint, witness: &ViolationWitness) -> bool {
    let value = |t: &Term| -> Option<String> {
        match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(v) => witness.assignment.get(v).cloned(),
        }
    };
    let atoms_hold = dc.atoms().iter().all(|atom| {
        let Some(args) = atom.terms.iter().map(value).collect::<Option<Vec<_>>>() else {
            return false;
        };
        db.tuples().iter().any(|t| {
            t.predicate == atom.predicate && t.args == args && witness.tids.contains(&t.tid)
        })
    });
    atoms_hold
        && dc
            .disequalities()
            .iter()
            .all(|d| matches!((value(&d.left), value(&d.right)), (Some(l), Some(r)) if l != r))
}

/// One line per edge: `constraint: {tid,...}`.
pub fn dump(hypergraph: &ConflictHypergraph) -> String {
    let mut out = String::new();
    for e in &hypergraph.edges {
        let tids: Vec<String> = e.tids.iter().map(Tid::to_string).collect();
        let _ = writeln!(out, "{}: {{{}}}", e.constraint, tids.join(","));
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Operand<'a> {
    Const(&'a str),
    Var(usize),
}

#[derive(Debug, Clone, Copy)]
enum Slot<'a> {
    Const(&'a str),
    /// Bound by an earlier atom; part of the index key.
    Bound(usize),
    /// First occurrence; binds the variable.
    Bind(usize),
    /// Bound at an earlier position of the same atom.
    Repeat(usize),
}

struct Step<'a> {
    slots: Vec<Slot<'a>>,
    key_positions: Vec<usize>,
    index: HashMap<Vec<&'a str>, Vec<&'a Tuple>>,
    /// Disequalities whose sides are all bound once this step matched.
    checks: Vec<usize>,
}

struct Plan<'a> {
    var_names: Vec<&'a str>,
    steps: Vec<Step<'a>>,
    disequalities: Vec<(Operand<'a>, Operand<'a>)>,
    /// False when a constant-only disequality already fails.
    satisfiable: bool,
}

impl<'a> Plan<'a> {
    fn compile(
        dc: &'a DenialConstraint,
        relations: &BTreeMap<&'a str, Vec<&'a Tuple>>,
        strategy: EvalStrategy,
    ) -> Self {
        let var_names = dc.variables();
        let var_id = |v: &str| var_names.iter().position(|n| *n == v).expect("collected");
        let relation = |a: &Atom| relations.get(a.predicate.as_str()).map_or(&[][..], Vec::as_slice);

        let mut order: Vec<usize> = (0..dc.atoms().len()).collect();
        if strategy == EvalStrategy::Indexed {
            order.sort_by_key(|&i| relation(&dc.atoms()[i]).len());
        }

        let operand = |t: &'a Term| match t {
            Term::Const(c) => Operand::Const(c),
            Term::Var(v) => Operand::Var(var_id(v)),
        };
        let disequalities: Vec<(Operand, Operand)> = dc
            .disequalities()
            .iter()
            .map(|d| (operand(&d.left), operand(&d.right)))
            .collect();
        let satisfiable = disequalities.iter().all(|d| match d {
            (Operand::Const(l), Operand::Const(r)) => l != r,
            _ => true,
        });

        let mut bound = vec![false; var_names.len()];
        let mut checked = vec![false; disequalities.len()];
        let mut steps = Vec::with_capacity(order.len());
        for (n, &i) in order.iter().enumerate() {
            let atom = &dc.atoms()[i];
            let before = bound.clone();
            let slots: Vec<Slot> = atom
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Slot::Const(c),
                    Term::Var(v) => {
                        let id = var_id(v);
                        if before[id] {
                            Slot::Bound(id)
                        } else if bound[id] {
                            Slot::Repeat(id)
                        } else {
                            bound[id] = true;
                            Slot::Bind(id)
                        }
                    }
                })
                .collect();
            let key_positions: Vec<usize> = match strategy {
                EvalStrategy::Indexed => slots
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| matches!(s, Slot::Const(_) | Slot::Bound(_)))
                    .map(|(p, _)| p)
                    .collect(),
                EvalStrategy::NestedLoop => Vec::new(),
            };
            let mut index: HashMap<Vec<&str>, Vec<&Tuple>> = HashMap::new();
            for t in relation(atom).iter().filter(|t| t.args.len() == slots.len()) {
                let key = key_positions.iter().map(|&p| t.args[p].as_str()).collect();
                index.entry(key).or_default().push(t);
            }
            let last = n + 1 == order.len();
            let checks = (0..disequalities.len())
                .filter(|&d| {
                    let ready = |o: &Operand| match o {
                        Operand::Const(_) => true,
                        Operand::Var(v) => bound[*v],
                    };
                    let (l, r) = &disequalities[d];
                    let due = match strategy {
                        EvalStrategy::Indexed => ready(l) && ready(r),
                        EvalStrategy::NestedLoop => last,
                    };
                    if due && !checked[d] {
                        checked[d] = true;
                        true
                    } else {
                        false
                    }
                })
                .collect();
            steps.push(Step {
                slots,
                key_positions,
                index,
                checks,
            });
        }

        Plan {
            var_names,
            steps,
            disequalities,
            satisfiable,
        }
    }

    fn named(&self, assignment: &[Option<&str>]) -> BTreeMap<String, String> {
        self.var_names
            .iter()
            .zip(assignment)
            .filter_map(|(n, v)| v.map(|v| (n.to_string(), v.to_string())))
            .collect()
    }

    fn run(&self, mut emit: impl FnMut(&[Tid], &[Option<&'a str>]) -> ControlFlow<()>) {
        if !self.satisfiable {
            return;
        }
        let mut assignment = vec![None; self.var_names.len()];
        let mut chosen = Vec::with_capacity(self.steps.len());
        let _ = self.walk(0, &mut assignment, &mut chosen, &mut emit);
    }

    fn walk(
        &self,
        depth: usize,
        assignment: &mut Vec<Option<&'a str>>,
        chosen: &mut Vec<Tid>,
        emit: &mut impl FnMut(&[Tid], &[Option<&'a str>]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let Some(step) = self.steps.get(depth) else {
            return emit(chosen, assignment);
        };
        let key: Vec<&str> = step
            .key_positions
            .iter()
            .map(|&p| match step.slots[p] {
                Slot::Const(c) => c,
                Slot::Bound(v) => assignment[v].expect("bound by an earlier step"),
                Slot::Bind(_) | Slot::Repeat(_) => unreachable!("not a key position"),
            })
            .collect();
        let Some(candidates) = step.index.get(&key) else {
            return ControlFlow::Continue(());
        };
        for tuple in candidates {
            if !self.unify(step, tuple, assignment) {
                continue;
            }
            if !step.checks.iter().all(|&d| self.holds(d, assignment)) {
                continue;
            }
            chosen.push(tuple.tid);
            let flow = self.walk(depth + 1, assignment, chosen, emit);
            chosen.pop();
            if flow.is_break() {
                self.unbind(step, assignment);
                return flow;
            }
        }
        self.unbind(step, assignment);
        ControlFlow::Continue(())
    }

    fn unify(&self, step: &Step<'a>, tuple: &'a Tuple, assignment: &mut [Option<&'a str>]) -> bool {
        for (slot, arg) in step.slots.iter().zip(&tuple.args) {
            let arg = arg.as_str();
            let ok = match *slot {
                Slot::Const(c) => c == arg,
                Slot::Bound(v) | Slot::Repeat(v) => assignment[v] == Some(arg),
                Slot::Bind(v) => {
                    assignment[v] = Some(arg);
                    true
                }
            };
            if !ok {
                return false;
            }
        }
        true
    }

    fn unbind(&self, step: &Step<'a>, assignment: &mut [Option<&'a str>]) {
        for slot in &step.slots {
            if let Slot::Bind(v) = *slot {
                assignment[v] = None;
            }
        }
    }

    fn holds(&self, d: usize, assignment: &[Option<&'a str>]) -> bool {
        let value = |o: Operand<'a>| match o {
            Operand::Const(c) => Some(c),
            Operand::Var(v) => assignment[v],
        };
        let (l, r) = self.disequalities[d];
        value(l) != value(r)
    }
}
