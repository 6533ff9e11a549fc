//! S-repairs, C-repairs and endogenous C-repairs.
//!
//! All three are read off the conflict hypergraph: a sub-instance is
//! consistent iff its deleted tuples hit every edge. C-repairs delete a
//! minimum hitting set, endogenous C-repairs a minimum hitting set made of
//! endogenous tuples only, and S-repairs an inclusion-minimal hitting set.

use std::collections::BTreeSet;
use std::fmt;

use crate::hitting::{HittingSets, Infeasible};
use crate::model::{ConflictHypergraph, ConstraintSet, DatabaseInstance, Repair, Semantics, Tid};
use crate::violations::find_conflicts;

/// Default bound on the number of repairs enumerated.
pub const DEFAULT_REPAIR_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HittingSetOutcome {
    /// Lexicographically smallest minimum-cardinality hitting set.
    Found(Vec<Tid>),
    /// Some edge has no deletable vertex.
    Infeasible,
}

/// Minimum hitting set of `hypergraph` using only `deletable` vertices.
pub fn min_hitting_set(hypergraph: &ConflictHypergraph, deletable: &BTreeSet<Tid>) -> HittingSetOutcome {
    match HittingSets::new(hypergraph.edges.iter().map(|e| e.tids.as_slice()), |t| deletable.contains(&t)) {
        Ok(h) => HittingSetOutcome::Found(h.minimum()),
        Err(Infeasible) => HittingSetOutcome::Infeasible,
    }
}

/// Repairs in canonical order; `truncated` when the cap cut enumeration short.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSet {
    pub semantics: Semantics,
    pub repairs: Vec<Repair>,
    pub truncated: bool,
}

impl RepairSet {
    /// No repair exists under the chosen semantics.
    pub fn is_irreparable(&self) -> bool {
        self.repairs.is_empty()
    }
}

/// Why a candidate sub-instance is not a repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairDefect {
    UnknownTid(Tid),
    Inconsistent { constraint: String, tids: Vec<Tid> },
    NotMaximal { addable: Tid },
    NotMaximum { kept: usize, maximum: usize },
    DeletesExogenous(Tid),
    Irreparable,
}

impl fmt::Display for RepairDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepairDefect::UnknownTid(t) => write!(f, "tid {t} is not in the instance"),
            RepairDefect::Inconsistent { constraint, tids } => {
                let tids: Vec<String> = tids.iter().map(Tid::to_string).collect();
                write!(f, "not consistent: `{constraint}` is violated by {{{}}}", tids.join(","))
            }
            RepairDefect::NotMaximal { addable } => {
                write!(f, "not maximal: tuple {addable} can be added back consistently")
            }
            RepairDefect::NotMaximum { kept, maximum } => {
                write!(f, "not maximum: keeps {kept} tuples, a repair can keep {maximum}")
            }
            RepairDefect::DeletesExogenous(t) => write!(f, "deletes exogenous tuple {t}"),
            RepairDefect::Irreparable => f.write_str("no repair exists under this semantics"),
        }
    }
}

impl std::error::Error for RepairDefect {}

/// An instance together with its conflict hypergraph.
#[derive(Debug, Clone)]
pub struct RepairEngine<'a> {
    db: &'a DatabaseInstance,
    hypergraph: ConflictHypergraph,
}

impl<'a> RepairEngine<'a> {
    pub fn new(db: &'a DatabaseInstance, constraints: &ConstraintSet) -> Self {
        RepairEngine {
            db,
            hypergraph: find_conflicts(db, constraints),
        }
    }

    pub fn from_hypergraph(db: &'a DatabaseInstance, hypergraph: ConflictHypergraph) -> Self {
        RepairEngine { db, hypergraph }
    }

    pub fn instance(&self) -> &'a DatabaseInstance {
        self.db
    }

    pub fn hypergraph(&self) -> &ConflictHypergraph {
        &self.hypergraph
    }

    /// Tuples a repair under `semantics` may delete.
    pub fn deletable(&self, semantics: Semantics) -> BTreeSet<Tid> {
        match semantics {
            Semantics::Subset | Semantics::Cardinality => self.db.tids().collect(),
            Semantics::EndogenousCardinality => self.db.endogenous(),
        }
    }

    fn problem(&self, semantics: Semantics) -> Result<HittingSets, Infeasible> {
        let deletable = self.deletable(semantics);
        HittingSets::new(self.hypergraph.edges.iter().map(|e| e.tids.as_slice()), |t| {
            deletable.contains(&t)
        })
    }

    /// Fewest deletions any repair under `semantics` makes; `None` when
    /// there is no repair. For S this is read off the first enumerated
    /// S-repair rather than the minimum solver.
    pub fn min_deletions(&self, semantics: Semantics) -> Option<usize> {
        match semantics {
            Semantics::Subset => self.s_repairs(1).repairs.first().map(|r| r.deleted.len()),
            _ => self.problem(semantics).ok().map(|h| h.minimum_size()),
        }
    }

    pub fn repairs(&self, semantics: Semantics, cap: usize) -> RepairSet {
        match semantics {
            Semantics::Subset => self.s_repairs(cap),
            _ => self.cardinality_repairs(semantics, cap),
        }
    }

    /// Every repair whose deletions form a minimum hitting set, in
    /// lexicographic order of the deleted tids, at most `cap`.
    pub fn c_repairs(&self, cap: usize) -> RepairSet {
        self.cardinality_repairs(Semantics::Cardinality, cap)
    }

    /// Like [`RepairEngine::c_repairs`] but only endogenous tuples may go.
    pub fn endogenous_c_repairs(&self, cap: usize) -> RepairSet {
        self.cardinality_repairs(Semantics::EndogenousCardinality, cap)
    }

    /// Repairs under `semantics` that delete as few tuples as possible, at most
    /// `cap`. Under S these are the S-repairs of minimum size.
    pub fn minimum_repairs(&self, semantics: Semantics, cap: usize) -> RepairSet {
        self.cardinality_repairs(semantics, cap)
    }

    fn cardinality_repairs(&self, semantics: Semantics, cap: usize) -> RepairSet {
        let cap = cap.max(1);
        let solve_as = match semantics {
            Semantics::Subset => Semantics::Cardinality,
            other => other,
        };
        let Ok(problem) = self.problem(solve_as) else {
            return RepairSet {
                semantics,
                repairs: Vec::new(),
                truncated: false,
            };
        };
        let mut sets = problem.all_minimum(cap + 1);
        let truncated = sets.len() > cap;
        sets.truncate(cap);
        RepairSet {
            semantics,
            repairs: sets
                .into_iter()
                .map(|d| Repair::from_deleted(self.db, d, semantics))
                .collect(),
            truncated,
        }
    }

    /// S-repairs by ascending deletion count, then lexicographically.
    pub fn s_repairs(&self, cap: usize) -> RepairSet {
        let problem = self
            .problem(Semantics::Subset)
            .expect("every edge is nonempty, so deleting everything works");
        let (sets, truncated) = problem.minimal(cap.max(1));
        RepairSet {
            semantics: Semantics::Subset,
            repairs: sets
                .into_iter()
                .map(|d| Repair::from_deleted(self.db, d, Semantics::Subset))
                .collect(),
            truncated,
        }
    }

    /// Checks `kept` against the repair definition of `semantics`.
    pub fn check(&self, kept: &BTreeSet<Tid>, semantics: Semantics) -> Result<(), RepairDefect> {
        if let Some(&bad) = kept.iter().find(|t| self.db.tuple(**t).is_none()) {
            return Err(RepairDefect::UnknownTid(bad));
        }
        if let Some(e) = self
            .hypergraph
            .edges
            .iter()
            .find(|e| e.tids.iter().all(|t| kept.contains(t)))
        {
            return Err(RepairDefect::Inconsistent {
                constraint: e.constraint.clone(),
                tids: e.tids.clone(),
            });
        }
        let deleted: Vec<Tid> = self.db.tids().filter(|t| !kept.contains(t)).collect();
        match semantics {
            Semantics::Subset => {
                for &t in &deleted {
                    let mut grown = kept.clone();
                    grown.insert(t);
                    if self.hypergraph.admits(&grown) {
                        return Err(RepairDefect::NotMaximal { addable: t });
                    }
                }
                Ok(())
            }
            Semantics::Cardinality | Semantics::EndogenousCardinality => {
                if semantics == Semantics::EndogenousCardinality {
                    if let Some(&t) = deleted.iter().find(|t| self.db.is_exogenous(**t)) {
                        return Err(RepairDefect::DeletesExogenous(t));
                    }
                }
                let Ok(problem) = self.problem(semantics) else {
                    return Err(RepairDefect::Irreparable);
                };
                let maximum = self.db.len() - problem.minimum_size();
                if kept.len() != maximum {
                    return Err(RepairDefect::NotMaximum {
                        kept: kept.len(),
                        maximum,
                    });
                }
                Ok(())
            }
        }
    }
}

/// C-repairs of `db`, at most `cap`.
pub fn c_repairs(db: &DatabaseInstance, constraints: &ConstraintSet, cap: usize) -> RepairSet {
    RepairEngine::new(db, constraints).c_repairs(cap)
}

/// Endogenous C-repairs of `db`, at most `cap`; empty when irreparable.
pub fn endogenous_c_repairs(db: &DatabaseInstance, constraints: &ConstraintSet, cap: usize) -> RepairSet {
    RepairEngine::new(db, constraints).endogenous_c_repairs(cap)
}

/// S-repairs of `db`, at most `cap`.
pub fn enumerate_s_repairs(db: &DatabaseInstance, constraints: &ConstraintSet, cap: usize) -> RepairSet {
    RepairEngine::new(db, constraints).s_repairs(cap)
}

/// Whether `kept` is a repair of `db` under `semantics`, with the failed
/// condition on error.
pub fn is_repair(
    db: &DatabaseInstance,
    constraints: &ConstraintSet,
    kept: &BTreeSet<Tid>,
    semantics: Semantics,
) -> Result<(), RepairDefect> {
    RepairEngine::new(db, constraints).check(kept, semantics)
}
