//! Relational instances, denial constraints and the repair vocabulary shared
//! by the violation, repair, measure and ASP engines.
//!
//! Everything here is immutable once built. Instances own their tuples,
//! constraint sets own their denial constraints, and the engines only ever
//! borrow them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::text::render_constant;

/// Global tuple identifier. Assigned 1-based, densely, in input order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Tid(pub u32);

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("predicate `{0}` is not declared")]
    UndeclaredPredicate(String),
    #[error("predicate `{predicate}` has arity {expected}, found {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("predicate `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("`{0}` is not a valid predicate name")]
    InvalidPredicateName(String),
    #[error("denial constraint `{0}` has no relational atoms")]
    EmptyBody(String),
    #[error("denial constraint `{name}` has unsafe variables {}", .variables.join(", "))]
    UnsafeVariables { name: String, variables: Vec<String> },
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("functional dependency `{name}`: {reason}")]
    InvalidDependency { name: String, reason: String },
    #[error("tid {0} does not belong to the instance")]
    UnknownTid(Tid),
}

/// Predicate names are ASCII identifiers starting with a letter.
pub fn is_predicate_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Predicate names with their arities, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schema {
    order: Vec<String>,
    arities: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name/arity`. Re-declaring with the same arity is a no-op.
    pub fn declare(&mut self, name: &str, arity: usize) -> Result<(), ModelError> {
        if !is_predicate_name(name) {
            return Err(ModelError::InvalidPredicateName(name.to_string()));
        }
        if arity == 0 {
            return Err(ModelError::ZeroArity(name.to_string()));
        }
        match self.arities.get(name) {
            Some(&expected) if expected != arity => Err(ModelError::ArityMismatch {
                predicate: name.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.order.push(name.to_string());
                self.arities.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arities.contains_key(name)
    }

    /// Predicates in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.order.iter().map(|n| (n.as_str(), self.arities[n]))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Union of two schemas; `other`'s new predicates are appended in order.
    pub fn merge(&self, other: &Schema) -> Result<Schema, ModelError> {
        let mut merged = self.clone();
        for (name, arity) in other.iter() {
            merged.declare(name, arity)?;
        }
        Ok(merged)
    }
}

/// A ground atom `P(c1, ..., cn)` carrying its tuple id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tuple {
    pub tid: Tid,
    pub predicate: String,
    pub args: Vec<String>,
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&render_constant(arg))?;
        }
        f.write_str(")")
    }
}

/// A tuple as read from input, before tid assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTuple {
    pub predicate: String,
    pub args: Vec<String>,
    pub exogenous: bool,
}

impl RawTuple {
    pub fn new<S: Into<String>>(predicate: &str, args: impl IntoIterator<Item = S>) -> Self {
        RawTuple {
            predicate: predicate.to_string(),
            args: args.into_iter().map(Into::into).collect(),
            exogenous: false,
        }
    }

    pub fn exogenous(mut self) -> Self {
        self.exogenous = true;
        self
    }
}

/// A raw tuple that collapsed onto an earlier occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateTuple {
    /// 0-based position in the raw input.
    pub position: usize,
    /// Tid of the first occurrence, which is the one kept.
    pub kept: Tid,
}

/// Result of [`assign_tids`]: the instance plus the duplicates that were dropped.
#[derive(Debug, Clone)]
pub struct Assigned {
    pub instance: DatabaseInstance,
    pub duplicates: Vec<DuplicateTuple>,
}

/// Builds an instance from raw tuples, numbering them 1.. in input order.
///
/// Repeated `(predicate, args)` pairs collapse onto their first occurrence,
/// which also decides the exogenous flag.
pub fn assign_tids(
    schema: Schema,
    raw: impl IntoIterator<Item = RawTuple>,
) -> Result<Assigned, ModelError> {
    let mut tuples: Vec<Tuple> = Vec::new();
    let mut exogenous = BTreeSet::new();
    let mut seen: BTreeMap<(String, Vec<String>), Tid> = BTreeMap::new();
    let mut duplicates = Vec::new();

    for (position, raw) in raw.into_iter().enumerate() {
        let arity = schema
            .arity(&raw.predicate)
            .ok_or_else(|| ModelError::UndeclaredPredicate(raw.predicate.clone()))?;
        if arity != raw.args.len() {
            return Err(ModelError::ArityMismatch {
                predicate: raw.predicate,
                expected: arity,
                found: raw.args.len(),
            });
        }
        let key = (raw.predicate, raw.args);
        if let Some(&kept) = seen.get(&key) {
            duplicates.push(DuplicateTuple { position, kept });
            continue;
        }
        let tid = Tid(tuples.len() as u32 + 1);
        seen.insert(key.clone(), tid);
        if raw.exogenous {
            exogenous.insert(tid);
        }
        tuples.push(Tuple {
            tid,
            predicate: key.0,
            args: key.1,
        });
    }

    Ok(Assigned {
        instance: DatabaseInstance {
            schema,
            tuples,
            exogenous,
        },
        duplicates,
    })
}

/// A finite set of tuples split into endogenous and exogenous parts.
///
/// Tuples are stored in tid order. A full instance has dense tids `1..=n`;
/// a sub-instance produced by [`DatabaseInstance::restricted_to`] keeps the
/// tids of its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseInstance {
    schema: Schema,
    tuples: Vec<Tuple>,
    exogenous: BTreeSet<Tid>,
}

impl DatabaseInstance {
    pub fn empty(schema: Schema) -> Self {
        DatabaseInstance {
            schema,
            tuples: Vec::new(),
            exogenous: BTreeSet::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tids(&self) -> impl Iterator<Item = Tid> + '_ {
        self.tuples.iter().map(|t| t.tid)
    }

    pub fn tuple(&self, tid: Tid) -> Option<&Tuple> {
        self.tuples
            .binary_search_by_key(&tid, |t| t.tid)
            .ok()
            .map(|i| &self.tuples[i])
    }

    pub fn is_exogenous(&self, tid: Tid) -> bool {
        self.exogenous.contains(&tid)
    }

    /// D^x.
    pub fn exogenous(&self) -> &BTreeSet<Tid> {
        &self.exogenous
    }

    /// D^n, the complement of D^x.
    pub fn endogenous(&self) -> BTreeSet<Tid> {
        self.tids().filter(|t| !self.exogenous.contains(t)).collect()
    }

    /// Replaces the exogenous part. Every tid must belong to the instance.
    pub fn with_exogenous(
        mut self,
        exogenous: impl IntoIterator<Item = Tid>,
    ) -> Result<Self, ModelError> {
        let exogenous: BTreeSet<Tid> = exogenous.into_iter().collect();
        if let Some(&bad) = exogenous.iter().find(|t| self.tuple(**t).is_none()) {
            return Err(ModelError::UnknownTid(bad));
        }
        self.exogenous = exogenous;
        Ok(self)
    }

    /// Extends the schema, e.g. with predicates that only constraints mention.
    pub fn with_schema(mut self, schema: &Schema) -> Result<Self, ModelError> {
        self.schema = self.schema.merge(schema)?;
        Ok(self)
    }

    /// The sub-instance made of `kept`; tids and exogenous flags are preserved.
    pub fn restricted_to(&self, kept: &BTreeSet<Tid>) -> DatabaseInstance {
        DatabaseInstance {
            schema: self.schema.clone(),
            tuples: self
                .tuples
                .iter()
                .filter(|t| kept.contains(&t.tid))
                .cloned()
                .collect(),
            exogenous: self.exogenous.intersection(kept).copied().collect(),
        }
    }

    /// Tuples grouped by predicate, each group in tid order.
    pub fn relations(&self) -> BTreeMap<&str, Vec<&Tuple>> {
        let mut out: BTreeMap<&str, Vec<&Tuple>> = BTreeMap::new();
        for t in &self.tuples {
            out.entry(t.predicate.as_str()).or_default().push(t);
        }
        out
    }
}

/// Constraint terms. Variables are scoped to their constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(value: &str) -> Self {
        Term::Const(value.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, terms: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.to_string(),
            terms,
        }
    }
}

/// `left != right`, the only built-in allowed in constraint bodies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Disequality {
    pub left: Term,
    pub right: Term,
}

impl Disequality {
    pub fn new(left: Term, right: Term) -> Self {
        Disequality { left, right }
    }
}

/// `¬∃x̄ (P1(x̄1) ∧ … ∧ Pm(x̄m) ∧ disequalities)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenialConstraint {
    name: String,
    atoms: Vec<Atom>,
    disequalities: Vec<Disequality>,
}

impl DenialConstraint {
    /// Checks that the body has at least one atom and that every variable of
    /// a disequality is bound by some atom.
    pub fn new(
        name: &str,
        atoms: Vec<Atom>,
        disequalities: Vec<Disequality>,
    ) -> Result<Self, ModelError> {
        if atoms.is_empty() {
            return Err(ModelError::EmptyBody(name.to_string()));
        }
        let bound: BTreeSet<&str> = atoms
            .iter()
            .flat_map(|a| a.terms.iter().filter_map(Term::as_var))
            .collect();
        let mut unsafe_vars: Vec<String> = Vec::new();
        for d in &disequalities {
            for v in [&d.left, &d.right].into_iter().filter_map(|t| t.as_var()) {
                if !bound.contains(v) && !unsafe_vars.iter().any(|u| u == v) {
                    unsafe_vars.push(v.to_string());
                }
            }
        }
        if !unsafe_vars.is_empty() {
            return Err(ModelError::UnsafeVariables {
                name: name.to_string(),
                variables: unsafe_vars,
            });
        }
        Ok(DenialConstraint {
            name: name.to_string(),
            atoms,
            disequalities,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn disequalities(&self) -> &[Disequality] {
        &self.disequalities
    }

    /// Variables in order of first occurrence (atoms first, then disequalities).
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let terms = self
            .atoms
            .iter()
            .flat_map(|a| a.terms.iter())
            .chain(self.disequalities.iter().flat_map(|d| [&d.left, &d.right]));
        for v in terms.filter_map(Term::as_var) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// `predicate[lhs -> rhs]`. Positions are 0-based here; the text syntax is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalDependency {
    name: String,
    predicate: String,
    arity: usize,
    lhs: Vec<usize>,
    rhs: usize,
}

impl FunctionalDependency {
    pub fn new(
        name: &str,
        predicate: &str,
        arity: usize,
        lhs: impl IntoIterator<Item = usize>,
        rhs: usize,
    ) -> Result<Self, ModelError> {
        let invalid = |reason: String| ModelError::InvalidDependency {
            name: name.to_string(),
            reason,
        };
        let lhs: BTreeSet<usize> = lhs.into_iter().collect();
        if let Some(&p) = lhs.iter().find(|&&p| p >= arity) {
            return Err(invalid(format!(
                "position {} is out of range for {predicate}/{arity}",
                p + 1
            )));
        }
        if rhs >= arity {
            return Err(invalid(format!(
                "position {} is out of range for {predicate}/{arity}",
                rhs + 1
            )));
        }
        if lhs.contains(&rhs) {
            return Err(invalid(format!(
                "position {} appears on both sides",
                rhs + 1
            )));
        }
        Ok(FunctionalDependency {
            name: name.to_string(),
            predicate: predicate.to_string(),
            arity,
            lhs: lhs.into_iter().collect(),
            rhs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Determinant positions, ascending, 0-based.
    pub fn lhs(&self) -> &[usize] {
        &self.lhs
    }

    pub fn rhs(&self) -> usize {
        self.rhs
    }
}

/// Σ: denial constraints in declaration order. Functional dependencies are
/// compiled into denial constraints on insertion and kept for reporting.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    dcs: Vec<DenialConstraint>,
    fds: Vec<FunctionalDependency>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_name(&self, name: &str) -> Result<(), ModelError> {
        if self.dcs.iter().any(|dc| dc.name == name) {
            return Err(ModelError::DuplicateConstraint(name.to_string()));
        }
        Ok(())
    }

    pub fn push_dc(&mut self, dc: DenialConstraint) -> Result<(), ModelError> {
        self.check_name(&dc.name)?;
        self.dcs.push(dc);
        Ok(())
    }

    pub fn push_fd(&mut self, fd: FunctionalDependency) -> Result<(), ModelError> {
        self.check_name(&fd.name)?;
        self.dcs.push(crate::violations::compile_fd_to_dc(&fd));
        self.fds.push(fd);
        Ok(())
    }

    pub fn dcs(&self) -> &[DenialConstraint] {
        &self.dcs
    }

    pub fn original_fds(&self) -> &[FunctionalDependency] {
        &self.fds
    }

    /// The functional dependency a denial constraint was compiled from, if any.
    pub fn source_fd(&self, dc_name: &str) -> Option<&FunctionalDependency> {
        self.fds.iter().find(|fd| fd.name == dc_name)
    }

    pub fn len(&self) -> usize {
        self.dcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dcs.is_empty()
    }

    /// Predicates referenced by the constraints, in first-use order.
    pub fn schema(&self) -> Result<Schema, ModelError> {
        let mut schema = Schema::new();
        for dc in &self.dcs {
            for atom in &dc.atoms {
                schema.declare(&atom.predicate, atom.terms.len())?;
            }
        }
        Ok(schema)
    }
}

/// A ground violation of one denial constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationWitness {
    pub constraint: String,
    /// Tids of the matched tuples, ascending and duplicate-free.
    pub tids: Vec<Tid>,
    pub assignment: BTreeMap<String, String>,
}

/// Vertices are tids; each edge is the tid set of one ground violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictHypergraph {
    pub vertices: BTreeSet<Tid>,
    /// Ordered by constraint declaration order, then by tid set.
    pub edges: Vec<ViolationWitness>,
}

impl ConflictHypergraph {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Tids that occur in at least one edge.
    pub fn conflicting_tids(&self) -> BTreeSet<Tid> {
        self.edges.iter().flat_map(|e| e.tids.iter().copied()).collect()
    }

    /// True iff no edge lies entirely inside `kept`.
    pub fn admits(&self, kept: &BTreeSet<Tid>) -> bool {
        !self
            .edges
            .iter()
            .any(|e| e.tids.iter().all(|t| kept.contains(t)))
    }
}

/// Which class of repairs is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Semantics {
    /// ⊆-maximal consistent subsets.
    #[serde(rename = "s")]
    Subset,
    /// Maximum-cardinality consistent subsets.
    #[serde(rename = "c")]
    Cardinality,
    /// Minimum deletions restricted to endogenous tuples.
    #[serde(rename = "c-endo")]
    EndogenousCardinality,
}

impl Semantics {
    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Subset => "s",
            Semantics::Cardinality => "c",
            Semantics::EndogenousCardinality => "c-endo",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A consistent sub-instance `kept` and the tuples it drops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Repair {
    pub semantics: Semantics,
    pub kept: Vec<Tid>,
    pub deleted: Vec<Tid>,
}

impl Repair {
    pub(crate) fn from_deleted(db: &DatabaseInstance, deleted: Vec<Tid>, semantics: Semantics) -> Self {
        let gone: BTreeSet<Tid> = deleted.iter().copied().collect();
        Repair {
            semantics,
            kept: db.tids().filter(|t| !gone.contains(t)).collect(),
            deleted,
        }
    }

    pub fn kept_set(&self) -> BTreeSet<Tid> {
        self.kept.iter().copied().collect()
    }
}
