//! The repair-based g3 inconsistency degree: the fewest deletions any repair
//! needs, divided by the size of the instance (or of its endogenous part).

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::model::{ConstraintSet, DatabaseInstance, Repair, Semantics};
use crate::repair::{RepairEngine, DEFAULT_REPAIR_CAP};
use crate::text::decimal_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normalizer {
    /// |D|
    Full,
    /// |D^n|
    Endogenous,
}

impl Normalizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalizer::Full => "full",
            Normalizer::Endogenous => "endo",
        }
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("the endogenous normalizer requires c-endo semantics, got `{0}`")]
    NormalizerMismatch(Semantics),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureRequest {
    semantics: Semantics,
    normalizer: Normalizer,
    witnesses: usize,
}

impl MeasureRequest {
    pub fn new(semantics: Semantics, normalizer: Normalizer) -> Result<Self, MeasureError> {
        if normalizer == Normalizer::Endogenous && semantics != Semantics::EndogenousCardinality {
            return Err(MeasureError::NormalizerMismatch(semantics));
        }
        Ok(MeasureRequest {
            semantics,
            normalizer,
            witnesses: 1,
        })
    }

    /// Number of witness repairs to include (default 1).
    pub fn with_witnesses(mut self, k: usize) -> Self {
        self.witnesses = k;
        self
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn normalizer(&self) -> Normalizer {
        self.normalizer
    }

    pub fn witnesses(&self) -> usize {
        self.witnesses
    }
}

impl Default for MeasureRequest {
    fn default() -> Self {
        MeasureRequest::new(Semantics::Cardinality, Normalizer::Full).expect("valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InconsistencyReport {
    pub semantics: Semantics,
    pub normalizer: Normalizer,
    pub normalizer_size: usize,
    /// `None` when irreparable.
    pub min_deletions: Option<usize>,
    pub irreparable: bool,
    /// Unreduced numerator and denominator as reported.
    pub numerator: u64,
    pub denominator: u64,
    /// Repairs attaining the minimum that were found, up to the enumeration cap.
    pub repair_count_found: usize,
    pub truncated: bool,
    /// Up to k repairs attaining the minimum, by deleted-tid list.
    pub witnesses: Vec<Repair>,
}

impl InconsistencyReport {
    /// The measure as a reduced fraction.
    pub fn measure(&self) -> Ratio<u64> {
        Ratio::new(self.numerator, self.denominator)
    }

    /// Ten significant digits.
    pub fn decimal(&self) -> String {
        decimal_string(self.numerator, self.denominator)
    }
}

/// Computes the g3 degree of `db` under the requested semantics.
pub fn inc_deg_g3(db: &DatabaseInstance, constraints: &ConstraintSet, req: &MeasureRequest) -> InconsistencyReport {
    inc_deg_g3_with(&RepairEngine::new(db, constraints), req)
}

/// As [`inc_deg_g3`], reusing an engine's hypergraph.
pub fn inc_deg_g3_with(engine: &RepairEngine<'_>, req: &MeasureRequest) -> InconsistencyReport {
    let db = engine.instance();
    let normalizer_size = match req.normalizer {
        Normalizer::Full => db.len(),
        Normalizer::Endogenous => db.len() - db.exogenous().len(),
    };
    let min_deletions = engine.min_deletions(req.semantics);
    let (numerator, denominator) = match min_deletions {
        None if normalizer_size == 0 => (1, 1),
        None => (normalizer_size as u64, normalizer_size as u64),
        Some(_) if normalizer_size == 0 => (0, 1),
        Some(k) => (k as u64, normalizer_size as u64),
    };

    let (witnesses, repair_count_found, truncated) = match min_deletions {
        None => (Vec::new(), 0, false),
        Some(k) => {
            let set = engine.minimum_repairs(req.semantics, DEFAULT_REPAIR_CAP);
            debug_assert!(set.repairs.iter().all(|r| r.deleted.len() == k));
            let count = set.repairs.len();
            let mut witnesses = set.repairs;
            witnesses.truncate(req.witnesses);
            (witnesses, count, set.truncated)
        }
    };

    InconsistencyReport {
        semantics: req.semantics,
        normalizer: req.normalizer,
        normalizer_size,
        min_deletions,
        irreparable: min_deletions.is_none(),
        numerator,
        denominator,
        repair_count_found,
        truncated,
        witnesses,
    }
}

/// Whether the S- and C-measures coincide, computed along independent routes
/// (S-repair enumeration versus the minimum hitting set solver).
pub fn measures_agree(db: &DatabaseInstance, constraints: &ConstraintSet) -> bool {
    let engine = RepairEngine::new(db, constraints);
    let s = inc_deg_g3_with(&engine, &MeasureRequest::new(Semantics::Subset, Normalizer::Full).expect("valid"));
    let c = inc_deg_g3_with(&engine, &MeasureRequest::default());
    s.measure() == c.measure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Tid;
    use crate::text::{parse_constraints_with_schema, parse_instance};

    const SIGMA: &str = "dc k1: <- P(x), Q(x,y).\ndc k2: <- P(x), R(x,y).";

    fn report(facts: &str, semantics: Semantics, normalizer: Normalizer) -> InconsistencyReport {
        let db = parse_instance(facts).unwrap();
        let cs = parse_constraints_with_schema(SIGMA, db.schema()).unwrap();
        inc_deg_g3(&db, &cs, &MeasureRequest::new(semantics, normalizer).unwrap())
    }

    #[test]
    fn running_example_is_a_quarter_either_way() {
        for sem in [Semantics::Subset, Semantics::Cardinality] {
            let r = report("P(a). P(e). Q(a,b). R(a,c).", sem, Normalizer::Full);
            assert_eq!(r.measure(), Ratio::new(1, 4));
            assert_eq!((r.numerator, r.denominator), (1, 4));
            assert_eq!(r.decimal(), "0.25");
            assert_eq!(r.witnesses[0].deleted, vec![Tid(1)]);
            assert!(!r.irreparable);
        }
    }

    #[test]
    fn endogenous_partition_gives_a_half() {
        let r = report("*P(a). *P(e). Q(a,b). R(a,c).", Semantics::EndogenousCardinality, Normalizer::Full);
        assert_eq!((r.numerator, r.denominator), (2, 4));
        assert_eq!(r.measure(), Ratio::new(1, 2));
        assert_eq!(r.witnesses[0].kept, vec![Tid(1), Tid(2)]);
        let r = report("*P(a). *P(e). Q(a,b). R(a,c).", Semantics::EndogenousCardinality, Normalizer::Endogenous);
        assert_eq!((r.numerator, r.denominator), (2, 2));
    }

    #[test]
    fn protected_conflict_is_irreparable() {
        let r = report("*P(a). P(e). *Q(a,b). R(a,c).", Semantics::EndogenousCardinality, Normalizer::Full);
        assert!(r.irreparable);
        assert_eq!(r.min_deletions, None);
        assert_eq!((r.numerator, r.denominator), (4, 4));
        assert!(r.witnesses.is_empty());
        let r = report("*P(a). *Q(a,b).", Semantics::EndogenousCardinality, Normalizer::Endogenous);
        assert_eq!((r.numerator, r.denominator), (1, 1));
    }

    #[test]
    fn consistent_and_empty_instances_measure_zero() {
        let r = report("P(e). Q(a,b).", Semantics::Cardinality, Normalizer::Full);
        assert_eq!((r.numerator, r.denominator), (0, 2));
        assert_eq!(r.repair_count_found, 1);
        let r = report("", Semantics::Subset, Normalizer::Full);
        assert_eq!((r.numerator, r.denominator), (0, 1));
        assert_eq!(r.decimal(), "0");
        let r = report("*P(e).", Semantics::EndogenousCardinality, Normalizer::Endogenous);
        assert_eq!((r.numerator, r.denominator), (0, 1));
    }

    #[test]
    fn endogenous_normalizer_needs_endogenous_semantics() {
        assert_eq!(
            MeasureRequest::new(Semantics::Cardinality, Normalizer::Endogenous),
            Err(MeasureError::NormalizerMismatch(Semantics::Cardinality))
        );
        assert!(MeasureRequest::new(Semantics::EndogenousCardinality, Normalizer::Full).is_ok());
    }

    #[test]
    fn witness_count_is_bounded() {
        let db = parse_instance("R(a,1). R(a,2). R(b,1). R(b,2).").unwrap();
        let cs = parse_constraints_with_schema("fd f: R[1 -> 2].", db.schema()).unwrap();
        let req = MeasureRequest::default().with_witnesses(3);
        let r = inc_deg_g3(&db, &cs, &req);
        assert_eq!(r.repair_count_found, 4);
        assert_eq!(r.witnesses.len(), 3);
        assert_eq!(r.measure(), Ratio::new(1, 2));
        assert!(measures_agree(&db, &cs));
    }
}
