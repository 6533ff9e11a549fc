use super::lexer::{Cursor, Tok};
use super::{render_constant, ParseError, ParseWarning, Source, SourceSpan};
use crate::model::{assign_tids, is_predicate_name, DatabaseInstance, ModelError, RawTuple, Schema};

#[derive(Debug, Clone)]
pub struct ParsedInstance {
    pub instance: DatabaseInstance,
    pub warnings: Vec<ParseWarning>,
}

/// Parses an instance file, dropping warnings.
pub fn parse_instance(text: &str) -> Result<DatabaseInstance, ParseError> {
    parse_instance_source(Source::anonymous(text)).map(|p| p.instance)
}

/// Parses an instance file. Without `@schema` directives the schema is
/// inferred, each predicate's arity fixed by its first fact; with them the
/// schema is closed and undeclared predicates are errors.
pub fn parse_instance_source(source: Source<'_>) -> Result<ParsedInstance, ParseError> {
    let mut cur = Cursor::new(source.text, source.name)?;
    let mut declared = Schema::new();
    let mut facts: Vec<(RawTuple, SourceSpan)> = Vec::new();

    while let Some(tok) = cur.peek_tok() {
        match tok {
            Tok::At => {
                for (name, arity, span) in cur.schema_directive()? {
                    declared
                        .declare(&name, arity)
                        .map_err(|e| ParseError::model(span, e))?;
                }
            }
            Tok::Star | Tok::Word(_) => facts.push(fact(&mut cur)?),
            _ => return Err(cur.unexpected("a fact")),
        }
    }

    let closed = !declared.is_empty();
    let mut schema = declared;
    for (raw, span) in &facts {
        if closed && !schema.contains(&raw.predicate) {
            return Err(ParseError::model(
                span.clone(),
                ModelError::UndeclaredPredicate(raw.predicate.clone()),
            ));
        }
        schema
            .declare(&raw.predicate, raw.args.len())
            .map_err(|e| ParseError::model(span.clone(), e))?;
    }

    let spans: Vec<SourceSpan> = facts.iter().map(|(_, s)| s.clone()).collect();
    let assigned = assign_tids(schema, facts.into_iter().map(|(raw, _)| raw))
        .map_err(|e| ParseError::model(spans.first().cloned().unwrap_or_else(|| cur.here()), e))?;
    let warnings = assigned
        .duplicates
        .iter()
        .map(|d| ParseWarning {
            span: spans[d.position].clone(),
            message: format!("duplicate fact ignored; same as tid {}", d.kept),
        })
        .collect();
    Ok(ParsedInstance {
        instance: assigned.instance,
        warnings,
    })
}

fn fact(cur: &mut Cursor<'_>) -> Result<(RawTuple, SourceSpan), ParseError> {
    let start = cur.here();
    let exogenous = cur.eat(Tok::Star);
    let (predicate, pred_tok) = cur.word("a predicate name")?;
    if !is_predicate_name(&predicate) {
        return Err(ParseError::model(
            cur.span_of(&pred_tok),
            ModelError::InvalidPredicateName(predicate),
        ));
    }
    cur.expect(Tok::LParen, "`(`")?;
    let mut args = Vec::new();
    loop {
        match cur.peek_tok() {
            Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => {
                args.push(w.clone());
                cur.bump();
            }
            _ => return Err(cur.unexpected("a constant")),
        }
        if !cur.eat(Tok::Comma) {
            break;
        }
    }
    let close = cur.expect(Tok::RParen, "`,` or `)`")?;
    cur.expect(Tok::Dot, "`.` after the fact")?;
    let mut span = start;
    span.line = pred_tok.line;
    span.end_col = close.end_col;
    let raw = RawTuple {
        predicate,
        args,
        exogenous,
    };
    Ok((raw, span))
}

/// Writes `@schema` headers then one fact per line in tid order.
pub fn serialize_instance(db: &DatabaseInstance) -> String {
    let mut out = String::new();
    for (name, arity) in db.schema().iter() {
        out.push_str(&format!("@schema {name}/{arity}\n"));
    }
    for t in db.tuples() {
        if db.is_exogenous(t.tid) {
            out.push('*');
        }
        let args: Vec<String> = t.args.iter().map(|a| render_constant(a)).collect();
        out.push_str(&format!("{}({}).\n", t.predicate, args.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Tid;
    use crate::text::ParseErrorKind;

    #[test]
    fn running_example_instance() {
        let db = parse_instance("P(a). P(e). Q(a,b). R(a,c).").unwrap();
        assert_eq!(db.len(), 4);
        assert!(db.exogenous().is_empty());
        assert_eq!(db.tuple(Tid(3)).unwrap().to_string(), "Q(a,b)");
        assert_eq!(db.schema().arity("R"), Some(2));
    }

    #[test]
    fn exogenous_markers() {
        let db = parse_instance("*P(a). *P(e). Q(a,b). R(a,c).").unwrap();
        assert_eq!(db.exogenous().iter().copied().collect::<Vec<_>>(), vec![Tid(1), Tid(2)]);
        assert_eq!(db.endogenous().into_iter().collect::<Vec<_>>(), vec![Tid(3), Tid(4)]);
    }

    #[test]
    fn empty_and_comment_only_inputs() {
        assert!(parse_instance("").unwrap().is_empty());
        assert!(parse_instance("% nothing here\n\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_facts_warn() {
        let parsed = parse_instance_source(Source::new("d.facts", "P(a).\nP(a).")).unwrap();
        assert_eq!(parsed.instance.len(), 1);
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].span.line, 2);
        assert!(parsed.warnings[0].to_string().starts_with("d.facts:2:1: warning"));
    }

    #[test]
    fn arity_conflicts_point_at_the_fact() {
        let err = parse_instance("P(a).\n  P(a,b).").unwrap_err();
        assert_eq!((err.span.line, err.span.start_col), (2, 3));
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::ArityMismatch { .. })));
    }

    #[test]
    fn declared_schema_is_closed() {
        let db = parse_instance("@schema P/1, Q/2\nP(a).").unwrap();
        assert_eq!(db.schema().arity("Q"), Some(2));
        let err = parse_instance("@schema P/1\nR(a).").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::UndeclaredPredicate(_))));
        let err = parse_instance("@schema P/2\nP(a).").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Model(ModelError::ArityMismatch { .. })));
    }

    #[test]
    fn syntax_errors() {
        for bad in ["P(a)", "P().", "P(a,).", "p a.", "P(a) Q(b).", "(a).", "P(a)).", "@scheme P/1"] {
            let err = parse_instance(bad).unwrap_err();
            assert!(err.span.line >= 1 && err.span.start_col >= 1, "{bad}");
        }
    }

    #[test]
    fn serialization_round_trips() {
        let text = "@schema P/1, Q/2, Z/3\n*P(a). Q(a,\"b c\"). P(\"x.\"). Q(\"\",3.5).";
        let db = parse_instance(text).unwrap();
        let again = parse_instance(&serialize_instance(&db)).unwrap();
        assert_eq!(again, db);
    }
}
