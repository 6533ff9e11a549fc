use std::collections::BTreeSet;

use super::lexer::{Cursor, Tok};
use super::{is_variable_name, render_dc_body, ParseError, Source, SourceSpan};
use crate::model::{
    is_predicate_name, Atom, ConstraintSet, DenialConstraint, Disequality, FunctionalDependency,
    ModelError, Schema, Term,
};

struct SpannedAtom {
    atom: Atom,
    span: SourceSpan,
}

struct SpannedDiseq {
    diseq: Disequality,
    left: SourceSpan,
    right: SourceSpan,
}

enum Statement {
    Dc {
        name: String,
        name_span: SourceSpan,
        atoms: Vec<SpannedAtom>,
        disequalities: Vec<SpannedDiseq>,
    },
    Fd {
        name: String,
        name_span: SourceSpan,
        predicate: String,
        predicate_span: SourceSpan,
        lhs: Vec<(usize, SourceSpan)>,
        rhs: (usize, SourceSpan),
    },
}

pub fn parse_constraints(text: &str) -> Result<ConstraintSet, ParseError> {
    parse_constraints_source(Source::anonymous(text), &Schema::new())
}

/// Parses constraints, taking arities of predicates not otherwise declared
/// from `schema` (typically the instance's).
pub fn parse_constraints_with_schema(text: &str, schema: &Schema) -> Result<ConstraintSet, ParseError> {
    parse_constraints_source(Source::anonymous(text), schema)
}

/// Parses a constraint file. Arities come from `@schema` lines, from the
/// atoms of `dc` statements and from `schema`, and must agree; a functional
/// dependency over a predicate of unknown arity is an error. Dependencies
/// are compiled to denial constraints in place.
pub fn parse_constraints_source(source: Source<'_>, schema: &Schema) -> Result<ConstraintSet, ParseError> {
    let mut cur = Cursor::new(source.text, source.name)?;
    let mut arities = schema.clone();
    let mut statements = Vec::new();

    while let Some(tok) = cur.peek_tok() {
        match tok {
            Tok::At => {
                for (name, arity, span) in cur.schema_directive()? {
                    arities.declare(&name, arity).map_err(|e| ParseError::model(span, e))?;
                }
            }
            Tok::Word(w) if w == "dc" => statements.push(denial(&mut cur)?),
            Tok::Word(w) if w == "fd" => statements.push(dependency(&mut cur)?),
            _ => return Err(cur.unexpected("`dc`, `fd` or `@schema`")),
        }
    }

    for st in &statements {
        if let Statement::Dc { atoms, .. } = st {
            for a in atoms {
                arities
                    .declare(&a.atom.predicate, a.atom.terms.len())
                    .map_err(|e| ParseError::model(a.span.clone(), e))?;
            }
        }
    }

    let mut set = ConstraintSet::new();
    for st in statements {
        match st {
            Statement::Dc {
                name,
                name_span,
                atoms,
                disequalities,
            } => {
                let unsafe_span = first_unsafe(&atoms, &disequalities);
                let dc = DenialConstraint::new(
                    &name,
                    atoms.into_iter().map(|a| a.atom).collect(),
                    disequalities.into_iter().map(|d| d.diseq).collect(),
                );
                let dc = dc.map_err(|e| {
                    let span = match e {
                        ModelError::UnsafeVariables { .. } => unsafe_span.clone().unwrap_or(name_span.clone()),
                        _ => name_span.clone(),
                    };
                    ParseError::model(span, e)
                })?;
                set.push_dc(dc).map_err(|e| ParseError::model(name_span, e))?;
            }
            Statement::Fd {
                name,
                name_span,
                predicate,
                predicate_span,
                lhs,
                rhs,
            } => {
                let Some(arity) = arities.arity(&predicate) else {
                    return Err(ParseError::syntax(
                        predicate_span,
                        format!("arity of `{predicate}` is unknown; declare it with `@schema {predicate}/n`"),
                    ));
                };
                for (pos, span) in lhs.iter().chain(std::iter::once(&rhs)) {
                    if *pos == 0 || *pos > arity {
                        return Err(ParseError::model(
                            span.clone(),
                            ModelError::InvalidDependency {
                                name: name.clone(),
                                reason: format!("position {pos} is out of range for {predicate}/{arity}"),
                            },
                        ));
                    }
                }
                let fd = FunctionalDependency::new(
                    &name,
                    &predicate,
                    arity,
                    lhs.iter().map(|(p, _)| p - 1),
                    rhs.0 - 1,
                )
                .map_err(|e| ParseError::model(rhs.1.clone(), e))?;
                set.push_fd(fd).map_err(|e| ParseError::model(name_span, e))?;
            }
        }
    }
    Ok(set)
}

fn first_unsafe(atoms: &[SpannedAtom], diseqs: &[SpannedDiseq]) -> Option<SourceSpan> {
    let bound: BTreeSet<&str> = atoms
        .iter()
        .flat_map(|a| a.atom.terms.iter().filter_map(Term::as_var))
        .collect();
    diseqs.iter().find_map(|d| {
        [(&d.diseq.left, &d.left), (&d.diseq.right, &d.right)]
            .into_iter()
            .find(|(t, _)| t.as_var().is_some_and(|v| !bound.contains(v)))
            .map(|(_, s)| s.clone())
    })
}

fn header(cur: &mut Cursor<'_>) -> Result<(String, SourceSpan), ParseError> {
    cur.bump();
    let (name, tok) = cur.word("a constraint name")?;
    let span = cur.span_of(&tok);
    if !is_predicate_name(&name) && !is_variable_name(&name) {
        return Err(ParseError::syntax(span, format!("`{name}` is not a valid constraint name")));
    }
    cur.expect(Tok::Colon, "`:` after the constraint name")?;
    Ok((name, span))
}

fn term(cur: &mut Cursor<'_>) -> Result<(Term, SourceSpan), ParseError> {
    let span = cur.here();
    let t = match cur.peek_tok() {
        Some(Tok::Word(w)) if is_variable_name(w) => Term::Var(w.clone()),
        Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => Term::Const(w.clone()),
        _ => return Err(cur.unexpected("a variable or constant")),
    };
    cur.bump();
    Ok((t, span))
}

fn denial(cur: &mut Cursor<'_>) -> Result<Statement, ParseError> {
    let (name, name_span) = header(cur)?;
    cur.expect(Tok::Implies, "`<-`")?;
    let mut atoms = Vec::new();
    let mut disequalities = Vec::new();
    if cur.peek_tok() == Some(&Tok::Dot) {
        return Err(ParseError::model(name_span, ModelError::EmptyBody(name)));
    }
    loop {
        let start = cur.here();
        let is_atom = matches!(cur.peek_tok(), Some(Tok::Word(_)))
            && matches!(peek2(cur), Some(Tok::LParen));
        if is_atom {
            let (predicate, pred_tok) = cur.word("a predicate name")?;
            if !is_predicate_name(&predicate) {
                return Err(ParseError::model(
                    cur.span_of(&pred_tok),
                    ModelError::InvalidPredicateName(predicate),
                ));
            }
            cur.expect(Tok::LParen, "`(`")?;
            let mut terms = vec![term(cur)?.0];
            while cur.eat(Tok::Comma) {
                terms.push(term(cur)?.0);
            }
            let close = cur.expect(Tok::RParen, "`,` or `)`")?;
            let mut span = start;
            span.end_col = close.end_col;
            atoms.push(SpannedAtom {
                atom: Atom::new(&predicate, terms),
                span,
            });
        } else {
            let (left, left_span) = term(cur)?;
            cur.expect(Tok::Neq, "`!=` (the only built-in)")?;
            let (right, right_span) = term(cur)?;
            disequalities.push(SpannedDiseq {
                diseq: Disequality::new(left, right),
                left: left_span,
                right: right_span,
            });
        }
        if !cur.eat(Tok::Comma) {
            break;
        }
    }
    cur.expect(Tok::Dot, "`,` or `.`")?;
    Ok(Statement::Dc {
        name,
        name_span,
        atoms,
        disequalities,
    })
}

fn peek2<'t>(cur: &'t Cursor<'_>) -> Option<&'t Tok> {
    cur.peek_nth(1)
}

fn position(cur: &mut Cursor<'_>) -> Result<(usize, SourceSpan), ParseError> {
    let (word, tok) = cur.word("an attribute position")?;
    let span = cur.span_of(&tok);
    let pos = word
        .parse::<usize>()
        .map_err(|_| ParseError::syntax(span.clone(), format!("invalid attribute position `{word}`")))?;
    Ok((pos, span))
}

fn dependency(cur: &mut Cursor<'_>) -> Result<Statement, ParseError> {
    let (name, name_span) = header(cur)?;
    let (predicate, pred_tok) = cur.word("a predicate name")?;
    let predicate_span = cur.span_of(&pred_tok);
    if !is_predicate_name(&predicate) {
        return Err(ParseError::model(predicate_span, ModelError::InvalidPredicateName(predicate)));
    }
    cur.expect(Tok::LBracket, "`[`")?;
    let mut lhs = Vec::new();
    if cur.peek_tok() != Some(&Tok::Arrow) {
        lhs.push(position(cur)?);
        while cur.eat(Tok::Comma) {
            lhs.push(position(cur)?);
        }
    }
    cur.expect(Tok::Arrow, "`->`")?;
    let rhs = position(cur)?;
    cur.expect(Tok::RBracket, "`]`")?;
    cur.expect(Tok::Dot, "`.`")?;
    Ok(Statement::Fd {
        name,
        name_span,
        predicate,
        predicate_span,
        lhs,
        rhs,
    })
}

/// Writes `@schema` headers for every referenced predicate, then the
/// statements in order; compiled dependencies go back to `fd` shorthand.
pub fn serialize_constraints(set: &ConstraintSet) -> String {
    let mut out = String::new();
    if let Ok(schema) = set.schema() {
        for (name, arity) in schema.iter() {
            out.push_str(&format!("@schema {name}/{arity}\n"));
        }
    }
    for dc in set.dcs() {
        match set.source_fd(dc.name()) {
            Some(fd) => {
                let lhs: Vec<String> = fd.lhs().iter().map(|p| (p + 1).to_string()).collect();
                out.push_str(&format!(
                    "fd {}: {}[{} -> {}].\n",
                    fd.name(),
                    fd.predicate(),
                    lhs.join(","),
                    fd.rhs() + 1
                ));
            }
            None => out.push_str(&format!("dc {}: {}.\n", dc.name(), render_dc_body(dc))),
        }
    }
    out
}
