//! Concrete syntax for instance files (`*.facts`), constraint files (`*.dc`)
//! and the JSON report.
//!
//! Instance files hold one fact per statement:
//!
//! ```text
//! % comment
//! @schema P/1, Q/2
//! P(a).
//! *P(e).          % exogenous
//! Q(a,"b c").
//! ```
//!
//! Constraint files hold named denial constraints and functional
//! dependencies (1-based positions):
//!
//! ```text
//! dc k1: <- P(x), Q(x,y).
//! dc k3: <- R(v,y1,z1), R(v,y2,z2), z1 != z2.
//! fd f1: R[1 -> 3].
//! ```
//!
//! In constraint bodies a bare lowercase identifier is a variable; anything
//! else (quoted strings, numbers, capitalised words) is a constant.

use std::fmt;

use thiserror::Error;

use crate::model::{DenialConstraint, ModelError, Term};

mod constraints;
mod instance;
mod lexer;
mod report;

pub use constraints::{parse_constraints, parse_constraints_source, parse_constraints_with_schema, serialize_constraints};
pub use instance::{parse_instance, parse_instance_source, serialize_instance, ParsedInstance};
pub use report::{decimal_string, serialize_report};

/// Location of a token: 1-based line, 1-based columns `start_col..end_col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Option<String>,
    pub line: usize,
    pub start_col: usize,
    pub end_col: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{file}:{}:{}", self.line, self.start_col),
            None => write!(f, "line {}, column {}", self.line, self.start_col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn syntax(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            kind: ParseErrorKind::Syntax(message.into()),
        }
    }

    pub(crate) fn model(span: SourceSpan, err: ModelError) -> Self {
        ParseError {
            span,
            kind: ParseErrorKind::Model(err),
        }
    }
}

/// Non-fatal findings, e.g. duplicate facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: warning: {}", self.span, self.message)
    }
}

/// Input text plus the file name used in spans.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub name: Option<&'a str>,
    pub text: &'a str,
}

impl<'a> Source<'a> {
    pub fn new(name: &'a str, text: &'a str) -> Self {
        Source {
            name: Some(name),
            text,
        }
    }

    pub fn anonymous(text: &'a str) -> Self {
        Source { name: None, text }
    }
}

pub(crate) fn is_variable_name(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn lexes_as_word(value: &str) -> bool {
    let chars: Vec<char> = value.chars().collect();
    !chars.is_empty()
        && lexer::is_word_char(chars[0])
        && chars.iter().enumerate().all(|(i, &c)| match c {
            '.' => chars.get(i + 1).copied().is_some_and(lexer::is_word_char),
            '-' => chars.get(i + 1) != Some(&'>'),
            c => lexer::is_word_char(c),
        })
}

fn quote(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// A constant as written in an instance file: bare when it reads back as a
/// single word, quoted otherwise.
pub fn render_constant(value: &str) -> String {
    if lexes_as_word(value) {
        value.to_string()
    } else {
        quote(value)
    }
}

/// A term as written in a constraint body. Constants that look like
/// variables are quoted.
pub fn render_term(term: &Term) -> String {
    match term {
        Term::Var(v) => v.clone(),
        Term::Const(c) if is_variable_name(c) => quote(c),
        Term::Const(c) => render_constant(c),
    }
}

/// `<- P(x), Q(x,y), x != y` (no name, no final dot).
pub fn render_dc_body(dc: &DenialConstraint) -> String {
    let mut parts: Vec<String> = dc
        .atoms()
        .iter()
        .map(|a| {
            let terms: Vec<String> = a.terms.iter().map(render_term).collect();
            format!("{}({})", a.predicate, terms.join(","))
        })
        .collect();
    parts.extend(
        dc.disequalities()
            .iter()
            .map(|d| format!("{} != {}", render_term(&d.left), render_term(&d.right))),
    );
    format!("<- {}", parts.join(", "))
}
