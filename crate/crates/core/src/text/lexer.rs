use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Word(String),
    Quoted(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Star,
    Slash,
    At,
    /// `->`
    Arrow,
    /// `<-`
    Implies,
    /// `!=`
    Neq,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Quoted(q) => format!("string {q:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::At => "`@`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Implies => "`<-`".into(),
            Tok::Neq => "`!=`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub start_col: usize,
    pub end_col: usize,
}

/// Characters allowed in an unquoted constant or identifier. A `.` is also
/// allowed inside a word when another word character follows it.
pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '+' | '\'' | '#' | '$' | '&' | '~' | '?')
}

pub(crate) fn tokenize(text: &str, file: Option<&str>) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let span = |line, start_col, end_col| SourceSpan {
        file: file.map(str::to_string),
        line,
        start_col,
        end_col,
    };

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        let punct = match (c, next) {
            ('-', Some('>')) => Some((Tok::Arrow, 2)),
            ('<', Some('-')) => Some((Tok::Implies, 2)),
            ('!', Some('=')) => Some((Tok::Neq, 2)),
            ('(', _) => Some((Tok::LParen, 1)),
            (')', _) => Some((Tok::RParen, 1)),
            ('[', _) => Some((Tok::LBracket, 1)),
            (']', _) => Some((Tok::RBracket, 1)),
            (',', _) => Some((Tok::Comma, 1)),
            ('.', _) => Some((Tok::Dot, 1)),
            (':', _) => Some((Tok::Colon, 1)),
            ('*', _) => Some((Tok::Star, 1)),
            ('/', _) => Some((Tok::Slash, 1)),
            ('@', _) => Some((Tok::At, 1)),
            _ => None,
        };
        if let Some((tok, width)) = punct {
            i += width;
            col += width;
            tokens.push(Token {
                tok,
                line,
                start_col,
                end_col: col,
            });
            continue;
        }
        if c == '"' {
            let mut value = String::new();
            i += 1;
            col += 1;
            loop {
                let Some(&c) = chars.get(i) else {
                    return Err(ParseError::syntax(
                        span(line, start_col, col),
                        "unterminated string",
                    ));
                };
                match c {
                    '"' => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    '\n' => {
                        return Err(ParseError::syntax(
                            span(line, start_col, col),
                            "unterminated string",
                        ))
                    }
                    '\\' => {
                        let escaped = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            _ => {
                                return Err(ParseError::syntax(
                                    span(line, col, col + 1),
                                    "invalid escape sequence",
                                ))
                            }
                        };
                        value.push(escaped);
                        i += 2;
                        col += 2;
                    }
                    c => {
                        value.push(c);
                        i += 1;
                        col += 1;
                    }
                }
            }
            tokens.push(Token {
                tok: Tok::Quoted(value),
                line,
                start_col,
                end_col: col,
            });
            continue;
        }
        if is_word_char(c) {
            let mut word = String::new();
            while let Some(&c) = chars.get(i) {
                let after = chars.get(i + 1).copied();
                let take = match c {
                    '-' if after == Some('>') => false,
                    '.' => after.is_some_and(is_word_char),
                    c => is_word_char(c),
                };
                if !take {
                    break;
                }
                word.push(c);
                i += 1;
                col += 1;
            }
            tokens.push(Token {
                tok: Tok::Word(word),
                line,
                start_col,
                end_col: col,
            });
            continue;
        }
        return Err(ParseError::syntax(
            span(line, start_col, start_col + 1),
            format!("unexpected character `{c}`"),
        ));
    }
    Ok(tokens)
}

/// Token stream with one-token lookahead.
pub(crate) struct Cursor<'a> {
    tokens: Vec<Token>,
    pos: usize,
    file: Option<&'a str>,
    end: (usize, usize),
}

impl<'a> Cursor<'a> {
    pub fn new(text: &str, file: Option<&'a str>) -> Result<Self, ParseError> {
        let tokens = tokenize(text, file)?;
        let last_line = text.split('\n').count().max(1);
        let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Cursor {
            tokens,
            pos: 0,
            file,
            end: (last_line, last_col),
        })
    }

    pub fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    pub fn peek_tok(&self) -> Option<&Tok> {
        self.peek().map(|t| &t.tok)
    }

    pub fn peek_nth(&self, n: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + n).map(|t| &t.tok)
    }

    pub fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan {
            file: self.file.map(str::to_string),
            line: t.line,
            start_col: t.start_col,
            end_col: t.end_col,
        }
    }

    /// Span of the next token, or of the end of input.
    pub fn here(&self) -> SourceSpan {
        match self.peek() {
            Some(t) => self.span_of(t),
            None => SourceSpan {
                file: self.file.map(str::to_string),
                line: self.end.0,
                start_col: self.end.1,
                end_col: self.end.1 + 1,
            },
        }
    }

    pub fn unexpected(&self, expected: &str) -> ParseError {
        let found = self
            .peek_tok()
            .map_or_else(|| "end of input".to_string(), Tok::describe);
        ParseError::syntax(self.here(), format!("expected {expected}, found {found}"))
    }

    pub fn expect(&mut self, tok: Tok, expected: &str) -> Result<Token, ParseError> {
        if self.peek_tok() == Some(&tok) {
            Ok(self.bump().expect("peeked"))
        } else {
            Err(self.unexpected(expected))
        }
    }

    pub fn eat(&mut self, tok: Tok) -> bool {
        if self.peek_tok() == Some(&tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn word(&mut self, expected: &str) -> Result<(String, Token), ParseError> {
        match self.peek_tok() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                Ok((w, self.bump().expect("peeked")))
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    /// Parses `@schema P/2, Q/3` up to the end of the directive's line.
    /// The leading `@` must be the next token.
    pub fn schema_directive(&mut self) -> Result<Vec<(String, usize, SourceSpan)>, ParseError> {
        let at = self.expect(Tok::At, "`@`")?;
        let (kw, kw_tok) = self.word("`schema`")?;
        if kw != "schema" {
            return Err(ParseError::syntax(
                self.span_of(&kw_tok),
                format!("unknown directive `@{kw}`"),
            ));
        }
        let line = at.line;
        let mut decls = Vec::new();
        while self.peek().is_some_and(|t| t.line == line) {
            if self.eat(Tok::Comma) {
                continue;
            }
            if self.eat(Tok::Dot) {
                break;
            }
            let (name, name_tok) = self.word("a predicate name")?;
            self.expect(Tok::Slash, "`/`")?;
            let (arity, arity_tok) = self.word("an arity")?;
            let arity: usize = arity.parse().map_err(|_| {
                ParseError::syntax(self.span_of(&arity_tok), format!("invalid arity `{arity}`"))
            })?;
            let mut span = self.span_of(&name_tok);
            span.end_col = arity_tok.end_col;
            decls.push((name, arity, span));
        }
        if decls.is_empty() {
            return Err(ParseError::syntax(
                self.span_of(&kw_tok),
                "`@schema` needs at least one `Name/arity` entry",
            ));
        }
        Ok(decls)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        tokenize(text, None).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn dots_inside_words() {
        assert_eq!(
            toks("P(3.5)."),
            vec![Tok::Word("P".into()), Tok::LParen, Tok::Word("3.5".into()), Tok::RParen, Tok::Dot]
        );
        assert_eq!(
            toks("x != 3.5."),
            vec![Tok::Word("x".into()), Tok::Neq, Tok::Word("3.5".into()), Tok::Dot]
        );
    }

    #[test]
    fn arrows_and_comments() {
        assert_eq!(
            toks("R[1->2]. % trailing\n<-"),
            vec![
                Tok::Word("R".into()),
                Tok::LBracket,
                Tok::Word("1".into()),
                Tok::Arrow,
                Tok::Word("2".into()),
                Tok::RBracket,
                Tok::Dot,
                Tok::Implies
            ]
        );
    }

    #[test]
    fn quoted_escapes_and_positions() {
        let t = tokenize("\n  \"a \\\"b\\\"\"", Some("f")).unwrap();
        assert_eq!(t[0].tok, Tok::Quoted("a \"b\"".into()));
        assert_eq!((t[0].line, t[0].start_col, t[0].end_col), (2, 3, 12));
    }

    #[test]
    fn errors_carry_positions() {
        let e = tokenize("P(a).\nP(\"open", Some("db.facts")).unwrap_err();
        assert_eq!(e.span.line, 2);
        assert_eq!(e.span.start_col, 3);
        let e = tokenize("P(a) = b", None).unwrap_err();
        assert_eq!((e.span.line, e.span.start_col), (1, 6));
    }
}
