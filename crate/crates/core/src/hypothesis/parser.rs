//! Lexer and recursive-descent parser for hypothesis strings.
//!
//! ```text
//! hypothesis := chain ('&' chain)*
//! chain      := term (rel term)+
//! rel        := '<' | '>' | '='
//! term       := '{' member (',' member)* '}' | linexpr
//! member     := linexpr ('=' linexpr)*
//! linexpr    := ['+'|'-'] atom (('+'|'-') atom)*
//! atom       := number ['*' ident] | ident ['*' number]
//! ```
//!
//! The parser produces raw (unnormalized) constraint rows over parameter
//! names; [`super::ConstraintSystem`] takes care of normalization.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnexpectedToken(String),
    UnknownRelation(String),
    EmptyBraceSet,
    MissingRelation,
    BadNumber(String),
    /// A constraint whose parameter coefficients all cancel.
    NoParameters,
    Empty,
}

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => format!("unexpected character {c:?}"),
            ParseErrorKind::UnexpectedEnd => "unexpected end of input".to_string(),
            ParseErrorKind::UnexpectedToken(t) => format!("unexpected token `{t}`"),
            ParseErrorKind::UnknownRelation(r) => {
                format!("unknown relation `{r}` (use <, > or =)")
            }
            ParseErrorKind::EmptyBraceSet => "empty brace set".to_string(),
            ParseErrorKind::MissingRelation => "expected a relation (<, > or =) between terms".to_string(),
            ParseErrorKind::BadNumber(s) => format!("malformed number `{s}`"),
            ParseErrorKind::NoParameters => "constraint involves no parameters".to_string(),
            ParseErrorKind::Empty => "empty hypothesis".to_string(),
        };
        write!(f, "{what} at position {}", self.position)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Star,
    Lt,
    Gt,
    Eq,
    LBrace,
    RBrace,
    Comma,
    Amp,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Lt => f.write_str("<"),
            Tok::Gt => f.write_str(">"),
            Tok::Eq => f.write_str("="),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::Comma => f.write_str(","),
            Tok::Amp => f.write_str("&"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let err = |position, kind| Err(ParseError { position, kind });
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|(_, c)| *c);
        match c {
            c if c.is_whitespace() => i += 1,
            '<' | '>' | '=' | '!' => {
                if let Some(n) = next.filter(|n| matches!(n, '<' | '>' | '=')) {
                    return err(pos, ParseErrorKind::UnknownRelation(format!("{c}{n}")));
                }
                let tok = match c {
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '=' => Tok::Eq,
                    _ => return err(pos, ParseErrorKind::UnknownRelation(c.to_string())),
                };
                out.push((tok, pos));
                i += 1;
            }
            '+' => {
                out.push((Tok::Plus, pos));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, pos));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, pos));
                i += 1;
            }
            '{' => {
                out.push((Tok::LBrace, pos));
                i += 1;
            }
            '}' => {
                out.push((Tok::RBrace, pos));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, pos));
                i += 1;
            }
            '&' => {
                out.push((Tok::Amp, pos));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // Optional exponent, only when followed by digits.
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        while j < chars.len() && chars[j].1.is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let end = chars.get(i).map(|(p, _)| *p).unwrap_or(text.len());
                let s = &text[pos..end];
                if i < chars.len() && is_ident_start(chars[i].1) {
                    return err(chars[start].0, ParseErrorKind::BadNumber(s.to_string()));
                }
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => out.push((Tok::Num(v), pos)),
                    _ => return err(pos, ParseErrorKind::BadNumber(s.to_string())),
                }
            }
            c if is_ident_start(c) => {
                while i < chars.len() && is_ident_continue(chars[i].1) {
                    i += 1;
                }
                let end = chars.get(i).map(|(p, _)| *p).unwrap_or(text.len());
                out.push((Tok::Ident(text[pos..end].to_string()), pos));
            }
            other => return err(pos, ParseErrorKind::UnexpectedChar(other)),
        }
    }
    Ok(out)
}

/// Linear expression: coefficients in order of first appearance plus a constant.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct LinExpr {
    pub terms: Vec<(String, f64)>,
    pub constant: f64,
}

impl LinExpr {
    fn add_term(&mut self, name: &str, coef: f64) {
        match self.terms.iter_mut().find(|(n, _)| n == name) {
            Some((_, c)) => *c += coef,
            None => self.terms.push((name.to_string(), coef)),
        }
    }

    /// `self - other`, keeping first-appearance order (self first).
    fn minus(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (n, c) in &other.terms {
            out.add_term(n, -c);
        }
        out.constant -= other.constant;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    Equality,
    Inequality,
}

/// `expr = 0` or `expr > 0`.
#[derive(Debug, Clone)]
pub(crate) struct RawRow {
    pub kind: RowKind,
    pub expr: LinExpr,
    pub position: usize,
}

struct Member {
    expr: LinExpr,
}

struct Term {
    members: Vec<Member>,
    position: usize,
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    idx: usize,
    end: usize,
    rows: Vec<RawRow>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn fail<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos(),
            kind,
        })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => self.fail(ParseErrorKind::UnexpectedToken(t.to_string())),
            None => self.fail(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn hypothesis(&mut self) -> Result<(), ParseError> {
        if self.toks.is_empty() {
            return self.fail(ParseErrorKind::Empty);
        }
        self.chain()?;
        while let Some(Tok::Amp) = self.peek() {
            self.bump();
            self.chain()?;
        }
        if self.peek().is_some() {
            return self.unexpected();
        }
        Ok(())
    }

    fn chain(&mut self) -> Result<(), ParseError> {
        let mut left = self.term()?;
        let mut relations = 0;
        loop {
            let rel = match self.peek() {
                Some(Tok::Lt) => RowKind::Inequality,
                Some(Tok::Gt) => RowKind::Inequality,
                Some(Tok::Eq) => RowKind::Equality,
                _ => break,
            };
            let flip = matches!(self.peek(), Some(Tok::Lt));
            let rel_pos = self.pos();
            self.bump();
            let right = self.term()?;
            for a in &left.members {
                for b in &right.members {
                    // a < b  =>  b - a > 0 ;  a > b  =>  a - b > 0 ;  a = b  =>  a - b = 0
                    let expr = if flip {
                        b.expr.minus(&a.expr)
                    } else {
                        a.expr.minus(&b.expr)
                    };
                    self.rows.push(RawRow {
                        kind: rel,
                        expr,
                        position: rel_pos,
                    });
                }
            }
            relations += 1;
            left = right;
        }
        if relations == 0 {
            if self.peek().is_none() {
                return Err(ParseError {
                    position: left.position,
                    kind: ParseErrorKind::MissingRelation,
                });
            }
            return self.fail(ParseErrorKind::MissingRelation);
        }
        Ok(())
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let position = self.pos();
        if let Some(Tok::LBrace) = self.peek() {
            self.bump();
            if let Some(Tok::RBrace) = self.peek() {
                return Err(ParseError {
                    position,
                    kind: ParseErrorKind::EmptyBraceSet,
                });
            }
            let mut members = vec![self.member()?];
            loop {
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.bump();
                        members.push(self.member()?);
                    }
                    Some(Tok::RBrace) => {
                        self.bump();
                        break;
                    }
                    _ => return self.unexpected(),
                }
            }
            Ok(Term { members, position })
        } else {
            let expr = self.linexpr()?;
            Ok(Term {
                members: vec![Member { expr }],
                position,
            })
        }
    }

    /// A brace member; `e1 = e2 = ...` adds equality rows and is represented by `e1`.
    fn member(&mut self) -> Result<Member, ParseError> {
        let first = self.linexpr()?;
        let mut prev = first.clone();
        while let Some(Tok::Eq) = self.peek() {
            let rel_pos = self.pos();
            self.bump();
            let next = self.linexpr()?;
            self.rows.push(RawRow {
                kind: RowKind::Equality,
                expr: prev.minus(&next),
                position: rel_pos,
            });
            prev = next;
        }
        Ok(Member { expr: first })
    }

    fn linexpr(&mut self) -> Result<LinExpr, ParseError> {
        let mut expr = LinExpr::default();
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                sign = -1.0;
            }
            Some(Tok::Plus) => {
                self.bump();
            }
            _ => {}
        }
        self.atom(&mut expr, sign)?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    self.atom(&mut expr, 1.0)?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    self.atom(&mut expr, -1.0)?;
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn atom(&mut self, expr: &mut LinExpr, sign: f64) -> Result<(), ParseError> {
        match self.bump() {
            Some(Tok::Num(v)) => {
                if let Some(Tok::Star) = self.peek() {
                    self.bump();
                    match self.bump() {
                        Some(Tok::Ident(name)) => expr.add_term(&name, sign * v),
                        _ => {
                            self.idx -= 1;
                            return self.unexpected();
                        }
                    }
                } else {
                    expr.constant += sign * v;
                }
                Ok(())
            }
            Some(Tok::Ident(name)) => {
                let mut coef = sign;
                if let Some(Tok::Star) = self.peek() {
                    self.bump();
                    match self.bump() {
                        Some(Tok::Num(v)) => coef *= v,
                        _ => {
                            self.idx -= 1;
                            return self.unexpected();
                        }
                    }
                }
                expr.add_term(&name, coef);
                Ok(())
            }
            Some(_) => {
                self.idx -= 1;
                self.unexpected()
            }
            None => self.fail(ParseErrorKind::UnexpectedEnd),
        }
    }
}

/// Parsed rows plus the parameter names in order of first appearance in the text.
pub(crate) struct Parsed {
    pub rows: Vec<RawRow>,
    pub text_order: Vec<String>,
}

/// Parse into raw rows. Zero coefficients are dropped from each row.
pub(crate) fn parse_rows(text: &str) -> Result<Parsed, ParseError> {
    let toks = lex(text)?;
    let mut text_order: Vec<String> = Vec::new();
    for (t, _) in &toks {
        if let Tok::Ident(name) = t {
            if !text_order.contains(name) {
                text_order.push(name.clone());
            }
        }
    }
    let mut p = Parser {
        toks: &toks,
        idx: 0,
        end: text.len(),
        rows: Vec::new(),
    };
    p.hypothesis()?;
    let mut rows = p.rows;
    for row in &mut rows {
        row.expr.terms.retain(|(_, c)| *c != 0.0);
        if row.expr.terms.is_empty() {
            return Err(ParseError {
                position: row.position,
                kind: ParseErrorKind::NoParameters,
            });
        }
    }
    Ok(Parsed { rows, text_order })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_exponents_and_identifiers() {
        let toks = lex("2.5e-1*b_1 > x.y").unwrap();
        assert_eq!(toks[0].0, Tok::Num(0.25));
        assert_eq!(toks[2].0, Tok::Ident("b_1".into()));
        assert_eq!(toks[4].0, Tok::Ident("x.y".into()));
    }

    #[test]
    fn rejects_compound_relations() {
        for text in ["b1 >= 0", "b1 <= 0", "b1 == b2", "b1 != 0"] {
            let e = parse_rows(text).err().unwrap();
            assert!(matches!(e.kind, ParseErrorKind::UnknownRelation(_)), "{text}");
            assert_eq!(e.position, 3);
        }
    }

    #[test]
    fn error_positions() {
        let e = parse_rows("b1 > {}").err().unwrap();
        assert_eq!(e.kind, ParseErrorKind::EmptyBraceSet);
        assert_eq!(e.position, 5);

        let e = parse_rows("b1 b2").err().unwrap();
        assert_eq!(e.kind, ParseErrorKind::MissingRelation);
        assert_eq!(e.position, 3);

        let e = parse_rows("b1 > 0 &").err().unwrap();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(e.position, 8);

        let e = parse_rows("b1 > 0 # x").err().unwrap();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('#'));

        let e = parse_rows("b1 - b1 > 0").err().unwrap();
        assert_eq!(e.kind, ParseErrorKind::NoParameters);

        assert_eq!(parse_rows("  ").err().unwrap().kind, ParseErrorKind::Empty);
        assert!(matches!(
            parse_rows("2b1 > 0").err().unwrap().kind,
            ParseErrorKind::BadNumber(_)
        ));
    }

    #[test]
    fn brace_equality_adds_row_and_uses_representative() {
        let parsed = parse_rows("0 < {b1 = b2} < b3").unwrap();
        assert_eq!(parsed.text_order, vec!["b1", "b2", "b3"]);
        let rows = parsed.rows;
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].kind, RowKind::Equality);
        assert_eq!(rows[1].expr.terms, vec![("b1".to_string(), 1.0)]);
        assert_eq!(
            rows[2].expr.terms,
            vec![("b3".to_string(), 1.0), ("b1".to_string(), -1.0)]
        );
    }
}
