//! Concrete syntax for formulas.
//!
//! ```text
//! formula  := ("forall" | "exists") ident+ "." formula | iff
//! iff      := implies ("<->" implies)*
//! implies  := join ("->" implies)?
//! join     := meet ("\/" meet)*
//! meet     := strong ("/\" strong)*
//! strong   := unary ("&" unary)*
//! unary    := "not" unary | primary
//! primary  := "(" formula ")" | "val(" label ")" | atom | term "~" term
//! ```
//!
//! A quantifier may also appear wherever an operand is expected; its body
//! extends as far to the right as possible.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Formula, Signature, SymbolKind, Term};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    /// Byte offset of the first character.
    pub begin: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    /// 1-based line of `begin`.
    pub line: usize,
    /// 1-based column (in characters) of `begin`.
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownSymbol,
    ArityMismatch,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownSymbol => "unknown symbol",
            ParseErrorKind::ArityMismatch => "arity mismatch",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind} at {span}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    /// Label inside `val( ... )`.
    Val(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Tilde,
    Amp,
    Wedge,
    Vee,
    Arrow,
    DArrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Val(s) => write!(f, "`val({s})`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Wedge => f.write_str("`/\\`"),
            Tok::Vee => f.write_str("`\\/`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::DArrow => f.write_str("`<->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, begin: usize, line: usize, column: usize) -> SourceSpan {
        SourceSpan {
            begin,
            end: self.pos,
            line,
            column,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.peek_char().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let (begin, line, column) = (self.pos, self.line, self.col);
            let Some(c) = self.bump() else {
                out.push((Tok::Eof, self.span_from(begin, line, column)));
                return Ok(out);
            };
            let rest = &self.src[begin..];
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '~' => Tok::Tilde,
                '&' => Tok::Amp,
                '/' if rest.starts_with("/\\") => {
                    self.bump();
                    Tok::Wedge
                }
                '\\' if rest.starts_with("\\/") => {
                    self.bump();
                    Tok::Vee
                }
                '-' if rest.starts_with("->") => {
                    self.bump();
                    Tok::Arrow
                }
                '<' if rest.starts_with("<->") => {
                    self.bump();
                    self.bump();
                    Tok::DArrow
                }
                c if is_ident_start(c) => {
                    while self.peek_char().is_some_and(is_ident_char) {
                        self.bump();
                    }
                    let word = &self.src[begin..self.pos];
                    if word == "val" {
                        self.val_label(begin, line, column)?
                    } else {
                        Tok::Ident(word.to_string())
                    }
                }
                other => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Lexical,
                        message: format!("unexpected character `{other}`"),
                        span: self.span_from(begin, line, column),
                    })
                }
            };
            out.push((tok, self.span_from(begin, line, column)));
        }
    }

    fn val_label(&mut self, begin: usize, line: usize, column: usize) -> Result<Tok, ParseError> {
        while self.peek_char().is_some_and(char::is_whitespace) {
            self.bump();
        }
        if self.peek_char() != Some('(') {
            return Err(ParseError {
                kind: ParseErrorKind::Lexical,
                message: "expected `(` after `val`".into(),
                span: self.span_from(begin, line, column),
            });
        }
        self.bump();
        let start = self.pos;
        while self.peek_char().is_some_and(|c| c != ')' && c != '\n') {
            self.bump();
        }
        if self.peek_char() != Some(')') {
            return Err(ParseError {
                kind: ParseErrorKind::Lexical,
                message: "unterminated `val(`".into(),
                span: self.span_from(begin, line, column),
            });
        }
        let label = self.src[start..self.pos].trim().to_string();
        self.bump();
        if label.is_empty() {
            return Err(ParseError {
                kind: ParseErrorKind::Lexical,
                message: "empty truth constant label".into(),
                span: self.span_from(begin, line, column),
            });
        }
        Ok(Tok::Val(label))
    }
}

const KEYWORDS: [&str; 4] = ["forall", "exists", "not", "val"];

struct Parser<'s> {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    sig: Option<&'s Signature>,
    bound: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, kind: ParseErrorKind, message: String, span: SourceSpan) -> PResult<T> {
        Err(ParseError {
            kind,
            message,
            span,
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.next().1)
        } else {
            let found = self.peek().clone();
            self.err(
                ParseErrorKind::Syntax,
                format!("expected {tok}, found {found}"),
                self.span(),
            )
        }
    }

    fn is_quantifier(&self) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == "forall" || w == "exists")
    }

    fn formula(&mut self) -> PResult<Formula> {
        if self.is_quantifier() {
            return self.quantified();
        }
        self.iff()
    }

    /// An operand position: a quantifier here swallows the rest.
    fn operand<F: FnOnce(&mut Self) -> PResult<Formula>>(&mut self, f: F) -> PResult<Formula> {
        if self.is_quantifier() {
            self.quantified()
        } else {
            f(self)
        }
    }

    fn quantified(&mut self) -> PResult<Formula> {
        let (Tok::Ident(q), qspan) = self.next() else {
            unreachable!("checked by is_quantifier")
        };
        let mut vars = Vec::new();
        while let Tok::Ident(v) = self.peek().clone() {
            if KEYWORDS.contains(&v.as_str()) {
                let span = self.span();
                return self.err(
                    ParseErrorKind::Syntax,
                    format!("keyword `{v}` cannot be a variable"),
                    span,
                );
            }
            vars.push(v);
            self.next();
        }
        if vars.is_empty() {
            return self.err(
                ParseErrorKind::Syntax,
                format!("`{q}` needs at least one variable"),
                qspan,
            );
        }
        self.expect(Tok::Dot)?;
        let depth = self.bound.len();
        self.bound.extend(vars.iter().cloned());
        let body = self.formula();
        self.bound.truncate(depth);
        let mut body = body?;
        for v in vars.iter().rev() {
            body = if q == "forall" {
                Formula::forall(v, body)
            } else {
                Formula::exists(v, body)
            };
        }
        Ok(body)
    }

    fn iff(&mut self) -> PResult<Formula> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::DArrow {
            self.next();
            let rhs = self.operand(Self::implies)?;
            lhs = lhs.iff(rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<Formula> {
        let lhs = self.join()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.operand(Self::implies)?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn join(&mut self) -> PResult<Formula> {
        let mut lhs = self.meet()?;
        while *self.peek() == Tok::Vee {
            self.next();
            let rhs = self.operand(Self::meet)?;
            lhs = lhs.join(rhs);
        }
        Ok(lhs)
    }

    fn meet(&mut self) -> PResult<Formula> {
        let mut lhs = self.strong()?;
        while *self.peek() == Tok::Wedge {
            self.next();
            let rhs = self.operand(Self::strong)?;
            lhs = lhs.meet(rhs);
        }
        Ok(lhs)
    }

    fn strong(&mut self) -> PResult<Formula> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.next();
            let rhs = self.operand(Self::unary)?;
            lhs = lhs.strong(rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Formula> {
        if matches!(self.peek(), Tok::Ident(w) if w == "not") {
            self.next();
            let inner = self.operand(Self::unary)?;
            return Ok(inner.not());
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Formula> {
        let (tok, span) = self.next();
        match tok {
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Val(label) => self.truth_constant(label, span),
            Tok::Ident(name) if KEYWORDS.contains(&name.as_str()) => self.err(
                ParseErrorKind::Syntax,
                format!("unexpected keyword `{name}`"),
                span,
            ),
            Tok::Ident(name) => self.atom_or_identity(name, span),
            other => self.err(
                ParseErrorKind::Syntax,
                format!("expected a formula, found {other}"),
                span,
            ),
        }
    }

    fn truth_constant(&self, label: String, span: SourceSpan) -> PResult<Formula> {
        match label.as_str() {
            "0" => Ok(Formula::Bottom),
            "1" => Ok(Formula::Top),
            _ => match self.sig {
                Some(sig) if !sig.has_truth_constant(&label) => self.err(
                    ParseErrorKind::UnknownSymbol,
                    format!("truth constant `val({label})` is not in the signature"),
                    span,
                ),
                _ => Ok(Formula::Truth(label)),
            },
        }
    }

    fn arg_list(&mut self) -> PResult<Vec<Term>> {
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.next();
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.next() {
                (Tok::Comma, _) => continue,
                (Tok::RParen, _) => return Ok(args),
                (other, span) => {
                    return self.err(
                        ParseErrorKind::Syntax,
                        format!("expected `,` or `)`, found {other}"),
                        span,
                    )
                }
            }
        }
    }

    fn is_predicate(&self, name: &str) -> bool {
        self.sig
            .and_then(|s| s.predicate(name))
            .is_some_and(|s| s.kind != SymbolKind::TruthConstant)
    }

    fn atom_or_identity(&mut self, name: String, span: SourceSpan) -> PResult<Formula> {
        if self.sig.is_some() && self.is_predicate(&name) {
            let arity = self.sig.unwrap().predicate(&name).unwrap().arity;
            let args = if *self.peek() == Tok::LParen {
                self.next();
                self.arg_list()?
            } else {
                Vec::new()
            };
            if args.len() != arity {
                return self.err(
                    ParseErrorKind::ArityMismatch,
                    format!("`{name}` expects {arity} argument(s), got {}", args.len()),
                    span,
                );
            }
            return Ok(Formula::Atom(name, args));
        }
        // Term-shaped: either the left side of `~` or, without a signature,
        // an atom whose predicate is inferred.
        let args = if *self.peek() == Tok::LParen {
            self.next();
            Some(self.arg_list()?)
        } else {
            None
        };
        if *self.peek() == Tok::Tilde {
            let lhs = self.resolve_term(name, args, span)?;
            self.next();
            let rhs = self.term()?;
            return Ok(Formula::Eq(lhs, rhs));
        }
        if self.sig.is_some() {
            return self.err(
                ParseErrorKind::UnknownSymbol,
                format!("`{name}` is not a predicate of the signature"),
                span,
            );
        }
        Ok(Formula::Atom(name, args.unwrap_or_default()))
    }

    fn term(&mut self) -> PResult<Term> {
        let (tok, span) = self.next();
        match tok {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let args = if *self.peek() == Tok::LParen {
                    self.next();
                    Some(self.arg_list()?)
                } else {
                    None
                };
                self.resolve_term(name, args, span)
            }
            other => self.err(
                ParseErrorKind::Syntax,
                format!("expected a term, found {other}"),
                span,
            ),
        }
    }

    fn resolve_term(
        &self,
        name: String,
        args: Option<Vec<Term>>,
        span: SourceSpan,
    ) -> PResult<Term> {
        match args {
            Some(args) => {
                if let Some(sig) = self.sig {
                    let Some(sym) = sig.function(&name) else {
                        return self.err(
                            ParseErrorKind::UnknownSymbol,
                            format!("`{name}` is not a function of the signature"),
                            span,
                        );
                    };
                    if sym.arity != args.len() {
                        return self.err(
                            ParseErrorKind::ArityMismatch,
                            format!(
                                "`{name}` expects {} argument(s), got {}",
                                sym.arity,
                                args.len()
                            ),
                            span,
                        );
                    }
                }
                Ok(Term::App(name, args))
            }
            None => {
                let is_bound = self.bound.contains(&name);
                match self.sig.and_then(|s| s.function(&name)) {
                    Some(sym) if !is_bound => {
                        if sym.arity != 0 {
                            return self.err(
                                ParseErrorKind::ArityMismatch,
                                format!("`{name}` expects {} argument(s), got 0", sym.arity),
                                span,
                            );
                        }
                        Ok(Term::App(name, Vec::new()))
                    }
                    _ => {
                        if self.is_predicate(&name) {
                            return self.err(
                                ParseErrorKind::Syntax,
                                format!("predicate `{name}` used as a term"),
                                span,
                            );
                        }
                        Ok(Term::Var(name))
                    }
                }
            }
        }
    }
}

fn run_parser(text: &str, sig: Option<&Signature>) -> Result<Formula, ParseError> {
    let toks = Lexer {
        src: text,
        pos: 0,
        line: 1,
        col: 1,
    }
    .tokens()?;
    let mut p = Parser {
        toks,
        pos: 0,
        sig,
        bound: Vec::new(),
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        let found = p.peek().clone();
        return p.err(
            ParseErrorKind::Syntax,
            format!("unexpected {found} after formula"),
            p.span(),
        );
    }
    Ok(f)
}

/// Parses a formula over `sig`, checking every symbol and arity.
///
/// A bare identifier in term position is a constant when `sig` declares a
/// nullary function of that name and no enclosing quantifier binds it;
/// otherwise it is a variable.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    run_parser(text, Some(sig))
}

/// Parses without a signature, inferring predicate and function symbols.
///
/// Every bare identifier in term position is a variable, and any truth
/// constant label is accepted.
pub fn parse_formula_untyped(text: &str) -> Result<Formula, ParseError> {
    run_parser(text, None)
}

pub fn render_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        Term::App(f, args) if args.is_empty() => f.clone(),
        Term::App(f, args) => {
            let inner: Vec<String> = args.iter().map(render_term).collect();
            format!("{f}({})", inner.join(","))
        }
    }
}

const PREC_IFF: u8 = 1;
const PREC_IMPLIES: u8 = 2;
const PREC_JOIN: u8 = 3;
const PREC_MEET: u8 = 4;
const PREC_STRONG: u8 = 5;
const PREC_NOT: u8 = 6;

/// Renders with the fewest parentheses that parse back to the same tree.
pub fn render_formula(phi: &Formula) -> String {
    let mut out = String::new();
    render(phi, 0, true, &mut out);
    out
}

/// `min_prec`: the loosest operator allowed bare here.
/// `tail`: nothing follows this position, so a quantifier may run to the end.
fn render(phi: &Formula, min_prec: u8, tail: bool, out: &mut String) {
    match phi {
        Formula::Top => out.push_str("val(1)"),
        Formula::Bottom => out.push_str("val(0)"),
        Formula::Truth(l) => {
            out.push_str("val(");
            out.push_str(l);
            out.push(')');
        }
        Formula::Atom(p, args) => {
            out.push_str(p);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&render_term(a));
                }
                out.push(')');
            }
        }
        Formula::Eq(a, b) => {
            out.push_str(&render_term(a));
            out.push_str(" ~ ");
            out.push_str(&render_term(b));
        }
        Formula::Not(a) => {
            out.push_str("not ");
            if matches!(**a, Formula::Eq(..)) {
                out.push('(');
                render(a, 0, true, out);
                out.push(')');
            } else {
                render(a, PREC_NOT, tail, out);
            }
        }
        Formula::Forall(..) | Formula::Exists(..) => {
            let wrap = !tail || min_prec > 0;
            if wrap {
                out.push('(');
            }
            let (q, _, _) = phi.as_quantifier().unwrap();
            let mut cur = phi;
            out.push_str(match q {
                crate::syntax::Quantifier::Forall => "forall",
                crate::syntax::Quantifier::Exists => "exists",
            });
            while let Some((q2, v, body)) = cur.as_quantifier() {
                if q2 != q {
                    break;
                }
                out.push(' ');
                out.push_str(v);
                cur = body;
            }
            out.push_str(". ");
            render(cur, 0, true, out);
            if wrap {
                out.push(')');
            }
        }
        _ => {
            let (c, a, b) = phi.as_binary().unwrap();
            use crate::syntax::Connective::*;
            let (prec, op, right_assoc) = match c {
                Strong => (PREC_STRONG, " & ", false),
                Meet => (PREC_MEET, " /\\ ", false),
                Join => (PREC_JOIN, " \\/ ", false),
                Implies => (PREC_IMPLIES, " -> ", true),
                Iff => (PREC_IFF, " <-> ", false),
            };
            let wrap = prec < min_prec;
            if wrap {
                out.push('(');
            }
            let inner_tail = tail || wrap;
            let (lp, rp) = if right_assoc {
                (prec + 1, prec)
            } else {
                (prec, prec + 1)
            };
            render(a, lp, false, out);
            out.push_str(op);
            // A quantifier may sit bare on the right when nothing follows.
            if inner_tail && b.as_quantifier().is_some() {
                render(b, 0, true, out);
            } else {
                render(b, rp, inner_tail, out);
            }
            if wrap {
                out.push(')');
            }
        }
    }
}

/// Variables occurring anywhere in a formula, bound or free.
pub fn all_variables(phi: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn walk(phi: &Formula, out: &mut BTreeSet<String>) {
        match phi {
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                out.insert(v.clone());
                walk(b, out);
            }
            Formula::Not(a) => walk(a, out),
            _ => match phi.as_binary() {
                Some((_, a, b)) => {
                    walk(a, out);
                    walk(b, out);
                }
                None => out.extend(phi.free_variables()),
            },
        }
    }
    walk(phi, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteChain;
    use std::sync::Arc;

    fn graph_sig() -> Signature {
        Signature::new().with_predicate("R", 2).unwrap()
    }

    #[test]
    fn irreflexivity_axiom() {
        let f = parse_formula("forall x. (R(x,x) -> val(0))", &graph_sig()).unwrap();
        let expected = Formula::forall("x", Formula::atom("R", &["x", "x"]).implies(Formula::Bottom));
        assert_eq!(f, expected);
        assert_eq!(render_formula(&f), "forall x. R(x,x) -> val(0)");
        assert_eq!(parse_formula(&render_formula(&f), &graph_sig()).unwrap(), f);
    }

    #[test]
    fn top_constant() {
        let f = parse_formula("val(1)", &Signature::new()).unwrap();
        assert_eq!(f, Formula::Top);
        assert_eq!(render_formula(&f), "val(1)");
    }

    #[test]
    fn degree_two_axiom() {
        let text = "forall x. exists y z. (not (y ~ z) /\\ R(x,y) /\\ R(x,z))";
        let f = parse_formula(text, &graph_sig()).unwrap();
        let body = Formula::Eq(Term::var("y"), Term::var("z"))
            .not()
            .meet(Formula::atom("R", &["x", "y"]))
            .meet(Formula::atom("R", &["x", "z"]));
        let expected = Formula::forall("x", Formula::exists("y", Formula::exists("z", body)));
        assert_eq!(f, expected);
        assert_eq!(parse_formula(&render_formula(&f), &graph_sig()).unwrap(), f);
    }

    #[test]
    fn precedence_and_associativity() {
        let sig = Signature::new()
            .with_predicate("A", 0)
            .unwrap()
            .with_predicate("B", 0)
            .unwrap()
            .with_predicate("C", 0)
            .unwrap();
        let p = |s| parse_formula(s, &sig).unwrap();
        let (a, b, c) = (
            Formula::Atom("A".into(), vec![]),
            Formula::Atom("B".into(), vec![]),
            Formula::Atom("C".into(), vec![]),
        );
        assert_eq!(p("A -> B -> C"), a.clone().implies(b.clone().implies(c.clone())));
        assert_eq!(p("A & B /\\ C"), a.clone().strong(b.clone()).meet(c.clone()));
        assert_eq!(p("A \\/ B /\\ C"), a.clone().join(b.clone().meet(c.clone())));
        assert_eq!(p("not A & B"), a.clone().not().strong(b.clone()));
        assert_eq!(p("A <-> B -> C"), a.clone().iff(b.clone().implies(c.clone())));
        assert_eq!(
            p("A & forall x. B -> C"),
            a.clone().strong(Formula::forall("x", b.clone().implies(c.clone())))
        );
        let left = a.clone().implies(b.clone()).implies(c.clone());
        assert_eq!(render_formula(&left), "(A -> B) -> C");
        assert_eq!(p(&render_formula(&left)), left);
    }

    #[test]
    fn quantifier_rendering_parenthesizes_when_needed() {
        let sig = Signature::new().with_predicate("P", 1).unwrap();
        let q = Formula::exists("x", Formula::atom("P", &["x"]));
        let f = q.clone().meet(Formula::Top);
        let text = render_formula(&f);
        assert_eq!(text, "(exists x. P(x)) /\\ val(1)");
        assert_eq!(parse_formula(&text, &sig).unwrap(), f);
        let g = Formula::Top.meet(q.clone()).join(Formula::Bottom);
        assert_eq!(parse_formula(&render_formula(&g), &sig).unwrap(), g);
        let h = q.not().strong(Formula::Top);
        assert_eq!(parse_formula(&render_formula(&h), &sig).unwrap(), h);
    }

    #[test]
    fn errors_carry_spans() {
        let e = parse_formula("forall x. Q(x)", &graph_sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSymbol);
        assert_eq!(e.span.column, 11);
        let e = parse_formula("R(x)", &graph_sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ArityMismatch);
        let e = parse_formula("R(x,y) $", &graph_sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Lexical);
        let e = parse_formula("R(x,y) R(x,y)", &graph_sig()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        let e = parse_formula("\n  val(1/2)", &graph_sig()).unwrap_err();
        assert_eq!((e.span.line, e.span.column), (2, 3));
    }

    #[test]
    fn truth_constants_need_the_signature() {
        let g = Arc::new(FiniteChain::godel(&["0", "1/2", "3/4", "1"]));
        let sig = graph_sig().expand_with_truth_constants(g).unwrap();
        assert_eq!(
            parse_formula("val(3/4)", &sig).unwrap(),
            Formula::Truth("3/4".into())
        );
        assert_eq!(parse_formula("val(0)", &sig).unwrap(), Formula::Bottom);
        assert!(parse_formula("val(3/4)", &graph_sig()).is_err());
    }

    #[test]
    fn constants_versus_variables() {
        let sig = Signature::new()
            .with_predicate("P", 1)
            .unwrap()
            .with_function("c", 0)
            .unwrap()
            .with_function("f", 1)
            .unwrap();
        assert_eq!(
            parse_formula("P(c)", &sig).unwrap(),
            Formula::Atom("P".into(), vec![Term::constant("c")])
        );
        assert_eq!(
            parse_formula("forall c. P(c)", &sig).unwrap(),
            Formula::forall("c", Formula::atom("P", &["c"]))
        );
        let f = parse_formula("f(f(x)) ~ c", &sig).unwrap();
        assert_eq!(render_formula(&f), "f(f(x)) ~ c");
    }

    #[test]
    fn untyped_parsing_infers_symbols() {
        let f = parse_formula_untyped("forall x. exists y. R(x,y)").unwrap();
        let sig = f.infer_signature().unwrap();
        assert_eq!(sig.predicate("R").unwrap().arity, 2);
    }
}
