//! Formulas of L1: epsilon atoms closed under disjunction and negation.
//!
//! The parser accepts a richer surface language (conjunction, implication,
//! equivalence) which is desugared once at the boundary; everything past
//! [`desugar`] works on [`Formula`] only.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Identifier reserved for the designated variable of the rejection axioms.
pub const DESIGNATED: &str = "a0";

/// A name variable. Compared by exact string equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NameVar(Arc<str>);

impl NameVar {
    /// Builds a variable from an identifier of the form `[a-z][a-z0-9_]*`.
    pub fn new(id: &str) -> Result<Self, ParseError> {
        if is_ident(id) {
            Ok(NameVar(Arc::from(id)))
        } else {
            Err(ParseError {
                offset: 0,
                expected: vec!["identifier".into()],
            })
        }
    }

    /// The variable used by the rejection axioms `⊣ εaa` / `⊣ ∼εaa`.
    pub fn designated() -> Self {
        NameVar(Arc::from(DESIGNATED))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_designated(&self) -> bool {
        &*self.0 == DESIGNATED
    }
}

fn is_ident(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl fmt::Debug for NameVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for NameVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Core formula. Children are shared, so cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Eps(NameVar, NameVar),
    Or(Arc<Formula>, Arc<Formula>),
    Not(Arc<Formula>),
}

impl Formula {
    pub fn eps(a: &NameVar, b: &NameVar) -> Self {
        Formula::Eps(a.clone(), b.clone())
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or(Arc::new(lhs), Arc::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: Formula) -> Self {
        Formula::Not(Arc::new(arg))
    }

    /// `A ⊃ B`, i.e. `∼A ∨ B`.
    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::or(Formula::not(lhs), rhs)
    }

    /// Right-associated disjunction of a non-empty sequence.
    pub fn disjoin<I>(items: I) -> Option<Formula>
    where
        I: IntoIterator<Item = Formula>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut it = items.into_iter().rev();
        let last = it.next()?;
        Some(it.fold(last, |acc, f| Formula::or(f, acc)))
    }

    /// Top-level disjuncts, left to right, regardless of association.
    pub fn disjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                Formula::Or(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                other => out.push(other),
            }
        }
        out
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Eps(..) => 1,
            Formula::Or(l, r) => 1 + l.size() + r.size(),
            Formula::Not(a) => 1 + a.size(),
        }
    }

    /// Number of connectives (`∨` and `∼`).
    pub fn connectives(&self) -> usize {
        self.size() - self.atom_count()
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Formula::Eps(..) => 1,
            Formula::Or(l, r) => l.atom_count() + r.atom_count(),
            Formula::Not(a) => a.atom_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Eps(..) => 0,
            Formula::Or(l, r) => 1 + l.depth().max(r.depth()),
            Formula::Not(a) => 1 + a.depth(),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Eps(..))
    }

    /// An atom or a negated atom.
    pub fn is_literal(&self) -> bool {
        match self {
            Formula::Eps(..) => true,
            Formula::Not(a) => a.is_atom(),
            Formula::Or(..) => false,
        }
    }

    /// Re-associates every disjunction chain to the right.
    pub fn right_associated(&self) -> Formula {
        match self {
            Formula::Eps(..) => self.clone(),
            Formula::Not(a) => Formula::not(a.right_associated()),
            Formula::Or(..) => {
                Formula::disjoin(self.disjuncts().into_iter().map(Formula::right_associated))
                    .expect("disjunction has at least two disjuncts")
            }
        }
    }

    /// ASCII rendering accepted back by [`parse`].
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        write_formula(&mut s, self, Syntax::Ascii);
        s
    }

    pub fn to_surface(&self) -> SurfaceFormula {
        match self {
            Formula::Eps(a, b) => SurfaceFormula::Eps(a.clone(), b.clone()),
            Formula::Or(l, r) => {
                SurfaceFormula::Or(Box::new(l.to_surface()), Box::new(r.to_surface()))
            }
            Formula::Not(a) => SurfaceFormula::Not(Box::new(a.to_surface())),
        }
    }
}

#[derive(Clone, Copy)]
enum Syntax {
    Ascii,
    Unicode,
}

fn write_formula(out: &mut String, f: &Formula, syntax: Syntax) {
    match f {
        Formula::Eps(a, b) => match syntax {
            Syntax::Ascii => {
                out.push_str("eps(");
                out.push_str(a.as_str());
                out.push(',');
                out.push_str(b.as_str());
                out.push(')');
            }
            Syntax::Unicode => {
                out.push('ε');
                if a.as_str().len() == 1 && b.as_str().len() == 1 {
                    out.push_str(a.as_str());
                    out.push_str(b.as_str());
                } else {
                    out.push('(');
                    out.push_str(a.as_str());
                    out.push(',');
                    out.push_str(b.as_str());
                    out.push(')');
                }
            }
        },
        Formula::Not(a) => {
            out.push_str(match syntax {
                Syntax::Ascii => "~",
                Syntax::Unicode => "∼",
            });
            if matches!(**a, Formula::Or(..)) {
                out.push('(');
                write_formula(out, a, syntax);
                out.push(')');
            } else {
                write_formula(out, a, syntax);
            }
        }
        Formula::Or(l, r) => {
            if matches!(**l, Formula::Or(..)) {
                out.push('(');
                write_formula(out, l, syntax);
                out.push(')');
            } else {
                write_formula(out, l, syntax);
            }
            out.push_str(match syntax {
                Syntax::Ascii => " | ",
                Syntax::Unicode => " ∨ ",
            });
            write_formula(out, r, syntax);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self, Syntax::Unicode);
        f.write_str(&s)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parser output: [`Formula`] constructors plus the derived connectives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceFormula {
    Eps(NameVar, NameVar),
    Not(Box<SurfaceFormula>),
    Or(Box<SurfaceFormula>, Box<SurfaceFormula>),
    And(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Implies(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Iff(Box<SurfaceFormula>, Box<SurfaceFormula>),
}

/// Eliminates `∧`, `⊃` and `≡` in favour of `∨` and `∼`.
pub fn desugar(s: &SurfaceFormula) -> Formula {
    match s {
        SurfaceFormula::Eps(a, b) => Formula::eps(a, b),
        SurfaceFormula::Not(a) => Formula::not(desugar(a)),
        SurfaceFormula::Or(l, r) => Formula::or(desugar(l), desugar(r)),
        SurfaceFormula::And(l, r) => conj(desugar(l), desugar(r)),
        SurfaceFormula::Implies(l, r) => Formula::implies(desugar(l), desugar(r)),
        SurfaceFormula::Iff(l, r) => {
            let (l, r) = (desugar(l), desugar(r));
            conj(
                Formula::implies(l.clone(), r.clone()),
                Formula::implies(r, l),
            )
        }
    }
}

fn conj(l: Formula, r: Formula) -> Formula {
    Formula::not(Formula::or(Formula::not(l), Formula::not(r)))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {}", expected.join(" or "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
}

/// Parses user input. The designated variable `a0` is rejected.
pub fn parse(text: &str) -> Result<SurfaceFormula, ParseError> {
    Parser::new(text, false).parse_all()
}

/// Parses a formula that may mention the designated variable, as found in
/// rejection certificates.
pub fn parse_internal(text: &str) -> Result<SurfaceFormula, ParseError> {
    Parser::new(text, true).parse_all()
}

/// `parse` followed by `desugar`.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse(text).map(|s| desugar(&s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Eps,
    EpsGlued,
    LParen,
    RParen,
    Comma,
    Not,
    Or,
    And,
    Implies,
    Iff,
    Ident,
    End,
}

impl Tok {
    fn describe(self) -> &'static str {
        match self {
            Tok::Eps | Tok::EpsGlued => "`eps`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Not => "`~`",
            Tok::Or => "`|`",
            Tok::And => "`&`",
            Tok::Implies => "`->`",
            Tok::Iff => "`<->`",
            Tok::Ident => "identifier",
            Tok::End => "end of input",
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    allow_reserved: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, allow_reserved: bool) -> Self {
        Parser {
            src,
            pos: 0,
            allow_reserved,
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token, its start offset and its byte length.
    fn peek(&mut self) -> (Tok, usize, usize) {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        const SYMBOLS: &[(&str, Tok)] = &[
            ("<->", Tok::Iff),
            ("->", Tok::Implies),
            ("\\/", Tok::Or),
            ("/\\", Tok::And),
            ("~", Tok::Not),
            ("∼", Tok::Not),
            ("¬", Tok::Not),
            ("|", Tok::Or),
            ("∨", Tok::Or),
            ("&", Tok::And),
            ("∧", Tok::And),
            ("⊃", Tok::Implies),
            ("≡", Tok::Iff),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            (",", Tok::Comma),
        ];
        if rest.is_empty() {
            return (Tok::End, start, 0);
        }
        for (sym, tok) in SYMBOLS {
            if rest.starts_with(sym) {
                return (*tok, start, sym.len());
            }
        }
        for eps in ["ε", "ϵ"] {
            if let Some(after) = rest.strip_prefix(eps) {
                let tok = if after.starts_with(|c: char| c.is_ascii_lowercase()) {
                    Tok::EpsGlued
                } else {
                    Tok::Eps
                };
                return (tok, start, eps.len());
            }
        }
        let len = rest
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_lowercase() || (i > 0 && (c.is_ascii_digit() || c == '_')))
            })
            .map_or(rest.len(), |(i, _)| i);
        if len > 0 {
            if &rest[..len] == "eps" {
                return (Tok::Eps, start, len);
            }
            return (Tok::Ident, start, len);
        }
        // Unknown character: report it as the end of the valid prefix.
        (Tok::End, start, 0)
    }

    fn error(&mut self, expected: &[Tok]) -> ParseError {
        let (_, offset, _) = self.peek();
        let mut expected: Vec<String> = expected.iter().map(|t| t.describe().to_string()).collect();
        expected.dedup();
        ParseError { offset, expected }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        let (t, _, len) = self.peek();
        if t == tok {
            self.pos += len;
            Ok(())
        } else {
            Err(self.error(&[tok]))
        }
    }

    fn ident(&mut self) -> Result<NameVar, ParseError> {
        let (t, start, len) = self.peek();
        if t != Tok::Ident {
            return Err(self.error(&[Tok::Ident]));
        }
        let text = &self.src[start..start + len];
        if text == DESIGNATED && !self.allow_reserved {
            return Err(ParseError {
                offset: start,
                expected: vec![format!("identifier other than reserved `{DESIGNATED}`")],
            });
        }
        self.pos += len;
        Ok(NameVar(Arc::from(text)))
    }

    fn parse_all(mut self) -> Result<SurfaceFormula, ParseError> {
        let f = self.iff()?;
        let (t, _, _) = self.peek();
        if t != Tok::End || self.pos != self.src.len() {
            return Err(self.error(&[Tok::Or, Tok::And, Tok::Implies, Tok::Iff, Tok::End]));
        }
        Ok(f)
    }

    fn iff(&mut self) -> Result<SurfaceFormula, ParseError> {
        let lhs = self.implication()?;
        if self.peek().0 == Tok::Iff {
            self.expect(Tok::Iff)?;
            let rhs = self.iff()?;
            return Ok(SurfaceFormula::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<SurfaceFormula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek().0 == Tok::Implies {
            self.expect(Tok::Implies)?;
            let rhs = self.implication()?;
            return Ok(SurfaceFormula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<SurfaceFormula, ParseError> {
        let lhs = self.conjunction()?;
        if self.peek().0 == Tok::Or {
            self.expect(Tok::Or)?;
            let rhs = self.disjunction()?;
            return Ok(SurfaceFormula::Or(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<SurfaceFormula, ParseError> {
        let lhs = self.unary()?;
        if self.peek().0 == Tok::And {
            self.expect(Tok::And)?;
            let rhs = self.conjunction()?;
            return Ok(SurfaceFormula::And(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<SurfaceFormula, ParseError> {
        let (t, _, len) = self.peek();
        match t {
            Tok::Not => {
                self.pos += len;
                Ok(SurfaceFormula::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.pos += len;
                let f = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Eps => {
                self.pos += len;
                self.expect(Tok::LParen)?;
                let a = self.ident()?;
                self.expect(Tok::Comma)?;
                let b = self.ident()?;
                self.expect(Tok::RParen)?;
                Ok(SurfaceFormula::Eps(a, b))
            }
            Tok::EpsGlued => {
                // `εab`: two single-letter variables.
                self.pos += len;
                let a = self.glued_letter()?;
                let b = self.glued_letter()?;
                Ok(SurfaceFormula::Eps(a, b))
            }
            _ => Err(self.error(&[Tok::Eps, Tok::Not, Tok::LParen])),
        }
    }

    fn glued_letter(&mut self) -> Result<NameVar, ParseError> {
        match self.src[self.pos..].chars().next() {
            Some(c) if c.is_ascii_lowercase() => {
                let v = NameVar(Arc::from(&self.src[self.pos..self.pos + 1]));
                self.pos += 1;
                Ok(v)
            }
            _ => Err(ParseError {
                offset: self.pos,
                expected: vec!["single-letter variable".into()],
            }),
        }
    }
}

/// A simultaneous renaming of name variables.
pub type Substitution = BTreeMap<NameVar, NameVar>;

/// Replaces every mapped variable simultaneously; unmapped ones are kept.
pub fn substitute(f: &Formula, map: &Substitution) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    let get = |v: &NameVar| map.get(v).unwrap_or(v).clone();
    match f {
        Formula::Eps(a, b) => Formula::Eps(get(a), get(b)),
        Formula::Or(l, r) => Formula::or(substitute(l, map), substitute(r, map)),
        Formula::Not(a) => Formula::not(substitute(a, map)),
    }
}

/// Variables in first-occurrence order (left to right, depth first).
pub fn variables(f: &Formula) -> Vec<NameVar> {
    fn walk(f: &Formula, out: &mut Vec<NameVar>) {
        match f {
            Formula::Eps(a, b) => {
                for v in [a, b] {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
            Formula::Or(l, r) => {
                walk(l, out);
                walk(r, out);
            }
            Formula::Not(a) => walk(a, out),
        }
    }
    let mut out = Vec::new();
    walk(f, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> NameVar {
        NameVar::new(s).unwrap()
    }
    fn e(a: &str, b: &str) -> Formula {
        Formula::eps(&v(a), &v(b))
    }
    fn n(f: Formula) -> Formula {
        Formula::not(f)
    }
    fn or(l: Formula, r: Formula) -> Formula {
        Formula::or(l, r)
    }

    #[test]
    fn parses_axiom_one() {
        let f = parse_formula("~eps(a,b) | eps(a,a)").unwrap();
        assert_eq!(f, or(n(e("a", "b")), e("a", "a")));
        assert_eq!(f.to_string(), "∼εab ∨ εaa");
    }

    #[test]
    fn parses_atom() {
        assert_eq!(parse_formula("eps(a,a)").unwrap(), e("a", "a"));
    }

    #[test]
    fn unclosed_paren_reports_offset() {
        let err = parse("eps(a").unwrap_err();
        assert_eq!(err.offset, 5);
        assert!(err.expected.iter().any(|x| x.contains(',')));
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        let err = parse("eps(a,b) eps(b,a)").unwrap_err();
        assert_eq!(err.offset, 9);
        assert!(parse("eps(a,b) $").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn reserved_variable_is_refused_for_user_input() {
        assert!(parse("eps(a0,b)").is_err());
        assert!(parse_internal("eps(a0,b)").is_ok());
    }

    #[test]
    fn desugars_transitivity_axiom() {
        let f = parse_formula("eps(a,b) & eps(b,c) -> eps(a,c)").unwrap();
        let expected = or(n(n(or(n(e("a", "b")), n(e("b", "c"))))), e("a", "c"));
        assert_eq!(f, expected);
        assert_eq!(f.to_string(), "∼∼(∼εab ∨ ∼εbc) ∨ εac");
    }

    #[test]
    fn desugars_implication_and_equivalence() {
        let a = e("a", "b");
        let b = e("b", "a");
        assert_eq!(
            parse_formula("eps(a,b) -> eps(b,a)").unwrap(),
            or(n(a.clone()), b.clone())
        );
        let iff = parse_formula("eps(a,b) <-> eps(b,a)").unwrap();
        let expected = n(or(n(or(n(a.clone()), b.clone())), n(or(n(b), a))));
        assert_eq!(iff, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        // ~ binds tighter than &, & than |, | than ->.
        let f = parse("~eps(a,b) & eps(b,c) | eps(c,c) -> eps(a,a) -> eps(b,b)").unwrap();
        match f {
            SurfaceFormula::Implies(l, r) => {
                assert!(matches!(*l, SurfaceFormula::Or(..)));
                assert!(matches!(*r, SurfaceFormula::Implies(..)));
            }
            other => panic!("unexpected {other:?}"),
        }
        // Disjunction associates to the right.
        let g = parse_formula("eps(a,a) | eps(b,b) | eps(c,c)").unwrap();
        assert_eq!(g, or(e("a", "a"), or(e("b", "b"), e("c", "c"))));
    }

    #[test]
    fn unicode_aliases() {
        let f = parse_formula("εab ∧ εbc ⊃ εac").unwrap();
        assert_eq!(
            f,
            parse_formula("eps(a,b) /\\ eps(b,c) -> eps(a,c)").unwrap()
        );
        let g = parse_formula("∼ε(foo,bar) ∨ ϵ(foo,foo)").unwrap();
        assert_eq!(g, or(n(e("foo", "bar")), e("foo", "foo")));
        assert_eq!(g.to_string(), "∼ε(foo,bar) ∨ ε(foo,foo)");
        assert_eq!(parse_formula("a ≡ b").ok(), None);
    }

    #[test]
    fn render_keeps_left_nesting() {
        let f = or(or(n(e("a", "b")), e("a", "a")), n(e("a", "a")));
        assert_eq!(f.to_string(), "(∼εab ∨ εaa) ∨ ∼εaa");
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        assert_eq!(parse_formula(&f.to_ascii()).unwrap(), f);
    }

    #[test]
    fn substitution_examples() {
        let f = or(n(e("b", "c")), n(e("b", "b")));
        let map = Substitution::from([(v("c"), v("b"))]);
        assert_eq!(substitute(&f, &map), or(n(e("b", "b")), n(e("b", "b"))));

        assert_eq!(substitute(&e("a", "b"), &Substitution::new()), e("a", "b"));

        let g = or(n(e("a", "b")), e("a", "a"));
        let map = Substitution::from([(v("a"), v("c")), (v("b"), v("c"))]);
        assert_eq!(substitute(&g, &map), or(n(e("c", "c")), e("c", "c")));
    }

    #[test]
    fn substitution_is_simultaneous() {
        let f = e("a", "b");
        let swap = Substitution::from([(v("a"), v("b")), (v("b"), v("a"))]);
        assert_eq!(substitute(&f, &swap), e("b", "a"));
    }

    #[test]
    fn variables_in_first_occurrence_order() {
        assert_eq!(
            variables(&or(e("a", "b"), e("b", "c"))),
            vec![v("a"), v("b"), v("c")]
        );
        assert_eq!(variables(&e("a", "a")), vec![v("a")]);
        assert_eq!(
            variables(&n(or(e("b", "a"), e("a", "b")))),
            vec![v("b"), v("a")]
        );
    }

    #[test]
    fn disjuncts_and_reassociation() {
        let left = or(or(e("a", "a"), e("b", "b")), e("c", "c"));
        assert_eq!(left.disjuncts().len(), 3);
        assert_eq!(
            left.right_associated(),
            or(e("a", "a"), or(e("b", "b"), e("c", "c")))
        );
    }
}
