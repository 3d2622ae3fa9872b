//! Propositional formulas over `{∧, ∨, →, ¬, ∘}`.
//!
//! Surface syntax (whitespace-insensitive):
//!
//! ```text
//! formula := iff
//! iff     := imp ("<->" imp)*          left-associative, desugared
//! imp     := or ("->" imp)?            right-associative
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | "@" unary | "~" unary | ident | "(" formula ")"
//! ident   := [a-z][a-zA-Z0-9_]*
//! ```
//!
//! `!` is `¬`, `@` is `∘`. `a <-> b` is sugar for `(a -> b) & (b -> a)` and
//! `~a` for `!a & @a`; neither survives into the tree.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Atom(String),
    Neg(Box<Formula>),
    Circ(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(f: Formula) -> Self {
        Formula::Neg(Box::new(f))
    }

    pub fn circ(f: Formula) -> Self {
        Formula::Circ(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Self {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    /// `(a → b) ∧ (b → a)`.
    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(Formula::imp(a.clone(), b.clone()), Formula::imp(b, a))
    }

    /// Classical negation definable from `¬` and `∘`: `¬a ∧ ∘a`.
    pub fn strong_neg(a: Formula) -> Self {
        Formula::and(Formula::neg(a.clone()), Formula::circ(a))
    }

    /// Right-associated conjunction `f1 ∧ (f2 ∧ (… ∧ fn))`. `None` when empty.
    pub fn conjunction<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> Option<Formula> {
        let items: Vec<&Formula> = fs.into_iter().collect();
        let mut iter = items.into_iter().rev();
        let last = iter.next()?.clone();
        Some(iter.fold(last, |acc, f| Formula::and(f.clone(), acc)))
    }

    /// Splits `(a → b) ∧ (b → a)` back into `(a, b)`.
    pub fn as_iff(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::And(l, r) => match (l.as_ref(), r.as_ref()) {
                (Formula::Imp(a, b), Formula::Imp(b2, a2)) if a == a2 && b == b2 => Some((a, b)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) => vec![],
            Formula::Neg(a) | Formula::Circ(a) => vec![a],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => vec![a, b],
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }

    /// Atom names in order of first occurrence.
    pub fn atoms(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.collect_atoms(&mut seen, &mut out);
        out
    }

    fn collect_atoms(&self, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
        match self {
            Formula::Atom(n) => {
                if seen.insert(n.clone()) {
                    out.push(n.clone());
                }
            }
            _ => {
                for c in self.children() {
                    c.collect_atoms(seen, out);
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Binding strength used by the printer; larger binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Formula::Imp(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Neg(_) | Formula::Circ(_) => 4,
            Formula::Atom(_) => 5,
        }
    }
}

/// Minimal-parenthesis rendering in the surface syntax.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

fn write_child(f: &Formula, min_prec: u8, out: &mut String) {
    if f.precedence() < min_prec {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom(n) => out.push_str(n),
        Formula::Neg(a) => {
            out.push('!');
            write_child(a, 4, out);
        }
        Formula::Circ(a) => {
            out.push('@');
            write_child(a, 4, out);
        }
        Formula::And(a, b) => {
            write_child(a, 3, out);
            out.push_str(" & ");
            write_child(b, 4, out);
        }
        Formula::Or(a, b) => {
            write_child(a, 2, out);
            out.push_str(" | ");
            write_child(b, 3, out);
        }
        Formula::Imp(a, b) => {
            write_child(a, 2, out);
            out.push_str(" -> ");
            write_child(b, 1, out);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render(self))
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: found {found}, expected one of {}", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Bang,
    At,
    Tilde,
    Amp,
    Bar,
    Arrow,
    Iff,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Bang => "`!`".into(),
            Tok::At => "`@`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        let push = |toks: &mut Vec<Spanned>, tok| {
            toks.push(Spanned {
                tok,
                line: start_line,
                column: start_col,
            })
        };
        let mut width = 1;
        match c {
            '\n' => {
                line += 1;
                column = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '!' => push(&mut toks, Tok::Bang),
            '@' => push(&mut toks, Tok::At),
            '~' => push(&mut toks, Tok::Tilde),
            '&' => push(&mut toks, Tok::Amp),
            '|' => push(&mut toks, Tok::Bar),
            '(' => push(&mut toks, Tok::LParen),
            ')' => push(&mut toks, Tok::RParen),
            '-' if chars.get(i + 1) == Some(&'>') => {
                push(&mut toks, Tok::Arrow);
                width = 2;
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                push(&mut toks, Tok::Iff);
                width = 3;
            }
            c if c.is_ascii_lowercase() => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(&mut toks, Tok::Ident(chars[i..j].iter().collect()));
                width = j - i;
            }
            other => {
                return Err(ParseError {
                    line,
                    column,
                    found: format!("character `{other}`"),
                    expected: vec![
                        "identifier".into(),
                        "`!`".into(),
                        "`@`".into(),
                        "`~`".into(),
                        "`(`".into(),
                    ],
                });
            }
        }
        i += width;
        column += width;
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            found: s.tok.describe(),
            expected: expected.iter().map(|e| e.to_string()).collect(),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.imp()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.imp()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Tok::At => {
                self.bump();
                Ok(Formula::circ(self.unary()?))
            }
            Tok::Tilde => {
                self.bump();
                Ok(Formula::strong_neg(self.unary()?))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Atom(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["`)`", "`&`", "`|`", "`->`", "`<->`"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(&["identifier", "`!`", "`@`", "`~`", "`(`"])),
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["`&`", "`|`", "`->`", "`<->`", "end of input"]));
    }
    Ok(f)
}

/// Node shape of an indexed subformula; children are positions in the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Atom,
    Neg(usize),
    Circ(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
}

/// Distinct subformulas of a formula set, children before parents.
#[derive(Debug, Clone, Default)]
pub struct SubformulaIndex {
    entries: Vec<Formula>,
    nodes: Vec<Node>,
    positions: HashMap<Formula, usize>,
}

impl SubformulaIndex {
    pub fn new<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> Self {
        let mut idx = SubformulaIndex::default();
        for f in fs {
            idx.insert(f);
        }
        idx
    }

    /// Adds `f` and its missing subformulas; returns its position.
    pub fn insert(&mut self, f: &Formula) -> usize {
        if let Some(&i) = self.positions.get(f) {
            return i;
        }
        let node = match f {
            Formula::Atom(_) => Node::Atom,
            Formula::Neg(a) => Node::Neg(self.insert(a)),
            Formula::Circ(a) => Node::Circ(self.insert(a)),
            Formula::And(a, b) => {
                let (l, r) = (self.insert(a), self.insert(b));
                Node::And(l, r)
            }
            Formula::Or(a, b) => {
                let (l, r) = (self.insert(a), self.insert(b));
                Node::Or(l, r)
            }
            Formula::Imp(a, b) => {
                let (l, r) = (self.insert(a), self.insert(b));
                Node::Imp(l, r)
            }
        };
        let i = self.entries.len();
        self.entries.push(f.clone());
        self.nodes.push(node);
        self.positions.insert(f.clone(), i);
        i
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Formula] {
        &self.entries
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn position(&self, f: &Formula) -> Option<usize> {
        self.positions.get(f).copied()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.positions.contains_key(f)
    }

    pub fn get(&self, i: usize) -> &Formula {
        &self.entries[i]
    }
}

pub fn subformulas<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> SubformulaIndex {
    SubformulaIndex::new(fs)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("metavariable `{0}` is not bound")]
    Unbound(String),
}

/// Simultaneous substitution of every atom of `schema` (read as a metavariable).
pub fn substitute(
    schema: &Formula,
    binding: &BTreeMap<String, Formula>,
) -> Result<Formula, SubstError> {
    Ok(match schema {
        Formula::Atom(n) => binding
            .get(n)
            .cloned()
            .ok_or_else(|| SubstError::Unbound(n.clone()))?,
        Formula::Neg(a) => Formula::neg(substitute(a, binding)?),
        Formula::Circ(a) => Formula::circ(substitute(a, binding)?),
        Formula::And(a, b) => Formula::and(substitute(a, binding)?, substitute(b, binding)?),
        Formula::Or(a, b) => Formula::or(substitute(a, binding)?, substitute(b, binding)?),
        Formula::Imp(a, b) => Formula::imp(substitute(a, binding)?, substitute(b, binding)?),
    })
}

/// Matches `f` against `schema`, extending `binding`. Atoms of the schema are
/// metavariables and must bind consistently.
pub fn match_schema(
    schema: &Formula,
    f: &Formula,
    binding: &mut BTreeMap<String, Formula>,
) -> bool {
    match (schema, f) {
        (Formula::Atom(m), _) => match binding.get(m) {
            Some(bound) => bound == f,
            None => {
                binding.insert(m.clone(), f.clone());
                true
            }
        },
        (Formula::Neg(a), Formula::Neg(b)) | (Formula::Circ(a), Formula::Circ(b)) => {
            match_schema(a, b, binding)
        }
        (Formula::And(a1, a2), Formula::And(b1, b2))
        | (Formula::Or(a1, a2), Formula::Or(b1, b2))
        | (Formula::Imp(a1, a2), Formula::Imp(b1, b2)) => {
            match_schema(a1, b1, binding) && match_schema(a2, b2, binding)
        }
        _ => false,
    }
}

/// Random formula of at most `depth` connective levels over `atoms`.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, atoms: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return Formula::atom(atoms[rng.gen_range(0..atoms.len())]);
    }
    match rng.gen_range(0..5) {
        0 => Formula::neg(random_formula(rng, atoms, depth - 1)),
        1 => Formula::circ(random_formula(rng, atoms, depth - 1)),
        2 => Formula::and(
            random_formula(rng, atoms, depth - 1),
            random_formula(rng, atoms, depth - 1),
        ),
        3 => Formula::or(
            random_formula(rng, atoms, depth - 1),
            random_formula(rng, atoms, depth - 1),
        ),
        _ => Formula::imp(
            random_formula(rng, atoms, depth - 1),
            random_formula(rng, atoms, depth - 1),
        ),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn p() -> Formula {
        Formula::atom("p")
    }

    #[test]
    fn parses_grammar_examples() {
        assert_eq!(f("p"), p());
        assert_eq!(
            f("@p -> @!p"),
            Formula::imp(Formula::circ(p()), Formula::circ(Formula::neg(p())))
        );
        assert_eq!(f("~p"), Formula::and(Formula::neg(p()), Formula::circ(p())));
        assert_eq!(f("p <-> q"), f("(p -> q) & (q -> p)"));
        assert_eq!(f("p <-> q <-> r"), f("((p <-> q) -> r) & (r -> (p <-> q))"));
        assert_eq!(f("p -> q -> r"), f("p -> (q -> r)"));
        assert_eq!(f("p & q & r"), f("(p & q) & r"));
        assert_eq!(
            f("a_1 | bX"),
            Formula::or(Formula::atom("a_1"), Formula::atom("bX"))
        );
    }

    #[test]
    fn renders_with_minimal_parentheses() {
        assert_eq!(
            render(&Formula::and(Formula::neg(p()), Formula::circ(p()))),
            "!p & @p"
        );
        assert_eq!(render(&f("p -> (q -> p)")), "p -> q -> p");
        assert_eq!(render(&f("(p & q) | r")), "p & q | r");
        assert_eq!(render(&f("(p -> q) -> r")), "(p -> q) -> r");
        assert_eq!(render(&f("p & (q & r)")), "p & (q & r)");
        assert_eq!(render(&f("!(p | q)")), "!(p | q)");
        assert_eq!(render(&f("@@!p")), "@@!p");
    }

    #[test]
    fn syntax_errors_carry_position_and_expectations() {
        let err = parse("p &\n  (q | )").unwrap_err();
        assert_eq!((err.line, err.column), (2, 8));
        assert!(err.expected.contains(&"identifier".to_string()));
        let err = parse("p q").unwrap_err();
        assert_eq!(err.column, 3);
        assert!(err.expected.contains(&"end of input".to_string()));
        assert!(parse("P").is_err());
        assert!(parse("(p").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn subformula_index_examples() {
        let idx = subformulas([&f("@@p")]);
        assert_eq!(idx.entries(), &[f("p"), f("@p"), f("@@p")]);

        let idx = subformulas([&f("p & q"), &f("q & p")]);
        assert_eq!(idx.entries(), &[f("p"), f("q"), f("p & q"), f("q & p")]);

        let idx = subformulas([&f("p"), &f("!p"), &f("q")]);
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.nodes()[1], Node::Neg(0));
    }

    #[test]
    fn substitution_instantiates_schemas() {
        let mut b = BTreeMap::new();
        b.insert("alpha".to_string(), p());
        assert_eq!(substitute(&f("alpha | !alpha"), &b).unwrap(), f("p | !p"));
        assert_eq!(
            substitute(&f("!@alpha -> alpha & !alpha"), &b).unwrap(),
            f("!@p -> (p & !p)")
        );
        assert_eq!(
            substitute(&f("alpha -> beta"), &b),
            Err(SubstError::Unbound("beta".into()))
        );
    }

    #[test]
    fn schema_matching_is_consistent() {
        let mut b = BTreeMap::new();
        assert!(match_schema(&f("alpha -> alpha"), &f("@p -> @p"), &mut b));
        assert_eq!(b["alpha"], f("@p"));
        let mut b = BTreeMap::new();
        assert!(!match_schema(&f("alpha -> alpha"), &f("p -> q"), &mut b));
    }

    #[test]
    fn conjunction_associates_right() {
        let fs = [f("a"), f("b"), f("c")];
        assert_eq!(Formula::conjunction(&fs).unwrap(), f("a & (b & c)"));
        assert!(Formula::conjunction(&[]).is_none());
        assert_eq!(f("p <-> q").as_iff(), Some((&p(), &f("q"))));
    }

    pub(crate) fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop::sample::select(vec!["p", "q", "r", "s1"]).prop_map(Formula::atom);
        leaf.prop_recursive(8, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::neg),
                inner.clone().prop_map(Formula::circ),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::imp(a, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_inverts_render(g in arb_formula()) {
            prop_assert_eq!(parse(&render(&g)).unwrap(), g);
        }

        #[test]
        fn index_is_children_first_and_stable(g in arb_formula(), h in arb_formula()) {
            let idx = subformulas([&g, &h]);
            for (i, node) in idx.nodes().iter().enumerate() {
                match *node {
                    Node::Atom => {}
                    Node::Neg(c) | Node::Circ(c) => prop_assert!(c < i),
                    Node::And(a, b) | Node::Or(a, b) | Node::Imp(a, b) => {
                        prop_assert!(a < i && b < i)
                    }
                }
            }
            let again = subformulas(idx.entries());
            prop_assert_eq!(again.entries(), idx.entries());
        }

        #[test]
        fn substitution_maps_every_subformula(g in arb_formula(), a in arb_formula(), b in arb_formula()) {
            let mut binding = BTreeMap::new();
            for (name, v) in [("p", &a), ("q", &b), ("r", &a), ("s1", &b)] {
                binding.insert(name.to_string(), v.clone());
            }
            let inst = substitute(&g, &binding).unwrap();
            let inst_idx = subformulas([&inst]);
            for sub in subformulas([&g]).entries() {
                prop_assert!(inst_idx.contains(&substitute(sub, &binding).unwrap()));
            }
        }
    }
}
