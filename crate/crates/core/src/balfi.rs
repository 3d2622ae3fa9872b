//! Boolean algebras with LFI operators.
//!
//! A structure is a Boolean algebra expanded with a paraconsistent negation
//! `¬̃` and a consistency operator `∘̃`. Finite structures live on the powerset
//! of at most four atoms, so elements are `u16` bitmasks. The interval model
//! on `℘(ℤ)` is in [`IntervalSet`] / [`IntervalModel`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::par;

/// Boolean algebra expanded with `¬̃` and `∘̃`. Formulas are evaluated
/// homomorphically: `∧ ↦ ⊓`, `∨ ↦ ⊔`, `→ ↦ ⇒`, `¬ ↦ ¬̃`, `∘ ↦ ∘̃`.
pub trait BalfiAlgebra {
    type Elem: Clone + PartialEq;

    fn top(&self) -> Self::Elem;
    fn bottom(&self) -> Self::Elem;
    fn meet(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn complement(&self, a: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn circ(&self, a: &Self::Elem) -> Self::Elem;

    fn imp(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.join(&self.complement(a), b)
    }

    /// `x ⊓ ¬̃x ≠ 0`.
    fn is_inconsistent(&self, a: &Self::Elem) -> bool {
        self.meet(a, &self.neg(a)) != self.bottom()
    }
}

pub type Assignment<E> = BTreeMap<String, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalfiError {
    #[error("atom `{0}` has no value")]
    Unassigned(String),
    #[error("finite structures are limited to 4 atoms (16 elements), got {0}")]
    TooLarge(u32),
    #[error("table `{table}` needs {expected} entries within the carrier")]
    BadTable {
        table: &'static str,
        expected: usize,
    },
    #[error("an empty candidate pool proves nothing over an infinite carrier")]
    PoolMissing,
}

pub fn evaluate<A: BalfiAlgebra>(
    alg: &A,
    assignment: &Assignment<A::Elem>,
    f: &Formula,
) -> Result<A::Elem, BalfiError> {
    Ok(match f {
        Formula::Atom(name) => assignment
            .get(name)
            .cloned()
            .ok_or_else(|| BalfiError::Unassigned(name.clone()))?,
        Formula::Neg(a) => alg.neg(&evaluate(alg, assignment, a)?),
        Formula::Circ(a) => alg.circ(&evaluate(alg, assignment, a)?),
        Formula::And(a, b) => alg.meet(
            &evaluate(alg, assignment, a)?,
            &evaluate(alg, assignment, b)?,
        ),
        Formula::Or(a, b) => alg.join(
            &evaluate(alg, assignment, a)?,
            &evaluate(alg, assignment, b)?,
        ),
        Formula::Imp(a, b) => alg.imp(
            &evaluate(alg, assignment, a)?,
            &evaluate(alg, assignment, b)?,
        ),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BalfiClass {
    RmbC,
    RmbCciw,
    RCbr,
    RCie,
}

impl BalfiClass {
    pub const ALL: [BalfiClass; 4] = [
        BalfiClass::RmbC,
        BalfiClass::RmbCciw,
        BalfiClass::RCbr,
        BalfiClass::RCie,
    ];

    pub fn equations(self) -> &'static [Equation] {
        use Equation::*;
        match self {
            BalfiClass::RmbC => &[ExcludedMiddle, Explosion],
            BalfiClass::RmbCciw => &[ExcludedMiddle, Explosion, CircIsConsistency],
            BalfiClass::RCbr => &[ExcludedMiddle, Explosion, CircIsConsistency, DoubleNegation],
            BalfiClass::RCie => &[ExcludedMiddle, Explosion, NegCirc, DoubleNegation],
        }
    }

    fn involutive(self) -> bool {
        matches!(self, BalfiClass::RCbr | BalfiClass::RCie)
    }
}

impl fmt::Display for BalfiClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown class `{0}` (expected RmbC, RmbCciw, RCbr or RCie)")]
pub struct UnknownClass(pub String);

impl FromStr for BalfiClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BalfiClass::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

/// Class-defining identities, each universally quantified over `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Equation {
    ExcludedMiddle,
    Explosion,
    CircIsConsistency,
    DoubleNegation,
    NegCirc,
}

impl Equation {
    pub fn holds_at<A: BalfiAlgebra>(self, alg: &A, x: &A::Elem) -> bool {
        let nx = alg.neg(x);
        let contradiction = alg.meet(x, &nx);
        match self {
            Equation::ExcludedMiddle => alg.join(x, &nx) == alg.top(),
            Equation::Explosion => alg.meet(&contradiction, &alg.circ(x)) == alg.bottom(),
            Equation::CircIsConsistency => alg.circ(x) == alg.complement(&contradiction),
            Equation::DoubleNegation => alg.neg(&nx) == *x,
            Equation::NegCirc => alg.neg(&alg.circ(x)) == contradiction,
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::ExcludedMiddle => "x ⊔ ¬x = 1",
            Equation::Explosion => "x ⊓ ¬x ⊓ ∘x = 0",
            Equation::CircIsConsistency => "∘x = −(x ⊓ ¬x)",
            Equation::DoubleNegation => "¬¬x = x",
            Equation::NegCirc => "¬∘x = x ⊓ ¬x",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation<E> {
    pub equation: Equation,
    pub witness: E,
}

/// Finite structure on the powerset of `atoms` atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBalfi")]
pub struct FiniteBalfi {
    atoms: u32,
    neg: Vec<u16>,
    circ: Vec<u16>,
    class: BalfiClass,
}

#[derive(Deserialize)]
struct RawBalfi {
    atoms: u32,
    neg: Vec<u16>,
    circ: Vec<u16>,
    class: BalfiClass,
}

impl TryFrom<RawBalfi> for FiniteBalfi {
    type Error = BalfiError;

    fn try_from(raw: RawBalfi) -> Result<Self, Self::Error> {
        FiniteBalfi::new(raw.atoms, raw.neg, raw.circ, raw.class)
    }
}

pub const MAX_ATOMS: u32 = 4;

impl FiniteBalfi {
    /// Tables are indexed by element; elements are bitmasks over the atoms.
    pub fn new(
        atoms: u32,
        neg: Vec<u16>,
        circ: Vec<u16>,
        class: BalfiClass,
    ) -> Result<Self, BalfiError> {
        if atoms > MAX_ATOMS {
            return Err(BalfiError::TooLarge(atoms));
        }
        let size = 1usize << atoms;
        for (table, values) in [("neg", &neg), ("circ", &circ)] {
            if values.len() != size || values.iter().any(|&v| usize::from(v) >= size) {
                return Err(BalfiError::BadTable {
                    table,
                    expected: size,
                });
            }
        }
        Ok(FiniteBalfi {
            atoms,
            neg,
            circ,
            class,
        })
    }

    /// Boolean complement as `¬̃` with `∘̃x = 1`.
    pub fn classical(atoms: u32, class: BalfiClass) -> Result<Self, BalfiError> {
        if atoms > MAX_ATOMS {
            return Err(BalfiError::TooLarge(atoms));
        }
        let top = (1u16 << atoms) - 1;
        let elems = 0..=top;
        FiniteBalfi::new(
            atoms,
            elems.clone().map(|x| top & !x).collect(),
            elems.map(|_| top).collect(),
            class,
        )
    }

    pub fn atoms(&self) -> u32 {
        self.atoms
    }

    pub fn size(&self) -> usize {
        self.neg.len()
    }

    pub fn class(&self) -> BalfiClass {
        self.class
    }

    pub fn elements(&self) -> impl Iterator<Item = u16> {
        0..self.neg.len() as u16
    }

    pub fn neg_table(&self) -> &[u16] {
        &self.neg
    }

    pub fn circ_table(&self) -> &[u16] {
        &self.circ
    }

    /// Whether `¬̃` is the Boolean complement.
    pub fn is_classical(&self) -> bool {
        self.elements().all(|x| self.neg(&x) == self.complement(&x))
    }

    fn top_mask(&self) -> u16 {
        (self.neg.len() - 1) as u16
    }
}

impl BalfiAlgebra for FiniteBalfi {
    type Elem = u16;

    fn top(&self) -> u16 {
        self.top_mask()
    }
    fn bottom(&self) -> u16 {
        0
    }
    fn meet(&self, a: &u16, b: &u16) -> u16 {
        a & b
    }
    fn join(&self, a: &u16, b: &u16) -> u16 {
        a | b
    }
    fn complement(&self, a: &u16) -> u16 {
        self.top_mask() & !a
    }
    fn neg(&self, a: &u16) -> u16 {
        self.neg[usize::from(*a)]
    }
    fn circ(&self, a: &u16) -> u16 {
        self.circ[usize::from(*a)]
    }
}

/// Every failure of the structure's class equations, by equation then element.
pub fn check_balfi(b: &FiniteBalfi) -> Result<(), Vec<Violation<u16>>> {
    let violations: Vec<_> = b
        .class
        .equations()
        .iter()
        .flat_map(|&equation| {
            b.elements()
                .filter(move |x| !equation.holds_at(b, x))
                .map(move |witness| Violation { equation, witness })
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Derived properties that every RCbr structure must have, plus the
/// `¬̃(x ⊓ ¬̃x) = ∘̃x = −(x ⊓ ¬̃x)` identity for RCie. Returns the names of
/// failing properties with a witness element.
pub fn derived_property_failures(b: &FiniteBalfi) -> Vec<(&'static str, u16)> {
    let mut out = Vec::new();
    if !b.class.involutive() {
        return out;
    }
    let consistent = |x: u16| !b.is_inconsistent(&x);
    for x in b.elements() {
        let nx = b.neg(&x);
        let cx = b.complement(&x);
        if b.elements().any(|y| y != x && b.neg(&y) == nx) {
            out.push(("negation is injective", x));
        }
        let props: [(&'static str, bool, bool); 6] = [
            ("consistent iff x = ¬−x", consistent(x), b.neg(&cx) == x),
            (
                "consistent iff x = −¬x",
                consistent(x),
                b.complement(&nx) == x,
            ),
            (
                "consistent iff −x consistent",
                consistent(x),
                consistent(cx),
            ),
            (
                "consistent iff ¬x consistent",
                consistent(x),
                consistent(nx),
            ),
            (
                "inconsistent iff −x inconsistent",
                !consistent(x),
                !consistent(cx),
            ),
            (
                "inconsistent iff ¬x inconsistent",
                !consistent(x),
                !consistent(nx),
            ),
        ];
        for (name, lhs, rhs) in props {
            if lhs != rhs {
                out.push((name, x));
            }
        }
        if b.class == BalfiClass::RCie {
            let contradiction = b.meet(&x, &nx);
            let circ = b.circ(&x);
            if b.neg(&contradiction) != circ || circ != b.complement(&contradiction) {
                out.push(("¬(x ⊓ ¬x) = ∘x = −(x ⊓ ¬x)", x));
            }
        }
    }
    out
}

/// Lazy, deterministic stream of every structure of a class over `atoms`
/// atoms. `¬̃` tables come in lexicographic order, and for each of them the
/// `∘̃` tables in lexicographic order.
pub struct Enumeration {
    atoms: u32,
    class: BalfiClass,
    size: usize,
    /// Positions `0..size` fix `¬̃`, positions `size..2*size` fix `∘̃`.
    values: Vec<u16>,
    stack: Vec<Vec<u16>>,
    started: bool,
}

pub fn enumerate_balfis(atoms: u32, class: BalfiClass) -> Result<Enumeration, BalfiError> {
    if atoms > MAX_ATOMS {
        return Err(BalfiError::TooLarge(atoms));
    }
    let size = 1usize << atoms;
    Ok(Enumeration {
        atoms,
        class,
        size,
        values: vec![0; 2 * size],
        stack: Vec::new(),
        started: false,
    })
}

impl Enumeration {
    fn top(&self) -> u16 {
        (self.size - 1) as u16
    }

    /// Candidates for position `pos`, given positions before it; descending
    /// so that `pop` yields them in ascending order.
    fn candidates(&self, pos: usize) -> Vec<u16> {
        let top = self.top();
        let mut out: Vec<u16> = if pos < self.size {
            let x = pos as u16;
            let complement = top & !x;
            let supersets = (0..=top).filter(move |y| y & complement == complement);
            if self.class.involutive() {
                match (0..x).find(|&w| self.values[usize::from(w)] == x) {
                    Some(w) => vec![w],
                    None => supersets
                        .filter(|&y| y >= x)
                        .filter(|&y| !(0..x).any(|w| self.values[usize::from(w)] == y))
                        .collect(),
                }
            } else {
                supersets.collect()
            }
        } else {
            let x = (pos - self.size) as u16;
            let nx = self.values[usize::from(x)];
            let contradiction = x & nx;
            let allowed = top & !contradiction;
            match self.class {
                BalfiClass::RmbCciw | BalfiClass::RCbr => vec![allowed],
                BalfiClass::RmbC => (0..=top).filter(|c| c & contradiction == 0).collect(),
                BalfiClass::RCie => (0..=top)
                    .filter(|c| c & contradiction == 0)
                    .filter(|&c| self.values[usize::from(c)] == contradiction)
                    .collect(),
            }
        };
        out.reverse();
        out
    }

    fn fill(&mut self) -> bool {
        loop {
            if self.stack.len() == 2 * self.size {
                return true;
            }
            let pos = self.stack.len();
            let mut cands = self.candidates(pos);
            match cands.pop() {
                Some(v) => {
                    self.values[pos] = v;
                    self.stack.push(cands);
                }
                None => {
                    if !self.backtrack() {
                        return false;
                    }
                }
            }
        }
    }

    fn backtrack(&mut self) -> bool {
        while let Some(mut rest) = self.stack.pop() {
            if let Some(v) = rest.pop() {
                let pos = self.stack.len();
                self.values[pos] = v;
                self.stack.push(rest);
                return true;
            }
        }
        false
    }
}

impl Iterator for Enumeration {
    type Item = FiniteBalfi;

    fn next(&mut self) -> Option<FiniteBalfi> {
        let ok = if self.started {
            self.backtrack() && self.fill()
        } else {
            self.started = true;
            self.fill()
        };
        ok.then(|| FiniteBalfi {
            atoms: self.atoms,
            neg: self.values[..self.size].to_vec(),
            circ: self.values[self.size..].to_vec(),
            class: self.class,
        })
    }
}

/// Outcome of a per-structure consequence check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Consequence<E> {
    Holds,
    /// `h(γ1 ∧ … ∧ γn → goal) ≠ 1` under this assignment.
    Fails {
        assignment: Assignment<E>,
        value: E,
    },
    /// No candidate assignment failed; over an infinite carrier this is not
    /// a proof of validity.
    NoFailureFound,
}

impl<E> Consequence<E> {
    pub fn fails(&self) -> bool {
        matches!(self, Consequence::Fails { .. })
    }
}

/// The formula whose validity decides `premises ⊨ goal` in one structure.
///
/// Some premise subset gives a valid `(γ1 ∧ …) → goal` iff the full one does,
/// since a larger conjunction is below a smaller one.
fn consequence_formula(premises: &[Formula], goal: &Formula) -> Formula {
    match Formula::conjunction(premises) {
        None => goal.clone(),
        Some(c) => Formula::imp(c, goal.clone()),
    }
}

fn atoms_of(premises: &[Formula], goal: &Formula) -> Vec<String> {
    let mut atoms: Vec<String> = Vec::new();
    for f in premises.iter().chain([goal]) {
        for a in f.atoms() {
            if !atoms.contains(&a) {
                atoms.push(a);
            }
        }
    }
    atoms
}

/// First assignment (first atom slowest, values ascending) making the
/// consequence fail in a finite structure.
fn first_failure(
    b: &FiniteBalfi,
    atoms: &[String],
    target: &Formula,
) -> Option<(Assignment<u16>, u16)> {
    let size = b.size();
    let total = size.pow(atoms.len() as u32);
    let first_values: Vec<u16> = b.elements().collect();
    let per_first = total / size.max(1);
    par::find_map_first(&first_values, |&v0| {
        (0..per_first).find_map(|rest| {
            let mut assignment = Assignment::new();
            let mut code = rest;
            for (i, atom) in atoms.iter().enumerate().rev() {
                let v = if i == 0 {
                    v0
                } else {
                    let v = (code % size) as u16;
                    code /= size;
                    v
                };
                assignment.insert(atom.clone(), v);
            }
            let value = evaluate(b, &assignment, target).expect("all atoms assigned");
            (value != b.top()).then_some((assignment, value))
        })
    })
}

/// Exact consequence in one finite structure: every assignment is tried.
pub fn consequence_in(b: &FiniteBalfi, premises: &[Formula], goal: &Formula) -> Consequence<u16> {
    let target = consequence_formula(premises, goal);
    let atoms = atoms_of(premises, goal);
    if atoms.is_empty() {
        let value = evaluate(b, &Assignment::new(), &target).expect("no atoms");
        return if value == b.top() {
            Consequence::Holds
        } else {
            Consequence::Fails {
                assignment: Assignment::new(),
                value,
            }
        };
    }
    match first_failure(b, &atoms, &target) {
        None => Consequence::Holds,
        Some((assignment, value)) => Consequence::Fails { assignment, value },
    }
}

/// Consequence over any structure, trying only the supplied assignments in
/// order. Failures are sound certificates; success is never reported.
pub fn consequence_over_pool<A: BalfiAlgebra>(
    alg: &A,
    pool: &[Assignment<A::Elem>],
    premises: &[Formula],
    goal: &Formula,
) -> Result<Consequence<A::Elem>, BalfiError> {
    if pool.is_empty() {
        return Err(BalfiError::PoolMissing);
    }
    let target = consequence_formula(premises, goal);
    for assignment in pool {
        let value = evaluate(alg, assignment, &target)?;
        if value != alg.top() {
            return Ok(Consequence::Fails {
                assignment: assignment.clone(),
                value,
            });
        }
    }
    Ok(Consequence::NoFailureFound)
}

/// Every assignment of `values` to `atoms`, first atom slowest.
pub fn product_pool<E: Clone>(atoms: &[&str], values: &[E]) -> Vec<Assignment<E>> {
    let mut pool = vec![Assignment::new()];
    for atom in atoms {
        pool = pool
            .into_iter()
            .flat_map(|a| {
                values.iter().map(move |v| {
                    let mut a = a.clone();
                    a.insert(atom.to_string(), v.clone());
                    a
                })
            })
            .collect();
    }
    pool
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    pub structure: FiniteBalfi,
    pub assignment: Assignment<u16>,
    pub value: u16,
}

/// First structure of the class, by carrier size from 2 up to
/// `2^max_atoms`, with an assignment where `goal` is not 1. `None` means no
/// finite countermodel up to that size, not validity.
pub fn refute(
    class: BalfiClass,
    max_atoms: u32,
    goal: &Formula,
) -> Result<Option<Refutation>, BalfiError> {
    if max_atoms > MAX_ATOMS {
        return Err(BalfiError::TooLarge(max_atoms));
    }
    const BATCH: usize = 256;
    for atoms in 1..=max_atoms {
        let mut structures = enumerate_balfis(atoms, class)?;
        loop {
            let batch: Vec<FiniteBalfi> = structures.by_ref().take(BATCH).collect();
            if batch.is_empty() {
                break;
            }
            let hit = par::find_map_first(&batch, |b| match consequence_in(b, &[], goal) {
                Consequence::Fails { assignment, value } => Some(Refutation {
                    structure: b.clone(),
                    assignment,
                    value,
                }),
                _ => None,
            });
            if hit.is_some() {
                return Ok(hit);
            }
        }
    }
    Ok(None)
}

/// Finite union of integer intervals, stored as membership far to the left
/// plus the sorted points where membership flips (`t` flips between `t-1`
/// and `t`). The representation of each set is unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    from_neg_inf: bool,
    flips: Vec<i64>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet {
            from_neg_inf: false,
            flips: Vec::new(),
        }
    }

    pub fn integers() -> Self {
        IntervalSet {
            from_neg_inf: true,
            flips: Vec::new(),
        }
    }

    /// `(−∞, n]`
    pub fn down_to(n: i64) -> Self {
        IntervalSet {
            from_neg_inf: true,
            flips: vec![n + 1],
        }
    }

    /// `[n, ∞)`
    pub fn up_from(n: i64) -> Self {
        IntervalSet {
            from_neg_inf: false,
            flips: vec![n],
        }
    }

    /// `[lo, hi]`, empty when `lo > hi`.
    pub fn range(lo: i64, hi: i64) -> Self {
        if lo > hi {
            return IntervalSet::empty();
        }
        IntervalSet {
            from_neg_inf: false,
            flips: vec![lo, hi + 1],
        }
    }

    pub fn singleton(n: i64) -> Self {
        IntervalSet::range(n, n)
    }

    pub fn contains(&self, m: i64) -> bool {
        let passed = self.flips.partition_point(|&t| t <= m);
        self.from_neg_inf ^ (passed % 2 == 1)
    }

    pub fn complement(&self) -> Self {
        IntervalSet {
            from_neg_inf: !self.from_neg_inf,
            flips: self.flips.clone(),
        }
    }

    fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        let from_neg_inf = op(self.from_neg_inf, other.from_neg_inf);
        let mut points: Vec<i64> = self.flips.iter().chain(&other.flips).copied().collect();
        points.sort_unstable();
        points.dedup();
        let mut flips = Vec::new();
        let mut current = from_neg_inf;
        for t in points {
            let here = op(self.contains(t), other.contains(t));
            if here != current {
                flips.push(t);
                current = here;
            }
        }
        IntervalSet {
            from_neg_inf,
            flips,
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    /// `Some(n)` for `(−∞, n]`.
    pub fn as_down_to(&self) -> Option<i64> {
        match self.flips[..] {
            [t] if self.from_neg_inf => Some(t - 1),
            _ => None,
        }
    }

    /// `Some(n)` for `[n, ∞)`.
    pub fn as_up_from(&self) -> Option<i64> {
        match self.flips[..] {
            [t] if !self.from_neg_inf => Some(t),
            _ => None,
        }
    }

    /// The maximal intervals, `None` standing for an infinite end.
    pub fn intervals(&self) -> Vec<(Option<i64>, Option<i64>)> {
        let mut out = Vec::new();
        let mut start = if self.from_neg_inf { Some(None) } else { None };
        for &t in &self.flips {
            match start {
                Some(lo) => {
                    out.push((lo, Some(t - 1)));
                    start = None;
                }
                None => start = Some(Some(t)),
            }
        }
        if let Some(lo) = start {
            out.push((lo, None));
        }
        out
    }

    /// Random set with up to `max_flips` flip points in `[-span, span]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_flips: usize, span: i64) -> Self {
        let mut flips: Vec<i64> = (0..rng.gen_range(0..=max_flips))
            .map(|_| rng.gen_range(-span..=span))
            .collect();
        flips.sort_unstable();
        flips.dedup();
        IntervalSet {
            from_neg_inf: rng.gen_bool(0.5),
            flips,
        }
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.intervals();
        if parts.is_empty() {
            return f.write_str("∅");
        }
        let shown: Vec<String> = parts
            .into_iter()
            .map(|iv| match iv {
                (None, None) => "ℤ".to_string(),
                (None, Some(hi)) => format!("(-inf,{hi}]"),
                (Some(lo), None) => format!("[{lo},inf)"),
                (Some(lo), Some(hi)) if lo == hi => format!("{{{lo}}}"),
                (Some(lo), Some(hi)) => format!("[{lo},{hi}]"),
            })
            .collect();
        f.write_str(&shown.join(" ∪ "))
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// `℘(ℤ)` with half-lines `(−∞,n]` and `[n,∞)` as the inconsistent values:
/// `¬̃` swaps `(−∞,n]` and `[n,∞)` and is the complement elsewhere, and
/// `∘̃X = ℤ ∖ (X ∩ ¬̃X)`. Only finite unions of intervals are represented.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntervalModel;

impl BalfiAlgebra for IntervalModel {
    type Elem = IntervalSet;

    fn top(&self) -> IntervalSet {
        IntervalSet::integers()
    }
    fn bottom(&self) -> IntervalSet {
        IntervalSet::empty()
    }
    fn meet(&self, a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
        a.intersection(b)
    }
    fn join(&self, a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
        a.union(b)
    }
    fn complement(&self, a: &IntervalSet) -> IntervalSet {
        a.complement()
    }
    fn neg(&self, a: &IntervalSet) -> IntervalSet {
        if let Some(n) = a.as_down_to() {
            IntervalSet::up_from(n)
        } else if let Some(n) = a.as_up_from() {
            IntervalSet::down_to(n)
        } else {
            a.complement()
        }
    }
    fn circ(&self, a: &IntervalSet) -> IntervalSet {
        a.intersection(&self.neg(a)).complement()
    }
}

/// One row of the operator table of the interval model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalRow {
    pub x: IntervalSet,
    pub neg: IntervalSet,
    pub contradiction: IntervalSet,
    pub circ: IntervalSet,
    pub neg_neg: IntervalSet,
    pub circ_neg: IntervalSet,
    pub neg_circ: IntervalSet,
}

impl IntervalRow {
    pub fn of(x: IntervalSet) -> Self {
        let m = IntervalModel;
        let neg = m.neg(&x);
        IntervalRow {
            contradiction: x.intersection(&neg),
            circ: m.circ(&x),
            neg_neg: m.neg(&neg),
            circ_neg: m.circ(&neg),
            neg_circ: m.neg(&m.circ(&x)),
            neg,
            x,
        }
    }
}

/// Consistent sample rows shown after the half-lines.
pub fn consistent_samples() -> Vec<IntervalSet> {
    vec![
        IntervalSet::empty(),
        IntervalSet::integers(),
        IntervalSet::range(1, 2),
        IntervalSet::range(-3, 3),
        IntervalSet::down_to(0).union(&IntervalSet::range(5, 9)),
        IntervalSet::singleton(0).complement(),
    ]
}

/// Rows for `(−∞,n]` and `[n,∞)` for each `n` in the range, then the
/// consistent samples.
pub fn interval_table_report(ns: std::ops::RangeInclusive<i64>) -> Vec<IntervalRow> {
    let mut rows = Vec::new();
    for n in ns {
        rows.push(IntervalRow::of(IntervalSet::down_to(n)));
        rows.push(IntervalRow::of(IntervalSet::up_from(n)));
    }
    rows.extend(consistent_samples().into_iter().map(IntervalRow::of));
    rows
}

/// A failed consequence `premises ⊭ goal` in the interval model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub premises: Vec<Formula>,
    pub goal: Formula,
    pub assignment: Assignment<IntervalSet>,
    /// Value of `(γ1 ∧ …) → goal`, different from ℤ.
    pub value: IntervalSet,
}

/// Certificates that `{p,¬p}`, `{p,∘p}` and `{∘p,¬p}` do not entail `q`,
/// all under `p ↦ (−∞,0]`, `q ↦ ∅`.
pub fn paraconsistency_certificates() -> Vec<Certificate> {
    let p = Formula::atom("p");
    let q = Formula::atom("q");
    let pool = vec![Assignment::from([
        ("p".to_string(), IntervalSet::down_to(0)),
        ("q".to_string(), IntervalSet::empty()),
    ])];
    let cases = [
        vec![p.clone(), Formula::neg(p.clone())],
        vec![p.clone(), Formula::circ(p.clone())],
        vec![Formula::circ(p.clone()), Formula::neg(p.clone())],
    ];
    cases
        .into_iter()
        .map(|premises| {
            match consequence_over_pool(&IntervalModel, &pool, &premises, &q)
                .expect("pool covers p, q")
            {
                Consequence::Fails { assignment, value } => Certificate {
                    premises,
                    goal: q.clone(),
                    assignment,
                    value,
                },
                other => unreachable!("half-line witness must refute, got {other:?}"),
            }
        })
        .collect()
}

/// Where `x` and `x ⊓ ¬̃x` are both inconsistent, `∘̃x ⇒ ∘̃∘̃x ≠ 1`, so
/// `∘p → ∘∘p` fails at `p ↦ x`. Returns `None` when the precondition does
/// not hold at `x`, otherwise whether the schema indeed evaluates below 1.
pub fn circ_circ_fails_at<A: BalfiAlgebra>(alg: &A, x: &A::Elem) -> Option<bool> {
    let contradiction = alg.meet(x, &alg.neg(x));
    if !alg.is_inconsistent(x) || !alg.is_inconsistent(&contradiction) {
        return None;
    }
    let circ = alg.circ(x);
    Some(alg.imp(&circ, &alg.circ(&circ)) != alg.top())
}
