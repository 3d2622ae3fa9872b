//! Three-valued non-deterministic matrices for Cbr and Cie.
//!
//! Values are `𝟏`, `½`, `𝟎` with `𝟏` and `½` designated. Every table cell is a
//! non-empty set of values; a valuation picks one value per formula inside
//! the cell fixed by its children. Consequence is decided by enumerating the
//! legal valuations of the finite subformula index of the query.

use std::collections::HashSet;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::formula::{render, Formula, Node, SubformulaIndex};
use crate::par;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TruthValue {
    One,
    Half,
    Zero,
}

impl TruthValue {
    /// Enumeration order `𝟏 < ½ < 𝟎`.
    pub const ALL: [TruthValue; 3] = [TruthValue::One, TruthValue::Half, TruthValue::Zero];

    pub fn is_designated(self) -> bool {
        self != TruthValue::Zero
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TruthValue::One => "1",
            TruthValue::Half => "1/2",
            TruthValue::Zero => "0",
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-empty subset of the three truth values.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ValueSet(u8);

impl ValueSet {
    pub const DESIGNATED: ValueSet = ValueSet(0b011);
    pub const ONE: ValueSet = ValueSet(0b001);
    pub const HALF: ValueSet = ValueSet(0b010);
    pub const ZERO: ValueSet = ValueSet(0b100);

    pub fn of(values: &[TruthValue]) -> Self {
        ValueSet(values.iter().fold(0, |m, v| m | (1 << v.index())))
    }

    pub fn contains(self, v: TruthValue) -> bool {
        self.0 & (1 << v.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Members in enumeration order.
    pub fn iter(self) -> impl Iterator<Item = TruthValue> {
        TruthValue::ALL
            .into_iter()
            .filter(move |v| self.contains(*v))
    }

    fn without(self, v: TruthValue) -> Self {
        ValueSet(self.0 & !(1 << v.index()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Connective {
    And,
    Or,
    Imp,
    Neg,
    Circ,
}

impl Connective {
    pub fn arity(self) -> usize {
        match self {
            Connective::Neg | Connective::Circ => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NmatrixError {
    #[error("query has {found} distinct subformulas, over the limit of {limit}")]
    BudgetExceeded { found: usize, limit: usize },
    #[error("{connective:?} takes {expected} arguments, got {found}")]
    Arity {
        connective: Connective,
        expected: usize,
        found: usize,
    },
    #[error("designation profiles need at most 64 formulas, index has {0}")]
    ProfileTooWide(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nmatrix {
    name: &'static str,
    and: [[ValueSet; 3]; 3],
    or: [[ValueSet; 3]; 3],
    imp: [[ValueSet; 3]; 3],
    neg: [ValueSet; 3],
    circ: [ValueSet; 3],
}

impl Nmatrix {
    pub fn cbr() -> Self {
        use ValueSet as S;
        const D: ValueSet = ValueSet::DESIGNATED;
        Nmatrix {
            name: "Cbr",
            and: [
                [D, D, S::ZERO],
                [D, D, S::ZERO],
                [S::ZERO, S::ZERO, S::ZERO],
            ],
            or: [[D, D, D], [D, D, D], [D, D, S::ZERO]],
            imp: [[D, D, S::ZERO], [D, D, S::ZERO], [D, D, D]],
            neg: [S::ZERO, S::HALF, S::ONE],
            circ: [D, S::ZERO, D],
        }
    }

    /// Same as [`Nmatrix::cbr`] except that `∘` is deterministic on classical values.
    pub fn cie() -> Self {
        Nmatrix {
            name: "Cie",
            circ: [ValueSet::ONE, ValueSet::ZERO, ValueSet::ONE],
            ..Nmatrix::cbr()
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn legal_values(
        &self,
        connective: Connective,
        args: &[TruthValue],
    ) -> Result<ValueSet, NmatrixError> {
        if args.len() != connective.arity() {
            return Err(NmatrixError::Arity {
                connective,
                expected: connective.arity(),
                found: args.len(),
            });
        }
        let a = args[0].index();
        Ok(match connective {
            Connective::Neg => self.neg[a],
            Connective::Circ => self.circ[a],
            Connective::And => self.and[a][args[1].index()],
            Connective::Or => self.or[a][args[1].index()],
            Connective::Imp => self.imp[a][args[1].index()],
        })
    }

    fn cell(&self, node: Node, values: &[TruthValue]) -> ValueSet {
        let v = |i: usize| values[i].index();
        match node {
            Node::Atom => ValueSet(0b111),
            Node::Neg(c) => self.neg[v(c)],
            Node::Circ(c) => self.circ[v(c)],
            Node::And(l, r) => self.and[v(l)][v(r)],
            Node::Or(l, r) => self.or[v(l)][v(r)],
            Node::Imp(l, r) => self.imp[v(l)][v(r)],
        }
    }
}

/// A legal valuation restricted to a subformula index, in index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    assignment: Vec<(Formula, TruthValue)>,
}

impl Valuation {
    fn from_values(index: &SubformulaIndex, values: &[TruthValue]) -> Self {
        Valuation {
            assignment: index
                .entries()
                .iter()
                .cloned()
                .zip(values.iter().copied())
                .collect(),
        }
    }

    pub fn value(&self, f: &Formula) -> Option<TruthValue> {
        self.assignment
            .iter()
            .find(|(g, _)| g == f)
            .map(|(_, v)| *v)
    }

    pub fn assignment(&self) -> &[(Formula, TruthValue)] {
        &self.assignment
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.assignment.len()))?;
        for (f, v) in &self.assignment {
            map.serialize_entry(&render(f), v.as_str())?;
        }
        map.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Countermodel(Valuation),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn countermodel(&self) -> Option<&Valuation> {
        match self {
            Verdict::Valid => None,
            Verdict::Countermodel(v) => Some(v),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Verdict::Valid => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("verdict", "valid")?;
                map.end()
            }
            Verdict::Countermodel(v) => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("verdict", "countermodel")?;
                map.serialize_entry("assignment", v)?;
                map.end()
            }
        }
    }
}

/// Cap on the number of distinct subformulas a query may have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_subformulas: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_subformulas: 18,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            max_subformulas: usize::MAX,
        }
    }
}

/// Positions in enumeration order: atoms first, then compounds in index order.
fn enumeration_order(index: &SubformulaIndex) -> Vec<usize> {
    let nodes = index.nodes();
    let atoms = (0..nodes.len()).filter(|&i| nodes[i] == Node::Atom);
    let compounds = (0..nodes.len()).filter(|&i| nodes[i] != Node::Atom);
    atoms.chain(compounds).collect()
}

/// Lazy stream of every legal valuation over `index`, in lexicographic order
/// of the enumeration order (atoms first) with `𝟏 < ½ < 𝟎`.
pub struct Valuations<'a> {
    matrix: &'a Nmatrix,
    index: &'a SubformulaIndex,
    order: Vec<usize>,
    values: Vec<TruthValue>,
    /// Per depth: remaining candidates for `order[depth]`.
    stack: Vec<ValueSet>,
    started: bool,
}

impl<'a> Valuations<'a> {
    fn descend(&mut self) -> bool {
        // Extend the current prefix with first choices until complete.
        while self.stack.len() < self.order.len() {
            let pos = self.order[self.stack.len()];
            let cell = self.matrix.cell(self.index.nodes()[pos], &self.values);
            let first = cell.iter().next().expect("table cells are non-empty");
            self.values[pos] = first;
            self.stack.push(cell.without(first));
        }
        true
    }

    fn advance(&mut self) -> bool {
        while let Some(rest) = self.stack.pop() {
            if let Some(next) = rest.iter().next() {
                let pos = self.order[self.stack.len()];
                self.values[pos] = next;
                self.stack.push(rest.without(next));
                return self.descend();
            }
        }
        false
    }
}

impl Iterator for Valuations<'_> {
    type Item = Valuation;

    fn next(&mut self) -> Option<Valuation> {
        let ok = if !self.started {
            self.started = true;
            self.descend()
        } else {
            !self.order.is_empty() && self.advance()
        };
        ok.then(|| Valuation::from_values(self.index, &self.values))
    }
}

pub fn valuations<'a>(matrix: &'a Nmatrix, index: &'a SubformulaIndex) -> Valuations<'a> {
    Valuations {
        matrix,
        index,
        order: enumeration_order(index),
        values: vec![TruthValue::One; index.len()],
        stack: Vec::new(),
        started: false,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Require {
    Free,
    Designated,
    Undesignated,
}

/// Depth-first countermodel search with pruning.
///
/// A node that is not the argument of a `¬` or `∘` only influences its
/// parents through designation, so when both `𝟏` and `½` are legal only `𝟏`
/// is tried. The lexicographically first countermodel always takes `𝟏` at
/// such nodes, so the witness is the same as with full enumeration.
struct CounterSearch<'a> {
    matrix: &'a Nmatrix,
    nodes: &'a [Node],
    order: Vec<usize>,
    require: Vec<Require>,
    collapsible: Vec<bool>,
}

impl CounterSearch<'_> {
    fn candidates(&self, pos: usize, values: &[TruthValue]) -> ValueSet {
        let mut cell = self.matrix.cell(self.nodes[pos], values);
        if self.collapsible[pos] && cell.contains(TruthValue::One) {
            cell = cell.without(TruthValue::Half);
        }
        match self.require[pos] {
            Require::Free => cell,
            Require::Designated => ValueSet(cell.0 & ValueSet::DESIGNATED.0),
            Require::Undesignated => ValueSet(cell.0 & ValueSet::ZERO.0),
        }
    }

    fn run(&self, depth: usize, values: &mut Vec<TruthValue>) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let pos = self.order[depth];
        for v in self.candidates(pos, values).iter() {
            values[pos] = v;
            if self.run(depth + 1, values) {
                return true;
            }
        }
        false
    }
}

fn collapsible_nodes(nodes: &[Node]) -> Vec<bool> {
    let mut collapsible = vec![true; nodes.len()];
    for n in nodes {
        if let Node::Neg(c) | Node::Circ(c) = *n {
            collapsible[c] = false;
        }
    }
    collapsible
}

pub fn holds(
    matrix: &Nmatrix,
    premises: &[Formula],
    conclusion: &Formula,
) -> Result<Verdict, NmatrixError> {
    holds_with(matrix, premises, conclusion, Budget::default())
}

pub fn holds_with(
    matrix: &Nmatrix,
    premises: &[Formula],
    conclusion: &Formula,
    budget: Budget,
) -> Result<Verdict, NmatrixError> {
    let index = SubformulaIndex::new(premises.iter().chain(std::iter::once(conclusion)));
    if index.len() > budget.max_subformulas {
        return Err(NmatrixError::BudgetExceeded {
            found: index.len(),
            limit: budget.max_subformulas,
        });
    }
    let mut require = vec![Require::Free; index.len()];
    for p in premises {
        require[index.position(p).expect("indexed")] = Require::Designated;
    }
    let goal = index.position(conclusion).expect("indexed");
    if require[goal] == Require::Designated {
        // The conclusion is itself a premise.
        return Ok(Verdict::Valid);
    }
    require[goal] = Require::Undesignated;

    let search = CounterSearch {
        matrix,
        nodes: index.nodes(),
        order: enumeration_order(&index),
        require,
        collapsible: collapsible_nodes(index.nodes()),
    };

    // Split on the first few positions so the halves can run in parallel;
    // the first hit in prefix order is the global first countermodel.
    let split = search.order.len().min(3);
    let mut prefixes: Vec<Vec<TruthValue>> = vec![vec![TruthValue::One; index.len()]];
    for depth in 0..split {
        let pos = search.order[depth];
        prefixes = prefixes
            .into_iter()
            .flat_map(|vals| {
                search
                    .candidates(pos, &vals)
                    .iter()
                    .map(|v| {
                        let mut next = vals.clone();
                        next[pos] = v;
                        next
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    let found = par::find_map_first(&prefixes, |prefix| {
        let mut values = prefix.clone();
        search.run(split, &mut values).then_some(values)
    });
    Ok(match found {
        None => Verdict::Valid,
        Some(values) => Verdict::Countermodel(Valuation::from_values(&index, &values)),
    })
}

pub fn is_theorem(matrix: &Nmatrix, f: &Formula) -> Result<Verdict, NmatrixError> {
    holds(matrix, &[], f)
}

/// Theoremhood of `a ↔ b`.
pub fn equivalent(matrix: &Nmatrix, a: &Formula, b: &Formula) -> Result<Verdict, NmatrixError> {
    is_theorem(matrix, &Formula::iff(a.clone(), b.clone()))
}

/// Every designation pattern (bit `i` set iff entry `i` is designated) that
/// some legal valuation over `index` realises, sorted and deduplicated.
///
/// Together with the fact that `∧`, `∨`, `→` are designation-functional in
/// both matrices, this decides consequence between Boolean combinations of
/// indexed formulas without re-running the search.
pub fn designation_profiles(
    matrix: &Nmatrix,
    index: &SubformulaIndex,
) -> Result<Vec<u64>, NmatrixError> {
    if index.len() > 64 {
        return Err(NmatrixError::ProfileTooWide(index.len()));
    }
    let search = CounterSearch {
        matrix,
        nodes: index.nodes(),
        order: enumeration_order(index),
        require: vec![Require::Free; index.len()],
        collapsible: collapsible_nodes(index.nodes()),
    };
    fn walk(
        s: &CounterSearch<'_>,
        depth: usize,
        values: &mut Vec<TruthValue>,
        out: &mut HashSet<u64>,
    ) {
        if depth == s.order.len() {
            let mask = values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_designated())
                .fold(0u64, |m, (i, _)| m | (1 << i));
            out.insert(mask);
            return;
        }
        let pos = s.order[depth];
        for v in s.candidates(pos, values).iter() {
            values[pos] = v;
            walk(s, depth + 1, values, out);
        }
    }
    let mut out = HashSet::new();
    walk(
        &search,
        0,
        &mut vec![TruthValue::One; index.len()],
        &mut out,
    );
    let mut profiles: Vec<u64> = out.into_iter().collect();
    profiles.sort_unstable();
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::tests::f;
    use crate::formula::{random_formula, subformulas};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use TruthValue::*;

    /// Independent oracle: filter the full valuation stream.
    fn brute_force(m: &Nmatrix, premises: &[Formula], goal: &Formula) -> Option<Valuation> {
        let idx = subformulas(premises.iter().chain([goal]));
        valuations(m, &idx).find(|v| {
            premises.iter().all(|p| v.value(p).unwrap().is_designated())
                && !v.value(goal).unwrap().is_designated()
        })
    }

    #[test]
    fn tables_match_definition() {
        let m = Nmatrix::cbr();
        assert_eq!(
            m.legal_values(Connective::And, &[One, Half]).unwrap(),
            ValueSet::of(&[One, Half])
        );
        assert_eq!(
            m.legal_values(Connective::Circ, &[Half]).unwrap(),
            ValueSet::ZERO
        );
        assert_eq!(
            m.legal_values(Connective::Neg, &[Half]).unwrap(),
            ValueSet::HALF
        );
        assert_eq!(
            m.legal_values(Connective::Neg, &[One]).unwrap(),
            ValueSet::ZERO
        );
        assert_eq!(
            m.legal_values(Connective::Circ, &[One]).unwrap(),
            ValueSet::DESIGNATED
        );
        assert_eq!(
            Nmatrix::cie()
                .legal_values(Connective::Circ, &[Zero])
                .unwrap(),
            ValueSet::ONE
        );
        assert!(m.legal_values(Connective::Neg, &[One, One]).is_err());
        for row in m.and.iter().chain(&m.or).chain(&m.imp) {
            assert!(row.iter().all(|c| !c.is_empty()));
        }
    }

    #[test]
    fn valuation_counts() {
        let m = Nmatrix::cbr();
        assert_eq!(valuations(&m, &subformulas([&f("p")])).count(), 3);
        assert_eq!(valuations(&m, &subformulas([&f("@p")])).count(), 5);
        assert_eq!(valuations(&m, &subformulas([&f("!p")])).count(), 3);
        let vals: Vec<_> = valuations(&m, &subformulas([&f("@p")]))
            .map(|v| (v.value(&f("p")).unwrap(), v.value(&f("@p")).unwrap()))
            .collect();
        assert_eq!(
            vals,
            vec![
                (One, One),
                (One, Half),
                (Half, Zero),
                (Zero, One),
                (Zero, Half)
            ]
        );
    }

    #[test]
    fn consequence_examples() {
        let m = Nmatrix::cbr();
        assert!(holds(&m, &[f("p"), f("p -> q")], &f("q"))
            .unwrap()
            .is_valid());

        let v = holds(&m, &[f("p"), f("!p")], &f("q")).unwrap();
        let cm = v.countermodel().unwrap();
        assert_eq!(cm.value(&f("p")), Some(Half));
        assert_eq!(cm.value(&f("!p")), Some(Half));
        assert_eq!(cm.value(&f("q")), Some(Zero));

        let v = is_theorem(&m, &f("@@p")).unwrap();
        let cm = v.countermodel().unwrap();
        assert_eq!(cm.value(&f("p")), Some(One));
        assert_eq!(cm.value(&f("@p")), Some(Half));
        assert_eq!(cm.value(&f("@@p")), Some(Zero));
    }

    #[test]
    fn equivalences() {
        let m = Nmatrix::cbr();
        assert!(equivalent(&m, &f("@p"), &f("@!p")).unwrap().is_valid());
        assert!(equivalent(&m, &f("p"), &f("!!p")).unwrap().is_valid());
        assert!(is_theorem(&Nmatrix::cie(), &f("@@p")).unwrap().is_valid());
        // Cbr is not self-extensional: p and p & p are equivalent, their negations are not.
        assert!(equivalent(&m, &f("p"), &f("p & p")).unwrap().is_valid());
        assert!(!equivalent(&m, &f("!p"), &f("!(p & p)")).unwrap().is_valid());
    }

    #[test]
    fn budget_is_enforced() {
        let deep = (0..20).fold(f("p"), |acc, _| Formula::circ(acc));
        assert!(matches!(
            is_theorem(&Nmatrix::cbr(), &deep),
            Err(NmatrixError::BudgetExceeded {
                found: 21,
                limit: 18
            })
        ));
        assert!(holds_with(&Nmatrix::cbr(), &[], &deep, Budget::unlimited()).is_ok());
    }

    #[test]
    fn verdict_json() {
        assert_eq!(
            serde_json::to_string(&Verdict::Valid).unwrap(),
            r#"{"verdict":"valid"}"#
        );
        let v = is_theorem(&Nmatrix::cbr(), &f("@@p")).unwrap();
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"verdict":"countermodel","assignment":{"p":"1","@p":"1/2","@@p":"0"}}"#
        );
    }

    #[test]
    fn pruned_search_agrees_with_full_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [Nmatrix::cbr(), Nmatrix::cie()] {
            for _ in 0..300 {
                let premises: Vec<Formula> = (0..2)
                    .map(|_| random_formula(&mut rng, &["p", "q"], 2))
                    .collect();
                let goal = random_formula(&mut rng, &["p", "q"], 2);
                let fast = holds_with(&m, &premises, &goal, Budget::unlimited()).unwrap();
                assert_eq!(
                    fast.countermodel().cloned(),
                    brute_force(&m, &premises, &goal)
                );
            }
        }
    }

    #[test]
    fn profiles_agree_with_full_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let fs: Vec<Formula> = (0..3)
                .map(|_| random_formula(&mut rng, &["p", "q"], 3))
                .collect();
            let idx = subformulas(&fs);
            if idx.len() > 14 {
                continue;
            }
            let m = Nmatrix::cbr();
            let mut expected: Vec<u64> = valuations(&m, &idx)
                .map(|v| {
                    v.assignment()
                        .iter()
                        .enumerate()
                        .filter(|(_, (_, t))| t.is_designated())
                        .fold(0, |acc, (i, _)| acc | 1 << i)
                })
                .collect();
            expected.sort_unstable();
            expected.dedup();
            assert_eq!(designation_profiles(&m, &idx).unwrap(), expected);
        }
    }

    #[test]
    fn monotone_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Nmatrix::cbr();
        for _ in 0..100 {
            let gamma = vec![random_formula(&mut rng, &["p", "q"], 2)];
            let goal = random_formula(&mut rng, &["p", "q"], 2);
            let v = holds_with(&m, &gamma, &goal, Budget::unlimited()).unwrap();
            assert_eq!(
                v,
                holds_with(&m, &gamma, &goal, Budget::unlimited()).unwrap()
            );
            if v.is_valid() {
                let mut more = gamma.clone();
                more.push(random_formula(&mut rng, &["p", "q", "r"], 2));
                assert!(holds_with(&m, &more, &goal, Budget::unlimited())
                    .unwrap()
                    .is_valid());
            }
        }
    }
}
