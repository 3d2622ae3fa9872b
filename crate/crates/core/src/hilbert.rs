//! Hilbert calculi for Cbr, Cie, RCbr and RCie: proof objects, a checker
//! and a bounded forward-chaining prover.
//!
//! Line numbers and premise numbers are 1-based, as in the text format
//! `n. <formula> ; <justification>`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{match_schema, parse, substitute, Formula, SubformulaIndex};
use crate::nmatrix::Nmatrix;
use crate::par;

pub const METAVARIABLES: [&str; 3] = ["alpha", "beta", "gamma"];

const SCHEMAS: [&str; 15] = [
    "alpha -> (beta -> alpha)",
    "(alpha -> (beta -> gamma)) -> ((alpha -> beta) -> (alpha -> gamma))",
    "alpha -> (beta -> alpha & beta)",
    "alpha & beta -> alpha",
    "alpha & beta -> beta",
    "alpha -> alpha | beta",
    "beta -> alpha | beta",
    "(alpha -> gamma) -> ((beta -> gamma) -> (alpha | beta -> gamma))",
    "(alpha -> beta) | alpha",
    "alpha | !alpha",
    "@alpha -> (alpha -> (!alpha -> beta))",
    "@alpha | alpha & !alpha",
    "alpha -> !!alpha",
    "!!alpha -> alpha",
    "!@alpha -> alpha & !alpha",
];

/// Axiom schema `k` (1 to 15) over the metavariables `alpha`, `beta`, `gamma`.
pub fn axiom(k: u8) -> Option<&'static Formula> {
    static PARSED: OnceLock<Vec<Formula>> = OnceLock::new();
    let all = PARSED.get_or_init(|| {
        SCHEMAS
            .iter()
            .map(|s| parse(s).expect("axiom schemas parse"))
            .collect()
    });
    all.get(usize::from(k).checked_sub(1)?)
}

/// Instance of schema `k` with the metavariables replaced by distinct atoms `p`, `q`, `r`.
pub fn distinct_atom_instance(k: u8) -> Option<Formula> {
    let binding = METAVARIABLES
        .iter()
        .zip(["p", "q", "r"])
        .map(|(m, a)| (m.to_string(), Formula::atom(a)))
        .collect();
    Some(substitute(axiom(k)?, &binding).expect("all metavariables bound"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogicId {
    Cbr,
    Cie,
    RCbr,
    RCie,
}

impl LogicId {
    pub const ALL: [LogicId; 4] = [LogicId::Cbr, LogicId::Cie, LogicId::RCbr, LogicId::RCie];

    pub fn axioms(self) -> &'static [u8] {
        match self {
            LogicId::Cbr | LogicId::RCbr => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14],
            LogicId::Cie | LogicId::RCie => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 14, 15],
        }
    }

    pub fn has_axiom(self, k: u8) -> bool {
        self.axioms().contains(&k)
    }

    /// Whether the replacement rules for `¬` (and `∘`) are available.
    pub fn is_self_extensional(self) -> bool {
        matches!(self, LogicId::RCbr | LogicId::RCie)
    }

    /// The logic without replacement rules.
    pub fn base(self) -> LogicId {
        match self {
            LogicId::Cbr | LogicId::RCbr => LogicId::Cbr,
            LogicId::Cie | LogicId::RCie => LogicId::Cie,
        }
    }

    /// Characteristic matrix of the base logic.
    pub fn matrix(self) -> Nmatrix {
        match self.base() {
            LogicId::Cie => Nmatrix::cie(),
            _ => Nmatrix::cbr(),
        }
    }
}

impl fmt::Display for LogicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicId::Cbr => "Cbr",
            LogicId::Cie => "Cie",
            LogicId::RCbr => "RCbr",
            LogicId::RCie => "RCie",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown logic `{0}` (expected Cbr, Cie, RCbr or RCie)")]
pub struct UnknownLogic(pub String);

impl FromStr for LogicId {
    type Err = UnknownLogic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogicId::ALL
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLogic(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Instance of schema `schema`. An empty or partial binding is completed
    /// by matching the line against the schema.
    Axiom {
        schema: u8,
        binding: BTreeMap<String, Formula>,
    },
    /// Modus ponens from lines `φ` and `φ → ψ`.
    Mp(usize, usize),
    ENeg(usize),
    ECirc(usize),
    Premise(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofLine {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Proof {
    pub lines: Vec<ProofLine>,
}

impl Proof {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.lines.last().map(|l| &l.formula)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineFault {
    #[error("Ax{0} does not exist")]
    UnknownAxiom(u8),
    #[error("Ax{schema} is not an axiom of {logic}")]
    AxiomNotInLogic { schema: u8, logic: LogicId },
    #[error("formula is not an instance of Ax{0} under the given binding")]
    NotAnInstance(u8),
    #[error("line {0} is not an earlier line")]
    BadReference(usize),
    #[error("premise {0} does not exist")]
    UnknownPremise(usize),
    #[error("formula differs from premise {0}")]
    PremiseMismatch(usize),
    #[error("line {1} is not an implication from line {0} to this formula")]
    MpMismatch(usize, usize),
    #[error("line {0} is not a biconditional")]
    NotBiconditional(usize),
    #[error("formula is not the replacement of line {0}")]
    ReplacementMismatch(usize),
    #[error("{rule} is not a rule of {logic}")]
    RuleNotInLogic { rule: &'static str, logic: LogicId },
    #[error("{rule} applies only to theorems, but line {line} depends on premises")]
    GlobalRuleOnPremises { rule: &'static str, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {fault}")]
pub struct ProofError {
    pub line: usize,
    pub fault: LineFault,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    /// Accept `E∘` in RCbr, where it is admissible rather than primitive.
    pub circ_rule_in_rcbr: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            circ_rule_in_rcbr: true,
        }
    }
}

pub fn check_proof(logic: LogicId, premises: &[Formula], proof: &Proof) -> Result<(), ProofError> {
    check_proof_with(logic, premises, proof, CheckOptions::default())
}

pub fn check_proof_with(
    logic: LogicId,
    premises: &[Formula],
    proof: &Proof,
    options: CheckOptions,
) -> Result<(), ProofError> {
    // depends[i]: line i+1 rests on some premise.
    let mut depends: Vec<bool> = Vec::with_capacity(proof.lines.len());
    for (i, line) in proof.lines.iter().enumerate() {
        let n = i + 1;
        let fail = |fault| ProofError { line: n, fault };
        let earlier = |j: usize| {
            if j >= 1 && j < n {
                Ok(&proof.lines[j - 1].formula)
            } else {
                Err(fail(LineFault::BadReference(j)))
            }
        };
        let dep = match &line.justification {
            Justification::Axiom { schema, binding } => {
                let schema_f =
                    axiom(*schema).ok_or_else(|| fail(LineFault::UnknownAxiom(*schema)))?;
                if !logic.has_axiom(*schema) {
                    return Err(fail(LineFault::AxiomNotInLogic {
                        schema: *schema,
                        logic,
                    }));
                }
                let vars = schema_f.atoms();
                let mut b = binding.clone();
                if binding.keys().any(|k| !vars.contains(k))
                    || !match_schema(schema_f, &line.formula, &mut b)
                {
                    return Err(fail(LineFault::NotAnInstance(*schema)));
                }
                false
            }
            Justification::Premise(k) => {
                let p = k
                    .checked_sub(1)
                    .and_then(|i| premises.get(i))
                    .ok_or_else(|| fail(LineFault::UnknownPremise(*k)))?;
                if *p != line.formula {
                    return Err(fail(LineFault::PremiseMismatch(*k)));
                }
                true
            }
            Justification::Mp(a, b) => {
                let (fa, fb) = (earlier(*a)?, earlier(*b)?);
                let ok = matches!(fb, Formula::Imp(x, y) if **x == *fa && **y == line.formula);
                if !ok {
                    return Err(fail(LineFault::MpMismatch(*a, *b)));
                }
                depends[a - 1] || depends[b - 1]
            }
            Justification::ENeg(j) | Justification::ECirc(j) => {
                let is_neg = matches!(line.justification, Justification::ENeg(_));
                let rule = if is_neg { "Eneg" } else { "Ecirc" };
                let allowed = logic.is_self_extensional()
                    && (is_neg || logic == LogicId::RCie || options.circ_rule_in_rcbr);
                if !allowed {
                    return Err(fail(LineFault::RuleNotInLogic { rule, logic }));
                }
                let cited = earlier(*j)?;
                if depends[j - 1] {
                    return Err(fail(LineFault::GlobalRuleOnPremises { rule, line: *j }));
                }
                let (x, y) = cited
                    .as_iff()
                    .ok_or_else(|| fail(LineFault::NotBiconditional(*j)))?;
                let wrap = if is_neg { Formula::neg } else { Formula::circ };
                if line.formula != Formula::iff(wrap(x.clone()), wrap(y.clone())) {
                    return Err(fail(LineFault::ReplacementMismatch(*j)));
                }
                false
            }
        };
        depends.push(dep);
    }
    Ok(())
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Axiom { schema, binding } => {
                write!(f, "Ax{schema}")?;
                if !binding.is_empty() {
                    let parts: Vec<String> =
                        binding.iter().map(|(m, v)| format!("{m} := {v}")).collect();
                    write!(f, "[{}]", parts.join(", "))?;
                }
                Ok(())
            }
            Justification::Mp(a, b) => write!(f, "MP {a} {b}"),
            Justification::ENeg(j) => write!(f, "Eneg {j}"),
            Justification::ECirc(j) => write!(f, "Ecirc {j}"),
            Justification::Premise(k) => write!(f, "Prem {k}"),
        }
    }
}

impl fmt::Display for Proof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, line) in self.lines.iter().enumerate() {
            writeln!(f, "{}. {} ; {}", i + 1, line.formula, line.justification)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("proof text line {line}: {message}")]
pub struct ProofParseError {
    pub line: usize,
    pub message: String,
}

fn parse_justification(text: &str) -> Result<Justification, String> {
    let text = text.trim();
    let numbers = |rest: &str, count: usize| -> Result<Vec<usize>, String> {
        let ns: Vec<usize> = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| format!("bad line number `{t}`"))
            })
            .collect::<Result<_, _>>()?;
        if ns.len() != count {
            return Err(format!("expected {count} line number(s), got {}", ns.len()));
        }
        Ok(ns)
    };
    if let Some(rest) = text.strip_prefix("MP") {
        let ns = numbers(rest, 2)?;
        return Ok(Justification::Mp(ns[0], ns[1]));
    }
    if let Some(rest) = text.strip_prefix("Eneg") {
        return Ok(Justification::ENeg(numbers(rest, 1)?[0]));
    }
    if let Some(rest) = text.strip_prefix("Ecirc") {
        return Ok(Justification::ECirc(numbers(rest, 1)?[0]));
    }
    if let Some(rest) = text.strip_prefix("Prem") {
        return Ok(Justification::Premise(numbers(rest, 1)?[0]));
    }
    if let Some(rest) = text.strip_prefix("Ax") {
        let (num, bindings) = match rest.find('[') {
            Some(open) => {
                let close = rest
                    .rfind(']')
                    .filter(|&c| c == rest.len() - 1)
                    .ok_or("unterminated binding list")?;
                (&rest[..open], &rest[open + 1..close])
            }
            None => (rest, ""),
        };
        let schema: u8 = num
            .trim()
            .parse()
            .map_err(|_| format!("bad axiom number `{}`", num.trim()))?;
        let mut binding = BTreeMap::new();
        for part in bindings.split(',').filter(|p| !p.trim().is_empty()) {
            let (var, value) = part
                .split_once(":=")
                .ok_or_else(|| format!("binding `{}` lacks `:=`", part.trim()))?;
            let value = parse(value.trim()).map_err(|e| e.to_string())?;
            binding.insert(var.trim().to_string(), value);
        }
        return Ok(Justification::Axiom { schema, binding });
    }
    Err(format!("unknown justification `{text}`"))
}

impl FromStr for Proof {
    type Err = ProofParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| ProofParseError {
                line: i + 1,
                message,
            };
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let (head, just) = raw
                .rsplit_once(';')
                .ok_or_else(|| err("missing `;` before the justification".into()))?;
            let (num, formula) = head
                .split_once('.')
                .ok_or_else(|| err("missing line number".into()))?;
            let num: usize = num
                .trim()
                .parse()
                .map_err(|_| err(format!("bad line number `{}`", num.trim())))?;
            if num != lines.len() + 1 {
                return Err(err(format!(
                    "expected line number {}, got {num}",
                    lines.len() + 1
                )));
            }
            let formula = parse(formula.trim()).map_err(|e| err(e.to_string()))?;
            let justification = parse_justification(just).map_err(err)?;
            lines.push(ProofLine {
                formula,
                justification,
            });
        }
        Ok(Proof { lines })
    }
}

/// Limits for proof search: length of the emitted proof and number of
/// distinct formulas generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_lines: usize,
    pub max_formulas: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_lines: 200,
            max_formulas: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search budget limits must be positive")]
    ZeroBudget,
    #[error("{0} has no replacement rules")]
    NotSelfExtensional(LogicId),
    #[error("at most {limit} premises are supported, got {found}")]
    TooManyPremises { found: usize, limit: usize },
}

/// `Unknown` only means the search gave up; it is never a refutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Proved(Proof),
    Unknown,
}

impl Outcome {
    pub fn proof(&self) -> Option<&Proof> {
        match self {
            Outcome::Proved(p) => Some(p),
            Outcome::Unknown => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Step {
    Axiom(u8, BTreeMap<String, Formula>),
    Mp(usize, usize),
    ENeg(usize),
    ECirc(usize),
    /// Temporary hypothesis, removed by [`discharge`].
    Hyp(usize),
}

type Lines = Vec<(Formula, Step)>;

/// Forward chaining over axiom instances whose metavariables range over the
/// subformulas of the goal. Instances are released in rounds (round `r` uses
/// term `r` and earlier ones) and closed under the rules after each round.
/// Generation order never depends on the budget, so a larger budget only
/// extends the explored prefix.
struct Prover<'a> {
    logic: LogicId,
    hyps: &'a [Formula],
    target: &'a Formula,
    /// Source of the instantiation terms.
    pool: &'a Formula,
    max_formulas: usize,
    /// Replacement steps and biconditional assembly stay below this depth.
    depth_cap: usize,
    known: Lines,
    on_hyps: Vec<bool>,
    ids: HashMap<Formula, usize>,
    waiting: HashMap<Formula, Vec<usize>>,
    queue: VecDeque<usize>,
    found: Option<usize>,
    exhausted: bool,
}

impl<'a> Prover<'a> {
    fn new(
        logic: LogicId,
        hyps: &'a [Formula],
        target: &'a Formula,
        pool: &'a Formula,
        budget: SearchBudget,
    ) -> Self {
        Prover {
            logic,
            hyps,
            target,
            pool,
            max_formulas: budget.max_formulas,
            depth_cap: pool.depth() + 2,
            known: Vec::new(),
            on_hyps: Vec::new(),
            ids: HashMap::new(),
            waiting: HashMap::new(),
            queue: VecDeque::new(),
            found: None,
            exhausted: false,
        }
    }

    fn done(&self) -> bool {
        self.found.is_some() || self.exhausted
    }

    fn add(&mut self, f: Formula, step: Step) {
        if self.done() || self.ids.contains_key(&f) {
            return;
        }
        if self.known.len() >= self.max_formulas {
            self.exhausted = true;
            return;
        }
        let id = self.known.len();
        if f == *self.target {
            self.found = Some(id);
        }
        let dep = match step {
            Step::Hyp(_) => true,
            Step::Mp(a, b) => self.on_hyps[a] || self.on_hyps[b],
            _ => false,
        };
        self.ids.insert(f.clone(), id);
        self.known.push((f, step));
        self.on_hyps.push(dep);
        self.queue.push_back(id);
    }

    fn close(&mut self) {
        while let Some(id) = self.queue.pop_front() {
            if self.done() {
                return;
            }
            let f = self.known[id].0.clone();
            if let Formula::Imp(a, b) = &f {
                match self.ids.get(&**a) {
                    Some(&ia) => self.add((**b).clone(), Step::Mp(ia, id)),
                    None => self.waiting.entry((**a).clone()).or_default().push(id),
                }
            }
            for imp in self.waiting.remove(&f).unwrap_or_default() {
                if let Formula::Imp(_, b) = &self.known[imp].0 {
                    let b = (**b).clone();
                    self.add(b, Step::Mp(id, imp));
                }
            }
            if self.logic.is_self_extensional() && !self.on_hyps[id] {
                self.replacements(id, &f);
            }
        }
    }

    fn replacements(&mut self, id: usize, f: &Formula) {
        if let Some((x, y)) = f.as_iff() {
            let neg = Formula::iff(Formula::neg(x.clone()), Formula::neg(y.clone()));
            if neg.depth() <= self.depth_cap {
                self.add(neg, Step::ENeg(id));
            }
            let circ = Formula::iff(Formula::circ(x.clone()), Formula::circ(y.clone()));
            if circ.depth() <= self.depth_cap {
                self.add(circ, Step::ECirc(id));
            }
        }
        // Assemble α↔β once both directions are proved.
        if let Formula::Imp(a, b) = f {
            let back = Formula::imp((**b).clone(), (**a).clone());
            if a != b && self.ids.contains_key(&back) {
                let iff = Formula::and(f.clone(), back.clone());
                if iff.depth() <= self.depth_cap && !self.ids.contains_key(&iff) {
                    let instance = Formula::imp(f.clone(), Formula::imp(back.clone(), iff));
                    self.add(instance, Step::Axiom(3, pair_binding(f.clone(), back)));
                }
            }
        }
    }

    fn run(&mut self) -> Option<usize> {
        for (k, h) in self.hyps.iter().enumerate() {
            self.add(h.clone(), Step::Hyp(k));
        }
        self.close();
        if self.done() {
            return self.found;
        }
        let terms = SubformulaIndex::new([self.pool]);
        let terms = terms.entries();
        let schemas: Vec<(u8, &Formula, Vec<String>)> = self
            .logic
            .axioms()
            .iter()
            .map(|&k| {
                let s = axiom(k).expect("known schema");
                let mut vars = s.atoms();
                vars.sort();
                (k, s, vars)
            })
            .collect();
        for round in 0..terms.len() {
            let batches = par::map(&schemas, |(k, schema, vars)| {
                round_instances(*k, schema, vars, terms, round)
            });
            for batch in batches {
                for (k, binding, instance) in batch {
                    self.add(instance, Step::Axiom(k, binding));
                }
                self.close();
                if self.done() {
                    return self.found;
                }
            }
        }
        self.found
    }
}

fn pair_binding(alpha: Formula, beta: Formula) -> BTreeMap<String, Formula> {
    [("alpha".to_string(), alpha), ("beta".to_string(), beta)]
        .into_iter()
        .collect()
}

/// The lines `target` rests on, renumbered in their original order.
fn extract(lines: &[(Formula, Step)], target: usize) -> Lines {
    let mut needed = vec![false; lines.len()];
    let mut stack = vec![target];
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut needed[id], true) {
            continue;
        }
        match lines[id].1 {
            Step::Axiom(..) | Step::Hyp(_) => {}
            Step::Mp(a, b) => stack.extend([a, b]),
            Step::ENeg(a) | Step::ECirc(a) => stack.push(a),
        }
    }
    let mut new_id = vec![usize::MAX; lines.len()];
    let mut out = Vec::new();
    for (id, (f, step)) in lines.iter().enumerate().filter(|(id, _)| needed[*id]) {
        let step = match step {
            Step::Mp(a, b) => Step::Mp(new_id[*a], new_id[*b]),
            Step::ENeg(a) => Step::ENeg(new_id[*a]),
            Step::ECirc(a) => Step::ECirc(new_id[*a]),
            other => other.clone(),
        };
        new_id[id] = out.len();
        out.push((f.clone(), step));
    }
    out
}

/// Append-only line list that reuses a line when its formula is already proved.
#[derive(Default)]
struct Builder {
    lines: Lines,
    ids: HashMap<Formula, usize>,
}

impl Builder {
    fn push(&mut self, f: Formula, step: Step) -> usize {
        if let Some(&i) = self.ids.get(&f) {
            return i;
        }
        self.ids.insert(f.clone(), self.lines.len());
        self.lines.push((f, step));
        self.lines.len() - 1
    }

    /// `a → a` in five lines.
    fn identity(&mut self, a: &Formula) -> usize {
        let aa = Formula::imp(a.clone(), a.clone());
        if let Some(&i) = self.ids.get(&aa) {
            return i;
        }
        let a_aa_a = Formula::imp(a.clone(), Formula::imp(aa.clone(), a.clone()));
        let l1 = self.push(
            a_aa_a.clone(),
            Step::Axiom(1, pair_binding(a.clone(), aa.clone())),
        );
        let a_aa = Formula::imp(a.clone(), aa.clone());
        let mut b2 = pair_binding(a.clone(), aa.clone());
        b2.insert("gamma".into(), a.clone());
        let l2 = self.push(
            Formula::imp(a_aa_a, Formula::imp(a_aa.clone(), aa.clone())),
            Step::Axiom(2, b2),
        );
        let l3 = self.push(
            a_aa.clone(),
            Step::Axiom(1, pair_binding(a.clone(), a.clone())),
        );
        let l4 = self.push(Formula::imp(a_aa, aa.clone()), Step::Mp(l1, l2));
        self.push(aa, Step::Mp(l3, l4))
    }
}

/// Deduction theorem: turns a derivation of `lines.last()` that may use
/// hypothesis `k` into one of `a → lines.last()` that does not.
fn discharge(lines: &[(Formula, Step)], k: usize, a: &Formula) -> Lines {
    let mut b = Builder::default();
    let mut dep = vec![false; lines.len()];
    let mut plain = vec![usize::MAX; lines.len()];
    let mut lifted: Vec<Option<usize>> = vec![None; lines.len()];
    for (i, (f, step)) in lines.iter().enumerate() {
        dep[i] = match step {
            Step::Hyp(j) => *j == k,
            Step::Mp(x, y) => dep[*x] || dep[*y],
            _ => false,
        };
        if !dep[i] {
            let step = match step {
                Step::Mp(x, y) => Step::Mp(plain[*x], plain[*y]),
                Step::ENeg(x) => Step::ENeg(plain[*x]),
                Step::ECirc(x) => Step::ECirc(plain[*x]),
                other => other.clone(),
            };
            plain[i] = b.push(f.clone(), step);
            continue;
        }
        let lift = |b: &mut Builder, x: usize, lifted: &[Option<usize>]| match lifted[x] {
            Some(l) => l,
            None => {
                let fx = &lines[x].0;
                let ax = b.push(
                    Formula::imp(fx.clone(), Formula::imp(a.clone(), fx.clone())),
                    Step::Axiom(1, pair_binding(fx.clone(), a.clone())),
                );
                b.push(Formula::imp(a.clone(), fx.clone()), Step::Mp(plain[x], ax))
            }
        };
        lifted[i] = Some(match step {
            Step::Hyp(_) => b.identity(a),
            Step::Mp(x, y) => {
                let psi = lines[*x].0.clone();
                let ax = lift(&mut b, *x, &lifted);
                let ay = lift(&mut b, *y, &lifted);
                let a_psi = Formula::imp(a.clone(), psi.clone());
                let a_phi = Formula::imp(a.clone(), f.clone());
                let mut binding = pair_binding(a.clone(), psi);
                binding.insert("gamma".into(), f.clone());
                let ax2 = b.push(
                    Formula::imp(
                        Formula::imp(a.clone(), lines[*y].0.clone()),
                        Formula::imp(a_psi.clone(), a_phi.clone()),
                    ),
                    Step::Axiom(2, binding),
                );
                let m = b.push(Formula::imp(a_psi, a_phi.clone()), Step::Mp(ay, ax2));
                b.push(a_phi, Step::Mp(ax, m))
            }
            _ => unreachable!("replacement steps never rest on hypotheses"),
        });
    }
    let last = lines.len() - 1;
    let conclusion = if dep[last] {
        lifted[last].expect("lifted")
    } else {
        let f = &lines[last].0;
        let ax = b.push(
            Formula::imp(f.clone(), Formula::imp(a.clone(), f.clone())),
            Step::Axiom(1, pair_binding(f.clone(), a.clone())),
        );
        b.push(
            Formula::imp(a.clone(), f.clone()),
            Step::Mp(plain[last], ax),
        )
    };
    extract(&b.lines, conclusion)
}

fn to_proof(lines: Lines) -> Proof {
    Proof {
        lines: lines
            .into_iter()
            .map(|(formula, step)| ProofLine {
                formula,
                justification: match step {
                    Step::Axiom(schema, binding) => Justification::Axiom { schema, binding },
                    Step::Mp(a, b) => Justification::Mp(a + 1, b + 1),
                    Step::ENeg(a) => Justification::ENeg(a + 1),
                    Step::ECirc(a) => Justification::ECirc(a + 1),
                    Step::Hyp(_) => unreachable!("hypotheses are discharged"),
                },
            })
            .collect(),
    }
}

/// Instances of one schema whose largest term index is exactly `round`.
fn round_instances(
    schema_id: u8,
    schema: &Formula,
    vars: &[String],
    terms: &[Formula],
    round: usize,
) -> Vec<(u8, BTreeMap<String, Formula>, Formula)> {
    let mut out = Vec::new();
    let mut choice = vec![0usize; vars.len()];
    loop {
        if choice.contains(&round) {
            let binding: BTreeMap<String, Formula> = vars
                .iter()
                .cloned()
                .zip(choice.iter().map(|&c| terms[c].clone()))
                .collect();
            let instance = substitute(schema, &binding).expect("schema variables bound");
            out.push((schema_id, binding, instance));
        }
        // Odometer over [0, round]^vars, last position fastest.
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if choice[pos] < round {
                choice[pos] += 1;
                choice[pos + 1..].iter_mut().for_each(|c| *c = 0);
                break;
            }
        }
    }
}

fn check_budget(budget: SearchBudget) -> Result<(), SearchError> {
    if budget.max_lines == 0 || budget.max_formulas == 0 {
        return Err(SearchError::ZeroBudget);
    }
    Ok(())
}

/// Searches for a premise-free proof of `goal`.
///
/// The antecedents of an implicational goal are first tried as hypotheses
/// and discharged afterwards; if that fails or yields an over-long proof the
/// goal is searched for directly.
pub fn bounded_prove(
    logic: LogicId,
    goal: &Formula,
    budget: SearchBudget,
) -> Result<Outcome, SearchError> {
    check_budget(budget)?;
    let mut hyps = Vec::new();
    let mut target = goal;
    while let Formula::Imp(a, b) = target {
        hyps.push((**a).clone());
        target = b;
    }
    if !hyps.is_empty() {
        let mut prover = Prover::new(logic, &hyps, target, goal, budget);
        if let Some(id) = prover.run() {
            let mut lines = extract(&prover.known, id);
            for (k, h) in hyps.iter().enumerate().rev() {
                lines = discharge(&lines, k, h);
            }
            if lines.len() <= budget.max_lines {
                return Ok(Outcome::Proved(to_proof(lines)));
            }
        }
    }
    let mut prover = Prover::new(logic, &[], goal, goal, budget);
    Ok(match prover.run() {
        Some(id) => {
            let lines = extract(&prover.known, id);
            if lines.len() <= budget.max_lines {
                Outcome::Proved(to_proof(lines))
            } else {
                Outcome::Unknown
            }
        }
        None => Outcome::Unknown,
    })
}

const MAX_PREMISES: usize = 12;

/// A derivation of a goal from some of the premises.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    /// The premises used, in their original order.
    pub used: Vec<Formula>,
    /// Checkable against the full premise list. Its premise-free prefix proves
    /// `(γ1 ∧ (γ2 ∧ …)) → goal` (or the goal itself when nothing is used).
    pub proof: Proof,
}

/// Derivability in RCbr or RCie: a theorem-proof of the goal, or of
/// `(γ1 ∧ … ∧ γn) → goal` for a premise subset, tried in size order.
pub fn rl_derives(
    logic: LogicId,
    premises: &[Formula],
    goal: &Formula,
    budget: SearchBudget,
) -> Result<Option<Derivation>, SearchError> {
    if !logic.is_self_extensional() {
        return Err(SearchError::NotSelfExtensional(logic));
    }
    derive(logic, premises, goal, budget)
}

/// Same search as [`rl_derives`] for any of the four logics. For Cbr and Cie
/// the deduction theorem makes it a search for `Γ ⊢ goal`.
pub fn derive(
    logic: LogicId,
    premises: &[Formula],
    goal: &Formula,
    budget: SearchBudget,
) -> Result<Option<Derivation>, SearchError> {
    check_budget(budget)?;
    if premises.len() > MAX_PREMISES {
        return Err(SearchError::TooManyPremises {
            found: premises.len(),
            limit: MAX_PREMISES,
        });
    }
    for size in 0..=premises.len() {
        for subset in combinations(premises.len(), size) {
            let used: Vec<Formula> = subset.iter().map(|&i| premises[i].clone()).collect();
            let target = match Formula::conjunction(&used) {
                None => goal.clone(),
                Some(c) => Formula::imp(c, goal.clone()),
            };
            if let Outcome::Proved(mut proof) = bounded_prove(logic, &target, budget)? {
                if !subset.is_empty() {
                    append_premise_steps(&mut proof, &subset, premises);
                }
                return Ok(Some(Derivation { used, proof }));
            }
        }
    }
    Ok(None)
}

/// Index subsets of `0..n` of the given size in lexicographic order.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - left {
            cur.push(i);
            go(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        go(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

/// Extends a proof of `(γ1 ∧ …) → goal` with premise lines, the conjunction
/// built by Ax3 and two MPs per step, and a final MP.
fn append_premise_steps(proof: &mut Proof, subset: &[usize], premises: &[Formula]) {
    let implication = proof.len();
    fn push(proof: &mut Proof, formula: Formula, justification: Justification) -> usize {
        proof.lines.push(ProofLine {
            formula,
            justification,
        });
        proof.len()
    }
    fn conj(proof: &mut Proof, subset: &[usize], premises: &[Formula]) -> (usize, Formula) {
        let first = premises[subset[0]].clone();
        let first_line = push(proof, first.clone(), Justification::Premise(subset[0] + 1));
        if subset.len() == 1 {
            return (first_line, first);
        }
        let (rest_line, rest) = conj(proof, &subset[1..], premises);
        let both = Formula::and(first.clone(), rest.clone());
        let binding = [
            ("alpha".to_string(), first.clone()),
            ("beta".to_string(), rest.clone()),
        ]
        .into_iter()
        .collect();
        let ax = push(
            proof,
            Formula::imp(first, Formula::imp(rest.clone(), both.clone())),
            Justification::Axiom { schema: 3, binding },
        );
        let partial = push(
            proof,
            Formula::imp(rest, both.clone()),
            Justification::Mp(first_line, ax),
        );
        let done = push(proof, both.clone(), Justification::Mp(rest_line, partial));
        (done, both)
    }
    let Formula::Imp(_, goal) = proof.lines[implication - 1].formula.clone() else {
        unreachable!("premise steps are appended to an implication")
    };
    let (conj_line, _) = conj(proof, subset, premises);
    push(proof, *goal, Justification::Mp(conj_line, implication));
}
