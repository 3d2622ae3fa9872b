//! A paraconsistent RCbr structure on `℘(ℤ)` built from periodic sets.
//!
//! Values are unions of residue classes modulo square-free products of the
//! first primes. Two families of inconsistent sets are generated from
//! templates (`[x]_2 ∪ [1]^c_3 ∪ … ∪ [1]^c_{p_k}` and relatives), and a
//! negation pairs them up so that `¬¬X = X`. The resulting structure refutes
//! `∘∘α`, `∘α → ∘∘α`, `(α ∧ ∘α) → ∘∘α` and `(¬α ∧ ∘α) → ∘∘α`.

use std::fmt;
use std::sync::OnceLock;

use dashmap::DashMap;
use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::balfi::{evaluate, Assignment, BalfiAlgebra};
use crate::formula::Formula;
use crate::par;

/// The first primes; `PRIMES[k - 1]` is `p_k`.
pub const PRIMES: [u32; 9] = [2, 3, 5, 7, 11, 13, 17, 19, 23];

/// Sets are kept only for moduli dividing `2·3·…·19`.
pub const MAX_PRIME_INDEX: usize = 8;

/// `p_k`, 1-based.
pub fn prime(k: usize) -> u32 {
    PRIMES[k - 1]
}

/// Product of the first `k` primes.
pub fn primorial(k: usize) -> u32 {
    PRIMES[..k].iter().product()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BmodError {
    #[error("modulus {0} is not a product of distinct primes up to {max}", max = PRIMES[MAX_PRIME_INDEX - 1])]
    BadModulus(u32),
    #[error("residue {residue} is out of range for modulus {modulus}")]
    BadResidue { residue: u32, modulus: u32 },
    #[error("modulus {0} appears twice")]
    RepeatedModulus(u64),
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("no congruences given")]
    NoCongruences,
    #[error("the set is consistent, so ¬̃ is undefined on it")]
    Consistent,
    #[error("k_max must be between 3 and {max}, got {0}", max = MAX_PRIME_INDEX - 1)]
    BadKmax(usize),
}

/// `{ z ∈ ℤ : z mod modulus ∈ residues }`, always with minimal modulus.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PeriodicSet {
    modulus: u32,
    bits: Vec<u64>,
}

fn words(m: u32) -> usize {
    (m as usize).div_ceil(64)
}

fn prime_factors(m: u32) -> Option<Vec<u32>> {
    let mut rest = m;
    let mut out = Vec::new();
    for &p in &PRIMES[..MAX_PRIME_INDEX] {
        if rest.is_multiple_of(p) {
            rest /= p;
            if rest.is_multiple_of(p) {
                return None;
            }
            out.push(p);
        }
    }
    (rest == 1).then_some(out)
}

/// 64 bits starting at bit `offset`; bits past the end read as zero.
fn read_word(bits: &[u64], offset: usize) -> u64 {
    let (w, b) = (offset / 64, offset % 64);
    let lo = bits.get(w).copied().unwrap_or(0) >> b;
    if b == 0 {
        lo
    } else {
        lo | bits.get(w + 1).copied().unwrap_or(0) << (64 - b)
    }
}

/// ORs the first `len` bits of `src` into `dst` at bit `start`, clipped to `dst`.
fn write_bits(dst: &mut [u64], start: usize, src: &[u64], len: usize) {
    let end = (start + len).min(dst.len() * 64);
    let mut pos = start;
    while pos < end {
        let take = (end - pos).min(64 - pos % 64);
        let chunk = read_word(src, pos - start) & low_mask(take);
        dst[pos / 64] |= chunk << (pos % 64);
        pos += take;
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Whether bit `r` equals bit `r + step` for all `r + step < len`.
fn shift_invariant(bits: &[u64], len: usize, step: usize) -> bool {
    (0..len - step).step_by(64).all(|r| {
        let mask = low_mask(len - step - r);
        (read_word(bits, r) ^ read_word(bits, r + step)) & mask == 0
    })
}

impl PeriodicSet {
    pub fn new(modulus: u32, residues: impl IntoIterator<Item = u32>) -> Result<Self, BmodError> {
        if modulus == 0 || prime_factors(modulus).is_none() {
            return Err(BmodError::BadModulus(modulus));
        }
        let mut s = PeriodicSet {
            modulus,
            bits: vec![0; words(modulus)],
        };
        for r in residues {
            if r >= modulus {
                return Err(BmodError::BadResidue {
                    residue: r,
                    modulus,
                });
            }
            s.set(r);
        }
        Ok(s.canonical())
    }

    pub fn empty() -> Self {
        PeriodicSet {
            modulus: 1,
            bits: vec![0],
        }
    }

    pub fn integers() -> Self {
        PeriodicSet {
            modulus: 1,
            bits: vec![1],
        }
    }

    /// `[r]_m`
    pub fn class(r: u32, m: u32) -> Self {
        PeriodicSet::new(m, [r % m]).expect("modulus within range")
    }

    /// `[r]_m^c`
    pub fn class_complement(r: u32, m: u32) -> Self {
        PeriodicSet::class(r, m).complement()
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    fn get(&self, r: u32) -> bool {
        self.bits[(r / 64) as usize] >> (r % 64) & 1 == 1
    }

    fn set(&mut self, r: u32) {
        self.bits[(r / 64) as usize] |= 1 << (r % 64);
    }

    pub fn contains(&self, z: i64) -> bool {
        self.get(z.rem_euclid(i64::from(self.modulus)) as u32)
    }

    /// Residues in ascending order.
    pub fn residues(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.modulus).filter(|&r| self.get(r))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_integers(&self) -> bool {
        self.modulus == 1 && self.get(0)
    }

    /// Smallest non-negative member, as a residue class of the modulus.
    pub fn first_member(&self) -> Option<Congruence> {
        self.residues().next().map(|r| Congruence {
            residue: u64::from(r),
            modulus: u64::from(self.modulus),
        })
    }

    fn expanded(&self, m: u32) -> Vec<u64> {
        if m == self.modulus {
            return self.bits.clone();
        }
        let mut bits = vec![0u64; words(m)];
        let len = self.modulus as usize;
        for start in (0..m as usize).step_by(len) {
            write_bits(&mut bits, start, &self.bits, len);
        }
        bits
    }

    /// Drops every prime whose removal leaves the set unchanged.
    fn canonical(mut self) -> Self {
        let tail = self.modulus % 64;
        if tail != 0 {
            let last = self.bits.len() - 1;
            self.bits[last] &= (1u64 << tail) - 1;
        }
        loop {
            let factors = prime_factors(self.modulus).expect("square-free modulus");
            let drop = factors.into_iter().find(|&q| {
                let step = self.modulus / q;
                shift_invariant(&self.bits, self.modulus as usize, step as usize)
            });
            let Some(q) = drop else {
                return self;
            };
            let m = self.modulus / q;
            let mut reduced = PeriodicSet {
                modulus: m,
                bits: vec![0; words(m)],
            };
            for r in (0..m).filter(|&r| self.get(r)) {
                reduced.set(r);
            }
            self = reduced;
        }
    }

    fn combine(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        let m = self.modulus.lcm(&other.modulus);
        let (a, b) = (self.expanded(m), other.expanded(m));
        PeriodicSet {
            modulus: m,
            bits: a.iter().zip(&b).map(|(x, y)| op(*x, *y)).collect(),
        }
        .canonical()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |x, y| x | y)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, |x, y| x & y)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, |x, y| x & !y)
    }

    pub fn complement(&self) -> Self {
        PeriodicSet {
            modulus: self.modulus,
            bits: self.bits.iter().map(|w| !w).collect(),
        }
        .canonical()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }
}

/// `residue mod modulus`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Congruence {
    pub residue: u64,
    pub modulus: u64,
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.residue, self.modulus)
    }
}

impl Serialize for Congruence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Solves `x ≡ a_i (mod n_i)` for pairwise coprime moduli.
pub fn crt_solve(congruences: &[(u64, u64)]) -> Result<Congruence, BmodError> {
    if congruences.is_empty() {
        return Err(BmodError::NoCongruences);
    }
    for (i, &(_, n)) in congruences.iter().enumerate() {
        for &(_, other) in &congruences[..i] {
            if other == n {
                return Err(BmodError::RepeatedModulus(n));
            }
            if other.gcd(&n) != 1 {
                return Err(BmodError::NotCoprime(other, n));
            }
        }
    }
    let mut acc = Congruence {
        residue: 0,
        modulus: 1,
    };
    for &(a, n) in congruences {
        if n == 0 || a >= n {
            return Err(BmodError::BadResidue {
                residue: a as u32,
                modulus: n as u32,
            });
        }
        // acc.residue + acc.modulus * t ≡ a (mod n)
        let (m, r) = (acc.modulus as i128, acc.residue as i128);
        let ext = m.extended_gcd(&(n as i128));
        let inv = ext.x.rem_euclid(n as i128);
        let t = ((a as i128 - r).rem_euclid(n as i128) * inv).rem_euclid(n as i128);
        let modulus = m * n as i128;
        acc = Congruence {
            residue: (r + m * t).rem_euclid(modulus) as u64,
            modulus: modulus as u64,
        };
    }
    Ok(acc)
}

/// `I = [1]_2 ∩ [0]_3`
pub fn seed() -> PeriodicSet {
    PeriodicSet::class(1, 2).intersection(&PeriodicSet::class(0, 3))
}

/// `[1]^c_{p_from} ∪ … ∪ [1]^c_{p_to}`, empty when `from > to`.
fn co_ones(from: usize, to: usize) -> PeriodicSet {
    (from..=to).fold(PeriodicSet::empty(), |acc, i| {
        acc.union(&PeriodicSet::class_complement(1, prime(i)))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Base {
    /// `I = [1]_2 ∩ [0]_3`
    I,
    /// `I^c`
    IC,
}

impl Base {
    fn flipped(self) -> Base {
        match self {
            Base::I => Base::IC,
            Base::IC => Base::I,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `head ∪ [1]^c_… ∪ … ∪ [1]^c_{p_k}`
    Chain,
    /// The chain of the same `k` with `[0]_{p_{k+1}}` added.
    Zero,
}

/// Which template of the two inconsistent families a set matches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "family")]
pub enum FamilyTag {
    /// Head `[x]_2`, tail `[1]^c_3 ∪ … ∪ [1]^c_{p_k}`; `k ≥ 1`.
    I1 {
        x: u8,
        branch: Branch,
        k: usize,
        complemented: bool,
    },
    /// Head `I` or `I^c`, tail `[1]^c_5 ∪ … ∪ [1]^c_{p_k}`; `k ≥ 2`.
    I2 {
        base: Base,
        branch: Branch,
        k: usize,
        complemented: bool,
    },
    Consistent,
}

impl FamilyTag {
    pub fn is_complemented(&self) -> bool {
        match *self {
            FamilyTag::I1 { complemented, .. } | FamilyTag::I2 { complemented, .. } => complemented,
            FamilyTag::Consistent => false,
        }
    }

    fn with_complemented(self, c: bool) -> Self {
        match self {
            FamilyTag::I1 { x, branch, k, .. } => FamilyTag::I1 {
                x,
                branch,
                k,
                complemented: c,
            },
            FamilyTag::I2 {
                base, branch, k, ..
            } => FamilyTag::I2 {
                base,
                branch,
                k,
                complemented: c,
            },
            FamilyTag::Consistent => FamilyTag::Consistent,
        }
    }

    fn with_branch_k(self, branch: Branch, k: usize, complemented: bool) -> Self {
        match self {
            FamilyTag::I1 { x, .. } => FamilyTag::I1 {
                x,
                branch,
                k,
                complemented,
            },
            FamilyTag::I2 { base, .. } => FamilyTag::I2 {
                base,
                branch,
                k,
                complemented,
            },
            FamilyTag::Consistent => FamilyTag::Consistent,
        }
    }

    fn branch_k(&self) -> Option<(Branch, usize)> {
        match *self {
            FamilyTag::I1 { branch, k, .. } | FamilyTag::I2 { branch, k, .. } => Some((branch, k)),
            FamilyTag::Consistent => None,
        }
    }

    /// Whether the indices are in the family's range.
    pub fn is_valid(&self) -> bool {
        match *self {
            FamilyTag::I1 { x, k, .. } => x <= 1 && k >= 1,
            FamilyTag::I2 { k, .. } => k >= 2,
            FamilyTag::Consistent => true,
        }
    }

    /// Number of primes the template uses.
    fn prime_count(&self) -> usize {
        match self.branch_k() {
            Some((Branch::Chain, k)) => k,
            Some((Branch::Zero, k)) => k + 1,
            None => 0,
        }
    }

    /// The set this tag names.
    pub fn set(&self) -> PeriodicSet {
        assert!(
            self.is_valid() && *self != FamilyTag::Consistent,
            "no set for {self}"
        );
        static CACHE: OnceLock<DashMap<FamilyTag, PeriodicSet>> = OnceLock::new();
        let cache = CACHE.get_or_init(DashMap::new);
        if let Some(s) = cache.get(self) {
            return s.clone();
        }
        let s = if self.is_complemented() {
            self.with_complemented(false).set().complement()
        } else {
            let (branch, k) = self.branch_k().expect("member tag");
            let chain = match *self {
                FamilyTag::I1 { x, .. } => {
                    PeriodicSet::class(u32::from(x), 2).union(&co_ones(2, k))
                }
                FamilyTag::I2 { base, .. } => {
                    let head = match base {
                        Base::I => seed(),
                        Base::IC => seed().complement(),
                    };
                    head.union(&co_ones(3, k))
                }
                FamilyTag::Consistent => unreachable!(),
            };
            match branch {
                Branch::Chain => chain,
                Branch::Zero => chain.union(&PeriodicSet::class(0, prime(k + 1))),
            }
        };
        cache.insert(*self, s.clone());
        s
    }

    /// `¬̃` on the level of tags.
    pub fn neg(&self) -> FamilyTag {
        use Branch::*;
        let (branch, k) = self.branch_k().expect("member tag");
        if self.is_complemented() {
            // Inverse pairing: a complemented chain came from a zero of the
            // same k, a complemented zero from a chain of k + 1.
            return match branch {
                Chain => self.with_branch_k(Zero, k, false),
                Zero => self.with_branch_k(Chain, k + 1, false),
            };
        }
        match (*self, branch) {
            (FamilyTag::I1 { x, .. }, Chain) if k == 1 => FamilyTag::I1 {
                x: 1 - x,
                branch: Zero,
                k: 1,
                complemented: false,
            },
            (FamilyTag::I2 { base, .. }, Chain) if k == 2 => FamilyTag::I2 {
                base: base.flipped(),
                branch: Zero,
                k: 2,
                complemented: false,
            },
            (_, Chain) => self.with_branch_k(Zero, k - 1, true),
            (_, Zero) => self.with_branch_k(Chain, k, true),
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let branch = |b: Branch| match b {
            Branch::Chain => "chain",
            Branch::Zero => "zero",
        };
        match *self {
            FamilyTag::I1 {
                x,
                branch: b,
                k,
                complemented,
            } => {
                write!(f, "I1(x={x},{},k={k})", branch(b))?;
                if complemented {
                    f.write_str("^c")?;
                }
                Ok(())
            }
            FamilyTag::I2 {
                base,
                branch: b,
                k,
                complemented,
            } => {
                let base = match base {
                    Base::I => "I",
                    Base::IC => "I^c",
                };
                write!(f, "I2(base={base},{},k={k})", branch(b))?;
                if complemented {
                    f.write_str("^c")?;
                }
                Ok(())
            }
            FamilyTag::Consistent => f.write_str("consistent"),
        }
    }
}

/// Non-complemented templates using exactly `j` primes, in report order.
fn templates_with_primes(j: usize) -> Vec<FamilyTag> {
    let mut out = Vec::new();
    for x in 0..=1 {
        for (branch, k) in [(Branch::Chain, j), (Branch::Zero, j.wrapping_sub(1))] {
            let tag = FamilyTag::I1 {
                x,
                branch,
                k,
                complemented: false,
            };
            if j >= 1 && tag.is_valid() && tag.prime_count() == j {
                out.push(tag);
            }
        }
    }
    for base in [Base::I, Base::IC] {
        for (branch, k) in [(Branch::Chain, j), (Branch::Zero, j.wrapping_sub(1))] {
            let tag = FamilyTag::I2 {
                base,
                branch,
                k,
                complemented: false,
            };
            if j >= 1 && tag.is_valid() && tag.prime_count() == j {
                out.push(tag);
            }
        }
    }
    out
}

/// Every tag naming `x`. A template on the first `j` primes has modulus
/// `p_1 ⋯ p_j`, so only templates with that many primes can match.
pub fn matches(x: &PeriodicSet) -> Vec<FamilyTag> {
    let m = x.modulus();
    let Some(j) = (1..=MAX_PRIME_INDEX).find(|&j| primorial(j) == m) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for tag in templates_with_primes(j) {
        let s = tag.set();
        if s == *x {
            out.push(tag);
        } else if s.complement() == *x {
            out.push(tag.with_complemented(true));
        }
    }
    out.sort_by_key(|t| (t.is_complemented(), *t));
    out
}

/// The tag of `x`, preferring a non-complemented reading when a set has two
/// (such as `[0]_2`, which is both `[0]_2` and `[1]_2^c`).
pub fn classify(x: &PeriodicSet) -> FamilyTag {
    matches(x)
        .into_iter()
        .next()
        .unwrap_or(FamilyTag::Consistent)
}

pub fn tilde_neg(x: &PeriodicSet) -> Result<PeriodicSet, BmodError> {
    match classify(x) {
        FamilyTag::Consistent => Err(BmodError::Consistent),
        tag => Ok(tag.neg().set()),
    }
}

/// `¬̃` on inconsistent sets, complement elsewhere.
pub fn hat_neg(x: &PeriodicSet) -> PeriodicSet {
    tilde_neg(x).unwrap_or_else(|_| x.complement())
}

/// `(X ∩ ¬̂X)^c`
pub fn hat_circ(x: &PeriodicSet) -> PeriodicSet {
    x.intersection(&hat_neg(x)).complement()
}

/// The structure itself, for evaluating formulas.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bmod;

impl BalfiAlgebra for Bmod {
    type Elem = PeriodicSet;

    fn top(&self) -> PeriodicSet {
        PeriodicSet::integers()
    }
    fn bottom(&self) -> PeriodicSet {
        PeriodicSet::empty()
    }
    fn meet(&self, a: &PeriodicSet, b: &PeriodicSet) -> PeriodicSet {
        a.intersection(b)
    }
    fn join(&self, a: &PeriodicSet, b: &PeriodicSet) -> PeriodicSet {
        a.union(b)
    }
    fn complement(&self, a: &PeriodicSet) -> PeriodicSet {
        a.complement()
    }
    fn neg(&self, a: &PeriodicSet) -> PeriodicSet {
        hat_neg(a)
    }
    fn circ(&self, a: &PeriodicSet) -> PeriodicSet {
        hat_circ(a)
    }
}

/// Above this modulus the printer only tries single-class terms.
const PAIR_TERM_LIMIT: u32 = 30030;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Literal {
    prime: u32,
    residue: u32,
    complemented: bool,
}

impl Literal {
    fn holds(&self, z: u32) -> bool {
        (z % self.prime == self.residue) != self.complemented
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]_{}", self.residue, self.prime)?;
        if self.complemented {
            f.write_str("^c")?;
        }
        Ok(())
    }
}

struct Term {
    literals: Vec<Literal>,
}

impl Term {
    fn render(&self, nested: bool) -> String {
        let parts: Vec<String> = self.literals.iter().map(Literal::to_string).collect();
        if nested && parts.len() > 1 {
            format!("({})", parts.join(" ∩ "))
        } else {
            parts.join(" ∩ ")
        }
    }

    fn size(&self, m: u32) -> usize {
        self.literals.iter().fold(m as usize, |acc, l| {
            let q = l.prime as usize;
            if l.complemented {
                acc / q * (q - 1)
            } else {
                acc / q
            }
        })
    }

    /// Members below `m`, stepping through the plain classes by CRT.
    fn members(&self, m: u32) -> impl Iterator<Item = u32> + '_ {
        let plain: Vec<(u64, u64)> = self
            .literals
            .iter()
            .filter(|l| !l.complemented)
            .map(|l| (u64::from(l.residue), u64::from(l.prime)))
            .collect();
        let (start, step) = match crt_solve(&plain) {
            Ok(c) => (c.residue as u32, c.modulus as usize),
            Err(_) => (0, 1),
        };
        (start..m)
            .step_by(step)
            .filter(|&z| self.literals.iter().all(|l| l.holds(z)))
    }
}

/// How many members of a bit vector fall in each class and each pair of
/// classes of the primes dividing `m`.
struct ClassCounts {
    single: Vec<Vec<usize>>,
    pairs: Vec<Vec<Vec<usize>>>,
}

impl ClassCounts {
    fn of(bits: &[u64], primes: &[u32], with_pairs: bool) -> ClassCounts {
        let n = primes.len();
        let mut single: Vec<Vec<usize>> = primes.iter().map(|&q| vec![0; q as usize]).collect();
        let mut pairs: Vec<Vec<Vec<usize>>> = Vec::new();
        if with_pairs {
            for i in 0..n {
                pairs.push(
                    (0..n)
                        .map(|j| vec![0; (primes[i] * primes[j]) as usize])
                        .collect(),
                );
            }
        }
        for (w, &word) in bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let z = w as u32 * 64 + word.trailing_zeros();
                word &= word - 1;
                let mut rs = [0u32; MAX_PRIME_INDEX];
                for (r, &q) in rs.iter_mut().zip(primes) {
                    *r = z % q;
                }
                for i in 0..n {
                    single[i][rs[i] as usize] += 1;
                    if with_pairs {
                        for j in i + 1..n {
                            pairs[i][j][(rs[i] * primes[j] + rs[j]) as usize] += 1;
                        }
                    }
                }
            }
        }
        ClassCounts { single, pairs }
    }

    /// Members inside a term of one or two literals.
    fn count(&self, primes: &[u32], literals: &[Literal]) -> usize {
        let index = |l: &Literal| {
            primes
                .iter()
                .position(|&q| q == l.prime)
                .expect("prime of m")
        };
        let residues = |l: &Literal| {
            let l = *l;
            (0..l.prime).filter(move |&r| (r == l.residue) != l.complemented)
        };
        match literals {
            [l] => residues(l).map(|r| self.single[index(l)][r as usize]).sum(),
            [a, b] => {
                let (i, j) = (index(a), index(b));
                let table = &self.pairs[i][j];
                residues(a)
                    .flat_map(|ra| residues(b).map(move |rb| (ra, rb)))
                    .map(|(ra, rb)| table[(ra * primes[j] + rb) as usize])
                    .sum()
            }
            _ => unreachable!("terms have one or two literals"),
        }
    }
}

fn candidate_terms(primes: &[u32], with_pairs: bool) -> Vec<Term> {
    let mut literals = Vec::new();
    for &q in primes {
        for r in 0..q {
            literals.push(Literal {
                prime: q,
                residue: r,
                complemented: false,
            });
            // `[r]_2^c` is just the other class.
            if q > 2 {
                literals.push(Literal {
                    prime: q,
                    residue: r,
                    complemented: true,
                });
            }
        }
    }
    let mut terms: Vec<Term> = literals
        .iter()
        .map(|l| Term { literals: vec![*l] })
        .collect();
    if with_pairs {
        for (i, a) in literals.iter().enumerate() {
            for b in literals[i + 1..].iter().filter(|b| b.prime != a.prime) {
                terms.push(Term {
                    literals: vec![*a, *b],
                });
            }
        }
    }
    terms
}

/// Greedy cover of the set by terms contained in it.
fn cover(x: &PeriodicSet) -> Option<Vec<Term>> {
    let m = x.modulus;
    let primes = prime_factors(m).expect("square-free modulus");
    let with_pairs = m <= PAIR_TERM_LIMIT;
    let inside = ClassCounts::of(&x.bits, &primes, with_pairs);
    let mut terms: Vec<(Term, usize)> = candidate_terms(&primes, with_pairs)
        .into_iter()
        .map(|t| {
            let size = t.size(m);
            (t, size)
        })
        .filter(|(t, size)| inside.count(&primes, &t.literals) == *size)
        .collect();
    let mut uncovered = x.bits.clone();
    let mut chosen = Vec::new();
    while uncovered.iter().any(|&w| w != 0) {
        let left = ClassCounts::of(&uncovered, &primes, with_pairs);
        let best = terms
            .iter()
            .enumerate()
            .map(|(i, (t, size))| {
                let gain = left.count(&primes, &t.literals);
                (
                    gain,
                    *size,
                    std::cmp::Reverse(t.literals.len()),
                    std::cmp::Reverse(i),
                )
            })
            .max()?;
        if best.0 == 0 {
            return None;
        }
        let (term, _) = terms.swap_remove(best.3 .0);
        for z in term.members(m) {
            uncovered[(z / 64) as usize] &= !(1 << (z % 64));
        }
        chosen.push(term);
    }
    chosen.sort_by(|a, b| a.literals.cmp(&b.literals));
    Some(chosen)
}

/// Family members print as their template.
fn render_member(x: &PeriodicSet) -> Option<String> {
    let tag = classify(x);
    let (branch, k) = tag.branch_k()?;
    let (mut parts, first_tail) = match tag {
        FamilyTag::I1 { x, .. } => (vec![format!("[{x}]_2")], 2),
        FamilyTag::I2 { base: Base::I, .. } => (vec!["[1]_2 ∩ [0]_3".to_string()], 3),
        FamilyTag::I2 { base: Base::IC, .. } => {
            (vec!["[0]_2".to_string(), "[0]_3^c".to_string()], 3)
        }
        FamilyTag::Consistent => return None,
    };
    parts.extend((first_tail..=k).map(|i| format!("[1]_{}^c", prime(i))));
    if branch == Branch::Zero {
        parts.push(format!("[0]_{}", prime(k + 1)));
    }
    if parts.len() > 1 && parts[0].contains('∩') {
        parts[0] = format!("({})", parts[0]);
    }
    let body = parts.join(" ∪ ");
    Some(if tag.is_complemented() {
        format!("({body})^c")
    } else {
        body
    })
}

fn literal_count(terms: &[Term]) -> usize {
    terms.iter().map(|t| t.literals.len()).sum()
}

fn render_cover(terms: &[Term]) -> String {
    let nested = terms.len() > 1;
    terms
        .iter()
        .map(|t| t.render(nested))
        .collect::<Vec<_>>()
        .join(" ∪ ")
}

impl fmt::Display for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        if self.is_integers() {
            return f.write_str("ℤ");
        }
        if let Some(text) = render_member(self) {
            return f.write_str(&text);
        }
        // Cost in printed literals; a listed residue counts as two.
        let listed = (self.count() <= 16).then(|| 2 * self.count());
        let direct = cover(self).map(|d| (literal_count(&d), render_cover(&d)));
        let dual = cover(&self.complement())
            .map(|c| (literal_count(&c), format!("({})^c", render_cover(&c))));
        let best = [direct, dual]
            .into_iter()
            .flatten()
            .min_by_key(|(cost, _)| *cost)
            .filter(|(cost, _)| listed.is_none_or(|l| *cost <= l));
        match best {
            Some((_, text)) => f.write_str(&text),
            None if listed.is_some() => {
                let rs: Vec<String> = self.residues().map(|r| r.to_string()).collect();
                write!(f, "{{{}}} mod {}", rs.join(","), self.modulus)
            }
            None => write!(f, "<{} residues mod {}>", self.count(), self.modulus),
        }
    }
}

impl fmt::Debug for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for PeriodicSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Every family member whose template uses primes up to `p_{k_max+1}`:
/// chains up to `k_max + 1`, zero branches up to `k_max`, and all their
/// complements, in report order.
pub fn family_members(k_max: usize) -> Vec<FamilyTag> {
    let mut out = Vec::new();
    let branches = |lo: usize| {
        (lo..=k_max + 1)
            .map(|k| (Branch::Chain, k))
            .chain((lo..=k_max).map(|k| (Branch::Zero, k)))
            .collect::<Vec<_>>()
    };
    for x in 0..=1 {
        for (branch, k) in branches(1) {
            out.push(FamilyTag::I1 {
                x,
                branch,
                k,
                complemented: false,
            });
        }
    }
    for base in [Base::I, Base::IC] {
        for (branch, k) in branches(2) {
            out.push(FamilyTag::I2 {
                base,
                branch,
                k,
                complemented: false,
            });
        }
    }
    let mut all: Vec<FamilyTag> = out
        .iter()
        .flat_map(|t| [*t, t.with_complemented(true)])
        .collect();
    all.sort();
    all
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub item: u8,
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberRow {
    pub tag: String,
    pub set: String,
    pub neg: String,
    /// An element of `X ∩ ¬̃X`.
    pub witness: Option<Congruence>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfIntersection {
    pub x: PeriodicSet,
    pub neg: PeriodicSet,
    pub meet: PeriodicSet,
    pub tag: String,
    pub witness: Congruence,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WelldefReport {
    pub k_max: usize,
    pub members: Vec<MemberRow>,
    pub checks: Vec<CheckResult>,
    pub contradiction_in_family: SelfIntersection,
    pub passed: bool,
}

struct MemberCheck {
    row: MemberRow,
    faults: [Option<String>; 6],
}

fn check_member(tag: FamilyTag) -> MemberCheck {
    let x = tag.set();
    let readings = matches(&x);
    let mut faults: [Option<String>; 6] = Default::default();
    let has_i1 = readings.iter().any(|t| matches!(t, FamilyTag::I1 { .. }));
    let has_i2 = readings.iter().any(|t| matches!(t, FamilyTag::I2 { .. }));
    if has_i1 && has_i2 {
        faults[0] = Some(format!("{tag}: read in both families"));
    }
    let neg = tag.neg().set();
    if !readings.contains(&tag) {
        faults[1] = Some(format!("{tag}: template not recognized"));
    } else if let Some(other) = readings.iter().find(|t| t.neg().set() != neg) {
        faults[1] = Some(format!("{tag}: reading {other} gives a different negation"));
    }
    if !x.union(&neg).is_integers() {
        faults[2] = Some(format!(
            "{tag}: X ∪ ¬̃X misses {}",
            x.union(&neg).complement()
        ));
    }
    let meet = x.intersection(&neg);
    let witness = meet.first_member();
    if witness.is_none() {
        faults[3] = Some(format!("{tag}: X ∩ ¬̃X is empty"));
    }
    let mut outside = Vec::new();
    if classify(&neg) == FamilyTag::Consistent {
        outside.push("¬̃X");
    }
    if classify(&x.complement()) == FamilyTag::Consistent {
        outside.push("X^c");
    }
    if !outside.is_empty() {
        faults[4] = Some(format!(
            "{tag}: {} outside the families",
            outside.join(", ")
        ));
    }
    match tilde_neg(&neg) {
        Ok(back) if back == x => {}
        Ok(back) => faults[5] = Some(format!("{tag}: ¬̃¬̃X = {back}")),
        Err(_) => faults[5] = Some(format!("{tag}: ¬̃X is consistent")),
    }
    MemberCheck {
        row: MemberRow {
            tag: tag.to_string(),
            set: x.to_string(),
            neg: neg.to_string(),
            witness,
        },
        faults,
    }
}

const ITEM_NAMES: [&str; 6] = [
    "families disjoint",
    "negation total and single-valued",
    "X ∪ ¬̃X = ℤ",
    "X ∩ ¬̃X ≠ ∅",
    "¬̃X and X^c stay in the families",
    "¬̃¬̃X = X",
];

/// Checks the negation tables on every member of [`family_members`].
pub fn verify_welldef(k_max: usize) -> Result<WelldefReport, BmodError> {
    if !(3..MAX_PRIME_INDEX).contains(&k_max) {
        return Err(BmodError::BadKmax(k_max));
    }
    let members = family_members(k_max);
    let results = par::map(&members, |t| check_member(*t));
    let checks: Vec<CheckResult> = (0..6)
        .map(|i| {
            let violations: Vec<String> =
                results.iter().filter_map(|r| r.faults[i].clone()).collect();
            CheckResult {
                item: i as u8 + 1,
                name: ITEM_NAMES[i],
                passed: violations.is_empty(),
                checked: results.len(),
                violations,
            }
        })
        .collect();

    let x = PeriodicSet::class(1, 2);
    let neg = tilde_neg(&x)?;
    let meet = x.intersection(&neg);
    let tag = classify(&meet);
    let witness = crt_solve(&[(1, 2), (0, 3)])?;
    let contradiction_in_family = SelfIntersection {
        passed: meet == seed()
            && tag != FamilyTag::Consistent
            && meet.contains(witness.residue as i64),
        tag: tag.to_string(),
        x,
        neg,
        meet,
        witness,
    };
    let passed = checks.iter().all(|c| c.passed) && contradiction_in_family.passed;
    Ok(WelldefReport {
        k_max,
        members: results.into_iter().map(|r| r.row).collect(),
        checks,
        contradiction_in_family,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EqualityCheck {
    pub name: &'static str,
    pub expected: PeriodicSet,
    pub computed: PeriodicSet,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessCheck {
    pub witness: Congruence,
    pub inside: &'static str,
    pub outside: &'static str,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemaCheck {
    pub formula: Formula,
    pub value: PeriodicSet,
    pub refuted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CountermodelReport {
    pub x: PeriodicSet,
    pub equalities: Vec<EqualityCheck>,
    pub witnesses: Vec<WitnessCheck>,
    pub schemas: Vec<SchemaCheck>,
    pub passed: bool,
}

/// The four `∘∘` schemas refuted by the structure.
pub const CIRC_CIRC_SCHEMAS: [&str; 4] = ["@@p", "@p -> @@p", "p & @p -> @@p", "!p & @p -> @@p"];

/// Evaluates the `∘∘` schemas at `p ↦ [1]_2` and checks the intermediate
/// sets and witnesses along the way.
pub fn countermodel_report() -> CountermodelReport {
    let x = PeriodicSet::class(1, 2);
    let circ = hat_circ(&x);
    let circ_circ = hat_circ(&circ);
    let neg = hat_neg(&x);
    let with_x = x.intersection(&circ);
    let with_neg = neg.intersection(&circ);

    let c = PeriodicSet::class;
    let cc = PeriodicSet::class_complement;
    let eq = |name, expected: PeriodicSet, computed: &PeriodicSet| EqualityCheck {
        name,
        holds: expected == *computed,
        expected,
        computed: computed.clone(),
    };
    let equalities = vec![
        eq("∘X", c(0, 2).union(&cc(0, 3)), &circ),
        eq("∘∘X", seed().union(&cc(0, 5)), &circ_circ),
        eq("X ∩ ∘X", c(1, 2).intersection(&cc(0, 3)), &with_x),
        eq("¬X ∩ ∘X", c(0, 2), &with_neg),
    ];

    let witness = |congruences: &[(u64, u64)], inside, set: &PeriodicSet| {
        let w = crt_solve(congruences).expect("coprime moduli");
        let z = w.residue as i64;
        WitnessCheck {
            witness: w,
            inside,
            outside: "∘∘X",
            holds: set.contains(z) && !circ_circ.contains(z),
        }
    };
    let witnesses = vec![
        witness(&[(1, 2), (1, 3), (0, 5)], "X ∩ ∘X", &with_x),
        witness(&[(0, 2), (0, 5)], "¬X ∩ ∘X", &with_neg),
    ];

    let assignment: Assignment<PeriodicSet> = [("p".to_string(), x.clone())].into();
    let schemas: Vec<SchemaCheck> = CIRC_CIRC_SCHEMAS
        .iter()
        .map(|s| {
            let formula: Formula = s.parse().expect("schema parses");
            let value = evaluate(&Bmod, &assignment, &formula).expect("p is assigned");
            SchemaCheck {
                refuted: !value.is_integers(),
                formula,
                value,
            }
        })
        .collect();

    let passed = equalities.iter().all(|e| e.holds)
        && witnesses.iter().all(|w| w.holds)
        && schemas.iter().all(|s| s.refuted);
    CountermodelReport {
        x,
        equalities,
        witnesses,
        schemas,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balfi::{circ_circ_fails_at, Equation};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set_where(m: u32, member: impl Fn(u32) -> bool) -> PeriodicSet {
        PeriodicSet::new(m, (0..m).filter(|&z| member(z))).unwrap()
    }

    /// `[1]^c` over primes `p_from..=p_to`, as a membership test.
    fn not_one(z: u32, from: usize, to: usize) -> bool {
        (from..=to).any(|i| z % prime(i) != 1)
    }

    fn is_seed(z: u32) -> bool {
        z % 2 == 1 && z.is_multiple_of(3)
    }

    #[test]
    fn crt_examples() {
        let s = crt_solve(&[(1, 2), (1, 3), (0, 5)]).unwrap();
        assert_eq!((s.residue, s.modulus), (25, 30));
        assert_eq!(s.to_string(), "25 mod 30");
        assert_eq!(
            crt_solve(&[(0, 2), (0, 5)]).unwrap().to_string(),
            "0 mod 10"
        );
        assert_eq!(crt_solve(&[(0, 3)]).unwrap().to_string(), "0 mod 3");
        assert_eq!(
            crt_solve(&[(0, 3), (1, 3)]),
            Err(BmodError::RepeatedModulus(3))
        );
        assert_eq!(crt_solve(&[]), Err(BmodError::NoCongruences));
    }

    proptest! {
        #[test]
        fn crt_solution_satisfies_every_congruence(rs in proptest::collection::vec(0u64..1000, 1..=6)) {
            let cs: Vec<(u64, u64)> = rs
                .iter()
                .zip(PRIMES)
                .map(|(r, p)| (r % u64::from(p), u64::from(p)))
                .collect();
            let s = crt_solve(&cs).unwrap();
            prop_assert_eq!(s.modulus, cs.iter().map(|c| c.1).product::<u64>());
            for (a, n) in cs {
                prop_assert_eq!(s.residue % n, a);
            }
        }
    }

    #[test]
    fn canonical_form_is_minimal() {
        assert_eq!(
            PeriodicSet::new(6, [1, 3, 5]).unwrap(),
            PeriodicSet::class(1, 2)
        );
        assert_eq!(PeriodicSet::class(1, 2).modulus(), 2);
        assert!(PeriodicSet::new(30, 0..30).unwrap().is_integers());
        assert!(PeriodicSet::new(30, []).unwrap().is_empty());
        assert_eq!(PeriodicSet::new(4, [0]), Err(BmodError::BadModulus(4)));
        assert_eq!(
            PeriodicSet::new(6, [6]),
            Err(BmodError::BadResidue {
                residue: 6,
                modulus: 6
            })
        );
        for k in 1..=7 {
            let chain = FamilyTag::I1 {
                x: 1,
                branch: Branch::Chain,
                k,
                complemented: false,
            };
            assert_eq!(chain.set().modulus(), primorial(k));
        }
    }

    #[test]
    fn printing() {
        let c = PeriodicSet::class;
        let cc = PeriodicSet::class_complement;
        assert_eq!(c(1, 2).union(&cc(0, 3)).to_string(), "[1]_2 ∪ [0]_3^c");
        assert_eq!(seed().to_string(), "[1]_2 ∩ [0]_3");
        assert_eq!(seed().complement().to_string(), "[0]_2 ∪ [0]_3^c");
        assert_eq!(
            c(1, 2)
                .intersection(&cc(0, 3))
                .union(&c(0, 5))
                .complement()
                .to_string(),
            "(([1]_2 ∩ [0]_3^c) ∪ [0]_5)^c"
        );
        assert_eq!(
            seed().union(&cc(0, 5)).to_string(),
            "([1]_2 ∩ [0]_3) ∪ [0]_5^c"
        );
        assert_eq!(PeriodicSet::empty().to_string(), "∅");
        assert_eq!(PeriodicSet::integers().to_string(), "ℤ");
        assert_eq!(
            PeriodicSet::new(30, [0, 7]).unwrap().to_string(),
            "{0,7} mod 30"
        );
    }

    #[test]
    fn templates_match_membership_oracle() {
        for k in 1..=5 {
            for x in 0..=1u32 {
                let chain = FamilyTag::I1 {
                    x: x as u8,
                    branch: Branch::Chain,
                    k,
                    complemented: false,
                };
                let m = primorial(k + 1);
                assert_eq!(
                    chain.set(),
                    set_where(m, |z| z % 2 == x || not_one(z, 2, k))
                );
                let zero = chain.with_branch_k(Branch::Zero, k, false);
                assert_eq!(
                    zero.set(),
                    set_where(m, |z| z % 2 == x
                        || not_one(z, 2, k)
                        || z % prime(k + 1) == 0)
                );
            }
            if k >= 2 {
                let chain = FamilyTag::I2 {
                    base: Base::IC,
                    branch: Branch::Chain,
                    k,
                    complemented: true,
                };
                let m = primorial(k + 1);
                assert_eq!(
                    chain.set(),
                    set_where(m, |z| !(!is_seed(z) || not_one(z, 3, k)))
                );
            }
        }
    }

    #[test]
    fn negation_follows_case_tables() {
        let neg = |s: &PeriodicSet| tilde_neg(s).unwrap();
        for x in 0..=1u32 {
            let m = 2 * 3;
            // [x]_2 ↦ [1-x]_2 ∪ [0]_3
            assert_eq!(
                neg(&set_where(m, |z| z % 2 == x)),
                set_where(m, |z| z % 2 == 1 - x || z % 3 == 0)
            );
            for k in 1..=5 {
                let m = primorial(k + 1);
                if k >= 2 {
                    let from = set_where(m, |z| z % 2 == x || not_one(z, 2, k));
                    let to = set_where(m, |z| {
                        !(z % 2 == x || not_one(z, 2, k - 1) || z % prime(k) == 0)
                    });
                    assert_eq!(neg(&from), to, "x={x} k={k}");
                    assert_eq!(neg(&to), from, "inverse x={x} k={k}");
                }
                let from = set_where(m, |z| {
                    z % 2 == x || not_one(z, 2, k) || z % prime(k + 1) == 0
                });
                let to = set_where(m, |z| !(z % 2 == x || not_one(z, 2, k)));
                assert_eq!(neg(&from), to, "x={x} k={k}");
                assert_eq!(neg(&to), from, "inverse x={x} k={k}");
            }
        }
        for base in [true, false] {
            let head = move |z: u32| is_seed(z) == base;
            let m = 30;
            assert_eq!(
                neg(&set_where(m, head)),
                set_where(m, |z| !head(z) || z % 5 == 0)
            );
            for k in 2..=5 {
                let m = primorial(k + 1);
                if k >= 3 {
                    let from = set_where(m, |z| head(z) || not_one(z, 3, k));
                    let to = set_where(m, |z| {
                        !(head(z) || not_one(z, 3, k - 1) || z % prime(k) == 0)
                    });
                    assert_eq!(neg(&from), to);
                    assert_eq!(neg(&to), from);
                }
                let from = set_where(m, |z| head(z) || not_one(z, 3, k) || z % prime(k + 1) == 0);
                let to = set_where(m, |z| !(head(z) || not_one(z, 3, k)));
                assert_eq!(neg(&from), to);
                assert_eq!(neg(&to), from);
            }
        }
    }

    #[test]
    fn classify_examples() {
        let c = PeriodicSet::class;
        assert_eq!(
            classify(&c(1, 2)),
            FamilyTag::I1 {
                x: 1,
                branch: Branch::Chain,
                k: 1,
                complemented: false
            }
        );
        assert_eq!(
            classify(&seed()),
            FamilyTag::I2 {
                base: Base::I,
                branch: Branch::Chain,
                k: 2,
                complemented: false
            }
        );
        assert_eq!(
            classify(&PeriodicSet::new(30, [0]).unwrap()),
            FamilyTag::Consistent
        );
        assert_eq!(tilde_neg(&c(0, 3)), Err(BmodError::Consistent));
    }

    #[test]
    fn negation_examples() {
        let c = PeriodicSet::class;
        assert_eq!(tilde_neg(&c(1, 2)).unwrap(), c(0, 2).union(&c(0, 3)));
        assert_eq!(
            tilde_neg(&seed()).unwrap(),
            seed().complement().union(&c(0, 5))
        );
        assert_eq!(tilde_neg(&c(1, 2).union(&c(0, 3))).unwrap(), c(0, 2));
        assert_eq!(
            tilde_neg(&c(1, 2).union(&c(0, 3)).complement()).unwrap(),
            c(1, 2).union(&PeriodicSet::class_complement(1, 3))
        );
        assert_eq!(hat_neg(&c(0, 2)), c(1, 2).union(&c(0, 3)));
        let x = seed().union(&c(0, 5));
        assert_eq!(tilde_neg(&tilde_neg(&x).unwrap()).unwrap(), x);
        assert_eq!(
            hat_circ(&c(1, 2)),
            c(0, 2).union(&PeriodicSet::class_complement(0, 3))
        );
        assert_eq!(
            hat_circ(&hat_circ(&c(1, 2))),
            seed().union(&PeriodicSet::class_complement(0, 5))
        );
    }

    #[test]
    fn overlapping_readings_agree() {
        // [0]_2 is both a chain head and the complement of [1]_2.
        let readings = matches(&PeriodicSet::class(0, 2));
        assert_eq!(readings.len(), 2);
        assert!(!readings[0].is_complemented());
        assert_eq!(readings[0].neg().set(), readings[1].neg().set());
    }

    #[test]
    fn welldef_small_bound() {
        let report = verify_welldef(4).unwrap();
        assert!(report.passed, "{:#?}", report.checks);
        assert_eq!(report.members.len(), 2 * (2 * (5 + 4) + 2 * (4 + 3)));
        assert_eq!(
            report.contradiction_in_family.witness.to_string(),
            "3 mod 6"
        );
        assert_eq!(report.contradiction_in_family.tag, "I2(base=I,chain,k=2)");
        assert_eq!(verify_welldef(2).unwrap_err(), BmodError::BadKmax(2));
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["checks"][3]["passed"], true);
    }

    #[test]
    fn countermodel() {
        let report = countermodel_report();
        assert!(report.passed, "{report:#?}");
        assert_eq!(report.witnesses[0].witness.to_string(), "25 mod 30");
        assert_eq!(report.witnesses[1].witness.to_string(), "0 mod 10");
        assert!(report.schemas.iter().all(|s| !s.value.is_integers()));
        assert_eq!(
            circ_circ_fails_at(&Bmod, &PeriodicSet::class(1, 2)),
            Some(true)
        );
    }

    /// Random sets over the primes 2, 3, 5, 7 as (modulus, residues) plus the
    /// canonical set.
    fn arb_set() -> impl Strategy<Value = (u32, Vec<u32>, PeriodicSet)> {
        (0u8..16)
            .prop_map(|mask| {
                (0..4)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| PRIMES[i])
                    .product::<u32>()
            })
            .prop_flat_map(|m| {
                (
                    Just(m),
                    proptest::collection::vec(any::<bool>(), m as usize),
                )
            })
            .prop_map(|(m, picks)| {
                let rs: Vec<u32> = (0..m).filter(|&r| picks[r as usize]).collect();
                let s = PeriodicSet::new(m, rs.iter().copied()).unwrap();
                (m, rs, s)
            })
    }

    proptest! {
        #[test]
        fn membership_agrees_with_residues((m, rs, s) in arb_set(), z in -1000i64..1000) {
            prop_assert_eq!(s.contains(z), rs.contains(&(z.rem_euclid(i64::from(m)) as u32)));
        }

        #[test]
        fn boolean_laws((_, _, a) in arb_set(), (_, _, b) in arb_set(), (_, _, c) in arb_set()) {
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            prop_assert_eq!(a.intersection(&b).intersection(&c), a.intersection(&b.intersection(&c)));
            prop_assert_eq!(a.intersection(&b.union(&c)), a.intersection(&b).union(&a.intersection(&c)));
            prop_assert_eq!(a.union(&b).complement(), a.complement().intersection(&b.complement()));
            prop_assert_eq!(a.complement().complement(), a.clone());
            prop_assert_eq!(a.difference(&b), a.intersection(&b.complement()));
        }

        #[test]
        fn operators_stay_periodic((_, _, a) in arb_set()) {
            let n = hat_neg(&a);
            let o = hat_circ(&a);
            prop_assert!(n.modulus() <= primorial(MAX_PRIME_INDEX));
            prop_assert!(o.modulus() <= primorial(MAX_PRIME_INDEX));
            prop_assert!(a.union(&n).is_integers());
            prop_assert_eq!(hat_neg(&n), a.clone());
            prop_assert_eq!(o, a.intersection(&n).complement());
        }
    }

    #[test]
    fn random_consistent_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = 0;
        while seen < 100 {
            let m = [30u32, 42, 105, 210][rng.gen_range(0..4)];
            let s = PeriodicSet::new(m, (0..m).filter(|_| rng.gen_bool(0.5))).unwrap();
            if classify(&s) != FamilyTag::Consistent {
                continue;
            }
            seen += 1;
            let n = hat_neg(&s);
            assert_eq!(n, s.complement());
            assert_eq!(hat_neg(&n), s);
            assert!(hat_circ(&s).is_integers());
            for eq in [
                Equation::ExcludedMiddle,
                Equation::CircIsConsistency,
                Equation::DoubleNegation,
            ] {
                assert!(eq.holds_at(&Bmod, &s), "{eq} at {s}");
            }
        }
    }

    #[test]
    fn family_members_satisfy_equations() {
        for tag in family_members(4) {
            let s = tag.set();
            for eq in [
                Equation::ExcludedMiddle,
                Equation::CircIsConsistency,
                Equation::DoubleNegation,
            ] {
                assert!(eq.holds_at(&Bmod, &s), "{eq} at {tag}");
            }
            assert_ne!(classify(&tilde_neg(&s).unwrap()), FamilyTag::Consistent);
        }
    }
}
