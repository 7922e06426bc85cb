//! Exact set algebra over the naturals `{0, 1, 2, ...}`: the Fréchet filter
//! of cofinite sets, the harmonic measure `theta({n}) = 1/n` (`n >= 1`),
//! Müntz-Szász filter membership, Müntz-Szász sequence certificates, and
//! finite-intersection checks.
//!
//! A [`StructuredSet`] is any Boolean combination of arithmetic progressions,
//! finite sets and geometric sequences `{c r^k : k >= 0}`. Outside the union
//! of its geometric atoms a set agrees with an eventually periodic
//! *skeleton*; along each atom, membership of `c r^k` is eventually periodic
//! in `k`. Both facts make `theta`, emptiness and finiteness exactly
//! decidable.
//!
//! Set expressions:
//!
//! ```text
//! expr    = term { ("∪" | "|" | "∖" | "\") term } ;   (* left associative *)
//! term    = factor { ("∩" | "&") factor } ;
//! factor  = "complement" "(" expr ")" | "(" expr ")"
//!         | "{" [ int { "," int } ] "}"
//!         | "ap" int int          (* {a + k d : k >= 0} *)
//!         | "geom" int int        (* {c r^k : k >= 0}, r >= 2 *)
//!         | "nat" | "empty" ;
//! ```

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{harmonic_sum, serde_rational, Rational};

/// Largest period or threshold a skeleton may reach.
pub const MAX_PERIOD: u64 = 1 << 20;
/// Largest eventual period tracked along a geometric atom.
pub const MAX_ATOM_CYCLE: u64 = 1 << 12;
const MAX_ATOM_PARAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FilterError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("set too large to represent: {0}")]
    TooLarge(String),
    #[error("sequence is not strictly increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("invalid set: {0}")]
    Invalid(String),
}

fn checked_lcm(a: u64, b: u64) -> Result<u64, FilterError> {
    let l = (a / a.gcd(&b)).checked_mul(b).filter(|&l| l <= MAX_PERIOD);
    l.ok_or_else(|| FilterError::TooLarge(format!("period lcm({a}, {b}) exceeds {MAX_PERIOD}")))
}

/// Eventually periodic set: `n < threshold` is a member iff listed in
/// `head`; `n >= threshold` iff `n mod period` is in `residues`.
/// Always kept with minimal period, then minimal threshold.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicSet {
    threshold: u64,
    period: u64,
    head: Vec<u64>,
    residues: Vec<u64>,
}

impl PeriodicSet {
    pub fn empty() -> Self {
        Self {
            threshold: 0,
            period: 1,
            head: vec![],
            residues: vec![],
        }
    }

    pub fn nat() -> Self {
        Self {
            threshold: 0,
            period: 1,
            head: vec![],
            residues: vec![0],
        }
    }

    pub fn finite(elements: &[u64]) -> Result<Self, FilterError> {
        let mut head = elements.to_vec();
        head.sort_unstable();
        head.dedup();
        let threshold = head.last().map_or(0, |m| m + 1);
        if threshold > MAX_PERIOD {
            return Err(FilterError::TooLarge(format!(
                "finite element {} exceeds {MAX_PERIOD}",
                threshold - 1
            )));
        }
        Ok(Self {
            threshold,
            period: 1,
            head,
            residues: vec![],
        }
        .canonical())
    }

    /// `{start + k step : k >= 0}`; `step = 0` gives `{start}`.
    pub fn progression(start: u64, step: u64) -> Result<Self, FilterError> {
        if step == 0 {
            return Self::finite(&[start]);
        }
        if start > MAX_PERIOD || step > MAX_PERIOD {
            return Err(FilterError::TooLarge(format!(
                "progression ap {start} {step}"
            )));
        }
        Ok(Self {
            threshold: start,
            period: step,
            head: vec![],
            residues: vec![start % step],
        }
        .canonical())
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    /// Members below the threshold.
    pub fn head(&self) -> &[u64] {
        &self.head
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn contains(&self, n: u64) -> bool {
        if n < self.threshold {
            self.head.binary_search(&n).is_ok()
        } else {
            self.residues.binary_search(&(n % self.period)).is_ok()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.residues.is_empty()
    }

    fn canonical(mut self) -> Self {
        let p = self.period;
        let mut best = p;
        for q in (1..p).filter(|q| p % q == 0) {
            let ok = self
                .residues
                .iter()
                .all(|&r| self.residues.binary_search(&((r + q) % p)).is_ok());
            if ok {
                best = q;
                break;
            }
        }
        if best < p {
            let mut res: Vec<u64> = self.residues.iter().map(|r| r % best).collect();
            res.sort_unstable();
            res.dedup();
            self.residues = res;
            self.period = best;
        }
        while self.threshold > 0 {
            let n = self.threshold - 1;
            let tail = self.residues.binary_search(&(n % self.period)).is_ok();
            let in_head = self.head.last() == Some(&n);
            if tail != in_head {
                break;
            }
            if in_head {
                self.head.pop();
            }
            self.threshold = n;
        }
        self
    }

    pub fn combine(
        &self,
        other: &Self,
        op: impl Fn(bool, bool) -> bool,
    ) -> Result<Self, FilterError> {
        let period = checked_lcm(self.period, other.period)?;
        let threshold = self.threshold.max(other.threshold);
        let head = (0..threshold)
            .filter(|&n| op(self.contains(n), other.contains(n)))
            .collect();
        let mut residues: Vec<u64> = (threshold..threshold + period)
            .filter(|&n| op(self.contains(n), other.contains(n)))
            .map(|n| n % period)
            .collect();
        residues.sort_unstable();
        Ok(Self {
            threshold,
            period,
            head,
            residues,
        }
        .canonical())
    }

    pub fn complement(&self) -> Self {
        let head = (0..self.threshold)
            .filter(|n| self.head.binary_search(n).is_err())
            .collect();
        let residues = (0..self.period)
            .filter(|r| self.residues.binary_search(r).is_err())
            .collect();
        Self {
            threshold: self.threshold,
            period: self.period,
            head,
            residues,
        }
    }

    /// Witness progression inside the set with all elements `>= 1`.
    fn progression_witness(&self) -> Option<Progression> {
        let r = *self.residues.first()?;
        let base = self.threshold.max(1);
        let start = base + (r + self.period - base % self.period) % self.period;
        Some(Progression {
            start,
            step: self.period,
        })
    }

    fn to_expr(&self) -> SetExpr {
        let mut parts = Vec::new();
        if self.threshold == 0 && self.period == 1 && self.residues == [0] {
            return SetExpr::Nat;
        }
        if !self.head.is_empty() {
            parts.push(SetExpr::Finite(self.head.clone()));
        }
        for &r in &self.residues {
            let t = self.threshold;
            let start = t + (r + self.period - t % self.period) % self.period;
            parts.push(SetExpr::Progression {
                start,
                step: self.period,
            });
        }
        parts
            .into_iter()
            .reduce(|a, b| SetExpr::Union(Box::new(a), Box::new(b)))
            .unwrap_or(SetExpr::Empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Progression {
    pub start: u64,
    pub step: u64,
}

/// `{coef * ratio^k : k >= 0}` with `coef >= 1`, `ratio >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Geometric {
    pub coef: u64,
    pub ratio: u64,
}

impl Geometric {
    pub fn new(coef: u64, ratio: u64) -> Result<Self, FilterError> {
        if coef == 0 || ratio < 2 || coef > MAX_ATOM_PARAM || ratio > MAX_ATOM_PARAM {
            return Err(FilterError::Invalid(format!(
                "geom {coef} {ratio}: need 1 <= c and 2 <= r, both <= 2^32"
            )));
        }
        Ok(Self { coef, ratio })
    }

    pub fn element(&self, k: u64) -> BigUint {
        BigUint::from(self.coef) * BigUint::from(self.ratio).pow(k as u32)
    }

    pub fn contains(&self, n: &BigUint) -> bool {
        let c = BigUint::from(self.coef);
        if n < &c || !(n % &c).is_zero() {
            return false;
        }
        let r = BigUint::from(self.ratio);
        let mut q = n / c;
        while q > BigUint::one() {
            if !(&q % &r).is_zero() {
                return false;
            }
            q /= &r;
        }
        true
    }

    /// `theta` of the whole sequence, `r / (c (r - 1))`.
    pub fn theta(&self) -> Rational {
        Rational::new(
            BigInt::from(self.ratio),
            BigInt::from(self.coef) * BigInt::from(self.ratio - 1),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Nat,
    Empty,
    Finite(Vec<u64>),
    Progression { start: u64, step: u64 },
    Geometric(Geometric),
    Union(Box<SetExpr>, Box<SetExpr>),
    Intersection(Box<SetExpr>, Box<SetExpr>),
    Difference(Box<SetExpr>, Box<SetExpr>),
    Complement(Box<SetExpr>),
}

impl SetExpr {
    pub fn contains(&self, n: &BigUint) -> bool {
        match self {
            SetExpr::Nat => true,
            SetExpr::Empty => false,
            SetExpr::Finite(v) => n.to_u64().is_some_and(|m| v.contains(&m)),
            SetExpr::Progression { start, step } => {
                let s = BigUint::from(*start);
                if *step == 0 {
                    return n == &s;
                }
                n >= &s && ((n - &s) % BigUint::from(*step)).is_zero()
            }
            SetExpr::Geometric(g) => g.contains(n),
            SetExpr::Union(a, b) => a.contains(n) || b.contains(n),
            SetExpr::Intersection(a, b) => a.contains(n) && b.contains(n),
            SetExpr::Difference(a, b) => a.contains(n) && !b.contains(n),
            SetExpr::Complement(a) => !a.contains(n),
        }
    }

    fn skeleton(&self) -> Result<PeriodicSet, FilterError> {
        Ok(match self {
            SetExpr::Nat => PeriodicSet::nat(),
            SetExpr::Empty | SetExpr::Geometric(_) => PeriodicSet::empty(),
            SetExpr::Finite(v) => PeriodicSet::finite(v)?,
            SetExpr::Progression { start, step } => PeriodicSet::progression(*start, *step)?,
            SetExpr::Union(a, b) => a.skeleton()?.combine(&b.skeleton()?, |x, y| x || y)?,
            SetExpr::Intersection(a, b) => a.skeleton()?.combine(&b.skeleton()?, |x, y| x && y)?,
            SetExpr::Difference(a, b) => a.skeleton()?.combine(&b.skeleton()?, |x, y| x && !y)?,
            SetExpr::Complement(a) => a.skeleton()?.complement(),
        })
    }

    fn visit(&self, f: &mut impl FnMut(&SetExpr)) {
        f(self);
        match self {
            SetExpr::Union(a, b) | SetExpr::Intersection(a, b) | SetExpr::Difference(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            SetExpr::Complement(a) => a.visit(f),
            _ => {}
        }
    }

    fn atoms(&self) -> Vec<Geometric> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let SetExpr::Geometric(g) = e {
                out.push(*g);
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Largest explicit constant and lcm of all progression steps.
    fn constants(&self) -> Result<(u64, u64), FilterError> {
        let mut max_const = 0u64;
        let mut modulus = 1u64;
        let mut err = None;
        self.visit(&mut |e| match e {
            SetExpr::Finite(v) => max_const = max_const.max(v.iter().copied().max().unwrap_or(0)),
            SetExpr::Progression { start, step } => {
                max_const = max_const.max(*start);
                if *step > 0 {
                    match checked_lcm(modulus, *step) {
                        Ok(l) => modulus = l,
                        Err(e) => err = Some(e),
                    }
                }
            }
            _ => {}
        });
        match err {
            Some(e) => Err(e),
            None => Ok((max_const, modulus)),
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Nat => write!(f, "nat"),
            SetExpr::Empty => write!(f, "empty"),
            SetExpr::Finite(v) => {
                let items: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "{{{}}}", items.join(","))
            }
            SetExpr::Progression { start, step } => write!(f, "ap {start} {step}"),
            SetExpr::Geometric(g) => write!(f, "geom {} {}", g.coef, g.ratio),
            SetExpr::Union(a, b) => write!(f, "({a} ∪ {b})"),
            SetExpr::Intersection(a, b) => write!(f, "({a} ∩ {b})"),
            SetExpr::Difference(a, b) => write!(f, "({a} ∖ {b})"),
            SetExpr::Complement(a) => write!(f, "complement({a})"),
        }
    }
}

/// A Boolean combination of progressions, finite sets and geometric atoms.
///
/// Equality is structural: two sets without geometric atoms are equal iff
/// they contain the same numbers; with atoms, the defining expression is
/// compared as well.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuredSet {
    skeleton: PeriodicSet,
    atoms: Vec<Geometric>,
    expr: Option<SetExpr>,
}

/// Membership of `c r^k` along one atom, for elements not owned by an
/// earlier atom: `prefix[k]` for `k < prefix.len()`, then `cycle` repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
struct AtomTrace {
    prefix: Vec<bool>,
    cycle: Vec<bool>,
}

impl StructuredSet {
    pub fn from_expr(expr: SetExpr) -> Result<Self, FilterError> {
        let skeleton = expr.skeleton()?;
        let atoms = expr.atoms();
        let expr = if atoms.is_empty() { None } else { Some(expr) };
        Ok(Self {
            skeleton,
            atoms,
            expr,
        })
    }

    pub fn from_periodic(p: PeriodicSet) -> Self {
        Self {
            skeleton: p,
            atoms: vec![],
            expr: None,
        }
    }

    pub fn nat() -> Self {
        Self::from_periodic(PeriodicSet::nat())
    }

    pub fn empty() -> Self {
        Self::from_periodic(PeriodicSet::empty())
    }

    pub fn finite(elements: &[u64]) -> Result<Self, FilterError> {
        Ok(Self::from_periodic(PeriodicSet::finite(elements)?))
    }

    pub fn progression(start: u64, step: u64) -> Result<Self, FilterError> {
        Ok(Self::from_periodic(PeriodicSet::progression(start, step)?))
    }

    pub fn geometric(coef: u64, ratio: u64) -> Result<Self, FilterError> {
        Self::from_expr(SetExpr::Geometric(Geometric::new(coef, ratio)?))
    }

    /// `nat` minus a finite set.
    pub fn cofinite(removed: &[u64]) -> Result<Self, FilterError> {
        Ok(Self::finite(removed)?.complement())
    }

    pub fn skeleton(&self) -> &PeriodicSet {
        &self.skeleton
    }

    pub fn atoms(&self) -> &[Geometric] {
        &self.atoms
    }

    pub fn to_expr(&self) -> SetExpr {
        self.expr.clone().unwrap_or_else(|| self.skeleton.to_expr())
    }

    fn in_atoms(&self, n: &BigUint) -> bool {
        self.atoms.iter().any(|g| g.contains(n))
    }

    pub fn contains_big(&self, n: &BigUint) -> bool {
        match &self.expr {
            Some(e) if self.in_atoms(n) => e.contains(n),
            _ => n.to_u64().is_some_and(|m| self.skeleton.contains(m)),
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        self.contains_big(&BigUint::from(n))
    }

    fn binary(
        &self,
        other: &Self,
        op: fn(bool, bool) -> bool,
        wrap: fn(Box<SetExpr>, Box<SetExpr>) -> SetExpr,
    ) -> Result<Self, FilterError> {
        let skeleton = self.skeleton.combine(&other.skeleton, op)?;
        let mut atoms: Vec<Geometric> = self.atoms.iter().chain(&other.atoms).copied().collect();
        atoms.sort_unstable();
        atoms.dedup();
        let expr = if atoms.is_empty() {
            None
        } else {
            Some(wrap(Box::new(self.to_expr()), Box::new(other.to_expr())))
        };
        Ok(Self {
            skeleton,
            atoms,
            expr,
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self, FilterError> {
        self.binary(other, |x, y| x || y, SetExpr::Union)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, FilterError> {
        self.binary(other, |x, y| x && y, SetExpr::Intersection)
    }

    pub fn difference(&self, other: &Self) -> Result<Self, FilterError> {
        self.binary(other, |x, y| x && !y, SetExpr::Difference)
    }

    pub fn complement(&self) -> Self {
        Self {
            skeleton: self.skeleton.complement(),
            atoms: self.atoms.clone(),
            expr: self
                .expr
                .as_ref()
                .map(|e| SetExpr::Complement(Box::new(e.clone()))),
        }
    }

    fn atom_traces(&self) -> Result<Vec<(Geometric, AtomTrace)>, FilterError> {
        let Some(expr) = &self.expr else {
            return Ok(vec![]);
        };
        let (max_const, modulus) = expr.constants()?;
        let mut out = Vec::with_capacity(self.atoms.len());
        for (i, g) in self.atoms.iter().enumerate() {
            let (mut start, mut period) = residue_cycle(g, modulus);
            let mut k = 0u64;
            while g.element(k) <= BigUint::from(max_const) {
                k += 1;
            }
            start = start.max(k);
            for h in self.atoms.iter().filter(|h| *h != g) {
                let (from, step) = overlap_structure(g, h);
                start = start.max(from);
                period = period.lcm(&step);
                if period > MAX_ATOM_CYCLE {
                    return Err(FilterError::TooLarge(format!(
                        "eventual period along geom {} {} exceeds {MAX_ATOM_CYCLE}",
                        g.coef, g.ratio
                    )));
                }
            }
            let member = |k: u64| {
                let n = g.element(k);
                expr.contains(&n) && !self.atoms[..i].iter().any(|h| h.contains(&n))
            };
            let prefix = (0..start).map(member).collect();
            let cycle = (start..start + period).map(member).collect();
            out.push((*g, AtomTrace { prefix, cycle }));
        }
        Ok(out)
    }

    /// Exactly decides whether the set is finite.
    pub fn is_finite(&self) -> Result<bool, FilterError> {
        if !self.skeleton.is_finite() {
            return Ok(false);
        }
        Ok(self
            .atom_traces()?
            .iter()
            .all(|(_, t)| t.cycle.iter().all(|b| !b)))
    }

    pub fn is_empty(&self) -> Result<bool, FilterError> {
        if !self.skeleton.is_finite() {
            return Ok(false);
        }
        if self
            .skeleton
            .head
            .iter()
            .any(|&n| !self.in_atoms(&BigUint::from(n)))
        {
            return Ok(false);
        }
        Ok(self
            .atom_traces()?
            .iter()
            .all(|(_, t)| t.prefix.iter().chain(&t.cycle).all(|b| !b)))
    }

    /// Smallest element, searching up to `limit` (skeleton members first).
    pub fn first_element(&self, limit: u64) -> Option<u64> {
        (0..=limit).find(|&n| self.contains(n))
    }
}

/// `c r^k mod m` is periodic for `k >= start` with the returned period.
fn residue_cycle(g: &Geometric, m: u64) -> (u64, u64) {
    if m == 1 {
        return (0, 1);
    }
    let mut seen = HashMap::new();
    let mut x = g.coef % m;
    let mut k = 0u64;
    loop {
        if let Some(&first) = seen.get(&x) {
            return (first, k - first);
        }
        seen.insert(x, k);
        x = ((x as u128 * g.ratio as u128) % m as u128) as u64;
        k += 1;
    }
}

fn factor(mut n: u64) -> Vec<(u64, i64)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// For atoms `g = c r^k` and `h = c' r'^j`, the set of `k` with `g_k` in `h`
/// is periodic with the returned period for `k >= start`.
fn overlap_structure(g: &Geometric, h: &Geometric) -> (u64, u64) {
    let fs = [
        factor(g.coef),
        factor(g.ratio),
        factor(h.coef),
        factor(h.ratio),
    ];
    let mut primes: Vec<u64> = fs.iter().flatten().map(|&(p, _)| p).collect();
    primes.sort_unstable();
    primes.dedup();
    let vec_of = |f: &[(u64, i64)]| -> Vec<i64> {
        primes
            .iter()
            .map(|p| f.iter().find(|(q, _)| q == p).map_or(0, |&(_, e)| e))
            .collect()
    };
    let a = vec_of(&fs[1]);
    let b = vec_of(&fs[3]);
    let d: Vec<i64> = vec_of(&fs[2])
        .iter()
        .zip(vec_of(&fs[0]))
        .map(|(x, y)| x - y)
        .collect();
    // Solve k a - j b = d with k, j >= 0.
    let n = primes.len();
    let pair = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| a[i] * b[j] != a[j] * b[i]);
    match pair {
        Some((i, j)) => {
            let det = -a[i] * b[j] + b[i] * a[j];
            let k = (b[i] * d[j] - d[i] * b[j]) as f64 / det as f64;
            (k.abs().ceil() as u64 + 1, 1)
        }
        None => {
            let alpha = a.iter().fold(0i64, |acc, &x| acc.gcd(&x));
            let beta = b.iter().fold(0i64, |acc, &x| acc.gcd(&x));
            let u: Vec<i64> = a.iter().map(|x| x / alpha).collect();
            let Some(idx) = u.iter().position(|&x| x != 0) else {
                return (0, 1);
            };
            if d[idx] % u[idx] != 0 {
                return (0, 1);
            }
            let gamma = d[idx] / u[idx];
            if d.iter().zip(&u).any(|(x, y)| *x != gamma * y) {
                return (0, 1);
            }
            let start = if gamma > 0 {
                (gamma + alpha - 1) / alpha
            } else {
                0
            };
            (start as u64, (beta / alpha.gcd(&beta)) as u64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Theta {
    Converges {
        #[serde(with = "serde_rational")]
        value: Rational,
    },
    /// The set contains the progression minus finitely many geometric atoms.
    Diverges { witness: Progression },
}

/// `theta(S) = sum_{n in S, n >= 1} 1/n`, exact when finite.
pub fn theta(s: &StructuredSet) -> Result<Theta, FilterError> {
    if let Some(witness) = s.skeleton.progression_witness() {
        return Ok(Theta::Diverges { witness });
    }
    let mut value = Rational::zero();
    for &n in &s.skeleton.head {
        if n >= 1 && !s.in_atoms(&BigUint::from(n)) {
            value += Rational::new(BigInt::one(), BigInt::from(n));
        }
    }
    for (g, t) in s.atom_traces()? {
        let inv = |k: u64| Rational::new(BigInt::one(), BigInt::from(g.element(k)));
        for (k, _) in t.prefix.iter().enumerate().filter(|(_, b)| **b) {
            value += inv(k as u64);
        }
        let start = t.prefix.len() as u64;
        let q = t.cycle.len() as u64;
        let rq = BigInt::from(g.ratio).pow(q as u32);
        let factor = Rational::new(rq.clone(), rq - BigInt::one());
        for (j, _) in t.cycle.iter().enumerate().filter(|(_, b)| **b) {
            value += inv(start + j as u64) * &factor;
        }
    }
    Ok(Theta::Converges { value })
}

/// Complement is finite.
pub fn in_frechet(s: &StructuredSet) -> Result<bool, FilterError> {
    s.complement().is_finite()
}

/// `theta` of the complement is finite.
pub fn in_msz_filter(s: &StructuredSet) -> Result<bool, FilterError> {
    Ok(matches!(theta(&s.complement())?, Theta::Converges { .. }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Fip {
    /// `fast_path`: every member but at most one is cofinite and the
    /// remaining one is infinite.
    Yes { fast_path: bool },
    /// A minimal subfamily (by index) with empty intersection.
    No { witness: Vec<usize> },
}

fn intersect_all(family: &[&StructuredSet]) -> Result<StructuredSet, FilterError> {
    family
        .iter()
        .try_fold(StructuredSet::nat(), |acc, s| acc.intersection(s))
}

/// For a finite family, every finite subfamily meets iff the whole family
/// does, so a single intersection decides; a failing family is shrunk to a
/// minimal witness.
pub fn has_fip(family: &[StructuredSet]) -> Result<Fip, FilterError> {
    let mut non_cofinite = Vec::new();
    for (i, s) in family.iter().enumerate() {
        if !in_frechet(s)? {
            non_cofinite.push(i);
        }
    }
    match non_cofinite.as_slice() {
        [] => return Ok(Fip::Yes { fast_path: true }),
        [i] if !family[*i].is_finite()? => return Ok(Fip::Yes { fast_path: true }),
        _ => {}
    }
    let all: Vec<&StructuredSet> = family.iter().collect();
    if !intersect_all(&all)?.is_empty()? {
        return Ok(Fip::Yes { fast_path: false });
    }
    let mut keep: Vec<usize> = (0..family.len()).collect();
    let mut i = 0;
    while i < keep.len() {
        let trial: Vec<&StructuredSet> = keep
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &k)| &family[k])
            .collect();
        if intersect_all(&trial)?.is_empty()? {
            keep.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(Fip::No { witness: keep })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "snake_case")]
pub enum MszEvidence {
    /// Contains the progression, so the harmonic series diverges.
    Progression { witness: Progression },
    /// Each listed run `[start, end]` lies in the sequence and has harmonic
    /// sum at least 1/2.
    Runs {
        runs: Vec<(u64, u64)>,
        #[serde(with = "serde_rational")]
        harmonic_sum: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MszVerdict {
    Certified {
        evidence: MszEvidence,
    },
    NotMsz {
        #[serde(with = "serde_rational")]
        theta: Rational,
    },
    UndecidedPrefix {
        #[serde(with = "serde_rational")]
        partial_sum: Rational,
        reason: Option<String>,
    },
}

pub fn is_msz_set(s: &StructuredSet) -> Result<MszVerdict, FilterError> {
    Ok(match theta(s)? {
        Theta::Diverges { witness } => MszVerdict::Certified {
            evidence: MszEvidence::Progression { witness },
        },
        Theta::Converges { value } => MszVerdict::NotMsz { theta: value },
    })
}

/// Checks an explicit increasing prefix. With `runs`, every run must be a
/// contiguous block of the prefix with harmonic sum `>= 1/2`; an unbounded
/// continuation of such runs has divergent harmonic sum.
pub fn is_msz_sequence(
    prefix: &[u64],
    runs: Option<&[(u64, u64)]>,
) -> Result<MszVerdict, FilterError> {
    if let Some(i) = prefix.windows(2).position(|w| w[0] >= w[1]) {
        return Err(FilterError::NotIncreasing { index: i + 1 });
    }
    let partial_sum = prefix
        .iter()
        .filter(|&&n| n >= 1)
        .fold(Rational::zero(), |acc, &n| {
            acc + Rational::new(BigInt::one(), BigInt::from(n))
        });
    let Some(runs) = runs else {
        return Ok(MszVerdict::UndecidedPrefix {
            partial_sum,
            reason: None,
        });
    };
    let undecided = |reason: String| {
        Ok(MszVerdict::UndecidedPrefix {
            partial_sum: partial_sum.clone(),
            reason: Some(reason),
        })
    };
    if runs.is_empty() {
        return undecided("empty run certificate".into());
    }
    if runs.windows(2).any(|w| w[0].1 >= w[1].0) {
        return undecided("runs overlap or are unordered".into());
    }
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut total = Rational::zero();
    for &(start, end) in runs {
        if start < 1 || end < start {
            return undecided(format!("bad run [{start}, {end}]"));
        }
        let Ok(lo) = prefix.binary_search(&start) else {
            return undecided(format!("run start {start} not in prefix"));
        };
        let len = (end - start) as usize;
        if prefix.get(lo + len) != Some(&end) {
            return undecided(format!("run [{start}, {end}] is not contiguous in prefix"));
        }
        let h = harmonic_sum(start, end);
        if h < half {
            return undecided(format!("run [{start}, {end}] has harmonic sum below 1/2"));
        }
        total += h;
    }
    Ok(MszVerdict::Certified {
        evidence: MszEvidence::Runs {
            runs: runs.to_vec(),
            harmonic_sum: total,
        },
    })
}

impl fmt::Display for StructuredSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl std::str::FromStr for StructuredSet {
    type Err = FilterError;
    fn from_str(s: &str) -> Result<Self, FilterError> {
        StructuredSet::from_expr(parse_expr(s)?)
    }
}

impl Serialize for StructuredSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for StructuredSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(u64),
    Word(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, FilterError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
        } else if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = j + d.len_utf8();
                it.next();
            }
            let n = src[i..end].parse().map_err(|_| FilterError::Parse {
                offset: i,
                message: "number too large".into(),
            })?;
            out.push((i, Tok::Num(n)));
        } else if c.is_ascii_alphabetic() {
            let mut end = i;
            while let Some(&(j, d)) = it.peek() {
                if !d.is_ascii_alphabetic() {
                    break;
                }
                end = j + d.len_utf8();
                it.next();
            }
            out.push((i, Tok::Word(src[i..end].to_ascii_lowercase())));
        } else {
            let sym = match c {
                '∪' | '|' => '|',
                '∖' | '\\' => '\\',
                '∩' | '&' => '&',
                '(' | ')' | '{' | '}' | ',' => c,
                _ => {
                    return Err(FilterError::Parse {
                        offset: i,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            };
            out.push((i, Tok::Sym(sym)));
            it.next();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, FilterError> {
        Err(FilterError::Parse {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), FilterError> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {c:?}"))
        }
    }

    fn number(&mut self) -> Result<u64, FilterError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a number"),
        }
    }

    fn expr(&mut self) -> Result<SetExpr, FilterError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('|')) => {
                    self.pos += 1;
                    lhs = SetExpr::Union(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Sym('\\')) => {
                    self.pos += 1;
                    lhs = SetExpr::Difference(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<SetExpr, FilterError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Tok::Sym('&')) {
            self.pos += 1;
            lhs = SetExpr::Intersection(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<SetExpr, FilterError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        self.pos += 1;
        match tok {
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym('{') => {
                let mut v = Vec::new();
                if self.peek() != Some(&Tok::Sym('}')) {
                    v.push(self.number()?);
                    while self.peek() == Some(&Tok::Sym(',')) {
                        self.pos += 1;
                        v.push(self.number()?);
                    }
                }
                self.expect('}')?;
                v.sort_unstable();
                v.dedup();
                Ok(SetExpr::Finite(v))
            }
            Tok::Word(w) => match w.as_str() {
                "nat" => Ok(SetExpr::Nat),
                "empty" => Ok(SetExpr::Empty),
                "ap" => {
                    let start = self.number()?;
                    let step = self.number()?;
                    Ok(SetExpr::Progression { start, step })
                }
                "geom" => {
                    let offset = self.offset();
                    let coef = self.number()?;
                    let ratio = self.number()?;
                    let g = Geometric::new(coef, ratio).map_err(|e| FilterError::Parse {
                        offset,
                        message: e.to_string(),
                    })?;
                    Ok(SetExpr::Geometric(g))
                }
                "complement" => {
                    self.expect('(')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    Ok(SetExpr::Complement(Box::new(e)))
                }
                _ => {
                    self.pos -= 1;
                    self.err(format!("unknown keyword {w:?}"))
                }
            },
            _ => {
                self.pos -= 1;
                self.err("expected a set")
            }
        }
    }
}

pub fn parse_expr(src: &str) -> Result<SetExpr, FilterError> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        len: src.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}
