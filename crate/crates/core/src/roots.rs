//! Exact real-root isolation (Sturm sequences with rational bisection) and the
//! sign / bound queries built on it.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::poly::Poly;
use crate::rational::{int, rat, Rational};

/// An isolated real root: either an exact rational root, or an open interval
/// `(lo, hi)` containing exactly one root, with `p(lo) != 0 != p(hi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootInterval {
    Exact(Rational),
    Open(Rational, Rational),
}

impl RootInterval {
    pub fn lo(&self) -> &Rational {
        match self {
            RootInterval::Exact(r) => r,
            RootInterval::Open(lo, _) => lo,
        }
    }

    pub fn hi(&self) -> &Rational {
        match self {
            RootInterval::Exact(r) => r,
            RootInterval::Open(_, hi) => hi,
        }
    }

    pub fn midpoint(&self) -> Rational {
        (self.lo() + self.hi()) / int(2)
    }
}

/// Sturm chain of a polynomial; counts distinct real roots on half-open intervals.
#[derive(Debug, Clone)]
pub struct SturmChain {
    chain: Vec<Poly>,
}

impl SturmChain {
    pub fn new(p: &Poly) -> Self {
        let mut chain = vec![p.primitive().1];
        if p.degree().unwrap_or(0) == 0 {
            return Self { chain };
        }
        chain.push(p.derivative().primitive().1);
        loop {
            let n = chain.len();
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            // Rescaling by a positive constant keeps the sign pattern.
            let (c, prim) = (-&r).primitive();
            chain.push(if c.is_negative() { -&prim } else { prim });
        }
        Self { chain }
    }

    pub fn variations(&self, x: &Rational) -> usize {
        let mut last = Ordering::Equal;
        let mut count = 0;
        for q in &self.chain {
            let s = q.eval(x).cmp(&Rational::zero());
            if s == Ordering::Equal {
                continue;
            }
            if last != Ordering::Equal && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    /// Number of distinct real roots in `(lo, hi]`.
    pub fn count(&self, lo: &Rational, hi: &Rational) -> usize {
        self.variations(lo).saturating_sub(self.variations(hi))
    }
}

/// Isolates all distinct real roots of `p` in the open interval `(lo, hi)`,
/// returned in increasing order.
pub fn isolate_roots(p: &Poly, lo: &Rational, hi: &Rational) -> Vec<RootInterval> {
    assert!(!p.is_zero(), "cannot isolate roots of the zero polynomial");
    if lo >= hi || p.degree() == Some(0) {
        return Vec::new();
    }
    let sf = p.squarefree();
    let sturm = SturmChain::new(&sf);
    let mut out = Vec::new();
    // Half-open work items (a, b] with a known root count.
    let mut stack = vec![(lo.clone(), hi.clone(), sturm.count(lo, hi))];
    while let Some((a, b, c)) = stack.pop() {
        if c == 0 {
            continue;
        }
        let b_root = sf.eval(&b).is_zero();
        if c == 1 {
            if b_root {
                if &b < hi {
                    out.push(RootInterval::Exact(b));
                }
            } else {
                out.push(detach_left(&sf, &sturm, a, b));
            }
            continue;
        }
        let m = (&a + &b) / int(2);
        let left = sturm.count(&a, &m);
        stack.push((m.clone(), b, c - left));
        stack.push((a, m, left));
    }
    out.sort_by(|x, y| x.lo().cmp(y.lo()));
    out
}

/// Given `(a, b)` holding exactly one root with `p(b) != 0`, shrinks it until
/// the left end is not a root either.
fn detach_left(sf: &Poly, sturm: &SturmChain, mut a: Rational, mut b: Rational) -> RootInterval {
    while sf.eval(&a).is_zero() {
        let m = (&a + &b) / int(2);
        if sf.eval(&m).is_zero() {
            return RootInterval::Exact(m);
        }
        if sturm.count(&a, &m) == 0 {
            a = m;
        } else {
            b = m;
        }
    }
    RootInterval::Open(a, b)
}

/// Bisects an isolating interval until its width is at most `width`.
pub fn refine(p: &Poly, root: &RootInterval, width: &Rational) -> RootInterval {
    match root {
        RootInterval::Exact(_) => root.clone(),
        RootInterval::Open(lo, hi) => {
            let mut lo = lo.clone();
            let mut hi = hi.clone();
            let s_lo = p.eval(&lo).is_positive();
            while &(&hi - &lo) > width {
                let m = (&lo + &hi) / int(2);
                let v = p.eval(&m);
                if v.is_zero() {
                    return RootInterval::Exact(m);
                }
                if v.is_positive() == s_lo {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            RootInterval::Open(lo, hi)
        }
    }
}

/// Sign of `p` on `(r - eps, r)` for all small `eps > 0`.
pub fn sign_left_of(p: &Poly, r: &Rational) -> Ordering {
    let mut q = p.clone();
    let mut flip = false;
    while !q.is_zero() {
        let v = q.eval(r);
        if !v.is_zero() {
            let s = v.cmp(&Rational::zero());
            return if flip { s.reverse() } else { s };
        }
        q = q.derivative();
        flip = !flip;
    }
    Ordering::Equal
}

/// Sign of `p` on `(r, r + eps)` for all small `eps > 0`.
pub fn sign_right_of(p: &Poly, r: &Rational) -> Ordering {
    let mut q = p.clone();
    while !q.is_zero() {
        let v = q.eval(r);
        if !v.is_zero() {
            return v.cmp(&Rational::zero());
        }
        q = q.derivative();
    }
    Ordering::Equal
}

/// Sample points that meet every maximal sign-constant subinterval of `[lo, hi]`.
fn sign_samples(p: &Poly, lo: &Rational, hi: &Rational) -> Vec<Rational> {
    let roots = isolate_roots(p, lo, hi);
    let mut pts = vec![lo.clone()];
    for r in &roots {
        match r {
            RootInterval::Exact(x) => {
                // Probe both sides through the neighbouring gap endpoints below.
                pts.push(x.clone());
            }
            RootInterval::Open(a, b) => {
                pts.push(a.clone());
                pts.push(b.clone());
            }
        }
    }
    pts.push(hi.clone());
    // Add midpoints between consecutive samples so gaps adjacent to exact
    // roots are also sampled.
    let mut out = Vec::with_capacity(pts.len() * 2);
    for w in pts.windows(2) {
        out.push(w[0].clone());
        if w[0] < w[1] {
            out.push((&w[0] + &w[1]) / int(2));
        }
    }
    out.push(hi.clone());
    out
}

/// Checks `p >= 0` on the closed interval `[lo, hi]`. On failure returns a
/// rational point where `p` is negative.
pub fn check_nonnegative(p: &Poly, lo: &Rational, hi: &Rational) -> Result<(), Rational> {
    if p.is_zero() || bernstein_nonnegative(p, lo, hi) {
        return Ok(());
    }
    for x in sign_samples(p, lo, hi) {
        if p.eval(&x).is_negative() {
            return Err(x);
        }
    }
    Ok(())
}

/// Sufficient test for `p >= 0` on `[lo, hi]`: all Bernstein coefficients
/// nonnegative, after up to `BERNSTEIN_DEPTH` rounds of halving.
fn bernstein_nonnegative(p: &Poly, lo: &Rational, hi: &Rational) -> bool {
    let n = p.degree().unwrap_or(0);
    // q(t) = p(lo + (hi - lo) t) on [0, 1].
    let width = hi - lo;
    let shifted = p.shift(lo);
    let mut scale = Rational::one();
    let q: Vec<Rational> = shifted
        .coeffs()
        .iter()
        .map(|c| {
            let v = c * &scale;
            scale *= &width;
            v
        })
        .collect();
    // b_i = sum_{j <= i} C(i, j) / C(n, j) q_j.
    let mut binom = vec![vec![Rational::one(); n + 1]; n + 1];
    for i in 1..=n {
        for j in 1..i {
            binom[i][j] = &binom[i - 1][j - 1] + &binom[i - 1][j];
        }
    }
    let coeffs: Vec<Rational> = (0..=n)
        .map(|i| {
            (0..=i.min(q.len().saturating_sub(1)))
                .map(|j| &binom[i][j] / &binom[n][j] * &q[j])
                .sum()
        })
        .collect();
    bernstein_split_check(coeffs, BERNSTEIN_DEPTH)
}

const BERNSTEIN_DEPTH: u32 = 4;

fn bernstein_split_check(b: Vec<Rational>, depth: u32) -> bool {
    if b.iter().all(|c| !c.is_negative()) {
        return true;
    }
    if depth == 0 || b[0].is_negative() || b[b.len() - 1].is_negative() {
        return false;
    }
    // de Casteljau at t = 1/2.
    let half = rat(1, 2);
    let mut left = Vec::with_capacity(b.len());
    let mut right = Vec::with_capacity(b.len());
    let mut row = b;
    while !row.is_empty() {
        left.push(row[0].clone());
        right.push(row[row.len() - 1].clone());
        row = row.windows(2).map(|w| (&w[0] + &w[1]) * &half).collect();
    }
    right.reverse();
    bernstein_split_check(left, depth - 1) && bernstein_split_check(right, depth - 1)
}

/// Sequence of nonzero signs `p` takes on `[lo, hi]`, left to right, with
/// consecutive repeats merged.
pub fn sign_pattern(p: &Poly, lo: &Rational, hi: &Rational) -> Vec<Ordering> {
    if p.is_zero() {
        return Vec::new();
    }
    let mut out: Vec<Ordering> = Vec::new();
    for x in sign_samples(p, lo, hi) {
        let s = p.eval(&x).cmp(&Rational::zero());
        if s != Ordering::Equal && out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

/// Rational interval enclosure of `p` over `[lo, hi]` by interval Horner.
pub fn interval_eval(p: &Poly, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    let mut a = Rational::zero();
    let mut b = Rational::zero();
    for c in p.coeffs().iter().rev() {
        let prods = [&a * lo, &a * hi, &b * lo, &b * hi];
        let mn = prods.iter().min().unwrap().clone();
        let mx = prods.iter().max().unwrap().clone();
        a = mn + c;
        b = mx + c;
    }
    (a, b)
}

/// A rational lower bound for `min p` over `[lo, hi]`, tight up to `tol` on
/// the interior critical points.
pub fn min_lower_bound(p: &Poly, lo: &Rational, hi: &Rational, tol: &Rational) -> Rational {
    let mut best = std::cmp::min(p.eval(lo), p.eval(hi));
    let dp = p.derivative();
    if dp.is_zero() {
        return best;
    }
    for r in isolate_roots(&dp, lo, hi) {
        let cand = match refine(&dp, &r, tol) {
            RootInterval::Exact(x) => p.eval(&x),
            RootInterval::Open(a, b) => interval_eval(p, &a, &b).0,
        };
        if cand < best {
            best = cand;
        }
    }
    best
}

/// A rational upper bound for `max |p|` over `[lo, hi]`.
pub fn max_abs_upper_bound(p: &Poly, lo: &Rational, hi: &Rational, tol: &Rational) -> Rational {
    let lower = min_lower_bound(p, lo, hi, tol);
    let upper = -min_lower_bound(&-p, lo, hi, tol);
    std::cmp::max(lower.abs(), upper.abs())
}

/// Default refinement tolerance for bound queries on an interval.
pub fn default_tolerance(lo: &Rational, hi: &Rational) -> Rational {
    (hi - lo) * rat(1, 1 << 20)
}
