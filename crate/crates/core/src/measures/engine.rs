//! Integer pipeline for exact moments of piecewise-polynomial densities.
//!
//! Each piece `p` on `[l, r]` is split as `p = s * p^` with `p^` primitive
//! integer. With a common breakpoint denominator `D`, a common scalar
//! denominator `Q` and `Lambda = lcm(k+1, ..., k+dmax+1)`,
//!
//! ```text
//! s_k = (sum_p sigma_p * N_p(k)) / (Q * Lambda * D^(k+dmax+1))
//! N_p(k) = sum_j c_pj * (Lambda/(k+j+1)) * (R^(k+j+1) - L^(k+j+1))
//! ```
//!
//! where `L = l*D`, `R = r*D`, `sigma_p = s_p*Q` and `c_pj = p^_j * D^(dmax-j)`
//! are all integers. The denominator is positive, so the sign of a moment is
//! the sign of the integer numerator.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::poly::Poly;
use crate::rational::{log2_bigint, Rational};

#[derive(Debug, Clone)]
struct EnginePiece {
    sigma: BigInt,
    coeffs: Vec<BigInt>,
    l: BigInt,
    r: BigInt,
    l_pows: Vec<BigInt>,
    r_pows: Vec<BigInt>,
    sigma_log2: f64,
    sigma_negative: bool,
}

#[derive(Debug, Clone)]
pub struct MomentEngine {
    dmax: usize,
    d: BigInt,
    q: BigInt,
    pieces: Vec<EnginePiece>,
    endpoint_bits: u64,
    fixed_bits: u64,
}

/// A float estimate `pos - neg` kept as two base-2 logarithms, so moments of
/// any magnitude can be compared without overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog2 {
    pub pos: f64,
    pub neg: f64,
}

impl SignedLog2 {
    pub const ZERO: SignedLog2 = SignedLog2 {
        pos: f64::NEG_INFINITY,
        neg: f64::NEG_INFINITY,
    };

    pub fn from_parts(log2_abs: f64, negative: bool) -> Self {
        if negative {
            SignedLog2 {
                pos: f64::NEG_INFINITY,
                neg: log2_abs,
            }
        } else {
            SignedLog2 {
                pos: log2_abs,
                neg: f64::NEG_INFINITY,
            }
        }
    }

    fn add_log(a: f64, b: f64) -> f64 {
        if a == f64::NEG_INFINITY {
            return b;
        }
        if b == f64::NEG_INFINITY {
            return a;
        }
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
    }

    pub fn add(self, other: SignedLog2) -> Self {
        SignedLog2 {
            pos: Self::add_log(self.pos, other.pos),
            neg: Self::add_log(self.neg, other.neg),
        }
    }

    pub fn negate(self) -> Self {
        SignedLog2 {
            pos: self.neg,
            neg: self.pos,
        }
    }

    pub fn shift(self, by: f64) -> Self {
        SignedLog2 {
            pos: self.pos + by,
            neg: self.neg + by,
        }
    }

    /// `log2 |pos - neg|`, or `-inf` when the parts cancel at float precision.
    pub fn log2_abs(self) -> f64 {
        let (hi, lo) = if self.pos >= self.neg {
            (self.pos, self.neg)
        } else {
            (self.neg, self.pos)
        };
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        let t = 1.0 - (lo - hi).exp2();
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else {
            hi + t.log2()
        }
    }

    pub fn sign(self) -> Ordering {
        self.pos.partial_cmp(&self.neg).unwrap_or(Ordering::Equal)
    }

    /// How many bits the dominant part exceeds the other by.
    pub fn margin(self) -> f64 {
        (self.pos - self.neg).abs()
    }
}

fn bits_of(x: &BigInt) -> u64 {
    x.bits().max(1)
}

impl MomentEngine {
    /// Builds the engine. `pieces[i]` lives on `[breakpoints[i], breakpoints[i+1]]`.
    pub fn new(breakpoints: &[Rational], pieces: &[Poly]) -> Self {
        assert_eq!(breakpoints.len(), pieces.len() + 1);
        let mut d = BigInt::one();
        for b in breakpoints {
            d = d.lcm(b.denom());
        }
        let dmax = pieces.iter().filter_map(Poly::degree).max().unwrap_or(0);
        let mut splits = Vec::new();
        let mut q = BigInt::one();
        for (i, p) in pieces.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let (content, ints) = p.integer_content();
            q = q.lcm(content.denom());
            splits.push((i, content, ints));
        }
        let mut endpoint_bits = bits_of(&d);
        let mut fixed_bits = bits_of(&q);
        let mut out = Vec::with_capacity(splits.len());
        for (i, content, ints) in splits {
            let sigma = content.numer() * (&q / content.denom());
            let l = breakpoints[i].numer() * (&d / breakpoints[i].denom());
            let r = breakpoints[i + 1].numer() * (&d / breakpoints[i + 1].denom());
            let coeffs: Vec<BigInt> = ints
                .into_iter()
                .enumerate()
                .map(|(j, c)| c * num_traits::pow(d.clone(), dmax - j))
                .collect();
            let mut l_pows = vec![BigInt::one()];
            let mut r_pows = vec![BigInt::one()];
            for _ in 1..coeffs.len() {
                let nl = l_pows.last().unwrap() * &l;
                let nr = r_pows.last().unwrap() * &r;
                l_pows.push(nl);
                r_pows.push(nr);
            }
            endpoint_bits = endpoint_bits.max(bits_of(&l)).max(bits_of(&r));
            let cbits = coeffs.iter().map(bits_of).max().unwrap_or(1);
            fixed_bits = fixed_bits.max(bits_of(&sigma) + cbits);
            out.push(EnginePiece {
                sigma_log2: log2_bigint(&sigma),
                sigma_negative: sigma.is_negative(),
                sigma,
                coeffs,
                l,
                r,
                l_pows,
                r_pows,
            });
        }
        Self {
            dmax,
            d,
            q,
            pieces: out,
            endpoint_bits,
            fixed_bits,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Rough size in bits of the integers involved at order `k`.
    pub fn required_bits(&self, k: u64) -> u64 {
        (k + self.dmax as u64 + 1)
            .saturating_mul(self.endpoint_bits)
            .saturating_add(self.fixed_bits)
            .saturating_add(64)
    }

    fn lambda(&self, k: u64) -> BigInt {
        crate::rational::lcm_range(k + 1, k + self.dmax as u64 + 1)
    }

    fn piece_numerator(
        p: &EnginePiece,
        k: u64,
        lam: &BigInt,
        rk1: &BigInt,
        lk1: &BigInt,
    ) -> BigInt {
        let mut a_r = BigInt::zero();
        let mut a_l = BigInt::zero();
        for (j, c) in p.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let w = c * (lam / BigInt::from(k + j as u64 + 1));
            a_r += &w * &p.r_pows[j];
            a_l += w * &p.l_pows[j];
        }
        a_r * rk1 - a_l * lk1
    }

    /// `Q * Lambda * D^(k+dmax+1)`.
    pub fn denominator(&self, k: u64) -> BigInt {
        let e = usize::try_from(k).unwrap() + self.dmax + 1;
        &self.q * self.lambda(k) * num_traits::pow(self.d.clone(), e)
    }

    pub fn numerator(&self, k: u64) -> BigInt {
        let lam = self.lambda(k);
        let e = usize::try_from(k + 1).unwrap();
        let mut acc = BigInt::zero();
        for p in &self.pieces {
            let rk1 = num_traits::pow(p.r.clone(), e);
            let lk1 = num_traits::pow(p.l.clone(), e);
            acc += &p.sigma * Self::piece_numerator(p, k, &lam, &rk1, &lk1);
        }
        acc
    }

    pub fn moment(&self, k: u64) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        Rational::new(self.numerator(k), self.denominator(k))
    }

    pub fn sign(&self, k: u64) -> Ordering {
        self.numerator(k).cmp(&BigInt::zero())
    }

    /// Float estimate of the moment at order `k`; only the final combination
    /// across pieces is done in floating point.
    pub fn estimate(&self, k: u64) -> SignedLog2 {
        let mut sweep = self.sweep(k);
        sweep.estimate()
    }

    /// Incremental evaluator for consecutive orders starting at `k0`.
    pub fn sweep(&self, k0: u64) -> MomentSweep<'_> {
        let e = usize::try_from(k0 + 1).unwrap();
        let rk1 = self
            .pieces
            .iter()
            .map(|p| num_traits::pow(p.r.clone(), e))
            .collect();
        let lk1 = self
            .pieces
            .iter()
            .map(|p| num_traits::pow(p.l.clone(), e))
            .collect();
        let dpow = num_traits::pow(self.d.clone(), e + self.dmax);
        MomentSweep {
            engine: self,
            k: k0,
            rk1,
            lk1,
            dpow,
        }
    }
}

/// State for walking `k, k+1, ...` with incremental power updates.
pub struct MomentSweep<'a> {
    engine: &'a MomentEngine,
    k: u64,
    rk1: Vec<BigInt>,
    lk1: Vec<BigInt>,
    dpow: BigInt,
}

impl MomentSweep<'_> {
    pub fn order(&self) -> u64 {
        self.k
    }

    pub fn advance(&mut self) {
        for (p, (r, l)) in self
            .engine
            .pieces
            .iter()
            .zip(self.rk1.iter_mut().zip(self.lk1.iter_mut()))
        {
            *r *= &p.r;
            *l *= &p.l;
        }
        self.dpow *= &self.engine.d;
        self.k += 1;
    }

    fn piece_numerators(&self) -> Vec<BigInt> {
        let lam = self.engine.lambda(self.k);
        self.engine
            .pieces
            .iter()
            .zip(self.rk1.iter().zip(&self.lk1))
            .map(|(p, (r, l))| MomentEngine::piece_numerator(p, self.k, &lam, r, l))
            .collect()
    }

    pub fn numerator(&self) -> BigInt {
        let mut acc = BigInt::zero();
        for (p, n) in self.engine.pieces.iter().zip(self.piece_numerators()) {
            acc += &p.sigma * n;
        }
        acc
    }

    pub fn denominator(&self) -> BigInt {
        &self.engine.q * self.engine.lambda(self.k) * &self.dpow
    }

    pub fn sign(&self) -> Ordering {
        self.numerator().cmp(&BigInt::zero())
    }

    pub fn moment(&self) -> Rational {
        if self.engine.is_zero() {
            return Rational::zero();
        }
        Rational::new(self.numerator(), self.denominator())
    }

    pub fn estimate(&mut self) -> SignedLog2 {
        let mut acc = SignedLog2::ZERO;
        for (p, n) in self.engine.pieces.iter().zip(self.piece_numerators()) {
            if n.is_zero() {
                continue;
            }
            let lg = p.sigma_log2 + log2_bigint(&n);
            acc = acc.add(SignedLog2::from_parts(
                lg,
                p.sigma_negative != n.is_negative(),
            ));
        }
        acc.shift(-log2_bigint(&self.denominator()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn naive(breaks: &[Rational], pieces: &[Poly], k: u64) -> Rational {
        let mut acc = Rational::zero();
        for (i, p) in pieces.iter().enumerate() {
            let xk = Poly::x().pow(k as u32);
            acc += (p * &xk).integrate(&breaks[i], &breaks[i + 1]);
        }
        acc
    }

    #[test]
    fn matches_naive_integration() {
        let breaks = vec![rat(1, 3), rat(1, 2), int(1), rat(7, 4)];
        let pieces = vec![
            Poly::new(vec![rat(1, 5), rat(-2, 3)]),
            Poly::zero(),
            Poly::new(vec![int(3), rat(1, 7), rat(-5, 11)]),
        ];
        let eng = MomentEngine::new(&breaks, &pieces);
        let mut sweep = eng.sweep(0);
        for k in 0..25 {
            let expect = naive(&breaks, &pieces, k);
            assert_eq!(eng.moment(k), expect, "k = {k}");
            assert_eq!(sweep.moment(), expect, "sweep k = {k}");
            let est = sweep.estimate();
            let direct = crate::rational::to_f64(&expect);
            let approx = est.pos.exp2() - est.neg.exp2();
            assert!((approx - direct).abs() <= 1e-9 * direct.abs().max(1e-300));
            sweep.advance();
        }
    }

    #[test]
    fn zero_density() {
        let eng = MomentEngine::new(&[int(1), int(2)], &[Poly::zero()]);
        assert_eq!(eng.moment(3), Rational::zero());
        assert_eq!(eng.sign(3), Ordering::Equal);
    }

    #[test]
    fn signed_log_arithmetic() {
        let a = SignedLog2::from_parts(3.0, false);
        let b = SignedLog2::from_parts(2.0, true);
        let s = a.add(b);
        assert_eq!(s.sign(), Ordering::Greater);
        assert!((s.log2_abs() - 2.0).abs() < 1e-12);
        assert_eq!(s.negate().sign(), Ordering::Less);
    }
}
