//! Comparison of measures in the tail order: `mu1 <= mu2` when
//! `s_k(mu1) <= s_k(mu2)` for all sufficiently large `k`.
//!
//! [`compare_empirical`] only inspects a finite prefix and is a heuristic.
//! [`decide_piecewise`], [`certify_cdf_dominance`], [`certify_density_dominance`]
//! and [`certify_eventual_positive`] return proved verdicts.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::measures::{self, Measure, MeasureError, MomentEngine, PiecewiseDensity};
use crate::poly::Poly;
use crate::rational::{format_rational, int, serde_rational, Rational};
use crate::roots::{self, RootInterval};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TailError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("invalid comparison input: {0}")]
    Invalid(String),
}

/// A strict sign, serialized as `"+"` or `"-"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn from_ordering(o: Ordering) -> Option<Sign> {
        match o {
            Ordering::Greater => Some(Sign::Plus),
            Ordering::Less => Some(Sign::Minus),
            Ordering::Equal => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    CdfDominance {
        #[serde(with = "serde_rational")]
        x0: Rational,
    },
    DensityDominance {
        #[serde(with = "serde_rational")]
        x0: Rational,
    },
    /// The density difference has constant sign `sign` on `(lo, hi]` and vanishes right of `hi`.
    RightmostDifference {
        #[serde(with = "serde_rational")]
        lo: Rational,
        #[serde(with = "serde_rational")]
        hi: Rational,
        sign: Sign,
    },
    MomentPrefix {
        n0: u64,
        checked_to: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedIndex {
    pub k: u64,
    pub sign: Sign,
}

/// Outcome of a tail-order comparison of `mu1` against `mu2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TailVerdict {
    /// `mu1` is below `mu2`.
    StrictlyBelow {
        certificate: Certificate,
    },
    /// `mu1` is above `mu2`.
    StrictlyAbove {
        certificate: Certificate,
    },
    EqualPrefix {
        agree_from: u64,
    },
    /// Signs of `s_k(mu2) - s_k(mu1)` at the listed orders.
    AlternationWitness {
        indices: Vec<SignedIndex>,
    },
    Undetermined {
        depth: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Proved,
    Heuristic,
}

/// A verdict together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledVerdict {
    #[serde(flatten)]
    pub verdict: TailVerdict,
    pub label: Label,
}

/// Result of a sufficient-condition certifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Certification<T> {
    Proved {
        result: T,
    },
    Refuted {
        #[serde(with = "serde_rational")]
        at: Rational,
        detail: String,
    },
    Undetermined {
        reason: String,
    },
}

impl<T> Certification<T> {
    pub fn proved(&self) -> Option<&T> {
        match self {
            Certification::Proved { result } => Some(result),
            _ => None,
        }
    }
}

/// Minimum number of sign changes reported as an alternation witness.
pub const ALTERNATION_THRESHOLD: usize = 4;

/// Signs of `s_k(mu2) - s_k(mu1)` for `k` in `orders` (`None` where the
/// enclosures cannot separate). `orders` must be increasing.
pub fn difference_signs(
    mu1: &Measure,
    mu2: &Measure,
    orders: &[u64],
    budget: u64,
) -> Result<Vec<Option<Ordering>>, TailError> {
    if let (Measure::Density(d1), Measure::Density(d2)) = (mu1, mu2) {
        let diff = d2.difference(d1);
        let eng = MomentEngine::new(diff.breakpoints(), diff.pieces());
        if let Some(&last) = orders.last() {
            let required = eng.required_bits(last);
            if required > budget {
                return Err(MeasureError::PrecisionExceeded {
                    order: last,
                    required,
                    budget,
                }
                .into());
            }
        }
        let consecutive = orders.windows(2).all(|w| w[1] == w[0] + 1);
        if consecutive && !orders.is_empty() {
            let mut sweep = eng.sweep(orders[0]);
            let mut out = Vec::with_capacity(orders.len());
            for _ in orders {
                out.push(Some(sweep.sign()));
                sweep.advance();
            }
            return Ok(out);
        }
        return Ok(orders.iter().map(|&k| Some(eng.sign(k))).collect());
    }
    let mut out = Vec::with_capacity(orders.len());
    for &k in orders {
        let a = measures::moment_with_budget(mu1, k, budget)?;
        let b = measures::moment_with_budget(mu2, k, budget)?;
        out.push(b.minus(&a).sign());
    }
    Ok(out)
}

fn classify(orders: &[u64], signs: &[Option<Ordering>], depth: u64) -> TailVerdict {
    let mut runs: Vec<SignedIndex> = Vec::new();
    for (&k, s) in orders.iter().zip(signs) {
        if let Some(sign) = s.and_then(Sign::from_ordering) {
            if runs.last().map(|r| r.sign) != Some(sign) {
                runs.push(SignedIndex { k, sign });
            }
        }
    }
    if runs.len() > ALTERNATION_THRESHOLD {
        return TailVerdict::AlternationWitness { indices: runs };
    }
    let Some(last) = signs.last().copied().flatten() else {
        return TailVerdict::Undetermined { depth };
    };
    let mut start = signs.len() - 1;
    while start > 0 {
        match signs[start - 1] {
            Some(s) if s == last || (last != Ordering::Equal && s == Ordering::Equal) => start -= 1,
            _ => break,
        }
    }
    let n0 = orders[start];
    let certificate = Certificate::MomentPrefix {
        n0,
        checked_to: depth,
    };
    match last {
        Ordering::Equal => TailVerdict::EqualPrefix { agree_from: n0 },
        Ordering::Greater => TailVerdict::StrictlyBelow { certificate },
        Ordering::Less => TailVerdict::StrictlyAbove { certificate },
    }
}

/// Scans `sign(s_k(mu2) - s_k(mu1))` for `k = 0..=depth`.
///
/// Returns an alternation witness when the prefix changes sign at least
/// four times, a moment-prefix verdict when the sign is constant (ties
/// allowed) from some `n0` up to `depth`, and `Undetermined` when the
/// final sign cannot be resolved. This is not a proof of eventual dominance.
pub fn compare_empirical(
    mu1: &Measure,
    mu2: &Measure,
    depth: u64,
) -> Result<TailVerdict, TailError> {
    compare_empirical_with_budget(mu1, mu2, depth, crate::config::DEFAULT_PRECISION_BITS)
}

pub fn compare_empirical_with_budget(
    mu1: &Measure,
    mu2: &Measure,
    depth: u64,
    budget: u64,
) -> Result<TailVerdict, TailError> {
    let orders: Vec<u64> = (0..=depth).collect();
    let signs = difference_signs(mu1, mu2, &orders, budget)?;
    Ok(classify(&orders, &signs, depth))
}

/// Like [`compare_empirical`] but only at the given increasing orders.
pub fn compare_at_orders(
    mu1: &Measure,
    mu2: &Measure,
    orders: &[u64],
) -> Result<TailVerdict, TailError> {
    if orders.is_empty() || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TailError::Invalid(
            "orders must be nonempty and strictly increasing".into(),
        ));
    }
    let signs = difference_signs(mu1, mu2, orders, crate::config::DEFAULT_PRECISION_BITS)?;
    Ok(classify(orders, &signs, *orders.last().unwrap()))
}

fn require_unsigned(d: &PiecewiseDensity) -> Result<(), TailError> {
    if d.is_signed() {
        return Err(TailError::Measure(MeasureError::SignedMeasure));
    }
    Ok(())
}

/// Exact decision of the tail order between two piecewise-polynomial densities.
///
/// The difference `d2 - d1` is formed on the common refinement. Its sign just
/// left of the right end of the rightmost nonzero piece decides the order.
/// Returns `EqualPrefix { agree_from: 0 }` only when the densities coincide.
pub fn decide_piecewise(
    d1: &PiecewiseDensity,
    d2: &PiecewiseDensity,
) -> Result<TailVerdict, TailError> {
    require_unsigned(d1)?;
    require_unsigned(d2)?;
    let diff = d2.difference(d1);
    let bps = diff.breakpoints();
    let Some(i) = diff.pieces().iter().rposition(|p| !p.is_zero()) else {
        return Ok(TailVerdict::EqualPrefix { agree_from: 0 });
    };
    let p = &diff.pieces()[i];
    let (l, r) = (&bps[i], &bps[i + 1]);
    let sign = Sign::from_ordering(roots::sign_left_of(p, r)).expect("nonzero polynomial");
    let lo = match roots::isolate_roots(p, l, r).last() {
        Some(root) => {
            let mut root = root.clone();
            let mut width = (r - l) / int(2);
            loop {
                match &root {
                    RootInterval::Exact(x) => break x.clone(),
                    RootInterval::Open(_, hi) if hi < r => break hi.clone(),
                    _ => {
                        root = roots::refine(p, &root, &width);
                        width /= int(2);
                    }
                }
            }
        }
        None => l.clone(),
    };
    let certificate = Certificate::RightmostDifference {
        lo,
        hi: r.clone(),
        sign,
    };
    Ok(match sign {
        Sign::Plus => TailVerdict::StrictlyBelow { certificate },
        Sign::Minus => TailVerdict::StrictlyAbove { certificate },
    })
}

/// Certificate that `int f(x) x^k dx > 0` for all large `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventualPositivity {
    #[serde(with = "serde_rational")]
    pub x0: Rational,
    /// Value `f(x0)`; may be zero when `f` is positive just to the right.
    #[serde(with = "serde_rational")]
    pub value_at_x0: Rational,
    /// First order whose moment was verified positive.
    pub first_positive_order: u64,
}

/// Checks that `f` is positive just right of `x0`, that `f >= 0` on `[x0, b]` exactly, then finds the first
/// order `n0 <= cap` whose moment is positive.
pub fn certify_eventual_positive(
    f: &PiecewiseDensity,
    x0: &Rational,
    cap: u64,
) -> Result<Certification<EventualPositivity>, TailError> {
    let value = f.eval(x0);
    let right_sign = match f.piece_index(x0) {
        Some(i) if x0 < f.upper() => roots::sign_right_of(&f.pieces()[i], x0),
        _ => Ordering::Equal,
    };
    if right_sign != Ordering::Greater {
        return Ok(Certification::Refuted {
            at: x0.clone(),
            detail: format!(
                "density is not positive just right of x0 (value {})",
                format_rational(&value)
            ),
        });
    }
    let bps = f.breakpoints();
    for (i, p) in f.pieces().iter().enumerate() {
        let r = &bps[i + 1];
        if r <= x0 {
            continue;
        }
        let l = std::cmp::max(&bps[i], x0);
        if let Err(at) = roots::check_nonnegative(p, l, r) {
            return Ok(Certification::Refuted {
                at,
                detail: "density is negative to the right of x0".into(),
            });
        }
    }
    let eng = MomentEngine::new(bps, f.pieces());
    let mut sweep = eng.sweep(0);
    for k in 0..=cap {
        if sweep.sign() == Ordering::Greater {
            return Ok(Certification::Proved {
                result: EventualPositivity {
                    x0: x0.clone(),
                    value_at_x0: value,
                    first_positive_order: k,
                },
            });
        }
        sweep.advance();
    }
    Ok(Certification::Undetermined {
        reason: format!("no positive moment found up to order {cap}"),
    })
}

/// Density dominance: `d2 - d1` eventually positive from `x0` gives `d1 <= d2`.
pub fn certify_density_dominance(
    d1: &PiecewiseDensity,
    d2: &PiecewiseDensity,
    x0: &Rational,
    cap: u64,
) -> Result<Certification<TailVerdict>, TailError> {
    require_unsigned(d1)?;
    require_unsigned(d2)?;
    let diff = d2.difference(d1);
    Ok(match certify_eventual_positive(&diff, x0, cap)? {
        Certification::Proved { .. } => Certification::Proved {
            result: TailVerdict::StrictlyBelow {
                certificate: Certificate::DensityDominance { x0: x0.clone() },
            },
        },
        Certification::Refuted { at, detail } => Certification::Refuted { at, detail },
        Certification::Undetermined { reason } => Certification::Undetermined { reason },
    })
}

/// Right-continuous CDF as polynomial segments: `polys[j]` is valid on
/// `[points[j], points[j+1])`, with `0` left of `points[0]` and the total
/// mass right of the last point.
struct CdfSegments {
    points: Vec<Rational>,
    polys: Vec<Poly>,
    total: Rational,
}

impl CdfSegments {
    fn of(mu: &Measure) -> Result<Option<CdfSegments>, TailError> {
        match mu {
            Measure::Discrete { atoms } => {
                let mut acc = Rational::zero();
                let mut points = Vec::new();
                let mut polys = Vec::new();
                for a in atoms.atoms() {
                    acc += &a.mass;
                    points.push(a.location.clone());
                    polys.push(Poly::constant(acc.clone()));
                }
                Ok(Some(CdfSegments {
                    points,
                    polys,
                    total: acc,
                }))
            }
            Measure::Density(d) => {
                require_unsigned(d)?;
                let mut polys = d.cumulative_pieces();
                let total = polys.last().unwrap().eval(d.upper());
                polys.push(Poly::constant(total.clone()));
                Ok(Some(CdfSegments {
                    points: d.breakpoints().to_vec(),
                    polys,
                    total,
                }))
            }
            Measure::Rule(_) => Ok(None),
        }
    }

    /// Polynomial describing the CDF on a small interval right of `x`.
    fn poly_right_of(&self, x: &Rational) -> Poly {
        let idx = self.points.partition_point(|p| p <= x);
        if idx == 0 {
            Poly::zero()
        } else if idx - 1 < self.polys.len() {
            self.polys[idx - 1].clone()
        } else {
            Poly::constant(self.total.clone())
        }
    }
}

/// `h(hi) < 0` with `h` continuous: finds a point of `(lo, hi)` where `h < 0`.
fn interior_negative_point(h: &Poly, lo: &Rational, hi: &Rational) -> Rational {
    let mut step = (hi - lo) / int(2);
    loop {
        let x = hi - &step;
        if h.eval(&x).is_negative() {
            return x;
        }
        step /= int(2);
    }
}

/// Sufficient condition: `F1(x0) > F2(x0)` and `F1 >= F2` on `[x0, b]` imply
/// `mu1 <= mu2` for probability measures of equal mass.
///
/// Exact for finite discrete measures and densities. When a rule-based
/// measure is involved, CDFs are only compared as enclosures at the
/// truncated atoms: a separated violation refutes, otherwise the result is
/// undetermined.
pub fn certify_cdf_dominance(
    mu1: &Measure,
    mu2: &Measure,
    x0: &Rational,
) -> Result<Certification<TailVerdict>, TailError> {
    if mu1.is_signed() || mu2.is_signed() {
        return Err(MeasureError::SignedMeasure.into());
    }
    let m1 = measures::total_mass(mu1)?;
    let m2 = measures::total_mass(mu2)?;
    if m1.is_exact() && m2.is_exact() && m1.value != m2.value {
        return Err(TailError::Invalid(
            "measures must have equal total mass".into(),
        ));
    }
    let f1 = measures::cdf(mu1, x0)?;
    let f2 = measures::cdf(mu2, x0)?;
    match f1.minus(&f2).sign() {
        Some(Ordering::Greater) => {}
        Some(_) => {
            return Ok(Certification::Refuted {
                at: x0.clone(),
                detail: "F1(x0) > F2(x0) fails".into(),
            })
        }
        None => {
            return Ok(Certification::Undetermined {
                reason: "CDF enclosures overlap at x0".into(),
            });
        }
    }
    let b = std::cmp::max(mu1.support_upper_bound(), mu2.support_upper_bound());
    let proved = TailVerdict::StrictlyBelow {
        certificate: Certificate::CdfDominance { x0: x0.clone() },
    };
    match (CdfSegments::of(mu1)?, CdfSegments::of(mu2)?) {
        (Some(c1), Some(c2)) => {
            let mut pts: BTreeSet<Rational> = BTreeSet::new();
            pts.insert(x0.clone());
            pts.insert(b.clone());
            for p in c1.points.iter().chain(&c2.points) {
                if p > x0 && p < &b {
                    pts.insert(p.clone());
                }
            }
            let pts: Vec<Rational> = pts.into_iter().collect();
            for w in pts.windows(2) {
                let h = &c1.poly_right_of(&w[0]) - &c2.poly_right_of(&w[0]);
                if let Err(at) = roots::check_nonnegative(&h, &w[0], &w[1]) {
                    let at = if at == w[1] {
                        interior_negative_point(&h, &w[0], &w[1])
                    } else {
                        at
                    };
                    return Ok(Certification::Refuted {
                        at,
                        detail: "F1 < F2 right of x0".into(),
                    });
                }
            }
            Ok(Certification::Proved { result: proved })
        }
        _ => {
            let mut pts: BTreeSet<Rational> = BTreeSet::new();
            for mu in [mu1, mu2] {
                match mu {
                    Measure::Discrete { atoms } => {
                        pts.extend(atoms.atoms().iter().map(|a| a.location.clone()))
                    }
                    Measure::Density(d) => pts.extend(d.breakpoints().iter().cloned()),
                    Measure::Rule(r) => {
                        pts.extend(r.atoms().into_iter().map(|(x, _)| x));
                        if let Some(res) = r.residual() {
                            pts.insert(res.location.clone());
                        }
                    }
                }
            }
            for x in pts.into_iter().filter(|p| p >= x0 && p <= &b) {
                let d = measures::cdf(mu1, &x)?.minus(&measures::cdf(mu2, &x)?);
                if d.sign() == Some(Ordering::Less) {
                    return Ok(Certification::Refuted {
                        at: x,
                        detail: "F1 < F2 right of x0".into(),
                    });
                }
            }
            Ok(Certification::Undetermined {
                reason:
                    "rule-based measures are only compared at truncated atoms; no violation found"
                        .into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn uniform() -> PiecewiseDensity {
        PiecewiseDensity::constant(int(1), int(2), int(1)).unwrap()
    }

    fn ramp() -> PiecewiseDensity {
        PiecewiseDensity::new(
            vec![int(1), int(2)],
            vec![Poly::new(vec![int(-2), int(2)])],
            false,
        )
        .unwrap()
    }

    #[test]
    fn empirical_identical() {
        let u: Measure = uniform().into();
        assert_eq!(
            compare_empirical(&u, &u, 50).unwrap(),
            TailVerdict::EqualPrefix { agree_from: 0 }
        );
    }

    #[test]
    fn empirical_diracs() {
        let a = Measure::dirac(int(1)).unwrap();
        let b = Measure::dirac(int(2)).unwrap();
        assert_eq!(
            compare_empirical(&a, &b, 10).unwrap(),
            TailVerdict::StrictlyBelow {
                certificate: Certificate::MomentPrefix {
                    n0: 0,
                    checked_to: 10
                }
            }
        );
        assert!(matches!(
            compare_empirical(&b, &a, 10).unwrap(),
            TailVerdict::StrictlyAbove { .. }
        ));
    }

    #[test]
    fn piecewise_decision_examples() {
        assert_eq!(
            decide_piecewise(&uniform(), &uniform()).unwrap(),
            TailVerdict::EqualPrefix { agree_from: 0 }
        );
        let v = decide_piecewise(&uniform(), &ramp()).unwrap();
        assert_eq!(
            v,
            TailVerdict::StrictlyBelow {
                certificate: Certificate::RightmostDifference {
                    lo: rat(3, 2),
                    hi: int(2),
                    sign: Sign::Plus
                }
            }
        );
        let left = PiecewiseDensity::constant(int(1), rat(3, 2), int(2)).unwrap();
        let right = PiecewiseDensity::constant(rat(7, 4), int(2), int(4)).unwrap();
        assert!(matches!(
            decide_piecewise(&left, &right).unwrap(),
            TailVerdict::StrictlyBelow { .. }
        ));
        assert!(matches!(
            decide_piecewise(&right, &left).unwrap(),
            TailVerdict::StrictlyAbove { .. }
        ));
    }

    #[test]
    fn ramp_difference_turns_positive() {
        let f = ramp().difference(&uniform());
        let cert = certify_eventual_positive(&f, &rat(3, 2), 10_000).unwrap();
        let n0 = cert.proved().unwrap().first_positive_order;
        // Oracle: int_1^2 (2x-3) x^k dx = 2(2^{k+2}-1)/(k+2) - 3(2^{k+1}-1)/(k+1).
        let closed = |k: i64| {
            let p = |e: u32| int(2i64.pow(e) - 1);
            int(2) * p(k as u32 + 2) / int(k + 2) - int(3) * p(k as u32 + 1) / int(k + 1)
        };
        for k in 0..n0 {
            assert!(!closed(k as i64).is_positive());
        }
        assert!(closed(n0 as i64).is_positive());
    }

    #[test]
    fn positivity_refutations() {
        let f = ramp().difference(&uniform());
        assert!(matches!(
            certify_eventual_positive(&f, &rat(5, 4), 100).unwrap(),
            Certification::Refuted { .. }
        ));
        let c = certify_eventual_positive(&uniform(), &rat(3, 2), 100).unwrap();
        assert_eq!(c.proved().unwrap().first_positive_order, 0);
    }

    #[test]
    fn cdf_dominance_examples() {
        let d1 = Measure::dirac(int(1)).unwrap();
        let d2 = Measure::dirac(int(2)).unwrap();
        let c = certify_cdf_dominance(&d1, &d2, &rat(3, 2)).unwrap();
        assert!(matches!(
            c.proved(),
            Some(TailVerdict::StrictlyBelow { .. })
        ));
        let u: Measure = uniform().into();
        assert!(certify_cdf_dominance(&u, &d2, &rat(3, 2))
            .unwrap()
            .proved()
            .is_some());
        // Reversed direction must fail at x0 already.
        assert!(matches!(
            certify_cdf_dominance(&d2, &d1, &rat(3, 2)).unwrap(),
            Certification::Refuted { .. }
        ));
    }

    #[test]
    fn cdf_dominance_detects_interior_violation() {
        // F1 - F2 is positive at 1 but negative on (3/2, 2).
        let m1 = Measure::from(
            crate::measures::DiscreteFinite::new(vec![
                crate::measures::Atom {
                    location: int(1),
                    mass: rat(1, 2),
                },
                crate::measures::Atom {
                    location: int(2),
                    mass: rat(1, 2),
                },
            ])
            .unwrap(),
        );
        let m2: Measure = PiecewiseDensity::constant(int(1), int(2), int(1))
            .unwrap()
            .into();
        match certify_cdf_dominance(&m1, &m2, &int(1)).unwrap() {
            Certification::Refuted { at, .. } => {
                assert!(at > rat(3, 2) && at < int(2), "{at}");
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn alternation_classification() {
        let orders: Vec<u64> = (0..7).collect();
        let s = |o: Ordering| Some(o);
        let signs = vec![
            s(Ordering::Greater),
            s(Ordering::Less),
            s(Ordering::Equal),
            s(Ordering::Greater),
            s(Ordering::Less),
            s(Ordering::Greater),
            s(Ordering::Greater),
        ];
        match classify(&orders, &signs, 6) {
            TailVerdict::AlternationWitness { indices } => {
                let ks: Vec<u64> = indices.iter().map(|i| i.k).collect();
                assert_eq!(ks, vec![0, 1, 3, 4, 5]);
            }
            other => panic!("{other:?}"),
        }
        let tail_unknown = vec![s(Ordering::Greater), None];
        assert_eq!(
            classify(&[0, 1], &tail_unknown, 1),
            TailVerdict::Undetermined { depth: 1 }
        );
    }

    #[test]
    fn verdict_json_shape() {
        let v = LabeledVerdict {
            verdict: TailVerdict::StrictlyBelow {
                certificate: Certificate::MomentPrefix {
                    n0: 0,
                    checked_to: 10,
                },
            },
            label: Label::Heuristic,
        };
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(
            s,
            r#"{"verdict":"strictly_below","certificate":{"kind":"moment_prefix","n0":0,"checked_to":10},"label":"heuristic"}"#
        );
    }
}
