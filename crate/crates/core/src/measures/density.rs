use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::MeasureError;
use crate::poly::Poly;
use crate::rational::{format_rational, int, serde_rational, Rational};
use crate::roots;

/// A compactly supported density given by one polynomial per interval
/// `[breakpoints[i], breakpoints[i+1]]`, zero outside `[breakpoints[0], last]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub struct PiecewiseDensity {
    breakpoints: Vec<Rational>,
    pieces: Vec<Poly>,
    signed: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct DensityRepr {
    #[serde(with = "serde_rational::vec")]
    breakpoints: Vec<Rational>,
    pieces: Vec<Poly>,
    #[serde(default)]
    signed: bool,
}

impl TryFrom<DensityRepr> for PiecewiseDensity {
    type Error = MeasureError;
    fn try_from(r: DensityRepr) -> Result<Self, MeasureError> {
        PiecewiseDensity::new(r.breakpoints, r.pieces, r.signed)
    }
}

impl From<PiecewiseDensity> for DensityRepr {
    fn from(d: PiecewiseDensity) -> Self {
        DensityRepr {
            breakpoints: d.breakpoints,
            pieces: d.pieces,
            signed: d.signed,
        }
    }
}

impl PiecewiseDensity {
    /// Validates shape and positivity of the support; when `signed` is false,
    /// also proves every piece nonnegative on its interval.
    pub fn new(
        breakpoints: Vec<Rational>,
        pieces: Vec<Poly>,
        signed: bool,
    ) -> Result<Self, MeasureError> {
        if pieces.is_empty() || breakpoints.len() != pieces.len() + 1 {
            return Err(MeasureError::Invalid(format!(
                "{} breakpoints for {} pieces",
                breakpoints.len(),
                pieces.len()
            )));
        }
        if !breakpoints[0].is_positive() {
            return Err(MeasureError::Invalid(format!(
                "support must lie in (0, inf); first breakpoint is {}",
                format_rational(&breakpoints[0])
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MeasureError::Invalid(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let d = Self {
            breakpoints,
            pieces,
            signed,
        };
        if !signed {
            d.check_nonnegative()?;
        }
        Ok(d)
    }

    /// Builds a signed density without the positivity proof.
    pub fn signed(breakpoints: Vec<Rational>, pieces: Vec<Poly>) -> Result<Self, MeasureError> {
        Self::new(breakpoints, pieces, true)
    }

    pub fn constant(l: Rational, r: Rational, c: Rational) -> Result<Self, MeasureError> {
        Self::new(vec![l, r], vec![Poly::constant(c.clone())], c.is_negative())
    }

    fn check_nonnegative(&self) -> Result<(), MeasureError> {
        for (i, p) in self.pieces.iter().enumerate() {
            if let Err(x) =
                roots::check_nonnegative(p, &self.breakpoints[i], &self.breakpoints[i + 1])
            {
                return Err(MeasureError::NegativeDensity {
                    at: format_rational(&x),
                });
            }
        }
        Ok(())
    }

    /// Re-validates as an unsigned density.
    pub fn into_unsigned(self) -> Result<Self, MeasureError> {
        Self::new(self.breakpoints, self.pieces, false)
    }

    pub fn into_signed(mut self) -> Self {
        self.signed = true;
        self
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn lower(&self) -> &Rational {
        &self.breakpoints[0]
    }

    pub fn upper(&self) -> &Rational {
        self.breakpoints.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(Poly::is_zero)
    }

    /// Index of the piece governing `x` from the right (the last piece at the upper end).
    pub fn piece_index(&self, x: &Rational) -> Option<usize> {
        if x < self.lower() || x > self.upper() {
            return None;
        }
        let i = self.breakpoints.partition_point(|b| b <= x);
        Some(i.saturating_sub(1).min(self.pieces.len() - 1))
    }

    /// Right-continuous point evaluation (left limit at the upper end of the support).
    pub fn eval(&self, x: &Rational) -> Rational {
        match self.piece_index(x) {
            Some(i) => self.pieces[i].eval(x),
            None => Rational::zero(),
        }
    }

    /// Polynomial representation over an arbitrary partition `bps` whose
    /// intervals each lie inside one piece or outside the support.
    pub fn pieces_on(&self, bps: &[Rational]) -> Vec<Poly> {
        bps.windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / int(2);
                if mid < *self.lower() || mid > *self.upper() {
                    Poly::zero()
                } else {
                    self.pieces[self.piece_index(&mid).unwrap()].clone()
                }
            })
            .collect()
    }

    /// `sum_i w_i * d_i` on the common refinement, tagged signed.
    pub fn linear_combination(terms: &[(Rational, &PiecewiseDensity)]) -> PiecewiseDensity {
        assert!(!terms.is_empty());
        let mut set = BTreeSet::new();
        for (_, d) in terms {
            set.extend(d.breakpoints.iter().cloned());
        }
        let bps: Vec<Rational> = set.into_iter().collect();
        let mut acc = vec![Poly::zero(); bps.len() - 1];
        for (w, d) in terms {
            for (slot, p) in acc.iter_mut().zip(d.pieces_on(&bps)) {
                *slot = &*slot + &p.scale(w);
            }
        }
        PiecewiseDensity {
            breakpoints: bps,
            pieces: acc,
            signed: true,
        }
    }

    /// `self - other`, signed.
    pub fn difference(&self, other: &PiecewiseDensity) -> PiecewiseDensity {
        Self::linear_combination(&[(int(1), self), (int(-1), other)])
    }

    pub fn scale(&self, s: &Rational) -> PiecewiseDensity {
        PiecewiseDensity {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(s)).collect(),
            signed: self.signed || s.is_negative(),
        }
    }

    pub fn derivative_pieces(&self) -> Vec<Poly> {
        self.pieces.iter().map(Poly::derivative).collect()
    }

    /// Exact `int_{lower}^{x} f`.
    pub fn integral_to(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for (i, p) in self.pieces.iter().enumerate() {
            let l = &self.breakpoints[i];
            let r = &self.breakpoints[i + 1];
            if x <= l {
                break;
            }
            let hi = if x < r { x } else { r };
            acc += p.integrate(l, hi);
        }
        acc
    }

    /// Antiderivative pieces `A_i` with `A_i(x) = int_{lower}^{x} f` on piece `i`.
    pub fn cumulative_pieces(&self) -> Vec<Poly> {
        let mut out = Vec::with_capacity(self.pieces.len());
        let mut offset = Rational::zero();
        for (i, p) in self.pieces.iter().enumerate() {
            let a = p.antiderivative();
            let l = &self.breakpoints[i];
            let shifted = &a + &Poly::constant(&offset - a.eval(l));
            offset = shifted.eval(&self.breakpoints[i + 1]);
            out.push(shifted);
        }
        out
    }

    /// Sup of `|f|` when every piece is a nonnegative multiple of a bump peaking at 1;
    /// otherwise an upper bound via root isolation.
    pub fn sup_abs_bound(&self) -> Rational {
        let mut best = Rational::zero();
        for (i, p) in self.pieces.iter().enumerate() {
            let l = &self.breakpoints[i];
            let r = &self.breakpoints[i + 1];
            let b = roots::max_abs_upper_bound(p, l, r, &roots::default_tolerance(l, r));
            if b > best {
                best = b;
            }
        }
        best
    }

    /// Drops zero pieces at both ends of the support.
    pub fn trimmed(&self) -> PiecewiseDensity {
        let first = self.pieces.iter().position(|p| !p.is_zero());
        let last = self.pieces.iter().rposition(|p| !p.is_zero());
        match (first, last) {
            (Some(f), Some(l)) => PiecewiseDensity {
                breakpoints: self.breakpoints[f..=l + 1].to_vec(),
                pieces: self.pieces[f..=l].to_vec(),
                signed: self.signed,
            },
            _ => self.clone(),
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

    #[test]
    fn rejects_negative_unsigned() {
        let p = Poly::new(vec![int(-3), int(2)]);
        let err = PiecewiseDensity::new(vec![int(1), int(2)], vec![p.clone()], false).unwrap_err();
        assert!(matches!(err, MeasureError::NegativeDensity { .. }));
        assert!(PiecewiseDensity::new(vec![int(1), int(2)], vec![p], true).is_ok());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PiecewiseDensity::new(vec![int(0), int(1)], vec![Poly::zero()], true).is_err());
        assert!(PiecewiseDensity::new(vec![int(2), int(1)], vec![Poly::zero()], true).is_err());
        assert!(PiecewiseDensity::new(vec![int(1)], vec![], true).is_err());
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let d = PiecewiseDensity::new(
            vec![int(1), rat(3, 2), int(2)],
            vec![Poly::constant(int(1)), Poly::constant(int(3))],
            false,
        )
        .unwrap();
        assert_eq!(d.eval(&rat(3, 2)), int(3));
        assert_eq!(d.eval(&int(2)), int(3));
        assert_eq!(d.eval(&int(1)), int(1));
        assert_eq!(d.eval(&int(3)), int(0));
    }

    #[test]
    fn difference_on_refinement() {
        let u = uniform();
        let v = PiecewiseDensity::new(
            vec![int(1), rat(3, 2), int(2)],
            vec![Poly::zero(), Poly::constant(int(2))],
            false,
        )
        .unwrap();
        let diff = v.difference(&u);
        assert_eq!(diff.breakpoints().len(), 3);
        assert_eq!(diff.eval(&rat(5, 4)), int(-1));
        assert_eq!(diff.eval(&rat(7, 4)), int(1));
        assert_eq!(diff.integral_to(&int(2)), int(0));
    }

    #[test]
    fn cumulative_matches_integral() {
        let d = PiecewiseDensity::new(
            vec![int(1), rat(3, 2), int(2)],
            vec![Poly::new(vec![int(0), int(1)]), Poly::constant(int(3))],
            false,
        )
        .unwrap();
        let cum = d.cumulative_pieces();
        let x = rat(7, 4);
        assert_eq!(cum[1].eval(&x), d.integral_to(&x));
        assert_eq!(cum[0].eval(&rat(3, 2)), cum[1].eval(&rat(3, 2)));
    }
}
