//! Finite-stage counterexample constructions: vanishing-moment kernels,
//! matched and alternating pairs, and alternating-CDF pairs.
//!
//! Every output carries a `verify` method that re-checks its claims through
//! the independent moment evaluator in [`crate::measures`].

mod alternating;
mod discrete_cdf;
mod kernel;
mod matched;
mod staged;
mod unimodal;

pub use alternating::{
    alternating_pair, mixed_incomparable_demo, run_padded_alternating, AlternatingOptions,
    AlternatingPair, AlternatingReport, MixedDemo, MixedReport, RunReport, RunSummary,
};
pub use discrete_cdf::{
    ac_alternating_cdf_pair, discrete_alternating_cdf_pair, AcCdfPair, AcCdfReport, CdfCheck,
    DiscreteCdfOptions, DiscreteCdfPair, DiscreteCdfReport, MomentBoundRow, PlotRow, Relation,
};
pub use kernel::{
    kernel_for_orders, smooth_vanishing_kernel, vanishing_moment_kernel,
    vanishing_moment_kernel_with_budget, KernelReport, SmoothKernel, VanishingKernel,
};
pub use matched::{matched_moment_pair, MatchedPair, MatchedReport};
pub use staged::{
    staged_vanishing_kernel, StageRecord, StagedKernel, StagedOptions, StagedReport, StagedSeed,
};
pub use unimodal::{
    derivative_sign_changes, unimodal_alternating_pair, UnimodalPair, UnimodalReport,
};

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::measures::{MeasureError, PiecewiseDensity};
use crate::poly::Poly;
use crate::rational::{format_rational, int, pow, serde_rational, Rational};
use crate::tailorder::TailError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructionError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Tail(#[from] TailError),
    #[error("search cap {cap} exceeded at stage {stage}: {detail}")]
    SearchCap {
        stage: usize,
        cap: u64,
        detail: String,
    },
    #[error("degenerate kernel: {0}")]
    Degenerate(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BumpMode {
    /// `(x-l)^m (r-x)^m`: rational moments, exact verification.
    ExactPolynomial,
    /// `exp(-1/(1-u^2))` bumps integrated numerically to `tolerance`.
    SmoothQuadrature { tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub mode: BumpMode,
    pub degree: u32,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self {
            mode: BumpMode::ExactPolynomial,
            degree: 4,
        }
    }
}

impl BumpSpec {
    pub fn polynomial(degree: u32) -> Self {
        Self {
            mode: BumpMode::ExactPolynomial,
            degree,
        }
    }

    /// Rejects the smooth mode and degrees below 2 for exact constructions.
    pub(crate) fn exact_degree(&self) -> Result<u32, ConstructionError> {
        if self.degree < 2 {
            return Err(ConstructionError::Invalid(format!(
                "bump degree must be >= 2, got {}",
                self.degree
            )));
        }
        match self.mode {
            BumpMode::ExactPolynomial => Ok(self.degree),
            BumpMode::SmoothQuadrature { .. } => Err(ConstructionError::Invalid(
                "smooth-quadrature bumps have no exact moments; use exact-polynomial mode".into(),
            )),
        }
    }
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(with = "serde_rational")]
    pub lo: Rational,
    #[serde(with = "serde_rational")]
    pub hi: Rational,
}

impl Cell {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    /// `n` equal consecutive cells.
    pub fn split(&self, n: usize) -> Vec<Cell> {
        let w = self.width() / int(n as i64);
        (0..n)
            .map(|i| {
                Cell::new(
                    &self.lo + &w * int(i as i64),
                    &self.lo + &w * int(i as i64 + 1),
                )
            })
            .collect()
    }
}

/// `(x-l)^m (r-x)^m` scaled to peak value 1 at the midpoint.
pub fn peak_bump(cell: &Cell, m: u32) -> Poly {
    let quad = Poly::new(vec![-(&cell.lo * &cell.hi), &cell.lo + &cell.hi, int(-1)]);
    let half = cell.width() / int(2);
    quad.pow(m).scale(&(int(1) / pow(&half, 2 * u64::from(m))))
}

/// `(x-l)^m (r-x)^m` scaled to integral 1.
pub fn unit_mass_bump(cell: &Cell, m: u32) -> Poly {
    let p = peak_bump(cell, m);
    let mass = p.integrate(&cell.lo, &cell.hi);
    p.scale(&(int(1) / mass))
}

/// Assembles a density from polynomials on disjoint cells, filling gaps with zero.
pub(crate) fn assemble(
    parts: &[(Cell, Poly)],
    signed: bool,
) -> Result<PiecewiseDensity, MeasureError> {
    let mut parts: Vec<&(Cell, Poly)> = parts.iter().collect();
    parts.sort_by(|a, b| a.0.lo.cmp(&b.0.lo));
    let mut bps: Vec<Rational> = Vec::new();
    let mut pieces = Vec::new();
    for (cell, p) in parts {
        match bps.last() {
            Some(last) if *last == cell.lo => {}
            Some(last) if *last > cell.lo => {
                return Err(MeasureError::Invalid(format!(
                    "overlapping cells at {}",
                    format_rational(&cell.lo)
                )));
            }
            Some(_) => {
                pieces.push(Poly::zero());
                bps.push(cell.lo.clone());
            }
            None => bps.push(cell.lo.clone()),
        }
        pieces.push(p.clone());
        bps.push(cell.hi.clone());
    }
    PiecewiseDensity::new(bps, pieces, signed)
}

/// `a < b` and `a > 0`.
pub(crate) fn check_interval(a: &Rational, b: &Rational) -> Result<(), ConstructionError> {
    if !a.is_positive() || a >= b {
        return Err(ConstructionError::Invalid(format!(
            "need 0 < a < b, got a = {}, b = {}",
            format_rational(a),
            format_rational(b)
        )));
    }
    Ok(())
}

/// `t_i = b - (b-a) 2^{-i}` for `i = 0..=n`.
pub fn dyadic_grid(a: &Rational, b: &Rational, n: usize) -> Vec<Rational> {
    (0..=n)
        .map(|i| b - (b - a) / pow(&int(2), i as u64))
        .collect()
}

pub(crate) fn check_grid(
    grid: &[Rational],
    a: &Rational,
    b: &Rational,
    need: usize,
) -> Result<(), ConstructionError> {
    if grid.len() < need {
        return Err(ConstructionError::Invalid(format!(
            "grid needs {need} points, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || &grid[0] < a || grid.last().unwrap() > b {
        return Err(ConstructionError::Invalid(
            "grid must be strictly increasing inside [a, b]".into(),
        ));
    }
    Ok(())
}

pub(crate) fn nonzero_sign_changes(signs: impl IntoIterator<Item = std::cmp::Ordering>) -> usize {
    let mut last = None;
    let mut changes = 0;
    for s in signs {
        if s == std::cmp::Ordering::Equal {
            continue;
        }
        if last.is_some_and(|l| l != s) {
            changes += 1;
        }
        last = Some(s);
    }
    changes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn bumps_are_normalized() {
        let c = Cell::new(int(1), int(2));
        let p = peak_bump(&c, 4);
        assert_eq!(p.eval(&rat(3, 2)), int(1));
        assert_eq!(p.eval(&int(1)), int(0));
        // derivatives up to order m-1 vanish at the ends
        let mut d = p.clone();
        for _ in 0..3 {
            d = d.derivative();
            assert_eq!(d.eval(&int(2)), int(0));
        }
        let u = unit_mass_bump(&c, 4);
        assert_eq!(u.integrate(&int(1), &int(2)), int(1));
    }

    #[test]
    fn assemble_fills_gaps() {
        let parts = vec![
            (Cell::new(int(3), int(4)), Poly::constant(int(1))),
            (Cell::new(int(1), int(2)), Poly::constant(int(1))),
        ];
        let d = assemble(&parts, false).unwrap();
        assert_eq!(d.breakpoints().len(), 4);
        assert_eq!(d.eval(&rat(5, 2)), int(0));
        assert!(assemble(
            &[
                (Cell::new(int(1), int(3)), Poly::zero()),
                (Cell::new(int(2), int(4)), Poly::zero())
            ],
            true
        )
        .is_err());
    }

    #[test]
    fn grid_halves_towards_b() {
        let g = dyadic_grid(&int(1), &int(2), 3);
        assert_eq!(g, vec![int(1), rat(3, 2), rat(7, 4), rat(15, 8)]);
    }

    #[test]
    fn sign_change_count_skips_zeros() {
        use std::cmp::Ordering::*;
        assert_eq!(
            nonzero_sign_changes([Greater, Equal, Greater, Less, Equal, Less]),
            1
        );
        assert_eq!(nonzero_sign_changes([Less, Greater, Less]), 2);
    }
}
