use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::{
    alternating_pair, check_interval, nonzero_sign_changes, unit_mass_bump, AlternatingOptions,
    AlternatingPair, AlternatingReport, BumpSpec, Cell, ConstructionError,
};
use crate::measures::{Measure, MomentEngine, PiecewiseDensity};
use crate::poly::Poly;
use crate::rational::{int, serde_rational, Rational};
use crate::roots;

/// Alternating pair mixed into a unimodal base density on its decreasing
/// flank: `f = alpha f~ + (1 - alpha) h`, `g = alpha g~ + (1 - alpha) h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnimodalPair {
    pub f: PiecewiseDensity,
    pub g: PiecewiseDensity,
    pub base: PiecewiseDensity,
    pub inner: AlternatingPair,
    pub flank: Cell,
    /// `h' < -K` on the flank.
    #[serde(with = "serde_rational")]
    pub slope_bound: Rational,
    /// `|f~'|, |g~'| <= L`.
    #[serde(with = "serde_rational")]
    pub derivative_bound: Rational,
    #[serde(with = "serde_rational")]
    pub alpha: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnimodalReport {
    pub sign_changes_f: usize,
    pub sign_changes_g: usize,
    /// Orders where `s(f) - s(g) = alpha (s(f~) - s(g~))` was checked exactly.
    pub scaling_checked: Vec<u64>,
    pub inner: AlternatingReport,
}

/// Number of sign changes of the derivative across all pieces of `d`.
pub fn derivative_sign_changes(d: &PiecewiseDensity) -> usize {
    let bps = d.breakpoints();
    let signs = d
        .derivative_pieces()
        .iter()
        .enumerate()
        .flat_map(|(i, p)| roots::sign_pattern(p, &bps[i], &bps[i + 1]))
        .collect::<Vec<_>>();
    nonzero_sign_changes(signs)
}

impl UnimodalPair {
    pub fn measures(&self) -> (Measure, Measure) {
        (
            Measure::Density(self.f.clone()),
            Measure::Density(self.g.clone()),
        )
    }

    pub fn verify(&self) -> Result<UnimodalReport, ConstructionError> {
        let inner = self.inner.verify()?;
        let ef = MomentEngine::new(self.f.breakpoints(), self.f.pieces());
        let eg = MomentEngine::new(self.g.breakpoints(), self.g.pieces());
        if !ef.moment(0).is_one() || !eg.moment(0).is_one() {
            return Err(ConstructionError::Verification(
                "masses are not both 1".into(),
            ));
        }
        let sign_changes_f = derivative_sign_changes(&self.f);
        let sign_changes_g = derivative_sign_changes(&self.g);
        if sign_changes_f != 1 || sign_changes_g != 1 {
            return Err(ConstructionError::Verification(format!(
                "derivative sign changes: f {sign_changes_f}, g {sign_changes_g}"
            )));
        }
        let outer = self.f.difference(&self.g);
        let inner_diff = self.inner.f.difference(&self.inner.g);
        let eo = MomentEngine::new(outer.breakpoints(), outer.pieces());
        let ei = MomentEngine::new(inner_diff.breakpoints(), inner_diff.pieces());
        for &k in &self.inner.indices {
            if eo.moment(k) != &self.alpha * ei.moment(k) {
                return Err(ConstructionError::Verification(format!(
                    "scaling identity fails at order {k}"
                )));
            }
        }
        Ok(UnimodalReport {
            sign_changes_f,
            sign_changes_g,
            scaling_checked: self.inner.indices.clone(),
            inner,
        })
    }
}

fn derivative_sup(d: &PiecewiseDensity) -> Rational {
    let bps = d.breakpoints();
    d.derivative_pieces()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            roots::max_abs_upper_bound(
                p,
                &bps[i],
                &bps[i + 1],
                &roots::default_tolerance(&bps[i], &bps[i + 1]),
            )
        })
        .max()
        .unwrap_or_default()
}

/// Builds the unimodal alternating pair. The base is the unit-mass bump on
/// `[a, b]`; the inner pair lives on `[mid + (b-a)/8, b - (b-a)/8]`.
pub fn unimodal_alternating_pair(
    a: &Rational,
    b: &Rational,
    stages: usize,
    spec: &BumpSpec,
    opts: &AlternatingOptions,
) -> Result<UnimodalPair, ConstructionError> {
    check_interval(a, b)?;
    let m = spec.exact_degree()?;
    if opts.grid.is_some() {
        return Err(ConstructionError::Invalid(
            "the inner grid is derived from the flank".into(),
        ));
    }
    let eighth = (b - a) / int(8);
    let mid = (a + b) / int(2);
    let flank = Cell::new(&mid + &eighth, b - &eighth);
    let h = unit_mass_bump(&Cell::new(a.clone(), b.clone()), m);
    let neg_slope: Poly = -&h.derivative();
    let min_slope = roots::min_lower_bound(
        &neg_slope,
        &flank.lo,
        &flank.hi,
        &roots::default_tolerance(&flank.lo, &flank.hi),
    );
    if !min_slope.is_positive() {
        return Err(ConstructionError::Invalid(
            "flank too short for the inner construction; widen [a, b]".into(),
        ));
    }
    let slope_bound = min_slope / int(2);
    let inner = alternating_pair(&flank.lo, &flank.hi, stages, spec, opts)?;
    let derivative_bound = std::cmp::max(derivative_sup(&inner.f), derivative_sup(&inner.g));
    let alpha = &slope_bound / (&derivative_bound + &slope_bound);
    let base = PiecewiseDensity::new(vec![a.clone(), b.clone()], vec![h], false)?;
    let rest = int(1) - &alpha;
    let mix = |d: &PiecewiseDensity| {
        PiecewiseDensity::linear_combination(&[(alpha.clone(), d), (rest.clone(), &base)])
            .into_unsigned()
    };
    let f = mix(&inner.f)?;
    let g = mix(&inner.g)?;
    Ok(UnimodalPair {
        f,
        g,
        base,
        inner,
        flank,
        slope_bound,
        derivative_bound,
        alpha,
    })
}
