use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{
    check_interval, staged_vanishing_kernel, unit_mass_bump, BumpSpec, Cell, ConstructionError,
    StagedKernel, StagedOptions,
};
use crate::measures::{Measure, MomentEngine, PiecewiseDensity};
use crate::rational::{int, serde_rational, Rational};
use crate::roots;

/// Two distinct probability densities `g - h` and `g + h` whose moments agree
/// at every vanishing order of the staged kernel `h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub first: PiecewiseDensity,
    pub second: PiecewiseDensity,
    pub base: PiecewiseDensity,
    /// The staged kernel before scaling by `epsilon`.
    pub kernel: StagedKernel,
    pub inner: Cell,
    /// Exact lower bound for the base density on `inner`.
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub agreement_orders: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedReport {
    #[serde(with = "serde_rational")]
    pub mass_first: Rational,
    #[serde(with = "serde_rational")]
    pub mass_second: Rational,
    pub agreement_orders: Vec<u64>,
    /// Smallest order above the largest agreement order where the moments differ.
    pub first_difference_after: u64,
}

impl MatchedPair {
    pub fn measures(&self) -> (Measure, Measure) {
        (
            Measure::Density(self.first.clone()),
            Measure::Density(self.second.clone()),
        )
    }

    /// Checks unit masses, exact agreement at the recorded orders, and a
    /// differing moment within ten orders past the last agreement.
    pub fn verify(&self) -> Result<MatchedReport, ConstructionError> {
        let e1 = MomentEngine::new(self.first.breakpoints(), self.first.pieces());
        let e2 = MomentEngine::new(self.second.breakpoints(), self.second.pieces());
        let mass_first = e1.moment(0);
        let mass_second = e2.moment(0);
        if !mass_first.is_one() || !mass_second.is_one() {
            return Err(ConstructionError::Verification(
                "masses are not both 1".into(),
            ));
        }
        if self.first == self.second {
            return Err(ConstructionError::Verification(
                "the two densities coincide".into(),
            ));
        }
        for &k in &self.agreement_orders {
            if e1.moment(k) != e2.moment(k) {
                return Err(ConstructionError::Verification(format!(
                    "moments differ at order {k}"
                )));
            }
        }
        let top = self.agreement_orders.iter().copied().max().unwrap_or(0);
        let first_difference_after = (top + 1..=top + 10)
            .find(|&k| e1.moment(k) != e2.moment(k))
            .ok_or_else(|| {
                ConstructionError::Verification(format!("moments agree on ({top}, {}]", top + 10))
            })?;
        Ok(MatchedReport {
            mass_first,
            mass_second,
            agreement_orders: self.agreement_orders.clone(),
            first_difference_after,
        })
    }
}

/// Builds the matched pair: a unit-mass bump `g` on `[a, b]`, its minimum
/// `epsilon` over the middle half, and `f = g -/+ epsilon * h` with `h` an
/// `stages`-stage kernel on the middle half (so `|epsilon * h| <= epsilon`).
pub fn matched_moment_pair(
    a: &Rational,
    b: &Rational,
    stages: usize,
    spec: &BumpSpec,
    opts: &StagedOptions,
) -> Result<MatchedPair, ConstructionError> {
    check_interval(a, b)?;
    let m = spec.exact_degree()?;
    if stages < 1 {
        return Err(ConstructionError::Invalid(
            "a matched pair needs at least one stage".into(),
        ));
    }
    let quarter = (b - a) / int(4);
    let inner = Cell::new(a + &quarter, b - &quarter);
    let span = Cell::new(a.clone(), b.clone());
    let g_poly = unit_mass_bump(&span, m);
    let epsilon = roots::min_lower_bound(
        &g_poly,
        &inner.lo,
        &inner.hi,
        &roots::default_tolerance(&inner.lo, &inner.hi),
    );
    if epsilon <= Rational::zero() {
        return Err(ConstructionError::Verification(
            "base bump is not bounded away from zero".into(),
        ));
    }
    let kernel = staged_vanishing_kernel(&inner.lo, &inner.hi, stages, spec, opts)?;
    if kernel.density.is_zero() {
        return Err(ConstructionError::Invalid(
            "the zero seed gives identical densities".into(),
        ));
    }
    let base = PiecewiseDensity::new(vec![a.clone(), b.clone()], vec![g_poly], false)?;
    let h = kernel.density.scale(&epsilon);
    let first =
        PiecewiseDensity::linear_combination(&[(int(1), &base), (int(-1), &h)]).into_unsigned()?;
    let second =
        PiecewiseDensity::linear_combination(&[(int(1), &base), (int(1), &h)]).into_unsigned()?;
    Ok(MatchedPair {
        first,
        second,
        base,
        agreement_orders: kernel.vanished_orders.clone(),
        kernel,
        inner,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_stage_pair_verifies() {
        let p = matched_moment_pair(
            &int(1),
            &int(2),
            2,
            &BumpSpec::default(),
            &StagedOptions::default(),
        )
        .unwrap();
        let r = p.verify().unwrap();
        assert_eq!(r.agreement_orders.len(), 4);
        assert!(p.epsilon > Rational::zero());
    }

    #[test]
    fn zero_stages_rejected() {
        assert!(matched_moment_pair(
            &int(1),
            &int(2),
            0,
            &BumpSpec::default(),
            &StagedOptions::default()
        )
        .is_err());
    }
}
