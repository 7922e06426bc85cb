//! Finite positive (or tagged signed) measures on `(0, inf)` and their exact
//! or rigorously enclosed moments and distribution functions.
//!
//! Three representations are supported: finitely many atoms, a countable
//! rule-based atom family evaluated by truncation with a tail bound, and
//! piecewise-polynomial densities.
//!
//! JSON form (rationals are strings):
//!
//! ```json
//! {"kind": "discrete", "atoms": [{"location": "2", "mass": "1"}]}
//! {"kind": "density", "breakpoints": ["1", "2"], "pieces": [["1"]], "signed": false}
//! {"kind": "rule",
//!  "location": {"rule": "reciprocal", "base": "2", "scale": "1", "shift": "1"},
//!  "mass": {"rule": "geometric", "coef": "1", "ratio": "1/2"},
//!  "truncation": 40, "support_upper_bound": "2"}
//! ```

mod density;
pub mod engine;
mod rule;

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use density::PiecewiseDensity;
pub use engine::{MomentEngine, MomentSweep, SignedLog2};
pub use rule::{DiscreteRule, Enclosure, LocationRule, MassRule, Residual};

use crate::config::DEFAULT_PRECISION_BITS;
use crate::rational::{format_rational, pow, serde_rational, to_f64, to_f64_upper, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error("density is negative at x = {at}")]
    NegativeDensity { at: String },
    #[error("operation requires an unsigned measure")]
    SignedMeasure,
    #[error("measure has zero mass")]
    ZeroMass,
    #[error(
        "precision budget exceeded: order {order} needs about {required} bits, budget is {budget}"
    )]
    PrecisionExceeded {
        order: u64,
        required: u64,
        budget: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    #[serde(with = "serde_rational")]
    pub location: Rational,
    #[serde(with = "serde_rational")]
    pub mass: Rational,
}

/// Finitely many atoms, sorted by location, with distinct locations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct DiscreteFinite {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for DiscreteFinite {
    type Error = MeasureError;
    fn try_from(atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        DiscreteFinite::new(atoms)
    }
}

impl From<DiscreteFinite> for Vec<Atom> {
    fn from(d: DiscreteFinite) -> Self {
        d.atoms
    }
}

impl DiscreteFinite {
    /// Sorts and merges atoms; locations and masses must be positive.
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Invalid(
                "a discrete measure needs at least one atom".into(),
            ));
        }
        for a in &atoms {
            if !a.location.is_positive() {
                return Err(MeasureError::Invalid(format!(
                    "atom location {} is not positive",
                    format_rational(&a.location)
                )));
            }
            if !a.mass.is_positive() {
                return Err(MeasureError::Invalid(format!(
                    "atom mass {} is not positive",
                    format_rational(&a.mass)
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        Ok(Self { atoms: merged })
    }

    pub fn point(location: Rational, mass: Rational) -> Result<Self, MeasureError> {
        Self::new(vec![Atom { location, mass }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    Discrete { atoms: DiscreteFinite },
    Rule(DiscreteRule),
    Density(PiecewiseDensity),
}

impl From<DiscreteFinite> for Measure {
    fn from(d: DiscreteFinite) -> Self {
        Measure::Discrete { atoms: d }
    }
}

impl From<DiscreteRule> for Measure {
    fn from(d: DiscreteRule) -> Self {
        Measure::Rule(d)
    }
}

impl From<PiecewiseDensity> for Measure {
    fn from(d: PiecewiseDensity) -> Self {
        Measure::Density(d)
    }
}

impl Measure {
    pub fn dirac(location: Rational) -> Result<Self, MeasureError> {
        Ok(DiscreteFinite::point(location, Rational::from_integer(1.into()))?.into())
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, Measure::Density(d) if d.is_signed())
    }

    /// Smallest rational `b` with the support inside `(0, b]`.
    pub fn support_upper_bound(&self) -> Rational {
        match self {
            Measure::Discrete { atoms } => atoms.atoms().last().unwrap().location.clone(),
            Measure::Rule(r) => r.support_upper_bound().clone(),
            Measure::Density(d) => d.upper().clone(),
        }
    }

    /// Canonical JSON text (used for hashing and artifacts).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("measures serialize")
    }
}

/// A moment or CDF value: exact when `radius == 0`, otherwise the true value
/// lies in `[value, value + radius]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentValue {
    pub value: Rational,
    pub radius: Rational,
}

impl MomentValue {
    pub fn exact(value: Rational) -> Self {
        Self {
            value,
            radius: Rational::zero(),
        }
    }

    pub fn from_enclosure(e: Enclosure) -> Self {
        Self {
            value: e.lower,
            radius: e.width,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.radius.is_zero()
    }

    pub fn lower(&self) -> &Rational {
        &self.value
    }

    pub fn upper(&self) -> Rational {
        &self.value + &self.radius
    }

    /// Radius as a float, rounded up.
    pub fn error_radius(&self) -> f64 {
        to_f64_upper(&self.radius)
    }

    pub fn value_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    /// `self - other` as an enclosure.
    pub fn minus(&self, other: &MomentValue) -> MomentValue {
        MomentValue {
            value: &self.value - other.upper(),
            radius: &self.radius + &other.radius,
        }
    }

    /// Sign if the enclosure determines it.
    pub fn sign(&self) -> Option<Ordering> {
        let zero = Rational::zero();
        if self.is_exact() {
            return Some(self.value.cmp(&zero));
        }
        if self.value > zero {
            Some(Ordering::Greater)
        } else if self.upper() < zero {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Whether two enclosures intersect.
    pub fn overlaps(&self, other: &MomentValue) -> bool {
        self.value <= other.upper() && other.value <= self.upper()
    }
}

/// Serialized row of a moment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: u64,
    pub value: String,
    pub error_radius: f64,
    pub exact: bool,
}

impl Serialize for MomentValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MomentValue", 4)?;
        st.serialize_field("value", &format_rational(&self.value))?;
        st.serialize_field("exact", &self.is_exact())?;
        st.serialize_field("error_radius", &self.error_radius())?;
        st.serialize_field("radius", &format_rational(&self.radius))?;
        st.end()
    }
}

fn density_engine(d: &PiecewiseDensity, k: u64, budget: u64) -> Result<MomentEngine, MeasureError> {
    let eng = MomentEngine::new(d.breakpoints(), d.pieces());
    let required = eng.required_bits(k);
    if required > budget {
        return Err(MeasureError::PrecisionExceeded {
            order: k,
            required,
            budget,
        });
    }
    Ok(eng)
}

/// Exact density moment `int f(x) x^k dx` under a bit budget.
pub fn density_moment(d: &PiecewiseDensity, k: u64, budget: u64) -> Result<Rational, MeasureError> {
    Ok(density_engine(d, k, budget)?.moment(k))
}

/// `s_k(mu)` with the default precision budget.
pub fn moment(mu: &Measure, k: u64) -> Result<MomentValue, MeasureError> {
    moment_with_budget(mu, k, DEFAULT_PRECISION_BITS)
}

pub fn moment_with_budget(mu: &Measure, k: u64, budget: u64) -> Result<MomentValue, MeasureError> {
    match mu {
        Measure::Discrete { atoms } => {
            let mut acc = Rational::zero();
            for a in atoms.atoms() {
                acc += &a.mass * pow(&a.location, k);
            }
            Ok(MomentValue::exact(acc))
        }
        Measure::Rule(r) => Ok(MomentValue::from_enclosure(r.moment(k))),
        Measure::Density(d) => Ok(MomentValue::exact(density_moment(d, k, budget)?)),
    }
}

pub fn total_mass(mu: &Measure) -> Result<MomentValue, MeasureError> {
    moment(mu, 0)
}

/// `F(x) = mu([0, x])`, right-continuous.
pub fn cdf(mu: &Measure, x: &Rational) -> Result<MomentValue, MeasureError> {
    match mu {
        Measure::Discrete { atoms } => {
            let mut acc = Rational::zero();
            for a in atoms.atoms().iter().take_while(|a| &a.location <= x) {
                acc += &a.mass;
            }
            Ok(MomentValue::exact(acc))
        }
        Measure::Rule(r) => Ok(MomentValue::from_enclosure(r.cdf(x))),
        Measure::Density(d) => {
            if d.is_signed() {
                return Err(MeasureError::SignedMeasure);
            }
            Ok(MomentValue::exact(d.integral_to(x)))
        }
    }
}

/// `sum_{k=1}^{K} s_k^(-1/(2k))`, a diagnostic only: divergence of the full
/// series cannot be decided from a finite prefix.
pub fn carleman_partial_sum(mu: &Measure, big_k: u64) -> Result<f64, MeasureError> {
    if mu.is_signed() {
        return Err(MeasureError::SignedMeasure);
    }
    let mass = total_mass(mu)?;
    if mass.upper().is_zero() {
        return Err(MeasureError::ZeroMass);
    }
    let mut acc = 0.0;
    for k in 1..=big_k {
        let m = moment(mu, k)?;
        let center = &m.value + &m.radius / Rational::from_integer(2.into());
        if !center.is_positive() {
            return Err(MeasureError::ZeroMass);
        }
        let l2 = crate::rational::log2_abs(&center);
        acc += (-l2 / (2.0 * k as f64)).exp2();
    }
    Ok(acc)
}

/// Rows `k = 0..=k_max` of the moment table.
pub fn moment_table(mu: &Measure, k_max: u64, budget: u64) -> Result<Vec<MomentRow>, MeasureError> {
    let mut rows = Vec::with_capacity(k_max as usize + 1);
    match mu {
        Measure::Density(d) => {
            let eng = density_engine(d, k_max, budget)?;
            let mut sweep = eng.sweep(0);
            for k in 0..=k_max {
                rows.push(MomentRow {
                    k,
                    value: format_rational(&sweep.moment()),
                    error_radius: 0.0,
                    exact: true,
                });
                sweep.advance();
            }
        }
        _ => {
            for k in 0..=k_max {
                let m = moment_with_budget(mu, k, budget)?;
                rows.push(MomentRow {
                    k,
                    value: format_rational(&m.value),
                    error_radius: m.error_radius(),
                    exact: m.is_exact(),
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::rational::{int, rat};

    fn uniform() -> Measure {
        PiecewiseDensity::constant(int(1), int(2), int(1))
            .unwrap()
            .into()
    }

    fn mu_f(truncation: u64) -> Measure {
        DiscreteRule::new(
            LocationRule::Reciprocal {
                base: int(2),
                scale: int(1),
                shift: int(1),
            },
            MassRule::Geometric {
                coef: int(1),
                ratio: rat(1, 2),
            },
            truncation,
            int(2),
            None,
        )
        .unwrap()
        .into()
    }

    #[test]
    fn dirac_moments() {
        let d = Measure::dirac(int(2)).unwrap();
        assert_eq!(moment(&d, 5).unwrap(), MomentValue::exact(int(32)));
    }

    #[test]
    fn uniform_moments() {
        let u = uniform();
        assert_eq!(moment(&u, 0).unwrap().value, int(1));
        assert_eq!(moment(&u, 1).unwrap().value, rat(3, 2));
        // int_1^2 x^4 = 31/5
        assert_eq!(moment(&u, 4).unwrap().value, rat(31, 5));
    }

    #[test]
    fn rule_moment_radius_and_refinement() {
        let coarse = moment(&mu_f(40), 3).unwrap();
        assert!(!coarse.is_exact());
        assert!(coarse.radius <= pow(&rat(1, 2), 40) * int(8));
        assert!(coarse.error_radius() <= 8.0 * 2f64.powi(-40));
        let fine = moment(&mu_f(60), 3).unwrap();
        assert!(coarse.overlaps(&fine));
        assert!(fine.radius < coarse.radius);
    }

    #[test]
    fn cdf_conventions() {
        let d = Measure::dirac(int(2)).unwrap();
        assert_eq!(cdf(&d, &rat(19, 10)).unwrap().value, int(0));
        assert_eq!(cdf(&d, &int(2)).unwrap().value, int(1));
        assert_eq!(cdf(&uniform(), &rat(3, 2)).unwrap().value, rat(1, 2));
        let signed: Measure =
            PiecewiseDensity::signed(vec![int(1), int(2)], vec![Poly::constant(int(-1))])
                .unwrap()
                .into();
        assert_eq!(cdf(&signed, &int(2)), Err(MeasureError::SignedMeasure));
    }

    #[test]
    fn carleman_examples() {
        let one = Measure::dirac(int(1)).unwrap();
        assert!((carleman_partial_sum(&one, 10).unwrap() - 10.0).abs() < 1e-12);
        let four = Measure::dirac(int(4)).unwrap();
        assert!((carleman_partial_sum(&four, 2).unwrap() - 1.0).abs() < 1e-12);
        // Independent float summation for the uniform density: s_k = (2^{k+1} - 1)/(k+1).
        let direct: f64 = (1..=20)
            .map(|k| {
                let s = (2f64.powi(k + 1) - 1.0) / (k as f64 + 1.0);
                s.powf(-1.0 / (2.0 * k as f64))
            })
            .sum();
        let got = carleman_partial_sum(&uniform(), 20).unwrap();
        assert!((got - direct).abs() < 1e-12);
        assert!(got >= 20.0 * 2f64.powf(-0.5) * 0.5);
    }

    #[test]
    fn precision_budget_is_enforced() {
        let err = moment_with_budget(&uniform(), 10_000, 1000).unwrap_err();
        assert!(matches!(
            err,
            MeasureError::PrecisionExceeded { order: 10_000, .. }
        ));
    }

    #[test]
    fn json_round_trip() {
        let ms = vec![Measure::dirac(rat(3, 2)).unwrap(), uniform(), mu_f(12)];
        for m in ms {
            let s = m.to_canonical_json();
            let back: Measure = serde_json::from_str(&s).unwrap();
            assert_eq!(back, m);
        }
        let parsed: Measure = serde_json::from_str(
            r#"{"kind":"discrete","atoms":[{"location":"2","mass":"1/2"},{"location":"1","mass":"1/2"}]}"#,
        )
        .unwrap();
        assert_eq!(moment(&parsed, 1).unwrap().value, rat(3, 2));
        let bad = r#"{"kind":"density","breakpoints":["1","2"],"pieces":[["-1"]]}"#;
        assert!(serde_json::from_str::<Measure>(bad).is_err());
    }

    #[test]
    fn moment_table_rows() {
        let rows = moment_table(&uniform(), 3, DEFAULT_PRECISION_BITS).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].value, "7/3");
        assert!(rows.iter().all(|r| r.exact));
    }
}
