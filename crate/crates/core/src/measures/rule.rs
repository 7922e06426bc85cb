//! Countable discrete measures given by closed-form rules, evaluated by
//! truncation plus a rigorous tail bound.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::MeasureError;
use crate::rational::{format_rational, int, pow, serde_rational, Rational};

/// Atom locations `x_k`, `k >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocationRule {
    /// `base - scale / (k + shift)`.
    Reciprocal {
        #[serde(with = "serde_rational")]
        base: Rational,
        #[serde(with = "serde_rational")]
        scale: Rational,
        #[serde(with = "serde_rational")]
        shift: Rational,
    },
    /// Midpoint of consecutive reciprocal locations, `(x_k + x_{k+1}) / 2`.
    ReciprocalMidpoint {
        #[serde(with = "serde_rational")]
        base: Rational,
        #[serde(with = "serde_rational")]
        scale: Rational,
        #[serde(with = "serde_rational")]
        shift: Rational,
    },
}

impl LocationRule {
    pub fn at(&self, k: u64) -> Rational {
        match self {
            LocationRule::Reciprocal { base, scale, shift } => {
                base - scale / (int(k as i64) + shift)
            }
            LocationRule::ReciprocalMidpoint { base, scale, shift } => {
                let a = base - scale / (int(k as i64) + shift);
                let b = base - scale / (int(k as i64 + 1) + shift);
                (a + b) / int(2)
            }
        }
    }

    /// Supremum of all locations (the limit as `k -> inf`).
    pub fn supremum(&self) -> &Rational {
        match self {
            LocationRule::Reciprocal { base, .. }
            | LocationRule::ReciprocalMidpoint { base, .. } => base,
        }
    }

    fn params(&self) -> (&Rational, &Rational, &Rational) {
        match self {
            LocationRule::Reciprocal { base, scale, shift }
            | LocationRule::ReciprocalMidpoint { base, scale, shift } => (base, scale, shift),
        }
    }

    fn validate(&self) -> Result<(), MeasureError> {
        let (_, scale, shift) = self.params();
        if !scale.is_positive() {
            return Err(MeasureError::Invalid(
                "location rule scale must be positive".into(),
            ));
        }
        if !(shift + int(1)).is_positive() {
            return Err(MeasureError::Invalid(
                "location rule must be defined for k >= 1".into(),
            ));
        }
        if !self.at(1).is_positive() {
            return Err(MeasureError::Invalid("locations must be positive".into()));
        }
        Ok(())
    }

    pub fn midpoint_of(&self) -> Option<LocationRule> {
        match self {
            LocationRule::Reciprocal { base, scale, shift } => {
                Some(LocationRule::ReciprocalMidpoint {
                    base: base.clone(),
                    scale: scale.clone(),
                    shift: shift.clone(),
                })
            }
            LocationRule::ReciprocalMidpoint { .. } => None,
        }
    }
}

/// Atom masses `m_k`, `k >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassRule {
    /// `coef * ratio^k`.
    Geometric {
        #[serde(with = "serde_rational")]
        coef: Rational,
        #[serde(with = "serde_rational")]
        ratio: Rational,
    },
    /// `c_k * coef * ratio^k` with `c_k = max(x_k / y_k, 1 - floor_ratio^k)`,
    /// where `x_k` is `numerator` and `y_k` is its midpoint rule.
    Shrunk {
        #[serde(with = "serde_rational")]
        coef: Rational,
        #[serde(with = "serde_rational")]
        ratio: Rational,
        #[serde(with = "serde_rational")]
        floor_ratio: Rational,
        numerator: LocationRule,
    },
}

impl MassRule {
    fn coef_ratio(&self) -> (&Rational, &Rational) {
        match self {
            MassRule::Geometric { coef, ratio } | MassRule::Shrunk { coef, ratio, .. } => {
                (coef, ratio)
            }
        }
    }

    /// Unshrunk mass `coef * ratio^k`.
    pub fn parent_at(&self, k: u64) -> Rational {
        let (coef, ratio) = self.coef_ratio();
        coef * pow(ratio, k)
    }

    /// Shrink factor `c_k` (1 for geometric masses).
    pub fn factor_at(&self, k: u64) -> Rational {
        match self {
            MassRule::Geometric { .. } => Rational::one(),
            MassRule::Shrunk {
                floor_ratio,
                numerator,
                ..
            } => {
                let y = numerator.midpoint_of().expect("validated").at(k);
                let q = numerator.at(k) / y;
                let floor = int(1) - pow(floor_ratio, k);
                std::cmp::max(q, floor)
            }
        }
    }

    pub fn at(&self, k: u64) -> Rational {
        self.factor_at(k) * self.parent_at(k)
    }

    /// Upper bound on `sum_{k > t} m_k`.
    pub fn tail_bound(&self, t: u64) -> Rational {
        let (coef, ratio) = self.coef_ratio();
        coef * pow(ratio, t + 1) / (int(1) - ratio)
    }

    /// Upper bound on `sum_{k > t} (parent_k - m_k)`.
    pub fn deficit_tail_bound(&self, t: u64) -> Rational {
        match self {
            MassRule::Geometric { .. } => Rational::zero(),
            MassRule::Shrunk {
                coef,
                ratio,
                floor_ratio,
                ..
            } => {
                let q = ratio * floor_ratio;
                coef * pow(&q, t + 1) / (int(1) - q)
            }
        }
    }

    fn validate(&self) -> Result<(), MeasureError> {
        let (coef, ratio) = self.coef_ratio();
        if !coef.is_positive() || !ratio.is_positive() || ratio >= &int(1) {
            return Err(MeasureError::Invalid(
                "mass rule needs coef > 0 and 0 < ratio < 1".into(),
            ));
        }
        if let MassRule::Shrunk {
            floor_ratio,
            numerator,
            ..
        } = self
        {
            if !floor_ratio.is_positive() || floor_ratio >= &int(1) {
                return Err(MeasureError::Invalid(
                    "floor_ratio must lie in (0, 1)".into(),
                ));
            }
            if numerator.midpoint_of().is_none() {
                return Err(MeasureError::Invalid(
                    "shrunk masses need a reciprocal numerator rule".into(),
                ));
            }
            numerator.validate()?;
        }
        Ok(())
    }
}

/// Extra atom absorbing the mass removed by a shrunk rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Residual {
    #[serde(with = "serde_rational")]
    pub location: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RuleRepr", into = "RuleRepr")]
pub struct DiscreteRule {
    location: LocationRule,
    mass: MassRule,
    truncation: u64,
    support_upper_bound: Rational,
    residual: Option<Residual>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RuleRepr {
    location: LocationRule,
    mass: MassRule,
    truncation: u64,
    #[serde(with = "serde_rational")]
    support_upper_bound: Rational,
    #[serde(default)]
    residual: Option<Residual>,
}

impl TryFrom<RuleRepr> for DiscreteRule {
    type Error = MeasureError;
    fn try_from(r: RuleRepr) -> Result<Self, MeasureError> {
        DiscreteRule::new(
            r.location,
            r.mass,
            r.truncation,
            r.support_upper_bound,
            r.residual,
        )
    }
}

impl From<DiscreteRule> for RuleRepr {
    fn from(d: DiscreteRule) -> Self {
        RuleRepr {
            location: d.location,
            mass: d.mass,
            truncation: d.truncation,
            support_upper_bound: d.support_upper_bound,
            residual: d.residual,
        }
    }
}

/// Rational enclosure `[lower, lower + width]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lower: Rational,
    pub width: Rational,
}

impl Enclosure {
    pub fn upper(&self) -> Rational {
        &self.lower + &self.width
    }
}

impl DiscreteRule {
    pub fn new(
        location: LocationRule,
        mass: MassRule,
        truncation: u64,
        support_upper_bound: Rational,
        residual: Option<Residual>,
    ) -> Result<Self, MeasureError> {
        if truncation < 1 {
            return Err(MeasureError::Invalid(
                "truncation index must be >= 1".into(),
            ));
        }
        location.validate()?;
        mass.validate()?;
        if &support_upper_bound < location.supremum() {
            return Err(MeasureError::Invalid(format!(
                "support bound {} is below the location supremum {}",
                format_rational(&support_upper_bound),
                format_rational(location.supremum())
            )));
        }
        if let Some(r) = &residual {
            if !r.location.is_positive() || r.location > support_upper_bound {
                return Err(MeasureError::Invalid(
                    "residual atom must lie in (0, support bound]".into(),
                ));
            }
            if matches!(mass, MassRule::Geometric { .. }) {
                return Err(MeasureError::Invalid(
                    "a residual atom needs a shrunk mass rule".into(),
                ));
            }
        }
        Ok(Self {
            location,
            mass,
            truncation,
            support_upper_bound,
            residual,
        })
    }

    pub fn location(&self) -> &LocationRule {
        &self.location
    }

    pub fn mass(&self) -> &MassRule {
        &self.mass
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn support_upper_bound(&self) -> &Rational {
        &self.support_upper_bound
    }

    pub fn residual(&self) -> Option<&Residual> {
        self.residual.as_ref()
    }

    pub fn with_truncation(&self, truncation: u64) -> Result<Self, MeasureError> {
        Self::new(
            self.location.clone(),
            self.mass.clone(),
            truncation,
            self.support_upper_bound.clone(),
            self.residual.clone(),
        )
    }

    /// Enclosure of the residual atom's mass `sum_k (parent_k - m_k)`.
    pub fn residual_mass(&self) -> Option<Enclosure> {
        self.residual.as_ref()?;
        let mut lower = Rational::zero();
        for k in 1..=self.truncation {
            lower += self.mass.parent_at(k) - self.mass.at(k);
        }
        Some(Enclosure {
            lower,
            width: self.mass.deficit_tail_bound(self.truncation),
        })
    }

    /// Truncated atoms `(x_k, m_k)` for `k = 1..=truncation`.
    pub fn atoms(&self) -> Vec<(Rational, Rational)> {
        (1..=self.truncation)
            .map(|k| (self.location.at(k), self.mass.at(k)))
            .collect()
    }

    pub fn moment(&self, n: u64) -> Enclosure {
        let mut lower = Rational::zero();
        for (x, m) in self.atoms() {
            lower += m * pow(&x, n);
        }
        let mut width = self.mass.tail_bound(self.truncation) * pow(&self.support_upper_bound, n);
        if let (Some(r), Some(enc)) = (&self.residual, self.residual_mass()) {
            let yn = pow(&r.location, n);
            lower += &enc.lower * &yn;
            width += enc.width * yn;
        }
        Enclosure { lower, width }
    }

    pub fn cdf(&self, x: &Rational) -> Enclosure {
        let mut lower = Rational::zero();
        for (loc, m) in self.atoms() {
            if &loc <= x {
                lower += m;
            }
        }
        let mut width = Rational::zero();
        if x >= &self.location.at(self.truncation + 1) {
            width += self.mass.tail_bound(self.truncation);
        }
        if let (Some(r), Some(enc)) = (&self.residual, self.residual_mass()) {
            if &r.location <= x {
                lower += enc.lower;
                width += enc.width;
            }
        }
        Enclosure { lower, width }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn x_rule() -> LocationRule {
        LocationRule::Reciprocal {
            base: int(2),
            scale: int(1),
            shift: int(1),
        }
    }

    #[test]
    fn reciprocal_locations() {
        assert_eq!(x_rule().at(1), rat(3, 2));
        assert_eq!(x_rule().at(2), rat(5, 3));
        assert_eq!(x_rule().midpoint_of().unwrap().at(1), rat(19, 12));
    }

    #[test]
    fn shrink_factor_first_term() {
        let m = MassRule::Shrunk {
            coef: int(1),
            ratio: rat(1, 2),
            floor_ratio: rat(1, 2),
            numerator: x_rule(),
        };
        // x_1 / y_1 = (3/2) / (19/12) = 18/19 versus 1 - 1/2
        assert_eq!(m.factor_at(1), rat(18, 19));
        for k in 1..30 {
            let c = m.factor_at(k);
            assert!(c < int(1));
            assert!(c >= int(1) - pow(&rat(1, 2), k));
        }
    }

    #[test]
    fn geometric_total_mass_enclosure() {
        let r = DiscreteRule::new(
            x_rule(),
            MassRule::Geometric {
                coef: int(1),
                ratio: rat(1, 2),
            },
            10,
            int(2),
            None,
        )
        .unwrap();
        let m = r.moment(0);
        assert_eq!(m.lower, int(1) - pow(&rat(1, 2), 10));
        assert_eq!(m.upper(), int(1));
    }

    #[test]
    fn validation() {
        let geo = MassRule::Geometric {
            coef: int(1),
            ratio: rat(1, 2),
        };
        assert!(DiscreteRule::new(x_rule(), geo.clone(), 0, int(2), None).is_err());
        assert!(DiscreteRule::new(x_rule(), geo.clone(), 5, rat(3, 2), None).is_err());
        let res = Some(Residual {
            location: rat(6, 5),
        });
        assert!(DiscreteRule::new(x_rule(), geo, 5, int(2), res).is_err());
        let bad = MassRule::Geometric {
            coef: int(1),
            ratio: int(1),
        };
        assert!(DiscreteRule::new(x_rule(), bad, 5, int(2), None).is_err());
    }
}
