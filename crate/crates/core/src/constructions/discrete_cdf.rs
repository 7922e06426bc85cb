use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{assemble, unit_mass_bump, BumpSpec, Cell, ConstructionError};
use crate::measures::{
    DiscreteRule, Enclosure, LocationRule, MassRule, Measure, PiecewiseDensity, Residual,
};
use crate::rational::{format_rational, int, pow, rat, serde_rational, to_f64, Rational};
use crate::tailorder::{self, TailVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscreteCdfOptions {
    /// Number of explicit atoms per measure.
    pub truncation: u64,
    /// CDF alternation is checked for `k = 1..=check_range`.
    pub check_range: u64,
    /// Moment lower bound is checked for `n = 1..=moment_depth`.
    pub moment_depth: u64,
}

impl Default for DiscreteCdfOptions {
    fn default() -> Self {
        Self {
            truncation: 40,
            check_range: 20,
            moment_depth: 100,
        }
    }
}

/// Expected relation between the two CDFs at a check point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    GAbove,
    GBelow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdfCheck {
    pub k: u64,
    #[serde(with = "serde_rational")]
    pub point: Rational,
    pub expected: Relation,
    #[serde(with = "serde_rational")]
    pub f_lower: Rational,
    #[serde(with = "serde_rational")]
    pub f_upper: Rational,
    #[serde(with = "serde_rational")]
    pub g_lower: Rational,
    #[serde(with = "serde_rational")]
    pub g_upper: Rational,
    pub holds: bool,
}

impl CdfCheck {
    fn new(k: u64, point: Rational, expected: Relation, f: Enclosure, g: Enclosure) -> Self {
        let (f_upper, g_upper) = (f.upper(), g.upper());
        let holds = match expected {
            Relation::GAbove => g.lower > f_upper,
            Relation::GBelow => g_upper < f.lower,
        };
        Self {
            k,
            point,
            expected,
            f_lower: f.lower,
            f_upper,
            g_lower: g.lower,
            g_upper,
            holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundRow {
    pub n: u64,
    /// `sum_{i <= T} (g(y_i) y_i^n - f(x_i) x_i^n)`, every term checked `>= 0`.
    pub head_difference: f64,
    pub termwise_nonnegative: bool,
    /// `g(y_0)_lower * y_0^n`, the certified lower bound for `s_n(g) - s_n(f)`.
    pub lower_bound: f64,
    /// The moment enclosures admit a difference at least `lower_bound`.
    pub enclosures_consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub x: f64,
    pub f_cdf: f64,
    pub g_lo: f64,
    pub g_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCdfReport {
    #[serde(with = "serde_rational")]
    pub y0: Rational,
    #[serde(with = "serde_rational")]
    pub c1: Rational,
    #[serde(with = "serde_rational")]
    pub g_y1: Rational,
    /// Every `c_i < 1` and `c_i >= 1 - 2^{-i}` for `i <= truncation`.
    pub shrink_factors_ok: bool,
    #[serde(with = "serde_rational")]
    pub residual_lower: Rational,
    #[serde(with = "serde_rational")]
    pub residual_upper: Rational,
    pub cdf_checks: Vec<CdfCheck>,
    pub moment_rows: Vec<MomentBoundRow>,
}

impl DiscreteCdfReport {
    pub fn passed(&self) -> bool {
        self.shrink_factors_ok
            && self.cdf_checks.iter().all(|c| c.holds)
            && self
                .moment_rows
                .iter()
                .all(|r| r.termwise_nonnegative && r.enclosures_consistent)
    }
}

/// Atoms `x_k = 2 - 1/(k+1)` with masses `2^{-k}` (`f`), and atoms at the
/// midpoints `y_k` with masses `c_k 2^{-k}` plus a residual atom at
/// `y_0 = (1+a)/2` (`g`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteCdfPair {
    #[serde(with = "serde_rational")]
    pub a: Rational,
    pub f: DiscreteRule,
    pub g: DiscreteRule,
    pub options: DiscreteCdfOptions,
}

fn x_rule() -> LocationRule {
    LocationRule::Reciprocal {
        base: int(2),
        scale: int(1),
        shift: int(1),
    }
}

fn x_at(k: u64) -> Rational {
    x_rule().at(k)
}

fn y_at(k: u64) -> Rational {
    (x_at(k) + x_at(k + 1)) / int(2)
}

fn check_a(a: &Rational) -> Result<(), ConstructionError> {
    if a <= &int(1) || a >= &rat(3, 2) {
        return Err(ConstructionError::Invalid(format!(
            "need 1 < a < 3/2, got {}",
            format_rational(a)
        )));
    }
    Ok(())
}

pub fn discrete_alternating_cdf_pair(
    a: &Rational,
    opts: &DiscreteCdfOptions,
) -> Result<DiscreteCdfPair, ConstructionError> {
    check_a(a)?;
    if opts.truncation < 2 || opts.check_range < 1 || opts.check_range >= opts.truncation {
        return Err(ConstructionError::Invalid(
            "need 1 <= check_range < truncation and truncation >= 2".into(),
        ));
    }
    let y0 = (int(1) + a) / int(2);
    let f = DiscreteRule::new(
        x_rule(),
        MassRule::Geometric {
            coef: int(1),
            ratio: rat(1, 2),
        },
        opts.truncation,
        int(2),
        None,
    )?;
    let g = DiscreteRule::new(
        x_rule().midpoint_of().expect("reciprocal"),
        MassRule::Shrunk {
            coef: int(1),
            ratio: rat(1, 2),
            floor_ratio: rat(1, 2),
            numerator: x_rule(),
        },
        opts.truncation,
        int(2),
        Some(Residual { location: y0 }),
    )?;
    Ok(DiscreteCdfPair {
        a: a.clone(),
        f,
        g,
        options: opts.clone(),
    })
}

impl DiscreteCdfPair {
    pub fn measures(&self) -> (Measure, Measure) {
        (Measure::Rule(self.f.clone()), Measure::Rule(self.g.clone()))
    }

    pub fn y0(&self) -> Rational {
        self.g.residual().expect("residual atom").location.clone()
    }

    pub fn verify(&self) -> Result<DiscreteCdfReport, ConstructionError> {
        let t = self.options.truncation;
        let y0 = self.y0();
        let mass = self.g.mass();
        let shrink_factors_ok = (1..=t).all(|i| {
            let c = mass.factor_at(i);
            c < int(1) && c >= int(1) - pow(&rat(1, 2), i) && c >= x_at(i) / y_at(i)
        });
        let residual = self.g.residual_mass().expect("residual atom");
        let mut cdf_checks = Vec::new();
        for k in 1..=self.options.check_range {
            let y = y_at(k);
            cdf_checks.push(CdfCheck::new(
                k,
                y.clone(),
                Relation::GAbove,
                self.f.cdf(&y),
                self.g.cdf(&y),
            ));
            let x = x_at(k);
            cdf_checks.push(CdfCheck::new(
                k,
                x.clone(),
                Relation::GBelow,
                self.f.cdf(&x),
                self.g.cdf(&x),
            ));
        }
        let atoms_f = self.f.atoms();
        let atoms_g = self.g.atoms();
        let mut moment_rows = Vec::new();
        for n in 1..=self.options.moment_depth {
            let mut head = Rational::zero();
            let mut termwise = true;
            for ((x, fm), (y, gm)) in atoms_f.iter().zip(&atoms_g) {
                let term = gm * pow(y, n) - fm * pow(x, n);
                termwise &= !term.is_negative();
                head += term;
            }
            let bound = &residual.lower * pow(&y0, n);
            let sf = self.f.moment(n);
            let sg = self.g.moment(n);
            let enclosures_consistent = sg.upper() - &sf.lower >= bound;
            moment_rows.push(MomentBoundRow {
                n,
                head_difference: to_f64(&head),
                termwise_nonnegative: termwise,
                lower_bound: to_f64(&bound),
                enclosures_consistent,
            });
        }
        let c1 = mass.factor_at(1);
        let g_y1 = mass.at(1);
        Ok(DiscreteCdfReport {
            y0,
            c1,
            g_y1,
            shrink_factors_ok,
            residual_upper: residual.upper(),
            residual_lower: residual.lower,
            cdf_checks,
            moment_rows,
        })
    }

    /// CDF samples at `a`, `y_0`, every `x_k`, `y_k` with `k <= check_range`, and 2.
    pub fn plot_data(&self) -> Vec<PlotRow> {
        let mut xs = vec![self.a.clone(), self.y0(), int(2)];
        for k in 1..=self.options.check_range {
            xs.push(x_at(k));
            xs.push(y_at(k));
        }
        xs.sort();
        xs.dedup();
        xs.iter()
            .map(|x| {
                let f = self.f.cdf(x);
                let g = self.g.cdf(x);
                PlotRow {
                    x: to_f64(x),
                    f_cdf: to_f64(&f.lower),
                    g_lo: to_f64(&g.lower),
                    g_hi: to_f64(&g.upper()),
                }
            })
            .collect()
    }
}

/// Continuous version: every atom is smeared over an interval by a unit-mass
/// bump, left of `x_k` for `f` and right of `y_k` for `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcCdfPair {
    #[serde(with = "serde_rational")]
    pub a: Rational,
    pub f: PiecewiseDensity,
    pub g: PiecewiseDensity,
    /// Atoms beyond this index are lumped into one final bump per density.
    pub truncation: u64,
    pub check_range: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcCdfReport {
    #[serde(with = "serde_rational")]
    pub mass_f: Rational,
    #[serde(with = "serde_rational")]
    pub mass_g: Rational,
    pub cdf_checks: Vec<CdfCheck>,
    /// Exact piecewise decision of `f` against `g`.
    pub decision: TailVerdict,
}

impl AcCdfReport {
    pub fn passed(&self) -> bool {
        self.mass_f.is_one()
            && self.mass_g.is_one()
            && self.cdf_checks.iter().all(|c| c.holds)
            && matches!(self.decision, TailVerdict::StrictlyBelow { .. })
    }
}

fn z_at(k: u64, y0: &Rational) -> Rational {
    let prev = if k == 1 { y0.clone() } else { y_at(k - 1) };
    (prev + x_at(k)) / int(2)
}

/// Builds the continuous pair with `truncation = k_max + 10` explicit atoms.
///
/// `f` lumps its tail mass `2^{-T}` onto `[z_{T+1}, x_{T+1}]`. `g` puts the
/// truncated residual `sum_{i <= T} (1 - c_i) 2^{-i}` on `[y_0, z_1]` and its
/// own tail `2^{-T}` on `[y_{T+1}, z_{T+2}]`, so both masses are exactly 1.
pub fn ac_alternating_cdf_pair(
    a: &Rational,
    k_max: u64,
    spec: &BumpSpec,
) -> Result<AcCdfPair, ConstructionError> {
    check_a(a)?;
    let m = spec.exact_degree()?;
    if k_max < 1 {
        return Err(ConstructionError::Invalid("k_max must be >= 1".into()));
    }
    let t = k_max + 10;
    let y0 = (int(1) + a) / int(2);
    let mass = MassRule::Shrunk {
        coef: int(1),
        ratio: rat(1, 2),
        floor_ratio: rat(1, 2),
        numerator: x_rule(),
    };
    let bump = |lo: Rational, hi: Rational, w: &Rational| {
        let cell = Cell::new(lo, hi);
        let p = unit_mass_bump(&cell, m).scale(w);
        (cell, p)
    };
    let tail = pow(&rat(1, 2), t);
    let mut f_parts = Vec::new();
    let mut g_parts = Vec::new();
    let mut residual = Rational::zero();
    for k in 1..=t {
        let fk = pow(&rat(1, 2), k);
        f_parts.push(bump(z_at(k, &y0), x_at(k), &fk));
        g_parts.push(bump(y_at(k), z_at(k + 1, &y0), &mass.at(k)));
        residual += &fk - mass.at(k);
    }
    f_parts.push(bump(z_at(t + 1, &y0), x_at(t + 1), &tail));
    g_parts.push(bump(y_at(t + 1), z_at(t + 2, &y0), &tail));
    g_parts.push(bump(y0.clone(), z_at(1, &y0), &residual));
    let f = assemble(&f_parts, false)?;
    let g = assemble(&g_parts, false)?;
    Ok(AcCdfPair {
        a: a.clone(),
        f,
        g,
        truncation: t,
        check_range: k_max,
    })
}

impl AcCdfPair {
    pub fn measures(&self) -> (Measure, Measure) {
        (
            Measure::Density(self.f.clone()),
            Measure::Density(self.g.clone()),
        )
    }

    pub fn verify(&self) -> Result<AcCdfReport, ConstructionError> {
        let y0 = (int(1) + &self.a) / int(2);
        let exact = |q: Rational| Enclosure {
            lower: q,
            width: Rational::zero(),
        };
        let mut cdf_checks = Vec::new();
        for k in 1..=self.check_range {
            let x = x_at(k);
            cdf_checks.push(CdfCheck::new(
                k,
                x.clone(),
                Relation::GBelow,
                exact(self.f.integral_to(&x)),
                exact(self.g.integral_to(&x)),
            ));
            let z = z_at(k + 1, &y0);
            cdf_checks.push(CdfCheck::new(
                k,
                z.clone(),
                Relation::GAbove,
                exact(self.f.integral_to(&z)),
                exact(self.g.integral_to(&z)),
            ));
        }
        let decision = tailorder::decide_piecewise(&self.f, &self.g)?;
        Ok(AcCdfReport {
            mass_f: self.f.integral_to(self.f.upper()),
            mass_g: self.g.integral_to(self.g.upper()),
            cdf_checks,
            decision,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let p = discrete_alternating_cdf_pair(&rat(7, 5), &DiscreteCdfOptions::default()).unwrap();
        assert_eq!(p.y0(), rat(6, 5));
        // y_1 = (3/2 + 5/3)/2 = 19/12, so x_1/y_1 = 18/19 > 1/2.
        assert_eq!(y_at(1), rat(19, 12));
        let r = p.verify().unwrap();
        assert_eq!(r.c1, rat(18, 19));
        assert_eq!(r.g_y1, rat(9, 19));
        assert!(r.passed());
    }

    #[test]
    fn rejects_a_out_of_range() {
        assert!(discrete_alternating_cdf_pair(&rat(3, 2), &DiscreteCdfOptions::default()).is_err());
        assert!(discrete_alternating_cdf_pair(&int(1), &DiscreteCdfOptions::default()).is_err());
    }

    #[test]
    fn smeared_pair_keeps_alternation() {
        let p = ac_alternating_cdf_pair(&rat(7, 5), 4, &BumpSpec::default()).unwrap();
        let r = p.verify().unwrap();
        assert!(r.passed(), "{r:?}");
        // F~(x_k) equals the discrete F(x_k) = 1 - 2^{-k}.
        assert_eq!(p.f.integral_to(&x_at(3)), int(1) - pow(&rat(1, 2), 3));
    }
}
