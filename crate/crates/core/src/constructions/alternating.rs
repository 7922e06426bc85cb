use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{
    assemble, check_grid, check_interval, dyadic_grid, peak_bump, BumpSpec, Cell, ConstructionError,
};
use crate::measures::{Measure, MomentEngine, PiecewiseDensity};
use crate::poly::Poly;
use crate::rational::{dyadic_floor, harmonic_sum, int, pow, rat, serde_rational, Rational};
use crate::tailorder::{self, Sign, SignedIndex, TailVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlternatingOptions {
    /// Custom grid `a = t_0 < t_1 < ...` with at least `N + 3` points.
    #[serde(with = "serde_rational::option_vec")]
    pub grid: Option<Vec<Rational>>,
    pub ell_cap: u64,
    /// Impose each inequality on the whole run `[l_j, 2 l_j]`.
    pub run_padded: bool,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            grid: None,
            ell_cap: 20_000,
            run_padded: false,
        }
    }
}

/// Probability densities `f`, `g` whose moment difference alternates in sign
/// at `indices`: `s_l(f) > s_l(g)` at even positions, `<` at odd ones.
///
/// Bump `h_0` carries the normalizing weights `d` (in `f`) and `d'` (in `g`);
/// bump `h_i`, `i >= 1`, carries `c_i` on the leading side and `2/3 c_i` on
/// the other, where odd `i` lead in `f` and even `i` lead in `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternatingPair {
    pub f: PiecewiseDensity,
    pub g: PiecewiseDensity,
    pub indices: Vec<u64>,
    /// `c_1, ..., c_{N+1}`.
    #[serde(with = "serde_rational::vec")]
    pub coefficients: Vec<Rational>,
    #[serde(with = "serde_rational")]
    pub d: Rational,
    #[serde(with = "serde_rational")]
    pub d_prime: Rational,
    /// `D = int h_0`.
    #[serde(with = "serde_rational")]
    pub base_mass: Rational,
    #[serde(with = "serde_rational::vec")]
    pub grid: Vec<Rational>,
    pub bump_degree: u32,
    pub run_padded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternatingReport {
    /// Sign of `s_l(g) - s_l(f)` at each index.
    pub signs: Vec<SignedIndex>,
    pub alternations: usize,
    #[serde(with = "serde_rational")]
    pub mass_f: Rational,
    #[serde(with = "serde_rational")]
    pub mass_g: Rational,
}

/// Weight of bump `i >= 1` in `f` (`in_f`) or in `g`.
fn bump_weight(c: &Rational, i: usize, in_f: bool) -> Rational {
    let leads = (i % 2 == 1) == in_f;
    if leads {
        c.clone()
    } else {
        c * rat(2, 3)
    }
}

/// Targeted sign of `s(g) - s(f)` at the stage topped by bump `i`; odd bumps lead in `f`.
fn target_sign(i: usize) -> Sign {
    if i % 2 == 1 {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

impl AlternatingPair {
    pub fn cells(&self) -> Vec<Cell> {
        self.grid
            .windows(2)
            .map(|w| Cell::new(w[0].clone(), w[1].clone()))
            .collect()
    }

    pub fn bumps(&self) -> Vec<(Cell, Poly)> {
        self.cells()
            .into_iter()
            .map(|c| {
                let p = peak_bump(&c, self.bump_degree);
                (c, p)
            })
            .collect()
    }

    pub fn measures(&self) -> (Measure, Measure) {
        (
            Measure::Density(self.f.clone()),
            Measure::Density(self.g.clone()),
        )
    }

    /// Orders whose sign is claimed: the indices, or whole runs when padded.
    pub fn claimed_orders(&self) -> Vec<(u64, Sign)> {
        let mut out = Vec::new();
        for (j, &l) in self.indices.iter().enumerate() {
            let s = target_sign(j + 1);
            let end = if self.run_padded { 2 * l } else { l };
            out.extend((l..=end).map(|k| (k, s)));
        }
        out
    }

    /// Exact re-check of masses, coefficient monotonicity and every claimed sign.
    pub fn verify(&self) -> Result<AlternatingReport, ConstructionError> {
        let ef = MomentEngine::new(self.f.breakpoints(), self.f.pieces());
        let eg = MomentEngine::new(self.g.breakpoints(), self.g.pieces());
        let (mass_f, mass_g) = (ef.moment(0), eg.moment(0));
        if !mass_f.is_one() || !mass_g.is_one() {
            return Err(ConstructionError::Verification(
                "masses are not both 1".into(),
            ));
        }
        if self.coefficients.iter().any(|c| !c.is_positive())
            || self.coefficients.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(ConstructionError::Verification(
                "coefficients are not positive and strictly decreasing".into(),
            ));
        }
        let factor = if self.run_padded { 2 } else { 1 };
        if self.indices.windows(2).any(|w| w[1] <= w[0] * factor) {
            return Err(ConstructionError::Verification(
                "indices (or runs) overlap".into(),
            ));
        }
        let diff = self.g.difference(&self.f);
        let eng = MomentEngine::new(diff.breakpoints(), diff.pieces());
        check_signs(&eng, &self.claimed_orders())?;
        let signs: Vec<SignedIndex> = self
            .indices
            .iter()
            .enumerate()
            .map(|(j, &k)| SignedIndex {
                k,
                sign: target_sign(j + 1),
            })
            .collect();
        Ok(AlternatingReport {
            alternations: signs.len().saturating_sub(1),
            signs,
            mass_f,
            mass_g,
        })
    }
}

/// Checks `sign(moment(k)) == s` for every claimed `(k, s)`, walking a sweep
/// across consecutive orders.
fn check_signs(eng: &MomentEngine, claims: &[(u64, Sign)]) -> Result<(), ConstructionError> {
    let Some(first) = claims.first() else {
        return Ok(());
    };
    let mut sweep = eng.sweep(first.0);
    for &(k, s) in claims {
        if k < sweep.order() {
            sweep = eng.sweep(k);
        } else if k - sweep.order() > 64 {
            sweep = eng.sweep(k);
        }
        while sweep.order() < k {
            sweep.advance();
        }
        if Sign::from_ordering(sweep.sign()) != Some(s) {
            return Err(ConstructionError::Verification(format!(
                "moment difference at order {k} is not {s:?}"
            )));
        }
    }
    Ok(())
}

/// Sign of a sweep's current moment: float when clear, exact otherwise.
fn sweep_sign(sweep: &mut crate::measures::MomentSweep<'_>) -> Ordering {
    let est = sweep.estimate();
    if est.margin() > 1e-6 {
        est.sign()
    } else {
        sweep.sign()
    }
}

/// Builds the alternating pair with `N = stages` sign changes.
///
/// Stage `j` (bump `i = j + 1`) scans for the first order `l` where the
/// worst case of the already-fixed part, with `h_0` weighted `1/D` on the
/// trailing side, is strictly positive in the leading direction. The next
/// coefficient is the largest power of two at most half the slack ratio
/// `gap / int_a^b x^l`, and at most half the previous coefficient.
pub fn alternating_pair(
    a: &Rational,
    b: &Rational,
    stages: usize,
    spec: &BumpSpec,
    opts: &AlternatingOptions,
) -> Result<AlternatingPair, ConstructionError> {
    check_interval(a, b)?;
    let m = spec.exact_degree()?;
    if stages < 1 {
        return Err(ConstructionError::Invalid("need N >= 1".into()));
    }
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => dyadic_grid(a, b, stages + 2),
    };
    check_grid(&grid, a, b, stages + 3)?;
    if &grid[0] != a {
        return Err(ConstructionError::Invalid("grid must start at a".into()));
    }
    let grid = grid[..stages + 3].to_vec();
    let cells: Vec<Cell> = grid
        .windows(2)
        .map(|w| Cell::new(w[0].clone(), w[1].clone()))
        .collect();
    let bumps: Vec<Poly> = cells.iter().map(|c| peak_bump(c, m)).collect();
    let base_mass = bumps[0].integrate(&cells[0].lo, &cells[0].hi);
    let inv_d = int(1) / &base_mass;
    let span = PiecewiseDensity::constant(a.clone(), b.clone(), int(1))?;
    let span_eng = MomentEngine::new(span.breakpoints(), span.pieces());

    let mut coefficients = vec![std::cmp::min(int(1) / (int(2) * (b - a)), int(1))];
    let mut indices: Vec<u64> = Vec::new();
    for j in 0..=stages {
        let top = j + 1;
        let lead = target_sign(top);
        // Worst-case leading minus trailing over bumps 0..=top.
        let mut parts: Vec<(Cell, Poly)> =
            vec![(cells[0].clone(), bumps[0].scale(&-inv_d.clone()))];
        for i in 1..=top {
            let c = &coefficients[i - 1];
            let (wf, wg) = (bump_weight(c, i, true), bump_weight(c, i, false));
            let w = match lead {
                Sign::Minus => wf - wg,
                Sign::Plus => wg - wf,
            };
            parts.push((cells[i].clone(), bumps[i].scale(&w)));
        }
        let worst = assemble(&parts, true)?;
        let eng = MomentEngine::new(worst.breakpoints(), worst.pieces());
        let start = match indices.last() {
            None => 1,
            Some(&l) if opts.run_padded => 2 * l + 1,
            Some(&l) => l + 1,
        };
        let ell = scan_positive(&eng, start, opts.ell_cap, opts.run_padded).ok_or_else(|| {
            ConstructionError::SearchCap {
                stage: j,
                cap: opts.ell_cap,
                detail: format!(
                    "no order in [{start}, {}] separates bump {top}; coefficients so far {:?}",
                    opts.ell_cap,
                    coefficients
                        .iter()
                        .map(crate::rational::format_rational)
                        .collect::<Vec<_>>()
                ),
            }
        })?;
        indices.push(ell);
        if j < stages {
            let run_end = if opts.run_padded { 2 * ell } else { ell };
            let c = next_coefficient(
                &worst,
                &eng,
                &span,
                &span_eng,
                ell,
                run_end,
                coefficients.last().unwrap(),
            )
            .ok_or_else(|| ConstructionError::SearchCap {
                stage: j,
                cap: 64,
                detail: "no admissible next coefficient".into(),
            })?;
            coefficients.push(c);
        }
    }

    let weighted_mass = |in_f: bool| -> Rational {
        (1..=stages + 1)
            .map(|i| {
                bump_weight(&coefficients[i - 1], i, in_f)
                    * bumps[i].integrate(&cells[i].lo, &cells[i].hi)
            })
            .fold(Rational::zero(), |acc, x| acc + x)
    };
    let d = (int(1) - weighted_mass(true)) / &base_mass;
    let d_prime = (int(1) - weighted_mass(false)) / &base_mass;
    if !d.is_positive() || !d_prime.is_positive() || d > inv_d || d_prime > inv_d {
        return Err(ConstructionError::Verification(
            "normalizing weights fall outside (0, 1/D]".into(),
        ));
    }
    let build = |in_f: bool, w0: &Rational| -> Result<PiecewiseDensity, ConstructionError> {
        let mut parts = vec![(cells[0].clone(), bumps[0].scale(w0))];
        for i in 1..=stages + 1 {
            parts.push((
                cells[i].clone(),
                bumps[i].scale(&bump_weight(&coefficients[i - 1], i, in_f)),
            ));
        }
        Ok(assemble(&parts, false)?)
    };
    let f = build(true, &d)?;
    let g = build(false, &d_prime)?;
    Ok(AlternatingPair {
        f,
        g,
        indices,
        coefficients,
        d,
        d_prime,
        base_mass,
        grid,
        bump_degree: m,
        run_padded: opts.run_padded,
    })
}

/// First `l >= start` with a positive moment (on all of `[l, 2l]` when `run`).
fn scan_positive(eng: &MomentEngine, start: u64, cap: u64, run: bool) -> Option<u64> {
    let mut sweep = eng.sweep(start);
    let mut streak: Option<u64> = None;
    while sweep.order() <= cap.saturating_mul(if run { 2 } else { 1 }) {
        let k = sweep.order();
        if sweep_sign(&mut sweep) == Ordering::Greater {
            let s = *streak.get_or_insert(k);
            if !run || k >= 2 * s {
                return Some(s);
            }
        } else {
            streak = None;
            if k > cap {
                return None;
            }
        }
        sweep.advance();
    }
    None
}

/// Largest admissible dyadic `c <= prev / 2` with `worst - c` still positive on
/// the claimed orders, starting from a float estimate and halving on failure.
fn next_coefficient(
    worst: &PiecewiseDensity,
    eng: &MomentEngine,
    span: &PiecewiseDensity,
    span_eng: &MomentEngine,
    from: u64,
    to: u64,
    prev: &Rational,
) -> Option<Rational> {
    let mut bound = f64::INFINITY;
    let mut sw = eng.sweep(from);
    let mut ss = span_eng.sweep(from);
    for _ in from..=to {
        bound = bound.min(sw.estimate().log2_abs() - ss.estimate().log2_abs());
        sw.advance();
        ss.advance();
    }
    let cap = dyadic_floor(&(prev / int(2)));
    let mut c = if bound.is_finite() {
        pow(&rat(1, 2), (1.0 - bound).ceil().max(0.0) as u64)
    } else {
        cap.clone()
    };
    if c > cap {
        c = cap;
    }
    for _ in 0..64 {
        let check = PiecewiseDensity::linear_combination(&[(int(1), worst), (-c.clone(), span)]);
        let ce = MomentEngine::new(check.breakpoints(), check.pieces());
        let mut sweep = ce.sweep(from);
        let mut ok = true;
        while sweep.order() <= to {
            if sweep.sign() != Ordering::Greater {
                ok = false;
                break;
            }
            sweep.advance();
        }
        if ok {
            return Some(c);
        }
        c /= int(2);
    }
    None
}

/// One run of constant sign in a run-padded pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub start: u64,
    pub end: u64,
    /// Sign of `s_k(g) - s_k(f)` on the run.
    pub sign: Sign,
    /// `sum_{k=start}^{end} 1/k`.
    #[serde(with = "serde_rational")]
    pub harmonic_sum: Rational,
    pub at_least_half: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub runs: Vec<RunSummary>,
    /// Runs where `s_k(f) < s_k(g)`, as `(start, end)`.
    pub below_runs: Vec<(u64, u64)>,
    /// Runs where `s_k(f) > s_k(g)`.
    pub above_runs: Vec<(u64, u64)>,
    #[serde(with = "serde_rational")]
    pub below_partial_sum: Rational,
    #[serde(with = "serde_rational")]
    pub above_partial_sum: Rational,
}

/// Verifies a run-padded pair run by run and summarizes the harmonic mass of
/// the two dominance sets.
pub fn run_padded_alternating(pair: &AlternatingPair) -> Result<RunReport, ConstructionError> {
    if !pair.run_padded {
        return Err(ConstructionError::Invalid(
            "pair was not built with run padding".into(),
        ));
    }
    let diff = pair.g.difference(&pair.f);
    let eng = MomentEngine::new(diff.breakpoints(), diff.pieces());
    let mut runs = Vec::new();
    for (j, &l) in pair.indices.iter().enumerate() {
        let sign = target_sign(j + 1);
        let mut sweep = eng.sweep(l);
        while sweep.order() <= 2 * l {
            if Sign::from_ordering(sweep.sign()) != Some(sign) {
                return Err(ConstructionError::Verification(format!(
                    "run starting at {l} breaks at order {}",
                    sweep.order()
                )));
            }
            sweep.advance();
        }
        let h = harmonic_sum(l, 2 * l);
        runs.push(RunSummary {
            start: l,
            end: 2 * l,
            sign,
            at_least_half: h >= rat(1, 2),
            harmonic_sum: h,
        });
    }
    let pick = |s: Sign| -> (Vec<(u64, u64)>, Rational) {
        let sel: Vec<&RunSummary> = runs.iter().filter(|r| r.sign == s).collect();
        let total = sel
            .iter()
            .fold(Rational::zero(), |acc, r| acc + &r.harmonic_sum);
        (sel.iter().map(|r| (r.start, r.end)).collect(), total)
    };
    let (below_runs, below_partial_sum) = pick(Sign::Plus);
    let (above_runs, above_partial_sum) = pick(Sign::Minus);
    Ok(RunReport {
        runs,
        below_runs,
        above_runs,
        below_partial_sum,
        above_partial_sum,
    })
}

/// Two probability densities comparable with `g` on either side whose
/// even mixture equals `f` and so alternates against `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedDemo {
    pub low: PiecewiseDensity,
    pub high: PiecewiseDensity,
    #[serde(with = "serde_rational")]
    pub gamma_low: Rational,
    #[serde(with = "serde_rational")]
    pub gamma_high: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedReport {
    /// `decide_piecewise(low, g)`.
    pub low_vs_g: TailVerdict,
    /// `decide_piecewise(g, high)`.
    pub g_vs_high: TailVerdict,
    pub mixture_equals_f: bool,
    /// Signs of `s_l(g) - s_l(mixture)` at the pair's indices.
    pub mixture_signs: Vec<SignedIndex>,
}

impl MixedDemo {
    pub fn verify(&self, pair: &AlternatingPair) -> Result<MixedReport, ConstructionError> {
        let low_vs_g = tailorder::decide_piecewise(&self.low, &pair.g)?;
        let g_vs_high = tailorder::decide_piecewise(&pair.g, &self.high)?;
        if !matches!(low_vs_g, TailVerdict::StrictlyBelow { .. })
            || !matches!(g_vs_high, TailVerdict::StrictlyBelow { .. })
        {
            return Err(ConstructionError::Verification(
                "pure payoffs are not ordered low < g < high".into(),
            ));
        }
        let mixture = PiecewiseDensity::linear_combination(&[
            (rat(1, 2), &self.low),
            (rat(1, 2), &self.high),
        ]);
        let mixture_equals_f = mixture
            .difference(&pair.f)
            .pieces()
            .iter()
            .all(Poly::is_zero);
        if !mixture_equals_f {
            return Err(ConstructionError::Verification(
                "mixture differs from f".into(),
            ));
        }
        let diff = pair.g.difference(&mixture);
        let eng = MomentEngine::new(diff.breakpoints(), diff.pieces());
        let claims: Vec<(u64, Sign)> = pair
            .indices
            .iter()
            .enumerate()
            .map(|(j, &k)| (k, target_sign(j + 1)))
            .collect();
        check_signs(&eng, &claims)?;
        let mixture_signs = claims
            .into_iter()
            .map(|(k, sign)| SignedIndex { k, sign })
            .collect();
        Ok(MixedReport {
            low_vs_g,
            g_vs_high,
            mixture_equals_f,
            mixture_signs,
        })
    }
}

/// Mixed-strategy demonstration: `low` weights every bump by `c_i / 3`,
/// `high` weights odd bumps by `5/3 c_i` and even bumps by `c_i`, and `h_0`
/// absorbs the remaining mass in each.
pub fn mixed_incomparable_demo(pair: &AlternatingPair) -> Result<MixedDemo, ConstructionError> {
    let bumps = pair.bumps();
    let n = pair.coefficients.len();
    let weights = |odd: Rational, even: Rational| -> Vec<Rational> {
        (1..=n)
            .map(|i| &pair.coefficients[i - 1] * if i % 2 == 1 { &odd } else { &even })
            .collect()
    };
    let build = |w: Vec<Rational>| -> Result<(PiecewiseDensity, Rational), ConstructionError> {
        let mass: Rational = w
            .iter()
            .zip(&bumps[1..])
            .fold(Rational::zero(), |acc, (wi, (c, p))| {
                acc + wi * p.integrate(&c.lo, &c.hi)
            });
        let gamma = (int(1) - mass) / &pair.base_mass;
        if !gamma.is_positive() {
            return Err(ConstructionError::Verification(
                "no positive normalizing weight".into(),
            ));
        }
        let mut parts = vec![(bumps[0].0.clone(), bumps[0].1.scale(&gamma))];
        parts.extend(
            bumps[1..]
                .iter()
                .zip(&w)
                .map(|((c, p), wi)| (c.clone(), p.scale(wi))),
        );
        Ok((assemble(&parts, false)?, gamma))
    };
    let (low, gamma_low) = build(weights(rat(1, 3), rat(1, 3)))?;
    let (high, gamma_high) = build(weights(rat(5, 3), int(1)))?;
    Ok(MixedDemo {
        low,
        high,
        gamma_low,
        gamma_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_flip() {
        let p = alternating_pair(
            &int(1),
            &int(2),
            1,
            &BumpSpec::default(),
            &AlternatingOptions::default(),
        )
        .unwrap();
        let r = p.verify().unwrap();
        assert_eq!(r.signs.len(), 2);
        assert_eq!(r.signs[0].sign, Sign::Minus);
        assert_eq!(r.signs[1].sign, Sign::Plus);
        assert_eq!(p.coefficients[0], rat(1, 2));
    }

    #[test]
    fn mixture_coefficients_average_to_f() {
        let p = alternating_pair(
            &int(1),
            &int(2),
            2,
            &BumpSpec::default(),
            &AlternatingOptions::default(),
        )
        .unwrap();
        let demo = mixed_incomparable_demo(&p).unwrap();
        let r = demo.verify(&p).unwrap();
        assert!(r.mixture_equals_f);
        assert_eq!(&demo.gamma_low + &demo.gamma_high, int(2) * &p.d);
    }

    #[test]
    fn run_padding_holds_on_runs() {
        let opts = AlternatingOptions {
            run_padded: true,
            ..Default::default()
        };
        let p = alternating_pair(&int(1), &int(2), 1, &BumpSpec::default(), &opts).unwrap();
        p.verify().unwrap();
        let report = run_padded_alternating(&p).unwrap();
        assert_eq!(report.runs.len(), 2);
        assert!(report.runs.iter().all(|r| r.at_least_half));
    }
}
