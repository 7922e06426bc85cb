use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{assemble, check_interval, peak_bump, BumpMode, BumpSpec, Cell, ConstructionError};
use crate::config::DEFAULT_PRECISION_BITS;
use crate::linalg;
use crate::measures::{self, MeasureError, MomentEngine, PiecewiseDensity};
use crate::rational::{int, serde_rational, Rational};
use crate::tailorder::{self, Certification, EventualPositivity};

/// Signed density with prescribed vanishing moments, built from disjoint
/// peak-normalized bumps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingKernel {
    pub density: PiecewiseDensity,
    pub vanished_orders: Vec<u64>,
    #[serde(with = "serde_rational")]
    pub positivity_point: Rational,
    #[serde(with = "serde_rational::vec")]
    pub coefficients: Vec<Rational>,
    pub cells: Vec<Cell>,
    pub bump_degree: u32,
    /// True when the bumps were shrunk after a degenerate first attempt.
    pub perturbed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelReport {
    pub orders_checked: Vec<u64>,
    #[serde(with = "serde_rational")]
    pub sup_bound: Rational,
    pub positivity: Certification<EventualPositivity>,
}

impl VanishingKernel {
    /// Re-checks every vanishing order exactly, the bound `|f| <= 1`, and
    /// eventual positivity from `positivity_point`.
    pub fn verify(&self, positivity_cap: u64) -> Result<KernelReport, ConstructionError> {
        for &k in &self.vanished_orders {
            let m = measures::density_moment(&self.density, k, DEFAULT_PRECISION_BITS)?;
            if !m.is_zero() {
                return Err(ConstructionError::Verification(format!(
                    "moment {k} of the kernel is nonzero"
                )));
            }
        }
        let sup_bound = self.density.sup_abs_bound();
        if sup_bound > int(1) {
            return Err(ConstructionError::Verification(
                "kernel exceeds 1 in absolute value".into(),
            ));
        }
        let positivity = tailorder::certify_eventual_positive(
            &self.density,
            &self.positivity_point,
            positivity_cap,
        )?;
        if positivity.proved().is_none() {
            return Err(ConstructionError::Verification(format!(
                "eventual positivity not certified: {positivity:?}"
            )));
        }
        Ok(KernelReport {
            orders_checked: self.vanished_orders.clone(),
            sup_bound,
            positivity,
        })
    }
}

fn bump_moments(cells: &[Cell], m: u32, orders: &[u64]) -> Vec<Vec<Rational>> {
    let engines: Vec<MomentEngine> = cells
        .iter()
        .map(|c| MomentEngine::new(&[c.lo.clone(), c.hi.clone()], &[peak_bump(c, m)]))
        .collect();
    orders
        .iter()
        .map(|&k| engines.iter().map(|e| e.moment(k)).collect())
        .collect()
}

fn build(
    cells: Vec<Cell>,
    orders: &[u64],
    m: u32,
    perturbed: bool,
) -> Result<VanishingKernel, ConstructionError> {
    let matrix = bump_moments(&cells, m, orders);
    let raw = linalg::kernel_last_one(&matrix)
        .ok_or_else(|| ConstructionError::Degenerate("moment matrix is singular".into()))?;
    let sup = raw
        .iter()
        .map(|c| c.abs())
        .max()
        .expect("at least one bump");
    let coefficients: Vec<Rational> = raw.iter().map(|c| c / &sup).collect();
    let parts: Vec<(Cell, crate::poly::Poly)> = cells
        .iter()
        .zip(&coefficients)
        .map(|(c, w)| (c.clone(), peak_bump(c, m).scale(w)))
        .collect();
    let density = assemble(&parts, true)?;
    let positivity_point = cells.last().unwrap().midpoint();
    Ok(VanishingKernel {
        density,
        vanished_orders: orders.to_vec(),
        positivity_point,
        coefficients,
        cells,
        bump_degree: m,
        perturbed,
    })
}

fn check_budget(cell: &Cell, m: u32, orders: &[u64], budget: u64) -> Result<(), ConstructionError> {
    let Some(&top) = orders.iter().max() else {
        return Ok(());
    };
    let probe = MomentEngine::new(&[cell.lo.clone(), cell.hi.clone()], &[peak_bump(cell, m)]);
    // Elimination multiplies sizes by roughly the system dimension.
    let required = probe
        .required_bits(top)
        .saturating_mul(orders.len() as u64 + 1);
    if required > budget {
        return Err(MeasureError::PrecisionExceeded {
            order: top,
            required,
            budget,
        }
        .into());
    }
    Ok(())
}

/// Kernel on `[a, b]` whose moments vanish at each of `orders` (distinct),
/// using `orders.len() + 1` bumps on an equispaced subdivision.
pub fn kernel_for_orders(
    a: &Rational,
    b: &Rational,
    orders: &[u64],
    spec: &BumpSpec,
) -> Result<VanishingKernel, ConstructionError> {
    check_interval(a, b)?;
    let m = spec.exact_degree()?;
    let mut sorted = orders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != orders.len() {
        return Err(ConstructionError::Invalid(
            "vanishing orders must be distinct".into(),
        ));
    }
    let span = Cell::new(a.clone(), b.clone());
    check_budget(&span, m, orders, DEFAULT_PRECISION_BITS)?;
    build(span.split(orders.len() + 1), orders, m, false)
}

/// Kernel on `[a, b]` with moments `0..=n` vanishing and moment `n+1` nonzero.
///
/// A degenerate solution (moment `n+1` also zero) triggers one retry with
/// every bump shrunk from the left by a seventh of its cell.
pub fn vanishing_moment_kernel(
    a: &Rational,
    b: &Rational,
    n: u64,
    spec: &BumpSpec,
) -> Result<VanishingKernel, ConstructionError> {
    vanishing_moment_kernel_with_budget(a, b, n, spec, DEFAULT_PRECISION_BITS)
}

pub fn vanishing_moment_kernel_with_budget(
    a: &Rational,
    b: &Rational,
    n: u64,
    spec: &BumpSpec,
    budget: u64,
) -> Result<VanishingKernel, ConstructionError> {
    check_interval(a, b)?;
    let m = spec.exact_degree()?;
    let orders: Vec<u64> = (0..=n).collect();
    let span = Cell::new(a.clone(), b.clone());
    check_budget(&span, m, &orders, budget)?;
    let cells = span.split(orders.len() + 1);
    let kernel = build(cells.clone(), &orders, m, false)?;
    if !measures::density_moment(&kernel.density, n + 1, budget)?.is_zero() {
        return Ok(kernel);
    }
    let shrunk: Vec<Cell> = cells
        .iter()
        .map(|c| Cell::new(&c.lo + c.width() / int(7), c.hi.clone()))
        .collect();
    let kernel = build(shrunk, &orders, m, true)?;
    if measures::density_moment(&kernel.density, n + 1, budget)?.is_zero() {
        return Err(ConstructionError::Degenerate(format!(
            "moment {} vanishes after perturbation",
            n + 1
        )));
    }
    Ok(kernel)
}

/// Floating-point kernel built from `exp(-1/(1-u^2))` bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothKernel {
    pub cells: Vec<(f64, f64)>,
    pub coefficients: Vec<f64>,
    /// `sum_i c_i int g_i(x) (x/b)^k dx` for `k = 0..=n`.
    pub residuals: Vec<f64>,
    pub tolerance: f64,
}

fn smooth_bump(x: f64, l: f64, r: f64) -> f64 {
    let u = (2.0 * x - l - r) / (r - l);
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    l: f64,
    r: f64,
    fl: f64,
    fm: f64,
    fr: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (l + r);
    let lm = 0.5 * (l + m);
    let rm = 0.5 * (m + r);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - l) / 6.0 * (fl + 4.0 * flm + fm);
    let right = (r - m) / 6.0 * (fm + 4.0 * frm + fr);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, l, m, fl, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, r, fm, frm, fr, right, tol / 2.0, depth - 1)
}

fn integrate<F: Fn(f64) -> f64>(f: F, l: f64, r: f64, tol: f64) -> f64 {
    let (fl, fm, fr) = (f(l), f(0.5 * (l + r)), f(r));
    let whole = (r - l) / 6.0 * (fl + 4.0 * fm + fr);
    simpson(&f, l, r, fl, fm, fr, whole, tol, 40)
}

/// Smooth analogue of [`vanishing_moment_kernel`]; moments are computed by
/// adaptive Simpson quadrature, so vanishing holds only to quadrature accuracy.
pub fn smooth_vanishing_kernel(
    a: f64,
    b: f64,
    n: usize,
    spec: &BumpSpec,
) -> Result<SmoothKernel, ConstructionError> {
    let BumpMode::SmoothQuadrature { tolerance } = spec.mode else {
        return Err(ConstructionError::Invalid(
            "smooth kernel needs smooth-quadrature mode".into(),
        ));
    };
    if !(a > 0.0 && a < b) || !(tolerance > 0.0) {
        return Err(ConstructionError::Invalid(
            "need 0 < a < b and a positive tolerance".into(),
        ));
    }
    let w = (b - a) / (n + 2) as f64;
    let cells: Vec<(f64, f64)> = (0..n + 2)
        .map(|i| (a + w * i as f64, a + w * (i + 1) as f64))
        .collect();
    let mom = |k: usize, (l, r): (f64, f64)| {
        integrate(
            |x| smooth_bump(x, l, r) * (x / b).powi(k as i32),
            l,
            r,
            tolerance,
        )
    };
    let matrix: Vec<Vec<f64>> = (0..=n)
        .map(|k| cells.iter().map(|&c| mom(k, c)).collect())
        .collect();
    // Gaussian elimination with partial pivoting on the leading square block.
    let size = n + 1;
    let mut aug: Vec<Vec<f64>> = matrix
        .iter()
        .map(|row| {
            let mut r = row[..size].to_vec();
            r.push(-row[size]);
            r
        })
        .collect();
    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        if aug[col][col] == 0.0 {
            return Err(ConstructionError::Degenerate(
                "singular quadrature system".into(),
            ));
        }
        for r in col + 1..size {
            let f = aug[r][col] / aug[col][col];
            for c in col..=size {
                aug[r][c] -= f * aug[col][c];
            }
        }
    }
    let mut coeffs = vec![0.0; size + 1];
    coeffs[size] = 1.0;
    for r in (0..size).rev() {
        let mut acc = aug[r][size];
        for c in r + 1..size {
            acc -= aug[r][c] * coeffs[c];
        }
        coeffs[r] = acc / aug[r][r];
    }
    let sup = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let coefficients: Vec<f64> = coeffs.iter().map(|c| c / sup).collect();
    let residuals = matrix
        .iter()
        .map(|row| row.iter().zip(&coefficients).map(|(m, c)| m * c).sum())
        .collect();
    Ok(SmoothKernel {
        cells,
        coefficients,
        residuals,
        tolerance,
    })
}
