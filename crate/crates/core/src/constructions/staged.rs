use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{
    check_grid, check_interval, dyadic_grid, kernel_for_orders, BumpSpec, Cell, ConstructionError,
};
use crate::config::DEFAULT_PRECISION_BITS;
use crate::measures::{self, MomentEngine, PiecewiseDensity};
use crate::rational::{int, serde_rational, Rational};

/// Initial partial sum of the staged construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StagedSeed {
    /// A kernel on the first grid cell with vanishing moments 0 and 1.
    #[default]
    Kernel,
    /// The zero function; every later stage is then trivial.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StagedOptions {
    /// Custom grid `t_0 < t_1 < ...` in `[a, b]` with at least `stages + 2` points.
    #[serde(with = "serde_rational::option_vec")]
    pub grid: Option<Vec<Rational>>,
    pub seed: StagedSeed,
    pub ell_cap: u64,
}

impl Default for StagedOptions {
    fn default() -> Self {
        Self {
            grid: None,
            seed: StagedSeed::Kernel,
            ell_cap: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub cell: Cell,
    /// New vanishing exponent `k_n`.
    pub exponent: u64,
    /// Ratio `a_l` at the chosen exponent; the stage adds `-a_l` times its kernel.
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    #[serde(with = "serde_rational::vec")]
    pub kernel_coefficients: Vec<Rational>,
    /// Orders the stage kernel annihilates.
    pub kernel_orders: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagedKernel {
    pub density: PiecewiseDensity,
    /// `k_0 < k_1 < ... < k_N` with `k_0 = 1`.
    pub exponents: Vec<u64>,
    /// Every order at which the moment vanishes by construction, including 0.
    pub vanished_orders: Vec<u64>,
    #[serde(with = "serde_rational::vec")]
    pub grid: Vec<Rational>,
    pub seed: StagedSeed,
    pub stages: Vec<StageRecord>,
    pub bump_degree: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedReport {
    pub zero_orders: Vec<u64>,
    /// Orders `k_j + 1` whose moments were checked to be nonzero.
    pub nonzero_orders: Vec<u64>,
    pub max_abs_ratio: f64,
}

impl StagedKernel {
    /// Exact re-check of the vanishing orders, of `|a_l| < 1` at every stage and,
    /// for a nonzero density, of nonvanishing at `k_j + 1`.
    pub fn verify(&self) -> Result<StagedReport, ConstructionError> {
        if self.exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConstructionError::Verification(
                "exponents are not strictly increasing".into(),
            ));
        }
        let eng = MomentEngine::new(self.density.breakpoints(), self.density.pieces());
        let budget = DEFAULT_PRECISION_BITS;
        for &k in &self.vanished_orders {
            let m = measures::density_moment(&self.density, k, budget)?;
            if !m.is_zero() {
                return Err(ConstructionError::Verification(format!(
                    "moment {k} does not vanish"
                )));
            }
        }
        let mut max_abs_ratio = 0.0f64;
        for s in &self.stages {
            if s.ratio.abs() >= int(1) {
                return Err(ConstructionError::Verification(format!(
                    "|a_l| >= 1 at stage {}",
                    s.stage
                )));
            }
            max_abs_ratio = max_abs_ratio.max(crate::rational::to_f64(&s.ratio.abs()));
        }
        let mut nonzero_orders = Vec::new();
        if !self.density.is_zero() {
            for &k in &self.exponents[1..] {
                if eng.sign(k + 1) == Ordering::Equal {
                    return Err(ConstructionError::Verification(format!(
                        "moment {} vanishes unexpectedly",
                        k + 1
                    )));
                }
                nonzero_orders.push(k + 1);
            }
        }
        Ok(StagedReport {
            zero_orders: self.vanished_orders.clone(),
            nonzero_orders,
            max_abs_ratio,
        })
    }
}

/// Finite truncation of the infinitely-many-vanishing-moments construction.
///
/// The seed `h_0` sits on `[t_0, t_1]`. Stage `n` places a kernel `g~_n` on
/// `[t_n, t_{n+1}]` annihilating order 0 and all previous exponents, then scans
/// `l > k_{n-1}` for `|a_l| < 1` with `a_l = int h_{n-1} x^l / int g~_n x^l`,
/// and adds `-a_l g~_n` so that the moment at `k_n = l` vanishes too.
pub fn staged_vanishing_kernel(
    a: &Rational,
    b: &Rational,
    stages: usize,
    spec: &BumpSpec,
    opts: &StagedOptions,
) -> Result<StagedKernel, ConstructionError> {
    check_interval(a, b)?;
    let m = spec.exact_degree()?;
    if stages < 1 {
        return Err(ConstructionError::Invalid(
            "at least one stage is required".into(),
        ));
    }
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => dyadic_grid(a, b, stages + 1),
    };
    check_grid(&grid, a, b, stages + 2)?;

    let mut exponents = vec![1u64];
    let mut parts: Vec<(Cell, crate::poly::Poly)> = Vec::new();
    if opts.seed == StagedSeed::Kernel {
        let seed = kernel_for_orders(&grid[0], &grid[1], &[0, 1], spec)?;
        parts.extend(
            seed.cells
                .iter()
                .cloned()
                .zip(seed.density.pieces().iter().cloned()),
        );
    }
    let mut records = Vec::with_capacity(stages);
    for n in 1..=stages {
        let cell = Cell::new(grid[n].clone(), grid[n + 1].clone());
        let mut orders = vec![0u64];
        orders.extend(&exponents);
        let kernel = kernel_for_orders(&cell.lo, &cell.hi, &orders, spec)?;
        let current = exponents.last().copied().unwrap();
        let (ell, ratio) = if parts.is_empty() {
            (current + 1, Rational::zero())
        } else {
            let h = super::assemble(&parts, true)?;
            search_ratio(&h, &kernel.density, current + 1, opts.ell_cap).ok_or_else(|| {
                ConstructionError::SearchCap {
                    stage: n,
                    cap: opts.ell_cap,
                    detail: format!(
                        "no l in ({current}, {}] with |a_l| < 1 on [{}, {}]",
                        opts.ell_cap, cell.lo, cell.hi
                    ),
                }
            })?
        };
        if !ratio.is_zero() {
            let w = -ratio.clone();
            for (c, p) in kernel.cells.iter().zip(kernel.density.pieces()) {
                parts.push((c.clone(), p.scale(&w)));
            }
        }
        exponents.push(ell);
        records.push(StageRecord {
            stage: n,
            cell,
            exponent: ell,
            ratio,
            kernel_coefficients: kernel.coefficients.clone(),
            kernel_orders: orders,
        });
    }
    let density = if parts.is_empty() {
        PiecewiseDensity::signed(
            vec![grid[0].clone(), grid[stages + 1].clone()],
            vec![crate::poly::Poly::zero()],
        )?
    } else {
        super::assemble(&parts, true)?
    };
    let mut vanished_orders = vec![0u64];
    vanished_orders.extend(&exponents);
    Ok(StagedKernel {
        density,
        exponents,
        vanished_orders,
        grid,
        seed: opts.seed,
        stages: records,
        bump_degree: m,
    })
}

/// First `l >= start` with `0 < |a_l| < 1`, scanning with float estimates and
/// confirming each candidate exactly.
fn search_ratio(
    h: &PiecewiseDensity,
    g: &PiecewiseDensity,
    start: u64,
    cap: u64,
) -> Option<(u64, Rational)> {
    let eh = MomentEngine::new(h.breakpoints(), h.pieces());
    let eg = MomentEngine::new(g.breakpoints(), g.pieces());
    let mut sh = eh.sweep(start);
    let mut sg = eg.sweep(start);
    for ell in start..=cap {
        let num = sh.estimate();
        let den = sg.estimate();
        if den.sign() != Ordering::Equal && num.log2_abs() - den.log2_abs() < -1.0 {
            let ratio = sh.moment() / sg.moment();
            if !ratio.is_zero() && ratio.abs() < int(1) {
                return Some((ell, ratio));
            }
        }
        sh.advance();
        sg.advance();
    }
    None
}
