use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use momtail_core::rational::{int, to_f64};
use momtail_core::{PiecewiseDensity, Rational};

pub const PLOT_SAMPLES: i64 = 200;

/// A CSV table with string cells.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated columns with a `#` header line.
pub fn write_dat(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "# {}", header.join(" "))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        writeln!(out, "{}", cells.join(" "))?;
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Evenly spaced points of `[lo, hi]`, endpoints included.
pub fn sample_points(lo: &Rational, hi: &Rational) -> Vec<Rational> {
    (0..=PLOT_SAMPLES)
        .map(|i| lo + (hi - lo) * Rational::new(i.into(), PLOT_SAMPLES.into()))
        .collect()
}

/// Rows `x, d_1(x), d_2(x), ...` over the union of the supports.
pub fn density_rows(ds: &[&PiecewiseDensity]) -> Vec<Vec<f64>> {
    let lo = ds
        .iter()
        .map(|d| d.lower().clone())
        .min()
        .unwrap_or_else(|| int(0));
    let hi = ds
        .iter()
        .map(|d| d.upper().clone())
        .max()
        .unwrap_or_else(|| int(1));
    sample_points(&lo, &hi)
        .iter()
        .map(|x| {
            std::iter::once(to_f64(x))
                .chain(ds.iter().map(|d| to_f64(&d.eval(x))))
                .collect()
        })
        .collect()
}

/// Rows `x, F_1(x), F_2(x), ...` of the distribution functions.
pub fn cdf_rows(ds: &[&PiecewiseDensity]) -> Vec<Vec<f64>> {
    let lo = ds
        .iter()
        .map(|d| d.lower().clone())
        .min()
        .unwrap_or_else(|| int(0));
    let hi = ds
        .iter()
        .map(|d| d.upper().clone())
        .max()
        .unwrap_or_else(|| int(1));
    sample_points(&lo, &hi)
        .iter()
        .map(|x| {
            std::iter::once(to_f64(x))
                .chain(ds.iter().map(|d| to_f64(&d.integral_to(x))))
                .collect()
        })
        .collect()
}
