//! Memoized moment tables under `$MOMTAIL_CACHE_DIR`, one JSON file per
//! measure named by the SHA-256 of its canonical JSON.

use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use momtail_core::measures::MomentRow;
use momtail_core::Measure;
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "MOMTAIL_CACHE_DIR";

pub fn measure_key(mu: &Measure) -> String {
    Sha256::digest(mu.to_canonical_json().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn path_for(mu: &Measure) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    Some(PathBuf::from(dir).join(format!("{}.json", measure_key(mu))))
}

/// Cached rows `0..=k_max`, if a long enough table is stored. Unreadable
/// entries count as misses.
pub fn lookup(mu: &Measure, k_max: u64) -> Option<Vec<MomentRow>> {
    let text = fs::read_to_string(path_for(mu)?).ok()?;
    let rows: Vec<MomentRow> = serde_json::from_str(&text).ok()?;
    let wanted = usize::try_from(k_max).ok()? + 1;
    (rows.len() >= wanted).then(|| rows.into_iter().take(wanted).collect())
}

/// Stores `rows` unless a longer table is already cached.
pub fn store(mu: &Measure, rows: &[MomentRow]) -> Result<()> {
    let Some(path) = path_for(mu) else {
        return Ok(());
    };
    if rows.is_empty() || lookup(mu, rows.len() as u64 - 1).is_some() {
        return Ok(());
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string(rows)?)?;
    fs::rename(tmp, path)?;
    Ok(())
}
