//! Tunable budgets and caps, loadable from JSON.

use serde::{Deserialize, Serialize};

/// Default bit budget for a single exact moment evaluation.
pub const DEFAULT_PRECISION_BITS: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Upper bound on the size (in bits) of intermediate integers in exact moment evaluation.
    pub precision_bits: u64,
    /// Maximum number of exponents scanned per stage by the kernel and alternating searches.
    pub ell_cap: u64,
    /// Largest order tried when locating the first positive moment.
    pub positivity_cap: u64,
    /// Default prefix depth for empirical comparisons.
    pub default_depth: u64,
    /// Largest matrix dimension accepted by the game solvers.
    pub game_size_bound: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            precision_bits: DEFAULT_PRECISION_BITS,
            ell_cap: 20_000,
            positivity_cap: 10_000,
            default_depth: 200,
            game_size_bound: 6,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let c: Config = serde_json::from_str(r#"{"ell_cap": 20000}"#).unwrap();
        assert_eq!(c.ell_cap, 20000);
        assert_eq!(c.default_depth, 200);
        assert!(serde_json::from_str::<Config>(r#"{"bogus": 1}"#).is_err());
    }
}
