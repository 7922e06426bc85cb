//! Shared fixtures for the benchmarks.

use momtail_core::games::DistGame;
use momtail_core::rational::{int, rat};
use momtail_core::{parse_rational, PiecewiseDensity, Poly, StructuredSet};

/// Unit bump `30 (x-1)^2 (2-x)^2` on `[1, 2]`, with a kink at `3/2`.
pub fn bump_density() -> PiecewiseDensity {
    let shifted = Poly::new(vec![int(0), int(0), int(30), int(-60), int(30)]).shift(&int(-1));
    PiecewiseDensity::new(
        vec![int(1), rat(3, 2), int(2)],
        vec![shifted.clone(), shifted],
        false,
    )
    .unwrap()
}

/// Uniform density on `[1, 2]`.
pub fn uniform_density() -> PiecewiseDensity {
    PiecewiseDensity::new(vec![int(1), int(2)], vec![Poly::constant(int(1))], false).unwrap()
}

/// The two-by-two game over three outcomes with no lexicographic equilibrium.
pub fn no_equilibrium_game() -> DistGame {
    let q = |s: &str| parse_rational(s).unwrap();
    let cell = |v: [&str; 3]| v.iter().map(|s| q(s)).collect::<Vec<_>>();
    DistGame::new(vec![
        vec![cell(["3/10", "1/5", "1/2"]), cell(["3/5", "3/10", "1/10"])],
        vec![cell(["4/5", "1/10", "1/10"]), cell(["3/10", "1/5", "1/2"])],
    ])
    .unwrap()
}

/// Progressions and geometric sets mixed with unions and complements.
pub fn filter_family() -> Vec<StructuredSet> {
    (1..8u64)
        .map(|d| {
            let ap = StructuredSet::progression(d % 3, d + 1).unwrap();
            let geo = StructuredSet::geometric(d, 2 + d % 3).unwrap();
            ap.union(&geo)
                .unwrap()
                .union(&StructuredSet::cofinite(&[d, 2 * d]).unwrap())
                .unwrap()
        })
        .collect()
}
