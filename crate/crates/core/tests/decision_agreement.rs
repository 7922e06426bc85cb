use std::cmp::Ordering;

use momtail_core::rational::{int, pow, rat};
use momtail_core::tailorder::decide_piecewise;
use momtail_core::{PiecewiseDensity, Poly, Rational, TailVerdict};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Continuous piecewise-linear density on `[1, 2]` with knots on the 1/8 grid
/// and small integer knot values.
fn random_linear_density(rng: &mut ChaCha8Rng) -> PiecewiseDensity {
    let mut knots: Vec<i64> = (1..8).filter(|_| rng.gen_bool(0.4)).collect();
    knots.insert(0, 0);
    knots.push(8);
    let values: Vec<i64> = knots.iter().map(|_| rng.gen_range(0..=4)).collect();
    let xs: Vec<Rational> = knots.iter().map(|&k| int(1) + rat(k, 8)).collect();
    let pieces = (0..knots.len() - 1)
        .map(|i| {
            let slope = (int(values[i + 1]) - int(values[i])) / (&xs[i + 1] - &xs[i]);
            let intercept = int(values[i]) - &slope * &xs[i];
            Poly::new(vec![intercept, slope])
        })
        .collect();
    PiecewiseDensity::new(xs, pieces, false).unwrap()
}

/// `int x^k p(x) dx` for linear pieces, from the closed-form antiderivative.
fn linear_moment(d: &PiecewiseDensity, k: u64) -> Rational {
    let bps = d.breakpoints();
    d.pieces()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (l, r) = (&bps[i], &bps[i + 1]);
            let power = |e: u64| (pow(r, e) - pow(l, e)) / int(e as i64);
            p.coeff(0) * power(k + 1) + p.coeff(1) * power(k + 2)
        })
        .sum()
}

#[test]
fn decision_matches_exact_moment_sign_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 100 {
        let (d1, d2) = (
            random_linear_density(&mut rng),
            random_linear_density(&mut rng),
        );
        let expected = match decide_piecewise(&d1, &d2).unwrap() {
            TailVerdict::StrictlyBelow { .. } => Ordering::Greater,
            TailVerdict::StrictlyAbove { .. } => Ordering::Less,
            TailVerdict::EqualPrefix { .. } => continue,
            other => panic!("unexpected verdict {other:?}"),
        };
        for k in [200, 400] {
            let diff = linear_moment(&d2, k) - linear_moment(&d1, k);
            assert_eq!(
                diff.cmp(&Rational::zero()),
                expected,
                "pair {checked} at order {k}"
            );
        }
        checked += 1;
    }
}

#[test]
fn identical_densities_are_equal() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = random_linear_density(&mut rng);
    assert!(matches!(
        decide_piecewise(&d, &d).unwrap(),
        TailVerdict::EqualPrefix { agree_from: 0 }
    ));
}
