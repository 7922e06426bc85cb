use std::cmp::Ordering;

use momtail_core::games::{
    analyze_existence, check_lex_equilibrium, grid_search, lex_compare, project, simplex_grid,
    solve_zero_sum, verify_report, LexCheck, DEFAULT_SIZE_BOUND,
};
use momtail_core::rational::{int, rat};
use momtail_core::{DistGame, EquilibriumReport, MixedProfile, Rational};
use num_traits::Zero;
use proptest::prelude::*;

fn prob_vector(len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(1i64..8, len).prop_map(|w| {
        let total: i64 = w.iter().sum();
        w.into_iter().map(|x| rat(x, total)).collect()
    })
}

fn game(rows: usize, cols: usize, n: usize) -> impl Strategy<Value = DistGame> {
    prop::collection::vec(prop::collection::vec(prob_vector(n), cols), rows)
        .prop_map(|p| DistGame::new(p).unwrap())
}

/// 2x2 game with two outcomes and payoff `(1 - q, q)`, `q` on the 1/10 grid.
fn two_by_two() -> impl Strategy<Value = DistGame> {
    prop::collection::vec(prop::collection::vec(0i64..=10, 2), 2).prop_map(|qs| {
        let cells = qs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&q| vec![rat(10 - q, 10), rat(q, 10)])
                    .collect()
            })
            .collect();
        DistGame::new(cells).unwrap()
    })
}

fn mix(a: &[Rational], b: &[Rational], t: &Rational) -> Vec<Rational> {
    a.iter()
        .zip(b)
        .map(|(x, y)| t * x + (int(1) - t) * y)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lex_compare_is_a_total_order(p in prob_vector(4), q in prob_vector(4), r in prob_vector(4)) {
        let pq = lex_compare(&p, &q).unwrap();
        prop_assert_eq!(pq == Ordering::Equal, p == q);
        prop_assert_eq!(lex_compare(&q, &p).unwrap(), pq.reverse());
        if pq != Ordering::Greater && lex_compare(&q, &r).unwrap() != Ordering::Greater {
            prop_assert_ne!(lex_compare(&p, &r).unwrap(), Ordering::Greater);
        }
    }

    #[test]
    fn expected_payoff_is_linear_in_each_strategy(
        g in game(3, 2, 3),
        x1 in prob_vector(3), x2 in prob_vector(3), y in prob_vector(2), t in 0i64..=6,
    ) {
        let t = rat(t, 6);
        let at = |x: Vec<Rational>| g.expected_payoff(&MixedProfile::new(x, y.clone()).unwrap());
        let mixed = at(mix(&x1, &x2, &t));
        prop_assert_eq!(mixed, mix(&at(x1.clone()), &at(x2.clone()), &t));
    }

    #[test]
    fn projection_commutes_with_mixing(g in game(2, 3, 3), x in prob_vector(2), y in prob_vector(3), c in 1usize..=3) {
        let a = project(&g, c).unwrap();
        let direct: Rational = (0..2).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| &x[i] * &y[j] * &a[i][j]).sum();
        let payoff = g.expected_payoff(&MixedProfile::new(x, y).unwrap());
        prop_assert_eq!(&payoff[c - 1], &direct);
    }

    #[test]
    fn payoff_is_constant_across_the_equilibrium_support(g in game(3, 3, 2), w in prob_vector(3)) {
        let a = project(&g, 2).unwrap();
        let sol = solve_zero_sum(&a, DEFAULT_SIZE_BOUND).unwrap();
        let (x, y) = (&sol.row_strategies[0], &sol.column_strategies[0]);
        let support: Vec<usize> = (0..3).filter(|&i| !x[i].is_zero()).collect();
        for &i in &support {
            let row_value: Rational = (0..3).map(|j| &y[j] * &a[i][j]).sum();
            prop_assert_eq!(&row_value, &sol.value);
        }
        // Reallocate the row mass within the support.
        let total: Rational = support.iter().map(|&i| w[i].clone()).sum();
        let realloc: Vec<Rational> =
            (0..3).map(|i| if support.contains(&i) { &w[i] / &total } else { Rational::zero() }).collect();
        let payoff = g.expected_payoff(&MixedProfile::new(realloc, y.clone()).unwrap());
        prop_assert_eq!(&payoff[1], &sol.value);
    }

    #[test]
    fn reports_replay(g in game(2, 3, 3)) {
        let report = analyze_existence(&g, DEFAULT_SIZE_BOUND).unwrap();
        prop_assert!(verify_report(&g, &report));
        if let EquilibriumReport::Equilibrium { profile, .. } = &report {
            let check = check_lex_equilibrium(&g, profile).unwrap();
            prop_assert!(matches!(check, LexCheck::Yes { .. }), "{:?}", check);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_search_never_contradicts_the_hierarchy(g in two_by_two()) {
        let report = analyze_existence(&g, DEFAULT_SIZE_BOUND).unwrap();
        match &report {
            EquilibriumReport::NoEquilibrium { .. } => {
                prop_assert!(grid_search(&g, 50).unwrap().equilibria.is_empty());
            }
            EquilibriumReport::Equilibrium { profile, .. } => {
                let current = g.expected_payoff(profile);
                for s in simplex_grid(2, 50).unwrap() {
                    let row_dev = g.expected_payoff(&MixedProfile::new(s.clone(), profile.column.clone()).unwrap());
                    prop_assert_ne!(lex_compare(&row_dev, &current).unwrap(), Ordering::Greater);
                    let col_dev = g.expected_payoff(&MixedProfile::new(profile.row.clone(), s).unwrap());
                    prop_assert_ne!(lex_compare(&col_dev, &current).unwrap(), Ordering::Less);
                }
            }
            EquilibriumReport::Inconclusive { .. } => {}
        }
    }
}

#[test]
fn single_outcome_games_have_equilibria() {
    let g = DistGame::new(vec![vec![vec![int(1)]; 2]; 2]).unwrap();
    let report = analyze_existence(&g, DEFAULT_SIZE_BOUND).unwrap();
    assert!(verify_report(&g, &report));
}
