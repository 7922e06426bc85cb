//! Two-player games whose payoffs are probability vectors on `{1, ..., N}`,
//! ordered lexicographically from the last coordinate down. Player 1
//! maximizes, Player 2 minimizes. Everything is exact rational arithmetic.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::rational::{format_rational, int, serde_rational, Rational};

/// Default bound on the number of pure strategies per player.
pub const DEFAULT_SIZE_BOUND: usize = 6;
/// Largest number of grid points per player in [`grid_search`].
pub const MAX_GRID_POINTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("vectors of lengths {0} and {1} cannot be compared")]
    LengthMismatch(usize, usize),
    #[error("size bound exceeded: {0}")]
    SizeBound(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Row,
    Column,
}

/// Payoff table: `payoffs[i][j]` is the probability vector at row `i`, column `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GameRepr", into = "GameRepr")]
pub struct DistGame {
    payoffs: Vec<Vec<Vec<Rational>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameRepr {
    #[serde(with = "serde_rational::vec3")]
    payoffs: Vec<Vec<Vec<Rational>>>,
}

impl TryFrom<GameRepr> for DistGame {
    type Error = GameError;
    fn try_from(r: GameRepr) -> Result<Self, GameError> {
        DistGame::new(r.payoffs)
    }
}

impl From<DistGame> for GameRepr {
    fn from(g: DistGame) -> Self {
        GameRepr { payoffs: g.payoffs }
    }
}

impl DistGame {
    pub fn new(payoffs: Vec<Vec<Vec<Rational>>>) -> Result<Self, GameError> {
        let rows = payoffs.len();
        let cols = payoffs.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(GameError::Invalid(
                "each player needs at least one strategy".into(),
            ));
        }
        let n = payoffs[0][0].len();
        if n == 0 {
            return Err(GameError::Invalid("payoff vectors must be nonempty".into()));
        }
        for (i, row) in payoffs.iter().enumerate() {
            if row.len() != cols {
                return Err(GameError::Invalid(format!(
                    "row {} has {} cells, expected {cols}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, p) in row.iter().enumerate() {
                if p.len() != n {
                    return Err(GameError::Invalid(format!(
                        "cell ({}, {}) has length {}, expected {n}",
                        i + 1,
                        j + 1,
                        p.len()
                    )));
                }
                if p.iter().any(Signed::is_negative) || !p.iter().sum::<Rational>().is_one() {
                    return Err(GameError::Invalid(format!(
                        "cell ({}, {}) is not a probability vector",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { payoffs })
    }

    pub fn rows(&self) -> usize {
        self.payoffs.len()
    }

    pub fn cols(&self) -> usize {
        self.payoffs[0].len()
    }

    pub fn support_size(&self) -> usize {
        self.payoffs[0][0].len()
    }

    pub fn payoff(&self, i: usize, j: usize) -> &[Rational] {
        &self.payoffs[i][j]
    }

    fn check_size(&self, bound: usize) -> Result<(), GameError> {
        if self.rows() > bound || self.cols() > bound {
            return Err(GameError::SizeBound(format!(
                "{}x{} game exceeds {bound}x{bound}",
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }

    /// Expected payoff vector of a mixed profile.
    pub fn expected_payoff(&self, profile: &MixedProfile) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.support_size()];
        for (i, x) in profile.row.iter().enumerate() {
            for (j, y) in profile.column.iter().enumerate() {
                let w = x * y;
                if w.is_zero() {
                    continue;
                }
                for (o, p) in out.iter_mut().zip(&self.payoffs[i][j]) {
                    *o += &w * p;
                }
            }
        }
        out
    }

    /// Payoff vector of each pure strategy of `player` against a mixed opponent.
    fn pure_payoffs(&self, player: Player, opponent: &[Rational]) -> Vec<Vec<Rational>> {
        let n = self.support_size();
        let (own, other) = match player {
            Player::Row => (self.rows(), self.cols()),
            Player::Column => (self.cols(), self.rows()),
        };
        (0..own)
            .map(|s| {
                let mut v = vec![Rational::zero(); n];
                for (t, w) in opponent.iter().enumerate().take(other) {
                    let cell = match player {
                        Player::Row => &self.payoffs[s][t],
                        Player::Column => &self.payoffs[t][s],
                    };
                    for (o, p) in v.iter_mut().zip(cell) {
                        *o += w * p;
                    }
                }
                v
            })
            .collect()
    }
}

/// Compares from the last coordinate down; the first difference decides.
pub fn lex_compare(p: &[Rational], q: &[Rational]) -> Result<Ordering, GameError> {
    if p.len() != q.len() {
        return Err(GameError::LengthMismatch(p.len(), q.len()));
    }
    Ok(p.iter()
        .rev()
        .zip(q.iter().rev())
        .map(|(a, b)| a.cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal))
}

/// Real-valued game of coordinate `coordinate` (1-based).
pub fn project(game: &DistGame, coordinate: usize) -> Result<Vec<Vec<Rational>>, GameError> {
    if coordinate == 0 || coordinate > game.support_size() {
        return Err(GameError::Invalid(format!(
            "coordinate {coordinate} outside 1..={}",
            game.support_size()
        )));
    }
    Ok(game
        .payoffs
        .iter()
        .map(|row| row.iter().map(|p| p[coordinate - 1].clone()).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MixedProfile {
    #[serde(with = "serde_rational::vec")]
    pub row: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub column: Vec<Rational>,
}

fn is_simplex_point(v: &[Rational]) -> bool {
    !v.is_empty() && v.iter().all(|x| !x.is_negative()) && v.iter().sum::<Rational>().is_one()
}

fn support(v: &[Rational]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, _)| i)
        .collect()
}

fn pure(len: usize, i: usize) -> Vec<Rational> {
    (0..len)
        .map(|k| {
            if k == i {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect()
}

impl MixedProfile {
    pub fn new(row: Vec<Rational>, column: Vec<Rational>) -> Result<Self, GameError> {
        if !is_simplex_point(&row) || !is_simplex_point(&column) {
            return Err(GameError::Invalid(
                "mixed strategies must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(Self { row, column })
    }

    pub fn pure(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        Self {
            row: pure(rows, i),
            column: pure(cols, j),
        }
    }

    fn fits(&self, game: &DistGame) -> Result<(), GameError> {
        if self.row.len() != game.rows() || self.column.len() != game.cols() {
            return Err(GameError::Invalid(
                "profile does not match the game's dimensions".into(),
            ));
        }
        if !is_simplex_point(&self.row) || !is_simplex_point(&self.column) {
            return Err(GameError::Invalid(
                "mixed strategies must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(())
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn transpose(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Extreme points of `{x in simplex : sign * (x^T a)_j >= sign * v for all j}`.
fn optimal_vertices(a: &[Vec<Rational>], v: &Rational, sign: i64) -> Vec<Vec<Rational>> {
    let m = a.len();
    let n = a[0].len();
    let s = int(sign);
    let mut out = BTreeSet::new();
    for tight in combinations(m + n, m - 1) {
        let mut rows = vec![vec![Rational::one(); m]];
        let mut rhs = vec![Rational::one()];
        for &t in &tight {
            if t < m {
                rows.push(pure(m, t));
                rhs.push(Rational::zero());
            } else {
                rows.push((0..m).map(|i| a[i][t - m].clone()).collect());
                rhs.push(v.clone());
            }
        }
        let Some(x) = linalg::solve(rows, rhs) else {
            continue;
        };
        if x.iter().any(Signed::is_negative) {
            continue;
        }
        let feasible = (0..n).all(|j| {
            let col: Rational = (0..m).map(|i| &x[i] * &a[i][j]).sum();
            &s * (col - v) >= Rational::zero()
        });
        if feasible {
            out.insert(x);
        }
    }
    out.into_iter().collect()
}

/// Value of the row player's maximin problem by vertex enumeration of
/// `{(x, v) : x in simplex, (x^T a)_j >= v}`.
fn maximin_value(a: &[Vec<Rational>]) -> Rational {
    let m = a.len();
    let n = a[0].len();
    let mut best: Option<Rational> = None;
    for tight in combinations(m + n, m) {
        let mut rows = vec![{
            let mut r = vec![Rational::one(); m];
            r.push(Rational::zero());
            r
        }];
        let mut rhs = vec![Rational::one()];
        for &t in &tight {
            if t < m {
                let mut r = pure(m + 1, t);
                r[m] = Rational::zero();
                rows.push(r);
                rhs.push(Rational::zero());
            } else {
                let mut r: Vec<Rational> = (0..m).map(|i| a[i][t - m].clone()).collect();
                r.push(int(-1));
                rows.push(r);
                rhs.push(Rational::zero());
            }
        }
        let Some(sol) = linalg::solve(rows, rhs) else {
            continue;
        };
        let (x, v) = sol.split_at(m);
        if x.iter().any(Signed::is_negative) {
            continue;
        }
        let feasible = (0..n).all(|j| (0..m).map(|i| &x[i] * &a[i][j]).sum::<Rational>() >= v[0]);
        if feasible && best.as_ref().is_none_or(|b| v[0] > *b) {
            best = Some(v[0].clone());
        }
    }
    best.expect("a finite matrix game has a value")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroSumSolution {
    #[serde(with = "serde_rational")]
    pub value: Rational,
    /// Extreme optimal strategies of the maximizing row player.
    #[serde(with = "serde_rational::vec2")]
    pub row_strategies: Vec<Vec<Rational>>,
    /// Extreme optimal strategies of the minimizing column player.
    #[serde(with = "serde_rational::vec2")]
    pub column_strategies: Vec<Vec<Rational>>,
}

impl ZeroSumSolution {
    /// The equilibrium set is a single profile.
    pub fn is_unique(&self) -> bool {
        self.row_strategies.len() == 1 && self.column_strategies.len() == 1
    }

    /// All extreme equilibria; the full set is their product's convex hull.
    pub fn extreme_equilibria(&self) -> Vec<MixedProfile> {
        let mut out = Vec::new();
        for x in &self.row_strategies {
            for y in &self.column_strategies {
                out.push(MixedProfile {
                    row: x.clone(),
                    column: y.clone(),
                });
            }
        }
        out
    }
}

/// Exact solution of the zero-sum game `a` (row player maximizes `x^T a y`).
pub fn solve_zero_sum(
    a: &[Vec<Rational>],
    size_bound: usize,
) -> Result<ZeroSumSolution, GameError> {
    if a.is_empty() || a[0].is_empty() || a.iter().any(|r| r.len() != a[0].len()) {
        return Err(GameError::Invalid(
            "matrix must be nonempty and rectangular".into(),
        ));
    }
    if a.len() > size_bound || a[0].len() > size_bound {
        return Err(GameError::SizeBound(format!(
            "{}x{} matrix exceeds {size_bound}x{size_bound}",
            a.len(),
            a[0].len()
        )));
    }
    let value = maximin_value(a);
    let row_strategies = optimal_vertices(a, &value, 1);
    let neg: Vec<Vec<Rational>> = transpose(a)
        .iter()
        .map(|r| r.iter().map(|x| -x).collect())
        .collect();
    let column_strategies = optimal_vertices(&neg, &-value.clone(), 1);
    Ok(ZeroSumSolution {
        value,
        row_strategies,
        column_strategies,
    })
}

/// Nested optimal faces (pure-strategy index sets), one per coordinate from
/// `N` down to 1. The last face is the lex-best-response set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestResponse {
    pub player: Player,
    pub faces: Vec<Vec<usize>>,
}

impl BestResponse {
    pub fn face(&self) -> &[usize] {
        self.faces.last().map_or(&[], Vec::as_slice)
    }
}

pub fn lex_best_response(
    game: &DistGame,
    player: Player,
    opponent: &[Rational],
) -> Result<BestResponse, GameError> {
    let expected = match player {
        Player::Row => game.cols(),
        Player::Column => game.rows(),
    };
    if opponent.len() != expected || !is_simplex_point(opponent) {
        return Err(GameError::Invalid(
            "opponent strategy does not fit the game".into(),
        ));
    }
    let w = game.pure_payoffs(player, opponent);
    let mut face: Vec<usize> = (0..w.len()).collect();
    let mut faces = Vec::with_capacity(game.support_size());
    for c in (0..game.support_size()).rev() {
        let vals = face.iter().map(|&s| &w[s][c]);
        let best = match player {
            Player::Row => vals.max(),
            Player::Column => vals.min(),
        }
        .expect("nonempty face")
        .clone();
        face.retain(|&s| w[s][c] == best);
        faces.push(face.clone());
    }
    Ok(BestResponse { player, faces })
}

/// A unilateral deviation that is strictly better for the deviating player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deviation {
    pub player: Player,
    #[serde(with = "serde_rational::vec")]
    pub strategy: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub deviation_payoff: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub current_payoff: Vec<Rational>,
    /// 1-based coordinate where the lexicographic comparison is decided.
    pub decisive_coordinate: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LexCheck {
    Yes {
        row: BestResponse,
        column: BestResponse,
    },
    No {
        deviation: Deviation,
    },
}

fn decisive_coordinate(p: &[Rational], q: &[Rational]) -> usize {
    (0..p.len())
        .rev()
        .find(|&c| p[c] != q[c])
        .map_or(0, |c| c + 1)
}

pub fn check_lex_equilibrium(
    game: &DistGame,
    profile: &MixedProfile,
) -> Result<LexCheck, GameError> {
    profile.fits(game)?;
    let current = game.expected_payoff(profile);
    let row = lex_best_response(game, Player::Row, &profile.column)?;
    let column = lex_best_response(game, Player::Column, &profile.row)?;
    for (br, own) in [(&row, &profile.row), (&column, &profile.column)] {
        if support(own).iter().all(|s| br.face().contains(s)) {
            continue;
        }
        let s = br.face()[0];
        let dev_profile = match br.player {
            Player::Row => MixedProfile {
                row: pure(game.rows(), s),
                column: profile.column.clone(),
            },
            Player::Column => MixedProfile {
                row: profile.row.clone(),
                column: pure(game.cols(), s),
            },
        };
        let deviation_payoff = game.expected_payoff(&dev_profile);
        let decisive = decisive_coordinate(&deviation_payoff, &current);
        let strategy = match br.player {
            Player::Row => dev_profile.row,
            Player::Column => dev_profile.column,
        };
        return Ok(LexCheck::No {
            deviation: Deviation {
                player: br.player,
                strategy,
                deviation_payoff,
                current_payoff: current,
                decisive_coordinate: decisive,
            },
        });
    }
    Ok(LexCheck::Yes { row, column })
}

/// One level of the projected-game cascade for a candidate profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyLevel {
    pub coordinate: usize,
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
    /// The candidate, restricted to `rows x columns`, is an equilibrium of
    /// this coordinate's game on those strategies.
    pub survives: bool,
    /// Exact solution of this coordinate's game on `rows x columns`, with
    /// strategies written over all pure strategies.
    pub restricted: ZeroSumSolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCertificate {
    pub profile: MixedProfile,
    pub levels: Vec<HierarchyLevel>,
    pub deviation: Deviation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveReason {
    /// The top projected game has a continuum of equilibria and none of its
    /// extreme equilibria is a lexicographic equilibrium.
    EquilibriumContinuum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EquilibriumReport {
    Equilibrium {
        profile: MixedProfile,
        row: BestResponse,
        column: BestResponse,
    },
    NoEquilibrium {
        /// Coordinate `N` of the top projected game.
        top_coordinate: usize,
        #[serde(with = "serde_rational")]
        top_value: Rational,
        /// Every equilibrium of the top projected game, each refuted.
        candidates: Vec<CandidateCertificate>,
    },
    Inconclusive {
        reason: InconclusiveReason,
        extreme_candidates: usize,
    },
}

fn is_restricted_equilibrium(
    a: &[Vec<Rational>],
    profile: &MixedProfile,
    rows: &[usize],
    cols: &[usize],
) -> bool {
    let value: Rational = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
        .map(|(i, j)| &profile.row[i] * &profile.column[j] * &a[i][j])
        .sum();
    let row_ok = rows.iter().all(|&i| {
        cols.iter()
            .map(|&j| &profile.column[j] * &a[i][j])
            .sum::<Rational>()
            <= value
    });
    let col_ok = cols.iter().all(|&j| {
        rows.iter()
            .map(|&i| &profile.row[i] * &a[i][j])
            .sum::<Rational>()
            >= value
    });
    row_ok && col_ok
}

fn solve_restricted(a: &[Vec<Rational>], rows: &[usize], cols: &[usize]) -> ZeroSumSolution {
    let sub: Vec<Vec<Rational>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| a[i][j].clone()).collect())
        .collect();
    let sol = solve_zero_sum(&sub, usize::MAX).expect("support submatrix is nonempty");
    let embed = |v: &Vec<Rational>, idx: &[usize], len: usize| {
        let mut out = vec![Rational::zero(); len];
        for (x, &k) in v.iter().zip(idx) {
            out[k] = x.clone();
        }
        out
    };
    ZeroSumSolution {
        value: sol.value,
        row_strategies: sol
            .row_strategies
            .iter()
            .map(|v| embed(v, rows, a.len()))
            .collect(),
        column_strategies: sol
            .column_strategies
            .iter()
            .map(|v| embed(v, cols, a[0].len()))
            .collect(),
    }
}

fn hierarchy(game: &DistGame, profile: &MixedProfile) -> Vec<HierarchyLevel> {
    let rows = support(&profile.row);
    let columns = support(&profile.column);
    let mut levels = Vec::new();
    for c in (1..game.support_size()).rev() {
        let a = project(game, c).expect("coordinate in range");
        let survives = is_restricted_equilibrium(&a, profile, &rows, &columns);
        let restricted = solve_restricted(&a, &rows, &columns);
        levels.push(HierarchyLevel {
            coordinate: c,
            rows: rows.clone(),
            columns: columns.clone(),
            survives,
            restricted,
        });
        if !survives {
            break;
        }
    }
    levels
}

/// Every lexicographic equilibrium is an equilibrium of the top projected
/// game, so it suffices to test that game's equilibria. Candidates are
/// processed in profile order.
pub fn analyze_existence(
    game: &DistGame,
    size_bound: usize,
) -> Result<EquilibriumReport, GameError> {
    game.check_size(size_bound)?;
    let top = game.support_size();
    let solution = solve_zero_sum(&project(game, top)?, size_bound)?;
    let mut candidates = solution.extreme_equilibria();
    candidates.sort();
    let mut refuted = Vec::new();
    for profile in candidates {
        match check_lex_equilibrium(game, &profile)? {
            LexCheck::Yes { row, column } => {
                return Ok(EquilibriumReport::Equilibrium {
                    profile,
                    row,
                    column,
                })
            }
            LexCheck::No { deviation } => {
                let levels = hierarchy(game, &profile);
                refuted.push(CandidateCertificate {
                    profile,
                    levels,
                    deviation,
                });
            }
        }
    }
    if !solution.is_unique() {
        return Ok(EquilibriumReport::Inconclusive {
            reason: InconclusiveReason::EquilibriumContinuum,
            extreme_candidates: refuted.len(),
        });
    }
    Ok(EquilibriumReport::NoEquilibrium {
        top_coordinate: top,
        top_value: solution.value,
        candidates: refuted,
    })
}

/// Replays a report: best-response faces, deviation payoffs and their
/// lexicographic comparison are recomputed from the payoff table.
/// Candidate completeness for `NoEquilibrium` is rechecked by re-solving the
/// top projected game.
pub fn verify_report(game: &DistGame, report: &EquilibriumReport) -> bool {
    verify_inner(game, report).unwrap_or(false)
}

fn verify_inner(game: &DistGame, report: &EquilibriumReport) -> Result<bool, GameError> {
    match report {
        EquilibriumReport::Equilibrium {
            profile,
            row,
            column,
        } => Ok(
            matches!(check_lex_equilibrium(game, profile)?, LexCheck::Yes { row: r, column: c } if &r == row && &c == column),
        ),
        EquilibriumReport::NoEquilibrium {
            top_coordinate,
            top_value,
            candidates,
        } => {
            if *top_coordinate != game.support_size() {
                return Ok(false);
            }
            let solution = solve_zero_sum(&project(game, *top_coordinate)?, usize::MAX)?;
            if !solution.is_unique() || &solution.value != top_value {
                return Ok(false);
            }
            let listed: BTreeSet<&MixedProfile> = candidates.iter().map(|c| &c.profile).collect();
            let expected = solution.extreme_equilibria();
            if listed.len() != expected.len() || !expected.iter().all(|p| listed.contains(p)) {
                return Ok(false);
            }
            for cand in candidates {
                cand.profile.fits(game)?;
                let d = &cand.deviation;
                let current = game.expected_payoff(&cand.profile);
                let dev_profile = match d.player {
                    Player::Row => MixedProfile {
                        row: d.strategy.clone(),
                        column: cand.profile.column.clone(),
                    },
                    Player::Column => MixedProfile {
                        row: cand.profile.row.clone(),
                        column: d.strategy.clone(),
                    },
                };
                dev_profile.fits(game)?;
                let dev = game.expected_payoff(&dev_profile);
                if dev != d.deviation_payoff || current != d.current_payoff {
                    return Ok(false);
                }
                let wanted = match d.player {
                    Player::Row => Ordering::Greater,
                    Player::Column => Ordering::Less,
                };
                if lex_compare(&dev, &current)? != wanted
                    || decisive_coordinate(&dev, &current) != d.decisive_coordinate
                {
                    return Ok(false);
                }
                if cand.levels != hierarchy(game, &cand.profile) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        EquilibriumReport::Inconclusive { .. } => {
            Ok(analyze_existence(game, usize::MAX)? == *report)
        }
    }
}

/// Points of the simplex with `len` coordinates whose entries share a
/// denominator `d <= max_den`.
pub fn simplex_grid(len: usize, max_den: u64) -> Result<Vec<Vec<Rational>>, GameError> {
    fn compositions(total: u64, parts: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=total {
            cur.push(k);
            compositions(total - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut set = BTreeSet::new();
    for d in 1..=max_den {
        let mut comps = Vec::new();
        compositions(d, len, &mut Vec::new(), &mut comps);
        for c in comps {
            set.insert(
                c.iter()
                    .map(|&k| Rational::new(k.into(), d.into()))
                    .collect::<Vec<_>>(),
            );
            if set.len() > MAX_GRID_POINTS {
                return Err(GameError::SizeBound(format!(
                    "more than {MAX_GRID_POINTS} grid points"
                )));
            }
        }
    }
    Ok(set.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridReport {
    pub max_denominator: u64,
    pub profiles_checked: usize,
    /// Grid profiles that are exact lexicographic equilibria.
    pub equilibria: Vec<MixedProfile>,
}

/// Exhaustive search over grid profiles for exact lexicographic equilibria.
/// A profile qualifies when each strategy is supported on the opponent's
/// lex-best-response face.
pub fn grid_search(game: &DistGame, max_den: u64) -> Result<GridReport, GameError> {
    let xs = simplex_grid(game.rows(), max_den)?;
    let ys = simplex_grid(game.cols(), max_den)?;
    let row_faces: Vec<Vec<usize>> = ys
        .iter()
        .map(|y| lex_best_response(game, Player::Row, y).map(|b| b.face().to_vec()))
        .collect::<Result<_, _>>()?;
    let col_faces: Vec<Vec<usize>> = xs
        .iter()
        .map(|x| lex_best_response(game, Player::Column, x).map(|b| b.face().to_vec()))
        .collect::<Result<_, _>>()?;
    let xsupp: Vec<Vec<usize>> = xs.iter().map(|x| support(x)).collect();
    let ysupp: Vec<Vec<usize>> = ys.iter().map(|y| support(y)).collect();
    let mut equilibria = Vec::new();
    for (ix, x) in xs.iter().enumerate() {
        for (iy, y) in ys.iter().enumerate() {
            let row_ok = xsupp[ix].iter().all(|s| row_faces[iy].contains(s));
            if row_ok && ysupp[iy].iter().all(|s| col_faces[ix].contains(s)) {
                equilibria.push(MixedProfile {
                    row: x.clone(),
                    column: y.clone(),
                });
            }
        }
    }
    Ok(GridReport {
        max_denominator: max_den,
        profiles_checked: xs.len() * ys.len(),
        equilibria,
    })
}

/// Human-readable table of a game or a projected game.
pub fn render_table(game: &DistGame, coordinate: Option<usize>) -> Result<String, GameError> {
    let cell = |i: usize, j: usize| -> Result<String, GameError> {
        Ok(match coordinate {
            Some(c) => format_rational(&project(game, c)?[i][j]),
            None => {
                let parts: Vec<String> = game.payoff(i, j).iter().map(format_rational).collect();
                format!("({})", parts.join(", "))
            }
        })
    };
    let mut grid = vec![std::iter::once(String::new())
        .chain((1..=game.cols()).map(|j| format!("b{j}")))
        .collect::<Vec<_>>()];
    for i in 0..game.rows() {
        let mut line = vec![format!("a{}", i + 1)];
        for j in 0..game.cols() {
            line.push(cell(i, j)?);
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..=game.cols())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in grid {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        out.push_str(padded.join(" | ").trim_end());
        out.push('\n');
    }
    Ok(out)
}
