//! Strategies read off the value grids, and the concavification oracle for
//! games with a fixed state.

use crate::game::{AuxGame, GameError, StackedMixed};
use crate::measures::Belief;
use crate::scalar::{l1_dist, Scalar};
use crate::value::{
    solve_stage, Continuation, SupportSet, ThetaWeights, ValueEngine, ValueError,
};
use crate::zerosum::{matrix_game_value, LpError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("strategy has no rules")]
    Empty,
    #[error("concavification is implemented for 1 to 3 states, got {0}")]
    Unsupported(usize),
    #[error("a single-controller game with a fixed state is required")]
    NotFixedState,
}

/// Beliefs with an attached decision; lookup is exact when the belief is
/// listed and nearest in l1 otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BeliefTable<A> {
    pub entries: Vec<(Vec<f64>, A)>,
}

impl<A> BeliefTable<A> {
    pub fn lookup<T: Scalar>(&self, p: &[T]) -> &A {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (idx, (q, _)) in self.entries.iter().enumerate() {
            let d: f64 = q.iter().zip(p).map(|(a, b)| (a - b.to_f64_lossy()).abs()).sum();
            if d < best_d {
                best_d = d;
                best = idx;
                if d == 0.0 {
                    break;
                }
            }
        }
        &self.entries[best].1
    }

    /// Distance from `p` to the nearest listed belief.
    pub fn miss<T: Scalar>(&self, p: &[T]) -> f64 {
        self.entries
            .iter()
            .map(|(q, _)| q.iter().zip(p).map(|(a, b)| (a - b.to_f64_lossy()).abs()).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn rows_f64<T: Scalar>(a: &StackedMixed<T>) -> Vec<Vec<f64>> {
    a.rows().iter().map(|r| to_f64(r)).collect()
}

/// What player 1 does after the listed stage rules run out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfterLast {
    /// Start again from the first rule.
    Repeat,
    /// Keep using the last rule.
    Hold,
}

/// Player 1's Markov strategy in the auxiliary game: stage `t` maps the
/// public belief to a stacked action.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkovStrategy1 {
    pub num_states: usize,
    pub num_actions: usize,
    pub stages: Vec<BeliefTable<Vec<Vec<f64>>>>,
    pub after_last: AfterLast,
    pub description: String,
}

impl MarkovStrategy1 {
    pub fn rule_index(&self, t: usize) -> usize {
        let n = self.stages.len();
        match self.after_last {
            AfterLast::Repeat => (t - 1) % n,
            AfterLast::Hold => (t - 1).min(n - 1),
        }
    }

    /// Stacked action at stage `t >= 1` and belief `p`.
    pub fn action<T: Scalar>(&self, t: usize, p: &[T]) -> StackedMixed<T> {
        let rows = self.stages[self.rule_index(t)].lookup(p);
        StackedMixed::normalized(
            rows.iter()
                .map(|r| r.iter().map(|&x| T::lit(x)).collect())
                .collect(),
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// How player 1's rules extend past the horizon used to compute them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Mode {
    /// Optimal rules of the `n`-stage game, repeated every `n` stages.
    Finite,
    /// One rule used at every stage: the maximiser of
    /// `alpha * payoff + (1 - alpha) * v_n(posterior)`.
    Stationary { alpha: f64 },
}

impl P1Mode {
    /// Stationary rule with the default current-payoff weight `1 / (8 n)`.
    pub fn stationary_default(n: usize) -> Self {
        P1Mode::Stationary {
            alpha: 1.0 / (8.0 * n as f64),
        }
    }
}

/// Depth of the public-signal tree on which rules are solved at the exact
/// reachable beliefs rather than looked up on the lattice.
pub const REACHABLE_DEPTH: usize = 4;
const REACHABLE_CAP: usize = 256;

fn merge_entry(entries: &mut Vec<(Vec<f64>, Vec<Vec<f64>>)>, p: Vec<f64>, a: Vec<Vec<f64>>) {
    if let Some(e) = entries
        .iter_mut()
        .find(|(q, _)| q.iter().zip(&p).map(|(x, y)| (x - y).abs()).sum::<f64>() <= 1e-12)
    {
        e.1 = a;
    } else {
        entries.push((p, a));
    }
}

fn posteriors<T: Scalar>(aux: &AuxGame<T>, p: &[T], a: &StackedMixed<T>) -> Vec<Belief<T>> {
    (0..aux.num_signals())
        .filter_map(|d| aux.posterior(p, a, d))
        .collect()
}

/// Player 1's strategy from the value grids of the `n`-stage game.
pub fn extract_p1_markov<T: Scalar>(
    engine: &ValueEngine<T>,
    n: usize,
    mode: P1Mode,
) -> Result<MarkovStrategy1, StrategyError> {
    if n == 0 {
        return Err(StrategyError::Empty);
    }
    let aux = engine.aux();
    let grid = engine.grid();
    let starts: Vec<Belief<T>> = engine
        .initial_measure()
        .atoms()
        .iter()
        .map(|a| a.atom.clone())
        .collect();
    match mode {
        P1Mode::Finite => {
            let mut stages = Vec::with_capacity(n);
            let mut frontier = starts;
            for s in 1..=n {
                let theta = ThetaWeights::uniform(n - s + 1);
                let vg = engine.value_theta_grid(&theta)?;
                let mut entries: Vec<(Vec<f64>, Vec<Vec<f64>>)> = grid
                    .points()
                    .iter()
                    .zip(&vg.actions)
                    .map(|(p, a)| (to_f64(p), rows_f64(a)))
                    .collect();
                let mut next = Vec::new();
                if s <= REACHABLE_DEPTH {
                    for p in &frontier {
                        let (lo, _) = engine.solve_at(&theta, p)?;
                        merge_entry(&mut entries, to_f64(p), rows_f64(&lo.action));
                        if next.len() < REACHABLE_CAP {
                            next.extend(posteriors(aux, p, &lo.action));
                        }
                    }
                }
                frontier = next;
                stages.push(BeliefTable { entries });
            }
            Ok(MarkovStrategy1 {
                num_states: aux.k,
                num_actions: aux.i,
                stages,
                after_last: AfterLast::Repeat,
                description: format!("optimal rules of the {n}-stage game, repeated"),
            })
        }
        P1Mode::Stationary { alpha } => {
            let vg = engine.value_n(n)?;
            let alpha_t = T::lit(alpha);
            let support = vg.lower_support().clone();
            let rule = |p: &[T]| -> Result<StackedMixed<T>, LpError> {
                Ok(solve_stage(aux, p, alpha_t, Continuation::PerSignal(&support))?.action)
            };
            let mut entries = Vec::with_capacity(grid.len());
            for p in grid.points() {
                entries.push((to_f64(p), rows_f64(&rule(p)?)));
            }
            let mut frontier = starts;
            for _ in 0..REACHABLE_DEPTH {
                let mut next = Vec::new();
                for p in &frontier {
                    let a = rule(p)?;
                    merge_entry(&mut entries, to_f64(p), rows_f64(&a));
                    if next.len() < REACHABLE_CAP {
                        for q in posteriors(aux, p, &a) {
                            if l1_dist(&q, p) > T::tolerances().structural {
                                next.push(q);
                            }
                        }
                    }
                }
                frontier = next;
            }
            Ok(MarkovStrategy1 {
                num_states: aux.k,
                num_actions: aux.i,
                stages: vec![BeliefTable { entries }],
                after_last: AfterLast::Hold,
                description: format!("stationary rule, weight {alpha} on the current payoff, continuation v_{n}"),
            })
        }
    }
}

/// Block lengths of player 2's strategy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BlockSchedule {
    /// Blocks of length `n`, repeated.
    Cyclic { n: usize },
    /// Block `m` has length `m`.
    Growing,
}

impl BlockSchedule {
    /// Block length and position within the block (0-based) of stage `t >= 1`.
    pub fn locate(&self, t: usize) -> (usize, usize) {
        match *self {
            BlockSchedule::Cyclic { n } => (n, (t - 1) % n),
            BlockSchedule::Growing => {
                let mut m = 1;
                while m * (m + 1) / 2 < t {
                    m += 1;
                }
                (m, t - 1 - m * (m - 1) / 2)
            }
        }
    }

    /// Stage offset `m (m - 1) / 2` of growing block `m`.
    pub fn growing_offset(m: usize) -> usize {
        m * (m - 1) / 2
    }
}

/// Player 2's block strategy: within a block of length `L`, stage `s`
/// plays the optimal reply of the `L - s`-stage recursion step at the
/// current public belief.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockStrategy2 {
    pub num_actions: usize,
    pub schedule: BlockSchedule,
    /// `rules[L - 1][s]`: rule at position `s` of a block of length `L`.
    /// Empty for block lengths that never occur.
    pub rules: Vec<Vec<BeliefTable<Vec<f64>>>>,
    pub description: String,
}

impl BlockStrategy2 {
    pub fn action<T: Scalar>(&self, t: usize, p: &[T]) -> Vec<T> {
        let (len, s) = self.schedule.locate(t);
        // Growing blocks beyond the tabulated lengths reuse the longest one.
        let (len, s) = if len > self.rules.len() {
            let l = self.rules.len();
            (l, s % l)
        } else {
            (len, s)
        };
        let b = self.rules[len - 1][s].lookup(p);
        let v: Vec<T> = b.iter().map(|&x| T::lit(x.max(0.0))).collect();
        let sum: T = v.iter().copied().sum();
        v.into_iter().map(|x| x / sum).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn block_rules<T: Scalar>(
    engine: &ValueEngine<T>,
    len: usize,
) -> Result<Vec<BeliefTable<Vec<f64>>>, StrategyError> {
    let grid = engine.grid();
    let mut out = Vec::with_capacity(len);
    for s in 0..len {
        let vg = engine.value_n(len - s)?;
        out.push(BeliefTable {
            entries: grid
                .points()
                .iter()
                .zip(&vg.responses)
                .map(|(p, b)| (to_f64(p), to_f64(b)))
                .collect(),
        });
    }
    Ok(out)
}

/// Player 2 repeats the optimal rules of the `n`-stage game.
pub fn build_p2_cyclic<T: Scalar>(
    engine: &ValueEngine<T>,
    n: usize,
) -> Result<BlockStrategy2, StrategyError> {
    if n == 0 {
        return Err(StrategyError::Empty);
    }
    let mut rules = vec![Vec::new(); n];
    rules[n - 1] = block_rules(engine, n)?;
    Ok(BlockStrategy2 {
        num_actions: engine.aux().j,
        schedule: BlockSchedule::Cyclic { n },
        rules,
        description: format!("optimal rules of the {n}-stage game, repeated"),
    })
}

/// Player 2 plays block `m` of length `m` with the optimal rules of the
/// `m`-stage game, tabulated up to the block covering `horizon`.
pub fn build_p2_growing<T: Scalar>(
    engine: &ValueEngine<T>,
    horizon: usize,
) -> Result<BlockStrategy2, StrategyError> {
    let (blocks, _) = BlockSchedule::Growing.locate(horizon.max(1));
    let mut rules = Vec::with_capacity(blocks);
    for m in 1..=blocks {
        rules.push(block_rules(engine, m)?);
    }
    Ok(BlockStrategy2 {
        num_actions: engine.aux().j,
        schedule: BlockSchedule::Growing,
        rules,
        description: format!("growing blocks 1, 2, ..., {blocks}"),
    })
}

/// `cav u` for a game with a fixed state, on a lattice of the simplex.
#[derive(Clone, Debug, Serialize)]
pub struct CavOracle<T> {
    pub resolution: usize,
    pub points: Vec<Vec<T>>,
    /// Value of the average matrix game at each point.
    pub u: Vec<T>,
    /// Concave envelope of `u` at each point.
    pub cav: Vec<T>,
    /// Bound on `|cav u - interpolated cav|` off the lattice.
    pub error_bound: T,
    #[serde(skip)]
    support: SupportSet<T>,
}

impl<T: Scalar> CavOracle<T> {
    /// Interpolated `cav u` at any belief.
    pub fn eval(&self, p: &[T]) -> T {
        if p.len() == 1 {
            return self.cav[0];
        }
        self.support.cav_at(p).unwrap_or(T::nan())
    }
}

/// Computes `u(p) = val(sum_k p^k G^k)` on the lattice with `resolution`
/// subdivisions and its upper concave envelope.
pub fn cavu_oracle<T: Scalar>(
    matrices: &[Vec<Vec<T>>],
    resolution: usize,
) -> Result<CavOracle<T>, StrategyError> {
    let k = matrices.len();
    if !(1..=3).contains(&k) {
        return Err(StrategyError::Unsupported(k));
    }
    let grid = crate::value::SimplexGrid::<T>::new(k, resolution.max(1));
    let mut u = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let m: Vec<Vec<T>> = (0..matrices[0].len())
            .map(|i| {
                (0..matrices[0][0].len())
                    .map(|j| (0..k).map(|s| p[s] * matrices[s][i][j]).sum())
                    .collect()
            })
            .collect();
        u.push(matrix_game_value(&m)?.value);
    }
    let points: Vec<Vec<T>> = grid.points().iter().map(|p| p.to_vec()).collect();
    let support = SupportSet {
        points: points.clone(),
        values: u.clone(),
    };
    let cav = if k == 2 {
        let curve: Vec<(T, T)> = points.iter().map(|p| p[0]).zip(u.iter().copied()).collect();
        let hull = crate::value::grid::upper_hull(&curve);
        curve
            .iter()
            .map(|&(x, _)| {
                let pos = hull.partition_point(|h| h.0 < x).min(hull.len() - 1);
                if hull[pos].0 == x || pos == 0 {
                    hull[pos].1
                } else {
                    let (x0, y0) = hull[pos - 1];
                    let (x1, y1) = hull[pos];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            })
            .collect()
    } else if k == 3 {
        points
            .iter()
            .map(|p| support.cav_at(p))
            .collect::<Result<Vec<T>, LpError>>()?
    } else {
        u.clone()
    };
    let all = matrices.iter().flatten().flatten();
    let lo = all.clone().fold(T::infinity(), |a, &b| a.min(b));
    let hi = all.fold(T::neg_infinity(), |a, &b| a.max(b));
    let diam = T::lit(2.0 * (k / 2) as f64) / T::from_usize(resolution.max(1)).unwrap();
    let error_bound = T::lit(0.5) * (hi - lo) * diam;
    Ok(CavOracle {
        resolution,
        support: SupportSet {
            points: points.clone(),
            values: cav.clone(),
        },
        points,
        u,
        cav,
        error_bound,
    })
}
