//! Exact values for short horizons via one sequence-form program over public
//! signal histories.

use super::engine::{Interval, ValueError};
use super::theta::ThetaWeights;
use crate::game::AuxGame;
use crate::measures::BeliefMeasure;
use crate::scalar::Scalar;
use crate::zerosum::{solve_lp, LinearProgram, LpError, LpStatus, Relation};

/// Largest number of public histories the tree program accepts.
pub const MAX_TREE_NODES: usize = 4096;

/// Value of the `theta`-weighted game at belief `p`, to LP accuracy.
///
/// Node `h` carries `x_h(k, i)`, the probability of reaching `h` in state
/// `k` and playing `i`; player 2 best-responds separately at every node.
pub fn value_theta_exact_at<T: Scalar>(
    aux: &AuxGame<T>,
    theta: &ThetaWeights<T>,
    p: &[T],
) -> Result<T, ValueError> {
    let depth = theta.max_stage();
    if depth == 0 {
        return Err(ValueError::EmptyHorizon);
    }
    let (nk, ni, nj, nd) = (aux.k, aux.i, aux.j, aux.num_signals());
    let mut nodes = 0usize;
    let mut width = 1usize;
    for _ in 0..depth {
        nodes = nodes.saturating_add(width);
        width = width.saturating_mul(nd.max(1));
    }
    if nodes > MAX_TREE_NODES {
        return Err(ValueError::Guard {
            what: "public histories",
            got: nodes,
            limit: MAX_TREE_NODES,
        });
    }

    let mut lp = LinearProgram::new();
    // Level by level; children of node `h` at the next level are `h * nd + d`.
    let mut level_vars: Vec<Vec<Vec<usize>>> = Vec::with_capacity(depth);
    let mut width = 1usize;
    for t in 0..depth {
        let w = theta.weight(t + 1);
        let mut vars = Vec::with_capacity(width);
        for _ in 0..width {
            let x: Vec<usize> = (0..nk * ni).map(|_| lp.add_var(T::zero())).collect();
            if w > T::zero() {
                let s = lp.add_free_var(w);
                for j in 0..nj {
                    let mut row = vec![(s, T::one())];
                    for k in 0..nk {
                        for i in 0..ni {
                            let g = aux.payoff(k, i, j);
                            if g != T::zero() {
                                row.push((x[k * ni + i], -g));
                            }
                        }
                    }
                    lp.add_row(&row, Relation::Le, T::zero());
                }
            }
            vars.push(x);
        }
        level_vars.push(vars);
        width *= nd.max(1);
    }
    for k in 0..nk {
        let row: Vec<(usize, T)> = (0..ni).map(|i| (level_vars[0][0][k * ni + i], T::one())).collect();
        lp.add_row(&row, Relation::Eq, p[k]);
    }
    for t in 1..depth {
        for (h, parent) in level_vars[t - 1].iter().enumerate() {
            for d in 0..nd {
                let child = &level_vars[t][h * nd + d];
                for k2 in 0..nk {
                    let mut row: Vec<(usize, T)> =
                        (0..ni).map(|i| (child[k2 * ni + i], T::one())).collect();
                    for k in 0..nk {
                        for i in 0..ni {
                            let q = aux.qbar(k, i, k2, d);
                            if q != T::zero() {
                                row.push((parent[k * ni + i], -q));
                            }
                        }
                    }
                    lp.add_row(&row, Relation::Eq, T::zero());
                }
            }
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::Unexpected(sol.status).into());
    }
    Ok(sol.objective)
}

/// Bounds `value +- tol` on the integral of the value against `u`.
pub fn value_theta_exact<T: Scalar>(
    aux: &AuxGame<T>,
    theta: &ThetaWeights<T>,
    u: &BeliefMeasure<T>,
) -> Result<Interval<T>, ValueError> {
    let mut v = T::zero();
    for a in u.atoms() {
        v = v + a.weight * value_theta_exact_at(aux, theta, &a.atom)?;
    }
    let tol = T::tolerances().feasibility;
    Ok(Interval {
        lower: v - tol,
        upper: v + tol,
    })
}
