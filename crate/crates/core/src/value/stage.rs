//! One step of the value recursion at a single belief, as a linear program.

use crate::game::{AuxGame, StackedMixed};
use crate::scalar::Scalar;
use crate::zerosum::{solve_lp, LinearProgram, LpError, LpStatus, Relation};
use serde::Serialize;

/// A concave function given by the concave hull of finitely many
/// `(point, value)` pairs. The points must span the simplex.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SupportSet<T> {
    pub points: Vec<Vec<T>>,
    pub values: Vec<T>,
}

impl<T: Scalar> SupportSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Value of the concave hull at `p`.
    pub fn cav_at(&self, p: &[T]) -> Result<T, LpError> {
        let mut lp = LinearProgram::new();
        let vars: Vec<usize> = self.values.iter().map(|&v| lp.add_var(v)).collect();
        for (k, &pk) in p.iter().enumerate() {
            let row: Vec<(usize, T)> = vars
                .iter()
                .zip(&self.points)
                .filter(|(_, y)| y[k] != T::zero())
                .map(|(&v, y)| (v, y[k]))
                .collect();
            lp.add_row(&row, Relation::Eq, pk);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.objective),
            other => Err(LpError::Unexpected(other)),
        }
    }
}

/// How the continuation enters the stage problem.
#[derive(Clone, Copy, Debug)]
pub enum Continuation<'a, T> {
    /// Only the current payoff matters (`alpha = 1`).
    None,
    /// Posterior-wise concave majorant of the given support.
    PerSignal(&'a SupportSet<T>),
    /// Per-signal term capped by a bound at the mean posterior. Both caps
    /// are upper bounds for concave continuations.
    Capped {
        per_signal: &'a SupportSet<T>,
        mean: MeanCap<'a, T>,
    },
}

/// Bound on the continuation at the mean posterior.
#[derive(Clone, Copy, Debug)]
pub enum MeanCap<'a, T> {
    /// Concave majorant evaluated at the (action-dependent) mean.
    Hull(&'a SupportSet<T>),
    /// The mean does not depend on the action; its bound is a constant.
    Fixed(T),
}

/// Optimal play in the one-stage problem at a belief.
#[derive(Clone, Debug, Serialize)]
pub struct StageSolution<T> {
    pub value: T,
    /// Maximiser of the stage problem, rows are states.
    pub action: StackedMixed<T>,
    /// Optimal reply of player 2 read off the payoff rows; uniform when the
    /// current payoff has weight 0.
    pub response: Vec<T>,
    pub lp_residual: T,
}

/// Maximises `alpha * min_b g(p, a, b) + (1 - alpha) * E[f(posterior)]` over
/// stacked actions `a`, with `f` described by `cont`.
pub fn solve_stage<T: Scalar>(
    aux: &AuxGame<T>,
    p: &[T],
    alpha: T,
    cont: Continuation<'_, T>,
) -> Result<StageSolution<T>, LpError> {
    let (nk, ni, nj, nd) = (aux.k, aux.i, aux.j, aux.num_signals());
    let beta = T::one() - alpha;
    let use_payoff = alpha > T::zero();
    let cont = if beta > T::zero() { cont } else { Continuation::None };

    let mut lp = LinearProgram::new();
    let x: Vec<usize> = (0..nk * ni).map(|_| lp.add_var(T::zero())).collect();
    let t0 = use_payoff.then(|| lp.add_free_var(alpha));

    let mut jrows = Vec::new();
    if let Some(t0) = t0 {
        for j in 0..nj {
            let mut row = vec![(t0, T::one())];
            for k in 0..nk {
                for i in 0..ni {
                    let g = aux.payoff(k, i, j);
                    if g != T::zero() {
                        row.push((x[k * ni + i], -g));
                    }
                }
            }
            jrows.push(lp.add_row(&row, Relation::Le, T::zero()));
        }
    }
    for k in 0..nk {
        let row: Vec<(usize, T)> = (0..ni).map(|i| (x[k * ni + i], T::one())).collect();
        lp.add_row(&row, Relation::Eq, p[k]);
    }

    // Mass of (next state k2, signal d) as a linear form in x.
    let mass = |k2: usize, d: usize| -> Vec<(usize, T)> {
        let mut out = Vec::new();
        for k in 0..nk {
            for i in 0..ni {
                let q = aux.qbar(k, i, k2, d);
                if q != T::zero() {
                    out.push((x[k * ni + i], q));
                }
            }
        }
        out
    };

    let perspective = |lp: &mut LinearProgram<T>, s: &SupportSet<T>, obj: T, d: Option<usize>| {
        let nu: Vec<usize> = s.values.iter().map(|&v| lp.add_var(obj * v)).collect();
        for k2 in 0..nk {
            let mut row: Vec<(usize, T)> = nu
                .iter()
                .zip(&s.points)
                .filter(|(_, y)| y[k2] != T::zero())
                .map(|(&v, y)| (v, y[k2]))
                .collect();
            match d {
                Some(d) => row.extend(mass(k2, d).into_iter().map(|(v, c)| (v, -c))),
                None => {
                    for d in 0..nd {
                        row.extend(mass(k2, d).into_iter().map(|(v, c)| (v, -c)));
                    }
                }
            }
            lp.add_row(&row, Relation::Eq, T::zero());
        }
        nu
    };

    match cont {
        Continuation::None => {}
        Continuation::PerSignal(s) => {
            for d in 0..nd {
                perspective(&mut lp, s, beta, Some(d));
            }
        }
        Continuation::Capped { per_signal, mean } => {
            let z = lp.add_free_var(beta);
            let mut cap1 = vec![(z, T::one())];
            for d in 0..nd {
                let nu = perspective(&mut lp, per_signal, T::zero(), Some(d));
                cap1.extend(nu.iter().zip(&per_signal.values).map(|(&v, &val)| (v, -val)));
            }
            lp.add_row(&cap1, Relation::Le, T::zero());
            match mean {
                MeanCap::Hull(mean) => {
                    let mu = perspective(&mut lp, mean, T::zero(), None);
                    let mut cap2 = vec![(z, T::one())];
                    cap2.extend(mu.iter().zip(&mean.values).map(|(&v, &val)| (v, -val)));
                    lp.add_row(&cap2, Relation::Le, T::zero());
                }
                MeanCap::Fixed(c) => {
                    lp.add_row(&[(z, T::one())], Relation::Le, c);
                }
            }
        }
    }

    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::Unexpected(sol.status));
    }
    let tiny = T::tolerances().structural;
    let rows: Vec<Vec<T>> = (0..nk)
        .map(|k| {
            if p[k] <= tiny {
                vec![T::one() / T::from_usize(ni).unwrap(); ni]
            } else {
                (0..ni).map(|i| sol.primal[x[k * ni + i]] / p[k]).collect()
            }
        })
        .collect();
    let response = if jrows.is_empty() {
        vec![T::one() / T::from_usize(nj).unwrap(); nj]
    } else {
        jrows.iter().map(|&r| sol.dual[r].max(T::zero())).collect()
    };
    Ok(StageSolution {
        value: sol.objective,
        action: StackedMixed::normalized(rows),
        response: normalise(response),
        lp_residual: sol.primal_residual,
    })
}

fn normalise<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    let s: T = v.iter().copied().sum();
    if s > T::zero() {
        v.iter_mut().for_each(|x| *x = *x / s);
    } else {
        let u = T::one() / T::from_usize(v.len()).unwrap();
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}
