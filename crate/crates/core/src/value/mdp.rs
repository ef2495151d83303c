//! The auxiliary game as a deterministic control problem on belief measures:
//! a stage action map sends `u` to `H(u, f)` and pays `G(u, f)`.

use crate::game::{AuxGame, StackedMixed};
use crate::measures::{Belief, BeliefMeasure, MeasureError};
use crate::scalar::Scalar;
use crate::zerosum::{solve_lp, LinearProgram, LpError, LpStatus, Relation};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlayError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("stage {stage}: no action map realises the next measure and payoff (residual {residual:e})")]
    NotRealisable { stage: usize, residual: f64 },
    #[error("a play needs at least two measures")]
    TooShort,
}

/// One stage of a play: the current measure and the payoff it yields.
#[derive(Clone, Debug, Serialize)]
pub struct PlayStep<T> {
    pub measure: BeliefMeasure<T>,
    pub payoff: T,
}

/// A play `(u_1, y_1), (u_2, y_2), ...` together with the final measure.
#[derive(Clone, Debug, Serialize)]
pub struct Play<T> {
    pub steps: Vec<PlayStep<T>>,
    pub terminal: BeliefMeasure<T>,
}

/// Action map at one stage: one stacked action per atom.
pub type AtomActions<T> = Vec<(Belief<T>, StackedMixed<T>)>;

/// `H(u, f)`: law of the next belief.
pub fn next_measure<T: Scalar>(
    aux: &AuxGame<T>,
    u: &BeliefMeasure<T>,
    f: impl Fn(&Belief<T>) -> StackedMixed<T>,
) -> Result<BeliefMeasure<T>, MeasureError> {
    let parts: Vec<(BeliefMeasure<T>, T)> = u
        .atoms()
        .iter()
        .map(|a| (aux.belief_transition(&a.atom, &f(&a.atom)), a.weight))
        .collect();
    let refs: Vec<(T, &BeliefMeasure<T>)> = parts.iter().map(|(m, w)| (*w, m)).collect();
    BeliefMeasure::mixture(&refs)
}

/// `G(u, f)`: expected stage payoff when player 2 best-responds at each belief.
pub fn stage_reward<T: Scalar>(
    aux: &AuxGame<T>,
    u: &BeliefMeasure<T>,
    f: impl Fn(&Belief<T>) -> StackedMixed<T>,
) -> T {
    u.integrate(|p| aux.guaranteed_payoff(p, &f(p)))
}

/// Play induced by a Markov strategy `sigma(t, p)` over `horizon` stages.
pub fn play_of_markov_strategy<T: Scalar>(
    aux: &AuxGame<T>,
    u: &BeliefMeasure<T>,
    sigma: impl Fn(usize, &Belief<T>) -> StackedMixed<T>,
    horizon: usize,
) -> Result<Play<T>, MeasureError> {
    let mut cur = u.clone();
    let mut steps = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let payoff = stage_reward(aux, &cur, |p| sigma(t, p));
        let next = next_measure(aux, &cur, |p| sigma(t, p))?;
        steps.push(PlayStep {
            measure: cur,
            payoff,
        });
        cur = next;
    }
    Ok(Play {
        steps,
        terminal: cur,
    })
}

/// Action maps realising a play.
///
/// Each stage is one linear program: player 1's joint law `x_p(k, i)` at each
/// atom, split over the atoms of the next measure. The program maximises the
/// stage payoff, so the returned maps realise every measure and pay at least
/// the recorded payoffs. A solution that splits one posterior over several
/// atoms is rejected by the forward check.
pub fn markov_strategy_of_play<T: Scalar>(
    aux: &AuxGame<T>,
    play: &Play<T>,
) -> Result<Vec<AtomActions<T>>, PlayError> {
    let tol = T::lit(1e-7);
    let mut out = Vec::with_capacity(play.steps.len());
    for (t, step) in play.steps.iter().enumerate() {
        let next = play
            .steps
            .get(t + 1)
            .map(|s| &s.measure)
            .unwrap_or(&play.terminal);
        let f = realise_stage(aux, &step.measure, next, step.payoff).map_err(|e| match e {
            PlayError::NotRealisable { residual, .. } => PlayError::NotRealisable {
                stage: t + 1,
                residual,
            },
            other => other,
        })?;
        let lookup = |p: &Belief<T>| -> StackedMixed<T> {
            f.iter()
                .find(|(q, _)| q.dist(p) <= T::tolerances().structural * T::lit(100.0))
                .map(|(_, a)| a.clone())
                .expect("atom of the current measure")
        };
        let h = next_measure(aux, &step.measure, lookup)?;
        let g = stage_reward(aux, &step.measure, lookup);
        let w = crate::measures::wasserstein(&h, next)?.0;
        if w > tol || g < step.payoff - tol {
            return Err(PlayError::NotRealisable {
                stage: t + 1,
                residual: w.max(step.payoff - g).to_f64_lossy(),
            });
        }
        out.push(f);
    }
    Ok(out)
}

fn realise_stage<T: Scalar>(
    aux: &AuxGame<T>,
    u: &BeliefMeasure<T>,
    next: &BeliefMeasure<T>,
    payoff: T,
) -> Result<AtomActions<T>, PlayError> {
    let (nk, ni, nj, nd) = (aux.k, aux.i, aux.j, aux.num_signals());
    let mut lp = LinearProgram::new();
    let mut xs = Vec::new();
    let mut ss = Vec::new();
    let mut nu_by_target: Vec<Vec<usize>> = vec![Vec::new(); next.len()];
    for a in u.atoms() {
        let x: Vec<usize> = (0..nk * ni).map(|_| lp.add_var(T::zero())).collect();
        for k in 0..nk {
            let row: Vec<(usize, T)> = (0..ni).map(|i| (x[k * ni + i], T::one())).collect();
            lp.add_row(&row, Relation::Eq, a.weight * a.atom[k]);
        }
        let s = lp.add_free_var(T::one());
        for j in 0..nj {
            let mut row = vec![(s, T::one())];
            for k in 0..nk {
                for i in 0..ni {
                    row.push((x[k * ni + i], -aux.payoff(k, i, j)));
                }
            }
            lp.add_row(&row, Relation::Le, T::zero());
        }
        for d in 0..nd {
            let nu: Vec<usize> = (0..next.len()).map(|_| lp.add_var(T::zero())).collect();
            for (y, &v) in nu.iter().enumerate() {
                nu_by_target[y].push(v);
            }
            for k2 in 0..nk {
                let mut row: Vec<(usize, T)> = nu
                    .iter()
                    .zip(next.atoms())
                    .filter(|(_, b)| b.atom[k2] != T::zero())
                    .map(|(&v, b)| (v, b.atom[k2]))
                    .collect();
                for k in 0..nk {
                    for i in 0..ni {
                        let q = aux.qbar(k, i, k2, d);
                        if q != T::zero() {
                            row.push((x[k * ni + i], -q));
                        }
                    }
                }
                lp.add_row(&row, Relation::Eq, T::zero());
            }
        }
        xs.push(x);
        ss.push(s);
    }
    for (vars, b) in nu_by_target.iter().zip(next.atoms()) {
        let row: Vec<(usize, T)> = vars.iter().map(|&v| (v, T::one())).collect();
        lp.add_row(&row, Relation::Eq, b.weight);
    }
    let row: Vec<(usize, T)> = ss.iter().map(|&s| (s, T::one())).collect();
    lp.add_row(&row, Relation::Ge, payoff - T::lit(1e-9));
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(PlayError::NotRealisable {
                stage: 0,
                residual: f64::INFINITY,
            })
        }
        other => return Err(LpError::Unexpected(other).into()),
    }
    let tiny = T::tolerances().structural;
    Ok(u
        .atoms()
        .iter()
        .zip(&xs)
        .map(|(a, x)| {
            let rows = (0..nk)
                .map(|k| {
                    let mass = a.weight * a.atom[k];
                    if mass <= tiny {
                        vec![T::one() / T::from_usize(ni).unwrap(); ni]
                    } else {
                        (0..ni).map(|i| sol.primal[x[k * ni + i]] / mass).collect()
                    }
                })
                .collect();
            (a.atom.clone(), StackedMixed::normalized(rows))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::build_aumann_maschler;

    #[test]
    fn revealing_then_round_trip() {
        let g1 = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let g2 = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let spec = build_aumann_maschler(&[g1, g2], &[0.5, 0.5]).unwrap();
        let aux = AuxGame::new(&spec).unwrap();
        let u = BeliefMeasure::dirac(Belief::new(vec![0.5, 0.5]).unwrap());
        let sigma = |t: usize, p: &Belief<f64>| {
            if t == 1 {
                StackedMixed::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap()
            } else {
                StackedMixed::constant(2, vec![p[1], p[0]])
            }
        };
        let play = play_of_markov_strategy(&aux, &u, sigma, 3).unwrap();
        assert_eq!(play.steps[1].measure.len(), 2);
        let maps = markov_strategy_of_play(&aux, &play).unwrap();
        let again = play_of_markov_strategy(
            &aux,
            &u,
            |t, p| {
                maps[t - 1]
                    .iter()
                    .find(|(q, _)| q.dist(p) < 1e-9)
                    .unwrap()
                    .1
                    .clone()
            },
            3,
        )
        .unwrap();
        for (a, b) in play.steps.iter().zip(&again.steps) {
            assert!(crate::measures::wasserstein(&a.measure, &b.measure).unwrap().0 < 1e-9);
            assert!(b.payoff >= a.payoff - 1e-9);
        }
    }

    #[test]
    fn impossible_play_is_rejected() {
        let g1 = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let g2 = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        let spec = build_aumann_maschler(&[g1, g2], &[0.5, 0.5]).unwrap();
        let aux = AuxGame::new(&spec).unwrap();
        let u = BeliefMeasure::dirac(Belief::new(vec![0.5, 0.5]).unwrap());
        // Barycentre moves: not a martingale step.
        let play = Play {
            steps: vec![PlayStep {
                measure: u,
                payoff: 0.0,
            }],
            terminal: BeliefMeasure::dirac(Belief::new(vec![0.9, 0.1]).unwrap()),
        };
        match markov_strategy_of_play(&aux, &play) {
            Err(PlayError::NotRealisable { stage: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
