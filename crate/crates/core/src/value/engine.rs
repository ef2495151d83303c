//! Backward induction over stage weights with a shared cache.

use super::grid::{solve_bounds, stage_grid, ValueGrid};
use super::lattice::SimplexGrid;
use super::stage::StageSolution;
use super::theta::{theta_grid, ThetaWeights};
use crate::game::{AuxGame, GameError, RepeatedGameSpec};
use crate::measures::{Belief, BeliefMeasure};
use crate::scalar::Scalar;
use crate::zerosum::LpError;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValueError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("grid spacing must lie in (0, 2], got {0}")]
    BadDelta(f64),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("{what} = {got} exceeds the guard {limit}")]
    Guard {
        what: &'static str,
        got: usize,
        limit: usize,
    },
}

/// Default lattice spacing for `k` states.
pub fn default_delta(k: usize) -> f64 {
    match k {
        0..=2 => 1.0 / 32.0,
        3 => 1.0 / 16.0,
        _ => 1.0 / 4.0,
    }
}

/// Bounds at a single belief or measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Interval<T> {
    pub fn gap(&self) -> T {
        self.upper - self.lower
    }

    pub fn intersects(&self, other: &Self, tol: T) -> bool {
        self.lower <= other.upper + tol && other.lower <= self.upper + tol
    }
}

/// Value bounds for one game on one lattice, memoised by stage weights.
pub struct ValueEngine<T> {
    aux: AuxGame<T>,
    grid: Arc<SimplexGrid<T>>,
    initial: BeliefMeasure<T>,
    cache: Mutex<HashMap<Vec<i64>, Arc<ValueGrid<T>>>>,
}

impl<T: Scalar> ValueEngine<T> {
    pub fn new(spec: &RepeatedGameSpec<T>, delta: f64) -> Result<Self, ValueError> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(ValueError::BadDelta(delta));
        }
        spec.validate()?;
        let ha = spec.validate_ha_prime();
        if !ha.holds {
            return Err(GameError::Hypothesis {
                name: "HA'",
                violation: ha.max_violation.to_f64_lossy(),
            }
            .into());
        }
        let aux = AuxGame::new(spec)?;
        let grid = Arc::new(SimplexGrid::from_delta(aux.k, delta));
        Ok(Self {
            aux,
            grid,
            initial: spec.initial_belief_measure(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn aux(&self) -> &AuxGame<T> {
        &self.aux
    }

    pub fn grid(&self) -> &Arc<SimplexGrid<T>> {
        &self.grid
    }

    pub fn delta(&self) -> T {
        self.grid.delta()
    }

    /// Law of the first public belief.
    pub fn initial_measure(&self) -> &BeliefMeasure<T> {
        &self.initial
    }

    pub fn cached_grids(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    /// Bounds for the value of the `theta`-weighted game on the lattice.
    pub fn value_theta_grid(&self, theta: &ThetaWeights<T>) -> Result<Arc<ValueGrid<T>>, ValueError> {
        if theta.max_stage() == 0 {
            return Err(ValueError::EmptyHorizon);
        }
        let chain = theta.suffix_chain();
        let mut start = chain.len();
        while start > 0 {
            if self.cache.lock().unwrap().contains_key(&chain[start - 1].key()) {
                break;
            }
            start -= 1;
        }
        // chain[start..] is either cached or computed from its successor.
        for idx in (0..chain.len()).rev() {
            let key = chain[idx].key();
            if self.cache.lock().unwrap().contains_key(&key) {
                continue;
            }
            let alpha = chain[idx].first();
            let next = if idx + 1 < chain.len() {
                Some(self.cache.lock().unwrap()[&chain[idx + 1].key()].clone())
            } else {
                None
            };
            let g = stage_grid(&self.aux, &self.grid, alpha, next.as_deref())?;
            self.cache.lock().unwrap().insert(key, Arc::new(g));
        }
        Ok(self.cache.lock().unwrap()[&theta.key()].clone())
    }

    /// `v_n`, the value of the `n`-stage average game.
    pub fn value_n(&self, n: usize) -> Result<Arc<ValueGrid<T>>, ValueError> {
        if n == 0 {
            return Err(ValueError::EmptyHorizon);
        }
        self.value_theta_grid(&ThetaWeights::uniform(n))
    }

    /// `v_{m,n}`: average of stages `m+1..=m+n`.
    pub fn value_mn(&self, m: usize, n: usize) -> Result<Arc<ValueGrid<T>>, ValueError> {
        if n == 0 {
            return Err(ValueError::EmptyHorizon);
        }
        self.value_theta_grid(&ThetaWeights::uniform_range(m + 1, m + n))
    }

    /// Stage problem at an arbitrary belief with the continuation of `theta+`.
    pub fn solve_at(
        &self,
        theta: &ThetaWeights<T>,
        p: &[T],
    ) -> Result<(StageSolution<T>, StageSolution<T>), ValueError> {
        let alpha = theta.first();
        let next = if (T::one() - alpha).abs() <= T::tolerances().structural {
            None
        } else {
            Some(self.value_theta_grid(&theta.plus())?)
        };
        let kernel = self.aux.uncontrolled_kernel();
        let (lo, hi) = solve_bounds(&self.aux, kernel.as_deref(), p, alpha, next.as_deref())?;
        Ok((lo, hi))
    }

    /// Bounds at one belief; off-lattice beliefs get a direct stage solve.
    pub fn value_at(&self, theta: &ThetaWeights<T>, p: &Belief<T>) -> Result<Interval<T>, ValueError> {
        let vg = self.value_theta_grid(theta)?;
        if let Some(g) = self.grid.locate(p) {
            return Ok(Interval {
                lower: vg.lower[g],
                upper: vg.upper[g],
            });
        }
        let (lo, hi) = self.solve_at(theta, p)?;
        Ok(Interval {
            lower: lo.value.max(vg.lower_at(p)),
            upper: hi.value.min(vg.upper_at(p)),
        })
    }

    /// Bounds on the integral of the value against `u`.
    pub fn value_on(&self, theta: &ThetaWeights<T>, u: &BeliefMeasure<T>) -> Result<Interval<T>, ValueError> {
        let mut lower = T::zero();
        let mut upper = T::zero();
        for a in u.atoms() {
            let iv = self.value_at(theta, &a.atom)?;
            lower = lower + a.weight * iv.lower;
            upper = upper + a.weight * iv.upper;
        }
        Ok(Interval { lower, upper })
    }

    /// Bounds on the value at the initial law.
    pub fn value_initial(&self, theta: &ThetaWeights<T>) -> Result<Interval<T>, ValueError> {
        self.value_on(theta, &self.initial.clone())
    }

    /// `w_{m,n}(u) = inf_theta v_[theta^{m,n}](u)` over weights on `1..=n`.
    ///
    /// The infimum is taken over the `resolution` lattice of the simplex of
    /// stage weights. Since a change of weights by `e` in l1 moves every
    /// value by at most `e / 2`, the certified lower bound subtracts half the
    /// covering radius of that lattice.
    pub fn w_mn(
        &self,
        m: usize,
        n: usize,
        u: &BeliefMeasure<T>,
        resolution: usize,
        guard: usize,
    ) -> Result<WBounds<T>, ValueError> {
        if n == 0 {
            return Err(ValueError::EmptyHorizon);
        }
        if n > guard {
            return Err(ValueError::Guard {
                what: "n",
                got: n,
                limit: guard,
            });
        }
        let mut best: Option<(ThetaWeights<T>, Interval<T>)> = None;
        let mut lower_min = T::infinity();
        for theta in theta_grid::<T>(n, resolution.max(1)) {
            let iv = self.value_on(&theta.lift(m), u)?;
            lower_min = lower_min.min(iv.lower);
            if best.as_ref().map_or(true, |b| iv.upper < b.1.upper) {
                best = Some((theta, iv));
            }
        }
        let (argmin, at) = best.expect("theta lattice is nonempty");
        // With one state every weighting has the same value.
        let radius = if self.aux.k == 1 {
            T::zero()
        } else {
            T::lit((n / 2) as f64) / T::from_usize(resolution.max(1)).unwrap()
        };
        Ok(WBounds {
            m,
            n,
            lower: (lower_min - radius).max(T::zero()),
            lower_on_lattice: lower_min,
            upper: at.upper,
            argmin,
        })
    }
}

/// Bounds for `w_{m,n}`.
#[derive(Clone, Debug, Serialize)]
pub struct WBounds<T> {
    pub m: usize,
    pub n: usize,
    /// Certified: lattice minimum less the covering-radius slack.
    pub lower: T,
    /// Minimum of the lower bounds over the weight lattice.
    pub lower_on_lattice: T,
    pub upper: T,
    pub argmin: ThetaWeights<T>,
}
