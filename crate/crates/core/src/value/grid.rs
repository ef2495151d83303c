//! Certified lower and upper bounds for the value on a belief lattice.

use super::lattice::SimplexGrid;
use super::stage::{solve_stage, Continuation, MeanCap, StageSolution, SupportSet};
use crate::game::{AuxGame, StackedMixed};
use crate::measures::BeliefMeasure;
use crate::scalar::{l1_dist, Scalar};
use crate::zerosum::LpError;
use serde::Serialize;
use std::sync::Arc;

/// Lipschitz constant of every value function in the l1 norm on beliefs,
/// for payoffs in [0, 1].
pub const LIPSCHITZ: f64 = 0.5;

/// Bounds `lower <= v <= upper` at every lattice point together with the
/// stage actions that attain them.
#[derive(Clone, Debug, Serialize)]
pub struct ValueGrid<T> {
    #[serde(skip)]
    pub grid: Arc<SimplexGrid<T>>,
    /// Weight of the current stage in the recursion step that produced this grid.
    pub alpha: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    /// Player 1's maximiser of the lower-bound problem at each point.
    pub actions: Vec<StackedMixed<T>>,
    /// Player 2's reply from the upper-bound problem at each point.
    pub responses: Vec<Vec<T>>,
    #[serde(skip)]
    lower_support: SupportSet<T>,
    #[serde(skip)]
    upper_support: SupportSet<T>,
    /// Upper bound as a piecewise-linear function of the first coordinate
    /// (two states only), sorted by that coordinate.
    #[serde(skip)]
    upper_curve: Vec<(T, T)>,
    #[serde(skip)]
    upper_shift: T,
}

impl<T: Scalar> ValueGrid<T> {
    pub(crate) fn from_bounds(
        grid: Arc<SimplexGrid<T>>,
        alpha: T,
        mut lower: Vec<T>,
        mut upper: Vec<T>,
        actions: Vec<StackedMixed<T>>,
        responses: Vec<Vec<T>>,
    ) -> Self {
        for (lo, hi) in lower.iter_mut().zip(upper.iter_mut()) {
            *lo = lo.max(T::zero()).min(T::one());
            *hi = hi.min(T::one()).max(*lo);
        }
        let lower_support = hull_support(&grid, &lower);
        let (upper_support, upper_curve, upper_shift) = upper_majorant(&grid, &lower, &upper);
        Self {
            grid,
            alpha,
            lower,
            upper,
            actions,
            responses,
            lower_support,
            upper_support,
            upper_curve,
            upper_shift,
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn gap(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&a, &b)| b - a)
            .fold(T::zero(), T::max)
    }

    pub fn lower_support(&self) -> &SupportSet<T> {
        &self.lower_support
    }

    pub fn upper_support(&self) -> &SupportSet<T> {
        &self.upper_support
    }

    /// Certified lower bound at any belief.
    pub fn lower_at(&self, p: &[T]) -> T {
        if let Some(g) = self.grid.locate(p) {
            return self.lower[g];
        }
        let half = T::lit(LIPSCHITZ);
        let lip = self
            .grid
            .points()
            .iter()
            .zip(&self.lower)
            .map(|(g, &v)| v - half * l1_dist(g, p))
            .fold(T::neg_infinity(), T::max);
        let cav = self.lower_support.cav_at(p).unwrap_or(T::neg_infinity());
        lip.max(cav).max(T::zero())
    }

    /// Certified upper bound at any belief.
    pub fn upper_at(&self, p: &[T]) -> T {
        if let Some(g) = self.grid.locate(p) {
            return self.upper[g];
        }
        let half = T::lit(LIPSCHITZ);
        let lip = self
            .grid
            .points()
            .iter()
            .zip(&self.upper)
            .map(|(g, &v)| v + half * l1_dist(g, p))
            .fold(T::infinity(), T::min);
        let env = if self.grid.k == 2 {
            interpolate(&self.upper_curve, p[0])
        } else {
            self.upper_support.cav_at(p).unwrap_or(T::infinity())
        };
        lip.min(env).min(T::one())
    }

    /// Bounds on the integral of the value against `u`.
    pub fn evaluate_measure(&self, u: &BeliefMeasure<T>) -> (T, T) {
        let lo = u.integrate(|p| self.lower_at(p));
        let hi = u.integrate(|p| self.upper_at(p));
        (lo, hi)
    }

    #[allow(dead_code)]
    pub(crate) fn upper_shift(&self) -> T {
        self.upper_shift
    }
}

fn interpolate<T: Scalar>(curve: &[(T, T)], x: T) -> T {
    let pos = curve.partition_point(|c| c.0 < x);
    if pos == 0 {
        return curve[0].1;
    }
    if pos == curve.len() {
        return curve[curve.len() - 1].1;
    }
    let (x0, y0) = curve[pos - 1];
    let (x1, y1) = curve[pos];
    if x1 - x0 <= T::zero() {
        return y0.min(y1);
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Upper concave hull of points sorted by abscissa.
pub(crate) fn upper_hull<T: Scalar>(pts: &[(T, T)]) -> Vec<(T, T)> {
    let mut h: Vec<(T, T)> = Vec::new();
    for &p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= T::zero() {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}

fn two_state_support<T: Scalar>(curve: &[(T, T)]) -> SupportSet<T> {
    let hull = upper_hull(curve);
    SupportSet {
        points: hull.iter().map(|&(x, _)| vec![x, T::one() - x]).collect(),
        values: hull.iter().map(|&(_, v)| v).collect(),
    }
}

/// Concave hull of lattice values, pruned to hull vertices when `k = 2`.
pub(crate) fn hull_support<T: Scalar>(grid: &SimplexGrid<T>, vals: &[T]) -> SupportSet<T> {
    if grid.k == 2 {
        let curve: Vec<(T, T)> = grid.points().iter().map(|p| p[0]).zip(vals.iter().copied()).collect();
        return two_state_support(&curve);
    }
    SupportSet {
        points: grid.points().iter().map(|p| p.to_vec()).collect(),
        values: vals.to_vec(),
    }
}

/// Concave majorant of every concave function squeezed between `lower` and
/// `upper` on the lattice.
///
/// With two states each cell gets the minimum of four lines: the Lipschitz
/// cones at its ends and the chords through the neighbouring cells, which
/// bound a concave function from above outside their own interval. With more
/// states the hull of `upper` is shifted by the worst Lipschitz excess inside
/// a lattice cell.
fn upper_majorant<T: Scalar>(
    grid: &SimplexGrid<T>,
    lower: &[T],
    upper: &[T],
) -> (SupportSet<T>, Vec<(T, T)>, T) {
    let k = grid.k;
    if k == 1 {
        let s = SupportSet {
            points: vec![vec![T::one()]],
            values: vec![upper[0]],
        };
        return (s, Vec::new(), T::zero());
    }
    if k > 2 {
        let kf = T::from_usize(k).unwrap();
        let diam = T::lit(2.0 * (k / 2) as f64) / T::from_usize(grid.n).unwrap();
        let shift = T::lit(LIPSCHITZ) * diam * (kf - T::one()) / kf;
        let s = SupportSet {
            points: grid.points().iter().map(|p| p.to_vec()).collect(),
            values: upper.iter().map(|&v| (v + shift).min(T::one())).collect(),
        };
        return (s, Vec::new(), shift);
    }
    let n = grid.n;
    let h = T::one() / T::from_usize(n).unwrap();
    let xs: Vec<T> = grid.points().iter().map(|p| p[0]).collect();
    // Lipschitz slope in the first coordinate: l1 distance is twice |dx|.
    let lip = T::lit(2.0 * LIPSCHITZ);
    let mut at_grid: Vec<T> = upper.to_vec();
    let mut curve: Vec<(T, T)> = Vec::new();
    let mut interior: Vec<Vec<(T, T)>> = vec![Vec::new(); n];
    for a in 0..n {
        let (x0, x1) = (xs[a], xs[a + 1]);
        // Lines as (slope, value at x0).
        let mut lines = vec![(lip, upper[a]), (-lip, upper[a + 1] + lip * h)];
        if a >= 1 {
            let s = (upper[a] - lower[a - 1]) / h;
            lines.push((s, upper[a]));
        }
        if a + 2 <= n {
            let s = (lower[a + 2] - upper[a + 1]) / h;
            lines.push((s, upper[a + 1] - s * h));
        }
        let eval = |x: T| {
            lines
                .iter()
                .map(|&(s, c)| c + s * (x - x0))
                .fold(T::infinity(), T::min)
        };
        let mut cand = Vec::new();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let ds = lines[i].0 - lines[j].0;
                if ds.abs() <= T::tolerances().structural {
                    continue;
                }
                let x = x0 + (lines[j].1 - lines[i].1) / ds;
                if x > x0 && x < x1 {
                    cand.push(x);
                }
            }
        }
        cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
        interior[a] = cand.into_iter().map(|x| (x, eval(x).min(T::one()))).collect();
        at_grid[a] = at_grid[a].min(eval(x0));
        at_grid[a + 1] = at_grid[a + 1].min(eval(x1));
    }
    for g in 0..=n {
        at_grid[g] = at_grid[g].max(lower[g]);
        curve.push((xs[g], at_grid[g]));
        if g < n {
            curve.extend(interior[g].iter().copied());
        }
    }
    let support = two_state_support(&curve);
    (support, curve, T::zero())
}

/// Lower and upper stage problems at one belief with continuation bounds
/// `cont`. `kernel` is the action-independent state kernel, if any.
pub fn solve_bounds<T: Scalar>(
    aux: &AuxGame<T>,
    kernel: Option<&[Vec<T>]>,
    p: &[T],
    alpha: T,
    cont: Option<&ValueGrid<T>>,
) -> Result<(StageSolution<T>, StageSolution<T>), LpError> {
    let Some(v) = cont else {
        let lo = solve_stage(aux, p, alpha, Continuation::None)?;
        let hi = lo.clone();
        return Ok((lo, hi));
    };
    let mean = match kernel {
        Some(kern) => {
            let m: Vec<T> = (0..aux.k)
                .map(|k2| (0..aux.k).map(|k| p[k] * kern[k][k2]).sum())
                .collect();
            MeanCap::Fixed(v.upper_at(&m))
        }
        None => MeanCap::Hull(v.upper_support()),
    };
    let lo = solve_stage(aux, p, alpha, Continuation::PerSignal(v.lower_support()))?;
    let hi = solve_stage(
        aux,
        p,
        alpha,
        Continuation::Capped {
            per_signal: v.upper_support(),
            mean,
        },
    )?;
    Ok((lo, hi))
}

/// Solves the lower and upper stage problems at every lattice point.
pub fn stage_grid<T: Scalar>(
    aux: &AuxGame<T>,
    grid: &Arc<SimplexGrid<T>>,
    alpha: T,
    cont: Option<&ValueGrid<T>>,
) -> Result<ValueGrid<T>, LpError> {
    let kernel = aux.uncontrolled_kernel();
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    let mut actions = Vec::with_capacity(grid.len());
    let mut responses = Vec::with_capacity(grid.len());
    let results = par_map(grid.points(), |p| solve_bounds(aux, kernel.as_deref(), p, alpha, cont));
    for r in results {
        let (lo, hi) = r?;
        lower.push(lo.value);
        upper.push(hi.value);
        actions.push(lo.action);
        responses.push(hi.response);
    }
    Ok(ValueGrid::from_bounds(grid.clone(), alpha, lower, upper, actions, responses))
}

fn par_map<A: Sync, B: Send>(xs: &[A], f: impl Fn(&A) -> B + Sync + Send) -> Vec<B> {
    use rayon::prelude::*;
    xs.par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_drops_interior_points() {
        let pts = vec![(0.0, 0.0), (0.25, 0.1), (0.5, 0.5), (1.0, 0.0)];
        let h = upper_hull(&pts);
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn majorant_is_exact_on_concave_data() {
        let g = Arc::new(SimplexGrid::<f64>::new(2, 8));
        let f = |x: f64| x * (1.0 - x);
        let v: Vec<f64> = g.points().iter().map(|p| f(p[0])).collect();
        let vg = ValueGrid::from_bounds(g.clone(), 1.0, v.clone(), v.clone(), vec![], vec![]);
        for t in 0..=100 {
            let x = t as f64 / 100.0;
            let p = [x, 1.0 - x];
            let hi = vg.upper_at(&p);
            let lo = vg.lower_at(&p);
            assert!(lo <= f(x) + 1e-12 && f(x) <= hi + 1e-12, "{x} {lo} {hi}");
            assert!(hi - lo <= 1.0 / 64.0 + 1e-12);
        }
    }

    #[test]
    fn three_state_shift_covers_lipschitz_excess() {
        let g = Arc::new(SimplexGrid::<f64>::new(3, 4));
        let f = |p: &[f64]| 0.5 - 0.5 * (p[0] - 0.5).abs();
        let v: Vec<f64> = g.points().iter().map(|p| f(p)).collect();
        let vg = ValueGrid::from_bounds(g.clone(), 1.0, v.clone(), v, vec![], vec![]);
        let p = [0.3, 0.3, 0.4];
        assert!(vg.upper_at(&p) >= f(&p) - 1e-12);
        assert!(vg.lower_at(&p) <= f(&p) + 1e-12);
    }
}
