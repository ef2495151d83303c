//! Dense revised simplex with an explicit basis inverse.
//!
//! Problems are stated as `maximize c'x` subject to rows `a'x (<=|>=|=) b`,
//! with each variable either nonnegative or free. Solutions carry dual
//! values, and infeasible problems carry a Farkas certificate.

use crate::scalar::{Scalar, Tolerances};
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("singular basis during refactorisation (smallest pivot {min_pivot:e})")]
    SingularBasis { min_pivot: f64 },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("constraint references variable {var} but the problem has {n} variables")]
    BadIndex { var: usize, n: usize },
    #[error("non-finite coefficient in the problem data")]
    NonFinite,
    #[error("program expected to be solvable ended {0:?}")]
    Unexpected(LpStatus),
}

#[derive(Clone, Debug)]
struct Row<T> {
    coeffs: Vec<(usize, T)>,
    rel: Relation,
    rhs: T,
}

/// A linear program under construction.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    objective: Vec<T>,
    free: Vec<bool>,
    rows: Vec<Row<T>>,
}

/// Result of [`solve_lp`].
///
/// For an optimal solve `dual[i]` is the multiplier of row `i`: nonnegative
/// on `<=` rows, nonpositive on `>=` rows, and `c'x = b'y`. For an
/// infeasible problem `farkas` holds `y` with the same sign pattern,
/// `A'y >= 0` (zero on free columns) and `b'y < 0`. For an unbounded problem
/// `ray` is a feasible direction with positive objective slope.
#[derive(Clone, Debug, Serialize)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub objective: T,
    pub primal: Vec<T>,
    pub dual: Vec<T>,
    pub farkas: Option<Vec<T>>,
    pub ray: Option<Vec<T>>,
    pub primal_residual: T,
    pub duality_gap: T,
    pub iterations: usize,
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        Self {
            objective: Vec::new(),
            free: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Adds a nonnegative variable with the given objective coefficient.
    pub fn add_var(&mut self, obj: T) -> usize {
        self.objective.push(obj);
        self.free.push(false);
        self.objective.len() - 1
    }

    pub fn add_free_var(&mut self, obj: T) -> usize {
        self.objective.push(obj);
        self.free.push(true);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: &[(usize, T)], rel: Relation, rhs: T) -> usize {
        self.rows.push(Row {
            coeffs: coeffs.to_vec(),
            rel,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    /// Value of `a_i'x` for every row.
    pub fn row_activity(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest violation of any row or sign restriction at `x`.
    pub fn primal_residual(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (r, act) in self.rows.iter().zip(self.row_activity(x)) {
            let v = match r.rel {
                Relation::Le => act - r.rhs,
                Relation::Ge => r.rhs - act,
                Relation::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            if !self.free[j] {
                worst = worst.max(-xj);
            }
        }
        worst
    }

    /// `A'y` as a dense vector over the variables.
    pub fn transpose_times(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_vars()];
        for (r, &yi) in self.rows.iter().zip(y) {
            for &(j, a) in &r.coeffs {
                out[j] = out[j] + a * yi;
            }
        }
        out
    }

    /// Checks a Farkas certificate against this problem.
    pub fn verify_farkas(&self, y: &[T], tol: T) -> bool {
        if y.len() != self.rows.len() {
            return false;
        }
        for (r, &yi) in self.rows.iter().zip(y) {
            let ok = match r.rel {
                Relation::Le => yi >= -tol,
                Relation::Ge => yi <= tol,
                Relation::Eq => true,
            };
            if !ok {
                return false;
            }
        }
        let aty = self.transpose_times(y);
        for (j, &v) in aty.iter().enumerate() {
            if self.free[j] && v.abs() > tol || !self.free[j] && v < -tol {
                return false;
            }
        }
        let by: T = self.rows.iter().zip(y).map(|(r, &yi)| r.rhs * yi).sum();
        by < -tol
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<T> {
    m: usize,
    ncols: usize,
    /// Column-major constraint matrix in internal form.
    a: Vec<T>,
    b: Vec<T>,
    kind: Vec<ColKind>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<T>,
    xb: Vec<T>,
    tol: Tolerances<T>,
    iterations: usize,
    since_refactor: usize,
    /// The other half of a split free variable.
    partner: Vec<Option<usize>>,
}

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_SWITCH: usize = 32;
/// Pivots below this fraction of the entering column's largest entry are refused.
const RELATIVE_PIVOT: f64 = 1e-7;

enum PhaseOutcome {
    Optimal,
    Unbounded(usize),
}

impl<T: Scalar> Tableau<T> {
    fn col(&self, j: usize) -> &[T] {
        &self.a[j * self.m..(j + 1) * self.m]
    }

    fn binv_times_col(&self, j: usize) -> Vec<T> {
        let m = self.m;
        let col = self.col(j);
        let mut w = vec![T::zero(); m];
        for (k, &ak) in col.iter().enumerate() {
            if ak != T::zero() {
                for i in 0..m {
                    w[i] = w[i] + self.binv[i * m + k] * ak;
                }
            }
        }
        w
    }

    fn duals(&self, cost: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb != T::zero() {
                let row = &self.binv[i * m..(i + 1) * m];
                for k in 0..m {
                    y[k] = y[k] + cb * row[k];
                }
            }
        }
        y
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut bmat = vec![T::zero(); m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for i in 0..m {
                bmat[i * m + c] = self.a[j * m + i];
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        let mut min_pivot = T::infinity();
        for c in 0..m {
            let mut piv = c;
            for r in c + 1..m {
                if bmat[r * m + c].abs() > bmat[piv * m + c].abs() {
                    piv = r;
                }
            }
            let pv = bmat[piv * m + c];
            min_pivot = min_pivot.min(pv.abs());
            if pv.abs() < self.tol.pivot * T::lit(1e-3) {
                return Err(LpError::SingularBasis {
                    min_pivot: pv.abs().to_f64_lossy(),
                });
            }
            if piv != c {
                for k in 0..m {
                    bmat.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = bmat[c * m + c];
            for k in 0..m {
                bmat[c * m + k] = bmat[c * m + k] / d;
                inv[c * m + k] = inv[c * m + k] / d;
            }
            for r in 0..m {
                if r != c {
                    let f = bmat[r * m + c];
                    if f != T::zero() {
                        for k in 0..m {
                            bmat[r * m + k] = bmat[r * m + k] - f * bmat[c * m + k];
                            inv[r * m + k] = inv[r * m + k] - f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        // Rows of inv now correspond to basis positions.
        self.binv = inv;
        for i in 0..m {
            let mut s = T::zero();
            for k in 0..m {
                s = s + self.binv[i * m + k] * self.b[k];
            }
            self.xb[i] = s;
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, r: usize, entering: usize, w: &[T]) {
        let m = self.m;
        let wr = w[r];
        let theta = self.xb[r] / wr;
        for i in 0..m {
            if i != r {
                self.xb[i] = self.xb[i] - theta * w[i];
            }
        }
        self.xb[r] = theta;
        for k in 0..m {
            self.binv[r * m + k] = self.binv[r * m + k] / wr;
        }
        for i in 0..m {
            if i != r && w[i] != T::zero() {
                let f = w[i];
                for k in 0..m {
                    self.binv[i * m + k] = self.binv[i * m + k] - f * self.binv[r * m + k];
                }
            }
        }
        self.in_basis[self.basis[r]] = false;
        self.basis[r] = entering;
        self.in_basis[entering] = true;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    fn run_phase(
        &mut self,
        cost: &[T],
        allowed: &dyn Fn(usize) -> bool,
        max_iter: usize,
    ) -> Result<PhaseOutcome, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= max_iter {
                return Err(LpError::IterationLimit(max_iter));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let mut entering = None;
            let mut best = self.tol.optimality;
            for j in 0..self.ncols {
                if self.in_basis[j] || !allowed(j) || self.partner[j].is_some_and(|q| self.in_basis[q]) {
                    continue;
                }
                let d = cost[j] - crate::scalar::dot(&y, self.col(j));
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let w = self.binv_times_col(e);
            let mut leave: Option<usize> = None;
            let mut best_ratio = T::infinity();
            let wmax = w.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
            let piv_tol = self.tol.pivot.max(wmax * T::lit(RELATIVE_PIVOT));
            for i in 0..self.m {
                if w[i] > piv_tol {
                    let ratio = self.xb[i].max(T::zero()) / w[i];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            let tie = ratio <= best_ratio + self.tol.structural;
                            ratio < best_ratio - self.tol.structural
                                || tie && bland && self.basis[i] < self.basis[l]
                                || tie && !bland && w[i] > w[l]
                        }
                    };
                    if better {
                        best_ratio = best_ratio.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(PhaseOutcome::Unbounded(e));
            };
            if best_ratio <= self.tol.structural {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e, &w);
        }
    }
}

/// Solves `lp` with the default tolerances of `T`.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    solve_lp_with(lp, T::tolerances())
}

pub fn solve_lp_with<T: Scalar>(
    lp: &LinearProgram<T>,
    tol: Tolerances<T>,
) -> Result<LpSolution<T>, LpError> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    for r in &lp.rows {
        if !r.rhs.is_finite() {
            return Err(LpError::NonFinite);
        }
        for &(j, a) in &r.coeffs {
            if j >= n {
                return Err(LpError::BadIndex { var: j, n });
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite);
            }
        }
    }
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(LpError::NonFinite);
    }

    // Column layout: structural (free vars split in two), slacks, artificials.
    let mut struct_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for j in 0..n {
        let pos = ncols;
        ncols += 1;
        let neg = if lp.free[j] {
            ncols += 1;
            Some(pos + 1)
        } else {
            None
        };
        struct_of.push((pos, neg));
    }
    let sign: Vec<T> = lp
        .rows
        .iter()
        .map(|r| if r.rhs < T::zero() { -T::one() } else { T::one() })
        .collect();
    let internal_rel: Vec<Relation> = lp
        .rows
        .iter()
        .zip(&sign)
        .map(|(r, &s)| match (r.rel, s < T::zero()) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (rel, _) => rel,
        })
        .collect();
    let mut slack_of = vec![None; m];
    for (i, rel) in internal_rel.iter().enumerate() {
        if *rel != Relation::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut art_of = vec![None; m];
    for (i, rel) in internal_rel.iter().enumerate() {
        if *rel != Relation::Le {
            art_of[i] = Some(ncols);
            ncols += 1;
        }
    }

    let mut a = vec![T::zero(); ncols * m];
    let mut kind = vec![ColKind::Structural; ncols];
    for (i, r) in lp.rows.iter().enumerate() {
        for &(j, v) in &r.coeffs {
            let (pos, neg) = struct_of[j];
            a[pos * m + i] = a[pos * m + i] + sign[i] * v;
            if let Some(q) = neg {
                a[q * m + i] = a[q * m + i] - sign[i] * v;
            }
        }
        if let Some(s) = slack_of[i] {
            kind[s] = ColKind::Slack;
            a[s * m + i] = if internal_rel[i] == Relation::Le {
                T::one()
            } else {
                -T::one()
            };
        }
        if let Some(q) = art_of[i] {
            kind[q] = ColKind::Artificial;
            a[q * m + i] = T::one();
        }
    }
    let b: Vec<T> = lp.rows.iter().zip(&sign).map(|(r, &s)| s * r.rhs).collect();
    let basis: Vec<usize> = (0..m)
        .map(|i| art_of[i].or(slack_of[i]).expect("row without basic column"))
        .collect();
    let mut partner = vec![None; ncols];
    for &(pos, neg) in &struct_of {
        if let Some(q) = neg {
            partner[pos] = Some(q);
            partner[q] = Some(pos);
        }
    }
    let mut in_basis = vec![false; ncols];
    for &j in &basis {
        in_basis[j] = true;
    }
    let mut binv = vec![T::zero(); m * m];
    for i in 0..m {
        binv[i * m + i] = T::one();
    }
    let mut tab = Tableau {
        m,
        ncols,
        a,
        b: b.clone(),
        kind,
        basis,
        in_basis,
        binv,
        xb: b,
        tol,
        iterations: 0,
        since_refactor: 0,
        partner,
    };
    let max_iter = 50 * (m + ncols) + 1000;

    let to_original = |internal_y: &[T]| -> Vec<T> {
        internal_y.iter().zip(&sign).map(|(&y, &s)| y * s).collect()
    };

    // Phase I: maximise minus the sum of artificials.
    let has_art = art_of.iter().any(|a| a.is_some());
    if has_art {
        let cost1: Vec<T> = tab
            .kind
            .iter()
            .map(|k| {
                if *k == ColKind::Artificial {
                    -T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        match tab.run_phase(&cost1, &|_| true, max_iter)? {
            PhaseOutcome::Unbounded(_) => unreachable!("phase one is bounded"),
            PhaseOutcome::Optimal => {}
        }
        tab.refactor()?;
        let infeas: T = tab
            .basis
            .iter()
            .zip(&tab.xb)
            .filter(|(&j, _)| tab.kind[j] == ColKind::Artificial)
            .map(|(_, &x)| x.max(T::zero()))
            .sum();
        let bscale = T::one() + tab.b.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
        if infeas > tol.feasibility * bscale {
            let y = to_original(&tab.duals(&cost1));
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: T::nan(),
                primal: vec![T::zero(); n],
                dual: vec![T::zero(); m],
                farkas: Some(y),
                ray: None,
                primal_residual: infeas,
                duality_gap: T::zero(),
                iterations: tab.iterations,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.kind[tab.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, Vec<T>)> = None;
            let mut best_mag = tol.pivot * T::lit(1e3);
            for j in 0..ncols {
                if tab.in_basis[j]
                    || tab.kind[j] == ColKind::Artificial
                    || tab.partner[j].is_some_and(|q| tab.in_basis[q])
                {
                    continue;
                }
                let w = tab.binv_times_col(j);
                if w[r].abs() > best_mag {
                    best_mag = w[r].abs();
                    best = Some((j, w));
                }
            }
            if let Some((j, w)) = best {
                tab.xb[r] = T::zero();
                tab.pivot(r, j, &w);
            }
        }
        tab.refactor()?;
    }

    // Phase II.
    let mut cost2 = vec![T::zero(); ncols];
    for j in 0..n {
        let (pos, neg) = struct_of[j];
        cost2[pos] = lp.objective[j];
        if let Some(q) = neg {
            cost2[q] = -lp.objective[j];
        }
    }
    let kinds = tab.kind.clone();
    let allowed = move |j: usize| kinds[j] != ColKind::Artificial;
    let outcome = tab.run_phase(&cost2, &allowed, max_iter)?;
    tab.refactor()?;

    let mut col_value = vec![T::zero(); ncols];
    for (i, &j) in tab.basis.iter().enumerate() {
        col_value[j] = tab.xb[i];
    }
    let gather = |cv: &[T]| -> Vec<T> {
        struct_of
            .iter()
            .map(|&(pos, neg)| cv[pos] - neg.map_or(T::zero(), |q| cv[q]))
            .collect::<Vec<T>>()
    };
    let primal = gather(&col_value);

    if let PhaseOutcome::Unbounded(e) = outcome {
        let w = tab.binv_times_col(e);
        let mut dir = vec![T::zero(); ncols];
        dir[e] = T::one();
        for (i, &j) in tab.basis.iter().enumerate() {
            dir[j] = dir[j] - w[i];
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: T::infinity(),
            primal,
            dual: vec![T::zero(); m],
            farkas: None,
            ray: Some(gather(&dir)),
            primal_residual: T::zero(),
            duality_gap: T::zero(),
            iterations: tab.iterations,
        });
    }

    let dual = to_original(&tab.duals(&cost2));
    let objective: T = lp
        .objective
        .iter()
        .zip(&primal)
        .map(|(&c, &x)| c * x)
        .sum();
    let dual_obj: T = lp.rows.iter().zip(&dual).map(|(r, &y)| r.rhs * y).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        primal_residual: lp.primal_residual(&primal),
        primal,
        dual,
        farkas: None,
        ray: None,
        duality_gap: (objective - dual_obj).abs(),
        iterations: tab.iterations,
    })
}

/// Outcome of a pure feasibility problem.
#[derive(Clone, Debug, Serialize)]
pub enum Feasibility<T> {
    Feasible(Vec<T>),
    Infeasible(Vec<T>),
}

/// Finds a point satisfying the rows of `lp` (its objective is ignored), or
/// a Farkas certificate.
pub fn feasibility<T: Scalar>(lp: &LinearProgram<T>) -> Result<Feasibility<T>, LpError> {
    let mut plain = lp.clone();
    for c in plain.objective.iter_mut() {
        *c = T::zero();
    }
    let sol = solve_lp(&plain)?;
    Ok(match sol.status {
        LpStatus::Infeasible => Feasibility::Infeasible(sol.farkas.unwrap_or_default()),
        _ => Feasibility::Feasible(sol.primal),
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("supply mass {supply} differs from demand mass {demand}")]
    MassMismatch { supply: f64, demand: f64 },
    #[error("cost matrix is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Optimal transport plan (row-major `supply.len() x demand.len()`) and cost.
#[derive(Clone, Debug, Serialize)]
pub struct TransportPlan<T> {
    pub cost: T,
    pub plan: Vec<Vec<T>>,
    pub lp: LpSolution<T>,
}

/// Minimum-cost transport between two nonnegative mass vectors.
pub fn transport_lp<T: Scalar>(
    cost: &[Vec<T>],
    supply: &[T],
    demand: &[T],
) -> Result<TransportPlan<T>, TransportError> {
    let (r, c) = (supply.len(), demand.len());
    if cost.len() != r || cost.iter().any(|row| row.len() != c) {
        return Err(TransportError::Shape {
            rows: cost.len(),
            cols: cost.first().map_or(0, |row| row.len()),
            want_rows: r,
            want_cols: c,
        });
    }
    let s: T = supply.iter().copied().sum();
    let d: T = demand.iter().copied().sum();
    if (s - d).abs() > T::tolerances().feasibility {
        return Err(TransportError::MassMismatch {
            supply: s.to_f64_lossy(),
            demand: d.to_f64_lossy(),
        });
    }
    let mut lp = LinearProgram::new();
    let mut var = vec![vec![0usize; c]; r];
    for i in 0..r {
        for j in 0..c {
            var[i][j] = lp.add_var(-cost[i][j]);
        }
    }
    for i in 0..r {
        let row: Vec<(usize, T)> = (0..c).map(|j| (var[i][j], T::one())).collect();
        lp.add_row(&row, Relation::Eq, supply[i]);
    }
    for j in 0..c {
        let col: Vec<(usize, T)> = (0..r).map(|i| (var[i][j], T::one())).collect();
        lp.add_row(&col, Relation::Eq, demand[j]);
    }
    let sol = solve_lp(&lp)?;
    let plan: Vec<Vec<T>> = (0..r)
        .map(|i| (0..c).map(|j| sol.primal[var[i][j]].max(T::zero())).collect())
        .collect();
    Ok(TransportPlan {
        cost: -sol.objective,
        plan,
        lp: sol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_upper_bound() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(1.0);
        lp.add_row(&[(x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.dual[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_give_farkas() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(0.0);
        lp.add_row(&[(x, 1.0)], Relation::Le, 0.0);
        lp.add_row(&[(x, 1.0)], Relation::Ge, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(lp.verify_farkas(s.farkas.as_ref().unwrap(), 1e-9));
    }

    #[test]
    fn contradictory_equalities_with_free_vars() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_free_var(0.0);
        let y = lp.add_free_var(0.0);
        lp.add_row(&[(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.add_row(&[(x, 2.0), (y, 2.0)], Relation::Eq, 3.0);
        match feasibility(&lp).unwrap() {
            Feasibility::Infeasible(cert) => assert!(lp.verify_farkas(&cert, 1e-9)),
            Feasibility::Feasible(_) => panic!("should be infeasible"),
        }
    }

    #[test]
    fn empty_problem_is_feasible_at_origin() {
        let mut lp = LinearProgram::<f64>::new();
        lp.add_var(0.0);
        lp.add_var(0.0);
        match feasibility(&lp).unwrap() {
            Feasibility::Feasible(x) => assert_eq!(x, vec![0.0, 0.0]),
            Feasibility::Infeasible(_) => panic!(),
        }
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(1.0);
        let y = lp.add_var(0.0);
        lp.add_row(&[(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        let ray = s.ray.unwrap();
        assert!(ray[0] > 0.0 && ray[0] - ray[1] <= 1e-12);
    }

    #[test]
    fn textbook_problem_with_duals() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(3.0);
        let y = lp.add_var(5.0);
        lp.add_row(&[(x, 1.0)], Relation::Le, 4.0);
        lp.add_row(&[(y, 2.0)], Relation::Le, 12.0);
        lp.add_row(&[(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.primal[0] - 2.0).abs() < 1e-9 && (s.primal[1] - 6.0).abs() < 1e-9);
        let expect = [0.0, 1.5, 1.0];
        for (d, e) in s.dual.iter().zip(expect) {
            assert!((d - e).abs() < 1e-9);
        }
        assert!(s.duality_gap < 1e-9);
    }

    #[test]
    fn ge_rows_and_negative_rhs() {
        // min x + y s.t. x + 2y >= 4, -x <= -1 -> x = 1, y = 1.5, value 2.5.
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(-1.0);
        let y = lp.add_var(-1.0);
        lp.add_row(&[(x, 1.0), (y, 2.0)], Relation::Ge, 4.0);
        lp.add_row(&[(x, -1.0)], Relation::Le, -1.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective + 2.5).abs() < 1e-9);
        assert!(s.dual[0] <= 1e-12);
        assert!(s.dual[1] >= -1e-12);
        assert!(s.duality_gap < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(1.0);
        let y = lp.add_var(2.0);
        lp.add_row(&[(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.add_row(&[(x, 2.0), (y, 2.0)], Relation::Eq, 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(s.duality_gap < 1e-9);
    }

    #[test]
    fn degenerate_problem_is_deterministic() {
        // Beale's cycling example; Dantzig pricing with the textbook tie
        // rule cycles, the degeneracy switch must terminate.
        let mut lp = LinearProgram::<f64>::new();
        let v: Vec<usize> = [0.75, -150.0, 0.02, -6.0]
            .iter()
            .map(|&c| lp.add_var(c))
            .collect();
        lp.add_row(
            &[(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row(
            &[(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row(&[(v[2], 1.0)], Relation::Le, 1.0);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert!((a.objective - 0.05).abs() < 1e-9);
        assert_eq!(a.primal, b.primal);
    }

    #[test]
    fn transport_two_by_two() {
        let cost: Vec<Vec<f64>> = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let t = transport_lp(&cost, &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((t.cost - 1.0).abs() < 1e-12);
        let cost: Vec<Vec<f64>> = vec![vec![0.0, 3.0], vec![3.0, 0.0]];
        let t = transport_lp(&cost, &[0.3, 0.7], &[0.3, 0.7]).unwrap();
        assert!(t.cost.abs() < 1e-12);
    }

    #[test]
    fn transport_single_source() {
        let cost: Vec<Vec<f64>> = vec![vec![1.0, 2.0, 4.0]];
        let t = transport_lp(&cost, &[1.0], &[0.2, 0.3, 0.5]).unwrap();
        assert!((t.cost - (0.2 + 0.6 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn transport_mass_mismatch() {
        let cost: Vec<Vec<f64>> = vec![vec![1.0]];
        assert!(matches!(
            transport_lp(&cost, &[1.0], &[0.5]),
            Err(TransportError::MassMismatch { .. })
        ));
    }

    #[test]
    fn single_precision_solves() {
        let mut lp = LinearProgram::<f32>::new();
        let x = lp.add_var(1.0);
        let y = lp.add_var(1.0);
        lp.add_row(&[(x, 1.0), (y, 2.0)], Relation::Le, 4.0);
        lp.add_row(&[(x, 3.0), (y, 1.0)], Relation::Le, 6.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 2.8).abs() < 1e-5);
    }
}
