//! Finite-window estimate of the uniform value from `v_{m,n}` and `w_{m,n}`.

use super::engine::{Interval, ValueEngine, ValueError};
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct UniformConfig {
    pub max_m: usize,
    pub max_n: usize,
    /// Largest `n` for which `w_{m,n}` is tabulated; 0 skips the table.
    pub w_max_n: usize,
    /// Lattice resolution on stage weights for `w_{m,n}`.
    pub theta_resolution: usize,
}

impl UniformConfig {
    pub fn new(max_m: usize, max_n: usize) -> Self {
        Self {
            max_m,
            max_n,
            w_max_n: max_n.min(4),
            theta_resolution: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow<T> {
    pub m: usize,
    pub n: usize,
    pub lower: T,
    pub upper: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformReport<T> {
    pub config: UniformConfig,
    pub delta: T,
    pub v_table: Vec<TableRow<T>>,
    pub w_table: Vec<TableRow<T>>,
    /// `min_n max_m v_{m,n}` over the window, lower and upper bound.
    pub infsup: Interval<T>,
    /// `max_m min_n v_{m,n}` over the window.
    pub supinf: Interval<T>,
    /// `min_n max_m w_{m,n}` over the tabulated part of the window.
    pub w_infsup: Option<Interval<T>>,
    /// Largest gap between bounds in the `v` table.
    pub slack: T,
    /// Horizon attaining `infsup.upper`.
    pub argmin_n: usize,
    /// The minimising horizon sits on the edge of the window.
    pub n_at_boundary: bool,
    /// Some inner maximum over `m` sits on the edge of the window.
    pub m_at_boundary: bool,
}

impl<T: Scalar> UniformReport<T> {
    /// The estimate: `infsup` widened by nothing; both ends bound the
    /// window-truncated quantity.
    pub fn estimate(&self) -> Interval<T> {
        self.infsup
    }

    pub fn v(&self, m: usize, n: usize) -> Option<&TableRow<T>> {
        self.v_table.iter().find(|r| r.m == m && r.n == n)
    }

    pub fn w(&self, m: usize, n: usize) -> Option<&TableRow<T>> {
        self.w_table.iter().find(|r| r.m == m && r.n == n)
    }

    /// `m, n, lower, upper` rows for both tables.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("table,m,n,lower,upper\n");
        for (name, t) in [("v", &self.v_table), ("w", &self.w_table)] {
            for r in t {
                s.push_str(&format!("{name},{},{},{},{}\n", r.m, r.n, r.lower, r.upper));
            }
        }
        s
    }
}

/// Tabulates `v_{m,n}` for `0 <= m <= M`, `1 <= n <= N` at the initial law
/// and summarises the inf-sup and sup-inf over the window.
pub fn uniform_value_estimate<T: Scalar>(
    engine: &ValueEngine<T>,
    config: &UniformConfig,
) -> Result<UniformReport<T>, ValueError> {
    if config.max_n == 0 {
        return Err(ValueError::EmptyHorizon);
    }
    let u = engine.initial_measure().clone();
    let (mm, nn) = (config.max_m, config.max_n);
    let mut v = vec![vec![Interval { lower: T::zero(), upper: T::zero() }; nn + 1]; mm + 1];
    let mut v_table = Vec::new();
    for n in 1..=nn {
        for m in 0..=mm {
            let iv = engine.value_on(&super::ThetaWeights::uniform_range(m + 1, m + n), &u)?;
            v[m][n] = iv;
            v_table.push(TableRow { m, n, lower: iv.lower, upper: iv.upper });
        }
    }
    let slack = v_table.iter().map(|r| r.upper - r.lower).fold(T::zero(), T::max);

    let mut infsup = Interval { lower: T::infinity(), upper: T::infinity() };
    let mut argmin_n = 1;
    let mut m_at_boundary = false;
    for n in 1..=nn {
        let (mut lo, mut hi, mut arg) = (T::neg_infinity(), T::neg_infinity(), 0);
        for (m, row) in v.iter().enumerate() {
            lo = lo.max(row[n].lower);
            if row[n].upper > hi {
                hi = row[n].upper;
                arg = m;
            }
        }
        infsup.lower = infsup.lower.min(lo);
        if hi < infsup.upper {
            infsup.upper = hi;
            argmin_n = n;
            m_at_boundary = arg == mm && mm > 0;
        }
    }
    let mut supinf = Interval { lower: T::neg_infinity(), upper: T::neg_infinity() };
    for row in &v {
        let lo = (1..=nn).map(|n| row[n].lower).fold(T::infinity(), T::min);
        let hi = (1..=nn).map(|n| row[n].upper).fold(T::infinity(), T::min);
        supinf.lower = supinf.lower.max(lo);
        supinf.upper = supinf.upper.max(hi);
    }

    let mut w_table = Vec::new();
    let wn = config.w_max_n.min(nn);
    let mut w_infsup = None;
    if wn > 0 {
        let mut best = Interval { lower: T::infinity(), upper: T::infinity() };
        for n in 1..=wn {
            let (mut lo, mut hi) = (T::neg_infinity(), T::neg_infinity());
            for m in 0..=mm {
                let w = engine.w_mn(m, n, &u, config.theta_resolution, wn)?;
                lo = lo.max(w.lower);
                hi = hi.max(w.upper);
                w_table.push(TableRow { m, n, lower: w.lower, upper: w.upper });
            }
            best.lower = best.lower.min(lo);
            best.upper = best.upper.min(hi);
        }
        w_infsup = Some(best);
    }

    Ok(UniformReport {
        config: config.clone(),
        delta: engine.delta(),
        v_table,
        w_table,
        infsup,
        supinf,
        w_infsup,
        slack,
        argmin_n,
        n_at_boundary: argmin_n == nn,
        m_at_boundary,
    })
}
