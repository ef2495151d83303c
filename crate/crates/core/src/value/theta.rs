//! Evaluation weights over stages.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("stage weights must be nonnegative and finite")]
    Negative,
    #[error("stage weights sum to {0}, expected 1")]
    NotNormalised(f64),
    #[error("stage index 0 is not allowed; stages start at 1")]
    ZeroStage,
    #[error("cannot parse stage weights {0:?}; expected t1:w1,t2:w2,...")]
    Parse(String),
}

/// Finitely supported probability on stages `1, 2, ...`; `w[t - 1]` is the
/// weight of stage `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaWeights<T> {
    w: Vec<T>,
}

impl<T: Scalar> ThetaWeights<T> {
    pub fn new(mut w: Vec<T>) -> Result<Self, ThetaError> {
        if w.iter().any(|&x| x < T::zero() || !x.is_finite()) {
            return Err(ThetaError::Negative);
        }
        while w.last().is_some_and(|&x| x == T::zero()) {
            w.pop();
        }
        let s: T = w.iter().copied().sum();
        if (s - T::one()).abs() > T::tolerances().structural * T::lit(16.0) {
            return Err(ThetaError::NotNormalised(s.to_f64_lossy()));
        }
        Ok(Self { w })
    }

    /// Builds weights from `(stage, weight)` pairs, summing duplicates.
    pub fn from_pairs(pairs: &[(usize, T)]) -> Result<Self, ThetaError> {
        let n = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        let mut w = vec![T::zero(); n];
        for &(t, x) in pairs {
            if t == 0 {
                return Err(ThetaError::ZeroStage);
            }
            w[t - 1] = w[t - 1] + x;
        }
        Self::new(w)
    }

    /// Parses `t1:w1,t2:w2,...`; weights are renormalised.
    pub fn parse(s: &str) -> Result<Self, ThetaError> {
        let mut pairs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (t, w) = part
                .split_once(':')
                .ok_or_else(|| ThetaError::Parse(s.to_string()))?;
            let t: usize = t.trim().parse().map_err(|_| ThetaError::Parse(s.to_string()))?;
            let w: f64 = w.trim().parse().map_err(|_| ThetaError::Parse(s.to_string()))?;
            pairs.push((t, T::lit(w)));
        }
        let total: T = pairs.iter().map(|p| p.1).sum();
        if total <= T::zero() {
            return Err(ThetaError::Parse(s.to_string()));
        }
        let pairs: Vec<(usize, T)> = pairs.into_iter().map(|(t, w)| (t, w / total)).collect();
        Self::from_pairs(&pairs)
    }

    pub fn dirac(t: usize) -> Self {
        assert!(t >= 1);
        let mut w = vec![T::zero(); t];
        w[t - 1] = T::one();
        Self { w }
    }

    /// Uniform on `1..=n`.
    pub fn uniform(n: usize) -> Self {
        Self::uniform_range(1, n)
    }

    /// Uniform on `a..=b`.
    pub fn uniform_range(a: usize, b: usize) -> Self {
        assert!(a >= 1 && b >= a);
        let x = T::one() / T::from_usize(b - a + 1).unwrap();
        let mut w = vec![T::zero(); b];
        for v in w.iter_mut().skip(a - 1) {
            *v = x;
        }
        Self { w }
    }

    pub fn weight(&self, t: usize) -> T {
        if t == 0 || t > self.w.len() {
            T::zero()
        } else {
            self.w[t - 1]
        }
    }

    pub fn first(&self) -> T {
        self.weight(1)
    }

    /// Largest stage with positive weight.
    pub fn max_stage(&self) -> usize {
        self.w.len()
    }

    pub fn support_size(&self) -> usize {
        self.w.iter().filter(|&&x| x > T::zero()).count()
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    /// Law of the remaining stages given that stage 1 has passed; equal to
    /// `self` when all mass sits on stage 1.
    pub fn plus(&self) -> Self {
        let t1 = self.first();
        if (T::one() - t1).abs() <= T::tolerances().structural {
            return self.clone();
        }
        let rest = T::one() - t1;
        Self {
            w: self.w.iter().skip(1).map(|&x| x / rest).collect(),
        }
    }

    /// Weights of the game where `m` silent stages precede a stage drawn
    /// uniformly below a `self`-distributed horizon.
    pub fn lift(&self, m: usize) -> Self {
        let n = self.max_stage();
        let mut w = vec![T::zero(); m + n];
        for s in m + 1..=m + n {
            let mut acc = T::zero();
            for t in s - m..=n {
                acc = acc + self.weight(t) / T::from_usize(t).unwrap();
            }
            w[s - 1] = acc;
        }
        Self { w }
    }

    /// Cache key: weights rounded to 1e-12.
    pub fn key(&self) -> Vec<i64> {
        self.w
            .iter()
            .map(|x| (x.to_f64_lossy() * 1e12).round() as i64)
            .collect()
    }

    /// Sequence `self, self+, self++, ...` ending at the first element whose
    /// mass sits entirely on stage 1.
    pub fn suffix_chain(&self) -> Vec<Self> {
        let mut out = vec![self.clone()];
        loop {
            let last = out.last().unwrap();
            if (T::one() - last.first()).abs() <= T::tolerances().structural {
                break;
            }
            let next = last.plus();
            out.push(next);
        }
        out
    }
}

impl<T: Scalar> fmt::Display for ThetaWeights<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .w
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > T::zero())
            .map(|(t, x)| format!("{}:{}", t + 1, x))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// All points of the simplex over `n` stages with coordinates in multiples
/// of `1 / resolution`.
pub fn theta_grid<T: Scalar>(n: usize, resolution: usize) -> Vec<ThetaWeights<T>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec<T: Scalar>(
        pos: usize,
        left: usize,
        cur: &mut Vec<usize>,
        r: usize,
        out: &mut Vec<ThetaWeights<T>>,
    ) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            let w = cur
                .iter()
                .map(|&c| T::from_usize(c).unwrap() / T::from_usize(r).unwrap())
                .collect();
            out.push(ThetaWeights::new(w).expect("grid point is a probability"));
            return;
        }
        for c in 0..=left {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, r, out);
        }
    }
    rec(0, resolution, &mut cur, resolution, &mut out);
    out
}
