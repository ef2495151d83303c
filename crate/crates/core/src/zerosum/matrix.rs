//! Values of finite two-person zero-sum matrix games.

use super::lp::{solve_lp, LinearProgram, LpError, LpStatus, Relation};
use crate::scalar::Scalar;
use serde::Serialize;

/// Minimax value with optimal mixed strategies; the row player maximises.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixGameSolution<T> {
    pub value: T,
    pub row_strategy: Vec<T>,
    pub col_strategy: Vec<T>,
}

impl<T: Scalar> MatrixGameSolution<T> {
    /// `min_j x'M_j - value` and `value - max_i M_i y`, both should be near zero or positive.
    pub fn certificate_slack(&self, m: &[Vec<T>]) -> (T, T) {
        let cols = m.first().map_or(0, |r| r.len());
        let row_guar = (0..cols)
            .map(|j| {
                m.iter()
                    .zip(&self.row_strategy)
                    .map(|(r, &x)| x * r[j])
                    .sum::<T>()
            })
            .fold(T::infinity(), T::min);
        let col_guar = m
            .iter()
            .map(|r| crate::scalar::dot(r, &self.col_strategy))
            .fold(T::neg_infinity(), T::max);
        (row_guar - self.value, self.value - col_guar)
    }
}

/// Solves the matrix game `m` (rows are player 1's pure actions).
pub fn matrix_game_value<T: Scalar>(m: &[Vec<T>]) -> Result<MatrixGameSolution<T>, LpError> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    assert!(rows > 0 && cols > 0, "empty matrix");
    let mut lp = LinearProgram::new();
    let x: Vec<usize> = (0..rows).map(|_| lp.add_var(T::zero())).collect();
    let v = lp.add_free_var(T::one());
    let mut col_rows = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut coeffs: Vec<(usize, T)> = (0..rows).map(|i| (x[i], m[i][j])).collect();
        coeffs.push((v, -T::one()));
        col_rows.push(lp.add_row(&coeffs, Relation::Ge, T::zero()));
    }
    let ones: Vec<(usize, T)> = x.iter().map(|&xi| (xi, T::one())).collect();
    lp.add_row(&ones, Relation::Eq, T::one());
    let sol = solve_lp(&lp)?;
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    let row_strategy = normalise(x.iter().map(|&i| sol.primal[i]).collect());
    let col_strategy = normalise(col_rows.iter().map(|&r| -sol.dual[r]).collect());
    Ok(MatrixGameSolution {
        value: sol.primal[v],
        row_strategy,
        col_strategy,
    })
}

fn normalise<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    for x in v.iter_mut() {
        *x = x.max(T::zero());
    }
    let s: T = v.iter().copied().sum();
    if s > T::zero() {
        for x in v.iter_mut() {
            *x = *x / s;
        }
    } else {
        let u = T::one() / T::from_usize(v.len()).unwrap();
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matrix() {
        let s = matrix_game_value::<f64>(&[vec![0.7]]).unwrap();
        assert!((s.value - 0.7).abs() < 1e-12);
    }

    #[test]
    fn identity_two_by_two() {
        let s = matrix_game_value::<f64>(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        for p in s.row_strategy.iter().chain(&s.col_strategy) {
            assert!((p - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_information_matrix_at_half() {
        // (ad - bc) / (a + d - b - c) with a = d = 1/2.
        let s = matrix_game_value::<f64>(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((s.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn saddle_point() {
        let m: Vec<Vec<f64>> = vec![vec![3.0, 1.0, 4.0], vec![2.0, 0.0, 1.0]];
        let s = matrix_game_value(&m).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let (a, b) = s.certificate_slack(&m);
        assert!(a > -1e-9 && b > -1e-9);
    }
}
