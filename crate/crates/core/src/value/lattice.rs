//! Regular lattice on the simplex of beliefs.

use crate::measures::Belief;
use crate::scalar::Scalar;
use std::collections::HashMap;

/// Points `x / n` with `x` a composition of `n` into `k` nonnegative parts.
/// Neighbouring points are `2 / n` apart in l1.
#[derive(Clone, Debug)]
pub struct SimplexGrid<T> {
    pub k: usize,
    pub n: usize,
    points: Vec<Belief<T>>,
    coords: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl<T: Scalar> SimplexGrid<T> {
    pub fn new(k: usize, n: usize) -> Self {
        assert!(k >= 1 && n >= 1);
        let mut coords = Vec::new();
        let mut cur = vec![0u32; k];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if pos + 1 == cur.len() {
                cur[pos] = left;
                out.push(cur.clone());
                return;
            }
            for c in 0..=left {
                cur[pos] = c;
                rec(pos + 1, left - c, cur, out);
            }
        }
        rec(0, n as u32, &mut cur, &mut coords);
        let nf = T::from_usize(n).unwrap();
        let points = coords
            .iter()
            .map(|c| Belief::normalized(c.iter().map(|&x| T::from_u32(x).unwrap() / nf).collect()))
            .collect();
        let index = coords.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Self {
            k,
            n,
            points,
            coords,
            index,
        }
    }

    /// Lattice whose neighbouring points are `delta` apart in l1.
    pub fn from_delta(k: usize, delta: f64) -> Self {
        let n = (2.0 / delta).round().max(1.0) as usize;
        Self::new(k, n)
    }

    /// l1 distance between neighbouring points.
    pub fn delta(&self) -> T {
        T::lit(2.0) / T::from_usize(self.n).unwrap()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, g: usize) -> &Belief<T> {
        &self.points[g]
    }

    pub fn points(&self) -> &[Belief<T>] {
        &self.points
    }

    pub fn coords(&self, g: usize) -> &[u32] {
        &self.coords[g]
    }

    /// Index of `p` if it is a lattice point (to 1e-12).
    pub fn locate(&self, p: &[T]) -> Option<usize> {
        let g = self.nearest(p);
        (crate::scalar::l1_dist(self.points[g].as_ref(), p) <= T::tolerances().structural)
            .then_some(g)
    }

    /// Nearest lattice point by largest-remainder rounding.
    pub fn nearest(&self, p: &[T]) -> usize {
        let nf = T::from_usize(self.n).unwrap();
        let scaled: Vec<T> = p.iter().map(|&x| x.max(T::zero()) * nf).collect();
        let mut c: Vec<u32> = scaled.iter().map(|x| x.floor().to_u32().unwrap_or(0)).collect();
        let total: u32 = c.iter().sum();
        let mut rem: Vec<(usize, T)> = scaled
            .iter()
            .enumerate()
            .map(|(i, &x)| (i, x - x.floor()))
            .collect();
        rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let n = self.n as u32;
        if total < n {
            for &(i, _) in rem.iter().take((n - total) as usize) {
                c[i] += 1;
            }
        } else if total > n {
            let mut extra = total - n;
            for &(i, _) in rem.iter().rev() {
                if extra == 0 {
                    break;
                }
                if c[i] > 0 {
                    c[i] -= 1;
                    extra -= 1;
                }
            }
        }
        self.index[&c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_spacing() {
        let g = SimplexGrid::<f64>::new(3, 4);
        assert_eq!(g.len(), 15);
        let g2 = SimplexGrid::<f64>::from_delta(2, 1.0 / 64.0);
        assert_eq!(g2.n, 128);
        assert_eq!(g2.len(), 129);
        assert!((g2.point(1).dist(g2.point(0)) - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(SimplexGrid::<f64>::new(1, 7).len(), 1);
    }

    #[test]
    fn two_state_points_are_ordered() {
        let g = SimplexGrid::<f64>::new(2, 8);
        for i in 1..g.len() {
            assert!(g.point(i)[0] > g.point(i - 1)[0]);
        }
    }

    #[test]
    fn locate_and_nearest() {
        let g = SimplexGrid::<f64>::new(3, 4);
        let p = [0.25, 0.5, 0.25];
        let i = g.locate(&p).unwrap();
        assert_eq!(g.point(i).as_ref(), &p);
        assert!(g.locate(&[0.3, 0.4, 0.3]).is_none());
        let j = g.nearest(&[0.3, 0.45, 0.25]);
        assert_eq!(g.coords(j), &[1, 2, 1]);
    }
}
