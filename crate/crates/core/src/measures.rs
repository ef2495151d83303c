//! Finite-support probability measures on the simplex of beliefs.

use crate::game::StackedMixed;
use crate::scalar::{l1_dist, Scalar};
use crate::zerosum::{
    feasibility, transport_lp, Feasibility, LinearProgram, LpError, Relation, TransportError,
};
use serde::{Deserialize, Serialize};
use std::ops::Deref;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("belief has a negative entry or does not sum to one (sum {sum})")]
    NotInSimplex { sum: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("measure has no mass")]
    Empty,
    #[error("components average to a point at l1 distance {0} from the target belief")]
    BarycenterMismatch(f64),
    #[error("the first measure does not dominate the second")]
    NotDominating,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// A point of the simplex over states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief<T>(Vec<T>);

impl<T: Scalar> Belief<T> {
    /// Validates simplex membership with the structural tolerance.
    pub fn new(p: Vec<T>) -> Result<Self, MeasureError> {
        let tol = T::tolerances().structural;
        let sum: T = p.iter().copied().sum();
        if p.iter().any(|&x| x < -tol || !x.is_finite()) || (sum - T::one()).abs() > tol {
            return Err(MeasureError::NotInSimplex {
                sum: sum.to_f64_lossy(),
            });
        }
        Ok(Self(p))
    }

    /// Clamps negatives to zero and renormalises; for numerically produced points.
    pub fn normalized(mut p: Vec<T>) -> Self {
        for x in p.iter_mut() {
            *x = x.max(T::zero());
        }
        let s: T = p.iter().copied().sum();
        if s > T::zero() {
            for x in p.iter_mut() {
                *x = *x / s;
            }
        }
        Self(p)
    }

    pub fn vertex(k: usize, dim: usize) -> Self {
        let mut p = vec![T::zero(); dim];
        p[k] = T::one();
        Self(p)
    }

    pub fn uniform(dim: usize) -> Self {
        Self(vec![T::one() / T::from_usize(dim).unwrap(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn dist(&self, other: &Self) -> T {
        l1_dist(&self.0, &other.0)
    }
}

impl<T> Deref for Belief<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub atom: Belief<T>,
    pub weight: T,
}

/// Finitely supported probability on beliefs with merged atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefMeasure<T> {
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> BeliefMeasure<T> {
    /// Builds a measure, merging atoms closer than the structural tolerance
    /// and dropping zero weights. Weights are renormalised.
    pub fn new(items: Vec<(Belief<T>, T)>) -> Result<Self, MeasureError> {
        let tol = T::tolerances().structural;
        let mut atoms: Vec<Atom<T>> = Vec::new();
        let dim = items.first().map(|(b, _)| b.dim()).ok_or(MeasureError::Empty)?;
        for (b, w) in items {
            if b.dim() != dim {
                return Err(MeasureError::Dimension(b.dim(), dim));
            }
            if w < -tol {
                return Err(MeasureError::NotInSimplex {
                    sum: w.to_f64_lossy(),
                });
            }
            if w <= T::zero() {
                continue;
            }
            match atoms.iter_mut().find(|a| a.atom.dist(&b) <= tol) {
                Some(a) => a.weight = a.weight + w,
                None => atoms.push(Atom { atom: b, weight: w }),
            }
        }
        let total: T = atoms.iter().map(|a| a.weight).sum();
        if atoms.is_empty() || total <= T::zero() {
            return Err(MeasureError::Empty);
        }
        if (total - T::one()).abs() > T::tolerances().feasibility {
            return Err(MeasureError::NotInSimplex {
                sum: total.to_f64_lossy(),
            });
        }
        for a in atoms.iter_mut() {
            a.weight = a.weight / total;
        }
        Ok(Self { atoms })
    }

    pub fn dirac(p: Belief<T>) -> Self {
        Self {
            atoms: vec![Atom {
                atom: p,
                weight: T::one(),
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].atom.dim()
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, mut f: impl FnMut(&Belief<T>) -> T) -> T {
        self.atoms.iter().map(|a| a.weight * f(&a.atom)).sum()
    }

    /// Convex combination `sum_s lambda_s u_s`.
    pub fn mixture(parts: &[(T, &BeliefMeasure<T>)]) -> Result<Self, MeasureError> {
        let items = parts
            .iter()
            .flat_map(|(l, u)| u.atoms.iter().map(move |a| (a.atom.clone(), *l * a.weight)))
            .collect();
        Self::new(items)
    }
}

/// Disintegration of a joint table over states x public signals (rows are
/// states): the law of the posterior given the signal.
pub fn disintegrate<T: Scalar>(joint: &[Vec<T>]) -> BeliefMeasure<T> {
    let k = joint.len();
    let dcount = joint.first().map_or(0, |r| r.len());
    let mut items = Vec::new();
    for d in 0..dcount {
        let col: Vec<T> = (0..k).map(|s| joint[s][d].max(T::zero())).collect();
        let mass: T = col.iter().copied().sum();
        if mass > T::zero() {
            items.push((Belief::normalized(col), mass));
        }
    }
    BeliefMeasure::new(items).expect("joint table has no mass")
}

pub fn barycenter<T: Scalar>(u: &BeliefMeasure<T>) -> Belief<T> {
    let mut p = vec![T::zero(); u.dim()];
    for a in u.atoms() {
        for (x, &y) in p.iter_mut().zip(a.atom.iter()) {
            *x = *x + a.weight * y;
        }
    }
    Belief(p)
}

/// Wasserstein-1 distance for the l1 ground metric, with an optimal plan
/// indexed by the atoms of `u` and `v`.
pub fn wasserstein<T: Scalar>(
    u: &BeliefMeasure<T>,
    v: &BeliefMeasure<T>,
) -> Result<(T, Vec<Vec<T>>), MeasureError> {
    let cost: Vec<Vec<T>> = u
        .atoms()
        .iter()
        .map(|a| v.atoms().iter().map(|b| a.atom.dist(&b.atom)).collect())
        .collect();
    let su: Vec<T> = u.atoms().iter().map(|a| a.weight).collect();
    let sv: Vec<T> = v.atoms().iter().map(|a| a.weight).collect();
    let t = transport_lp(&cost, &su, &sv)?;
    Ok((t.cost.max(T::zero()), t.plan))
}

/// One affine piece `constant + gradient . p`.
#[derive(Clone, Debug, Serialize)]
pub struct AffinePiece<T> {
    pub constant: T,
    pub gradient: Vec<T>,
}

/// Evidence for or against `u` sweeping `v`.
#[derive(Clone, Debug, Serialize)]
pub enum ChoquetCertificate<T> {
    /// `coupling[p][q]` over atoms of `u` and `v`.
    Coupling(Vec<Vec<T>>),
    /// Concave `f = min over pieces` with `u(f) < v(f)`.
    Separator {
        pieces: Vec<AffinePiece<T>>,
        u_value: T,
        v_value: T,
    },
}

impl<T: Scalar> ChoquetCertificate<T> {
    /// Largest deviation of a coupling from its marginal and martingale
    /// constraints; `None` for a separator.
    pub fn coupling_residual(&self, u: &BeliefMeasure<T>, v: &BeliefMeasure<T>) -> Option<T> {
        let ChoquetCertificate::Coupling(x) = self else {
            return None;
        };
        let mut worst = T::zero();
        for (pi, a) in u.atoms().iter().enumerate() {
            let row: T = x[pi].iter().copied().sum();
            worst = worst.max((row - a.weight).abs());
            let mut bar = vec![T::zero(); u.dim()];
            for (qi, b) in v.atoms().iter().enumerate() {
                for (s, &bq) in bar.iter_mut().zip(b.atom.iter()) {
                    *s = *s + x[pi][qi] * bq;
                }
            }
            let target: Vec<T> = a.atom.iter().map(|&pk| a.weight * pk).collect();
            worst = worst.max(l1_dist(&bar, &target));
        }
        for (qi, b) in v.atoms().iter().enumerate() {
            let col: T = x.iter().map(|r| r[qi]).sum();
            worst = worst.max((col - b.weight).abs());
        }
        Some(worst)
    }
}

pub fn eval_concave<T: Scalar>(pieces: &[AffinePiece<T>], p: &[T]) -> T {
    pieces
        .iter()
        .map(|a| a.constant + crate::scalar::dot(&a.gradient, p))
        .fold(T::infinity(), T::min)
}

/// Tests whether `u` is better than `v` in the sweeping order, i.e. whether
/// a martingale coupling from `u` to `v` exists.
pub fn choquet_dominates<T: Scalar>(
    u: &BeliefMeasure<T>,
    v: &BeliefMeasure<T>,
) -> Result<(bool, ChoquetCertificate<T>), MeasureError> {
    if u.dim() != v.dim() {
        return Err(MeasureError::Dimension(u.dim(), v.dim()));
    }
    let (np, nq, k) = (u.len(), v.len(), u.dim());
    let mut lp = LinearProgram::new();
    let x: Vec<Vec<usize>> = (0..np)
        .map(|_| (0..nq).map(|_| lp.add_var(T::zero())).collect())
        .collect();
    let mut row_ids = Vec::new();
    for (pi, a) in u.atoms().iter().enumerate() {
        let coeffs: Vec<(usize, T)> = x[pi].iter().map(|&j| (j, T::one())).collect();
        row_ids.push(lp.add_row(&coeffs, Relation::Eq, a.weight));
    }
    let mut col_ids = Vec::new();
    for (qi, b) in v.atoms().iter().enumerate() {
        let coeffs: Vec<(usize, T)> = (0..np).map(|pi| (x[pi][qi], T::one())).collect();
        col_ids.push(lp.add_row(&coeffs, Relation::Eq, b.weight));
    }
    let mut mart_ids = vec![Vec::new(); np];
    for (pi, a) in u.atoms().iter().enumerate() {
        for s in 0..k {
            let coeffs: Vec<(usize, T)> = v
                .atoms()
                .iter()
                .enumerate()
                .map(|(qi, b)| (x[pi][qi], b.atom[s]))
                .collect();
            mart_ids[pi].push(lp.add_row(&coeffs, Relation::Eq, a.weight * a.atom[s]));
        }
    }
    match feasibility(&lp)? {
        Feasibility::Feasible(sol) => {
            let coupling = x
                .iter()
                .map(|r| r.iter().map(|&j| sol[j].max(T::zero())).collect())
                .collect();
            Ok((true, ChoquetCertificate::Coupling(coupling)))
        }
        Feasibility::Infeasible(y) => {
            let pieces: Vec<AffinePiece<T>> = (0..np)
                .map(|pi| AffinePiece {
                    constant: y[row_ids[pi]],
                    gradient: mart_ids[pi].iter().map(|&r| y[r]).collect(),
                })
                .collect();
            let u_value = u.integrate(|p| eval_concave(&pieces, p));
            let v_value = v.integrate(|q| eval_concave(&pieces, q));
            Ok((
                false,
                ChoquetCertificate::Separator {
                    pieces,
                    u_value,
                    v_value,
                },
            ))
        }
    }
}

/// Splitting of an atom of `u` into points of `v`.
#[derive(Clone, Debug, Serialize)]
pub struct AtomSplit<T> {
    pub atom: Belief<T>,
    pub weight: T,
    /// `(lambda_s, q_s)` with `sum lambda_s q_s = atom`.
    pub parts: Vec<(T, Belief<T>)>,
}

/// Rewrites a dominance coupling as one splitting per atom of `u`.
pub fn split_decomposition<T: Scalar>(
    u: &BeliefMeasure<T>,
    v: &BeliefMeasure<T>,
) -> Result<Vec<AtomSplit<T>>, MeasureError> {
    let (ok, cert) = choquet_dominates(u, v)?;
    let ChoquetCertificate::Coupling(x) = cert else {
        return Err(MeasureError::NotDominating);
    };
    if !ok {
        return Err(MeasureError::NotDominating);
    }
    let tol = T::tolerances().structural;
    Ok(u
        .atoms()
        .iter()
        .enumerate()
        .map(|(pi, a)| AtomSplit {
            atom: a.atom.clone(),
            weight: a.weight,
            parts: v
                .atoms()
                .iter()
                .enumerate()
                .filter(|(qi, _)| x[pi][*qi] > tol)
                .map(|(qi, b)| (x[pi][qi] / a.weight, b.atom.clone()))
                .collect(),
        })
        .collect())
}

/// The Aumann-Maschler splitting: one stacked action at `p` whose induced
/// signal law and payoff are the `lambda`-mixture of `(p_s, a_s)`.
pub fn splitting_action<T: Scalar>(
    p: &Belief<T>,
    components: &[(T, Belief<T>)],
    actions: &[StackedMixed<T>],
) -> Result<StackedMixed<T>, MeasureError> {
    assert_eq!(components.len(), actions.len());
    let k = p.dim();
    let mut bar = vec![T::zero(); k];
    for (l, ps) in components {
        if ps.dim() != k {
            return Err(MeasureError::Dimension(ps.dim(), k));
        }
        for (b, &x) in bar.iter_mut().zip(ps.iter()) {
            *b = *b + *l * x;
        }
    }
    let gap = l1_dist(&bar, p);
    if gap > T::tolerances().feasibility {
        return Err(MeasureError::BarycenterMismatch(gap.to_f64_lossy()));
    }
    let ni = actions.first().map_or(0, |a| a.num_actions());
    let uniform = T::one() / T::from_usize(ni).unwrap();
    let rows = (0..k)
        .map(|s| {
            if p[s] <= T::zero() {
                return vec![uniform; ni];
            }
            let mut row = vec![T::zero(); ni];
            for ((l, ps), a) in components.iter().zip(actions) {
                let w = *l * ps[s] / p[s];
                for (r, &x) in row.iter_mut().zip(a.row(s)) {
                    *r = *r + w * x;
                }
            }
            row
        })
        .collect();
    Ok(StackedMixed::from_rows_unchecked(rows))
}
