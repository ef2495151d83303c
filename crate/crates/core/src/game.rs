//! Finite repeated games with an informed controller, their structural
//! hypotheses, and the derived belief-space primitives.

use crate::measures::{disintegrate, Belief, BeliefMeasure};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid JSON game spec: {0}")]
    Json(String),
    #[error("{table}: unknown {kind} label {label:?}")]
    UnknownLabel {
        table: String,
        kind: &'static str,
        label: String,
    },
    #[error("malformed table key {0:?}; expected \"k|i|j\"")]
    BadKey(String),
    #[error("{table}: missing entry for {key}")]
    Missing { table: &'static str, key: String },
    #[error("{table}: probabilities sum to {sum}, expected 1")]
    NotStochastic { table: String, sum: f64 },
    #[error("{table}: negative or non-finite probability {value}")]
    Negative { table: String, value: f64 },
    #[error("payoff {key} = {value} lies outside [0, 1]")]
    PayoffRange { key: String, value: f64 },
    #[error("label set {0} is empty")]
    Empty(&'static str),
    #[error("hypothesis {name} fails (max violation {violation:e})")]
    Hypothesis { name: &'static str, violation: f64 },
    #[error("no signal of player 1 is compatible with state {k} and public signal {d}")]
    NoCanonicalSignal { k: usize, d: usize },
    #[error("kernel row for state {k}, action {i} is not a probability (sum {sum})")]
    Kernel { k: usize, i: usize, sum: f64 },
    #[error("payoff matrices must be nonempty and share one shape")]
    MatrixShape,
    #[error("belief of dimension {got} for a game with {want} states")]
    BeliefDim { got: usize, want: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome<T> {
    pub k: usize,
    pub c: usize,
    pub d: usize,
    pub prob: T,
}

/// Affine map `x -> scale * x + offset` applied to raw payoffs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffTransform<T> {
    pub scale: T,
    pub offset: T,
}

impl<T: Scalar> PayoffTransform<T> {
    pub fn apply(&self, x: T) -> T {
        self.scale * x + self.offset
    }

    /// Maps a normalised value back to the raw payoff scale.
    pub fn invert(&self, v: T) -> T {
        (v - self.offset) / self.scale
    }
}

/// The repeated game `(K, I, J, C, D, pi, g, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RepeatedGameSpec<T> {
    pub states: Vec<String>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
    pub signals1: Vec<String>,
    pub signals2: Vec<String>,
    pub initial: Vec<Outcome<T>>,
    payoff: Vec<T>,
    transition: Vec<Vec<Outcome<T>>>,
    pub payoff_transform: Option<PayoffTransform<T>>,
}

/// One mixed action over `I` per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StackedMixed<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> StackedMixed<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, GameError> {
        let tol = T::tolerances().structural;
        for (k, r) in rows.iter().enumerate() {
            let s: T = r.iter().copied().sum();
            if r.iter().any(|&x| x < -tol || !x.is_finite()) || (s - T::one()).abs() > tol {
                return Err(GameError::NotStochastic {
                    table: format!("stacked action row {k}"),
                    sum: s.to_f64_lossy(),
                });
            }
        }
        Ok(Self { rows })
    }

    /// Clamps and renormalises each row; empty rows become uniform.
    pub fn normalized(rows: Vec<Vec<T>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.iter_mut().for_each(|x| *x = x.max(T::zero()));
                let s: T = r.iter().copied().sum();
                if s > T::zero() {
                    r.iter_mut().for_each(|x| *x = *x / s);
                } else {
                    let u = T::one() / T::from_usize(r.len()).unwrap();
                    r.iter_mut().for_each(|x| *x = u);
                }
                r
            })
            .collect();
        Self { rows }
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<T>>) -> Self {
        Self { rows }
    }

    pub fn uniform(k: usize, i: usize) -> Self {
        let u = T::one() / T::from_usize(i).unwrap();
        Self {
            rows: vec![vec![u; i]; k],
        }
    }

    /// Same mixed action in every state.
    pub fn constant(k: usize, row: Vec<T>) -> Self {
        Self {
            rows: vec![row; k],
        }
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.rows[k]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_actions(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn max_row_error(&self) -> T {
        self.rows
            .iter()
            .map(|r| {
                let s: T = r.iter().copied().sum();
                let neg = r.iter().fold(T::zero(), |m, &x| m.max(-x));
                (s - T::one()).abs().max(neg)
            })
            .fold(T::zero(), T::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness<T> {
    /// Signal maps `khat`, `dhat` on reachable signals.
    InformedPlayer {
        khat: Vec<Option<usize>>,
        dhat: Vec<Option<usize>>,
        unconstrained: Vec<usize>,
        offending_signal: Option<usize>,
    },
    /// Common marginal table indexed `[k][i][k'][d]`, or the offending pair.
    Marginal {
        qbar: Option<Vec<Vec<Vec<Vec<T>>>>>,
        offending: Option<(usize, usize, usize, usize)>,
    },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport<T> {
    pub name: &'static str,
    pub holds: bool,
    pub max_violation: T,
    pub witness: Witness<T>,
}

impl<T: Scalar> HypothesisReport<T> {
    fn from_violation(name: &'static str, max_violation: T, witness: Witness<T>) -> Self {
        Self {
            name,
            holds: max_violation <= T::tolerances().structural,
            max_violation,
            witness,
        }
    }
}

fn idx3(k: usize, i: usize, j: usize, ni: usize, nj: usize) -> usize {
    (k * ni + i) * nj + j
}

impl<T: Scalar> RepeatedGameSpec<T> {
    /// Assembles and validates a spec from dense tables indexed `[k][i][j]`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_tables(
        states: Vec<String>,
        actions1: Vec<String>,
        actions2: Vec<String>,
        signals1: Vec<String>,
        signals2: Vec<String>,
        initial: Vec<Outcome<T>>,
        payoff: Vec<Vec<Vec<T>>>,
        transition: Vec<Vec<Vec<Vec<Outcome<T>>>>>,
    ) -> Result<Self, GameError> {
        let spec = Self {
            initial,
            payoff: payoff.into_iter().flatten().flatten().collect(),
            transition: transition.into_iter().flatten().flatten().collect(),
            states,
            actions1,
            actions2,
            signals1,
            signals2,
            payoff_transform: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
    pub fn num_actions1(&self) -> usize {
        self.actions1.len()
    }
    pub fn num_actions2(&self) -> usize {
        self.actions2.len()
    }
    pub fn num_signals1(&self) -> usize {
        self.signals1.len()
    }
    pub fn num_signals2(&self) -> usize {
        self.signals2.len()
    }

    pub fn payoff(&self, k: usize, i: usize, j: usize) -> T {
        self.payoff[idx3(k, i, j, self.num_actions1(), self.num_actions2())]
    }

    pub fn transition(&self, k: usize, i: usize, j: usize) -> &[Outcome<T>] {
        &self.transition[idx3(k, i, j, self.num_actions1(), self.num_actions2())]
    }

    pub fn transition_mut(&mut self, k: usize, i: usize, j: usize) -> &mut Vec<Outcome<T>> {
        let x = idx3(k, i, j, self.num_actions1(), self.num_actions2());
        &mut self.transition[x]
    }

    pub fn set_payoff(&mut self, k: usize, i: usize, j: usize, v: T) {
        let x = idx3(k, i, j, self.num_actions1(), self.num_actions2());
        self.payoff[x] = v;
    }

    fn key(&self, k: usize, i: usize, j: usize) -> String {
        format!("{}|{}|{}", self.states[k], self.actions1[i], self.actions2[j])
    }

    /// Checks table shapes, stochasticity (1e-9) and the payoff range.
    pub fn validate(&self) -> Result<(), GameError> {
        for (name, set) in [
            ("states", &self.states),
            ("actions1", &self.actions1),
            ("actions2", &self.actions2),
            ("signals1", &self.signals1),
            ("signals2", &self.signals2),
        ] {
            if set.is_empty() {
                return Err(GameError::Empty(name));
            }
        }
        let (nk, ni, nj) = (self.num_states(), self.num_actions1(), self.num_actions2());
        if self.payoff.len() != nk * ni * nj || self.transition.len() != nk * ni * nj {
            return Err(GameError::Missing {
                table: "payoff/transition",
                key: format!("expected {} entries", nk * ni * nj),
            });
        }
        let tol = T::tolerances().feasibility;
        let check = |table: String, list: &[Outcome<T>]| -> Result<(), GameError> {
            let mut sum = T::zero();
            for o in list {
                if o.k >= nk || o.c >= self.num_signals1() || o.d >= self.num_signals2() {
                    return Err(GameError::UnknownLabel {
                        table,
                        kind: "outcome",
                        label: format!("{}/{}/{}", o.k, o.c, o.d),
                    });
                }
                if o.prob < T::zero() || !o.prob.is_finite() {
                    return Err(GameError::Negative {
                        table,
                        value: o.prob.to_f64_lossy(),
                    });
                }
                sum = sum + o.prob;
            }
            if (sum - T::one()).abs() > tol {
                return Err(GameError::NotStochastic {
                    table,
                    sum: sum.to_f64_lossy(),
                });
            }
            Ok(())
        };
        check("initial".into(), &self.initial)?;
        for k in 0..nk {
            for i in 0..ni {
                for j in 0..nj {
                    check(
                        format!("transition {}", self.key(k, i, j)),
                        self.transition(k, i, j),
                    )?;
                    let g = self.payoff(k, i, j);
                    if !(g >= -tol && g <= T::one() + tol) {
                        return Err(GameError::PayoffRange {
                            key: self.key(k, i, j),
                            value: g.to_f64_lossy(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn all_tables(&self) -> impl Iterator<Item = &[Outcome<T>]> {
        std::iter::once(self.initial.as_slice())
            .chain(self.transition.iter().map(|v| v.as_slice()))
    }

    /// Player 1 deduces the state and player 2's signal from his own signal.
    pub fn validate_ha_prime(&self) -> HypothesisReport<T> {
        let (nc, nk, nd) = (self.num_signals1(), self.num_states(), self.num_signals2());
        let mut mass = vec![vec![T::zero(); nk * nd]; nc];
        for table in self.all_tables() {
            for o in table {
                if o.prob > T::zero() {
                    mass[o.c][o.k * nd + o.d] = mass[o.c][o.k * nd + o.d] + o.prob;
                }
            }
        }
        let mut khat = vec![None; nc];
        let mut dhat = vec![None; nc];
        let mut unconstrained = Vec::new();
        for c in 0..nc {
            let mut best: Option<(usize, T)> = None;
            for (idx, &m) in mass[c].iter().enumerate() {
                if m > T::zero() && best.map_or(true, |(_, bm)| m > bm) {
                    best = Some((idx, m));
                }
            }
            match best {
                Some((idx, _)) => {
                    khat[c] = Some(idx / nd);
                    dhat[c] = Some(idx % nd);
                }
                None => unconstrained.push(c),
            }
        }
        let mut worst = T::zero();
        let mut offending = None;
        for table in self.all_tables() {
            let mut per_signal = vec![T::zero(); nc];
            for o in table {
                if o.prob > T::zero() && (khat[o.c] != Some(o.k) || dhat[o.c] != Some(o.d)) {
                    per_signal[o.c] = per_signal[o.c] + o.prob;
                }
            }
            let v: T = per_signal.iter().copied().sum();
            if v > worst {
                worst = v;
                offending = per_signal.iter().position(|&m| m > T::zero());
            }
        }
        HypothesisReport::from_violation(
            "HA'",
            worst,
            Witness::InformedPlayer {
                khat,
                dhat,
                unconstrained,
                offending_signal: offending,
            },
        )
    }

    fn marginal_kd(&self, list: &[Outcome<T>]) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.num_signals2()]; self.num_states()];
        for o in list {
            m[o.k][o.d] = m[o.k][o.d] + o.prob;
        }
        m
    }

    /// The state/public-signal marginal of the transition ignores player 2's action.
    pub fn validate_hb_prime(&self) -> HypothesisReport<T> {
        let (nk, ni, nj) = (self.num_states(), self.num_actions1(), self.num_actions2());
        let mut worst = T::zero();
        let mut offending = None;
        let mut qbar = Vec::with_capacity(nk);
        for k in 0..nk {
            let mut row = Vec::with_capacity(ni);
            for i in 0..ni {
                let base = self.marginal_kd(self.transition(k, i, 0));
                for j in 1..nj {
                    let other = self.marginal_kd(self.transition(k, i, j));
                    let diff: T = base
                        .iter()
                        .flatten()
                        .zip(other.iter().flatten())
                        .map(|(&a, &b)| (a - b).abs())
                        .sum();
                    if diff > worst {
                        worst = diff;
                        offending = Some((k, i, 0, j));
                    }
                }
                row.push(base);
            }
            qbar.push(row);
        }
        let holds = worst <= T::tolerances().structural;
        HypothesisReport::from_violation(
            "HB'",
            worst,
            Witness::Marginal {
                qbar: holds.then_some(qbar),
                offending: if holds { None } else { offending },
            },
        )
    }

    /// Informational: player 1's signal also reveals player 2's last action.
    pub fn validate_ha(&self) -> HypothesisReport<T> {
        let ha_prime = self.validate_ha_prime();
        let nc = self.num_signals1();
        let mut seen: Vec<Option<usize>> = vec![None; nc];
        let mut violation = ha_prime.max_violation;
        for k in 0..self.num_states() {
            for i in 0..self.num_actions1() {
                for j in 0..self.num_actions2() {
                    for o in self.transition(k, i, j) {
                        if o.prob <= T::zero() {
                            continue;
                        }
                        match seen[o.c] {
                            None => seen[o.c] = Some(j),
                            Some(j0) if j0 != j => violation = violation.max(o.prob),
                            _ => {}
                        }
                    }
                }
            }
        }
        HypothesisReport::from_violation("HA", violation, Witness::None)
    }

    /// Informational: the whole transition ignores player 2's action.
    pub fn validate_hb(&self) -> HypothesisReport<T> {
        let (nk, ni, nj) = (self.num_states(), self.num_actions1(), self.num_actions2());
        let (nc, nd) = (self.num_signals1(), self.num_signals2());
        let dense = |list: &[Outcome<T>]| {
            let mut v = vec![T::zero(); nk * nc * nd];
            for o in list {
                let x = (o.k * nc + o.c) * nd + o.d;
                v[x] = v[x] + o.prob;
            }
            v
        };
        let mut worst = T::zero();
        for k in 0..nk {
            for i in 0..ni {
                let base = dense(self.transition(k, i, 0));
                for j in 1..nj {
                    let other = dense(self.transition(k, i, j));
                    let diff: T = base.iter().zip(&other).map(|(a, b)| (*a - *b).abs()).sum();
                    worst = worst.max(diff);
                }
            }
        }
        HypothesisReport::from_violation("HB", worst, Witness::None)
    }

    /// Lowest-index signal `c` with `khat(c) = k` and `dhat(c) = d`.
    pub fn canonical_signal(&self, k: usize, d: usize) -> Result<usize, GameError> {
        let rep = self.validate_ha_prime();
        if !rep.holds {
            return Err(GameError::Hypothesis {
                name: "HA'",
                violation: rep.max_violation.to_f64_lossy(),
            });
        }
        let Witness::InformedPlayer { khat, dhat, .. } = rep.witness else {
            unreachable!()
        };
        (0..self.num_signals1())
            .find(|&c| khat[c] == Some(k) && dhat[c] == Some(d))
            .ok_or(GameError::NoCanonicalSignal { k, d })
    }

    /// State/public-signal marginal of the initial law, rows are states.
    pub fn initial_marginal(&self) -> Vec<Vec<T>> {
        self.marginal_kd(&self.initial)
    }

    /// Law of player 2's initial belief.
    pub fn initial_belief_measure(&self) -> BeliefMeasure<T> {
        disintegrate(&self.initial_marginal())
    }

    /// Marginal law of the initial state.
    pub fn initial_state_law(&self) -> Belief<T> {
        Belief::normalized(
            self.initial_marginal()
                .iter()
                .map(|r| r.iter().copied().sum())
                .collect(),
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self, GameError> {
        let file: SpecFile<T> =
            serde_json::from_str(s).map_err(|e| GameError::Json(e.to_string()))?;
        file.into_spec()
    }

    /// Payoff matrices `G^k` when the state never moves, as in the
    /// Aumann-Maschler subclass.
    pub fn fixed_state_matrices(&self) -> Option<Vec<Vec<Vec<T>>>> {
        let (nk, ni, nj) = (self.num_states(), self.num_actions1(), self.num_actions2());
        for k in 0..nk {
            for i in 0..ni {
                for j in 0..nj {
                    if self.transition(k, i, j).iter().any(|o| o.k != k && o.prob > T::zero()) {
                        return None;
                    }
                }
            }
        }
        Some(
            (0..nk)
                .map(|k| (0..ni).map(|i| (0..nj).map(|j| self.payoff(k, i, j)).collect()).collect())
                .collect(),
        )
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let out = |o: &Outcome<T>| OutcomeFile {
            k: Label::Name(self.states[o.k].clone()),
            c: Label::Name(self.signals1[o.c].clone()),
            d: Label::Name(self.signals2[o.d].clone()),
            prob: o.prob,
        };
        let mut payoff = BTreeMap::new();
        let mut transition = BTreeMap::new();
        for k in 0..self.num_states() {
            for i in 0..self.num_actions1() {
                for j in 0..self.num_actions2() {
                    payoff.insert(self.key(k, i, j), self.payoff(k, i, j));
                    transition.insert(
                        self.key(k, i, j),
                        self.transition(k, i, j).iter().map(out).collect(),
                    );
                }
            }
        }
        let file = SpecFile {
            states: self.states.clone(),
            actions1: self.actions1.clone(),
            actions2: self.actions2.clone(),
            signals1: self.signals1.clone(),
            signals2: self.signals2.clone(),
            initial: self.initial.iter().map(out).collect(),
            payoff,
            transition,
            payoff_transform: self.payoff_transform,
        };
        serde_json::to_value(file).expect("spec serialises")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Label {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct OutcomeFile<T> {
    k: Label,
    c: Label,
    d: Label,
    prob: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct SpecFile<T> {
    states: Vec<String>,
    actions1: Vec<String>,
    actions2: Vec<String>,
    signals1: Vec<String>,
    signals2: Vec<String>,
    initial: Vec<OutcomeFile<T>>,
    payoff: BTreeMap<String, T>,
    transition: BTreeMap<String, Vec<OutcomeFile<T>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payoff_transform: Option<PayoffTransform<T>>,
}

fn resolve(table: &str, kind: &'static str, set: &[String], l: &Label) -> Result<usize, GameError> {
    let found = match l {
        Label::Index(i) if *i < set.len() => Some(*i),
        Label::Index(_) => None,
        Label::Name(s) => set.iter().position(|x| x == s),
    };
    found.ok_or_else(|| GameError::UnknownLabel {
        table: table.to_string(),
        kind,
        label: match l {
            Label::Index(i) => i.to_string(),
            Label::Name(s) => s.clone(),
        },
    })
}

impl<T: Scalar> SpecFile<T> {
    fn outcomes(&self, table: &str, list: &[OutcomeFile<T>]) -> Result<Vec<Outcome<T>>, GameError> {
        list.iter()
            .map(|o| {
                Ok(Outcome {
                    k: resolve(table, "state", &self.states, &o.k)?,
                    c: resolve(table, "signal1", &self.signals1, &o.c)?,
                    d: resolve(table, "signal2", &self.signals2, &o.d)?,
                    prob: o.prob,
                })
            })
            .collect()
    }

    fn parse_key(&self, key: &str) -> Result<(usize, usize, usize), GameError> {
        let parts: Vec<&str> = key.split('|').collect();
        if parts.len() != 3 {
            return Err(GameError::BadKey(key.to_string()));
        }
        let find = |set: &[String], s: &str, kind: &'static str| {
            set.iter()
                .position(|x| x == s)
                .or_else(|| s.parse::<usize>().ok().filter(|&i| i < set.len()))
                .ok_or_else(|| GameError::UnknownLabel {
                    table: format!("key {key}"),
                    kind,
                    label: s.to_string(),
                })
        };
        Ok((
            find(&self.states, parts[0], "state")?,
            find(&self.actions1, parts[1], "action1")?,
            find(&self.actions2, parts[2], "action2")?,
        ))
    }

    fn into_spec(self) -> Result<RepeatedGameSpec<T>, GameError> {
        let (nk, ni, nj) = (self.states.len(), self.actions1.len(), self.actions2.len());
        for (name, set) in [
            ("states", &self.states),
            ("actions1", &self.actions1),
            ("actions2", &self.actions2),
            ("signals1", &self.signals1),
            ("signals2", &self.signals2),
        ] {
            if set.is_empty() {
                return Err(GameError::Empty(name));
            }
        }
        let mut payoff = vec![None; nk * ni * nj];
        for (key, &v) in &self.payoff {
            let (k, i, j) = self.parse_key(key)?;
            payoff[idx3(k, i, j, ni, nj)] = Some(v);
        }
        let mut transition = vec![None; nk * ni * nj];
        for (key, list) in &self.transition {
            let (k, i, j) = self.parse_key(key)?;
            transition[idx3(k, i, j, ni, nj)] =
                Some(self.outcomes(&format!("transition {key}"), list)?);
        }
        let name = |x: usize| {
            let k = x / (ni * nj);
            let i = (x / nj) % ni;
            let j = x % nj;
            format!("{}|{}|{}", self.states[k], self.actions1[i], self.actions2[j])
        };
        let payoff = payoff
            .into_iter()
            .enumerate()
            .map(|(x, v)| {
                v.ok_or_else(|| GameError::Missing {
                    table: "payoff",
                    key: name(x),
                })
            })
            .collect::<Result<Vec<T>, _>>()?;
        let transition = transition
            .into_iter()
            .enumerate()
            .map(|(x, v)| {
                v.ok_or_else(|| GameError::Missing {
                    table: "transition",
                    key: name(x),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let initial = self.outcomes("initial", &self.initial)?;
        let spec = RepeatedGameSpec {
            initial,
            payoff,
            transition,
            payoff_transform: self.payoff_transform,
            states: self.states,
            actions1: self.actions1,
            actions2: self.actions2,
            signals1: self.signals1,
            signals2: self.signals2,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Belief-space view of a game satisfying HB': payoffs and the common
/// state/signal marginal `qbar(k, i)`, restricted to public signals that can
/// follow some stage.
#[derive(Clone, Debug)]
pub struct AuxGame<T> {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    /// Indices into the spec's public signals, one per active column.
    pub signals: Vec<usize>,
    g: Vec<T>,
    qbar: Vec<T>,
}

impl<T: Scalar> AuxGame<T> {
    pub fn new(spec: &RepeatedGameSpec<T>) -> Result<Self, GameError> {
        let hb = spec.validate_hb_prime();
        if !hb.holds {
            return Err(GameError::Hypothesis {
                name: "HB'",
                violation: hb.max_violation.to_f64_lossy(),
            });
        }
        let Witness::Marginal { qbar: Some(q), .. } = hb.witness else {
            unreachable!()
        };
        let (nk, ni, nj, nd) = (
            spec.num_states(),
            spec.num_actions1(),
            spec.num_actions2(),
            spec.num_signals2(),
        );
        let signals: Vec<usize> = (0..nd)
            .filter(|&d| {
                q.iter()
                    .flatten()
                    .any(|m| m.iter().any(|row| row[d] > T::zero()))
            })
            .collect();
        let nda = signals.len();
        let mut qbar = vec![T::zero(); nk * ni * nk * nda];
        for k in 0..nk {
            for i in 0..ni {
                for k2 in 0..nk {
                    for (da, &d) in signals.iter().enumerate() {
                        qbar[((k * ni + i) * nk + k2) * nda + da] = q[k][i][k2][d];
                    }
                }
            }
        }
        let mut g = vec![T::zero(); nk * ni * nj];
        for k in 0..nk {
            for i in 0..ni {
                for j in 0..nj {
                    g[idx3(k, i, j, ni, nj)] = spec.payoff(k, i, j);
                }
            }
        }
        Ok(Self {
            k: nk,
            i: ni,
            j: nj,
            signals,
            g,
            qbar,
        })
    }

    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn payoff(&self, k: usize, i: usize, j: usize) -> T {
        self.g[idx3(k, i, j, self.i, self.j)]
    }

    /// `qbar(k, i)(k2, d)` for active signal column `d`.
    pub fn qbar(&self, k: usize, i: usize, k2: usize, d: usize) -> T {
        self.qbar[((k * self.i + i) * self.k + k2) * self.signals.len() + d]
    }

    /// Expected payoff `g(p, a, b)`.
    pub fn stage_payoff(&self, p: &[T], a: &StackedMixed<T>, b: &[T]) -> T {
        crate::scalar::dot(&self.payoff_vector(p, a), b)
    }

    /// Payoff against each pure action of player 2.
    pub fn payoff_vector(&self, p: &[T], a: &StackedMixed<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.j];
        for k in 0..self.k {
            for i in 0..self.i {
                let w = p[k] * a.row(k)[i];
                if w == T::zero() {
                    continue;
                }
                for (j, o) in out.iter_mut().enumerate() {
                    *o = *o + w * self.payoff(k, i, j);
                }
            }
        }
        out
    }

    /// `min_b g(p, a, b)`.
    pub fn guaranteed_payoff(&self, p: &[T], a: &StackedMixed<T>) -> T {
        self.payoff_vector(p, a)
            .into_iter()
            .fold(T::infinity(), T::min)
    }

    /// Joint law of (next state, public signal), rows are states.
    pub fn transition_marginal(&self, p: &[T], a: &StackedMixed<T>) -> Vec<Vec<T>> {
        let nd = self.signals.len();
        let mut out = vec![vec![T::zero(); nd]; self.k];
        for k in 0..self.k {
            for i in 0..self.i {
                let w = p[k] * a.row(k)[i];
                if w == T::zero() {
                    continue;
                }
                for (k2, row) in out.iter_mut().enumerate() {
                    for (d, x) in row.iter_mut().enumerate() {
                        *x = *x + w * self.qbar(k, i, k2, d);
                    }
                }
            }
        }
        out
    }

    /// Law of the next belief.
    pub fn belief_transition(&self, p: &[T], a: &StackedMixed<T>) -> BeliefMeasure<T> {
        disintegrate(&self.transition_marginal(p, a))
    }

    /// Posterior after observing active signal column `d`, if it has mass.
    pub fn posterior(&self, p: &[T], a: &StackedMixed<T>, d: usize) -> Option<Belief<T>> {
        let m = self.transition_marginal(p, a);
        let col: Vec<T> = m.iter().map(|r| r[d]).collect();
        let s: T = col.iter().copied().sum();
        (s > T::zero()).then(|| Belief::normalized(col))
    }

    /// State kernel `P(k, k2)` when player 1's action does not affect the law
    /// of the next state; the mean posterior is then `p P` for every action.
    pub fn uncontrolled_kernel(&self) -> Option<Vec<Vec<T>>> {
        let tol = T::tolerances().structural;
        let nd = self.signals.len();
        let mut out = vec![vec![T::zero(); self.k]; self.k];
        for (k, row) in out.iter_mut().enumerate() {
            for (k2, x) in row.iter_mut().enumerate() {
                let m = |i: usize| (0..nd).map(|d| self.qbar(k, i, k2, d)).sum::<T>();
                let m0 = m(0);
                if (1..self.i).any(|i| (m(i) - m0).abs() > tol) {
                    return None;
                }
                *x = m0;
            }
        }
        Some(out)
    }

    /// Active column of a spec-level public signal.
    pub fn signal_column(&self, d: usize) -> Option<usize> {
        self.signals.iter().position(|&x| x == d)
    }
}

/// How much of the state the public signal discloses in a single-controller game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disclosure {
    /// Player 2 sees only player 1's past actions.
    Hidden,
    /// Player 2 also sees the current state.
    Revealed,
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|x| format!("{prefix}{x}")).collect()
}

/// Normalises payoffs into [0, 1], returning the map used.
fn rescale<T: Scalar>(g: &[Vec<Vec<T>>]) -> (Vec<Vec<Vec<T>>>, Option<PayoffTransform<T>>) {
    let all = g.iter().flatten().flatten();
    let lo = all.clone().fold(T::infinity(), |a, &b| a.min(b));
    let hi = all.fold(T::neg_infinity(), |a, &b| a.max(b));
    if lo >= T::zero() && hi <= T::one() {
        return (g.to_vec(), None);
    }
    let span = if hi > lo { hi - lo } else { T::one() };
    let t = PayoffTransform {
        scale: T::one() / span,
        offset: -lo / span,
    };
    let mapped = g
        .iter()
        .map(|m| {
            m.iter()
                .map(|r| r.iter().map(|&x| t.apply(x)).collect())
                .collect()
        })
        .collect();
    (mapped, Some(t))
}

/// Builds the game where the state follows `kernel[k][i]`, player 1 sees the
/// state and both actions, and player 2 sees player 1's actions (plus the
/// state when `disclosure` is `Revealed`).
pub fn build_single_controller<T: Scalar>(
    matrices: &[Vec<Vec<T>>],
    kernel: &[Vec<Vec<T>>],
    p: &[T],
    disclosure: Disclosure,
) -> Result<RepeatedGameSpec<T>, GameError> {
    let nk = matrices.len();
    let ni = matrices.first().map_or(0, |m| m.len());
    let nj = matrices
        .first()
        .and_then(|m| m.first())
        .map_or(0, |r| r.len());
    if nk == 0
        || ni == 0
        || nj == 0
        || matrices
            .iter()
            .any(|m| m.len() != ni || m.iter().any(|r| r.len() != nj))
    {
        return Err(GameError::MatrixShape);
    }
    if p.len() != nk {
        return Err(GameError::BeliefDim {
            got: p.len(),
            want: nk,
        });
    }
    if kernel.len() != nk || kernel.iter().any(|r| r.len() != ni) {
        return Err(GameError::MatrixShape);
    }
    let tol = T::tolerances().feasibility;
    for (k, rows) in kernel.iter().enumerate() {
        for (i, row) in rows.iter().enumerate() {
            let s: T = row.iter().copied().sum();
            if row.len() != nk || row.iter().any(|&x| x < T::zero()) || (s - T::one()).abs() > tol
            {
                return Err(GameError::Kernel {
                    k,
                    i,
                    sum: s.to_f64_lossy(),
                });
            }
        }
    }
    let (g, transform) = rescale(matrices);
    // Player 1's signal: (state, start) or (state, last i, last j).
    let c_start = |k: usize| k * (1 + ni * nj);
    let c_after = |k: usize, i: usize, j: usize| k * (1 + ni * nj) + 1 + i * nj + j;
    let mut signals1 = Vec::new();
    for k in 0..nk {
        signals1.push(format!("k{k}/start"));
        for i in 0..ni {
            for j in 0..nj {
                signals1.push(format!("k{k}/i{i}/j{j}"));
            }
        }
    }
    let revealed = disclosure == Disclosure::Revealed;
    let d_start = |k: usize| if revealed { k * (1 + ni) } else { 0 };
    let d_after = |k: usize, i: usize| if revealed { k * (1 + ni) + 1 + i } else { 1 + i };
    let signals2 = if revealed {
        let mut s = Vec::new();
        for k in 0..nk {
            s.push(format!("k{k}/start"));
            for i in 0..ni {
                s.push(format!("k{k}/i{i}"));
            }
        }
        s
    } else {
        let mut s = vec!["start".to_string()];
        s.extend(labels("i", ni));
        s
    };
    let initial = (0..nk)
        .filter(|&k| p[k] > T::zero())
        .map(|k| Outcome {
            k,
            c: c_start(k),
            d: d_start(k),
            prob: p[k],
        })
        .collect();
    let transition = (0..nk)
        .map(|k| {
            (0..ni)
                .map(|i| {
                    (0..nj)
                        .map(|j| {
                            (0..nk)
                                .filter(|&k2| kernel[k][i][k2] > T::zero())
                                .map(|k2| Outcome {
                                    k: k2,
                                    c: c_after(k2, i, j),
                                    d: d_after(k2, i),
                                    prob: kernel[k][i][k2],
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut spec = RepeatedGameSpec::from_tables(
        labels("k", nk),
        labels("i", ni),
        labels("j", nj),
        signals1,
        signals2,
        initial,
        g,
        transition,
    )?;
    spec.payoff_transform = transform;
    Ok(spec)
}

/// State evolves by `kernel[k][i]`; player 2 never observes it.
pub fn build_markov_chain_game<T: Scalar>(
    matrices: &[Vec<Vec<T>>],
    kernel: &[Vec<Vec<T>>],
    p: &[T],
) -> Result<RepeatedGameSpec<T>, GameError> {
    build_single_controller(matrices, kernel, p, Disclosure::Hidden)
}

/// Incomplete information on one side with a fixed state and perfect monitoring.
pub fn build_aumann_maschler<T: Scalar>(
    matrices: &[Vec<Vec<T>>],
    p: &[T],
) -> Result<RepeatedGameSpec<T>, GameError> {
    let nk = matrices.len();
    let ni = matrices.first().map_or(0, |m| m.len());
    let kernel: Vec<Vec<Vec<T>>> = (0..nk)
        .map(|k| {
            (0..ni)
                .map(|_| {
                    let mut r = vec![T::zero(); nk];
                    r[k] = T::one();
                    r
                })
                .collect()
        })
        .collect();
    build_markov_chain_game(matrices, &kernel, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn am_quadratic() -> RepeatedGameSpec<f64> {
        build_aumann_maschler(
            &[
                vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            ],
            &[0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn aumann_maschler_passes_both_validators() {
        let s = am_quadratic();
        assert!(s.validate_ha_prime().holds);
        assert!(s.validate_hb_prime().holds);
        assert!(s.validate_ha().holds);
        assert!(!s.validate_hb().holds);
        assert!(s.payoff_transform.is_none());
    }

    #[test]
    fn stacked_state_signals_reveal_projections() {
        let s = build_single_controller(
            &[vec![vec![0.3]], vec![vec![0.6]]],
            &[vec![vec![0.5, 0.5]], vec![vec![0.2, 0.8]]],
            &[0.4, 0.6],
            Disclosure::Revealed,
        )
        .unwrap();
        let r = s.validate_ha_prime();
        assert!(r.holds);
        match r.witness {
            Witness::InformedPlayer { khat, dhat, .. } => {
                assert_eq!(khat[0], Some(0));
                assert_eq!(dhat[0], Some(0));
                assert_eq!(khat[2], Some(1));
            }
            _ => panic!(),
        }
        assert!(s.validate_hb_prime().holds);
        assert!(s.validate_hb().holds);
    }

    #[test]
    fn shared_signal_across_states_breaks_informedness() {
        let mut s = am_quadratic();
        for o in s.initial.iter_mut() {
            o.c = 0;
        }
        let r = s.validate_ha_prime();
        assert!(!r.holds);
        assert!((r.max_violation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn action_dependent_flip_breaks_hb_prime() {
        let mut s = am_quadratic();
        for o in s.transition_mut(0, 0, 1).iter_mut() {
            o.k = 1;
            o.c = 5 + 1;
        }
        let r = s.validate_hb_prime();
        assert!(!r.holds);
        match r.witness {
            Witness::Marginal { offending, qbar } => {
                assert_eq!(offending, Some((0, 0, 0, 1)));
                assert!(qbar.is_none());
            }
            _ => panic!(),
        }
    }

    #[test]
    fn canonical_signal_selection() {
        let s = am_quadratic();
        // Signals per state: start, then (i, j) in row-major order.
        assert_eq!(s.canonical_signal(1, 0).unwrap(), 5);
        assert_eq!(s.canonical_signal(0, 2).unwrap(), 3);
        let mut t = s.clone();
        t.signals2.push("never".into());
        assert!(matches!(
            t.canonical_signal(0, 3),
            Err(GameError::NoCanonicalSignal { k: 0, d: 3 })
        ));
    }

    #[test]
    fn initial_measure_hand_bayes() {
        let mut s = am_quadratic();
        s.initial = vec![
            Outcome { k: 0, c: 0, d: 0, prob: 0.3 },
            Outcome { k: 0, c: 1, d: 1, prob: 0.2 },
            Outcome { k: 1, c: 5, d: 0, prob: 0.1 },
            Outcome { k: 1, c: 6, d: 1, prob: 0.4 },
        ];
        let u = s.initial_belief_measure();
        assert!((u.atoms()[0].weight - 0.4).abs() < 1e-15);
        assert!((u.atoms()[0].atom[0] - 0.75).abs() < 1e-15);
        assert!((u.atoms()[1].atom[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let s = am_quadratic();
        let text = serde_json::to_string(&s.to_json_value()).unwrap();
        let back = RepeatedGameSpec::<f64>::from_json_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_errors_name_the_table() {
        let s = am_quadratic();
        let mut v = s.to_json_value();
        v["transition"]["k0|i0|j0"][0]["prob"] = serde_json::json!(0.5);
        let e = RepeatedGameSpec::<f64>::from_json_str(&v.to_string()).unwrap_err();
        assert!(
            matches!(e, GameError::NotStochastic { ref table, .. } if table.contains("k0|i0|j0"))
        );
        let mut v = s.to_json_value();
        v["payoff"].as_object_mut().unwrap().remove("k1|i1|j1");
        assert!(matches!(
            RepeatedGameSpec::<f64>::from_json_str(&v.to_string()),
            Err(GameError::Missing { .. })
        ));
        let mut v = s.to_json_value();
        v["initial"][0]["k"] = serde_json::json!("nowhere");
        assert!(matches!(
            RepeatedGameSpec::<f64>::from_json_str(&v.to_string()),
            Err(GameError::UnknownLabel { .. })
        ));
    }

    #[test]
    fn rescaling_round_trip() {
        let g = vec![
            vec![vec![-1.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, -1.0]],
        ];
        let s = build_aumann_maschler(&g, &[0.5, 0.5]).unwrap();
        let t = s.payoff_transform.unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(t.invert(s.payoff(k, i, j)), g[k][i][j]);
                }
            }
        }
    }

    #[test]
    fn absorbing_kernel_is_aumann_maschler() {
        let g = vec![
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        ];
        let kernel = vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]];
        assert_eq!(
            build_markov_chain_game(&g, &kernel, &[0.5, 0.5]).unwrap(),
            build_aumann_maschler(&g, &[0.5, 0.5]).unwrap()
        );
    }

    #[test]
    fn cycling_kernel_keeps_hypotheses() {
        let g = vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]];
        let kernel = vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]];
        let s = build_markov_chain_game(&g, &kernel, &[0.3, 0.7]).unwrap();
        assert!(s.validate_ha_prime().holds && s.validate_hb_prime().holds);
    }

    #[test]
    fn bad_kernel_rejected() {
        let g = vec![vec![vec![1.0]], vec![vec![0.0]]];
        let kernel = vec![vec![vec![0.5, 0.4]], vec![vec![0.0, 1.0]]];
        assert!(matches!(
            build_markov_chain_game(&g, &kernel, &[0.5, 0.5]),
            Err(GameError::Kernel { k: 0, i: 0, .. })
        ));
    }

    #[test]
    fn aux_primitives() {
        let s = am_quadratic();
        let aux = AuxGame::new(&s).unwrap();
        assert_eq!(aux.num_signals(), 2);
        let p = [0.5, 0.5];
        let u = StackedMixed::uniform(2, 2);
        assert!((aux.stage_payoff(&p, &u, &[0.5, 0.5]) - 2.0 / 8.0).abs() < 1e-15);
        let a = StackedMixed::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(aux.belief_transition(&p, &a).len(), 2);
        assert!((aux.guaranteed_payoff(&p, &a) - 0.5).abs() < 1e-15);
        let m = aux.belief_transition(&p, &StackedMixed::constant(2, vec![0.3, 0.7]));
        assert_eq!(m.len(), 1);
        assert!((aux.stage_payoff(&[1.0, 0.0], &a, &[1.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
