//! Monte Carlo playout of the repeated game and guarantee audits.

use crate::game::{AuxGame, GameError, RepeatedGameSpec, StackedMixed};
use crate::measures::Belief;
use crate::scalar::Scalar;
use crate::strategies::{BlockStrategy2, MarkovStrategy1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Identifies the adversary suite; bump when its members change.
pub const ADVERSARY_SUITE_VERSION: &str = "suite-v1";

/// Pure stationary maps are enumerated only up to this many.
pub const MAX_PURE_MAPS: usize = 64;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("stage {stage}: player {player} emitted an invalid distribution")]
    InvalidAction { stage: usize, player: u8 },
    #[error("stage {stage}: public signal {signal} has no mass under the declared action")]
    Belief { stage: usize, signal: usize },
    #[error("both strategies react to the other's current action")]
    BothReact,
    #[error("horizon and replications must be at least 1")]
    EmptyRun,
}

pub trait Player1Policy<T: Scalar>: Send + Sync {
    fn name(&self) -> String;
    /// Whether the action depends on player 2's current mixed action.
    fn reacts(&self) -> bool {
        false
    }
    fn action(&self, t: usize, p: &[T], other: Option<&[T]>) -> StackedMixed<T>;
}

pub trait Player2Policy<T: Scalar>: Send + Sync {
    fn name(&self) -> String;
    fn reacts(&self) -> bool {
        false
    }
    fn action(&self, t: usize, p: &[T], other: Option<&StackedMixed<T>>) -> Vec<T>;
}

impl<T: Scalar> Player1Policy<T> for MarkovStrategy1 {
    fn name(&self) -> String {
        self.description.clone()
    }
    fn action(&self, t: usize, p: &[T], _: Option<&[T]>) -> StackedMixed<T> {
        MarkovStrategy1::action(self, t, p)
    }
}

impl<T: Scalar> Player2Policy<T> for BlockStrategy2 {
    fn name(&self) -> String {
        self.description.clone()
    }
    fn action(&self, t: usize, p: &[T], _: Option<&StackedMixed<T>>) -> Vec<T> {
        BlockStrategy2::action(self, t, p)
    }
}

/// Same stacked action at every stage.
#[derive(Clone, Debug)]
pub struct Stationary1<T> {
    pub label: String,
    pub action: StackedMixed<T>,
}

impl<T: Scalar> Player1Policy<T> for Stationary1<T> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn action(&self, _: usize, _: &[T], _: Option<&[T]>) -> StackedMixed<T> {
        self.action.clone()
    }
}

/// Same mixed action at every stage.
#[derive(Clone, Debug)]
pub struct Stationary2<T> {
    pub label: String,
    pub action: Vec<T>,
}

impl<T: Scalar> Player2Policy<T> for Stationary2<T> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn action(&self, _: usize, _: &[T], _: Option<&StackedMixed<T>>) -> Vec<T> {
        self.action.clone()
    }
}

/// In each state, the pure action best against player 2's current mix.
#[derive(Clone, Debug)]
pub struct Myopic1<T> {
    aux: AuxGame<T>,
}

impl<T: Scalar> Player1Policy<T> for Myopic1<T> {
    fn name(&self) -> String {
        "myopic best response".into()
    }
    fn reacts(&self) -> bool {
        true
    }
    fn action(&self, _: usize, _: &[T], other: Option<&[T]>) -> StackedMixed<T> {
        let b = other.expect("reacting policy gets the opponent's action");
        let rows = (0..self.aux.k)
            .map(|k| {
                let score = |i: usize| -> T { (0..self.aux.j).map(|j| b[j] * self.aux.payoff(k, i, j)).sum() };
                let best = (0..self.aux.i).fold(0, |bi, i| if score(i) > score(bi) { i } else { bi });
                let mut r = vec![T::zero(); self.aux.i];
                r[best] = T::one();
                r
            })
            .collect();
        StackedMixed::normalized(rows)
    }
}

/// The pure action minimising the expected payoff at the current belief.
#[derive(Clone, Debug)]
pub struct Myopic2<T> {
    aux: AuxGame<T>,
}

impl<T: Scalar> Player2Policy<T> for Myopic2<T> {
    fn name(&self) -> String {
        "myopic best response".into()
    }
    fn reacts(&self) -> bool {
        true
    }
    fn action(&self, _: usize, p: &[T], other: Option<&StackedMixed<T>>) -> Vec<T> {
        let a = other.expect("reacting policy gets the opponent's action");
        let g = self.aux.payoff_vector(p, a);
        let best = (0..g.len()).fold(0, |bj, j| if g[j] < g[bj] { j } else { bj });
        let mut b = vec![T::zero(); g.len()];
        b[best] = T::one();
        b
    }
}

fn random_simplex<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let e: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| T::lit(x / s)).collect()
}

/// Opponents for auditing a player-1 strategy: every pure column, myopic
/// best response, and a seeded random mixed column.
pub fn adversaries_against_p1<T: Scalar>(aux: &AuxGame<T>, seed: u64) -> Vec<Box<dyn Player2Policy<T>>> {
    let mut out: Vec<Box<dyn Player2Policy<T>>> = Vec::new();
    for j in 0..aux.j {
        let mut b = vec![T::zero(); aux.j];
        b[j] = T::one();
        out.push(Box::new(Stationary2 {
            label: format!("pure j{j}"),
            action: b,
        }));
    }
    out.push(Box::new(Myopic2 { aux: aux.clone() }));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.push(Box::new(Stationary2 {
        label: "random mixed".into(),
        action: random_simplex(&mut rng, aux.j),
    }));
    out
}

/// Opponents for auditing a player-2 strategy: pure state-to-action maps
/// (up to [`MAX_PURE_MAPS`]), myopic best response, and a seeded random
/// stacked action.
pub fn adversaries_against_p2<T: Scalar>(aux: &AuxGame<T>, seed: u64) -> Vec<Box<dyn Player1Policy<T>>> {
    let mut out: Vec<Box<dyn Player1Policy<T>>> = Vec::new();
    let total = (aux.i as u64).saturating_pow(aux.k as u32).min(MAX_PURE_MAPS as u64) as usize;
    for code in 0..total {
        let mut c = code;
        let map: Vec<usize> = (0..aux.k)
            .map(|_| {
                let i = c % aux.i;
                c /= aux.i;
                i
            })
            .collect();
        let rows = map
            .iter()
            .map(|&i| {
                let mut r = vec![T::zero(); aux.i];
                r[i] = T::one();
                r
            })
            .collect();
        out.push(Box::new(Stationary1 {
            label: format!("pure map {map:?}"),
            action: StackedMixed::normalized(rows),
        }));
    }
    out.push(Box::new(Myopic1 { aux: aux.clone() }));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..aux.k).map(|_| random_simplex(&mut rng, aux.i)).collect();
    out.push(Box::new(Stationary1 {
        label: "random mixed".into(),
        action: StackedMixed::normalized(rows),
    }));
    out
}

/// Uniform play in every state; the negative control of the audits.
pub fn uniform_p1<T: Scalar>(aux: &AuxGame<T>) -> Stationary1<T> {
    Stationary1 {
        label: "uniform".into(),
        action: StackedMixed::uniform(aux.k, aux.i),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlayoutConfig {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Horizons at which prefix averages are reported besides `horizon`.
    pub checkpoints: Vec<usize>,
    pub trace: bool,
}

impl PlayoutConfig {
    pub fn new(horizon: usize, replications: usize, seed: u64) -> Self {
        Self {
            horizon,
            replications,
            seed,
            checkpoints: Vec::new(),
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeanEstimate {
    pub horizon: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Half-width of the 95% interval, `1.96 * stderr`.
    pub ci95: f64,
}

impl MeanEstimate {
    fn from_samples(horizon: usize, xs: &[f64]) -> Self {
        let r = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / r;
        let constant = xs.windows(2).all(|w| w[0] == w[1]);
        let mean = if constant { xs[0] } else { mean };
        let var = if xs.len() > 1 && !constant {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        let stderr = (var / r).sqrt();
        Self {
            horizon,
            mean,
            stderr,
            ci95: 1.96 * stderr,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PayoffStats {
    pub replications: usize,
    pub overall: MeanEstimate,
    pub checkpoints: Vec<MeanEstimate>,
    /// Mean payoff at each stage across replications.
    pub stage_means: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub replication: usize,
    pub stage: usize,
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub payoff: f64,
}

/// `replication,stage,k,i,j,payoff` with a header line.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from("replication,stage,k,i,j,payoff\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{}\n", r.replication, r.stage, r.k, r.i, r.j, r.payoff));
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct SimOutput {
    pub stats: PayoffStats,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRow>>,
}

/// One realised stage.
#[derive(Clone, Debug)]
pub struct PathStep<T> {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub payoff: T,
    /// Public belief before the stage.
    pub belief: Belief<T>,
    /// Active signal column observed after the stage.
    pub signal: usize,
}

fn sample<T: Scalar>(rng: &mut ChaCha8Rng, probs: impl Iterator<Item = T>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (idx, p) in probs.enumerate() {
        let p = p.to_f64_lossy();
        if p > 0.0 {
            last = idx;
        }
        acc += p;
        if u < acc {
            return idx;
        }
    }
    last
}

fn valid_dist<T: Scalar>(v: &[T]) -> bool {
    let tol = T::lit(1e-9);
    let s: T = v.iter().copied().sum();
    v.iter().all(|&x| x >= -tol && x.is_finite()) && (s - T::one()).abs() <= tol
}

/// Plays one replication, returning every stage.
pub fn simulate_path<T: Scalar>(
    spec: &RepeatedGameSpec<T>,
    aux: &AuxGame<T>,
    sigma: &dyn Player1Policy<T>,
    tau: &dyn Player2Policy<T>,
    seed: u64,
    replication: usize,
    horizon: usize,
) -> Result<Vec<PathStep<T>>, SimError> {
    if sigma.reacts() && tau.reacts() {
        return Err(SimError::BothReact);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication as u64);
    let init = &spec.initial;
    let o = &init[sample(&mut rng, init.iter().map(|o| o.prob))];
    let mut k = o.k;
    let marg = spec.initial_marginal();
    let mut p = Belief::normalized(marg.iter().map(|row| row[o.d]).collect());
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let (a, b) = if sigma.reacts() {
            let b = tau.action(t, &p, None);
            (sigma.action(t, &p, Some(&b)), b)
        } else {
            let a = sigma.action(t, &p, None);
            let b = tau.action(t, &p, Some(&a));
            (a, b)
        };
        if a.num_states() != aux.k || a.rows().iter().any(|r| r.len() != aux.i || !valid_dist(r)) {
            return Err(SimError::InvalidAction { stage: t, player: 1 });
        }
        if b.len() != aux.j || !valid_dist(&b) {
            return Err(SimError::InvalidAction { stage: t, player: 2 });
        }
        let i = sample(&mut rng, a.row(k).iter().copied());
        let j = sample(&mut rng, b.iter().copied());
        let payoff = spec.payoff(k, i, j);
        let outs = spec.transition(k, i, j);
        let nx = &outs[sample(&mut rng, outs.iter().map(|o| o.prob))];
        let col = aux
            .signal_column(nx.d)
            .ok_or(SimError::Belief { stage: t, signal: nx.d })?;
        let next = aux
            .posterior(&p, &a, col)
            .ok_or(SimError::Belief { stage: t, signal: nx.d })?;
        out.push(PathStep {
            k,
            i,
            j,
            payoff,
            belief: p,
            signal: col,
        });
        p = next;
        k = nx.k;
    }
    Ok(out)
}

/// Estimates the expected average payoff of `(sigma, tau)` over the first
/// `config.horizon` stages. Replication `r` draws from stream `r` of the
/// seeded generator, so results do not depend on scheduling.
pub fn simulate<T: Scalar>(
    spec: &RepeatedGameSpec<T>,
    aux: &AuxGame<T>,
    sigma: &dyn Player1Policy<T>,
    tau: &dyn Player2Policy<T>,
    config: &PlayoutConfig,
) -> Result<SimOutput, SimError> {
    if config.horizon == 0 || config.replications == 0 {
        return Err(SimError::EmptyRun);
    }
    let paths: Vec<Vec<PathStep<T>>> = (0..config.replications)
        .into_par_iter()
        .map(|r| simulate_path(spec, aux, sigma, tau, config.seed, r, config.horizon))
        .collect::<Result<_, _>>()?;
    let n = config.horizon;
    let mut stage_means = vec![0.0; n];
    let mut horizons: Vec<usize> = config.checkpoints.iter().copied().filter(|&h| h >= 1 && h <= n).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let mut prefix = vec![Vec::with_capacity(paths.len()); horizons.len()];
    let mut totals = Vec::with_capacity(paths.len());
    for path in &paths {
        let mut acc = 0.0;
        let mut h = 0;
        for (t, s) in path.iter().enumerate() {
            let g = s.payoff.to_f64_lossy();
            acc += g;
            stage_means[t] += g;
            while h < horizons.len() && horizons[h] == t + 1 {
                prefix[h].push(acc / (t + 1) as f64);
                h += 1;
            }
        }
        totals.push(acc / n as f64);
    }
    let r = paths.len() as f64;
    stage_means.iter_mut().for_each(|x| *x /= r);
    let trace = config.trace.then(|| {
        paths
            .iter()
            .enumerate()
            .flat_map(|(rep, path)| {
                path.iter().enumerate().map(move |(t, s)| TraceRow {
                    replication: rep,
                    stage: t + 1,
                    k: s.k,
                    i: s.i,
                    j: s.j,
                    payoff: s.payoff.to_f64_lossy(),
                })
            })
            .collect()
    });
    Ok(SimOutput {
        stats: PayoffStats {
            replications: paths.len(),
            overall: MeanEstimate::from_samples(n, &totals),
            checkpoints: horizons
                .iter()
                .zip(&prefix)
                .map(|(&h, xs)| MeanEstimate::from_samples(h, xs))
                .collect(),
            stage_means,
        },
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditSide {
    /// Lower guarantee of player 1: pass when `mean >= target - eps - ci`.
    Player1,
    /// Upper guarantee of player 2: pass when `mean <= target + eps + ci`.
    Player2,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub adversary: String,
    pub horizon: usize,
    pub mean: f64,
    pub ci95: f64,
    pub pass: bool,
}

/// Pass/fail matrix of a guarantee audit against a fixed adversary suite.
/// An audit is evidence, not a proof of the guarantee.
#[derive(Clone, Debug, Serialize)]
pub struct GuaranteeReport {
    pub side: AuditSide,
    pub strategy: String,
    pub target: f64,
    pub eps: f64,
    pub suite_version: &'static str,
    pub rows: Vec<AuditRow>,
    pub pass: bool,
}

fn audit_rows(side: AuditSide, target: f64, eps: f64, name: String, stats: &PayoffStats) -> Vec<AuditRow> {
    stats
        .checkpoints
        .iter()
        .map(|c| AuditRow {
            adversary: name.clone(),
            horizon: c.horizon,
            mean: c.mean,
            ci95: c.ci95,
            pass: match side {
                AuditSide::Player1 => c.mean >= target - eps - c.ci95,
                AuditSide::Player2 => c.mean <= target + eps + c.ci95,
            },
        })
        .collect()
}

fn audit_config(config: &PlayoutConfig, horizons: &[usize]) -> PlayoutConfig {
    let mut c = config.clone();
    c.horizon = horizons.iter().copied().max().unwrap_or(config.horizon);
    c.checkpoints = horizons.to_vec();
    c.trace = false;
    c
}

/// Audits `sigma` against every adversary at every horizon.
#[allow(clippy::too_many_arguments)]
pub fn guarantee_check_p1<T: Scalar>(
    spec: &RepeatedGameSpec<T>,
    aux: &AuxGame<T>,
    sigma: &dyn Player1Policy<T>,
    target: f64,
    eps: f64,
    horizons: &[usize],
    adversaries: &[Box<dyn Player2Policy<T>>],
    config: &PlayoutConfig,
) -> Result<GuaranteeReport, SimError> {
    let c = audit_config(config, horizons);
    let mut rows = Vec::new();
    for tau in adversaries {
        let out = simulate(spec, aux, sigma, tau.as_ref(), &c)?;
        rows.extend(audit_rows(AuditSide::Player1, target, eps, tau.name(), &out.stats));
    }
    Ok(GuaranteeReport {
        side: AuditSide::Player1,
        strategy: sigma.name(),
        target,
        eps,
        suite_version: ADVERSARY_SUITE_VERSION,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

/// Audits `tau` against every adversary at every horizon.
#[allow(clippy::too_many_arguments)]
pub fn guarantee_check_p2<T: Scalar>(
    spec: &RepeatedGameSpec<T>,
    aux: &AuxGame<T>,
    tau: &dyn Player2Policy<T>,
    target: f64,
    eps: f64,
    horizons: &[usize],
    adversaries: &[Box<dyn Player1Policy<T>>],
    config: &PlayoutConfig,
) -> Result<GuaranteeReport, SimError> {
    let c = audit_config(config, horizons);
    let mut rows = Vec::new();
    for sigma in adversaries {
        let out = simulate(spec, aux, sigma.as_ref(), tau, &c)?;
        rows.extend(audit_rows(AuditSide::Player2, target, eps, sigma.name(), &out.stats));
    }
    Ok(GuaranteeReport {
        side: AuditSide::Player2,
        strategy: tau.name(),
        target,
        eps,
        suite_version: ADVERSARY_SUITE_VERSION,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{am_quadratic, single_state};

    #[test]
    fn constant_payoff_is_exact() {
        let m = vec![vec![0.4, 0.4], vec![0.4, 0.4]];
        let spec = single_state(&m).unwrap();
        let aux = AuxGame::new(&spec).unwrap();
        let s = uniform_p1(&aux);
        let t = Stationary2 {
            label: "u".into(),
            action: vec![0.5, 0.5],
        };
        let out = simulate(&spec, &aux, &s, &t, &PlayoutConfig::new(20, 10, 3)).unwrap();
        assert!((out.stats.overall.mean - 0.4).abs() < 1e-12);
        assert_eq!(out.stats.overall.stderr, 0.0);
    }

    #[test]
    fn deterministic_and_trace() {
        let spec = am_quadratic::<f64>();
        let aux = AuxGame::new(&spec).unwrap();
        let s = uniform_p1(&aux);
        let advs = adversaries_against_p1(&aux, 1);
        let mut cfg = PlayoutConfig::new(16, 8, 42);
        cfg.trace = true;
        let a = simulate(&spec, &aux, &s, advs[2].as_ref(), &cfg).unwrap();
        let b = simulate(&spec, &aux, &s, advs[2].as_ref(), &cfg).unwrap();
        assert_eq!(a.stats.overall.mean.to_bits(), b.stats.overall.mean.to_bits());
        let csv = trace_csv(a.trace.as_ref().unwrap());
        assert_eq!(csv.lines().count(), 1 + 16 * 8);
        assert!(csv.starts_with("replication,stage,k,i,j,payoff\n0,1,"));
    }

    #[test]
    fn invalid_action_is_reported() {
        let spec = am_quadratic::<f64>();
        let aux = AuxGame::new(&spec).unwrap();
        let s = uniform_p1(&aux);
        let t = Stationary2 {
            label: "bad".into(),
            action: vec![0.7, 0.7],
        };
        match simulate(&spec, &aux, &s, &t, &PlayoutConfig::new(3, 1, 0)) {
            Err(SimError::InvalidAction { stage: 1, player: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn suite_sizes() {
        let aux = AuxGame::new(&am_quadratic::<f64>()).unwrap();
        assert_eq!(adversaries_against_p1(&aux, 0).len(), 4);
        assert_eq!(adversaries_against_p2(&aux, 0).len(), 6);
    }
}
