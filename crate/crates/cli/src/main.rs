mod args;
mod manifest;

use args::{Blocks, Cli, Command, Emit, OracleCommand, Rules};
use clap::Parser;
use manifest::{csv_document, json_document, Recorder};
use rgs_core::game::{AuxGame, GameError, RepeatedGameSpec};
use rgs_core::simulator::{simulate, trace_csv, PlayoutConfig, SimError};
use rgs_core::strategies::{
    build_p2_cyclic, build_p2_growing, cavu_oracle, extract_p1_markov, BlockStrategy2,
    MarkovStrategy1, P1Mode, StrategyError,
};
use rgs_core::value::{
    default_delta, uniform_value_estimate, ThetaWeights, UniformConfig, ValueEngine, ValueError,
};
use serde_json::{json, Value};
use std::path::Path;
use std::process::ExitCode;

/// Failure with its exit code: 1 numerical, 2 usage, 3 unreadable or
/// malformed input, 4 game outside the supported class.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
    fn subclass(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Hypothesis { .. } => Failure::subclass(format!(
                "{e}; the solvers need player 1 to observe the state and player 2's signal (HA') and to control their joint law alone (HB'); run `rgs validate` for details"
            )),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<ValueError> for Failure {
    fn from(e: ValueError) -> Self {
        match e {
            ValueError::Game(g) => g.into(),
            ValueError::BadDelta(_) | ValueError::EmptyHorizon | ValueError::Guard { .. } => {
                Failure { code: 2, message: e.to_string() }
            }
            ValueError::Lp(_) => Failure { code: 1, message: e.to_string() },
        }
    }
}

impl From<StrategyError> for Failure {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Value(v) => v.into(),
            StrategyError::Game(g) => g.into(),
            StrategyError::Unsupported(_) | StrategyError::NotFixedState => Failure::subclass(e.to_string()),
            _ => Failure { code: 1, message: e.to_string() },
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Game(g) => g.into(),
            SimError::EmptyRun => Failure { code: 2, message: e.to_string() },
            _ => Failure { code: 1, message: e.to_string() },
        }
    }
}

fn read(path: &Path, rec: &mut Recorder) -> Result<String, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    rec.input(&path.display().to_string(), &bytes);
    String::from_utf8(bytes).map_err(|_| Failure::input(format!("{} is not UTF-8", path.display())))
}

fn load_spec(path: &Path, rec: &mut Recorder) -> Result<RepeatedGameSpec<f64>, Failure> {
    let text = read(path, rec)?;
    RepeatedGameSpec::from_json_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn engine(spec: &RepeatedGameSpec<f64>, grid: Option<f64>) -> Result<ValueEngine<f64>, Failure> {
    let delta = grid.unwrap_or_else(|| default_delta(spec.num_states()));
    Ok(ValueEngine::new(spec, delta)?)
}

fn config<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialise")
}

/// The strategy object inside a document written by `rgs strategy`, or the
/// whole file when it is a bare strategy.
fn strategy_payload(text: &str, path: &Path, player: u64) -> Result<Value, Failure> {
    let v: Value = serde_json::from_str(text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let Some(result) = v.get("result") else {
        return Ok(v);
    };
    if let Some(p) = result.get("player").and_then(Value::as_u64) {
        if p != player {
            return Err(Failure::input(format!(
                "{} holds a strategy of player {p}, expected player {player}",
                path.display()
            )));
        }
    }
    result
        .get("strategy")
        .cloned()
        .ok_or_else(|| Failure::input(format!("{}: no \"strategy\" under \"result\"", path.display())))
}

fn run(cli: Cli) -> Result<(String, u8), Failure> {
    match cli.command {
        Command::Validate(a) => {
            let mut rec = Recorder::new("validate", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let reports = [
                serde_json::to_value(spec.validate_ha_prime()),
                serde_json::to_value(spec.validate_hb_prime()),
                serde_json::to_value(spec.validate_ha()),
                serde_json::to_value(spec.validate_hb()),
            ]
            .into_iter()
            .collect::<Result<Vec<Value>, _>>()
            .expect("reports serialise");
            let required = reports[..2].iter().all(|r| r["holds"] == json!(true));
            let result = json!({
                "states": spec.num_states(),
                "actions1": spec.num_actions1(),
                "actions2": spec.num_actions2(),
                "signals1": spec.num_signals1(),
                "signals2": spec.num_signals2(),
                "supported": required,
                "hypotheses": reports,
                "fixed_state": spec.fixed_state_matrices().is_some(),
            });
            let code = if required { 0 } else { 4 };
            if !required {
                eprintln!("rgs: HA' or HB' fails; the value and strategy commands will reject this game");
            }
            Ok((json_document(&rec.finish(), result), code))
        }
        Command::Value(a) => {
            let mut rec = Recorder::new("value", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let e = engine(&spec, a.grid.grid)?;
            let theta = match (&a.theta, a.n) {
                (Some(t), _) => ThetaWeights::parse(t).map_err(|err| Failure { code: 2, message: format!("--theta: {err}") })?,
                (None, Some(n)) if n >= 1 => ThetaWeights::uniform_range(a.m + 1, a.m + n),
                _ => return Err(Failure { code: 2, message: "--n must be at least 1".into() }),
            };
            let vg = e.value_theta_grid(&theta)?;
            let init = e.value_initial(&theta)?;
            let k = e.aux().k;
            let points = e.grid().points();
            let doc = match a.emit {
                Emit::Csv => {
                    let mut body = String::new();
                    let cols: Vec<String> = (0..k).map(|s| format!("p{s}")).collect();
                    body.push_str(&format!("{},lower,upper\n", cols.join(",")));
                    for (p, (lo, hi)) in points.iter().zip(vg.lower.iter().zip(&vg.upper)) {
                        let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                        body.push_str(&format!("{},{lo},{hi}\n", ps.join(",")));
                    }
                    csv_document(&rec.finish(), &body)
                }
                Emit::Json => {
                    let rows: Vec<Value> = points
                        .iter()
                        .zip(vg.lower.iter().zip(&vg.upper))
                        .map(|(p, (lo, hi))| json!({ "p": p.to_vec(), "lower": lo, "upper": hi }))
                        .collect();
                    json_document(
                        &rec.finish(),
                        json!({
                            "theta": theta.to_string(),
                            "delta": e.delta(),
                            "initial": init,
                            "points": rows,
                        }),
                    )
                }
            };
            Ok((doc, 0))
        }
        Command::Wvalue(a) => {
            let mut rec = Recorder::new("wvalue", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let e = engine(&spec, a.grid.grid)?;
            let u = e.initial_measure().clone();
            let w = e.w_mn(a.m, a.n, &u, a.theta_grid, a.guard)?;
            let result = json!({
                "m": w.m,
                "n": w.n,
                "lower": w.lower,
                "lower_on_lattice": w.lower_on_lattice,
                "upper": w.upper,
                "theta_star": w.argmin.to_string(),
                "delta": e.delta(),
            });
            Ok((json_document(&rec.finish(), result), 0))
        }
        Command::Uniform(a) => {
            let mut rec = Recorder::new("uniform", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let e = engine(&spec, a.grid.grid)?;
            let mut c = UniformConfig::new(a.max_m, a.max_n);
            if let Some(w) = a.w_max_n {
                c.w_max_n = w;
            }
            c.theta_resolution = a.theta_grid;
            let r = uniform_value_estimate(&e, &c)?;
            if r.n_at_boundary || r.m_at_boundary {
                eprintln!("rgs: an optimiser sits on the edge of the window; consider a larger window");
            }
            let doc = match a.emit {
                Emit::Csv => csv_document(&rec.finish(), &r.to_csv()),
                Emit::Json => {
                    let mut v = serde_json::to_value(&r).expect("report serialises");
                    v["estimate"] = serde_json::to_value(r.estimate()).expect("interval serialises");
                    json_document(&rec.finish(), v)
                }
            };
            Ok((doc, 0))
        }
        Command::Strategy(a) => {
            let mut rec = Recorder::new("strategy", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let e = engine(&spec, a.grid.grid)?;
            if a.n == 0 {
                return Err(Failure { code: 2, message: "--n must be at least 1".into() });
            }
            let strategy = if a.player == 1 {
                let mode = match a.rules {
                    Rules::Finite => P1Mode::Finite,
                    Rules::Stationary => match a.alpha {
                        Some(alpha) => P1Mode::Stationary { alpha },
                        None => P1Mode::stationary_default(a.n),
                    },
                };
                serde_json::to_value(extract_p1_markov(&e, a.n, mode)?)
            } else {
                let s = match a.blocks {
                    Blocks::Cyclic => build_p2_cyclic(&e, a.n)?,
                    Blocks::Growing => build_p2_growing(&e, a.horizon)?,
                };
                serde_json::to_value(s)
            }
            .expect("strategy serialises");
            Ok((json_document(&rec.finish(), json!({ "player": a.player, "strategy": strategy })), 0))
        }
        Command::Simulate(a) => {
            let mut rec = Recorder::new("simulate", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let aux = AuxGame::new(&spec)?;
            let t1 = read(&a.p1, &mut rec)?;
            let t2 = read(&a.p2, &mut rec)?;
            let sigma: MarkovStrategy1 = serde_json::from_value(strategy_payload(&t1, &a.p1, 1)?)
                .map_err(|e| Failure::input(format!("{}: not a player-1 strategy: {e}", a.p1.display())))?;
            let tau: BlockStrategy2 = serde_json::from_value(strategy_payload(&t2, &a.p2, 2)?)
                .map_err(|e| Failure::input(format!("{}: not a player-2 strategy: {e}", a.p2.display())))?;
            if sigma.num_states != aux.k || sigma.num_actions != aux.i || sigma.stages.is_empty() {
                return Err(Failure::input(format!(
                    "{}: strategy is for {} states and {} actions, the game has {} and {}",
                    a.p1.display(), sigma.num_states, sigma.num_actions, aux.k, aux.i
                )));
            }
            if tau.num_actions != aux.j || tau.rules.is_empty() {
                return Err(Failure::input(format!(
                    "{}: strategy is for {} actions, the game has {}",
                    a.p2.display(), tau.num_actions, aux.j
                )));
            }
            let mut c = PlayoutConfig::new(a.horizon, a.reps, a.seed);
            c.checkpoints = a.checkpoints.clone();
            c.trace = a.trace;
            let out = simulate(&spec, &aux, &sigma, &tau, &c)?;
            let doc = match out.trace {
                Some(rows) => {
                    let o = out.stats.overall;
                    eprintln!("mean {} (stderr {}, 95% half-width {})", o.mean, o.stderr, o.ci95);
                    csv_document(&rec.finish(), &trace_csv(&rows))
                }
                None => json_document(&rec.finish(), serde_json::to_value(&out.stats).expect("stats serialise")),
            };
            Ok((doc, 0))
        }
        Command::Oracle(OracleCommand::Cavu(a)) => {
            let mut rec = Recorder::new("oracle cavu", config(&a));
            let spec = load_spec(&a.spec, &mut rec)?;
            let mats = spec.fixed_state_matrices().ok_or_else(|| {
                Failure::subclass("oracle cavu needs a game whose state never changes (Aumann-Maschler class)")
            })?;
            let o = cavu_oracle(&mats, a.grid)?;
            let best = (0..o.cav.len()).fold(0, |b, x| if o.cav[x] > o.cav[b] { x } else { b });
            let doc = match a.emit {
                Emit::Csv => {
                    let cols: Vec<String> = (0..mats.len()).map(|s| format!("p{s}")).collect();
                    let mut body = format!("{},u,cav\n", cols.join(","));
                    for ((p, u), c) in o.points.iter().zip(&o.u).zip(&o.cav) {
                        let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                        body.push_str(&format!("{},{u},{c}\n", ps.join(",")));
                    }
                    csv_document(&rec.finish(), &body)
                }
                Emit::Json => {
                    let mut v = serde_json::to_value(&o).expect("oracle serialises");
                    v["argmax"] = json!({ "p": o.points[best], "cav": o.cav[best] });
                    json_document(&rec.finish(), v)
                }
            };
            Ok((doc, 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("rgs: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("rgs: cannot start {j} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let out = cli.out.clone();
    match run(cli) {
        Ok((doc, code)) => {
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, doc) {
                        eprintln!("rgs: cannot write {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                }
                None => print!("{doc}"),
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("rgs: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
