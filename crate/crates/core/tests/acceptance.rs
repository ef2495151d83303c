//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any line fails.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgs_core::corpus::{
    am_dominant, am_quadratic, single_controller_data, single_controller_revealed, single_state,
    single_state_matrices, two_state_corpus,
};
use rgs_core::game::{AuxGame, RepeatedGameSpec};
use rgs_core::measures::{
    choquet_dominates, disintegrate, eval_concave, splitting_action, wasserstein, Belief,
    BeliefMeasure,
};
use rgs_core::simulator::{
    adversaries_against_p1, adversaries_against_p2, guarantee_check_p1, guarantee_check_p2,
    uniform_p1, Player1Policy, PlayoutConfig,
};
use rgs_core::strategies::{build_p2_cyclic, cavu_oracle, extract_p1_markov, P1Mode};
use rgs_core::value::{
    default_delta, uniform_value_estimate, value_theta_exact, ThetaWeights, UniformConfig,
    ValueEngine,
};
use std::time::{Duration, Instant};

// Pinned tolerances.
const K1_TOL: f64 = 1e-6;
const K1_TIME: Duration = Duration::from_secs(5);
const AM_GAP: f64 = 0.02;
const AM_BRACKET: f64 = 0.05;
const AM_TIME: Duration = Duration::from_secs(600);
const CERT_TOL: f64 = 1e-9;
const CONCAVE_TOL: f64 = 1e-9;
const SPLIT_TOL: f64 = 1e-12;
const AUDIT_EPS: f64 = 0.05;
const P2_SLACK: f64 = 0.02;
const SC_TOL: f64 = 0.03;

type Check = (bool, String);

fn full_corpus() -> Vec<(String, RepeatedGameSpec<f64>)> {
    let mut out: Vec<(String, RepeatedGameSpec<f64>)> = single_state_matrices::<f64>()
        .into_iter()
        .map(|(n, m)| (format!("k1_{n}"), single_state(&m).unwrap()))
        .collect();
    out.extend(two_state_corpus(20));
    out
}

fn engine(spec: &RepeatedGameSpec<f64>) -> ValueEngine<f64> {
    let k = spec.num_states();
    ValueEngine::new(spec, default_delta(k)).unwrap()
}

/// Value of a matrix game by support enumeration: every square pair of
/// row and column supports, kept when both equalisers are optimal.
fn support_enumeration(a: &[Vec<f64>]) -> f64 {
    let (r, c) = (a.len(), a[0].len());
    let subsets = |n: usize, s: usize| -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == s)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
            .collect()
    };
    // Solves sum_i x_i a[i][j] = v for j in cols, sum x = 1.
    let equaliser = |rows: &[usize], cols: &[usize], t: bool| -> Option<(Vec<f64>, f64)> {
        let s = rows.len();
        let at = |i: usize, j: usize| if t { a[j][i] } else { a[i][j] };
        let mut m = vec![vec![0.0; s + 2]; s + 1];
        for (e, &j) in cols.iter().enumerate() {
            for (q, &i) in rows.iter().enumerate() {
                m[e][q] = at(i, j);
            }
            m[e][s] = -1.0;
        }
        for q in 0..s {
            m[s][q] = 1.0;
        }
        m[s][s + 1] = 1.0;
        for col in 0..=s {
            let piv = (col..=s).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
            if m[piv][col].abs() < 1e-12 {
                return None;
            }
            m.swap(col, piv);
            for row in 0..=s {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for z in col..s + 2 {
                        m[row][z] -= f * m[col][z];
                    }
                }
            }
        }
        let sol: Vec<f64> = (0..=s).map(|q| m[q][s + 1] / m[q][q]).collect();
        Some((sol[..s].to_vec(), sol[s]))
    };
    for s in 1..=r.min(c) {
        for rows in subsets(r, s) {
            for cols in subsets(c, s) {
                let (Some((x, v)), Some((y, w))) =
                    (equaliser(&rows, &cols, false), equaliser(&cols, &rows, true))
                else {
                    continue;
                };
                if x.iter().chain(&y).any(|&z| z < -1e-12) || (v - w).abs() > 1e-9 {
                    continue;
                }
                let col_ok = (0..c).all(|j| rows.iter().zip(&x).map(|(&i, p)| p * a[i][j]).sum::<f64>() >= v - 1e-9);
                let row_ok = (0..r).all(|i| cols.iter().zip(&y).map(|(&j, q)| q * a[i][j]).sum::<f64>() <= v + 1e-9);
                if col_ok && row_ok {
                    return v;
                }
            }
        }
    }
    panic!("no equilibrium support found")
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (_, m) in single_state_matrices::<f64>() {
        let target = support_enumeration(&m);
        let e = ValueEngine::new(&single_state(&m).unwrap(), 1.0).unwrap();
        let u = e.initial_measure().clone();
        for m_ in 0..=8 {
            for n in 1..=8 {
                let v = e.value_on(&ThetaWeights::uniform_range(m_ + 1, m_ + n), &u).unwrap();
                worst = worst.max((v.lower - target).abs()).max((v.upper - target).abs());
                let w = e.w_mn(m_, n, &u, 2, 8).unwrap();
                worst = worst.max((w.lower - target).abs()).max((w.upper - target).abs());
            }
        }
        let r = uniform_value_estimate(&e, &UniformConfig::new(8, 8)).unwrap();
        let est = r.estimate();
        worst = worst.max((est.lower - target).abs()).max((est.upper - target).abs());
    }
    let t = start.elapsed();
    (
        worst <= K1_TOL && t < K1_TIME,
        format!("max deviation {worst:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let spec = am_quadratic::<f64>();
    let e = ValueEngine::new(&spec, 1.0 / 64.0).unwrap();
    let half = Belief::new(vec![0.5, 0.5]).unwrap();
    // Brute force over the informed player's one-shot stacked actions.
    let aux = e.aux();
    let mut brute: f64 = 0.0;
    for a in 0..=200 {
        for b in 0..=200 {
            let (x, y) = (a as f64 / 200.0, b as f64 / 200.0);
            let act = rgs_core::game::StackedMixed::new(vec![vec![x, 1.0 - x], vec![y, 1.0 - y]]).unwrap();
            brute = brute.max(aux.guaranteed_payoff(&half, &act));
        }
    }
    let v1 = e.value_at(&ThetaWeights::uniform(1), &half).unwrap();
    let v1_ok = v1.gap() <= AM_GAP && v1.lower <= 0.5 + CERT_TOL && v1.upper >= 0.5 - CERT_TOL
        && (brute - 0.5).abs() < 1e-12;
    let mut mono = true;
    let mut prev = v1;
    for n in 2..=8 {
        let v = e.value_at(&ThetaWeights::uniform(n), &half).unwrap();
        mono &= v.lower <= prev.upper + CERT_TOL;
        prev = v;
    }
    // Non-revealing value u(p) = p(1 - p) is concave, so cav u(1/2) = 1/4;
    // the hull oracle must agree.
    let cav = cavu_oracle(
        &[vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 1.0]]],
        64,
    )
    .unwrap()
    .eval(&[0.5, 0.5]);
    let target = 0.25;
    let r = uniform_value_estimate(&ValueEngine::new(&spec, 1.0 / 32.0).unwrap(), &UniformConfig::new(8, 8)).unwrap();
    let est = r.estimate();
    let bracket = est.lower - AM_BRACKET <= target && target <= est.upper + AM_BRACKET && (cav - target).abs() < 1e-9;
    let t = start.elapsed();
    (
        v1_ok && mono && bracket && t < AM_TIME,
        format!(
            "v_1(1/2) in [{:.4}, {:.4}], monotone {mono}, estimate [{:.4}, {:.4}] vs cav u = {cav:.4}, {:.1}s",
            v1.lower, v1.upper, est.lower, est.upper, t.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Check {
    let thetas: Vec<ThetaWeights<f64>> = vec![
        ThetaWeights::dirac(1),
        ThetaWeights::uniform(2),
        ThetaWeights::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap(),
        ThetaWeights::from_pairs(&[(1, 0.2), (2, 0.3), (3, 0.5)]).unwrap(),
    ];
    let (mut pairs, mut fails, mut widest) = (0, 0, 0.0f64);
    let corpus = two_state_corpus::<f64>(22);
    let random = corpus.iter().filter(|(n, _)| n.starts_with("random")).count();
    for (_, spec) in &corpus {
        let e = engine(spec);
        for th in &thetas {
            let exact = value_theta_exact(e.aux(), th, e.initial_measure()).unwrap();
            let grid = e.value_initial(th).unwrap();
            pairs += 1;
            widest = widest.max(grid.gap());
            if !exact.intersects(&grid, CERT_TOL) {
                fails += 1;
            }
        }
    }
    (
        fails == 0 && random >= 20,
        format!("{pairs} pairs on {} instances ({random} random), {fails} disjoint, widest grid gap {widest:.4}", corpus.len()),
    )
}

fn criterion_4() -> Check {
    let (mut checks, mut violations) = (0, 0);
    let mut tightest = f64::INFINITY;
    for (_, spec) in full_corpus() {
        let e = engine(&spec);
        let u = e.initial_measure().clone();
        for n in 1..=3 {
            for t_ in 1..=3 {
                let lhs = e.value_on(&ThetaWeights::uniform(n * t_), &u).unwrap().lower;
                let rhs: f64 = (0..t_)
                    .map(|t| e.value_on(&ThetaWeights::uniform_range(n * t + 1, n * t + n), &u).unwrap().upper)
                    .sum::<f64>()
                    / t_ as f64;
                checks += 1;
                tightest = tightest.min(rhs - lhs);
                if lhs > rhs + CERT_TOL {
                    violations += 1;
                }
            }
        }
    }
    (
        violations == 0,
        format!("{checks} checks, {violations} violations, smallest margin {tightest:.2e}"),
    )
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut dominated, mut bad_choquet) = (0, 0);
    for r in 0..500 {
        let k = rng.gen_range(2..4);
        let u = small_measure(&mut rng, k);
        let v = if r % 2 == 0 { split(&mut rng, &u) } else { small_measure(&mut rng, k) };
        let (ok, _) = choquet_dominates(&u, &v).unwrap();
        if ok {
            dominated += 1;
            for _ in 0..20 {
                let f = concave(&mut rng, k);
                let fu = u.integrate(|p| eval_concave(&f, p));
                let fv = v.integrate(|p| eval_concave(&f, p));
                if fu < fv - CONCAVE_TOL {
                    bad_choquet += 1;
                }
            }
        } else if r % 2 == 0 {
            // A split of u must be detected.
            bad_choquet += 1;
        }
    }
    let mut bad_metric = 0;
    for _ in 0..500 {
        let k = rng.gen_range(2..4);
        let (u, v, w) = (small_measure(&mut rng, k), small_measure(&mut rng, k), small_measure(&mut rng, k));
        let d = |a: &BeliefMeasure<f64>, b: &BeliefMeasure<f64>| wasserstein(a, b).unwrap().0;
        let (p, q) = (belief(&mut rng, k), belief(&mut rng, k));
        let dirac = d(&BeliefMeasure::dirac(p.clone()), &BeliefMeasure::dirac(q.clone()));
        let ok = d(&u, &u) <= 1e-12
            && (d(&u, &v) - d(&v, &u)).abs() <= 1e-9
            && d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-9
            && (dirac - p.dist(&q)).abs() <= 1e-12;
        bad_metric += usize::from(!ok);
    }
    let mut bad_psi = 0;
    for _ in 0..200 {
        let (k, nd) = (rng.gen_range(2..4), rng.gen_range(2..5));
        let (q1, q2) = (joint(&mut rng, k, nd), joint(&mut rng, k, nd));
        let lam: f64 = rng.gen();
        let q: Vec<Vec<f64>> = q1
            .iter()
            .zip(&q2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect())
            .collect();
        let (m1, m2) = (disintegrate(&q1), disintegrate(&q2));
        let mixed = BeliefMeasure::mixture(&[(lam, &m1), (1.0 - lam, &m2)]).unwrap();
        bad_psi += usize::from(!choquet_dominates(&disintegrate(&q), &mixed).unwrap().0);
    }
    (
        bad_choquet + bad_metric + bad_psi == 0,
        format!(
            "choquet: {dominated}/500 dominated, {bad_choquet} bad; metric: {bad_metric}/500 bad; disintegration: {bad_psi}/200 bad"
        ),
    )
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let corpus = two_state_corpus::<f64>(10);
    let auxes: Vec<AuxGame<f64>> = corpus.iter().map(|(_, s)| AuxGame::new(s).unwrap()).collect();
    let (mut worst, mut not_dom) = (0.0f64, 0);
    for r in 0..200 {
        let aux = &auxes[r % auxes.len()];
        let parts = rng.gen_range(1..4);
        let lam = simplex_point(&mut rng, parts);
        let comps: Vec<(f64, Belief<f64>)> = lam.iter().map(|&l| (l, belief(&mut rng, aux.k))).collect();
        let p = Belief::normalized((0..aux.k).map(|s| comps.iter().map(|(l, q)| l * q[s]).sum()).collect());
        let acts: Vec<_> = (0..parts).map(|_| stacked(&mut rng, aux.k, aux.i)).collect();
        let a = splitting_action(&p, &comps, &acts).unwrap();
        let direct = aux.transition_marginal(&p, &a);
        for k2 in 0..aux.k {
            for d in 0..aux.num_signals() {
                let m: f64 = comps
                    .iter()
                    .zip(&acts)
                    .map(|((l, q), b)| l * aux.transition_marginal(q, b)[k2][d])
                    .sum();
                worst = worst.max((direct[k2][d] - m).abs());
            }
        }
        let laws: Vec<BeliefMeasure<f64>> =
            comps.iter().zip(&acts).map(|((_, q), b)| aux.belief_transition(q, b)).collect();
        let refs: Vec<(f64, &BeliefMeasure<f64>)> = comps.iter().map(|c| c.0).zip(laws.iter()).collect();
        let mix = BeliefMeasure::mixture(&refs).unwrap();
        not_dom += usize::from(!choquet_dominates(&aux.belief_transition(&p, &a), &mix).unwrap().0);
    }
    (
        worst <= SPLIT_TOL && not_dom == 0,
        format!("max mixture error {worst:.2e}, {not_dom}/200 not dominating"),
    )
}

fn criterion_7() -> Check {
    let mut ok = true;
    let mut shrinking = 0;
    let mut lines = Vec::new();
    let corpus = full_corpus();
    for (name, spec) in &corpus {
        let e = engine(spec);
        let r8 = uniform_value_estimate(&e, &UniformConfig::new(8, 8)).unwrap();
        let r16 = uniform_value_estimate(&e, &UniformConfig::new(16, 16)).unwrap();
        ok &= r8.supinf.lower <= r8.infsup.upper + r8.slack + CERT_TOL;
        let mid = |i: rgs_core::value::Interval<f64>| 0.5 * (i.lower + i.upper);
        let (g8, g16) = (mid(r8.infsup) - mid(r8.supinf), mid(r16.infsup) - mid(r16.supinf));
        shrinking += usize::from(g16 <= g8 + CERT_TOL);
        lines.push(format!(
            "    {name}: midpoint gap {g8:.4} at 8, {g16:.4} at 16; certificate width {:.4} then {:.4}",
            r8.slack, r16.slack
        ));
    }
    for l in &lines {
        println!("{l}");
    }
    (
        ok,
        format!("sup-inf below inf-sup on {} instances; midpoint gap not larger at 16 on {shrinking}", corpus.len()),
    )
}

fn criterion_8() -> Check {
    let n = 8;
    let spec = am_quadratic::<f64>();
    let e = ValueEngine::new(&spec, 1.0 / 64.0).unwrap();
    let aux = e.aux();
    let target = e.value_initial(&ThetaWeights::uniform(n)).unwrap().lower;
    let sigma = extract_p1_markov(&e, n, P1Mode::stationary_default(n)).unwrap();
    let mut p1 = true;
    for seed in [7, 8] {
        let cfg = PlayoutConfig::new(512, 200, seed);
        let r = guarantee_check_p1(&spec, aux, &sigma, target, AUDIT_EPS, &[64, 256, 512], &adversaries_against_p1(aux, seed), &cfg).unwrap();
        p1 &= r.pass;
    }

    let tau = build_p2_cyclic(&e, n).unwrap();
    let sup = (0..=8)
        .map(|m| e.value_initial(&ThetaWeights::uniform_range(m + 1, m + n)).unwrap().upper)
        .fold(0.0, f64::max);
    let mut advs = adversaries_against_p2(aux, 13);
    advs.push(Box::new(extract_p1_markov(&e, n, P1Mode::Finite).unwrap()));
    advs.push(Box::new(sigma.clone()));
    let r2 = guarantee_check_p2(&spec, aux, &tau, sup, P2_SLACK, &[n, 8 * n, 64 * n], &advs, &PlayoutConfig::new(512, 200, 7)).unwrap();

    let dom = am_dominant::<f64>();
    let ed = ValueEngine::new(&dom, 1.0 / 32.0).unwrap();
    let dtarget = ed.value_initial(&ThetaWeights::uniform(n)).unwrap().lower;
    let naive = uniform_p1(ed.aux());
    let rc = guarantee_check_p1(&dom, ed.aux(), &naive as &dyn Player1Policy<f64>, dtarget, AUDIT_EPS, &[64, 256, 512], &adversaries_against_p1(ed.aux(), 7), &PlayoutConfig::new(512, 200, 7)).unwrap();
    (
        p1 && r2.pass && !rc.pass,
        format!(
            "player 1 at {target:.4} - {AUDIT_EPS}: {p1}; player 2 cyclic at {sup:.4} + {P2_SLACK}: {}; negative control fails: {}",
            r2.pass, !rc.pass
        ),
    )
}

/// Best stationary policy of the known-state game by enumeration. Player 2
/// does not move the state, so against a fixed policy of player 1 its best
/// reply is the myopic one in each state.
fn stationary_policy_value(g: &[Vec<Vec<f64>>], kernel: &[Vec<Vec<f64>>], steps: usize) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..=steps {
        for b in 0..=steps {
            let x = [a as f64 / steps as f64, b as f64 / steps as f64];
            let mix = |k: usize| [x[k], 1.0 - x[k]];
            let reward = |k: usize| {
                (0..2)
                    .map(|j| (0..2).map(|i| mix(k)[i] * g[k][i][j]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            };
            let out = |k: usize, k2: usize| (0..2).map(|i| mix(k)[i] * kernel[k][i][k2]).sum::<f64>();
            let (p01, p10) = (out(0, 1), out(1, 0));
            let mu0 = if p01 + p10 > 0.0 { p10 / (p01 + p10) } else { 0.5 };
            best = best.max(mu0 * reward(0) + (1.0 - mu0) * reward(1));
        }
    }
    best
}

fn criterion_9() -> Check {
    let (g, kernel) = single_controller_data::<f64>();
    let oracle = stationary_policy_value(&g, &kernel, 400);
    let spec = single_controller_revealed::<f64>();
    let r = uniform_value_estimate(&engine(&spec), &UniformConfig::new(8, 8)).unwrap();
    let est = r.estimate();
    let dev = (est.lower - oracle).abs().max((est.upper - oracle).abs());
    (
        dev <= SC_TOL,
        format!("estimate [{:.4}, {:.4}], enumeration {oracle:.4}, deviation {dev:.4}", est.lower, est.upper),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 single-state collapse", criterion_1),
        ("2 quadratic reproduction", criterion_2),
        ("3 tree and grid agreement", criterion_3),
        ("4 block averaging bound", criterion_4),
        ("5 order and metric suites", criterion_5),
        ("6 splitting", criterion_6),
        ("7 inf-sup and sup-inf", criterion_7),
        ("8 simulation audits", criterion_8),
        ("9 single-controller cross-check", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let (ok, detail) = f();
        failed += usize::from(!ok);
        println!(
            "criterion {name}: {} ({detail}; {:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
