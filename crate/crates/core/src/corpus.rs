//! Named instances used by the tests, the acceptance suite and `rgs validate`.

use crate::game::{
    build_aumann_maschler, build_markov_chain_game, build_single_controller, Disclosure,
    GameError, Outcome, RepeatedGameSpec,
};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lit<T: Scalar>(m: &[&[f64]]) -> Vec<Vec<T>> {
    m.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect()
}

/// Repeats one matrix game; a single state and a single public signal.
pub fn single_state<T: Scalar>(m: &[Vec<T>]) -> Result<RepeatedGameSpec<T>, GameError> {
    build_aumann_maschler(&[m.to_vec()], &[T::one()])
}

/// Matrices of the single-state corpus.
pub fn single_state_matrices<T: Scalar>() -> Vec<(&'static str, Vec<Vec<T>>)> {
    vec![
        ("matching", lit(&[&[1.0, 0.0], &[0.0, 1.0]])),
        ("saddle", lit(&[&[0.3, 0.8], &[0.2, 0.1]])),
        ("skew3x2", lit(&[&[0.9, 0.1], &[0.2, 0.7], &[0.5, 0.5]])),
        ("rps", lit(&[&[0.5, 0.0, 1.0], &[1.0, 0.5, 0.0], &[0.0, 1.0, 0.5]])),
    ]
}

/// Two fixed states, player 1 informed, perfect monitoring; `cav u(1/2) = 1/4`.
pub fn am_quadratic<T: Scalar>() -> RepeatedGameSpec<T> {
    let g1 = lit(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let g2 = lit(&[&[0.0, 0.0], &[0.0, 1.0]]);
    build_aumann_maschler(&[g1, g2], &[T::lit(0.5), T::lit(0.5)]).expect("valid instance")
}

/// Player 1 earns 1 by matching the state, whatever player 2 does.
pub fn am_dominant<T: Scalar>() -> RepeatedGameSpec<T> {
    let g1 = lit(&[&[1.0, 1.0], &[0.0, 0.0]]);
    let g2 = lit(&[&[0.0, 0.0], &[1.0, 1.0]]);
    build_aumann_maschler(&[g1, g2], &[T::lit(0.5), T::lit(0.5)]).expect("valid instance")
}

/// Controlled two-state chain: action 1 tends to switch the hidden state.
pub fn mc_switch<T: Scalar>() -> RepeatedGameSpec<T> {
    let g1 = lit(&[&[0.9, 0.2], &[0.4, 0.6]]);
    let g2 = lit(&[&[0.1, 0.7], &[0.8, 0.3]]);
    let kernel = vec![
        lit(&[&[0.9, 0.1], &[0.3, 0.7]]),
        lit(&[&[0.2, 0.8], &[0.85, 0.15]]),
    ];
    build_markov_chain_game(&[g1, g2], &kernel, &[T::lit(0.5), T::lit(0.5)]).expect("valid instance")
}

/// Matrices and kernel of [`single_controller_revealed`].
pub fn single_controller_data<T: Scalar>() -> (Vec<Vec<Vec<T>>>, Vec<Vec<Vec<T>>>) {
    let g = vec![
        lit(&[&[0.8, 0.3], &[0.2, 0.6]]),
        lit(&[&[0.4, 0.9], &[0.7, 0.1]]),
    ];
    let kernel = vec![
        lit(&[&[0.7, 0.3], &[0.4, 0.6]]),
        lit(&[&[0.5, 0.5], &[0.2, 0.8]]),
    ];
    (g, kernel)
}

/// Single-controller stochastic game with the state publicly announced.
pub fn single_controller_revealed<T: Scalar>() -> RepeatedGameSpec<T> {
    let (g, kernel) = single_controller_data();
    build_single_controller(&g, &kernel, &[T::lit(0.5), T::lit(0.5)], Disclosure::Revealed)
        .expect("valid instance")
}

/// Random two-state, two-action instance. Every third seed has a kernel
/// that ignores player 1's action; every fifth discloses the state.
pub fn random_two_state<T: Scalar>(seed: u64) -> RepeatedGameSpec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mat = |rng: &mut ChaCha8Rng| -> Vec<Vec<T>> {
        (0..2)
            .map(|_| (0..2).map(|_| T::lit((rng.gen::<f64>() * 100.0).round() / 100.0)).collect())
            .collect()
    };
    let g = vec![mat(&mut rng), mat(&mut rng)];
    let row = |rng: &mut ChaCha8Rng| -> Vec<T> {
        let a = (rng.gen::<f64>() * 20.0).round() / 20.0;
        vec![T::lit(a), T::lit(1.0 - a)]
    };
    let uncontrolled = seed % 3 == 0;
    let kernel: Vec<Vec<Vec<T>>> = (0..2)
        .map(|_| {
            let r0 = row(&mut rng);
            let r1 = if uncontrolled { r0.clone() } else { row(&mut rng) };
            vec![r0, r1]
        })
        .collect();
    let p0 = T::lit(0.1 + 0.8 * (rng.gen::<f64>() * 16.0).round() / 16.0);
    let disclosure = if seed % 5 == 4 {
        Disclosure::Revealed
    } else {
        Disclosure::Hidden
    };
    build_single_controller(&g, &kernel, &[p0, T::one() - p0], disclosure).expect("valid instance")
}

/// A game that is not of the single-controller form: player 1's signal
/// omits the state.
pub fn uninformed_player1<T: Scalar>() -> RepeatedGameSpec<T> {
    let mut spec = am_quadratic::<T>();
    let fix = |o: &mut Outcome<T>| o.c = 0;
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                spec.transition_mut(k, i, j).iter_mut().for_each(fix);
            }
        }
    }
    spec
}

/// Every named instance with two or more states, plus `count` random ones.
pub fn two_state_corpus<T: Scalar>(count: usize) -> Vec<(String, RepeatedGameSpec<T>)> {
    let mut out = vec![
        ("am_quadratic".to_string(), am_quadratic()),
        ("am_dominant".to_string(), am_dominant()),
        ("mc_switch".to_string(), mc_switch()),
        ("single_controller".to_string(), single_controller_revealed()),
    ];
    for s in 0..count as u64 {
        out.push((format!("random_{s}"), random_two_state(s)));
    }
    out
}
