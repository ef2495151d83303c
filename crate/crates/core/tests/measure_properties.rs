mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgs_core::corpus::{am_quadratic, mc_switch, random_two_state};
use rgs_core::game::AuxGame;
use rgs_core::measures::{
    barycenter, choquet_dominates, disintegrate, eval_concave, splitting_action, wasserstein,
    Belief, BeliefMeasure, ChoquetCertificate,
};

fn mix(parts: &[(f64, &BeliefMeasure<f64>)]) -> BeliefMeasure<f64> {
    BeliefMeasure::mixture(parts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_measures_are_dominated(seed in any::<u64>(), k in 2usize..4, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = measure(&mut rng, k, n);
        let v = split(&mut rng, &u);
        let (ok, cert) = choquet_dominates(&u, &v).unwrap();
        prop_assert!(ok);
        prop_assert!(cert.coupling_residual(&u, &v).unwrap() < 1e-8);
        for _ in 0..10 {
            let f = concave(&mut rng, k);
            let fu = u.integrate(|p| eval_concave(&f, p));
            let fv = v.integrate(|p| eval_concave(&f, p));
            prop_assert!(fu >= fv - 1e-9);
        }
    }

    #[test]
    fn separators_witness_non_dominance(seed in any::<u64>(), k in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = small_measure(&mut rng, k);
        let v = small_measure(&mut rng, k);
        let (ok, cert) = choquet_dominates(&u, &v).unwrap();
        match cert {
            ChoquetCertificate::Coupling(_) => {
                prop_assert!(ok);
                prop_assert!(barycenter(&u).dist(&barycenter(&v)) < 1e-8);
            }
            ChoquetCertificate::Separator { pieces, u_value, v_value } => {
                prop_assert!(!ok);
                let fu = u.integrate(|p| eval_concave(&pieces, p));
                let fv = v.integrate(|p| eval_concave(&pieces, p));
                prop_assert!((fu - u_value).abs() < 1e-9 && (fv - v_value).abs() < 1e-9);
                prop_assert!(fu < fv);
            }
        }
    }

    #[test]
    fn wasserstein_is_a_metric(seed in any::<u64>(), k in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = small_measure(&mut rng, k);
        let v = small_measure(&mut rng, k);
        let w = small_measure(&mut rng, k);
        let d = |a: &BeliefMeasure<f64>, b: &BeliefMeasure<f64>| wasserstein(a, b).unwrap().0;
        prop_assert!(d(&u, &u) < 1e-12);
        prop_assert!((d(&u, &v) - d(&v, &u)).abs() < 1e-9);
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w) + 1e-9);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&d(&u, &v)));
        let (p, q) = (belief(&mut rng, k), belief(&mut rng, k));
        let dd = d(&BeliefMeasure::dirac(p.clone()), &BeliefMeasure::dirac(q.clone()));
        prop_assert!((dd - p.dist(&q)).abs() < 1e-12);
    }

    #[test]
    fn disintegration_is_concave(seed in any::<u64>(), k in 2usize..4, nd in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q1, q2) = (joint(&mut rng, k, nd), joint(&mut rng, k, nd));
        let lam: f64 = rng.gen_range(0.0..1.0);
        let q: Vec<Vec<f64>> = q1
            .iter()
            .zip(&q2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect())
            .collect();
        let (m1, m2) = (disintegrate(&q1), disintegrate(&q2));
        let mixed = mix(&[(lam, &m1), (1.0 - lam, &m2)]);
        let (ok, _) = choquet_dominates(&disintegrate(&q), &mixed).unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn splitting_reproduces_the_mixture(seed in any::<u64>(), which in 0u64..12, parts in 1usize..4) {
        let spec = match which {
            0 => am_quadratic(),
            1 => mc_switch(),
            s => random_two_state(s),
        };
        let aux = AuxGame::new(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lam = simplex_point(&mut rng, parts);
        let comps: Vec<(f64, Belief<f64>)> =
            lam.iter().map(|&l| (l, belief(&mut rng, aux.k))).collect();
        let p = Belief::normalized(
            (0..aux.k).map(|s| comps.iter().map(|(l, q)| l * q[s]).sum()).collect(),
        );
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
                prop_assert!((direct[k2][d] - m).abs() <= 1e-12);
            }
        }
        let laws: Vec<BeliefMeasure<f64>> =
            comps.iter().zip(&acts).map(|((_, q), b)| aux.belief_transition(q, b)).collect();
        let refs: Vec<(f64, &BeliefMeasure<f64>)> =
            comps.iter().map(|c| c.0).zip(laws.iter()).collect();
        let (ok, _) = choquet_dominates(&aux.belief_transition(&p, &a), &mix(&refs)).unwrap();
        prop_assert!(ok);
        let g: f64 = comps.iter().zip(&acts).map(|((l, q), b)| l * aux.payoff_vector(q, b)[0]).sum();
        prop_assert!((aux.payoff_vector(&p, &a)[0] - g).abs() < 1e-12);
    }
}
