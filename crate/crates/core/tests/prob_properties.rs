//! Information measures against direct-from-definition oracles.

mod common;

use bcbound_core::bounds::AuxCards;
use bcbound_core::channel::joint_from;
use bcbound_core::prob::{
    binary_entropy, binary_entropy_inverse, conditional_mutual_information, entropy_of, mutual_information,
    JointPmf, Pmf,
};
use common::{dirichlet, oracle_cmi, oracle_entropy, oracle_marginal, random_aux, random_channel, rng};
use proptest::prelude::*;
use rand::Rng;

fn random_joint(seed: u64, nvars: usize) -> JointPmf {
    let mut r = rng(seed);
    let dims: Vec<usize> = (0..nvars).map(|_| r.random_range(1..=4)).collect();
    let n = dims.iter().product();
    let mut p = dirichlet(&mut r, n);
    // sprinkle exact zeros so sparse joints are covered too
    if n > 2 && r.random_bool(0.5) {
        p[r.random_range(0..n)] = 0.0;
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
    }
    JointPmf::new(dims, p).unwrap()
}

#[test]
fn uniform_entropy_is_log_n() {
    for n in 1..=1024usize {
        let h = entropy_of(&vec![1.0 / n as f64; n]);
        assert!((h - (n as f64).log2()).abs() <= 1e-12, "n = {n}: {h}");
    }
}

#[test]
fn binary_entropy_round_trip_on_grid() {
    for i in 0..=10_000 {
        let h = i as f64 / 10_000.0;
        let p = binary_entropy_inverse(h).unwrap();
        assert!(p <= 0.5);
        let back = binary_entropy(p).unwrap();
        assert!((back - h).abs() <= 1e-12, "h = {h}: {back}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mutual_information_is_bounded(seed in any::<u64>()) {
        let j = random_joint(seed, 2);
        let i = mutual_information(&j, &[0], &[1]).unwrap();
        let ha = oracle_entropy(&oracle_marginal(j.dims(), j.probs(), &[0]));
        let hb = oracle_entropy(&oracle_marginal(j.dims(), j.probs(), &[1]));
        prop_assert!(i >= 0.0);
        prop_assert!(i <= ha.min(hb) + 1e-12);
        let want = oracle_cmi(j.dims(), j.probs(), &[0], &[1], &[]);
        prop_assert!((i - want.max(0.0)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn entropy_matches_definition(seed in any::<u64>(), nvars in 1usize..4) {
        let j = random_joint(seed, nvars);
        prop_assert!((j.entropy() - oracle_entropy(j.probs())).abs() < 1e-12);
        let keep: Vec<usize> = (0..nvars).rev().collect();
        let m = j.marginal(&keep).unwrap();
        let want = oracle_marginal(j.dims(), j.probs(), &keep);
        for (a, b) in m.probs().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_rule(seed in any::<u64>()) {
        let j = random_joint(seed, 3);
        let lhs = mutual_information(&j, &[0, 1], &[2]).unwrap();
        let rhs = mutual_information(&j, &[0], &[2]).unwrap()
            + conditional_mutual_information(&j, &[1], &[2], &[0]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn markov_chain_has_zero_conditional_information(seed in any::<u64>()) {
        // A - C - B: p(c) p(a|c) p(b|c), variables ordered (A, B, C)
        let mut r = rng(seed);
        let (na, nb, nc) = (r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4));
        let pc = dirichlet(&mut r, nc);
        let pa: Vec<Vec<f64>> = (0..nc).map(|_| dirichlet(&mut r, na)).collect();
        let pb: Vec<Vec<f64>> = (0..nc).map(|_| dirichlet(&mut r, nb)).collect();
        let mut p = Vec::with_capacity(na * nb * nc);
        for a in 0..na {
            for b in 0..nb {
                for c in 0..nc {
                    p.push(pc[c] * pa[c][a] * pb[c][b]);
                }
            }
        }
        let j = JointPmf::new(vec![na, nb, nc], p).unwrap();
        let i = conditional_mutual_information(&j, &[0], &[1], &[2]).unwrap();
        prop_assert!(i.abs() <= 1e-10);
    }

    #[test]
    fn joint_from_keeps_the_input_marginal(seed in any::<u64>()) {
        let ch = random_channel(seed);
        let a = random_aux(&ch, AuxCards::new(2, 2, 2).unwrap(), seed ^ 0x5eed);
        let j = joint_from(&a.input, &ch, &a.aux).unwrap();
        let px = oracle_marginal(j.dims(), j.probs(), &[3]);
        for (x, y) in px.iter().zip(a.input.probs()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let total: f64 = j.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_validation(v in proptest::collection::vec(0.0f64..1.0, 1..8)) {
        let s: f64 = v.iter().sum();
        prop_assume!(s > 1e-6);
        let p = Pmf::normalized(v.clone()).unwrap();
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.entropy() >= 0.0);
        prop_assert!(p.entropy() <= (v.len() as f64).log2() + 1e-12);
    }
}
