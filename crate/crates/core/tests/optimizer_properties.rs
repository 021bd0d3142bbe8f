//! Search determinism, budget monotonicity and witness fidelity.

mod common;

use bcbound_core::bounds::{source_region_constraints, AuxCards, InputSpec, RegionKind};
use bcbound_core::channel::BroadcastChannel;
use bcbound_core::optimize::{optimize_simplex, sample_region, SearchConfig, SupportPool};
use bcbound_core::prob::{entropy_of, CondPmf};
use bcbound_core::region::{sample_directions, Direction};
use common::{dirichlet, random_channel, rng};
use proptest::prelude::*;

fn quick(seed: u64, restarts: usize) -> SearchConfig {
    SearchConfig {
        seed,
        restarts,
        local_iters: 60,
        ..SearchConfig::default()
    }
}

/// A non-concave objective on two simplices.
fn bumpy(ch: &BroadcastChannel) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |t: &[f64]| {
        let nx = ch.nx();
        let (i1, i2) = ch.input_informations(&t[..nx]);
        let q = &t[nx..];
        i1 - 0.7 * i2 + 0.3 * entropy_of(q) * (q[0] - 0.4).abs()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn doubling_restarts_extends_the_history(seed in any::<u64>(), r in 1usize..6) {
        let ch = random_channel(seed);
        let f = bumpy(&ch);
        let shape = [ch.nx(), 3];
        let a = optimize_simplex(&f, &shape, &quick(seed, r)).unwrap();
        let b = optimize_simplex(&f, &shape, &quick(seed, 2 * r)).unwrap();
        prop_assert!(b.best_value >= a.best_value);
        prop_assert_eq!(&b.history[..r], &a.history[..]);
    }

    #[test]
    fn best_point_reproduces_best_value(seed in any::<u64>()) {
        let ch = random_channel(seed);
        let f = bumpy(&ch);
        let res = optimize_simplex(&f, &[ch.nx(), 3], &quick(seed, 4)).unwrap();
        prop_assert!((f(&res.best_point) - res.best_value).abs() <= 1e-10);
        let s: f64 = res.best_point[..ch.nx()].iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let ch = random_channel(5);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let f = bumpy(&ch);
            let opt = optimize_simplex(&f, &[ch.nx(), 3], &quick(9, 8)).unwrap();
            let kind = RegionKind::NairOuter {
                channel: ch.clone(),
                input: InputSpec::Search,
                cards: AuxCards::desk_default(ch.nx()),
            };
            let region = sample_region(&kind, &sample_directions(3, 6, 9), &quick(9, 8)).unwrap();
            (opt, region)
        })
    };
    let (o1, r1) = run(1);
    let (o4, r4) = run(4);
    assert_eq!(o1, o4);
    assert_eq!(r1, r4);
}

#[test]
fn deterministic_candidates_are_exact_on_source_axes() {
    for seed in 0..10u64 {
        let mut r = rng(seed);
        let src = bcbound_core::channel::SourcePair::new(2, 2, dirichlet(&mut r, 4)).unwrap();
        for nu in 1..=4usize {
            let kind = RegionKind::SourceRegion {
                source: src.clone(),
                u_card: nu,
            };
            let cfg = SearchConfig {
                restarts: 0,
                ..SearchConfig::default()
            };
            let pool = SupportPool::new(&kind, &cfg).unwrap();
            for axis in 0..3 {
                let d = Direction::axis(3, axis);
                // every map from the four cells to U
                let mut best = f64::NEG_INFINITY;
                for code in 0..nu.pow(4) {
                    let u = CondPmf::deterministic(vec![2, 2], vec![nu], |s| code / nu.pow(s as u32) % nu).unwrap();
                    let poly = source_region_constraints(&src, &u).unwrap();
                    best = best.max(poly.support(&d));
                }
                let (got, _) = pool.support(d.lambda());
                assert!((got - best).abs() < 1e-12, "seed {seed} |U|={nu} axis {axis}: {got} vs {best}");
            }
        }
    }
}
