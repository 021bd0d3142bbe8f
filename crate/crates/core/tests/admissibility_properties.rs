//! Verdict structure of the admissibility checks: monotonicity in kappa,
//! consistency between checks, and witnesses that re-verify independently.

mod common;

use bcbound_core::admissibility::{
    check_ga_outer, check_markov_point, check_new_outer, lossy_necessary_check, CheckConfig, CheckReport,
    DistortionSpec,
};
use bcbound_core::bounds::{cout_caps, r10_source_corner, ChannelTerms, RegionKind};
use bcbound_core::channel::{BroadcastChannel, SourcePair};
use bcbound_core::optimize::SearchConfig;
use bcbound_core::prob::Pmf;
use bcbound_core::region::Status;
use common::{markov_source, rng, test_channel};
use rand::Rng;

fn fast() -> CheckConfig {
    CheckConfig {
        search: SearchConfig {
            restarts: 16,
            ..SearchConfig::default()
        },
        directions: Some(60),
        input_refinements: 6,
        ..CheckConfig::default()
    }
}

fn small_source(seed: u64) -> SourcePair {
    let mut r = rng(seed);
    let p: Vec<f64> = (0..4).map(|_| r.random::<f64>().powi(3) + 0.01).collect();
    let s: f64 = p.iter().sum();
    SourcePair::new(2, 2, p.iter().map(|x| x / s).collect()).unwrap()
}

const KAPPAS: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 4.0];

fn assert_monotone(reports: &[CheckReport]) {
    let mut held = false;
    for r in reports {
        assert!(
            !held || r.status().holds(),
            "{} holds below kappa = {} but not at it",
            r.check,
            r.kappa
        );
        held |= r.status().holds();
        let crit = r.critical_kappa.expect("ratio searches report a critical kappa");
        if r.status().holds() {
            assert!(crit <= r.kappa + 1e-12, "{}: critical {crit} above kappa {}", r.check, r.kappa);
        }
    }
}

/// Independent re-check of a certified GA report: the stored auxiliary
/// reproduces the channel caps and every load fits under them.
fn reverify_ga(src: &SourcePair, ch: &BroadcastChannel, rep: &CheckReport) {
    let w = rep.verdict.witness.as_ref().unwrap();
    let aux = w.aux.as_ref().expect("certified GA reports carry an auxiliary");
    let caps = cout_caps(&ChannelTerms::from_assignment(ch, aux).unwrap());
    let h0 = src.common_part().entropy();
    let loads = [h0, src.h1(), src.h2(), src.h12(), src.h12()];
    for (l, c) in loads.iter().zip(caps) {
        assert!(l - rep.kappa * c <= 1e-6 + 1e-10, "load {l} above {}", rep.kappa * c);
    }
    for (s, (l, c)) in rep.margins.iter().zip(loads.iter().zip(caps)) {
        assert!((s.lhs - l).abs() < 1e-10);
        assert!((s.rhs - rep.kappa * c).abs() < 1e-9);
    }
    assert!(rep.verdict.reverify(1e-10));
}

/// Independent re-check of a ten-coordinate violation: the source point is
/// the corner of the stored source auxiliary and the margin is what it says.
fn reverify_ten_violation(src: &SourcePair, rep: &CheckReport) {
    let w = rep.verdict.witness.as_ref().unwrap();
    let point = w.point.as_ref().unwrap();
    let aux = w.aux.as_ref().expect("violations carry the source auxiliary");
    let corner = r10_source_corner(src, &aux.aux).unwrap();
    for (a, b) in point.iter().zip(corner) {
        assert!((a - b).abs() < 1e-10);
    }
    let d = w.direction.as_ref().unwrap();
    let dot: f64 = d.iter().zip(point).map(|(a, b)| a * b).sum();
    assert!((dot - w.reference.unwrap() - w.margin).abs() < 1e-10);
    assert!(w.margin > 0.0);
}

#[test]
fn new_outer_is_monotone_in_kappa() {
    let cfg = fast();
    for seed in 0..4u64 {
        let src = if seed % 2 == 0 { markov_source(seed) } else { small_source(seed) };
        let ch = test_channel(seed + 40);
        let reports: Vec<CheckReport> = KAPPAS
            .iter()
            .map(|&k| check_new_outer(&src, &ch, k, &cfg).unwrap())
            .collect();
        assert_monotone(&reports);
        for r in &reports {
            if r.status() == Status::EvidenceViolated {
                reverify_ten_violation(&src, r);
            }
        }
    }
}

#[test]
fn point_checks_are_monotone_in_kappa() {
    let cfg = fast();
    for seed in 0..6u64 {
        let src = markov_source(seed + 7);
        let ch = test_channel(seed + 60);
        let ga: Vec<CheckReport> = KAPPAS.iter().map(|&k| check_ga_outer(&src, &ch, k, &cfg).unwrap()).collect();
        assert_monotone(&ga);
        for r in &ga {
            if r.status() == Status::CertifiedHolds {
                reverify_ga(&src, &ch, r);
            }
        }
        let pt: Vec<CheckReport> = KAPPAS
            .iter()
            .map(|&k| check_markov_point(&src, &ch, k, &cfg).unwrap())
            .collect();
        assert_monotone(&pt);
        for r in &pt {
            assert!(r.verdict.reverify(1e-10));
        }
    }
}

#[test]
fn ga_holds_whenever_new_outer_holds() {
    let cfg = fast();
    let mut new_held = 0;
    for seed in 0..8u64 {
        let src = small_source(seed + 100);
        let ch = test_channel(seed + 200);
        for kappa in [0.5, 1.0, 2.0] {
            let new = check_new_outer(&src, &ch, kappa, &cfg).unwrap();
            let ga = check_ga_outer(&src, &ch, kappa, &cfg).unwrap();
            if new.status().holds() {
                new_held += 1;
                assert_eq!(ga.status(), Status::CertifiedHolds, "seed {seed}, kappa {kappa}");
                reverify_ga(&src, &ch, &ga);
            }
        }
    }
    assert!(new_held > 0, "no instance exercised the implication");
}

#[test]
fn lossy_trivial_distortions_hold() {
    let cfg = fast();
    let ch = test_channel(3);
    // distortion budgets at the maximum: constant reconstructions suffice
    let src = small_source(5);
    let p = Pmf::new(src.probs().to_vec()).unwrap();
    let spec = DistortionSpec::hamming_pair(2, 2, 1.0, 1.0);
    let r = lossy_necessary_check(&p, &ch, 1.0, &spec, &cfg).unwrap();
    assert!(r.status().holds());
    // uniform bits with Hamming budgets 1/2: a constant guess meets them
    let uniform = Pmf::uniform(4);
    let spec = DistortionSpec::hamming_pair(2, 2, 0.5, 0.5);
    let constant = BroadcastChannel::deterministic(2, 2, 2, |_| (0, 0)).unwrap();
    let r = lossy_necessary_check(&uniform, &constant, 1.0, &spec, &cfg).unwrap();
    assert!(r.status().holds());
}

#[test]
fn kinds_serialize_round_trip() {
    let kind = RegionKind::SourceRegion {
        source: markov_source(1),
        u_card: 3,
    };
    let back: RegionKind = serde_json::from_str(&serde_json::to_string(&kind).unwrap()).unwrap();
    assert_eq!(back, kind);
}
