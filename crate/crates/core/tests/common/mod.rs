//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use bcbound_core::bounds::AuxCards;
use bcbound_core::channel::{AuxAssignment, BroadcastChannel, SourcePair};
use bcbound_core::prob::{CondPmf, Pmf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the simplex.
pub fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Entropy straight from the definition, in bits.
pub fn oracle_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Marginal of a row-major joint onto the listed variables, in listed order.
pub fn oracle_marginal(dims: &[usize], probs: &[f64], keep: &[usize]) -> Vec<f64> {
    let out_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let mut out = vec![0.0; out_dims.iter().product()];
    for (flat, &p) in probs.iter().enumerate() {
        let mut idx = vec![0; dims.len()];
        let mut r = flat;
        for k in (0..dims.len()).rev() {
            idx[k] = r % dims[k];
            r /= dims[k];
        }
        let mut o = 0;
        for (&k, &d) in keep.iter().zip(&out_dims) {
            o = o * d + idx[k];
        }
        out[o] += p;
    }
    out
}

pub fn oracle_joint_entropy(dims: &[usize], probs: &[f64], vars: &[usize]) -> f64 {
    if vars.is_empty() {
        return 0.0;
    }
    oracle_entropy(&oracle_marginal(dims, probs, vars))
}

/// `I(A;B|C)` by the four-entropy formula.
pub fn oracle_cmi(dims: &[usize], probs: &[f64], a: &[usize], b: &[usize], c: &[usize]) -> f64 {
    let cat = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
    let h = |v: &[usize]| oracle_joint_entropy(dims, probs, v);
    h(&cat(a, c)) + h(&cat(b, c)) - h(&cat(&cat(a, b), c)) - h(c)
}

/// Channel with every alphabet of size 2 or 3 and Dirichlet rows.
pub fn random_channel(seed: u64) -> BroadcastChannel {
    let mut r = rng(seed);
    let nx = r.random_range(2..=3);
    let n1 = r.random_range(2..=3);
    let n2 = r.random_range(2..=3);
    let mut p = Vec::new();
    for _ in 0..nx {
        p.extend(dirichlet(&mut r, n1 * n2));
    }
    BroadcastChannel::new(nx, n1, n2, p).unwrap()
}

/// Random input law and auxiliary `p(v0, v1, v2 | x)`.
pub fn random_aux(ch: &BroadcastChannel, cards: AuxCards, seed: u64) -> AuxAssignment {
    let mut r = rng(seed);
    let input = Pmf::new(dirichlet(&mut r, ch.nx())).unwrap();
    let mut probs = Vec::new();
    for _ in 0..ch.nx() {
        probs.extend(dirichlet(&mut r, cards.product()));
    }
    AuxAssignment {
        input,
        aux: CondPmf::new(vec![ch.nx()], cards.dims(), probs).unwrap(),
    }
}

/// A source that is Markov through its common part: block-diagonal, with
/// independent coordinates inside each block. All alphabets have size <= 3.
pub fn markov_source(seed: u64) -> SourcePair {
    let mut r = rng(seed);
    let n1 = r.random_range(2..=3);
    let n2 = r.random_range(2..=3);
    let k = r.random_range(1..=n1.min(n2));
    let mut blocks = |n: usize| -> Vec<usize> {
        (0..n)
            .map(|i| if i < k { i } else { r.random_range(0..k) })
            .collect()
    };
    let b1 = blocks(n1);
    let b2 = blocks(n2);
    let w1: Vec<f64> = (0..n1).map(|_| r.random::<f64>() + 0.05).collect();
    let w2: Vec<f64> = (0..n2).map(|_| r.random::<f64>() + 0.05).collect();
    let wb: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 0.05).collect();
    let mut p = vec![0.0; n1 * n2];
    for a in 0..n1 {
        for b in 0..n2 {
            if b1[a] != b2[b] {
                continue;
            }
            let blk = b1[a];
            let s1: f64 = (0..n1).filter(|&x| b1[x] == blk).map(|x| w1[x]).sum();
            let s2: f64 = (0..n2).filter(|&x| b2[x] == blk).map(|x| w2[x]).sum();
            p[a * n2 + b] = wb[blk] * w1[a] / s1 * w2[b] / s2;
        }
    }
    let t: f64 = p.iter().sum();
    SourcePair::new(n1, n2, p.iter().map(|x| x / t).collect()).unwrap()
}

/// A random deterministic channel (even seeds) or one mixed with 10% of a
/// random channel (odd seeds). Alphabets of size 2 or 3.
pub fn test_channel(seed: u64) -> BroadcastChannel {
    let mut r = rng(seed);
    let nx = r.random_range(2..=3);
    let n1 = r.random_range(2..=3);
    let n2 = r.random_range(2..=3);
    let map: Vec<(usize, usize)> = (0..nx)
        .map(|_| (r.random_range(0..n1), r.random_range(0..n2)))
        .collect();
    let det = BroadcastChannel::deterministic(nx, n1, n2, |x| map[x]).unwrap();
    if seed % 2 == 0 {
        return det;
    }
    let noise = BroadcastChannel::random(nx, n1, n2, seed).unwrap();
    let eps = 0.1;
    let mut p = Vec::new();
    for x in 0..nx {
        for (a, b) in det.row(x).iter().zip(noise.row(x)) {
            p.push((1.0 - eps) * a + eps * b);
        }
    }
    BroadcastChannel::new(nx, n1, n2, p).unwrap()
}

/// Set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for b in 0..=max {
            prefix.push(b);
            go(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

/// Finest labeling of the support cells that is a function of `s1` alone and
/// of `s2` alone: every partition of the S1 alphabet is tried and kept when a
/// consistent S2 labeling exists. Returns a block id per support cell
/// (row-major order) and the number of blocks.
pub fn oracle_common_part(src: &SourcePair) -> (Vec<usize>, usize) {
    let cells = src.support();
    let mut best: Option<(Vec<usize>, usize)> = None;
    for f in set_partitions(src.n1()) {
        let mut g: Vec<Option<usize>> = vec![None; src.n2()];
        let mut ok = true;
        for &(a, b) in &cells {
            match g[b] {
                Some(v) if v != f[a] => ok = false,
                _ => g[b] = Some(f[a]),
            }
        }
        if !ok {
            continue;
        }
        let mut labels: Vec<usize> = cells.iter().map(|&(a, _)| f[a]).collect();
        let mut distinct = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for l in &mut labels {
            *l = distinct.binary_search(l).unwrap();
        }
        if best.as_ref().is_none_or(|(_, k)| distinct.len() > *k) {
            best = Some((labels, distinct.len()));
        }
    }
    best.expect("the trivial labeling is always consistent")
}

/// Whether two labelings of the same cells induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
