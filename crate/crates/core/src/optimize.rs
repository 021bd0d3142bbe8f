//! Heuristic maximization over products of probability simplices.
//!
//! The objectives here (support functions of unions of polytopes, slack of an
//! inequality system) are non-concave in the auxiliary conditionals, so every
//! value returned is a certified lower bound on the true maximum, not the
//! maximum itself. The search is deterministic for a fixed seed.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    cd_caps, cd_polytope, cd_support, cin_caps, cout_caps, r10_corner_from_terms,
    r10_source_corner_from_terms, rate_polytope, rate_support, source_caps, AuxCards,
    ChannelTerms, InputSpec, RegionKind, SourceContext, SourceTerms,
};
use crate::channel::{dirichlet_row, AuxAssignment, BroadcastChannel};
use crate::error::{Error, Result};
use crate::prob::{entropy_of, CondPmf, Pmf};
use crate::region::{dot, Direction, Polytope, RegionApprox, RegionMeta, Witness};

/// Search budget and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Random (Dirichlet) starting points. In [`optimize_simplex`] each one is
    /// climbed; in region sampling they join the shared candidate pool.
    pub restarts: usize,
    /// Points per edge of the deterministic simplex grid.
    pub grid_points: usize,
    /// Maximum sweeps of the local ascent.
    pub local_iters: usize,
    pub step_init: f64,
    pub step_min: f64,
    pub seed: u64,
    /// Wall-clock budget in seconds; remaining restarts are skipped once exceeded.
    pub time_budget: Option<f64>,
    /// Largest deterministic candidate set enumerated exhaustively.
    pub enumeration_cap: usize,
    /// Pool candidates climbed per direction in region sampling.
    pub polish: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            grid_points: 5,
            local_iters: 200,
            step_init: 0.5,
            step_min: 1e-4,
            seed: 1,
            time_budget: None,
            enumeration_cap: 1_000_000,
            polish: 4,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2");
        }
        if !(self.step_init > 0.0 && self.step_init <= 1.0) {
            return bad("step_init must lie in (0, 1]");
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step_init) {
            return bad("step_min must lie in (0, step_init]");
        }
        if self.polish == 0 {
            return bad("polish must be positive");
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return bad("time_budget must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub start_value: f64,
    pub end_value: f64,
    pub evaluations: u64,
    /// Candidates skipped because the objective was not finite.
    pub discarded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub history: Vec<RestartRecord>,
    pub evaluations: u64,
    /// Whether the deterministic candidate phase ran to completion.
    pub exhaustive: bool,
    /// Whether restarts were skipped because of the time budget.
    pub truncated: bool,
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Block offsets of a product of simplices.
fn offsets(shape: &[usize]) -> Vec<usize> {
    let mut o = Vec::with_capacity(shape.len() + 1);
    let mut acc = 0;
    o.push(0);
    for &s in shape {
        acc += s;
        o.push(acc);
    }
    o
}

fn random_point(rng: &mut ChaCha8Rng, shape: &[usize]) -> Vec<f64> {
    shape.iter().flat_map(|&n| dirichlet_row(rng, n)).collect()
}

fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Coordinate ascent: each move pulls one block toward a vertex of its simplex.
///
/// Returns the final point, its value, evaluations used and discarded
/// (non-finite) candidates.
pub fn local_ascent(
    objective: &(impl Fn(&[f64]) -> f64 + ?Sized),
    shape: &[usize],
    start: Vec<f64>,
    cfg: &SearchConfig,
) -> (Vec<f64>, f64, u64, u64) {
    let off = offsets(shape);
    let mut x = start;
    let mut fx = finite_or_neg_inf(objective(&x));
    let (mut evals, mut discarded) = (1u64, (!fx.is_finite()) as u64);
    let mut step = cfg.step_init;
    let mut saved = Vec::new();
    let mut iters = 0;
    while step >= cfg.step_min && iters < cfg.local_iters {
        iters += 1;
        let mut improved = false;
        for b in 0..shape.len() {
            let (lo, hi) = (off[b], off[b + 1]);
            if hi - lo < 2 {
                continue;
            }
            for k in lo..hi {
                if x[k] >= 1.0 - 1e-15 {
                    continue;
                }
                saved.clear();
                saved.extend_from_slice(&x[lo..hi]);
                for j in lo..hi {
                    x[j] *= 1.0 - step;
                }
                x[k] += step;
                let f = objective(&x);
                evals += 1;
                if !f.is_finite() {
                    discarded += 1;
                    x[lo..hi].copy_from_slice(&saved);
                } else if f > fx + 1e-15 {
                    fx = f;
                    improved = true;
                } else {
                    x[lo..hi].copy_from_slice(&saved);
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx, evals, discarded)
}

/// Number of grid points `{k/m}` on an `n`-simplex.
fn grid_count(n: usize, m: usize) -> f64 {
    // C(n + m - 1, m)
    let mut c = 1.0;
    for i in 0..m {
        c = c * (n + i) as f64 / (i + 1) as f64;
    }
    c
}

/// All points of the `n`-simplex with coordinates in `{0, 1/m, ..., 1}`.
pub fn simplex_grid(n: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(n, left - c, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, m, &mut Vec::new(), &mut out);
    out
}

fn product_points(per_block: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for block in per_block {
        out = out
            .into_iter()
            .flat_map(|p| {
                block.iter().map(move |b| {
                    let mut q = p.clone();
                    q.extend_from_slice(b);
                    q
                })
            })
            .collect();
    }
    out
}

/// Deterministic phase: the product grid if it fits the cap, else the product
/// of simplex vertices if that fits, else nothing.
fn deterministic_candidates(shape: &[usize], cfg: &SearchConfig) -> (Vec<Vec<f64>>, bool) {
    let m = cfg.grid_points - 1;
    let grid: f64 = shape.iter().map(|&n| grid_count(n, m)).product();
    if grid <= cfg.enumeration_cap as f64 {
        let blocks: Vec<_> = shape.iter().map(|&n| simplex_grid(n, m)).collect();
        return (product_points(&blocks), true);
    }
    let verts: f64 = shape.iter().map(|&n| n as f64).product();
    if verts <= cfg.enumeration_cap as f64 {
        let blocks: Vec<_> = shape.iter().map(|&n| simplex_grid(n, 1)).collect();
        return (product_points(&blocks), true);
    }
    (Vec::new(), false)
}

/// Multi-start maximization over a product of simplices with block sizes `shape`.
///
/// Phase 1 scores the deterministic grid (or vertex set); phase 2 climbs from
/// the best phase-1 point and from `restarts - 1` Dirichlet(1) draws. Ties
/// break toward the lower restart index.
pub fn optimize_simplex<F>(objective: F, shape: &[usize], cfg: &SearchConfig) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    optimize_simplex_seeded(objective, shape, cfg, &[])
}

/// [`optimize_simplex`] with extra deterministic starting candidates.
pub fn optimize_simplex_seeded<F>(
    objective: F,
    shape: &[usize],
    cfg: &SearchConfig,
    seeds: &[Vec<f64>],
) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::DimensionMismatch("empty simplex block".into()));
    }
    let total: usize = shape.iter().sum();
    if let Some(s) = seeds.iter().find(|s| s.len() != total) {
        return Err(Error::DimensionMismatch(format!(
            "seed of length {} for a search space of {total} coordinates",
            s.len()
        )));
    }
    let started = Instant::now();
    let (mut cands, exhaustive) = deterministic_candidates(shape, cfg);
    cands.extend(seeds.iter().cloned());
    let scored: Vec<f64> = cands
        .par_iter()
        .map(|c| finite_or_neg_inf(objective(c)))
        .collect();
    let mut evaluations = cands.len() as u64;
    let phase1 = scored
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ if v.is_finite() => Some((i, v)),
            _ => best,
        });

    let n_restarts = cfg.restarts.max(1);
    let budget = cfg.time_budget;
    let runs: Vec<Option<(Vec<f64>, f64, RestartRecord)>> = (0..n_restarts)
        .into_par_iter()
        .map(|r| {
            if budget.is_some_and(|t| started.elapsed().as_secs_f64() > t) {
                return None;
            }
            let start = match (r, phase1) {
                (0, Some((i, _))) => cands[i].clone(),
                _ => random_point(&mut restart_rng(cfg.seed, r as u64), shape),
            };
            let start_value = finite_or_neg_inf(objective(&start));
            let (x, fx, ev, disc) = local_ascent(&objective, shape, start, cfg);
            Some((
                x,
                fx,
                RestartRecord {
                    start_value,
                    end_value: fx,
                    evaluations: ev + 1,
                    discarded: disc,
                },
            ))
        })
        .collect();

    let truncated = runs.iter().any(Option::is_none);
    let mut best_value = f64::NEG_INFINITY;
    let mut best_point = phase1.map(|(i, _)| cands[i].clone());
    if let Some((_, v)) = phase1 {
        best_value = v;
    }
    let mut history = Vec::with_capacity(runs.len());
    for (x, fx, rec) in runs.into_iter().flatten() {
        evaluations += rec.evaluations;
        if fx > best_value {
            best_value = fx;
            best_point = Some(x);
        }
        history.push(rec);
    }
    let best_point = best_point.unwrap_or_else(|| {
        shape
            .iter()
            .flat_map(|&n| vec![1.0 / n as f64; n])
            .collect()
    });
    if truncated {
        log::warn!("time budget exhausted; some restarts skipped");
    }
    Ok(SearchResult {
        best_value,
        best_point,
        history,
        evaluations,
        exhaustive,
        truncated,
    })
}

/// Set partitions of `0..n` into at most `max_blocks` blocks, as
/// restricted-growth label vectors.
pub fn partitions(n: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, max_blocks: usize, cur: &mut Vec<usize>, used: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let top = (used + 1).min(max_blocks);
        for l in 0..top {
            cur.push(l);
            rec(n, max_blocks, cur, used.max(l + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 || max_blocks == 0 {
        return out;
    }
    rec(n, max_blocks, &mut Vec::new(), 0, &mut out);
    out
}

/// Number of partitions of an `n`-set into at most `k` blocks.
fn partition_count(n: usize, k: usize) -> f64 {
    // Stirling numbers of the second kind, summed.
    let mut s = vec![vec![0.0f64; k + 1]; n + 1];
    s[0][0] = 1.0;
    for i in 1..=n {
        for j in 1..=k.min(i) {
            s[i][j] = j as f64 * s[i - 1][j] + s[i - 1][j - 1];
        }
    }
    s[n].iter().sum()
}

/// Cheap partitions used when full enumeration is too large.
fn basic_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; n]];
    if k >= n {
        out.push((0..n).collect());
    }
    if k >= 2 {
        for i in 0..n {
            out.push((0..n).map(|j| (j == i) as usize).collect());
        }
    }
    out.dedup();
    out
}

fn partitions_capped(n: usize, k: usize, cap: f64) -> Vec<Vec<usize>> {
    if partition_count(n, k) <= cap {
        partitions(n, k)
    } else {
        basic_partitions(n, k)
    }
}

/// Channel-side deterministic auxiliaries: `Vj = f_j(X)` for partitions `f_j`.
fn channel_aux_candidates(nx: usize, cards: AuxCards, cap: usize) -> Vec<Vec<f64>> {
    let per = (cap as f64).cbrt().max(2.0);
    let p0 = partitions_capped(nx, cards.v0, per);
    let p1 = partitions_capped(nx, cards.v1, per);
    let p2 = partitions_capped(nx, cards.v2, per);
    let nv = cards.product();
    let mut out = Vec::with_capacity(p0.len() * p1.len() * p2.len());
    for f0 in &p0 {
        for f1 in &p1 {
            for f2 in &p2 {
                let mut rows = vec![0.0; nx * nv];
                for x in 0..nx {
                    rows[x * nv + (f0[x] * cards.v1 + f1[x]) * cards.v2 + f2[x]] = 1.0;
                }
                out.push(rows);
            }
        }
    }
    out
}

fn single_aux_candidates(n: usize, card: usize, cap: usize) -> Vec<Vec<f64>> {
    partitions_capped(n, card, cap as f64)
        .into_iter()
        .map(|f| {
            let mut rows = vec![0.0; n * card];
            for x in 0..n {
                rows[x * card + f[x]] = 1.0;
            }
            rows
        })
        .collect()
}

/// Source-side deterministic auxiliaries on the support cells:
/// `U = (f(S1), g(S2))`, partitions of the cells themselves (all of them
/// when few enough) and the common-part labelling.
/// Largest number of cell partitions enumerated for a source auxiliary.
const CELL_PARTITION_CAP: f64 = 4096.0;

fn source_aux_candidates(ctx: &SourceContext, nu: usize, cap: usize, common: &[usize]) -> Vec<Vec<f64>> {
    let per = (cap as f64).sqrt().max(2.0);
    let pf = partitions_capped(ctx.n1, nu, per);
    let pg = partitions_capped(ctx.n2, nu, per);
    let nc = ctx.cells.len();
    let mut out = Vec::new();
    for f in &pf {
        let kf = f.iter().max().map_or(1, |m| m + 1);
        for g in &pg {
            let kg = g.iter().max().map_or(1, |m| m + 1);
            if kf * kg > nu {
                continue;
            }
            let mut rows = vec![0.0; nc * nu];
            for (c, &(a, b, _)) in ctx.cells.iter().enumerate() {
                rows[c * nu + f[a] * kg + g[b]] = 1.0;
            }
            out.push(rows);
        }
    }
    for f in partitions_capped(nc, nu, CELL_PARTITION_CAP.min(cap as f64)) {
        let mut rows = vec![0.0; nc * nu];
        for (c, &l) in f.iter().enumerate() {
            rows[c * nu + l] = 1.0;
        }
        out.push(rows);
    }
    if common.iter().all(|&l| l < nu) {
        let mut rows = vec![0.0; nc * nu];
        for (c, &l) in common.iter().enumerate() {
            rows[c * nu + l] = 1.0;
        }
        out.push(rows);
    }
    // identity on cells when it fits
    if nc <= nu {
        let mut rows = vec![0.0; nc * nu];
        for c in 0..nc {
            rows[c * nu + c] = 1.0;
        }
        out.push(rows);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChannelMode {
    Inner,
    Outer,
    Degraded,
    Corner,
}

enum Body<'a> {
    Channel {
        ch: &'a BroadcastChannel,
        fixed: Option<&'a [f64]>,
        cards: AuxCards,
        mode: ChannelMode,
    },
    Source {
        ctx: SourceContext,
        nu: usize,
        corner: bool,
        common: Vec<usize>,
    },
    Capacity {
        ch: &'a BroadcastChannel,
        map: Vec<(usize, usize)>,
        fixed: Option<&'a [f64]>,
        nu: usize,
    },
}

/// Per-kind evaluation of auxiliary parameter vectors.
pub struct KindEvaluator<'a> {
    body: Body<'a>,
    shape: Vec<usize>,
    dim: usize,
}

impl<'a> KindEvaluator<'a> {
    pub fn new(kind: &'a RegionKind) -> Result<Self> {
        kind.validate()?;
        let fixed = |input: &'a InputSpec| match input {
            InputSpec::Fixed(p) => Some(p.probs()),
            InputSpec::Search => None,
        };
        let channel_shape = |nx: usize, block: usize, searched: bool| {
            let mut s = Vec::with_capacity(nx + 1);
            if searched {
                s.push(nx);
            }
            s.extend(std::iter::repeat_n(block, nx));
            s
        };
        let (body, shape) = match kind {
            RegionKind::MartonInner {
                channel,
                input,
                cards,
            }
            | RegionKind::NairOuter {
                channel,
                input,
                cards,
            }
            | RegionKind::R10Channel {
                channel,
                input,
                cards,
            } => {
                let mode = match kind {
                    RegionKind::MartonInner { .. } => ChannelMode::Inner,
                    RegionKind::NairOuter { .. } => ChannelMode::Outer,
                    _ => ChannelMode::Corner,
                };
                let f = fixed(input);
                (
                    Body::Channel {
                        ch: channel,
                        fixed: f,
                        cards: *cards,
                        mode,
                    },
                    channel_shape(channel.nx(), cards.product(), f.is_none()),
                )
            }
            RegionKind::DegradedCD {
                channel,
                input,
                v_card,
            } => {
                let f = fixed(input);
                let cards = AuxCards::new(*v_card, 1, 1)?;
                (
                    Body::Channel {
                        ch: channel,
                        fixed: f,
                        cards,
                        mode: ChannelMode::Degraded,
                    },
                    channel_shape(channel.nx(), *v_card, f.is_none()),
                )
            }
            RegionKind::R10SourceLossy {
                source_law,
                reconstruction,
                cards,
            } => (
                Body::Channel {
                    ch: reconstruction,
                    fixed: Some(source_law.probs()),
                    cards: *cards,
                    mode: ChannelMode::Corner,
                },
                channel_shape(reconstruction.nx(), cards.product(), false),
            ),
            RegionKind::SourceRegion { source, u_card }
            | RegionKind::R10SourceLossless { source, u_card } => {
                let ctx = SourceContext::new(source);
                let cp = source.common_part();
                let common = ctx
                    .cells
                    .iter()
                    .map(|&(a, b, _)| cp.label(a, b).expect("support cell"))
                    .collect();
                let n = ctx.cells.len();
                (
                    Body::Source {
                        ctx,
                        nu: *u_card,
                        corner: matches!(kind, RegionKind::R10SourceLossless { .. }),
                        common,
                    },
                    vec![*u_card; n],
                )
            }
            RegionKind::DeterministicCapacity {
                channel,
                input,
                u_card,
            } => {
                let f = fixed(input);
                (
                    Body::Capacity {
                        ch: channel,
                        map: channel.output_map().expect("validated deterministic"),
                        fixed: f,
                        nu: *u_card,
                    },
                    channel_shape(channel.nx(), *u_card, f.is_none()),
                )
            }
        };
        Ok(Self {
            body,
            shape,
            dim: kind.dim(),
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn split<'t>(&self, theta: &'t [f64], fixed: Option<&'t [f64]>, nx: usize) -> (&'t [f64], &'t [f64]) {
        match fixed {
            Some(p) => (p, theta),
            None => theta.split_at(nx),
        }
    }

    /// Region parameters of one auxiliary choice: the caps of the polytope,
    /// or the corner of the box.
    pub fn features(&self, theta: &[f64]) -> Vec<f64> {
        match &self.body {
            Body::Channel {
                ch,
                fixed,
                cards,
                mode,
            } => {
                let (px, aux) = self.split(theta, *fixed, ch.nx());
                let t = ChannelTerms::compute(ch, px, aux, *cards);
                match mode {
                    ChannelMode::Inner => cin_caps(&t).0.to_vec(),
                    ChannelMode::Outer => cout_caps(&t).to_vec(),
                    ChannelMode::Degraded => cd_caps(&t).to_vec(),
                    ChannelMode::Corner => r10_corner_from_terms(&t).to_vec(),
                }
            }
            Body::Source {
                ctx, nu, corner, ..
            } => {
                let s = ctx.terms(theta, *nu);
                if *corner {
                    r10_source_corner_from_terms(&s).to_vec()
                } else {
                    source_caps(&s).to_vec()
                }
            }
            Body::Capacity {
                ch, map, fixed, nu, ..
            } => {
                let (px, aux) = self.split(theta, *fixed, ch.nx());
                source_caps(&capacity_terms(map, ch.ny1(), ch.ny2(), px, aux, *nu)).to_vec()
            }
        }
    }

    /// Support of the region described by `features` in direction `lambda`.
    pub fn support(&self, features: &[f64], lambda: &[f64]) -> f64 {
        match features.len() {
            3 => cd_support([features[0], features[1], features[2]], lambda),
            4 => rate_support(features[0], features[1], features[2], features[3], lambda),
            5 => rate_support(
                features[0],
                features[1],
                features[2],
                features[3].min(features[4]),
                lambda,
            ),
            _ => dot(features, lambda),
        }
    }

    pub fn polytope(&self, features: &[f64]) -> Polytope {
        match features.len() {
            3 => cd_polytope([features[0], features[1], features[2]]),
            4 => rate_polytope(features[0], features[1], features[2], &[features[3]]),
            5 => rate_polytope(features[0], features[1], features[2], &features[3..]),
            _ => Polytope::boxed(features).expect("box"),
        }
    }

    /// Achievable points whose convex hull (with the origin side) is the polytope.
    pub fn extreme_points(&self, features: &[f64]) -> Vec<Vec<f64>> {
        if features.len() == 10 {
            return vec![features.to_vec()];
        }
        self.polytope(features)
            .vertices()
            .map(<[_]>::to_vec)
            .unwrap_or_default()
    }

    /// The auxiliary assignment encoded by `theta`.
    pub fn decode(&self, theta: &[f64]) -> Option<AuxAssignment> {
        match &self.body {
            Body::Channel {
                ch, fixed, cards, mode,
            } => {
                let (px, aux) = self.split(theta, *fixed, ch.nx());
                let to = if *mode == ChannelMode::Degraded {
                    vec![cards.v0]
                } else {
                    cards.dims()
                };
                Some(AuxAssignment {
                    input: Pmf::from_unchecked(px.to_vec()),
                    aux: CondPmf::from_unchecked(vec![ch.nx()], to, aux.to_vec()),
                })
            }
            Body::Source { ctx, nu, .. } => {
                let input = Pmf::from_unchecked(
                    (0..ctx.n1 * ctx.n2)
                        .map(|k| {
                            ctx.cells
                                .iter()
                                .find(|c| c.0 * ctx.n2 + c.1 == k)
                                .map_or(0.0, |c| c.2)
                        })
                        .collect(),
                );
                Some(AuxAssignment {
                    input,
                    aux: ctx.full_aux(theta, *nu),
                })
            }
            Body::Capacity {
                ch, fixed, nu, ..
            } => {
                let (px, aux) = self.split(theta, *fixed, ch.nx());
                Some(AuxAssignment {
                    input: Pmf::from_unchecked(px.to_vec()),
                    aux: CondPmf::from_unchecked(vec![ch.nx()], vec![*nu], aux.to_vec()),
                })
            }
        }
    }

    pub fn witness(&self, theta: &[f64]) -> Witness {
        Witness::new(self.polytope(&self.features(theta)), self.decode(theta))
    }

    /// Deterministic starting points: partition-based auxiliaries, crossed
    /// with a grid of input laws when the input is searched.
    pub fn structured_candidates(&self, cfg: &SearchConfig) -> Vec<Vec<f64>> {
        let cap = cfg.enumeration_cap.min(50_000);
        let inputs = |nx: usize, fixed: Option<&[f64]>| -> Vec<Vec<f64>> {
            match fixed {
                Some(_) => vec![Vec::new()],
                None => {
                    let mut g = simplex_grid(nx, cfg.grid_points - 1);
                    let u = vec![1.0 / nx as f64; nx];
                    if !g.contains(&u) {
                        g.push(u);
                    }
                    g
                }
            }
        };
        let cross = |px: Vec<Vec<f64>>, aux: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let aux = if px.len() * aux.len() > cap {
                aux.into_iter().take((cap / px.len()).max(1)).collect()
            } else {
                aux
            };
            px.iter()
                .flat_map(|p| {
                    aux.iter().map(move |a| {
                        let mut v = p.clone();
                        v.extend_from_slice(a);
                        v
                    })
                })
                .collect()
        };
        match &self.body {
            Body::Channel {
                ch, fixed, cards, ..
            } => {
                let px = inputs(ch.nx(), *fixed);
                let aux = channel_aux_candidates(ch.nx(), *cards, cap / px.len().max(1));
                cross(px, aux)
            }
            Body::Source {
                ctx, nu, common, ..
            } => source_aux_candidates(ctx, *nu, cap, common),
            Body::Capacity { ch, fixed, nu, .. } => {
                let px = inputs(ch.nx(), *fixed);
                let aux = single_aux_candidates(ch.nx(), *nu, cap / px.len().max(1));
                cross(px, aux)
            }
        }
    }
}

/// Source-region terms of the output pair of a deterministic channel.
fn capacity_terms(
    map: &[(usize, usize)],
    ny1: usize,
    ny2: usize,
    px: &[f64],
    aux: &[f64],
    nu: usize,
) -> SourceTerms {
    let m = ny1 * ny2;
    let mut puy = vec![0.0; nu * m];
    let mut py = vec![0.0; m];
    for (x, &p) in px.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let (a, b) = map[x];
        py[a * ny2 + b] += p;
        for u in 0..nu {
            puy[u * m + a * ny2 + b] += p * aux[x * nu + u];
        }
    }
    let mut pu = vec![0.0; nu];
    let mut pu1 = vec![0.0; nu * ny1];
    let mut pu2 = vec![0.0; nu * ny2];
    let mut p1 = vec![0.0; ny1];
    let mut p2 = vec![0.0; ny2];
    for a in 0..ny1 {
        for b in 0..ny2 {
            p1[a] += py[a * ny2 + b];
            p2[b] += py[a * ny2 + b];
            for u in 0..nu {
                let q = puy[u * m + a * ny2 + b];
                pu[u] += q;
                pu1[u * ny1 + a] += q;
                pu2[u * ny2 + b] += q;
            }
        }
    }
    let hu = entropy_of(&pu);
    let (h1, h2, h12) = (entropy_of(&p1), entropy_of(&p2), entropy_of(&py));
    let h_s1_g_u = (entropy_of(&pu1) - hu).clamp(0.0, h1);
    let h_s2_g_u = (entropy_of(&pu2) - hu).clamp(0.0, h2);
    let h_s12_g_u = (entropy_of(&puy) - hu).clamp(0.0, h12);
    SourceTerms {
        i_u_s1: (h1 - h_s1_g_u).max(0.0),
        i_u_s2: (h2 - h_s2_g_u).max(0.0),
        h_s1: h1,
        h_s2: h2,
        h_s1_g_u,
        h_s2_g_u,
        h_s12_g_u,
        h_s12: h12,
    }
}

/// A growing set of evaluated auxiliary choices for one region.
///
/// Support queries are answered from the pool; [`SupportPool::polish`]
/// climbs from the best pool members for a direction and adds the result, so
/// later queries in nearby directions benefit.
pub struct SupportPool<'a> {
    eval: KindEvaluator<'a>,
    cfg: SearchConfig,
    thetas: Vec<Vec<f64>>,
    feats: Vec<Vec<f64>>,
    pub evaluations: u64,
    pub exhaustive: bool,
}

impl<'a> SupportPool<'a> {
    pub fn new(kind: &'a RegionKind, cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let eval = KindEvaluator::new(kind)?;
        let mut thetas = eval.structured_candidates(cfg);
        let exhaustive = thetas.len() < cfg.enumeration_cap.min(50_000);
        for r in 0..cfg.restarts {
            thetas.push(random_point(&mut restart_rng(cfg.seed, r as u64), eval.shape()));
        }
        let feats: Vec<Vec<f64>> = thetas.par_iter().map(|t| eval.features(t)).collect();
        let keep: Vec<bool> = feats.iter().map(|f| f.iter().all(|x| x.is_finite())).collect();
        let (thetas, feats): (Vec<_>, Vec<_>) = thetas
            .into_iter()
            .zip(feats)
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(p, _)| p)
            .unzip();
        let evaluations = thetas.len() as u64;
        Ok(Self {
            eval,
            cfg: cfg.clone(),
            thetas,
            feats,
            evaluations,
            exhaustive,
        })
    }

    pub fn evaluator(&self) -> &KindEvaluator<'a> {
        &self.eval
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.feats[i]
    }

    pub fn theta(&self, i: usize) -> &[f64] {
        &self.thetas[i]
    }

    pub fn all_features(&self) -> &[Vec<f64>] {
        &self.feats
    }

    /// Best pool value and its index (lowest index on ties).
    pub fn support(&self, lambda: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, f) in self.feats.iter().enumerate() {
            let v = self.eval.support(f, lambda);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Adds an externally built candidate.
    pub fn insert(&mut self, theta: Vec<f64>) -> usize {
        let f = self.eval.features(&theta);
        self.evaluations += 1;
        self.thetas.push(theta);
        self.feats.push(f);
        self.thetas.len() - 1
    }

    /// Climbs from the top pool members for `lambda`; returns the best value
    /// and its pool index.
    pub fn polish(&mut self, lambda: &[f64]) -> (f64, usize) {
        let mut scored: Vec<(f64, usize)> = self
            .feats
            .iter()
            .enumerate()
            .map(|(i, f)| (self.eval.support(f, lambda), i))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let starts: Vec<usize> = scored.iter().take(self.cfg.polish).map(|s| s.1).collect();
        let eval = &self.eval;
        let obj = |t: &[f64]| eval.support(&eval.features(t), lambda);
        let shape = eval.shape().to_vec();
        let cfg = &self.cfg;
        let climbed: Vec<(Vec<f64>, f64, u64)> = starts
            .par_iter()
            .map(|&i| {
                let (x, fx, ev, _) = local_ascent(&obj, &shape, self.thetas[i].clone(), cfg);
                (x, fx, ev)
            })
            .collect();
        let (mut best_v, mut best_i) = scored.first().copied().unwrap_or((f64::NEG_INFINITY, 0));
        for (x, fx, ev) in climbed {
            self.evaluations += ev;
            if fx > best_v + 1e-15 {
                best_i = self.insert(x);
                best_v = self.eval.support(&self.feats[best_i], lambda);
            }
        }
        (best_v, best_i)
    }

    pub fn witness(&self, i: usize) -> Witness {
        self.eval.witness(&self.thetas[i])
    }
}

/// Best support value found in one direction, with its witness.
pub fn maximize_support(kind: &RegionKind, d: &Direction, cfg: &SearchConfig) -> Result<(f64, Witness)> {
    if d.dim() != kind.dim() {
        return Err(Error::DimensionMismatch(format!(
            "direction of dimension {} for a {}-dimensional region",
            d.dim(),
            kind.dim()
        )));
    }
    let mut pool = SupportPool::new(kind, cfg)?;
    let (_, i) = pool.polish(d.lambda());
    let w = pool.witness(i);
    Ok((w.support(d.lambda()), w))
}

/// Sampled approximation of a region over the given directions.
pub fn sample_region(kind: &RegionKind, dirs: &[Direction], cfg: &SearchConfig) -> Result<RegionApprox> {
    let dim = kind.dim();
    if let Some(d) = dirs.iter().find(|d| d.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "direction of dimension {} for a {dim}-dimensional region",
            d.dim()
        )));
    }
    let started = Instant::now();
    let mut pool = SupportPool::new(kind, cfg)?;
    for d in dirs {
        let over = cfg
            .time_budget
            .is_some_and(|t| started.elapsed().as_secs_f64() > t);
        if !over {
            pool.polish(d.lambda());
        }
    }
    let mut r = RegionApprox::new(
        dim,
        RegionMeta {
            label: format!("{:?}", kind.tag()),
            seed: cfg.seed,
            restarts: cfg.restarts,
            evaluations: pool.evaluations,
        },
    );
    for d in dirs {
        // A later polish may have found something better for an earlier direction.
        let (_, best) = pool.support(d.lambda());
        r.push_witness(d, pool.witness(best));
    }
    Ok(r)
}
