//! Inequality systems for the broadcast-channel and source regions.
//!
//! Each builder turns one auxiliary choice into an exact polytope (or, for
//! the ten-coordinate comparison regions, a box corner). The entropy terms
//! are computed directly from the small marginals the inequalities need, so
//! these functions double as the optimizer's inner loop.

use serde::{Deserialize, Serialize};

use crate::channel::{AuxAssignment, BroadcastChannel, SourcePair};
use crate::error::{Error, Result};
use crate::prob::{conditional_mutual_information, entropy_of, CondPmf, JointPmf, Pmf};
use crate::region::{Halfspace, Polytope};

/// Auxiliary alphabet sizes `(|V0|, |V1|, |V2|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxCards {
    pub v0: usize,
    pub v1: usize,
    pub v2: usize,
}

impl AuxCards {
    pub fn new(v0: usize, v1: usize, v2: usize) -> Result<Self> {
        if v0 == 0 || v1 == 0 || v2 == 0 {
            return Err(Error::InvalidConfig("auxiliary cardinalities must be positive".into()));
        }
        Ok(Self { v0, v1, v2 })
    }

    /// `|V0| = n + 1`, `|Vi| = n`.
    pub fn desk_default(n: usize) -> Self {
        Self {
            v0: n + 1,
            v1: n,
            v2: n,
        }
    }

    /// Sizes sufficient for the inner bound: `|V0| = n + 4`, `|Vi| = n`.
    pub fn inner_bound(n: usize) -> Self {
        Self {
            v0: n + 4,
            v1: n,
            v2: n,
        }
    }

    /// Sizes sufficient for the outer bound: `|V0| = n + 5`, `|Vi| = n + 1`.
    pub fn outer_bound(n: usize) -> Self {
        Self {
            v0: n + 5,
            v1: n + 1,
            v2: n + 1,
        }
    }

    /// Sizes sufficient for the ten-coordinate regions: `|V0| = n + 5`, `|Vi| = n`.
    pub fn comparison_bound(n: usize) -> Self {
        Self {
            v0: n + 5,
            v1: n,
            v2: n,
        }
    }

    pub fn product(&self) -> usize {
        self.v0 * self.v1 * self.v2
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.v0, self.v1, self.v2]
    }
}

/// Information terms of a channel-side auxiliary triple `(V0, V1, V2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelTerms {
    pub i_v0_y1: f64,
    pub i_v0_y2: f64,
    pub i_v0v1_y1: f64,
    pub i_v0v2_y2: f64,
    pub i_v1_y1_g_v0: f64,
    pub i_v2_y2_g_v0: f64,
    pub i_x_y1_g_v0v2: f64,
    pub i_x_y2_g_v0v1: f64,
    pub i_v1_v2_g_v0: f64,
    pub i_x_y1: f64,
    pub i_x_y2: f64,
}

fn check_mi(v: f64) -> f64 {
    // Differences of entropies of nested marginals; tiny negatives are rounding.
    v.max(0.0)
}

impl ChannelTerms {
    /// `aux` holds one row of length `cards.product()` per input symbol,
    /// indexed `(v0 * |V1| + v1) * |V2| + v2`.
    pub fn compute(ch: &BroadcastChannel, px: &[f64], aux: &[f64], cards: AuxCards) -> Self {
        let (n0, n1, n2) = (cards.v0, cards.v1, cards.v2);
        let nv = n0 * n1 * n2;
        let (a, b) = (ch.ny1(), ch.ny2());
        let mut w = vec![0.0; nv];
        let mut q1 = vec![0.0; nv * a];
        let mut q2 = vec![0.0; nv * b];
        let mut y1 = vec![0.0; a];
        let mut y2 = vec![0.0; b];
        let (mut h1x, mut h2x) = (0.0, 0.0);
        for (x, &p) in px.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let r1 = ch.y1_row(x);
            let r2 = ch.y2_row(x);
            h1x += p * entropy_of(r1);
            h2x += p * entropy_of(r2);
            for (k, &pk) in r1.iter().enumerate() {
                y1[k] += p * pk;
            }
            for (k, &pk) in r2.iter().enumerate() {
                y2[k] += p * pk;
            }
            let row = &aux[x * nv..(x + 1) * nv];
            for (v, &pv) in row.iter().enumerate() {
                let m = p * pv;
                if m == 0.0 {
                    continue;
                }
                w[v] += m;
                for (k, &pk) in r1.iter().enumerate() {
                    q1[v * a + k] += m * pk;
                }
                for (k, &pk) in r2.iter().enumerate() {
                    q2[v * b + k] += m * pk;
                }
            }
        }
        let hy1 = entropy_of(&y1);
        let hy2 = entropy_of(&y2);

        // Marginals of w over (v0), (v0,v1), (v0,v2).
        let mut w0 = vec![0.0; n0];
        let mut w01 = vec![0.0; n0 * n1];
        let mut w02 = vec![0.0; n0 * n2];
        for v0 in 0..n0 {
            for v1 in 0..n1 {
                for v2 in 0..n2 {
                    let p = w[(v0 * n1 + v1) * n2 + v2];
                    w0[v0] += p;
                    w01[v0 * n1 + v1] += p;
                    w02[v0 * n2 + v2] += p;
                }
            }
        }
        let marg = |q: &[f64], ny: usize| {
            let mut m0 = vec![0.0; n0 * ny];
            let mut m01 = vec![0.0; n0 * n1 * ny];
            let mut m02 = vec![0.0; n0 * n2 * ny];
            for v0 in 0..n0 {
                for v1 in 0..n1 {
                    for v2 in 0..n2 {
                        let v = (v0 * n1 + v1) * n2 + v2;
                        for k in 0..ny {
                            let p = q[v * ny + k];
                            m0[v0 * ny + k] += p;
                            m01[(v0 * n1 + v1) * ny + k] += p;
                            m02[(v0 * n2 + v2) * ny + k] += p;
                        }
                    }
                }
            }
            (entropy_of(&m0), entropy_of(&m01), entropy_of(&m02))
        };
        let (h0y1, h01y1, h02y1) = marg(&q1, a);
        let (h0y2, h01y2, h02y2) = marg(&q2, b);
        let (h0, h01, h02, h012) = (
            entropy_of(&w0),
            entropy_of(&w01),
            entropy_of(&w02),
            entropy_of(&w),
        );

        let i_v0_y1 = check_mi(hy1 + h0 - h0y1);
        let i_v0_y2 = check_mi(hy2 + h0 - h0y2);
        let i_v0v1_y1 = check_mi(hy1 + h01 - h01y1).max(i_v0_y1);
        let i_v0v2_y2 = check_mi(hy2 + h02 - h02y2).max(i_v0_y2);
        Self {
            i_v0_y1,
            i_v0_y2,
            i_v0v1_y1,
            i_v0v2_y2,
            i_v1_y1_g_v0: check_mi(i_v0v1_y1 - i_v0_y1),
            i_v2_y2_g_v0: check_mi(i_v0v2_y2 - i_v0_y2),
            i_x_y1_g_v0v2: check_mi(h02y1 - h02 - h1x),
            i_x_y2_g_v0v1: check_mi(h01y2 - h01 - h2x),
            i_v1_v2_g_v0: check_mi(h01 + h02 - h012 - h0),
            i_x_y1: check_mi(hy1 - h1x),
            i_x_y2: check_mi(hy2 - h2x),
        }
    }

    /// Same terms from an [`AuxAssignment`] whose auxiliary has dims `[V0, V1, V2]`.
    pub fn from_assignment(ch: &BroadcastChannel, aux: &AuxAssignment) -> Result<Self> {
        let cards = channel_cards(ch, aux, 3)?;
        let cards = AuxCards::new(cards[0], cards[1], cards[2])?;
        Ok(Self::compute(ch, aux.input.probs(), aux.aux.probs(), cards))
    }

    /// `min{I(V0;Y1), I(V0;Y2)}`.
    pub fn common(&self) -> f64 {
        self.i_v0_y1.min(self.i_v0_y2)
    }
}

fn channel_cards(ch: &BroadcastChannel, aux: &AuxAssignment, want: usize) -> Result<Vec<usize>> {
    if aux.input.len() != ch.nx() || aux.aux.rows() != ch.nx() {
        return Err(Error::DimensionMismatch(format!(
            "assignment for {} inputs, channel has {}",
            aux.aux.rows(),
            ch.nx()
        )));
    }
    let dims = aux.aux.to_dims();
    if dims.len() != want {
        return Err(Error::DimensionMismatch(format!(
            "expected {want} auxiliary variables, got {}",
            dims.len()
        )));
    }
    Ok(dims.to_vec())
}

/// Information terms of a source-side auxiliary `U`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceTerms {
    pub i_u_s1: f64,
    pub i_u_s2: f64,
    pub h_s1: f64,
    pub h_s2: f64,
    pub h_s1_g_u: f64,
    pub h_s2_g_u: f64,
    pub h_s12_g_u: f64,
    pub h_s12: f64,
}

/// Precomputed source data for repeated [`SourceTerms`] evaluation.
#[derive(Debug, Clone)]
pub struct SourceContext {
    pub n1: usize,
    pub n2: usize,
    /// Support cells with their masses.
    pub cells: Vec<(usize, usize, f64)>,
    pub h1: f64,
    pub h2: f64,
    pub h12: f64,
}

impl SourceContext {
    pub fn new(src: &SourcePair) -> Self {
        Self {
            n1: src.n1(),
            n2: src.n2(),
            cells: src
                .support()
                .into_iter()
                .map(|(a, b)| (a, b, src.prob(a, b)))
                .collect(),
            h1: src.h1(),
            h2: src.h2(),
            h12: src.h12(),
        }
    }

    /// `aux` holds one row of length `nu` per support cell.
    pub fn terms(&self, aux: &[f64], nu: usize) -> SourceTerms {
        let mut pu = vec![0.0; nu];
        let mut pu1 = vec![0.0; nu * self.n1];
        let mut pu2 = vec![0.0; nu * self.n2];
        let mut pu12 = Vec::with_capacity(nu * self.cells.len());
        for (c, &(a, b, p)) in self.cells.iter().enumerate() {
            for u in 0..nu {
                let m = p * aux[c * nu + u];
                pu[u] += m;
                pu1[u * self.n1 + a] += m;
                pu2[u * self.n2 + b] += m;
                pu12.push(m);
            }
        }
        let hu = entropy_of(&pu);
        let h_s1_g_u = check_mi(entropy_of(&pu1) - hu).min(self.h1);
        let h_s2_g_u = check_mi(entropy_of(&pu2) - hu).min(self.h2);
        let h_s12_g_u = check_mi(entropy_of(&pu12) - hu).min(self.h12);
        SourceTerms {
            i_u_s1: check_mi(self.h1 - h_s1_g_u),
            i_u_s2: check_mi(self.h2 - h_s2_g_u),
            h_s1: self.h1,
            h_s2: self.h2,
            h_s1_g_u,
            h_s2_g_u,
            h_s12_g_u,
            h_s12: self.h12,
        }
    }

    /// Rows of a full `p(u | s1, s2)` restricted to the support cells.
    pub fn support_rows(&self, aux: &CondPmf) -> Result<Vec<f64>> {
        if aux.rows() != self.n1 * self.n2 || aux.to_dims().len() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "source auxiliary must map {} cells to one variable",
                self.n1 * self.n2
            )));
        }
        Ok(self
            .cells
            .iter()
            .flat_map(|&(a, b, _)| aux.row(a * self.n2 + b).iter().copied())
            .collect())
    }

    /// Expands support rows back to a full conditional (point mass at 0 off-support).
    pub fn full_aux(&self, rows: &[f64], nu: usize) -> CondPmf {
        let mut probs = vec![0.0; self.n1 * self.n2 * nu];
        for r in 0..self.n1 * self.n2 {
            probs[r * nu] = 1.0;
        }
        for (c, &(a, b, _)) in self.cells.iter().enumerate() {
            let r = a * self.n2 + b;
            probs[r * nu..(r + 1) * nu].copy_from_slice(&rows[c * nu..(c + 1) * nu]);
        }
        CondPmf::from_unchecked(vec![self.n1, self.n2], vec![nu], probs)
    }
}

/// Polytope `{R0 <= a, R0 + R1 <= b1, R0 + R2 <= b2, R0 + R1 + R2 <= c_j}`.
pub fn rate_polytope(a: f64, b1: f64, b2: f64, sums: &[f64]) -> Polytope {
    let mut ineqs = vec![
        Halfspace {
            normal: vec![1.0, 0.0, 0.0],
            bound: a,
        },
        Halfspace {
            normal: vec![1.0, 1.0, 0.0],
            bound: b1,
        },
        Halfspace {
            normal: vec![1.0, 0.0, 1.0],
            bound: b2,
        },
    ];
    for &c in sums {
        ineqs.push(Halfspace {
            normal: vec![1.0, 1.0, 1.0],
            bound: c,
        });
    }
    Polytope::new(3, ineqs).expect("rate polytope is bounded")
}

/// Support of [`rate_polytope`] in closed form.
///
/// For a fixed `R0` the remaining problem is a two-variable knapsack, and the
/// optimum over `R0` sits at one of its breakpoints.
pub fn rate_support(a: f64, b1: f64, b2: f64, c: f64, lambda: &[f64]) -> f64 {
    let top = a.min(b1).min(b2).min(c).max(0.0);
    let inner = |r0: f64| {
        let (u1, u2, s) = (b1 - r0, b2 - r0, c - r0);
        let (hi, lo, uhi, ulo) = if lambda[1] >= lambda[2] {
            (lambda[1], lambda[2], u1, u2)
        } else {
            (lambda[2], lambda[1], u2, u1)
        };
        let first = uhi.min(s).max(0.0);
        let second = ulo.min(s - first).max(0.0);
        lambda[0] * r0 + hi * first + lo * second
    };
    let mut best = inner(0.0).max(inner(top));
    let knee = b1 + b2 - c;
    if knee > 0.0 && knee < top {
        best = best.max(inner(knee));
    }
    best
}

/// `(a, b1, b2, c)` caps of the inner bound; `c` is clamped at zero.
pub fn cin_caps(t: &ChannelTerms) -> ([f64; 4], bool) {
    let m = t.common();
    let raw = m + t.i_v1_y1_g_v0 + t.i_v2_y2_g_v0 - t.i_v1_v2_g_v0;
    (
        [m, m + t.i_v1_y1_g_v0, m + t.i_v2_y2_g_v0, raw.max(0.0)],
        raw < 0.0,
    )
}

/// `(a, b1, b2, c1, c2)` caps of the outer bound.
pub fn cout_caps(t: &ChannelTerms) -> [f64; 5] {
    let m = t.common();
    [
        m,
        m + t.i_v1_y1_g_v0,
        m + t.i_v2_y2_g_v0,
        m + t.i_v1_y1_g_v0 + t.i_x_y2_g_v0v1,
        m + t.i_v2_y2_g_v0 + t.i_x_y1_g_v0v2,
    ]
}

/// `(a, b1, b2, c)` caps of the source region.
pub fn source_caps(s: &SourceTerms) -> [f64; 4] {
    let m = s.i_u_s1.min(s.i_u_s2);
    [m, m + s.h_s1_g_u, m + s.h_s2_g_u, m + s.h_s12_g_u]
}

/// `(R0 cap, R2 cap, sum cap)` of the degraded-message-set region, using V0 as V.
pub fn cd_caps(t: &ChannelTerms) -> [f64; 3] {
    [t.i_v0_y1, t.i_x_y2_g_v0v1, t.i_x_y2]
}

pub fn cd_polytope(caps: [f64; 3]) -> Polytope {
    Polytope::new(
        2,
        vec![
            Halfspace {
                normal: vec![1.0, 0.0],
                bound: caps[0],
            },
            Halfspace {
                normal: vec![0.0, 1.0],
                bound: caps[1],
            },
            Halfspace {
                normal: vec![1.0, 1.0],
                bound: caps[2],
            },
        ],
    )
    .expect("bounded")
}

pub fn cd_support(caps: [f64; 3], lambda: &[f64]) -> f64 {
    let [a, b, c] = caps;
    let top = a.min(c).max(0.0);
    let val = |r0: f64| lambda[0] * r0 + lambda[1] * b.min(c - r0).max(0.0);
    let mut best = val(0.0).max(val(top));
    let knee = c - b;
    if knee > 0.0 && knee < top {
        best = best.max(val(knee));
    }
    best
}

/// Inner-bound polytope for one assignment; the flag reports a clamped sum cap.
pub fn cin_constraints(ch: &BroadcastChannel, aux: &AuxAssignment) -> Result<(Polytope, bool)> {
    let t = ChannelTerms::from_assignment(ch, aux)?;
    let ([a, b1, b2, c], clamped) = cin_caps(&t);
    if clamped {
        log::debug!("inner-bound sum cap clamped at zero");
    }
    Ok((rate_polytope(a, b1, b2, &[c]), clamped))
}

pub fn cout_constraints(ch: &BroadcastChannel, aux: &AuxAssignment) -> Result<Polytope> {
    let t = ChannelTerms::from_assignment(ch, aux)?;
    let [a, b1, b2, c1, c2] = cout_caps(&t);
    Ok(rate_polytope(a, b1, b2, &[c1, c2]))
}

pub fn source_region_constraints(src: &SourcePair, aux_u: &CondPmf) -> Result<Polytope> {
    let ctx = SourceContext::new(src);
    let rows = ctx.support_rows(aux_u)?;
    let [a, b1, b2, c] = source_caps(&ctx.terms(&rows, aux_u.cols()));
    Ok(rate_polytope(a, b1, b2, &[c]))
}

/// Degraded-message-set polytope in `(R0, R2)`; `aux_v` has a single variable.
pub fn cd_constraints(ch: &BroadcastChannel, input: &Pmf, aux_v: &CondPmf) -> Result<Polytope> {
    let assignment = AuxAssignment {
        input: input.clone(),
        aux: aux_v.clone(),
    };
    let dims = channel_cards(ch, &assignment, 1)?;
    let t = ChannelTerms::compute(ch, input.probs(), aux_v.probs(), AuxCards::new(dims[0], 1, 1)?);
    Ok(cd_polytope(cd_caps(&t)))
}

/// Corner of the ten-coordinate channel box.
pub fn r10_corner_from_terms(t: &ChannelTerms) -> [f64; 10] {
    let c5 = t.i_v0_y1 + t.i_v2_y2_g_v0;
    let c6 = t.i_v0_y2 + t.i_v1_y1_g_v0;
    [
        t.i_v0_y1,
        t.i_v0_y2,
        t.i_v0v1_y1,
        t.i_v0v2_y2,
        c5,
        c6,
        t.i_v0v1_y1 + t.i_x_y2_g_v0v1,
        t.i_v0v2_y2 + t.i_x_y1_g_v0v2,
        c5 + t.i_x_y1_g_v0v2,
        c6 + t.i_x_y2_g_v0v1,
    ]
}

pub fn r10_channel_corner(ch: &BroadcastChannel, aux: &AuxAssignment) -> Result<[f64; 10]> {
    Ok(r10_corner_from_terms(&ChannelTerms::from_assignment(ch, aux)?))
}

/// Corner of the ten-coordinate lossless source box.
pub fn r10_source_corner_from_terms(s: &SourceTerms) -> [f64; 10] {
    let c7 = s.i_u_s1 + s.h_s12_g_u;
    let c8 = s.i_u_s2 + s.h_s12_g_u;
    [
        s.i_u_s1,
        s.i_u_s2,
        s.h_s1,
        s.h_s2,
        s.i_u_s1 + s.h_s2_g_u,
        s.i_u_s2 + s.h_s1_g_u,
        c7,
        c8,
        c7,
        c8,
    ]
}

pub fn r10_source_corner(src: &SourcePair, aux_u: &CondPmf) -> Result<[f64; 10]> {
    let ctx = SourceContext::new(src);
    let rows = ctx.support_rows(aux_u)?;
    Ok(r10_source_corner_from_terms(&ctx.terms(&rows, aux_u.cols())))
}

/// Lossy source corner: the channel formula with `(p_S, reconstruction channel)`.
pub fn r10_lossy_source_corner(
    p_s: &Pmf,
    virt: &BroadcastChannel,
    aux: &AuxAssignment,
) -> Result<[f64; 10]> {
    if aux.input != *p_s {
        return Err(Error::DimensionMismatch(
            "assignment input differs from the source law".into(),
        ));
    }
    r10_channel_corner(virt, aux)
}

/// A chain-sum pattern `sum_i I(W_{A_i}; Z_{a(i)} | W_{A_1 u ... u A_{i-1}})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub sets: Vec<Vec<usize>>,
    /// Receiver of each term, 1 or 2.
    pub receivers: Vec<u8>,
}

impl Pattern {
    pub fn new(sets: Vec<Vec<usize>>, receivers: Vec<u8>) -> Result<Self> {
        let p = Self { sets, receivers };
        p.validate(usize::MAX)?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    fn validate(&self, max_index: usize) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::MalformedPattern("k must be positive".into()));
        }
        if self.sets.len() != self.receivers.len() {
            return Err(Error::MalformedPattern(format!(
                "{} subsets but {} receivers",
                self.sets.len(),
                self.receivers.len()
            )));
        }
        if let Some(r) = self.receivers.iter().find(|&&r| r != 1 && r != 2) {
            return Err(Error::MalformedPattern(format!("receiver {r} is not 1 or 2")));
        }
        for s in &self.sets {
            if s.is_empty() {
                return Err(Error::MalformedPattern("empty subset".into()));
            }
            if let Some(&i) = s.iter().find(|&&i| i > max_index) {
                return Err(Error::MalformedPattern(format!(
                    "index {i} exceeds L = {max_index}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the chain sum on a joint over `(W_0..W_L, input, Z1, Z2)`.
    pub fn evaluate(&self, joint: &JointPmf) -> Result<f64> {
        let n = joint.num_vars();
        if n < 4 {
            return Err(Error::DimensionMismatch(
                "pattern joints need at least one auxiliary".into(),
            ));
        }
        let l = n - 4;
        self.validate(l)?;
        let mut seen: Vec<usize> = Vec::new();
        let mut total = 0.0;
        for (set, &r) in self.sets.iter().zip(&self.receivers) {
            let fresh: Vec<usize> = set
                .iter()
                .copied()
                .filter(|i| !seen.contains(i))
                .collect();
            let out = [l + 2 + r as usize - 1];
            if !fresh.is_empty() {
                total += conditional_mutual_information(joint, &fresh, &out, &seen)?;
            }
            seen.extend(fresh);
            seen.sort_unstable();
            seen.dedup();
        }
        Ok(total)
    }
}

/// Both chain sums of a pattern: source side and channel side.
pub fn lemma1_pair(
    joint_source: &JointPmf,
    joint_channel: &JointPmf,
    pat: &Pattern,
) -> Result<(f64, f64)> {
    if joint_source.num_vars() != joint_channel.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "source joint has {} variables, channel joint has {}",
            joint_source.num_vars(),
            joint_channel.num_vars()
        )));
    }
    Ok((pat.evaluate(joint_source)?, pat.evaluate(joint_channel)?))
}

fn pat(sets: &[&[usize]], receivers: &[u8]) -> Pattern {
    Pattern {
        sets: sets.iter().map(|s| s.to_vec()).collect(),
        receivers: receivers.to_vec(),
    }
}

/// The ten chain patterns over three auxiliaries `(W0, W1, W2)`.
pub fn chain_patterns() -> Vec<Pattern> {
    vec![
        pat(&[&[0]], &[1]),
        pat(&[&[0]], &[2]),
        pat(&[&[0, 1]], &[1]),
        pat(&[&[0, 2]], &[2]),
        pat(&[&[0], &[2]], &[1, 2]),
        pat(&[&[0], &[1]], &[2, 1]),
        pat(&[&[0, 1], &[2]], &[1, 2]),
        pat(&[&[0, 2], &[1]], &[2, 1]),
        pat(&[&[0], &[2], &[1]], &[1, 2, 1]),
        pat(&[&[0], &[1], &[2]], &[2, 1, 2]),
    ]
}

/// Patterns over four auxiliaries whose last one, `W3`, is a copy of the
/// input; they reproduce the ten box-corner coordinates entrywise.
pub fn corner_patterns() -> Vec<Pattern> {
    vec![
        pat(&[&[0]], &[1]),
        pat(&[&[0]], &[2]),
        pat(&[&[0, 1]], &[1]),
        pat(&[&[0, 2]], &[2]),
        pat(&[&[0], &[2]], &[1, 2]),
        pat(&[&[0], &[1]], &[2, 1]),
        pat(&[&[0, 1], &[3]], &[1, 2]),
        pat(&[&[0, 2], &[3]], &[2, 1]),
        pat(&[&[0], &[2], &[3]], &[1, 2, 1]),
        pat(&[&[0], &[1], &[3]], &[2, 1, 2]),
    ]
}

/// Appends a copy of the input to an auxiliary over `[V0, V1, V2]`.
pub fn with_input_copy(aux: &CondPmf) -> CondPmf {
    let nx = aux.rows();
    let na = aux.cols();
    let mut probs = vec![0.0; nx * na * nx];
    for x in 0..nx {
        for (v, &p) in aux.row(x).iter().enumerate() {
            probs[x * na * nx + v * nx + x] = p;
        }
    }
    let mut to = aux.to_dims().to_vec();
    to.push(nx);
    CondPmf::from_unchecked(aux.from_dims().to_vec(), to, probs)
}

/// Which inequality system a region sample is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    MartonInner,
    NairOuter,
    SourceRegion,
    DegradedCD,
    R10Channel,
    R10SourceLossless,
    R10SourceLossy,
    /// Capacity region of a deterministic channel (source-region formula on the outputs).
    DeterministicCapacity,
}

/// Input law of a channel region: fixed, or searched jointly with the auxiliaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputSpec {
    Fixed(Pmf),
    Search,
}

/// A region together with the channel or source it is computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegionKind {
    MartonInner {
        channel: BroadcastChannel,
        input: InputSpec,
        cards: AuxCards,
    },
    NairOuter {
        channel: BroadcastChannel,
        input: InputSpec,
        cards: AuxCards,
    },
    SourceRegion {
        source: SourcePair,
        u_card: usize,
    },
    DegradedCD {
        channel: BroadcastChannel,
        input: InputSpec,
        v_card: usize,
    },
    R10Channel {
        channel: BroadcastChannel,
        input: InputSpec,
        cards: AuxCards,
    },
    R10SourceLossless {
        source: SourcePair,
        u_card: usize,
    },
    R10SourceLossy {
        source_law: Pmf,
        reconstruction: BroadcastChannel,
        cards: AuxCards,
    },
    DeterministicCapacity {
        channel: BroadcastChannel,
        input: InputSpec,
        u_card: usize,
    },
}

impl RegionKind {
    pub fn tag(&self) -> RegionTag {
        match self {
            RegionKind::MartonInner { .. } => RegionTag::MartonInner,
            RegionKind::NairOuter { .. } => RegionTag::NairOuter,
            RegionKind::SourceRegion { .. } => RegionTag::SourceRegion,
            RegionKind::DegradedCD { .. } => RegionTag::DegradedCD,
            RegionKind::R10Channel { .. } => RegionTag::R10Channel,
            RegionKind::R10SourceLossless { .. } => RegionTag::R10SourceLossless,
            RegionKind::R10SourceLossy { .. } => RegionTag::R10SourceLossy,
            RegionKind::DeterministicCapacity { .. } => RegionTag::DeterministicCapacity,
        }
    }

    pub fn dim(&self) -> usize {
        match self.tag() {
            RegionTag::DegradedCD => 2,
            RegionTag::R10Channel | RegionTag::R10SourceLossless | RegionTag::R10SourceLossy => 10,
            _ => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_input = |ch: &BroadcastChannel, input: &InputSpec| match input {
            InputSpec::Fixed(p) if p.len() != ch.nx() => Err(Error::DimensionMismatch(format!(
                "input law has {} symbols, channel has {}",
                p.len(),
                ch.nx()
            ))),
            _ => Ok(()),
        };
        match self {
            RegionKind::MartonInner { channel, input, .. }
            | RegionKind::NairOuter { channel, input, .. }
            | RegionKind::R10Channel { channel, input, .. }
            | RegionKind::DegradedCD { channel, input, .. } => check_input(channel, input),
            RegionKind::DeterministicCapacity { channel, input, u_card } => {
                if !channel.is_deterministic() {
                    return Err(Error::UnsupportedChannel(
                        "capacity region is only available for deterministic channels".into(),
                    ));
                }
                if *u_card == 0 {
                    return Err(Error::InvalidConfig("|U| must be positive".into()));
                }
                check_input(channel, input)
            }
            RegionKind::SourceRegion { u_card, .. } | RegionKind::R10SourceLossless { u_card, .. } => {
                if *u_card == 0 {
                    return Err(Error::InvalidConfig("|U| must be positive".into()));
                }
                Ok(())
            }
            RegionKind::R10SourceLossy {
                source_law,
                reconstruction,
                ..
            } => {
                if source_law.len() != reconstruction.nx() {
                    return Err(Error::DimensionMismatch(
                        "source law and reconstruction channel disagree on |S|".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}
