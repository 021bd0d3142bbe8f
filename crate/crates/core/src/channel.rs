//! Two-receiver broadcast channels, correlated source pairs, and the
//! constructions that link them.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{optimize_simplex, SearchConfig, SearchResult};
use crate::prob::{
    binary_entropy_inverse, conditional_mutual_information, entropy_of, solve_monotone_root,
    CondPmf, JointPmf, Pmf, ROOT_TOL,
};

/// Row-sum tolerance accepted when loading files.
pub const LOAD_TOL: f64 = 1e-9;

fn normalize_row(row: &mut [f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries must be finite and nonnegative"
        )));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > LOAD_TOL {
        return Err(Error::InvalidDistribution(format!("{what}: sums to {s}")));
    }
    if (s - 1.0).abs() > 1e-15 {
        log::warn!("{what}: sums to {s}, renormalizing");
        for p in row.iter_mut() {
            *p /= s;
        }
    }
    Ok(())
}

/// A broadcast channel `p(y1, y2 | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelFile", into = "ChannelFile")]
pub struct BroadcastChannel {
    nx: usize,
    ny1: usize,
    ny2: usize,
    /// Indexed `[x][y1][y2]`.
    probs: Vec<f64>,
    /// `p(y1 | x)`, indexed `[x][y1]`.
    y1_given_x: Vec<f64>,
    /// `p(y2 | x)`, indexed `[x][y2]`.
    y2_given_x: Vec<f64>,
}

/// On-disk layout of a channel: `probs[x][y1][y2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub probs: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<ChannelFile> for BroadcastChannel {
    type Error = Error;
    fn try_from(f: ChannelFile) -> Result<Self> {
        let nx = f.probs.len();
        let ny1 = f.probs.first().map_or(0, Vec::len);
        let ny2 = f.probs.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(nx * ny1 * ny2);
        for (x, block) in f.probs.iter().enumerate() {
            if block.len() != ny1 || block.iter().any(|r| r.len() != ny2) {
                return Err(Error::DimensionMismatch(format!(
                    "channel row {x} is ragged"
                )));
            }
            let mut row: Vec<f64> = block.iter().flatten().copied().collect();
            normalize_row(&mut row, &format!("channel row {x}"))?;
            flat.extend(row);
        }
        BroadcastChannel::new(nx, ny1, ny2, flat)
    }
}

impl From<BroadcastChannel> for ChannelFile {
    fn from(c: BroadcastChannel) -> Self {
        let probs = (0..c.nx)
            .map(|x| {
                (0..c.ny1)
                    .map(|a| (0..c.ny2).map(|b| c.prob(x, a, b)).collect())
                    .collect()
            })
            .collect();
        ChannelFile { probs }
    }
}

impl BroadcastChannel {
    /// `probs` is indexed `[x][y1][y2]`; each x-row must sum to one.
    pub fn new(nx: usize, ny1: usize, ny2: usize, probs: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny1 == 0 || ny2 == 0 {
            return Err(Error::DimensionMismatch("empty channel alphabet".into()));
        }
        CondPmf::new(vec![nx], vec![ny1, ny2], probs.clone())?;
        let mut y1_given_x = vec![0.0; nx * ny1];
        let mut y2_given_x = vec![0.0; nx * ny2];
        for x in 0..nx {
            for a in 0..ny1 {
                for b in 0..ny2 {
                    let p = probs[(x * ny1 + a) * ny2 + b];
                    y1_given_x[x * ny1 + a] += p;
                    y2_given_x[x * ny2 + b] += p;
                }
            }
        }
        Ok(Self {
            nx,
            ny1,
            ny2,
            probs,
            y1_given_x,
            y2_given_x,
        })
    }

    /// Channel with `(y1, y2) = f(x)`.
    pub fn deterministic(
        nx: usize,
        ny1: usize,
        ny2: usize,
        f: impl Fn(usize) -> (usize, usize),
    ) -> Result<Self> {
        let mut probs = vec![0.0; nx * ny1 * ny2];
        for x in 0..nx {
            let (a, b) = f(x);
            if a >= ny1 || b >= ny2 {
                return Err(Error::DimensionMismatch(format!(
                    "input {x} maps outside the output alphabets"
                )));
            }
            probs[(x * ny1 + a) * ny2 + b] = 1.0;
        }
        Self::new(nx, ny1, ny2, probs)
    }

    /// Outputs that are conditionally independent given the input.
    pub fn from_marginals(y1_given_x: &CondPmf, y2_given_x: &CondPmf) -> Result<Self> {
        let nx = y1_given_x.rows();
        if y2_given_x.rows() != nx {
            return Err(Error::DimensionMismatch(
                "marginal channels have different input alphabets".into(),
            ));
        }
        let (ny1, ny2) = (y1_given_x.cols(), y2_given_x.cols());
        let mut probs = Vec::with_capacity(nx * ny1 * ny2);
        for x in 0..nx {
            for &a in y1_given_x.row(x) {
                for &b in y2_given_x.row(x) {
                    probs.push(a * b);
                }
            }
        }
        Self::new(nx, ny1, ny2, probs)
    }

    /// The deterministic channel `0 -> (0,0), 1 -> (1,1), 2 -> (0,1)`.
    pub fn blackwell() -> Self {
        Self::deterministic(3, 2, 2, |x| [(0, 0), (1, 1), (0, 1)][x]).expect("valid map")
    }

    /// Both receivers see the `bits`-bit input noiselessly.
    pub fn clean_pipe(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 8 {
            return Err(Error::OutOfRange {
                what: "bits",
                value: bits as f64,
                range: "1..=8".into(),
            });
        }
        let n = 1usize << bits;
        Self::deterministic(n, n, n, |x| (x, x))
    }

    /// Rows drawn uniformly from the simplex.
    pub fn random(nx: usize, ny1: usize, ny2: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ny1 * ny2;
        let mut probs = Vec::with_capacity(nx * m);
        for _ in 0..nx {
            probs.extend(dirichlet_row(&mut rng, m));
        }
        Self::new(nx, ny1, ny2, probs)
    }

    /// Independent binary symmetric links with crossover `p1`, `p2`.
    pub fn binary_symmetric(p1: f64, p2: f64) -> Result<Self> {
        for (what, p) in [("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange {
                    what,
                    value: p,
                    range: "[0, 1]".into(),
                });
            }
        }
        let bsc = |p: f64| CondPmf::new(vec![2], vec![2], vec![1.0 - p, p, p, 1.0 - p]);
        Self::from_marginals(&bsc(p1)?, &bsc(p2)?)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny1(&self) -> usize {
        self.ny1
    }

    pub fn ny2(&self) -> usize {
        self.ny2
    }

    pub fn prob(&self, x: usize, y1: usize, y2: usize) -> f64 {
        self.probs[(x * self.ny1 + y1) * self.ny2 + y2]
    }

    /// `p(y1, y2 | x)` flattened over `(y1, y2)`.
    pub fn row(&self, x: usize) -> &[f64] {
        let m = self.ny1 * self.ny2;
        &self.probs[x * m..(x + 1) * m]
    }

    pub fn y1_row(&self, x: usize) -> &[f64] {
        &self.y1_given_x[x * self.ny1..(x + 1) * self.ny1]
    }

    pub fn y2_row(&self, x: usize) -> &[f64] {
        &self.y2_given_x[x * self.ny2..(x + 1) * self.ny2]
    }

    /// The output pair of each input, if every row is a point mass.
    pub fn output_map(&self) -> Option<Vec<(usize, usize)>> {
        (0..self.nx)
            .map(|x| {
                let row = self.row(x);
                let k = row.iter().position(|&p| p > 1.0 - 1e-12)?;
                Some((k / self.ny2, k % self.ny2))
            })
            .collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.output_map().is_some()
    }

    /// The channel with the two receivers swapped.
    pub fn swapped(&self) -> Self {
        let mut probs = vec![0.0; self.probs.len()];
        for x in 0..self.nx {
            for a in 0..self.ny1 {
                for b in 0..self.ny2 {
                    probs[(x * self.ny2 + b) * self.ny1 + a] = self.prob(x, a, b);
                }
            }
        }
        Self::new(self.nx, self.ny2, self.ny1, probs).expect("permuted rows stay stochastic")
    }

    /// I(X;Y1) and I(X;Y2) under `input`.
    pub fn input_informations(&self, input: &[f64]) -> (f64, f64) {
        let mut y1 = vec![0.0; self.ny1];
        let mut y2 = vec![0.0; self.ny2];
        let (mut h1, mut h2) = (0.0, 0.0);
        for (x, &px) in input.iter().enumerate() {
            if px <= 0.0 {
                continue;
            }
            for (a, &p) in self.y1_row(x).iter().enumerate() {
                y1[a] += px * p;
            }
            for (b, &p) in self.y2_row(x).iter().enumerate() {
                y2[b] += px * p;
            }
            h1 += px * entropy_of(self.y1_row(x));
            h2 += px * entropy_of(self.y2_row(x));
        }
        (
            (entropy_of(&y1) - h1).max(0.0),
            (entropy_of(&y2) - h2).max(0.0),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ChannelFile = serde_json::from_str(s)
            .map_err(|e| Error::InvalidDistribution(format!("channel file: {e}")))?;
        f.try_into()
    }
}

pub(crate) fn dirichlet_row(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// The Gács–Körner common part of a source pair.
///
/// Values are connected components of the bipartite support graph, numbered
/// in order of first appearance when scanning cells row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonPart {
    /// Component of each S1 value (`None` if the value has zero mass).
    pub s1_label: Vec<Option<usize>>,
    /// Component of each S2 value.
    pub s2_label: Vec<Option<usize>>,
    pub pmf: Pmf,
}

impl CommonPart {
    pub fn num_values(&self) -> usize {
        self.pmf.len()
    }

    pub fn entropy(&self) -> f64 {
        self.pmf.entropy()
    }

    /// Component of a support cell.
    pub fn label(&self, s1: usize, s2: usize) -> Option<usize> {
        match (self.s1_label[s1], self.s2_label[s2]) {
            (Some(a), Some(b)) if a == b => Some(a),
            _ => None,
        }
    }
}

/// A joint source `p(s1, s2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SourceFile", into = "SourceFile")]
pub struct SourcePair {
    n1: usize,
    n2: usize,
    /// Indexed `[s1][s2]`.
    probs: Vec<f64>,
    #[serde(skip)]
    common: OnceLock<CommonPart>,
}

impl PartialEq for SourcePair {
    fn eq(&self, other: &Self) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2 && self.probs == other.probs
    }
}

/// On-disk layout of a source: `probs[s1][s2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceFile {
    pub probs: Vec<Vec<f64>>,
}

impl TryFrom<SourceFile> for SourcePair {
    type Error = Error;
    fn try_from(f: SourceFile) -> Result<Self> {
        let n1 = f.probs.len();
        let n2 = f.probs.first().map_or(0, Vec::len);
        if f.probs.iter().any(|r| r.len() != n2) {
            return Err(Error::DimensionMismatch("source table is ragged".into()));
        }
        let mut flat: Vec<f64> = f.probs.into_iter().flatten().collect();
        normalize_row(&mut flat, "source table")?;
        SourcePair::new(n1, n2, flat)
    }
}

impl From<SourcePair> for SourceFile {
    fn from(s: SourcePair) -> Self {
        SourceFile {
            probs: s.probs.chunks(s.n2).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl SourcePair {
    pub fn new(n1: usize, n2: usize, probs: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::DimensionMismatch("empty source alphabet".into()));
        }
        if probs.len() != n1 * n2 {
            return Err(Error::DimensionMismatch(format!(
                "{n1} x {n2} source needs {} entries, got {}",
                n1 * n2,
                probs.len()
            )));
        }
        if probs.iter().all(|&p| p == 0.0) {
            return Err(Error::EmptySupport);
        }
        Pmf::new(probs.clone())?;
        Ok(Self {
            n1,
            n2,
            probs,
            common: OnceLock::new(),
        })
    }

    pub fn from_joint(j: &JointPmf) -> Result<Self> {
        if j.num_vars() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "source joint must have 2 variables, got {}",
                j.num_vars()
            )));
        }
        Self::new(j.dims()[0], j.dims()[1], j.probs().to_vec())
    }

    /// Independent components.
    pub fn product(p1: &Pmf, p2: &Pmf) -> Self {
        let probs = p1
            .probs()
            .iter()
            .flat_map(|&a| p2.probs().iter().map(move |&b| a * b))
            .collect();
        Self::new(p1.len(), p2.len(), probs).expect("product of pmfs is a pmf")
    }

    pub fn random(n1: usize, n2: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(n1, n2, dirichlet_row(&mut rng, n1 * n2))
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn prob(&self, s1: usize, s2: usize) -> f64 {
        self.probs[s1 * self.n2 + s2]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn joint(&self) -> JointPmf {
        JointPmf::from_unchecked(vec![self.n1, self.n2], self.probs.clone())
    }

    pub fn marginal1(&self) -> Vec<f64> {
        self.probs.chunks(self.n2).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal2(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n2];
        for r in self.probs.chunks(self.n2) {
            for (b, &p) in r.iter().enumerate() {
                m[b] += p;
            }
        }
        m
    }

    pub fn h1(&self) -> f64 {
        entropy_of(&self.marginal1())
    }

    pub fn h2(&self) -> f64 {
        entropy_of(&self.marginal2())
    }

    pub fn h12(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// Support cells `(s1, s2)` in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.n1 * self.n2)
            .filter(|&k| self.probs[k] > 0.0)
            .map(|k| (k / self.n2, k % self.n2))
            .collect()
    }

    pub fn common_part(&self) -> &CommonPart {
        self.common.get_or_init(|| common_part_of(self))
    }

    /// I(S1;S2|S0) with S0 the common part.
    pub fn markov_gap(&self) -> f64 {
        let cp = self.common_part();
        let k = cp.num_values();
        let mut probs = vec![0.0; k * self.n1 * self.n2];
        for (a, b) in self.support() {
            let c = cp.label(a, b).expect("support cells are labelled");
            probs[(c * self.n1 + a) * self.n2 + b] = self.prob(a, b);
        }
        let j = JointPmf::from_unchecked(vec![k, self.n1, self.n2], probs);
        conditional_mutual_information(&j, &[1], &[2], &[0]).unwrap_or(f64::INFINITY)
    }

    /// H(S1|S2).
    pub fn h1_given_2(&self) -> f64 {
        (self.h12() - self.h2()).max(0.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("source serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: SourceFile = serde_json::from_str(s)
            .map_err(|e| Error::InvalidDistribution(format!("source file: {e}")))?;
        f.try_into()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn common_part_of(src: &SourcePair) -> CommonPart {
    let (n1, n2) = (src.n1, src.n2);
    let mut parent: Vec<usize> = (0..n1 + n2).collect();
    for (a, b) in src.support() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, n1 + b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut id_of_root = vec![usize::MAX; n1 + n2];
    let mut masses = Vec::new();
    let mut s1_label = vec![None; n1];
    let mut s2_label = vec![None; n2];
    for (a, b) in src.support() {
        let r = find(&mut parent, a);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = masses.len();
            masses.push(0.0);
        }
        let c = id_of_root[r];
        masses[c] += src.prob(a, b);
        s1_label[a] = Some(c);
        s2_label[b] = Some(c);
    }
    CommonPart {
        s1_label,
        s2_label,
        pmf: Pmf::normalized(masses).expect("the support has positive mass"),
    }
}

/// Common part of `src`; see [`SourcePair::common_part`].
pub fn common_part(src: &SourcePair) -> CommonPart {
    src.common_part().clone()
}

/// Admissible range of the example-source correlation parameter,
/// `[lower, upper)`.
pub fn example_alpha_range() -> (f64, f64) {
    let log3 = 3f64.log2();
    let lo = binary_entropy_inverse(0.5 * log3 - 2.0 / 3.0).expect("in range");
    let hi = binary_entropy_inverse(log3 - 4.0 / 3.0).expect("in range");
    (lo, hi)
}

/// Source built from a binary pair `(A, B)` with `P(A=0) = P(B=0) = alpha`
/// and two private uniform-ish bits.
///
/// `S1 = (A, C1)`, `S2 = (B, C2)` with `C1, C2` independent Bernoulli whose
/// zero-probability is `H_b^{-1}(2/3)`; flattened as `2 * A + C1`. The
/// dependence parameter `beta` is fixed by `H(A, B) = log2 3 - 4/3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSource {
    pub alpha: f64,
    pub beta: f64,
    pub source: SourcePair,
}

/// Cells of `(A, B)` in order `(0,0), (0,1), (1,0), (1,1)`.
pub fn example_pair_cells(alpha: f64, beta: f64) -> [f64; 4] {
    [
        alpha * (1.0 - beta),
        alpha * beta,
        alpha * beta,
        1.0 - alpha - alpha * beta,
    ]
}

pub fn example_source(alpha: f64) -> Result<ExampleSource> {
    let (lo, hi) = example_alpha_range();
    if !(alpha >= lo && alpha < hi) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: format!("[{lo:.10}, {hi:.10})"),
        });
    }
    let target = 3f64.log2() - 4.0 / 3.0;
    let f = |beta: f64| entropy_of(&example_pair_cells(alpha, beta)) - target;
    let top = 1.0 - alpha;
    // At the lower end of the range the root sits exactly on the bracket edge.
    let beta = if f(top).abs() <= 1e-10 && f(top) <= 0.0 {
        top
    } else {
        solve_monotone_root(f, 1e-12, top, ROOT_TOL)?
    };
    if alpha * beta > 1.0 - alpha {
        return Err(Error::OutOfRange {
            what: "alpha * beta",
            value: alpha * beta,
            range: format!("[0, {}]", 1.0 - alpha),
        });
    }
    let q = example_pair_cells(alpha, beta);
    let r0 = binary_entropy_inverse(2.0 / 3.0)?;
    let r = [r0, 1.0 - r0];
    let mut probs = vec![0.0; 16];
    for a in 0..2 {
        for c1 in 0..2 {
            for b in 0..2 {
                for c2 in 0..2 {
                    probs[(2 * a + c1) * 4 + 2 * b + c2] = q[2 * a + b] * r[c1] * r[c2];
                }
            }
        }
    }
    Ok(ExampleSource {
        alpha,
        beta,
        source: SourcePair::new(4, 4, probs)?,
    })
}

/// The deterministic channel whose inputs are the support cells of a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualChannel {
    pub channel: BroadcastChannel,
    /// Source probabilities of the cells.
    pub input: Pmf,
    pub cells: Vec<(usize, usize)>,
}

pub fn virtual_channel_of(src: &SourcePair) -> Result<VirtualChannel> {
    let cells = src.support();
    if cells.is_empty() {
        return Err(Error::EmptySupport);
    }
    let channel = BroadcastChannel::deterministic(cells.len(), src.n1, src.n2, |x| cells[x])?;
    let input = Pmf::normalized(cells.iter().map(|&(a, b)| src.prob(a, b)).collect())?;
    Ok(VirtualChannel {
        channel,
        input,
        cells,
    })
}

/// An input law with an auxiliary conditional `p(aux | input)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxAssignment {
    pub input: Pmf,
    pub aux: CondPmf,
}

/// Joint over `(aux..., X, Y1, Y2)`.
pub fn joint_from(input: &Pmf, ch: &BroadcastChannel, aux: &CondPmf) -> Result<JointPmf> {
    if input.len() != ch.nx() || aux.rows() != ch.nx() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} symbols, auxiliary has {} rows, channel has {} inputs",
            input.len(),
            aux.rows(),
            ch.nx()
        )));
    }
    let na = aux.cols();
    let (nx, m) = (ch.nx(), ch.ny1() * ch.ny2());
    let mut probs = vec![0.0; na * nx * m];
    for x in 0..nx {
        let px = input.probs()[x];
        if px == 0.0 {
            continue;
        }
        for (v, &pv) in aux.row(x).iter().enumerate() {
            if pv == 0.0 {
                continue;
            }
            for (k, &py) in ch.row(x).iter().enumerate() {
                probs[(v * nx + x) * m + k] = px * pv * py;
            }
        }
    }
    let mut dims = aux.to_dims().to_vec();
    dims.extend([nx, ch.ny1(), ch.ny2()]);
    JointPmf::new(dims, probs)
}

/// Joint over `(aux..., S1, S2)` for an auxiliary `p(aux | s1, s2)`.
pub fn source_joint(src: &SourcePair, aux: &CondPmf) -> Result<JointPmf> {
    if aux.rows() != src.n1 * src.n2 {
        return Err(Error::DimensionMismatch(format!(
            "auxiliary has {} rows, source has {} cells",
            aux.rows(),
            src.n1 * src.n2
        )));
    }
    let na = aux.cols();
    let cells = src.n1 * src.n2;
    let mut probs = vec![0.0; na * cells];
    for s in 0..cells {
        let ps = src.probs[s];
        for (u, &pu) in aux.row(s).iter().enumerate() {
            probs[u * cells + s] = ps * pu;
        }
    }
    let mut dims = aux.to_dims().to_vec();
    dims.extend([src.n1, src.n2]);
    JointPmf::new(dims, probs)
}

/// Outcome of the more-capable test (`I(X;Y2) >= I(X;Y1)` for every input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MoreCapable {
    /// No input with `I(X;Y1) - I(X;Y2) > 1e-12` was found.
    Yes { best_gap: f64 },
    /// `witness` has `I(X;Y1) - I(X;Y2) = gap > 1e-9`.
    No { witness: Pmf, gap: f64 },
    Inconclusive { best_gap: f64 },
}

/// Searches the input simplex for an input favouring receiver 1.
pub fn is_more_capable(ch: &BroadcastChannel, cfg: &SearchConfig) -> Result<MoreCapable> {
    let obj = |t: &[f64]| {
        let (i1, i2) = ch.input_informations(t);
        i1 - i2
    };
    let SearchResult {
        best_value,
        best_point,
        ..
    } = optimize_simplex(obj, &[ch.nx()], cfg)?;
    Ok(if best_value <= 1e-12 {
        MoreCapable::Yes {
            best_gap: best_value,
        }
    } else if best_value > 1e-9 {
        MoreCapable::No {
            witness: Pmf::normalized(best_point)?,
            gap: best_value,
        }
    } else {
        MoreCapable::Inconclusive {
            best_gap: best_value,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{mutual_information, binary_entropy};

    const LOG3: f64 = 1.584962500721156;

    #[test]
    fn blackwell_uniform_informations() {
        let ch = BroadcastChannel::blackwell();
        let j = joint_from(&Pmf::uniform(3), &ch, &CondPmf::constant(vec![3], vec![1])).unwrap();
        // vars: aux, x, y1, y2
        let i1 = mutual_information(&j, &[1], &[2]).unwrap();
        let i2 = mutual_information(&j, &[1], &[3]).unwrap();
        let want = LOG3 - 2.0 / 3.0;
        assert!((i1 - want).abs() < 1e-12);
        assert!((i2 - want).abs() < 1e-12);
        assert!((j.entropy_of_vars(&[2, 3]).unwrap() - LOG3).abs() < 1e-12);
        let (a, b) = ch.input_informations(&[1.0 / 3.0; 3]);
        assert!((a - want).abs() < 1e-12 && (b - want).abs() < 1e-12);
    }

    #[test]
    fn blackwell_shape() {
        let ch = BroadcastChannel::blackwell();
        assert!(ch.is_deterministic());
        assert_eq!(ch.output_map().unwrap(), vec![(0, 0), (1, 1), (0, 1)]);
        assert!(!BroadcastChannel::binary_symmetric(0.1, 0.2).unwrap().is_deterministic());
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = BroadcastChannel::binary_symmetric(0.1, 0.3).unwrap();
        let back = BroadcastChannel::from_json(&ch.to_json()).unwrap();
        assert_eq!(back, ch);
        let bad = r#"{"probs": [[[0.5, 0.2], [0.1, 0.1]]]}"#;
        assert!(BroadcastChannel::from_json(bad).is_err());
        let near = r#"{"probs": [[[0.5, 0.25], [0.25, 0.0000000001]]]}"#;
        let c = BroadcastChannel::from_json(near).unwrap();
        assert!((c.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swapped_channel() {
        let ch = BroadcastChannel::binary_symmetric(0.1, 0.3).unwrap();
        let s = ch.swapped();
        let (a, b) = ch.input_informations(&[0.3, 0.7]);
        let (c, d) = s.input_informations(&[0.3, 0.7]);
        assert!((a - d).abs() < 1e-15 && (b - c).abs() < 1e-15);
    }

    #[test]
    fn common_part_examples() {
        let idx = SourcePair::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let cp = idx.common_part();
        assert_eq!(cp.num_values(), 2);
        assert!((cp.entropy() - 1.0).abs() < 1e-12);
        let full = SourcePair::new(2, 2, vec![0.25; 4]).unwrap();
        assert_eq!(full.common_part().num_values(), 1);
        assert_eq!(full.common_part().entropy(), 0.0);
        let blocks = SourcePair::new(
            3,
            3,
            vec![0.2, 0.2, 0.0, 0.1, 0.1, 0.0, 0.0, 0.0, 0.4],
        )
        .unwrap();
        let cp = blocks.common_part();
        assert_eq!(cp.num_values(), 2);
        assert_eq!(cp.s1_label, vec![Some(0), Some(0), Some(1)]);
        assert!((cp.pmf.probs()[0] - 0.6).abs() < 1e-15);
        assert!(blocks.markov_gap() < 1e-12);
    }

    #[test]
    fn example_source_properties() {
        let (lo, hi) = example_alpha_range();
        assert!((lo - 0.0173).abs() < 1e-4, "{lo}");
        assert!((hi - 0.0420).abs() < 1e-4, "{hi}");
        let ex = example_source(0.0415).unwrap();
        assert!(ex.beta > 0.0 && ex.beta <= 1.0 - ex.alpha);
        let s = &ex.source;
        let cp = s.common_part();
        assert_eq!(cp.num_values(), 1);
        // H(S1) = H_b(alpha) + 2/3
        let hb = binary_entropy(0.0415).unwrap();
        assert!((s.h1() - hb - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.h2() - hb - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.h12() - (LOG3 - 4.0 / 3.0) - 4.0 / 3.0).abs() < 1e-9);
        assert!(example_source(0.5).is_err());
        assert!(example_source(hi).is_err());
        assert!(example_source(lo).is_ok());
    }

    #[test]
    fn virtual_channel_shape() {
        let src = SourcePair::new(2, 2, vec![0.5, 0.0, 0.25, 0.25]).unwrap();
        let v = virtual_channel_of(&src).unwrap();
        assert_eq!(v.cells, vec![(0, 0), (1, 0), (1, 1)]);
        assert_eq!(v.channel.nx(), 3);
        assert!(v.channel.is_deterministic());
        assert_eq!(v.input.probs(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn more_capable_examples() {
        let cfg = SearchConfig {
            restarts: 8,
            ..SearchConfig::default()
        };
        let ch = BroadcastChannel::binary_symmetric(0.2, 0.1).unwrap();
        assert!(matches!(is_more_capable(&ch, &cfg).unwrap(), MoreCapable::Yes { .. }));
        match is_more_capable(&ch.swapped(), &cfg).unwrap() {
            MoreCapable::No { gap, witness } => {
                let (a, b) = ch.swapped().input_informations(witness.probs());
                assert!((a - b - gap).abs() < 1e-12 && gap > 1e-9);
            }
            other => panic!("expected No, got {other:?}"),
        }
    }
}
