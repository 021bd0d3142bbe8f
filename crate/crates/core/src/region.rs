//! Rate-region geometry.
//!
//! A fixed auxiliary assignment gives an exact polytope `{r >= 0, A r <= b}`.
//! Regions that are unions over auxiliaries are kept as sampled support
//! functions ([`RegionApprox`]): each entry stores a direction, the best
//! support value found, and the polytope that attains it. Support values from
//! a heuristic search are lower bounds, so membership and containment verdicts
//! are one-sided (see [`Status`]).

use std::io::Write;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::AuxAssignment;
use crate::error::{Error, Result};

/// Feasibility and deduplication tolerance used by vertex enumeration.
pub const VERTEX_TOL: f64 = 1e-9;
/// Default slack tolerance for verdicts, in bits.
pub const DEFAULT_TOL: f64 = 1e-6;

/// `normal . r <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub bound: f64,
}

/// `{r in R^dim : r >= 0, a_i . r <= b_i}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polytope {
    dim: usize,
    inequalities: Vec<Halfspace>,
    #[serde(skip)]
    vertices: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.inequalities == other.inequalities
    }
}

impl Polytope {
    pub fn new(dim: usize, inequalities: Vec<Halfspace>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("polytope of dimension 0".into()));
        }
        for h in &inequalities {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "normal of length {} in a {dim}-dimensional polytope",
                    h.normal.len()
                )));
            }
            if !h.bound.is_finite() || h.normal.iter().any(|a| !a.is_finite()) {
                return Err(Error::DimensionMismatch("non-finite inequality".into()));
            }
        }
        for i in 0..dim {
            let capped = inequalities
                .iter()
                .any(|h| h.normal[i] > 0.0 && h.normal.iter().all(|&a| a >= 0.0));
            if !capped {
                return Err(Error::Unbounded(i));
            }
        }
        Ok(Self {
            dim,
            inequalities,
            vertices: OnceLock::new(),
        })
    }

    /// The box `0 <= r_i <= upper_i`; negative caps are clamped to zero.
    pub fn boxed(upper: &[f64]) -> Result<Self> {
        let dim = upper.len();
        let ineqs = upper
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut normal = vec![0.0; dim];
                normal[i] = 1.0;
                Halfspace {
                    normal,
                    bound: c.max(0.0),
                }
            })
            .collect();
        Self::new(dim, ineqs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inequalities(&self) -> &[Halfspace] {
        &self.inequalities
    }

    /// Upper corner when every inequality is a single-coordinate cap.
    pub fn box_corner(&self) -> Option<Vec<f64>> {
        let mut corner = vec![f64::INFINITY; self.dim];
        for h in &self.inequalities {
            let nz: Vec<usize> = (0..self.dim).filter(|&i| h.normal[i] != 0.0).collect();
            if nz.len() != 1 || h.normal[nz[0]] <= 0.0 {
                return None;
            }
            let i = nz[0];
            corner[i] = corner[i].min((h.bound / h.normal[i]).max(0.0));
        }
        Some(corner)
    }

    /// `bound - normal . pt` for each inequality.
    pub fn slacks(&self, pt: &[f64]) -> Vec<f64> {
        self.inequalities
            .iter()
            .map(|h| h.bound - dot(&h.normal, pt))
            .collect()
    }

    pub fn contains(&self, pt: &[f64], tol: f64) -> bool {
        pt.len() == self.dim
            && pt.iter().all(|&x| x >= -tol)
            && self.slacks(pt).iter().all(|&s| s >= -tol)
    }

    /// The polytope with every bound multiplied by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Polytope {
        Polytope {
            dim: self.dim,
            inequalities: self
                .inequalities
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    bound: h.bound * kappa,
                })
                .collect(),
            vertices: OnceLock::new(),
        }
    }

    /// Vertices, by exhaustive intersection of `dim`-sized constraint subsets.
    ///
    /// Boxes of any dimension are handled by corner enumeration; other shapes
    /// need `dim <= 3`.
    pub fn vertices(&self) -> Result<&[Vec<f64>]> {
        if let Some(v) = self.vertices.get() {
            return Ok(v);
        }
        let verts = if let Some(corner) = self.box_corner() {
            box_vertices(&corner)
        } else if self.dim <= 3 {
            self.enumerate_vertices()
        } else {
            return Err(Error::DimensionMismatch(format!(
                "vertex enumeration is limited to dim <= 3 (got {})",
                self.dim
            )));
        };
        Ok(self.vertices.get_or_init(|| verts))
    }

    fn enumerate_vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        // Constraint planes: the listed inequalities plus -r_i <= 0.
        let mut planes: Vec<(Vec<f64>, f64)> = self
            .inequalities
            .iter()
            .map(|h| (h.normal.clone(), h.bound))
            .collect();
        for i in 0..d {
            let mut n = vec![0.0; d];
            n[i] = -1.0;
            planes.push((n, 0.0));
        }
        let m = planes.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let a: Vec<&[f64]> = idx.iter().map(|&k| planes[k].0.as_slice()).collect();
            let b: Vec<f64> = idx.iter().map(|&k| planes[k].1).collect();
            if let Some(x) = solve_small(&a, &b) {
                if self.contains(&x, VERTEX_TOL)
                    && !out
                        .iter()
                        .any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= VERTEX_TOL))
                {
                    let x = x.into_iter().map(|c| if c.abs() < 1e-15 { 0.0 } else { c }).collect();
                    out.push(x);
                }
            }
            // next combination
            let mut k = d;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if idx[k] < m - d + k {
                    idx[k] += 1;
                    for j in k + 1..d {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// `max d . r` over the polytope.
    pub fn support(&self, d: &Direction) -> f64 {
        self.support_raw(&d.lambda)
    }

    pub(crate) fn support_raw(&self, lambda: &[f64]) -> f64 {
        if let Some(corner) = self.box_corner() {
            return dot(lambda, &corner);
        }
        match self.vertices() {
            Ok(vs) => vs
                .iter()
                .map(|v| dot(lambda, v))
                .fold(f64::NEG_INFINITY, f64::max),
            Err(_) => self.support_lp(lambda),
        }
    }

    /// A maximizing point for `d` (a vertex, or the box corner).
    pub fn argmax(&self, lambda: &[f64]) -> Vec<f64> {
        if let Some(corner) = self.box_corner() {
            return corner;
        }
        match self.vertices() {
            Ok(vs) => {
                let mut best = (f64::NEG_INFINITY, vec![0.0; self.dim]);
                for v in vs {
                    let s = dot(lambda, v);
                    if s > best.0 {
                        best = (s, v.clone());
                    }
                }
                best.1
            }
            Err(_) => vec![0.0; self.dim],
        }
    }

    fn support_lp(&self, lambda: &[f64]) -> f64 {
        use minilp::{ComparisonOp, OptimizationDirection, Problem};
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = lambda
            .iter()
            .map(|&l| lp.add_var(l, (0.0, f64::INFINITY)))
            .collect();
        for h in &self.inequalities {
            let terms: Vec<_> = vars.iter().copied().zip(h.normal.iter().copied()).collect();
            lp.add_constraint(&terms[..], ComparisonOp::Le, h.bound);
        }
        lp.solve().map(|s| s.objective()).unwrap_or(f64::NEG_INFINITY)
    }
}

fn box_vertices(corner: &[f64]) -> Vec<Vec<f64>> {
    let d = corner.len();
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1usize << d) {
        let v: Vec<f64> = (0..d)
            .map(|i| if mask >> i & 1 == 1 { corner[i] } else { 0.0 })
            .collect();
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` for (near-)singular systems.
fn solve_small(a: &[&[f64]], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.to_vec();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exhaustive vertex list of a polytope (dim <= 3, or any box).
pub fn polytope_vertices(p: &Polytope) -> Result<Vec<Vec<f64>>> {
    p.vertices().map(<[_]>::to_vec)
}

/// `max d . r` over `p`.
pub fn support_value(p: &Polytope, d: &Direction) -> f64 {
    p.support(d)
}

/// Nonnegative weight vector of unit 1-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    lambda: Vec<f64>,
}

impl Direction {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidDirection(format!(
                "entries must be finite and nonnegative: {lambda:?}"
            )));
        }
        let s: f64 = lambda.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidDirection("all-zero direction".into()));
        }
        Ok(Self {
            lambda: lambda.into_iter().map(|l| l / s).collect(),
        })
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        let mut lambda = vec![0.0; dim];
        lambda[i] = 1.0;
        Self { lambda }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn dot(&self, pt: &[f64]) -> f64 {
        dot(&self.lambda, pt)
    }

    fn same_as(&self, other: &Direction) -> bool {
        self.lambda.len() == other.lambda.len()
            && self
                .lambda
                .iter()
                .zip(&other.lambda)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
    }
}

/// Structured weight patterns for the ten-coordinate comparison regions.
///
/// The groups are the coefficient groups that multiply H(S1), H(S2) and
/// H(S1,S2|U) in the weighted-sum form of the source-side region.
fn ten_dim_patterns() -> Vec<Vec<f64>> {
    let group = |idx: &[usize]| {
        let mut v = vec![0.0; 10];
        for &i in idx {
            v[i - 1] = 1.0;
        }
        v
    };
    vec![
        vec![1.0; 10],
        group(&[1, 3, 5, 7, 9]),
        group(&[2, 4, 6, 8, 10]),
        group(&[7, 8, 9, 10]),
        group(&[1, 2]),
        group(&[5, 6]),
    ]
}

/// Deterministic direction set: structured directions first, then `n`
/// uniformly random directions on the simplex.
///
/// For `dim <= 3` the structured part is every nonzero 0/1 indicator vector;
/// for `dim == 10` it is the axes plus the weighted-sum patterns; otherwise
/// the axes and the all-ones direction.
pub fn sample_directions(dim: usize, n: usize, seed: u64) -> Vec<Direction> {
    let mut raw: Vec<Vec<f64>> = Vec::new();
    if dim <= 3 {
        for mask in 1..(1usize << dim) {
            raw.push((0..dim).map(|i| (mask >> i & 1) as f64).collect());
        }
        // axes first
        raw.sort_by_key(|v| v.iter().filter(|&&x| x > 0.0).count());
    } else {
        for i in 0..dim {
            raw.push(Direction::axis(dim, i).lambda);
        }
        if dim == 10 {
            raw.extend(ten_dim_patterns());
        } else {
            raw.push(vec![1.0; dim]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0xd1ec);
    for _ in 0..n {
        let w: Vec<f64> = (0..dim)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        raw.push(w);
    }
    raw.into_iter()
        .filter_map(|v| Direction::new(v).ok())
        .collect()
}

/// The polytope (and auxiliary choice) behind a support value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Unscaled per-auxiliary polytope.
    pub polytope: Polytope,
    /// Multiplier applied by [`scale`]; the certified region is `scale * polytope`.
    pub scale: f64,
    pub aux: Option<AuxAssignment>,
}

impl Witness {
    pub fn new(polytope: Polytope, aux: Option<AuxAssignment>) -> Self {
        Self {
            polytope,
            scale: 1.0,
            aux,
        }
    }

    pub fn contains(&self, pt: &[f64], tol: f64) -> bool {
        self.polytope.scaled(self.scale).contains(pt, tol)
    }

    pub fn support(&self, lambda: &[f64]) -> f64 {
        self.scale * self.polytope.support_raw(lambda)
    }

    /// Achievable point attaining the support in `lambda`.
    pub fn argmax(&self, lambda: &[f64]) -> Vec<f64> {
        self.polytope
            .argmax(lambda)
            .into_iter()
            .map(|x| x * self.scale)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub lambda: Vec<f64>,
    pub h: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionMeta {
    pub label: String,
    pub seed: u64,
    pub restarts: usize,
    pub evaluations: u64,
}

/// Sampled support-function representation of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionApprox {
    pub dim: usize,
    pub kappa: f64,
    pub entries: Vec<RegionEntry>,
    #[serde(default)]
    pub meta: RegionMeta,
}

impl RegionApprox {
    pub fn new(dim: usize, meta: RegionMeta) -> Self {
        Self {
            dim,
            kappa: 1.0,
            entries: Vec::new(),
            meta,
        }
    }

    /// Adds an entry whose support value is read off the witness.
    pub fn push_witness(&mut self, d: &Direction, witness: Witness) {
        let h = witness.support(d.lambda()).max(0.0);
        self.entries.push(RegionEntry {
            lambda: d.lambda().to_vec(),
            h,
            witness: Some(witness),
        });
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.entries
            .iter()
            .map(|e| Direction {
                lambda: e.lambda.clone(),
            })
            .collect()
    }

    pub fn support(&self, d: &Direction) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| d.same_as(&Direction { lambda: e.lambda.clone() }))
            .map(|e| e.h)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region serializes")
    }

    /// `lambda_1,...,lambda_d,h` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim)
            .map(|i| format!("lambda_{i}"))
            .chain(std::iter::once("h".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for e in &self.entries {
            let row: Vec<String> = e
                .lambda
                .iter()
                .chain(std::iter::once(&e.h))
                .map(|x| format!("{x:.10e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Multiplies every support value by `kappa`.
pub fn scale(r: &RegionApprox, kappa: f64) -> Result<RegionApprox> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::OutOfRange {
            what: "kappa",
            value: kappa,
            range: "(0, inf)".into(),
        });
    }
    let mut out = r.clone();
    out.kappa *= kappa;
    for e in &mut out.entries {
        e.h *= kappa;
        if let Some(w) = &mut e.witness {
            w.scale *= kappa;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    /// An explicit witness satisfies every inequality.
    CertifiedHolds,
    /// Every sampled comparison holds; support values are search lower bounds.
    EvidenceHolds,
    /// A certified achievable point beats a searched support value.
    EvidenceViolated,
    Inconclusive,
}

impl Status {
    pub fn holds(self) -> bool {
        matches!(self, Status::CertifiedHolds | Status::EvidenceHolds)
    }

    /// 0 = holds, 1 = violated, 2 = inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::CertifiedHolds | Status::EvidenceHolds => 0,
            Status::EvidenceViolated => 1,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictWitness {
    /// Certified point (membership witness point or violating point).
    pub point: Option<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    /// For violations: `direction . point - reference`.
    pub margin: f64,
    /// The compared support value (already scaled).
    pub reference: Option<f64>,
    pub polytope: Option<Polytope>,
    pub aux: Option<AuxAssignment>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub directions: usize,
    pub evaluations: u64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<VerdictWitness>,
    pub trace: Trace,
}

impl Verdict {
    pub fn inconclusive(trace: Trace) -> Self {
        Self {
            status: Status::Inconclusive,
            witness: None,
            trace,
        }
    }

    /// Recomputes `direction . point - reference` and compares with the stored margin.
    pub fn reverify(&self, tol: f64) -> bool {
        match (&self.status, &self.witness) {
            (Status::EvidenceViolated, Some(w)) => match (&w.point, &w.direction, w.reference) {
                (Some(p), Some(d), Some(r)) => {
                    let m = dot(d, p) - r;
                    (m - w.margin).abs() <= tol && w.margin > 0.0
                }
                _ => false,
            },
            (Status::CertifiedHolds, Some(w)) => match (&w.point, &w.polytope) {
                (Some(p), Some(poly)) => poly.contains(p, tol.max(VERTEX_TOL)),
                _ => false,
            },
            (Status::CertifiedHolds, None) => false,
            _ => true,
        }
    }
}

/// Membership of `pt` in a sampled region.
pub fn contains_point(r: &RegionApprox, pt: &[f64], tol: f64) -> Verdict {
    let mut trace = Trace {
        directions: r.entries.len(),
        ..Default::default()
    };
    if pt.len() != r.dim {
        trace.notes.push(format!(
            "point has {} coordinates, region has {}",
            pt.len(),
            r.dim
        ));
        return Verdict::inconclusive(trace);
    }
    if pt.iter().all(|&x| x.abs() <= tol) {
        return Verdict {
            status: Status::CertifiedHolds,
            witness: Some(VerdictWitness {
                point: Some(pt.to_vec()),
                direction: None,
                margin: 0.0,
                reference: None,
                polytope: Some(Polytope::boxed(&vec![0.0; r.dim]).expect("zero box")),
                aux: None,
            }),
            trace,
        };
    }
    for e in &r.entries {
        if let Some(w) = &e.witness {
            if w.contains(pt, tol) {
                return Verdict {
                    status: Status::CertifiedHolds,
                    witness: Some(VerdictWitness {
                        point: Some(pt.to_vec()),
                        direction: None,
                        margin: 0.0,
                        reference: None,
                        polytope: Some(w.polytope.scaled(w.scale)),
                        aux: w.aux.clone(),
                    }),
                    trace,
                };
            }
        }
    }
    let mut worst: Option<(f64, &RegionEntry)> = None;
    for e in &r.entries {
        let m = dot(&e.lambda, pt) - e.h;
        if m > tol && worst.is_none_or(|(b, _)| m > b) {
            worst = Some((m, e));
        }
    }
    match worst {
        Some((m, e)) => Verdict {
            status: Status::EvidenceViolated,
            witness: Some(VerdictWitness {
                point: Some(pt.to_vec()),
                direction: Some(e.lambda.clone()),
                margin: m,
                reference: Some(e.h),
                polytope: None,
                aux: None,
            }),
            trace,
        },
        None => Verdict::inconclusive(trace),
    }
}

/// Is `a` contained in `kappa * b`, compared over their shared directions?
pub fn region_subset(a: &RegionApprox, b: &RegionApprox, kappa: f64, tol: f64) -> Result<Verdict> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "regions of dimension {} and {}",
            a.dim, b.dim
        )));
    }
    let mut trace = Trace::default();
    let mut worst: Option<(f64, &RegionEntry, f64)> = None;
    let mut unwitnessed = false;
    for ea in &a.entries {
        let da = Direction {
            lambda: ea.lambda.clone(),
        };
        let Some(hb) = b.support(&da) else { continue };
        trace.directions += 1;
        let reference = kappa * hb;
        let m = ea.h - reference;
        if m > tol {
            if ea.witness.is_some() {
                if worst.is_none_or(|(w, _, _)| m > w) {
                    worst = Some((m, ea, reference));
                }
            } else {
                unwitnessed = true;
            }
        }
    }
    if trace.directions == 0 {
        return Err(Error::DimensionMismatch("regions share no directions".into()));
    }
    if let Some((_, ea, reference)) = worst {
        let w = ea.witness.as_ref().expect("checked above");
        let point = w.argmax(&ea.lambda);
        let margin = dot(&ea.lambda, &point) - reference;
        return Ok(Verdict {
            status: Status::EvidenceViolated,
            witness: Some(VerdictWitness {
                point: Some(point),
                direction: Some(ea.lambda.clone()),
                margin,
                reference: Some(reference),
                polytope: Some(w.polytope.scaled(w.scale)),
                aux: w.aux.clone(),
            }),
            trace,
        });
    }
    if unwitnessed {
        trace
            .notes
            .push("support exceeded without an explicit witness".into());
        return Ok(Verdict::inconclusive(trace));
    }
    Ok(Verdict {
        status: Status::EvidenceHolds,
        witness: None,
        trace,
    })
}
