//! Finite-alphabet probability kernel.
//!
//! Everything here is measured in bits. Probabilities below [`ZERO_CUTOFF`]
//! contribute nothing to entropy sums, and mutual informations that come out
//! negative by less than [`MI_CLAMP`] are rounded up to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const SUM_TOL: f64 = 1e-12;
/// Masses below this are treated as exact zeros inside entropy sums.
pub const ZERO_CUTOFF: f64 = 1e-15;
/// Negative information values within this distance of zero are rounding noise.
pub const MI_CLAMP: f64 = 1e-12;
/// Default function-value tolerance for [`solve_monotone_root`].
pub const ROOT_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what}: entry {i} is {p}"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}"
        )));
    }
    Ok(())
}

/// Shannon entropy of a probability vector in bits, without validation.
#[inline]
pub fn entropy_of(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > ZERO_CUTOFF {
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

/// A probability mass function over `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, "pmf")?;
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf needs a nonempty alphabet");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass outside alphabet");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    pub(crate) fn from_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// Dense joint distribution over a product of finite alphabets, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "joint dims must be positive, got {dims:?}"
            )));
        }
        let n: usize = dims.iter().product();
        if n != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} need {n} entries, got {}",
                probs.len()
            )));
        }
        check_probs(&probs, "joint")?;
        Ok(Self { dims, probs })
    }

    pub(crate) fn from_unchecked(dims: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), probs.len());
        Self { dims, probs }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_vars(&self) -> usize {
        self.dims.len()
    }

    fn check_vars(&self, vars: &[usize]) -> Result<()> {
        for &v in vars {
            if v >= self.dims.len() {
                return Err(Error::BadVariable {
                    index: v,
                    vars: self.dims.len(),
                });
            }
        }
        Ok(())
    }

    /// Marginal onto `keep` (listed variables, in the given order).
    pub fn marginal(&self, keep: &[usize]) -> Result<JointPmf> {
        self.check_vars(keep)?;
        let mut seen = vec![false; self.dims.len()];
        for &v in keep {
            if seen[v] {
                return Err(Error::OverlappingGroups(v));
            }
            seen[v] = true;
        }
        if keep.is_empty() {
            return Ok(JointPmf::from_unchecked(vec![1], vec![1.0]));
        }
        let out_dims: Vec<usize> = keep.iter().map(|&v| self.dims[v]).collect();
        Ok(JointPmf::from_unchecked(
            out_dims,
            self.marginal_raw(keep),
        ))
    }

    /// Marginal probabilities onto `keep` without validation.
    pub(crate) fn marginal_raw(&self, keep: &[usize]) -> Vec<f64> {
        // Output stride of each input variable (0 when summed out).
        let mut out_stride = vec![0usize; self.dims.len()];
        let mut s = 1;
        for &v in keep.iter().rev() {
            out_stride[v] = s;
            s *= self.dims[v];
        }
        let mut out = vec![0.0; s];
        let mut idx = vec![0usize; self.dims.len()];
        let mut target = 0usize;
        for &p in &self.probs {
            out[target] += p;
            // Odometer increment, last variable fastest.
            for v in (0..self.dims.len()).rev() {
                idx[v] += 1;
                target += out_stride[v];
                if idx[v] < self.dims[v] {
                    break;
                }
                target -= out_stride[v] * idx[v];
                idx[v] = 0;
            }
        }
        out
    }

    /// Entropy of the marginal on `vars` (bits). An empty set gives 0.
    pub fn entropy_of_vars(&self, vars: &[usize]) -> Result<f64> {
        if vars.is_empty() {
            return Ok(0.0);
        }
        Ok(self.marginal(vars)?.entropy())
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

/// Conditional law p(to | from), one stochastic row per `from` symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondPmf {
    from_dims: Vec<usize>,
    to_dims: Vec<usize>,
    probs: Vec<f64>,
}

impl CondPmf {
    pub fn new(from_dims: Vec<usize>, to_dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if from_dims.is_empty() || to_dims.is_empty() || from_dims.contains(&0) || to_dims.contains(&0)
        {
            return Err(Error::DimensionMismatch(
                "conditional dims must be nonempty and positive".into(),
            ));
        }
        let rows: usize = from_dims.iter().product();
        let cols: usize = to_dims.iter().product();
        if rows * cols != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows} rows x {cols} columns needs {} entries, got {}",
                rows * cols,
                probs.len()
            )));
        }
        for (r, row) in probs.chunks(cols).enumerate() {
            check_probs(row, &format!("conditional row {r}"))?;
        }
        Ok(Self {
            from_dims,
            to_dims,
            probs,
        })
    }

    pub(crate) fn from_unchecked(from_dims: Vec<usize>, to_dims: Vec<usize>, probs: Vec<f64>) -> Self {
        Self {
            from_dims,
            to_dims,
            probs,
        }
    }

    /// Deterministic map `from -> f(from)` over flattened alphabets.
    pub fn deterministic(
        from_dims: Vec<usize>,
        to_dims: Vec<usize>,
        f: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let rows: usize = from_dims.iter().product();
        let cols: usize = to_dims.iter().product();
        let mut probs = vec![0.0; rows * cols];
        for r in 0..rows {
            let c = f(r);
            if c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "map sends {r} to {c}, outside {cols} symbols"
                )));
            }
            probs[r * cols + c] = 1.0;
        }
        Self::new(from_dims, to_dims, probs)
    }

    /// Every row equal to the point mass on symbol 0 of a single-symbol alphabet.
    pub fn constant(from_dims: Vec<usize>, to_dims: Vec<usize>) -> Self {
        let rows: usize = from_dims.iter().product();
        let cols: usize = to_dims.iter().product();
        let mut probs = vec![0.0; rows * cols];
        for r in 0..rows {
            probs[r * cols] = 1.0;
        }
        Self {
            from_dims,
            to_dims,
            probs,
        }
    }

    pub fn from_dims(&self) -> &[usize] {
        &self.from_dims
    }

    pub fn to_dims(&self) -> &[usize] {
        &self.to_dims
    }

    pub fn rows(&self) -> usize {
        self.from_dims.iter().product()
    }

    pub fn cols(&self) -> usize {
        self.to_dims.iter().product()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.probs[r * c..(r + 1) * c]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

fn check_disjoint(groups: &[&[usize]], vars: usize) -> Result<()> {
    let mut seen = vec![false; vars];
    for g in groups {
        for &v in *g {
            if v >= vars {
                return Err(Error::BadVariable { index: v, vars });
            }
            if seen[v] {
                return Err(Error::OverlappingGroups(v));
            }
            seen[v] = true;
        }
    }
    Ok(())
}

fn clamp_information(i: f64) -> Result<f64> {
    if i >= 0.0 {
        Ok(i)
    } else if i >= -MI_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeInformation(i))
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v
}

/// Shannon entropy of the whole joint, in bits.
pub fn entropy(j: &JointPmf) -> f64 {
    j.entropy()
}

/// I(A;B) for disjoint variable groups of `j`; other variables are summed out.
pub fn mutual_information(j: &JointPmf, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
    check_disjoint(&[group_a, group_b], j.num_vars())?;
    let ha = j.entropy_of_vars(&sorted(group_a))?;
    let hb = j.entropy_of_vars(&sorted(group_b))?;
    let hab = j.entropy_of_vars(&union(group_a, group_b))?;
    clamp_information(ha + hb - hab)
}

/// I(A;B|C) for pairwise-disjoint groups.
pub fn conditional_mutual_information(
    j: &JointPmf,
    group_a: &[usize],
    group_b: &[usize],
    group_c: &[usize],
) -> Result<f64> {
    check_disjoint(&[group_a, group_b, group_c], j.num_vars())?;
    let ac = union(group_a, group_c);
    let bc = union(group_b, group_c);
    let abc = union(&ac, group_b);
    let i = j.entropy_of_vars(&ac)? + j.entropy_of_vars(&bc)?
        - j.entropy_of_vars(&abc)?
        - j.entropy_of_vars(&sorted(group_c))?;
    clamp_information(i)
}

fn sorted(g: &[usize]) -> Vec<usize> {
    let mut v = g.to_vec();
    v.sort_unstable();
    v
}

/// H_b(p) in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            what: "p",
            value: p,
            range: "[0, 1]".into(),
        });
    }
    Ok(binary_entropy_unchecked(p))
}

#[inline]
pub(crate) fn binary_entropy_unchecked(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// The branch of H_b^{-1} with values in [0, 1/2].
pub fn binary_entropy_inverse(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h,
            range: "[0, 1]".into(),
        });
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    solve_monotone_root(|x| binary_entropy_unchecked(x) - h, 0.0, 0.5, ROOT_TOL)
}

/// Bisection for a root of a continuous monotone `f` bracketed by `[lo, hi]`.
///
/// Stops as soon as `|f(x)| <= tol`. If floating-point resolution is exhausted
/// first, the bracket end with the smaller residual is returned.
pub fn solve_monotone_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::OutOfRange {
            what: "bracket",
            value: lo,
            range: format!("lo <= hi = {hi}"),
        });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..2048 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm.abs() <= tol {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG2_3: f64 = 1.584_962_500_721_156;

    fn joint(dims: &[usize], probs: &[f64]) -> JointPmf {
        JointPmf::new(dims.to_vec(), probs.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&joint(&[3], &[1.0 / 3.0; 3])) - LOG2_3).abs() < 1e-12);
        assert_eq!(entropy(&joint(&[2, 2], &[0.0, 1.0, 0.0, 0.0])), 0.0);
        let h = entropy(&joint(&[4], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]));
        assert!((h - 1.918_295_834_054_489_6).abs() < 1e-10, "{h}");
    }

    #[test]
    fn uniform_entropy_is_log_n() {
        for n in 1..=1024usize {
            let h = Pmf::uniform(n).entropy();
            assert!((h - (n as f64).log2()).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn rejects_bad_joints() {
        assert!(JointPmf::new(vec![2], vec![0.5, 0.6]).is_err());
        assert!(JointPmf::new(vec![2], vec![1.5, -0.5]).is_err());
        assert!(JointPmf::new(vec![3], vec![0.5, 0.5]).is_err());
        assert!(Pmf::new(vec![]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let indep = joint(&[2, 2], &[0.25; 4]);
        assert!(mutual_information(&indep, &[0], &[1]).unwrap().abs() < 1e-15);

        let mut copy = vec![0.0; 16];
        for a in 0..4 {
            copy[a * 4 + a] = 0.25;
        }
        let copy = joint(&[4, 4], &copy);
        assert!((mutual_information(&copy, &[0], &[1]).unwrap() - 2.0).abs() < 1e-12);

        assert!(matches!(
            mutual_information(&copy, &[0], &[0, 1]),
            Err(Error::OverlappingGroups(0))
        ));
        assert!(matches!(
            mutual_information(&copy, &[0], &[2]),
            Err(Error::BadVariable { .. })
        ));
    }

    #[test]
    fn conditional_mutual_information_markov_is_zero() {
        // A -> C -> B with binary symmetric links.
        let mut p = vec![0.0; 8];
        for a in 0..2 {
            for c in 0..2 {
                for b in 0..2 {
                    let pa = if a == 0 { 0.3 } else { 0.7 };
                    let pc = if c == a { 0.9 } else { 0.1 };
                    let pb = if b == c { 0.8 } else { 0.2 };
                    p[a * 4 + c * 2 + b] = pa * pc * pb;
                }
            }
        }
        let j = joint(&[2, 2, 2], &p);
        assert!(conditional_mutual_information(&j, &[0], &[2], &[1]).unwrap() < 1e-10);
        assert!(mutual_information(&j, &[0], &[2]).unwrap() > 1e-3);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!((binary_entropy(1.0 / 3.0).unwrap() - (LOG2_3 - 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn binary_entropy_inverse_examples() {
        assert_eq!(binary_entropy_inverse(1.0).unwrap(), 0.5);
        let x = binary_entropy_inverse(2.0 / 3.0).unwrap();
        assert!((x - 0.1739).abs() < 1e-4, "{x}");
        assert!((binary_entropy(x).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let x = binary_entropy_inverse(LOG2_3 - 4.0 / 3.0).unwrap();
        assert!((x - 0.0420).abs() < 1e-4, "{x}");
        assert!(binary_entropy_inverse(1.5).is_err());
        assert!(binary_entropy_inverse(-1e-9).is_err());
    }

    #[test]
    fn monotone_root_examples() {
        let r = solve_monotone_root(|x| x - 0.25, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.25).abs() <= 1e-12);
        let r = solve_monotone_root(|x| 2.0 * x - 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(r, 0.5);
        let r = solve_monotone_root(|x| binary_entropy_unchecked(x) - 0.5, 0.0, 0.5, 1e-12).unwrap();
        assert!((r - 0.1100).abs() < 1e-4);
        assert!((binary_entropy_unchecked(r) - 0.5).abs() <= 1e-12);
        // decreasing functions are fine too
        let r = solve_monotone_root(|x| 0.25 - x, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.25).abs() <= 1e-12);
        assert!(matches!(
            solve_monotone_root(|x| x + 1.0, 0.0, 1.0, 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn marginal_orders_variables_as_listed() {
        let j = joint(&[2, 3], &[0.1, 0.2, 0.3, 0.05, 0.15, 0.2]);
        let m = j.marginal(&[1]).unwrap();
        let expect = [0.15, 0.35, 0.5];
        for (a, b) in m.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = j.marginal(&[1, 0]).unwrap();
        assert_eq!(t.dims(), &[3, 2]);
        assert!((t.probs()[1] - 0.05).abs() < 1e-15);
    }
}
