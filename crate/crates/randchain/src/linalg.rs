//! Small dense linear algebra for stochastic matrices and the scalar
//! functionals (cut flow, spread, weighted variance) used everywhere else.
//!
//! Everything here is desk scale: matrices are `m x m` with `m` expected to
//! stay below a few dozen, stored dense row-major. All types are immutable
//! after construction and all operations are pure functions.

use crate::error::{Error, Result};
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// Entries more negative than this reject; entries in `[-TOL_ENTRY, 0)` are
/// clamped to zero and the row renormalized. Products of valid matrices can
/// drift slightly negative.
pub const TOL_ENTRY: f64 = 1e-12;
/// Row sums must be within this of 1.
pub const TOL_ROW: f64 = 1e-9;

/// A validated m x m row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Validates a raw row-major array. Tiny negative entries (within
    /// `TOL_ENTRY`) are clamped to zero; each row is renormalized to sum
    /// exactly to 1 provided its raw sum is within `tol` of 1.
    pub fn validate(dim: usize, raw: &[f64], tol: f64) -> Result<Self> {
        if dim == 0 || raw.len() != dim * dim {
            return Err(Error::NonStochastic(format!(
                "expected {dim}x{dim} entries, got {}",
                raw.len()
            )));
        }
        let mut entries = raw.to_vec();
        for (idx, v) in entries.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonStochastic(format!("non-finite entry at {idx}")));
            }
            if *v < -TOL_ENTRY {
                return Err(Error::NonStochastic(format!(
                    "entry ({},{}) = {v} below -{TOL_ENTRY}",
                    idx / dim,
                    idx % dim
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        for i in 0..dim {
            let row = &mut entries[i * dim..(i + 1) * dim];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NonStochastic(format!("row {i} sums to {sum}")));
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(StochasticMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::NonStochastic("matrix is not square".into()));
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::validate(dim, &flat, TOL_ROW)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        StochasticMatrix { dim, entries }
    }

    /// The uniform averaging matrix `(1/m) e e^T`.
    pub fn uniform(dim: usize) -> Self {
        StochasticMatrix {
            dim,
            entries: vec![1.0 / dim as f64; dim * dim],
        }
    }

    /// Rank-one matrix `e v^T` for a stochastic vector `v`.
    pub fn rank_one(v: &StochasticVector) -> Self {
        let dim = v.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            entries.extend_from_slice(v.entries());
        }
        StochasticMatrix { dim, entries }
    }

    /// The pairwise averaging matrix acting on agents `i` and `j` with weight
    /// `a` on the own value: identity elsewhere. Doubly stochastic.
    pub fn pair_average(dim: usize, i: usize, j: usize, a: f64) -> Self {
        let mut w = Self::identity(dim);
        w.entries[i * dim + i] = a;
        w.entries[i * dim + j] = 1.0 - a;
        w.entries[j * dim + j] = a;
        w.entries[j * dim + i] = 1.0 - a;
        w
    }

    pub fn permutation(perm: &[usize]) -> Self {
        let dim = perm.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, &p) in perm.iter().enumerate() {
            entries[i * dim + p] = 1.0;
        }
        StochasticMatrix { dim, entries }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows_vec(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// `y = W x`, writing into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            let row = self.row(i);
            let mut acc = 0.0;
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            out[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        out
    }

    /// Raw matrix product `self * other` without re-validation.
    pub fn mul_raw(&self, other: &StochasticMatrix) -> Vec<f64> {
        let m = self.dim;
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for l in 0..m {
                let a = self.entries[i * m + l];
                if a == 0.0 {
                    continue;
                }
                let row_b = other.row(l);
                let out_row = &mut out[i * m..(i + 1) * m];
                for (o, b) in out_row.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `det(W)` via LU decomposition with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let m = self.dim;
        let mut a = self.entries.clone();
        let mut det = 1.0;
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if piv != col {
                for c in 0..m {
                    a.swap(col * m + c, piv * m + c);
                }
                det = -det;
            }
            let d = a[col * m + col];
            det *= d;
            for r in col + 1..m {
                let f = a[r * m + col] / d;
                if f == 0.0 {
                    continue;
                }
                for c in col..m {
                    a[r * m + c] -= f * a[col * m + c];
                }
            }
        }
        det
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        (0..self.dim).all(|j| {
            let col: f64 = (0..self.dim).map(|i| self.get(i, j)).sum();
            (col - 1.0).abs() <= tol
        })
    }

    pub fn max_abs_diff(&self, other: &StochasticMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for StochasticMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows_vec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StochasticMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        StochasticMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A nonnegative vector summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StochasticVector(Vec<f64>);

impl StochasticVector {
    pub fn validate(entries: Vec<f64>, tol: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NonStochasticVector("empty vector".into()));
        }
        let mut v = entries;
        for x in v.iter_mut() {
            if !x.is_finite() || *x < -TOL_ENTRY {
                return Err(Error::NonStochasticVector(format!("bad entry {x}")));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NonStochasticVector(format!("sum {sum}")));
        }
        for x in v.iter_mut() {
            *x /= sum;
        }
        Ok(StochasticVector(v))
    }

    pub fn uniform(dim: usize) -> Self {
        StochasticVector(vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn min_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&x| x > 0.0)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(p, v)| p * v).sum()
    }
}

impl<'de> Deserialize<'de> for StochasticVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        StochasticVector::validate(v, TOL_ROW).map_err(serde::de::Error::custom)
    }
}

/// A state vector for the driven dynamics; entries are unconstrained reals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("state vector has non-finite entries".into()));
        }
        Ok(StateVector(entries))
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        StateVector(v)
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        StateVector(vec![c; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }
}

/// A canonical nontrivial cut of `[m]`: a bitmask over agents with agent 1
/// (bit 0) always a member, so a cut and its complement are one object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cut {
    mask: u64,
    dim: usize,
}

impl Cut {
    /// Builds the canonical cut containing the given members (1-based agent
    /// indices are not used; members are 0-based). The representation holding
    /// agent 0 is stored.
    pub fn new(dim: usize, members: &[usize]) -> Result<Self> {
        if dim < 2 || dim > 63 {
            return Err(Error::Invalid(format!("cut dimension {dim} unsupported")));
        }
        let mut mask: u64 = 0;
        for &i in members {
            if i >= dim {
                return Err(Error::Invalid(format!("cut member {i} out of range")));
            }
            mask |= 1 << i;
        }
        Self::from_mask(dim, mask)
    }

    pub fn from_mask(dim: usize, mask: u64) -> Result<Self> {
        let full = (1u64 << dim) - 1;
        let mask = mask & full;
        if mask == 0 || mask == full {
            return Err(Error::Invalid("cut must be a nontrivial subset".into()));
        }
        let canonical = if mask & 1 == 1 { mask } else { full & !mask };
        Ok(Cut {
            mask: canonical,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.contains(i)).collect()
    }

    pub fn complement_members(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| !self.contains(i)).collect()
    }

    /// Complementation maps a canonical cut to itself.
    pub fn complement(&self) -> Cut {
        let full = (1u64 << self.dim) - 1;
        Cut::from_mask(self.dim, full & !self.mask).expect("complement of nontrivial is nontrivial")
    }

    pub fn label(&self) -> String {
        let m: Vec<String> = self.members().iter().map(|i| (i + 1).to_string()).collect();
        format!("{{{}}}", m.join(","))
    }
}

impl Serialize for Cut {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.members().serialize(serializer)
    }
}

/// Backward product `Phi(k,t) = W(k) W(k-1) ... W(t)` of an ordered slice
/// given as `[W(t), ..., W(k)]`: the latest matrix multiplies on the left.
/// The result is re-validated, clamping accumulated drift.
pub fn chain_product(matrices: &[StochasticMatrix]) -> Result<StochasticMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::Invalid("empty matrix list".into()))?;
    let dim = first.dim();
    let mut acc = first.clone();
    for w in &matrices[1..] {
        if w.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.dim(),
            });
        }
        let raw = w.mul_raw(&acc);
        acc = StochasticMatrix::validate(dim, &raw, TOL_ROW)?;
    }
    Ok(acc)
}

/// The undirected flow `W_S` across the cut: the sum of entries crossing
/// between `S` and its complement in both directions. Symmetric under
/// complementation by construction (same summands).
pub fn cut_flow(w: &StochasticMatrix, s: &Cut) -> f64 {
    debug_assert_eq!(w.dim(), s.dim());
    let m = w.dim();
    let mut total = 0.0;
    for i in 0..m {
        if !s.contains(i) {
            continue;
        }
        for j in 0..m {
            if s.contains(j) {
                continue;
            }
            total += w.get(i, j) + w.get(j, i);
        }
    }
    total
}

/// Spread `d(x) = max_i x_i - min_j x_j`; zero exactly at consensus.
pub fn spread(x: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in x {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Weighted variance `V(x) = sum_i pi_i (x_i - pi^T x)^2`.
pub fn lyapunov_v(x: &[f64], pi: &StochasticVector) -> f64 {
    debug_assert_eq!(x.len(), pi.dim());
    let mean = pi.dot(x);
    pi.entries()
        .iter()
        .zip(x)
        .map(|(p, v)| p * (v - mean) * (v - mean))
        .sum()
}

/// Evaluates `V(x)` along two algebraic routes: the weighted-variance sum and
/// the quadratic form `x^T (D - pi pi^T) x` with `D = diag(pi)`. The two must
/// agree to float precision; callers assert it.
pub fn quadratic_form_identity_check(x: &[f64], pi: &StochasticVector) -> (f64, f64) {
    let direct = lyapunov_v(x, pi);
    let mean = pi.dot(x);
    let quad: f64 = pi
        .entries()
        .iter()
        .zip(x)
        .map(|(p, v)| p * v * v)
        .sum::<f64>()
        - mean * mean;
    (direct, quad)
}

/// Solves the square system `A x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major n x n.
pub fn solve_linear(a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::Invalid("singular linear system".into()));
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row * n + c] * x[c];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}
