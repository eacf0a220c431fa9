//! Dense tensors with labelled legs.
//!
//! Entries are stored row-major with leg 0 most significant, so for qubit
//! legs the flat index of `|x0 x1 ... x(n-1)>` is the bit string read as a
//! big-endian integer.

use std::collections::HashSet;
use std::sync::OnceLock;

use num::{BigInt, ToPrimitive, Zero};
use thiserror::Error;

use crate::scalar::{rational_to_f64, Backend, Complex, Rational, Scalar};

/// Default cap on the number of entries of any dense tensor.
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 24;

/// Dense-tensor size cap, overridable through `TNL_MAX_ENTRIES`.
pub fn max_entries() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("TNL_MAX_ENTRIES")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&v: &usize| v > 0)
            .unwrap_or(DEFAULT_MAX_ENTRIES)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("cannot mix exact and float backends in one operation")]
    BackendMismatch,
    #[error("expected {expected} entries for the given legs, got {actual}")]
    EntryCount { expected: usize, actual: usize },
    #[error("leg label `{0}` appears twice")]
    DuplicateLabel(String),
    #[error("leg `{0}` has dimension zero")]
    ZeroDimension(String),
    #[error("no leg labelled `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch between {left} ({left_dim}) and {right} ({right_dim})")]
    DimensionMismatch { left: String, left_dim: usize, right: String, right_dim: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` already exists")]
    DuplicateNode(String),
    #[error("leg `{leg}` of node `{node}` is used more than once")]
    LegReused { node: String, leg: String },
    #[error("leg `{leg}` of node `{node}` is neither bonded nor open")]
    DanglingLeg { node: String, leg: String },
    #[error("bond joins node `{0}` to itself")]
    SelfBond(String),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("invalid contraction order: {0}")]
    InvalidOrder(String),
    #[error("tensor with {entries} entries exceeds the cap of {cap} (set TNL_MAX_ENTRIES to raise it)")]
    TooLarge { entries: u128, cap: usize },
    #[error("index {index:?} out of range for dimensions {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },
    #[error("leg `{label}` has dimension {dim}, expected 2")]
    NonBinaryLeg { label: String, dim: usize },
}

pub type Result<T, E = TensorError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Leg {
    pub label: String,
    pub dim: usize,
}

impl Leg {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Leg { label: label.into(), dim }
    }
}

/// Backing storage; one variant per backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Exact(Vec<Rational>),
    Float(Vec<Complex>),
}

impl Entries {
    pub fn len(&self) -> usize {
        match self {
            Entries::Exact(v) => v.len(),
            Entries::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn backend(&self) -> Backend {
        match self {
            Entries::Exact(_) => Backend::Exact,
            Entries::Float(_) => Backend::Float,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    legs: Vec<Leg>,
    entries: Entries,
}

fn check_legs(legs: &[Leg]) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut count: u128 = 1;
    for leg in legs {
        if leg.dim == 0 {
            return Err(TensorError::ZeroDimension(leg.label.clone()));
        }
        if !seen.insert(leg.label.as_str()) {
            return Err(TensorError::DuplicateLabel(leg.label.clone()));
        }
        count = count.saturating_mul(leg.dim as u128);
    }
    let cap = max_entries();
    if count > cap as u128 {
        return Err(TensorError::TooLarge { entries: count, cap });
    }
    Ok(count as usize)
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

impl Tensor {
    pub fn new(legs: Vec<Leg>, entries: Entries) -> Result<Self> {
        let expected = check_legs(&legs)?;
        if entries.len() != expected {
            return Err(TensorError::EntryCount { expected, actual: entries.len() });
        }
        Ok(Tensor { legs, entries })
    }

    pub fn exact(legs: Vec<Leg>, data: Vec<Rational>) -> Result<Self> {
        Tensor::new(legs, Entries::Exact(data))
    }

    pub fn float(legs: Vec<Leg>, data: Vec<Complex>) -> Result<Self> {
        Tensor::new(legs, Entries::Float(data))
    }

    /// Exact tensor from `(label, dim)` pairs and integer entries.
    pub fn from_ints(legs: &[(&str, usize)], data: &[i64]) -> Result<Self> {
        Tensor::exact(
            legs.iter().map(|&(l, d)| Leg::new(l, d)).collect(),
            data.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect(),
        )
    }

    /// Float tensor from `(label, dim)` pairs and real entries.
    pub fn from_reals(legs: &[(&str, usize)], data: &[f64]) -> Result<Self> {
        Tensor::float(
            legs.iter().map(|&(l, d)| Leg::new(l, d)).collect(),
            data.iter().map(|&v| Complex::new(v, 0.0)).collect(),
        )
    }

    pub fn zeros(legs: Vec<Leg>, backend: Backend) -> Result<Self> {
        let n = check_legs(&legs)?;
        let entries = match backend {
            Backend::Exact => Entries::Exact(vec![Rational::zero(); n]),
            Backend::Float => Entries::Float(vec![Complex::zero(); n]),
        };
        Ok(Tensor { legs, entries })
    }

    /// Builds a tensor by evaluating `f` on every multi-index. Every value must
    /// be on `backend`.
    pub fn from_fn<F>(legs: Vec<Leg>, backend: Backend, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Scalar,
    {
        let n = check_legs(&legs)?;
        let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let mut idx = vec![0; dims.len()];
        let mut exact = Vec::new();
        let mut float = Vec::new();
        for flat in 0..n {
            if flat > 0 {
                increment(&mut idx, &dims);
            }
            match (backend, f(&idx)) {
                (Backend::Exact, Scalar::Exact(v)) => exact.push(v),
                (Backend::Float, Scalar::Float(v)) => float.push(v),
                _ => return Err(TensorError::BackendMismatch),
            }
        }
        let entries = match backend {
            Backend::Exact => Entries::Exact(exact),
            Backend::Float => Entries::Float(float),
        };
        Ok(Tensor { legs, entries })
    }

    /// Rank-0 tensor.
    pub fn scalar(value: Scalar) -> Self {
        let entries = match value {
            Scalar::Exact(v) => Entries::Exact(vec![v]),
            Scalar::Float(v) => Entries::Float(vec![v]),
        };
        Tensor { legs: Vec::new(), entries }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn rank(&self) -> usize {
        self.legs.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.legs.iter().map(|l| l.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.legs.iter().map(|l| l.label.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn backend(&self) -> Backend {
        self.entries.backend()
    }

    pub fn leg_index(&self, label: &str) -> Option<usize> {
        self.legs.iter().position(|l| l.label == label)
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        let dims = self.dims();
        if index.len() != dims.len() || index.iter().zip(&dims).any(|(i, d)| i >= d) {
            return Err(TensorError::IndexOutOfRange { index: index.to_vec(), dims });
        }
        Ok(index.iter().zip(strides(&dims)).map(|(i, s)| i * s).sum())
    }

    pub fn get(&self, index: &[usize]) -> Result<Scalar> {
        let k = self.flat_index(index)?;
        Ok(self.get_flat(k))
    }

    pub fn get_flat(&self, k: usize) -> Scalar {
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(v[k].clone()),
            Entries::Float(v) => Scalar::Float(v[k]),
        }
    }

    /// Flat indices of the entries that are not exactly zero.
    pub fn nonzero_flat(&self) -> Vec<usize> {
        match &self.entries {
            Entries::Exact(v) => (0..v.len()).filter(|&k| !v[k].is_zero()).collect(),
            Entries::Float(v) => (0..v.len()).filter(|&k| !v[k].is_zero()).collect(),
        }
    }

    /// The value of a rank-0 tensor.
    pub fn scalar_value(&self) -> Option<Scalar> {
        (self.rank() == 0).then(|| self.get_flat(0))
    }

    /// Renames every leg; labels are given in leg order.
    pub fn with_labels<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.legs.len() {
            return Err(TensorError::EntryCount { expected: self.legs.len(), actual: labels.len() });
        }
        for (leg, l) in self.legs.iter_mut().zip(labels) {
            leg.label = l.as_ref().to_string();
        }
        check_legs(&self.legs)?;
        Ok(self)
    }

    pub fn relabel(&mut self, old: &str, new: &str) -> Result<()> {
        let k = self.leg_index(old).ok_or_else(|| TensorError::UnknownLabel(old.into()))?;
        if old != new && self.leg_index(new).is_some() {
            return Err(TensorError::DuplicateLabel(new.into()));
        }
        self.legs[k].label = new.to_string();
        Ok(())
    }

    /// Reorders the legs to follow `labels`.
    pub fn permuted<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.rank() {
            return Err(TensorError::EntryCount { expected: self.rank(), actual: labels.len() });
        }
        let perm = labels
            .iter()
            .map(|l| self.leg_index(l.as_ref()).ok_or_else(|| TensorError::UnknownLabel(l.as_ref().into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.permute_axes(&perm))
    }

    /// New tensor whose leg `t` is this tensor's leg `perm[t]`.
    pub(crate) fn permute_axes(&self, perm: &[usize]) -> Self {
        let dims = self.dims();
        let legs = perm.iter().map(|&p| self.legs[p].clone()).collect();
        let entries = match &self.entries {
            Entries::Exact(v) => Entries::Exact(permute(v, &dims, perm)),
            Entries::Float(v) => Entries::Float(permute(v, &dims, perm)),
        };
        Tensor { legs, entries }
    }

    /// Converts exact entries to complex doubles; float tensors are cloned.
    pub fn to_float(&self) -> Self {
        let entries = match &self.entries {
            Entries::Exact(v) => {
                Entries::Float(v.iter().map(|x| Complex::new(rational_to_f64(x), 0.0)).collect())
            }
            Entries::Float(v) => Entries::Float(v.clone()),
        };
        Tensor { legs: self.legs.clone(), entries }
    }

    pub fn to_backend(&self, backend: Backend) -> Result<Self> {
        match (self.backend(), backend) {
            (a, b) if a == b => Ok(self.clone()),
            (Backend::Exact, Backend::Float) => Ok(self.to_float()),
            _ => Err(TensorError::BackendMismatch),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.entries {
            Entries::Exact(v) => v.iter().map(|x| rational_to_f64(x).powi(2)).sum::<f64>().sqrt(),
            Entries::Float(v) => v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        match &self.entries {
            Entries::Exact(v) => v.iter().all(Zero::is_zero),
            Entries::Float(v) => v.iter().all(Zero::is_zero),
        }
    }

    /// Largest entrywise modulus of `self - other` (legs must agree in order
    /// and dimension; backends may differ).
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(TensorError::EntryCount { expected: self.len(), actual: other.len() });
        }
        let (a, b) = (self.to_float(), other.to_float());
        let (Entries::Float(a), Entries::Float(b)) = (&a.entries, &b.entries) else {
            unreachable!("to_float always yields float entries")
        };
        Ok(a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }

    /// Row and column counts when the first `row_legs` legs index rows.
    pub fn matrix_dims(&self, row_legs: usize) -> (usize, usize) {
        let dims = self.dims();
        let rows = dims[..row_legs].iter().product();
        let cols = dims[row_legs..].iter().product();
        (rows, cols)
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Row-major axis permutation: output axis `t` is input axis `perm[t]`.
pub(crate) fn permute<T: Clone>(data: &[T], dims: &[usize], perm: &[usize]) -> Vec<T> {
    if perm.iter().enumerate().all(|(t, &p)| t == p) {
        return data.to_vec();
    }
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let step: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
    let mut out = Vec::with_capacity(data.len());
    let mut idx = vec![0usize; new_dims.len()];
    let mut offset = 0usize;
    for n in 0..data.len() {
        if n > 0 {
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                offset += step[k];
                if idx[k] < new_dims[k] {
                    break;
                }
                offset -= step[k] * new_dims[k];
                idx[k] = 0;
            }
        }
        out.push(data[offset].clone());
    }
    out
}

/// Entrywise complex conjugate. Exact tensors are real and come back unchanged.
pub fn conjugate(t: &Tensor) -> Tensor {
    match &t.entries {
        Entries::Exact(_) => t.clone(),
        Entries::Float(v) => {
            Tensor { legs: t.legs.clone(), entries: Entries::Float(v.iter().map(|x| x.conj()).collect()) }
        }
    }
}

/// Outer product: `a`'s legs followed by `b`'s legs.
///
/// Labels of `b` that collide with labels of `a` get `'` appended until they
/// are unique.
pub fn tensor_product(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    Ok(contract_tensors(a, b, &[])?.0)
}

/// Sums over the leg pairs `(i in a, j in b)`. The result carries `a`'s free
/// legs followed by `b`'s free legs, both in their original order. Returns
/// the renamed labels of `b`'s free legs alongside (old, new) when a label
/// had to be disambiguated.
pub(crate) fn contract_tensors(
    a: &Tensor,
    b: &Tensor,
    pairs: &[(usize, usize)],
) -> Result<(Tensor, Vec<(String, String)>)> {
    if a.backend() != b.backend() {
        return Err(TensorError::BackendMismatch);
    }
    for &(i, j) in pairs {
        let (la, lb) = (&a.legs[i], &b.legs[j]);
        if la.dim != lb.dim {
            return Err(TensorError::DimensionMismatch {
                left: la.label.clone(),
                left_dim: la.dim,
                right: lb.label.clone(),
                right_dim: lb.dim,
            });
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|i| !pairs.iter().any(|p| p.0 == *i)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|j| !pairs.iter().any(|p| p.1 == *j)).collect();

    let mut legs: Vec<Leg> = free_a.iter().map(|&i| a.legs[i].clone()).collect();
    let mut taken: HashSet<String> = legs.iter().map(|l| l.label.clone()).collect();
    let mut renamed = Vec::new();
    for &j in &free_b {
        let mut leg = b.legs[j].clone();
        if taken.contains(&leg.label) {
            let old = leg.label.clone();
            while taken.contains(&leg.label) {
                leg.label.push('\'');
            }
            renamed.push((old, leg.label.clone()));
        }
        taken.insert(leg.label.clone());
        legs.push(leg);
    }
    let out_len = check_legs(&legs)?;

    let dims_a = a.dims();
    let dims_b = b.dims();
    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let m: usize = free_a.iter().map(|&i| dims_a[i]).product();
    let k: usize = pairs.iter().map(|p| dims_a[p.0]).product();
    let n: usize = free_b.iter().map(|&j| dims_b[j]).product();
    debug_assert_eq!(m * n, out_len);

    let entries = match (&a.entries, &b.entries) {
        (Entries::Exact(x), Entries::Exact(y)) => {
            let pa = permute(x, &dims_a, &perm_a);
            let pb = permute(y, &dims_b, &perm_b);
            Entries::Exact(match matmul_small_ints(&pa, &pb, m, k, n) {
                Some(v) => v,
                None => matmul(&pa, &pb, m, k, n),
            })
        }
        (Entries::Float(x), Entries::Float(y)) => {
            let pa = permute(x, &dims_a, &perm_a);
            let pb = permute(y, &dims_b, &perm_b);
            Entries::Float(matmul(&pa, &pb, m, k, n))
        }
        _ => unreachable!("backends checked above"),
    };
    Ok((Tensor { legs, entries }, renamed))
}

fn matmul<T>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T>
where
    T: Clone + Zero + for<'x> std::ops::AddAssign<&'x T>,
    for<'x> &'x T: std::ops::Mul<&'x T, Output = T>,
{
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = &a[i * k + p];
            if x.is_zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, y) in row.iter_mut().zip(brow) {
                if !y.is_zero() {
                    *o += &(x * y);
                }
            }
        }
    }
    out
}

/// Integer fast path for the exact backend; `None` when some entry is not a
/// machine-size integer or an intermediate would overflow.
fn matmul_small_ints(a: &[Rational], b: &[Rational], m: usize, k: usize, n: usize) -> Option<Vec<Rational>> {
    fn to_i64(v: &[Rational]) -> Option<Vec<i64>> {
        v.iter().map(|x| if x.is_integer() { x.numer().to_i64() } else { None }).collect()
    }
    let a = to_i64(a)?;
    let b = to_i64(b)?;
    let mut out = vec![0i128; m * n];
    for i in 0..m {
        for p in 0..k {
            let x = a[i * k + p] as i128;
            if x == 0 {
                continue;
            }
            for j in 0..n {
                let y = b[p * n + j] as i128;
                if y != 0 {
                    let o = &mut out[i * n + j];
                    *o = o.checked_add(x.checked_mul(y)?)?;
                }
            }
        }
    }
    Some(out.into_iter().map(|v| Rational::from_integer(BigInt::from(v))).collect())
}
