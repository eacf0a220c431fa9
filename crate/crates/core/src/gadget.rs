//! Integer matrices as postselected gate gadgets.
//!
//! Any nonzero integer matrix `M` with SVD `U S V^T` is realised on
//! `m = ceil(log2 n)` qubits as `V^T`, then a copy of the register onto `m`
//! fresh ancillas, then `U`, with the ancillas postselected on
//! `psi = sigma / |M|_F^2`. The network contracts to `M / |M|_F^2`.

use std::fmt;

use num::{BigInt, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::boolean::StandardTensor;
use crate::network::{LegRef, TensorNetwork};
use crate::parse::{strip_comment, ParseError};
use crate::physicality::{Gate, PhysicalityError};
use crate::scalar::{Complex, Scalar};
use crate::svd::svd;
use crate::tensor::{Entries, Leg, Tensor, TensorError};

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("the zero matrix has no gadget")]
    ZeroMatrix,
    #[error("expected a {want} matrix, got {rows}x{cols}")]
    Shape { want: String, rows: usize, cols: usize },
    #[error("matrix index {index} out of range for {len} matrices")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Gate(#[from] PhysicalityError),
}

/// Dense row-major matrix of arbitrary-precision integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntegerMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self, GadgetError> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(GadgetError::Shape { want: format!("{rows}x{cols}"), rows, cols: entries.len() / rows.max(1) });
        }
        Ok(IntegerMatrix { rows, cols, entries })
    }

    /// Row-major from machine integers; panics if the length is not `rows * cols`.
    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        IntegerMatrix { rows, cols, entries: entries.iter().map(|&v| BigInt::from(v)).collect() }
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n).map(|k| BigInt::from((k / n == k % n) as i64)).collect();
        IntegerMatrix { rows: n, cols: n, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntegerMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn mul(&self, other: &IntegerMatrix) -> IntegerMatrix {
        assert_eq!(self.cols, other.rows, "incompatible shapes");
        let mut out = IntegerMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.entries[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.entries[k * other.cols + j];
                    if !b.is_zero() {
                        out.entries[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> BigInt {
        self.entries.iter().map(|v| v * v).sum()
    }

    /// Determinant by fraction-free (Bareiss) elimination; `None` if not square.
    pub fn det(&self) -> Option<BigInt> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a = self.entries.clone();
        let mut sign = BigInt::from(1);
        let mut prev = BigInt::from(1);
        for k in 0..n {
            if a[k * n + k].is_zero() {
                let Some(p) = (k + 1..n).find(|&r| !a[r * n + k].is_zero()) else {
                    return Some(BigInt::zero());
                };
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = v / &prev;
                }
            }
            prev = a[k * n + k].clone();
        }
        Some(sign * &a[n * n - 1])
    }

    /// Zero-pads to `n x n` (top-left block holds `self`).
    pub fn padded(&self, n: usize) -> IntegerMatrix {
        assert!(n >= self.rows && n >= self.cols, "cannot pad to a smaller size");
        let mut out = IntegerMatrix::zeros(n, n);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[i * n + j] = self.get(i, j).clone();
            }
        }
        out
    }

    /// The top-left `k x k` block.
    pub fn top_left(&self, k: usize) -> IntegerMatrix {
        let mut out = IntegerMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                out.entries[i * k + j] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn max_abs(&self) -> BigInt {
        self.entries.iter().map(|v| v.abs()).max().unwrap_or_default()
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_mat(self))
    }
}

/// Parses a matrix file: `mat R C`, then `R` rows of `C` integers.
pub fn parse_mat(text: &str) -> Result<IntegerMatrix, ParseError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, strip_comment(l))).filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| ParseError::new(1, "missing `mat R C` header"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (rows, cols) = match words.as_slice() {
        ["mat", r, c] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
        _ => None,
    }
    .ok_or_else(|| ParseError::new(hline, "expected `mat R C` header"))?;
    if rows == 0 || cols == 0 {
        return Err(ParseError::new(hline, "matrix dimensions must be positive"));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    let mut last = hline;
    for (line, text) in lines {
        if entries.len() == rows * cols {
            return Err(ParseError::new(line, format!("more than {rows} rows")));
        }
        let row = text
            .split_whitespace()
            .map(|w| w.parse::<BigInt>().map_err(|_| ParseError::new(line, format!("bad integer `{w}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != cols {
            return Err(ParseError::new(line, format!("expected {cols} entries, found {}", row.len())));
        }
        entries.extend(row);
        last = line;
    }
    if entries.len() != rows * cols {
        return Err(ParseError::new(last, format!("expected {rows} rows, found {}", entries.len() / cols)));
    }
    Ok(IntegerMatrix { rows, cols, entries })
}

pub fn write_mat(m: &IntegerMatrix) -> String {
    let mut out = format!("mat {} {}\n", m.rows, m.cols);
    for i in 0..m.rows {
        let row: Vec<String> = (0..m.cols).map(|j| m.get(i, j).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Qubits needed for an `n x n` matrix: `max(1, ceil(log2 n))`.
pub fn qubits_for(n: usize) -> usize {
    (n.max(2).next_power_of_two().trailing_zeros() as usize).max(1)
}

/// The SVD decomposition of an integer matrix as gates on `m` qubits.
#[derive(Clone, Debug)]
pub struct GateGadget {
    m: usize,
    source_dim: usize,
    u: Tensor,
    vt: Tensor,
    psi: Vec<f64>,
    sigma: Vec<f64>,
    frobenius_sq: BigInt,
}

fn qubit_legs(prefix: &str, m: usize) -> Vec<Leg> {
    (0..m).map(|i| Leg::new(format!("{prefix}{i}"), 2)).collect()
}

fn real_tensor(legs: Vec<Leg>, data: &[f64]) -> Result<Tensor, TensorError> {
    Tensor::float(legs, data.iter().map(|&v| Complex::new(v, 0.0)).collect())
}

fn operator(m: usize, data: &[f64]) -> Result<Tensor, TensorError> {
    let mut legs = qubit_legs("out", m);
    legs.extend(qubit_legs("in", m));
    real_tensor(legs, data)
}

impl GateGadget {
    /// Qubit count.
    pub fn qubits(&self) -> usize {
        self.m
    }

    /// Size of the matrix before padding.
    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    /// Left factor, legs `out0.., in0..`.
    pub fn u(&self) -> &Tensor {
        &self.u
    }

    /// Right factor `V^T`, legs `out0.., in0..`.
    pub fn vt(&self) -> &Tensor {
        &self.vt
    }

    /// Postselection amplitudes, length `2^m`.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Singular values, nonincreasing, length `2^m`.
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn frobenius_sq(&self) -> &BigInt {
        &self.frobenius_sq
    }

    /// The postselection as a tensor on legs `p0..`.
    pub fn psi_tensor(&self) -> Tensor {
        real_tensor(qubit_legs("p", self.m), &self.psi).expect("2^m entries")
    }

    /// The full gadget network. Open legs are `out0..` (from `U`) then `in0..`
    /// (into `V^T`).
    pub fn network(&self) -> TensorNetwork {
        self.build_network(true).expect("gadget shapes are consistent")
    }

    fn build_network(&self, with_psi: bool) -> Result<TensorNetwork, TensorError> {
        let m = self.m;
        let mut net = TensorNetwork::new();
        net.add_node("vt", self.vt.clone())?;
        net.add_node("u", self.u.clone())?;
        let lines = copy_register(&mut net, (0..m).map(|i| LegRef::new("vt", format!("out{i}"))).collect())?;
        for (i, line) in lines[..m].iter().enumerate() {
            net.connect(line.clone(), LegRef::new("u", format!("in{i}")))?;
        }
        if with_psi {
            net.add_node("psi", self.psi_tensor())?;
            for (i, line) in lines[m..].iter().enumerate() {
                net.connect(line.clone(), LegRef::new("psi", format!("p{i}")))?;
            }
        }
        for i in 0..m {
            net.push_open(LegRef::new("u", format!("out{i}")))?;
        }
        for i in 0..m {
            net.push_open(LegRef::new("vt", format!("in{i}")))?;
        }
        if !with_psi {
            for line in &lines[m..] {
                net.push_open(line.clone())?;
            }
        }
        Ok(net)
    }

    /// The gadget as a library gate: the unitaries and copy network contracted
    /// into one operator with legs `out.., in.., post..`, postselected on `psi`.
    pub fn as_gate(&self, name: impl Into<String>) -> Result<Gate, GadgetError> {
        let net = self.build_network(false)?;
        let m = self.m;
        let labels: Vec<String> = (0..m)
            .map(|i| format!("out{i}"))
            .chain((0..m).map(|i| format!("in{i}")))
            .chain((0..m).map(|i| format!("post{i}")))
            .collect();
        let op = net.contract(None)?.with_labels(&labels)?;
        let post = self.psi_tensor().with_labels(&labels[2 * m..])?;
        Ok(Gate::with_post(name, op, post)?)
    }
}

/// Appends the generalised copy `|j> -> |j>|j>` on the register `inputs`:
/// one `|0>` ancilla and one CNOT per qubit, then adjacent SWAPs that sort
/// the interleaved lines `a1 b1 a2 b2 ..` into `a1..am b1..bm`. Returns the
/// 2m output line ends.
fn copy_register(net: &mut TensorNetwork, inputs: Vec<LegRef>) -> Result<Vec<LegRef>, TensorError> {
    let m = inputs.len();
    let cnot = StandardTensor::Cnot.tensor().to_float();
    let zero = StandardTensor::ZeroBra.tensor().to_float();
    let swap = StandardTensor::Swap.tensor().to_float();
    let mut lines: Vec<(usize, LegRef)> = Vec::with_capacity(2 * m);
    for (i, input) in inputs.into_iter().enumerate() {
        let (cid, zid) = (format!("cnot{i}"), format!("zero{i}"));
        net.add_node(&cid, cnot.clone())?;
        net.add_node(&zid, zero.clone())?;
        net.connect(input, LegRef::new(&cid, "in0"))?;
        net.connect(LegRef::new(&zid, "x0"), LegRef::new(&cid, "in1"))?;
        lines.push((i, LegRef::new(&cid, "out0")));
        lines.push((m + i, LegRef::new(&cid, "out1")));
    }
    let mut swaps = 0;
    for pass in 0..lines.len() {
        for p in 0..lines.len() - 1 - pass {
            if lines[p].0 > lines[p + 1].0 {
                let sid = format!("swap{swaps}");
                swaps += 1;
                net.add_node(&sid, swap.clone())?;
                net.connect(lines[p].1.clone(), LegRef::new(&sid, "in0"))?;
                net.connect(lines[p + 1].1.clone(), LegRef::new(&sid, "in1"))?;
                // SWAP's out0 carries what came in on in1.
                let (ka, kb) = (lines[p].0, lines[p + 1].0);
                lines[p] = (kb, LegRef::new(&sid, "out0"));
                lines[p + 1] = (ka, LegRef::new(&sid, "out1"));
            }
        }
    }
    debug_assert_eq!(swaps, m * (m - 1) / 2);
    Ok(lines.into_iter().map(|(_, r)| r).collect())
}

/// Builds the gadget for `mat`, zero-padding to `2^m x 2^m` first.
pub fn svd_embed(mat: &IntegerMatrix) -> Result<GateGadget, GadgetError> {
    if mat.is_zero() {
        return Err(GadgetError::ZeroMatrix);
    }
    let source_dim = mat.rows.max(mat.cols);
    let m = qubits_for(source_dim);
    let n = 1usize << m;
    let padded = mat.padded(n);
    let fro = padded.frobenius_sq();
    let fro_f = fro.to_f64().unwrap_or(f64::INFINITY);
    let dec = svd(&padded.to_f64(), n);
    let psi: Vec<f64> = dec.sigma.iter().map(|s| s / fro_f).collect();
    Ok(GateGadget {
        m,
        source_dim,
        u: operator(m, &dec.u)?,
        vt: operator(m, &dec.vt)?,
        psi,
        sigma: dec.sigma,
        frobenius_sq: fro,
    })
}

/// Contracts the gadget network to a `2^m x 2^m` operator (legs `out.., in..`).
pub fn gadget_contract(g: &GateGadget) -> Result<Tensor, GadgetError> {
    Ok(g.network().contract(None)?)
}

/// `mat / |mat|_F^2` padded to the gadget's size, on the float backend.
pub fn scaled_reference(mat: &IntegerMatrix) -> Result<Tensor, GadgetError> {
    let n = 1usize << qubits_for(mat.rows.max(mat.cols));
    let padded = mat.padded(n);
    let fro = padded.frobenius_sq();
    if fro.is_zero() {
        return Err(GadgetError::ZeroMatrix);
    }
    let data: Vec<Complex> = padded
        .entries
        .iter()
        .map(|v| Scalar::Exact(num::BigRational::new(v.clone(), fro.clone())).to_complex())
        .collect();
    let m = qubits_for(n);
    let mut legs = qubit_legs("out", m);
    legs.extend(qubit_legs("in", m));
    Ok(Tensor::float(legs, data)?)
}

/// Places a 3x3 block in the basis states `00, 01, 10` of two qubits and
/// fixes `11` with a 1.
pub fn embed_3x3(mat: &IntegerMatrix) -> Result<IntegerMatrix, GadgetError> {
    if mat.rows != 3 || mat.cols != 3 {
        return Err(GadgetError::Shape { want: "3x3".into(), rows: mat.rows, cols: mat.cols });
    }
    let mut out = mat.padded(4);
    out.set(3, 3, BigInt::from(1));
    Ok(out)
}

/// Whether the top-left 3x3 block of the product of embedded matrices equals
/// the product of the 3x3 matrices, for `word` (0-based indices).
pub fn block_product_check(ms: &[IntegerMatrix], word: &[usize]) -> Result<bool, GadgetError> {
    if let Some(&index) = word.iter().find(|&&i| i >= ms.len()) {
        return Err(GadgetError::IndexOutOfRange { index, len: ms.len() });
    }
    let embedded = ms.iter().map(embed_3x3).collect::<Result<Vec<_>, _>>()?;
    let mut small = IntegerMatrix::identity(3);
    let mut big = IntegerMatrix::identity(4);
    for &i in word {
        small = small.mul(&ms[i]);
        big = big.mul(&embedded[i]);
    }
    Ok(big.top_left(3) == small)
}

/// The rank-one 3x3 matrix `[[1,0,1],[-1,0,-1],[0,0,0]]`, which squares to itself.
pub fn matrix_a() -> IntegerMatrix {
    IntegerMatrix::from_i64(3, 3, &[1, 0, 1, -1, 0, -1, 0, 0, 0])
}

/// The 3x3 shape used for mortality instances: `[[p,0,0],[0,r,0],[q,s,1]]`.
pub fn mortality_form(p: i64, q: i64, r: i64, s: i64) -> IntegerMatrix {
    IntegerMatrix::from_i64(3, 3, &[p, 0, 0, 0, r, 0, q, s, 1])
}

/// Entries of an operator tensor as a row-major float matrix.
pub fn operator_entries(t: &Tensor) -> Vec<Complex> {
    match t.to_float().entries() {
        Entries::Float(v) => v.clone(),
        Entries::Exact(_) => unreachable!("converted to float"),
    }
}
