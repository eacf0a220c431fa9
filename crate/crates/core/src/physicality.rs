//! Zero-norm (unphysical) networks, the paradox loop fixtures, and chained
//! gate libraries with optional per-gate postselection.

use std::fs;
use std::path::{Path, PathBuf};

use num::Zero;
use thiserror::Error;

use crate::gadget::{parse_mat, IntegerMatrix};
use crate::network::{norm_squared, LegRef, TensorNetwork};
use crate::parse::ParseError;
use crate::scalar::{Backend, Complex, Rational, Scalar};
use crate::tensor::{conjugate, contract_tensors, Entries, Leg, Tensor, TensorError};
use crate::tnf::parse_tnf;

/// Default relative tolerance for float zero tests.
pub const DEFAULT_TOL: f64 = 1e-9;

const GRANDFATHER_TNF: &str = include_str!("../fixtures/grandfather.tnf");
const UNPROVED_TNF: &str = include_str!("../fixtures/unproved_theorem.tnf");

#[derive(Debug, Error)]
pub enum PhysicalityError {
    #[error("gate library is empty")]
    EmptyLibrary,
    #[error("gate `{0}` does not match the library's leg dimensions")]
    ShapeMismatch(String),
    #[error("gate `{name}`: {reason}")]
    BadGate { name: String, reason: String },
    #[error("word is empty")]
    EmptyWord,
    #[error("gate index {index} out of range for a library of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("gate `{0}` is not unitary")]
    NotUnitary(String),
    #[error("gate `{0}` carries a postselection")]
    HasPostselection(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Outcome of a physicality check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub physical: bool,
    pub norm_squared: Scalar,
}

/// `(norm != 0, norm)` for the squared norm of `net`. Exact networks use exact
/// equality; float networks compare against `tol` times the squared product
/// of node Frobenius norms.
pub fn is_physical(net: &TensorNetwork) -> Result<Verdict, TensorError> {
    is_physical_with_tol(net, DEFAULT_TOL)
}

pub fn is_physical_with_tol(net: &TensorNetwork, tol: f64) -> Result<Verdict, TensorError> {
    let n = norm_squared(net)?;
    let scale = net.frobenius_scale().powi(2);
    Ok(Verdict { physical: !n.is_negligible(tol, scale), norm_squared: n })
}

/// The grandfather-paradox loop; contracts to exactly 0.
pub fn grandfather_network() -> TensorNetwork {
    parse_tnf(GRANDFATHER_TNF).expect("bundled fixture parses")
}

/// The unproved-theorem loop; contracts to `|00> + |11>` on its two open legs.
pub fn unproved_theorem_network() -> TensorNetwork {
    parse_tnf(UNPROVED_TNF).expect("bundled fixture parses")
}

/// Source text of the bundled fixtures.
pub fn fixture_tnf(name: &str) -> Option<&'static str> {
    match name {
        "grandfather" => Some(GRANDFATHER_TNF),
        "unproved" | "unproved_theorem" => Some(UNPROVED_TNF),
        _ => None,
    }
}

/// Leg layout of an operator on a space of dimension `dim`: one binary leg per
/// qubit when `dim` is a power of two, else a single leg of dimension `dim`.
pub fn wire_dims(dim: usize) -> Vec<usize> {
    if dim >= 2 && dim.is_power_of_two() {
        vec![2; dim.trailing_zeros() as usize]
    } else {
        vec![dim]
    }
}

fn legs(prefix: &str, dims: &[usize]) -> Vec<Leg> {
    dims.iter().enumerate().map(|(i, &d)| Leg::new(format!("{prefix}{i}"), d)).collect()
}

/// Operator tensor with legs `out0.., in0..` from a row-major `dim x dim`
/// matrix.
pub fn operator_tensor(dim: usize, entries: Entries) -> Result<Tensor, TensorError> {
    let w = wire_dims(dim);
    let mut l = legs("out", &w);
    l.extend(legs("in", &w));
    Tensor::new(l, entries)
}

/// A library operator: a tensor with legs `out0.., in0..` and, when it
/// carries a postselection, extra legs `post0..` that are closed by `post`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    op: Tensor,
    post: Option<Tensor>,
    wires: usize,
}

impl Gate {
    pub fn new(name: impl Into<String>, op: Tensor) -> Result<Self, PhysicalityError> {
        Gate::build(name.into(), op, None)
    }

    /// `op` must have legs `out.., in.., post..`; `post` has legs `post..`.
    pub fn with_post(name: impl Into<String>, op: Tensor, post: Tensor) -> Result<Self, PhysicalityError> {
        Gate::build(name.into(), op, Some(post))
    }

    fn build(name: String, op: Tensor, post: Option<Tensor>) -> Result<Self, PhysicalityError> {
        let bad = |reason: String| PhysicalityError::BadGate { name: name.clone(), reason };
        let n_post = post.as_ref().map_or(0, Tensor::rank);
        if op.rank() < n_post || !(op.rank() - n_post).is_multiple_of(2) || op.rank() == n_post {
            return Err(bad(format!("{} legs cannot split into out/in/post groups", op.rank())));
        }
        let wires = (op.rank() - n_post) / 2;
        for (k, leg) in op.legs().iter().enumerate() {
            let want = if k < wires {
                format!("out{k}")
            } else if k < 2 * wires {
                format!("in{}", k - wires)
            } else {
                format!("post{}", k - 2 * wires)
            };
            if leg.label != want {
                return Err(bad(format!("leg {k} is `{}`, expected `{want}`", leg.label)));
            }
        }
        for i in 0..wires {
            if op.legs()[i].dim != op.legs()[wires + i].dim {
                return Err(bad(format!("out{i} and in{i} differ in dimension")));
            }
        }
        if let Some(p) = &post {
            for (k, leg) in p.legs().iter().enumerate() {
                if leg.label != format!("post{k}") || leg.dim != op.legs()[2 * wires + k].dim {
                    return Err(bad(format!("postselection leg {k} does not match the operator")));
                }
            }
            if p.backend() != op.backend() {
                return Err(PhysicalityError::Tensor(TensorError::BackendMismatch));
            }
        }
        Ok(Gate { name, op, post, wires })
    }

    /// An integer matrix as an exact gate.
    pub fn from_matrix(name: impl Into<String>, m: &IntegerMatrix) -> Result<Self, PhysicalityError> {
        let name = name.into();
        if m.rows() != m.cols() {
            return Err(PhysicalityError::BadGate { name, reason: "matrix is not square".into() });
        }
        let entries = Entries::Exact(m.entries().iter().map(|v| Rational::from_integer(v.clone())).collect());
        Gate::new(name, operator_tensor(m.rows(), entries)?)
    }

    pub fn operator(&self) -> &Tensor {
        &self.op
    }

    pub fn postselection(&self) -> Option<&Tensor> {
        self.post.as_ref()
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn wire_dims(&self) -> Vec<usize> {
        self.op.dims()[..self.wires].to_vec()
    }

    pub fn dim(&self) -> usize {
        self.wire_dims().iter().product()
    }

    pub fn backend(&self) -> Backend {
        self.op.backend()
    }

    fn to_float(&self) -> Gate {
        Gate {
            name: self.name.clone(),
            op: self.op.to_float(),
            post: self.post.as_ref().map(Tensor::to_float),
            wires: self.wires,
        }
    }

    /// The operator with the postselection applied, legs `out.., in..`.
    pub fn effective(&self) -> Result<Tensor, TensorError> {
        match &self.post {
            None => Ok(self.op.clone()),
            Some(p) => {
                let pairs: Vec<(usize, usize)> = (0..p.rank()).map(|k| (2 * self.wires + k, k)).collect();
                Ok(contract_tensors(&self.op, p, &pairs)?.0)
            }
        }
    }
}

/// A nonempty list of gates acting on the same wires. Mixed exact and float
/// gates are all moved to the float backend.
#[derive(Clone, Debug, PartialEq)]
pub struct GateLibrary {
    gates: Vec<Gate>,
}

impl GateLibrary {
    pub fn new(gates: Vec<Gate>) -> Result<Self, PhysicalityError> {
        let first = gates.first().ok_or(PhysicalityError::EmptyLibrary)?;
        let dims = first.wire_dims();
        if let Some(g) = gates.iter().find(|g| g.wire_dims() != dims) {
            return Err(PhysicalityError::ShapeMismatch(g.name.clone()));
        }
        let gates = if gates.iter().any(|g| g.backend() == Backend::Float) {
            gates.iter().map(Gate::to_float).collect()
        } else {
            gates
        };
        Ok(GateLibrary { gates })
    }

    /// Loads every `.mat` (integer matrix) and `.tnf` (network with open legs
    /// `out0.., in0..`) file in `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Self, PhysicalityError> {
        let io = |path: &Path, source| PhysicalityError::Io { path: path.to_path_buf(), source };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("mat" | "tnf")))
            .collect();
        paths.sort();
        let mut gates = Vec::new();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("gate").to_string();
            let parse_err = |source| PhysicalityError::Parse { path: path.clone(), source };
            if path.extension().and_then(|e| e.to_str()) == Some("mat") {
                let m = parse_mat(&text).map_err(parse_err)?;
                gates.push(Gate::from_matrix(name, &m)?);
            } else {
                let net = parse_tnf(&text).map_err(parse_err)?;
                gates.push(Gate::new(name, net.contract(None)?)?);
            }
        }
        GateLibrary::new(gates)
    }

    pub fn to_float(&self) -> GateLibrary {
        GateLibrary { gates: self.gates.iter().map(Gate::to_float).collect() }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn backend(&self) -> Backend {
        self.gates[0].backend()
    }

    pub fn dim(&self) -> usize {
        self.gates[0].dim()
    }
}

/// Composes the gates of `word` (0-based indices) in sequence: gate `j`'s
/// inputs feed gate `j+1`'s outputs, so the contraction is the matrix
/// product in word order. Open legs are the first gate's outputs followed by
/// the last gate's inputs; postselections are included as separate nodes.
pub fn chain_word(lib: &GateLibrary, word: &[usize]) -> Result<TensorNetwork, PhysicalityError> {
    if word.is_empty() {
        return Err(PhysicalityError::EmptyWord);
    }
    if let Some(&index) = word.iter().find(|&&i| i >= lib.len()) {
        return Err(PhysicalityError::IndexOutOfRange { index, len: lib.len() });
    }
    let mut net = TensorNetwork::new();
    let w = lib.gates[0].wires;
    for (j, &g) in word.iter().enumerate() {
        let gate = &lib.gates[g];
        let gid = format!("g{j}");
        net.add_node(&gid, gate.op.clone())?;
        if let Some(p) = &gate.post {
            let pid = format!("p{j}");
            net.add_node(&pid, p.clone())?;
            for k in 0..p.rank() {
                net.connect(LegRef::new(&gid, format!("post{k}")), LegRef::new(&pid, format!("post{k}")))?;
            }
        }
        if j > 0 {
            for i in 0..w {
                net.connect(LegRef::new(format!("g{}", j - 1), format!("in{i}")), LegRef::new(&gid, format!("out{i}")))?;
            }
        }
    }
    for i in 0..w {
        net.push_open(LegRef::new("g0", format!("out{i}")))?;
    }
    for i in 0..w {
        net.push_open(LegRef::new(format!("g{}", word.len() - 1), format!("in{i}")))?;
    }
    Ok(net)
}

fn identity_like(gate: &Gate, backend: Backend) -> Result<Tensor, TensorError> {
    let mut l = legs("out", &gate.wire_dims());
    l.extend(legs("in", &gate.wire_dims()));
    Tensor::from_fn(l, backend, |idx| {
        let (o, i) = idx.split_at(idx.len() / 2);
        if o == i {
            Scalar::one(backend)
        } else {
            Scalar::zero(backend)
        }
    })
}

/// Product of the gates of `word` (the identity for the empty word).
pub fn word_product(lib: &GateLibrary, word: &[usize]) -> Result<Tensor, PhysicalityError> {
    if word.is_empty() {
        return Ok(identity_like(&lib.gates[0], lib.backend())?);
    }
    let t = chain_word(lib, word)?.contract(None)?;
    let w = lib.gates[0].wires;
    let labels: Vec<String> = (0..w).map(|i| format!("out{i}")).chain((0..w).map(|i| format!("in{i}"))).collect();
    Ok(t.with_labels(&labels)?)
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> Result<bool, TensorError> {
    match (a.entries(), b.entries()) {
        (Entries::Exact(x), Entries::Exact(y)) => Ok(x == y),
        _ => Ok(a.max_abs_diff(b)? <= tol),
    }
}

/// Whether `G^dagger G` is the identity (exactly, or within `tol` on floats).
pub fn is_unitary(gate: &Gate, tol: f64) -> Result<bool, TensorError> {
    let op = gate.effective()?;
    let w = gate.wires;
    let pairs: Vec<(usize, usize)> = (0..w).map(|i| (i, i)).collect();
    let (gram, _) = contract_tensors(&conjugate(&op), &op, &pairs)?;
    let id = identity_like(gate, op.backend())?;
    let gram = gram.with_labels(&id.labels())?;
    close(&gram, &id, tol)
}

/// Decides whether two words over a unitary library give the same operator,
/// by multiplying out both products.
pub fn word_problem_unitary(lib: &GateLibrary, w1: &[usize], w2: &[usize]) -> Result<bool, PhysicalityError> {
    word_problem_unitary_with_tol(lib, w1, w2, DEFAULT_TOL)
}

pub fn word_problem_unitary_with_tol(
    lib: &GateLibrary,
    w1: &[usize],
    w2: &[usize],
    tol: f64,
) -> Result<bool, PhysicalityError> {
    for g in &lib.gates {
        if g.post.is_some() {
            return Err(PhysicalityError::HasPostselection(g.name.clone()));
        }
        if !is_unitary(g, tol)? {
            return Err(PhysicalityError::NotUnitary(g.name.clone()));
        }
    }
    let a = word_product(lib, w1)?;
    let b = word_product(lib, w2)?;
    Ok(close(&a, &b, tol)?)
}

/// Standard single- and two-qubit gates. Real gates with integer entries are
/// exact; the Hadamard is float.
pub mod gates {
    use super::*;

    fn exact(name: &str, dim: usize, m: &[i64]) -> Gate {
        let entries = Entries::Exact(m.iter().map(|&v| Rational::from_integer(v.into())).collect());
        Gate::new(name, operator_tensor(dim, entries).expect("valid shape")).expect("valid gate")
    }

    pub fn identity(qubits: usize) -> Gate {
        let n = 1usize << qubits;
        let m: Vec<i64> = (0..n * n).map(|k| (k / n == k % n) as i64).collect();
        exact("I", n, &m)
    }

    pub fn pauli_x() -> Gate {
        exact("X", 2, &[0, 1, 1, 0])
    }

    pub fn pauli_z() -> Gate {
        exact("Z", 2, &[1, 0, 0, -1])
    }

    pub fn pauli_y() -> Gate {
        let e = vec![Complex::zero(), Complex::new(0.0, -1.0), Complex::new(0.0, 1.0), Complex::zero()];
        Gate::new("Y", operator_tensor(2, Entries::Float(e)).expect("valid shape")).expect("valid gate")
    }

    pub fn hadamard() -> Gate {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e = [h, h, h, -h].iter().map(|&v| Complex::new(v, 0.0)).collect();
        Gate::new("H", operator_tensor(2, Entries::Float(e)).expect("valid shape")).expect("valid gate")
    }

    /// Control on qubit 0, target qubit 1.
    pub fn cnot() -> Gate {
        exact("CNOT", 4, &[1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0])
    }

    pub fn swap() -> Gate {
        exact("SWAP", 4, &[1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1])
    }

    /// `g` on one qubit of a two-qubit register.
    pub fn on_qubit(g: &Gate, qubit: usize) -> Gate {
        let id = identity(1).operator().to_backend(g.backend()).expect("exact to any");
        let (a, b) = if qubit == 0 { (g.operator(), &id) } else { (&id, g.operator()) };
        let (prod, _) = contract_tensors(a, &b.clone().with_labels(&["o", "i"]).expect("two legs"), &[]).expect("product");
        // legs now out0 in0 o i -> out0 out1 in0 in1
        let t = prod.with_labels(&["out0", "in0", "out1", "in1"]).expect("four legs");
        let t = t.permuted(&["out0", "out1", "in0", "in1"]).expect("known labels");
        Gate::new(format!("{}{}", g.name, qubit), t).expect("valid gate")
    }

    /// `|0><0|` and `|1><1|`, handy for mortal libraries.
    pub fn projector(bit: usize) -> Gate {
        let mut m = [0i64; 4];
        m[bit * 3] = 1;
        exact(if bit == 0 { "P0" } else { "P1" }, 2, &m)
    }
}
