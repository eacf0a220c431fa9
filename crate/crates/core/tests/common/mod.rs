//! Seeded random instances and brute-force oracles shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tnl::boolean::{BoolRelation, StandardTensor};
use tnl::gadget::{operator_entries, IntegerMatrix};
use tnl::mortality::{product, MortalityInstance};
use tnl::physicality::{gates, Gate, GateLibrary};
use tnl::sat::{Cnf, TreeTensorNetwork};
use tnl::tensor::Leg;
use tnl::{Backend, Complex, Scalar, Tensor, TensorNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A connected-or-not network of 2..=max_nodes exact nodes with small
/// integer entries. Bonds have dimension 1..=3; a few legs stay open.
pub fn random_network(rng: &mut impl Rng, max_nodes: usize) -> TensorNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let mut legs: Vec<Vec<Leg>> = vec![Vec::new(); n];
    let mut open = Vec::new();
    let bonds = rng.gen_range(n - 1..=n + 1);
    for k in 0..bonds {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        if legs[a].len() >= 3 || legs[b].len() >= 3 {
            continue;
        }
        let d = rng.gen_range(1..=3);
        legs[a].push(Leg::new(format!("w{k}"), d));
        legs[b].push(Leg::new(format!("w{k}"), d));
    }
    for (i, l) in legs.iter_mut().enumerate() {
        if l.is_empty() || rng.gen_bool(0.3) {
            let label = format!("o{i}");
            l.push(Leg::new(&label, rng.gen_range(1..=2)));
            open.push(label);
        }
    }
    let nodes = legs.into_iter().enumerate().map(|(i, l)| {
        let t = Tensor::from_fn(l, Backend::Exact, |_| Scalar::int(rng.gen_range(-3..=3))).unwrap();
        (format!("n{i}"), t)
    });
    // The closure above borrows `rng`; collect before building.
    let nodes: Vec<(String, Tensor)> = nodes.collect();
    TensorNetwork::from_wires(nodes, &open).unwrap()
}

/// Like [`random_network`] but every leg is binary and entries are 0/1.
pub fn random_boolean_network(rng: &mut impl Rng, max_nodes: usize) -> TensorNetwork {
    let n = rng.gen_range(1..=max_nodes);
    let mut legs: Vec<Vec<Leg>> = vec![Vec::new(); n];
    let mut open = Vec::new();
    if n > 1 {
        for k in 0..rng.gen_range(1..=n + 1) {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            if legs[a].len() < 3 && legs[b].len() < 3 {
                legs[a].push(Leg::new(format!("w{k}"), 2));
                legs[b].push(Leg::new(format!("w{k}"), 2));
            }
        }
    }
    for (i, l) in legs.iter_mut().enumerate() {
        if l.is_empty() || rng.gen_bool(0.3) {
            let label = format!("o{i}");
            l.push(Leg::new(&label, 2));
            open.push(label);
        }
    }
    let density: f64 = rng.gen_range(0.2..0.7);
    let nodes: Vec<(String, Tensor)> = legs
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let t = Tensor::from_fn(l, Backend::Exact, |_| Scalar::int(rng.gen_bool(density) as i64)).unwrap();
            (format!("n{i}"), t)
        })
        .collect();
    TensorNetwork::from_wires(nodes, &open).unwrap()
}

/// Random CNF with no tautological clause.
pub fn random_cnf(rng: &mut impl Rng, max_vars: usize, max_clauses: usize) -> Cnf {
    let n = rng.gen_range(1..=max_vars);
    let m = rng.gen_range(1..=max_clauses);
    let clauses = (0..m)
        .map(|_| {
            let k = rng.gen_range(1..=3.min(n));
            let mut vars: Vec<i32> = (1..=n as i32).collect();
            vars.shuffle(rng);
            vars[..k].iter().map(|&v| if rng.gen_bool(0.5) { v } else { -v }).collect()
        })
        .collect();
    Cnf::new(n, clauses).unwrap()
}

pub fn brute_count(cnf: &Cnf) -> u64 {
    let n = cnf.num_vars();
    (0..1u64 << n)
        .filter(|x| {
            let a: Vec<bool> = (0..n).map(|i| x >> i & 1 == 1).collect();
            cnf.eval(&a)
        })
        .count() as u64
}

/// A random tree of binary-leg 0/1 tensors with parent legs chosen so the
/// node condition holds more often than not: each parent value owns a
/// disjoint, nonempty set of child index tuples. Some nodes are left
/// unconstrained so failing trees also appear.
pub fn random_tree(rng: &mut impl Rng, max_nodes: usize) -> (TensorNetwork, BTreeMap<String, String>) {
    let n = rng.gen_range(1..=max_nodes);
    let mut legs: Vec<Vec<Leg>> = vec![Vec::new(); n];
    let mut parents = BTreeMap::new();
    for child in 1..n {
        let parent = rng.gen_range(0..child);
        let label = format!("e{child}");
        legs[parent].push(Leg::new(&label, 2));
        legs[child].insert(0, Leg::new(&label, 2));
        parents.insert(format!("t{child}"), label);
    }
    let mut open = Vec::new();
    for (i, l) in legs.iter_mut().enumerate() {
        let extra = if l.len() < 2 { rng.gen_range(1..=2) } else { rng.gen_range(0..=1) };
        for k in 0..extra {
            let label = format!("x{i}_{k}");
            l.push(Leg::new(&label, 2));
            open.push(label);
        }
    }
    let nodes: Vec<(String, Tensor)> = legs
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let rank = l.len();
            let has_parent = i > 0;
            let careful = rng.gen_bool(0.85);
            let rows = if has_parent { 2 } else { 1 };
            let cols = 1usize << (rank - has_parent as usize);
            // owner[c] = which parent value (if any) may use child tuple c
            let mut owner: Vec<Option<usize>> = (0..cols).map(|_| rng.gen_bool(0.8).then(|| rng.gen_range(0..rows))).collect();
            for r in 0..rows {
                if !owner.contains(&Some(r)) {
                    let c = rng.gen_range(0..cols);
                    owner[c] = Some(r);
                }
            }
            let table: Vec<i64> = (0..rows * cols)
                .map(|k| {
                    let (r, c) = (k / cols, k % cols);
                    if careful { (owner[c] == Some(r)) as i64 } else { rng.gen_bool(0.5) as i64 }
                })
                .collect();
            let t = Tensor::from_fn(l, Backend::Exact, |idx| {
                let flat = idx.iter().fold(0, |a, &b| a * 2 + b);
                Scalar::int(table[flat])
            })
            .unwrap();
            (format!("t{i}"), t)
        })
        .collect();
    (TensorNetwork::from_wires(nodes, &open).unwrap(), parents)
}

pub fn tree(net: TensorNetwork, parents: &BTreeMap<String, String>) -> TreeTensorNetwork {
    TreeTensorNetwork::new(net, parents).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, bound: i64) -> IntegerMatrix {
    let v: Vec<i64> = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    IntegerMatrix::from_i64(rows, cols, &v)
}

pub fn random_nonzero_matrix(rng: &mut impl Rng, rows: usize, cols: usize, bound: i64) -> IntegerMatrix {
    loop {
        let m = random_matrix(rng, rows, cols, bound);
        if !m.is_zero() {
            return m;
        }
    }
}

/// Two-qubit unitaries built from Paulis, Hadamards, CNOT and SWAP.
pub fn unitary_pool() -> Vec<Gate> {
    let mut pool = vec![gates::cnot(), gates::swap(), gates::identity(2)];
    for g in [gates::pauli_x(), gates::pauli_z(), gates::pauli_y(), gates::hadamard()] {
        pool.push(gates::on_qubit(&g, 0));
        pool.push(gates::on_qubit(&g, 1));
    }
    pool
}

pub fn random_unitary_library(rng: &mut impl Rng) -> GateLibrary {
    let pool = unitary_pool();
    let k = rng.gen_range(1..=4);
    let gates: Vec<Gate> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
    GateLibrary::new(gates).unwrap()
}

pub fn random_word(rng: &mut impl Rng, alphabet: usize, max_len: usize) -> Vec<usize> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| rng.gen_range(0..alphabet)).collect()
}

pub fn random_relation(rng: &mut impl Rng, arity: usize, max_tuples: usize) -> BoolRelation {
    let t = rng.gen_range(0..=max_tuples.min(1 << arity));
    let mut all: Vec<u64> = (0..1u64 << arity).collect();
    all.shuffle(rng);
    BoolRelation::new(arity, all[..t].iter().copied()).unwrap()
}

pub fn random_relation_set(rng: &mut impl Rng, max_arity: usize, max_len: usize) -> Vec<BoolRelation> {
    let k = rng.gen_range(1..=max_len);
    (0..k)
        .map(|_| {
            let a = rng.gen_range(1..=max_arity);
            random_relation(rng, a, 1 << a)
        })
        .collect()
}

/// All words over `0..n` of length `1..=max_len`, shortest first, then
/// lexicographic.
pub fn all_words(n: usize, max_len: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=max_len).flat_map(move |len| {
        (0..n.pow(len as u32)).map(move |mut k| {
            let mut w = vec![0; len];
            for slot in w.iter_mut().rev() {
                *slot = k % n;
                k /= n;
            }
            w
        })
    })
}

pub fn standard(t: StandardTensor) -> Tensor {
    t.tensor()
}

/// Row-major product of the library matrices along `word`, multiplied out
/// by hand.
pub fn direct_product(lib: &GateLibrary, word: &[usize]) -> Vec<Complex> {
    let n = lib.dim();
    let mut acc: Vec<Complex> = (0..n * n).map(|k| Complex::new((k / n == k % n) as u8 as f64, 0.0)).collect();
    for &g in word {
        let m = operator_entries(lib.gates()[g].operator());
        let mut next = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                next[i * n + j] = (0..n).map(|k| acc[i * n + k] * m[k * n + j]).sum();
            }
        }
        acc = next;
    }
    acc
}

// Sparse small entries so that zero products are common.
pub fn sparse_matrix(rng: &mut impl Rng) -> IntegerMatrix {
    let v: Vec<i64> = (0..9).map(|_| if rng.gen_bool(0.55) { 0 } else { rng.gen_range(-2..=2) }).collect();
    IntegerMatrix::from_i64(3, 3, &v)
}

pub fn random_mortality_instance(rng: &mut impl Rng, max_len: usize) -> MortalityInstance {
    let k = rng.gen_range(1..=3);
    MortalityInstance::new((0..k).map(|_| sparse_matrix(rng)).collect(), max_len).unwrap()
}

/// The shortlex-least zero word, by trying every word in order.
pub fn enumerate_zero_word(inst: &MortalityInstance) -> Option<Vec<usize>> {
    all_words(inst.matrices().len(), inst.max_len()).find(|w| product(inst, w).unwrap().is_zero())
}
