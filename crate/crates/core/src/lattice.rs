//! Polymorphisms, invariants and the clone/co-clone Galois connection.
//!
//! A relation `r` is constructible from a set `s` (with free copying of
//! wires) exactly when `r` lies in `Inv(Pol(s))`. `Pol(s)` is always one of
//! the clones of Post's lattice, so membership reduces to locating that
//! clone and checking that its finite basis preserves `r`.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::boolean::{encode_relation, BoolFunction, BoolRelation};
use crate::exec::Exec;
use crate::network::TensorNetwork;
use crate::tensor::TensorError;

/// Largest arity the exhaustive `pol`/`inv` sweeps accept.
pub const SWEEP_ARITY_LIMIT: usize = 4;
/// Largest tuple count [`coclone_member_bruteforce`] accepts.
pub const BRUTEFORCE_TUPLE_LIMIT: usize = 4;
pub const DEFAULT_MAX_NETWORK_SIZE: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("arity bound {got} exceeds the sweep limit {limit}")]
    ArityBound { got: usize, limit: usize },
    #[error("relation has {got} tuples; the brute-force check handles at most {limit}")]
    TupleBound { got: usize, limit: usize },
}

/// Whether `f` applied coordinatewise to any `f.arity()` tuples of `r` lands
/// back in `r`.
pub fn is_polymorphism(f: &BoolFunction, r: &BoolRelation) -> bool {
    let m = f.arity();
    let n = r.arity();
    let tuples: Vec<u64> = r.tuples().iter().copied().collect();
    let symmetric = is_symmetric(f);
    let mut idx = vec![0u64; n];
    preserves_from(f, r, &tuples, symmetric, 0, 0, &mut idx, m, n)
}

// Depth-first over argument positions. `idx[j]` accumulates the packed input
// of coordinate `j`; a symmetric `f` only needs nondecreasing choices.
#[allow(clippy::too_many_arguments)]
fn preserves_from(
    f: &BoolFunction,
    r: &BoolRelation,
    tuples: &[u64],
    symmetric: bool,
    depth: usize,
    first: usize,
    idx: &mut [u64],
    m: usize,
    n: usize,
) -> bool {
    if depth == m {
        let out = idx.iter().fold(0u64, |acc, &x| acc << 1 | f.eval_index(x) as u64);
        return r.contains(out);
    }
    let shift = m - 1 - depth;
    let start = if symmetric { first } else { 0 };
    for (ti, &t) in tuples.iter().enumerate().skip(start) {
        for (j, slot) in idx.iter_mut().enumerate() {
            *slot |= (t >> (n - 1 - j) & 1) << shift;
        }
        let ok = preserves_from(f, r, tuples, symmetric, depth + 1, ti, idx, m, n);
        for slot in idx.iter_mut() {
            *slot &= !(1u64 << shift);
        }
        if !ok {
            return false;
        }
    }
    true
}

fn is_symmetric(f: &BoolFunction) -> bool {
    let t = f.table();
    (0..t.len()).all(|x| t[x] == t[(1usize << x.count_ones()) - 1])
}

fn preserves_all(f: &BoolFunction, s: &[BoolRelation]) -> bool {
    s.iter().all(|r| is_polymorphism(f, r))
}

fn check_arity(max_arity: usize) -> Result<(), LatticeError> {
    if max_arity > SWEEP_ARITY_LIMIT {
        return Err(LatticeError::ArityBound { got: max_arity, limit: SWEEP_ARITY_LIMIT });
    }
    Ok(())
}

pub fn pol(s: &[BoolRelation], max_arity: usize) -> Result<BTreeSet<BoolFunction>, LatticeError> {
    pol_with(s, max_arity, Exec::default())
}

/// Every function of arity `1..=max_arity` preserving all of `s`.
pub fn pol_with(s: &[BoolRelation], max_arity: usize, exec: Exec) -> Result<BTreeSet<BoolFunction>, LatticeError> {
    check_arity(max_arity)?;
    let mut out = BTreeSet::new();
    for m in 1..=max_arity {
        let found = exec.filter_map_range(1 << (1 << m), |mask| {
            let f = BoolFunction::from_mask(m, mask as u64);
            preserves_all(&f, s).then_some(f)
        });
        out.extend(found);
    }
    Ok(out)
}

pub fn inv(b: &[BoolFunction], max_arity: usize) -> Result<BTreeSet<BoolRelation>, LatticeError> {
    inv_with(b, max_arity, Exec::default())
}

/// Every relation of arity `1..=max_arity` (the empty one included)
/// preserved by all of `b`.
pub fn inv_with(b: &[BoolFunction], max_arity: usize, exec: Exec) -> Result<BTreeSet<BoolRelation>, LatticeError> {
    check_arity(max_arity)?;
    let mut out = BTreeSet::new();
    for n in 1..=max_arity {
        let found = exec.filter_map_range(1 << (1 << n), |mask| {
            let r = relation_from_mask(n, mask as u64);
            b.iter().all(|f| is_polymorphism(f, &r)).then_some(r)
        });
        out.extend(found);
    }
    Ok(out)
}

fn relation_from_mask(n: usize, mask: u64) -> BoolRelation {
    BoolRelation::new(n, (0..1u64 << n).filter(|t| mask >> t & 1 == 1)).expect("tuples in range")
}

pub fn coclone_member_bruteforce(r: &BoolRelation, s: &[BoolRelation]) -> Result<bool, LatticeError> {
    coclone_member_bruteforce_with(r, s, Exec::default())
}

/// `r` with `t` tuples lies in the co-clone of `s` iff every `t`-ary
/// polymorphism of `s` preserves it. Sweeps all `2^(2^t)` functions.
pub fn coclone_member_bruteforce_with(r: &BoolRelation, s: &[BoolRelation], exec: Exec) -> Result<bool, LatticeError> {
    let t = r.len();
    if t > BRUTEFORCE_TUPLE_LIMIT {
        return Err(LatticeError::TupleBound { got: t, limit: BRUTEFORCE_TUPLE_LIMIT });
    }
    if t == 0 {
        return Ok(true);
    }
    Ok(exec.all_range(1 << (1 << t), |mask| {
        let f = BoolFunction::from_mask(t, mask as u64);
        is_polymorphism(&f, r) || !preserves_all(&f, s)
    }))
}

// ---------------------------------------------------------------------------
// Post's lattice

/// Defining properties of the clones. Each is itself a clone, so a clone is
/// inside one of them iff its basis is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Preserves0,
    Preserves1,
    Monotone,
    SelfDual,
    Affine,
    /// Any `k` zeros share a zero coordinate (`None`: all of them do).
    Sep0(Option<usize>),
    /// Any `k` ones share a one coordinate.
    Sep1(Option<usize>),
    OrOfInputs,
    AndOfInputs,
    EssentiallyUnary,
}

impl Class {
    fn contains(self, f: &BoolFunction) -> bool {
        let t = f.table();
        let m = f.arity();
        let full = (1usize << m) - 1;
        match self {
            Class::Preserves0 => !t[0],
            Class::Preserves1 => t[full],
            Class::Monotone => (0..=full).all(|x| (0..m).all(|i| !t[x] || t[x | 1 << i])),
            Class::SelfDual => (0..=full).all(|x| t[x] != t[full ^ x]),
            Class::Affine => (0..=full).all(|x| {
                let lin = (0..m).filter(|&i| x >> i & 1 == 1).fold(false, |acc, i| acc ^ t[1 << i] ^ t[0]);
                (t[x] ^ t[0]) == lin
            }),
            Class::Sep0(k) => {
                let sets: Vec<usize> = (0..=full).filter(|&x| !t[x]).map(|x| full ^ x).collect();
                every_k_intersect(&sets, k, m)
            }
            Class::Sep1(k) => {
                let sets: Vec<usize> = (0..=full).filter(|&x| t[x]).collect();
                every_k_intersect(&sets, k, m)
            }
            Class::OrOfInputs => {
                let s = (0..m).filter(|&i| t[1 << i]).fold(0, |acc, i| acc | 1 << i);
                (0..=full).all(|x| t[x] == (t[0] || x & s != 0))
            }
            Class::AndOfInputs => {
                let s = (0..m).filter(|&i| !t[full ^ 1 << i]).fold(0, |acc, i| acc | 1 << i);
                (0..=full).all(|x| t[x] == (t[full] && x & s == s))
            }
            Class::EssentiallyUnary => (0..m).filter(|&i| (0..=full).any(|x| t[x] != t[x ^ 1 << i])).count() <= 1,
        }
    }
}

/// Whether every `k` (or all, for `None`) of the coordinate sets share an
/// element. With `m` coordinates, `k >= m` is the same as all of them.
fn every_k_intersect(sets: &[usize], k: Option<usize>, m: usize) -> bool {
    let all = |xs: &[usize]| xs.iter().fold(usize::MAX, |acc, &x| acc & x) != 0;
    match k {
        Some(k) if k < m => {
            // Only inclusion-minimal sets matter when hunting an empty intersection.
            let uniq: BTreeSet<usize> = sets.iter().copied().collect();
            let minimal: Vec<usize> =
                uniq.iter().copied().filter(|&a| !uniq.iter().any(|&b| b != a && b & a == b)).collect();
            !empty_meet(&minimal, k, 0, usize::MAX)
        }
        _ => sets.is_empty() || all(sets),
    }
}

fn empty_meet(sets: &[usize], budget: usize, from: usize, acc: usize) -> bool {
    if acc == 0 {
        return true;
    }
    if budget == 0 {
        return false;
    }
    (from..sets.len()).any(|i| acc & sets[i] != acc && empty_meet(sets, budget - 1, i + 1, acc & sets[i]))
}

fn tf(arity: usize, f: impl Fn(&[bool]) -> bool) -> BoolFunction {
    BoolFunction::from_fn(arity, f)
}

fn ones(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

/// `k`-out-of-`(k+1)` threshold: the separator for the 1-side families.
pub fn threshold(k: usize) -> BoolFunction {
    tf(k + 1, |x| ones(x) >= k)
}

/// Dual of [`threshold`]: true once at least two inputs are set.
pub fn dual_threshold(k: usize) -> BoolFunction {
    tf(k + 1, |x| ones(x) >= 2)
}

#[derive(Clone, Debug)]
struct CloneSpec {
    name: String,
    classes: Vec<Class>,
    basis: Vec<BoolFunction>,
}

impl CloneSpec {
    fn contains(&self, f: &BoolFunction) -> bool {
        self.classes.iter().all(|c| c.contains(f))
    }
}

/// Every clone of Post's lattice, with the separating families cut at `k_max`.
/// Listed top-down so that ties resolve to the larger clone.
fn clone_table(k_max: usize) -> Vec<CloneSpec> {
    use Class::*;
    let c0 = BoolFunction::constant(1, false);
    let c1 = BoolFunction::constant(1, true);
    let id = BoolFunction::projection(1, 0);
    let and = BoolFunction::and();
    let or = BoolFunction::or();
    let xor = BoolFunction::xor();
    let not = BoolFunction::not();
    let xnor = tf(2, |x| x[0] == x[1]);
    let imp = tf(2, |x| !x[0] || x[1]);
    let nimp = tf(2, |x| x[0] && !x[1]);
    let or_and = tf(3, |x| x[0] || (x[1] && x[2]));
    let and_or = tf(3, |x| x[0] && (x[1] || x[2]));
    let or_andn = tf(3, |x| x[0] || (x[1] && !x[2]));
    let and_orn = tf(3, |x| x[0] && (x[1] || !x[2]));
    let maj = |a: bool, b: bool, c: bool| (a && b) || (a && c) || (b && c);
    let xor3 = tf(3, |x| x[0] ^ x[1] ^ x[2]);

    let spec = |name: &str, classes: Vec<Class>, basis: Vec<BoolFunction>| CloneSpec {
        name: name.to_string(),
        classes,
        basis,
    };
    let mut t = vec![
        spec("BF", vec![], vec![and.clone(), not.clone()]),
        spec("R0", vec![Preserves0], vec![and.clone(), xor.clone()]),
        spec("R1", vec![Preserves1], vec![or.clone(), xnor.clone()]),
        spec("R2", vec![Preserves0, Preserves1], vec![or.clone(), tf(3, |x| x[0] && (x[1] == x[2]))]),
        spec("M", vec![Monotone], vec![and.clone(), or.clone(), c0.clone(), c1.clone()]),
        spec("M0", vec![Monotone, Preserves0], vec![and.clone(), or.clone(), c0.clone()]),
        spec("M1", vec![Monotone, Preserves1], vec![and.clone(), or.clone(), c1.clone()]),
        spec("M2", vec![Monotone, Preserves0, Preserves1], vec![and.clone(), or.clone()]),
    ];
    for k in 2..=k_max {
        let (h, dh) = (threshold(k), dual_threshold(k));
        t.extend([
            spec(&format!("S0^{k}"), vec![Sep0(Some(k))], vec![imp.clone(), dh.clone()]),
            spec(&format!("S02^{k}"), vec![Sep0(Some(k)), Preserves0], vec![or_andn.clone(), dh.clone()]),
            spec(&format!("S01^{k}"), vec![Sep0(Some(k)), Monotone], vec![dh.clone(), c1.clone()]),
            spec(&format!("S00^{k}"), vec![Sep0(Some(k)), Preserves0, Monotone], vec![or_and.clone(), dh]),
            spec(&format!("S1^{k}"), vec![Sep1(Some(k))], vec![nimp.clone(), h.clone()]),
            spec(&format!("S12^{k}"), vec![Sep1(Some(k)), Preserves1], vec![and_orn.clone(), h.clone()]),
            spec(&format!("S11^{k}"), vec![Sep1(Some(k)), Monotone], vec![h.clone(), c0.clone()]),
            spec(&format!("S10^{k}"), vec![Sep1(Some(k)), Preserves1, Monotone], vec![and_or.clone(), h]),
        ]);
    }
    t.extend([
        spec("S0", vec![Sep0(None)], vec![imp]),
        spec("S02", vec![Sep0(None), Preserves0], vec![or_andn]),
        spec("S01", vec![Sep0(None), Monotone], vec![or_and.clone(), c1.clone()]),
        spec("S00", vec![Sep0(None), Preserves0, Monotone], vec![or_and]),
        spec("S1", vec![Sep1(None)], vec![nimp]),
        spec("S12", vec![Sep1(None), Preserves1], vec![and_orn]),
        spec("S11", vec![Sep1(None), Monotone], vec![and_or.clone(), c0.clone()]),
        spec("S10", vec![Sep1(None), Preserves1, Monotone], vec![and_or]),
        spec("D", vec![SelfDual], vec![tf(3, |x| maj(x[0], !x[1], !x[2]))]),
        spec("D1", vec![SelfDual, Preserves0, Preserves1], vec![tf(3, |x| maj(x[0], x[1], !x[2]))]),
        spec("D2", vec![SelfDual, Monotone], vec![BoolFunction::majority()]),
        spec("L", vec![Affine], vec![xor.clone(), c1.clone()]),
        spec("L0", vec![Affine, Preserves0], vec![xor]),
        spec("L1", vec![Affine, Preserves1], vec![xnor]),
        spec("L2", vec![Affine, Preserves0, Preserves1], vec![xor3.clone()]),
        spec("L3", vec![Affine, SelfDual], vec![tf(3, |x| !(x[0] ^ x[1] ^ x[2]))]),
        spec("V", vec![OrOfInputs], vec![or.clone(), c0.clone(), c1.clone()]),
        spec("V0", vec![OrOfInputs, Preserves0], vec![or.clone(), c0.clone()]),
        spec("V1", vec![OrOfInputs, Preserves1], vec![or.clone(), c1.clone()]),
        spec("V2", vec![OrOfInputs, Preserves0, Preserves1], vec![or]),
        spec("E", vec![AndOfInputs], vec![and.clone(), c0.clone(), c1.clone()]),
        spec("E0", vec![AndOfInputs, Preserves0], vec![and.clone(), c0.clone()]),
        spec("E1", vec![AndOfInputs, Preserves1], vec![and.clone(), c1.clone()]),
        spec("E2", vec![AndOfInputs, Preserves0, Preserves1], vec![and]),
        spec("N", vec![EssentiallyUnary], vec![not.clone(), c1.clone()]),
        spec("N2", vec![EssentiallyUnary, SelfDual], vec![not]),
        spec("I", vec![EssentiallyUnary, Monotone], vec![id.clone(), c0.clone(), c1.clone()]),
        spec("I0", vec![EssentiallyUnary, Monotone, Preserves0], vec![id.clone(), c0]),
        spec("I1", vec![EssentiallyUnary, Monotone, Preserves1], vec![id.clone(), c1]),
        spec("I2", vec![EssentiallyUnary, Monotone, Preserves0, Preserves1], vec![id]),
    ]);
    t
}

/// Where `Pol(s)` sits in Post's lattice.
#[derive(Clone, Debug)]
pub struct CloneDescriptor {
    /// Standard lattice name, e.g. `R2`, `S0^3`, `L`.
    pub name: String,
    /// Separating families were only resolved up to this degree. A clone
    /// `S0^k`/`S1^k` with larger `k` is reported as its limit `S0`/`S1`,
    /// which agrees with it on every relation of arity or tuple count at
    /// most the bound.
    pub separation_bound: usize,
    /// Whether each probe function is a polymorphism.
    pub probes: Vec<(String, bool)>,
    /// Whether the clone lies inside each property class.
    pub properties: Vec<(String, bool)>,
    /// A basis of the clone.
    pub generators: Vec<BoolFunction>,
    classes: Vec<Class>,
}

impl CloneDescriptor {
    /// Membership of `f` in the identified clone.
    pub fn contains(&self, f: &BoolFunction) -> bool {
        self.classes.iter().all(|c| c.contains(f))
    }

    pub fn probe(&self, name: &str) -> Option<bool> {
        self.probes.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn property(&self, name: &str) -> Option<bool> {
        self.properties.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

fn relation_bound(r: &BoolRelation) -> usize {
    r.arity().min(r.len())
}

/// Degree up to which the separating families must be told apart for `s`.
pub fn separation_bound(s: &[BoolRelation]) -> usize {
    s.iter().map(relation_bound).max().unwrap_or(0).max(2)
}

pub fn classify_clone(s: &[BoolRelation]) -> CloneDescriptor {
    classify_clone_with_bound(s, separation_bound(s))
}

/// Locates `Pol(s)`: the largest tabulated clone whose basis preserves `s`.
pub fn classify_clone_with_bound(s: &[BoolRelation], k_max: usize) -> CloneDescriptor {
    let k_max = k_max.max(2);
    let table = clone_table(k_max);
    let inside: Vec<&CloneSpec> = table.iter().filter(|c| c.basis.iter().all(|g| preserves_all(g, s))).collect();
    let top = inside
        .iter()
        .find(|c| inside.iter().all(|d| d.basis.iter().all(|g| c.contains(g))))
        .or_else(|| {
            log::warn!("no largest clone among {} candidates; reporting the first", inside.len());
            inside.first()
        })
        .expect("projections preserve every relation");

    let mut probes = vec![
        ("constant-0".to_string(), BoolFunction::constant(1, false)),
        ("constant-1".to_string(), BoolFunction::constant(1, true)),
        ("negation".to_string(), BoolFunction::not()),
        ("and".to_string(), BoolFunction::and()),
        ("or".to_string(), BoolFunction::or()),
        ("majority".to_string(), BoolFunction::majority()),
        ("xor3".to_string(), tf(3, |x| x[0] ^ x[1] ^ x[2])),
    ];
    for k in 2..=k_max {
        probes.push((format!("separator0-{k}"), dual_threshold(k)));
        probes.push((format!("separator1-{k}"), threshold(k)));
    }
    let mut classes = vec![
        ("0-preserving".to_string(), Class::Preserves0),
        ("1-preserving".to_string(), Class::Preserves1),
        ("monotone".to_string(), Class::Monotone),
        ("self-dual".to_string(), Class::SelfDual),
        ("affine".to_string(), Class::Affine),
    ];
    for k in 2..=k_max {
        classes.push((format!("0-separating-{k}"), Class::Sep0(Some(k))));
        classes.push((format!("1-separating-{k}"), Class::Sep1(Some(k))));
    }
    CloneDescriptor {
        name: top.name.clone(),
        separation_bound: k_max,
        probes: probes.into_iter().map(|(n, f)| (n, preserves_all(&f, s))).collect(),
        properties: classes.into_iter().map(|(n, c)| (n, top.basis.iter().all(|g| c.contains(g)))).collect(),
        generators: top.basis.clone(),
        classes: top.classes.clone(),
    }
}

/// Whether `r` lies in the co-clone generated by `s`, with wire copying
/// available (the all-equal relation is adjoined to `s`; it is preserved by
/// every function, so this never changes `Pol(s)`).
pub fn coclone_member(r: &BoolRelation, s: &[BoolRelation]) -> bool {
    let mut with_copy = s.to_vec();
    with_copy.push(BoolRelation::all_equal(3));
    let k = separation_bound(&with_copy).max(relation_bound(r));
    classify_clone_with_bound(&with_copy, k).generators.iter().all(|g| is_polymorphism(g, r))
}

// ---------------------------------------------------------------------------
// Fanout-free constructions

/// A network of relations from `s` in which every wire meets at most two
/// legs: `bonds` join `(node, leg)` pairs on distinct nodes, `open` lists the free legs in the
/// order of the target's coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Construction {
    pub nodes: Vec<usize>,
    pub bonds: Vec<((usize, usize), (usize, usize))>,
    pub open: Vec<(usize, usize)>,
}

impl Construction {
    /// The 0/1 tensor network; node `k` is `r{k}` with legs `r{k}_{leg}`,
    /// open legs come out in target order.
    pub fn to_network(&self, s: &[BoolRelation]) -> Result<TensorNetwork, TensorError> {
        let wire = |(node, leg): (usize, usize)| format!("r{node}_{leg}");
        let mut label: std::collections::HashMap<(usize, usize), String> = Default::default();
        for &(a, b) in &self.bonds {
            label.insert(b, wire(a));
        }
        let nodes = self.nodes.iter().enumerate().map(|(k, &i)| {
            let t = encode_relation(&s[i]);
            let names: Vec<String> = (0..s[i].arity()).map(|l| label.get(&(k, l)).cloned().unwrap_or(wire((k, l)))).collect();
            (format!("r{k}"), t.with_labels(&names).expect("one label per leg"))
        });
        let open: Vec<String> = self.open.iter().map(|&p| wire(p)).collect();
        TensorNetwork::from_wires(nodes, &open)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrictOutcome {
    Constructed(Construction),
    /// No construction with at most this many nodes; says nothing about
    /// larger networks.
    NotFoundWithin(usize),
}

/// Searches fanout-free networks of up to `max_nodes` relations from `s`
/// whose support is `r` up to the order of the free legs. Without copying
/// this question is undecidable in general, so the search is only a
/// semi-decision: a hit is a certificate, a miss is not.
pub fn construct_fanout_free(r: &BoolRelation, s: &[BoolRelation], max_nodes: usize) -> StrictOutcome {
    for size in 1..=max_nodes {
        let mut found = None;
        for_each_multiset(s.len(), size, &mut |nodes| {
            found = search_wirings(r, s, nodes);
            found.is_some()
        });
        if let Some(c) = found {
            return StrictOutcome::Constructed(c);
        }
    }
    StrictOutcome::NotFoundWithin(max_nodes)
}

fn for_each_multiset(n: usize, size: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    fn rec(n: usize, size: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == size {
            return visit(cur);
        }
        let from = cur.last().copied().unwrap_or(0);
        for i in from..n {
            cur.push(i);
            if rec(n, size, cur, visit) {
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(n, size, &mut Vec::new(), visit);
}

fn search_wirings(r: &BoolRelation, s: &[BoolRelation], nodes: &[usize]) -> Option<Construction> {
    let legs: Vec<(usize, usize)> =
        nodes.iter().enumerate().flat_map(|(k, &i)| (0..s[i].arity()).map(move |l| (k, l))).collect();
    let n = r.arity();
    if legs.len() < n || (legs.len() - n) % 2 == 1 {
        return None;
    }
    let mut used = vec![false; legs.len()];
    let mut bonds = Vec::new();
    let mut open = Vec::new();
    wire_up(r, s, nodes, &legs, &mut used, &mut bonds, &mut open)
}

fn wire_up(
    r: &BoolRelation,
    s: &[BoolRelation],
    nodes: &[usize],
    legs: &[(usize, usize)],
    used: &mut [bool],
    bonds: &mut Vec<(usize, usize)>,
    open: &mut Vec<usize>,
) -> Option<Construction> {
    let Some(first) = used.iter().position(|&u| !u) else {
        if open.len() != r.arity() {
            return None;
        }
        return check_wiring(r, s, nodes, legs, bonds, open);
    };
    used[first] = true;
    if open.len() < r.arity() {
        open.push(first);
        let hit = wire_up(r, s, nodes, legs, used, bonds, open);
        open.pop();
        if hit.is_some() {
            used[first] = false;
            return hit;
        }
    }
    for other in first + 1..legs.len() {
        // Bonds join distinct nodes; a trace on one tensor has no wire form.
        if used[other] || legs[other].0 == legs[first].0 {
            continue;
        }
        used[other] = true;
        bonds.push((first, other));
        let hit = wire_up(r, s, nodes, legs, used, bonds, open);
        bonds.pop();
        used[other] = false;
        if hit.is_some() {
            used[first] = false;
            return hit;
        }
    }
    used[first] = false;
    None
}

fn check_wiring(
    r: &BoolRelation,
    s: &[BoolRelation],
    nodes: &[usize],
    legs: &[(usize, usize)],
    bonds: &[(usize, usize)],
    open: &[usize],
) -> Option<Construction> {
    let bit = |assign: &[u64], g: usize| {
        let (k, l) = legs[g];
        assign[k] >> (s[nodes[k]].arity() - 1 - l) & 1
    };
    let pools: Vec<Vec<u64>> = nodes.iter().map(|&i| s[i].tuples().iter().copied().collect()).collect();
    let mut support = HashSet::new();
    let mut assign = vec![0u64; nodes.len()];
    let mut counters = vec![0usize; nodes.len()];
    if pools.iter().any(|p| p.is_empty()) {
        return match_up(r, &support, nodes, legs, bonds, open);
    }
    loop {
        for (k, p) in pools.iter().enumerate() {
            assign[k] = p[counters[k]];
        }
        if bonds.iter().all(|&(a, b)| bit(&assign, a) == bit(&assign, b)) {
            support.insert(open.iter().fold(0u64, |acc, &g| acc << 1 | bit(&assign, g)));
        }
        let mut k = 0;
        while k < counters.len() {
            counters[k] += 1;
            if counters[k] < pools[k].len() {
                break;
            }
            counters[k] = 0;
            k += 1;
        }
        if k == counters.len() {
            break;
        }
    }
    match_up(r, &support, nodes, legs, bonds, open)
}

/// Finds an order of the open legs under which `support` is exactly `r`.
fn match_up(
    r: &BoolRelation,
    support: &HashSet<u64>,
    nodes: &[usize],
    legs: &[(usize, usize)],
    bonds: &[(usize, usize)],
    open: &[usize],
) -> Option<Construction> {
    if support.len() != r.len() {
        return None;
    }
    let n = open.len();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        // Target coordinate j reads open leg perm[j].
        let fits = support.iter().all(|&t| {
            let moved = perm.iter().fold(0u64, |acc, &p| acc << 1 | (t >> (n - 1 - p) & 1));
            r.contains(moved)
        });
        if fits {
            return Some(Construction {
                nodes: nodes.to_vec(),
                bonds: bonds.iter().map(|&(a, b)| (legs[a], legs[b])).collect(),
                open: perm.iter().map(|&p| legs[open[p]]).collect(),
            });
        }
        if !next_permutation(&mut perm) {
            return None;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("a larger element exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::support;
    use crate::network::contract_network;

    fn rel(n: usize, ts: &[&str]) -> BoolRelation {
        BoolRelation::from_strs(n, ts).unwrap()
    }

    #[test]
    fn polymorphism_examples() {
        assert!(is_polymorphism(&BoolFunction::and(), &BoolRelation::equality()));
        assert!(!is_polymorphism(&BoolFunction::xor(), &BoolRelation::disequality()));
        for n in 1..=3 {
            for mask in 0..1u64 << (1 << n) {
                let r = relation_from_mask(n, mask);
                for m in 1..=3 {
                    for i in 0..m {
                        assert!(is_polymorphism(&BoolFunction::projection(m, i), &r));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_shortcut_matches_full_enumeration() {
        let r = BoolRelation::or_clause(3);
        for f in [threshold(3), dual_threshold(3), BoolFunction::majority()] {
            assert!(is_symmetric(&f));
            let mut idx = vec![0u64; 3];
            let t: Vec<u64> = r.tuples().iter().copied().collect();
            let full = preserves_from(&f, &r, &t, false, 0, 0, &mut idx, f.arity(), 3);
            assert_eq!(full, is_polymorphism(&f, &r));
        }
        assert!(!is_symmetric(&tf(2, |x| !x[0] || x[1])));
    }

    #[test]
    fn pol_examples() {
        let all = pol(&[], 2).unwrap();
        assert_eq!(all.len(), 4 + 16);
        let zero = pol(&[rel(1, &["0"])], 1).unwrap();
        let want: BTreeSet<_> = [BoolFunction::projection(1, 0), BoolFunction::constant(1, false)].into();
        assert_eq!(zero, want);
        assert_eq!(pol(&[BoolRelation::equality()], 3).unwrap().len(), 4 + 16 + 256);
        assert!(pol(&[], 5).is_err());
    }

    #[test]
    fn inv_examples() {
        let not = inv(&[BoolFunction::not()], 1).unwrap();
        let want: BTreeSet<_> = [BoolRelation::empty(1), BoolRelation::full(1)].into();
        assert_eq!(not, want);
        assert_eq!(inv(&[], 2).unwrap().len(), 4 + 16);
        assert!(inv(&[BoolFunction::and(), BoolFunction::or()], 2).unwrap().contains(&BoolRelation::order()));
    }

    #[test]
    fn bruteforce_examples() {
        assert!(coclone_member_bruteforce(&BoolRelation::equality(), &[BoolRelation::all_equal(3)]).unwrap());
        assert!(coclone_member_bruteforce(&BoolRelation::full(2), &[BoolRelation::order()]).unwrap());
        assert!(!coclone_member_bruteforce(&BoolRelation::disequality(), &[BoolRelation::order()]).unwrap());
        assert!(coclone_member_bruteforce(&BoolRelation::full(3), &[]).is_err());
    }

    #[test]
    fn bases_lie_in_their_clones() {
        for c in clone_table(5) {
            for g in &c.basis {
                assert!(c.contains(g), "{} basis element {g} fails its classes", c.name);
            }
        }
    }

    #[test]
    fn separation_degrees() {
        for k in 2..6 {
            assert!(Class::Sep0(Some(k)).contains(&dual_threshold(k)));
            assert!(!Class::Sep0(Some(k + 1)).contains(&dual_threshold(k)));
            assert!(Class::Sep1(Some(k)).contains(&threshold(k)));
            assert!(!Class::Sep1(Some(k + 1)).contains(&threshold(k)));
        }
        assert!(Class::Sep0(None).contains(&tf(2, |x| !x[0] || x[1])));
    }

    #[test]
    fn classify_examples() {
        let top = classify_clone(&[]);
        assert_eq!(top.name, "BF");
        assert!(top.probes.iter().all(|&(_, v)| v));
        let one = classify_clone(&[rel(1, &["1"])]);
        assert_eq!(one.name, "R1");
        assert_eq!(one.probe("constant-1"), Some(true));
        assert_eq!(one.probe("constant-0"), Some(false));
        assert_eq!(one.property("1-preserving"), Some(true));
        assert_eq!(one.property("0-preserving"), Some(false));
        let or3 = classify_clone(&[BoolRelation::or_clause(3)]);
        assert_eq!(or3.probe("constant-1"), Some(true));
        assert_eq!(or3.probe("constant-0"), Some(false));
        assert_eq!(or3.probe("and"), Some(false));
        assert_eq!(or3.probe("or"), Some(true));
        assert_eq!(or3.name, "S0^3");
        assert_eq!(classify_clone(&[BoolRelation::order()]).name, "M");
        assert_eq!(classify_clone(&[BoolRelation::disequality()]).name, "D");
        assert_eq!(classify_clone(&[rel(3, &["000", "011", "101", "110"])]).name, "L0");
    }

    #[test]
    fn identified_clone_matches_ternary_sweep() {
        // Every relation up to arity 2 (singletons and pairs of them).
        let rels: Vec<BoolRelation> =
            (1..=2).flat_map(|n| (0..1u64 << (1 << n)).map(move |m| relation_from_mask(n, m))).collect();
        let mut sets: Vec<Vec<BoolRelation>> = rels.iter().map(|r| vec![r.clone()]).collect();
        for (i, a) in rels.iter().enumerate().step_by(3) {
            for b in rels.iter().skip(i + 1).step_by(5) {
                sets.push(vec![a.clone(), b.clone()]);
            }
        }
        let ternary: Vec<BoolFunction> =
            (1..=3).flat_map(|m| (0..1u64 << (1 << m)).map(move |k| BoolFunction::from_mask(m, k))).collect();
        for s in sets {
            let d = classify_clone(&s);
            let swept = pol(&s, 3).unwrap();
            for f in &ternary {
                assert_eq!(d.contains(f), swept.contains(f), "{} on {f} for {s:?}", d.name);
            }
        }
    }

    #[test]
    fn coclone_examples() {
        assert!(coclone_member(&BoolRelation::equality(), &[BoolRelation::all_equal(3)]));
        assert!(coclone_member(&BoolRelation::full(2), &[BoolRelation::order()]));
        assert!(!coclone_member(&BoolRelation::disequality(), &[BoolRelation::order()]));
        assert!(coclone_member(&BoolRelation::equality(), &[BoolRelation::or_clause(2)]));
        assert!(coclone_member(&BoolRelation::or_clause(3), &[BoolRelation::or_clause(3)]));
        // or2 follows from or3 by identifying legs, but not conversely
        assert!(coclone_member(&BoolRelation::or_clause(2), &[BoolRelation::or_clause(3)]));
        assert!(!coclone_member(&BoolRelation::or_clause(3), &[BoolRelation::or_clause(2)]));
    }

    #[test]
    fn fanout_free_search() {
        let s = [BoolRelation::all_equal(3)];
        let StrictOutcome::Constructed(c) = construct_fanout_free(&BoolRelation::equality(), &s, 2) else {
            panic!("equality should come from a copy tensor with a capped leg")
        };
        let net = c.to_network(&s).unwrap();
        let t = contract_network(&net, None).unwrap();
        assert_eq!(support(&t).unwrap(), BoolRelation::equality());

        // Reordered legs: the target is the order relation reversed.
        let rev = rel(2, &["00", "10", "11"]);
        assert!(matches!(construct_fanout_free(&rev, &[BoolRelation::order()], 1), StrictOutcome::Constructed(_)));

        // x or not-y needs an OR and a disequality joined by one bond.
        let s = [BoolRelation::or_clause(2), BoolRelation::disequality()];
        let target = rel(2, &["00", "10", "11"]);
        assert_eq!(construct_fanout_free(&target, &s, 1), StrictOutcome::NotFoundWithin(1));
        let StrictOutcome::Constructed(c) = construct_fanout_free(&target, &s, 2) else {
            panic!("two nodes suffice")
        };
        assert_eq!(c.nodes, vec![0, 1]);
        let t = contract_network(&c.to_network(&s).unwrap(), None).unwrap();
        assert_eq!(support(&t).unwrap(), target);
    }
}
