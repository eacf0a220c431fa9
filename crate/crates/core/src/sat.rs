//! CNF formulas as Boolean tensor network states.
//!
//! [`build_sat_network`] realises `psi_f = sum_x f(x) |x>` with one open leg
//! per variable. Because every amplitude is 0 or 1, `<psi|psi>` equals the
//! number of models, which is what [`count_models`] computes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::ToPrimitive;
use thiserror::Error;

use crate::boolean::{encode_function, BoolFunction, StandardTensor};
use crate::network::{LegRef, TensorNetwork};
use crate::order::ContractionOrder;
use crate::parse::ParseError;
use crate::scalar::Scalar;
use crate::tensor::{conjugate, contract_tensors, Leg, Tensor, TensorError};

/// Default bound on the number of variables accepted by [`count_models`].
pub const DEFAULT_MAX_VARS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("{vars} variables exceeds the configured bound of {max}")]
    TooManyVariables { vars: usize, max: usize },
    #[error("invalid formula: {0}")]
    InvalidCnf(String),
    #[error("not a tree tensor network: {0}")]
    NotATree(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// A formula in conjunctive normal form over variables `1..=num_vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl Cnf {
    /// Checks that literals are in range, clauses are nonempty and no clause
    /// holds both `v` and `-v`.
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, SatError> {
        if num_vars == 0 {
            return Err(SatError::InvalidCnf("a formula needs at least one variable".into()));
        }
        for (k, c) in clauses.iter().enumerate() {
            if let Some(reason) = clause_problem(c, num_vars) {
                return Err(SatError::InvalidCnf(format!("clause {}: {reason}", k + 1)));
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Evaluates the formula; `assignment[v - 1]` is the value of variable `v`.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| assignment[l.unsigned_abs() as usize - 1] == (l > 0)))
    }

    /// The same formula with one more clause.
    pub fn with_clause(&self, clause: Vec<i32>) -> Result<Self, SatError> {
        let mut clauses = self.clauses.clone();
        clauses.push(clause);
        Cnf::new(self.num_vars, clauses)
    }

    fn occurrences(&self) -> Vec<usize> {
        let mut occ = vec![0; self.num_vars + 1];
        for l in self.clauses.iter().flatten() {
            occ[l.unsigned_abs() as usize] += 1;
        }
        occ
    }
}

fn clause_problem(c: &[i32], num_vars: usize) -> Option<String> {
    if c.is_empty() {
        return Some("empty clause".into());
    }
    if let Some(l) = c.iter().find(|l| **l == 0 || l.unsigned_abs() as usize > num_vars) {
        return Some(format!("literal {l} out of range 1..={num_vars}"));
    }
    if let Some(l) = c.iter().find(|&&l| c.contains(&-l)) {
        return Some(format!("contains both {} and {}", l.abs(), -l.abs()));
    }
    None
}

/// Parses DIMACS CNF: `c` comments, a `p cnf V C` header, then
/// zero-terminated clauses that may span lines. A `%` line ends the input.
pub fn parse_dimacs(text: &str) -> Result<Cnf, ParseError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut current_line = 0;
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('c') {
            continue;
        }
        last_line = line;
        if t.starts_with('%') {
            break;
        }
        if t.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::new(line, "duplicate problem line"));
            }
            let words: Vec<&str> = t.split_whitespace().collect();
            let parsed = match words.as_slice() {
                ["p", "cnf", v, c] => v.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            let (v, c) = parsed.ok_or_else(|| ParseError::new(line, "malformed header, expected `p cnf VARS CLAUSES`"))?;
            if v == 0 {
                return Err(ParseError::new(line, "a formula needs at least one variable"));
            }
            header = Some((v, c, line));
            continue;
        }
        let Some((v, _, _)) = header else {
            return Err(ParseError::new(line, "clause before the `p cnf` header"));
        };
        for w in t.split_whitespace() {
            let l: i64 = w.parse().map_err(|_| ParseError::new(line, format!("bad literal `{w}`")))?;
            if l == 0 {
                if let Some(reason) = clause_problem(&current, v) {
                    return Err(ParseError::new(current_line.max(line), reason));
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if l.unsigned_abs() as usize > v {
                return Err(ParseError::new(line, format!("literal {l} out of range 1..={v}")));
            }
            if current.is_empty() {
                current_line = line;
            }
            current.push(l as i32);
        }
    }
    let Some((v, c, hline)) = header else {
        return Err(ParseError::new(last_line.max(1), "missing `p cnf` header"));
    };
    if !current.is_empty() {
        return Err(ParseError::new(current_line, "clause is not terminated by 0"));
    }
    if clauses.len() != c {
        return Err(ParseError::new(hline, format!("header declares {c} clauses, found {}", clauses.len())));
    }
    Ok(Cnf { num_vars: v, clauses })
}

/// Renders a formula as DIMACS.
pub fn write_dimacs(cnf: &Cnf) -> String {
    let mut out = format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            out.push_str(&l.to_string());
            out.push(' ');
        }
        out.push_str("0\n");
    }
    out
}

fn copy3() -> Tensor {
    StandardTensor::Copy3.tensor().with_labels(&["a", "b", "c"]).expect("three legs")
}

fn or_gate(k: usize) -> Tensor {
    let f = BoolFunction::from_fn(k, |x| x.iter().any(|&b| b));
    let mut labels: Vec<String> = (0..k).map(|i| format!("i{i}")).collect();
    labels.push("o".into());
    encode_function(&f).with_labels(&labels).expect("k+1 legs")
}

/// Node ids used by [`build_sat_network`]: chain `v{var}_{t}`, negation
/// `n{clause}_{pos}`, clause `c{clause}`, AND tree `a{j}`, postselection
/// `post`, and `plus{var}` for variables that occur nowhere.
fn chain_id(v: usize, t: usize) -> String {
    format!("v{v}_{t}")
}

/// Where occurrence `t` of a variable with `k` occurrences attaches, as
/// (node, leg) on the chain, or `None` when it is the open leg itself.
fn chain_endpoint(v: usize, t: usize, k: usize) -> Option<LegRef> {
    match k {
        0 => unreachable!("no occurrences"),
        1 => None,
        _ if t + 1 < k => Some(LegRef::new(chain_id(v, t), "b")),
        _ => Some(LegRef::new(chain_id(v, k - 2), "c")),
    }
}

/// The network for `psi_f`. Open legs are `x1..xn` in variable order.
pub fn build_sat_network(cnf: &Cnf) -> TensorNetwork {
    build(cnf).expect("a valid formula always yields a valid network")
}

fn build(cnf: &Cnf) -> Result<TensorNetwork, TensorError> {
    let occ = cnf.occurrences();
    let mut net = TensorNetwork::new();
    let mut open: Vec<Option<LegRef>> = vec![None; cnf.num_vars + 1];

    for v in 1..=cnf.num_vars {
        let k = occ[v];
        if k == 0 {
            let plus = StandardTensor::Plus.tensor().with_labels(&[format!("x{v}")])?;
            net.add_node(format!("plus{v}"), plus)?;
            open[v] = Some(LegRef::new(format!("plus{v}"), format!("x{v}")));
        }
        for t in 0..k.saturating_sub(1) {
            let mut node = copy3();
            if t == 0 {
                node.relabel("a", &format!("x{v}"))?;
                open[v] = Some(LegRef::new(chain_id(v, 0), format!("x{v}")));
            }
            net.add_node(chain_id(v, t), node)?;
            if t > 0 {
                net.connect(LegRef::new(chain_id(v, t - 1), "c"), LegRef::new(chain_id(v, t), "a"))?;
            }
        }
    }

    let mut seen = vec![0usize; cnf.num_vars + 1];
    for (c, clause) in cnf.clauses.iter().enumerate() {
        let cid = format!("c{c}");
        let mut gate = or_gate(clause.len());
        // Inputs that are the variable's only occurrence become open legs.
        for (p, &l) in clause.iter().enumerate() {
            let v = l.unsigned_abs() as usize;
            if occ[v] == 1 && l > 0 {
                gate.relabel(&format!("i{p}"), &format!("x{v}"))?;
            }
        }
        net.add_node(&cid, gate)?;
        for (p, &l) in clause.iter().enumerate() {
            let v = l.unsigned_abs() as usize;
            let t = seen[v];
            seen[v] += 1;
            let source = chain_endpoint(v, t, occ[v]);
            let input = if l > 0 { LegRef::new(&cid, format!("i{p}")) } else {
                let nid = format!("n{c}_{p}");
                let mut not = StandardTensor::Not.tensor().with_labels(&["i", "o"])?;
                if source.is_none() {
                    not.relabel("i", &format!("x{v}"))?;
                }
                net.add_node(&nid, not)?;
                net.connect(LegRef::new(&nid, "o"), LegRef::new(&cid, format!("i{p}")))?;
                LegRef::new(nid, if source.is_none() { format!("x{v}") } else { "i".to_string() })
            };
            match source {
                Some(src) => net.connect(src, input)?,
                None => open[v] = Some(LegRef::new(input.node, format!("x{v}"))),
            }
        }
    }

    let m = cnf.clauses.len();
    if m > 0 {
        let and = || StandardTensor::And.tensor().with_labels(&["l", "r", "o"]).expect("three legs");
        let mut last = LegRef::new("c0", "o");
        for j in 1..m {
            let aid = format!("a{j}");
            net.add_node(&aid, and())?;
            net.connect(last, LegRef::new(&aid, "l"))?;
            net.connect(LegRef::new(format!("c{j}"), "o"), LegRef::new(&aid, "r"))?;
            last = LegRef::new(aid, "o");
        }
        net.add_node("post", StandardTensor::OneBra.tensor().with_labels(&["i"])?)?;
        net.connect(last, LegRef::new("post", "i"))?;
    }
    for r in open.into_iter().skip(1) {
        net.push_open(r.expect("every variable has an open leg"))?;
    }
    Ok(net)
}

/// Limits for [`count_models_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SatConfig {
    pub max_vars: usize,
}

impl Default for SatConfig {
    fn default() -> Self {
        SatConfig { max_vars: DEFAULT_MAX_VARS }
    }
}

/// Clause order from greedy variable elimination: repeatedly take the
/// variable with the fewest occurrences among unplaced clauses (lowest index
/// on ties) and append every unplaced clause that mentions it.
pub fn elimination_order(cnf: &Cnf) -> Vec<usize> {
    let mut placed = vec![false; cnf.clauses.len()];
    let mut order = Vec::with_capacity(cnf.clauses.len());
    while order.len() < cnf.clauses.len() {
        let mut occ = vec![0usize; cnf.num_vars + 1];
        for (c, clause) in cnf.clauses.iter().enumerate() {
            if !placed[c] {
                for l in clause {
                    occ[l.unsigned_abs() as usize] += 1;
                }
            }
        }
        let v = (1..=cnf.num_vars).filter(|&v| occ[v] > 0).min_by_key(|&v| (occ[v], v)).expect("unplaced clause");
        for (c, clause) in cnf.clauses.iter().enumerate() {
            if !placed[c] && clause.iter().any(|l| l.unsigned_abs() as usize == v) {
                placed[c] = true;
                order.push(c);
            }
        }
    }
    order
}

/// Number of satisfying assignments, with the default variable bound.
pub fn count_models(cnf: &Cnf) -> Result<u64, SatError> {
    count_models_with(cnf, SatConfig::default())
}

/// Number of satisfying assignments.
///
/// Every amplitude of `psi_f` is 0 or 1, so `<psi|psi> = sum_x f(x)`, which
/// is also `<+...+|psi>`. We contract the one-copy form: each open leg of
/// the network is capped with `|0> + |1>` and the clauses are absorbed one at
/// a time in elimination order, so only the variables shared between placed
/// and unplaced clauses stay live in the running tensor.
pub fn count_models_with(cnf: &Cnf, config: SatConfig) -> Result<u64, SatError> {
    if cnf.num_vars > config.max_vars {
        return Err(SatError::TooManyVariables { vars: cnf.num_vars, max: config.max_vars });
    }
    let order = elimination_order(cnf);
    let sorted = Cnf { num_vars: cnf.num_vars, clauses: order.iter().map(|&c| cnf.clauses[c].clone()).collect() };
    let mut net = build(&sorted)?;
    let open: Vec<LegRef> = net.open_legs().to_vec();
    let mut capped = TensorNetwork::new();
    for (id, t) in net.nodes() {
        capped.add_node(id.clone(), t.clone())?;
    }
    for b in net.bonds() {
        capped.connect(b.a.clone(), b.b.clone())?;
    }
    for (v, r) in open.iter().enumerate() {
        let cap = format!("cap{}", v + 1);
        capped.add_node(&cap, StandardTensor::Plus.tensor())?;
        capped.connect(r.clone(), LegRef::new(&cap, "x0"))?;
    }
    net = capped;

    let steps = clause_schedule(&sorted, &net);
    let value = net.contract(Some(&steps))?.scalar_value().expect("closed network");
    let Scalar::Exact(v) = value else { unreachable!("Boolean networks are exact") };
    Ok(v.to_integer().to_u64().expect("model count fits in u64 under the variable bound"))
}

/// Left-deep schedule absorbing each clause's chain nodes, negations, gate,
/// AND node and (last) postselection into one running node.
fn clause_schedule(cnf: &Cnf, net: &TensorNetwork) -> ContractionOrder {
    let occ = cnf.occurrences();
    let mut sequence: Vec<String> = Vec::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut push = |id: String, seq: &mut Vec<String>| {
        if net.node(&id).is_some() && taken.insert(id.clone()) {
            seq.push(id);
        }
    };
    let mut seen = vec![0usize; cnf.num_vars + 1];
    for (c, clause) in cnf.clauses.iter().enumerate() {
        for (p, &l) in clause.iter().enumerate() {
            let v = l.unsigned_abs() as usize;
            let t = seen[v];
            seen[v] += 1;
            if occ[v] >= 2 {
                let host = t.min(occ[v] - 2);
                push(chain_id(v, host), &mut sequence);
                if host == 0 {
                    push(format!("cap{v}"), &mut sequence);
                }
            } else {
                push(format!("cap{v}"), &mut sequence);
            }
            if l < 0 {
                push(format!("n{c}_{p}"), &mut sequence);
            }
        }
        push(format!("c{c}"), &mut sequence);
        if c >= 1 {
            push(format!("a{c}"), &mut sequence);
        }
        if c + 1 == cnf.clauses.len() {
            push("post".into(), &mut sequence);
        }
    }
    for id in net.nodes().keys() {
        push(id.clone(), &mut sequence);
    }
    let mut steps = Vec::new();
    if let Some((first, rest)) = sequence.split_first() {
        for id in rest {
            steps.push((first.clone(), id.clone()));
        }
    }
    ContractionOrder { steps }
}

/// True iff the formula has a model.
pub fn is_satisfiable(cnf: &Cnf) -> Result<bool, SatError> {
    Ok(count_models(cnf)? > 0)
}

/// A satisfying assignment found by self-reduction on model counts, or
/// `None` when the formula is unsatisfiable. `result[v - 1]` is variable `v`.
pub fn find_model(cnf: &Cnf) -> Result<Option<Vec<bool>>, SatError> {
    if count_models(cnf)? == 0 {
        return Ok(None);
    }
    let mut fixed = cnf.clone();
    let mut model = Vec::with_capacity(cnf.num_vars);
    for v in 1..=cnf.num_vars as i32 {
        let try_true = fixed.with_clause(vec![v])?;
        if count_models(&try_true)? > 0 {
            fixed = try_true;
            model.push(true);
        } else {
            fixed = fixed.with_clause(vec![-v])?;
            model.push(false);
        }
    }
    Ok(Some(model))
}

/// A tensor network whose bond graph is a tree, with at most one designated
/// parent leg per node. The root is the unique node whose parent leg is
/// absent or open; every other node's parent leg is its bond towards the
/// root.
#[derive(Clone, Debug)]
pub struct TreeTensorNetwork {
    net: TensorNetwork,
    parent: BTreeMap<String, Option<String>>,
    root: String,
}

impl TreeTensorNetwork {
    pub fn new(net: TensorNetwork, parent_legs: &BTreeMap<String, String>) -> Result<Self, SatError> {
        net.validate()?;
        if net.is_empty() {
            return Err(SatError::Tensor(TensorError::EmptyNetwork));
        }
        for (id, t) in net.nodes() {
            if let Some(l) = t.legs().iter().find(|l| l.dim != 2) {
                return Err(SatError::Tensor(TensorError::NonBinaryLeg { label: format!("{id}.{}", l.label), dim: l.dim }));
            }
        }
        for (id, leg) in parent_legs {
            let t = net.node(id).ok_or_else(|| SatError::NotATree(format!("unknown node `{id}` in parent legs")))?;
            if t.leg_index(leg).is_none() {
                return Err(SatError::NotATree(format!("node `{id}` has no leg `{leg}`")));
            }
        }
        let n = net.len();
        if net.bonds().len() != n - 1 {
            return Err(SatError::NotATree(format!("{} nodes need {} bonds, found {}", n, n - 1, net.bonds().len())));
        }
        // Which parent legs are bonds (and to whom).
        let bonded = |id: &str, leg: &str| {
            net.bonds().iter().find_map(|b| {
                if b.a.node == id && b.a.leg == leg {
                    Some(b.b.node.clone())
                } else if b.b.node == id && b.b.leg == leg {
                    Some(b.a.node.clone())
                } else {
                    None
                }
            })
        };
        let roots: Vec<&String> = net
            .nodes()
            .keys()
            .filter(|id| parent_legs.get(*id).is_none_or(|leg| bonded(id, leg).is_none()))
            .collect();
        if roots.len() != 1 {
            return Err(SatError::NotATree(format!(
                "expected exactly one root (a node without a bonded parent leg), found {}",
                roots.len()
            )));
        }
        let root = roots[0].clone();
        let mut bfs_parent: BTreeMap<&str, &str> = BTreeMap::new();
        let mut visited: BTreeSet<&str> = [root.as_str()].into_iter().collect();
        let mut queue = VecDeque::from([root.as_str()]);
        while let Some(x) = queue.pop_front() {
            for b in net.bonds() {
                let y = if b.a.node == x { b.b.node.as_str() } else if b.b.node == x { b.a.node.as_str() } else { continue };
                if visited.insert(y) {
                    bfs_parent.insert(y, x);
                    queue.push_back(y);
                }
            }
        }
        if visited.len() != n {
            return Err(SatError::NotATree("bond graph is disconnected".into()));
        }
        for (child, parent) in &bfs_parent {
            let leg = &parent_legs[*child];
            if bonded(child, leg).as_deref() != Some(*parent) {
                return Err(SatError::NotATree(format!("parent leg `{leg}` of `{child}` does not lead to `{parent}`")));
            }
        }
        let parent = net.nodes().keys().map(|id| (id.clone(), parent_legs.get(id).cloned())).collect();
        Ok(TreeTensorNetwork { net, parent, root })
    }

    pub fn network(&self) -> &TensorNetwork {
        &self.net
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn parent_leg(&self, node: &str) -> Option<&str> {
        self.parent.get(node).and_then(|l| l.as_deref())
    }
}

/// Per-node verdicts of the tree condition, keyed by node id.
pub fn tree_condition_report(ttn: &TreeTensorNetwork) -> Result<BTreeMap<String, bool>, SatError> {
    let mut out = BTreeMap::new();
    for (id, t) in ttn.net.nodes() {
        out.insert(id.clone(), node_passes(t, ttn.parent_leg(id))?);
    }
    Ok(out)
}

/// Sufficient condition for a nonempty support: for every node `T`, the
/// contraction of `T` with its conjugate over all non-parent legs is nonzero
/// exactly on the diagonal. A node without a parent leg must have nonzero
/// norm.
pub fn check_tree_condition(ttn: &TreeTensorNetwork) -> Result<bool, SatError> {
    Ok(tree_condition_report(ttn)?.values().all(|&ok| ok))
}

fn node_passes(t: &Tensor, parent: Option<&str>) -> Result<bool, SatError> {
    let pairs: Vec<(usize, usize)> =
        (0..t.rank()).filter(|&i| Some(t.legs()[i].label.as_str()) != parent).map(|i| (i, i)).collect();
    let (gram, _) = contract_tensors(t, &conjugate(t), &pairs)?;
    let scale = t.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
    let nonzero = |k: usize| !gram.get_flat(k).is_negligible(1e-9, scale);
    Ok(match parent {
        None => nonzero(0),
        Some(_) => {
            debug_assert_eq!(gram.legs().iter().map(|l: &Leg| l.dim).collect::<Vec<_>>(), [2, 2]);
            nonzero(0) && !nonzero(1) && !nonzero(2) && nonzero(3)
        }
    })
}
