//! Tensor networks: labelled nodes, pairwise bonds and ordered open legs.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::order::{optimize_order, ContractionOrder};
use crate::scalar::{Backend, Complex, Scalar};
use crate::tensor::{conjugate, contract_tensors, tensor_product, Result, Tensor, TensorError};

/// A leg of a particular node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LegRef {
    pub node: String,
    pub leg: String,
}

impl LegRef {
    pub fn new(node: impl Into<String>, leg: impl Into<String>) -> Self {
        LegRef { node: node.into(), leg: leg.into() }
    }
}

impl std::fmt::Display for LegRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.node, self.leg)
    }
}

/// Two legs on distinct nodes that are summed over together.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: LegRef,
    pub b: LegRef,
}

impl Bond {
    pub fn touches(&self, node: &str) -> bool {
        self.a.node == node || self.b.node == node
    }
}

/// A graph of tensors. Every leg of every node is either one endpoint of
/// exactly one bond or listed exactly once among the open legs; this is
/// checked by [`TensorNetwork::validate`] and by every contraction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorNetwork {
    nodes: BTreeMap<String, Tensor>,
    bonds: Vec<Bond>,
    open: Vec<LegRef>,
}

impl TensorNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a network from tensors whose leg labels double as wire names: a
    /// wire carried by two nodes becomes a bond, a wire carried by one node
    /// must appear in `open` (which fixes the open-leg order).
    pub fn from_wires<I, S>(nodes: I, open: &[S]) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Tensor)>,
        S: AsRef<str>,
    {
        let mut net = TensorNetwork::new();
        let mut holders: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for (id, tensor) in nodes {
            for leg in tensor.legs() {
                let entry = holders.entry(leg.label.clone()).or_default();
                if entry.is_empty() {
                    order.push(leg.label.clone());
                }
                entry.push(id.clone());
            }
            net.add_node(id, tensor)?;
        }
        let open_set: HashSet<&str> = open.iter().map(|s| s.as_ref()).collect();
        if open_set.len() != open.len() {
            let dup = open.iter().find(|s| open.iter().filter(|t| t.as_ref() == s.as_ref()).count() > 1);
            return Err(TensorError::DuplicateLabel(dup.map(|s| s.as_ref().to_string()).unwrap_or_default()));
        }
        for wire in &order {
            let ids = &holders[wire];
            match ids.len() {
                1 => {
                    if !open_set.contains(wire.as_str()) {
                        return Err(TensorError::DanglingLeg { node: ids[0].clone(), leg: wire.clone() });
                    }
                }
                2 => {
                    if open_set.contains(wire.as_str()) {
                        return Err(TensorError::LegReused { node: ids[0].clone(), leg: wire.clone() });
                    }
                    net.connect(LegRef::new(&ids[0], wire), LegRef::new(&ids[1], wire))?;
                }
                _ => return Err(TensorError::LegReused { node: ids[2].clone(), leg: wire.clone() }),
            }
        }
        for wire in open {
            let ids = holders
                .get(wire.as_ref())
                .ok_or_else(|| TensorError::UnknownLabel(wire.as_ref().to_string()))?;
            net.open.push(LegRef::new(&ids[0], wire.as_ref()));
        }
        Ok(net)
    }

    pub fn add_node(&mut self, id: impl Into<String>, tensor: Tensor) -> Result<()> {
        let id = id.into();
        if self.nodes.contains_key(&id) {
            return Err(TensorError::DuplicateNode(id));
        }
        if let Some(b) = self.backend() {
            if b != tensor.backend() {
                return Err(TensorError::BackendMismatch);
            }
        }
        self.nodes.insert(id, tensor);
        Ok(())
    }

    /// Replaces a node's tensor by one with identical leg labels and dimensions.
    pub fn replace_tensor(&mut self, id: &str, tensor: Tensor) -> Result<()> {
        let old = self.nodes.get(id).ok_or_else(|| TensorError::UnknownNode(id.into()))?;
        if old.legs() != tensor.legs() {
            return Err(TensorError::EntryCount { expected: old.len(), actual: tensor.len() });
        }
        if self.nodes.len() > 1 && old.backend() != tensor.backend() {
            return Err(TensorError::BackendMismatch);
        }
        self.nodes.insert(id.to_string(), tensor);
        Ok(())
    }

    fn leg_dim(&self, r: &LegRef) -> Result<usize> {
        let t = self.nodes.get(&r.node).ok_or_else(|| TensorError::UnknownNode(r.node.clone()))?;
        let k = t
            .leg_index(&r.leg)
            .ok_or_else(|| TensorError::DanglingLeg { node: r.node.clone(), leg: r.leg.clone() })?;
        Ok(t.legs()[k].dim)
    }

    fn is_used(&self, r: &LegRef) -> bool {
        self.bonds.iter().any(|b| &b.a == r || &b.b == r) || self.open.contains(r)
    }

    /// Bonds two legs on different nodes.
    pub fn connect(&mut self, a: LegRef, b: LegRef) -> Result<()> {
        if a.node == b.node {
            return Err(TensorError::SelfBond(a.node));
        }
        let (da, db) = (self.leg_dim(&a)?, self.leg_dim(&b)?);
        if da != db {
            return Err(TensorError::DimensionMismatch {
                left: a.to_string(),
                left_dim: da,
                right: b.to_string(),
                right_dim: db,
            });
        }
        for r in [&a, &b] {
            if self.is_used(r) {
                return Err(TensorError::LegReused { node: r.node.clone(), leg: r.leg.clone() });
            }
        }
        self.bonds.push(Bond { a, b });
        Ok(())
    }

    /// Appends an open leg.
    pub fn push_open(&mut self, r: LegRef) -> Result<()> {
        self.leg_dim(&r)?;
        if self.is_used(&r) {
            return Err(TensorError::LegReused { node: r.node, leg: r.leg });
        }
        self.open.push(r);
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeMap<String, Tensor> {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Tensor> {
        self.nodes.get(id)
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn open_legs(&self) -> &[LegRef] {
        &self.open
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Common backend of all nodes, `None` for an empty network.
    pub fn backend(&self) -> Option<Backend> {
        self.nodes.values().next().map(Tensor::backend)
    }

    pub fn open_dims(&self) -> Vec<usize> {
        self.open.iter().map(|r| self.leg_dim(r).unwrap_or(0)).collect()
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let mut uses: HashMap<&LegRef, usize> = HashMap::new();
        for b in &self.bonds {
            if b.a.node == b.b.node {
                return Err(TensorError::SelfBond(b.a.node.clone()));
            }
            let (da, db) = (self.leg_dim(&b.a)?, self.leg_dim(&b.b)?);
            if da != db {
                return Err(TensorError::DimensionMismatch {
                    left: b.a.to_string(),
                    left_dim: da,
                    right: b.b.to_string(),
                    right_dim: db,
                });
            }
            *uses.entry(&b.a).or_default() += 1;
            *uses.entry(&b.b).or_default() += 1;
        }
        for r in &self.open {
            self.leg_dim(r)?;
            *uses.entry(r).or_default() += 1;
        }
        let backend = self.backend();
        for (id, t) in &self.nodes {
            if Some(t.backend()) != backend {
                return Err(TensorError::BackendMismatch);
            }
            for leg in t.legs() {
                let r = LegRef::new(id, &leg.label);
                match uses.get(&r).copied().unwrap_or(0) {
                    1 => {}
                    0 => return Err(TensorError::DanglingLeg { node: r.node, leg: r.leg }),
                    _ => return Err(TensorError::LegReused { node: r.node, leg: r.leg }),
                }
            }
        }
        Ok(())
    }

    /// Same network with every node converted to the float backend.
    pub fn to_float(&self) -> Self {
        TensorNetwork {
            nodes: self.nodes.iter().map(|(k, t)| (k.clone(), t.to_float())).collect(),
            bonds: self.bonds.clone(),
            open: self.open.clone(),
        }
    }

    pub fn to_backend(&self, backend: Backend) -> Result<Self> {
        match (self.backend(), backend) {
            (None, _) => Ok(self.clone()),
            (Some(a), b) if a == b => Ok(self.clone()),
            (Some(Backend::Exact), Backend::Float) => Ok(self.to_float()),
            _ => Err(TensorError::BackendMismatch),
        }
    }

    /// Product of the nodes' Frobenius norms; the reference magnitude for
    /// float zero tests.
    pub fn frobenius_scale(&self) -> f64 {
        self.nodes.values().map(Tensor::frobenius_norm).product()
    }

    /// The network contracted with its conjugated mirror image over every
    /// open leg. Mirror node ids get a `*` suffix (repeated until unique).
    pub fn with_mirror(&self) -> Self {
        let mut suffix = String::from("*");
        while self.nodes.keys().any(|k| self.nodes.contains_key(&format!("{k}{suffix}"))) {
            suffix.push('*');
        }
        let mirror = |r: &LegRef| LegRef::new(format!("{}{suffix}", r.node), r.leg.clone());
        let mut nodes = self.nodes.clone();
        for (k, t) in &self.nodes {
            nodes.insert(format!("{k}{suffix}"), conjugate(t));
        }
        let mut bonds = self.bonds.clone();
        bonds.extend(self.bonds.iter().map(|b| Bond { a: mirror(&b.a), b: mirror(&b.b) }));
        bonds.extend(self.open.iter().map(|r| Bond { a: r.clone(), b: mirror(r) }));
        TensorNetwork { nodes, bonds, open: Vec::new() }
    }

    /// Merges `n2` into `n1` in place; the merged node keeps the id `n1`.
    pub(crate) fn merge_nodes(&mut self, n1: &str, n2: &str) -> Result<()> {
        if n1 == n2 {
            return Err(TensorError::InvalidOrder(format!("cannot merge node `{n1}` with itself")));
        }
        let t1 = self.nodes.get(n1).ok_or_else(|| TensorError::UnknownNode(n1.into()))?;
        let t2 = self.nodes.get(n2).ok_or_else(|| TensorError::UnknownNode(n2.into()))?;
        let mut pairs = Vec::new();
        let mut joined = Vec::new();
        for (k, b) in self.bonds.iter().enumerate() {
            let (x, y) = if b.a.node == n1 && b.b.node == n2 {
                (&b.a, &b.b)
            } else if b.a.node == n2 && b.b.node == n1 {
                (&b.b, &b.a)
            } else {
                continue;
            };
            let i = t1.leg_index(&x.leg).ok_or_else(|| TensorError::UnknownLabel(x.leg.clone()))?;
            let j = t2.leg_index(&y.leg).ok_or_else(|| TensorError::UnknownLabel(y.leg.clone()))?;
            pairs.push((i, j));
            joined.push(k);
        }
        let (merged, renamed) = contract_tensors(t1, t2, &pairs)?;
        let rename: HashMap<String, String> = renamed.into_iter().collect();
        let fix = |r: &mut LegRef| {
            if r.node == n2 {
                r.node = n1.to_string();
                if let Some(new) = rename.get(&r.leg) {
                    r.leg = new.clone();
                }
            }
        };
        let mut k = 0;
        self.bonds.retain(|_| {
            k += 1;
            !joined.contains(&(k - 1))
        });
        for b in &mut self.bonds {
            fix(&mut b.a);
            fix(&mut b.b);
        }
        for r in &mut self.open {
            fix(r);
        }
        self.nodes.remove(n2);
        self.nodes.insert(n1.to_string(), merged);
        Ok(())
    }

    /// Contracts the network following `order` (or [`optimize_order`] when
    /// absent). The result's legs are the open legs in declared order, labelled
    /// by their leg names, or `node.leg` where two open legs share a name.
    pub fn contract(&self, order: Option<&ContractionOrder>) -> Result<Tensor> {
        if self.nodes.is_empty() {
            return Err(TensorError::EmptyNetwork);
        }
        self.validate()?;
        let owned;
        let order = match order {
            Some(o) => o,
            None => {
                owned = optimize_order(self);
                &owned
            }
        };
        let mut work = self.clone();
        for (a, b) in &order.steps {
            if !work.nodes.contains_key(a) || !work.nodes.contains_key(b) {
                return Err(TensorError::InvalidOrder(format!("step ({a}, {b}) names a node that is not present")));
            }
            work.merge_nodes(a, b)?;
        }
        if work.nodes.len() != 1 {
            return Err(TensorError::InvalidOrder(format!("{} nodes remain after all steps", work.nodes.len())));
        }
        let (_, tensor) = work.nodes.into_iter().next().expect("one node");
        let current: Vec<&str> = work.open.iter().map(|r| r.leg.as_str()).collect();
        let out = tensor.permuted(&current)?;
        out.with_labels(&self.output_labels())
    }

    fn output_labels(&self) -> Vec<String> {
        self.open
            .iter()
            .map(|r| {
                if self.open.iter().filter(|s| s.leg == r.leg).count() > 1 {
                    r.to_string()
                } else {
                    r.leg.clone()
                }
            })
            .collect()
    }
}

/// Contracts the two named nodes into one (keeping the id `n1`), summing over
/// every bond between them. With no shared bond this is the tensor product.
pub fn contract_pair(net: &TensorNetwork, n1: &str, n2: &str) -> Result<TensorNetwork> {
    let mut out = net.clone();
    out.merge_nodes(n1, n2)?;
    Ok(out)
}

/// Contracts a whole network into one tensor. See [`TensorNetwork::contract`].
pub fn contract_network(net: &TensorNetwork, order: Option<&ContractionOrder>) -> Result<Tensor> {
    net.contract(order)
}

/// `<psi|psi>` for the state represented by `state`: the network contracted
/// against its conjugated mirror image over all open legs. Float results are
/// returned with a zero imaginary part.
pub fn norm_squared(state: &TensorNetwork) -> Result<Scalar> {
    if state.is_empty() {
        return Err(TensorError::EmptyNetwork);
    }
    state.validate()?;
    let doubled = state.with_mirror();
    let value = doubled.contract(None)?.scalar_value().expect("closed network contracts to a scalar");
    Ok(match value {
        Scalar::Float(v) => Scalar::Float(Complex::new(v.re, 0.0)),
        exact => exact,
    })
}

/// Tensor product of the given tensors in order (used for disconnected pieces).
pub fn product_all(tensors: &[Tensor]) -> Result<Option<Tensor>> {
    let mut it = tensors.iter();
    let Some(first) = it.next() else { return Ok(None) };
    let mut acc = first.clone();
    for t in it {
        acc = tensor_product(&acc, t)?;
    }
    Ok(Some(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> Tensor {
        Tensor::from_ints(&[("a", 2), ("b", 2)], &[1, 0, 0, 1]).unwrap()
    }

    #[test]
    fn bell_amplitude_for_01_vanishes() {
        let bra01 = Tensor::from_ints(&[("a", 2), ("b", 2)], &[0, 1, 0, 0]).unwrap();
        let net = TensorNetwork::from_wires([("phi".to_string(), bell()), ("m".to_string(), bra01)], &[] as &[&str])
            .unwrap();
        let pair = contract_pair(&net, "phi", "m").unwrap();
        assert_eq!(pair.len(), 1);
        assert_eq!(pair.node("phi").unwrap().scalar_value(), Some(Scalar::int(0)));
        let bra_bell = bell();
        let net = TensorNetwork::from_wires([("k".to_string(), bell()), ("b".to_string(), bra_bell)], &[] as &[&str])
            .unwrap();
        assert_eq!(contract_network(&net, None).unwrap().scalar_value(), Some(Scalar::int(2)));
    }

    #[test]
    fn identity_acts_trivially() {
        let id = Tensor::from_ints(&[("out", 2), ("x", 2)], &[1, 0, 0, 1]).unwrap();
        let one = Tensor::from_ints(&[("x", 2)], &[0, 1]).unwrap();
        let net = TensorNetwork::from_wires([("id".into(), id), ("ket".into(), one)], &["out"]).unwrap();
        let t = contract_network(&net, None).unwrap();
        assert_eq!(t, Tensor::from_ints(&[("out", 2)], &[0, 1]).unwrap());
    }

    #[test]
    fn single_node_contracts_to_itself_in_open_order() {
        let t = Tensor::from_ints(&[("a", 2), ("b", 3)], &[1, 2, 3, 4, 5, 6]).unwrap();
        let net = TensorNetwork::from_wires([("t".into(), t.clone())], &["a", "b"]).unwrap();
        assert_eq!(contract_network(&net, None).unwrap(), t);
        let net = TensorNetwork::from_wires([("t".into(), t.clone())], &["b", "a"]).unwrap();
        assert_eq!(contract_network(&net, None).unwrap(), t.permuted(&["b", "a"]).unwrap());
    }

    #[test]
    fn norm_of_bell_state_is_two() {
        let net = TensorNetwork::from_wires([("phi".into(), bell())], &["a", "b"]).unwrap();
        assert_eq!(norm_squared(&net).unwrap(), Scalar::int(2));
        let f = norm_squared(&net.to_float()).unwrap();
        assert!((f.to_complex().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_networks_contract_to_products() {
        let a = Tensor::from_ints(&[("x", 2)], &[1, 2]).unwrap();
        let b = Tensor::from_ints(&[("y", 2)], &[3, 5]).unwrap();
        let net = TensorNetwork::from_wires([("a".into(), a.clone()), ("b".into(), b.clone())], &["y", "x"]).unwrap();
        let t = contract_network(&net, None).unwrap();
        assert_eq!(t, tensor_product(&b, &a).unwrap());
    }

    #[test]
    fn structural_errors() {
        let a = Tensor::from_ints(&[("x", 2)], &[1, 2]).unwrap();
        assert!(matches!(
            TensorNetwork::from_wires([("a".into(), a.clone())], &[] as &[&str]),
            Err(TensorError::DanglingLeg { .. })
        ));
        let wide = Tensor::from_ints(&[("x", 3)], &[1, 2, 3]).unwrap();
        assert!(matches!(
            TensorNetwork::from_wires([("a".into(), a.clone()), ("b".into(), wide)], &[] as &[&str]),
            Err(TensorError::DimensionMismatch { .. })
        ));
        let mut net = TensorNetwork::new();
        net.add_node("a", a.clone()).unwrap();
        assert!(matches!(net.add_node("a", a.clone()), Err(TensorError::DuplicateNode(_))));
        assert!(matches!(
            net.connect(LegRef::new("a", "x"), LegRef::new("a", "x")),
            Err(TensorError::SelfBond(_))
        ));
        assert!(matches!(contract_pair(&net, "a", "zz"), Err(TensorError::UnknownNode(_))));
        assert_eq!(TensorNetwork::new().contract(None), Err(TensorError::EmptyNetwork));
    }

    #[test]
    fn duplicate_open_leg_names_are_qualified() {
        let a = Tensor::from_ints(&[("q", 2)], &[1, 0]).unwrap();
        let mut net = TensorNetwork::new();
        net.add_node("n1", a.clone()).unwrap();
        net.add_node("n2", a).unwrap();
        net.push_open(LegRef::new("n1", "q")).unwrap();
        net.push_open(LegRef::new("n2", "q")).unwrap();
        let t = net.contract(None).unwrap();
        assert_eq!(t.labels(), ["n1.q", "n2.q"]);
    }
}
