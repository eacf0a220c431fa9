//! Pairwise contraction orders and their cost model.
//!
//! The cost of an order is the sum of the entry counts of every intermediate
//! tensor it creates (the final tensor included).

use std::collections::BTreeMap;

use crate::network::TensorNetwork;
use crate::tensor::{Result, TensorError};

/// Networks up to this many nodes get an exhaustive search.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// A sequence of merges. Each step `(a, b)` contracts node `b` into node `a`;
/// the merged node keeps the id `a`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContractionOrder {
    pub steps: Vec<(String, String)>,
}

impl ContractionOrder {
    pub fn new(steps: Vec<(String, String)>) -> Self {
        ContractionOrder { steps }
    }
}

/// Leg shape of a node during simulation: partner node (None for open) and dim.
type Shape = Vec<(Option<String>, usize)>;

/// Tracks leg shapes through a sequence of merges without touching entries.
#[derive(Clone, Debug)]
pub(crate) struct OrderSim {
    nodes: BTreeMap<String, Shape>,
}

impl OrderSim {
    pub(crate) fn new(net: &TensorNetwork) -> Self {
        let mut nodes: BTreeMap<String, Shape> = BTreeMap::new();
        for (id, t) in net.nodes() {
            let shape = t
                .legs()
                .iter()
                .map(|leg| {
                    let partner = net.bonds().iter().find_map(|b| {
                        if b.a.node == *id && b.a.leg == leg.label {
                            Some(b.b.node.clone())
                        } else if b.b.node == *id && b.b.leg == leg.label {
                            Some(b.a.node.clone())
                        } else {
                            None
                        }
                    });
                    (partner, leg.dim)
                })
                .collect();
            nodes.insert(id.clone(), shape);
        }
        OrderSim { nodes }
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }

    fn ids(&self) -> Vec<String> {
        self.nodes.keys().cloned().collect()
    }

    fn connected(&self, a: &str, b: &str) -> bool {
        self.nodes[a].iter().any(|(p, _)| p.as_deref() == Some(b))
    }

    /// Entry count of the tensor produced by merging `a` and `b`.
    pub(crate) fn merged_size(&self, a: &str, b: &str) -> u128 {
        let outer = |x: &str, y: &str| -> u128 {
            self.nodes[x]
                .iter()
                .filter(|(p, _)| p.as_deref() != Some(y))
                .fold(1u128, |acc, (_, d)| acc.saturating_mul(*d as u128))
        };
        outer(a, b).saturating_mul(outer(b, a))
    }

    /// Applies one merge and returns the new node's entry count.
    pub(crate) fn merge(&mut self, a: &str, b: &str) -> Result<u128> {
        if a == b || !self.nodes.contains_key(a) || !self.nodes.contains_key(b) {
            return Err(TensorError::InvalidOrder(format!("invalid step ({a}, {b})")));
        }
        let size = self.merged_size(a, b);
        let sa = self.nodes.remove(a).expect("present");
        let sb = self.nodes.remove(b).expect("present");
        let mut merged: Shape = sa.into_iter().filter(|(p, _)| p.as_deref() != Some(b)).collect();
        merged.extend(sb.into_iter().filter(|(p, _)| p.as_deref() != Some(a)));
        for shape in self.nodes.values_mut() {
            for (p, _) in shape.iter_mut() {
                if p.as_deref() == Some(b) {
                    *p = Some(a.to_string());
                }
            }
        }
        self.nodes.insert(a.to_string(), merged);
        Ok(size)
    }
}

/// Total cost of `order` on `net`; fails if the order is not a valid full merge.
pub fn order_cost(net: &TensorNetwork, order: &ContractionOrder) -> Result<u128> {
    let mut sim = OrderSim::new(net);
    let mut cost = 0u128;
    for (a, b) in &order.steps {
        cost = cost.saturating_add(sim.merge(a, b)?);
    }
    if sim.len() > 1 {
        return Err(TensorError::InvalidOrder(format!("{} nodes remain", sim.len())));
    }
    Ok(cost)
}

/// Picks a contraction order: exhaustive minimum cost for small networks,
/// greedy smallest-intermediate-first otherwise. Ties go to the
/// lexicographically smallest node ids.
pub fn optimize_order(net: &TensorNetwork) -> ContractionOrder {
    if net.len() <= EXHAUSTIVE_LIMIT {
        exhaustive(net)
    } else {
        greedy(net)
    }
}

fn exhaustive(net: &TensorNetwork) -> ContractionOrder {
    let ids: Vec<&String> = net.nodes().keys().collect();
    let n = ids.len();
    if n <= 1 {
        return ContractionOrder::default();
    }
    let index = |s: &str| ids.iter().position(|x| x.as_str() == s).expect("bond endpoint is a node");
    // legs[i]: (partner index, dim) for every leg of node i
    let mut legs: Vec<Vec<(Option<usize>, usize)>> = vec![Vec::new(); n];
    for (i, (id, t)) in net.nodes().iter().enumerate() {
        for leg in t.legs() {
            let partner = net.bonds().iter().find_map(|b| {
                if b.a.node == *id && b.a.leg == leg.label {
                    Some(index(&b.b.node))
                } else if b.b.node == *id && b.b.leg == leg.label {
                    Some(index(&b.a.node))
                } else {
                    None
                }
            });
            legs[i].push((partner, leg.dim));
        }
    }
    let full = (1usize << n) - 1;
    let size = |s: usize| -> u128 {
        let mut acc = 1u128;
        for (i, node) in legs.iter().enumerate() {
            if s >> i & 1 == 1 {
                for &(p, d) in node {
                    if p.is_none_or(|p| s >> p & 1 == 0) {
                        acc = acc.saturating_mul(d as u128);
                    }
                }
            }
        }
        acc
    };
    let mut cost = vec![u128::MAX; full + 1];
    let mut split = vec![0usize; full + 1];
    for s in 1..=full {
        if s.count_ones() == 1 {
            cost[s] = 0;
            continue;
        }
        let here = size(s);
        // Enumerate proper sub-masks containing the lowest bit, so each split is seen once.
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != s {
                let b = s ^ a;
                let c = cost[a].saturating_add(cost[b]).saturating_add(here);
                if c < cost[s] {
                    cost[s] = c;
                    split[s] = a;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut steps = Vec::new();
    emit(full, &split, &ids, &mut steps);
    ContractionOrder { steps }
}

fn emit(s: usize, split: &[usize], ids: &[&String], steps: &mut Vec<(String, String)>) {
    if s.count_ones() == 1 {
        return;
    }
    let a = split[s];
    let b = s ^ a;
    emit(a, split, ids, steps);
    emit(b, split, ids, steps);
    let (ra, rb) = (a.trailing_zeros() as usize, b.trailing_zeros() as usize);
    let (x, y) = (ra.min(rb), ra.max(rb));
    steps.push((ids[x].clone(), ids[y].clone()));
}

fn greedy(net: &TensorNetwork) -> ContractionOrder {
    let mut sim = OrderSim::new(net);
    let mut steps = Vec::new();
    while sim.len() > 1 {
        let ids = sim.ids();
        let mut best: Option<(u128, &String, &String)> = None;
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if !sim.connected(a, b) {
                    continue;
                }
                let s = sim.merged_size(a, b);
                if best.is_none_or(|(bs, _, _)| s < bs) {
                    best = Some((s, a, b));
                }
            }
        }
        let (a, b) = match best {
            Some((_, a, b)) => (a.clone(), b.clone()),
            None => (ids[0].clone(), ids[1].clone()),
        };
        sim.merge(&a, &b).expect("ids come from the simulation");
        steps.push((a, b));
    }
    ContractionOrder { steps }
}

/// Every valid full merge sequence of `net`, with the orientation of steps
/// alternating so both "keep left" and "keep right" merges are exercised.
/// Grows factorially; meant for tests on networks of at most six or so nodes.
pub fn all_orders(net: &TensorNetwork) -> Vec<ContractionOrder> {
    fn rec(ids: Vec<String>, prefix: &mut Vec<(String, String)>, out: &mut Vec<ContractionOrder>) {
        if ids.len() <= 1 {
            out.push(ContractionOrder { steps: prefix.clone() });
            return;
        }
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let (keep, gone) =
                    if (out.len() + prefix.len()).is_multiple_of(2) { (&ids[i], &ids[j]) } else { (&ids[j], &ids[i]) };
                let next: Vec<String> = ids.iter().filter(|x| *x != gone).cloned().collect();
                prefix.push((keep.clone(), gone.clone()));
                rec(next, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(net.nodes().keys().cloned().collect(), &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Leg, Tensor};
    use crate::Backend;

    fn zeros(legs: &[(&str, usize)]) -> Tensor {
        Tensor::zeros(legs.iter().map(|(l, d)| Leg::new(*l, *d)).collect(), Backend::Exact).unwrap()
    }

    #[test]
    fn two_nodes_have_one_merge() {
        let net = TensorNetwork::from_wires(
            [("a".into(), zeros(&[("x", 2)])), ("b".into(), zeros(&[("x", 2), ("y", 3)]))],
            &["y"],
        )
        .unwrap();
        assert_eq!(optimize_order(&net).steps, vec![("a".to_string(), "b".to_string())]);
    }

    #[test]
    fn chain_avoids_the_wide_intermediate() {
        // A: 2 x 1024, B: 1024 x 2, C: 2 x 1024
        let net = TensorNetwork::from_wires(
            [
                ("A".into(), zeros(&[("i", 2), ("j", 1024)])),
                ("B".into(), zeros(&[("j", 1024), ("k", 2)])),
                ("C".into(), zeros(&[("k", 2), ("l", 1024)])),
            ],
            &["i", "l"],
        )
        .unwrap();
        let best = optimize_order(&net);
        assert_eq!(best.steps[0], ("A".to_string(), "B".to_string()));
        let ab_first = order_cost(&net, &best).unwrap();
        let bc_first =
            order_cost(&net, &ContractionOrder::new(vec![("B".into(), "C".into()), ("A".into(), "B".into())])).unwrap();
        assert_eq!(ab_first, 4 + 2048);
        assert_eq!(bc_first, 1024 * 1024 + 2048);
    }

    #[test]
    fn invalid_orders_are_rejected() {
        let net = TensorNetwork::from_wires(
            [("a".into(), zeros(&[("x", 2)])), ("b".into(), zeros(&[("x", 2)]))],
            &[] as &[&str],
        )
        .unwrap();
        assert!(order_cost(&net, &ContractionOrder::new(vec![("a".into(), "a".into())])).is_err());
        assert!(order_cost(&net, &ContractionOrder::default()).is_err());
        assert_eq!(all_orders(&net).len(), 1);
    }
}
