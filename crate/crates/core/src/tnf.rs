//! Reader and writer for the line-based tensor network format (TNF).
//!
//! ```text
//! # comment
//! tensor BELL 2 2 { 0 0 1  1 1 1 }
//! node prep BELL a b
//! open a b
//! ```
//!
//! `tensor NAME d1 d2 ...` declares a dense template whose body lists
//! `i1 i2 ... VALUE` groups (omitted entries are zero; the body may span
//! lines). `node ID NAME l1 l2 ...` instantiates a template with wire
//! labels. A wire carried by two nodes is a bond; a wire carried by one node
//! must be listed on an `open` line. If any value in the file is a decimal or
//! complex number the whole network is read on the float backend.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::network::TensorNetwork;
use crate::parse::{strip_comment, ParseError};
use crate::scalar::{Backend, Scalar};
use crate::tensor::{Leg, Tensor};

struct Template {
    dims: Vec<usize>,
    values: BTreeMap<Vec<usize>, Scalar>,
    line: usize,
}

/// Parses a TNF document into a network.
pub fn parse_tnf(text: &str) -> Result<TensorNetwork, ParseError> {
    // Tokens with their line numbers, so bodies can span lines.
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        for tok in line.split_whitespace() {
            // Braces may be glued to neighbours: `{0 0 1}`.
            let mut rest = tok;
            while !rest.is_empty() {
                if let Some(r) = rest.strip_prefix('{').or_else(|| rest.strip_prefix('}')) {
                    tokens.push((k + 1, &rest[..1]));
                    rest = r;
                    continue;
                }
                let end = rest.find(['{', '}']).unwrap_or(rest.len());
                tokens.push((k + 1, &rest[..end]));
                rest = &rest[end..];
            }
        }
    }

    let mut templates: HashMap<String, Template> = HashMap::new();
    let mut nodes: Vec<(String, String, Vec<String>, usize)> = Vec::new();
    let mut open: Vec<(String, usize)> = Vec::new();
    let mut float = false;
    let mut pos = 0;
    let kw = |w: &str| matches!(w, "tensor" | "node" | "open");

    while pos < tokens.len() {
        let (line, word) = tokens[pos];
        pos += 1;
        match word {
            "tensor" => {
                let (_, name) = *tokens.get(pos).ok_or_else(|| ParseError::new(line, "missing tensor name"))?;
                if name == "{" || kw(name) {
                    return Err(ParseError::new(line, "missing tensor name"));
                }
                pos += 1;
                let mut dims = Vec::new();
                while pos < tokens.len() && tokens[pos].1 != "{" {
                    let (l, t) = tokens[pos];
                    if kw(t) {
                        return Err(ParseError::new(l, format!("expected `{{` after dimensions of `{name}`")));
                    }
                    let d: usize = t.parse().map_err(|_| ParseError::new(l, format!("bad dimension `{t}`")))?;
                    if d == 0 {
                        return Err(ParseError::new(l, "dimensions must be positive"));
                    }
                    dims.push(d);
                    pos += 1;
                }
                if pos == tokens.len() {
                    return Err(ParseError::new(line, format!("tensor `{name}` has no body")));
                }
                pos += 1;
                let mut body: Vec<(usize, &str)> = Vec::new();
                loop {
                    let Some(&(l, t)) = tokens.get(pos) else {
                        return Err(ParseError::new(line, format!("unterminated body for tensor `{name}`")));
                    };
                    pos += 1;
                    if t == "}" {
                        break;
                    }
                    if t == "{" {
                        return Err(ParseError::new(l, "nested `{`"));
                    }
                    body.push((l, t));
                }
                let group = dims.len() + 1;
                if !body.len().is_multiple_of(group) {
                    let l = body.last().map_or(line, |b| b.0);
                    return Err(ParseError::new(l, format!("tensor `{name}`: entries need {} indices and a value", dims.len())));
                }
                let mut values = BTreeMap::new();
                for chunk in body.chunks(group) {
                    let l = chunk[0].0;
                    let mut idx = Vec::with_capacity(dims.len());
                    for (k, &(_, t)) in chunk[..dims.len()].iter().enumerate() {
                        let i: usize = t.parse().map_err(|_| ParseError::new(l, format!("bad index `{t}`")))?;
                        if i >= dims[k] {
                            return Err(ParseError::new(l, format!("index {i} out of range for dimension {}", dims[k])));
                        }
                        idx.push(i);
                    }
                    let (vl, vt) = chunk[dims.len()];
                    let v: Scalar = vt.parse().map_err(|e: String| ParseError::new(vl, e))?;
                    float |= v.backend() == Backend::Float;
                    if values.insert(idx, v).is_some() {
                        return Err(ParseError::new(l, format!("duplicate entry in tensor `{name}`")));
                    }
                }
                if templates.insert(name.to_string(), Template { dims, values, line }).is_some() {
                    return Err(ParseError::new(line, format!("tensor `{name}` defined twice")));
                }
            }
            "node" => {
                let mut words = Vec::new();
                while pos < tokens.len() && tokens[pos].0 == line && !kw(tokens[pos].1) {
                    words.push(tokens[pos].1);
                    pos += 1;
                }
                if words.len() < 2 {
                    return Err(ParseError::new(line, "expected `node ID TENSOR legs...`"));
                }
                if words.iter().any(|w| *w == "{" || *w == "}") {
                    return Err(ParseError::new(line, "unexpected brace in node line"));
                }
                let legs = words[2..].iter().map(|s| s.to_string()).collect();
                nodes.push((words[0].to_string(), words[1].to_string(), legs, line));
            }
            "open" => {
                while pos < tokens.len() && tokens[pos].0 == line && !kw(tokens[pos].1) {
                    open.push((tokens[pos].1.to_string(), line));
                    pos += 1;
                }
            }
            other => return Err(ParseError::new(line, format!("unexpected `{other}`"))),
        }
    }

    let backend = if float { Backend::Float } else { Backend::Exact };
    let mut holders: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut built = Vec::new();
    let mut ids = HashSet::new();
    for (id, name, legs, line) in &nodes {
        let line = *line;
        if !ids.insert(id.as_str()) {
            return Err(ParseError::new(line, format!("node `{id}` defined twice")));
        }
        let tpl = templates.get(name).ok_or_else(|| ParseError::new(line, format!("unknown tensor `{name}`")))?;
        if tpl.dims.len() != legs.len() {
            return Err(ParseError::new(
                line,
                format!("tensor `{name}` has {} legs, node `{id}` names {}", tpl.dims.len(), legs.len()),
            ));
        }
        let mut seen = HashSet::new();
        for l in legs {
            if !seen.insert(l) {
                return Err(ParseError::new(line, format!("node `{id}` uses wire `{l}` twice")));
            }
            holders.entry(l).or_default().push(line);
        }
        let tensor_legs: Vec<Leg> = legs.iter().zip(&tpl.dims).map(|(l, &d)| Leg::new(l.clone(), d)).collect();
        let tensor = Tensor::from_fn(tensor_legs, backend, |idx| {
            let v = tpl.values.get(idx).cloned().unwrap_or_else(|| Scalar::zero(backend));
            match (backend, v) {
                (Backend::Float, Scalar::Exact(r)) => Scalar::Float(Scalar::Exact(r).to_complex()),
                (_, v) => v,
            }
        })
        .map_err(|e| ParseError::new(tpl.line.max(line), e.to_string()))?;
        built.push((id.clone(), tensor));
    }
    let mut open_seen = HashSet::new();
    for (w, line) in &open {
        if !open_seen.insert(w.as_str()) {
            return Err(ParseError::new(*line, format!("wire `{w}` listed as open twice")));
        }
        match holders.get(w.as_str()).map(Vec::len) {
            None => return Err(ParseError::new(*line, format!("open wire `{w}` is not on any node"))),
            Some(1) => {}
            Some(_) => return Err(ParseError::new(*line, format!("wire `{w}` is bonded and cannot be open"))),
        }
    }
    for (w, lines) in &holders {
        match lines.len() {
            1 if !open_seen.contains(w) => {
                return Err(ParseError::new(lines[0], format!("wire `{w}` appears once but is not listed as open")))
            }
            n if n > 2 => return Err(ParseError::new(lines[2], format!("wire `{w}` appears on {n} nodes"))),
            _ => {}
        }
    }
    let open_names: Vec<&str> = open.iter().map(|(w, _)| w.as_str()).collect();
    let fallback = nodes.first().map_or(1, |n| n.3);
    TensorNetwork::from_wires(built, &open_names).map_err(|e| ParseError::new(fallback, e.to_string()))
}

/// Renders a network as TNF. Each node gets its own template named after
/// the node id. Wires keep their leg labels where that is unambiguous.
pub fn write_tnf(net: &TensorNetwork) -> String {
    let mut used: HashSet<String> = HashSet::new();
    let mut wire: HashMap<(String, String), String> = HashMap::new();
    let fresh = |want: String, used: &mut HashSet<String>| {
        let mut name = want.clone();
        let mut k = 1;
        while used.contains(&name) {
            name = format!("{want}_{k}");
            k += 1;
        }
        used.insert(name.clone());
        name
    };
    for r in net.open_legs() {
        let name = fresh(r.leg.clone(), &mut used);
        wire.insert((r.node.clone(), r.leg.clone()), name);
    }
    for b in net.bonds() {
        let want = if b.a.leg == b.b.leg { b.a.leg.clone() } else { format!("{}_{}", b.a.leg, b.b.leg) };
        let name = fresh(want, &mut used);
        wire.insert((b.a.node.clone(), b.a.leg.clone()), name.clone());
        wire.insert((b.b.node.clone(), b.b.leg.clone()), name);
    }

    let mut out = String::new();
    for (id, t) in net.nodes() {
        let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
        let _ = write!(out, "tensor {id}");
        for d in &dims {
            let _ = write!(out, " {d}");
        }
        out.push_str(" {");
        let dims = t.dims();
        let mut any = false;
        for k in t.nonzero_flat() {
            let mut idx = vec![0; dims.len()];
            let mut rem = k;
            for a in (0..dims.len()).rev() {
                idx[a] = rem % dims[a];
                rem /= dims[a];
            }
            out.push_str("\n ");
            for i in idx {
                let _ = write!(out, " {i}");
            }
            let _ = write!(out, " {}", t.get_flat(k).to_tnf());
            any = true;
        }
        out.push_str(if any { "\n}\n" } else { " }\n" });
    }
    for (id, t) in net.nodes() {
        let _ = write!(out, "node {id} {id}");
        for leg in t.legs() {
            let _ = write!(out, " {}", wire[&(id.clone(), leg.label.clone())]);
        }
        out.push('\n');
    }
    if !net.open_legs().is_empty() {
        out.push_str("open");
        for r in net.open_legs() {
            let _ = write!(out, " {}", wire[&(r.node.clone(), r.leg.clone())]);
        }
        out.push('\n');
    }
    out
}
