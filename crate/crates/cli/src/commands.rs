use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use tnl::boolean::{parse_rel, BoolFunction, BoolRelation};
use tnl::gadget::{embed_3x3, gadget_contract, operator_entries, parse_mat, scaled_reference, svd_embed, write_mat, IntegerMatrix};
use tnl::lattice::{
    classify_clone, coclone_member, coclone_member_bruteforce, construct_fanout_free, StrictOutcome,
    BRUTEFORCE_TUPLE_LIMIT,
};
use tnl::mortality::{search_zero_word_with, to_physicality_instance, MortalityInstance, SearchOptions, SearchOutcome};
use tnl::physicality::{chain_word, fixture_tnf, is_physical_with_tol, GateLibrary};
use tnl::sat::{count_models_with, find_model, parse_dimacs, tree_condition_report, Cnf, SatConfig, SatError, TreeTensorNetwork};
use tnl::tnf::{parse_tnf, write_tnf};
use tnl::{Backend, Scalar, Tensor, TensorNetwork};

use crate::report::{CliError, CliResult, Report};
use crate::{CloneCmd, Cli, CocloneCmd, Command, EmbedCmd, Fixture, MortalityCmd, ParadoxCmd, SatCmd};

pub fn dispatch(cli: &Cli, args: Vec<String>) -> CliResult<Report> {
    let name = match &cli.command {
        Command::Sat(SatCmd::Count { .. }) => "sat count",
        Command::Sat(SatCmd::Solve { .. }) => "sat solve",
        Command::Sat(SatCmd::TreeCheck { .. }) => "sat tree-check",
        Command::Physical { .. } => "physical",
        Command::Paradox(_) => "paradox demo",
        Command::Chain { .. } => "chain",
        Command::Embed(EmbedCmd::Svd { .. }) => "embed svd",
        Command::Embed(EmbedCmd::M3 { .. }) => "embed m3",
        Command::Mortality(_) => "mortality search",
        Command::Clone(_) => "clone classify",
        Command::Coclone(_) => "coclone member",
    };
    let mut r = Report::new(name, args);
    match &cli.command {
        Command::Sat(SatCmd::Count { file, max_vars }) => sat_count(&mut r, file, *max_vars)?,
        Command::Sat(SatCmd::Solve { file, max_vars }) => sat_solve(&mut r, file, *max_vars)?,
        Command::Sat(SatCmd::TreeCheck { file, parent_legs }) => tree_check(&mut r, cli, file, parent_legs)?,
        Command::Physical { file } => physical(&mut r, cli, file)?,
        Command::Paradox(ParadoxCmd::Demo { name }) => paradox(&mut r, cli, *name)?,
        Command::Chain { lib, word, check } => chain(&mut r, cli, lib, word, *check)?,
        Command::Embed(EmbedCmd::Svd { file }) => embed_svd(&mut r, file)?,
        Command::Embed(EmbedCmd::M3 { file }) => embed_m3(&mut r, file)?,
        Command::Mortality(MortalityCmd::Search { lib, max_len, emit_circuit, memo_cap }) => {
            mortality(&mut r, lib, *max_len, emit_circuit.as_deref(), *memo_cap)?
        }
        Command::Clone(CloneCmd::Classify { rels }) => clone_classify(&mut r, rels)?,
        Command::Coclone(CocloneCmd::Member { target, rels, strict, max_network_size }) => {
            coclone(&mut r, target, rels, strict.then_some(*max_network_size))?
        }
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// input helpers

fn read(r: &mut Report, path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::input(path, e))?;
    r.digest(path, &bytes);
    String::from_utf8(bytes).map_err(|_| CliError::input(path, "not valid UTF-8"))
}

/// Files in `dir` with one of `exts`, sorted by name.
fn dir_files(dir: &Path, exts: &[&str]) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.contains(&e)))
        .collect();
    out.sort();
    Ok(out)
}

fn load_cnf(r: &mut Report, file: &Path) -> CliResult<Cnf> {
    let text = read(r, file)?;
    parse_dimacs(&text).map_err(|e| CliError::input(file, e))
}

fn load_tnf(r: &mut Report, cli: &Cli, file: &Path) -> CliResult<TensorNetwork> {
    let text = read(r, file)?;
    let net = parse_tnf(&text).map_err(|e| CliError::input(file, e))?;
    with_backend(r, cli, net)
}

fn with_backend(r: &mut Report, cli: &Cli, net: TensorNetwork) -> CliResult<TensorNetwork> {
    let net = match cli.backend {
        Some(b) => net.to_backend(b).map_err(CliError::usage)?,
        None => net,
    };
    r.backend(net.backend().unwrap_or(Backend::Exact));
    Ok(net)
}

fn load_rels(r: &mut Report, dir: &Path) -> CliResult<Vec<(String, BoolRelation)>> {
    let mut out = Vec::new();
    for path in dir_files(dir, &["rel"])? {
        let text = read(r, &path)?;
        let rel = parse_rel(&text).map_err(|e| CliError::input(&path, e))?;
        out.push((stem(&path), rel));
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn sat_err(e: SatError) -> CliError {
    CliError::usage(e)
}

fn zero_based(word: &[usize], len: usize) -> CliResult<Vec<usize>> {
    word.iter()
        .map(|&i| {
            if i == 0 || i > len {
                Err(CliError::usage(format!("gate index {i} out of range 1..={len}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

// ---------------------------------------------------------------------------
// formatting

/// Stable text form of a scalar; floats get nine decimals with trailing
/// zeros trimmed.
fn fmt_scalar(s: &Scalar) -> String {
    match s {
        Scalar::Exact(_) => s.to_string(),
        Scalar::Float(c) => {
            let re = fmt_f64(c.re);
            if c.im.abs() < 1e-12 {
                re
            } else if c.im < 0.0 {
                format!("{re}-{}i", fmt_f64(-c.im))
            } else {
                format!("{re}+{}i", fmt_f64(c.im))
            }
        }
    }
}

fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn index_string(t: &Tensor, flat: usize) -> String {
    let dims = t.dims();
    let mut rest = flat;
    let mut idx = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        idx[k] = rest % d;
        rest /= d;
    }
    if dims.iter().all(|&d| d == 2) {
        idx.iter().map(|i| i.to_string()).collect()
    } else {
        join(&idx)
    }
}

/// Nonzero entries keyed by index string (bit strings for qubit legs).
fn entry_map(t: &Tensor) -> BTreeMap<String, String> {
    let keep: Vec<usize> = match t.backend() {
        Backend::Exact => t.nonzero_flat(),
        Backend::Float => {
            let floor = 1e-12 * t.frobenius_norm();
            (0..t.len()).filter(|&k| t.get_flat(k).abs() > floor).collect()
        }
    };
    keep.into_iter().map(|k| (index_string(t, k), fmt_scalar(&t.get_flat(k)))).collect()
}

fn ket_string(t: &Tensor) -> String {
    if let Some(v) = t.scalar_value() {
        return fmt_scalar(&v);
    }
    let entries = entry_map(t);
    if entries.is_empty() {
        return "0".to_string();
    }
    entries
        .iter()
        .map(|(idx, v)| if v == "1" { format!("|{idx}>") } else { format!("{v}|{idx}>") })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn tensor_json(t: &Tensor) -> Value {
    json!({ "legs": t.labels(), "dims": t.dims(), "entries": entry_map(t) })
}

fn matrix_lines(entries: &[f64], n: usize) -> Vec<String> {
    entries.chunks(n).map(|row| row.iter().map(|&x| format!("{:>12}", fmt_f64(x))).collect::<String>()).collect()
}

fn fun_string(f: &BoolFunction) -> String {
    format!("fun {} {}", f.arity(), f.to_bit_string())
}

// ---------------------------------------------------------------------------
// sat

fn sat_count(r: &mut Report, file: &Path, max_vars: usize) -> CliResult<()> {
    let cnf = load_cnf(r, file)?;
    r.backend(Backend::Exact);
    let n = count_models_with(&cnf, SatConfig { max_vars }).map_err(sat_err)?;
    r.set("variables", cnf.num_vars());
    r.set("clauses", cnf.clauses().len());
    r.set("models", n);
    r.line(format!("models = {n}"));
    Ok(())
}

fn sat_solve(r: &mut Report, file: &Path, max_vars: usize) -> CliResult<()> {
    let cnf = load_cnf(r, file)?;
    r.backend(Backend::Exact);
    if cnf.num_vars() > max_vars {
        return Err(sat_err(SatError::TooManyVariables { vars: cnf.num_vars(), max: max_vars }));
    }
    match find_model(&cnf).map_err(sat_err)? {
        Some(model) => {
            let lits: Vec<i64> =
                model.iter().enumerate().map(|(i, &b)| if b { i as i64 + 1 } else { -(i as i64 + 1) }).collect();
            r.set("satisfiable", true);
            r.set("model", lits.clone());
            r.verdict = Some(true);
            r.line("satisfiable");
            r.line(format!("model = {}", lits.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")));
        }
        None => {
            r.set("satisfiable", false);
            r.verdict = Some(false);
            r.line("unsatisfiable");
        }
    }
    Ok(())
}

fn parse_parent_legs(spec: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (node, leg) = item
            .split_once(':')
            .filter(|(n, l)| !n.is_empty() && !l.is_empty())
            .ok_or_else(|| CliError::usage(format!("bad parent leg `{item}`, expected node:leg")))?;
        if out.insert(node.to_string(), leg.to_string()).is_some() {
            return Err(CliError::usage(format!("node `{node}` given two parent legs")));
        }
    }
    Ok(out)
}

fn tree_check(r: &mut Report, cli: &Cli, file: &Path, spec: &str) -> CliResult<()> {
    let parents = parse_parent_legs(spec)?;
    let net = load_tnf(r, cli, file)?;
    let ttn = TreeTensorNetwork::new(net, &parents).map_err(sat_err)?;
    let nodes = tree_condition_report(&ttn).map_err(sat_err)?;
    let ok = nodes.values().all(|&v| v);
    r.line(format!("root = {}", ttn.root()));
    for (id, pass) in &nodes {
        r.line(format!("node {id}: {}", if *pass { "pass" } else { "fail" }));
    }
    r.line(format!("tree condition: {ok}"));
    r.set("root", ttn.root());
    r.set("nodes", json!(nodes));
    r.set("tree_condition", ok);
    r.verdict = Some(ok);
    Ok(())
}

// ---------------------------------------------------------------------------
// physicality

fn physical(r: &mut Report, cli: &Cli, file: &Path) -> CliResult<()> {
    let net = load_tnf(r, cli, file)?;
    let v = is_physical_with_tol(&net, cli.tol).map_err(CliError::usage)?;
    r.set("physical", v.physical);
    r.set("norm_squared", fmt_scalar(&v.norm_squared));
    r.verdict = Some(v.physical);
    r.line(format!("physical: {}", v.physical));
    r.line(format!("norm_squared = {}", fmt_scalar(&v.norm_squared)));
    Ok(())
}

fn paradox(r: &mut Report, cli: &Cli, which: Fixture) -> CliResult<()> {
    let name = match which {
        Fixture::Grandfather => "grandfather",
        Fixture::Unproved => "unproved",
    };
    let text = fixture_tnf(name).expect("built-in fixture");
    let net = parse_tnf(text).expect("built-in fixture parses");
    let net = with_backend(r, cli, net)?;
    let t = net.contract(None).map_err(CliError::usage)?;
    let v = is_physical_with_tol(&net, cli.tol).map_err(CliError::usage)?;
    for l in text.lines() {
        r.line(l);
    }
    r.line(format!("contraction = {}", ket_string(&t)));
    r.line(format!("physical: {}", v.physical));
    r.set("fixture", name);
    r.set("tnf", text);
    r.set("contraction", tensor_json(&t));
    r.set("norm_squared", fmt_scalar(&v.norm_squared));
    r.set("physical", v.physical);
    Ok(())
}

fn load_library(r: &mut Report, cli: &Cli, dir: &Path) -> CliResult<GateLibrary> {
    for path in dir_files(dir, &["mat", "tnf"])? {
        read(r, &path)?;
    }
    let lib = GateLibrary::load_dir(dir).map_err(|e| match e {
        tnl::physicality::PhysicalityError::Io { path, source } => CliError::input(&path, source),
        tnl::physicality::PhysicalityError::Parse { path, source } => CliError::input(&path, source),
        other => CliError::usage(other),
    })?;
    match cli.backend {
        Some(Backend::Float) => Ok(lib.to_float()),
        Some(Backend::Exact) if lib.backend() == Backend::Float => {
            Err(CliError::usage("library holds float gates; the exact backend cannot represent them"))
        }
        _ => Ok(lib),
    }
}

fn chain(r: &mut Report, cli: &Cli, dir: &Path, word: &[usize], check: bool) -> CliResult<()> {
    let lib = load_library(r, cli, dir)?;
    let w = zero_based(word, lib.len())?;
    let net = chain_word(&lib, &w).map_err(CliError::usage)?;
    r.backend(net.backend().unwrap_or(Backend::Exact));
    let names: Vec<&str> = w.iter().map(|&i| lib.gates()[i].name.as_str()).collect();
    r.line(format!("word = {}", join(word)));
    r.line(format!("gates = {}", names.join(",")));
    r.set("word", word.to_vec());
    r.set("gates", names.clone());
    if check {
        let v = is_physical_with_tol(&net, cli.tol).map_err(CliError::usage)?;
        r.line(format!("physical: {}", v.physical));
        r.line(format!("norm_squared = {}", fmt_scalar(&v.norm_squared)));
        r.set("physical", v.physical);
        r.set("norm_squared", fmt_scalar(&v.norm_squared));
        r.verdict = Some(v.physical);
    } else {
        let tnf = write_tnf(&net);
        for l in tnf.lines() {
            r.line(l);
        }
        r.set("tnf", tnf);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gadgets

fn load_mat(r: &mut Report, file: &Path) -> CliResult<IntegerMatrix> {
    let text = read(r, file)?;
    parse_mat(&text).map_err(|e| CliError::input(file, e))
}

fn embed_svd(r: &mut Report, file: &Path) -> CliResult<()> {
    let m = load_mat(r, file)?;
    let g = svd_embed(&m).map_err(CliError::usage)?;
    r.backend(Backend::Float);
    let n = 1usize << g.qubits();
    let re = |t: &Tensor| operator_entries(t).iter().map(|c| c.re).collect::<Vec<f64>>();
    let (u, vt) = (re(g.u()), re(g.vt()));
    let got = gadget_contract(&g).map_err(CliError::usage)?;
    let want = scaled_reference(&m).map_err(CliError::usage)?;
    let err = got.max_abs_diff(&want).map_err(CliError::usage)?;

    r.line(format!("qubits = {}", g.qubits()));
    r.line(format!("frobenius_sq = {}", g.frobenius_sq()));
    r.line(format!("singular values = {}", g.singular_values().iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")));
    r.line(format!("psi = {}", g.psi().iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")));
    r.line("U =");
    r.lines.extend(matrix_lines(&u, n));
    r.line("VT =");
    r.lines.extend(matrix_lines(&vt, n));
    r.line(format!("reconstruction error = {err:.3e}"));
    let rounded = |xs: &[f64]| xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>();
    r.set("qubits", g.qubits());
    r.set("frobenius_sq", g.frobenius_sq().to_string());
    r.set("singular_values", rounded(g.singular_values()));
    r.set("psi", rounded(g.psi()));
    r.set("u", rounded(&u));
    r.set("vt", rounded(&vt));
    r.set("reconstruction_error", format!("{err:.3e}"));
    Ok(())
}

fn embed_m3(r: &mut Report, file: &Path) -> CliResult<()> {
    let m = load_mat(r, file)?;
    let e = embed_3x3(&m).map_err(CliError::usage)?;
    r.backend(Backend::Exact);
    let text = write_mat(&e);
    for l in text.lines() {
        r.line(l);
    }
    r.set("matrix", text);
    Ok(())
}

// ---------------------------------------------------------------------------
// mortality

fn mortality(r: &mut Report, dir: &Path, max_len: usize, emit: Option<&Path>, memo_cap: usize) -> CliResult<()> {
    let mut mats = Vec::new();
    for path in dir_files(dir, &["mat"])? {
        mats.push(load_mat(r, &path)?);
    }
    let inst = MortalityInstance::new(mats, max_len).map_err(CliError::usage)?;
    r.backend(Backend::Exact);
    let (outcome, stats) = search_zero_word_with(&inst, SearchOptions { memo_cap, ..Default::default() });
    r.set("matrices", inst.matrices().len());
    r.set("max_len", max_len);
    r.set("products", stats.products);
    r.set("distinct_products", stats.distinct);
    r.set("memo_saturated", stats.memo_saturated);
    match &outcome {
        SearchOutcome::Found(w) => {
            let one: Vec<usize> = w.iter().map(|i| i + 1).collect();
            r.line(format!("zero word = {}", join(&one)));
            r.line(format!("length = {}", w.len()));
            r.set("outcome", "found");
            r.set("word", one);
        }
        SearchOutcome::ImmortalByDeterminant => {
            r.line("no zero word: every matrix has nonzero determinant");
            r.set("outcome", "immortal-by-determinant");
        }
        SearchOutcome::Exhausted { len } => {
            r.line(format!("no zero word: no new products after length {}", len - 1));
            r.set("outcome", "exhausted");
            r.set("closed_at", *len);
        }
        SearchOutcome::NotFoundWithin(k) => {
            r.line(format!("no zero word up to length {k}"));
            r.set("outcome", "not-found");
        }
    }
    r.verdict = Some(outcome.word().is_some());
    if let Some(out) = emit {
        let written = emit_circuit(&inst, outcome.word(), out)?;
        r.line(format!("wrote {} files to {}", written.len(), out.display()));
        r.set("emitted", written);
    }
    Ok(())
}

fn emit_circuit(inst: &MortalityInstance, word: Option<&[usize]>, out: &Path) -> CliResult<Vec<String>> {
    let io = |e: std::io::Error| CliError::usage(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let mut written = Vec::new();
    for (i, m) in inst.matrices().iter().enumerate() {
        let working = tnl::mortality::working_matrix(m).map_err(CliError::usage)?;
        let g = svd_embed(&working).map_err(CliError::usage)?;
        let name = format!("gadget{}.tnf", i + 1);
        fs::write(out.join(&name), write_tnf(&g.network())).map_err(io)?;
        written.push(name);
    }
    if let Some(w) = word {
        let lib = to_physicality_instance(inst).map_err(CliError::usage)?;
        let net = chain_word(&lib, w).map_err(CliError::usage)?;
        fs::write(out.join("word.tnf"), write_tnf(&net)).map_err(io)?;
        written.push("word.tnf".to_string());
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// clones

fn clone_classify(r: &mut Report, dir: &Path) -> CliResult<()> {
    let rels = load_rels(r, dir)?;
    let s: Vec<BoolRelation> = rels.into_iter().map(|(_, rel)| rel).collect();
    let d = classify_clone(&s);
    r.backend(Backend::Exact);
    r.line(format!("clone = {}", d.name));
    r.line(format!("separation bound = {}", d.separation_bound));
    r.line("generators:");
    for g in &d.generators {
        r.line(format!("  {}", fun_string(g)));
    }
    r.line("properties:");
    for (name, v) in &d.properties {
        r.line(format!("  {name}: {v}"));
    }
    r.line("probes:");
    for (name, v) in &d.probes {
        r.line(format!("  {name}: {v}"));
    }
    r.set("clone", d.name.clone());
    r.set("separation_bound", d.separation_bound);
    r.set("generators", d.generators.iter().map(fun_string).collect::<Vec<_>>());
    r.set("properties", json!(d.properties.iter().cloned().collect::<BTreeMap<_, _>>()));
    r.set("probes", json!(d.probes.iter().cloned().collect::<BTreeMap<_, _>>()));
    Ok(())
}

fn coclone(r: &mut Report, target: &Path, dir: &Path, strict: Option<usize>) -> CliResult<()> {
    let text = read(r, target)?;
    let t = parse_rel(&text).map_err(|e| CliError::input(target, e))?;
    let rels = load_rels(r, dir)?;
    let names: Vec<String> = rels.iter().map(|(n, _)| n.clone()).collect();
    let s: Vec<BoolRelation> = rels.into_iter().map(|(_, rel)| rel).collect();
    r.backend(Backend::Exact);
    r.set("target_tuples", t.tuple_strings());
    match strict {
        None => {
            let member = coclone_member(&t, &s);
            r.line(format!("member: {member}"));
            r.set("member", member);
            if t.len() <= BRUTEFORCE_TUPLE_LIMIT {
                let brute = coclone_member_bruteforce(&t, &s).expect("tuple count checked");
                r.set("bruteforce", brute);
                if brute != member {
                    log::error!("classification and brute force disagree on this query");
                }
            }
            r.verdict = Some(member);
        }
        Some(max) => {
            r.set("max_network_size", max);
            match construct_fanout_free(&t, &s, max) {
                StrictOutcome::Constructed(c) => {
                    let net = c.to_network(&s).map_err(CliError::usage)?;
                    let used: Vec<&str> = c.nodes.iter().map(|&i| names[i].as_str()).collect();
                    let plural = if c.nodes.len() == 1 { "" } else { "s" };
                    r.line(format!(
                        "fanout-free construction: found with {} node{plural} ({})",
                        c.nodes.len(),
                        used.join(",")
                    ));
                    let tnf = write_tnf(&net);
                    for l in tnf.lines() {
                        r.line(l);
                    }
                    r.set("constructed", true);
                    r.set("nodes", used);
                    r.set("tnf", tnf);
                    r.verdict = Some(true);
                }
                StrictOutcome::NotFoundWithin(k) => {
                    r.line(format!(
                        "fanout-free construction: none with at most {k} nodes (bounded search; larger networks untried)"
                    ));
                    r.set("constructed", false);
                    r.verdict = Some(false);
                }
            }
        }
    }
    Ok(())
}
