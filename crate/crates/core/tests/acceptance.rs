//! End-to-end acceptance checks, run without the libtest harness so the
//! report always prints. Each criterion prints one PASS/FAIL line with its
//! wall time; the run exits nonzero if any criterion fails or runs past its
//! time budget. Tolerances and budgets are pinned below.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;

use tnl::boolean::{support, BoolFunction, BoolRelation, StandardTensor};
use tnl::gadget::{
    block_product_check, embed_3x3, gadget_contract, matrix_a, mortality_form, scaled_reference, svd_embed,
    IntegerMatrix,
};
use tnl::lattice::{coclone_member, coclone_member_bruteforce, inv, pol};
use tnl::mortality::{search_zero_word, to_physicality_instance, working_block_max, SearchOutcome};
use tnl::order::all_orders;
use tnl::physicality::{chain_word, grandfather_network, is_physical, unproved_theorem_network, word_problem_unitary};
use tnl::sat::{check_tree_condition, count_models, Cnf};
use tnl::{norm_squared, Scalar, Tensor, TensorNetwork};

const GADGET_TOL: f64 = 1e-9;
const POSTSELECTION_TOL: f64 = 1e-12;
const WORD_PROBLEM_TOL: f64 = 1e-9;
const WORKING_BLOCK_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Check = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        // Written so that a NaN comparison fails the check.
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn loop_fixtures() -> Outcome {
    let g = grandfather_network().contract(None).map_err(|e| e.to_string())?;
    ensure!(g.scalar_value() == Some(Scalar::int(0)), "grandfather loop contracted to {:?}", g.scalar_value());
    let u = unproved_theorem_network();
    let t = u.contract(None).map_err(|e| e.to_string())?;
    let sup = support(&t).map_err(|e| e.to_string())?;
    ensure!(sup.tuple_strings() == ["00", "11"], "support {:?}", sup.tuple_strings());
    ensure!(t.nonzero_flat().iter().all(|&k| t.get_flat(k) == Scalar::int(1)), "amplitudes are not all 1");
    // Normalised: each amplitude 1/sqrt(2) exactly when |psi|^2 = 2.
    let n = norm_squared(&u).map_err(|e| e.to_string())?;
    ensure!(n == Scalar::int(2), "norm squared {n}");
    Ok("grandfather = 0, unproved = (|00> + |11>)/sqrt(2)".into())
}

fn bell_overlaps() -> Outcome {
    let bell = StandardTensor::Bell.tensor();
    let bra = Tensor::from_ints(&[("x0", 2), ("x1", 2)], &[0, 1, 0, 0]).unwrap();
    let net = TensorNetwork::from_wires(vec![("bell".to_string(), bell.clone()), ("bra".to_string(), bra)], &[] as &[&str])
        .map_err(|e| e.to_string())?;
    let overlap = net.contract(None).map_err(|e| e.to_string())?.scalar_value();
    ensure!(overlap == Some(Scalar::int(0)), "<01|bell> = {overlap:?}");
    let state = TensorNetwork::from_wires(vec![("bell".to_string(), bell)], &["x0", "x1"]).unwrap();
    let n = norm_squared(&state).map_err(|e| e.to_string())?;
    ensure!(n == Scalar::int(2), "|bell|^2 = {n}");
    Ok("<01|bell> = 0, |bell|^2 = 2".into())
}

fn gadget_reconstruction() -> Outcome {
    let mut rng = common::rng(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let m = common::random_nonzero_matrix(&mut rng, n, n, 9);
        let g = svd_embed(&m).map_err(|e| e.to_string())?;
        let err = gadget_contract(&g).unwrap().max_abs_diff(&scaled_reference(&m).unwrap()).unwrap();
        ensure!(err < GADGET_TOL, "error {err:e} on a {n}x{n} matrix");
        worst = worst.max(err);
    }
    let g = svd_embed(&embed_3x3(&matrix_a()).unwrap()).unwrap();
    for (x, y) in g.psi().iter().zip([0.4, 0.2, 0.0, 0.0]) {
        ensure!((x - y).abs() < POSTSELECTION_TOL, "postselection {:?}", g.psi());
    }
    Ok(format!("50 matrices, worst error {worst:.1e}; postselection (2,1,0,0)/5"))
}

fn block_embedding() -> Outcome {
    let mut rng = common::rng(103);
    for _ in 0..10 {
        let [p, q, r, s] = [0; 4].map(|_| rng.gen_range(-50..=50));
        let got = embed_3x3(&mortality_form(p, q, r, s)).unwrap();
        let want = IntegerMatrix::from_i64(4, 4, &[p, 0, 0, 0, 0, r, 0, 0, q, s, 1, 0, 0, 0, 0, 1]);
        ensure!(got == want, "pattern broken at p={p} q={q} r={r} s={s}");
    }
    let ms: Vec<IntegerMatrix> = (0..3).map(|_| common::random_matrix(&mut rng, 3, 3, 5)).collect();
    for _ in 0..20 {
        let word = common::random_word(&mut rng, ms.len(), 6);
        ensure!(block_product_check(&ms, &word).unwrap(), "block product differs for {word:?}");
    }
    Ok("10 block patterns, 20 block products".into())
}

fn model_counting() -> Outcome {
    let seven = count_models(&Cnf::new(3, vec![vec![1, 2, 3]]).unwrap()).map_err(|e| e.to_string())?;
    ensure!(seven == 7, "single clause has {seven} models");
    let mut rng = common::rng(105);
    for i in 0..200 {
        let cnf = common::random_cnf(&mut rng, 12, 20);
        let (got, want) = (count_models(&cnf).map_err(|e| e.to_string())?, common::brute_count(&cnf));
        ensure!(got == want, "formula {i}: counted {got}, enumeration {want}");
    }
    Ok("200 formulas match enumeration; single clause = 7".into())
}

fn unitary_physicality() -> Outcome {
    let mut rng = common::rng(107);
    for i in 0..100 {
        let lib = common::random_unitary_library(&mut rng);
        let w1 = common::random_word(&mut rng, lib.len(), 8);
        let v = is_physical(&chain_word(&lib, &w1).unwrap()).map_err(|e| e.to_string())?;
        ensure!(v.physical, "word {i} {w1:?} is unphysical");
        let w2 = if rng.gen_bool(0.5) {
            let mut w = w1.clone();
            let g = rng.gen_range(0..lib.len());
            w.push(g);
            w.push(g);
            w
        } else {
            common::random_word(&mut rng, lib.len(), 8)
        };
        let (a, b) = (common::direct_product(&lib, &w1), common::direct_product(&lib, &w2));
        let want = a.iter().zip(&b).all(|(x, y)| (x - y).norm() < WORD_PROBLEM_TOL);
        ensure!(word_problem_unitary(&lib, &w1, &w2).unwrap() == want, "word problem disagrees on {w1:?} vs {w2:?}");
    }
    Ok("100 unitary words physical; word problem matches matrix products".into())
}

fn mortality() -> Outcome {
    let mut rng = common::rng(109);
    let mut found = 0;
    for i in 0..30 {
        let max_len = rng.gen_range(1..=6);
        let inst = common::random_mortality_instance(&mut rng, max_len);
        let outcome = search_zero_word(&inst);
        match (common::enumerate_zero_word(&inst), &outcome) {
            (Some(w), SearchOutcome::Found(got)) => {
                ensure!(&w == got, "library {i}: search {got:?}, enumeration {w:?}");
                found += 1;
                let lib = to_physicality_instance(&inst).map_err(|e| e.to_string())?;
                let t = chain_word(&lib, got).unwrap().contract(None).map_err(|e| e.to_string())?;
                let block = working_block_max(&t, 3);
                ensure!(block < WORKING_BLOCK_TOL, "library {i}: working block {block:e}");
            }
            (None, o) if o.word().is_none() => {}
            (want, got) => return Err(format!("library {i}: search {got:?}, enumeration {want:?}")),
        }
    }
    Ok(format!("30 libraries agree with enumeration ({found} mortal)"))
}

fn galois_and_membership() -> Outcome {
    let mut rng = common::rng(111);
    for i in 0..50 {
        let s = common::random_relation_set(&mut rng, 3, 3);
        let p: Vec<BoolFunction> = pol(&s, 3).map_err(|e| e.to_string())?.into_iter().collect();
        let closure = inv(&p, 3).map_err(|e| e.to_string())?;
        ensure!(s.iter().all(|r| closure.contains(r)), "set {i} escapes its closure");
    }
    for i in 0..100 {
        let s = common::random_relation_set(&mut rng, 3, 2);
        let arity = rng.gen_range(1..=3);
        let r = common::random_relation(&mut rng, arity, 3);
        let brute = coclone_member_bruteforce(&r, &s).map_err(|e| e.to_string())?;
        ensure!(coclone_member(&r, &s) == brute, "query {i}: membership disagrees with brute force");
    }
    ensure!(coclone_member(&BoolRelation::equality(), &[BoolRelation::all_equal(3)]), "equality not built from all-equal");
    Ok("50 closures, 100 membership queries, equality from all-equal".into())
}

fn order_independence() -> Outcome {
    let mut rng = common::rng(113);
    let mut orders = 0;
    for i in 0..50 {
        let net = common::random_network(&mut rng, 6);
        let reference = net.contract(None).map_err(|e| e.to_string())?;
        for order in all_orders(&net) {
            ensure!(net.contract(Some(&order)).unwrap() == reference, "network {i} depends on order");
            orders += 1;
        }
    }
    Ok(format!("50 networks, {orders} orders"))
}

fn tree_soundness() -> Outcome {
    let mut rng = common::rng(115);
    let mut passing = 0;
    let mut tried = 0;
    while passing < 100 {
        tried += 1;
        ensure!(tried < 10_000, "generator produced only {passing} passing trees");
        let (net, parents) = common::random_tree(&mut rng, 6);
        if check_tree_condition(&common::tree(net.clone(), &parents)).map_err(|e| e.to_string())? {
            passing += 1;
            ensure!(!net.contract(None).unwrap().is_zero(), "a passing tree has empty support");
        }
    }
    Ok(format!("100 passing trees (of {tried}) have nonempty support"))
}

fn main() {
    let criteria: [Check; 10] = [
        ("loop fixtures", 1, loop_fixtures),
        ("bell overlaps", 1, bell_overlaps),
        ("gadget reconstruction", 10, gadget_reconstruction),
        ("3x3 block embedding", 1, block_embedding),
        ("model counting", 60, model_counting),
        ("unitary physicality", 10, unitary_physicality),
        ("mortality search", 120, mortality),
        ("polymorphisms and co-clones", 60, galois_and_membership),
        ("contraction order", 30, order_independence),
        ("tree condition", 30, tree_soundness),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(budget) => Err(format!("took {elapsed:.2?}, budget {budget} s")),
            o => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] criterion {}: {name}: {detail} ({elapsed:.2?})", i + 1);
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
