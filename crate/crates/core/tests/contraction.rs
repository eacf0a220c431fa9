mod common;

use proptest::prelude::*;
use rand::Rng;

use tnl::boolean::{support, BoolRelation, StandardTensor};
use tnl::order::{all_orders, optimize_order};
use tnl::{conjugate, norm_squared, tensor_product, Backend, Leg, Scalar, Tensor, TensorNetwork};

fn random_tensor(rng: &mut impl Rng, prefix: &str, backend: Backend) -> Tensor {
    let rank = rng.gen_range(0..=3);
    let legs: Vec<Leg> = (0..rank).map(|i| Leg::new(format!("{prefix}{i}"), rng.gen_range(1..=3))).collect();
    Tensor::from_fn(legs, backend, |_| match backend {
        Backend::Exact => Scalar::int(rng.gen_range(-4..=4)),
        Backend::Float => Scalar::float(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    })
    .unwrap()
}

fn single(t: Tensor) -> TensorNetwork {
    let open: Vec<String> = t.labels().iter().map(|s| s.to_string()).collect();
    TensorNetwork::from_wires(vec![("t".to_string(), t)], &open).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_order_gives_the_same_tensor(seed in any::<u64>()) {
        let net = common::random_network(&mut common::rng(seed), 5);
        let reference = net.contract(None).unwrap();
        for order in all_orders(&net) {
            prop_assert_eq!(&net.contract(Some(&order)).unwrap(), &reference);
        }
        prop_assert_eq!(&net.contract(Some(&optimize_order(&net))).unwrap(), &reference);
    }

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = random_tensor(&mut rng, "a", Backend::Exact);
        let b = random_tensor(&mut rng, "b", Backend::Exact);
        let c = random_tensor(&mut rng, "c", Backend::Exact);
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn conjugation_is_an_involution(seed in any::<u64>()) {
        let t = random_tensor(&mut common::rng(seed), "x", Backend::Float);
        prop_assert_eq!(conjugate(&conjugate(&t)), t);
    }

    #[test]
    fn norm_is_the_sum_of_squared_moduli(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut t = random_tensor(&mut rng, "x", Backend::Exact);
        if rng.gen_bool(0.2) {
            t = Tensor::zeros(t.legs().to_vec(), Backend::Exact).unwrap();
        }
        let want: i64 = (0..t.len()).map(|k| t.get_flat(k).abs().powi(2).round() as i64).sum();
        let n = norm_squared(&single(t.clone())).unwrap();
        prop_assert_eq!(&n, &Scalar::int(want));
        prop_assert!(n.abs() >= 0.0);
        prop_assert_eq!(n.is_zero(), t.is_zero());
    }

    #[test]
    fn float_norm_matches_moduli(seed in any::<u64>()) {
        let t = random_tensor(&mut common::rng(seed), "x", Backend::Float);
        let want: f64 = (0..t.len()).map(|k| t.get_flat(k).abs().powi(2)).sum();
        let got = norm_squared(&single(t)).unwrap().to_complex();
        prop_assert!((got.re - want).abs() < 1e-9 * want.max(1.0));
        prop_assert_eq!(got.im, 0.0);
    }
}

#[test]
fn cnot_on_zero_ancilla_is_copy() {
    let net = TensorNetwork::from_wires(
        vec![
            ("cnot".to_string(), StandardTensor::Cnot.tensor().with_labels(&["a", "b", "c", "anc"]).unwrap()),
            ("zero".to_string(), StandardTensor::ZeroBra.tensor().with_labels(&["anc"]).unwrap()),
        ],
        &["a", "b", "c"],
    )
    .unwrap();
    let t = net.contract(None).unwrap();
    assert_eq!(t, StandardTensor::Copy3.tensor().with_labels(&["a", "b", "c"]).unwrap());
    assert_eq!(support(&t).unwrap(), BoolRelation::all_equal(3));
}

#[test]
fn copy_fans_a_basis_state_out() {
    // <x| on one leg of COPY leaves |xx> on the other two.
    for (bra, want) in [(StandardTensor::ZeroBra, [1, 0, 0, 0]), (StandardTensor::OneBra, [0, 0, 0, 1])] {
        let net = TensorNetwork::from_wires(
            vec![
                ("copy".to_string(), StandardTensor::Copy3.tensor().with_labels(&["in", "a", "b"]).unwrap()),
                ("v".to_string(), bra.tensor().with_labels(&["in"]).unwrap()),
            ],
            &["a", "b"],
        )
        .unwrap();
        assert_eq!(net.contract(None).unwrap(), Tensor::from_ints(&[("a", 2), ("b", 2)], &want).unwrap());
    }
}

#[test]
fn star_network_orders_agree() {
    // Hub with four spokes; each spoke has one open leg.
    let hub = Tensor::from_fn(
        (0..4).map(|i| Leg::new(format!("s{i}"), 2)).collect(),
        Backend::Exact,
        |idx| Scalar::int(idx.iter().sum::<usize>() as i64 - 1),
    )
    .unwrap();
    let mut nodes = vec![("hub".to_string(), hub)];
    for i in 0..4i64 {
        let (s, o) = (format!("s{i}"), format!("o{i}"));
        let t = Tensor::from_ints(&[(s.as_str(), 2), (o.as_str(), 2)], &[1, i, -i, 2]).unwrap();
        nodes.push((format!("spoke{i}"), t));
    }
    let net = TensorNetwork::from_wires(nodes, &["o0", "o1", "o2", "o3"]).unwrap();
    let orders = all_orders(&net);
    assert!(orders.len() > 1);
    let reference = net.contract(None).unwrap();
    for order in &orders {
        assert_eq!(net.contract(Some(order)).unwrap(), reference);
    }
}
