mod common;

use rand::Rng;

use tnl::physicality::{
    chain_word, gates, grandfather_network, is_physical, unproved_theorem_network, word_problem_unitary,
};
use tnl::{Scalar, Tensor, TensorNetwork};

#[test]
fn loop_fixtures() {
    assert_eq!(grandfather_network().contract(None).unwrap().scalar_value(), Some(Scalar::int(0)));
    let t = unproved_theorem_network().contract(None).unwrap();
    assert_eq!(t.nonzero_flat(), vec![0, 3]);
    assert_eq!(is_physical(&unproved_theorem_network()).unwrap().norm_squared, Scalar::int(2));
}

#[test]
fn norm_vanishes_exactly_when_the_state_does() {
    let mut rng = common::rng(5);
    let (mut zero, mut nonzero) = (0, 0);
    for _ in 0..300 {
        let net = common::random_boolean_network(&mut rng, 5);
        let state_zero = net.contract(None).unwrap().is_zero();
        assert_eq!(is_physical(&net).unwrap().physical, !state_zero);
        if state_zero { zero += 1 } else { nonzero += 1 }
    }
    assert!(zero > 0 && nonzero > 0, "{zero} zero, {nonzero} nonzero");
}

#[test]
fn unitary_words_are_physical() {
    let mut rng = common::rng(9);
    for _ in 0..100 {
        let lib = common::random_unitary_library(&mut rng);
        let word = common::random_word(&mut rng, lib.len(), 8);
        assert!(is_physical(&chain_word(&lib, &word).unwrap()).unwrap().physical);
    }
}

#[test]
fn word_problem_matches_direct_products() {
    let mut rng = common::rng(13);
    let mut equal = 0;
    for _ in 0..100 {
        let lib = common::random_unitary_library(&mut rng);
        let w1 = common::random_word(&mut rng, lib.len(), 6);
        let w2 = match rng.gen_range(0..3) {
            // Every gate in the pool squares to the identity.
            0 => {
                let mut w = w1.clone();
                let g = rng.gen_range(0..lib.len());
                let at = rng.gen_range(0..=w.len());
                w.splice(at..at, [g, g]);
                w
            }
            _ => common::random_word(&mut rng, lib.len(), 6),
        };
        let (a, b) = (common::direct_product(&lib, &w1), common::direct_product(&lib, &w2));
        let want = a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-9);
        assert_eq!(word_problem_unitary(&lib, &w1, &w2).unwrap(), want, "{w1:?} vs {w2:?}");
        equal += want as usize;
    }
    assert!(equal > 10);
}

#[test]
fn dropping_the_postselection_conflict_restores_the_norm() {
    // <0| X |0> = 0 but <0| I |0> = 1.
    let bra = |bit: usize| {
        let v = if bit == 0 { [1, 0] } else { [0, 1] };
        Tensor::from_ints(&[("x0", 2)], &v).unwrap()
    };
    for (gate, want) in [(gates::pauli_x(), false), (gates::identity(1), true)] {
        let op = gate.operator().clone().with_labels(&["a", "b"]).unwrap();
        let nodes = vec![
            ("g".to_string(), op),
            ("l".to_string(), bra(0).with_labels(&["a"]).unwrap()),
            ("r".to_string(), bra(0).with_labels(&["b"]).unwrap()),
        ];
        let net = TensorNetwork::from_wires(nodes, &[] as &[&str]).unwrap();
        assert_eq!(is_physical(&net).unwrap().physical, want);
    }
}
