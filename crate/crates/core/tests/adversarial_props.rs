//! Properties of the lower-bound constructions: adjacency of flipped pairs,
//! transformation length and the user-level phase structure.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use continual_dp::adversarial::{
    adjacent_pair, flip, gen_event_level, gen_user_level, spread_of, transformation, GenParams, SpreadSpec, Target,
};
use continual_dp::diff::Adjacency;
use continual_dp::funcs::GraphFunction;
use continual_dp::graph::{check_adjacency, AdjacencyKind, DifferingElement, Graph, Update, Weight};

fn random_graph(rng: &mut ChaCha8Rng, n: u64, w: Weight) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j, rng.gen_range(1..=w)));
            }
        }
    }
    Graph::from_parts(w, 0..n, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn transformation_length_is_symmetric_difference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..8);
        let g1 = random_graph(&mut rng, n, 1);
        let g2 = random_graph(&mut rng, n, 1);
        let steps = transformation(&g1, &g2).unwrap();
        let sym = g1.edges().keys().filter(|k| g2.weight(k).is_none()).count()
            + g2.edges().keys().filter(|k| g1.weight(k).is_none()).count();
        prop_assert_eq!(steps.len(), sym);
        let mut g = g1.clone();
        for (i, u) in steps.iter().enumerate() {
            prop_assert_eq!(u.e_del.len() + u.e_ins.len(), 1);
            u.apply_to(&mut g, i + 1).unwrap();
        }
        prop_assert_eq!(g, g2);
    }

    #[test]
    fn flipped_pairs_are_adjacent_for_every_target(
        bits in prop::collection::vec(any::<bool>(), 1..9),
        flip_pick in any::<prop::sample::Index>(),
        target_pick in 0usize..16,
        w in 1u32..4,
    ) {
        let target = Target::ALL[target_pick];
        let t = flip_pick.index(bits.len()) + 1;
        let p = GenParams { weight: w, ..GenParams::default() };
        let pair = adjacent_pair(target, &bits, t, &p).unwrap();
        let kind = match target.adjacency() {
            Adjacency::Edge => AdjacencyKind::EdgeEvent,
            Adjacency::Node => AdjacencyKind::NodeEvent,
        };
        let w_ab = check_adjacency(&pair.a.sequence, &pair.b.sequence, kind).unwrap();
        prop_assert!(w_ab.is_some());
        prop_assert_eq!(w_ab.unwrap().step, t);
        prop_assert_eq!(pair.b.sigma, flip(&bits, t));
        // Before the flipped bit both sequences encode the same values.
        for s in 0..t - 1 {
            prop_assert_eq!(pair.a.expected[s], pair.b.expected[s]);
        }
    }

    #[test]
    fn user_level_phases(
        bits_a in prop::collection::vec(any::<bool>(), 1..6),
        seed in any::<u64>(),
        spec_pick in 0usize..4,
    ) {
        let spec = spreads().swap_remove(spec_pick);
        let ell = spec.ell;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits_b: Vec<bool> = bits_a.iter().map(|b| if rng.gen_bool(0.4) { !b } else { *b }).collect();
        let horizon = 2 * ell * bits_a.len();
        let graphs = |bits: &[bool]| {
            let seq = gen_user_level(&spec, bits, horizon).unwrap();
            let mut gs = vec![seq.initial.clone()];
            gs.extend(seq.materialize().unwrap());
            gs
        };
        let (ga, gb) = (graphs(&bits_a), graphs(&bits_b));
        for i in (0..=horizon).step_by(2 * ell) {
            prop_assert_eq!(&ga[i], &gb[i]);
        }
        for (i, (x, y)) in bits_a.iter().zip(&bits_b).enumerate() {
            let mid = (2 * i + 1) * ell;
            let fa = spec.function.eval_scalar(&ga[mid]).unwrap();
            let fb = spec.function.eval_scalar(&gb[mid]).unwrap();
            if x != y {
                prop_assert!((fa - fb).abs() >= spec.gap);
            } else {
                prop_assert_eq!(fa, fb);
            }
        }
    }
}

fn spreads() -> Vec<SpreadSpec> {
    vec![
        spread_of(&GraphFunction::MaxCardinalityMatching, 6, 1).unwrap(),
        spread_of(&GraphFunction::MaxWeightMatching, 6, 3).unwrap(),
        spread_of(&GraphFunction::MstWeight, 4, 3).unwrap(),
        spread_of(&GraphFunction::EdgeCount, 5, 1).unwrap(),
    ]
}

#[test]
fn transformation_examples() {
    let path = Graph::from_parts(1, 0..3, [(0, 1, 1), (1, 2, 1)]).unwrap();
    let star = Graph::from_parts(1, 0..3, [(0, 1, 1), (0, 2, 1)]).unwrap();
    let steps = transformation(&path, &star).unwrap();
    assert_eq!(steps, vec![Update::delete_edge(1, 2), Update::insert_edge(0, 2, 1)]);
    assert!(transformation(&path, &path).unwrap().is_empty());
    let empty = Graph::from_parts(1, 0..4, []).unwrap();
    let k4 = Graph::from_parts(1, 0..4, [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)]).unwrap();
    let steps = transformation(&empty, &k4).unwrap();
    assert_eq!(steps.len(), 6);
    assert!(steps.iter().all(|u| u.e_ins.len() == 1 && !u.has_deletions()));
}

#[test]
fn spread_examples() {
    let m = spread_of(&GraphFunction::MaxCardinalityMatching, 6, 1).unwrap();
    assert_eq!((m.ell, m.gap), (4, 2.0));
    assert_eq!(GraphFunction::MaxCardinalityMatching.eval_scalar(&m.g1).unwrap(), 3.0);
    assert_eq!(GraphFunction::MaxCardinalityMatching.eval_scalar(&m.g2).unwrap(), 1.0);
    let t = spread_of(&GraphFunction::MstWeight, 4, 3).unwrap();
    // Weight-3 star plus unit edge (1 + 3 + 3) against a unit tree (3).
    assert_eq!((t.ell, t.gap), (4, 4.0));
}

#[test]
fn all_zero_bits_transform_first() {
    let spec = spread_of(&GraphFunction::MaxCardinalityMatching, 6, 1).unwrap();
    let ell = spec.ell;
    let seq = gen_user_level(&spec, &[false, false], 4 * ell).unwrap();
    let graphs = seq.materialize().unwrap();
    assert_eq!(graphs[ell - 1], spec.g2);
    assert_eq!(graphs[2 * ell - 1], spec.g2);
    assert_eq!(graphs[3 * ell - 1], spec.g1);
    assert_eq!(graphs[4 * ell - 1], spec.g1);
}

#[test]
fn mst_edge_pair_gap_is_weight() {
    let p = GenParams {
        weight: 5,
        ..GenParams::default()
    };
    let pair = adjacent_pair(Target::MstEdge, &[true, false], 1, &p).unwrap();
    for (a, b) in pair.a.expected.iter().zip(&pair.b.expected) {
        assert_eq!((a - b).abs(), 5.0);
    }
}

#[test]
fn matching_node_pair_differs_in_one_node() {
    let pair = adjacent_pair(Target::MatchingNode, &[true, true, false], 2, &GenParams::default()).unwrap();
    let w = check_adjacency(&pair.a.sequence, &pair.b.sequence, AdjacencyKind::NodeEvent)
        .unwrap()
        .unwrap();
    assert!(matches!(w.element, DifferingElement::Node(_)));
}

#[test]
fn counting_pair_differs_in_one_edge() {
    let pair = adjacent_pair(Target::EdgesEdge, &[false, true, true], 1, &GenParams::default()).unwrap();
    let w = check_adjacency(&pair.a.sequence, &pair.b.sequence, AdjacencyKind::EdgeEvent)
        .unwrap()
        .unwrap();
    assert!(matches!(w.element, DifferingElement::Edge(_)));
    assert_eq!(w.step, 1);
}

#[test]
fn triangle_reduction_example() {
    let g = gen_event_level(Target::TrianglesEdge, &[false, true, true], &GenParams::default()).unwrap();
    let values: Vec<f64> = g
        .sequence
        .materialize()
        .unwrap()
        .iter()
        .map(|x| GraphFunction::TriangleCount.eval_scalar(x).unwrap())
        .collect();
    assert_eq!(values, vec![0.0, 1.0, 2.0]);
    assert_eq!(g.expected, values);
}

#[test]
fn forest_mst_breaks_edge_bound() {
    // Two unit paths joined by e* of weight W in the larger sequence; later
    // unit edges connect the halves in both sequences.
    let w = 3;
    let g0 = Graph::from_parts(w, 0..4, [(0, 1, 1), (2, 3, 1)]).unwrap();
    let larger = continual_dp::graph::GraphSequence::new(
        g0.clone(),
        vec![Update::insert_edge(1, 2, w), Update::insert_edge(0, 3, 1)],
    );
    let smaller =
        continual_dp::graph::GraphSequence::new(g0, vec![Update::empty(), Update::insert_edge(0, 3, 1)]);
    assert!(check_adjacency(&larger, &smaller, AdjacencyKind::EdgeEvent)
        .unwrap()
        .is_some());
    let s = continual_dp::oracle::pair_sensitivity(&GraphFunction::MstWeight, &larger, &smaller).unwrap();
    assert_eq!(s, f64::from(2 * w));
    assert!(s > f64::from(2 * w - 2));
}
