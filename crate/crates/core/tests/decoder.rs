mod common;

use common::checks;
use common::*;
use gpann::decoder::decode;
use gpann::grammar::{GpTree, Node, NodeKind};
use gpann::network::NodeId;

fn tree(s: &str) -> GpTree {
    GpTree::new(s.parse().unwrap())
}

#[test]
fn decode_agrees_with_reference_walker_on_10k_trees() {
    let summary = checks::decoder_matches_reference(10_000, 11).unwrap();
    println!("{summary}");
}

// Output 1 is neuron "1" with children "2" and "3"; output 2 is a 2-Neuron
// reading Pop, then Forward(Pop).
const FIG3: &str = "(ANN (N2 (N2 IN0 IN1 0.1 0.2) (N2 IN2 IN3 0.3 0.4) 0.5 0.6) \
                    (N2 POP (FWD POP) 0.7 0.8))";

#[test]
fn figure_three_list_and_pop_targets() {
    let t = tree(FIG3);
    let r = reference_decode(&t.root, 4);
    // creation order: "1" = 4, "2" = 5, "3" = 6, the second output = 7
    assert_eq!(r.list[..3], [5, 6, 4]);
    let net = decode(&t, 4).unwrap();
    let second = &net.neurons()[3];
    assert_eq!(net.output_slots(), &[NodeId(4), NodeId(7)]);
    assert_eq!(second.incoming, vec![(NodeId(5), 0.7), (NodeId(6), 0.8)]);
    assert_eq!(net.neurons().len(), 4);
    assert_eq!(net.topology_stats().hidden_neurons, 2);
    assert_eq!(net.topology_stats().connections, 8);
}

#[test]
fn count_neurons_matches_graph_search() {
    let mut rng = rng(5);
    for _ in 0..2_000 {
        let cfg = random_grammar(&mut rng);
        let t = random_tree(&cfg, &mut rng);
        let net = decode(&t, cfg.num_inputs).unwrap();
        assert_eq!(net.count_neurons(), reference_neuron_count(&net));
        let features: Vec<usize> = reachable_nodes(&net)
            .into_iter()
            .filter(|&v| v < cfg.num_inputs)
            .collect();
        assert_eq!(net.used_features().into_iter().collect::<Vec<_>>(), features);
    }
}

fn neuron_nodes(n: &Node) -> usize {
    let mut count = 0;
    n.visit(&mut |m, _| {
        if matches!(m.kind, NodeKind::Neuron(_)) {
            count += 1;
        }
    });
    count
}

#[test]
fn list_holds_every_created_neuron_once_and_weights_are_conserved() {
    let mut rng = rng(8);
    for _ in 0..2_000 {
        let cfg = random_grammar(&mut rng);
        let t = random_tree(&cfg, &mut rng);
        let r = reference_decode(&t.root, cfg.num_inputs);
        assert_eq!(r.list.len(), neuron_nodes(&t.root));
        assert!(r.list.iter().all(|&v| v >= cfg.num_inputs));
        let mut sorted = r.list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), r.list.len());

        let net = decode(&t, cfg.num_inputs).unwrap();
        let edge_total: f64 = net
            .neurons()
            .iter()
            .flat_map(|n| n.incoming.iter().map(|&(_, w)| w))
            .sum();
        let weight_total: f64 = t.constants().iter().sum();
        assert!((edge_total - weight_total).abs() < 1e-9);
    }
}

#[test]
fn decode_is_pure() {
    let mut rng = rng(21);
    for _ in 0..200 {
        let cfg = random_grammar(&mut rng);
        let t = random_tree(&cfg, &mut rng);
        assert_eq!(decode(&t, cfg.num_inputs).unwrap(), decode(&t, cfg.num_inputs).unwrap());
    }
}
