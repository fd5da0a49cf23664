//! Helpers shared by the integration tests: random inputs and independent
//! reference implementations.
#![allow(dead_code)]

pub mod checks;
pub mod schema;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use gpann::data::Dataset;
use gpann::grammar::{
    create_random_tree, mutate, subtree_crossover, GpTree, GrammarConfig, InitMethod, Node,
    NodeKind,
};
use gpann::network::Network;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(file)
}

pub fn random_grammar(rng: &mut ChaCha8Rng) -> GrammarConfig {
    let mut cfg = GrammarConfig::new(rng.random_range(1..=6), rng.random_range(1..=3));
    cfg.max_height = 6;
    cfg
}

/// Fresh trees of every height and method, plus mutants and crossover
/// children so that `Pop` also shows up before any neuron exists.
pub fn random_tree(cfg: &GrammarConfig, rng: &mut ChaCha8Rng) -> GpTree {
    let height = rng.random_range(2..=cfg.max_height);
    let method = if rng.random_bool(0.5) {
        InitMethod::Grow
    } else {
        InitMethod::Full
    };
    let mut t = create_random_tree(cfg, method, height, rng);
    match rng.random_range(0..3) {
        0 => {}
        1 => {
            for _ in 0..rng.random_range(1..4) {
                t = mutate(&t, cfg, rng);
            }
        }
        _ => {
            let other = create_random_tree(cfg, InitMethod::Grow, cfg.max_height, rng);
            t = subtree_crossover(&t, &other, cfg, rng).0;
        }
    }
    t
}

pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    inputs: usize,
    outputs: usize,
    rows: usize,
) -> Dataset {
    let x: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..inputs).map(|_| rng.random::<f64>()).collect())
        .collect();
    let y: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            if outputs == 1 {
                vec![f64::from(rng.random_range(0..2u8))]
            } else {
                let c = rng.random_range(0..outputs);
                (0..outputs).map(|k| f64::from(u8::from(k == c))).collect()
            }
        })
        .collect();
    Dataset::from_rows("random", &x, &y).unwrap()
}

/// Network built by walking the tree exactly as the construction procedure
/// reads: nodes `0..inputs` are the input neurons, created neurons follow in
/// creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct RefNet {
    pub inputs: usize,
    pub edges: Vec<BTreeMap<usize, f64>>,
    pub outputs: Vec<usize>,
    pub list: Vec<usize>,
}

struct Walker {
    inputs: usize,
    edges: Vec<BTreeMap<usize, f64>>,
    list: Vec<usize>,
    index: i64,
}

impl Walker {
    fn eval(&mut self, node: &Node) -> usize {
        match &node.kind {
            NodeKind::Input(k) => *k,
            NodeKind::Pop => {
                if self.list.is_empty() {
                    0
                } else {
                    let last = self.list.len() as i64;
                    let at = self.index.max(1).min(last);
                    self.list[(at - 1) as usize]
                }
            }
            NodeKind::Forward => {
                self.index += 1;
                self.eval(&node.children[0])
            }
            NodeKind::Neuron(n) => {
                let me = self.edges.len();
                self.edges.push(BTreeMap::new());
                for i in 0..*n {
                    let src = self.eval(&node.children[i]);
                    let w = match node.children[i + n].kind {
                        NodeKind::Constant(w) => w,
                        _ => panic!("weight slot holds a non-constant"),
                    };
                    *self.edges[me].entry(src).or_insert(0.0) += w;
                }
                let id = self.inputs + me;
                self.list.push(id);
                id
            }
            other => panic!("unexpected {other:?} below the root"),
        }
    }
}

pub fn reference_decode(root: &Node, inputs: usize) -> RefNet {
    let mut w = Walker {
        inputs,
        edges: Vec::new(),
        list: Vec::new(),
        index: 1,
    };
    let outputs = root.children.iter().map(|c| w.eval(c)).collect();
    RefNet {
        inputs,
        edges: w.edges,
        outputs,
        list: w.list,
    }
}

/// Edge maps of a decoded network, indexed like [`RefNet::edges`].
pub fn edge_maps(net: &Network) -> Vec<BTreeMap<usize, f64>> {
    net.neurons()
        .iter()
        .map(|n| n.incoming.iter().map(|&(s, w)| (s.0, w)).collect())
        .collect()
}

/// Three-colour depth-first search over the decoded digraph.
pub fn has_cycle(net: &Network) -> bool {
    let k = net.input_count();
    let preds: HashMap<usize, Vec<usize>> = net
        .neurons()
        .iter()
        .map(|n| (n.id.0, n.incoming.iter().map(|&(s, _)| s.0).collect()))
        .collect();
    let mut colour = vec![0u8; k + net.neurons().len()];
    fn visit(v: usize, preds: &HashMap<usize, Vec<usize>>, colour: &mut [u8]) -> bool {
        match colour[v] {
            1 => return true,
            2 => return false,
            _ => {}
        }
        colour[v] = 1;
        for &p in preds.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if visit(p, preds, colour) {
                return true;
            }
        }
        colour[v] = 2;
        false
    }
    (0..colour.len()).any(|v| visit(v, &preds, &mut colour))
}

/// Nodes reachable backwards from the outputs, by breadth-first search.
pub fn reachable_nodes(net: &Network) -> Vec<usize> {
    let mut seen = vec![false; net.input_count() + net.neurons().len()];
    let mut queue: std::collections::VecDeque<usize> =
        net.output_slots().iter().map(|s| s.0).collect();
    while let Some(v) = queue.pop_front() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if v >= net.input_count() {
            for &(s, _) in &net.neurons()[v - net.input_count()].incoming {
                queue.push_back(s.0);
            }
        }
    }
    (0..seen.len()).filter(|&v| seen[v]).collect()
}

pub fn reference_neuron_count(net: &Network) -> usize {
    reachable_nodes(net)
        .into_iter()
        .filter(|&v| v >= net.input_count())
        .count()
}

/// Memoised recursive forward pass that never looks at the stored order.
pub fn reference_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    fn value(v: usize, net: &Network, x: &[f64], memo: &mut HashMap<usize, f64>) -> f64 {
        if v < net.input_count() {
            return x[v];
        }
        if let Some(&y) = memo.get(&v) {
            return y;
        }
        let n = &net.neurons()[v - net.input_count()];
        let z: f64 = n
            .incoming
            .iter()
            .map(|&(s, w)| w * value(s.0, net, x, memo))
            .sum();
        let y = 1.0 / (1.0 + (-z).exp());
        memo.insert(v, y);
        y
    }
    let mut memo = HashMap::new();
    net.output_slots()
        .iter()
        .map(|s| value(s.0, net, x, &mut memo))
        .collect()
}

/// Mean over patterns and outputs of the squared error.
pub fn reference_mse(net: &Network, data: &Dataset) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..data.len() {
        let y = reference_forward(net, data.input(r));
        for (a, b) in y.iter().zip(data.target(r)) {
            total += (a - b).powi(2);
            count += 1;
        }
    }
    total / count as f64
}

/// The connection structure only, weights dropped.
pub fn shape(net: &Network) -> (Vec<Vec<usize>>, Vec<usize>) {
    let edges = net
        .neurons()
        .iter()
        .map(|n| {
            let mut s: Vec<usize> = n.incoming.iter().map(|&(s, _)| s.0).collect();
            s.sort_unstable();
            s
        })
        .collect();
    let outs = net.output_slots().iter().map(|s| s.0).collect();
    (edges, outs)
}
