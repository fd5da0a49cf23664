//! Genotype to phenotype: runs a tree as a network-building program.
//!
//! Completed neurons are appended to a reuse list, which `Pop` reads at the
//! current (1-based) index and `Forward` advances. A neuron is appended only
//! after all of its children are evaluated, so `Pop` can never reach an
//! ancestor and the result is always acyclic. A neuron that receives the same
//! source twice gets one connection carrying the summed weight.

use crate::error::{Error, Result};
use crate::grammar::{GpTree, Node, NodeKind};
use crate::network::{Network, Neuron, NodeId};

struct DecodeState {
    input_count: usize,
    neurons: Vec<Neuron>,
    /// Positions in `neurons`, in completion order.
    list: Vec<usize>,
    index: usize,
}

impl DecodeState {
    fn neuron(&mut self, node: &Node) -> Result<NodeId> {
        match node.kind {
            NodeKind::Input(k) => {
                if k >= self.input_count {
                    return Err(Error::InvalidTree(format!("input {k} out of range")));
                }
                Ok(NodeId(k))
            }
            NodeKind::Pop => Ok(match self.list.len() {
                0 => NodeId(0),
                len => {
                    let pos = self.list[self.index.clamp(1, len) - 1];
                    self.neurons[pos].id
                }
            }),
            NodeKind::Forward => {
                self.index += 1;
                let child = node
                    .children
                    .first()
                    .ok_or_else(|| Error::InvalidTree("FWD without child".into()))?;
                self.neuron(child)
            }
            NodeKind::Neuron(n) => {
                if node.children.len() != 2 * n {
                    return Err(Error::InvalidTree(format!("N{n} has wrong arity")));
                }
                let pos = self.neurons.len();
                let id = NodeId(self.input_count + pos);
                self.neurons.push(Neuron {
                    id,
                    incoming: Vec::with_capacity(n),
                });
                for i in 0..n {
                    let source = self.neuron(&node.children[i])?;
                    let weight = match node.children[i + n].kind {
                        NodeKind::Constant(w) => w,
                        ref other => {
                            return Err(Error::InvalidTree(format!(
                                "{other:?} in a weight position"
                            )))
                        }
                    };
                    let incoming = &mut self.neurons[pos].incoming;
                    match incoming.iter_mut().find(|(s, _)| *s == source) {
                        Some((_, w)) => *w += weight,
                        None => incoming.push((source, weight)),
                    }
                }
                self.list.push(pos);
                Ok(id)
            }
            NodeKind::Ann | NodeKind::Constant(_) => Err(Error::InvalidTree(format!(
                "{:?} in a neuron position",
                node.kind
            ))),
        }
    }
}

/// Decodes `tree` into a network with `input_count` input neurons.
pub fn decode(tree: &GpTree, input_count: usize) -> Result<Network> {
    decode_node(&tree.root, input_count)
}

pub fn decode_node(root: &Node, input_count: usize) -> Result<Network> {
    if root.kind != NodeKind::Ann {
        return Err(Error::InvalidTree("root is not ANN".into()));
    }
    if input_count == 0 {
        return Err(Error::InvalidTree("network needs at least one input".into()));
    }
    let mut state = DecodeState {
        input_count,
        neurons: Vec::new(),
        list: Vec::new(),
        index: 1,
    };
    let outputs = root
        .children
        .iter()
        .map(|c| state.neuron(c))
        .collect::<Result<Vec<_>>>()?;
    if outputs.is_empty() {
        return Err(Error::InvalidTree("ANN without outputs".into()));
    }
    // Completion order is topological: sources always complete first.
    Ok(Network::from_ordered(
        input_count,
        state.neurons,
        outputs,
        state.list,
    ))
}
