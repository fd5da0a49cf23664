//! Feedforward networks over an arbitrary acyclic digraph.
//!
//! Node ids are shared between inputs and neurons: ids `0..input_count` are
//! the input neurons, and neuron `i` has id `input_count + i`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NodeId,
    pub incoming: Vec<(NodeId, f64)>,
}

#[derive(Debug, Clone)]
pub struct Network {
    input_count: usize,
    neurons: Vec<Neuron>,
    output_slots: Vec<NodeId>,
    /// Indices into `neurons`, every neuron after all of its sources.
    topo_order: Vec<usize>,
}

/// Equality is on the graph; the cached evaluation order is ignored.
impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.input_count == other.input_count
            && self.neurons == other.neurons
            && self.output_slots == other.output_slots
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    input_count: usize,
    neurons: Vec<Neuron>,
    output_slots: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    pub accuracy: f64,
    pub pattern_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub hidden_neurons: usize,
    pub connections: usize,
    pub used_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

/// Counts evaluations of the training pattern file. Clones share the count.
#[derive(Debug, Clone, Default)]
pub struct EffortCounter(Arc<AtomicU64>);

impl EffortCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Network {
    /// Builds and validates a network; computes a topological order.
    pub fn new(input_count: usize, neurons: Vec<Neuron>, output_slots: Vec<NodeId>) -> Result<Self> {
        let total = input_count + neurons.len();
        for (i, n) in neurons.iter().enumerate() {
            if n.id.0 != input_count + i {
                return Err(Error::InvalidNetwork(format!(
                    "neuron at position {i} has id {}, expected {}",
                    n.id.0,
                    input_count + i
                )));
            }
            for &(src, w) in &n.incoming {
                if src.0 >= total {
                    return Err(Error::InvalidNetwork(format!(
                        "neuron {} reads unknown node {}",
                        n.id.0, src.0
                    )));
                }
                if !w.is_finite() {
                    return Err(Error::InvalidNetwork(format!(
                        "neuron {} has a non-finite weight",
                        n.id.0
                    )));
                }
            }
        }
        if output_slots.is_empty() {
            return Err(Error::InvalidNetwork("no output slots".into()));
        }
        if let Some(bad) = output_slots.iter().find(|s| s.0 >= total) {
            return Err(Error::InvalidNetwork(format!(
                "output slot refers to unknown node {}",
                bad.0
            )));
        }
        let topo_order = kahn_order(input_count, &neurons)?;
        Ok(Network {
            input_count,
            neurons,
            output_slots,
            topo_order,
        })
    }

    /// Trusted constructor for callers that already know a valid order.
    pub(crate) fn from_ordered(
        input_count: usize,
        neurons: Vec<Neuron>,
        output_slots: Vec<NodeId>,
        topo_order: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(topo_order.len(), neurons.len());
        Network {
            input_count,
            neurons,
            output_slots,
            topo_order,
        }
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn output_count(&self) -> usize {
        self.output_slots.len()
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn output_slots(&self) -> &[NodeId] {
        &self.output_slots
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn is_input(&self, id: NodeId) -> bool {
        id.0 < self.input_count
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_with_order(input, &self.topo_order)
    }

    /// Forward pass using a caller-supplied neuron order, which must be
    /// topological.
    pub fn forward_with_order(&self, input: &[f64], order: &[usize]) -> Result<Vec<f64>> {
        if input.len() != self.input_count {
            return Err(Error::ShapeMismatch {
                expected: self.input_count,
                found: input.len(),
            });
        }
        let mut values = vec![0.0; self.input_count + self.neurons.len()];
        let mut out = vec![0.0; self.output_slots.len()];
        self.activate(input, order, &mut values, &mut out);
        Ok(out)
    }

    fn activate(&self, input: &[f64], order: &[usize], values: &mut [f64], out: &mut [f64]) {
        values[..self.input_count].copy_from_slice(input);
        for &i in order {
            let n = &self.neurons[i];
            let z: f64 = n.incoming.iter().map(|&(s, w)| w * values[s.0]).sum();
            values[n.id.0] = sigmoid(z);
        }
        for (o, slot) in out.iter_mut().zip(&self.output_slots) {
            *o = values[slot.0];
        }
    }

    /// MSE and accuracy over every pattern of `data`.
    ///
    /// Accuracy thresholds a single output at 0.5 and otherwise compares the
    /// argmax of outputs and targets.
    pub fn evaluate(&self, data: &Dataset) -> Result<EvalMetrics> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.input_width() != self.input_count {
            return Err(Error::ShapeMismatch {
                expected: self.input_count,
                found: data.input_width(),
            });
        }
        if data.target_width() != self.output_slots.len() {
            return Err(Error::ShapeMismatch {
                expected: self.output_slots.len(),
                found: data.target_width(),
            });
        }
        // Neurons that feed no output cannot change the result.
        let live = self.reachable();
        let order: Vec<usize> = self
            .topo_order
            .iter()
            .copied()
            .filter(|&i| live[self.input_count + i])
            .collect();
        let mut values = vec![0.0; self.input_count + self.neurons.len()];
        let mut out = vec![0.0; self.output_slots.len()];
        let mut sq_err = 0.0;
        let mut correct = 0usize;
        for p in 0..data.len() {
            self.activate(data.input(p), &order, &mut values, &mut out);
            let target = data.target(p);
            sq_err += out
                .iter()
                .zip(target)
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>();
            if is_correct(&out, target) {
                correct += 1;
            }
        }
        let n = data.len();
        Ok(EvalMetrics {
            mse: sq_err / (n * out.len()) as f64,
            accuracy: correct as f64 / n as f64,
            pattern_count: n,
        })
    }

    /// Like [`Network::evaluate`], and counts one pattern-file evaluation.
    pub fn evaluate_counted(&self, data: &Dataset, effort: &EffortCounter) -> Result<EvalMetrics> {
        let m = self.evaluate(data)?;
        effort.increment();
        Ok(m)
    }

    /// Marks every node reachable backwards from an output slot.
    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.input_count + self.neurons.len()];
        let mut stack: Vec<NodeId> = self.output_slots.clone();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id.0], true) {
                continue;
            }
            if id.0 >= self.input_count {
                stack.extend(
                    self.neurons[id.0 - self.input_count]
                        .incoming
                        .iter()
                        .map(|&(s, _)| s),
                );
            }
        }
        seen
    }

    /// Neurons (not inputs) that feed some output.
    pub fn count_neurons(&self) -> usize {
        self.reachable()[self.input_count..]
            .iter()
            .filter(|&&r| r)
            .count()
    }

    /// Input variables that feed some output.
    pub fn used_features(&self) -> BTreeSet<usize> {
        self.reachable()[..self.input_count]
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| r.then_some(i))
            .collect()
    }

    pub fn topology_stats(&self) -> TopologyStats {
        let reach = self.reachable();
        let reachable_neurons = reach[self.input_count..].iter().filter(|&&r| r).count();
        let output_neurons: BTreeSet<NodeId> = self
            .output_slots
            .iter()
            .copied()
            .filter(|id| !self.is_input(*id))
            .collect();
        let connections = self
            .neurons
            .iter()
            .filter(|n| reach[n.id.0])
            .map(|n| n.incoming.len())
            .sum();
        TopologyStats {
            hidden_neurons: reachable_neurons - output_neurons.len(),
            connections,
            used_features: reach[..self.input_count].iter().filter(|&&r| r).count(),
        }
    }

    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Dot => self.to_dot(),
            ExportFormat::Json => self.to_json(),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph network {\n  rankdir=LR;\n");
        for i in 0..self.input_count {
            let _ = writeln!(s, "  n{i} [shape=box, label=\"IN_{i}\"];");
        }
        for n in &self.neurons {
            let _ = writeln!(s, "  n{0} [shape=circle, label=\"{0}\"];", n.id.0);
        }
        for n in &self.neurons {
            for &(src, w) in &n.incoming {
                let _ = writeln!(s, "  n{} -> n{} [label=\"{w:.6}\"];", src.0, n.id.0);
            }
        }
        for (k, slot) in self.output_slots.iter().enumerate() {
            let _ = writeln!(s, "  out{k} [shape=point];");
            let _ = writeln!(s, "  n{} -> out{k};", slot.0);
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            input_count: self.input_count,
            neurons: self.neurons.clone(),
            output_slots: self.output_slots.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        Network::new(doc.input_count, doc.neurons, doc.output_slots)
    }
}

impl Serialize for Network {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        NetworkDoc {
            input_count: self.input_count,
            neurons: self.neurons.clone(),
            output_slots: self.output_slots.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = NetworkDoc::deserialize(deserializer)?;
        Network::new(doc.input_count, doc.neurons, doc.output_slots)
            .map_err(serde::de::Error::custom)
    }
}

fn is_correct(out: &[f64], target: &[f64]) -> bool {
    if out.len() == 1 {
        (out[0] >= 0.5) == (target[0] >= 0.5)
    } else {
        argmax(out) == argmax(target)
    }
}

/// First index of the maximum value.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn kahn_order(input_count: usize, neurons: &[Neuron]) -> Result<Vec<usize>> {
    let n = neurons.len();
    let mut indegree = vec![0usize; n];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, neuron) in neurons.iter().enumerate() {
        for &(src, _) in &neuron.incoming {
            if src.0 >= input_count {
                indegree[i] += 1;
                dependents[src.0 - input_count].push(i);
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &d in dependents[i].iter().rev() {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(d);
            }
        }
    }
    if order.len() != n {
        return Err(Error::InvalidNetwork("connection graph has a cycle".into()));
    }
    Ok(order)
}
