//! Strongly typed GP genotype for feedforward networks.
//!
//! Every node carries one of three types: the network root (`Net`), a neuron
//! (`Neuron`) or a real-valued connection weight (`Real`). The operators here
//! only ever emit trees that satisfy the type table:
//!
//! | node          | type   | children                                   |
//! |---------------|--------|--------------------------------------------|
//! | `ANN`         | Net    | `num_outputs` × Neuron                     |
//! | `n-Neuron`    | Neuron | n × Neuron followed by n × Real            |
//! | `Input_n`     | Neuron | none                                       |
//! | constant      | Real   | none                                       |
//! | `Pop`         | Neuron | none                                       |
//! | `Forward`     | Neuron | 1 × Neuron                                 |

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeType {
    Net,
    Neuron,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Network root; one child per output.
    Ann,
    /// A neuron with the given number of inputs.
    Neuron(usize),
    /// The input neuron fed by variable `k` (0-based).
    Input(usize),
    Constant(f64),
    Pop,
    Forward,
}

impl NodeKind {
    pub fn node_type(&self) -> NodeType {
        match self {
            NodeKind::Ann => NodeType::Net,
            NodeKind::Constant(_) => NodeType::Real,
            NodeKind::Neuron(_) | NodeKind::Input(_) | NodeKind::Pop | NodeKind::Forward => {
                NodeType::Neuron
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub children: Vec<Node>,
}

impl Node {
    pub fn ann(outputs: Vec<Node>) -> Self {
        Node {
            kind: NodeKind::Ann,
            children: outputs,
        }
    }

    /// `n`-Neuron from its input subtrees and matching weights.
    ///
    /// Panics if the two lists differ in length or are empty.
    pub fn neuron(inputs: Vec<Node>, weights: Vec<f64>) -> Self {
        assert_eq!(inputs.len(), weights.len(), "one weight per input");
        assert!(!inputs.is_empty(), "a neuron needs at least one input");
        let n = inputs.len();
        let mut children = inputs;
        children.extend(weights.into_iter().map(Node::constant));
        Node {
            kind: NodeKind::Neuron(n),
            children,
        }
    }

    pub fn input(index: usize) -> Self {
        Node::leaf(NodeKind::Input(index))
    }

    pub fn constant(value: f64) -> Self {
        Node::leaf(NodeKind::Constant(value))
    }

    pub fn pop() -> Self {
        Node::leaf(NodeKind::Pop)
    }

    pub fn forward(child: Node) -> Self {
        Node {
            kind: NodeKind::Forward,
            children: vec![child],
        }
    }

    fn leaf(kind: NodeKind) -> Self {
        Node {
            kind,
            children: Vec::new(),
        }
    }

    pub fn node_type(&self) -> NodeType {
        self.kind.node_type()
    }

    /// Number of nodes in this subtree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    /// Height of this subtree; a leaf has height 1.
    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Node::height).max().unwrap_or(0)
    }

    /// Calls `f` on every node in pre-order with its depth (root depth 1).
    pub fn visit<F: FnMut(&Node, usize)>(&self, f: &mut F) {
        fn walk<F: FnMut(&Node, usize)>(node: &Node, depth: usize, f: &mut F) {
            f(node, depth);
            for c in &node.children {
                walk(c, depth + 1, f);
            }
        }
        walk(self, 1, f);
    }

    /// The node at pre-order position `idx` (0 is `self`).
    pub fn get(&self, mut idx: usize) -> Option<&Node> {
        if idx == 0 {
            return Some(self);
        }
        idx -= 1;
        for c in &self.children {
            let s = c.size();
            if idx < s {
                return c.get(idx);
            }
            idx -= s;
        }
        None
    }

    pub fn get_mut(&mut self, mut idx: usize) -> Option<&mut Node> {
        if idx == 0 {
            return Some(self);
        }
        idx -= 1;
        for c in &mut self.children {
            let s = c.size();
            if idx < s {
                return c.get_mut(idx);
            }
            idx -= s;
        }
        None
    }

    /// Pre-order positions and depths of all nodes of the given type.
    pub fn positions_of(&self, ty: NodeType) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut pos = 0;
        self.visit(&mut |n, depth| {
            if n.node_type() == ty {
                out.push((pos, depth));
            }
            pos += 1;
        });
        out
    }

    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(&mut |n, _| {
            if let NodeKind::Constant(v) = n.kind {
                out.push(v);
            }
        });
        out
    }

    pub fn constant_count(&self) -> usize {
        let mut count = 0;
        self.visit(&mut |n, _| {
            if matches!(n.kind, NodeKind::Constant(_)) {
                count += 1;
            }
        });
        count
    }

    /// Overwrites constants in pre-order; returns how many values were used.
    fn set_constants(&mut self, values: &[f64]) -> usize {
        let mut used = 0;
        if let NodeKind::Constant(v) = &mut self.kind {
            *v = values[0];
            return 1;
        }
        for c in &mut self.children {
            used += c.set_constants(&values[used..]);
        }
        used
    }

    fn write_sexpr(&self, out: &mut String) {
        let head = match self.kind {
            NodeKind::Ann => "ANN".to_owned(),
            NodeKind::Neuron(n) => format!("N{n}"),
            NodeKind::Input(k) => format!("IN{k}"),
            NodeKind::Constant(v) => format!("{v:?}"),
            NodeKind::Pop => "POP".to_owned(),
            NodeKind::Forward => "FWD".to_owned(),
        };
        if self.children.is_empty() {
            out.push_str(&head);
        } else {
            out.push('(');
            out.push_str(&head);
            for c in &self.children {
                out.push(' ');
                c.write_sexpr(out);
            }
            out.push(')');
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_sexpr(&mut s);
        f.write_str(&s)
    }
}

impl FromStr for Node {
    type Err = Error;

    /// Parses the s-expression form produced by `Display`, e.g.
    /// `(ANN (N2 IN0 POP 0.5 -1.0) IN3)`.
    fn from_str(s: &str) -> Result<Self> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut pos = 0;
        let node = parse_node(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::InvalidTree(format!("trailing input at token {pos}")));
        }
        Ok(node)
    }
}

fn parse_head(tok: &str) -> Result<NodeKind> {
    let bad = || Error::InvalidTree(format!("unknown token `{tok}`"));
    Ok(match tok {
        "ANN" => NodeKind::Ann,
        "POP" => NodeKind::Pop,
        "FWD" => NodeKind::Forward,
        _ if tok.starts_with("IN") => NodeKind::Input(tok[2..].parse().map_err(|_| bad())?),
        _ if tok.starts_with('N') => NodeKind::Neuron(tok[1..].parse().map_err(|_| bad())?),
        _ => NodeKind::Constant(tok.parse().map_err(|_| bad())?),
    })
}

fn parse_node(tokens: &[&str], pos: &mut usize) -> Result<Node> {
    let tok = *tokens
        .get(*pos)
        .ok_or_else(|| Error::InvalidTree("unexpected end of input".into()))?;
    *pos += 1;
    if tok != "(" {
        return Ok(Node::leaf(parse_head(tok)?));
    }
    let head = tokens
        .get(*pos)
        .ok_or_else(|| Error::InvalidTree("unexpected end of input".into()))?;
    *pos += 1;
    let kind = parse_head(head)?;
    let mut children = Vec::new();
    loop {
        match tokens.get(*pos) {
            Some(&")") => {
                *pos += 1;
                break;
            }
            Some(_) => children.push(parse_node(tokens, pos)?),
            None => return Err(Error::InvalidTree("unbalanced parentheses".into())),
        }
    }
    Ok(Node { kind, children })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrammarConfig {
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub max_inputs_per_neuron: usize,
    pub max_height: usize,
    /// Constants are drawn from `[-constant_range, constant_range]`.
    pub constant_range: f64,
}

impl GrammarConfig {
    pub fn new(num_inputs: usize, num_outputs: usize) -> Self {
        GrammarConfig {
            num_inputs,
            num_outputs,
            max_inputs_per_neuron: 5,
            max_height: 6,
            constant_range: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_inputs < 1 {
            return Err(Error::config("num_inputs", "must be at least 1"));
        }
        if self.num_outputs < 1 {
            return Err(Error::config("num_outputs", "must be at least 1"));
        }
        if self.max_inputs_per_neuron < 1 {
            return Err(Error::config("max_inputs_per_neuron", "must be at least 1"));
        }
        if self.max_height < 2 {
            return Err(Error::config("max_height", "must be at least 2"));
        }
        if !(self.constant_range.is_finite() && self.constant_range > 0.0) {
            return Err(Error::config("constant_range", "must be finite and positive"));
        }
        Ok(())
    }

    fn random_constant<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(-self.constant_range..=self.constant_range)
    }
}

/// A genotype plus its cached evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct GpTree {
    pub root: Node,
    pub fitness: Option<f64>,
    pub validation_fitness: Option<f64>,
}

impl GpTree {
    pub fn new(root: Node) -> Self {
        GpTree {
            root,
            fitness: None,
            validation_fitness: None,
        }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn height(&self) -> usize {
        self.root.height()
    }

    pub fn constants(&self) -> Vec<f64> {
        self.root.constants()
    }

    /// Copy of the tree with its constants replaced in pre-order. Cached
    /// fitness values are cleared.
    ///
    /// Panics if `values.len()` differs from the constant count.
    pub fn with_constants(&self, values: &[f64]) -> GpTree {
        assert_eq!(values.len(), self.root.constant_count());
        let mut root = self.root.clone();
        root.set_constants(values);
        GpTree::new(root)
    }

    /// Key identifying repeated individuals: equal shape and constants equal
    /// to 12 decimals.
    pub fn structural_key(&self) -> String {
        let mut key = String::new();
        self.root.visit(&mut |n, _| {
            match n.kind {
                NodeKind::Ann => key.push('A'),
                NodeKind::Neuron(k) => {
                    let _ = write!(key, "N{k}");
                }
                NodeKind::Input(k) => {
                    let _ = write!(key, "I{k}");
                }
                // `+ 0.0` folds -0.0 into 0.0 after rounding.
                NodeKind::Constant(v) => {
                    let _ = write!(key, "C{:.12}", v + 0.0);
                }
                NodeKind::Pop => key.push('P'),
                NodeKind::Forward => key.push('F'),
            }
            key.push(' ');
        });
        key
    }

    /// Checks the tree against the type table and the configured bounds.
    pub fn check(&self, cfg: &GrammarConfig) -> Result<()> {
        let root = &self.root;
        if root.kind != NodeKind::Ann {
            return Err(Error::InvalidTree("root is not ANN".into()));
        }
        if root.children.len() != cfg.num_outputs {
            return Err(Error::InvalidTree(format!(
                "root has {} children, expected {}",
                root.children.len(),
                cfg.num_outputs
            )));
        }
        for c in &root.children {
            check_node(c, NodeType::Neuron, cfg)?;
        }
        let h = root.height();
        if h > cfg.max_height {
            return Err(Error::InvalidTree(format!(
                "height {h} exceeds {}",
                cfg.max_height
            )));
        }
        Ok(())
    }

    pub fn is_type_valid(&self, cfg: &GrammarConfig) -> bool {
        self.check(cfg).is_ok()
    }
}

fn check_node(node: &Node, expected: NodeType, cfg: &GrammarConfig) -> Result<()> {
    let fail = |msg: String| Err(Error::InvalidTree(msg));
    if node.node_type() != expected {
        return fail(format!("{:?} where {expected:?} is required", node.kind));
    }
    match node.kind {
        NodeKind::Ann => return fail("ANN below the root".into()),
        NodeKind::Neuron(n) => {
            if n == 0 || n > cfg.max_inputs_per_neuron {
                return fail(format!("neuron arity {n} out of range"));
            }
            if node.children.len() != 2 * n {
                return fail(format!("N{n} has {} children", node.children.len()));
            }
            for c in &node.children[..n] {
                check_node(c, NodeType::Neuron, cfg)?;
            }
            for c in &node.children[n..] {
                check_node(c, NodeType::Real, cfg)?;
            }
        }
        NodeKind::Forward => {
            if node.children.len() != 1 {
                return fail("FWD must have exactly one child".into());
            }
            check_node(&node.children[0], NodeType::Neuron, cfg)?;
        }
        NodeKind::Input(k) => {
            if k >= cfg.num_inputs {
                return fail(format!("input {k} out of range"));
            }
            if !node.children.is_empty() {
                return fail("input neuron with children".into());
            }
        }
        NodeKind::Constant(v) => {
            if !v.is_finite() || v.abs() > cfg.constant_range {
                return fail(format!("constant {v} out of range"));
            }
            if !node.children.is_empty() {
                return fail("constant with children".into());
            }
        }
        NodeKind::Pop => {
            if !node.children.is_empty() {
                return fail("POP with children".into());
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Grow,
    Full,
}

struct Builder<'a, R: Rng + ?Sized> {
    cfg: &'a GrammarConfig,
    method: InitMethod,
    rng: &'a mut R,
    /// Neurons completed so far in evaluation order; POP is only offered
    /// once this is non-zero (or when `pop_always` is set).
    completed: usize,
    pop_always: bool,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn pop_allowed(&self) -> bool {
        self.pop_always || self.completed > 0
    }

    /// A TNEURON subtree no taller than `room`.
    fn neuron_subtree(&mut self, room: usize) -> Node {
        debug_assert!(room >= 1);
        let function_count = self.cfg.max_inputs_per_neuron + 1;
        let terminal_count = self.cfg.num_inputs + usize::from(self.pop_allowed());
        let pick_function = room >= 2
            && match self.method {
                InitMethod::Full => true,
                InitMethod::Grow => {
                    self.rng.random_range(0..function_count + terminal_count) < function_count
                }
            };
        if pick_function {
            let pick = self.rng.random_range(0..function_count);
            if pick == self.cfg.max_inputs_per_neuron {
                Node::forward(self.neuron_subtree(room - 1))
            } else {
                let n = pick + 1;
                let inputs = (0..n).map(|_| self.neuron_subtree(room - 1)).collect();
                let weights = (0..n).map(|_| self.cfg.random_constant(self.rng)).collect();
                self.completed += 1;
                Node::neuron(inputs, weights)
            }
        } else {
            let pick = self.rng.random_range(0..terminal_count);
            if pick == self.cfg.num_inputs {
                Node::pop()
            } else {
                Node::input(pick)
            }
        }
    }

    fn subtree(&mut self, ty: NodeType, room: usize) -> Node {
        match ty {
            NodeType::Real => Node::constant(self.cfg.random_constant(self.rng)),
            NodeType::Neuron => self.neuron_subtree(room),
            NodeType::Net => unreachable!("the root is never regenerated"),
        }
    }
}

/// Builds one random tree of height at most `max_height`.
///
/// Panics if `max_height` is outside `2..=cfg.max_height`.
pub fn create_random_tree<R: Rng + ?Sized>(
    cfg: &GrammarConfig,
    method: InitMethod,
    max_height: usize,
    rng: &mut R,
) -> GpTree {
    assert!(
        (2..=cfg.max_height).contains(&max_height),
        "max_height {max_height} outside 2..={}",
        cfg.max_height
    );
    let mut builder = Builder {
        cfg,
        method,
        rng,
        completed: 0,
        pop_always: false,
    };
    let outputs = (0..cfg.num_outputs)
        .map(|_| builder.neuron_subtree(max_height - 1))
        .collect();
    GpTree::new(Node::ann(outputs))
}

/// Ramped half-and-half initialisation: heights cycle over
/// `2..=cfg.max_height`, alternating full and grow within each level.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    cfg: &GrammarConfig,
    population_size: usize,
    rng: &mut R,
) -> Vec<GpTree> {
    let levels = cfg.max_height - 1;
    (0..population_size)
        .map(|i| {
            let height = 2 + i % levels;
            let method = if (i / levels).is_multiple_of(2) {
                InitMethod::Full
            } else {
                InitMethod::Grow
            };
            create_random_tree(cfg, method, height, rng)
        })
        .collect()
}

const CROSSOVER_ATTEMPTS: usize = 10;

/// Type-preserving subtree crossover.
///
/// An offspring taller than `cfg.max_height` is replaced by a copy of its
/// parent (keeping the parent's cached fitness).
pub fn subtree_crossover<R: Rng + ?Sized>(
    a: &GpTree,
    b: &GpTree,
    cfg: &GrammarConfig,
    rng: &mut R,
) -> (GpTree, GpTree) {
    let a_size = a.size();
    if a_size < 2 {
        return (a.clone(), b.clone());
    }
    for _ in 0..CROSSOVER_ATTEMPTS {
        let pa = rng.random_range(1..a_size);
        let ty = a.root.get(pa).expect("index within tree").node_type();
        let candidates: Vec<usize> = b
            .root
            .positions_of(ty)
            .into_iter()
            .map(|(p, _)| p)
            .filter(|&p| p != 0)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let pb = candidates[rng.random_range(0..candidates.len())];

        let sub_a = a.root.get(pa).expect("index within tree").clone();
        let sub_b = b.root.get(pb).expect("index within tree").clone();
        let mut child_a = a.root.clone();
        let mut child_b = b.root.clone();
        *child_a.get_mut(pa).expect("index within tree") = sub_b;
        *child_b.get_mut(pb).expect("index within tree") = sub_a;

        let guard = |child: Node, parent: &GpTree| {
            if child.height() > cfg.max_height {
                parent.clone()
            } else {
                GpTree::new(child)
            }
        };
        return (guard(child_a, a), guard(child_b, b));
    }
    (a.clone(), b.clone())
}

/// Either regrows a random subtree or resamples one constant, with equal
/// probability. Trees without constants always get subtree mutation.
pub fn mutate<R: Rng + ?Sized>(t: &GpTree, cfg: &GrammarConfig, rng: &mut R) -> GpTree {
    let constants = t.root.positions_of(NodeType::Real);
    let mut root = t.root.clone();
    if rng.random_bool(0.5) && !constants.is_empty() {
        let (pos, _) = constants[rng.random_range(0..constants.len())];
        root.get_mut(pos).expect("index within tree").kind =
            NodeKind::Constant(cfg.random_constant(rng));
        return GpTree::new(root);
    }

    let size = root.size();
    if size < 2 {
        return t.clone();
    }
    let pos = rng.random_range(1..size);
    let mut depth = 0;
    let mut i = 0;
    root.visit(&mut |_, d| {
        if i == pos {
            depth = d;
        }
        i += 1;
    });
    let target = root.get_mut(pos).expect("index within tree");
    let ty = target.node_type();
    let room = cfg.max_height + 1 - depth;
    let mut builder = Builder {
        cfg,
        method: InitMethod::Grow,
        rng,
        completed: 0,
        pop_always: true,
    };
    *target = builder.subtree(ty, room);
    GpTree::new(root)
}

/// Tournament selection over cached fitness (missing fitness counts as
/// infinitely bad). Returns the index of the winner.
///
/// Ties go to the smaller tree, then to the earlier draw.
pub fn tournament_select<R: Rng + ?Sized>(
    population: &[GpTree],
    k: usize,
    rng: &mut R,
) -> Result<usize> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let k = k.max(1);
    let n = population.len();
    let draws: Vec<usize> = if k <= n {
        index::sample(rng, n, k).into_vec()
    } else {
        (0..k).map(|_| rng.random_range(0..n)).collect()
    };
    let key = |i: usize| {
        (
            population[i].fitness.unwrap_or(f64::INFINITY),
            population[i].size(),
        )
    };
    let mut best = draws[0];
    for &d in &draws[1..] {
        let (fb, sb) = key(best);
        let (fd, sd) = key(d);
        if fd < fb || (fd == fb && sd < sb) {
            best = d;
        }
    }
    Ok(best)
}

/// Indices of the best `count` trees by fitness, skipping repeats.
pub(crate) fn best_unique(population: &[GpTree], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&x, &y| {
        let fx = population[x].fitness.unwrap_or(f64::INFINITY);
        let fy = population[y].fitness.unwrap_or(f64::INFINITY);
        fx.total_cmp(&fy).then(x.cmp(&y))
    });
    let mut seen = HashSet::new();
    let mut picked = Vec::with_capacity(count);
    for i in order {
        if picked.len() == count {
            break;
        }
        if seen.insert(population[i].structural_key()) {
            picked.push(i);
        }
    }
    picked
}
