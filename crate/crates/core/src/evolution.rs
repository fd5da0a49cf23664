//! The outer GP loop.
//!
//! 1. create and evaluate a ramped half-and-half population;
//! 2. optimize the constants of the best unique individuals;
//! 3. run `generations_between_optimizations` generational GP steps;
//! 4. repeat from 2 until the effort budget is spent.
//!
//! Fitness is `MSE + N * P` with `N` the number of neurons that feed an
//! output. Effort counts evaluations of the training pattern file, GA
//! evaluations included.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split, Dataset, FoldScore, SplitFractions};
use crate::decoder::decode_node;
use crate::error::{Error, Result};
use crate::grammar::{
    mutate, ramped_half_and_half, subtree_crossover, tournament_select, GpTree, GrammarConfig,
    Node,
};
use crate::network::{EffortCounter, EvalMetrics, Network, TopologyStats};
use crate::weight_opt::{optimize_elite, GaConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Probability that an offspring is mutated.
    pub mutation_prob: f64,
    pub tournament_size: usize,
    /// Fitness surcharge per neuron.
    pub penalty: f64,
    pub max_inputs_per_neuron: usize,
    pub max_height: usize,
    pub ga: GaConfig,
    /// GP generations between two constant-optimization phases.
    pub generations_between_optimizations: usize,
    /// Percentage of the population handed to the constant optimizer.
    pub optimize_percent: f64,
    /// Maximum number of training-set evaluations.
    pub effort_budget: u64,
    /// Share of the training data held out for validation-based selection.
    pub validation_fraction: f64,
    /// Stratify splits by class.
    pub stratified: bool,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 1000,
            crossover_rate: 0.95,
            mutation_prob: 0.04,
            tournament_size: 2,
            penalty: 0.00001,
            max_inputs_per_neuron: 5,
            max_height: 6,
            ga: GaConfig::default(),
            generations_between_optimizations: 80,
            optimize_percent: 10.0,
            effort_budget: 500_000,
            validation_fraction: 0.0,
            stratified: true,
            seed: 0,
        }
    }
}

fn fraction(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} is not in [0, 1]")))
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("population_size", "must be at least 2"));
        }
        fraction("crossover_rate", self.crossover_rate)?;
        fraction("mutation_prob", self.mutation_prob)?;
        if self.tournament_size < 1 {
            return Err(Error::config("tournament_size", "must be at least 1"));
        }
        if !(self.penalty.is_finite() && self.penalty >= 0.0) {
            return Err(Error::config("penalty", "must be finite and non-negative"));
        }
        if self.max_inputs_per_neuron < 1 {
            return Err(Error::config("max_inputs_per_neuron", "must be at least 1"));
        }
        if self.max_height < 2 {
            return Err(Error::config("max_height", "must be at least 2"));
        }
        if !(0.0..=100.0).contains(&self.optimize_percent) {
            return Err(Error::config("optimize_percent", "must lie in [0, 100]"));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(Error::config("validation_fraction", "must lie in [0, 0.5]"));
        }
        if self.generations_between_optimizations < 1 {
            return Err(Error::config(
                "generations_between_optimizations",
                "must be at least 1",
            ));
        }
        self.ga.validate()?;
        if self.effort_budget < self.population_size as u64 {
            return Err(Error::BudgetTooSmall {
                budget: self.effort_budget,
                population: self.population_size,
            });
        }
        Ok(())
    }

    pub fn grammar(&self, num_inputs: usize, num_outputs: usize) -> GrammarConfig {
        GrammarConfig {
            num_inputs,
            num_outputs,
            max_inputs_per_neuron: self.max_inputs_per_neuron,
            max_height: self.max_height,
            constant_range: self.ga.interval,
        }
    }
}

/// Called with the metrics of every training-set evaluation.
pub type EvalObserver<'a> = &'a (dyn Fn(&EvalMetrics) + Sync);

/// Computes fitness on the training set and counts every evaluation.
#[derive(Clone)]
pub struct Evaluator<'a> {
    train: &'a Dataset,
    penalty: f64,
    effort: EffortCounter,
    budget: u64,
    observer: Option<EvalObserver<'a>>,
}

impl fmt::Debug for Evaluator<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("train", &self.train.name)
            .field("penalty", &self.penalty)
            .field("effort", &self.effort.get())
            .field("budget", &self.budget)
            .finish_non_exhaustive()
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(train: &'a Dataset, penalty: f64, budget: u64) -> Self {
        Evaluator {
            train,
            penalty,
            effort: EffortCounter::new(),
            budget,
            observer: None,
        }
    }

    pub fn with_observer(mut self, observer: EvalObserver<'a>) -> Self {
        self.observer = Some(observer);
        self
    }

    pub fn train(&self) -> &Dataset {
        self.train
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn counter(&self) -> &EffortCounter {
        &self.effort
    }

    /// Training-set evaluations so far.
    pub fn effort(&self) -> u64 {
        self.effort.get()
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.effort())
    }

    pub fn fitness(&self, root: &Node) -> Result<f64> {
        let net = decode_node(root, self.train.input_width())?;
        let m = net.evaluate_counted(self.train, &self.effort)?;
        if let Some(observe) = self.observer {
            observe(&m);
        }
        Ok(m.mse + net.count_neurons() as f64 * self.penalty)
    }

    /// Fills in fitness for every tree that lacks it.
    pub fn evaluate_missing(&self, trees: &mut [GpTree]) -> Result<()> {
        trees
            .par_iter_mut()
            .filter(|t| t.fitness.is_none())
            .try_for_each(|t| {
                t.fitness = Some(self.fitness(&t.root)?);
                Ok(())
            })
    }
}

/// `MSE + N * P` of `tree` on `train`; counts one evaluation.
pub fn fitness(tree: &GpTree, train: &Dataset, penalty: f64, effort: &EffortCounter) -> Result<f64> {
    let net = decode_node(&tree.root, train.input_width())?;
    let m = net.evaluate_counted(train, effort)?;
    Ok(m.mse + net.count_neurons() as f64 * penalty)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub generation: usize,
    pub effort: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Reachable neurons of the training-best network.
    pub best_neurons: usize,
    pub best_used_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Returned genotype in s-expression form.
    pub best_tree: String,
    pub best_network: Network,
    pub train_fitness: f64,
    pub train_mse: f64,
    pub train_accuracy: f64,
    pub validation_fitness: Option<f64>,
    pub validation_mse: Option<f64>,
    pub validation_accuracy: Option<f64>,
    pub test_mse: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub effort_used: u64,
    pub effort_budget: u64,
    /// GA runs performed on individual trees.
    pub optimizations: usize,
    /// Neurons feeding an output, output neurons included.
    pub reachable_neurons: usize,
    pub topology: TopologyStats,
    pub used_features: Vec<usize>,
    /// One point per GP generation, the initial population being generation 0.
    pub trace: Vec<TracePoint>,
}

impl RunReport {
    pub fn tree(&self) -> Result<GpTree> {
        Ok(GpTree::new(self.best_tree.parse()?))
    }
}

impl FoldScore for RunReport {
    fn accuracy(&self) -> f64 {
        self.test_accuracy.unwrap_or(f64::NAN)
    }
}

fn best_of(pop: &[GpTree]) -> usize {
    let mut best = 0;
    for (i, t) in pop.iter().enumerate().skip(1) {
        let (fb, fi) = (
            pop[best].fitness.unwrap_or(f64::INFINITY),
            t.fitness.unwrap_or(f64::INFINITY),
        );
        if fi < fb || (fi == fb && t.size() < pop[best].size()) {
            best = i;
        }
    }
    best
}

fn trace_point(
    pop: &[GpTree],
    input_count: usize,
    generation: usize,
    effort: u64,
) -> Result<TracePoint> {
    let fits: Vec<f64> = pop.iter().filter_map(|t| t.fitness).collect();
    let best = decode_node(&pop[best_of(pop)].root, input_count)?;
    Ok(TracePoint {
        generation,
        effort,
        best_fitness: fits.iter().copied().fold(f64::INFINITY, f64::min),
        mean_fitness: fits.iter().sum::<f64>() / fits.len() as f64,
        best_neurons: best.count_neurons(),
        best_used_features: best.used_features().len(),
    })
}

/// Generational step with elitism 1: the rest of the population comes from
/// crossover (with probability `crossover_rate` per slot) or reproduction
/// of a tournament winner, and each of those is mutated with probability
/// `mutation_prob`. Offspring identical to a parent keep its fitness.
fn next_generation<R: Rng + ?Sized>(
    pop: &[GpTree],
    config: &EvolutionConfig,
    grammar: &GrammarConfig,
    rng: &mut R,
) -> Result<Vec<GpTree>> {
    let n = pop.len();
    let mut next = Vec::with_capacity(n);
    next.push(pop[best_of(pop)].clone());
    let maybe_mutate = |t: GpTree, rng: &mut R| {
        if rng.random_bool(config.mutation_prob) {
            mutate(&t, grammar, rng)
        } else {
            t
        }
    };
    while next.len() < n {
        if rng.random_bool(config.crossover_rate) {
            let a = tournament_select(pop, config.tournament_size, rng)?;
            let b = tournament_select(pop, config.tournament_size, rng)?;
            let (c1, c2) = subtree_crossover(&pop[a], &pop[b], grammar, rng);
            let c1 = maybe_mutate(c1, rng);
            next.push(c1);
            if next.len() < n {
                let c2 = maybe_mutate(c2, rng);
                next.push(c2);
            }
        } else {
            let a = tournament_select(pop, config.tournament_size, rng)?;
            let c = maybe_mutate(pop[a].clone(), rng);
            next.push(c);
        }
    }
    Ok(next)
}

/// Keeps the individual with the lowest validation fitness seen so far.
struct ValidationTracker<'a> {
    data: &'a Dataset,
    penalty: f64,
    best: Option<GpTree>,
}

impl ValidationTracker<'_> {
    fn offer(&mut self, tree: &GpTree) -> Result<()> {
        let net = decode_node(&tree.root, self.data.input_width())?;
        let m = net.evaluate(self.data)?;
        let vf = m.mse + net.count_neurons() as f64 * self.penalty;
        if self
            .best
            .as_ref()
            .is_none_or(|b| vf < b.validation_fitness.unwrap_or(f64::INFINITY))
        {
            let mut t = tree.clone();
            t.validation_fitness = Some(vf);
            self.best = Some(t);
        }
        Ok(())
    }
}

/// One full evolutionary run.
///
/// With a validation set the returned network is the one with the best
/// validation fitness seen during the run; otherwise it is the best training
/// individual of the final population.
pub fn run(
    config: &EvolutionConfig,
    train: &Dataset,
    validation: Option<&Dataset>,
    test: Option<&Dataset>,
) -> Result<RunReport> {
    run_observed(config, train, validation, test, None)
}

/// [`run`] with a callback on every training-set evaluation.
pub fn run_observed(
    config: &EvolutionConfig,
    train: &Dataset,
    validation: Option<&Dataset>,
    test: Option<&Dataset>,
    observer: Option<EvalObserver<'_>>,
) -> Result<RunReport> {
    config.validate()?;
    for ds in validation.iter().chain(test.iter()) {
        if ds.input_width() != train.input_width() || ds.target_width() != train.target_width() {
            return Err(Error::ShapeMismatch {
                expected: train.input_width(),
                found: ds.input_width(),
            });
        }
    }
    let grammar = config.grammar(train.input_width(), train.target_width());
    grammar.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut eval = Evaluator::new(train, config.penalty, config.effort_budget);
    if let Some(observer) = observer {
        eval = eval.with_observer(observer);
    }
    let mut tracker = validation.map(|data| ValidationTracker {
        data,
        penalty: config.penalty,
        best: None,
    });

    let mut pop = ramped_half_and_half(&grammar, config.population_size, &mut rng);
    eval.evaluate_missing(&mut pop)?;
    let mut trace = vec![trace_point(&pop, train.input_width(), 0, eval.effort())?];
    if let Some(t) = tracker.as_mut() {
        t.offer(&pop[best_of(&pop)])?;
    }

    let mut generation = 0;
    let mut optimizations = 0;
    'outer: loop {
        let cycle_start = eval.effort();
        let summary = optimize_elite(
            &mut pop,
            config.optimize_percent,
            &eval,
            &config.ga,
            &mut rng,
        )?;
        optimizations += summary.optimized;
        if let Some(t) = tracker.as_mut() {
            t.offer(&pop[best_of(&pop)])?;
        }
        if summary.budget_exhausted {
            break;
        }
        for _ in 0..config.generations_between_optimizations {
            let mut next = next_generation(&pop, config, &grammar, &mut rng)?;
            let cost = next.iter().filter(|t| t.fitness.is_none()).count() as u64;
            if cost > eval.remaining() {
                break 'outer;
            }
            eval.evaluate_missing(&mut next)?;
            pop = next;
            generation += 1;
            trace.push(trace_point(
                &pop,
                train.input_width(),
                generation,
                eval.effort(),
            )?);
            if let Some(t) = tracker.as_mut() {
                t.offer(&pop[best_of(&pop)])?;
            }
        }
        // Nothing left to evaluate: the population has converged to copies.
        if eval.effort() == cycle_start || eval.remaining() == 0 {
            break;
        }
    }

    let chosen = match tracker.and_then(|t| t.best) {
        Some(t) => t,
        None => pop[best_of(&pop)].clone(),
    };
    build_report(config, &eval, &chosen, validation, test, optimizations, trace)
}

fn build_report(
    config: &EvolutionConfig,
    eval: &Evaluator,
    chosen: &GpTree,
    validation: Option<&Dataset>,
    test: Option<&Dataset>,
    optimizations: usize,
    trace: Vec<TracePoint>,
) -> Result<RunReport> {
    let train = eval.train();
    let net = decode_node(&chosen.root, train.input_width())?;
    let neurons = net.count_neurons();
    let penalty = neurons as f64 * config.penalty;
    let tm = net.evaluate(train)?;
    let vm: Option<EvalMetrics> = validation.map(|v| net.evaluate(v)).transpose()?;
    let sm: Option<EvalMetrics> = test.map(|t| net.evaluate(t)).transpose()?;
    Ok(RunReport {
        best_tree: chosen.root.to_string(),
        train_fitness: tm.mse + penalty,
        train_mse: tm.mse,
        train_accuracy: tm.accuracy,
        validation_fitness: vm.map(|m| m.mse + penalty),
        validation_mse: vm.map(|m| m.mse),
        validation_accuracy: vm.map(|m| m.accuracy),
        test_mse: sm.map(|m| m.mse),
        test_accuracy: sm.map(|m| m.accuracy),
        effort_used: eval.effort(),
        effort_budget: config.effort_budget,
        optimizations,
        reachable_neurons: neurons,
        topology: net.topology_stats(),
        used_features: net.used_features().into_iter().collect(),
        trace,
        best_network: net,
    })
}

/// Holds out `config.validation_fraction` of `train` for validation (when
/// non-zero) and runs.
pub fn run_with_holdout(config: &EvolutionConfig, train: &Dataset, test: Option<&Dataset>) -> Result<RunReport> {
    config.validate()?;
    if config.validation_fraction > 0.0 {
        let v = config.validation_fraction;
        let (tr, va, _) = split(
            train,
            SplitFractions::new(1.0 - v, v, 0.0),
            config.stratified,
            config.seed ^ 0x5eed_5eed,
        )?;
        let tr = tr.ok_or(Error::DegenerateSplit { part: "train" })?;
        run(config, &tr, va.as_ref(), test)
    } else {
        run(config, train, None, test)
    }
}
