//! Real-coded GA over the constants of a single GP individual.
//!
//! Each chromosome holds one gene per constant of the tree (pre-order). The
//! population is seeded with the tree's own constants and its cached fitness;
//! the best chromosome found is written back into the tree (Lamarckian).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Evaluator;
use crate::grammar::{best_unique, GpTree};

/// An improvement smaller than this does not reset the stall window.
const STALL_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    /// Genes live in `[-interval, interval]`.
    pub interval: f64,
    pub population_size: usize,
    pub max_generations: usize,
    /// Stop after this many consecutive generations without improvement.
    pub stall_generations: usize,
    pub crossover_prob: f64,
    /// Gaussian mutation step; `interval / 10` when unset.
    pub mutation_sigma: Option<f64>,
    /// Per-gene mutation probability; `1 / genes` when unset.
    pub mutation_prob: Option<f64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            interval: 20.0,
            population_size: 50,
            max_generations: 50,
            stall_generations: 5,
            crossover_prob: 0.9,
            mutation_sigma: None,
            mutation_prob: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval.is_finite() && self.interval > 0.0) {
            return Err(Error::config("ga.interval", "must be finite and positive"));
        }
        if self.population_size < 2 {
            return Err(Error::config("ga.population_size", "must be at least 2"));
        }
        if self.stall_generations < 1 {
            return Err(Error::config("ga.stall_generations", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(Error::config("ga.crossover_prob", "must lie in [0, 1]"));
        }
        if let Some(s) = self.mutation_sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config("ga.mutation_sigma", "must be finite and positive"));
            }
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("ga.mutation_prob", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.mutation_sigma.unwrap_or(self.interval / 10.0)
    }

    /// Upper bound on evaluations spent by one optimization.
    pub fn max_evaluations(&self) -> u64 {
        (self.population_size - 1 + self.population_size * self.max_generations) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub tree: GpTree,
    /// Pattern-file evaluations spent.
    pub evaluations: u64,
    /// GA generations run after seeding.
    pub generations: usize,
    /// True when the GA stopped because the effort budget ran out.
    pub budget_exhausted: bool,
}

fn tournament2<R: Rng + ?Sized>(pop: &[Chromosome], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if pop[b].fitness < pop[a].fitness {
        b
    } else {
        a
    }
}

fn best_index(pop: &[Chromosome]) -> usize {
    let mut best = 0;
    for (i, c) in pop.iter().enumerate().skip(1) {
        if c.fitness < pop[best].fitness {
            best = i;
        }
    }
    best
}

fn evaluate_genes(tree: &GpTree, genes: Vec<Vec<f64>>, eval: &Evaluator) -> Result<Vec<Chromosome>> {
    genes
        .into_par_iter()
        .map(|g| {
            let fitness = eval.fitness(&tree.with_constants(&g).root)?;
            Ok(Chromosome { genes: g, fitness })
        })
        .collect()
}

/// Optimizes the constants of `tree`. The returned tree never has a worse
/// cached fitness than the input, and its shape is unchanged.
pub fn optimize_individual<R: Rng + ?Sized>(
    tree: &GpTree,
    eval: &Evaluator,
    cfg: &GaConfig,
    rng: &mut R,
) -> Result<GaOutcome> {
    let start = eval.effort();
    let unchanged = |tree: GpTree, exhausted: bool| GaOutcome {
        tree,
        evaluations: eval.effort() - start,
        generations: 0,
        budget_exhausted: exhausted,
    };
    let seed_genes = tree.constants();
    if seed_genes.is_empty() {
        return Ok(unchanged(tree.clone(), false));
    }
    let mut tree = tree.clone();
    let seed_fitness = match tree.fitness {
        Some(f) => f,
        None => {
            if eval.remaining() < 1 {
                return Ok(unchanged(tree, true));
            }
            let f = eval.fitness(&tree.root)?;
            tree.fitness = Some(f);
            f
        }
    };
    let n = cfg.population_size;
    if eval.remaining() < (n - 1) as u64 {
        return Ok(unchanged(tree, true));
    }

    let len = seed_genes.len();
    let r = cfg.interval;
    let randoms: Vec<Vec<f64>> = (1..n)
        .map(|_| (0..len).map(|_| rng.random_range(-r..=r)).collect())
        .collect();
    let mut pop = Vec::with_capacity(n);
    pop.push(Chromosome {
        genes: seed_genes,
        fitness: seed_fitness,
    });
    pop.extend(evaluate_genes(&tree, randoms, eval)?);

    let normal = Normal::new(0.0, cfg.sigma()).expect("sigma validated positive");
    let gene_prob = cfg.mutation_prob.unwrap_or(1.0 / len as f64);
    let mut best = pop[best_index(&pop)].clone();
    let mut stall = 0;
    let mut generations = 0;
    let mut exhausted = false;
    while generations < cfg.max_generations {
        if eval.remaining() < n as u64 {
            exhausted = true;
            break;
        }
        let children: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let p1 = &pop[tournament2(&pop, rng)].genes;
                let p2 = &pop[tournament2(&pop, rng)].genes;
                let mut child: Vec<f64> = if rng.random_bool(cfg.crossover_prob) {
                    let a: f64 = rng.random();
                    p1.iter().zip(p2).map(|(x, y)| a * x + (1.0 - a) * y).collect()
                } else {
                    p1.clone()
                };
                for g in &mut child {
                    if rng.random_bool(gene_prob) {
                        *g = (*g + normal.sample(rng)).clamp(-r, r);
                    }
                }
                child
            })
            .collect();
        let mut next = evaluate_genes(&tree, children, eval)?;
        let child_best = best_index(&next);
        if best.fitness < next[child_best].fitness {
            let worst = next
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness))
                .map(|(i, _)| i)
                .expect("non-empty population");
            next[worst] = best.clone();
        }
        pop = next;
        generations += 1;

        let gen_best = &pop[best_index(&pop)];
        if best.fitness - gen_best.fitness < STALL_EPSILON {
            stall += 1;
        } else {
            stall = 0;
        }
        if gen_best.fitness < best.fitness {
            best = gen_best.clone();
        }
        if stall >= cfg.stall_generations {
            break;
        }
    }

    let out = if best.fitness < seed_fitness {
        let mut t = tree.with_constants(&best.genes);
        t.fitness = Some(best.fitness);
        t
    } else {
        tree
    };
    Ok(GaOutcome {
        tree: out,
        evaluations: eval.effort() - start,
        generations,
        budget_exhausted: exhausted,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EliteSummary {
    pub optimized: usize,
    pub budget_exhausted: bool,
}

/// Optimizes the best `percent`% of `population` (rounded up), skipping
/// repeated individuals, and writes the results back in place.
pub fn optimize_elite<R: Rng + ?Sized>(
    population: &mut [GpTree],
    percent: f64,
    eval: &Evaluator,
    cfg: &GaConfig,
    rng: &mut R,
) -> Result<EliteSummary> {
    let count = (percent / 100.0 * population.len() as f64).ceil() as usize;
    let mut summary = EliteSummary::default();
    for i in best_unique(population, count) {
        let out = optimize_individual(&population[i], eval, cfg, rng)?;
        population[i] = out.tree;
        if out.evaluations > 0 {
            summary.optimized += 1;
        }
        if out.budget_exhausted {
            summary.budget_exhausted = true;
            break;
        }
    }
    Ok(summary)
}
