//! One function per quantified property. Each returns a short summary on
//! success and the first counterexample on failure.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use gpann::data::{load_csv, normalize, CsvSchema, CvPlan, Dataset};
use gpann::decoder::decode;
use gpann::evolution::{fitness, run_observed, EvolutionConfig, Evaluator};
use gpann::grammar::{create_random_tree, GrammarConfig, InitMethod};
use gpann::network::{EffortCounter, EvalMetrics};
use gpann::weight_opt::{optimize_individual, GaConfig};
use rand::Rng;

use super::*;

pub type Check = Result<String, String>;

pub fn decoder_matches_reference(trees: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut cycles = 0;
    let mut neurons = 0usize;
    for i in 0..trees {
        let cfg = random_grammar(&mut rng);
        let tree = random_tree(&cfg, &mut rng);
        if tree.height() > 6 || !tree.is_type_valid(&cfg) {
            return Err(format!("tree {i} is not a valid height-6 tree: {}", tree.root));
        }
        let net = decode(&tree, cfg.num_inputs).map_err(|e| format!("tree {i}: {e}"))?;
        let r = reference_decode(&tree.root, cfg.num_inputs);
        if net.neurons().len() != r.edges.len() {
            return Err(format!(
                "tree {i}: {} neurons, reference {}: {}",
                net.neurons().len(),
                r.edges.len(),
                tree.root
            ));
        }
        let got = edge_maps(&net);
        for (k, (a, b)) in got.iter().zip(&r.edges).enumerate() {
            let same_keys = a.keys().eq(b.keys());
            let close = a.values().zip(b.values()).all(|(x, y)| (x - y).abs() <= 1e-12);
            if !same_keys || !close {
                return Err(format!("tree {i}, neuron {k}: {a:?} vs {b:?}: {}", tree.root));
            }
        }
        let outs: Vec<usize> = net.output_slots().iter().map(|s| s.0).collect();
        if outs != r.outputs {
            return Err(format!("tree {i}: outputs {outs:?} vs {:?}", r.outputs));
        }
        if has_cycle(&net) {
            cycles += 1;
        }
        neurons += r.edges.len();
    }
    if cycles > 0 {
        return Err(format!("{cycles} cyclic networks"));
    }
    Ok(format!(
        "{trees} trees, {neurons} neurons, identical digraphs, 0 cycles"
    ))
}

pub fn fitness_formula(pairs: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let cfg = random_grammar(&mut rng);
        let tree = random_tree(&cfg, &mut rng);
        let rows = rng.random_range(1..40);
        let data = random_dataset(&mut rng, cfg.num_inputs, cfg.num_outputs, rows);
        let p = [0.0, 1e-5, 1e-3, 0.1][rng.random_range(0..4)];
        let effort = EffortCounter::new();
        let f = fitness(&tree, &data, p, &effort).map_err(|e| e.to_string())?;
        let net = decode(&tree, cfg.num_inputs).map_err(|e| e.to_string())?;
        let expect = net.evaluate(&data).map_err(|e| e.to_string())?.mse
            + reference_neuron_count(&net) as f64 * p;
        let err = (f - expect).abs();
        worst = worst.max(err);
        if err > 1e-12 {
            return Err(format!("pair {i}: fitness {f} vs {expect}"));
        }
        if effort.get() != 1 {
            return Err(format!("pair {i}: effort {}", effort.get()));
        }
    }
    Ok(format!("{pairs} pairs, max deviation {worst:.1e}"))
}

pub fn lamarckian_never_worsens(trees: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let ga = GaConfig::default();
    let mut improved = 0;
    for i in 0..trees {
        let cfg = GrammarConfig::new(rng.random_range(1..=4), rng.random_range(1..=2));
        let data = random_dataset(&mut rng, cfg.num_inputs, cfg.num_outputs, 12);
        let mut tree = create_random_tree(&cfg, InitMethod::Grow, rng.random_range(2..=4), &mut rng);
        let eval = Evaluator::new(&data, 1e-5, u64::MAX);
        let before = eval.fitness(&tree.root).map_err(|e| e.to_string())?;
        tree.fitness = Some(before);
        let out = optimize_individual(&tree, &eval, &ga, &mut rng).map_err(|e| e.to_string())?;
        let after = out.tree.fitness.ok_or("no fitness on the result")?;
        if after > before {
            return Err(format!("tree {i}: {before} -> {after}"));
        }
        let recomputed = eval.fitness(&out.tree.root).map_err(|e| e.to_string())?;
        if (recomputed - after).abs() > 1e-12 {
            return Err(format!("tree {i}: cached {after}, actual {recomputed}"));
        }
        let a = decode(&tree, cfg.num_inputs).map_err(|e| e.to_string())?;
        let b = decode(&out.tree, cfg.num_inputs).map_err(|e| e.to_string())?;
        if shape(&a) != shape(&b)
            || a.count_neurons() != b.count_neurons()
            || a.used_features() != b.used_features()
        {
            return Err(format!("tree {i}: topology changed"));
        }
        if out.tree.constants().iter().any(|c| c.abs() > ga.interval) {
            return Err(format!("tree {i}: gene left the interval"));
        }
        if after < before {
            improved += 1;
        }
    }
    Ok(format!("{trees} trees, none worse, {improved} improved, topology unchanged"))
}

pub fn effort_is_exact(budget: u64, population_size: usize, seed: u64) -> Check {
    let iris = iris();
    let calls = AtomicU64::new(0);
    let patterns = AtomicUsize::new(0);
    let log = |m: &EvalMetrics| {
        calls.fetch_add(1, Ordering::Relaxed);
        patterns.fetch_add(m.pattern_count, Ordering::Relaxed);
    };
    let cfg = EvolutionConfig {
        population_size,
        effort_budget: budget,
        seed,
        ..EvolutionConfig::default()
    };
    let report = run_observed(&cfg, &iris, None, None, Some(&log)).map_err(|e| e.to_string())?;
    let logged = calls.load(Ordering::Relaxed);
    let passes = patterns.load(Ordering::Relaxed);
    if passes != logged as usize * iris.len() {
        return Err(format!("{passes} patterns over {logged} evaluations"));
    }
    if report.effort_used != logged {
        return Err(format!("counter {} vs logged {logged}", report.effort_used));
    }
    if report.effort_used > budget {
        return Err(format!("effort {} over budget {budget}", report.effort_used));
    }
    Ok(format!(
        "counter {} == logged {logged} <= budget {budget}",
        report.effort_used
    ))
}

pub fn bundled_datasets() -> Vec<Dataset> {
    ["iris.csv", "breast_cancer.csv", "ionosphere.csv", "heart_cleveland.csv"]
        .iter()
        .map(|f| normalize(&load_csv(data_path(f), &CsvSchema::default()).unwrap()))
        .collect()
}

pub fn iris() -> Dataset {
    normalize(&load_csv(data_path("iris.csv"), &CsvSchema::default()).unwrap())
}

pub fn cv_protocol(seeds: &[u64]) -> Check {
    let sets = bundled_datasets();
    for ds in &sets {
        let labels = ds.labels();
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        for &seed in seeds {
            let plan = CvPlan::new(ds, seed, true).map_err(|e| e.to_string())?;
            if plan.halves.len() != 5 {
                return Err(format!("{}: {} iterations", ds.name, plan.halves.len()));
            }
            for (it, [a, b]) in plan.halves.iter().enumerate() {
                let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
                all.sort_unstable();
                if all != (0..ds.len()).collect::<Vec<_>>() {
                    return Err(format!("{} seed {seed} iteration {it}: not a partition", ds.name));
                }
                for c in 0..classes {
                    let na = a.iter().filter(|&&r| labels[r] == c).count();
                    let nb = b.iter().filter(|&&r| labels[r] == c).count();
                    if na.abs_diff(nb) > 1 {
                        return Err(format!(
                            "{} seed {seed} iteration {it} class {c}: {na} vs {nb}",
                            ds.name
                        ));
                    }
                }
            }
            for id in plan.folds() {
                let (train, test) = plan.fold_data(ds, id);
                if train.len() + test.len() != ds.len() || train.is_empty() || test.is_empty() {
                    return Err(format!("{} fold {id:?}: bad sizes", ds.name));
                }
            }
        }
    }
    let names: Vec<&str> = sets.iter().map(|d| d.name.as_str()).collect();
    Ok(format!(
        "partition and class balance hold on {} over {} seeds",
        names.join(", "),
        seeds.len()
    ))
}
