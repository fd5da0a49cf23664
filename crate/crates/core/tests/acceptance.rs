//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use common::checks::{self, Check};
use common::data_path;
use gpann::cli::{cross_validate, load_dataset, main_with_args, CvSummary, DatasetSpec};
use gpann::data::{CsvSchema, CvPlan, Dataset};
use gpann::evolution::EvolutionConfig;

const FULL_BUDGET: u64 = 500_000;
const SWEEP_SEEDS: [u64; 2] = [1, 2];

fn dataset(file: &str) -> Dataset {
    load_dataset(&DatasetSpec {
        path: data_path(file),
        schema: CsvSchema::default(),
    })
    .unwrap()
}

fn cv(ds: &Dataset, budget: u64, seed: u64, validation: f64) -> CvSummary {
    let evo = EvolutionConfig {
        effort_budget: budget,
        seed,
        validation_fraction: validation,
        ..EvolutionConfig::default()
    };
    let plan = CvPlan::new(ds, seed, evo.stratified).unwrap();
    cross_validate(&evo, ds, &plan, true).unwrap()
}

fn verdict(pass: bool, text: String) -> Check {
    if pass {
        Ok(text)
    } else {
        Err(text)
    }
}

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, started: Instant, check: Check) {
        let secs = started.elapsed().as_secs_f64();
        let (tag, text) = match check {
            Ok(t) => ("PASS", t),
            Err(t) => {
                self.failed.push(id);
                ("FAIL", t)
            }
        };
        println!("criterion {id:>2} {tag} {name}: {text} [{secs:.0}s]");
        let _ = std::io::stdout().flush();
    }
}

fn identical_reports() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("iris.toml");
    let text = format!(
        "kind = \"single\"\nseed = 7\nholdout_fraction = 0.3\nout_dir = \"{}\"\n\n\
         [dataset]\npath = \"{}\"\n\n[evolution]\neffort_budget = {FULL_BUDGET}\n",
        dir.path().join("out").display(),
        data_path("iris.csv").display(),
    );
    fs::write(&cfg, text).map_err(|e| e.to_string())?;
    let report = dir.path().join("out/report.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let code = main_with_args(["gpann", "run", "--config", cfg.to_str().unwrap()]);
        if code != 0 {
            return Err(format!("run exited with {code}"));
        }
        runs.push(fs::read(&report).map_err(|e| e.to_string())?);
        fs::remove_file(&report).map_err(|e| e.to_string())?;
    }
    verdict(
        runs[0] == runs[1],
        format!("two seed-7 runs, report.json {} and {} bytes", runs[0].len(), runs[1].len()),
    )
}

fn main() -> ExitCode {
    let mut report = Report { failed: Vec::new() };
    let iris = dataset("iris.csv");

    let t = Instant::now();
    let iris_cv = cv(&iris, FULL_BUDGET, SWEEP_SEEDS[0], 0.0);
    report.line(
        1,
        "iris 5x2cv accuracy",
        t,
        verdict(
            iris_cv.mean_accuracy >= 0.90,
            format!("mean {:.4} (need >= 0.90)", iris_cv.mean_accuracy),
        ),
    );

    let t = Instant::now();
    let bc = cv(&dataset("breast_cancer.csv"), FULL_BUDGET, 1, 0.0);
    report.line(
        2,
        "breast cancer 5x2cv accuracy",
        t,
        verdict(
            bc.mean_accuracy >= 0.93,
            format!("mean {:.4} (need >= 0.93)", bc.mean_accuracy),
        ),
    );

    let t = Instant::now();
    let mut per_seed = Vec::new();
    for &seed in &SWEEP_SEEDS {
        let none = if seed == SWEEP_SEEDS[0] {
            iris_cv.mean_accuracy
        } else {
            cv(&iris, FULL_BUDGET, seed, 0.0).mean_accuracy
        };
        let ten = cv(&iris, FULL_BUDGET, seed, 0.10).mean_accuracy;
        per_seed.push((seed, none, ten));
    }
    let n = per_seed.len() as f64;
    let mean_none = per_seed.iter().map(|s| s.1).sum::<f64>() / n;
    let mean_ten = per_seed.iter().map(|s| s.2).sum::<f64>() / n;
    let detail: Vec<String> = per_seed
        .iter()
        .map(|(s, a, b)| format!("seed {s}: {a:.4} vs {b:.4}"))
        .collect();
    report.line(
        3,
        "iris validation 0% beats 10%",
        t,
        verdict(
            mean_none > mean_ten,
            format!("mean {mean_none:.4} vs {mean_ten:.4} ({})", detail.join(", ")),
        ),
    );

    let t = Instant::now();
    report.line(
        4,
        "iris network size",
        t,
        verdict(
            iris_cv.mean_hidden_neurons <= 15.0 && iris_cv.mean_connections <= 60.0,
            format!(
                "hidden {:.2} (need <= 15), connections {:.2} (need <= 60)",
                iris_cv.mean_hidden_neurons, iris_cv.mean_connections
            ),
        ),
    );

    let t = Instant::now();
    let iono = cv(&dataset("ionosphere.csv"), 100_000, 1, 0.0);
    report.line(
        5,
        "feature selection",
        t,
        verdict(
            iris_cv.mean_used_features < 4.0 && iono.mean_used_features <= 20.0,
            format!(
                "iris {:.2} (need < 4), ionosphere at 100k {:.2} of 34 (need <= 20)",
                iris_cv.mean_used_features, iono.mean_used_features
            ),
        ),
    );

    let t = Instant::now();
    report.line(6, "decoder oracle", t, checks::decoder_matches_reference(10_000, 6));

    let t = Instant::now();
    report.line(7, "fitness formula", t, checks::fitness_formula(1_000, 7));

    let t = Instant::now();
    report.line(8, "lamarckian never worsens", t, checks::lamarckian_never_worsens(500, 8));

    let t = Instant::now();
    report.line(9, "effort accounting", t, checks::effort_is_exact(5_000, 1000, 9));

    let t = Instant::now();
    report.line(10, "determinism", t, identical_reports());

    let t = Instant::now();
    report.line(11, "5x2cv protocol", t, checks::cv_protocol(&[1, 2, 3]));

    if report.failed.is_empty() {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {:?}", report.failed);
        ExitCode::FAILURE
    }
}
