//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    cart_oracle, compare_tree, pca_oracle, random_matrix, random_pixel_frame, random_tree_dataset,
    rng,
};
use facecue::ingestion::write_landmark_csv;
use facecue::pca::{covariance, symmetric_eigen};
use facecue::pipeline::{
    self, evaluate, evaluate_file, exit_code, replay_train, split, train, train_file,
};
use facecue::synthetic::{synthetic_dataset, SyntheticConfig};
use facecue::{
    angles_from_frame, fit_pca, train_forest, AugmentationConfig, ForestConfig, LabeledDataset,
    OriginIndex, Point2, RunManifest, TrainConfig,
};
use rand::Rng;

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    detail: String,
    ok: bool,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn invariance() -> Outcome {
    let mut r = rng(1);
    let origin = OriginIndex::default();
    let mut worst_scale = 0.0f64;
    for i in 0..1000 {
        let frame = random_pixel_frame(&mut r, &format!("inv{i}"));
        let base = angles_from_frame(&frame, origin);

        let (dx, dy) = (
            r.gen_range(-5000..5000) as f64,
            r.gen_range(-5000..5000) as f64,
        );
        let moved = angles_from_frame(
            &frame.map_points(|p| Point2::new(p.x + dx, p.y + dy)),
            origin,
        );
        if moved != base {
            return outcome(false, format!("translation changed angles of frame {i}"));
        }

        let s = r.gen_range(0.05..20.0);
        let scaled =
            angles_from_frame(&frame.map_points(|p| Point2::new(s * p.x, s * p.y)), origin);
        for (a, b) in base.angles().iter().zip(scaled.angles()) {
            worst_scale = worst_scale.max((a - b).abs());
        }

        let y0 = frame.point(8).y;
        let mirrored = angles_from_frame(
            &frame.map_points(|p| Point2::new(p.x, 2.0 * y0 - p.y)),
            origin,
        );
        if mirrored.angles() != base.angles() {
            return outcome(false, format!("reflection changed angles of frame {i}"));
        }
    }
    outcome(
        worst_scale < 1e-9,
        format!("1000 frames, translation exact, reflection identical, max scale drift {worst_scale:.1e} rad"),
    )
}

fn pca_equivalence() -> Outcome {
    let mut r = rng(2);
    let (mut worst_vec, mut worst_val, mut worst_orth, mut worst_trace) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for m in 0..50 {
        let n = if m == 0 {
            5
        } else if m == 1 {
            200
        } else {
            r.gen_range(5..=200)
        };
        let rows = random_matrix(&mut r, n, 67);
        let model = match fit_pca(&rows, 4) {
            Ok(model) => model,
            Err(e) => return outcome(false, format!("matrix {m}: {e}")),
        };
        let oracle = pca_oracle(&rows);
        for j in 0..4 {
            worst_val = worst_val.max((model.explained_variance[j] - oracle.values[j]).abs());
            for (a, b) in model.components[j].iter().zip(&oracle.vectors[j]) {
                worst_vec = worst_vec.max((a - b).abs());
            }
            for l in 0..4 {
                let dot: f64 = model.components[j]
                    .iter()
                    .zip(&model.components[l])
                    .map(|(a, b)| a * b)
                    .sum();
                worst_orth = worst_orth.max((dot - if j == l { 1.0 } else { 0.0 }).abs());
            }
        }

        // Full spectrum: always from the eigensolver, and through fit_pca
        // itself when n is large enough for k = 67.
        let (_, cov) = covariance(&rows).unwrap();
        let total: f64 = symmetric_eigen(&cov, 67)
            .values
            .iter()
            .map(|v| v.max(0.0))
            .sum();
        worst_trace = worst_trace.max((total - oracle.trace).abs());
        if n > 67 {
            let full = fit_pca(&rows, 67).unwrap();
            worst_trace =
                worst_trace.max((full.explained_variance.iter().sum::<f64>() - oracle.trace).abs());
        }
    }
    outcome(
        worst_vec < 1e-6 && worst_val < 1e-6 && worst_orth < 1e-8 && worst_trace < 1e-6,
        format!(
            "50 matrices: component {worst_vec:.1e}, eigenvalue {worst_val:.1e}, orthonormality {worst_orth:.1e}, trace {worst_trace:.1e}"
        ),
    )
}

fn forest_equivalence() -> Outcome {
    let mut r = rng(3);
    let config = ForestConfig {
        n_trees: 1,
        test_mode: true,
        ..ForestConfig::default()
    };
    let mut nodes = 0;
    for d in 0..100 {
        let n = r.gen_range(2..=50);
        let (x, y) = random_tree_dataset(&mut r, n, 4);
        let model = match train_forest(&x, &y, &config) {
            Ok(model) => model,
            Err(e) => return outcome(false, format!("dataset {d}: {e}")),
        };
        let all: Vec<usize> = (0..n).collect();
        if let Err(diff) = compare_tree(&model.trees[0], 0, &cart_oracle(&x, &y, &all, None), "") {
            return outcome(false, format!("dataset {d}: {diff}"));
        }
        nodes += model.trees[0].nodes.len();
    }
    outcome(
        true,
        format!("100 datasets, {nodes} nodes identical to the oracle"),
    )
}

fn synthetic_split() -> (LabeledDataset, LabeledDataset) {
    let data = synthetic_dataset(&SyntheticConfig::default());
    split(&data, 0.7, 7).unwrap()
}

fn end_to_end() -> Outcome {
    let data = synthetic_dataset(&SyntheticConfig::default());
    let (train_set, test_set) = split(&data, 0.7, 7).unwrap();
    if (data.len(), train_set.len(), test_set.len()) != (175, 122, 53) {
        return outcome(
            false,
            format!(
                "split {} -> {}/{}",
                data.len(),
                train_set.len(),
                test_set.len()
            ),
        );
    }
    let augmented = facecue::augment_dataset(&train_set, &AugmentationConfig::default()).unwrap();
    if augmented.len() != 3660 {
        return outcome(
            false,
            format!("augmentation produced {} frames", augmented.len()),
        );
    }
    let bundle = train(&train_set, &TrainConfig::seeded(7)).unwrap();
    let report = evaluate(&bundle, &test_set).unwrap();
    let identities = report.per_class.iter().all(|c| c.identities_hold());
    let acc = report.accuracy.value();
    outcome(
        acc >= 0.9 && identities && bundle.pca.k() == 4,
        format!(
            "175 -> 122/53, 3660 training frames, accuracy {} ({}/{}), rate identities {}",
            report.accuracy,
            report.accuracy.numerator,
            report.accuracy.denominator,
            if identities { "exact" } else { "BROKEN" }
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (train_set, test_set) = synthetic_split();
    let train_csv = dir.path().join("train.csv");
    write_landmark_csv(&train_csv, train_set.frames()).unwrap();

    let first = dir.path().join("model.json");
    let (_, manifest) = train_file(&train_csv, &TrainConfig::seeded(11), &first).unwrap();
    let reloaded = RunManifest::load(RunManifest::path_for(&first)).unwrap();
    if reloaded != manifest {
        return outcome(false, "manifest did not round-trip");
    }
    let second = dir.path().join("replay.json");
    replay_train(&reloaded, &second).unwrap();
    let identical = std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap();

    // A test file that reuses one training frame must be refused.
    let leaky_csv = dir.path().join("leaky.csv");
    let leaky = test_set.frames().iter().chain(&train_set.frames()[..1]);
    write_landmark_csv(&leaky_csv, leaky).unwrap();
    let code = match evaluate_file(&first, &leaky_csv) {
        Err(e @ pipeline::PipelineError::TrainTestOverlap(_)) => e.exit_code(),
        Err(e) => e.exit_code() + 100,
        Ok(_) => exit_code::SUCCESS,
    };
    outcome(
        identical && code == exit_code::PROTOCOL,
        format!(
            "replayed model {}, overlap exit code {code}",
            if identical {
                "byte-identical"
            } else {
                "DIFFERS"
            }
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 5] = [
        (
            "angle-feature invariance",
            invariance,
            Duration::from_secs(5),
        ),
        (
            "PCA oracle equivalence",
            pca_equivalence,
            Duration::from_secs(30),
        ),
        (
            "forest oracle equivalence",
            forest_equivalence,
            Duration::from_secs(60),
        ),
        (
            "end-to-end synthetic benchmark",
            end_to_end,
            Duration::from_secs(120),
        ),
        (
            "determinism and overlap rejection",
            determinism,
            Duration::from_secs(120),
        ),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let ok = result.ok && elapsed <= budget;
        failed += usize::from(!ok);
        println!(
            "{} {name}: {} [{:.2}s of {}s]",
            if ok { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
