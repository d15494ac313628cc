use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn facecue(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facecue"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = facecue(dir, args);
    assert_eq!(
        code(&out),
        0,
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Temp dir holding all.csv, train.csv and test.csv from synth + split.
fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--output", "all.csv", "--seed", "3"]);
    ok(
        dir.path(),
        &[
            "split",
            "--input",
            "all.csv",
            "--train-out",
            "train.csv",
            "--test-out",
            "test.csv",
            "--seed",
            "3",
        ],
    );
    dir
}

fn manifest_of(dir: &Path, output: &str) -> serde_json::Value {
    let path: PathBuf = dir.join(format!("{output}.manifest.json"));
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

#[test]
fn full_run_writes_outputs_and_manifests() {
    let dir = prepared();
    let d = dir.path();
    let split = manifest_of(d, "train.csv");
    assert_eq!(split["command"], "split");
    assert_eq!(split["train_fraction"], 0.7);
    assert_eq!(split["stratified"], true);

    ok(
        d,
        &[
            "extract-features",
            "--input",
            "train.csv",
            "--output",
            "angles.csv",
        ],
    );
    let angles = std::fs::read_to_string(d.join("angles.csv")).unwrap();
    assert_eq!(angles.lines().count(), 123);
    assert_eq!(manifest_of(d, "angles.csv")["origin"], 8);

    let out = ok(
        d,
        &["augment", "--input", "train.csv", "--output", "aug.csv"],
    );
    assert!(out.contains("122 -> 3660"), "{out}");

    ok(
        d,
        &[
            "train",
            "--input",
            "train.csv",
            "--model",
            "model.json",
            "--n-trees",
            "25",
            "--seed",
            "9",
        ],
    );
    let m = manifest_of(d, "model.json");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["train"]["k"], 4);
    assert_eq!(m["train"]["forest"]["n_trees"], 25);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    ok(
        d,
        &[
            "predict",
            "--model",
            "model.json",
            "--input",
            "test.csv",
            "--output",
            "pred.csv",
        ],
    );
    let pred = std::fs::read_to_string(d.join("pred.csv")).unwrap();
    assert!(pred.starts_with("frame_id,predicted,p_as,p_st\n"));
    assert_eq!(pred.lines().count(), 54);

    let table = ok(
        d,
        &[
            "evaluate",
            "--model",
            "model.json",
            "--input",
            "test.csv",
            "--output",
            "report.json",
        ],
    );
    assert!(
        table.contains("TPR") && table.contains("accuracy"),
        "{table}"
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["total"], 53);
    assert!(report["accuracy"]["value"].as_f64().unwrap() >= 0.9);
    assert_eq!(manifest_of(d, "report.json")["command"], "evaluate");
}

#[test]
fn replay_from_manifest_is_byte_identical() {
    let dir = prepared();
    let d = dir.path();
    ok(
        d,
        &[
            "train",
            "--input",
            "train.csv",
            "--model",
            "a.json",
            "--n-trees",
            "15",
            "--max-depth",
            "6",
        ],
    );
    ok(
        d,
        &[
            "train",
            "--manifest",
            "a.json.manifest.json",
            "--model",
            "b.json",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("a.json")).unwrap(),
        std::fs::read(d.join("b.json")).unwrap()
    );

    // a changed input file is refused
    let mut text = std::fs::read_to_string(d.join("train.csv")).unwrap();
    text.push_str(&text.lines().nth(1).unwrap().replacen(',', "x,", 1));
    text.push('\n');
    std::fs::write(d.join("train.csv"), text).unwrap();
    let out = facecue(
        d,
        &[
            "train",
            "--manifest",
            "a.json.manifest.json",
            "--model",
            "c.json",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("digest"));
}

#[test]
fn overlapping_or_augmented_test_set_exits_3() {
    let dir = prepared();
    let d = dir.path();
    ok(
        d,
        &[
            "train",
            "--input",
            "train.csv",
            "--model",
            "model.json",
            "--n-trees",
            "5",
            "--no-augment",
        ],
    );

    let out = facecue(
        d,
        &[
            "evaluate",
            "--model",
            "model.json",
            "--input",
            "train.csv",
            "--output",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("training manifest"));
    assert!(!d.join("r.json").exists());

    ok(
        d,
        &[
            "augment",
            "--input",
            "test.csv",
            "--output",
            "test_aug.csv",
            "--copies",
            "1",
        ],
    );
    let out = facecue(
        d,
        &[
            "evaluate",
            "--model",
            "model.json",
            "--input",
            "test_aug.csv",
            "--output",
            "r.json",
        ],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn usage_errors_exit_1() {
    let dir = prepared();
    let d = dir.path();
    assert_eq!(code(&facecue(d, &["frobnicate"])), 1);
    assert_eq!(code(&facecue(d, &["train", "--model", "m.json"])), 1);
    assert_eq!(
        code(&facecue(
            d,
            &[
                "train",
                "--input",
                "train.csv",
                "--model",
                "m.json",
                "--k",
                "0"
            ]
        )),
        1
    );
    assert_eq!(
        code(&facecue(
            d,
            &[
                "extract-features",
                "--input",
                "train.csv",
                "--output",
                "a.csv",
                "--origin-index",
                "68"
            ]
        )),
        1
    );
    let split = [
        "split",
        "--input",
        "all.csv",
        "--train-out",
        "a.csv",
        "--test-out",
        "b.csv",
        "--train-fraction",
        "1.5",
    ];
    assert_eq!(code(&facecue(d, &split)), 1);
    assert_eq!(code(&facecue(d, &["--help"])), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = prepared();
    let d = dir.path();
    let out = facecue(
        d,
        &[
            "extract-features",
            "--input",
            "missing.csv",
            "--output",
            "a.csv",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let text = std::fs::read_to_string(d.join("train.csv")).unwrap();
    let broken: String = text
        .lines()
        .take(3)
        .map(|l| format!("{}\n", l))
        .collect::<String>()
        + "bad,AS,1,2\n";
    std::fs::write(d.join("broken.csv"), broken).unwrap();
    let out = facecue(d, &["train", "--input", "broken.csv", "--model", "m.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn strict_degenerate_rejects_collapsed_landmark() {
    let dir = prepared();
    let d = dir.path();
    let text = std::fs::read_to_string(d.join("test.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    // put landmark 0 on the chin (landmark 8)
    fields[2] = fields[2 + 16].clone();
    fields[3] = fields[3 + 16].clone();
    lines[1] = fields.join(",");
    std::fs::write(d.join("collapsed.csv"), lines.join("\n") + "\n").unwrap();

    ok(
        d,
        &[
            "extract-features",
            "--input",
            "collapsed.csv",
            "--output",
            "a.csv",
        ],
    );
    let out = facecue(
        d,
        &[
            "extract-features",
            "--input",
            "collapsed.csv",
            "--output",
            "b.csv",
            "--strict-degenerate",
        ],
    );
    assert_eq!(code(&out), 2);
}
