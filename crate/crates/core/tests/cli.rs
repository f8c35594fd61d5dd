use std::path::Path;
use std::process::Command;

use recon_cluster::cli::run;
use recon_cluster::config::KeyValues;
use recon_cluster::dae::DaeModel;
use recon_cluster::datasets::load_dataset;
use recon_cluster::render::parse_netpbm;

fn rc(out: &Path, args: &[&str]) -> recon_cluster::cli::Outcome {
    let mut full = vec!["rc".to_string(), "--out".into(), out.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    run(full).unwrap_or_else(|e| panic!("rc {args:?} failed: {e}"))
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn tiny_model(dir: &Path) -> std::path::PathBuf {
    rc(
        dir,
        &[
            "train", "--dataset", "shapes", "--train-count", "200", "--val-count", "50", "--hidden-size", "20",
            "--learning-rate", "0.1", "--max-epochs", "2",
        ],
    );
    dir.join("model.rcm")
}

#[test]
fn generate_writes_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["generate", "--dataset", "shapes", "--split", "test_multi", "--count", "1000", "--seed", "4"];
    let o = rc(a.path(), &args);
    assert!(o.messages[0].contains("1000 examples of 28x28"));
    rc(b.path(), &args);
    let file = "shapes_test_multi.rcds";
    let d = load_dataset(a.path().join(file)).unwrap();
    assert_eq!(d.examples.len(), 1000);
    assert!(d.examples.iter().all(|e| e.truth.object_count() == 3));
    assert_eq!(read(a.path().join(file)), read(b.path().join(file)));
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_rc");
    let bad = Command::new(bin)
        .args(["--out", dir.path().to_str().unwrap(), "generate", "--dataset", "faces"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("faces"));
    let unknown = Command::new(bin).args(["frobnicate"]).output().unwrap();
    assert!(!unknown.status.success());
    let ok = Command::new(bin)
        .args(["--out", dir.path().to_str().unwrap(), "generate", "--dataset", "bars", "--count", "3"])
        .output()
        .unwrap();
    assert!(ok.status.success());
}

#[test]
fn train_with_zero_learning_rate_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "train", "--dataset", "bars", "--train-count", "100", "--val-count", "20", "--hidden-size", "8",
        "--learning-rate", "0", "--max-epochs", "3",
    ];
    rc(a.path(), &args);
    rc(b.path(), &args);
    let m = DaeModel::load(a.path().join("model.rcm")).unwrap();
    assert_eq!(m.input_size(), 400);
    assert_eq!(m, DaeModel::new_random(400, 8, recon_cluster::dae::Activation::Relu, 0));
    assert_eq!(read(a.path().join("model.rcm")), read(b.path().join("model.rcm")));
    assert!(a.path().join("train_report.json").exists());
}

#[test]
fn train_divergence_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = run([
        "rc", "--out", dir.path().to_str().unwrap(), "train", "--dataset", "bars", "--train-count", "100",
        "--val-count", "10", "--hidden-size", "8", "--learning-rate", "1e300", "--noise-p", "0",
    ]);
    assert!(r.unwrap_err().to_string().contains("diverged"));
    let log = std::fs::read_to_string(dir.path().join("run_log.jsonl")).unwrap();
    assert!(log.lines().last().unwrap().contains("\"error\""));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# bars run\ndataset = bars\ncount = 7\nsplit = train_single\n").unwrap();
    rc(dir.path(), &["--config", cfg.to_str().unwrap(), "generate", "--count", "5"]);
    let d = load_dataset(dir.path().join("bars_train_single.rcds")).unwrap();
    assert_eq!(d.examples.len(), 5);
    let log = std::fs::read_to_string(dir.path().join("run_log.jsonl")).unwrap();
    let start: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(start["event"], "start");
    assert_eq!(start["body"]["count"], 5);
    assert_eq!(start["body"]["dataset"], "bars");
    assert_eq!(start["body"]["max_iters"], 15);
}

#[test]
fn bind_eval_render_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let model = tiny_model(p);
    rc(p, &["generate", "--dataset", "shapes", "--count", "6", "--seed", "2"]);
    let data = p.join("shapes_test_multi.rcds");
    let (m, d) = (model.to_str().unwrap(), data.to_str().unwrap());

    rc(p, &["bind", "--model", m, "--data", d, "--k", "3", "--limit", "2", "--render"]);
    let trace = std::fs::read_to_string(p.join("bind_trace.jsonl")).unwrap();
    let frames: Vec<_> = std::fs::read_dir(p.join("frames")).unwrap().map(|e| e.unwrap().file_name()).collect();
    let ex0 = frames.iter().filter(|f| f.to_str().unwrap().starts_with("ex0000_iter")).count();
    assert!((1..=15).contains(&ex0));
    let frame = read(p.join("frames/ex0000_iter01.ppm"));
    let img = parse_netpbm(&frame).unwrap();
    assert_eq!((img.magic.as_str(), img.width, img.height), ("P6", 28, 28));
    rc(p, &["bind", "--model", m, "--data", d, "--k", "3", "--limit", "2"]);
    assert_eq!(std::fs::read_to_string(p.join("bind_trace.jsonl")).unwrap(), trace);

    let o = rc(p, &["bind", "--model", m, "--data", d, "--k", "1", "--limit", "2"]);
    assert!(o.messages[0].contains("mean AMI 0.0000"), "{:?}", o.messages);

    let o = rc(p, &["eval", "--model", m, "--data", d, "--k", "3"]);
    assert_eq!(o.exit_code, 0);
    let table = std::fs::read_to_string(p.join("eval_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    rc(p, &["eval", "--model", m, "--data", d, "--ks", "2,3"]);
    assert_eq!(std::fs::read_to_string(p.join("eval_table.csv")).unwrap().lines().count(), 3);
    let csv = std::fs::read_to_string(p.join("scores_k2.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "index,ami,confidence,iterations,final_ll");
    assert_eq!(csv.lines().count(), 7);

    rc(p, &["render", "--data", d, "--limit", "2"]);
    assert!(parse_netpbm(&read(p.join("ex0001_input.pgm"))).is_ok());
    assert!(parse_netpbm(&read(p.join("ex0001_truth.ppm"))).is_ok());
}

#[test]
fn bind_rejects_geometry_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let model = tiny_model(p);
    rc(p, &["generate", "--dataset", "bars", "--count", "2"]);
    let r = run([
        "rc", "--out", p.to_str().unwrap(), "bind", "--model", model.to_str().unwrap(), "--data",
        p.join("bars_test_multi.rcds").to_str().unwrap(),
    ]);
    assert!(r.is_err());
}

#[test]
fn generalize_on_user_images() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let model = tiny_model(p);
    let mut drawn = b"P5\n28 28\n255\n".to_vec();
    drawn.extend((0..784).map(|i| if (i / 28) % 9 == 3 || i % 28 == 14 { 255u8 } else { 0 }));
    std::fs::write(p.join("cross.pgm"), &drawn).unwrap();
    let mut blank = b"P5\n28 28\n255\n".to_vec();
    blank.extend([0u8; 784]);
    std::fs::write(p.join("blank.pgm"), &blank).unwrap();
    let args = ["generalize", "--model", model.to_str().unwrap(), "--k", "3"];
    let mut with_images: Vec<&str> = args.to_vec();
    let (c, b) = (p.join("cross.pgm"), p.join("blank.pgm"));
    with_images.push(c.to_str().unwrap());
    with_images.push(b.to_str().unwrap());
    let o = rc(p, &with_images);
    assert_eq!(o.messages.len(), 2);
    let first = read(p.join("cross_assignment.ppm"));
    rc(p, &with_images);
    assert_eq!(read(p.join("cross_assignment.ppm")), first);
    assert!(p.join("blank_assignment.ppm").exists());

    let mut small = b"P5\n10 10\n255\n".to_vec();
    small.extend([0u8; 100]);
    std::fs::write(p.join("small.pgm"), &small).unwrap();
    let r = run([
        "rc", "--out", p.to_str().unwrap(), "generalize", "--model", model.to_str().unwrap(),
        p.join("small.pgm").to_str().unwrap(),
    ]);
    assert!(r.is_err());
}

#[test]
fn search_and_study_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = rc(
        p,
        &[
            "search", "--dataset", "simple_superposition", "--n-trials", "2", "--train-count", "100", "--val-count",
            "20", "--score-count", "10", "--max-epochs", "2", "--set", "k=2",
        ],
    );
    assert!(o.messages[0].starts_with("2 trials"));
    let trials = std::fs::read_to_string(p.join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 2);
    let best = KeyValues::load(p.join("best_config.txt")).unwrap();
    assert_eq!(best.0["dataset"], "simple_superposition");
    // the best config feeds straight back into train
    let train_dir = p.join("retrain");
    rc(&train_dir, &["--config", p.join("best_config.txt").to_str().unwrap(), "train", "--max-epochs", "1"]);
    let m = DaeModel::load(train_dir.join("model.rcm")).unwrap();
    assert_eq!(m.hidden_size().to_string(), best.0["hidden_size"]);

    let o = rc(
        p,
        &[
            "study", "--dataset", "simple_superposition", "--n-models", "3", "--train-count", "100", "--val-count",
            "20", "--score-count", "10", "--max-epochs", "2", "--hidden-size", "10", "--set", "k=2",
        ],
    );
    assert!(o.messages[0].contains("of 3 models scored"));
    let csv = std::fs::read_to_string(p.join("study.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
