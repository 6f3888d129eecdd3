//! End-to-end runs of the `chanpred` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chanpred::ann::NetworkModel;

fn chanpred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanpred"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("CHANPRED_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--n", "400", "--seed", "3", "--output-dir", s(dir)];
    args.extend_from_slice(extra);
    let o = chanpred(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_pipeline_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &["--transfer-functions", "true", "--n-f", "64"]);
    for f in ["trace.csv", "transfer_functions.csv", "manifest.json"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["synth"]["seed"], 3);
    assert_eq!(manifest["config"]["synth"]["n_points"], 400);

    let pipe = tmp.path().join("pipe");
    let o = chanpred(&[
        "pipeline",
        "--input",
        s(&data.join("transfer_functions.csv")),
        "--output-dir",
        s(&pipe),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "raw_trace.csv",
        "trace.csv",
        "lsf.csv",
        "fit.json",
        "manifest.json",
    ] {
        assert!(pipe.join(f).exists(), "{f}");
    }
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(pipe.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["window_samples"], 19);

    let pred = tmp.path().join("pred");
    let o = chanpred(&[
        "predict",
        "--input",
        s(&data.join("trace.csv")),
        "--kind",
        "elm",
        "--neurons",
        "20",
        "--q",
        "2",
        "--seed",
        "1",
        "--output-dir",
        s(&pred),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(pred.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["kind"], "elm");
    assert!(run["rmse_pl_db"].as_f64().unwrap() > 0.0);
    let preds = fs::read_to_string(pred.join("predictions.csv")).unwrap();
    assert_eq!(
        preds.lines().filter(|l| l.ends_with(",predicted")).count(),
        run["n_predicted"].as_u64().unwrap() as usize
    );
    let model =
        NetworkModel::from_record(&fs::read_to_string(pred.join("model.txt")).unwrap()).unwrap();
    assert_eq!(model.hidden_neurons(), 20);
    assert!(pred.join("lsf_predictions.csv").exists());
}

#[test]
fn inconsistent_tone_count_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let tf = tmp.path().join("tf.csv");
    fs::write(
        &tf,
        "distance_m,n_f\n50,2,1,0,0,1\n51.42,2,1,0,0,1\n52.84,1,1,0\n",
    )
    .unwrap();
    let o = chanpred(&[
        "pipeline",
        "--input",
        s(&tf),
        "--output-dir",
        s(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tf.csv:4:") && err.contains("n_f"), "{err}");
}

#[test]
fn sweep_is_reproducible_and_reportable() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let trace = data.join("trace.csv");
    let run = |out: &Path| {
        let o = chanpred(&[
            "sweep",
            "--input",
            s(&trace),
            "--kinds",
            "bpn,elm,rbf",
            "--neurons",
            "5,10",
            "--q",
            "1,4",
            "--max-iterations",
            "50",
            "--output-dir",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("report.json")).unwrap()
    };
    let a = tmp.path().join("a");
    assert_eq!(run(&a), run(&tmp.path().join("b")));
    assert!(a.join("timings.json").exists());
    assert!(a.join("runs/rbf_m10_q4_s0_predictions.csv").exists());

    let o = chanpred(&["report", "--input", s(&a), "--bins", "12"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cmp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["kinds"].as_array().unwrap().len(), 3);
    let dat = fs::read_to_string(a.join("density/elm_m5_q1_s0_predicted.dat")).unwrap();
    assert_eq!(dat.lines().count(), 13);
    assert!(fs::read_to_string(a.join("plot.gp"))
        .unwrap()
        .contains("elm_m5_q1_s0_measured.dat"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&chanpred(&[])), 1);
    assert_eq!(code(&chanpred(&["--help"])), 0);
    assert_eq!(code(&chanpred(&["--version"])), 0);
    assert_eq!(code(&chanpred(&["synth", "--frobnicate"])), 1);
    assert_eq!(code(&chanpred(&["predict"])), 1);
    let missing = tmp.path().join("nope.csv");
    assert_eq!(
        code(&chanpred(&[
            "predict",
            "--input",
            s(&missing),
            "--output-dir",
            s(tmp.path())
        ])),
        2
    );
}

#[test]
fn output_dir_from_environment_and_config() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_chanpred"))
        .args(["synth", "--n", "100"])
        .env("CHANPRED_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_dir.join("trace.csv").exists());

    let cfg = tmp.path().join("c.toml");
    let cfg_dir = tmp.path().join("from_cfg");
    fs::write(
        &cfg,
        format!(
            "[synth]\nn = 120\nseed = 4\noutput_dir = {:?}\n",
            s(&cfg_dir)
        ),
    )
    .unwrap();
    let o = chanpred(&["--config", s(&cfg), "synth", "--seed", "5"]);
    assert_eq!(code(&o), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["synth"]["n_points"], 120);
    assert_eq!(manifest["config"]["synth"]["seed"], 5);

    fs::write(&cfg, "[synth]\nnoise = 1\n").unwrap();
    assert_eq!(code(&chanpred(&["--config", s(&cfg), "synth"])), 1);
}
