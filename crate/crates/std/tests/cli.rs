use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpswd::io::{read_csv_matrix, save_csv};
use dpswd::manifest::strip_duration;
use dpswd_core::randomness::sample_gaussian_matrix;
use dpswd_core::{Matrix, Seed};
use serde_json::Value;

fn dpswd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpswd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = dpswd(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schema")
}

fn assert_schema(name: &str, v: &Value) {
    let schema = read_json(&schema_dir().join(format!("{name}.schema.json")));
    let manifest = read_json(&schema_dir().join("manifest.schema.json"));
    let validator = jsonschema::options()
        .with_resource(
            "json-schema:///manifest.schema.json",
            jsonschema::Resource::from_contents(manifest).unwrap(),
        )
        .build(&schema)
        .expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{v:#}");
}

fn gaussian_csv(dir: &Path, name: &str, n: usize, d: usize, shift: f64, seed: u64) -> String {
    let mut m = sample_gaussian_matrix(n, d, 1.0, Seed(seed)).unwrap();
    m.as_mut_slice().iter_mut().for_each(|v| *v += shift);
    let p = dir.join(name);
    save_csv(&p, &m, None).unwrap();
    p.to_str().unwrap().to_string()
}

fn stable(mut v: Value) -> Value {
    strip_duration(&mut v);
    v
}

#[test]
fn compute_identical_files_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = gaussian_csv(dir.path(), "a.csv", 20, 3, 0.0, 1);
    let v = ok_json(&["compute", "--a", &a, "--b", &a, "--k", "30", "--q", "1"]);
    assert_eq!(v["value"], 0.0);
    assert_eq!(v["manifest"]["subcommand"], "compute");
    assert_eq!(v["manifest"]["parameters"]["k"], 30);
    assert_schema("compute", &v);
}

#[test]
fn compute_private_path_and_guard() {
    let dir = tempfile::tempdir().unwrap();
    let a = gaussian_csv(dir.path(), "a.csv", 20, 3, 0.0, 1);
    let b = gaussian_csv(dir.path(), "b.csv", 25, 3, 1.0, 2);

    let out = dpswd(&["compute", "--a", &a, "--b", &b, "--sigma", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--normalize"));

    let args = [
        "compute", "--a", &a, "--b", &b, "--sigma", "1", "--normalize", "max", "--seed", "0xbeef",
    ];
    let v = ok_json(&args);
    assert_schema("compute", &v);
    assert_eq!(v["manifest"]["seed"], 0xbeef);
    assert!(v["value"].as_f64().unwrap() > 0.0);
    assert_eq!(stable(v), stable(ok_json(&args)));

    let target_only = ok_json(&[
        "compute", "--a", &a, "--b", &b, "--sigma", "1", "--normalize", "clip:3", "--sides", "target",
    ]);
    assert_eq!(target_only["sides"], "target");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = gaussian_csv(dir.path(), "a.csv", 5, 2, 0.0, 1);
    let ragged = dir.path().join("r.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    let three = gaussian_csv(dir.path(), "c.csv", 5, 3, 0.0, 1);
    let cases: &[(&[&str], i32)] = &[
        (&["--version"], 0),
        (&["compute", "--a", &a], 2),
        (&["compute", "--a", &a, "--b", &a, "--k", "0"], 2),
        (&["compute", "--a", &a, "--b", &a, "--normalize", "clip:0"], 2),
        (&["compute", "--a", &a, "--b", &a, "--seed", "zz"], 2),
        (&["compute", "--a", &a, "--b", ragged.to_str().unwrap()], 3),
        (&["compute", "--a", &a, "--b", &three], 3),
        (&["flow", "--source", &a], 2),
        (&["flow", "--source", &a, "--target", &a], 2),
        (&["toy", "--grid", "0:1"], 2),
        (&["sensitivity", "--d", "5", "--k", "3"], 2),
        (&["calibrate", "--eps", "1e-6", "--dim", "784", "--k", "200", "--n", "600", "--batch", "600"], 4),
    ];
    for (args, code) in cases {
        let out = dpswd(args);
        assert_eq!(out.status.code(), Some(*code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        if *code != 0 {
            assert!(!out.stderr.is_empty(), "{args:?} printed no diagnostic");
        }
    }
    let out = dpswd(&["compute", "--a", &a, "--b", ragged.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn unwritable_output_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out_dir = blocker.join("sub");
    let out = dpswd(&[
        "sensitivity", "--d", "5", "--k", "3", "--trials", "10", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sensitivity_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let v = ok_json(&[
        "sensitivity", "--d", "784", "--k", "200", "--trials", "10000", "--delta", "1e-5", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    let summary = read_json(&out.join("sensitivity_summary.json"));
    assert_eq!(v, summary);
    assert_schema("sensitivity", &summary);
    assert!((summary["bernstein"].as_f64().unwrap() - 8.052563226609623).abs() < 1e-9);
    assert!((summary["clt"].as_f64().unwrap() - 0.363692446637154).abs() < 1e-9);
    assert!((summary["empirical_mean"].as_f64().unwrap() - 200.0 / 784.0).abs() < 0.005);

    let samples = read_csv_matrix(&out.join("sensitivity_samples.csv"), true).unwrap();
    assert_eq!((samples.rows(), samples.cols()), (10_000, 2));
    assert_eq!(samples[(9_999, 0)], 9_999.0);

    let one = dir.path().join("one");
    let v = ok_json(&["sensitivity", "--d", "1", "--k", "9", "--trials", "100", "--out", one.to_str().unwrap()]);
    assert_schema("sensitivity", &v);
    let samples = read_csv_matrix(&one.join("sensitivity_samples.csv"), true).unwrap();
    assert!((0..100).all(|t| samples[(t, 1)] == 9.0));
}

#[test]
fn toy_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let out_s = out.to_str().unwrap();
    let base = ["toy", "--n", "40", "--k", "30", "--repeats", "2", "--grid", "0:1:0.25"];
    let run = |sigma: &str| {
        let mut args = base.to_vec();
        args.extend(["--sigma", sigma, "--out", out_s]);
        assert!(dpswd(&args).status.success());
        (
            read_csv_matrix(&out.join("toy.csv"), true).unwrap(),
            read_json(&out.join("toy.json")),
        )
    };
    let (table, v) = run("0");
    assert_schema("toy", &v);
    assert_eq!((table.rows(), table.cols()), (5, 5));
    for r in table.iter_rows() {
        assert_eq!(r[1], r[3]);
    }
    let (table, _) = run("2");
    assert!(table.iter_rows().all(|r| r[3] > r[1]));

    // without --out the CSV goes to stdout
    let stdout = dpswd(&base).stdout;
    assert!(String::from_utf8(stdout).unwrap().starts_with("c,swd_mean,swd_std,dpswd_mean,dpswd_std"));
}

#[test]
fn calibrate_outputs_and_monotonicity() {
    let args = |epochs: &'static str| {
        [
            "calibrate", "--eps", "2", "--delta", "1e-5", "--dim", "784", "--k", "200", "--n", "60000",
            "--epochs", epochs, "--batch", "100", "--bound", "clt",
        ]
    };
    let v = ok_json(&args("10"));
    assert_schema("calibrate", &v);
    assert_eq!(v["steps"], 6000);
    assert!(v["eps_achieved"].as_f64().unwrap() <= 2.0);
    let doubled = ok_json(&args("20"));
    assert!(doubled["sigma"].as_f64().unwrap() > v["sigma"].as_f64().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cal.json");
    let mut with_out = args("10").to_vec();
    with_out.extend(["--out", file.to_str().unwrap()]);
    assert!(dpswd(&with_out).status.success());
    assert_eq!(stable(read_json(&file)), stable(v));
}

#[test]
fn flow_converges_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let src = gaussian_csv(dir.path(), "s.csv", 100, 2, 5.0, 1);
    let tgt = gaussian_csv(dir.path(), "t.csv", 100, 2, 0.0, 2);
    let out = dir.path().join("f");
    let v = ok_json(&[
        "flow", "--source", &src, "--target", &tgt, "--iters", "500", "--lr", "1", "--k", "20", "--out",
        out.to_str().unwrap(),
    ]);
    assert_schema("flow", &v);
    assert_eq!(v["privacy"], Value::Null);
    let (first, last) = (v["initial_loss"].as_f64().unwrap(), v["final_loss"].as_f64().unwrap());
    assert!(last * 10.0 <= first, "{first} -> {last}");

    let trace = read_csv_matrix(&out.join("trace.csv"), true).unwrap();
    assert_eq!((trace.rows(), trace.cols()), (500, 3));
    let particles = read_csv_matrix(&out.join("particles.csv"), false).unwrap();
    assert_eq!((particles.rows(), particles.cols()), (100, 2));
    assert_eq!(read_json(&out.join("summary.json")), v);
}

#[test]
fn flow_guarantee_inverts_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let src = gaussian_csv(dir.path(), "s.csv", 100, 2, 1.0, 1);
    let tgt = gaussian_csv(dir.path(), "t.csv", 100, 2, 0.0, 2);
    let cal = ok_json(&[
        "calibrate", "--eps", "3", "--delta", "1e-5", "--dim", "2", "--k", "20", "--n", "100", "--epochs",
        "10", "--batch", "20",
    ]);
    let sigma = cal["sigma"].as_f64().unwrap().to_string();
    let steps = cal["steps"].to_string();
    let out = dir.path().join("f");
    let v = ok_json(&[
        "flow", "--source", &src, "--target", &tgt, "--iters", &steps, "--k", "20", "--batch", "20",
        "--sigma", &sigma, "--normalize", "max", "--lr", "0.5", "--out", out.to_str().unwrap(),
    ]);
    assert_schema("flow", &v);
    let eps = v["privacy"]["eps"].as_f64().unwrap();
    assert!((eps - 3.0).abs() <= 1e-3, "flow eps {eps}");
    assert_eq!(v["privacy"]["delta"], 1e-5);
}

#[test]
fn every_subcommand_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let a = gaussian_csv(dir.path(), "a.csv", 60, 4, 0.0, 1);
    let b = gaussian_csv(dir.path(), "b.csv", 60, 4, 0.5, 2);
    let runs: Vec<Vec<String>> = vec![
        vec!["compute", "--a", &a, "--b", &b, "--k", "300", "--sigma", "0.5", "--normalize", "max"]
            .into_iter()
            .map(String::from)
            .collect(),
        ["sensitivity", "--d", "50", "--k", "40", "--trials", "3000"].map(String::from).to_vec(),
        ["toy", "--n", "50", "--k", "40", "--repeats", "2", "--sigma", "1"].map(String::from).to_vec(),
        ["calibrate", "--eps", "1", "--dim", "50", "--k", "40", "--n", "1000", "--batch", "50", "--epochs", "3"]
            .map(String::from)
            .to_vec(),
        vec!["flow", "--source", &a, "--target", &b, "--iters", "40", "--k", "30", "--sigma", "0.3", "--normalize", "max", "--batch", "20"]
            .into_iter()
            .map(String::from)
            .collect(),
    ];
    for (i, args) in runs.into_iter().enumerate() {
        let outs: Vec<PathBuf> = ["x1", "x8", "y8"].iter().map(|s| dir.path().join(format!("{s}-{i}"))).collect();
        let outputs: Vec<(Vec<u8>, Vec<(String, Vec<u8>)>)> = [("1", &outs[0]), ("8", &outs[1]), ("8", &outs[2])]
            .iter()
            .map(|(threads, out)| {
                let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
                full.extend(["--seed", "0x5eed", "--threads", threads, "--out", out.to_str().unwrap()]);
                let o = dpswd(&full);
                assert!(o.status.success(), "{full:?}: {}", String::from_utf8_lossy(&o.stderr));
                (normalize_output(&o.stdout), dir_contents(out))
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "{args:?}: threads 1 vs 8");
        assert_eq!(outputs[1], outputs[2], "{args:?}: repeated run");
    }
}

/// Files (or the single output file) with JSON durations removed.
fn dir_contents(p: &Path) -> Vec<(String, Vec<u8>)> {
    if !p.is_dir() {
        return vec![(String::new(), normalize_output(&std::fs::read(p).unwrap()))];
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(p).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let bytes = std::fs::read(&f).unwrap();
            let name = f.file_name().unwrap().to_string_lossy().into_owned();
            (name, normalize_output(&bytes))
        })
        .collect()
}

fn normalize_output(bytes: &[u8]) -> Vec<u8> {
    match serde_json::from_slice::<Value>(bytes) {
        Ok(mut v) => {
            strip_duration(&mut v);
            serde_json::to_vec(&v).unwrap()
        }
        Err(_) => bytes.to_vec(),
    }
}

#[test]
fn csv_written_by_the_tool_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let m = Matrix::from_row_major(2, 2, vec![1e-300, -0.1, 1.0 / 3.0, 12345.678]).unwrap();
    let p = dir.path().join("m.csv");
    save_csv(&p, &m, Some(&["x", "y"])).unwrap();
    assert_eq!(read_csv_matrix(&p, true).unwrap(), m);
}
