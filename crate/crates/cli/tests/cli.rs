use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const T3_ORLIB: &str = "3 3\n1 1 1\n1\n1\n2\n1 2\n2\n2 3\n";

fn gscp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gscp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GSCP_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> PathBuf {
    let out = gscp(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "stdout should be one path: {stdout:?}");
    cwd.join(stdout.trim())
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Trains a small model on a few generated instances; returns the model path.
fn tiny_model(dir: &Path) -> PathBuf {
    ok(
        &["generate", "--type", "2", "--count", "4", "--m-min", "20", "--m-max", "30", "--n-min", "30", "--n-max", "40", "--seed", "3", "--out", "train-data"],
        dir,
    );
    ok(&["train", "--instances", "train-data", "--epochs", "2", "--hidden", "8", "--out", "model"], dir)
}

#[test]
fn generate_writes_instances_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = ok(&["generate", "--type", "2", "--count", "5", "--seed", "7", "--out", "d/"], dir.path());
    assert!(manifest.ends_with("run-manifest.json"));
    let m = json(&manifest);
    assert_eq!(m["command"], "generate");
    assert_eq!(m["seed"], 7);
    let files: Vec<_> = fs::read_dir(dir.path().join("d"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "scp"))
        .collect();
    assert_eq!(files.len(), 5);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 5);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--type", "3", "--count", "2", "--seed", "11", "--out", "a"], dir.path());
    ok(&["generate", "--type", "3", "--count", "2", "--seed", "11", "--out", "b"], dir.path());
    for e in fs::read_dir(dir.path().join("a")).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap();
        let other = dir.path().join("b").join(name);
        if name == "run-manifest.json" {
            let (mut x, mut y) = (json(&p), json(&other));
            // the manifests differ only in the output directory
            x["args"]["generate"]["common"]["out"] = "".into();
            y["args"]["generate"]["common"]["out"] = "".into();
            assert_eq!(x, y);
        } else {
            assert_eq!(fs::read(&p).unwrap(), fs::read(&other).unwrap());
        }
    }
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gscp"))
        .args(["generate", "--type", "1", "--out", "e"])
        .current_dir(dir.path())
        .env("GSCP_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&dir.path().join("e/run-manifest.json"))["seed"], 42);
}

#[test]
fn config_file_defaults_and_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "# defaults\ntype = 2\ncount = 3\nseed = 5\n").unwrap();
    let m = json(&ok(&["generate", "--config", "run.cfg", "--out", "c1"], dir.path()));
    assert_eq!((m["seed"].as_u64(), m["outputs"].as_array().unwrap().len()), (Some(5), 3));
    let m = json(&ok(&["generate", "--config", "run.cfg", "--count", "1", "--seed", "6", "--out", "c2"], dir.path()));
    assert_eq!((m["seed"].as_u64(), m["outputs"].as_array().unwrap().len()), (Some(6), 1));
    fs::write(dir.path().join("bad.cfg"), "nonsense = 1\n").unwrap();
    let out = gscp(&["generate", "--config", "bad.cfg", "--type", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nonsense"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let usage = gscp(&["generate", "--type", "9"], dir.path());
    assert_eq!(usage.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("--type"));
    assert!(usage.stdout.is_empty());
    let domain = gscp(&["export-lp", "--instance", "missing.scp"], dir.path());
    assert_eq!(domain.status.code(), Some(1));
    assert!(domain.stdout.is_empty());
    fs::write(dir.path().join("t3.txt"), T3_ORLIB).unwrap();
    let no_k = gscp(&["baseline", "--instance", "t3.txt", "--algo", "random"], dir.path());
    assert_eq!(no_k.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_k.stderr).contains("--k"));
}

#[test]
fn help_on_every_command() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["generate", "label", "train", "solve", "baseline", "bench", "features", "export-lp", "convert"] {
        let out = gscp(&[cmd, "--help"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--out") && text.contains("--seed") && text.contains("--config"), "{cmd}");
    }
    assert!(gscp(&["--help"], dir.path()).status.success());
}

#[test]
fn t3_lp_export_and_conversion() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t3.txt"), T3_ORLIB).unwrap();
    let lp = fs::read_to_string(ok(&["export-lp", "--instance", "t3.txt", "--out", "lp"], dir.path())).unwrap();
    assert!(lp.lines().any(|l| l.trim() == "r2: x2 + x3 >= 1"), "{lp}");
    assert!(lp.lines().any(|l| l.trim() == "Binary"));
    let native = ok(&["convert", "--from", "orlib", "--to", "native", "--in", "t3.txt", "--out", "n"], dir.path());
    let v = json(&native);
    assert_eq!((v["m"].as_u64(), v["n"].as_u64()), (Some(3), Some(3)));
    let back = ok(&["convert", "--from", "native", "--to", "orlib", "--in", native.to_str().unwrap(), "--out", "o"], dir.path());
    let nums = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    assert_eq!(nums(&fs::read_to_string(back).unwrap()), nums(T3_ORLIB));
    let csv = fs::read_to_string(ok(&["features", "--instance", "t3.txt", "--out", "f"], dir.path())).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1 + 3 + 3);
}

#[test]
fn t3_solve_reaches_target() {
    let dir = tempfile::tempdir().unwrap();
    let model = tiny_model(dir.path());
    fs::write(dir.path().join("t3.txt"), T3_ORLIB).unwrap();
    let report = ok(
        &["solve", "--model", model.to_str().unwrap(), "--instance", "t3.txt", "--target-obj", "2", "--report", "r/"],
        dir.path(),
    );
    let r = json(&report);
    assert_eq!(r["objective"], 2);
    assert_eq!(r["forward_count"], 1);
    let labels = ok(&["label", "--instances", "t3.txt", "--out", "l"], dir.path());
    let l = json(&fs::read_dir(labels.parent().unwrap()).unwrap().map(|e| e.unwrap().path()).find(|p| p.to_string_lossy().ends_with(".labels.json")).unwrap());
    assert_eq!(l["labels"], serde_json::json!([1, 1, 0]));
    for algo in ["greedy", "lagrangian", "exact"] {
        let b = json(&ok(&["baseline", "--instance", "t3.txt", "--algo", algo, "--out", "b"], dir.path()));
        assert!(b["result"]["objective"].as_i64().unwrap() >= 2, "{algo}");
    }
    let b = json(&ok(&["baseline", "--instance", "t3.txt", "--algo", "random", "--k", "100", "--out", "b"], dir.path()));
    assert_eq!(b["result"]["objective"], 2);
}

fn bench_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let timing = ["speedup", "pipeline_ms", "baseline_ms"];
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !timing.contains(&header[i].as_str())).collect();
    let mut rows = vec![keep.iter().map(|&i| header[i].clone()).collect()];
    for rec in r.records() {
        let rec = rec.unwrap();
        rows.push(keep.iter().map(|&i| rec[i].to_string()).collect());
    }
    rows
}

#[test]
fn bench_is_deterministic_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let model = tiny_model(dir.path());
    ok(
        &["generate", "--type", "1", "--count", "4", "--m-min", "20", "--m-max", "30", "--n-min", "30", "--n-max", "40", "--seed", "8", "--out", "suite"],
        dir.path(),
    );
    let m = model.to_str().unwrap();
    let a = ok(&["bench", "--model", m, "--instances", "suite", "--seed", "1", "--out", "b1"], dir.path());
    let b = ok(&["bench", "--model", m, "--instances", "suite", "--seed", "1", "--workers", "2", "--out", "b2"], dir.path());
    assert_eq!(
        fs::read_to_string(&a).unwrap().lines().next().unwrap(),
        "instance,type,m,n,density,objective,optimal,size_reduction,speedup,pipeline_ms,baseline_ms,rounds,forward_count"
    );
    let rows = bench_rows(&a);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows, bench_rows(&b));
    let all = ok(&["bench", "--model", m, "--instances", "suite", "--experiment", "all", "--density-m", "20", "--density-n", "30", "--density-buckets", "0.2:0.3", "--out", "b3"], dir.path());
    assert!(all.ends_with("run-manifest.json"));
    assert_eq!(json(&all)["outputs"].as_array().unwrap().len(), 5);
}

#[test]
fn converts_full_size_orlib_file() {
    // 200 rows, 1000 columns, costs on ten per line as in the OR-Library files
    let (m, n) = (200usize, 1000usize);
    let mut text = format!(" {m} {n}\n");
    for chunk in (0..n).collect::<Vec<_>>().chunks(10) {
        text += &chunk.iter().map(|j| format!(" {}", 1 + j % 97)).collect::<String>();
        text += "\n";
    }
    for i in 0..m {
        let cols: Vec<usize> = (0..n).filter(|j| (i * 7 + j * 13) % 50 == 0 || j % m == i).collect();
        text += &format!(" {}\n", cols.len());
        text += &cols.iter().map(|j| format!(" {}", j + 1)).collect::<String>();
        text += "\n";
    }
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("scp6x.txt"), &text).unwrap();
    let native = ok(&["convert", "--from", "orlib", "--to", "native", "--in", "scp6x.txt", "--out", "n"], dir.path());
    let v = json(&native);
    assert_eq!((v["m"].as_u64(), v["n"].as_u64()), (Some(200), Some(1000)));
    let back = ok(&["convert", "--from", "native", "--to", "orlib", "--in", native.to_str().unwrap(), "--out", "o"], dir.path());
    let nums = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    assert_eq!(nums(&fs::read_to_string(back).unwrap()), nums(&text));
}
