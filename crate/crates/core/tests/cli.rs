use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn elslab(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_elslab"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ko_check_reports_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = elslab(dir.path(), &["ko-check", "--nl", "power:p=2", "--lower", "1"]);
    assert_eq!(code, 0);
    let v = json(&dir.path().join("ko-check.json"));
    assert_eq!(v["details"]["finite"], true);
    assert!((v["details"]["value"].as_f64().unwrap() - 12f64.sqrt()).abs() < 1e-8);
    for key in ["experiment", "theorem_ref", "pass", "margin", "tolerance"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn divergent_ko_integral_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = elslab(dir.path(), &["ko-check", "--nl", "power:p=1"]);
    assert_eq!(code, 4);
    assert_eq!(json(&dir.path().join("ko-check.json"))["details"]["finite"], false);
}

#[test]
fn els_find_writes_the_exact_profile() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = elslab(
        dir.path(),
        &["--rmax", "100", "els-find", "--nl", "power:p=2", "--pot", "model:alpha=4", "--D", "3", "--u1", "6"],
    );
    assert_eq!(code, 0, "{out}");
    let text = fs::read_to_string(dir.path().join("els-find.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,u,du"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] / (6.0 * v[0] * v[0]) - 1.0).abs() < 1e-4);
    }
    let v = json(&dir.path().join("els-find.json"));
    assert!((v["details"]["du0"].as_f64().unwrap() - 12.0).abs() < 1e-6);
    assert!(v["details"]["trace"].as_array().unwrap().len() > 10);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["shoot", "--nl", "power:p=2", "--pot", "model:alpha=4", "--u0", "6", "--du0", "12", "--rmax", "50"];
    assert_eq!(elslab(a.path(), &args).0, 0);
    assert_eq!(elslab(b.path(), &args).0, 0);
    for f in ["shoot.csv", "shoot.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn validation_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        vec!["shoot", "--nl", "cubic", "--pot", "model:alpha=4", "--u0", "1", "--du0", "0"],
        vec!["els-find", "--nl", "power:p=2", "--pot", "model:alpha=4", "--D", "2", "--u1", "6"],
        vec!["els-find", "--nl", "power:p=2", "--pot", "model:alpha=4"],
        vec!["transform", "--in", "missing.csv", "--alpha", "4"],
    ];
    for args in bad {
        let (code, out) = elslab(dir.path(), &args);
        assert_eq!(code, 2, "{args:?}: {out}");
    }
}

#[test]
fn numerical_failures_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = elslab(dir.path(), &["bounds", "energy", "--nl", "power:p=2", "--pot", "model:alpha=10", "--u1", "72"]);
    assert_eq!(code, 3, "{out}");
    assert!(out.contains("Inapplicable"));
}

#[test]
fn chained_transform_and_gap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (u1, name) in [("2", "a.csv"), ("5", "b.csv")] {
        let (code, _) = elslab(d, &["els-find", "--nl", "power:p=2", "--pot", "model:alpha=4", "--u1", u1, "--out", name]);
        assert_eq!(code, 0);
    }
    let (code, out) = elslab(d, &["transform", "--in", d.join("a.csv").to_str().unwrap(), "--alpha", "4", "--out", "vt.csv"]);
    assert_eq!(code, 0, "{out}");
    assert!(fs::read_to_string(d.join("vt.csv")).unwrap().starts_with("t,v,V,tkV"));
    let (code, out) = elslab(d, &["uniq-gap", "--a", "a.csv", "--b", "b.csv", "--alpha", "4", "--out", "gap.csv"]);
    assert_eq!(code, 0, "{out}");
    assert!(fs::read_to_string(d.join("gap.csv")).unwrap().starts_with("r,gap,envelope,ratio"));
}

#[test]
fn config_files_and_batches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let suite = d.join("suite");
    fs::create_dir(&suite).unwrap();
    fs::write(suite.join("01-ko.cfg"), "experiment = ko-check\nnl = power:p=2\nlower = 1\n").unwrap();
    fs::write(suite.join("02-hrho.cfg"), "experiment = hrho-check\npot = model:alpha=4\n").unwrap();
    fs::write(
        suite.join("03-sweep.cfg"),
        "# flip of the mean-curvature margin\nexperiment = ellipsoid-sweep\na = 0.9\nD = 4\nout = sweep.csv\n",
    )
    .unwrap();
    let summary = d.join("summary.json");
    let (code, out) = elslab(d, &["--json-summary", summary.to_str().unwrap(), "run", suite.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let s = json(&summary);
    assert_eq!(s["runs"].as_array().unwrap().len(), 3);
    assert_eq!(s["pass"], true);
    assert!(d.join("sweep.csv").exists());

    fs::write(suite.join("04-bad.cfg"), "experiment = ko-check\nnl = power:p=2\ncolour = red\n").unwrap();
    let (code, _) = elslab(d, &["run", suite.to_str().unwrap()]);
    assert_eq!(code, 2);

    let single = d.join("single.cfg");
    fs::write(&single, "experiment = bounds:fiddgr\nnl = power:p=2\n").unwrap();
    let (code, out) = elslab(d, &["run", single.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let best = json(&d.join("bounds-fiddgr.json"))["details"]["best_C"].as_f64().unwrap();
    assert!((best / 17.6950319084543 - 1.0).abs() < 1e-4);
}

#[test]
fn boundary_blowup_and_bounds_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, out) = elslab(d, &["bbup", "--f", "power:p=2", "--m", "1", "--R", "1"]);
    assert_eq!(code, 0, "{out}");
    let v = json(&d.join("bbup.json"));
    assert!((v["details"]["kappa"].as_f64().unwrap() / 6.0 - 1.0).abs() < 0.05);
    for sub in ["lower", "gamma", "energy"] {
        let (code, out) = elslab(d, &["bounds", sub, "--nl", "power:p=2", "--pot", "model:alpha=4", "--u1", "6"]);
        assert_eq!(code, 0, "{sub}: {out}");
        let text = fs::read_to_string(d.join(format!("bounds-{sub}.csv"))).unwrap();
        assert!(text.starts_with("r,primal,bound,margin"));
    }
    let (code, out) = elslab(d, &["bounds", "wbeta", "--nl", "power:p=2", "--pot", "model:alpha=4", "--beta", "inf"]);
    assert_eq!(code, 0, "{out}");
}
