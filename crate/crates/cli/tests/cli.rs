use std::path::{Path, PathBuf};
use std::process::Command;

use acstab::config::ExperimentConfig;
use proptest::prelude::*;
use serde_json::json;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_acstab"));
    c.env_remove("ACSTAB_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

/// Run and return (exit code, stdout, stderr).
fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String, String) {
    let o = bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn tree_config(lambdas: &[f64]) -> serde_json::Value {
    json!({
        "schema_version": 1,
        "experiment": "t",
        "model": "tree",
        "grid": {"energy_min": -3.5, "energy_max": 3.5, "points": 15, "eta": 1e-3, "lambdas": lambdas},
        "pool": {"size": 1000, "burn_in": 20, "sweeps": 10},
        "seed": 11
    })
}

/// Data rows of a CSV as columns of floats, header lines skipped.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (cols, rows)
}

fn all_configs() -> Vec<(&'static str, serde_json::Value)> {
    let mut verify = tree_config(&[0.3]);
    verify["grid"]["points"] = json!(3);
    verify["verify"] = json!({
        "checks": ["free-fixed-point", "jensen", "flu1", "flu2", "log-current", "current-deficit", "equivalence"],
        "tuples": 2000,
        "depth": 5,
        "cases": 20
    });
    let qgraph = json!({
        "schema_version": 1,
        "experiment": "q",
        "model": "qgraph",
        "qgraph": {"bands": 2, "scan_points": 200, "pool": {"size": 300, "burn_in": 10, "sweeps": 4, "batches": 2}},
        "grid": {"energy_min": 0.0, "energy_max": 8.0, "points": 9, "eta": 1e-3, "lambdas": [0.0, 0.2]},
        "seed": 5
    });
    let scatter = json!({
        "schema_version": 1,
        "experiment": "s",
        "model": "scattering",
        "grid": {"energy_min": -3.5, "energy_max": 3.5, "points": 20, "eta": 1e-3, "lambdas": [0.0, 0.1]},
        "pool": {"size": 1000, "burn_in": 20, "sweeps": 5},
        "seed": 9
    });
    vec![
        ("density", tree_config(&[0.0, 0.4])),
        ("phase-sweep", tree_config(&[0.0, 1.0])),
        ("verify", verify),
        ("qgraph", qgraph),
        ("scatter", scatter),
    ]
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn every_command_is_deterministic_and_reruns_from_its_header() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, cfg) in all_configs() {
        let path = write_config(tmp.path(), cmd, &cfg);
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        let (code, _, err) = run(cmd, &path, &a, &["--workers", "1"]);
        assert_eq!(code, 0, "{cmd}: {err}");
        let (code, _, err) = run(cmd, &path, &b, &["--workers", "3"]);
        assert_eq!(code, 0, "{cmd}: {err}");
        let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
        assert!(!fa.is_empty());
        // Only the embedded output directory differs between the two runs.
        let strip = |bytes: &[u8], dir: &Path| String::from_utf8_lossy(bytes).replace(&dir.display().to_string(), "DIR");
        for ((na, xa), (nb, xb)) in fa.iter().zip(&fb) {
            assert_eq!(na, nb);
            assert_eq!(strip(xa, &a), strip(xb, &b), "{cmd}: {na} differs between runs");
        }

        // Re-running from a CSV header reproduces the file byte for byte.
        if let Some((name, bytes)) = fa.iter().find(|(n, _)| n.ends_with(".csv")) {
            let from_header = a.join(name);
            let (code, _, err) = run(cmd, &from_header, &a, &[]);
            assert_eq!(code, 0, "{cmd}: {err}");
            assert_eq!(&std::fs::read(&from_header).unwrap(), bytes, "{cmd}: header rerun");
        }
    }
}

#[test]
fn headers_embed_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "d", &tree_config(&[0.0]));
    let out = tmp.path().join("o");
    assert_eq!(run("density", &path, &out, &["--seed", "77"]).0, 0);
    let csv = out.join("t_density.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().take(3).collect();
    assert!(header[0].starts_with("# acstab density"));
    assert!(header[1].starts_with("# config: {"));
    assert_eq!(header[2], "# seed: 77");
    let cfg = ExperimentConfig::load(&csv).unwrap();
    assert_eq!(cfg.seed, 77);
    assert_eq!(cfg.output.dir, out.display().to_string());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");

    let path = write_config(tmp.path(), "empty", &tree_config(&[]));
    let (code, _, err) = run("density", &path, &out, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("grid.lambdas"), "{err}");

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"schema_version\": 1,\n  \"experiment\": \n}").unwrap();
    let (code, _, err) = run("density", &bad, &out, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");

    let mut cfg = tree_config(&[0.1]);
    cfg["verify"] = json!({"checks": ["flu1", "no-such-check"]});
    let path = write_config(tmp.path(), "unknown", &cfg);
    let (code, _, err) = run("verify", &path, &out, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("verify.checks[1]") && err.contains("no-such-check"), "{err}");

    let path = write_config(tmp.path(), "model", &tree_config(&[0.0]));
    assert_eq!(run("qgraph", &path, &out, &[]).0, 2);

    let mut cfg = tree_config(&[0.0]);
    cfg["tree"] = json!({"sampler": "oracle"});
    let path = write_config(tmp.path(), "sampler", &cfg);
    let (code, _, err) = run("density", &path, &out, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("tree.sampler"), "{err}");

    // A scattering threshold far outside the monotone region of |r| makes
    // every interior cell disagree: the report is written and the exit is 1.
    let mut cfg = tree_config(&[0.1]);
    cfg["grid"]["points"] = json!(9);
    cfg["scattering"] = json!({"threshold": 5.0});
    cfg["verify"] = json!({"checks": ["equivalence"]});
    let path = write_config(tmp.path(), "failing", &cfg);
    let (code, stdout, _) = run("verify", &path, &out, &[]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL equivalence"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("t_verify.json")).unwrap()).unwrap();
    let first = &report["results"][0];
    for key in ["check", "lhs", "rhs", "slack", "stderr", "pass"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(first["pass"], json!(false));

    let (code, _, _) = run("density", &tmp.path().join("missing.json"), &out, &[]);
    assert_eq!(code, 2);
    let o = bin()
        .args(["density", "--config"])
        .arg(tmp.path().join("empty.json"))
        .env("ACSTAB_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn workers_env_var_is_honoured() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "d", &tree_config(&[0.2]));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = bin()
        .args(["density", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&a)
        .env("ACSTAB_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(run("density", &path, &b, &["--workers", "1"]).0, 0);
    let (_, ra) = csv_rows(&a.join("t_density.csv"));
    let (_, rb) = csv_rows(&b.join("t_density.csv"));
    assert_eq!(ra, rb);
}

#[test]
fn free_density_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    for sampler in ["closed-form", "pool"] {
        let mut cfg = tree_config(&[0.0]);
        cfg["tree"] = json!({"sampler": sampler});
        cfg["grid"]["eta"] = json!(0.0);
        if sampler == "pool" {
            cfg["grid"]["eta"] = json!(1e-9);
        }
        let path = write_config(tmp.path(), sampler, &cfg);
        let (code, _, err) = run("density", &path, &out, &[]);
        assert_eq!(code, 0, "{err}");
        let (cols, rows) = csv_rows(&out.join("t_density.csv"));
        assert_eq!(cols, ["E", "lambda", "eta", "density", "stderr"]);
        for r in rows {
            let e = r[0];
            // Root of KΓ² + EΓ + 1 = 0 in the closed upper half plane, divided by π.
            let k = 2.0f64;
            let oracle = if e * e < 4.0 * k {
                (4.0 * k - e * e).sqrt() / (2.0 * k * std::f64::consts::PI)
            } else {
                0.0
            };
            assert!((r[3] - oracle).abs() < 1e-6, "{sampler} E={e}: {} vs {oracle}", r[3]);
        }
    }
}

#[test]
fn phase_sweep_rows_and_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let mut cfg = tree_config(&[0.0, 5.0]);
    cfg["grid"]["points"] = json!(29);
    cfg["grid"]["energy_min"] = json!(-4.2);
    cfg["grid"]["energy_max"] = json!(4.2);
    cfg["pool"] = json!({"size": 2000, "burn_in": 100, "sweeps": 10});
    cfg["output"] = json!({"width": 640, "height": 360});
    let path = write_config(tmp.path(), "p", &cfg);
    let (code, _, err) = run("phase-sweep", &path, &out, &[]);
    assert_eq!(code, 0, "{err}");
    let (cols, rows) = csv_rows(&out.join("t_phase.csv"));
    assert_eq!(cols, ["E", "lambda", "eta", "im_gamma", "stderr", "median_im_gamma"]);
    let edge = 2.0 * 2f64.sqrt();
    let free: Vec<&Vec<f64>> = rows.iter().filter(|r| r[1] == 0.0).collect();
    for r in &free {
        if r[0].abs() < edge - 1e-9 {
            assert!(r[3] > 0.05, "E={} row at λ=0: {}", r[0], r[3]);
        }
    }
    let interior = free.iter().filter(|r| r[0].abs() < 2.0).map(|r| r[5]).fold(f64::INFINITY, f64::min);
    for r in rows.iter().filter(|r| r[1] == 5.0) {
        assert!(r[5] < interior / 10.0, "E={}: typical Im Γ {} at λ=5", r[0], r[5]);
    }

    let svg = std::fs::read_to_string(out.join("t_phase.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("width"), Some("640"));
    assert_eq!(root.attribute("height"), Some("360"));
    assert!(!svg.contains("href") && !svg.contains("<style") && !svg.contains("url("));
    for label in ["−3", "−2√2", "2√2", "3"] {
        assert!(doc.descendants().any(|n| n.text() == Some(label)), "missing guide {label}");
    }
}

#[test]
fn qgraph_bands_scale_with_length() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bands = Vec::new();
    for l in [1.0, 2.0] {
        let out = tmp.path().join(format!("o{l}"));
        let mut cfg = all_configs().remove(3).1;
        cfg["qgraph"]["length"] = json!(l);
        cfg["grid"]["lambdas"] = json!([0.0]);
        let path = write_config(tmp.path(), "q", &cfg);
        let (code, _, err) = run("qgraph", &path, &out, &[]);
        assert_eq!(code, 0, "{err}");
        let (cols, rows) = csv_rows(&out.join("q_bands.csv"));
        assert_eq!(cols, ["n", "k_lo", "k_hi", "E_lo", "E_hi"]);
        let (mcols, _) = csv_rows(&out.join("q_measures.csv"));
        assert_eq!(mcols, ["lambda", "measure", "stderr"]);
        bands.push(rows);
    }
    assert!((bands[0][0][3] - 0.115_489).abs() < 1e-6);
    for (a, b) in bands[0].iter().zip(&bands[1]) {
        assert!((b[3] - a[3] / 4.0).abs() < 1e-12 && (b[4] - a[4] / 4.0).abs() < 1e-12);
    }
}

#[test]
fn verify_examples_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let mut cfg = tree_config(&[0.3]);
    cfg["grid"]["energy_min"] = json!(-1.0);
    cfg["grid"]["energy_max"] = json!(1.0);
    cfg["grid"]["points"] = json!(3);
    cfg["pool"] = json!({"size": 4000, "burn_in": 50, "sweeps": 20});
    cfg["verify"] = json!({"checks": ["radial-identity", "flu1", "flu2"], "cases": 20, "radial_depth": 500});
    let path = write_config(tmp.path(), "v", &cfg);
    let (code, stdout, err) = run("verify", &path, &out, &[]);
    assert_eq!(code, 0, "{stdout}{err}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("t_verify.json")).unwrap()).unwrap();
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 1 + 3 + 3);
    assert!(results[0]["lhs"].as_f64().unwrap() < 1e-12);
    assert!(results.iter().all(|r| r["pass"] == json!(true)));
    assert_eq!(report["seed"], json!(11));
}

fn arb_config() -> impl Strategy<Value = serde_json::Value> {
    (
        2usize..5,
        prop::collection::vec(0.0f64..3.0, 1..5),
        -5.0f64..0.0,
        0.0f64..5.0,
        1usize..50,
        prop::option::of(1e-6f64..1.0),
        any::<u64>(),
        prop::sample::select(vec!["pool", "closed-form", "radial", "finite-tree"]),
        prop::sample::select(vec!["uniform", "two-point"]),
        prop::bool::ANY,
    )
        .prop_map(|(k, lambdas, lo, hi, points, eta, seed, sampler, family, ladder)| {
            let mut grid = json!({"energy_min": lo, "energy_max": hi, "points": points, "lambdas": lambdas});
            if let Some(e) = eta {
                grid["eta"] = json!(e);
            }
            if ladder {
                grid["eta_ladder"] = json!({"start": 0.1, "floor": 1e-4, "tolerance": 1e-5});
            }
            json!({
                "schema_version": 1,
                "experiment": "rt",
                "model": "tree",
                "tree": {"branching": k, "sampler": sampler, "family": {"kind": family},
                         "potential": {"kind": "radial-periodic", "values": [0.5, -0.25]}},
                "grid": grid,
                "seed": seed,
                "output": {"prefix": "x"}
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(value in arb_config()) {
        let cfg = ExperimentConfig::from_json(&value.to_string()).unwrap();
        let text = cfg.to_json_line();
        let again = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_json_line(), text);
    }
}
