use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HEADER: &str =
    "respondent_id,group,subject_id,age,q1,q1_na,q2,q3,q4,q5,q6,q7,q8,q9,own_child\n";

fn peerde(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peerde"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("PEERDE_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = peerde(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    peerde(dir, args).status.code().expect("exit code")
}

fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    root.join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn without_timestamp(mut v: Value) -> Value {
    v["manifest"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn optimize_sphere_converges() {
    let dir = TempDir::new().unwrap();
    let v = ok(
        dir.path(),
        &[
            "optimize",
            "--fn",
            "sphere",
            "--dim",
            "10",
            "--np",
            "40",
            "--f",
            "0.8",
            "--cr",
            "0.9",
            "--strategy",
            "rand1",
            "--gens",
            "1000",
            "--seed",
            "7",
        ],
    );
    assert!(v["result"]["run"]["best_fitness"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["manifest"]["command"], "optimize");
    assert_eq!(v["manifest"]["seed"], 7);
    assert_eq!(v["manifest"]["config"]["strategy"], "rand1");
    assert_eq!(v["manifest"]["version"], env!("CARGO_PKG_VERSION"));

    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("generation,best_fitness"));
    assert_eq!(lines.count(), 1001);
    let on_disk: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("optimize.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk, v);
}

#[test]
fn optimize_zero_generations_has_one_row() {
    let dir = TempDir::new().unwrap();
    let v = ok(dir.path(), &["optimize", "--gens", "0", "--seed", "1"]);
    assert_eq!(v["result"]["run"]["generations"], 0);
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn optimize_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["optimize", "--fn", "nosuch"]), 2);
    assert_eq!(code(d, &["optimize", "--cr", "1.5"]), 2);
    assert_eq!(
        code(d, &["optimize", "--np", "4", "--strategy", "best2"]),
        2
    );
    assert_eq!(code(d, &["optimize", "--strategy", "best3"]), 2);
    assert_eq!(code(d, &["optimize", "--dim", "0"]), 2);
    assert_eq!(code(d, &["optimize", "--gens", "minus"]), 2);
}

#[test]
fn report_reproduces_hand_counts() {
    let dir = TempDir::new().unwrap();
    let v = ok(dir.path(), &["report", "--input", &fixture("report8.csv")]);
    let r = &v["result"];
    assert_eq!(r["records"], 8);
    assert_eq!(r["rejections"].as_array().unwrap().len(), 0);

    let counts = |group: &Value, q: &str| -> (u64, Vec<u64>) {
        let slice = r["slices"]
            .as_array()
            .unwrap()
            .iter()
            .find(|s| &s["group"] == group)
            .unwrap();
        let t = slice["thresholds"]
            .as_array()
            .unwrap()
            .iter()
            .find(|t| t["question"] == q)
            .unwrap();
        let c = t["entries"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["count"].as_u64().unwrap())
            .collect();
        (t["n"].as_u64().unwrap(), c)
    };
    assert_eq!(counts(&Value::Null, "Q8"), (8, vec![6, 5, 4, 2]));
    assert_eq!(
        counts(&Value::from("elementary_child"), "Q8"),
        (5, vec![4, 3, 2, 1])
    );
    assert_eq!(counts(&Value::from("parent"), "Q1"), (2, vec![2, 2, 2, 1]));
    // No student rows: that slice is omitted.
    assert_eq!(r["slices"].as_array().unwrap().len(), 3);
}

#[test]
fn report_partial_and_failing_inputs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let body = format!(
        "{HEADER}r1,child,s1,12,1,0,1,1,1,1,1,1,1.7,F,0\nr1,child,s2,12,1,0,1,1,1,1,1,1,1,F,0\nr2,child,s1,12,2,0,2,2,2,2,2,2,2,M,0\n"
    );
    let one_bad = write(d, "one_bad.csv", &body);
    let v = ok(d, &["report", "--input", &one_bad]);
    let rej = v["result"]["rejections"].as_array().unwrap();
    assert_eq!(rej.len(), 1);
    assert_eq!(rej[0]["line"], 2);

    let empty = write(d, "empty.csv", HEADER);
    assert_eq!(code(d, &["report", "--input", &empty]), 3);
    assert_eq!(
        code(d, &["report", "--input", &one_bad, "--group", "parent"]),
        3
    );
    assert_eq!(
        code(d, &["report", "--input", &one_bad, "--group", "teacher"]),
        2
    );
    let missing = d.join("missing.csv").to_string_lossy().into_owned();
    assert_eq!(code(d, &["report", "--input", &missing]), 1);
    let bad_header = write(d, "bad_header.csv", "id,group\n");
    assert_eq!(code(d, &["report", "--input", &bad_header]), 2);
    assert_eq!(code(d, &["report"]), 2);
}

fn export(dir: &Path, seed: &str, subjects: &str) -> String {
    ok(
        dir,
        &["export-fixture", "--seed", seed, "--subjects", subjects],
    );
    dir.join("fixture.csv").to_string_lossy().into_owned()
}

#[test]
fn fit_detects_item_effects() {
    let dir = TempDir::new().unwrap();
    let input = export(dir.path(), "3", "80");
    let v = ok(
        dir.path(),
        &[
            "fit",
            "--input",
            &input,
            "--model",
            "M1",
            "--criterion",
            "loglik",
            "--seed",
            "1",
        ],
    );
    let fit = &v["result"]["fit"];
    assert!(fit["lr_p_value"].as_f64().unwrap() < 0.05);
    assert_eq!(fit["spec"]["id"], "M1");
    assert_eq!(fit["de"]["seed"], 1);
    assert!(fit["cutpoints"].as_array().unwrap().len() >= 2);
    // np defaults to ten per parameter, at least 20.
    let dim =
        fit["coefficients"].as_array().unwrap().len() + fit["cutpoints"].as_array().unwrap().len();
    assert_eq!(
        fit["de"]["np"].as_u64().unwrap() as usize,
        (10 * dim).max(20)
    );
}

#[test]
fn fit_null_sex_effect_is_not_significant() {
    // One self-report per subject keeps the observations independent.
    let dir = TempDir::new().unwrap();
    let all = fs::read_to_string(export(dir.path(), "11", "300")).unwrap();
    let own: String = all
        .lines()
        .filter(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[0] == "respondent_id" || f[0] == f[2]
        })
        .map(|l| format!("{l}\n"))
        .collect();
    let input = write(dir.path(), "self.csv", &own);
    let v = ok(
        dir.path(),
        &["fit", "--input", &input, "--model", "M3", "--seed", "2"],
    );
    let fit = &v["result"]["fit"];
    assert!(
        fit["lr_p_value"].as_f64().unwrap() > 0.1,
        "{}",
        fit["lr_p_value"]
    );
    assert_eq!(fit["n"], 300);
}

#[test]
fn fit_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = export(dir.path(), "5", "60");
    let args = [
        "fit",
        "--input",
        &input,
        "--model",
        "M3",
        "--criterion",
        "auc",
        "--seed",
        "4",
    ];
    let a = without_timestamp(ok(dir.path(), &args));
    let b = without_timestamp(ok(dir.path(), &args));
    assert_eq!(a, b);
    assert_eq!(a["result"]["fit"]["criterion"], "neg_auc");
}

#[test]
fn fit_failure_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let all_female = format!(
        "{HEADER}r1,child,s1,12,1,0,1,1,1,1,1,1,1,F,0\nr2,child,s1,12,2,0,2,2,2,2,2,2,2,F,0\nr3,child,s2,13,3,0,3,3,3,3,3,3,3,F,0\n"
    );
    let input = write(d, "female.csv", &all_female);
    assert_eq!(code(d, &["fit", "--input", &input, "--model", "M3"]), 4);
    assert_eq!(code(d, &["fit", "--input", &input, "--model", "M6"]), 3);
    assert_eq!(code(d, &["fit", "--input", &input, "--model", "M9"]), 2);
    assert_eq!(
        code(
            d,
            &[
                "fit",
                "--input",
                &input,
                "--model",
                "M1",
                "--criterion",
                "auc"
            ]
        ),
        2
    );
    assert_eq!(code(d, &["fit", "--input", &input, "--model", "custom"]), 2);
    assert_eq!(
        code(
            d,
            &[
                "fit",
                "--input",
                &input,
                "--model",
                "M3",
                "--threshold",
                "2.0"
            ]
        ),
        2
    );
}

#[test]
fn fit_custom_binary_model() {
    let dir = TempDir::new().unwrap();
    let input = export(dir.path(), "8", "60");
    let v = ok(
        dir.path(),
        &[
            "fit",
            "--input",
            &input,
            "--model",
            "custom",
            "--response",
            "Q8",
            "--threshold",
            "2.0",
            "--regressors",
            "Q1,Q2",
            "--group",
            "parent",
            "--gens",
            "300",
        ],
    );
    let fit = &v["result"]["fit"];
    assert_eq!(fit["family"], "binary_logit");
    assert_eq!(fit["coefficients"].as_array().unwrap().len(), 3);
    assert_eq!(fit["n"], 60);
}

#[test]
fn simulate_noiseless_is_exact() {
    let dir = TempDir::new().unwrap();
    let v = ok(
        dir.path(),
        &[
            "simulate",
            "--bias-zero",
            "--noise",
            "0",
            "--reps",
            "3",
            "--subjects",
            "50",
        ],
    );
    for r in v["result"]["replications"].as_array().unwrap() {
        for k in ["self_report", "parent", "peer_median"] {
            assert_eq!(r["errors"][k], 0.0);
        }
    }
    let csv = fs::read_to_string(dir.path().join("replications.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn simulate_reports_consistent_win_rates() {
    let dir = TempDir::new().unwrap();
    let v = ok(dir.path(), &["simulate", "--reps", "100", "--seed", "42"]);
    let res = &v["result"];
    let reps = res["replications"].as_array().unwrap();
    assert_eq!(reps.len(), 100);
    let wins = reps
        .iter()
        .filter(|r| r["errors"]["peer_median"].as_f64() < r["errors"]["self_report"].as_f64())
        .count();
    assert_eq!(
        res["win_rates"]["peer_over_self"].as_f64().unwrap(),
        wins as f64 / 100.0
    );
    assert_eq!(res["bias"]["self_underreport_prob"], 0.365);
    assert_eq!(res["profile"]["n_subjects"], 300);
    assert_eq!(reps[5]["seed"], 47);
}

#[test]
fn simulate_validation() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["simulate", "--reps", "0"]), 2);
    assert_eq!(
        code(
            d,
            &[
                "simulate",
                "--reps",
                "1",
                "--bias-zero",
                "--self-under",
                "0.2"
            ]
        ),
        2
    );
    assert_eq!(
        code(
            d,
            &[
                "simulate",
                "--reps",
                "1",
                "--parent-under",
                "0.7",
                "--parent-over",
                "0.7"
            ]
        ),
        2
    );
    assert_eq!(
        code(d, &["simulate", "--reps", "1", "--truth-weights", "1,1,1"]),
        2
    );
    assert_eq!(code(d, &["simulate", "--reps", "1", "--peers", "0"]), 2);
}

#[test]
fn same_seed_same_fixture_bytes() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let fa = fs::read(export(a.path(), "9", "40")).unwrap();
    let fb = fs::read(export(b.path(), "9", "40")).unwrap();
    assert_eq!(fa, fb);
    let truth = fs::read_to_string(a.path().join("truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 41);
    let v = ok(
        a.path(),
        &[
            "report",
            "--input",
            &a.path().join("fixture.csv").to_string_lossy(),
        ],
    );
    assert_eq!(v["result"]["records"], 40 * 7);
}

#[test]
fn config_file_precedence() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "peerde.toml",
        "np = 30\ngens = 5\nseed = 12\nstrategy = \"best1\"\n",
    );

    let v = ok(d, &["optimize", "--config", &cfg, "--gens", "3"]);
    let echo = &v["manifest"]["config"];
    assert_eq!(
        (echo["np"].as_u64(), echo["gens"].as_u64()),
        (Some(30), Some(3))
    );
    assert_eq!(echo["strategy"], "best1");
    assert_eq!(echo["cr"], 0.9);
    assert_eq!(v["manifest"]["seed"], 12);
    assert_eq!(v["result"]["run"]["generations"], 3);

    let out = Command::new(env!("CARGO_BIN_EXE_peerde"))
        .args(["optimize", "--out"])
        .arg(d)
        .env("PEERDE_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["run"]["generations"], 5);

    let typo = write(d, "typo.toml", "nnp = 30\n");
    assert_eq!(code(d, &["optimize", "--config", &typo]), 2);
    let wrong_type = write(d, "wrong.toml", "np = \"thirty\"\n");
    assert_eq!(code(d, &["optimize", "--config", &wrong_type]), 2);
    let missing = d.join("none.toml").to_string_lossy().into_owned();
    assert_eq!(code(d, &["optimize", "--config", &missing]), 1);
}
