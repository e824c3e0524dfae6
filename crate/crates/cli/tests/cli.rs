use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_facred"));
    c.env_remove("FACRED_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn paper_uv() -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples/paper_uv.json");
    p.to_str().unwrap().to_string()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("facred-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--kind", "fkf", "--k", "2", "--g", "2", "--b", "3", "--n", "1", "--mu", "0.5", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["gen", "--kind", "fkf", "--k", "2", "--g", "2", "--b", "3", "--n", "4", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
    let f1 = tmp("g1.json");
    let f2 = tmp("g2.json");
    for f in [&f1, &f2] {
        assert!(run(&["gen", "--kind", "ffkc", "--k", "3", "--n", "2", "--seed", "3", "--out", f.to_str().unwrap()]).status.success());
    }
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn seed_env_fallback() {
    let flag = run(&["gen", "--kind", "zkc", "--n", "3", "--seed", "11"]);
    let env = bin().args(["gen", "--kind", "zkc", "--n", "3"]).env("FACRED_SEED", "11").output().unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn verify_paper_pair() {
    let o = run(&["verify", "--instance", &paper_uv()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["count"], "8");
    assert_eq!(v["oracle"], "8");
    assert_eq!(v["match"], true);
    let c = json(&run(&["count", "--instance", &paper_uv()]));
    assert_eq!(c["count"], "8");
    assert_eq!(json(&run(&["detect", "--instance", &paper_uv()]))["detected"], true);
}

#[test]
fn verify_generated_instances() {
    for (kind, k, pred) in [("fkf", "3", "XOR"), ("fkf", "2", "SUM_TARGET"), ("ffkc", "3", "SUM_ZERO")] {
        let f = tmp(&format!("v-{kind}-{pred}.json"));
        let g = run(&[
            "gen",
            "--kind",
            kind,
            "--k",
            k,
            "--n",
            "3",
            "--g",
            "2",
            "--b",
            "2",
            "--predicate",
            pred,
            "--seed",
            "5",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
        let o = run(&["verify", "--instance", f.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{kind} {pred}");
        assert_eq!(json(&o)["match"], true);
    }
}

#[test]
fn reduce_checks_counts() {
    let f = tmp("r.json");
    run(&["gen", "--kind", "fkf", "--k", "2", "--n", "3", "--g", "2", "--b", "2", "--seed", "9", "--out", f.to_str().unwrap()]);
    let x = tmp("r-xor.json");
    let o = run(&["reduce", "--instance", f.to_str().unwrap(), "--to", "xor", "--check", "--out", x.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["match"], true);
    let s = run(&["reduce", "--instance", x.to_str().unwrap(), "--to", "sum", "--check"]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(json(&s)["count_after"], json(&o)["count_before"]);
    // An fkf instance cannot take the clique-only reductions.
    assert_eq!(run(&["reduce", "--instance", f.to_str().unwrap(), "--to", "pmt"]).status.code(), Some(2));
    let c = tmp("r-ffkc.json");
    run(&[
        "gen",
        "--kind",
        "ffkc",
        "--k",
        "3",
        "--n",
        "3",
        "--g",
        "2",
        "--b",
        "2",
        "--predicate",
        "SUM_ZERO",
        "--seed",
        "4",
        "--out",
        c.to_str().unwrap(),
    ]);
    let p = run(&["reduce", "--instance", c.to_str().unwrap(), "--to", "pmt", "--check"]);
    assert_eq!(p.status.code(), Some(0));
    assert_eq!(json(&p)["match"], true);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["nope"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--kind", "fkf", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--kind", "fkf", "--mu", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--instance", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["lcs", "--strings", "a", "b", "c", "d"]).status.code(), Some(2));
    assert_eq!(run(&["zkc", "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn framework_demo_exact() {
    let o = run(&["framework-demo", "--problem", "fkov2", "--n", "2", "--trials", "3", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["success_frequency"], 1.0);
    assert_eq!(v["matches"], 3);
    assert_eq!(v["trials"].as_array().unwrap().len(), 3);
}

#[test]
fn jobs_do_not_change_outcomes() {
    let strip = |mut v: Value| {
        for t in v["trials"].as_array_mut().unwrap() {
            t.as_object_mut().unwrap().remove("millis");
        }
        (v["trials"].clone(), v["success_frequency"].clone())
    };
    let one = json(&run(&["zkc", "--n", "6", "--r", "216", "--trials", "6", "--seed", "3", "--jobs", "1"]));
    let three = json(&run(&["zkc", "--n", "6", "--r", "216", "--trials", "6", "--seed", "3", "--jobs", "3"]));
    assert_eq!(strip(one), strip(three));
}

#[test]
fn experiment_reports() {
    for args in [
        vec!["zkc", "--n", "6", "--k", "3", "--r", "4", "--method", "small-range", "--trials", "4"],
        vec!["avgov", "--n", "32", "--d", "6", "--trials", "4"],
        vec!["subgraph", "--pattern", "p3", "--n", "3", "--b", "2", "--trials", "2"],
        vec!["subgraph", "--pattern", "0-1,1-2,0-2", "--n", "3", "--trials", "2", "--one-per-partition"],
        vec!["correct-demo", "--trials", "50", "--reps", "5"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let v = json(&o);
        let m = v["matches"].as_u64().unwrap() as f64;
        let t = v["trials"].as_array().unwrap().len() as f64;
        assert_eq!(v["success_frequency"].as_f64().unwrap(), m / t);
        assert_eq!(v["command"][1], args[0]);
    }
}

#[test]
fn min_success_sets_exit_status() {
    // A fully corrupted oracle cannot be corrected.
    let o = run(&["correct-demo", "--trials", "20", "--corruption", "1.0", "--min-success", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(json(&o)["disagreements"].as_array().unwrap().len() > 10);
}

#[test]
fn regex_and_lcs() {
    let o = json(&run(&["regex", "--pattern", "a|b", "--text", "ab"]));
    assert_eq!(o["count"], 2);
    let r = run(&["regex", "--instance", &paper_uv()]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(json(&r)["count"], 8);
    assert_eq!(run(&["regex", "--pattern", "(ab)*", "--text", "ab"]).status.code(), Some(2));
    let l = json(&run(&["lcs", "--strings", "ab", "ba"]));
    assert_eq!((l["weight"].as_u64(), l["count"].as_u64()), (Some(1), Some(2)));
    let w = json(&run(&["lcs", "--strings", "ab", "ba", "--weights", "a=3,b=1"]));
    assert_eq!((w["weight"].as_u64(), w["count"].as_u64()), (Some(3), Some(1)));
}

#[test]
fn bench_reports_kernels() {
    let v = json(&run(&["bench", "--kernel", "regex", "--reps", "2"]));
    assert!(v["kernels"]["regex_count"]["median_us"].as_f64().unwrap() > 0.0);
}
