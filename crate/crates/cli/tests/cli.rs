//! End-to-end tests of the `dlog` binary: artifact caching, stale-cache
//! refusal, machine-readable errors, determinism and the verify commands.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dlog"))
}

fn tmpdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("dlog-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> (Value, Output) {
    let out = bin().args(args).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("non-JSON output for {args:?}: {e}\n{out:?}"));
    (v, out)
}

const Q4: [&str; 6] = ["--p", "2", "--n", "2", "--k", "3"];

#[test]
fn pipeline_roundtrip_and_caching() {
    let dir = tmpdir("roundtrip");
    let d = dir.to_str().unwrap();
    let with_dir = |rest: &[&str]| {
        let mut a: Vec<&str> = Q4.to_vec();
        a.extend_from_slice(&["--out-dir", d]);
        a.extend_from_slice(rest);
        a.iter().map(|s| s.to_string()).collect::<Vec<_>>()
    };

    let (setup1, o) = run(&with_dir(&["setup"]).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert!(o.status.success());
    assert!(setup1["setup_hash"].is_string());
    let bytes1 = std::fs::read(dir.join("setup.json")).unwrap();

    // re-running is idempotent: the cached artifact is reused byte-for-byte
    let (setup2, _) = run(&with_dir(&["setup"]).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(setup1, setup2);
    assert_eq!(bytes1, std::fs::read(dir.join("setup.json")).unwrap());

    let (cos, _) = run(&with_dir(&["cosets"]).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(cos["count"], cos["expected"]);
    assert_eq!(cos["count"], 68);

    let (rel, _) = run(&with_dir(&["relations"]).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(rel["width"], 17);
    assert_eq!(rel["setup_hash"], setup1["setup_hash"]);

    let (lin, _) = run(&with_dir(&["linlog"]).iter().map(|s| s.as_str()).collect::<Vec<_>>());
    assert_eq!(lin["order"], 4095);

    let (dl, o) = run(&with_dir(&["dlog", "--target", "x^2 + x + 1"])
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>());
    assert!(o.status.success());
    assert_eq!(dl["verified"], true);
    let log = dl["log"].as_u64().unwrap();
    assert!(log < 4095);

    for f in ["setup.json", "cosets.json", "relations.json", "dlogs.json"] {
        assert!(dir.join(f).exists(), "missing artifact {f}");
    }
}

#[test]
fn stale_cache_is_refused() {
    let dir = tmpdir("stale");
    let d = dir.to_str().unwrap();
    let (_, o) = run(&["--p", "2", "--n", "2", "--k", "3", "--out-dir", d, "setup"]);
    assert!(o.status.success());
    // same directory, different seed: the cached setup must be rejected
    let (err, o) =
        run(&["--p", "2", "--n", "2", "--k", "3", "--seed", "1", "--out-dir", d, "setup"]);
    assert!(!o.status.success());
    assert_eq!(err["error"]["kind"], "StaleArtifact");
}

#[test]
fn parse_errors_are_machine_readable() {
    let dir = tmpdir("parse-error");
    let d = dir.to_str().unwrap();
    let (err, o) = run(&[
        "--p", "2", "--n", "2", "--k", "3", "--out-dir", d, "dlog", "--target", "x^2 + bogus",
    ]);
    assert!(!o.status.success());
    assert_eq!(err["error"]["kind"], "Parse");
    assert!(err["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn impossible_parameters_error_cleanly() {
    let dir = tmpdir("impossible");
    let d = dir.to_str().unwrap();
    // q=3, k=2: no setup satisfies the cofactor constraints
    let (err, o) = run(&["--p", "3", "--n", "1", "--k", "2", "--out-dir", d, "setup"]);
    assert!(!o.status.success());
    assert_eq!(err["error"]["kind"], "SearchExhausted");
}

#[test]
fn determinism_across_directories() {
    let d1 = tmpdir("det1");
    let d2 = tmpdir("det2");
    for d in [&d1, &d2] {
        for cmd in ["cosets", "linlog"] {
            let (_, o) = run(&[
                "--p", "2", "--n", "2", "--k", "3", "--out-dir", d.to_str().unwrap(), cmd,
            ]);
            assert!(o.status.success());
        }
    }
    for f in ["setup.json", "cosets.json", "relations.json", "dlogs.json"] {
        assert_eq!(
            std::fs::read(d1.join(f)).unwrap(),
            std::fs::read(d2.join(f)).unwrap(),
            "artifact {f} differs between identical runs"
        );
    }
}

#[test]
fn verify_commands() {
    // one directory per parameter set: artifacts from different parameters
    // may not share a directory (the stale check enforces this)
    let d3 = tmpdir("verify-q3");
    let d3 = d3.to_str().unwrap();
    let d4 = tmpdir("verify-q4");
    let d4 = d4.to_str().unwrap();

    let (t4, o) = run(&["--p", "3", "--n", "1", "--k", "1", "--out-dir", d3, "verify", "theorem4"]);
    assert!(o.status.success());
    assert_eq!(t4["pass"], true);

    let (h1, o) = run(&[
        "--p", "2", "--n", "2", "--k", "3", "--out-dir", d4, "verify", "heuristic1",
    ]);
    assert!(o.status.success());
    assert_eq!(h1["heuristic1"]["conforms"], true);

    let (psi, o) = run(&["--p", "3", "--n", "1", "--k", "1", "--out-dir", d3, "verify", "psi2"]);
    assert!(o.status.success());
    assert_eq!(psi["psi2"]["surjective"], true);

    let (quo, o) =
        run(&["--p", "3", "--n", "1", "--k", "1", "--out-dir", d3, "verify", "quotient"]);
    assert!(o.status.success());
    assert_eq!(quo["quotient"]["matches_formula"], true);
}

#[test]
fn descent_classifies_and_logs() {
    let dir = tmpdir("descent");
    let d = dir.to_str().unwrap();
    let (dl, o) = run(&[
        "--p", "2", "--n", "2", "--k", "3", "--out-dir", d, "descent", "--target",
        "x^2 + x + (1+g)",
    ]);
    assert!(o.status.success());
    assert_eq!(dl["status"], "Clean");
    assert!(dl["log"].as_u64().is_some());
    assert!(dir.join("descent-trace.json").exists());
}

#[test]
fn bench_reports_timings() {
    let dir = tmpdir("bench");
    let d = dir.to_str().unwrap();
    let (b, o) = run(&["--p", "2", "--n", "2", "--k", "3", "--out-dir", d, "bench"]);
    assert!(o.status.success());
    for key in ["cosets_ms", "table_ms", "dlog_ms"] {
        assert!(b[key].as_f64().unwrap() > 0.0, "missing timing {key}");
    }
}
