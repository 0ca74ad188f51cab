use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;

use hvbell::records::{read_records, write_records};
use hvbell::report::{sha256_hex, CheckReport, SearchReport, SimulateReport};
use hvbell_core::simulate::Pair;
use hvbell_core::{RecordSequence, Spin};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hvbell"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SATURATING: &str = r#"
schema = 1
mode = "deterministic"
hidden = 2
distributions = { ab = ["1/2", "1/2"], cb = ["1/2", "1/2"], ac = ["1/2", "1/2"] }
observables = { a = [1, -1], b = [1, -1], c = [-1, 1] }
"#;

const SIMULATE_DET: &str = r#"
schema = 1
seed = 11
n = 300
[observables]
a = [1, -1, 1]
b = [1, 1, -1]
c = [-1, 1, 1]
[drift]
kind = "stationary"
base = ["1/2", "1/4", "1/4"]
[drift_overrides.AC]
kind = "random-walk"
base = ["1/3", "1/3", "1/3"]
step = 0.05
[output]
records = "records.csv"
ground_truth = "truth.csv"
report = "report.json"
"#;

const SIMULATE_STOCH: &str = r#"
schema = 1
numeric = "rational"
seed = 5
n = 250
[observables]
a = [[1, -1], [-1, -1]]
b = [[1, 1], [-1, 1]]
c = [[-1, 1], [1, 1]]
[drift]
kind = "regime-switch"
regimes = [["3/4", "1/4"], ["1/4", "3/4"]]
switch_probability = 0.01
[device]
kind = "correlated"
states = ["1/2", "1/2"]
coupling = 0.9
[output]
records = "records.csv"
report = "report.json"
"#;

fn adversarial_search(eps: &str) -> String {
    format!(
        r#"
schema = 1
seed = 2
[problem]
mode = "deterministic"
hidden = 2
epsilon = {eps}
anchor = ["1/2", "1/2"]
[output]
report = "search.json"
records = "adversarial.csv"
records_per_pair = 1000
"#
    )
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn check_saturating_instance_has_zero_slack() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.toml", SATURATING);
    let out = run(&["check", s(&inst)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
    let t1 = report.evaluated.iter().find(|r| r.theorem == "T1").expect("T1 evaluated");
    assert_eq!(serde_json::to_value(&t1.lhs).unwrap(), "2");
    assert_eq!(serde_json::to_value(&t1.rhs).unwrap(), "2");
    assert_eq!(serde_json::to_value(&t1.slack).unwrap(), "0");
    assert!(report.proof_chain.unwrap().consistent);
    assert_eq!(report.header.input_sha256.unwrap(), sha256_hex(SATURATING.as_bytes()));
}

#[test]
fn simulate_is_byte_identical_across_repeats() {
    for config in [SIMULATE_DET, SIMULATE_STOCH] {
        let mut seen: Option<Vec<Vec<u8>>> = None;
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let cfg = write(dir.path(), "sim.toml", config);
            let out = run(&["simulate", s(&cfg)]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            let files: Vec<Vec<u8>> = ["records.csv", "report.json"]
                .iter()
                .map(|f| std::fs::read(dir.path().join(f)).unwrap())
                .collect();
            if let Some(prev) = &seen {
                assert_eq!(prev, &files);
            }
            seen = Some(files);
        }
    }
}

#[test]
fn simulate_report_is_reloadable_and_check_reproduces_it() {
    for config in [SIMULATE_DET, SIMULATE_STOCH] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "sim.toml", config);
        assert_eq!(code(&run(&["simulate", s(&cfg)])), 0);
        let report_path = dir.path().join("report.json");
        let report: SimulateReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
        assert_eq!(report.header.input_sha256.as_deref(), Some(sha256_hex(config.as_bytes()).as_str()));
        assert!(report.epsilon.underestimate);

        let out = run(&["check", s(&report_path)]);
        let check: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
        let rows = check.reproduced.expect("input was a report");
        assert_eq!(rows.len(), report.reports.len());
        for r in &rows {
            assert_eq!(r.expected, r.actual, "{}", r.theorem);
            assert!(r.values_match, "{}", r.theorem);
        }
        let violated = report.reports.iter().any(|r| !r.holds());
        assert_eq!(code(&out), if violated { 3 } else { 0 });
    }
}

#[test]
fn records_never_carry_hidden_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", SIMULATE_DET);
    assert_eq!(code(&run(&["simulate", s(&cfg)])), 0);
    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(records.starts_with("index,pair,u,v\n"));
    let truth = std::fs::read_to_string(dir.path().join("truth.csv")).unwrap();
    assert!(truth.starts_with("index,pair,hidden,device_u,device_v\n"));
    assert_eq!(records.lines().count(), truth.lines().count());
}

#[test]
fn analyze_adversarial_records_flags_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "search.toml", &adversarial_search("0.25"));
    let out = run(&["search", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let search: SearchReport = serde_json::from_value(json(&dir.path().join("search.json"))).unwrap();
    assert!((search.result.unwrap().violation - 0.5).abs() < 1e-9);

    let out = run(&["analyze", s(&dir.path().join("adversarial.csv"))]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["classical"]["verdict"], "violated");
    assert_eq!(v["classical"]["slack"], "-1/2");
    assert_eq!(v["required_epsilon"], "1/4");
    assert_eq!(v["epsilon_lower_bound"], "1/4");
}

#[test]
fn check_reproduces_search_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "search.toml", &adversarial_search("0.1"));
    assert_eq!(code(&run(&["search", s(&cfg)])), 0);
    let out = run(&["check", s(&dir.path().join("search.json"))]);
    // The classical bound is violated by design; the corrected one holds.
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let check: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
    let rows = check.reproduced.unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.values_match && r.expected == r.actual));
    assert!(check.evaluated.iter().any(|r| r.theorem == "T2" && r.holds()));
}

#[test]
fn hunt_on_small_grid_reports_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "hunt.toml",
        r#"
schema = 1
seed = 9
[hunt]
target = "T4-proven"
dims = [[2, 2]]
epsilons = [0.1]
epsilon_primes = [0.05]
random_instances = 200
[output]
report = "hunt.json"
"#,
    );
    let out = run(&["search", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("hunt.json"));
    assert_eq!(v["hunt"]["found"], false);
    assert_eq!(v["hunt"]["random_checked"], 200);
}

#[test]
fn converge_and_singlet_emit_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "conv.toml",
        r#"
schema = 1
seed = 1
sizes = [100, 1000]
trials = 50
[drift]
kind = "stationary"
base = [0.5, 0.5]
"#,
    );
    let out = run(&["converge", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["verdict"], "converging");

    let out = run(&["singlet", "--angles", "0,0,3.141592653589793"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["reference"]["required_epsilon"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = run(&["singlet", "--grid", "15", "--angles", "-1,0,1"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["grid"]["best"]["required_epsilon"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_key = write(dir.path(), "a.toml", &format!("{SATURATING}\ncolour = 1\n"));
    let bad_schema = write(dir.path(), "b.toml", &SATURATING.replace("schema = 1", "schema = 9"));
    let off_simplex = write(dir.path(), "c.toml", &SATURATING.replace(r#"ac = ["1/2", "1/2"]"#, r#"ac = ["1/2", "1/3"]"#));
    let bad_spin = write(dir.path(), "d.toml", &SATURATING.replace("c = [-1, 1]", "c = [-1, 0]"));
    for p in [&unknown_key, &bad_schema, &off_simplex, &bad_spin] {
        let out = run(&["check", s(p)]);
        assert_eq!(code(&out), 1, "{}", p.display());
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(code(&run(&["check", "/nonexistent/file.toml"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    let records = write(dir.path(), "r.csv", "index,pair,u,v\n1,AB,+1,-1\n");
    assert_eq!(code(&run(&["analyze", s(&records)])), 1, "missing pairs");
}

#[test]
fn stochastic_check_skips_inapplicable_theorems() {
    let dir = tempfile::tempdir().unwrap();
    // Off-diagonal mass: σ > 0, so the ideal-devices bound does not apply.
    let inst = write(
        dir.path(),
        "s.toml",
        r#"
schema = 1
mode = "stochastic"
hidden = 1
states = 2
distributions = { ab = ["1/2", "0", "1/4", "1/4"], cb = ["1/2", "0", "1/4", "1/4"], ac = ["1/2", "0", "1/4", "1/4"] }
observables = { a = [[1], [-1]], b = [[1], [1]], c = [[-1], [1]] }
"#,
    );
    let out = run(&["check", s(&inst)]);
    let check: CheckReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(check.skipped.iter().any(|r| r.theorem == "T3"));
    assert!(check.evaluated.iter().any(|r| r.theorem == "T4-proven" && r.holds()));
    assert!([0, 3].contains(&code(&out)));
}

fn spin() -> impl Strategy<Value = Spin> {
    any::<bool>().prop_map(Spin::from_bool)
}

fn sequence() -> impl Strategy<Value = RecordSequence> {
    prop::collection::vec((spin(), spin()), 1..40).prop_map(|v| RecordSequence::new(v).unwrap())
}

proptest! {
    #[test]
    fn record_csv_round_trips(
        ab in prop::option::of(sequence()),
        cb in prop::option::of(sequence()),
        ac in prop::option::of(sequence()),
    ) {
        let records: BTreeMap<Pair, RecordSequence> = [(Pair::AB, ab), (Pair::CB, cb), (Pair::AC, ac)]
            .into_iter()
            .filter_map(|(p, s)| s.map(|s| (p, s)))
            .collect();
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        prop_assert_eq!(read_records(buf.as_slice(), "mem").unwrap(), records);
    }
}

#[test]
fn shipped_configs_run() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(&shipped).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    let at = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    for (args, expected) in [
        (vec!["simulate", "simulate-drift.toml"], 0),
        (vec!["simulate", "simulate-devices.toml"], 0),
        (vec!["check", "saturating.toml"], 0),
        (vec!["check", "stochastic-instance.toml"], 0),
        (vec!["search", "search-tightness.toml"], 0),
        (vec!["analyze", "out/tightness-records.csv"], 3),
        (vec!["converge", "converge.toml"], 0),
    ] {
        let full: Vec<String> = std::iter::once(args[0].to_owned()).chain(args[1..].iter().map(|a| at(a))).collect();
        let out = bin().args(&full).output().unwrap();
        assert_eq!(code(&out), expected, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for report in ["out/drift-report.json", "out/devices-report.json"] {
        assert_eq!(code(&run(&["check", &at(report)])), 0, "{report}");
    }
}
