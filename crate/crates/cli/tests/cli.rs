use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, Output};

use hoferlab::certificates::{Certificate, HoferReport};
use hoferlab::complex::GradedComplex;
use hoferlab::filtration::{is_essential, is_essential_filtered, EssentialityReport, FiltrationMap};
use hoferlab::orbits::ScanReport;
use serde_json::Value;

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoferlab")).args(args).env_remove("HOFERLAB_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hoferlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn invalid_complex_exits_two_and_lists_violations() {
    let o = run(&["complex", "validate", &data("complexes/bad.json")]);
    assert_eq!(code(&o), 2);
    let r = report(&o);
    assert_eq!(r["exit_code"], 2);
    assert_eq!(r["result"]["valid"], false);
    assert!(!r["result"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_input_exits_one_with_a_location() {
    let path = scratch("malformed.json");
    std::fs::write(&path, "{\n  \"basis\": [\n    {\"id\": \"a\", \"degree\": }\n  ]\n}\n").unwrap();
    let o = run(&["complex", "homology", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("{}:3:", path.display())), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_flags_and_missing_files_are_structural() {
    assert_eq!(code(&run(&["complex", "homology", &data("complexes/pair.json"), "--frobnicate"])), 1);
    assert_eq!(code(&run(&["hofer", "--system", "/nonexistent/system.json"])), 1);
    assert_eq!(code(&run(&["orbits", "scan", "--system", &data("systems/eps-cos.json"), "--grid", "zero"])), 1);
    assert_eq!(code(&run(&[])), 1);
}

#[test]
fn invalid_thread_count_is_structural() {
    for bad in ["0", "many", "-2"] {
        let o = Command::new(env!("CARGO_BIN_EXE_hoferlab"))
            .args(["complex", "homology", &data("complexes/pair.json")])
            .env("HOFERLAB_THREADS", bad)
            .output()
            .unwrap();
        assert_eq!(code(&o), 1, "HOFERLAB_THREADS={bad}");
    }
}

const SUBCOMMANDS: &[&[&str]] = &[
    &[],
    &["complex"],
    &["complex", "validate"],
    &["complex", "homology"],
    &["complex", "classify"],
    &["filtration"],
    &["filtration", "validate"],
    &["filtration", "spectral"],
    &["filtration", "essential"],
    &["filtration", "verdict"],
    &["morse"],
    &["morse", "build"],
    &["orbits"],
    &["orbits", "scan"],
    &["hofer"],
    &["certify"],
    &["certify", "thm15"],
    &["certify", "thm16"],
    &["certify", "negside"],
    &["certify", "short-time"],
];

#[test]
fn every_subcommand_has_help() {
    for path in SUBCOMMANDS {
        let mut args = path.to_vec();
        args.push("--help");
        let o = run(&args);
        assert_eq!(code(&o), 0, "{path:?}");
        let text = String::from_utf8_lossy(&o.stdout);
        assert!(text.contains("Usage:"), "{path:?}: {text}");
    }
}

/// `--flag` → default, read from long help.
fn help_defaults(path: &[&str]) -> BTreeMap<String, String> {
    let mut args = path.to_vec();
    args.push("--help");
    let text = String::from_utf8(run(&args).stdout).unwrap();
    let mut out = BTreeMap::new();
    let mut flag = None;
    for line in text.lines() {
        let t = line.trim_start();
        if t.starts_with("--") {
            flag = Some(t.split_whitespace().next().unwrap().trim_end_matches(',').to_string());
        }
        if let (Some(f), Some(i)) = (&flag, line.find("[default: ")) {
            let rest = &line[i + "[default: ".len()..];
            out.insert(f.clone(), rest[..rest.find(']').unwrap()].to_string());
        }
    }
    out
}

fn assert_default(defaults: &BTreeMap<String, String>, flag: &str, echoed: &Value) {
    let d: f64 = defaults.get(flag).unwrap_or_else(|| panic!("{flag} has no documented default")).parse().unwrap();
    assert_eq!(Some(d), echoed.as_f64(), "{flag}");
}

#[test]
fn thm15_on_the_shipped_system_certifies_with_documented_defaults() {
    let o = run(&["certify", "thm15", "--system", &data("systems/eps-cos.json")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["result"]["verdict"], "certified");

    let cert: Certificate = serde_json::from_value(r["result"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&cert).unwrap(), r["result"]);

    let d = help_defaults(&["certify", "thm15"]);
    let opts = &r["parameters"]["options"];
    for (flag, echoed) in [
        ("--grid", &opts["scan"]["resolution"]),
        ("--tol", &opts["scan"]["tol"]),
        ("--steps", &opts["scan"]["steps"]),
        ("--coarse-steps", &opts["scan"]["coarse_steps"]),
        ("--max-iterations", &opts["scan"]["max_iterations"]),
        ("--record", &opts["scan"]["record"]),
        ("--check-space", &opts["grid"]["space"]),
        ("--check-time", &opts["grid"]["time"]),
        ("--twist-samples", &opts["twist_samples"]),
        ("--action-tol", &opts["action_tol"]),
        ("--cap-fraction", &opts["cap_fraction"]),
        ("--hofer-space", &opts["hofer"]["space"]),
        ("--hofer-time", &opts["hofer"]["time_intervals"]),
    ] {
        assert_default(&d, flag, echoed);
    }
    assert_eq!(opts["hofer"]["refine"], true);
    assert_eq!(d.get("--format").map(String::as_str), Some("json"));
}

#[test]
fn scan_and_hofer_reports_round_trip_and_echo_defaults() {
    let system = data("systems/pulsed.json");
    let o = run(&["orbits", "scan", "--system", &system, "--grid", "12"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    let scan: ScanReport = serde_json::from_value(r["result"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&scan).unwrap(), r["result"]);
    assert_eq!(scan.orbits.len(), 4);
    let d = help_defaults(&["orbits", "scan"]);
    assert_default(&d, "--steps", &r["parameters"]["options"]["steps"]);
    assert_default(&d, "--tol", &r["parameters"]["options"]["tol"]);

    let o = run(&["hofer", "--system", &system]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    let hofer: HoferReport = serde_json::from_value(r["result"].clone()).unwrap();
    assert_eq!(serde_json::to_value(&hofer).unwrap(), r["result"]);
    let d = help_defaults(&["hofer"]);
    assert_default(&d, "--hofer-space", &r["parameters"]["options"]["space"]);
    assert_default(&d, "--hofer-time", &r["parameters"]["options"]["time_intervals"]);
}

#[test]
fn essential_matches_the_library_call() {
    let (c, f) = (data("complexes/pair.json"), data("complexes/pair-filtration.json"));
    let o = run(&["filtration", "essential", "--complex", &c, "--filtration", &f, "--element", "P", "--class", "top"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let got: EssentialityReport = serde_json::from_value(r["result"]["report"].clone()).unwrap();

    let complex: GradedComplex = serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    let filtration: FiltrationMap = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    let top = complex.representative(2, 0).unwrap().unwrap();
    let want = is_essential_filtered(&complex, &filtration, "P", &top).unwrap();
    assert_eq!(got, want);
    assert_eq!(r["result"]["homologically_essential"], is_essential(&complex, "P", &top).unwrap());
}

#[test]
fn morse_build_writes_loadable_files() {
    let (cx, fx) = (scratch("morse-complex.json"), scratch("morse-filtration.json"));
    let o = run(&[
        "morse",
        "build",
        "--system",
        &data("morse/cos-cos.json"),
        "--complex-out",
        cx.to_str().unwrap(),
        "--filtration-out",
        fx.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["result"]["fundamental_value"], 2.0);
    let o = run(&["filtration", "validate", "--complex", cx.to_str().unwrap(), "--filtration", fx.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["complex", "homology", cx.to_str().unwrap()]);
    assert_eq!(report(&o)["result"]["ranks"], serde_json::json!({"0": 1, "1": 2, "2": 1}));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cases: Vec<Vec<String>> = vec![
        vec!["morse".into(), "build".into(), "--system".into(), data("morse/cos-cos.json"), "--resolution".into(), "32".into()],
        vec!["orbits".into(), "scan".into(), "--system".into(), data("systems/pulsed.json"), "--grid".into(), "10".into()],
        vec!["hofer".into(), "--system".into(), data("systems/pulsed.json")],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = run(&args);
        let b = run(&args);
        let c = Command::new(env!("CARGO_BIN_EXE_hoferlab")).args(&args).env("HOFERLAB_THREADS", "1").output().unwrap();
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stdout, c.stdout, "{args:?} with one thread");
    }
}

#[test]
fn output_flag_writes_the_same_report() {
    let path = scratch("homology.json");
    let args = ["complex", "homology", &data("complexes/pair.json")];
    let stdout = run(&args).stdout;
    let mut with_output = args.to_vec();
    with_output.extend(["--output", path.to_str().unwrap()]);
    let o = run(&with_output);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn text_format_is_readable() {
    let o = run(&["--format", "text", "complex", "homology", &data("complexes/pair.json")]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("complex homology\n"));
    assert!(text.contains("H2: 1"));
}
