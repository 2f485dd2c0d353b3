use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_codesense"));
    c.env_remove("CODESENSE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

struct LocalSchemas;

impl jsonschema::Retrieve for LocalSchemas {
    fn retrieve(
        &self,
        uri: &jsonschema::Uri<String>,
    ) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri.as_str().rsplit('/').next().unwrap_or_default();
        let text = std::fs::read_to_string(schema_dir().join(name))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn assert_schema(command: &str, report: &Value) {
    let path = schema_dir().join(format!("{command}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::options()
        .with_retriever(LocalSchemas)
        .build(&schema)
        .unwrap();
    let errors: Vec<String> = validator
        .iter_errors(report)
        .map(|e| format!("{e} at {}", e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{command}: {errors:#?}");
}

struct Files {
    _dir: tempfile::TempDir,
    h: String,
    sensing: String,
    binary: String,
}

fn pipeline() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    let (h, sensing, binary) = (p("h.json"), p("sensing.json"), p("sensing.csm"));
    ok(&["sample", "--p", "12", "--r", "8", "--seed", "3", "-o", &h]);
    ok(&["build", "--input", &h, "--binary", &binary, "-o", &sensing]);
    Files {
        _dir: dir,
        h,
        sensing,
        binary,
    }
}

#[test]
fn bounds_reproduces_lemma4_value() {
    let v = ok_json(&["bounds", "--p", "32", "--r", "26", "--epsilon", "0.5"]);
    assert_eq!(v["lemma4_lower"].as_f64().unwrap(), 0.551976531744);
    assert_eq!(v["lemma4_lower_exact"], "18521259/33554432");
    assert_eq!(v["config"]["command"], "bounds");
    assert!(v["version"].as_str().unwrap().starts_with("codesense "));
    assert_schema("bounds", &v);
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let args = ["sample", "--p", "8", "--r", "3", "--seed", "7"];
    assert_eq!(ok(&args), ok(&args));
    assert_ne!(
        ok(&args),
        ok(&["sample", "--p", "8", "--r", "3", "--seed", "8"])
    );
}

#[test]
fn assumption_violations_exit_one() {
    let out = run(&["build", "--p", "8", "--r", "6", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2^2 < 8"));
    assert!(out.stdout.is_empty());
    let out = run(&["bounds", "--p", "8", "--r", "8", "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["sample", "--p", "8", "--r", "3"],
        &["frobnicate"],
        &["bounds", "--p", "32", "--r", "26", "--epsilon", "1.5"],
        &["bounds", "--p", "32", "--r", "26", "--epsilon", "abc"],
        &[
            "--threads",
            "0",
            "bounds",
            "--p",
            "32",
            "--r",
            "26",
            "--epsilon",
            "0.5",
        ],
        &[
            "ensemble",
            "--p",
            "8",
            "--r",
            "2",
            "--epsilon",
            "0.5",
            "--seed",
            "1",
        ],
        &["analyze", "--input", "/nonexistent/h.json"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn every_report_validates_against_its_schema() {
    let f = pipeline();
    let reports = [
        (
            "sample",
            ok_json(&["sample", "--p", "12", "--r", "8", "--seed", "3"]),
        ),
        ("build", ok_json(&["build", "--input", &f.h])),
        ("analyze", ok_json(&["analyze", "--input", &f.h])),
        (
            "certify",
            ok_json(&["certify", "--input", &f.h, "--epsilon", "0.75"]),
        ),
        (
            "bounds",
            ok_json(&["bounds", "--p", "8", "--r", "2", "--epsilon", "1/2"]),
        ),
        (
            "ensemble",
            ok_json(&[
                "ensemble",
                "--p",
                "6",
                "--r",
                "2",
                "--epsilon",
                "0.5",
                "--exhaustive",
            ]),
        ),
        (
            "ensemble",
            ok_json(&[
                "ensemble",
                "--p",
                "20",
                "--r",
                "8",
                "--epsilon",
                "0.5",
                "--seed",
                "2",
                "--trials",
                "200",
            ]),
        ),
        (
            "rip-exact",
            ok_json(&["rip-exact", "--sensing", &f.sensing, "--order", "3"]),
        ),
        (
            "recover",
            ok_json(&[
                "recover",
                "--sensing",
                &f.binary,
                "--sparsity",
                "1",
                "--signal-seed",
                "5",
                "--trials",
                "3",
            ]),
        ),
        (
            "recover",
            ok_json(&[
                "recover",
                "--sensing",
                &f.sensing,
                "--sparsity",
                "2",
                "--signal-seed",
                "5",
                "--trials",
                "2",
                "--no-oracle",
            ]),
        ),
        (
            "exponents",
            ok_json(&[
                "exponents",
                "--epsilon",
                "0.5",
                "--alpha",
                "0.95",
                "--p-list",
                "16,20",
                "--seed",
                "1",
                "--trials",
                "50",
            ]),
        ),
    ];
    for (command, report) in &reports {
        assert_schema(command, report);
    }
}

#[test]
fn schemas_reject_malformed_reports() {
    let mut v = ok_json(&["sample", "--p", "8", "--r", "3", "--seed", "7"]);
    v["matrix"]["data"] = serde_json::json!(["zz"]);
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(schema_dir().join("sample.schema.json")).unwrap(),
    )
    .unwrap();
    let validator = jsonschema::options()
        .with_retriever(LocalSchemas)
        .build(&schema)
        .unwrap();
    assert!(!validator.is_valid(&v));
    v.as_object_mut().unwrap().remove("matrix");
    assert!(!validator.is_valid(&v));
}

#[test]
fn file_formats_feed_every_downstream_command() {
    let f = pipeline();
    let via_json = ok_json(&["rip-exact", "--sensing", &f.sensing, "--order", "2"]);
    let via_binary = ok_json(&["rip-exact", "--sensing", &f.binary, "--order", "2"]);
    let via_h = ok_json(&["rip-exact", "--input", &f.h, "--order", "2"]);
    let via_flags = ok_json(&[
        "rip-exact",
        "--p",
        "12",
        "--r",
        "8",
        "--seed",
        "3",
        "--order",
        "2",
    ]);
    for v in [&via_binary, &via_h, &via_flags] {
        assert_eq!(v["delta"], via_json["delta"]);
        assert_eq!(v["witness"], via_json["witness"]);
    }
    assert_eq!(via_json["delta"], via_json["mu_exact"]);
    let analyze = ok_json(&["analyze", "--input", &f.h]);
    let total: u64 = analyze["weight_distribution"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 1 << analyze["k"].as_u64().unwrap());
    assert_eq!(analyze["mu_exact"], via_json["mu_exact"]);
    let built = ok_json(&["build", "--input", &f.h]);
    assert_eq!(
        built["serialized_bytes"].as_u64().unwrap(),
        std::fs::metadata(&f.binary).unwrap().len()
    );
}

#[test]
fn output_flag_writes_the_stdout_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let args = ["bounds", "--p", "64", "--r", "52", "--epsilon", "0.25"];
    let mut with_o: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    with_o.extend(["-o", p]);
    assert!(ok(&with_o).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), ok(&args));
}

#[test]
fn thread_count_does_not_change_reports() {
    let f = pipeline();
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "ensemble",
            "--p",
            "24",
            "--r",
            "10",
            "--epsilon",
            "0.5",
            "--seed",
            "9",
            "--trials",
            "2000",
        ],
        vec![
            "ensemble",
            "--p",
            "5",
            "--r",
            "3",
            "--epsilon",
            "0.25",
            "--exhaustive",
        ],
        vec!["rip-exact", "--sensing", &f.sensing, "--order", "4"],
        vec![
            "recover",
            "--sensing",
            &f.sensing,
            "--sparsity",
            "1",
            "--signal-seed",
            "2",
            "--trials",
            "8",
        ],
        vec![
            "exponents",
            "--epsilon",
            "0.5",
            "--alpha",
            "0.5",
            "--p-list",
            "16,24",
            "--seed",
            "4",
            "--trials",
            "300",
        ],
    ];
    for args in &commands {
        let single = bin().args(["--threads", "1"]).args(args).output().unwrap();
        assert!(
            single.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&single.stderr)
        );
        for n in ["2", "7"] {
            let multi = bin().args(["--threads", n]).args(args).output().unwrap();
            assert_eq!(single.stdout, multi.stdout, "{args:?} threads={n}");
        }
        let env = bin()
            .env("CODESENSE_THREADS", "3")
            .args(args)
            .output()
            .unwrap();
        assert_eq!(single.stdout, env.stdout, "{args:?} via env");
    }
}

#[test]
fn csv_output_has_header_comments_and_a_table() {
    let text = ok(&[
        "--format",
        "csv",
        "ensemble",
        "--p",
        "6",
        "--r",
        "2",
        "--epsilon",
        "0.5",
        "--exhaustive",
    ]);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# codesense "));
    let config = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let config: Value = serde_json::from_str(config).unwrap();
    assert_eq!(config["format"], "csv");
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == header.len()));
    let rows = ok(&[
        "--format",
        "csv",
        "exponents",
        "--epsilon",
        "0.5",
        "--alpha",
        "0.95",
        "--p-list",
        "16,20,24",
        "--seed",
        "1",
        "--trials",
        "20",
    ]);
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn recover_reports_oracle_agreement() {
    let f = pipeline();
    let v = ok_json(&[
        "recover",
        "--sensing",
        &f.sensing,
        "--sparsity",
        "1",
        "--signal-seed",
        "11",
        "--trials",
        "5",
    ]);
    assert_eq!(v["recovered"], 5);
    assert_eq!(v["oracle_agreements"], 5);
    assert!(v["max_relative_error"].as_f64().unwrap() <= 1e-6);
}
