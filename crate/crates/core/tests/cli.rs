use std::fs;
use std::process::{Command, Output};

use wiener_chaos::chaos::ChaosExpansion;
use wiener_chaos::multiindex::{CountVector, MultiIndex};
use wiener_chaos::space::BanachSpace;
use wiener_chaos::tensor::ElementaryOperator;

fn chaoslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaoslab"))
        .args(args)
        .env_remove("CHAOSLAB_OUT_DIR")
        .output()
        .expect("chaoslab runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn hermite_table_lists_normalized_coefficients() {
    let o = chaoslab(&["hermite-table"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "degree,c0,c1,c2,c3,c4,c5,c6");
    assert_eq!(lines[3], "2,-0.5,0,0.5,0,0,0,0");
    assert!(text.contains("# check orthonormality: PASS"));
}

#[test]
fn spectrum_suite_succeeds() {
    let o = chaoslab(&["--suite", "spectrum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!stderr(&o).contains("FAIL"));
}

#[test]
fn decoupling_example_invocation() {
    let o = chaoslab(&[
        "decoupling", "--case", "symmetric", "--m", "2", "--norm", "l2", "--p", "2", "--samples", "1e6", "--seed", "7",
        "--instances", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(
        lines[0],
        "case,m,n,d,norm,p,samples,seed,coupled,coupled_se,decoupled,decoupled_se,ratio"
    );
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(&f[..8], &["symmetric", "2", "4", "2", "l2", "2", "1000000", f[7]]);
        let ratio: f64 = f[12].parse().unwrap();
        assert!((ratio - 1.0).abs() < 0.02, "{row}");
    }
    assert!(lines[1].contains(",7,"));
}

#[test]
fn config_defaults_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"suite": "represent", "seed": 3}"#).unwrap();
    let o = chaoslab(&["--config", cfg.to_str().unwrap(), "--seed", "11", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["spec"]["seed"], 11);
    assert_eq!(v["spec"]["instances"], 10);
    assert_eq!(v["spec"]["max_degree"], 6);
    assert_eq!(v["passed"], true);
    assert!(v["tables"].as_object().is_some_and(|t| t.values().all(|rows| rows.as_array().is_some_and(|r| !r.is_empty()))));
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"suite": "decoupling", "bogus": 1}"#).unwrap();
    let o = chaoslab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn usage_and_io_exit_codes() {
    assert_eq!(chaoslab(&["decoupling", "--m", "99"]).status.code(), Some(2));
    assert_eq!(chaoslab(&["decoupling", "--samples", "10"]).status.code(), Some(2));
    assert_eq!(chaoslab(&["no-such-suite"]).status.code(), Some(2));
    assert_eq!(chaoslab(&[]).status.code(), Some(2));
    assert_eq!(chaoslab(&["spectrum", "--lambda", "2"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(chaoslab(&["--config", missing.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn output_directory_and_survival_sibling() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_chaoslab"))
        .args(["decoupling", "--samples", "10000", "--instances", "1", "--survival", "1,2"])
        .env("CHAOSLAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let main = fs::read_to_string(dir.path().join("decoupling.csv")).unwrap();
    assert!(main.starts_with("# spec: {\"suite\":\"decoupling\""));
    let surv = fs::read_to_string(dir.path().join("decoupling.survival.csv")).unwrap();
    let lines = data_lines(&surv);
    assert_eq!(lines[0], "case,seed,threshold,coupled,decoupled");
    assert_eq!(lines.len(), 3);
}

#[test]
fn explicit_out_path_wins() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested").join("sub.json");
    let o = chaoslab(&["subordination", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["spec"]["suite"], "subordination");
    assert!(v["spec"].get("out").is_none());
}

#[test]
fn chaos_expansion_json_shape() {
    let f = ChaosExpansion::psi(2, BanachSpace::l2(1), CountVector::from_indices(&[1, 2]), vec![1.5]).unwrap();
    let s = serde_json::to_string(&f).unwrap();
    assert_eq!(s, r#"{"dim_n":2,"space":{"dim":1,"norm":"l2"},"terms":{"1:1,2:1":[1.5]}}"#);
    let back: ChaosExpansion = serde_json::from_str(&s).unwrap();
    assert_eq!(back, f);
}

#[test]
fn elementary_operator_json_shape() {
    let t = ElementaryOperator::from_terms(
        2,
        2,
        BanachSpace::linf(2),
        vec![(MultiIndex::new(vec![1, 2]).unwrap(), vec![1.0, -2.0])],
    )
    .unwrap();
    let s = serde_json::to_string(&t).unwrap();
    assert_eq!(
        s,
        r#"{"order":2,"dim_n":2,"space":{"dim":2,"norm":"linf"},"table":{"1,2":[1.0,-2.0]}}"#
    );
    let back: ElementaryOperator = serde_json::from_str(&s).unwrap();
    assert_eq!(back, t);
    assert!(serde_json::from_str::<ElementaryOperator>(&s.replace("\"1,2\"", "\"0,2\"")).is_err());
}

fn csv_fields(line: &str) -> Vec<String> {
    let mut fields = vec![String::new()];
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                chars.next();
                fields.last_mut().unwrap().push('"');
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(String::new()),
            c => fields.last_mut().unwrap().push(c),
        }
    }
    fields
}

#[test]
fn hermite_table_respects_max_degree() {
    let o = chaoslab(&["hermite-table", "--max-degree", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[3], "2,-0.5,0,0.5,0,0");
    assert_eq!(lines[5], "4,0.125,0,-0.25,0,0.041666666666666664");
}

#[test]
fn spectrum_reports_resolvent_residual() {
    let o = chaoslab(&["spectrum", "--m", "3", "--lambda", "2.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines = data_lines(&text);
    let header = csv_fields(lines[0]);
    assert_eq!(header, ["instance", "seed", "check", "residual", "tolerance", "status"]);
    let mut resolvent = 0;
    for line in &lines[1..] {
        let f = csv_fields(line);
        assert_eq!(f.len(), header.len(), "{line}");
        if f[2].starts_with("(lambda+L)R_lambda") {
            resolvent += 1;
            assert!(f[3].parse::<f64>().unwrap() <= 1e-10);
        }
    }
    assert!(resolvent > 0);
}
