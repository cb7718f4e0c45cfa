use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BAXTER: &str = r#"{"family":"BAXTER_ELLIPTIC_31","k":0.5,"lambda":0.9,"mu":0.7}"#;
const FF38: &str = r#"{"family":"FF_ELLIPTIC_38","k":0.6}"#;

fn ybe8(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ybe8"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn c(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn eval_at_initial_point() {
    let o = ybe8(&["eval", "--spec", BAXTER, "--at", "0,0.3,0.3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let a: Vec<(f64, f64)> = v["rows"][0]["a"].as_array().unwrap().iter().map(c).collect();
    let want = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    for (got, w) in a.iter().zip(want) {
        assert!((got.0 - w).abs() < 1e-15 && got.1 == 0.0);
    }
}

#[test]
fn malformed_spec_exits_2() {
    let o = ybe8(&["eval", "--spec", r#"{"family": "BAXTER_ELLIPTIC_31", "k": }"#]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid family specification"));
    let o = ybe8(&["verify", "--spec", r#"{"family":"FF_TANH_310","extra":1}"#]);
    assert_eq!(code(&o), 2);
}

#[test]
fn pole_exits_3() {
    let o = ybe8(&["eval", "--spec", r#"{"family":"FF_TRIG_311"}"#, "--at", "1.5707963267948966,0.3,0.3"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn grid_table_is_deterministic() {
    let args = ["eval", "--spec", FF38, "--grid", "10", "--format", "csv"];
    let a = ybe8(&args);
    assert_eq!(code(&a), 0);
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert_eq!(ybe8(&args).stdout, a.stdout);
}

#[test]
fn verify_exit_codes() {
    let o = ybe8(&["verify", "--spec", r#"{"family":"TRIVIAL_112A"}"#]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["relative"]["max"].as_f64().unwrap() <= 1e-12);

    let o = ybe8(&["verify", "--spec", FF38, "--samples", "200"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["samples"], 200);
    assert!(json(&o)["unitarity_max"].as_f64().unwrap() < 1e-9);

    let o = ybe8(&["verify", "--spec", FF38, "--perturb", "a7", "0.1"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn classify_verdicts() {
    let cases = [
        (BAXTER, "BAXTER", 10),
        (r#"{"family":"FF_TANH_310"}"#, "FREE_FERMION", 11),
        (
            r#"{"family":"TRIVIAL_112B","profiles":{"F":{"preset":"exp","params":[0.5,1.0]}}}"#,
            "TRIVIAL_B",
            13,
        ),
    ];
    for (spec, verdict, exit) in cases {
        let o = ybe8(&["classify", "--spec", spec, "--samples", "16"]);
        assert_eq!(code(&o), exit, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&o)["verdict"], verdict);
    }
}

#[test]
fn couplings_for_hyperbolic_family() {
    let spec = r#"{"family":"FF_HYPERBOLIC_313","lambda":0.6,"mu":0.9}"#;
    let o = ybe8(&["couplings", "--spec", spec, "--grid", "3"]);
    assert_eq!(code(&o), 0);
    for row in json(&o)["table"].as_array().unwrap() {
        let k = &row["couplings"];
        assert!((c(&k["Jx"]).0 - 0.45).abs() < 1e-12);
        assert!((c(&k["Jy"]).0 + 0.45).abs() < 1e-12);
        assert!(c(&k["Jz"]).0.abs() < 1e-12);
        assert!(c(&k["h"]).0.abs() < 1e-12);
    }
}

#[test]
fn chain_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("chain.bin");
    let csv = dir.path().join("chain.csv");
    for path in [&bin, &csv] {
        let o = ybe8(&[
            "couplings",
            "--spec",
            BAXTER,
            "--sites",
            "3",
            "--periodic",
            "--dump",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        let chain = &json(&o)["chain"];
        assert_eq!(chain["dim"], 8);
        assert_eq!(chain["hermiticity_defect"].as_f64().unwrap(), 0.0);
    }
    let bytes = std::fs::read(&bin).unwrap();
    let (dim, data) = eightvertex_dump(&bytes);
    assert_eq!(dim, 8);
    let rows: Vec<Vec<f64>> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    for r in 0..8 {
        for col in 0..8 {
            assert_eq!(rows[r][2 * col], data[r * 8 + col].0);
            assert_eq!(rows[r][2 * col + 1], data[r * 8 + col].1);
        }
    }
}

/// Independent reader for the binary chain dump.
fn eightvertex_dump(b: &[u8]) -> (usize, Vec<(f64, f64)>) {
    assert_eq!(&b[..8], b"YBE8CHN\0");
    let dim = u32::from_le_bytes(b[8..12].try_into().unwrap()) as usize;
    let f = |i: usize| f64::from_le_bytes(b[12 + 8 * i..20 + 8 * i].try_into().unwrap());
    (dim, (0..dim * dim).map(|k| (f(2 * k), f(2 * k + 1))).collect())
}

#[test]
fn chain_size_limit_exits_2() {
    let o = ybe8(&["couplings", "--spec", BAXTER, "--sites", "13"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn transform_pipeline_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pipeline.json");
    std::fs::write(
        &p,
        r#"[{"kind":"A1"},{"kind":"B","g":{"preset":"exp_u","params":[0.5,2.0]}},{"kind":"D","mu":0.8}]"#,
    )
    .unwrap();
    let o = ybe8(&["transform", "--spec", FF38, "--transform", p.to_str().unwrap(), "--grid", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["verification"]["pass"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert_eq!(code(&ybe8(&["transform", "--spec", FF38])), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"[{"kind":"D","mu":0.8,"nu":1}]"#).unwrap();
    assert_eq!(code(&ybe8(&["verify", "--spec", FF38, "--transform", bad.to_str().unwrap()])), 2);
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |threads: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ybe8"));
        cmd.args(["verify", "--spec", FF38, "--samples", "64", "--seed", "9"]);
        if let Some(t) = threads {
            cmd.env("YBE_THREADS", t);
        }
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("1")), run(None));
}

#[test]
fn out_file_and_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = ybe8(&[
        "classify",
        "--spec",
        FF38,
        "--samples",
        "8",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 11);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(Path::new(&out)).unwrap();
    assert!(text.starts_with("group,name,value,tol,pass"));
    assert!(text.contains("verdict,FREE_FERMION"));
}
