use std::process::Command;

use sigmaflow_cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sigmaflow").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn curvature_of_the_round_four_sphere() {
    let (code, out, _) = call(&[
        "curvature",
        "--builtin",
        "sphere:4",
        "--point",
        "0.1,0.2,0.3,0.4",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("R = 12.000000"), "{out}");
    assert!(out.contains("sigma_2 = 1.500000"));
}

#[test]
fn curvature_json_for_example4() {
    let (code, out, _) = call(&[
        "curvature",
        "--builtin",
        "example4:4",
        "--point",
        "0,0,0,0",
        "--json",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(v["ricci_minus_metric_sup"].as_f64().unwrap() < 1e-8);
    assert!((v["scalar_curvature"].as_f64().unwrap() + 4.0).abs() < 1e-9);
    assert_eq!(v["sigma"].as_array().unwrap().len(), 5);
}

#[test]
fn curvature_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h2xr.json");
    std::fs::write(
        &path,
        r#"{"dim": 3, "metric": [["1","0","0"],["0","exp(2*x1)","0"],["0","0","1"]],
            "domain": [[-1,1],[-1,1],[0,6.283185307179586]], "periodic": [false,false,true], "k": 3, "l": 0}"#,
    )
    .unwrap();
    let (code, out, err) = call(&[
        "curvature",
        "--spec",
        path.to_str().unwrap(),
        "--point",
        "0.2,0.1,7.0",
        "--json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!((v["scalar_curvature"].as_f64().unwrap() + 2.0).abs() < 1e-10);
    // periodic axis wrapped into the domain
    assert!(v["point"][2].as_f64().unwrap() < 6.3);
}

#[test]
fn malformed_spec_is_an_input_error_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dim\": 2, \"metric\": [[\"1\" \"0\"]]}").unwrap();
    let (code, _, err) = call(&["curvature", "--spec", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("byte offset 27"), "{err}");
}

#[test]
fn geometry_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("indefinite.json");
    std::fs::write(
        &path,
        r#"{"dim": 3, "metric": [["1","0","0"],["0","x1","0"],["0","0","1"]], "domain": [[-1,1],[-1,1],[-1,1]], "k": 2, "l": 1}"#,
    )
    .unwrap();
    assert_eq!(call(&["curvature", "--spec", path.to_str().unwrap()]).0, 3);
    // σ_1 < 0 < σ_2 on hyperbolic space
    let path = dir.path().join("h3.json");
    std::fs::write(
        &path,
        r#"{"dim": 3, "metric": [["4/(1-x1^2-x2^2-x3^2)^2","0","0"],["0","4/(1-x1^2-x2^2-x3^2)^2","0"],["0","0","4/(1-x1^2-x2^2-x3^2)^2"]],
            "domain": [[-0.4,0.4],[-0.4,0.4],[-0.4,0.4]], "k": 2, "l": 1}"#,
    )
    .unwrap();
    let (code, out, err) = call(&["curvature", "--spec", path.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(out.contains("cone: false"));
    assert!(err.contains("cone condition"));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(
        call(&["curvature", "--builtin", "sphere:4", "--point", "0,0"]).0,
        2
    );
    assert_eq!(
        call(&["curvature", "--builtin", "sphere:4", "--point", "9,0,0,0"]).0,
        2
    );
    assert_eq!(call(&["curvature", "--builtin", "torus:2"]).0, 2);
    assert_eq!(call(&["curvature"]).0, 2);
    assert_eq!(
        call(&["curvature", "--builtin", "sphere:3", "--spec", "x.json"]).0,
        2
    );
    assert_eq!(
        call(&["curvature", "--spec", "/nonexistent/spec.json"]).0,
        2
    );
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn verify_sphere_soliton() {
    let (code, out, _) = call(&["verify", "--builtin", "sphere:4"]);
    assert_eq!(code, 0);
    assert!(out.contains("classification: indefinite"), "{out}");
    assert!(out.contains("result: PASS"));
}

#[test]
fn verify_zero_lambda_fails() {
    let (code, out, _) = call(&["verify", "--builtin", "sphere:4", "--lambda", "0", "--json"]);
    assert_eq!(code, 1);
    let v = json(&out);
    assert!(v["residual_sup"].as_f64().unwrap() > 1e-3);
    assert_eq!(v["pass"], false);
}

#[test]
fn verify_usage_errors() {
    assert_eq!(
        call(&["verify", "--builtin", "sphere:4", "--probes", "0"]).0,
        2
    );
    assert_eq!(
        call(&["verify", "--builtin", "sphere:4", "--tolerance", "-1"]).0,
        2
    );
    assert_eq!(
        call(&["verify", "--builtin", "sphere:4", "--lambda", "log("]).0,
        2
    );
    // models without soliton data
    assert_eq!(call(&["verify", "--builtin", "euclidean:3"]).0, 2);
}

#[test]
fn every_builtin_with_soliton_data_verifies() {
    for name in [
        "sphere:3",
        "sphere:5",
        "hyperbolic:4",
        "product_line_sphere:3",
        "example4:4",
        "example4:5",
    ] {
        let (code, out, err) = call(&["verify", "--builtin", name, "--probes", "32"]);
        assert_eq!(code, 0, "{name}: {out}{err}");
    }
}

#[test]
fn verify_lemma_output() {
    let (code, out, _) = call(&[
        "verify",
        "--builtin",
        "sphere:3",
        "--lemma",
        "--json",
        "--probes",
        "16",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    for item in ["a", "b", "c"] {
        assert!(v["lemma"][item].as_f64().unwrap() < 1e-6);
    }
    let (_, out, _) = call(&[
        "verify",
        "--builtin",
        "example4:4",
        "--lemma",
        "--probes",
        "4",
    ]);
    assert!(out.contains("not applicable"));
}

#[test]
fn verify_is_deterministic_and_seeded() {
    let a = call(&["verify", "--builtin", "hyperbolic:3", "--json"]).1;
    let b = call(&["verify", "--builtin", "hyperbolic:3", "--json"]).1;
    assert_eq!(a, b);
    let c = call(&[
        "verify",
        "--builtin",
        "hyperbolic:3",
        "--json",
        "--seed",
        "7",
    ])
    .1;
    assert_ne!(a, c);
}

fn csv_rows(s: &str) -> Vec<Vec<f64>> {
    s.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn flow_round_data_stay_fixed() {
    let (code, out, _) = call(&[
        "flow", "--n", "4", "--k", "2", "--l", "1", "--grid", "64", "--t-end", "0.2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next().unwrap(), "t,E_l,log_r_kl,sup_dev,volume");
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[3] < 1e-9));
}

#[test]
fn flow_perturbed_run_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let state = dir.path().join("state.json");
    let (code, out, _) = call(&[
        "flow",
        "--n",
        "4",
        "--k",
        "2",
        "--l",
        "1",
        "--grid",
        "64",
        "--u0",
        "0.05*cos(x1)",
        "--t-end",
        "1",
        "--csv",
        csv.to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows = csv_rows(&text);
    let e0 = rows[0][1];
    assert!(rows.iter().all(|r| ((r[1] - e0) / e0).abs() < 1e-5));
    // 17 significant digits
    let first = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = first.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
    let s = json(&std::fs::read_to_string(&state).unwrap());
    assert_eq!(s["grid"], 64);
    assert_eq!(s["u"].as_array().unwrap().len(), 65);
    assert!((s["t"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn flow_half_dimension_warning() {
    let (code, out, err) = call(&[
        "flow",
        "--n",
        "4",
        "--k",
        "3",
        "--l",
        "2",
        "--grid",
        "32",
        "--u0",
        "0.05*cos(x1)",
        "--t-end",
        "0.05",
    ]);
    assert_eq!(code, 0);
    assert!(err.contains("E_{n/2} diagnostic omitted"));
    assert!(out.lines().nth(1).unwrap().split(',').nth(1).unwrap() == "NaN");
}

#[test]
fn flow_abort_and_input_errors() {
    let (code, _, err) = call(&[
        "flow",
        "--n",
        "4",
        "--k",
        "2",
        "--l",
        "1",
        "--u0",
        "2.5*cos(x1)",
        "--t-end",
        "0.1",
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("aborted"));
    assert_eq!(call(&["flow", "--n", "4", "--k", "1", "--l", "2"]).0, 2);
    assert_eq!(
        call(&["flow", "--n", "4", "--k", "2", "--l", "1", "--grid", "8"]).0,
        2
    );
    assert_eq!(
        call(&["flow", "--n", "4", "--k", "2", "--l", "1", "--u0", "x2"]).0,
        2
    );
    assert_eq!(
        call(&["flow", "--n", "4", "--k", "2", "--l", "1", "--t-end", "0"]).0,
        2
    );
    assert_eq!(
        call(&[
            "flow",
            "--n",
            "4",
            "--k",
            "2",
            "--l",
            "1",
            "--dt",
            "0.1",
            "--dt-factor",
            "1"
        ])
        .0,
        2
    );
}

#[test]
fn hodge_gradient_and_mixed_fields() {
    let (code, out, _) = call(&[
        "hodge",
        "--n",
        "2",
        "--grid",
        "64",
        "--field",
        "cos(x1)*cos(x2), -sin(x1)*sin(x2)",
        "--json",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(v["Y_sup"].as_f64().unwrap() < 1e-10);
    let (code, out, _) = call(&[
        "hodge",
        "--n",
        "2",
        "--grid",
        "64",
        "--field",
        "-sin(x1) + sin(x2), sin(x1)",
        "--json",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["grad_sup"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["Y_sup"].as_f64().unwrap() - 1.0).abs() < 1e-2);
    let (code, out, _) = call(&[
        "hodge",
        "--n",
        "3",
        "--grid",
        "16",
        "--field",
        "sin(x2),sin(x3),sin(x1)",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("reconstruction"));
}

#[test]
fn hodge_input_errors() {
    assert_eq!(
        call(&["hodge", "--n", "2", "--grid", "33", "--field", "1,1"]).0,
        2
    );
    assert_eq!(
        call(&["hodge", "--n", "2", "--grid", "32", "--field", "1"]).0,
        2
    );
    assert_eq!(
        call(&["hodge", "--n", "4", "--grid", "32", "--field", "1,1,1,1"]).0,
        2
    );
    assert_eq!(
        call(&["hodge", "--n", "2", "--grid", "32", "--field", "1,sin("]).0,
        2
    );
}

#[test]
fn binary_respects_thread_setting_and_is_deterministic() {
    let bin = env!("CARGO_BIN_EXE_sigmaflow");
    let run_with = |threads: &str| {
        let o = Command::new(bin)
            .args([
                "verify",
                "--builtin",
                "sphere:3",
                "--json",
                "--probes",
                "48",
            ])
            .env("SIGMAFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        o.stdout
    };
    let one = run_with("1");
    assert_eq!(one, run_with("4"));
    assert_eq!(one, run_with("0"));
    let bad = Command::new(bin)
        .args(["verify", "--builtin", "sphere:3"])
        .env("SIGMAFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
