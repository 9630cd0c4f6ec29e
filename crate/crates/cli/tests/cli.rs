use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_adelic"));
    c.env_remove("ADELIC_THREADS");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn adelic")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

#[test]
fn phi_of_ten() {
    assert_eq!(stdout(&["phi", "10"]), "2520\n");
    assert_eq!(stdout(&["phi", "1/7"]), "1/60\n");
    assert_eq!(stdout(&["--format", "json", "phi", "10"]).trim(), r#"{"error_bound":0,"value":"2520"}"#);
}

#[test]
fn prime_power_order() {
    assert_eq!(stdout(&["ppow", "next", "8"]), "3^2\n");
    assert_eq!(stdout(&["ppow", "prev", "1"]), "2^-1\n");
    assert_eq!(stdout(&["ppow", "range", "4", "10"]), "5^1\n7^1\n2^3\n3^2\n");
}

#[test]
fn norms_and_volumes() {
    assert_eq!(stdout(&["norm", "2:-1:=1;3:0:=2"]), "2^1\n");
    assert_eq!(stdout(&["volume", "ball", "3^2"]), "2520\n");
    assert_eq!(stdout(&["volume", "sphere", "2^-1"]), "1/2\n");
}

#[test]
fn kernel_normalizes_within_tolerance() {
    let out = stdout(&["kernel", "normalize", "--t", "0.3", "--alpha", "1.5", "--tol", "1e-6"]);
    let value: f64 = out.split(" ± ").next().unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-6, "{out}");
    let json = stdout(&["--format", "json", "kernel", "normalize", "--t", "2", "--alpha", "3", "--beta", "1.2", "--tol", "1e-6"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["error_bound"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["phi", "0"]), 2);
    assert_eq!(code(&["volume", "ball", "6"]), 2);
    assert_eq!(code(&["kernel", "eval", "--t", "1"]), 2);
    assert_eq!(code(&["kernel", "eval", "--t", "1", "--alpha", "2", "--tol", "1e-300"]), 3);
    assert_eq!(code(&["nonsense"]), 2);
    let ball = data("ball.json");
    let ball = ball.to_str().unwrap();
    assert_eq!(code(&["solve", "homogeneous", "--input", ball, "--t", "1", "--alpha", "2", "--exact"]), 2);
    let real = data("real.csv");
    let args = [
        "solve", "adelic", "--input", ball, "--real", real.to_str().unwrap(), "--t", "0.5", "--alpha", "2", "--beta",
        "1", "--tol", "1e-6",
    ];
    // the β = 1 kernel at t = 0.5 is narrower than the grid spacing
    assert_eq!(code(&args), 3);
}

#[test]
fn simulate_is_byte_reproducible() {
    let args = ["simulate", "--t-step", "0.05", "--steps", "500", "--alpha", "2", "--seed", "11"];
    let a = stdout(&args);
    let b = stdout(&args);
    assert_eq!(a, b);
    assert!(a.starts_with("step,time,radius,point\n0,0.0,0,"));
    assert_eq!(a.lines().count(), 502);
    let c = stdout(&["simulate", "--t-step", "0.05", "--steps", "500", "--alpha", "2", "--seed", "12"]);
    assert_ne!(a, c);
}

#[test]
fn thread_count_does_not_change_paths() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "--t-step", "0.1", "--steps", "100", "--alpha", "1.5", "--seed", "3", "--paths", "4"];
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("p{threads}.csv"));
        let status = bin()
            .args(base)
            .args(["--output", out.to_str().unwrap()])
            .env("ADELIC_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        let files: Vec<String> = (0..4)
            .map(|i| {
                let name = if i == 0 { format!("p{threads}.csv") } else { format!("p{threads}.{i}.csv") };
                std::fs::read_to_string(dir.path().join(name)).unwrap()
            })
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0][0], outputs[0][1]);
}

#[test]
fn config_file_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.txt");
    let status = bin()
        .args(["--config", data("config.json").to_str().unwrap(), "--output", out.to_str().unwrap()])
        .args(["kernel", "eval", "--radius", "2", "--alpha", "3"])
        .status()
        .unwrap();
    assert!(status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("k.txt.meta.json")).unwrap()).unwrap();
    // flags override the file
    assert_eq!(meta["config"]["alpha"], 3.0);
    assert_eq!(meta["config"]["t"], 0.5);
    assert!(meta["wall_time_s"].is_number());
    assert!(meta["error_bounds"].as_f64().unwrap() <= 1e-8);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"t": 1, "colour": "red"}"#).unwrap();
    assert_eq!(code(&["--config", bad.to_str().unwrap(), "phi", "3"]), 2);
}

#[test]
fn exact_solutions_are_json_steps() {
    let liz = data("lizorkin.json");
    let out = stdout(&["solve", "homogeneous", "--input", liz.to_str().unwrap(), "--t", "0.5", "--alpha", "2", "--exact"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let c = v["inner_value"].as_f64().unwrap();
    // the transform is the indicator of S_2, so the solution is e^{−t·4}·f
    assert!((c - (-2.0f64).exp()).abs() < 1e-15);

    let ball = data("ball.json");
    let table = stdout(&["solve", "homogeneous", "--input", ball.to_str().unwrap(), "--t", "0.5", "--alpha", "2", "--radii", "0,2"]);
    assert!(table.starts_with("radius,value,error_bound\n0,"));
}

#[test]
fn adelic_solution_writes_both_factors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let status = bin()
        .args(["--config", data("config.json").to_str().unwrap(), "--output", out.to_str().unwrap()])
        .args(["solve", "adelic", "--input", data("ball.json").to_str().unwrap()])
        .args(["--real", data("real.csv").to_str().unwrap(), "--beta", "2", "--tol", "1e-6"])
        .status()
        .unwrap();
    assert!(status.success());
    let real = std::fs::read_to_string(&out).unwrap();
    assert_eq!(real.lines().count(), 402);
    assert!(dir.path().join("u.fin.json").exists());
    assert!(dir.path().join("u.csv.meta.json").exists());
}
