//! Acceptance run: the nine library criteria at their stated tolerances and
//! time budgets, then byte-level reproducibility of every CLI command.
//!
//! Prints one `PASS`/`FAIL` line per criterion and exits non-zero if any fail.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use adelic_core::verify::{run_suite, SUITES};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Every subcommand, in stdout form, at fixed seeds and inputs.
fn commands() -> Vec<Vec<String>> {
    let (ball, liz, forcing, real, config) =
        (data("ball.json"), data("lizorkin.json"), data("forcing.json"), data("real.csv"), data("config.json"));
    let raw: Vec<Vec<&str>> = vec![
        vec!["phi", "10"],
        vec!["phi", "3/20"],
        vec!["ppow", "next", "1/5"],
        vec!["ppow", "prev", "32"],
        vec!["ppow", "range", "1/30", "100"],
        vec!["norm", "2:-3:=5;7:1:=1"],
        vec!["norm", "3:0:=1;5:-2:1234012340"],
        vec!["volume", "ball", "2^-3"],
        vec!["volume", "sphere", "13^1"],
        vec!["ft", &ball],
        vec!["ft", &liz],
        vec!["kernel", "eval", "--t", "1", "--alpha", "2", "--radius", "2"],
        vec!["kernel", "eval", "--t", "0.2", "--alpha", "1.5", "--radius", "0"],
        vec!["kernel", "eval", "--t", "1", "--alpha", "2", "--beta", "1.5", "--x-real", "3", "--radius", "1/3"],
        vec!["kernel", "normalize", "--t", "3", "--alpha", "3", "--tol", "1e-6"],
        vec!["kernel", "normalize", "--t", "1", "--alpha", "2", "--beta", "0.7", "--tol", "1e-6"],
        vec!["kernel", "tail", "--t", "0.5", "--alpha", "2", "--eps", "1/2"],
        vec!["transition", "--t", "0.1", "--alpha", "2", "--x", "3:-1:=1", "--eps", "3"],
        vec!["simulate", "--t-step", "0.1", "--steps", "2000", "--alpha", "2", "--seed", "42"],
        vec!["simulate", "--t-step", "0.5", "--steps", "300", "--alpha", "1.5", "--beta", "1", "--seed", "42"],
        vec!["--format", "json", "simulate", "--t-step", "0.1", "--steps", "100", "--alpha", "3", "--seed", "1"],
        vec!["solve", "homogeneous", "--input", &liz, "--t", "0.5", "--alpha", "2", "--exact"],
        vec!["solve", "homogeneous", "--config", &config, "--input", &ball],
        vec!["solve", "duhamel", "--input", &liz, "--forcing", &forcing, "--t", "1", "--alpha", "2", "--tol", "1e-6"],
        vec![
            "solve", "adelic", "--config", &config, "--input", &ball, "--real", &real, "--beta", "2", "--tol", "1e-6",
        ],
        vec!["verify", "volume"],
    ];
    raw.into_iter().map(|c| c.into_iter().map(String::from).collect()).collect()
}

fn spawn(args: &[String], dir: &Path, with_output: bool) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_adelic"));
    cmd.current_dir(dir).env_remove("ADELIC_THREADS");
    if with_output {
        cmd.args(["--output", "out.dat"]);
    }
    let out = cmd.args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr).trim()));
    }
    let mut files = vec![("stdout".to_string(), out.stdout)];
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for path in names {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = std::fs::read(&path).unwrap();
        if name.ends_with(".meta.json") {
            // the sidecar records wall-clock time; everything else must match
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            v.as_object_mut().unwrap().remove("wall_time_s");
            if let Some(t) = v["error_bounds"].get_mut("suite_wall_time_s") {
                *t = serde_json::Value::Null;
            }
            bytes = serde_json::to_vec(&v).unwrap();
        }
        files.push((name, bytes));
    }
    Ok(files)
}

fn determinism() -> (bool, String) {
    let mut failures = Vec::new();
    let cmds = commands();
    for args in &cmds {
        for with_output in [false, true] {
            let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
            let a = spawn(args, dirs[0].path(), with_output);
            let b = spawn(args, dirs[1].path(), with_output);
            match (a, b) {
                (Ok(a), Ok(b)) if a == b => {}
                (Ok(_), Ok(_)) => failures.push(format!("{} differs between runs", args.join(" "))),
                (Err(e), _) | (_, Err(e)) => failures.push(format!("{} failed: {e}", args.join(" "))),
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{} commands, stdout and --output modes, identical bytes", cmds.len())
    } else {
        failures.join("; ")
    };
    (failures.is_empty(), detail)
}

fn main() -> ExitCode {
    let mut all = true;
    for (i, name) in SUITES.iter().enumerate() {
        let line = match run_suite(name) {
            Ok(r) => {
                all &= r.passed();
                if !r.passed() {
                    eprintln!("{r}");
                }
                r.summary()
            }
            Err(e) => {
                all = false;
                format!("[FAIL] {} {name}: {e}", i + 1)
            }
        };
        println!("{line}");
    }
    let start = Instant::now();
    let (ok, detail) = determinism();
    all &= ok;
    println!(
        "[{}] 10 determinism ({detail}, {:.2} s)",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
