#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub const GOLDEN: [&str; 3] = ["robin_ellipse", "neumann_infeasible", "ball3d_robin"];
pub const GOLDEN_TOL: f64 = 1e-9;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config(name: &str) -> PathBuf {
    workspace_root().join("configs").join(format!("{name}.json"))
}

pub fn golden_report(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.report.json"))
}

/// Runs the binary and returns its exit code.
pub fn run(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_meancurv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("OUT_DIR")
        .output()
        .expect("binary runs")
        .status;
    status.code().expect("exited normally")
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Structural equality with floating-point leaves compared to `tol`, relative above 1.
pub fn json_close(a: &Value, b: &Value, tol: f64, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            if x.is_f64() || y.is_f64() {
                let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                if (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0) {
                    Ok(())
                } else {
                    Err(format!("{path}: {x} vs {y}"))
                }
            } else if x == y {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{path}: length {} vs {}", x.len(), y.len()));
            }
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                json_close(u, v, tol, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<_> = x.keys().collect();
            let ky: Vec<_> = y.keys().collect();
            if kx != ky {
                return Err(format!("{path}: keys {kx:?} vs {ky:?}"));
            }
            for (k, u) in x {
                json_close(u, &y[k], tol, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}

/// Every file of `a` exists in `b` with identical bytes.
pub fn identical_dirs(a: &Path, b: &Path) -> Result<(), String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut other: Vec<_> = std::fs::read_dir(b)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    other.sort();
    if names != other {
        return Err(format!("file sets differ: {names:?} vs {other:?}"));
    }
    for n in names {
        if std::fs::read(a.join(&n)).unwrap() != std::fs::read(b.join(&n)).unwrap() {
            return Err(format!("{} differs between runs", n.to_string_lossy()));
        }
    }
    Ok(())
}

/// Runs a golden config twice and checks determinism and the stored report.
/// With UPDATE_GOLDEN=1 the stored report is replaced instead.
pub fn check_golden(name: &str, scratch: &Path) -> Result<i32, String> {
    let (a, b) = (scratch.join(format!("{name}_a")), scratch.join(format!("{name}_b")));
    let cfg = config(name);
    let cfg = cfg.to_str().unwrap();
    let code = run(&["verify", "--config", cfg], &a);
    let again = run(&["verify", "--config", cfg], &b);
    if code != again {
        return Err(format!("exit codes {code} and {again} differ"));
    }
    identical_dirs(&a, &b)?;
    let golden = golden_report(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::copy(a.join("report.json"), &golden).unwrap();
        return Ok(code);
    }
    if !golden.exists() {
        return Err(format!("missing {}; run with UPDATE_GOLDEN=1", golden.display()));
    }
    json_close(&read_json(&golden), &read_json(&a.join("report.json")), GOLDEN_TOL, "")?;
    Ok(code)
}
