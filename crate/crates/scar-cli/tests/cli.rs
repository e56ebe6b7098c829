use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

/// Reduced basis and two levels, so a full pipeline takes seconds.
const SMALL: &str = r#"
[benchmark]
quantum_numbers = [66, 67]

[benchmark.exact]
x_modes = 40
y_modes = 30

[grid]
nx = 21
ny = 31
"#;

fn scar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scar")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[system]\nomega_zero = 2.0\n");
    let out = tmp.path().join("out");
    let o = scar(&["orbit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omega_zero"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn show_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let first = scar(&["show-config", "--config", &cfg]);
    assert!(first.status.success());
    let canon = write_config(tmp.path(), &String::from_utf8(first.stdout.clone()).unwrap());
    let second = scar(&["show-config", "--config", &canon]);
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("quantum_numbers = [66, 67]") && text.contains("omega0 = 2.0"), "{text}");
}

#[test]
fn compare_needs_exact_scan() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    let o = scar(&["compare", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`quantize`"), "{}", stderr(&o));

    let q = scar(&["quantize", "--config", &cfg, "--out", out_s]);
    assert!(q.status.code() == Some(0) || q.status.code() == Some(1), "{}", stderr(&q));
    let o = scar(&["compare", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("needs the output of `exact-scan`") && msg.contains("scar exact-scan"), "{msg}");

    // Nothing from the refused stage shows up, and the manifest still covers the directory.
    assert!(!out.join("comparison.csv").exists());
    let m = manifest(&out);
    assert!(m["stages"].get("quantize").is_some() && m["stages"].get("compare").is_none());
}

#[test]
fn stale_upstream_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    scar(&["quantize", "--config", &cfg, "--out", out_s]);
    let other = write_config(tmp.path(), &SMALL.replace("[66, 67]", "[67, 68]"));
    let o = scar(&["stability", "--config", &other, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("different configuration"), "{}", stderr(&o));
}

#[test]
fn stage_flag_matches_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = scar(&["orbit", "--config", &cfg, "--out", a.to_str().unwrap()]);
    let ob = scar(&["--stage", "orbit", "--config", &cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(0));
    for f in ["orbit.csv", "poincare.csv", "orbit_summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = scar(&["orbit", "--stage", "field", "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn full_run_is_deterministic_and_fully_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = scar(&["all", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "2"]);
    let ob = scar(&["all", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "2"]);
    for o in [&oa, &ob] {
        // Exit 1 is an honest failed check; anything else is a crash.
        assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(o));
    }

    let names = csv_files(&a);
    assert_eq!(names, csv_files(&b));
    for expected in ["levels.csv", "stability.csv", "sigma_scan.csv", "state_scores.csv", "comparison.csv", "criteria.csv", "field_n66.csv"] {
        assert!(names.iter().any(|n| n == expected), "{expected} missing");
    }
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs between runs");
        let text = fs::read_to_string(a.join(n)).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.split(',').all(|h| !h.is_empty() && h.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')), "{n}: {header}");
    }

    let m = manifest(&a);
    let listed: Vec<(String, String)> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect();
    let mut on_disk = Vec::new();
    let mut stack = vec![a.clone()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(&a).unwrap().to_string_lossy().replace('\\', "/");
                if rel != "manifest.json" {
                    let sum: String = Sha256::digest(fs::read(&p).unwrap()).iter().map(|b| format!("{b:02x}")).collect();
                    on_disk.push((rel, sum));
                }
            }
        }
    }
    on_disk.sort();
    assert_eq!(listed, on_disk);

    let checks = m["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 9);
    let all = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(m["all_passed"].as_bool(), Some(all));
    assert_eq!(oa.status.code(), Some(if all { 0 } else { 1 }));
    let stdout = String::from_utf8_lossy(&oa.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS criterion") || l.starts_with("FAIL criterion")).count(), 9);

    // A later single stage reuses the caches and keeps the earlier stage records.
    let o = scar(&["report", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let m2 = manifest(&a);
    assert_eq!(m2["stages"].as_object().unwrap().len(), 9);
    assert_eq!(fs::read(a.join("summary.txt")).unwrap(), fs::read(b.join("summary.txt")).unwrap());
}
