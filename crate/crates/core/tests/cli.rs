use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn etdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etdg"))
        .args(args)
        .output()
        .expect("spawn etdg")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn run_writes_csv_with_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = etdg(&[
        "run", "--case", "AR_EXAMPLE", "--methods", "dg,et", "--p", "3", "--n", "4,8",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,p,h,ndof_full,ndof_trefftz,l2error,dgerror");
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 7);
        assert!(f[0] == "dg" || f[0] == "et");
        assert_eq!(f[1], "3");
        for v in &f[2..] {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
        let full: usize = f[3].parse().unwrap();
        let tr: usize = f[4].parse().unwrap();
        if f[0] == "dg" {
            assert_eq!(full, tr);
        } else {
            assert_eq!(tr * 10, full * 4);
        }
    }
    // rate table on stdout when the CSV goes to a file
    assert!(!o.stdout.is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = etdg(&[
            "run", "--case", "DAR_EXAMPLE", "--methods", "dg,et", "--p", "2", "--n", "2,4",
            "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn csv_on_stdout_without_out() {
    let o = etdg(&["run", "--methods", "et", "--p", "2", "--n", "2"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("method,p,h,"));
    assert_eq!(s.lines().count(), 2);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["run", "--case", "AR_EXAMPLE", "--methods", "qt"],
        vec!["run", "--case", "NO_SUCH_CASE"],
        vec!["run", "--methods", "dg,xyz"],
        vec!["run", "--p", "three"],
        vec!["run", "--case", "AR_EXAMPLE", "--methods", "etbox"],
        vec!["diagnose", "--case", "AR_EXAMPLE", "--methods", "qt"],
        vec!["frobnicate"],
    ] {
        let o = etdg(&args);
        assert_eq!(code(&o), 2, "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("r.csv");
    let o = etdg(&["run", "--methods", "dg", "--p", "1", "--n", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    let out = dir.path().join("r.csv");
    fs::write(
        &cfg,
        "# sweep\ncase = DAR_EXAMPLE\nmethods = dg,et\np = 2\nn = 2,4\n",
    )
    .unwrap();
    let o = etdg(&[
        "run", "--config", cfg.to_str().unwrap(), "--methods", "et", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("et,2,")));
}

#[test]
fn diagnose_reports_all_fields() {
    let o = etdg(&["diagnose", "--case", "DAR_EXAMPLE", "--methods", "et", "--p", "3", "--n", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8(o.stdout).unwrap();
    for key in ["rho_max", "sigma_min_rel", "p n n_T dim_Q", "block_equivalence_gap"] {
        assert!(s.contains(key), "missing {key} in\n{s}");
    }
}

#[test]
fn dump_mesh_single_cell() {
    let o = etdg(&["dump-mesh", "--n", "1"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 4);
    assert_eq!(s.lines().filter(|l| l.starts_with("t ")).count(), 2);
}
