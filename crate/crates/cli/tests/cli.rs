use std::process::{Command, Output};

fn ngnep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngnep"))
        .args(args)
        .env("NGNEP_THREADS", "2")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn run_builtin_converges() {
    let o = ngnep(&["run", "--problem", "builtin:cournot-active"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("example,N,n,x0,k,i_total,R_f,R_o,R_c,rho_max,termination\n"));
    let r = &rows(&text)[0];
    assert_eq!(r[10], "converged");
    for cell in &r[6..9] {
        assert!(cell.parse::<f64>().unwrap() <= 1e-4, "{cell}");
    }
}

#[test]
fn zero_outer_budget_row() {
    let o = ngnep(&["run", "--problem", "builtin:cournot-active", "--max-outer", "0", "--x0", "0"]);
    assert!(o.status.success());
    let r = &rows(&stdout(&o))[0];
    assert_eq!(r[4], "0");
    assert_eq!(r[5], "0");
    assert_eq!(r[10], "outer_budget");
}

#[test]
fn malformed_file_exits_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\n\n[constants]\nl_theta = [1.0\n").unwrap();
    let o = ngnep(&["run", "--problem", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("column"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_configuration_exits_two() {
    for args in [
        vec!["run", "--problem", "builtin:nope"],
        vec!["run", "--problem", "builtin:market", "--gamma", "1"],
        vec!["run", "--problem", "builtin:market", "--algo", "sgd"],
        vec!["run", "--problem", "builtin:market", "--format", "xml"],
        vec!["sweep", "--problem", "builtin:market", "--targets", "-1"],
    ] {
        assert_eq!(ngnep(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sweep_over_starting_points() {
    let o = ngnep(&["sweep", "--problem", "builtin:cournot-active", "--x0s", "0,1,random"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    let labels: Vec<_> = r.iter().map(|r| r[6].as_str()).collect();
    assert_eq!(labels, ["0", "1", "random"]);
}

#[test]
fn empty_grid_prints_header_only() {
    let o = ngnep(&["sweep", "--problem", "builtin:market", "--x0s", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        vec![
            "sweep".to_string(),
            "--problem".into(),
            "builtin:transport".into(),
            "--x0s".into(),
            "0,random".into(),
            "--algos".into(),
            "ampqp,ampal".into(),
            "--gammas".into(),
            "2,4".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            dir.path().join(name).to_string_lossy().into_owned(),
        ]
    };
    for name in ["a.csv", "b.csv"] {
        let a = args(name);
        assert!(ngnep(&a.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 9);
}

#[test]
fn exported_builtin_runs_like_the_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("market.toml");
    assert!(ngnep(&["export", "market", "--out", path.to_str().unwrap()]).status.success());
    let from_file = stdout(&ngnep(&["run", "--problem", path.to_str().unwrap()]));
    let builtin = stdout(&ngnep(&["run", "--problem", "builtin:market"]));
    assert_eq!(from_file, builtin);
}

#[test]
fn table_format_is_aligned() {
    let o = ngnep(&["run", "--problem", "builtin:market", "--format", "table", "--repeat", "2", "--x0", "random"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let widths: Vec<_> = text.lines().map(|l| l.chars().count()).collect();
    assert_eq!(widths.len(), 4);
    assert!(widths.iter().all(|w| *w == widths[0]));
}
