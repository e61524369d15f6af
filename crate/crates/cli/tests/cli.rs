use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shishkin-rd"));
    c.env_remove("SHISHKIN_RD_THREADS");
    c
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn with_config(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let cfg = fixture(name);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

/// Rows of the table whose first column is an integer N.
fn table_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|w| w.first().is_some_and(|s| s.parse::<usize>().is_ok()))
        .collect()
}

#[test]
fn validate_builtin_passes() {
    let o = run(&["validate", "--problem", "P2"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("result: admissible"));
    assert_eq!(out.matches(" PASS ").count(), 6);
}

#[test]
fn validate_names_ordering_violation() {
    let o = with_config("validate", "p2_unordered.toml", &[]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("epsilon-order  FAIL"));
    assert!(out.contains("not admissible (epsilon-order)"));
}

#[test]
fn unknown_key_is_usage_error() {
    let o = with_config("validate", "unknown_key.toml", &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("tolerance"), "{err}");
}

#[test]
fn bad_flags_and_config_paths_exit_2() {
    assert_eq!(code(&run(&["solve", "--format", "xml"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(
        code(&run(&["validate", "--config", "/nonexistent/x.toml"])),
        2
    );
    assert_eq!(code(&run(&["mesh", "--problem", "P1", "-N", "48"])), 2);
    assert_eq!(code(&run(&["mesh", "--problem", "P9"])), 2);
    assert_eq!(
        code(&run(&["converge", "--problem", "P3", "--mode", "exact"])),
        2
    );
}

#[test]
fn mesh_prints_tau_to_six_digits() {
    let o = with_config("mesh", "p1_mesh.toml", &[]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("tau_1 = 0.00831777  b_1 = 1"), "{out}");
    assert!(out.contains("mesh: layer-adapted"));
    let counts = out.lines().find(|l| l.starts_with("counts = ")).unwrap();
    let (list, sum) = counts["counts = ".len()..].split_once(" (sum ").unwrap();
    let total: usize = list.split(' ').map(|c| c.parse::<usize>().unwrap()).sum();
    assert_eq!(total, 64);
    assert_eq!(sum, "64)");
}

#[test]
fn mesh_reports_uniform_class() {
    let o = with_config("mesh", "uniform_mesh.toml", &[]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("b = (0)"));
    assert!(out.contains("uniform"));
    assert!(out.contains("J_b = none"));
}

#[test]
fn mesh_csv_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = with_config(
        "mesh",
        "p1_mesh.toml",
        &["--out", dir.path().to_str().unwrap(), "--format", "csv"],
    );
    assert_eq!(code(&o), 0);
    let file = std::fs::read_to_string(dir.path().join("mesh.csv")).unwrap();
    assert_eq!(file, stdout(&o));
    let lines: Vec<&str> = file.lines().collect();
    assert_eq!(lines[0], "j,x_j,spacing_left");
    assert_eq!(lines.len(), 66);
    assert!(lines[65].starts_with("64,1.0000000000000000e0,"));
}

#[test]
fn solve_constant_problem() {
    let o = run(&[
        "solve",
        "--problem",
        "PCONST",
        "-N",
        "128",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    for line in stdout(&o).lines().skip(1) {
        let u: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((u - 1.0).abs() < 1e-12, "{line}");
    }
    let t = stdout(&run(&["solve", "--problem", "PCONST", "-N", "128"]));
    let res: f64 = t
        .lines()
        .find_map(|l| l.strip_prefix("residual max|L^N U - f| = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(res < 1e-12);
}

#[test]
fn solve_p1_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "solve",
        "--problem",
        "P1",
        "-N",
        "256",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let file = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let lines: Vec<&str> = file.lines().collect();
    assert_eq!(lines[0], "j,x,U_1");
    assert_eq!(lines.len(), 258);
    assert!(!file.contains('\r'));
}

#[test]
fn solve_p3_reports_small_residual() {
    let o = run(&["solve", "--problem", "P3", "-N", "128"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let res: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("residual max|L^N U - f| = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(res < 1e-9);
}

#[test]
fn solve_debug_dump_writes_system() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&[
        "solve",
        "--problem",
        "P2",
        "-N",
        "32",
        "--out",
        d,
        "--debug-dump",
    ]);
    assert_eq!(code(&o), 0);
    let sys = std::fs::read_to_string(dir.path().join("system.csv")).unwrap();
    assert_eq!(sys.lines().next(), Some("j,block,row,col,value"));
    // 31 interior rows, 3 blocks of 4 entries and 2 rhs entries each
    assert_eq!(sys.lines().count(), 1 + 31 * 14);
    assert_eq!(code(&run(&["solve", "--debug-dump"])), 2);
}

#[test]
fn solve_refuses_large_epsilon_without_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("big.toml");
    std::fs::write(&cfg, "problem = \"P1\"\nepsilon = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["solve", "--config", c])), 1);
    assert_eq!(
        code(&run(&["solve", "--config", c, "--allow-large-epsilon"])),
        0
    );
    let v = run(&["validate", "--config", c, "--allow-large-epsilon"]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).contains("a3-epsilon     WARN"));
}

#[test]
fn converge_exact_errors_decrease() {
    let o = run(&["converge", "--problem", "P1", "--ns", "64,128,256,512,1024"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("mode = exact"));
    let rows = table_rows(&out);
    assert_eq!(rows.len(), 5);
    let errs: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert_eq!(rows[4][2], "-");
}

#[test]
fn converge_two_mesh_same_shape() {
    let o = run(&["converge", "--problem", "P3", "--ns", "64,128,256"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("mode = two_mesh"));
    let head = out
        .lines()
        .find(|l| l.trim_start().starts_with("N "))
        .unwrap();
    let cols: Vec<&str> = head.split_whitespace().collect();
    assert_eq!(
        cols,
        [
            "N",
            "diff_2N",
            "order",
            "eff_order",
            "eff_order_sq",
            "bound_const"
        ]
    );
    assert!(!cols.contains(&"error"));
    assert!(table_rows(&out).iter().all(|r| r.len() == 6));
}

#[test]
fn converge_synthetic_orders_are_two() {
    let o = run(&["converge", "--synthetic", "--ns", "16,32,64,128"]);
    assert_eq!(code(&o), 0);
    let rows = table_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    for r in &rows[..3] {
        assert_eq!(r[2], "2.0000");
    }
}

#[test]
fn converge_writes_series_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "converge",
        "--problem",
        "P1",
        "--ns",
        "64,128",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(
        series.lines().next(),
        Some("eps_id,N,error,order,effective_order,bound_constant")
    );
    assert_eq!(series.lines().count(), 3);
    let last = series.lines().last().unwrap();
    assert!(last.starts_with("0,128,") && last.contains(",,,"));
    assert!(dir.path().join("uniform.csv").exists());
    assert!(dir.path().join("convergence.dat").exists());
}

#[test]
fn custom_problem_solves_and_converges() {
    let o = with_config("validate", "custom.toml", &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = with_config("solve", "custom.toml", &["--format", "csv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("j,x,U_1,U_2"));
    assert_eq!(out.lines().count(), 130);
    assert!(out
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(",0.0000000000000000e0,1.0000000000000000e0"));
    let o = with_config("converge", "custom.toml", &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(table_rows(&stdout(&o)).len(), 3);
}

#[test]
fn sweep_skips_inadmissible_vectors() {
    let o = with_config("sweep", "sweep_small.toml", &["--format", "table"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("eps_id 1"));
    assert!(!out.contains("eps_id 2"));
    assert!(out.contains("skipped epsilon = (0.0100000, 0.000100000)"));
    assert_eq!(table_rows(&out).len(), 3);
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let cfg = fixture("sweep_small.toml");
    let go = |threads: &str| {
        bin()
            .args([
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--format",
                "csv",
            ])
            .env("SHISHKIN_RD_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = go("1");
    let four = go("4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(code(&go("none")), 2);
}

#[test]
fn check_default_passes() {
    let o = run(&["check"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.matches("[PASS]").count(), 4);
    assert!(out.contains("result: all suites passed"));
}

#[test]
fn check_rejects_a1_violation() {
    let o = with_config("check", "a1_violation.toml", &[]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    let mp = out.lines().find(|l| l.contains("max principle")).unwrap();
    assert!(
        mp.starts_with("[FAIL]") && mp.contains("config:P2 N=16 FAIL"),
        "{mp}"
    );
    assert!(out.contains("[PASS] mesh invariants"));
}

#[test]
fn check_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(&["check", "--seed", "7", "--out", a.path().to_str().unwrap()]);
    let second = run(&["check", "--seed", "7", "--out", b.path().to_str().unwrap()]);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    let fa = std::fs::read(a.path().join("check.txt")).unwrap();
    let fb = std::fs::read(b.path().join("check.txt")).unwrap();
    assert_eq!(fa, fb);
    assert!(stdout(&first).starts_with("seed = 7\n"));
}

#[test]
fn solve_output_is_byte_deterministic() {
    let a = run(&["solve", "--problem", "P3", "-N", "256", "--format", "csv"]);
    let b = run(&["solve", "--problem", "P3", "-N", "256", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
}
