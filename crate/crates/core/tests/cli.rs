use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn proxiter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxiter")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const PAPER_MAP: &str = r#"
on_m = { matrix = [[0.5, 0.0], [0.0, 0.0]], offset = [-1.5, 0.0] }
on_n = { matrix = [[0.5, 0.0], [0.0, 0.0]], offset = [1.5, 0.0] }
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn paper_config(w0: &str, kind: &str) -> String {
    format!(
        "dimension = 2\nw0 = {w0}\n\
         set_m = {{ type = \"box\", lo = [-4.0, 0.0], hi = [-3.0, 0.0] }}\n\
         set_n = {{ type = \"box\", lo = [3.0, 0.0], hi = [4.0, 0.0] }}\n\
         [map]\nkind = \"{kind}\"\n{PAPER_MAP}"
    )
}

#[test]
fn run_presets_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = proxiter(&["run", "--preset", "paper-example", "--scheme", "ishikawa", "--output", trace.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("converged after 13 iterations"), "{}", stdout(&out));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("scheme,n,coord_0,coord_1,residual,step_norm,gap_residual,dist_M0,p_applied\n"));
    assert_eq!(csv.lines().count(), 1 + 14);

    let out = proxiter(&["run", "--preset", "paper-example", "--scheme", "picard"]);
    assert_eq!(code(&out), 0);

    let out = proxiter(&["run", "--preset", "paper-reflection", "--scheme", "bp-ishikawa"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn unconverged_run_exits_two() {
    let out = proxiter(&["run", "--preset", "paper-example", "--scheme", "picard", "--max-iters", "3"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("not converged"));
}

#[test]
fn usage_errors_exit_one() {
    let out = proxiter(&["run", "--preset", "paper-example", "--scheme", "newton"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("valid schemes: picard, mann, ishikawa"), "{}", stderr(&out));

    let out = proxiter(&["run", "--preset", "elsewhere", "--scheme", "picard"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("paper-reflection"));

    let out = proxiter(&["run", "--scheme", "picard"]);
    assert_eq!(code(&out), 1);

    let out = proxiter(&["run", "--preset", "paper-example", "--scheme", "mann", "--eta", "1.0"]);
    assert_eq!(code(&out), 1);

    let out = proxiter(&["verify", "--preset", "paper-example", "--trials", "0"]);
    assert_eq!(code(&out), 1);

    let out = proxiter(&["run", "--config", "/nonexistent/problem.toml", "--scheme", "picard"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("/nonexistent/problem.toml"));

    let out = proxiter(&["--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn start_outside_m_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "outside.toml", &paper_config("[3.5, 0.0]", "self-preserving"));
    let out = proxiter(&["run", "--config", path.to_str().unwrap(), "--scheme", "picard"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn single_scheme_compare_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let out = proxiter(&[
        "compare",
        "--preset",
        "paper-example",
        "--schemes",
        "mann",
        "--output",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scheme,iterations,converged,final_residual,rate_estimate");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("mann(η=0.999),25,true,"), "{}", lines[1]);
}

#[test]
fn vonneumann_reports_gaps() {
    let out = proxiter(&["vonneumann", "--preset", "paper-example"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("gap = 6\n"), "{text}");
    assert!(text.contains("displacement = (6, 0)"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let same = write_config(
        dir.path(),
        "same.toml",
        &paper_config("[-3.5, 0.0]", "self-preserving").replace("lo = [3.0, 0.0], hi = [4.0, 0.0]", "lo = [-4.0, 0.0], hi = [-3.0, 0.0]"),
    );
    let out = proxiter(&["vonneumann", "--config", same.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("gap = 0\n"), "{}", stdout(&out));

    let ball = write_config(
        dir.path(),
        "ball.toml",
        r#"
dimension = 2
w0 = [0.0, 0.5]
set_m = { type = "ball", center = [0.0, 0.0], radius = 1.0 }
set_n = { type = "halfspace", normal = [-1.0, 0.0], offset = -2.0 }
[map]
kind = "cyclic"
on_m = { matrix = [[1.0, 0.0], [0.0, 1.0]], offset = [0.0, 0.0] }
on_n = { matrix = [[1.0, 0.0], [0.0, 1.0]], offset = [0.0, 0.0] }
"#,
    );
    let out = proxiter(&["vonneumann", "--config", ball.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let gap_line = stdout(&out).lines().find(|l| l.starts_with("gap = ")).unwrap().to_string();
    let gap: f64 = gap_line["gap = ".len()..].parse().unwrap();
    assert!((gap - 1.0).abs() <= 1e-10, "{gap_line}");
}

#[test]
fn verify_passes_on_preset() {
    let out = proxiter(&["verify", "--preset", "paper-example", "--trials", "200"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn strict_verify_catches_misdeclared_kind() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "cyclic.toml", &paper_config("[-3.5, 0.0]", "cyclic"));
    let p = path.to_str().unwrap();

    let lenient = proxiter(&["verify", "--config", p, "--trials", "50"]);
    assert_eq!(code(&lenient), 0, "{}", stdout(&lenient));
    assert!(stdout(&lenient).contains("WARN"));

    let strict = proxiter(&["verify", "--config", p, "--trials", "50", "--strict"]);
    assert_eq!(code(&strict), 3, "{}", stdout(&strict));
    assert!(stdout(&strict).contains("FAIL map-invariance"), "{}", stdout(&strict));
}
