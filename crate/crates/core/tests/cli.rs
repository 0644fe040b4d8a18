use std::path::Path;

use ftform::cli::{certify_graph_report, main_with_args, EXIT_USAGE};
use ftform::graph::{certificate, load_edge_list};

fn ftform(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ftform").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn certify_graph_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.txt", "# chain with a shortcut\n0 1 1\n1 2 1\n1 3 0.5\n2 3 1\n");
    let (code, out, _) = ftform(&["certify-graph", &file]);
    assert_eq!(code, 0);

    let mut direct = Vec::new();
    certify_graph_report(Path::new(&file), &mut direct).unwrap();
    assert_eq!(out, String::from_utf8(direct).unwrap());

    let c = certificate(&load_edge_list(Path::new(&file)).unwrap()).unwrap();
    assert!(out.contains(&format!("lambda_min(Xi) = {:.6}", c.lambda_min_xi)));
    assert!(out.contains(&format!("pi = ({:.6},", c.pi[0])));
}

#[test]
fn unrooted_graph_fails_with_names() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.txt", "0 1 1\n2 3 1\n");
    let (code, _, err) = ftform(&["certify-graph", &file]);
    assert_eq!(code, 1);
    assert!(err.contains("2") && err.contains("3"), "{err}");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(ftform(&["run", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(ftform(&["run"]).0, EXIT_USAGE);
    assert_eq!(ftform(&["run", "--preset", "paper-5a", "--preset", "paper-5b"]).0, EXIT_USAGE);
    assert_eq!(ftform(&["frobnicate"]).0, EXIT_USAGE);
    let (code, out, _) = ftform(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("certify-graph"));
}

#[test]
fn unknown_preset_is_runtime_failure() {
    let (code, _, err) = ftform(&["run", "--preset", "nope", "--no-plots"]);
    assert_eq!(code, 1);
    assert!(err.contains("nope"));
}

#[test]
fn run_writes_outputs_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out_s = out.to_str().unwrap();
    let args = ["run", "--preset", "paper-5b", "--t-end", "0.02", "--out", out_s, "--no-plots"];
    let (code, stdout, _) = ftform(&args);
    // too short to settle, but not diverged
    assert_eq!(code, 3, "{stdout}");
    assert!(out.join("trace.csv").exists() && out.join("metrics.txt").exists());
    let first = std::fs::read(out.join("trace.csv")).unwrap();

    let (code, _, err) = ftform(&args);
    assert_eq!(code, 1);
    assert!(err.contains("refusing to overwrite"), "{err}");

    let mut forced = args.to_vec();
    forced.push("--force");
    forced.extend(["--seed", "99"]);
    assert_eq!(ftform(&forced).0, 3);
    assert_eq!(std::fs::read(out.join("trace.csv")).unwrap(), first);

    let (code, summary, _) = ftform(&["metrics", out.join("trace.csv").to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(summary.contains("agent 1:"), "{summary}");
    assert_eq!(ftform(&["metrics", out.join("trace.csv").to_str().unwrap(), "--tol", "-1"]).0, EXIT_USAGE);
}

#[test]
fn diverged_run_exits_2_and_records_cut() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let (code, stdout, _) =
        ftform(&["run", "--preset", "paper-5a", "--t-end", "0.2", "--out", out.to_str().unwrap(), "--no-plots"]);
    assert_eq!(code, 2, "{stdout}");
    let metrics = std::fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(metrics.contains("diverged at t ="), "{metrics}");
}

#[test]
fn scenario_file_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", "base = \"paper-5b\"\nname = \"short\"\n[integrator]\nt_end = 0.01\n");
    let out = dir.path().join("o");
    assert_eq!(ftform(&["run", "--scenario", &sc, "--out", out.to_str().unwrap()]).0, 3);
    assert!(std::fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));

    let plots = dir.path().join("p");
    let (code, listing, _) =
        ftform(&["plot", out.join("trace.csv").to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(listing.lines().count() > 0);
}

#[test]
fn verify_passes() {
    let (code, out, _) = ftform(&["verify", "--seed", "4"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS")));
}
