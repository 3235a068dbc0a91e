//! End-to-end tests of the `fissura` binary: exit codes, determinism of the
//! written artifacts, and the shape of the VTK/CSV outputs.

use std::path::Path;
use std::process::{Command, Output};

fn fissura(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fissura"))
        .args(args)
        .output()
        .expect("failed to spawn fissura")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const TENSION_8X8: &str = "\
[scenario]
kind = tension

[model]
eps = 0.3
eta = 1e-6

[grid]
nx = 8
ny = 8

[load]
t = 0.1
";

#[test]
fn missing_config_file_exits_1() {
    let out = fissura(&["run", "/nonexistent/path.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cannot read"), "stderr: {stderr}");
}

#[test]
fn unknown_key_exits_3_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "[scenario]\nkind = tension\n\n[model]\nepsilon = 0.3\n",
    );
    let out = fissura(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("model.epsilon"), "stderr: {stderr}");
}

#[test]
fn under_resolved_eps_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", TENSION_8X8);
    let out = fissura(&["run", &cfg, "--override", "model.eps=0.05", "--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("under-resolves"), "stderr: {stderr}");
}

#[test]
fn bad_override_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", TENSION_8X8);
    let out = fissura(&["run", &cfg, "--override", "solver.warp_speed=9"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("solver.warp_speed"), "stderr: {stderr}");
}

#[test]
fn tension_run_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", TENSION_8X8);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = fissura(&[
            "run",
            &cfg,
            "--override",
            &format!("output.dir={}", out_dir.display()),
            "--quiet",
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        // --quiet keeps stdout empty.
        assert!(out.stdout.is_empty());
    }
    for name in ["summary.txt", "solution.vtk", "energy_history.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }

    let vtk = std::fs::read_to_string(out_a.join("solution.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(vtk.contains("DATASET STRUCTURED_POINTS"));
    assert!(vtk.contains("DIMENSIONS 9 9 1"));
    assert!(vtk.contains("POINT_DATA 81"));
    // 9 header lines, one vector line per node, 2 scalar-section headers,
    // one scalar line per node.
    assert_eq!(vtk.lines().count(), 9 + 81 + 2 + 81);

    let csv = std::fs::read_to_string(out_a.join("energy_history.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,bulk_mod,bulk_unmod,surf_grad,surf_well,total"));
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6, "row {i}: {line}");
        assert_eq!(fields[0], i.to_string());
        for value in &fields[1..] {
            value.parse::<f64>().unwrap();
        }
    }

    let summary = std::fs::read_to_string(out_a.join("summary.txt")).unwrap();
    assert!(summary.contains("converged"));
    assert!(summary.contains("energy_total"));
}

#[test]
fn summary_is_printed_without_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", TENSION_8X8);
    let out = fissura(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("energy_total"), "stdout: {stdout}");
    // eps = 0.3 < 3h on this grid: a marginal-resolution warning is due.
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("warning"), "stderr: {stderr}");
}

#[test]
fn masonry_shear_patch_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "shear.cfg",
        "[scenario]\nkind = shear_patch\n\n[model]\nvariant = masonry\neps = 0.3\n\n\
         [grid]\nnx = 8\nny = 8\n\n[load]\nt = 0.05\n",
    );
    let out = fissura(&["run", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn iteration_starved_precrack_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pc.cfg",
        "[scenario]\nkind = precracked_plate\n\n[model]\neps = 0.3\n\n[grid]\nnx = 8\nny = 8\n\n\
         [load]\nt = 0.2\n\n[solver]\nmax_outer = 1\n",
    );
    let out = fissura(&["run", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("did not converge"), "stderr: {stderr}");
}

#[test]
fn odd_row_precrack_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pc.cfg",
        "[scenario]\nkind = precracked_plate\n\n[model]\neps = 0.4\n\n[grid]\nnx = 8\nny = 7\n\n\
         [load]\nt = 0.2\n",
    );
    let out = fissura(&["run", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("even"), "stderr: {stderr}");
}

#[test]
fn calibration_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cal.cfg", "[scenario]\nkind = calibration\n");
    let out = fissura(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max_deviation"), "stdout: {stdout}");
}

#[test]
fn recovery_scenario_passes_at_coarse_eps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rec.cfg",
        "[scenario]\nkind = recovery_check\n\n[recovery]\neps_list = 0.08\n",
    );
    let out = fissura(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ratio[eps=0.08]"), "stdout: {stdout}");
}

#[test]
fn lemma_scenario_passes_with_few_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lemma.cfg",
        "[scenario]\nkind = lemma_check\n\n[lemma]\ntrials = 25\nsamples = 32\n",
    );
    let out = fissura(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rescaled_trials"), "stdout: {stdout}");
}

#[test]
fn invalid_thread_count_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", TENSION_8X8);
    let out = Command::new(env!("CARGO_BIN_EXE_fissura"))
        .args(["run", &cfg, "--quiet"])
        .env("FISSURA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FISSURA_THREADS"), "stderr: {stderr}");
}
