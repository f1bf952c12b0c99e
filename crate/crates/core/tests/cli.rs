//! The command-line tool on small systems: stage chaining, restartability
//! and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use netbt::sysmodel::{DirectedGraph, DistributedSystem, EtpSchedule, SubsystemMatrices};
use netbt::Matrix;

fn netbt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netbt")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(out: &Output, key: &str) -> f64 {
    let text = stdout(out);
    let line = text.lines().find(|l| l.starts_with(&format!("{key}: "))).unwrap_or_else(|| panic!("no {key} in {text}"));
    line[key.len() + 2..].parse().unwrap()
}

fn scalar(a: f64) -> DistributedSystem {
    let m = SubsystemMatrices::from_blocks(
        &[vec![Matrix::from_element(1, 1, a)]],
        &[Matrix::from_element(1, 1, 1.0)],
        &[Matrix::from_element(1, 1, 1.0)],
        Matrix::zeros(1, 1),
    )
    .unwrap();
    DistributedSystem::new(DirectedGraph::new(1, []).unwrap(), EtpSchedule::new(0, 1).unwrap(), vec![vec![m]]).unwrap()
}

/// Two vertices exchanging one spatial state each way, period two.
fn ring() -> DistributedSystem {
    let graph = DirectedGraph::new(2, [(0, 1), (1, 0)]).unwrap();
    let mk = |s: f64| {
        SubsystemMatrices::from_blocks(
            &[
                vec![Matrix::from_row_slice(2, 2, &[0.3 * s, 0.1, -0.2, 0.1]), Matrix::from_element(2, 1, 0.2)],
                vec![Matrix::from_element(1, 2, 0.1), Matrix::from_element(1, 1, 0.05 * s)],
            ],
            &[Matrix::from_row_slice(2, 1, &[1.0, 0.3]), Matrix::from_element(1, 1, 0.5)],
            &[Matrix::from_row_slice(1, 2, &[1.0, -0.4]), Matrix::from_element(1, 1, 0.2)],
            Matrix::zeros(1, 1),
        )
        .unwrap()
    };
    let slices = (0..2).map(|k| (0..3).map(|t| mk(1.0 + 0.5 * ((k + t) % 3) as f64)).collect()).collect();
    DistributedSystem::new(graph, EtpSchedule::new(1, 2).unwrap(), slices).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unstable_system_exits_with_infeasible_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("unstable.json");
    netbt::sysmodel::save(&scalar(1.1), &file).unwrap();
    let out = netbt(&["analyze", "--system", path(&file)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not strongly stable"));
}

#[test]
fn malformed_and_inconsistent_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(netbt(&["validate", "--system", path(&garbage)]).status.code(), Some(5));
    assert_eq!(netbt(&["validate", "--system", path(&dir.path().join("missing.json"))]).status.code(), Some(5));

    let mut doc: serde_json::Value = serde_json::from_str(&netbt::sysmodel::to_json(&scalar(0.5)).unwrap()).unwrap();
    doc["extra"] = serde_json::json!(1);
    let file = dir.path().join("unknown_field.json");
    std::fs::write(&file, doc.to_string()).unwrap();
    assert_eq!(netbt(&["validate", "--system", path(&file)]).status.code(), Some(5));

    let mut doc: serde_json::Value = serde_json::from_str(&netbt::sysmodel::to_json(&scalar(0.5)).unwrap()).unwrap();
    doc["subsystems"][0]["slices"][0]["b"]["0"] = serde_json::json!({"rows": 2, "cols": 1, "data": [1.0, 1.0]});
    let file = dir.path().join("tall_b.json");
    std::fs::write(&file, doc.to_string()).unwrap();
    let out = netbt(&["validate", "--system", path(&file)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let file = dir.path().join("ring.json");
    netbt::sysmodel::save(&ring(), &file).unwrap();
    let out = netbt(&["validate", "--system", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "valid: 2 vertices, 2 edges");
}

#[test]
fn scalar_analysis_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scalar.json");
    netbt::sysmodel::save(&scalar(0.5), &file).unwrap();
    let out = netbt(&["analyze", "--system", path(&file)]);
    assert!(out.status.success());
    assert!((value(&out, "gamma") - 2.0).abs() < 0.02);
}

#[test]
fn reference_counts() {
    let out = netbt(&["counts", "--reference"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "p1_variable_dim: 3976\np23_variable_dim: 3696\nblock_count: 616\np1_constraints: 4957\np23_constraints: 4956\n"
    );
    assert_eq!(netbt(&["counts"]).status.code(), Some(2), "a source is required");
}

#[test]
fn staged_commands_chain_and_restart_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let file = d.join("ring.json");
    netbt::sysmodel::save(&ring(), &file).unwrap();

    let g = netbt(&["gramians", "--system", path(&file), "--out", path(d)]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    let b = netbt(&[
        "balance",
        "--system",
        path(&file),
        "--ctrl",
        path(&d.join("ctrl_gramians.json")),
        "--obs",
        path(&d.join("obs_gramians.json")),
        "--a1",
        "750",
        "--out",
        path(d),
    ]);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    assert!(value(&b, "max_off_diagonal") <= 1e-8);
    assert!(value(&b, "epsilon") > 0.0);
    // a threshold at the median entry truncates the lower half of every slot
    let sigma = netbt::balance::GramianSet::load(d.join("stage_sigma.json")).unwrap();
    let mut entries: Vec<f64> = sigma.matrices.iter().flat_map(|(_, _, m)| m.diagonal().iter().copied().collect::<Vec<_>>()).collect();
    entries.sort_by(f64::total_cmp);
    let tau = format!("{}", entries[entries.len() / 2]);

    let reduce = |out: &Path| {
        let r = netbt(&[
            "reduce",
            "--system",
            path(&d.join("stage_system.json")),
            "--sigma",
            path(&d.join("stage_sigma.json")),
            "--tau",
            &tau,
            "--out",
            path(out),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        assert!(stdout(&r).contains("reduced_inequalities_hold: true"));
    };
    let (first, second) = (d.join("first"), d.join("second"));
    reduce(&first);
    reduce(&second);
    for name in ["reduced_system.json", "gamma.json", "omega.json"] {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap(), "{name}");
    }

    let bound = netbt(&["bound", "--omega", path(&first.join("omega.json"))]);
    assert!(bound.status.success());
    let (distinct, capped) = (value(&bound, "bound_distinct"), value(&bound, "bound_monotone"));
    assert!(capped > 0.0 && capped <= distinct);

    let sim = netbt(&[
        "simulate",
        "--system",
        path(&file),
        "--reduced",
        path(&first.join("reduced_system.json")),
        "--iterations",
        "50",
        "--out",
        path(&d.join("error.csv")),
    ]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let gain = value(&sim, "gain_lower_bound");
    assert!(gain > 0.0 && gain <= capped, "gain {gain}, bound {capped}");
    let error = netbt::sim::Signal::load_csv(d.join("error.csv")).unwrap();
    assert_eq!(error.horizon(), 12);
}

#[test]
fn sdpa_export_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ring.json");
    netbt::sysmodel::save(&ring(), &file).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(netbt(&["export-sdpa", "--system", path(&file), "--out", path(out)]).status.success());
    }
    for name in ["p1.dat-s", "p2.dat-s", "p3.dat-s"] {
        let text = std::fs::read(a.join(name)).unwrap();
        assert_eq!(text, std::fs::read(b.join(name)).unwrap());
        let form = netbt::sdp::import_sdpa(a.join(name)).unwrap();
        assert_eq!(netbt::sdp::write_sdpa(&form).into_bytes(), text);
    }
}
