use std::path::Path;
use std::process::Command;

use droplet::experiment::{SampleRecord, SweepSummary, Thresholds, SUMMARY_HEADER};

fn droplet(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_droplet")).args(args).current_dir(dir).output().unwrap()
}

const SWEEP: &str = "beta = 0.8\nL = 20\ndelta_values = [0.4, 2.5]\nK = 1.0\nkappa = 0.3\nepsilon = 0.1\n\
tau_source = \"constant\"\ntau0 = 1.4\nbulk_source = \"provided\"\nm_star = 0.9935\nchi = 0.012\n\
chains = 2\nsweeps = 300\nthermalization = 300\nstride = 10\nseed = 5\nn_directions = 256\n";

#[test]
fn sweep_outputs_and_flag_rederivation() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("s.toml"), SWEEP).unwrap();
    let out = droplet(&["sweep", "--config", "s.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("o");
    let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), SUMMARY_HEADER);
    assert_eq!(csv.lines().count(), 3);

    let summary: SweepSummary = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    let text = std::fs::read_to_string(dir.join("records.jsonl")).unwrap();
    let records: Vec<SampleRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 2 * 2 * 30);
    for r in &records {
        let row = summary.rows.iter().find(|row| row.delta == r.delta).unwrap();
        let t = Thresholds {
            scale: summary.scale,
            kappa: 0.3,
            epsilon: 0.1,
            v: row.v_l,
            delta: row.delta,
            phi_star: row.phi_star,
            m_star: summary.m_star,
        };
        assert_eq!(r.derive_flags(&t), r.flags(), "{r:?}");
        assert!(r.lambda_hat() >= 0.0);
        assert_eq!(r.magnetization, row.target_m);
    }
}

#[test]
fn spilled_snapshots_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SWEEP.replace("sweeps = 300", "sweeps = 20").replace("delta_values = [0.4, 2.5]", "delta_values = [2.5]");
    std::fs::write(tmp.path().join("s.toml"), cfg).unwrap();
    let out = droplet(&["sweep", "--config", "s.toml", "--out", "o", "--spill"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let path = tmp.path().join("o/snapshots/delta_0/1/0.isd");
    let grid = droplet::lattice::read_snapshot(std::fs::File::open(path).unwrap()).unwrap();
    assert_eq!(grid.side(), 20);
}

#[test]
fn aborted_point_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SWEEP.replace("delta_values = [0.4, 2.5]", "delta_values = [0.4, 1e5]");
    std::fs::write(tmp.path().join("s.toml"), cfg).unwrap();
    let out = droplet(&["sweep", "--config", "s.toml", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let csv = std::fs::read_to_string(tmp.path().join("o/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "beta = 0.7\nL = 20\ndelta_values = [1.0]\nkappa = 2.0\n").unwrap();
    assert_eq!(droplet(&["sweep", "--config", "bad.toml"], tmp.path()).status.code(), Some(1));
    assert_eq!(droplet(&["sweep", "--config", "missing.toml"], tmp.path()).status.code(), Some(1));
}

#[test]
fn phi_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = droplet(&["phi", "--d", "2", "--delta-from", "0", "--delta-to", "3", "--step", "0.01"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 302);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "3");
    let lambda: f64 = last[3].parse().unwrap();
    assert!(lambda > 0.9 && lambda < 1.0);
}

#[test]
fn enumerate_pmf_sums_to_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = droplet(&["enumerate", "--L", "3", "--beta", "0.6"], tmp.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
