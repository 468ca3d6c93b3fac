use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bvdamage");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bvd(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn summary_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(" = ")).unwrap_or_else(|| panic!("{key} missing"))
}

#[test]
fn solve_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("ramp_solve.cfg");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = bvd(&["solve", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert_eq!(ta.len(), 2);
    assert_eq!(ta, tb);
}

#[test]
fn sweep_is_independent_of_parallelism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("sweep_eps0.cfg");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (d, par) in [(&a, "1"), (&b, "3")] {
        let o = bvd(&["sweep", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--level-parallelism", par]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(read_tree(&a), read_tree(&b));
    let s = fs::read_to_string(a.join("sweep.txt")).unwrap();
    let d: Vec<f64> = summary_value(&s, "distances").split(',').map(|v| v.trim().parse().unwrap()).collect();
    assert_eq!(d.len(), 2);
    assert!(d[1] < d[0], "{d:?}");
}

#[test]
fn malformed_key_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "grid.n = 4\nfoo = 1\n");
    let out = tmp.path().join("o");
    let o = bvd(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).into_owned();
    assert!(err.contains("error.key = foo"), "{err}");
    assert_eq!(fs::read_to_string(out.join("error.txt")).unwrap(), err);

    let cfg = write_cfg(tmp.path(), "grid.n = four\n");
    let o = bvd(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error.key = grid.n"));
}

#[test]
fn trivial_config_gives_constant_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("trivial.cfg");
    let out = tmp.path().join("o");
    let o = bvd(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    for name in ["E_mu", "min_z", "norm_u_H1", "balance_residual", "dist_z"] {
        let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("{name}"));
        assert!(rows.iter().all(|r| r[i] == rows[0][i]), "{name}");
    }
}

#[test]
fn single_level_sweep_matches_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(configs().join("ramp_solve.cfg")).unwrap();
    let solve_out = tmp.path().join("solve");
    let sweep_out = tmp.path().join("sweep");
    let cfg = write_cfg(tmp.path(), &format!("{base}\nregime = eps0\nladder_eps = 0.01\n"));
    let o = bvd(&["solve", "--config", cfg.to_str().unwrap(), "--out", solve_out.to_str().unwrap()]);
    assert!(o.status.success());
    let o = bvd(&["sweep", "--config", cfg.to_str().unwrap(), "--out", sweep_out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(solve_out.join("summary.txt")).unwrap(), fs::read(sweep_out.join("level_0/summary.txt")).unwrap());
    assert_eq!(fs::read(solve_out.join("trajectory.csv")).unwrap(), fs::read(sweep_out.join("level_0/trajectory.csv")).unwrap());
}

#[test]
fn regime_ladder_mismatch_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(configs().join("sweep_eps-nu0.cfg")).unwrap();
    let cfg = write_cfg(tmp.path(), &base.replace("nu_factor = 1.0", "nu_factor = 5"));
    let o = bvd(&["sweep", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("error.kind = config"), "{err}");
    assert!(err.contains("exceeds mu"));
}

#[test]
fn selftest_passes_for_two_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in ["0", "7"] {
        let cfg = write_cfg(tmp.path(), &format!("seed = {seed}\n"));
        let out = tmp.path().join(seed);
        let o = bvd(&["selftest", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        let msg = String::from_utf8_lossy(&o.stdout);
        assert!(o.status.success(), "{msg}");
        assert!(!msg.contains("FAIL"));
        let s = fs::read_to_string(out.join("selftest.txt")).unwrap();
        assert_eq!(summary_value(&s, "seed"), seed);
    }
}

#[test]
fn check_gronwall_with_data() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("g.txt");
    fs::write(&data, "lemma = classic\na = 1, 1.5, 2.25\nb = 0.5, 0.5, 0.5\nbig_b = 1\n").unwrap();
    let out = tmp.path().join("o");
    let o = bvd(&["check-gronwall", "--data", data.to_str().unwrap(), "--trials", "50", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("gronwall.txt").exists());
}

#[test]
fn reparam_writes_both_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let cfg = configs().join("ramp_solve.cfg");
    let o = bvd(&["reparam", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["reparam_std.csv", "reparam_ed.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
