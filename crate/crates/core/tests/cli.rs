use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gbhe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbhe")).args(args).output().expect("spawn gbhe")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).expect("write config");
    path.to_str().expect("utf-8 path").to_owned()
}

const SMALL_STUDY: &str = "[mesh]\nscheme = \"cr\"\n[convergence]\nlevels = [4, 8, 16]\n[time]\nt_final = 0.25\n";

#[test]
fn convergence_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "study.toml", SMALL_STUDY);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let res = gbhe(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(fs::read(out.join("convergence.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.contains("# config_sha256 = "));
    assert!(text.contains("# stability level=0"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "level,h,dt,dofs,errL2inf,errEnergy,rateL2,rateEnergy,newton_max");
    assert_eq!(rows.len(), 4);
    let last: Vec<&str> = rows[3].split(',').collect();
    assert_eq!(last.len(), 9);
    let rate: f64 = last[7].parse().unwrap();
    assert!(rate > 0.5, "{rate}");
}

#[test]
fn caputo_flag_changes_the_study() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write_config(dir.path(), "plain.toml", SMALL_STUDY);
    let frac = write_config(dir.path(), "caputo.toml", &format!("{SMALL_STUDY}[kernel]\ncaputo_order = 0.5\n"));
    let mut csv = Vec::new();
    for (cfg, sub) in [(&plain, "p"), (&frac, "c")] {
        let out = dir.path().join(sub);
        let res = gbhe(&["convergence", "--config", cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        csv.push(fs::read_to_string(out.join("convergence.csv")).unwrap());
    }
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_ne!(body(&csv[0]), body(&csv[1]));
    assert!(csv[1].contains("caputo"));
}

#[test]
fn levels_and_seed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "study.toml", SMALL_STUDY);
    let out = dir.path().join("o");
    let res = gbhe(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap(), "--levels", "3", "--seed", "17"]);
    assert_eq!(res.status.code(), Some(0));
    let text = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let res = gbhe(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap(), "--levels", "2"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("gamma.toml", "[model]\nreaction_gamma = 1.5\n", Some("line 2")),
        ("mu.toml", "[kernel]\nmu = 1.2\n", Some("line 2")),
        ("unknown.toml", "[mesh]\ncolour = 3\n", None),
        ("spiral.toml", "[case]\ntype = \"spiral\"\n", None),
        ("spiral_eps.toml", "[case]\ntype = \"spiral\"\n[fhn]\nrho = 0.5\n", None),
    ];
    for (name, text, line) in cases {
        let cfg = write_config(dir.path(), name, text);
        let res = gbhe(&["simulate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&res.stderr);
        if let Some(l) = line {
            assert!(err.contains(l), "{name}: {err}");
        }
    }
    let res = gbhe(&["weights-dump", "--config", "/nonexistent/gbhe.toml"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fail.toml",
        "[mesh]\ncells = 4\n[time]\nt_final = 0.5\nsteps = 1\n[model]\nbeta = 40.0\n[solver]\nmax_iter = 1\n",
    );
    let res = gbhe(&["simulate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

fn point_data(vtk: &str, field: &str) -> Vec<f64> {
    let mut lines = vtk.lines();
    let n: usize =
        lines.by_ref().find_map(|l| l.strip_prefix("POINT_DATA ").map(|n| n.parse().unwrap())).expect("point data");
    lines.by_ref().find(|l| *l == format!("SCALARS {field} double 1")).expect("field");
    lines.next();
    lines.take(n).map(|l| l.parse().unwrap()).collect()
}

#[test]
fn simulate_traveling_wave_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in ["cr", "dg"] {
        let cfg = write_config(
            dir.path(),
            "wave.toml",
            &format!(
                "[mesh]\nscheme = \"{scheme}\"\ncells = 16\n[case]\ntype = \"traveling_wave\"\nre = 50.0\n\
                 [output]\nsnapshot_interval = 0.25\nprefix = \"wave\"\n"
            ),
        );
        let out = dir.path().join(scheme);
        let res = gbhe(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        let mut snaps: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".vtk"))
            .collect();
        snaps.sort();
        // floor(1 / 0.25) + 1
        assert_eq!(snaps, ["wave_0000.vtk", "wave_0001.vtk", "wave_0002.vtk", "wave_0003.vtk", "wave_0004.vtk"]);
        let last = fs::read_to_string(out.join("wave_0004.vtk")).unwrap();
        assert!(last.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(last.contains("t=1.0000000000000000e0"));
        let u = point_data(&last, "u");
        assert!(!u.is_empty());
        for v in u {
            assert!((-0.05..=1.05).contains(&v), "{scheme}: {v}");
        }
        let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
        assert!(diag.contains("step,time,newton,residual,l2,grad,energy"));
        assert_eq!(diag.lines().filter(|l| !l.starts_with('#')).count(), 1 + 64);
    }
}

#[test]
fn weights_dump_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "w.toml", "[mesh]\ncells = 1\n[time]\nt_final = 0.5\nsteps = 5\n");
    let res = gbhe(&["weights-dump", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k,j,weight");
    assert_eq!(rows.len(), 1 + 15);
    // w_11 = (4/3) dt^{-1/2} for K = t^{-1/2}
    let w11: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((w11 - 4.0 / 3.0 / 0.1f64.sqrt()).abs() < 1e-12);
    assert!(rows[1..].iter().all(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap() > 0.0));
}
