//! End-to-end checks of the `ov` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ov_core::io::read_table;
use ov_core::soliton::single_loop_soliton;
use ov_core::C64;

fn ov(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ov")).current_dir(dir).args(args).output().expect("run ov")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn pole_file(dir: &Path, name: &str, poles: &[(f64, f64)]) {
    let mut s = String::from("format = \"ov-1\"\nreflection = \"zero\"\n");
    for (rho, c) in poles {
        s += &format!(
            "[[poles]]\nre = {:?}\nim = {:?}\nc_re = {c:?}\nc_im = 0.0\nkind = \"type1\"\n",
            rho * (PI / 6.0).cos(),
            rho * (PI / 6.0).sin()
        );
    }
    fs::write(dir.join(name), s).unwrap();
}

#[test]
fn empty_data_gives_flat_profile() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("zero.toml"), "format = \"ov-1\"\n").unwrap();
    let o = ov(d.path(), &["soliton", "--data", "zero.toml", "--out", "p.csv", "--n", "11"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_table(&d.path().join("p.csv"), &["y", "x", "u"]).unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[0] == r[1] && r[2] == 0.0));
    assert!(d.path().join("p.json").is_file());
}

#[test]
fn one_soliton_matches_closed_form() {
    let d = tempfile::tempdir().unwrap();
    pole_file(d.path(), "one.toml", &[(1.2, 1.5)]);
    let o = ov(d.path(), &["soliton", "--data", "one.toml", "--t", "1", "--out", "p.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_table(&d.path().join("p.csv"), &["y", "x", "u"]).unwrap();
    for r in rows {
        let (x, u) = single_loop_soliton(1.2, PI / 3.0, C64::new(1.5, 0.0), r[0], 1.0).unwrap();
        assert!((x - r[1]).abs() < 1e-9 && (u - r[2]).abs() < 1e-9, "y = {}", r[0]);
    }
}

#[test]
fn off_ray_pole_exits_2_naming_it() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("bad.toml"),
        "format = \"ov-1\"\nreflection = \"zero\"\n[[poles]]\nre = 1.0\nim = 0.7\nc_re = 1.0\nc_im = 0.0\nkind = \"type1\"\n",
    )
    .unwrap();
    let o = ov(d.path(), &["soliton", "--data", "bad.toml", "--out", "p.csv"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pole #0") && err.contains("0.7"), "{err}");
    assert_eq!(code(&ov(d.path(), &["soliton", "--no-such-flag"])), 2);
}

#[test]
fn asympt_gate_and_columns() {
    let d = tempfile::tempdir().unwrap();
    pole_file(d.path(), "two.toml", &[(1.0, 1.0), (1.3, 2.0)]);
    let o = ov(d.path(), &["asympt", "--data", "two.toml", "--t", "5", "--out", "a.csv"]);
    assert_eq!(code(&o), 3);

    let grid = ["--t", "20", "--y-min", "-31.05", "--y-max", "8.95", "--n", "81"];
    let mut a = vec!["asympt", "--data", "two.toml", "--out", "a.csv"];
    a.extend(grid);
    let mut s = vec!["soliton", "--data", "two.toml", "--out", "s.csv"];
    s.extend(grid);
    assert_eq!(code(&ov(d.path(), &a)), 0);
    assert_eq!(code(&ov(d.path(), &s)), 0);
    let asympt = fs::read_to_string(d.path().join("a.csv")).unwrap();
    let exact = fs::read_to_string(d.path().join("s.csv")).unwrap();
    for (la, ls) in asympt.lines().zip(exact.lines()).skip(1) {
        let cols: Vec<&str> = la.split(',').collect();
        assert_eq!(cols[..3].join(","), ls);
        let y: f64 = cols[0].parse().unwrap();
        let want = if y > 0.0 { ("II", "t^-1") } else { ("I", "t^-3/4") };
        assert_eq!((cols[3], cols[4]), want, "y = {y}");
    }
}

#[test]
fn config_tables_and_flag_override() {
    let d = tempfile::tempdir().unwrap();
    pole_file(d.path(), "one.toml", &[(1.0, 1.0)]);
    fs::write(d.path().join("run.toml"), "[soliton]\ndata = \"one.toml\"\nn = 7\nout = \"c.csv\"\n").unwrap();
    let o = ov(d.path(), &["--config", "run.toml", "soliton", "--n", "9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_table(&d.path().join("c.csv"), &["y"]).unwrap().len(), 9);
    fs::write(d.path().join("typo.toml"), "[soliton]\nnn = 7\n").unwrap();
    assert_eq!(code(&ov(d.path(), &["--config", "typo.toml", "soliton"])), 2);
}

#[test]
fn zero_profile_scatters_to_zero_and_stays_zero() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,u0\n");
    for k in 0..201 {
        csv += &format!("{},0\n", -10.0 + 0.1 * k as f64);
    }
    fs::write(d.path().join("z.csv"), &csv).unwrap();
    let o = ov(d.path(), &["scatter", "--profile", "z.csv", "--out", "z.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let data = ov_core::io::read_scattering(&d.path().join("z.toml")).unwrap();
    assert!(data.reflection.is_zero() && data.poles.is_empty());

    fs::write(d.path().join("zu.csv"), csv.replace("u0", "u")).unwrap();
    let o = ov(d.path(), &["evolve", "--profile", "zu.csv", "--T", "1", "--L", "20", "--modes", "64", "--out", "ev"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let last = read_table(&d.path().join("ev/snap_0001.csv"), &["x", "u"]).unwrap();
    assert!(last.iter().all(|r| r[1] == 0.0));
    assert!(d.path().join("ev/manifest.json").is_file());
}

#[test]
fn pipeline_round_trip() {
    let d = tempfile::tempdir().unwrap();
    pole_file(d.path(), "one.toml", &[(1.1, 2.0)]);
    let run = |args: &[&str]| {
        let o = ov(d.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["soliton", "--data", "one.toml", "--out", "p1.csv"]);
    run(&["scatter", "--loop-soliton", "one.toml", "--out", "back.toml"]);
    run(&["soliton", "--data", "back.toml", "--out", "p2.csv"]);
    let a = read_table(&d.path().join("p1.csv"), &["x", "u"]).unwrap();
    let b = read_table(&d.path().join("p2.csv"), &["x", "u"]).unwrap();
    let linf = a.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs()));
    assert!(linf < 1e-2, "{linf}");
}

#[test]
fn resolution_table() {
    let d = tempfile::tempdir().unwrap();
    pole_file(d.path(), "two.toml", &[(1.0, 1.0), (1.05, 2.0)]);
    let o = ov(d.path(), &["compare", "--data", "two.toml", "--times", "20,50,100,200", "--out", "r.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_table(&d.path().join("r.csv"), &["t", "sup_u_err"]).unwrap();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![20.0, 50.0, 100.0, 200.0]);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(rows[3][1] < 1e-3);
}

#[test]
fn compare_profile_against_itself_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let (mut e, mut s) = (String::from("y,x,u\n"), String::from("x,u\n"));
    for k in 0..64 {
        let x = -8.0 + 0.25 * k as f64;
        let u = 0.1 * x * (-x * x).exp();
        e += &format!("{x:e},{x:e},{u:e}\n");
        s += &format!("{x:e},{u:e}\n");
    }
    fs::write(d.path().join("e.csv"), e).unwrap();
    fs::write(d.path().join("s.csv"), s).unwrap();
    let o = ov(d.path(), &["compare", "--exact", "e.csv", "--state", "s.csv", "--out", "c.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_table(&d.path().join("c.csv"), &["linf", "l2"]).unwrap();
    assert_eq!(r[0], vec![0.0, 0.0]);
}
