use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mofsim_core::qbm::QbmExport;

fn mofsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mofsim")).args(args).output().expect("binary runs")
}

fn repo_config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// (header columns, numeric rows) of a CSV with '#' comments.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("header row").split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn scatter_writes_spectrum_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.csv");
    let o = out.to_str().unwrap();
    let args = [
        "scatter", "--m", "1", "--omega", "942", "--lambda", "5000", "--wmin", "1", "--wmax", "2000", "--n", "2000",
        "-o", o,
    ];
    assert!(mofsim(&args).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# mofsim "));
    assert!(text.lines().any(|l| l.starts_with("# config-sha256: ") && l.len() == "# config-sha256: ".len() + 64));
    assert!(text.lines().any(|l| l.starts_with("# params: {")));
    assert!(!text.contains('\r'));
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["omega", "re_r", "im_r", "abs_r2", "abs_t2"]);
    assert_eq!(rows.len(), 2000);
    assert_eq!(rows[0][0], 1.0);
    assert_eq!(rows[1999][0], 2000.0);
    for r in &rows {
        assert!((r[3] + r[4] - 1.0).abs() < 1e-12);
        assert!((r[1] * r[1] + r[2] * r[2] - r[3]).abs() < 1e-12);
    }
    assert!(dir.path().join("spectrum.csv.echo.json").exists());

    // identical inputs give byte-identical output
    let first = text;
    assert!(mofsim(&args).status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn hz_units_convert_to_angular_frequency() {
    let rad = mofsim(&[
        "scatter",
        "--m",
        "1",
        "--omega",
        "6.283185307179586",
        "--lambda",
        "2",
        "--wmin",
        "3.141592653589793",
        "--wmax",
        "12.566370614359172",
        "--n",
        "7",
    ]);
    let hz = mofsim(&[
        "scatter", "--m", "1", "--omega", "1", "--lambda", "2", "--wmin", "0.5", "--wmax", "2", "--n", "7", "--units",
        "hz",
    ]);
    let (_, a) = parse_csv(&String::from_utf8(rad.stdout).unwrap());
    let (_, b) = parse_csv(&String::from_utf8(hz.stdout).unwrap());
    assert_eq!(b[0][0], 0.5);
    for (x, y) in a.iter().zip(&b) {
        assert!((x[3] - y[3]).abs() < 1e-12, "{} vs {}", x[3], y[3]);
    }
}

#[test]
fn bc_accepts_gamma_or_kappa_lambda() {
    let g = mofsim(&["bc", "--gamma", "0.5", "--wmin", "0.1", "--wmax", "1", "--n", "4"]);
    let kl = mofsim(&["bc", "--kappa", "1", "--lambda", "1", "--wmin", "0.1", "--wmax", "1", "--n", "4"]);
    assert!(g.status.success() && kl.status.success());
    assert_eq!(parse_csv(&String::from_utf8(g.stdout).unwrap()).1, parse_csv(&String::from_utf8(kl.stdout).unwrap()).1);
    assert_eq!(mofsim(&["bc", "--wmin", "0.1", "--wmax", "1"]).status.code(), Some(1));
}

#[test]
fn config_errors_name_the_key_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"units":"rad_per_s","mirrors":[{"m":1,"omega":1,"lambda":1,"mass":-2}],"grid":{"length":1,"box_size":2}}"#,
            "mirrors[0].mass",
            "must be > 0",
        ),
        (r#"{"mirrors":[]}"#, "units", "required"),
        (r#"{"units":"kelvin"}"#, "units", "rad_per_s"),
        (r#"{"units":"hz","grid":{"lenght":1}}"#, "grid.lenght", "unknown key"),
        (r#"{"units":"hz","grid":{"length":2,"box_size":1}}"#, "grid.box_size", "must exceed"),
        (r#"{"units":"hz","mirrors":[{"m":1,"omega":"fast","lambda":1}]}"#, "mirrors[0].omega", "finite number"),
    ];
    for (i, (json, path, msg)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), json);
        let o = mofsim(&["modes", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{json}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(path) && err.contains(msg), "{err}");
    }
    let o = mofsim(&["modes", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(mofsim(&["scatter", "--m", "1", "--bogus"]).status.code(), Some(1));
    assert_eq!(mofsim(&["no-such-command"]).status.code(), Some(1));
    let o = mofsim(&[
        "scatter",
        "--m",
        "1",
        "--omega",
        "1",
        "--lambda",
        "1",
        "--wmin",
        "1",
        "--wmax",
        "2",
        "-o",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        mofsim(&["scatter", "--m", "-1", "--omega", "1", "--lambda", "1", "--wmin", "1", "--wmax", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(mofsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    // both mirrors reflect totally at the mirosc resonance: the multiple-reflection sum diverges
    let o = mofsim(&["cavity", "--config", &repo_config("cavity.json"), "--wmin", "1", "--wmax", "1", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_trap_frequency_is_echoed_as_free() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qbm.txt");
    let o = mofsim(&["qbm-export", "--config", &repo_config("cavity.json"), "-o", out.to_str().unwrap()]);
    // cavity.json has no cutoff
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("grid.cutoff"));

    let cfg = write(
        dir.path(),
        "free.json",
        r#"{"units":"rad_per_s","mirrors":[{"m":1,"omega":2,"lambda":0.5,"position":1}],"grid":{"box_size":3,"cutoff":20}}"#,
    );
    assert!(mofsim(&["qbm-export", "--config", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]).status.success());
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("qbm.txt.echo.json")).unwrap()).unwrap();
    assert_eq!(echo["mirrors"][0]["trap_omega0"], "free");
    assert_eq!(echo["mirrors"][0]["mass"], 1.0);
    // the slow-motion block needs a trap for every mirror
    assert_eq!(mofsim(&["qbm-export", "--config", cfg.to_str().unwrap(), "--slow"]).status.code(), Some(1));
}

#[test]
fn qbm_export_round_trips_through_the_text_reader() {
    let o = mofsim(&["qbm-export", "--config", &repo_config("qbm.json"), "--slow"]);
    assert!(o.status.success());
    let ex: QbmExport = QbmExport::from_text(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(ex.mirror_count(), 2);
    assert!(ex.mode_count() > 0 && ex.displacement_couplings.is_some());
    assert!(ex.bath.iter().all(|&w| w <= 30.0));
}

#[test]
fn cooling_sweep_writes_points_and_follows_the_cos_sign_rule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3");
    let o = out.to_str().unwrap();
    let run = mofsim(&["cooling-sweep", "--config", &repo_config("fig3.json"), "-o", o]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let (header, rows) = parse_csv(&sweep);
    assert_eq!(header, ["L", "F_rad", "Gamma", "Gamma_single", "dOmega2", "stiffness", "omega_eff"]);
    assert_eq!(rows.len(), 131);
    assert_eq!(std::fs::read_dir(out.join("points")).unwrap().count(), 131);
    for name in ["f_rad.dat", "gamma.dat", "omega_eff.dat", "config.echo.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let wd = 300.0 * std::f64::consts::PI;
    for r in &rows {
        let c = (2.0 * wd * r[0]).cos();
        if c.abs() > 1e-6 {
            assert_eq!(r[2] > 0.0, c > 0.0, "L = {}", r[0]);
        }
        assert!((r[2] - 2.0 * r[3]).abs() <= 1e-12 * r[2].abs());
        assert_eq!(r[6].is_nan(), r[5] < 0.0);
    }
    let point: Vec<f64> = parse_csv(&std::fs::read_to_string(out.join("points/point_00042.csv")).unwrap()).1.remove(0);
    let bits = |r: &[f64]| r.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&point), bits(&rows[42]));

    // rerun: same bytes regardless of worker scheduling
    assert!(mofsim(&["cooling-sweep", "--config", &repo_config("fig3.json"), "-o", o]).status.success());
    assert_eq!(std::fs::read_to_string(out.join("sweep.csv")).unwrap(), sweep);
}

#[test]
fn cooling_evolve_averaged_and_full_agree_at_weak_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let l = std::f64::consts::PI / 4.0;
    let cfg = write(
        dir.path(),
        "weak.json",
        &format!(
            r#"{{"units":"rad_per_s","mirrors":[{{"m":1,"omega":1,"lambda":0.7071067811865476,"trap_omega0":0.2}}],
            "drive":{{"amplitude":0.1,"omega_d":2}},"grid":{{"length":{l}}},"integrator":{{"z0":0.001,"dt":0.002,"t_end":60}}}}"#
        ),
    );
    let c = cfg.to_str().unwrap();
    let avg = mofsim(&["cooling-evolve", "--config", c, "--method", "averaged"]);
    let full = mofsim(&["cooling-evolve", "--config", c, "--method", "full"]);
    assert!(avg.status.success() && full.status.success(), "{}", String::from_utf8_lossy(&full.stderr));
    let (h, a) = parse_csv(&String::from_utf8(avg.stdout).unwrap());
    let (_, f) = parse_csv(&String::from_utf8(full.stdout).unwrap());
    assert_eq!(h, ["t", "z", "zdot"]);
    assert_eq!(a.len(), f.len());
    let scale = a.iter().map(|r| r[1].abs()).fold(0.0, f64::max);
    let gap = a.iter().zip(&f).map(|(x, y)| (x[1] - y[1]).abs()).fold(0.0, f64::max);
    assert!(gap < 0.1 * scale, "{gap} vs {scale}");
    assert_eq!(mofsim(&["cooling-evolve", "--config", c, "--dt", "-1"]).status.code(), Some(1));
}

#[test]
fn evolve_conserves_energy_in_a_closed_box_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "box.json",
        r#"{"units":"rad_per_s","mirrors":[{"m":1,"omega":2,"lambda":0.4472135954999579,"mass":5,"position":0.013,"q0":0.1,"velocity":0.01}],
        "grid":{"x_min":-20,"x_max":20,"dx":0.1,"boundary":"dirichlet"},"integrator":{"record_every":50}}"#,
    );
    let out = dir.path().join("traj.csv");
    let ck = dir.path().join("final.ckpt");
    let field = dir.path().join("field.csv");
    let run = mofsim(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--t-end",
        "50",
        "--dt",
        "0.01",
        "-o",
        out.to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
        "--field",
        field.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let (h, rows) = parse_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(h, ["t", "z0", "p_z0", "q0", "energy"]);
    assert_eq!(rows.len(), 101);
    let e0 = rows[0][4];
    assert!(rows.iter().all(|r| ((r[4] - e0) / e0).abs() < 1e-6));
    assert!(rows[100][1] > 0.013);

    let mut bytes = std::fs::File::open(&ck).unwrap();
    let state: mofsim_core::timedomain::SimState = mofsim_core::timedomain::load_checkpoint(&mut bytes).unwrap();
    assert!((state.t - 50.0).abs() < 1e-9);
    let (fh, frows) = parse_csv(&std::fs::read_to_string(&field).unwrap());
    assert_eq!(fh, ["t", "x", "phi"]);
    assert_eq!(frows.len(), state.grid.n);

    // dt beyond the Courant limit is an input error
    assert_eq!(
        mofsim(&["evolve", "--config", cfg.to_str().unwrap(), "--t-end", "1", "--dt", "0.2"]).status.code(),
        Some(1)
    );
}

#[test]
fn scatter_packet_matches_the_closed_form() {
    let o =
        mofsim(&["scatter-packet", "--m", "1", "--omega", "1", "--lambda", "0.8773826753016617", "--omega0", "0.8"]);
    assert!(o.status.success());
    let (h, rows) = parse_csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(h[3], "reflected");
    let r = &rows[0];
    assert!((r[3] - r[8]).abs() < 0.01, "{} vs {}", r[3], r[8]);
    assert!((r[3] + r[4] - 1.0).abs() < 1e-3);
}

#[test]
fn modes_and_nx_tables() {
    let m = mofsim(&["modes", "--config", &repo_config("cavity.json")]);
    let n = mofsim(&["nx", "--config", &repo_config("cavity.json")]);
    assert!(m.status.success() && n.status.success());
    let (_, modes) = parse_csv(&String::from_utf8(m.stdout).unwrap());
    let (_, nx) = parse_csv(&String::from_utf8(n.stdout).unwrap());
    assert_eq!(modes.len(), 12);
    assert_eq!(nx.len(), 12);
    assert!(modes.windows(2).all(|w| w[1][1] > w[0][1]));
    assert!(modes.iter().all(|r| r[4].abs() < 1e-8));
}

#[test]
fn selfcheck_passes() {
    let o = mofsim(&["selfcheck", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().filter(|l| l.contains(" PASS ")).count(), 5);
}

#[test]
fn evolve_projects_out_the_runaway_solution() {
    let run = |extra: &[&str]| {
        let mut args = vec![
            "evolve",
            "--config",
            &*Box::leak(repo_config("cavity.json").into_boxed_str()),
            "--t-end",
            "30",
            "--dt",
            "0.025",
        ];
        args.extend_from_slice(extra);
        let o = mofsim(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8(o.stdout).unwrap();
        let (_, rows) = parse_csv(&text);
        (text, rows.iter().map(|r| r[6].abs()).fold(0.0, f64::max))
    };
    let (text, bounded) = run(&[]);
    assert!(text.contains("# runaway solutions projected out"));
    assert!(bounded <= 0.0101, "{bounded}");
    // the bound solution of the r_p = 1 mirror grows roughly as e^{0.34 t}
    let (_, grown) = run(&["--keep-runaway"]);
    assert!(grown > 1.0, "{grown}");
}
