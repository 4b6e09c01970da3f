use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn carl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carl"))
        .args(args)
        .env_remove("CARL_SIM_THREADS")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn simulate_writes_the_dynamics_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let res = carl(&[
        "simulate",
        "--params",
        &config("empty_cavity.params"),
        "--scenario",
        &config("empty_cavity.scenario"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,re_alpha_minus,im_alpha_minus,p_beat_W,p_probe_out_W,bunching,x_cm_m,v_cm_mps,beat_freq_hz\n"));
    assert_eq!(text.lines().count(), 1 + 1 + 1000);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let args = |seed: &'static str| {
        carl(&[
            "simulate",
            "--params",
            &config("fig3.params"),
            "--scenario",
            &config("fig3_molasses.scenario"),
            "--seed",
            seed,
        ])
    };
    let (a, b, c) = (args("5"), args("5"), args("6"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn parse_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "bad.params", "# comment\nkappa = 2pi*22e3\nn_atoms = lots\n");
    let res = carl(&["simulate", "--params", &params, "--scenario", &config("empty_cavity.scenario")]);
    assert_eq!(res.status.code(), Some(1));
    let err = stderr(&res);
    assert!(err.contains("line 3") && err.contains("n_atoms"), "{err}");

    let params = write(dir.path(), "typo.params", "kapa = 1e5\n");
    let res = carl(&["simulate", "--params", &params, "--scenario", &config("empty_cavity.scenario")]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("unknown key `kapa`"));
}

#[test]
fn usage_errors_exit_with_validation_code() {
    assert_eq!(carl(&["simulate"]).status.code(), Some(1));
    assert_eq!(carl(&["frobnicate"]).status.code(), Some(1));
    assert!(carl(&["--help"]).status.success());
}

#[test]
fn blowup_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "p.params", "kappa = 1e5\nn_atoms = 0\n");
    let scenario = write(
        dir.path(),
        "s.scenario",
        "particles = 1\ndt = 1e-4\nt_end = 0.05\nsample_every = 1\nwindow = 1e-3\n",
    );
    let res = carl(&["simulate", "--params", &params, "--scenario", &scenario]);
    assert_eq!(res.status.code(), Some(2), "{}", stderr(&res));
    assert!(stderr(&res).contains("integration failed"));
}

#[test]
fn analytic_table_and_steady_state() {
    let res = carl(&["analytic", "--params", &config("fig2.params"), "--samples", "10"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,kv_chirp_rad_s,kv_meanfield_rad_s,beat_meanfield_hz");
    assert_eq!(lines.len(), 12);
    // Without friction the mean field is the chirp itself.
    for line in &lines[2..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - f[2]).abs() < 1e-6 * f[1], "{line}");
    }

    let res = carl(&["analytic", "--params", &config("fig3.params"), "--steady"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[2] - 135.19e3).abs() < 10.0, "{text}");

    let res = carl(&["analytic", "--params", &config("fig2.params"), "--steady"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn compare_molasses_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let res = carl(&[
        "compare",
        "--params",
        &config("fig3.params"),
        "--scenario",
        &config("fig3_molasses.scenario"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(stderr(&res).contains("molasses") && stderr(&res).contains("PASS"));
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("t,kv_sim_rad_s,kv_oracle_rad_s,rel_dev,judged\n"));
}

#[test]
fn compare_rejects_custom_protocol_and_mismatched_atoms() {
    let res = carl(&[
        "compare",
        "--params",
        &config("empty_cavity.params"),
        "--scenario",
        &config("empty_cavity.scenario"),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("protocol"));

    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.scenario", "protocol = molasses\nparticles = 100\nweight = 1e4\n");
    let res = carl(&["compare", "--params", &config("fig3.params"), "--scenario", &scenario]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("n_atoms"), "{}", stderr(&res));
}

#[test]
fn analyze_appends_estimator_columns() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.csv");
    let res = carl(&[
        "simulate",
        "--params",
        &config("fig3.params"),
        "--scenario",
        &config("fig3_molasses.scenario"),
        "--out",
        run.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let res = carl(&["analyze", "--params", &config("fig3.params"), run.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",beat_freq_hz,beat_freq_phase_slope_hz,beat_freq_zero_crossing_hz"));
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let ps: f64 = last[9].parse().unwrap();
    let zc: f64 = last[10].parse().unwrap();
    assert!((ps - zc).abs() <= 5e3, "{ps} vs {zc}");
}

fn sweep_files(dir: &Path, values: &str) -> String {
    std::fs::copy(configs().join("sweep.params"), dir.join("sweep.params")).unwrap();
    write(
        dir,
        "short.scenario",
        "protocol = molasses\nseed = 1\nparticles = 50\nt_end = 2e-4\ndt = 5e-9\nsample_every = 10\nwindow = 50e-6\n",
    );
    write(
        dir,
        "g.sweep",
        &format!("parameter = gamma_fric\nvalues = {values}\nparams = sweep.params\nscenario = short.scenario\noutput = out\n"),
    )
}

#[test]
fn sweep_writes_summary_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = sweep_files(dir.path(), "2pi*66e3, 2pi*660e3");
    let res = Command::new(env!("CARGO_BIN_EXE_carl"))
        .args(["sweep", &sweep])
        .env("CARL_SIM_THREADS", "2")
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", stderr(&res));
    let stdout = String::from_utf8(res.stdout).unwrap();
    let slope: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("log-log slope: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope + 1.0 / 3.0).abs() < 0.05, "{stdout}");
    let summary = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("value,steady_beat_hz,spread,converged,exact_beat_hz,asymptotic_beat_hz,error\n"));
    assert!(dir.path().join("out/point_000.csv").exists());
    assert!(dir.path().join("out/point_001.csv").exists());
}

#[test]
fn sweep_validation() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = sweep_files(dir.path(), "2pi*66e3");
    let res = carl(&["sweep", &sweep]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("at least 2"));

    let sweep = sweep_files(dir.path(), "1e5, 2e5");
    let res = Command::new(env!("CARGO_BIN_EXE_carl"))
        .args(["sweep", &sweep])
        .env("CARL_SIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("CARL_SIM_THREADS"));
}
