use std::path::Path;
use std::process::Command;

fn wavelab(sub: &str, config: &str, out: &Path) -> (i32, String) {
    let cfg = out.join(format!("{sub}.toml"));
    std::fs::create_dir_all(out).unwrap();
    std::fs::write(&cfg, config).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wavelab"))
        .args([
            sub,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--deterministic",
        ])
        .output()
        .unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_data_solve_reports_zero_norms() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) = wavelab("solve", "eps = 0.0\nT = 2.0\n", d.path());
    assert_eq!(code, 0, "{err}");
    let v = json(&d.path().join("solve.json"));
    for k in ["E1", "E2", "Y1", "Y2", "Z1", "Z2"] {
        assert_eq!(v["norms"][k].as_f64(), Some(0.0), "{k}");
    }
    assert_eq!(v["status"]["status"], "completed");
}

#[test]
fn lifespan_blowups_are_data() {
    let d = tempfile::tempdir().unwrap();
    let (code, err) =
        wavelab("lifespan", "eps_list = [8.0, 6.0]\na = 1.0\nlambda = 1.0\nt_budget = 2.0\ng_amplitude = 1.0\namplitude = 0.0\n", d.path());
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(d.path().join("lifespan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,t_star,criterion"));
    assert_eq!(
        lines.filter(|l| l.ends_with("coefficient_bound")).count(),
        2,
        "{csv}"
    );
}

#[test]
fn config_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        wavelab("verify-identity", "multiplier_param = 1.5\n", d.path()).0,
        2
    );
    let (code, err) = wavelab("solve", "mu = 0.7\n", d.path());
    assert_eq!(code, 2);
    assert!(err.contains("mu must lie in (0, 1/2)"), "{err}");
    assert_eq!(wavelab("solve", "colour = 1\n", d.path()).0, 2);
    assert_eq!(wavelab("frobnicate", "", d.path()).0, 2);
}

#[test]
fn run_failures_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    // data far outside the admissible ball fails the iteration
    let (code, _) = wavelab(
        "iterate",
        "eps = 5.0\na = 1.0\nlambda = 1.0\nT = 1.0\n",
        d.path(),
    );
    assert_eq!(code, 1);
}

#[test]
fn every_command_writes_its_reports() {
    let d = tempfile::tempdir().unwrap();
    let cases: [(&str, &str, &[&str]); 9] = [
        ("solve", "eps = 0.05\nT = 1.0\ntrace_stride = 10\n", &["solve.json", "trace.csv"]),
        ("norms", "eps = 0.05\nT = 1.0\n", &["norms.json", "energy.csv"]),
        ("iterate", "eps = 0.01\nT = 1.0\na = 1.0\nlambda = 1.0\nk_max = 4\n", &["iteration.json", "iteration.csv", "constants.json"]),
        ("verify-identity", "multiplier = \"ms\"\nmultiplier_param = 4.0\nnr_list = [64, 128]\nT = 0.5\n", &["identity.json"]),
        ("check-inequalities", "multiplier = \"ms\"\nmultiplier_param = 4.0\nk_list = [1, 2]\nsamples = 100\n", &["inequalities.json"]),
        ("verify-estimate", "eps_list = [0.01]\nt_list = [1.0, 2.0]\nk_list = [1, 2]\nalpha_list = [1.5]\ngamma_list = [0.5]\n", &["estimate.csv", "estimate.json", "convolution.json"]),
        ("lifespan", "eps_list = [0.4]\nt_budget = 1.0\na = 1.0\nlambda = 1.0\n", &["lifespan.csv", "lifespan_fit.json"]),
        ("continuity", "eps = 0.05\nT = 1.0\na = 1.0\nlambda = 1.0\ndirections = 2\ndelta_list = [0.0, 0.01]\n", &["continuity.csv", "continuity.json"]),
        ("continue", "eps = 0.05\nT = 2.0\na = 1.0\nlambda = 1.0\nsegments = 2\n", &["continuation.json"]),
    ];
    for (sub, cfg, files) in cases {
        let out = d.path().join(sub);
        let (code, err) = wavelab(sub, cfg, &out);
        assert_eq!(code, 0, "{sub}: {err}");
        for f in files {
            assert!(out.join(f).exists(), "{sub} did not write {f}");
        }
    }
    let c = json(&d.path().join("iterate").join("constants.json"));
    let names: Vec<&str> = c["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["C_S", "C2", "C3", "C4", "c0", "M1", "A1", "A2"]);
    assert!(c["entries"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["experiment"] == "iterate"));
}

#[test]
fn serial_runs_are_bitwise_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "eps_list = [0.01, 0.05]\nt_list = [1.0, 3.0]\nh_list = [0.0, 0.1]\n";
    assert_eq!(wavelab("verify-estimate", cfg, &d.path().join("a")).0, 0);
    assert_eq!(wavelab("verify-estimate", cfg, &d.path().join("b")).0, 0);
    for f in ["estimate.csv", "estimate.json"] {
        assert_eq!(
            std::fs::read(d.path().join("a").join(f)).unwrap(),
            std::fs::read(d.path().join("b").join(f)).unwrap()
        );
    }
}
