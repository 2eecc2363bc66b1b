use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn visco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_visco"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    let out = visco(&all);
    code(&out)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn dry_run_prints_resolved_config() {
    for sub in ["lp-check", "bony-check", "linear-spectrum", "simulate", "sweep", "gen-data"] {
        let out = visco(&[sub, "--dry-run", "--grid", "32", "--mu", "0.5"]);
        assert_eq!(code(&out), 0, "{sub}");
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("grid = 32") && text.contains("mu = 0.5"), "{text}");
    }
    assert_eq!(code(&visco(&["estimates", "--which", "mixed", "--dry-run"])), 0);
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let out = visco(&["lp-check", "--grid", "17", "--dry-run"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));

    let cfg = write_config(tmp.path(), "[simulate]\nbogus = 1\n");
    let out = visco(&["simulate", "--config", &cfg, "--dry-run"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let cfg = write_config(tmp.path(), "[sweep]\namplitudes = [1e-2, 1e-3]\n");
    let out = visco(&["sweep", "--config", &cfg, "--dry-run"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.amplitudes"));

    let out = visco(&["lp-check", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn lp_check_passes_and_corrupted_cutoff_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(&tmp.path().join("ok"), &["lp-check", "--grid", "16"]), 0);
    assert!(tmp.path().join("ok/lp_profiles.svg").exists());
    assert_eq!(report(&tmp.path().join("ok"))["pass"], true);

    let cfg = write_config(tmp.path(), "[lp_check]\ncutoff_scale = 1.05\n");
    let dir = tmp.path().join("bad");
    assert_eq!(run_in(&dir, &["lp-check", "--grid", "16", "--config", &cfg]), 1);
    let r = report(&dir);
    assert_eq!(r["pass"], false);
    assert!(r["failures"].as_array().unwrap().iter().any(|f| f == "partition_of_unity"));
}

#[test]
fn linear_spectrum_boundary_at_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), &["linear-spectrum", "--mu", "1"]), 0);
    let r = report(tmp.path());
    let b = r["results"]["sign_change_bracket"].as_array().unwrap();
    let (lo, hi) = (b[0].as_f64().unwrap(), b[1].as_f64().unwrap());
    assert!(lo < 2.0 && 2.0 <= hi, "{lo} {hi}");
    let csv = fs::read_to_string(tmp.path().join("decay_spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 402);
}

#[test]
fn bony_check_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[bony_check]\npairs = 5\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_in(&a, &["bony-check", "--grid", "16", "--config", &cfg]), 0);
    assert_eq!(run_in(&b, &["bony-check", "--grid", "16", "--config", &cfg]), 0);
    for name in ["bony_check.csv", "bony_check.svg", "report.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn product_estimates_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[estimates]\nproducts = [\"product_linf\", \"remainder_mixed\"]\nmembers = 4\n",
    );
    assert_eq!(run_in(tmp.path(), &["estimates", "--which", "product", "--grid", "16", "--config", &cfg, "--no-svg"]), 0);
    let csv = fs::read_to_string(tmp.path().join("product_estimates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 4);
    assert!(!tmp.path().join("product_estimates.svg").exists());

    let cfg = write_config(tmp.path(), "[estimates]\nproducts = [\"nope\"]\n");
    assert_eq!(run_in(tmp.path(), &["estimates", "--which", "product", "--config", &cfg]), 2);
}

#[test]
fn simulate_zero_data_gives_zero_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[simulate]\namplitude = 0.0\nt_final = 0.05\ncadence = 1\n");
    assert_eq!(run_in(tmp.path(), &["simulate", "--grid", "16", "--config", &cfg]), 0);
    let csv = fs::read_to_string(tmp.path().join("diagnostics.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(row.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0), "{row}");
    }
    assert!(report(tmp.path())["results"]["bootstrap"]["first_violation"].is_null());
}

#[test]
fn gen_data_round_trips_through_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(run_in(&data, &["gen-data", "--grid", "32", "--seed", "4"]), 0);
    for f in ["a0.bin", "u0.bin", "E0.bin", "certificate.json"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let cert: Value = serde_json::from_str(&fs::read_to_string(data.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["admissible"], true);

    let cfg = write_config(
        tmp.path(),
        &format!(
            "[simulate]\ndata_dir = \"{}\"\nt_final = 0.05\ncadence = 1\ncheckpoint_every = 2\n",
            data.display()
        ),
    );
    let run = tmp.path().join("run");
    assert_eq!(run_in(&run, &["simulate", "--grid", "32", "--config", &cfg, "--no-svg"]), 0);
    assert!(run.join("checkpoint_00000.bin").exists() && run.join("checkpoint_00004.bin").exists());
    assert!(run.join("final_state.bin").exists());

    // Data on another grid is a configuration error.
    assert_eq!(run_in(&tmp.path().join("x"), &["simulate", "--grid", "16", "--config", &cfg]), 2);
}

#[test]
fn det_abort_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[simulate]\nt_final = 0.05\ndet_abort = 1e-30\n",
    );
    let out = visco(&["simulate", "--grid", "32", "--config", &cfg, "--out", tmp.path().join("r").to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&tmp.path().join("r"))["pass"], false);
}

#[test]
fn sweep_writes_one_row_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sweep]\namplitudes = [1e-3, 1e-2]\nseeds = 1\nt_final = 0.1\ncadence = 1\n",
    );
    assert_eq!(run_in(tmp.path(), &["sweep", "--grid", "32", "--config", &cfg]), 0);
    let csv = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn committed_schema_matches_binary() {
    let out = visco(&["schema"]);
    assert_eq!(code(&out), 0);
    let committed = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config.schema.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), committed);
}
