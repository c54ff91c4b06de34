use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_lepski");

fn campaign() -> Value {
    json!({
        "process": {"kind": {"type": "iid_regression", "design": {"kind": "uniform", "low": -1, "high": 1}},
                    "f_true": {"type": "holder", "scale": 1, "s": 0.5, "center": [0]},
                    "stopping": {"type": "fixed_n", "n": 100}},
        "grid": {"x_point": [0], "h0": 1},
        "modulus": {"type": "holder", "s": 0.5, "scale": 1},
        "n_ladder": [100], "n_rep": 3, "master_seed": 5,
        "tail": {"t_grid": [0, 1, 2]}
    })
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, cfg.to_string()).unwrap();
    p
}

fn lepski(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("LEPSKI_SEED").env_remove("LEPSKI_JOBS").output().unwrap()
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = lepski(&args);
    assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[i].to_string()).collect()
}

const GRID_COLUMNS: &str = "master_seed,x_point,h0,q,b,nu,u0,delta0,alpha0,j_max";

#[test]
fn simulate_writes_one_file_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = campaign();
    cfg["n_ladder"] = json!([100, 200]);
    let config = write_config(tmp.path(), &cfg);
    run_ok("simulate", &config, tmp.path(), &[]);
    let files: Vec<_> = fs::read_dir(tmp.path().join("samples")).unwrap().collect();
    assert_eq!(files.len(), 2 * 3);
    let first = tmp.path().join("samples/n100_rep0.csv");
    assert_eq!(header(&first), "k,x_0,y,sigma");
    assert_eq!(csv_rows(&first).len(), 100);
    assert_eq!(header(&tmp.path().join("samples_manifest.csv")), "n,rep,seed,n_stop,file,master_seed");
}

#[test]
fn repeated_seed_gives_identical_files_and_seed_flag_changes_them() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &campaign());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run_ok("simulate", &config, &a, &[]);
    run_ok("simulate", &config, &b, &[]);
    run_ok("simulate", &config, &c, &["--seed", "6"]);
    let read = |d: &Path| fs::read(d.join("samples/n100_rep1.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn seed_env_var_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &campaign());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_ok("simulate", &config, &a, &["--seed", "77"]);
    let o = Command::new(BIN)
        .args(["simulate", "--config", config.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("LEPSKI_SEED", "77")
        .env("LEPSKI_JOBS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(a.join("samples_manifest.csv")).unwrap(), fs::read(b.join("samples_manifest.csv")).unwrap());
}

#[test]
fn estimate_header_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &campaign());
    run_ok("estimate", &config, tmp.path(), &["--format", "csv"]);
    assert_eq!(
        header(&tmp.path().join("estimate.csv")),
        format!("source,n,rep,seed,n_stop,h_hat,j_hat,f_hat,h_u0,h_star,wbar_h_star,f_x,risk,omega_prime,error,{GRID_COLUMNS}")
    );
    assert_eq!(csv_rows(&tmp.path().join("estimate.csv")).len(), 3);
    assert_eq!(column(&tmp.path().join("estimate.csv"), "nu"), vec!["2.0"; 3]);
}

#[test]
fn estimate_json_matches_csv_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &campaign());
    run_ok("estimate", &config, tmp.path(), &["--format", "json"]);
    let v: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("estimate.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["q"], json!(0.9));
    assert!(!tmp.path().join("estimate.csv").exists());
}

#[test]
fn noiseless_risk_is_bias_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = campaign();
    cfg["process"]["noise"] = json!({"law": "gaussian", "sd": 0});
    cfg["process"]["f_true"] = json!({"type": "holder", "scale": 1, "s": 1, "center": [0]});
    cfg["modulus"] = json!({"type": "holder", "s": 1, "scale": 1});
    cfg["n_ladder"] = json!([100, 1000]);
    let config = write_config(tmp.path(), &cfg);
    run_ok("estimate", &config, tmp.path(), &[]);
    let path = tmp.path().join("estimate.csv");
    let h: Vec<f64> = column(&path, "h_hat").iter().map(|v| v.parse().unwrap()).collect();
    let risk: Vec<f64> = column(&path, "risk").iter().map(|v| v.parse().unwrap()).collect();
    for (h, r) in h.iter().zip(&risk) {
        assert!(*r <= *h + 1e-15, "risk {r} exceeds w(H_hat) = {h}");
    }
}

#[test]
fn failed_omega_prime_rows_are_flagged_not_dropped() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = campaign();
    // With sigma = 5, twenty points give L(h0) = 0.8 < 1, so the level at h0 exceeds u0.
    cfg["process"]["scale"] = json!({"type": "constant", "value": 5});
    cfg["n_ladder"] = json!([20]);
    cfg["n_rep"] = json!(4);
    let config = write_config(tmp.path(), &cfg);
    run_ok("estimate", &config, tmp.path(), &[]);
    let path = tmp.path().join("estimate.csv");
    let flags = column(&path, "omega_prime");
    let errors = column(&path, "error");
    assert_eq!(flags.len(), 4);
    for (f, e) in flags.iter().zip(&errors) {
        if f == "false" {
            assert!(!e.is_empty());
        }
    }
    assert!(flags.iter().any(|f| f == "false"));
}

#[test]
fn estimate_reads_input_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &campaign());
    run_ok("simulate", &config, tmp.path(), &[]);
    let input = tmp.path().join("samples/n100_rep2.csv");
    let out = tmp.path().join("from_file");
    run_ok("estimate", &config, &out, &["--input", input.to_str().unwrap()]);
    let path = out.join("estimate.csv");
    assert_eq!(csv_rows(&path).len(), 1);
    assert_eq!(column(&path, "risk"), vec![String::new()]);
    assert_eq!(column(&path, "f_x"), vec![String::new()]);

    let simulated = tmp.path().join("sim");
    run_ok("estimate", &config, &simulated, &[]);
    assert_eq!(column(&simulated.join("estimate.csv"), "h_hat")[2], column(&path, "h_hat")[0]);
}

#[test]
fn tail_risk_at_zero_is_the_omega_prime_share() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = campaign();
    cfg["n_rep"] = json!(150);
    cfg["n_ladder"] = json!([1000]);
    let config = write_config(tmp.path(), &cfg);
    run_ok("tail-risk", &config, tmp.path(), &["--t-grid", "0,0.5,1,2,4"]);
    let path = tmp.path().join("tail_risk.csv");
    assert_eq!(header(&path), format!("n,t,empirical_prob,stderr,n_eff,n_rep,{GRID_COLUMNS}"));
    let p: Vec<f64> = column(&path, "empirical_prob").iter().map(|v| v.parse().unwrap()).collect();
    let n_eff: f64 = column(&path, "n_eff")[0].parse().unwrap();
    assert_eq!(p[0], n_eff / 150.0);
    assert!(p.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn tail_risk_needs_enough_omega_prime_replications() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &campaign());
    let o = lepski(&["tail-risk", "--config", config.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Omega'"));
}

#[test]
fn rates_tables_have_stable_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = campaign();
    cfg["n_ladder"] = json!([1000, 4000]);
    cfg["process"]["px_declared"] = json!({"x": 0, "tau": 0, "ell": 1, "h0": 1});
    let config = write_config(tmp.path(), &cfg);
    run_ok("rates", &config, tmp.path(), &[]);
    assert_eq!(
        header(&tmp.path().join("rates_reps.csv")),
        "ladder_n,rep,n,seed,h_star,wbar_h_star,h_w_empirical,rate_random,h_w,rate_det,ratio,omega0,omega_prime,contained,master_seed"
    );
    assert_eq!(
        header(&tmp.path().join("rates.csv")),
        "n,n_rep,h_w,rate_det,median_h_w_empirical,median_rate_random,containment,omega0_fail,error"
    );
    assert_eq!(header(&tmp.path().join("rates_fit.csv")), "quantity,slope,stderr,intercept,expected");
    assert_eq!(column(&tmp.path().join("rates_fit.csv"), "expected")[0], "0.5");
}

fn stability_campaign(scale: Value, lambda: f64) -> Value {
    json!({"master_seed": 3, "stability": {"n_rep": 500, "blocks": [{
        "noise": {"law": "gaussian", "alpha": 2, "mu": 0.25},
        "lambdas": [lambda], "scales": [scale], "stops": [{"rule": "fixed", "n": 50}],
        "a_values": [1, 5]}]}})
}

#[test]
fn zero_scale_stability_estimate_is_exactly_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &stability_campaign(json!({"rule": "zero"}), 0.05));
    run_ok("verify-stability", &config, tmp.path(), &[]);
    let path = tmp.path().join("stability.csv");
    assert_eq!(
        header(&path),
        "alpha,mu,gamma,lambda,a,rule,n_rep,estimate,stderr,bound,pass,censor_rate,seed"
    );
    assert_eq!(column(&path, "estimate"), vec!["1.0", "1.0"]);
    assert_eq!(column(&path, "pass"), vec!["true", "true"]);
}

#[test]
fn red_stability_row_maps_to_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &stability_campaign(json!({"rule": "constant", "value": 1}), 0.05));
    let cfg = lepski_cli::config::CampaignConfig::load(&config).unwrap();
    let mut reports = lepski_cli::stability::stability_reports(&cfg).unwrap();
    assert!(lepski_cli::stability::check_reports(&reports).is_ok());
    reports[1].pass = false;
    let err = lepski_cli::stability::check_reports(&reports).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert_eq!(err.to_string(), "1 of 2 stability cells violate their bound");
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = campaign();
    cfg["n_ladder"] = json!([200, 100]);
    let config = write_config(tmp.path(), &cfg);
    let o = lepski(&["estimate", "--config", config.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(lepski(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let lam = write_config(tmp.path(), &stability_campaign(json!({"rule": "zero"}), 0.06));
    assert_eq!(lepski(&["verify-stability", "--config", lam.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(lepski(&["simulate"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_four_and_name_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let o = lepski(&["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));

    let config = write_config(tmp.path(), &campaign());
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("out");
    let o = lepski(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("file"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        lepski_cli::config::CampaignConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}
