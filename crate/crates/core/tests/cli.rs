use std::fs;
use std::path::Path;

use snc_core::cli::{run, RunManifest, EXIT_BAD_INPUT, EXIT_OK, EXIT_VALIDATION};

fn snc(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["snc".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend(["--out".into(), out.to_string_lossy().into_owned()]);
    run(argv)
}

#[test]
fn single_point_grid_is_feasible_at_rate_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(snc(&["rate-region", "--delta-max", "0", "--check-symmetry"], dir.path()), EXIT_OK);
    for scheme in ["nc", "e2e"] {
        let text = fs::read_to_string(dir.path().join(format!("rate_region_{scheme}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "delta1,delta2,scheme,feasible,best_r,achieved_rate");
        assert_eq!(lines[1], format!("0,0,{scheme},true,1,1"));
        assert_eq!(lines.len(), 2);
    }
}

#[test]
fn reliability_csv_has_zero_gain_without_loss() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(snc(&["reliability", "--delta", "0", "--hops", "4", "--beta0", "1e7"], dir.path()), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("reliability.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "h,delta,beta0,n_opt,r_opt,rho_nc,rho_unc,gain,utility");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let gain: f64 = r.split(',').nth(7).unwrap().parse().unwrap();
        assert_eq!(gain, 0.0);
    }
}

#[test]
fn unreachable_target_gives_undefined_gamma() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        snc(&["connectivity", "--delta", "0.3", "--rho0", "0.8", "--beta0", "1e7", "--format", "json"], dir.path()),
        EXIT_OK
    );
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("connectivity.json")).unwrap()).unwrap();
    assert!(rows[0]["gamma"].is_null());
    assert_eq!(rows[0]["h_unc"], 0);
}

#[test]
fn validate_flags_perturbation_and_honours_trials() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["validate", "--code", "1:2", "--delta", "0.1", "--hops", "1", "--trials", "5000"];
    assert_eq!(snc(&base, dir.path()), EXIT_OK);
    let manifest = RunManifest::load(dir.path().join("validate.manifest.json")).unwrap();
    assert_eq!(manifest.params["validate"]["trials"], 5000);
    let mut perturbed = base.to_vec();
    perturbed.extend(["--perturb", "0.05"]);
    assert_eq!(snc(&perturbed, dir.path()), EXIT_VALIDATION);
}

#[test]
fn lifecycle_demo_log_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(snc(&["lifecycle-demo"], dir.path()), EXIT_OK);
    let log = fs::read_to_string(dir.path().join("lifecycle.jsonl")).unwrap();
    let phases: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["phase"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(&phases[..5], ["1.1", "1.2", "1.3", "1.4", "1.5"]);
    assert_eq!(&phases[phases.len() - 5..], ["3.1", "3.2", "3.3", "3.4", "3.5"]);
    let policy: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lifecycle_policy.json")).unwrap()).unwrap();
    let recodes = policy.as_array().unwrap().iter().filter(|p| p["decision"]["decision"] == "recode").count();
    assert_eq!(recodes, 1);

    let manifest = dir.path().join("lifecycle-demo.manifest.json");
    assert_eq!(run(["snc", "replay", manifest.to_str().unwrap()]), EXIT_OK);
}

#[test]
fn defaults_flag_restores_reference_configuration() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(snc(&["connectivity", "--delta", "0.3", "--defaults"], dir.path()), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("connectivity.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 2);
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(snc(&["reliability", "--rho0", "1.5"], dir.path()), EXIT_BAD_INPUT);
    assert_eq!(snc(&["validate", "--code", "12:10"], dir.path()), EXIT_BAD_INPUT);
    assert_eq!(snc(&["rate-region", "--rate-min", "0.9", "--rate-max", "0.8"], dir.path()), EXIT_BAD_INPUT);
    assert_eq!(run(["snc", "replay", "/nonexistent/manifest.json"]), EXIT_BAD_INPUT);
}
