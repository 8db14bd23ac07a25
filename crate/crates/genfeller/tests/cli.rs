use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn genfeller(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genfeller"));
    cmd.args(args).arg("--out").arg(out);
    if !args.contains(&"--threads") {
        cmd.args(["--threads", "2"]);
    }
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn classify_reports_subcritical_logistic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[interaction]\nkind = \"logistic\"\ntheta = 1.0\ngamma = 1.0\n[params]\nexpect = \"subcritical\"\n",
    );
    let out = tmp.path().join("out");
    let o = genfeller(&["classify"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["summary"]["classification"], "Subcritical");
    assert_eq!(m["verdict"], "pass");
    assert_eq!(m["partial"], false);
}

#[test]
fn wrong_expectation_fails_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[interaction]\nkind = \"linear\"\ntheta = 3.0\n[params]\nexpect = \"subcritical\"\n");
    let out = tmp.path().join("out");
    let o = genfeller(&["classify"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(&out)["summary"]["classification"], "Supercritical");
}

#[test]
fn invalid_parameters_exit_two_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[params]\ndt = -1e-3\n");
    let out = tmp.path().join("out");
    let o = genfeller(&["simulate-sde"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let cfg = write_config(tmp.path(), "[params]\nunknown_key = 1\n");
    assert_eq!(genfeller(&["simulate-sde"], Some(&cfg), &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn convergence_writes_one_row_per_population_size() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[params]\nn_list = [2, 4, 8]\nreplicates = 100\nt = 0.5\n");
    let out = tmp.path().join("out");
    let o = genfeller(&["convergence"], Some(&cfg), &out);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let text = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("n,mean,variance,ks_vs_limit"));
}

#[test]
fn forest_artifacts_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[interaction]\nkind = \"logistic\"\ntheta = 1.0\ngamma = 1.0\n[params]\nm = 5\n");
    let out = tmp.path().join("out");
    let o = genfeller(&["explore-forest"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let forest = fs::read_to_string(out.join("forest.csv")).unwrap();
    assert!(forest.starts_with("id,parent_id,birth_time,death_time,planar_key"));
    // five ancestors without a parent
    let roots = forest.lines().skip(1).filter(|l| l.split(',').nth(1) == Some("")).count();
    assert_eq!(roots, 5);
    assert_eq!(manifest(&out)["summary"]["max_discrepancy"], 0.0);

    let o = Command::new(env!("CARGO_BIN_EXE_genfeller")).arg("emit-plots").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("fig_forest.csv").is_file());
    assert!(out.join("fig_exploration.csv").is_file());
}

#[test]
fn ray_knight_profile_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[params]\nx_targets = [1.0]\nceiling = 2.0\nreplicates = 50\nzero_scale = 2.0\ndh = 0.1\n",
    );
    let out = tmp.path().join("out");
    let o = genfeller(&["ray-knight"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["summary"]["max_mass_discrepancy"], 0.0);
    Command::new(env!("CARGO_BIN_EXE_genfeller")).arg("emit-plots").arg(&out).output().unwrap();
    let fig = fs::read_to_string(out.join("fig_rk_profile.csv")).unwrap();
    assert_eq!(fig.lines().next(), Some("level,local_time,diffusion_quantile"));
    assert!(fig.lines().count() > 2);
}

#[test]
fn emit_plots_on_empty_directory_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_genfeller")).arg("emit-plots").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no artifacts"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "master_seed = 5\n[params]\nreplicates = 200\nn = 10\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    genfeller(&["simulate-renormalized"], Some(&cfg), &a);
    genfeller(&["simulate-renormalized", "--threads", "1"], Some(&cfg), &b);
    for f in ["path.csv", "ledger.csv", "finals.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn compare_two_csv_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    fs::write(&a, "value\n1\n2\n3\n").unwrap();
    fs::write(&b, "value\n1\n2\n3\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_genfeller")).arg("compare").arg(&a).arg(&b).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["ks_statistic"], 0.0);
}
