use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_slicedice"));
    c.env_remove("SLICEDICE_WORKERS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn read(out: &Path) -> (String, String) {
    (fs::read_to_string(out.join("summary.json")).unwrap(), fs::read_to_string(out.join("detail.csv")).unwrap())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn lists_experiments() {
    let out = bin().arg("--list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "count",
        "diagnose_asymptotic",
        "evaluate_operator",
        "verify_slicing",
        "framework_check",
        "sharpness",
        "progressions",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn bundled_delta_slicing_is_dominated() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("slicing_bilinear_delta.toml"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (summary, detail) = read(dir.path());
    assert!(summary.contains("\"anchor\": \"Thm 1\""));
    assert!(detail.contains("dominated, max_violation = 0 at witness x=(0)"));
    assert!(detail.lines().skip(1).all(|l| l.starts_with("Thm 1,")));
}

#[test]
fn bundled_sphere_sharpness_brackets_five_eighths() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("sharpness_sphere.toml"), dir.path(), &[]);
    assert!(out.status.success());
    let (summary, detail) = read(dir.path());
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["results"]["bracket"]["lower"], "5/8");
    assert_eq!(v["results"]["bracket"]["contains_critical"], true);
    assert!(detail.starts_with("anchor,family,d,k,l,theta,r,R,partial_sum,shell_ratio,verdict\n"));
}

#[test]
fn malformed_progression_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("bad_progression.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`progressions`"));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"count\"\nd = 2\nlamda_max = 5\n");
    let out = run(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda_max"));

    let out = run(&dir.path().join("absent.toml"), &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&configs().join("slicing_bilinear_delta.toml"), dir.path(), &["--workers", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_workers_and_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"verify_slicing\"\nfamily = \"ball\"\ndims = [1, 2]\nk = 2\nell = 2\nlambda_max = 60\n\
         instances = 12\nsupport_radius = 4\nsupport_size = 3\nseed = 9\n",
    );
    let one = dir.path().join("w1");
    let four = dir.path().join("w4");
    let env = dir.path().join("env");
    let reseeded = dir.path().join("s");
    assert!(run(&cfg, &one, &["--workers", "1"]).status.success());
    assert!(run(&cfg, &four, &["--workers", "4"]).status.success());
    let out = bin().arg("--config").arg(&cfg).arg("--out").arg(&env).env("SLICEDICE_WORKERS", "3").output().unwrap();
    assert!(out.status.success());
    assert!(run(&cfg, &reseeded, &["--seed", "10"]).status.success());
    assert_eq!(read(&one), read(&four));
    assert_eq!(read(&one), read(&env));
    let (summary, detail) = read(&reseeded);
    assert!(summary.contains("\"seed\": 10"));
    assert_ne!(detail, read(&one).1);
}

#[test]
fn operator_evaluation_on_input_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.txt"), "# point value\n0 1\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"evaluate_operator\"\nfamily = \"ball\"\nd = 1\nk = 2\nell = 1\nlambda_max = 100\n\
         region_radius = 3\ninputs = [\"f.txt\"]\n",
    );
    let out = run(&cfg, &dir.path().join("o"), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, detail) = read(&dir.path().join("o"));
    assert!(detail.starts_with("anchor,point,value,value_f64\n"));
    assert!(detail.contains("Thm 1,(0),1/3,"), "{detail}");
    assert!(detail.contains("Thm 1,(3),1/7,"), "{detail}");
    assert_eq!(detail.lines().count(), 8);
}
