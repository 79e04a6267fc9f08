use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CHANNEL: &str = r#"
[channel.direct]
h11 = 1.0
h12 = 5.0
h21 = 4.0
h22 = 1.0
memory = 1
noise = 0.01
"#;

const FOCUSING: &str = r#"
[focusing]
p1 = 8.0
p2 = 7.0
user1 = { strategy = "explicit", rings = [1, 4, 9] }
user2 = { strategy = "explicit", rings = [2, 8] }
phases1 = 8
phases2 = 8
"#;

fn kerrfocus(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kerrfocus"));
    cmd.args(args).env_remove("KERRFOCUS_OUT");
    if let Some(dir) = env_out {
        cmd.env("KERRFOCUS_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(sub: &str, body: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (kerrfocus(&args, None), dir)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn rings_reports_example_sets() {
    let (o, dir) = run("rings", &format!("{CHANNEL}{FOCUSING}"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("F = {-6,0,6}"), "{text}");
    assert!(text.contains("F = {-8,-5,-3,0,3,5,8}"), "{text}");
    let rings = fs::read_to_string(dir.path().join("out/rings.csv")).unwrap();
    assert!(rings.starts_with("user,ring_index,power,amplitude\n"));
    assert_eq!(rings.lines().count(), 6);
    let filters = read_rows(&dir.path().join("out/filters.csv"));
    let f1: Vec<&str> = filters.iter().filter(|r| r[0] == "1").map(|r| r[1].as_str()).collect();
    assert_eq!(f1, ["-6", "0", "6"]);
}

#[test]
fn quadratic_strategy_matches_explicit_example() {
    let body = CHANNEL.to_string()
        + "[focusing]\np1 = 8.0\np2 = 7.0\nuser1 = { strategy = \"quadratic\", c = 1 }\nuser2 = { strategy = \"explicit\", rings = [2, 8] }\n";
    let (o, _dir) = run("rings", &body, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("N = {1,4,9}"));
}

#[test]
fn infeasible_power_is_a_config_error_without_output() {
    let body = CHANNEL.to_string() + &FOCUSING.replace("p1 = 8.0", "p1 = 0.1");
    let (o, dir) = run("rings", &body, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("user1"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_config_names_the_line() {
    let (o, dir) = run(
        "rings",
        &format!("{CHANNEL}{FOCUSING}[model]\nvariant = \"sideways\"\n"),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_section_is_a_config_error() {
    let (o, _dir) = run("simulate", &format!("{CHANNEL}{FOCUSING}"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[simulate]"));
}

#[test]
fn validate_focused_passes() {
    let body = format!("{CHANNEL}{FOCUSING}[validate]\nblock_length = 32\n");
    let (o, dir) = run("validate", &body, &["--os", "1024", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("max_rel_error="));
    let rows = read_rows(&dir.path().join("out/validate.csv"));
    assert_eq!(rows.len(), 32 * 3 + 32 * 7);
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() <= 1e-2));
}

#[test]
fn validate_threshold_miss_exits_3_and_still_reports() {
    let body = format!("{CHANNEL}{FOCUSING}[validate]\nblock_length = 16\ninputs = \"random\"\nthreshold = 1e-9\n");
    let (o, dir) = run("validate", &body, &["--os", "8"]);
    assert_eq!(o.status.code(), Some(3));
    let line = stdout(&o);
    let max: f64 = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix("max_rel_error="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(max.is_finite() && max > 1e-9);
    assert!(dir.path().join("out/validate.csv").exists());
}

#[test]
fn validate_zero_inputs_have_zero_error() {
    let body = format!("{CHANNEL}[validate]\nblock_length = 8\ninputs = \"zero\"\n");
    let (o, _dir) = run("validate", &body, &["--os", "16"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("max_rel_error=0.0000000000000000e0"));
}

#[test]
fn validate_rejects_tiny_oversampling() {
    let body = format!("{CHANNEL}{FOCUSING}[validate]\nblock_length = 8\n");
    let (o, _dir) = run("validate", &body, &["--os", "4"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let body = format!("{CHANNEL}{FOCUSING}[simulate]\nblock_length = 16\n");
    let (a, da) = run("simulate", &body, &["--seed", "7"]);
    let (b, db) = run("simulate", &body, &["--seed", "7"]);
    let (c, dc) = run("simulate", &body, &["--seed", "8"]);
    for o in [&a, &b, &c] {
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["rx1.csv", "rx2.csv", "tx.csv"] {
        let x = fs::read(da.path().join("out").join(name)).unwrap();
        assert_eq!(x, fs::read(db.path().join("out").join(name)).unwrap(), "{name}");
        assert_ne!(x, fs::read(dc.path().join("out").join(name)).unwrap(), "{name}");
    }
}

#[test]
fn noiseless_simulation_concentrates_on_one_filter() {
    let body = format!("{CHANNEL}{FOCUSING}[simulate]\nblock_length = 24\nnoise = false\n");
    let (o, dir) = run("simulate", &body, &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = dir.path().join("out");
    let tx = read_rows(&out.join("tx.csv"));
    let energy = |u: &str, j: usize| {
        let r = tx.iter().find(|r| r[0] == u && r[1] == j.to_string()).unwrap();
        r[2].parse::<f64>().unwrap().powi(2) + r[3].parse::<f64>().unwrap().powi(2)
    };
    // interior indices, away from the block edges
    for (file, user, range) in [("rx1.csv", "1", 1..24), ("rx2.csv", "2", 0..22)] {
        let rows = read_rows(&out.join(file));
        for j in range {
            let mags: Vec<f64> = rows
                .iter()
                .filter(|r| r[0] == j.to_string())
                .map(|r| r[2].parse::<f64>().unwrap().powi(2) + r[3].parse::<f64>().unwrap().powi(2))
                .collect();
            let total = energy(user, j);
            let hits = mags.iter().filter(|&&m| (m / total - 1.0).abs() < 1e-9).count();
            let quiet = mags.iter().filter(|&&m| m / total < 1e-9).count();
            assert_eq!((hits, quiet), (1, mags.len() - 1), "{file} j={j}: {mags:?}");
        }
    }
}

#[test]
fn env_var_sets_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CHANNEL}{FOCUSING}"));
    let env_dir = dir.path().join("from_env");
    let o = kerrfocus(&["rings", "--config", cfg.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("rings.csv").exists());

    // the file beats the environment, the flag beats the file
    let file_dir = dir.path().join("from_file");
    let body = format!("{CHANNEL}{FOCUSING}[io]\nout_dir = {:?}\n", file_dir.to_str().unwrap());
    let cfg = write_config(dir.path(), &body);
    let o = kerrfocus(&["rings", "--config", cfg.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(file_dir.join("rings.csv").exists());
    let flag_dir = dir.path().join("from_flag");
    let o = kerrfocus(
        &[
            "rings",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            flag_dir.to_str().unwrap(),
        ],
        Some(&env_dir),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("rings.csv").exists());
}

const SWEEP: &str = r#"
[sweep]
mode = "high_power"
users = [1]
noise = 1.0
samples = 2000
"#;

#[test]
fn single_point_sweep_is_degenerate() {
    let body = format!("{CHANNEL}{SWEEP}snr_db = [30.0]\n");
    let (o, dir) = run("sweep", &body, &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn sweep_writes_both_series_with_footer() {
    let body = format!("{CHANNEL}{SWEEP}snr_db = [20.0, 25.0, 30.0, 35.0]\n");
    let (o, dir) = run("sweep", &body, &["--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["sweep_user1_focusing.csv", "sweep_user1_amplitude_only.csv"] {
        let text = fs::read_to_string(dir.path().join("out").join(name)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "snr_db,P,N,K,Q,bits,std_err");
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("#slope,"));
    }
    let (again, dir2) = run("sweep", &body, &["--seed", "2"]);
    assert_eq!(again.status.code(), Some(0));
    let name = "out/sweep_user1_focusing.csv";
    assert_eq!(
        fs::read(dir.path().join(name)).unwrap(),
        fs::read(dir2.path().join(name)).unwrap()
    );
}
