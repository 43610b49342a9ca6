use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_soliton");

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/presets").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
[grid]
dim = 1
length = 16.0
points = 512

[model]
alpha = 1.0
gamma = 0.0
sigma = 2.0
h = [1.0, 0.8, 0.6]

[nonlinearity]
kind = "power"

[potential]
kind = "harmonic"

[initial]
q0 = [1.0]
v = [0.0]
amplitude_fraction = 0.1
k = 4.0

[time]
t_end = 1.0
sample_interval = 0.05

[ground_state]
points = 1024
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn broken_w_fails_validation_with_w0() {
    let o = run(&["validate", "--config", preset("broken-w").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error class=AssumptionViolation code=3 message="));
    assert!(stderr(&o).contains("(W0)"));
}

#[test]
fn zero_potential_fails_the_v2_probe() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("free-soliton-1d")).unwrap().replace("probe = false", "probe = true");
    let o = run(&["validate", "--config", &write_config(dir.path(), &text)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("(V2)"), "{}", stderr(&o));
}

#[test]
fn presets_validate() {
    for name in ["quartic-1d", "harmonic-1d", "free-soliton-1d", "ground-state-2d", "oversized-w0"] {
        let o = run(&["validate", "--config", preset(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["validate", "--config", &write_config(dir.path(), &format!("{SMALL}\n[extra]\nx = 1\n"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("class=Config"));
    let o = run(&["validate", "--config", &write_config(dir.path(), &SMALL.replace("[1.0, 0.8, 0.6]", "[0.6, 0.8]"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["validate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oversized_perturbation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = run(&["evolve", "--config", preset("oversized-w0").to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).contains("class=BoundUnachievable"));
}

#[test]
fn ground_state_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("gs{k}"));
        let o = run(&["ground-state", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("omega = -0.5"));
        files.push(std::fs::read(out.join("ground_state.bin")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn sweep_then_compare_is_bit_identical_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = run(&["--threads", "2", "sweep", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("sup|H_h|: decreasing (floor)"), "{}", stdout(&o));
    }
    for h in ["1", "0.8", "0.6"] {
        let name = format!("trajectory_h{h}.csv");
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name}");
    }
    let o = run(&["compare", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).matches(": identical").count(), 3, "{}", stdout(&o));

    let report = a.join("report.csv");
    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let row = lines.iter().position(|l| l.starts_with("1.0,ok,")).unwrap();
    let mut fields: Vec<String> = lines[row].split(',').map(String::from).collect();
    fields[4] = "0.5".into();
    lines[row] = fields.join(",");
    std::fs::write(&report, lines.join("\n") + "\n").unwrap();
    let o = run(&["compare", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(7));
    assert!(stderr(&o).contains("class=ReportMismatch"));
}

#[test]
fn tiny_box_trips_the_boundary_monitor() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("length = 16.0", "length = 6.0")
        .replace("points = 512", "points = 256")
        .replace("q0 = [1.0]", "q0 = [0.0]")
        .replace("v = [0.0]", "v = [0.9]")
        .replace("kind = \"harmonic\"", "kind = \"zero\"\nprobe = false")
        .replace("amplitude_fraction = 0.3", "amplitude_fraction = 0.0");
    let out = dir.path().to_string_lossy().into_owned();
    let o = run(&["evolve", "--config", &write_config(dir.path(), &text), "--out", &out, "--h", "1.0"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("class=BoundaryMassExceeded"));
    assert!(stderr(&o).contains(" step="));
}

#[test]
fn resume_from_checkpoint_reaches_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.to_string() + "\n[output]\ndir = \"x\"\ntrajectory = true\nreport = true\ncheckpoint_every = 7\n";
    let cfg = write_config(dir.path(), &text);
    let full = dir.path().join("full");
    let o = run(&["evolve", "--config", &cfg, "--out", full.to_str().unwrap(), "--h", "0.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = std::fs::read_to_string(full.join("trajectory_h0.8.csv")).unwrap();

    // Interrupted run: a shorter horizon leaves its final checkpoint at t = 0.7.
    let part = dir.path().join("part");
    std::fs::create_dir_all(&part).unwrap();
    let short = text.replace("t_end = 1.0", "t_end = 0.7");
    let cfg_short = write_config(&part, &short);
    let o = run(&["evolve", "--config", &cfg_short, "--out", part.to_str().unwrap(), "--h", "0.8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ckpt = part.join("checkpoint_h0.8.bin");
    let o = run(&[
        "evolve", "--config", &cfg, "--out", part.to_str().unwrap(), "--h", "0.8", "--resume", ckpt.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resumed = std::fs::read_to_string(part.join("trajectory_h0.8.csv")).unwrap();
    let last = |s: &str| -> Vec<f64> {
        s.lines().last().unwrap().split(',').take(2).map(|x| x.parse().unwrap()).collect()
    };
    let (a, b) = (last(&traj), last(&resumed));
    assert_eq!(a[0], 1.0);
    assert_eq!(b[0], 1.0);
    assert!((a[1] - b[1]).abs() < 1e-8, "{a:?} {b:?}");
    // The shorter run uses its own dt grid, so compare only the continuity of the time column.
    let times: Vec<f64> =
        resumed.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]), "{times:?}");
    assert_eq!(times.iter().filter(|&&t| t == 0.7).count(), 1);
}
