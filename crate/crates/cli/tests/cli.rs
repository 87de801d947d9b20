use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mdgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdgame")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/paper_fig3.scn").display().to_string()
}

#[test]
fn validate_lists_nine_devices() {
    let o = mdgame(&["validate", &scenario()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("devices (9)"));
    assert!(stdout(&o).contains("state encoding length: 52"));
}

#[test]
fn validate_rejects_missing_and_dangling() {
    assert_eq!(mdgame(&["validate", "/no/such/file.scn"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario()).unwrap().replace("a = SW, b = S2", "a = SW, b = S9");
    let line = text.lines().position(|l| l.contains("S9")).unwrap() + 1;
    let p = dir.path().join("bad.scn");
    fs::write(&p, text).unwrap();
    let o = mdgame(&["validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("line {line}")));
}

#[test]
fn simulate_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    let o = mdgame(&["simulate", "--defender", "noop", "--ap", "1", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("outcome success"));
    assert!(fs::read_to_string(&trace).unwrap().starts_with("# user=attacker outcome=success"));
    let o = mdgame(&["simulate", "--defender", "scripted-rotate"]);
    assert!(!stdout(&o).contains("success"));
    let o = mdgame(&["simulate", "--ap", "0"]);
    assert!(stdout(&o).starts_with("outcome timeout after 60 slices"));
    assert_eq!(mdgame(&["simulate", "--ap", "1.5"]).status.code(), Some(1));
}

#[test]
fn train_eval_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mdgame(&["train", "--algo", "dqn", "--seed", "2", "--episodes", "2", "--attackers", "3", "--preset", "desk", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("dqn_2.csv");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);
    let agent = dir.path().join("dqn_2.agent");
    let o = mdgame(&["eval", "--agent", agent.to_str().unwrap(), "--attackers", "1", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("(0/1)") || s.contains("(1/1)"), "{s}");
    let svg = dir.path().join("c.svg");
    let o = mdgame(&["plot", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 2);
}

#[test]
fn zero_episodes_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = mdgame(&["train", "--algo", "rrddpg", "--seed", "1", "--episodes", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("rrddpg_1.csv")).unwrap(), "episode,algo,seed,asr,mean_dr,mean_ar\n");
}

#[test]
fn several_seeds_in_parallel_match_sequential() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["train", "--algo", "ddpg", "--seed", "1", "--seed", "2", "--episodes", "1", "--attackers", "2", "--preset", "desk"];
    let mut seq = base.to_vec();
    seq.extend(["--out", a.path().to_str().unwrap()]);
    let mut par = base.to_vec();
    par.extend(["--out", b.path().to_str().unwrap(), "--parallel", "2"]);
    assert_eq!(mdgame(&seq).status.code(), Some(0));
    assert_eq!(mdgame(&par).status.code(), Some(0));
    for f in ["ddpg_1.csv", "ddpg_2.csv", "ddpg_1.agent"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("x.agent");
    fs::write(&garbage, b"not an agent").unwrap();
    assert_eq!(mdgame(&["eval", "--agent", garbage.to_str().unwrap(), "--seed", "1"]).status.code(), Some(1));
    assert_eq!(mdgame(&["plot", "/no/such.csv"]).status.code(), Some(1));
    assert_eq!(mdgame(&["train", "--algo", "ppo", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(mdgame(&["train", "--algo", "dqn"]).status.code(), Some(1));
    assert_eq!(mdgame(&["train", "--algo", "dqn", "--seed", "1", "--set", "gamma=2"]).status.code(), Some(1));
    assert_eq!(mdgame(&["eval", "--agent", garbage.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# tiny\nepisodes = 1\nattackers = 1\nhidden = 8x8\n").unwrap();
    let o = mdgame(&["train", "--algo", "dqn", "--seed", "3", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("dqn_3.csv")).unwrap().lines().count(), 2);
}
