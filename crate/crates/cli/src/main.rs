//! Command-line driver: validate, simulate, train, eval and plot.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdgame::agents::{
    evaluate_agent, load_agent, save_agent, AgentConfig, Algo, StateEncoder, TrainConfig, Trainer,
};
use mdgame::attacker::{SimulatedUser, UserProfile};
use mdgame::exec::Execution;
use mdgame::game::{run_episode, ActionSpace, DefenderPolicy, Game, NoOpDefender, ScheduledDefender};
use mdgame::metrics::{export_csv, render_curves, MetricsError};
use mdgame::world::ActorId;
use mdgame::{load_scenario, GameAction, Scenario};

#[derive(Parser)]
#[command(name = "mdgame", version, about = "Multi-domain attack and defense game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario and print a summary.
    Validate { scenario: PathBuf },
    /// Play one attacker against a fixed defender and write its trace.
    Simulate {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "noop")]
        defender: DefenderKind,
        /// Per-slice probability that the attacker advances.
        #[arg(long, default_value_t = 1.0)]
        ap: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train defenders and write `{algo}_{seed}.csv` and `{algo}_{seed}.agent`.
    Train {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Repeat to train several algorithms.
        #[arg(long, required = true)]
        algo: Vec<Algo>,
        /// Repeat to train several seeds.
        #[arg(long, required = true)]
        seed: Vec<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        attackers: Option<usize>,
        #[arg(long, value_enum, default_value = "full")]
        preset: Preset,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Seeds trained concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Play a saved agent greedily against fresh attackers.
    Eval {
        #[arg(long)]
        agent: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        attackers: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Render ASR and DR curves from training CSVs.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value = "curves.svg")]
        out: PathBuf,
    },
}

#[derive(clap::Args, Default)]
struct Overrides {
    /// `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DefenderKind {
    Noop,
    ScriptedRotate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Full,
    Desk,
}

/// Exit code 1 for bad input, 2 for failures of our own.
enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Internal(_) => 2,
        }
    }
}

type Res<T> = Result<T, Failure>;

fn input(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

fn internal(e: impl ToString) -> Failure {
    Failure::Internal(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(m) | Failure::Internal(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cmd: Command) -> Res<()> {
    match cmd {
        Command::Validate { scenario } => validate(&scenario),
        Command::Simulate { scenario, defender, ap, seed, trace, overrides } => {
            let scn = scenario_with(scenario.as_deref(), &overrides)?;
            simulate(&scn, defender, ap, seed, trace.as_deref())
        }
        Command::Train { scenario, algo, seed, episodes, attackers, preset, out, parallel, overrides } => {
            let scn = scenario_with(scenario.as_deref(), &overrides)?;
            let jobs: Vec<(Algo, TrainConfig)> = algo
                .iter()
                .flat_map(|&a| seed.iter().map(move |&s| (a, s)))
                .map(|(a, s)| {
                    let mut cfg = match preset {
                        Preset::Full => TrainConfig::for_scenario(&scn, s),
                        Preset::Desk => TrainConfig::desk(&scn, s),
                    };
                    apply_train_overrides(&mut cfg, &overrides)?;
                    cfg.seed = s;
                    if let Some(e) = episodes {
                        cfg.episodes = e;
                    }
                    if let Some(n) = attackers {
                        cfg.n_attackers = n;
                    }
                    cfg.validate().map_err(input)?;
                    Ok((a, cfg))
                })
                .collect::<Res<_>>()?;
            train(&scn, jobs, &out, parallel)
        }
        Command::Eval { agent, scenario, attackers, seed, overrides } => {
            let scn = scenario_with(scenario.as_deref(), &overrides)?;
            eval(&scn, &agent, attackers, seed)
        }
        Command::Plot { csv, out } => {
            let paths: Vec<&Path> = csv.iter().map(PathBuf::as_path).collect();
            render_curves(&paths, &out).map_err(|e| match e {
                MetricsError::Io(_) | MetricsError::Parse { .. } => input(e),
                _ => internal(e),
            })?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn read_scenario(path: Option<&Path>) -> Res<Scenario> {
    let Some(path) = path else { return Ok(Scenario::bundled()) };
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    load_scenario(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// `key=value` pairs from `--config` then `--set`, in that order.
fn override_pairs(o: &Overrides) -> Res<Vec<(String, String)>> {
    let mut lines = Vec::new();
    if let Some(p) = &o.config {
        let text = fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
        lines.extend(text.lines().map(|l| l.split('#').next().unwrap_or("").trim().to_string()));
    }
    lines.extend(o.set.iter().cloned());
    lines
        .into_iter()
        .filter(|l| !l.is_empty())
        .map(|l| match l.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None => Err(input(format!("expected key=value, found `{l}`"))),
        })
        .collect()
}

/// Loads the scenario and applies the overrides that belong to it: the
/// population and horizon settings and `terminal.{success,captured,no_harvest}`
/// given as `ar:dr`.
fn scenario_with(path: Option<&Path>, o: &Overrides) -> Res<Scenario> {
    let mut scn = read_scenario(path)?;
    for (k, v) in override_pairs(o)? {
        let bad = || input(format!("bad value `{v}` for `{k}`"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        match k.as_str() {
            "max_slices" => scn.max_slices = v.parse().map_err(|_| bad())?,
            "user_ratio" => scn.user_ratio = num(&v)?,
            "attack_probability" => scn.attack_probability = num(&v)?,
            "terminal.success" | "terminal.captured" | "terminal.no_harvest" => {
                let (a, d) = v.split_once(':').ok_or_else(bad)?;
                let pair = (num(a)?, num(d)?);
                let t = &mut scn.rewards.terminal;
                match k.as_str() {
                    "terminal.success" => t.success = pair,
                    "terminal.captured" => t.captured = pair,
                    _ => t.no_harvest = pair,
                }
            }
            _ => {}
        }
    }
    Ok(scn)
}

fn apply_train_overrides(cfg: &mut TrainConfig, o: &Overrides) -> Res<()> {
    for (k, v) in override_pairs(o)? {
        if !k.starts_with("terminal.") {
            cfg.set(&k, &v).map_err(input)?;
        }
    }
    Ok(())
}

fn validate(path: &Path) -> Res<()> {
    let scn = read_scenario(Some(path))?;
    let t = &scn.topology;
    println!("scenario {}: valid", path.display());
    println!("rooms ({}): {}", t.rooms.len(), t.rooms.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(", "));
    println!("devices ({}):", t.devices.len());
    for d in &t.devices {
        println!("  {:<4} {:<16} {}", d.name, d.kind.as_str(), t.rooms[d.room.0].name);
    }
    println!("links: {}", t.links.len());
    println!("services: {}", t.services.len());
    println!("credentials: {}", t.credentials.len());
    println!("acl rules: {}", t.rule_universe.len());
    println!("target file: {}", t.files[t.target_file.0]);
    println!("attacker actions: {}", ActionSpace::attacker(t).len());
    println!("defender actions: {}", ActionSpace::defender(t).len());
    println!("state encoding length: {}", StateEncoder::new(t, scn.max_slices).len());
    println!(
        "max slices {}, user ratio {}, attack probability {}",
        scn.max_slices, scn.user_ratio, scn.attack_probability
    );
    Ok(())
}

fn simulate(scn: &Scenario, kind: DefenderKind, ap: f64, seed: u64, trace: Option<&Path>) -> Res<()> {
    if !(0.0..=1.0).contains(&ap) {
        return Err(input(format!("ap {ap} outside [0, 1]")));
    }
    let profile = UserProfile { id: ActorId(0), is_attacker: true, ap, seed, stream: 0 };
    let mut user = SimulatedUser::new(profile, scn);
    let mut defender: Box<dyn DefenderPolicy> = match kind {
        DefenderKind::Noop => Box::new(NoOpDefender),
        DefenderKind::ScriptedRotate => {
            let rotate = GameAction::parse(&scn.topology, "rotate_credential(FW1_password)").map_err(|e| {
                input(format!("scripted-rotate needs a credential named FW1_password: {e}"))
            })?;
            Box::new(ScheduledDefender::at(0, rotate))
        }
    };
    let rec = run_episode(&Game::new(scn), &scn.initial, &mut user, defender.as_mut()).map_err(input)?;
    if let Some(p) = trace {
        fs::write(p, rec.trace_string(&scn.topology)).map_err(|e| internal(format!("{}: {e}", p.display())))?;
    }
    println!(
        "outcome {} after {} slices; total AR {:.3}, total DR {:.3}",
        rec.outcome.as_str(),
        rec.slices.len(),
        rec.total_ar(),
        rec.total_dr()
    );
    Ok(())
}

fn train(scn: &Scenario, jobs: Vec<(Algo, TrainConfig)>, out: &Path, parallel: usize) -> Res<()> {
    fs::create_dir_all(out).map_err(|e| internal(format!("{}: {e}", out.display())))?;
    let exec = if parallel > 1 { Execution::Parallel } else { Execution::Sequential };
    let results = Execution::with_threads(parallel, || {
        exec.map(&jobs, |(algo, cfg)| -> Res<String> {
            let mut trainer = Trainer::new(scn, *algo, cfg.clone()).map_err(input)?;
            trainer.train_all();
            let (agent, log) = trainer.finish();
            let stem = format!("{}_{}", algo.as_str(), cfg.seed);
            export_csv(&log.episodes, &out.join(format!("{stem}.csv"))).map_err(internal)?;
            save_agent(&agent, &out.join(format!("{stem}.agent"))).map_err(internal)?;
            let tail = &log.episodes[log.episodes.len().saturating_sub(10)..];
            Ok(if tail.is_empty() {
                format!("{stem}: no episodes")
            } else {
                let m = tail.iter().map(|s| s.asr).sum::<f64>() / tail.len() as f64;
                format!("{stem}: final-{} mean ASR {m:.3}", tail.len())
            })
        })
    });
    for r in results {
        println!("{}", r?);
    }
    Ok(())
}

fn eval(scn: &Scenario, path: &Path, attackers: usize, seed: u64) -> Res<()> {
    if attackers == 0 {
        return Err(input("need at least one attacker"));
    }
    let agent = load_agent(path, &AgentConfig::default()).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let stats = evaluate_agent(scn, &agent, attackers, seed, Execution::default()).map_err(input)?;
    println!(
        "{}: ASR {:.3} ({}/{}), mean DR {:.3}, mean AR {:.3}",
        stats.algo, stats.asr, stats.n_success, stats.n_attackers, stats.mean_dr, stats.mean_ar
    );
    Ok(())
}
