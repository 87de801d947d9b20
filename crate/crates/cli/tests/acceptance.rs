//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the verdict lines always reach the output.

use std::collections::BTreeMap;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mdgame::agents::net::soft_update;
use mdgame::agents::toy::{train_dqn, ChainMdp};
use mdgame::agents::{evaluate, randomize_reward, train, AgentConfig, Algo, Mlp, RewardFamily, TrainConfig};
use mdgame::exec::Execution;
use mdgame::game::{
    attack_reward, defense_reward, run_episode, AttackCost, NoOpDefender, RewardModel, ScheduledDefender,
    TerminalRewards, ATTACK_VARIANTS, DEFENSE_VARIANTS,
};
use mdgame::metrics::asr;
use mdgame::attacker::ScriptedAttacker;
use mdgame::{Game, GameAction, Outcome, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO_SUM_DRAWS: usize = 10_000;
const ATTACKERS: usize = 100;
const MAX_SCRIPTED_SLICES: usize = 20;
const GRAD_NETS: usize = 20;
const GRAD_H: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-5;
/// Floor on the relative-error denominator, so parameters whose gradient is
/// exactly zero compare absolutely.
const GRAD_FLOOR: f64 = 1e-8;
const SOFT_TAU: f64 = 0.01;
const SOFT_TOL: f64 = 1e-12;
const DQN_UPDATES: usize = 2_000;
const DQN_Q_TOL: f64 = 0.05;
const RR_DRAWS: usize = 100_000;
const RR_FRACTION: f64 = 0.5;
const RR_TOL: f64 = 0.01;
const TREND_SEEDS: u64 = 5;
const TREND_WINDOW: usize = 3;
const ORDER_MIN_SEEDS: usize = 4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, limit: Duration, pass: bool, detail: String) -> Verdict {
    let in_time = elapsed < limit;
    Verdict {
        pass: pass && in_time,
        detail: format!("{detail}; {:.2}s (limit {}s{})", elapsed.as_secs_f64(), limit.as_secs(), if in_time { "" } else { ", exceeded" }),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn random_model(rng: &mut ChaCha8Rng) -> RewardModel {
    let mut draw = |keys: &[&str]| -> BTreeMap<String, f64> {
        keys.iter().map(|k| (k.to_string(), rng.random_range(-20.0..20.0))).collect()
    };
    let mut attack: Vec<&str> = ATTACK_VARIANTS.to_vec();
    attack.push("benign");
    let attack_cost = draw(&attack);
    attack.push("acquire");
    let damage_cost = draw(&attack);
    RewardModel { attack_cost, damage_cost, defense_cost: draw(DEFENSE_VARIANTS), terminal: TerminalRewards::default() }
}

fn zero_sum() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (bad, dt) = timed(|| {
        (0..ZERO_SUM_DRAWS)
            .filter(|_| {
                let model = random_model(&mut rng);
                let alpha = if rng.random_bool(0.2) { rng.random_range(0..=1) as f64 } else { rng.random::<f64>() };
                let a = AttackCost {
                    variant: ATTACK_VARIANTS[rng.random_range(0..ATTACK_VARIANTS.len())],
                    acquires: rng.random_bool(0.3),
                };
                let d = DEFENSE_VARIANTS[rng.random_range(0..DEFENSE_VARIANTS.len())];
                attack_reward(alpha, a, d, &model).unwrap() + defense_reward(alpha, a, d, &model).unwrap() != 0.0
            })
            .count()
    });
    within(dt, Duration::from_secs(1), bad == 0, format!("{bad} of {ZERO_SUM_DRAWS} draws with AR + DR != 0"))
}

fn scripted_regression() -> Verdict {
    let mut scn = Scenario::bundled();
    let (v, dt) = timed(|| {
        let rec = run_episode(&Game::new(&scn), &scn.initial, &mut ScriptedAttacker::new(&scn), &mut NoOpDefender).unwrap();
        scn.attack_probability = 1.0;
        let stats = evaluate(&scn, ATTACKERS, 1, Execution::Sequential, || NoOpDefender);
        (rec.outcome, rec.slices.len(), stats.asr)
    });
    let (outcome, slices, rate) = v;
    let pass = outcome == Outcome::Success && slices <= MAX_SCRIPTED_SLICES && rate == 1.0;
    within(dt, Duration::from_secs(1), pass, format!("{} in {slices} slices, ASR {rate:.2}", outcome.as_str()))
}

fn blocking() -> Verdict {
    let scn = Scenario::bundled();
    let rotate = GameAction::parse(&scn.topology, "rotate_credential(FW1_password)").unwrap();
    let (rates, dt) = timed(|| {
        let mut ap1 = scn.clone();
        ap1.attack_probability = 1.0;
        [&scn, &ap1].map(|s| evaluate(s, ATTACKERS, 2, Execution::Sequential, || ScheduledDefender::at(0, rotate)).asr)
    });
    within(
        dt,
        Duration::from_secs(1),
        rates.iter().all(|r| *r == 0.0),
        format!("ASR {:.2} at the scenario AP, {:.2} at AP 1", rates[0], rates[1]),
    )
}

fn gradient_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (worst, dt) = timed(|| {
        let mut worst = 0.0f64;
        for _ in 0..GRAD_NETS {
            let depth = rng.random_range(1..=3);
            let sizes: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=6)).collect();
            let mut net = Mlp::new(&sizes, &mut rng);
            let p: Vec<f64> = net.params().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            net.set_params(&p).unwrap();
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            let up: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let analytic = net.gradients(&x, &up).unwrap().flat();
            let loss = |n: &Mlp| n.forward(&x).unwrap().iter().zip(&up).map(|(y, u)| y * u).sum::<f64>();
            for (i, g) in analytic.iter().enumerate() {
                let mut q = p.clone();
                q[i] = p[i] + GRAD_H;
                net.set_params(&q).unwrap();
                let plus = loss(&net);
                q[i] = p[i] - GRAD_H;
                net.set_params(&q).unwrap();
                let minus = loss(&net);
                let numeric = (plus - minus) / (2.0 * GRAD_H);
                worst = worst.max((g - numeric).abs() / (g.abs() + numeric.abs()).max(GRAD_FLOOR));
            }
            net.set_params(&p).unwrap();
        }
        worst
    });
    within(dt, Duration::from_secs(10), worst < GRAD_TOL, format!("max relative error {worst:.2e} over {GRAD_NETS} networks"))
}

fn soft_update_law() -> Verdict {
    let mut worst = 0.0f64;
    for k in [1, 10, 100] {
        let mut target = Mlp::zeros(&[2, 3]);
        let mut source = Mlp::zeros(&[2, 3]);
        let ones = vec![1.0; source.n_params()];
        source.set_params(&ones).unwrap();
        for _ in 0..k {
            soft_update(&mut target, &source, SOFT_TAU).unwrap();
        }
        let expect = 1.0 - 0.99f64.powi(k);
        worst = target.params().iter().fold(worst, |w, v| w.max((v - expect).abs()));
    }
    Verdict { pass: worst < SOFT_TOL, detail: format!("max deviation {worst:.1e} for k in 1, 10, 100") }
}

fn dqn_oracle() -> Verdict {
    let mdp = ChainMdp::default();
    let ((policy_ok, err), dt) = timed(|| {
        let oracle = mdp.value_iteration(1e-12);
        let agent = train_dqn(&mdp, &AgentConfig::default(), DQN_UPDATES, 6);
        let mut err = 0.0f64;
        let mut greedy = Vec::new();
        for (s, q_star) in oracle.iter().enumerate() {
            let q = agent.q.forward(&mdp.encode(s)).unwrap();
            err = err.max((q[0] - q_star[0]).abs()).max((q[1] - q_star[1]).abs());
            greedy.push(if q[1] > q[0] { 1 } else { 0 });
        }
        (greedy == mdp.optimal_policy(), err)
    });
    within(
        dt,
        Duration::from_secs(30),
        policy_ok && err < DQN_Q_TOL,
        format!("greedy policy {}, max |Q - Q*| {err:.4} after {DQN_UPDATES} updates", if policy_ok { "optimal" } else { "NOT optimal" }),
    )
}

fn randomization_stats() -> Verdict {
    let family = RewardFamily::default();
    let ((fraction, identical), dt) = timed(|| {
        // two generators in lockstep: one reveals the draw, the other applies it
        let mut probe = ChaCha8Rng::seed_from_u64(7);
        let mut live = ChaCha8Rng::seed_from_u64(7);
        let mut values = ChaCha8Rng::seed_from_u64(8);
        let mut perturbed = 0usize;
        let mut identical = true;
        for _ in 0..RR_DRAWS {
            let r: f64 = values.random_range(-20.0..20.0);
            let p = family.sample(&mut probe);
            let out = randomize_reward(r, &family, &mut live);
            if p.is_identity() {
                identical &= out.to_bits() == r.to_bits();
            } else {
                perturbed += 1;
                identical &= out.to_bits() == p.apply(r).to_bits();
            }
        }
        (perturbed as f64 / RR_DRAWS as f64, identical)
    });
    within(
        dt,
        Duration::from_secs(1),
        (fraction - RR_FRACTION).abs() <= RR_TOL && identical,
        format!("perturbed fraction {fraction:.4}, unperturbed outputs {}", if identical { "bit-identical" } else { "CHANGED" }),
    )
}

fn asr_formula() -> Verdict {
    let pass = asr(30, 100).unwrap() == 0.30
        && (1..=500).all(|n| asr(0, n).unwrap() == 0.0 && asr(n, n).unwrap() == 1.0)
        && asr(1, 0).is_err();
    Verdict { pass, detail: "asr(30,100) = 0.30, asr(0,n) = 0, asr(n,n) = 1 for n <= 500".into() }
}

fn window_mean(v: &[f64], first: bool) -> f64 {
    let w = if first { &v[..TREND_WINDOW] } else { &v[v.len() - TREND_WINDOW..] };
    w.iter().sum::<f64>() / w.len() as f64
}

/// ASR per episode, mean DR per episode.
type Run = (Vec<f64>, Vec<f64>);
/// Runs per algorithm, in seed order.
type Curves = BTreeMap<&'static str, Vec<Run>>;
type Check = (u32, &'static str, fn() -> Verdict);

fn desk_runs() -> (Curves, Duration) {
    let scn = Scenario::bundled();
    timed(|| {
        Algo::ALL
            .iter()
            .map(|&algo| {
                let runs = (0..TREND_SEEDS)
                    .map(|seed| {
                        let (_, log) = train(&scn, algo, TrainConfig::desk(&scn, seed)).unwrap();
                        (log.episodes.iter().map(|e| e.asr).collect(), log.episodes.iter().map(|e| e.mean_dr).collect())
                    })
                    .collect();
                (algo.as_str(), runs)
            })
            .collect()
    })
}

fn training_trend(curves: &Curves, dt: Duration) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (algo, runs) in curves {
        let n = runs.len() as f64;
        let mean = |f: &dyn Fn(&Run) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let asr_first = mean(&|r| window_mean(&r.0, true));
        let asr_last = mean(&|r| window_mean(&r.0, false));
        let dr_first = mean(&|r| window_mean(&r.1, true));
        let dr_last = mean(&|r| window_mean(&r.1, false));
        pass &= asr_last < asr_first && dr_last > dr_first;
        parts.push(format!("{algo} ASR {asr_first:.3}->{asr_last:.3} DR {dr_first:.2}->{dr_last:.2}"));
    }
    within(dt, Duration::from_secs(600), pass, parts.join(", "))
}

fn method_ordering(curves: &Curves) -> Verdict {
    let last = |algo: &str, seed: usize| window_mean(&curves[algo][seed].0, false);
    let wins = (0..TREND_SEEDS as usize)
        .filter(|&s| last("rrddpg", s) <= last("ddpg", s) && last("rrddpg", s) <= last("dqn", s))
        .count();
    Verdict {
        pass: wins >= ORDER_MIN_SEEDS,
        detail: format!("RR-DDPG final ASR lowest in {wins} of {TREND_SEEDS} seeds (soft)"),
    }
}

fn determinism() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let (csvs, dt) = timed(|| {
        dirs.iter()
            .map(|d| {
                let status = Command::new(env!("CARGO_BIN_EXE_mdgame"))
                    .args(["train", "--algo", "rrddpg", "--seed", "7", "--preset", "desk", "--out"])
                    .arg(d.path())
                    .output()
                    .expect("binary runs")
                    .status;
                assert!(status.success(), "train exited with {status}");
                fs::read(d.path().join("rrddpg_7.csv")).unwrap()
            })
            .collect::<Vec<_>>()
    });
    within(
        dt,
        Duration::from_secs(300),
        csvs[0] == csvs[1] && !csvs[0].is_empty(),
        format!("two desk runs of rrddpg seed 7: {} CSV bytes, {}", csvs[0].len(), if csvs[0] == csvs[1] { "identical" } else { "DIFFERENT" }),
    )
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: u32| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let mut failed = 0;
    let mut report = |n: u32, name: &str, v: Verdict| {
        println!("criterion {n:>2} {:<24} {} {}", name, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    };
    let quick: [Check; 8] = [
        (1, "zero-sum", zero_sum),
        (2, "scripted attack", scripted_regression),
        (3, "blocking", blocking),
        (4, "gradient check", gradient_check),
        (5, "soft update", soft_update_law),
        (6, "dqn oracle", dqn_oracle),
        (7, "reward randomization", randomization_stats),
        (8, "asr formula", asr_formula),
    ];
    for (n, name, f) in quick {
        if wanted(n) {
            report(n, name, f());
        }
    }
    if wanted(9) || wanted(10) {
        let (curves, dt) = desk_runs();
        if wanted(9) {
            report(9, "training trend", training_trend(&curves, dt));
        }
        if wanted(10) {
            report(10, "method ordering", method_ordering(&curves));
        }
    }
    if wanted(11) {
        report(11, "determinism", determinism());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
