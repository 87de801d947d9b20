use mdgame::agents::{train, Algo, Perturbation, RewardFamily, TrainConfig, Trainer};
use mdgame::attacker::{spawn_population, user_tick, AttackScript};
use mdgame::game::{EpisodeConfig, GameAction};
use mdgame::Scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny(scn: &Scenario, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::desk(scn, seed);
    cfg.episodes = 3;
    cfg.n_attackers = 3;
    cfg.agent.hidden = vec![8];
    cfg.agent.batch_size = 8;
    cfg
}

#[test]
fn zero_episodes_leave_the_agent_untouched() {
    let scn = Scenario::bundled();
    let mut cfg = tiny(&scn, 1);
    cfg.episodes = 0;
    let fresh = Trainer::new(&scn, Algo::RrDdpg, cfg.clone()).unwrap().agent;
    let (agent, log) = train(&scn, Algo::RrDdpg, cfg).unwrap();
    assert!(log.episodes.is_empty());
    for (a, b) in agent.nets().iter().zip(fresh.nets()) {
        assert_eq!(a.params(), b.params());
    }
}

#[test]
fn same_seed_same_log() {
    let scn = Scenario::bundled();
    for algo in Algo::ALL {
        let a = train(&scn, algo, tiny(&scn, 4)).unwrap().1;
        let b = train(&scn, algo, tiny(&scn, 4)).unwrap().1;
        assert_eq!(a, b, "{algo}");
        assert_eq!(a.episodes.len(), 3);
    }
}

#[test]
fn fine_tune_fraction_edges() {
    let scn = Scenario::bundled();
    // f = 1: every episode on the true reward, which is plain DDPG
    let mut all_true = tiny(&scn, 2);
    all_true.agent.family.fine_tune_fraction = 1.0;
    let rr = train(&scn, Algo::RrDdpg, all_true.clone()).unwrap().0;
    let plain = train(&scn, Algo::Ddpg, all_true).unwrap().0;
    for (a, b) in rr.nets().iter().zip(plain.nets()) {
        assert_eq!(a.params(), b.params());
    }
    // f = 0: fine_tune runs nothing
    let mut none = tiny(&scn, 2);
    none.agent.family.fine_tune_fraction = 0.0;
    let mut t = Trainer::new(&scn, Algo::RrDdpg, none).unwrap();
    t.train_phase(1, true);
    let before: Vec<Vec<f64>> = t.agent.nets().iter().map(|n| n.params()).collect();
    t.fine_tune();
    let after: Vec<Vec<f64>> = t.agent.nets().iter().map(|n| n.params()).collect();
    assert_eq!(before, after);
    assert_eq!(t.episodes_done(), 1);
}

#[test]
fn perturbations_stay_inside_the_family() {
    let fam = RewardFamily::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        if let Perturbation::Affine { a, b } = fam.sample(&mut rng) {
            assert!((fam.scale.0..=fam.scale.1).contains(&a));
            assert!((fam.offset.0..=fam.offset.1).contains(&b));
        }
    }
}

#[test]
fn attack_probability_sets_the_script_fraction() {
    let scn = Scenario::bundled();
    let cfg = EpisodeConfig { user_ratio: 1.0, ..EpisodeConfig::from_scenario(&scn, 1, 3) };
    let profile = spawn_population(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).remove(0);
    let mut rng = profile.rng();
    let mut script = AttackScript::new(&scn.script);
    let ticks = 10_000;
    let acted = (0..ticks)
        .filter(|_| user_tick(&profile, &scn.topology, &scn.initial, &mut script, &mut rng) != GameAction::NoOp)
        .count();
    let frac = acted as f64 / ticks as f64;
    assert!((frac - 0.3).abs() < 0.02, "{frac}");
}
