use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Agent, AgentConfig, Algo, Perturbation, ReplayBuffer, StateEncoder, Transition};
use crate::attacker::{spawn_population, SimulatedUser};
use crate::exec::Execution;
use crate::game::{run_episode, ActionSpace, DefenderPolicy, EpisodeConfig, Game, GameAction, StepResult};
use crate::metrics::{aggregate, EpisodeStats};
use crate::world::{Scenario, Topology, WorldState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown setting `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

/// Everything a training run depends on besides the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub n_attackers: usize,
    pub seed: u64,
    pub max_slices: usize,
    pub user_ratio: f64,
    pub attack_probability: f64,
    pub agent: AgentConfig,
}

impl TrainConfig {
    pub fn for_scenario(scenario: &Scenario, seed: u64) -> Self {
        Self {
            episodes: 100,
            n_attackers: 100,
            seed,
            max_slices: scenario.max_slices,
            user_ratio: scenario.user_ratio,
            attack_probability: scenario.attack_probability,
            agent: AgentConfig::default(),
        }
    }

    /// Small preset: 20 episodes of 20 attackers, 32x32 networks, batch 32,
    /// epsilon annealed over the first half.
    pub fn desk(scenario: &Scenario, seed: u64) -> Self {
        let mut cfg = Self::for_scenario(scenario, seed);
        cfg.episodes = 20;
        cfg.n_attackers = 20;
        cfg.agent.hidden = vec![32, 32];
        cfg.agent.batch_size = 32;
        cfg.agent.eps_anneal_episodes = 10;
        cfg
    }

    pub fn episode_config(&self, episode_seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            max_slices: self.max_slices,
            n_attackers: self.n_attackers,
            user_ratio: self.user_ratio,
            attack_probability: self.attack_probability,
            seed: episode_seed,
        }
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue { key: key.to_string(), value: value.to_string() };
        let f = || value.trim().parse::<f64>().map_err(|_| bad());
        let u = || value.trim().parse::<usize>().map_err(|_| bad());
        let pair = || -> Result<(f64, f64), ConfigError> {
            let (a, b) = value.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        };
        let a = &mut self.agent;
        match key.trim() {
            "episodes" => self.episodes = u()?,
            "attackers" | "n_attackers" => self.n_attackers = u()?,
            "seed" => self.seed = value.trim().parse().map_err(|_| bad())?,
            "max_slices" => self.max_slices = u()?,
            "user_ratio" => self.user_ratio = f()?,
            "attack_probability" => self.attack_probability = f()?,
            "hidden" => {
                a.hidden = value
                    .split([';', 'x'])
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?
            }
            "gamma" => a.gamma = f()?,
            "tau" => a.tau = f()?,
            "lr_critic" => a.lr_critic = f()?,
            "lr_actor" => a.lr_actor = f()?,
            "replay_capacity" => a.replay_capacity = u()?,
            "batch_size" => a.batch_size = u()?,
            "eps_start" => a.eps_start = f()?,
            "eps_end" => a.eps_end = f()?,
            "eps_anneal_episodes" => a.eps_anneal_episodes = u()?,
            "noise_sigma" => a.noise_sigma = f()?,
            "target_sync" => a.target_sync = value.trim().parse().map_err(|_| bad())?,
            "family.scale" => a.family.scale = pair()?,
            "family.offset" => a.family.offset = pair()?,
            "family.threshold" => a.family.threshold = f()?,
            "family.fine_tune_fraction" => a.family.fine_tune_fraction = f()?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("expected `key = value`, found `{line}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.episode_config(0).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let a = &self.agent;
        a.family.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let checks = [
            ((0.0..1.0).contains(&a.gamma), "gamma must lie in [0, 1)"),
            ((0.0..=1.0).contains(&a.tau), "tau must lie in [0, 1]"),
            (a.lr_critic > 0.0 && a.lr_actor > 0.0, "learning rates must be positive"),
            (a.batch_size >= 1, "batch size must be at least 1"),
            (a.replay_capacity >= a.batch_size, "replay capacity must hold a batch"),
            ((0.0..=1.0).contains(&a.eps_start) && (0.0..=1.0).contains(&a.eps_end), "epsilon must lie in [0, 1]"),
            (a.noise_sigma >= 0.0 && a.noise_sigma.is_finite(), "noise sigma must be non-negative"),
            (a.hidden.iter().all(|h| *h > 0), "hidden layers must be non-empty"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(ConfigError::Invalid((*msg).to_string())),
            None => Ok(()),
        }
    }

    /// Episodes at the end of a randomized run that use the true reward.
    pub fn fine_tune_episodes(&self) -> usize {
        (self.agent.family.fine_tune_fraction * self.episodes as f64).round() as usize
    }
}

/// Per-episode statistics of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub algo: Algo,
    pub seed: u64,
    pub episodes: Vec<EpisodeStats>,
}

/// Training state: agent, replay buffer and generator.
pub struct Trainer<'s> {
    scenario: &'s Scenario,
    pub config: TrainConfig,
    pub agent: Agent,
    pub buffer: ReplayBuffer,
    pub encoder: StateEncoder,
    pub space: ActionSpace,
    pub log: TrainingLog,
    rng: ChaCha8Rng,
    episode: usize,
}

impl<'s> Trainer<'s> {
    pub fn new(scenario: &'s Scenario, algo: Algo, config: TrainConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let encoder = StateEncoder::new(&scenario.topology, config.max_slices);
        let space = ActionSpace::defender(&scenario.topology);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let agent = Agent::new(algo, encoder.len(), space.len(), &config.agent, &mut rng);
        Ok(Self {
            scenario,
            buffer: ReplayBuffer::new(config.agent.replay_capacity),
            log: TrainingLog { algo, seed: config.seed, episodes: Vec::new() },
            config,
            agent,
            encoder,
            space,
            rng,
            episode: 0,
        })
    }

    /// Continues training from an existing agent.
    pub fn with_agent(scenario: &'s Scenario, agent: Agent, config: TrainConfig) -> Result<Self, ConfigError> {
        let mut t = Self::new(scenario, agent.algo, config)?;
        if agent.n_inputs() != t.encoder.len() || agent.n_actions() != t.space.len() {
            return Err(ConfigError::Invalid(format!(
                "agent expects {} inputs and {} actions, scenario has {} and {}",
                agent.n_inputs(),
                agent.n_actions(),
                t.encoder.len(),
                t.space.len()
            )));
        }
        t.agent = agent;
        Ok(t)
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    fn epsilon(&self) -> f64 {
        let a = &self.config.agent;
        let frac = if a.eps_anneal_episodes == 0 {
            1.0
        } else {
            (self.episode as f64 / a.eps_anneal_episodes as f64).min(1.0)
        };
        a.eps_start + (a.eps_end - a.eps_start) * frac
    }

    /// One episode over a fresh population. With `randomized`, one member of
    /// the reward family is drawn and applied to every stored reward.
    pub fn run_episode(&mut self, randomized: bool) -> EpisodeStats {
        let epsilon = self.epsilon();
        if let super::Learner::Dqn(q) = &mut self.agent.learner {
            q.epsilon = epsilon;
        }
        let mut seeder = ChaCha8Rng::seed_from_u64(self.config.seed);
        seeder.set_stream(self.episode as u64 + 1);
        let ep_cfg = self.config.episode_config(seeder.next_u64());
        let population = spawn_population(&ep_cfg, &mut seeder);
        let perturbation =
            if randomized { self.config.agent.family.sample(&mut self.rng) } else { Perturbation::Identity };

        let game = Game { topology: &self.scenario.topology, rewards: &self.scenario.rewards, max_slices: ep_cfg.max_slices };
        let mut records = Vec::with_capacity(population.len());
        for profile in population {
            let mut user = SimulatedUser::new(profile, self.scenario);
            let mut defender = LearningDefender {
                topo: &self.scenario.topology,
                agent: &mut self.agent,
                buffer: &mut self.buffer,
                rng: &mut self.rng,
                encoder: &self.encoder,
                space: &self.space,
                config: &self.config.agent,
                perturbation,
                pending: None,
            };
            let rec = run_episode(&game, &self.scenario.initial, &mut user, &mut defender)
                .expect("bundled cost tables cover every action");
            records.push(rec);
        }
        let stats = aggregate(&records, self.episode, self.agent.algo.as_str(), self.config.seed)
            .unwrap_or_else(|_| EpisodeStats {
                episode: self.episode,
                algo: self.agent.algo.as_str().to_string(),
                seed: self.config.seed,
                n_success: 0,
                n_attackers: 0,
                asr: 0.0,
                mean_dr: 0.0,
                mean_ar: 0.0,
            });
        self.episode += 1;
        self.log.episodes.push(stats.clone());
        stats
    }

    pub fn train_phase(&mut self, episodes: usize, randomized: bool) {
        for _ in 0..episodes {
            self.run_episode(randomized);
        }
    }

    /// Final phase on the true reward: `round(f * episodes)` episodes.
    pub fn fine_tune(&mut self) {
        self.train_phase(self.config.fine_tune_episodes(), false);
    }

    /// Runs the full schedule for the agent's algorithm.
    pub fn train_all(&mut self) {
        let total = self.config.episodes;
        match self.agent.algo {
            super::Algo::RrDdpg => {
                let ft = self.config.fine_tune_episodes().min(total);
                self.train_phase(total - ft, true);
                self.fine_tune();
            }
            _ => self.train_phase(total, false),
        }
    }

    pub fn finish(self) -> (Agent, TrainingLog) {
        (self.agent, self.log)
    }
}

/// Trains a fresh agent of `algo` for `config.episodes` episodes.
pub fn train(scenario: &Scenario, algo: Algo, config: TrainConfig) -> Result<(Agent, TrainingLog), ConfigError> {
    let mut t = Trainer::new(scenario, algo, config)?;
    t.train_all();
    Ok(t.finish())
}

struct LearningDefender<'a> {
    topo: &'a Topology,
    agent: &'a mut Agent,
    buffer: &'a mut ReplayBuffer,
    rng: &'a mut ChaCha8Rng,
    encoder: &'a StateEncoder,
    space: &'a ActionSpace,
    config: &'a AgentConfig,
    perturbation: Perturbation,
    pending: Option<(Vec<f64>, usize)>,
}

impl DefenderPolicy for LearningDefender<'_> {
    fn act(&mut self, topo: &Topology, state: &WorldState, t: usize) -> GameAction {
        let x = self.encoder.encode(topo, state, t);
        let i = self.agent.select_action(&x, true, self.rng);
        self.pending = Some((x, i));
        self.space.actions()[i]
    }

    fn observe(&mut self, _before: &WorldState, t: usize, _action: &GameAction, result: &StepResult) {
        let Some((state, action)) = self.pending.take() else { return };
        let next_state = self.encoder.encode(self.topo, &result.next_state, t + 1);
        self.buffer.push(Transition {
            state,
            action,
            reward: self.perturbation.apply(result.defender_reward),
            next_state,
            done: result.terminal.is_some(),
        });
        let m = self.config.batch_size;
        if self.buffer.len() >= m {
            let idx = self.buffer.sample_indices(m, self.rng).expect("buffer holds a batch");
            let batch: Vec<&Transition> = idx.iter().map(|&i| self.buffer.get(i).expect("index in range")).collect();
            self.agent.update(&batch, self.config.gamma);
        }
    }
}

/// Greedy, non-learning defender driven by a trained agent.
pub struct FrozenDefender<'a> {
    pub agent: &'a Agent,
    pub encoder: &'a StateEncoder,
    pub space: &'a ActionSpace,
}

impl DefenderPolicy for FrozenDefender<'_> {
    fn act(&mut self, topo: &Topology, state: &WorldState, t: usize) -> GameAction {
        let x = self.encoder.encode(topo, state, t);
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        self.space.actions()[self.agent.select_action(&x, false, &mut unused)]
    }
}

/// Plays `n_attackers` fresh attackers (no benign users) against defenders
/// built by `make_defender`, one per attacker.
pub fn evaluate<F, D>(scenario: &Scenario, n_attackers: usize, seed: u64, exec: Execution, make_defender: F) -> EpisodeStats
where
    F: Fn() -> D + Sync + Send,
    D: DefenderPolicy,
{
    let cfg = EpisodeConfig { n_attackers, user_ratio: 1.0, ..EpisodeConfig::from_scenario(scenario, n_attackers, seed) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let population = spawn_population(&cfg, &mut rng);
    let game = Game::new(scenario);
    let records = exec.map(&population, |p| {
        let mut user = SimulatedUser::new(p.clone(), scenario);
        let mut defender = make_defender();
        run_episode(&game, &scenario.initial, &mut user, &mut defender).expect("cost tables cover every action")
    });
    aggregate(&records, 0, "eval", seed).unwrap_or(EpisodeStats {
        episode: 0,
        algo: "eval".into(),
        seed,
        n_success: 0,
        n_attackers: 0,
        asr: 0.0,
        mean_dr: 0.0,
        mean_ar: 0.0,
    })
}

/// [`evaluate`] with a frozen agent.
pub fn evaluate_agent(
    scenario: &Scenario,
    agent: &Agent,
    n_attackers: usize,
    seed: u64,
    exec: Execution,
) -> Result<EpisodeStats, ConfigError> {
    let encoder = StateEncoder::new(&scenario.topology, scenario.max_slices);
    let space = ActionSpace::defender(&scenario.topology);
    if agent.n_inputs() != encoder.len() || agent.n_actions() != space.len() {
        return Err(ConfigError::Invalid(format!(
            "agent expects {} inputs and {} actions, scenario has {} and {}",
            agent.n_inputs(),
            agent.n_actions(),
            encoder.len(),
            space.len()
        )));
    }
    let mut stats = evaluate(scenario, n_attackers, seed, exec, || FrozenDefender { agent, encoder: &encoder, space: &space });
    stats.algo = agent.algo.as_str().to_string();
    Ok(stats)
}
