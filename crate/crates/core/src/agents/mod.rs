//! Learning defenders: state encoding, networks, replay, DQN, DDPG and the
//! reward-randomized DDPG variant.

mod ddpg;
mod dqn;
mod encode;
pub mod net;
mod persist;
mod randomize;
mod replay;
pub mod toy;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use ddpg::DdpgAgent;
pub use dqn::DqnAgent;
pub use encode::StateEncoder;
pub use net::{Mlp, NetError};
pub use persist::{load_agent, read_agent, save_agent, write_agent, PersistError, FORMAT_VERSION};
pub use randomize::{randomize_reward, FamilyError, Perturbation, RewardFamily};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    evaluate, evaluate_agent, train, ConfigError, FrozenDefender, TrainConfig, Trainer, TrainingLog,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Dqn,
    Ddpg,
    RrDdpg,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Dqn, Algo::Ddpg, Algo::RrDdpg];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dqn => "dqn",
            Self::Ddpg => "ddpg",
            Self::RrDdpg => "rrddpg",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dqn" => Ok(Self::Dqn),
            "ddpg" => Ok(Self::Ddpg),
            "rrddpg" => Ok(Self::RrDdpg),
            _ => Err(format!("unknown algorithm `{s}` (expected dqn, ddpg or rrddpg)")),
        }
    }
}

/// Learner hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Episodes over which epsilon falls linearly from start to end.
    pub eps_anneal_episodes: usize,
    pub noise_sigma: f64,
    /// DQN target hard-copy interval, in updates.
    pub target_sync: u64,
    pub family: RewardFamily,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gamma: 0.95,
            tau: 0.01,
            lr_critic: 1e-3,
            lr_actor: 1e-4,
            replay_capacity: 10_000,
            batch_size: 64,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_anneal_episodes: 50,
            noise_sigma: 0.2,
            target_sync: 100,
            family: RewardFamily::default(),
        }
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Learner {
    Dqn(DqnAgent),
    Ddpg(DdpgAgent),
}

/// A defender learner tagged with the algorithm that trains it.
#[derive(Debug, Clone)]
pub struct Agent {
    pub algo: Algo,
    pub learner: Learner,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(algo: Algo, inputs: usize, actions: usize, cfg: &AgentConfig, rng: &mut R) -> Self {
        let learner = match algo {
            Algo::Dqn => Learner::Dqn(DqnAgent::new(inputs, actions, cfg, rng)),
            Algo::Ddpg | Algo::RrDdpg => Learner::Ddpg(DdpgAgent::new(inputs, actions, cfg, rng)),
        };
        Self { algo, learner }
    }

    pub fn n_inputs(&self) -> usize {
        match &self.learner {
            Learner::Dqn(a) => a.q.input_len(),
            Learner::Ddpg(a) => a.actor.input_len(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match &self.learner {
            Learner::Dqn(a) => a.n_actions(),
            Learner::Ddpg(a) => a.n_actions(),
        }
    }

    pub fn select_action<R: Rng + ?Sized>(&self, x: &[f64], explore: bool, rng: &mut R) -> usize {
        match &self.learner {
            Learner::Dqn(a) => a.select_action(x, explore, rng),
            Learner::Ddpg(a) => a.select_action(x, explore, rng),
        }
    }

    pub fn update(&mut self, batch: &[&Transition], gamma: f64) -> f64 {
        match &mut self.learner {
            Learner::Dqn(a) => a.update(batch, gamma),
            Learner::Ddpg(a) => a.update(batch, gamma),
        }
    }

    /// Every network, online networks first.
    pub fn nets(&self) -> Vec<&Mlp> {
        match &self.learner {
            Learner::Dqn(a) => vec![&a.q, &a.target],
            Learner::Ddpg(a) => vec![&a.actor, &a.critic, &a.actor_target, &a.critic_target],
        }
    }

    /// Rebuilds an agent from networks in [`Agent::nets`] order.
    pub fn from_nets(algo: Algo, mut nets: Vec<Mlp>, cfg: &AgentConfig) -> Option<Self> {
        let learner = match (algo, nets.len()) {
            (Algo::Dqn, 2) => {
                let target = nets.pop()?;
                Learner::Dqn(DqnAgent::from_nets(nets.pop()?, target, cfg))
            }
            (Algo::Ddpg | Algo::RrDdpg, 4) => {
                let ct = nets.pop()?;
                let at = nets.pop()?;
                let c = nets.pop()?;
                Learner::Ddpg(DdpgAgent::from_nets(nets.pop()?, c, at, ct, cfg))
            }
            _ => return None,
        };
        let agent = Self { algo, learner };
        agent.consistent().then_some(agent)
    }

    fn consistent(&self) -> bool {
        match &self.learner {
            Learner::Dqn(a) => a.q.sizes() == a.target.sizes(),
            Learner::Ddpg(a) => {
                a.actor.sizes() == a.actor_target.sizes()
                    && a.critic.sizes() == a.critic_target.sizes()
                    && a.critic.input_len() == a.actor.input_len() + a.actor.output_len()
                    && a.critic.output_len() == 1
            }
        }
    }
}

/// Target networks feeding the TD target.
#[derive(Debug, Clone, Copy)]
pub enum TargetNets<'a> {
    Dqn(&'a Mlp),
    Ddpg { actor: &'a Mlp, critic: &'a Mlp },
}

/// `y = r` on terminal transitions, otherwise `r + gamma * Q'(s', best)`,
/// where `best` is the max over actions (DQN) or the target actor's output
/// (DDPG).
pub fn td_target(batch: &[&Transition], gamma: f64, nets: TargetNets<'_>) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done || gamma == 0.0 {
                return t.reward;
            }
            let next = match nets {
                TargetNets::Dqn(q) => {
                    q.forward(&t.next_state).expect("shapes").into_iter().fold(f64::NEG_INFINITY, f64::max)
                }
                TargetNets::Ddpg { actor, critic } => {
                    let p = net::softmax(&actor.forward(&t.next_state).expect("shapes"));
                    critic.forward(&critic_input(&t.next_state, &p)).expect("shapes")[0]
                }
            };
            t.reward + gamma * next
        })
        .collect()
}

/// `(1/m) sum (y_j - Q(s_j, a_j))^2` for a batch of stored transitions.
pub fn critic_loss(agent: &Agent, batch: &[&Transition], y: &[f64]) -> Result<f64, NetError> {
    let q: Vec<f64> = batch
        .iter()
        .map(|t| match &agent.learner {
            Learner::Dqn(a) => a.q.forward(&t.state).map(|v| v[t.action]),
            Learner::Ddpg(a) => {
                a.critic.forward(&critic_input(&t.state, &one_hot(t.action, a.n_actions()))).map(|v| v[0])
            }
        })
        .collect::<Result<_, _>>()?;
    net::mse(y, &q)
}

pub(crate) fn one_hot(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

pub(crate) fn critic_input(state: &[f64], action: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(state.len() + action.len());
    v.extend_from_slice(state);
    v.extend_from_slice(action);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(s: usize, a: usize, r: f64, s2: usize, done: bool) -> Transition {
        Transition { state: one_hot(s, 2), action: a, reward: r, next_state: one_hot(s2, 2), done }
    }

    #[test]
    fn terminal_and_myopic_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = Mlp::new(&[2, 4, 2], &mut rng);
        let batch = [tr(0, 0, 10.0, 1, true), tr(0, 1, -1.5, 1, false)];
        let refs: Vec<&Transition> = batch.iter().collect();
        assert_eq!(td_target(&refs, 0.9, TargetNets::Dqn(&q))[0], 10.0);
        assert_eq!(td_target(&refs, 0.0, TargetNets::Dqn(&q)), vec![10.0, -1.5]);
    }

    #[test]
    fn dqn_target_on_two_state_chain_matches_value_iteration() {
        // states 0 -> 1 -> exit; reward 1 per move, 5 on exit; one action.
        let gamma = 0.9;
        let batch = [tr(0, 0, 1.0, 1, false), tr(1, 0, 5.0, 0, true)];
        let refs: Vec<&Transition> = batch.iter().collect();
        let mut q = Mlp::zeros(&[2, 1]);
        for _ in 0..200 {
            let y = td_target(&refs, gamma, TargetNets::Dqn(&q));
            // tabular write-back: one-hot linear net stores one value per state
            q.layers[0].weights[0] = y[0];
            q.layers[0].weights[1] = y[1];
        }
        let mut v = [0.0f64; 2];
        for _ in 0..200 {
            v = [1.0 + gamma * v[1], 5.0];
        }
        let y = td_target(&refs, gamma, TargetNets::Dqn(&q));
        assert!((y[0] - v[0]).abs() < 1e-3 && (y[1] - v[1]).abs() < 1e-3);
    }

    #[test]
    fn loss_by_substitution() {
        let mut q = Mlp::zeros(&[2, 2]);
        q.layers[0].bias = vec![1.0, 1.0];
        let agent = Agent { algo: Algo::Dqn, learner: Learner::Dqn(DqnAgent::from_nets(q.clone(), q, &AgentConfig::default())) };
        let batch = [tr(0, 0, 0.0, 1, true)];
        let refs: Vec<&Transition> = batch.iter().collect();
        assert_eq!(critic_loss(&agent, &refs, &[3.0]).unwrap(), 4.0);
        assert_eq!(critic_loss(&agent, &refs, &[1.0]).unwrap(), 0.0);
        assert_eq!(critic_loss(&agent, &[], &[]), Err(NetError::EmptyBatch));
    }

    #[test]
    fn algo_names() {
        for a in Algo::ALL {
            assert_eq!(a.as_str().parse::<Algo>().unwrap(), a);
        }
        assert_eq!("RR-DDPG".parse::<Algo>().unwrap(), Algo::RrDdpg);
        assert!("ppo".parse::<Algo>().is_err());
    }
}
