//! Five-state deterministic chain for checking the learners against an
//! exact solution.
//!
//! States `0..5`. `right` moves one state up; from the last state it exits
//! with `exit_reward`. `left` moves one state down; in state 0 it stays put
//! and pays `stay_reward`. All other moves pay nothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::net::argmax;
use super::{one_hot, AgentConfig, DqnAgent, ReplayBuffer, Transition};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMdp {
    pub states: usize,
    pub stay_reward: f64,
    pub exit_reward: f64,
    pub gamma: f64,
}

impl Default for ChainMdp {
    fn default() -> Self {
        Self { states: 5, stay_reward: 0.4, exit_reward: 10.0, gamma: 0.9 }
    }
}

impl ChainMdp {
    /// `(next state, reward, done)`.
    pub fn step(&self, s: usize, a: usize) -> (usize, f64, bool) {
        match a {
            RIGHT if s + 1 == self.states => (s, self.exit_reward, true),
            RIGHT => (s + 1, 0.0, false),
            _ if s == 0 => (0, self.stay_reward, false),
            _ => (s - 1, 0.0, false),
        }
    }

    pub fn encode(&self, s: usize) -> Vec<f64> {
        one_hot(s, self.states)
    }

    pub fn transition(&self, s: usize, a: usize) -> Transition {
        let (s2, r, done) = self.step(s, a);
        Transition { state: self.encode(s), action: a, reward: r, next_state: self.encode(s2), done }
    }

    /// Optimal action values by value iteration.
    pub fn value_iteration(&self, tol: f64) -> Vec<[f64; 2]> {
        let mut q = vec![[0.0f64; 2]; self.states];
        loop {
            let v: Vec<f64> = q.iter().map(|r| r[0].max(r[1])).collect();
            let mut delta: f64 = 0.0;
            for (s, row) in q.iter_mut().enumerate() {
                for (a, slot) in row.iter_mut().enumerate() {
                    let (s2, r, done) = self.step(s, a);
                    let new = r + if done { 0.0 } else { self.gamma * v[s2] };
                    delta = delta.max((new - *slot).abs());
                    *slot = new;
                }
            }
            if delta < tol {
                return q;
            }
        }
    }

    pub fn optimal_policy(&self) -> Vec<usize> {
        self.value_iteration(1e-12).iter().map(|r| argmax(r)).collect()
    }
}

/// Trains a DQN on uniformly drawn state-action pairs for `updates` steps.
pub fn train_dqn(mdp: &ChainMdp, cfg: &AgentConfig, updates: usize, seed: u64) -> DqnAgent {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = DqnAgent::new(mdp.states, 2, cfg, &mut rng);
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    for s in 0..mdp.states {
        for a in [LEFT, RIGHT] {
            buffer.push(mdp.transition(s, a));
        }
    }
    for _ in 0..updates {
        buffer.push(mdp.transition(rng.random_range(0..mdp.states), rng.random_range(0..2)));
        let m = cfg.batch_size.min(buffer.len());
        let batch = buffer.sample(m, &mut rng).expect("buffer is non-empty");
        agent.update(&batch, mdp.gamma);
    }
    agent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution() {
        let mdp = ChainMdp::default();
        let q = mdp.value_iteration(1e-12);
        assert!((q[4][RIGHT] - 10.0).abs() < 1e-9);
        assert!((q[0][RIGHT] - 0.9f64.powi(4) * 10.0).abs() < 1e-9);
        assert!((q[0][LEFT] - (0.4 + 0.9 * q[0][RIGHT])).abs() < 1e-9);
        assert_eq!(mdp.optimal_policy(), vec![RIGHT; 5]);
    }
}
