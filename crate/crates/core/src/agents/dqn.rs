use rand::Rng;

use super::net::{argmax, Adam, Gradients, Mlp, Trace};
use super::replay::Transition;
use super::{td_target, AgentConfig, TargetNets};

/// Q-network defender with a periodically hard-copied target network.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub q: Mlp,
    pub target: Mlp,
    pub epsilon: f64,
    pub sync_every: u64,
    opt: Adam,
    updates: u64,
    grads: Gradients,
    trace: Trace,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(inputs: usize, actions: usize, cfg: &AgentConfig, rng: &mut R) -> Self {
        let mut sizes = vec![inputs];
        sizes.extend(&cfg.hidden);
        sizes.push(actions);
        let q = Mlp::new(&sizes, rng);
        Self::from_nets(q.clone(), q, cfg)
    }

    pub fn from_nets(q: Mlp, target: Mlp, cfg: &AgentConfig) -> Self {
        Self {
            opt: Adam::new(&q, cfg.lr_critic),
            grads: Gradients::zeros_like(&q),
            epsilon: cfg.eps_start,
            sync_every: cfg.target_sync.max(1),
            updates: 0,
            trace: Trace::default(),
            q,
            target,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.q.output_len()
    }

    /// Greedy index, or a uniform one with probability epsilon when exploring.
    pub fn select_action<R: Rng + ?Sized>(&self, x: &[f64], explore: bool, rng: &mut R) -> usize {
        if explore && rng.random::<f64>() < self.epsilon {
            return rng.random_range(0..self.n_actions());
        }
        argmax(&self.q.forward(x).expect("encoder matches the network"))
    }

    /// One gradient step on the squared TD error; returns the batch loss.
    pub fn update(&mut self, batch: &[&Transition], gamma: f64) -> f64 {
        let y = td_target(batch, gamma, TargetNets::Dqn(&self.target));
        let m = batch.len() as f64;
        self.grads.clear();
        let mut up = vec![0.0; self.n_actions()];
        let mut loss = 0.0;
        for (t, y) in batch.iter().zip(&y) {
            self.q.forward_trace(&t.state, &mut self.trace).expect("encoder matches the network");
            let q = self.trace.output()[t.action];
            loss += (y - q) * (y - q) / m;
            up.fill(0.0);
            up[t.action] = 2.0 * (q - y) / m;
            self.q.accumulate(&self.trace, &up, &mut self.grads).expect("shapes checked");
        }
        self.opt.step(&mut self.q, &self.grads);
        self.updates += 1;
        if self.updates.is_multiple_of(self.sync_every) {
            self.target.clone_from(&self.q);
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut agent = DqnAgent::new(4, 5, &AgentConfig { hidden: vec![6], ..AgentConfig::default() }, &mut rng);
        agent.epsilon = 1.0;
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            counts[agent.select_action(&[0.1, 0.2, 0.3, 0.4], true, &mut rng)] += 1;
        }
        // chi-square, 4 degrees of freedom; 13.28 is the 0.99 quantile
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2000.0).powi(2) / 2000.0).sum();
        assert!(chi2 < 13.28, "{counts:?}");
    }

    #[test]
    fn greedy_takes_the_largest_q() {
        let mut q = Mlp::zeros(&[1, 3]);
        q.layers[0].bias = vec![0.1, 0.9, 0.3];
        let mut agent = DqnAgent::from_nets(q.clone(), q, &AgentConfig::default());
        agent.epsilon = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(agent.select_action(&[0.0], true, &mut rng), 1);
        agent.epsilon = 1.0;
        assert_eq!(agent.select_action(&[0.0], false, &mut rng), 1);
    }
}
