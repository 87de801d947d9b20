use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::net::{argmax, soft_update, softmax, Adam, Gradients, Mlp, Trace};
use super::replay::Transition;
use super::{critic_input, one_hot, td_target, AgentConfig, TargetNets};

const FINAL_INIT: f64 = 3e-3;

/// Actor-critic defender over a discrete action set.
///
/// The actor scores every action; the executed action is the argmax of the
/// (optionally noise-perturbed) scores. The critic reads the state followed
/// by an action distribution: one-hot for stored actions, the softmax of the
/// scores for the actor's own output.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub tau: f64,
    pub noise_sigma: f64,
    actor_opt: Adam,
    critic_opt: Adam,
    actor_grads: Gradients,
    critic_grads: Gradients,
    actor_trace: Trace,
    critic_trace: Trace,
}

impl DdpgAgent {
    /// Glorot-initialised hidden layers; output layers drawn from
    /// `U(-3e-3, 3e-3)`.
    pub fn new<R: Rng + ?Sized>(inputs: usize, actions: usize, cfg: &AgentConfig, rng: &mut R) -> Self {
        let mut actor_sizes = vec![inputs];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(actions);
        let mut critic_sizes = vec![inputs + actions];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);
        let mut actor = Mlp::new(&actor_sizes, rng);
        let mut critic = Mlp::new(&critic_sizes, rng);
        // near-zero outputs at the start, so early actions come from the noise
        for net in [&mut actor, &mut critic] {
            let last = net.layers.last_mut().expect("at least one layer");
            last.weights.iter_mut().for_each(|w| *w = rng.random_range(-FINAL_INIT..=FINAL_INIT));
            last.bias.iter_mut().for_each(|b| *b = rng.random_range(-FINAL_INIT..=FINAL_INIT));
        }
        Self::from_nets(actor.clone(), critic.clone(), actor, critic, cfg)
    }

    pub fn from_nets(actor: Mlp, critic: Mlp, actor_target: Mlp, critic_target: Mlp, cfg: &AgentConfig) -> Self {
        Self {
            actor_opt: Adam::new(&actor, cfg.lr_actor),
            critic_opt: Adam::new(&critic, cfg.lr_critic),
            actor_grads: Gradients::zeros_like(&actor),
            critic_grads: Gradients::zeros_like(&critic),
            actor_trace: Trace::default(),
            critic_trace: Trace::default(),
            tau: cfg.tau,
            noise_sigma: cfg.noise_sigma,
            actor,
            critic,
            actor_target,
            critic_target,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_len()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.actor.forward(x).expect("encoder matches the network")
    }

    /// Argmax of the scores, with independent Gaussian noise on each score
    /// when exploring.
    pub fn select_action<R: Rng + ?Sized>(&self, x: &[f64], explore: bool, rng: &mut R) -> usize {
        let mut s = self.scores(x);
        if explore && self.noise_sigma > 0.0 {
            let noise = Normal::new(0.0, self.noise_sigma).expect("sigma is positive");
            s.iter_mut().for_each(|v| *v += noise.sample(rng));
        }
        argmax(&s)
    }

    /// Critic step on the squared TD error, actor step along the critic's
    /// action gradient, then soft target updates. Returns the critic loss.
    pub fn update(&mut self, batch: &[&Transition], gamma: f64) -> f64 {
        let y = td_target(batch, gamma, TargetNets::Ddpg { actor: &self.actor_target, critic: &self.critic_target });
        let m = batch.len() as f64;
        let k = self.n_actions();

        self.critic_grads.clear();
        let mut loss = 0.0;
        for (t, y) in batch.iter().zip(&y) {
            let input = critic_input(&t.state, &one_hot(t.action, k));
            self.critic.forward_trace(&input, &mut self.critic_trace).expect("shapes checked");
            let q = self.critic_trace.output()[0];
            loss += (y - q) * (y - q) / m;
            self.critic.accumulate(&self.critic_trace, &[2.0 * (q - y) / m], &mut self.critic_grads).expect("shapes");
        }
        self.critic_opt.step(&mut self.critic, &self.critic_grads);

        self.actor_grads.clear();
        for t in batch {
            self.actor.forward_trace(&t.state, &mut self.actor_trace).expect("shapes checked");
            let p = softmax(self.actor_trace.output());
            let input = critic_input(&t.state, &p);
            self.critic.forward_trace(&input, &mut self.critic_trace).expect("shapes checked");
            let dx = self.critic.input_gradient(&self.critic_trace, &[-1.0 / m]).expect("shapes");
            let ga = &dx[t.state.len()..];
            let dot: f64 = ga.iter().zip(&p).map(|(g, p)| g * p).sum();
            let gs: Vec<f64> = p.iter().zip(ga).map(|(p, g)| p * (g - dot)).collect();
            self.actor.accumulate(&self.actor_trace, &gs, &mut self.actor_grads).expect("shapes");
        }
        self.actor_opt.step(&mut self.actor, &self.actor_grads);

        soft_update(&mut self.critic_target, &self.critic, self.tau).expect("same architecture");
        soft_update(&mut self.actor_target, &self.actor, self.tau).expect("same architecture");
        loss
    }
}
