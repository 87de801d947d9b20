//! Multi-domain cyberspace attack-defense game.
//!
//! The crate is organised bottom-up:
//!
//! - [`world`]: rooms, devices, links, firewall ACLs, credentials and files,
//!   plus the scenario file loader.
//! - [`game`]: the zero-sum simultaneous-move engine.
//! - [`attacker`]: the scripted attacker, benign users and population spawning.
//! - [`agents`]: state encoding, small MLPs with manual gradients, DQN, DDPG
//!   and reward-randomized DDPG defenders.
//! - [`metrics`]: attack success rate, per-episode aggregates, CSV and SVG.
//! - [`exec`]: data-parallel helpers with a sequential fallback.

pub mod agents;
pub mod attacker;
pub mod exec;
pub mod game;
pub mod metrics;
pub mod world;

pub use game::{Game, GameAction, Outcome};
pub use world::{load_scenario, Scenario, Topology, WorldState};
