use crate::world::{CredentialId, DeviceId, LinkId, RuleId, ServiceId, Topology, WorldState, USER};

/// Fixed-layout feature map of a world state. Every feature lies in `[0, 1]`.
///
/// Layout, in order:
///
/// | block | length |
/// |---|---|
/// | one-hot room of the user | rooms |
/// | user controls device | devices |
/// | rule-universe entry installed | rules |
/// | user holds a valid copy of credential | credentials |
/// | credential has been rotated | credentials |
/// | user holds a session on service | services |
/// | service up | services |
/// | gated link open | gated links |
/// | user holds target file | 1 |
/// | slice index `t / max_slices` | 1 |
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateEncoder {
    rooms: usize,
    devices: usize,
    rules: usize,
    credentials: usize,
    services: usize,
    gates: Vec<LinkId>,
    max_slices: usize,
}

impl StateEncoder {
    pub fn new(topo: &Topology, max_slices: usize) -> Self {
        Self {
            rooms: topo.rooms.len(),
            devices: topo.devices.len(),
            rules: topo.rule_universe.len(),
            credentials: topo.credentials.len(),
            services: topo.services.len(),
            gates: topo.gated_links().collect(),
            max_slices: max_slices.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.rooms + self.devices + self.rules + 2 * self.credentials + 2 * self.services + self.gates.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, topo: &Topology, state: &WorldState, t: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let bit = |b: bool| if b { 1.0 } else { 0.0 };
        let room = state.location(USER).0;
        out.extend((0..self.rooms).map(|r| bit(r == room)));
        out.extend((0..self.devices).map(|d| bit(state.controls(USER, DeviceId(d)))));
        out.extend((0..self.rules).map(|r| bit(state.rule_installed(topo, RuleId(r)))));
        out.extend((0..self.credentials).map(|c| bit(state.holds_valid(USER, CredentialId(c)))));
        out.extend(state.credential_generation.iter().map(|g| bit(*g > 0)));
        out.extend((0..self.services).map(|s| bit(state.actors[USER.0].sessions[ServiceId(s).0])));
        out.extend(state.service_up.iter().map(|u| bit(*u)));
        out.extend(self.gates.iter().map(|l| bit(state.gate_open[l.0])));
        out.push(bit(state.has_file(USER, state.target_file)));
        out.push((t.min(self.max_slices) as f64) / self.max_slices as f64);
        debug_assert_eq!(out.len(), self.len());
        out
    }
}
