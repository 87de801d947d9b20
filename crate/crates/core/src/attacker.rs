//! Rule-based users: the scripted attacker, benign users, and population
//! spawning.
//!
//! The attack script is a list of goal steps read from the scenario. Each
//! slice the planner finds the first step whose goal does not hold yet and
//! emits the next primitive action toward it. Preconditions (a controlled
//! pivot, a reachable path, a valid credential, a management session) are
//! planned recursively, so an action undone by the defender is simply
//! planned again.

use std::collections::VecDeque;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{
    DigitalAction, EpisodeConfig, GameAction, NetworkAction, PhysicalAction, UserKind, UserPolicy,
};
use crate::world::{
    AclEdit, ActorId, DeviceId, LinkId, Payload, RoomId, RuleId, Scenario, ScriptSpec, ScriptStepSpec, ServiceId,
    Topology, WorldState, USER,
};

const MAX_PLAN_DEPTH: usize = 8;

/// Ordered goal steps plus a cursor into them.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScript {
    pub pivots: Vec<DeviceId>,
    pub steps: Vec<ScriptStepSpec>,
    pub cursor: usize,
}

impl AttackScript {
    pub fn new(spec: &ScriptSpec) -> Self {
        Self { pivots: spec.pivots.clone(), steps: spec.steps.clone(), cursor: 0 }
    }

    pub fn is_complete(&self) -> bool {
        self.cursor == self.steps.len()
    }

    /// Macro step (1-based) the cursor is in, or `None` once complete.
    pub fn macro_step(&self) -> Option<usize> {
        self.steps.get(self.cursor).map(ScriptStepSpec::macro_step)
    }

    fn goal_holds(&self, topo: &Topology, state: &WorldState, step: &ScriptStepSpec) -> bool {
        match step {
            ScriptStepSpec::Acquire { wants, .. } => wants.iter().all(|p| match *p {
                Payload::Credential { id, .. } => state.holds_valid(USER, id),
                Payload::File(f) => state.has_file(USER, f),
            }),
            ScriptStepSpec::Allow { firewall, dst, service, .. } => self
                .pivots
                .iter()
                .any(|&p| state.controls(USER, p) && state.acl[firewall.0].iter().any(|r| r.matches(p, *dst, *service)))
                && topo.is_firewall(*firewall),
            ScriptStepSpec::OpenPort { device, peer, .. } => {
                topo.link_between(*device, *peer).is_some_and(|l| state.gate_open[l.0])
            }
        }
    }
}

/// Next primitive action of the scripted attacker. Advances the cursor past
/// every leading step whose goal already holds; NoOp once the script is
/// complete or the current step cannot be planned.
pub fn scripted_attack_policy(topo: &Topology, state: &WorldState, script: &mut AttackScript) -> GameAction {
    if state.has_file(USER, state.target_file) {
        script.cursor = script.steps.len();
    }
    while let Some(step) = script.steps.get(script.cursor) {
        if !script.goal_holds(topo, state, step) {
            break;
        }
        script.cursor += 1;
    }
    let Some(step) = script.steps.get(script.cursor) else {
        return GameAction::NoOp;
    };
    let planner = Planner { topo, state, pivots: &script.pivots };
    let mut stack = Vec::new();
    let plan = match *step {
        ScriptStepSpec::Acquire { via, device, service, .. } => planner.access(device, service, via, &mut stack),
        ScriptStepSpec::Allow { firewall, dst, service, .. } => planner.allow(firewall, dst, service, &mut stack),
        ScriptStepSpec::OpenPort { device, peer, .. } => planner.open_port(device, peer, &mut stack),
    };
    plan.unwrap_or(GameAction::NoOp)
}

struct Planner<'a> {
    topo: &'a Topology,
    state: &'a WorldState,
    pivots: &'a [DeviceId],
}

enum Fix {
    Gate { device: DeviceId, peer: DeviceId },
    Rule { firewall: DeviceId, rule: RuleId },
}

impl Planner<'_> {
    fn controls(&self, d: DeviceId) -> bool {
        self.state.controls(USER, d)
    }

    fn access_action(&self, src: DeviceId, dst: DeviceId, service: ServiceId) -> GameAction {
        match self.topo.services[service.0].required_credential {
            Some(credential) => GameAction::Digital(DigitalAction::UseCredential { src, dst, service, credential }),
            None => GameAction::Network(NetworkAction::AccessService { src, dst, service }),
        }
    }

    /// Walk to the device's room, then take it over.
    fn control(&self, d: DeviceId) -> Option<GameAction> {
        let target = self.topo.devices[d.0].room;
        let here = self.state.location(USER);
        if here == target {
            return Some(GameAction::Physical(PhysicalAction::ControlDevice(d)));
        }
        next_room_toward(self.topo, here, target).map(|r| GameAction::Physical(PhysicalAction::EnterRoom(r)))
    }

    fn access(
        &self,
        dst: DeviceId,
        service: ServiceId,
        via: Option<DeviceId>,
        stack: &mut Vec<ServiceId>,
    ) -> Option<GameAction> {
        if stack.len() >= MAX_PLAN_DEPTH || stack.contains(&service) {
            return None;
        }
        stack.push(service);
        let plan = self.access_inner(dst, service, via, stack);
        stack.pop();
        plan
    }

    fn access_inner(
        &self,
        dst: DeviceId,
        service: ServiceId,
        via: Option<DeviceId>,
        stack: &mut Vec<ServiceId>,
    ) -> Option<GameAction> {
        if let Some(c) = self.topo.services[service.0].required_credential {
            if !self.state.holds_valid(USER, c) {
                return self.obtain_credential(c, stack);
            }
        }
        let fixed = via.map(|v| [v]);
        let pivots: &[DeviceId] = match &fixed {
            Some(v) => v,
            None => self.pivots,
        };
        if let Some(&p) = pivots
            .iter()
            .find(|&&p| self.controls(p) && self.state.reachable(self.topo, p, dst, service).unwrap_or(false))
        {
            return Some(self.access_action(p, dst, service));
        }
        for &p in pivots {
            if !self.controls(p) {
                return self.control(p);
            }
            if let Some(action) = self.fix_path(p, dst, service, stack) {
                return Some(action);
            }
        }
        None
    }

    fn obtain_credential(&self, c: crate::world::CredentialId, stack: &mut Vec<ServiceId>) -> Option<GameAction> {
        let fresh = self.state.credential_generation[c.0] == 0;
        self.topo.services.iter().enumerate().find_map(|(i, svc)| {
            let usable = svc.yields.iter().any(|p| match *p {
                Payload::Credential { id, snapshot } => id == c && (!snapshot || fresh),
                Payload::File(_) => false,
            });
            if usable {
                self.access(svc.device, ServiceId(i), None, stack)
            } else {
                None
            }
        })
    }

    fn allow(
        &self,
        firewall: DeviceId,
        dst: DeviceId,
        service: ServiceId,
        stack: &mut Vec<ServiceId>,
    ) -> Option<GameAction> {
        for &p in self.pivots {
            if !self.controls(p) {
                return self.control(p);
            }
            if let Some(rule) = self.rule_for(firewall, p, dst, service) {
                if let Some(action) = self.add_rule(firewall, rule, stack) {
                    return Some(action);
                }
            }
        }
        None
    }

    fn open_port(&self, device: DeviceId, peer: DeviceId, stack: &mut Vec<ServiceId>) -> Option<GameAction> {
        let mgmt = self.topo.management_service(device)?;
        if self.state.has_session(USER, mgmt) {
            Some(GameAction::Network(NetworkAction::EnablePort { device, peer }))
        } else {
            self.access(device, mgmt, None, stack)
        }
    }

    fn add_rule(&self, firewall: DeviceId, rule: RuleId, stack: &mut Vec<ServiceId>) -> Option<GameAction> {
        let mgmt = self.topo.management_service(firewall)?;
        if self.state.has_session(USER, mgmt) {
            Some(GameAction::Network(NetworkAction::ModifyAcl { rule, edit: AclEdit::Add }))
        } else {
            self.access(firewall, mgmt, None, stack)
        }
    }

    /// Uninstalled universe rule on `firewall` admitting the triple, exact
    /// source preferred over wildcards.
    fn rule_for(&self, firewall: DeviceId, src: DeviceId, dst: DeviceId, service: ServiceId) -> Option<RuleId> {
        let candidates = self
            .topo
            .rule_universe
            .iter()
            .enumerate()
            .filter(|(_, p)| p.firewall == firewall && p.rule.matches(src, dst, service));
        let mut best: Option<(RuleId, bool)> = None;
        for (i, p) in candidates {
            let exact = p.rule.src.is_some();
            if best.is_none_or(|(_, e)| exact && !e) {
                best = Some((RuleId(i), exact));
            }
        }
        best.map(|(r, _)| r).filter(|&r| !self.state.rule_installed(self.topo, r))
    }

    /// Repairs the cheapest simple path from `src` to `dst`: opens closed
    /// gates and installs missing firewall rules, nearest the source first.
    fn fix_path(
        &self,
        src: DeviceId,
        dst: DeviceId,
        service: ServiceId,
        stack: &mut Vec<ServiceId>,
    ) -> Option<GameAction> {
        let mut plans: Vec<Vec<Fix>> = simple_paths(self.topo, src, dst)
            .into_iter()
            .filter_map(|path| self.fixes_along(&path, src, dst, service))
            .filter(|fixes| !fixes.is_empty())
            .collect();
        plans.sort_by_key(Vec::len);
        plans.into_iter().find_map(|fixes| match fixes[0] {
            Fix::Gate { device, peer } => self.open_port(device, peer, stack),
            Fix::Rule { firewall, rule } => self.add_rule(firewall, rule, stack),
        })
    }

    fn fixes_along(&self, path: &[(DeviceId, Option<LinkId>)], src: DeviceId, dst: DeviceId, service: ServiceId) -> Option<Vec<Fix>> {
        let mut fixes = Vec::new();
        for w in path.windows(2) {
            let (prev, _) = w[0];
            let (here, link) = w[1];
            let link = link.expect("every hop after the first has a link");
            if !self.state.gate_open[link.0] {
                fixes.push(Fix::Gate { device: prev, peer: here });
            }
            let transit = here != dst && self.topo.is_firewall(here);
            if transit && !self.state.acl[here.0].iter().any(|r| r.matches(src, dst, service)) {
                fixes.push(Fix::Rule { firewall: here, rule: self.rule_for(here, src, dst, service)? });
            }
        }
        Some(fixes)
    }
}

/// Every simple path as (device, link used to arrive) hops, in a fixed order.
fn simple_paths(topo: &Topology, src: DeviceId, dst: DeviceId) -> Vec<Vec<(DeviceId, Option<LinkId>)>> {
    fn walk(
        topo: &Topology,
        dst: DeviceId,
        path: &mut Vec<(DeviceId, Option<LinkId>)>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<(DeviceId, Option<LinkId>)>>,
    ) {
        let here = path.last().expect("path is never empty").0;
        if here == dst {
            out.push(path.clone());
            return;
        }
        for &(next, link) in &topo.neighbors[here.0] {
            if on_path[next.0] {
                continue;
            }
            on_path[next.0] = true;
            path.push((next, Some(link)));
            walk(topo, dst, path, on_path, out);
            path.pop();
            on_path[next.0] = false;
        }
    }
    let mut on_path = vec![false; topo.devices.len()];
    on_path[src.0] = true;
    let mut out = Vec::new();
    walk(topo, dst, &mut vec![(src, None)], &mut on_path, &mut out);
    out
}

/// First room on a shortest walk from `from` to `to`.
pub fn next_room_toward(topo: &Topology, from: RoomId, to: RoomId) -> Option<RoomId> {
    let mut parent = vec![None; topo.rooms.len()];
    parent[from.0] = Some(from);
    let mut queue = VecDeque::from([from]);
    while let Some(r) = queue.pop_front() {
        if r == to {
            let mut step = r;
            while parent[step.0] != Some(from) {
                step = parent[step.0]?;
            }
            return (step != from).then_some(step);
        }
        for &n in &topo.adjacency[r.0] {
            if parent[n.0].is_none() {
                parent[n.0] = Some(r);
                queue.push_back(n);
            }
        }
    }
    None
}

/// Legal actions of a benign user: NoOp, walking to an adjacent room, taking
/// over a free device in the room, or using a credential-free service on a
/// device it controls.
pub fn benign_actions(topo: &Topology, state: &WorldState) -> Vec<GameAction> {
    let mut out = vec![GameAction::NoOp];
    let here = state.location(USER);
    out.extend(topo.adjacency[here.0].iter().map(|&r| GameAction::Physical(PhysicalAction::EnterRoom(r))));
    for (i, dev) in topo.devices.iter().enumerate() {
        let d = DeviceId(i);
        if dev.kind.physically_controllable() && dev.room == here && !state.controls(USER, d) {
            out.push(GameAction::Physical(PhysicalAction::ControlDevice(d)));
        }
        if state.controls(USER, d) {
            for &s in &dev.services {
                if topo.services[s.0].required_credential.is_none() {
                    out.push(GameAction::Network(NetworkAction::AccessService { src: d, dst: d, service: s }));
                }
            }
        }
    }
    out
}

/// One simulated user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub id: ActorId,
    pub is_attacker: bool,
    pub ap: f64,
    /// Seed and stream of the user's private generator.
    pub seed: u64,
    pub stream: u64,
}

impl UserProfile {
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn kind(&self) -> UserKind {
        if self.is_attacker {
            UserKind::Attacker
        } else {
            UserKind::Benign
        }
    }
}

/// Exactly `n_attackers` attackers and `round(n (1 - UP) / UP)` benign users
/// in a shuffled order. Each user draws from its own stream of `config.seed`.
pub fn spawn_population<R: Rng + ?Sized>(config: &EpisodeConfig, rng: &mut R) -> Vec<UserProfile> {
    let n_benign = config.n_benign();
    let mut users: Vec<UserProfile> = (0..config.n_attackers + n_benign)
        .map(|i| UserProfile {
            id: ActorId(i),
            is_attacker: i < config.n_attackers,
            ap: config.attack_probability,
            seed: config.seed,
            stream: i as u64,
        })
        .collect();
    users.shuffle(rng);
    users
}

/// Action of a user for the current slice.
pub fn user_tick<R: Rng + ?Sized>(
    profile: &UserProfile,
    topo: &Topology,
    state: &WorldState,
    script: &mut AttackScript,
    rng: &mut R,
) -> GameAction {
    if profile.is_attacker {
        if rng.random::<f64>() < profile.ap {
            scripted_attack_policy(topo, state, script)
        } else {
            GameAction::NoOp
        }
    } else {
        *benign_actions(topo, state).choose(rng).expect("NoOp is always legal")
    }
}

/// A user profile bound to its script and generator.
#[derive(Debug, Clone)]
pub struct SimulatedUser {
    pub profile: UserProfile,
    pub script: AttackScript,
    rng: ChaCha8Rng,
}

impl SimulatedUser {
    pub fn new(profile: UserProfile, scenario: &Scenario) -> Self {
        let rng = profile.rng();
        Self { profile, script: AttackScript::new(&scenario.script), rng }
    }
}

impl UserPolicy for SimulatedUser {
    fn kind(&self) -> UserKind {
        self.profile.kind()
    }

    fn act(&mut self, topo: &Topology, state: &WorldState, _t: usize) -> GameAction {
        user_tick(&self.profile, topo, state, &mut self.script, &mut self.rng)
    }
}

/// Always-scripted attacker (AP = 1).
#[derive(Debug, Clone)]
pub struct ScriptedAttacker {
    pub script: AttackScript,
}

impl ScriptedAttacker {
    pub fn new(scenario: &Scenario) -> Self {
        Self { script: AttackScript::new(&scenario.script) }
    }
}

impl UserPolicy for ScriptedAttacker {
    fn kind(&self) -> UserKind {
        UserKind::Attacker
    }

    fn act(&mut self, topo: &Topology, state: &WorldState, _t: usize) -> GameAction {
        scripted_attack_policy(topo, state, &mut self.script)
    }
}

/// User that never acts.
#[derive(Debug, Clone, Copy)]
pub struct IdleUser(pub UserKind);

impl UserPolicy for IdleUser {
    fn kind(&self) -> UserKind {
        self.0
    }

    fn act(&mut self, _: &Topology, _: &WorldState, _: usize) -> GameAction {
        GameAction::NoOp
    }
}
