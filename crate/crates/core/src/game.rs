//! Zero-sum simultaneous-move game engine.
//!
//! Each time slice both sides commit one action. The defender's world effect
//! is applied first; the attack lands only if the defense did not remove one
//! of its preconditions. Per-slice rewards follow
//! `AR = (1 - alpha) * DC(a) + DC(d) - AC(a)` and `DR = -AR`; terminal rewards
//! come from the scenario's schedule.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{self, Write};

use thiserror::Error;

use crate::world::{
    AccessResult, AclEdit, CredentialId, DeviceId, LinkId, Payload, RoomId, RuleId, ServiceId, Topology, WorldError,
    WorldState, DEFENDER, USER,
};

/// Cost-table keys for attack-side variants.
pub const ATTACK_VARIANTS: &[&str] = &[
    "noop",
    "benign",
    "enter_room",
    "control_device",
    "access_service",
    "use_credential",
    "modify_acl",
    "enable_port",
];

/// Cost-table keys for defense-side variants.
pub const DEFENSE_VARIANTS: &[&str] =
    &["noop", "modify_acl", "cut_traffic", "rotate_credential", "restart_service", "audit_device"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Attacker,
    Defender,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhysicalAction {
    EnterRoom(RoomId),
    ControlDevice(DeviceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkAction {
    ModifyAcl { rule: RuleId, edit: AclEdit },
    EnablePort { device: DeviceId, peer: DeviceId },
    AccessService { src: DeviceId, dst: DeviceId, service: ServiceId },
    CutTraffic(LinkId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DigitalAction {
    /// Credentialed access to a service.
    UseCredential { src: DeviceId, dst: DeviceId, service: ServiceId, credential: CredentialId },
    RotateCredential(CredentialId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlAction {
    RestartService(ServiceId),
    AuditDevice(DeviceId),
}

/// One primitive multi-domain action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GameAction {
    #[default]
    NoOp,
    Physical(PhysicalAction),
    Network(NetworkAction),
    Digital(DigitalAction),
    Control(ControlAction),
}

impl GameAction {
    /// Cost-table key of the variant.
    pub fn variant(&self) -> &'static str {
        match self {
            Self::NoOp => "noop",
            Self::Physical(PhysicalAction::EnterRoom(_)) => "enter_room",
            Self::Physical(PhysicalAction::ControlDevice(_)) => "control_device",
            Self::Network(NetworkAction::ModifyAcl { .. }) => "modify_acl",
            Self::Network(NetworkAction::EnablePort { .. }) => "enable_port",
            Self::Network(NetworkAction::AccessService { .. }) => "access_service",
            Self::Network(NetworkAction::CutTraffic(_)) => "cut_traffic",
            Self::Digital(DigitalAction::UseCredential { .. }) => "use_credential",
            Self::Digital(DigitalAction::RotateCredential(_)) => "rotate_credential",
            Self::Control(ControlAction::RestartService(_)) => "restart_service",
            Self::Control(ControlAction::AuditDevice(_)) => "audit_device",
        }
    }

    pub fn allowed_for(&self, role: Role) -> bool {
        match role {
            Role::Attacker => !matches!(
                self,
                Self::Network(NetworkAction::CutTraffic(_))
                    | Self::Digital(DigitalAction::RotateCredential(_))
                    | Self::Control(_)
            ),
            Role::Defender => matches!(
                self,
                Self::NoOp
                    | Self::Network(NetworkAction::CutTraffic(_) | NetworkAction::ModifyAcl { .. })
                    | Self::Digital(DigitalAction::RotateCredential(_))
                    | Self::Control(_)
            ),
        }
    }

    pub fn display<'a>(&'a self, topo: &'a Topology) -> ActionDisplay<'a> {
        ActionDisplay { action: self, topo }
    }

    /// Parses the textual form produced by [`GameAction::display`].
    pub fn parse(topo: &Topology, text: &str) -> Result<Self, WorldError> {
        let text = text.trim();
        if text == "noop" {
            return Ok(Self::NoOp);
        }
        let bad = || WorldError::UnknownService(format!("unparseable action `{text}`"));
        let (name, rest) = text.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest.strip_suffix(')').ok_or_else(bad)?.split(',').map(str::trim).collect();
        let arg = |i: usize| args.get(i).copied().ok_or_else(bad);
        let service_of = |spec: &str| -> Result<(DeviceId, ServiceId), WorldError> {
            let (d, s) = spec.split_once('/').ok_or_else(bad)?;
            let d = topo.device(d)?;
            Ok((d, topo.service_on(d, s)?))
        };
        Ok(match name {
            "enter_room" => Self::Physical(PhysicalAction::EnterRoom(topo.room(arg(0)?)?)),
            "control_device" => Self::Physical(PhysicalAction::ControlDevice(topo.device(arg(0)?)?)),
            "add_rule" | "remove_rule" => {
                let idx: usize = arg(0)?.trim_start_matches('#').parse().map_err(|_| bad())?;
                if idx >= topo.rule_universe.len() {
                    return Err(WorldError::UnknownRule);
                }
                let edit = if name == "add_rule" { AclEdit::Add } else { AclEdit::Remove };
                Self::Network(NetworkAction::ModifyAcl { rule: RuleId(idx), edit })
            }
            "enable_port" => Self::Network(NetworkAction::EnablePort {
                device: topo.device(arg(0)?)?,
                peer: topo.device(arg(1)?)?,
            }),
            "access_service" => {
                let src = topo.device(arg(0)?)?;
                let (dst, service) = service_of(arg(1)?)?;
                Self::Network(NetworkAction::AccessService { src, dst, service })
            }
            "cut_traffic" => {
                let (a, b) = (topo.device(arg(0)?)?, topo.device(arg(1)?)?);
                Self::Network(NetworkAction::CutTraffic(topo.link_between(a, b).ok_or_else(bad)?))
            }
            "use_credential" => {
                let src = topo.device(arg(0)?)?;
                let (dst, service) = service_of(arg(1)?)?;
                let credential = topo.credential(arg(2)?)?;
                Self::Digital(DigitalAction::UseCredential { src, dst, service, credential })
            }
            "rotate_credential" => Self::Digital(DigitalAction::RotateCredential(topo.credential(arg(0)?)?)),
            "restart_service" => {
                let (_, s) = service_of(arg(0)?)?;
                Self::Control(ControlAction::RestartService(s))
            }
            "audit_device" => Self::Control(ControlAction::AuditDevice(topo.device(arg(0)?)?)),
            _ => return Err(bad()),
        })
    }
}

pub struct ActionDisplay<'a> {
    action: &'a GameAction,
    topo: &'a Topology,
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.topo;
        let svc = |s: ServiceId| format!("{}/{}", t.device_name(t.services[s.0].device), t.service_name(s));
        match *self.action {
            GameAction::NoOp => write!(f, "noop"),
            GameAction::Physical(PhysicalAction::EnterRoom(r)) => write!(f, "enter_room({})", t.room_name(r)),
            GameAction::Physical(PhysicalAction::ControlDevice(d)) => write!(f, "control_device({})", t.device_name(d)),
            GameAction::Network(NetworkAction::ModifyAcl { rule, edit }) => {
                let verb = if edit == AclEdit::Add { "add_rule" } else { "remove_rule" };
                let placed = &t.rule_universe[rule.0];
                write!(f, "{verb}(#{}, {} {})", rule.0, t.device_name(placed.firewall), t.describe_rule(&placed.rule))
            }
            GameAction::Network(NetworkAction::EnablePort { device, peer }) => {
                write!(f, "enable_port({}, {})", t.device_name(device), t.device_name(peer))
            }
            GameAction::Network(NetworkAction::AccessService { src, service, .. }) => {
                write!(f, "access_service({}, {})", t.device_name(src), svc(service))
            }
            GameAction::Network(NetworkAction::CutTraffic(l)) => {
                let link = t.links[l.0];
                write!(f, "cut_traffic({}, {})", t.device_name(link.a), t.device_name(link.b))
            }
            GameAction::Digital(DigitalAction::UseCredential { src, service, credential, .. }) => {
                write!(f, "use_credential({}, {}, {})", t.device_name(src), svc(service), t.credential_name(credential))
            }
            GameAction::Digital(DigitalAction::RotateCredential(c)) => {
                write!(f, "rotate_credential({})", t.credential_name(c))
            }
            GameAction::Control(ControlAction::RestartService(s)) => write!(f, "restart_service({})", svc(s)),
            GameAction::Control(ControlAction::AuditDevice(d)) => write!(f, "audit_device({})", t.device_name(d)),
        }
    }
}

/// A finite, indexed action set derived from a topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    actions: Vec<GameAction>,
}

impl ActionSpace {
    /// NoOp, rule removals, traffic cuts, rotations, restarts, audits.
    pub fn defender(topo: &Topology) -> Self {
        let mut actions = vec![GameAction::NoOp];
        actions.extend(
            (0..topo.rule_universe.len())
                .map(|i| GameAction::Network(NetworkAction::ModifyAcl { rule: RuleId(i), edit: AclEdit::Remove })),
        );
        actions.extend((0..topo.links.len()).map(|i| GameAction::Network(NetworkAction::CutTraffic(LinkId(i)))));
        actions.extend(
            (0..topo.credentials.len()).map(|i| GameAction::Digital(DigitalAction::RotateCredential(CredentialId(i)))),
        );
        actions.extend((0..topo.services.len()).map(|i| GameAction::Control(ControlAction::RestartService(ServiceId(i)))));
        actions.extend((0..topo.devices.len()).map(|i| GameAction::Control(ControlAction::AuditDevice(DeviceId(i)))));
        Self { actions }
    }

    /// Every primitive action a user can issue in this topology.
    pub fn attacker(topo: &Topology) -> Self {
        let mut actions = vec![GameAction::NoOp];
        actions.extend((0..topo.rooms.len()).map(|i| GameAction::Physical(PhysicalAction::EnterRoom(RoomId(i)))));
        let controllable: Vec<DeviceId> = (0..topo.devices.len())
            .map(DeviceId)
            .filter(|d| topo.devices[d.0].kind.physically_controllable())
            .collect();
        actions.extend(controllable.iter().map(|&d| GameAction::Physical(PhysicalAction::ControlDevice(d))));
        for edit in [AclEdit::Add, AclEdit::Remove] {
            actions.extend(
                (0..topo.rule_universe.len()).map(|i| GameAction::Network(NetworkAction::ModifyAcl { rule: RuleId(i), edit })),
            );
        }
        for l in topo.gated_links() {
            let link = topo.links[l.0];
            for (device, peer) in [(link.a, link.b), (link.b, link.a)] {
                actions.push(GameAction::Network(NetworkAction::EnablePort { device, peer }));
            }
        }
        for &src in &controllable {
            for (i, svc) in topo.services.iter().enumerate() {
                let service = ServiceId(i);
                actions.push(GameAction::Network(NetworkAction::AccessService { src, dst: svc.device, service }));
                if let Some(credential) = svc.required_credential {
                    actions.push(GameAction::Digital(DigitalAction::UseCredential {
                        src,
                        dst: svc.device,
                        service,
                        credential,
                    }));
                }
            }
        }
        Self { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&GameAction> {
        self.actions.get(i)
    }

    pub fn index_of(&self, action: &GameAction) -> Option<usize> {
        self.actions.iter().position(|a| a == action)
    }

    pub fn actions(&self) -> &[GameAction] {
        &self.actions
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalRewards {
    /// (AR, DR) pairs.
    pub success: (f64, f64),
    pub captured: (f64, f64),
    pub no_harvest: (f64, f64),
}

impl Default for TerminalRewards {
    fn default() -> Self {
        Self { success: (10.0, -10.0), captured: (-10.0, 10.0), no_harvest: (-5.0, 0.0) }
    }
}

/// Cost tables (reward units) and the terminal schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    /// AC(a)
    pub attack_cost: BTreeMap<String, f64>,
    /// DC(a); the `acquire` entry applies to accesses that yield a new credential or file.
    pub damage_cost: BTreeMap<String, f64>,
    /// DC(d)
    pub defense_cost: BTreeMap<String, f64>,
    pub terminal: TerminalRewards,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("action `{0}` has no entry in the cost table")]
    UnknownAction(String),
    #[error("defense effectiveness {0} outside [0, 1]")]
    InvalidAlpha(String),
}

/// Cost-table view of an attack: its variant key and whether it acquires
/// credentials or files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackCost<'a> {
    pub variant: &'a str,
    pub acquires: bool,
}

impl<'a> AttackCost<'a> {
    pub fn plain(variant: &'a str) -> Self {
        Self { variant, acquires: false }
    }
}

impl RewardModel {
    fn lookup(table: &BTreeMap<String, f64>, key: &str) -> Result<f64, GameError> {
        table.get(key).copied().ok_or_else(|| GameError::UnknownAction(key.into()))
    }

    pub fn ac(&self, a: AttackCost<'_>) -> Result<f64, GameError> {
        Self::lookup(&self.attack_cost, a.variant)
    }

    pub fn dc_attack(&self, a: AttackCost<'_>) -> Result<f64, GameError> {
        if a.acquires {
            Self::lookup(&self.damage_cost, "acquire")
        } else {
            Self::lookup(&self.damage_cost, a.variant)
        }
    }

    pub fn dc_defense(&self, d: &str) -> Result<f64, GameError> {
        Self::lookup(&self.defense_cost, d)
    }
}

fn check_alpha(alpha: f64) -> Result<(), GameError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(GameError::InvalidAlpha(alpha.to_string()))
    }
}

/// `(1 - alpha) * DC(a) + DC(d)`, shared by both reward formulas so that
/// their sum is exactly zero.
fn defender_loss(alpha: f64, dc_a: f64, dc_d: f64) -> f64 {
    (1.0 - alpha) * dc_a + dc_d
}

/// AR = (1 - alpha) DC(a) + DC(d) - AC(a)
pub fn attack_reward_raw(alpha: f64, dc_a: f64, dc_d: f64, ac_a: f64) -> f64 {
    defender_loss(alpha, dc_a, dc_d) - ac_a
}

/// DR = AC(a) - (1 - alpha) DC(a) - DC(d)
pub fn defense_reward_raw(alpha: f64, dc_a: f64, dc_d: f64, ac_a: f64) -> f64 {
    ac_a - defender_loss(alpha, dc_a, dc_d)
}

pub fn attack_reward(alpha: f64, a: AttackCost<'_>, d: &str, model: &RewardModel) -> Result<f64, GameError> {
    check_alpha(alpha)?;
    Ok(attack_reward_raw(alpha, model.dc_attack(a)?, model.dc_defense(d)?, model.ac(a)?))
}

pub fn defense_reward(alpha: f64, a: AttackCost<'_>, d: &str, model: &RewardModel) -> Result<f64, GameError> {
    check_alpha(alpha)?;
    Ok(defense_reward_raw(alpha, model.dc_attack(a)?, model.dc_defense(d)?, model.ac(a)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Captured,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Captured => "captured",
            Self::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserKind {
    Attacker,
    Benign,
}

/// Result of applying one user action to a state.
struct Applied {
    state: WorldState,
    landed: bool,
    acquires: bool,
}

fn apply_user(topo: &Topology, state: &WorldState, action: &GameAction) -> Result<Applied, WorldError> {
    if !action.allowed_for(Role::Attacker) {
        return Err(WorldError::UnknownService(format!("{} is defender-only", action.variant())));
    }
    let landed = |state| Ok(Applied { state, landed: true, acquires: false });
    match *action {
        GameAction::NoOp => Ok(Applied { state: state.clone(), landed: false, acquires: false }),
        GameAction::Physical(PhysicalAction::EnterRoom(r)) => landed(state.enter_room(topo, USER, r)?),
        GameAction::Physical(PhysicalAction::ControlDevice(d)) => landed(state.control_device(topo, USER, d)?),
        GameAction::Network(NetworkAction::ModifyAcl { rule, edit }) => {
            let placed = topo.rule_universe.get(rule.0).ok_or(WorldError::UnknownRule)?;
            landed(state.modify_acl(topo, USER, placed.firewall, placed.rule, edit)?)
        }
        GameAction::Network(NetworkAction::EnablePort { device, peer }) => {
            landed(state.enable_port(topo, USER, device, peer)?)
        }
        GameAction::Network(NetworkAction::AccessService { src, dst, service }) => {
            access(topo, state, src, dst, service, None)
        }
        GameAction::Digital(DigitalAction::UseCredential { src, dst, service, credential }) => {
            access(topo, state, src, dst, service, Some(credential))
        }
        _ => unreachable!("defender-only actions rejected above"),
    }
}

fn access(
    topo: &Topology,
    state: &WorldState,
    src: DeviceId,
    dst: DeviceId,
    service: ServiceId,
    credential: Option<CredentialId>,
) -> Result<Applied, WorldError> {
    let (next, result) = state.access_service(topo, USER, src, dst, service, credential)?;
    Ok(match result {
        AccessResult::Granted(p) => {
            // only payloads that leave the user holding something new count
            let acquires = p.iter().any(|pl| match *pl {
                Payload::Credential { id, .. } => !state.holds_valid(USER, id) && next.holds_valid(USER, id),
                Payload::File(f) => !state.has_file(USER, f) && next.has_file(USER, f),
            });
            Applied { state: next, landed: true, acquires }
        }
        AccessResult::Denied(_) => Applied { state: next, landed: false, acquires: false },
    })
}

fn apply_defender(topo: &Topology, state: &WorldState, action: &GameAction) -> Result<WorldState, WorldError> {
    if !action.allowed_for(Role::Defender) {
        return Err(WorldError::UnknownService(format!("{} is attacker-only", action.variant())));
    }
    match *action {
        GameAction::NoOp | GameAction::Control(ControlAction::AuditDevice(_)) => Ok(state.clone()),
        GameAction::Network(NetworkAction::ModifyAcl { rule, edit }) => {
            let placed = topo.rule_universe.get(rule.0).ok_or(WorldError::UnknownRule)?;
            state.modify_acl(topo, DEFENDER, placed.firewall, placed.rule, edit)
        }
        GameAction::Network(NetworkAction::CutTraffic(l)) => state.cut_traffic(topo, l),
        GameAction::Digital(DigitalAction::RotateCredential(c)) => state.rotate_credential(topo, c),
        GameAction::Control(ControlAction::RestartService(s)) => state.restart_service(topo, s),
        _ => unreachable!("attacker-only actions rejected above"),
    }
}

/// alpha(a, d): 1 when `d` removes a precondition of `a` in this slice,
/// 0 otherwise.
pub fn defense_effectiveness(topo: &Topology, a: &GameAction, d: &GameAction, state: &WorldState) -> f64 {
    let lands = |s: &WorldState| apply_user(topo, s, a).map(|x| x.landed).unwrap_or(false);
    if !lands(state) {
        return 0.0;
    }
    match apply_defender(topo, state, d) {
        Ok(after) if !lands(&after) => 1.0,
        _ => 0.0,
    }
}

/// True iff `d` audits a device the user touched in this slice.
pub fn capture_check(d: &GameAction, touches: &[(crate::world::ActorId, DeviceId)]) -> bool {
    match d {
        GameAction::Control(ControlAction::AuditDevice(x)) => touches.iter().any(|&(who, dev)| who == USER && dev == *x),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: WorldState,
    pub alpha: f64,
    /// Totals for the slice, terminal rewards included.
    pub attacker_reward: f64,
    pub defender_reward: f64,
    /// The per-slice part only; always sums to zero.
    pub step_rewards: (f64, f64),
    pub terminal: Option<Outcome>,
    /// The user action actually took effect.
    pub attack_landed: bool,
}

/// Static context of a game: topology, reward model, horizon.
#[derive(Debug, Clone, Copy)]
pub struct Game<'a> {
    pub topology: &'a Topology,
    pub rewards: &'a RewardModel,
    pub max_slices: usize,
}

impl<'a> Game<'a> {
    pub fn new(scenario: &'a crate::world::Scenario) -> Self {
        Self { topology: &scenario.topology, rewards: &scenario.rewards, max_slices: scenario.max_slices }
    }

    /// Resolves one time slice.
    ///
    /// Illegal actions waste the slice: they have no world effect and are
    /// costed as `noop`. Benign users are costed as `benign`, and only
    /// attackers receive terminal rewards. A capture outranks a success in
    /// the same slice.
    pub fn step(
        &self,
        state: &WorldState,
        t: usize,
        user: UserKind,
        a: &GameAction,
        d: &GameAction,
    ) -> Result<StepResult, GameError> {
        let topo = self.topology;
        let mut s0 = state.clone();
        s0.begin_slice();

        let alpha = defense_effectiveness(topo, a, d, &s0);
        let pre = apply_user(topo, &s0, a).ok();
        let (s1, d_key) = match apply_defender(topo, &s0, d) {
            Ok(s) => (s, d.variant()),
            Err(_) => (s0.clone(), "noop"),
        };
        let mut landed = false;
        let next = if alpha < 1.0 {
            match apply_user(topo, &s1, a) {
                Ok(applied) => {
                    landed = applied.landed;
                    applied.state
                }
                Err(_) => s1,
            }
        } else {
            s1
        };

        let a_cost = match (user, &pre) {
            (UserKind::Benign, _) => AttackCost::plain("benign"),
            (UserKind::Attacker, Some(p)) if p.landed => AttackCost { variant: a.variant(), acquires: p.acquires },
            _ => AttackCost::plain("noop"),
        };
        let ar = attack_reward(alpha, a_cost, d_key, self.rewards)?;
        let dr = defense_reward(alpha, a_cost, d_key, self.rewards)?;
        debug_assert_eq!(ar + dr, 0.0);

        let captured = capture_check(d, &next.touches);
        let success = user == UserKind::Attacker && next.has_file(USER, next.target_file);
        let terminal = if captured {
            Some(Outcome::Captured)
        } else if success {
            Some(Outcome::Success)
        } else if t + 1 >= self.max_slices {
            Some(Outcome::Timeout)
        } else {
            None
        };
        let bonus = match (user, terminal) {
            (UserKind::Attacker, Some(Outcome::Success)) => self.rewards.terminal.success,
            (UserKind::Attacker, Some(Outcome::Captured)) => self.rewards.terminal.captured,
            (UserKind::Attacker, Some(Outcome::Timeout)) => self.rewards.terminal.no_harvest,
            _ => (0.0, 0.0),
        };
        Ok(StepResult {
            next_state: next,
            alpha,
            attacker_reward: ar + bonus.0,
            defender_reward: dr + bonus.1,
            step_rewards: (ar, dr),
            terminal,
            attack_landed: landed,
        })
    }
}

/// Population and horizon settings of one training or evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeConfig {
    pub max_slices: usize,
    pub n_attackers: usize,
    /// Fraction of attackers among all users (UP).
    pub user_ratio: f64,
    /// Per-slice probability that an attacker advances its script (AP).
    pub attack_probability: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid episode configuration: {0}")]
pub struct ConfigError(pub String);

impl EpisodeConfig {
    pub fn from_scenario(scenario: &crate::world::Scenario, n_attackers: usize, seed: u64) -> Self {
        Self {
            max_slices: scenario.max_slices,
            n_attackers,
            user_ratio: scenario.user_ratio,
            attack_probability: scenario.attack_probability,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.user_ratio) {
            return Err(ConfigError(format!("user ratio {} outside [0, 1]", self.user_ratio)));
        }
        if !(0.0..=1.0).contains(&self.attack_probability) {
            return Err(ConfigError(format!("attack probability {} outside [0, 1]", self.attack_probability)));
        }
        if self.max_slices == 0 {
            return Err(ConfigError("max_slices must be at least 1".into()));
        }
        Ok(())
    }

    /// round(n * (1 - UP) / UP); zero when UP is zero.
    pub fn n_benign(&self) -> usize {
        if self.user_ratio <= 0.0 {
            return 0;
        }
        (self.n_attackers as f64 * (1.0 - self.user_ratio) / self.user_ratio).round() as usize
    }
}

/// Attack-side policy of one user.
pub trait UserPolicy {
    fn kind(&self) -> UserKind;
    fn act(&mut self, topo: &Topology, state: &WorldState, t: usize) -> GameAction;
}

/// Defender policy. `observe` is called after every resolved slice.
pub trait DefenderPolicy {
    fn act(&mut self, topo: &Topology, state: &WorldState, t: usize) -> GameAction;
    fn observe(&mut self, _before: &WorldState, _t: usize, _action: &GameAction, _result: &StepResult) {}
}

/// Defender that never acts.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoOpDefender;

impl DefenderPolicy for NoOpDefender {
    fn act(&mut self, _: &Topology, _: &WorldState, _: usize) -> GameAction {
        GameAction::NoOp
    }
}

/// Defender that plays a fixed schedule of actions, NoOp elsewhere.
#[derive(Debug, Clone, Default)]
pub struct ScheduledDefender {
    pub schedule: BTreeMap<usize, GameAction>,
}

impl ScheduledDefender {
    pub fn at(t: usize, action: GameAction) -> Self {
        Self { schedule: BTreeMap::from([(t, action)]) }
    }
}

impl DefenderPolicy for ScheduledDefender {
    fn act(&mut self, _: &Topology, _: &WorldState, t: usize) -> GameAction {
        self.schedule.get(&t).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRecord {
    pub t: usize,
    pub attacker: GameAction,
    pub defender: GameAction,
    pub alpha: f64,
    pub ar: f64,
    pub dr: f64,
    pub terminal: Option<Outcome>,
}

/// Full trajectory of one user session.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub user: UserKind,
    /// `states[i]` is the state observed before slice `i`; one extra final state.
    pub states: Vec<WorldState>,
    pub slices: Vec<SliceRecord>,
    pub outcome: Outcome,
}

impl EpisodeRecord {
    pub fn total_ar(&self) -> f64 {
        self.slices.iter().map(|s| s.ar).sum()
    }

    pub fn total_dr(&self) -> f64 {
        self.slices.iter().map(|s| s.dr).sum()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Line-delimited trace: a `#` header, then one line per slice.
    pub fn write_trace<W: Write>(&self, topo: &Topology, mut w: W) -> io::Result<()> {
        let user = match self.user {
            UserKind::Attacker => "attacker",
            UserKind::Benign => "benign",
        };
        writeln!(w, "# user={user} outcome={} slices={}", self.outcome.as_str(), self.slices.len())?;
        for s in &self.slices {
            let mut line = String::new();
            let _ = write!(
                line,
                "slice={}\tattacker={}\tdefender={}\talpha={}\tar={:.6}\tdr={:.6}\toutcome={}",
                s.t,
                s.attacker.display(topo),
                s.defender.display(topo),
                s.alpha,
                s.ar,
                s.dr,
                s.terminal.map_or("-", Outcome::as_str),
            );
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn trace_string(&self, topo: &Topology) -> String {
        let mut buf = Vec::new();
        self.write_trace(topo, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("trace is utf-8")
    }
}

/// Parses the (attacker, defender) action pairs back out of a trace.
pub fn parse_trace(topo: &Topology, text: &str) -> Result<Vec<(GameAction, GameAction)>, WorldError> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let field = |name: &str| {
            line.split('\t')
                .find_map(|f| f.strip_prefix(name).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| WorldError::UnknownService(format!("trace line lacks `{name}`")))
        };
        out.push((GameAction::parse(topo, field("attacker")?)?, GameAction::parse(topo, field("defender")?)?));
    }
    Ok(out)
}

/// Plays one user session until a terminal outcome.
pub fn run_episode(
    game: &Game<'_>,
    initial: &WorldState,
    user: &mut dyn UserPolicy,
    defender: &mut dyn DefenderPolicy,
) -> Result<EpisodeRecord, GameError> {
    let topo = game.topology;
    let kind = user.kind();
    let mut state = initial.clone();
    let mut states = vec![state.clone()];
    let mut slices = Vec::new();
    for t in 0..game.max_slices {
        let d = defender.act(topo, &state, t);
        let a = user.act(topo, &state, t);
        let res = game.step(&state, t, kind, &a, &d)?;
        defender.observe(&state, t, &d, &res);
        slices.push(SliceRecord {
            t,
            attacker: a,
            defender: d,
            alpha: res.alpha,
            ar: res.attacker_reward,
            dr: res.defender_reward,
            terminal: res.terminal,
        });
        state = res.next_state;
        states.push(state.clone());
        if let Some(outcome) = res.terminal {
            return Ok(EpisodeRecord { user: kind, states, slices, outcome });
        }
    }
    unreachable!("step reports a terminal outcome at the last slice")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Scenario;

    fn model(ac: f64, dca: f64, dcd: f64) -> RewardModel {
        RewardModel {
            attack_cost: BTreeMap::from([("x".to_string(), ac)]),
            damage_cost: BTreeMap::from([("x".to_string(), dca)]),
            defense_cost: BTreeMap::from([("d".to_string(), dcd)]),
            terminal: TerminalRewards::default(),
        }
    }

    #[test]
    fn reward_formulas_by_substitution() {
        let m = model(2.0, 3.0, 1.0);
        let a = AttackCost::plain("x");
        assert_eq!(attack_reward(0.0, a, "d", &m).unwrap(), 2.0);
        assert_eq!(attack_reward(1.0, a, "d", &m).unwrap(), -1.0);
        assert_eq!(defense_reward(0.0, a, "d", &m).unwrap(), -2.0);
        assert_eq!(defense_reward(1.0, a, "d", &m).unwrap(), 1.0);
        let m = model(1.0, 4.0, 0.0);
        assert_eq!(attack_reward(0.5, a, "d", &m).unwrap(), 1.0);
    }

    #[test]
    fn unknown_cost_entry_is_an_error() {
        let m = model(1.0, 1.0, 1.0);
        assert_eq!(
            attack_reward(0.0, AttackCost::plain("nope"), "d", &m),
            Err(GameError::UnknownAction("nope".into()))
        );
        assert!(defense_reward(0.0, AttackCost::plain("x"), "nope", &m).is_err());
        assert!(attack_reward(1.5, AttackCost::plain("x"), "d", &m).is_err());
    }

    #[test]
    fn capture_needs_audit_of_touched_device() {
        let scn = Scenario::bundled();
        let t1 = scn.topology.device("T1").unwrap();
        let s2 = scn.topology.device("S2").unwrap();
        let touches = vec![(USER, t1), (USER, scn.topology.device("FW1").unwrap())];
        assert!(capture_check(&GameAction::Control(ControlAction::AuditDevice(t1)), &touches));
        assert!(!capture_check(&GameAction::Control(ControlAction::AuditDevice(s2)), &[]));
        assert!(!capture_check(&GameAction::NoOp, &touches));
        // the defender's own touches never count
        assert!(!capture_check(&GameAction::Control(ControlAction::AuditDevice(s2)), &[(DEFENDER, s2)]));
    }

    #[test]
    fn role_restrictions() {
        let scn = Scenario::bundled();
        let topo = &scn.topology;
        for a in ActionSpace::defender(topo).actions() {
            assert!(a.allowed_for(Role::Defender), "{}", a.display(topo));
        }
        for a in ActionSpace::attacker(topo).actions() {
            assert!(a.allowed_for(Role::Attacker), "{}", a.display(topo));
        }
        let port = GameAction::Network(NetworkAction::EnablePort { device: DeviceId(0), peer: DeviceId(1) });
        assert!(!port.allowed_for(Role::Defender));
        let rot = GameAction::Digital(DigitalAction::RotateCredential(CredentialId(0)));
        assert!(!rot.allowed_for(Role::Attacker));
    }

    #[test]
    fn action_text_round_trips() {
        let scn = Scenario::bundled();
        let topo = &scn.topology;
        for space in [ActionSpace::defender(topo), ActionSpace::attacker(topo)] {
            for a in space.actions() {
                let text = a.display(topo).to_string();
                assert_eq!(GameAction::parse(topo, &text).unwrap(), *a, "{text}");
            }
        }
    }
}
