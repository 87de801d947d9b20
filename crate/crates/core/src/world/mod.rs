//! Multi-domain cyberspace model: rooms and devices (physical domain), links
//! and firewall ACLs (network domain), credentials and files (digital domain).
//!
//! [`Topology`] is immutable once loaded. [`WorldState`] is transformed
//! functionally: every operation borrows the current state and returns a new
//! one, or an error with the original left untouched.

mod reach;
mod scenario;

pub use reach::reachable_in;
pub use scenario::{load_scenario, Scenario, ScenarioError, ScriptStepSpec, ScriptSpec};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

macro_rules! index_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }
    };
}

index_id!(RoomId);
index_id!(DeviceId);
index_id!(
    /// Global service index; every service belongs to exactly one device.
    ServiceId
);
index_id!(CredentialId);
index_id!(FileId);
index_id!(LinkId);
index_id!(
    /// Index into the topology's finite rule universe.
    RuleId
);
index_id!(ActorId);

/// Actor slot of the (single) user in a game world.
pub const USER: ActorId = ActorId(0);
/// Actor slot of the defender; it holds administrative rights.
pub const DEFENDER: ActorId = ActorId(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    Terminal,
    Firewall,
    SecurityDevice,
    Router,
    Switch,
    Server,
}

impl DeviceKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "terminal" => Self::Terminal,
            "firewall" => Self::Firewall,
            "security_device" => Self::SecurityDevice,
            "router" => Self::Router,
            "switch" => Self::Switch,
            "server" => Self::Server,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Terminal => "terminal",
            Self::Firewall => "firewall",
            Self::SecurityDevice => "security_device",
            Self::Router => "router",
            Self::Switch => "switch",
            Self::Server => "server",
        }
    }

    /// Only terminals and security devices can be taken over physically.
    pub fn physically_controllable(self) -> bool {
        matches!(self, Self::Terminal | Self::SecurityDevice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Room {
    pub name: String,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    pub room: RoomId,
    pub services: Vec<ServiceId>,
}

/// What a service hands out on a granted access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    /// A credential. A `snapshot` copy always carries generation 0, so it
    /// goes stale once the credential is rotated.
    Credential { id: CredentialId, snapshot: bool },
    File(FileId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Service {
    pub name: String,
    pub device: DeviceId,
    pub required_credential: Option<CredentialId>,
    pub yields: Vec<Payload>,
    /// A session on a management service authorizes ACL edits (firewalls)
    /// and port changes (other devices).
    pub management: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credential {
    pub name: String,
    pub unlocks: ServiceId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub a: DeviceId,
    pub b: DeviceId,
    /// Gated links start closed and carry traffic only once opened.
    pub gated: bool,
}

impl Link {
    pub fn other(&self, end: DeviceId) -> Option<DeviceId> {
        if self.a == end {
            Some(self.b)
        } else if self.b == end {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Allow-only firewall rule; `None` on `src` or `service` matches anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AclRule {
    pub src: Option<DeviceId>,
    pub dst: DeviceId,
    pub service: Option<ServiceId>,
}

impl AclRule {
    pub fn matches(&self, src: DeviceId, dst: DeviceId, service: ServiceId) -> bool {
        self.dst == dst
            && self.src.is_none_or(|s| s == src)
            && self.service.is_none_or(|s| s == service)
    }
}

/// A rule bound to the firewall that carries it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlacedRule {
    pub firewall: DeviceId,
    pub rule: AclRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AclEdit {
    Add,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenyReason {
    Unreachable,
    MissingCredential,
    BadCredential,
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unreachable => "unreachable",
            Self::MissingCredential => "missing_credential",
            Self::BadCredential => "bad_credential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccessResult {
    Granted(Vec<Payload>),
    Denied(DenyReason),
}

impl AccessResult {
    pub fn is_granted(&self) -> bool {
        matches!(self, Self::Granted(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("unknown room {0}")]
    UnknownRoom(String),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("unknown service {0}")]
    UnknownService(String),
    #[error("unknown credential {0}")]
    UnknownCredential(String),
    #[error("unknown actor {0}")]
    UnknownActor(usize),
    #[error("room {to} is not adjacent to {from}")]
    NotAdjacent { from: String, to: String },
    #[error("actor is not in the room of {0}")]
    WrongRoom(String),
    #[error("{0} cannot be controlled physically")]
    Uncontrollable(String),
    #[error("{0} is already controlled")]
    AlreadyControlled(String),
    #[error("no management session on {0}")]
    NoSession(String),
    #[error("{0} is not a firewall")]
    NotFirewall(String),
    #[error("rule is not installed")]
    UnknownRule,
    #[error("rule is already installed")]
    DuplicateRule,
    #[error("actor does not control {0}")]
    NotControlled(String),
    #[error("service {0} is down")]
    ServiceDown(String),
    #[error("no gated link between {0} and {1}")]
    NotGated(String, String),
    #[error("port between {0} and {1} is already open")]
    PortAlreadyOpen(String, String),
    #[error("link {0} does not exist")]
    UnknownLink(usize),
}

/// Static description of the cyberspace.
#[derive(Debug, Clone)]
pub struct Topology {
    pub rooms: Vec<Room>,
    /// Sorted neighbour lists; symmetric.
    pub adjacency: Vec<Vec<RoomId>>,
    pub outside: RoomId,
    pub devices: Vec<Device>,
    pub services: Vec<Service>,
    pub credentials: Vec<Credential>,
    pub files: Vec<String>,
    pub links: Vec<Link>,
    /// Per device: incident links as (neighbour, link).
    pub neighbors: Vec<Vec<(DeviceId, LinkId)>>,
    /// Every rule either side may ever install, in declaration order.
    pub rule_universe: Vec<PlacedRule>,
    pub target_file: FileId,
    room_index: HashMap<String, RoomId>,
    device_index: HashMap<String, DeviceId>,
    credential_index: HashMap<String, CredentialId>,
}

impl Topology {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rooms: Vec<Room>,
        adjacency: Vec<Vec<RoomId>>,
        outside: RoomId,
        devices: Vec<Device>,
        services: Vec<Service>,
        credentials: Vec<Credential>,
        files: Vec<String>,
        links: Vec<Link>,
        rule_universe: Vec<PlacedRule>,
        target_file: FileId,
    ) -> Self {
        let mut neighbors = vec![Vec::new(); devices.len()];
        for (i, l) in links.iter().enumerate() {
            neighbors[l.a.0].push((l.b, LinkId(i)));
            neighbors[l.b.0].push((l.a, LinkId(i)));
        }
        let room_index = rooms.iter().enumerate().map(|(i, r)| (r.name.clone(), RoomId(i))).collect();
        let device_index = devices.iter().enumerate().map(|(i, d)| (d.name.clone(), DeviceId(i))).collect();
        let credential_index = credentials
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), CredentialId(i)))
            .collect();
        Self {
            rooms,
            adjacency,
            outside,
            devices,
            services,
            credentials,
            files,
            links,
            neighbors,
            rule_universe,
            target_file,
            room_index,
            device_index,
            credential_index,
        }
    }

    pub fn room(&self, name: &str) -> Result<RoomId, WorldError> {
        self.room_index.get(name).copied().ok_or_else(|| WorldError::UnknownRoom(name.into()))
    }

    pub fn device(&self, name: &str) -> Result<DeviceId, WorldError> {
        self.device_index.get(name).copied().ok_or_else(|| WorldError::UnknownDevice(name.into()))
    }

    pub fn credential(&self, name: &str) -> Result<CredentialId, WorldError> {
        self.credential_index
            .get(name)
            .copied()
            .ok_or_else(|| WorldError::UnknownCredential(name.into()))
    }

    /// Looks up a service by name on a given device.
    pub fn service_on(&self, device: DeviceId, name: &str) -> Result<ServiceId, WorldError> {
        self.devices
            .get(device.0)
            .ok_or_else(|| WorldError::UnknownDevice(format!("#{}", device.0)))?
            .services
            .iter()
            .copied()
            .find(|s| self.services[s.0].name == name)
            .ok_or_else(|| WorldError::UnknownService(name.into()))
    }

    /// `"FW1/FW1_mgmt"` or a bare service name when names are unique.
    pub fn service(&self, name: &str) -> Result<ServiceId, WorldError> {
        if let Some((dev, svc)) = name.split_once('/') {
            return self.service_on(self.device(dev)?, svc);
        }
        let mut hits = self.services.iter().enumerate().filter(|(_, s)| s.name == name);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(ServiceId(i)),
            _ => Err(WorldError::UnknownService(name.into())),
        }
    }

    pub fn file(&self, name: &str) -> Option<FileId> {
        self.files.iter().position(|f| f == name).map(FileId)
    }

    pub fn device_name(&self, d: DeviceId) -> &str {
        &self.devices[d.0].name
    }

    pub fn room_name(&self, r: RoomId) -> &str {
        &self.rooms[r.0].name
    }

    pub fn service_name(&self, s: ServiceId) -> &str {
        &self.services[s.0].name
    }

    pub fn credential_name(&self, c: CredentialId) -> &str {
        &self.credentials[c.0].name
    }

    pub fn is_firewall(&self, d: DeviceId) -> bool {
        self.devices[d.0].kind == DeviceKind::Firewall
    }

    pub fn rooms_adjacent(&self, a: RoomId, b: RoomId) -> bool {
        self.adjacency[a.0].binary_search(&b).is_ok()
    }

    pub fn link_between(&self, a: DeviceId, b: DeviceId) -> Option<LinkId> {
        self.neighbors[a.0].iter().find(|(n, _)| *n == b).map(|(_, l)| *l)
    }

    pub fn gated_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.links.iter().enumerate().filter(|(_, l)| l.gated).map(|(i, _)| LinkId(i))
    }

    pub fn rule_id(&self, firewall: DeviceId, rule: &AclRule) -> Option<RuleId> {
        self.rule_universe
            .iter()
            .position(|p| p.firewall == firewall && p.rule == *rule)
            .map(RuleId)
    }

    /// Management service of a device, if it has one.
    pub fn management_service(&self, d: DeviceId) -> Option<ServiceId> {
        self.devices[d.0].services.iter().copied().find(|s| self.services[s.0].management)
    }

    pub fn describe_rule(&self, rule: &AclRule) -> String {
        format!(
            "allow({}->{}:{})",
            rule.src.map_or("*", |s| self.device_name(s)),
            self.device_name(rule.dst),
            rule.service.map_or("*", |s| self.service_name(s)),
        )
    }

    fn check_device(&self, d: DeviceId) -> Result<(), WorldError> {
        if d.0 < self.devices.len() {
            Ok(())
        } else {
            Err(WorldError::UnknownDevice(format!("#{}", d.0)))
        }
    }

    fn check_service_on(&self, dst: DeviceId, s: ServiceId) -> Result<(), WorldError> {
        match self.services.get(s.0) {
            Some(svc) if svc.device == dst => Ok(()),
            _ => Err(WorldError::UnknownService(format!("#{} on {}", s.0, self.device_name(dst)))),
        }
    }
}

/// Per-actor part of the world state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActorState {
    pub location: RoomId,
    pub controlled: Vec<bool>,
    /// Generation of the held copy of each credential.
    pub credentials: Vec<Option<u32>>,
    pub files: Vec<bool>,
    pub sessions: Vec<bool>,
    /// Administrators hold implicit management sessions everywhere.
    pub admin: bool,
}

/// Full observable state of the cyberspace in one time slice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    pub actors: Vec<ActorState>,
    /// Ordered rule list per device; always empty for non-firewalls.
    pub acl: Vec<Vec<AclRule>>,
    pub service_up: Vec<bool>,
    /// Current generation of each credential; bumped on rotation.
    pub credential_generation: Vec<u32>,
    /// Per link; only meaningful for gated links.
    pub gate_open: Vec<bool>,
    /// Links whose traffic is cut for the current slice.
    pub cut: Vec<bool>,
    /// Devices touched in the current slice, in touch order.
    pub touches: Vec<(ActorId, DeviceId)>,
    pub target_file: FileId,
}

impl WorldState {
    /// All actors outside with nothing; default ACLs installed; gates closed.
    /// The last `admins` actors get administrative rights.
    pub fn initial(topo: &Topology, n_actors: usize, admins: usize) -> Self {
        let actor = |admin| ActorState {
            location: topo.outside,
            controlled: vec![false; topo.devices.len()],
            credentials: vec![None; topo.credentials.len()],
            files: vec![false; topo.files.len()],
            sessions: vec![false; topo.services.len()],
            admin,
        };
        Self {
            actors: (0..n_actors).map(|i| actor(i + admins >= n_actors)).collect(),
            acl: vec![Vec::new(); topo.devices.len()],
            service_up: vec![true; topo.services.len()],
            credential_generation: vec![0; topo.credentials.len()],
            gate_open: topo.links.iter().map(|l| !l.gated).collect(),
            cut: vec![false; topo.links.len()],
            touches: Vec::new(),
            target_file: topo.target_file,
        }
    }

    pub fn actor(&self, a: ActorId) -> Result<&ActorState, WorldError> {
        self.actors.get(a.0).ok_or(WorldError::UnknownActor(a.0))
    }

    pub fn location(&self, a: ActorId) -> RoomId {
        self.actors[a.0].location
    }

    pub fn controls(&self, a: ActorId, d: DeviceId) -> bool {
        self.actors[a.0].controlled[d.0]
    }

    /// Whether the actor holds a copy of `c` that matches the current generation.
    pub fn holds_valid(&self, a: ActorId, c: CredentialId) -> bool {
        self.actors[a.0].credentials[c.0] == Some(self.credential_generation[c.0])
    }

    pub fn has_file(&self, a: ActorId, f: FileId) -> bool {
        self.actors[a.0].files[f.0]
    }

    pub fn has_session(&self, a: ActorId, s: ServiceId) -> bool {
        let actor = &self.actors[a.0];
        actor.admin || actor.sessions[s.0]
    }

    pub fn rule_installed(&self, topo: &Topology, r: RuleId) -> bool {
        let placed = &topo.rule_universe[r.0];
        self.acl[placed.firewall.0].contains(&placed.rule)
    }

    pub fn touched(&self, a: ActorId, d: DeviceId) -> bool {
        self.touches.iter().any(|&(who, dev)| who == a && dev == d)
    }

    /// Clears slice-local effects: traffic cuts, restarting services, touches.
    pub fn begin_slice(&mut self) {
        self.cut.iter_mut().for_each(|c| *c = false);
        self.service_up.iter_mut().for_each(|u| *u = true);
        self.touches.clear();
    }

    pub fn reachable(
        &self,
        topo: &Topology,
        src: DeviceId,
        dst: DeviceId,
        service: ServiceId,
    ) -> Result<bool, WorldError> {
        topo.check_device(src)?;
        topo.check_device(dst)?;
        topo.check_service_on(dst, service)?;
        Ok(reachable_in(topo, self, src, dst, service))
    }

    pub fn enter_room(&self, topo: &Topology, actor: ActorId, room: RoomId) -> Result<Self, WorldError> {
        let here = self.actor(actor)?.location;
        if room.0 >= topo.rooms.len() {
            return Err(WorldError::UnknownRoom(format!("#{}", room.0)));
        }
        if !topo.rooms_adjacent(here, room) {
            return Err(WorldError::NotAdjacent {
                from: topo.room_name(here).into(),
                to: topo.room_name(room).into(),
            });
        }
        let mut next = self.clone();
        next.actors[actor.0].location = room;
        Ok(next)
    }

    pub fn control_device(&self, topo: &Topology, actor: ActorId, device: DeviceId) -> Result<Self, WorldError> {
        topo.check_device(device)?;
        let st = self.actor(actor)?;
        let dev = &topo.devices[device.0];
        if !dev.kind.physically_controllable() {
            return Err(WorldError::Uncontrollable(dev.name.clone()));
        }
        if st.location != dev.room {
            return Err(WorldError::WrongRoom(dev.name.clone()));
        }
        if st.controlled[device.0] {
            return Err(WorldError::AlreadyControlled(dev.name.clone()));
        }
        let mut next = self.clone();
        next.actors[actor.0].controlled[device.0] = true;
        next.touches.push((actor, device));
        Ok(next)
    }

    pub fn modify_acl(
        &self,
        topo: &Topology,
        actor: ActorId,
        firewall: DeviceId,
        rule: AclRule,
        edit: AclEdit,
    ) -> Result<Self, WorldError> {
        topo.check_device(firewall)?;
        self.actor(actor)?;
        if !topo.is_firewall(firewall) {
            return Err(WorldError::NotFirewall(topo.device_name(firewall).into()));
        }
        let name = topo.device_name(firewall);
        let session = topo.management_service(firewall).is_some_and(|m| self.has_session(actor, m));
        if !session {
            return Err(WorldError::NoSession(name.into()));
        }
        let table = &self.acl[firewall.0];
        let pos = table.iter().position(|r| *r == rule);
        let mut next = self.clone();
        match (edit, pos) {
            (AclEdit::Add, Some(_)) => return Err(WorldError::DuplicateRule),
            (AclEdit::Add, None) => next.acl[firewall.0].push(rule),
            (AclEdit::Remove, None) => return Err(WorldError::UnknownRule),
            (AclEdit::Remove, Some(i)) => {
                next.acl[firewall.0].remove(i);
            }
        }
        next.touches.push((actor, firewall));
        Ok(next)
    }

    /// Opens the gated link between `device` and `peer`; needs a management
    /// session on `device`.
    pub fn enable_port(&self, topo: &Topology, actor: ActorId, device: DeviceId, peer: DeviceId) -> Result<Self, WorldError> {
        topo.check_device(device)?;
        topo.check_device(peer)?;
        self.actor(actor)?;
        let not_gated = || WorldError::NotGated(topo.device_name(device).into(), topo.device_name(peer).into());
        let link = topo.link_between(device, peer).ok_or_else(not_gated)?;
        if !topo.links[link.0].gated {
            return Err(not_gated());
        }
        if self.gate_open[link.0] {
            return Err(WorldError::PortAlreadyOpen(
                topo.device_name(device).into(),
                topo.device_name(peer).into(),
            ));
        }
        let session = topo.management_service(device).is_some_and(|m| self.has_session(actor, m));
        if !session {
            return Err(WorldError::NoSession(topo.device_name(device).into()));
        }
        let mut next = self.clone();
        next.gate_open[link.0] = true;
        next.touches.push((actor, device));
        Ok(next)
    }

    pub fn access_service(
        &self,
        topo: &Topology,
        actor: ActorId,
        src: DeviceId,
        dst: DeviceId,
        service: ServiceId,
        credential: Option<CredentialId>,
    ) -> Result<(Self, AccessResult), WorldError> {
        topo.check_device(src)?;
        topo.check_device(dst)?;
        topo.check_service_on(dst, service)?;
        let st = self.actor(actor)?;
        if !st.controlled[src.0] {
            return Err(WorldError::NotControlled(topo.device_name(src).into()));
        }
        if !self.service_up[service.0] {
            return Err(WorldError::ServiceDown(topo.service_name(service).into()));
        }
        let mut next = self.clone();
        next.touches.push((actor, src));
        if dst != src {
            next.touches.push((actor, dst));
        }
        if !reachable_in(topo, self, src, dst, service) {
            return Ok((next, AccessResult::Denied(DenyReason::Unreachable)));
        }
        let svc = &topo.services[service.0];
        if let Some(required) = svc.required_credential {
            match credential {
                None => return Ok((next, AccessResult::Denied(DenyReason::MissingCredential))),
                Some(c) if c != required || !self.holds_valid(actor, c) => {
                    return Ok((next, AccessResult::Denied(DenyReason::BadCredential)))
                }
                Some(_) => {}
            }
        }
        let holder = &mut next.actors[actor.0];
        for p in &svc.yields {
            match *p {
                Payload::Credential { id, snapshot } => {
                    let generation = if snapshot { 0 } else { self.credential_generation[id.0] };
                    let held = &mut holder.credentials[id.0];
                    *held = Some(held.map_or(generation, |g| g.max(generation)));
                }
                Payload::File(f) => holder.files[f.0] = true,
            }
        }
        holder.sessions[service.0] = true;
        Ok((next, AccessResult::Granted(svc.yields.clone())))
    }

    /// Invalidates every copy of the credential currently held.
    pub fn rotate_credential(&self, topo: &Topology, c: CredentialId) -> Result<Self, WorldError> {
        if c.0 >= topo.credentials.len() {
            return Err(WorldError::UnknownCredential(format!("#{}", c.0)));
        }
        let mut next = self.clone();
        next.credential_generation[c.0] += 1;
        Ok(next)
    }

    /// Drops all non-admin sessions on the service; it stays down for the
    /// rest of the slice.
    pub fn restart_service(&self, topo: &Topology, s: ServiceId) -> Result<Self, WorldError> {
        if s.0 >= topo.services.len() {
            return Err(WorldError::UnknownService(format!("#{}", s.0)));
        }
        let mut next = self.clone();
        for a in &mut next.actors {
            a.sessions[s.0] = false;
        }
        next.service_up[s.0] = false;
        Ok(next)
    }

    /// Cuts traffic on a link for the rest of the slice.
    pub fn cut_traffic(&self, topo: &Topology, l: LinkId) -> Result<Self, WorldError> {
        if l.0 >= topo.links.len() {
            return Err(WorldError::UnknownLink(l.0));
        }
        let mut next = self.clone();
        next.cut[l.0] = true;
        Ok(next)
    }

    /// Checks the structural invariants against the topology.
    pub fn validate(&self, topo: &Topology) -> Result<(), String> {
        for (i, a) in self.actors.iter().enumerate() {
            if a.location.0 >= topo.rooms.len() {
                return Err(format!("actor {i} is in no known room"));
            }
            if a.controlled.len() != topo.devices.len()
                || a.credentials.len() != topo.credentials.len()
                || a.sessions.len() != topo.services.len()
                || a.files.len() != topo.files.len()
            {
                return Err(format!("actor {i} tables do not match the topology"));
            }
        }
        for (d, table) in self.acl.iter().enumerate() {
            if !table.is_empty() && !topo.is_firewall(DeviceId(d)) {
                return Err(format!("{} carries an ACL but is not a firewall", topo.devices[d].name));
            }
        }
        if self.acl.len() != topo.devices.len() || self.gate_open.len() != topo.links.len() {
            return Err("state tables do not match the topology".into());
        }
        Ok(())
    }
}
