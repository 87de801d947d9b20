//! Scenario documents.
//!
//! Line-oriented text: `[section]` headers, then one record per line made of
//! comma-separated `key = value` pairs. `#` starts a comment. List values are
//! separated by `;`. See `scenarios/paper_fig3.scn` for a complete example.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use thiserror::Error;

use super::{
    AclRule, Credential, CredentialId, Device, DeviceId, DeviceKind, FileId, Link, Payload, PlacedRule, Room,
    RoomId, Service, ServiceId, Topology, WorldState,
};
use crate::game::{RewardModel, TerminalRewards, ATTACK_VARIANTS, DEFENSE_VARIANTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario (line {line}): {message}")]
    Validation { line: usize, message: String },
}

impl ScenarioError {
    pub fn line(&self) -> usize {
        match self {
            Self::Parse { line, .. } | Self::Validation { line, .. } => *line,
        }
    }
}

/// One step of a scripted attack, as written in the `[script]` section.
#[derive(Debug, Clone, PartialEq)]
pub enum ScriptStepSpec {
    /// Obtain `wants` by accessing `service` on `device`, optionally from a
    /// fixed source device.
    Acquire {
        macro_step: usize,
        via: Option<DeviceId>,
        device: DeviceId,
        service: ServiceId,
        wants: Vec<Payload>,
    },
    /// Install a rule on `firewall` admitting the current pivot to `service`
    /// on `dst`.
    Allow { macro_step: usize, firewall: DeviceId, dst: DeviceId, service: ServiceId },
    /// Open the gated link between `device` and `peer`.
    OpenPort { macro_step: usize, device: DeviceId, peer: DeviceId },
}

impl ScriptStepSpec {
    pub fn macro_step(&self) -> usize {
        match self {
            Self::Acquire { macro_step, .. } | Self::Allow { macro_step, .. } | Self::OpenPort { macro_step, .. } => {
                *macro_step
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScriptSpec {
    /// Source devices in order of preference.
    pub pivots: Vec<DeviceId>,
    pub steps: Vec<ScriptStepSpec>,
}

/// A loaded and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    /// Two actors: the user (slot 0) and the defender (slot 1, admin).
    pub initial: WorldState,
    pub rewards: RewardModel,
    pub script: ScriptSpec,
    pub max_slices: usize,
    pub user_ratio: f64,
    pub attack_probability: f64,
}

/// The bundled five-room scenario.
pub const BUNDLED_SCENARIO: &str = include_str!("../../../../scenarios/paper_fig3.scn");

impl Scenario {
    pub fn bundled() -> Self {
        load_scenario(BUNDLED_SCENARIO).expect("bundled scenario is valid")
    }
}

struct Pair<'a> {
    key: &'a str,
    value: &'a str,
    column: usize,
}

struct Record<'a> {
    line: usize,
    pairs: Vec<Pair<'a>>,
}

impl<'a> Record<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|p| p.key == key).map(|p| p.value)
    }

    fn req(&self, key: &str) -> Result<&'a str, ScenarioError> {
        self.get(key).ok_or_else(|| invalid(self.line, format!("missing `{key}`")))
    }

    fn flag(&self, key: &str) -> Result<bool, ScenarioError> {
        match self.get(key) {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(invalid(self.line, format!("`{key}` must be true or false, got `{v}`"))),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ScenarioError> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| invalid(self.line, format!("`{key}` is not a number: `{v}`"))))
            .transpose()
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), ScenarioError> {
        for p in &self.pairs {
            if !allowed.contains(&p.key) {
                return Err(ScenarioError::Parse {
                    line: self.line,
                    column: p.column,
                    message: format!("unexpected key `{}`", p.key),
                });
            }
        }
        Ok(())
    }
}

fn invalid(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { line, message: message.into() }
}

const SECTIONS: &[&str] = &[
    "rooms",
    "adjacency",
    "devices",
    "links",
    "services",
    "credentials",
    "acl",
    "costs",
    "terminal_rewards",
    "script",
];

fn tokenize(text: &str) -> Result<HashMap<&str, (usize, Vec<Record<'_>>)>, ScenarioError> {
    let mut sections: HashMap<&str, (usize, Vec<Record<'_>>)> = HashMap::new();
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ScenarioError::Parse {
                line,
                column: indent + trimmed.len(),
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ScenarioError::Parse { line, column: indent + 2, message: format!("unknown section `{name}`") });
            }
            if sections.contains_key(name) {
                return Err(ScenarioError::Parse { line, column: indent + 1, message: format!("duplicate section `{name}`") });
            }
            sections.insert(name, (line, Vec::new()));
            current = Some(name);
            continue;
        }
        let Some(section) = current else {
            return Err(ScenarioError::Parse { line, column: indent + 1, message: "record outside of any section".into() });
        };
        let mut pairs = Vec::new();
        let mut offset = 0;
        for chunk in body.split(',') {
            let column = offset + 1 + (chunk.len() - chunk.trim_start().len());
            offset += chunk.len() + 1;
            let (k, v) = chunk.split_once('=').ok_or_else(|| ScenarioError::Parse {
                line,
                column,
                message: format!("expected `key = value`, found `{}`", chunk.trim()),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ScenarioError::Parse { line, column, message: "empty key or value".into() });
            }
            pairs.push(Pair { key: k, value: v, column });
        }
        sections.get_mut(section).expect("section registered").1.push(Record { line, pairs });
    }
    if sections.values().all(|(_, recs)| recs.is_empty()) {
        return Err(ScenarioError::Parse { line: 1, column: 1, message: "empty scenario document".into() });
    }
    Ok(sections)
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(';').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let sections = tokenize(text)?;
    let empty = Vec::new();
    let section = |name: &str| -> &Vec<Record<'_>> { sections.get(name).map_or(&empty, |(_, r)| r) };
    let section_line = |name: &str| sections.get(name).map_or(1, |(l, _)| *l);

    // rooms
    let mut rooms = Vec::new();
    let mut room_ix: HashMap<&str, RoomId> = HashMap::new();
    for r in section("rooms") {
        r.check_keys(&["id", "label"])?;
        let id = r.req("id")?;
        if room_ix.insert(id, RoomId(rooms.len())).is_some() {
            return Err(invalid(r.line, format!("duplicate room `{id}`")));
        }
        rooms.push(Room { name: id.into(), label: r.get("label").map(Into::into) });
    }
    let outside = *room_ix
        .get("outside")
        .ok_or_else(|| invalid(section_line("rooms"), "rooms must include `outside`"))?;
    let room = |rec: &Record, key: &str| -> Result<RoomId, ScenarioError> {
        let v = rec.req(key)?;
        room_ix.get(v).copied().ok_or_else(|| invalid(rec.line, format!("unknown room `{v}`")))
    };

    // adjacency
    let mut adjacency = vec![Vec::new(); rooms.len()];
    for r in section("adjacency") {
        r.check_keys(&["a", "b"])?;
        let (a, b) = (room(r, "a")?, room(r, "b")?);
        if a == b {
            return Err(invalid(r.line, "a room cannot be adjacent to itself"));
        }
        if !adjacency[a.0].contains(&b) {
            adjacency[a.0].push(b);
            adjacency[b.0].push(a);
        }
    }
    adjacency.iter_mut().for_each(|v| v.sort());
    let mut seen = vec![false; rooms.len()];
    let mut queue = VecDeque::from([outside]);
    seen[outside.0] = true;
    while let Some(r) = queue.pop_front() {
        for &n in &adjacency[r.0] {
            if !seen[n.0] {
                seen[n.0] = true;
                queue.push_back(n);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(invalid(section_line("adjacency"), format!("room `{}` is not reachable from outside", rooms[i].name)));
    }

    // devices
    let mut devices: Vec<Device> = Vec::new();
    let mut dev_ix: HashMap<&str, DeviceId> = HashMap::new();
    for r in section("devices") {
        r.check_keys(&["id", "kind", "room"])?;
        let id = r.req("id")?;
        let kind_s = r.req("kind")?;
        let kind = DeviceKind::parse(kind_s).ok_or_else(|| invalid(r.line, format!("unknown device kind `{kind_s}`")))?;
        let room = room(r, "room")?;
        if dev_ix.insert(id, DeviceId(devices.len())).is_some() {
            return Err(invalid(r.line, format!("duplicate device `{id}`")));
        }
        devices.push(Device { name: id.into(), kind, room, services: Vec::new() });
    }
    let device = |rec: &Record, key: &str| -> Result<DeviceId, ScenarioError> {
        let v = rec.req(key)?;
        dev_ix.get(v).copied().ok_or_else(|| invalid(rec.line, format!("unknown device `{v}`")))
    };

    // links
    let mut links = Vec::new();
    let mut link_set = HashSet::new();
    for r in section("links") {
        r.check_keys(&["a", "b", "gated"])?;
        let (a, b) = (device(r, "a")?, device(r, "b")?);
        if a == b {
            return Err(invalid(r.line, "self-link"));
        }
        if !link_set.insert((a.min(b), a.max(b))) {
            return Err(invalid(r.line, "duplicate link"));
        }
        links.push(Link { a, b, gated: r.flag("gated")? });
    }

    // credentials are referenced by services, so collect names first.
    let mut cred_ix: HashMap<&str, CredentialId> = HashMap::new();
    for (i, r) in section("credentials").iter().enumerate() {
        r.check_keys(&["id", "unlocks"])?;
        let id = r.req("id")?;
        if cred_ix.insert(id, CredentialId(i)).is_some() {
            return Err(invalid(r.line, format!("duplicate credential `{id}`")));
        }
    }

    // services
    let mut services: Vec<Service> = Vec::new();
    let mut files: Vec<String> = Vec::new();
    let mut file_source: Option<(usize, ServiceId)> = None;
    let parse_payload = |line: usize, item: &str, files: &mut Vec<String>| -> Result<Payload, ScenarioError> {
        if let Some(f) = item.strip_prefix("file:") {
            let id = files.iter().position(|x| x == f).unwrap_or_else(|| {
                files.push(f.into());
                files.len() - 1
            });
            return Ok(Payload::File(FileId(id)));
        }
        let (name, snapshot) = match item.split_once('@') {
            Some((n, "snapshot")) => (n, true),
            Some((_, tag)) => return Err(invalid(line, format!("unknown payload tag `{tag}`"))),
            None => (item, false),
        };
        let id = cred_ix.get(name).copied().ok_or_else(|| invalid(line, format!("unknown credential `{name}`")))?;
        Ok(Payload::Credential { id, snapshot })
    };
    for r in section("services") {
        r.check_keys(&["device", "name", "credential", "management", "yields"])?;
        let dev = device(r, "device")?;
        let name = r.req("name")?;
        if devices[dev.0].services.iter().any(|s| services[s.0].name == name) {
            return Err(invalid(r.line, format!("service `{name}` declared twice on `{}`", devices[dev.0].name)));
        }
        let required_credential = r
            .get("credential")
            .map(|c| cred_ix.get(c).copied().ok_or_else(|| invalid(r.line, format!("unknown credential `{c}`"))))
            .transpose()?;
        let yields = r
            .get("yields")
            .map(|v| list(v).map(|item| parse_payload(r.line, item, &mut files)).collect::<Result<Vec<_>, _>>())
            .transpose()?
            .unwrap_or_default();
        let sid = ServiceId(services.len());
        if yields.iter().any(|p| matches!(p, Payload::File(_))) {
            if file_source.is_some() {
                return Err(invalid(r.line, "exactly one service may hold the target file"));
            }
            if devices[dev.0].kind != DeviceKind::Server {
                return Err(invalid(r.line, "the target file must be held by a server"));
            }
            file_source = Some((r.line, sid));
        }
        devices[dev.0].services.push(sid);
        services.push(Service {
            name: name.into(),
            device: dev,
            required_credential,
            yields,
            management: r.flag("management")?,
        });
    }
    if files.len() != 1 || file_source.is_none() {
        return Err(invalid(section_line("services"), "scenario must declare exactly one target file"));
    }
    let service_on = |line: usize, dev: DeviceId, name: &str, services: &[Service]| -> Result<ServiceId, ScenarioError> {
        devices[dev.0]
            .services
            .iter()
            .copied()
            .find(|s| services[s.0].name == name)
            .ok_or_else(|| invalid(line, format!("no service `{name}` on `{}`", devices[dev.0].name)))
    };

    let mut credentials = Vec::new();
    for r in section("credentials") {
        let unlocks = r.req("unlocks")?;
        let (d, s) = unlocks
            .split_once('/')
            .ok_or_else(|| invalid(r.line, "`unlocks` must be DEVICE/SERVICE"))?;
        let dev = *dev_ix.get(d).ok_or_else(|| invalid(r.line, format!("unknown device `{d}`")))?;
        let svc = service_on(r.line, dev, s, &services)?;
        credentials.push(Credential { name: r.req("id")?.into(), unlocks: svc });
    }

    // acl
    let mut universe = Vec::new();
    let mut defaults = Vec::new();
    for r in section("acl") {
        r.check_keys(&["firewall", "src", "dst", "service", "installed"])?;
        let fw = device(r, "firewall")?;
        if devices[fw.0].kind != DeviceKind::Firewall {
            return Err(invalid(r.line, format!("`{}` is not a firewall and cannot carry an ACL", devices[fw.0].name)));
        }
        let src = match r.req("src")? {
            "*" => None,
            _ => Some(device(r, "src")?),
        };
        let dst = device(r, "dst")?;
        let service = match r.req("service")? {
            "*" => None,
            s => Some(service_on(r.line, dst, s, &services)?),
        };
        let placed = PlacedRule { firewall: fw, rule: AclRule { src, dst, service } };
        if universe.contains(&placed) {
            return Err(invalid(r.line, "duplicate ACL rule"));
        }
        let installed = match r.get("installed") {
            None => true,
            Some(_) => r.flag("installed")?,
        };
        if installed {
            defaults.push(placed);
        }
        universe.push(placed);
    }

    // costs
    let mut attack_cost = BTreeMap::new();
    let mut damage_cost = BTreeMap::new();
    let mut defense_cost = BTreeMap::new();
    let mut max_slices = 60usize;
    let mut user_ratio = 0.4;
    let mut attack_probability = 0.3;
    for r in section("costs") {
        for p in &r.pairs {
            let value: f64 = p
                .value
                .parse()
                .map_err(|_| invalid(r.line, format!("`{}` is not a number: `{}`", p.key, p.value)))?;
            if !value.is_finite() || value < 0.0 {
                return Err(invalid(r.line, format!("`{}` must be finite and non-negative", p.key)));
            }
            match p.key.split_once('.') {
                Some(("attack", v)) => {
                    attack_cost.insert(v.to_string(), value);
                }
                Some(("damage", v)) => {
                    damage_cost.insert(v.to_string(), value);
                }
                Some(("defense", v)) => {
                    defense_cost.insert(v.to_string(), value);
                }
                _ => match p.key {
                    "max_slices" => {
                        if value < 1.0 || value.fract() != 0.0 {
                            return Err(invalid(r.line, "`max_slices` must be a positive integer"));
                        }
                        max_slices = value as usize;
                    }
                    "user_ratio" | "attack_probability" => {
                        if value > 1.0 {
                            return Err(invalid(r.line, format!("`{}` must lie in [0, 1]", p.key)));
                        }
                        if p.key == "user_ratio" {
                            user_ratio = value;
                        } else {
                            attack_probability = value;
                        }
                    }
                    _ => {
                        return Err(ScenarioError::Parse {
                            line: r.line,
                            column: p.column,
                            message: format!("unexpected key `{}`", p.key),
                        })
                    }
                },
            }
        }
    }
    let costs_line = section_line("costs");
    for v in ATTACK_VARIANTS {
        if !attack_cost.contains_key(*v) || !damage_cost.contains_key(*v) {
            return Err(invalid(costs_line, format!("missing attack/damage cost for `{v}`")));
        }
    }
    if !damage_cost.contains_key("acquire") {
        return Err(invalid(costs_line, "missing `damage.acquire`"));
    }
    for v in DEFENSE_VARIANTS {
        if !defense_cost.contains_key(*v) {
            return Err(invalid(costs_line, format!("missing defense cost for `{v}`")));
        }
    }

    // terminal rewards
    let mut terminal = TerminalRewards::default();
    for r in section("terminal_rewards") {
        r.check_keys(&[
            "success.attacker",
            "success.defender",
            "captured.attacker",
            "captured.defender",
            "no_harvest.attacker",
            "no_harvest.defender",
        ])?;
        for p in &r.pairs {
            let value = r.number(p.key)?.expect("key present");
            let slot = match p.key {
                "success.attacker" => &mut terminal.success.0,
                "success.defender" => &mut terminal.success.1,
                "captured.attacker" => &mut terminal.captured.0,
                "captured.defender" => &mut terminal.captured.1,
                "no_harvest.attacker" => &mut terminal.no_harvest.0,
                _ => &mut terminal.no_harvest.1,
            };
            *slot = value;
        }
    }
    let tr_line = section_line("terminal_rewards");
    if terminal.success.0 + terminal.success.1 != 0.0 || terminal.captured.0 + terminal.captured.1 != 0.0 {
        return Err(invalid(tr_line, "success and captured terminal rewards must be zero-sum"));
    }

    // script
    let mut script = ScriptSpec::default();
    for r in section("script") {
        if let Some(p) = r.get("pivots") {
            r.check_keys(&["pivots"])?;
            for name in list(p) {
                let d = *dev_ix.get(name).ok_or_else(|| invalid(r.line, format!("unknown device `{name}`")))?;
                script.pivots.push(d);
            }
            continue;
        }
        let macro_step = r
            .number("macro")?
            .map(|m| m as usize)
            .unwrap_or(script.steps.last().map_or(1, |s: &ScriptStepSpec| s.macro_step()));
        let step = match r.req("step")? {
            "acquire" => {
                r.check_keys(&["macro", "step", "via", "device", "service", "wants"])?;
                let dev = device(r, "device")?;
                let service = service_on(r.line, dev, r.req("service")?, &services)?;
                let via = r.get("via").map(|_| device(r, "via")).transpose()?;
                let wants = list(r.req("wants")?)
                    .map(|w| {
                        if let Some(f) = w.strip_prefix("file:") {
                            files
                                .iter()
                                .position(|x| x == f)
                                .map(|i| Payload::File(FileId(i)))
                                .ok_or_else(|| invalid(r.line, format!("unknown file `{f}`")))
                        } else {
                            cred_ix
                                .get(w)
                                .map(|&id| Payload::Credential { id, snapshot: false })
                                .ok_or_else(|| invalid(r.line, format!("unknown credential `{w}`")))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ScriptStepSpec::Acquire { macro_step, via, device: dev, service, wants }
            }
            "allow" => {
                r.check_keys(&["macro", "step", "firewall", "dst", "service"])?;
                let firewall = device(r, "firewall")?;
                if devices[firewall.0].kind != DeviceKind::Firewall {
                    return Err(invalid(r.line, "`allow` needs a firewall"));
                }
                let dst = device(r, "dst")?;
                let service = service_on(r.line, dst, r.req("service")?, &services)?;
                ScriptStepSpec::Allow { macro_step, firewall, dst, service }
            }
            "open_port" => {
                r.check_keys(&["macro", "step", "device", "peer"])?;
                let (device, peer) = (device(r, "device")?, device(r, "peer")?);
                if !links.iter().any(|l| l.gated && ((l.a, l.b) == (device, peer) || (l.b, l.a) == (device, peer))) {
                    return Err(invalid(r.line, "`open_port` needs a gated link"));
                }
                ScriptStepSpec::OpenPort { macro_step, device, peer }
            }
            other => return Err(invalid(r.line, format!("unknown script step `{other}`"))),
        };
        script.steps.push(step);
    }

    let target_file = FileId(0);
    let topology = Topology::new(rooms, adjacency, outside, devices, services, credentials, files, links, universe, target_file);
    let mut initial = WorldState::initial(&topology, 2, 1);
    for placed in &topology.rule_universe {
        if defaults.contains(placed) {
            initial.acl[placed.firewall.0].push(placed.rule);
        }
    }
    initial.validate(&topology).map_err(|m| invalid(1, m))?;
    Ok(Scenario {
        topology,
        initial,
        rewards: RewardModel { attack_cost, damage_cost, defense_cost, terminal },
        script,
        max_slices,
        user_ratio,
        attack_probability,
    })
}
