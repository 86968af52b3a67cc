//! GridHouse: a household text world with rooms, receptacles and objects.
//!
//! Commands follow the household-simulator idiom (`go to cabinet 1`,
//! `take mug 1 from countertop 1`, `put mug 1 in/on cabinet 1`,
//! `clean mug 1 with sinkbasin 1`, ...). Any command outside the current
//! admissible set answers [`NOTHING_HAPPENS`] and leaves the state untouched.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvironmentEvidence, PlanStep, StepKind};
use crate::contract::{Contract, ParamSpec, ProtocolFacts, ToolSpec};

pub const NOTHING_HAPPENS: &str = "Nothing happens.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Clean,
    Hot,
    Cool,
}

impl Attribute {
    pub fn adjective(self) -> &'static str {
        match self {
            Attribute::Clean => "clean",
            Attribute::Hot => "hot",
            Attribute::Cool => "cool",
        }
    }

    /// Command verb that produces the attribute.
    pub fn verb(self) -> &'static str {
        match self {
            Attribute::Clean => "clean",
            Attribute::Hot => "heat",
            Attribute::Cool => "cool",
        }
    }

    /// Receptacle type that performs the transform.
    pub fn appliance(self) -> &'static str {
        match self {
            Attribute::Clean => "sinkbasin",
            Attribute::Hot => "microwave",
            Attribute::Cool => "fridge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub object_type: String,
    #[serde(default)]
    pub attribute: Option<Attribute>,
    pub destination_type: String,
}

impl Goal {
    pub fn instruction(&self) -> String {
        match self.attribute {
            Some(a) => format!("put a {} {} in {}.", a.adjective(), self.object_type, self.destination_type),
            None => format!("put a {} in {}.", self.object_type, self.destination_type),
        }
    }

    /// Parse `put a [clean|hot|cool] <object> in <receptacle>` anywhere in
    /// the text (case-insensitive).
    pub fn parse(text: &str) -> Option<Goal> {
        let lower = text.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        for i in 0..words.len() {
            if words[i] != "put" || words.get(i + 1) != Some(&"a") {
                continue;
            }
            let mut j = i + 2;
            let attribute = match words.get(j) {
                Some(&"clean") => Some(Attribute::Clean),
                Some(&"hot") => Some(Attribute::Hot),
                Some(&"cool") => Some(Attribute::Cool),
                _ => None,
            };
            if attribute.is_some() {
                j += 1;
            }
            let (Some(obj), Some(&"in"), Some(dest)) = (words.get(j), words.get(j + 1), words.get(j + 2)) else {
                continue;
            };
            return Some(Goal { object_type: obj.to_string(), attribute, destination_type: dest.to_string() });
        }
        None
    }

    pub fn task_type(&self) -> &'static str {
        match self.attribute {
            None => "pick",
            Some(Attribute::Clean) => "clean",
            Some(Attribute::Hot) => "heat",
            Some(Attribute::Cool) => "cool",
        }
    }
}

/// Leading verb of a well-formed GridHouse command, or `None` when the text
/// does not follow the command grammar at all.
pub fn command_verb(text: &str) -> Option<&'static str> {
    use std::sync::OnceLock;
    static GRAMMAR: OnceLock<Vec<(&'static str, regex::Regex)>> = OnceLock::new();
    let grammar = GRAMMAR.get_or_init(|| {
        let name = r"[a-z]+(?: [a-z]+)*(?: \d+)?";
        [
            ("look", "look".to_string()),
            ("inventory", "inventory".to_string()),
            ("go to", format!("go to {name}")),
            ("open", format!("open {name}")),
            ("close", format!("close {name}")),
            ("examine", format!("examine {name}")),
            ("take", format!("take {name} from {name}")),
            ("put", format!("put {name} in/on {name}")),
            ("clean", format!("clean {name} with {name}")),
            ("heat", format!("heat {name} with {name}")),
            ("cool", format!("cool {name} with {name}")),
        ]
        .into_iter()
        .map(|(v, p)| (v, regex::Regex::new(&format!("^{p}$")).expect("static grammar")))
        .collect()
    });
    let t = text.trim();
    grammar.iter().find(|(_, re)| re.is_match(t)).map(|(v, _)| *v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptacleSpec {
    pub name: String,
    #[serde(default)]
    pub openable: bool,
    #[serde(default)]
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub name: String,
    pub receptacles: Vec<ReceptacleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    pub location: String,
    #[serde(default)]
    pub clean: bool,
    #[serde(default)]
    pub hot: bool,
    #[serde(default)]
    pub cold: bool,
}

/// Hand-authored world definition. The agent starts in the first room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub rooms: Vec<RoomSpec>,
    pub objects: Vec<ObjectSpec>,
    pub goal: Goal,
}

/// `mug 1` → `mug`.
pub fn type_of(name: &str) -> &str {
    name.rsplit_once(' ').map_or(name, |(t, n)| if n.chars().all(|c| c.is_ascii_digit()) { t } else { name })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Receptacle {
    pub room: String,
    pub openable: bool,
    pub open: bool,
}

impl Receptacle {
    fn accessible(&self) -> bool {
        !self.openable || self.open
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Place {
    In(String),
    Inventory,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Object {
    pub place: Place,
    pub clean: bool,
    pub hot: bool,
    pub cold: bool,
}

impl Object {
    fn has(&self, a: Attribute) -> bool {
        match a {
            Attribute::Clean => self.clean,
            Attribute::Hot => self.hot,
            Attribute::Cool => self.cold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridHouseState {
    /// Rooms in world order with their receptacles in (seeded) listing order.
    pub rooms: Vec<(String, Vec<String>)>,
    pub receptacles: BTreeMap<String, Receptacle>,
    pub objects: BTreeMap<String, Object>,
    pub agent_room: String,
    pub agent_at: Option<String>,
    pub inventory: Option<String>,
    pub visited: BTreeSet<String>,
    pub goal: Goal,
}

fn join_listing(items: &[String]) -> String {
    match items.len() {
        0 => "nothing".into(),
        1 => format!("a {}", items[0]),
        _ => {
            let (last, head) = items.split_last().unwrap();
            let head: Vec<String> = head.iter().map(|i| format!("a {i}")).collect();
            format!("{}, and a {last}", head.join(", "))
        }
    }
}

impl GridHouseState {
    pub fn init(world: &GridWorld, seed: u64) -> Result<(Self, String), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rooms = Vec::new();
        let mut receptacles = BTreeMap::new();
        for room in &world.rooms {
            let mut names: Vec<String> = room.receptacles.iter().map(|r| r.name.clone()).collect();
            names.shuffle(&mut rng);
            for r in &room.receptacles {
                let prev = receptacles.insert(
                    r.name.clone(),
                    Receptacle { room: room.name.clone(), openable: r.openable, open: r.open && r.openable },
                );
                if prev.is_some() {
                    return Err(format!("duplicate receptacle `{}`", r.name));
                }
            }
            rooms.push((room.name.clone(), names));
        }
        let mut objects = BTreeMap::new();
        for o in &world.objects {
            if !receptacles.contains_key(&o.location) {
                return Err(format!("object `{}` placed in unknown receptacle `{}`", o.name, o.location));
            }
            let prev = objects.insert(
                o.name.clone(),
                Object { place: Place::In(o.location.clone()), clean: o.clean, hot: o.hot, cold: o.cold },
            );
            if prev.is_some() {
                return Err(format!("duplicate object `{}`", o.name));
            }
        }
        let start = rooms.first().ok_or("world has no rooms")?.0.clone();
        let state = Self {
            rooms,
            receptacles,
            objects,
            agent_room: start,
            agent_at: None,
            inventory: None,
            visited: BTreeSet::new(),
            goal: world.goal.clone(),
        };
        let obs = format!("You are in the {}. {}", state.agent_room, state.room_overview());
        Ok((state, obs))
    }

    fn room_receptacles(&self, room: &str) -> &[String] {
        self.rooms.iter().find(|(r, _)| r == room).map(|(_, v)| v.as_slice()).unwrap_or(&[])
    }

    fn room_overview(&self) -> String {
        let here = self.room_receptacles(&self.agent_room).to_vec();
        let others: Vec<&str> =
            self.rooms.iter().map(|(r, _)| r.as_str()).filter(|r| *r != self.agent_room).collect();
        let mut s = format!("Looking around, you see {}.", join_listing(&here));
        if !others.is_empty() {
            s.push_str(&format!(" Other rooms: {}.", others.join(", ")));
        }
        s
    }

    fn contents(&self, receptacle: &str) -> Vec<String> {
        self.objects
            .iter()
            .filter(|(_, o)| o.place == Place::In(receptacle.to_string()))
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn view(&self, receptacle: &str) -> String {
        let r = &self.receptacles[receptacle];
        if !r.accessible() {
            return format!("The {receptacle} is closed.");
        }
        let prep = if r.openable { "In" } else { "On" };
        format!("{prep} the {receptacle}, you see {}.", join_listing(&self.contents(receptacle)))
    }

    pub fn admissible_actions(&self) -> Vec<String> {
        let mut out = vec!["look".to_string(), "inventory".to_string()];
        for r in self.room_receptacles(&self.agent_room) {
            if self.agent_at.as_deref() != Some(r) {
                out.push(format!("go to {r}"));
            }
        }
        for (room, _) in &self.rooms {
            if *room != self.agent_room {
                out.push(format!("go to {room}"));
            }
        }
        let Some(at) = self.agent_at.clone() else { return out };
        let rec = &self.receptacles[&at];
        out.push(format!("examine {at}"));
        if rec.openable {
            out.push(if rec.open { format!("close {at}") } else { format!("open {at}") });
        }
        if rec.accessible() {
            if self.inventory.is_none() {
                for o in self.contents(&at) {
                    out.push(format!("take {o} from {at}"));
                }
            }
            if let Some(held) = &self.inventory {
                out.push(format!("put {held} in/on {at}"));
            }
        }
        if let Some(held) = &self.inventory {
            for a in [Attribute::Clean, Attribute::Hot, Attribute::Cool] {
                if type_of(&at) == a.appliance() {
                    out.push(format!("{} {held} with {at}", a.verb()));
                }
            }
        }
        out
    }

    pub fn step(&mut self, action: &str) -> String {
        let action = action.trim();
        if !self.admissible_actions().iter().any(|a| a == action) {
            return NOTHING_HAPPENS.into();
        }
        if action == "look" {
            return match &self.agent_at {
                Some(r) => format!("You are facing the {r}, in the {}.", self.agent_room),
                None => format!("You are in the middle of the {}. {}", self.agent_room, self.room_overview()),
            };
        }
        if action == "inventory" {
            return match &self.inventory {
                Some(o) => format!("You are carrying: a {o}."),
                None => "You are not carrying anything.".into(),
            };
        }
        if let Some(target) = action.strip_prefix("go to ") {
            if self.receptacles.contains_key(target) {
                self.agent_at = Some(target.to_string());
                self.visited.insert(target.to_string());
                return format!("You arrive at {target}. {}", self.view(target));
            }
            self.agent_room = target.to_string();
            self.agent_at = None;
            return format!("You enter the {target}. {}", self.room_overview());
        }
        if let Some(target) = action.strip_prefix("examine ") {
            return self.view(target);
        }
        if let Some(target) = action.strip_prefix("open ") {
            self.receptacles.get_mut(target).unwrap().open = true;
            return format!("You open the {target}. In it, you see {}.", join_listing(&self.contents(target)));
        }
        if let Some(target) = action.strip_prefix("close ") {
            self.receptacles.get_mut(target).unwrap().open = false;
            return format!("You close the {target}.");
        }
        if let Some(rest) = action.strip_prefix("take ") {
            let (obj, from) = rest.split_once(" from ").unwrap();
            self.objects.get_mut(obj).unwrap().place = Place::Inventory;
            self.inventory = Some(obj.to_string());
            return format!("You pick up the {obj} from the {from}.");
        }
        if let Some(rest) = action.strip_prefix("put ") {
            let (obj, to) = rest.split_once(" in/on ").unwrap();
            self.objects.get_mut(obj).unwrap().place = Place::In(to.to_string());
            self.inventory = None;
            return format!("You put the {obj} in/on the {to}.");
        }
        let (verb, rest) = action.split_once(' ').unwrap();
        let (obj, with) = rest.split_once(" with ").unwrap();
        let o = self.objects.get_mut(obj).unwrap();
        match verb {
            "clean" => o.clean = true,
            "heat" => {
                o.hot = true;
                o.cold = false;
            }
            "cool" => {
                o.cold = true;
                o.hot = false;
            }
            _ => unreachable!("admissible transform verbs only"),
        }
        format!("You {verb} the {obj} using the {with}.")
    }

    pub fn goal_satisfied(&self) -> bool {
        self.objects.iter().any(|(name, o)| {
            type_of(name) == self.goal.object_type
                && self.goal.attribute.map_or(true, |a| o.has(a))
                && matches!(&o.place, Place::In(r) if type_of(r) == self.goal.destination_type)
        })
    }

    pub fn evidence(&self) -> EnvironmentEvidence {
        let mut facts = BTreeMap::new();
        facts.insert("room".into(), self.agent_room.clone());
        facts.insert("at".into(), self.agent_at.clone().unwrap_or_default());
        facts.insert("inventory".into(), self.inventory.clone().unwrap_or_default());
        if let Some(held) = &self.inventory {
            let o = &self.objects[held];
            let attrs: Vec<&str> = [Attribute::Clean, Attribute::Hot, Attribute::Cool]
                .into_iter()
                .filter(|a| o.has(*a))
                .map(Attribute::adjective)
                .collect();
            facts.insert("inventory_state".into(), attrs.join(","));
        }
        facts.insert("visited".into(), self.visited.iter().cloned().collect::<Vec<_>>().join(","));
        EnvironmentEvidence {
            admissible_actions: self.admissible_actions(),
            schema: None,
            no_op_phrases: vec![NOTHING_HAPPENS.into()],
            progress_facts: facts,
        }
    }

    /// Key over the physical world, ignoring the visit log.
    pub fn physical_key(&self) -> String {
        let objects: Vec<String> = self
            .objects
            .iter()
            .map(|(n, o)| format!("{n}:{:?}:{}{}{}", o.place, o.clean as u8, o.hot as u8, o.cold as u8))
            .collect();
        let opens: Vec<String> = self
            .receptacles
            .iter()
            .filter(|(_, r)| r.openable)
            .map(|(n, r)| format!("{n}:{}", r.open as u8))
            .collect();
        format!("{}|{:?}|{:?}|{}|{}", self.agent_room, self.agent_at, self.inventory, objects.join(";"), opens.join(";"))
    }

    fn route(&self, room: &str, at: Option<&str>, target: &str, plan: &mut Vec<PlanStep>) -> String {
        let target_room = &self.receptacles[target].room;
        if target_room != room {
            plan.push(PlanStep { action: format!("go to {target_room}"), kind: StepKind::Navigate });
            plan.push(PlanStep { action: format!("go to {target}"), kind: StepKind::Navigate });
        } else if at != Some(target) {
            plan.push(PlanStep { action: format!("go to {target}"), kind: StepKind::Navigate });
        }
        target_room.clone()
    }

    fn plan_for(&self, object: &str, dest: &str, appliance: Option<&str>) -> Vec<PlanStep> {
        let mut plan = Vec::new();
        let mut opened: BTreeSet<&str> = BTreeSet::new();
        let Place::In(source) = &self.objects[object].place else {
            return plan;
        };
        let mut room = self.route(&self.agent_room, self.agent_at.as_deref(), source, &mut plan);
        let mut at = source.as_str();
        if !self.receptacles[source].accessible() {
            plan.push(PlanStep { action: format!("open {source}"), kind: StepKind::Open });
            opened.insert(source);
        }
        plan.push(PlanStep { action: format!("take {object} from {source}"), kind: StepKind::Pickup });
        if let (Some(app), Some(attr)) = (appliance, self.goal.attribute) {
            room = self.route(&room, Some(at), app, &mut plan);
            at = app;
            plan.push(PlanStep { action: format!("{} {object} with {app}", attr.verb()), kind: StepKind::Transform });
        }
        self.route(&room, Some(at), dest, &mut plan);
        if !self.receptacles[dest].accessible() && !opened.contains(dest) {
            plan.push(PlanStep { action: format!("open {dest}"), kind: StepKind::Open });
        }
        plan.push(PlanStep { action: format!("put {object} in/on {dest}"), kind: StepKind::Place });
        plan
    }

    /// Cheapest pickup → [transform] → place plan over every candidate
    /// object, appliance and destination. Assumes empty hands.
    pub fn reference_plan(&self) -> Vec<PlanStep> {
        if self.goal_satisfied() || self.inventory.is_some() {
            return Vec::new();
        }
        let mut best: Option<Vec<PlanStep>> = None;
        let dests: Vec<&String> =
            self.receptacles.keys().filter(|r| type_of(r) == self.goal.destination_type).collect();
        for (name, obj) in &self.objects {
            if type_of(name) != self.goal.object_type || !matches!(obj.place, Place::In(_)) {
                continue;
            }
            let appliances: Vec<Option<&str>> = match self.goal.attribute {
                Some(a) if !obj.has(a) => self
                    .receptacles
                    .keys()
                    .filter(|r| type_of(r) == a.appliance())
                    .map(|r| Some(r.as_str()))
                    .collect(),
                _ => vec![None],
            };
            for app in &appliances {
                for dest in &dests {
                    let plan = self.plan_for(name, dest, *app);
                    if best.as_ref().map_or(true, |b| plan.len() < b.len()) {
                        best = Some(plan);
                    }
                }
            }
        }
        best.unwrap_or_default()
    }
}

pub fn base_contract() -> Contract {
    let loc = |n: &str| ParamSpec::required(n, "location");
    let obj = || ParamSpec::required("object", "object");
    let tools = vec![
        ToolSpec::new("go to", "Move to a receptacle in the current room, or to another room. Syntax: go to <target>.", vec![loc("target")])
            .with_note("Receptacles in other rooms are reachable only after entering that room."),
        ToolSpec::new("open", "Open the receptacle you are at. Syntax: open <receptacle>.", vec![loc("receptacle")]),
        ToolSpec::new("close", "Close the receptacle you are at. Syntax: close <receptacle>.", vec![loc("receptacle")]),
        ToolSpec::new("take", "Pick up an object from the receptacle you are at. Syntax: take <object> from <receptacle>.", vec![obj(), loc("source")])
            .with_note("Hands hold one object; the receptacle must be open."),
        ToolSpec::new("put", "Place the held object at the receptacle you are at. Syntax: put <object> in/on <receptacle>.", vec![obj(), loc("destination")]),
        ToolSpec::new("clean", "Clean an object with a sinkbasin. Syntax: clean <object> with <sinkbasin>.", vec![obj(), loc("appliance")]),
        ToolSpec::new("heat", "Heat an object with a microwave. Syntax: heat <object> with <microwave>.", vec![obj(), loc("appliance")]),
        ToolSpec::new("cool", "Cool an object with a fridge. Syntax: cool <object> with <fridge>.", vec![obj(), loc("appliance")]),
        ToolSpec::new("look", "Describe your surroundings.", vec![]),
        ToolSpec::new("inventory", "List what you are carrying.", vec![]),
        ToolSpec::new("examine", "Describe the receptacle you are at. Syntax: examine <receptacle>.", vec![loc("receptacle")]),
    ];
    let protocol = ProtocolFacts {
        answer_tool: None,
        finish_tool: None,
        command_tool: None,
        precedence: ["clean", "heat", "cool"].iter().map(|v| ("take".to_string(), v.to_string())).collect(),
    };
    Contract::new(
        crate::task::GRIDHOUSE,
        tools,
        vec!["The episode ends as soon as the goal holds.".into()],
        "Reply with exactly one action per turn as plain text, e.g. go to countertop 1.",
        protocol,
    )
    .expect("static contract is valid")
}
