//! Domain types shared by the simulator, the protocols, the analyzer and the
//! optimizer.
//!
//! A [`Strategy`] is the four-parameter broadcast policy `[p, nr, dr, ttl]`.
//! The [`KnowledgeBase`] maps every `(DensityClass, Priority)` pair to the
//! strategy a node applies when it relays a packet of that priority in a
//! network of that density.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Node identifier; nodes are numbered `0..node_count` along the convoy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Packet identifier: the emitting node and its per-source sequence number.
/// Every copy and repetition of a packet shares the same id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketId {
    pub source: NodeId,
    pub seq: u32,
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.seq)
    }
}

impl FromStr for PacketId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (src, seq) = s
            .split_once(':')
            .ok_or_else(|| format!("packet id `{s}` is not of the form source:seq"))?;
        Ok(PacketId {
            source: NodeId(src.parse().map_err(|e| format!("packet id `{s}`: {e}"))?),
            seq: seq.parse().map_err(|e| format!("packet id `{s}`: {e}"))?,
        })
    }
}

/// Message priority. Ordered `LL < ML < HL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Priority {
    LL,
    ML,
    HL,
}

impl Priority {
    /// Highest first, the order used in files and reports.
    pub const ALL: [Priority; 3] = [Priority::HL, Priority::ML, Priority::LL];

    pub fn as_str(self) -> &'static str {
        match self {
            Priority::HL => "HL",
            Priority::ML => "ML",
            Priority::LL => "LL",
        }
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Priority {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "HL" | "hl" => Ok(Priority::HL),
            "ML" | "ml" => Ok(Priority::ML),
            "LL" | "ll" => Ok(Priority::LL),
            other => Err(format!("unknown priority `{other}`")),
        }
    }
}

/// Network density class. Ordered `VeryLow < Low < Medium < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DensityClass {
    VeryLow,
    Low,
    Medium,
    High,
}

impl DensityClass {
    /// Densest first, the order used in files and reports.
    pub const ALL: [DensityClass; 4] = [
        DensityClass::High,
        DensityClass::Medium,
        DensityClass::Low,
        DensityClass::VeryLow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DensityClass::High => "High",
            DensityClass::Medium => "Medium",
            DensityClass::Low => "Low",
            DensityClass::VeryLow => "VeryLow",
        }
    }
}

impl fmt::Display for DensityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DensityClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(DensityClass::High),
            "medium" => Ok(DensityClass::Medium),
            "low" => Ok(DensityClass::Low),
            "verylow" | "very-low" | "very_low" => Ok(DensityClass::VeryLow),
            _ => Err(format!("unknown density class `{s}`")),
        }
    }
}

/// Lower bounds (inclusive) of the Low, Medium and High classes, in mean
/// neighbours. Midpoints between the representative counts 1, 5, 10 and 26.
pub const DENSITY_THRESHOLDS: [f64; 3] = [3.0, 8.0, 18.0];

/// Maps a mean neighbour count to its density class.
pub fn classify_density(mean_neighbours: f64) -> Result<DensityClass> {
    if mean_neighbours.is_nan() || mean_neighbours < 0.0 {
        return Err(Error::NegativeDensity(mean_neighbours));
    }
    let [low, medium, high] = DENSITY_THRESHOLDS;
    Ok(if mean_neighbours >= high {
        DensityClass::High
    } else if mean_neighbours >= medium {
        DensityClass::Medium
    } else if mean_neighbours >= low {
        DensityClass::Low
    } else {
        DensityClass::VeryLow
    })
}

/// Broadcast policy `[p, nr, dr, ttl]`.
///
/// `p` is the probability to relay a packet, `nr` the number of times a
/// relayed packet is transmitted, `dr` the delay in seconds between two
/// successive repetitions and `ttl` the maximum number of hops. `dr` has no
/// effect when `nr == 1` but is kept so genomes round-trip losslessly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy {
    pub p: f64,
    pub nr: u32,
    pub dr: f64,
    pub ttl: u32,
}

impl Strategy {
    pub fn new(p: f64, nr: u32, dr: f64, ttl: u32) -> Result<Self> {
        let s = Strategy { p, nr, dr, ttl };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidStrategy(format!("p = {} outside [0, 1]", self.p)));
        }
        if self.nr < 1 {
            return Err(Error::InvalidStrategy("nr must be at least 1".into()));
        }
        if !(self.dr.is_finite() && self.dr >= 0.0) {
            return Err(Error::InvalidStrategy(format!("dr = {} must be finite and >= 0", self.dr)));
        }
        if self.ttl < 1 {
            return Err(Error::InvalidStrategy("ttl must be at least 1".into()));
        }
        Ok(())
    }

    /// Total order on the raw parameters, used as the last tie-break.
    pub fn lexicographic_cmp(&self, other: &Strategy) -> std::cmp::Ordering {
        self.p
            .total_cmp(&other.p)
            .then(self.nr.cmp(&other.nr))
            .then(self.dr.total_cmp(&other.dr))
            .then(self.ttl.cmp(&other.ttl))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[p={}, nr={}, dr={}, ttl={}]", self.p, self.nr, self.dr, self.ttl)
    }
}

/// The four objective values of one evaluation.
///
/// `nc`, `pt` and `r` are minimized, `fr` is maximized. `pt` is `None` when
/// no packet was delivered to every node, since propagation time is only
/// defined over fully delivered packets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveVector {
    pub nc: f64,
    pub pt: Option<f64>,
    pub r: f64,
    pub fr: f64,
}

impl ObjectiveVector {
    pub fn new(nc: f64, pt: Option<f64>, r: f64, fr: f64) -> Self {
        ObjectiveVector { nc, pt, r, fr }
    }

    /// PT with "undefined" mapped to +infinity, the worst value.
    pub fn pt_or_inf(&self) -> f64 {
        self.pt.unwrap_or(f64::INFINITY)
    }
}

/// A broadcast packet as seen by a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub source: NodeId,
    pub priority: Priority,
    pub ttl_remaining: u32,
    pub last_transmitter: NodeId,
    pub created_at: f64,
}

/// One scheduled source emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceEmission {
    pub node: NodeId,
    pub priority: Priority,
    pub time: f64,
}

/// A packet that the scenario's source schedule will emit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedPacket {
    pub id: PacketId,
    pub priority: Priority,
    pub time: f64,
}

/// Static convoy scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub node_count: u32,
    pub inter_vehicle_distance: f64,
    pub line_length: f64,
    pub comm_range: f64,
    /// Stationary fraction of time a link is usable.
    pub duty_cycle: f64,
    /// Mean length of a usable burst, seconds.
    pub on_period_mean: f64,
    /// Frame duration, seconds.
    pub airtime: f64,
    /// Upper bound of the uniform relay jitter, seconds.
    pub relay_jitter: f64,
    /// When false, overlapping frames do not destroy each other.
    pub collisions: bool,
    /// Defer a frame while an in-range frame is on the air, then back off a
    /// random number of slots.
    pub carrier_sense: bool,
    /// Distance within which a frame on the air is sensed, meters.
    pub sense_range: f64,
    /// Backoff slot length, seconds.
    pub backoff_slot: f64,
    /// Backoff draws uniformly from `0..backoff_window` slots.
    pub backoff_window: u32,
    pub source_schedule: Vec<SourceEmission>,
    pub duration: f64,
    pub seed: u64,
}

pub const DEFAULT_AIRTIME: f64 = 0.004;
pub const DEFAULT_RELAY_JITTER: f64 = 0.010;
pub const DEFAULT_ON_PERIOD_MEAN: f64 = 1.0;
pub const DEFAULT_BACKOFF_SLOT: f64 = 20e-6;
pub const DEFAULT_BACKOFF_WINDOW: u32 = 32;

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            node_count: 1,
            inter_vehicle_distance: 0.0,
            line_length: 10_000.0,
            comm_range: 500.0,
            duty_cycle: 1.0,
            on_period_mean: DEFAULT_ON_PERIOD_MEAN,
            airtime: DEFAULT_AIRTIME,
            relay_jitter: DEFAULT_RELAY_JITTER,
            collisions: true,
            carrier_sense: false,
            sense_range: 1000.0,
            backoff_slot: DEFAULT_BACKOFF_SLOT,
            backoff_window: DEFAULT_BACKOFF_WINDOW,
            source_schedule: Vec::new(),
            duration: 60.0,
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.node_count < 1 {
            return bad("node_count must be at least 1".into());
        }
        if !(self.inter_vehicle_distance.is_finite() && self.inter_vehicle_distance >= 0.0) {
            return bad(format!("inter_vehicle_distance = {}", self.inter_vehicle_distance));
        }
        let span = f64::from(self.node_count - 1) * self.inter_vehicle_distance;
        if span > self.line_length {
            return bad(format!(
                "{} nodes spaced {} m need {} m but line_length is {} m",
                self.node_count, self.inter_vehicle_distance, span, self.line_length
            ));
        }
        if !(self.comm_range.is_finite() && self.comm_range > 0.0) {
            return bad(format!("comm_range = {} must be > 0", self.comm_range));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return bad(format!("duty_cycle = {} outside (0, 1]", self.duty_cycle));
        }
        if !(self.on_period_mean.is_finite() && self.on_period_mean > 0.0) {
            return bad(format!("on_period_mean = {} must be > 0", self.on_period_mean));
        }
        if !(self.airtime.is_finite() && self.airtime > 0.0) {
            return bad(format!("airtime = {} must be > 0", self.airtime));
        }
        if !(self.relay_jitter.is_finite() && self.relay_jitter >= 0.0) {
            return bad(format!("relay_jitter = {} must be >= 0", self.relay_jitter));
        }
        if !(self.sense_range.is_finite() && self.sense_range >= 0.0) {
            return bad(format!("sense_range = {} must be >= 0", self.sense_range));
        }
        if !(self.backoff_slot.is_finite() && self.backoff_slot > 0.0) {
            return bad(format!("backoff_slot = {} must be > 0", self.backoff_slot));
        }
        if self.backoff_window < 1 {
            return bad("backoff_window must be at least 1".into());
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration = {} must be > 0", self.duration));
        }
        for e in &self.source_schedule {
            if e.node.0 >= self.node_count {
                return bad(format!("source node {} does not exist", e.node));
            }
            if !(e.time.is_finite() && e.time >= 0.0) {
                return bad(format!("source emission time {} must be >= 0", e.time));
            }
        }
        Ok(())
    }

    /// Packets in emission order with their ids. Ids number each source's
    /// emissions in `(time, schedule index)` order.
    pub fn packet_plan(&self) -> Vec<PlannedPacket> {
        let mut order: Vec<usize> = (0..self.source_schedule.len()).collect();
        order.sort_by(|&a, &b| {
            self.source_schedule[a]
                .time
                .total_cmp(&self.source_schedule[b].time)
                .then(a.cmp(&b))
        });
        let mut next_seq: BTreeMap<NodeId, u32> = BTreeMap::new();
        order
            .into_iter()
            .map(|i| {
                let e = self.source_schedule[i];
                let seq = next_seq.entry(e.node).or_insert(0);
                let id = PacketId { source: e.node, seq: *seq };
                *seq += 1;
                PlannedPacket { id, priority: e.priority, time: e.time }
            })
            .collect()
    }

    /// Parses the key-value scenario format. Unknown keys are rejected;
    /// missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut s = Scenario::default();
        for (line, content) in content_lines(text) {
            let mut fields = content.split_whitespace();
            let key = fields.next().expect("content lines are non-empty");
            let rest: Vec<&str> = fields.collect();
            let err = |message: String| Error::Parse { line, message };
            let single = |rest: &[&str]| -> Result<String> {
                match rest {
                    [v] => Ok((*v).to_string()),
                    _ => Err(err(format!("`{key}` takes exactly one value"))),
                }
            };
            let num = |rest: &[&str]| -> Result<f64> {
                single(rest)?
                    .parse::<f64>()
                    .map_err(|e| err(format!("`{key}`: {e}")))
            };
            match key {
                "node_count" => {
                    s.node_count = single(&rest)?
                        .parse()
                        .map_err(|e| err(format!("`node_count`: {e}")))?
                }
                "inter_vehicle_distance" => s.inter_vehicle_distance = num(&rest)?,
                "line_length" => s.line_length = num(&rest)?,
                "comm_range" => s.comm_range = num(&rest)?,
                "duty_cycle" => s.duty_cycle = num(&rest)?,
                "on_period_mean" => s.on_period_mean = num(&rest)?,
                "airtime" => s.airtime = num(&rest)?,
                "relay_jitter" => s.relay_jitter = num(&rest)?,
                "duration" => s.duration = num(&rest)?,
                "collisions" | "carrier_sense" => {
                    let v = match single(&rest)?.as_str() {
                        "true" | "on" | "1" => true,
                        "false" | "off" | "0" => false,
                        v => return Err(err(format!("`{key}`: expected true/false, got `{v}`"))),
                    };
                    if key == "collisions" {
                        s.collisions = v;
                    } else {
                        s.carrier_sense = v;
                    }
                }
                "sense_range" => s.sense_range = num(&rest)?,
                "backoff_slot" => s.backoff_slot = num(&rest)?,
                "backoff_window" => {
                    s.backoff_window = single(&rest)?
                        .parse()
                        .map_err(|e| err(format!("`backoff_window`: {e}")))?
                }
                "seed" => {
                    s.seed = single(&rest)?
                        .parse()
                        .map_err(|e| err(format!("`seed`: {e}")))?
                }
                "source" => {
                    let [node, priority, time] = rest[..] else {
                        return Err(err("`source` takes: node priority time".into()));
                    };
                    s.source_schedule.push(SourceEmission {
                        node: NodeId(node.parse().map_err(|e| err(format!("source node: {e}")))?),
                        priority: priority.parse().map_err(err)?,
                        time: time.parse().map_err(|e| err(format!("source time: {e}")))?,
                    });
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("node_count {}\n", self.node_count));
        out.push_str(&format!("inter_vehicle_distance {}\n", self.inter_vehicle_distance));
        out.push_str(&format!("line_length {}\n", self.line_length));
        out.push_str(&format!("comm_range {}\n", self.comm_range));
        out.push_str(&format!("duty_cycle {}\n", self.duty_cycle));
        out.push_str(&format!("on_period_mean {}\n", self.on_period_mean));
        out.push_str(&format!("airtime {}\n", self.airtime));
        out.push_str(&format!("relay_jitter {}\n", self.relay_jitter));
        out.push_str(&format!("collisions {}\n", self.collisions));
        out.push_str(&format!("carrier_sense {}\n", self.carrier_sense));
        out.push_str(&format!("sense_range {}\n", self.sense_range));
        out.push_str(&format!("backoff_slot {}\n", self.backoff_slot));
        out.push_str(&format!("backoff_window {}\n", self.backoff_window));
        out.push_str(&format!("duration {}\n", self.duration));
        out.push_str(&format!("seed {}\n", self.seed));
        for e in &self.source_schedule {
            out.push_str(&format!("source {} {} {}\n", e.node, e.priority, e.time));
        }
        out
    }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then_some((i + 1, content))
    })
}

/// `(DensityClass, Priority) -> Strategy` table consulted by the Plan step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    entries: BTreeMap<(DensityClass, Priority), Strategy>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// A base that applies the same per-priority rows at every density.
    pub fn uniform(rows: &[(Priority, Strategy)]) -> Self {
        let mut kb = KnowledgeBase::new();
        for density in DensityClass::ALL {
            for &(priority, s) in rows {
                kb.insert(density, priority, s);
            }
        }
        kb
    }

    /// A base where every entry is `s`.
    pub fn single(s: Strategy) -> Self {
        Self::uniform(&Priority::ALL.map(|p| (p, s)))
    }

    pub fn insert(&mut self, density: DensityClass, priority: Priority, s: Strategy) {
        self.entries.insert((density, priority), s);
    }

    pub fn lookup(&self, density: DensityClass, priority: Priority) -> Result<Strategy> {
        self.entries
            .get(&(density, priority))
            .copied()
            .ok_or(Error::MissingEntry { density, priority })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when all twelve `(density, priority)` keys are present.
    pub fn is_complete(&self) -> bool {
        self.entries.len() == DensityClass::ALL.len() * Priority::ALL.len()
    }

    /// First missing key in canonical order.
    pub fn first_missing(&self) -> Option<(DensityClass, Priority)> {
        DensityClass::ALL
            .iter()
            .flat_map(|&d| Priority::ALL.iter().map(move |&p| (d, p)))
            .find(|k| !self.entries.contains_key(k))
    }

    /// Entries in canonical order: densest class first, highest priority first.
    pub fn iter(&self) -> impl Iterator<Item = (DensityClass, Priority, Strategy)> + '_ {
        DensityClass::ALL.iter().flat_map(move |&d| {
            Priority::ALL
                .iter()
                .filter_map(move |&p| self.entries.get(&(d, p)).map(|&s| (d, p, s)))
        })
    }

    /// Merges `other` into `self`, overwriting existing keys.
    pub fn extend(&mut self, other: &KnowledgeBase) {
        for (d, p, s) in other.iter() {
            self.insert(d, p, s);
        }
    }

    /// Parses `density priority p nr dr ttl` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<KnowledgeBase> {
        let mut kb = KnowledgeBase::new();
        for (line, content) in content_lines(text) {
            let err = |message: String| Error::Parse { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [density, priority, p, nr, dr, ttl] = fields[..] else {
                return Err(err(format!(
                    "expected `density priority p nr dr ttl`, got {} fields",
                    fields.len()
                )));
            };
            let density: DensityClass = density.parse().map_err(err)?;
            let priority: Priority = priority.parse().map_err(err)?;
            let s = Strategy {
                p: p.parse().map_err(|e| err(format!("p: {e}")))?,
                nr: nr.parse().map_err(|e| err(format!("nr: {e}")))?,
                dr: dr.parse().map_err(|e| err(format!("dr: {e}")))?,
                ttl: ttl.parse().map_err(|e| err(format!("ttl: {e}")))?,
            };
            s.validate()
                .map_err(|e| err(format!("{density} {priority}: {e}")))?;
            if kb.entries.insert((density, priority), s).is_some() {
                return Err(err(format!("duplicate entry for {density} {priority}")));
            }
        }
        Ok(kb)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# density priority p nr dr ttl\n");
        for (d, p, s) in self.iter() {
            out.push_str(&format!("{d} {p} {} {} {} {}\n", s.p, s.nr, s.dr, s.ttl));
        }
        out
    }
}
