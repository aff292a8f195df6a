//! Node behaviors.
//!
//! ADM runs a Monitor / Analyze / Plan / Execute loop on every received
//! broadcast packet: it records the transmitter in the node's local view,
//! estimates the local density from that view, looks up the strategy for
//! `(density, priority)` in the knowledge base and applies it. Smart-flooding
//! is the same loop with the priority fixed to HL. Simple flooding relays
//! every new packet exactly once.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::Result;
use crate::model::{classify_density, KnowledgeBase, NodeId, Packet, PacketId, Priority, Strategy};

/// Default number of packets remembered by a [`LocalViewTable`].
pub const LOCAL_VIEW_CAPACITY: usize = 64;

/// Per-node history: packet id to the distinct nodes heard transmitting it.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalViewTable {
    capacity: usize,
    entries: VecDeque<(PacketId, Vec<NodeId>)>,
}

impl Default for LocalViewTable {
    fn default() -> Self {
        Self::with_capacity(LOCAL_VIEW_CAPACITY)
    }
}

impl LocalViewTable {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "local view capacity must be positive");
        LocalViewTable { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    /// Adds `transmitter` to the list of `packet`. Idempotent; a new packet
    /// evicts the oldest entry when the table is full.
    pub fn record_transmitter(&mut self, packet: PacketId, transmitter: NodeId) {
        if let Some((_, list)) = self.entries.iter_mut().find(|(id, _)| *id == packet) {
            if !list.contains(&transmitter) {
                list.push(transmitter);
            }
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((packet, vec![transmitter]));
    }

    pub fn transmitters(&self, packet: PacketId) -> Option<&[NodeId]> {
        self.entries
            .iter()
            .find(|(id, _)| *id == packet)
            .map(|(_, list)| list.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PacketId, &[NodeId])> {
        self.entries.iter().map(|(id, l)| (*id, l.as_slice()))
    }

    /// Mean number of distinct transmitters per remembered packet; zero for
    /// an empty table.
    pub fn estimate_density(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let total: usize = self.entries.iter().map(|(_, l)| l.len()).sum();
        total as f64 / self.entries.len() as f64
    }
}

/// Free-function form of [`LocalViewTable::estimate_density`].
pub fn estimate_density(lvt: &LocalViewTable) -> f64 {
    lvt.estimate_density()
}

/// Repetitions of a relayed packet still to be sent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingRepetition {
    pub packet: PacketId,
    pub remaining: u32,
    pub next_due: f64,
    pub dr: f64,
}

/// Knowledge held by one node: its local view, the packets it has already
/// processed and its outstanding repetitions.
#[derive(Debug, Clone, Default)]
pub struct AdmNodeState {
    pub local_view: LocalViewTable,
    pub seen: HashSet<PacketId>,
    pub pending_repetitions: Vec<PendingRepetition>,
}

impl AdmNodeState {
    pub fn new(capacity: usize) -> Self {
        AdmNodeState { local_view: LocalViewTable::with_capacity(capacity), ..Default::default() }
    }

    /// Marks one scheduled copy of `packet` as sent.
    pub fn copy_sent(&mut self, packet: PacketId) {
        if let Some(i) = self.pending_repetitions.iter().position(|r| r.packet == packet) {
            let r = &mut self.pending_repetitions[i];
            if r.remaining <= 1 {
                self.pending_repetitions.swap_remove(i);
            } else {
                r.remaining -= 1;
                r.next_due += r.dr;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behavior {
    Adm,
    SmartFlooding,
    SimpleFlooding,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Adm, Behavior::SmartFlooding, Behavior::SimpleFlooding];

    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Adm => "adm",
            Behavior::SmartFlooding => "smart",
            Behavior::SimpleFlooding => "simple",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "adm" => Ok(Behavior::Adm),
            "smart" => Ok(Behavior::SmartFlooding),
            "simple" => Ok(Behavior::SimpleFlooding),
            other => Err(format!("unknown behavior `{other}` (expected adm, smart or simple)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Relays start after a Uniform(0, relay_jitter) delay.
    pub relay_jitter: f64,
    /// Hop limit of simple flooding, which has no strategy.
    pub simple_ttl: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams { relay_jitter: crate::model::DEFAULT_RELAY_JITTER, simple_ttl: u32::MAX }
    }
}

/// One transmission a node asks the engine to perform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledTx {
    pub time: f64,
    /// The packet as it goes on the air; `last_transmitter` is the sender.
    pub packet: Packet,
    /// 0 for the first copy.
    pub repetition: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reaction {
    /// Already processed; only the local view was updated.
    Duplicate,
    /// First copy with no hops left.
    DropTtl,
    /// First copy, relay draw failed.
    Declined,
    Relay(Vec<ScheduledTx>),
}

fn strategy_for(state: &AdmNodeState, kb: &KnowledgeBase, priority: Priority) -> Result<Strategy> {
    // density from the local view can never be negative
    let density = classify_density(state.local_view.estimate_density())?;
    kb.lookup(density, priority)
}

/// Execute step: one Bernoulli(p) draw per packet; on success `nr` copies at
/// `time + jitter + k * dr`, each carrying `ttl_remaining - 1`.
pub fn decide_and_schedule<R: Rng + ?Sized>(
    s: &Strategy,
    packet: &Packet,
    node: NodeId,
    time: f64,
    relay_jitter: f64,
    rng: &mut R,
) -> Vec<ScheduledTx> {
    debug_assert!(packet.ttl_remaining >= 1);
    if !rng.gen_bool(s.p) {
        return Vec::new();
    }
    let jitter = if relay_jitter > 0.0 { rng.gen_range(0.0..relay_jitter) } else { 0.0 };
    let out = Packet {
        ttl_remaining: packet.ttl_remaining - 1,
        last_transmitter: node,
        ..*packet
    };
    (0..s.nr)
        .map(|k| ScheduledTx { time: time + jitter + f64::from(k) * s.dr, packet: out, repetition: k })
        .collect()
}

fn note_repetitions(state: &mut AdmNodeState, txs: &[ScheduledTx], dr: f64) {
    if let Some(first) = txs.first() {
        state.pending_repetitions.push(PendingRepetition {
            packet: first.packet.id,
            remaining: txs.len() as u32,
            next_due: first.time,
            dr,
        });
    }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_on_receive<R: Rng + ?Sized>(
    state: &mut AdmNodeState,
    packet: &Packet,
    from: NodeId,
    node: NodeId,
    time: f64,
    kb: &KnowledgeBase,
    plan_priority: Priority,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<Reaction> {
    // Monitor
    state.local_view.record_transmitter(packet.id, from);
    if !state.seen.insert(packet.id) {
        return Ok(Reaction::Duplicate);
    }
    if packet.ttl_remaining == 0 {
        return Ok(Reaction::DropTtl);
    }
    // Analyze + Plan
    let s = strategy_for(state, kb, plan_priority)?;
    // Execute
    let txs = decide_and_schedule(&s, packet, node, time, params.relay_jitter, rng);
    if txs.is_empty() {
        return Ok(Reaction::Declined);
    }
    note_repetitions(state, &txs, s.dr);
    Ok(Reaction::Relay(txs))
}

/// ADM reaction to a cleanly received copy of `packet` sent by `from`.
#[allow(clippy::too_many_arguments)]
pub fn mape_k_on_receive<R: Rng + ?Sized>(
    state: &mut AdmNodeState,
    packet: &Packet,
    from: NodeId,
    node: NodeId,
    time: f64,
    kb: &KnowledgeBase,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<Reaction> {
    adaptive_on_receive(state, packet, from, node, time, kb, packet.priority, params, rng)
}

/// Smart-flooding: the ADM loop with the HL row of the knowledge base used
/// for every packet.
#[allow(clippy::too_many_arguments)]
pub fn smart_flooding_on_receive<R: Rng + ?Sized>(
    state: &mut AdmNodeState,
    packet: &Packet,
    from: NodeId,
    node: NodeId,
    time: f64,
    kb: &KnowledgeBase,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<Reaction> {
    adaptive_on_receive(state, packet, from, node, time, kb, Priority::HL, params, rng)
}

/// Simple flooding: relay the first copy once, ignore duplicates.
pub fn simple_flooding_on_receive<R: Rng + ?Sized>(
    state: &mut AdmNodeState,
    packet: &Packet,
    from: NodeId,
    node: NodeId,
    time: f64,
    params: &ProtocolParams,
    rng: &mut R,
) -> Reaction {
    state.local_view.record_transmitter(packet.id, from);
    if !state.seen.insert(packet.id) {
        return Reaction::Duplicate;
    }
    if packet.ttl_remaining == 0 {
        return Reaction::DropTtl;
    }
    let once = Strategy { p: 1.0, nr: 1, dr: 0.0, ttl: packet.ttl_remaining };
    Reaction::Relay(decide_and_schedule(&once, packet, node, time, params.relay_jitter, rng))
}

/// Dispatches a received copy to `behavior`.
#[allow(clippy::too_many_arguments)]
pub fn on_receive<R: Rng + ?Sized>(
    behavior: Behavior,
    state: &mut AdmNodeState,
    packet: &Packet,
    from: NodeId,
    node: NodeId,
    time: f64,
    kb: &KnowledgeBase,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<Reaction> {
    match behavior {
        Behavior::Adm => mape_k_on_receive(state, packet, from, node, time, kb, params, rng),
        Behavior::SmartFlooding => smart_flooding_on_receive(state, packet, from, node, time, kb, params, rng),
        Behavior::SimpleFlooding => Ok(simple_flooding_on_receive(state, packet, from, node, time, params, rng)),
    }
}

/// A source emits a new packet: no relay draw, all `nr` copies of the
/// `(density, priority)` strategy, exactly `dr` apart starting at `time`.
///
/// The source holds the packet with `ttl_remaining = ttl` and, like a relay,
/// puts it on the air with one hop spent, so `ttl` bounds the hop count.
#[allow(clippy::too_many_arguments)]
pub fn source_emit(
    behavior: Behavior,
    state: &mut AdmNodeState,
    id: PacketId,
    priority: Priority,
    time: f64,
    kb: &KnowledgeBase,
    params: &ProtocolParams,
) -> Result<Vec<ScheduledTx>> {
    let s = match behavior {
        Behavior::Adm => strategy_for(state, kb, priority)?,
        Behavior::SmartFlooding => strategy_for(state, kb, Priority::HL)?,
        Behavior::SimpleFlooding => Strategy { p: 1.0, nr: 1, dr: 0.0, ttl: params.simple_ttl },
    };
    state.seen.insert(id);
    let packet = Packet {
        id,
        source: id.source,
        priority,
        ttl_remaining: s.ttl - 1,
        last_transmitter: id.source,
        created_at: time,
    };
    let txs: Vec<ScheduledTx> = (0..s.nr)
        .map(|k| ScheduledTx { time: time + f64::from(k) * s.dr, packet, repetition: k })
        .collect();
    note_repetitions(state, &txs, s.dr);
    Ok(txs)
}
