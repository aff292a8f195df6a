//! Deterministic discrete-event simulator.
//!
//! Nodes sit on a line and never move. Events pop in `(time, sequence)`
//! order, where the sequence number is assigned at insertion. Each node draws
//! from its own random substream, so traces depend only on the scenario, the
//! behavior and the knowledge base.
//!
//! A node has a single radio: a frame due while the node is still on the air
//! starts as soon as the previous frame ends. Receptions of a frame are
//! resolved when it ends, against every frame that overlapped it.
//!
//! With carrier sensing enabled, a node that hears a frame on the air when
//! its own frame is due waits for the channel to clear and then a random
//! number of backoff slots. Frames started less than a slot ago are not yet
//! heard, so nodes picking the same slot still collide. Backoff slots are
//! drawn from a separate per-node stream so that
//! protocol decisions see the same random numbers either way.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{KnowledgeBase, NodeId, Packet, PacketId, Scenario};
use crate::propagation::{frame_fate, in_range, LinkModel, LinkModelParams, Outcome, Transmission};
use crate::protocols::{self, AdmNodeState, Behavior, ProtocolParams, Reaction, ScheduledTx};
use crate::seeding::{self, TAG_MAC, TAG_NODE};
use crate::trace::{RecordKind, Trace, TraceRecord};

/// Node `i` sits at `i * inter_vehicle_distance`.
pub fn build_line_topology(scenario: &Scenario) -> Vec<f64> {
    (0..scenario.node_count)
        .map(|i| f64::from(i) * scenario.inter_vehicle_distance)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// A source emits the planned packet with this index.
    EmitNew { planned: usize },
    /// First copy of a scheduled transmission.
    TransmitCopy { node: NodeId, packet: Packet },
    /// A later repetition of a scheduled transmission.
    RepetitionDue { node: NodeId, packet: Packet },
    /// The frame with this id has finished; resolve its receptions.
    DeliveryResolution { frame: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub sequence: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // reversed so that BinaryHeap pops the earliest (time, sequence)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue of events keyed by `(time, sequence)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) -> u64 {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Event { time, sequence, kind });
        sequence
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    tx: Transmission,
    packet: Packet,
}

struct Node {
    state: AdmNodeState,
    rng: ChaCha8Rng,
    mac_rng: ChaCha8Rng,
    busy_until: f64,
}

struct Simulation<'a> {
    scenario: &'a Scenario,
    behavior: Behavior,
    kb: &'a KnowledgeBase,
    params: ProtocolParams,
    positions: Vec<f64>,
    link_params: LinkModelParams,
    links: LinkModel,
    nodes: Vec<Node>,
    queue: EventQueue,
    /// Frames that may still overlap a frame awaiting resolution, by start.
    recent: VecDeque<Frame>,
    next_frame: u64,
    trace: Vec<TraceRecord>,
    now: f64,
}

impl<'a> Simulation<'a> {
    fn new(scenario: &'a Scenario, behavior: Behavior, kb: &'a KnowledgeBase) -> Self {
        let link_params = LinkModelParams {
            comm_range: scenario.comm_range,
            duty_cycle: scenario.duty_cycle,
            on_period_mean: scenario.on_period_mean,
        };
        let nodes = (0..scenario.node_count)
            .map(|i| Node {
                state: AdmNodeState::default(),
                rng: seeding::stream(scenario.seed, &[TAG_NODE, u64::from(i)]),
                mac_rng: seeding::stream(scenario.seed, &[TAG_MAC, u64::from(i)]),
                busy_until: 0.0,
            })
            .collect();
        Simulation {
            scenario,
            behavior,
            kb,
            params: ProtocolParams {
                relay_jitter: scenario.relay_jitter,
                // a packet never needs more hops than there are nodes
                simple_ttl: scenario.node_count,
            },
            positions: build_line_topology(scenario),
            link_params,
            links: LinkModel::new(link_params, scenario.seed),
            nodes,
            queue: EventQueue::new(),
            recent: VecDeque::new(),
            next_frame: 0,
            trace: Vec::new(),
            now: 0.0,
        }
    }

    fn record(&mut self, node: NodeId, kind: RecordKind, packet: PacketId, from: Option<NodeId>) {
        self.trace.push(TraceRecord { time: self.now, node, kind, packet, from });
    }

    fn schedule_transmissions(&mut self, node: NodeId, txs: &[ScheduledTx]) {
        for t in txs {
            let kind = if t.repetition == 0 {
                EventKind::TransmitCopy { node, packet: t.packet }
            } else {
                EventKind::RepetitionDue { node, packet: t.packet }
            };
            self.queue.schedule(t.time.max(self.now), kind);
        }
    }

    /// Indices of nodes within range of `node`, excluding it.
    fn neighbours(&self, node: NodeId) -> std::ops::Range<usize> {
        let x = self.positions[node.index()];
        let r = self.link_params.comm_range;
        let lo = self.positions.partition_point(|&p| p < x - r);
        let hi = self.positions.partition_point(|&p| p <= x + r);
        lo..hi
    }

    fn run(mut self) -> Result<Trace> {
        let plan = self.scenario.packet_plan();
        for (i, p) in plan.iter().enumerate() {
            self.queue.schedule(p.time, EventKind::EmitNew { planned: i });
        }
        let mut truncated = false;
        while let Some(t) = self.queue.peek_time() {
            if t > self.scenario.duration {
                truncated = true;
                break;
            }
            let event = self.queue.pop().expect("peeked");
            self.now = event.time;
            match event.kind {
                EventKind::EmitNew { planned } => {
                    let p = plan[planned];
                    let node = p.id.source;
                    let txs = protocols::source_emit(
                        self.behavior,
                        &mut self.nodes[node.index()].state,
                        p.id,
                        p.priority,
                        self.now,
                        self.kb,
                        &self.params,
                    )?;
                    self.schedule_transmissions(node, &txs);
                }
                EventKind::TransmitCopy { node, packet } | EventKind::RepetitionDue { node, packet } => {
                    self.start_frame(node, packet, event.kind);
                }
                EventKind::DeliveryResolution { frame } => self.resolve(frame)?,
            }
        }
        Ok(Trace { records: self.trace, truncated })
    }

    fn start_frame(&mut self, node: NodeId, packet: Packet, kind: EventKind) {
        let busy_until = self.nodes[node.index()].busy_until;
        if self.now < busy_until {
            self.queue.schedule(busy_until, kind);
            return;
        }
        if self.scenario.carrier_sense {
            if let Some(clear) = self.channel_clear_time(node) {
                let slots = self.nodes[node.index()].mac_rng.gen_range(0..self.scenario.backoff_window);
                self.queue.schedule(clear + f64::from(slots) * self.scenario.backoff_slot, kind);
                return;
            }
        }
        let airtime = self.scenario.airtime;
        self.nodes[node.index()].busy_until = self.now + airtime;
        self.nodes[node.index()].state.copy_sent(packet.id);
        let tx = Transmission { seq: self.next_frame, transmitter: node, start: self.now, airtime };
        self.next_frame += 1;
        self.record(node, RecordKind::Send, packet.id, None);
        self.recent.push_back(Frame { tx, packet });
        self.queue.schedule(tx.end(), EventKind::DeliveryResolution { frame: tx.seq });
    }

    /// End of the last audible frame on the air at `node`, if any.
    fn channel_clear_time(&self, node: NodeId) -> Option<f64> {
        let now = self.now;
        let x = self.positions[node.index()];
        let range = self.scenario.sense_range;
        let mut clear: Option<f64> = None;
        for f in &self.recent {
            let t = f.tx;
            // a frame becomes audible one slot after it starts
            if t.start + self.scenario.backoff_slot <= now
                && now < t.end()
                && t.transmitter != node
                && (self.positions[t.transmitter.index()] - x).abs() <= range
            {
                clear = Some(clear.map_or(t.end(), |c: f64| c.max(t.end())));
            }
        }
        clear
    }

    fn resolve(&mut self, frame_id: u64) -> Result<()> {
        let airtime = self.scenario.airtime;
        // frames ending before now - airtime cannot overlap anything still to resolve
        while self.recent.front().is_some_and(|f| f.tx.end() < self.now - airtime) {
            self.recent.pop_front();
        }
        let frame = *self
            .recent
            .iter()
            .find(|f| f.tx.seq == frame_id)
            .expect("frame resolved before being pruned");
        let overlapping: Vec<Transmission> = self
            .recent
            .iter()
            .map(|f| f.tx)
            .filter(|t| t.overlaps(&frame.tx))
            .collect();
        let sender = frame.tx.transmitter;
        for idx in self.neighbours(sender) {
            let rx = NodeId(idx as u32);
            if rx == sender {
                continue;
            }
            let positions = &self.positions;
            let params = &self.link_params;
            let links = &mut self.links;
            let fate = frame_fate(&frame.tx, rx, &overlapping, self.scenario.collisions, |f| {
                in_range(positions[f.transmitter.index()], positions[idx], params)
                    && links.link_usable(f.transmitter, rx, f.start)
            });
            if fate.opens_collision {
                self.record(rx, RecordKind::Collision, frame.packet.id, Some(sender));
            }
            if fate.outcome == Outcome::Received {
                self.deliver(rx, frame.packet, sender)?;
            }
        }
        Ok(())
    }

    fn deliver(&mut self, rx: NodeId, packet: Packet, from: NodeId) -> Result<()> {
        let node = &mut self.nodes[rx.index()];
        let reaction = protocols::on_receive(
            self.behavior,
            &mut node.state,
            &packet,
            from,
            rx,
            self.now,
            self.kb,
            &self.params,
            &mut node.rng,
        )?;
        match reaction {
            Reaction::Duplicate => self.record(rx, RecordKind::DupRecv, packet.id, Some(from)),
            Reaction::DropTtl => {
                self.record(rx, RecordKind::Recv, packet.id, Some(from));
                self.record(rx, RecordKind::DropTtl, packet.id, Some(from));
            }
            Reaction::Declined => self.record(rx, RecordKind::Recv, packet.id, Some(from)),
            Reaction::Relay(txs) => {
                self.record(rx, RecordKind::Recv, packet.id, Some(from));
                self.schedule_transmissions(rx, &txs);
            }
        }
        Ok(())
    }
}

/// Runs `scenario` with every node following `behavior`.
///
/// Stops when the queue empties or the next event lies beyond
/// `scenario.duration`; in the latter case the trace is marked truncated.
/// A knowledge-base miss aborts the run.
pub fn run(scenario: &Scenario, behavior: Behavior, kb: &KnowledgeBase) -> Result<Trace> {
    scenario.validate()?;
    Simulation::new(scenario, behavior, kb).run()
}
