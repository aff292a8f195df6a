//! Link model and collision resolution.
//!
//! Connectivity is a disc of radius `comm_range` on the convoy line. Each
//! directed link in range alternates between usable and unusable periods
//! with exponentially distributed lengths: usable bursts have mean
//! `on_period_mean` and the stationary usable fraction is `duty_cycle`.
//!
//! Frames occupy `[start, start + airtime)`. A receiver gets a frame only if
//! no other audible frame overlaps it and the receiver is not itself
//! transmitting during it (half-duplex, no capture).

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::NodeId;
use crate::seeding::{self, TAG_LINK};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModelParams {
    pub comm_range: f64,
    pub duty_cycle: f64,
    pub on_period_mean: f64,
}

impl LinkModelParams {
    pub fn always_on(comm_range: f64) -> Self {
        LinkModelParams { comm_range, duty_cycle: 1.0, on_period_mean: 1.0 }
    }

    fn off_period_mean(&self) -> f64 {
        self.on_period_mean * (1.0 - self.duty_cycle) / self.duty_cycle
    }
}

/// Boundary inclusive.
pub fn in_range(pos_a: f64, pos_b: f64, params: &LinkModelParams) -> bool {
    (pos_a - pos_b).abs() <= params.comm_range
}

/// On/off history of one directed link, generated forward from time zero.
#[derive(Debug, Clone)]
struct LinkTimeline {
    rng: ChaCha8Rng,
    initially_on: bool,
    /// Times at which the state flips, increasing.
    switches: Vec<f64>,
}

impl LinkTimeline {
    fn new(mut rng: ChaCha8Rng, params: &LinkModelParams) -> Self {
        // Exponential periods are memoryless, so drawing the initial state
        // from the stationary law makes the process stationary from t = 0.
        let initially_on = rng.gen::<f64>() < params.duty_cycle;
        LinkTimeline { rng, initially_on, switches: Vec::new() }
    }

    fn state_at(&mut self, time: f64, params: &LinkModelParams) -> bool {
        let off_mean = params.off_period_mean();
        while self.switches.last().is_none_or(|&t| t <= time) {
            let last = self.switches.last().copied().unwrap_or(0.0);
            let on_now = self.initially_on == self.switches.len().is_multiple_of(2);
            let mean = if on_now { params.on_period_mean } else { off_mean };
            let u: f64 = self.rng.gen();
            self.switches.push(last - mean * (1.0 - u).ln());
        }
        let flips = self.switches.partition_point(|&t| t <= time);
        self.initially_on == (flips % 2 == 0)
    }
}

/// Per-link on/off processes for one run.
///
/// Answers are a pure function of `(seed, link, time)`: each link's timeline
/// is drawn from its own substream, so query order does not matter.
#[derive(Debug, Clone)]
pub struct LinkModel {
    params: LinkModelParams,
    seed: u64,
    links: HashMap<(NodeId, NodeId), LinkTimeline>,
}

impl LinkModel {
    pub fn new(params: LinkModelParams, seed: u64) -> Self {
        LinkModel { params, seed, links: HashMap::new() }
    }

    pub fn params(&self) -> &LinkModelParams {
        &self.params
    }

    /// Whether the directed link `from -> to` is usable at `time`. The caller
    /// checks range separately.
    pub fn link_usable(&mut self, from: NodeId, to: NodeId, time: f64) -> bool {
        if self.params.duty_cycle >= 1.0 {
            return true;
        }
        let params = self.params;
        let seed = self.seed;
        self.links
            .entry((from, to))
            .or_insert_with(|| {
                let rng = seeding::stream(seed, &[TAG_LINK, u64::from(from.0), u64::from(to.0)]);
                LinkTimeline::new(rng, &params)
            })
            .state_at(time, &params)
    }
}

/// A frame on the air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    /// Insertion order; breaks ties between equal start times.
    pub seq: u64,
    pub transmitter: NodeId,
    pub start: f64,
    pub airtime: f64,
}

impl Transmission {
    pub fn end(&self) -> f64 {
        self.start + self.airtime
    }

    /// Half-open interval overlap.
    pub fn overlaps(&self, other: &Transmission) -> bool {
        self.start < other.end() && other.start < self.end()
    }

    fn starts_before(&self, other: &Transmission) -> bool {
        (self.start, self.seq) < (other.start, other.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Clean reception.
    Received,
    /// Destroyed by at least one overlapping audible frame.
    Collided,
    /// Not audible, or the receiver was transmitting.
    Nothing,
}

/// What happens to frame `tx` at `receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameFate {
    pub outcome: Outcome,
    /// True when this frame opens a collision group at the receiver; exactly
    /// one frame per overlap group of two or more audible frames sets it.
    pub opens_collision: bool,
}

/// Fate of `tx` at `receiver`, given the frames overlapping `tx` in time.
///
/// `audible(frame)` must say whether `frame` reaches `receiver` (range and
/// link state). `overlapping` may include `tx` itself and frames sent by
/// `receiver`.
pub fn frame_fate<F>(
    tx: &Transmission,
    receiver: NodeId,
    overlapping: &[Transmission],
    collisions: bool,
    mut audible: F,
) -> FrameFate
where
    F: FnMut(&Transmission) -> bool,
{
    let nothing = FrameFate { outcome: Outcome::Nothing, opens_collision: false };
    if tx.transmitter == receiver || !audible(tx) {
        return nothing;
    }
    let mut blocked = false;
    let mut interfered = false;
    let mut earlier_interferer = false;
    for other in overlapping {
        if other.seq == tx.seq || !other.overlaps(tx) {
            continue;
        }
        if other.transmitter == receiver {
            blocked = true;
        } else if collisions && audible(other) {
            interfered = true;
            earlier_interferer |= other.starts_before(tx);
        }
    }
    let opens_collision = interfered && !earlier_interferer;
    let outcome = if blocked {
        Outcome::Nothing
    } else if interfered {
        Outcome::Collided
    } else {
        Outcome::Received
    };
    FrameFate { outcome, opens_collision }
}

/// Per-receiver result of [`resolve_receptions`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReceiverReport {
    /// Transmitters whose frames were received cleanly, in frame order.
    pub received_from: Vec<NodeId>,
    /// Frames destroyed at this receiver.
    pub collided_frames: usize,
    /// Collision events: one per overlap group of two or more audible frames.
    pub collisions: usize,
}

/// Resolves a batch of frames against a set of receivers.
///
/// `positions[i]` is the position of node `i`. Link state is sampled at each
/// frame's start.
pub fn resolve_receptions(
    transmissions: &[Transmission],
    receivers: &[NodeId],
    positions: &[f64],
    links: &mut LinkModel,
) -> Vec<(NodeId, ReceiverReport)> {
    let params = *links.params();
    let mut frames: Vec<Transmission> = transmissions.to_vec();
    frames.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.seq.cmp(&b.seq)));
    receivers
        .iter()
        .map(|&rx| {
            let mut report = ReceiverReport::default();
            for tx in &frames {
                let fate = frame_fate(tx, rx, &frames, true, |f| {
                    f.transmitter != rx
                        && in_range(positions[f.transmitter.index()], positions[rx.index()], &params)
                        && links.link_usable(f.transmitter, rx, f.start)
                });
                match fate.outcome {
                    Outcome::Received => report.received_from.push(tx.transmitter),
                    Outcome::Collided => report.collided_frames += 1,
                    Outcome::Nothing => {}
                }
                report.collisions += usize::from(fate.opens_collision);
            }
            (rx, report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(seq: u64, node: u32, start: f64) -> Transmission {
        Transmission { seq, transmitter: NodeId(node), start, airtime: 0.004 }
    }

    #[test]
    fn range_examples() {
        let p = LinkModelParams::always_on(500.0);
        assert!(in_range(0.0, 300.0, &p));
        assert!(!in_range(0.0, 501.0, &p));
        assert!(in_range(0.0, 500.0, &p));
        assert!(in_range(500.0, 0.0, &p));
    }

    #[test]
    fn full_duty_cycle_is_always_on() {
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 1);
        for i in 0..1000 {
            assert!(links.link_usable(NodeId(0), NodeId(1), i as f64 * 0.37));
        }
    }

    #[test]
    fn repeated_query_is_deterministic() {
        let params = LinkModelParams { comm_range: 500.0, duty_cycle: 0.2, on_period_mean: 1.0 };
        let mut a = LinkModel::new(params, 42);
        let mut b = LinkModel::new(params, 42);
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.9).collect();
        let forward: Vec<bool> = times.iter().map(|&t| a.link_usable(NodeId(3), NodeId(4), t)).collect();
        let backward: Vec<bool> =
            times.iter().rev().map(|&t| b.link_usable(NodeId(3), NodeId(4), t)).collect();
        let backward: Vec<bool> = backward.into_iter().rev().collect();
        assert_eq!(forward, backward);
        assert_eq!(a.link_usable(NodeId(3), NodeId(4), 17.0), a.link_usable(NodeId(3), NodeId(4), 17.0));
    }

    #[test]
    fn single_transmitter_is_received() {
        let positions = [0.0, 100.0, 200.0];
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 0);
        let out = resolve_receptions(&[tx(0, 0, 0.0)], &[NodeId(1), NodeId(2)], &positions, &mut links);
        for (_, r) in out {
            assert_eq!(r.received_from, vec![NodeId(0)]);
            assert_eq!(r.collisions, 0);
        }
    }

    #[test]
    fn overlapping_transmitters_collide_once() {
        let positions = [0.0, 100.0, 200.0];
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 0);
        let frames = [tx(0, 0, 0.0), tx(1, 2, 0.001)];
        let out = resolve_receptions(&frames, &[NodeId(1)], &positions, &mut links);
        let r = &out[0].1;
        assert!(r.received_from.is_empty());
        assert_eq!(r.collided_frames, 2);
        assert_eq!(r.collisions, 1);
    }

    #[test]
    fn back_to_back_frames_do_not_overlap() {
        let positions = [0.0, 100.0, 200.0];
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 0);
        let frames = [tx(0, 0, 0.0), tx(1, 2, 0.004)];
        let out = resolve_receptions(&frames, &[NodeId(1)], &positions, &mut links);
        assert_eq!(out[0].1.received_from, vec![NodeId(0), NodeId(2)]);
    }

    #[test]
    fn transmitting_node_cannot_receive() {
        let positions = [0.0, 100.0];
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 0);
        let frames = [tx(0, 0, 0.0), tx(1, 1, 0.002)];
        let out = resolve_receptions(&frames, &[NodeId(0), NodeId(1)], &positions, &mut links);
        for (_, r) in out {
            assert!(r.received_from.is_empty());
            assert_eq!(r.collisions, 0);
        }
    }

    #[test]
    fn out_of_range_interferer_is_harmless() {
        let positions = [0.0, 400.0, 1000.0];
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 0);
        let frames = [tx(0, 0, 0.0), tx(1, 2, 0.001)];
        let out = resolve_receptions(&frames, &[NodeId(1)], &positions, &mut links);
        // node 2 is 600 m from node 1
        assert_eq!(out[0].1.received_from, vec![NodeId(0)]);
    }

    #[test]
    fn chain_of_overlaps_is_one_group() {
        let positions = [0.0, 50.0, 100.0, 150.0];
        let mut links = LinkModel::new(LinkModelParams::always_on(500.0), 0);
        // a overlaps b, b overlaps c, a and c are disjoint
        let frames = [tx(0, 0, 0.0), tx(1, 2, 0.003), tx(2, 3, 0.006)];
        let out = resolve_receptions(&frames, &[NodeId(1)], &positions, &mut links);
        assert_eq!(out[0].1.collisions, 1);
        assert_eq!(out[0].1.collided_frames, 3);
    }
}
