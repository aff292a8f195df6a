//! Convoy presets, source placement and replicated runs.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::analyzer::{compute_objectives, Analysis};
use crate::error::Result;
use crate::model::{DensityClass, KnowledgeBase, NodeId, Priority, Scenario, SourceEmission};
use crate::protocols::Behavior;
use crate::seeding::{self, replication_seed};
use crate::sim;

pub const CONVOY_LENGTH: f64 = 10_000.0;
pub const PRESET_AIRTIME: f64 = 0.001;
pub const SENSE_RANGE_FACTOR: f64 = 2.0;

/// Named convoy topologies, one per density class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Urban,
    Suburban,
    Highway,
    Rural,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Urban, Preset::Suburban, Preset::Highway, Preset::Rural];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Urban => "urban",
            Preset::Suburban => "suburban",
            Preset::Highway => "highway",
            Preset::Rural => "rural",
        }
    }

    pub fn density(self) -> DensityClass {
        match self {
            Preset::Urban => DensityClass::High,
            Preset::Suburban => DensityClass::Medium,
            Preset::Highway => DensityClass::Low,
            Preset::Rural => DensityClass::VeryLow,
        }
    }

    pub fn for_density(d: DensityClass) -> Preset {
        match d {
            DensityClass::High => Preset::Urban,
            DensityClass::Medium => Preset::Suburban,
            DensityClass::Low => Preset::Highway,
            DensityClass::VeryLow => Preset::Rural,
        }
    }

    pub fn node_count(self) -> u32 {
        match self {
            Preset::Urban => 400,
            Preset::Suburban => 134,
            Preset::Highway => 50,
            Preset::Rural => 10,
        }
    }

    pub fn inter_vehicle_distance(self) -> f64 {
        match self {
            Preset::Urban => 25.0,
            Preset::Suburban => 75.0,
            Preset::Highway => 200.0,
            Preset::Rural => 1000.0,
        }
    }

    /// Neighbours ahead of a vehicle in the reference topology table.
    pub fn neighbours_ahead(self) -> u32 {
        match self {
            Preset::Urban => 26,
            Preset::Suburban => 10,
            Preset::Highway => 5,
            Preset::Rural => 1,
        }
    }

    /// Range reaching exactly `neighbours_ahead` vehicles in each direction.
    pub fn comm_range(self) -> f64 {
        f64::from(self.neighbours_ahead()) * self.inter_vehicle_distance()
    }

    pub fn duty_cycle(self) -> f64 {
        match self {
            Preset::Rural => 0.2,
            _ => 1.0,
        }
    }

    pub fn duration(self) -> f64 {
        match self {
            Preset::Rural => 600.0,
            _ => 60.0,
        }
    }

    /// The preset topology with an empty source schedule. Presets use short
    /// frames and carrier sensing over twice the communication range.
    pub fn scenario(self, seed: u64) -> Scenario {
        Scenario {
            node_count: self.node_count(),
            inter_vehicle_distance: self.inter_vehicle_distance(),
            line_length: CONVOY_LENGTH,
            comm_range: self.comm_range(),
            duty_cycle: self.duty_cycle(),
            airtime: PRESET_AIRTIME,
            carrier_sense: true,
            sense_range: SENSE_RANGE_FACTOR * self.comm_range(),
            duration: self.duration(),
            seed,
            ..Scenario::default()
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "urban" => Ok(Preset::Urban),
            "suburban" => Ok(Preset::Suburban),
            "highway" => Ok(Preset::Highway),
            "rural" => Ok(Preset::Rural),
            other => Err(format!("unknown preset `{other}` (expected urban, suburban, highway or rural)")),
        }
    }
}

/// How priorities are assigned to sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorityMix {
    /// Round-robin HL, ML, LL over the sources.
    Equal,
    Only(Priority),
}

impl PriorityMix {
    pub fn priority_of(self, source_index: usize) -> Priority {
        match self {
            PriorityMix::Equal => Priority::ALL[source_index % 3],
            PriorityMix::Only(p) => p,
        }
    }
}

impl fmt::Display for PriorityMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorityMix::Equal => f.write_str("equal"),
            PriorityMix::Only(p) => write!(f, "{}-only", p.as_str().to_ascii_lowercase()),
        }
    }
}

impl FromStr for PriorityMix {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "equal" => Ok(PriorityMix::Equal),
            "hl-only" => Ok(PriorityMix::Only(Priority::HL)),
            "ml-only" => Ok(PriorityMix::Only(Priority::ML)),
            "ll-only" => Ok(PriorityMix::Only(Priority::LL)),
            other => Err(format!("unknown priority mix `{other}` (expected equal, hl-only, ml-only or ll-only)")),
        }
    }
}

/// `count` sources spread evenly along `node_count` vehicles, each at the
/// centre of its share of the convoy.
pub fn evenly_spaced_sources(node_count: u32, count: u32) -> Vec<NodeId> {
    let n = u64::from(node_count);
    let c = u64::from(count);
    (0..c).map(|i| NodeId(((2 * i + 1) * n / (2 * c)) as u32)).collect()
}

/// Adds one emission per source, all within the first `window` seconds.
/// Start offsets are drawn from `seed`.
pub fn with_sources(mut scenario: Scenario, sources: &[NodeId], mix: PriorityMix, window: f64) -> Scenario {
    let mut rng = seeding::stream(scenario.seed, &[0x7372_6373]);
    for (i, &node) in sources.iter().enumerate() {
        let time = if window > 0.0 { rng.gen_range(0.0..window) } else { 0.0 };
        scenario.source_schedule.push(SourceEmission { node, priority: mix.priority_of(i), time });
    }
    scenario
}

/// A preset with `sources` evenly spaced sources emitting almost together.
pub fn multi_source(preset: Preset, sources: u32, mix: PriorityMix, seed: u64) -> Scenario {
    let base = preset.scenario(seed);
    let window = base.relay_jitter;
    let nodes = evenly_spaced_sources(base.node_count, sources);
    with_sources(base, &nodes, mix, window)
}

/// A preset with one packet emitted at t = 0 by the vehicle at the end of
/// the convoy.
pub fn end_source(preset: Preset, priority: Priority, seed: u64) -> Scenario {
    let mut s = preset.scenario(seed);
    s.source_schedule.push(SourceEmission { node: NodeId(0), priority, time: 0.0 });
    s
}

/// Runs `replications` independent replications in parallel; replication
/// `i` simulates `build(replication_seed(seed, i))`. Results are in
/// replication order.
pub fn run_replications<F>(
    build: F,
    behavior: Behavior,
    kb: &KnowledgeBase,
    replications: u32,
    seed: u64,
) -> Result<Vec<Analysis>>
where
    F: Fn(u64) -> Scenario + Sync,
{
    (0..replications)
        .into_par_iter()
        .map(|i| {
            let scenario = build(replication_seed(seed, u64::from(i)));
            let trace = sim::run(&scenario, behavior, kb)?;
            Ok(compute_objectives(&trace, &scenario))
        })
        .collect()
}
