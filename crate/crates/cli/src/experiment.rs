//! Replicated simulation cells and their CSV rendering.

use adm_core::analyzer::{aggregate_csv_fields, aggregate_replications, compute_objectives, Aggregated, Analysis};
use adm_core::optimizer::EvaluatedGenome;
use adm_core::scenarios::{evenly_spaced_sources, with_sources, Preset, PriorityMix};
use adm_core::seeding::replication_seed;
use adm_core::trace::Trace;
use adm_core::{sim, Behavior, KnowledgeBase, Priority, Scenario};
use anyhow::{Context, Result};
use rayon::prelude::*;

pub use adm_core::analyzer::AGGREGATE_CSV_HEADER;

/// Where the convoy of a cell comes from.
#[derive(Debug, Clone)]
pub enum Topology {
    Preset(Preset),
    /// A scenario file; its seed is replaced per replication.
    File(Scenario),
}

#[derive(Debug, Clone)]
pub struct CellSpec {
    pub topology: Topology,
    pub behavior: Behavior,
    /// Evenly spaced sources added to the topology. `None` keeps the
    /// scenario file's own schedule.
    pub sources: Option<u32>,
    pub mix: PriorityMix,
    pub replications: u32,
    pub seed: u64,
}

impl CellSpec {
    pub fn scenario(&self, seed: u64) -> Scenario {
        let base = match &self.topology {
            Topology::Preset(p) => p.scenario(seed),
            Topology::File(s) => Scenario { seed, ..s.clone() },
        };
        match self.sources {
            Some(n) => {
                let nodes = evenly_spaced_sources(base.node_count, n);
                let window = base.relay_jitter;
                with_sources(base, &nodes, self.mix, window)
            }
            None => base,
        }
    }
}

/// One aggregate line: a priority class (`None` for all packets).
#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub priority: Option<Priority>,
    pub aggregate: Aggregated,
}

pub fn priority_label(p: Option<Priority>) -> &'static str {
    p.map_or("ALL", Priority::as_str)
}

pub struct CellResult {
    pub analyses: Vec<Analysis>,
    pub traces: Vec<Trace>,
}

impl CellResult {
    /// Per-priority rows for the classes present, then the ALL row.
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        for p in Priority::ALL {
            let vectors: Vec<_> = self.analyses.iter().filter_map(|a| a.aggregate_for(p)).collect();
            if let Some(aggregate) = aggregate_replications(&vectors) {
                rows.push(Row { priority: Some(p), aggregate });
            }
        }
        let all: Vec<_> = self.analyses.iter().map(|a| a.aggregate).collect();
        if let Some(aggregate) = aggregate_replications(&all) {
            rows.push(Row { priority: None, aggregate });
        }
        rows
    }
}

/// Runs the replications of a cell in parallel, in replication order.
pub fn run_cell(spec: &CellSpec, kb: &KnowledgeBase, keep_traces: bool) -> Result<CellResult> {
    let runs: Vec<(Analysis, Option<Trace>)> = (0..spec.replications)
        .into_par_iter()
        .map(|i| {
            let scenario = spec.scenario(replication_seed(spec.seed, u64::from(i)));
            let trace = sim::run(&scenario, spec.behavior, kb).with_context(|| format!("replication {i}"))?;
            if trace.truncated {
                log::warn!("replication {i} hit the scenario duration with events pending");
            }
            let analysis = compute_objectives(&trace, &scenario);
            Ok((analysis, keep_traces.then_some(trace)))
        })
        .collect::<Result<_>>()?;
    let mut analyses = Vec::with_capacity(runs.len());
    let mut traces = Vec::new();
    for (a, t) in runs {
        analyses.push(a);
        traces.extend(t);
    }
    Ok(CellResult { analyses, traces })
}

pub fn aggregate_csv(rows: &[Row]) -> String {
    let mut out = format!("priority,replications,{AGGREGATE_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            priority_label(r.priority),
            r.aggregate.count,
            aggregate_csv_fields(&r.aggregate)
        ));
    }
    out
}

pub const SWEEP_CSV_HEADER: &str = "preset,behavior,priority,sources";

pub fn sweep_line(preset: &str, behavior: Behavior, row: &Row, sources: u32) -> String {
    format!(
        "{preset},{behavior},{},{sources},{}\n",
        priority_label(row.priority),
        aggregate_csv_fields(&row.aggregate)
    )
}

pub const FRONT_CSV_HEADER: &str = "p,nr,dr,ttl,nc,pt,r,fr";

pub fn front_csv(front: &[EvaluatedGenome]) -> String {
    let mut out = format!("{FRONT_CSV_HEADER}\n");
    for e in front {
        let g = e.genome;
        let o = e.objectives;
        let pt = o.pt.map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:.6},{},{:.6},{:.6}\n",
            g.p, g.nr, g.dr, g.ttl, o.nc, pt, o.r, o.fr
        ));
    }
    out
}
