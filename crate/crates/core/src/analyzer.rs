//! Trace analyzer: per-packet metrics and the aggregate objective vector.
//!
//! For each source packet:
//! - `nc`: COLLISION records carrying its id;
//! - `r`: SEND records of its id by nodes other than its source;
//! - delivered: every other node has a RECV record for it;
//! - `pt`: for delivered packets, the last first-reception time minus the
//!   emission time.
//!
//! The aggregate NC and R are per-packet means, FR is the delivered fraction
//! and PT averages over delivered packets only.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::model::{NodeId, ObjectiveVector, PacketId, Priority, Scenario};
use crate::trace::{RecordKind, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketMetrics {
    pub id: PacketId,
    pub priority: Priority,
    pub created_at: f64,
    pub delivered: bool,
    pub pt: Option<f64>,
    pub r: u64,
    pub nc: u64,
    /// SEND records by the source itself.
    pub source_sends: u64,
    /// Distinct nodes other than the source that received the packet.
    pub reached: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub packets: Vec<PacketMetrics>,
    pub aggregate: ObjectiveVector,
    /// The scenario emitted no packet.
    pub no_traffic: bool,
}

fn aggregate_of<'a>(packets: impl Iterator<Item = &'a PacketMetrics>) -> (ObjectiveVector, bool) {
    let (mut n, mut nc, mut r, mut delivered, mut pt_sum) = (0u64, 0u64, 0u64, 0u64, 0.0);
    for p in packets {
        n += 1;
        nc += p.nc;
        r += p.r;
        if let Some(pt) = p.pt {
            delivered += 1;
            pt_sum += pt;
        }
    }
    if n == 0 {
        return (ObjectiveVector::default(), true);
    }
    let n_f = n as f64;
    let v = ObjectiveVector {
        nc: nc as f64 / n_f,
        pt: (delivered > 0).then(|| pt_sum / delivered as f64),
        r: r as f64 / n_f,
        fr: delivered as f64 / n_f,
    };
    (v, false)
}

impl Analysis {
    /// Aggregate restricted to packets of one priority; `None` if there are none.
    pub fn aggregate_for(&self, priority: Priority) -> Option<ObjectiveVector> {
        let (v, empty) = aggregate_of(self.packets.iter().filter(|p| p.priority == priority));
        (!empty).then_some(v)
    }

    /// Per-packet CSV: `packet,delivered,pt,r`. Undefined PT is left empty.
    pub fn write_packet_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "packet,delivered,pt,r")?;
        for p in &self.packets {
            let pt = p.pt.map(|v| format!("{v:.6}")).unwrap_or_default();
            writeln!(w, "{},{},{},{}", p.id, u8::from(p.delivered), pt, p.r)?;
        }
        Ok(())
    }
}

/// Computes all metrics of `trace`, which must come from `scenario`.
pub fn compute_objectives(trace: &Trace, scenario: &Scenario) -> Analysis {
    let plan = scenario.packet_plan();
    let index: HashMap<PacketId, usize> = plan.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    let mut packets: Vec<PacketMetrics> = plan
        .iter()
        .map(|p| PacketMetrics {
            id: p.id,
            priority: p.priority,
            created_at: p.time,
            delivered: false,
            pt: None,
            r: 0,
            nc: 0,
            source_sends: 0,
            reached: 0,
        })
        .collect();
    // first reception time per (packet, node)
    let mut first_recv: Vec<BTreeMap<NodeId, f64>> = vec![BTreeMap::new(); plan.len()];
    for rec in &trace.records {
        let Some(&i) = index.get(&rec.packet) else {
            log::warn!("trace record for unknown packet {}", rec.packet);
            continue;
        };
        let m = &mut packets[i];
        match rec.kind {
            RecordKind::Send if rec.node == m.id.source => m.source_sends += 1,
            RecordKind::Send => m.r += 1,
            RecordKind::Collision => m.nc += 1,
            RecordKind::Recv if rec.node != m.id.source => {
                first_recv[i].entry(rec.node).or_insert(rec.time);
            }
            _ => {}
        }
    }
    let others = scenario.node_count.saturating_sub(1);
    for (m, recv) in packets.iter_mut().zip(&first_recv) {
        m.reached = recv.len() as u32;
        m.delivered = m.reached == others;
        if m.delivered {
            let last = recv.values().copied().fold(m.created_at, f64::max);
            m.pt = Some(last - m.created_at);
        }
    }
    let (aggregate, no_traffic) = aggregate_of(packets.iter());
    Analysis { packets, aggregate, no_traffic }
}

/// Field-wise mean and standard error of a set of objective vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregated {
    pub mean: ObjectiveVector,
    pub stderr: ObjectiveVector,
    pub count: usize,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages replications. PT is averaged over the replications where it is
/// defined. Returns `None` for an empty input.
pub fn aggregate_replications(vectors: &[ObjectiveVector]) -> Option<Aggregated> {
    if vectors.is_empty() {
        return None;
    }
    let col = |f: fn(&ObjectiveVector) -> f64| -> Vec<f64> { vectors.iter().map(f).collect() };
    let (nc, nc_se) = mean_and_stderr(&col(|v| v.nc));
    let (r, r_se) = mean_and_stderr(&col(|v| v.r));
    let (fr, fr_se) = mean_and_stderr(&col(|v| v.fr));
    let pts: Vec<f64> = vectors.iter().filter_map(|v| v.pt).collect();
    let (pt, pt_se) = if pts.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_and_stderr(&pts);
        (Some(m), Some(s))
    };
    Some(Aggregated {
        mean: ObjectiveVector { nc, pt, r, fr },
        stderr: ObjectiveVector { nc: nc_se, pt: pt_se, r: r_se, fr: fr_se },
        count: vectors.len(),
    })
}

pub const AGGREGATE_CSV_HEADER: &str = "nc,pt,r,fr,stderr_nc,stderr_pt,stderr_r,stderr_fr";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// The eight aggregate fields in [`AGGREGATE_CSV_HEADER`] order.
pub fn aggregate_csv_fields(a: &Aggregated) -> String {
    format!(
        "{:.6},{},{:.6},{:.6},{:.6},{},{:.6},{:.6}",
        a.mean.nc,
        opt(a.mean.pt),
        a.mean.r,
        a.mean.fr,
        a.stderr.nc,
        opt(a.stderr.pt),
        a.stderr.r,
        a.stderr.fr
    )
}
