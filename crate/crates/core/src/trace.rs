//! Simulation trace: the ordered event log every metric is computed from.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{NodeId, PacketId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Send,
    Recv,
    Collision,
    DupRecv,
    DropTtl,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Send => "SEND",
            RecordKind::Recv => "RECV",
            RecordKind::Collision => "COLLISION",
            RecordKind::DupRecv => "DUP_RECV",
            RecordKind::DropTtl => "DROP_TTL",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "SEND" => RecordKind::Send,
            "RECV" => RecordKind::Recv,
            "COLLISION" => RecordKind::Collision,
            "DUP_RECV" => RecordKind::DupRecv,
            "DROP_TTL" => RecordKind::DropTtl,
            other => return Err(format!("unknown record kind `{other}`")),
        })
    }
}

/// One trace line.
///
/// `from` is the transmitter for RECV and DUP_RECV, and the transmitter of
/// the frame that opened the collision group for COLLISION.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub node: NodeId,
    pub kind: RecordKind,
    pub packet: PacketId,
    pub from: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Events were still pending when the scenario duration elapsed.
    pub truncated: bool,
}

pub const CSV_HEADER: &str = "time,node,kind,packet,from";

impl Trace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            write!(w, "{:.6},{},{},{},", r.time, r.node, r.kind, r.packet)?;
            if let Some(from) = r.from {
                write!(w, "{from}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }

    /// Reads a trace written by [`Trace::write_csv`]. Times lose precision
    /// beyond the six written decimals.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Trace> {
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if lineno == 1 {
                if line.trim() != CSV_HEADER {
                    return Err(Error::Parse { line: 1, message: format!("expected header `{CSV_HEADER}`") });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: lineno, message };
            let fields: Vec<&str> = line.split(',').collect();
            let [time, node, kind, packet, from] = fields[..] else {
                return Err(err(format!("expected 5 fields, got {}", fields.len())));
            };
            records.push(TraceRecord {
                time: time.parse().map_err(|e| err(format!("time: {e}")))?,
                node: NodeId(node.parse().map_err(|e| err(format!("node: {e}")))?),
                kind: kind.parse().map_err(err)?,
                packet: packet.parse().map_err(err)?,
                from: if from.is_empty() {
                    None
                } else {
                    Some(NodeId(from.parse().map_err(|e| err(format!("from: {e}")))?))
                },
            });
        }
        Ok(Trace { records, truncated: false })
    }

    pub fn count(&self, kind: RecordKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }
}
