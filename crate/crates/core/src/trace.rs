//! VM-arrival and renewable-supply trace parsing, validation, and
//! serialization.
//!
//! VM trace CSV: `vm_id,arrival_s,lifetime_s,cores,criticality` with
//! criticality in {critical, best-effort}. Supply trace CSV is either raw
//! (`time_s,value`), normalized on load so the maximum value maps to
//! capacity fraction 1.0, or pre-normalized (`time_s,fraction`).

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::server::{Criticality, VmId, VmRequest};

/// Time-ordered VM arrival rows with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmTrace {
    rows: Vec<VmRequest>,
}

impl VmTrace {
    pub fn new(rows: Vec<VmRequest>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        let mut last_arrival = 0u64;
        for (i, row) in rows.iter().enumerate() {
            row.validate()?;
            if !seen.insert(row.vm_id) {
                return Err(SimError::validation(format!(
                    "duplicate vm_id {} in trace",
                    row.vm_id
                )));
            }
            if row.arrival_time < last_arrival {
                return Err(SimError::validation(format!(
                    "vm trace arrival times decrease at row {} (vm {})",
                    i + 1,
                    row.vm_id
                )));
            }
            last_arrival = row.arrival_time;
        }
        Ok(VmTrace { rows })
    }

    pub fn rows(&self) -> &[VmRequest] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyPoint {
    pub time_s: u64,
    pub fraction: f64,
}

/// Time-ordered renewable capacity fractions in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyTrace {
    points: Vec<SupplyPoint>,
}

impl SupplyTrace {
    pub fn new(points: Vec<SupplyPoint>) -> Result<Self> {
        let mut last = None;
        for p in &points {
            if !p.fraction.is_finite() || !(0.0..=1.0).contains(&p.fraction) {
                return Err(SimError::validation(format!(
                    "supply fraction {} at t={} outside [0, 1]",
                    p.fraction, p.time_s
                )));
            }
            if let Some(prev) = last {
                if p.time_s < prev {
                    return Err(SimError::validation(format!(
                        "supply trace times decrease at t={}",
                        p.time_s
                    )));
                }
            }
            last = Some(p.time_s);
        }
        Ok(SupplyTrace { points })
    }

    pub fn points(&self) -> &[SupplyPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last_time(&self) -> Option<u64> {
        self.points.last().map(|p| p.time_s)
    }

    /// Step-function lookup: the latest fraction at or before `t`, or 0.0
    /// before the first point.
    pub fn fraction_at(&self, t: u64) -> f64 {
        let idx = self.points.partition_point(|p| p.time_s <= t);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].fraction
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VmRow {
    vm_id: u64,
    arrival_s: u64,
    lifetime_s: u64,
    cores: u32,
    criticality: Criticality,
}

/// Parses a VM arrival trace from CSV.
pub fn parse_vm_trace<R: Read>(reader: R) -> Result<VmTrace> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SimError::TraceParse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let expected = ["vm_id", "arrival_s", "lifetime_s", "cores", "criticality"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(SimError::TraceParse {
            line: 1,
            msg: format!(
                "expected header {}, got '{}'",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for result in rdr.deserialize::<VmRow>() {
        match result {
            Ok(row) => rows.push(VmRequest {
                vm_id: VmId(row.vm_id),
                core_count: row.cores,
                criticality: row.criticality,
                arrival_time: row.arrival_s,
                lifetime: row.lifetime_s,
            }),
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(rows.len() as u64 + 2);
                return Err(SimError::TraceParse {
                    line,
                    msg: e.to_string(),
                });
            }
        }
    }
    VmTrace::new(rows)
}

pub fn parse_vm_trace_file(path: &Path) -> Result<VmTrace> {
    let file = std::fs::File::open(path).map_err(|e| {
        SimError::validation(format!("cannot open vm trace {}: {e}", path.display()))
    })?;
    parse_vm_trace(std::io::BufReader::new(file))
}

/// Writes a VM trace in canonical CSV form.
pub fn write_vm_trace<W: Write>(writer: W, trace: &VmTrace) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(["vm_id", "arrival_s", "lifetime_s", "cores", "criticality"])
        .map_err(|e| SimError::validation(format!("csv write: {e}")))?;
    for req in trace.rows() {
        wtr.serialize(VmRow {
            vm_id: req.vm_id.0,
            arrival_s: req.arrival_time,
            lifetime_s: req.lifetime,
            cores: req.core_count,
            criticality: req.criticality,
        })
        .map_err(|e| SimError::validation(format!("csv write: {e}")))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Normalizes a raw supply series by its maximum so the peak maps to
/// capacity fraction 1.0 (enough to wake every renewables-driven core).
pub fn normalize_supply(raw: &[(u64, f64)]) -> Result<SupplyTrace> {
    if raw.is_empty() {
        return Err(SimError::validation("empty supply trace"));
    }
    let mut max = 0.0f64;
    for (t, v) in raw {
        if !v.is_finite() || *v < 0.0 {
            return Err(SimError::validation(format!(
                "supply value {v} at t={t} must be finite and nonnegative"
            )));
        }
        max = max.max(*v);
    }
    if max <= 0.0 {
        return Err(SimError::validation(
            "supply trace is all zero: no renewable capacity",
        ));
    }
    SupplyTrace::new(
        raw.iter()
            .map(|(t, v)| SupplyPoint {
                time_s: *t,
                fraction: v / max,
            })
            .collect(),
    )
}

/// Parses a supply trace from CSV, normalizing raw `value` columns.
pub fn parse_supply_trace<R: Read>(reader: R) -> Result<SupplyTrace> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SimError::TraceParse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let raw = match cols.as_slice() {
        ["time_s", "value"] => true,
        ["time_s", "fraction"] => false,
        other => {
            return Err(SimError::TraceParse {
                line: 1,
                msg: format!(
                    "expected header time_s,value or time_s,fraction, got '{}'",
                    other.join(",")
                ),
            })
        }
    };
    let mut points = Vec::new();
    for (i, result) in rdr.records().enumerate() {
        let line = (i + 2) as u64;
        let record = result.map_err(|e| SimError::TraceParse {
            line,
            msg: e.to_string(),
        })?;
        let parse = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or(SimError::TraceParse {
                line,
                msg: "missing column".into(),
            })
        };
        let t: u64 = parse(0)?.parse().map_err(|e| SimError::TraceParse {
            line,
            msg: format!("time_s: {e}"),
        })?;
        let v: f64 = parse(1)?.parse().map_err(|e| SimError::TraceParse {
            line,
            msg: format!("value: {e}"),
        })?;
        points.push((t, v));
    }
    if raw {
        // monotone-time check happens inside SupplyTrace::new
        normalize_supply(&points)
    } else {
        SupplyTrace::new(
            points
                .into_iter()
                .map(|(time_s, fraction)| SupplyPoint { time_s, fraction })
                .collect(),
        )
    }
}

pub fn parse_supply_trace_file(path: &Path) -> Result<SupplyTrace> {
    let file = std::fs::File::open(path).map_err(|e| {
        SimError::validation(format!("cannot open supply trace {}: {e}", path.display()))
    })?;
    parse_supply_trace(std::io::BufReader::new(file))
}

/// Writes a normalized supply trace in canonical CSV form.
pub fn write_supply_trace<W: Write>(writer: W, trace: &SupplyTrace) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["time_s", "fraction"])
        .map_err(|e| SimError::validation(format!("csv write: {e}")))?;
    for p in trace.points() {
        wtr.write_record([p.time_s.to_string(), p.fraction.to_string()])
            .map_err(|e| SimError::validation(format!("csv write: {e}")))?;
    }
    wtr.flush()?;
    Ok(())
}
