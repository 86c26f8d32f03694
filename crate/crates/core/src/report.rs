//! Simulation report: accumulated metrics, time series, and writers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};
use crate::server::{Criticality, ServerId, VmId, VmRecord};
use crate::trace::{write_supply_trace, write_vm_trace, SupplyTrace, VmTrace};

/// One fleet-aggregate sample, recorded at every supply application plus
/// the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub time_s: u64,
    /// Fleet-wide used green cores.
    pub sum_cg_used: u64,
    /// Fleet-wide pinned cores.
    pub sum_m: u64,
    /// Fleet-wide sleeping cores.
    pub sum_l: u64,
    pub fleet_power_w: f64,
    pub capacity_fraction: f64,
}

/// Entry in the optional event log (`log_events = true`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LogEntry {
    Supply {
        time_s: u64,
        capacity_fraction: f64,
        /// Awake renewables-driven cores per server after the signal.
        target_awake: u32,
    },
    Placed {
        time_s: u64,
        vm_id: VmId,
        server_id: ServerId,
        cores: u32,
        green: u32,
        regular: u32,
    },
    Released {
        time_s: u64,
        vm_id: VmId,
        server_id: ServerId,
        cores: u32,
    },
    Evicted {
        time_s: u64,
        vm_id: VmId,
        server_id: ServerId,
        cores: u32,
        criticality: Criticality,
        nlt: f64,
    },
    PlacementFailed {
        time_s: u64,
        vm_id: VmId,
        cores: u32,
    },
}

/// Accumulated results of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SimReport {
    pub policy: String,
    pub seed: u64,
    /// SHA-256 over the canonical serialized input traces.
    pub trace_hash: String,
    pub total_arrivals: u64,
    /// Integral of fleet-wide used green cores over time.
    pub harvested_green_core_seconds: u64,
    /// Integral of fleet power beyond grid capacity over time.
    pub harvested_energy_joules: f64,
    pub evictions_critical: u64,
    pub evictions_best_effort: u64,
    /// Total evictions over total arrivals, 0 when the trace is empty.
    pub eviction_rate: f64,
    /// Achieved-lifetime fraction of each evicted VM.
    pub nlt_samples: Vec<f64>,
    pub placement_failures: u64,
    /// Evicted VMs re-enqueued as fresh arrivals (redeploy_evicted only).
    pub redeployed: u64,
    pub time_series: Vec<TimePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<LogEntry>,
}

impl SimReport {
    pub fn evictions_total(&self) -> u64 {
        self.evictions_critical + self.evictions_best_effort
    }

    /// Records one eviction: appends the normalized-lifetime sample and
    /// bumps the class counter. Returns the sample.
    pub fn record_eviction(&mut self, record: &VmRecord, now: u64) -> f64 {
        debug_assert!(
            now <= record.request.arrival_time + record.request.lifetime,
            "eviction after the scheduled departure"
        );
        let nlt = record.elapsed_lifetime_fraction(now);
        self.nlt_samples.push(nlt);
        match record.request.criticality {
            Criticality::Critical => self.evictions_critical += 1,
            Criticality::BestEffort => self.evictions_best_effort += 1,
        }
        nlt
    }

    /// The report JSON without the bulky series, which go to CSV.
    pub fn scalar_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        let obj = value.as_object_mut().expect("report is an object");
        obj.remove("time_series");
        obj.remove("events");
        obj.insert(
            "evictions_total".into(),
            serde_json::Value::from(self.evictions_total()),
        );
        value
    }

    /// Writes `report.json` and `timeseries.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.scalar_json())
            .map_err(|e| SimError::validation(format!("report json: {e}")))?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        write_timeseries_csv(&dir.join("timeseries.csv"), &self.time_series)?;
        Ok(())
    }
}

pub fn write_timeseries_csv(path: &Path, series: &[TimePoint]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "time_s,sum_cg_used,sum_m,sum_l,fleet_power_w,capacity_fraction"
    )?;
    for p in series {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.time_s, p.sum_cg_used, p.sum_m, p.sum_l, p.fleet_power_w, p.capacity_fraction
        )?;
    }
    Ok(())
}

/// Hash of the canonical serialized traces, embedded in reports so runs over
/// the same inputs are recognizable.
pub fn hash_traces(vm: &VmTrace, supply: &SupplyTrace) -> String {
    let mut vm_bytes = Vec::new();
    write_vm_trace(&mut vm_bytes, vm).expect("in-memory write");
    let mut supply_bytes = Vec::new();
    write_supply_trace(&mut supply_bytes, supply).expect("in-memory write");
    let mut hasher = Sha256::new();
    hasher.update(&vm_bytes);
    hasher.update([0u8]);
    hasher.update(&supply_bytes);
    hex::encode(hasher.finalize())
}
