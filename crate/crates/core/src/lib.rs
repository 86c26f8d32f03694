//! Trace-driven simulator for carbon-aware real-time cloud scheduling.
//!
//! Servers dedicate a subset of CPU cores to renewable supply: the subset
//! wakes and sleeps with the available capacity while the rest keeps a
//! constant real-time profile within the grid power budget. VMs get static
//! core pinnings for their whole lifetime; when supply drops below what the
//! pinned cores need, the server performs a minimum set of criticality-aware
//! evictions. Placement policies rank servers over a Green/Regular core
//! inventory, jointly trading off renewable harvest against eviction risk.
//!
//! Modules:
//! - [`power`]: per-core power states, the grid-capacity solve, harvest.
//! - [`server`]: the per-server execution model and inventory snapshots.
//! - [`packing`]: ideal-point scoring plus best-fit and criticality-aware
//!   baselines.
//! - [`engine`]: deterministic discrete-event simulation and metrics.
//! - [`trace`] / [`synth`]: trace parsing, supply normalization, synthesis.
//! - [`config`] / [`report`]: run configuration and machine-readable output.

pub mod config;
pub mod engine;
pub mod error;
pub mod packing;
pub mod power;
pub mod report;
pub mod server;
pub mod synth;
pub mod trace;

pub use config::{ResolvedConfig, SimConfig};
pub use engine::{integrate_metrics, run, run_with_policy, MetricDeltas};
pub use error::{Result, SimError};
pub use packing::{
    get_distance, get_placement_preferences, get_rnw, get_sq, tau_critical_at_distance, Candidate,
    IdealPoint, PlacementPolicy, PolicyConfig, PolicyKind, ScoredServer,
};
pub use power::PowerParams;
pub use report::{hash_traces, LogEntry, SimReport, TimePoint};
pub use server::{
    Criticality, EvictedVm, EvictionReport, GreenCoreInventory, Server, ServerId, VmId, VmRecord,
    VmRequest,
};
pub use synth::{synth_traces, SolarParams, SynthSpec};
pub use trace::{
    normalize_supply, parse_supply_trace, parse_supply_trace_file, parse_vm_trace,
    parse_vm_trace_file, write_supply_trace, write_vm_trace, SupplyPoint, SupplyTrace, VmTrace,
};
