//! Deterministic discrete-event simulation over a server fleet.
//!
//! Events process in nondecreasing time; at equal timestamps supply changes
//! come first, then departures, then arrivals, so capacity is reconciled and
//! freed before new placements. Fleet state is piecewise constant between
//! events and metrics integrate exactly over each interval.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::config::{ResolvedConfig, SimConfig};
use crate::error::{Result, SimError};
use crate::packing::{Candidate, PlacementPolicy};
use crate::power::PowerParams;
use crate::report::{hash_traces, LogEntry, SimReport, TimePoint};
use crate::server::{Server, ServerId, VmId, VmRequest};
use crate::trace::{SupplyTrace, VmTrace};

#[derive(Debug, Clone, PartialEq)]
enum EventKind {
    /// Supply sample taking effect (already shifted by eviction latency).
    Supply {
        fraction: f64,
    },
    Departure {
        vm_id: VmId,
    },
    Arrival {
        req: VmRequest,
        redeploy: bool,
    },
}

impl EventKind {
    fn class(&self) -> u8 {
        match self {
            EventKind::Supply { .. } => 0,
            EventKind::Departure { .. } => 1,
            EventKind::Arrival { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct QueuedEvent {
    time: u64,
    class: u8,
    seq: u64,
    kind: EventKind,
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.class, self.seq).cmp(&(other.time, other.class, other.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct EventQueue {
    heap: BinaryHeap<Reverse<QueuedEvent>>,
    next_seq: u64,
}

impl EventQueue {
    fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }

    fn push(&mut self, time: u64, kind: EventKind) {
        let class = kind.class();
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(QueuedEvent {
            time,
            class,
            seq,
            kind,
        }));
    }

    fn pop(&mut self) -> Option<QueuedEvent> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

/// Metric deltas for one piecewise-constant interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricDeltas {
    pub green_core_seconds: u64,
    pub energy_joules: f64,
}

/// Integrates the harvest metrics over `[prev_s, now_s)` with the fleet
/// state held constant.
pub fn integrate_metrics(
    prev_s: u64,
    now_s: u64,
    fleet: &[Server],
    params: &PowerParams,
) -> Result<MetricDeltas> {
    if now_s < prev_s {
        return Err(SimError::validation(format!(
            "integration interval runs backwards: {now_s} < {prev_s}"
        )));
    }
    let dt = now_s - prev_s;
    let mut green_cores = 0u64;
    let mut power = 0.0f64;
    for server in fleet {
        green_cores += u64::from(server.inventory().c_g_used);
        power += params.instantaneous_harvest_power(
            server.pinned_total(),
            server.sleeping_cores(),
            server.total_cores(),
            server.regular_cores(),
        )?;
    }
    Ok(MetricDeltas {
        green_core_seconds: green_cores * dt,
        energy_joules: power * dt as f64,
    })
}

fn fleet_time_point(
    fleet: &[Server],
    params: &PowerParams,
    time_s: u64,
    capacity_fraction: f64,
) -> Result<TimePoint> {
    let mut sum_cg_used = 0u64;
    let mut sum_m = 0u64;
    let mut sum_l = 0u64;
    let mut fleet_power_w = 0.0f64;
    for server in fleet {
        sum_cg_used += u64::from(server.inventory().c_g_used);
        sum_m += u64::from(server.pinned_total());
        sum_l += u64::from(server.sleeping_cores());
        fleet_power_w += params.server_power(
            server.pinned_total(),
            server.sleeping_cores(),
            server.total_cores(),
        )?;
    }
    Ok(TimePoint {
        time_s,
        sum_cg_used,
        sum_m,
        sum_l,
        fleet_power_w,
        capacity_fraction,
    })
}

/// Runs one simulation with the policy named in the configuration.
pub fn run(cfg: &SimConfig, vm_trace: &VmTrace, supply: &SupplyTrace) -> Result<SimReport> {
    let policy = cfg.policy.build();
    run_with_policy(cfg, vm_trace, supply, policy.as_ref())
}

/// Runs one simulation with an explicit policy object. The policy is
/// consulted only at arrivals; supply handling never sees it.
pub fn run_with_policy(
    cfg: &SimConfig,
    vm_trace: &VmTrace,
    supply: &SupplyTrace,
    policy: &dyn PlacementPolicy,
) -> Result<SimReport> {
    let resolved = cfg.resolve()?;
    let ResolvedConfig {
        regular_cores,
        ref params,
    } = resolved;
    let n = cfg.cores_per_server;

    let horizon = cfg.duration_s.unwrap_or_else(|| {
        let last_departure = vm_trace
            .rows()
            .iter()
            .map(|r| r.arrival_time.saturating_add(r.lifetime))
            .max()
            .unwrap_or(0);
        last_departure.max(supply.last_time().unwrap_or(0))
    });

    let mut fleet: Vec<Server> = (0..cfg.server_count)
        .map(|i| Server::new(ServerId(i), n, regular_cores))
        .collect::<Result<_>>()?;

    let mut queue = EventQueue::new();
    // supply samples at the configured cadence, taking effect after the
    // eviction latency
    let mut tick = 0u64;
    while tick <= horizon {
        queue.push(
            tick + cfg.eviction_latency_s,
            EventKind::Supply {
                fraction: supply.fraction_at(tick),
            },
        );
        tick += cfg.supply_step_s;
    }
    for req in vm_trace.rows() {
        if req.arrival_time > horizon {
            break;
        }
        queue.push(
            req.arrival_time,
            EventKind::Arrival {
                req: req.clone(),
                redeploy: false,
            },
        );
    }

    let mut report = SimReport {
        policy: policy.name().to_string(),
        seed: cfg.seed,
        trace_hash: hash_traces(vm_trace, supply),
        ..SimReport::default()
    };
    let mut placements: HashMap<VmId, u32> = HashMap::new();
    let mut last_t = 0u64;
    let mut current_fraction = 0.0f64;

    while let Some(event) = queue.pop() {
        if event.time > horizon {
            break;
        }
        if event.time > last_t {
            let delta = integrate_metrics(last_t, event.time, &fleet, params)?;
            report.harvested_green_core_seconds += delta.green_core_seconds;
            report.harvested_energy_joules += delta.energy_joules;
            last_t = event.time;
        }
        match event.kind {
            EventKind::Supply { fraction } => {
                current_fraction = fraction;
                for server in fleet.iter_mut() {
                    let server_id = server.id();
                    let outcome = server.apply_supply_signal(fraction, event.time)?;
                    for evicted in outcome.evicted {
                        report.record_eviction(&evicted.record, event.time);
                        placements.remove(&evicted.vm_id);
                        if cfg.log_events {
                            report.events.push(LogEntry::Evicted {
                                time_s: event.time,
                                vm_id: evicted.vm_id,
                                server_id,
                                cores: evicted.record.request.core_count,
                                criticality: evicted.criticality,
                                nlt: evicted.elapsed_lifetime_fraction,
                            });
                        }
                        if cfg.redeploy_evicted {
                            let request = &evicted.record.request;
                            let end = request.arrival_time + request.lifetime;
                            if end > event.time {
                                report.redeployed += 1;
                                queue.push(
                                    event.time,
                                    EventKind::Arrival {
                                        req: VmRequest {
                                            arrival_time: event.time,
                                            lifetime: end - event.time,
                                            ..request.clone()
                                        },
                                        redeploy: true,
                                    },
                                );
                            }
                        }
                    }
                }
                if cfg.log_events {
                    report.events.push(LogEntry::Supply {
                        time_s: event.time,
                        capacity_fraction: fraction,
                        target_awake: fleet.first().map(|s| s.awake_green()).unwrap_or(0),
                    });
                }
                report
                    .time_series
                    .push(fleet_time_point(&fleet, params, event.time, fraction)?);
            }
            EventKind::Departure { vm_id } => {
                // stale departures of evicted or redeployed VMs are skipped
                if let Some(server_idx) = placements.remove(&vm_id) {
                    let cores = fleet[server_idx as usize].release_vm(vm_id, event.time)?;
                    if cfg.log_events {
                        report.events.push(LogEntry::Released {
                            time_s: event.time,
                            vm_id,
                            server_id: ServerId(server_idx),
                            cores,
                        });
                    }
                }
            }
            EventKind::Arrival { req, redeploy } => {
                if !redeploy {
                    report.total_arrivals += 1;
                }
                let candidates: Vec<Candidate> = fleet
                    .iter()
                    .filter(|s| s.free_awake_cores() >= req.core_count)
                    .map(|s| Candidate {
                        server_id: s.id(),
                        inventory: s.inventory(),
                    })
                    .collect();
                let ranked = policy.preferences(&req, &candidates);
                match ranked.first() {
                    Some(top) => {
                        let idx = top.server_id.0 as usize;
                        let record = fleet[idx].place_vm(&req, event.time)?;
                        placements.insert(req.vm_id, top.server_id.0);
                        queue.push(
                            req.arrival_time + req.lifetime,
                            EventKind::Departure { vm_id: req.vm_id },
                        );
                        if cfg.log_events {
                            report.events.push(LogEntry::Placed {
                                time_s: event.time,
                                vm_id: req.vm_id,
                                server_id: top.server_id,
                                cores: req.core_count,
                                green: record.pinned_green_cores,
                                regular: record.pinned_regular_cores,
                            });
                        }
                    }
                    None => {
                        report.placement_failures += 1;
                        if cfg.log_events {
                            report.events.push(LogEntry::PlacementFailed {
                                time_s: event.time,
                                vm_id: req.vm_id,
                                cores: req.core_count,
                            });
                        }
                    }
                }
            }
        }
        debug_assert!(fleet
            .iter()
            .all(|s| s.pinned_green_total() <= s.awake_green()));
    }

    if horizon > last_t {
        let delta = integrate_metrics(last_t, horizon, &fleet, params)?;
        report.harvested_green_core_seconds += delta.green_core_seconds;
        report.harvested_energy_joules += delta.energy_joules;
    }
    if report.time_series.last().map(|p| p.time_s) != Some(horizon) {
        report
            .time_series
            .push(fleet_time_point(&fleet, params, horizon, current_fraction)?);
    }
    report.eviction_rate = if report.total_arrivals == 0 {
        0.0
    } else {
        report.evictions_total() as f64 / report.total_arrivals as f64
    };
    Ok(report)
}
