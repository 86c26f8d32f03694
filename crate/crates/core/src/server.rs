//! Per-server state machine: fixed core partition, supply-driven wake/sleep
//! of the renewables-driven subset, static VM pinning, and criticality-aware
//! eviction selection.
//!
//! Cores are fungible within their class, so the server tracks counts rather
//! than core identifiers. A VM's pin split is fixed at placement and never
//! changes for the VM's lifetime.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VmId(pub u64);

impl fmt::Display for VmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServerId(pub u32);

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// VM criticality label supplied at arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criticality {
    Critical,
    BestEffort,
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criticality::Critical => write!(f, "critical"),
            Criticality::BestEffort => write!(f, "best-effort"),
        }
    }
}

/// One VM-arrival trace row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmRequest {
    pub vm_id: VmId,
    pub core_count: u32,
    pub criticality: Criticality,
    /// Arrival time, seconds from simulation start.
    pub arrival_time: u64,
    /// Intended duration from the trace, seconds.
    pub lifetime: u64,
}

impl VmRequest {
    pub fn validate(&self) -> Result<()> {
        if self.core_count == 0 {
            return Err(SimError::validation(format!(
                "vm {}: core_count must be at least 1",
                self.vm_id
            )));
        }
        if self.lifetime == 0 {
            return Err(SimError::validation(format!(
                "vm {}: lifetime must be positive",
                self.vm_id
            )));
        }
        Ok(())
    }
}

/// Live placement record. The pin split is immutable after placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VmRecord {
    pub request: VmRequest,
    pub server_id: ServerId,
    pub pinned_green_cores: u32,
    pub pinned_regular_cores: u32,
    pub placed_at: u64,
}

impl VmRecord {
    /// Fraction of the intended lifetime achieved by `now`, clamped to [0, 1].
    pub fn elapsed_lifetime_fraction(&self, now: u64) -> f64 {
        let elapsed = now.saturating_sub(self.request.arrival_time) as f64;
        (elapsed / self.request.lifetime as f64).clamp(0.0, 1.0)
    }
}

/// Green/Regular core inventory snapshot.
///
/// Green cores quantify renewable-capacity usage: `c_g_active` awake
/// renewables-driven cores, `c_g_used = max(0, m - r)` pinned beyond the
/// regular partition. Regular cores quantify eviction-risk-free usage:
/// `c_r_active = r`, `c_r_used = min(m, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreenCoreInventory {
    pub c_g_active: u32,
    pub c_g_used: u32,
    pub c_r_active: u32,
    pub c_r_used: u32,
}

impl GreenCoreInventory {
    /// Awake cores not pinned to any VM.
    pub fn free_awake(&self) -> u32 {
        (self.c_r_active - self.c_r_used) + (self.c_g_active - self.c_g_used)
    }
}

/// One evicted VM inside an [`EvictionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvictedVm {
    pub vm_id: VmId,
    pub criticality: Criticality,
    pub elapsed_lifetime_fraction: f64,
    /// Full placement record at eviction time, for redeploy bookkeeping.
    pub record: VmRecord,
}

/// Outcome of a supply signal application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvictionReport {
    pub evicted: Vec<EvictedVm>,
    /// Total cores released by the evictions (green and regular).
    pub cores_freed: u32,
    pub trigger_time: u64,
}

/// A homogeneous server with `total_cores` cores, `regular_cores` of which
/// keep a constant real-time profile. The remaining subset wakes and sleeps
/// with the renewable supply signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Server {
    id: ServerId,
    total_cores: u32,
    regular_cores: u32,
    /// Renewables-driven cores currently in the real-time profile.
    awake_green: u32,
    pinned_green_total: u32,
    pinned_regular_total: u32,
    records: BTreeMap<VmId, VmRecord>,
}

impl Server {
    /// New empty server. The renewables-driven subset starts asleep; the
    /// first supply signal sets it.
    pub fn new(id: ServerId, total_cores: u32, regular_cores: u32) -> Result<Self> {
        if regular_cores > total_cores {
            return Err(SimError::validation(format!(
                "server {id}: regular cores {regular_cores} exceed total {total_cores}"
            )));
        }
        if total_cores == 0 {
            return Err(SimError::validation(format!(
                "server {id}: must have at least one core"
            )));
        }
        Ok(Server {
            id,
            total_cores,
            regular_cores,
            awake_green: 0,
            pinned_green_total: 0,
            pinned_regular_total: 0,
            records: BTreeMap::new(),
        })
    }

    pub fn id(&self) -> ServerId {
        self.id
    }

    pub fn total_cores(&self) -> u32 {
        self.total_cores
    }

    pub fn regular_cores(&self) -> u32 {
        self.regular_cores
    }

    pub fn awake_green(&self) -> u32 {
        self.awake_green
    }

    /// l(t): renewables-driven cores currently asleep.
    pub fn sleeping_cores(&self) -> u32 {
        (self.total_cores - self.regular_cores) - self.awake_green
    }

    /// m(t): total pinned cores.
    pub fn pinned_total(&self) -> u32 {
        self.pinned_green_total + self.pinned_regular_total
    }

    pub fn pinned_green_total(&self) -> u32 {
        self.pinned_green_total
    }

    pub fn pinned_regular_total(&self) -> u32 {
        self.pinned_regular_total
    }

    /// Awake cores available for new pinnings.
    pub fn free_awake_cores(&self) -> u32 {
        (self.regular_cores + self.awake_green) - self.pinned_total()
    }

    pub fn vm_records(&self) -> impl Iterator<Item = &VmRecord> {
        self.records.values()
    }

    pub fn record(&self, vm_id: VmId) -> Option<&VmRecord> {
        self.records.get(&vm_id)
    }

    pub fn vm_count(&self) -> usize {
        self.records.len()
    }

    /// Green/Regular inventory snapshot derived from the current state.
    pub fn inventory(&self) -> GreenCoreInventory {
        let m = self.pinned_total();
        let r = self.regular_cores;
        let c_g_used = m.saturating_sub(r);
        debug_assert!(c_g_used <= self.awake_green);
        GreenCoreInventory {
            c_g_active: self.awake_green,
            c_g_used,
            c_r_active: r,
            c_r_used: m.min(r),
        }
    }

    /// Pins a VM, filling free regular cores first and then free awake
    /// renewables-driven cores. The split never changes afterwards.
    pub fn place_vm(&mut self, req: &VmRequest, now: u64) -> Result<VmRecord> {
        req.validate()?;
        if self.records.contains_key(&req.vm_id) {
            return Err(SimError::validation(format!(
                "vm {} already placed on server {}",
                req.vm_id, self.id
            )));
        }
        let free = self.free_awake_cores();
        if free < req.core_count {
            return Err(SimError::Capacity {
                server: self.id.0,
                requested: req.core_count,
                free,
            });
        }
        let free_regular = self.regular_cores - self.pinned_regular_total;
        let regular = free_regular.min(req.core_count);
        let green = req.core_count - regular;
        let record = VmRecord {
            request: req.clone(),
            server_id: self.id,
            pinned_green_cores: green,
            pinned_regular_cores: regular,
            placed_at: now,
        };
        self.pinned_regular_total += regular;
        self.pinned_green_total += green;
        self.records.insert(req.vm_id, record.clone());
        Ok(record)
    }

    /// Removes a VM and returns the number of cores freed. Power profiles do
    /// not change here; only the supply signal drives them.
    pub fn release_vm(&mut self, vm_id: VmId, _now: u64) -> Result<u32> {
        let record = self
            .records
            .remove(&vm_id)
            .ok_or(SimError::UnknownVm(vm_id))?;
        self.pinned_green_total -= record.pinned_green_cores;
        self.pinned_regular_total -= record.pinned_regular_cores;
        Ok(record.request.core_count)
    }

    /// Selects the minimum set of VMs whose green pins cover
    /// `green_pin_excess`, evicting best-effort VMs first and critical VMs
    /// only when no best-effort-only set suffices. Within a class, VMs with
    /// more green pins go first; ties break on the smaller VM id.
    pub fn select_evictions(&self, green_pin_excess: u32) -> Vec<VmId> {
        if green_pin_excess == 0 {
            return Vec::new();
        }
        let mut best_effort: Vec<(&VmId, u32)> = Vec::new();
        let mut critical: Vec<(&VmId, u32)> = Vec::new();
        for (id, rec) in &self.records {
            if rec.pinned_green_cores == 0 {
                continue;
            }
            match rec.request.criticality {
                Criticality::BestEffort => best_effort.push((id, rec.pinned_green_cores)),
                Criticality::Critical => critical.push((id, rec.pinned_green_cores)),
            }
        }
        let by_green_desc = |a: &(&VmId, u32), b: &(&VmId, u32)| b.1.cmp(&a.1).then(a.0.cmp(b.0));
        best_effort.sort_by(by_green_desc);
        critical.sort_by(by_green_desc);

        let be_total: u32 = best_effort.iter().map(|(_, g)| g).sum();
        let mut picked = Vec::new();
        let mut covered = 0u32;
        if be_total < green_pin_excess {
            // Not coverable by best-effort VMs alone. Take the fewest
            // criticals (largest green pins first) that close the gap.
            for (id, green) in &critical {
                picked.push(**id);
                covered += green;
                if covered + be_total >= green_pin_excess {
                    break;
                }
            }
        }
        for (id, green) in &best_effort {
            if covered >= green_pin_excess {
                break;
            }
            picked.push(**id);
            covered += green;
        }
        debug_assert!(covered >= green_pin_excess);
        picked
    }

    /// Applies a renewable capacity fraction: the awake renewables-driven
    /// core target is `floor(fraction * subset)`. Raising the target wakes
    /// cores immediately. Lowering it below the pinned green count evicts
    /// first and sleeps cores only after the evictions complete.
    pub fn apply_supply_signal(
        &mut self,
        capacity_fraction: f64,
        now: u64,
    ) -> Result<EvictionReport> {
        if !capacity_fraction.is_finite() || !(0.0..=1.0).contains(&capacity_fraction) {
            return Err(SimError::validation(format!(
                "capacity fraction {capacity_fraction} outside [0, 1]"
            )));
        }
        let subset = self.total_cores - self.regular_cores;
        let target = (capacity_fraction * f64::from(subset)).floor() as u32;
        let mut evicted = Vec::new();
        let mut cores_freed = 0;
        if target < self.pinned_green_total {
            let excess = self.pinned_green_total - target;
            for vm_id in self.select_evictions(excess) {
                let record = self
                    .records
                    .get(&vm_id)
                    .expect("selected vm present")
                    .clone();
                cores_freed += record.request.core_count;
                evicted.push(EvictedVm {
                    vm_id,
                    criticality: record.request.criticality,
                    elapsed_lifetime_fraction: record.elapsed_lifetime_fraction(now),
                    record,
                });
                self.release_vm(vm_id, now)?;
            }
        }
        self.awake_green = target;
        debug_assert!(self.pinned_green_total <= self.awake_green || target >= subset);
        Ok(EvictionReport {
            evicted,
            cores_freed,
            trigger_time: now,
        })
    }
}
