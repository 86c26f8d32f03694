//! Simulation configuration: a flat TOML key/value document plus the
//! partition resolution between explicit renewables-driven core counts and
//! grid-capacity solves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::packing::PolicyConfig;
use crate::power::PowerParams;

/// Core power constants without the grid capacity, which is resolved
/// per configuration (see [`SimConfig::resolve`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorePowerProfile {
    pub p_act: f64,
    pub p_slp: f64,
    pub p_pin: f64,
    pub u_rt: f64,
    pub f_slope: f64,
    pub f_offset: f64,
}

impl Default for CorePowerProfile {
    fn default() -> Self {
        let p = PowerParams::default();
        CorePowerProfile {
            p_act: p.p_act,
            p_slp: p.p_slp,
            p_pin: p.p_pin,
            u_rt: p.u_rt,
            f_slope: p.f_slope,
            f_offset: p.f_offset,
        }
    }
}

impl CorePowerProfile {
    fn with_grid(&self, p_grid: f64) -> PowerParams {
        PowerParams {
            p_act: self.p_act,
            p_slp: self.p_slp,
            p_pin: self.p_pin,
            u_rt: self.u_rt,
            f_slope: self.f_slope,
            f_offset: self.f_offset,
            p_grid,
        }
    }
}

/// Full simulation configuration. Every field maps to one flat TOML key;
/// ideal points are two-element arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub server_count: u32,
    pub cores_per_server: u32,
    /// Size of the renewables-driven subset (n - r). Exactly one of this and
    /// `p_grid` picks the partition; giving both requires them to agree.
    pub renewables_core_count: Option<u32>,
    /// Dedicated grid capacity per server, watts.
    pub p_grid: Option<f64>,
    #[serde(flatten)]
    pub power: CorePowerProfile,
    #[serde(flatten)]
    pub policy: PolicyConfig,
    /// Interval between supply samples, seconds.
    pub supply_step_s: u64,
    pub seed: u64,
    /// Re-enqueue evicted VMs as fresh arrivals with their remaining
    /// lifetime. Off by default so eviction counts stay comparable.
    pub redeploy_evicted: bool,
    /// Delay between a supply sample and the fleet reacting to it, seconds.
    pub eviction_latency_s: u64,
    /// Simulation horizon. Defaults to the end of the traces.
    pub duration_s: Option<u64>,
    /// Record a full placement/eviction event log in the report.
    pub log_events: bool,
}

impl Default for SimConfig {
    /// Desk-scale defaults: 50 servers of 44 cores with a 4-core
    /// renewables-driven subset, proposed policy, 15-minute supply steps.
    fn default() -> Self {
        SimConfig {
            server_count: 50,
            cores_per_server: 44,
            renewables_core_count: Some(4),
            p_grid: None,
            power: CorePowerProfile::default(),
            policy: PolicyConfig::default(),
            supply_step_s: 900,
            seed: 1,
            redeploy_evicted: false,
            eviction_latency_s: 0,
            duration_s: None,
            log_events: false,
        }
    }
}

/// A validated configuration with the core partition settled.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    /// Regular (always-awake) cores per server.
    pub regular_cores: u32,
    /// Power parameters with the grid capacity filled in.
    pub params: PowerParams,
}

const CONFIG_KEYS: &[&str] = &[
    "server_count",
    "cores_per_server",
    "renewables_core_count",
    "p_grid",
    "p_act",
    "p_slp",
    "p_pin",
    "u_rt",
    "f_slope",
    "f_offset",
    "policy",
    "tau_critical",
    "tau_best_effort",
    "supply_step_s",
    "seed",
    "redeploy_evicted",
    "eviction_latency_s",
    "duration_s",
    "log_events",
];

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        // serde flatten cannot deny unknown fields, so typo-check the keys
        // against the documented schema first
        let table: toml::Table =
            toml::from_str(s).map_err(|e| SimError::validation(format!("config: {e}")))?;
        for key in table.keys() {
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(SimError::validation(format!("unknown config key '{key}'")));
            }
        }
        let cfg: SimConfig = toml::Table::try_into(table)
            .map_err(|e| SimError::validation(format!("config: {e}")))?;
        // configured ideal points must sit inside the unit box; only swept
        // points built programmatically may leave it
        cfg.policy.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SimError::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Validates the configuration and settles the regular/renewables core
    /// partition and grid capacity.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.server_count == 0 {
            return Err(SimError::validation("server_count must be at least 1"));
        }
        if self.cores_per_server == 0 {
            return Err(SimError::validation("cores_per_server must be at least 1"));
        }
        if self.supply_step_s == 0 {
            return Err(SimError::validation("supply_step_s must be positive"));
        }
        self.policy.validate_swept()?;

        let n = self.cores_per_server;
        let (regular, params) = match (self.renewables_core_count, self.p_grid) {
            (Some(green), grid) => {
                if green > n {
                    return Err(SimError::validation(format!(
                        "renewables_core_count {green} exceeds cores_per_server {n}"
                    )));
                }
                let r = n - green;
                // grid capacity meets the draw of r pinned cores with the
                // whole subset asleep
                let eq4 = self
                    .power
                    .with_grid(0.0)
                    .server_power(r, green, n)
                    .expect("partition within bounds");
                let params = self.power.with_grid(grid.unwrap_or(eq4));
                params.validate_for_server(n)?;
                if grid.is_some() {
                    let solved = params.solve_regular_core_count(n)?;
                    if solved != r {
                        return Err(SimError::validation(format!(
                            "p_grid {} implies {} regular cores but renewables_core_count {green} implies {r}",
                            params.p_grid, solved
                        )));
                    }
                }
                (r, params)
            }
            (None, Some(grid)) => {
                let params = self.power.with_grid(grid);
                let r = params.solve_regular_core_count(n)?;
                (r, params)
            }
            (None, None) => {
                return Err(SimError::validation(
                    "set renewables_core_count or p_grid to fix the core partition",
                ))
            }
        };
        Ok(ResolvedConfig {
            regular_cores: regular,
            params,
        })
    }
}
