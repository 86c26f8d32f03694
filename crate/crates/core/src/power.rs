//! Analytic server power model over per-core power states.
//!
//! Server power is estimated as a linear map `f` applied to the summed
//! per-core CPU power, where each core is in one of three states: pinned to
//! a VM (`p_pin`), awake but idle (`p_act`), or in deep sleep (`p_slp`).
//! Renewable harvesting is the positive part of server power beyond the
//! dedicated grid capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Calibrated per-core power constants and the linear CPU-to-server map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    /// Power of an awake idle core, watts.
    pub p_act: f64,
    /// Power of a deep-sleep core, watts.
    pub p_slp: f64,
    /// Power of a pinned core at the representative utilization, watts.
    pub p_pin: f64,
    /// Representative utilization estimate behind `p_pin`, in [0, 1].
    /// Kept for calibration bookkeeping; not used in the arithmetic.
    pub u_rt: f64,
    /// Slope of the linear CPU-to-server power map.
    pub f_slope: f64,
    /// Offset of the linear CPU-to-server power map, watts.
    pub f_offset: f64,
    /// Dedicated grid power capacity per server, watts.
    pub p_grid: f64,
}

impl Default for PowerParams {
    /// Default profile: a 12-core package draws 75.79 W fully pinned and
    /// 58.99 W with six cores pinned and six asleep. Grid capacity sized so
    /// a 44-core server carries a 40-core regular partition.
    fn default() -> Self {
        let mut p = PowerParams {
            p_act: 2.8,
            p_slp: 0.3,
            p_pin: 3.1,
            u_rt: 1.0,
            f_slope: 1.0,
            f_offset: 38.59,
            p_grid: 0.0,
        };
        p.p_grid = p.cpu_to_server(40.0 * p.p_pin + 4.0 * p.p_slp);
        p
    }
}

impl PowerParams {
    /// The linear CPU-to-server map `f(x) = f_slope * x + f_offset`.
    pub fn cpu_to_server(&self, cpu_watts: f64) -> f64 {
        self.f_slope * cpu_watts + self.f_offset
    }

    /// Identity `f` plus explicit core constants, handy for tests and
    /// hand-evaluated scenarios.
    pub fn with_identity_map(p_act: f64, p_slp: f64, p_pin: f64, p_grid: f64) -> Self {
        PowerParams {
            p_act,
            p_slp,
            p_pin,
            u_rt: 1.0,
            f_slope: 1.0,
            f_offset: 0.0,
            p_grid,
        }
    }

    /// Checks the internal parameter constraints.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p_act,
            self.p_slp,
            self.p_pin,
            self.u_rt,
            self.f_slope,
            self.f_offset,
            self.p_grid,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SimError::validation("power parameters must be finite"));
        }
        if self.p_slp < 0.0 {
            return Err(SimError::validation("p_slp must be nonnegative"));
        }
        if !(self.p_slp <= self.p_act && self.p_act <= self.p_pin) {
            return Err(SimError::validation(
                "core powers must satisfy p_slp <= p_act <= p_pin",
            ));
        }
        if self.f_slope <= 0.0 {
            return Err(SimError::validation("f_slope must be positive"));
        }
        if !(0.0..=1.0).contains(&self.u_rt) {
            return Err(SimError::validation("u_rt must be in [0, 1]"));
        }
        Ok(())
    }

    /// Validates the parameters against a concrete server size: the grid
    /// capacity must cover a fully slept server.
    pub fn validate_for_server(&self, total_cores: u32) -> Result<()> {
        self.validate()?;
        let floor = self.cpu_to_server(f64::from(total_cores) * self.p_slp);
        if floor > self.p_grid {
            return Err(SimError::validation(format!(
                "p_grid {} W below the all-asleep server floor {} W",
                self.p_grid, floor
            )));
        }
        Ok(())
    }

    /// Server power for `pinned` pinned cores, `sleeping` deep-sleep cores,
    /// and the remaining `total - pinned - sleeping` awake idle cores.
    pub fn server_power(&self, pinned: u32, sleeping: u32, total: u32) -> Result<f64> {
        if u64::from(pinned) + u64::from(sleeping) > u64::from(total) {
            return Err(SimError::CoreAccounting(format!(
                "pinned {pinned} + sleeping {sleeping} exceeds total {total}"
            )));
        }
        let idle = total - pinned - sleeping;
        let cpu = f64::from(pinned) * self.p_pin
            + f64::from(sleeping) * self.p_slp
            + f64::from(idle) * self.p_act;
        Ok(self.cpu_to_server(cpu))
    }

    /// Largest regular core count R in [0, total] such that R pinned cores
    /// plus a fully slept remainder stays within the grid capacity. Exact
    /// equality is permitted.
    pub fn solve_regular_core_count(&self, total: u32) -> Result<u32> {
        self.validate_for_server(total)?;
        for r in (0..=total).rev() {
            let draw = self.server_power(r, total - r, total)?;
            if draw <= self.p_grid {
                return Ok(r);
            }
        }
        // validate_for_server guarantees R = 0 is feasible
        unreachable!("R = 0 must satisfy the grid capacity")
    }

    /// Power drawn by awake-but-unpinned renewables-driven cores:
    /// `(p_act - p_slp) * ((total - regular) - sleeping)`.
    pub fn leakage_power(&self, sleeping: u32, total: u32, regular: u32) -> Result<f64> {
        let subset = total.checked_sub(regular).ok_or_else(|| {
            SimError::CoreAccounting(format!("regular {regular} exceeds total {total}"))
        })?;
        if sleeping > subset {
            return Err(SimError::CoreAccounting(format!(
                "sleeping {sleeping} exceeds renewables-driven subset {subset}"
            )));
        }
        Ok((self.p_act - self.p_slp) * f64::from(subset - sleeping))
    }

    /// Instantaneous renewable draw: the positive part of server power
    /// beyond the grid capacity. `regular` bounds the sleepable subset.
    pub fn instantaneous_harvest_power(
        &self,
        pinned: u32,
        sleeping: u32,
        total: u32,
        regular: u32,
    ) -> Result<f64> {
        if regular > total || sleeping > total - regular {
            return Err(SimError::CoreAccounting(format!(
                "sleeping {sleeping} beyond subset of {} renewables-driven cores",
                total.saturating_sub(regular)
            )));
        }
        let draw = self.server_power(pinned, sleeping, total)?;
        Ok((draw - self.p_grid).max(0.0))
    }
}
