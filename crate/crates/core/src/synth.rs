//! Synthetic workload and solar-supply generation for desk-scale runs.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::server::{Criticality, VmId, VmRequest};
use crate::trace::{SupplyPoint, SupplyTrace, VmTrace};

/// Diurnal solar shape: `peak_fraction * max(0, sin(...))` with the positive
/// half-wave spanning `sunrise_s .. sunrise_s + day_period_s / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolarParams {
    pub day_period_s: u64,
    pub sunrise_s: u64,
    pub peak_fraction: f64,
}

impl Default for SolarParams {
    fn default() -> Self {
        SolarParams {
            day_period_s: 86_400,
            sunrise_s: 21_600,
            peak_fraction: 1.0,
        }
    }
}

impl SolarParams {
    pub fn fraction_at(&self, t: u64) -> f64 {
        let phase = (t as f64 - self.sunrise_s as f64) / self.day_period_s as f64;
        (self.peak_fraction * (std::f64::consts::TAU * phase).sin()).max(0.0)
    }
}

/// Parameters for [`synth_traces`]. Defaults give the desk-scale workload:
/// 50 servers, 24 hours, roughly 2000 VM arrivals, 30% best-effort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Fleet size the workload is sized for (metadata, recorded in configs).
    pub servers: u32,
    pub duration_s: u64,
    pub arrival_rate_per_s: f64,
    /// Log-normal lifetime: median seconds and sigma of the underlying
    /// normal. Synthetic defaults, not trace-derived values.
    pub lifetime_median_s: f64,
    pub lifetime_sigma: f64,
    /// Discrete core-count distribution (choice, weight) pairs.
    pub core_choices: Vec<u32>,
    pub core_weights: Vec<f64>,
    pub best_effort_share: f64,
    pub supply_step_s: u64,
    #[serde(flatten)]
    pub solar: SolarParams,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            servers: 50,
            duration_s: 86_400,
            arrival_rate_per_s: 2000.0 / 86_400.0,
            lifetime_median_s: 3600.0,
            lifetime_sigma: 1.2,
            core_choices: vec![1, 2, 4, 8],
            core_weights: vec![8.0, 4.0, 2.0, 1.0],
            best_effort_share: 0.3,
            supply_step_s: 900,
            solar: SolarParams::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.duration_s == 0 {
            return Err(SimError::validation("duration_s must be positive"));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.arrival_rate_per_s) {
            return Err(SimError::validation("arrival_rate_per_s must be positive"));
        }
        if !positive(self.lifetime_median_s) || !positive(self.lifetime_sigma) {
            return Err(SimError::validation(
                "lifetime distribution parameters must be positive",
            ));
        }
        if self.core_choices.is_empty() || self.core_choices.len() != self.core_weights.len() {
            return Err(SimError::validation(
                "core_choices and core_weights must be nonempty and the same length",
            ));
        }
        if self.core_choices.contains(&0) {
            return Err(SimError::validation("core choices must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.best_effort_share) {
            return Err(SimError::validation("best_effort_share must be in [0, 1]"));
        }
        if self.supply_step_s == 0 || self.solar.day_period_s == 0 {
            return Err(SimError::validation("time steps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.solar.peak_fraction) {
            return Err(SimError::validation("peak_fraction must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: SynthSpec =
            toml::from_str(s).map_err(|e| SimError::validation(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Generates a Poisson-arrival VM trace and a diurnal solar supply trace.
/// Reproducible for a given (spec, seed) pair.
pub fn synth_traces(spec: &SynthSpec, seed: u64) -> Result<(VmTrace, SupplyTrace)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let gap = Exp::new(spec.arrival_rate_per_s)
        .map_err(|e| SimError::validation(format!("arrival rate: {e}")))?;
    let lifetime = LogNormal::new(spec.lifetime_median_s.ln(), spec.lifetime_sigma)
        .map_err(|e| SimError::validation(format!("lifetime distribution: {e}")))?;
    let cores = WeightedIndex::new(&spec.core_weights)
        .map_err(|e| SimError::validation(format!("core weights: {e}")))?;

    let mut rows = Vec::new();
    let mut t = 0.0f64;
    let mut next_id = 1u64;
    loop {
        t += gap.sample(&mut rng);
        if t >= spec.duration_s as f64 {
            break;
        }
        let life = lifetime.sample(&mut rng).round().max(1.0) as u64;
        let criticality = if rng.random_bool(spec.best_effort_share) {
            Criticality::BestEffort
        } else {
            Criticality::Critical
        };
        rows.push(VmRequest {
            vm_id: VmId(next_id),
            core_count: spec.core_choices[cores.sample(&mut rng)],
            criticality,
            arrival_time: t as u64,
            lifetime: life,
        });
        next_id += 1;
    }

    let mut points = Vec::new();
    let mut tick = 0u64;
    while tick <= spec.duration_s {
        points.push(SupplyPoint {
            time_s: tick,
            fraction: spec.solar.fraction_at(tick),
        });
        tick += spec.supply_step_s;
    }

    Ok((VmTrace::new(rows)?, SupplyTrace::new(points)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_the_traces() {
        let spec = SynthSpec::default();
        let (vm_a, supply_a) = synth_traces(&spec, 42).unwrap();
        let (vm_b, supply_b) = synth_traces(&spec, 42).unwrap();
        assert_eq!(vm_a, vm_b);
        assert_eq!(supply_a, supply_b);
        let (vm_c, _) = synth_traces(&spec, 43).unwrap();
        assert_ne!(vm_a, vm_c);
    }

    #[test]
    fn full_best_effort_share_marks_every_vm() {
        let spec = SynthSpec {
            best_effort_share: 1.0,
            ..SynthSpec::default()
        };
        let (vm, _) = synth_traces(&spec, 7).unwrap();
        assert!(!vm.is_empty());
        assert!(vm
            .rows()
            .iter()
            .all(|r| r.criticality == Criticality::BestEffort));
    }

    #[test]
    fn solar_is_dark_at_night_and_peaks_at_noon() {
        let solar = SolarParams::default();
        assert_eq!(solar.fraction_at(0), 0.0);
        assert_eq!(solar.fraction_at(10_000), 0.0);
        assert!((solar.fraction_at(43_200) - 1.0).abs() < 1e-12);
        assert_eq!(solar.fraction_at(80_000), 0.0);

        let spec = SynthSpec::default();
        let (_, supply) = synth_traces(&spec, 1).unwrap();
        assert_eq!(supply.fraction_at(0), 0.0);
        assert_eq!(supply.fraction_at(3600), 0.0);
        assert!(supply.fraction_at(43_200) > 0.99);
    }

    #[test]
    fn arrival_count_concentrates_near_rate_times_duration() {
        let spec = SynthSpec::default();
        let expected = spec.arrival_rate_per_s * spec.duration_s as f64;
        let sigma = expected.sqrt();
        for seed in 0..5 {
            let (vm, _) = synth_traces(&spec, seed).unwrap();
            let n = vm.len() as f64;
            assert!(
                (n - expected).abs() <= 5.0 * sigma,
                "seed {seed}: {n} arrivals vs expected {expected}"
            );
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let spec = SynthSpec {
            arrival_rate_per_s: 0.0,
            ..SynthSpec::default()
        };
        assert!(synth_traces(&spec, 0).is_err());
        let spec = SynthSpec {
            core_weights: vec![1.0],
            ..SynthSpec::default()
        };
        assert!(synth_traces(&spec, 0).is_err());
        let spec = SynthSpec {
            lifetime_sigma: -1.0,
            ..SynthSpec::default()
        };
        assert!(synth_traces(&spec, 0).is_err());
    }
}
