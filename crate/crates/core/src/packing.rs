//! Placement policies over Green Core inventory snapshots.
//!
//! The proposed policy scores each candidate server by its normalized
//! Euclidean distance to a per-criticality ideal point in the
//! `(d_rnw, d_sq)` feature space. `d_rnw` is the unused share of awake
//! renewables-driven capacity (the opportunity to harvest); `d_sq` is the
//! unused share of the regular partition (the opportunity to avoid eviction
//! exposure). Two baselines, best-fit and criticality-aware best-fit, share
//! the same interface.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::server::{Criticality, GreenCoreInventory, ServerId, VmRequest};

/// Reference feature vector for one VM criticality class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct IdealPoint {
    pub d_rnw: f64,
    pub d_sq: f64,
}

impl IdealPoint {
    pub const fn new(d_rnw: f64, d_sq: f64) -> Self {
        IdealPoint { d_rnw, d_sq }
    }

    /// Default critical-VM ideal point: no harvest exposure, half-used
    /// regular partition.
    pub const fn default_critical() -> Self {
        IdealPoint::new(1.0, 0.5)
    }

    /// Default best-effort ideal point: mostly harvested green capacity,
    /// saturated regular partition.
    pub const fn default_best_effort() -> Self {
        IdealPoint::new(0.2, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.d_rnw) || !(0.0..=1.0).contains(&self.d_sq) {
            return Err(SimError::validation(format!(
                "ideal point ({}, {}) outside [0, 1]^2",
                self.d_rnw, self.d_sq
            )));
        }
        Ok(())
    }

    /// Looser bound for swept points, which may leave the unit box by up to
    /// the feature-space diameter.
    pub fn validate_swept(&self) -> Result<()> {
        let lo = -std::f64::consts::SQRT_2;
        let hi = 1.0 + std::f64::consts::SQRT_2;
        if !self.d_rnw.is_finite()
            || !self.d_sq.is_finite()
            || !(lo..=hi).contains(&self.d_rnw)
            || !(lo..=hi).contains(&self.d_sq)
        {
            return Err(SimError::validation(format!(
                "ideal point ({}, {}) too far outside the feature space",
                self.d_rnw, self.d_sq
            )));
        }
        Ok(())
    }

    /// Raw Euclidean distance to another point (not normalized).
    pub fn distance_to(&self, other: &IdealPoint) -> f64 {
        ((self.d_rnw - other.d_rnw).powi(2) + (self.d_sq - other.d_sq).powi(2)).sqrt()
    }
}

impl From<[f64; 2]> for IdealPoint {
    fn from(v: [f64; 2]) -> Self {
        IdealPoint::new(v[0], v[1])
    }
}

impl From<IdealPoint> for [f64; 2] {
    fn from(p: IdealPoint) -> Self {
        [p.d_rnw, p.d_sq]
    }
}

/// Which placement policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Proposed,
    BestFit,
    CritAware,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Proposed => "proposed",
            PolicyKind::BestFit => "best-fit",
            PolicyKind::CritAware => "crit-aware",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(PolicyKind::Proposed),
            "best-fit" => Ok(PolicyKind::BestFit),
            "crit-aware" => Ok(PolicyKind::CritAware),
            other => Err(SimError::validation(format!(
                "unknown policy '{other}' (expected proposed, best-fit, or crit-aware)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub policy: PolicyKind,
    pub tau_critical: IdealPoint,
    pub tau_best_effort: IdealPoint,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            policy: PolicyKind::Proposed,
            tau_critical: IdealPoint::default_critical(),
            tau_best_effort: IdealPoint::default_best_effort(),
        }
    }
}

impl PolicyConfig {
    /// Strict check for user-supplied configuration.
    pub fn validate(&self) -> Result<()> {
        self.tau_critical.validate()?;
        self.tau_best_effort.validate()
    }

    /// Check for programmatic configurations, tolerating swept points.
    pub fn validate_swept(&self) -> Result<()> {
        self.tau_critical.validate_swept()?;
        self.tau_best_effort.validate_swept()
    }

    pub fn build(&self) -> Box<dyn PlacementPolicy> {
        match self.policy {
            PolicyKind::Proposed => Box::new(ProposedPolicy {
                tau_critical: self.tau_critical,
                tau_best_effort: self.tau_best_effort,
            }),
            PolicyKind::BestFit => Box::new(BestFitPolicy),
            PolicyKind::CritAware => Box::new(CritAwarePolicy),
        }
    }
}

/// A feasible placement candidate: the server already passed the
/// free-awake-core filter for the request.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub server_id: ServerId,
    pub inventory: GreenCoreInventory,
}

/// One ranked candidate. Higher score is better; the vector is sorted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredServer {
    pub server_id: ServerId,
    pub score: f64,
}

/// Interchangeable placement policy interface.
pub trait PlacementPolicy: Send + Sync {
    fn name(&self) -> &str;

    /// Orders pre-filtered candidates, best first.
    fn preferences(&self, req: &VmRequest, candidates: &[Candidate]) -> Vec<ScoredServer>;
}

/// Unused share of awake renewables-driven capacity, in [0, 1]. A server
/// with no awake green cores offers no harvest opportunity and reads 0.
pub fn get_rnw(inv: &GreenCoreInventory) -> f64 {
    if inv.c_g_active == 0 {
        return 0.0;
    }
    f64::from(inv.c_g_active.abs_diff(inv.c_g_used)) / f64::from(inv.c_g_active)
}

/// Unused share of the regular partition, in [0, 1]. Degenerate servers
/// with no regular cores read 0.
pub fn get_sq(inv: &GreenCoreInventory) -> f64 {
    if inv.c_r_active == 0 {
        return 0.0;
    }
    f64::from(inv.c_r_active.abs_diff(inv.c_r_used)) / f64::from(inv.c_r_active)
}

/// Euclidean distance between a server feature vector and an ideal point,
/// normalized by sqrt(2) so in-box distances land in [0, 1].
pub fn get_distance(d_rnw: f64, d_sq: f64, tau: &IdealPoint) -> f64 {
    ((tau.d_sq - d_sq).powi(2) + (tau.d_rnw - d_rnw).powi(2)).sqrt() / std::f64::consts::SQRT_2
}

/// Ranks candidates for a request under the configured policy.
pub fn get_placement_preferences(
    req: &VmRequest,
    candidates: &[Candidate],
    cfg: &PolicyConfig,
) -> Vec<ScoredServer> {
    cfg.build().preferences(req, candidates)
}

/// The ideal-point scoring policy.
pub struct ProposedPolicy {
    pub tau_critical: IdealPoint,
    pub tau_best_effort: IdealPoint,
}

impl ProposedPolicy {
    fn ideal_point(&self, criticality: Criticality) -> &IdealPoint {
        match criticality {
            Criticality::Critical => &self.tau_critical,
            Criticality::BestEffort => &self.tau_best_effort,
        }
    }
}

impl PlacementPolicy for ProposedPolicy {
    fn name(&self) -> &str {
        "proposed"
    }

    fn preferences(&self, req: &VmRequest, candidates: &[Candidate]) -> Vec<ScoredServer> {
        let tau = self.ideal_point(req.criticality);
        let mut ranked: Vec<(f64, ServerId)> = candidates
            .iter()
            .map(|c| {
                let d = get_distance(get_rnw(&c.inventory), get_sq(&c.inventory), tau);
                (d, c.server_id)
            })
            .collect();
        // swept ideal points may sit outside the unit box, so order on the
        // raw distance; the reported score stays clamped to [0, 1]
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked
            .into_iter()
            .map(|(d, server_id)| ScoredServer {
                server_id,
                score: (1.0 - d).clamp(0.0, 1.0),
            })
            .collect()
    }
}

fn free_after(inv: &GreenCoreInventory, cores: u32) -> u32 {
    inv.free_awake().saturating_sub(cores)
}

fn best_fit_score(inv: &GreenCoreInventory, cores: u32) -> f64 {
    let cap = inv.c_r_active + inv.c_g_active;
    if cap == 0 {
        return 0.0;
    }
    1.0 - f64::from(free_after(inv, cores)) / f64::from(cap)
}

fn sort_best_fit(candidates: &mut [Candidate], cores: u32) {
    candidates.sort_by(|a, b| {
        free_after(&a.inventory, cores)
            .cmp(&free_after(&b.inventory, cores))
            .then(a.server_id.cmp(&b.server_id))
    });
}

/// Tightest-fit baseline: fewest free awake cores after placement wins.
pub struct BestFitPolicy;

impl PlacementPolicy for BestFitPolicy {
    fn name(&self) -> &str {
        "best-fit"
    }

    fn preferences(&self, req: &VmRequest, candidates: &[Candidate]) -> Vec<ScoredServer> {
        let mut sorted = candidates.to_vec();
        sort_best_fit(&mut sorted, req.core_count);
        sorted
            .into_iter()
            .map(|c| ScoredServer {
                server_id: c.server_id,
                score: best_fit_score(&c.inventory, req.core_count),
            })
            .collect()
    }
}

/// Criticality-aware baseline: critical VMs go best-fit onto servers where
/// the placement stays within the regular partition (no green cores
/// touched), falling back to global best-fit when no such server exists.
/// Best-effort VMs go global best-fit.
pub struct CritAwarePolicy;

impl PlacementPolicy for CritAwarePolicy {
    fn name(&self) -> &str {
        "crit-aware"
    }

    fn preferences(&self, req: &VmRequest, candidates: &[Candidate]) -> Vec<ScoredServer> {
        let mut sorted = candidates.to_vec();
        sort_best_fit(&mut sorted, req.core_count);
        if req.criticality == Criticality::Critical {
            // keeps m + cores <= r: nothing pinned beyond the regular
            // partition and enough free regular cores for the request
            let qualifies = |c: &Candidate| {
                c.inventory.c_g_used == 0
                    && c.inventory.c_r_active - c.inventory.c_r_used >= req.core_count
            };
            sorted.sort_by_key(|c| !qualifies(c));
        }
        sorted
            .into_iter()
            .map(|c| ScoredServer {
                server_id: c.server_id,
                score: best_fit_score(&c.inventory, req.core_count),
            })
            .collect()
    }
}

/// Repositions the critical ideal point along the line through the two
/// default points so that the inter-point distance equals `distance`
/// (raw Euclidean). Distances up to sqrt(2), the feature-space diameter,
/// are accepted; the swept point may leave the unit box.
pub fn tau_critical_at_distance(
    tau_critical: &IdealPoint,
    tau_best_effort: &IdealPoint,
    distance: f64,
) -> Result<IdealPoint> {
    if !(0.0..=std::f64::consts::SQRT_2).contains(&distance) {
        return Err(SimError::validation(format!(
            "infeasible ideal-point distance {distance} (expected 0 <= d <= sqrt(2))"
        )));
    }
    let base = tau_critical.distance_to(tau_best_effort);
    if base == 0.0 {
        if distance == 0.0 {
            return Ok(*tau_best_effort);
        }
        return Err(SimError::validation(
            "ideal points coincide; no direction to reposition along",
        ));
    }
    let ratio = distance / base;
    Ok(IdealPoint::new(
        tau_best_effort.d_rnw + (tau_critical.d_rnw - tau_best_effort.d_rnw) * ratio,
        tau_best_effort.d_sq + (tau_critical.d_sq - tau_best_effort.d_sq) * ratio,
    ))
}
