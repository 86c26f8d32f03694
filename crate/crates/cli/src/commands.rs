//! Subcommand implementations. Progress goes to stderr, machine-readable
//! output to files; each simulate-style command prints one summary line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;

use greencores::{
    parse_supply_trace_file, parse_vm_trace_file, run, synth_traces, tau_critical_at_distance,
    IdealPoint, PolicyKind, SimConfig, SimError, SimReport, SupplyTrace, SynthSpec, VmTrace,
};

use crate::CommonArgs;

/// Per-class eviction counts as a share of total arrivals.
#[derive(Debug, Serialize)]
struct ClassEvictionRates {
    critical: f64,
    best_effort: f64,
}

/// compare.json payload: one report per policy on identical traces, harvest
/// normalized so the best policy reads 1.0.
#[derive(Debug, Serialize)]
struct CompareReport {
    trace_hash: String,
    normalized_harvest: BTreeMap<String, f64>,
    eviction_rates: BTreeMap<String, ClassEvictionRates>,
    policies: BTreeMap<String, serde_json::Value>,
}

/// Exit codes: 1 for validation problems, 2 for runtime failures.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SimError>() {
        Some(e) if e.is_validation() => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn parse_tau(s: &str) -> anyhow::Result<IdealPoint> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        bail!(SimError::validation(format!(
            "ideal point '{s}' must be 'd_rnw,d_sq'"
        )));
    }
    let d_rnw: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| SimError::validation(format!("ideal point '{s}': {e}")))?;
    let d_sq: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| SimError::validation(format!("ideal point '{s}': {e}")))?;
    let tau = IdealPoint::new(d_rnw, d_sq);
    tau.validate()?;
    Ok(tau)
}

/// Flags > config file > defaults.
fn load_config(common: &CommonArgs) -> anyhow::Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::from_path(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(policy) = &common.policy {
        cfg.policy.policy = PolicyKind::parse(policy)?;
    }
    if let Some(tau) = &common.tau_critical {
        cfg.policy.tau_critical = parse_tau(tau)?;
    }
    if let Some(tau) = &common.tau_best_effort {
        cfg.policy.tau_best_effort = parse_tau(tau)?;
    }
    if let Some(servers) = common.servers {
        cfg.server_count = servers;
    }
    if let Some(duration) = common.duration_s {
        cfg.duration_s = Some(duration);
    }
    Ok(cfg)
}

fn load_traces(common: &CommonArgs) -> anyhow::Result<(VmTrace, SupplyTrace)> {
    let vm = parse_vm_trace_file(&common.vm_trace)
        .with_context(|| format!("vm trace {}", common.vm_trace.display()))?;
    let supply = parse_supply_trace_file(&common.supply_trace)
        .with_context(|| format!("supply trace {}", common.supply_trace.display()))?;
    Ok((vm, supply))
}

fn summary_line(report: &SimReport) -> String {
    format!(
        "policy={} harvest_core_s={} evictions_critical={} evictions_best_effort={} failures={}",
        report.policy,
        report.harvested_green_core_seconds,
        report.evictions_critical,
        report.evictions_best_effort,
        report.placement_failures
    )
}

pub fn simulate(common: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let (vm, supply) = load_traces(common)?;
    eprintln!(
        "running {} on {} arrivals over {} servers",
        cfg.policy.policy.name(),
        vm.len(),
        cfg.server_count
    );
    let report = run(&cfg, &vm, &supply)?;
    report.write_to_dir(&common.out)?;
    println!("{}", summary_line(&report));
    Ok(())
}

pub fn compare(common: &CommonArgs, policies: &[String]) -> anyhow::Result<()> {
    if policies.len() < 2 {
        bail!(SimError::validation("compare needs at least two policies"));
    }
    let kinds: Vec<PolicyKind> = policies
        .iter()
        .map(|p| PolicyKind::parse(p).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<_>>()?;
    if (1..kinds.len()).any(|i| kinds[..i].contains(&kinds[i])) {
        bail!(SimError::validation("duplicate policy in --policies"));
    }
    let base = load_config(common)?;
    let (vm, supply) = load_traces(common)?;

    let mut reports: BTreeMap<String, SimReport> = BTreeMap::new();
    for kind in kinds {
        let mut cfg = base.clone();
        cfg.policy.policy = kind;
        eprintln!("running {}", kind.name());
        let report = run(&cfg, &vm, &supply)?;
        println!("{}", summary_line(&report));
        reports.insert(kind.name().to_string(), report);
    }

    let max_harvest = reports
        .values()
        .map(|r| r.harvested_green_core_seconds)
        .max()
        .unwrap_or(0);
    let normalized: BTreeMap<String, f64> = reports
        .iter()
        .map(|(name, r)| {
            let v = if max_harvest == 0 {
                0.0
            } else {
                r.harvested_green_core_seconds as f64 / max_harvest as f64
            };
            (name.clone(), v)
        })
        .collect();
    let compare = CompareReport {
        trace_hash: reports
            .values()
            .next()
            .map(|r| r.trace_hash.clone())
            .unwrap_or_default(),
        normalized_harvest: normalized.clone(),
        eviction_rates: reports
            .iter()
            .map(|(name, r)| {
                let total = r.total_arrivals.max(1) as f64;
                (
                    name.clone(),
                    ClassEvictionRates {
                        critical: r.evictions_critical as f64 / total,
                        best_effort: r.evictions_best_effort as f64 / total,
                    },
                )
            })
            .collect(),
        policies: reports
            .iter()
            .map(|(name, r)| (name.clone(), r.scalar_json()))
            .collect(),
    };

    std::fs::create_dir_all(&common.out)?;
    std::fs::write(
        common.out.join("compare.json"),
        serde_json::to_string_pretty(&compare)? + "\n",
    )?;

    let mut csv =
        String::from("policy,normalized_harvest,evictions_critical,evictions_best_effort\n");
    for (name, report) in &reports {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            name, normalized[name], report.evictions_critical, report.evictions_best_effort
        ));
    }
    std::fs::write(common.out.join("compare.csv"), csv)?;
    Ok(())
}

pub fn sweep(common: &CommonArgs, distances: &[f64]) -> anyhow::Result<()> {
    if distances.is_empty() {
        bail!(SimError::validation("sweep needs at least one distance"));
    }
    let base = load_config(common)?;
    let (vm, supply) = load_traces(common)?;

    std::fs::create_dir_all(&common.out)?;
    let mut csv = String::from("distance,harvest,evictions\n");
    for &distance in distances {
        let tau = tau_critical_at_distance(
            &base.policy.tau_critical,
            &base.policy.tau_best_effort,
            distance,
        )?;
        let mut cfg = base.clone();
        cfg.policy.policy = PolicyKind::Proposed;
        cfg.policy.tau_critical = tau;
        eprintln!(
            "running distance {distance} (tau_critical {:?})",
            (tau.d_rnw, tau.d_sq)
        );
        let report = run(&cfg, &vm, &supply)?;
        println!("distance={distance} {}", summary_line(&report));
        csv.push_str(&format!(
            "{},{},{}\n",
            distance,
            report.harvested_green_core_seconds,
            report.evictions_total()
        ));
    }
    std::fs::write(common.out.join("sweep.csv"), csv)?;
    Ok(())
}

pub fn gen_trace(
    spec_path: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    servers: Option<u32>,
    duration_s: Option<u64>,
    arrival_rate: Option<f64>,
    best_effort_share: Option<f64>,
) -> anyhow::Result<()> {
    let mut spec = match spec_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                SimError::validation(format!("cannot read {}: {e}", path.display()))
            })?;
            SynthSpec::from_toml_str(&text)?
        }
        None => SynthSpec::default(),
    };
    if let Some(v) = servers {
        spec.servers = v;
    }
    if let Some(v) = duration_s {
        spec.duration_s = v;
    }
    if let Some(v) = arrival_rate {
        spec.arrival_rate_per_s = v;
    }
    if let Some(v) = best_effort_share {
        spec.best_effort_share = v;
    }
    let seed = seed.unwrap_or(1);
    let (vm, supply) = synth_traces(&spec, seed)?;

    std::fs::create_dir_all(out)?;
    let mut vm_file = std::io::BufWriter::new(std::fs::File::create(out.join("vm.csv"))?);
    greencores::write_vm_trace(&mut vm_file, &vm)?;
    vm_file.flush()?;
    let mut supply_file = std::io::BufWriter::new(std::fs::File::create(out.join("supply.csv"))?);
    greencores::write_supply_trace(&mut supply_file, &supply)?;
    supply_file.flush()?;
    eprintln!(
        "wrote {} arrivals and {} supply points (seed {seed})",
        vm.len(),
        supply.points().len()
    );
    println!(
        "vm_trace={} supply_trace={} arrivals={}",
        out.join("vm.csv").display(),
        out.join("supply.csv").display(),
        vm.len()
    );
    Ok(())
}
