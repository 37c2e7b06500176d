use rayon::prelude::*;
use thiserror::Error;

use super::config::{Arch, SimConfig};
use super::metrics::Metrics;
use super::sim::simulate;

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Cores,
    Banks,
    Bandwidth,
    Arbiter,
    Arch,
}

pub const SWEEPABLE: &[&str] = &["core.n", "mem.banks", "nic.gbps", "arb.kind", "sim.arch"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepError {
    #[error("`{0}` is not sweepable; choose one of: {list}", list = SWEEPABLE.join(", "))]
    UnknownParam(String),
    #[error("bad value list `{0}`")]
    BadValues(String),
}

impl SweepParam {
    pub fn from_name(name: &str) -> Result<Self, SweepError> {
        Ok(match name {
            "core.n" | "n_cores" => SweepParam::Cores,
            "mem.banks" | "n_banks" => SweepParam::Banks,
            "nic.gbps" | "bandwidth_gbps" => SweepParam::Bandwidth,
            "arb.kind" | "arbiter" => SweepParam::Arbiter,
            "sim.arch" | "arch" => SweepParam::Arch,
            other => return Err(SweepError::UnknownParam(other.to_string())),
        })
    }

    pub fn key(self) -> &'static str {
        match self {
            SweepParam::Cores => "core.n",
            SweepParam::Banks => "mem.banks",
            SweepParam::Bandwidth => "nic.gbps",
            SweepParam::Arbiter => "arb.kind",
            SweepParam::Arch => "sim.arch",
        }
    }
}

/// Expands `1,2,4` or an inclusive integer range `1..8`.
pub fn parse_values(spec: &str) -> Result<Vec<String>, SweepError> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| SweepError::BadValues(spec.into()))?;
        let hi: u64 = hi.trim().parse().map_err(|_| SweepError::BadValues(spec.into()))?;
        if lo > hi || hi - lo > 10_000 {
            return Err(SweepError::BadValues(spec.into()));
        }
        return Ok((lo..=hi).map(|v| v.to_string()).collect());
    }
    let values: Vec<String> = spec.split(',').map(|v| v.trim().to_string()).collect();
    if values.iter().any(String::is_empty) {
        return Err(SweepError::BadValues(spec.into()));
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: String,
    pub result: Result<Metrics, String>,
}

/// Derives the configuration for one sweep cell.
pub fn cell_config(base: &SimConfig, param: SweepParam, value: &str) -> Result<SimConfig, String> {
    let mut cfg = base.clone();
    cfg.set(param.key(), value).map_err(|e| e.to_string())?;
    // The cacheless design has no cache parameters to carry over.
    if param == SweepParam::Arch && cfg.arch == Arch::ProposedCacheless {
        cfg.cache = None;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Runs one simulation per value. Cells run in parallel but the result is
/// in `values` order; a failing cell is recorded and the rest continue.
pub fn sweep(base: &SimConfig, param: SweepParam, values: &[String]) -> Vec<SweepCell> {
    values
        .par_iter()
        .map(|value| {
            let result = cell_config(base, param, value)
                .and_then(|cfg| simulate(&cfg).map_err(|e| e.to_string()))
                .map(|out| out.metrics);
            SweepCell { value: value.clone(), result }
        })
        .collect()
}
