use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreMetrics {
    pub id: usize,
    pub retired: u64,
    pub stall_cycles: u64,
    pub idle_cycles: u64,
    /// Crossbar (or DRAM port) grants won by this core.
    pub grants: u64,
    pub accesses: u64,
    pub faults: u64,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BankMetrics {
    pub id: usize,
    pub grants: u64,
    /// Cycles in which two or more requesters wanted this bank.
    pub conflict_cycles: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NicMetrics {
    pub enabled: bool,
    /// Exact words-per-cycle rate as a fraction, e.g. `5/16`.
    pub rate: String,
    pub injected: u64,
    pub delivered: u64,
    pub queued: u64,
    pub dropped: u64,
    pub achieved_rate: f64,
    pub conserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryMetrics {
    pub requests_issued: u64,
    pub responses_delivered: u64,
    pub pending_at_end: u64,
    pub mean_access_latency: f64,
    pub max_access_latency: u64,
    pub watchpoint_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheMetrics {
    pub hits: u64,
    pub misses: u64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadMetrics {
    pub kind: String,
    pub work_units: u64,
    pub throughput_per_kcycle: f64,
    pub verified: Option<bool>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub status: RunStatus,
    pub arch: String,
    pub arbiter: String,
    pub n_cores: u32,
    pub n_banks: u32,
    pub cycles: u64,
    pub retired: u64,
    pub stall_cycles: u64,
    pub grants: u64,
    pub conflict_cycles: u64,
    pub grants_per_cycle: f64,
    /// Jain's index over per-core grants.
    pub fairness: f64,
    pub cores: Vec<CoreMetrics>,
    pub banks: Vec<BankMetrics>,
    pub nic: NicMetrics,
    pub memory: MemoryMetrics,
    pub cache: Option<CacheMetrics>,
    pub workload: WorkloadMetrics,
}

impl Metrics {
    /// `retired + stall + idle = cycles` for every core.
    pub fn accounting_holds(&self) -> bool {
        self.cores
            .iter()
            .all(|c| c.retired + c.stall_cycles + c.idle_cycles == self.cycles)
    }

    /// `issued = delivered + pending` for core requests.
    pub fn conservation_holds(&self) -> bool {
        self.memory.requests_issued == self.memory.responses_delivered + self.memory.pending_at_end
    }
}

/// Jain's fairness index, 1.0 for an all-zero or single-element sample.
pub fn jain_index(xs: &[u64]) -> f64 {
    let sum: f64 = xs.iter().map(|&x| x as f64).sum();
    let sq: f64 = xs.iter().map(|&x| (x as f64) * (x as f64)).sum();
    if sq == 0.0 {
        1.0
    } else {
        sum * sum / (xs.len() as f64 * sq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_bounds() {
        assert_eq!(jain_index(&[5, 5, 5, 5]), 1.0);
        assert_eq!(jain_index(&[4, 0, 0, 0]), 0.25);
        assert_eq!(jain_index(&[0, 0]), 1.0);
    }
}
