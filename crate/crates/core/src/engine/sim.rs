//! The cycle loop.
//!
//! Each cycle runs a fixed phase order: deliver responses completing this
//! cycle, tick every core in index order, tick the NIC, arbitrate, then
//! perform granted bank accesses. Ties are always broken by requester index,
//! so a run is a pure function of its configuration.

use std::collections::BTreeMap;

use crate::cpu::{core_tick, CoreEvent, CoreState, CoreStatus};
use crate::interconnect::{route, trace_cycle, ArbiterKind, ArbiterState};
use crate::isa::Program;
use crate::memory::{AccessKind, BankedMemory, CacheModel, Cycle, MemoryDump, MemoryRequest, MemoryResponse, RequesterId};
use crate::netio::NicState;
use crate::workloads::{verify_philosophers, verify_producer_consumer, VerifyReport, Watchpoint};

use super::config::{Arch, CacheConfig, ConfigError, SimConfig, StopRule, WorkloadCheck};
use super::metrics::{
    jain_index, BankMetrics, CacheMetrics, CoreMetrics, MemoryMetrics, Metrics, NicMetrics, RunStatus, WorkloadMetrics,
};

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub dump: MemoryDump,
    pub trace: Option<String>,
    /// Final architectural state of each core.
    pub cores: Vec<CoreState>,
    pub nic: Option<NicState>,
}

/// Per-core caches plus the single unpipelined DRAM channel.
#[derive(Debug)]
struct Baseline {
    caches: Vec<CacheModel>,
    port_free_at: Cycle,
}

pub struct Simulator {
    cfg: SimConfig,
    programs: Vec<Program>,
    check: WorkloadCheck,
    watch: BTreeMap<u32, Watchpoint>,
    memory: BankedMemory,
    baseline: Option<Baseline>,
    cores: Vec<CoreState>,
    /// Response owed to each core, waiting for its completion cycle.
    inflight: Vec<Option<MemoryResponse>>,
    /// Core request still needs a crossbar/DRAM grant.
    awaiting_grant: Vec<bool>,
    nic: Option<NicState>,
    arbiter: ArbiterState,
    cycle: Cycle,
    ended_at: Vec<Option<(Cycle, bool)>>,
    core_grants: Vec<u64>,
    core_accesses: Vec<u64>,
    bank_grants: Vec<u64>,
    bank_conflicts: Vec<u64>,
    issued: u64,
    delivered: u64,
    latency_sum: u64,
    latency_max: u64,
    watch_violations: u64,
    trace: Option<String>,
}

impl Simulator {
    pub fn new(cfg: &SimConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let built = cfg.build_workload()?;
        let n = cfg.n_cores as usize;
        let words = cfg.memory_words();

        let (banks, latency) = match cfg.arch {
            Arch::ProposedCacheless => (cfg.n_banks as usize, cfg.mem_latency),
            Arch::BaselineCached => (1, cfg.cache.unwrap_or_default().dram_latency),
        };
        let mut memory = BankedMemory::new(words, banks, latency).map_err(|e| ConfigError::new(e.to_string()))?;
        let mut initial: BTreeMap<u32, u32> = BTreeMap::new();
        for (i, p) in built.programs.iter().enumerate() {
            for &(a, v) in &p.data_image {
                if let Some(prev) = initial.insert(a, v) {
                    if prev != v {
                        return Err(ConfigError::new(format!(
                            "program for core {i} initializes {a:#x} differently from an earlier core"
                        )));
                    }
                }
            }
        }
        for (&a, &v) in &initial {
            memory.write(a, v).map_err(|e| ConfigError::new(e.to_string()))?;
        }

        let baseline = (cfg.arch == Arch::BaselineCached).then(|| {
            let c: CacheConfig = cfg.cache.unwrap_or_default();
            Baseline {
                caches: (0..n).map(|_| CacheModel::new(c.line_words, c.sets, c.hit_latency, c.dram_latency)).collect(),
                port_free_at: 0,
            }
        });

        let nic = cfg
            .nic
            .enabled()
            .then(|| NicState::new(n, cfg.nic.rate(), cfg.nic.region(words), cfg.nic.retry_window));
        let requesters = n + 1;
        let arbiter = match cfg.arbiter.kind {
            ArbiterKind::RoundRobin => ArbiterState::round_robin(banks, requesters),
            ArbiterKind::Priority => ArbiterState::priority(cfg.priority_ranks()),
        };

        let cores = built
            .programs
            .iter()
            .enumerate()
            .map(|(i, p)| CoreState::new(i, p, cfg.stack_depth))
            .collect();

        Ok(Simulator {
            cfg: cfg.clone(),
            check: built.check,
            watch: built.watchpoints.into_iter().map(|w| (w.address, w)).collect(),
            programs: built.programs,
            memory,
            baseline,
            cores,
            inflight: vec![None; n],
            awaiting_grant: vec![false; n],
            nic,
            arbiter,
            cycle: 0,
            ended_at: vec![None; n],
            core_grants: vec![0; n],
            core_accesses: vec![0; n],
            bank_grants: vec![0; banks],
            bank_conflicts: vec![0; banks],
            issued: 0,
            delivered: 0,
            latency_sum: 0,
            latency_max: 0,
            watch_violations: 0,
            trace: cfg.trace.then(String::new),
        })
    }

    pub fn cycle(&self) -> Cycle {
        self.cycle
    }

    pub fn cores(&self) -> &[CoreState] {
        &self.cores
    }

    pub fn memory(&self) -> &BankedMemory {
        &self.memory
    }

    /// Crossbar (or DRAM port) grants won by each core so far.
    pub fn core_grants(&self) -> &[u64] {
        &self.core_grants
    }

    pub fn bank_grants(&self) -> &[u64] {
        &self.bank_grants
    }

    pub fn all_done(&self) -> bool {
        self.cores.iter().all(|c| c.status.is_done())
    }

    fn check_watch(&mut self, address: u32) {
        if let Some(w) = self.watch.get(&address) {
            let v = self.memory.read(address).unwrap_or(0);
            if v < w.min || v > w.max {
                self.watch_violations += 1;
            }
        }
    }

    fn complete(&mut self, core: usize, resp: MemoryResponse) {
        let lat = resp.latency();
        self.latency_sum += lat;
        self.latency_max = self.latency_max.max(lat);
        self.core_accesses[core] += 1;
        self.inflight[core] = Some(resp);
    }

    /// Advances the whole machine by one cycle.
    pub fn step(&mut self) {
        let c = self.cycle;
        let words = self.memory.words();
        let nic_id = self.cores.len();

        // Cores, in index order, each seeing a response due this cycle.
        for i in 0..self.cores.len() {
            let resp = match &self.inflight[i] {
                Some(r) if r.complete_cycle <= c => self.inflight[i].take(),
                _ => None,
            };
            if resp.is_some() {
                self.delivered += 1;
            }
            let out = core_tick(&mut self.cores[i], &self.programs[i], resp, c, words);
            match out.event {
                CoreEvent::Halted => self.ended_at[i] = Some((c, true)),
                CoreEvent::Faulted(_) => self.ended_at[i] = Some((c, false)),
                _ => {}
            }
            if let Some(req) = out.new_request {
                self.issued += 1;
                self.issue(i, req);
            }
        }

        if let Some(nic) = &mut self.nic {
            nic.nic_tick(c);
        }

        // Contenders: cores still owed a grant, then the NIC's head write.
        let port_free = self.baseline.as_ref().is_none_or(|b| b.port_free_at <= c);
        let mut candidates: Vec<(RequesterId, usize)> = Vec::new();
        let mut requests: BTreeMap<RequesterId, MemoryRequest> = BTreeMap::new();
        if port_free {
            for (i, core) in self.cores.iter().enumerate() {
                if self.awaiting_grant[i] {
                    let req = core.pending.as_ref().expect("awaiting grant without request");
                    candidates.push((i, self.memory.bank_of(req.address)));
                    requests.insert(i, req.clone());
                }
            }
            if let Some(head) = self.nic.as_ref().and_then(NicState::head) {
                candidates.push((nic_id, self.memory.bank_of(head.address)));
                requests.insert(nic_id, head.clone());
            }
        }
        if candidates.is_empty() {
            self.cycle += 1;
            return;
        }

        let grants = self.arbiter.arbitrate(&candidates);
        debug_assert!(grants.grants.len() <= self.bank_grants.len());
        if let Some(t) = &mut self.trace {
            trace_cycle(t, c, &candidates, &grants);
        }
        let mut per_bank = vec![0u32; self.bank_grants.len()];
        for &(_, b) in &candidates {
            per_bank[b] += 1;
        }
        for (b, &k) in per_bank.iter().enumerate() {
            if k >= 2 {
                self.bank_conflicts[b] += 1;
            }
        }

        let (responses, faults) = route(&grants, &requests, &mut self.memory, c);
        debug_assert!(faults.is_empty(), "address checks happen at issue: {faults:?}");
        for &bank in grants.grants.keys() {
            self.bank_grants[bank] += 1;
        }
        for resp in responses {
            let r = resp.requester;
            let req = &requests[&r];
            if matches!(req.kind, AccessKind::Store | AccessKind::Dma | AccessKind::Tas) {
                self.check_watch(req.address);
            }
            if let Some(b) = &mut self.baseline {
                b.port_free_at = resp.complete_cycle;
            }
            if r == nic_id {
                if let Some(nic) = &mut self.nic {
                    nic.granted();
                }
            } else {
                self.awaiting_grant[r] = false;
                self.core_grants[r] += 1;
                self.complete(r, resp);
            }
        }
        if grants.rejected.contains(&nic_id) {
            if let Some(nic) = &mut self.nic {
                nic.rejected();
            }
        }
        self.cycle += 1;
    }

    fn issue(&mut self, core: usize, req: MemoryRequest) {
        let Some(b) = &mut self.baseline else {
            self.awaiting_grant[core] = true;
            return;
        };
        let outcome = b.caches[core].access(&req);
        if !outcome.hit {
            self.awaiting_grant[core] = true;
            return;
        }
        // Hits are served by the private cache; the write-through keeps the
        // backing image current.
        let data = self.memory.apply(&req).expect("address checked at issue");
        if req.kind != AccessKind::Load {
            self.check_watch(req.address);
        }
        let c = self.cycle;
        self.complete(
            core,
            MemoryResponse {
                requester: core,
                data,
                issue_cycle: c,
                grant_cycle: c,
                complete_cycle: c + outcome.latency,
            },
        );
    }

    /// Runs until the stop rule fires and collects the results.
    pub fn run(mut self) -> RunOutput {
        let budget = self.cfg.cycle_budget;
        while self.cycle < budget {
            if self.cfg.stop == StopRule::Halt && self.all_done() {
                break;
            }
            self.step();
        }
        self.finish()
    }

    fn finish(self) -> RunOutput {
        let cycles = self.cycle;
        let status = match self.cfg.stop {
            StopRule::Halt if !self.all_done() => RunStatus::BudgetExceeded,
            _ => RunStatus::Completed,
        };
        let dump = self.memory.dump();

        let cores: Vec<CoreMetrics> = self
            .cores
            .iter()
            .enumerate()
            .map(|(i, core)| {
                let idle = match (self.ended_at[i], core.status) {
                    (Some((at, true)), _) => cycles - at - 1,
                    (Some((at, false)), _) => cycles - at,
                    (None, CoreStatus::Halted) => cycles,
                    _ => 0,
                };
                let fault = match core.status {
                    CoreStatus::Faulted(r) => Some(r.to_string()),
                    _ => None,
                };
                CoreMetrics {
                    id: i,
                    retired: core.retired,
                    stall_cycles: core.stall_cycles,
                    idle_cycles: idle,
                    grants: self.core_grants[i],
                    accesses: self.core_accesses[i],
                    faults: u64::from(fault.is_some()),
                    fault,
                }
            })
            .collect();

        let per_cycle = |x: u64| if cycles == 0 { 0.0 } else { x as f64 / cycles as f64 };
        let banks: Vec<BankMetrics> = (0..self.bank_grants.len())
            .map(|b| BankMetrics {
                id: b,
                grants: self.bank_grants[b],
                conflict_cycles: self.bank_conflicts[b],
                utilization: per_cycle(self.bank_grants[b]),
            })
            .collect();

        let nic = match &self.nic {
            Some(n) => NicMetrics {
                enabled: true,
                rate: n.rate.to_string(),
                injected: n.injected,
                delivered: n.delivered,
                queued: n.queued(),
                dropped: n.dropped,
                achieved_rate: per_cycle(n.injected),
                conserved: n.conserved(),
            },
            None => NicMetrics {
                enabled: false,
                rate: "0".into(),
                injected: 0,
                delivered: 0,
                queued: 0,
                dropped: 0,
                achieved_rate: 0.0,
                conserved: true,
            },
        };

        let accesses: u64 = self.core_accesses.iter().sum();
        let memory = MemoryMetrics {
            requests_issued: self.issued,
            responses_delivered: self.delivered,
            pending_at_end: self.cores.iter().filter(|c| c.pending.is_some()).count() as u64,
            mean_access_latency: if accesses == 0 { 0.0 } else { self.latency_sum as f64 / accesses as f64 },
            max_access_latency: self.latency_max,
            watchpoint_violations: self.watch_violations,
        };

        let cache = self.baseline.as_ref().map(|b| {
            let hits: u64 = b.caches.iter().map(|c| c.hits).sum();
            let misses: u64 = b.caches.iter().map(|c| c.misses).sum();
            CacheMetrics {
                hits,
                misses,
                miss_rate: if hits + misses == 0 { 0.0 } else { misses as f64 / (hits + misses) as f64 },
            }
        });

        let report: Option<VerifyReport> = match &self.check {
            WorkloadCheck::None => None,
            WorkloadCheck::ProducerConsumer(l) => Some(verify_producer_consumer(&dump, l)),
            WorkloadCheck::Philosophers(l) => Some(verify_philosophers(&dump, l)),
        };
        let work_units = report.as_ref().map_or(accesses, |r| r.work_units);
        let workload = WorkloadMetrics {
            kind: self.cfg.workload.name().to_string(),
            work_units,
            throughput_per_kcycle: per_cycle(work_units) * 1000.0,
            verified: report.as_ref().map(VerifyReport::passed),
            failures: report
                .map(|r| r.failures.iter().map(ToString::to_string).collect())
                .unwrap_or_default(),
        };

        let grants: u64 = self.bank_grants.iter().sum();
        let metrics = Metrics {
            status,
            arch: self.cfg.arch.name().to_string(),
            arbiter: match self.cfg.arbiter.kind {
                ArbiterKind::RoundRobin => "rr".into(),
                ArbiterKind::Priority => "priority".into(),
            },
            n_cores: self.cfg.n_cores,
            n_banks: self.bank_grants.len() as u32,
            cycles,
            retired: cores.iter().map(|c| c.retired).sum(),
            stall_cycles: cores.iter().map(|c| c.stall_cycles).sum(),
            grants,
            conflict_cycles: self.bank_conflicts.iter().sum(),
            grants_per_cycle: per_cycle(grants),
            fairness: jain_index(&self.core_grants),
            cores,
            banks,
            nic,
            memory,
            cache,
            workload,
        };

        RunOutput { metrics, dump, trace: self.trace, cores: self.cores, nic: self.nic }
    }

    /// The NIC model, if enabled.
    pub fn nic(&self) -> Option<&NicState> {
        self.nic.as_ref()
    }
}

/// Builds and runs a simulation.
pub fn simulate(cfg: &SimConfig) -> Result<RunOutput, ConfigError> {
    Ok(Simulator::new(cfg)?.run())
}
