//! Experiment description and its flat `section.key = value` text format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::cpu::DEFAULT_STACK_DEPTH;
use crate::interconnect::ArbiterKind;
use crate::isa::{assemble, decode, validate_for_memory, Program, MAGIC};
use crate::netio::{parse_decimal, rate_from_bandwidth, DmaRegion, Rate};
use crate::workloads::{
    gen_dining_philosophers, gen_producer_consumer, pointer_chase, uniform_random, PcLayout, PhilLayout, Watchpoint,
};

pub const MIB: u64 = 1 << 20;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const WORD_BYTES: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError { line: None, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    ProposedCacheless,
    BaselineCached,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::ProposedCacheless => "proposed",
            Arch::BaselineCached => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// End when every core has halted or faulted; hitting the budget first
    /// is reported as exceeded.
    Halt,
    /// Always run exactly `cycle_budget` cycles.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub line_words: u32,
    pub sets: u32,
    pub hit_latency: u64,
    pub dram_latency: u64,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { line_words: 8, sets: 64, hit_latency: 2, dram_latency: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NicConfig {
    pub bandwidth_gbps: Rate,
    pub clock_ghz: Rate,
    /// `None` places the ring at the top of memory.
    pub region_base: Option<u32>,
    pub region_length: u32,
    pub retry_window: Option<u32>,
}

impl Default for NicConfig {
    fn default() -> Self {
        NicConfig {
            bandwidth_gbps: Rate::zero(),
            clock_ghz: Rate::one(),
            region_base: None,
            region_length: 1024,
            retry_window: None,
        }
    }
}

impl NicConfig {
    pub fn enabled(&self) -> bool {
        !self.bandwidth_gbps.is_zero()
    }

    pub fn rate(&self) -> Rate {
        rate_from_bandwidth(self.bandwidth_gbps, self.clock_ghz, WORD_BYTES)
    }

    pub fn region(&self, memory_words: u32) -> DmaRegion {
        let base = self.region_base.unwrap_or(memory_words.saturating_sub(self.region_length));
        DmaRegion { base, length: self.region_length }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbiterConfig {
    pub kind: ArbiterKind,
    /// Core ranks for `Priority`; defaults to `core index + 1`.
    pub ranks: Option<Vec<u32>>,
    pub nic_rank: u32,
}

impl Default for ArbiterConfig {
    fn default() -> Self {
        ArbiterConfig { kind: ArbiterKind::RoundRobin, ranks: None, nic_rank: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkloadSpec {
    /// Every core starts halted.
    Idle,
    /// Program files, not yet loaded.
    Files(Vec<PathBuf>),
    /// One program runs on every core; several go to cores `0..k`.
    Programs(Vec<Program>),
    ProducerConsumer { layout: PcLayout, racy: bool },
    Philosophers { layout: PhilLayout, naive: bool },
    HotBank { loads: u32 },
    Disjoint { loads: u32 },
    UniformRandom { accesses: u32, working_set: u32, base: u32 },
}

impl WorkloadSpec {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadSpec::Idle => "idle",
            WorkloadSpec::Files(_) | WorkloadSpec::Programs(_) => "programs",
            WorkloadSpec::ProducerConsumer { .. } => "pc",
            WorkloadSpec::Philosophers { .. } => "phil",
            WorkloadSpec::HotBank { .. } => "hot",
            WorkloadSpec::Disjoint { .. } => "disjoint",
            WorkloadSpec::UniformRandom { .. } => "random",
        }
    }
}

/// What the engine checks once a run ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkloadCheck {
    None,
    ProducerConsumer(PcLayout),
    Philosophers(PhilLayout),
}

/// Programs per core plus the post-run check and watchpoints.
#[derive(Debug, Clone)]
pub struct BuiltWorkload {
    pub programs: Vec<Program>,
    pub check: WorkloadCheck,
    pub watchpoints: Vec<Watchpoint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub arch: Arch,
    pub n_cores: u32,
    pub n_banks: u32,
    pub sram_capacity_bytes: u64,
    pub mem_latency: u64,
    pub stack_depth: usize,
    pub cache: Option<CacheConfig>,
    pub nic: NicConfig,
    pub arbiter: ArbiterConfig,
    pub cycle_budget: u64,
    pub stop: StopRule,
    pub workload: WorkloadSpec,
    pub seed: u64,
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            arch: Arch::ProposedCacheless,
            n_cores: 4,
            n_banks: 8,
            sram_capacity_bytes: 4 * MIB,
            mem_latency: 1,
            stack_depth: DEFAULT_STACK_DEPTH,
            cache: None,
            nic: NicConfig::default(),
            arbiter: ArbiterConfig::default(),
            cycle_budget: DEFAULT_BUDGET,
            stop: StopRule::Halt,
            workload: WorkloadSpec::Idle,
            seed: 0,
            trace: false,
        }
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    let v = v.trim();
    let parsed = match v.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => v.replace('_', "").parse().ok(),
    };
    parsed.ok_or_else(|| ConfigError::new(format!("{key}: expected an integer, got `{v}`")))
}

fn parse_u32(key: &str, v: &str) -> Result<u32, ConfigError> {
    u32::try_from(parse_u64(key, v)?).map_err(|_| ConfigError::new(format!("{key}: value too large")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(ConfigError::new(format!("{key}: expected a boolean, got `{other}`"))),
    }
}

fn parse_bytes(key: &str, v: &str) -> Result<u64, ConfigError> {
    let v = v.trim();
    let (num, mult) = [("MiB", MIB), ("KiB", 1 << 10), ("MB", MIB), ("KB", 1 << 10)]
        .iter()
        .find_map(|(suf, m)| v.strip_suffix(suf).map(|n| (n.trim(), *m)))
        .unwrap_or((v, 1));
    Ok(parse_u64(key, num)? * mult)
}

fn parse_rate(key: &str, v: &str) -> Result<Rate, ConfigError> {
    parse_decimal(v).ok_or_else(|| ConfigError::new(format!("{key}: expected a non-negative decimal, got `{v}`")))
}

fn parse_window(key: &str, v: &str) -> Result<Option<u32>, ConfigError> {
    match v.trim() {
        "inf" | "never" | "none" => Ok(None),
        other => Ok(Some(parse_u32(key, other)?)),
    }
}

/// Keys accepted in config files, in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "sim.arch",
    "sim.budget",
    "sim.until",
    "sim.seed",
    "sim.trace",
    "core.n",
    "core.stack_depth",
    "mem.banks",
    "mem.capacity",
    "mem.latency",
    "cache.line_words",
    "cache.sets",
    "cache.hit_latency",
    "cache.dram_latency",
    "nic.gbps",
    "nic.clock_ghz",
    "nic.base",
    "nic.length",
    "nic.retry_window",
    "arb.kind",
    "arb.ranks",
    "arb.nic_rank",
    "workload.kind",
    "workload.programs",
    "workload.producers",
    "workload.consumers",
    "workload.queues",
    "workload.capacity",
    "workload.items",
    "workload.racy",
    "workload.philosophers",
    "workload.rounds",
    "workload.naive",
    "workload.loads",
    "workload.accesses",
    "workload.working_set",
    "workload.base",
];

impl SimConfig {
    pub fn memory_words(&self) -> u32 {
        (self.sram_capacity_bytes / WORD_BYTES) as u32
    }

    fn cache_mut(&mut self) -> &mut CacheConfig {
        self.cache.get_or_insert_with(CacheConfig::default)
    }

    fn pc_layout(&mut self) -> &mut PcLayout {
        if !matches!(self.workload, WorkloadSpec::ProducerConsumer { .. }) {
            self.workload = WorkloadSpec::ProducerConsumer { layout: PcLayout::new(1, 1, 1, 4, 16), racy: false };
        }
        match &mut self.workload {
            WorkloadSpec::ProducerConsumer { layout, .. } => layout,
            _ => unreachable!(),
        }
    }

    fn phil_layout(&mut self) -> &mut PhilLayout {
        if !matches!(self.workload, WorkloadSpec::Philosophers { .. }) {
            self.workload = WorkloadSpec::Philosophers { layout: PhilLayout::new(5, 10), naive: false };
        }
        match &mut self.workload {
            WorkloadSpec::Philosophers { layout, .. } => layout,
            _ => unreachable!(),
        }
    }

    /// Applies one `key = value` setting. Workload parameters switch the
    /// workload to the matching kind, so `workload.kind` should come first.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "sim.arch" => {
                self.arch = match v {
                    "proposed" | "cacheless" => Arch::ProposedCacheless,
                    "baseline" | "cached" => Arch::BaselineCached,
                    _ => return Err(ConfigError::new(format!("sim.arch: unknown architecture `{v}`"))),
                }
            }
            "sim.budget" => self.cycle_budget = parse_u64(key, v)?,
            "sim.until" => {
                self.stop = match v {
                    "halt" => StopRule::Halt,
                    "budget" => StopRule::Budget,
                    _ => return Err(ConfigError::new(format!("sim.until: expected halt or budget, got `{v}`"))),
                }
            }
            "sim.seed" => self.seed = parse_u64(key, v)?,
            "sim.trace" => self.trace = parse_bool(key, v)?,
            "core.n" => self.n_cores = parse_u32(key, v)?,
            "core.stack_depth" => self.stack_depth = parse_u64(key, v)? as usize,
            "mem.banks" => self.n_banks = parse_u32(key, v)?,
            "mem.capacity" => self.sram_capacity_bytes = parse_bytes(key, v)?,
            "mem.latency" => self.mem_latency = parse_u64(key, v)?,
            "cache.line_words" => self.cache_mut().line_words = parse_u32(key, v)?,
            "cache.sets" => self.cache_mut().sets = parse_u32(key, v)?,
            "cache.hit_latency" => self.cache_mut().hit_latency = parse_u64(key, v)?,
            "cache.dram_latency" => self.cache_mut().dram_latency = parse_u64(key, v)?,
            "nic.gbps" => self.nic.bandwidth_gbps = parse_rate(key, v)?,
            "nic.clock_ghz" => self.nic.clock_ghz = parse_rate(key, v)?,
            "nic.base" => self.nic.region_base = Some(parse_u32(key, v)?),
            "nic.length" => self.nic.region_length = parse_u32(key, v)?,
            "nic.retry_window" => self.nic.retry_window = parse_window(key, v)?,
            "arb.kind" => {
                self.arbiter.kind = match v {
                    "rr" | "round_robin" | "roundrobin" => ArbiterKind::RoundRobin,
                    "priority" | "prio" => ArbiterKind::Priority,
                    _ => return Err(ConfigError::new(format!("arb.kind: expected rr or priority, got `{v}`"))),
                }
            }
            "arb.ranks" => {
                let ranks = v
                    .split(',')
                    .map(|r| parse_u32(key, r))
                    .collect::<Result<Vec<_>, _>>()?;
                self.arbiter.ranks = Some(ranks);
            }
            "arb.nic_rank" => self.arbiter.nic_rank = parse_u32(key, v)?,
            "workload.kind" => {
                self.workload = match v {
                    "idle" => WorkloadSpec::Idle,
                    "programs" => WorkloadSpec::Files(Vec::new()),
                    "pc" | "producer_consumer" => {
                        self.pc_layout();
                        return Ok(());
                    }
                    "phil" | "philosophers" => {
                        self.phil_layout();
                        return Ok(());
                    }
                    "hot" => WorkloadSpec::HotBank { loads: 1000 },
                    "disjoint" => WorkloadSpec::Disjoint { loads: 1000 },
                    "random" => WorkloadSpec::UniformRandom { accesses: 1000, working_set: 4096, base: 0 },
                    _ => return Err(ConfigError::new(format!("workload.kind: unknown workload `{v}`"))),
                }
            }
            "workload.programs" => {
                self.workload = WorkloadSpec::Files(
                    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect(),
                )
            }
            "workload.producers" => self.pc_layout().n_producers = parse_u32(key, v)?,
            "workload.consumers" => self.pc_layout().n_consumers = parse_u32(key, v)?,
            "workload.queues" => self.pc_layout().n_queues = parse_u32(key, v)?,
            "workload.capacity" => self.pc_layout().capacity = parse_u32(key, v)?,
            "workload.items" => self.pc_layout().items_per_producer = parse_u32(key, v)?,
            "workload.racy" => {
                let b = parse_bool(key, v)?;
                self.pc_layout();
                if let WorkloadSpec::ProducerConsumer { racy, .. } = &mut self.workload {
                    *racy = b;
                }
            }
            "workload.philosophers" => self.phil_layout().n_philosophers = parse_u32(key, v)?,
            "workload.rounds" => self.phil_layout().rounds = parse_u32(key, v)?,
            "workload.naive" => {
                let b = parse_bool(key, v)?;
                self.phil_layout();
                if let WorkloadSpec::Philosophers { naive, .. } = &mut self.workload {
                    *naive = b;
                }
            }
            "workload.loads" => {
                let n = parse_u32(key, v)?;
                match &mut self.workload {
                    WorkloadSpec::HotBank { loads } | WorkloadSpec::Disjoint { loads } => *loads = n,
                    _ => return Err(ConfigError::new("workload.loads needs workload.kind = hot or disjoint first")),
                }
            }
            "workload.accesses" | "workload.working_set" | "workload.base" => {
                let n = parse_u32(key, v)?;
                let WorkloadSpec::UniformRandom { accesses, working_set, base } = &mut self.workload else {
                    return Err(ConfigError::new(format!("{key} needs workload.kind = random first")));
                };
                match key {
                    "workload.accesses" => *accesses = n,
                    "workload.working_set" => *working_set = n,
                    _ => *base = n,
                }
            }
            _ => return Err(ConfigError::new(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Enforces ranges and cross-field rules.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::new(m));
        if !(1..=128).contains(&self.n_cores) {
            return fail("core.n must be in 1..=128");
        }
        if self.n_banks == 0 || !self.n_banks.is_power_of_two() {
            return fail("banks must be a power of two");
        }
        if self.n_banks > 1024 {
            return fail("mem.banks must be at most 1024");
        }
        if !(MIB..=8 * MIB).contains(&self.sram_capacity_bytes) || !self.sram_capacity_bytes.is_multiple_of(WORD_BYTES) {
            return fail("mem.capacity must be a whole number of words between 1 MiB and 8 MiB");
        }
        if !(1..=10).contains(&self.mem_latency) {
            return fail("mem.latency must be in 1..=10");
        }
        if !(1..=65536).contains(&self.stack_depth) {
            return fail("core.stack_depth must be in 1..=65536");
        }
        if self.cycle_budget == 0 {
            return fail("sim.budget must be positive");
        }
        match (self.arch, &self.cache) {
            (Arch::ProposedCacheless, Some(_)) => return fail("cache parameters are not allowed with sim.arch = proposed"),
            (Arch::BaselineCached, Some(c)) => {
                if c.line_words == 0 || !c.line_words.is_power_of_two() || c.sets == 0 {
                    return fail("cache.line_words must be a power of two and cache.sets positive");
                }
                if !(1..=10).contains(&c.hit_latency) {
                    return fail("cache.hit_latency must be in 1..=10");
                }
                if !(100..=1000).contains(&c.dram_latency) {
                    return fail("cache.dram_latency must be in 100..=1000");
                }
            }
            _ => {}
        }
        let nic = &self.nic;
        if nic.bandwidth_gbps > Rate::from_integer(10) {
            return fail("nic.gbps must be in [0, 10]");
        }
        if nic.clock_ghz.is_zero() || nic.clock_ghz > Rate::from_integer(10) {
            return fail("nic.clock_ghz must be in (0, 10]");
        }
        if nic.enabled() {
            if nic.rate() > Rate::one() {
                return fail("nic rate exceeds one word per cycle; raise nic.clock_ghz");
            }
            let region = nic.region(self.memory_words());
            if region.length == 0 || u64::from(region.base) + u64::from(region.length) > u64::from(self.memory_words()) {
                return fail("nic region must be nonempty and inside memory");
            }
            if nic.retry_window == Some(0) {
                return fail("nic.retry_window must be positive or inf");
            }
        }
        if self.arbiter.kind == ArbiterKind::Priority {
            if let Some(r) = &self.arbiter.ranks {
                if r.len() != self.n_cores as usize {
                    return fail("arb.ranks must list one rank per core");
                }
            }
        }
        Ok(())
    }

    /// Core ranks followed by the NIC's.
    pub fn priority_ranks(&self) -> Vec<u32> {
        let mut ranks = self
            .arbiter
            .ranks
            .clone()
            .unwrap_or_else(|| (1..=self.n_cores).collect());
        ranks.push(self.arbiter.nic_rank);
        ranks
    }

    /// Loads `Files` workloads, resolving relative paths against `dir`.
    /// Assembly text and binary images are both accepted.
    pub fn resolve_programs(&mut self, dir: &Path) -> Result<(), ConfigError> {
        if let WorkloadSpec::Files(paths) = &self.workload {
            let programs = paths
                .iter()
                .map(|p| load_program(&dir.join(p)))
                .collect::<Result<Vec<_>, _>>()?;
            self.workload = WorkloadSpec::Programs(programs);
        }
        Ok(())
    }

    /// Generates the per-core programs for the configured workload.
    pub fn build_workload(&self) -> Result<BuiltWorkload, ConfigError> {
        let words = self.memory_words();
        let n = self.n_cores;
        let wl = |e: crate::workloads::WorkloadError| ConfigError::new(e.to_string());
        let mut check = WorkloadCheck::None;
        let mut watchpoints = Vec::new();
        let mut programs = match &self.workload {
            WorkloadSpec::Idle => Vec::new(),
            WorkloadSpec::Files(_) => return Err(ConfigError::new("program files have not been loaded")),
            WorkloadSpec::Programs(ps) => {
                if ps.len() > n as usize {
                    return Err(ConfigError::new(format!("{} programs for {n} cores", ps.len())));
                }
                if ps.len() == 1 {
                    vec![ps[0].clone(); n as usize]
                } else {
                    ps.clone()
                }
            }
            WorkloadSpec::ProducerConsumer { layout, racy } => {
                if layout.n_cores() > n {
                    return Err(ConfigError::new(format!(
                        "workload needs {} cores but core.n = {n}",
                        layout.n_cores()
                    )));
                }
                watchpoints = layout.watchpoints();
                check = WorkloadCheck::ProducerConsumer(layout.clone());
                gen_producer_consumer(layout, words, *racy).map_err(wl)?
            }
            WorkloadSpec::Philosophers { layout, naive } => {
                if layout.n_philosophers > n {
                    return Err(ConfigError::new(format!(
                        "workload needs {} cores but core.n = {n}",
                        layout.n_philosophers
                    )));
                }
                check = WorkloadCheck::Philosophers(layout.clone());
                gen_dining_philosophers(layout, words, *naive).map_err(wl)?
            }
            WorkloadSpec::HotBank { loads } => pointer_chase(n, self.n_banks, *loads, true, words).map_err(wl)?,
            WorkloadSpec::Disjoint { loads } => pointer_chase(n, self.n_banks, *loads, false, words).map_err(wl)?,
            WorkloadSpec::UniformRandom { accesses, working_set, base } => {
                uniform_random(n, *accesses, *base, *working_set, self.seed, words).map_err(wl)?
            }
        };
        programs.resize(n as usize, Program::default());

        for (i, p) in programs.iter().enumerate() {
            if let Some(d) = validate_for_memory(p, words).first() {
                return Err(ConfigError::new(format!("program for core {i}: {d}")));
            }
        }
        Ok(BuiltWorkload { programs, check, watchpoints })
    }
}

impl FromStr for SimConfig {
    type Err = ConfigError;

    /// Parses `section.key = value` lines; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut cfg = SimConfig::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: ConfigError| ConfigError { line: Some(line_no), message: e.message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(ConfigError::new(format!("expected `key = value`, got `{line}`"))))?;
            let key = key.trim();
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(at(ConfigError::new(format!("`{key}` already set on line {prev}"))));
            }
            cfg.set(key, value).map_err(at)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads a program file: binary if it starts with the image magic,
/// assembly text otherwise.
pub fn load_program(path: &Path) -> Result<Program, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(MAGIC) {
        decode(&bytes).map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))
    } else {
        let text = String::from_utf8(bytes).map_err(|_| ConfigError::new(format!("{}: not UTF-8 text", path.display())))?;
        assemble(&text).map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.memory_words(), 1 << 20);
        assert_eq!("".parse::<SimConfig>().unwrap(), cfg);
    }

    #[test]
    fn parses_sections_and_comments() {
        let cfg: SimConfig = "# demo\ncore.n=8\nmem.banks = 16 # lanes\nnic.gbps=10\narb.kind=priority\nmem.capacity=2MiB\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.n_cores, 8);
        assert_eq!(cfg.n_banks, 16);
        assert_eq!(cfg.sram_capacity_bytes, 2 * MIB);
        assert_eq!(cfg.arbiter.kind, ArbiterKind::Priority);
        assert_eq!(cfg.nic.rate(), Rate::new(5, 16));
    }

    #[test]
    fn rejects_bad_values() {
        let e = "mem.banks=6".parse::<SimConfig>().unwrap_err();
        assert_eq!(e.message, "banks must be a power of two");
        assert!("core.n=0".parse::<SimConfig>().is_err());
        assert!("core.n=129".parse::<SimConfig>().is_err());
        assert!("mem.capacity=16MiB".parse::<SimConfig>().is_err());
        assert!("nic.gbps=11".parse::<SimConfig>().is_err());
        assert!("nic.gbps=10\nnic.clock_ghz=0.25".parse::<SimConfig>().is_err());
        assert!("cache.sets=4".parse::<SimConfig>().is_err());
        assert!("sim.arch=baseline\ncache.dram_latency=50".parse::<SimConfig>().is_err());
        assert!("sim.arch=baseline\ncache.hit_latency=11".parse::<SimConfig>().is_err());
        assert!("arb.kind=priority\narb.ranks=1,2".parse::<SimConfig>().is_err());
        let e = "core.n=2\nbogus.key=1".parse::<SimConfig>().unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = "core.n=2\ncore.n=3".parse::<SimConfig>().unwrap_err();
        assert!(e.message.contains("already set"));
    }

    #[test]
    fn workload_keys() {
        let cfg: SimConfig = "workload.kind=pc\nworkload.producers=2\nworkload.consumers=2\nworkload.queues=2\nworkload.capacity=4\nworkload.items=8"
            .parse()
            .unwrap();
        let WorkloadSpec::ProducerConsumer { layout, racy } = &cfg.workload else { panic!() };
        assert_eq!(*layout, PcLayout::new(2, 2, 2, 4, 8));
        assert!(!racy);
        let built = cfg.build_workload().unwrap();
        assert_eq!(built.programs.len(), 4);
        assert_eq!(built.watchpoints.len(), 2);

        assert!("workload.loads=5".parse::<SimConfig>().is_err());
        let cfg: SimConfig = "workload.kind=hot\nworkload.loads=5".parse().unwrap();
        assert_eq!(cfg.workload, WorkloadSpec::HotBank { loads: 5 });
        let cfg: SimConfig = "core.n=2\nworkload.kind=phil\nworkload.philosophers=3".parse().unwrap();
        assert!(cfg.build_workload().is_err());
    }
}
