//! Memory models: the word-interleaved SRAM banks of the cacheless design and
//! the direct-mapped per-core cache used by the DRAM baseline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Index of a crossbar requester. Cores are `0..n`, the NIC is `n`.
pub type RequesterId = usize;

pub type Cycle = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessKind {
    Load,
    Store,
    Tas,
    Dma,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryRequest {
    pub requester: RequesterId,
    pub kind: AccessKind,
    pub address: u32,
    /// Present for `Store` and `Dma` only.
    pub data: Option<u32>,
    pub issue_cycle: Cycle,
}

impl MemoryRequest {
    pub fn load(requester: RequesterId, address: u32, issue_cycle: Cycle) -> Self {
        MemoryRequest { requester, kind: AccessKind::Load, address, data: None, issue_cycle }
    }

    pub fn store(requester: RequesterId, address: u32, value: u32, issue_cycle: Cycle) -> Self {
        MemoryRequest { requester, kind: AccessKind::Store, address, data: Some(value), issue_cycle }
    }

    pub fn tas(requester: RequesterId, address: u32, issue_cycle: Cycle) -> Self {
        MemoryRequest { requester, kind: AccessKind::Tas, address, data: None, issue_cycle }
    }

    pub fn dma(requester: RequesterId, address: u32, value: u32, issue_cycle: Cycle) -> Self {
        MemoryRequest { requester, kind: AccessKind::Dma, address, data: Some(value), issue_cycle }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryResponse {
    pub requester: RequesterId,
    /// Present for `Load` and `Tas` only.
    pub data: Option<u32>,
    pub issue_cycle: Cycle,
    pub grant_cycle: Cycle,
    pub complete_cycle: Cycle,
}

impl MemoryResponse {
    /// Cycles from issue to completion.
    pub fn latency(&self) -> Cycle {
        self.complete_cycle - self.issue_cycle
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("address {address:#x} outside {words}-word memory")]
    AddressOutOfRange { address: u32, words: u32 },
    #[error("banks must be a power of two (got {0})")]
    BankCountNotPowerOfTwo(usize),
    #[error("capacity of {words} words does not divide evenly into {banks} banks")]
    UnevenBanks { words: u32, banks: usize },
}

/// Word-interleaved bank selection: `address mod banks`.
///
/// `banks` must be a power of two.
pub fn bank_of(address: u32, banks: usize) -> usize {
    debug_assert!(banks.is_power_of_two());
    address as usize & (banks - 1)
}

/// SRAM split into `M` banks, each able to serve one access per cycle.
#[derive(Debug, Clone)]
pub struct BankedMemory {
    banks: Vec<Vec<u32>>,
    words: u32,
    latency: Cycle,
}

impl BankedMemory {
    pub fn new(words: u32, n_banks: usize, latency: Cycle) -> Result<Self, MemoryError> {
        if !n_banks.is_power_of_two() {
            return Err(MemoryError::BankCountNotPowerOfTwo(n_banks));
        }
        if !(words as usize).is_multiple_of(n_banks) || (words as usize) < n_banks {
            return Err(MemoryError::UnevenBanks { words, banks: n_banks });
        }
        let per_bank = words as usize / n_banks;
        Ok(BankedMemory { banks: vec![vec![0; per_bank]; n_banks], words, latency })
    }

    pub fn words(&self) -> u32 {
        self.words
    }

    pub fn n_banks(&self) -> usize {
        self.banks.len()
    }

    pub fn latency(&self) -> Cycle {
        self.latency
    }

    pub fn bank_of(&self, address: u32) -> usize {
        bank_of(address, self.banks.len())
    }

    fn slot(&self, address: u32) -> Result<(usize, usize), MemoryError> {
        if address >= self.words {
            return Err(MemoryError::AddressOutOfRange { address, words: self.words });
        }
        let n = self.banks.len();
        Ok((bank_of(address, n), address as usize / n))
    }

    pub fn read(&self, address: u32) -> Result<u32, MemoryError> {
        let (b, off) = self.slot(address)?;
        Ok(self.banks[b][off])
    }

    pub fn write(&mut self, address: u32, value: u32) -> Result<(), MemoryError> {
        let (b, off) = self.slot(address)?;
        self.banks[b][off] = value;
        Ok(())
    }

    pub fn load_image(&mut self, image: &[(u32, u32)]) -> Result<(), MemoryError> {
        for &(addr, value) in image {
            self.write(addr, value)?;
        }
        Ok(())
    }

    /// Performs the data side of a request and returns the word it yields
    /// (`Load`, `Tas`) if any. TAS reads the old word and writes 1.
    pub fn apply(&mut self, request: &MemoryRequest) -> Result<Option<u32>, MemoryError> {
        let (b, off) = self.slot(request.address)?;
        let cell = &mut self.banks[b][off];
        Ok(match request.kind {
            AccessKind::Load => Some(*cell),
            AccessKind::Store | AccessKind::Dma => {
                *cell = request.data.unwrap_or(0);
                None
            }
            AccessKind::Tas => Some(std::mem::replace(cell, 1)),
        })
    }

    /// Serves a request granted on `grant_cycle`.
    ///
    /// The access takes effect in grant order; the response completes
    /// `latency` cycles after the grant.
    pub fn bank_access(&mut self, request: &MemoryRequest, grant_cycle: Cycle) -> Result<MemoryResponse, MemoryError> {
        let data = self.apply(request)?;
        Ok(MemoryResponse {
            requester: request.requester,
            data,
            issue_cycle: request.issue_cycle,
            grant_cycle,
            complete_cycle: grant_cycle + self.latency,
        })
    }

    pub fn dump(&self) -> MemoryDump {
        let n = self.banks.len();
        let mut words = BTreeMap::new();
        for (b, bank) in self.banks.iter().enumerate() {
            for (off, &w) in bank.iter().enumerate() {
                if w != 0 {
                    words.insert((off * n + b) as u32, w);
                }
            }
        }
        MemoryDump { words }
    }
}

/// Sparse snapshot of memory. Text form: one `addr value` pair per line in
/// zero-padded hex, sorted by address, zero words omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryDump {
    pub words: BTreeMap<u32, u32>,
}

impl MemoryDump {
    pub fn get(&self, address: u32) -> u32 {
        self.words.get(&address).copied().unwrap_or(0)
    }
}

impl fmt::Display for MemoryDump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (addr, value) in &self.words {
            writeln!(f, "{addr:08x} {value:08x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dump line {line}: {reason}")]
pub struct DumpParseError {
    pub line: usize,
    pub reason: String,
}

impl FromStr for MemoryDump {
    type Err = DumpParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = BTreeMap::new();
        for (i, line) in s.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| DumpParseError { line: line_no, reason: reason.to_string() };
            let mut parts = line.split_whitespace();
            let (Some(a), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected `addr value`"));
            };
            let addr = u32::from_str_radix(a, 16).map_err(|_| bad("bad address"))?;
            let value = u32::from_str_radix(v, 16).map_err(|_| bad("bad value"))?;
            if value != 0 {
                words.insert(addr, value);
            }
        }
        Ok(MemoryDump { words })
    }
}

/// Result of one cache lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheOutcome {
    pub hit: bool,
    pub latency: Cycle,
}

/// Direct-mapped, write-allocate, write-through cache. Tags only: data is
/// always read from and written through to the backing DRAM image.
#[derive(Debug, Clone)]
pub struct CacheModel {
    line_words: u32,
    sets: u32,
    hit_latency: Cycle,
    dram_latency: Cycle,
    tags: Vec<Option<u32>>,
    pub hits: u64,
    pub misses: u64,
}

impl CacheModel {
    pub fn new(line_words: u32, sets: u32, hit_latency: Cycle, dram_latency: Cycle) -> Self {
        assert!(line_words > 0 && sets > 0);
        CacheModel {
            line_words,
            sets,
            hit_latency,
            dram_latency,
            tags: vec![None; sets as usize],
            hits: 0,
            misses: 0,
        }
    }

    pub fn capacity_words(&self) -> u64 {
        u64::from(self.line_words) * u64::from(self.sets)
    }

    pub fn hit_latency(&self) -> Cycle {
        self.hit_latency
    }

    pub fn dram_latency(&self) -> Cycle {
        self.dram_latency
    }

    fn index_and_tag(&self, address: u32) -> (usize, u32) {
        let line = address / self.line_words;
        ((line % self.sets) as usize, line / self.sets)
    }

    /// Looks up `request`'s address, filling the line on a miss. Stores
    /// allocate just like loads.
    pub fn access(&mut self, request: &MemoryRequest) -> CacheOutcome {
        let (set, tag) = self.index_and_tag(request.address);
        let slot = &mut self.tags[set];
        if *slot == Some(tag) {
            self.hits += 1;
            CacheOutcome { hit: true, latency: self.hit_latency }
        } else {
            *slot = Some(tag);
            self.misses += 1;
            CacheOutcome { hit: false, latency: self.dram_latency }
        }
    }

    pub fn miss_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.misses as f64 / total as f64
        }
    }
}
