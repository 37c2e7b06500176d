//! Network ingress: a token-bucket NIC that turns a line rate into DMA word
//! writes competing with the cores for banks.

use std::collections::VecDeque;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::memory::{Cycle, MemoryDump, MemoryRequest, RequesterId};

/// Exact rational used for rates. Per-cycle rates never exceed 1.
pub type Rate = Ratio<u64>;

/// Converts a line rate into words per cycle:
/// `(gbps / 8 / word_bytes) / clock_ghz`.
pub fn rate_from_bandwidth(bandwidth_gbps: Rate, clock_ghz: Rate, word_bytes: u64) -> Rate {
    assert!(!clock_ghz.is_zero() && word_bytes > 0);
    bandwidth_gbps / Rate::from_integer(8 * word_bytes) / clock_ghz
}

/// Parses a non-negative decimal such as `10`, `2.5` or `0.125` exactly.
pub fn parse_decimal(s: &str) -> Option<Rate> {
    let s = s.trim();
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 12 {
        return None;
    }
    let int_v: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let scale = 10u64.checked_pow(frac.len() as u32)?;
    Some(Rate::from_integer(int_v) + Rate::new(frac_v, scale))
}

/// Ring of words the NIC writes into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmaRegion {
    pub base: u32,
    pub length: u32,
}

#[derive(Debug, Clone)]
pub struct NicState {
    pub requester: RequesterId,
    pub rate: Rate,
    pub accumulator: Rate,
    pub region: DmaRegion,
    pub next_address: u32,
    /// Rejections after which the head write is dropped; `None` never drops.
    pub retry_window: Option<u32>,
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    queue: VecDeque<MemoryRequest>,
    head_rejections: u32,
}

impl NicState {
    pub fn new(requester: RequesterId, rate: Rate, region: DmaRegion, retry_window: Option<u32>) -> Self {
        assert!(rate <= Rate::one(), "NIC rate above one word per cycle");
        assert!(region.length > 0);
        NicState {
            requester,
            rate,
            accumulator: Rate::zero(),
            region,
            next_address: region.base,
            retry_window,
            injected: 0,
            delivered: 0,
            dropped: 0,
            queue: VecDeque::new(),
            head_rejections: 0,
        }
    }

    /// Accumulates one cycle of credit and emits at most one DMA write.
    ///
    /// The payload is the write's 1-based sequence number, so every delivered
    /// word is nonzero and shows up in memory dumps.
    pub fn nic_tick(&mut self, cycle: Cycle) -> Option<MemoryRequest> {
        self.accumulator += self.rate;
        if self.accumulator < Rate::one() {
            return None;
        }
        self.accumulator -= Rate::one();
        self.injected += 1;
        let req = MemoryRequest::dma(self.requester, self.next_address, self.injected as u32, cycle);
        let offset = self.next_address - self.region.base + 1;
        self.next_address = self.region.base + offset % self.region.length;
        self.queue.push_back(req.clone());
        Some(req)
    }

    /// The write currently presented to the crossbar.
    pub fn head(&self) -> Option<&MemoryRequest> {
        self.queue.front()
    }

    pub fn queued(&self) -> u64 {
        self.queue.len() as u64
    }

    /// Removes the head after it was granted.
    pub fn granted(&mut self) -> Option<MemoryRequest> {
        self.head_rejections = 0;
        let head = self.queue.pop_front();
        if head.is_some() {
            self.delivered += 1;
        }
        head
    }

    /// Records a lost arbitration for the head; drops it once the retry
    /// window is exhausted. Returns true when a write was dropped.
    pub fn rejected(&mut self) -> bool {
        self.head_rejections += 1;
        match self.retry_window {
            Some(w) if self.head_rejections >= w => {
                self.queue.pop_front();
                self.dropped += 1;
                self.head_rejections = 0;
                true
            }
            _ => false,
        }
    }

    /// `injected = delivered + queued + dropped`.
    pub fn conserved(&self) -> bool {
        self.injected == self.delivered + self.queued() + self.dropped
    }

    /// Checks the DMA ring in `dump` against a loss-free in-order delivery
    /// of `delivered` writes: slot `k` holds the newest sequence number
    /// congruent to `k`. Only meaningful when nothing was dropped.
    pub fn region_matches(&self, dump: &MemoryDump) -> bool {
        let len = u64::from(self.region.length);
        (0..len).all(|k| {
            let expected = if k < self.delivered {
                // newest seq s (0-based) with s % len == k and s < delivered
                let s = k + ((self.delivered - 1 - k) / len) * len;
                s + 1
            } else {
                0
            };
            u64::from(dump.get(self.region.base + k as u32)) == expected
        })
    }

    /// Number of nonzero words currently in the ring.
    pub fn visible_words(&self, dump: &MemoryDump) -> u64 {
        (0..self.region.length).filter(|k| dump.get(self.region.base + k) != 0).count() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u64, d: u64) -> Rate {
        Rate::new(n, d)
    }

    #[test]
    fn bandwidth_conversion() {
        let one = Rate::from_integer(1);
        assert_eq!(rate_from_bandwidth(Rate::from_integer(10), one, 4), r(5, 16));
        assert_eq!(rate_from_bandwidth(Rate::from_integer(10), one, 4), r(3125, 10000));
        assert_eq!(rate_from_bandwidth(one, one, 4), r(3125, 100000));
        assert_eq!(rate_from_bandwidth(Rate::from_integer(8), Rate::from_integer(2), 4), r(1, 8));
        // Halving the clock doubles the per-cycle work.
        let fast = rate_from_bandwidth(Rate::from_integer(8), Rate::from_integer(2), 4);
        let slow = rate_from_bandwidth(Rate::from_integer(8), Rate::from_integer(1), 4);
        assert_eq!(slow / fast, Rate::from_integer(2));
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("10"), Some(Rate::from_integer(10)));
        assert_eq!(parse_decimal("2.5"), Some(r(5, 2)));
        assert_eq!(parse_decimal("0.3125"), Some(r(5, 16)));
        assert_eq!(parse_decimal(".5"), Some(r(1, 2)));
        assert_eq!(parse_decimal("-1"), None);
        assert_eq!(parse_decimal("1e3"), None);
        assert_eq!(parse_decimal("."), None);
    }

    fn region() -> DmaRegion {
        DmaRegion { base: 100, length: 4 }
    }

    #[test]
    fn half_rate_emits_every_second_tick() {
        let mut nic = NicState::new(4, r(1, 2), region(), None);
        let ticks: Vec<u64> = (1..=8).filter(|&t| nic.nic_tick(t).is_some()).collect();
        assert_eq!(ticks, vec![2, 4, 6, 8]);
    }

    #[test]
    fn zero_rate_is_silent() {
        let mut nic = NicState::new(4, Rate::zero(), region(), None);
        assert!((0..1000).all(|t| nic.nic_tick(t).is_none()));
    }

    #[test]
    fn ten_gbps_over_32_cycles() {
        let mut nic = NicState::new(4, r(5, 16), region(), None);
        let n = (0..32).filter(|&t| nic.nic_tick(t).is_some()).count();
        assert_eq!(n, 10);
        assert!(nic.accumulator < Rate::one());
    }

    #[test]
    fn ring_wraps_and_payloads_are_sequence_numbers() {
        let mut nic = NicState::new(4, Rate::one(), region(), None);
        let reqs: Vec<_> = (0..6).map(|t| nic.nic_tick(t).unwrap()).collect();
        let addrs: Vec<u32> = reqs.iter().map(|q| q.address).collect();
        assert_eq!(addrs, vec![100, 101, 102, 103, 100, 101]);
        let data: Vec<u32> = reqs.iter().map(|q| q.data.unwrap()).collect();
        assert_eq!(data, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn retry_window_drops_and_conserves() {
        let mut nic = NicState::new(4, Rate::one(), region(), Some(3));
        nic.nic_tick(0);
        nic.nic_tick(1);
        assert!(!nic.rejected());
        assert!(!nic.rejected());
        assert!(nic.rejected());
        assert_eq!((nic.dropped, nic.queued()), (1, 1));
        assert_eq!(nic.granted().unwrap().data, Some(2));
        assert!(nic.conserved());
    }

    #[test]
    fn region_check() {
        let mut nic = NicState::new(4, Rate::one(), region(), None);
        let mut dump = MemoryDump::default();
        for t in 0..6 {
            let q = nic.nic_tick(t).unwrap();
            nic.granted();
            dump.words.insert(q.address, q.data.unwrap());
        }
        assert!(nic.region_matches(&dump));
        assert_eq!(nic.visible_words(&dump), 4);
        dump.words.insert(102, 99);
        assert!(!nic.region_matches(&dump));
    }
}
