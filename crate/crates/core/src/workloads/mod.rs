//! Program generators for the bounded-buffer and dining-philosophers
//! problems, synthetic address streams, and post-run output checks.

mod pc;
mod phil;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::isa::AsmError;
use crate::memory::MemoryDump;

pub use pc::{gen_producer_consumer, producer_consumer_sources, PcLayout, QueueRegion};
pub use phil::{gen_dining_philosophers, philosopher_sources, PhilLayout};
pub use synthetic::{chase_address, pointer_chase, uniform_random};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("layout needs {needed} words but memory has {memory_words}")]
    LayoutOverflow { needed: u64, memory_words: u32 },
    #[error("invalid workload: {0}")]
    Invalid(String),
    #[error("generated program failed to assemble: {0}")]
    Asm(#[from] AsmError),
}

/// A word whose value must stay within `[min, max]` for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Watchpoint {
    pub address: u32,
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyFailure {
    DuplicateItem(u32),
    InventedItem(u32),
    LostItem(u32),
    OrderViolation { consumer: u32, producer: u32 },
    OutputOverrun { consumer: u32, count: u32 },
    CounterMismatch { philosopher: u32, value: u32 },
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyFailure::DuplicateItem(i) => write!(f, "duplicate item {i:#x}"),
            VerifyFailure::InventedItem(i) => write!(f, "invented item {i:#x}"),
            VerifyFailure::LostItem(i) => write!(f, "lost item {i:#x}"),
            VerifyFailure::OrderViolation { consumer, producer } => {
                write!(f, "consumer {consumer} saw producer {producer}'s items out of order")
            }
            VerifyFailure::OutputOverrun { consumer, count } => {
                write!(f, "consumer {consumer} reports {count} items, above its quota")
            }
            VerifyFailure::CounterMismatch { philosopher, value } => {
                write!(f, "philosopher {philosopher} counter is {value}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub failures: Vec<VerifyFailure>,
    /// Items delivered to consumers, or total philosopher rounds.
    pub work_units: u64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks a post-run dump of the bounded-buffer workload: no lost,
/// duplicated or invented items, and each consumer sees every producer's
/// items in production order. Items still sitting in a queue count as
/// delivered-in-flight, not lost.
pub fn verify_producer_consumer(dump: &MemoryDump, layout: &PcLayout) -> VerifyReport {
    let mut failures = Vec::new();
    let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
    let mut work_units = 0;

    for c in 0..layout.n_consumers {
        let out = layout.output_base(c);
        let count = dump.get(out);
        let quota = layout.consumer_quota(c);
        if count > quota {
            failures.push(VerifyFailure::OutputOverrun { consumer: c, count });
        }
        let mut last_seq: BTreeMap<u32, u32> = BTreeMap::new();
        let mut flagged: BTreeSet<u32> = BTreeSet::new();
        for k in 0..count.min(quota) {
            let item = dump.get(out + 1 + k);
            work_units += 1;
            *seen.entry(item).or_default() += 1;
            let (p, seq) = (item >> 16, item & 0xffff);
            if let Some(&prev) = last_seq.get(&p) {
                if seq <= prev && flagged.insert(p) {
                    failures.push(VerifyFailure::OrderViolation { consumer: c, producer: p });
                }
            }
            last_seq.insert(p, seq);
        }
    }

    for q in 0..layout.n_queues {
        let region = layout.queue(q);
        let count = dump.get(region.count).min(layout.capacity);
        let head = dump.get(region.head);
        for k in 0..count {
            let slot = (head + k) % layout.capacity;
            *seen.entry(dump.get(region.slots + slot)).or_default() += 1;
        }
    }

    let expected: BTreeSet<u32> = (0..layout.n_producers)
        .flat_map(|p| (1..=layout.items_per_producer).map(move |s| PcLayout::item(p, s)))
        .collect();
    for (&item, &n) in &seen {
        if !expected.contains(&item) {
            failures.push(VerifyFailure::InventedItem(item));
        } else if n > 1 {
            failures.push(VerifyFailure::DuplicateItem(item));
        }
    }
    for &item in &expected {
        if !seen.contains_key(&item) {
            failures.push(VerifyFailure::LostItem(item));
        }
    }

    VerifyReport { failures, work_units }
}

/// Every philosopher's progress counter must equal `rounds`.
pub fn verify_philosophers(dump: &MemoryDump, layout: &PhilLayout) -> VerifyReport {
    let mut failures = Vec::new();
    let mut work_units = 0;
    for i in 0..layout.n_philosophers {
        let value = dump.get(layout.counter(i));
        work_units += u64::from(value);
        if value != layout.rounds {
            failures.push(VerifyFailure::CounterMismatch { philosopher: i, value });
        }
    }
    VerifyReport { failures, work_units }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{validate, Opcode};

    #[test]
    fn generated_programs_validate() {
        let layout = PcLayout::new(3, 2, 2, 4, 5);
        for racy in [false, true] {
            for p in gen_producer_consumer(&layout, 4096, racy).unwrap() {
                assert!(validate(&p).is_empty(), "{:?}", validate(&p));
            }
        }
        for naive in [false, true] {
            for p in gen_dining_philosophers(&PhilLayout::new(5, 3), 4096, naive).unwrap() {
                assert!(validate(&p).is_empty());
            }
        }
        for hot in [false, true] {
            for p in pointer_chase(4, 8, 10, hot, 4096).unwrap() {
                assert!(validate(&p).is_empty());
            }
        }
        for p in uniform_random(2, 10, 0, 100, 7, 4096).unwrap() {
            assert!(validate(&p).is_empty());
        }
    }

    #[test]
    fn racy_fixture_has_no_tas() {
        let layout = PcLayout::new(1, 1, 1, 1, 1);
        let progs = gen_producer_consumer(&layout, 4096, true).unwrap();
        assert!(progs.iter().all(|p| p.code.iter().all(|i| i.opcode != Opcode::Tas)));
        let progs = gen_producer_consumer(&layout, 4096, false).unwrap();
        assert!(progs.iter().all(|p| p.code.iter().any(|i| i.opcode == Opcode::Tas)));
    }

    #[test]
    fn layout_regions_are_disjoint() {
        let l = PcLayout::new(3, 3, 2, 4, 5);
        let mut used = BTreeSet::new();
        for q in 0..l.n_queues {
            let r = l.queue(q);
            for a in [r.lock, r.head, r.tail, r.count].into_iter().chain(r.slots..r.slots + l.capacity) {
                assert!(used.insert(a));
            }
        }
        for c in 0..l.n_consumers {
            let base = l.output_base(c);
            for a in base..=base + l.consumer_quota(c) {
                assert!(used.insert(a));
            }
        }
        assert_eq!(used.len() as u32, l.end());
        // queue 0 gets producers 0 and 2, split over consumers 0 and 2
        assert_eq!(l.items_on_queue(0), 10);
        assert_eq!((l.consumer_quota(0), l.consumer_quota(2)), (5, 5));
        assert_eq!(l.consumer_quota(1), 5);
    }

    #[test]
    fn layout_errors() {
        assert!(matches!(
            gen_producer_consumer(&PcLayout::new(2, 2, 1, 4, 100), 64, false),
            Err(WorkloadError::LayoutOverflow { .. })
        ));
        assert!(matches!(
            gen_producer_consumer(&PcLayout::new(2, 1, 2, 4, 1), 4096, false),
            Err(WorkloadError::Invalid(_))
        ));
        assert!(gen_producer_consumer(&PcLayout::new(1, 1, 1, 0, 1), 4096, false).is_err());
        assert!(gen_dining_philosophers(&PhilLayout::new(1, 1), 4096, false).is_err());
        assert!(gen_dining_philosophers(&PhilLayout::new(8, 1), 10, false).is_err());
    }

    fn good_dump(layout: &PcLayout) -> MemoryDump {
        // 1 producer, 1 consumer: outputs are the items in order.
        let mut d = MemoryDump::default();
        let out = layout.output_base(0);
        d.words.insert(out, layout.items_per_producer);
        for s in 1..=layout.items_per_producer {
            d.words.insert(out + s, PcLayout::item(0, s));
        }
        d
    }

    #[test]
    fn verifier_accepts_and_rejects() {
        let layout = PcLayout::new(1, 1, 1, 1, 4);
        let dump = good_dump(&layout);
        let report = verify_producer_consumer(&dump, &layout);
        assert!(report.passed());
        assert_eq!(report.work_units, 4);

        let mut dup = dump.clone();
        let out = layout.output_base(0);
        dup.words.insert(out + 2, PcLayout::item(0, 1));
        let report = verify_producer_consumer(&dup, &layout);
        assert!(report.failures.contains(&VerifyFailure::DuplicateItem(1)));
        assert!(report.failures.contains(&VerifyFailure::LostItem(2)));
        assert!(report.failures.iter().any(|f| f.to_string().starts_with("duplicate item")));

        let mut swapped = dump.clone();
        swapped.words.insert(out + 1, PcLayout::item(0, 2));
        swapped.words.insert(out + 2, PcLayout::item(0, 1));
        let report = verify_producer_consumer(&swapped, &layout);
        assert_eq!(report.failures, vec![VerifyFailure::OrderViolation { consumer: 0, producer: 0 }]);

        let mut invented = dump.clone();
        invented.words.insert(out + 4, 0xdead);
        let report = verify_producer_consumer(&invented, &layout);
        assert!(report.failures.contains(&VerifyFailure::InventedItem(0xdead)));
    }

    #[test]
    fn queued_items_are_not_lost() {
        let layout = PcLayout::new(1, 1, 1, 4, 2);
        let mut dump = MemoryDump::default();
        let out = layout.output_base(0);
        dump.words.insert(out, 1);
        dump.words.insert(out + 1, PcLayout::item(0, 1));
        let q = layout.queue(0);
        dump.words.insert(q.head, 1);
        dump.words.insert(q.count, 1);
        dump.words.insert(q.slots + 1, PcLayout::item(0, 2));
        assert!(verify_producer_consumer(&dump, &layout).passed());
    }

    #[test]
    fn philosopher_counters() {
        let layout = PhilLayout::new(3, 2);
        let mut dump = MemoryDump::default();
        for i in 0..3 {
            dump.words.insert(layout.counter(i), 2);
        }
        assert!(verify_philosophers(&dump, &layout).passed());
        dump.words.insert(layout.counter(1), 1);
        assert_eq!(
            verify_philosophers(&dump, &layout).failures,
            vec![VerifyFailure::CounterMismatch { philosopher: 1, value: 1 }]
        );
    }
}
