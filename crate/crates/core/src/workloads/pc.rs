use std::fmt::Write as _;

use crate::isa::{assemble, Program};

use super::{Watchpoint, WorkloadError};

/// Words of queue bookkeeping before the slots: lock, head, tail, count.
const QUEUE_HEADER: u32 = 4;

/// Memory layout and role assignment for the bounded-buffer workload.
///
/// Producers occupy cores `0..n_producers`, consumers the cores right after
/// them. Both are mapped onto queues round-robin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcLayout {
    pub n_producers: u32,
    pub n_consumers: u32,
    pub n_queues: u32,
    pub capacity: u32,
    pub items_per_producer: u32,
    pub base: u32,
}

/// Addresses of one queue's region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueRegion {
    pub lock: u32,
    pub head: u32,
    pub tail: u32,
    pub count: u32,
    pub slots: u32,
}

impl PcLayout {
    pub fn new(n_producers: u32, n_consumers: u32, n_queues: u32, capacity: u32, items_per_producer: u32) -> Self {
        PcLayout { n_producers, n_consumers, n_queues, capacity, items_per_producer, base: 0 }
    }

    pub fn n_cores(&self) -> u32 {
        self.n_producers + self.n_consumers
    }

    pub fn queue_of_producer(&self, p: u32) -> u32 {
        p % self.n_queues
    }

    pub fn queue_of_consumer(&self, c: u32) -> u32 {
        c % self.n_queues
    }

    pub fn queue(&self, q: u32) -> QueueRegion {
        let b = self.base + q * (QUEUE_HEADER + self.capacity);
        QueueRegion { lock: b, head: b + 1, tail: b + 2, count: b + 3, slots: b + QUEUE_HEADER }
    }

    /// Items flowing through queue `q`.
    pub fn items_on_queue(&self, q: u32) -> u32 {
        (0..self.n_producers).filter(|&p| self.queue_of_producer(p) == q).count() as u32 * self.items_per_producer
    }

    /// Number of items consumer `c` takes before halting. A queue's items
    /// are split evenly among its consumers, remainder to the lowest ids.
    pub fn consumer_quota(&self, c: u32) -> u32 {
        let q = self.queue_of_consumer(c);
        let peers: Vec<u32> = (0..self.n_consumers).filter(|&k| self.queue_of_consumer(k) == q).collect();
        let total = self.items_on_queue(q);
        let k = peers.len() as u32;
        let rank = peers.iter().position(|&x| x == c).unwrap_or(0) as u32;
        total / k + u32::from(rank < total % k)
    }

    /// Output region of consumer `c`: a count word followed by the items.
    pub fn output_base(&self, c: u32) -> u32 {
        let mut addr = self.base + self.n_queues * (QUEUE_HEADER + self.capacity);
        for k in 0..c {
            addr += 1 + self.consumer_quota(k);
        }
        addr
    }

    /// One past the last word used.
    pub fn end(&self) -> u32 {
        self.output_base(self.n_consumers)
    }

    /// Tag written by producer `p` for its `seq`-th item (1-based).
    pub fn item(p: u32, seq: u32) -> u32 {
        (p << 16) + seq
    }

    pub fn watchpoints(&self) -> Vec<Watchpoint> {
        (0..self.n_queues)
            .map(|q| Watchpoint { address: self.queue(q).count, min: 0, max: self.capacity })
            .collect()
    }

    fn check(&self, memory_words: u32) -> Result<(), WorkloadError> {
        if self.n_queues == 0 {
            return Err(WorkloadError::Invalid("n_queues must be at least 1".into()));
        }
        if self.capacity == 0 {
            return Err(WorkloadError::Invalid("capacity must be at least 1".into()));
        }
        if self.items_per_producer >= 1 << 16 || self.n_producers >= 1 << 16 {
            return Err(WorkloadError::Invalid("item tags need producer and seq below 2^16".into()));
        }
        for q in 0..self.n_queues {
            let consumers = (0..self.n_consumers).filter(|&c| self.queue_of_consumer(c) == q).count();
            if self.items_on_queue(q) > 0 && consumers == 0 {
                return Err(WorkloadError::Invalid(format!("queue {q} has items but no consumer")));
            }
        }
        let end = u64::from(self.base)
            + u64::from(self.n_queues) * u64::from(QUEUE_HEADER + self.capacity)
            + u64::from(self.n_consumers)
            + u64::from(self.n_producers) * u64::from(self.items_per_producer);
        if end > u64::from(memory_words) {
            return Err(WorkloadError::LayoutOverflow { needed: end, memory_words });
        }
        Ok(())
    }
}

/// Local delay of `iters` loop trips that issues no memory traffic, so
/// pollers leave gaps on the banks they share with the lock holder.
fn backoff(out: &mut String, tag: &str, iters: u32) {
    let _ = writeln!(
        out,
        "    PUSH {iters}\nwait_{tag}: PUSH 1\n    SUB\n    DUP\n    BRZ done_{tag}\n    JMP wait_{tag}\ndone_{tag}: POP"
    );
}

/// Backoff trips for a core; distinct per core so pollers drift out of phase.
fn backoff_iters(core: u32) -> u32 {
    2 + core
}

/// Takes `lock` and jumps to `locked`, or backs off and returns to `poll`.
/// The racy variant replaces TAS with a separate load and store, leaving a
/// window between them.
fn acquire(out: &mut String, lock: u32, racy: bool, iters: u32) {
    if racy {
        let _ = writeln!(out, "acquire: PUSH {lock}\n    LOAD\n    BRZ take");
        backoff(out, "busy", iters);
        let _ = writeln!(out, "    JMP poll");
        let _ = writeln!(out, "take: PUSH {lock}\n    PUSH 1\n    STORE\n    JMP locked");
    } else {
        let _ = writeln!(out, "acquire: PUSH {lock}\n    TAS\n    BRZ locked");
        backoff(out, "busy", iters);
        let _ = writeln!(out, "    JMP poll");
    }
}

/// `[ptr_addr] := (mem[ptr_addr] + 1) wrapped at capacity`, stack-neutral.
fn advance_ring_pointer(out: &mut String, ptr: u32, capacity: u32) {
    let _ = writeln!(
        out,
        "    PUSH {ptr}\n    PUSH {ptr}\n    LOAD\n    PUSH 1\n    ADD\n    DUP\n    PUSH {capacity}\n    EQ\n    PUSH 1\n    SWAP\n    SUB\n    MUL\n    STORE"
    );
}

// Both roles poll `count` without the lock and only take the lock when there
// appears to be room (or an item), rechecking under the lock. A lock hold
// that moves nothing therefore implies another core just made progress,
// which rules out the livelock where a poller holding the lock keeps
// colliding with the one core that could unblock it.

fn producer_source(layout: &PcLayout, p: u32, racy: bool) -> String {
    let q = layout.queue(layout.queue_of_producer(p));
    let first = PcLayout::item(p, 1);
    let end = PcLayout::item(p, layout.items_per_producer + 1);
    let cap = layout.capacity;
    let iters = backoff_iters(p);
    let mut s = String::new();
    let _ = writeln!(s, "; producer {p} -> queue at {:#x}", q.lock);
    let _ = writeln!(s, "    PUSH {first}\ntop: DUP\n    PUSH {end}\n    EQ\n    BRZ poll\n    POP\n    HALT");
    let _ = writeln!(s, "poll: PUSH {}\n    LOAD\n    PUSH {cap}\n    LT\n    BRZ full", q.count);
    acquire(&mut s, q.lock, racy, iters);
    let _ = writeln!(s, "locked: PUSH {}\n    LOAD\n    PUSH {cap}\n    LT\n    BRZ release", q.count);
    let _ = writeln!(s, "    PUSH {}\n    LOAD\n    PUSH {}\n    ADD\n    OVER\n    STORE", q.tail, q.slots);
    advance_ring_pointer(&mut s, q.tail, cap);
    let _ = writeln!(s, "    PUSH {0}\n    PUSH {0}\n    LOAD\n    PUSH 1\n    ADD\n    STORE", q.count);
    let _ = writeln!(s, "    PUSH {}\n    PUSH 0\n    STORE\n    PUSH 1\n    ADD\n    JMP top", q.lock);
    let _ = writeln!(s, "release: PUSH {}\n    PUSH 0\n    STORE", q.lock);
    let _ = writeln!(s, "full: NOP");
    backoff(&mut s, "full", iters);
    let _ = writeln!(s, "    JMP poll");
    s
}

fn consumer_source(layout: &PcLayout, c: u32, racy: bool) -> String {
    let q = layout.queue(layout.queue_of_consumer(c));
    let quota = layout.consumer_quota(c);
    let out = layout.output_base(c);
    let cap = layout.capacity;
    let iters = backoff_iters(layout.n_producers + c);
    let mut s = String::new();
    let _ = writeln!(s, "; consumer {c} <- queue at {:#x}, quota {quota}", q.lock);
    let _ = writeln!(s, "    PUSH 0\ntop: DUP\n    PUSH {quota}\n    EQ\n    BRZ poll\n    POP\n    HALT");
    let _ = writeln!(s, "poll: PUSH {}\n    LOAD\n    BRZ empty", q.count);
    acquire(&mut s, q.lock, racy, iters);
    let _ = writeln!(s, "locked: PUSH {}\n    LOAD\n    BRZ release", q.count);
    let _ = writeln!(
        s,
        "    DUP\n    PUSH {}\n    ADD\n    PUSH {}\n    LOAD\n    PUSH {}\n    ADD\n    LOAD\n    STORE",
        out + 1,
        q.head,
        q.slots
    );
    advance_ring_pointer(&mut s, q.head, cap);
    let _ = writeln!(s, "    PUSH {0}\n    PUSH {0}\n    LOAD\n    PUSH 1\n    SUB\n    STORE", q.count);
    let _ = writeln!(s, "    PUSH {}\n    PUSH 0\n    STORE", q.lock);
    let _ = writeln!(s, "    PUSH 1\n    ADD\n    DUP\n    PUSH {out}\n    SWAP\n    STORE\n    JMP top");
    let _ = writeln!(s, "release: PUSH {}\n    PUSH 0\n    STORE", q.lock);
    let _ = writeln!(s, "empty: NOP");
    backoff(&mut s, "empty", iters);
    let _ = writeln!(s, "    JMP poll");
    s
}

/// Assembly text for every core of the workload, producers first.
pub fn producer_consumer_sources(layout: &PcLayout, racy: bool) -> Vec<String> {
    (0..layout.n_producers)
        .map(|p| producer_source(layout, p, racy))
        .chain((0..layout.n_consumers).map(|c| consumer_source(layout, c, racy)))
        .collect()
}

/// Builds one program per core. `racy` swaps the lock's TAS for a plain
/// load/store pair; it exists only as a fixture the verifier must catch.
pub fn gen_producer_consumer(layout: &PcLayout, memory_words: u32, racy: bool) -> Result<Vec<Program>, WorkloadError> {
    layout.check(memory_words)?;
    producer_consumer_sources(layout, racy)
        .iter()
        .map(|src| assemble(src).map_err(WorkloadError::from))
        .collect()
}
