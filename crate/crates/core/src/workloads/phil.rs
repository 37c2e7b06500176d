use std::fmt::Write as _;

use crate::isa::{assemble, Program};

use super::WorkloadError;

/// Fork locks and progress counters for the dining philosophers. Fork `i`
/// sits between philosophers `i` and `(i + 1) mod n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhilLayout {
    pub n_philosophers: u32,
    pub rounds: u32,
    pub base: u32,
}

impl PhilLayout {
    pub fn new(n_philosophers: u32, rounds: u32) -> Self {
        PhilLayout { n_philosophers, rounds, base: 0 }
    }

    pub fn fork(&self, i: u32) -> u32 {
        self.base + i
    }

    pub fn counter(&self, i: u32) -> u32 {
        self.base + self.n_philosophers + i
    }

    /// Forks used by philosopher `i`, in the order it takes them.
    ///
    /// The ordered variant always takes the lower-numbered fork first, which
    /// rules out a circular wait. The naive one takes left then right.
    pub fn fork_order(&self, i: u32, naive: bool) -> (u32, u32) {
        let left = i;
        let right = (i + 1) % self.n_philosophers;
        if naive {
            (left, right)
        } else {
            (left.min(right), left.max(right))
        }
    }

    pub fn end(&self) -> u32 {
        self.base + 2 * self.n_philosophers
    }
}

fn philosopher_source(layout: &PhilLayout, i: u32, naive: bool) -> String {
    let (first, second) = layout.fork_order(i, naive);
    let (first, second) = (layout.fork(first), layout.fork(second));
    let ctr = layout.counter(i);
    let rounds = layout.rounds;
    let mut s = String::new();
    let _ = writeln!(s, "; philosopher {i}: forks {first:#x} then {second:#x}");
    let _ = writeln!(s, "    PUSH 0\ntop: DUP\n    PUSH {rounds}\n    EQ\n    BRZ think\n    POP\n    HALT");
    // Failed grabs back off locally, by a per-core amount, so spinners
    // cannot saturate a bank and shut a fork holder out of its release.
    let iters = 2 + i;
    let _ = writeln!(s, "think: PUSH {first}\n    TAS\n    BRZ second");
    let _ = writeln!(s, "    PUSH {iters}\nwait1: PUSH 1\n    SUB\n    DUP\n    BRZ done1\n    JMP wait1\ndone1: POP\n    JMP think");
    let _ = writeln!(s, "second: PUSH {second}\n    TAS\n    BRZ eat");
    let _ = writeln!(s, "    PUSH {iters}\nwait2: PUSH 1\n    SUB\n    DUP\n    BRZ done2\n    JMP wait2\ndone2: POP\n    JMP second");
    let _ = writeln!(s, "eat: PUSH {ctr}\n    PUSH {ctr}\n    LOAD\n    PUSH 1\n    ADD\n    STORE");
    let _ = writeln!(s, "    PUSH {second}\n    PUSH 0\n    STORE\n    PUSH {first}\n    PUSH 0\n    STORE");
    let _ = writeln!(s, "    PUSH 1\n    ADD\n    JMP top");
    s
}

pub fn philosopher_sources(layout: &PhilLayout, naive: bool) -> Vec<String> {
    (0..layout.n_philosophers).map(|i| philosopher_source(layout, i, naive)).collect()
}

/// One program per philosopher. `naive` produces the deadlock-prone
/// left-then-right variant, kept only as a negative fixture.
pub fn gen_dining_philosophers(layout: &PhilLayout, memory_words: u32, naive: bool) -> Result<Vec<Program>, WorkloadError> {
    if layout.n_philosophers < 2 {
        return Err(WorkloadError::Invalid("need at least 2 philosophers".into()));
    }
    if u64::from(layout.end()) > u64::from(memory_words) {
        return Err(WorkloadError::LayoutOverflow { needed: u64::from(layout.end()), memory_words });
    }
    philosopher_sources(layout, naive)
        .iter()
        .map(|src| assemble(src).map_err(WorkloadError::from))
        .collect()
}
