use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::{assemble, Program};

use super::WorkloadError;

/// Address of the self-pointing word that core `core` chases.
///
/// Hot: every core on bank 0. Disjoint: core `i` alone on bank `i mod banks`.
pub fn chase_address(core: u32, n_banks: u32, hot: bool) -> u32 {
    if hot {
        core * n_banks
    } else {
        core
    }
}

/// Back-to-back dependent loads of a word that contains its own address,
/// so each LOAD's result is the next LOAD's address and the core issues a
/// new request every `1 + latency` cycles.
pub fn pointer_chase(n_cores: u32, n_banks: u32, loads: u32, hot: bool, memory_words: u32) -> Result<Vec<Program>, WorkloadError> {
    let last = u64::from(chase_address(n_cores.saturating_sub(1), n_banks, hot));
    if last >= u64::from(memory_words) {
        return Err(WorkloadError::LayoutOverflow { needed: last + 1, memory_words });
    }
    (0..n_cores)
        .map(|c| {
            let a = chase_address(c, n_banks, hot);
            let mut s = format!(".word {a} {a}\n    PUSH {a}\n");
            for _ in 0..loads {
                s.push_str("    LOAD\n");
            }
            s.push_str("    HALT\n");
            assemble(&s).map_err(WorkloadError::from)
        })
        .collect()
}

/// Uniformly random loads over `[base, base + working_set)`. Each core gets
/// its own stream derived from `seed`.
pub fn uniform_random(
    n_cores: u32,
    accesses: u32,
    base: u32,
    working_set: u32,
    seed: u64,
    memory_words: u32,
) -> Result<Vec<Program>, WorkloadError> {
    if working_set == 0 {
        return Err(WorkloadError::Invalid("working set must be nonzero".into()));
    }
    let end = u64::from(base) + u64::from(working_set);
    if end > u64::from(memory_words) {
        return Err(WorkloadError::LayoutOverflow { needed: end, memory_words });
    }
    (0..n_cores)
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ u64::from(c));
            let mut s = String::new();
            for _ in 0..accesses {
                let addr = base + rng.gen_range(0..working_set);
                let _ = writeln!(s, "    PUSH {addr}\n    LOAD\n    POP");
            }
            s.push_str("    HALT\n");
            assemble(&s).map_err(WorkloadError::from)
        })
        .collect()
}
