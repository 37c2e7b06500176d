//! Cycle-level simulator of a cacheless chip multiprocessor: stack-machine
//! cores coupled to banked SRAM through a bufferless crossbar, with a
//! cache + DRAM baseline and a network DMA source for comparison.

pub mod cpu;
pub mod engine;
pub mod interconnect;
pub mod isa;
pub mod memory;
pub mod netio;
pub mod workloads;

pub use engine::{simulate, RunOutput, SimConfig};
