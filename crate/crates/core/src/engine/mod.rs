//! Deterministic cycle loop binding cores, crossbar, memory and NIC, plus
//! configuration, metrics, sweeps and output formats.

mod config;
mod metrics;
mod output;
mod sim;
mod sweep;

pub use config::{
    load_program, Arch, ArbiterConfig, BuiltWorkload, CacheConfig, ConfigError, NicConfig, SimConfig, StopRule,
    WorkloadCheck, WorkloadSpec, CONFIG_KEYS, DEFAULT_BUDGET, MIB, WORD_BYTES,
};
pub use metrics::{
    jain_index, BankMetrics, CacheMetrics, CoreMetrics, MemoryMetrics, Metrics, NicMetrics, RunStatus, WorkloadMetrics,
};
pub use output::{metrics_json, read_rows, render_table, rows_csv, RunRow, CSV_HEADER};
pub use sim::{simulate, RunOutput, Simulator};
pub use sweep::{cell_config, parse_values, sweep, SweepCell, SweepError, SweepParam, SWEEPABLE};
