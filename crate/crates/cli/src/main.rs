use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use xsim_core::engine::{
    load_program, metrics_json, parse_values, render_table, rows_csv, simulate, sweep, RunRow, RunStatus, SimConfig,
    SweepParam, WorkloadSpec,
};
use xsim_core::isa::{assemble, decode, disassemble, encode, validate};

/// Cycle-level simulator for a cacheless multicore with banked SRAM.
#[derive(Parser)]
#[command(name = "xsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into a binary program image.
    Asm {
        input: PathBuf,
        /// Output path; defaults to the input with a `.bin` extension.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print a binary program image as assembly.
    Disasm {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation and write metrics.json and metrics.csv.
    Run {
        #[command(flatten)]
        common: RunArgs,
        /// Also write the per-cycle arbitration trace to trace.txt.
        #[arg(long)]
        trace: bool,
        /// Also write the final memory image to dump.txt.
        #[arg(long)]
        dump: bool,
    },
    /// Run one simulation per value of a parameter and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        /// Parameter to vary: core.n, mem.banks, nic.gbps, arb.kind or sim.arch.
        #[arg(long)]
        vary: String,
        /// Comma-separated values or an inclusive range such as `1..8`.
        #[arg(long)]
        values: String,
    },
    /// Render a sweep.csv as an aligned text table.
    Report {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Program file (assembly or binary) to run instead of a generated workload.
    /// Repeat to give cores 0, 1, ... different programs.
    #[arg(long = "program")]
    programs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Outcome that maps to a nonzero exit code without being an error.
enum Done {
    Ok,
    BudgetExceeded,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::BudgetExceeded) => {
            eprintln!("xsim: cycle budget exceeded");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("xsim: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<Done> {
    match command {
        Command::Asm { input, out } => {
            let source = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let program = assemble(&source).map_err(|e| anyhow::anyhow!("{}: {e}", input.display()))?;
            if let Some(d) = validate(&program).first() {
                bail!("{}: {d}", input.display());
            }
            let out = out.unwrap_or_else(|| input.with_extension("bin"));
            write_atomic(&out, &encode(&program))?;
        }
        Command::Disasm { input, out } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let program = decode(&bytes).map_err(|e| anyhow::anyhow!("{}: {e}", input.display()))?;
            emit(out.as_deref(), &disassemble(&program))?;
        }
        Command::Run { common, trace, dump } => {
            let mut cfg = load_config(&common)?;
            cfg.trace |= trace;
            let output = simulate(&cfg)?;
            fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
            let row = RunRow::from_result("", &Ok(output.metrics.clone()));
            write_atomic(&common.out.join("metrics.json"), metrics_json(&output.metrics).as_bytes())?;
            write_atomic(&common.out.join("metrics.csv"), rows_csv(&[row]).as_bytes())?;
            if dump {
                write_atomic(&common.out.join("dump.txt"), output.dump.to_string().as_bytes())?;
            }
            if let Some(t) = &output.trace {
                write_atomic(&common.out.join("trace.txt"), t.as_bytes())?;
            }
            if output.metrics.status == RunStatus::BudgetExceeded {
                return Ok(Done::BudgetExceeded);
            }
        }
        Command::Sweep { common, vary, values } => {
            let param = SweepParam::from_name(&vary)?;
            let values = parse_values(&values)?;
            let cfg = load_config(&common)?;
            let cells = sweep(&cfg, param, &values);
            let rows: Vec<RunRow> = cells.iter().map(|c| RunRow::from_result(&c.value, &c.result)).collect();
            fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
            write_atomic(&common.out.join("sweep.csv"), rows_csv(&rows).as_bytes())?;
            for c in &cells {
                if let Err(e) = &c.result {
                    eprintln!("xsim: {} = {}: {e}", param.key(), c.value);
                }
            }
            let over = cells
                .iter()
                .any(|c| matches!(&c.result, Ok(m) if m.status == RunStatus::BudgetExceeded));
            if over {
                return Ok(Done::BudgetExceeded);
            }
        }
        Command::Report { input, out } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let table = render_table(&text).with_context(|| format!("parsing {}", input.display()))?;
            emit(out.as_deref(), &table)?;
        }
    }
    Ok(Done::Ok)
}

/// Reads the config, applies `--program` and `XSIM_SEED`, and loads program files.
fn load_config(args: &RunArgs) -> Result<SimConfig> {
    let (mut cfg, dir) = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg: SimConfig = text.parse().map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, dir)
        }
        None => (SimConfig::default(), PathBuf::new()),
    };
    if !args.programs.is_empty() {
        if cfg.workload != WorkloadSpec::Idle {
            bail!("give either --program or a configured workload, not both");
        }
        let programs = args.programs.iter().map(|p| load_program(p)).collect::<Result<Vec<_>, _>>()?;
        cfg.workload = WorkloadSpec::Programs(programs);
    }
    if let Ok(seed) = std::env::var("XSIM_SEED") {
        cfg.set("sim.seed", &seed)?;
    }
    cfg.resolve_programs(&dir)?;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes to a sibling temporary file, then renames it over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().context("output path has no file name")?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}
