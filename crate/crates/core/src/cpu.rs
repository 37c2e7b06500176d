//! Timing model of one stack-machine core, plus an untimed reference
//! interpreter used as its functional oracle.
//!
//! A core has exactly one instruction in flight. Non-memory instructions
//! retire in one cycle. LOAD, STORE and TAS pop their operands and issue a
//! request on the cycle they execute, then hold the core in `WaitingMem`
//! until the matching response is delivered; the instruction retires on the
//! cycle the response arrives.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::isa::{alu, stack_effect, Instruction, Opcode, Program};
use crate::memory::{AccessKind, Cycle, MemoryRequest, MemoryResponse, RequesterId};

pub const DEFAULT_STACK_DEPTH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultReason {
    StackUnderflow { pc: u32 },
    StackOverflow { pc: u32 },
    PcOutOfRange { pc: u32 },
    AddressOutOfRange { pc: u32, address: u32 },
}

impl fmt::Display for FaultReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultReason::StackUnderflow { pc } => write!(f, "stack underflow at pc {pc}"),
            FaultReason::StackOverflow { pc } => write!(f, "stack overflow at pc {pc}"),
            FaultReason::PcOutOfRange { pc } => write!(f, "pc {pc} out of range"),
            FaultReason::AddressOutOfRange { pc, address } => {
                write!(f, "address {address:#x} out of range at pc {pc}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreStatus {
    Running,
    WaitingMem,
    Halted,
    Faulted(FaultReason),
}

impl CoreStatus {
    pub fn is_done(self) -> bool {
        matches!(self, CoreStatus::Halted | CoreStatus::Faulted(_))
    }
}

#[derive(Debug, Clone)]
pub struct CoreState {
    pub core_id: RequesterId,
    pub pc: u32,
    pub stack: Vec<u32>,
    pub max_depth: usize,
    pub status: CoreStatus,
    pub pending: Option<MemoryRequest>,
    pub retired: u64,
    pub stall_cycles: u64,
}

impl CoreState {
    /// A core poised at `program`'s entry. Empty programs start halted.
    pub fn new(core_id: RequesterId, program: &Program, max_depth: usize) -> Self {
        let status = if program.is_empty() { CoreStatus::Halted } else { CoreStatus::Running };
        CoreState {
            core_id,
            pc: program.entry,
            stack: Vec::new(),
            max_depth,
            status,
            pending: None,
            retired: 0,
            stall_cycles: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreEvent {
    Retired,
    Stalled,
    Halted,
    Faulted(FaultReason),
    /// The core was already halted or faulted.
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreTickOutcome {
    pub new_request: Option<MemoryRequest>,
    pub event: CoreEvent,
}

impl CoreTickOutcome {
    fn event(event: CoreEvent) -> Self {
        CoreTickOutcome { new_request: None, event }
    }
}

/// Advances one core by one cycle.
///
/// `response` must be the completion of `state.pending`, delivered on the
/// cycle it completes. `memory_words` bounds the addresses the core may
/// issue; anything beyond faults the core.
pub fn core_tick(
    state: &mut CoreState,
    program: &Program,
    response: Option<MemoryResponse>,
    cycle: Cycle,
    memory_words: u32,
) -> CoreTickOutcome {
    match state.status {
        CoreStatus::Halted | CoreStatus::Faulted(_) => CoreTickOutcome::event(CoreEvent::Idle),
        CoreStatus::WaitingMem => match response {
            Some(resp) => {
                let pending = state.pending.take().expect("WaitingMem core without pending request");
                debug_assert_eq!(resp.requester, state.core_id);
                if matches!(pending.kind, AccessKind::Load | AccessKind::Tas) {
                    state.stack.push(resp.data.unwrap_or(0));
                }
                state.pc += 1;
                state.retired += 1;
                state.status = CoreStatus::Running;
                CoreTickOutcome::event(CoreEvent::Retired)
            }
            None => {
                state.stall_cycles += 1;
                CoreTickOutcome::event(CoreEvent::Stalled)
            }
        },
        CoreStatus::Running => execute(state, program, cycle, memory_words),
    }
}

fn fault(state: &mut CoreState, reason: FaultReason) -> CoreTickOutcome {
    state.status = CoreStatus::Faulted(reason);
    CoreTickOutcome::event(CoreEvent::Faulted(reason))
}

fn execute(state: &mut CoreState, program: &Program, cycle: Cycle, memory_words: u32) -> CoreTickOutcome {
    let pc = state.pc;
    let Some(&inst) = program.code.get(pc as usize) else {
        return fault(state, FaultReason::PcOutOfRange { pc });
    };
    let effect = stack_effect(&inst);
    let depth = state.stack.len();
    if depth < usize::from(effect.pops) {
        return fault(state, FaultReason::StackUnderflow { pc });
    }
    if depth - usize::from(effect.pops) + usize::from(effect.pushes) > state.max_depth {
        return fault(state, FaultReason::StackOverflow { pc });
    }

    if inst.opcode.is_memory() {
        return issue(state, inst, cycle, memory_words);
    }

    let stack = &mut state.stack;
    let mut next_pc = pc + 1;
    match inst.opcode {
        Opcode::Nop => {}
        Opcode::Push => stack.push(inst.operand.unwrap_or(0)),
        Opcode::Pop => {
            stack.pop();
        }
        Opcode::Dup => stack.push(stack[depth - 1]),
        Opcode::Swap => stack.swap(depth - 1, depth - 2),
        Opcode::Over => stack.push(stack[depth - 2]),
        Opcode::Not => stack[depth - 1] = !stack[depth - 1],
        Opcode::Jmp => next_pc = inst.operand.unwrap_or(0),
        Opcode::Brz => {
            if stack.pop() == Some(0) {
                next_pc = inst.operand.unwrap_or(0);
            }
        }
        Opcode::Halt => {
            state.retired += 1;
            state.status = CoreStatus::Halted;
            return CoreTickOutcome::event(CoreEvent::Halted);
        }
        op => {
            let top = stack.pop().unwrap_or(0);
            let second = stack.pop().unwrap_or(0);
            stack.push(alu(op, second, top).expect("binary ALU opcode"));
        }
    }
    state.pc = next_pc;
    state.retired += 1;
    CoreTickOutcome::event(CoreEvent::Retired)
}

fn issue(state: &mut CoreState, inst: Instruction, cycle: Cycle, memory_words: u32) -> CoreTickOutcome {
    let depth = state.stack.len();
    // STORE keeps the value on top of the address.
    let address = match inst.opcode {
        Opcode::Store => state.stack[depth - 2],
        _ => state.stack[depth - 1],
    };
    if address >= memory_words {
        return fault(state, FaultReason::AddressOutOfRange { pc: state.pc, address });
    }
    let id = state.core_id;
    let request = match inst.opcode {
        Opcode::Load => MemoryRequest::load(id, address, cycle),
        Opcode::Tas => MemoryRequest::tas(id, address, cycle),
        _ => MemoryRequest::store(id, address, state.stack[depth - 1], cycle),
    };
    let pops = usize::from(stack_effect(&inst).pops);
    state.stack.truncate(depth - pops);
    state.status = CoreStatus::WaitingMem;
    state.pending = Some(request.clone());
    state.stall_cycles += 1;
    CoreTickOutcome { new_request: Some(request), event: CoreEvent::Stalled }
}

/// Final state of an untimed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOutcome {
    pub stack: Vec<u32>,
    /// Nonzero words only.
    pub memory: BTreeMap<u32, u32>,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("no halt within {steps} steps")]
    NonTermination { steps: u64 },
    #[error("fault: {reason}")]
    Fault { reason: FaultReason, state: RefOutcome },
}

/// Executes `program` to completion with zero-latency memory.
///
/// Memory is `memory_words` words, initialized from `memory_image` and then
/// the program's own data image. Faults leave the stack as it was before
/// the faulting instruction.
pub fn reference_execute(
    program: &Program,
    memory_image: &BTreeMap<u32, u32>,
    memory_words: u32,
    max_depth: usize,
    max_steps: u64,
) -> Result<RefOutcome, RefError> {
    let mut mem: BTreeMap<u32, u32> = memory_image.clone();
    for &(a, v) in &program.data_image {
        mem.insert(a, v);
    }
    let mut stack: Vec<u32> = Vec::new();
    let mut pc = program.entry as usize;
    let mut steps = 0u64;

    let finish = |stack: Vec<u32>, mem: BTreeMap<u32, u32>, steps| RefOutcome {
        stack,
        memory: mem.into_iter().filter(|(_, v)| *v != 0).collect(),
        steps,
    };

    if program.code.is_empty() {
        return Ok(finish(stack, mem, 0));
    }

    loop {
        if steps >= max_steps {
            return Err(RefError::NonTermination { steps });
        }
        let pc32 = pc as u32;
        let Some(inst) = program.code.get(pc) else {
            return Err(RefError::Fault { reason: FaultReason::PcOutOfRange { pc: pc32 }, state: finish(stack, mem, steps) });
        };

        // Operand slots by position from the top, before anything is popped.
        let need = |n: usize| stack.len() >= n;
        let underflow = match inst.opcode {
            Opcode::Nop | Opcode::Push | Opcode::Jmp | Opcode::Halt => false,
            Opcode::Pop | Opcode::Dup | Opcode::Not | Opcode::Brz | Opcode::Load | Opcode::Tas => !need(1),
            _ => !need(2),
        };
        if underflow {
            return Err(RefError::Fault { reason: FaultReason::StackUnderflow { pc: pc32 }, state: finish(stack, mem, steps) });
        }
        let grows = matches!(inst.opcode, Opcode::Push | Opcode::Dup | Opcode::Over);
        if grows && stack.len() + 1 > max_depth {
            return Err(RefError::Fault { reason: FaultReason::StackOverflow { pc: pc32 }, state: finish(stack, mem, steps) });
        }

        steps += 1;
        let mut next = pc + 1;
        match inst.opcode {
            Opcode::Nop => {}
            Opcode::Halt => return Ok(finish(stack, mem, steps)),
            Opcode::Push => stack.push(inst.operand.unwrap_or(0)),
            Opcode::Pop => {
                stack.pop();
            }
            Opcode::Dup => {
                let v = *stack.last().unwrap();
                stack.push(v);
            }
            Opcode::Over => {
                let v = stack[stack.len() - 2];
                stack.push(v);
            }
            Opcode::Swap => {
                let n = stack.len();
                stack.swap(n - 1, n - 2);
            }
            Opcode::Not => {
                let v = stack.pop().unwrap();
                stack.push(!v);
            }
            Opcode::Jmp => next = inst.operand.unwrap_or(0) as usize,
            Opcode::Brz => {
                if stack.pop().unwrap() == 0 {
                    next = inst.operand.unwrap_or(0) as usize;
                }
            }
            Opcode::Load | Opcode::Tas | Opcode::Store => {
                let n = stack.len();
                let addr = if inst.opcode == Opcode::Store { stack[n - 2] } else { stack[n - 1] };
                if addr >= memory_words {
                    steps -= 1;
                    return Err(RefError::Fault {
                        reason: FaultReason::AddressOutOfRange { pc: pc32, address: addr },
                        state: finish(stack, mem, steps),
                    });
                }
                match inst.opcode {
                    Opcode::Load => {
                        stack.pop();
                        stack.push(mem.get(&addr).copied().unwrap_or(0));
                    }
                    Opcode::Tas => {
                        stack.pop();
                        let old = mem.insert(addr, 1).unwrap_or(0);
                        stack.push(old);
                    }
                    _ => {
                        let value = stack.pop().unwrap();
                        stack.pop();
                        mem.insert(addr, value);
                    }
                }
            }
            op => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                stack.push(alu(op, a, b).expect("binary ALU opcode"));
            }
        }
        pc = next;
    }
}
