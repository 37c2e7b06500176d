use std::collections::BTreeSet;
use std::fmt;

use super::{stack_effect, Opcode, Program};

/// A static problem found in a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    MalformedInstruction { index: usize },
    TargetOutOfRange { index: usize, target: u32 },
    EntryOutOfRange { entry: u32, len: usize },
    DuplicateDataAddress { address: u32 },
    DataAddressOutOfRange { address: u32, memory_words: u32 },
    StackUnderflow { index: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MalformedInstruction { index } => {
                write!(f, "operand does not match opcode arity at index {index}")
            }
            Diagnostic::TargetOutOfRange { index, target } => {
                write!(f, "target out of range at index {index} (target {target})")
            }
            Diagnostic::EntryOutOfRange { entry, len } => {
                write!(f, "entry {entry} out of range for {len} instructions")
            }
            Diagnostic::DuplicateDataAddress { address } => {
                write!(f, "duplicate data address {address:#x}")
            }
            Diagnostic::DataAddressOutOfRange { address, memory_words } => {
                write!(f, "data address {address:#x} outside {memory_words}-word memory")
            }
            Diagnostic::StackUnderflow { index } => write!(f, "stack underflow at index {index}"),
        }
    }
}

/// Checks program invariants without a memory bound.
pub fn validate(program: &Program) -> Vec<Diagnostic> {
    check(program, None)
}

/// Like [`validate`], additionally requiring every data address to fit in a
/// memory of `memory_words` words.
pub fn validate_for_memory(program: &Program, memory_words: u32) -> Vec<Diagnostic> {
    check(program, Some(memory_words))
}

fn check(program: &Program, memory_words: Option<u32>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let len = program.code.len();

    for (index, inst) in program.code.iter().enumerate() {
        if !inst.is_well_formed() {
            diags.push(Diagnostic::MalformedInstruction { index });
        }
        if let Some(target) = inst.target() {
            if target as usize >= len {
                diags.push(Diagnostic::TargetOutOfRange { index, target });
            }
        }
    }

    // An empty program is a degenerate but valid image: the core halts at once.
    if !(len == 0 && program.entry == 0) && program.entry as usize >= len {
        diags.push(Diagnostic::EntryOutOfRange { entry: program.entry, len });
    }

    let mut seen = BTreeSet::new();
    for &(address, _) in &program.data_image {
        if !seen.insert(address) {
            diags.push(Diagnostic::DuplicateDataAddress { address });
        }
        if let Some(words) = memory_words {
            if address >= words {
                diags.push(Diagnostic::DataAddressOutOfRange { address, memory_words: words });
            }
        }
    }

    // Underflow along the branch-free prefix starting at the entry point.
    let mut depth: i64 = 0;
    for (index, inst) in program.code.iter().enumerate().skip(program.entry as usize) {
        let effect = stack_effect(inst);
        if depth < i64::from(effect.pops) {
            diags.push(Diagnostic::StackUnderflow { index });
            break;
        }
        depth += i64::from(effect.net());
        if matches!(inst.opcode, Opcode::Jmp | Opcode::Brz | Opcode::Halt) {
            break;
        }
    }

    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{assemble, Instruction};

    #[test]
    fn underflow_on_empty_stack() {
        let p = assemble("ADD\nHALT").unwrap();
        let d = validate(&p);
        assert_eq!(d, vec![Diagnostic::StackUnderflow { index: 0 }]);
        assert_eq!(d[0].to_string(), "stack underflow at index 0");
    }

    #[test]
    fn clean_program() {
        assert!(validate(&assemble("PUSH 1\nPUSH 2\nADD\nHALT").unwrap()).is_empty());
        assert!(validate(&Program::default()).is_empty());
    }

    #[test]
    fn branch_target_at_length_is_out_of_range() {
        let p = Program::new(vec![Instruction::push(0), Instruction::brz(2)]);
        let d = validate(&p);
        assert_eq!(d, vec![Diagnostic::TargetOutOfRange { index: 1, target: 2 }]);
        assert!(d[0].to_string().starts_with("target out of range"));
    }

    #[test]
    fn data_image_checks() {
        let p = assemble(".word 4 1\n.word 4 2\n.word 100 0\nHALT").unwrap();
        assert_eq!(validate(&p), vec![Diagnostic::DuplicateDataAddress { address: 4 }]);
        assert_eq!(
            validate_for_memory(&p, 64),
            vec![
                Diagnostic::DuplicateDataAddress { address: 4 },
                Diagnostic::DataAddressOutOfRange { address: 100, memory_words: 64 },
            ]
        );
    }

    #[test]
    fn entry_and_arity() {
        let p = Program {
            code: vec![Instruction { opcode: Opcode::Add, operand: Some(1) }],
            entry: 3,
            ..Default::default()
        };
        let d = validate(&p);
        assert!(d.contains(&Diagnostic::MalformedInstruction { index: 0 }));
        assert!(d.contains(&Diagnostic::EntryOutOfRange { entry: 3, len: 1 }));
    }

    #[test]
    fn analysis_stops_at_first_branch() {
        // Nothing past the first control transfer is analyzed.
        let p = assemble("PUSH 0\nBRZ next\nnext: ADD\nHALT").unwrap();
        assert!(validate(&p).is_empty());
    }
}
