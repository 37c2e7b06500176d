//! Stack-machine instruction set: opcodes, programs, text assembly, binary
//! encoding and a static validator.
//!
//! Words are 32 bits and memory is word-addressed. Every instruction encodes
//! to five bytes: one opcode byte followed by a little-endian 32-bit operand
//! (zero when the opcode takes none).

mod asm;
mod encode;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use asm::{assemble, disassemble, AsmError, AsmErrorKind};
pub use encode::{decode, encode, DecodeError, MAGIC};
pub use validate::{validate, validate_for_memory, Diagnostic};

/// Size in bytes of one encoded instruction.
pub const INSTRUCTION_BYTES: usize = 5;

/// The closed set of stack-machine operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Opcode {
    Nop = 0x00,
    Push = 0x01,
    Pop = 0x02,
    Dup = 0x03,
    Swap = 0x04,
    Over = 0x05,
    Add = 0x10,
    Sub = 0x11,
    Mul = 0x12,
    And = 0x13,
    Or = 0x14,
    Xor = 0x15,
    Not = 0x16,
    Shl = 0x17,
    Shr = 0x18,
    Eq = 0x19,
    Lt = 0x1a,
    Jmp = 0x20,
    Brz = 0x21,
    Load = 0x30,
    Store = 0x31,
    Tas = 0x32,
    Halt = 0xff,
}

impl Opcode {
    pub const ALL: [Opcode; 23] = [
        Opcode::Nop,
        Opcode::Push,
        Opcode::Pop,
        Opcode::Dup,
        Opcode::Swap,
        Opcode::Over,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Not,
        Opcode::Shl,
        Opcode::Shr,
        Opcode::Eq,
        Opcode::Lt,
        Opcode::Jmp,
        Opcode::Brz,
        Opcode::Load,
        Opcode::Store,
        Opcode::Tas,
        Opcode::Halt,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Nop => "NOP",
            Opcode::Push => "PUSH",
            Opcode::Pop => "POP",
            Opcode::Dup => "DUP",
            Opcode::Swap => "SWAP",
            Opcode::Over => "OVER",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::And => "AND",
            Opcode::Or => "OR",
            Opcode::Xor => "XOR",
            Opcode::Not => "NOT",
            Opcode::Shl => "SHL",
            Opcode::Shr => "SHR",
            Opcode::Eq => "EQ",
            Opcode::Lt => "LT",
            Opcode::Jmp => "JMP",
            Opcode::Brz => "BRZ",
            Opcode::Load => "LOAD",
            Opcode::Store => "STORE",
            Opcode::Tas => "TAS",
            Opcode::Halt => "HALT",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|op| op.mnemonic().eq_ignore_ascii_case(s))
    }

    pub fn from_byte(b: u8) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|op| *op as u8 == b)
    }

    /// Whether the opcode carries an immediate operand.
    pub fn has_operand(self) -> bool {
        matches!(self, Opcode::Push | Opcode::Jmp | Opcode::Brz)
    }

    pub fn is_branch(self) -> bool {
        matches!(self, Opcode::Jmp | Opcode::Brz)
    }

    /// LOAD, STORE and TAS are the only instructions that reach shared memory.
    pub fn is_memory(self) -> bool {
        matches!(self, Opcode::Load | Opcode::Store | Opcode::Tas)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Number of words an instruction consumes from and produces onto the stack.
///
/// `pops` is also the minimum depth the instruction requires; OVER reads two
/// words and writes three back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackEffect {
    pub pops: u8,
    pub pushes: u8,
}

impl StackEffect {
    pub fn net(self) -> i32 {
        i32::from(self.pushes) - i32::from(self.pops)
    }
}

/// One instruction. The operand holds raw 32-bit bits: PUSH immediates may
/// have been written signed, branch targets are code indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub operand: Option<u32>,
}

impl Instruction {
    /// Builds an operand-less instruction.
    ///
    /// Panics if `opcode` requires an operand.
    pub fn op(opcode: Opcode) -> Self {
        assert!(!opcode.has_operand(), "{opcode} requires an operand");
        Instruction { opcode, operand: None }
    }

    pub fn push(value: u32) -> Self {
        Instruction { opcode: Opcode::Push, operand: Some(value) }
    }

    pub fn jmp(target: u32) -> Self {
        Instruction { opcode: Opcode::Jmp, operand: Some(target) }
    }

    pub fn brz(target: u32) -> Self {
        Instruction { opcode: Opcode::Brz, operand: Some(target) }
    }

    /// True when operand presence matches the opcode's arity.
    pub fn is_well_formed(&self) -> bool {
        self.opcode.has_operand() == self.operand.is_some()
    }

    /// Branch target for JMP/BRZ.
    pub fn target(&self) -> Option<u32> {
        if self.opcode.is_branch() {
            self.operand
        } else {
            None
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.opcode, self.operand) {
            (Opcode::Push, Some(v)) => write!(f, "PUSH {}", v as i32),
            (op, Some(v)) => write!(f, "{op} {v}"),
            (op, None) => write!(f, "{op}"),
        }
    }
}

/// Stack effect of an instruction.
pub fn stack_effect(instruction: &Instruction) -> StackEffect {
    let (pops, pushes) = match instruction.opcode {
        Opcode::Nop | Opcode::Jmp | Opcode::Halt => (0, 0),
        Opcode::Push => (0, 1),
        Opcode::Pop | Opcode::Brz => (1, 0),
        Opcode::Dup => (1, 2),
        Opcode::Swap => (2, 2),
        Opcode::Over => (2, 3),
        Opcode::Add
        | Opcode::Sub
        | Opcode::Mul
        | Opcode::And
        | Opcode::Or
        | Opcode::Xor
        | Opcode::Shl
        | Opcode::Shr
        | Opcode::Eq
        | Opcode::Lt => (2, 1),
        Opcode::Not | Opcode::Load | Opcode::Tas => (1, 1),
        Opcode::Store => (2, 0),
    };
    StackEffect { pops, pushes }
}

/// Evaluates a pure ALU opcode on `(second, top)`; `second` was pushed first.
///
/// Shifts use the low five bits of the shift amount and LT compares as
/// signed integers.
pub fn alu(opcode: Opcode, second: u32, top: u32) -> Option<u32> {
    Some(match opcode {
        Opcode::Add => second.wrapping_add(top),
        Opcode::Sub => second.wrapping_sub(top),
        Opcode::Mul => second.wrapping_mul(top),
        Opcode::And => second & top,
        Opcode::Or => second | top,
        Opcode::Xor => second ^ top,
        Opcode::Shl => second.wrapping_shl(top & 31),
        Opcode::Shr => second.wrapping_shr(top & 31),
        Opcode::Eq => u32::from(second == top),
        Opcode::Lt => u32::from((second as i32) < (top as i32)),
        _ => return None,
    })
}

/// A program image: code, initial data words, and symbolic labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub code: Vec<Instruction>,
    /// `(address, word)` initializers, in source order.
    pub data_image: Vec<(u32, u32)>,
    pub labels: BTreeMap<String, u32>,
    pub entry: u32,
}

impl Program {
    pub fn new(code: Vec<Instruction>) -> Self {
        Program { code, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_effect_table() {
        assert_eq!(stack_effect(&Instruction::op(Opcode::Add)), StackEffect { pops: 2, pushes: 1 });
        assert_eq!(stack_effect(&Instruction::push(9)), StackEffect { pops: 0, pushes: 1 });
        assert_eq!(stack_effect(&Instruction::op(Opcode::Store)), StackEffect { pops: 2, pushes: 0 });
        assert_eq!(stack_effect(&Instruction::op(Opcode::Tas)).net(), 0);
        assert_eq!(stack_effect(&Instruction::brz(0)).net(), -1);
    }

    #[test]
    fn opcode_bytes_are_unique() {
        for (i, a) in Opcode::ALL.iter().enumerate() {
            assert_eq!(Opcode::from_byte(*a as u8), Some(*a));
            assert_eq!(Opcode::from_mnemonic(a.mnemonic()), Some(*a));
            for b in &Opcode::ALL[i + 1..] {
                assert_ne!(*a as u8, *b as u8);
            }
        }
    }

    #[test]
    fn alu_wraps_and_compares_signed() {
        assert_eq!(alu(Opcode::Add, u32::MAX, 2), Some(1));
        assert_eq!(alu(Opcode::Sub, 0, 1), Some(u32::MAX));
        assert_eq!(alu(Opcode::Lt, (-1i32) as u32, 0), Some(1));
        assert_eq!(alu(Opcode::Shl, 1, 33), Some(2));
        assert_eq!(alu(Opcode::Load, 1, 1), None);
    }
}
