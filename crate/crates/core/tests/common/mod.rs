//! Random program generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use xsim_core::isa::{Instruction, Opcode, Program};

/// Data words touched by generated programs live below this address.
pub const DATA_WORDS: u32 = 64;
/// Loop counters sit just above the data words, one per nesting level.
const COUNTER_BASE: u32 = DATA_WORDS;
const MAX_DEPTH: usize = 16;
const MAX_NEST: u32 = 2;

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    code: Vec<Instruction>,
    depth: usize,
}

impl Gen<'_> {
    fn emit(&mut self, i: Instruction) -> usize {
        self.code.push(i);
        self.code.len() - 1
    }

    fn op(&mut self, o: Opcode) {
        self.emit(Instruction::op(o));
    }

    fn data_addr(&mut self) -> u32 {
        self.rng.gen_range(0..DATA_WORDS)
    }

    fn imm(&mut self) -> u32 {
        if self.rng.gen_bool(0.5) {
            self.rng.gen_range(0..16)
        } else {
            self.rng.gen()
        }
    }

    /// One instruction (or short idiom) legal at the current depth.
    fn simple(&mut self) {
        const BINARY: [Opcode; 10] = [
            Opcode::Add,
            Opcode::Sub,
            Opcode::Mul,
            Opcode::And,
            Opcode::Or,
            Opcode::Xor,
            Opcode::Shl,
            Opcode::Shr,
            Opcode::Eq,
            Opcode::Lt,
        ];
        let d = self.depth;
        loop {
            match self.rng.gen_range(0..12) {
                0 if d < MAX_DEPTH => {
                    let v = self.imm();
                    self.emit(Instruction::push(v));
                    self.depth += 1;
                }
                1 if d >= 1 => {
                    self.op(Opcode::Pop);
                    self.depth -= 1;
                }
                2 if (1..MAX_DEPTH).contains(&d) => {
                    self.op(Opcode::Dup);
                    self.depth += 1;
                }
                3 if d >= 2 => self.op(Opcode::Swap),
                4 if (2..MAX_DEPTH).contains(&d) => {
                    self.op(Opcode::Over);
                    self.depth += 1;
                }
                5 | 6 if d >= 2 => {
                    let o = *BINARY.choose(self.rng).unwrap();
                    self.op(o);
                    self.depth -= 1;
                }
                7 if d >= 1 => self.op(Opcode::Not),
                8 => self.op(Opcode::Nop),
                9 if d < MAX_DEPTH => {
                    let a = self.data_addr();
                    self.emit(Instruction::push(a));
                    self.op(Opcode::Load);
                    self.depth += 1;
                }
                10 if (1..MAX_DEPTH).contains(&d) => {
                    let a = self.data_addr();
                    self.emit(Instruction::push(a));
                    self.op(Opcode::Swap);
                    self.op(Opcode::Store);
                    self.depth -= 1;
                }
                11 if d < MAX_DEPTH => {
                    let a = self.data_addr();
                    self.emit(Instruction::push(a));
                    self.op(Opcode::Tas);
                    self.depth += 1;
                }
                _ => continue,
            }
            return;
        }
    }

    /// Restores the depth recorded at the start of a block.
    fn settle(&mut self, start: usize) {
        while self.depth > start {
            self.op(Opcode::Pop);
            self.depth -= 1;
        }
        while self.depth < start {
            let v = self.imm();
            self.emit(Instruction::push(v));
            self.depth += 1;
        }
    }

    fn block(&mut self, len: usize, nest: u32) {
        for _ in 0..len {
            match self.rng.gen_range(0..10) {
                0 if nest < MAX_NEST => self.skip(nest + 1),
                1 if nest < MAX_NEST => self.counted_loop(nest + 1),
                _ => self.simple(),
            }
        }
    }

    /// `cond BRZ over; body; over:` where the body is stack-neutral so both
    /// paths meet at the same depth.
    fn skip(&mut self, nest: u32) {
        if self.rng.gen_bool(0.5) {
            let a = self.data_addr();
            self.emit(Instruction::push(a));
            self.op(Opcode::Load);
        } else {
            let v = self.rng.gen_range(0..2);
            self.emit(Instruction::push(v));
        }
        let brz = self.emit(Instruction::brz(0));
        let start = self.depth;
        let len = self.rng.gen_range(1..6);
        self.block(len, nest);
        self.settle(start);
        self.code[brz].operand = Some(self.code.len() as u32);
    }

    /// A loop with its trip count kept in memory so the body cannot disturb it.
    fn counted_loop(&mut self, nest: u32) {
        let counter = COUNTER_BASE + nest;
        let trips = self.rng.gen_range(1..4);
        self.emit(Instruction::push(counter));
        self.emit(Instruction::push(trips));
        self.op(Opcode::Store);
        let top = self.code.len() as u32;
        let start = self.depth;
        let len = self.rng.gen_range(1..6);
        self.block(len, nest);
        self.settle(start);
        for i in [
            Instruction::push(counter),
            Instruction::push(counter),
            Instruction::op(Opcode::Load),
            Instruction::push(1),
            Instruction::op(Opcode::Sub),
            Instruction::op(Opcode::Store),
            Instruction::push(counter),
            Instruction::op(Opcode::Load),
        ] {
            self.emit(i);
        }
        let exit = self.emit(Instruction::brz(0));
        self.emit(Instruction::jmp(top));
        self.code[exit].operand = Some(self.code.len() as u32);
    }
}

fn random_data(rng: &mut ChaCha8Rng, addrs: std::ops::Range<u32>, max: usize) -> Vec<(u32, u32)> {
    let n = rng.gen_range(0..=max);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..n {
        let a = rng.gen_range(addrs.clone());
        if seen.insert(a) {
            out.push((a, rng.gen()));
        }
    }
    out
}

/// A program that validates, never faults and always halts: straight-line
/// code, forward skips over stack-neutral blocks and bounded loops.
pub fn terminating_program(rng: &mut ChaCha8Rng) -> Program {
    let mut g = Gen { rng, code: Vec::new(), depth: 0 };
    let len = g.rng.gen_range(1..40);
    g.block(len, 0);
    g.op(Opcode::Halt);
    let code = g.code;
    let data_image = random_data(rng, 0..DATA_WORDS, 8);
    Program { code, data_image, ..Default::default() }
}

/// Any well-formed program: random opcodes, in-range branch targets,
/// arbitrary operands and data words. Not necessarily runnable.
pub fn arbitrary_program(rng: &mut ChaCha8Rng) -> Program {
    let len = rng.gen_range(0..60);
    let code = (0..len)
        .map(|_| {
            let o = *Opcode::ALL.choose(rng).unwrap();
            match o {
                Opcode::Push => Instruction::push(rng.gen()),
                Opcode::Jmp => Instruction::jmp(rng.gen_range(0..len as u32)),
                Opcode::Brz => Instruction::brz(rng.gen_range(0..len as u32)),
                _ => Instruction::op(o),
            }
        })
        .collect();
    let data_image = random_data(rng, 0..u32::MAX, 10);
    Program { code, data_image, ..Default::default() }
}
