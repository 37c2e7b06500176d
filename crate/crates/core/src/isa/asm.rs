use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Instruction, Opcode, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("malformed operand `{0}`")]
    MalformedOperand(String),
    #[error("malformed label `{0}`")]
    MalformedLabel(String),
    #[error("{0} requires an operand")]
    MissingOperand(String),
    #[error("{0} takes no operand")]
    UnexpectedOperand(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unresolved label `{0}`")]
    UnresolvedLabel(String),
    #[error("operand out of 32-bit range `{0}`")]
    OperandOutOfRange(String),
}

/// An assembly failure tied to its 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

fn err(line: usize, kind: AsmErrorKind) -> AsmError {
    AsmError { line, kind }
}

enum Operand {
    Value(u32),
    Label(String),
}

struct PendingInst {
    line: usize,
    opcode: Opcode,
    operand: Option<Operand>,
}

fn is_label_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Parses a decimal or `0x` hex literal into raw 32-bit bits. Negative
/// values are accepted down to `i32::MIN` when `signed` is set.
fn parse_literal(tok: &str, signed: bool) -> Result<Option<u32>, AsmErrorKind> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, tok),
    };
    let magnitude = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        if hex.is_empty() || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Ok(None);
        }
        u128::from_str_radix(hex, 16).map_err(|_| AsmErrorKind::OperandOutOfRange(tok.into()))?
    } else {
        if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
            return Ok(None);
        }
        body.parse::<u128>()
            .map_err(|_| AsmErrorKind::OperandOutOfRange(tok.into()))?
    };
    if neg {
        if !signed || magnitude > 1u128 << 31 {
            return Err(AsmErrorKind::OperandOutOfRange(tok.into()));
        }
        Ok(Some((magnitude as i64).wrapping_neg() as u32))
    } else if magnitude > u128::from(u32::MAX) {
        Err(AsmErrorKind::OperandOutOfRange(tok.into()))
    } else {
        Ok(Some(magnitude as u32))
    }
}

fn literal(line: usize, tok: &str, signed: bool) -> Result<u32, AsmError> {
    match parse_literal(tok, signed) {
        Ok(Some(v)) => Ok(v),
        Ok(None) => Err(err(line, AsmErrorKind::MalformedOperand(tok.into()))),
        Err(kind) => Err(err(line, kind)),
    }
}

/// Assembles source text into a [`Program`].
///
/// One statement per line: an optional `label:` prefix followed by an
/// instruction, a `.word addr value` directive, or nothing. `;` starts a
/// comment. Branch operands may be labels or absolute code indices.
pub fn assemble(source: &str) -> Result<Program, AsmError> {
    let mut labels: BTreeMap<String, u32> = BTreeMap::new();
    let mut pending: Vec<PendingInst> = Vec::new();
    let mut data_image = Vec::new();

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let mut rest = raw.split(';').next().unwrap_or("").trim();

        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if name.contains(char::is_whitespace) {
                break;
            }
            if !is_label_name(name) {
                return Err(err(line, AsmErrorKind::MalformedLabel(name.into())));
            }
            if labels.insert(name.to_string(), pending.len() as u32).is_some() {
                return Err(err(line, AsmErrorKind::DuplicateLabel(name.into())));
            }
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }

        let mut toks = rest.split_whitespace();
        let head = toks.next().unwrap_or_default();
        let args: Vec<&str> = toks.collect();

        if let Some(directive) = head.strip_prefix('.') {
            if !directive.eq_ignore_ascii_case("word") {
                return Err(err(line, AsmErrorKind::UnknownDirective(head.into())));
            }
            if args.len() != 2 {
                return Err(err(line, AsmErrorKind::MalformedOperand(args.join(" "))));
            }
            let addr = literal(line, args[0], false)?;
            let value = literal(line, args[1], true)?;
            data_image.push((addr, value));
            continue;
        }

        let opcode = Opcode::from_mnemonic(head)
            .ok_or_else(|| err(line, AsmErrorKind::UnknownMnemonic(head.into())))?;
        let operand = match (opcode.has_operand(), args.as_slice()) {
            (false, []) => None,
            (false, _) => return Err(err(line, AsmErrorKind::UnexpectedOperand(head.into()))),
            (true, []) => return Err(err(line, AsmErrorKind::MissingOperand(head.into()))),
            (true, [tok]) => {
                if opcode.is_branch() && is_label_name(tok) {
                    Some(Operand::Label((*tok).to_string()))
                } else {
                    Some(Operand::Value(literal(line, tok, opcode == Opcode::Push)?))
                }
            }
            (true, _) => return Err(err(line, AsmErrorKind::MalformedOperand(args.join(" ")))),
        };
        pending.push(PendingInst { line, opcode, operand });
    }

    let code = pending
        .into_iter()
        .map(|p| {
            let operand = match p.operand {
                None => None,
                Some(Operand::Value(v)) => Some(v),
                Some(Operand::Label(name)) => Some(
                    *labels
                        .get(&name)
                        .ok_or_else(|| err(p.line, AsmErrorKind::UnresolvedLabel(name.clone())))?,
                ),
            };
            Ok(Instruction { opcode: p.opcode, operand })
        })
        .collect::<Result<Vec<_>, AsmError>>()?;

    Ok(Program { code, data_image, labels, entry: 0 })
}

/// Renders a program as assembly text. Branch targets inside the code get
/// regenerated `L<index>` labels; data initializers come first as `.word`
/// directives.
pub fn disassemble(program: &Program) -> String {
    let len = program.code.len() as u32;
    let targets: BTreeSet<u32> = program
        .code
        .iter()
        .filter_map(Instruction::target)
        .filter(|t| *t < len)
        .collect();

    let mut out = String::new();
    for (addr, value) in &program.data_image {
        let _ = writeln!(out, ".word {addr:#x} {value:#x}");
    }
    for (i, inst) in program.code.iter().enumerate() {
        if targets.contains(&(i as u32)) {
            let _ = writeln!(out, "L{i}:");
        }
        match inst.target() {
            Some(t) if t < len => {
                let _ = writeln!(out, "    {} L{t}", inst.opcode);
            }
            _ => {
                let _ = writeln!(out, "    {inst}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_program() {
        let p = assemble("PUSH 5\nPUSH 3\nADD\nHALT").unwrap();
        assert_eq!(p.code.len(), 4);
        assert_eq!(p.entry, 0);
        assert_eq!(p.code[0], Instruction::push(5));
        assert_eq!(p.code[2], Instruction::op(Opcode::Add));
    }

    #[test]
    fn self_branch_resolves_to_own_index() {
        let p = assemble("loop: JMP loop").unwrap();
        assert_eq!(p.code, vec![Instruction::jmp(0)]);
        assert_eq!(p.labels["loop"], 0);
    }

    #[test]
    fn literals_and_directives() {
        let p = assemble(".word 0x10 -1\nPUSH -2147483648 ; min\npush 0xFFFFFFFF").unwrap();
        assert_eq!(p.data_image, vec![(16, u32::MAX)]);
        assert_eq!(p.code[0].operand, Some(0x8000_0000));
        assert_eq!(p.code[1].operand, Some(u32::MAX));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = assemble("PUSH 1\nNOP\nFROB\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().starts_with("line 3: unknown mnemonic"));

        let e = assemble("PUSH x1").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::MalformedOperand(_)));
        let e = assemble("a: NOP\na: NOP").unwrap_err();
        assert_eq!(e, err(2, AsmErrorKind::DuplicateLabel("a".into())));
        let e = assemble("NOP\nJMP nowhere").unwrap_err();
        assert_eq!(e, err(2, AsmErrorKind::UnresolvedLabel("nowhere".into())));
        let e = assemble("PUSH 4294967296").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::OperandOutOfRange(_)));
        let e = assemble("PUSH -2147483649").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::OperandOutOfRange(_)));
        let e = assemble("JMP -1").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::OperandOutOfRange(_)));
        let e = assemble("ADD 3").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::UnexpectedOperand(_)));
        let e = assemble("BRZ").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::MissingOperand(_)));
        let e = assemble(".byte 1 2").unwrap_err();
        assert!(matches!(e.kind, AsmErrorKind::UnknownDirective(_)));
    }

    #[test]
    fn disassemble_single_push() {
        let p = Program::new(vec![Instruction::push(5)]);
        assert_eq!(disassemble(&p).trim(), "PUSH 5");
    }

    #[test]
    fn disassemble_data_only() {
        let p = Program { data_image: vec![(3, 7)], ..Default::default() };
        let text = disassemble(&p);
        assert_eq!(text, ".word 0x3 0x7\n");
        assert_eq!(assemble(&text).unwrap(), Program { data_image: vec![(3, 7)], ..Default::default() });
    }

    #[test]
    fn disassembly_regenerates_labels() {
        let p = assemble("top: PUSH 1\nBRZ done\nJMP top\ndone: HALT").unwrap();
        let text = disassemble(&p);
        assert!(text.contains("L0:"));
        assert!(text.contains("BRZ L3"));
        let again = assemble(&text).unwrap();
        assert_eq!(again.code, p.code);
    }
}
