use thiserror::Error;

use super::{Instruction, Opcode, Program, INSTRUCTION_BYTES};

/// Leading bytes of every binary program image.
pub const MAGIC: &[u8; 4] = b"XSM1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("image truncated at byte {0}")]
    Truncated(usize),
    #[error("unknown opcode byte {byte:#04x} at instruction {index}")]
    UnknownOpcode { index: usize, byte: u8 },
    #[error("nonzero operand on {opcode} at instruction {index}")]
    StrayOperand { index: usize, opcode: Opcode },
    #[error("{0} trailing bytes after image")]
    TrailingBytes(usize),
}

/// Encodes a program into the binary image format:
/// `"XSM1"`, u32 code length, u32 data count, 5-byte instructions, then
/// `(u32 addr, u32 word)` pairs. All integers little-endian.
pub fn encode(program: &Program) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + program.code.len() * INSTRUCTION_BYTES + program.data_image.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(program.code.len() as u32).to_le_bytes());
    out.extend_from_slice(&(program.data_image.len() as u32).to_le_bytes());
    for inst in &program.code {
        out.push(inst.opcode as u8);
        out.extend_from_slice(&inst.operand.unwrap_or(0).to_le_bytes());
    }
    for (addr, word) in &program.data_image {
        out.extend_from_slice(&addr.to_le_bytes());
        out.extend_from_slice(&word.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DecodeError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(DecodeError::Truncated(self.bytes.len()));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Decodes a binary image. Labels are not stored in the image, so the
/// result has none and its entry is 0.
pub fn decode(bytes: &[u8]) -> Result<Program, DecodeError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| DecodeError::BadMagic)? != MAGIC {
        return Err(DecodeError::BadMagic);
    }
    let code_len = r.u32()? as usize;
    let data_len = r.u32()? as usize;

    let mut code = Vec::with_capacity(code_len.min(bytes.len() / INSTRUCTION_BYTES));
    for index in 0..code_len {
        let byte = r.take(1)?[0];
        let opcode = Opcode::from_byte(byte).ok_or(DecodeError::UnknownOpcode { index, byte })?;
        let raw = r.u32()?;
        let operand = if opcode.has_operand() {
            Some(raw)
        } else if raw != 0 {
            return Err(DecodeError::StrayOperand { index, opcode });
        } else {
            None
        };
        code.push(Instruction { opcode, operand });
    }
    let mut data_image = Vec::with_capacity(data_len.min(bytes.len() / 8));
    for _ in 0..data_len {
        data_image.push((r.u32()?, r.u32()?));
    }
    if r.pos != bytes.len() {
        return Err(DecodeError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(Program { code, data_image, ..Default::default() })
}
