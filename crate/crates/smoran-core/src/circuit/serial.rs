//! Binary circuit encoding: magic "SMCC", version, format, wire maps, gate
//! list. Little-endian throughout, deterministic, validated on read.

use super::{Circuit, CircuitError, Gate, GateKind, WireId};
use crate::fixedpoint::FixedPointFormat;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

const MAGIC: &[u8; 4] = b"SMCC";
const VERSION: u16 = 1;

impl GateKind {
    fn code(self) -> u8 {
        match self {
            GateKind::And => 0,
            GateKind::Or => 1,
            GateKind::Xor => 2,
            GateKind::Not => 3,
        }
    }

    fn from_code(code: u8) -> Option<GateKind> {
        match code {
            0 => Some(GateKind::And),
            1 => Some(GateKind::Or),
            2 => Some(GateKind::Xor),
            3 => Some(GateKind::Not),
            _ => None,
        }
    }
}

/// Exact encoded size, kept in sync with `serialize` and asserted in tests.
pub(super) fn serialized_len(c: &Circuit) -> usize {
    let per_gate: usize = c
        .gates
        .iter()
        .map(|g| if g.kind.is_unary() { 9 } else { 13 })
        .sum();
    4 + 2 + 2 + 4 + 4 + 4 * 4
        + 4 * (c.input_a.len() + c.input_b.len() + c.outputs.len())
        + per_gate
}

pub(super) fn serialize(c: &Circuit) -> Vec<u8> {
    let mut out = Vec::with_capacity(serialized_len(c));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(c.fmt.total_bits());
    out.push(c.fmt.frac_bits());
    out.extend_from_slice(&c.n_regions.to_le_bytes());
    out.extend_from_slice(&c.num_wires.to_le_bytes());
    for list in [&c.input_a, &c.input_b, &c.outputs] {
        out.extend_from_slice(&(list.len() as u32).to_le_bytes());
        for w in list {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out.extend_from_slice(&(c.gates.len() as u32).to_le_bytes());
    for g in &c.gates {
        out.push(g.kind.code());
        out.extend_from_slice(&g.a.to_le_bytes());
        if !g.kind.is_unary() {
            out.extend_from_slice(&g.b.to_le_bytes());
        }
        out.extend_from_slice(&g.out.to_le_bytes());
    }
    debug_assert_eq!(out.len(), serialized_len(c));
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CircuitError> {
        if self.bytes.len() - self.pos < n {
            return Err(fmt_err(format!(
                "truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CircuitError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CircuitError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CircuitError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn wire_list(&mut self) -> Result<Vec<WireId>, CircuitError> {
        let len = self.u32()? as usize;
        if len > self.bytes.len() / 4 {
            return Err(fmt_err(format!("wire list length {len} exceeds input")));
        }
        (0..len).map(|_| self.u32()).collect()
    }
}

fn fmt_err(detail: String) -> CircuitError {
    CircuitError::Format(detail)
}

pub(super) fn deserialize(bytes: &[u8]) -> Result<Circuit, CircuitError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(fmt_err("bad magic, expected SMCC".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(fmt_err(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let total_bits = r.u8()?;
    let frac_bits = r.u8()?;
    let fmt = FixedPointFormat::new(total_bits, frac_bits)
        .map_err(|e| fmt_err(format!("invalid fixed-point format: {e}")))?;
    let n_regions = r.u32()?;
    let num_wires = r.u32()?;
    let input_a = r.wire_list()?;
    let input_b = r.wire_list()?;
    let outputs = r.wire_list()?;
    let num_gates = r.u32()? as usize;
    if num_gates > bytes.len() / 9 {
        return Err(fmt_err(format!("gate count {num_gates} exceeds input")));
    }
    let mut gates = Vec::with_capacity(num_gates);
    for _ in 0..num_gates {
        let kind = GateKind::from_code(r.u8()?)
            .ok_or_else(|| fmt_err("unknown gate kind".into()))?;
        let a = r.u32()?;
        let b = if kind.is_unary() { a } else { r.u32()? };
        let out = r.u32()?;
        gates.push(Gate { kind, a, b, out });
    }
    if r.pos != bytes.len() {
        return Err(fmt_err(format!(
            "{} trailing bytes after gate list",
            bytes.len() - r.pos
        )));
    }
    let c = Circuit::from_parts(fmt, n_regions, input_a, input_b, outputs, gates)?;
    if c.num_wires != num_wires {
        return Err(fmt_err(format!(
            "declared {num_wires} wires, structure implies {}",
            c.num_wires
        )));
    }
    Ok(c)
}
