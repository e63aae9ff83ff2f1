//! Boolean circuit intermediate representation: gates over densely numbered
//! wires, plaintext evaluation, statistics and binary serialization.
//!
//! Wires `[0, |input_a| + |input_b|)` are inputs; every gate defines exactly
//! one new wire and reads only lower-numbered wires, so the gate list is
//! evaluable in order. Builders that compile fixed-point arithmetic into this
//! representation live in [`builder`].

mod builder;
mod serial;

pub use builder::{
    build_adder, build_const_mul, build_global_moran_circuit, build_local_moran_circuit,
    build_multiplier, build_subtractor, CircuitBuilder,
};

use crate::fixedpoint::{FixedPointError, FixedPointFormat};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type WireId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("gate {gate} references wire {wire} out of range")]
    InvalidWire { gate: usize, wire: WireId },
    #[error("gate {gate} reads a wire that is not yet defined")]
    NotTopological { gate: usize },
    #[error("gate {gate} redefines wire {wire}")]
    Redefined { gate: usize, wire: WireId },
    #[error("input wires must cover [0, {expected}) exactly")]
    InputCover { expected: u32 },
    #[error("NOT gate {gate} must carry its single input in both slots")]
    UnaryArity { gate: usize },
    #[error("wire count {declared} does not match inputs + gates = {actual}")]
    WireCount { declared: u32, actual: u32 },
    #[error("input_{party} has {got} bits, circuit expects {expected}")]
    InputSize {
        party: char,
        expected: usize,
        got: usize,
    },
    #[error("region inputs must be {expected} bits ({n} regions x {total} bits), got {got}")]
    RegionShape {
        expected: usize,
        got: usize,
        n: u32,
        total: u8,
    },
    #[error("weight matrix must be at least 2x2, got n = {n}")]
    Dimension { n: usize },
    #[error(transparent)]
    Weight(#[from] FixedPointError),
    #[error("malformed circuit bytes: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Xor,
    Not,
}

impl GateKind {
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::And => a && b,
            GateKind::Or => a || b,
            GateKind::Xor => a ^ b,
            GateKind::Not => !a,
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not)
    }
}

/// A single gate. For `Not`, `b` mirrors `a` and is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub a: WireId,
    pub b: WireId,
    pub out: WireId,
}

/// Immutable, validated circuit. Constructed by [`CircuitBuilder`], the ESDA
/// builders or [`Circuit::deserialize`]; all of them enforce the wire
/// numbering invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    fmt: FixedPointFormat,
    n_regions: u32,
    num_wires: u32,
    input_a: Vec<WireId>,
    input_b: Vec<WireId>,
    outputs: Vec<WireId>,
    gates: Vec<Gate>,
}

impl Circuit {
    /// Assembles and validates. `num_wires` is derived, not declared.
    pub fn from_parts(
        fmt: FixedPointFormat,
        n_regions: u32,
        input_a: Vec<WireId>,
        input_b: Vec<WireId>,
        outputs: Vec<WireId>,
        gates: Vec<Gate>,
    ) -> Result<Circuit, CircuitError> {
        let num_inputs = input_a.len() + input_b.len();
        let num_wires = u32::try_from(num_inputs + gates.len())
            .map_err(|_| CircuitError::WireCount {
                declared: u32::MAX,
                actual: u32::MAX,
            })?;
        let c = Circuit {
            fmt,
            n_regions,
            num_wires,
            input_a,
            input_b,
            outputs,
            gates,
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks every structural invariant: inputs cover the low wires exactly
    /// once, gates read only defined wires and define each non-input wire
    /// exactly once, outputs reference defined wires.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let ni = (self.input_a.len() + self.input_b.len()) as u32;
        if self.num_wires != ni + self.gates.len() as u32 {
            return Err(CircuitError::WireCount {
                declared: self.num_wires,
                actual: ni + self.gates.len() as u32,
            });
        }
        let mut defined = vec![false; self.num_wires as usize];
        for &w in self.input_a.iter().chain(&self.input_b) {
            if w >= ni || defined[w as usize] {
                return Err(CircuitError::InputCover { expected: ni });
            }
            defined[w as usize] = true;
        }
        for (idx, g) in self.gates.iter().enumerate() {
            if g.kind.is_unary() && g.b != g.a {
                return Err(CircuitError::UnaryArity { gate: idx });
            }
            for wire in [g.a, g.b] {
                if wire >= self.num_wires {
                    return Err(CircuitError::InvalidWire { gate: idx, wire });
                }
                if wire >= g.out || !defined[wire as usize] {
                    return Err(CircuitError::NotTopological { gate: idx });
                }
            }
            if g.out >= self.num_wires {
                return Err(CircuitError::InvalidWire {
                    gate: idx,
                    wire: g.out,
                });
            }
            if defined[g.out as usize] {
                return Err(CircuitError::Redefined {
                    gate: idx,
                    wire: g.out,
                });
            }
            defined[g.out as usize] = true;
        }
        // Dense numbering plus one definition per gate implies full coverage;
        // outputs only need to point at defined wires.
        for (i, &w) in self.outputs.iter().enumerate() {
            if w >= self.num_wires {
                return Err(CircuitError::InvalidWire {
                    gate: self.gates.len() + i,
                    wire: w,
                });
            }
        }
        if self.n_regions > 0 {
            let expected = self.n_regions as usize * usize::from(self.fmt.total_bits());
            for party in [&self.input_a, &self.input_b] {
                if party.len() != expected {
                    return Err(CircuitError::RegionShape {
                        expected,
                        got: party.len(),
                        n: self.n_regions,
                        total: self.fmt.total_bits(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn fmt(&self) -> FixedPointFormat {
        self.fmt
    }

    /// Number of regions for the ESDA circuits; 0 for generic circuits.
    pub fn n_regions(&self) -> u32 {
        self.n_regions
    }

    pub fn num_wires(&self) -> u32 {
        self.num_wires
    }

    pub fn input_a(&self) -> &[WireId] {
        &self.input_a
    }

    pub fn input_b(&self) -> &[WireId] {
        &self.input_b
    }

    pub fn outputs(&self) -> &[WireId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of AND/OR/XOR gates, i.e. gates that need a garbled table.
    pub fn two_input_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.kind.is_unary()).count()
    }

    /// Gate-by-gate Boolean evaluation in topological order.
    pub fn evaluate_plaintext(
        &self,
        bits_a: &[bool],
        bits_b: &[bool],
    ) -> Result<Vec<bool>, CircuitError> {
        if bits_a.len() != self.input_a.len() {
            return Err(CircuitError::InputSize {
                party: 'a',
                expected: self.input_a.len(),
                got: bits_a.len(),
            });
        }
        if bits_b.len() != self.input_b.len() {
            return Err(CircuitError::InputSize {
                party: 'b',
                expected: self.input_b.len(),
                got: bits_b.len(),
            });
        }
        let mut wires = vec![false; self.num_wires as usize];
        for (&w, &bit) in self.input_a.iter().zip(bits_a) {
            wires[w as usize] = bit;
        }
        for (&w, &bit) in self.input_b.iter().zip(bits_b) {
            wires[w as usize] = bit;
        }
        for g in &self.gates {
            wires[g.out as usize] = g.kind.eval(wires[g.a as usize], wires[g.b as usize]);
        }
        Ok(self.outputs.iter().map(|&w| wires[w as usize]).collect())
    }

    pub fn stats(&self) -> CircuitStats {
        let mut stats = CircuitStats {
            num_gates: self.gates.len() as u64,
            num_wires: u64::from(self.num_wires),
            input1_bits: self.input_a.len() as u64,
            input2_bits: self.input_b.len() as u64,
            output1_bits: self.outputs.len() as u64,
            not_gates: 0,
            and_gates: 0,
            or_gates: 0,
            xor_gates: 0,
            serialized_size_bytes: serial::serialized_len(self) as u64,
            compressed_size_bytes: None,
            compile_seconds: None,
            zip_seconds: None,
        };
        for g in &self.gates {
            match g.kind {
                GateKind::And => stats.and_gates += 1,
                GateKind::Or => stats.or_gates += 1,
                GateKind::Xor => stats.xor_gates += 1,
                GateKind::Not => stats.not_gates += 1,
            }
        }
        stats
    }

    /// Deterministic little-endian binary encoding.
    pub fn serialize(&self) -> Vec<u8> {
        serial::serialize(self)
    }

    /// Inverse of [`Circuit::serialize`]; validates structure after parsing.
    pub fn deserialize(bytes: &[u8]) -> Result<Circuit, CircuitError> {
        serial::deserialize(bytes)
    }

    /// SHA-256 of the serialization; binds garbled tables and session peers
    /// to one exact circuit.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.serialize()).into()
    }

    /// Rewrites every XOR gate as OR + AND + NOT + AND, for comparison with
    /// tools whose basis is {AND, OR, NOT}.
    pub fn lowered_to_strict_basis(&self) -> Circuit {
        let ni = (self.input_a.len() + self.input_b.len()) as u32;
        let mut map: Vec<WireId> = (0..ni).collect();
        map.resize(self.num_wires as usize, 0);
        let mut gates = Vec::with_capacity(self.gates.len());
        let mut next = ni;
        let mut alloc = |gates: &mut Vec<Gate>, kind, a, b| {
            let out = next;
            next += 1;
            gates.push(Gate { kind, a, b, out });
            out
        };
        for g in &self.gates {
            let a = map[g.a as usize];
            let b = map[g.b as usize];
            map[g.out as usize] = match g.kind {
                GateKind::Xor => {
                    // a XOR b = (a OR b) AND NOT (a AND b)
                    let or = alloc(&mut gates, GateKind::Or, a, b);
                    let and = alloc(&mut gates, GateKind::And, a, b);
                    let nand = alloc(&mut gates, GateKind::Not, and, and);
                    alloc(&mut gates, GateKind::And, or, nand)
                }
                kind => alloc(&mut gates, kind, a, b),
            };
        }
        let outputs = self.outputs.iter().map(|&w| map[w as usize]).collect();
        Circuit::from_parts(
            self.fmt,
            self.n_regions,
            self.input_a.clone(),
            self.input_b.clone(),
            outputs,
            gates,
        )
        .expect("lowering preserves validity")
    }
}

/// Shape and size summary in the style of a compiler report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CircuitStats {
    pub num_gates: u64,
    pub num_wires: u64,
    pub input1_bits: u64,
    pub input2_bits: u64,
    pub output1_bits: u64,
    pub not_gates: u64,
    pub and_gates: u64,
    pub or_gates: u64,
    pub xor_gates: u64,
    pub serialized_size_bytes: u64,
    /// Size after whole-file compression, when the caller compressed.
    pub compressed_size_bytes: Option<u64>,
    /// Wall time of circuit construction, when the caller timed it.
    pub compile_seconds: Option<f64>,
    /// Wall time of compression, when the caller compressed.
    pub zip_seconds: Option<f64>,
}

impl CircuitStats {
    /// Per-kind counts always sum to `num_gates`.
    pub fn kind_counts_sum(&self) -> u64 {
        self.not_gates + self.and_gates + self.or_gates + self.xor_gates
    }
}
