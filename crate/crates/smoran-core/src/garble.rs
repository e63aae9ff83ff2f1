//! Yao garbling with point-and-permute.
//!
//! Every wire gets two 128-bit labels with opposite low ("permute") bits.
//! Each AND/OR/XOR gate becomes four ciphertext rows ordered by the permute
//! bits of its input labels, row = H(K_a ∥ K_b ∥ gate_index) ⊕ K_out, where
//! the gate index inside the circuit is the unique per-gate tweak. NOT gates
//! cost nothing: the output wire reuses the input pair swapped. The
//! evaluator holds one label per wire, selects the row its permute bits
//! point at, and never learns truth values; output bits come from comparing
//! the final labels' permute bits against the recorded decoding.

use crate::circuit::{Circuit, GateKind};
use alloc::string::String;
use alloc::vec::Vec;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const LABEL_BYTES: usize = 16;
pub const SEED_BYTES: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GarbleError {
    #[error("expected {expected} items, got {got}")]
    Length { expected: usize, got: usize },
    #[error("garbled tables do not match the circuit: {0}")]
    CircuitMismatch(String),
    #[error("integrity failure at output {output}: label matches neither decoding entry")]
    Integrity { output: usize },
    #[error("malformed garbled circuit bytes: {0}")]
    Format(String),
}

/// A wire label: 128 opaque bits whose low bit of the first byte is the
/// permute bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireLabel(pub [u8; LABEL_BYTES]);

impl WireLabel {
    pub fn permute_bit(&self) -> bool {
        self.0[0] & 1 == 1
    }

    fn xor(&self, other: &[u8; LABEL_BYTES]) -> WireLabel {
        let mut out = self.0;
        for (o, b) in out.iter_mut().zip(other) {
            *o ^= b;
        }
        WireLabel(out)
    }
}

/// Four ciphertext rows indexed by the input labels' permute-bit pair
/// (00, 01, 10, 11).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GarbledGate {
    pub rows: [[u8; LABEL_BYTES]; 4],
}

/// Maps final output labels back to bits. `bits[i]` is the permute bit of
/// output i's 0-label; `checks[i]` holds a hash per label so corrupted
/// evaluations are detected instead of decoded into garbage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDecoding {
    bits: Vec<bool>,
    checks: Vec<[[u8; LABEL_BYTES]; 2]>,
}

impl OutputDecoding {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Garbled tables for one circuit plus everything the evaluator needs except
/// the input labels. Bound to the exact circuit by hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GarbledCircuit {
    pub circuit_hash: [u8; 32],
    pub gates: Vec<GarbledGate>,
    pub decoding: OutputDecoding,
}

fn row_key(a: &WireLabel, b: &WireLabel, gate_index: u64) -> [u8; LABEL_BYTES] {
    let mut h = Sha256::new();
    h.update(a.0);
    h.update(b.0);
    h.update(gate_index.to_le_bytes());
    truncate(h.finalize().as_slice())
}

fn output_check(position: u32, label: &WireLabel) -> [u8; LABEL_BYTES] {
    let mut h = Sha256::new();
    h.update(b"output-check");
    h.update(position.to_le_bytes());
    h.update(label.0);
    truncate(h.finalize().as_slice())
}

fn truncate(digest: &[u8]) -> [u8; LABEL_BYTES] {
    digest[..LABEL_BYTES].try_into().unwrap()
}

/// Garbles a circuit under a seed. Returns the tables and the label pairs of
/// all input wires in circuit input order (input_a then input_b); the pair
/// index selects by truth value.
///
/// Deterministic per (circuit, seed); use a fresh random seed per execution,
/// tables are single-use.
pub fn garble(c: &Circuit, seed: &[u8; SEED_BYTES]) -> (GarbledCircuit, Vec<[WireLabel; 2]>) {
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let mut fresh_pair = || {
        let mut k0 = [0u8; LABEL_BYTES];
        let mut k1 = [0u8; LABEL_BYTES];
        rng.fill_bytes(&mut k0);
        rng.fill_bytes(&mut k1);
        // Opposite permute bits, random polarity from k0's own low bit.
        k1[0] = (k1[0] & !1) | ((k0[0] & 1) ^ 1);
        [WireLabel(k0), WireLabel(k1)]
    };

    // Labels are indexed by wire id; input pairs are drawn in circuit input
    // order (input_a then input_b), which also fixes the returned pair order.
    let zero = [WireLabel([0u8; LABEL_BYTES]); 2];
    let mut labels: Vec<[WireLabel; 2]> = alloc::vec![zero; c.num_wires() as usize];
    let mut input_pairs = Vec::with_capacity(c.input_a().len() + c.input_b().len());
    for &w in c.input_a().iter().chain(c.input_b()) {
        let pair = fresh_pair();
        labels[w as usize] = pair;
        input_pairs.push(pair);
    }
    let mut tables = Vec::with_capacity(c.two_input_gate_count());
    for (gate_index, g) in c.gates().iter().enumerate() {
        if g.kind.is_unary() {
            // Free NOT: swap the pair, no table.
            let [k0, k1] = labels[g.a as usize];
            labels[g.out as usize] = [k1, k0];
            continue;
        }
        let out_pair = fresh_pair();
        let a_pair = labels[g.a as usize];
        let b_pair = labels[g.b as usize];
        let mut rows = [[0u8; LABEL_BYTES]; 4];
        for va in 0..2 {
            for vb in 0..2 {
                let ka = &a_pair[va];
                let kb = &b_pair[vb];
                let out = g.kind.eval(va == 1, vb == 1);
                let row = usize::from(ka.permute_bit()) << 1 | usize::from(kb.permute_bit());
                rows[row] = out_pair[usize::from(out)]
                    .xor(&row_key(ka, kb, gate_index as u64))
                    .0;
            }
        }
        tables.push(GarbledGate { rows });
        labels[g.out as usize] = out_pair;
    }

    let mut bits = Vec::with_capacity(c.outputs().len());
    let mut checks = Vec::with_capacity(c.outputs().len());
    for (pos, &w) in c.outputs().iter().enumerate() {
        let pair = labels[w as usize];
        bits.push(pair[0].permute_bit());
        checks.push([
            output_check(pos as u32, &pair[0]),
            output_check(pos as u32, &pair[1]),
        ]);
    }

    let gc = GarbledCircuit {
        circuit_hash: c.hash(),
        gates: tables,
        decoding: OutputDecoding { bits, checks },
    };
    (gc, input_pairs)
}

/// The garbler's local selection: pairs[i][bits[i]].
pub fn select_labels(
    pairs: &[[WireLabel; 2]],
    bits: &[bool],
) -> Result<Vec<WireLabel>, GarbleError> {
    if pairs.len() != bits.len() {
        return Err(GarbleError::Length {
            expected: pairs.len(),
            got: bits.len(),
        });
    }
    Ok(pairs
        .iter()
        .zip(bits)
        .map(|(pair, &bit)| pair[usize::from(bit)])
        .collect())
}

/// Evaluates garbled tables under one label per input wire, in circuit input
/// order. Verifies the tables belong to `c` before running.
pub fn evaluate(
    gc: &GarbledCircuit,
    c: &Circuit,
    input_labels: &[WireLabel],
) -> Result<Vec<WireLabel>, GarbleError> {
    let num_inputs = c.input_a().len() + c.input_b().len();
    if input_labels.len() != num_inputs {
        return Err(GarbleError::Length {
            expected: num_inputs,
            got: input_labels.len(),
        });
    }
    if gc.circuit_hash != c.hash() {
        return Err(GarbleError::CircuitMismatch("circuit hash differs".into()));
    }
    if gc.gates.len() != c.two_input_gate_count() {
        return Err(GarbleError::CircuitMismatch(alloc::format!(
            "{} tables for {} two-input gates",
            gc.gates.len(),
            c.two_input_gate_count()
        )));
    }
    if gc.decoding.len() != c.outputs().len() {
        return Err(GarbleError::CircuitMismatch(alloc::format!(
            "{} decoding entries for {} outputs",
            gc.decoding.len(),
            c.outputs().len()
        )));
    }
    let mut wires: Vec<WireLabel> =
        alloc::vec![WireLabel([0u8; LABEL_BYTES]); c.num_wires() as usize];
    for (&w, &label) in c.input_a().iter().chain(c.input_b()).zip(input_labels) {
        wires[w as usize] = label;
    }
    let mut table_iter = gc.gates.iter();
    for (gate_index, g) in c.gates().iter().enumerate() {
        if g.kind.is_unary() {
            // Free NOT: the label passes through untouched; only its meaning
            // (which the evaluator never sees) flips.
            wires[g.out as usize] = wires[g.a as usize];
            continue;
        }
        let table = table_iter.next().expect("table count checked above");
        let ka = wires[g.a as usize];
        let kb = wires[g.b as usize];
        let row = usize::from(ka.permute_bit()) << 1 | usize::from(kb.permute_bit());
        let key = row_key(&ka, &kb, gate_index as u64);
        wires[g.out as usize] = WireLabel(table.rows[row]).xor(&key);
    }
    Ok(c.outputs().iter().map(|&w| wires[w as usize]).collect())
}

/// Turns output labels into bits, failing on any label that matches neither
/// recorded check hash (corrupted tables or wrong input labels).
pub fn decode_outputs(
    output_labels: &[WireLabel],
    decoding: &OutputDecoding,
) -> Result<Vec<bool>, GarbleError> {
    if output_labels.len() != decoding.len() {
        return Err(GarbleError::Length {
            expected: decoding.len(),
            got: output_labels.len(),
        });
    }
    let mut bits = Vec::with_capacity(output_labels.len());
    for (i, label) in output_labels.iter().enumerate() {
        let check = output_check(i as u32, label);
        let entry = &decoding.checks[i];
        let semantic = if check == entry[0] {
            false
        } else if check == entry[1] {
            true
        } else {
            return Err(GarbleError::Integrity { output: i });
        };
        // The permute-bit route must agree with the hash route.
        debug_assert_eq!(semantic, label.permute_bit() ^ decoding.bits[i]);
        bits.push(semantic);
    }
    Ok(bits)
}

impl GarbledCircuit {
    /// Hash, row-count, rows in gate order, then output decoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            32 + 4 + self.gates.len() * 4 * LABEL_BYTES
                + 4
                + self.decoding.len() * (1 + 2 * LABEL_BYTES),
        );
        out.extend_from_slice(&self.circuit_hash);
        out.extend_from_slice(&(self.gates.len() as u32).to_le_bytes());
        for g in &self.gates {
            for row in &g.rows {
                out.extend_from_slice(row);
            }
        }
        out.extend_from_slice(&(self.decoding.len() as u32).to_le_bytes());
        for (i, checks) in self.decoding.checks.iter().enumerate() {
            out.push(u8::from(self.decoding.bits[i]));
            out.extend_from_slice(&checks[0]);
            out.extend_from_slice(&checks[1]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GarbledCircuit, GarbleError> {
        let err = |m: &str| GarbleError::Format(m.into());
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], GarbleError> {
            if bytes.len() - *pos < n {
                return Err(GarbleError::Format(alloc::format!(
                    "truncated at byte {pos}"
                )));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let mut pos = 0;
        let circuit_hash: [u8; 32] = take(&mut pos, 32)?.try_into().unwrap();
        let n_gates =
            u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        if n_gates > bytes.len() / (4 * LABEL_BYTES) {
            return Err(err("gate count exceeds input"));
        }
        let mut gates = Vec::with_capacity(n_gates);
        for _ in 0..n_gates {
            let mut rows = [[0u8; LABEL_BYTES]; 4];
            for row in &mut rows {
                row.copy_from_slice(take(&mut pos, LABEL_BYTES)?);
            }
            gates.push(GarbledGate { rows });
        }
        let n_out = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        if n_out > bytes.len() / (1 + 2 * LABEL_BYTES) {
            return Err(err("output count exceeds input"));
        }
        let mut bits = Vec::with_capacity(n_out);
        let mut checks = Vec::with_capacity(n_out);
        for _ in 0..n_out {
            let flag = take(&mut pos, 1)?[0];
            if flag > 1 {
                return Err(err("decoding bit must be 0 or 1"));
            }
            bits.push(flag == 1);
            let c0 = truncate(take(&mut pos, LABEL_BYTES)?);
            let c1 = truncate(take(&mut pos, LABEL_BYTES)?);
            checks.push([c0, c1]);
        }
        if pos != bytes.len() {
            return Err(err("trailing bytes"));
        }
        Ok(GarbledCircuit {
            circuit_hash,
            gates,
            decoding: OutputDecoding { bits, checks },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_adder, build_multiplier, Circuit, Gate};
    use crate::fixedpoint::{
        bits_to_word, encode, fx_add, fx_mul, word_to_bits, FixedPointFormat, FixedWord,
    };
    use alloc::vec;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn seed(tag: u64) -> [u8; SEED_BYTES] {
        let mut s = [0u8; SEED_BYTES];
        s[..8].copy_from_slice(&tag.to_le_bytes());
        s
    }

    fn run(
        c: &Circuit,
        bits_a: &[bool],
        bits_b: &[bool],
        seed_tag: u64,
    ) -> Vec<bool> {
        let (gc, pairs) = garble(c, &seed(seed_tag));
        let na = c.input_a().len();
        let labels_a = select_labels(&pairs[..na], bits_a).unwrap();
        let labels_b = select_labels(&pairs[na..], bits_b).unwrap();
        let mut input_labels = labels_a;
        input_labels.extend(labels_b);
        let out_labels = evaluate(&gc, c, &input_labels).unwrap();
        decode_outputs(&out_labels, &gc.decoding).unwrap()
    }

    fn single_gate(kind: GateKind) -> Circuit {
        Circuit::from_parts(
            FixedPointFormat::Q32_16,
            0,
            vec![0],
            vec![1],
            vec![2],
            vec![Gate {
                kind,
                a: 0,
                b: 1,
                out: 2,
            }],
        )
        .unwrap()
    }

    #[test]
    fn or_gate_truth_table_through_garbling() {
        let c = single_gate(GateKind::Or);
        assert_eq!(run(&c, &[false], &[false], 1), vec![false]);
        assert_eq!(run(&c, &[false], &[true], 2), vec![true]);
        assert_eq!(run(&c, &[true], &[false], 3), vec![true]);
        assert_eq!(run(&c, &[true], &[true], 4), vec![true]);
    }

    #[test]
    fn identity_circuit_returns_input_labels() {
        let c = Circuit::from_parts(
            FixedPointFormat::Q32_16,
            0,
            vec![0, 1],
            vec![2],
            vec![2, 0, 1],
            vec![],
        )
        .unwrap();
        let (gc, pairs) = garble(&c, &seed(9));
        let chosen = select_labels(&pairs, &[true, false, true]).unwrap();
        let out = evaluate(&gc, &c, &chosen).unwrap();
        assert_eq!(out, vec![chosen[2], chosen[0], chosen[1]]);
        assert_eq!(
            decode_outputs(&out, &gc.decoding).unwrap(),
            vec![true, true, false]
        );
    }

    #[test]
    fn label_pairs_have_opposite_permute_bits_and_no_collisions() {
        let c = build_adder(FixedPointFormat::Q32_16).unwrap();
        let (_, pairs) = garble(&c, &seed(7));
        let mut seen = alloc::collections::BTreeSet::new();
        for pair in &pairs {
            assert_ne!(pair[0].permute_bit(), pair[1].permute_bit());
            assert!(seen.insert(pair[0].0));
            assert!(seen.insert(pair[1].0));
        }
    }

    #[test]
    fn garbling_is_seed_deterministic() {
        let c = build_adder(FixedPointFormat::new(8, 3).unwrap()).unwrap();
        let (gc1, p1) = garble(&c, &seed(11));
        let (gc2, p2) = garble(&c, &seed(11));
        let (gc3, _) = garble(&c, &seed(12));
        assert_eq!(gc1, gc2);
        assert_eq!(p1, p2);
        assert_ne!(gc1, gc3);
        assert_eq!(gc1.to_bytes(), gc2.to_bytes());
    }

    #[test]
    fn free_not_flips_through_long_chains() {
        let fmt = FixedPointFormat::Q32_16;
        let mut gates = Vec::new();
        for i in 0..5u32 {
            let a = i + 1;
            gates.push(Gate {
                kind: GateKind::Not,
                a,
                b: a,
                out: a + 1,
            });
        }
        let c = Circuit::from_parts(fmt, 0, vec![0], vec![1], vec![6], gates).unwrap();
        // Wire 6 = NOT^5 applied to input_b.
        assert_eq!(run(&c, &[false], &[true], 20), vec![false]);
        assert_eq!(run(&c, &[false], &[false], 21), vec![true]);
    }

    #[test]
    fn word_circuits_match_fixedpoint_through_garbling() {
        let fmt = FixedPointFormat::new(8, 3).unwrap();
        let adder = build_adder(fmt).unwrap();
        let multiplier = build_multiplier(fmt).unwrap();
        let mut rng = StdRng::seed_from_u64(0x6a5b);
        for round in 0..20 {
            let a = FixedWord::from_bits(rng.random(), fmt);
            let b = FixedWord::from_bits(rng.random(), fmt);
            let ba = word_to_bits(a, fmt);
            let bb = word_to_bits(b, fmt);
            let sum = bits_to_word(&run(&adder, &ba, &bb, 100 + round), fmt).unwrap();
            assert_eq!(sum, fx_add(a, b, fmt));
            let prod = bits_to_word(&run(&multiplier, &ba, &bb, 200 + round), fmt).unwrap();
            assert_eq!(prod, fx_mul(a, b, fmt));
        }
    }

    #[test]
    fn corrupted_table_detected_at_decode() {
        let c = single_gate(GateKind::And);
        let (mut gc, pairs) = garble(&c, &seed(31));
        // Flip one ciphertext byte in every row so whichever row is selected
        // decrypts to a label that fails the output check.
        for row in &mut gc.gates[0].rows {
            row[3] ^= 0x40;
        }
        let labels = select_labels(&pairs, &[true, true]).unwrap();
        let out = evaluate(&gc, &c, &labels).unwrap();
        assert_eq!(
            decode_outputs(&out, &gc.decoding),
            Err(GarbleError::Integrity { output: 0 })
        );
    }

    #[test]
    fn mismatched_circuit_rejected() {
        let c1 = single_gate(GateKind::And);
        let c2 = single_gate(GateKind::Or);
        let (gc, pairs) = garble(&c1, &seed(41));
        let labels = select_labels(&pairs, &[true, false]).unwrap();
        assert!(matches!(
            evaluate(&gc, &c2, &labels),
            Err(GarbleError::CircuitMismatch(_))
        ));
        assert!(matches!(
            evaluate(&gc, &c1, &labels[..1]),
            Err(GarbleError::Length { .. })
        ));
    }

    #[test]
    fn serialization_round_trip_and_rejects() {
        let c = build_adder(FixedPointFormat::new(6, 2).unwrap()).unwrap();
        let (gc, _) = garble(&c, &seed(55));
        let bytes = gc.to_bytes();
        assert_eq!(GarbledCircuit::from_bytes(&bytes).unwrap(), gc);
        assert!(GarbledCircuit::from_bytes(&bytes[..bytes.len() - 2]).is_err());
        let mut trailing = bytes.clone();
        trailing.push(7);
        assert!(GarbledCircuit::from_bytes(&trailing).is_err());
        assert!(GarbledCircuit::from_bytes(&[]).is_err());
    }

    #[test]
    fn encode_bits_stay_hidden_in_tables() {
        // Obliviousness smoke test: the garbler's input byte patterns must
        // not appear inside the transmitted tables.
        let fmt = FixedPointFormat::Q32_16;
        let c = build_adder(fmt).unwrap();
        let secret = encode(2107.75, fmt).unwrap();
        let (gc, _) = garble(&c, &seed(77));
        let blob = gc.to_bytes();
        let pattern = (secret.pattern(fmt) as u32).to_le_bytes();
        let found = blob.windows(4).any(|w| w == pattern);
        assert!(!found, "input word leaked into garbled tables");
    }
}
