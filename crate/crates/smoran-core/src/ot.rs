//! 1-out-of-2 oblivious transfer in the three-message Diffie-Hellman style,
//! semi-honest model.
//!
//! Flow, written multiplicatively: the sender draws a and sends A = g^a; the
//! receiver with choice bit σ draws b and sends B = g^b (σ = 0) or A·g^b
//! (σ = 1); the sender derives k_i = H((B/A^i)^a) for i ∈ {0, 1} and sends
//! e_i = k_i ⊕ K^i; the receiver recovers K^σ = e_σ ⊕ H(A^b). Exactly one of
//! the sender's keys equals the receiver's, and B is a uniform group element
//! either way, hiding σ.
//!
//! The construction is generic over the group: production uses Ristretto
//! (prime order, 32-byte encodings); tests can use a tiny Schnorr group for
//! hand-checkable vectors. One OT moves one 128-bit wire label; the
//! recovered label carries no redundancy, so a corrupted transfer surfaces
//! later at garbled-output decoding, not here.

use alloc::string::String;
use alloc::vec::Vec;
use curve25519_dalek::constants::RISTRETTO_BASEPOINT_POINT;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Width of the transferred strings: one wire label.
pub const OT_MSG_BYTES: usize = 16;

pub type OtMessage = [u8; OT_MSG_BYTES];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OtError {
    #[error("invalid group element encoding: {0}")]
    GroupElement(String),
}

/// A prime-order group exposing exactly the operations the transfer needs.
/// Multiplicative naming; an additive group maps pow to scalar
/// multiplication, mul to point addition and div to subtraction.
pub trait OtGroup {
    type Scalar: Clone;
    type Point: Clone + PartialEq;

    fn name(&self) -> &'static str;
    /// Fixed width of [`OtGroup::encode_point`] output.
    fn point_bytes(&self) -> usize;
    fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Self::Scalar;
    fn base_pow(&self, e: &Self::Scalar) -> Self::Point;
    fn pow(&self, p: &Self::Point, e: &Self::Scalar) -> Self::Point;
    fn mul(&self, p: &Self::Point, q: &Self::Point) -> Self::Point;
    fn div(&self, p: &Self::Point, q: &Self::Point) -> Self::Point;
    fn encode_point(&self, p: &Self::Point) -> Vec<u8>;
    fn decode_point(&self, bytes: &[u8]) -> Result<Self::Point, OtError>;

    /// Key derivation: domain-tagged hash of the point encoding, truncated
    /// to the message width.
    fn key_from_point(&self, p: &Self::Point) -> OtMessage {
        let mut h = Sha256::new();
        h.update(b"ot-key");
        h.update(self.encode_point(p));
        h.finalize()[..OT_MSG_BYTES].try_into().unwrap()
    }
}

/// Ristretto over Curve25519: prime-order, 32-byte canonical encodings,
/// ≥ 128-bit security. The production group.
#[derive(Debug, Clone, Copy, Default)]
pub struct RistrettoGroup;

impl OtGroup for RistrettoGroup {
    type Scalar = Scalar;
    type Point = RistrettoPoint;

    fn name(&self) -> &'static str {
        "ristretto255"
    }

    fn point_bytes(&self) -> usize {
        32
    }

    fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Scalar::from_bytes_mod_order_wide(&wide)
    }

    fn base_pow(&self, e: &Scalar) -> RistrettoPoint {
        RistrettoPoint::mul_base(e)
    }

    fn pow(&self, p: &RistrettoPoint, e: &Scalar) -> RistrettoPoint {
        p * e
    }

    fn mul(&self, p: &RistrettoPoint, q: &RistrettoPoint) -> RistrettoPoint {
        p + q
    }

    fn div(&self, p: &RistrettoPoint, q: &RistrettoPoint) -> RistrettoPoint {
        p - q
    }

    fn encode_point(&self, p: &RistrettoPoint) -> Vec<u8> {
        p.compress().to_bytes().to_vec()
    }

    fn decode_point(&self, bytes: &[u8]) -> Result<RistrettoPoint, OtError> {
        let compressed = CompressedRistretto::from_slice(bytes)
            .map_err(|_| OtError::GroupElement("expected 32 bytes".into()))?;
        compressed
            .decompress()
            .ok_or_else(|| OtError::GroupElement("not a canonical ristretto point".into()))
    }
}

/// Tiny Schnorr group: the order-641 subgroup of Z_1283* generated by 4.
/// Only for tests and deterministic vectors; offers no security.
#[derive(Debug, Clone, Copy)]
pub struct ToyGroup {
    p: u64,
    q: u64,
    g: u64,
}

impl Default for ToyGroup {
    fn default() -> Self {
        ToyGroup {
            p: 1283,
            q: 641,
            g: 4,
        }
    }
}

impl ToyGroup {
    fn modmul(&self, a: u64, b: u64) -> u64 {
        ((u128::from(a) * u128::from(b)) % u128::from(self.p)) as u64
    }

    fn modpow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.modmul(acc, base);
            }
            base = self.modmul(base, base);
            exp >>= 1;
        }
        acc
    }

    fn modinv(&self, a: u64) -> u64 {
        // p is prime, so a^(p-2) inverts nonzero a.
        self.modpow(a, self.p - 2)
    }

    fn in_subgroup(&self, v: u64) -> bool {
        v != 0 && v < self.p && self.modpow(v, self.q) == 1
    }
}

impl OtGroup for ToyGroup {
    type Scalar = u64;
    type Point = u64;

    fn name(&self) -> &'static str {
        "toy-1283"
    }

    fn point_bytes(&self) -> usize {
        8
    }

    fn random_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> u64 {
        // Uniform in [1, q): rejection sampling, zero excluded so no message
        // degenerates to the identity.
        let m = self.q - 1;
        let zone = u64::MAX - (u64::MAX % m);
        loop {
            let v = rng.next_u64();
            if v < zone {
                return v % m + 1;
            }
        }
    }

    fn base_pow(&self, e: &u64) -> u64 {
        self.modpow(self.g, *e)
    }

    fn pow(&self, p: &u64, e: &u64) -> u64 {
        self.modpow(*p, *e)
    }

    fn mul(&self, p: &u64, q: &u64) -> u64 {
        self.modmul(*p, *q)
    }

    fn div(&self, p: &u64, q: &u64) -> u64 {
        self.modmul(*p, self.modinv(*q))
    }

    fn encode_point(&self, p: &u64) -> Vec<u8> {
        p.to_le_bytes().to_vec()
    }

    fn decode_point(&self, bytes: &[u8]) -> Result<u64, OtError> {
        let arr: [u8; 8] = bytes
            .try_into()
            .map_err(|_| OtError::GroupElement("expected 8 bytes".into()))?;
        let v = u64::from_le_bytes(arr);
        if !self.in_subgroup(v) {
            return Err(OtError::GroupElement(alloc::format!(
                "{v} is not in the order-{} subgroup",
                self.q
            )));
        }
        Ok(v)
    }
}

/// Sender state between round 1 and round 2. Single-use.
pub struct OtSenderState<G: OtGroup> {
    a: G::Scalar,
    big_a: G::Point,
}

/// Receiver state between round 1 and finish: only the derived key and the
/// choice bit survive. Single-use.
pub struct OtReceiverState {
    sigma: bool,
    key: OtMessage,
}

/// Sender draws a and announces A = g^a.
pub fn ot_sender_round1<G: OtGroup, R: RngCore + CryptoRng>(
    group: &G,
    rng: &mut R,
) -> (OtSenderState<G>, G::Point) {
    let a = group.random_scalar(rng);
    let big_a = group.base_pow(&a);
    let state = OtSenderState {
        a,
        big_a: big_a.clone(),
    };
    (state, big_a)
}

/// Receiver draws b and answers B = g^b or A·g^b depending on σ; the shared
/// key H(A^b) is fixed here.
pub fn ot_receiver_round1<G: OtGroup, R: RngCore + CryptoRng>(
    group: &G,
    sigma: bool,
    msg_a: &G::Point,
    rng: &mut R,
) -> (OtReceiverState, G::Point) {
    let b = group.random_scalar(rng);
    let gb = group.base_pow(&b);
    let msg_b = if sigma { group.mul(msg_a, &gb) } else { gb };
    let key = group.key_from_point(&group.pow(msg_a, &b));
    (OtReceiverState { sigma, key }, msg_b)
}

/// Sender encrypts both strings: e_i = H((B/A^i)^a) ⊕ pair[i].
pub fn ot_sender_round2<G: OtGroup>(
    group: &G,
    state: OtSenderState<G>,
    msg_b: &G::Point,
    pair: &[OtMessage; 2],
) -> (OtMessage, OtMessage) {
    let k0 = group.key_from_point(&group.pow(msg_b, &state.a));
    let shifted = group.div(msg_b, &state.big_a);
    let k1 = group.key_from_point(&group.pow(&shifted, &state.a));
    (xor(&k0, &pair[0]), xor(&k1, &pair[1]))
}

/// Receiver opens the chosen ciphertext; the other stays opaque.
pub fn ot_receiver_finish(state: OtReceiverState, e0: &OtMessage, e1: &OtMessage) -> OtMessage {
    let chosen = if state.sigma { e1 } else { e0 };
    xor(&state.key, chosen)
}

fn xor(a: &OtMessage, b: &OtMessage) -> OtMessage {
    let mut out = *a;
    for (o, x) in out.iter_mut().zip(b) {
        *o ^= x;
    }
    out
}

/// Runs one OT per (pair, bit) entirely in memory with independent
/// randomness, returning the chosen strings positionally. For tests and as
/// executable documentation of the message flow; the networked sessions
/// interleave the same rounds over frames.
pub fn local_batch<G: OtGroup, R: RngCore + CryptoRng>(
    group: &G,
    rng: &mut R,
    pairs: &[[OtMessage; 2]],
    bits: &[bool],
) -> Vec<OtMessage> {
    assert_eq!(pairs.len(), bits.len());
    pairs
        .iter()
        .zip(bits)
        .map(|(pair, &bit)| {
            let (s_state, msg_a) = ot_sender_round1(group, rng);
            let (r_state, msg_b) = ot_receiver_round1(group, bit, &msg_a, rng);
            let (e0, e1) = ot_sender_round2(group, s_state, &msg_b, pair);
            ot_receiver_finish(r_state, &e0, &e1)
        })
        .collect()
}
