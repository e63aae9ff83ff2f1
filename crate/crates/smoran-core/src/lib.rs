//! Core algorithms for two-party secure computation of bivariate Moran's I.
//!
//! The crate is split along the protocol's data path:
//!
//! * [`fixedpoint`]: two's-complement fixed-point words and the exact
//!   arithmetic (`fx_add`, `fx_mul`) that circuits, oracles and both parties
//!   share bit for bit.
//! * [`esda`]: plaintext spatial statistics: weight matrices,
//!   standardization, Moran post-processing, permutation significance and
//!   cluster labels.
//! * [`circuit`]: a Boolean circuit IR plus builders that compile the
//!   interactive part of the global and local statistics into AND/OR/XOR/NOT
//!   gates over fixed-point words.
//! * [`garble`]: Yao garbling with point-and-permute, plus evaluation and
//!   output decoding.
//! * [`ot`]: 1-of-2 oblivious transfer in the three-message Diffie-Hellman
//!   style, generic over the group.
//! * [`oracle`]: reference executions (float and fixed point) used to
//!   validate every other layer and to drive the plaintext mode.
//!
//! Everything here is pure computation over byte buffers; sockets, files and
//! command-line plumbing live in the companion `smoran-cli` crate. The crate
//! builds without `std` (with `alloc`) so the kernels can be embedded.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod circuit;
pub mod esda;
pub mod fixedpoint;
pub mod garble;
mod mathf;
pub mod oracle;
pub mod ot;

pub use circuit::{Circuit, CircuitError, CircuitStats, Gate, GateKind, WireId};
pub use esda::{Cluster, EsdaError, MoranResult, WeightMatrix};
pub use fixedpoint::{FixedPointError, FixedPointFormat, FixedWord};
pub use garble::{GarbleError, GarbledCircuit, WireLabel};
