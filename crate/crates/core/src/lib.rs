//! Secrecy degrees of freedom of the two-user compound MIMO broadcast channel
//! with confidential messages.
//!
//! * [`gaussian`]: constant-state model, null-space beamforming with
//!   Gaussian superposition and the exact achievable region over
//!   `(r0, r1, r2)`.
//! * [`ergodic`]: block-fading MISO model, zero-forcing with variable-rate
//!   secrecy accounting and the exact regions over `(r1, r2)`.
//! * [`experiment`]: reproducible batch runs behind the `sdof` binary.

pub mod channel;
pub mod ergodic;
pub mod experiment;
pub mod gaussian;
pub mod matcore;
pub mod region;
pub mod rng;
pub mod sdof;
