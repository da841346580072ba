//! Jump-like unravelings of a driven two-level atom coupled to a small
//! discrete bosonic bath.
//!
//! The library integrates the combined atom+bath Schrodinger equation in the
//! interaction frame (the guiding state) and runs Bell-style modal jump
//! dynamics for the bath photon numbers over a preferred projective measure,
//! in either the spectral-mode or the DFT-combined temporal-mode basis. The
//! guiding state drives the jumps but is never affected by them, so it is
//! computed once per parameter set and shared read-only by every trajectory
//! of an ensemble.
//!
//! Module map:
//!
//! - [`hilbert`]: truncated composite space, basis indexing, ladder and
//!   atomic operators, DFT mode combinations.
//! - [`models`]: driving and coupling Hamiltonians for the single-mode and
//!   three-mode scenarios, spectral or temporal basis.
//! - [`guiding`]: fixed-step RK4 integration, snapshot storage, norm and
//!   truncation-leakage diagnostics, snapshot cache file.
//! - [`beable`]: Born probabilities, probability currents, Bell transition
//!   rates, jump sampling, conditioned states.
//! - [`unravel`]: trajectory and ensemble runners with deterministic
//!   counter-based seeding.
//! - [`analysis`]: partial-trace reduced state, Bloch conversion,
//!   ensemble-versus-exact comparison, temporal-coupling profiles.

pub mod analysis;
pub mod beable;
pub mod guiding;
pub mod hilbert;
pub mod models;
pub mod unravel;
