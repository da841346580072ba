//! Modal (Bell) dynamics over a preferred projective measure of bath photon
//! numbers: Born probabilities, probability currents, Bell transition rates,
//! jump sampling, and conditioned-state extraction.
//!
//! The preferred measure assigns objective values to the bath occupation
//! numbers; each pointer configuration `n = (n_1..n_k)` carries the rank-2
//! projector `pi_n = 1_sys (x) |n><n|`. With the guiding state `Psi(t)` the
//! Born weight is `Pr(n,t) = <Psi|pi_n|Psi>` and the probability current
//! between configurations is
//!
//! ```text
//! J_nm(t) = 2 Im{ <Psi| pi_n [H_int + V_int(t)] pi_m |Psi> }
//! ```
//!
//! Because the coupling is linear in the bath amplitudes, `J_nm` vanishes
//! unless `n` and `m` differ by one photon in exactly one mode, and the drive
//! (bath-diagonal) never contributes off-diagonally. Bell's minimal solution
//! turns positive currents into one-sided rates `T_nm = max(J_nm,0)/Pr(m)`.

use crate::hilbert::{HilbertSpec, StateVector};
use crate::models::{BasisKind, HamiltonianModel};
use num_complex::Complex64 as C64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeableError {
    #[error("configuration rank {rank} out of range 0..{num_configs}")]
    ConfigOutOfRange { rank: usize, num_configs: usize },
    #[error("conditioned slice has zero weight for configuration rank {rank}")]
    DegenerateSlice { rank: usize },
    #[error("total jump probability {p} exceeds 1; dt too large for the rates")]
    JumpProbabilityExceedsOne { p: f64 },
    #[error("measure basis {measure} does not match model basis {model}")]
    BasisMismatch { measure: BasisKind, model: BasisKind },
    #[error("state dimension {state} does not match measure dimension {measure}")]
    DimensionMismatch { state: usize, measure: usize },
}

/// The value of the bath hidden variable: one occupation number per mode of
/// the unraveling basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointerConfig {
    pub occupations: Vec<usize>,
}

impl PointerConfig {
    pub fn label(&self) -> String {
        self.occupations
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Enumeration of all pointer configurations of a space together with their
/// projector supports. Projectors are orthogonal and complete by
/// construction: every composite basis index belongs to exactly one config.
#[derive(Debug, Clone)]
pub struct PreferredMeasure {
    kind: BasisKind,
    spec: HilbertSpec,
}

impl PreferredMeasure {
    pub fn new(spec: HilbertSpec, kind: BasisKind) -> Self {
        Self { kind, spec }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn num_configs(&self) -> usize {
        self.spec.bath_dim()
    }

    pub fn config(&self, rank: usize) -> PointerConfig {
        PointerConfig {
            occupations: self.spec.bath_occupations(rank),
        }
    }

    pub fn rank(&self, config: &PointerConfig) -> usize {
        self.spec.bath_rank(&config.occupations)
    }

    /// Flat composite indices `(ground, excited)` supporting the rank-2
    /// projector of `rank`.
    pub fn support(&self, rank: usize) -> (usize, usize) {
        (rank, self.spec.bath_dim() + rank)
    }

    /// One-quantum neighbors of `rank` in canonical order: for each mode
    /// 1..=k, down first, then up.
    pub fn neighbors(&self, rank: usize) -> Vec<Neighbor> {
        let mut out = Vec::with_capacity(2 * self.spec.num_modes());
        for mode in 1..=self.spec.num_modes() {
            let n = self.spec.mode_digit(rank, mode);
            let stride = self.spec.stride(mode);
            if n > 0 {
                out.push(Neighbor {
                    rank: rank - stride,
                    mode,
                    delta: -1,
                });
            }
            if n < self.spec.cutoff() {
                out.push(Neighbor {
                    rank: rank + stride,
                    mode,
                    delta: 1,
                });
            }
        }
        out
    }

    /// Occupation difference if `n` and `m` are one-quantum neighbors:
    /// `(mode, delta)` with `delta = n_mode - m_mode`.
    pub fn one_quantum_step(&self, n: usize, m: usize) -> Option<(usize, i8)> {
        let occ_n = self.spec.bath_occupations(n);
        let occ_m = self.spec.bath_occupations(m);
        let mut found: Option<(usize, i8)> = None;
        for k in 0..occ_n.len() {
            if occ_n[k] == occ_m[k] {
                continue;
            }
            let d = occ_n[k] as i64 - occ_m[k] as i64;
            if d.abs() != 1 || found.is_some() {
                return None;
            }
            found = Some((k + 1, d as i8));
        }
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub rank: usize,
    /// Mode slot, 1-based.
    pub mode: usize,
    /// Photon-number change, +1 or -1.
    pub delta: i8,
}

/// Knobs for rate clamping near zero-probability configurations.
#[derive(Debug, Clone, Copy)]
pub struct JumpPolicy {
    /// Born weights below this floor are treated as the floor when dividing;
    /// Bell's formula is singular there and such configs are dynamically
    /// irrelevant anyway.
    pub probability_floor: f64,
    /// Soft bound on the per-step jump probability. Crossing it triggers a
    /// warning diagnostic, or a clamp when the floor was hit.
    pub max_jump_probability: f64,
}

impl Default for JumpPolicy {
    fn default() -> Self {
        Self {
            probability_floor: 1e-12,
            max_jump_probability: 0.1,
        }
    }
}

/// Born weight of a configuration: the sum of `|amplitude|^2` over the
/// projector support.
pub fn born_probability(state: &StateVector, measure: &PreferredMeasure, rank: usize) -> f64 {
    let (g, e) = measure.support(rank);
    state[g].norm_sqr() + state[e].norm_sqr()
}

/// Unnormalized conditioned slice `(excited, ground)` of a configuration.
#[inline]
fn slice(state: &StateVector, measure: &PreferredMeasure, rank: usize) -> (C64, C64) {
    let (g, e) = measure.support(rank);
    (state[e], state[g])
}

/// Upward probability current from `lo` into `lo + e_mode`, evaluated from
/// the conditioned slices; only the mode-changing coupling terms survive the
/// projector sandwich.
fn upward_current(
    state: &StateVector,
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    lo: usize,
    mode: usize,
    t: f64,
) -> f64 {
    let spec = measure.spec();
    let n_lo = spec.mode_digit(lo, mode);
    debug_assert!(n_lo < spec.cutoff());
    let hi = lo + spec.stride(mode);
    let (e_lo, _) = slice(state, measure, lo);
    let (_, g_hi) = slice(state, measure, hi);
    let c = model.coupling(mode, t);
    let root = ((n_lo + 1) as f64).sqrt();
    2.0 * root * (c.conj() * g_hi.conj() * e_lo).re
}

/// Probability current `J_nm(t)` between configurations `n` and `m`
/// (ranks). Zero unless the two differ by one photon in one mode; exactly
/// antisymmetric under swapping `n` and `m` because both directions are
/// computed from the same canonical upward evaluation.
pub fn current(
    state: &StateVector,
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    n: usize,
    m: usize,
    t: f64,
) -> f64 {
    if n == m {
        return 0.0;
    }
    match measure.one_quantum_step(n, m) {
        Some((mode, 1)) => upward_current(state, model, measure, m, mode, t),
        Some((mode, -1)) => -upward_current(state, model, measure, n, mode, t),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RateEntry {
    pub target: usize,
    /// Mode slot, 1-based.
    pub mode: usize,
    pub delta: i8,
    /// Current into the target, `J_{target, source}`.
    pub current: f64,
    /// Bell rate out of the source toward the target.
    pub rate: f64,
}

/// Outgoing Bell rates from one configuration to its one-quantum neighbors.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub source: usize,
    pub source_probability: f64,
    pub entries: Vec<RateEntry>,
    pub total_rate: f64,
    /// The source Born weight sat below the probability floor.
    pub floor_hit: bool,
}

/// Bell's rate solution out of configuration `m`: `T_nm = max(J_nm, 0)/Pr(m)`
/// for the one-quantum neighbors `n`, everything else exactly zero.
pub fn bell_rates(
    state: &StateVector,
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    m: usize,
    t: f64,
    policy: &JumpPolicy,
) -> RateTable {
    let pr = born_probability(state, measure, m);
    let floor_hit = pr < policy.probability_floor;
    let denom = pr.max(policy.probability_floor);
    let mut entries = Vec::with_capacity(2 * measure.spec().num_modes());
    let mut total = 0.0;
    for nb in measure.neighbors(m) {
        let j = if nb.delta == 1 {
            upward_current(state, model, measure, m, nb.mode, t)
        } else {
            -upward_current(state, model, measure, nb.rank, nb.mode, t)
        };
        let rate = if j > 0.0 { j / denom } else { 0.0 };
        total += rate;
        entries.push(RateEntry {
            target: nb.rank,
            mode: nb.mode,
            delta: nb.delta,
            current: j,
            rate,
        });
    }
    RateTable {
        source: m,
        source_probability: pr,
        entries,
        total_rate: total,
        floor_hit,
    }
}

/// Outcome of one sampling step.
#[derive(Debug, Clone, Copy)]
pub struct StepSample {
    /// Rank occupied after the step.
    pub next: usize,
    /// Index into the rate-table entries when a jump fired.
    pub jump: Option<usize>,
    /// Rates were rescaled to honor `max_jump_probability` after a floor hit.
    pub clamped: bool,
    /// Per-step probability exceeded `max_jump_probability` without a floor
    /// hit; the step proceeded, callers should surface the warning.
    pub pmax_exceeded: bool,
}

/// Advance the pointer one grid step: with probability `sum T dt` jump to a
/// neighbor chosen proportionally to its rate, otherwise stay. Exactly one
/// uniform draw is consumed per call; zero or one jump happens per step.
pub fn sample_step<R: Rng + ?Sized>(
    table: &RateTable,
    dt: f64,
    policy: &JumpPolicy,
    rng: &mut R,
) -> Result<StepSample, BeableError> {
    let p_raw = table.total_rate * dt;
    let mut scale = 1.0;
    let mut clamped = false;
    let mut pmax_exceeded = false;
    if p_raw > policy.max_jump_probability {
        if table.floor_hit {
            scale = policy.max_jump_probability / p_raw;
            clamped = true;
        } else if p_raw > 1.0 {
            return Err(BeableError::JumpProbabilityExceedsOne { p: p_raw });
        } else {
            pmax_exceeded = true;
        }
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, e) in table.entries.iter().enumerate() {
        acc += e.rate * scale * dt;
        if u < acc {
            return Ok(StepSample {
                next: e.target,
                jump: Some(i),
                clamped,
                pmax_exceeded,
            });
        }
    }
    Ok(StepSample {
        next: table.source,
        jump: None,
        clamped,
        pmax_exceeded,
    })
}

/// Normalized conditioned system state of a configuration along with its
/// Born weight.
#[derive(Debug, Clone, Copy)]
pub struct ConditionedState {
    pub excited: C64,
    pub ground: C64,
    /// Born weight of the configuration (squared norm of the raw slice).
    pub weight: f64,
}

/// Conditioned system state `<config|Psi>/sqrt(N)`; errors on an exactly
/// degenerate (zero-weight) slice.
pub fn conditioned_state(
    state: &StateVector,
    measure: &PreferredMeasure,
    rank: usize,
) -> Result<ConditionedState, BeableError> {
    if rank >= measure.num_configs() {
        return Err(BeableError::ConfigOutOfRange {
            rank,
            num_configs: measure.num_configs(),
        });
    }
    let (e, g) = slice(state, measure, rank);
    let weight = e.norm_sqr() + g.norm_sqr();
    if weight <= 0.0 {
        return Err(BeableError::DegenerateSlice { rank });
    }
    let inv = 1.0 / weight.sqrt();
    Ok(ConditionedState {
        excited: e * inv,
        ground: g * inv,
        weight,
    })
}

/// Sample an initial configuration from the Born distribution at the given
/// snapshot. Consumes one uniform draw.
pub fn sample_born_config<R: Rng + ?Sized>(
    state: &StateVector,
    measure: &PreferredMeasure,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0usize;
    for rank in 0..measure.num_configs() {
        let p = born_probability(state, measure, rank);
        if p > 0.0 {
            last_nonzero = rank;
        }
        acc += p;
        if u < acc {
            return rank;
        }
    }
    // Roundoff can leave acc slightly below 1; fall back to the last
    // configuration that carries weight.
    last_nonzero
}
