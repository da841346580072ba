//! Trajectory and ensemble runners tying models, guiding states, and modal
//! jump dynamics together.
//!
//! All runners sweep the guiding state forward once and advance every
//! pointer trajectory in lockstep at each grid point, so the guiding state
//! is never re-integrated per trajectory even when its snapshot storage is
//! strided. Every trajectory owns a counter-derived RNG stream (ChaCha
//! stream = trajectory index under one master seed) and ensemble
//! aggregation folds fixed-size chunks in index order, which makes every
//! result reproducible and independent of the thread schedule.

use crate::analysis::bloch_of_pure;
use crate::beable::{
    bell_rates, conditioned_state, sample_born_config, sample_step, BeableError, JumpPolicy,
    PreferredMeasure,
};
use crate::guiding::{GuidingError, GuidingTrajectory, TimeGrid};
use crate::hilbert::{HilbertSpec, StateVector};
use crate::models::{BasisKind, HamiltonianModel};
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rayon::prelude::*;
use thiserror::Error;

/// Trajectories aggregated per ensemble chunk; fixed so the reduction order
/// never depends on the thread schedule.
const CHUNK: usize = 64;

#[derive(Debug, Error)]
pub enum UnravelError {
    #[error("measure basis {measure} does not match model basis {model}")]
    BasisMismatch { measure: BasisKind, model: BasisKind },
    #[error("guiding trajectory does not belong to this model (fingerprint mismatch)")]
    GuidingMismatch,
    #[error("ensemble needs at least one trajectory")]
    EmptyEnsemble,
    #[error(transparent)]
    Beable(#[from] BeableError),
    #[error(transparent)]
    Guiding(#[from] GuidingError),
}

/// Photon-number measure in the spectral-mode basis.
pub fn spectral_measure(spec: &HilbertSpec) -> PreferredMeasure {
    PreferredMeasure::new(spec.clone(), BasisKind::Spectral)
}

/// Photon-number measure over the DFT-combined temporal modes; same
/// enumeration, interpreted over temporal occupation numbers.
pub fn temporal_measure(spec: &HilbertSpec) -> PreferredMeasure {
    PreferredMeasure::new(spec.clone(), BasisKind::Temporal)
}

/// One logged pointer jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    /// Grid point index at which the new configuration first holds.
    pub step: usize,
    pub time: f64,
    pub from: usize,
    pub to: usize,
    /// Mode slot (1-based) that exchanged the photon.
    pub mode: usize,
    /// +1 for an upward jump, -1 for downward.
    pub delta: i8,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrajectoryDiagnostics {
    /// Steps where rates were clamped after a probability-floor hit.
    pub clamp_events: usize,
    /// Steps whose raw jump probability exceeded the soft bound.
    pub pmax_warnings: usize,
    /// Copied from the guiding run.
    pub leakage_flagged: bool,
}

/// One hidden-variable trajectory: the pointer configuration (as a config
/// rank), the conditioned-state Bloch vector and the guiding norm per grid
/// point, plus the jump log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub configs: Vec<usize>,
    pub bloch: Vec<[f64; 3]>,
    pub norms: Vec<f64>,
    pub jumps: Vec<JumpEvent>,
    pub diagnostics: TrajectoryDiagnostics,
    pub master_seed: u64,
    pub stream: u64,
}

fn check_setup(
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    guiding: &GuidingTrajectory,
) -> Result<(), UnravelError> {
    if measure.kind() != model.basis() {
        return Err(UnravelError::BasisMismatch {
            measure: measure.kind(),
            model: model.basis(),
        });
    }
    if guiding.fingerprint() != model.fingerprint() || guiding.dim() != model.spec().dim() {
        return Err(UnravelError::GuidingMismatch);
    }
    Ok(())
}

/// Per-trajectory state advanced through the lockstep sweep.
struct Cursor {
    stream: u64,
    rng: ChaCha8Rng,
    config: usize,
    clamp_events: usize,
    pmax_warnings: usize,
}

impl Cursor {
    fn new(master_seed: u64, stream: u64, state0: &StateVector, measure: &PreferredMeasure) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        let config = sample_born_config(state0, measure, &mut rng);
        Self {
            stream,
            rng,
            config,
            clamp_events: 0,
            pmax_warnings: 0,
        }
    }

    fn observe(
        &self,
        state: &StateVector,
        measure: &PreferredMeasure,
    ) -> Result<[f64; 3], BeableError> {
        let cond = conditioned_state(state, measure, self.config)?;
        Ok(bloch_of_pure(cond.excited, cond.ground))
    }

    /// Sample one grid step; returns the rate-table entry taken on a jump.
    fn advance(
        &mut self,
        state: &StateVector,
        model: &HamiltonianModel,
        measure: &PreferredMeasure,
        t: f64,
        dt: f64,
        policy: &JumpPolicy,
    ) -> Result<Option<(usize, usize, i8)>, BeableError> {
        let table = bell_rates(state, model, measure, self.config, t, policy);
        let sample = sample_step(&table, dt, policy, &mut self.rng)?;
        if sample.clamped {
            self.clamp_events += 1;
        }
        if sample.pmax_exceeded {
            self.pmax_warnings += 1;
        }
        if let Some(idx) = sample.jump {
            let e = &table.entries[idx];
            self.config = sample.next;
            return Ok(Some((e.target, e.mode, e.delta)));
        }
        Ok(None)
    }
}

/// Run trajectories for the streams `streams.start..streams.end` against a
/// shared guiding state, sweeping it forward exactly once. Full per-point
/// series are returned; prefer [`run_ensemble`] when only aggregates are
/// needed.
pub fn run_trajectories(
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    guiding: &GuidingTrajectory,
    master_seed: u64,
    streams: std::ops::Range<u64>,
    policy: &JumpPolicy,
) -> Result<Vec<Trajectory>, UnravelError> {
    check_setup(model, measure, guiding)?;
    let grid = *guiding.grid();
    let points = grid.num_points();
    let mut walker = guiding.walker(model);
    let state0 = walker.get(0)?;

    let mut cursors: Vec<Cursor> = streams
        .clone()
        .map(|s| Cursor::new(master_seed, s, state0, measure))
        .collect();
    let n = cursors.len();
    let mut configs = vec![Vec::with_capacity(points); n];
    let mut bloch = vec![Vec::with_capacity(points); n];
    let mut jumps = vec![Vec::new(); n];

    for j in 0..points {
        let state = walker.get(j)?;
        let t = grid.time(j);
        for (i, cur) in cursors.iter_mut().enumerate() {
            configs[i].push(cur.config);
            bloch[i].push(cur.observe(state, measure)?);
            if j < grid.steps {
                if let Some((target, mode, delta)) =
                    cur.advance(state, model, measure, t, grid.dt, policy)?
                {
                    jumps[i].push(JumpEvent {
                        step: j + 1,
                        time: grid.time(j + 1),
                        from: configs[i][j],
                        to: target,
                        mode,
                        delta,
                    });
                }
            }
        }
    }

    let norms = guiding.norms().to_vec();
    Ok(cursors
        .into_iter()
        .zip(configs)
        .zip(bloch)
        .zip(jumps)
        .map(|(((cur, configs), bloch), jumps)| Trajectory {
            grid,
            configs,
            bloch,
            norms: norms.clone(),
            jumps,
            diagnostics: TrajectoryDiagnostics {
                clamp_events: cur.clamp_events,
                pmax_warnings: cur.pmax_warnings,
                leakage_flagged: guiding.leakage_flagged(),
            },
            master_seed,
            stream: cur.stream,
        })
        .collect())
}

/// Run the single trajectory of RNG stream `stream`.
pub fn run_trajectory(
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    guiding: &GuidingTrajectory,
    master_seed: u64,
    stream: u64,
    policy: &JumpPolicy,
) -> Result<Trajectory, UnravelError> {
    let mut v = run_trajectories(model, measure, guiding, master_seed, stream..stream + 1, policy)?;
    Ok(v.remove(0))
}

/// Seeded collection of trajectories with per-time mean Bloch vector and
/// standard error of the mean.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub grid: TimeGrid,
    pub n: usize,
    pub mean: Vec<[f64; 3]>,
    pub se: Vec<[f64; 3]>,
    pub master_seed: u64,
    pub diagnostics: TrajectoryDiagnostics,
}

struct EnsembleChunk {
    cursors: Vec<Cursor>,
    sum: Vec<[f64; 3]>,
    sum_sq: Vec<[f64; 3]>,
}

/// Run `n` independent trajectories (streams `0..n`) and aggregate their
/// Bloch series. With `threads = 0` the global rayon pool is used; any
/// positive value bounds the parallelism. Trajectories are aggregated into
/// fixed chunks folded in index order, so the result is identical for every
/// schedule; only the running time changes.
pub fn run_ensemble(
    model: &HamiltonianModel,
    measure: &PreferredMeasure,
    guiding: &GuidingTrajectory,
    n: usize,
    master_seed: u64,
    threads: usize,
    policy: &JumpPolicy,
) -> Result<Ensemble, UnravelError> {
    if n < 1 {
        return Err(UnravelError::EmptyEnsemble);
    }
    check_setup(model, measure, guiding)?;

    let sweep = || -> Result<Vec<EnsembleChunk>, UnravelError> {
        let grid = *guiding.grid();
        let points = grid.num_points();
        let mut walker = guiding.walker(model);
        let state0 = walker.get(0)?;
        let mut chunks: Vec<EnsembleChunk> = (0..n as u64)
            .step_by(CHUNK)
            .map(|lo| {
                let hi = (lo + CHUNK as u64).min(n as u64);
                EnsembleChunk {
                    cursors: (lo..hi)
                        .map(|s| Cursor::new(master_seed, s, state0, measure))
                        .collect(),
                    sum: vec![[0.0; 3]; points],
                    sum_sq: vec![[0.0; 3]; points],
                }
            })
            .collect();

        for j in 0..points {
            let state = walker.get(j)?;
            let t = grid.time(j);
            let dt = grid.dt;
            let last = j == grid.steps;
            chunks.par_iter_mut().try_for_each(
                |chunk| -> Result<(), BeableError> {
                    for cur in chunk.cursors.iter_mut() {
                        let b = cur.observe(state, measure)?;
                        for c in 0..3 {
                            chunk.sum[j][c] += b[c];
                            chunk.sum_sq[j][c] += b[c] * b[c];
                        }
                        if !last {
                            cur.advance(state, model, measure, t, dt, policy)?;
                        }
                    }
                    Ok(())
                },
            )?;
        }
        Ok(chunks)
    };

    let chunks = if threads == 0 {
        sweep()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction");
        pool.install(sweep)?
    };

    let points = guiding.grid().num_points();
    let mut sum = vec![[0.0f64; 3]; points];
    let mut sum_sq = vec![[0.0f64; 3]; points];
    let mut clamp_events = 0usize;
    let mut pmax_warnings = 0usize;
    for chunk in &chunks {
        for j in 0..points {
            for c in 0..3 {
                sum[j][c] += chunk.sum[j][c];
                sum_sq[j][c] += chunk.sum_sq[j][c];
            }
        }
        for cur in &chunk.cursors {
            clamp_events += cur.clamp_events;
            pmax_warnings += cur.pmax_warnings;
        }
    }

    let nf = n as f64;
    let mut mean = Vec::with_capacity(points);
    let mut se = Vec::with_capacity(points);
    for j in 0..points {
        let mut m = [0.0; 3];
        let mut s = [0.0; 3];
        for c in 0..3 {
            m[c] = sum[j][c] / nf;
            if n > 1 {
                let var = ((sum_sq[j][c] - sum[j][c] * sum[j][c] / nf) / (nf - 1.0)).max(0.0);
                s[c] = (var / nf).sqrt();
            }
        }
        mean.push(m);
        se.push(s);
    }

    Ok(Ensemble {
        grid: *guiding.grid(),
        n,
        mean,
        se,
        master_seed,
        diagnostics: TrajectoryDiagnostics {
            clamp_events,
            pmax_warnings,
            leakage_flagged: guiding.leakage_flagged(),
        },
    })
}
