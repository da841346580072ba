//! Integration of the guiding-state Schrodinger equation on a fixed time
//! grid, with stored snapshots, norm and truncation-leakage diagnostics, and
//! an optional binary snapshot cache.
//!
//! The guiding state is computed once per parameter set and shared read-only
//! by every hidden-variable trajectory: the Schrodinger evolution never
//! depends on the jump record.

use crate::hilbert::StateVector;
use crate::models::HamiltonianModel;
use num_complex::Complex64 as C64;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// Default flag threshold on the probability mass sitting in any top Fock
/// level.
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-4;

/// Default bound on stored snapshot amplitudes before storage switches to
/// strided keyframes (about 256 MiB of complex values).
pub const DEFAULT_SNAPSHOT_LIMIT: usize = 1 << 24;

/// Upper bound on grid steps; per-point diagnostic series stay well under
/// memory at this size.
pub const MAX_STEPS: usize = 1 << 26;

#[derive(Debug, Error)]
pub enum GuidingError {
    #[error("dt must be > 0 and finite, got {0}")]
    BadStep(f64),
    #[error("steps must be >= 1")]
    NoSteps,
    #[error("grid of {steps} steps exceeds the supported maximum {max}")]
    TooManySteps { steps: usize, max: usize },
    #[error("initial state norm {norm} is not within 1e-6 of 1")]
    NotNormalized { norm: f64 },
    #[error("state dimension {state} does not match model dimension {model}")]
    DimensionMismatch { state: usize, model: usize },
    #[error("non-finite amplitude produced at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes (not a snapshot cache)")]
    BadMagic,
    #[error("unsupported cache version {0}")]
    Version(u32),
    #[error("cache truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("cache header is internally inconsistent: {0}")]
    Inconsistent(&'static str),
    #[error("cache does not match this run: {0}")]
    Mismatch(&'static str),
}

/// Uniform time grid `t_j = t0 + j * dt` for `j = 0..=steps`. Times are
/// computed by multiplication, never by repeated addition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, steps: usize) -> Result<Self, GuidingError> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(GuidingError::BadStep(dt));
        }
        if steps < 1 {
            return Err(GuidingError::NoSteps);
        }
        if steps > MAX_STEPS {
            return Err(GuidingError::TooManySteps {
                steps,
                max: MAX_STEPS,
            });
        }
        Ok(Self { t0, dt, steps })
    }

    /// Grid covering `[t0, t_final]` with the step count rounded to reach
    /// `t_final` as closely as `dt` allows.
    pub fn span(t0: f64, dt: f64, t_final: f64) -> Result<Self, GuidingError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(GuidingError::BadStep(dt));
        }
        let raw = ((t_final - t0) / dt).round();
        if !(raw >= 1.0) {
            return Err(GuidingError::NoSteps);
        }
        if raw > MAX_STEPS as f64 {
            return Err(GuidingError::TooManySteps {
                steps: raw as usize,
                max: MAX_STEPS,
            });
        }
        Self::new(t0, dt, raw as usize)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    /// Number of grid points, `steps + 1`.
    pub fn num_points(&self) -> usize {
        self.steps + 1
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub leakage_tolerance: f64,
    /// Keep every snapshot while `dim * num_points` stays at or below this.
    pub snapshot_limit: usize,
    /// Force a storage stride (mainly for tests); `None` picks the smallest
    /// stride that fits the limit.
    pub stride_override: Option<usize>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
            snapshot_limit: DEFAULT_SNAPSHOT_LIMIT,
            stride_override: None,
        }
    }
}

/// The integrated guiding state: snapshots (dense or strided keyframes) plus
/// per-point norm and leakage series.
#[derive(Debug, Clone)]
pub struct GuidingTrajectory {
    grid: TimeGrid,
    dim: usize,
    num_modes: usize,
    cutoff: usize,
    fingerprint: u64,
    stride: usize,
    frames: Vec<StateVector>,
    norms: Vec<f64>,
    leakage: Vec<f64>,
    leakage_tolerance: f64,
    leakage_flagged: bool,
}

impl GuidingTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Storage stride between kept frames; 1 means every snapshot is stored.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn is_dense(&self) -> bool {
        self.stride == 1
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn leakage(&self) -> &[f64] {
        &self.leakage
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }

    pub fn leakage_flagged(&self) -> bool {
        self.leakage_flagged
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Stored frame for grid point `j`; `None` when `j` falls between
    /// keyframes of a strided store.
    pub fn frame(&self, j: usize) -> Option<&StateVector> {
        if j % self.stride == 0 {
            self.frames.get(j / self.stride)
        } else {
            None
        }
    }

    /// Sequentially-cheap random access to snapshots; re-integrates between
    /// keyframes when storage is strided, with the same stepper and hence
    /// identical numerics.
    pub fn walker<'a>(&'a self, model: &'a HamiltonianModel) -> SnapshotWalker<'a> {
        SnapshotWalker {
            traj: self,
            model,
            pos: 0,
            current: self.frames[0].clone(),
            bufs: None,
        }
    }

    /// Check that a cache loaded from disk belongs to `(model, grid)`.
    pub fn verify_matches(
        &self,
        model: &HamiltonianModel,
        grid: &TimeGrid,
    ) -> Result<(), CacheError> {
        if self.fingerprint != model.fingerprint() {
            return Err(CacheError::Mismatch("model parameters differ"));
        }
        if self.dim != model.spec().dim()
            || self.num_modes != model.spec().num_modes()
            || self.cutoff != model.spec().cutoff()
        {
            return Err(CacheError::Mismatch("hilbert space differs"));
        }
        if self.grid.t0 != grid.t0 || self.grid.dt != grid.dt || self.grid.steps != grid.steps {
            return Err(CacheError::Mismatch("time grid differs"));
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        push_u32(&mut out, VERSION);
        push_u32(&mut out, self.num_modes as u32);
        push_u32(&mut out, self.cutoff as u32);
        push_u32(&mut out, if self.leakage_flagged { 1 } else { 0 });
        push_u64(&mut out, self.dim as u64);
        push_u64(&mut out, self.fingerprint);
        push_f64(&mut out, self.grid.t0);
        push_f64(&mut out, self.grid.dt);
        push_u64(&mut out, self.grid.steps as u64);
        push_u64(&mut out, self.stride as u64);
        push_u64(&mut out, self.frames.len() as u64);
        push_f64(&mut out, self.leakage_tolerance);
        for f in &self.frames {
            for a in f.as_slice() {
                push_f64(&mut out, a.re);
                push_f64(&mut out, a.im);
            }
        }
        for &n in &self.norms {
            push_f64(&mut out, n);
        }
        for &l in &self.leakage {
            push_f64(&mut out, l);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CacheError> {
        let mut rd = Reader { buf: bytes, at: 0 };
        if rd.take(MAGIC.len())? != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let version = rd.u32()?;
        if version != VERSION {
            return Err(CacheError::Version(version));
        }
        let num_modes = rd.u32()? as usize;
        let cutoff = rd.u32()? as usize;
        let flagged = rd.u32()? != 0;
        let dim = rd.u64()? as usize;
        let fingerprint = rd.u64()?;
        let t0 = rd.f64()?;
        let dt = rd.f64()?;
        let steps = rd.u64()? as usize;
        let stride = rd.u64()? as usize;
        let n_frames = rd.u64()? as usize;
        let leakage_tolerance = rd.f64()?;

        if num_modes == 0 || cutoff == 0 || num_modes > 16 {
            return Err(CacheError::Inconsistent("implausible mode structure"));
        }
        let expect_dim = 2u128
            * (cutoff as u128 + 1)
                .checked_pow(num_modes as u32)
                .ok_or(CacheError::Inconsistent("bath dimension overflows"))?;
        if expect_dim != dim as u128 || dim > crate::hilbert::DEFAULT_DIM_LIMIT {
            return Err(CacheError::Inconsistent("dimension mismatch"));
        }
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() || steps == 0 || stride == 0 {
            return Err(CacheError::Inconsistent("bad grid"));
        }
        let points = steps
            .checked_add(1)
            .ok_or(CacheError::Inconsistent("step count overflows"))?;
        let expect_frames = (steps / stride) + 1;
        if n_frames != expect_frames {
            return Err(CacheError::Inconsistent("frame count mismatch"));
        }
        let payload = (n_frames as u128) * (dim as u128) * 16 + (points as u128) * 16;
        let remaining = (bytes.len() - rd.at) as u128;
        if payload != remaining {
            return Err(CacheError::Truncated {
                needed: rd.at + payload as usize,
                found: bytes.len(),
            });
        }

        let mut frames = Vec::with_capacity(n_frames);
        for _ in 0..n_frames {
            let mut amp = Vec::with_capacity(dim);
            for _ in 0..dim {
                let re = rd.f64()?;
                let im = rd.f64()?;
                amp.push(C64::new(re, im));
            }
            frames.push(StateVector::from_vec(amp));
        }
        let mut norms = Vec::with_capacity(points);
        for _ in 0..points {
            norms.push(rd.f64()?);
        }
        let mut leakage = Vec::with_capacity(points);
        for _ in 0..points {
            leakage.push(rd.f64()?);
        }
        Ok(Self {
            grid: TimeGrid { t0, dt, steps },
            dim,
            num_modes,
            cutoff,
            fingerprint,
            stride,
            frames,
            norms,
            leakage,
            leakage_tolerance,
            leakage_flagged: flagged,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CacheError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }
}

const MAGIC: &[u8] = b"UNRVSNP1";
const VERSION: u32 = 1;

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}
fn push_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}
fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        if self.at + n > self.buf.len() {
            return Err(CacheError::Truncated {
                needed: self.at + n,
                found: self.buf.len(),
            });
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CacheError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

struct Rk4Buffers {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Buffers {
    fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

/// One classical fourth-order Runge-Kutta step of the linear Schrodinger
/// equation in place. No renormalization is applied; norm drift is a
/// diagnostic, not something to correct.
fn rk4_inplace(
    model: &HamiltonianModel,
    t: f64,
    dt: f64,
    y: &mut [C64],
    bufs: &mut Rk4Buffers,
) -> Result<(), GuidingError> {
    let dim = y.len();
    model.apply_generator(t, y, &mut bufs.k1);
    for i in 0..dim {
        bufs.tmp[i] = y[i] + 0.5 * dt * bufs.k1[i];
    }
    model.apply_generator(t + 0.5 * dt, &bufs.tmp, &mut bufs.k2);
    for i in 0..dim {
        bufs.tmp[i] = y[i] + 0.5 * dt * bufs.k2[i];
    }
    model.apply_generator(t + 0.5 * dt, &bufs.tmp, &mut bufs.k3);
    for i in 0..dim {
        bufs.tmp[i] = y[i] + dt * bufs.k3[i];
    }
    model.apply_generator(t + dt, &bufs.tmp, &mut bufs.k4);
    let sixth = dt / 6.0;
    let mut finite = true;
    for i in 0..dim {
        y[i] += sixth * (bufs.k1[i] + 2.0 * bufs.k2[i] + 2.0 * bufs.k3[i] + bufs.k4[i]);
        finite &= y[i].re.is_finite() && y[i].im.is_finite();
    }
    if !finite {
        return Err(GuidingError::NonFinite { t });
    }
    Ok(())
}

/// Single RK4 step as a pure function.
pub fn rk4_step(
    model: &HamiltonianModel,
    state: &StateVector,
    t: f64,
    dt: f64,
) -> Result<StateVector, GuidingError> {
    if state.dim() != model.spec().dim() {
        return Err(GuidingError::DimensionMismatch {
            state: state.dim(),
            model: model.spec().dim(),
        });
    }
    let mut y = state.as_slice().to_vec();
    let mut bufs = Rk4Buffers::new(y.len());
    rk4_inplace(model, t, dt, &mut y, &mut bufs)?;
    Ok(StateVector::from_vec(y))
}

/// Probability mass sitting in basis states where any mode occupies its top
/// Fock level; rising leakage means the truncation is being felt.
fn leakage_of(model: &HamiltonianModel, boundary: &[bool], y: &[C64]) -> f64 {
    let b = model.spec().bath_dim();
    let mut acc = 0.0;
    for (rank, &is_boundary) in boundary.iter().enumerate() {
        if is_boundary {
            acc += y[rank].norm_sqr() + y[b + rank].norm_sqr();
        }
    }
    acc
}

/// Integrate over the whole grid, recording norm and leakage at every grid
/// point and snapshots at every `stride`-th point.
pub fn evolve(
    model: &HamiltonianModel,
    initial: &StateVector,
    grid: &TimeGrid,
    options: &EvolveOptions,
) -> Result<GuidingTrajectory, GuidingError> {
    let dim = model.spec().dim();
    if initial.dim() != dim {
        return Err(GuidingError::DimensionMismatch {
            state: initial.dim(),
            model: dim,
        });
    }
    let norm = initial.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(GuidingError::NotNormalized { norm });
    }

    let points = grid.num_points();
    let stride = match options.stride_override {
        Some(s) => s.max(1),
        None => {
            let mut s = 1usize;
            while dim.saturating_mul((grid.steps / s) + 1) > options.snapshot_limit {
                s *= 2;
            }
            s
        }
    };

    let spec = model.spec();
    let boundary: Vec<bool> = (0..spec.bath_dim())
        .map(|rank| (1..=spec.num_modes()).any(|k| spec.mode_digit(rank, k) == spec.cutoff()))
        .collect();

    let mut y = initial.as_slice().to_vec();
    let mut bufs = Rk4Buffers::new(dim);
    let mut frames = Vec::with_capacity(grid.steps / stride + 1);
    let mut norms = Vec::with_capacity(points);
    let mut leak = Vec::with_capacity(points);
    let mut flagged = false;

    for j in 0..points {
        let n: f64 = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        norms.push(n);
        let l = leakage_of(model, &boundary, &y);
        if l > options.leakage_tolerance {
            flagged = true;
        }
        leak.push(l);
        if j % stride == 0 {
            frames.push(StateVector::from_vec(y.clone()));
        }
        if j < grid.steps {
            rk4_inplace(model, grid.time(j), grid.dt, &mut y, &mut bufs)?;
        }
    }

    Ok(GuidingTrajectory {
        grid: *grid,
        dim,
        num_modes: spec.num_modes(),
        cutoff: spec.cutoff(),
        fingerprint: model.fingerprint(),
        stride,
        frames,
        norms,
        leakage: leak,
        leakage_tolerance: options.leakage_tolerance,
        leakage_flagged: flagged,
    })
}

/// Cursor over snapshots. Arbitrary grid points can be requested; sequential
/// nondecreasing access is O(1) amortized for dense storage and costs one
/// re-integration step per grid point for strided storage.
pub struct SnapshotWalker<'a> {
    traj: &'a GuidingTrajectory,
    model: &'a HamiltonianModel,
    pos: usize,
    current: StateVector,
    bufs: Option<Box<Rk4Buffers>>,
}

impl<'a> SnapshotWalker<'a> {
    pub fn get(&mut self, j: usize) -> Result<&StateVector, GuidingError> {
        assert!(j < self.traj.grid.num_points(), "grid point out of range");
        if self.traj.stride == 1 {
            return Ok(&self.traj.frames[j]);
        }
        let key = j - (j % self.traj.stride);
        if j < self.pos || self.pos < key {
            self.current = self.traj.frames[key / self.traj.stride].clone();
            self.pos = key;
        }
        let dim = self.traj.dim;
        let bufs = self.bufs.get_or_insert_with(|| Box::new(Rk4Buffers::new(dim)));
        while self.pos < j {
            let t = self.traj.grid.time(self.pos);
            rk4_inplace(
                self.model,
                t,
                self.traj.grid.dt,
                self.current.as_mut_slice(),
                bufs,
            )?;
            self.pos += 1;
        }
        Ok(&self.current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomLevel, HilbertSpec, StateVector};
    use crate::models::{BasisKind, HamiltonianModel, ModelParams};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;

    fn single_mode_model(rabi: f64, coupling: f64, cutoff: usize) -> HamiltonianModel {
        let spec = HilbertSpec::new(1, cutoff).unwrap();
        let params = ModelParams::new(rabi, vec![C64::new(coupling, 0.0)], vec![0.0]);
        HamiltonianModel::new(spec, params, BasisKind::Spectral).unwrap()
    }

    #[test]
    fn rabi_oscillation_with_decoupled_bath() {
        // g = 0 leaves a driven two-level atom; z(t) = -cos(rabi t).
        let model = single_mode_model(5.0, 0.0, 2);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 1.0).unwrap();
        let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
        let mut worst = 0.0f64;
        for j in 0..grid.num_points() {
            let t = grid.time(j);
            let frame = traj.frame(j).unwrap();
            let pe = frame[spec.flat_index(AtomLevel::Excited, &[0])].norm_sqr();
            let pb = frame[spec.flat_index(AtomLevel::Ground, &[0])].norm_sqr();
            let z = pe - pb;
            worst = worst.max((z - (-(5.0 * t).cos())).abs());
        }
        assert!(worst < 1e-8, "max Rabi error {worst}");
    }

    #[test]
    fn zero_hamiltonian_leaves_state_unchanged() {
        let model = single_mode_model(0.0, 0.0, 2);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Excited, &[1]);
        let stepped = rk4_step(&model, &psi0, 0.0, 1e-2).unwrap();
        assert_eq!(stepped, psi0);
    }

    #[test]
    fn undriven_ground_vacuum_is_dark() {
        let model = single_mode_model(0.0, 1.0, 3);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 2.0).unwrap();
        let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
        let last = traj.frame(grid.steps).unwrap();
        let overlap = psi0.inner(last);
        assert_abs_diff_eq!(overlap.re, 1.0, epsilon = 1e-12);
        assert!((traj.norms().last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_halving_shows_fourth_order() {
        let model = single_mode_model(5.0, 1.0, 6);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let run = |dt: f64| {
            let grid = TimeGrid::span(0.0, dt, 1.0).unwrap();
            let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
            traj.frame(grid.steps).unwrap().clone()
        };
        let a = run(4e-3);
        let b = run(2e-3);
        let c = run(1e-3);
        let d1: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let d2: f64 = b
            .as_slice()
            .iter()
            .zip(c.as_slice())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let order = (d1 / d2).log2();
        assert!(
            (order - 4.0).abs() < 0.5,
            "measured convergence order {order}"
        );
    }

    #[test]
    fn total_excitation_constant_without_driving() {
        let model = single_mode_model(0.0, 1.0, 8);
        let spec = model.spec().clone();
        let n_op = crate::hilbert::total_excitation(&spec);
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Excited, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 5.0).unwrap();
        let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
        for j in (0..grid.num_points()).step_by(500) {
            let f = traj.frame(j).unwrap();
            let expect = f.inner(&n_op.apply(f)).re;
            assert_abs_diff_eq!(expect, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn linearity_of_evolution() {
        let model = single_mode_model(3.0, 1.0, 4);
        let spec = model.spec().clone();
        let u = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let v = StateVector::basis_state(&spec, AtomLevel::Excited, &[1]);
        let alpha = C64::new(0.6, 0.2);
        let beta = C64::new(0.4, -0.3);
        let mut w = StateVector::zero(spec.dim());
        for i in 0..spec.dim() {
            w.as_mut_slice()[i] = alpha * u[i] + beta * v[i];
        }
        let w = w.normalized();
        let scale = 1.0
            / (alpha.norm_sqr() + beta.norm_sqr()).sqrt();

        let grid = TimeGrid::span(0.0, 1e-3, 0.5).unwrap();
        let opts = EvolveOptions::default();
        let eu = evolve(&model, &u, &grid, &opts).unwrap();
        let ev = evolve(&model, &v, &grid, &opts).unwrap();
        let ew = evolve(&model, &w, &grid, &opts).unwrap();
        let j = grid.steps;
        let fu = eu.frame(j).unwrap();
        let fv = ev.frame(j).unwrap();
        let fw = ew.frame(j).unwrap();
        for i in 0..spec.dim() {
            let combo = scale * (alpha * fu[i] + beta * fv[i]);
            assert_abs_diff_eq!((combo - fw[i]).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn norm_is_preserved_on_preset_run() {
        // The resonant mode fills up under driving (mean photon number
        // near 19 by t = 20), so the stock scenario needs a generous cutoff.
        let model = single_mode_model(5.0, 1.0, 50);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 20.0).unwrap();
        let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
        let worst = traj
            .norms()
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "norm drift {worst}");
        assert!(!traj.leakage_flagged());
    }

    #[test]
    fn strided_storage_reproduces_dense_numerics() {
        let model = single_mode_model(5.0, 1.0, 6);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 0.4).unwrap();
        let dense = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
        let strided = evolve(
            &model,
            &psi0,
            &grid,
            &EvolveOptions {
                stride_override: Some(37),
                ..EvolveOptions::default()
            },
        )
        .unwrap();
        assert!(!strided.is_dense());
        let mut walker = strided.walker(&model);
        for j in [0usize, 1, 36, 37, 38, 111, 250, grid.steps] {
            let a = dense.frame(j).unwrap();
            let b = walker.get(j).unwrap();
            for i in 0..spec.dim() {
                assert_eq!(a[i], b[i], "frame {j} amplitude {i}");
            }
        }
    }

    #[test]
    fn cache_round_trips_and_validates() {
        let model = single_mode_model(5.0, 1.0, 4);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 0.05).unwrap();
        let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();

        let bytes = traj.encode();
        let loaded = GuidingTrajectory::decode(&bytes).unwrap();
        assert!(loaded.verify_matches(&model, &grid).is_ok());
        assert_eq!(loaded.norms(), traj.norms());
        for j in 0..grid.num_points() {
            assert_eq!(loaded.frame(j).unwrap(), traj.frame(j).unwrap());
        }

        // header tamper: version bump
        let mut bad = bytes.clone();
        bad[8] = 99;
        assert!(matches!(
            GuidingTrajectory::decode(&bad),
            Err(CacheError::Version(_))
        ));
        // truncation
        assert!(GuidingTrajectory::decode(&bytes[..bytes.len() - 3]).is_err());
        // wrong model
        let other = single_mode_model(4.0, 1.0, 4);
        assert!(loaded.verify_matches(&other, &grid).is_err());
    }

    #[test]
    fn leakage_flag_fires_when_cutoff_is_too_small() {
        // the driven atom keeps filling the resonant mode; a cutoff of 20
        // holds less than the mean occupation reached by t = 10
        let model = single_mode_model(5.0, 1.0, 20);
        let spec = model.spec().clone();
        let psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        let grid = TimeGrid::span(0.0, 1e-3, 10.0).unwrap();
        let traj = evolve(&model, &psi0, &grid, &EvolveOptions::default()).unwrap();
        assert!(traj.leakage_flagged());
        assert!(traj.max_leakage() > 1e-4);
        // leakage is a fidelity alarm, not a unitarity problem
        let worst = traj
            .norms()
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6);
    }

    #[test]
    fn rejects_unnormalized_initial_state() {
        let model = single_mode_model(1.0, 1.0, 2);
        let spec = model.spec().clone();
        let mut psi0 = StateVector::basis_state(&spec, AtomLevel::Ground, &[0]);
        psi0.as_mut_slice()[0] *= 2.0;
        let grid = TimeGrid::span(0.0, 1e-3, 0.1).unwrap();
        assert!(matches!(
            evolve(&model, &psi0, &grid, &EvolveOptions::default()),
            Err(GuidingError::NotNormalized { .. })
        ));
    }
}
