//! Exact reference computations and comparisons: the partial-trace reduced
//! state, Bloch conversions, ensemble-versus-exact difference series, and the
//! closed-form temporal-coupling profiles used for Markovian-limit
//! diagnostics.

use crate::guiding::GuidingTrajectory;
use crate::hilbert::{HilbertSpec, StateVector};
use crate::models::HamiltonianModel;
use crate::unravel::Ensemble;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("grids do not match: {0}")]
    GridMismatch(&'static str),
    #[error("the closed-form profile needs an odd mode count, got {0}")]
    EvenModeCount(usize),
    #[error(transparent)]
    Guiding(#[from] crate::guiding::GuidingError),
}

/// 2x2 reduced density matrix of the atom; index 0 is the ground level,
/// index 1 the excited level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub rho: [[C64; 2]; 2],
}

impl ReducedState {
    pub fn trace(&self) -> f64 {
        (self.rho[0][0] + self.rho[1][1]).re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                worst = worst.max((self.rho[a][b] - self.rho[b][a].conj()).norm());
            }
        }
        worst
    }

    /// Bloch vector `(x, y, z) = (<sx>, <sy>, <sz>)`.
    pub fn bloch(&self) -> [f64; 3] {
        let eb = self.rho[1][0]; // <e| rho |b>
        [
            2.0 * eb.re,
            -2.0 * eb.im,
            (self.rho[1][1] - self.rho[0][0]).re,
        ]
    }
}

/// Partial trace of `|Psi><Psi|` over the bath. With the atom index slowest
/// this is one contiguous block sum per matrix element.
pub fn reduced_state(state: &StateVector, spec: &HilbertSpec) -> ReducedState {
    let b = spec.bath_dim();
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for c in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..b {
                acc += state[a * b + r] * state[c * b + r].conj();
            }
            rho[a][c] = acc;
        }
    }
    ReducedState { rho }
}

/// Bloch vector of a pure system state with amplitudes `(excited, ground)`.
pub fn bloch_of_pure(excited: C64, ground: C64) -> [f64; 3] {
    let z = excited.conj() * ground;
    [
        2.0 * z.re,
        2.0 * z.im,
        excited.norm_sqr() - ground.norm_sqr(),
    ]
}

/// Exact reduced-state Bloch vector at every grid point of a guiding run.
pub fn exact_bloch_series(
    model: &HamiltonianModel,
    guiding: &GuidingTrajectory,
) -> Result<Vec<[f64; 3]>, AnalysisError> {
    let mut walker = guiding.walker(model);
    let mut out = Vec::with_capacity(guiding.grid().num_points());
    for j in 0..guiding.grid().num_points() {
        let frame = walker.get(j)?;
        out.push(reduced_state(frame, model.spec()).bloch());
    }
    Ok(out)
}

/// Per-time comparison of an ensemble mean against the exact reduced state.
#[derive(Debug, Clone)]
pub struct DifferenceSeries {
    pub times: Vec<f64>,
    pub mean: Vec<[f64; 3]>,
    pub exact: Vec<[f64; 3]>,
    /// `mean - exact` per component.
    pub diff: Vec<[f64; 3]>,
    pub se: Vec<[f64; 3]>,
    /// Qubit trace distance `|delta bloch| / 2` between the mean state and
    /// the exact state.
    pub trace_distance: Vec<f64>,
}

impl DifferenceSeries {
    /// Fraction of grid points per Bloch component where
    /// `|diff| <= nsigma * max(se, se_floor)`.
    ///
    /// Before the first jump every ensemble member carries the identical
    /// conditioned state, so the sample standard error degenerates to zero
    /// while the mean is still quantized in steps of one trajectory weight.
    /// Callers pass the quantization scale (`2/N` for Bloch components) as
    /// the floor so the band stays correctly sized in that window; the
    /// stored `se` series is the raw sample value.
    pub fn within_band_fraction(&self, nsigma: f64, se_floor: f64) -> [f64; 3] {
        let mut hits = [0usize; 3];
        for (d, s) in self.diff.iter().zip(self.se.iter()) {
            for c in 0..3 {
                if d[c].abs() <= nsigma * s[c].max(se_floor) {
                    hits[c] += 1;
                }
            }
        }
        let n = self.diff.len() as f64;
        [
            hits[0] as f64 / n,
            hits[1] as f64 / n,
            hits[2] as f64 / n,
        ]
    }
}

/// Compare an ensemble against the exact reduced state of its guiding run.
pub fn ensemble_vs_exact(
    ensemble: &Ensemble,
    model: &HamiltonianModel,
    guiding: &GuidingTrajectory,
) -> Result<DifferenceSeries, AnalysisError> {
    let grid = guiding.grid();
    if ensemble.mean.len() != grid.num_points() {
        return Err(AnalysisError::GridMismatch("point counts differ"));
    }
    if (ensemble.grid.dt - grid.dt).abs() > 0.0 || ensemble.grid.t0 != grid.t0 {
        return Err(AnalysisError::GridMismatch("time axes differ"));
    }
    let exact = exact_bloch_series(model, guiding)?;
    let times: Vec<f64> = (0..grid.num_points()).map(|j| grid.time(j)).collect();
    let mut diff = Vec::with_capacity(exact.len());
    let mut tdist = Vec::with_capacity(exact.len());
    for (m, e) in ensemble.mean.iter().zip(exact.iter()) {
        let d = [m[0] - e[0], m[1] - e[1], m[2] - e[2]];
        tdist.push(0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
        diff.push(d);
    }
    Ok(DifferenceSeries {
        times,
        mean: ensemble.mean.clone(),
        exact,
        diff,
        se: ensemble.se.clone(),
        trace_distance: tdist,
    })
}

/// Closed-form temporal coupling for `kappa` flat-coupled modes with uniform
/// frequency spacing,
///
/// ```text
/// c_tau(t) = g/sqrt(kappa) { 1 + 2 sum_{k=1}^{(kappa-1)/2} cos[k (W t - 2 pi tau / kappa)] }
/// ```
///
/// evaluated on `times`. The square of this profile concentrates into a
/// Kronecker comb as `kappa` grows, which is the discrete Markovian limit.
pub fn markovian_limit_profile(
    kappa: usize,
    g_flat: f64,
    omega_spacing: f64,
    tau_label: i64,
    times: &[f64],
) -> Result<Vec<f64>, AnalysisError> {
    if kappa % 2 == 0 {
        return Err(AnalysisError::EvenModeCount(kappa));
    }
    let half = (kappa as i64 - 1) / 2;
    let norm = g_flat / (kappa as f64).sqrt();
    Ok(times
        .iter()
        .map(|&t| {
            let theta = omega_spacing * t - std::f64::consts::TAU * tau_label as f64 / kappa as f64;
            let mut s = 1.0;
            for k in 1..=half {
                s += 2.0 * (k as f64 * theta).cos();
            }
            norm * s
        })
        .collect())
}
