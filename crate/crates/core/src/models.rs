//! Time-dependent interaction-frame Hamiltonians for a classically driven
//! two-level atom coupled to a discrete bosonic bath.
//!
//! The total generator is `H_int + V_int(t)` with the drive
//! `H_int = (Omega/2) sigma_x` (time independent, hbar = 1) and a
//! rotating-wave coupling that is linear in the bath amplitudes,
//!
//! ```text
//! V_int(t) = i sum_k [ conj(c_k(t)) sigma a_k^dag - c_k(t) sigma^dag a_k ]
//! ```
//!
//! In the spectral basis `c_k(t) = g_k exp(-i Delta_k t)` with detuning
//! `Delta_k`; in the temporal basis the bath factor is reinterpreted as
//! occupation numbers of the DFT-combined modes `b_tau` and
//! `c_tau(t)` is the DFT-weighted coupling of [`temporal_coefficient`].
//! Time is measured in units of the inverse coupling, `g^-1`.

use crate::hilbert::{
    annihilation, atom_operator, mode_labels, AtomOp, HilbertError, HilbertSpec, SparseOperator,
};
use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Row-block size of the parallel generator path; spaces smaller than one
/// block stay on the serial path.
const PAR_ROWS: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("couplings length {couplings} and detunings length {detunings} must equal num_modes {num_modes}")]
    LengthMismatch {
        couplings: usize,
        detunings: usize,
        num_modes: usize,
    },
    #[error("rabi frequency must be >= 0, got {0}")]
    NegativeRabi(f64),
    #[error("operation requires the three-mode model, got {0} modes")]
    NotThreeMode(usize),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Which bath occupation basis the composite state is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Spectral,
    Temporal,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisKind::Spectral => write!(f, "spectral"),
            BasisKind::Temporal => write!(f, "temporal"),
        }
    }
}

/// Physical parameters: Rabi frequency, per-mode couplings `g_k` and
/// detunings `Delta_k = omega_k - omega_0`, in units with `hbar = g = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub rabi: f64,
    pub couplings: Vec<C64>,
    pub detunings: Vec<f64>,
}

impl ModelParams {
    pub fn new(rabi: f64, couplings: Vec<C64>, detunings: Vec<f64>) -> Self {
        Self {
            rabi,
            couplings,
            detunings,
        }
    }

    /// Single resonant mode, unit coupling.
    pub fn single_mode(rabi: f64) -> Self {
        Self::new(rabi, vec![C64::new(1.0, 0.0)], vec![0.0])
    }

    /// Three flat-coupled modes: central mode resonant, side bands detuned by
    /// the Rabi frequency.
    pub fn three_mode(rabi: f64) -> Self {
        Self::new(
            rabi,
            vec![C64::new(1.0, 0.0); 3],
            vec![-rabi, 0.0, rabi],
        )
    }

    pub fn num_modes(&self) -> usize {
        self.couplings.len()
    }

    fn check(&self, spec: &HilbertSpec) -> Result<(), ModelError> {
        if self.couplings.len() != spec.num_modes() || self.detunings.len() != spec.num_modes() {
            return Err(ModelError::LengthMismatch {
                couplings: self.couplings.len(),
                detunings: self.detunings.len(),
                num_modes: spec.num_modes(),
            });
        }
        if self.rabi < 0.0 {
            return Err(ModelError::NegativeRabi(self.rabi));
        }
        Ok(())
    }

    /// FNV-1a hash over a canonical encoding, used to tag snapshot caches.
    pub fn fingerprint(&self, spec: &HilbertSpec, basis: BasisKind) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(&(spec.num_modes() as u64).to_le_bytes());
        eat(&(spec.cutoff() as u64).to_le_bytes());
        eat(&[match basis {
            BasisKind::Spectral => 0u8,
            BasisKind::Temporal => 1u8,
        }]);
        eat(&self.rabi.to_bits().to_le_bytes());
        for g in &self.couplings {
            eat(&g.re.to_bits().to_le_bytes());
            eat(&g.im.to_bits().to_le_bytes());
        }
        for d in &self.detunings {
            eat(&d.to_bits().to_le_bytes());
        }
        h
    }
}

/// Classical driving term `(rabi/2) sigma_x` on the composite space.
pub fn driving_hamiltonian(spec: &HilbertSpec, rabi: f64) -> SparseOperator {
    atom_operator(spec, AtomOp::SigmaX).scaled(C64::new(rabi / 2.0, 0.0))
}

/// DFT-weighted coupling of temporal mode `tau` (1-based slot index),
///
/// ```text
/// c_tau(t) = sum_k g_k exp(-i Delta_k t + i 2 pi tau k / kappa) / sqrt(kappa)
/// ```
///
/// with `tau` and `k` running over the integer labels of
/// [`mode_labels`].
pub fn temporal_coefficient(params: &ModelParams, tau: usize, t: f64) -> C64 {
    let kappa = params.num_modes();
    assert!(tau >= 1 && tau <= kappa, "temporal slot out of range");
    let labels = mode_labels(kappa);
    let tau_label = labels[tau - 1];
    let norm = 1.0 / (kappa as f64).sqrt();
    let mut c = C64::new(0.0, 0.0);
    for (j, &k_label) in labels.iter().enumerate() {
        let phase = -params.detunings[j] * t + TAU * (tau_label * k_label) as f64 / kappa as f64;
        c += params.couplings[j] * C64::from_polar(1.0, phase);
    }
    norm * c
}

fn interaction_from_couplings(
    spec: &HilbertSpec,
    coeffs: &[C64],
) -> Result<SparseOperator, HilbertError> {
    let i = C64::new(0.0, 1.0);
    let lower = atom_operator(spec, AtomOp::Lower);
    let mut ops = Vec::new();
    for k in 1..=spec.num_modes() {
        let a = annihilation(spec, k)?;
        let p = compose(&lower, &a.adjoint());
        let pd = p.adjoint();
        ops.push((p, pd));
    }
    let mut terms = Vec::new();
    for (k, (p, pd)) in ops.iter().enumerate() {
        terms.push((i * coeffs[k].conj(), p));
        terms.push((-i * coeffs[k], pd));
    }
    let refs: Vec<(C64, &SparseOperator)> = terms.iter().map(|(c, o)| (*c, *o)).collect();
    Ok(SparseOperator::linear_combination(spec.dim(), &refs))
}

/// Sparse product `A * B`, used for the few fixed operator products built at
/// model construction.
fn compose(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    assert_eq!(a.dim(), b.dim());
    let mut raw = Vec::new();
    for ea in a.entries() {
        for eb in b.entries() {
            if ea.col == eb.row {
                raw.push((ea.row as usize, eb.col as usize, ea.value * eb.value));
            }
        }
    }
    SparseOperator::from_entries(a.dim(), raw)
}

/// Spectral-basis coupling `V_int(t)`; Hermitian for any `t`.
pub fn spectral_interaction(
    spec: &HilbertSpec,
    params: &ModelParams,
    t: f64,
) -> Result<SparseOperator, ModelError> {
    params.check(spec)?;
    let coeffs: Vec<C64> = (0..params.num_modes())
        .map(|j| params.couplings[j] * C64::from_polar(1.0, -params.detunings[j] * t))
        .collect();
    Ok(interaction_from_couplings(spec, &coeffs)?)
}

/// Temporal-basis coupling `V_int(t)`, built directly in the temporal-mode
/// occupation basis with coefficients [`temporal_coefficient`].
pub fn temporal_interaction(
    spec: &HilbertSpec,
    params: &ModelParams,
    t: f64,
) -> Result<SparseOperator, ModelError> {
    params.check(spec)?;
    let coeffs: Vec<C64> = (1..=params.num_modes())
        .map(|tau| temporal_coefficient(params, tau, t))
        .collect();
    Ok(interaction_from_couplings(spec, &coeffs)?)
}

/// Strong-driving approximation of the three-mode coupling: the second
/// rotating-wave approximation (rotate with the drive, keep only the
/// non-oscillating products) ties outer-mode photon exchange to flips
/// between the `sigma_x` eigenstates,
///
/// ```text
/// V(t) = i { conj(g1) sx+ a1^dag e^{-i W t} - g1 sx- a1 e^{+i W t}
///          + conj(g2) sx  a2^dag            - g2 sx  a2
///          - conj(g3) sx- a3^dag e^{+i W t} + g3 sx+ a3 e^{-i W t} } / 2
/// ```
///
/// with `sx+ = |sx=1><sx=-1|` for `|sx=+-1> = (|e> +- |b>)/sqrt(2)`,
/// `sx- = (sx+)^dag`, modes labelled `(-1, 0, +1)` in slot order
/// `(1, 2, 3)`, and `W` the Rabi frequency. Lowering the `sigma_x` value
/// pairs with photon emission into the upper side band or absorption from
/// the lower one; the central mode never changes the `sigma_x` sector.
/// Used only to validate the strong-driving jump structure, never to evolve.
pub fn second_rwa_interaction(
    spec: &HilbertSpec,
    params: &ModelParams,
    t: f64,
) -> Result<SparseOperator, ModelError> {
    params.check(spec)?;
    if spec.num_modes() != 3 {
        return Err(ModelError::NotThreeMode(spec.num_modes()));
    }
    let dim = spec.dim();
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    let omega = params.rabi;

    let sz = atom_operator(spec, AtomOp::SigmaZ);
    let lower = atom_operator(spec, AtomOp::Lower);
    let raise = atom_operator(spec, AtomOp::Raise);
    // sx+ = (sz + sigma - sigma^dag)/2, sx- = its adjoint
    let sx_plus = SparseOperator::linear_combination(
        dim,
        &[(half, &sz), (half, &lower), (-half, &raise)],
    );
    let sx_minus = sx_plus.adjoint();
    let sx = atom_operator(spec, AtomOp::SigmaX);

    let a: Vec<SparseOperator> = (1..=3)
        .map(|k| annihilation(spec, k))
        .collect::<Result<_, _>>()?;
    let g = &params.couplings;

    let terms_ops = [
        (g[0].conj(), C64::from_polar(1.0, -omega * t), compose(&sx_plus, &a[0].adjoint())),
        (-g[0], C64::from_polar(1.0, omega * t), compose(&sx_minus, &a[0])),
        (g[1].conj(), C64::new(1.0, 0.0), compose(&sx, &a[1].adjoint())),
        (-g[1], C64::new(1.0, 0.0), compose(&sx, &a[1])),
        (-g[2].conj(), C64::from_polar(1.0, omega * t), compose(&sx_minus, &a[2].adjoint())),
        (g[2], C64::from_polar(1.0, -omega * t), compose(&sx_plus, &a[2])),
    ];
    let scaled: Vec<(C64, &SparseOperator)> = terms_ops
        .iter()
        .map(|(gf, ph, op)| (i * half * gf * ph, op))
        .collect();
    Ok(SparseOperator::linear_combination(dim, &scaled))
}

/// A scenario bound to a space: drive plus the coupling structure, with the
/// time dependence folded into per-mode scalar coefficients so the integrator
/// can apply the generator without rebuilding matrices.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    spec: HilbertSpec,
    params: ModelParams,
    basis: BasisKind,
    drive: SparseOperator,
    /// `sigma a_k^dag` per mode slot.
    lower_raise: Vec<SparseOperator>,
    /// `sigma^dag a_k` per mode slot.
    raise_lower: Vec<SparseOperator>,
}

impl HamiltonianModel {
    pub fn new(
        spec: HilbertSpec,
        params: ModelParams,
        basis: BasisKind,
    ) -> Result<Self, ModelError> {
        params.check(&spec)?;
        let drive = driving_hamiltonian(&spec, params.rabi);
        let lower = atom_operator(&spec, AtomOp::Lower);
        let mut lower_raise = Vec::new();
        let mut raise_lower = Vec::new();
        for k in 1..=spec.num_modes() {
            let p = compose(&lower, &annihilation(&spec, k)?.adjoint());
            raise_lower.push(p.adjoint());
            lower_raise.push(p);
        }
        Ok(Self {
            spec,
            params,
            basis,
            drive,
            lower_raise,
            raise_lower,
        })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn fingerprint(&self) -> u64 {
        self.params.fingerprint(&self.spec, self.basis)
    }

    /// Coefficient `c_k(t)` of `sigma^dag a_k` in `V_int(t)` for mode slot
    /// `k` (1-based).
    pub fn coupling(&self, mode: usize, t: f64) -> C64 {
        debug_assert!(mode >= 1 && mode <= self.spec.num_modes());
        match self.basis {
            BasisKind::Spectral => {
                self.params.couplings[mode - 1]
                    * C64::from_polar(1.0, -self.params.detunings[mode - 1] * t)
            }
            BasisKind::Temporal => temporal_coefficient(&self.params, mode, t),
        }
    }

    /// The coupling Hamiltonian `V_int(t)` as a sparse matrix.
    pub fn interaction(&self, t: f64) -> SparseOperator {
        let i = C64::new(0.0, 1.0);
        let mut terms: Vec<(C64, &SparseOperator)> = Vec::new();
        for k in 1..=self.spec.num_modes() {
            let c = self.coupling(k, t);
            terms.push((i * c.conj(), &self.lower_raise[k - 1]));
            terms.push((-i * c, &self.raise_lower[k - 1]));
        }
        SparseOperator::linear_combination(self.spec.dim(), &terms)
    }

    /// The full generator `H_int + V_int(t)` as a sparse matrix.
    pub fn hamiltonian(&self, t: f64) -> SparseOperator {
        let one = C64::new(1.0, 0.0);
        let v = self.interaction(t);
        SparseOperator::linear_combination(self.spec.dim(), &[(one, &self.drive), (one, &v)])
    }

    /// `out = -i [H_int + V_int(t)] input`, the Schrodinger right-hand side.
    /// `out` is overwritten.
    ///
    /// Large spaces are split into fixed row blocks processed in parallel.
    /// Within a row the contributions accumulate in the same op order as the
    /// serial sweep, so both paths produce bit-identical results.
    pub fn apply_generator(&self, t: f64, input: &[C64], out: &mut [C64]) {
        let kappa = self.spec.num_modes();
        let coeffs: Vec<C64> = (1..=kappa).map(|k| self.coupling(k, t)).collect();
        let dim = self.spec.dim();
        if dim < PAR_ROWS {
            out.fill(C64::new(0.0, 0.0));
            self.drive.accumulate(input, out, C64::new(0.0, -1.0));
            for k in 1..=kappa {
                // -i * i = 1: the coupling contributes c* sigma a^dag - c sigma^dag a
                self.lower_raise[k - 1].accumulate(input, out, coeffs[k - 1].conj());
                self.raise_lower[k - 1].accumulate(input, out, -coeffs[k - 1]);
            }
        } else {
            use rayon::prelude::*;
            out.par_chunks_mut(PAR_ROWS).enumerate().for_each(|(b, block)| {
                let rows = b * PAR_ROWS..b * PAR_ROWS + block.len();
                block.fill(C64::new(0.0, 0.0));
                self.drive
                    .accumulate_rows(input, block, C64::new(0.0, -1.0), rows.clone());
                for k in 1..=kappa {
                    self.lower_raise[k - 1].accumulate_rows(
                        input,
                        block,
                        coeffs[k - 1].conj(),
                        rows.clone(),
                    );
                    self.raise_lower[k - 1].accumulate_rows(
                        input,
                        block,
                        -coeffs[k - 1],
                        rows.clone(),
                    );
                }
            });
        }
    }
}
