//! Composite Hilbert space of a two-level atom tensored with a finite set of
//! truncated bosonic modes, plus the elementary operators living on it.
//!
//! Basis ordering is row-major with the atom index slowest and the last mode
//! fastest:
//!
//! ```text
//! flat = atom * (cutoff+1)^k + sum_j n_j * (cutoff+1)^(k-j)
//! ```
//!
//! so the ground-state block occupies the first `(cutoff+1)^k` amplitudes.
//! This makes every bath-configuration slice a two-element strided pick and
//! the partial trace over the bath a contiguous block sum.

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Default guard on the composite dimension (`2^24` amplitudes).
pub const DEFAULT_DIM_LIMIT: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("composite dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: u128, limit: usize },
    #[error("num_modes must be >= 1")]
    NoModes,
    #[error("cutoff must be >= 1")]
    NoCutoff,
    #[error("mode index {mode} out of range 1..={num_modes}")]
    ModeOutOfRange { mode: usize, num_modes: usize },
}

/// Atom level of the two-level system. `Ground` is `|b>`, `Excited` is `|e>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomLevel {
    Ground = 0,
    Excited = 1,
}

/// Descriptor of the composite space: 2 atomic levels tensored with
/// `num_modes` bosonic modes truncated at `cutoff` photons each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpec {
    num_modes: usize,
    cutoff: usize,
    bath_dim: usize,
    dim: usize,
}

impl HilbertSpec {
    /// Build a spec, guarding the composite dimension by [`DEFAULT_DIM_LIMIT`].
    pub fn new(num_modes: usize, cutoff: usize) -> Result<Self, HilbertError> {
        Self::with_dim_limit(num_modes, cutoff, DEFAULT_DIM_LIMIT)
    }

    /// Build a spec with an explicit dimension guard.
    pub fn with_dim_limit(
        num_modes: usize,
        cutoff: usize,
        limit: usize,
    ) -> Result<Self, HilbertError> {
        if num_modes < 1 {
            return Err(HilbertError::NoModes);
        }
        if cutoff < 1 {
            return Err(HilbertError::NoCutoff);
        }
        let per_mode = (cutoff as u128) + 1;
        let mut bath: u128 = 1;
        for _ in 0..num_modes {
            bath = bath.saturating_mul(per_mode);
        }
        let dim = bath.saturating_mul(2);
        if dim > limit as u128 {
            return Err(HilbertError::DimensionOverflow { dim, limit });
        }
        Ok(Self {
            num_modes,
            cutoff,
            bath_dim: bath as usize,
            dim: dim as usize,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    /// Maximum photon number per mode.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of bath configurations, `(cutoff+1)^num_modes`.
    pub fn bath_dim(&self) -> usize {
        self.bath_dim
    }

    /// Composite dimension, `2 * bath_dim`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stride of mode `k` (1-based) in the bath rank.
    pub fn stride(&self, mode: usize) -> usize {
        debug_assert!(mode >= 1 && mode <= self.num_modes);
        (self.cutoff + 1).pow((self.num_modes - mode) as u32)
    }

    /// Rank of a bath occupation tuple within `0..bath_dim`.
    pub fn bath_rank(&self, occupations: &[usize]) -> usize {
        assert_eq!(occupations.len(), self.num_modes);
        let base = self.cutoff + 1;
        let mut rank = 0usize;
        for &n in occupations {
            assert!(n <= self.cutoff, "occupation {n} exceeds cutoff {}", self.cutoff);
            rank = rank * base + n;
        }
        rank
    }

    /// Occupation tuple of a bath rank.
    pub fn bath_occupations(&self, mut rank: usize) -> Vec<usize> {
        assert!(rank < self.bath_dim);
        let base = self.cutoff + 1;
        let mut occ = vec![0usize; self.num_modes];
        for k in (0..self.num_modes).rev() {
            occ[k] = rank % base;
            rank /= base;
        }
        occ
    }

    /// Occupation of mode `k` (1-based) within a bath rank.
    pub fn mode_digit(&self, rank: usize, mode: usize) -> usize {
        (rank / self.stride(mode)) % (self.cutoff + 1)
    }

    /// Flat composite index of `(atom, occupations)`.
    pub fn flat_index(&self, atom: AtomLevel, occupations: &[usize]) -> usize {
        (atom as usize) * self.bath_dim + self.bath_rank(occupations)
    }

    /// Flat composite index of `(atom, bath rank)`.
    pub fn flat_of_rank(&self, atom: AtomLevel, rank: usize) -> usize {
        debug_assert!(rank < self.bath_dim);
        (atom as usize) * self.bath_dim + rank
    }

    /// Structured basis label of a flat index.
    pub fn basis_index(&self, flat: usize) -> BasisIndex {
        assert!(flat < self.dim);
        let atom = if flat < self.bath_dim {
            AtomLevel::Ground
        } else {
            AtomLevel::Excited
        };
        BasisIndex {
            atom,
            occupations: self.bath_occupations(flat % self.bath_dim),
        }
    }

    /// Integer mode labels used in phase conventions: centered around zero
    /// for an odd number of modes (`-1, 0, 1` for three modes), `0..k`
    /// otherwise.
    pub fn mode_labels(&self) -> Vec<i64> {
        mode_labels(self.num_modes)
    }
}

/// Mode labels for `num_modes` modes; see [`HilbertSpec::mode_labels`].
pub fn mode_labels(num_modes: usize) -> Vec<i64> {
    if num_modes % 2 == 1 {
        let half = (num_modes as i64 - 1) / 2;
        (-half..=half).collect()
    } else {
        (0..num_modes as i64).collect()
    }
}

/// Structured label of one composite basis state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisIndex {
    pub atom: AtomLevel,
    pub occupations: Vec<usize>,
}

/// Complex amplitude vector over the composite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    pub fn zero(dim: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); dim])
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Self {
        Self(amplitudes)
    }

    /// Basis state `|atom> ⊗ |occupations>`.
    pub fn basis_state(spec: &HilbertSpec, atom: AtomLevel, occupations: &[usize]) -> Self {
        let mut v = Self::zero(spec.dim());
        v.0[spec.flat_index(atom, occupations)] = C64::new(1.0, 0.0);
        v
    }

    /// `system ⊗ |vacuum>` with system amplitudes `(excited, ground)`.
    pub fn system_state(spec: &HilbertSpec, excited: C64, ground: C64) -> Self {
        let occ = vec![0usize; spec.num_modes()];
        let mut v = Self::zero(spec.dim());
        v.0[spec.flat_index(AtomLevel::Ground, &occ)] = ground;
        v.0[spec.flat_index(AtomLevel::Excited, &occ)] = excited;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self(self.0.iter().map(|a| a / n).collect())
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

impl std::ops::Deref for StateVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseEntry {
    pub row: u32,
    pub col: u32,
    pub value: C64,
}

/// Complex sparse matrix on the composite space. Entries are kept sorted
/// row-major with duplicates merged, so repeated applications sum in a fixed
/// order and results are reproducible bit-for-bit. A row index accompanies
/// the entry list so row ranges can be applied independently.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<SparseEntry>,
    row_ptr: Vec<u32>,
}

impl SparseOperator {
    pub fn from_entries(dim: usize, raw: Vec<(usize, usize, C64)>) -> Self {
        let mut entries: Vec<SparseEntry> = raw
            .into_iter()
            .map(|(r, c, v)| {
                assert!(r < dim && c < dim);
                SparseEntry {
                    row: r as u32,
                    col: c as u32,
                    value: v,
                }
            })
            .collect();
        entries.sort_by_key(|e| (e.row, e.col));
        let mut merged: Vec<SparseEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.row == e.row && last.col == e.col => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != C64::new(0.0, 0.0));
        Self {
            dim,
            row_ptr: Self::index_rows(dim, &merged),
            entries: merged,
        }
    }

    fn index_rows(dim: usize, entries: &[SparseEntry]) -> Vec<u32> {
        let mut ptr = vec![0u32; dim + 1];
        for e in entries {
            ptr[e.row as usize + 1] += 1;
        }
        for r in 0..dim {
            ptr[r + 1] += ptr[r];
        }
        ptr
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
            row_ptr: vec![0; dim + 1],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let entries: Vec<SparseEntry> = (0..dim as u32)
            .map(|i| SparseEntry {
                row: i,
                col: i,
                value: C64::new(1.0, 0.0),
            })
            .collect();
        Self {
            dim,
            row_ptr: Self::index_rows(dim, &entries),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    /// `out += scale * A * input`.
    pub fn accumulate(&self, input: &[C64], out: &mut [C64], scale: C64) {
        debug_assert_eq!(input.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for e in &self.entries {
            out[e.row as usize] += scale * e.value * input[e.col as usize];
        }
    }

    /// `out_block[row - rows.start] += scale * (A * input)[row]` for the rows
    /// in `rows`. Lets disjoint row blocks be applied from different threads
    /// with the same per-row summation order as the serial path.
    pub fn accumulate_rows(
        &self,
        input: &[C64],
        out_block: &mut [C64],
        scale: C64,
        rows: std::ops::Range<usize>,
    ) {
        debug_assert_eq!(input.len(), self.dim);
        debug_assert_eq!(out_block.len(), rows.len());
        let lo = self.row_ptr[rows.start] as usize;
        let hi = self.row_ptr[rows.end] as usize;
        for e in &self.entries[lo..hi] {
            out_block[e.row as usize - rows.start] += scale * e.value * input[e.col as usize];
        }
    }

    pub fn apply_slice(&self, input: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        self.accumulate(input, &mut out, C64::new(1.0, 0.0));
        out
    }

    pub fn apply(&self, input: &StateVector) -> StateVector {
        StateVector::from_vec(self.apply_slice(input.as_slice()))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_entries(
            self.dim,
            self.entries
                .iter()
                .map(|e| (e.col as usize, e.row as usize, e.value.conj()))
                .collect(),
        )
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::from_entries(
            self.dim,
            self.entries
                .iter()
                .map(|e| (e.row as usize, e.col as usize, factor * e.value))
                .collect(),
        )
    }

    /// Deterministically merged `sum_i coeff_i * op_i`.
    pub fn linear_combination(dim: usize, terms: &[(C64, &SparseOperator)]) -> Self {
        let mut raw = Vec::new();
        for (coeff, op) in terms {
            assert_eq!(op.dim, dim);
            for e in &op.entries {
                raw.push((e.row as usize, e.col as usize, *coeff * e.value));
            }
        }
        Self::from_entries(dim, raw)
    }

    /// Dense row-major copy, for tests and small-scale diagnostics.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for e in &self.entries {
            m[e.row as usize * self.dim + e.col as usize] += e.value;
        }
        m
    }

    /// Largest entrywise deviation from `A = A^\dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let dense = self.to_dense();
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (dense[r * self.dim + c] - dense[c * self.dim + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.value.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Annihilation operator of mode `k` (1-based), padded with identities on the
/// atom and the other modes. The truncated ladder keeps `<n-1|a|n> = sqrt(n)`
/// for `n <= cutoff`; its adjoint sends the top level to zero.
pub fn annihilation(spec: &HilbertSpec, mode: usize) -> Result<SparseOperator, HilbertError> {
    if mode < 1 || mode > spec.num_modes() {
        return Err(HilbertError::ModeOutOfRange {
            mode,
            num_modes: spec.num_modes(),
        });
    }
    let stride = spec.stride(mode);
    let mut raw = Vec::new();
    for atom in 0..2usize {
        for rank in 0..spec.bath_dim() {
            let n = spec.mode_digit(rank, mode);
            if n >= 1 {
                let col = atom * spec.bath_dim() + rank;
                let row = col - stride;
                raw.push((row, col, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
    }
    Ok(SparseOperator::from_entries(spec.dim(), raw))
}

/// Creation operator of mode `k` (1-based); adjoint of [`annihilation`].
pub fn creation(spec: &HilbertSpec, mode: usize) -> Result<SparseOperator, HilbertError> {
    Ok(annihilation(spec, mode)?.adjoint())
}

/// Selector for the padded atomic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomOp {
    /// `sigma = |b><e|`
    Lower,
    /// `sigma^dag = |e><b|`
    Raise,
    /// `sigma_x = sigma + sigma^dag`
    SigmaX,
    /// `sigma_z = |e><e| - |b><b|`
    SigmaZ,
}

/// Atomic operator tensored with the bath identity.
pub fn atom_operator(spec: &HilbertSpec, which: AtomOp) -> SparseOperator {
    let b = spec.bath_dim();
    let one = C64::new(1.0, 0.0);
    let mut raw = Vec::new();
    for r in 0..b {
        match which {
            AtomOp::Lower => raw.push((r, b + r, one)),
            AtomOp::Raise => raw.push((b + r, r, one)),
            AtomOp::SigmaX => {
                raw.push((r, b + r, one));
                raw.push((b + r, r, one));
            }
            AtomOp::SigmaZ => {
                raw.push((r, r, -one));
                raw.push((b + r, b + r, one));
            }
        }
    }
    SparseOperator::from_entries(spec.dim(), raw)
}

/// Total excitation number `sigma^dag sigma + sum_k n_k` (diagonal).
pub fn total_excitation(spec: &HilbertSpec) -> SparseOperator {
    let b = spec.bath_dim();
    let mut raw = Vec::new();
    for atom in 0..2usize {
        for rank in 0..b {
            let photons: usize = spec.bath_occupations(rank).iter().sum();
            let total = photons + atom; // atom=1 is the excited level
            if total > 0 {
                let i = atom * b + rank;
                raw.push((i, i, C64::new(total as f64, 0.0)));
            }
        }
    }
    SparseOperator::from_entries(spec.dim(), raw)
}

/// Coefficient matrix `gamma[tau][k] = exp(-i 2 pi tau k / kappa) / sqrt(kappa)`
/// of the discrete Fourier transform between spectral and temporal modes,
/// indexed by the integer labels of [`mode_labels`].
pub fn dft_matrix(num_modes: usize) -> Vec<Vec<C64>> {
    let labels = mode_labels(num_modes);
    let norm = 1.0 / (num_modes as f64).sqrt();
    labels
        .iter()
        .map(|&tau| {
            labels
                .iter()
                .map(|&k| {
                    let phase = -TAU * (tau * k) as f64 / num_modes as f64;
                    C64::from_polar(norm, phase)
                })
                .collect()
        })
        .collect()
}

/// Temporal-mode annihilation operator `b_tau` (1-based slot index), the DFT
/// combination of the spectral annihilators on the same truncated space.
pub fn temporal_annihilation(
    spec: &HilbertSpec,
    tau: usize,
) -> Result<SparseOperator, HilbertError> {
    if tau < 1 || tau > spec.num_modes() {
        return Err(HilbertError::ModeOutOfRange {
            mode: tau,
            num_modes: spec.num_modes(),
        });
    }
    let gamma = dft_matrix(spec.num_modes());
    let mut terms = Vec::new();
    let ops: Vec<SparseOperator> = (1..=spec.num_modes())
        .map(|k| annihilation(spec, k))
        .collect::<Result<_, _>>()?;
    for (k, op) in ops.iter().enumerate() {
        terms.push((gamma[tau - 1][k], op));
    }
    Ok(SparseOperator::linear_combination(spec.dim(), &terms))
}
