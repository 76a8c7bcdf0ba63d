//! Hybrid combiner building blocks: the phase-centred DFT codebook, virtual
//! subarray masks, the baseband combiner that realizes a mask through an
//! analog beam subset, and projection of element data onto beams.
//!
//! Index convention: antennas and beams are 0-based throughout the crate.
//! Beam `k` looks at `gamma_k = -pi + 2 pi k / M + pi / M`, so the grid is
//! offset by half a cell and beams `0` and `M - 1` are not neighbours.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::array::{ChannelKind, SnapshotMatrix};
use crate::error::{DoaError, Result};
use crate::linalg::{thin_svd, CMat, CVec};

/// Largest condition number accepted for `J_M W_RF`.
pub const COMBINER_MAX_COND: f64 = 1e8;

/// Orthonormal DFT beams phase-centred at the array centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct DftCodebook {
    beams: CMat,
    gamma: Vec<f64>,
}

impl DftCodebook {
    /// Builds the `M`-beam codebook, `b_k[m] = exp(j (m - (M-1)/2) gamma_k) / sqrt(M)`.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(DoaError::InvalidArgument(format!("codebook needs M >= 2, got {m}")));
        }
        let cell = 2.0 * PI / m as f64;
        let gamma: Vec<f64> = (0..m).map(|k| -PI + cell * k as f64 + cell / 2.0).collect();
        let centre = (m as f64 - 1.0) / 2.0;
        let norm = (m as f64).sqrt();
        let beams = CMat::from_fn(m, m, |row, k| {
            Complex64::from_polar(1.0 / norm, (row as f64 - centre) * gamma[k])
        });
        Ok(Self { beams, gamma })
    }

    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    /// Beam spacing `2 pi / M`.
    pub fn cell(&self) -> f64 {
        2.0 * PI / self.m() as f64
    }

    /// Beam pointing frequencies, ascending.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// The full `M x M` beam matrix `B`.
    pub fn matrix(&self) -> &CMat {
        &self.beams
    }

    pub fn beam(&self, k: usize) -> CVec {
        self.beams.column(k).into_owned()
    }

    /// Columns of `B` for the given beam indices.
    pub fn columns(&self, beams: &[usize]) -> CMat {
        CMat::from_fn(self.m(), beams.len(), |i, j| self.beams[(i, beams[j])])
    }

    /// Constant-modulus analog weights `sqrt(M) * B[:, beams]`.
    pub fn analog_weights(&self, beams: &[usize]) -> CMat {
        self.columns(beams).scale((self.m() as f64).sqrt())
    }

    /// Index of the beam closest to `mu`; an exact midpoint resolves to the
    /// lower index. Frequencies outside the grid clamp to the end beams.
    pub fn nearest_beam(&self, mu: f64) -> usize {
        let pos = (mu + PI) / self.cell() - 0.5;
        // round half down
        let idx = (pos - 0.5 - 1e-9).ceil();
        idx.clamp(0.0, (self.m() - 1) as f64) as usize
    }
}

/// Selected antenna rows of a virtual element-space subarray.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubarrayMask {
    m: usize,
    indices: Vec<usize>,
}

impl SubarrayMask {
    /// Contiguous block of `len` antennas starting at `start`.
    pub fn contiguous(m: usize, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > m {
            return Err(DoaError::InvalidMask(format!("block [{start}, {}) outside 0..{m}", start + len)));
        }
        Ok(Self { m, indices: (start..start + len).collect() })
    }

    pub fn array_size(&self) -> usize {
        self.m
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// True when the block is symmetric about the array centre.
    pub fn is_centro_symmetric(&self) -> bool {
        let first = self.indices[0];
        let last = *self.indices.last().unwrap();
        first + last + 1 == self.m
    }

    /// `J_M`, the row picker.
    pub fn selection_matrix(&self) -> CMat {
        let mut j = CMat::zeros(self.len(), self.m);
        for (r, &c) in self.indices.iter().enumerate() {
            j[(r, c)] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// `J_M Y` by direct row masking.
    pub fn select_rows(&self, y: &CMat) -> CMat {
        CMat::from_fn(self.len(), y.ncols(), |r, c| y[(self.indices[r], c)])
    }

    /// Applies the mask to element-space snapshots.
    pub fn apply(&self, y: &SnapshotMatrix) -> SnapshotMatrix {
        SnapshotMatrix::new(self.select_rows(&y.data), ChannelKind::Element)
    }
}

/// Centred block `{m : |m - (M-1)/2| <= (N_RF-1)/2}` (0-based).
pub fn centro_symmetric_mask(m: usize, n_rf: usize) -> Result<SubarrayMask> {
    if n_rf == 0 || n_rf > m {
        return Err(DoaError::InvalidMask(format!("N_RF={n_rf} must lie in 1..={m}")));
    }
    if (m - n_rf) % 2 != 0 {
        return Err(DoaError::ParityMismatch { m, n_rf });
    }
    SubarrayMask::contiguous(m, (m - n_rf) / 2, n_rf)
}

/// Leading block `{0, ..., N_RF - 1}`.
pub fn noncentro_mask(m: usize, n_rf: usize) -> Result<SubarrayMask> {
    if n_rf == 0 || n_rf > m {
        return Err(DoaError::InvalidMask(format!("N_RF={n_rf} must lie in 1..={m}")));
    }
    SubarrayMask::contiguous(m, 0, n_rf)
}

/// Solves `J_M W_RF W_BB = I` for the digital combiner.
///
/// On failure the error lists the analog columns that carry the dependent
/// direction of `J_M W_RF`.
pub fn solve_baseband_combiner(w_rf: &CMat, mask: &SubarrayMask) -> Result<CMat> {
    if w_rf.nrows() != mask.array_size() {
        return Err(DoaError::InvalidArgument(format!(
            "W_RF has {} rows but the mask addresses {} antennas",
            w_rf.nrows(),
            mask.array_size()
        )));
    }
    let sub = mask.select_rows(w_rf);
    if sub.nrows() != sub.ncols() {
        return Err(DoaError::NotSquare { rows: sub.nrows(), cols: sub.ncols() });
    }
    let svd = thin_svd(&sub);
    let smax = svd.s[0];
    let smin = *svd.s.last().unwrap();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < COMBINER_MAX_COND) {
        let last = svd.v.ncols() - 1;
        let columns = (0..svd.v.nrows()).filter(|&c| svd.v[(c, last)].norm() > 1e-3).collect();
        return Err(DoaError::SingularCombiner { columns, cond });
    }
    sub.lu()
        .try_inverse()
        .ok_or(DoaError::SingularCombiner { columns: (0..w_rf.ncols()).collect(), cond })
}

/// Projects element-space snapshots onto the listed beams, row `r` being
/// `b_{beams[r]}^H Y`.
pub fn project_to_beams(y: &SnapshotMatrix, beams: &[usize], codebook: &DftCodebook) -> Result<SnapshotMatrix> {
    if beams.is_empty() {
        return Err(DoaError::InvalidBeamSet("beam set is empty".into()));
    }
    if let Some(b) = beams.iter().find(|&&b| b >= codebook.m()) {
        return Err(DoaError::InvalidBeamSet(format!("beam {b} outside 0..{}", codebook.m())));
    }
    if y.kind != ChannelKind::Element || y.channels() != codebook.m() {
        return Err(DoaError::InvalidArgument("beam projection expects full element-space data".into()));
    }
    let b = codebook.columns(beams);
    Ok(SnapshotMatrix::new(b.adjoint() * &y.data, ChannelKind::Beam))
}
