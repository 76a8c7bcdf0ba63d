//! Fine-stage beam selection: sector pools around coarse estimates, the
//! covariance-guided window search, and the two fixed-rule selectors used
//! as baseline and oracle.

use std::cmp::Ordering;

use crate::combiner::DftCodebook;
use crate::error::{DoaError, Result};
use crate::linalg::{hermitian_eig_desc, CMat};

/// Gram matrices with `lambda_min / lambda_max` below this are skipped.
pub const GRAM_SINGULAR_TOL: f64 = 1e-12;

/// Slack on the pool membership test `|gamma - center| <= w_sec / 2`.
const POOL_TOL: f64 = 1e-9;

/// Tunables of the covariance-guided search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SelectionParams {
    /// Tikhonov term added to the window Gram matrix.
    pub gamma: f64,
    /// Weight of the squared-condition penalty.
    pub alpha: f64,
    /// Number of top-energy beams used for pruning; `0` searches every window.
    pub prune_q: usize,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self { gamma: 1e-8, alpha: 1e-3, prune_q: 0 }
    }
}

/// Default sector width, four beam cells.
pub fn default_sector_width(m: usize) -> f64 {
    4.0 * 2.0 * std::f64::consts::PI / m as f64
}

/// One sector: a contiguous beam range and the estimates it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    /// First beam of the pool (inclusive).
    pub lo: usize,
    /// Last beam of the pool (inclusive).
    pub hi: usize,
    /// Mean frequency of the member estimates.
    pub center: f64,
    /// Positions of the member estimates in the ascending estimate list.
    pub members: Vec<usize>,
    /// Beam budget of the sector.
    pub budget: usize,
}

impl Sector {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn beams(&self) -> Vec<usize> {
        (self.lo..=self.hi).collect()
    }
}

/// Disjoint, contiguous beam pools, ordered by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPools {
    pub sectors: Vec<Sector>,
    pub w_sec: f64,
}

impl SectorPools {
    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }
}

/// Grows `[lo, hi]` one beam at a time until it holds `size` beams, taking
/// the side whose next beam is closer to `center` (right on ties).
fn grow(lo: &mut usize, hi: &mut usize, size: usize, center: f64, gamma: &[f64]) {
    let m = gamma.len();
    while *hi - *lo + 1 < size {
        let left = (*lo > 0).then(|| (center - gamma[*lo - 1]).abs());
        let right = (*hi + 1 < m).then(|| (gamma[*hi + 1] - center).abs());
        match (left, right) {
            (Some(l), Some(r)) if l < r => *lo -= 1,
            (_, Some(_)) => *hi += 1,
            (Some(_), None) => *lo -= 1,
            (None, None) => break,
        }
    }
}

fn pool_for(center: f64, w_sec: f64, budget: usize, codebook: &DftCodebook) -> (usize, usize) {
    let gamma = codebook.gamma();
    let inside: Vec<usize> = (0..gamma.len()).filter(|&k| (gamma[k] - center).abs() <= w_sec / 2.0 + POOL_TOL).collect();
    let (mut lo, mut hi) = match (inside.first(), inside.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => {
            let k = codebook.nearest_beam(center);
            (k, k)
        }
    };
    grow(&mut lo, &mut hi, budget, center, gamma);
    (lo, hi)
}

/// Groups coarse estimates into sectors and builds their beam pools.
///
/// Estimates (taken in ascending order) whose nearest beams are at most
/// `ceil(w_sec / cell)` apart are chained into one sector. A sector with
/// `n` members gets a budget of `k_f * n` beams and the pool
/// `{k : |gamma_k - center| <= w_sec / 2}`, grown as needed to fit the
/// budget. Overlapping pools are merged, which adds their budgets.
pub fn sectorize(mu_coarse: &[f64], codebook: &DftCodebook, w_sec: f64, k_f: usize) -> Result<SectorPools> {
    if mu_coarse.is_empty() {
        return Err(DoaError::InvalidArgument("no coarse estimates to sectorize".into()));
    }
    if !(w_sec > 0.0) {
        return Err(DoaError::InvalidArgument(format!("sector width must be positive, got {w_sec}")));
    }
    let m = codebook.m();
    if k_f < 2 || k_f * mu_coarse.len() > m {
        return Err(DoaError::InvalidArgument(format!(
            "budget of {k_f} beams per source does not fit {} sources on {m} beams",
            mu_coarse.len()
        )));
    }
    let mut order: Vec<usize> = (0..mu_coarse.len()).collect();
    order.sort_by(|&a, &b| mu_coarse[a].total_cmp(&mu_coarse[b]));
    let reach = (w_sec / codebook.cell() - 1e-9).ceil() as usize;

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_beam = 0;
    for &i in &order {
        let beam = codebook.nearest_beam(mu_coarse[i]);
        match groups.last_mut() {
            Some(g) if beam - last_beam <= reach => g.push(i),
            _ => groups.push(vec![i]),
        }
        last_beam = beam;
    }

    let make = |members: Vec<usize>| {
        let center = members.iter().map(|&i| mu_coarse[i]).sum::<f64>() / members.len() as f64;
        let budget = k_f * members.len();
        let (lo, hi) = pool_for(center, w_sec, budget, codebook);
        Sector { lo, hi, center, members, budget }
    };
    let mut sectors: Vec<Sector> = groups.into_iter().map(make).collect();

    // merge until the pools are disjoint
    loop {
        let clash = sectors.windows(2).position(|w| w[1].lo <= w[0].hi);
        let Some(g) = clash else { break };
        let right = sectors.remove(g + 1);
        let left = &mut sectors[g];
        let mut members = std::mem::take(&mut left.members);
        members.extend(right.members);
        let center = members.iter().map(|&i| mu_coarse[i]).sum::<f64>() / members.len() as f64;
        let budget = left.budget + right.budget;
        let (mut lo, mut hi) = (left.lo.min(right.lo), left.hi.max(right.hi));
        grow(&mut lo, &mut hi, budget, center, codebook.gamma());
        *left = Sector { lo, hi, center, members, budget };
    }
    Ok(SectorPools { sectors, w_sec })
}

/// Per-beam energy `rho_k = b_k^H R b_k`.
pub fn power_profile(r: &CMat, codebook: &DftCodebook) -> Vec<f64> {
    let b = codebook.matrix();
    (0..codebook.m())
        .map(|k| {
            let col = b.column(k);
            (col.adjoint() * r * col)[(0, 0)].re
        })
        .collect()
}

/// Score of one beam window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WindowScore {
    pub score: f64,
    pub cap: f64,
    pub cond2: f64,
}

/// Covariance-capture score of a beam window; `None` when the window Gram
/// matrix is numerically singular.
pub fn score_window(window: &[usize], r: &CMat, codebook: &DftCodebook, params: &SelectionParams) -> Option<WindowScore> {
    let k = window.len();
    let b = codebook.columns(window);
    let g = b.adjoint() * &b;
    let (eig, _) = hermitian_eig_desc(&g);
    let (lmax, lmin) = (eig[0], eig[k - 1]);
    if !(lmin > GRAM_SINGULAR_TOL * lmax) {
        return None;
    }
    let cond2 = (lmax / lmin).powi(2);
    let reg = g + CMat::identity(k, k).scale(params.gamma);
    let c = b.adjoint() * r * &b;
    let inv = reg.cholesky()?.inverse();
    let cap = (inv * c).trace().re;
    Some(WindowScore { score: cap / (1.0 + params.alpha * cond2), cap, cond2 })
}

/// Selected windows, one per sector, and their union.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSelection {
    pub per_sector: Vec<Vec<usize>>,
    /// Scores of the chosen windows (`None` for rule-based selectors).
    pub scores: Vec<Option<WindowScore>>,
    /// Sorted union of all windows.
    pub union: Vec<usize>,
}

impl BeamSelection {
    fn from_windows(per_sector: Vec<Vec<usize>>, scores: Vec<Option<WindowScore>>) -> Self {
        let mut union: Vec<usize> = per_sector.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        Self { per_sector, scores, union }
    }
}

/// Candidate ordering: higher score, then smaller `cond^2`, then the window
/// center nearer the pool center, then the lower start.
fn better(a: &(usize, WindowScore, f64), b: &(usize, WindowScore, f64)) -> Ordering {
    b.1.score
        .total_cmp(&a.1.score)
        .then(a.1.cond2.total_cmp(&b.1.cond2))
        .then(a.2.total_cmp(&b.2))
        .then(a.0.cmp(&b.0))
}

/// Window start positions (offsets into the pool) after optional pruning.
pub fn candidate_starts(sector: &Sector, k: usize, rho: &[f64], prune_q: usize) -> Vec<usize> {
    let len = sector.len();
    let all: Vec<usize> = (0..=len - k).collect();
    if prune_q == 0 || len <= k {
        return all;
    }
    let mut by_energy: Vec<usize> = (0..len).collect();
    by_energy.sort_by(|&a, &b| rho[sector.lo + b].total_cmp(&rho[sector.lo + a]).then(a.cmp(&b)));
    let top = &by_energy[..prune_q.min(len)];
    let h = k / 2;
    let kept: Vec<usize> = all.iter().copied().filter(|s| top.contains(&(s + h))).collect();
    if kept.is_empty() {
        all
    } else {
        kept
    }
}

/// Best window of one sector.
pub fn select_in_sector(
    sector: &Sector,
    sector_index: usize,
    r: &CMat,
    rho: &[f64],
    codebook: &DftCodebook,
    params: &SelectionParams,
) -> Result<(Vec<usize>, WindowScore)> {
    let len = sector.len();
    if len < 2 {
        return Err(DoaError::InvalidBeamSet(format!("sector {sector_index} pool has {len} beam")));
    }
    let k = sector.budget.clamp(2, len);
    let pool_center = (sector.lo + sector.hi) as f64 / 2.0;
    let mut best: Option<(usize, WindowScore, f64)> = None;
    for s in candidate_starts(sector, k, rho, params.prune_q) {
        let window: Vec<usize> = (sector.lo + s..sector.lo + s + k).collect();
        let Some(sc) = score_window(&window, r, codebook, params) else { continue };
        let offset = ((sector.lo + s) as f64 + (k - 1) as f64 / 2.0 - pool_center).abs();
        let cand = (s, sc, offset);
        if best.as_ref().is_none_or(|b| better(&cand, b) == Ordering::Less) {
            best = Some(cand);
        }
    }
    let (s, sc, _) = best.ok_or(DoaError::AllWindowsSingular { sector: sector_index })?;
    Ok(((sector.lo + s..sector.lo + s + k).collect(), sc))
}

/// Covariance-guided selection of one contiguous window per sector.
pub fn select_beams(pools: &SectorPools, r: &CMat, codebook: &DftCodebook, params: &SelectionParams) -> Result<BeamSelection> {
    let rho = if params.prune_q > 0 { power_profile(r, codebook) } else { Vec::new() };
    let mut windows = Vec::with_capacity(pools.len());
    let mut scores = Vec::with_capacity(pools.len());
    for (g, sector) in pools.sectors.iter().enumerate() {
        let (w, sc) = select_in_sector(sector, g, r, &rho, codebook, params)?;
        windows.push(w);
        scores.push(Some(sc));
    }
    Ok(BeamSelection::from_windows(windows, scores))
}

/// Fixed windows `(start, size)` merged where they overlap: an overlapping
/// run becomes one block of the summed size, clipped into range, then split
/// back into consecutive windows of the original sizes.
fn merge_windows(mut windows: Vec<(usize, usize)>, m: usize) -> Vec<Vec<usize>> {
    windows.sort();
    let mut blocks: Vec<(usize, Vec<usize>)> = Vec::new();
    for (start, size) in windows {
        blocks.push((start, vec![size]));
        while blocks.len() >= 2 {
            let n = blocks.len();
            let prev_end = blocks[n - 2].0 + blocks[n - 2].1.iter().sum::<usize>();
            if blocks[n - 1].0 >= prev_end {
                break;
            }
            let (_, sizes) = blocks.pop().unwrap();
            let last = blocks.last_mut().unwrap();
            last.1.extend(sizes);
            let total: usize = last.1.iter().sum();
            last.0 = last.0.min(m - total);
        }
    }
    let mut out = Vec::new();
    for (start, sizes) in blocks {
        let mut s = start;
        for size in sizes {
            out.push((s..s + size).collect());
            s += size;
        }
    }
    out
}

fn check_budget(count: usize, k_f: usize, m: usize) -> Result<()> {
    if k_f < 2 || k_f * count > m {
        return Err(DoaError::InvalidArgument(format!("{count} windows of {k_f} beams do not fit {m} beams")));
    }
    Ok(())
}

/// Sectorization baseline: a fixed `K_f`-window anchored on the beam nearest
/// each coarse estimate, expanding to the right for even sizes.
///
/// Estimates sharing a nearest beam form one sector with a proportionally
/// larger window.
pub fn baseline_sectorization_select(mu_coarse: &[f64], codebook: &DftCodebook, k_f: usize) -> Result<BeamSelection> {
    let m = codebook.m();
    check_budget(mu_coarse.len(), k_f, m)?;
    let mut beams: Vec<usize> = mu_coarse.iter().map(|&mu| codebook.nearest_beam(mu)).collect();
    beams.sort_unstable();
    let mut windows = Vec::new();
    for chunk in beams.chunk_by(|a, b| a == b) {
        let size = k_f * chunk.len();
        let start = chunk[0].saturating_sub((size - 1) / 2).min(m - size);
        windows.push((start, size));
    }
    let per_sector = merge_windows(windows, m);
    let n = per_sector.len();
    Ok(BeamSelection::from_windows(per_sector, vec![None; n]))
}

/// Oracle selector: for each true frequency, the `K_f`-window whose mean
/// beam frequency is closest to it (the right window on exact ties).
pub fn oracle_select(mu_true: &[f64], codebook: &DftCodebook, k_f: usize) -> Result<BeamSelection> {
    let m = codebook.m();
    check_budget(mu_true.len(), k_f, m)?;
    let gamma = codebook.gamma();
    let mut windows = Vec::new();
    for &mu in mu_true {
        let mut best = (0, f64::INFINITY);
        for s in 0..=m - k_f {
            let centroid = gamma[s..s + k_f].iter().sum::<f64>() / k_f as f64;
            let dist = (centroid - mu).abs();
            if dist <= best.1 {
                best = (s, dist);
            }
        }
        windows.push((best.0, k_f));
    }
    let per_sector = merge_windows(windows, m);
    let n = per_sector.len();
    Ok(BeamSelection::from_windows(per_sector, vec![None; n]))
}
