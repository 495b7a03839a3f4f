//! Spectrum of the magnetic Laplacian on the sphere, per charge sector.
//!
//! Axisymmetry splits the operator into one-dimensional problems labelled by
//! the azimuthal Fourier index m (north-chart convention). Each sector is the
//! singular Sturm–Liouville problem
//!
//! ```text
//!   −(1/sinθ) d/dθ ( sinθ df/dθ ) + (m − a(θ))²/sin²θ · f = E f,
//! ```
//!
//! with a(θ) = A_φ^N(θ), discretized on the uniform midpoint grid
//! θ_i = (i+½)h, h = π/grid_size, in flux form: the face coefficients
//! sin(θ_i ± h/2) vanish identically at the poles, which encodes the
//! regularity condition without any explicit boundary rows. A √sinθ
//! similarity makes the matrix symmetric; eigenvalues come from Sturm
//! bisection. When the field carries a θ-component (after a gauge shift) the
//! hopping acquires the exact link phase exp(−iΔΦ) and the complex Hermitian
//! matrix is reduced back to a real symmetric one by taking moduli — a
//! unitary diagonal change of basis, so the spectrum is untouched.
//!
//! Full spectra are assembled by scanning all sectors whose potential floor
//! stays below the energy cutoff, merging, and clustering the union into
//! degenerate levels.

mod tridiag;

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::geometry::{monopole_field, GaugeField, GeometryError};
use tridiag::SymTridiag;

/// Minimum admissible number of grid points for a sector reduction.
pub const MIN_GRID: usize = 64;

/// Default clustering scale: two merged eigenvalues belong to the same level
/// when they differ by less than `cluster_tol · (1 + E)`.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("grid of {got} points is too coarse; need at least {min}")]
    GridTooCoarse { got: usize, min: usize },
    #[error("bisection stalled at interval width {width:.3e} (limit {limit:.3e})")]
    ConvergenceFailure { width: f64, limit: f64 },
    #[error(
        "cluster separation {gap:.3e} near E = {at} is below twice the tolerance {tol:.3e}; \
         refine the grid or tighten cluster_tol"
    )]
    ClusterAmbiguity { gap: f64, tol: f64, at: f64 },
    #[error("requested {count} eigenvalues, but only {max} are available")]
    CountOutOfRange { count: usize, max: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Where a level's value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LevelSource {
    ExactFormula,
    Numeric,
    Semiclassical,
}

impl std::fmt::Display for LevelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LevelSource::ExactFormula => "ExactFormula",
            LevelSource::Numeric => "Numeric",
            LevelSource::Semiclassical => "Semiclassical",
        };
        f.write_str(s)
    }
}

/// One degenerate level of a spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumLevel {
    pub value: f64,
    pub multiplicity: usize,
    pub source: LevelSource,
    /// Contributing azimuthal sectors (numeric spectra only; empty otherwise).
    pub sectors: Vec<i64>,
}

/// A reduced one-dimensional sector problem, ready for eigenvalue extraction.
pub struct SectorProblem {
    /// Chern number of the underlying field.
    pub n: i64,
    /// Azimuthal Fourier index (north chart).
    pub m: i64,
    /// Midpoint grid θ_i = (i+½)·π/grid_size.
    pub grid: Vec<f64>,
    matrix: SymTridiag,
}

impl SectorProblem {
    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// Effective potential (m − a(θ))²/sin²θ of this sector's reduction.
    pub fn effective_potential(&self, theta: f64, field: &GaugeField) -> f64 {
        sector_potential(field, self.m, theta)
    }
}

fn sector_potential(field: &GaugeField, m: i64, theta: f64) -> f64 {
    let s = theta.sin();
    let d = m as f64 - field.a_phi(crate::geometry::Chart::North, theta);
    d * d / (s * s)
}

/// Reduce the charge-n monopole problem to the sector with Fourier index m.
pub fn reduce_sector(n: i64, m: i64, grid_size: usize) -> Result<SectorProblem, SpectralError> {
    reduce_sector_for(&monopole_field(n), m, grid_size)
}

/// Reduce an arbitrary (integral-flux, axisymmetric) field to sector m.
pub fn reduce_sector_for(
    field: &GaugeField,
    m: i64,
    grid_size: usize,
) -> Result<SectorProblem, SpectralError> {
    if grid_size < MIN_GRID {
        return Err(SpectralError::GridTooCoarse {
            got: grid_size,
            min: MIN_GRID,
        });
    }
    let (n, _) = crate::geometry::chern_number(field, 64)?;
    let h = PI / grid_size as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| (i as f64 + 0.5) * h).collect();
    let sin_node: Vec<f64> = grid.iter().map(|t| t.sin()).collect();
    let inv_h2 = 1.0 / (h * h);

    let mut diag = Vec::with_capacity(grid_size);
    for (i, &theta) in grid.iter().enumerate() {
        // Face coefficients sin(θ ± h/2); at the outermost faces these are
        // sin(0) and sin(π) — identically zero, closing the system without
        // boundary conditions.
        let s_minus = ((i as f64) * h).sin();
        let s_plus = ((i as f64 + 1.0) * h).sin();
        diag.push((s_minus + s_plus) * inv_h2 / sin_node[i] + sector_potential(field, m, theta));
    }
    let mut off = Vec::with_capacity(grid_size - 1);
    for i in 0..grid_size - 1 {
        let s_face = ((i as f64 + 1.0) * h).sin();
        let magnitude = s_face * inv_h2 / (sin_node[i] * sin_node[i + 1]).sqrt();
        // Link phase across the cell face from the exact antiderivative of
        // A_θ. For an untransformed field ΔΦ = 0 and the modulus below is
        // exactly `magnitude`; after a gauge shift the hopping is complex and
        // the reduction to |·| is the diagonal-unitary change of basis.
        let dphi = field.phase_potential(grid[i + 1]) - field.phase_potential(grid[i]);
        let hop_re = magnitude * dphi.cos();
        let hop_im = magnitude * dphi.sin();
        off.push(-(hop_re * hop_re + hop_im * hop_im).sqrt());
    }
    Ok(SectorProblem {
        n,
        m,
        grid,
        matrix: SymTridiag { diag, off },
    })
}

/// The `count` lowest eigenvalues of a sector, ascending.
pub fn solve_sector(problem: &SectorProblem, count: usize) -> Result<Vec<f64>, SpectralError> {
    let max = problem.grid_size();
    if count == 0 || count > max {
        return Err(SpectralError::CountOutOfRange { count, max });
    }
    (0..count).map(|k| problem.matrix.eigenvalue(k)).collect()
}

/// All sector eigenvalues strictly below `bound`, ascending.
pub fn sector_eigenvalues_below(
    problem: &SectorProblem,
    bound: f64,
) -> Result<Vec<f64>, SpectralError> {
    problem.matrix.eigenvalues_below(bound)
}

/// Closed-form spectrum for charge magnitude N = |n|:
/// E_{N,j} = j(j+1) + (N/2)(2j+1) with multiplicity 2j+1+N, j = 0..=j_max.
pub fn exact_spectrum(n_abs: u32, j_max: u32) -> Vec<SpectrumLevel> {
    (0..=j_max)
        .map(|j| {
            let jf = j as f64;
            let nf = n_abs as f64;
            SpectrumLevel {
                value: jf * (jf + 1.0) + 0.5 * nf * (2.0 * jf + 1.0),
                multiplicity: (2 * j + 1 + n_abs) as usize,
                source: LevelSource::ExactFormula,
                sectors: Vec::new(),
            }
        })
        .collect()
}

/// The unit-charge series in its historical closed form,
/// E_N = N² + 2N + ½ with multiplicity 2N + 2 (N = 0..=j_max). Kept as an
/// independent route; it must coincide with `exact_spectrum(1, ·)`.
pub fn tamm_spectrum(j_max: u32) -> Vec<SpectrumLevel> {
    (0..=j_max)
        .map(|n| {
            let nf = n as f64;
            SpectrumLevel {
                value: nf * nf + 2.0 * nf + 0.5,
                multiplicity: (2 * n + 2) as usize,
                source: LevelSource::ExactFormula,
                sectors: Vec::new(),
            }
        })
        .collect()
}

/// Numerically assembled spectrum of the charge-n monopole below `e_max`.
pub fn numeric_spectrum(
    n: i64,
    e_max: f64,
    grid_size: usize,
    cluster_tol: f64,
) -> Result<Vec<SpectrumLevel>, SpectralError> {
    numeric_spectrum_for(&monopole_field(n), e_max, grid_size, cluster_tol)
}

/// Numerically assembled spectrum of an arbitrary axisymmetric field.
///
/// Scans every sector whose effective-potential floor on the grid lies below
/// `e_max` (plus a safety margin), extracts all eigenvalues below the cutoff,
/// merges and clusters them into levels. Sectors are independent and solved
/// in parallel; the merge order is fixed by the sector index, so the result
/// is bit-identical regardless of thread schedule.
pub fn numeric_spectrum_for(
    field: &GaugeField,
    e_max: f64,
    grid_size: usize,
    cluster_tol: f64,
) -> Result<Vec<SpectrumLevel>, SpectralError> {
    assert!(e_max > 0.0, "energy cutoff must be positive");
    assert!(cluster_tol > 0.0, "cluster tolerance must be positive");
    if grid_size < MIN_GRID {
        return Err(SpectralError::GridTooCoarse {
            got: grid_size,
            min: MIN_GRID,
        });
    }
    let (n, _) = crate::geometry::chern_number(field, 64)?;
    let sectors = candidate_sectors(field, n, e_max, grid_size);

    let per_sector: Vec<(i64, Result<Vec<f64>, SpectralError>)> = sectors
        .par_iter()
        .map(|&m| {
            let result = reduce_sector_for(field, m, grid_size)
                .and_then(|p| sector_eigenvalues_below(&p, e_max));
            (m, result)
        })
        .collect();

    let mut merged: Vec<(f64, i64)> = Vec::new();
    for (m, result) in per_sector {
        for value in result? {
            merged.push((value, m));
        }
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cluster_levels(&merged, cluster_tol)
}

/// Sectors whose potential floor (sampled on the grid) can still admit an
/// eigenvalue below the cutoff. The floor is zero for m between 0 and n and
/// grows quadratically outside, so the scan terminates.
fn candidate_sectors(field: &GaugeField, n: i64, e_max: f64, grid_size: usize) -> Vec<i64> {
    let h = PI / grid_size as f64;
    let floor = |m: i64| -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..grid_size {
            let theta = (i as f64 + 0.5) * h;
            best = best.min(sector_potential(field, m, theta));
        }
        best
    };
    // Margin: the floor only bounds eigenvalues from below, and the discrete
    // floor can sit slightly above the continuum one; scan generously.
    let cutoff = e_max + 2.0;
    let band_lo = 0.min(n);
    let band_hi = 0.max(n);
    let mut sectors: Vec<i64> = (band_lo..=band_hi).collect();
    let mut m = band_hi + 1;
    while floor(m) <= cutoff {
        sectors.push(m);
        m += 1;
    }
    m = band_lo - 1;
    while floor(m) <= cutoff {
        sectors.push(m);
        m -= 1;
    }
    sectors.sort_unstable();
    sectors
}

/// Group a merged, sorted eigenvalue list into degenerate levels.
fn cluster_levels(
    merged: &[(f64, i64)],
    cluster_tol: f64,
) -> Result<Vec<SpectrumLevel>, SpectralError> {
    let tol_at = |e: f64| cluster_tol * (1.0 + e.abs());
    let mut clusters: Vec<Vec<(f64, i64)>> = Vec::new();
    for &(value, m) in merged {
        match clusters.last_mut() {
            Some(current) if value - current.last().unwrap().0 <= tol_at(value) => {
                current.push((value, m));
            }
            _ => clusters.push(vec![(value, m)]),
        }
    }
    // Ambiguity guard: adjacent clusters must be separated by at least twice
    // the tolerance, otherwise the grouping could flip under grid refinement.
    for pair in clusters.windows(2) {
        let upper = pair[1].first().unwrap().0;
        let lower = pair[0].last().unwrap().0;
        let gap = upper - lower;
        if gap < 2.0 * tol_at(upper) {
            return Err(SpectralError::ClusterAmbiguity {
                gap,
                tol: tol_at(upper),
                at: upper,
            });
        }
    }
    Ok(clusters
        .into_iter()
        .map(|members| {
            let mean = members.iter().map(|(v, _)| v).sum::<f64>() / members.len() as f64;
            let mut sectors: Vec<i64> = members.iter().map(|&(_, m)| m).collect();
            sectors.sort_unstable();
            SpectrumLevel {
                value: mean,
                multiplicity: members.len(),
                source: LevelSource::Numeric,
                sectors,
            }
        })
        .collect())
}

/// Per-level comparison entry between two spectra.
#[derive(Clone, Debug, Serialize)]
pub struct LevelComparison {
    pub value_a: f64,
    pub value_b: f64,
    pub abs_err: f64,
    /// |a−b| / max(|b|, 1): relative error with a unit floor so exact zeros
    /// stay meaningful.
    pub rel_err: f64,
    pub multiplicity_a: usize,
    pub multiplicity_b: usize,
    pub multiplicity_match: bool,
}

/// Level-by-level comparison report. Multiplicity mismatches are flagged per
/// level, never fatal.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumComparison {
    pub rows: Vec<LevelComparison>,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub all_multiplicities_match: bool,
}

/// Compare the first `levels` entries of two sorted spectra (a = probe,
/// b = reference).
pub fn compare_spectra(
    a: &[SpectrumLevel],
    b: &[SpectrumLevel],
    levels: usize,
) -> Result<SpectrumComparison, SpectralError> {
    let max = a.len().min(b.len());
    if levels == 0 || levels > max {
        return Err(SpectralError::CountOutOfRange { count: levels, max });
    }
    let mut rows = Vec::with_capacity(levels);
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut all_match = true;
    for k in 0..levels {
        let (la, lb) = (&a[k], &b[k]);
        let abs_err = (la.value - lb.value).abs();
        let rel_err = abs_err / lb.value.abs().max(1.0);
        let multiplicity_match = la.multiplicity == lb.multiplicity;
        all_match &= multiplicity_match;
        max_abs = max_abs.max(abs_err);
        max_rel = max_rel.max(rel_err);
        rows.push(LevelComparison {
            value_a: la.value,
            value_b: lb.value,
            abs_err,
            rel_err,
            multiplicity_a: la.multiplicity,
            multiplicity_b: lb.multiplicity,
            multiplicity_match,
        });
    }
    Ok(SpectrumComparison {
        rows,
        max_abs_err: max_abs,
        max_rel_err: max_rel,
        all_multiplicities_match: all_match,
    })
}
