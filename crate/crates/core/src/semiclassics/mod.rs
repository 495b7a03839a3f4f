//! Semiclassical machinery: action integrals, torus quantization, and
//! one-dimensional leading-order levels.
//!
//! The classical problem behind the charge sectors is geodesic-like motion on
//! the sphere twisted by a magnetic term β = ζ/2, ζ ∈ {0, ±1}, with the
//! small parameter ħ = 1/N. Energies are carried in the eigenvalue
//! normalization |p|² = E (so the mechanical Hamiltonian is E/2 and momenta
//! satisfy p_θ² = E − p_φ²/sin²θ). Along an orbit the azimuthal momentum
//! p_φ(θ) = P + β cos θ varies; P is the conserved quantity.
//!
//! A torus is labelled by (E, P). Its meridian action is
//!
//! ```text
//!   J_θ(E, P) = ∮ p_θ dθ = 2 ∫ √(E sin²θ − (P + β cos θ)²) / sin θ dθ,
//! ```
//!
//! taken between the turning points, and the azimuthal loop carries
//! J_φ = 2π p_φ(θ̄) plus the gauge holonomy h_φ of the latitude circle; the
//! sum J_φ + h_φ is independent of the chosen slice θ̄. Quantization demands
//! N·(J_θ + h_θ) ≡ 2π(k + μ_θ/4) and N·(J_φ + h_φ) ≡ 0 (mod 2π), with
//! Maslov indices (μ_θ, μ_φ) = (2, 0): the meridian loop reflects twice, the
//! azimuthal loop never.

mod wkb;

pub use wkb::{action_integral, bohr_sommerfeld_levels, turning_points, WellProblem};

use serde::Serialize;
use std::f64::consts::PI;

use crate::geometry::{holonomy, monopole_field, Chart, SphereCurve};
use crate::quadrature::integrate_sqrt_endpoints;
use crate::spectral::{LevelSource, SpectrumLevel};

/// Quadrature order for the meridian action.
const ACTION_QUAD: usize = 200;
/// Segments used for latitude-circle holonomies (the integrand is constant on
/// a latitude, so any count is exact; this sets the polygonal resolution).
const HOLONOMY_SEGMENTS: usize = 256;
/// A torus whose momentum band is thinner than this (relative) is treated as
/// empty.
const EMPTY_TORUS_TOL: f64 = 1e-12;
/// Relative width at which energy bisections stop.
const ROOT_TOL: f64 = 1e-13;

#[derive(Debug, thiserror::Error)]
pub enum SemiclassicsError {
    #[error("no classical motion bracketed at energy {energy}: {detail}")]
    NoBracket { energy: f64, detail: String },
    #[error("energy {energy} crosses the potential {crossings} times; quantization needs a single well")]
    MultiWell { energy: f64, crossings: usize },
    #[error("no classical torus exists at energy {e}, momentum {p}")]
    EmptyTorus { e: f64, p: f64 },
    #[error("energy search stalled in [{lo}, {hi}] while targeting action {target}")]
    RootNotConverged { lo: f64, hi: f64, target: f64 },
    #[error("classical charge {charge} is incompatible with inverse step {n_inv}; expected 0 or ±{n_inv}")]
    ChargeMismatch { charge: i64, n_inv: u32 },
}

/// An invariant torus of the twisted flow, with its loop actions and the
/// data needed to test the quantization conditions.
#[derive(Clone, Debug)]
pub struct InvariantTorus {
    /// Energy in the eigenvalue normalization |p|² = E.
    pub e: f64,
    /// Conserved momentum P = p_φ − β cos θ.
    pub p: f64,
    /// Inverse semiclassical parameter N = 1/ħ.
    pub n_inv: u32,
    /// Magnetic charge; 0 or ±N.
    pub charge: i64,
    /// Turning colatitudes (θ₋, θ₊) of the meridian oscillation.
    pub theta_range: (f64, f64),
    /// Meridian loop action ∮ p_θ dθ.
    pub j_theta: f64,
    /// Azimuthal loop action 2π p_φ(θ̄) at the mid-slice θ̄.
    pub j_phi: f64,
    /// Gauge holonomy along the meridian loop (zero: the loop is contractible
    /// through the chart with no azimuthal winding).
    pub h_theta: f64,
    /// Gauge holonomy of the latitude circle at θ̄.
    pub h_phi: f64,
    /// Maslov indices (μ_θ, μ_φ) of the two loops.
    pub maslov: (u32, u32),
}

impl InvariantTorus {
    /// Magnetic twist β = ζ/2 with ζ the sign of the charge.
    pub fn beta(&self) -> f64 {
        self.charge.signum() as f64 * 0.5
    }

    /// Azimuthal momentum along the orbit, p_φ(θ) = P + β cos θ.
    pub fn p_phi(&self, theta: f64) -> f64 {
        self.p + self.beta() * theta.cos()
    }
}

fn check_charge(n_inv: u32, charge: i64) -> Result<(), SemiclassicsError> {
    assert!(n_inv >= 1, "inverse step N must be at least 1");
    if charge != 0 && charge.unsigned_abs() != u64::from(n_inv) {
        return Err(SemiclassicsError::ChargeMismatch { charge, n_inv });
    }
    Ok(())
}

/// Build the invariant torus at (e, p) and compute its loop actions.
///
/// `charge` must be 0 or ±`n_inv` — the twist β = charge/(2N) is then 0 or
/// ±½, the regime where the classical flow matches the charge-|n| problem at
/// ħ = 1/N.
pub fn torus_actions(
    e: f64,
    p: f64,
    n_inv: u32,
    charge: i64,
) -> Result<InvariantTorus, SemiclassicsError> {
    check_charge(n_inv, charge)?;
    assert!(e.is_finite() && p.is_finite(), "e and p must be finite");
    let beta = charge.signum() as f64 * 0.5;
    if e <= 0.0 {
        return Err(SemiclassicsError::EmptyTorus { e, p });
    }
    // Radicand of p_θ sin θ: positive exactly on the classically allowed band.
    let g = |theta: f64| {
        let s = theta.sin();
        let v = p + beta * theta.cos();
        e * s * s - v * v
    };
    // As a function of cos θ, g is a downward parabola; its interior maximum
    // sits at cos θ* = −Pβ/(E + β²).
    let theta_star = (-(p * beta) / (e + beta * beta)).clamp(-1.0, 1.0).acos();
    if g(theta_star) <= EMPTY_TORUS_TOL * (1.0 + e) {
        return Err(SemiclassicsError::EmptyTorus { e, p });
    }
    // March the band edges to machine precision. g ≤ 0 at both poles, so the
    // brackets [0, θ*] and [θ*, π] are always valid.
    let edge = |mut outside: f64, mut inside: f64| -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (outside + inside);
            if mid == outside || mid == inside {
                break;
            }
            if g(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (outside + inside)
    };
    let theta_lo = edge(0.0, theta_star);
    let theta_hi = edge(PI, theta_star);

    let j_theta = 2.0
        * integrate_sqrt_endpoints(
            |theta| g(theta).max(0.0).sqrt() / theta.sin(),
            theta_lo,
            theta_hi,
            ACTION_QUAD,
        );

    let theta_mid = 0.5 * (theta_lo + theta_hi);
    let j_phi = 2.0 * PI * (p + beta * theta_mid.cos());
    let circle = SphereCurve::latitude_circle(Chart::North, theta_mid, HOLONOMY_SEGMENTS);
    let h_phi = holonomy(&monopole_field(charge.signum()), &circle)
        .expect("latitude circles away from the poles have well-defined holonomy");

    Ok(InvariantTorus {
        e,
        p,
        n_inv,
        charge,
        theta_range: (theta_lo, theta_hi),
        j_theta,
        j_phi,
        h_theta: 0.0,
        h_phi,
        maslov: (2, 0),
    })
}

/// The gauge-invariant azimuthal quantity J_φ + h_φ evaluated on an arbitrary
/// latitude slice of the torus. Independent of `theta_slice`; equals
/// 2π(P + ζ/2) up to the 2π branch of the holonomy.
pub fn azimuthal_invariant(torus: &InvariantTorus, theta_slice: f64) -> f64 {
    assert!(
        theta_slice > 0.0 && theta_slice < PI,
        "slice must avoid the poles, got {theta_slice}"
    );
    let circle = SphereCurve::latitude_circle(Chart::North, theta_slice, HOLONOMY_SEGMENTS);
    let h = holonomy(&monopole_field(torus.charge.signum()), &circle)
        .expect("latitude circles away from the poles have well-defined holonomy");
    2.0 * PI * torus.p_phi(theta_slice) + h
}

/// Wrap an angle to (−π, π].
fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Residuals of the two quantization conditions, each wrapped to (−π, π].
/// A torus is quantized when both vanish.
pub fn quantize_residual(torus: &InvariantTorus) -> (f64, f64) {
    let n = torus.n_inv as f64;
    let r_theta =
        wrap_angle(n * (torus.j_theta + torus.h_theta) - PI * f64::from(torus.maslov.0) / 2.0);
    let r_phi =
        wrap_angle(n * (torus.j_phi + torus.h_phi) - PI * f64::from(torus.maslov.1) / 2.0);
    (r_theta, r_phi)
}

/// A cluster of quantized tori sharing one scaled energy.
#[derive(Clone, Debug, Serialize)]
pub struct QuantizedLevel {
    /// Scaled energy Ê = N²E, directly comparable to quantum levels.
    pub energy: f64,
    /// Number of quantized tori found at this energy.
    pub multiplicity: usize,
    /// Conserved momenta P of the contributing tori, ascending.
    pub p_values: Vec<f64>,
}

/// Enumerate every quantized torus with scaled energy N²E ≤ `e_hat_max`,
/// grouped into levels.
///
/// The azimuthal condition restricts P to the lattice P = −ζ/2 + M/N, M ∈ ℤ;
/// for each M the meridian condition N·J_θ(E) = 2π(k+½) is solved by
/// bisection in E (J_θ is strictly increasing). The scan expands M outward
/// from zero and stops a direction once even its lowest level exceeds the
/// cutoff; the lowest level is monotone along each direction, so nothing is
/// missed.
pub fn enumerate_quantized_tori(
    n_inv: u32,
    charge: i64,
    e_hat_max: f64,
) -> Result<Vec<QuantizedLevel>, SemiclassicsError> {
    check_charge(n_inv, charge)?;
    assert!(
        e_hat_max.is_finite() && e_hat_max > 0.0,
        "energy cutoff must be positive, got {e_hat_max}"
    );
    let n = f64::from(n_inv);
    let zeta = charge.signum() as f64;
    let mut hits: Vec<(f64, f64)> = Vec::new();
    for direction in [1i64, -1] {
        let mut m = if direction == 1 { 0i64 } else { -1 };
        loop {
            let p = -zeta / 2.0 + m as f64 / n;
            let column = solve_column(n_inv, charge, p, e_hat_max)?;
            if column.is_empty() {
                break;
            }
            hits.extend(column);
            m += direction;
            assert!(m.abs() < 100_000, "azimuthal scan failed to terminate");
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut levels: Vec<QuantizedLevel> = Vec::new();
    let mut members: Vec<(f64, f64)> = Vec::new();
    let flush = |members: &mut Vec<(f64, f64)>, levels: &mut Vec<QuantizedLevel>| {
        if members.is_empty() {
            return;
        }
        let mean = members.iter().map(|(e, _)| e).sum::<f64>() / members.len() as f64;
        let mut p_values: Vec<f64> = members.iter().map(|&(_, p)| p).collect();
        p_values.sort_by(f64::total_cmp);
        levels.push(QuantizedLevel {
            energy: mean,
            multiplicity: p_values.len(),
            p_values,
        });
        members.clear();
    };
    for (e_hat, p) in hits {
        if let Some(&(last, _)) = members.last() {
            if e_hat - last > 1e-9 * (1.0 + e_hat.abs()) {
                flush(&mut members, &mut levels);
            }
        }
        members.push((e_hat, p));
    }
    flush(&mut members, &mut levels);
    Ok(levels)
}

/// All meridian-quantized energies in one azimuthal column (fixed P), as
/// (N²E, P) pairs with N²E ≤ cutoff.
fn solve_column(
    n_inv: u32,
    charge: i64,
    p: f64,
    e_hat_max: f64,
) -> Result<Vec<(f64, f64)>, SemiclassicsError> {
    let n = f64::from(n_inv);
    let beta = charge.signum() as f64 * 0.5;
    let e_floor = (p * p - beta * beta).max(0.0);
    let j_at = |e: f64| torus_actions(e, p, n_inv, charge).map(|t| t.j_theta);
    let mut found = Vec::new();
    for k in 0..10_000u32 {
        let target = 2.0 * PI * (f64::from(k) + 0.5) / n;
        // Grow a ceiling: J_θ ~ 2π√E at large E, so doubling always lands.
        let mut hi = e_floor + 1.0;
        let mut guard = 0;
        while j_at(hi)? < target {
            hi = e_floor + 2.0 * (hi - e_floor);
            guard += 1;
            if guard > 200 {
                return Err(SemiclassicsError::RootNotConverged {
                    lo: e_floor,
                    hi,
                    target,
                });
            }
        }
        // Bisect down to the root. The floor itself carries zero action, so
        // it is a valid lower bracket without being evaluated; energies in
        // the sliver just above it, where no torus fits yet, count as
        // below-target.
        let mut lo = e_floor;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= ROOT_TOL * (1.0 + hi) {
                break;
            }
            match j_at(mid) {
                Ok(j) if j < target => lo = mid,
                Ok(_) => hi = mid,
                Err(SemiclassicsError::EmptyTorus { .. }) => lo = mid,
                Err(other) => return Err(other),
            }
        }
        let e_root = 0.5 * (lo + hi);
        let e_hat = n * n * e_root;
        if e_hat > e_hat_max + 1e-9 {
            break;
        }
        match torus_actions(e_root, p, n_inv, charge).map(|t| quantize_residual(&t)) {
            Ok((r_theta, r_phi)) if r_theta.abs() < 1e-6 && r_phi.abs() < 1e-6 => {
                found.push((e_hat, p));
            }
            Ok((r_theta, r_phi)) => {
                log::warn!(
                    "dropping torus at E={e_root}, P={p}: residuals ({r_theta:.2e}, {r_phi:.2e})"
                );
            }
            Err(err) => {
                log::warn!("dropping torus at E={e_root}, P={p}: {err}");
            }
        }
    }
    Ok(found)
}

/// Closed-form counterpart of the torus enumeration: levels
/// (j+½)(j+½+N) with multiplicity 2j+1+N for j = 0..=j_max. These sit a
/// constant ¼ above the closed-form quantum levels.
pub fn almost_spectrum(n_abs: u32, j_max: u32) -> Vec<SpectrumLevel> {
    (0..=j_max)
        .map(|j| {
            let jf = f64::from(j);
            let nf = f64::from(n_abs);
            SpectrumLevel {
                value: (jf + 0.5) * (jf + 0.5 + nf),
                multiplicity: (2 * j + 1 + n_abs) as usize,
                source: LevelSource::Semiclassical,
                sectors: Vec::new(),
            }
        })
        .collect()
}
