//! Line bundles over the unit two-sphere in the two-chart monopole gauge.
//!
//! A field configuration is held as its curvature component F_θφ(θ) together
//! with the gauge potentials of the north chart (regular away from θ = π) and
//! the south chart (regular away from θ = 0). For the charge-n monopole these
//! are
//!
//! ```text
//!   F_θφ = (n/2)·sin θ,
//!   A_φ^N = (n/2)(1 − cos θ),      A_φ^S = −(n/2)(1 + cos θ),
//! ```
//!
//! so the chart difference A_φ^N − A_φ^S = n is the winding of the clutching
//! phase e^{−inφ}. All stored functions are axisymmetric: gauge
//! transformations are restricted to functions of θ, which is the only shape
//! the rest of the crate (sector reduction, holonomy of latitude circles)
//! consumes.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::quadrature;

/// Shared axisymmetric scalar function of the colatitude θ.
pub type ThetaFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Residual above which a total flux is rejected as non-integral.
pub const FLUX_INTEGRALITY_TOL: f64 = 1e-6;

/// Distance (in θ) from a chart's excluded pole inside which a curve is
/// rejected: the potential of that chart is singular there.
pub const POLE_CLEARANCE: f64 = 1e-6;

/// Required sphere-distance agreement between the first and last point of a
/// closed curve.
pub const CURVE_CLOSURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Coordinates valid away from θ = π.
    North,
    /// Coordinates valid away from θ = 0.
    South,
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error(
        "total flux / 2π = {flux_over_2pi} is not integral (residual {residual:.3e} ≥ {FLUX_INTEGRALITY_TOL:.0e})"
    )]
    NonIntegralFlux { flux_over_2pi: f64, residual: f64 },
    #[error("curve passes within {POLE_CLEARANCE:.0e} of the {chart:?} chart's excluded pole (θ = {theta})")]
    CurveCrossesPole { chart: Chart, theta: f64 },
    #[error("curve is not closed: endpoint gap {gap:.3e} exceeds {CURVE_CLOSURE_TOL:.0e}")]
    CurveNotClosed { gap: f64 },
    #[error("curve point has colatitude {theta}, outside [0, π]")]
    PointOffSphere { theta: f64 },
    #[error("need at least {min} quadrature points, got {got}")]
    TooFewQuadraturePoints { got: usize, min: usize },
}

/// An axisymmetric U(1) gauge field on the sphere, stored per chart.
///
/// `a_theta` is the θ-component of the potential (identical in both charts —
/// gauge functions are globally defined), zero for the bare monopole and
/// nonzero only after [`gauge_transform`]. `phase_potential` is the
/// antiderivative Φ of `a_theta`; carrying it exactly (rather than
/// reintegrating) lets the spectral reduction build link phases
/// exp(−iΔΦ) with no quadrature error, which is what keeps gauge invariance
/// of the discrete spectrum at rounding level.
#[derive(Clone)]
pub struct GaugeField {
    curvature: ThetaFn,
    a_phi_north: ThetaFn,
    a_phi_south: ThetaFn,
    a_theta: ThetaFn,
    phase_potential: ThetaFn,
}

impl GaugeField {
    /// General axisymmetric constructor with vanishing θ-component.
    pub fn axisymmetric(curvature: ThetaFn, a_phi_north: ThetaFn, a_phi_south: ThetaFn) -> Self {
        GaugeField {
            curvature,
            a_phi_north,
            a_phi_south,
            a_theta: Arc::new(|_| 0.0),
            phase_potential: Arc::new(|_| 0.0),
        }
    }

    /// Curvature component F_θφ at colatitude θ.
    pub fn curvature(&self, theta: f64) -> f64 {
        (self.curvature)(theta)
    }

    /// Gauge potential component A_φ in the given chart.
    pub fn a_phi(&self, chart: Chart, theta: f64) -> f64 {
        match chart {
            Chart::North => (self.a_phi_north)(theta),
            Chart::South => (self.a_phi_south)(theta),
        }
    }

    /// Gauge potential component A_θ (chart independent).
    pub fn a_theta(&self, theta: f64) -> f64 {
        (self.a_theta)(theta)
    }

    /// Antiderivative Φ(θ) of A_θ, used for exact link phases.
    pub fn phase_potential(&self, theta: f64) -> f64 {
        (self.phase_potential)(theta)
    }
}

/// The charge-n monopole field in the standard two-chart gauge.
pub fn monopole_field(n: i64) -> GaugeField {
    let half = n as f64 / 2.0;
    GaugeField::axisymmetric(
        Arc::new(move |theta| half * theta.sin()),
        Arc::new(move |theta| half * (1.0 - theta.cos())),
        Arc::new(move |theta| -half * (1.0 + theta.cos())),
    )
}

/// Gauge-shift a field by the axisymmetric gauge function f: Ã = A − df.
///
/// Only A_θ changes (f has no φ dependence); the curvature and both A_φ
/// components are untouched. The caller supplies df/dθ exactly so no
/// numerical differentiation enters the 1e−10 gauge-invariance budget.
pub fn gauge_transform(field: &GaugeField, f: ThetaFn, df_dtheta: ThetaFn) -> GaugeField {
    let old_a_theta = field.a_theta.clone();
    let old_potential = field.phase_potential.clone();
    let f2 = f.clone();
    GaugeField {
        curvature: field.curvature.clone(),
        a_phi_north: field.a_phi_north.clone(),
        a_phi_south: field.a_phi_south.clone(),
        a_theta: Arc::new(move |theta| old_a_theta(theta) - df_dtheta(theta)),
        phase_potential: Arc::new(move |theta| old_potential(theta) - f2(theta)),
    }
}

/// Total flux through the sphere divided by 2π, and its rounding to the Chern
/// number. The θ-integral uses composite Gauss–Legendre with
/// `quadrature_points` nodes, the φ-integral a uniform trapezoid rule with the
/// same count (exact here for axisymmetric F, but kept as a genuine 2D
/// quadrature so non-axisymmetric extensions keep the same contract).
///
/// Returns `(n, residual)` with `residual = |flux/2π − n|`; fails with
/// [`GeometryError::NonIntegralFlux`] when the residual reaches
/// [`FLUX_INTEGRALITY_TOL`].
pub fn chern_number(
    field: &GaugeField,
    quadrature_points: usize,
) -> Result<(i64, f64), GeometryError> {
    if quadrature_points < 8 {
        return Err(GeometryError::TooFewQuadraturePoints {
            got: quadrature_points,
            min: 8,
        });
    }
    let theta_integral = quadrature::integrate(|t| field.curvature(t), 0.0, PI, quadrature_points);
    // Uniform trapezoid in φ over one period; the integrand is φ-independent,
    // so each node contributes the same value.
    let k = quadrature_points;
    let dphi = 2.0 * PI / k as f64;
    let mut flux = 0.0;
    for _ in 0..k {
        flux += theta_integral * dphi;
    }
    let flux_over_2pi = flux / (2.0 * PI);
    let n = flux_over_2pi.round();
    let residual = (flux_over_2pi - n).abs();
    if residual >= FLUX_INTEGRALITY_TOL {
        return Err(GeometryError::NonIntegralFlux {
            flux_over_2pi,
            residual,
        });
    }
    Ok((n as i64, residual))
}

/// Clutching phase e^{−inφ} relating north- and south-chart section values.
pub fn transition_phase(n: i64, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, -(n as f64) * phi)
}

/// A section of the charge-n bundle presented in one chart.
#[derive(Clone)]
pub struct SectionChartRep {
    pub chart: Chart,
    values: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
}

impl SectionChartRep {
    pub fn new(
        chart: Chart,
        values: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
    ) -> Self {
        SectionChartRep { chart, values }
    }

    pub fn value(&self, theta: f64, phi: f64) -> Complex64 {
        (self.values)(theta, phi)
    }
}

/// Re-express a section in the opposite chart by multiplying with the
/// clutching phase: south values = e^{−inφ} · north values.
pub fn transform_section(section: &SectionChartRep, n: i64) -> SectionChartRep {
    let inner = section.values.clone();
    match section.chart {
        Chart::North => SectionChartRep {
            chart: Chart::South,
            values: Arc::new(move |theta, phi| transition_phase(n, phi) * inner(theta, phi)),
        },
        Chart::South => SectionChartRep {
            chart: Chart::North,
            values: Arc::new(move |theta, phi| transition_phase(-n, phi) * inner(theta, phi)),
        },
    }
}

/// A closed curve on the sphere sampled in one chart's coordinates.
///
/// The azimuth is stored unwrapped (a full latitude circle runs φ: 0 → 2π), so
/// line integrals see the true winding; closure is checked on the embedded
/// points, not the raw coordinates.
#[derive(Clone, Debug)]
pub struct SphereCurve {
    pub chart: Chart,
    pub points: Vec<(f64, f64)>,
}

impl SphereCurve {
    /// The latitude circle at colatitude θ, sampled with `segments` uniform
    /// steps in φ (φ runs 0 → 2π inclusive, `segments + 1` points).
    pub fn latitude_circle(chart: Chart, theta: f64, segments: usize) -> SphereCurve {
        let points = (0..=segments)
            .map(|j| (theta, 2.0 * PI * j as f64 / segments as f64))
            .collect();
        SphereCurve { chart, points }
    }
}

fn embed(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Holonomy ∮ (A_θ dθ + A_φ dφ) of the field along a closed curve, evaluated
/// with the trapezoid rule in the curve's chart and reduced to [0, 2π).
pub fn holonomy(field: &GaugeField, curve: &SphereCurve) -> Result<f64, GeometryError> {
    let pts = &curve.points;
    assert!(pts.len() >= 2, "curve needs at least two points");
    for &(theta, _) in pts {
        if !(0.0..=PI).contains(&theta) {
            return Err(GeometryError::PointOffSphere { theta });
        }
        let pole_distance = match curve.chart {
            Chart::North => PI - theta,
            Chart::South => theta,
        };
        if pole_distance < POLE_CLEARANCE {
            return Err(GeometryError::CurveCrossesPole {
                chart: curve.chart,
                theta,
            });
        }
    }
    let first = embed(pts[0].0, pts[0].1);
    let last = embed(pts[pts.len() - 1].0, pts[pts.len() - 1].1);
    let gap = ((first[0] - last[0]).powi(2)
        + (first[1] - last[1]).powi(2)
        + (first[2] - last[2]).powi(2))
    .sqrt();
    if gap > CURVE_CLOSURE_TOL {
        return Err(GeometryError::CurveNotClosed { gap });
    }
    let mut integral = 0.0;
    for w in pts.windows(2) {
        let (t0, p0) = w[0];
        let (t1, p1) = w[1];
        let a_phi0 = field.a_phi(curve.chart, t0);
        let a_phi1 = field.a_phi(curve.chart, t1);
        let a_th0 = field.a_theta(t0);
        let a_th1 = field.a_theta(t1);
        integral += 0.5 * (a_phi0 + a_phi1) * (p1 - p0) + 0.5 * (a_th0 + a_th1) * (t1 - t0);
    }
    Ok(integral.rem_euclid(2.0 * PI))
}

/// Quantization residual of a charge-pole pair: 2eg rounded to the nearest
/// integer together with the distance from it.
pub fn dirac_condition(e: f64, g: f64) -> (i64, f64) {
    let product = 2.0 * e * g;
    let n = product.round();
    (n as i64, (product - n).abs())
}

/// Pole-mass scale in electron masses for fine-structure constant α: 1/(2α)².
pub fn monopole_mass_estimate(alpha: f64) -> f64 {
    1.0 / (2.0 * alpha).powi(2)
}
