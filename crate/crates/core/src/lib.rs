//! A numerical laboratory for a magnetic charge on the sphere.
//!
//! The library studies one configuration from several independent angles and
//! cross-checks them against each other:
//!
//! * [`geometry`] — gauge fields on the two-chart sphere: flux integrality,
//!   transition functions, holonomy, and gauge transformations.
//! * [`spectral`] — the charge sectors of the associated operator, reduced to
//!   one-dimensional problems and solved by bisection on Sturm counts;
//!   closed-form spectra for comparison.
//! * [`semiclassics`] — loop actions of the twisted classical flow, torus
//!   quantization with Maslov and holonomy corrections, and one-dimensional
//!   leading-order levels.
//! * [`dynamics`] — the three-dimensional orbit problem, its conserved
//!   vector, and the development of orbit cones onto the plane.
//! * [`quadrature`] — Gauss–Legendre rules, including a variant tuned for
//!   square-root endpoint behavior.
//! * [`serialize`] — deterministic CSV/JSON renderings of the results.
//!
//! Numerical routes are deliberately redundant: discretized operators are
//! compared to closed forms, quadratures to analytic integrals, and
//! integrations to conservation laws, so a regression in any one path is
//! caught by its partner.

pub mod dynamics;
pub mod geometry;
pub mod quadrature;
pub mod semiclassics;
pub mod serialize;
pub mod spectral;
