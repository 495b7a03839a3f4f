//! Classical scattering off the field center: integration of
//!
//! ```text
//!   r̈ = (λ/r³) (r × ṙ),
//! ```
//!
//! whose force is always normal to the velocity, so the speed is conserved,
//! and which admits the conserved vector v = r × ṙ + λ r̂. Every orbit lies
//! on the cone ⟨v, r⟩ = λ|r| around v and, developed onto a plane, is a
//! straight line; both facts are used as stringent integrator checks.

use thiserror::Error;

/// Positions with norm at or below this are treated as the singular center.
pub const ORIGIN_GUARD: f64 = 1e-12;

/// Orbits whose cone residual exceeds this are refused by the development.
const CONE_RESIDUAL_LIMIT: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

/// A fixed-step integration record. States are spaced `step` apart starting
/// at t = 0.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub lambda: f64,
    pub states: Vec<TrajectoryState>,
}

impl Trajectory {
    pub fn initial(&self) -> &TrajectoryState {
        &self.states[0]
    }

    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("a trajectory holds at least one state")
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("trajectory reached the singular center at t = {at_time}")]
    SingularOrigin {
        at_time: f64,
        /// States integrated before the encounter, when any exist.
        partial: Option<Box<Trajectory>>,
    },
    #[error("invalid time grid (step {step}, duration {duration}): {detail}")]
    BadTimeGrid {
        step: f64,
        duration: f64,
        detail: String,
    },
    #[error(
        "the orbit does not trace a proper cone (axis length {axis_norm}, coupling {lambda})"
    )]
    DegenerateCone { axis_norm: f64, lambda: f64 },
    #[error("states deviate from the conserved cone (residual {residual:.3e})")]
    NotConical { residual: f64 },
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(a: [f64; 3], b: [f64; 3], f: f64) -> [f64; 3] {
    [a[0] + f * b[0], a[1] + f * b[1], a[2] + f * b[2]]
}

/// Right-hand side (ṙ, r̈) of the equation of motion. The caller must keep
/// the position away from the singular center.
pub fn poincare_rhs(
    position: [f64; 3],
    velocity: [f64; 3],
    lambda: f64,
) -> ([f64; 3], [f64; 3]) {
    let r = norm(position);
    let f = lambda / (r * r * r);
    let l = cross(position, velocity);
    (velocity, [f * l[0], f * l[1], f * l[2]])
}

/// The conserved vector v = r × ṙ + λ r̂ of a state.
pub fn conserved_vector(position: [f64; 3], velocity: [f64; 3], lambda: f64) -> [f64; 3] {
    let l = cross(position, velocity);
    let r = norm(position);
    axpy(l, position, lambda / r)
}

/// Integrate the motion with the classical fourth-order scheme on a uniform
/// grid of the given step, covering `duration` (the step count is rounded up,
/// so the final time can exceed `duration` by less than one step).
pub fn integrate(
    r0: [f64; 3],
    v0: [f64; 3],
    lambda: f64,
    step: f64,
    duration: f64,
) -> Result<Trajectory, DynamicsError> {
    let finite = r0.iter().chain(v0.iter()).all(|x| x.is_finite())
        && lambda.is_finite()
        && step.is_finite()
        && duration.is_finite();
    if !finite || step <= 0.0 || duration <= 0.0 {
        return Err(DynamicsError::BadTimeGrid {
            step,
            duration,
            detail: "step and duration must be finite and positive".into(),
        });
    }
    let raw = duration / step;
    let n_steps = if (raw - raw.round()).abs() < 1e-9 {
        raw.round()
    } else {
        raw.ceil()
    };
    if n_steps > 2e7 {
        return Err(DynamicsError::BadTimeGrid {
            step,
            duration,
            detail: format!("{n_steps:.0} steps exceed the supported range"),
        });
    }
    let n_steps = n_steps as usize;

    if norm(r0) <= ORIGIN_GUARD {
        return Err(DynamicsError::SingularOrigin {
            at_time: 0.0,
            partial: None,
        });
    }
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(TrajectoryState {
        t: 0.0,
        position: r0,
        velocity: v0,
    });

    for k in 0..n_steps {
        let t = k as f64 * step;
        let s = states[k];
        // Guarded stage evaluation: every position the scheme touches is
        // checked before the force term divides by r³.
        let stage = |p: [f64; 3], v: [f64; 3], offset: f64| -> Result<([f64; 3], [f64; 3]), DynamicsError> {
            if norm(p) <= ORIGIN_GUARD {
                return Err(DynamicsError::SingularOrigin {
                    at_time: t + offset * step,
                    partial: Some(Box::new(Trajectory {
                        lambda,
                        states: states.clone(),
                    })),
                });
            }
            Ok(poincare_rhs(p, v, lambda))
        };
        let (k1r, k1v) = stage(s.position, s.velocity, 0.0)?;
        let (k2r, k2v) = stage(
            axpy(s.position, k1r, step / 2.0),
            axpy(s.velocity, k1v, step / 2.0),
            0.5,
        )?;
        let (k3r, k3v) = stage(
            axpy(s.position, k2r, step / 2.0),
            axpy(s.velocity, k2v, step / 2.0),
            0.5,
        )?;
        let (k4r, k4v) = stage(axpy(s.position, k3r, step), axpy(s.velocity, k3v, step), 1.0)?;
        let w = step / 6.0;
        let mut position = s.position;
        let mut velocity = s.velocity;
        for i in 0..3 {
            position[i] += w * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i]);
            velocity[i] += w * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        states.push(TrajectoryState {
            t: (k + 1) as f64 * step,
            position,
            velocity,
        });
    }
    Ok(Trajectory { lambda, states })
}

/// Largest drift of the squared speed relative to the initial state.
pub fn max_speed_squared_drift(traj: &Trajectory) -> f64 {
    let v0 = dot(traj.initial().velocity, traj.initial().velocity);
    traj.states
        .iter()
        .map(|s| (dot(s.velocity, s.velocity) - v0).abs())
        .fold(0.0, f64::max)
}

/// Largest Euclidean drift of the conserved vector relative to its initial
/// value.
pub fn max_conserved_drift(traj: &Trajectory) -> f64 {
    let v0 = conserved_vector(traj.initial().position, traj.initial().velocity, traj.lambda);
    traj.states
        .iter()
        .map(|s| {
            let v = conserved_vector(s.position, s.velocity, traj.lambda);
            norm([v[0] - v0[0], v[1] - v0[1], v[2] - v0[2]])
        })
        .fold(0.0, f64::max)
}

/// Largest violation of the cone condition ⟨v₀, r⟩ = λ|r| along the states,
/// scaled by 1 + |r|.
pub fn cone_residual(traj: &Trajectory) -> f64 {
    let v0 = conserved_vector(traj.initial().position, traj.initial().velocity, traj.lambda);
    traj.states
        .iter()
        .map(|s| {
            let r = norm(s.position);
            (dot(v0, s.position) - traj.lambda * r).abs() / (1.0 + r)
        })
        .fold(0.0, f64::max)
}

/// One sample of the developed (flattened) orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DevelopedPoint {
    /// Cumulative arc length along the developed curve.
    pub s: f64,
    pub rho_x: f64,
    pub rho_y: f64,
}

/// The orbit cone cut open and laid flat. Distances from the apex are |r|;
/// azimuths shrink by the opening factor sin α.
#[derive(Clone, Debug)]
pub struct UnrolledCone {
    /// Angle α between the conserved vector and any orbit ray, cos α = λ/|v₀|.
    pub half_angle: f64,
    /// sin α: the ratio of developed to ambient azimuth.
    pub opening_factor: f64,
    pub points: Vec<DevelopedPoint>,
}

/// Develop the orbit cone onto the plane. The image of the orbit is a
/// straight line up to integration error, which `max_turn_angle` measures.
pub fn unroll_cone(traj: &Trajectory) -> Result<UnrolledCone, DynamicsError> {
    assert!(
        traj.states.len() >= 2,
        "cone development needs at least two states"
    );
    let s0 = traj.initial();
    let axis = conserved_vector(s0.position, s0.velocity, traj.lambda);
    let axis_norm = norm(axis);
    if traj.lambda == 0.0 || axis_norm <= traj.lambda.abs() + 1e-12 {
        // λ = 0 flattens the cone into a plane; |v₀| = |λ| collapses it onto
        // a ray. Neither leaves a surface to unroll.
        return Err(DynamicsError::DegenerateCone {
            axis_norm,
            lambda: traj.lambda,
        });
    }
    let residual = cone_residual(traj);
    if residual >= CONE_RESIDUAL_LIMIT {
        return Err(DynamicsError::NotConical { residual });
    }

    let cos_alpha = traj.lambda / axis_norm;
    let half_angle = cos_alpha.acos();
    let opening_factor = half_angle.sin();
    let axis_hat = {
        let n = axis_norm;
        [axis[0] / n, axis[1] / n, axis[2] / n]
    };
    // In-plane frame: e₁ along the initial position's component normal to the
    // axis (nonzero for any proper cone), e₂ completing it.
    let proj = dot(s0.position, axis_hat);
    let mut e1 = axpy(s0.position, axis_hat, -proj);
    let n1 = norm(e1);
    for x in &mut e1 {
        *x /= n1;
    }
    let e2 = cross(axis_hat, e1);

    let mut points = Vec::with_capacity(traj.states.len());
    let mut prev_phi = 0.0;
    let mut arc = 0.0;
    for state in &traj.states {
        let x = dot(state.position, e1);
        let y = dot(state.position, e2);
        let raw = y.atan2(x);
        // Continuous azimuth: pick the branch nearest the previous sample.
        let phi = raw + 2.0 * std::f64::consts::PI
            * ((prev_phi - raw) / (2.0 * std::f64::consts::PI)).round();
        prev_phi = phi;
        let rho = norm(state.position);
        let psi = opening_factor * phi;
        let point = DevelopedPoint {
            s: 0.0,
            rho_x: rho * psi.cos(),
            rho_y: rho * psi.sin(),
        };
        if let Some(last) = points.last() {
            let last: &DevelopedPoint = last;
            arc += ((point.rho_x - last.rho_x).powi(2) + (point.rho_y - last.rho_y).powi(2))
                .sqrt();
        }
        points.push(DevelopedPoint { s: arc, ..point });
    }
    Ok(UnrolledCone {
        half_angle,
        opening_factor,
        points,
    })
}

/// Largest turning angle between consecutive segments of the developed
/// curve — a discrete curvature measure that vanishes for a straight image.
pub fn max_turn_angle(cone: &UnrolledCone) -> f64 {
    let mut worst = 0.0f64;
    for w in cone.points.windows(3) {
        let u = (w[1].rho_x - w[0].rho_x, w[1].rho_y - w[0].rho_y);
        let v = (w[2].rho_x - w[1].rho_x, w[2].rho_y - w[1].rho_y);
        let cross = u.0 * v.1 - u.1 * v.0;
        let dot = u.0 * v.0 + u.1 * v.1;
        if dot == 0.0 && cross == 0.0 {
            continue;
        }
        worst = worst.max(cross.atan2(dot).abs());
    }
    worst
}

/// Total arc length of the developed curve. The development is isometric, so
/// this equals the ambient path length ∫|ṙ| dt up to discretization.
pub fn planar_arc_length(cone: &UnrolledCone) -> f64 {
    cone.points.last().map_or(0.0, |p| p.s)
}

/// Least-squares fit of |r(t)|² to C t² + 2 B t + A.
///
/// Because the speed is conserved and the force is normal to the radius, the
/// squared distance is exactly quadratic in time with C = |ṙ₀|²,
/// B = ⟨r₀, ṙ₀⟩, A = |r₀|²; the returned rms residual measures integration
/// error. Returns (C, B, A, rms).
pub fn quadratic_fit_r2(traj: &Trajectory) -> (f64, f64, f64, f64) {
    let states = &traj.states;
    assert!(states.len() >= 3, "the fit needs at least three states");
    let t_end = traj.last().t;
    assert!(t_end > 0.0, "the fit needs a nonzero time span");

    // Normal equations on the scaled time x = t/T to keep the 3×3 system
    // well conditioned.
    let mut moments = [0.0f64; 5];
    let mut rhs = [0.0f64; 3];
    for s in states {
        let x = s.t / t_end;
        let y = dot(s.position, s.position);
        let powers = [1.0, x, x * x, x * x * x, x * x * x * x];
        for (m, p) in moments.iter_mut().zip(powers) {
            *m += p;
        }
        rhs[0] += y;
        rhs[1] += x * y;
        rhs[2] += x * x * y;
    }
    let mut a = [
        [moments[0], moments[1], moments[2], rhs[0]],
        [moments[1], moments[2], moments[3], rhs[1]],
        [moments[2], moments[3], moments[4], rhs[2]],
    ];
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut c = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = a[row][3];
        for k in row + 1..3 {
            acc -= a[row][k] * c[k];
        }
        c[row] = acc / a[row][row];
    }

    let mut ss = 0.0;
    for s in states {
        let x = s.t / t_end;
        let fit = c[0] + c[1] * x + c[2] * x * x;
        ss += (dot(s.position, s.position) - fit).powi(2);
    }
    let rms = (ss / states.len() as f64).sqrt();
    (
        c[2] / (t_end * t_end),
        c[1] / (2.0 * t_end),
        c[0],
        rms,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const R0: [f64; 3] = [1.0, 0.0, 0.0];
    const V0: [f64; 3] = [0.0, 1.0, 0.0];

    #[test]
    fn rhs_turns_the_velocity_without_stretching_it() {
        let (v, a) = poincare_rhs(R0, V0, 1.0);
        assert_eq!(v, V0);
        assert!((a[0]).abs() < 1e-15 && (a[1]).abs() < 1e-15);
        assert!((a[2] - 1.0).abs() < 1e-15, "acceleration {a:?}");
        // The force is normal to the velocity everywhere.
        let (_, a2) = poincare_rhs([0.3, -1.2, 0.4], [0.5, 0.2, -0.9], 2.5);
        assert!(dot(a2, [0.5, 0.2, -0.9]).abs() < 1e-15);
    }

    #[test]
    fn zero_coupling_is_a_straight_line() {
        let traj = integrate(R0, V0, 0.0, 1e-2, 2.0).unwrap();
        assert_eq!(traj.states.len(), 201);
        for s in &traj.states {
            assert!((s.position[0] - 1.0).abs() < 1e-12);
            assert!((s.position[1] - s.t).abs() < 1e-12);
            assert!(s.position[2].abs() < 1e-12);
            assert_eq!(s.velocity, V0);
        }
    }

    #[test]
    fn canonical_orbit_conserves_its_invariants() {
        let traj = integrate(R0, V0, 1.0, 1e-3, 10.0).unwrap();
        assert_eq!(traj.states.len(), 10_001);
        assert!(
            max_speed_squared_drift(&traj) < 1e-12,
            "speed drift {:.3e}",
            max_speed_squared_drift(&traj)
        );
        assert!(
            max_conserved_drift(&traj) < 1e-12,
            "vector drift {:.3e}",
            max_conserved_drift(&traj)
        );
        assert!(
            cone_residual(&traj) < 1e-10,
            "cone residual {:.3e}",
            cone_residual(&traj)
        );
    }

    #[test]
    fn squared_distance_is_quadratic_with_the_initial_data() {
        let traj = integrate(R0, V0, 1.0, 1e-3, 10.0).unwrap();
        let (c, b, a, rms) = quadratic_fit_r2(&traj);
        assert!((c - 1.0).abs() < 1e-9, "C = {c}");
        assert!(b.abs() < 1e-9, "B = {b}");
        assert!((a - 1.0).abs() < 1e-9, "A = {a}");
        assert!(rms < 1e-10, "rms = {rms:.3e}");
    }

    #[test]
    fn reversed_motion_retraces_the_orbit() {
        // t ↦ −t maps solutions at coupling λ to solutions at −λ.
        let forward = integrate(R0, V0, 1.5, 1e-3, 5.0).unwrap();
        let end = forward.last();
        let back = integrate(
            end.position,
            [-end.velocity[0], -end.velocity[1], -end.velocity[2]],
            -1.5,
            1e-3,
            5.0,
        )
        .unwrap();
        let home = back.last();
        for i in 0..3 {
            assert!(
                (home.position[i] - R0[i]).abs() < 1e-9,
                "position {:?}",
                home.position
            );
            assert!(
                (home.velocity[i] + V0[i]).abs() < 1e-9,
                "velocity {:?}",
                home.velocity
            );
        }
    }

    #[test]
    fn integration_error_shrinks_at_fourth_order() {
        // Halving the step divides the invariant drift by ≈ 2⁴; the window
        // brackets roundoff wobble on either side.
        let coarse = integrate(R0, V0, 2.0, 2e-2, 8.0).unwrap();
        let fine = integrate(R0, V0, 2.0, 1e-2, 8.0).unwrap();
        let ratio = max_conserved_drift(&coarse) / max_conserved_drift(&fine);
        assert!(
            (10.0..=24.0).contains(&ratio),
            "drift ratio {ratio:.2} outside the fourth-order window"
        );
    }

    #[test]
    fn development_of_the_canonical_orbit_is_straight() {
        let traj = integrate(R0, V0, 1.0, 1e-3, 10.0).unwrap();
        let cone = unroll_cone(&traj).unwrap();
        // |v₀|² = |r×ṙ|² + λ² = 2, so the half-angle is 45°.
        assert!((cone.half_angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!((cone.opening_factor - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(
            max_turn_angle(&cone) < 1e-8,
            "turn angle {:.3e}",
            max_turn_angle(&cone)
        );
        // Isometry: developed length = ∫|ṙ| dt (trapezoid), here |ṙ| ≡ 1.
        let mut ambient = 0.0;
        for w in traj.states.windows(2) {
            let va = norm(w[0].velocity);
            let vb = norm(w[1].velocity);
            ambient += 0.5 * (va + vb) * (w[1].t - w[0].t);
        }
        let planar = planar_arc_length(&cone);
        assert!(
            (planar - ambient).abs() < 1e-5,
            "developed {planar} vs ambient {ambient}"
        );
    }

    #[test]
    fn weak_coupling_approaches_the_planar_limit() {
        let traj = integrate(R0, V0, 1e-6, 1e-3, 5.0).unwrap();
        let cone = unroll_cone(&traj).unwrap();
        assert!((cone.half_angle - std::f64::consts::FRAC_PI_2).abs() < 2e-6);
        assert!(cone.opening_factor > 1.0 - 1e-10);
        assert!(max_turn_angle(&cone) < 1e-8);
        // The orbit stays next to the free straight line.
        for s in &traj.states {
            let free = [1.0, s.t, 0.0];
            let gap = norm([
                s.position[0] - free[0],
                s.position[1] - free[1],
                s.position[2] - free[2],
            ]);
            assert!(gap < 1e-4, "t={}: gap {gap:.3e}", s.t);
        }
    }

    #[test]
    fn radial_infall_hits_the_guarded_center() {
        // With velocity along the radius the force vanishes and the motion
        // runs straight into the center; the grid below lands on it exactly.
        let err = integrate([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 1.0, 0.25, 2.0).unwrap_err();
        match err {
            DynamicsError::SingularOrigin { at_time, partial } => {
                assert!((at_time - 1.0).abs() < 0.25 + 1e-12, "at_time {at_time}");
                let partial = partial.expect("states before the encounter were kept");
                assert!(!partial.states.is_empty());
                assert!(partial.states.len() <= 5);
            }
            other => panic!("expected the singular-center error, got {other:?}"),
        }
    }

    #[test]
    fn starting_inside_the_guard_is_rejected_up_front() {
        let err = integrate([0.0, 0.0, 0.0], V0, 1.0, 1e-2, 1.0).unwrap_err();
        assert!(matches!(
            err,
            DynamicsError::SingularOrigin {
                at_time: t,
                partial: None
            } if t == 0.0
        ));
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(matches!(
            integrate(R0, V0, 1.0, -1e-3, 1.0),
            Err(DynamicsError::BadTimeGrid { .. })
        ));
        assert!(matches!(
            integrate(R0, V0, 1.0, 1e-3, 0.0),
            Err(DynamicsError::BadTimeGrid { .. })
        ));
        assert!(matches!(
            integrate(R0, V0, 1.0, 1e-12, 1e9),
            Err(DynamicsError::BadTimeGrid { .. })
        ));
    }

    #[test]
    fn degenerate_cones_are_refused() {
        // Radial motion: r × ṙ = 0, the cone closes onto a ray.
        let traj = integrate([1.0, 0.0, 0.0], [0.3, 0.0, 0.0], 1.0, 1e-2, 1.0).unwrap();
        assert!(matches!(
            unroll_cone(&traj),
            Err(DynamicsError::DegenerateCone { .. })
        ));
        // λ = 0: the cone opens into a plane.
        let free = integrate(R0, V0, 0.0, 1e-2, 1.0).unwrap();
        assert!(matches!(
            unroll_cone(&free),
            Err(DynamicsError::DegenerateCone { .. })
        ));
    }

    #[test]
    fn tampered_states_fail_the_cone_check() {
        let mut traj = integrate(R0, V0, 1.0, 1e-2, 2.0).unwrap();
        let k = traj.states.len() / 2;
        traj.states[k].position[2] += 0.05;
        assert!(matches!(
            unroll_cone(&traj),
            Err(DynamicsError::NotConical { .. })
        ));
    }
}
