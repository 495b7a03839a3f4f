//! Text artifacts: CSV and JSON renderings of spectra, trajectories, and
//! developed orbits.
//!
//! Floats are written with the shortest representation that round-trips to
//! the same bits, so re-running a computation reproduces its files
//! byte for byte and a parser recovers the exact values.

use std::fmt::Write;

use crate::dynamics::{Trajectory, UnrolledCone};
use crate::spectral::SpectrumLevel;

/// Render levels as CSV with the columns `value,multiplicity,source,sectors`;
/// contributing sectors are `;`-joined inside the last column.
pub fn levels_to_csv(levels: &[SpectrumLevel]) -> String {
    let mut out = String::from("value,multiplicity,source,sectors\n");
    for level in levels {
        let sectors = level
            .sectors
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{}",
            level.value, level.multiplicity, level.source, sectors
        )
        .expect("writing to a string cannot fail");
    }
    out
}

/// Render levels as a JSON array (pretty-printed, stable field order).
pub fn levels_to_json(levels: &[SpectrumLevel]) -> String {
    serde_json::to_string_pretty(levels).expect("levels serialize without fallible types")
}

/// Render a trajectory as CSV with the columns `t,x,y,z,vx,vy,vz`.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,y,z,vx,vy,vz\n");
    for s in &traj.states {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.t,
            s.position[0],
            s.position[1],
            s.position[2],
            s.velocity[0],
            s.velocity[1],
            s.velocity[2]
        )
        .expect("writing to a string cannot fail");
    }
    out
}

/// Render a developed orbit as CSV with the columns `s,rho_x,rho_y`.
pub fn unrolled_to_csv(cone: &UnrolledCone) -> String {
    let mut out = String::from("s,rho_x,rho_y\n");
    for p in &cone.points {
        writeln!(out, "{},{},{}", p.s, p.rho_x, p.rho_y)
            .expect("writing to a string cannot fail");
    }
    out
}
