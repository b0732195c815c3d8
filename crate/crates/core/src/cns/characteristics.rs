//! Particle paths `dX/dt = u(t, X)` through a stored trajectory.
//!
//! Velocities are interpolated multilinearly in space and linearly in time
//! between snapshots; positions wrap periodically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::Trajectory;
use crate::error::{LabError, Result};
use crate::spectral::{divergence, forward_transform, Grid, RealField};

type Field = RealField<f64>;

/// Multilinear interpolation of component `c` at `x`, periodic.
pub fn interpolate(f: &Field, c: usize, x: &[f64; 3]) -> f64 {
    let grid = f.grid();
    let (dim, n, h) = (grid.dim(), grid.n(), grid.spacing());
    let vals = f.component(c);
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..dim {
        let s = x[a] / h;
        let fl = s.floor();
        frac[a] = s - fl;
        base[a] = (fl as i64).rem_euclid(n as i64) as usize;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut idx = [0usize; 3];
        let mut w = 1.0;
        for a in 0..dim {
            let bit = (corner >> a) & 1;
            idx[a] = (base[a] + bit) % n;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        acc += w * vals[grid.flat_index(idx)];
    }
    acc
}

/// One traced path sampled at the snapshot times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPath {
    pub start: [f64; 3],
    pub times: Vec<f64>,
    /// Positions wrapped into the box.
    pub points: Vec<[f64; 3]>,
    /// `ρ(t, X(t))`
    pub rho: Vec<f64>,
    /// `∫₀ᵗ div u(τ, X(τ)) dτ`
    pub log_jacobian: Vec<f64>,
}

impl CharacteristicPath {
    /// Largest `|ρ(t,X)·exp(∫div u) / ρ₀(x) − 1|` along the path.
    pub fn continuity_defect(&self) -> f64 {
        let r0 = self.rho[0];
        self.rho
            .iter()
            .zip(&self.log_jacobian)
            .map(|(r, l)| (r * l.exp() / r0 - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn wrap(grid: &Grid, x: [f64; 3]) -> [f64; 3] {
    let period = std::f64::consts::TAU * grid.box_scale();
    let mut out = x;
    for a in 0..grid.dim() {
        out[a] = x[a].rem_euclid(period);
    }
    out
}

/// Traces each seed point with `substeps` RK4 steps per snapshot interval.
pub fn trace_characteristics(traj: &Trajectory, seeds: &[[f64; 3]], substeps: usize) -> Result<Vec<CharacteristicPath>> {
    if substeps == 0 {
        return Err(LabError::InvalidParameter("substeps must be positive".into()));
    }
    let grid = traj.grid;
    let dim = grid.dim();
    let divs = traj
        .snapshots
        .par_iter()
        .map(|s| Ok(divergence(&forward_transform(&s.u)?)?.to_real()))
        .collect::<Result<Vec<Field>>>()?;
    // velocity and divergence at (interval i, fraction θ, x)
    let eval = |i: usize, theta: f64, x: &[f64; 3]| -> ([f64; 3], f64) {
        let j = (i + 1).min(traj.len() - 1);
        let mut v = [0.0; 3];
        for (c, slot) in v.iter_mut().enumerate().take(dim) {
            let a = interpolate(&traj.snapshots[i].u, c, x);
            let b = interpolate(&traj.snapshots[j].u, c, x);
            *slot = (1.0 - theta) * a + theta * b;
        }
        let d = (1.0 - theta) * interpolate(&divs[i], 0, x) + theta * interpolate(&divs[j], 0, x);
        (v, d)
    };
    let times = traj.times();
    Ok(seeds
        .par_iter()
        .map(|&seed| {
            let mut x = wrap(&grid, seed);
            let mut logj = 0.0;
            let mut path = CharacteristicPath {
                start: seed,
                times: times.clone(),
                points: vec![x],
                rho: vec![interpolate(&traj.snapshots[0].rho, 0, &x)],
                log_jacobian: vec![0.0],
            };
            for i in 0..traj.len().saturating_sub(1) {
                let span = times[i + 1] - times[i];
                let h = span / substeps as f64;
                for m in 0..substeps {
                    let th = m as f64 / substeps as f64;
                    let dth = 1.0 / substeps as f64;
                    let shift = |x: &[f64; 3], v: &[f64; 3], s: f64| {
                        let mut y = *x;
                        for a in 0..dim {
                            y[a] += s * v[a];
                        }
                        y
                    };
                    let (v1, d1) = eval(i, th, &x);
                    let (v2, d2) = eval(i, th + 0.5 * dth, &shift(&x, &v1, 0.5 * h));
                    let (v3, d3) = eval(i, th + 0.5 * dth, &shift(&x, &v2, 0.5 * h));
                    let (v4, d4) = eval(i, th + dth, &shift(&x, &v3, h));
                    for a in 0..dim {
                        x[a] += h / 6.0 * (v1[a] + 2.0 * v2[a] + 2.0 * v3[a] + v4[a]);
                    }
                    x = wrap(&grid, x);
                    logj += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
                }
                path.points.push(x);
                path.rho.push(interpolate(&traj.snapshots[i + 1].rho, 0, &x));
                path.log_jacobian.push(logj);
            }
            path
        })
        .collect())
}
