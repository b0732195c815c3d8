//! Linear transport `∂_t f + v·∇f = g` and its Besov growth bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::CFL_SAFETY;
use crate::besov::{lr_norm, BesovIndex};
use crate::error::{LabError, Result};
use crate::exponent;
use crate::littlewood_paley::build_partition;
use crate::spectral::{dealias, forward_transform, gradient, jacobian, RealField};

type Field = RealField<f64>;

/// A field prescribed as a function of time.
pub type TimeField<'a> = dyn Fn(f64) -> Result<Field> + Sync + 'a;

/// Samples of a transport run.
#[derive(Clone, Debug)]
pub struct TransportRun {
    pub times: Vec<f64>,
    pub f: Vec<Field>,
    pub v: Vec<Field>,
    pub g: Vec<Field>,
}

fn project(f: &Field) -> Result<Field> {
    Ok(dealias(&forward_transform(f)?).to_real())
}

/// `v·∇f` for scalar `f`, dealiased.
pub fn advection(v: &Field, f: &Field) -> Result<Field> {
    let grad = gradient(&forward_transform(f)?)?.to_real();
    project(&v.dot(&grad)?)
}

/// Uniform-in-time samples of the solution, `samples ≥ 2`; each interval is
/// split into RK4 steps no longer than `dt`.
pub fn solve_linear_transport(
    f0: &Field,
    v: &TimeField,
    g: &TimeField,
    t_end: f64,
    samples: usize,
    dt: f64,
) -> Result<TransportRun> {
    if samples < 2 || !(t_end > 0.0) || !(dt > 0.0) {
        return Err(LabError::InvalidParameter(format!("samples = {samples}, t_end = {t_end}, dt = {dt}")));
    }
    let dim = f0.grid().dim();
    let dx = f0.grid().spacing();
    let rate = |t: f64, f: &Field| -> Result<Field> {
        let vt = v(t)?;
        if vt.components() != dim {
            return Err(LabError::ComponentMismatch { expected: dim, found: vt.components() });
        }
        let vmax = vt.magnitude().max_abs();
        let bound = CFL_SAFETY * dx / vmax;
        if dt > bound {
            return Err(LabError::CflViolation { dt, bound });
        }
        g(t)?.sub(&advection(&vt, f)?)
    };
    let mut f = project(f0)?;
    let times: Vec<f64> = (0..samples).map(|i| t_end * i as f64 / (samples - 1) as f64).collect();
    let mut out = vec![f.clone()];
    for w in times.windows(2) {
        let m = ((w[1] - w[0]) / dt).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / m as f64;
        for i in 0..m {
            let t = w[0] + i as f64 * h;
            let k1 = rate(t, &f)?;
            let k2 = rate(t + 0.5 * h, &f.axpy(0.5 * h, &k1)?)?;
            let k3 = rate(t + 0.5 * h, &f.axpy(0.5 * h, &k2)?)?;
            let k4 = rate(t + h, &f.axpy(h, &k3)?)?;
            f = f.axpy(h / 6.0, &k1)?.axpy(h / 3.0, &k2)?.axpy(h / 3.0, &k3)?.axpy(h / 6.0, &k4)?;
        }
        if !f.is_finite() {
            return Err(LabError::NonFiniteState { t: w[1] });
        }
        out.push(f.clone());
    }
    let v_samples = times.iter().map(|&t| v(t)).collect::<Result<Vec<_>>>()?;
    let g_samples = times.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
    Ok(TransportRun { times, f: out, v: v_samples, g: g_samples })
}

/// Smallest `C` with `‖f‖_{L̃^∞_t(Ḃ^s_{p,1})} ≤ e^{CV(t)}(‖f₀‖ + ∫₀ᵗ e^{−CV}‖g‖)` at every sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub s: f64,
    #[serde(with = "crate::exponent")]
    pub p: f64,
    pub samples: usize,
    /// `V(T) = ∫₀ᵀ ‖∇v‖_{Ḃ^{d/p}_{p,1}}`.
    pub v_total: f64,
    pub lhs: Vec<f64>,
    /// `None` when no finite constant works (`V ≡ 0` and the bound fails).
    pub fitted_c: Option<f64>,
}

fn trapezoid_cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0];
    for i in 1..times.len() {
        let last = acc[i - 1];
        acc.push(last + 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]));
    }
    acc
}

/// Fits the growth constant of the transport bound by bisection.
pub fn verify_transport_estimate(run: &TransportRun, s: f64, p: f64) -> Result<TransportReport> {
    let grid = *run.f[0].grid();
    let d = grid.dim() as f64;
    let lo = -d * (1.0 / p).min(1.0 - 1.0 / p);
    if !(p >= 1.0) || !(s > lo && s < 1.0 + d / p) {
        return Err(LabError::ConstraintViolated {
            id: "transport".into(),
            detail: format!("s = {s} outside ({lo}, {}) for p = {}", 1.0 + d / p, exponent::display(p)),
        });
    }
    let part = build_partition::<f64>(grid)?;
    let idx = BesovIndex::new(s, p, 1.0)?;
    let block_rows = |fields: &[Field]| -> Result<Vec<Vec<f64>>> {
        fields
            .par_iter()
            .map(|f| Ok(crate::besov::block_norms(f, p, &part)?.into_iter().map(|(_, v)| v).collect()))
            .collect()
    };
    let weighted = |row: &[f64], s: f64| lr_norm(row.iter().enumerate().map(|(i, &a)| ((part.j_min() + i as i32) as f64 * s).exp2() * a), 1.0);

    let f_rows = block_rows(&run.f)?;
    let mut running = vec![0.0_f64; f_rows[0].len()];
    let lhs: Vec<f64> = f_rows
        .iter()
        .map(|row| {
            running.iter_mut().zip(row).for_each(|(m, &v)| *m = m.max(v));
            weighted(&running, idx.s)
        })
        .collect();

    // ‖∇v‖_{Ḃ^{d/p}_{p,1}} with the matrix norm taken pointwise
    let grad_v = run
        .v
        .par_iter()
        .map(|v| {
            let jac = jacobian(&forward_transform(v)?)?.to_real();
            let rows = crate::besov::block_norms(&jac, p, &part)?;
            Ok(crate::besov::norm_from_blocks(&rows, d / p, 1.0, |_| 1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let v_cum = trapezoid_cumulative(&run.times, &grad_v);
    let g_norms: Vec<f64> = block_rows(&run.g)?.iter().map(|r| weighted(r, s)).collect();
    let f0 = weighted(&f_rows[0], s);

    let bracket = |c: f64, i: usize| -> f64 {
        let integrand: Vec<f64> = (0..=i).map(|k| (-c * v_cum[k]).exp() * g_norms[k]).collect();
        let integral = trapezoid_cumulative(&run.times[..=i], &integrand)[i];
        (c * v_cum[i]).exp() * (f0 + integral)
    };
    let holds = |c: f64| (0..run.times.len()).all(|i| lhs[i] <= bracket(c, i) * (1.0 + 1e-12) + 1e-14);
    let fitted_c = if holds(0.0) {
        Some(0.0)
    } else {
        let mut hi = 1.0;
        while !holds(hi) && hi < 1e8 {
            hi *= 2.0;
        }
        if !holds(hi) {
            None
        } else {
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-10 * hi {
                    break;
                }
            }
            Some(hi)
        }
    };
    Ok(TransportReport { s, p, samples: run.times.len(), v_total: *v_cum.last().unwrap(), lhs, fitted_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RandomSpectrum;
    use crate::spectral::Grid;

    #[test]
    fn still_transport_is_constant() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let f0 = RandomSpectrum::default().field::<f64>(grid, 1, 2).unwrap();
        let zero = |_t: f64| Ok(Field::zeros(grid, 2));
        let zero1 = |_t: f64| Ok(Field::zeros(grid, 1));
        let run = solve_linear_transport(&f0, &zero, &zero1, 1.0, 3, 0.1).unwrap();
        assert!(run.f[2].sub(&run.f[0]).unwrap().max_abs() < 1e-14);
        let rep = verify_transport_estimate(&run, 0.5, 2.0).unwrap();
        assert_eq!(rep.fitted_c, Some(0.0));
    }

    #[test]
    fn uniform_velocity_translates() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let f0 = RandomSpectrum::default().with_cutoff(3).field::<f64>(grid, 1, 5).unwrap();
        // one grid cell per unit time along x
        let c = grid.spacing();
        let v = move |_t: f64| Ok(Field::from_fn(grid, 2, move |_, k| if k == 0 { c } else { 0.0 }));
        let g = |_t: f64| Ok(Field::zeros(grid, 1));
        let run = solve_linear_transport(&f0, &v, &g, 3.0, 4, 0.01).unwrap();
        let shifted = f0.roll([3, 0, 0]);
        assert!(run.f[3].sub(&shifted).unwrap().max_abs() < 1e-10 * f0.max_abs());
        let rep = verify_transport_estimate(&run, 0.5, 2.0).unwrap();
        assert!(rep.v_total < 1e-12);
        let spread = rep.lhs.iter().fold(0.0_f64, |m, &v| m.max((v / rep.lhs[0] - 1.0).abs()));
        assert!(spread < 1e-10, "{spread}");
    }

    #[test]
    fn manufactured_solution() {
        let grid = Grid::new(2, 32, 1.0).unwrap();
        let exact = |t: f64| Field::from_fn(grid, 1, move |x, _| (x[0] + t).sin() * (2.0 * x[1]).cos());
        let v = |_t: f64| Ok(Field::from_fn(grid, 2, |x, c| if c == 0 { 0.3 * x[1].sin() } else { 0.2 }));
        let g = |t: f64| {
            Ok(Field::from_fn(grid, 1, move |x, _| {
                let (a, b) = (x[0] + t, 2.0 * x[1]);
                let ft = a.cos() * b.cos();
                let fx = a.cos() * b.cos();
                let fy = -2.0 * a.sin() * b.sin();
                ft + 0.3 * x[1].sin() * fx + 0.2 * fy
            }))
        };
        let run = solve_linear_transport(&exact(0.0), &v, &g, 0.5, 3, 0.01).unwrap();
        assert!(run.f[2].sub(&exact(0.5)).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn cfl_violation() {
        let grid = Grid::new(1, 32, 1.0).unwrap();
        let f0 = Field::from_fn(grid, 1, |x, _| x[0].sin());
        let v = |_t: f64| Ok(Field::constant(grid, 1, 10.0));
        let g = |_t: f64| Ok(Field::zeros(grid, 1));
        assert!(matches!(solve_linear_transport(&f0, &v, &g, 1.0, 2, 0.1), Err(LabError::CflViolation { .. })));
    }

    #[test]
    fn range_guard() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let f = Field::zeros(grid, 1);
        let run = TransportRun { times: vec![0.0, 1.0], f: vec![f.clone(), f.clone()], v: vec![], g: vec![] };
        assert!(verify_transport_estimate(&run, 3.0, 2.0).is_err());
    }
}
