//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::Instant;

use lab_core::besov::WeightProfile;
use lab_core::cns::{advance, simulate, solve_linear_momentum, FluidParams, FluidState, MomentumCoefficients, PressureLaw};
use lab_core::diagnostics::{verify_log_interpolation, CutLevel, RunClass};
use lab_core::littlewood_paley::{block, build_partition, verify_bernstein, ShellSample};
use lab_core::paraproduct::{bony, dealiased_product, registry, verify_estimate};
use lab_core::random::RandomSpectrum;
use lab_core::scenarios::{epsilon_scan, run_in_memory, DensityRecipe, ScenarioConfig, VelocityRecipe};
use lab_core::spectral::{forward_transform, lp_norm};
use lab_core::{Field, Grid, Result};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn config(name: &str) -> ScenarioConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs").join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn params(mu: f64, lambda: f64) -> FluidParams {
    FluidParams::new(mu, lambda, PressureLaw::power(1.0, 1.4, 1.0, 0.5).unwrap()).unwrap()
}

fn partition_of_unity() -> Result<Outcome> {
    let grid = Grid::new(3, 64, 1.0)?;
    let part = build_partition::<f64>(grid)?;
    let mut worst = 0.0_f64;
    for i in 0..grid.len() {
        if grid.frequency_norm(i) == 0.0 || !grid.is_retained(i) {
            continue;
        }
        let mut sum = 0.0;
        for j in part.indices() {
            sum += part.weights(j)?[i];
        }
        worst = worst.max((sum - 1.0).abs());
    }
    outcome(worst <= 1e-12, format!("max |sum - 1| = {worst:.2e} (tol 1e-12)"))
}

fn block_orthogonality() -> Result<Outcome> {
    let grid = Grid::new(3, 32, 1.0)?;
    let part = build_partition::<f64>(grid)?;
    let worst = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let f = RandomSpectrum::default().spectrum::<f64>(grid, 1, 100 + seed)?;
            let norm = f.l2_norm();
            let mut w = 0.0_f64;
            for j in part.indices() {
                let bj = block(&f, &part, j)?;
                for k in part.indices().filter(|k| (j - k).abs() >= 2) {
                    w = w.max(block(&bj, &part, k)?.l2_norm() / norm);
                }
            }
            Ok(w)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    outcome(worst <= 1e-13, format!("max ||D_j D_k f|| / ||f|| = {worst:.2e} over 20 fields (tol 1e-13)"))
}

fn bony_reconstruction() -> Result<Outcome> {
    let grid = Grid::new(3, 64, 1.0)?;
    let part = build_partition::<f64>(grid)?;
    let worst = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let rs = RandomSpectrum::default();
            let u = rs.field::<f64>(grid, 1, 2 * seed + 1)?.add_scalar(0.3);
            let v = rs.field::<f64>(grid, 1, 2 * seed + 2)?.add_scalar(-0.1);
            let direct = dealiased_product(&u, &v)?;
            let terms = bony(&u, &v, &part)?;
            Ok(lp_norm(&terms.sum().sub(&direct)?, 2.0)? / lp_norm(&direct, 2.0)?)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    outcome(worst <= 1e-10, format!("max relative error {worst:.2e} over 100 pairs, 3D n=64 (tol 1e-10)"))
}

fn bernstein_scaling() -> Result<Outcome> {
    let grid = Grid::new(3, 64, 1.0)?;
    let part = build_partition::<f64>(grid)?;
    let mut worst = 1.0_f64;
    let mut lines = Vec::new();
    for (p, q) in [(2.0, 2.0), (2.0, f64::INFINITY), (1.0, 4.0)] {
        for order in [1u32, 2] {
            let a = verify_bernstein(&part, 1, p, q, order, 20, 7, ShellSample::Localized)?;
            let b = verify_bernstein(&part, 3, p, q, order, 20, 7, ShellSample::Localized)?;
            let fwd = (a.max_forward / b.max_forward).max(b.max_forward / a.max_forward);
            let rev = (a.max_reverse / b.max_reverse).max(b.max_reverse / a.max_reverse);
            worst = worst.max(fwd).max(rev);
            lines.push(format!("p={p} q={q} k={order}: fwd x{fwd:.2} rev x{rev:.2}"));
        }
    }
    outcome(worst <= 4.0, format!("worst shell-1 vs shell-3 factor {worst:.3} (tol 4); {}", lines.join("; ")))
}

fn weight_law() -> Result<Outcome> {
    let mut horizons = vec![0.0];
    horizons.extend((-10..=10).map(|e| (e as f64).exp2()));
    let slack = 1.0 + 1e-12;
    let mut violations = 0usize;
    let mut checked = 0usize;
    for &t in &horizons {
        let w = WeightProfile::new(1.0, t)?;
        let omega: Vec<f64> = (-20..=20).map(|k| w.weight(k)).collect();
        for (a, k) in (-20..=20).enumerate() {
            let ok_bound = omega[a] <= 2.0 * slack;
            let ok_e = w.e(k) <= omega[a] * slack + 1e-300;
            violations += usize::from(!ok_bound) + usize::from(!ok_e);
            for (b, kp) in (-20..=20).enumerate() {
                let ok = if k >= kp {
                    omega[a] <= ((k - kp) as f64).exp2() * omega[b] * slack
                } else {
                    omega[a] <= 3.0 * omega[b] * slack
                };
                violations += usize::from(!ok);
                checked += 1;
            }
        }
    }
    let inf = WeightProfile::new(1.0, f64::INFINITY)?;
    let limit = (-20..=20).map(|k| (inf.weight(k) - 2.0).abs()).fold(0.0, f64::max);
    outcome(
        violations == 0 && limit <= 1e-12,
        format!("{violations} violations in {checked} pair checks over 22 horizons; max |w_k(inf) - 2| = {limit:.1e}"),
    )
}

fn momentum_decay() -> Result<Outcome> {
    let grid = Grid::new(3, 32, 1.0)?;
    let (mu, lambda) = (0.05, 0.02);
    let coeffs = MomentumCoefficients::new(&Field::constant(grid, 1, 1.0), mu, lambda)?;
    let t = 0.1;
    let mut worst = 0.0_f64;
    // transverse u = (0, sin 3x, 0), longitudinal u = (sin 3x, 0, 0)
    for (c, rate) in [(1usize, mu), (0usize, mu + lambda)] {
        let u0 = Field::from_fn(grid, 3, move |x, k| if k == c { (3.0 * x[0]).sin() } else { 0.0 });
        let run = solve_linear_momentum(&u0, coeffs.clone(), &|_| Ok(Field::zeros(grid, 3)), t, 2)?;
        let want = u0.scale((-rate * 9.0 * t).exp());
        worst = worst.max(run.u[1].sub(&want)?.max_abs());
    }
    outcome(worst <= 1e-10, format!("max deviation from exact decay {worst:.2e} at t = 0.1 (tol 1e-10)"))
}

/// `x_{n+1} = a x_n + b x_{n−1}` fitted by least squares, then `b = −e^{−2αh}`,
/// `a = 2e^{−αh} cos ωh`.
fn damped_fit(x: &[f64], h: f64) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for w in x.windows(3) {
        let (p, q, y) = (w[1], w[0], w[2]);
        s11 += p * p;
        s12 += p * q;
        s22 += q * q;
        r1 += p * y;
        r2 += q * y;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (r1 * s22 - r2 * s12) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let alpha = -(-b).ln() / (2.0 * h);
    let omega = (a / (2.0 * (-alpha * h).exp())).acos() / h;
    (alpha, omega)
}

fn acoustic_dispersion() -> Result<Outcome> {
    let grid = Grid::new(2, 64, 1.0)?;
    let p = params(0.05, 0.02);
    let amp = 1e-6;
    let rho = Field::from_fn(grid, 1, move |x, _| 1.0 + amp * x[0].cos());
    let state = FluidState::new(0.0, rho, Field::zeros(grid, 2), p.clone())?;
    let cs2 = p.pressure.derivative(1.0);
    let predict = |nu: f64| {
        let alpha = nu / 2.0;
        (alpha, (cs2 - alpha * alpha).sqrt())
    };
    let nu_impl = (p.mu + p.lambda) / p.pressure.rho_bar;
    let nu_alt = (2.0 * p.mu + p.lambda) / p.pressure.rho_bar;
    let (alpha, omega) = predict(nu_impl);
    let period = std::f64::consts::TAU / omega;
    let samples = 64;
    let h = period / samples as f64;
    let traj = simulate(&state, period, h)?;
    let x: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| Ok(2.0 * forward_transform(&s.rho)?.mode(0, [1, 0, 0]).re))
        .collect::<Result<_>>()?;
    let (a_fit, w_fit) = damped_fit(&x, h);
    let exact = |t: f64| amp * (-alpha * t).exp() * ((omega * t).cos() + alpha / omega * (omega * t).sin());
    let traj_err = traj.times().iter().zip(&x).map(|(&t, &v)| (v - exact(t)).abs() / amp).fold(0.0, f64::max);
    let freq_err = (w_fit / omega - 1.0).abs();
    let decay_err = (a_fit / alpha - 1.0).abs();
    let (alpha_alt, omega_alt) = predict(nu_alt);
    let alt = (a_fit / alpha_alt - 1.0).abs().max((w_fit / omega_alt - 1.0).abs());
    outcome(
        freq_err <= 1e-3 && decay_err <= 1e-3 && traj_err <= 1e-3,
        format!(
            "nu=(mu+lambda)/rho_bar: freq err {freq_err:.1e}, decay err {decay_err:.1e}, waveform err {traj_err:.1e} (tol 1e-3); \
             against nu=(2mu+lambda)/rho_bar the worst err is {alt:.2e}"
        ),
    )
}

fn rk4_order() -> Result<Outcome> {
    // u = (a e^{−μk²t/ρ̄} sin(k y), 0) with ρ ≡ ρ̄ solves the full nonlinear system
    let grid = Grid::new(2, 64, 1.0)?;
    let p = params(0.05, 0.02);
    let (a, k) = (0.1, 8.0);
    let u0 = Field::from_fn(grid, 2, move |x, c| if c == 0 { a * (k * x[1]).sin() } else { 0.0 });
    let state = FluidState::new(0.0, Field::constant(grid, 1, 1.0), u0.clone(), p.clone())?;
    let t_end = 1.0;
    let exact = u0.scale((-p.mu * k * k * t_end).exp());
    let err = |steps: usize| -> Result<f64> {
        let dts = vec![t_end / steps as f64; steps];
        Ok(advance(&state, &dts)?.u.sub(&exact)?.max_abs())
    };
    let (e1, e2) = (err(50)?, err(100)?);
    let ratio = e1 / e2;
    outcome((12.0..=20.0).contains(&ratio), format!("err(dt=0.02) = {e1:.3e}, err(dt=0.01) = {e2:.3e}, ratio {ratio:.2} (want 12..20)"))
}

fn conservation() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["acoustic_2d.json", "tabulated_2d.json", "oscillating_3d.json"] {
        let s = run_in_memory(&config(name))?.summary;
        let c = &s.conservation;
        let ok = s.class == RunClass::Completed && c.mass_drift_rate <= 1e-11 && c.energy_growth_rate <= 1e-6;
        pass &= ok;
        parts.push(format!(
            "{}: mass drift {:.1e}/t, max growth of E+intD {:.1e}*E0/t",
            s.name, c.mass_drift_rate, c.energy_growth_rate
        ));
    }
    outcome(pass, format!("{} (tol 1e-11, 1e-6)", parts.join("; ")))
}

fn flux_identities() -> Result<Outcome> {
    let s = run_in_memory(&config("oscillating_3d.json"))?.summary;
    let f = s.flux_identities;
    outcome(
        s.class == RunClass::Completed && f.laplace_flux <= 1e-8 && f.vorticity <= 1e-8 && f.flux_mismatch <= 1e-9,
        format!(
            "oscillating_3d, {} snapshots: laplace F {:.1e}, vorticity {:.1e} (tol 1e-8); div w vs F {:.1e} (tol 1e-9)",
            s.snapshots, f.laplace_flux, f.vorticity, f.flux_mismatch
        ),
    )
}

fn density_bounds() -> Result<Outcome> {
    let base = config("small_energy_3d.json");
    let runs = [0.5, 1.0, 2.0]
        .par_iter()
        .map(|&scale| {
            let mut cfg = base.clone();
            if let VelocityRecipe::Oscillating { phi, .. } = &mut cfg.initial.velocity {
                phi.amplitude *= scale;
            }
            if let DensityRecipe::Bump { amplitude, .. } = &mut cfg.initial.density {
                *amplitude *= scale;
            }
            Ok((scale, run_in_memory(&cfg)?.summary))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (scale, s) in &runs {
        let h = &s.hypothesis;
        let largest = [h.rho_l2, h.rho_besov, h.u_smallness, h.u_l2].into_iter().fold(0.0, f64::max);
        let held = s.density.inner_violation.is_none() && s.t_final >= 2.0 - 1e-12;
        pass &= held && largest <= 1e-2 && s.class == RunClass::Completed;
        parts.push(format!(
            "x{scale}: max functional {largest:.1e}, rho in [{:.6}, {:.6}], A1+A2 = {:.3e}",
            s.density.rho_min.iter().cloned().fold(f64::INFINITY, f64::min),
            s.density.rho_max.iter().cloned().fold(0.0, f64::max),
            s.hoff.0 + s.hoff.1
        ));
    }
    let a: Vec<f64> = runs.iter().map(|(_, s)| s.hoff.0 + s.hoff.1).collect();
    let monotone = a.windows(2).all(|w| w[0] <= w[1]);
    pass &= monotone;
    outcome(pass, format!("{}; A1+A2 shrinks with the amplitude: {monotone}", parts.join("; ")))
}

fn eps_scaling() -> Result<Outcome> {
    let cfg = config("eps_scan_1d.json");
    let eps = [1.0 / 4.0, 1.0 / 6.0, 1.0 / 8.0, 1.0 / 12.0, 1.0 / 16.0, 1.0 / 24.0, 1.0 / 32.0];
    let scan = epsilon_scan(&cfg, &eps)?;
    let b = scan.besov_fit;
    let h = scan.h_minus_delta_fit;
    let (want_b, want_h) = (1.0 - 3.0 / cfg.indices.p, cfg.indices.delta);
    let (err_b, err_h) = ((b.slope / want_b - 1.0).abs(), (h.slope / want_h - 1.0).abs());
    outcome(
        err_b <= 0.10 && b.r_squared >= 0.98 && err_h <= 0.15,
        format!(
            "Besov slope {:.4} vs {want_b} (err {:.1}%, R^2 {:.4}); H^-delta slope {:.4} vs {want_h} (err {:.1}%, R^2 {:.4})",
            b.slope,
            100.0 * err_b,
            b.r_squared,
            h.slope,
            100.0 * err_h,
            h.r_squared
        ),
    )
}

fn harness_stability() -> Result<Outcome> {
    let specs = registry();
    let rows = specs
        .par_iter()
        .map(|spec| {
            let mut p = spec.defaults.clone();
            p.dim = 3;
            p.n = 32;
            p.samples = 1;
            let a = verify_estimate(&spec.id, &p, 50, 11)?.max_ratio;
            let b = verify_estimate(&spec.id, &p, 50, 12)?.max_ratio;
            Ok((spec.id.clone(), a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pass = true;
    let mut worst = (String::new(), 0.0_f64);
    let mut each = Vec::new();
    for (id, a, b) in &rows {
        each.push(format!("{id} {a:.3}/{b:.3}"));
        let finite = a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0;
        let dev = if finite { (a / b - 1.0).abs().max((b / a - 1.0).abs()) } else { f64::INFINITY };
        pass &= finite && a.max(*b) <= 1.3 * a.min(*b);
        if dev > worst.1 {
            worst = (id.clone(), dev);
        }
    }
    outcome(
        pass,
        format!(
            "{} estimates, worst seed disagreement {:.1}% ({}) (tol 30%); {}",
            rows.len(),
            100.0 * worst.1,
            worst.0,
            each.join(", ")
        ),
    )
}

/// Same random function sampled on an `n`-point grid.
fn fitted_constant(n: usize) -> Result<(f64, bool)> {
    let grid = Grid::new(2, n, 1.0)?;
    let part = build_partition::<f64>(grid)?;
    let reports = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let f = RandomSpectrum::default().with_cutoff(21).field::<f64>(grid, 1, 500 + seed)?;
            verify_log_interpolation(&f, 4.0, CutLevel::Balanced, &part)
        })
        .collect::<Result<Vec<_>>>()?;
    let c = reports.iter().map(|r| r.fitted_c).fold(0.0, f64::max);
    Ok((c, reports.iter().all(|r| r.dominates(c))))
}

fn log_interpolation() -> Result<Outcome> {
    let (c64, ok64) = fitted_constant(64)?;
    let (c128, ok128) = fitted_constant(128)?;
    let drift = (c128 / c64 - 1.0).abs();
    outcome(
        ok64 && ok128 && c64 > 0.0 && drift <= 0.2,
        format!("fitted C: n=64 {c64:.4}, n=128 {c128:.4}, drift {:.1}% (tol 20%); bound dominates all 200 fields: {}", 100.0 * drift, ok64 && ok128),
    )
}

type Criterion = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Criterion); 14] = [
        ("partition of unity", partition_of_unity),
        ("block orthogonality", block_orthogonality),
        ("Bony reconstruction", bony_reconstruction),
        ("Bernstein scaling", bernstein_scaling),
        ("weight law", weight_law),
        ("linear momentum decay", momentum_decay),
        ("acoustic dispersion", acoustic_dispersion),
        ("RK4 order", rk4_order),
        ("conservation and energy", conservation),
        ("flux identities", flux_identities),
        ("density bounds", density_bounds),
        ("epsilon scaling", eps_scaling),
        ("estimate harness stability", harness_stability),
        ("log interpolation", log_interpolation),
    ];
    // `cargo test --test acceptance -- 7 12` runs a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {:>2}. {name}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

