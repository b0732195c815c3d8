//! Barotropic pressure laws and the potential energy density.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Shape of `P(ρ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PressureKind {
    /// `P(ρ) = A ρ^γ`
    Power {
        #[serde(rename = "A", alias = "a")]
        a: f64,
        gamma: f64,
    },
    /// Monotone cubic interpolation through `(rho[i], p[i])`.
    Tabulated { rho: Vec<f64>, p: Vec<f64> },
}

/// Pressure law with reference density `ρ̄` and band parameter `c₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    #[serde(flatten)]
    pub kind: PressureKind,
    pub rho_bar: f64,
    pub c0: f64,
}

/// Points used by the numerical admissibility checks.
const BAND_SAMPLES: usize = 10_000;

impl PressureLaw {
    pub fn power(a: f64, gamma: f64, rho_bar: f64, c0: f64) -> Result<Self> {
        let law = PressureLaw { kind: PressureKind::Power { a, gamma }, rho_bar, c0 };
        law.validate()?;
        Ok(law)
    }

    pub fn tabulated(rho: Vec<f64>, p: Vec<f64>, rho_bar: f64, c0: f64) -> Result<Self> {
        let law = PressureLaw { kind: PressureKind::Tabulated { rho, p }, rho_bar, c0 };
        law.validate()?;
        Ok(law)
    }

    /// Checks `P(0) = 0`, `P′(ρ̄) > 0` and the sign condition on the band.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::PressureLaw(m));
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return bad(format!("c0 = {} must lie in (0, 1)", self.c0));
        }
        if !(self.rho_bar > self.c0 && self.rho_bar < 1.0 / self.c0) {
            return bad(format!("rho_bar = {} outside (c0, 1/c0)", self.rho_bar));
        }
        match &self.kind {
            PressureKind::Power { a, gamma } => {
                if !(*a > 0.0 && *gamma >= 1.0) {
                    return bad(format!("power law needs A > 0 and gamma >= 1, got A = {a}, gamma = {gamma}"));
                }
            }
            PressureKind::Tabulated { rho, p } => {
                if rho.len() < 2 || rho.len() != p.len() {
                    return bad("table needs at least two matching columns".into());
                }
                if rho.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table densities must increase".into());
                }
                if rho[0] != 0.0 || *rho.last().unwrap() < self.band().1 {
                    return bad(format!("table must cover [0, {}]", self.band().1));
                }
            }
        }
        if self.pressure(0.0) != 0.0 {
            return bad("P(0) != 0".into());
        }
        if !(self.derivative(self.rho_bar) > 0.0) {
            return bad("P'(rho_bar) <= 0".into());
        }
        let (lo, hi) = self.band();
        let p_bar = self.p_bar();
        for i in 0..=BAND_SAMPLES {
            let rho = lo + (hi - lo) * i as f64 / BAND_SAMPLES as f64;
            let sign = (rho - self.rho_bar) * (self.pressure(rho) - p_bar);
            if rho != self.rho_bar && !(sign > 0.0) {
                return bad(format!("(rho - rho_bar)(P - P_bar) <= 0 at rho = {rho}"));
            }
        }
        Ok(())
    }

    /// `[0, 2/c₀]`
    pub fn band(&self) -> (f64, f64) {
        (0.0, 2.0 / self.c0)
    }

    pub fn check_band(&self, rho: f64) -> Result<()> {
        let (lo, hi) = self.band();
        if !(rho >= lo && rho <= hi) {
            return Err(LabError::OutOfBand { rho, lo, hi });
        }
        Ok(())
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        match &self.kind {
            PressureKind::Power { a, gamma } => a * rho.max(0.0).powf(*gamma),
            PressureKind::Tabulated { rho: xs, p } => hermite(xs, p, rho).0,
        }
    }

    /// `P′(ρ)`
    pub fn derivative(&self, rho: f64) -> f64 {
        match &self.kind {
            PressureKind::Power { a, gamma } => a * gamma * rho.max(0.0).powf(gamma - 1.0),
            PressureKind::Tabulated { rho: xs, p } => hermite(xs, p, rho).1,
        }
    }

    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.derivative(rho).max(0.0).sqrt()
    }

    /// `P(ρ̄)`
    pub fn p_bar(&self) -> f64 {
        self.pressure(self.rho_bar)
    }

    /// `G(ρ) = ρ ∫_{ρ̄}^{ρ} (P(s) − P(ρ̄))/s² ds`.
    pub fn potential(&self, rho: f64) -> f64 {
        let (rb, pb) = (self.rho_bar, self.p_bar());
        match &self.kind {
            PressureKind::Power { a, gamma } => {
                let tail = pb * (1.0 - rho / rb);
                if (*gamma - 1.0).abs() < 1e-12 {
                    if rho <= 0.0 {
                        return pb;
                    }
                    a * rho * (rho / rb).ln() + tail
                } else {
                    a * rho * (rho.powf(gamma - 1.0) - rb.powf(gamma - 1.0)) / (gamma - 1.0) + tail
                }
            }
            PressureKind::Tabulated { .. } => {
                if rho <= 0.0 {
                    return pb;
                }
                let integrand = |s: f64| (self.pressure(s) - pb) / (s * s);
                rho * adaptive_simpson(&integrand, rb, rho, 1e-13)
            }
        }
    }
}

/// Value and slope of the Fritsch–Carlson monotone cubic through the table.
fn hermite(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    let n = xs.len();
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let secant = |k: usize| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    let slope = |k: usize| -> f64 {
        if k == 0 {
            return secant(0);
        }
        if k == n - 1 {
            return secant(n - 2);
        }
        let (a, b) = (secant(k - 1), secant(k));
        if a * b <= 0.0 {
            return 0.0;
        }
        // weighted harmonic mean keeps the interpolant monotone
        let (h0, h1) = (xs[k] - xs[k - 1], xs[k + 1] - xs[k]);
        let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        (w1 + w2) / (w1 / a + w2 / b)
    };
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let (m0, m1) = (slope(i), slope(i + 1));
    let (t2, t3) = (t * t, t * t * t);
    let value = (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
        + (t3 - t2) * h * m1;
    let d = ((6.0 * t2 - 6.0 * t) * ys[i] + (3.0 * t2 - 4.0 * t + 1.0) * h * m0 + (-6.0 * t2 + 6.0 * t) * ys[i + 1]
        + (3.0 * t2 - 2.0 * t) * h * m1)
        / h;
    (value, d)
}

/// Signed `∫_a^b f`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_law_potential_is_square() {
        let law = PressureLaw::power(1.0, 2.0, 1.0, 0.5).unwrap();
        for rho in [0.0, 0.3, 1.0, 2.5, 4.0] {
            assert!((law.potential(rho) - (rho - 1.0) * (rho - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn potential_vanishes_at_reference_and_is_nonnegative() {
        let law = PressureLaw::power(1.0, 1.4, 1.0, 0.5).unwrap();
        assert_eq!(law.potential(1.0), 0.0);
        let (lo, hi) = law.band();
        for i in 0..=1000 {
            let rho = lo + (hi - lo) * i as f64 / 1000.0;
            assert!(law.potential(rho) >= -1e-15, "G({rho}) = {}", law.potential(rho));
        }
    }

    #[test]
    fn tabulated_matches_power_law() {
        let power = PressureLaw::power(1.0, 1.4, 1.0, 0.5).unwrap();
        let rho: Vec<f64> = (0..=400).map(|i| 4.5 * i as f64 / 400.0).collect();
        let p = rho.iter().map(|&r| power.pressure(r)).collect();
        let table = PressureLaw::tabulated(rho, p, 1.0, 0.5).unwrap();
        for r in [0.5, 1.0, 1.7, 3.9] {
            assert!((table.pressure(r) - power.pressure(r)).abs() < 1e-6);
            assert!((table.derivative(r) - power.derivative(r)).abs() < 1e-3);
            assert!((table.potential(r) - power.potential(r)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_laws() {
        assert!(PressureLaw::power(-1.0, 1.4, 1.0, 0.5).is_err());
        assert!(PressureLaw::power(1.0, 1.4, 3.0, 0.5).is_err());
        // decreasing pressure breaks the sign condition
        let rho = vec![0.0, 1.0, 2.0, 5.0];
        assert!(PressureLaw::tabulated(rho.clone(), vec![0.0, 2.0, 1.0, 3.0], 1.0, 0.5).is_err());
        assert!(PressureLaw::tabulated(rho, vec![0.1, 1.0, 2.0, 5.0], 1.0, 0.5).is_err());
    }

    #[test]
    fn serde_shape() {
        let law = PressureLaw::power(1.0, 1.4, 1.0, 0.5).unwrap();
        let text = serde_json::to_string(&law).unwrap();
        assert!(text.contains("\"kind\":\"power\""));
        let back: PressureLaw = serde_json::from_str(&text).unwrap();
        assert_eq!(back, law);
    }

    #[test]
    fn simpson_integrates_polynomials() {
        let v = adaptive_simpson(&|x| x * x * x - x, -1.0, 2.0, 1e-14);
        assert!((v - 2.25).abs() < 1e-12);
        assert!((adaptive_simpson(&|x| x, 2.0, 0.0, 1e-14) + 2.0).abs() < 1e-14);
    }
}
