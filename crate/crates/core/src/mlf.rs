//! Mittag-Leffler functions of two and three parameters on the real line.
//!
//! `E^μ_{α,β}(z) = Σ_n (μ)_n z^n / (n! Γ(αn+β))`, with `E_{α,β} = E^1_{α,β}`.
//!
//! Evaluation strategy for real `z`:
//!
//! * `z ≥ 0`: the power series, which has no cancellation.
//! * `z < 0`: the power series in compensated summation while its condition
//!   number `Σ|t_n| / |Σ t_n|` stays small; otherwise, for `α < 1`, the
//!   algebraic asymptotic expansion
//!   `E^μ_{α,β}(−x) ~ Σ_k (−1)^k (μ)_k/k! · x^{−μ−k} / Γ(β−α(μ+k))`,
//!   accepted when the first omitted term is below double-precision resolution;
//!   otherwise the Hankel integral folded onto the negative real axis.
//! * `α = 1`, `μ = 1`, integer `β`: the elementary closed forms.
//!
//! For `α < 1` the Laplace transform `s^{αμ−β}(s^α+x)^{−μ}` has no poles on the
//! principal sheet, so the folded Hankel integral is exact and the algebraic
//! expansion carries no exponential correction.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_integrate, KahanSum};

/// Parameters `(α, β, μ)` of a Mittag-Leffler function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlfParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

impl MlfParams {
    /// Two-parameter function `E_{α,β}` (`μ = 1`).
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, mu: 1.0 }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !self.beta.is_finite() {
            return Err(Error::domain(format!("beta must be finite, got {}", self.beta)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::domain(format!("mu must be non-negative, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Pochhammer symbol `(μ)_n = μ(μ+1)…(μ+n−1)`; saturates to `±∞` on overflow.
pub fn pochhammer(mu: f64, n: u32) -> f64 {
    let mut p = 1.0;
    for k in 0..n {
        p *= mu + f64::from(k);
        if !p.is_finite() {
            log::warn!("pochhammer({mu}, {n}) overflowed");
            return p;
        }
    }
    p
}

/// True when `x` is a pole of Γ up to rounding in `β − αk`.
fn is_gamma_pole(x: f64) -> bool {
    let r = x.round();
    r <= 0.0 && (x - r).abs() <= 1e-13 * x.abs().max(1.0)
}

/// `1/Γ(x)`, zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_gamma_pole(x) {
        return 0.0;
    }
    if x.abs() < 170.0 {
        return 1.0 / gamma(x);
    }
    let (ln, sign) = ln_gamma_signed(x);
    sign * (-ln).exp()
}

/// `(ln|Γ(x)|, sign Γ(x))` for `x` away from the poles.
fn ln_gamma_signed(x: f64) -> (f64, f64) {
    let (ln, sign) = libm::lgamma_r(x);
    (ln, f64::from(sign))
}

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Largest tolerated condition number of the alternating series.
const SERIES_CONDITION_LIMIT: f64 = 1e3;
/// Beyond `|z|^{1/α}` of this size the negative-axis series cannot meet the condition limit.
const SERIES_SKIP_EXPONENT: f64 = 10.0;
const SERIES_MAX_TERMS: usize = 20_000;
const ASYMPTOTIC_MAX_TERMS: usize = 400;
const ASYMPTOTIC_REL_TOL: f64 = 1e-16;
const HANKEL_REL_TOL: f64 = 1e-14;

struct SeriesSum {
    value: f64,
    abs_sum: f64,
    converged: bool,
}

fn series(p: &MlfParams, z: f64) -> SeriesSum {
    let MlfParams { alpha, beta, mu } = *p;
    let mut acc = KahanSum::default();
    let mut abs_sum = 0.0;
    let ln_abs_z = z.abs().ln();
    // Coefficient c_n = (μ)_n z^n / n!, kept directly while representable.
    let mut c = 1.0;
    let mut ln_c = 0.0;
    let mut sign_c = 1.0;
    let mut direct = true;
    let peak = (z.abs().powf(1.0 / alpha) - beta) / alpha;
    let mut small_run = 0;
    for n in 0..SERIES_MAX_TERMS {
        let arg = alpha * n as f64 + beta;
        let term = if direct && arg.abs() < 170.0 {
            c * rgamma(arg)
        } else if is_gamma_pole(arg) {
            0.0
        } else {
            let (lg, sg) = ln_gamma_signed(arg);
            sign_c * sg * (ln_c - lg).exp()
        };
        acc.add(term);
        abs_sum += term.abs();
        if !abs_sum.is_finite() {
            // Overflowing tail terms are positive for z > 0.
            let value = if z > 0.0 { f64::INFINITY } else { f64::NAN };
            return SeriesSum { value, abs_sum, converged: z > 0.0 };
        }
        if n as f64 > peak && term.abs() <= 1e-17 * abs_sum {
            small_run += 1;
            if small_run >= 2 {
                return SeriesSum { value: acc.value(), abs_sum, converged: true };
            }
        } else {
            small_run = 0;
        }
        let factor = (mu + n as f64) / (n as f64 + 1.0);
        if factor == 0.0 || z == 0.0 {
            return SeriesSum { value: acc.value(), abs_sum, converged: true };
        }
        ln_c += factor.abs().ln() + ln_abs_z;
        sign_c *= factor.signum() * z.signum();
        if direct {
            c *= factor * z;
            if !(c.abs() > 1e-290 && c.abs() < 1e290) {
                direct = false;
            }
        }
    }
    SeriesSum { value: acc.value(), abs_sum, converged: false }
}

/// Algebraic expansion at `z = −x`, `x > 0`. `None` when it has not converged.
///
/// Convergence is judged on the envelope of the terms, which replaces
/// `|1/Γ(y)| = |Γ(1−y) sin(πy)|/π` by `Γ(1−y)/π` for `y < 1/2` so that a term
/// landing near a pole of Γ does not pass for a small remainder.
fn asymptotic(p: &MlfParams, x: f64) -> Option<f64> {
    let MlfParams { alpha, beta, mu } = *p;
    let mut acc = KahanSum::default();
    let ln_x = x.ln();
    let mut ln_coef = 0.0; // ln((μ)_k / k!)
    let mut prev = f64::INFINITY;
    for k in 0..ASYMPTOTIC_MAX_TERMS {
        let kf = k as f64;
        let arg = beta - alpha * (mu + kf);
        let ln_scale = ln_coef - (mu + kf) * ln_x;
        let ln_env = if arg < 0.5 { ln_gamma(1.0 - arg) - PI.ln() } else { -ln_gamma(arg) };
        let envelope = (ln_scale + ln_env).exp();
        let sum = acc.value();
        if sum != 0.0 && envelope <= ASYMPTOTIC_REL_TOL * sum.abs() {
            return Some(sum);
        }
        if envelope > prev && k > 2 {
            return None;
        }
        prev = envelope;
        if let Some((ln_r, sign_r)) = rgamma_ln_signed(arg) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 } * sign_r;
            acc.add(sign * (ln_scale + ln_r).exp());
        }
        if mu + kf == 0.0 {
            break;
        }
        ln_coef += ((mu + kf) / (kf + 1.0)).ln();
    }
    None
}

/// `(ln|1/Γ(x)|, sign)`, `None` at the poles of Γ.
fn rgamma_ln_signed(x: f64) -> Option<(f64, f64)> {
    if is_gamma_pole(x) {
        return None;
    }
    let (ln, s) = ln_gamma_signed(x);
    Some((-ln, s))
}

/// Folded Hankel integral for `α < 1` at `z = −x`:
/// `−(1/π)∫_1^∞ e^{−r} Im F(re^{iπ}) dr + (1/π)∫_0^π Re[e^s F(s) s] dφ`, `s = e^{iφ}`,
/// with `F(s) = s^{αμ−β}(s^α+x)^{−μ}`.
fn hankel(p: &MlfParams, x: f64) -> f64 {
    let MlfParams { alpha, beta, mu } = *p;
    let q = alpha * mu - beta;
    let f = |s: Complex64| -> Complex64 { s.powf(q) * (s.powf(alpha) + x).powf(-mu) };

    let ray = |r: f64| -> f64 {
        let s = Complex64::from_polar(r, PI);
        (-r).exp() * f(s).im
    };
    let r_peak = x.powf(1.0 / alpha);
    let r_max = 80.0 + 3.0 * q.abs();
    let mut breaks = vec![1.0];
    for b in [0.5 * r_peak, r_peak, 2.0 * r_peak] {
        if b > 1.0 && b < r_max {
            breaks.push(b);
        }
    }
    breaks.push(r_max);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let line = adaptive_integrate(ray, &breaks, HANKEL_REL_TOL, 1e-300, 2000);

    let arc = |phi: f64| -> f64 {
        let s = Complex64::from_polar(1.0, phi);
        (s.exp() * f(s) * s).re
    };
    let circle = adaptive_integrate(arc, &[0.0, 0.5 * PI, PI], HANKEL_REL_TOL, 1e-300, 2000);

    (circle.value - line.value) / PI
}

/// `E_{1,m}(z) = (e^z − Σ_{k<m−1} z^k/k!) / z^{m−1}` for integer `1 ≤ m ≤ 8`.
fn exponential_form(beta: f64, z: f64) -> Option<f64> {
    if beta != beta.floor() || !(1.0..=8.0).contains(&beta) {
        return None;
    }
    let m = beta as i32;
    match m {
        1 => Some(z.exp()),
        2 => Some(z.exp_m1() / z),
        _ if z.abs() < 1.0 => None,
        _ => {
            let mut poly = KahanSum::default();
            let mut term = 1.0;
            for k in 0..(m - 1) {
                poly.add(term);
                term *= z / f64::from(k + 1);
            }
            Some((z.exp() - poly.value()) / z.powi(m - 1))
        }
    }
}

/// Three-parameter Mittag-Leffler function `E^μ_{α,β}(z)`.
pub fn mittag_leffler_3(p: &MlfParams, z: f64) -> Result<f64> {
    p.validate()?;
    if z.is_nan() {
        return Err(Error::domain("argument is NaN"));
    }
    if z == 0.0 || p.mu == 0.0 {
        return Ok(rgamma(p.beta));
    }
    if p.alpha == 1.0 && p.mu == 1.0 {
        if let Some(v) = exponential_form(p.beta, z) {
            return Ok(v);
        }
    }
    if z.is_infinite() {
        return Err(Error::domain("argument must be finite"));
    }

    if p.alpha < 1.0 && z < 0.0 && (-z).powf(1.0 / p.alpha) > SERIES_SKIP_EXPONENT {
        if let Some(v) = asymptotic(p, -z) {
            return Ok(v);
        }
        return Ok(hankel(p, -z));
    }
    let s = series(p, z);
    if z > 0.0 {
        return Ok(s.value);
    }
    let cond = s.abs_sum / s.value.abs();
    if s.converged && s.value != 0.0 && cond <= SERIES_CONDITION_LIMIT {
        return Ok(s.value);
    }
    if p.alpha < 1.0 {
        if let Some(v) = asymptotic(p, -z) {
            return Ok(v);
        }
        return Ok(hankel(p, -z));
    }
    log::debug!(
        "Mittag-Leffler series for alpha={} beta={} z={z} has condition {cond:e}",
        p.alpha,
        p.beta
    );
    Ok(s.value)
}

/// Two-parameter Mittag-Leffler function `E_{α,β}(z)`; `p.mu` is ignored.
pub fn mittag_leffler(p: &MlfParams, z: f64) -> Result<f64> {
    mittag_leffler_3(&p.with_mu(1.0), z)
}

/// `E_{α,β}(z)` without building a parameter struct.
pub fn ml(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    mittag_leffler_3(&MlfParams::new(alpha, beta), z)
}

/// Modal kernel weight `E_{α,α}(−λ t^α)`.
pub fn kernel_weight(alpha: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("elapsed time must be non-negative, got {t}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("eigenvalue must be non-negative, got {lambda}")));
    }
    ml(alpha, alpha, -lambda * t.powf(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(2.0, 3), 24.0);
        assert_eq!(pochhammer(5.0, 0), 1.0);
        assert_eq!(pochhammer(1.0, 5), 120.0);
        assert!(pochhammer(10.0, 400).is_infinite());
    }

    #[test]
    fn scalar_examples() {
        assert!(rel(ml(1.0, 1.0, 1.0).unwrap(), std::f64::consts::E) < 1e-15);
        assert!(rel(ml(0.7, 0.7, 0.0).unwrap(), 1.0 / gamma(0.7)) < 1e-15);
        assert!(rel(ml(0.5, 0.5, -1.0).unwrap(), 1.366_060_073_919_492_8e-1) < 1e-12);
        let p = MlfParams::new(0.6, 1.6).with_mu(2.0);
        assert!(rel(mittag_leffler_3(&p, -2.0).unwrap(), 1.079_909_061_528_592_9e-1) < 1e-10);
        assert!(rel(kernel_weight(0.5, PI * PI, 1.0).unwrap(), 2.852_490_212_493_745_8e-3) < 1e-11);
        assert!(rel(kernel_weight(0.4, 0.0, 3.0).unwrap(), 1.0 / gamma(0.4)) < 1e-15);
        assert!(rel(kernel_weight(1.0, 3.0, 2.0).unwrap(), (-6.0f64).exp()) < 1e-15);
    }

    #[test]
    fn half_order_closed_form() {
        // E_{1/2,1}(−x) = e^{x²} erfc(x)
        for &x in &[0.1, 1.0, 3.0, 6.0, 12.0, 20.0] {
            let exact = libm::erfc(x) * (x * x).exp();
            let got = ml(0.5, 1.0, -x).unwrap();
            assert!(rel(got, exact) < 1e-9, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn exponential_closed_forms() {
        for &z in &[-2500.0, -40.0, -3.0, -1.0, -0.3, 0.2, 2.0] {
            let e3 = ml(1.0, 3.0, z).unwrap();
            let exact = if z.abs() < 1e-3 { 0.5 } else { (z.exp_m1() - z) / (z * z) };
            assert!(rel(e3, exact) < 1e-13, "z={z}: {e3} vs {exact}");
        }
        assert!(rel(ml(1.0, 2.0, -1e-9).unwrap(), 1.0 - 0.5e-9) < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(ml(0.0, 1.0, 1.0).is_err());
        assert!(ml(-0.5, 1.0, 1.0).is_err());
        assert!(ml(0.5, 1.0, f64::NAN).is_err());
        assert!(kernel_weight(0.5, 1.0, -1.0).is_err());
        assert!(kernel_weight(0.5, -1.0, 1.0).is_err());
        assert!(mittag_leffler_3(&MlfParams::new(0.5, 1.0).with_mu(-1.0), 1.0).is_err());
    }

    #[test]
    fn rgamma_at_poles_and_large_arguments() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!(rel(rgamma(-0.5), -0.5 / PI.sqrt()) < 1e-14);
        assert!(rgamma(171.5) > 0.0 && rgamma(171.5) < 1e-300);
        assert!(rel(rgamma(-20.5), 1.0 / gamma(-20.5)) < 1e-14);
    }

    #[test]
    fn each_negative_axis_branch_agrees_where_they_overlap() {
        let p = MlfParams::new(0.75, 0.75);
        for &x in &[1.0, 2.0, 4.0] {
            let s = series(&p, -x);
            let h = hankel(&p, x);
            assert!(rel(h, s.value) < 1e-11, "x={x}: hankel {h} series {}", s.value);
        }
        for &x in &[60.0, 200.0] {
            let a = asymptotic(&p, x).unwrap();
            let h = hankel(&p, x);
            assert!(rel(h, a) < 1e-11, "x={x}: hankel {h} asymptotic {a}");
        }
    }
}
