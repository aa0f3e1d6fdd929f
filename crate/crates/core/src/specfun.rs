//! Special functions needed by the closed-form Bogoliubov coefficients:
//! the principal real branch of the Lambert W function and the Gamma
//! function evaluated on the imaginary axis.
//!
//! All functions report domain violations as errors; they never return NaN
//! or infinities for in-domain arguments.

use crate::{Complex, Error, Result};
use std::f64::consts::PI;

/// Principal branch W₀ of the Lambert W function, defined by
/// `w * exp(w) = x` with `w ≥ −1`, for `x ≥ −1/e`.
///
/// Halley iteration from a piecewise initial guess: a branch-point series
/// near `x = −1/e`, a Taylor start near zero, and an asymptotic
/// `ln x − ln ln x` start for large `x`. Converges to relative accuracy
/// better than 1e−14 on the whole domain.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(
            "lambert_w0",
            format!("non-finite argument {x}"),
        ));
    }
    let min_x = -(-1.0f64).exp(); // −1/e
    if x < min_x {
        // Allow a hair of rounding slack at the branch point itself.
        if x > min_x * (1.0 + 4.0 * f64::EPSILON) {
            return Ok(-1.0);
        }
        return Err(Error::domain(
            "lambert_w0",
            format!("argument {x} below branch point −1/e ≈ {min_x}"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let w0 = if x < -0.25 {
        // Branch-point series in p = sqrt(2(e x + 1)).
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p.powi(3) / 72.0 - 43.0 * p.powi(4) / 540.0
    } else if x < 0.25 {
        // Taylor series about 0.
        x * (1.0 + x * (-1.0 + x * 1.5))
    } else if x < std::f64::consts::E {
        0.5 * (1.0 + x).ln() * 1.2
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    halley_w(x, w0.max(-1.0 + 1e-14))
}

/// `W₀(exp(a))` without forming `exp(a)`, valid for any finite `a`.
///
/// For large `a` this solves `w + ln w = a` by Newton iteration, which keeps
/// the trajectory formulas evaluable where `exp(a)` would overflow.
pub fn lambert_w0_ln(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::domain(
            "lambert_w0_ln",
            format!("non-finite argument {a}"),
        ));
    }
    if a < -700.0 {
        // W(e^a) = e^a (1 + O(e^a)); the correction is below 1 ulp here.
        return Ok(a.exp());
    }
    if a <= 3.0 {
        return lambert_w0(a.exp());
    }
    // Solve w + ln w = a, quadratically convergent from the asymptotic start.
    let mut w = a - a.ln() + a.ln() / a;
    for _ in 0..40 {
        let g = w + w.ln() - a;
        let step = g * w / (w + 1.0);
        w -= step;
        if step.abs() <= 2.0 * f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(w)
}

fn halley_w(x: f64, start: f64) -> Result<f64> {
    let mut w = start;
    for _ in 0..60 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        // Halley step for f(w) = w e^w − x.
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = if w - step < -1.0 {
            (w - 1.0) / 2.0
        } else {
            w - step
        };
        let done = (next - w).abs() <= f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            return Ok(w);
        }
    }
    let residual = (w * w.exp() - x).abs() / x.abs().max(1e-300);
    if residual < 1e-12 {
        Ok(w)
    } else {
        Err(Error::NoConvergence {
            context: "lambert_w0",
            residual,
            tolerance: 1e-12,
        })
    }
}

/// Γ(iy) for real y ≠ 0.
///
/// Computed as `exp(lnΓ(1 + iy)) / (iy)` with log-Gamma from a Stirling
/// series after lifting the argument by recurrence, so the result is
/// accurate on the whole imaginary axis. `y = 0` is a pole and reported as
/// an error. Negative `y` is obtained by reflection, `Γ(conj z) = conj Γ(z)`.
pub fn gamma_imag(y: f64) -> Result<Complex> {
    if !y.is_finite() {
        return Err(Error::domain(
            "gamma_imag",
            format!("non-finite argument {y}"),
        ));
    }
    if y == 0.0 {
        return Err(Error::Pole("gamma_imag at y = 0"));
    }
    if y < 0.0 {
        return Ok(gamma_imag(-y)?.conj());
    }
    let lg = ln_gamma_right_half(Complex::new(1.0, y));
    let g = lg.exp() / Complex::new(0.0, y);
    if !g.re.is_finite() || !g.im.is_finite() {
        return Err(Error::domain(
            "gamma_imag",
            format!("result not representable at y = {y}"),
        ));
    }
    Ok(g)
}

/// |Γ(iy)|² through the closed-form identity π / (y sinh πy).
///
/// Independent of the Stirling/log-Gamma code path; used as a built-in
/// cross-check of [`gamma_imag`]. Exact up to rounding.
pub fn gamma_imag_abs_sq_identity(y: f64) -> Result<f64> {
    if y == 0.0 {
        return Err(Error::Pole("gamma_imag_abs_sq_identity at y = 0"));
    }
    let y = y.abs();
    // π / (y sinh πy) = 2π e^{−πy} / (y (1 − e^{−2πy})), overflow-free.
    let e = (-PI * y).exp();
    Ok(2.0 * PI * e / (y * (1.0 - e * e).max(f64::MIN_POSITIVE)))
}

/// Continuous phase arg Γ(iy) for y ≠ 0, odd in y.
pub fn arg_gamma_imag(y: f64) -> Result<f64> {
    if y == 0.0 {
        return Err(Error::Pole("arg_gamma_imag at y = 0"));
    }
    if y < 0.0 {
        return Ok(-arg_gamma_imag(-y)?);
    }
    let lg = ln_gamma_right_half(Complex::new(1.0, y));
    Ok(lg.im - PI / 2.0)
}

/// Phase θ_{ωω'} = (ω/κ) ln(ω'/κ) − arg Γ(iω/κ).
///
/// Only differences of θ at equal ω are physically meaningful downstream;
/// the absolute phase follows the continuous-arg convention of
/// [`arg_gamma_imag`].
pub fn theta_phase(omega: f64, omega_prime: f64, kappa: f64) -> Result<f64> {
    for (name, v) in [
        ("omega", omega),
        ("omega_prime", omega_prime),
        ("kappa", kappa),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(
                "theta_phase",
                format!("{name} must be strictly positive and finite, got {v}"),
            ));
        }
    }
    Ok(omega / kappa * (omega_prime / kappa).ln() - arg_gamma_imag(omega / kappa)?)
}

/// (ln |Γ(iy)|, arg Γ(iy)) for y ≠ 0, overflow-free for large |y|.
pub(crate) fn ln_gamma_imag_parts(y: f64) -> Result<(f64, f64)> {
    if y == 0.0 {
        return Err(Error::Pole("ln_gamma_imag_parts at y = 0"));
    }
    let ay = y.abs();
    let lg = ln_gamma_right_half(Complex::new(1.0, ay));
    let ln_abs = lg.re - ay.ln();
    let arg = lg.im - PI / 2.0;
    Ok((ln_abs, if y > 0.0 { arg } else { -arg }))
}

/// lnΓ(z) for Re z ≥ 0.5 via Stirling's series after lifting |z| ≥ 10 by
/// the recurrence lnΓ(z) = lnΓ(z+1) − ln z. Relative accuracy ~1e−15.
fn ln_gamma_right_half(z: Complex) -> Complex {
    debug_assert!(z.re >= 0.5);
    // Stirling coefficients B_{2m} / (2m (2m−1)).
    const STIRLING: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        7.0 / 1092.0,
    ];
    let mut shift = Complex::new(0.0, 0.0);
    let mut w = z;
    while w.norm_sqr() < 100.0 {
        shift += w.ln();
        w += 1.0;
    }
    let half_ln_two_pi = 0.918_938_533_204_672_7_f64; // ln(2π)/2
    let mut series = Complex::new(0.0, 0.0);
    let inv_sq = 1.0 / (w * w);
    let mut pow = 1.0 / w;
    for c in STIRLING {
        series += c * pow;
        pow *= inv_sq;
    }
    (w - 0.5) * w.ln() - w + half_ln_two_pi + series - shift
}
