//! Plane-wave Bogoliubov coefficients.
//!
//! For the Carlitz–Willey worldline the coefficients have closed forms built
//! from Γ on the imaginary axis; nonzero β is the particle creation that
//! ultimately powers the channel. Any other worldline goes through the
//! scalar-product overlap integrals on past null infinity, damped by
//! e^{−η|v|} and extrapolated to η → 0.

use crate::quad::{adaptive_complex, QuadOptions};
use crate::specfun::{ln_gamma_imag_parts, theta_phase};
use crate::trajectory::{ray_f_deviation, RayMap, Trajectory};
use crate::{Complex, Error, Result};
use std::f64::consts::PI;

/// Mixing coefficients (α, β) between the out mode at frequency ω and the
/// in mode at frequency ω′.
#[derive(Debug, Clone, Copy)]
pub struct BogoliubovPair {
    pub alpha: Complex,
    pub beta: Complex,
    pub omega: f64,
    pub omega_prime: f64,
}

impl BogoliubovPair {
    /// |α|² − |β|², the transmitted quadrature weight carried by this pair.
    pub fn det_weight(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }
}

/// Result of the damped-integral evaluation of the coefficients.
#[derive(Debug, Clone, Copy)]
pub struct NumericCoefficients {
    pub pair: BogoliubovPair,
    /// Absolute error estimate combining quadrature error and the
    /// η-extrapolation residual.
    pub quad_error: f64,
    /// Set when the worldline is static in the far past and the
    /// free-propagation δ(ω − ω′) part of α was removed analytically; the
    /// returned α is then the regular (scattering) part only.
    pub identity_subtracted: bool,
}

fn require_positive(context: &'static str, pairs: &[(&'static str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(Error::domain(
                context,
                format!("{name} must be strictly positive and finite, got {v}"),
            ));
        }
    }
    Ok(())
}

/// Closed-form |β_{ωω′}|² for the Carlitz–Willey worldline,
/// 1 / (2πκ ω′ (e^{2πω/κ} − 1)).
///
/// Derived algebraically from the closed-form coefficients via
/// |Γ(iy)|² = π/(y sinh πy); independent of the Γ code path, so it doubles
/// as the thermal-spectrum oracle.
pub fn thermal_beta_abs_sq(omega: f64, omega_prime: f64, kappa: f64) -> Result<f64> {
    require_positive(
        "thermal_beta_abs_sq",
        &[
            ("omega", omega),
            ("omega_prime", omega_prime),
            ("kappa", kappa),
        ],
    )?;
    Ok(1.0 / (2.0 * PI * kappa * omega_prime * (2.0 * PI * omega / kappa).exp_m1()))
}

/// Closed-form Carlitz–Willey coefficients.
///
/// Moduli follow the thermal weights |α| = A e^{+πω/2κ}, |β| = A e^{−πω/2κ}
/// with A = √(ω/ω′) |Γ(iω/κ)| / (2πκ), evaluated through the log-Gamma code
/// path (the closed-form modulus identity stays available as an independent
/// cross-check). The overall phases are fixed so that the symplectic block
/// assembled entry-wise from (α, β) coincides with the closed-form block in
/// the channel module: α carries e^{−iθ} and β carries −e^{+iθ} with
/// θ = (ω/κ) ln(ω′/κ) − arg Γ(iω/κ). Only the moduli and the product αβ
/// enter any channel quantity.
pub fn cw_coefficients(omega: f64, omega_prime: f64, kappa: f64) -> Result<BogoliubovPair> {
    require_positive(
        "cw_coefficients",
        &[
            ("omega", omega),
            ("omega_prime", omega_prime),
            ("kappa", kappa),
        ],
    )?;
    let y = omega / kappa;
    let (ln_abs_gamma, _) = ln_gamma_imag_parts(y)?;
    let theta = theta_phase(omega, omega_prime, kappa)?;
    let ln_a = ln_abs_gamma + 0.5 * (omega / omega_prime).ln() - (2.0 * PI * kappa).ln();
    let abs_alpha = (ln_a + PI * y / 2.0).exp();
    let abs_beta = (ln_a - PI * y / 2.0).exp();
    let phase = Complex::from_polar(1.0, -theta);
    Ok(BogoliubovPair {
        alpha: abs_alpha * phase,
        beta: -abs_beta * phase.conj(),
        omega,
        omega_prime,
    })
}

/// Damped overlap integrals at a fixed damping η.
///
/// Returns (Iα, Iβ, abs quadrature error, identity_subtracted) where
/// α = √(ω′/ω)/(2π) · Iα and likewise for β. For past-static worldlines the
/// integrand has the free part removed, i.e.
/// Iα = ∫ dv [e^{−iω f(v)} − e^{−iω(v+b)}] e^{+iω′v − η|v|},
/// which kills the δ(ω−ω′) contribution of α exactly and removes from β only
/// a term that vanishes in the η → 0 limit.
pub(crate) fn damped_overlap_integrals(
    traj: &Trajectory,
    omega: f64,
    omega_prime: f64,
    eta: f64,
) -> Result<(Complex, Complex, f64, bool)> {
    damped_overlap_integrals_tol(traj, omega, omega_prime, eta, 1e-9)
}

pub(crate) fn damped_overlap_integrals_tol(
    traj: &Trajectory,
    omega: f64,
    omega_prime: f64,
    eta: f64,
    rel_tol: f64,
) -> Result<(Complex, Complex, f64, bool)> {
    let horizon = traj.horizon_v0();
    let past_static = traj.past_static_offset();
    let mut v_min = -45.0 / eta;
    let v_max = horizon.unwrap_or(45.0 / eta);
    if past_static.is_some() {
        // The subtracted integrand only has support where the ray-map
        // deviation is resolvable.
        match traj.deviation_support() {
            crate::trajectory::DeviationSupport::Empty => {
                return Ok((Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), 0.0, true));
            }
            crate::trajectory::DeviationSupport::From(v_s) => {
                v_min = v_min.max(v_s);
            }
            crate::trajectory::DeviationSupport::Unknown => {}
        }
        if v_min >= v_max {
            return Ok((Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), 0.0, true));
        }
    }

    let subtracted = past_static.is_some();
    let f_map = RayMap::f_of_v(traj.clone());
    // e^{−iω f(v)}, with the free part e^{−iω(v+b)} removed when subtracting.
    let reflected = |v: f64| -> Result<Complex> {
        if let Some(b) = past_static {
            // e^{−iω(v+b)} (e^{−iωΔ(v)} − 1), Δ = f(v) − v − b, cancellation-free.
            let dev = ray_f_deviation(traj, v)?;
            let x = -omega * dev;
            let em1 = Complex::new(-2.0 * (0.5 * x).sin().powi(2), x.sin());
            Ok(Complex::from_polar(1.0, -omega * (v + b)) * em1)
        } else {
            let f = crate::trajectory::ray_f(&f_map, v)?;
            Ok(Complex::from_polar(1.0, -omega * f))
        }
    };

    let quad_err = std::cell::Cell::new(0.0_f64);
    let mut alpha_i = Complex::new(0.0, 0.0);
    let mut beta_i = Complex::new(0.0, 0.0);

    // Integrand failures are routed out through this cell so the quadrature
    // engine keeps a plain f64 -> Complex signature.
    let fail: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    {
        let run = |a: f64, b: f64, sign_omega_prime: f64, turns: f64| -> Complex {
            let opts = QuadOptions {
                rel_tol,
                abs_tol: 1e-13 * (b - a).max(1.0),
                initial_panels: ((turns.abs() / std::f64::consts::TAU).ceil() as usize + 2).max(4),
                max_panels: 60_000,
            };
            let r = adaptive_complex(
                |v| {
                    if fail.borrow().is_some() {
                        return Complex::new(0.0, 0.0);
                    }
                    match reflected(v) {
                        Ok(w) => {
                            let phase =
                                Complex::from_polar(1.0, sign_omega_prime * omega_prime * v);
                            w * phase * (-eta * v.abs()).exp()
                        }
                        Err(e) => {
                            *fail.borrow_mut() = Some(e);
                            Complex::new(0.0, 0.0)
                        }
                    }
                },
                a,
                b,
                opts,
            );
            quad_err.set(quad_err.get() + r.abs_error);
            r.value
        };

        if let Some(v0) = horizon {
            // Near-horizon wedge in log coordinates r = v0 − v (the phase of
            // the reflected wave diverges logarithmically there), then the
            // outer stretch directly in v.
            let r_split = ((v0 - v_min) * 0.5).min(1.0);
            let tau_min = -52.0_f64;
            let tau_max = r_split.ln();
            for sign in [1.0, -1.0] {
                let opts = QuadOptions {
                    rel_tol,
                    abs_tol: 1e-13,
                    initial_panels: ((tau_max - tau_min) * (omega / 3.0 + 0.3)).ceil() as usize + 4,
                    max_panels: 60_000,
                };
                let r = adaptive_complex(
                    |tau| {
                        if fail.borrow().is_some() {
                            return Complex::new(0.0, 0.0);
                        }
                        let rr = tau.exp();
                        let v = v0 - rr;
                        match reflected(v) {
                            Ok(w) => {
                                let phase = Complex::from_polar(1.0, sign * omega_prime * v);
                                w * phase * (-eta * v.abs()).exp() * rr
                            }
                            Err(e) => {
                                *fail.borrow_mut() = Some(e);
                                Complex::new(0.0, 0.0)
                            }
                        }
                    },
                    tau_min,
                    tau_max,
                    opts,
                );
                quad_err.set(quad_err.get() + r.abs_error);
                if sign > 0.0 {
                    alpha_i += r.value;
                } else {
                    beta_i += r.value;
                }
            }
            let outer_hi = v0 - r_split;
            if outer_hi > v_min {
                let rate = omega_prime + omega * 2.0 / r_split;
                let turns = (outer_hi - v_min) * rate;
                alpha_i += run(v_min, outer_hi, 1.0, turns);
                beta_i += run(v_min, outer_hi, -1.0, turns);
            }
        } else {
            let rate = omega_prime + omega * 2.0;
            let turns = (v_max - v_min) * rate;
            alpha_i += run(v_min, v_max, 1.0, turns);
            beta_i += run(v_min, v_max, -1.0, turns);
        }
    }

    if let Some(e) = fail.into_inner() {
        return Err(e);
    }
    // Damping-tail truncation bound.
    let quad_err = quad_err.get() + 2.0 * (-45.0_f64).exp() / eta;
    Ok((alpha_i, beta_i, quad_err, subtracted))
}

/// Richardson extrapolation of a first-order-in-η sequence F(η₀ 2^{−k}),
/// ordered from the largest η to the smallest. Returns the extrapolated
/// value and the last-stage residual.
pub(crate) fn richardson_eta(values: &[Complex]) -> (Complex, f64) {
    let n = values.len();
    debug_assert!(n >= 2);
    // Reorder so index k corresponds to η halved k times; eliminate η^m.
    let mut col: Vec<Complex> = values.to_vec();
    let mut prev_best = col[col.len() - 1];
    for m in 1..n {
        let fac = (2.0f64).powi(m as i32) - 1.0;
        let mut next = Vec::with_capacity(col.len() - 1);
        for k in 0..col.len() - 1 {
            // col[k] at η, col[k+1] at η/2.
            next.push(col[k + 1] + (col[k + 1] - col[k]) / fac);
        }
        if m == n - 1 {
            prev_best = col[col.len() - 1];
        }
        col = next;
    }
    let best = col[0];
    (best, (best - prev_best).norm())
}

/// Bogoliubov coefficients for an arbitrary worldline via damped overlap
/// integrals on past null infinity, extrapolated to zero damping.
///
/// `damping` sets the leading damping η₀ = damping · max(ω, ω′); the η → 0
/// limit is taken by 4-term Richardson extrapolation over η₀ · 2^{−k}.
/// For worldlines static in the far past the returned α is the regular part
/// with the free δ(ω − ω′) contribution removed (see
/// [`NumericCoefficients::identity_subtracted`]).
pub fn numeric_coefficients(
    traj: &Trajectory,
    omega: f64,
    omega_prime: f64,
    damping: f64,
) -> Result<NumericCoefficients> {
    require_positive(
        "numeric_coefficients",
        &[
            ("omega", omega),
            ("omega_prime", omega_prime),
            ("damping", damping),
        ],
    )?;
    let eta0 = damping * omega.max(omega_prime);
    let mut alphas = Vec::with_capacity(4);
    let mut betas = Vec::with_capacity(4);
    let mut quad_err = 0.0;
    let mut subtracted = false;
    for k in 0..4 {
        let eta = eta0 * (2.0f64).powi(-k);
        let (a, b, e, s) = damped_overlap_integrals(traj, omega, omega_prime, eta)?;
        alphas.push(a);
        betas.push(b);
        quad_err += e;
        subtracted = s;
    }
    let (alpha_i, res_a) = richardson_eta(&alphas);
    let (beta_i, res_b) = richardson_eta(&betas);
    let prefactor = (omega_prime / omega).sqrt() / (2.0 * PI);
    let scale = alpha_i.norm().max(beta_i.norm());
    let residual = res_a + res_b;
    if scale > 0.0 && residual > 0.1 * scale && residual > 1e3 * quad_err {
        return Err(Error::NoConvergence {
            context: "numeric_coefficients eta extrapolation",
            residual: residual * prefactor,
            tolerance: 0.1 * scale * prefactor,
        });
    }
    Ok(NumericCoefficients {
        pair: BogoliubovPair {
            alpha: prefactor * alpha_i,
            beta: prefactor * beta_i,
            omega,
            omega_prime,
        },
        quad_error: prefactor * (quad_err + residual),
        identity_subtracted: subtracted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Trajectory;

    #[test]
    fn thermal_point_value() {
        // |β|² at ω = ω′ = κ = 1 equals 1/(2π(e^{2π} − 1)) ≈ 2.978e−4.
        let closed = thermal_beta_abs_sq(1.0, 1.0, 1.0).unwrap();
        assert!((closed - 2.978e-4).abs() < 5e-7);
        let pair = cw_coefficients(1.0, 1.0, 1.0).unwrap();
        let rel = (pair.beta.norm_sqr() - closed).abs() / closed;
        assert!(rel < 1e-12, "|β|² off by {rel:e}");
    }

    #[test]
    fn thermal_spectrum_independent_of_omega_prime() {
        // |β|² ω′ depends only on (ω, κ).
        for &(omega, kappa) in &[(0.5, 1.0), (1.0, 1.0), (2.0, 0.7), (0.3, 2.0)] {
            let reference = 1.0 / (2.0 * PI * kappa * (2.0 * PI * omega / kappa).exp_m1());
            for &omega_prime in &[0.1, 1.0, 7.3, 40.0] {
                let pair = cw_coefficients(omega, omega_prime, kappa).unwrap();
                let val = pair.beta.norm_sqr() * omega_prime;
                assert!(
                    (val - reference).abs() / reference < 1e-10,
                    "ω={omega} κ={kappa} ω'={omega_prime}"
                );
            }
        }
    }

    #[test]
    fn alpha_beta_ratio_is_boltzmann_like() {
        for &(omega, omega_prime, kappa) in &[
            (1.0, 1.0, 1.0),
            (0.4, 2.0, 1.3),
            (2.5, 0.3, 0.8),
            (1.7, 5.0, 2.2),
            (0.9, 0.9, 0.35),
        ] {
            let pair = cw_coefficients(omega, omega_prime, kappa).unwrap();
            let ratio = pair.alpha.norm() / pair.beta.norm();
            let expect = (PI * omega / kappa).exp();
            assert!(
                (ratio - expect).abs() / expect < 1e-12,
                "ratio {ratio} vs {expect}"
            );
        }
    }

    #[test]
    fn moduli_scale_inversely_with_lambda() {
        // Joint rescaling (ω, ω′, κ) → λ(ω, ω′, κ) divides both moduli by λ
        // (direct evaluation of the closed form: the 1/√(ωω′) prefactor and
        // the ω/κ weight contribute λ^{−1} in total, everything else is a
        // function of the invariant ratios).
        let (omega, omega_prime, kappa) = (0.7, 1.9, 1.1);
        let base = cw_coefficients(omega, omega_prime, kappa).unwrap();
        for &lambda in &[0.1, 2.0, 50.0] {
            let scaled =
                cw_coefficients(lambda * omega, lambda * omega_prime, lambda * kappa).unwrap();
            assert!(
                (scaled.alpha.norm() * lambda - base.alpha.norm()).abs() / base.alpha.norm()
                    < 1e-12
            );
            assert!(
                (scaled.beta.norm() * lambda - base.beta.norm()).abs() / base.beta.norm() < 1e-12
            );
        }
    }

    #[test]
    fn zero_frequency_rejected() {
        assert!(cw_coefficients(0.0, 1.0, 1.0).is_err());
        assert!(cw_coefficients(1.0, 0.0, 1.0).is_err());
        let traj = Trajectory::carlitz_willey(1.0).unwrap();
        assert!(numeric_coefficients(&traj, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn numeric_matches_analytic_on_cw() {
        let traj = Trajectory::carlitz_willey(1.0).unwrap();
        for &(omega, omega_prime) in &[(1.0, 1.0), (1.0, 0.5)] {
            let numeric = numeric_coefficients(&traj, omega, omega_prime, 0.1).unwrap();
            assert!(!numeric.identity_subtracted);
            let exact = cw_coefficients(omega, omega_prime, 1.0).unwrap();
            let rel_b = (numeric.pair.beta.norm() - exact.beta.norm()).abs() / exact.beta.norm();
            let rel_a = (numeric.pair.alpha.norm() - exact.alpha.norm()).abs() / exact.alpha.norm();
            assert!(
                rel_b < 0.01,
                "ω={omega} ω'={omega_prime}: |β| off {rel_b:.2e}"
            );
            assert!(
                rel_a < 0.01,
                "ω={omega} ω'={omega_prime}: |α| off {rel_a:.2e}"
            );
        }
    }

    #[test]
    fn numeric_converges_first_order_in_damping() {
        // |F(η) − exact| should drop by roughly 2 per η halving.
        let traj = Trajectory::carlitz_willey(1.0).unwrap();
        let exact = cw_coefficients(1.0, 1.0, 1.0).unwrap().beta.norm();
        let mut errors = Vec::new();
        for k in 0..4 {
            let eta = 0.2 * (2.0f64).powi(-k);
            let (_, beta_i, _, _) = damped_overlap_integrals(&traj, 1.0, 1.0, eta).unwrap();
            let beta = beta_i.norm() / (2.0 * PI);
            errors.push((beta - exact).abs());
        }
        for w in errors.windows(2) {
            assert!(w[1] < w[0] / 1.7, "errors not first order: {errors:?}");
        }
    }

    #[test]
    fn static_mirror_creates_nothing() {
        let traj = Trajectory::static_mirror(0.3);
        for &(omega, omega_prime) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let numeric = numeric_coefficients(&traj, omega, omega_prime, 0.1).unwrap();
            assert!(numeric.identity_subtracted);
            // The subtracted integrand vanishes identically: β = 0 and the
            // regular part of α is zero too.
            assert_eq!(numeric.pair.beta.norm(), 0.0);
            assert_eq!(numeric.pair.alpha.norm(), 0.0);
        }
    }

    #[test]
    fn darcx_moderate_point_is_stable() {
        // Value stable under halving of the η floor.
        let traj = Trajectory::darcx(0.5, 1.0).unwrap();
        let a = numeric_coefficients(&traj, 0.1, 0.1, 0.1).unwrap();
        let b = numeric_coefficients(&traj, 0.1, 0.1, 0.05).unwrap();
        let rel = (a.pair.beta.norm() - b.pair.beta.norm()).abs() / a.pair.beta.norm();
        assert!(rel < 1e-3, "β drifted by {rel:.2e} under η halving");
        assert!(a.pair.beta.norm() > 0.0);
        assert!(a.identity_subtracted);
    }
}
