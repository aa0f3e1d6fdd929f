//! Built-in oracle suite: closed-form identities and dual-path agreements
//! that catch miscompiled special functions, wrong branch choices, and
//! broken quadrature before any sweep runs.

use anyhow::Result;
use mirror_channel::bogoliubov::{cw_coefficients, numeric_coefficients, thermal_beta_abs_sq};
use mirror_channel::channel::{
    assemble_planewave, planewave_noise_quadrature, s_block_from_pair, s_block_planewave,
};
use mirror_channel::specfun::{gamma_imag, gamma_imag_abs_sq_identity, lambert_w0};
use mirror_channel::trajectory::Trajectory;
use mirror_channel::wavepacket::{packet_normalization, PacketIndex, PacketIntegralOptions};
use std::f64::consts::PI;

struct Check {
    name: &'static str,
    worst: f64,
    bound: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.worst <= self.bound
    }
}

pub fn run(inject_fault: Option<&str>) -> Result<i32> {
    let fault_gamma_branch = match inject_fault {
        None => false,
        Some("gamma-branch") => true,
        Some(other) => {
            eprintln!("usage error: unknown fault `{other}` (supported: gamma-branch)");
            return Ok(2);
        }
    };

    let mut checks = Vec::new();

    // Lambert W defining identity over a log grid.
    let mut worst: f64 = 0.0;
    for k in 0..=80 {
        let x = 10f64.powf(-8.0 + 0.2 * k as f64);
        let w = lambert_w0(x)?;
        worst = worst.max((w * w.exp() - x).abs() / x);
    }
    checks.push(Check {
        name: "lambert-w identity w e^w = x",
        worst,
        bound: 1e-13,
    });

    // Gamma modulus against the closed-form identity.
    let mut worst: f64 = 0.0;
    for k in 0..=60 {
        let y = 10f64
            .powf(-4.0 + k as f64 * (4.0 + 50f64.log10()) / 60.0)
            .min(50.0);
        let lhs = gamma_imag(y)?.norm_sqr();
        let rhs = gamma_imag_abs_sq_identity(y)?;
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    checks.push(Check {
        name: "gamma modulus |Γ(iy)|² y sinh(πy) = π",
        worst,
        bound: 1e-12,
    });

    // Thermal spectrum: |β|² 2πκω′ (e^{2πω/κ} − 1) = 1. The optional fault
    // feeds the check coefficients built with the opposite branch of the
    // (−ω′/κ)^{−iω/κ} logarithm, which must trip it.
    let mut worst: f64 = 0.0;
    for &(omega, omega_prime, kappa) in &[
        (0.5, 0.5, 1.0),
        (1.0, 1.0, 1.0),
        (2.0, 0.3, 0.7),
        (0.4, 5.0, 1.5),
    ] {
        let pair = cw_coefficients(omega, omega_prime, kappa)?;
        let mut beta_sq = pair.beta.norm_sqr();
        if fault_gamma_branch {
            // Opposite branch: the e^{+πω/κ} weight lands on β instead of α.
            beta_sq *= (2.0 * PI * omega / kappa).exp();
        }
        let check = beta_sq * thermal_beta_abs_sq(omega, omega_prime, kappa)?.recip();
        worst = worst.max((check - 1.0).abs());
    }
    checks.push(Check {
        name: "thermal spectrum law for |β|²",
        worst,
        bound: 1e-10,
    });

    // Transmissivity law det T = 1/(2πωκ) on a small grid.
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for k in 0..5 {
            let omega = 0.05 * (20.0f64 / 0.05).powf(i as f64 / 4.0);
            let kappa = 0.05 * (20.0f64 / 0.05).powf(k as f64 / 4.0);
            let det = s_block_planewave(omega, omega, kappa)?.0.det();
            let expect = 1.0 / (2.0 * PI * omega * kappa);
            worst = worst.max((det - expect).abs() / expect);
        }
    }
    checks.push(Check {
        name: "transmissivity law det T = 1/(2πωκ)",
        worst,
        bound: 1e-12,
    });

    // Closed-form block vs the block built entry-wise from coefficients.
    let mut worst: f64 = 0.0;
    for &(omega, omega_prime, kappa) in &[(1.0, 1.0, 1.0), (0.7, 3.0, 1.3), (2.0, 0.2, 0.9)] {
        let fast = s_block_planewave(omega, omega_prime, kappa)?.0;
        let pair = cw_coefficients(omega, omega_prime, kappa)?;
        let gen = s_block_from_pair(pair.alpha, pair.beta).0;
        let scale = fast.max_abs();
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((fast.0[r][c] - gen.0[r][c]).abs() / scale);
            }
        }
    }
    checks.push(Check {
        name: "block closed form vs coefficient assembly",
        worst,
        bound: 1e-12,
    });

    // Noise closed form vs quadrature of the blocks.
    let closed = assemble_planewave(1.0, 1.0, 1e-3, 1e3)?.n;
    let (quad, _) = planewave_noise_quadrature(1.0, 1.0, 1e-3, 1e3)?;
    let scale = closed.max_abs();
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            worst = worst.max((closed.0[r][c] - quad.0[r][c]).abs() / scale);
        }
    }
    checks.push(Check {
        name: "noise closed form vs block quadrature",
        worst,
        bound: 1e-10,
    });

    // Damped-integral coefficients against the closed form.
    let traj = Trajectory::carlitz_willey(1.0)?;
    let numeric = numeric_coefficients(&traj, 1.0, 1.0, 0.1)?;
    let exact = cw_coefficients(1.0, 1.0, 1.0)?;
    let worst = ((numeric.pair.beta.norm() - exact.beta.norm()) / exact.beta.norm())
        .abs()
        .max(((numeric.pair.alpha.norm() - exact.alpha.norm()) / exact.alpha.norm()).abs());
    checks.push(Check {
        name: "damped integrals vs closed-form coefficients",
        worst,
        bound: 0.01,
    });

    // Packet orthonormality.
    let (norm, _) = packet_normalization(
        PacketIndex::new(0, 0, 0.1)?,
        1.0,
        PacketIntegralOptions::default(),
    )?;
    checks.push(Check {
        name: "packet normalization ∫(|α|²−|β|²) dω′ = 1",
        worst: (norm - 1.0).abs(),
        bound: 1e-3,
    });

    let mut failures = 0;
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        if !c.passed() {
            failures += 1;
        }
        println!(
            "{status}  {:<48} worst {:.3e}  (bound {:.1e})",
            c.name, c.worst, c.bound
        );
    }
    if failures > 0 {
        println!("{failures} of {} checks failed", checks.len());
        Ok(1)
    } else {
        println!("all {} checks passed", checks.len());
        Ok(0)
    }
}
