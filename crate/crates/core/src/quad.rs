//! Adaptive Gauss–Kronrod quadrature for real- and complex-valued
//! integrands on finite intervals.
//!
//! The 7/15 pair gives a cheap embedded error estimate per panel; a global
//! worst-panel-first refinement loop drives the total estimate below the
//! requested tolerance. Kronrod nodes are interior, so integrands with
//! integrable endpoint behavior never get evaluated at the endpoints.

use crate::Complex;
use std::collections::BinaryHeap;

// 15-point Kronrod nodes (positive half, descending) and weights, with the
// embedded 7-point Gauss weights. Standard QUADPACK qk15 constants.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_6,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex,
    /// Accumulated absolute error estimate.
    pub abs_error: f64,
    /// Number of integrand evaluations.
    pub evals: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

impl QuadResult {
    pub fn rel_error(&self) -> f64 {
        self.abs_error / self.value.norm().max(f64::MIN_POSITIVE)
    }
}

/// One Gauss–Kronrod 7/15 application on [a, b].
fn kronrod_panel<F: FnMut(f64) -> Complex>(f: &mut F, a: f64, b: f64) -> (Complex, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = fc.norm() * WGK[7];
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1 + f2;
        kronrod += sum * WGK[i];
        resabs += (f1.norm() + f2.norm()) * WGK[i];
        if i % 2 == 1 {
            gauss += sum * WG[i / 2];
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    // Scale the raw difference the way QUADPACK does, so smooth panels are
    // not wildly over-estimated.
    let resabs = resabs * half.abs();
    let scaled = if resabs > 0.0 && err > 0.0 {
        let t = (200.0 * err / resabs).powf(1.5);
        if t < 1.0 {
            resabs * t
        } else {
            err.min(resabs)
        }
    } else {
        err
    };
    (value, scaled.max(err * 1e-4))
}

struct Interval {
    a: f64,
    b: f64,
    value: Complex,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Options for [`adaptive_complex`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial uniform subdivision of the interval; raise this for
    /// oscillatory integrands so the first-pass panels resolve the phase.
    pub initial_panels: usize,
    /// Hard cap on the number of panels.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            initial_panels: 1,
            max_panels: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }

    /// Choose the initial panel count from an upper bound on the total
    /// phase variation (in radians) across the interval, at roughly
    /// 10 Kronrod panels per full turn.
    pub fn oscillatory(total_phase: f64, rel_tol: f64) -> Self {
        let turns = total_phase.abs() / std::f64::consts::TAU;
        QuadOptions {
            abs_tol: 0.0,
            rel_tol,
            initial_panels: (turns.ceil() as usize).max(1),
            max_panels: 4000 + 8 * (turns.ceil() as usize),
        }
    }
}

/// Globally adaptive Gauss–Kronrod integration of a complex integrand.
pub fn adaptive_complex<F: FnMut(f64) -> Complex>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> QuadResult {
    assert!(a.is_finite() && b.is_finite() && b >= a);
    if a == b {
        return QuadResult {
            value: Complex::new(0.0, 0.0),
            abs_error: 0.0,
            evals: 0,
            converged: true,
        };
    }
    let n0 = opts.initial_panels.clamp(1, opts.max_panels.max(1));
    let mut heap = BinaryHeap::with_capacity(n0 + 64);
    let mut evals = 0usize;
    let width = (b - a) / n0 as f64;
    for i in 0..n0 {
        let pa = a + i as f64 * width;
        let pb = if i + 1 == n0 { b } else { pa + width };
        let (v, e) = kronrod_panel(&mut f, pa, pb);
        evals += 15;
        heap.push(Interval {
            a: pa,
            b: pb,
            value: v,
            error: e,
        });
    }
    let mut panels = n0;
    loop {
        let total: Complex = heap.iter().map(|iv| iv.value).sum();
        let total_err: f64 = heap.iter().map(|iv| iv.error).sum();
        let bound = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= bound {
            return QuadResult {
                value: total,
                abs_error: total_err,
                evals,
                converged: true,
            };
        }
        if panels >= opts.max_panels {
            return QuadResult {
                value: total,
                abs_error: total_err,
                evals,
                converged: false,
            };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; accept its estimate.
            let mut rest: Vec<Interval> = heap.into_vec();
            let total: Complex = rest.iter().map(|iv| iv.value).sum::<Complex>() + worst.value;
            let total_err: f64 = rest.iter().map(|iv| iv.error).sum::<f64>();
            rest.push(worst);
            return QuadResult {
                value: total,
                abs_error: total_err,
                evals,
                converged: true,
            };
        }
        let (v1, e1) = kronrod_panel(&mut f, worst.a, mid);
        let (v2, e2) = kronrod_panel(&mut f, mid, worst.b);
        evals += 30;
        panels += 1;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

/// Adaptive integration of a real integrand.
pub fn adaptive_real<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> (f64, f64) {
    let mut f = f;
    let r = adaptive_complex(|x| Complex::new(f(x), 0.0), a, b, opts);
    (r.value.re, r.abs_error)
}

/// Nodes of a composite 15-point Kronrod rule over `panels` equal panels of
/// [a, b]: (abscissa, Kronrod weight, embedded Gauss weight). The Gauss
/// weight is zero on Kronrod-only nodes, so summing f·w_gauss alongside
/// f·w_kronrod yields the embedded lower-order value for error estimation.
pub(crate) fn composite_k15_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64, f64)> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 15);
    for p in 0..panels {
        let center = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (i, &x) in XGK.iter().enumerate() {
            let wk = WGK[i] * half;
            let wg = if i % 2 == 1 { WG[i / 2] * half } else { 0.0 };
            if i == 7 {
                nodes.push((center, wk, WG[3] * half));
            } else {
                nodes.push((center - half * x, wk, wg));
                nodes.push((center + half * x, wk, wg));
            }
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_smooth_function() {
        let (v, e) = adaptive_real(|x| x.sin(), 0.0, PI, QuadOptions::default());
        assert!((v - 2.0).abs() < 1e-12, "∫sin = {v}, err {e}");
    }

    #[test]
    fn integrates_oscillatory_exponential() {
        // ∫₀^L e^{iqx} dx = (e^{iqL} − 1)/(iq)
        let q = 73.0;
        let l = 10.0;
        let r = adaptive_complex(
            |x| Complex::new(0.0, q * x).exp(),
            0.0,
            l,
            QuadOptions::oscillatory(q * l, 1e-12),
        );
        let exact = (Complex::new(0.0, q * l).exp() - 1.0) / Complex::new(0.0, q);
        assert!(
            (r.value - exact).norm() < 1e-11,
            "value {} exact {} err {}",
            r.value,
            exact,
            r.abs_error
        );
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity_via_substitution() {
        // ∫₀¹ x^{−1/2} dx = 2 after x = s².
        let (v, _) = adaptive_real(
            |s| 2.0 * s * (1.0 / (s * s).sqrt()),
            0.0,
            1.0,
            QuadOptions::default(),
        );
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reports_nonconvergence_on_budget() {
        let opts = QuadOptions {
            rel_tol: 1e-14,
            max_panels: 2,
            ..Default::default()
        };
        let r = adaptive_complex(
            |x| Complex::new((40.0 * x).sin() / (x + 1e-3), 0.0),
            0.0,
            1.0,
            opts,
        );
        assert!(!r.converged);
    }
}
