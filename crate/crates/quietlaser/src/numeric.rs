//! Small numeric helpers shared across modules: stable sinh/cosh ratio
//! functions and a safeguarded Newton/bisection root finder.

use num_complex::Complex64;

/// sinh(z)/z, stable down to z = 0.
pub(crate) fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// (cosh(z) − 1)/z², stable down to z = 0.
///
/// Uses the identity cosh(z) − 1 = 2 sinh²(z/2) to avoid cancellation.
pub(crate) fn coshm1c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(0.5, 0.0) + z2 / 24.0 + z2 * z2 / 720.0
    } else {
        let s = (z / 2.0).sinh();
        2.0 * s * s / (z * z)
    }
}

/// Take the real part of a value that is real on physical grounds,
/// panicking if the imaginary residue is not negligible.
pub(crate) fn demand_real(z: Complex64, context: &str) -> f64 {
    let scale = z.re.abs().max(1.0e-300);
    assert!(
        z.im.abs() <= 1e-12 * scale.max(1.0),
        "{context}: imaginary residue {} on value {}",
        z.im,
        z.re
    );
    z.re
}

/// Safeguarded Newton iteration with a bisection fallback.
///
/// `f` returns (value, derivative). The root must be bracketed by
/// `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`. Returns `None` after `max_iter`
/// iterations without reaching `tol` on the bracket width or residual.
pub(crate) fn newton_bisect<F>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Option<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let (v, dv) = f(x);
        if v == 0.0 {
            return Some(x);
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol {
            return Some(0.5 * (lo + hi));
        }
        let newton = x - v / dv;
        x = if dv != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinhc_branches_agree() {
        // straddle the series cutoff
        for &r in &[0.9e-4, 1.1e-4] {
            let z = Complex64::new(r, 0.0);
            let direct = z.sinh() / z;
            assert!((sinhc(z) - direct).norm() < 1e-14);
        }
        let z = Complex64::new(0.0, 2.0);
        assert!((sinhc(z).re - 2.0_f64.sin() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn coshm1c_matches_direct() {
        let z = Complex64::new(0.3, 0.0);
        let direct = (z.cosh() - 1.0) / (z * z);
        assert!((coshm1c(z) - direct).norm() < 1e-14);
        assert!((coshm1c(Complex64::new(0.0, 0.0)).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn newton_bisect_finds_cubic_root() {
        let f = |x: f64| (x * x * x - 2.0, 3.0 * x * x);
        let root = newton_bisect(f, 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((root - 2.0_f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn newton_bisect_survives_flat_derivative() {
        // f'(0) = 0; the bisection fallback must carry the iteration
        let f = |x: f64| (x * x * x, 3.0 * x * x);
        let root = newton_bisect(f, -1.0, 2.0, 1e-13, 200).unwrap();
        assert!(root.abs() < 1e-6);
    }
}
