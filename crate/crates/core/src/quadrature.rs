//! Adaptive Simpson quadrature with Richardson extrapolation.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not reach tolerance {tol:e} within {max_depth} bisections")]
    NonConvergence { tol: f64, max_depth: u32 },
    #[error("integrand is not finite at x = {0}")]
    NonFiniteIntegrand(f64),
}

pub const DEFAULT_MAX_DEPTH: u32 = 48;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64, QuadratureError> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(QuadratureError::NonFiniteIntegrand(x))
    }
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The interval is first split into 8 panels so that narrow features near
/// one end are not missed by the coarse initial estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    const INITIAL: usize = 8;
    let h = (b - a) / INITIAL as f64;
    let mut panels = Vec::with_capacity(INITIAL);
    let mut coarse = 0.0;
    for i in 0..INITIAL {
        let pa = a + h * i as f64;
        let pb = if i + 1 == INITIAL { b } else { a + h * (i + 1) as f64 };
        let fa = eval(&f, pa)?;
        let fm = eval(&f, 0.5 * (pa + pb))?;
        let fb = eval(&f, pb)?;
        let whole = simpson(pa, pb, fa, fm, fb);
        coarse += whole;
        panels.push(Panel { a: pa, b: pb, fa, fm, fb, whole });
    }
    // Absolute budget split across panels by width.
    let abs_tol = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    for p in panels {
        let share = abs_tol * (p.b - p.a) / (b - a);
        total += recurse(&f, p, share, max_depth)?;
    }
    Ok(total)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: u32) -> Result<f64, QuadratureError> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = eval(f, lm)?;
    let frm = eval(f, rm)?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= p.a || m >= p.b {
        return Err(QuadratureError::NonConvergence {
            tol,
            max_depth: DEFAULT_MAX_DEPTH,
        });
    }
    let l = recurse(
        f,
        Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left },
        0.5 * tol,
        depth - 1,
    )?;
    let r = recurse(
        f,
        Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right },
        0.5 * tol,
        depth - 1,
    )?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12, 30).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12, 30).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn exponential() {
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-10, 40).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn sharp_peak() {
        // ∫ 1/(1e-4 + x²) over [-1, 1] = 2·atan(100)/0.01
        let exact = 2.0 * 100f64.atan() / 0.01;
        let v = adaptive_simpson(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 50).unwrap();
        assert!(((v - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn depth_budget_exhaustion() {
        let r = adaptive_simpson(|x: f64| x.abs().sqrt().recip().min(1e12), -1.0, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(QuadratureError::NonConvergence { .. })));
    }

    #[test]
    fn non_finite_integrand() {
        let r = adaptive_simpson(|x: f64| 1.0 / x, 0.0, 1.0, 1e-8, 20);
        assert_eq!(r, Err(QuadratureError::NonFiniteIntegrand(0.0)));
    }
}
