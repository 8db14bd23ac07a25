//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

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

fn refine<F>(f: &mut F, p: Panel, tol: f64, depth: u32) -> core::result::Result<f64, ()>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm).map_err(|_| ())?;
    let frm = f(rm).map_err(|_| ())?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    if !delta.is_finite() {
        return Err(());
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(());
    }
    let l = refine(
        f,
        Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left },
        0.5 * tol,
        depth - 1,
    )?;
    let r = refine(
        f,
        Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right },
        0.5 * tol,
        depth - 1,
    )?;
    Ok(l + r)
}

/// Integrates `f` over `[a, b]` (either orientation) to absolute tolerance
/// `tol`. Errors from `f` and failure to converge both surface as
/// [`Error::Quadrature`], except domain errors which are passed through.
pub(crate) fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    // a few initial panels so that a symmetric integrand cannot fool the
    // first error estimate
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let flo = if i == 0 { fa } else { f(lo)? };
        let fhi = if i + 1 == PANELS { fb } else { f(hi)? };
        let fmid = f(0.5 * (lo + hi))?;
        let panel = Panel {
            a: lo,
            b: hi,
            fa: flo,
            fm: fmid,
            fb: fhi,
            whole: simpson(lo, hi, flo, fmid, fhi),
        };
        total += refine(&mut f, panel, tol / PANELS as f64, MAX_DEPTH)
            .map_err(|()| Error::Quadrature { a, b, tolerance: tol })?;
    }
    Ok(total)
}
