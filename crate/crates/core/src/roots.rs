//! Bracketing root finders for monotone scalar maps.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` where `g(lo)` and `g(hi)` have opposite signs.
///
/// Stops when the bracket is narrower than `xtol` or the midpoint stops
/// moving. Returns the final bracket.
pub fn bisect<G: FnMut(f64) -> f64>(
    mut g: G,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let mut glo = g(lo);
    let ghi = g(hi);
    if glo == 0.0 {
        return Ok((lo, lo));
    }
    if ghi == 0.0 {
        return Ok((hi, hi));
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSolutionInBracket(format!(
            "no sign change on [{lo}, {hi}]: g = {glo}, {ghi}"
        )));
    }
    for _ in 0..max_iter {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok((mid, mid));
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Newton iteration safeguarded by a sign-change bracket.
///
/// `gd` returns `(g(x), g'(x))`. A Newton step that leaves the bracket or
/// fails to halve it is replaced by a bisection step.
pub fn newton_bracketed<G: FnMut(f64) -> (f64, f64)>(
    mut gd: G,
    mut lo: f64,
    mut hi: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (glo, _) = gd(lo);
    let (ghi, _) = gd(hi);
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSolutionInBracket(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    let increasing = ghi > 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut width = hi - lo;
    for _ in 0..max_iter {
        let (gx, dg) = gd(x);
        if gx.abs() <= ftol {
            return Ok(x);
        }
        if (gx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - gx / dg;
        let next = if dg != 0.0 && newton > lo && newton < hi && (hi - lo) < 0.5 * width {
            newton
        } else {
            0.5 * (lo + hi)
        };
        width = hi - lo;
        if next == x || hi <= lo {
            return Ok(x);
        }
        x = next;
    }
    Ok(x)
}

/// Expands `hi` geometrically from `start` until `pred(hi)` holds.
pub fn expand_until<P: FnMut(f64) -> bool>(start: f64, factor: f64, max_iter: usize, mut pred: P) -> Option<f64> {
    let mut x = start;
    for _ in 0..max_iter {
        if pred(x) {
            return Some(x);
        }
        x *= factor;
        if !x.is_finite() {
            return None;
        }
    }
    None
}

/// Illinois-modified regula falsi; stops once `|g| <= ftol` or the bracket
/// collapses. Returns the best abscissa found.
pub fn illinois<G: FnMut(f64) -> f64>(mut g: G, mut lo: f64, mut hi: f64, ftol: f64, max_iter: usize) -> Result<f64> {
    let mut glo = g(lo);
    let mut ghi = g(hi);
    if glo.abs() <= ftol {
        return Ok(lo);
    }
    if ghi.abs() <= ftol {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSolutionInBracket(format!(
            "no sign change on [{lo}, {hi}]: g = {glo}, {ghi}"
        )));
    }
    let mut side = 0i8;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        x = (lo * ghi - hi * glo) / (ghi - glo);
        if !(x > lo.min(hi) && x < lo.max(hi)) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if gx.abs() <= ftol || x == lo || x == hi {
            return Ok(x);
        }
        if gx.signum() == ghi.signum() {
            hi = x;
            ghi = gx;
            if side == -1 {
                glo *= 0.5;
            }
            side = -1;
        } else {
            lo = x;
            glo = gx;
            if side == 1 {
                ghi *= 0.5;
            }
            side = 1;
        }
    }
    Ok(x)
}
