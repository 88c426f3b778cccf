//! Bracketed scalar root finding: bisection, Brent, and Newton polish.

use crate::real::Real;
use crate::{Error, Result};

/// Bisect `f` on `[lo, hi]` down to absolute width `tol`.
///
/// Requires a sign change on the bracket. Deterministic: always splits at the
/// midpoint, so identical inputs give bit-identical roots.
pub fn bisect<R: Real>(mut f: impl FnMut(R) -> R, mut lo: R, mut hi: R, tol: R) -> Result<R> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == R::zero() {
        return Ok(lo);
    }
    if fhi == R::zero() {
        return Ok(hi);
    }
    if (flo > R::zero()) == (fhi > R::zero()) {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    for _ in 0..(4 * 1024) {
        let mid = (lo + hi) * R::of(0.5);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == R::zero() {
            return Ok(mid);
        }
        if (fm > R::zero()) == (flo > R::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * R::of(0.5))
}

/// Brent's method on a sign-changing bracket, to a combined absolute
/// tolerance `tol` (machine-epsilon scaled internally).
pub fn brent<R: Real>(mut f: impl FnMut(R) -> R, a0: R, b0: R, tol: R) -> Result<R> {
    let (mut a, mut b) = (a0, b0);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == R::zero() {
        return Ok(a);
    }
    if fb == R::zero() {
        return Ok(b);
    }
    if (fa > R::zero()) == (fb > R::zero()) {
        return Err(Error::Bracket(format!(
            "no sign change on [{a0}, {b0}]: f(a)={fa}, f(b)={fb}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..(4 * 1024) {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let eps = R::epsilon();
        let tol1 = R::of(2.0) * eps * b.abs() + R::of(0.5) * tol;
        let xm = (c - b) * R::of(0.5);
        if xm.abs() <= tol1 || fb == R::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = R::of(2.0) * xm * s;
                q = R::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (R::of(2.0) * xm * qq * (qq - r) - (b - a) * (r - R::one()));
                q = (qq - R::one()) * (r - R::one()) * (s - R::one());
            }
            if p > R::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = R::of(3.0) * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if R::of(2.0) * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = b + if d.abs() > tol1 {
            d
        } else if xm > R::zero() {
            tol1
        } else {
            -tol1
        };
        fb = f(b);
        if (fb > R::zero()) == (fc > R::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// A few Newton steps from `x0`, guarded to stay inside `[lo, hi]` and to
/// never increase the residual (double roots defeat plain Newton).
pub fn newton_polish<R: Real>(
    mut f: impl FnMut(R) -> (R, R),
    x0: R,
    lo: R,
    hi: R,
    steps: usize,
) -> R {
    let mut x = x0;
    let (mut v, mut dv) = f(x);
    for _ in 0..steps {
        if dv == R::zero() || !dv.is_finite() {
            break;
        }
        let next = x - v / dv;
        if !(next >= lo && next <= hi) || !next.is_finite() {
            break;
        }
        let (nv, ndv) = f(next);
        if nv.abs() >= v.abs() {
            break;
        }
        x = next;
        v = nv;
        dv = ndv;
    }
    x
}

/// Expand `hi` geometrically until `f` changes sign against `f(lo)`, then
/// Brent. `max_hi` caps the expansion.
pub fn bracket_and_solve<R: Real>(
    mut f: impl FnMut(R) -> R,
    lo: R,
    hi0: R,
    max_hi: R,
    tol: R,
) -> Result<R> {
    let flo = f(lo);
    let mut hi = hi0;
    let mut fhi = f(hi);
    while (fhi > R::zero()) == (flo > R::zero()) {
        hi = hi * R::of(2.0);
        if hi > max_hi {
            return Err(Error::Bracket(format!(
                "no sign change up to {max_hi}: f({lo})={flo}, f({hi})={fhi}"
            )));
        }
        fhi = f(hi);
    }
    brent(&mut f, lo, hi, tol)
}
