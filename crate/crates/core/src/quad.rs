//! Quadrature helpers: composite trapezoid on stored grids and adaptive
//! Simpson for smooth integrands.

use crate::real::Real;

/// Composite trapezoid of samples `y` on abscissae `x` (same length).
pub fn trapezoid<R: Real>(x: &[R], y: &[R]) -> R {
    assert_eq!(x.len(), y.len());
    let mut s = R::zero();
    for i in 1..x.len() {
        s = s + (x[i] - x[i - 1]) * (y[i] + y[i - 1]) * R::of(0.5);
    }
    s
}

/// Trapezoid-rule node weights for grid `x` (half cells at the ends).
pub fn trapezoid_weights<R: Real>(x: &[R]) -> Vec<R> {
    let n = x.len();
    let mut w = vec![R::zero(); n];
    for i in 1..n {
        let h = (x[i] - x[i - 1]) * R::of(0.5);
        w[i - 1] = w[i - 1] + h;
        w[i] = w[i] + h;
    }
    w
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<R: Real>(f: &impl Fn(R) -> R, a: R, b: R, tol: R) -> R {
    fn simpson<R: Real>(fa: R, fm: R, fb: R, a: R, b: R) -> R {
        (b - a) / R::of(6.0) * (fa + R::of(4.0) * fm + fb)
    }
    fn recurse<R: Real>(
        f: &impl Fn(R) -> R,
        a: R,
        b: R,
        fa: R,
        fm: R,
        fb: R,
        whole: R,
        tol: R,
        depth: usize,
    ) -> R {
        let m = (a + b) * R::of(0.5);
        let lm = (a + m) * R::of(0.5);
        let rm = (m + b) * R::of(0.5);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= R::of(15.0) * tol {
            return left + right + err / R::of(15.0);
        }
        recurse(f, a, m, fa, flm, fm, left, tol * R::of(0.5), depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol * R::of(0.5), depth - 1)
    }
    let m = (a + b) * R::of(0.5);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}
