//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration for the eigenvectors. Deterministic by
//! construction (fixed bisection splits, fixed start vectors), which pins the
//! eigenfunction signs used downstream.

use crate::real::Real;
use crate::{Error, Result};

/// Symmetric tridiagonal matrix: `diag` length `n`, `off` length `n-1`.
#[derive(Debug, Clone)]
pub struct SymTridiag<R> {
    pub diag: Vec<R>,
    pub off: Vec<R>,
}

impl<R: Real> SymTridiag<R> {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `lambda` (LDL^T pivot count).
    pub fn sturm_count(&self, lambda: R) -> usize {
        let n = self.n();
        // pivot guard in the spirit of LAPACK's pivmin
        let off_max = self
            .off
            .iter()
            .fold(R::zero(), |m, &x| m.max(x.abs()))
            .max(R::one());
        let tiny = R::min_positive_value().max(R::epsilon() * R::epsilon() * off_max * off_max);
        let mut count = 0usize;
        let mut q = self.diag[0] - lambda;
        if q < R::zero() {
            count += 1;
        }
        for i in 1..n {
            let q_safe = if q.abs() < tiny {
                if q >= R::zero() {
                    tiny
                } else {
                    -tiny
                }
            } else {
                q
            };
            q = (self.diag[i] - lambda) - self.off[i - 1] * self.off[i - 1] / q_safe;
            if q < R::zero() {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin bounds on the spectrum.
    pub fn bounds(&self) -> (R, R) {
        let n = self.n();
        let mut lo = R::infinity();
        let mut hi = R::neg_infinity();
        for i in 0..n {
            let e_l = if i > 0 { self.off[i - 1].abs() } else { R::zero() };
            let e_r = if i + 1 < n { self.off[i].abs() } else { R::zero() };
            lo = lo.min(self.diag[i] - e_l - e_r);
            hi = hi.max(self.diag[i] + e_l + e_r);
        }
        (lo - R::one(), hi + R::one())
    }

    /// Eigenvalues with indices `first..=last` (ascending), by bisection.
    pub fn eigenvalues_range(&self, first: usize, last: usize) -> Vec<R> {
        let (blo, bhi) = self.bounds();
        let mut out = Vec::with_capacity(last + 1 - first);
        for k in first..=last {
            let (mut a, mut b) = (blo, bhi);
            for _ in 0..200 {
                let mid = (a + b) * R::of(0.5);
                if (b - a) <= R::of(2.0) * R::epsilon() * mid.abs().max(R::one()) {
                    break;
                }
                if self.sturm_count(mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push((a + b) * R::of(0.5));
        }
        out
    }

    /// Eigenvector for an isolated eigenvalue `lambda` by inverse iteration
    /// (tridiagonal LU with partial pivoting), normalized in l2 with first
    /// significant component positive.
    pub fn eigenvector(&self, lambda: R) -> Result<Vec<R>> {
        let n = self.n();
        // deterministic pseudo-random start vector
        let mut v: Vec<R> = (0..n)
            .map(|i| {
                let s = ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0;
                R::of(0.5 + s)
            })
            .collect();
        normalize(&mut v);
        let shift = lambda * (R::one() + R::epsilon() * R::of(16.0))
            + R::epsilon() * R::of(16.0);
        for _ in 0..4 {
            let w = self.solve_shifted(&v, shift)?;
            v = w;
            normalize(&mut v);
        }
        // fix sign: first component of noticeable size positive
        let scale = v.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
        if let Some(&lead) = v.iter().find(|x| x.abs() > scale * R::of(1e-8)) {
            if lead < R::zero() {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
        Ok(v)
    }

    /// Solve `(T - shift I) x = b` by tridiagonal LU with partial pivoting.
    fn solve_shifted(&self, b: &[R], shift: R) -> Result<Vec<R>> {
        let n = self.n();
        // rows: [low, diag, up, up2]
        let mut d: Vec<R> = self.diag.iter().map(|&x| x - shift).collect();
        let mut up: Vec<R> = self.off.clone();
        let mut up2 = vec![R::zero(); n];
        let mut low = self.off.clone();
        let mut x: Vec<R> = b.to_vec();
        for i in 0..n - 1 {
            if low[i].abs() > d[i].abs() {
                // swap rows i, i+1
                {
                    let (a, b) = (d[i], low[i]);
                    d[i] = b;
                    low[i] = a;
                }
                {
                    let (a, b) = (up[i], d[i + 1]);
                    up[i] = b;
                    d[i + 1] = a;
                }
                if i + 1 < n - 1 {
                    let (a, b) = (up2[i], up[i + 1]);
                    up2[i] = b;
                    up[i + 1] = a;
                }
                x.swap(i, i + 1);
            }
            if d[i] == R::zero() {
                d[i] = R::epsilon() * R::of(16.0);
            }
            let m = low[i] / d[i];
            d[i + 1] = d[i + 1] - m * up[i];
            if i + 1 < n - 1 {
                up[i + 1] = up[i + 1] - m * up2[i];
            }
            x[i + 1] = x[i + 1] - m * x[i];
        }
        if d[n - 1].abs() < R::min_positive_value() * R::of(1e4) {
            d[n - 1] = R::epsilon() * R::of(16.0);
        }
        // back substitution
        x[n - 1] = x[n - 1] / d[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - up[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - up[i] * x[i + 1] - up2[i] * x[i + 2]) / d[i];
        }
        if x.iter().any(|t| !t.is_finite()) {
            return Err(Error::Eigen("inverse iteration produced non-finite vector".into()));
        }
        Ok(x)
    }
}

fn normalize<R: Real>(v: &mut [R]) {
    let nrm = v.iter().fold(R::zero(), |s, &x| s + x * x).sqrt();
    if nrm > R::zero() {
        for x in v.iter_mut() {
            *x = *x / nrm;
        }
    }
}

/// Generalized symmetric eigenproblem `T phi = lambda W phi` with diagonal
/// positive `W`: similarity-transform to standard symmetric tridiagonal form
/// and transform the eigenvectors back.
pub struct WeightedTridiag<R> {
    sym: SymTridiag<R>,
    sqrt_w: Vec<R>,
}

impl<R: Real> WeightedTridiag<R> {
    /// `t_diag`, `t_off` give the symmetric stiffness-like matrix `T`;
    /// `w` the positive diagonal weights.
    pub fn new(t_diag: &[R], t_off: &[R], w: &[R]) -> Self {
        let n = t_diag.len();
        let sqrt_w: Vec<R> = w.iter().map(|&x| x.sqrt()).collect();
        let diag: Vec<R> = (0..n).map(|i| t_diag[i] / w[i]).collect();
        let off: Vec<R> = (0..n - 1)
            .map(|i| t_off[i] / (sqrt_w[i] * sqrt_w[i + 1]))
            .collect();
        WeightedTridiag {
            sym: SymTridiag { diag, off },
            sqrt_w,
        }
    }

    pub fn eigenvalues_range(&self, first: usize, last: usize) -> Vec<R> {
        self.sym.eigenvalues_range(first, last)
    }

    /// Eigenvector in the original variables, W-normalized
    /// (`sum w phi^2 = 1`), sign fixed by the first significant component.
    pub fn eigenvector(&self, lambda: R) -> Result<Vec<R>> {
        let mut v = self.sym.eigenvector(lambda)?;
        for (x, sw) in v.iter_mut().zip(self.sqrt_w.iter()) {
            *x = *x / *sw;
        }
        // W-normalize: the transformed vector had unit l2 norm, which already
        // gives sum w phi^2 = 1, but renormalize to guard rounding.
        let nrm = v
            .iter()
            .zip(self.sqrt_w.iter())
            .fold(R::zero(), |s, (&x, &sw)| s + (x * sw) * (x * sw))
            .sqrt();
        for x in v.iter_mut() {
            *x = *x / nrm;
        }
        let scale = v.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
        if let Some(&lead) = v.iter().find(|x| x.abs() > scale * R::of(1e-8)) {
            if lead < R::zero() {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
        Ok(v)
    }
}
