//! Arnoldi iteration for the shift-invert spectral transform used by the
//! direct discretized eigenproblems: Ritz values of `(A - s B)^{-1} B` map
//! back to the eigenvalues of `A x = lambda B x` nearest the shift `s`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Ritz values of the operator `apply` (an `n -> n` linear action) from `m`
/// Arnoldi steps with full re-orthogonalization. Deterministic start vector.
///
/// Returns `(ritz, residual_scale)` where `residual_scale[i]` is the
/// `h_{m+1,m} |e_m^T y_i|` convergence estimate for Ritz pair `i`.
pub fn arnoldi_ritz(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    n: usize,
    m: usize,
) -> (Vec<Complex64>, Vec<f64>) {
    let m = m.min(n);
    let mut vbasis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    // deterministic quasi-random start
    let mut v0: Vec<f64> = (0..n)
        .map(|i| {
            let s = (i as u64)
                .wrapping_mul(0x9E3779B97F4A7C15)
                .rotate_left(17)
                .wrapping_add(0xD1B54A32D192ED03);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5 + 1.0
        })
        .collect();
    normalize(&mut v0);
    vbasis.push(v0);
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut w = vec![0.0; n];
    let mut steps = 0;
    for j in 0..m {
        apply(&vbasis[j], &mut w);
        // modified Gram-Schmidt, two passes
        for _ in 0..2 {
            for (i, vi) in vbasis.iter().enumerate() {
                let c = dot(&w, vi);
                h[(i, j)] += c;
                for (wk, vk) in w.iter_mut().zip(vi.iter()) {
                    *wk -= c * vk;
                }
            }
        }
        let nw = norm(&w);
        h[(j + 1, j)] = nw;
        steps = j + 1;
        if nw < 1e-13 {
            break; // invariant subspace found
        }
        let mut vnext = w.clone();
        for x in vnext.iter_mut() {
            *x /= nw;
        }
        vbasis.push(vnext);
    }
    let k = steps;
    let hk = h.view((0, 0), (k, k)).clone_owned();
    let ritz = hk.complex_eigenvalues();
    // crude convergence scale: the subdiagonal magnitude (uniform, since we
    // do not form eigenvectors of H here)
    let tail = h[(k, k - 1)];
    let res = vec![tail.abs(); ritz.len()];
    (ritz.iter().cloned().collect(), res)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
}
