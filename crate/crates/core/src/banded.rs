//! Banded LU with partial pivoting for the block-tridiagonal Jacobians of
//! the 1D solvers and for shift-invert spectral transforms.
//!
//! Storage follows the LAPACK band convention: entry `(i, j)` with
//! `|i-j| <= band` lives at `rows[band + i - j][j]`, with `band` extra
//! super-diagonals reserved for pivoting fill-in.

/// Banded matrix with equal lower/upper bandwidth.
#[derive(Debug, Clone)]
pub struct Banded {
    pub n: usize,
    pub band: usize,
    /// `(2*band + 1 + band)` rows of length `n`: the extra `band` rows on top
    /// hold pivoting fill.
    rows: Vec<Vec<f64>>,
}

impl Banded {
    pub fn zeros(n: usize, band: usize) -> Self {
        Banded {
            n,
            band,
            rows: vec![vec![0.0; n]; 3 * band + 1],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let b = self.band;
        let diff = i as isize - j as isize;
        if diff.unsigned_abs() > b {
            return 0.0;
        }
        self.rows[(2 * b as isize + diff) as usize][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let b = self.band as isize;
        let diff = i as isize - j as isize;
        debug_assert!(diff.abs() <= b, "entry ({i},{j}) outside band {b}");
        self.rows[(2 * b + diff) as usize][j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let b = self.band as isize;
        let diff = i as isize - j as isize;
        debug_assert!(diff.abs() <= b, "entry ({i},{j}) outside band {b}");
        self.rows[(2 * b + diff) as usize][j] += v;
    }

    /// `y = A x` (used by tests and residual checks).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let b = self.band as isize;
        for i in 0..self.n {
            let mut s = 0.0;
            let jlo = (i as isize - b).max(0) as usize;
            let jhi = ((i as isize + b) as usize).min(self.n - 1);
            for j in jlo..=jhi {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
    }

    /// Factor in place (partial pivoting). Returns the pivot permutation.
    pub fn lu_factor(mut self) -> Result<BandedLu, crate::Error> {
        let n = self.n;
        let b = self.band;
        // widen accessor: during elimination fill extends to 2*band above
        let get = |rows: &Vec<Vec<f64>>, i: usize, j: usize| -> f64 {
            let diff = 2 * b as isize + i as isize - j as isize;
            if diff < 0 || diff as usize >= rows.len() {
                0.0
            } else {
                rows[diff as usize][j]
            }
        };
        let set = |rows: &mut Vec<Vec<f64>>, i: usize, j: usize, v: f64| {
            let diff = 2 * b as isize + i as isize - j as isize;
            debug_assert!(diff >= 0 && (diff as usize) < rows.len());
            rows[diff as usize][j] = v;
        };
        let mut piv = vec![0usize; n];
        for k in 0..n {
            // pivot search in column k, rows k..=min(k+b, n-1)
            let imax = (k + b).min(n - 1);
            let mut p = k;
            let mut best = get(&self.rows, k, k).abs();
            for i in k + 1..=imax {
                let v = get(&self.rows, i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(crate::Error::Eigen(format!(
                    "banded LU: zero pivot column {k}"
                )));
            }
            piv[k] = p;
            if p != k {
                // swap rows k and p across the active band columns
                let jhi = (k + 2 * b).min(n - 1);
                for j in k..=jhi {
                    let a = get(&self.rows, k, j);
                    let c = get(&self.rows, p, j);
                    set(&mut self.rows, k, j, c);
                    set(&mut self.rows, p, j, a);
                }
            }
            let pivot = get(&self.rows, k, k);
            for i in k + 1..=imax {
                let m = get(&self.rows, i, k) / pivot;
                set(&mut self.rows, i, k, m); // store multiplier
                if m != 0.0 {
                    let jhi = (k + 2 * b).min(n - 1);
                    for j in k + 1..=jhi {
                        let v = get(&self.rows, i, j) - m * get(&self.rows, k, j);
                        set(&mut self.rows, i, j, v);
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            band: b,
            rows: self.rows,
            piv,
        })
    }
}

/// Factored form; `solve` applies forward/back substitution.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    band: usize,
    rows: Vec<Vec<f64>>,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let b = self.band;
        let get = |i: usize, j: usize| -> f64 {
            let diff = 2 * b as isize + i as isize - j as isize;
            if diff < 0 || diff as usize >= self.rows.len() {
                0.0
            } else {
                self.rows[diff as usize][j]
            }
        };
        // forward: apply permutation + multipliers
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let imax = (k + b).min(n - 1);
            for i in k + 1..=imax {
                let m = get(i, k);
                if m != 0.0 {
                    x[i] -= m * x[k];
                }
            }
        }
        // back substitution over bandwidth 2b
        for k in (0..n).rev() {
            let jhi = (k + 2 * b).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=jhi {
                s -= get(k, j) * x[j];
            }
            x[k] = s / get(k, k);
        }
    }
}
