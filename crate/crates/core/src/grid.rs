//! 1D grids with optional clustering around an interior point, plus the cell
//! weights used for finite-volume operators and trapezoid inner products.

use serde::Serialize;

/// A sorted grid on `[0, ell]` with precomputed spacings and node weights.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub x: Vec<f64>,
    /// `h[i] = x[i+1] - x[i]`, length `n-1`.
    pub h: Vec<f64>,
    /// Node weights `w[i]` (half cells at the ends); `sum w = ell`.
    pub w: Vec<f64>,
    pub ell: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn from_nodes(mut x: Vec<f64>, ell: f64) -> Self {
        x.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * ell.max(1.0));
        let n = x.len();
        let h: Vec<f64> = (1..n).map(|i| x[i] - x[i - 1]).collect();
        let mut w = vec![0.0; n];
        w[0] = h[0] / 2.0;
        w[n - 1] = h[n - 2] / 2.0;
        for i in 1..n - 1 {
            w[i] = (h[i - 1] + h[i]) / 2.0;
        }
        Grid { x, h, w, ell }
    }

    pub fn uniform(n: usize, ell: f64) -> Self {
        assert!(n >= 3);
        let x = (0..n).map(|i| ell * i as f64 / (n - 1) as f64).collect();
        Self::from_nodes(x, ell)
    }

    /// Rebuild a grid from already-sorted node positions (used when loading
    /// cached states).
    pub fn from_sorted_nodes(x: Vec<f64>, ell: f64) -> Self {
        assert!(x.len() >= 3);
        Self::from_nodes(x, ell)
    }

    /// Grid clustering `frac` of the nodes in `(center-halfwidth, center+halfwidth)`,
    /// with `center` always included as a node. Falls back to uniform when the
    /// window covers most of the domain, and never lets the outer spacing drop
    /// below the window spacing.
    pub fn graded(n: usize, ell: f64, center: f64, halfwidth: f64, frac: f64) -> Self {
        assert!(n >= 8 && center > 0.0 && center < ell);
        let lo = (center - halfwidth).max(0.0);
        let hi = (center + halfwidth).min(ell);
        let width = hi - lo;
        if width > 0.6 * ell {
            let mut g = Self::uniform(n, ell);
            g.insert_node(center);
            return g;
        }
        let n_win = ((frac * n as f64) as usize).max(8);
        let rest = n - n_win;
        let h_win = width / n_win as f64;
        let out_len = ell - width;
        // outer nodes split by segment length; spacing never finer than the
        // window spacing (hand surplus nodes to the window instead)
        let n_out_max = (out_len / h_win).floor() as usize;
        let (n_out, n_win) = if rest > n_out_max {
            (n_out_max.max(4), n - n_out_max.max(4))
        } else {
            (rest, n_win)
        };
        let n_left = ((n_out as f64 * lo / out_len).round() as usize).clamp(2, n_out - 2);
        let n_right = n_out - n_left;
        let mut x = Vec::with_capacity(n + 1);
        for i in 0..n_left {
            x.push(lo * i as f64 / n_left as f64);
        }
        for i in 0..n_win {
            x.push(lo + width * i as f64 / n_win as f64);
        }
        for i in 0..n_right {
            x.push(hi + (ell - hi) * i as f64 / (n_right - 1).max(1) as f64);
        }
        if *x.last().unwrap() < ell {
            x.push(ell);
        }
        x.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut g = Self::from_nodes(x, ell);
        g.insert_node(center);
        g
    }

    /// Insert a node at `pos`. A nearby interior node (within a quarter of
    /// the local spacing) is moved onto `pos` instead, so no degenerate cell
    /// appears.
    pub fn insert_node(&mut self, pos: f64) {
        let tol = 1e-14 * self.ell.max(1.0);
        if self.x.iter().any(|&xx| (xx - pos).abs() < tol) {
            return;
        }
        let idx = self.x.partition_point(|&xx| xx < pos);
        if idx > 0 && idx < self.x.len() {
            let local_h = self.x[idx] - self.x[idx - 1];
            if idx < self.x.len() - 1 && (self.x[idx] - pos) < 0.25 * local_h {
                self.x[idx] = pos;
            } else if idx > 1 && (pos - self.x[idx - 1]) < 0.25 * local_h {
                self.x[idx - 1] = pos;
            } else {
                self.x.insert(idx, pos);
            }
        } else {
            self.x.insert(idx, pos);
        }
        *self = Self::from_nodes(std::mem::take(&mut self.x), self.ell);
    }

    /// Index of the node at `pos` (within rounding), if any.
    pub fn node_at(&self, pos: f64) -> Option<usize> {
        let tol = 1e-12 * self.ell.max(1.0);
        self.x.iter().position(|&xx| (xx - pos).abs() < tol)
    }

    /// Smallest spacing.
    pub fn h_min(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid inner product of two nodal fields.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.w
            .iter()
            .zip(f.iter().zip(g.iter()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// Trapezoid integral of a nodal field.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.w.iter().zip(f.iter()).map(|(w, a)| w * a).sum()
    }
}
