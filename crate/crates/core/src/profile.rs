//! The layered reduced-limit steady state: two outer boundary-value problems
//! `d V'' + G_pm(V) = 0` joined at the layer position `x_star` with value
//! `v_hat` and a C^1 slope match, solved by two-sided RK4 shooting with a
//! coarse-scan seed and a 2x2 Newton on (position mismatch, slope mismatch).

use crate::grid::Grid;
use crate::kinetics::{kinetics, ModelParams};
use crate::nullcline::{fold_points, Branch, NullclineBranches};
use crate::{Error, Result};
use serde::Serialize;

/// Outer reduced field on one branch: `G_i(v) = g(h_i(v), v)`.
pub struct OuterBranchField<'a> {
    pub branch: Branch,
    branches: &'a NullclineBranches<f64>,
    a: f64,
    sigma: f64,
}

impl<'a> OuterBranchField<'a> {
    pub fn new(branches: &'a NullclineBranches<f64>, branch: Branch, a: f64, sigma: f64) -> Self {
        OuterBranchField {
            branch,
            branches,
            a,
            sigma,
        }
    }

    /// `G_i(v) = h_i(v) - h_i(v) v / (1 + h_i(v)^2)`.
    pub fn eval(&self, v: f64) -> Result<f64> {
        let u = self.branches.eval(v, self.branch)?;
        Ok(kinetics(u, v, self.a, self.sigma)?.g)
    }
}

/// The reduced layered solution and the data needed downstream.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedProfile {
    pub x_star: f64,
    pub v_hat: f64,
    /// Storage grid (graded, `x_star` is a node).
    pub grid: Grid,
    /// Continuous inhibitor profile on the grid.
    pub v: Vec<f64>,
    /// dV/dx on the grid.
    pub v_prime: Vec<f64>,
    pub slope_mismatch: f64,
    pub v0: f64,
    pub v_ell: f64,
    pub a: f64,
    pub sigma: f64,
    pub d: f64,
    pub ell: f64,
    #[serde(skip)]
    pub branches: NullclineBranches<f64>,
}

/// One-sided activator value at the layer.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum UStar {
    Value(f64),
    Jump { left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy)]
struct ShotResult {
    x_cross: f64,
    slope: f64,
}

struct Shooter<'a> {
    field: OuterBranchField<'a>,
    d: f64,
    v_hat: f64,
    span: f64,
    steps: usize,
}

impl<'a> Shooter<'a> {
    /// Integrate `V'' = -G(V)/d` from `(start_value, 0)` and return the
    /// coordinate where `V` crosses `v_hat` together with the slope there.
    /// For the minus branch `V` rises toward `v_hat`; the plus-branch shot is
    /// run in the reflected coordinate so it also rises.
    fn shoot(&self, start_value: f64) -> Result<ShotResult> {
        let h = self.span / self.steps as f64;
        let mut y = [start_value, 0.0];
        let mut x = 0.0;
        let rising = true;
        for _ in 0..self.steps * 4 {
            let y_prev = y;
            let x_prev = x;
            y = self.rk4_step(y, h)?;
            x += h;
            if rising && y[0] >= self.v_hat {
                // bisect the step for the crossing
                let (mut t_lo, mut t_hi) = (0.0_f64, h);
                let mut ylo = y_prev;
                for _ in 0..64 {
                    let tm = 0.5 * (t_lo + t_hi);
                    let ym = self.rk4_step_from(ylo, tm - t_lo)?;
                    if ym[0] >= self.v_hat {
                        t_hi = tm;
                    } else {
                        t_lo = tm;
                        ylo = ym;
                    }
                    if t_hi - t_lo < 1e-15 * self.span {
                        break;
                    }
                }
                let t = 0.5 * (t_lo + t_hi);
                let yc = self.rk4_step_from(ylo, t - t_lo)?;
                return Ok(ShotResult {
                    x_cross: x_prev + t,
                    slope: yc[1],
                });
            }
            if x > 4.0 * self.span {
                break;
            }
        }
        Err(Error::Bracket(format!(
            "shot from V = {start_value} never reached v_hat = {}",
            self.v_hat
        )))
    }

    fn rk4_step(&self, y: [f64; 2], h: f64) -> Result<[f64; 2]> {
        self.rk4_step_from(y, h)
    }

    fn rk4_step_from(&self, y: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let f = |y: [f64; 2]| -> Result<[f64; 2]> {
            let v = y[0].min(self.field.branches.v_hi - 1e-13).max(1e-12);
            Ok([y[1], -self.field.eval(v)? / self.d])
        };
        let k1 = f(y)?;
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]])?;
        Ok([
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ])
    }
}

/// Solve the matched two-sided problem. `tol` bounds the final slope and
/// position mismatches (relative to their scales).
pub fn solve_reduced(params: &ModelParams<f64>, tol: f64) -> Result<ReducedProfile> {
    params.validate()?;
    let (a, sigma, d, ell) = (params.a, params.sigma, params.d, params.ell);
    let branches = fold_points(a)?;
    let v_hat = branches.find_vhat(sigma)?;

    let left = Shooter {
        field: OuterBranchField::new(&branches, Branch::Minus, a, sigma),
        d,
        v_hat,
        span: ell,
        steps: 2048,
    };
    // Right side in the reflected coordinate: W(s) := V(ell - s) satisfies
    // d W'' + G_+(W) = 0 with W(0) = V(ell) > v_hat, W'(0) = 0; G_+ > 0 makes
    // W decrease toward v_hat. The physical slope is V'(x) = -W'(s).
    let right_field = OuterBranchField::new(&branches, Branch::Plus, a, sigma);
    let right_shoot = |q: f64| -> Result<ShotResult> {
        let h = ell / 2048.0;
        let f = |y: [f64; 2]| -> Result<[f64; 2]> {
            let w = y[0].min(branches.v_hi - 1e-13).max(v_hat - 1e-13);
            Ok([y[1], -right_field.eval(w)? / d])
        };
        let mut y = [q, 0.0];
        let mut x = 0.0;
        for _ in 0..2048 * 16 {
            let y_prev = y;
            let x_prev = x;
            // RK4
            let k1 = f(y)?;
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]])?;
            y = [
                y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            x += h;
            if y[0] <= v_hat {
                let (mut t_lo, mut t_hi) = (0.0_f64, h);
                let mut ylo = y_prev;
                for _ in 0..64 {
                    let tm = 0.5 * (t_lo + t_hi);
                    let hh = tm - t_lo;
                    let k1 = f(ylo)?;
                    let k2 = f([ylo[0] + 0.5 * hh * k1[0], ylo[1] + 0.5 * hh * k1[1]])?;
                    let k3 = f([ylo[0] + 0.5 * hh * k2[0], ylo[1] + 0.5 * hh * k2[1]])?;
                    let k4 = f([ylo[0] + hh * k3[0], ylo[1] + hh * k3[1]])?;
                    let ym = [
                        ylo[0] + hh / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                        ylo[1] + hh / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                    ];
                    if ym[0] <= v_hat {
                        t_hi = tm;
                    } else {
                        t_lo = tm;
                        ylo = ym;
                    }
                    if t_hi - t_lo < 1e-15 * ell {
                        break;
                    }
                }
                let t = 0.5 * (t_lo + t_hi);
                let hh = t - t_lo;
                let k1 = f(ylo)?;
                let k2 = f([ylo[0] + 0.5 * hh * k1[0], ylo[1] + 0.5 * hh * k1[1]])?;
                let k3 = f([ylo[0] + 0.5 * hh * k2[0], ylo[1] + 0.5 * hh * k2[1]])?;
                let k4 = f([ylo[0] + hh * k3[0], ylo[1] + hh * k3[1]])?;
                let yc = [
                    ylo[0] + hh / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    ylo[1] + hh / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
                // W' at crossing is yc[1] (negative); V'(x) = -W'(s)
                return Ok(ShotResult {
                    x_cross: x_prev + t,
                    slope: -yc[1],
                });
            }
            if x > 4.0 * ell {
                break;
            }
        }
        Err(Error::Bracket(format!(
            "right shot from V(ell) = {q} never reached v_hat"
        )))
    };

    // --- seed by coarse scan -------------------------------------------------
    // residuals: r1(p, q) = xL(p) + xR(q) - ell (position), r2 = sL - sR.
    // Inner solve: given p, choose q so the slopes match (sR(q) increases
    // with q); outer scan on p for the position residual.
    let margin = 1e-7 * (branches.v_hi - branches.v_lo);
    let p_lo = branches.v_lo + margin;
    let p_hi = v_hat - margin;
    let q_solve = |target_slope: f64| -> Result<(f64, ShotResult)> {
        let mut lo = v_hat + margin;
        let mut hi = branches.v_hi - margin;
        let s_lo = right_shoot(lo)?.slope;
        let s_hi = right_shoot(hi)?.slope;
        if !(s_lo <= target_slope && target_slope <= s_hi) {
            return Err(Error::Bracket(format!(
                "right slope range [{s_lo}, {s_hi}] cannot match {target_slope}"
            )));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let s = right_shoot(mid)?;
            if s.slope < target_slope {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 * (branches.v_hi - v_hat) {
                break;
            }
        }
        let q = 0.5 * (lo + hi);
        Ok((q, right_shoot(q)?))
    };
    let position_residual = |p: f64| -> Result<(f64, f64, ShotResult, ShotResult)> {
        let sl = left.shoot(p)?;
        let (q, sr) = q_solve(sl.slope)?;
        Ok((sl.x_cross + sr.x_cross - ell, q, sl, sr))
    };

    let n_scan = 40;
    let mut found: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    let mut last_ok: Option<(f64, f64)> = None;
    for i in 0..=n_scan {
        let p = p_lo + (p_hi - p_lo) * i as f64 / n_scan as f64;
        match position_residual(p) {
            Ok((r, _, _, _)) => {
                if let Some((pp, rr)) = prev {
                    if rr * r <= 0.0 {
                        found = Some((pp, p));
                        break;
                    }
                }
                prev = Some((p, r));
                last_ok = Some((p, r));
            }
            Err(_) => {
                prev = None;
            }
        }
    }
    let (mut pa, mut pb) = found.ok_or_else(|| {
        Error::Regime(format!(
            "no layered solution at this d: position residual has no sign change \
             over V(0) in ({p_lo:.6}, {p_hi:.6}); last attempt {last_ok:?}"
        ))
    })?;

    // bisection on p to high accuracy
    let mut ra = position_residual(pa)?.0;
    for _ in 0..90 {
        let pm = 0.5 * (pa + pb);
        let (rm, _, _, _) = position_residual(pm)?;
        if rm * ra <= 0.0 {
            pb = pm;
        } else {
            pa = pm;
            ra = rm;
        }
        if pb - pa < 1e-15 * (p_hi - p_lo) {
            break;
        }
    }
    let p_star = 0.5 * (pa + pb);
    let (pos_res, q_star, shot_l, shot_r) = position_residual(p_star)?;
    let x_star = shot_l.x_cross;
    let slope_mismatch = (shot_l.slope - shot_r.slope).abs();
    let scale = shot_l.slope.abs().max(shot_r.slope.abs()).max(1e-300);
    if slope_mismatch > tol * scale || pos_res.abs() > tol * ell {
        return Err(Error::Convergence(format!(
            "matching did not reach tol {tol}: slope mismatch {slope_mismatch:.3e}, \
             position residual {pos_res:.3e}"
        )));
    }

    // --- store on a graded grid ----------------------------------------------
    let n_nodes = 2048;
    let grid = Grid::graded(n_nodes, ell, x_star, 0.08 * ell, 0.35);
    let mut v = vec![0.0; grid.len()];
    let mut v_prime = vec![0.0; grid.len()];
    fill_piece(
        &grid,
        0.0,
        x_star,
        [p_star, 0.0],
        |vv| {
            OuterBranchField::new(&branches, Branch::Minus, a, sigma)
                .eval(vv.min(v_hat + 1e-12))
                .map(|g| -g / d)
        },
        false,
        &mut v,
        &mut v_prime,
    )?;
    fill_piece(
        &grid,
        ell,
        x_star,
        [q_star, 0.0],
        |vv| {
            OuterBranchField::new(&branches, Branch::Plus, a, sigma)
                .eval(vv.min(branches.v_hi - 1e-13).max(v_hat - 1e-12))
                .map(|g| -g / d)
        },
        true,
        &mut v,
        &mut v_prime,
    )?;
    // pin the layer node exactly
    if let Some(i) = grid.node_at(x_star) {
        v[i] = v_hat;
        v_prime[i] = 0.5 * (shot_l.slope + shot_r.slope);
    }

    Ok(ReducedProfile {
        x_star,
        v_hat,
        grid,
        v,
        v_prime,
        slope_mismatch,
        v0: p_star,
        v_ell: q_star,
        a,
        sigma,
        d,
        ell,
        branches,
    })
}

/// Integrate the piece ODE from `from` toward `to`, writing V and V' at the
/// grid nodes that lie on this piece. `reversed` walks from `ell` backwards.
fn fill_piece(
    grid: &Grid,
    from: f64,
    to: f64,
    y0: [f64; 2],
    accel: impl Fn(f64) -> Result<f64>,
    reversed: bool,
    v: &mut [f64],
    v_prime: &mut [f64],
) -> Result<()> {
    // collect node indices on the piece, ordered along the integration
    let mut idx: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            if reversed {
                grid.x[i] >= to - 1e-15 && grid.x[i] <= from + 1e-15
            } else {
                grid.x[i] >= from - 1e-15 && grid.x[i] <= to + 1e-15
            }
        })
        .collect();
    if reversed {
        idx.reverse();
    }
    let mut y = y0;
    let mut xcur = from;
    let f = |yy: [f64; 2]| -> Result<[f64; 2]> { Ok([yy[1], accel(yy[0])?]) };
    for &i in &idx {
        let target = grid.x[i];
        let dist = if reversed { xcur - target } else { target - xcur };
        if dist > 0.0 {
            let nsub = (dist / (grid.ell / 4096.0)).ceil().max(1.0) as usize;
            let h = dist / nsub as f64 * if reversed { -1.0 } else { 1.0 };
            for _ in 0..nsub {
                let k1 = f(y)?;
                let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
                let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
                let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]])?;
                y = [
                    y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ];
            }
            xcur = target;
        }
        v[i] = y[0];
        v_prime[i] = y[1];
    }
    Ok(())
}

impl ReducedProfile {
    /// Piecewise activator value: minus branch left of the layer, plus branch
    /// right of it, the jump pair exactly at `x_star`.
    pub fn sample(&self, x: f64) -> Result<(UStar, f64)> {
        if x < -1e-12 || x > self.ell + 1e-12 {
            return Err(Error::Domain(format!(
                "x = {x} outside [0, {}]",
                self.ell
            )));
        }
        let v = self.v_at(x);
        let tol = 1e-12 * self.ell;
        if (x - self.x_star).abs() <= tol {
            Ok((
                UStar::Jump {
                    left: self.branches.h_minus(self.v_hat)?,
                    right: self.branches.h_plus(self.v_hat)?,
                },
                self.v_hat,
            ))
        } else if x < self.x_star {
            Ok((UStar::Value(self.branches.h_minus(v)?), v))
        } else {
            Ok((UStar::Value(self.branches.h_plus(v)?), v))
        }
    }

    /// Linear interpolation of the stored V profile.
    pub fn v_at(&self, x: f64) -> f64 {
        let xs = &self.grid.x;
        let i = xs.partition_point(|&t| t < x).min(xs.len() - 1).max(1);
        let (x0, x1) = (xs[i - 1], xs[i]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.v[i - 1] * (1.0 - t) + self.v[i] * t
    }

    /// Activator value on the stored grid, choosing the branch by node side.
    pub fn u_at_node(&self, i: usize) -> Result<f64> {
        let x = self.grid.x[i];
        if x < self.x_star {
            self.branches.h_minus(self.v[i])
        } else if x > self.x_star {
            self.branches.h_plus(self.v[i])
        } else {
            // the layer node: report the plus side (right-continuous)
            self.branches.h_plus(self.v_hat)
        }
    }

    /// `\int_0^{x_star} g(U*, V*) dx` by trapezoid on the stored grid
    /// (strictly negative: `g < 0` on the minus branch).
    pub fn integral_g_left(&self) -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..self.grid.len() {
            let x = self.grid.x[i];
            if x > self.x_star + 1e-15 {
                break;
            }
            let u = self.branches.h_minus(self.v[i].min(self.v_hat))?;
            xs.push(x);
            ys.push(kinetics(u, self.v[i].min(self.v_hat), self.a, self.sigma)?.g);
        }
        Ok(crate::quad::trapezoid(&xs, &ys))
    }

    /// Activator jump at the layer `(h_-(v_hat), h_+(v_hat))`.
    pub fn layer_jump(&self) -> Result<(f64, f64)> {
        Ok((
            self.branches.h_minus(self.v_hat)?,
            self.branches.h_plus(self.v_hat)?,
        ))
    }
}
