//! Time integration of the one-reactor and two-reactor systems (non-delayed
//! and exponential-kernel delayed), and direct discretized eigenproblems of
//! the linearizations for cross-validating every scalar stability prediction.
//!
//! The stepper is Strang-split: an implicit half-step of the pointwise
//! reaction + exchange terms (per-node Newton on at most 6 local components),
//! one implicit diffusion step (a tridiagonal solve per diffusive component,
//! Neumann ends), and another implicit reaction half-step.

use num_complex::Complex64;
use serde::Serialize;

use crate::arnoldi::arnoldi_ritz;
use crate::banded::Banded;
use crate::grid::Grid;
use crate::kinetics::{kinetics, Alpha, ModelParams};
use crate::steady::{CoeffFields, LayeredStateEps};
use crate::{Error, Result};

/// Which evolution system to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum System {
    /// One reactor, two components.
    Decoupled2,
    /// Two reactors, instantaneous coupling, four components.
    Coupled4,
    /// Two reactors with the exponential delay kernel via the auxiliary
    /// relaxation fields, six components.
    Coupled6Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PerturbMode {
    Symmetric,
    Antisymmetric,
}

/// Initial perturbation: a Gaussian bump at the layer applied to the
/// activator fields with the given sign pattern.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerturbSpec {
    pub mode: PerturbMode,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub system: System,
    pub params: ModelParams<f64>,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub perturb: PerturbSpec,
    /// Record diagnostics every this many steps.
    pub record_stride: usize,
    /// Also keep full field snapshots every this many steps (None: only the
    /// final state is returned).
    pub snapshot_stride: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.system == System::Coupled6Delayed && !self.params.alpha.is_finite() {
            return Err(Error::Domain(
                "Coupled6Delayed requires finite alpha; the alpha -> infinity \
                 physics is the Coupled4 system"
                    .into(),
            ));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Domain("t_end must be positive".into()));
        }
        Ok(())
    }

    /// Default step: the reaction-stiffness bound capped by the exchange
    /// stiffness (the split scheme degrades once dt * k2 grows past ~20;
    /// the default keeps it at 10).
    pub fn dt_value(&self, grid: &Grid) -> f64 {
        let p = &self.params;
        let alpha = match p.alpha {
            Alpha::Finite(a) => a,
            Alpha::Infinite => 0.0,
        };
        let exchange = p.k1.max(p.k2).max(alpha);
        self.dt.unwrap_or_else(|| {
            (0.5 * grid.h_min())
                .min(0.25 * p.eps * p.tau * p.sigma)
                .min(10.0 / exchange.max(1e-9))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Decay,
    Growth,
    SustainedOscillation,
    Inconclusive,
}

/// Recorded observables and the deterministic verdict.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    /// `||u1-u2||_inf + ||v1-v2||_inf` (zero for the decoupled system).
    pub asym_norm: Vec<f64>,
    /// `||u - u_base||_inf` of reactor 1.
    pub dev_norm: Vec<f64>,
    pub verdict: Verdict,
    /// Fitted log-slope of the observable over the last half window.
    pub log_slope: f64,
    pub peak_count: usize,
    /// Peak-amplitude drift over the last peaks (relative).
    pub peak_drift: f64,
    /// max(observable) over the last decile / first decile.
    pub amplitude_ratio: f64,
    /// Field snapshots `(t, fields)` when requested.
    #[serde(skip)]
    pub snapshots: Vec<(f64, Vec<Vec<f64>>)>,
}

/// Symmetric/antisymmetric decomposition of two-reactor perturbation fields.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSplit {
    pub w_s: Vec<f64>,
    pub w_a: Vec<f64>,
    pub z_s: Vec<f64>,
    pub z_a: Vec<f64>,
}

impl ModeSplit {
    pub fn split(w1: &[f64], w2: &[f64], z1: &[f64], z2: &[f64]) -> Self {
        let half = |a: &[f64], b: &[f64], sgn: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + sgn * y)).collect()
        };
        ModeSplit {
            w_s: half(w1, w2, 1.0),
            w_a: half(w1, w2, -1.0),
            z_s: half(z1, z2, 1.0),
            z_a: half(z1, z2, -1.0),
        }
    }

    /// Inverse map: `w1 = w_s + w_a`, `w2 = w_s - w_a` (exact).
    pub fn reconstruct(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let comb = |s: &[f64], a: &[f64], sgn: f64| -> Vec<f64> {
            s.iter().zip(a).map(|(x, y)| x + sgn * y).collect()
        };
        (
            comb(&self.w_s, &self.w_a, 1.0),
            comb(&self.w_s, &self.w_a, -1.0),
            comb(&self.z_s, &self.z_a, 1.0),
            comb(&self.z_s, &self.z_a, -1.0),
        )
    }
}

/// Full simulation state: component fields on the grid.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    /// Layout by system: `[u, v]`, `[u1, v1, u2, v2]`, or
    /// `[u1, v1, u2, v2, cap_u1, cap_u2]`.
    pub fields: Vec<Vec<f64>>,
}

struct Stepper<'a> {
    grid: &'a Grid,
    system: System,
    p: ModelParams<f64>,
    /// Diffusion coefficient per field (0 for the relaxation fields).
    diff: Vec<f64>,
    alpha: f64,
}

impl<'a> Stepper<'a> {
    fn new(grid: &'a Grid, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let p = config.params;
        let du = p.eps / p.tau;
        let dv = p.d;
        let diff = match config.system {
            System::Decoupled2 => vec![du, dv],
            System::Coupled4 => vec![du, dv, du, dv],
            System::Coupled6Delayed => vec![du, dv, du, dv, 0.0, 0.0],
        };
        let alpha = match p.alpha {
            Alpha::Finite(a) => a,
            Alpha::Infinite => 0.0,
        };
        Ok(Stepper {
            grid,
            system: config.system,
            p,
            diff,
            alpha,
        })
    }

    fn n_fields(&self) -> usize {
        self.diff.len()
    }

    /// Local reaction + exchange right-hand side at one node.
    fn reaction(&self, y: &[f64], r: &mut [f64]) -> Result<()> {
        let p = &self.p;
        let fe = |u: f64, v: f64| -> Result<(f64, f64)> {
            let k = kinetics(u.max(1e-12), v.max(1e-12), p.a, p.sigma)?;
            Ok((k.f / (p.eps * p.tau), k.g))
        };
        match self.system {
            System::Decoupled2 => {
                let (fu, gv) = fe(y[0], y[1])?;
                r[0] = fu;
                r[1] = gv;
            }
            System::Coupled4 => {
                let (f1, g1) = fe(y[0], y[1])?;
                let (f2, g2) = fe(y[2], y[3])?;
                r[0] = f1 + p.k1 / p.tau * (y[2] - y[0]);
                r[1] = g1 + p.k2 * (y[3] - y[1]);
                r[2] = f2 + p.k1 / p.tau * (y[0] - y[2]);
                r[3] = g2 + p.k2 * (y[1] - y[3]);
            }
            System::Coupled6Delayed => {
                let (f1, g1) = fe(y[0], y[1])?;
                let (f2, g2) = fe(y[2], y[3])?;
                // u_i is fed by the filtered activator of the other reactor
                r[0] = f1 + p.k1 / p.tau * (y[5] - y[0]);
                r[1] = g1 + p.k2 * (y[3] - y[1]);
                r[2] = f2 + p.k1 / p.tau * (y[4] - y[2]);
                r[3] = g2 + p.k2 * (y[1] - y[3]);
                r[4] = self.alpha * (y[0] - y[4]);
                r[5] = self.alpha * (y[2] - y[5]);
            }
        }
        Ok(())
    }

    fn reaction_jacobian(&self, y: &[f64], jac: &mut [[f64; 6]; 6]) -> Result<()> {
        let p = &self.p;
        for row in jac.iter_mut() {
            *row = [0.0; 6];
        }
        let ke = |u: f64, v: f64| kinetics(u.max(1e-12), v.max(1e-12), p.a, p.sigma);
        match self.system {
            System::Decoupled2 => {
                let k = ke(y[0], y[1])?;
                let s = 1.0 / (p.eps * p.tau);
                jac[0][0] = k.f_u * s;
                jac[0][1] = k.f_v * s;
                jac[1][0] = k.g_u;
                jac[1][1] = k.g_v;
            }
            System::Coupled4 => {
                let s = 1.0 / (p.eps * p.tau);
                for r in 0..2 {
                    let (iu, iv, ju) = (2 * r, 2 * r + 1, 2 * (1 - r));
                    let k = ke(y[iu], y[iv])?;
                    jac[iu][iu] = k.f_u * s - p.k1 / p.tau;
                    jac[iu][iv] = k.f_v * s;
                    jac[iu][ju] = p.k1 / p.tau;
                    jac[iv][iu] = k.g_u;
                    jac[iv][iv] = k.g_v - p.k2;
                    jac[iv][ju + 1] = p.k2;
                }
            }
            System::Coupled6Delayed => {
                let s = 1.0 / (p.eps * p.tau);
                for r in 0..2 {
                    let (iu, iv) = (2 * r, 2 * r + 1);
                    let other_cap = 4 + (1 - r);
                    let k = ke(y[iu], y[iv])?;
                    jac[iu][iu] = k.f_u * s - p.k1 / p.tau;
                    jac[iu][iv] = k.f_v * s;
                    jac[iu][other_cap] = p.k1 / p.tau;
                    jac[iv][iu] = k.g_u;
                    jac[iv][iv] = k.g_v - p.k2;
                    jac[iv][2 * (1 - r) + 1] = p.k2;
                    jac[4 + r][2 * r] = self.alpha;
                    jac[4 + r][4 + r] = -self.alpha;
                }
            }
        }
        Ok(())
    }

    /// Implicit reaction half-step at every node: solve
    /// `y = y0 + dt_half * R(y)` by Newton.
    fn reaction_half_step(&self, fields: &mut [Vec<f64>], dt_half: f64) -> Result<()> {
        let nf = self.n_fields();
        let n = self.grid.len();
        let mut y = [0.0_f64; 6];
        let mut y0 = [0.0_f64; 6];
        let mut r = [0.0_f64; 6];
        let mut jac = [[0.0_f64; 6]; 6];
        for i in 0..n {
            for c in 0..nf {
                y0[c] = fields[c][i];
                y[c] = fields[c][i];
            }
            let mut converged = false;
            for _ in 0..40 {
                self.reaction(&y[..nf], &mut r[..nf])?;
                // residual F = y - y0 - dt_half * R(y)
                let mut fres = [0.0_f64; 6];
                let mut norm = 0.0_f64;
                for c in 0..nf {
                    fres[c] = y[c] - y0[c] - dt_half * r[c];
                    norm = norm.max(fres[c].abs());
                }
                if norm < 1e-12 * (1.0 + y[..nf].iter().fold(0.0_f64, |m, x| m.max(x.abs()))) {
                    converged = true;
                    break;
                }
                self.reaction_jacobian(&y[..nf], &mut jac)?;
                // M = I - dt_half * J
                let mut m = [[0.0_f64; 6]; 6];
                for (ri, row) in m.iter_mut().enumerate().take(nf) {
                    for (ci, val) in row.iter_mut().enumerate().take(nf) {
                        *val = if ri == ci { 1.0 } else { 0.0 } - dt_half * jac[ri][ci];
                    }
                }
                let delta = solve_small(&mut m, &fres, nf).ok_or_else(|| {
                    Error::Convergence(format!("singular nodal reaction system at node {i}"))
                })?;
                for c in 0..nf {
                    y[c] -= delta[c];
                }
            }
            if !converged {
                return Err(Error::Convergence(format!(
                    "nodal reaction Newton failed at node {i}"
                )));
            }
            for c in 0..nf {
                fields[c][i] = y[c];
            }
        }
        Ok(())
    }

    /// Implicit diffusion step: `(I - dt D_c L) y = y0` per diffusive field.
    fn diffusion_step(&self, fields: &mut [Vec<f64>], dt: f64) -> Result<()> {
        let n = self.grid.len();
        let h = &self.grid.h;
        let w = &self.grid.w;
        for (c, &dc) in self.diff.iter().enumerate() {
            if dc == 0.0 {
                continue;
            }
            // tridiagonal rows of I - dt * dc * L (FV with Neumann ends)
            let mut low = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut up = vec![0.0; n];
            diag[0] = 1.0 + dt * dc / h[0] / w[0];
            up[0] = -dt * dc / h[0] / w[0];
            diag[n - 1] = 1.0 + dt * dc / h[n - 2] / w[n - 1];
            low[n - 1] = -dt * dc / h[n - 2] / w[n - 1];
            for i in 1..n - 1 {
                let (hm, hp) = (h[i - 1], h[i]);
                low[i] = -dt * dc / hm / w[i];
                up[i] = -dt * dc / hp / w[i];
                diag[i] = 1.0 + dt * dc * (1.0 / hm + 1.0 / hp) / w[i];
            }
            thomas(&low, &mut diag, &up, &mut fields[c]);
        }
        Ok(())
    }

    /// One Strang step with recursive halving on nodal Newton failure.
    fn step(&self, fields: &mut [Vec<f64>], dt: f64, depth: usize) -> Result<()> {
        let saved: Vec<Vec<f64>> = fields.to_vec();
        let attempt = (|| -> Result<()> {
            self.reaction_half_step(fields, 0.5 * dt)?;
            self.diffusion_step(fields, dt)?;
            self.reaction_half_step(fields, 0.5 * dt)?;
            Ok(())
        })();
        match attempt {
            Ok(()) => Ok(()),
            Err(e) => {
                if depth >= 8 {
                    return Err(e);
                }
                fields.clone_from_slice(&saved);
                self.step(fields, 0.5 * dt, depth + 1)?;
                self.step(fields, 0.5 * dt, depth + 1)
            }
        }
    }
}

/// Dense Gaussian elimination for the nodal systems (size <= 6).
fn solve_small(m: &mut [[f64; 6]; 6], rhs: &[f64; 6], n: usize) -> Option<[f64; 6]> {
    let mut x = *rhs;
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if m[i][k].abs() > m[p][k].abs() {
                p = i;
            }
        }
        if m[p][k] == 0.0 {
            return None;
        }
        m.swap(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        for j in k + 1..n {
            x[k] -= m[k][j] * x[j];
        }
        x[k] /= m[k][k];
    }
    Some(x)
}

/// Thomas algorithm (no pivoting; the diffusion systems are strictly
/// diagonally dominant).
fn thomas(low: &[f64], diag: &mut [f64], up: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let m = low[i] / diag[i - 1];
        diag[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / diag[i];
    }
}

/// Build the initial condition from a base state plus the perturbation.
pub fn initial_state(base: &LayeredStateEps, config: &SimConfig) -> Result<SimState> {
    config.validate()?;
    let n = base.grid.len();
    let eps = base.eps;
    let bump: Vec<f64> = (0..n)
        .map(|i| {
            let t = (base.grid.x[i] - base.x_star) / (4.0 * eps);
            config.perturb.amplitude * (-t * t).exp()
        })
        .collect();
    let sgn2 = match config.perturb.mode {
        PerturbMode::Symmetric => 1.0,
        PerturbMode::Antisymmetric => -1.0,
    };
    let u1: Vec<f64> = (0..n).map(|i| base.u[i] + bump[i]).collect();
    let fields = match config.system {
        System::Decoupled2 => vec![u1, base.v.clone()],
        System::Coupled4 => {
            let u2: Vec<f64> = (0..n).map(|i| base.u[i] + sgn2 * bump[i]).collect();
            vec![u1, base.v.clone(), u2, base.v.clone()]
        }
        System::Coupled6Delayed => {
            let u2: Vec<f64> = (0..n).map(|i| base.u[i] + sgn2 * bump[i]).collect();
            // constant-history convention: the filtered fields start at the
            // instantaneous activators
            let cap1 = u1.clone();
            let cap2 = u2.clone();
            vec![u1, base.v.clone(), u2, base.v.clone(), cap1, cap2]
        }
    };
    Ok(SimState { t: 0.0, fields })
}

/// Integrate and record diagnostics against the base state.
pub fn run_simulation(
    base: &LayeredStateEps,
    config: &SimConfig,
) -> Result<(SimState, DiagnosticsSeries)> {
    let stepper = Stepper::new(&base.grid, config)?;
    let mut state = initial_state(base, config)?;
    let dt = config.dt_value(&base.grid);
    let n_steps = (config.t_end / dt).ceil() as usize;
    let stride = config.record_stride.max(1);
    let mut times = Vec::new();
    let mut asym = Vec::new();
    let mut dev = Vec::new();
    let record =
        |state: &SimState, times: &mut Vec<f64>, asym: &mut Vec<f64>, dev: &mut Vec<f64>| {
            let n = base.grid.len();
            let mut a = 0.0_f64;
            if state.fields.len() >= 4 {
                for i in 0..n {
                    a = a.max((state.fields[0][i] - state.fields[2][i]).abs());
                }
                let mut av = 0.0_f64;
                for i in 0..n {
                    av = av.max((state.fields[1][i] - state.fields[3][i]).abs());
                }
                a += av;
            }
            let mut d_ = 0.0_f64;
            for i in 0..n {
                d_ = d_.max((state.fields[0][i] - base.u[i]).abs());
            }
            times.push(state.t);
            asym.push(a);
            dev.push(d_);
        };
    record(&state, &mut times, &mut asym, &mut dev);
    let mut snapshots = Vec::new();
    if config.snapshot_stride.is_some() {
        snapshots.push((state.t, state.fields.clone()));
    }
    for step_idx in 0..n_steps {
        stepper.step(&mut state.fields, dt, 0)?;
        state.t += dt;
        if (step_idx + 1) % stride == 0 || step_idx + 1 == n_steps {
            record(&state, &mut times, &mut asym, &mut dev);
        }
        if let Some(ss) = config.snapshot_stride {
            if (step_idx + 1) % ss.max(1) == 0 || step_idx + 1 == n_steps {
                snapshots.push((state.t, state.fields.clone()));
            }
        }
        for f in &state.fields {
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::Convergence(format!(
                    "simulation blew up at t = {}",
                    state.t
                )));
            }
        }
    }
    let observable: &[f64] = if config.system == System::Decoupled2 {
        &dev
    } else {
        &asym
    };
    let (verdict, log_slope, peak_count, peak_drift, amplitude_ratio) =
        classify_series(&times, observable);
    Ok((
        state,
        DiagnosticsSeries {
            times,
            asym_norm: asym,
            dev_norm: dev,
            verdict,
            log_slope,
            peak_count,
            peak_drift,
            amplitude_ratio,
            snapshots,
        },
    ))
}

/// Deterministic verdict rules. Base thresholds: growth when the fitted
/// log-slope of the observable over the last half window exceeds `+1e-3`,
/// decay below `-1e-3`, sustained oscillation with at least 10 peaks whose
/// amplitudes drift less than 5%. Three amplitude-ratio guards keep the
/// classification meaningful when the signal saturates or bottoms out on the
/// scheme-bias plateau: sustained additionally requires the amplitude not to
/// have collapsed (ratio >= 1), growth is also granted on a 10x amplitude
/// rise whose tail is not decaying, and decay is also granted on collapse
/// below 0.2x.
pub fn classify_series(times: &[f64], obs: &[f64]) -> (Verdict, f64, usize, f64, f64) {
    let n = times.len();
    let start = n / 2;
    // envelope log-slope by least squares over positive samples
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut m = 0.0;
    for i in start..n {
        if obs[i] > 0.0 {
            let (x, y) = (times[i], obs[i].ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += 1.0;
        }
    }
    let log_slope = if m >= 2.0 {
        (m * sxy - sx * sy) / (m * sxx - sx * sx)
    } else {
        f64::NEG_INFINITY
    };
    // peaks over the last half window
    let mut peaks: Vec<f64> = Vec::new();
    for i in (start.max(1))..n.saturating_sub(1) {
        if obs[i] > obs[i - 1] && obs[i] >= obs[i + 1] && obs[i] > 0.0 {
            peaks.push(obs[i]);
        }
    }
    let peak_drift = if peaks.len() >= 2 {
        let pmax = peaks.iter().cloned().fold(0.0_f64, f64::max);
        let pmin = peaks.iter().cloned().fold(f64::INFINITY, f64::min);
        (pmax - pmin) / pmax.max(1e-300)
    } else {
        f64::INFINITY
    };
    let dec = (n / 10).max(1);
    let first = obs[..dec].iter().cloned().fold(0.0_f64, f64::max);
    let last = obs[n - dec..].iter().cloned().fold(0.0_f64, f64::max);
    let amplitude_ratio = last / first.max(1e-300);
    let verdict = if peaks.len() >= 10 && peak_drift < 0.05 && amplitude_ratio >= 1.0 {
        Verdict::SustainedOscillation
    } else if log_slope > 1e-3 || (amplitude_ratio >= 10.0 && log_slope > -1e-3) {
        Verdict::Growth
    } else if log_slope < -1e-3 || amplitude_ratio < 0.2 {
        Verdict::Decay
    } else {
        Verdict::Inconclusive
    };
    (verdict, log_slope, peaks.len(), peak_drift, amplitude_ratio)
}

// ---------------------------------------------------------------------------
// direct discretized eigenproblems
// ---------------------------------------------------------------------------

/// Which mode-reduced linearization to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EigMode {
    /// One reactor / the symmetric non-delayed mode (coupling-free).
    DecoupledOrSym,
    /// Antisymmetric non-delayed mode: shifts `-2 eps k1`, `-2 k2`.
    AntisymNondelayed { k1: f64, k2: f64 },
    /// Antisymmetric delayed mode with the auxiliary relaxation row.
    AntisymDelayed { k1: f64, k2: f64, alpha: f64 },
    /// Symmetric delayed mode (no `k2` shift, `+ eps k1` feedback).
    SymDelayed { k1: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigMethod {
    Dense,
    ShiftInvert,
    Auto,
}

/// Assemble `A x = lambda B x` for the given mode over a layered state:
/// returns `(A, b_diag, components_per_node)`.
pub fn assemble_linearization(
    state: &LayeredStateEps,
    coeffs: &CoeffFields,
    tau: f64,
    mode: EigMode,
) -> (Banded, Vec<f64>, usize) {
    let grid = &state.grid;
    let n = grid.len();
    let eps = state.eps;
    let ncomp = match mode {
        EigMode::DecoupledOrSym | EigMode::AntisymNondelayed { .. } => 2,
        _ => 3,
    };
    let dim = ncomp * n;
    let mut a = Banded::zeros(dim, ncomp);
    let mut b = vec![1.0; dim];
    let diffusive = [eps * eps, state.d];
    for i in 0..n {
        for c in 0..2 {
            let row = ncomp * i + c;
            let coef = diffusive[c];
            if i == 0 {
                a.add(row, row, -coef / grid.h[0] / grid.w[0]);
                a.add(row, row + ncomp, coef / grid.h[0] / grid.w[0]);
            } else if i == n - 1 {
                a.add(row, row, -coef / grid.h[n - 2] / grid.w[n - 1]);
                a.add(row, row - ncomp, coef / grid.h[n - 2] / grid.w[n - 1]);
            } else {
                let (hm, hp, w) = (grid.h[i - 1], grid.h[i], grid.w[i]);
                a.add(row, row - ncomp, coef / hm / w);
                a.add(row, row + ncomp, coef / hp / w);
                a.add(row, row, -coef * (1.0 / hm + 1.0 / hp) / w);
            }
        }
        let (rw, rz) = (ncomp * i, ncomp * i + 1);
        a.add(rw, rw, coeffs.f_u[i]);
        a.add(rw, rz, coeffs.f_v[i]);
        a.add(rz, rw, coeffs.g_u[i]);
        a.add(rz, rz, coeffs.g_v[i]);
        b[rw] = eps * tau;
        match mode {
            EigMode::DecoupledOrSym => {}
            EigMode::AntisymNondelayed { k1, k2 } => {
                a.add(rw, rw, -2.0 * eps * k1);
                a.add(rz, rz, -2.0 * k2);
            }
            EigMode::AntisymDelayed { k1, k2, alpha } => {
                let rcap = ncomp * i + 2;
                a.add(rw, rw, -eps * k1);
                a.add(rw, rcap, -eps * k1);
                a.add(rz, rz, -2.0 * k2);
                a.add(rcap, rw, alpha);
                a.add(rcap, rcap, -alpha);
            }
            EigMode::SymDelayed { k1, alpha } => {
                let rcap = ncomp * i + 2;
                a.add(rw, rw, -eps * k1);
                a.add(rw, rcap, eps * k1);
                a.add(rcap, rw, alpha);
                a.add(rcap, rcap, -alpha);
            }
        }
    }
    (a, b, ncomp)
}

/// The `n_rightmost` eigenvalues (by real part) of the discretized
/// linearization.
pub fn direct_eigs(
    state: &LayeredStateEps,
    tau: f64,
    mode: EigMode,
    n_rightmost: usize,
    method: EigMethod,
) -> Result<Vec<Complex64>> {
    let coeffs = state.linearize_coeffs();
    let (a, b, ncomp) = assemble_linearization(state, &coeffs, tau, mode);
    let dim = ncomp * state.grid.len();
    let method = match method {
        EigMethod::Auto => {
            if dim <= 1100 {
                EigMethod::Dense
            } else {
                EigMethod::ShiftInvert
            }
        }
        m => m,
    };
    let mut evs = match method {
        EigMethod::Dense => {
            let mut dense = nalgebra::DMatrix::<f64>::zeros(dim, dim);
            for i in 0..dim {
                for j in i.saturating_sub(ncomp)..=(i + ncomp).min(dim - 1) {
                    dense[(i, j)] = a.get(i, j) / b[i];
                }
            }
            let evs = dense.complex_eigenvalues();
            evs.iter().cloned().collect::<Vec<_>>()
        }
        EigMethod::ShiftInvert => {
            // A x = lam B x  ->  (A - s B)^{-1} B x = 1/(lam - s) x
            let mut shift = 0.02_f64;
            let mut lu = None;
            for _ in 0..6 {
                let mut shifted = a.clone();
                for i in 0..dim {
                    shifted.add(i, i, -shift * b[i]);
                }
                match shifted.lu_factor() {
                    Ok(f) => {
                        lu = Some(f);
                        break;
                    }
                    Err(_) => {
                        shift += 3e-3 * (1.0 + shift.abs());
                    }
                }
            }
            let lu = lu.ok_or_else(|| {
                Error::Eigen("shift-invert factorization failed at every shift".into())
            })?;
            let mut work = vec![0.0; dim];
            let apply = |x: &[f64], y: &mut [f64]| {
                for i in 0..dim {
                    work[i] = b[i] * x[i];
                }
                y.copy_from_slice(&work);
                lu.solve_in_place(y);
            };
            let m = 130.min(dim);
            let (ritz, _res) = arnoldi_ritz(apply, dim, m);
            let theta_max = ritz.iter().map(|t| t.norm()).fold(0.0_f64, f64::max);
            ritz.iter()
                .filter(|t| t.norm() > 1e-8 * theta_max)
                .map(|t| shift + 1.0 / t)
                .collect()
        }
        EigMethod::Auto => unreachable!(),
    };
    evs.sort_by(|p, q| q.re.partial_cmp(&p.re).unwrap());
    evs.truncate(n_rightmost.max(1));
    if evs.is_empty() {
        return Err(Error::Eigen("no eigenvalues returned".into()));
    }
    Ok(evs)
}

/// Real part of the rightmost eigenvalue.
pub fn rightmost_real(
    state: &LayeredStateEps,
    tau: f64,
    mode: EigMode,
    method: EigMethod,
) -> Result<f64> {
    Ok(direct_eigs(state, tau, mode, 1, method)?[0].re)
}

/// Bisection of a stability predicate (`true` = unstable) to `rel_tol`
/// relative accuracy. The endpoints must disagree.
pub fn threshold_scan(
    mut unstable: impl FnMut(f64) -> Result<bool>,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let u_lo = unstable(lo)?;
    let u_hi = unstable(hi)?;
    if u_lo == u_hi {
        return Err(Error::Bracket(format!(
            "same verdict at both endpoints ({lo}, {hi}): unstable = {u_lo}"
        )));
    }
    while (hi - lo).abs() > rel_tol * hi.abs().max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if unstable(mid)? == u_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
