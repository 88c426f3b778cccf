//! Eigen-solvers for the two limiting operators and the scalar constants
//! they feed: the slow Sturm-Liouville operator
//! `-d d^2/dx^2 - (f_u g_v - f_v g_u)/f_u` along the reduced profile, the
//! fast operator `eps^2 d^2/dx^2 + f_u` along an interior-layer state, the
//! extrapolation of `rho(eps) = mu_0^eps/eps`, and the Dirac-limit pairing
//! constants `c1*, c2*`.

use crate::grid::Grid;
use crate::profile::ReducedProfile;
use crate::steady::LayeredStateEps;
use crate::sums::SpectralSum;
use crate::tridiag::WeightedTridiag;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Truncated eigendata of the slow limiting operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralBasis {
    /// Ascending eigenvalues, dispersion-corrected.
    pub gamma: Vec<f64>,
    /// `psi_n(x*)` for the L2-normalized eigenfunctions, signs fixed by
    /// `psi_n(0) > 0`; the value at the potential kink is the average of the
    /// two one-sided quadratic extrapolants.
    pub psi_xstar: Vec<f64>,
    pub x_star: f64,
    pub d: f64,
    pub ell: f64,
    /// Mean of the potential (the constant of the eigenvalue asymptote).
    pub q_bar: f64,
    /// Grid minimum of the potential.
    pub q_min: f64,
    /// Nodes used by the discretization.
    pub grid_m: usize,
}

impl SpectralBasis {
    /// Assemble the spectral sum with weights `c1c2 psi_n^2(x*)`.
    pub fn to_sum(&self, c1c2: f64) -> SpectralSum {
        let pi = std::f64::consts::PI;
        SpectralSum {
            weights: self.psi_xstar.iter().map(|p| c1c2 * p * p).collect(),
            gammas: self.gamma.clone(),
            a_coef: self.d * (pi / self.ell) * (pi / self.ell),
            q_bar: self.q_bar,
            w_mean: c1c2 / self.ell,
            phi: 2.0 * pi * self.x_star / self.ell,
        }
    }
}

/// Potential of the slow operator along the reduced profile.
pub fn slow_potential(profile: &ReducedProfile, x: f64) -> Result<f64> {
    let v = profile.v_at(x);
    let b = &profile.branches;
    let u = if x < profile.x_star {
        b.h_minus(v.min(profile.v_hat).max(b.v_lo + 0.0))?
    } else {
        b.h_plus(v.max(profile.v_hat).min(b.v_hi - 0.0))?
    };
    let k = crate::kinetics::kinetics(u, v, profile.a, profile.sigma)?;
    let q = (k.f_u * k.g_v - k.f_v * k.g_u) / (-k.f_u);
    Ok(q)
}

/// Solve the slow operator on a uniform `grid_m`-node grid for the first
/// `n_target` eigenpairs.
pub fn eig_slow(profile: &ReducedProfile, d: f64, n_target: usize, grid_m: usize) -> Result<SpectralBasis> {
    let ell = profile.ell;
    let grid = Grid::uniform(grid_m, ell);
    let m = grid.len();
    let h = grid.h[0];
    let mut q = Vec::with_capacity(m);
    for i in 0..m {
        let qi = slow_potential(profile, grid.x[i])?;
        if qi <= 0.0 {
            return Err(Error::Regime(format!(
                "slow potential must be positive; q({}) = {qi}",
                grid.x[i]
            )));
        }
        q.push(qi);
    }
    let q_bar = grid.integrate(&q) / ell;
    let q_min = q.iter().cloned().fold(f64::INFINITY, f64::min);

    // finite-volume stiffness + potential mass
    let mut t_diag = vec![2.0 * d / h; m];
    t_diag[0] = d / h;
    t_diag[m - 1] = d / h;
    let t_off = vec![-d / h; m - 1];
    for i in 0..m {
        t_diag[i] += q[i] * grid.w[i];
    }
    let wt = WeightedTridiag::new(&t_diag, &t_off, &grid.w);
    let n_target = n_target.min(m - 2);
    let raw = wt.eigenvalues_range(0, n_target - 1);

    // psi_n(x*): average of one-sided quadratic extrapolants across the kink
    let xs = profile.x_star;
    let i_hi = grid.x.partition_point(|&t| t < xs).clamp(3, m - 3);
    let mut psi_xstar = Vec::with_capacity(n_target);
    for lam in &raw {
        let v = wt.eigenvector(*lam)?;
        let left = quad_extrapolate(
            [grid.x[i_hi - 3], grid.x[i_hi - 2], grid.x[i_hi - 1]],
            [v[i_hi - 3], v[i_hi - 2], v[i_hi - 1]],
            xs,
        );
        let right = quad_extrapolate(
            [grid.x[i_hi], grid.x[i_hi + 1], grid.x[i_hi + 2]],
            [v[i_hi], v[i_hi + 1], v[i_hi + 2]],
            xs,
        );
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        psi_xstar.push(sign * 0.5 * (left + right));
    }

    // dispersion correction toward the continuum eigenvalues
    let pi = std::f64::consts::PI;
    let gamma: Vec<f64> = raw
        .iter()
        .enumerate()
        .map(|(n, g)| {
            let k = n as f64 * pi / ell;
            let discrete = 2.0 / (h * h) * (1.0 - (k * h).cos());
            g + d * (k * k - discrete)
        })
        .collect();
    if gamma[0] <= 0.0 {
        return Err(Error::Regime(format!(
            "expected gamma_0 > 0, got {}",
            gamma[0]
        )));
    }
    Ok(SpectralBasis {
        gamma,
        psi_xstar,
        x_star: xs,
        d,
        ell,
        q_bar,
        q_min,
        grid_m: m,
    })
}

fn quad_extrapolate(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if i != j {
                l *= (at - x[j]) / (x[i] - x[j]);
            }
        }
        s += l * y[i];
    }
    s
}

/// Parseval completeness proxy on the slow basis: fraction of `||w||^2`
/// captured by the first `n_modes` eigenfunctions.
pub fn parseval_fraction(
    profile: &ReducedProfile,
    d: f64,
    n_modes: usize,
    grid_m: usize,
    probe: impl Fn(f64) -> f64,
) -> Result<f64> {
    let ell = profile.ell;
    let grid = Grid::uniform(grid_m, ell);
    let m = grid.len();
    let h = grid.h[0];
    let mut q = Vec::with_capacity(m);
    for i in 0..m {
        q.push(slow_potential(profile, grid.x[i])?);
    }
    let mut t_diag = vec![2.0 * d / h; m];
    t_diag[0] = d / h;
    t_diag[m - 1] = d / h;
    let t_off = vec![-d / h; m - 1];
    for i in 0..m {
        t_diag[i] += q[i] * grid.w[i];
    }
    let wt = WeightedTridiag::new(&t_diag, &t_off, &grid.w);
    let evs = wt.eigenvalues_range(0, n_modes.min(m - 2) - 1);
    let wvals: Vec<f64> = grid.x.iter().map(|&x| probe(x)).collect();
    let norm2 = grid.dot(&wvals, &wvals);
    let mut captured = 0.0;
    for lam in &evs {
        let v = wt.eigenvector(*lam)?;
        let c = grid.dot(&wvals, &v);
        captured += c * c;
    }
    Ok(captured / norm2)
}

/// Spectrum of the fast operator along a layered state.
#[derive(Debug, Clone, Serialize)]
pub struct FastSpectrum {
    /// Leading eigenvalues of `eps^2 d^2/dx^2 + f_u^eps`, descending
    /// (`mu[0] = mu_0^eps > 0 > mu[1] ...`).
    pub mu: Vec<f64>,
    /// Principal eigenfunction, L2-normalized, positive.
    pub phi0: Vec<f64>,
    /// `mu_0^eps / eps`.
    pub rho_eps: f64,
    /// Smallest `C` with 90% of `int phi_0^2` inside `|x - x*| <= C eps`.
    pub concentration_c: f64,
    pub eps: f64,
}

/// Solve the fast eigenproblem on the state's own (graded) grid.
pub fn eig_fast(state: &LayeredStateEps, n_modes: usize) -> Result<FastSpectrum> {
    let grid = &state.grid;
    let m = grid.len();
    let eps = state.eps;
    let coeffs = state.linearize_coeffs();
    // T = -eps^2 D2 - f_u (finite volume), generalized against W
    let mut t_diag = vec![0.0; m];
    let mut t_off = vec![0.0; m - 1];
    for i in 0..m - 1 {
        let k = eps * eps / grid.h[i];
        t_off[i] = -k;
        t_diag[i] += k;
        t_diag[i + 1] += k;
    }
    for i in 0..m {
        t_diag[i] += -coeffs.f_u[i] * grid.w[i];
    }
    let wt = WeightedTridiag::new(&t_diag, &t_off, &grid.w);
    let evs = wt.eigenvalues_range(0, n_modes.min(m - 2) - 1);
    let mu: Vec<f64> = evs.iter().map(|e| -e).collect();
    if !(mu[0] > 0.0) {
        return Err(Error::Eigen(format!(
            "expected mu_0 > 0, got {} (grid resolution?)",
            mu[0]
        )));
    }
    if mu.len() > 1 && !(mu[1] < 0.0) {
        return Err(Error::Eigen(format!(
            "more than one nonnegative fast eigenvalue (mu_1 = {}): refine the grid",
            mu[1]
        )));
    }
    let mut phi0 = wt.eigenvector(evs[0])?;
    // principal eigenfunction is signed positive
    let (mut mx, mut mxa) = (0.0_f64, 0.0_f64);
    for &p in &phi0 {
        if p.abs() > mxa {
            mxa = p.abs();
            mx = p;
        }
    }
    if mx < 0.0 {
        for p in phi0.iter_mut() {
            *p = -*p;
        }
    }
    // mass concentration around the layer
    let total: f64 = grid.dot(&phi0, &phi0);
    let mut c = 0.5_f64;
    let concentration_c = loop {
        let mut inside = 0.0;
        for i in 0..m {
            if (grid.x[i] - state.x_star).abs() <= c * eps {
                inside += grid.w[i] * phi0[i] * phi0[i];
            }
        }
        if inside >= 0.9 * total || c > 1e4 {
            break c;
        }
        c *= 1.25;
    };
    let rho_eps = mu[0] / eps;
    Ok(FastSpectrum {
        mu,
        phi0,
        rho_eps,
        concentration_c,
        eps,
    })
}

/// Result of the `rho_0^*` extrapolation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rho0Estimate {
    pub value: f64,
    pub error_estimate: f64,
    /// Fitted convergence exponent of `rho(eps) - rho_0^*`.
    pub exponent: f64,
    /// False when the difference table is non-monotone (pre-asymptotic data).
    pub reliable: bool,
}

/// Richardson extrapolation of `rho(eps)` samples `(eps, rho)` with a fitted
/// exponent. Needs at least three samples at geometrically decreasing `eps`.
pub fn extrapolate_rho0(samples: &[(f64, f64)]) -> Result<Rho0Estimate> {
    if samples.len() < 3 {
        return Err(Error::Domain(
            "rho_0 extrapolation needs at least three (eps, rho) samples".into(),
        ));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let n = s.len();
    let (e1, r1) = s[n - 3];
    let (e2, r2) = s[n - 2];
    let (e3, r3) = s[n - 1];
    let ratio = e2 / e1;
    if !( (e3 / e2) / ratio > 0.9 && (e3 / e2) / ratio < 1.1 ) {
        return Err(Error::Domain("samples must be geometric in eps".into()));
    }
    let d1 = r2 - r1;
    let d2 = r3 - r2;
    let monotone = d1 * d2 > 0.0 && d2.abs() < d1.abs();
    if !monotone {
        return Ok(Rho0Estimate {
            value: r3,
            error_estimate: d2.abs().max(d1.abs()),
            exponent: f64::NAN,
            reliable: false,
        });
    }
    let p = (d2 / d1).abs().ln() / ratio.ln();
    let q = (d2 / d1).abs();
    // r3 - rho0 = d2 * q/(1-q)
    let corr = d2 * q / (1.0 - q);
    let value = r3 + corr;
    Ok(Rho0Estimate {
        value,
        error_estimate: corr.abs() * 0.5 + d2.abs() * q * q,
        exponent: p,
        reliable: true,
    })
}

/// Dirac-limit estimates of `(c1*, c2*)` from pairings against smooth probes.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaLimitEstimate {
    pub c1: f64,
    pub c2: f64,
    /// Spread across probe functions (consistency indicator).
    pub c1_spread: f64,
    pub c2_spread: f64,
    /// Number of probes used (those not vanishing at the layer).
    pub probes_used: usize,
}

/// Estimate `c1*, c2*` from `-<f_v phi_0/sqrt(eps), w>/w(x*)` and
/// `<g_u phi_0/sqrt(eps), w>/w(x*)`. Probes that vanish at the layer are
/// excluded. The transients in `eps` are not power-law at reachable `eps`
/// (they change sign), so the estimator reports the finest-`eps` pairing
/// with the last increment as its uncertainty rather than extrapolating
/// through the turning point.
pub fn delta_limit_constants(
    states: &[&LayeredStateEps],
    probes: &[&dyn Fn(f64) -> f64],
) -> Result<DeltaLimitEstimate> {
    if states.len() < 2 {
        return Err(Error::Domain("need at least two states of decreasing eps".into()));
    }
    for w in states.windows(2) {
        if w[1].eps >= w[0].eps {
            return Err(Error::Domain("states must have decreasing eps".into()));
        }
    }
    let x_star = states[0].x_star;
    let mut per_probe: Vec<(f64, f64)> = Vec::new();
    let mut increments: Vec<(f64, f64)> = Vec::new();
    for probe in probes {
        let at_layer = probe(x_star);
        let scale: f64 = (0..11)
            .map(|i| probe(states[0].ell * i as f64 / 10.0).abs())
            .fold(0.0, f64::max);
        if at_layer.abs() <= 1e-3 * scale.max(1e-300) {
            continue; // vanishing at the layer: excluded
        }
        let pair = |st: &LayeredStateEps| -> Result<(f64, f64)> {
            let fast = eig_fast(st, 2)?;
            let c = st.linearize_coeffs();
            let se = st.eps.sqrt();
            let n = st.grid.len();
            let mut p1 = 0.0;
            let mut p2 = 0.0;
            for i in 0..n {
                let wv = probe(st.grid.x[i]);
                p1 += st.grid.w[i] * c.f_v[i] * fast.phi0[i] / se * wv;
                p2 += st.grid.w[i] * c.g_u[i] * fast.phi0[i] / se * wv;
            }
            Ok((-p1 / at_layer, p2 / at_layer))
        };
        let (c1_a, c2_a) = pair(states[states.len() - 2])?;
        let (c1_b, c2_b) = pair(states[states.len() - 1])?;
        increments.push(((c1_b - c1_a).abs(), (c2_b - c2_a).abs()));
        per_probe.push((c1_b, c2_b));
    }
    if per_probe.is_empty() {
        return Err(Error::Domain("all probe functions vanish at the layer".into()));
    }
    let c1 = per_probe.iter().map(|p| p.0).sum::<f64>() / per_probe.len() as f64;
    let c2 = per_probe.iter().map(|p| p.1).sum::<f64>() / per_probe.len() as f64;
    let inc = increments
        .iter()
        .fold((0.0_f64, 0.0_f64), |m, p| (m.0.max(p.0), m.1.max(p.1)));
    let c1_spread = per_probe
        .iter()
        .map(|p| (p.0 - c1).abs())
        .fold(0.0, f64::max)
        .max(inc.0);
    let c2_spread = per_probe
        .iter()
        .map(|p| (p.1 - c2).abs())
        .fold(0.0, f64::max)
        .max(inc.1);
    Ok(DeltaLimitEstimate {
        c1,
        c2,
        c1_spread,
        c2_spread,
        probes_used: per_probe.len(),
    })
}

/// The scalar inputs of every stability equation.
#[derive(Debug, Clone, Serialize)]
pub struct SlepConstants {
    pub rho0_star: f64,
    pub kappa_star: f64,
    pub c1_star: f64,
    pub c2_star: f64,
    pub c1c2: f64,
    pub tau_star: f64,
    pub mu_star: f64,
    pub sum: SpectralSum,
    pub basis: SpectralBasis,
    pub v_hat: f64,
    pub x_star: f64,
    pub m_prime_vhat: f64,
    pub integral_g_left: f64,
}

/// Assemble the constants from a profile, its slow basis, and `rho_0^*`.
///
/// `kappa*` is defined operationally by inverting
/// `rho_0^* = (kappa*)^2/d * M'(v_hat) * int_0^{x*} g`, both factors of the
/// product being negative.
pub fn constants(
    profile: &ReducedProfile,
    basis: &SpectralBasis,
    rho0_star: f64,
) -> Result<SlepConstants> {
    let sigma = profile.sigma;
    let m_prime = profile.branches.m_prime(profile.v_hat, sigma)?;
    let ig = profile.integral_g_left()?;
    if !(m_prime < 0.0 && ig < 0.0) {
        return Err(Error::Regime(format!(
            "expected M'(v_hat) < 0 and int g < 0, got {m_prime}, {ig}"
        )));
    }
    let kappa2 = rho0_star * basis.d / (m_prime * ig);
    if !(kappa2 > 0.0) {
        return Err(Error::Regime(format!("kappa*^2 = {kappa2} not positive")));
    }
    let kappa = kappa2.sqrt();
    let (hm, hp) = profile.layer_jump()?;
    let bracket = hp - hm + (hm / (1.0 + hm * hm) - hp / (1.0 + hp * hp)) * profile.v_hat;
    let c1 = -kappa * m_prime;
    let c2 = kappa * bracket;
    let c1c2 = c1 * c2;
    let sum = basis.to_sum(c1c2);
    let tau_star = sum.y(0.0, 0.0, 0.0)?;
    let mu_star = 0.5 * basis.q_min;
    for (name, v) in [
        ("rho0*", rho0_star),
        ("kappa*", kappa),
        ("c1*", c1),
        ("c2*", c2),
        ("tau*", tau_star),
        ("mu*", mu_star),
    ] {
        if !(v > 0.0) {
            return Err(Error::Regime(format!("{name} = {v} must be positive")));
        }
    }
    Ok(SlepConstants {
        rho0_star,
        kappa_star: kappa,
        c1_star: c1,
        c2_star: c2,
        c1c2,
        tau_star,
        mu_star,
        sum,
        basis: basis.clone(),
        v_hat: profile.v_hat,
        x_star: profile.x_star,
        m_prime_vhat: m_prime,
        integral_g_left: ig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kinetics::{Alpha, ModelParams};
    use crate::profile::solve_reduced;
    use crate::steady::{geometric_schedule, solve_layered_eps};
    use crate::tridiag::WeightedTridiag;

    fn params() -> ModelParams<f64> {
        ModelParams {
            a: 10.0,
            sigma: 8.0,
            eps: 0.05,
            tau: 14.0,
            d: 1.0,
            k1: 0.0,
            k2: 0.0,
            ell: 1.0,
            alpha: Alpha::Infinite,
        }
    }

    /// Constant-potential oracle: q = q0 gives gamma_n = q0 + d (n pi/l)^2,
    /// psi_n = sqrt(2/l) cos(n pi x/l) (psi_0 = sqrt(1/l)).
    #[test]
    fn constant_potential_oracle() {
        // build a fake "profile" via a real one but evaluate against a
        // synthetic potential by directly assembling the operator here
        let ell = 1.0_f64;
        let d = 1.3_f64;
        let q0 = 0.8_f64;
        let m = 4096;
        let grid = Grid::uniform(m, ell);
        let h = grid.h[0];
        let mut t_diag = vec![2.0 * d / h; m];
        t_diag[0] = d / h;
        t_diag[m - 1] = d / h;
        let t_off = vec![-d / h; m - 1];
        for i in 0..m {
            t_diag[i] += q0 * grid.w[i];
        }
        let wt = WeightedTridiag::new(&t_diag, &t_off, &grid.w);
        let evs = wt.eigenvalues_range(0, 9);
        let pi = std::f64::consts::PI;
        for (n, ev) in evs.iter().enumerate() {
            let k = n as f64 * pi / ell;
            let corrected = ev + d * (k * k - 2.0 / (h * h) * (1.0 - (k * h).cos()));
            let exact = q0 + d * k * k;
            assert!(
                (corrected - exact).abs() < 1e-6 * exact.max(1.0),
                "mode {n}: corrected {corrected} vs exact {exact}"
            );
        }
        // eigenfunction values at an actual node coordinate
        let v1 = wt.eigenvector(evs[1]).unwrap();
        let idx = (0.25 / h).round() as usize;
        let at = grid.x[idx];
        let expect = (2.0_f64 / ell).sqrt() * (pi * at / ell).cos();
        assert!((v1[idx] - expect).abs() < 1e-6, "{} vs {expect}", v1[idx]);
        let v0 = wt.eigenvector(evs[0]).unwrap();
        assert!((v0[idx] - (1.0_f64 / ell).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn slow_basis_reference_values() {
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let basis = eig_slow(&profile, p.d, 64, 4096).unwrap();
        // desk prototype: gamma_0 ~ 0.5416, gamma_1 ~ 10.60, q_bar ~ 0.5504
        assert!((basis.gamma[0] - 0.5416).abs() < 5e-3, "gamma0 = {}", basis.gamma[0]);
        assert!((basis.gamma[1] - 10.602).abs() < 5e-2, "gamma1 = {}", basis.gamma[1]);
        assert!((basis.q_bar - 0.5504).abs() < 2e-3, "q_bar = {}", basis.q_bar);
        assert!(basis.gamma[0] > 0.0);
        // asymptote: gamma_n ~ q_bar + d (n pi / l)^2 for large n
        let pi = std::f64::consts::PI;
        let n = 60;
        let model = basis.q_bar + p.d * (n as f64 * pi / profile.ell).powi(2);
        let rel = (basis.gamma[n] - model).abs() / model;
        assert!(rel < 1e-3, "asymptote mismatch {rel:.2e}");
    }

    #[test]
    fn slow_eigs_second_order_convergence() {
        // raw operator (no dispersion correction): gamma errors are O(h^2)
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let raw = |m: usize| -> Vec<f64> {
            let grid = Grid::uniform(m, profile.ell);
            let h = grid.h[0];
            let mut t_diag = vec![2.0 * p.d / h; m];
            t_diag[0] = p.d / h;
            t_diag[m - 1] = p.d / h;
            let t_off = vec![-p.d / h; m - 1];
            let mut td = t_diag;
            for i in 0..m {
                td[i] += slow_potential(&profile, grid.x[i]).unwrap() * grid.w[i];
            }
            WeightedTridiag::new(&td, &t_off, &grid.w).eigenvalues_range(0, 2)
        };
        let (b1, b2, b3) = (raw(512), raw(1024), raw(2048));
        for k in 1..3 {
            let e12 = (b1[k] - b3[k]).abs();
            let e23 = (b2[k] - b3[k]).abs();
            let ratio = e12 / e23;
            assert!(
                ratio > 3.0 && ratio < 6.0,
                "mode {k}: refinement ratio {ratio:.2} not ~4 (2nd order)"
            );
        }
    }

    #[test]
    fn orthonormality_gram_defect() {
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let ell = profile.ell;
        let m = 2048;
        let grid = Grid::uniform(m, ell);
        let h = grid.h[0];
        let mut q = Vec::with_capacity(m);
        for i in 0..m {
            q.push(slow_potential(&profile, grid.x[i]).unwrap());
        }
        let mut t_diag = vec![2.0 * p.d / h; m];
        t_diag[0] = p.d / h;
        t_diag[m - 1] = p.d / h;
        let t_off = vec![-p.d / h; m - 1];
        for i in 0..m {
            t_diag[i] += q[i] * grid.w[i];
        }
        let wt = WeightedTridiag::new(&t_diag, &t_off, &grid.w);
        let evs = wt.eigenvalues_range(0, 19);
        let vecs: Vec<Vec<f64>> = evs.iter().map(|e| wt.eigenvector(*e).unwrap()).collect();
        for i in 0..20 {
            for j in 0..20 {
                let g = grid.dot(&vecs[i], &vecs[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g - target).abs() < 1e-8,
                    "gram defect {:.2e} at ({i},{j})",
                    (g - target).abs()
                );
            }
        }
    }

    #[test]
    fn fast_spectrum_structure_and_rho_trend() {
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let mut rhos = Vec::new();
        for eps in [0.08, 0.04, 0.02] {
            let sched = geometric_schedule(0.08, eps, 0.7);
            let st = solve_layered_eps(&p, &profile, &sched, 1201).unwrap();
            let fast = eig_fast(&st, 4).unwrap();
            assert!(fast.mu[0] > 0.0 && fast.mu[1] < 0.0);
            // a fixed mu* < 0 separates mu_0 from the rest
            let mu_star = -0.5 * 0.0667; // half the observed mu_1 scale at eps->0
            assert!(fast.mu[1] < mu_star && mu_star < 0.0 && 0.0 < fast.mu[0]);
            assert!(fast.concentration_c < 40.0, "phi0 not localized: C = {}", fast.concentration_c);
            rhos.push(fast.rho_eps);
        }
        // positive and approaching a positive limit: increments shrink
        assert!(rhos.iter().all(|&r| r > 0.0));
        assert!((rhos[1] - rhos[2]).abs() < (rhos[0] - rhos[1]).abs());
        // desk values: rho(0.08) ~ 0.7997, rho(0.04) ~ 0.5256, rho(0.02) ~ 0.3526
        assert!((rhos[0] - 0.7997).abs() < 5e-3, "rho(0.08) = {}", rhos[0]);
        assert!((rhos[1] - 0.5256).abs() < 5e-3, "rho(0.04) = {}", rhos[1]);
        assert!((rhos[2] - 0.3526).abs() < 5e-3, "rho(0.02) = {}", rhos[2]);
    }

    #[test]
    fn parseval_completeness_proxy() {
        // a smooth probe is captured by the first modes to 1 - 1e-6
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let frac = parseval_fraction(&profile, p.d, 512, 4096, |x| {
            1.0 + 0.5 * (std::f64::consts::PI * x).cos()
        })
        .unwrap();
        assert!(frac >= 1.0 - 1e-6, "captured fraction {frac}");
    }

    #[test]
    fn fast_eigenvalue_second_order_in_grid() {
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let mu0 = |n: usize| -> f64 {
            let st = solve_layered_eps(&p, &profile, &[0.08], n).unwrap();
            eig_fast(&st, 2).unwrap().mu[0]
        };
        let (m1, m2, m3) = (mu0(401), mu0(801), mu0(1601));
        let ratio = (m1 - m3).abs() / (m2 - m3).abs();
        assert!(
            ratio > 2.5 && ratio < 7.0,
            "mu_0 refinement ratio {ratio:.2} not ~4"
        );
    }

    #[test]
    fn rho0_extrapolation_exact_on_synthetic_linear_model() {
        // rho(eps) = rho0 + c eps is recovered exactly
        let rho0 = 0.379;
        let c = 2.2;
        let samples: Vec<(f64, f64)> =
            [0.02, 0.01, 0.005].iter().map(|&e| (e, rho0 + c * e)).collect();
        let est = extrapolate_rho0(&samples).unwrap();
        assert!(est.reliable);
        assert!((est.value - rho0).abs() < 1e-10, "value {}", est.value);
        assert!((est.exponent - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rho0_extrapolation_flags_nonmonotone() {
        let samples = vec![(0.04, 0.5), (0.02, 0.35), (0.01, 0.36)];
        let est = extrapolate_rho0(&samples).unwrap();
        assert!(!est.reliable);
    }

    #[test]
    fn constants_positive_and_consistent() {
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let basis = eig_slow(&profile, p.d, 256, 4096).unwrap();
        // first-principles oracle (inner heteroclinic energy): rho0* = 0.37874
        let c = constants(&profile, &basis, 0.37874).unwrap();
        for v in [c.rho0_star, c.kappa_star, c.c1_star, c.c2_star, c.tau_star, c.mu_star] {
            assert!(v > 0.0);
        }
        // oracle values (kappa* = 1/sqrt(E0), E0 = 3.134924560480589)
        assert!((c.kappa_star - 0.5647892902).abs() < 2e-3, "kappa {}", c.kappa_star);
        assert!((c.c1_star - 0.5073975130).abs() < 2e-3, "c1 {}", c.c1_star);
        assert!((c.c2_star - 4.4403970578).abs() < 2e-2, "c2 {}", c.c2_star);
        // tau* near the desk value 7.2766 and X(0,0,0) > rho0*
        assert!((c.tau_star - 7.2766).abs() < 0.05, "tau* = {}", c.tau_star);
        let x000 = c.sum.x(0.0, 0.0, 0.0).unwrap();
        assert!(x000 > c.rho0_star);
        assert!((x000 - 4.2814).abs() < 0.05, "X(0,0,0) = {x000}");
        // ratio c1/c2 is kappa-free
        let ratio = c.c1_star / c.c2_star;
        let expect = -c.m_prime_vhat
            / (profile.layer_jump().map(|(hm, hp)| {
                hp - hm + (hm / (1.0 + hm * hm) - hp / (1.0 + hp * hp)) * profile.v_hat
            }).unwrap());
        assert!((ratio - expect).abs() < 1e-12 * ratio.abs());
    }

    #[allow(clippy::approx_constant)]
    #[test]
    fn tau_star_decreases_in_d_at_fixed_profile() {
        // with the potential held fixed, raising d raises every gamma_n
        // (Rayleigh quotient) and the 1/gamma^2 sum drops; the full
        // dependence through the recomputed profile can reverse this (it
        // does at these parameters), so the comparison pins the operator
        // part only
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let b1 = eig_slow(&profile, 1.0, 128, 2048).unwrap();
        let b2 = eig_slow(&profile, 2.0, 128, 2048).unwrap();
        for k in 0..64 {
            assert!(b2.gamma[k] > b1.gamma[k], "gamma_{k} did not increase");
        }
        // the n >= 1 part of the 1/gamma^2 sum drops (those gammas scale
        // ~ d); the ground-state term can rise because gamma_0 is capped by
        // the potential mean while psi_0^2(x*) grows, so full tau*
        // monotonicity in d is not asserted
        let c1 = constants(&profile, &b1, 0.37874).unwrap();
        let c2 = constants(&profile, &b2, 0.37874 / 2.0).unwrap();
        let tail = |c: &SlepConstants| -> f64 {
            c.sum.weights[1..]
                .iter()
                .zip(c.sum.gammas[1..].iter())
                .map(|(w, g)| w / (g * g))
                .sum()
        };
        assert!(
            tail(&c2) < tail(&c1),
            "n>=1 tail did not decrease: {} vs {}",
            tail(&c2),
            tail(&c1)
        );
    }

    #[test]
    fn delta_limits_agree_with_closed_forms() {
        let p = params();
        let profile = solve_reduced(&p, 1e-6).unwrap();
        let mut states = Vec::new();
        for eps in [0.08, 0.04, 0.02] {
            let sched = geometric_schedule(0.08, eps, 0.7);
            states.push(solve_layered_eps(&p, &profile, &sched, 1201).unwrap());
        }
        let refs: Vec<&LayeredStateEps> = states.iter().collect();
        // probes with moderate relative slope at the layer: the finite-eps
        // correction per probe is O(eps |w'/w|(x*))
        let probe_one = |_: f64| 1.0;
        let probe_lin = |x: f64| 0.5 + x;
        let probe_quad = |x: f64| 1.25 - 0.5 * x * x;
        let probe_vanish = |x: f64| x - profile.x_star;
        let probes: Vec<&dyn Fn(f64) -> f64> =
            vec![&probe_one, &probe_lin, &probe_quad, &probe_vanish];
        let est = delta_limit_constants(&refs, &probes).unwrap();
        assert_eq!(est.probes_used, 3, "vanishing probe must be excluded");
        assert!(est.c1 > 0.0 && est.c2 > 0.0);
        // first-principles closed forms
        assert!((est.c1 - 0.50740).abs() < 0.05 * 0.50740, "c1 = {}", est.c1);
        assert!((est.c2 - 4.44040).abs() < 0.05 * 4.44040, "c2 = {}", est.c2);
        // probes agree among themselves within the reported uncertainty scale
        assert!(est.c1_spread < 0.12 * est.c1, "c1 spread {}", est.c1_spread);
        assert!(est.c2_spread < 0.12 * est.c2, "c2 spread {}", est.c2_spread);
    }

}
