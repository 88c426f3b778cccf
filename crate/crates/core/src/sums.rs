//! Spectral sums over the slow eigenbasis with closed-form model tails.
//!
//! Everything the scalar stability equations need reduces to the complex sum
//! `S(z) = sum_n w_n / (gamma_n + z)` and its derivative, where
//! `w_n = c1* c2* psi_n^2(x*)`. The first `n_split` terms use computed
//! eigendata; beyond that the asymptotic model `gamma_n ~ q_bar + A n^2`,
//! `psi_n^2(x*) ~ (1 + cos(n phi))/ell` is summed in closed form via
//!
//! `sum_{n>=1} 1/(A n^2 + C) = pi coth(pi c)/(2 A c) - 1/(2C)`,
//! `sum_{n>=1} cos(n phi)/(A n^2 + C) = pi cosh(c(pi-phi))/(2 A c sinh(pi c)) - 1/(2C)`,
//!
//! with `c = sqrt(C/A)`, valid for `Re C > 0` and `phi` in `[0, 2 pi]`. The
//! truncation remainder is therefore zero by construction; what is left is
//! the model error of the high modes, reported by [`SpectralSum::tail_error_estimate`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The spectral data behind `S(z)`, with the tail model parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSum {
    /// `c1* c2* psi_n^2(x*)` for the explicitly computed modes.
    pub weights: Vec<f64>,
    /// Computed eigenvalues (dispersion-corrected), ascending.
    pub gammas: Vec<f64>,
    /// `d (pi/ell)^2` of the asymptotic eigenvalue model.
    pub a_coef: f64,
    /// Mean of the potential: the constant in `gamma_n ~ q_bar + A n^2`.
    pub q_bar: f64,
    /// `c1* c2* / ell`.
    pub w_mean: f64,
    /// `2 pi x* / ell`.
    pub phi: f64,
}

impl SpectralSum {
    pub fn gamma0(&self) -> f64 {
        self.gammas[0]
    }

    /// Resolvent-region guard: every denominator `gamma_n + z` and the model
    /// continuation stay away from zero when `gamma_0 + Re z > 0`.
    pub fn check_resolvent(&self, re_z: f64) -> Result<()> {
        if self.gamma0() + re_z <= 0.0 {
            return Err(Error::Domain(format!(
                "outside the resolvent region: gamma_0 + Re z = {} <= 0",
                self.gamma0() + re_z
            )));
        }
        Ok(())
    }

    /// `S(z) = sum w_n/(gamma_n + z)`, explicit head plus closed-form tail.
    pub fn s(&self, z: Complex64) -> Result<Complex64> {
        self.check_resolvent(z.re)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, g) in self.weights.iter().zip(self.gammas.iter()) {
            acc += w / (g + z);
        }
        let c_big = self.q_bar + z;
        let (m0, m1) = m0_m1(self.a_coef, c_big, self.phi);
        let mut tail = self.w_mean * (m0 + m1);
        for n in 1..self.weights.len() {
            let nn = n as f64;
            let model_g = self.q_bar + self.a_coef * nn * nn;
            tail -= self.w_mean * (1.0 + (nn * self.phi).cos()) / (model_g + z);
        }
        Ok(acc + tail)
    }

    /// `S'(z) = -sum w_n/(gamma_n + z)^2`, same head/tail split.
    pub fn s_prime(&self, z: Complex64) -> Result<Complex64> {
        self.check_resolvent(z.re)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, g) in self.weights.iter().zip(self.gammas.iter()) {
            let den = g + z;
            acc -= w / (den * den);
        }
        let c_big = self.q_bar + z;
        let (dm0, dm1) = dm0_dm1(self.a_coef, c_big, self.phi);
        let mut tail = self.w_mean * (dm0 + dm1);
        for n in 1..self.weights.len() {
            let nn = n as f64;
            let model_g = self.q_bar + self.a_coef * nn * nn;
            let den = model_g + z;
            tail += self.w_mean * (1.0 + (nn * self.phi).cos()) / (den * den);
        }
        Ok(acc + tail)
    }

    /// Relative model error of the tail: the high modes deviate from the
    /// asymptotic model by `O(1/n)` in phase, so the first neglected-accuracy
    /// term is of order `w_mean / (A n_split^2) / n_split` per the leading
    /// oscillatory cancellation.
    pub fn tail_error_estimate(&self, re_z: f64) -> f64 {
        let n = self.weights.len().max(2) as f64;
        let gamma_n = self.q_bar + self.a_coef * n * n + re_z.max(0.0);
        2.0 * self.w_mean / gamma_n / n
    }

    /// `X(lam_R, lam_I^2, k2)`: the reactive part of the spectral response.
    pub fn x(&self, lam_r: f64, lam_i2: f64, k2: f64) -> Result<f64> {
        if lam_i2 < 0.0 {
            return Err(Error::Domain("lam_I^2 must be nonnegative".into()));
        }
        let z = Complex64::new(lam_r + 2.0 * k2, lam_i2.sqrt());
        Ok(self.s(z)?.re)
    }

    /// `Y(lam_R, lam_I^2, k2)`: the dissipative part.
    pub fn y(&self, lam_r: f64, lam_i2: f64, k2: f64) -> Result<f64> {
        if lam_i2 < 0.0 {
            return Err(Error::Domain("lam_I^2 must be nonnegative".into()));
        }
        let s = lam_r + 2.0 * k2;
        if lam_i2 == 0.0 {
            Ok(-self.s_prime(Complex64::new(s, 0.0))?.re)
        } else {
            let li = lam_i2.sqrt();
            Ok(-self.s(Complex64::new(s, li))?.im / li)
        }
    }
}

/// Closed forms of the model sums at `C` (complex, `Re C > 0`):
/// `m0 = sum 1/(A n^2 + C)`, `m1 = sum cos(n phi)/(A n^2 + C)`.
fn m0_m1(a: f64, c_big: Complex64, phi: f64) -> (Complex64, Complex64) {
    let c = (c_big / a).sqrt(); // Re c > 0 for Re C > 0 (principal branch)
    let pi = std::f64::consts::PI;
    let e_full = (-2.0 * pi * c).exp();
    let e_phi = (-c * phi).exp();
    let e_cophi = (-c * (2.0 * pi - phi)).exp();
    let denom = 1.0 - e_full;
    let coth = (1.0 + e_full) / denom;
    let ratio_cosh = (e_phi + e_cophi) / denom; // cosh(c(pi-phi))/sinh(pi c)
    let m0 = pi * coth / (2.0 * a * c) - 0.5 / c_big;
    let m1 = pi * ratio_cosh / (2.0 * a * c) - 0.5 / c_big;
    (m0, m1)
}

/// Derivatives of the model sums with respect to `C`.
fn dm0_dm1(a: f64, c_big: Complex64, phi: f64) -> (Complex64, Complex64) {
    let c = (c_big / a).sqrt();
    let pi = std::f64::consts::PI;
    let e_full = (-2.0 * pi * c).exp();
    let e_half = (-pi * c).exp();
    let e_phi = (-c * phi).exp();
    let e_cophi = (-c * (2.0 * pi - phi)).exp();
    let denom = 1.0 - e_full;
    let coth = (1.0 + e_full) / denom;
    let csch = 2.0 * e_half / denom;
    let r_cosh = (e_phi + e_cophi) / denom; // cosh(c(pi-phi))/sinh(pi c)
    let r_sinh = (e_phi - e_cophi) / denom; // sinh(c(pi-phi))/sinh(pi c)
    let c2 = c_big * c_big;
    let c3 = c * c * c;
    // d/dC [pi coth(pi c)/(2 A c)] = -pi (pi c csch^2 + coth) / (4 A^2 c^3)
    let dm0 = -pi * (pi * c * csch * csch + coth) / (4.0 * a * a * c3) + 0.5 / c2;
    // R(c) = cosh(c(pi-phi))/sinh(pi c);
    // R'(c) = (pi-phi) sinh(c(pi-phi))/sinh(pi c) - pi R coth(pi c)
    let r = r_cosh;
    let rp = (pi - phi) * r_sinh - pi * r * coth;
    let dm1 = pi * (c * rp - r) / (4.0 * a * a * c3) + 0.5 / c2;
    (dm0, dm1)
}
