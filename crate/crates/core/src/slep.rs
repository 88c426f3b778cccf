//! Scalar singular-limit stability equations over the spectral constants:
//! the spectral response sums `X`, `Y`, the steady-bifurcation curve
//! `k2 = xi(k1)`, region classification of the `(k1, k2)` quadrant, the
//! delayed-coupling imaginary-axis root curves `lambda_1(alpha)`,
//! `lambda_2(alpha)`, Hopf point location, and the transversal speed.

use num_complex::Complex64;
use serde::Serialize;

use crate::roots;
use crate::spectral::SlepConstants;
use crate::{Error, Result};

/// Arguments of the spectral sums.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct XYArgs {
    pub lam_r: f64,
    pub lam_i2: f64,
    pub k2: f64,
}

/// Region of the `(k1, k2)` quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Unstable regardless of the delay.
    Gamma1,
    /// Stable non-delayed; potential delayed bifurcation.
    Gamma2,
    /// `rho0*/2 < k1 < rho0*`: potential delayed bifurcation.
    Gamma31,
    /// `k1 >= rho0*`: stable regardless of the delay.
    Gamma32,
    /// Within float tolerance of a dividing line.
    Boundary,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegionPoint {
    pub k1: f64,
    pub k2: f64,
    pub label: Region,
    /// The curve value at this `k1` when `k1 < rho0*/2`.
    pub xi_k1: Option<f64>,
}

/// Existence regime of the Hopf crossing (the two lemma cases).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HopfCase {
    /// Even crossing count (`k2` slightly below `k2hat*`).
    MultipleCrossings,
    /// Unique crossing in `(alpha_2, alpha_0)`.
    SingleCrossing,
}

/// One crossing of the two root curves.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Crossing {
    pub alpha: f64,
    pub lambda: f64,
    /// 1 for a transversal sign change, 2 for a tangential touch.
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfSolution {
    pub k1: f64,
    pub k2: f64,
    /// Largest crossing: the stability boundary in `alpha`.
    pub alpha_h: f64,
    /// Common imaginary part at the Hopf point.
    pub lam_ih: f64,
    pub alpha0: f64,
    pub alpha1: Option<f64>,
    pub alpha2: f64,
    pub k2hat_star: Option<f64>,
    pub crossings: Vec<Crossing>,
    /// `d lambda_R / d alpha` at the Hopf point (negative for `d > d*`).
    pub dlam_r_dalpha: f64,
    pub case: HopfCase,
    /// `0 < lambda_IH < alpha_2 < alpha_H < alpha_0`: the crossing sits on
    /// the decreasing branch of the delay-mode root curve past its peak at
    /// `alpha_2`, so its imaginary part lies strictly below `alpha_2`.
    pub ordering_ok: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransversalityReport {
    pub dlam_r_dalpha: f64,
    pub i1: f64,
    pub i2: f64,
    pub re_g_lambda: f64,
    pub im_g_lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Slep1Report {
    pub x_hat_00: f64,
    pub rho0_star: f64,
    /// `min over the grid of (tau + k1 alpha/(alpha^2+lam^2)) - Y_hat(0, lam^2)`.
    pub min_margin: f64,
    /// `min over the lambda grid of tau* - Y_hat(0, lam^2)`.
    pub min_margin_tau_star: f64,
    pub n_alpha: usize,
    pub n_lambda: usize,
}

/// The scalar stability system at fixed constants and `tau`.
pub struct Slep<'a> {
    pub c: &'a SlepConstants,
    pub tau: f64,
}

impl<'a> Slep<'a> {
    pub fn new(c: &'a SlepConstants, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("tau must be positive, got {tau}")));
        }
        Ok(Slep { c, tau })
    }

    /// Guard `tau > tau*` required by every delayed-coupling statement.
    pub fn require_tau_above_tau_star(&self) -> Result<()> {
        if !(self.tau > self.c.tau_star) {
            return Err(Error::Regime(format!(
                "tau = {} must exceed tau* = {}",
                self.tau, self.c.tau_star
            )));
        }
        Ok(())
    }

    pub fn x(&self, args: XYArgs) -> Result<f64> {
        self.c.sum.x(args.lam_r, args.lam_i2, args.k2)
    }

    pub fn y(&self, args: XYArgs) -> Result<f64> {
        self.c.sum.y(args.lam_r, args.lam_i2, args.k2)
    }

    fn x00(&self, k2: f64) -> Result<f64> {
        self.c.sum.x(0.0, 0.0, k2)
    }

    /// The steady-bifurcation curve: unique root of
    /// `rho0* - 2 k1 - X(0,0,k2) = 0` for `0 < k1 < rho0*/2`.
    pub fn turing_curve_xi(&self, k1: f64) -> Result<f64> {
        let rho = self.c.rho0_star;
        let rel = (2.0 * k1 - rho).abs() / rho;
        if rel <= 1e-12 {
            return Err(Error::Domain(
                "k1 = rho0*/2 exactly: boundary point, the curve diverges".into(),
            ));
        }
        if k1 >= rho / 2.0 {
            return Err(Error::Domain(format!(
                "no curve: region Gamma3 (k1 = {k1} >= rho0*/2 = {})",
                rho / 2.0
            )));
        }
        if !(k1 > 0.0) {
            return Err(Error::Domain("k1 must be positive".into()));
        }
        let target = rho - 2.0 * k1;
        // H(k2) = target - X(0,0,k2); increasing in k2 from negative
        let f = |k2: f64| -> f64 { target - self.x00(k2).unwrap() };
        let root = roots::bracket_and_solve(f, 0.0, self.c.sum.gamma0(), 1e18, 1e-14)?;
        // Newton polish with the analytic derivative dH/dk2 = 2 Y(0,0,k2)
        let polished = roots::newton_polish(
            |k2| (f(k2), 2.0 * self.c.sum.y(0.0, 0.0, k2).unwrap()),
            root,
            0.0,
            f64::INFINITY,
            4,
        );
        Ok(polished)
    }

    /// Classify a point of the `(k1, k2)` quadrant.
    pub fn classify(&self, k1: f64, k2: f64) -> Result<RegionPoint> {
        if !(k1 > 0.0 && k2 > 0.0) {
            return Err(Error::Domain("classification needs k1, k2 > 0".into()));
        }
        let rho = self.c.rho0_star;
        let btol = 1e-12;
        let xi_k1 = if k1 < rho / 2.0 * (1.0 - btol) {
            Some(self.turing_curve_xi(k1)?)
        } else {
            None
        };
        let label = if (2.0 * k1 - rho).abs() <= btol * rho || (k1 - rho).abs() <= btol * rho {
            Region::Boundary
        } else if k1 > rho {
            Region::Gamma32
        } else if k1 > rho / 2.0 {
            Region::Gamma31
        } else {
            let x = self.x00(k2)?;
            let gap = x - (rho - 2.0 * k1);
            if gap.abs() <= btol * x.abs().max(rho) {
                Region::Boundary
            } else if gap > 0.0 {
                Region::Gamma2
            } else {
                Region::Gamma1
            }
        };
        Ok(RegionPoint {
            k1,
            k2,
            label,
            xi_k1,
        })
    }

    /// `alpha_0 = k1 / (tau - Y(0,0,k2))`: no imaginary crossing at or above.
    pub fn alpha0(&self, k1: f64, k2: f64) -> Result<f64> {
        self.require_tau_above_tau_star()?;
        let y = self.c.sum.y(0.0, 0.0, k2)?;
        Ok(k1 / (self.tau - y))
    }

    /// Unique root of `X(0, alpha^2, k2) + 3 k1/2 - rho0* = 0` when it
    /// exists (`k1 < 2 rho0*/3` and `k2 < k2hat*`).
    pub fn alpha1(&self, k1: f64, k2: f64) -> Result<f64> {
        let rho = self.c.rho0_star;
        let f0 = self.x00(k2)? + 1.5 * k1 - rho;
        if f0 <= 0.0 {
            return Err(Error::Regime(format!(
                "no alpha_1: the threshold function is already nonpositive at \
                 alpha -> 0+ ({f0:.3e}); requires k2 < k2hat* and k1 < 2 rho0*/3"
            )));
        }
        if k1 >= 2.0 * rho / 3.0 {
            return Err(Error::Regime(format!(
                "no alpha_1: k1 = {k1} >= 2 rho0*/3 keeps the function positive"
            )));
        }
        let f = |al: f64| self.c.sum.x(0.0, al * al, k2).unwrap() + 1.5 * k1 - rho;
        roots::bracket_and_solve(f, 0.0, self.c.sum.gamma0(), 1e18, 1e-15)
    }

    /// Unique root of `Y(0, alpha^2, k2) + k1/(2 alpha) - tau = 0` in
    /// `(0, alpha_0)`: the peak location of `lambda_2`.
    pub fn alpha2(&self, k1: f64, k2: f64) -> Result<f64> {
        self.require_tau_above_tau_star()?;
        let a0 = self.alpha0(k1, k2)?;
        let f = |al: f64| self.c.sum.y(0.0, al * al, k2).unwrap() + 0.5 * k1 / al - self.tau;
        let lo = a0 * 1e-12;
        let root = roots::brent(f, lo, a0, 1e-15 * a0)?;
        Ok(roots::newton_polish(
            |al| {
                let h = 1e-7 * al;
                ((f)(al), ((f)(al + h) - (f)(al - h)) / (2.0 * h))
            },
            root,
            lo,
            a0,
            2,
        ))
    }

    /// Unique root of `X(0, 0, k2hat*) = rho0* - 3 k1/2` for `k1 < 2 rho0*/3`.
    pub fn k2hat_star(&self, k1: f64) -> Result<f64> {
        let rho = self.c.rho0_star;
        if !(k1 > 0.0 && k1 < 2.0 * rho / 3.0) {
            return Err(Error::Domain(format!(
                "k2hat* requires 0 < k1 < 2 rho0*/3, got {k1}"
            )));
        }
        let target = rho - 1.5 * k1;
        let f = |k2: f64| target - self.x00(k2).unwrap();
        roots::bracket_and_solve(f, 0.0, self.c.sum.gamma0(), 1e18, 1e-14)
    }

    /// The steady-mode imaginary root `lambda_1(alpha)`: unique positive
    /// solution of `X(0, l^2, k2) = rho0* - k1 (1 + alpha^2/(alpha^2+l^2))`.
    pub fn lambda_i1(&self, alpha: f64, k1: f64, k2: f64) -> Result<f64> {
        let rho = self.c.rho0_star;
        let d0 = self.x00(k2)? - (rho - 2.0 * k1);
        if d0 <= 0.0 {
            return Err(Error::Regime(format!(
                "lambda_1 undefined: X(0,0,k2) - (rho0* - 2 k1) = {d0:.3e} <= 0 \
                 (the point is not in Gamma2 or Gamma3-1)"
            )));
        }
        let diff = |l2: f64| {
            self.c.sum.x(0.0, l2, k2).unwrap()
                - (rho - k1 * (1.0 + alpha * alpha / (alpha * alpha + l2)))
        };
        // strictly decreasing difference: bracket by doubling from the
        // natural root scale alpha^2
        let mut hi = alpha * alpha;
        let mut count = 0;
        while diff(hi) > 0.0 {
            hi *= 4.0;
            count += 1;
            if count > 300 {
                return Err(Error::Bracket("lambda_1 bracket explosion".into()));
            }
        }
        let l2 = roots::brent(diff, 0.0, hi, 0.0)?;
        Ok(l2.max(0.0).sqrt())
    }

    /// The delay-mode imaginary root `lambda_2(alpha)`: unique positive
    /// solution of `Y(0, l^2, k2) = tau - k1 alpha/(alpha^2+l^2)`,
    /// defined for `alpha` in `(0, alpha_0)`.
    pub fn lambda_i2(&self, alpha: f64, k1: f64, k2: f64) -> Result<f64> {
        self.require_tau_above_tau_star()?;
        let a0 = self.alpha0(k1, k2)?;
        if !(alpha > 0.0 && alpha < a0) {
            return Err(Error::Domain(format!(
                "lambda_2 defined on (0, alpha_0 = {a0}), got alpha = {alpha}"
            )));
        }
        let diff = |l2: f64| {
            self.c.sum.y(0.0, l2, k2).unwrap()
                - (self.tau - k1 * alpha / (alpha * alpha + l2))
        };
        let scale = (k1 * alpha / self.tau).max(alpha * alpha);
        let mut hi = scale;
        let mut count = 0;
        while diff(hi) > 0.0 {
            hi *= 4.0;
            count += 1;
            if count > 300 {
                return Err(Error::Bracket("lambda_2 bracket explosion".into()));
            }
        }
        let l2 = roots::brent(diff, 0.0, hi, 0.0)?;
        Ok(l2.max(0.0).sqrt())
    }

    /// Scan `(0, alpha_0)` for crossings of the two root curves and return
    /// the Hopf data. The scan grid is fixed (log-spaced, 512 points,
    /// escalating by 4x up to 32768), so identical inputs give identical
    /// output bit for bit.
    pub fn find_hopf(&self, k1: f64, k2: f64) -> Result<HopfSolution> {
        self.require_tau_above_tau_star()?;
        let region = self.classify(k1, k2)?;
        match region.label {
            Region::Gamma2 | Region::Gamma31 => {}
            other => {
                return Err(Error::Regime(format!(
                    "Hopf scan requires Gamma2 or Gamma3-1; point is {other:?}"
                )))
            }
        }
        let rho = self.c.rho0_star;
        let alpha0 = self.alpha0(k1, k2)?;
        let alpha2 = self.alpha2(k1, k2)?;
        let k2hat = if k1 < 2.0 * rho / 3.0 {
            Some(self.k2hat_star(k1)?)
        } else {
            None
        };
        let alpha1 = match self.alpha1(k1, k2) {
            Ok(a) => Some(a),
            Err(Error::Regime(_)) => None,
            Err(e) => return Err(e),
        };
        // guaranteed-existence regimes (unique crossing)
        let in_388a = k1 < rho / 2.0
            && k2hat.map(|kh| k2 >= kh).unwrap_or(false)
            && region.xi_k1.map(|xi| k2 < xi).unwrap_or(false);
        let in_388b = k1 > rho / 2.0
            && k1 < 2.0 * rho / 3.0
            && k2hat.map(|kh| k2 >= kh).unwrap_or(false);
        let guaranteed = in_388a || in_388b;

        let mut n_grid = 512usize;
        let crossings = loop {
            let mut found: Vec<Crossing> = Vec::new();
            let lo = alpha0 * 1e-6;
            let hi = alpha0 * (1.0 - 1e-9);
            let ratio = (hi / lo).powf(1.0 / (n_grid - 1) as f64);
            let mut prev_alpha = lo;
            let mut prev_diff =
                self.lambda_i1(prev_alpha, k1, k2)? - self.lambda_i2(prev_alpha, k1, k2)?;
            let mut diffs = vec![(prev_alpha, prev_diff)];
            for i in 1..n_grid {
                let al = lo * ratio.powi(i as i32);
                let diff = self.lambda_i1(al, k1, k2)? - self.lambda_i2(al, k1, k2)?;
                diffs.push((al, diff));
                if prev_diff == 0.0 {
                    found.push(Crossing {
                        alpha: prev_alpha,
                        lambda: self.lambda_i1(prev_alpha, k1, k2)?,
                        multiplicity: 1,
                    });
                } else if prev_diff * diff < 0.0 {
                    let root = roots::brent(
                        |al| {
                            self.lambda_i1(al, k1, k2).unwrap()
                                - self.lambda_i2(al, k1, k2).unwrap()
                        },
                        prev_alpha,
                        al,
                        1e-14 * alpha0,
                    )?;
                    found.push(Crossing {
                        alpha: root,
                        lambda: self.lambda_i1(root, k1, k2)?,
                        multiplicity: 1,
                    });
                }
                prev_alpha = al;
                prev_diff = diff;
            }
            // tangential touches: interior minima of |diff| below threshold
            // without a sign change
            for w in diffs.windows(3) {
                let (_, d0) = w[0];
                let (a1, d1) = w[1];
                let (_, d2) = w[2];
                if d1.abs() < d0.abs()
                    && d1.abs() < d2.abs()
                    && d1.abs() < 1e-8
                    && d0 * d2 > 0.0
                    && !found.iter().any(|c| (c.alpha - a1).abs() < 1e-6 * alpha0)
                {
                    found.push(Crossing {
                        alpha: a1,
                        lambda: self.lambda_i1(a1, k1, k2)?,
                        multiplicity: 2,
                    });
                }
            }
            if !found.is_empty() || !guaranteed {
                break found;
            }
            if n_grid >= 32768 {
                return Err(Error::Convergence(format!(
                    "no crossing found in a guaranteed regime at (k1,k2) = \
                     ({k1},{k2}) after escalating to {n_grid} scan points; \
                     scan range ({lo:.3e}, {hi:.3e})"
                )));
            }
            n_grid *= 4;
        };
        if crossings.is_empty() {
            return Err(Error::Regime(format!(
                "no Hopf crossing at (k1,k2) = ({k1},{k2}): outside the \
                 guaranteed regimes (k2hat* = {k2hat:?}, xi = {:?})",
                region.xi_k1
            )));
        }
        let mut crossings = crossings;
        crossings.sort_by(|p, q| p.alpha.partial_cmp(&q.alpha).unwrap());
        let last = *crossings.last().unwrap();
        let alpha_h = last.alpha;
        let lam_ih = last.lambda;
        let count: u32 = crossings.iter().map(|c| c.multiplicity).sum();
        let case = if count >= 2 {
            HopfCase::MultipleCrossings
        } else {
            HopfCase::SingleCrossing
        };
        let ordering_ok =
            0.0 < lam_ih && lam_ih < alpha2 && alpha2 < alpha_h && alpha_h < alpha0;
        if (in_388a || in_388b) && !(lam_ih < alpha_h && alpha_h < alpha0) {
            return Err(Error::Convergence(format!(
                "crossing structure violated in a guaranteed regime: \
                 lambda_IH = {lam_ih}, alpha_H = {alpha_h}, alpha_0 = {alpha0}"
            )));
        }
        let trans = self.transversality(alpha_h, lam_ih, k1, k2)?;
        Ok(HopfSolution {
            k1,
            k2,
            alpha_h,
            lam_ih,
            alpha0,
            alpha1,
            alpha2,
            k2hat_star: k2hat,
            crossings,
            dlam_r_dalpha: trans.dlam_r_dalpha,
            case,
            ordering_ok,
        })
    }

    /// Transversal speed of the critical pair at a Hopf point.
    pub fn transversality(
        &self,
        alpha_h: f64,
        lam_ih: f64,
        k1: f64,
        k2: f64,
    ) -> Result<TransversalityReport> {
        let z = Complex64::new(2.0 * k2, lam_ih);
        let sp = self.c.sum.s_prime(z)?;
        // sum [(g+2k2)^2 - l^2]/[((g+2k2)^2+l^2)^2] w = -Re S'
        let s1 = -sp.re;
        // sum (g+2k2)/[((g+2k2)^2+l^2)^2] w = Im S'/(2 l)
        let s2 = sp.im / (2.0 * lam_ih);
        let den = (alpha_h * alpha_h + lam_ih * lam_ih).powi(2);
        let i1 = (self.tau - s1) * 2.0 * alpha_h * k1 * lam_ih * lam_ih / den;
        let i2 = 2.0 * k1 * lam_ih * lam_ih * (alpha_h * alpha_h - lam_ih * lam_ih) / den * s2;
        let re_g = -self.tau + alpha_h * k1 * (alpha_h * alpha_h - lam_ih * lam_ih) / den + s1;
        let im_g = -2.0 * k1 * alpha_h * alpha_h * lam_ih / den - 2.0 * lam_ih * s2;
        if im_g >= 0.0 {
            return Err(Error::Convergence(format!(
                "Im dG/dlambda = {im_g} >= 0 contradicts the displayed inequality"
            )));
        }
        Ok(TransversalityReport {
            dlam_r_dalpha: -(i1 + i2) / (re_g * re_g + im_g * im_g),
            i1,
            i2,
            re_g_lambda: re_g,
            im_g_lambda: im_g,
        })
    }

    /// Non-delayed complex characteristic function
    /// `F*(lambda) = rho0* - 2 k1 - tau lambda - S(2 k2 + lambda)`.
    pub fn f_star(&self, lambda: Complex64, k1: f64, k2: f64) -> Result<Complex64> {
        let s = self.c.sum.s(lambda + 2.0 * k2)?;
        Ok(self.c.rho0_star - 2.0 * k1 - self.tau * lambda - s)
    }

    /// `dF*/dlambda = -tau - S'(2 k2 + lambda)`.
    pub fn f_star_prime(&self, lambda: Complex64, k2: f64) -> Result<Complex64> {
        Ok(-self.tau - self.c.sum.s_prime(lambda + 2.0 * k2)?)
    }

    /// Delayed complex characteristic function
    /// `G*(lambda, alpha) = rho0* - tau lambda - k1 (alpha/(alpha+lambda) + 1)
    ///  - S(lambda + 2 k2)`.
    pub fn g_star(&self, lambda: Complex64, alpha: f64, k1: f64, k2: f64) -> Result<Complex64> {
        let s = self.c.sum.s(lambda + 2.0 * k2)?;
        Ok(self.c.rho0_star
            - self.tau * lambda
            - k1 * (alpha / (alpha + lambda) + 1.0)
            - s)
    }

    /// `dG*/dlambda = -tau + k1 alpha/(alpha+lambda)^2 - S'(lambda + 2 k2)`.
    pub fn g_star_prime(
        &self,
        lambda: Complex64,
        alpha: f64,
        k2: f64,
        k1: f64,
    ) -> Result<Complex64> {
        let den = alpha + lambda;
        Ok(-self.tau + k1 * alpha / (den * den) - self.c.sum.s_prime(lambda + 2.0 * k2)?)
    }

    /// Complex Newton on `F*` (alpha = None) or `G*` (alpha = Some) from a
    /// seed inside the resolvent region.
    pub fn complex_slep_root(
        &self,
        seed: Complex64,
        alpha: Option<f64>,
        k1: f64,
        k2: f64,
    ) -> Result<Complex64> {
        let mut lam = seed;
        let scale = self.c.rho0_star.abs() + self.tau * seed.norm() + 1.0;
        for _ in 0..80 {
            let (val, der) = match alpha {
                None => (self.f_star(lam, k1, k2)?, self.f_star_prime(lam, k2)?),
                Some(al) => (
                    self.g_star(lam, al, k1, k2)?,
                    self.g_star_prime(lam, al, k2, k1)?,
                ),
            };
            if val.norm() <= 1e-13 * scale {
                return Ok(lam);
            }
            if der.norm() == 0.0 {
                return Err(Error::Convergence("degenerate derivative in complex Newton".into()));
            }
            let step = val / der;
            let next = lam - step;
            if next.re + 2.0 * k2 <= -self.c.sum.gamma0() {
                return Err(Error::Domain(
                    "complex Newton left the resolvent region".into(),
                ));
            }
            lam = next;
            if step.norm() <= 1e-15 * (1.0 + lam.norm()) {
                break;
            }
        }
        let final_val = match alpha {
            None => self.f_star(lam, k1, k2)?,
            Some(al) => self.g_star(lam, al, k1, k2)?,
        };
        if final_val.norm() > 1e-10 * scale {
            return Err(Error::Convergence(format!(
                "complex Newton stalled at |value| = {:.3e}",
                final_val.norm()
            )));
        }
        Ok(lam)
    }

    /// Sampled verification that the symmetric-mode delayed equation admits
    /// no eigenvalue crossing: `X_hat(0,0) > rho0*` and
    /// `Y_hat(0, l^2) < tau + k1 alpha/(alpha^2+l^2)` on the grids.
    pub fn slep1_no_crossing_check(
        &self,
        k1: f64,
        alpha_grid: &[f64],
        lambda_grid: &[f64],
    ) -> Result<Slep1Report> {
        self.require_tau_above_tau_star()?;
        let x_hat = self.c.sum.x(0.0, 0.0, 0.0)?;
        if x_hat <= self.c.rho0_star {
            return Err(Error::Regime(format!(
                "SLEP-1 violation: X_hat(0,0) = {x_hat} <= rho0* = {} \
                 (contradicts theory)",
                self.c.rho0_star
            )));
        }
        let mut min_margin = f64::INFINITY;
        let mut min_margin_tau_star = f64::INFINITY;
        for &lam in lambda_grid {
            let y_hat = self.c.sum.y(0.0, lam * lam, 0.0)?;
            min_margin_tau_star = min_margin_tau_star.min(self.c.tau_star - y_hat);
            for &al in alpha_grid {
                let rhs = self.tau + k1 * al / (al * al + lam * lam);
                min_margin = min_margin.min(rhs - y_hat);
            }
        }
        if min_margin <= 0.0 || min_margin_tau_star < 0.0 {
            return Err(Error::Regime(format!(
                "SLEP-1 violation: margin {min_margin} / {min_margin_tau_star} \
                 (contradicts theory)"
            )));
        }
        Ok(Slep1Report {
            x_hat_00: x_hat,
            rho0_star: self.c.rho0_star,
            min_margin,
            min_margin_tau_star,
            n_alpha: alpha_grid.len(),
            n_lambda: lambda_grid.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{Alpha, ModelParams};
    use crate::profile::solve_reduced;
    use crate::spectral::{constants, eig_slow, SlepConstants};
    use std::sync::OnceLock;

    /// Heteroclinic-energy oracle for rho0* at (a=10, sigma=8, d=1, ell=1),
    /// computed independently before the build.
    const RHO0_ORACLE: f64 = 0.3787372200245426;

    static FIXTURE: OnceLock<(SlepConstants, f64)> = OnceLock::new();

    fn fx() -> &'static (SlepConstants, f64) {
        FIXTURE.get_or_init(|| {
            let p = ModelParams {
                a: 10.0,
                sigma: 8.0,
                eps: 0.05,
                tau: 14.0,
                d: 1.0,
                k1: 0.0,
                k2: 0.0,
                ell: 1.0,
                alpha: Alpha::<f64>::Infinite,
            };
            let profile = solve_reduced(&p, 1e-6).unwrap();
            let basis = eig_slow(&profile, p.d, 256, 4096).unwrap();
            let c = constants(&profile, &basis, RHO0_ORACLE).unwrap();
            let tau = 2.0 * c.tau_star;
            (c, tau)
        })
    }

    fn slep() -> Slep<'static> {
        let (c, tau) = fx();
        Slep::new(c, *tau).unwrap()
    }

    #[test]
    fn response_sum_suite() {
        // sign/identity battery on a sampled grid
        let s = slep();
        let g0 = s.c.sum.gamma0();
        let x000 = s.x(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2: 0.0 }).unwrap();
        assert!(x000 > s.c.rho0_star);
        let y000 = s.y(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2: 0.0 }).unwrap();
        assert!((y000 - s.c.tau_star).abs() < 1e-14 * s.c.tau_star);
        for i in 0..10 {
            for j in 0..10 {
                for m in 0..10 {
                    let lam_r = 0.4 * i as f64;
                    let lam_i2 = 0.8 * j as f64;
                    let k2 = 2.0 * m as f64;
                    let h = 1e-5;
                    let xp = s.x(XYArgs { lam_r, lam_i2: lam_i2 + h, k2 }).unwrap();
                    let xm = s.x(XYArgs { lam_r, lam_i2: (lam_i2 - h).max(0.0), k2 }).unwrap();
                    assert!(xp < xm, "dX/dlamI2 >= 0 at ({lam_r},{lam_i2},{k2})");
                    let yp = s.y(XYArgs { lam_r, lam_i2: lam_i2 + h, k2 }).unwrap();
                    let ym = s.y(XYArgs { lam_r, lam_i2: (lam_i2 - h).max(0.0), k2 }).unwrap();
                    assert!(yp < ym, "dY/dlamI2 >= 0");
                    let yrp = s.y(XYArgs { lam_r: lam_r + h, lam_i2, k2 }).unwrap();
                    let yrm = s.y(XYArgs { lam_r: lam_r - h, lam_i2, k2 }).unwrap();
                    assert!(yrp < yrm, "dY/dlamR >= 0");
                    // no-complex-crossing bound: Y < tau* strictly off the origin
                    if i + j + m > 0 {
                        let y = s.y(XYArgs { lam_r, lam_i2, k2 }).unwrap();
                        assert!(y < s.c.tau_star, "Y = {y} >= tau* at ({lam_r},{lam_i2},{k2})");
                    }
                }
            }
        }
        // identity dX/dlamR(0,0,k2) = -Y(0,0,k2), and half dY/dk2 = dY/dlamR
        for k2 in [0.0, 1.0, 7.0, 40.0] {
            let h = 1e-6;
            let dx = (s.x(XYArgs { lam_r: h, lam_i2: 0.0, k2 }).unwrap()
                - s.x(XYArgs { lam_r: -h, lam_i2: 0.0, k2 }).unwrap())
                / (2.0 * h);
            let y = s.y(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2 }).unwrap();
            assert!((dx + y).abs() < 1e-6 * y, "identity off at k2={k2}: {dx} vs {}", -y);
            let dyk = (s.y(XYArgs { lam_r: 0.3, lam_i2: 0.5, k2: k2 + h }).unwrap()
                - s.y(XYArgs { lam_r: 0.3, lam_i2: 0.5, k2: k2 - h }).unwrap())
                / (2.0 * h);
            let dyr = (s.y(XYArgs { lam_r: 0.3 + h, lam_i2: 0.5, k2 }).unwrap()
                - s.y(XYArgs { lam_r: 0.3 - h, lam_i2: 0.5, k2 }).unwrap())
                / (2.0 * h);
            assert!(
                (0.5 * dyk - dyr).abs() < 1e-6 * dyr.abs(),
                "half dY/dk2 != dY/dlamR at k2={k2}"
            );
        }
        // decay probes
        let far = 1e6 * g0;
        assert!(s.x(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2: far }).unwrap() < 1e-3 * x000);
        assert!(s.x(XYArgs { lam_r: 0.0, lam_i2: far * far, k2: 0.0 }).unwrap() < 1e-3 * x000);
        assert!(s.y(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2: far }).unwrap() < 1e-3 * y000);
    }

    #[test]
    fn turing_curve_residual_monotone_blowup() {
        let s = slep();
        let rho = s.c.rho0_star;
        let mut prev = 0.0;
        for i in 0..50 {
            let k1 = rho / 2.0 * (0.02 + 0.96 * i as f64 / 49.0);
            let xi = s.turing_curve_xi(k1).unwrap();
            let resid = rho - 2.0 * k1
                - s.x(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2: xi }).unwrap();
            assert!(resid.abs() < 1e-10, "residual {resid:.2e} at k1={k1}");
            assert!(xi > prev, "xi not increasing at k1={k1}");
            prev = xi;
        }
        // divergence probe near k1 = rho0*/2
        let xi_mid = s.turing_curve_xi(0.25 * rho).unwrap();
        let xi_edge = s.turing_curve_xi(0.499 * rho).unwrap();
        assert!(
            xi_edge > 100.0 * xi_mid,
            "blow-up probe failed: {xi_edge} vs {xi_mid}"
        );
        // desk cross-check
        assert!((xi_mid - 19.416).abs() < 0.15, "xi(0.25 rho) = {xi_mid}");
    }

    #[test]
    fn turing_curve_domain_errors() {
        let s = slep();
        let rho = s.c.rho0_star;
        match s.turing_curve_xi(0.6 * rho) {
            Err(Error::Domain(m)) => assert!(m.contains("Gamma3")),
            other => panic!("expected Gamma3 diagnostic, got {other:?}"),
        }
        assert!(s.turing_curve_xi(rho / 2.0).is_err());
    }

    #[test]
    fn classification_matches_curve_sides() {
        let s = slep();
        let rho = s.c.rho0_star;
        assert_eq!(s.classify(2.0 * rho, 1.0).unwrap().label, Region::Gamma32);
        assert_eq!(s.classify(0.7 * rho, 1.0).unwrap().label, Region::Gamma31);
        let k1 = 0.25 * rho;
        let xi = s.turing_curve_xi(k1).unwrap();
        assert_eq!(s.classify(k1, 0.5 * xi).unwrap().label, Region::Gamma2);
        assert_eq!(s.classify(k1, 2.0 * xi).unwrap().label, Region::Gamma1);
        assert_eq!(s.classify(rho / 2.0, 1.0).unwrap().label, Region::Boundary);
        // the Gamma1/Gamma2 boundary is the curve itself
        let p = s.classify(k1, xi).unwrap();
        assert!(p.label == Region::Boundary || p.xi_k1.is_some());
    }

    #[test]
    fn alpha_thresholds_and_limits() {
        let s = slep();
        let rho = s.c.rho0_star;
        let tau = s.tau;
        let k1 = 0.55 * rho; // Gamma3-1, below 2 rho/3
        let k2 = 1e4 * s.c.sum.gamma0();
        let a0 = s.alpha0(k1, k2).unwrap();
        let a2 = s.alpha2(k1, k2).unwrap();
        assert!(a2 > 0.0 && a2 < a0);
        // alpha2 -> k1/(2 tau) as k2 -> infinity (1%)
        let limit = k1 / (2.0 * tau);
        assert!(
            (a2 - limit).abs() < 0.01 * limit,
            "alpha2 = {a2} vs limit {limit}"
        );
        // monotonicity in k2 (decreasing) and k1 (increasing)
        let a2_small_k2 = s.alpha2(k1, 100.0).unwrap();
        assert!(a2_small_k2 > a2);
        let a2_bigger_k1 = s.alpha2(1.1 * k1, k2).unwrap();
        assert!(a2_bigger_k1 > a2);
        // k2hat* < xi(k1) on Gamma2 side
        let k1g2 = 0.3 * rho;
        let kh = s.k2hat_star(k1g2).unwrap();
        let xi = s.turing_curve_xi(k1g2).unwrap();
        assert!(kh < xi, "k2hat* = {kh} !< xi = {xi}");
        // alpha1 existence/diagnostic
        assert!(s.alpha1(k1g2, 0.9 * kh).is_ok());
        match s.alpha1(k1g2, 1.1 * kh) {
            Err(Error::Regime(m)) => assert!(m.contains("no alpha_1")),
            other => panic!("expected no-alpha_1 diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn lambda_curves_structure() {
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.55 * rho;
        let k2 = 1e4 * s.c.sum.gamma0();
        let a0 = s.alpha0(k1, k2).unwrap();
        let a2 = s.alpha2(k1, k2).unwrap();
        // lambda_2(alpha_2) = alpha_2 (fixed point at the peak)
        let l2_peak = s.lambda_i2(a2, k1, k2).unwrap();
        assert!(
            (l2_peak - a2).abs() < 1e-8 * a2,
            "lambda_2(alpha_2) = {l2_peak} vs {a2}"
        );
        // lambda_2 -> 0 at both ends of (0, alpha_0)
        let l2_lo = s.lambda_i2(a0 * 1e-6, k1, k2).unwrap();
        let l2_hi = s.lambda_i2(a0 * (1.0 - 1e-9), k1, k2).unwrap();
        assert!(l2_lo < 0.02 * l2_peak && l2_hi < 0.02 * l2_peak);
        // lambda_1 increasing in alpha
        let mut prev = 0.0;
        for i in 1..=12 {
            let al = a0 * i as f64 / 12.0;
            let l1 = s.lambda_i1(al, k1, k2).unwrap();
            assert!(l1 > prev, "lambda_1 not increasing at alpha={al}");
            prev = l1;
        }
        // k2 -> infinity closed forms at a deep probe (the approach is
        // O(1/sqrt(k2)) so the tight check sits at 1e8 gamma_0)
        let deep = 1e8 * s.c.sum.gamma0();
        let al = 0.5 * s.alpha0(k1, deep).unwrap();
        let l1 = s.lambda_i1(al, k1, deep).unwrap();
        let l1_limit = al * ((2.0 * k1 - rho) / (rho - k1)).sqrt();
        assert!(
            (l1 - l1_limit).abs() < 0.01 * l1_limit,
            "lambda_1 = {l1} vs limit {l1_limit}"
        );
        let l2 = s.lambda_i2(al, k1, deep).unwrap();
        let l2_limit = (k1 * al / s.tau - al * al).sqrt();
        assert!(
            (l2 - l2_limit).abs() < 0.01 * l2_limit,
            "lambda_2 = {l2} vs limit {l2_limit}"
        );
    }

    #[test]
    fn lambda1_trichotomy_with_alpha1() {
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.3 * rho;
        let kh = s.k2hat_star(k1).unwrap();
        let k2 = 0.8 * kh;
        let a1 = s.alpha1(k1, k2).unwrap();
        let below = s.lambda_i1(0.5 * a1, k1, k2).unwrap();
        assert!(below > 0.5 * a1, "lambda_1 < alpha below alpha_1");
        let at = s.lambda_i1(a1, k1, k2).unwrap();
        assert!((at - a1).abs() < 1e-7 * a1, "lambda_1(alpha_1) = {at} vs {a1}");
        let above = s.lambda_i1(2.0 * a1, k1, k2).unwrap();
        assert!(above < 2.0 * a1, "lambda_1 > alpha above alpha_1");
    }

    #[test]
    fn hopf_single_crossing_regime() {
        // (rho/2, 2 rho/3) with k2 >= k2hat*: unique crossing with the
        // stated ordering
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.58 * rho;
        let kh = s.k2hat_star(k1).unwrap();
        let k2 = 1.5 * kh;
        let h = s.find_hopf(k1, k2).unwrap();
        assert_eq!(h.case, HopfCase::SingleCrossing);
        assert_eq!(h.crossings.len(), 1);
        assert!(h.ordering_ok);
        assert!(h.lam_ih < h.alpha2 && h.alpha2 < h.alpha_h && h.alpha_h < h.alpha0);
        assert!(h.dlam_r_dalpha < 0.0, "transversal speed {}", h.dlam_r_dalpha);
        // determinism: identical inputs, identical bits
        let h2 = s.find_hopf(k1, k2).unwrap();
        assert_eq!(h.alpha_h.to_bits(), h2.alpha_h.to_bits());
        assert_eq!(h.lam_ih.to_bits(), h2.lam_ih.to_bits());
    }

    #[test]
    fn hopf_deep_k2_limit() {
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.8 * rho;
        let deep = 1e8 * s.c.sum.gamma0();
        let h = s.find_hopf(k1, deep).unwrap();
        let a_lim = (rho - k1) / s.tau;
        let l_lim = ((2.0 * k1 - rho) * (rho - k1)).sqrt() / s.tau;
        assert!(
            (h.alpha_h - a_lim).abs() < 0.01 * a_lim,
            "alpha_H = {} vs {a_lim}",
            h.alpha_h
        );
        assert!(
            (h.lam_ih - l_lim).abs() < 0.01 * l_lim,
            "lambda_IH = {} vs {l_lim}",
            h.lam_ih
        );
    }

    #[test]
    fn hopf_crossing_structure_below_k2hat() {
        // measured structure: a unique transversal crossing persists through
        // the whole window below k2hat* down to the intercept threshold
        // where X(0,0,k2) = rho0* - k1; below that threshold the root curves
        // never meet (no delayed destabilization). The even-count scenario
        // suggested for this window does not occur at these parameters.
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.58 * rho;
        let kh = s.k2hat_star(k1).unwrap();
        let h = s.find_hopf(k1, 0.985 * kh).unwrap();
        let count: u32 = h.crossings.iter().map(|c| c.multiplicity).sum();
        assert_eq!(count, 1, "crossing count");
        // below k2hat* the steady-mode curve exceeds the diagonal, so the
        // crossing sits left of the delay-mode peak with lambda > alpha
        assert!(h.lam_ih > h.alpha_h, "expected lambda > alpha below k2hat*");
        assert!(h.alpha_h < h.alpha2);
        // intercept threshold: root of X(0,0,k2) = rho - k1
        let f = |k2: f64| rho - k1 - s.x(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2 }).unwrap();
        let kcheck = crate::roots::bracket_and_solve(f, 1e-6, 1.0, 1e9, 1e-10).unwrap();
        assert!(kcheck < kh);
        match s.find_hopf(k1, 0.5 * kcheck) {
            Err(Error::Regime(m)) => assert!(m.contains("no Hopf crossing")),
            other => panic!("expected no-crossing diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn transversality_formula_vs_tracked_root() {
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.58 * rho;
        let kh = s.k2hat_star(k1).unwrap();
        let k2 = 1.5 * kh;
        let h = s.find_hopf(k1, k2).unwrap();
        let rep = s.transversality(h.alpha_h, h.lam_ih, k1, k2).unwrap();
        assert!(rep.i2 > 0.0);
        assert!(rep.i1 > 0.0, "I1 = {} (d large enough here)", rep.i1);
        assert!(rep.dlam_r_dalpha < 0.0);
        assert!(rep.im_g_lambda < 0.0);
        // finite-difference of the tracked complex root of G*
        let delta = 1e-5 * h.alpha_h;
        let seed = Complex64::new(0.0, h.lam_ih);
        let lam_p = s
            .complex_slep_root(seed, Some(h.alpha_h + delta), k1, k2)
            .unwrap();
        let lam_m = s
            .complex_slep_root(seed, Some(h.alpha_h - delta), k1, k2)
            .unwrap();
        let fd = (lam_p.re - lam_m.re) / (2.0 * delta);
        assert!(
            (fd - rep.dlam_r_dalpha).abs() < 1e-3 * rep.dlam_r_dalpha.abs(),
            "formula {} vs tracked {fd}",
            rep.dlam_r_dalpha
        );
    }

    #[test]
    fn complex_roots_on_turing_curve_and_hopf() {
        let s = slep();
        let rho = s.c.rho0_star;
        let k1 = 0.25 * rho;
        let xi = s.turing_curve_xi(k1).unwrap();
        // lambda = 0 is a root of F* on the curve
        let f0 = s.f_star(Complex64::new(0.0, 0.0), k1, xi).unwrap();
        assert!(f0.norm() < 1e-10, "|F*(0)| = {}", f0.norm());
        let fp = s.f_star_prime(Complex64::new(0.0, 0.0), xi).unwrap();
        let expect = -s.tau + s.y(XYArgs { lam_r: 0.0, lam_i2: 0.0, k2: xi }).unwrap();
        assert!((fp.re - expect).abs() < 1e-12 * expect.abs());
        assert!(fp.re < 0.0);
        // tracked real root crosses k2 = xi with positive slope
        let dk = 1e-5 * xi;
        let seed = Complex64::new(0.0, 0.0);
        let lam_p = s.complex_slep_root(seed, None, k1, xi + dk).unwrap();
        let lam_m = s.complex_slep_root(seed, None, k1, xi - dk).unwrap();
        assert!(lam_p.re > 0.0 && lam_m.re < 0.0);
        assert!((lam_p.re - lam_m.re) / (2.0 * dk) > 0.0);
        // Hopf point annihilates G*
        let k1h = 0.58 * rho;
        let k2h = 1.5 * s.k2hat_star(k1h).unwrap();
        let h = s.find_hopf(k1h, k2h).unwrap();
        let g = s
            .g_star(Complex64::new(0.0, h.lam_ih), h.alpha_h, k1h, k2h)
            .unwrap();
        assert!(g.norm() < 1e-10, "|G*| = {} at the Hopf point", g.norm());
        let gp = s
            .g_star_prime(Complex64::new(0.0, h.lam_ih), h.alpha_h, k2h, k1h)
            .unwrap();
        assert!(gp.im < 0.0);
    }

    #[test]
    fn slep1_no_crossing_holds_and_is_grid_stable() {
        let s = slep();
        let alphas: Vec<f64> = (1..=24).map(|i| 0.002 * i as f64).collect();
        let lambdas: Vec<f64> = (1..=32).map(|i| 0.05 * i as f64 * i as f64).collect();
        let rep = s.slep1_no_crossing_check(0.3, &alphas, &lambdas).unwrap();
        assert!(rep.x_hat_00 > rep.rho0_star);
        assert!(rep.min_margin > 0.0 && rep.min_margin_tau_star > 0.0);
        // verdict stable under doubled sampling density
        let alphas2: Vec<f64> = (1..=48).map(|i| 0.001 * i as f64).collect();
        let lambdas2: Vec<f64> = (1..=64).map(|i| 0.025 * i as f64 * i as f64).collect();
        let rep2 = s.slep1_no_crossing_check(0.3, &alphas2, &lambdas2).unwrap();
        assert!(rep2.min_margin > 0.0);
    }

    #[test]
    fn hopf_requires_bifurcation_region() {
        let s = slep();
        let rho = s.c.rho0_star;
        // Gamma3-2 point: no Hopf scan possible
        assert!(matches!(
            s.find_hopf(1.5 * rho, 5.0),
            Err(Error::Regime(_))
        ));
        // tau <= tau* rejected
        let bad = Slep::new(s.c, 0.5 * s.c.tau_star).unwrap();
        assert!(matches!(
            bad.find_hopf(0.58 * rho, 50.0),
            Err(Error::Regime(_))
        ));
    }
}
