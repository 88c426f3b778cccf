//! Nullcline geometry of the activator equation: the sigmoidal curve
//! `f(u,v) = 0`, its fold points, the three branch evaluators, and the
//! Maxwell-type root `v_hat` of `M(v) = \int_{h_-}^{h_+} f(s,v) ds`.

use crate::real::Real;
use crate::roots;
use crate::{Error, Result};
use serde::Serialize;

/// Which branch of `f(u,v)=0` ( `u = h_-(v)`, `h_0(v)`, `h_+(v)` ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Minus,
    Zero,
    Plus,
}

/// Fold coordinates of the sigmoidal nullcline and branch evaluators.
///
/// Domains: `h_-` on `[v_lo, inf)`, `h_0` on `[v_lo, v_hi]`, `h_+` on
/// `(0, v_hi]`; the outer branches touch the middle one at the folds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NullclineBranches<R> {
    pub a: R,
    pub u_lo: R,
    pub u_hi: R,
    pub v_lo: R,
    pub v_hi: R,
}

/// Real roots of the monic cubic `x^3 + b x^2 + c x + d`, ascending.
///
/// Trigonometric form when three real roots exist, Cardano otherwise, with a
/// Newton polish on every root.
pub fn cubic_roots<R: Real>(b: R, c: R, d: R) -> Vec<R> {
    let third = R::one() / R::of(3.0);
    let p = c - b * b * third;
    let q = R::of(2.0 / 27.0) * b * b * b - b * c * third + d;
    let shift = -b * third;
    let mut roots = Vec::with_capacity(3);
    let disc = -(R::of(4.0) * p * p * p + R::of(27.0) * q * q);
    if disc > R::zero() {
        // three distinct real roots
        let m = R::of(2.0) * (-p * third).sqrt();
        let arg = (R::of(3.0) * q / (p * m)).max(-R::one()).min(R::one());
        let phi = arg.acos() * third;
        let two_pi_3 = R::of(2.0 * std::f64::consts::PI / 3.0);
        for k in 0..3 {
            let t = m * (phi - two_pi_3 * R::of(k as f64)).cos();
            roots.push(t + shift);
        }
    } else {
        // one real root, or a tangency (double root) at disc ~ 0
        let half_q = q * R::of(0.5);
        let r = (half_q * half_q + p * p * p / R::of(27.0)).max(R::zero()).sqrt();
        let s1 = cbrt(-half_q + r);
        let s2 = cbrt(-half_q - r);
        roots.push(s1 + s2 + shift);
        let disc_scale =
            R::of(4.0) * p.abs().powi(3) + R::of(27.0) * q * q + R::one();
        if disc.abs() <= R::of(1e-10) * disc_scale {
            // near the tangency: the double root is (to leading order) the
            // critical point of the cubic with the smaller residual
            let disc_crit = b * b - R::of(3.0) * c;
            if disc_crit > R::zero() {
                let s = disc_crit.sqrt();
                let cands = [(-b + s) / R::of(3.0), (-b - s) / R::of(3.0)];
                let resid = |t: R| (((t + b) * t + c) * t + d).abs();
                let best = if resid(cands[0]) <= resid(cands[1]) {
                    cands[0]
                } else {
                    cands[1]
                };
                roots.push(best);
                roots.push(best);
            }
        }
    }
    for x in roots.iter_mut() {
        *x = roots::newton_polish(
            |t| {
                (
                    ((t + b) * t + c) * t + d,
                    (R::of(3.0) * t + R::of(2.0) * b) * t + c,
                )
            },
            *x,
            *x - R::one(),
            *x + R::one(),
            3,
        );
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

fn cbrt<R: Real>(x: R) -> R {
    if x < R::zero() {
        -(-x).powf(R::one() / R::of(3.0))
    } else {
        x.powf(R::one() / R::of(3.0))
    }
}

/// `v(u) = (a-u)(1+u^2)/(4u)`: the nullcline solved for `v`.
pub fn v_on_nullcline<R: Real>(u: R, a: R) -> R {
    (a - u) * (R::one() + u * u) / (R::of(4.0) * u)
}

/// The value of `a` where the two folds merge: double root of the
/// stationarity cubic, `a = 3*sqrt(3)`.
pub fn fold_merge_threshold<R: Real>() -> R {
    R::of(3.0) * R::of(3.0).sqrt()
}

/// Fold points of the nullcline for `a` above the fold-merge value `3*sqrt(3)`.
///
/// The folds are the stationary points of `v(u)`, i.e. the two positive roots
/// of `2u^3 - a u^2 + a = 0` (validated against a finite-difference extremum
/// search in the tests; the underlying text only asserts sigmoidality). Note
/// the activator-inhibitor assumption `a > (5/3)sqrt(15)` used by the system
/// solvers is stricter than sigmoidality; it is enforced by
/// [`ModelParams::validate`](crate::kinetics::ModelParams::validate).
pub fn fold_points<R: Real>(a: R) -> Result<NullclineBranches<R>> {
    if !(a > fold_merge_threshold()) {
        return Err(Error::Regime(format!(
            "non-sigmoidal regime: fold points coincide or are missing for a = {a} <= {}",
            fold_merge_threshold::<R>()
        )));
    }
    // 2u^3 - a u^2 + a = 0, monic: u^3 - (a/2) u^2 + a/2 = 0
    let half_a = a * R::of(0.5);
    let rts = cubic_roots(-half_a, R::zero(), half_a);
    let pos: Vec<R> = rts.into_iter().filter(|r| *r > R::zero()).collect();
    if pos.len() < 2 {
        return Err(Error::Regime(format!(
            "non-sigmoidal regime: expected two positive stationary points, found {}",
            pos.len()
        )));
    }
    let (u_lo, u_hi) = (pos[pos.len() - 2], pos[pos.len() - 1]);
    let b = NullclineBranches {
        a,
        u_lo,
        u_hi,
        v_lo: v_on_nullcline(u_lo, a),
        v_hi: v_on_nullcline(u_hi, a),
    };
    Ok(b)
}

impl<R: Real> NullclineBranches<R> {
    /// Evaluate branch `br` at `v`: the root of `(a-u)(1+u^2) = 4uv` on the
    /// matching interval, with a Newton polish to residual level.
    pub fn eval(&self, v: R, br: Branch) -> Result<R> {
        let a = self.a;
        if !(v > R::zero()) {
            return Err(Error::Domain(format!("branches defined for v > 0, got {v}")));
        }
        let tol = R::epsilon() * R::of(64.0) * (R::one() + v.abs());
        match br {
            Branch::Minus if v < self.v_lo - tol => {
                return Err(Error::Domain(format!(
                    "h_minus is defined on [{}, inf), got v = {v}",
                    self.v_lo
                )))
            }
            Branch::Zero if v < self.v_lo - tol || v > self.v_hi + tol => {
                return Err(Error::Domain(format!(
                    "h_zero is defined on [{}, {}], got v = {v}",
                    self.v_lo, self.v_hi
                )))
            }
            Branch::Plus if v > self.v_hi + tol => {
                return Err(Error::Domain(format!(
                    "h_plus is defined on (0, {}], got v = {v}",
                    self.v_hi
                )))
            }
            _ => {}
        }
        // u^3 - a u^2 + (1+4v) u - a = 0
        let c1 = R::one() + R::of(4.0) * v;
        let mut rts: Vec<R> = cubic_roots(-a, c1, -a)
            .into_iter()
            .filter(|r| *r > R::zero())
            .collect();
        // keep roots inside the physical interval (0, a)
        rts.retain(|r| *r < a);
        let u0 = match (br, rts.len()) {
            (_, 0) => {
                return Err(Error::Convergence(format!(
                    "no positive nullcline root at v = {v}"
                )))
            }
            (Branch::Minus, n) => rts[if n >= 3 { 0 } else { 0 }],
            (Branch::Zero, n) => {
                if n >= 2 {
                    rts[1.min(n - 1)]
                } else {
                    rts[0]
                }
            }
            (Branch::Plus, n) => rts[n - 1],
        };
        // polish on r(u) = (a-u)(1+u^2) - 4uv
        let u = roots::newton_polish(
            |t| {
                let w = R::one() + t * t;
                (
                    (a - t) * w - R::of(4.0) * t * v,
                    -w + (a - t) * R::of(2.0) * t - R::of(4.0) * v,
                )
            },
            u0,
            R::zero(),
            a,
            2,
        );
        Ok(u)
    }

    pub fn h_minus(&self, v: R) -> Result<R> {
        self.eval(v, Branch::Minus)
    }
    pub fn h_zero(&self, v: R) -> Result<R> {
        self.eval(v, Branch::Zero)
    }
    pub fn h_plus(&self, v: R) -> Result<R> {
        self.eval(v, Branch::Plus)
    }

    /// `M(v) = \int_{h_-(v)}^{h_+(v)} f(s,v) ds` from the closed
    /// antiderivative `(1/sigma)[a s - s^2/2 - 2 v ln(1+s^2)]`.
    pub fn m_of_v(&self, v: R, sigma: R) -> Result<R> {
        let hm = self.h_minus(v)?;
        let hp = self.h_plus(v)?;
        let anti = |s: R| self.a * s - s * s * R::of(0.5) - R::of(2.0) * v * (R::one() + s * s).ln();
        Ok((anti(hp) - anti(hm)) / sigma)
    }

    /// `M'(v) = -(2/sigma) [ln(1+h_+^2) - ln(1+h_-^2)]`.
    pub fn m_prime(&self, v: R, sigma: R) -> Result<R> {
        let hm = self.h_minus(v)?;
        let hp = self.h_plus(v)?;
        Ok(-(R::of(2.0) / sigma)
            * ((R::one() + hp * hp).ln() - (R::one() + hm * hm).ln()))
    }

    /// The unique root `v_hat` of `M` in `(v_lo, v_hi)`; `M` decreases through
    /// it since `M' < 0`.
    pub fn find_vhat(&self, sigma: R) -> Result<R> {
        let delta = (self.v_hi - self.v_lo) * R::of(1e-9);
        let (lo, hi) = (self.v_lo + delta, self.v_hi - delta);
        let m_lo = self.m_of_v(lo, sigma)?;
        let m_hi = self.m_of_v(hi, sigma)?;
        if !(m_lo > R::zero() && m_hi < R::zero()) {
            return Err(Error::Bracket(format!(
                "M does not bracket a root: M({lo}) = {m_lo}, M({hi}) = {m_hi}"
            )));
        }
        let v0 = roots::bisect(|v| self.m_of_v(v, sigma).unwrap(), lo, hi, R::of(1e-12))?;
        Ok(roots::newton_polish(
            |v| {
                (
                    self.m_of_v(v, sigma).unwrap(),
                    self.m_prime(v, sigma).unwrap(),
                )
            },
            v0,
            lo,
            hi,
            3,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{constant_steady_state, kinetics};
    use approx::assert_relative_eq;

    // Independent oracle values (bisection on 2u^3-10u^2+10=0 and direct
    // substitution, computed at 30-digit precision before the build).
    const U_LO_A10: f64 = 1.1378052016139043;
    const U_HI_A10: f64 = 4.781283795978356;
    const V_LO_A10: f64 = 4.4680755004547785;
    const V_HI_A10: f64 = 6.510912926627882;
    const VHAT_A10_S8: f64 = 5.504233915391049;
    const MPRIME_A10_S8: f64 = -0.8983837367950709;

    fn branches10() -> NullclineBranches<f64> {
        fold_points(10.0).unwrap()
    }

    #[test]
    fn fold_points_match_bisection_oracle() {
        let b = branches10();
        assert_relative_eq!(b.u_lo, U_LO_A10, epsilon = 1e-10);
        assert_relative_eq!(b.u_hi, U_HI_A10, epsilon = 1e-10);
        assert_relative_eq!(b.v_lo, V_LO_A10, epsilon = 1e-10);
        assert_relative_eq!(b.v_hi, V_HI_A10, epsilon = 1e-10);
    }

    #[test]
    fn fold_points_satisfy_stated_bounds() {
        let b = branches10();
        let a = 10.0_f64;
        assert!(1.0_f64.max(8.0 / a) < b.u_lo && b.u_lo < a / 5.0);
        assert!(2.0 * a / 5.0 < b.u_hi && b.u_hi < a / 2.0);
        assert!(2.0_f64.max(1.0 + 64.0 / (a * a)) < b.v_lo);
        assert!(b.v_lo < 1.0 + a * a / 25.0 && 1.0 + a * a / 25.0 < b.v_hi);
        assert!(b.v_hi < a * a / 12.0 - 0.25);
    }

    #[test]
    fn fold_cubic_agrees_with_extremum_search() {
        // the stationarity cubic is derived, not quoted: check against a
        // finite-difference extremum of v(u)
        let b = branches10();
        let h = 1e-6;
        for u in [b.u_lo, b.u_hi] {
            let dv = (v_on_nullcline(u + h, 10.0) - v_on_nullcline(u - h, 10.0)) / (2.0 * h);
            assert!(dv.abs() < 1e-8, "dv/du = {dv} at u = {u}");
        }
    }

    #[test]
    fn near_threshold_roots_nearly_coincide() {
        // the folds merge at a = 3 sqrt(3) (the true degeneracy; the stated
        // activator-inhibitor threshold (5/3)sqrt(15) is strictly above it)
        let a = fold_merge_threshold::<f64>() + 1e-6;
        let b = fold_points(a).unwrap();
        assert!((b.u_hi - b.u_lo).abs() < 1e-2, "gap {}", b.u_hi - b.u_lo);
        assert!(fold_points(fold_merge_threshold::<f64>()).is_err());
        assert!(fold_points(5.0_f64).is_err());
        assert!(fold_merge_threshold::<f64>() < crate::kinetics::sigmoidal_threshold::<f64>());
    }

    #[test]
    fn constant_state_lies_on_middle_branch() {
        let b = branches10();
        let (us, vs) = constant_steady_state(10.0);
        let u = b.h_zero(vs).unwrap();
        assert_relative_eq!(u, us, epsilon = 1e-12);
    }

    #[test]
    fn branch_tangency_at_folds() {
        let b = branches10();
        assert_relative_eq!(b.h_plus(b.v_hi).unwrap(), b.u_hi, epsilon = 1e-6);
        assert_relative_eq!(b.h_minus(b.v_lo).unwrap(), b.u_lo, epsilon = 1e-6);
    }

    #[test]
    fn branch_residuals_below_1e12() {
        let b = branches10();
        for i in 0..50 {
            let v = b.v_lo + (b.v_hi - b.v_lo) * (i as f64 + 0.5) / 50.0;
            for br in [Branch::Minus, Branch::Zero, Branch::Plus] {
                let u = b.eval(v, br).unwrap();
                let res = (10.0 - u) * (1.0 + u * u) - 4.0 * u * v;
                assert!(res.abs() < 1e-12, "residual {res} on {br:?} at v={v}");
            }
            let (hm, h0, hp) = (
                b.h_minus(v).unwrap(),
                b.h_zero(v).unwrap(),
                b.h_plus(v).unwrap(),
            );
            assert!(hm < h0 && h0 < hp, "ordering violated at v={v}");
        }
    }

    #[test]
    fn branch_domain_errors_name_interval() {
        let b = branches10();
        let err = b.h_minus(2.0).unwrap_err();
        assert!(format!("{err}").contains("h_minus"));
        assert!(b.h_zero(8.0).is_err());
        assert!(b.h_plus(7.0).is_err());
    }

    #[test]
    fn m_signs_and_vhat() {
        let b = branches10();
        let sigma = 8.0;
        let delta = 1e-4;
        assert!(b.m_of_v(b.v_lo + delta, sigma).unwrap() > 0.0);
        assert!(b.m_of_v(b.v_hi - delta, sigma).unwrap() < 0.0);
        let vhat = b.find_vhat(sigma).unwrap();
        assert_relative_eq!(vhat, VHAT_A10_S8, epsilon = 1e-9);
        assert!(vhat > b.v_lo && vhat < b.v_hi);
        assert!(b.m_of_v(vhat, sigma).unwrap().abs() < 1e-12);
        let mp = b.m_prime(vhat, sigma).unwrap();
        assert!(mp < 0.0);
        assert_relative_eq!(mp, MPRIME_A10_S8, epsilon = 1e-9);
    }

    #[test]
    fn m_closed_form_matches_quadrature() {
        let b = branches10();
        let sigma = 8.0;
        for t in [0.2, 0.5, 0.8] {
            let v = b.v_lo + (b.v_hi - b.v_lo) * t;
            let hm = b.h_minus(v).unwrap();
            let hp = b.h_plus(v).unwrap();
            let quad = crate::quad::adaptive_simpson(
                &|s: f64| kinetics(s, v, 10.0, sigma).unwrap().f,
                hm,
                hp,
                1e-13,
            );
            let closed = b.m_of_v(v, sigma).unwrap();
            assert!(
                (closed - quad).abs() < 1e-10,
                "closed {closed} vs quadrature {quad} at v={v}"
            );
        }
    }

    #[test]
    fn m_prime_matches_quadrature_of_fv_integral() {
        // M'(v) = -(4/sigma) \int s/(1+s^2) ds between the branch points
        let b = branches10();
        let sigma = 8.0;
        let v = 5.2;
        let hm = b.h_minus(v).unwrap();
        let hp = b.h_plus(v).unwrap();
        let quad = crate::quad::adaptive_simpson(
            &|s: f64| -4.0 / sigma * s / (1.0 + s * s),
            hm,
            hp,
            1e-13,
        );
        assert_relative_eq!(b.m_prime(v, sigma).unwrap(), quad, epsilon = 1e-11);
    }

    #[test]
    fn outer_branch_sign_facts() {
        // f_u < 0 on the outer branches; g < 0 on R_-, g > 0 on R_+;
        // det matches 5u/(sigma(1+u^2)) there too.
        let b = branches10();
        let sigma = 8.0;
        let vhat = b.find_vhat(sigma).unwrap();
        for i in 0..20 {
            let vm = b.v_lo + (vhat - b.v_lo) * (i as f64 + 0.5) / 20.0;
            let um = b.h_minus(vm).unwrap();
            let km = kinetics(um, vm, 10.0, sigma).unwrap();
            assert!(km.f_u < 0.0);
            assert!(km.g < 0.0, "g = {} on R- at v = {vm}", km.g);
            assert_relative_eq!(
                km.det(),
                5.0 * um / (sigma * (1.0 + um * um)),
                max_relative = 1e-12
            );

            let vp = vhat + (b.v_hi - vhat) * (i as f64 + 0.5) / 20.0;
            let up = b.h_plus(vp).unwrap();
            let kp = kinetics(up, vp, 10.0, sigma).unwrap();
            assert!(kp.f_u < 0.0);
            assert!(kp.g > 0.0, "g = {} on R+ at v = {vp}", kp.g);
        }
    }

    #[test]
    fn branches_continuous_in_v() {
        let b = branches10();
        let mut prev = b.h_minus(b.v_lo + 0.01).unwrap();
        for i in 1..200 {
            let v = b.v_lo + 0.01 + 1.5 * i as f64 / 200.0;
            let u = b.h_minus(v).unwrap();
            assert!((u - prev).abs() < 0.05, "jump at v={v}");
            prev = u;
        }
    }

    #[test]
    fn fold_points_generic_at_f32() {
        let b = fold_points(10.0f32).unwrap();
        assert!((b.u_lo - U_LO_A10 as f32).abs() < 1e-3);
        assert!((b.u_hi - U_HI_A10 as f32).abs() < 1e-3);
    }
}
