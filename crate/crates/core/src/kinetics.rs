//! Lengyel-Epstein kinetics: reaction terms, partial derivatives, parameter
//! reduction, and the constant steady state.
//!
//! Reaction terms in reduced variables:
//! `f(u,v) = (a - u - 4uv/(1+u^2))/sigma`, `g(u,v) = u - uv/(1+u^2)`.

use crate::real::Real;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Activator-inhibitor threshold `(5/3)*sqrt(15)` on the kinetic constant `a`.
pub fn sigmoidal_threshold<R: Real>() -> R {
    R::of(5.0 / 3.0) * R::of(15.0).sqrt()
}

/// Parameters of the unreduced two-reactor system.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OriginalParams<R> {
    /// Intra-reactor diffusion rate of the activator (length^2/time).
    pub d1: R,
    /// Intra-reactor diffusion rate of the inhibitor (length^2/time).
    pub d2: R,
    pub a: R,
    pub b: R,
    /// Complexing factor, dimensionless, `> 1`.
    pub sigma: R,
    /// Inter-reactor exchange rate of the activator (1/time).
    pub k1_orig: R,
    /// Inter-reactor exchange rate of the inhibitor (1/time).
    pub k2: R,
}

impl<R: Real> OriginalParams<R> {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("a", self.a),
            ("b", self.b),
            ("sigma", self.sigma),
        ];
        for (name, v) in pos {
            if !(v > R::zero()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma > R::one()) {
            return Err(Error::Domain(format!("sigma must exceed 1, got {}", self.sigma)));
        }
        if self.k1_orig < R::zero() || self.k2 < R::zero() {
            return Err(Error::Domain("exchange rates must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Inverse mean delay of the exponential coupling kernel; `Infinite` is the
/// non-delayed limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha<R> {
    Finite(R),
    Infinite,
}

impl<R: Real> Alpha<R> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Alpha::Finite(_))
    }

    /// The finite value, or a domain error naming `ctx`.
    pub fn finite(&self, ctx: &str) -> Result<R> {
        match self {
            Alpha::Finite(a) => Ok(*a),
            Alpha::Infinite => Err(Error::Domain(format!("{ctx} requires finite alpha"))),
        }
    }
}

/// Reduced system parameters (the working set of every solver).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams<R> {
    pub a: R,
    pub sigma: R,
    pub eps: R,
    pub tau: R,
    pub d: R,
    pub k1: R,
    pub k2: R,
    pub ell: R,
    pub alpha: Alpha<R>,
}

impl<R: Real> ModelParams<R> {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > sigmoidal_threshold()) {
            return Err(Error::Regime(format!(
                "activator-inhibitor regime requires a > (5/3)sqrt(15) ~= {:.6}, got a = {}",
                sigmoidal_threshold::<R>(),
                self.a
            )));
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("eps", self.eps),
            ("tau", self.tau),
            ("d", self.d),
            ("ell", self.ell),
        ] {
            if !(v > R::zero()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k1 < R::zero() || self.k2 < R::zero() {
            return Err(Error::Domain("k1, k2 must be nonnegative".into()));
        }
        if let Alpha::Finite(al) = self.alpha {
            if !(al > R::zero()) {
                return Err(Error::Domain(format!("alpha must be positive, got {al}")));
            }
        }
        Ok(())
    }
}

/// Reduction of the original parameters, with the time rescale factor kept so
/// simulated times can be mapped back to the original clock.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReducedParams<R> {
    pub params: ModelParams<R>,
    /// `t_original = t_reduced / time_scale` with `time_scale = b`.
    pub time_scale: R,
}

/// Change of variables `eps = sqrt(d1/sigma)`, `tau = b*sqrt(sigma/d1)`,
/// `d = d2/b`, `k1 = k1_orig*sqrt(sigma/d1)`, `k2 = k2_orig/b`, time `t -> b t`.
///
/// `ell` and `alpha` describe the domain and coupling kernel in reduced
/// variables and are passed through (the delay rate rescales as `alpha/b`
/// if given on the original clock; here it is taken already reduced).
pub fn reduce_parameters<R: Real>(
    p: &OriginalParams<R>,
    ell: R,
    alpha: Alpha<R>,
) -> Result<ReducedParams<R>> {
    p.validate()?;
    let eps = (p.d1 / p.sigma).sqrt();
    let tau = p.b * (p.sigma / p.d1).sqrt();
    let d = p.d2 / p.b;
    let k1 = p.k1_orig * (p.sigma / p.d1).sqrt();
    let k2 = p.k2 / p.b;
    let params = ModelParams {
        a: p.a,
        sigma: p.sigma,
        eps,
        tau,
        d,
        k1,
        k2,
        ell,
        alpha,
    };
    Ok(ReducedParams {
        params,
        time_scale: p.b,
    })
}

/// Constant steady state `(a/5, 1 + a^2/25)`.
pub fn constant_steady_state<R: Real>(a: R) -> (R, R) {
    let u = a / R::of(5.0);
    (u, R::one() + u * u)
}

/// Reaction values and all four partial derivatives at a point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KineticsEval<R> {
    pub f: R,
    pub g: R,
    pub f_u: R,
    pub f_v: R,
    pub g_u: R,
    pub g_v: R,
}

impl<R: Real> KineticsEval<R> {
    /// Jacobian determinant `f_u g_v - f_v g_u`. The cross terms in `v`
    /// cancel identically, leaving `5u/(sigma (1+u^2))` at every point.
    pub fn det(&self) -> R {
        self.f_u * self.g_v - self.f_v * self.g_u
    }
}

/// Evaluate `f`, `g` and their partials at `(u, v)`. Rejects `u <= 0`.
pub fn kinetics<R: Real>(u: R, v: R, a: R, sigma: R) -> Result<KineticsEval<R>> {
    if !(u > R::zero()) {
        return Err(Error::Domain(format!(
            "kinetics require u > 0 (division structure of g), got u = {u}"
        )));
    }
    let one = R::one();
    let w = one + u * u;
    let f = (a - u - R::of(4.0) * u * v / w) / sigma;
    let g = u - u * v / w;
    let f_u = -(one + R::of(4.0) * (one - u * u) * v / (w * w)) / sigma;
    let f_v = -R::of(4.0) * u / (sigma * w);
    let g_u = one - (one - u * u) * v / (w * w);
    let g_v = -u / w;
    Ok(KineticsEval {
        f,
        g,
        f_u,
        f_v,
        g_u,
        g_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn threshold_value() {
        let t: f64 = sigmoidal_threshold();
        assert_relative_eq!(t, 6.454972243679028, max_relative = 1e-15);
    }

    #[test]
    fn reduction_identity_when_d1_equals_sigma() {
        // eps = sqrt(d1/sigma) = 1 regardless of the other fields
        let p = OriginalParams {
            d1: 4.0,
            d2: 7.0,
            a: 10.0,
            b: 3.0,
            sigma: 4.0,
            k1_orig: 0.2,
            k2: 0.1,
        };
        let r = reduce_parameters(&p, 1.0, Alpha::<f64>::Infinite).unwrap();
        assert_relative_eq!(r.params.eps, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn reduction_hand_computed_example() {
        // d1=0.01, sigma=4, b=2, d2=3 -> eps=0.05, tau=2*sqrt(4/0.01)=40, d=1.5
        let p = OriginalParams {
            d1: 0.01,
            d2: 3.0,
            a: 10.0,
            b: 2.0,
            sigma: 4.0,
            k1_orig: 0.0,
            k2: 0.0,
        };
        let r = reduce_parameters(&p, 1.0, Alpha::<f64>::Infinite).unwrap();
        assert_relative_eq!(r.params.eps, 0.05, max_relative = 1e-14);
        assert_relative_eq!(r.params.tau, 40.0, max_relative = 1e-14);
        assert_relative_eq!(r.params.d, 1.5, max_relative = 1e-14);
        assert_relative_eq!(r.time_scale, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn reduction_zero_k1_maps_to_zero() {
        let p = OriginalParams {
            d1: 0.02,
            d2: 1.0,
            a: 8.0,
            b: 1.0,
            sigma: 9.0,
            k1_orig: 0.0,
            k2: 0.3,
        };
        let r = reduce_parameters(&p, 2.0, Alpha::Finite(0.5)).unwrap();
        assert_eq!(r.params.k1, 0.0);
    }

    #[test]
    fn constant_state_zeroes_kinetics() {
        for a in [10.0_f64, 5.0, 7.3] {
            let (us, vs) = constant_steady_state(a);
            let k = kinetics(us, vs, a, 8.0).unwrap();
            assert!(k.f.abs() < 1e-14, "f = {} at a = {a}", k.f);
            assert!(k.g.abs() < 1e-14, "g = {} at a = {a}", k.g);
        }
        // the paper's closed forms at a=10 and a=5
        assert_eq!(constant_steady_state(10.0f64), (2.0, 5.0));
        assert_eq!(constant_steady_state(5.0f64), (1.0, 2.0));
    }

    #[test]
    fn partials_match_central_differences() {
        let (a, sigma) = (10.0_f64, 8.0);
        for &(u, v) in &[(0.5, 4.0), (2.0, 5.0), (6.8, 5.5), (1.1, 4.5)] {
            let k = kinetics(u, v, a, sigma).unwrap();
            let h = 1e-6 * u.max(v);
            let fu =
                (kinetics(u + h, v, a, sigma).unwrap().f - kinetics(u - h, v, a, sigma).unwrap().f)
                    / (2.0 * h);
            let fv =
                (kinetics(u, v + h, a, sigma).unwrap().f - kinetics(u, v - h, a, sigma).unwrap().f)
                    / (2.0 * h);
            let gu =
                (kinetics(u + h, v, a, sigma).unwrap().g - kinetics(u - h, v, a, sigma).unwrap().g)
                    / (2.0 * h);
            let gv =
                (kinetics(u, v + h, a, sigma).unwrap().g - kinetics(u, v - h, a, sigma).unwrap().g)
                    / (2.0 * h);
            assert_relative_eq!(k.f_u, fu, max_relative = 1e-6);
            assert_relative_eq!(k.f_v, fv, max_relative = 1e-6);
            assert_relative_eq!(k.g_u, gu, max_relative = 1e-6);
            assert_relative_eq!(k.g_v, gv, max_relative = 1e-6);
        }
    }

    #[test]
    fn fv_and_gv_negative_everywhere() {
        let (a, sigma) = (10.0_f64, 8.0);
        for i in 1..40 {
            for j in 1..40 {
                let (u, v) = (0.25 * i as f64, 0.25 * j as f64);
                let k = kinetics(u, v, a, sigma).unwrap();
                assert!(k.f_v < 0.0);
                assert!(k.g_v < 0.0);
            }
        }
    }

    #[test]
    fn determinant_identity_everywhere() {
        // f_u g_v - f_v g_u = 5u/(sigma (1+u^2)); the v-dependence cancels.
        let (a, sigma) = (10.0_f64, 8.0);
        for &(u, v) in &[(0.6, 5.0), (2.0, 5.0), (4.8, 6.5), (6.86, 5.504)] {
            let k = kinetics(u, v, a, sigma).unwrap();
            let expected = 5.0 * u / (sigma * (1.0 + u * u));
            assert_relative_eq!(k.det(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_u() {
        assert!(kinetics(0.0_f64, 1.0, 10.0, 8.0).is_err());
        assert!(kinetics(-1.0_f64, 1.0, 10.0, 8.0).is_err());
    }

    #[test]
    fn regime_guard_on_model_params() {
        let mut p = ModelParams {
            a: 10.0_f64,
            sigma: 8.0,
            eps: 0.05,
            tau: 14.0,
            d: 1.0,
            k1: 0.1,
            k2: 1.0,
            ell: 1.0,
            alpha: Alpha::Infinite,
        };
        assert!(p.validate().is_ok());
        p.a = 6.0; // below (5/3)sqrt(15)
        assert!(matches!(p.validate(), Err(Error::Regime(_))));
    }

    #[test]
    fn kinetics_generic_at_f32() {
        let (us, vs) = constant_steady_state(10.0f32);
        let k = kinetics(us, vs, 10.0f32, 8.0f32).unwrap();
        assert!(k.f.abs() < 1e-6);
        assert!(k.g.abs() < 1e-6);
    }
}
