//! The radial eigenfunction family.
//!
//! For `d >= 1` and `delta = 2 - d/2`,
//!
//! ```text
//! f_d(r)     = r^{2-d} e^{-r^2}   Ei^(delta)(r^2)
//! phi_d(r)   = r^{2-d} e^{-r^2/2} Ei^(delta)(r^2/2) = sqrt(2)^{2-d} f_d(r / sqrt 2)
//! f_d^a(r)   = f_d(r) e^{-a r^2}
//! ```
//!
//! All three are evaluated through the scaled integral `e^{-x} Ei^(delta)(x)`,
//! so large radii never form `e^{r^2}`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::expint::{DeltaExpEvaluator, DeltaParam, EvalOptions};
use crate::quad::Quadrature;
use crate::special::unit_sphere_area;

/// `f_d` and `phi_d` for a fixed dimension.
#[derive(Debug, Clone)]
pub struct RadialEigenfunction {
    d: u32,
    eval: DeltaExpEvaluator,
}

impl RadialEigenfunction {
    pub fn new(d: u32) -> Result<Self> {
        Self::with_options(d, EvalOptions::default())
    }

    pub fn with_options(d: u32, opts: EvalOptions) -> Result<Self> {
        if d == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        let delta = DeltaParam::new(delta_for(d))?;
        Ok(RadialEigenfunction {
            d,
            eval: DeltaExpEvaluator::with_options(delta, opts)?,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.eval.delta()
    }

    pub fn evaluator(&self) -> &DeltaExpEvaluator {
        &self.eval
    }

    /// `r^{2-d} e^{-x} Ei^(delta)(x)` with `x = r^2 / scale`.
    fn profile(&self, r: f64, scale: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(domain(format!("radius must be positive and finite, got {r}")));
        }
        let x = r * r / scale;
        Ok(r.powi(2 - self.d as i32) * self.eval.ei_scaled(x)?)
    }

    /// The eigenfunction `phi_d(r)`.
    pub fn phi(&self, r: f64) -> Result<f64> {
        self.profile(r, 2.0)
    }

    /// The working function `f_d(r)`.
    pub fn f(&self, r: f64) -> Result<f64> {
        self.profile(r, 1.0)
    }

    /// `|phi_d(r) - sqrt(2)^{2-d} f_d(r / sqrt 2)|`.
    ///
    /// The power of `sqrt 2` is fixed by the two definitions: `f_d(r / sqrt 2)`
    /// carries `(r / sqrt 2)^{2-d}` where `phi_d` has `r^{2-d}`.
    pub fn phi_from_f_residual(&self, r: f64) -> Result<f64> {
        let lhs = self.phi(r)?;
        let rhs = std::f64::consts::SQRT_2.powi(2 - self.d as i32) * self.f(r / std::f64::consts::SQRT_2)?;
        Ok((lhs - rhs).abs())
    }

    /// `C_d = int_{R^d} |f_d(x)| / (1 + |x|^{2d}) dx`.
    pub fn tempered_constant(&self) -> Result<f64> {
        self.weighted_abs_integral(|_| 1.0)
    }

    /// `C_d^a = int_{R^d} |f_d(x)| (1 - e^{-a r^2}) / (1 + |x|^{2d}) dx`.
    pub fn tempered_constant_alpha(&self, alpha: f64) -> Result<f64> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(domain(format!("alpha must be non-negative, got {alpha}")));
        }
        if alpha == 0.0 {
            return Ok(0.0);
        }
        self.weighted_abs_integral(|r| -(-alpha * r * r).exp_m1())
    }

    fn weighted_abs_integral(&self, weight: impl Fn(f64) -> f64) -> Result<f64> {
        let d = self.d as i32;
        let q = Quadrature::with_tolerance(1e-10);
        let integrand = |r: f64| {
            if r <= 0.0 {
                return 0.0;
            }
            let f = self.f(r).unwrap_or(f64::NAN);
            let w = weight(r);
            if w == 0.0 {
                return 0.0;
            }
            f.abs() * w * r.powi(d - 1) / (1.0 + r.powi(2 * d))
        };
        let inner = q.integrate_graded(integrand, 0.0, 1.0)?;
        let outer = q.integrate_to_infinity(integrand, 1.0)?;
        Ok(unit_sphere_area(self.d) * (inner.value + outer.value))
    }
}

/// `delta = 2 - d/2`.
pub fn delta_for(d: u32) -> f64 {
    2.0 - 0.5 * d as f64
}

/// `f_d` damped by `e^{-alpha r^2}`.
#[derive(Debug, Clone)]
pub struct RegularizedFunction {
    base: RadialEigenfunction,
    alpha: f64,
}

impl RegularizedFunction {
    pub fn new(base: RadialEigenfunction, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(RegularizedFunction { base, alpha })
    }

    pub fn base(&self) -> &RadialEigenfunction {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        Ok(self.base.f(r)? * (-self.alpha * r * r).exp())
    }
}

pub fn phi_d(f: &RadialEigenfunction, r: f64) -> Result<f64> {
    f.phi(r)
}

pub fn f_d(f: &RadialEigenfunction, r: f64) -> Result<f64> {
    f.f(r)
}

pub fn f_d_alpha(rf: &RegularizedFunction, r: f64) -> Result<f64> {
    rf.value(r)
}

pub fn phi_from_f_consistency(f: &RadialEigenfunction, r: f64) -> Result<f64> {
    f.phi_from_f_residual(r)
}

pub fn tempered_constant(f: &RadialEigenfunction) -> Result<f64> {
    f.tempered_constant()
}

/// Why `f_d` is or is not in `L^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpReason {
    OriginDivergence,
    InfinityDivergence,
    Both,
    Member,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LpVerdict {
    pub d: u32,
    pub p: u32,
    pub member: bool,
    pub reason: LpReason,
}

/// Exact `L^p(R^d)` membership of `f_d`.
///
/// Near the origin `|f_d|^p r^{d-1}` behaves like `r^{(2-d)p + d - 1}` for
/// `d >= 3` (bounded or logarithmic otherwise), so the origin needs
/// `p (d - 2) < d`; at infinity it behaves like `r^{d - 1 - 2p}`, which needs
/// `2p > d`. Both tests are integer comparisons.
pub fn lp_membership(d: u32, p: u32) -> Result<LpVerdict> {
    if d == 0 || p == 0 {
        return Err(domain("d and p must be at least 1"));
    }
    let (d64, p64) = (u64::from(d), u64::from(p));
    let origin_ok = d <= 2 || p64 * (d64 - 2) < d64;
    let infinity_ok = 2 * p64 > d64;
    let reason = match (origin_ok, infinity_ok) {
        (true, true) => LpReason::Member,
        (false, true) => LpReason::OriginDivergence,
        (true, false) => LpReason::InfinityDivergence,
        (false, false) => LpReason::Both,
    };
    Ok(LpVerdict {
        d,
        p,
        member: origin_ok && infinity_ok,
        reason,
    })
}

/// Numerical cross-check of [`lp_membership`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpProbe {
    pub d: u32,
    pub p: u32,
    /// `omega_{d-1} int |f_d|^p r^{d-1} dr` over `[PROBE_INNER, PROBE_OUTER]`.
    pub integral: f64,
    /// Innermost dyadic shell over the next one out.
    pub origin_shell_ratio: f64,
    /// Outermost dyadic shell over the next one in.
    pub infinity_shell_ratio: f64,
    pub member: bool,
}

pub const PROBE_INNER: f64 = 1e-6;
pub const PROBE_OUTER: f64 = 1e3;

/// A shell ratio above this means the integrand does not decay fast enough
/// for dyadic shells to form a convergent series. Integer exponents put
/// convergent cases at `<= 1/2` (up to logarithms) and divergent ones at `>= 1`.
const SHELL_RATIO_DIVERGENT: f64 = 0.9;

/// Integrates `|f_d|^p r^{d-1}` on `[PROBE_INNER, PROBE_OUTER]` and classifies
/// each end by the ratio of its last two dyadic shells.
pub fn lp_probe(d: u32, p: u32) -> Result<LpProbe> {
    if p == 0 {
        return Err(domain("p must be at least 1"));
    }
    let f = RadialEigenfunction::new(d)?;
    let q = Quadrature::with_tolerance(1e-10);
    let integrand = |r: f64| f.f(r).unwrap_or(f64::NAN).abs().powi(p as i32) * r.powi(d as i32 - 1);
    let shell = |a: f64, b: f64| q.integrate(integrand, a, b).map(|r| r.value);

    let o1 = shell(PROBE_INNER, 2.0 * PROBE_INNER)?;
    let o2 = shell(2.0 * PROBE_INNER, 4.0 * PROBE_INNER)?;
    let i1 = shell(0.5 * PROBE_OUTER, PROBE_OUTER)?;
    let i2 = shell(0.25 * PROBE_OUTER, 0.5 * PROBE_OUTER)?;
    let middle = q.integrate_graded(integrand, 4.0 * PROBE_INNER, 1.0)?.value
        + q.integrate(integrand, 1.0, 0.25 * PROBE_OUTER)?.value;

    let origin_shell_ratio = o1 / o2;
    let infinity_shell_ratio = i1 / i2;
    Ok(LpProbe {
        d,
        p,
        integral: unit_sphere_area(d) * (o1 + o2 + middle + i2 + i1),
        origin_shell_ratio,
        infinity_shell_ratio,
        member: origin_shell_ratio < SHELL_RATIO_DIVERGENT && infinity_shell_ratio < SHELL_RATIO_DIVERGENT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::special::EULER_GAMMA;
    use proptest::prelude::*;

    fn ef(d: u32) -> RadialEigenfunction {
        RadialEigenfunction::new(d).unwrap()
    }

    #[test]
    fn delta_table() {
        let want = [1.5, 1.0, 0.5, 0.0, -0.5];
        for (d, w) in (1..=5).zip(want) {
            assert_eq!(ef(d).delta(), w);
        }
        assert!(RadialEigenfunction::new(0).is_err());
    }

    #[test]
    fn dimension_four_closed_form() {
        // Ei^(0)(x) = e^x - 2 under the sign convention of the definition.
        let f4 = ef(4);
        for r in [0.1f64, 0.7, 1.0, 3.0, 10.0] {
            let want = (1.0 - 2.0 * (-r * r).exp()) / (r * r);
            assert!((f4.f(r).unwrap() - want).abs() < 1e-14 * want.abs().max(1e-300) + 1e-15);
            let want_phi = (1.0 - 2.0 * (-0.5 * r * r).exp()) / (r * r);
            assert!((f4.phi(r).unwrap() - want_phi).abs() < 1e-13);
        }
    }

    #[test]
    fn planar_anchor() {
        let v = ef(2).phi(1.0).unwrap();
        let want = (-0.5f64).exp() * 0.454_219_904_863_173_58;
        assert!((v - want).abs() < 1e-13);
        assert!((v - 0.27549).abs() < 1e-5);
    }

    #[test]
    fn near_zero_laws() {
        let r = 1e-5;
        assert!((ef(1).f(r).unwrap() + 2.0).abs() < 1e-3);
        let ratio = ef(3).f(r).unwrap() * r / -std::f64::consts::PI.sqrt();
        assert!((ratio - 1.0).abs() < 0.01);
        // f_2(r) = 2 ln r + gamma + O(r^2): the ratio to 2 ln r creeps to 1
        // only logarithmically, the offset converges.
        let r = 1e-4;
        let f2 = ef(2).f(r).unwrap();
        assert!((f2 - 2.0 * r.ln() - EULER_GAMMA).abs() < 1e-6);
    }

    #[test]
    fn infinity_law() {
        for d in 1..=8 {
            let v = ef(d).f(30.0).unwrap() * 900.0;
            assert!((0.99..=1.01).contains(&v), "d={d}: {v}");
        }
    }

    #[test]
    fn phi_f_link() {
        for d in [1, 2, 3, 4, 5, 7, 8] {
            let e = ef(d);
            for r in [0.05, 1.0, 3.0, 9.0] {
                let res = e.phi_from_f_residual(r).unwrap();
                assert!(res <= 1e-12 * e.phi(r).unwrap().abs(), "d={d} r={r}: {res:e} {:e}", e.phi(r).unwrap());
            }
        }
    }

    #[test]
    fn rejects_non_positive_radius() {
        let e = ef(3);
        assert!(e.f(0.0).is_err());
        assert!(e.phi(-1.0).is_err());
        assert!(RegularizedFunction::new(e.clone(), 0.0).is_err());
        assert!(RegularizedFunction::new(e, -1.0).is_err());
    }

    #[test]
    fn regularized_values() {
        let rf = RegularizedFunction::new(ef(4), 1.0).unwrap();
        let want = (1.0 - 2.0 * (-1f64).exp()) * (-1f64).exp();
        assert!((rf.value(1.0).unwrap() - want).abs() < 1e-15);
        let e = ef(3);
        let tiny = RegularizedFunction::new(e.clone(), 1e-10).unwrap();
        let f = e.f(1.0).unwrap();
        assert!(((tiny.value(1.0).unwrap() - f) / f).abs() < 1e-8);
    }

    #[test]
    fn lp_table() {
        for p in 1..=10 {
            assert!(lp_membership(1, p).unwrap().member);
            assert_eq!(lp_membership(2, p).unwrap().member, p >= 2);
            assert_eq!(lp_membership(3, p).unwrap().member, p == 2);
            for d in 4..=8 {
                assert!(!lp_membership(d, p).unwrap().member);
            }
        }
        assert_eq!(lp_membership(3, 3).unwrap().reason, LpReason::OriginDivergence);
        assert_eq!(lp_membership(3, 1).unwrap().reason, LpReason::InfinityDivergence);
        assert_eq!(lp_membership(5, 2).unwrap().reason, LpReason::Both);
        assert_eq!(lp_membership(2, 1).unwrap().reason, LpReason::InfinityDivergence);
    }

    #[test]
    fn lp_probe_agrees_with_exact_table() {
        for d in 1..=5 {
            for p in 1..=5 {
                let probe = lp_probe(d, p).unwrap();
                let exact = lp_membership(d, p).unwrap();
                assert_eq!(probe.member, exact.member, "{probe:?}");
                let origin_ok = !matches!(exact.reason, LpReason::OriginDivergence | LpReason::Both);
                assert_eq!(probe.origin_shell_ratio < 0.9, origin_ok, "{probe:?}");
            }
        }
    }

    #[test]
    fn tempered_constants() {
        for d in 1..=8 {
            let c = ef(d).tempered_constant().unwrap();
            assert!(c.is_finite() && c > 0.0, "d={d}");
        }
        // d = 4: 2 pi^2 int_0^inf |1 - 2 e^{-r^2}| r / (1 + r^8) dr
        let g = |r: f64| (1.0 - 2.0 * (-r * r).exp()).abs() * r / (1.0 + r.powi(8));
        let kink = 2f64.ln().sqrt();
        let want = 2.0
            * std::f64::consts::PI.powi(2)
            * (oracle::tanh_sinh(g, 0.0, kink) + oracle::tanh_sinh_to_inf(g, kink));
        let got = ef(4).tempered_constant().unwrap();
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
        assert_eq!(ef(5).tempered_constant_alpha(0.0).unwrap(), 0.0);
        let small = ef(5).tempered_constant_alpha(1e-3).unwrap();
        let big = ef(5).tempered_constant_alpha(1e-1).unwrap();
        assert!(small < big && big < ef(5).tempered_constant().unwrap());
    }

    proptest! {
        #[test]
        fn domination(d in 1u32..=8, alpha in 1e-4f64..2.0, r in 0.01f64..20.0) {
            let e = ef(d);
            let f = e.f(r).unwrap();
            prop_assume!(f != 0.0);
            let fa = RegularizedFunction::new(e, alpha).unwrap().value(r).unwrap();
            let gap = 1.0 - fa / f;
            prop_assert!(gap >= 0.0 && gap <= (alpha * r * r).min(1.0) + 1e-15);
            prop_assert!(fa.abs() <= f.abs());
        }
    }
}
