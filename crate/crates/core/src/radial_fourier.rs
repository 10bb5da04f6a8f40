//! Fourier transforms of radial functions on `R^d`, with the convention
//! `F[f](u) = int e^{-i<u,x>} f(x) dx`.
//!
//! For a radial `f` the transform is radial and reduces to
//!
//! ```text
//! F[f](rho) = omega_{d-1} int_0^inf f(r) Lambda_d(rho r) r^{d-1} dr
//! ```
//!
//! with `Lambda_d` the normalized Bessel kernel of
//! [`radial_kernel`](crate::special::radial_kernel).
//!
//! The same module holds the closed forms built on the Gaussian transform:
//! the two halves `g^a`, `h^a` of the regularized eigenfunction, their
//! `a -> 0` limit, and the rescaling rule for eigenvalues.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenfunctions::{RadialEigenfunction, RegularizedFunction};
use crate::error::{divergence, domain, Result};
use crate::quad::{oscillatory_tail, QuadResult, Quadrature, Rule};
use crate::special::{radial_kernel, unit_sphere_area, MAX_KERNEL_DIMENSION};

/// Largest dimension handled by the numerical transform.
pub const MAX_DIMENSION: u32 = 8;

/// Gaussian tails are cut where `rate r^2` reaches this value.
const GAUSSIAN_CUTOFF_EXPONENT: f64 = 120.0;

/// Cap on the number of half-periods summed for a power-law tail.
const MAX_TAIL_INTERVALS: usize = 6000;

/// Decay of a profile at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailHint {
    /// `|f(r)| <= C e^{-rate r^2}` up to polynomial factors.
    Gaussian { rate: f64 },
    /// `|f(r)| ~ r^{-exponent}`.
    Power { exponent: f64 },
}

/// A real function of `r = |x|`, with what the transform needs to know about
/// its endpoints.
pub trait RadialProfile: Sync {
    fn value(&self, r: f64) -> f64;

    /// `s` such that `f(r) = O(r^s)` as `r -> 0`, logarithms ignored.
    fn origin_exponent(&self) -> f64 {
        0.0
    }

    fn tail(&self) -> TailHint;
}

/// `e^{-a r^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub a: f64,
}

impl RadialProfile for GaussianProfile {
    fn value(&self, r: f64) -> f64 {
        (-self.a * r * r).exp()
    }

    fn tail(&self) -> TailHint {
        TailHint::Gaussian { rate: self.a }
    }
}

/// A closure together with explicit endpoint hints.
pub struct FnProfile<F> {
    pub f: F,
    pub origin_exponent: f64,
    pub tail: TailHint,
}

impl<F: Fn(f64) -> f64 + Sync> RadialProfile for FnProfile<F> {
    fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    fn origin_exponent(&self) -> f64 {
        self.origin_exponent
    }

    fn tail(&self) -> TailHint {
        self.tail
    }
}

fn eigen_origin_exponent(d: u32) -> f64 {
    (2.0 - d as f64).min(0.0)
}

/// `f_d` as a profile.
impl RadialProfile for RadialEigenfunction {
    fn value(&self, r: f64) -> f64 {
        self.f(r).unwrap_or(f64::NAN)
    }

    fn origin_exponent(&self) -> f64 {
        eigen_origin_exponent(self.d())
    }

    fn tail(&self) -> TailHint {
        TailHint::Power { exponent: 2.0 }
    }
}

/// `phi_d` as a profile.
#[derive(Debug, Clone)]
pub struct PhiProfile(pub RadialEigenfunction);

impl RadialProfile for PhiProfile {
    fn value(&self, r: f64) -> f64 {
        self.0.phi(r).unwrap_or(f64::NAN)
    }

    fn origin_exponent(&self) -> f64 {
        eigen_origin_exponent(self.0.d())
    }

    fn tail(&self) -> TailHint {
        TailHint::Power { exponent: 2.0 }
    }
}

impl RadialProfile for RegularizedFunction {
    fn value(&self, r: f64) -> f64 {
        RegularizedFunction::value(self, r).unwrap_or(f64::NAN)
    }

    fn origin_exponent(&self) -> f64 {
        eigen_origin_exponent(self.base().d())
    }

    fn tail(&self) -> TailHint {
        TailHint::Gaussian { rate: self.alpha() }
    }
}

/// `h_d^a(r) = r^{2-d} e^{-(1+a) r^2} H^(delta)(r^2)`, the part of `f_d^a`
/// coming from the upper tail of the delta-exponential integral.
#[derive(Debug, Clone)]
pub struct HAlphaProfile {
    pub base: RadialEigenfunction,
    pub alpha: f64,
}

impl RadialProfile for HAlphaProfile {
    fn value(&self, r: f64) -> f64 {
        let x = r * r;
        let h = self.base.evaluator().h(x).unwrap_or(f64::NAN);
        r.powi(2 - self.base.d() as i32) * (-(1.0 + self.alpha) * x).exp() * h
    }

    fn origin_exponent(&self) -> f64 {
        eigen_origin_exponent(self.base.d())
    }

    fn tail(&self) -> TailHint {
        TailHint::Gaussian { rate: 2.0 + self.alpha }
    }
}

/// How the region beyond `singularity_split` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformQuadrature {
    /// Adaptive Gauss-Kronrod between consecutive kernel zeros.
    Adaptive,
    /// `grid_points` uniform Gauss-Kronrod panels on
    /// `[singularity_split, truncation_radius]`.
    FixedGrid,
}

/// Numerical settings of the radial transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadialTransformPlan {
    pub d: u32,
    pub truncation_radius: f64,
    pub quadrature: TransformQuadrature,
    pub grid_points: usize,
    /// End of the panel next to the origin, which is integrated with
    /// endpoint grading; oscillatory handling starts beyond it.
    pub singularity_split: f64,
    pub rel_tol: f64,
}

impl Default for RadialTransformPlan {
    fn default() -> Self {
        RadialTransformPlan {
            d: 1,
            truncation_radius: 60.0,
            quadrature: TransformQuadrature::Adaptive,
            grid_points: 4096,
            singularity_split: 1.0,
            rel_tol: 1e-11,
        }
    }
}

/// `F[f](rho)` at one spectral radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralValue {
    pub rho: f64,
    pub value: f64,
}

impl RadialTransformPlan {
    pub fn new(d: u32) -> Result<Self> {
        let plan = RadialTransformPlan {
            d,
            ..Default::default()
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > MAX_DIMENSION.min(MAX_KERNEL_DIMENSION) {
            return Err(domain(format!("dimension {} outside 1..={MAX_DIMENSION}", self.d)));
        }
        if !(self.singularity_split > 0.0 && self.truncation_radius > self.singularity_split) {
            return Err(domain("need truncation_radius > singularity_split > 0"));
        }
        if self.grid_points < 16 {
            return Err(domain("grid_points must be at least 16"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(domain("rel_tol must be positive"));
        }
        Ok(())
    }

    fn quad(&self) -> Quadrature {
        Quadrature::with_tolerance(self.rel_tol)
    }

    /// Kernel zero `k` (asymptotic phase) divided by `rho`, shifted to lie
    /// beyond `start`. Exact zeros for `d = 1, 3`.
    fn breakpoints(&self, rho: f64, start: f64) -> impl Fn(usize) -> f64 {
        let nu = 0.5 * self.d as f64 - 1.0;
        let phase = 0.75 + 0.5 * nu;
        let first = ((start * rho / PI) - phase).floor().max(0.0) + 1.0;
        move |k| (first + k as f64 + phase) * PI / rho
    }
}

/// The `d`-dimensional Fourier transform of a radial profile at `rho >= 0`.
pub fn radial_fourier<P: RadialProfile + ?Sized>(plan: &RadialTransformPlan, profile: &P, rho: f64) -> Result<f64> {
    plan.validate()?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be finite and non-negative, got {rho}")));
    }
    let d = plan.d;
    let s = profile.origin_exponent();
    if s + d as f64 <= 0.0 {
        return Err(divergence(format!(
            "profile ~ r^{s} is not integrable against r^{} at the origin",
            d - 1
        )));
    }
    let dm1 = d as i32 - 1;
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let f = profile.value(r);
        if f == 0.0 {
            return 0.0;
        }
        f * radial_kernel(d, rho * r) * r.powi(dm1)
    };
    let q = plan.quad();
    let split = plan.singularity_split;
    let head = q.integrate_graded(integrand, 0.0, split)?;
    let tail = match profile.tail() {
        TailHint::Gaussian { rate } if rate > 0.0 => {
            let cut = (GAUSSIAN_CUTOFF_EXPONENT / rate).sqrt();
            if cut <= plan.truncation_radius {
                finite_tail(plan, &integrand, rho, split, cut.max(split), head.value)?
            } else {
                power_tail(plan, &integrand, rho, head.value)?
            }
        }
        TailHint::Gaussian { rate } => {
            return Err(domain(format!("Gaussian tail rate must be positive, got {rate}")));
        }
        TailHint::Power { exponent } => {
            if rho == 0.0 {
                if exponent <= d as f64 {
                    return Err(divergence(format!(
                        "profile ~ r^-{exponent} is not integrable at infinity in dimension {d}"
                    )));
                }
                q.integrate_to_infinity(integrand, split)?
            } else {
                power_tail(plan, &integrand, rho, head.value)?
            }
        }
    };
    Ok(unit_sphere_area(d) * (head.value + tail.value))
}

/// `int_split^end`, cut at kernel zeros in adaptive mode.
fn finite_tail<F: Fn(f64) -> f64>(
    plan: &RadialTransformPlan,
    f: &F,
    rho: f64,
    split: f64,
    end: f64,
    scale: f64,
) -> Result<QuadResult> {
    if end <= split {
        return Ok(QuadResult::ZERO);
    }
    let q = Quadrature {
        abs_tol: 1e-3 * plan.rel_tol * scale.abs(),
        ..plan.quad()
    };
    match plan.quadrature {
        TransformQuadrature::FixedGrid => {
            let panels = plan.grid_points;
            Quadrature {
                rule: Rule::Fixed { panels },
                ..q
            }
            .integrate(f, split, end)
        }
        TransformQuadrature::Adaptive => {
            let mut out = QuadResult::ZERO;
            let mut lo = split;
            if rho > 0.0 {
                let bp = plan.breakpoints(rho, split);
                let mut k = 0;
                while bp(k) < end {
                    out.accumulate(q.integrate(f, lo, bp(k))?);
                    lo = bp(k);
                    k += 1;
                }
            }
            out.accumulate(q.integrate(f, lo, end)?);
            Ok(out)
        }
    }
}

/// `int_split^inf` for `rho > 0` when the integrand only decays slowly:
/// up to a kernel zero by plain quadrature, then between zeros with
/// acceleration.
fn power_tail<F: Fn(f64) -> f64>(plan: &RadialTransformPlan, f: &F, rho: f64, scale: f64) -> Result<QuadResult> {
    let split = plan.singularity_split;
    let start = match plan.quadrature {
        TransformQuadrature::Adaptive => split,
        TransformQuadrature::FixedGrid => plan.truncation_radius,
    };
    let bp = plan.breakpoints(rho, start);
    let mut out = finite_tail(plan, f, rho, split, bp(0), scale)?;
    let scale = scale.abs().max(out.value.abs());
    out.accumulate(oscillatory_tail(&plan.quad(), f, &bp, scale, MAX_TAIL_INTERVALS)?);
    Ok(out)
}

/// [`radial_fourier`] over a grid of radii, evaluated in parallel; output
/// order follows `rhos`.
pub fn radial_fourier_grid<P: RadialProfile + ?Sized>(
    plan: &RadialTransformPlan,
    profile: &P,
    rhos: &[f64],
) -> Result<Vec<SpectralValue>> {
    rhos.par_iter()
        .map(|&rho| radial_fourier(plan, profile, rho).map(|value| SpectralValue { rho, value }))
        .collect()
}

/// `F[e^{-a r^2}](rho) = (pi / a)^{d/2} e^{-rho^2 / (4a)}`.
pub fn gaussian_transform(a: f64, d: u32, rho: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("Gaussian rate must be positive, got {a}")));
    }
    check_d(d)?;
    Ok((PI / a).powf(0.5 * d as f64) * (-rho * rho / (4.0 * a)).exp())
}

fn check_d(d: u32) -> Result<()> {
    if d == 0 {
        Err(domain("dimension must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_alpha_rho(alpha: f64, rho: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(domain(format!("alpha must be non-negative, got {alpha}")));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be non-negative, got {rho}")));
    }
    Ok(())
}

fn closed_form_quad() -> Quadrature {
    Quadrature::with_tolerance(1e-13)
}

/// Transform of `h_d^a`:
/// `pi^{d/2} int_1^inf (1+a+t)^{-d/2} t^{-delta} e^{-rho^2 / (4(1+a+t))} dt`.
///
/// Evaluated after `t = 1/s`, which (because `d/2 + delta = 2`) leaves the
/// smooth integrand `(1 + (1+a) s)^{-d/2} exp(-rho^2 s / (4 (1 + (1+a) s)))`
/// on `[0, 1]`.
pub fn h_hat_alpha(d: u32, alpha: f64, rho: f64) -> Result<f64> {
    check_d(d)?;
    check_alpha_rho(alpha, rho)?;
    let c = 1.0 + alpha;
    let half_d = 0.5 * d as f64;
    let q2 = 0.25 * rho * rho;
    let integrand = |s: f64| {
        let w = 1.0 + c * s;
        w.powf(-half_d) * (-q2 * s / w).exp()
    };
    let v = closed_form_quad().integrate(integrand, 0.0, 1.0)?;
    Ok(PI.powf(half_d) * v.value)
}

/// The `a = 0` value of [`h_hat_alpha`] in the form
/// `pi^{d/2} e^{-rho^2/4} int_{1/2}^1 e^{rho^2 s / 4} s^{-delta} ds`.
pub fn h_hat_limit(d: u32, rho: f64) -> Result<f64> {
    check_d(d)?;
    check_alpha_rho(0.0, rho)?;
    let delta = 2.0 - 0.5 * d as f64;
    let q2 = 0.25 * rho * rho;
    let v = closed_form_quad().integrate(|s| (q2 * (s - 1.0)).exp() * s.powf(-delta), 0.5, 1.0)?;
    Ok(PI.powf(0.5 * d as f64) * v.value)
}

/// Transform of `g_d^a`:
/// `pi^{d/2} / (1+a) int_0^{1/(1+a)} psi(x) dx` with
/// `psi(x) = ((1-x)^{-d/2} e^{-A/(1-x)} - (1+x)^{-d/2} e^{-A/(1+x)}) / x^delta`
/// and `A = rho^2 / (4 (1+a))`.
///
/// The bracket is a difference of two values that agree to `O(x)` at the
/// origin; it is evaluated as `e^{L(x)} expm1(L(-x) - L(x))` with
/// `L(x) = -(d/2) ln(1+x) - A/(1+x)`, whose exponent difference
/// `d atanh(x) - 2 A x / (1 - x^2)` has no cancellation.
pub fn g_hat_alpha(d: u32, alpha: f64, rho: f64) -> Result<f64> {
    check_d(d)?;
    check_alpha_rho(alpha, rho)?;
    if alpha == 0.0 && rho == 0.0 && d >= 2 {
        return Err(divergence(format!("g-hat at alpha = 0 is singular at rho = 0 in dimension {d}")));
    }
    let c = 1.0 + alpha;
    let upper = 1.0 / c;
    let a_coef = rho * rho / (4.0 * c);
    let d_f = d as f64;
    let delta = 2.0 - 0.5 * d_f;
    let psi = |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let lp = -0.5 * d_f * x.ln_1p() - a_coef / (1.0 + x);
        let gap = d_f * x.atanh() - 2.0 * a_coef * x / ((1.0 - x) * (1.0 + x));
        lp.exp() * gap.exp_m1() * x.powf(-delta)
    };
    let q = closed_form_quad();
    let mid = 0.5 * upper;
    let lower_half = q.integrate_graded(psi, 0.0, mid)?;
    // Graded toward the upper endpoint, which is singular when alpha = 0.
    let upper_half = q.integrate_graded(|y| psi(upper - y), 0.0, upper - mid)?;
    Ok(PI.powf(0.5 * d_f) / c * (lower_half.value + upper_half.value))
}

/// `-pi^{d/2} f_d(rho / 2)`, the transform of `f_d`.
pub fn limit_f_hat(d: u32, rho: f64) -> Result<f64> {
    let f = RadialEigenfunction::new(d)?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be non-negative, got {rho}")));
    }
    let scale = -PI.powf(0.5 * d as f64);
    if rho == 0.0 {
        // f_1(r) -> -2 at the origin; f_d is unbounded there for d >= 2.
        return if d == 1 {
            Ok(scale * -2.0)
        } else {
            Err(divergence(format!("f_{d} is singular at the origin")))
        };
    }
    Ok(scale * f.f(0.5 * rho)?)
}

/// If `F[f](x) = lambda f(beta x)`, then `f(sqrt(beta) x)` is an
/// eigenfunction with eigenvalue `lambda beta^{-d/2}`.
pub fn scaling_eigen(lambda: f64, beta: f64, d: u32) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain(format!("beta must be positive, got {beta}")));
    }
    check_d(d)?;
    Ok(lambda * beta.powf(-0.5 * d as f64))
}
