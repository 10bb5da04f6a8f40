//! The delta-exponential integral
//!
//! ```text
//! Ei^(d)(x) = PV int_{-inf}^{x} e^t / t^d dt,     d < 2,
//! ```
//!
//! where `t^d` stands for `-|t|^d` when `t < 0`. For `x > 0` it splits as
//! `Ei^(d)(x) = G^(d)(x) - H^(d)(x)` with
//!
//! ```text
//! G^(d)(x) = int_0^x 2 sinh(t) / t^d dt,     H^(d)(x) = int_x^inf e^{-t} / t^d dt,
//! ```
//!
//! and for `x < 0` the same sign convention gives `Ei^(d)(x) = -H^(d)(-x)`.
//! Note that the convention makes `Ei^(0)(x) = e^x - 2` for `x > 0`, not
//! `e^x`: the negative half-line contributes `-1` instead of `+1`.
//!
//! `H^(d)` is the upper incomplete gamma function `Gamma(1 - d, x)`.

use std::f64::consts::PI;

use crate::error::{divergence, domain, Error, Result};
use crate::quad::Quadrature;
use crate::special::{exprel, gamma, gamma1p_minus_one_over};

/// Largest argument for which `G^(d)` and `Ei^(d)` are representable.
const MAX_UNSCALED_ARG: f64 = 700.0;

/// Below `max(H_CF_SWITCH, 1 - d + 1)` the upper incomplete gamma uses
/// series, above it the continued fraction.
const H_CF_SWITCH: f64 = 2.0;

/// Half-width of the band around `a = 0` handled by the small-`a` expansion.
const SMALL_A: f64 = 0.25;

/// The exponent `d < 2` of the delta-exponential integral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct DeltaParam(f64);

impl DeltaParam {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(domain(format!("delta must be finite, got {delta}")));
        }
        if delta >= 2.0 {
            return Err(domain(format!("delta must be < 2, got {delta}")));
        }
        Ok(DeltaParam(delta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Numerical knobs of [`DeltaExpEvaluator`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_series_terms: usize,
    /// Argument above which the power series gives way to quadrature (for
    /// `G`) or the asymptotic expansion (for the scaled integral).
    pub series_asymptotic_crossover: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_series_terms: 500,
            series_asymptotic_crossover: 30.0,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(domain("rel_tol must be positive"));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(domain("abs_tol must be non-negative"));
        }
        if self.max_series_terms < 1 {
            return Err(domain("max_series_terms must be at least 1"));
        }
        if !(self.series_asymptotic_crossover > 0.0) {
            return Err(domain("series/asymptotic crossover must be positive"));
        }
        Ok(())
    }

    fn quadrature(&self) -> Quadrature {
        Quadrature {
            rel_tol: self.rel_tol * 1e-2,
            abs_tol: self.abs_tol,
            ..Quadrature::default()
        }
    }
}

/// Cut-off pairs `(a, b)` for the principal-value limit
/// `{int_{-inf}^{-a} + int_b^x} e^t / t^d dt`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PvSchedule {
    pairs: Vec<(f64, f64)>,
    /// `b - a` for each pair, kept separately because `b` itself may round to
    /// `a` (for `b = a + a^2` once `a < 1e-16`).
    gaps: Vec<f64>,
    /// Declared constant `K` of the premise `|a - b| <= K min(a, b)^2`.
    k_bound: f64,
}

impl PvSchedule {
    pub fn new(pairs: Vec<(f64, f64)>, k_bound: f64) -> Result<Self> {
        let gaps = pairs.iter().map(|&(a, b)| b - a).collect();
        Self::with_gaps(pairs, gaps, k_bound)
    }

    fn with_gaps(pairs: Vec<(f64, f64)>, gaps: Vec<f64>, k_bound: f64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(domain("empty cut-off schedule"));
        }
        if !(k_bound >= 0.0) {
            return Err(domain("K must be non-negative"));
        }
        for &(a, b) in &pairs {
            if !(a > 0.0 && b > 0.0) {
                return Err(domain(format!("cut-offs must be positive, got ({a}, {b})")));
            }
        }
        for w in pairs.windows(2) {
            if w[1].0.max(w[1].1) >= w[0].0.max(w[0].1) {
                return Err(domain("cut-offs must shrink strictly toward 0"));
            }
        }
        Ok(PvSchedule { pairs, gaps, k_bound })
    }

    /// `a = b = 10^{-n}` for `n` in `first..=last`.
    pub fn symmetric(first: i32, last: i32) -> Result<Self> {
        let pairs = (first..=last).map(|n| (10f64.powi(-n), 10f64.powi(-n))).collect();
        PvSchedule::new(pairs, 0.0)
    }

    /// `a = eps`, `b = eps + eps^2` for `eps = 10^{-n}`, `n` in `first..=last`.
    pub fn asymmetric(first: i32, last: i32) -> Result<Self> {
        let eps: Vec<f64> = (first..=last).map(|n| 10f64.powi(-n)).collect();
        let pairs = eps.iter().map(|&e| (e, e + e * e)).collect();
        PvSchedule::with_gaps(pairs, eps.iter().map(|&e| e * e).collect(), 1.0)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// `b - a` for each pair.
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn k_bound(&self) -> f64 {
        self.k_bound
    }
}

/// Outcome of [`DeltaExpEvaluator::pv_limit_check`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PvReport {
    pub delta: f64,
    pub x: f64,
    pub k_bound: f64,
    pub reference: f64,
    pub values: Vec<f64>,
    pub distances: Vec<f64>,
    pub tolerance: f64,
    /// Final distance is below `tolerance`.
    pub converged: bool,
    /// Distances never increase along the schedule.
    pub monotone: bool,
}

/// Evaluates `Ei^(d)`, `G^(d)`, `H^(d)` and the scaled integral for a fixed `d`.
#[derive(Debug, Clone)]
pub struct DeltaExpEvaluator {
    delta: f64,
    opts: EvalOptions,
    /// `Gamma(1 - d)` when `d < 1`.
    h_at_zero: Option<f64>,
    /// Exponentially small constant `C` in
    /// `e^{-x} Ei^(d)(x) = x^{-d} sum_k (d)_k x^{-k} + C e^{-x} + ...`.
    stokes_constant: f64,
}

impl DeltaExpEvaluator {
    pub fn new(delta: DeltaParam) -> Self {
        Self::with_options(delta, EvalOptions::default()).expect("default options are valid")
    }

    pub fn with_options(delta: DeltaParam, opts: EvalOptions) -> Result<Self> {
        opts.validate()?;
        let d = delta.value();
        let e = 1.0 - d;
        let h_at_zero = (d < 1.0).then(|| gamma(e));
        let stokes_constant = if e == 0.0 {
            0.0
        } else {
            // 1 + cos(pi d) = 2 sin^2(pi (1 - d) / 2)
            -gamma(e) * 2.0 * (0.5 * PI * e).sin().powi(2)
        };
        Ok(DeltaExpEvaluator {
            delta: d,
            opts,
            h_at_zero,
            stokes_constant,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn options(&self) -> &EvalOptions {
        &self.opts
    }

    /// `G^(d)(x) = int_0^x 2 sinh(t) / t^d dt`.
    pub fn g(&self, x: f64) -> Result<f64> {
        check_arg(x)?;
        if x < 0.0 {
            return Err(domain(format!("G is defined for x >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x <= self.opts.series_asymptotic_crossover {
            self.g_series(x, 1.0)
        } else if x <= MAX_UNSCALED_ARG {
            self.g_quadrature(x)
        } else {
            Err(Error::Overflow(format!("G^({})({x}) exceeds f64 range", self.delta)))
        }
    }

    /// Power series `2 sum_k x^{2k+2-d} / ((2k+1)! (2k+2-d))`, every term
    /// multiplied by `scale`. All terms are positive.
    fn g_series(&self, x: f64, scale: f64) -> Result<f64> {
        let d = self.delta;
        let x2 = x * x;
        let lead = 2.0 * x.powf(1.0 - d);
        // t = scale * x^{2k+1} / (2k+1)!
        let mut t = scale * x;
        let mut sum = 0.0;
        for k in 0..self.opts.max_series_terms {
            let kf = k as f64;
            let term = lead * t / (2.0 * kf + 2.0 - d);
            sum += term;
            let ratio = x2 / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            if ratio < 1.0 && term * ratio / (1.0 - ratio) <= 1e-2 * self.opts.rel_tol * sum {
                return Ok(sum);
            }
            t *= ratio;
        }
        Err(Error::Convergence {
            what: format!("G^({d}) series at x = {x}"),
            iterations: self.opts.max_series_terms,
        })
    }

    fn g_quadrature(&self, x: f64) -> Result<f64> {
        let d = self.delta;
        let q = self.opts.quadrature();
        // Series on [0, 1] keeps the t^{1-d} endpoint behaviour out of the quadrature.
        let head = self.g_series(1.0, 1.0)?;
        let body = q.integrate(|t| 2.0 * t.sinh() * t.powf(-d), 1.0, x)?;
        Ok(head + body.value)
    }

    /// `H^(d)(x) = int_x^inf e^{-t} / t^d dt = Gamma(1 - d, x)`.
    pub fn h(&self, x: f64) -> Result<f64> {
        check_arg(x)?;
        if x < 0.0 {
            return Err(domain(format!("H is defined for x >= 0, got {x}")));
        }
        if x == 0.0 {
            return self.h_at_zero.ok_or_else(|| {
                divergence(format!("H^({}) diverges at 0 for delta >= 1", self.delta))
            });
        }
        self.upper_gamma(1.0 - self.delta, x)
    }

    /// `Gamma(a, x)` for `a > -1`, `x > 0`.
    fn upper_gamma(&self, a: f64, x: f64) -> Result<f64> {
        if x >= H_CF_SWITCH.max(a + 1.0) {
            self.upper_gamma_cf(a, x)
        } else if a.abs() <= SMALL_A {
            Ok(self.upper_gamma_small_a(a, x))
        } else if a > 0.0 {
            Ok(gamma(a) - self.lower_gamma_series(a, x)?)
        } else {
            // Integration by parts: Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a.
            let up = self.upper_gamma(a + 1.0, x)?;
            Ok((up - x.powf(a) * (-x).exp()) / a)
        }
    }

    /// Modified Lentz evaluation of the Legendre continued fraction.
    fn upper_gamma_cf(&self, a: f64, x: f64) -> Result<f64> {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        let max_iter = self.opts.max_series_terms.max(300);
        for i in 1..=max_iter {
            let fi = i as f64;
            let an = -fi * (fi - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() <= 0.25 * f64::EPSILON {
                return Ok((a * x.ln() - x).exp() * h);
            }
        }
        Err(Error::Convergence {
            what: format!("continued fraction for Gamma({a}, {x})"),
            iterations: max_iter,
        })
    }

    /// `gamma(a, x) = x^a e^{-x} sum_n x^n / (a (a+1) ... (a+n))`, `a > 0`.
    fn lower_gamma_series(&self, a: f64, x: f64) -> Result<f64> {
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..=self.opts.max_series_terms {
            term *= x / (a + n as f64);
            sum += term;
            if term < 1e-17 * sum {
                return Ok(sum * (a * x.ln() - x).exp());
            }
        }
        Err(Error::Convergence {
            what: format!("lower incomplete gamma series for a = {a}, x = {x}"),
            iterations: self.opts.max_series_terms,
        })
    }

    /// `Gamma(a, x)` for `|a| <= 1/4`, continuous through `a = 0` where it
    /// reduces to `E_1(x) = -gamma - ln x - sum_{n>=1} (-x)^n / (n n!)`.
    fn upper_gamma_small_a(&self, a: f64, x: f64) -> f64 {
        let lnx = x.ln();
        // Gamma(a) - x^a / a = (Gamma(1+a) - 1)/a - (x^a - 1)/a
        let head = gamma1p_minus_one_over(a) - lnx * exprel(a * lnx);
        let mut pow = 1.0; // (-x)^n / n!
        let mut tail = 0.0;
        for n in 1..200 {
            let nf = n as f64;
            pow *= -x / nf;
            let term = pow / (nf + a);
            tail += term;
            if term.abs() < 1e-18 * tail.abs().max(1e-300) {
                break;
            }
        }
        head - x.powf(a) * tail
    }

    /// The delta-exponential integral `Ei^(d)(x)` for any real `x`.
    pub fn ei(&self, x: f64) -> Result<f64> {
        check_arg(x)?;
        if x > 0.0 {
            Ok(self.g(x)? - self.h(x)?)
        } else if x < 0.0 {
            Ok(-self.h(-x)?)
        } else {
            self.h_at_zero.map(|h0| -h0).ok_or_else(|| {
                divergence(format!("Ei^({}) diverges at 0 for delta >= 1", self.delta))
            })
        }
    }

    /// `e^{-x} Ei^(d)(x)` for `x > 0`, without forming `e^x`.
    pub fn ei_scaled(&self, x: f64) -> Result<f64> {
        check_arg(x)?;
        if x <= 0.0 {
            return Err(domain(format!("scaled Ei is defined for x > 0, got {x}")));
        }
        if x < self.opts.series_asymptotic_crossover {
            let e = (-x).exp();
            return Ok(self.g_series(x, e)? - e * self.h(x)?);
        }
        if let Some(v) = self.asymptotic_scaled(x) {
            return Ok(v);
        }
        // Asymptotic series not yet sharp enough: scaled power series.
        let e = (-x).exp();
        Ok(self.g_series(x, e)? - e * self.h(x)?)
    }

    /// `x^{-d} sum_{k<=K} (d)_k / x^k + C e^{-x}`, truncated at the smallest
    /// term; `None` when that term is not small enough for the tolerance.
    fn asymptotic_scaled(&self, x: f64) -> Option<f64> {
        let d = self.delta;
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut k = 0usize;
        loop {
            sum += term;
            let next = term * (d + k as f64) / x;
            if next == 0.0 || next.abs() <= 1e-17 * sum.abs() {
                break;
            }
            if next.abs() >= term.abs() {
                // Smallest term reached; it bounds the truncation error.
                if term.abs() > 1e-3 * self.opts.rel_tol * sum.abs() {
                    return None;
                }
                break;
            }
            term = next;
            k += 1;
            if k > 4 * self.opts.max_series_terms {
                return None;
            }
        }
        Some(x.powf(-d) * sum + self.stokes_constant * (-x).exp())
    }

    /// Leading behaviour of `Ei^(d)` as `x -> 0+`.
    pub fn near_zero_model(&self, x: f64) -> Result<f64> {
        check_arg(x)?;
        if x <= 0.0 {
            return Err(domain(format!("near-zero model needs x > 0, got {x}")));
        }
        let d = self.delta;
        Ok(if d < 1.0 {
            -self.h_at_zero.expect("finite for delta < 1")
        } else if d == 1.0 {
            x.ln()
        } else {
            -1.0 / ((d - 1.0) * x.powf(d - 1.0))
        })
    }

    /// Evaluates `{int_{-inf}^{-a} + int_b^x} e^t / t^d dt` by quadrature for
    /// every cut-off pair of `schedule` and measures the distance to
    /// [`Self::ei`].
    ///
    /// With `m = min(a, b)` the two half-line pieces are paired by `t -> -t`
    /// on `[m, x]`, which keeps the `O(m^{1-d})` parts from cancelling in
    /// floating point; the remaining slivers `[m, a]` and `[m, b]` are
    /// integrated separately.
    pub fn pv_limit_check(&self, x: f64, schedule: &PvSchedule, tolerance: f64) -> Result<PvReport> {
        check_arg(x)?;
        if x <= 0.0 {
            return Err(domain(format!("principal-value check needs x > 0, got {x}")));
        }
        let d = self.delta;
        if d >= 1.0 {
            let k = schedule.k_bound;
            for (&(a, b), &gap) in schedule.pairs.iter().zip(&schedule.gaps) {
                let m = a.min(b);
                if gap.abs() > k * m * m + 4.0 * f64::EPSILON * a.max(b) {
                    return Err(Error::Precondition(format!(
                        "cut-offs ({a:e}, {b:e}) violate |a - b| <= {k} min(a, b)^2"
                    )));
                }
            }
        }
        let reference = self.ei(x)?;
        let q = self.opts.quadrature();
        let neg_half = q.integrate_to_infinity(|u| (-u).exp() * u.powf(-d), x)?.value;

        let mut values = Vec::with_capacity(schedule.pairs.len());
        for (&(a, b), &gap) in schedule.pairs.iter().zip(&schedule.gaps) {
            if a.max(b) >= x {
                return Err(Error::Precondition(format!(
                    "cut-offs ({a:e}, {b:e}) must lie below x = {x}"
                )));
            }
            let m = a.min(b);
            let paired = q.integrate_graded(|t| 2.0 * t.sinh() * t.powf(-d), m, x)?.value;
            // Slivers are integrated over their width so that gaps below the
            // spacing of doubles near m still count.
            let left_sliver = if gap < 0.0 {
                q.integrate(|s| (-(m + s)).exp() * (m + s).powf(-d), 0.0, -gap)?.value
            } else {
                0.0
            };
            let right_sliver = if gap > 0.0 {
                q.integrate(|s| (m + s).exp() * (m + s).powf(-d), 0.0, gap)?.value
            } else {
                0.0
            };
            values.push(paired - neg_half + left_sliver - right_sliver);
        }
        let distances: Vec<f64> = values.iter().map(|v| (v - reference).abs()).collect();
        let monotone = distances.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
        let converged = distances.last().is_some_and(|&last| last <= tolerance);
        Ok(PvReport {
            delta: d,
            x,
            k_bound: schedule.k_bound,
            reference,
            values,
            distances,
            tolerance,
            converged,
            monotone,
        })
    }
}

fn check_arg(x: f64) -> Result<()> {
    if x.is_nan() {
        Err(domain("argument is NaN"))
    } else {
        Ok(())
    }
}

/// `G^(d)(x)` with default options.
pub fn g_delta(delta: DeltaParam, x: f64) -> Result<f64> {
    DeltaExpEvaluator::new(delta).g(x)
}

/// `H^(d)(x)` with default options.
pub fn h_delta(delta: DeltaParam, x: f64) -> Result<f64> {
    DeltaExpEvaluator::new(delta).h(x)
}

/// `Ei^(d)(x)` with default options.
pub fn ei_delta(delta: DeltaParam, x: f64) -> Result<f64> {
    DeltaExpEvaluator::new(delta).ei(x)
}

/// `e^{-x} Ei^(d)(x)` with default options.
pub fn ei_delta_scaled(delta: DeltaParam, x: f64) -> Result<f64> {
    DeltaExpEvaluator::new(delta).ei_scaled(x)
}

/// Leading near-zero model of `Ei^(d)` with default options.
pub fn near_zero_model(delta: DeltaParam, x: f64) -> Result<f64> {
    DeltaExpEvaluator::new(delta).near_zero_model(x)
}

/// Principal-value limit check with default options.
pub fn pv_limit_check(delta: DeltaParam, x: f64, schedule: &PvSchedule, tolerance: f64) -> Result<PvReport> {
    DeltaExpEvaluator::new(delta).pv_limit_check(x, schedule, tolerance)
}

/// Classical exponential integral `Ei(x) = Ei^(1)(x)`.
pub fn ei(x: f64) -> Result<f64> {
    ei_delta(DeltaParam(1.0), x)
}
