//! The eigenrelation in the sense of tempered distributions.
//!
//! For `d >= 4`, `f_d` lies in no `L^p`, so `F[f_d] = -pi^{d/2} f_d(./2)` is
//! checked through `<f_d, F[phi]> = <-pi^{d/2} f_d(./2), phi>` for radial
//! Schwartz probes `phi(x) = |x|^{2k} e^{-a |x|^2}` whose transforms are
//! known in closed form.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigenfunctions::RadialEigenfunction;
use crate::error::{domain, Error, Result};
use crate::quad::{QuadResult, Quadrature};
use crate::radial_fourier::{g_hat_alpha, h_hat_alpha};
use crate::special::unit_sphere_area;

/// Highest polynomial degree index with a tabulated transform.
pub const MAX_PROBE_ORDER: u32 = 4;

/// `phi(x) = |x|^{2k} e^{-a |x|^2}` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchwartzProbe {
    pub d: u32,
    pub a: f64,
    pub k: u32,
}

impl SchwartzProbe {
    pub fn new(d: u32, a: f64, k: u32) -> Result<Self> {
        if d == 0 {
            return Err(domain("dimension must be at least 1"));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(domain(format!("probe width must be positive, got {a}")));
        }
        Ok(SchwartzProbe { d, a, k })
    }

    pub fn value(&self, r: f64) -> f64 {
        r.powi(2 * self.k as i32) * (-self.a * r * r).exp()
    }

    /// Coefficients `c_j`, `j = 0..=k`, of
    /// `F[phi](rho) = pi^{d/2} e^{-s/a} sum_j c_j s^j a^{-(d/2 + k + j)}`,
    /// `s = rho^2 / 4`.
    ///
    /// `F[phi] = (-d/da)^k (pi/a)^{d/2} e^{-s/a}`; one derivative maps
    /// `c_j s^j a^{-m} e^{-s/a}` to `c_j (m s^j a^{-m-1} - s^{j+1} a^{-m-2}) e^{-s/a}`.
    fn transform_coefficients(&self) -> Result<Vec<f64>> {
        if self.k > MAX_PROBE_ORDER {
            return Err(Error::Unsupported(format!(
                "probe order k = {} exceeds {MAX_PROBE_ORDER}",
                self.k
            )));
        }
        let half_d = 0.5 * self.d as f64;
        let mut c = vec![1.0];
        for k in 0..self.k as usize {
            let mut next = vec![0.0; c.len() + 1];
            for (j, &cj) in c.iter().enumerate() {
                next[j] += (half_d + (k + j) as f64) * cj;
                next[j + 1] -= cj;
            }
            c = next;
        }
        Ok(c)
    }

    /// The transform written as a combination of probes: `F[phi] =
    /// sum_j w_j phi_{j, 1/(4a)}`.
    pub fn transform_as_probes(&self) -> Result<Vec<(f64, SchwartzProbe)>> {
        let half_d = 0.5 * self.d as f64;
        let a_hat = 0.25 / self.a;
        let c = self.transform_coefficients()?;
        Ok(c.iter()
            .enumerate()
            .map(|(j, &cj)| {
                let w = PI.powf(half_d) * cj * 0.25f64.powi(j as i32) * self.a.powf(-(half_d + (self.k as usize + j) as f64));
                (
                    w,
                    SchwartzProbe {
                        d: self.d,
                        a: a_hat,
                        k: j as u32,
                    },
                )
            })
            .collect())
    }
}

/// Closed-form Fourier transform of a probe.
pub fn probe_hat(probe: &SchwartzProbe, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be non-negative, got {rho}")));
    }
    let half_d = 0.5 * probe.d as f64;
    let s = 0.25 * rho * rho;
    let c = probe.transform_coefficients()?;
    let mut sum = 0.0;
    let mut s_pow = 1.0;
    for (j, cj) in c.iter().enumerate() {
        sum += cj * s_pow * probe.a.powf(-(half_d + (probe.k as usize + j) as f64));
        s_pow *= s;
    }
    Ok(PI.powf(half_d) * (-s / probe.a).exp() * sum)
}

/// `<f, g> = omega_{d-1} int_0^inf f(r) g(r) r^{d-1} dr` for radial `f`, `g`
/// with `f g r^{d-1}` integrable at 0 and `g` decaying fast at infinity.
pub fn pair_radial<F, G>(d: u32, profile: F, probe: G) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if d == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let dm1 = d as i32 - 1;
    let integrand = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        let g = probe(r);
        if g == 0.0 {
            return 0.0;
        }
        profile(r) * g * r.powi(dm1)
    };
    let q = Quadrature::with_tolerance(1e-12);
    let mut out = q.integrate_graded(integrand, 0.0, 1.0)?;
    out.accumulate(q.integrate_to_infinity(integrand, 1.0)?);
    Ok(out.scaled(unit_sphere_area(d)))
}

/// Both sides of `<f_d, F[phi]> = <-pi^{d/2} f_d(./2), phi>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingResult {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub quadrature_error_estimate: f64,
}

impl PairingResult {
    /// `residual <= rel_tol (|lhs| + |rhs|) + 3 * quadrature error`.
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.residual <= rel_tol * (self.lhs.abs() + self.rhs.abs()) + 3.0 * self.quadrature_error_estimate
    }
}

pub fn eigen_pairing_residual(probe: &SchwartzProbe) -> Result<PairingResult> {
    let f = RadialEigenfunction::new(probe.d)?;
    // Fail early on unsupported orders rather than inside the quadrature.
    probe.transform_coefficients()?;
    let lhs = pair_radial(probe.d, |r| f.f(r).unwrap_or(f64::NAN), |r| {
        probe_hat(probe, r).unwrap_or(f64::NAN)
    })?;
    let scale = -PI.powf(0.5 * probe.d as f64);
    let rhs = pair_radial(probe.d, |r| f.f(0.5 * r).unwrap_or(f64::NAN), |r| probe.value(r))?.scaled(scale);
    Ok(PairingResult {
        lhs: lhs.value,
        rhs: rhs.value,
        residual: (lhs.value - rhs.value).abs(),
        quadrature_error_estimate: lhs.abs_err + rhs.abs_err.abs(),
    })
}

/// `|<f_d, c phi>| <= C_d sup_r (1 + r^{2d}) |c phi(r)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub pairing: f64,
    pub tempered_constant: f64,
    pub weighted_sup: f64,
    pub holds: bool,
}

pub fn continuity_bound_check(probe: &SchwartzProbe) -> Result<ContinuityCheck> {
    continuity_bound_check_scaled(probe, 1.0)
}

pub fn continuity_bound_check_scaled(probe: &SchwartzProbe, scale: f64) -> Result<ContinuityCheck> {
    let f = RadialEigenfunction::new(probe.d)?;
    let pairing = scale * pair_radial(probe.d, |r| f.f(r).unwrap_or(f64::NAN), |r| probe.value(r))?.value;
    let c_d = f.tempered_constant()?;
    let d2 = 2 * probe.d as i32;
    let weighted_sup = scale.abs() * max_on_half_line(|r| (1.0 + r.powi(d2)) * probe.value(r), probe);
    let bound = c_d * weighted_sup;
    Ok(ContinuityCheck {
        pairing,
        tempered_constant: c_d,
        weighted_sup,
        holds: pairing.abs() <= bound,
    })
}

/// Maximum of a non-negative function of the form
/// `poly(r) e^{-a r^2}`: grid scan, then golden-section refinement.
fn max_on_half_line<F: Fn(f64) -> f64>(g: F, probe: &SchwartzProbe) -> f64 {
    let top_degree = (2 * probe.k + 2 * probe.d) as f64;
    let r_max = 3.0 * ((top_degree + 1.0) / (2.0 * probe.a)).sqrt() + 1.0;
    let n = 4000;
    let h = r_max / n as f64;
    let (mut best_i, mut best) = (0, g(0.0));
    for i in 1..=n {
        let v = g(i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = ((best_i as f64 - 1.0).max(0.0) * h, (best_i as f64 + 1.0) * h);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - inv_phi * (hi - lo);
        let m2 = lo + inv_phi * (hi - lo);
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(g(0.5 * (lo + hi)))
}

/// Outcome of [`uniform_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub d: u32,
    pub alpha_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub fitted_a: f64,
    pub fitted_b: f64,
    pub max_violation_ratio: f64,
}

impl BoundCheck {
    pub fn passes(&self) -> bool {
        self.max_violation_ratio <= 1.0
    }
}

/// Checks `|F[f_d^a](rho)| <= A / rho^2 + B rho^4` uniformly in `a`.
///
/// Radii with even index calibrate `A, B` (the pair minimizing
/// `A sum rho^-2 + B sum rho^4` subject to the bound at every calibration
/// point); radii with odd index are then checked against `2A, 2B`. A
/// single-radius grid is used for both.
pub fn uniform_bound_check(d: u32, alpha_grid: &[f64], rho_grid: &[f64]) -> Result<BoundCheck> {
    if alpha_grid.is_empty() || rho_grid.is_empty() {
        return Err(domain("alpha and rho grids must be non-empty"));
    }
    if let Some(a) = alpha_grid.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(domain(format!("alpha must lie in (0, 1], got {a}")));
    }
    if let Some(r) = rho_grid.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
        return Err(domain(format!("rho must be positive, got {r}")));
    }
    // Worst case over alpha at each radius.
    let worst: Vec<f64> = rho_grid
        .par_iter()
        .map(|&rho| {
            alpha_grid.iter().try_fold(0.0f64, |m, &alpha| {
                let v = (g_hat_alpha(d, alpha, rho)? - h_hat_alpha(d, alpha, rho)?).abs();
                Ok::<f64, Error>(m.max(v))
            })
        })
        .collect::<Result<_>>()?;

    let points: Vec<(f64, f64)> = rho_grid.iter().copied().zip(worst).collect();
    let (calibration, holdout): (Vec<_>, Vec<_>) = if points.len() == 1 {
        (points.clone(), points)
    } else {
        let (c, h): (Vec<_>, Vec<_>) = points.iter().enumerate().partition(|(i, _)| i % 2 == 0);
        (c.into_iter().map(|(_, p)| *p).collect(), h.into_iter().map(|(_, p)| *p).collect())
    };
    let (fitted_a, fitted_b) = fit_bound(&calibration);
    let max_violation_ratio = holdout
        .iter()
        .map(|&(rho, v)| {
            let bound = 2.0 * fitted_a / (rho * rho) + 2.0 * fitted_b * rho.powi(4);
            if bound > 0.0 {
                v / bound
            } else if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Ok(BoundCheck {
        d,
        alpha_grid: alpha_grid.to_vec(),
        rho_grid: rho_grid.to_vec(),
        fitted_a,
        fitted_b,
        max_violation_ratio,
    })
}

/// Smallest `(A, B) >= 0` (in `A sum rho^-2 + B sum rho^4`) with
/// `A / rho^2 + B rho^4 >= v` at every point. The optimum of this
/// two-variable linear program sits on a vertex: an axis intercept or the
/// intersection of two active constraints.
fn fit_bound(points: &[(f64, f64)]) -> (f64, f64) {
    let cost_a: f64 = points.iter().map(|(r, _)| r.powi(-2)).sum();
    let cost_b: f64 = points.iter().map(|(r, _)| r.powi(4)).sum();
    let feasible = |a: f64, b: f64| {
        a >= 0.0
            && b >= 0.0
            && points
                .iter()
                .all(|&(r, v)| a / (r * r) + b * r.powi(4) >= v * (1.0 - 1e-12))
    };
    let mut candidates = vec![
        (points.iter().map(|&(r, v)| v * r * r).fold(0.0, f64::max), 0.0),
        (0.0, points.iter().map(|&(r, v)| v / r.powi(4)).fold(0.0, f64::max)),
    ];
    for (i, &(ri, vi)) in points.iter().enumerate() {
        for &(rj, vj) in &points[i + 1..] {
            // [1/ri^2, ri^4; 1/rj^2, rj^4] [A; B] = [vi; vj]
            let (p, q, s, t) = (ri.powi(-2), ri.powi(4), rj.powi(-2), rj.powi(4));
            let det = p * t - q * s;
            if det.abs() < 1e-300 {
                continue;
            }
            candidates.push(((vi * t - q * vj) / det, (p * vj - vi * s) / det));
        }
    }
    candidates
        .into_iter()
        .filter(|&(a, b)| feasible(a, b))
        .min_by(|x, y| (x.0 * cost_a + x.1 * cost_b).total_cmp(&(y.0 * cost_a + y.1 * cost_b)))
        .unwrap_or((f64::INFINITY, f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_fourier::{radial_fourier, FnProfile, RadialTransformPlan, TailHint};

    fn probe(d: u32, a: f64, k: u32) -> SchwartzProbe {
        SchwartzProbe::new(d, a, k).unwrap()
    }

    #[test]
    fn probe_hat_closed_forms() {
        let p = probe(3, 1.7, 0);
        for rho in [0.0f64, 0.5, 2.0] {
            let want = (PI / 1.7f64).powf(1.5) * (-rho * rho / (4.0 * 1.7)).exp();
            assert!((probe_hat(&p, rho).unwrap() - want).abs() < 1e-15 * want.max(1.0));
        }
        assert!((probe_hat(&probe(2, 1.0, 1), 0.0).unwrap() - PI).abs() < 1e-14);
        assert!(matches!(probe_hat(&probe(2, 1.0, 5), 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn probe_hat_is_minus_a_derivative() {
        // F[r^{2k+2} e^{-ar^2}] = -d/da F[r^{2k} e^{-ar^2}], checked by central differences.
        for d in [1, 4, 7] {
            for k in 0..4 {
                for rho in [0.3, 1.5] {
                    let a = 1.3;
                    let h = 1e-4;
                    let up = probe_hat(&probe(d, a + h, k), rho).unwrap();
                    let down = probe_hat(&probe(d, a - h, k), rho).unwrap();
                    let fd = -(up - down) / (2.0 * h);
                    let exact = probe_hat(&probe(d, a, k + 1), rho).unwrap();
                    assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1e-3), "d={d} k={k}");
                }
            }
        }
    }

    #[test]
    fn probe_hat_matches_numerical_transform() {
        for d in 1..=8 {
            let plan = RadialTransformPlan::new(d).unwrap();
            for (a, k) in [(1.0, 0), (2.0, 1), (0.7, 3), (1.5, 4)] {
                let p = probe(d, a, k);
                let prof = FnProfile {
                    f: |r: f64| p.value(r),
                    origin_exponent: 0.0,
                    tail: TailHint::Gaussian { rate: a },
                };
                let scale = probe_hat(&p, 0.0).unwrap().abs();
                for rho in [0.0, 0.8, 2.5] {
                    let num = radial_fourier(&plan, &prof, rho).unwrap();
                    let exact = probe_hat(&p, rho).unwrap();
                    assert!((num - exact).abs() < 1e-9 * exact.abs() + 1e-12 * scale, "d={d} a={a} k={k} rho={rho}: {num} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn double_transform_returns_probe() {
        for d in [1, 3, 4, 6] {
            for (a, k) in [(1.0, 0), (0.5, 2), (2.0, 4)] {
                let p = probe(d, a, k);
                let terms = p.transform_as_probes().unwrap();
                for r in [0.0, 0.4, 1.1, 2.7] {
                    let direct: f64 = terms.iter().map(|(w, q)| w * q.value(r)).sum();
                    assert!((direct - probe_hat(&p, r).unwrap()).abs() < 1e-12 * direct.abs().max(1e-300) + 1e-15);
                    let twice: f64 = terms.iter().map(|(w, q)| w * probe_hat(q, r).unwrap()).sum();
                    let back = twice / (2.0 * PI).powi(d as i32);
                    assert!((back - p.value(r)).abs() < 1e-9 * p.value(r).abs() + 1e-11, "d={d} a={a} k={k} r={r}");
                }
            }
        }
    }

    #[test]
    fn pairing_anchors() {
        for d in 1..=6 {
            let v = pair_radial(d, |_| 1.0, |r| (-r * r).exp()).unwrap().value;
            assert!((v - PI.powf(0.5 * d as f64)).abs() < 1e-12 * v);
        }
        // d = 4, f_4 = r^-2 (1 - 2 e^{-r^2}): 2 pi^2 int (1 - 2 e^{-r^2}) r e^{-r^2} dr = 0
        let f4 = RadialEigenfunction::new(4).unwrap();
        let v = pair_radial(4, |r| f4.f(r).unwrap(), |r| (-r * r).exp()).unwrap().value;
        assert!(v.abs() < 1e-12, "{v}");
        let v = pair_radial(4, |r| r.powi(-2), |r| (-r * r).exp()).unwrap().value;
        assert!((v - PI * PI).abs() < 1e-12);
        let f5 = RadialEigenfunction::new(5).unwrap();
        let p = probe(5, 2.0, 1);
        let v = pair_radial(5, |r| f5.f(r).unwrap(), |r| p.value(r)).unwrap().value;
        assert!(v.is_finite());
    }

    #[test]
    fn dimension_four_pairing_closed_form() {
        for a in [1.0, 2.0] {
            for k in 0..3u32 {
                let res = eigen_pairing_residual(&probe(4, a, k)).unwrap();
                let kf: f64 = (1..=k).map(f64::from).product();
                let want = 4.0 * PI.powi(4) * kf * (-a.powi(-(k as i32 + 1)) + 8.0 * 4f64.powi(k as i32) * (4.0 * a + 1.0).powi(-(k as i32 + 1)));
                assert!((res.lhs - want).abs() < 1e-10 * want.abs(), "a={a} k={k}: {} vs {want}", res.lhs);
                assert!((res.rhs - want).abs() < 1e-10 * want.abs(), "a={a} k={k}: {} vs {want}", res.rhs);
            }
        }
    }

    #[test]
    fn pairing_in_dimension_six() {
        for a in [1.0, 2.0] {
            for k in 0..3 {
                let res = eigen_pairing_residual(&probe(6, a, k)).unwrap();
                assert!(res.residual < 1e-7 * (res.lhs.abs() + res.rhs.abs()), "{res:?}");
            }
        }
    }

    #[test]
    fn parseval_in_regular_dimensions() {
        // <f_d, F[phi]> through the closed-form probe transform and through
        // the numerical transform of f_d paired with phi.
        for d in 1..=3 {
            let f = RadialEigenfunction::new(d).unwrap();
            let p = probe(d, 1.0, 1);
            let plan = RadialTransformPlan::new(d).unwrap();
            let direct = pair_radial(d, |r| f.f(r).unwrap(), |r| probe_hat(&p, r).unwrap()).unwrap().value;
            let q = Quadrature::with_tolerance(1e-8);
            let integrand = |rho: f64| {
                if rho == 0.0 {
                    return 0.0;
                }
                radial_fourier(&plan, &f, rho).unwrap() * p.value(rho) * rho.powi(d as i32 - 1)
            };
            let mut v = q.integrate_graded(integrand, 0.0, 1.0).unwrap();
            v.accumulate(q.integrate(integrand, 1.0, 9.0).unwrap());
            let via_transform = unit_sphere_area(d) * v.value;
            assert!((direct - via_transform).abs() < 1e-6 * direct.abs(), "d={d}: {direct} vs {via_transform}");
        }
    }

    #[test]
    fn continuity_bounds() {
        for (d, a, k) in [(4, 1.0, 0), (7, 0.5, 2), (2, 1.0, 1)] {
            let p = probe(d, a, k);
            let c = continuity_bound_check(&p).unwrap();
            assert!(c.holds, "{c:?}");
            let s = continuity_bound_check_scaled(&p, 3.5).unwrap();
            assert_eq!(s.holds, c.holds);
            assert!((s.pairing - 3.5 * c.pairing).abs() < 1e-12 * s.pairing.abs().max(1e-300));
            assert!((s.weighted_sup - 3.5 * c.weighted_sup).abs() < 1e-12 * s.weighted_sup);
        }
    }

    #[test]
    fn regularized_pairings_converge() {
        // <f_d^a, phi> -> <f_d, phi> with gap <= C_d^a sup (1 + r^{2d}) phi
        let d = 5;
        let f = RadialEigenfunction::new(d).unwrap();
        let p = probe(d, 1.0, 0);
        let full = pair_radial(d, |r| f.f(r).unwrap(), |r| p.value(r)).unwrap().value;
        let sup = continuity_bound_check(&p).unwrap().weighted_sup;
        let mut last = f64::INFINITY;
        for alpha in [1.0, 0.1, 0.01, 0.001] {
            let reg = pair_radial(d, |r| f.f(r).unwrap() * (-alpha * r * r).exp(), |r| p.value(r)).unwrap().value;
            let gap = (reg - full).abs();
            assert!(gap < last);
            assert!(gap <= f.tempered_constant_alpha(alpha).unwrap() * sup * (1.0 + 1e-9));
            last = gap;
        }
    }

    #[test]
    fn bound_fit_is_minimal_and_feasible() {
        let pts = [(0.5, 3.0), (1.0, 1.0), (4.0, 20.0)];
        let (a, b) = fit_bound(&pts);
        for &(r, v) in &pts {
            assert!(a / (r * r) + b * r.powi(4) >= v * (1.0 - 1e-12));
        }
        // Single point: the fit reproduces it exactly.
        let (a, b) = fit_bound(&[(2.0, 5.0)]);
        assert!((a / 4.0 + b * 16.0 - 5.0).abs() < 1e-12);
        let single = uniform_bound_check(4, &[0.5], &[1.3]).unwrap();
        assert!(single.max_violation_ratio <= 0.5 + 1e-12);
    }

    #[test]
    fn uniform_bound_dimension_four() {
        let alphas = [1.0, 0.3, 0.1, 0.03, 0.01];
        let rhos: Vec<f64> = (0..20).map(|i| 0.1 * 200f64.powf(i as f64 / 19.0)).collect();
        let check = uniform_bound_check(4, &alphas, &rhos).unwrap();
        assert!(check.passes(), "{check:?}");
        assert!(uniform_bound_check(4, &[0.0], &rhos).is_err());
        assert!(uniform_bound_check(4, &alphas, &[0.0]).is_err());
    }
}
