//! Thermal-lens fields: the exit field `E_th(r, t)` of a heated liquid and
//! the spectrum `E_s(rho, t)` in the sensor plane, both with physical
//! constants dropped, and the planar near-eigenrelation they suggest.
//!
//! `Ei` is the classical exponential integral, `Ei(-u) = -E_1(u)` for `u > 0`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::eigenfunctions::RadialEigenfunction;
use crate::error::{domain, Error, Result};
use crate::expint::{DeltaExpEvaluator, DeltaParam};
use crate::radial_fourier::{radial_fourier, radial_fourier_grid, FnProfile, RadialTransformPlan, TailHint};

/// Exponents beyond this underflow to zero.
const UNDERFLOW_EXPONENT: f64 = 740.0;

/// Dimensionless heating time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LensState {
    pub t: f64,
}

impl LensState {
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(domain(format!("time must be finite and non-negative, got {t}")));
        }
        Ok(LensState { t })
    }
}

fn classical() -> DeltaExpEvaluator {
    DeltaExpEvaluator::new(DeltaParam::new(1.0).expect("delta = 1 is valid"))
}

/// `E_th(r, t) = e^{-r^2/2} [Ei(-r^2) - Ei(-r^2 / (4t + 1))]`.
///
/// `Ei` decreases on the negative axis, so the bracket is positive for
/// `t > 0`.
pub fn e_th(state: &LensState, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!("r must be positive and finite, got {r}")));
    }
    if state.t == 0.0 {
        return Ok(0.0);
    }
    let c = 4.0 * state.t + 1.0;
    let r2 = r * r;
    if r2 * (0.5 + 1.0 / c) > UNDERFLOW_EXPONENT {
        return Ok(0.0);
    }
    let ei = classical();
    Ok((-0.5 * r2).exp() * (ei.ei(-r2)? - ei.ei(-r2 / c)?))
}

/// `E_s(rho, t) = 2 e^{-2 rho^2} [Ei(4 rho^2 / 3) - Ei(4 rho^2 / (4t + 3))]`.
pub fn e_s(state: &LensState, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be positive and finite, got {rho}")));
    }
    if state.t == 0.0 {
        return Ok(0.0);
    }
    let ei = classical();
    let rho2 = rho * rho;
    // e^{-2 rho^2} Ei(x) = e^{x - 2 rho^2} (e^{-x} Ei(x)), with x < 2 rho^2.
    let damped = |x: f64| -> Result<f64> {
        let exponent = x - 2.0 * rho2;
        if exponent < -UNDERFLOW_EXPONENT {
            return Ok(0.0);
        }
        Ok(exponent.exp() * ei.ei_scaled(x)?)
    };
    Ok(2.0 * (damped(4.0 * rho2 / 3.0)? - damped(4.0 * rho2 / (4.0 * state.t + 3.0))?))
}

/// `|F[e^{-r^2} Ei(r^2)](rho) + pi e^{-rho^2/4} Ei(rho^2/4)|` in the plane.
pub fn planar_eigenrelation_residual(rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(domain(format!("rho must be positive and finite, got {rho}")));
    }
    let f2 = RadialEigenfunction::new(2)?;
    let plan = RadialTransformPlan::new(2)?;
    let transform = radial_fourier(&plan, &f2, rho)?;
    Ok((transform + planar_target_magnitude(rho)?).abs())
}

/// `pi e^{-rho^2/4} Ei(rho^2/4)`, the magnitude the planar residual is
/// measured against.
pub fn planar_target_magnitude(rho: f64) -> Result<f64> {
    let f2 = RadialEigenfunction::new(2)?;
    Ok(PI * f2.f(0.5 * rho)?)
}

/// Least-squares fit `F[E_th](rho) ~ amplitude * E_s(scale * rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    pub amplitude: f64,
    pub scale: f64,
    /// Relative RMS residual `||T - c E||_2 / ||T||_2` over the grid.
    pub residual: f64,
}

const SCALE_SEARCH: (f64, f64) = (0.05, 5.0);

/// Transforms `E_th` numerically in the plane and fits amplitude and
/// radial scale of `E_s` to it.
pub fn fourier_consistency(state: &LensState, rho_grid: &[f64]) -> Result<FitReport> {
    if state.t == 0.0 {
        return Err(Error::Precondition("both fields vanish at t = 0; nothing to fit".into()));
    }
    if rho_grid.is_empty() {
        return Err(domain("rho grid must be non-empty"));
    }
    if let Some(r) = rho_grid.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
        return Err(domain(format!("rho must be positive, got {r}")));
    }
    let c = 4.0 * state.t + 1.0;
    let profile = FnProfile {
        f: |r: f64| if r == 0.0 { 0.0 } else { e_th(state, r).unwrap_or(f64::NAN) },
        origin_exponent: 0.0,
        tail: TailHint::Gaussian { rate: 0.5 + 1.0 / c },
    };
    let plan = RadialTransformPlan::new(2)?;
    let transform: Vec<f64> = radial_fourier_grid(&plan, &profile, rho_grid)?
        .into_iter()
        .map(|v| v.value)
        .collect();
    let norm2: f64 = transform.iter().map(|v| v * v).sum();
    if !(norm2 > 0.0) {
        return Err(Error::Precondition("transformed field vanishes on the grid".into()));
    }

    // For a fixed scale the optimal amplitude is linear least squares.
    let fit_at = |sigma: f64| -> Result<(f64, f64)> {
        let model: Vec<f64> = rho_grid.iter().map(|&r| e_s(state, sigma * r)).collect::<Result<_>>()?;
        let mm: f64 = model.iter().map(|m| m * m).sum();
        if !(mm > 0.0) {
            return Ok((0.0, 1.0));
        }
        let tm: f64 = transform.iter().zip(&model).map(|(t, m)| t * m).sum();
        let amp = tm / mm;
        let ss: f64 = transform.iter().zip(&model).map(|(t, m)| (t - amp * m).powi(2)).sum();
        Ok((amp, (ss / norm2).sqrt()))
    };

    // Coarse log scan, then golden section around the best cell.
    let n = 200;
    let (lo, hi) = (SCALE_SEARCH.0.ln(), SCALE_SEARCH.1.ln());
    let at = |i: usize| (lo + (hi - lo) * i as f64 / n as f64).exp();
    let mut best = (0, f64::INFINITY);
    for i in 0..=n {
        let (_, res) = fit_at(at(i))?;
        if res < best.1 {
            best = (i, res);
        }
    }
    let (mut a, mut b) = (at(best.0.saturating_sub(1)), at((best.0 + 1).min(n)));
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut m1 = b - inv_phi * (b - a);
    let mut m2 = a + inv_phi * (b - a);
    let mut f1 = fit_at(m1)?.1;
    let mut f2 = fit_at(m2)?.1;
    for _ in 0..80 {
        if f1 < f2 {
            b = m2;
            m2 = m1;
            f2 = f1;
            m1 = b - inv_phi * (b - a);
            f1 = fit_at(m1)?.1;
        } else {
            a = m1;
            m1 = m2;
            f1 = f2;
            m2 = a + inv_phi * (b - a);
            f2 = fit_at(m2)?.1;
        }
        if b - a < 1e-14 * b {
            break;
        }
    }
    let scale = 0.5 * (a + b);
    let (amplitude, residual) = fit_at(scale)?;
    Ok(FitReport {
        amplitude,
        scale,
        residual,
    })
}
