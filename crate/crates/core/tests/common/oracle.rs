//! Reference values computed independently of the library's quadrature and
//! series code: double-exponential rules and textbook series.

use std::f64::consts::FRAC_PI_2;

const STEP: f64 = 1.0 / 128.0;
const T_MAX: f64 = 6.0;

fn steps() -> impl Iterator<Item = f64> {
    let n = (T_MAX / STEP) as i64;
    (-n..=n).map(|k| k as f64 * STEP)
}

/// Tanh-sinh rule on `[a, b]`; tolerates integrable endpoint singularities.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in steps() {
        let u = FRAC_PI_2 * t.sinh();
        // distance to the nearer endpoint, computed without cancellation
        let near = half * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let x = if t < 0.0 { a + near } else { b - near };
        if near == 0.0 || x <= a || x >= b {
            continue;
        }
        let w = half * FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let term = w * f(x);
        if !term.is_finite() {
            continue;
        }
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    sum * STEP
}

/// Exp-sinh rule on `[a, inf)`.
pub fn tanh_sinh_to_inf<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    let mut sum = 0.0;
    for t in steps() {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        if e == 0.0 || !e.is_finite() {
            continue;
        }
        let x = a + e;
        let term = FRAC_PI_2 * t.cosh() * e * f(x);
        if term.is_finite() {
            sum += term;
        }
    }
    sum * STEP
}

/// Classical principal-value `Ei(x)` for `x > 0`, `gamma + ln x + sum x^n / (n n!)`.
pub fn pv_ei1(x: f64) -> f64 {
    assert!(x > 0.0 && x < 40.0);
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..400 {
        term *= x / n as f64;
        let add = term / n as f64;
        sum += add;
        if add < 1e-18 * sum {
            break;
        }
    }
    0.577_215_664_901_532_860_61 + x.ln() + sum
}
