//! Small special-function helpers shared by the evaluators: gamma-related
//! quantities near the pole at zero, sphere areas, and the normalized Bessel
//! kernel of the radial Fourier transform.

use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Riemann zeta values zeta(2), zeta(3), ..., zeta(31).
const ZETA_FROM_2: [f64; 30] = [
    1.644_934_066_848_226_436_5,
    1.202_056_903_159_594_285_4,
    1.082_323_233_711_138_191_5,
    1.036_927_755_143_369_926_3,
    1.017_343_061_984_449_139_7,
    1.008_349_277_381_922_826_8,
    1.004_077_356_197_944_339_4,
    1.002_008_392_826_082_214_4,
    1.000_994_575_127_818_085_3,
    1.000_494_188_604_119_464_6,
    1.000_246_086_553_308_048_3,
    1.000_122_713_347_578_489_1,
    1.000_061_248_135_058_704_8,
    1.000_030_588_236_307_020_5,
    1.000_015_282_259_408_651_9,
    1.000_007_637_197_637_899_8,
    1.000_003_817_293_264_999_8,
    1.000_001_908_212_716_553_9,
    1.000_000_953_962_033_872_8,
    1.000_000_476_932_986_787_8,
    1.000_000_238_450_502_727_7,
    1.000_000_119_219_925_965_3,
    1.000_000_059_608_189_051_3,
    1.000_000_029_803_503_514_7,
    1.000_000_014_901_554_828_4,
    1.000_000_007_450_711_789_8,
    1.000_000_003_725_334_024_8,
    1.000_000_001_862_659_723_5,
    1.000_000_000_931_327_432_4,
    1.000_000_000_465_662_906_5,
];

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `expm1(z) / z`, continuous at `z = 0`.
pub fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// `(Gamma(1 + a) - 1) / a`, without cancellation as `a -> 0` (where it
/// tends to `-EULER_GAMMA`).
///
/// Near zero uses `ln Gamma(1 + a) = -gamma a + sum_{k>=2} (-1)^k zeta(k) a^k / k`.
pub fn gamma1p_minus_one_over(a: f64) -> f64 {
    if a.abs() > 0.25 {
        return (gamma(1.0 + a) - 1.0) / a;
    }
    // ln Gamma(1 + a) / a
    let mut lg_over_a = -EULER_GAMMA;
    let mut pow = a; // a^(k-1)
    for (i, z) in ZETA_FROM_2.iter().enumerate() {
        let k = (i + 2) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * z * pow / k;
        lg_over_a += term;
        if term.abs() < 1e-18 * lg_over_a.abs() {
            break;
        }
        pow *= a;
    }
    lg_over_a * exprel(lg_over_a * a)
}

/// Surface area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn unit_sphere_area(d: u32) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * PI.powf(h) / gamma(h)
}

/// Largest dimension whose Bessel kernel is supported (order `d/2 - 1 <= 4`).
pub const MAX_KERNEL_DIMENSION: u32 = 10;

/// Normalized Bessel kernel of the `d`-dimensional radial Fourier transform,
/// `Gamma(nu + 1) (2/z)^nu J_nu(z)` with `nu = d/2 - 1`.
///
/// It equals 1 at `z = 0`, `cos z` for `d = 1` and `sin z / z` for `d = 3`,
/// so that the transform of a radial profile is
/// `omega_{d-1} int_0^inf f(r) kernel(rho r) r^{d-1} dr`.
pub fn radial_kernel(d: u32, z: f64) -> f64 {
    debug_assert!((1..=MAX_KERNEL_DIMENSION).contains(&d));
    let z = z.abs();
    let nu = 0.5 * d as f64 - 1.0;
    let series_below = if nu <= 1.0 { 2.0 } else { 2.0 * nu + 1.0 };
    if z < series_below {
        return kernel_series(nu, z);
    }
    if d % 2 == 1 {
        // Half-integer order nu = n + 1/2: (2n+1)!! j_n(z) / z^n.
        if d == 1 {
            return z.cos();
        }
        let n = (d - 3) / 2;
        let (s, c) = z.sin_cos();
        let mut jm1 = c / z; // j_{-1}
        let mut j = s / z; // j_0
        for k in 0..n {
            let next = (2 * k + 1) as f64 / z * j - jm1;
            jm1 = j;
            j = next;
        }
        let double_fact: f64 = (0..=n).map(|k| (2 * k + 1) as f64).product();
        double_fact * j / z.powi(n as i32)
    } else {
        let n = (d / 2 - 1) as i32;
        let jn = match n {
            0 => libm::j0(z),
            1 => libm::j1(z),
            _ => libm::jn(n, z),
        };
        let fact: f64 = (1..=n).map(f64::from).product();
        fact * (2.0 / z).powi(n) * jn
    }
}

fn kernel_series(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..60 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (nu + kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Bessel function `J_nu` for `nu = twice_nu / 2` with `-1 <= twice_nu <= 8`,
/// through [`radial_kernel`].
pub fn bessel_j(twice_nu: i32, z: f64) -> f64 {
    assert!((-1..=8).contains(&twice_nu), "order out of supported range");
    let d = (twice_nu + 2) as u32;
    let nu = 0.5 * twice_nu as f64;
    if z == 0.0 {
        return if twice_nu == 0 { 1.0 } else { 0.0 };
    }
    radial_kernel(d, z) * (0.5 * z).powf(nu) / gamma(nu + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma1p_small_argument() {
        assert!((gamma1p_minus_one_over(0.0) + EULER_GAMMA).abs() < 1e-16);
        let slope = 0.5 * EULER_GAMMA * EULER_GAMMA + PI * PI / 12.0;
        let a = 1e-6;
        assert!((gamma1p_minus_one_over(a) - (-EULER_GAMMA + slope * a)).abs() < 1e-12);
        for &a in &[-0.5, -0.3, -0.1, 0.2, 0.5] {
            let direct = (gamma(1.0 + a) - 1.0) / a;
            assert!((gamma1p_minus_one_over(a) - direct).abs() < 1e-13, "a={a}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn half_integer_orders_match_trig_forms() {
        for i in 1..400 {
            let z = 0.05 * i as f64;
            let s = (2.0 / (PI * z)).sqrt();
            assert!((bessel_j(1, z) - s * z.sin()).abs() < 1e-13, "z={z}");
            assert!((bessel_j(-1, z) - s * z.cos()).abs() < 1e-13, "z={z}");
            let j32 = s * (z.sin() / z - z.cos());
            assert!((bessel_j(3, z) - j32).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn kernel_continuous_at_series_switch() {
        for d in 1..=MAX_KERNEL_DIMENSION {
            let nu = 0.5 * d as f64 - 1.0;
            let zs = if nu <= 1.0 { 2.0 } else { 2.0 * nu + 1.0 };
            let below = kernel_series(nu, zs);
            let above = radial_kernel(d, zs);
            assert!((below - above).abs() < 1e-13, "d={d}: {below} vs {above}");
        }
    }

    #[test]
    fn kernel_at_origin_is_one() {
        for d in 1..=MAX_KERNEL_DIMENSION {
            assert_eq!(radial_kernel(d, 0.0), 1.0);
        }
    }
}
