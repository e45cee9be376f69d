//! Standard-normal density, distribution function and quantile, in linear
//! and log domain, plus the Stirling remainder `S_n` of `ln n!`.
//!
//! Accuracy targets:
//!
//! * `std_normal_cdf`: relative error below `1e-14` on `|x| <= 8`.
//! * `log_std_normal_cdf`: relative error below `1e-12` of the log value for
//!   every finite `x`; the lower tail beyond `x = -10` never underflows.
//! * `std_normal_quantile`: `|Φ(result) - q| <= 1e-13`.
//! * `stirling_remainder`: relative error below `1e-13` for every `n >= 1`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI};

use crate::error::{check_finite, domain, Error, Result};

/// `1 / sqrt(2π)`.
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `ln(2π) / 2`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Low-order part of `1/sqrt(2)`, so that `FRAC_1_SQRT_2 + FRAC_1_SQRT_2_LO`
/// carries about 106 bits.
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;

/// Below this argument the log-CDF switches to the Mills-ratio expansion.
const MILLS_THRESHOLD: f64 = -10.0;

/// Standard normal density `e^{-x²/2} / sqrt(2π)`.
pub fn std_normal_pdf(x: f64) -> Result<f64> {
    check_finite(x, "x")?;
    Ok(normal_pdf(x))
}

/// Standard normal distribution function `Φ(x)`.
///
/// Underflows to zero below roughly `x = -38.5`; use
/// [`log_std_normal_cdf`] there.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    check_finite(x, "x")?;
    Ok(normal_cdf(x))
}

/// Natural logarithm of `Φ(x)`.
pub fn log_std_normal_cdf(x: f64) -> Result<f64> {
    check_finite(x, "x")?;
    Ok(log_normal_cdf(x))
}

/// Inverse of `Φ` on the open unit interval.
pub fn std_normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("quantile level must lie in (0, 1), got {q}"));
    }
    Ok(normal_quantile(q))
}

pub(crate) fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    if x.abs() < 0.5 {
        0.5 + 0.5 * libm::erf(x * FRAC_1_SQRT_2)
    } else if x < 0.0 {
        lower_tail(x)
    } else {
        1.0 - lower_tail(-x)
    }
}

/// `Φ(x)` for `x <= -0.5`, as `erfc(-x/sqrt 2) / 2`.
///
/// The argument `-x/sqrt 2` is formed in double-double and the low part is
/// folded back in with a first-order correction, so the result is not
/// limited by the rounding of the scaled argument (which would otherwise
/// cost a relative `2t²·ε`).
fn lower_tail(x: f64) -> f64 {
    debug_assert!(x <= -0.5);
    let y = -x;
    let t_hi = y * FRAC_1_SQRT_2;
    let t_lo = y.mul_add(FRAC_1_SQRT_2, -t_hi) + y * FRAC_1_SQRT_2_LO;
    let erfc = libm::erfc(t_hi);
    let slope = FRAC_2_SQRT_PI * (-t_hi * t_hi).exp();
    0.5 * (erfc - t_lo * slope)
}

pub(crate) fn log_normal_cdf(x: f64) -> f64 {
    if x <= MILLS_THRESHOLD {
        let t = -x;
        -0.5 * x * x - HALF_LN_2PI - t.ln() + mills_ratio_scaled(t).ln()
    } else if x < 0.5 {
        normal_cdf(x).ln()
    } else {
        (-lower_tail(-x)).ln_1p()
    }
}

/// `t · R(t)` where `R(t) = Φ(-t)/φ(t)` is the Mills ratio.
///
/// Uses the asymptotic series `1 - 1/t² + 3/t⁴ - 15/t⁶ + ...` while its terms
/// keep shrinking, and the Laplace continued fraction when the series stalls
/// before reaching full precision.
fn mills_ratio_scaled(t: f64) -> f64 {
    debug_assert!(t >= 1.0);
    let inv_t2 = 1.0 / (t * t);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for j in 1..200 {
        let next = -term * (2 * j - 1) as f64 * inv_t2;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
    }
    t * mills_ratio_cf(t)
}

/// Mills ratio `R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...))))`, modified Lentz.
fn mills_ratio_cf(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = t;
    let mut c = t;
    let mut d = 0.0;
    for j in 1..5000 {
        let a = j as f64;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

pub(crate) fn normal_quantile(q: f64) -> f64 {
    if q > 0.5 {
        // 1 - q is exact for q >= 1/2.
        -lower_quantile(1.0 - q)
    } else {
        lower_quantile(q)
    }
}

/// Quantile for `q <= 1/2`: Acklam's rational approximation followed by
/// Newton steps on `ln Φ(x) = ln q`.
fn lower_quantile(q: f64) -> f64 {
    let mut x = acklam(q);
    if q == 0.5 {
        return 0.0;
    }
    let ln_q = q.ln();
    for _ in 0..3 {
        let ln_cdf = log_normal_cdf(x);
        let ln_pdf = -0.5 * x * x - HALF_LN_2PI;
        let step = (ln_cdf - ln_q) * (ln_cdf - ln_pdf).exp();
        x -= step;
        if step.abs() <= 1e-17 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn acklam(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;

    if q < LOW {
        let s = (-2.0 * q.ln()).sqrt();
        (((((C[0] * s + C[1]) * s + C[2]) * s + C[3]) * s + C[4]) * s + C[5])
            / ((((D[0] * s + D[1]) * s + D[2]) * s + D[3]) * s + 1.0)
    } else {
        let s = q - 0.5;
        let r = s * s;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * s
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// The remainder `S_n` in `n! = sqrt(2πn) (n/e)^n e^{S_n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirlingRemainder {
    pub n: u64,
    pub value: f64,
}

/// `S_n` for `n <= 15`, to 20 significant digits.
const STIRLING_TABLE: [f64; 15] = [
    0.081_061_466_795_327_258_22,
    0.041_340_695_955_409_294_094,
    0.027_677_925_684_998_339_149,
    0.020_790_672_103_765_093_112,
    0.016_644_691_189_821_192_163,
    0.013_876_128_823_070_747_999,
    0.011_896_709_945_891_770_095,
    0.010_411_265_261_972_096_497,
    0.009_255_462_182_712_732_917_7,
    0.008_330_563_433_362_871_256_5,
    0.007_573_675_487_951_840_795,
    0.006_942_840_107_209_529_865_7,
    0.006_408_994_188_004_207_068_4,
    0.005_951_370_112_758_847_735_6,
    0.005_554_733_551_962_801_371,
];

/// `S_n = ln n! - ½ ln(2πn) - n ln n + n`.
pub fn stirling_remainder(n: u64) -> Result<StirlingRemainder> {
    if n == 0 {
        return domain("Stirling remainder needs n >= 1");
    }
    Ok(StirlingRemainder {
        n,
        value: stirling(n),
    })
}

pub(crate) fn stirling(n: u64) -> f64 {
    debug_assert!(n >= 1);
    if n <= STIRLING_TABLE.len() as u64 {
        return STIRLING_TABLE[n as usize - 1];
    }
    // Σ B_{2j} / (2j (2j-1) n^{2j-1}), j = 1..8. For n >= 16 the first
    // omitted term is below 3e-20.
    const COEF: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let x = n as f64;
    let r = 1.0 / (x * x);
    let poly = COEF.iter().rev().fold(0.0, |acc, &c| acc * r + c);
    poly / x
}

/// `S_n - S_{k+1} - S_{n-k-1}`, the Stirling correction attached to
/// `(k+1) C(n, k+1)`. Defined for `0 <= k <= n - 2`; always negative.
pub fn stirling_correction(n: u64, k: u64) -> Result<f64> {
    if n < 2 || k > n - 2 {
        return Err(Error::Domain(format!(
            "Stirling correction needs 0 <= k <= n - 2, got n = {n}, k = {k}"
        )));
    }
    Ok(stirling(n) - stirling(k + 1) - stirling(n - k - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pdf_values() {
        assert_eq!(std_normal_pdf(0.0).unwrap(), 0.398_942_280_401_432_7);
        assert_eq!(std_normal_pdf(-2.0).unwrap(), std_normal_pdf(2.0).unwrap());
        assert_relative_eq!(
            std_normal_pdf(1.0).unwrap(),
            0.241_970_724_519_143_35,
            epsilon = 0.0,
            max_relative = 1e-15
        );
        assert!(std_normal_pdf(f64::NAN).is_err());
        assert!(std_normal_pdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert_relative_eq!(
            std_normal_cdf(1.959963984540054).unwrap(),
            0.975,
            epsilon = 0.0,
            max_relative = 1e-15
        );
        // mpmath, 50 digits.
        let cases = [
            (-8.0, 6.220960574271784e-16),
            (-5.0, 2.866515718791939e-7),
            (-1.5, 0.066_807_201_268_858_06),
            (-0.3, 0.382_088_577_811_047_36),
            (0.7, 0.758_036_347_776_926_8),
            (3.0, 0.998_650_101_968_369_9),
            (-37.0, 5.725_571_222_524_577e-300),
        ];
        for (x, want) in cases {
            let got = std_normal_cdf(x).unwrap();
            let tol = if x == -37.0 { 1e-12 } else { 1e-14 };
            assert_relative_eq!(got, want, epsilon = 0.0, max_relative = tol);
        }
        assert!(std_normal_cdf(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn cdf_symmetry() {
        for i in 0..=800 {
            let x = i as f64 * 0.01;
            let s = std_normal_cdf(x).unwrap() + std_normal_cdf(-x).unwrap();
            assert!((s - 1.0).abs() <= 1e-15, "x = {x}: {s}");
        }
    }

    #[test]
    fn log_cdf_values() {
        assert_eq!(log_std_normal_cdf(0.0).unwrap(), -std::f64::consts::LN_2);
        let v = log_std_normal_cdf(40.0).unwrap();
        assert!(v <= 0.0 && v > -1e-300);
        assert_relative_eq!(
            log_std_normal_cdf(-40.0).unwrap(),
            -804.608_442_013_753_8,
            epsilon = 0.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            log_std_normal_cdf(-200.676_423_880_279_84).unwrap(),
            -20_141.734_207_831_73,
            epsilon = 0.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn mills_series_and_continued_fraction_agree() {
        for t in [10.0, 12.5, 20.0, 55.0, 300.0] {
            let series = mills_ratio_scaled(t);
            let cf = t * mills_ratio_cf(t);
            assert_relative_eq!(series, cf, epsilon = 0.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn log_cdf_is_continuous_at_switch_points() {
        for x in [MILLS_THRESHOLD, 0.5] {
            let below = log_normal_cdf(x - 1e-9);
            let at = log_normal_cdf(x);
            assert!((at - below).abs() < 1e-8 * at.abs().max(1.0));
        }
    }

    #[test]
    fn quantile_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert_relative_eq!(
            std_normal_quantile(0.975).unwrap(),
            1.959_963_984_540_054,
            epsilon = 0.0,
            max_relative = 1e-15
        );
        for q in [1e-300, 1e-20, 0.01, 0.3, 0.7, 0.99] {
            let x = std_normal_quantile(q).unwrap();
            assert!((normal_cdf(x) - q).abs() <= 1e-13);
            assert_relative_eq!(
                log_normal_cdf(x),
                q.ln(),
                epsilon = 0.0,
                max_relative = 1e-13
            );
        }
        for bad in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(std_normal_quantile(bad).is_err());
        }
    }

    #[test]
    fn stirling_values() {
        assert!(stirling_remainder(0).is_err());
        assert_relative_eq!(
            stirling_remainder(1).unwrap().value,
            1.0 - HALF_LN_2PI,
            epsilon = 0.0,
            max_relative = 1e-15
        );
        // mpmath, 40 digits.
        let cases = [
            (10, 0.008_330_563_433_362_871),
            (16, 0.005_207_655_919_609_640_4),
            (50, 0.001_666_644_446_983_365_5),
            (1000, 8.333_333_055_555_635e-5),
            (1_000_000, 8.333_333_333_333_056e-8),
        ];
        for (n, want) in cases {
            assert_relative_eq!(stirling(n), want, epsilon = 0.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn stirling_correction_values() {
        assert_relative_eq!(
            stirling_correction(2, 0).unwrap(),
            -0.120_782_237_635_245_22,
            epsilon = 0.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            stirling_correction(100, 49).unwrap(),
            -0.002_499_958_338_331_816,
            epsilon = 0.0,
            max_relative = 1e-12
        );
        assert!(stirling_correction(10, 9).is_err());
        assert!(stirling_correction(1, 0).is_err());
        for n in 2..200 {
            for k in 0..=n - 2 {
                assert!(stirling_correction(n, k).unwrap() < 0.0);
            }
        }
    }
}
