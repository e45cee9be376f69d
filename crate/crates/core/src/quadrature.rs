//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol · |integral|)`.

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1) in decreasing order; the odd positions are
// the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the per-interval `|K15 - G7|` estimates.
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`.
///
/// Fails with [`Error::NoConvergence`] carrying the partial estimate when
/// `max_segments` bisections do not reach the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut segments = vec![kronrod(&f, a, b)];
    let mut evaluations = 15;
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::NoConvergence {
                method: "adaptive Gauss-Kronrod quadrature",
                iterations: segments.len(),
                estimate: value,
                error,
            });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments[worst];
        let mid = 0.5 * (seg.a + seg.b);
        if segments.len() >= max_segments || mid <= seg.a || mid >= seg.b {
            return Err(Error::NoConvergence {
                method: "adaptive Gauss-Kronrod quadrature",
                iterations: segments.len(),
                estimate: value,
                error,
            });
        }
        segments[worst] = kronrod(&f, seg.a, mid);
        segments.push(kronrod(&f, mid, seg.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree 22 exactly.
        let q = integrate(|x| x.powi(10) - 3.0 * x, 0.0, 2.0, 1e-14, 1e-14, 10).unwrap();
        assert_relative_eq!(
            q.value,
            2048.0 / 11.0 - 6.0,
            epsilon = 0.0,
            max_relative = 1e-14
        );
        assert_eq!(q.evaluations, 15);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| x.sqrt().ln(), 0.0, 1.0, 1e-12, 1e-12, 500).unwrap();
        assert!((q.value + 0.5).abs() < 1e-11);
    }

    #[test]
    fn peaked_integrand() {
        let q = integrate(
            |x: f64| (-1e4 * (x - 0.3).powi(2)).exp(),
            0.0,
            1.0,
            1e-15,
            1e-12,
            500,
        )
        .unwrap();
        assert_relative_eq!(
            q.value,
            (std::f64::consts::PI / 1e4).sqrt(),
            epsilon = 0.0,
            max_relative = 1e-11
        );
    }

    #[test]
    fn failure_carries_estimate() {
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12, 1e-12, 20).unwrap_err();
        match err {
            Error::NoConvergence { iterations, .. } => assert_eq!(iterations, 20),
            other => panic!("unexpected {other:?}"),
        }
    }
}
