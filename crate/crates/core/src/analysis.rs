//! Leading truncation-error coefficients of the seven-point family for plane
//! waves, `τ ≈ C1 c⁴h² + C2 c⁶h⁴`, and their 1D counterparts.
//!
//! With `β = α₂/(c²h²)`:
//!
//! ```text
//! C1 = (30240 − 483840 β) / (322560 √3)
//! C2 = (−2940 + 80640 β + 84 cos 6θ) / (322560 √3)
//! ```
//!
//! The C2 term is also available with `80640 α₂/c²` in place of
//! `80640 β`, which carries an extra `h²` when `α₂ ∝ c²h²`.

use serde::Serialize;

use crate::fdstencil::{alpha1, row_1d, Scheme1d, StencilError, StencilScheme};

const DENOM: f64 = 322_560.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub theta: f64,
    pub beta: f64,
}

pub fn trunc_coeffs(beta: f64, theta: f64) -> TruncationCoeffs {
    let d = DENOM * 3f64.sqrt();
    TruncationCoeffs {
        c1: (30240.0 - 483_840.0 * beta) / d,
        c2: (-2940.0 + 80640.0 * beta + 84.0 * (6.0 * theta).cos()) / d,
        theta,
        beta,
    }
}

/// Coefficients with the C2 bubble term taken literally as `80640 α₂/c²`.
pub fn trunc_coeffs_printed(alpha2: f64, c: f64, h: f64, theta: f64) -> TruncationCoeffs {
    let d = DENOM * 3f64.sqrt();
    let beta = alpha2 / (c * c * h * h);
    TruncationCoeffs {
        c1: (30240.0 - 483_840.0 * beta) / d,
        c2: (-2940.0 + 80640.0 * alpha2 / (c * c) + 84.0 * (6.0 * theta).cos()) / d,
        theta,
        beta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub ch: f64,
    /// `None` at a pole of the scheme's `α₂`.
    pub coeffs: Option<TruncationCoeffs>,
}

/// `(ch, C1, C2)` rows for one scheme and direction, normalized C2.
pub fn coefficient_sweep(scheme: StencilScheme, theta: f64, ch_grid: &[f64]) -> Vec<SweepRow> {
    ch_grid
        .iter()
        .map(|&ch| SweepRow {
            ch,
            coeffs: scheme.beta(ch).ok().map(|b| trunc_coeffs(b, theta)),
        })
        .collect()
}

/// Leading `c⁴h²` coefficient of the 1D pseudo-bubble scheme,
/// `1/12 − 3/(4(12 − c²h²))`.
pub fn pseudo_bubble_1d_leading(ch: f64) -> Result<f64, StencilError> {
    let a1 = alpha1(ch, 1.0)?;
    Ok(1.0 / 12.0 - a1 / (ch * ch))
}

/// Residual of one 1D row applied to samples of `sin(cx)` around `x0`,
/// divided by `c² sin(c x0)`.
pub fn residual_1d(scheme: Scheme1d, c: f64, h: f64, x0: f64) -> Result<f64, StencilError> {
    let row = row_1d(scheme, c, h)?;
    let u = |x: f64| (c * x).sin();
    let r = row[0] * u(x0 - h) + row[1] * u(x0) + row[2] * u(x0 + h);
    Ok(r / (c * c * u(x0)))
}

/// Fits `residual/c² ≈ A t² + B t⁴` (`t = ch`) from samples at `t` and
/// `t/2` and returns `(A, B)`.
pub fn taylor_fit_1d(scheme: Scheme1d, c: f64, t: f64) -> Result<(f64, f64), StencilError> {
    // a node away from the zeros of sin(cx)
    let x0 = 0.3 / c;
    let r1 = residual_1d(scheme, c, t / c, x0)?;
    let r2 = residual_1d(scheme, c, 0.5 * t / c, x0)?;
    let (t1, t2) = (t * t, 0.25 * t * t);
    // r1 = A t1 + B t1², r2 = A t2 + B t2²
    let det = t1 * t2 * t2 - t2 * t1 * t1;
    let a = (r1 * t2 * t2 - r2 * t1 * t1) / det;
    let b = (t1 * r2 - t2 * r1) / det;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn galerkin_values() {
        let k = trunc_coeffs(0.0, 0.0);
        assert!((k.c1 - 0.054_126_6).abs() < 1e-7);
        let k = trunc_coeffs(0.0, PI / 3.0);
        assert!((k.c2 - (-2856.0 / (DENOM * 3f64.sqrt()))).abs() < 1e-16);
        assert!((k.c2 + 0.005_111_9).abs() < 1e-7);
    }

    #[test]
    fn fourth_order_c1_root() {
        for i in 0..100 {
            let theta = 2.0 * PI * i as f64 / 100.0;
            assert_eq!(trunc_coeffs(0.0625, theta).c1, 0.0);
        }
        let k = trunc_coeffs(0.0625, 0.0);
        assert!((k.c2 - 2184.0 / (DENOM * 3f64.sqrt())).abs() < 1e-16);
    }

    #[test]
    fn pseudo_ab_small_ch_limits() {
        let c1 = |mu: f64| {
            let b = StencilScheme::PseudoAb { mu }.beta(1e-6).unwrap();
            trunc_coeffs(b, 0.0).c1
        };
        assert!((c1(5.4) - 0.010_825).abs() < 1e-6);
        assert!(c1(6.8).abs() < 1e-3);
        assert!((c1(6.8) + 0.000_401).abs() < 1e-5);
    }

    #[test]
    fn printed_and_normalized_forms() {
        let (c, h) = (50.0, 0.02);
        let a2 = StencilScheme::FourthOrder.alpha2(c, h).unwrap();
        let printed = trunc_coeffs_printed(a2, c, h, 0.3);
        let normal = trunc_coeffs(0.0625, 0.3);
        assert_eq!(printed.c1, normal.c1);
        // printed C2 bubble term is normalized term times h²
        let d = DENOM * 3f64.sqrt();
        assert!((printed.c2 - (normal.c2 - 80640.0 * 0.0625 * (1.0 - h * h) / d)).abs() < 1e-15);
    }

    #[test]
    fn sweep_flags_poles() {
        let rows = coefficient_sweep(
            StencilScheme::PseudoRfb,
            0.0,
            &[0.5, 72f64.sqrt(), 9.0],
        );
        assert!(rows[0].coeffs.is_some());
        assert!(rows[1].coeffs.is_none());
        assert!(rows[2].coeffs.is_some());
        let g = coefficient_sweep(StencilScheme::Galerkin, 0.0, &[0.1, 1.0, 3.0]);
        assert!(g.iter().all(|r| r.coeffs.unwrap().c1 == g[0].coeffs.unwrap().c1));
    }

    #[test]
    fn pseudo_bubble_leading_vanishes_at_sqrt3() {
        assert!(pseudo_bubble_1d_leading(3f64.sqrt()).unwrap().abs() < 1e-12);
        assert!(pseudo_bubble_1d_leading(1.0).unwrap() > 0.0);
    }

    #[test]
    fn galerkin_taylor_constants() {
        let (a, b) = taylor_fit_1d(Scheme1d::Galerkin, 40.0, 0.1).unwrap();
        assert!((a - 1.0 / 12.0).abs() < 0.02 / 12.0, "{a}");
        assert!((b + 1.0 / 90.0).abs() < 0.02 / 90.0, "{b}");
    }

    #[test]
    fn pseudo_bubble_residual_matches_leading_term() {
        for ch in [0.1, 0.2, 0.3] {
            let (a, _) = taylor_fit_1d(Scheme1d::PseudoBubble, 40.0, ch).unwrap();
            let expect = pseudo_bubble_1d_leading(ch).unwrap();
            assert!((a - expect).abs() <= 0.05 * expect.abs(), "{ch}: {a} vs {expect}");
        }
    }

    proptest! {
        #[test]
        fn c1_affine_decreasing(b1 in -1.0f64..1.0, b2 in -1.0f64..1.0, theta in 0.0f64..6.3) {
            let (k1, k2) = (trunc_coeffs(b1, theta), trunc_coeffs(b2, theta));
            if b1 < b2 {
                prop_assert!(k1.c1 > k2.c1);
            }
            let mid = trunc_coeffs(0.5 * (b1 + b2), theta);
            prop_assert!((mid.c1 - 0.5 * (k1.c1 + k2.c1)).abs() < 1e-15);
        }

        #[test]
        fn c2_period(beta in -1.0f64..1.0, theta in 0.0f64..6.3) {
            let a = trunc_coeffs(beta, theta).c2;
            let b = trunc_coeffs(beta, theta + PI / 3.0).c2;
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert_eq!(trunc_coeffs(beta, theta).c1, trunc_coeffs(beta, 0.0).c1);
        }
    }
}
