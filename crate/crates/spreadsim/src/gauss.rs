#![allow(clippy::excessive_precision)] // published constants carry full printed precision

//! Scalar Gaussian kernels: univariate and bivariate normal CDFs, the
//! inverse CDF, and the affine-integral identity they satisfy.
//!
//! `phi`/`phi_inv`/`bvn` are the raw `f64` kernels used by the rest of the
//! crate; the public `norm_cdf`/`norm_cdf_inv`/`bvn_cdf` wrappers validate
//! their arguments and return typed probabilities.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// A value constrained to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain(format!(
                "probability must lie in [0, 1], got {value}"
            )));
        }
        Ok(Probability(value))
    }

    /// Clamps values within `tol` of the boundary; anything further out is an error.
    pub fn new_clamped(value: f64, tol: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else if value > 1.0 && value <= 1.0 + tol {
            Ok(Probability(1.0))
        } else if value < 0.0 && value >= -tol {
            Ok(Probability(0.0))
        } else {
            Err(Error::Consistency(format!(
                "value {value} outside [{:.1e}, 1 + {tol:.1e}]",
                -tol
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// A correlation in [-1, 1]. Operations that need the open interval reject
/// the endpoints themselves. The default is 0 (independence).
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value.abs() > 1.0 {
            return Err(Error::domain(format!(
                "correlation must lie in [-1, 1], got {value}"
            )));
        }
        Ok(Correlation(value))
    }

    /// Requires |value| < 1 strictly.
    pub fn new_open(value: f64) -> Result<Self> {
        if !value.is_finite() || value.abs() >= 1.0 {
            return Err(Error::domain(format!(
                "correlation must lie strictly inside (-1, 1), got {value}"
            )));
        }
        Ok(Correlation(value))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

// --- erf/erfc (Cody's rational Chebyshev approximations, SPECFUN CALERF) ---

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const FRAC_1_SQRT_PI: f64 = 0.5641895835477562869;

/// erfc(x) for x >= 0.46875, accurate to full double precision.
fn erfc_tail(y: f64) -> f64 {
    debug_assert!(y >= 0.46875);
    let result = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else if y < 26.6 {
        let ysq = 1.0 / (y * y);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (FRAC_1_SQRT_PI - r) / y
    } else {
        return 0.0;
    };
    // split the exponential argument to preserve accuracy of exp(-y^2)
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * result
}

/// Complementary error function, |relative error| < 1e-15 over the real line.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf(x);
    }
    let tail = erfc_tail(y);
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        let z = if y > 1.11e-16 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        x * (num + ERF_A[3]) / (den + ERF_B[3])
    } else {
        let tail = 1.0 - erfc_tail(y);
        if x < 0.0 {
            -tail
        } else {
            tail
        }
    }
}

/// Standard normal CDF (raw kernel). Absolute error below 1e-15.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub(crate) fn phi_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// --- inverse normal CDF: Acklam's rational approximation ---

const INV_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const INV_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const INV_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const INV_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

/// Acklam's approximation alone (|relative error| < 1.2e-9). This is the
/// sampling kernel: fast and monotone in `p`.
#[inline]
pub(crate) fn phi_inv_approx(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    }
}

/// Refined inverse CDF: one Halley step on top of the rational
/// approximation pushes the residual |phi(x) - p| well below 1e-12.
pub(crate) fn phi_inv(p: f64) -> f64 {
    let x = phi_inv_approx(p);
    let u = (phi(x) - p) / phi_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

// --- bivariate normal CDF ---
//
// Gauss-Legendre quadrature of the Drezner-Wesolowsky single-integral
// representation, with node counts chosen by |rho| and a separate expansion
// for |rho| near one. P(X > h, Y > k) is computed first; the CDF follows by
// sign flips.

const GL_6: [(f64, f64); 3] = [
    (0.1713244923791705, -0.9324695142031522),
    (0.3607615730481384, -0.6612093864662647),
    (0.4679139345726904, -0.2386191860831970),
];
const GL_12: [(f64, f64); 6] = [
    (0.04717533638651177, -0.9815606342467191),
    (0.1069393259953183, -0.9041172563704750),
    (0.1600783285433464, -0.7699026741943050),
    (0.2031674267230659, -0.5873179542866171),
    (0.2334925365383547, -0.3678314989981802),
    (0.2491470458134029, -0.1252334085114692),
];
const GL_20: [(f64, f64); 10] = [
    (0.01761400713915212, -0.9931285991850949),
    (0.04060142980038694, -0.9639719272779138),
    (0.06267204833410906, -0.9122344282513259),
    (0.08327674157670475, -0.8391169718222188),
    (0.1019301198172404, -0.7463319064601508),
    (0.1181945319615184, -0.6360536807265150),
    (0.1316886384491766, -0.5108670019508271),
    (0.1420961093183821, -0.3737060887154196),
    (0.1491729864726037, -0.2277858511416451),
    (0.1527533871307259, -0.07652652113349733),
];

fn gl_nodes(rho_abs: f64) -> &'static [(f64, f64)] {
    if rho_abs < 0.3 {
        &GL_6
    } else if rho_abs < 0.75 {
        &GL_12
    } else {
        &GL_20
    }
}

/// Upper-orthant probability P(X > h, Y > k) for standard normals with
/// correlation `r`, |r| < 1. Accurate to about 5e-16.
fn bvnu(h: f64, k: f64, r: f64) -> f64 {
    // reduce strongly negative correlations onto the well-conditioned
    // positive branch: P(X>h, Y>k) = P(X>h) - P(X>h, -Y>-k)
    if r < -0.925 {
        return (phi(-h) - bvnu(h, -k, -r)).max(0.0);
    }
    let hk = h * k;
    let mut bvn = 0.0;
    if r.abs() <= 0.925 {
        if r != 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = 0.5 * r.asin();
            for &(w, x) in gl_nodes(r.abs()) {
                for is in [-1.0, 1.0] {
                    let sn = (asr * (is * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * PI);
        }
        // quadrature ringing can leave a deep-tail value a few ulps outside
        (bvn + phi(-h) * phi(-k)).clamp(0.0, 1.0)
    } else {
        // 0.925 < r < 1
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (b_s / a_s + hk);
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        }
        if -hk < 100.0 {
            let b = b_s.sqrt();
            bvn -= (-0.5 * hk).exp()
                * (2.0 * PI).sqrt()
                * phi(-b / a)
                * b
                * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in gl_nodes(r.abs()) {
            for is in [-1.0, 1.0] {
                let xs = (a * (is * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -0.5 * (b_s / xs + hk);
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / (2.0 * PI);
        bvn += phi(-h.max(k));
        bvn.clamp(0.0, 1.0)
    }
}

/// Raw bivariate CDF kernel: P(X <= x, Y <= y) with correlation `rho`.
/// Infinite arguments resolve to the marginals / Frechet limits.
pub(crate) fn bvn(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return if y == f64::INFINITY { 1.0 } else { phi(y) };
    }
    if y == f64::INFINITY {
        return phi(x);
    }
    if rho == 1.0 {
        return phi(x.min(y));
    }
    if rho == -1.0 {
        return (phi(x) + phi(y) - 1.0).max(0.0);
    }
    bvnu(-x, -y, rho)
}

// --- public, checked operations ---

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> Result<Probability> {
    require_finite("x", x)?;
    Probability::new(phi(x))
}

/// Inverse of the standard normal CDF; `p` must lie strictly inside (0, 1).
pub fn norm_cdf_inv(p: Probability) -> Result<f64> {
    let p = p.get();
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::domain(format!(
            "inverse normal CDF requires p in (0, 1), got {p}"
        )));
    }
    Ok(phi_inv(p))
}

/// Bivariate normal CDF P(X <= x, Y <= y). `x` and `y` may be infinite;
/// correlation endpoints resolve to the comonotone/countermonotone limits.
pub fn bvn_cdf(x: f64, y: f64, rho: Correlation) -> Result<Probability> {
    if x.is_nan() || y.is_nan() {
        return Err(Error::domain("bvn_cdf arguments must not be NaN"));
    }
    Probability::new(bvn(x, y, rho.get()).clamp(0.0, 1.0))
}

/// Integral of u -> Phi(a u + b) against the standard normal density over
/// (-inf, x], evaluated through its bivariate-CDF closed form.
pub fn phi_affine_integral(a: f64, b: f64, x: f64) -> Result<Probability> {
    require_finite("a", a)?;
    require_finite("b", b)?;
    require_finite("x", x)?;
    let s = (a * a + 1.0).sqrt();
    Probability::new(bvn(b / s, x, -a / s).clamp(0.0, 1.0))
}
