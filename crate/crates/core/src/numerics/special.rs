//! Error function, Gaussian densities and the closed-form kernels used by the
//! Clark–Ocone integrand.
//!
//! `erf`/`erfc` follow the FreeBSD `s_erf.c` rational approximations
//! (Sun Microsystems, 1993; freely redistributable with this notice). Their
//! relative error is below one ulp on the whole real line, which covers the
//! [0, 27] range that `normal_cdf` and `tail_k` rely on.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// √(2π)
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;
const VERY_TINY: f64 = 2.848_094_538_889_218e-306;
const TINY: f64 = 1.387_778_780_781_445_7e-17;
const SMALL: f64 = 3.725_290_298_461_914e-9;

#[inline]
fn erf_small(z: f64) -> f64 {
    let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
    let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
    r / s
}

#[inline]
fn erf_mid(s: f64) -> f64 {
    let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
    let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
    p / q
}

/// erfc(x)·x·exp(x²) style tail for 1.25 ≤ x < 28; returns erfc(x) for x > 0.
#[inline]
fn erfc_tail(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    let (r, q) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // split x so that -x² is formed without cancellation
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp() / x
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = if a < 0.843_75 {
        if a < SMALL {
            if a < VERY_TINY {
                0.125 * (8.0 * a + EFX8 * a)
            } else {
                a + EFX * a
            }
        } else {
            a + a * erf_small(a * a)
        }
    } else if a < 1.25 {
        ERX + erf_mid(a - 1.0)
    } else if a >= 6.0 {
        1.0
    } else {
        1.0 - erfc_tail(a)
    };
    v.copysign(x)
}

pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let neg = x < 0.0;
    if a < 0.843_75 {
        let t = if a < TINY {
            a
        } else {
            let y = erf_small(a * a);
            if a < 0.25 {
                a + a * y
            } else {
                0.5 + (a * y + (a - 0.5))
            }
        };
        return if neg { 1.0 + t } else { 1.0 - t };
    }
    if a < 1.25 {
        let p = erf_mid(a - 1.0);
        return if neg { 1.0 + ERX + p } else { 1.0 - ERX - p };
    }
    if a < 28.0 {
        if neg && a > 6.0 {
            return 2.0;
        }
        let r = erfc_tail(a);
        return if neg { 2.0 - r } else { r };
    }
    if neg {
        2.0
    } else {
        0.0
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Antiderivative of the normal CDF: ∫_{-∞}^u Φ(v) dv = uΦ(u) + φ(u).
#[inline]
pub fn normal_cdf_integral(u: f64) -> f64 {
    u * normal_cdf(u) + normal_pdf(u)
}

/// Inverse of [`normal_cdf`] (Acklam's rational approximation polished by one
/// Halley step; absolute error below 1e-14 on (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement against the accurate CDF
    let e = if x < 0.0 {
        0.5 * erfc(-x * FRAC_1_SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * erfc(x * FRAC_1_SQRT_2)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

fn check_variance(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("heat-kernel variance must be positive, got {eps}")))
    }
}

/// Centered Gaussian density with variance `eps`, without argument checks.
#[inline]
pub(crate) fn gauss(x: f64, eps: f64) -> f64 {
    (-x * x / (2.0 * eps)).exp() / (2.0 * PI * eps).sqrt()
}

/// Heat kernel p_ε(x) = (2πε)^{-1/2} exp(-x²/2ε).
pub fn heat_kernel(x: f64, eps: f64) -> Result<f64> {
    check_variance(eps)?;
    Ok(gauss(x, eps))
}

/// Spatial derivative p'_ε(x) = -(x/ε) p_ε(x).
pub fn heat_kernel_dx(x: f64, eps: f64) -> Result<f64> {
    check_variance(eps)?;
    Ok(gauss_dx(x, eps))
}

#[inline]
pub(crate) fn gauss_dx(x: f64, eps: f64) -> f64 {
    -(x / eps) * gauss(x, eps)
}

/// K(a) = ∫_a^∞ z^{-3/2}(1 - e^{-z/2}) dz, evaluated through the
/// integration-by-parts form 2a^{-1/2}(1 - e^{-a/2}) + √(2π) erfc(√(a/2)).
pub fn tail_k(a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::usage(format!("tail integral needs a >= 0, got {a}")));
    }
    Ok(tail_k_unchecked(a))
}

#[inline]
pub(crate) fn tail_k_unchecked(a: f64) -> f64 {
    if a == 0.0 {
        return SQRT_2PI;
    }
    if a.is_infinite() {
        return 0.0;
    }
    -2.0 * (-0.5 * a).exp_m1() / a.sqrt() + SQRT_2PI * erfc((0.5 * a).sqrt())
}

/// Correlation kernel g_h(x, y): (h-|x|-|y|)₊ when x and y have opposite
/// signs, min((h-|x|)₊, (h-|y|)₊) otherwise.
pub fn g_kernel(x: f64, y: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::usage(format!("g kernel bandwidth must be positive, got {h}")));
    }
    Ok(if x * y < 0.0 {
        (h - (x.abs() + y.abs())).max(0.0)
    } else {
        (h - x.abs()).max(0.0).min((h - y.abs()).max(0.0))
    })
}
