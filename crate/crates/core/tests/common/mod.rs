//! Independent oracles for the integration tests. Everything here is
//! computed from first principles with a plain composite Simpson rule and
//! shares no code with the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// E ∫(L_t^x)³ dx = 6∫∫∫_{s₁<s₂<s₃<t} p_{s₂−s₁}(0) p_{s₃−s₂}(0) ds.
///
/// With gaps a = u², b = v² the singular factors (2πa)^{-1/2} da become
/// 2/√(2π) du, leaving 6·(4/2π)·∫∫_{u²+v²<t} (t − u² − v²) du dv.
pub fn v3_mean(t: f64) -> f64 {
    let st = t.sqrt();
    let inner = |u: f64| {
        let top = (t - u * u).max(0.0).sqrt();
        simpson(|v| t - u * u - v * v, 0.0, top, 200)
    };
    6.0 * 4.0 / (2.0 * PI) * simpson(inner, 0.0, st, 2000)
}

/// E ∫(L_t^x)² dx = 2∫∫_{s<u<t} (2π(u − s))^{-1/2} ds du, with the gap
/// a = w².
pub fn v2_mean(t: f64) -> f64 {
    2.0 * simpson(|w| (t - w * w) * 2.0 / (2.0 * PI).sqrt(), 0.0, t.sqrt(), 2000)
}

/// E F2(h) = 4∫₀^t (t − v)(p_v(0) − p_v(h)) dv, again with v = w².
pub fn f2_mean(t: f64, h: f64) -> f64 {
    let f = |w: f64| {
        let v = w * w;
        if v == 0.0 {
            return 4.0 * t * 2.0 / (2.0 * PI).sqrt();
        }
        let p0 = 1.0 / (2.0 * PI * v).sqrt();
        4.0 * (t - v) * p0 * (1.0 - (-h * h / (2.0 * v)).exp()) * 2.0 * w
    };
    simpson(f, 0.0, t.sqrt(), 20_000)
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// K(a) = ∫_a^∞ z^{-3/2}(1 − e^{-z/2}) dz with z = a + s²/(1 − s)², a
/// different substitution from the library's.
pub fn tail_k(a: f64) -> f64 {
    if a == 0.0 {
        // z = y², integrand 2(1 − e^{−y²/2})/y² on (0, ∞), y = s/(1 − s)
        let f = |s: f64| {
            if s == 0.0 {
                return 1.0;
            }
            if s >= 1.0 {
                return 2.0;
            }
            let y = s / (1.0 - s);
            2.0 * (1.0 - (-0.5 * y * y).exp()) / (y * y) / ((1.0 - s) * (1.0 - s))
        };
        return simpson(f, 0.0, 1.0, 200_000);
    }
    let f = |s: f64| {
        if s >= 1.0 {
            return 2.0;
        }
        let y = s / (1.0 - s);
        let z = a + y * y;
        let dz = 2.0 * y / ((1.0 - s) * (1.0 - s));
        z.powf(-1.5) * (1.0 - (-z / 2.0).exp()) * dz
    };
    simpson(f, 0.0, 1.0, 400_000)
}

/// ∫∫ g_h(x, y)² dx dy by a midpoint sum on an m×m grid over [−h, h]²,
/// written out from the kernel's definition.
pub fn g_squared_midpoint(h: f64, m: usize) -> f64 {
    let d = 2.0 * h / m as f64;
    let mut s = 0.0;
    for i in 0..m {
        let x = -h + (i as f64 + 0.5) * d;
        for j in 0..m {
            let y = -h + (j as f64 + 0.5) * d;
            let g = if x * y < 0.0 {
                (h - x.abs() - y.abs()).max(0.0)
            } else {
                (h - x.abs()).max(0.0).min((h - y.abs()).max(0.0))
            };
            s += g * g;
        }
    }
    s * d * d
}
