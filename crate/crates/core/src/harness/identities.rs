//! Deterministic identity suite: closed forms against quadrature and exact
//! occupation bookkeeping on synthetic paths. No random numbers are drawn.

use super::report::Check;
use crate::error::Result;
use crate::local_time::{binned_field, breakpoint_density, occupation_identity_residual, SpatialGrid};
use crate::numerics::special::{g_kernel, heat_kernel, heat_kernel_dx, tail_k, SQRT_2PI};
use crate::numerics::adaptive_simpson;
use crate::path::{BrownianPath, TimeGrid};

/// Points at which K(a) is compared with quadrature.
pub const TAIL_K_POINTS: [f64; 6] = [1e-6, 0.01, 0.1, 1.0, 10.0, 100.0];

/// K(a) by quadrature after the substitution z = u², which removes the
/// z^{-1/2} behaviour at the origin; the tail beyond u = 60 is 2/60.
pub fn tail_k_quadrature(a: f64) -> Result<f64> {
    const U_MAX: f64 = 60.0;
    let f = |u: f64| {
        if u == 0.0 {
            1.0
        } else {
            -2.0 * (-0.5 * u * u).exp_m1() / (u * u)
        }
    };
    let lo = a.sqrt();
    // split so the adaptive rule sees the bend near u ~ 1 at full resolution
    let cuts = [lo, lo.max(1.0), lo.max(4.0), lo.max(16.0), U_MAX];
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            sum += adaptive_simpson(f, w[0], w[1], 1e-13)?;
        }
    }
    Ok(sum + 2.0 / U_MAX)
}

/// ∫∫ g_h(x, y)² dx dy. The integrand is piecewise quadratic, so Simpson's
/// rule on the pieces is exact; the adaptive rule only confirms it.
pub fn g_squared_integral(h: f64) -> Result<f64> {
    let inner = |x: f64| -> f64 {
        let ax = x.abs();
        let mut cuts = vec![-h, -ax, -(h - ax), 0.0, h - ax, ax, h];
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                adaptive_simpson(|y| g_kernel(x, y, h).map_or(f64::NAN, |g| g * g), w[0], w[1], 1e-15)
                    .unwrap_or(f64::NAN)
            })
            .sum()
    };
    let cuts = [-h, -h / 2.0, 0.0, h / 2.0, h];
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        sum += adaptive_simpson(inner, w[0], w[1], 1e-14)?;
    }
    Ok(sum)
}

/// Deterministic test paths: a unit-slope ramp, a zigzag and a sampled sine.
pub fn synthetic_paths() -> Vec<(&'static str, BrownianPath)> {
    let ramp = {
        let g = TimeGrid::new(1.0, 1000).expect("grid");
        BrownianPath::from_values(g, (0..=1000).map(|i| i as f64 / 1000.0).collect())
    };
    let zigzag = {
        let g = TimeGrid::new(2.0, 64).expect("grid");
        let v = (0..=64)
            .map(|i| {
                let k = i % 16;
                0.1 * (if k <= 8 { k as f64 } else { 16.0 - k as f64 }) - 0.013 * i as f64
            })
            .collect();
        BrownianPath::from_values(g, v)
    };
    let sine = {
        let g = TimeGrid::new(0.75, 3000).expect("grid");
        let v = (0..=3000)
            .map(|i| (i as f64 * 0.01).sin() * (1.0 + 0.001 * i as f64) * 0.7)
            .collect();
        BrownianPath::from_values(g, v)
    };
    vec![
        ("ramp", ramp.expect("valid path")),
        ("zigzag", zigzag.expect("valid path")),
        ("sine", sine.expect("valid path")),
    ]
}

/// Runs every identity and returns one check per line of the table.
pub fn identity_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(Check::within("K(0) = sqrt(2 pi)", tail_k(0.0)?, SQRT_2PI, 1e-10));
    for h in [0.1, 1.0] {
        let ratio = g_squared_integral(h)? / (h.powi(4) / 2.0);
        out.push(Check::within(format!("int int g_h^2 / (h^4/2), h = {h}"), ratio, 1.0, 1e-6));
    }
    for eps in [0.01f64, 1.0] {
        let w = 40.0 * eps.sqrt();
        let mass = adaptive_simpson(|x| heat_kernel(x, eps).unwrap_or(f64::NAN), -w, w, 1e-13)?;
        out.push(Check::within(format!("heat kernel mass, eps = {eps}"), mass, 1.0, 1e-10));
    }
    let mut fd_err: f64 = 0.0;
    for eps in [0.05, 0.3, 1.0, 2.5] {
        for x in [-1.7, -0.4, 0.0, 0.2, 0.9, 2.2] {
            let d = 1e-5;
            let fd = (heat_kernel(x + d, eps)? - heat_kernel(x - d, eps)?) / (2.0 * d);
            fd_err = fd_err.max((fd - heat_kernel_dx(x, eps)?).abs());
        }
    }
    out.push(Check::at_most("heat kernel derivative vs central difference", fd_err, 1e-8));
    for (name, path) in synthetic_paths() {
        let (lo, hi) = path.min_max();
        let grid = SpatialGrid::spanning(lo - 0.1, hi + 0.1, 0.01)?;
        let field = binned_field(&path, &grid)?;
        let mass = field.mass();
        out.push(Check::within(format!("sum L dx = t, {name} path"), mass, path.horizon(), 1e-12));
        let density = breakpoint_density(&path);
        let exact = density.total_mass();
        out.push(Check::within(format!("breakpoint mass = t, {name} path"), exact, path.horizon(), 1e-12));
        let res = occupation_identity_residual(&path, &density, 0.5 * (lo + hi), 0.37)?;
        out.push(Check::at_most(format!("occupation identity, {name} path"), res, 1e-12));
    }
    for a in TAIL_K_POINTS {
        out.push(Check::within(
            format!("K({a:e}) closed form vs quadrature"),
            tail_k(a)?,
            tail_k_quadrature(a)?,
            1e-9,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        for c in identity_checks().unwrap() {
            assert!(c.pass, "{}", c.line());
        }
    }
}
