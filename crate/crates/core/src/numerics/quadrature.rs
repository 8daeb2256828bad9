//! Adaptive Simpson and Gauss–Legendre rules.

use crate::error::{Error, Result};

/// Absolute tolerance used when a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Maximum number of subintervals an adaptive integration may create.
pub const MAX_INTERVALS: usize = 1 << 20;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Panels are refined with an explicit stack; the run fails with a usage error
/// when more than [`MAX_INTERVALS`] panels would be needed.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || !(tol > 0.0) {
        return Err(Error::usage("quadrature needs finite limits and a positive tolerance"));
    }
    if a == b {
        return Ok(0.0);
    }
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
    }];
    let mut total = 0.0;
    let mut created = 1usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || m <= p.a || p.b <= m {
            total += left + right + delta / 15.0;
            continue;
        }
        created += 1;
        if created > MAX_INTERVALS {
            return Err(Error::usage("adaptive quadrature exceeded its interval cap"));
        }
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: 0.5 * p.tol,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: 0.5 * p.tol,
        });
    }
    Ok(sign * total)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_exp() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(f64::exp, 1.0, 0.0, 1e-12).unwrap();
        assert!((v + (std::f64::consts::E - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn simpson_rejects_bad_input() {
        assert!(adaptive_simpson(|x| x, 0.0, f64::INFINITY, 1e-8).is_err());
        assert!(adaptive_simpson(|x| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 32] {
            let gl = GaussLegendre::new(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let v = gl.integrate(|x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((v - 1.0 / deg as f64).abs() < 1e-13, "n={n}");
        }
    }
}
