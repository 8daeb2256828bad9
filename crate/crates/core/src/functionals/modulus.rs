//! L^p moduli of continuity ∫(L^{x+h} − L^x)^p dx and integrated powers
//! ∫(L^x)^p dx.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_time::{BreakpointDensity, LocalTimeField};

/// Which representation of the local time a statistic was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Binned,
    BreakpointExact,
}

/// A local-time representation accepted by the modulus functionals.
#[derive(Debug, Clone, Copy)]
pub enum LocalTimeView<'a> {
    Binned(&'a LocalTimeField),
    Exact(&'a BreakpointDensity),
}

impl<'a> From<&'a LocalTimeField> for LocalTimeView<'a> {
    fn from(f: &'a LocalTimeField) -> Self {
        LocalTimeView::Binned(f)
    }
}

impl<'a> From<&'a BreakpointDensity> for LocalTimeView<'a> {
    fn from(d: &'a BreakpointDensity) -> Self {
        LocalTimeView::Exact(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusStat {
    pub h: f64,
    pub p: u32,
    pub value: f64,
    pub estimator: Estimator,
}

/// Sums `terms` as Σ_i (terms[i] + terms[n−1−i]).
///
/// When the terms of a reflected configuration are the negated mirror image
/// of the original terms, the two totals are exact negatives of each other.
pub fn symmetric_sum(terms: &[f64]) -> f64 {
    let n = terms.len();
    let mut total = 0.0;
    for i in 0..n / 2 {
        total += terms[i] + terms[n - 1 - i];
    }
    if n % 2 == 1 {
        total += terms[n / 2];
    }
    total
}

fn check_power(p: u32) -> Result<()> {
    if p == 2 || p == 3 {
        Ok(())
    } else {
        Err(Error::usage(format!("exponent must be 2 or 3, got {p}")))
    }
}

/// ∫ (L^{x+h} − L^x)^p dx.
///
/// In binned mode `h` must be a whole number of bins; in exact mode the
/// integral is a sweep over the merged breakpoints {b − h/2} ∪ {b + h/2}
/// (the integration variable is centered at x + h/2).
pub fn modulus_lp<'a>(view: impl Into<LocalTimeView<'a>>, h: f64, p: u32) -> Result<ModulusStat> {
    check_power(p)?;
    match view.into() {
        LocalTimeView::Binned(field) => {
            let k = field.grid.lattice_shift(h)? as i64;
            Ok(ModulusStat {
                h,
                p,
                value: binned_modulus(field, k, p),
                estimator: Estimator::Binned,
            })
        }
        LocalTimeView::Exact(density) => {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::usage(format!("h must be positive, got {h}")));
            }
            Ok(ModulusStat {
                h,
                p,
                value: exact_modulus(density, h, p),
                estimator: Estimator::BreakpointExact,
            })
        }
    }
}

/// Binned modulus for a shift of `k` bins; the field is zero off the grid.
pub(crate) fn binned_modulus(field: &LocalTimeField, k: i64, p: u32) -> f64 {
    let m = field.values.len() as i64;
    let terms: Vec<f64> = (-k..m)
        .map(|j| {
            let d = field.at(j + k) - field.at(j);
            if p == 2 {
                d * d
            } else {
                d * d * d
            }
        })
        .collect();
    symmetric_sum(&terms) * field.grid.dx()
}

fn exact_modulus(density: &BreakpointDensity, h: f64, p: u32) -> f64 {
    let half = 0.5 * h;
    let b = &density.breakpoints;
    if b.len() < 2 {
        return 0.0;
    }
    // z + h/2 crosses breakpoint i at plus[i]; z - h/2 crosses it at minus[i]
    let plus: Vec<f64> = b.iter().map(|x| x - half).collect();
    let minus: Vec<f64> = b.iter().map(|x| x + half).collect();
    let mut cuts: Vec<f64> = plus.iter().chain(&minus).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rho = |count: usize| -> f64 {
        if count == 0 || count > density.density.len() {
            0.0
        } else {
            density.density[count - 1]
        }
    };
    let (mut ip, mut im) = (0usize, 0usize);
    let mut terms = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let z = w[0];
        while ip < plus.len() && plus[ip] <= z {
            ip += 1;
        }
        while im < minus.len() && minus[im] <= z {
            im += 1;
        }
        let d = rho(ip) - rho(im);
        let width = w[1] - w[0];
        terms.push(if p == 2 { d * d * width } else { d * d * d * width });
    }
    symmetric_sum(&terms)
}

/// ∫ (L^x)^p dx.
pub fn self_lp<'a>(view: impl Into<LocalTimeView<'a>>, p: u32) -> Result<f64> {
    check_power(p)?;
    Ok(match view.into() {
        LocalTimeView::Binned(field) => {
            field.values.iter().map(|v| v.powi(p as i32)).sum::<f64>() * field.grid.dx()
        }
        LocalTimeView::Exact(density) => density
            .density
            .iter()
            .zip(density.breakpoints.windows(2))
            .map(|(d, w)| d.powi(p as i32) * (w[1] - w[0]))
            .sum(),
    })
}
