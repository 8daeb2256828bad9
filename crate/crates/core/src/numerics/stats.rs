//! Sample moments, the Kolmogorov–Smirnov normality test and log–log
//! regression.

use serde::{Deserialize, Serialize};

use super::special::normal_cdf;
use crate::error::{Error, Result};

/// Moments of a sample together with their large-sample standard errors.
///
/// `kurtosis` is the raw standardized fourth moment (3 for a Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_skewness: f64,
    pub se_kurtosis: f64,
}

pub fn sample_moments(samples: &[f64]) -> Result<MomentSummary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::usage(format!("moments need at least 2 samples, got {n}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite value in moment sample".into()));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let variance = m2 * nf / (nf - 1.0);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    Ok(MomentSummary {
        n,
        mean,
        variance,
        skewness,
        kurtosis,
        se_mean: (variance / nf).sqrt(),
        se_variance: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        // normal-theory errors for the shape statistics
        se_skewness: (6.0 / nf).sqrt(),
        se_kurtosis: (24.0 / nf).sqrt(),
    })
}

/// Outcome of a one-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Kolmogorov survival function Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small λ
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (0..8)
            .map(|k| ((2 * k + 1) as f64).powi(2) * y)
            .map(f64::exp)
            .sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Tests `samples` against N(0, 1).
///
/// The p-value uses the asymptotic Kolmogorov distribution evaluated at
/// Stephens' finite-n argument (√n + 0.12 + 0.11/√n)·D.
pub fn ks_normal(samples: &[f64]) -> Result<KsResult> {
    ks_against(samples, normal_cdf)
}

pub fn ks_against<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::usage(format!("KS test needs n >= 8, got {n}")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Data("NaN in KS sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sn = nf.sqrt();
    let p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
    Ok(KsResult {
        statistic: d.clamp(0.0, 1.0),
        p_value,
        n,
    })
}

/// Ordinary least-squares slope of log y against log x.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::usage("log-log regression needs positive finite pairs"));
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let nf = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if logs.len() < 2 || sxx <= 0.0 {
        return Err(Error::usage("log-log regression needs at least 2 distinct x values"));
    }
    Ok(sxy / sxx)
}
