use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::ExperimentConfig;
use super::ensemble::{PathRecord, INCREMENT_FRACTIONS};
use crate::error::{Error, Result};
use crate::fmt17;
use crate::numerics::{ks_normal, loglog_slope, sample_moments};

/// 8√3: scale of the L³ limit law.
pub const L3_SCALE: f64 = 13.856_406_460_551_018;
/// 8/√3: scale of the L² limit law.
pub const L2_SCALE: f64 = 4.618_802_153_517_006;
/// Fewest valid records a report is built from.
pub const MIN_RECORDS: usize = 1000;
/// Large-sample standard error of the KS statistic is about this over √n.
pub const KS_SE_FACTOR: f64 = 0.26;

/// W = h^{−2}F3 / (8√3·√V3).
pub fn normalize_l3(f3: f64, v3: f64, h: f64) -> Result<f64> {
    if !(v3 > 0.0) {
        return Err(Error::Data(format!("V3 = {v3} cannot normalize")));
    }
    Ok(f3 / (h * h) / (L3_SCALE * v3.sqrt()))
}

/// W = h^{−3/2}(F2 − 4th) / ((8/√3)·√V2).
pub fn normalize_l2(f2: f64, v2: f64, h: f64, t: f64) -> Result<f64> {
    if !(v2 > 0.0) {
        return Err(Error::Data(format!("V2 = {v2} cannot normalize")));
    }
    Ok((f2 - 4.0 * t * h) / h.powf(1.5) / (L2_SCALE * v2.sqrt()))
}

/// Limit of mean[(h^{−2}F3)²] / mean[V3] (p = 3) or of
/// mean[(h^{−3/2}(F2 − 4th))²] / mean[V2] (p = 2).
pub fn second_moment_target(p: u32) -> f64 {
    if p == 3 {
        L3_SCALE * L3_SCALE
    } else {
        L2_SCALE * L2_SCALE
    }
}

/// Distributional summary of the normalized statistic at one h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub h: f64,
    pub p: u32,
    pub n: usize,
    pub n_excluded: usize,
    pub ks_d: f64,
    pub ks_p: f64,
    pub se_ks_d: f64,
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
    pub kurt: f64,
    pub se_mean: f64,
    pub se_var: f64,
    pub se_skew: f64,
    pub se_kurt: f64,
    pub second_moment_ratio: f64,
    pub se_second_moment_ratio: f64,
    pub second_moment_target: f64,
    /// Mean of h^{−2}F3 (p = 3) or of F2/h (p = 2).
    pub scaled_mean: f64,
    pub se_scaled_mean: f64,
    /// 0 (p = 3) or 4t (p = 2).
    pub scaled_mean_target: f64,
}

/// Mean of a sample after sorting, so the result ignores input order.
fn sorted_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Report entry for column `h_index` of the records. Excluded records and
/// records with a non-positive normalizer are skipped and counted.
pub fn clt_report(records: &[PathRecord], h_index: usize, h: f64, t: f64, p: u32) -> Result<ReportEntry> {
    if p != 2 && p != 3 {
        return Err(Error::usage(format!("p must be 2 or 3, got {p}")));
    }
    // (W, scaled F, scaled F², V) per valid record, sorted for order-free sums
    let mut rows: Vec<[f64; 4]> = Vec::with_capacity(records.len());
    for rec in records.iter().filter(|r| !r.excluded) {
        let row = if p == 3 {
            let (f, v) = (rec.f3[h_index], rec.v3);
            normalize_l3(f, v, h).map(|w| {
                let y = f / (h * h);
                [w, y, y * y, v]
            })
        } else {
            let (f, v) = (rec.f2[h_index], rec.v2);
            normalize_l2(f, v, h, t).map(|w| {
                let c = (f - 4.0 * t * h) / h.powf(1.5);
                [w, f / h, c * c, v]
            })
        };
        if let Ok(row) = row {
            if row.iter().all(|x| x.is_finite()) {
                rows.push(row);
            }
        }
    }
    let n = rows.len();
    if n < MIN_RECORDS {
        return Err(Error::usage(format!(
            "report needs at least {MIN_RECORDS} valid records, got {n}"
        )));
    }
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let w = col(0);
    let ks = ks_normal(&w)?;
    let m = sample_moments(&w)?;
    let scaled = sample_moments(&col(1))?;
    let (sq, v) = (col(2), col(3));
    let nf = n as f64;
    let (sq_mean, v_mean) = (sorted_mean(sq.clone()), sorted_mean(v.clone()));
    let ratio = sq_mean / v_mean;
    // delta method for the ratio of means
    let d: Vec<f64> = sq.iter().zip(&v).map(|(a, b)| (a - ratio * b) / v_mean).collect();
    let d_var = sample_moments(&d)?.variance;
    Ok(ReportEntry {
        h,
        p,
        n,
        n_excluded: records.len() - n,
        ks_d: ks.statistic,
        ks_p: ks.p_value,
        se_ks_d: KS_SE_FACTOR / nf.sqrt(),
        mean: m.mean,
        var: m.variance,
        skew: m.skewness,
        kurt: m.kurtosis,
        se_mean: m.se_mean,
        se_var: m.se_variance,
        se_skew: m.se_skewness,
        se_kurt: m.se_kurtosis,
        second_moment_ratio: ratio,
        se_second_moment_ratio: (d_var / nf).sqrt(),
        second_moment_target: second_moment_target(p),
        scaled_mean: scaled.mean,
        se_scaled_mean: scaled.se_mean,
        scaled_mean_target: if p == 3 { 0.0 } else { 4.0 * t },
    })
}

/// One named acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target,
            tolerance,
            pass: (value - target).abs() <= tolerance,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: bound,
            tolerance: 0.0,
            pass: value <= bound,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            target: 1.0,
            tolerance: 0.0,
            pass,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{:<44} {:>18} target {:>14} tol {:>10}  {}",
            self.name,
            format!("{:.10}", self.value),
            format!("{:.10}", self.target),
            format!("{:.3e}", self.tolerance),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Thresholds on the normalized statistic at the smallest h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub mean: f64,
    pub var: f64,
    pub kurt: f64,
    pub ks_d: f64,
    /// Relative tolerance of the second-moment ratio (p = 3).
    pub ratio_rel: f64,
    /// Relative tolerance of mean F2/h around 4t (p = 2).
    pub centering_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            mean: 0.05,
            var: 0.10,
            kurt: 0.3,
            ks_d: 0.05,
            ratio_rel: 0.15,
            centering_rel: 0.05,
        }
    }
}

impl ReportEntry {
    /// Normality checks of W.
    pub fn normality_checks(&self, thr: &Thresholds) -> Vec<Check> {
        let tag = format!("L{} h={}", self.p, self.h);
        vec![
            Check::within(format!("{tag} mean W"), self.mean, 0.0, thr.mean),
            Check::within(format!("{tag} var W"), self.var, 1.0, thr.var),
            Check::within(format!("{tag} kurtosis W"), self.kurt, 3.0, thr.kurt),
            Check::at_most(format!("{tag} KS D"), self.ks_d, thr.ks_d),
        ]
    }

    /// Mean of the scaled functional: within 3·SE of 0 for p = 3, within a
    /// relative tolerance of 4t for p = 2.
    pub fn centering_check(&self, thr: &Thresholds) -> Check {
        if self.p == 3 {
            Check::within(
                format!("L3 h={} mean h^-2 F3", self.h),
                self.scaled_mean,
                0.0,
                3.0 * self.se_scaled_mean,
            )
        } else {
            Check::within(
                format!("L2 h={} mean F2/h", self.h),
                self.scaled_mean,
                self.scaled_mean_target,
                thr.centering_rel * self.scaled_mean_target,
            )
        }
    }

    pub fn ratio_check(&self, thr: &Thresholds) -> Check {
        Check::within(
            format!("L{} h={} second-moment ratio", self.p, self.h),
            self.second_moment_ratio,
            self.second_moment_target,
            thr.ratio_rel * self.second_moment_target,
        )
    }

    pub fn passes(&self, thr: &Thresholds) -> bool {
        self.normality_checks(thr).iter().all(|c| c.pass)
    }
}

/// Diagnostics across the h sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    pub h: Vec<f64>,
    pub ks_d: Vec<f64>,
    /// D never rises by more than 2·SE of the difference as h decreases.
    pub ks_d_nonincreasing: bool,
    pub second_moment_ratio: Vec<f64>,
    /// Over the three smallest h, the distance of the ratio to its target
    /// never grows by more than 2·SE.
    pub ratio_toward_target: bool,
    /// Mean sup-modulus per h, when recorded.
    pub modulus_sup_mean: Option<Vec<f64>>,
    pub modulus_sup_slope: Option<f64>,
    /// (t − s, mean sup_x (L_t^x − L_s^x)), when recorded.
    pub increment_sup_mean: Option<Vec<(f64, f64)>>,
    pub increment_sup_slope: Option<f64>,
}

/// The two "monotone within error" diagnostics over a sequence of entries
/// ordered by decreasing h.
pub fn trend_flags(entries: &[ReportEntry]) -> (bool, bool) {
    let ks_ok = entries.windows(2).all(|w| {
        let se = w[0].se_ks_d.hypot(w[1].se_ks_d);
        w[1].ks_d <= w[0].ks_d + 2.0 * se
    });
    let tail = &entries[entries.len().saturating_sub(3)..];
    let ratio_ok = tail.windows(2).all(|w| {
        let dist = |e: &ReportEntry| (e.second_moment_ratio - e.second_moment_target).abs();
        dist(&w[1]) <= dist(&w[0]) + 2.0 * w[1].se_second_moment_ratio
    });
    (ks_ok, ratio_ok)
}

fn column_means(records: &[PathRecord], pick: impl Fn(&PathRecord) -> Option<&Vec<f64>>) -> Option<Vec<f64>> {
    let rows: Vec<&Vec<f64>> = records.iter().filter(|r| !r.excluded).filter_map(&pick).collect();
    let width = rows.first()?.len();
    Some(
        (0..width)
            .map(|j| sorted_mean(rows.iter().map(|r| r[j]).collect()))
            .collect(),
    )
}

/// Slope of the mean sup-modulus against h, with the means.
pub fn modulus_sup_scaling(config: &ExperimentConfig, records: &[PathRecord]) -> Option<(Vec<f64>, Result<f64>)> {
    let means = column_means(records, |r| r.modulus_sup.as_ref())?;
    let pairs: Vec<(f64, f64)> = config.h_list.iter().copied().zip(means.iter().copied()).collect();
    Some((means, loglog_slope(&pairs)))
}

/// Slope of the mean increment sup against the window length t − s.
pub fn increment_sup_scaling(config: &ExperimentConfig, records: &[PathRecord]) -> Option<(Vec<(f64, f64)>, Result<f64>)> {
    let means = column_means(records, |r| r.increment_sup.as_ref())?;
    let n = config.n_steps;
    let pairs: Vec<(f64, f64)> = INCREMENT_FRACTIONS
        .iter()
        .map(|&f| ((n as f64 * f).round().clamp(1.0, n as f64)) * config.ds())
        .zip(means)
        .collect();
    let slope = loglog_slope(&pairs);
    Some((pairs, slope))
}

/// Reports for every h of the config plus trend diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub p: u32,
    pub entries: Vec<ReportEntry>,
    pub trends: Trends,
    pub config: ExperimentConfig,
    pub n_records: usize,
    pub n_excluded: usize,
    pub under_resolved: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// JSON document: entries keyed by h, a trends block, the checks and the
    /// full config.
    pub fn to_json(&self) -> Value {
        let mut by_h = Map::new();
        for e in &self.entries {
            by_h.insert(format!("{}", e.h), serde_json::to_value(e).expect("entry serializes"));
        }
        json!({
            "p": self.p,
            "seed": self.config.seed,
            "n_records": self.n_records,
            "n_excluded": self.n_excluded,
            "under_resolved": self.under_resolved,
            "by_h": by_h,
            "trends": self.trends,
            "checks": self.checks,
            "pass": self.pass(),
            "config": self.config,
        })
    }

    /// Plot-ready CSV: one row per h.
    pub fn write_plot_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# config={}", self.config.embedded_json())?;
        writeln!(out, "h,ks_d,var,second_moment_ratio")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(e.h),
                fmt17(e.ks_d),
                fmt17(e.var),
                fmt17(e.second_moment_ratio)
            )?;
        }
        Ok(())
    }
}

/// Builds the report of the records of `config` for exponent `p`.
///
/// Checks: normality of W at the smallest h, the centering of the scaled
/// functional at the smallest h, the KS trend, and for p = 3 the
/// second-moment ratio and its trend.
pub fn sweep(config: &ExperimentConfig, records: &[PathRecord], p: u32, thr: &Thresholds) -> Result<Report> {
    if config.h_list.len() < 3 {
        return Err(Error::usage(format!(
            "a sweep needs at least 3 bandwidths, got {}",
            config.h_list.len()
        )));
    }
    let entries = config
        .h_list
        .iter()
        .enumerate()
        .map(|(i, &h)| clt_report(records, i, h, config.t, p))
        .collect::<Result<Vec<_>>>()?;
    let (ks_ok, ratio_ok) = trend_flags(&entries);
    let sup = modulus_sup_scaling(config, records);
    let inc = increment_sup_scaling(config, records);
    let trends = Trends {
        h: config.h_list.clone(),
        ks_d: entries.iter().map(|e| e.ks_d).collect(),
        ks_d_nonincreasing: ks_ok,
        second_moment_ratio: entries.iter().map(|e| e.second_moment_ratio).collect(),
        ratio_toward_target: ratio_ok,
        modulus_sup_slope: sup.as_ref().and_then(|(_, s)| s.as_ref().ok().copied()),
        modulus_sup_mean: sup.map(|(m, _)| m),
        increment_sup_slope: inc.as_ref().and_then(|(_, s)| s.as_ref().ok().copied()),
        increment_sup_mean: inc.map(|(m, _)| m),
    };
    let last = entries.last().expect("at least 3 entries");
    let mut checks = last.normality_checks(thr);
    checks.push(last.centering_check(thr));
    checks.push(Check::flag(format!("L{p} KS D non-increasing across h"), ks_ok));
    if p == 3 {
        checks.push(last.ratio_check(thr));
        checks.push(Check::flag("L3 second-moment ratio trend toward 192", ratio_ok));
    }
    let n_excluded = records.iter().filter(|r| r.excluded).count();
    Ok(Report {
        p,
        entries,
        trends,
        config: config.clone(),
        n_records: records.len(),
        n_excluded,
        under_resolved: !config.is_resolved(),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_constants() {
        assert!((L3_SCALE - 8.0 * 3f64.sqrt()).abs() < 1e-14);
        assert!((L2_SCALE - 8.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((second_moment_target(3) - 192.0).abs() < 1e-12);
        assert_eq!(normalize_l3(0.0, 2.0, 0.1).unwrap(), 0.0);
        assert_eq!(normalize_l2(0.4, 2.0, 0.1, 1.0).unwrap(), 0.0);
        let w = normalize_l3(1.0, 2.0, 0.1).unwrap();
        assert!((normalize_l3(3.0, 2.0, 0.1).unwrap() - 3.0 * w).abs() < 1e-12);
        assert!(matches!(normalize_l3(1.0, 0.0, 0.1), Err(Error::Data(_))));
    }

    #[test]
    fn check_lines() {
        let c = Check::within("x", 1.02, 1.0, 0.05);
        assert!(c.pass && c.line().ends_with("PASS"));
        assert!(!Check::at_most("d", 0.5, 0.05).pass);
    }
}
