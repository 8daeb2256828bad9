use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fmt17;
use crate::functionals::{clark_ocone_sum, gamma_eps, gamma_rep, modulus_lp, self_lp};
use crate::local_time::{
    binned_field, binned_window, default_stride, modulus_sup, prefix_fields, SpatialGrid,
};
use crate::path::{sample_path, BrownianPath, SeedSpec, TimeGrid};

/// Regularization used for the per-record γ_t^ε column.
pub const RECORD_GAMMA_EPS: f64 = 0.02;

/// Window lengths t − s, as fractions of t, for the increment statistic.
pub const INCREMENT_FRACTIONS: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

/// Paths handed to the worker pool at a time; rows are written in index order.
const CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_index: u64,
    /// ∫(L_t^x)² dx.
    pub v2: f64,
    /// ∫(L_t^x)³ dx.
    pub v3: f64,
    /// F2(h) for each h of the config, in order.
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    /// (γ_t^ε at [`RECORD_GAMMA_EPS`], Itô representation).
    pub gamma: Option<(f64, f64)>,
    /// Clark–Ocone sum per h.
    pub clark_ocone: Option<Vec<f64>>,
    /// sup_{x,r} |L_r^{x+h} − L_r^x| per h.
    pub modulus_sup: Option<Vec<f64>>,
    /// sup_x (L_t^x − L_s^x) per window of [`INCREMENT_FRACTIONS`].
    pub increment_sup: Option<Vec<f64>>,
    /// Numeric failure: kept in the CSV, left out of every report.
    pub excluded: bool,
}

impl PathRecord {
    fn failed(path_index: u64, n_h: usize) -> Self {
        PathRecord {
            path_index,
            v2: f64::NAN,
            v3: f64::NAN,
            f2: vec![f64::NAN; n_h],
            f3: vec![f64::NAN; n_h],
            gamma: None,
            clark_ocone: None,
            modulus_sup: None,
            increment_sup: None,
            excluded: true,
        }
    }

    fn all_finite(&self) -> bool {
        let opt = |v: &Option<Vec<f64>>| v.as_ref().is_none_or(|v| v.iter().all(|x| x.is_finite()));
        self.v2.is_finite()
            && self.v3.is_finite()
            && self.f2.iter().chain(&self.f3).all(|x| x.is_finite())
            && self.gamma.is_none_or(|(a, b)| a.is_finite() && b.is_finite())
            && opt(&self.clark_ocone)
            && opt(&self.modulus_sup)
            && opt(&self.increment_sup)
    }
}

/// Spatial grid used for one path of the experiment.
pub fn record_grid(config: &ExperimentConfig, path: &BrownianPath) -> Result<SpatialGrid> {
    SpatialGrid::covering(path, config.h_max(), config.dx())
}

fn compute_record(config: &ExperimentConfig, path: &BrownianPath) -> Result<PathRecord> {
    let grid = record_grid(config, path)?;
    let field = binned_field(path, &grid)?;
    let mut f2 = Vec::with_capacity(config.h_list.len());
    let mut f3 = Vec::with_capacity(config.h_list.len());
    for &h in &config.h_list {
        f2.push(modulus_lp(&field, h, 2)?.value);
        f3.push(modulus_lp(&field, h, 3)?.value);
    }
    let n = path.n_steps();
    let stride = default_stride(n);
    let gamma = if config.compute_gamma {
        let eps = gamma_eps(path, RECORD_GAMMA_EPS)?.value;
        Some((eps, gamma_rep(path, &grid, stride)?.value))
    } else {
        None
    };
    let clark_ocone = if config.compute_clark_ocone {
        let sums = config
            .h_list
            .iter()
            .map(|&h| clark_ocone_sum(path, &grid, h, stride).map(|s| s.value))
            .collect::<Result<Vec<_>>>()?;
        Some(sums)
    } else {
        None
    };
    let (modulus_sup_v, increment_sup_v) = if config.compute_scaling {
        let sups = config
            .h_list
            .iter()
            .map(|&h| modulus_sup(prefix_fields(path, &grid, stride)?, h))
            .collect::<Result<Vec<_>>>()?;
        let incs = INCREMENT_FRACTIONS
            .iter()
            .map(|&f| {
                let from = n - ((n as f64 * f).round() as usize).clamp(1, n);
                let window = binned_window(path, &grid, from, n)?;
                Ok(window.values.iter().copied().fold(0.0, f64::max))
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(sups), Some(incs))
    } else {
        (None, None)
    };
    Ok(PathRecord {
        path_index: path.path_index(),
        v2: self_lp(&field, 2)?,
        v3: self_lp(&field, 3)?,
        f2,
        f3,
        gamma,
        clark_ocone,
        modulus_sup: modulus_sup_v,
        increment_sup: increment_sup_v,
        excluded: false,
    })
}

/// The record of path `path_index`, independent of every other path.
/// Numeric failures yield an excluded record rather than an error.
pub fn process_path(config: &ExperimentConfig, path_index: u64) -> Result<PathRecord> {
    let grid = TimeGrid::new(config.t, config.n_steps)?;
    let path = sample_path(&SeedSpec::new(config.seed), path_index, grid);
    let n_h = config.h_list.len();
    match compute_record(config, &path) {
        Ok(rec) if rec.all_finite() => Ok(rec),
        Ok(_) | Err(Error::Range(_)) | Err(Error::Data(_)) => {
            log::warn!("path {path_index}: numeric failure, record excluded");
            Ok(PathRecord::failed(path_index, n_h))
        }
        Err(e) => Err(e),
    }
}

/// CSV header line for the records file of `config`.
pub fn csv_header(config: &ExperimentConfig) -> String {
    let mut cols = vec!["path_index".to_string(), "V2".into(), "V3".into()];
    for i in 0..config.h_list.len() {
        cols.push(format!("F2_h{i}"));
        cols.push(format!("F3_h{i}"));
    }
    if config.compute_gamma {
        cols.push("gamma_eps".into());
        cols.push("gamma_rep".into());
    }
    if config.compute_clark_ocone {
        cols.extend((0..config.h_list.len()).map(|i| format!("CO_h{i}")));
    }
    if config.compute_scaling {
        cols.extend((0..config.h_list.len()).map(|i| format!("sup_h{i}")));
        cols.extend((0..INCREMENT_FRACTIONS.len()).map(|j| format!("incsup_d{j}")));
    }
    cols.join(",")
}

pub fn csv_row(rec: &PathRecord) -> String {
    let mut cols = vec![rec.path_index.to_string(), fmt17(rec.v2), fmt17(rec.v3)];
    for (a, b) in rec.f2.iter().zip(&rec.f3) {
        cols.push(fmt17(*a));
        cols.push(fmt17(*b));
    }
    if let Some((a, b)) = rec.gamma {
        cols.push(fmt17(a));
        cols.push(fmt17(b));
    }
    for v in [&rec.clark_ocone, &rec.modulus_sup, &rec.increment_sup].into_iter().flatten() {
        cols.extend(v.iter().map(|x| fmt17(*x)));
    }
    cols.join(",")
}

/// Prefix of the comment line that carries the effective config.
pub const CONFIG_MARKER: &str = "# config=";

/// Runs every path of the experiment. Paths are evaluated in parallel on
/// the current rayon pool, but rows reach `sink` in path-index order, so the
/// output does not depend on the thread count.
pub fn run_ensemble(config: &ExperimentConfig, mut sink: Option<&mut dyn Write>) -> Result<Vec<PathRecord>> {
    config.validate()?;
    let io_err = |e| Error::io("<records stream>", e);
    if let Some(out) = sink.as_deref_mut() {
        writeln!(out, "{CONFIG_MARKER}{}", config.embedded_json()).map_err(io_err)?;
        writeln!(out, "{}", csv_header(config)).map_err(io_err)?;
    }
    let n = config.n_paths as u64;
    let mut records = Vec::with_capacity(config.n_paths);
    let mut start = 0u64;
    while start < n {
        let end = (start + CHUNK as u64).min(n);
        let chunk = (start..end)
            .into_par_iter()
            .map(|i| process_path(config, i))
            .collect::<Result<Vec<_>>>()?;
        if let Some(out) = sink.as_deref_mut() {
            for rec in &chunk {
                writeln!(out, "{}", csv_row(rec)).map_err(io_err)?;
            }
        }
        records.extend(chunk);
        start = end;
    }
    if let Some(out) = sink {
        out.flush().map_err(io_err)?;
    }
    Ok(records)
}

/// Runs the ensemble and streams its records to `path`. Rows go to
/// `<path>.partial` first, which is renamed on success; a leftover
/// `.partial` file marks an aborted run.
pub fn run_ensemble_to_file(config: &ExperimentConfig, path: &Path) -> Result<Vec<PathRecord>> {
    let partial = partial_path(path);
    let file = File::create(&partial).map_err(|e| Error::io(&partial, e))?;
    let mut out = BufWriter::new(file);
    let records = run_ensemble(config, Some(&mut out)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(&partial, source),
        e => e,
    })?;
    drop(out);
    std::fs::rename(&partial, path).map_err(|e| Error::io(path, e))?;
    Ok(records)
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Config embedded in the first line of a records CSV.
pub fn embedded_config(csv_text: &str) -> Result<ExperimentConfig> {
    let line = csv_text.lines().next().unwrap_or("");
    let json = line
        .strip_prefix(CONFIG_MARKER)
        .ok_or_else(|| Error::Data("records file has no embedded config line".into()))?;
    ExperimentConfig::from_json(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_paths: 3,
            n_steps: 512,
            h_list: vec![0.4, 0.2],
            bin_ratio: 8,
            ..Default::default()
        }
    }

    #[test]
    fn records_have_expected_signs() {
        let recs = run_ensemble(&small(), None).unwrap();
        assert_eq!(recs.len(), 3);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.path_index, i as u64);
            assert!(!r.excluded);
            assert!(r.v2 > 0.0 && r.v3 > 0.0);
            assert!(r.f2.iter().all(|f| *f >= 0.0));
        }
    }

    #[test]
    fn header_matches_rows() {
        let mut c = small();
        c.compute_gamma = true;
        c.compute_scaling = true;
        c.compute_clark_ocone = true;
        let mut buf = Vec::new();
        run_ensemble(&c, Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 + 3);
        assert_eq!(embedded_config(&text).unwrap().n_steps, 512);
        let width = lines[1].split(',').count();
        assert_eq!(width, 3 + 4 + 2 + 2 + 2 + 4);
        assert!(lines[2..].iter().all(|l| l.split(',').count() == width));
    }
}
