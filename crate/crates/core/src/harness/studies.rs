//! Per-path representation checks under grid refinement, the γ_t study and
//! the scaling study.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::ensemble::run_ensemble;
use super::report::{increment_sup_scaling, modulus_sup_scaling, Check};
use crate::error::{Error, Result};
use crate::fmt17;
use crate::functionals::{clark_ocone_sum, gamma_eps, gamma_rep, modulus_lp, reversed_tanaka_residual};
use crate::local_time::{binned_field, default_stride, SpatialGrid};
use crate::path::{refine, sample_path, BrownianPath, SeedSpec, TimeGrid};

/// Regularizations of the γ_t cross-validation, coarsest first.
pub const GAMMA_EPS_LIST: [f64; 3] = [0.1, 0.05, 0.02];

/// Refinement rounds of the representation study.
pub const REFINEMENT_ROUNDS: usize = 2;

/// Config defaults of the representation study: 50 paths, n = 2¹², h = 0.3.
pub fn representation_defaults() -> ExperimentConfig {
    ExperimentConfig {
        t: 1.0,
        h_list: vec![0.3],
        n_paths: 50,
        n_steps: 1 << 12,
        ..Default::default()
    }
}

/// One row of the residual dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub path_index: u64,
    pub quantity: String,
    pub coarse_value: f64,
    pub fine_value: f64,
    pub residual: f64,
}

/// Residuals of one path at every refinement level.
#[derive(Debug, Clone, PartialEq)]
struct PathResiduals {
    path_index: u64,
    clark_ocone: Vec<f64>,
    tanaka: Vec<f64>,
    gamma_rep: f64,
    gamma_eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationStudy {
    /// Median relative Clark–Ocone residual per level.
    pub clark_ocone_median: Vec<f64>,
    /// Median reversed-Tanaka residual per level.
    pub tanaka_median: Vec<f64>,
    /// RMS over paths of γ^ε − γ_rep per ε of [`GAMMA_EPS_LIST`].
    pub gamma_rms: Vec<f64>,
    pub rows: Vec<ResidualRow>,
    pub checks: Vec<Check>,
}

impl RepresentationStudy {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_csv<W: Write>(&self, config: &ExperimentConfig, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# config={}", config.embedded_json())?;
        writeln!(out, "path_index,quantity,coarse_value,fine_value,residual")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.path_index,
                r.quantity,
                fmt17(r.coarse_value),
                fmt17(r.fine_value),
                fmt17(r.residual)
            )?;
        }
        Ok(())
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Spatial grid of every refinement level: Δx = h/bin_ratio throughout, so
/// a round doubles the time resolution and, with the Φ stride held fixed in
/// steps, the number of Φ evaluations.
fn study_grid(config: &ExperimentConfig, path: &BrownianPath) -> Result<SpatialGrid> {
    let h = config.h_list[0];
    SpatialGrid::covering(path, h, h / config.bin_ratio as f64)
}

fn path_residuals(config: &ExperimentConfig, base: &BrownianPath) -> Result<PathResiduals> {
    let h = config.h_list[0];
    let t = config.t;
    let stride = default_stride(base.n_steps());
    let mut clark_ocone = Vec::new();
    let mut tanaka = Vec::new();
    for level in 0..=REFINEMENT_ROUNDS {
        let path = if level == 0 {
            base.clone()
        } else {
            refine(base, 1 << level)?
        };
        let grid = study_grid(config, &path)?;
        let f3 = modulus_lp(&binned_field(&path, &grid)?, h, 3)?.value;
        let co = clark_ocone_sum(&path, &grid, h, stride)?.value;
        clark_ocone.push((co - f3).abs() / (f3.abs() + h * h));
        tanaka.push(reversed_tanaka_residual(&path, &grid, 0.0, h, t)?.residual);
    }
    let grid = study_grid(config, base)?;
    let gamma_rep_v = gamma_rep(base, &grid, 1)?.value;
    let gamma_eps_v = GAMMA_EPS_LIST
        .iter()
        .map(|&e| gamma_eps(base, e).map(|g| g.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathResiduals {
        path_index: base.path_index(),
        clark_ocone,
        tanaka,
        gamma_rep: gamma_rep_v,
        gamma_eps: gamma_eps_v,
    })
}

/// Clark–Ocone, reversed-Tanaka and γ_t checks on `config.n_paths` paths
/// at bandwidth `h_list[0]`, over [`REFINEMENT_ROUNDS`] rounds of refinement.
pub fn representation_study(config: &ExperimentConfig) -> Result<RepresentationStudy> {
    config.validate()?;
    let grid = TimeGrid::new(config.t, config.n_steps)?;
    let seed = SeedSpec::new(config.seed);
    let per_path = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| path_residuals(config, &sample_path(&seed, i, grid)))
        .collect::<Result<Vec<_>>>()?;

    let levels = REFINEMENT_ROUNDS + 1;
    let med = |pick: &dyn Fn(&PathResiduals) -> &Vec<f64>| -> Vec<f64> {
        (0..levels)
            .map(|l| median(&per_path.iter().map(|p| pick(p)[l]).collect::<Vec<_>>()))
            .collect()
    };
    let clark_ocone_median = med(&|p| &p.clark_ocone);
    let tanaka_median = med(&|p| &p.tanaka);
    let gamma_rms: Vec<f64> = (0..GAMMA_EPS_LIST.len())
        .map(|k| {
            let ss: f64 = per_path.iter().map(|p| (p.gamma_eps[k] - p.gamma_rep).powi(2)).sum();
            (ss / per_path.len() as f64).sqrt()
        })
        .collect();

    let mut rows = Vec::new();
    for p in &per_path {
        for round in 1..levels {
            for (name, v) in [("clark_ocone", &p.clark_ocone), ("tanaka", &p.tanaka)] {
                rows.push(ResidualRow {
                    path_index: p.path_index,
                    quantity: format!("{name}_round{round}"),
                    coarse_value: v[round - 1],
                    fine_value: v[round],
                    residual: v[round] - v[round - 1],
                });
            }
        }
        for (k, eps) in GAMMA_EPS_LIST.iter().enumerate() {
            rows.push(ResidualRow {
                path_index: p.path_index,
                quantity: format!("gamma_eps{eps}"),
                coarse_value: p.gamma_eps[k],
                fine_value: p.gamma_rep,
                residual: p.gamma_eps[k] - p.gamma_rep,
            });
        }
    }

    let mut checks = Vec::new();
    for round in 1..levels {
        for (name, m) in [("Clark-Ocone", &clark_ocone_median), ("reversed Tanaka", &tanaka_median)] {
            checks.push(Check::at_most(
                format!("{name} median residual, round {round}"),
                m[round],
                m[round - 1],
            ));
        }
    }
    for k in 1..GAMMA_EPS_LIST.len() {
        checks.push(Check::at_most(
            format!("gamma RMS eps={} vs eps={}", GAMMA_EPS_LIST[k], GAMMA_EPS_LIST[k - 1]),
            gamma_rms[k],
            gamma_rms[k - 1],
        ));
    }
    Ok(RepresentationStudy {
        clark_ocone_median,
        tanaka_median,
        gamma_rms,
        rows,
        checks,
    })
}

/// Per-path γ_t estimates: the regularized integral at every ε of
/// [`GAMMA_EPS_LIST`] and the Itô representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPair {
    pub path_index: u64,
    pub gamma_eps: Vec<f64>,
    pub gamma_rep: f64,
}

pub fn gamma_study(config: &ExperimentConfig) -> Result<(Vec<GammaPair>, Vec<f64>)> {
    config.validate()?;
    let grid = TimeGrid::new(config.t, config.n_steps)?;
    let seed = SeedSpec::new(config.seed);
    let pairs = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(&seed, i, grid);
            let sgrid = SpatialGrid::covering(&path, config.h_max(), config.dx())?;
            let gamma_eps_v = GAMMA_EPS_LIST
                .iter()
                .map(|&e| gamma_eps(&path, e).map(|g| g.value))
                .collect::<Result<Vec<_>>>()?;
            Ok(GammaPair {
                path_index: i,
                gamma_eps: gamma_eps_v,
                gamma_rep: gamma_rep(&path, &sgrid, 1)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rms = (0..GAMMA_EPS_LIST.len())
        .map(|k| {
            let ss: f64 = pairs.iter().map(|p| (p.gamma_eps[k] - p.gamma_rep).powi(2)).sum();
            (ss / pairs.len() as f64).sqrt()
        })
        .collect();
    Ok((pairs, rms))
}

pub fn write_gamma_csv<W: Write>(config: &ExperimentConfig, pairs: &[GammaPair], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# config={}", config.embedded_json())?;
    let eps_cols: Vec<String> = GAMMA_EPS_LIST.iter().map(|e| format!("gamma_eps{e}")).collect();
    writeln!(out, "path_index,{},gamma_rep", eps_cols.join(","))?;
    for p in pairs {
        let vals: Vec<String> = p.gamma_eps.iter().map(|v| fmt17(*v)).collect();
        writeln!(out, "{},{},{}", p.path_index, vals.join(","), fmt17(p.gamma_rep))?;
    }
    Ok(())
}

/// Scaling exponents of the sup-modulus in h and of the local-time
/// increment in t − s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub h: Vec<f64>,
    pub modulus_sup_mean: Vec<f64>,
    pub modulus_sup_slope: f64,
    /// (t − s, mean sup_x (L_t^x − L_s^x)).
    pub increment_sup_mean: Vec<(f64, f64)>,
    pub increment_sup_slope: f64,
    pub checks: Vec<Check>,
}

impl ScalingStudy {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn scaling_study(config: &ExperimentConfig) -> Result<ScalingStudy> {
    let config = ExperimentConfig {
        compute_scaling: true,
        ..config.clone()
    };
    let records = run_ensemble(&config, None)?;
    scaling_from_records(&config, &records)
}

pub fn scaling_from_records(config: &ExperimentConfig, records: &[super::PathRecord]) -> Result<ScalingStudy> {
    let missing = || Error::usage("records carry no scaling statistics");
    let (sup_mean, sup_slope) = modulus_sup_scaling(config, records).ok_or_else(missing)?;
    let (inc_mean, inc_slope) = increment_sup_scaling(config, records).ok_or_else(missing)?;
    let (sup_slope, inc_slope) = (sup_slope?, inc_slope?);
    let checks = vec![
        Check::within("sup-modulus log-log slope in h", sup_slope, 0.5, 0.15),
        Check::within("increment sup log-log slope in t-s", inc_slope, 0.5, 0.1),
    ];
    Ok(ScalingStudy {
        h: config.h_list.clone(),
        modulus_sup_mean: sup_mean,
        modulus_sup_slope: sup_slope,
        increment_sup_mean: inc_mean,
        increment_sup_slope: inc_slope,
        checks,
    })
}
