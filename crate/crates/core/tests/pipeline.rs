use loctime::harness::ensemble::{embedded_config, partial_path};
use loctime::harness::report::{clt_report, trend_flags, MIN_RECORDS};
use loctime::harness::{run_ensemble, run_ensemble_to_file, sweep, ExperimentConfig, PathRecord, Thresholds};
use loctime::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn small(n_paths: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_paths,
        n_steps: 1024,
        h_list: vec![0.4, 0.2, 0.1],
        bin_ratio: 10,
        ..Default::default()
    }
}

fn csv_bytes(config: &ExperimentConfig, threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let mut buf = Vec::new();
    pool.install(|| run_ensemble(config, Some(&mut buf))).unwrap();
    buf
}

#[test]
fn same_seed_same_bytes() {
    let c = small(4);
    assert_eq!(csv_bytes(&c, 1), csv_bytes(&c, 1));
    let other = ExperimentConfig { seed: c.seed + 1, ..c.clone() };
    assert_ne!(csv_bytes(&c, 1), csv_bytes(&other, 1));
}

#[test]
fn thread_count_invariance() {
    let c = ExperimentConfig {
        compute_scaling: true,
        ..small(150)
    };
    let one = csv_bytes(&c, 1);
    for threads in [2, 3, 8] {
        assert_eq!(one, csv_bytes(&c, threads), "threads = {threads}");
    }
}

#[test]
fn audit_round_trip_from_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        out_dir: dir.path().to_path_buf(),
        compute_gamma: true,
        ..small(5)
    };
    let path = dir.path().join("records.csv");
    run_ensemble_to_file(&c, &path).unwrap();
    assert!(!partial_path(&path).exists());
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().nth(1).unwrap();
    assert!(header.starts_with("path_index,V2,V3,F2_h0,F3_h0,F2_h1,F3_h1,F2_h2,F3_h2"));
    let back = embedded_config(&text).unwrap();
    assert_eq!(back.seed, c.seed);
    assert_eq!(back.h_list, c.h_list);
    let mut again = Vec::new();
    run_ensemble(&back, Some(&mut again)).unwrap();
    assert_eq!(again, text.as_bytes());
}

#[test]
fn seventeen_significant_digits() {
    let text = String::from_utf8(csv_bytes(&small(2), 1)).unwrap();
    let row = text.lines().nth(2).unwrap();
    for field in row.split(',').skip(1) {
        let mantissa = field.split('e').next().unwrap();
        let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
        assert_eq!(digits, 17, "{field}");
        let v: f64 = field.parse().unwrap();
        assert_eq!(loctime::fmt17(v), field);
    }
}

#[test]
fn io_failure_leaves_partial_marker() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_dir").join("records.csv");
    assert!(matches!(run_ensemble_to_file(&small(2), &missing), Err(Error::Io { .. })));
    let path = dir.path().join("records.csv");
    std::fs::create_dir(&path).unwrap();
    // the rename onto a directory fails after all rows are streamed
    assert!(matches!(run_ensemble_to_file(&small(2), &path), Err(Error::Io { .. })));
    assert!(partial_path(&path).exists());
}

#[test]
fn record_invariants() {
    for r in run_ensemble(&small(40), None).unwrap() {
        assert!(!r.excluded);
        assert!(r.v2 > 0.0 && r.v3 > 0.0);
        assert!(r.f2.iter().all(|f| *f >= 0.0));
    }
}

/// Records whose normalized L³ statistic equals the given values exactly.
fn synthetic(w: &[f64], h_list: &[f64]) -> Vec<PathRecord> {
    w.iter()
        .enumerate()
        .map(|(i, &z)| {
            let v3: f64 = 1.0 + (i % 7) as f64;
            let v2: f64 = 0.5 + (i % 5) as f64;
            PathRecord {
                path_index: i as u64,
                v2,
                v3,
                f2: h_list
                    .iter()
                    .map(|&h| 4.0 * h + z * h.powf(1.5) * 8.0 / 3f64.sqrt() * v2.sqrt())
                    .collect(),
                f3: h_list.iter().map(|&h| z * h * h * 8.0 * 3f64.sqrt() * v3.sqrt()).collect(),
                gamma: None,
                clark_ocone: None,
                modulus_sup: None,
                increment_sup: None,
                excluded: false,
            }
        })
        .collect()
}

fn normal_draws(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn null_calibration() {
    let h_list = [0.4, 0.2, 0.1];
    let recs = synthetic(&normal_draws(3, 10_000), &h_list);
    for p in [2, 3] {
        for (i, &h) in h_list.iter().enumerate() {
            let e = clt_report(&recs, i, h, 1.0, p).unwrap();
            assert_eq!(e.n, 10_000);
            assert!(e.mean.abs() <= 3.0 * e.se_mean, "{e:?}");
            assert!((e.var - 1.0).abs() <= 3.0 * e.se_var, "{e:?}");
            assert!((e.kurt - 3.0).abs() <= 3.0 * e.se_kurt, "{e:?}");
            assert!(e.ks_p >= 0.01, "{e:?}");
            assert!(e.passes(&Thresholds::default()));
        }
    }
}

#[test]
fn degenerate_statistic_fails() {
    let h_list = [0.4, 0.2, 0.1];
    let recs = synthetic(&vec![0.0; 2000], &h_list);
    let e = clt_report(&recs, 2, 0.1, 1.0, 3).unwrap();
    assert_eq!(e.ks_d, 0.5);
    assert!(!e.passes(&Thresholds::default()));
}

#[test]
fn too_few_records() {
    let recs = synthetic(&normal_draws(4, MIN_RECORDS - 1), &[0.1]);
    assert!(matches!(clt_report(&recs, 0, 0.1, 1.0, 3), Err(Error::Usage(_))));
}

#[test]
fn excluded_records_are_counted_not_used() {
    let h_list = [0.4, 0.2, 0.1];
    let mut recs = synthetic(&normal_draws(5, 1500), &h_list);
    recs[3].excluded = true;
    recs[4].v3 = 0.0;
    let e = clt_report(&recs, 0, 0.4, 1.0, 3).unwrap();
    assert_eq!(e.n, 1498);
    assert_eq!(e.n_excluded, 2);
}

#[test]
fn report_is_order_free() {
    let h_list = [0.4, 0.2, 0.1];
    let mut recs = synthetic(&normal_draws(6, 3000), &h_list);
    let c = ExperimentConfig {
        h_list: h_list.to_vec(),
        ..Default::default()
    };
    let a = sweep(&c, &recs, 3, &Thresholds::default()).unwrap();
    recs.reverse();
    recs.swap(10, 2000);
    let b = sweep(&c, &recs, 3, &Thresholds::default()).unwrap();
    assert_eq!(a.entries, b.entries);
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn report_echoes_config_and_layout() {
    let h_list = [0.4, 0.2, 0.1];
    let recs = synthetic(&normal_draws(7, 1200), &h_list);
    let c = ExperimentConfig {
        h_list: h_list.to_vec(),
        ..Default::default()
    };
    let r = sweep(&c, &recs, 2, &Thresholds::default()).unwrap();
    let j = r.to_json();
    let cfg = serde_json::to_value(&c).unwrap();
    for (k, v) in cfg.as_object().unwrap() {
        assert_eq!(&j["config"][k], v, "config field {k}");
    }
    for h in ["0.4", "0.2", "0.1"] {
        let e = &j["by_h"][h];
        for key in ["ks_d", "ks_p", "n", "mean", "var", "skew", "kurt", "se_mean", "se_var", "second_moment_ratio"] {
            assert!(!e[key].is_null(), "{h} {key}");
        }
    }
    assert!(j["trends"]["ks_d_nonincreasing"].is_boolean());
    let mut plot = Vec::new();
    r.write_plot_csv(&mut plot).unwrap();
    let plot = String::from_utf8(plot).unwrap();
    assert_eq!(plot.lines().nth(1).unwrap(), "h,ks_d,var,second_moment_ratio");
    assert_eq!(plot.lines().count(), 2 + 3);
}

#[test]
fn sweep_needs_three_bandwidths() {
    let recs = synthetic(&normal_draws(8, 1200), &[0.2, 0.1]);
    let c = ExperimentConfig {
        h_list: vec![0.2, 0.1],
        ..Default::default()
    };
    assert!(matches!(sweep(&c, &recs, 3, &Thresholds::default()), Err(Error::Usage(_))));
}

#[test]
fn ks_trend_flags() {
    let h_list = [0.4, 0.2, 0.1];
    let recs = synthetic(&normal_draws(9, 4000), &h_list);
    let entries: Vec<_> = (0..3).map(|i| clt_report(&recs, i, h_list[i], 1.0, 3).unwrap()).collect();
    assert_eq!(trend_flags(&entries), (true, true));
    let mut worse = entries.clone();
    worse[2].ks_d = worse[1].ks_d + 0.05;
    assert!(!trend_flags(&worse).0);
}

#[test]
fn small_ensemble_means() {
    // loose sanity check of the means on a coarse run; the full-size check
    // lives in the acceptance target
    let c = ExperimentConfig {
        n_paths: 400,
        n_steps: 4096,
        h_list: vec![0.4, 0.2, 0.1],
        bin_ratio: 10,
        ..Default::default()
    };
    let recs = run_ensemble(&c, None).unwrap();
    let n = recs.len() as f64;
    let v3 = recs.iter().map(|r| r.v3).sum::<f64>() / n;
    assert!((v3 - 1.5).abs() < 0.15, "{v3}");
    let f3: Vec<f64> = recs.iter().map(|r| r.f3[2] / 0.01).collect();
    let m = f3.iter().sum::<f64>() / n;
    let sd = (f3.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(m.abs() <= 3.0 * sd / n.sqrt(), "{m} {sd}");
}
