use loctime::functionals::{
    clark_ocone_sum, gamma_eps, gamma_rep, modulus_lp, phi_terms, self_lp, Estimator,
};
use loctime::harness::studies::median;
use loctime::local_time::{
    binned_field, binned_prefix, breakpoint_density, default_stride, SpatialGrid,
};
use loctime::numerics::{ks_normal, sample_moments};
use loctime::numerics::stats::ks_against;
use loctime::path::{antithetic, sample_path, BrownianPath, SeedSpec, TimeGrid};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn path(seed: u64, index: u64, n: usize) -> BrownianPath {
    sample_path(&SeedSpec::new(seed), index, TimeGrid::new(1.0, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn antithetic_l3_cancels(seed in any::<u64>(), n in 16usize..600, k in 1i64..12) {
        let p = path(seed, 0, n);
        let q = antithetic(&p);
        let dx = 0.02;
        let h = k as f64 * dx;
        let g = SpatialGrid::covering(&p, h, dx).unwrap();
        let gq = g.mirrored();
        let a = modulus_lp(&binned_field(&p, &g).unwrap(), h, 3).unwrap();
        let b = modulus_lp(&binned_field(&q, &gq).unwrap(), h, 3).unwrap();
        prop_assert_eq!(a.estimator, Estimator::Binned);
        prop_assert!((a.value + b.value).abs() <= 1e-10);
        let ea = modulus_lp(&breakpoint_density(&p), h, 3).unwrap();
        let eb = modulus_lp(&breakpoint_density(&q), h, 3).unwrap();
        prop_assert_eq!(ea.value + eb.value, 0.0);
    }

    #[test]
    fn nonnegativity_and_mass(seed in any::<u64>(), n in 16usize..600, k in 1i64..12) {
        let p = path(seed, 1, n);
        let dx = 0.025;
        let h = k as f64 * dx;
        let g = SpatialGrid::covering(&p, h, dx).unwrap();
        let f = binned_field(&p, &g).unwrap();
        prop_assert!((f.mass() - 1.0).abs() <= 1e-12);
        prop_assert!(modulus_lp(&f, h, 2).unwrap().value >= 0.0);
        prop_assert!(self_lp(&f, 2).unwrap() >= 0.0);
        prop_assert!(self_lp(&f, 3).unwrap() >= 0.0);
        let d = breakpoint_density(&p);
        prop_assert!((d.total_mass() - 1.0).abs() <= 1e-12);
        prop_assert!(modulus_lp(&d, h, 2).unwrap().value >= 0.0);
    }

    #[test]
    fn phi_sign_pattern(seed in any::<u64>(), k in 2i64..10, step in 1usize..63) {
        let n = 512;
        let p = path(seed, 2, n);
        let dx = 0.02;
        let h = k as f64 * dx;
        let g = SpatialGrid::covering(&p, h, dx).unwrap();
        let i = step * 8;
        let field = binned_prefix(&p, &g, i).unwrap();
        let s = phi_terms(&field, p.values()[i], h, 1.0).unwrap();
        prop_assert!(s.signs_ok(), "{:?}", s);
    }

    #[test]
    fn gamma_eps_is_odd(seed in any::<u64>(), n in 16usize..300) {
        let p = path(seed, 3, n);
        let a = gamma_eps(&p, 0.05).unwrap().value;
        let b = gamma_eps(&antithetic(&p), 0.05).unwrap().value;
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn breakpoint_and_binned_agree_on_ramp() {
    let n = 500;
    let g = TimeGrid::new(1.0, n).unwrap();
    let p = BrownianPath::from_values(g, (0..=n).map(|i| 0.8 * i as f64 / n as f64).collect()).unwrap();
    let h = 0.2;
    let grid = SpatialGrid::covering(&p, h, h / 20.0).unwrap();
    let a = modulus_lp(&binned_field(&p, &grid).unwrap(), h, 3).unwrap().value;
    let b = modulus_lp(&breakpoint_density(&p), h, 3).unwrap().value;
    assert!((a - b).abs() <= 0.02 * b.abs().max(1e-300) || (a - b).abs() < 1e-12, "{a} {b}");
}

#[test]
fn breakpoint_and_binned_converge_with_time_resolution() {
    // the exact density of a piecewise-linear path has spikes where the
    // increments are small, so agreement improves only as n grows
    let h = 0.2;
    let mut medians = Vec::new();
    for n in [1024, 4096, 16384] {
        let mut rel = Vec::new();
        for i in 0..100 {
            let p = path(20_240_601, i, n);
            let g = SpatialGrid::covering(&p, h, h / 20.0).unwrap();
            let a = modulus_lp(&binned_field(&p, &g).unwrap(), h, 3).unwrap().value;
            let d = breakpoint_density(&p);
            let b = modulus_lp(&d, h, 3).unwrap().value;
            let scale = h * h * 8.0 * 3f64.sqrt() * self_lp(&d, 3).unwrap().sqrt();
            rel.push((a - b).abs() / scale);
        }
        medians.push(median(&rel));
    }
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
    assert!(medians[2] < 0.02, "{medians:?}");
}

#[test]
fn gamma_rep_is_centered() {
    let n = 1024;
    let vals: Vec<f64> = (0..1000)
        .map(|i| {
            let p = path(77, i, n);
            let g = SpatialGrid::covering(&p, 0.1, 0.02).unwrap();
            gamma_rep(&p, &g, 4).unwrap().value
        })
        .collect();
    let m = sample_moments(&vals).unwrap();
    assert!(m.mean.abs() <= 3.0 * m.se_mean, "{m:?}");
    let z = path(1, 0, 16);
    let flat = BrownianPath::from_values(*z.grid(), vec![0.0; 17]).unwrap();
    let g = SpatialGrid::spanning(-1.0, 1.0, 0.1).unwrap();
    assert_eq!(gamma_rep(&flat, &g, 1).unwrap().value, 0.0);
}

#[test]
fn clark_ocone_sum_centered_and_odd() {
    let n = 1024;
    let h = 0.3;
    let mut sums = Vec::new();
    for i in 0..200 {
        let p = path(91, i, n);
        let g = SpatialGrid::covering(&p, h, 0.015).unwrap();
        let s = clark_ocone_sum(&p, &g, h, 4).unwrap();
        assert!(s.n_phi >= 128);
        assert!(s.samples.iter().all(|x| x.signs_ok()));
        if i < 10 {
            let q = antithetic(&p);
            let t = clark_ocone_sum(&q, &g.mirrored(), h, 4).unwrap();
            assert!(
                (s.value + t.value).abs() <= 1e-9 * (s.value.abs() + t.value.abs()),
                "{} {}",
                s.value,
                t.value
            );
        }
        sums.push(s.value);
    }
    let m = sample_moments(&sums).unwrap();
    assert!(m.mean.abs() <= 3.0 * m.se_mean, "{m:?}");
}

#[test]
fn gaussian_kurtosis() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m = sample_moments(&x).unwrap();
    assert!((m.kurtosis - 3.0).abs() < 0.1);
}

#[test]
fn ks_critical_value_under_null() {
    // D ≤ 1.63/√n is the 1% critical value; allow 2 of 200 seeds above it
    let mut above = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        if ks_normal(&x).unwrap().statistic > 0.0163 {
            above += 1;
        }
    }
    assert!(above <= 2, "{above}");
}

#[test]
fn ks_p_values_are_uniform_under_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p: Vec<f64> = (0..1000)
        .map(|_| {
            let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
            ks_normal(&x).unwrap().p_value
        })
        .collect();
    let d = ks_against(&p, |u| u.clamp(0.0, 1.0)).unwrap().statistic;
    assert!(d <= 0.06, "{d}");
}

#[test]
fn default_stride_gives_enough_phi_samples() {
    for n in [1024, 4096, 100_000] {
        let s = default_stride(n);
        assert_eq!(n % s, 0);
        assert!(n / s >= 128 && n / s <= 256);
    }
}
