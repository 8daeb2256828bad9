mod common;

use loctime::functionals::{gamma_eps, modulus_lp, self_lp};
use loctime::harness::identities::{g_squared_integral, tail_k_quadrature};
use loctime::local_time::{binned_field, SpatialGrid};
use loctime::numerics::special::{g_kernel, normal_cdf, tail_k};
use loctime::path::{BrownianPath, TimeGrid};

#[test]
fn moment_oracles_match_closed_forms() {
    assert!((common::v3_mean(1.0) - 1.5).abs() < 1e-6);
    assert!((common::v3_mean(2.0) - 6.0).abs() < 1e-5);
    let v2 = 8.0 / (3.0 * (2.0 * std::f64::consts::PI).sqrt());
    assert!((common::v2_mean(1.0) - v2).abs() < 1e-9);
    assert!((v2 - 1.06385).abs() < 1e-5);
}

#[test]
fn f2_centering_oracle() {
    // E F2(h)/h approaches 4t from below
    let r: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h| common::f2_mean(1.0, h) / h).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]));
    assert!((r[3] - 3.843723).abs() < 1e-5, "{r:?}");
    assert!(r[3] < 4.0 && r[3] > 0.95 * 4.0);
}

#[test]
fn normal_cdf_quantile_by_quadrature() {
    let x = 1.959964;
    let oracle = 0.5 + common::simpson(common::normal_density, 0.0, x, 10_000);
    assert!((oracle - 0.975).abs() < 1e-6);
    assert!((normal_cdf(x) - oracle).abs() < 1e-12);
    assert_eq!(normal_cdf(0.0), 0.5);
}

#[test]
fn tail_k_against_independent_quadrature() {
    for a in [0.0, 1e-6, 0.01, 0.1, 1.0, 10.0, 100.0] {
        let oracle = common::tail_k(a);
        let lib = tail_k(a).unwrap();
        assert!((lib - oracle).abs() < 1e-8, "a = {a}: {lib} vs {oracle}");
        assert!((tail_k_quadrature(a).unwrap() - oracle).abs() < 1e-8);
    }
}

#[test]
fn g_squared_against_midpoint_sum() {
    for h in [0.1, 1.0] {
        let oracle = common::g_squared_midpoint(h, 1200);
        assert!((oracle / (h.powi(4) / 2.0) - 1.0).abs() < 1e-4, "{oracle}");
        assert!((g_squared_integral(h).unwrap() / (h.powi(4) / 2.0) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn g_kernel_symmetries() {
    let pts = [-0.7, -0.31, -0.05, 0.0, 0.12, 0.4, 0.95];
    for &x in &pts {
        for &y in &pts {
            for h in [0.2, 0.5, 1.0] {
                let g = g_kernel(x, y, h).unwrap();
                assert_eq!(g, g_kernel(y, x, h).unwrap());
                assert_eq!(g, g_kernel(-x, -y, h).unwrap());
            }
        }
    }
}

#[test]
fn gamma_eps_unit_slope() {
    // ∫₀¹ (p₁(u) − p₁(0)) du: the inner integral ∫₀^u p'_1(u − s) ds is p₁(0) − p₁(u) with the
    // sign of p'_1(x) = −x p₁(x)
    let oracle = common::simpson(|u| common::normal_density(u) - common::normal_density(0.0), 0.0, 1.0, 1000);
    assert!((oracle + 0.057597).abs() < 1e-6, "{oracle}");
    let n = 4000;
    let g = TimeGrid::new(1.0, n).unwrap();
    let p = BrownianPath::from_values(g, (0..=n).map(|i| i as f64 / n as f64).collect()).unwrap();
    let est = gamma_eps(&p, 1.0).unwrap().value;
    assert!((est - oracle).abs() < 1e-4, "{est} vs {oracle}");
}

#[test]
fn indicator_field_values() {
    let n = 1000;
    let g = TimeGrid::new(1.0, n).unwrap();
    let p = BrownianPath::from_values(g, (0..=n).map(|i| i as f64 / n as f64).collect()).unwrap();
    let grid = SpatialGrid::spanning(-0.5, 1.5, 0.01).unwrap();
    let f = binned_field(&p, &grid).unwrap();
    assert!(modulus_lp(&f, 0.2, 3).unwrap().value.abs() < 1e-12);
    assert!((modulus_lp(&f, 0.2, 2).unwrap().value - 0.4).abs() < 1e-12);
    assert!((self_lp(&f, 3).unwrap() - 1.0).abs() < 1e-12);
}
