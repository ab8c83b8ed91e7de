//! Frozen values from independent derivations.

use psalloc::asymptotics::{boundary_layer_q0, boundary_layer_q1_m1, heavy_traffic_pi, tail_pi, Terms};
use psalloc::closed_form::{m1, m2};
use psalloc::model::{
    geometric_identity_residual, normalization_residual, Method, ModelParams, SolverConfig,
};
use psalloc::spectral::{self, a_identity_residual, compute_a, d0, AKernel};
use psalloc::{ctmc, Error};

fn cfg(m: usize, rho: f64) -> SolverConfig<f64> {
    SolverConfig::default_for(&ModelParams::new(m, rho).unwrap())
}

#[test]
fn validation() {
    assert!(ModelParams::new(3, 0.5).is_ok());
    assert!(matches!(ModelParams::new(3, 1.0), Err(Error::Unstable { .. })));
    assert!(matches!(ModelParams::new(0, 0.5), Err(Error::MOutOfRange { .. })));
}

#[test]
fn anti_diagonal_and_normalization() {
    let p = ModelParams::new(3, 0.5).unwrap();
    let d = ctmc::solve_stationary(p, &cfg(3, 0.5)).unwrap();
    // 0.5 · 0.5^8
    assert!(geometric_identity_residual(&d, 8).unwrap() <= 1e-10);
    assert!((d.pi(0, 0) - 0.5).abs() < 1e-14);
    assert!(matches!(
        geometric_identity_residual(&d, d.r_max + 1),
        Err(Error::Truncation { .. })
    ));

    let p = ModelParams::new(1, 0.5).unwrap();
    let d = ctmc::solve_stationary(p, &cfg(1, 0.5).with_r_max(60)).unwrap();
    assert!(normalization_residual(&d).unwrap().residual <= 1e-10);
    let d = m1::full_distribution_m1(0.5, &cfg(1, 0.5).with_r_max(60)).unwrap();
    assert!(normalization_residual(&d).unwrap().residual <= 1e-10);

    let p = ModelParams::new(2, 0.8).unwrap();
    let d = spectral::solve(p, &cfg(2, 0.8).with_r_max(200)).unwrap();
    assert_eq!(d.method, Method::Spectral);
    assert!(normalization_residual(&d).unwrap().residual <= 1e-8);
}

#[test]
fn one_space_values() {
    let c = cfg(1, 0.5);
    // u - ln u between 1 and 3/2
    let exact = 0.5 * (0.5 - 1.5f64.ln());
    assert!((exact - 0.0472674).abs() < 1e-7);
    for v in [
        m1::pi0_integral(0.5, 1, &c).unwrap(),
        m1::pi0_series(0.5, 1, &c).unwrap(),
        m1::pi0_integral_alt(0.5, 1, &c).unwrap(),
        0.25 - m1::pi1(0.5, 0, &c).unwrap(),
    ] {
        assert!((v / exact - 1.0).abs() < 1e-13);
    }
    let a = m1::pi0_integral(0.5, 30, &c).unwrap();
    assert!((a / m1::pi0_series(0.5, 30, &c).unwrap() - 1.0).abs() < 1e-10);
    let c3 = cfg(1, 0.3);
    let a = m1::pi0_integral_alt(0.3, 5, &c3).unwrap();
    assert!((a / m1::pi0_series(0.3, 5, &c3).unwrap() - 1.0).abs() < 1e-12);
    assert!((m1::pi1(0.5, 0, &c).unwrap() - 0.2027326).abs() < 1e-7);

    let mut prev = f64::INFINITY;
    for r in 1..40 {
        let scaled = m1::pi0_integral_alt(0.05, r, &c).unwrap() / 0.05f64.powi(r as i32 + 1);
        assert!(scaled < prev);
        prev = scaled;
    }
}

#[test]
fn one_space_tails() {
    let c = cfg(1, 0.5);
    for r in [200usize, 800] {
        let scale = 0.5 * 0.5f64.powi(r as i32 + 1);
        let t0 = r as f64 * m1::pi0_series(0.5, r, &c).unwrap() / scale;
        let t1 = m1::pi1_series(0.5, r, &c).unwrap() / scale;
        assert!((t0 - 1.0).abs() < 3.0 / r as f64, "{t0}");
        assert!((t1 - 1.0).abs() < 3.0 / r as f64, "{t1}");
    }
}

#[test]
fn two_space_values() {
    let p = ModelParams::new(2, 0.5).unwrap();
    let c = cfg(2, 0.5);
    let d = ctmc::solve_stationary(p, &c).unwrap();
    assert!((m2::pi0_m2(0.5, 1, &c).unwrap() / d.pi(0, 1) - 1.0).abs() < 1e-8);
    assert!((m2::pi1_m2(0.5, 3, &c).unwrap() / d.pi(1, 3) - 1.0).abs() < 1e-8);
    assert!((m2::pi0_m2_series(0.5, 1, &c).unwrap() / m2::pi0_m2(0.5, 1, &c).unwrap() - 1.0).abs() < 1e-6);
    assert!(m2::pi0_m2_series(0.5, 9, &c).is_err());
}

#[test]
fn two_space_tails() {
    let rho = 0.5;
    let p = ModelParams::new(2, rho).unwrap();
    let c = cfg(2, rho).with_r_max(700);
    let d = ctmc::solve_stationary(p, &c).unwrap();
    for r in [100usize, 300] {
        let base = (1.0 - rho) * rho.powi(r as i32 + 2);
        let t1 = r as f64 * d.pi(1, r) / (2.0 * base);
        let t2 = d.pi(2, r) / base;
        assert!((t1 - 1.0).abs() < 10.0 / r as f64, "r={r} {t1}");
        assert!((t2 - 1.0).abs() < 10.0 / r as f64, "r={r} {t2}");
    }
    let r = 300;
    assert!((m2::pi2_m2(rho, r, &c).unwrap() / d.pi(2, r) - 1.0).abs() < 1e-8);
}

#[test]
fn kernel_values() {
    let p = ModelParams::<f64>::new(2, 0.5).unwrap();
    assert_eq!(compute_a(&p, 1, 2, 0), 4.5);
    assert!((compute_a(&p, 2, 1, 0) - 6.0).abs() < 1e-14);
    let k = AKernel::new(p, 10).unwrap();
    assert!(a_identity_residual(&k, 2, 1) <= 1e-12);
    assert_eq!(a_identity_residual(&k, 2, 2), 0.0);
    assert!((d0(&k) - 1.0 / 14.0).abs() < 1e-16);
    let k1 = AKernel::new(ModelParams::<f64>::new(1, 0.5).unwrap(), 10).unwrap();
    assert!((d0(&k1) - 1.0 / 6.0).abs() < 1e-16);
    let p3 = ModelParams::new(3, 0.8).unwrap();
    let k3 = AKernel::new(p3, 10).unwrap();
    assert!(a_identity_residual(&k3, 3, 2) <= 1e-12);

    // d(0) for m = 3 is consistent with the reconstructed table.
    let p = ModelParams::new(3, 0.5).unwrap();
    let c = cfg(3, 0.5);
    let kern = AKernel::new(p, c.r_max).unwrap();
    let dseq = spectral::solve_d(p, &kern, &c).unwrap();
    assert!((dseq.d(0) / d0(&kern) - 1.0).abs() < 1e-12);
    let table = spectral::reconstruct_pi(&kern, &dseq).unwrap();
    assert!((table.pi(0, 0) - 0.5).abs() < 1e-12);
    for r in 1..20 {
        assert!((dseq.d(r) / table.pi(0, r) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn heavy_traffic_cells() {
    let one = heavy_traffic_pi(3, 3, 0.1f64, 10, Terms::One).unwrap().value;
    assert!((one - 0.0367879).abs() < 1e-7);
    let two = heavy_traffic_pi(3, 3, 0.1f64, 10, Terms::Two).unwrap().value;
    assert!((two - 0.0128758).abs() < 1e-7);
    assert!(heavy_traffic_pi(3, 0, 0.1f64, 10, Terms::Two).unwrap().negative);
    assert!(matches!(
        heavy_traffic_pi::<f64>(3, 3, 0.1, 0, Terms::One),
        Err(Error::Domain(_))
    ));
}

#[test]
fn tail_law_cells() {
    assert!((tail_pi(3, 0, 0.5f64, 5).unwrap() - 9.375e-5).abs() < 1e-18);
    assert!((tail_pi(3, 3, 0.5f64, 5).unwrap() - 1.953125e-3).abs() < 1e-15);
    // 0.5 · 0.5^53 · 50^-1 · 3
    let v = tail_pi(3, 2, 0.5f64, 50).unwrap();
    assert!((v - 0.06 * 0.5f64.powi(54)).abs() < 1e-30);
    assert_eq!(format!("{v:.2e}"), "3.33e-18");
}

#[test]
fn boundary_layer() {
    let c = cfg(1, 0.5);
    assert!((boundary_layer_q0(1, 0, 1, &c).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-12);
    assert!(boundary_layer_q0(3, 0, 1, &c).is_err());

    // Leading term against the chain at ε = 1e-3; Q⁽⁰⁾ is the limit of π/ε.
    let eps = 1e-3;
    for m in [1usize, 2] {
        let p = ModelParams::new(m, 1.0 - eps).unwrap();
        let d = ctmc::solve_stationary(p, &SolverConfig::default_for(&p)).unwrap();
        for k in 0..=m {
            for r in 0..4 {
                if k == 0 && r == 0 {
                    continue;
                }
                let q = boundary_layer_q0(m, k, r, &c).unwrap();
                let ratio = d.pi(k, r) / eps / q;
                assert!((ratio - 1.0).abs() < 0.01, "m={m} k={k} r={r} ratio {ratio}");
            }
        }
        // First correction for m = 1: π/ε ≈ Q⁽⁰⁾ + ε Q⁽¹⁾.
        if m == 1 {
            for (k, r) in [(0, 2), (1, 1)] {
                let q0 = boundary_layer_q0(1, k, r, &c).unwrap();
                let q1 = boundary_layer_q1_m1(k, r, &c).unwrap();
                let err1 = (d.pi(k, r) / eps - q0).abs();
                let err2 = (d.pi(k, r) / eps - q0 - eps * q1).abs();
                assert!(err2 < err1 / 10.0, "k={k} r={r}");
            }
        }
    }
}

#[test]
fn boundary_layer_matching() {
    // r^{m-k} Q⁽⁰⁾(k,r) k!/m! → 1 with an O(1/r) error.
    let c = cfg(2, 0.5);
    let fact = |n: usize| (1..=n).product::<usize>() as f64;
    for (m, k) in [(1usize, 0usize), (1, 1), (2, 0), (2, 1), (2, 2)] {
        let gap = |r: usize| {
            let v = (r as f64).powi((m - k) as i32) * boundary_layer_q0(m, k, r, &c).unwrap() * fact(k) / fact(m);
            (v - 1.0).abs()
        };
        let (g20, g40) = (gap(20), gap(40));
        assert!(g40 < 0.65 * g20 && g40 < 0.2, "m={m} k={k}: {g20} {g40}");
    }
}
