//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the test harness so the report is always printed; the
//! process exits non-zero on any failure not marked as a known misprint.

use psalloc::asymptotics::{heavy_traffic_pi, Terms};
use psalloc::closed_form::{m1, m2};
use psalloc::model::{geometric_identity_residual, max_relative_difference, ModelParams, SolverConfig};
use psalloc::sim::{simulate_aggregate, simulate_detailed, SimConfig};
use psalloc::spectral::{self, a_identity_residual, d0, AKernel};
use psalloc::tables::{sig3, table1, table2, Rounding};
use psalloc::wasted::{w_mean, w_pmf, MeanBounds, WastedConfig};
use psalloc::{closed_form, ctmc, JointDistribution};

/// Heavy-traffic reference values `(exact, one-term, two-term)` for
/// `ε = 0.1, 0.05, 0.02, 0.01` and `k = 0..=3`; `None` is printed as `<0`.
const TABLE1: [[(f64, f64, Option<f64>); 4]; 4] = [
    [
        (5.40e-5, 2.20e-4, None),
        (6.96e-4, 2.20e-3, None),
        (4.63e-3, 1.10e-2, None),
        (2.10e-2, 3.67e-2, Some(1.28e-2)),
    ],
    [
        (6.28e-6, 1.37e-5, Some(1.03e-6)),
        (1.46e-4, 2.75e-4, Some(7.58e-5)),
        (1.72e-3, 2.75e-3, Some(1.31e-3)),
        (1.36e-2, 1.83e-2, Some(1.24e-2)),
    ],
    [
        (2.50e-7, 3.53e-7, Some(2.22e-7)),
        (1.34e-5, 1.76e-5, Some(1.25e-5)),
        (3.61e-4, 4.41e-4, Some(3.48e-4)),
        (6.49e-3, 7.35e-3, Some(6.40e-3)),
    ],
    [
        (1.84e-8, 2.20e-8, Some(1.79e-8)),
        (1.91e-6, 2.20e-6, Some(1.88e-6)),
        (9.96e-5, 1.10e-4, Some(9.87e-5)),
        (3.45e-3, 3.67e-3, Some(3.43e-3)),
    ],
];

/// Large-`r` reference values `(exact, asymptotic)` for `r = 5, 10, 20, 30, 40, 50`.
const TABLE2: [[(f64, f64); 4]; 6] = [
    [(2.29e-5, 9.38e-5), (1.58e-4, 4.69e-4), (6.02e-4, 1.17e-3), (1.65e-3, 1.95e-3)],
    [(1.60e-7, 3.66e-7), (1.94e-6, 3.66e-6), (1.23e-5, 1.83e-5), (5.49e-5, 6.10e-5)],
    [(2.83e-11, 4.47e-11), (6.29e-10, 8.94e-10), (7.18e-9, 8.94e-9), (5.60e-8, 5.96e-8)],
    [(9.41e-15, 1.29e-14), (3.04e-13, 3.88e-13), (5.00e-12, 5.82e-12), (5.57e-11, 5.82e-11)],
    [(4.18e-18, 5.33e-18), (1.77e-16, 2.13e-16), (3.79e-15, 4.26e-15), (5.49e-14, 5.68e-14)],
    [(2.19e-21, 2.66e-21), (1.15e-19, 1.33e-19), (3.03e-18, 3.31e-18), (5.40e-17, 5.55e-17)],
];

/// Reference cells known to disagree with their own formula. The large-`r`
/// law at `r = 50, k = 2` is `0.06 · 2^-54 = 3.3307e-18`, printed as 3.31e-18
/// while every neighbouring cell matches.
const KNOWN_MISPRINTS: [&str; 1] = ["r=50 k=2 asymptotic"];

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
    /// Failures that match [`KNOWN_MISPRINTS`] exactly.
    expected_failure: bool,
}

fn outcome(id: usize, failures: Vec<String>, summary: String) -> Outcome {
    let pass = failures.is_empty();
    let expected_failure = !pass && failures.iter().map(String::as_str).eq(KNOWN_MISPRINTS);
    let detail = if pass {
        summary
    } else {
        format!("{summary}; mismatches: {}", failures.join(", "))
    };
    Outcome {
        id,
        pass,
        detail,
        expected_failure,
    }
}

/// Three significant figures, either rounded or truncated.
fn matches3(value: f64, printed: f64) -> bool {
    let want = sig3(printed, Rounding::Nearest);
    value > 0.0 && (sig3(value, Rounding::Nearest) == want || sig3(value, Rounding::Truncate) == want)
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn criterion_1() -> Outcome {
    let rows = table1().unwrap();
    let mut bad = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let (exact, one, two) = TABLE1[i / 4][i % 4];
        let tag = format!("eps={} k={}", row.epsilon, row.k);
        if !matches3(row.exact, exact) {
            bad.push(format!("{tag} exact {:.4e}", row.exact));
        }
        if !matches3(row.one_term, one) {
            bad.push(format!("{tag} one-term {:.4e}", row.one_term));
        }
        let ok = match two {
            None => row.two_term < 0.0,
            Some(v) => matches3(row.two_term, v),
        };
        if !ok {
            bad.push(format!("{tag} two-term {:.4e}", row.two_term));
        }
    }
    outcome(1, bad, format!("{} cells x 3 columns", rows.len()))
}

fn criterion_2() -> Outcome {
    let rows = table2().unwrap();
    let mut bad = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let (exact, asym) = TABLE2[i / 4][i % 4];
        let tag = format!("r={} k={}", row.r, row.k);
        if !matches3(row.exact, exact) {
            bad.push(format!("{tag} exact"));
        }
        if !matches3(row.spectral, exact) {
            bad.push(format!("{tag} spectral"));
        }
        if sig3(row.asymptotic, Rounding::Nearest) != sig3(asym, Rounding::Nearest) {
            bad.push(format!("{tag} asymptotic"));
        }
    }
    outcome(2, bad, format!("{} cells, exact via chain and spectral solvers", rows.len()))
}

fn criterion_3() -> Outcome {
    let mut bad = Vec::new();
    let (mut worst_pair, mut worst_chain) = (0.0f64, 0.0f64);
    for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let p = ModelParams::new(1, rho).unwrap();
        let cfg = SolverConfig::default_for(&p).with_r_max(150);
        let chain = ctmc::solve_stationary(p, &cfg).unwrap();
        for r in 1..=50 {
            let zero = [
                m1::pi0_integral(rho, r, &cfg).unwrap(),
                m1::pi0_series(rho, r, &cfg).unwrap(),
                m1::pi0_integral_alt(rho, r, &cfg).unwrap(),
            ];
            let one = [
                m1::pi1(rho, r, &cfg).unwrap(),
                m1::pi1_from_pi0(rho, r, &cfg).unwrap(),
                m1::pi1_log_integral(rho, r, &cfg).unwrap(),
                m1::pi1_series(rho, r, &cfg).unwrap(),
            ];
            for (k, forms) in [(0usize, &zero[..]), (1, &one[..])] {
                for a in forms {
                    for b in forms {
                        worst_pair = worst_pair.max(rel(*a, *b));
                    }
                    worst_chain = worst_chain.max(rel(*a, chain.pi(k, r)));
                }
            }
        }
        if worst_pair > 1e-11 || worst_chain > 1e-9 {
            bad.push(format!("rho={rho}"));
        }
    }
    outcome(
        3,
        bad,
        format!("pairwise {worst_pair:.1e} (<= 1e-11), vs chain {worst_chain:.1e} (<= 1e-9)"),
    )
}

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    let (mut worst_int, mut worst_series) = (0.0f64, 0.0f64);
    for rho in [0.3, 0.5, 0.8] {
        let p = ModelParams::new(2, rho).unwrap();
        let cfg = SolverConfig::default_for(&p).with_r_max(150);
        let chain = ctmc::solve_stationary(p, &cfg).unwrap();
        for r in 0..=25 {
            let forms = [
                m2::pi0_m2(rho, r, &cfg).unwrap(),
                m2::pi1_m2(rho, r, &cfg).unwrap(),
                m2::pi2_m2(rho, r, &cfg).unwrap(),
            ];
            for (k, v) in forms.into_iter().enumerate() {
                let c = chain.pi(k, r);
                if c > 1e-12 {
                    worst_int = worst_int.max(rel(v, c));
                }
            }
            if (1..=8).contains(&r) {
                let s0 = m2::pi0_m2_series(rho, r, &cfg).unwrap();
                let s1 = m2::pi1_m2_series(rho, r, &cfg).unwrap();
                worst_series = worst_series.max(rel(s0, chain.pi(0, r))).max(rel(s1, chain.pi(1, r)));
            }
        }
        if worst_int > 1e-8 || worst_series > 1e-6 {
            bad.push(format!("rho={rho}"));
        }
    }
    outcome(
        4,
        bad,
        format!("integrals {worst_int:.1e} (<= 1e-8), series {worst_series:.1e} (<= 1e-6)"),
    )
}

fn criterion_5() -> Outcome {
    let mut bad = Vec::new();
    let (mut worst_pi, mut worst_id) = (0.0f64, 0.0f64);
    for m in 1..=4 {
        for rho in [0.3, 0.5, 0.8] {
            let p = ModelParams::new(m, rho).unwrap();
            let cfg = SolverConfig::default_for(&p);
            let chain = ctmc::solve_stationary(p, &cfg).unwrap();
            let semi = spectral::solve(p, &cfg).unwrap();
            // Rows near the cut carry each method's own truncation error.
            let d = max_relative_difference(&semi, &chain, cfg.r_max / 2, 0.0);
            worst_pi = worst_pi.max(d);
            if d > 1e-7 {
                bad.push(format!("pi m={m} rho={rho}"));
            }

            let kern = AKernel::new(p, cfg.r_max).unwrap();
            let mut id = 0.0f64;
            for r in 0..=cfg.r_max {
                for l in 0..=m {
                    id = id.max((kern.a(l, r, l) - 1.0).abs());
                    for k in l..m {
                        if r >= 1 {
                            id = id.max(rel(kern.a(k + 1, r - 1, l + 1), kern.a(k, r, l)));
                        }
                    }
                }
                id = id.max(rel(kern.a(1, r, 0), (1.0 + rho) * (r + 1) as f64));
            }
            for n in 0..=m {
                id = id.max(a_identity_residual(&kern, m, n) / kern.a(m, 0, n));
            }
            worst_id = worst_id.max(id);
            if id > 1e-12 {
                bad.push(format!("identities m={m} rho={rho}"));
            }

            let fixture = match m {
                1 => Some(rho * (1.0 - rho) / (1.0 + rho)),
                2 => Some(rho * rho * (1.0 - rho) / (1.0 + rho + rho * rho)),
                _ => None,
            };
            if let Some(f) = fixture {
                if rel(d0(&kern), f) > 4.0 * f64::EPSILON {
                    bad.push(format!("d0 m={m} rho={rho}"));
                }
            }
        }
    }
    outcome(
        5,
        bad,
        format!("spectral vs chain {worst_pi:.1e} over r <= R/2 (<= 1e-7), kernel identities {worst_id:.1e} (<= 1e-12)"),
    )
}

fn check_structure(d: &JointDistribution<f64>, tag: &str, bad: &mut Vec<String>, worst: &mut f64) {
    let rho = d.rho();
    if (d.pi(0, 0) - (1.0 - rho)).abs() > 1e-10 {
        bad.push(format!("{tag} pi(0,0)"));
    }
    for n in 0..=d.r_max - d.m() {
        let res = geometric_identity_residual(d, n).unwrap();
        *worst = worst.max(res);
        if res > 1e-9 {
            bad.push(format!("{tag} N={n}"));
            break;
        }
    }
    if d.min_value() < -1e-12 {
        bad.push(format!("{tag} negative"));
    }
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    let mut worst = 0.0;
    let mut tables = 0;
    for m in 1..=4 {
        for rho in [0.3, 0.5, 0.8] {
            let p = ModelParams::new(m, rho).unwrap();
            let cfg = SolverConfig::default_for(&p);
            let mut outs = vec![
                ("ctmc", ctmc::solve_stationary(p, &cfg).unwrap()),
                ("spectral", spectral::solve(p, &cfg).unwrap()),
            ];
            if m <= 2 {
                outs.push(("closed", closed_form::full_distribution(p, &cfg.with_r_max(30)).unwrap()));
            }
            for (name, d) in &outs {
                check_structure(d, &format!("{name} m={m} rho={rho}"), &mut bad, &mut worst);
                tables += 1;
            }
        }
    }
    outcome(6, bad, format!("{tables} tables, worst anti-diagonal residual {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let rows = table1().unwrap();
    let mut bad = Vec::new();
    let mut max_two = [0.0f64; 4];
    for (i, row) in rows.iter().enumerate() {
        let e1 = rel(row.one_term, row.exact);
        let e2 = rel(row.two_term, row.exact);
        max_two[i / 4] = max_two[i / 4].max(e2);
        if row.epsilon <= 0.02 && e2 > e1 {
            bad.push(format!("eps={} k={}", row.epsilon, row.k));
        }
    }
    if max_two[3] > max_two[1] / 5.0 {
        bad.push("order".into());
    }
    outcome(
        7,
        bad,
        format!(
            "max two-term error {:.3} at eps=0.05, {:.4} at eps=0.01",
            max_two[1], max_two[3]
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    let p = ModelParams::new(3, 0.5).unwrap();
    let table = ctmc::solve_stationary(p, &SolverConfig::default_for(&p)).unwrap();
    let cfg = SimConfig {
        seed: 2024,
        warmup_events: 100_000,
        sample_events: 2_500_000,
        replications: 4,
        ..SimConfig::default()
    };
    let agg = simulate_aggregate(p, &cfg).unwrap();
    let fit = agg.chi_square_states(&table, 1e-5).unwrap();
    if fit.rejected_at(0.01) {
        bad.push(format!("aggregate p={:.3}", fit.p_value));
    }
    let mut parts = vec![format!(
        "aggregate m=3: {} events, chi2={:.1}/{} p={:.3}",
        agg.events, fit.statistic, fit.dof, fit.p_value
    )];
    for rho in [0.3, 0.5] {
        let w = w_pmf(rho, 10, &WastedConfig::default()).unwrap();
        let sim = simulate_detailed(rho, 3, &cfg).unwrap();
        let fit = sim.chi_square_w(&w.pmf).unwrap();
        if fit.rejected_at(0.01) {
            bad.push(format!("detailed rho={rho} p={:.3}", fit.p_value));
        }
        parts.push(format!("W at rho={rho}: p={:.3}", fit.p_value));
    }
    outcome(8, bad, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let mut bad = Vec::new();
    let d = w_pmf(0.5, 30, &WastedConfig::default()).unwrap();
    let total = d.total();
    if !(1.0 - 1e-5..=1.0 + 1e-9).contains(&total) {
        bad.push(format!("sum {total}"));
    }
    let mean = w_mean(&d).mean;
    let cfg = SimConfig {
        seed: 99,
        sample_events: 2_500_000,
        replications: 4,
        ..SimConfig::default()
    };
    let ci = simulate_detailed(0.5, 1, &cfg).unwrap().mean_w.unwrap();
    if !ci.contains(mean) {
        bad.push(format!("E[W]={mean:.5} outside {:.5}±{:.5}", ci.mean, ci.half_width));
    }
    outcome(
        9,
        bad,
        format!(
            "sum p = 1 - {:.1e}, E[W]={mean:.5}, simulated {:.5}±{:.5} (99%)",
            1.0 - total,
            ci.mean,
            ci.half_width
        ),
    )
}

/// Heavy-traffic band for `E[W]`; reported, never asserted.
fn bounds_diagnostic() -> String {
    let mut parts = Vec::new();
    let d = w_pmf(0.9, 200, &WastedConfig { tol: 1e-6, ..WastedConfig::default() }).unwrap();
    let b = d.bounds();
    let mean = w_mean(&d).mean;
    parts.push(format!(
        "rho=0.9 E[W]={mean:.3} band [{:.3}, {:.3}] {}",
        b.lower,
        b.upper,
        if b.contains(mean) { "inside" } else { "outside" }
    ));
    let cfg = SimConfig {
        seed: 5,
        sample_events: 1_000_000,
        replications: 4,
        ..SimConfig::default()
    };
    let ci = simulate_detailed(0.95, 1, &cfg).unwrap().mean_w.unwrap();
    let b = MeanBounds::new(0.95);
    parts.push(format!(
        "rho=0.95 simulated E[W]={:.3}±{:.3} band [{:.3}, {:.3}] {}",
        ci.mean,
        ci.half_width,
        b.lower,
        b.upper,
        if b.contains(ci.mean) { "inside" } else { "outside" }
    ));
    parts.join("; ")
}

fn main() {
    let v = heavy_traffic_pi(3, 3, 0.01f64, 100, Terms::Two).unwrap();
    assert!(matches3(v.value, 3.43e-3), "heavy-traffic smoke check");

    let outcomes = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.expected_failure { " [known misprint in reference]" } else { "" };
        println!("criterion {}: {verdict} - {}{note}", o.id, o.detail);
    }
    println!("diagnostic (not a criterion): {}", bounds_diagnostic());
    // Failures other than the documented misprints fail the run.
    let unexpected: Vec<usize> = outcomes
        .iter()
        .filter(|o| !o.pass && !o.expected_failure)
        .map(|o| o.id)
        .collect();
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}
