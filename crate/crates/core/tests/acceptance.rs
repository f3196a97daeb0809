//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::time::{Duration, Instant};

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use volscale::closing_time::{simulate_panel, theoretical_closing_cov, MarketSpec};
use volscale::contributions::{contrib_d, delta_i_d, euler_contrib_1d, portfolio_acov};
use volscale::estimation::sample_acov;
use volscale::scaling::{ar1_delta_d, delta_d, ma1_delta_d, ma_q_acov};
use volscale::varma::{
    contemporaneous_ratio, fit_phi1_from_moments, fit_vma1_moments, reduce_portfolio_var,
    var1_delta_d, var1_delta_d_from_sigma, var1_delta_i_d, var1_sequence, varma_acov,
    vma1_delta_d, vma1_delta_i_d,
};
use volscale::{CovSequence, Weights};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(elapsed < limit, format!("{detail}; runtime {elapsed:?} (limit {limit:?})"))
}

fn example_moments() -> (DMatrix<f64>, DMatrix<f64>) {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 0.2]));
    let corr = DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.0]);
    let auto = DMatrix::from_row_slice(2, 2, &[-0.05, 0.0, 0.0, 0.025]);
    (&d * corr * &d / 250.0, &d * auto * &d / 250.0)
}

fn half() -> Weights<f64> {
    Weights::new(vec![0.5, 0.5]).unwrap()
}

const HORIZONS: [usize; 6] = [2, 5, 10, 30, 90, 250];

fn c1_phi1_reproduction() -> Outcome {
    let (g0, g1) = example_moments();
    let start = Instant::now();
    let fit = fit_phi1_from_moments(&g0, &g1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expect = DMatrix::from_row_slice(2, 2, &[-0.0980, 0.0858, -0.0275, 0.0490]);
    let err = (&fit.phi1 - expect).amax();
    check(err <= 5e-5, format!("max entry error {err:.2e}"))?;
    within_time(elapsed, Duration::from_millis(1), format!("max entry error {err:.2e}"))
}

fn c2_scaling_table() -> Outcome {
    let (g0, g1) = example_moments();
    let var1: [f64; 6] = [1.405, 2.218, 3.134, 5.427, 9.398, 15.662];
    let ar1: [f64; 6] = [1.405, 2.214, 3.127, 5.412, 9.372, 15.619];
    let srtr = [1.414, 2.236, 3.162, 5.477, 9.487, 15.811];
    let start = Instant::now();
    let phi = fit_phi1_from_moments(&g0, &g1).map_err(|e| e.to_string())?.phi1;
    let mut worst: f64 = 0.0;
    for (idx, &d) in HORIZONS.iter().enumerate() {
        let v = var1_delta_d(&phi, &g0, &half(), d).map_err(|e| e.to_string())?;
        let a = ar1_delta_d(-0.0123f64, d).map_err(|e| e.to_string())?;
        worst = worst.max((v - var1[idx]).abs()).max((a - ar1[idx]).abs());
        let sqrt_d = (d as f64).sqrt();
        if (sqrt_d - srtr[idx]).abs() > 5e-4 {
            return Err(format!("square-root column mismatch at d={d}"));
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("max deviation {worst:.2e}");
    check(worst <= 1e-3, detail.clone())?;
    within_time(elapsed, Duration::from_millis(10), detail)
}

fn c3_contribution_table() -> Outcome {
    let (g0, g1) = example_moments();
    let table = [
        (1usize, 56.52, 43.48),
        (2, 55.39, 44.61),
        (5, 54.77, 45.23),
        (10, 54.56, 45.44),
        (30, 54.42, 45.58),
        (90, 54.37, 45.63),
        (250, 54.36, 45.64),
    ];
    let start = Instant::now();
    let phi = fit_phi1_from_moments(&g0, &g1).map_err(|e| e.to_string())?.phi1;
    let cov = var1_sequence(&phi, &g0, 249).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &(d, a, b) in &table {
        let row = contrib_d(&cov, &half(), d).map_err(|e| e.to_string())?;
        worst = worst
            .max((100.0 * row.shares[0] - a).abs())
            .max((100.0 * row.shares[1] - b).abs());
    }
    let elapsed = start.elapsed();
    let detail = format!("max deviation {worst:.4} pp");
    check(worst <= 0.01, detail.clone())?;
    within_time(elapsed, Duration::from_millis(10), detail)
}

fn c4_closing_time_monte_carlo() -> Outcome {
    let vols = DVector::from_vec(vec![1.0, 0.8, 1.2]);
    let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.3, 0.6, 1.0, 0.5, 0.3, 0.5, 1.0]);
    let d = DMatrix::from_diagonal(&vols);
    let sigma = &d * corr * &d;
    let spec = MarketSpec::new(sigma, vec![0.0, 0.25, 0.625]).map_err(|e| e.to_string())?;
    let theory = theoretical_closing_cov(&spec);
    let gamma = vec![theory.gamma0.clone(), theory.gamma1.clone()];
    let len = 100_000;
    let (mut ok01, mut total01, mut ok2, mut total2) = (0usize, 0usize, 0usize, 0usize);
    let start = Instant::now();
    for seed in 0..20u64 {
        let panel = simulate_panel(&spec, len, 8, 1_000 + seed).map_err(|e| e.to_string())?;
        let est = sample_acov(&panel, 2, false).map_err(|e| e.to_string())?;
        for k in 0..=2usize {
            let target = match k {
                0 => &theory.gamma0,
                1 => &theory.gamma1,
                _ => &DMatrix::zeros(3, 3),
            };
            for i in 0..3 {
                for j in 0..3 {
                    if k == 0 && j < i {
                        continue;
                    }
                    let se = acov_standard_error(&gamma, k, i, j, len);
                    let within = (est.lag(k).unwrap()[(i, j)] - target[(i, j)]).abs() <= 3.0 * se;
                    if k == 2 {
                        total2 += 1;
                        ok2 += within as usize;
                    } else {
                        total01 += 1;
                        ok01 += within as usize;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let f01 = ok01 as f64 / total01 as f64;
    let f2 = ok2 as f64 / total2 as f64;
    let detail = format!(
        "lag 0/1 within 3 SE: {ok01}/{total01} ({:.1}%), lag 2: {ok2}/{total2} ({:.1}%)",
        100.0 * f01,
        100.0 * f2
    );
    check(f01 >= 0.95 && f2 >= 0.95, detail.clone())?;
    within_time(elapsed, Duration::from_secs(30), detail)
}

/// Closed-form δ(d) for a zoo model.
fn closed_form_delta(model: &TestModel, w: &Weights<f64>, d: usize) -> Result<f64, String> {
    let e = |e: volscale::Error| e.to_string();
    match model {
        TestModel::WhiteNoise(m) => {
            vma1_delta_d(&DMatrix::zeros(m.dim(), m.dim()), m.sigma(), w, d).map_err(e)
        }
        TestModel::Ma(a) if a.theta.len() == 1 => Ok(ma1_delta_d(a.theta[0], d)),
        TestModel::Ma(a) => delta_d(&ma_q_acov(a, a.theta.len()).map_err(e)?, d).map_err(e),
        TestModel::Ar1(a) => ar1_delta_d(a.phi[0], d).map_err(e),
        TestModel::Vma1(m) => vma1_delta_d(&m.theta()[0], m.sigma(), w, d).map_err(e),
        TestModel::Var1(m) => var1_delta_d_from_sigma(&m.phi()[0], m.sigma(), w, d).map_err(e),
    }
}

/// Oracle δ(d): explicit summation of the d-period variance.
fn oracle_delta(model: &TestModel, w: &Weights<f64>, d: usize) -> f64 {
    let lambda = w.as_vector();
    match model {
        TestModel::Ar1(a) => {
            let phi = a.phi[0];
            let g: Vec<f64> = (0..d).map(|k| phi.powi(k as i32)).collect();
            (toeplitz_total(&g, d) / g[0]).sqrt()
        }
        TestModel::Var1(m) => {
            let phi = &m.phi()[0];
            let g0 = var1_gamma0_series(phi, m.sigma());
            let mut g = Vec::with_capacity(d);
            let mut gk = g0;
            for _ in 0..d {
                g.push(lambda.dot(&(&gk * lambda)));
                gk = phi * gk;
            }
            (toeplitz_total(&g, d) / g[0]).sqrt()
        }
        other => {
            let v = other.varma();
            let var_d = ma_sum_variance(v.theta(), v.sigma(), lambda, d);
            let var_1 = ma_sum_variance(v.theta(), v.sigma(), lambda, 1);
            (var_d / var_1).sqrt()
        }
    }
}

fn c5_oracle_equivalence() -> Outcome {
    let zoo = model_zoo(20240501);
    let mut worst: f64 = 0.0;
    for (model, w) in &zoo {
        for d in [1usize, 2, 5, 20, 250] {
            let closed = closed_form_delta(model, w, d)?;
            let oracle = oracle_delta(model, w, d);
            let rel = (closed - oracle).abs() / oracle;
            if !(rel <= 1e-10) {
                return Err(format!("{} n={} d={d}: closed {closed} oracle {oracle}", model.kind(), model.dim()));
            }
            worst = worst.max(rel);
        }
    }
    Ok(format!("{} models, max relative gap {worst:.2e}", zoo.len()))
}

fn model_sequence(model: &TestModel, max_lag: usize) -> Result<CovSequence<f64>, String> {
    varma_acov(&model.varma(), max_lag).map_err(|e| e.to_string())
}

fn c6_full_allocation() -> Outcome {
    let zoo = model_zoo(20240501);
    let (mut worst_alloc, mut worst_scaled): (f64, f64) = (0.0, 0.0);
    for (model, w) in &zoo {
        let cov = model_sequence(model, 249)?;
        let one = euler_contrib_1d(cov.gamma0(), w).map_err(|e| e.to_string())?;
        for d in [1usize, 5, 20, 250] {
            let row = contrib_d(&cov, w, d).map_err(|e| e.to_string())?;
            worst_alloc = worst_alloc.max(row.allocation_error());
            let deltas = match model {
                TestModel::Vma1(m) => vma1_delta_i_d(&m.theta()[0], m.sigma(), w, d),
                TestModel::Var1(m) => var1_delta_i_d(&m.phi()[0], cov.gamma0(), w, d),
                _ => delta_i_d(&cov, w, d),
            }
            .map_err(|e| e.to_string())?;
            for (i, di) in deltas.iter().enumerate() {
                let Some(di) = di else { continue };
                let gap = (one[i] * di - row.contributions[i]).abs() / row.sigma_d;
                worst_scaled = worst_scaled.max(gap);
            }
        }
    }
    let detail = format!(
        "{} models, max allocation gap {worst_alloc:.2e}, max δ(i,d) consistency gap {worst_scaled:.2e}",
        zoo.len()
    );
    check(worst_alloc <= 1e-10 && worst_scaled <= 1e-10, detail)
}

fn c7_square_root_degeneration() -> Outcome {
    let mut r = rng(77);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(1..=5usize);
        let g0 = random_pd(&mut r, n);
        let cov = CovSequence::new(vec![g0, DMatrix::zeros(n, n), DMatrix::zeros(n, n)])
            .map_err(|e| e.to_string())?;
        let w = random_weights(&mut r, n);
        let acf = portfolio_acov(&cov, &w).map_err(|e| e.to_string())?.acf;
        for d in [1usize, 2, 5, 10, 20, 90, 250, 365] {
            let sqrt_d = (d as f64).sqrt();
            let delta = delta_d(&acf, d).map_err(|e| e.to_string())?;
            worst = worst.max((delta - sqrt_d).abs());
            for di in delta_i_d(&cov, &w, d).map_err(|e| e.to_string())?.into_iter().flatten() {
                worst = worst.max((di - sqrt_d).abs());
            }
        }
    }
    check(worst <= 1e-12, format!("max |δ − √d| {worst:.2e}"))
}

fn c8_error_bound() -> Outcome {
    let mut r = rng(88);
    let mut max_excess = f64::NEG_INFINITY;
    let mut invalid = 0usize;
    for _ in 0..1000 {
        let d = r.random_range(2..=50usize);
        let rho: Vec<f64> = if r.random_bool(0.5) {
            // valid autocorrelations of a random MA filter
            let q = r.random_range(0..=60usize);
            let theta: Vec<f64> = (0..q).map(|_| r.random_range(-1.0..1.0)).collect();
            let acf = ma_q_acov(&volscale::scaling::ScalarArma::ma(theta, 1.0).unwrap(), d).unwrap();
            (1..d).map(|k| acf.rho(k).unwrap()).collect()
        } else {
            (1..d).map(|_| r.random_range(-1.0..=1.0)).collect()
        };
        let acf = volscale::AcfSequence::from_rho(&rho).unwrap();
        match delta_d(&acf, d) {
            Ok(delta) => {
                let excess = delta / (d as f64).sqrt() - (d as f64).sqrt();
                max_excess = max_excess.max(excess / (d as f64).sqrt());
            }
            Err(volscale::Error::NegativeRadicand { .. }) => invalid += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    let mut attained = true;
    for d in 2..=50usize {
        let acf = volscale::AcfSequence::from_rho(&vec![1.0; d - 1]).unwrap();
        let ratio = delta_d(&acf, d).unwrap() / (d as f64).sqrt();
        attained &= (ratio - (d as f64).sqrt()).abs() <= 1e-12 * ratio;
    }
    check(
        max_excess <= 1e-14 && attained,
        format!(
            "max relative excess over √d {max_excess:.2e}, {invalid} inconsistent sequences rejected, equality at ρ≡1: {attained}"
        ),
    )
}

fn c9_contemporaneous_limit() -> Outcome {
    let mut r = rng(99);
    let (mut worst, mut min_gap) = (0f64, f64::INFINITY);
    for _ in 0..50 {
        let n = r.random_range(1..=5usize);
        let theta = random_small(&mut r, n, 0.5);
        let sigma = random_pd(&mut r, n);
        let g1 = &theta * &sigma;
        let g0 = &g1 * theta.transpose() + &sigma;
        let w = random_weights(&mut r, n);
        let c = contemporaneous_ratio(&g0, &g1, &w, 1_000_000).map_err(|e| e.to_string())?;
        worst = worst.max((c.ratio_naive - 1.0).abs());
        let b = w.as_vector().dot(&(&g1 * w.as_vector()));
        if b != 0.0 {
            min_gap = min_gap.min((c.ratio_newey_west - 1.0).abs());
        }
    }
    check(
        worst < 1e-5 && min_gap > 1e-6,
        format!("max |ratio − 1| {worst:.2e}; min Newey-West gap {min_gap:.2e}"),
    )
}

fn c10_vma1_round_trip() -> Outcome {
    let mut r = rng(1010);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..=5usize);
        let theta = random_small(&mut r, n, 0.5);
        let sigma = random_pd(&mut r, n);
        let g1 = &theta * &sigma;
        let g0 = &g1 * theta.transpose() + &sigma;
        let fit = fit_vma1_moments(&g0, &g1).map_err(|e| e.to_string())?;
        let f1 = &fit.theta1 * &fit.sigma;
        let f0 = &f1 * fit.theta1.transpose() + &fit.sigma;
        worst = worst.max((f0 - &g0).norm() / g0.norm()).max((f1 - &g1).norm() / g0.norm());
    }
    check(worst <= 1e-8, format!("max Frobenius-relative residual {worst:.2e}"))
}

fn c11_reducibility() -> Outcome {
    let mut r = rng(1111);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..=5usize);
        let a = r.random_range(-0.95..0.95);
        let w = random_weights(&mut r, n);
        let got = reduce_portfolio_var(&[DMatrix::identity(n, n) * a], &w)
            .map_err(|e| e.to_string())?
            .ok_or("scalar-diagonal VAR not reduced")?;
        worst = worst.max((got[0] - a).abs());
    }
    let (g0, g1) = example_moments();
    let phi = fit_phi1_from_moments(&g0, &g1).map_err(|e| e.to_string())?.phi1;
    let example = reduce_portfolio_var(&[phi], &half()).map_err(|e| e.to_string())?;
    check(
        worst <= 1e-12 && example.is_none(),
        format!("max scalar error {worst:.2e}; example VAR(1) reducible: {}", example.is_some()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("phi1 reproduction", c1_phi1_reproduction),
        ("scaling table", c2_scaling_table),
        ("contribution table", c3_contribution_table),
        ("closing-time covariance", c4_closing_time_monte_carlo),
        ("oracle equivalence", c5_oracle_equivalence),
        ("full allocation", c6_full_allocation),
        ("square-root degeneration", c7_square_root_degeneration),
        ("error bound", c8_error_bound),
        ("contemporaneous limit", c9_contemporaneous_limit),
        ("VMA(1) moment round trip", c10_vma1_round_trip),
        ("AR reducibility", c11_reducibility),
    ];
    let mut failed = 0;
    for (idx, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", idx + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", idx + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
