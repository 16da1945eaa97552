//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Beta, Distribution as _, StandardNormal};

use mobstat::betareg::likelihood::{evaluate, log_likelihood, BetaData};
use mobstat::betareg::published::{race_blocks, RACE_BLOCK_NAMES, RACE_POST, RACE_PRE};
use mobstat::betareg::{betareg_fit, CovariateDesign};
use mobstat::did::did_test;
use mobstat::exec::Exec;
use mobstat::forecast::{rolling_backtest_with, var_fit, var_predict_one};
use mobstat::granger::{granger_scan_with, granger_test, Direction, ScanDirection};
use mobstat::ingest::{synthesize_dataset, weekly_aggregate, SynthConfig, WeeklyPair};
use mobstat::montecarlo::{rejection_rate, replicate, replicate_rng};
use mobstat::stationarity::{kpss_test, TruncationLag};
use mobstat::stats::{dist_cdf, logistic, Distribution};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(elapsed: Duration, seconds: f64) -> bool {
    elapsed.as_secs_f64() < seconds
}

fn block_means() -> Outcome {
    let start = Instant::now();
    let published_pre = [71.8, 75.6, 84.4, 72.9, 70.7];
    let published_post = [89.6, 88.6, 94.9, 98.9, 84.8];
    let mut pass = true;
    let mut worst = Vec::new();
    for (i, (_, x)) in race_blocks().iter().enumerate() {
        let pre = 100.0 * mobstat::betareg::predict_mean(&RACE_PRE, x).unwrap();
        let post = 100.0 * mobstat::betareg::predict_mean(&RACE_POST, x).unwrap();
        let (dpre, dpost) = (pre - published_pre[i], post - published_post[i]);
        if dpre.abs() > 0.3 || dpost.abs() > 1.5 {
            pass = false;
            worst.push(format!(
                "{} pre {pre:.2} ({dpre:+.2}) post {post:.2} ({dpost:+.2})",
                RACE_BLOCK_NAMES[i]
            ));
        }
    }
    pass &= within_budget(start.elapsed(), 1.0);
    let detail = if worst.is_empty() {
        "all five blocks within ±0.3 pp pre / ±1.5 pp post".to_string()
    } else {
        format!("out of tolerance: {}", worst.join("; "))
    };
    outcome(pass, detail)
}

fn one_hot(i: usize) -> Vec<f64> {
    let mut x = vec![0.0; 5];
    x[i] = 1.0;
    x
}

fn did_fixtures() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (p1, target) in [(1, -4.8), (4, -3.6)] {
        let start = Instant::now();
        let r = did_test(
            &RACE_PRE,
            &RACE_POST,
            &one_hot(p1),
            &one_hot(0),
            100_000,
            2020,
        )
        .unwrap();
        let elapsed = start.elapsed();
        let ok = (r.delta_estimate - target).abs() <= 1.5
            && r.p_value < 0.01
            && within_budget(elapsed, 5.0);
        pass &= ok;
        parts.push(format!(
            "{}/White δ {:.2} pp (target {target}) p {:.4} in {:.2}s",
            RACE_BLOCK_NAMES[p1],
            r.delta_estimate,
            r.p_value,
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn synthetic_granger() -> Outcome {
    let start = Instant::now();
    let seeds = 200;
    let per_seed = Exec::default().map(seeds, |s| {
        let data = synthesize_dataset(&SynthConfig {
            seed: s as u64,
            ..SynthConfig::default()
        })
        .unwrap();
        let weekly = weekly_aggregate(&data.mobility, &data.fatalities, None).unwrap();
        let scans = granger_scan_with(&weekly, 3, ScanDirection::Both, Exec::Sequential).unwrap();
        let at_lag3 = |dir| {
            scans
                .iter()
                .find(|s| s.direction == dir)
                .map(|s| s.results[2].p_value)
                .unwrap()
        };
        (at_lag3(Direction::Forward), at_lag3(Direction::Reverse))
    });
    let elapsed = start.elapsed();
    let forward = per_seed.iter().filter(|(f, _)| *f < 0.01).count() as f64 / seeds as f64;
    let reverse = per_seed.iter().filter(|(_, r)| *r < 0.05).count() as f64 / seeds as f64;
    outcome(
        forward >= 0.95 && reverse <= 0.10 && within_budget(elapsed, 60.0),
        format!(
            "forward lag-3 p<0.01 in {:.1}% of seeds, reverse rejection {:.1}%, {:.1}s",
            100.0 * forward,
            100.0 * reverse,
            elapsed.as_secs_f64()
        ),
    )
}

fn kpss_calibration() -> Outcome {
    let start = Instant::now();
    let (reps, t) = (5000, 200);
    let size = rejection_rate(reps, 11, Exec::default(), |rng, _| {
        let x: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
        kpss_test(&x, TruncationLag::Auto).unwrap().reject_at_5pct
    });
    let power = rejection_rate(reps, 12, Exec::default(), |rng, _| {
        let mut level = 0.0;
        let x: Vec<f64> = (0..t)
            .map(|_| {
                level += rng.sample::<f64, _>(StandardNormal);
                level
            })
            .collect();
        kpss_test(&x, TruncationLag::Auto).unwrap().reject_at_5pct
    });
    let elapsed = start.elapsed();
    outcome(
        (0.03..=0.07).contains(&size) && power >= 0.95 && within_budget(elapsed, 30.0),
        format!(
            "null rejection {size:.4}, random-walk power {power:.4}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn betareg_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = replicate_rng(77, 0);
    let (b, phi, n) = ([1.0, -0.5], 10.0, 5000);
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.random();
        let mu = logistic(b[0] + b[1] * x);
        ys.push(
            Beta::new(mu * phi, (1.0 - mu) * phi)
                .unwrap()
                .sample(&mut rng),
        );
        rows.push(vec![x]);
    }
    let design = CovariateDesign::new(vec!["x".into()], rows.clone(), ys.clone()).unwrap();
    let fit = betareg_fit(&design).unwrap();
    let recovered = (fit.coefficients[0] - b[0]).abs() <= 0.05
        && (fit.coefficients[1] - b[1]).abs() <= 0.05
        && (fit.precision_phi / phi - 1.0).abs() <= 0.10;

    // analytic score against central differences of the log-likelihood
    let data = BetaData::new(&rows, &ys);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let mut r = replicate_rng(78, k);
        let theta = [
            r.random_range(-1.0..2.0),
            r.random_range(-2.0..1.0),
            r.random_range(0.5f64..3.5),
        ];
        let (_, grad, _) = evaluate(&data, &theta);
        for j in 0..3 {
            let h = 1e-6 * theta[j].abs().max(1.0);
            let mut up = theta;
            let mut down = theta;
            up[j] += h;
            down[j] -= h;
            let fd = (log_likelihood(&data, &up) - log_likelihood(&data, &down)) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        recovered && worst <= 1e-4 && within_budget(elapsed, 10.0),
        format!(
            "b = ({:.4}, {:.4}) [{:+.1}, {:+.1} SE from truth], φ = {:.3}; worst gradient relative error {worst:.2e}; {:.2}s",
            fit.coefficients[0],
            fit.coefficients[1],
            (fit.coefficients[0] - b[0]) / fit.standard_errors[0],
            (fit.coefficients[1] - b[1]) / fit.standard_errors[1],
            fit.precision_phi,
            elapsed.as_secs_f64()
        ),
    )
}

/// Cumulative trapezoid integral of `dist.pdf` from `from` (where the CDF is
/// `base`) to each point of the ascending `grid`.
fn trapezoid_cdf(dist: Distribution, from: f64, base: f64, grid: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let (mut x, mut acc) = (from, base);
    for &target in grid {
        let n = ((target - x) / step).ceil().max(1.0) as usize;
        let h = (target - x) / n as f64;
        let mut s = 0.5 * (dist.pdf(x) + dist.pdf(target));
        for i in 1..n {
            s += dist.pdf(x + i as f64 * h);
        }
        acc += s * h;
        x = target;
        out.push(acc);
    }
    out
}

fn distribution_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    let grid_points = 50;
    for df in [1.0, 3.0, 10.0, 30.0] {
        // symmetric about 0, so integrate from the median
        let d = Distribution::StudentT { df };
        let grid: Vec<f64> = (1..=grid_points)
            .map(|i| 6.0 * i as f64 / grid_points as f64)
            .collect();
        let oracle = trapezoid_cdf(d, 0.0, 0.5, &grid, 1e-4);
        for (x, o) in grid.iter().zip(&oracle) {
            worst = worst.max((dist_cdf(d, *x).unwrap() - o).abs());
            worst = worst.max((dist_cdf(d, -*x).unwrap() - (1.0 - o)).abs());
        }
        sets += 1;
    }
    // numerator df ≥ 2 keeps the density bounded at the origin
    for (d1, d2) in [(2.0, 5.0), (4.0, 17.0), (6.0, 30.0), (10.0, 3.0)] {
        let d = Distribution::F {
            df_num: d1,
            df_den: d2,
        };
        let grid: Vec<f64> = (1..=grid_points)
            .map(|i| 8.0 * i as f64 / grid_points as f64)
            .collect();
        let oracle = trapezoid_cdf(d, 0.0, 0.0, &grid, 1e-4);
        for (x, o) in grid.iter().zip(&oracle) {
            worst = worst.max((dist_cdf(d, *x).unwrap() - o).abs());
        }
        sets += 1;
    }
    outcome(
        worst <= 1e-6,
        format!("{sets} parameter sets × {grid_points} points, worst |Δ| {worst:.2e}"),
    )
}

const VAR_TRUE: [f64; 7] = [150.0, 0.55, -0.2, 0.1, -300.0, 200.0, -450.0];

fn var_series(seed: u64, weeks: usize, noise: f64) -> WeeklyPair {
    let mut rng = replicate_rng(seed, 0);
    let h: Vec<f64> = (0..weeks).map(|_| rng.random_range(0.2..0.6)).collect();
    let mut y: Vec<f64> = (0..3).map(|_| rng.random_range(500.0..1500.0)).collect();
    for t in 3..weeks {
        let c = &VAR_TRUE;
        let eps: f64 = rng.sample(StandardNormal);
        y.push(
            c[0] + c[1] * y[t - 1]
                + c[2] * y[t - 2]
                + c[3] * y[t - 3]
                + c[4] * h[t - 1]
                + c[5] * h[t - 2]
                + c[6] * h[t - 3]
                + noise * eps,
        );
    }
    let start = NaiveDate::from_ymd_opt(2020, 3, 2).unwrap();
    let weeks_start = (0..weeks)
        .map(|i| start + Days::new(7 * i as u64))
        .collect();
    WeeklyPair::new(weeks_start, h, y).unwrap()
}

fn var_properties() -> Outcome {
    let runs = 100;
    let failures: Vec<String> = replicate(runs, 0, Exec::default(), |_, seed| {
        let seed = seed as u64;
        // exact recovery on a noiseless series
        let exact = var_series(seed, 30, 0.0);
        let model = var_fit(&exact).unwrap();
        let coef_err = model
            .coefficient_vector()
            .iter()
            .zip(VAR_TRUE)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let backtest = rolling_backtest_with(&exact, 5, Exec::Sequential).unwrap();
        let pred_err = backtest
            .iter()
            .map(|r| (r.actual - r.predicted).abs())
            .fold(0.0, f64::max);
        let n = exact.len();
        let last = var_predict_one(
            &var_fit(&exact.truncated(n - 1)).unwrap(),
            &[exact.h_us[n - 2], exact.h_us[n - 3], exact.h_us[n - 4]],
            &[exact.deaths[n - 2], exact.deaths[n - 3], exact.deaths[n - 4]],
        )
        .unwrap();
        let exact_ok = coef_err < 1e-8
            && model.residual_se < 1e-6
            && pred_err < 1e-6
            && (last - exact.deaths[n - 1]).abs() < 1e-6;

        // anti-leakage on a noisy series: perturbing holdout week k must not
        // move predictions for holdout weeks before k
        let noisy = var_series(seed + 1000, 30, 40.0);
        let holdout = 5;
        let base = rolling_backtest_with(&noisy, holdout, Exec::Sequential).unwrap();
        let first = noisy.len() - holdout;
        let mut leak_ok = true;
        for k in 0..holdout {
            let mut perturbed = noisy.clone();
            perturbed.deaths[first + k] += 1000.0;
            perturbed.h_us[first + k] = 1.0 - perturbed.h_us[first + k];
            let moved = rolling_backtest_with(&perturbed, holdout, Exec::Sequential).unwrap();
            leak_ok &= (0..k).all(|j| moved[j].predicted == base[j].predicted);
            if k + 1 < holdout {
                // the week after the perturbation must see it
                leak_ok &= moved[k + 1].predicted != base[k + 1].predicted;
            }
        }
        match (exact_ok, leak_ok) {
            (true, true) => None,
            _ => Some(format!(
                "seed {seed}: recovery {exact_ok} (coef err {coef_err:.1e}, pred err {pred_err:.1e}), anti-leakage {leak_ok}"
            )),
        }
    })
    .into_iter()
    .flatten()
    .collect();
    let detail = if failures.is_empty() {
        format!("{runs} seeded runs: exact recovery and anti-leakage hold")
    } else {
        format!(
            "{} of {runs} runs failed; first: {}",
            failures.len(),
            failures[0]
        )
    };
    outcome(failures.is_empty(), detail)
}

fn granger_null() -> Outcome {
    let reps = 2000;
    let t = 100;
    let mut pass = true;
    let mut parts = Vec::new();
    for lag in 1..=3 {
        let rate = rejection_rate(reps, 500 + lag as u64, Exec::default(), |rng, _| {
            let x: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
            let y: Vec<f64> = (0..t).map(|_| rng.sample(StandardNormal)).collect();
            granger_test(&x, &y, lag).unwrap().p_value < 0.05
        });
        pass &= (0.03..=0.07).contains(&rate);
        parts.push(format!("lag {lag}: {rate:.4}"));
    }
    outcome(
        pass,
        format!("white-noise rejection at 5%: {}", parts.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("block means from published race models", block_means),
        ("difference-in-differences fixtures", did_fixtures),
        ("synthetic lag-3 Granger detection", synthetic_granger),
        ("KPSS size and power", kpss_calibration),
        ("beta-regression recovery and score", betareg_recovery),
        ("F / t CDF against trapezoid oracle", distribution_oracle),
        ("VAR exact recovery and anti-leakage", var_properties),
        ("Granger white-noise calibration", granger_null),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
