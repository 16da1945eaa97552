use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::design::CovariateDesign;
use super::likelihood::{evaluate, log_likelihood, BetaData};
use super::MeanModel;
use crate::error::{Error, Result};
use crate::stats::dist::t_two_sided_p;
use crate::stats::{logistic, logit, significance_stars};

/// Eigenvalues below this fraction of the largest are treated as zero when
/// inverting the information matrix. Race shares summing to one alongside
/// an intercept leave one exactly flat direction.
const PINV_TOLERANCE: f64 = 1e-10;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaRegOptions {
    /// Convergence when the gradient max-norm drops below this times
    /// `max(1, |log-likelihood|)`, so the bound tracks rounding in large fits.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BetaRegOptions {
    fn default() -> Self {
        BetaRegOptions {
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRegFit {
    /// `constant` followed by the covariate names.
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub precision_phi: f64,
    pub standard_errors: Vec<f64>,
    pub phi_standard_error: f64,
    pub p_values: Vec<f64>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted step, starting value first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_likelihood_trace: Vec<f64>,
}

impl MeanModel for BetaRegFit {
    fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
    fn precision(&self) -> f64 {
        self.precision_phi
    }
}

pub fn betareg_fit(design: &CovariateDesign) -> Result<BetaRegFit> {
    betareg_fit_with(design, &BetaRegOptions::default())
}

/// Newton ascent on `(b, ln φ)` with step halving, started from least
/// squares on the logit-transformed responses.
pub fn betareg_fit_with(design: &CovariateDesign, options: &BetaRegOptions) -> Result<BetaRegFit> {
    let k = design.covariate_names.len() + 1;
    let n = design.n_obs();
    if n <= k + 1 {
        return Err(Error::InsufficientObservations {
            needed: k + 2,
            got: n,
        });
    }
    if let Some((index, &value)) = design
        .response
        .iter()
        .enumerate()
        .find(|(_, y)| **y <= 0.0 || **y >= 1.0)
    {
        return Err(Error::Boundary { index, value });
    }

    let data = BetaData::new(&design.rows, &design.response);
    let mut theta = initial_values(&data, &design.response);
    let mut ll = log_likelihood(&data, &theta);
    let mut trace = vec![ll];
    let mut iterations = 0;

    let (mut grad, mut hess);
    loop {
        let (current, g, h) = evaluate(&data, &theta);
        ll = current;
        grad = g;
        hess = h;
        let gnorm = grad.amax();
        if gnorm < options.tolerance * ll.abs().max(1.0) {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(Error::Convergence {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;

        let info = -&hess;
        let direction = pseudo_solve(&info, &grad, true);
        let slack = 1e-13 * ll.abs().max(1.0);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(direction.iter())
                .map(|(t, d)| t + step * d)
                .collect();
            let cand_ll = log_likelihood(&data, &candidate);
            if cand_ll.is_finite() && cand_ll >= ll - slack {
                accepted = Some((candidate, cand_ll));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((candidate, cand_ll)) => {
                theta = candidate;
                trace.push(cand_ll.max(ll));
            }
            None => {
                return Err(Error::Convergence {
                    iterations,
                    gradient_norm: gnorm,
                })
            }
        }
    }

    let covariance = pseudo_inverse(&(-&hess));
    let phi = theta[k].exp();
    let df = (n - k - 1) as f64;
    let standard_errors: Vec<f64> = (0..k).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    let p_values = (0..k)
        .map(|j| {
            let t = theta[j] / standard_errors[j];
            if t.is_finite() {
                t_two_sided_p(t, df)
            } else {
                Ok(f64::NAN)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut names = vec!["constant".to_string()];
    names.extend(design.covariate_names.iter().cloned());
    Ok(BetaRegFit {
        coefficient_names: names,
        coefficients: theta[..k].to_vec(),
        precision_phi: phi,
        standard_errors,
        phi_standard_error: phi * covariance[(k, k)].max(0.0).sqrt(),
        p_values,
        log_likelihood: ll,
        n_obs: n,
        converged: true,
        iterations,
        gradient_norm: grad.amax(),
        log_likelihood_trace: trace,
    })
}

/// Least squares of logit(y) on the design for `b`; method of moments on
/// those residuals for `φ`.
fn initial_values(data: &BetaData, response: &[f64]) -> Vec<f64> {
    let n = data.n_obs();
    let k = data.n_coef();
    let z = DVector::from_iterator(n, response.iter().map(|&y| logit(y)));
    let xtx = data.x.transpose() * &data.x;
    let xtz = data.x.transpose() * &z;
    let b = pseudo_solve(&xtx, &xtz, false);
    let fitted = &data.x * &b;
    let resid = &z - &fitted;
    let sigma2 = resid.norm_squared() / (n - k) as f64;
    let phi_sum: f64 = fitted
        .iter()
        .map(|&eta| {
            let mu = logistic(eta);
            let w = mu * (1.0 - mu);
            w / (sigma2 * w * w) - 1.0
        })
        .sum();
    let phi0 = phi_sum / n as f64;
    let phi0 = if phi0.is_finite() && phi0 > 0.0 {
        phi0
    } else {
        1.0
    };
    let mut theta: Vec<f64> = b.iter().copied().collect();
    theta.push(phi0.ln());
    theta
}

/// Solves `A d = g` for symmetric `A` through its eigen-decomposition,
/// dropping near-null directions. With `ascent`, negative eigenvalues are
/// flipped so `d` is always an ascent direction for `g`.
fn pseudo_solve(a: &DMatrix<f64>, g: &DVector<f64>, ascent: bool) -> DVector<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.amax();
    let mut d = DVector::zeros(g.len());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lambda = if ascent { lambda.abs() } else { lambda };
        if lambda.abs() <= PINV_TOLERANCE * scale {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        d += v * (v.dot(g) / lambda);
    }
    d
}

fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let scale = eig.eigenvalues.amax();
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= PINV_TOLERANCE * scale {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        out += v * v.transpose() / lambda;
    }
    out
}

/// Coefficient table with standard errors and significance stars.
pub fn format_fit_table(fits: &[(&str, &BetaRegFit)]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<18}", "Variable");
    for (label, _) in fits {
        let _ = write!(out, "{label:>22}");
    }
    out.push('\n');
    let names = fits
        .first()
        .map(|(_, f)| f.coefficient_names.clone())
        .unwrap_or_default();
    // intercept last, as a "constant" row
    let order: Vec<usize> = (1..names.len()).chain(std::iter::once(0)).collect();
    for &j in &order {
        let _ = write!(out, "{:<18}", names[j]);
        for (_, f) in fits {
            let cell = format!(
                "{:.4}{} ({:.3})",
                f.coefficients[j],
                significance_stars(f.p_values[j]),
                f.standard_errors[j]
            );
            let _ = write!(out, "{cell:>22}");
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<18}", "phi");
    for (_, f) in fits {
        let _ = write!(out, "{:>22.3}", f.precision_phi);
    }
    out.push('\n');
    let _ = write!(out, "{:<18}", "N");
    for (_, f) in fits {
        let _ = write!(out, "{:>22}", f.n_obs);
    }
    out.push('\n');
    let _ = write!(out, "{:<18}", "log-likelihood");
    for (_, f) in fits {
        let _ = write!(out, "{:>22.3}", f.log_likelihood);
    }
    out.push('\n');
    out.push_str("*** p<0.01, ** p<0.05, * p<0.1\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::betareg::predict_mean;
    use crate::montecarlo::replicate_rng;
    use rand::Rng;
    use rand_distr::{Beta, Distribution};

    fn simulate(seed: u64, n: usize, b: [f64; 2], phi: f64) -> CovariateDesign {
        let mut rng = replicate_rng(seed, 0);
        let mut rows = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random_range(0.0..1.0);
            let mu = logistic(b[0] + b[1] * x);
            ys.push(
                Beta::new(mu * phi, (1.0 - mu) * phi)
                    .unwrap()
                    .sample(&mut rng),
            );
            rows.push(vec![x]);
        }
        CovariateDesign::new(vec!["x".into()], rows, ys).unwrap()
    }

    #[test]
    fn recovers_generating_parameters() {
        let fit = betareg_fit(&simulate(1, 5000, [1.0, -0.5], 10.0)).unwrap();
        assert!(fit.converged && fit.gradient_norm < 1e-8 * fit.log_likelihood.abs());
        assert!(
            (fit.coefficients[0] - 1.0).abs() < 0.05,
            "{:?}",
            fit.coefficients
        );
        assert!(
            (fit.coefficients[1] + 0.5).abs() < 0.05,
            "{:?}",
            fit.coefficients
        );
        assert!(
            (fit.precision_phi / 10.0 - 1.0).abs() < 0.1,
            "{}",
            fit.precision_phi
        );
        assert!(fit.standard_errors.iter().all(|s| *s > 0.0 && *s < 0.1));
    }

    #[test]
    fn likelihood_never_decreases() {
        let fit = betareg_fit(&simulate(2, 400, [0.2, 1.5], 4.0)).unwrap();
        for w in fit.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        }
        assert!(fit.log_likelihood_trace.len() >= 2);
    }

    #[test]
    fn intercept_only_symmetric_data() {
        let ys = vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.45, 0.55];
        let d = CovariateDesign::new(vec![], vec![vec![]; ys.len()], ys.clone()).unwrap();
        let fit = betareg_fit(&d).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-6, "{}", fit.coefficients[0]);
        let mu = predict_mean(&fit, &[]).unwrap();
        assert!((mu - 0.5).abs() < 1e-6);
        let (lo, hi) = ys
            .iter()
            .fold((1.0f64, 0.0f64), |(l, h), y| (l.min(*y), h.max(*y)));
        assert!(mu > lo && mu < hi);
    }

    #[test]
    fn collinear_race_shares_still_fit() {
        let mut rng = replicate_rng(5, 0);
        let truth = [1.2, -0.4, -0.2, 0.3, -0.3, -0.5];
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..2000 {
            let g: [f64; 5] = std::array::from_fn(|_| -rng.random_range(1e-9f64..1.0).ln());
            let s: f64 = g.iter().sum();
            let x: Vec<f64> = g.iter().map(|v| v / s).collect();
            let eta = truth[0] + truth[1..].iter().zip(&x).map(|(b, v)| b * v).sum::<f64>();
            let mu = logistic(eta);
            ys.push(
                Beta::new(mu * 14.0, (1.0 - mu) * 14.0)
                    .unwrap()
                    .sample(&mut rng),
            );
            rows.push(x);
        }
        let names = ["white", "black", "hispanic", "asian", "natives_others"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let fit = betareg_fit(&CovariateDesign::new(names, rows, ys).unwrap()).unwrap();
        // only intercept + share combinations are identified
        for i in 0..5 {
            let est = fit.coefficients[0] + fit.coefficients[i + 1];
            assert!(
                (est - (truth[0] + truth[i + 1])).abs() < 0.15,
                "block {i}: {est}"
            );
        }
        assert!((fit.precision_phi / 14.0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn boundary_and_size_errors() {
        let d = CovariateDesign::new(
            vec!["x".into()],
            vec![vec![0.1]; 5],
            vec![0.2, 0.3, 1.0, 0.4, 0.5],
        )
        .unwrap();
        assert!(matches!(
            betareg_fit(&d),
            Err(Error::Boundary { index: 2, .. })
        ));
        assert!(betareg_fit(&d.clone().with_boundary_adjustment()).is_ok());
        let tiny = CovariateDesign::new(vec!["x".into()], vec![vec![0.1]; 3], vec![0.2, 0.3, 0.4])
            .unwrap();
        assert!(matches!(
            betareg_fit(&tiny),
            Err(Error::InsufficientObservations { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_gradient() {
        let opts = BetaRegOptions {
            tolerance: 1e-8,
            max_iterations: 0,
        };
        match betareg_fit_with(&simulate(3, 200, [0.0, 1.0], 5.0), &opts) {
            Err(Error::Convergence {
                iterations,
                gradient_norm,
            }) => {
                assert_eq!(iterations, 0);
                assert!(gradient_norm > 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let fit = betareg_fit(&simulate(4, 300, [0.5, 0.5], 8.0)).unwrap();
        let json = serde_json::to_string(&fit).unwrap();
        let back: BetaRegFit = serde_json::from_str(&json).unwrap();
        assert_eq!(back.coefficients, fit.coefficients);
        assert_eq!(back.precision_phi, fit.precision_phi);
        let table = format_fit_table(&[("pre", &fit)]);
        assert!(table.lines().any(|l| l.starts_with("constant")));
    }
}
