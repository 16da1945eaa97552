//! Log-likelihood, score and Hessian of the constant-precision beta
//! regression in the unconstrained parameters `θ = (b, ln φ)`.

use nalgebra::{DMatrix, DVector};

use crate::stats::logistic;
use crate::stats::special::{digamma, ln_gamma, trigamma};

/// Design with a leading intercept column plus log-transformed responses.
#[derive(Debug, Clone)]
pub struct BetaData {
    pub x: DMatrix<f64>,
    pub ln_y: Vec<f64>,
    pub ln_1my: Vec<f64>,
}

impl BetaData {
    /// `rows` exclude the intercept; responses must lie in (0,1).
    pub fn new(rows: &[Vec<f64>], response: &[f64]) -> Self {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len) + 1;
        let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
        BetaData {
            x,
            ln_y: response.iter().map(|y| y.ln()).collect(),
            ln_1my: response.iter().map(|y| (1.0 - y).ln()).collect(),
        }
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    /// Number of regression coefficients, intercept included.
    pub fn n_coef(&self) -> usize {
        self.x.ncols()
    }

    fn eta(&self, theta: &[f64], i: usize) -> f64 {
        (0..self.n_coef()).map(|j| self.x[(i, j)] * theta[j]).sum()
    }
}

pub fn log_likelihood(data: &BetaData, theta: &[f64]) -> f64 {
    let k = data.n_coef();
    let phi = theta[k].exp();
    let lg_phi = ln_gamma(phi);
    (0..data.n_obs())
        .map(|i| {
            let mu = logistic(data.eta(theta, i));
            let a = mu * phi;
            let b = (1.0 - mu) * phi;
            lg_phi - ln_gamma(a) - ln_gamma(b)
                + (a - 1.0) * data.ln_y[i]
                + (b - 1.0) * data.ln_1my[i]
        })
        .sum()
}

/// Log-likelihood, gradient and Hessian at `theta`.
pub fn evaluate(data: &BetaData, theta: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let k = data.n_coef();
    let p = k + 1;
    let phi = theta[k].exp();
    let lg_phi = ln_gamma(phi);
    let psi_phi = digamma(phi);
    let tri_phi = trigamma(phi);

    let mut ll = 0.0;
    let mut grad = DVector::zeros(p);
    let mut hess = DMatrix::zeros(p, p);
    for i in 0..data.n_obs() {
        let mu = logistic(data.eta(theta, i));
        let a = mu * phi;
        let b = (1.0 - mu) * phi;
        let (ly, l1y) = (data.ln_y[i], data.ln_1my[i]);
        let (psi_a, psi_b) = (digamma(a), digamma(b));
        let (tri_a, tri_b) = (trigamma(a), trigamma(b));
        let w = mu * (1.0 - mu);

        ll += lg_phi - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ly + (b - 1.0) * l1y;

        let resid = (ly - l1y) - (psi_a - psi_b);
        let d_mu = phi * resid;
        let d_eta = d_mu * w;
        let d_phi = psi_phi - mu * psi_a - (1.0 - mu) * psi_b + mu * ly + (1.0 - mu) * l1y;
        let d_theta = phi * d_phi;

        let d_mumu = -phi * phi * (tri_a + tri_b);
        let d_etaeta = d_mumu * w * w + d_mu * w * (1.0 - 2.0 * mu);
        let d_muphi = resid + phi * (-mu * tri_a + (1.0 - mu) * tri_b);
        let d_etatheta = w * phi * d_muphi;
        let d_phiphi = tri_phi - mu * mu * tri_a - (1.0 - mu) * (1.0 - mu) * tri_b;
        let d_thetatheta = phi * d_phi + phi * phi * d_phiphi;

        for r in 0..k {
            let xr = data.x[(i, r)];
            grad[r] += d_eta * xr;
            for c in 0..=r {
                hess[(r, c)] += d_etaeta * xr * data.x[(i, c)];
            }
            hess[(k, r)] += d_etatheta * xr;
        }
        grad[k] += d_theta;
        hess[(k, k)] += d_thetatheta;
    }
    for r in 0..p {
        for c in 0..r {
            hess[(c, r)] = hess[(r, c)];
        }
    }
    (ll, grad, hess)
}
