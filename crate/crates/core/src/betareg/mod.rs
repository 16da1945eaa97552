//! Beta regression with mean/precision parametrization, logit mean link and
//! constant precision, fit by maximum likelihood.

mod design;
mod fit;
pub mod likelihood;
pub mod published;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::logistic;

pub use design::{mean_time_home, CovariateDesign, CovariateSet, IncomeUnits};
pub use fit::{betareg_fit, betareg_fit_with, format_fit_table, BetaRegFit, BetaRegOptions};

/// Anything that supplies coefficients (intercept first) and a precision.
pub trait MeanModel {
    fn coefficients(&self) -> &[f64];
    fn precision(&self) -> f64;

    /// Number of covariates excluding the intercept.
    fn covariate_arity(&self) -> usize {
        self.coefficients().len() - 1
    }

    /// `b0 + Σ b_j x_j`; `covariates` excludes the intercept.
    fn linear_predictor(&self, covariates: &[f64]) -> f64 {
        let c = self.coefficients();
        c[0] + c[1..]
            .iter()
            .zip(covariates)
            .map(|(b, x)| b * x)
            .sum::<f64>()
    }
}

/// A plain coefficient vector plus precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaModel {
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub precision_phi: f64,
}

impl MeanModel for BetaModel {
    fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
    fn precision(&self) -> f64 {
        self.precision_phi
    }
}

/// Mean of the fitted beta distribution, `logit⁻¹(xᵀb)`.
pub fn predict_mean<M: MeanModel + ?Sized>(model: &M, covariates: &[f64]) -> Result<f64> {
    if covariates.len() != model.covariate_arity() {
        return Err(Error::Arity {
            expected: model.covariate_arity(),
            got: covariates.len(),
        });
    }
    Ok(logistic(model.linear_predictor(covariates)))
}

/// Standard beta shape parameters `(μφ, (1-μ)φ)`.
pub fn beta_density_params(mean: f64, phi: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::Domain(format!(
            "beta mean must lie in (0,1), got {mean}"
        )));
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::Domain(format!(
            "precision must be positive, got {phi}"
        )));
    }
    Ok((mean * phi, (1.0 - mean) * phi))
}

/// Variance of a beta distribution with mean `mean` and precision `phi`.
pub fn beta_variance(mean: f64, phi: f64) -> f64 {
    mean * (1.0 - mean) / (1.0 + phi)
}
