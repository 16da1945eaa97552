//! Ordinary least squares via Householder QR, and the nested-model F-test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dist::{t_two_sided_p, Distribution};
use crate::error::{Error, Result};

/// Columns whose remaining norm after orthogonalization falls below this
/// fraction of the largest column norm are treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// Intercept first when the design carries one.
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// Total sum of squares about the response mean.
    pub tss: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub coefficient_standard_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adjusted_r2: f64,
}

impl OlsFit {
    pub fn df_residual(&self) -> usize {
        self.n_obs - self.n_params
    }

    /// `sqrt(RSS / (n - k))`.
    pub fn residual_standard_error(&self) -> f64 {
        (self.rss / self.df_residual() as f64).sqrt()
    }
}

/// Builds an `n × (1 + columns.len())` design with a leading intercept.
pub fn design_with_intercept(columns: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::Arity {
            expected: n,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(n, columns.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            columns[j - 1][i]
        }
    }))
}

/// Least-squares fit of `response` on the columns of `design`.
pub fn ols_fit(design: &DMatrix<f64>, response: &[f64]) -> Result<OlsFit> {
    let (n, k) = design.shape();
    if response.len() != n {
        return Err(Error::Arity {
            expected: n,
            got: response.len(),
        });
    }
    if n <= k {
        return Err(Error::InsufficientObservations {
            needed: k + 1,
            got: n,
        });
    }

    let max_col_norm = (0..k)
        .map(|j| design.column(j).norm())
        .fold(0.0_f64, f64::max);
    let tol = RANK_TOLERANCE * max_col_norm.max(f64::MIN_POSITIVE);

    let mut a = design.clone();
    let mut qty = response.to_vec();
    let mut v = vec![0.0; n];
    for j in 0..k {
        let norm = (j..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(Error::Singular { column: j });
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        for i in j..n {
            v[i] = a[(i, j)];
        }
        v[j] -= alpha;
        let vnorm2: f64 = (j..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 > 0.0 {
            for c in j..k {
                let dot: f64 = (j..n).map(|i| v[i] * a[(i, c)]).sum();
                let s = 2.0 * dot / vnorm2;
                for i in j..n {
                    a[(i, c)] -= s * v[i];
                }
            }
            let dot: f64 = (j..n).map(|i| v[i] * qty[i]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in j..n {
                qty[i] -= s * v[i];
            }
        }
    }

    // back substitution R b = (Q^T y)[..k]
    let mut coefficients = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = qty[j];
        for c in (j + 1)..k {
            acc -= a[(j, c)] * coefficients[c];
        }
        coefficients[j] = acc / a[(j, j)];
    }

    // R^{-1}, upper triangular
    let mut r_inv = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        r_inv[(j, j)] = 1.0 / a[(j, j)];
        for i in (0..j).rev() {
            let mut acc = 0.0;
            for m in (i + 1)..=j {
                acc += a[(i, m)] * r_inv[(m, j)];
            }
            r_inv[(i, j)] = -acc / a[(i, i)];
        }
    }

    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let fitted: f64 = (0..k).map(|j| design[(i, j)] * coefficients[j]).sum();
            response[i] - fitted
        })
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|y| (y - mean).powi(2)).sum();
    let df = (n - k) as f64;
    let sigma2 = rss / df;

    let mut coefficient_standard_errors = Vec::with_capacity(k);
    let mut t_statistics = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        // diag of (X^T X)^{-1} = row norms of R^{-1}
        let d: f64 = (j..k).map(|c| r_inv[(j, c)].powi(2)).sum();
        let se = (sigma2 * d).sqrt();
        let t = coefficients[j] / se;
        coefficient_standard_errors.push(se);
        t_statistics.push(t);
        p_values.push(if t.is_nan() {
            f64::NAN
        } else {
            t_two_sided_p(t, df)?
        });
    }

    let (r2, adjusted_r2) = if tss > 0.0 {
        (1.0 - rss / tss, 1.0 - (rss / df) / (tss / (n as f64 - 1.0)))
    } else {
        (f64::NAN, f64::NAN)
    };

    Ok(OlsFit {
        coefficients,
        residuals,
        rss,
        tss,
        n_obs: n,
        n_params: k,
        coefficient_standard_errors,
        t_statistics,
        p_values,
        r2,
        adjusted_r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedFTest {
    pub f_statistic: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub p_value: f64,
}

/// Joint F-test that the regressors in `unrestricted` but not `restricted`
/// are all zero. Both fits must share the response vector.
pub fn nested_f_test(restricted: &OlsFit, unrestricted: &OlsFit) -> Result<NestedFTest> {
    if restricted.n_obs != unrestricted.n_obs {
        return Err(Error::Arity {
            expected: unrestricted.n_obs,
            got: restricted.n_obs,
        });
    }
    if unrestricted.n_params <= restricted.n_params {
        return Err(Error::Config(format!(
            "unrestricted model ({} params) must strictly contain the restricted model ({} params)",
            unrestricted.n_params, restricted.n_params
        )));
    }
    if unrestricted.n_obs <= unrestricted.n_params {
        return Err(Error::InsufficientObservations {
            needed: unrestricted.n_params + 1,
            got: unrestricted.n_obs,
        });
    }
    let slack = 1e-12 * restricted.rss.max(1.0);
    if restricted.rss + slack < unrestricted.rss {
        return Err(Error::Domain(format!(
            "restricted RSS {} below unrestricted RSS {}; models are not nested",
            restricted.rss, unrestricted.rss
        )));
    }
    f_test_from_rss(
        restricted.rss,
        unrestricted.rss,
        unrestricted.n_params - restricted.n_params,
        unrestricted.n_obs - unrestricted.n_params,
    )
}

/// `F = ((RSS_r - RSS_u) / p) / (RSS_u / df_den)` with its upper-tail p-value.
pub fn f_test_from_rss(
    rss_restricted: f64,
    rss_unrestricted: f64,
    df_num: usize,
    df_den: usize,
) -> Result<NestedFTest> {
    if df_den == 0 {
        return Err(Error::InsufficientObservations { needed: 1, got: 0 });
    }
    let gain = (rss_restricted - rss_unrestricted).max(0.0);
    let f_statistic = if gain == 0.0 {
        0.0
    } else if rss_unrestricted <= 0.0 {
        f64::INFINITY
    } else {
        (gain / df_num as f64) / (rss_unrestricted / df_den as f64)
    };
    let p_value = Distribution::F {
        df_num: df_num as f64,
        df_den: df_den as f64,
    }
    .sf(f_statistic)?;
    Ok(NestedFTest {
        f_statistic,
        df_num,
        df_den,
        p_value,
    })
}
