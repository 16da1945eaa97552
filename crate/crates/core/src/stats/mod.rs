//! Shared numerical kernels: least squares with inference, nested-model
//! F-tests, differencing, the logit link and the F / Student-t
//! distributions.

pub mod dist;
pub mod link;
pub mod ols;
pub mod special;

pub use dist::{dist_cdf, dist_quantile, Distribution};
pub use link::{link_logit, logistic, logit, LinkDirection};
pub use ols::{nested_f_test, ols_fit, NestedFTest, OlsFit};

use crate::error::{Error, Result};

/// First differences: `out[i] = series[i + 1] - series[i]`.
pub fn difference(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::Size(format!(
            "differencing needs at least 2 values, got {}",
            series.len()
        )));
    }
    Ok(series.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Applies [`difference`] `order` times.
pub fn difference_n(series: &[f64], order: usize) -> Result<Vec<f64>> {
    let mut out = series.to_vec();
    for _ in 0..order {
        out = difference(&out)?;
    }
    Ok(out)
}

/// Significance stars: `***` p<0.01, `**` p<0.05, `*` p<0.1.
pub fn significance_stars(p_value: f64) -> &'static str {
    if p_value < 0.01 {
        "***"
    } else if p_value < 0.05 {
        "**"
    } else if p_value < 0.1 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differences() {
        assert_eq!(difference(&[1.0, 3.0, 6.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(difference(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(difference(&[1.0, 4.0]).unwrap().len(), 1);
        assert!(matches!(difference(&[1.0]), Err(Error::Size(_))));
        assert_eq!(
            difference_n(&[1.0, 4.0, 9.0, 16.0], 2).unwrap(),
            vec![2.0, 2.0]
        );
    }

    #[test]
    fn stars() {
        assert_eq!(significance_stars(0.001), "***");
        assert_eq!(significance_stars(0.03), "**");
        assert_eq!(significance_stars(0.07), "*");
        assert_eq!(significance_stars(0.5), "");
    }
}
