//! F and Student-t distribution functions via the regularized incomplete
//! beta function.

use super::special::{beta_inc, ln_gamma};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    F { df_num: f64, df_den: f64 },
    StudentT { df: f64 },
}

impl Distribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::F { df_num, df_den } => df_num > 0.0 && df_den > 0.0,
            Distribution::StudentT { df } => df > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "degrees of freedom must be positive: {self:?}"
            )))
        }
    }

    /// Probability density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::F {
                df_num: d1,
                df_den: d2,
            } => {
                if x <= 0.0 {
                    return if x == 0.0 && d1 == 2.0 { 1.0 } else { 0.0 };
                }
                let ln_b = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
                let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
                    - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
                    - ln_b;
                ln.exp()
            }
            Distribution::StudentT { df } => {
                let ln = ln_gamma((df + 1.0) / 2.0)
                    - ln_gamma(df / 2.0)
                    - 0.5 * (df * std::f64::consts::PI).ln()
                    - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln();
                ln.exp()
            }
        }
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Distribution::F {
                df_num: d1,
                df_den: d2,
            } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    beta_inc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))
                }
            }
            Distribution::StudentT { df } => {
                if x.is_infinite() {
                    return if x > 0.0 { 1.0 } else { 0.0 };
                }
                let x2 = x * x;
                // near zero df/(df+x²) rounds towards 1, so use the
                // complementary argument there
                let tail = if x2 < df {
                    0.5 - 0.5 * beta_inc(0.5, df / 2.0, x2 / (df + x2))
                } else {
                    0.5 * beta_inc(df / 2.0, 0.5, df / (df + x2))
                };
                if x > 0.0 {
                    1.0 - tail
                } else {
                    tail
                }
            }
        }
    }

    fn sf_unchecked(&self, x: f64) -> f64 {
        match *self {
            Distribution::F {
                df_num: d1,
                df_den: d2,
            } => {
                if x <= 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    beta_inc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))
                }
            }
            Distribution::StudentT { .. } => self.cdf_unchecked(-x),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.cdf_unchecked(x))
    }

    /// Upper tail `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.sf_unchecked(x))
    }

    /// Inverse CDF by bracketing and bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        self.validate()?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile level {q} outside [0,1]")));
        }
        let (mut lo, mut hi) = match self {
            Distribution::F { .. } => {
                if q == 0.0 {
                    return Ok(0.0);
                }
                (0.0, 1.0)
            }
            Distribution::StudentT { .. } => {
                if q == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                (-1.0, 1.0)
            }
        };
        if q == 1.0 {
            return Ok(f64::INFINITY);
        }
        while self.cdf_unchecked(hi) < q {
            lo = hi;
            hi *= 2.0;
        }
        while self.cdf_unchecked(lo) > q {
            hi = lo;
            lo *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_unchecked(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * mid.abs().max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// CDF of `dist` at `x`.
pub fn dist_cdf(dist: Distribution, x: f64) -> Result<f64> {
    dist.cdf(x)
}

pub fn dist_quantile(dist: Distribution, q: f64) -> Result<f64> {
    dist.quantile(q)
}

/// Two-sided p-value for a t-statistic.
pub fn t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    let d = Distribution::StudentT { df };
    Ok((2.0 * d.sf(t.abs())?).min(1.0))
}
