use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    Forward,
    Inverse,
}

/// Logit link: forward maps (0,1) to the real line, inverse maps back.
pub fn link_logit(direction: LinkDirection, value: f64) -> Result<f64> {
    match direction {
        LinkDirection::Forward => {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Domain(format!(
                    "logit is defined on (0,1), got {value}"
                )));
            }
            Ok(logit(value))
        }
        LinkDirection::Inverse => Ok(logistic(value)),
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Numerically stable `1 / (1 + exp(-x))`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
