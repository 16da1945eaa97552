//! Reference beta-regression models fitted on national CBG data for
//! February 2020 (pre) and April 2020 (post). Used as fixtures and as
//! built-in models for the difference-in-differences command.
//!
//! Race covariates are shares in the order white, black, hispanic, asian,
//! natives+others. Median income is in dollars.

use super::{BetaModel, MeanModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedModel {
    pub name: &'static str,
    /// Intercept first.
    pub coefficient_names: &'static [&'static str],
    pub coefficients: &'static [f64],
    pub precision_phi: f64,
    pub n_obs: usize,
}

impl PublishedModel {
    pub fn to_model(&self) -> BetaModel {
        BetaModel {
            coefficient_names: self
                .coefficient_names
                .iter()
                .map(|s| s.to_string())
                .collect(),
            coefficients: self.coefficients.to_vec(),
            precision_phi: self.precision_phi,
        }
    }
}

impl MeanModel for PublishedModel {
    fn coefficients(&self) -> &[f64] {
        self.coefficients
    }
    fn precision(&self) -> f64 {
        self.precision_phi
    }
}

const RACE_NAMES: &[&str] = &[
    "constant",
    "white",
    "black",
    "hispanic",
    "asian",
    "natives_others",
];
const RACE_INCOME_NAMES: &[&str] = &[
    "constant",
    "white",
    "black",
    "hispanic",
    "asian",
    "natives_others",
    "median_income",
];
const AGE_NAMES: &[&str] = &["constant", "older50"];
const N_CBGS: usize = 201_917;

pub const RACE_PRE: PublishedModel = PublishedModel {
    name: "race_pre",
    coefficient_names: RACE_NAMES,
    coefficients: &[1.39, -0.45, -0.27, 0.29, -0.40, -0.51],
    precision_phi: 14.5,
    n_obs: N_CBGS,
};

pub const RACE_POST: PublishedModel = PublishedModel {
    name: "race_post",
    coefficient_names: RACE_NAMES,
    coefficients: &[2.5, -0.48, -0.56, 0.39, 1.87, -0.93],
    precision_phi: 5.8,
    n_obs: N_CBGS,
};

pub const RACE_INCOME_PRE: PublishedModel = PublishedModel {
    name: "race_income_pre",
    coefficient_names: RACE_INCOME_NAMES,
    coefficients: &[1.43, -0.43, -0.29, 0.27, -0.29, -0.52, -9.9e-7],
    precision_phi: 14.6,
    n_obs: N_CBGS,
};

pub const RACE_INCOME_POST: PublishedModel = PublishedModel {
    name: "race_income_post",
    coefficient_names: RACE_INCOME_NAMES,
    coefficients: &[2.13, -0.61, -0.3, 0.7, 0.87, -0.79, 9.9e-6],
    precision_phi: 6.34,
    n_obs: N_CBGS,
};

pub const AGE_PRE: PublishedModel = PublishedModel {
    name: "age_pre",
    coefficient_names: AGE_NAMES,
    coefficients: &[0.98, 0.09],
    precision_phi: 14.2,
    n_obs: N_CBGS,
};

pub const AGE_POST: PublishedModel = PublishedModel {
    name: "age_post",
    coefficient_names: AGE_NAMES,
    coefficients: &[2.39, -0.28],
    precision_phi: 5.5,
    n_obs: N_CBGS,
};

/// `(pre, post)` pair by family name: `race`, `race-income` or `age`.
pub fn by_family(family: &str) -> Option<(PublishedModel, PublishedModel)> {
    match family {
        "race" => Some((RACE_PRE, RACE_POST)),
        "race-income" => Some((RACE_INCOME_PRE, RACE_INCOME_POST)),
        "age" => Some((AGE_PRE, AGE_POST)),
        _ => None,
    }
}

pub const RACE_BLOCK_NAMES: [&str; 5] = ["White", "Black", "Hispanic", "Asian", "Natives+Others"];

/// One-hot racially homogeneous blocks.
pub fn race_blocks() -> Vec<(String, Vec<f64>)> {
    RACE_BLOCK_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut x = vec![0.0; 5];
            x[i] = 1.0;
            (name.to_string(), x)
        })
        .collect()
}
