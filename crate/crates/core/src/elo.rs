//! Advance probabilities from Club Elo ratings.
//!
//! A single match is won with probability `1 / (1 + 10^(-d/s))` where `d` is
//! the rating difference. A two-legged tie exchanges points on the aggregate,
//! which scales the exponent by √2. No home-advantage term is applied.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TieKind;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("scaling parameter must be positive and finite, got {0}")]
pub struct ScalingError(pub f64);

/// The logistic spread `s`. Larger values flatten probabilities toward ½.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Scaling(f64);

impl Scaling {
    pub const CLUB_ELO: Scaling = Scaling(400.0);

    pub fn new(s: f64) -> Result<Self, ScalingError> {
        if s.is_finite() && s > 0.0 {
            Ok(Scaling(s))
        } else {
            Err(ScalingError(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling::CLUB_ELO
    }
}

impl TryFrom<f64> for Scaling {
    type Error = ScalingError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Scaling::new(value)
    }
}

impl From<Scaling> for f64 {
    fn from(s: Scaling) -> Self {
        s.0
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn logistic(exponent: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-exponent))
}

/// Probability that the first team wins a one-legged match.
pub fn win_prob_one_leg(elo_i: f64, elo_j: f64, s: Scaling) -> f64 {
    logistic((elo_i - elo_j) / s.0)
}

/// Probability that the first team advances from a two-legged tie.
pub fn win_prob_two_leg(elo_i: f64, elo_j: f64, s: Scaling) -> f64 {
    logistic(std::f64::consts::SQRT_2 * (elo_i - elo_j) / s.0)
}

pub fn advance_probability(kind: TieKind, elo_i: f64, elo_j: f64, s: Scaling) -> f64 {
    match kind {
        TieKind::OneLeg => win_prob_one_leg(elo_i, elo_j, s),
        TieKind::TwoLeg => win_prob_two_leg(elo_i, elo_j, s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S: Scaling = Scaling::CLUB_ELO;

    // Direct evaluation of the logistic with an explicit power series for
    // 10^x = e^(x ln 10), independent of `powf`.
    fn oracle(d: f64, s: f64, legs_factor: f64) -> f64 {
        let x = -legs_factor * d / s * std::f64::consts::LN_10;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= x / k as f64;
            sum += term;
        }
        1.0 / (1.0 + sum)
    }

    #[test]
    fn equal_ratings_are_a_coin_flip() {
        assert_eq!(win_prob_one_leg(1500.0, 1500.0, S), 0.5);
        assert_eq!(win_prob_two_leg(1600.0, 1600.0, S), 0.5);
    }

    #[test]
    fn four_hundred_points_is_ten_to_one() {
        assert!((win_prob_one_leg(1900.0, 1500.0, S) - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn table_values_match_series_oracle() {
        // Kosovo 2017/18 against its own 2018/19 profile, one leg.
        let p = win_prob_one_leg(1041.0, 1102.0, S);
        assert!((p - oracle(-61.0, 400.0, 1.0)).abs() < 1e-12);
        assert!((p - 0.413).abs() < 5e-4, "{p}");
        // Hungary against Croatia, 2019/20 ratings, two legs.
        let p = win_prob_two_leg(1468.0, 1682.0, S);
        assert!((p - oracle(-214.0, 400.0, std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert!((p - 0.149).abs() < 5e-4, "{p}");
        assert!((win_prob_two_leg(1682.0, 1468.0, S) - 0.851).abs() < 5e-4);
    }

    #[test]
    fn rejects_non_positive_scaling() {
        assert!(Scaling::new(0.0).is_err());
        assert!(Scaling::new(-400.0).is_err());
        assert!(Scaling::new(f64::NAN).is_err());
        assert!(Scaling::new(f64::INFINITY).is_err());
        assert_eq!(Scaling::new(600.0).unwrap().value(), 600.0);
    }

    proptest! {
        #[test]
        fn complement(a in 0.0..3000.0f64, b in 0.0..3000.0f64, s in 50.0..2000.0f64) {
            let s = Scaling::new(s).unwrap();
            prop_assert!((win_prob_one_leg(a, b, s) + win_prob_one_leg(b, a, s) - 1.0).abs() < 1e-12);
            prop_assert!((win_prob_two_leg(a, b, s) + win_prob_two_leg(b, a, s) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_both_ratings(a in 500.0..2000.0f64, b in 500.0..2000.0f64, step in 1.0..100.0f64) {
            for f in [win_prob_one_leg, win_prob_two_leg] {
                prop_assert!(f(a + step, b, S) > f(a, b, S));
                prop_assert!(f(a, b + step, S) < f(a, b, S));
            }
        }

        #[test]
        fn two_legs_sharpen(d in 1.0..1000.0f64) {
            prop_assert!(win_prob_two_leg(1000.0 + d, 1000.0, S) > win_prob_one_leg(1000.0 + d, 1000.0, S));
        }

        #[test]
        fn larger_scaling_flattens(d in 1.0..1000.0f64, s in 100.0..1000.0f64, ds in 10.0..1000.0f64) {
            let lo = Scaling::new(s).unwrap();
            let hi = Scaling::new(s + ds).unwrap();
            for f in [win_prob_one_leg, win_prob_two_leg] {
                let (p_lo, p_hi) = (f(1000.0 + d, 1000.0, lo), f(1000.0 + d, 1000.0, hi));
                prop_assert!(p_hi < p_lo);
                prop_assert!(p_hi > 0.5);
            }
        }
    }
}
