//! Reconstruction distance: how many leading bonds are trustworthy.
//!
//! The recursion consumes spectral error bond by bond, so reconstructions
//! degrade from some site onward rather than uniformly. The natural scalar
//! is therefore the length of the accurate prefix, not an average error,
//! which a single blown-up tail bond would dominate.

use crate::{CliError, Result};

/// Largest k such that every bond i <= k satisfies |j_est - j_true|/j_true
/// <= tol; 0 if the first bond already deviates. A NaN estimate (a bond no
/// ensemble sample reached) never satisfies the test and ends the prefix.
pub fn reconstruction_distance(j_true: &[f64], j_est: &[f64], tol: f64) -> Result<usize> {
    if j_true.len() != j_est.len() {
        return Err(CliError::Config(format!(
            "bond count mismatch: {} true vs {} estimated",
            j_true.len(),
            j_est.len()
        )));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(CliError::Config(format!(
            "distance_tol = {tol} must be positive and finite"
        )));
    }
    let mut prefix = 0;
    for (truth, est) in j_true.iter().zip(j_est) {
        let rel = ((est - truth) / truth).abs();
        if rel <= tol {
            prefix += 1;
        } else {
            break;
        }
    }
    Ok(prefix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_lists_reach_full_length() {
        let j = vec![1.0; 49];
        let d = reconstruction_distance(&j, &j, 0.05).expect("distance");
        assert_eq!(d, 49, "identical lists of length 49");
    }

    #[test]
    fn deviation_at_bond_17_gives_16() {
        let j_true = vec![1.0; 30];
        let mut j_est = j_true.clone();
        j_est[16] = 1.2;
        let d = reconstruction_distance(&j_true, &j_est, 0.05).expect("distance");
        assert_eq!(d, 16, "20% error at bond 17 under tol 0.05");
    }

    #[test]
    fn first_bond_deviation_gives_zero() {
        let j_true = vec![1.0, 1.0];
        let j_est = vec![2.0, 1.0];
        let d = reconstruction_distance(&j_true, &j_est, 0.05).expect("distance");
        assert_eq!(d, 0, "bond 1 already off");
    }

    #[test]
    fn nan_estimate_ends_the_prefix() {
        let j_true = vec![1.0, 1.0, 1.0];
        let j_est = vec![1.0, f64::NAN, 1.0];
        let d = reconstruction_distance(&j_true, &j_est, 0.5).expect("distance");
        assert_eq!(d, 1, "NaN never passes the tolerance test");
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let err = reconstruction_distance(&[1.0, 1.0], &[1.0], 0.05).unwrap_err();
        assert!(err.to_string().contains("mismatch"), "got: {err}");
    }

    #[test]
    fn nonpositive_tolerance_is_an_error() {
        assert!(reconstruction_distance(&[1.0], &[1.0], 0.0).is_err(), "tol = 0");
        assert!(reconstruction_distance(&[1.0], &[1.0], -0.1).is_err(), "tol < 0");
        assert!(
            reconstruction_distance(&[1.0], &[1.0], f64::NAN).is_err(),
            "tol = NaN"
        );
    }

    #[test]
    fn distance_is_monotone_in_tol() {
        let j_true = vec![1.0; 20];
        let j_est: Vec<f64> = (0..20).map(|i| 1.0 + 0.01 * i as f64).collect();
        let mut last = 0;
        for step in 1..=20 {
            let tol = 0.01 * step as f64;
            let d = reconstruction_distance(&j_true, &j_est, tol).expect("distance");
            assert!(d >= last, "tol {tol} shrank the distance: {d} < {last}");
            last = d;
        }
        assert_eq!(last, 20, "largest tolerance admits every bond");
    }
}
