//! Coupling-strength reconstruction from end-site spectral data.
//!
//! With site energies eps_i known and the spectrum (lambda_n, C_{1,n})
//! measured, the spectral coefficients C_{i,n} obey a three-term recursion
//! in the site index, and each coupling follows from the normalization of
//! the next site's state:
//!
//!   J'_{1,2}    = sqrt( sum_n (lambda_n - eps_1)^2 C_{1,n} ),
//!   u_n         = (lambda_n - eps_i) C_{i,n} - J'_{i-1,i} C_{i-1,n},
//!   J'_{i,i+1}  = sqrt( sum_{n: C_{1,n} > 0} u_n^2 / C_{1,n} ),
//!   C_{i+1,n}   = u_n / J'_{i,i+1}.
//!
//! Modes with zero end-site weight carry u_n = 0 exactly, so skipping them
//! in the sums equals removing them outright; no division by zero arises.
//! The recursion runs to bond N-1 regardless of how many modes survive a
//! truncated measurement.
//!
//! The plain recursion is a Stieltjes procedure run in the eigenbasis, and
//! it inherits the classic failure of that procedure: once an isolated
//! extreme eigenvalue has converged in a leading section of the chain,
//! roundoff excites components along earlier coefficient rows that then
//! grow geometrically (Gragg and Harrod, Numer. Math. 44, 317, 1984). On
//! exact spectra of disordered chains a few hundred sites long this wrecks
//! every bond past the first hundred or so, while measured spectra carry
//! inconsistencies that dominate roundoff long before the growth can
//! develop. [`reconstruct_couplings_reorthogonalized`] is the variant to
//! use on exact long-chain data; the plain recursion is the reference
//! algorithm for the truncation and jitter studies.

use crate::spectral::{Mode, SpectralData};
use crate::{Error, Result};

/// An estimate below this is a broken bond: dividing by it would amplify
/// floating-point dust into the next coefficient row.
const BROKEN_BOND_FLOOR: f64 = 1e-12;

/// Estimated couplings plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// J'_{i,i+1} for bonds 1..=N-1, nonnegative. On abort the list stops at
    /// the offending bond (its near-zero estimate is the last entry).
    pub couplings_est: Vec<f64>,
    /// Spectral modes with strictly positive weight.
    pub modes_used: usize,
    /// 1-based bond index where the recursion hit the broken-bond floor.
    pub aborted_at: Option<usize>,
}

/// Coefficient rows C_{i,n} retained for diagnostics; `rows()[i]` holds the
/// row for site i+1, so `rows()[0]` equals the input weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    rows: Vec<Vec<f64>>,
}

impl CoefficientTable {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Rescales weights to unit sum; eigenvalues and the completeness flag are
/// untouched. Idempotent up to one rounding.
pub fn normalize_spectrum(raw: &SpectralData) -> Result<SpectralData> {
    let sum = raw.weight_sum();
    if !(sum > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let modes = raw
        .modes()
        .iter()
        .map(|m| Mode { lambda: m.lambda, weight: m.weight / sum })
        .collect();
    Ok(SpectralData::from_sorted_unchecked(modes, raw.complete()))
}

/// Runs the coupling recursion for all N-1 bonds, N = `energies.len()`.
///
/// Requires the weights normalized to unit sum within 1e-9. A bond estimate
/// below the broken-bond floor stops the recursion and is reported through
/// `aborted_at` rather than as an error; the estimates so far, including the
/// vanishing one, are returned.
pub fn reconstruct_couplings(
    spectrum: &SpectralData,
    energies: &[f64],
) -> Result<ReconstructionResult> {
    run_recursion(spectrum, energies, None)
}

/// As [`reconstruct_couplings`], additionally retaining every coefficient
/// row C_{i,n} (O(N M) memory instead of O(M)).
pub fn reconstruct_with_table(
    spectrum: &SpectralData,
    energies: &[f64],
) -> Result<(ReconstructionResult, CoefficientTable)> {
    let mut rows = Vec::with_capacity(energies.len());
    let result = run_recursion(spectrum, energies, Some(&mut rows))?;
    Ok((result, CoefficientTable { rows }))
}

/// As [`reconstruct_couplings`], with every new coefficient row projected
/// against all earlier ones before the coupling is read off (O(N M) memory
/// and O(N^2 M) time instead of O(M) and O(N M)).
///
/// Works with amplitudes q_{i,n} = C_{i,n} / sqrt(C_{1,n}), which turn the
/// weighted inner product sum_n a_n b_n / C_{1,n} into the Euclidean one and
/// make the exact rows an orthonormal set; the procedure is then Lanczos
/// with full reorthogonalization applied to diag(lambda) with starting
/// vector sqrt(C_1). A second projection pass runs only when the first one
/// removed most of the norm (Daniel, Gragg, Kaufman, and Stewart, Math.
/// Comp. 30, 772, 1976).
///
/// On exact data this computes the same couplings as the plain recursion,
/// minus its geometric error growth. On inconsistent data (truncated or
/// jittered spectra) the two maps genuinely differ, because the exact rows
/// are no longer orthogonal and the projections remove real components;
/// use the plain recursion there.
pub fn reconstruct_couplings_reorthogonalized(
    spectrum: &SpectralData,
    energies: &[f64],
) -> Result<ReconstructionResult> {
    let sum = spectrum.weight_sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedSpectrum { sum });
    }
    let n_sites = energies.len();
    let modes = spectrum.modes();
    let modes_used = modes.iter().filter(|m| m.weight > 0.0).count();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_sites);
    rows.push(modes.iter().map(|m| m.weight.sqrt()).collect());
    let mut j_prev = 0.0;
    let mut couplings = Vec::with_capacity(n_sites.saturating_sub(1));
    let mut aborted_at = None;

    for bond in 1..n_sites {
        let eps = energies[bond - 1];
        let mut u: Vec<f64> = modes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let prev = if bond >= 2 { rows[bond - 2][k] } else { 0.0 };
                (m.lambda - eps) * rows[bond - 1][k] - j_prev * prev
            })
            .collect();
        let norm2_before = dot(&u, &u);
        for pass in 0..2 {
            for row in &rows {
                let overlap = dot(&u, row);
                for (x, r) in u.iter_mut().zip(row) {
                    *x -= overlap * r;
                }
            }
            if pass == 0 && dot(&u, &u) > 0.5 * norm2_before {
                break;
            }
        }
        let j_est = dot(&u, &u).sqrt();
        couplings.push(j_est);
        if j_est < BROKEN_BOND_FLOOR {
            aborted_at = Some(bond);
            break;
        }
        if bond + 1 < n_sites {
            for x in u.iter_mut() {
                *x /= j_est;
            }
            rows.push(u);
        }
        j_prev = j_est;
    }

    Ok(ReconstructionResult { couplings_est: couplings, modes_used, aborted_at })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn run_recursion(
    spectrum: &SpectralData,
    energies: &[f64],
    mut table: Option<&mut Vec<Vec<f64>>>,
) -> Result<ReconstructionResult> {
    let sum = spectrum.weight_sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedSpectrum { sum });
    }
    let n_sites = energies.len();
    let modes = spectrum.modes();
    let weights: Vec<f64> = modes.iter().map(|m| m.weight).collect();
    let modes_used = weights.iter().filter(|&&w| w > 0.0).count();

    let mut prev = vec![0.0; modes.len()]; // C_{i-1,n}, zero row for i = 1
    let mut cur = weights.clone(); // C_{i,n}
    if let Some(rows) = table.as_deref_mut() {
        rows.push(cur.clone());
    }
    let mut j_prev = 0.0;
    let mut couplings = Vec::with_capacity(n_sites.saturating_sub(1));
    let mut aborted_at = None;

    for bond in 1..n_sites {
        let eps = energies[bond - 1];
        // prev becomes the u row in place; C_{i-1,n} is not needed afterwards.
        let mut radicand = 0.0;
        for (k, m) in modes.iter().enumerate() {
            let u = (m.lambda - eps) * cur[k] - j_prev * prev[k];
            prev[k] = u;
            if weights[k] > 0.0 {
                radicand += u * u / weights[k];
            }
        }
        debug_assert!(radicand >= 0.0);
        let j_est = radicand.sqrt();
        couplings.push(j_est);
        if j_est < BROKEN_BOND_FLOOR {
            aborted_at = Some(bond);
            break;
        }
        let need_next_row = bond + 1 < n_sites || table.is_some();
        if need_next_row {
            for u in prev.iter_mut() {
                *u /= j_est;
            }
            std::mem::swap(&mut prev, &mut cur);
            if let Some(rows) = table.as_deref_mut() {
                rows.push(cur.clone());
            }
        }
        j_prev = j_est;
    }

    Ok(ReconstructionResult { couplings_est: couplings, modes_used, aborted_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{random_chain, ChainSpec};
    use crate::spectral::end_site_spectrum;

    fn mode(lambda: f64, weight: f64) -> Mode {
        Mode { lambda, weight }
    }

    #[test]
    fn two_mode_spectrum_gives_unit_coupling() {
        let s = SpectralData::new(vec![mode(-1.0, 0.5), mode(1.0, 0.5)], true).unwrap();
        let r = reconstruct_couplings(&s, &[0.0, 0.0]).unwrap();
        assert_eq!(r.couplings_est, vec![1.0]);
        assert_eq!(r.modes_used, 2);
        assert_eq!(r.aborted_at, None);
    }

    #[test]
    fn homogeneous_six_sites_round_trip() {
        let spec = ChainSpec::homogeneous(6, 0.0, 1.0).unwrap();
        let r = reconstruct_couplings(&end_site_spectrum(&spec), spec.energies()).unwrap();
        assert_eq!(r.couplings_est.len(), 5);
        for (i, j) in r.couplings_est.iter().enumerate() {
            assert!((j - 1.0).abs() <= 1e-10, "bond {}: {j}", i + 1);
        }
    }

    #[test]
    fn random_chain_round_trip() {
        let spec = random_chain(50, 0.9, 1.1, vec![0.0; 50], 5).unwrap();
        let r = reconstruct_couplings(&end_site_spectrum(&spec), spec.energies()).unwrap();
        let worst = r
            .couplings_est
            .iter()
            .zip(spec.couplings())
            .map(|(est, truth)| (est - truth).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-8, "max absolute error {worst:e}");
    }

    #[test]
    fn nonzero_energies_round_trip() {
        let energies = vec![0.4, -0.3, 0.2, 0.9, -0.6, 0.1, 0.0];
        let spec = random_chain(7, 0.5, 1.5, energies, 31).unwrap();
        let r = reconstruct_couplings(&end_site_spectrum(&spec), spec.energies()).unwrap();
        for (est, truth) in r.couplings_est.iter().zip(spec.couplings()) {
            assert!((est - truth).abs() <= 1e-10, "{est} vs {truth}");
        }
    }

    #[test]
    fn rejects_unnormalized_spectrum() {
        let s = SpectralData::new(vec![mode(-1.0, 0.4), mode(1.0, 0.4)], false).unwrap();
        assert!(matches!(
            reconstruct_couplings(&s, &[0.0, 0.0]),
            Err(Error::UnnormalizedSpectrum { .. })
        ));
    }

    #[test]
    fn aborts_on_vanishing_bond() {
        // A single mode at eps_1 carries no information past site 1.
        let s = SpectralData::new(vec![mode(0.0, 1.0)], true).unwrap();
        let r = reconstruct_couplings(&s, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.aborted_at, Some(1));
        assert_eq!(r.couplings_est, vec![0.0]);
    }

    #[test]
    fn single_site_chain_has_no_bonds() {
        let s = SpectralData::new(vec![mode(0.5, 1.0)], true).unwrap();
        let r = reconstruct_couplings(&s, &[0.5]).unwrap();
        assert!(r.couplings_est.is_empty());
        assert_eq!(r.modes_used, 1);
        assert_eq!(r.aborted_at, None);
    }

    #[test]
    fn zero_weight_mode_equals_removed_mode_bitwise() {
        let with_zero = SpectralData::new(
            vec![mode(-1.3, 0.5), mode(0.2, 0.0), mode(1.3, 0.5)],
            false,
        )
        .unwrap();
        let without = SpectralData::new(vec![mode(-1.3, 0.5), mode(1.3, 0.5)], false).unwrap();
        let energies = [0.1, -0.2, 0.3, 0.0];
        let a = reconstruct_couplings(&with_zero, &energies).unwrap();
        let b = reconstruct_couplings(&without, &energies).unwrap();
        assert_eq!(a.modes_used, 2);
        let bits_a: Vec<u64> = a.couplings_est.iter().map(|x| x.to_bits()).collect();
        let bits_b: Vec<u64> = b.couplings_est.iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn scale_covariance_is_exact_for_powers_of_two() {
        let spec = random_chain(20, 0.5, 1.5, vec![0.25; 20], 9).unwrap();
        let base = end_site_spectrum(&spec);
        let scaled = SpectralData::new(
            base.modes().iter().map(|m| mode(2.0 * m.lambda, m.weight)).collect(),
            true,
        )
        .unwrap();
        let eps2: Vec<f64> = spec.energies().iter().map(|e| 2.0 * e).collect();
        let r1 = reconstruct_couplings(&base, spec.energies()).unwrap();
        let r2 = reconstruct_couplings(&scaled, &eps2).unwrap();
        for (a, b) in r1.couplings_est.iter().zip(&r2.couplings_est) {
            assert_eq!((2.0 * a).to_bits(), b.to_bits(), "expected exact doubling");
        }
    }

    #[test]
    fn intermediate_rows_stay_normalized() {
        // <i|i> = sum_n C_{i,n}^2 / C_{1,n} = 1 for exact complete input
        let spec = random_chain(40, 0.5, 1.5, vec![0.0; 40], 77).unwrap();
        let s = end_site_spectrum(&spec);
        let (r, table) = reconstruct_with_table(&s, spec.energies()).unwrap();
        assert_eq!(r.aborted_at, None);
        assert_eq!(table.rows().len(), 40);
        assert_eq!(table.rows()[0], s.modes().iter().map(|m| m.weight).collect::<Vec<_>>());
        for (i, row) in table.rows().iter().enumerate() {
            let norm: f64 = row
                .iter()
                .zip(s.modes())
                .filter(|(_, m)| m.weight > 0.0)
                .map(|(c, m)| c * c / m.weight)
                .sum();
            assert!((norm - 1.0).abs() <= 1e-8, "site {}: <i|i> = {norm}", i + 1);
        }
    }

    #[test]
    fn reorthogonalized_matches_plain_on_short_exact_data() {
        let spec = random_chain(40, 0.5, 1.5, vec![0.0; 40], 11).unwrap();
        let s = end_site_spectrum(&spec);
        let plain = reconstruct_couplings(&s, spec.energies()).unwrap();
        let reorth = reconstruct_couplings_reorthogonalized(&s, spec.energies()).unwrap();
        assert_eq!(reorth.modes_used, plain.modes_used);
        assert_eq!(reorth.aborted_at, None);
        for (i, (a, b)) in plain.couplings_est.iter().zip(&reorth.couplings_est).enumerate() {
            assert!((a - b).abs() <= 1e-10 * b.abs(), "bond {}: {a} vs {b}", i + 1);
        }
    }

    #[test]
    fn reorthogonalized_long_disordered_round_trip() {
        // The plain recursion loses all accuracy past bond ~100 here.
        let spec = random_chain(300, 0.5, 1.5, vec![0.0; 300], 3).unwrap();
        let s = end_site_spectrum(&spec);
        let r = reconstruct_couplings_reorthogonalized(&s, spec.energies()).unwrap();
        assert_eq!(r.aborted_at, None);
        let worst = r
            .couplings_est
            .iter()
            .zip(spec.couplings())
            .map(|(est, truth)| ((est - truth) / truth).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-9, "max relative error {worst:e}");
    }

    #[test]
    fn reorthogonalized_scale_covariance_is_exact_for_powers_of_two() {
        let spec = random_chain(20, 0.5, 1.5, vec![0.25; 20], 9).unwrap();
        let base = end_site_spectrum(&spec);
        let scaled = SpectralData::new(
            base.modes().iter().map(|m| mode(2.0 * m.lambda, m.weight)).collect(),
            true,
        )
        .unwrap();
        let eps2: Vec<f64> = spec.energies().iter().map(|e| 2.0 * e).collect();
        let r1 = reconstruct_couplings_reorthogonalized(&base, spec.energies()).unwrap();
        let r2 = reconstruct_couplings_reorthogonalized(&scaled, &eps2).unwrap();
        for (a, b) in r1.couplings_est.iter().zip(&r2.couplings_est) {
            assert_eq!((2.0 * a).to_bits(), b.to_bits(), "expected exact doubling");
        }
    }

    #[test]
    fn reorthogonalized_zero_weight_mode_equals_removed_mode_bitwise() {
        let with_zero = SpectralData::new(
            vec![mode(-1.3, 0.5), mode(0.2, 0.0), mode(1.3, 0.5)],
            false,
        )
        .unwrap();
        let without = SpectralData::new(vec![mode(-1.3, 0.5), mode(1.3, 0.5)], false).unwrap();
        let energies = [0.1, -0.2, 0.3, 0.0];
        let a = reconstruct_couplings_reorthogonalized(&with_zero, &energies).unwrap();
        let b = reconstruct_couplings_reorthogonalized(&without, &energies).unwrap();
        assert_eq!(a.modes_used, 2);
        let bits_a: Vec<u64> = a.couplings_est.iter().map(|x| x.to_bits()).collect();
        let bits_b: Vec<u64> = b.couplings_est.iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn reorthogonalized_aborts_on_vanishing_bond() {
        let s = SpectralData::new(vec![mode(0.0, 1.0)], true).unwrap();
        let r = reconstruct_couplings_reorthogonalized(&s, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.aborted_at, Some(1));
        assert_eq!(r.couplings_est, vec![0.0]);
    }

    #[test]
    fn normalize_rescales_uniformly() {
        let s = SpectralData::new(vec![mode(-1.0, 0.2), mode(1.0, 0.2)], false).unwrap();
        let n = normalize_spectrum(&s).unwrap();
        assert_eq!(n.modes()[0].weight, 0.5);
        assert_eq!(n.modes()[1].weight, 0.5);
        assert!(!n.complete(), "completeness flag is preserved");
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = SpectralData::new(vec![mode(-1.0, 0.3), mode(0.5, 0.7)], true).unwrap();
        let once = normalize_spectrum(&s).unwrap();
        let twice = normalize_spectrum(&once).unwrap();
        for (a, b) in once.modes().iter().zip(twice.modes()) {
            assert!((a.weight - b.weight).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_rejects_zero_mass() {
        let s = SpectralData::new(vec![mode(0.0, 0.0)], false).unwrap();
        assert!(matches!(normalize_spectrum(&s), Err(Error::AllZeroWeights)));
    }
}
