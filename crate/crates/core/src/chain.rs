//! Ground-truth chain models: site energies, couplings, Hamiltonian assembly,
//! and the Heisenberg single-excitation mapping.
//!
//! Units: hbar = 1, energies and couplings dimensionless, time carries
//! inverse-energy units.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A linear chain of `n_sites` quantum states with nearest-neighbor couplings.
///
/// Couplings must be strictly positive. The reconstruction recovers each
/// J_{i,i+1} as a nonnegative square root, so signs are unidentifiable, and a
/// zero coupling breaks the chain: no information about sites past the break
/// reaches the measured end.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    energies: Vec<f64>,
    couplings: Vec<f64>,
}

impl ChainSpec {
    /// Validates lengths (couplings one shorter than energies), finiteness,
    /// and strict positivity of every coupling.
    pub fn new(energies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidChain("energies must be nonempty".into()));
        }
        if couplings.len() + 1 != energies.len() {
            return Err(Error::InvalidChain(format!(
                "couplings: expected {} entries for {} sites, got {}",
                energies.len() - 1,
                energies.len(),
                couplings.len()
            )));
        }
        for (i, e) in energies.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::InvalidChain(format!("energies[{i}] = {e} is not finite")));
            }
        }
        for (i, j) in couplings.iter().enumerate() {
            if !j.is_finite() {
                return Err(Error::InvalidChain(format!("couplings[{i}] = {j} is not finite")));
            }
            if *j <= 0.0 {
                return Err(Error::InvalidChain(format!(
                    "couplings[{i}] = {j}: couplings must be strictly positive (broken bond)"
                )));
            }
        }
        Ok(Self { energies, couplings })
    }

    /// Uniform chain: all site energies `epsilon`, all couplings `j`.
    pub fn homogeneous(n_sites: usize, epsilon: f64, j: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidChain("n_sites must be positive".into()));
        }
        Self::new(vec![epsilon; n_sites], vec![j; n_sites - 1])
    }

    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }
}

/// Symmetric tridiagonal matrix, single off-diagonal stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::InvalidParameter("diagonal must be nonempty".into()));
        }
        if off_diagonal.len() + 1 != diagonal.len() {
            return Err(Error::InvalidParameter(format!(
                "off_diagonal: expected {} entries for order {}, got {}",
                diagonal.len() - 1,
                diagonal.len(),
                off_diagonal.len()
            )));
        }
        if let Some(x) = diagonal.iter().chain(&off_diagonal).find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("matrix entry {x} is not finite")));
        }
        Ok(Self { diagonal, off_diagonal })
    }

    pub fn order(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    /// Max row sum of absolute values; the natural scale for convergence
    /// thresholds and residual bounds.
    pub fn infinity_norm(&self) -> f64 {
        let n = self.order();
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let left = if i > 0 { self.off_diagonal[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off_diagonal[i].abs() } else { 0.0 };
            norm = norm.max(left + self.diagonal[i].abs() + right);
        }
        norm
    }
}

/// Hamiltonian of the chain: energies on the diagonal, couplings off it.
/// Lossless; the spec is recoverable bit-exactly from the matrix.
pub fn build_hamiltonian(spec: &ChainSpec) -> TridiagonalMatrix {
    TridiagonalMatrix {
        diagonal: spec.energies.clone(),
        off_diagonal: spec.couplings.clone(),
    }
}

/// Effective site energies of the single-excitation sector of a Heisenberg
/// chain with anisotropy `delta`:
///
///   eps_i = delta * [ sum_j J_{j,j+1}  -  2 (J_{i,i+1} + J_{i-1,i}) ]
///
/// with the boundary convention J_{0,1} = J_{N,N+1} = 0. For delta = 0 the
/// mapping gives a free chain, all eps_i = 0.
pub fn heisenberg_site_energies(couplings: &[f64], delta: f64) -> Vec<f64> {
    let n = couplings.len() + 1;
    let total: f64 = couplings.iter().sum();
    (0..n)
        .map(|i| {
            let left = if i > 0 { couplings[i - 1] } else { 0.0 };
            let right = if i + 1 < n { couplings[i] } else { 0.0 };
            delta * (total - 2.0 * (left + right))
        })
        .collect()
}

/// Chain with couplings drawn i.i.d. uniform on [j_low, j_high] from a
/// ChaCha8 generator seeded with `seed`; deterministic for a fixed seed.
/// Site energies are taken as given.
pub fn random_chain(
    n_sites: usize,
    j_low: f64,
    j_high: f64,
    energies: Vec<f64>,
    seed: u64,
) -> Result<ChainSpec> {
    if !(j_low > 0.0) {
        return Err(Error::InvalidChain(format!(
            "j_low = {j_low}: coupling interval must be strictly positive"
        )));
    }
    if !(j_high >= j_low) || !j_high.is_finite() {
        return Err(Error::InvalidChain(format!(
            "j_high = {j_high} must be finite and at least j_low = {j_low}"
        )));
    }
    if energies.len() != n_sites {
        return Err(Error::InvalidChain(format!(
            "energies: expected {} entries, got {}",
            n_sites,
            energies.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let couplings = (0..n_sites.saturating_sub(1))
        .map(|_| rng.random_range(j_low..=j_high))
        .collect();
    ChainSpec::new(energies, couplings)
}
