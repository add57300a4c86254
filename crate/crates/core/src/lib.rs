//! Reconstruction of nearest-neighbor coupling strengths in linear quantum
//! chains from spectral data measurable at one end of the chain.
//!
//! A chain of N states with site energies eps_i and couplings J_{i,i+1} has a
//! symmetric tridiagonal (Jacobi) Hamiltonian. With all off-diagonals positive
//! the spectrum is simple, and the eigenvalues lambda_n together with the
//! end-site weights C_{1,n} = <lambda_n|1>^2 determine every coupling: this is
//! the classical inverse eigenvalue problem for Jacobi matrices, solved here
//! by a three-term recursion over the spectral coefficients C_{i,n}.
//!
//! Modules:
//!
//! - [`chain`]: ground-truth chain models and the Heisenberg single-excitation
//!   mapping from couplings to effective site energies
//! - [`eigen`]: symmetric tridiagonal eigensolver, implicit-shift QL for the
//!   eigenvalues plus inverse iteration for the eigenvectors, O(N^2) total
//! - [`spectral`]: end-site spectra three ways (exact eigendecomposition,
//!   closed-form homogeneous reference, simulated time-signal measurement
//!   with FFT peak readout)
//! - [`reconstruct`]: the coupling recursion J'_{i,i+1} from (lambda_n, C_{1,n})
//!   and known site energies
//! - [`noise`]: measurement-error models (relative-threshold truncation,
//!   Gaussian eigenvalue jitter) and deterministic seeded ensembles

pub mod chain;
pub mod eigen;
pub mod noise;
pub mod reconstruct;
pub mod spectral;

pub use chain::{build_hamiltonian, heisenberg_site_energies, random_chain, ChainSpec, TridiagonalMatrix};
pub use eigen::eigendecompose;
pub use noise::{
    apply_jitter, apply_truncation, derive_seed, ensemble_reconstruct, Aggregator, EnsembleResult,
    EnsembleSpec, JitterModel, TruncationModel,
};
pub use reconstruct::{
    normalize_spectrum, reconstruct_couplings, reconstruct_couplings_reorthogonalized,
    reconstruct_with_table, CoefficientTable, ReconstructionResult,
};
pub use spectral::{
    default_measurement_grid, end_site_spectrum, extract_spectrum, homogeneous_spectrum,
    synthesize_end_signal, Mode, SpectralData, TimeSignal,
};

/// Errors across the crate. Numerical breakdown inside the reconstruction
/// recursion is not an error: it is reported through
/// [`ReconstructionResult::aborted_at`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sample interval too coarse: dt*max|lambda| = {product:.6} must stay below pi")]
    NyquistViolation { product: f64 },
    #[error("unresolved peaks: eigenvalues {lambda_a:.6} and {lambda_b:.6} lie within one frequency bin ({bin_width:.6})")]
    UnresolvedPeaks { lambda_a: f64, lambda_b: f64, bin_width: f64 },
    #[error("spectrum has no positive weight")]
    AllZeroWeights,
    #[error("truncation threshold {theta} removed every mode")]
    EmptyTruncation { theta: f64 },
    #[error("spectrum not normalized: weights sum to {sum:.12}, expected 1 within 1e-9")]
    UnnormalizedSpectrum { sum: f64 },
    #[error("every ensemble sample aborted at the first bond")]
    EnsembleAborted,
}

pub type Result<T> = std::result::Result<T, Error>;

/// SplitMix64 finalizer step. Bijective on u64, decorrelates nearby inputs;
/// used to derive independent RNG stream seeds from (base_seed, index) pairs.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
