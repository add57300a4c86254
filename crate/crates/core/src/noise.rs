//! Measurement-error models and ensemble-averaged reconstruction.
//!
//! Two error mechanisms matter for end-site spectroscopy: weak lines sink
//! below the noise floor and vanish from the data (relative-threshold
//! truncation), and finite spectral resolution jitters the measured peak
//! positions (i.i.d. Gaussian perturbation of the eigenvalues). Ensembles
//! over many jittered measurements use one RNG stream per sample, seeded by
//! a stable hash of (base_seed, sample_index), so results are bit-identical
//! regardless of thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::reconstruct::reconstruct_couplings;
use crate::spectral::{Mode, SpectralData};
use crate::{mix64, Error, Result};

/// Relative truncation threshold: modes with weight below `theta * max
/// weight` are lost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationModel {
    theta: f64,
}

impl TruncationModel {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "truncation threshold theta = {theta} must lie in [0, 1)"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Gaussian eigenvalue jitter: each measured lambda_n gains an independent
/// N(0, sigma^2) error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterModel {
    sigma: f64,
    base_seed: u64,
}

impl JitterModel {
    pub fn new(sigma: f64, base_seed: u64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "jitter sigma = {sigma} must be finite and nonnegative"
            )));
        }
        Ok(Self { sigma, base_seed })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }
}

/// How ensemble estimates are pooled per bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    #[default]
    Mean,
    Median,
}

/// Ensemble of `n_samples` jittered measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n_samples: usize,
    pub jitter: JitterModel,
    pub aggregator: Aggregator,
}

impl EnsembleSpec {
    pub fn new(n_samples: usize, jitter: JitterModel, aggregator: Aggregator) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one sample".into()));
        }
        Ok(Self { n_samples, jitter, aggregator })
    }
}

/// Per-bond pooled estimates over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Pooled J'_{i,i+1} per bond; NaN where no sample survived to the bond.
    pub couplings_est: Vec<f64>,
    /// How many samples contributed to each bond (samples that aborted at or
    /// before a bond are excluded from it).
    pub samples_per_bond: Vec<usize>,
}

/// Stable per-index stream seed; SplitMix64-mixed so that neighboring
/// (base, index) pairs land on uncorrelated ChaCha streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index))
}

/// Drops every mode with weight below theta times the largest weight
/// (strict comparison, so theta = 0 is the identity). Does not renormalize;
/// compose with [`crate::normalize_spectrum`] for that. The completeness
/// flag drops only if something was actually removed.
pub fn apply_truncation(spectrum: &SpectralData, model: &TruncationModel) -> Result<SpectralData> {
    if spectrum.is_empty() {
        return Err(Error::InvalidSpectrum("cannot truncate an empty spectrum".into()));
    }
    let c_max = spectrum.modes().iter().map(|m| m.weight).fold(0.0f64, f64::max);
    let cutoff = model.theta * c_max;
    let kept: Vec<Mode> =
        spectrum.modes().iter().filter(|m| m.weight >= cutoff).copied().collect();
    if kept.is_empty() {
        return Err(Error::EmptyTruncation { theta: model.theta });
    }
    if kept.len() == spectrum.len() {
        return Ok(spectrum.clone());
    }
    Ok(SpectralData::from_sorted_unchecked(kept, false))
}

/// Perturbs every eigenvalue by an independent N(0, sigma^2) draw from the
/// stream of (base_seed, sample_index); weights are untouched and the modes
/// re-sort if the perturbation reorders them. sigma = 0 is the identity.
pub fn apply_jitter(spectrum: &SpectralData, model: &JitterModel, sample_index: u64) -> SpectralData {
    if model.sigma == 0.0 {
        return spectrum.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(model.base_seed, sample_index));
    let mut normal = PolarNormal::default();
    let mut modes: Vec<Mode> = spectrum
        .modes()
        .iter()
        .map(|m| Mode { lambda: m.lambda + model.sigma * normal.next(&mut rng), weight: m.weight })
        .collect();
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    SpectralData::from_sorted_unchecked(modes, spectrum.complete())
}

/// Reconstructs from `n_samples` independently jittered copies of the
/// spectrum and pools the estimates per bond with the chosen aggregator.
/// Samples run in parallel; the reduction visits them in sample order, so
/// the result is a pure function of (spectrum, energies, ensemble).
pub fn ensemble_reconstruct(
    spectrum: &SpectralData,
    energies: &[f64],
    ensemble: &EnsembleSpec,
) -> Result<EnsembleResult> {
    let sum = spectrum.weight_sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedSpectrum { sum });
    }
    let n_bonds = energies.len().saturating_sub(1);
    let samples: Vec<crate::ReconstructionResult> = (0..ensemble.n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let jittered = apply_jitter(spectrum, &ensemble.jitter, k);
            reconstruct_couplings(&jittered, energies)
        })
        .collect::<Result<_>>()?;

    let mut pooled = vec![f64::NAN; n_bonds];
    let mut counts = vec![0usize; n_bonds];
    match ensemble.aggregator {
        Aggregator::Mean => {
            let mut sums = vec![0.0f64; n_bonds];
            for sample in &samples {
                for (i, est) in usable_bonds(sample).iter().enumerate() {
                    sums[i] += est;
                    counts[i] += 1;
                }
            }
            for i in 0..n_bonds {
                if counts[i] > 0 {
                    pooled[i] = sums[i] / counts[i] as f64;
                }
            }
        }
        Aggregator::Median => {
            let mut per_bond: Vec<Vec<f64>> = vec![Vec::new(); n_bonds];
            for sample in &samples {
                for (i, est) in usable_bonds(sample).iter().enumerate() {
                    per_bond[i].push(*est);
                    counts[i] += 1;
                }
            }
            for (i, vals) in per_bond.iter_mut().enumerate() {
                if !vals.is_empty() {
                    pooled[i] = median(vals);
                }
            }
        }
    }
    if n_bonds > 0 && counts[0] == 0 {
        return Err(Error::EnsembleAborted);
    }
    Ok(EnsembleResult { couplings_est: pooled, samples_per_bond: counts })
}

/// Bonds of one sample that count toward the pool: everything strictly
/// before the abort bond, or all of them when the sample ran clean.
fn usable_bonds(sample: &crate::ReconstructionResult) -> &[f64] {
    match sample.aborted_at {
        Some(bond) => &sample.couplings_est[..bond - 1],
        None => &sample.couplings_est,
    }
}

fn median(vals: &mut [f64]) -> f64 {
    vals.sort_by(f64::total_cmp);
    let mid = vals.len() / 2;
    if vals.len() % 2 == 1 {
        vals[mid]
    } else {
        0.5 * (vals[mid - 1] + vals[mid])
    }
}

/// Marsaglia polar method for standard normal variates; fixed here (rather
/// than an inverse-transform) so ensemble draws are reproducible across
/// platforms. Consumes uniforms in pairs and caches the spare.
#[derive(Default)]
struct PolarNormal {
    spare: Option<f64>,
}

impl PolarNormal {
    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        if let Some(s) = self.spare.take() {
            return s;
        }
        loop {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let v = 2.0 * rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}
