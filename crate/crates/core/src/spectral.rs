//! End-site spectral data (lambda_n, C_{1,n}) three ways: exact
//! eigendecomposition, closed-form homogeneous reference, and a simulated
//! measurement (time-signal synthesis followed by FFT peak readout).
//!
//! The measured quantity is the end-site amplitude
//!
//!   c_1(t) = sum_n C_{1,n} exp(-i lambda_n t),
//!
//! whose spectrum has one peak per eigenvalue with height C_{1,n}.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::chain::{build_hamiltonian, ChainSpec};
use crate::eigen::{end_site_weights, ql_eigenvalues};
use crate::{Error, Result};

/// One spectral line: eigenvalue and end-site weight C_{1,n} = <lambda_n|1>^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub lambda: f64,
    pub weight: f64,
}

/// Measured or ideal spectral lines, sorted by eigenvalue.
///
/// Weights are nonnegative and eigenvalues strictly increasing (Jacobi
/// matrices with positive off-diagonals have simple spectra). `complete`
/// means no line is missing, in which case the weights sum to 1 within
/// 1e-10 (eigenvector completeness).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    modes: Vec<Mode>,
    complete: bool,
}

impl SpectralData {
    /// Sorts by eigenvalue and validates the type invariants.
    pub fn new(mut modes: Vec<Mode>, complete: bool) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if !m.lambda.is_finite() {
                return Err(Error::InvalidSpectrum(format!(
                    "modes[{i}].lambda = {} is not finite",
                    m.lambda
                )));
            }
            if !m.weight.is_finite() || m.weight < 0.0 {
                return Err(Error::InvalidSpectrum(format!(
                    "modes[{i}].weight = {} must be finite and nonnegative",
                    m.weight
                )));
            }
        }
        modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        if let Some(pair) = modes.windows(2).find(|p| p[0].lambda >= p[1].lambda) {
            return Err(Error::InvalidSpectrum(format!(
                "duplicate eigenvalue {}",
                pair[0].lambda
            )));
        }
        if complete {
            let sum: f64 = modes.iter().map(|m| m.weight).sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidSpectrum(format!(
                    "complete spectrum must have unit weight sum, got {sum}"
                )));
            }
        }
        Ok(Self { modes, complete })
    }

    /// Engine-internal constructor for modes already sorted and validated.
    pub(crate) fn from_sorted_unchecked(modes: Vec<Mode>, complete: bool) -> Self {
        debug_assert!(modes.windows(2).all(|p| p[0].lambda < p[1].lambda));
        debug_assert!(modes.iter().all(|m| m.weight >= 0.0));
        Self { modes, complete }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn complete(&self) -> bool {
        self.complete
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.modes.iter().map(|m| m.lambda.abs()).fold(0.0, f64::max)
    }
}

/// Complex end-site amplitude sampled on a uniform time grid t_k = k dt.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    dt: f64,
    samples: Vec<Complex64>,
}

impl TimeSignal {
    pub fn new(dt: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        Ok(Self { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Total observation time T = K dt; the spectral bin width is 2 pi / T.
    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }
}

/// Exact end-site spectrum of a chain: (lambda_n, v_n[1]^2) over all modes.
///
/// Weights come from the double-shooting recurrence rather than from
/// [`crate::eigendecompose`]'s vectors: disorder localizes modes away from
/// site 1,
/// and weights below eps^2 need relative, not absolute, accuracy to survive
/// the reconstruction recursion.
///
/// The exact spectrum is simple, but computed eigenvalues of pairs split
/// far below roundoff (wells separated by a near-broken bond) can tie
/// bit for bit; ties are separated by one ulp to restore strict order.
pub fn end_site_spectrum(spec: &ChainSpec) -> SpectralData {
    let h = build_hamiltonian(spec);
    let mut lambdas = ql_eigenvalues(h.diagonal(), h.off_diagonal(), h.infinity_norm());
    lambdas.sort_by(f64::total_cmp);
    for i in 1..lambdas.len() {
        if lambdas[i] <= lambdas[i - 1] {
            lambdas[i] = lambdas[i - 1].next_up();
        }
    }
    let weights = end_site_weights(&h, &lambdas);
    let modes = lambdas
        .iter()
        .zip(&weights)
        .map(|(&lambda, &weight)| Mode { lambda, weight })
        .collect();
    SpectralData::from_sorted_unchecked(modes, true)
}

/// Closed-form spectrum of the homogeneous chain (all energies `epsilon`,
/// all couplings `j`):
///
///   lambda_n = epsilon + 2 j cos(n pi / (N+1)),
///   C_{1,n}  = 2/(N+1) sin^2(n pi / (N+1)),      n = 1..N.
pub fn homogeneous_spectrum(n_sites: usize, epsilon: f64, j: f64) -> Result<SpectralData> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be positive".into()));
    }
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::InvalidParameter(format!("coupling j = {j} must be positive")));
    }
    let denom = n_sites as f64 + 1.0;
    // cos falls with n, so n = N..1 gives ascending eigenvalues.
    let modes = (1..=n_sites)
        .rev()
        .map(|n| {
            let x = n as f64 * std::f64::consts::PI / denom;
            Mode {
                lambda: epsilon + 2.0 * j * x.cos(),
                weight: 2.0 / denom * x.sin().powi(2),
            }
        })
        .collect();
    Ok(SpectralData::from_sorted_unchecked(modes, true))
}

/// Samples c_1(t_k) = sum_n C_{1,n} exp(-i lambda_n k dt) on k = 0..n_samples.
///
/// Rejects grids that alias: dt max|lambda| must stay below pi.
pub fn synthesize_end_signal(
    spectrum: &SpectralData,
    dt: f64,
    n_samples: usize,
) -> Result<TimeSignal> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let product = dt * spectrum.max_abs_lambda();
    if product >= std::f64::consts::PI {
        return Err(Error::NyquistViolation { product });
    }
    let samples = (0..n_samples)
        .map(|k| {
            let t = k as f64 * dt;
            spectrum
                .modes()
                .iter()
                .map(|m| Complex64::from_polar(m.weight, -m.lambda * t))
                .sum()
        })
        .collect();
    TimeSignal::new(dt, samples)
}

/// Default simulated-measurement grid: dt = 0.1 / max(1, max|lambda|),
/// 2^16 samples. Resolves well-separated interior peaks while leaving
/// near-degenerate band-edge pairs of long chains unresolved, which is the
/// regime the truncation studies care about.
pub fn default_measurement_grid(max_abs_lambda: f64) -> (f64, usize) {
    (0.1 / max_abs_lambda.max(1.0), 1 << 16)
}

/// Reads (lambda_n, C_{1,n}) off the DFT of a sampled end-site signal.
///
/// Local maxima of the DFT magnitude above `peak_floor` (calibrated height)
/// become modes. Sub-bin positions come from three-point quadratic-family
/// interpolation on the complex bins (Jacobsen's estimator, exact for the
/// rectangular-window Dirichlet kernel in the large-K limit); heights are
/// calibrated by the window mainlobe gain K sinc(delta), so an isolated mode
/// of weight C reports C within 2%. Close peaks leak into each other; the
/// floor should sit above the leakage ripple of the strongest line.
///
/// Fails if two accepted peaks land within one frequency bin (2 pi / T) of
/// each other: their mainlobes merge and neither height nor position is
/// trustworthy.
pub fn extract_spectrum(signal: &TimeSignal, peak_floor: f64) -> Result<SpectralData> {
    if !peak_floor.is_finite() || peak_floor < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "peak_floor = {peak_floor} must be finite and nonnegative"
        )));
    }
    let k_bins = signal.samples().len();
    let mut buf = signal.samples().to_vec();
    FftPlanner::new().plan_fft_forward(k_bins).process(&mut buf);
    let mags: Vec<f64> = buf.iter().map(|x| x.norm()).collect();

    // Peak bin positions p relate to eigenvalues by lambda = -2 pi p / (K dt),
    // with p read modulo K into (-K/2, K/2].
    let mut peaks: Vec<(f64, f64)> = Vec::new(); // (bin position p, calibrated height)
    for j in 0..k_bins {
        let prev = mags[(j + k_bins - 1) % k_bins];
        let next = mags[(j + 1) % k_bins];
        // Plateau tie-break: strict left, loose right keeps one bin per crest.
        if !(mags[j] > prev && mags[j] >= next) {
            continue;
        }
        let x0 = buf[j];
        let xm = buf[(j + k_bins - 1) % k_bins];
        let xp = buf[(j + 1) % k_bins];
        let denom = 2.0 * x0 - xm - xp;
        // An isolated line keeps |delta| <= 0.5; larger pulls mean the bins
        // are contaminated by a neighbor, so give the estimate one full bin
        // of slack and let the resolution check below judge the collision.
        let delta = if denom.norm_sqr() == 0.0 {
            0.0
        } else {
            ((xm - xp) / denom).re.clamp(-1.0, 1.0)
        };
        let height = mags[j] / (k_bins as f64 * sinc(delta));
        if height > peak_floor {
            peaks.push((j as f64 + delta, height));
        }
    }

    // Mainlobes of distinct accepted peaks must stay at least one bin apart,
    // circularly.
    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let bin_width = 2.0 * std::f64::consts::PI / signal.duration();
    for idx in 0..peaks.len() {
        if peaks.len() < 2 {
            break;
        }
        let (pa, _) = peaks[idx];
        let (pb, _) = peaks[(idx + 1) % peaks.len()];
        let gap = if idx + 1 == peaks.len() { pb + k_bins as f64 - pa } else { pb - pa };
        if gap < 1.0 {
            return Err(Error::UnresolvedPeaks {
                lambda_a: bin_to_lambda(pa, k_bins, signal.dt()),
                lambda_b: bin_to_lambda(pb, k_bins, signal.dt()),
                bin_width,
            });
        }
    }

    let mut modes: Vec<Mode> = peaks
        .into_iter()
        .map(|(p, height)| Mode { lambda: bin_to_lambda(p, k_bins, signal.dt()), weight: height })
        .collect();
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(SpectralData::from_sorted_unchecked(modes, false))
}

fn bin_to_lambda(p: f64, k_bins: usize, dt: f64) -> f64 {
    let k = k_bins as f64;
    let mut p = p.rem_euclid(k);
    if p > k / 2.0 {
        p -= k;
    }
    -2.0 * std::f64::consts::PI * p / (k * dt)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::random_chain;

    #[test]
    fn homogeneous_two_sites() {
        let s = homogeneous_spectrum(2, 0.0, 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.modes()[0].lambda + 1.0).abs() < 1e-15);
        assert!((s.modes()[1].lambda - 1.0).abs() < 1e-15);
        assert!((s.modes()[0].weight - 0.5).abs() < 1e-15);
        assert!((s.modes()[1].weight - 0.5).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_single_site() {
        let s = homogeneous_spectrum(1, 0.4, 2.0).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.modes()[0].lambda - 0.4).abs() < 1e-15);
        assert!((s.modes()[0].weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn end_site_spectrum_two_sites() {
        let spec = ChainSpec::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let s = end_site_spectrum(&spec);
        assert!((s.modes()[0].lambda + 1.0).abs() < 1e-14);
        assert!((s.modes()[1].lambda - 1.0).abs() < 1e-14);
        assert!((s.modes()[0].weight - 0.5).abs() < 1e-14);
        assert!((s.modes()[1].weight - 0.5).abs() < 1e-14);
    }

    #[test]
    fn end_site_matches_homogeneous_closed_form() {
        let spec = ChainSpec::homogeneous(100, 0.0, 1.0).unwrap();
        let exact = end_site_spectrum(&spec);
        let closed = homogeneous_spectrum(100, 0.0, 1.0).unwrap();
        for (a, b) in exact.modes().iter().zip(closed.modes()) {
            assert!((a.lambda - b.lambda).abs() <= 1e-10, "{} vs {}", a.lambda, b.lambda);
            assert!((a.weight - b.weight).abs() <= 1e-10, "{} vs {}", a.weight, b.weight);
        }
    }

    #[test]
    fn moment_identities_hold() {
        // sum C = 1, sum lambda C = eps_1, sum lambda^2 C = eps_1^2 + J_12^2
        let energies = vec![0.3, -0.2, 0.8, 0.1, -0.5, 0.0, 0.7, 0.2];
        let spec = random_chain(8, 0.5, 1.5, energies, 23).unwrap();
        let s = end_site_spectrum(&spec);
        let m0: f64 = s.modes().iter().map(|m| m.weight).sum();
        let m1: f64 = s.modes().iter().map(|m| m.lambda * m.weight).sum();
        let m2: f64 = s.modes().iter().map(|m| m.lambda * m.lambda * m.weight).sum();
        let eps1 = spec.energies()[0];
        let j12 = spec.couplings()[0];
        assert!((m0 - 1.0).abs() < 1e-12, "weight sum {m0}");
        assert!((m1 - eps1).abs() < 1e-12, "first moment {m1} vs {eps1}");
        assert!((m2 - eps1 * eps1 - j12 * j12).abs() < 1e-12, "second moment {m2}");
    }

    #[test]
    fn spectral_data_validates() {
        let dup = vec![Mode { lambda: 1.0, weight: 0.5 }, Mode { lambda: 1.0, weight: 0.5 }];
        assert!(matches!(SpectralData::new(dup, true), Err(Error::InvalidSpectrum(_))));
        let neg = vec![Mode { lambda: 0.0, weight: -0.1 }];
        assert!(SpectralData::new(neg, false).is_err());
        let bad_sum = vec![Mode { lambda: 0.0, weight: 0.3 }];
        assert!(SpectralData::new(bad_sum.clone(), true).is_err());
        assert!(SpectralData::new(bad_sum, false).is_ok());
    }

    #[test]
    fn spectral_data_sorts_on_construction() {
        let s = SpectralData::new(
            vec![Mode { lambda: 1.0, weight: 0.5 }, Mode { lambda: -1.0, weight: 0.5 }],
            true,
        )
        .unwrap();
        assert_eq!(s.modes()[0].lambda, -1.0);
    }

    #[test]
    fn synthesis_constant_for_single_zero_mode() {
        let s = SpectralData::new(vec![Mode { lambda: 0.0, weight: 1.0 }], true).unwrap();
        let sig = synthesize_end_signal(&s, 0.5, 16).unwrap();
        for x in sig.samples() {
            assert!((x - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn synthesis_of_symmetric_pair_is_cosine() {
        let s = SpectralData::new(
            vec![Mode { lambda: -1.0, weight: 0.5 }, Mode { lambda: 1.0, weight: 0.5 }],
            true,
        )
        .unwrap();
        let dt = 0.1;
        let sig = synthesize_end_signal(&s, dt, 64).unwrap();
        for (k, x) in sig.samples().iter().enumerate() {
            let expect = (k as f64 * dt).cos();
            assert!((x.re - expect).abs() < 1e-12, "k={k}: {} vs {expect}", x.re);
            assert!(x.im.abs() < 1e-12);
        }
        assert!((sig.samples()[0].re - 1.0).abs() < 1e-15, "t=0 sample is the weight sum");
    }

    #[test]
    fn synthesis_rejects_aliasing_grid() {
        let s = SpectralData::new(vec![Mode { lambda: 40.0, weight: 1.0 }], true).unwrap();
        assert!(matches!(
            synthesize_end_signal(&s, 0.1, 16),
            Err(Error::NyquistViolation { .. })
        ));
    }

    #[test]
    fn extract_isolated_peak() {
        // T = 400: position good to a bin 2 pi / 400, height to 2%
        let s = SpectralData::new(vec![Mode { lambda: 0.3, weight: 1.0 }], true).unwrap();
        let sig = synthesize_end_signal(&s, 0.1, 4000).unwrap();
        let got = extract_spectrum(&sig, 0.1).unwrap();
        assert_eq!(got.len(), 1);
        assert!(!got.complete());
        let bin = 2.0 * std::f64::consts::PI / 400.0;
        assert!((got.modes()[0].lambda - 0.3).abs() <= bin, "lambda {}", got.modes()[0].lambda);
        assert!((got.modes()[0].weight - 1.0).abs() <= 0.02, "weight {}", got.modes()[0].weight);
    }

    #[test]
    fn extract_symmetric_pair() {
        let s = SpectralData::new(
            vec![Mode { lambda: -1.0, weight: 0.5 }, Mode { lambda: 1.0, weight: 0.5 }],
            true,
        )
        .unwrap();
        let sig = synthesize_end_signal(&s, 0.1, 4096).unwrap();
        let got = extract_spectrum(&sig, 0.05).unwrap();
        assert_eq!(got.len(), 2, "expected two peaks, got {:?}", got.modes());
        let bin = 2.0 * std::f64::consts::PI / 409.6;
        assert!((got.modes()[0].lambda + 1.0).abs() <= bin);
        assert!((got.modes()[1].lambda - 1.0).abs() <= bin);
        for m in got.modes() {
            assert!((m.weight - 0.5).abs() <= 0.01, "weight {}", m.weight);
        }
    }

    #[test]
    fn extract_recovers_six_site_chain() {
        let spec = ChainSpec::homogeneous(6, 0.0, 1.0).unwrap();
        let exact = end_site_spectrum(&spec);
        let (dt, n) = default_measurement_grid(exact.max_abs_lambda());
        let sig = synthesize_end_signal(&exact, dt, n).unwrap();
        let got = extract_spectrum(&sig, 0.01).unwrap();
        assert_eq!(got.len(), 6, "expected six peaks, got {:?}", got.modes());
        let bin = 2.0 * std::f64::consts::PI / sig.duration();
        for (g, e) in got.modes().iter().zip(exact.modes()) {
            assert!(
                (g.lambda - e.lambda).abs() <= bin,
                "lambda {} vs {} (bin {bin})",
                g.lambda,
                e.lambda
            );
            assert!(
                (g.weight - e.weight).abs() <= 0.02 * e.weight,
                "weight {} vs {}",
                g.weight,
                e.weight
            );
        }
    }

    #[test]
    fn extract_flags_unresolved_pair() {
        // Two equal lines 1.7 bins apart whose relative phase carves a dip
        // between them: the flanking maxima refine to positions less than
        // one bin apart, which is a merged-mainlobe readout.
        let k = 64;
        let dt = 0.1;
        let samples: Vec<Complex64> = (0..k)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * 30.4 * i as f64 / k as f64;
                let b = 2.0 * std::f64::consts::PI * 32.1 * i as f64 / k as f64
                    + 4.0 * std::f64::consts::PI / 3.0;
                0.5 * Complex64::from_polar(1.0, a) + 0.5 * Complex64::from_polar(1.0, b)
            })
            .collect();
        let sig = TimeSignal::new(dt, samples).unwrap();
        match extract_spectrum(&sig, 0.05) {
            Err(Error::UnresolvedPeaks { .. }) => {}
            other => panic!("expected resolution failure, got {other:?}"),
        }
    }
}
