//! The five named studies over the reconstruction engine.
//!
//! Seeding discipline: ground-truth chain k draws its couplings from the
//! stream `derive_seed(base_seed, k)`, and the jitter ensemble attached to
//! that chain runs on `derive_seed(chain_seed, JITTER_STREAM)`. Chains are
//! therefore identical across conditions of one run (paired comparisons),
//! and changing the ensemble size never reshuffles the ground truths.
//! Chains and ensemble samples may be computed in parallel, but every
//! reduction walks indices in order, so a report is a pure function of its
//! configuration.
//!
//! The noise studies (truncation, coupling-disorder, eigenvalue-jitter) use
//! the plain two-row recursion: its error growth under inconsistent input
//! is the behavior under study. The roundtrip study feeds exact spectra and
//! wants the longest faithful prefix, so it uses the reorthogonalized
//! variant instead.

use crate::config::{ExperimentConfig, Scenario};
use crate::distance::reconstruction_distance;
use crate::report::{slug, BondRow, ConditionTables, ScenarioReport, SpectrumRow, SummaryRow};
use crate::{CliError, Result};
use chainscope_core::{
    apply_truncation, default_measurement_grid, derive_seed, end_site_spectrum,
    ensemble_reconstruct, extract_spectrum, heisenberg_site_energies, normalize_spectrum,
    random_chain, reconstruct_couplings, reconstruct_couplings_reorthogonalized,
    synthesize_end_signal, Aggregator, ChainSpec, EnsembleSpec, JitterModel, SpectralData,
    TruncationModel,
};
use rayon::prelude::*;

/// FFT peak acceptance threshold for the demo pipeline; well below the
/// smallest end-site weight of a short homogeneous chain (about 0.05 for
/// N = 6) and well above the rectangular-window leakage floor.
const DEMO_PEAK_FLOOR: f64 = 0.01;

/// Stream index separating a chain's jitter ensemble from its coupling
/// draws.
const JITTER_STREAM: u64 = 7;

/// The two disorder ranges compared by the coupling-disorder study.
const DISORDER_RANGES: [(f64, f64); 2] = [(0.9, 1.1), (0.8, 1.2)];

/// Builds the report and writes it under `output_dir/<scenario>/`.
pub fn run_scenario(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let report = build_report(config)?;
    report.write()?;
    Ok(report)
}

/// Runs the configured study without touching the filesystem; validation
/// and every numerical step happen before any caller would write a file.
pub fn build_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    config.validate()?;
    match config.scenario {
        Scenario::Demo => demo_report(config),
        Scenario::Truncation => truncation_report(config),
        Scenario::CouplingDisorder => disorder_report(config),
        Scenario::EigenvalueJitter => jitter_report(config),
        Scenario::Roundtrip => roundtrip_report(config),
    }
}

fn homogeneous_chain(config: &ExperimentConfig) -> Result<ChainSpec> {
    let couplings = vec![config.j_low; config.n_sites - 1];
    let energies = heisenberg_site_energies(&couplings, config.delta);
    Ok(ChainSpec::new(energies, couplings)?)
}

/// Random couplings first, then the coupling-dependent site energies; with
/// delta = 0 the diagonal is zero and the draft chain is already correct.
fn random_chain_with_delta(
    n_sites: usize,
    j_low: f64,
    j_high: f64,
    delta: f64,
    seed: u64,
) -> Result<ChainSpec> {
    let draft = random_chain(n_sites, j_low, j_high, vec![0.0; n_sites], seed)?;
    if delta == 0.0 {
        return Ok(draft);
    }
    let energies = heisenberg_site_energies(draft.couplings(), delta);
    Ok(ChainSpec::new(energies, draft.couplings().to_vec())?)
}

/// Estimates padded with NaN to the full bond count, so tables and the
/// distance metric always see equal lengths even after an aborted run.
fn padded(est: &[f64], n_bonds: usize) -> Vec<f64> {
    let mut out = est.to_vec();
    out.truncate(n_bonds);
    out.resize(n_bonds, f64::NAN);
    out
}

fn bond_rows(j_true: &[f64], j_est: &[f64]) -> Vec<BondRow> {
    j_true
        .iter()
        .zip(j_est)
        .enumerate()
        .map(|(idx, (&truth, &est))| BondRow::new(idx + 1, truth, est))
        .collect()
}

fn spectrum_rows(spectrum: &SpectralData, flags: Option<&[bool]>) -> Vec<SpectrumRow> {
    spectrum
        .modes()
        .iter()
        .enumerate()
        .map(|(idx, m)| SpectrumRow {
            n: idx + 1,
            lambda: m.lambda,
            c1: m.weight,
            truncated: flags.is_some_and(|f| f[idx]),
        })
        .collect()
}

/// Marks which modes of `full` are absent from `kept`; truncation preserves
/// surviving modes bit for bit, so identity matching is exact.
fn truncation_flags(full: &SpectralData, kept: &SpectralData) -> Vec<bool> {
    let mut kept_modes = kept.modes().iter().peekable();
    full.modes()
        .iter()
        .map(|m| {
            if kept_modes.peek().is_some_and(|k| k.lambda == m.lambda) {
                kept_modes.next();
                false
            } else {
                true
            }
        })
        .collect()
}

/// Worst relative coupling error; a missing (NaN) estimate counts as
/// infinite, so a broken chain can never look accurate.
fn worst_rel_err(j_true: &[f64], j_est: &[f64]) -> f64 {
    j_true
        .iter()
        .zip(j_est)
        .map(|(&truth, &est)| {
            let rel = ((est - truth) / truth).abs();
            if rel.is_nan() {
                f64::INFINITY
            } else {
                rel
            }
        })
        .fold(0.0, f64::max)
}

fn median(mut values: Vec<usize>) -> f64 {
    values.sort_unstable();
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m] as f64
    } else {
        (values[m - 1] + values[m]) as f64 / 2.0
    }
}

/// Exact pipeline on a short homogeneous chain: synthesized end-site
/// signal, FFT peak extraction, normalization, reconstruction. A broken
/// bond here is a genuine failure, not a study outcome.
fn demo_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let chain = homogeneous_chain(config)?;
    let exact = end_site_spectrum(&chain);
    let (dt, n_samples) = default_measurement_grid(exact.max_abs_lambda());
    let signal = synthesize_end_signal(&exact, dt, n_samples)?;
    let raw = extract_spectrum(&signal, DEMO_PEAK_FLOOR)?;
    let normalized = normalize_spectrum(&raw)?;
    let recon = reconstruct_couplings(&normalized, chain.energies())?;
    if let Some(bond) = recon.aborted_at {
        return Err(CliError::Numerical(format!(
            "demo reconstruction broke at bond {bond}"
        )));
    }
    let n_bonds = config.n_sites - 1;
    let est = padded(&recon.couplings_est, n_bonds);
    let dist = reconstruction_distance(chain.couplings(), &est, config.distance_tol)?;
    Ok(ScenarioReport {
        config: config.clone(),
        conditions: vec![ConditionTables {
            label: "exact".to_string(),
            bonds: bond_rows(chain.couplings(), &est),
            spectrum: spectrum_rows(&normalized, None),
        }],
        summary: vec![SummaryRow {
            condition: "demo".to_string(),
            value: worst_rel_err(chain.couplings(), &est),
            distance: dist as f64,
        }],
    })
}

/// Weight-threshold sweep on the exact spectrum of a homogeneous chain.
fn truncation_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let chain = homogeneous_chain(config)?;
    let exact = end_site_spectrum(&chain);
    let n_bonds = config.n_sites - 1;
    let mut conditions = Vec::new();
    let mut summary = Vec::new();
    for &theta in &config.theta_list {
        let model = TruncationModel::new(theta)?;
        let kept = apply_truncation(&exact, &model)?;
        let renormalized = normalize_spectrum(&kept)?;
        let recon = reconstruct_couplings(&renormalized, chain.energies())?;
        let est = padded(&recon.couplings_est, n_bonds);
        let dist = reconstruction_distance(chain.couplings(), &est, config.distance_tol)?;
        let label = format!("theta-{}", slug(theta));
        summary.push(SummaryRow {
            condition: label.clone(),
            value: theta,
            distance: dist as f64,
        });
        conditions.push(ConditionTables {
            label,
            bonds: bond_rows(chain.couplings(), &est),
            spectrum: spectrum_rows(&exact, Some(&truncation_flags(&exact, &kept))),
        });
    }
    Ok(ScenarioReport { config: config.clone(), conditions, summary })
}

/// Fixed-range disorder comparison: distances per ground-truth seed and
/// their median, for each (range, theta) condition. The same chains are
/// reused across conditions, so range effects are paired.
fn disorder_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let n_bonds = config.n_sites - 1;
    let mut conditions = Vec::new();
    let mut summary = Vec::new();
    for &(j_low, j_high) in &DISORDER_RANGES {
        for &theta in &config.theta_list {
            let model = TruncationModel::new(theta)?;
            let label = format!("j-{j_low}-{j_high}-theta-{}", slug(theta));
            let mut distances = Vec::with_capacity(config.n_seeds);
            for k in 0..config.n_seeds {
                let chain = random_chain_with_delta(
                    config.n_sites,
                    j_low,
                    j_high,
                    config.delta,
                    derive_seed(config.base_seed, k as u64),
                )?;
                let spectrum = end_site_spectrum(&chain);
                let kept = apply_truncation(&spectrum, &model)?;
                let renormalized = normalize_spectrum(&kept)?;
                let recon = reconstruct_couplings(&renormalized, chain.energies())?;
                let est = padded(&recon.couplings_est, n_bonds);
                let dist =
                    reconstruction_distance(chain.couplings(), &est, config.distance_tol)?;
                distances.push(dist);
                summary.push(SummaryRow {
                    condition: format!("{label}/seed-{k:02}"),
                    value: k as f64,
                    distance: dist as f64,
                });
                if k == 0 {
                    conditions.push(ConditionTables {
                        label: label.clone(),
                        bonds: bond_rows(chain.couplings(), &est),
                        spectrum: spectrum_rows(
                            &spectrum,
                            Some(&truncation_flags(&spectrum, &kept)),
                        ),
                    });
                }
            }
            summary.push(SummaryRow {
                condition: format!("{label}/median"),
                value: (j_high - j_low) / 2.0,
                distance: median(distances),
            });
        }
    }
    Ok(ScenarioReport { config: config.clone(), conditions, summary })
}

/// Gaussian eigenvalue jitter with ensemble-averaged reconstruction. A
/// sigma = 0 control condition is appended when absent: it must recover
/// every bond and anchors the comparison.
fn jitter_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let mut sigmas = config.sigma_list.clone();
    if !sigmas.iter().any(|&s| s == 0.0) {
        sigmas.push(0.0);
    }
    let mut conditions = Vec::new();
    let mut summary = Vec::new();
    for &sigma in &sigmas {
        let label = format!("sigma-{}", slug(sigma));
        let mut distances = Vec::with_capacity(config.n_seeds);
        for k in 0..config.n_seeds {
            let chain_seed = derive_seed(config.base_seed, k as u64);
            let chain = random_chain_with_delta(
                config.n_sites,
                config.j_low,
                config.j_high,
                config.delta,
                chain_seed,
            )?;
            let spectrum = end_site_spectrum(&chain);
            let jitter = JitterModel::new(sigma, derive_seed(chain_seed, JITTER_STREAM))?;
            let n_samples = if sigma == 0.0 { 1 } else { config.n_samples };
            let ensemble = EnsembleSpec::new(n_samples, jitter, Aggregator::Mean)?;
            let result = ensemble_reconstruct(&spectrum, chain.energies(), &ensemble)?;
            let dist = reconstruction_distance(
                chain.couplings(),
                &result.couplings_est,
                config.distance_tol,
            )?;
            distances.push(dist);
            summary.push(SummaryRow {
                condition: format!("{label}/seed-{k:02}"),
                value: k as f64,
                distance: dist as f64,
            });
            if k == 0 {
                conditions.push(ConditionTables {
                    label: label.clone(),
                    bonds: bond_rows(chain.couplings(), &result.couplings_est),
                    spectrum: spectrum_rows(&spectrum, None),
                });
            }
        }
        summary.push(SummaryRow {
            condition: format!("{label}/median"),
            value: sigma,
            distance: median(distances),
        });
    }
    Ok(ScenarioReport { config: config.clone(), conditions, summary })
}

struct ChainOutcome {
    spectrum: SpectralData,
    j_true: Vec<f64>,
    j_est: Vec<f64>,
    worst: f64,
    distance: usize,
}

/// Exact-spectrum round trips over long random chains, in parallel; the
/// summary lists the worst relative error and distance per chain plus an
/// overall worst line.
fn roundtrip_report(config: &ExperimentConfig) -> Result<ScenarioReport> {
    let n_bonds = config.n_sites - 1;
    let outcomes: Vec<ChainOutcome> = (0..config.n_samples as u64)
        .into_par_iter()
        .map(|k| -> Result<ChainOutcome> {
            let chain = random_chain_with_delta(
                config.n_sites,
                config.j_low,
                config.j_high,
                config.delta,
                derive_seed(config.base_seed, k),
            )?;
            let spectrum = end_site_spectrum(&chain);
            let recon = reconstruct_couplings_reorthogonalized(&spectrum, chain.energies())?;
            let est = padded(&recon.couplings_est, n_bonds);
            let dist = reconstruction_distance(chain.couplings(), &est, config.distance_tol)?;
            Ok(ChainOutcome {
                spectrum,
                j_true: chain.couplings().to_vec(),
                worst: worst_rel_err(chain.couplings(), &est),
                j_est: est,
                distance: dist,
            })
        })
        .collect::<Result<_>>()?;

    let mut summary: Vec<SummaryRow> = outcomes
        .iter()
        .enumerate()
        .map(|(k, outcome)| SummaryRow {
            condition: format!("chain-{k:02}"),
            value: outcome.worst,
            distance: outcome.distance as f64,
        })
        .collect();
    summary.push(SummaryRow {
        condition: "worst".to_string(),
        value: outcomes.iter().map(|o| o.worst).fold(0.0, f64::max),
        distance: outcomes.iter().map(|o| o.distance).min().unwrap_or(0) as f64,
    });
    let first = &outcomes[0];
    Ok(ScenarioReport {
        config: config.clone(),
        conditions: vec![ConditionTables {
            label: "chain-00".to_string(),
            bonds: bond_rows(&first.j_true, &first.j_est),
            spectrum: spectrum_rows(&first.spectrum, None),
        }],
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, Scenario};

    #[test]
    fn demo_recovers_all_couplings_within_two_percent() {
        let config = ExperimentConfig::defaults(Scenario::Demo);
        let report = build_report(&config).expect("demo report");
        assert_eq!(report.summary.len(), 1, "single summary row");
        assert_eq!(report.summary[0].distance, 5.0, "all five bonds accepted");
        assert!(
            report.summary[0].value <= 0.02,
            "worst relative error {} above 2%",
            report.summary[0].value
        );
        let bonds = &report.conditions[0].bonds;
        assert_eq!(bonds.len(), 5, "five bond rows");
        for row in bonds {
            assert!(
                (row.j_est - 1.0).abs() <= 0.02,
                "bond {}: estimate {}",
                row.i,
                row.j_est
            );
        }
    }

    #[test]
    fn truncation_with_zero_threshold_reconstructs_everything() {
        let mut config = ExperimentConfig::defaults(Scenario::Truncation);
        config.n_sites = 30;
        config.theta_list = vec![0.0];
        let report = build_report(&config).expect("truncation report");
        assert_eq!(report.summary[0].distance, 29.0, "no modes lost, no bonds lost");
        let flags = &report.conditions[0].spectrum;
        assert!(flags.iter().all(|r| !r.truncated), "nothing truncated at theta = 0");
    }

    #[test]
    fn truncation_marks_removed_modes() {
        let mut config = ExperimentConfig::defaults(Scenario::Truncation);
        config.n_sites = 40;
        config.theta_list = vec![1e-2];
        let report = build_report(&config).expect("truncation report");
        let spectrum = &report.conditions[0].spectrum;
        let removed = spectrum.iter().filter(|r| r.truncated).count();
        assert!(removed > 0, "threshold 1e-2 must remove band-edge modes at N = 40");
        assert!(removed < spectrum.len(), "threshold must keep interior modes");
    }

    #[test]
    fn disorder_report_has_seed_rows_and_medians() {
        let mut config = ExperimentConfig::defaults(Scenario::CouplingDisorder);
        config.n_sites = 12;
        config.n_seeds = 4;
        config.theta_list = vec![1e-3];
        let report = build_report(&config).expect("disorder report");
        assert_eq!(report.conditions.len(), 2, "one table per range");
        assert_eq!(report.summary.len(), 2 * (4 + 1), "seed rows plus a median per range");
        for range_label in ["j-0.9-1.1-theta-1e-3", "j-0.8-1.2-theta-1e-3"] {
            let median = report
                .distance_for(&format!("{range_label}/median"))
                .unwrap_or_else(|| panic!("missing median row for {range_label}"));
            assert!(median >= 0.0 && median <= 11.0, "median {median} out of range");
        }
    }

    #[test]
    fn jitter_control_recovers_every_bond() {
        let mut config = ExperimentConfig::defaults(Scenario::EigenvalueJitter);
        config.n_sites = 16;
        config.n_seeds = 2;
        config.n_samples = 3;
        config.sigma_list = vec![1e-2];
        let report = build_report(&config).expect("jitter report");
        let control = report
            .distance_for("sigma-0/median")
            .expect("control condition always present");
        assert_eq!(control, 15.0, "sigma = 0 must reconstruct all bonds");
        let noisy = report.distance_for("sigma-1e-2/median").expect("requested condition");
        assert!(noisy <= control, "noise cannot beat the control");
    }

    #[test]
    fn roundtrip_short_chains_are_exact() {
        let mut config = ExperimentConfig::defaults(Scenario::Roundtrip);
        config.n_sites = 40;
        config.n_samples = 3;
        let report = build_report(&config).expect("roundtrip report");
        let worst = report
            .summary
            .iter()
            .find(|r| r.condition == "worst")
            .expect("worst row");
        assert!(worst.value <= 1e-10, "worst relative error {}", worst.value);
        assert_eq!(worst.distance, 39.0, "all bonds within tolerance");
    }

    #[test]
    fn same_config_builds_byte_identical_files() {
        let mut config = ExperimentConfig::defaults(Scenario::Truncation);
        config.n_sites = 24;
        config.theta_list = vec![1e-2];
        let dir_a = tempfile::tempdir().expect("tempdir");
        let dir_b = tempfile::tempdir().expect("tempdir");
        for (dir, _) in [(&dir_a, 0), (&dir_b, 1)] {
            let mut run = config.clone();
            run.output_dir = dir.path().to_path_buf();
            run_scenario(&run).expect("scenario runs");
        }
        for file in ["summary.csv", "theta-1e-2/bonds.csv", "theta-1e-2/spectrum.csv"] {
            let a = std::fs::read(dir_a.path().join("truncation").join(file)).expect("read a");
            let b = std::fs::read(dir_b.path().join("truncation").join(file)).expect("read b");
            // The output_dir line in the provenance header differs by the
            // tempdir name; strip header comments before comparing.
            let body = |bytes: &[u8]| -> Vec<u8> {
                let text = String::from_utf8(bytes.to_vec()).expect("utf8");
                text.lines()
                    .filter(|l| !l.starts_with('#'))
                    .flat_map(|l| l.bytes().chain(std::iter::once(b'\n')))
                    .collect()
            };
            assert_eq!(body(&a), body(&b), "{file} bodies differ between reruns");
        }
    }
}
