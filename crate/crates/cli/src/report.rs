//! Report tables and their CSV serialization.
//!
//! Layout under the output directory: one directory per scenario holding
//! `summary.csv` plus one subdirectory per condition with `bonds.csv` and
//! `spectrum.csv` (and SVG plots when requested). Every file starts with the
//! same `#`-prefixed provenance block: a tool version line followed by the
//! resolved configuration echoed as `key = value` lines, which
//! [`parse_provenance`] turns back into the configuration that produced the
//! file. Floats are printed with 17 significant digits so the CSV values
//! round-trip to the exact bits that were computed.

use crate::config::{resolve, ConfigFile, ExperimentConfig, Overrides};
use crate::{CliError, Result};
use std::path::Path;

/// One bond: true coupling, estimate, and the signed deviation
/// delta_j = j_est - j_true.
#[derive(Debug, Clone, PartialEq)]
pub struct BondRow {
    pub i: usize,
    pub j_true: f64,
    pub j_est: f64,
    pub delta_j: f64,
}

impl BondRow {
    pub fn new(i: usize, j_true: f64, j_est: f64) -> Self {
        BondRow { i, j_true, j_est, delta_j: j_est - j_true }
    }
}

/// One spectral line as the reconstruction saw it; `truncated` marks modes
/// removed by the weight threshold before reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub n: usize,
    pub lambda: f64,
    pub c1: f64,
    pub truncated: bool,
}

/// One summary line. `condition` is a free-form label; `value` carries the
/// condition parameter (threshold, deviation, seed index, or worst relative
/// error, depending on the scenario) and `distance` the reconstruction
/// distance, fractional for medians over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub condition: String,
    pub value: f64,
    pub distance: f64,
}

/// Representative per-bond and spectrum tables for one condition; for
/// seed-aggregated scenarios these show the first ground-truth seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionTables {
    /// Directory name under the scenario directory; no path separators.
    pub label: String,
    pub bonds: Vec<BondRow>,
    pub spectrum: Vec<SpectrumRow>,
}

/// Everything a scenario run produced, still in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub config: ExperimentConfig,
    pub conditions: Vec<ConditionTables>,
    pub summary: Vec<SummaryRow>,
}

impl ScenarioReport {
    /// Distance column of the summary row with this exact condition label.
    pub fn distance_for(&self, condition: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|row| row.condition == condition)
            .map(|row| row.distance)
    }

    /// Writes summary.csv plus per-condition tables (and plots when the
    /// config asks for them) under `output_dir/<scenario>/`.
    pub fn write(&self) -> Result<()> {
        let root = self.config.output_dir.join(self.config.scenario.name());
        create_dir(&root)?;
        let header = provenance_header(&self.config);

        let mut summary = String::from(&header);
        summary.push_str("condition,value,distance\n");
        for row in &self.summary {
            summary.push_str(&format!(
                "{},{},{}\n",
                row.condition,
                fmt_float(row.value),
                fmt_float(row.distance)
            ));
        }
        write_file(&root.join("summary.csv"), &summary)?;

        for cond in &self.conditions {
            let dir = root.join(&cond.label);
            create_dir(&dir)?;

            let mut bonds = String::from(&header);
            bonds.push_str("i,j_true,j_est,delta_j\n");
            for row in &cond.bonds {
                bonds.push_str(&format!(
                    "{},{},{},{}\n",
                    row.i,
                    fmt_float(row.j_true),
                    fmt_float(row.j_est),
                    fmt_float(row.delta_j)
                ));
            }
            write_file(&dir.join("bonds.csv"), &bonds)?;

            let mut spectrum = String::from(&header);
            spectrum.push_str("n,lambda,c1,truncated\n");
            for row in &cond.spectrum {
                spectrum.push_str(&format!(
                    "{},{},{},{}\n",
                    row.n,
                    fmt_float(row.lambda),
                    fmt_float(row.c1),
                    row.truncated
                ));
            }
            write_file(&dir.join("spectrum.csv"), &spectrum)?;

            if self.config.emit_plots {
                let bonds_svg = crate::plot::bonds_svg(&cond.label, &cond.bonds);
                write_file(&dir.join("bonds.svg"), &bonds_svg)?;
                let spectrum_svg = crate::plot::spectrum_svg(&cond.label, &cond.spectrum);
                write_file(&dir.join("spectrum.svg"), &spectrum_svg)?;
            }
        }
        Ok(())
    }
}

/// 17 significant digits; enough to reproduce any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// The `#`-prefixed header block carried by every emitted file: a version
/// line plus the full configuration echo in config-file syntax.
pub fn provenance_header(config: &ExperimentConfig) -> String {
    let echo = ConfigFile::from(config);
    let toml_text = toml::to_string(&echo).expect("config echo serializes");
    let mut out = format!("# generated by chainscope {}\n", env!("CARGO_PKG_VERSION"));
    for line in toml_text.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Reads the provenance block back into the configuration that wrote it.
/// Only `key = value` comment lines participate; the version line and the
/// CSV body are ignored.
pub fn parse_provenance(file_text: &str) -> Result<ExperimentConfig> {
    let mut toml_text = String::new();
    for line in file_text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix("# ") {
            if rest.contains(" = ") {
                toml_text.push_str(rest);
                toml_text.push('\n');
            }
        }
    }
    let file = ConfigFile::parse(&toml_text)?;
    resolve(Some(file), &Overrides::default())
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Condition label fragment for a threshold value: `0` for zero, otherwise
/// the shortest exponent form (`1e-2`, `2.5e-1`).
pub fn slug(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    fn sample_config() -> ExperimentConfig {
        let mut config = ExperimentConfig::defaults(Scenario::Truncation);
        config.theta_list = vec![0.1, 0.01];
        config.validate().expect("valid sample config");
        config
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        let s = fmt_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0", "pi at 17 digits");
        let back: f64 = s.parse().expect("parse back");
        assert_eq!(back, std::f64::consts::PI, "format must round-trip the bits");
    }

    #[test]
    fn provenance_header_round_trips_the_config() {
        let config = sample_config();
        let mut file_text = provenance_header(&config);
        file_text.push_str("i,j_true,j_est,delta_j\n1,1.0,1.0,0.0\n");
        let parsed = parse_provenance(&file_text).expect("parse header");
        assert_eq!(parsed, config, "header must encode the full config");
    }

    #[test]
    fn every_header_line_is_a_comment() {
        let header = provenance_header(&sample_config());
        for line in header.lines() {
            assert!(line.starts_with('#'), "non-comment header line: {line}");
        }
    }

    #[test]
    fn slugs_are_compact_and_deterministic() {
        assert_eq!(slug(0.1), "1e-1", "theta slug");
        assert_eq!(slug(0.001), "1e-3", "small threshold");
        assert_eq!(slug(0.0), "0", "zero control");
        assert_eq!(slug(0.25), "2.5e-1", "non-decade value");
    }

    #[test]
    fn report_writes_expected_files() {
        let tmp = tempfile::tempdir().expect("tempdir");
        let mut config = sample_config();
        config.output_dir = tmp.path().to_path_buf();
        config.emit_plots = true;
        let report = ScenarioReport {
            config: config.clone(),
            conditions: vec![ConditionTables {
                label: "theta-1e-1".to_string(),
                bonds: vec![BondRow::new(1, 1.0, 1.01)],
                spectrum: vec![SpectrumRow { n: 1, lambda: -1.8, c1: 0.3, truncated: false }],
            }],
            summary: vec![SummaryRow {
                condition: "theta-1e-1".to_string(),
                value: 0.1,
                distance: 49.0,
            }],
        };
        report.write().expect("write report");
        let scenario_dir = tmp.path().join("truncation");
        for file in [
            "summary.csv",
            "theta-1e-1/bonds.csv",
            "theta-1e-1/spectrum.csv",
            "theta-1e-1/bonds.svg",
            "theta-1e-1/spectrum.svg",
        ] {
            assert!(scenario_dir.join(file).is_file(), "missing {file}");
        }
        let summary = std::fs::read_to_string(scenario_dir.join("summary.csv")).expect("read");
        assert!(summary.contains("condition,value,distance"), "summary schema line");
        let parsed = parse_provenance(&summary).expect("summary header parses");
        assert_eq!(parsed, config, "summary header echoes the config");
    }
}
