//! Batch runs driven by a JSON configuration.
//!
//! A run solves every requested `(k0, polarization)` pair, optionally checks the
//! constant-index supersymmetry, and writes `report.json`, `spectrum.csv` and
//! one `x psi field potential` file per guided mode. Sweeps add
//! `dispersion.csv` with SUSY pair ids.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{Grid, MaterialProfile, TabulatedProfile};
use crate::reduction::{field_from_wavefunction, Polarization};
use crate::spectral::{compute_spectrum, ModeSpectrum};
use crate::susy::{default_constancy_tol, superpotential, verify_susy, zero_modes, SusyReport};

/// A guided mode whose edge amplitude exceeds this fraction of its peak gets a warning.
pub const BOUNDARY_WARNING_RATIO: f64 = 1e-8;
pub const DEFAULT_PAIR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { eps: f64, mu: f64 },
    GaussianSusyPair { n0: f64, alpha: f64 },
    SechSquaredEps { eps_b: f64, delta: f64, width: f64 },
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub constancy: Option<f64>,
    pub pairing: Option<f64>,
}

fn default_polarizations() -> Vec<Polarization> {
    Polarization::BOTH.to_vec()
}

fn default_max_modes() -> usize {
    6
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("gradmode-out")
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub k0: Option<f64>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default = "default_polarizations")]
    pub polarizations: Vec<Polarization>,
    #[serde(default = "default_max_modes")]
    pub max_modes: usize,
    #[serde(default)]
    pub susy_check: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub write_mode_files: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::config(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })
    }

    /// Reads and validates a config file. Relative tabulated paths resolve
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let mut config = Self::from_json(&text)?;
        if let ProfileSpec::Tabulated { path: table } = &mut config.profile {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n_points)
            .map_err(|e| Error::config("grid", e.to_string()))?;
        match (self.k0, self.sweep) {
            (None, None) => return Err(Error::config("k0", "either k0 or sweep is required")),
            (Some(_), Some(_)) => {
                return Err(Error::config("sweep", "give either k0 or sweep, not both"))
            }
            (Some(k0), None) if !(k0 > 0.0 && k0.is_finite()) => {
                return Err(Error::config("k0", format!("must be positive, got {k0}")))
            }
            (None, Some(s)) => {
                if s.steps < 2 {
                    return Err(Error::config(
                        "sweep.steps",
                        format!("must be at least 2, got {}", s.steps),
                    ));
                }
                if !(s.start > 0.0 && s.stop > 0.0 && s.start.is_finite() && s.stop.is_finite()) {
                    return Err(Error::config("sweep", "start and stop must be positive"));
                }
            }
            _ => {}
        }
        if self.max_modes < 1 {
            return Err(Error::config("max_modes", "must be at least 1"));
        }
        if self.polarizations.is_empty() {
            return Err(Error::config(
                "polarizations",
                "at least one polarization is required",
            ));
        }
        for (name, value) in [
            ("tolerances.constancy", self.tolerances.constancy),
            ("tolerances.pairing", self.tolerances.pairing),
        ] {
            if let Some(v) = value {
                if !(v > 0.0) {
                    return Err(Error::config(name, format!("must be positive, got {v}")));
                }
            }
        }
        match &self.profile {
            ProfileSpec::Tabulated { .. } => Ok(()),
            _ => self
                .build_profile()
                .map(|_| ())
                .map_err(|e| Error::config("profile", e.to_string())),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n_points)
    }

    pub fn build_profile(&self) -> Result<MaterialProfile> {
        match &self.profile {
            ProfileSpec::Constant { eps, mu } => MaterialProfile::constant(*eps, *mu),
            ProfileSpec::GaussianSusyPair { n0, alpha } => {
                MaterialProfile::gaussian_susy_pair(*n0, *alpha)
            }
            ProfileSpec::SechSquaredEps {
                eps_b,
                delta,
                width,
            } => MaterialProfile::sech_squared_eps(*eps_b, *delta, *width),
            ProfileSpec::Tabulated { path } => Ok(MaterialProfile::tabulated(
                TabulatedProfile::from_path(path)?,
            )),
        }
    }

    /// Wavenumbers to solve, in order.
    pub fn k0_values(&self) -> Vec<f64> {
        match (self.k0, self.sweep) {
            (Some(k0), _) => vec![k0],
            (None, Some(s)) => (0..s.steps)
                .map(|i| {
                    if i + 1 == s.steps {
                        s.stop
                    } else {
                        s.start + (s.stop - s.start) * i as f64 / (s.steps - 1) as f64
                    }
                })
                .collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode_index: usize,
    pub nodes: usize,
    pub beta_sq: f64,
    pub e_schr: f64,
    pub guided: bool,
    pub boundary_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub k0: f64,
    pub polarization: Polarization,
    pub modes: Vec<ModeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SusySection {
    Verified { k0: f64, report: SusyReport },
    NotConstantIndex { max_deviation: f64, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub profile: ProfileSpec,
    pub grid: GridSpec,
    pub spectra: Vec<SpectrumSummary>,
    pub susy: Vec<SusySection>,
    pub warnings: Vec<String>,
}

/// Everything a run computed, before anything is written.
pub struct RunOutcome {
    pub report: RunReport,
    pub spectra: Vec<ModeSpectrum>,
    profile: MaterialProfile,
}

fn summarize(s: &ModeSpectrum) -> SpectrumSummary {
    SpectrumSummary {
        k0: s.k0,
        polarization: s.polarization,
        modes: s
            .modes
            .iter()
            .map(|m| ModeSummary {
                mode_index: m.mode_index,
                nodes: m.mode_index,
                beta_sq: m.beta_sq,
                e_schr: m.e_schr,
                guided: true,
                boundary_ratio: m.boundary_ratio,
            })
            .collect(),
    }
}

/// Solves everything the config asks for. No files are touched.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let grid = config.grid()?;
    let profile = config.build_profile()?;

    let mut polarizations = config.polarizations.clone();
    if config.susy_check {
        polarizations = Polarization::BOTH.to_vec();
    }
    polarizations.sort();
    polarizations.dedup();

    let jobs: Vec<(f64, Polarization)> = config
        .k0_values()
        .into_iter()
        .flat_map(|k0| polarizations.iter().map(move |&p| (k0, p)))
        .collect();
    let spectra: Vec<ModeSpectrum> = jobs
        .par_iter()
        .map(|&(k0, pol)| compute_spectrum(&profile, &grid, k0, pol, config.max_modes))
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    for s in &spectra {
        for m in &s.modes {
            if m.boundary_ratio > BOUNDARY_WARNING_RATIO {
                warnings.push(format!(
                    "{} mode {} at k0 = {}: edge amplitude {:.3e} of peak; widen the grid",
                    s.polarization, m.mode_index, s.k0, m.boundary_ratio
                ));
            }
        }
    }

    let mut susy = Vec::new();
    if config.susy_check {
        let tol = config
            .tolerances
            .constancy
            .unwrap_or_else(|| default_constancy_tol(&profile));
        let pair_tol = config.tolerances.pairing.unwrap_or(DEFAULT_PAIR_TOL);
        match superpotential(&profile, &grid, tol) {
            Ok(w) => {
                let zero = zero_modes(&w, &profile, &grid)?;
                for pair in spectra.chunks(2) {
                    if let [te, tm] = pair {
                        let report = verify_susy(te, tm, &w, &zero, pair_tol)?;
                        susy.push(SusySection::Verified { k0: te.k0, report });
                    }
                }
            }
            Err(Error::NotConstantIndex { max_deviation, x }) => {
                susy.push(SusySection::NotConstantIndex { max_deviation, x });
            }
            Err(e) => return Err(e),
        }
    }

    let report = RunReport {
        profile: config.profile.clone(),
        grid: config.grid,
        spectra: spectra.iter().map(summarize).collect(),
        susy,
        warnings,
    };
    Ok(RunOutcome {
        report,
        spectra,
        profile,
    })
}

/// Shortest representation that round-trips.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn spectrum_csv(report: &RunReport) -> String {
    let mut out = String::from("k0,polarization,mode_index,beta_sq,e_schr,nodes,guided\n");
    for s in &report.spectra {
        for m in &s.modes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                num(s.k0),
                s.polarization,
                m.mode_index,
                num(m.beta_sq),
                num(m.e_schr),
                m.nodes,
                m.guided
            );
        }
    }
    out
}

/// One row per (k0, polarization, mode); SUSY partners share `pair_id` (the TE index).
pub fn dispersion_csv(report: &RunReport) -> String {
    let mut out = String::from("k0,polarization,mode_index,beta_sq,pair_id\n");
    for s in &report.spectra {
        let pairs = report.susy.iter().find_map(|section| match section {
            SusySection::Verified { k0, report } if *k0 == s.k0 => Some(&report.pairing),
            _ => None,
        });
        for m in &s.modes {
            let pair_id = pairs
                .and_then(|ps| {
                    ps.iter().find(|p| match s.polarization {
                        Polarization::TE => p.te_index == m.mode_index,
                        Polarization::TM => p.tm_index == m.mode_index,
                    })
                })
                .map(|p| format!("S{}", p.te_index))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                num(s.k0),
                s.polarization,
                m.mode_index,
                num(m.beta_sq),
                pair_id
            );
        }
    }
    out
}

pub fn mode_file_name(pol: Polarization, k0: f64, mode_index: usize) -> String {
    format!("{}_mode{}_{}.dat", pol, k0, mode_index)
}

fn write_mode_files(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    for s in &outcome.spectra {
        for m in &s.modes {
            let field = field_from_wavefunction(&m.psi, &outcome.profile, &s.grid, s.polarization)?;
            let mut text = String::from("# x psi field potential\n");
            for (i, x) in s.grid.points().enumerate() {
                let _ = writeln!(
                    text,
                    "{} {} {} {}",
                    num(x),
                    num(m.psi[i]),
                    num(field[i]),
                    num(s.potential.v[i])
                );
            }
            fs::write(
                dir.join(mode_file_name(s.polarization, s.k0, m.mode_index)),
                text,
            )?;
        }
    }
    Ok(())
}

/// Writes `report.json`, `spectrum.csv`, optional mode files, and
/// `dispersion.csv` when `dispersion` is set.
pub fn write_outputs(
    outcome: &RunOutcome,
    config: &RunConfig,
    dir: &Path,
    dispersion: bool,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&outcome.report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("spectrum.csv"), spectrum_csv(&outcome.report))?;
    if dispersion {
        fs::write(dir.join("dispersion.csv"), dispersion_csv(&outcome.report))?;
    }
    if config.write_mode_files {
        write_mode_files(outcome, dir)?;
    }
    Ok(())
}

/// Full run: solve, then write into `out` (or the config's output directory).
pub fn run(config: &RunConfig, out: Option<&Path>) -> Result<RunReport> {
    let outcome = execute(config)?;
    let dir = out.unwrap_or(&config.output_dir);
    write_outputs(&outcome, config, dir, false)?;
    Ok(outcome.report)
}

/// Dispersion sweep; the config must carry a `sweep` block.
pub fn sweep(config: &RunConfig, out: Option<&Path>) -> Result<RunReport> {
    if config.sweep.is_none() {
        return Err(Error::config(
            "sweep",
            "the sweep command needs a sweep block",
        ));
    }
    let outcome = execute(config)?;
    let dir = out.unwrap_or(&config.output_dir);
    write_outputs(&outcome, config, dir, true)?;
    Ok(outcome.report)
}

/// Process exit code for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => 2,
        _ => 3,
    }
}
