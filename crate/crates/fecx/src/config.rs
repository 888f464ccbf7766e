//! Run configuration: one JSON document, every field optional.

use std::fs;
use std::path::{Path, PathBuf};

use fecx_core::analytic::{alpha_direction, beta_direction, pairing_direction};
use fecx_core::eigen::SolverConfig;
use fecx_core::geometry::{AngleFrame, RegionLabel, Thresholds};
use fecx_core::hamiltonian::HamiltonianParams;
use fecx_core::model::{Blocking, StateSelection};
use fecx_core::trajectory::TrajectoryConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sample,
    Trajectory,
    Ensemble,
    Derivatives,
    Verify,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sample => "sample",
            Mode::Trajectory => "trajectory",
            Mode::Ensemble => "ensemble",
            Mode::Derivatives => "derivatives",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockingChoice {
    /// Parity sectors up to `N = 8`, their symmetric parts beyond; the full
    /// sector whenever `ε ≠ 0`.
    #[default]
    Auto,
    Full,
    Parity,
    Symmetric,
}

impl BlockingChoice {
    pub fn resolve(self, n: usize, needs_full: bool) -> Blocking {
        match self {
            BlockingChoice::Full => Blocking::Full,
            BlockingChoice::Parity => Blocking::Parity,
            BlockingChoice::Symmetric => Blocking::Symmetric,
            BlockingChoice::Auto if needs_full => Blocking::Full,
            BlockingChoice::Auto if n <= 8 => Blocking::Parity,
            BlockingChoice::Auto => Blocking::Symmetric,
        }
    }
}

/// A trajectory endpoint: explicit parameters, a named direction, or a
/// region to draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Params(HamiltonianParams),
    /// `alpha`, `beta` or `pairing`.
    Direction(String),
    /// Region label (`FPC`, `EC_alpha`, `EC_beta`, `FEC`).
    Region(String),
}

impl Endpoint {
    pub fn direction(name: &str) -> Option<HamiltonianParams> {
        match name.to_ascii_lowercase().as_str() {
            "alpha" => Some(alpha_direction()),
            "beta" => Some(beta_direction()),
            "pairing" | "fpc" => Some(pairing_direction()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub count: usize,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection { count: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSection {
    pub initial: Endpoint,
    #[serde(rename = "final")]
    pub final_: Endpoint,
    /// Particle number whose ground states label region endpoints.
    pub label_particles: usize,
    pub max_draws: usize,
}

impl Default for EndpointSection {
    fn default() -> Self {
        EndpointSection {
            initial: Endpoint::Direction("beta".into()),
            final_: Endpoint::Direction("pairing".into()),
            label_particles: 4,
            max_draws: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub count: usize,
    pub from: String,
    pub to: String,
    /// Write one CSV per trajectory.
    pub write_trajectories: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            count: 24,
            from: RegionLabel::EcAlpha.as_str().into(),
            to: RegionLabel::Fpc.as_str().into(),
            write_trajectories: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DerivativesSection {
    /// Particle numbers to compare; empty means `n_particles` alone.
    pub particles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Random `(c1, c2)` draws per ansatz.
    pub coefficient_draws: usize,
    /// Random ground states for the `²D → ²G` mapping check.
    pub mapping_states: usize,
    pub class_algebra: bool,
    pub crossing_scan: bool,
    pub crossing_grid: usize,
    /// Write the four Hamiltonian terms as coordinate triples.
    pub export_operators: bool,
    /// Write `¹D`, `²D` and `G̃` of the ground state at `rdm_point`.
    pub export_rdms: bool,
    pub rdm_point: HamiltonianParams,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            coefficient_draws: 20,
            mapping_states: 200,
            class_algebra: true,
            crossing_scan: true,
            crossing_grid: 41,
            export_operators: false,
            export_rdms: false,
            rdm_point: HamiltonianParams::two_body(-1.0, 1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub n_particles: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
    pub blocking: BlockingChoice,
    /// Compute `λ_D` and `λ_G`; `None` computes them up to `N = 8`.
    pub rdms: Option<bool>,
    pub selection: StateSelection,
    pub solver: SolverConfig,
    pub thresholds: Thresholds,
    pub frame: AngleFrame,
    pub sample: SampleSection,
    pub trajectory: TrajectoryConfig,
    pub endpoints: EndpointSection,
    pub ensemble: EnsembleSection,
    pub derivatives: DerivativesSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Verify,
            n_particles: 4,
            seed: 1,
            out: PathBuf::from("fecx-out"),
            threads: None,
            blocking: BlockingChoice::Auto,
            rdms: None,
            selection: StateSelection::Ensemble,
            solver: SolverConfig::default(),
            thresholds: Thresholds::default(),
            frame: AngleFrame::default(),
            sample: SampleSection::default(),
            trajectory: TrajectoryConfig::default(),
            endpoints: EndpointSection::default(),
            ensemble: EnsembleSection::default(),
            derivatives: DerivativesSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn rdms_enabled(&self, n: usize) -> bool {
        self.rdms.unwrap_or(n <= 8)
    }

    /// The trajectory settings with the run-level selection, frame, solver
    /// and RDM choice folded in.
    pub fn trajectory_for(&self, n: usize) -> TrajectoryConfig {
        let mut t = self.trajectory.clone();
        t.rdms = self.rdms_enabled(n);
        t.selection = self.selection;
        t.frame = self.frame;
        t.solver = self.solver.clone();
        t
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.n_particles;
        if n < 2 || n % 2 == 1 {
            return Err(field("n_particles", format!("{n} is not an even number of at least 2")));
        }
        if n > fecx_core::fock::MAX_PARTICLES {
            return Err(field(
                "n_particles",
                format!("{n} exceeds {}", fecx_core::fock::MAX_PARTICLES),
            ));
        }
        if self.threads == Some(0) {
            return Err(field("threads", "must be at least 1"));
        }
        if self.solver.k == 0 || self.solver.block == 0 {
            return Err(field("solver", "k and block must be positive"));
        }
        if !(self.solver.tol > 0.0) || !(self.solver.deg_tol >= 0.0) {
            return Err(field("solver", "tolerances must be positive"));
        }
        match self.mode {
            Mode::Sample if self.sample.count == 0 => {
                return Err(field("sample.count", "must be at least 1"));
            }
            Mode::Trajectory | Mode::Derivatives | Mode::Ensemble if self.trajectory.grid < 16 => {
                return Err(field("trajectory.grid", format!("{} is below 16", self.trajectory.grid)));
            }
            Mode::Ensemble if self.ensemble.count < 2 => {
                return Err(field("ensemble.count", "an ensemble needs at least 2 trajectories"));
            }
            _ => {}
        }
        if self.mode == Mode::Ensemble {
            for (name, label) in [("ensemble.from", &self.ensemble.from), ("ensemble.to", &self.ensemble.to)] {
                if RegionLabel::parse(label).is_none() {
                    return Err(field(name, format!("unknown region `{label}`")));
                }
            }
        }
        if matches!(self.mode, Mode::Trajectory | Mode::Derivatives) {
            for (name, e) in [("endpoints.initial", &self.endpoints.initial), ("endpoints.final", &self.endpoints.final_)] {
                match e {
                    Endpoint::Params(p) if p.is_zero() => {
                        return Err(field(name, "parameters are all zero"));
                    }
                    Endpoint::Params(p) if p.epsilon != 0.0 && self.blocking == BlockingChoice::Parity => {
                        return Err(field(name, "ε ≠ 0 needs full or auto blocking"));
                    }
                    Endpoint::Direction(d) if Endpoint::direction(d).is_none() => {
                        return Err(field(name, format!("unknown direction `{d}`")));
                    }
                    Endpoint::Region(r) if RegionLabel::parse(r).is_none() => {
                        return Err(field(name, format!("unknown region `{r}`")));
                    }
                    _ => {}
                }
            }
        }
        for &m in &self.derivatives.particles {
            if m < 2 || m % 2 == 1 || m > fecx_core::fock::MAX_PARTICLES {
                return Err(field("derivatives.particles", format!("{m} is not a valid particle number")));
            }
        }
        Ok(())
    }
}
