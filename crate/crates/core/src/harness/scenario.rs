use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::detection::MediumConfig;
use crate::epr::{ChshSettings, EprModel};
use crate::evolution::Potential;
use crate::statistics::{Ensemble, ModeSpectrum, ParticleKind};
use crate::wavepacket::{make_gaussian, Grid1D, Wavepacket, DEFAULT_OVERLAP_THRESHOLD};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ExperimentKind {
    Evolve,
    Emulsion,
    SternGerlach,
    EprChsh,
    EprSweep,
    Statistics,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    experiment: ExperimentKind,
    master_seed: u64,
    output_path: PathBuf,
    parameters: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub n_points: usize,
    pub spacing: f64,
    /// Defaults to a grid centred on x = 0.
    #[serde(default)]
    pub origin: Option<f64>,
}

impl GridParams {
    pub(crate) fn build_checked(&self) -> Result<Grid1D, HarnessError> {
        self.build("parameters.grid")
    }

    fn build(&self, path: &str) -> Result<Grid1D, HarnessError> {
        match self.origin {
            Some(o) => Grid1D::new(self.n_points, self.spacing, o),
            None => Grid1D::centered(self.n_points, self.spacing),
        }
        .map_err(|e| HarnessError::config(path, e))
    }
}

fn default_mass() -> f64 {
    1.0
}

fn default_species() -> String {
    "electron".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketParams {
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub momentum: f64,
    pub sigma: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_species")]
    pub species: String,
}

impl PacketParams {
    pub(crate) fn build_checked(&self, grid: Grid1D) -> Result<Wavepacket, HarnessError> {
        self.build(grid, "parameters.packet")
    }

    fn build(&self, grid: Grid1D, path: &str) -> Result<Wavepacket, HarnessError> {
        make_gaussian(
            grid,
            self.center,
            self.momentum,
            self.sigma,
            self.mass,
            self.species.as_str(),
        )
        .map_err(|e| {
            let field = match e {
                Error::GridTooCoarse { .. } => "sigma",
                Error::BoundaryLeak { .. } => "center",
                Error::InvalidParameter(_) if !(self.mass > 0.0) => "mass",
                _ => "",
            };
            let path = if field.is_empty() {
                path.to_string()
            } else {
                format!("{path}.{field}")
            };
            HarnessError::config(path, e)
        })
    }
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    pub grid: GridParams,
    pub packet: PacketParams,
    #[serde(default = "free_potential")]
    pub potential: Potential,
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
}

fn free_potential() -> Potential {
    Potential::Free
}

fn default_flight_dt() -> f64 {
    1e-3
}

fn default_quanta() -> u32 {
    1
}

fn default_acting() -> usize {
    1
}

fn default_threshold() -> f64 {
    DEFAULT_OVERLAP_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmulsionParams {
    pub grid: GridParams,
    pub packet: PacketParams,
    /// Free evolution of the prototype before it reaches the emulsion.
    #[serde(default)]
    pub free_flight_time: f64,
    #[serde(default = "default_flight_dt")]
    pub flight_dt: f64,
    pub n_particles: usize,
    pub medium: MediumConfig,
    /// Quanta in each incoming packet (copies coalesced before flight).
    #[serde(default = "default_quanta")]
    pub quanta: u32,
    /// Quanta with which each packet acts in the emulsion.
    #[serde(default = "default_acting")]
    pub acting_quanta: usize,
    #[serde(default = "default_threshold")]
    pub overlap_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarDeg {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgParams {
    pub spin: PolarDeg,
    pub axes: Vec<PolarDeg>,
    pub shots_per_axis: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsDeg {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Default for SettingsDeg {
    fn default() -> Self {
        Self {
            a: 0.0,
            a_prime: 90.0,
            b: 45.0,
            b_prime: 135.0,
        }
    }
}

fn default_model() -> EprModel {
    EprModel::P1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshParams {
    #[serde(default = "default_model")]
    pub model: EprModel,
    #[serde(default)]
    pub settings_deg: SettingsDeg,
    pub n_per_setting: u64,
    /// Pair species; dissimilar species force the separated law P2.
    #[serde(default)]
    pub species: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub mu: f64,
    pub distances: Vec<f64>,
    #[serde(default)]
    pub zeta_deg: f64,
    pub n_per_point: u64,
}

fn default_ensemble() -> Ensemble {
    Ensemble::Closed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatisticsParams {
    pub kind: ParticleKind,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    pub energies: Vec<f64>,
    pub beta: f64,
    /// Reservoir chemical potential; required for the reservoir ensemble.
    #[serde(default)]
    pub chemical_potential: Option<f64>,
    pub total_quanta: u64,
    pub n_steps: u64,
    pub burn_in: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", content = "parameters", rename_all = "snake_case")]
pub enum Experiment {
    Evolve(EvolveParams),
    Emulsion(EmulsionParams),
    SternGerlach(SgParams),
    EprChsh(ChshParams),
    EprSweep(SweepParams),
    Statistics(StatisticsParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Evolve(_) => "evolve",
            Experiment::Emulsion(_) => "emulsion",
            Experiment::SternGerlach(_) => "stern_gerlach",
            Experiment::EprChsh(_) => "epr_chsh",
            Experiment::EprSweep(_) => "epr_sweep",
            Experiment::Statistics(_) => "statistics",
        }
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub output_path: PathBuf,
}

fn parse_at<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T, HarnessError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." || inner.is_empty() {
            prefix.to_string()
        } else {
            format!("{prefix}.{inner}")
        };
        HarnessError::config(path, e.into_inner())
    })
}

fn positive(value: f64, path: &str) -> Result<(), HarnessError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(HarnessError::config(path, format!("must be > 0, got {value}")))
    }
}

impl Scenario {
    /// Parses scenario JSON; `seed_override` replaces `master_seed`.
    pub fn from_json_str(text: &str, seed_override: Option<u64>) -> Result<Self, HarnessError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::config(path, e.into_inner())
        })?;
        let p = raw.parameters;
        let experiment = match raw.experiment {
            ExperimentKind::Evolve => Experiment::Evolve(parse_at(p, "parameters")?),
            ExperimentKind::Emulsion => Experiment::Emulsion(parse_at(p, "parameters")?),
            ExperimentKind::SternGerlach => Experiment::SternGerlach(parse_at(p, "parameters")?),
            ExperimentKind::EprChsh => Experiment::EprChsh(parse_at(p, "parameters")?),
            ExperimentKind::EprSweep => Experiment::EprSweep(parse_at(p, "parameters")?),
            ExperimentKind::Statistics => Experiment::Statistics(parse_at(p, "parameters")?),
        };
        let scenario = Self {
            experiment,
            master_seed: seed_override.unwrap_or(raw.master_seed),
            output_path: raw.output_path,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Canonical JSON of everything that determines the results (the
    /// output path is excluded). Object keys are sorted.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(&self.experiment).expect("scenario serializes");
        v["master_seed"] = serde_json::json!(self.master_seed);
        serde_json::to_string(&v).expect("value serializes")
    }

    /// Hex SHA-256 of [`Scenario::canonical_json`].
    pub fn digest(&self) -> String {
        let d = Sha256::digest(self.canonical_json().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every precondition of the owning module.
    pub fn validate(&self) -> Result<(), HarnessError> {
        match &self.experiment {
            Experiment::Evolve(p) => {
                let grid = p.grid.build("parameters.grid")?;
                p.packet.build(grid, "parameters.packet")?;
                positive(p.dt, "parameters.dt")?;
                p.potential
                    .sample(&grid, p.packet.mass)
                    .map_err(|e| HarnessError::config("parameters.potential", e))?;
            }
            Experiment::Emulsion(p) => {
                let grid = p.grid.build("parameters.grid")?;
                p.packet.build(grid, "parameters.packet")?;
                if p.free_flight_time < 0.0 || !p.free_flight_time.is_finite() {
                    return Err(HarnessError::config(
                        "parameters.free_flight_time",
                        "must be finite and >= 0",
                    ));
                }
                positive(p.flight_dt, "parameters.flight_dt")?;
                if p.n_particles < crate::detection::MIN_ENSEMBLE {
                    return Err(HarnessError::config(
                        "parameters.n_particles",
                        Error::EnsembleTooSmall {
                            n: p.n_particles,
                            min: crate::detection::MIN_ENSEMBLE,
                        },
                    ));
                }
                if let Err(e) = p.medium.validate(grid.spacing()) {
                    let field = match e {
                        Error::WidthTooSmall { .. } => "reduction_width",
                        _ => "delta_t",
                    };
                    return Err(HarnessError::config(format!("parameters.medium.{field}"), e));
                }
                if p.quanta == 0 {
                    return Err(HarnessError::config("parameters.quanta", "must be >= 1"));
                }
                if p.acting_quanta == 0 || p.acting_quanta > p.quanta as usize {
                    return Err(HarnessError::config(
                        "parameters.acting_quanta",
                        Error::TooManyParts {
                            parts: p.acting_quanta,
                            quanta: p.quanta,
                        },
                    ));
                }
                if !(p.overlap_threshold >= 0.0) {
                    return Err(HarnessError::config("parameters.overlap_threshold", "must be >= 0"));
                }
            }
            Experiment::SternGerlach(p) => {
                crate::spin::SpinDirection::from_degrees(p.spin.theta_deg, p.spin.phi_deg)
                    .map_err(|e| HarnessError::config("parameters.spin", e))?;
                for (i, a) in p.axes.iter().enumerate() {
                    crate::spin::ApparatusAxis::from_degrees(a.theta_deg, a.phi_deg)
                        .map_err(|e| HarnessError::config(format!("parameters.axes[{i}]"), e))?;
                }
                if p.axes.len() < 3 {
                    return Err(HarnessError::config(
                        "parameters.axes",
                        "at least three axes spanning 3-space are required",
                    ));
                }
                if p.shots_per_axis == 0 {
                    return Err(HarnessError::config("parameters.shots_per_axis", "must be >= 1"));
                }
            }
            Experiment::EprChsh(p) => {
                p.model
                    .validate()
                    .map_err(|e| HarnessError::config("parameters.model", e))?;
                let s = p.settings_deg;
                ChshSettings::from_degrees(s.a, s.a_prime, s.b, s.b_prime)
                    .map_err(|e| HarnessError::config("parameters.settings_deg", e))?;
                if p.n_per_setting < crate::epr::MIN_TRIALS_PER_SETTING {
                    return Err(HarnessError::config(
                        "parameters.n_per_setting",
                        format!("must be >= {}", crate::epr::MIN_TRIALS_PER_SETTING),
                    ));
                }
            }
            Experiment::EprSweep(p) => {
                if !(p.mu >= 0.0 && p.mu.is_finite()) {
                    return Err(HarnessError::config("parameters.mu", "must be finite and >= 0"));
                }
                if p.distances.is_empty() {
                    return Err(HarnessError::config("parameters.distances", "must not be empty"));
                }
                for (i, d) in p.distances.iter().enumerate() {
                    if !(*d >= 0.0 && d.is_finite()) {
                        return Err(HarnessError::config(
                            format!("parameters.distances[{i}]"),
                            "must be finite and >= 0",
                        ));
                    }
                }
                if p.distances.windows(2).any(|w| w[1] < w[0]) {
                    return Err(HarnessError::config("parameters.distances", "must be sorted ascending"));
                }
                if p.n_per_point == 0 {
                    return Err(HarnessError::config("parameters.n_per_point", "must be >= 1"));
                }
            }
            Experiment::Statistics(p) => {
                let mu = match (p.ensemble, p.chemical_potential) {
                    (Ensemble::Reservoir, None) => {
                        return Err(HarnessError::config(
                            "parameters.chemical_potential",
                            "required for the reservoir ensemble",
                        ))
                    }
                    (_, m) => m.unwrap_or(0.0),
                };
                let spectrum = ModeSpectrum::new(p.energies.clone(), p.beta, mu).map_err(|e| {
                    let field = if p.beta > 0.0 { "energies" } else { "beta" };
                    HarnessError::config(format!("parameters.{field}"), e)
                })?;
                if p.ensemble == Ensemble::Reservoir {
                    spectrum
                        .check_reservoir(p.kind)
                        .map_err(|e| HarnessError::config("parameters.chemical_potential", e))?;
                }
                if p.kind == ParticleKind::Fermi && p.total_quanta > p.energies.len() as u64 {
                    return Err(HarnessError::config(
                        "parameters.total_quanta",
                        Error::Overfilled {
                            quanta: p.total_quanta,
                            modes: p.energies.len(),
                        },
                    ));
                }
                if p.n_steps <= p.burn_in {
                    return Err(HarnessError::config("parameters.n_steps", "must exceed burn_in"));
                }
                if p.n_steps - p.burn_in < crate::statistics::BATCHES as u64 {
                    return Err(HarnessError::config(
                        "parameters.n_steps",
                        format!("need at least {} steps after burn_in", crate::statistics::BATCHES),
                    ));
                }
            }
        }
        Ok(())
    }
}
