//! Run configuration, read from TOML and overridden by flags.

use std::path::{Path, PathBuf};

use clockdil::channels::{amplitude_damping_preset, ChannelFamily, Lindbladian, LindbladianSpec};
use clockdil::decoupling::{doubling, DecouplingSet, SweepConfig};
use clockdil::dilation::{AnalyticAdDilation, DilationSource, PipelineDilation};
use clockdil::numerics::{c, pauli};
use clockdil::pointstate::Demo;
use clockdil::{TimeGrid, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "CLOCKDIL_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for random models and Haar probe states.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub sweep: SweepSection,
    pub pointstate: PointstateConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("clockdil-out"),
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            sweep: SweepSection::default(),
            pointstate: PointstateConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `amplitude-damping`, `identity`, `hamiltonian`, `hamiltonian-z` or
    /// `random`; ignored when `file` is set.
    pub preset: String,
    /// TOML file holding a Lindbladian (`dim`, `hamiltonian`, `jumps`).
    pub file: Option<PathBuf>,
    /// Dimension for `identity` and `random`.
    pub dim: usize,
    /// Jump operators for `random`.
    pub jumps: usize,
    /// Spectral-norm scale of the `random` generator.
    pub scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { preset: "amplitude-damping".into(), file: None, dim: 2, jumps: 2, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { t_max: 3.0, cells: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub t: f64,
    pub n_list: Vec<usize>,
    /// `pauli` or `weyl`.
    pub set: String,
    pub order: Option<Vec<usize>>,
    pub cells_per_interval: usize,
    pub haar_probes: usize,
    /// `pipeline`, or `analytic` for the closed-form amplitude-damping
    /// dilation.
    pub source: String,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            t: 1.0,
            n_list: doubling(8, 4096),
            set: "pauli".into(),
            order: None,
            cells_per_interval: 8,
            haar_probes: 20,
            source: "pipeline".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointstateConfig {
    pub demo: String,
    pub eps_levels: u32,
}

impl Default for PointstateConfig {
    fn default() -> Self {
        Self { demo: "delta".into(), eps_levels: 12 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = self.tolerances.non_positive();
        if !bad.is_empty() {
            return Err(CliError::Config(format!("tolerances must be positive: {}", bad.join(", "))));
        }
        if !(self.grid.t_max > 0.0) || self.grid.cells == 0 {
            return Err(CliError::Config("grid.t_max and grid.cells must be positive".into()));
        }
        if !(self.sweep.t > 0.0) || self.sweep.cells_per_interval == 0 {
            return Err(CliError::Config("sweep.t and sweep.cells_per_interval must be positive".into()));
        }
        if self.sweep.n_list.is_empty() {
            return Err(CliError::Config("sweep.n_list is empty".into()));
        }
        if self.pointstate.eps_levels == 0 {
            return Err(CliError::Config("pointstate.eps_levels must be positive".into()));
        }
        Ok(())
    }

    pub fn lindbladian(&self) -> Result<Lindbladian, CliError> {
        if let Some(file) = &self.model.file {
            let text = std::fs::read_to_string(file)
                .map_err(|e| CliError::Config(format!("cannot read model file {}: {e}", file.display())))?;
            let spec: LindbladianSpec =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("model file {}: {e}", file.display())))?;
            return Ok(spec.build()?);
        }
        let m = &self.model;
        let l = match m.preset.as_str() {
            "amplitude-damping" => amplitude_damping_preset(),
            "identity" => Lindbladian::identity(m.dim),
            "hamiltonian" => {
                Lindbladian::hamiltonian_only((pauli::x() + pauli::y() + pauli::z()) * c(1.0 / 3f64.sqrt(), 0.0))?
            }
            "hamiltonian-z" => Lindbladian::hamiltonian_only(pauli::z())?,
            "random" => Lindbladian::random(m.dim, m.jumps, m.scale, self.seed)?,
            other => {
                return Err(CliError::Config(format!(
                    "model.preset: unknown model {other:?}; expected amplitude-damping, identity, hamiltonian, hamiltonian-z or random"
                )))
            }
        };
        Ok(l)
    }

    pub fn family(&self) -> Result<ChannelFamily, CliError> {
        Ok(ChannelFamily::semigroup(self.lindbladian()?))
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::uniform(self.grid.t_max, self.grid.cells)?)
    }

    pub fn decoupling_set(&self, dim: usize) -> Result<DecouplingSet, CliError> {
        match self.sweep.set.as_str() {
            "pauli" if dim == 2 => Ok(DecouplingSet::pauli()),
            "pauli" => {
                Err(CliError::Config(format!("sweep.set: the Pauli set needs a qubit, model has dimension {dim}")))
            }
            "weyl" => Ok(DecouplingSet::weyl(dim)?),
            other => Err(CliError::Config(format!("sweep.set: unknown set {other:?}; expected pauli or weyl"))),
        }
    }

    pub fn source(&self) -> Result<Box<dyn DilationSource>, CliError> {
        match self.sweep.source.as_str() {
            "pipeline" => {
                let mut src = PipelineDilation::new(self.family()?);
                src.tolerances = self.tolerances;
                Ok(Box::new(src))
            }
            "analytic" if self.model.file.is_none() && self.model.preset == "amplitude-damping" => {
                Ok(Box::new(AnalyticAdDilation))
            }
            "analytic" => Err(CliError::Config(
                "sweep.source: the analytic dilation exists only for the amplitude-damping preset".into(),
            )),
            other => {
                Err(CliError::Config(format!("sweep.source: unknown source {other:?}; expected pipeline or analytic")))
            }
        }
    }

    /// Sweep settings; every `n` must be a multiple of `|V|`.
    pub fn sweep_config(&self, set: &DecouplingSet) -> Result<SweepConfig, CliError> {
        if let Some(n) = self.sweep.n_list.iter().find(|&&n| n == 0 || n % set.len() != 0) {
            return Err(CliError::Config(format!(
                "sweep.n_list: {n} is not a positive multiple of |V| = {}",
                set.len()
            )));
        }
        Ok(SweepConfig {
            t: self.sweep.t,
            n_list: self.sweep.n_list.clone(),
            cells_per_interval: self.sweep.cells_per_interval,
            order: self.sweep.order.clone(),
            haar_probes: self.sweep.haar_probes,
            seed: self.seed,
        })
    }

    pub fn demo(&self) -> Result<Demo, CliError> {
        self.pointstate.demo.parse::<Demo>().map_err(|e| CliError::Config(format!("pointstate.demo: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("[sweep]\nn_lsit = [8]\n").unwrap_err();
        assert!(err.to_string().contains("n_lsit"), "{err}");
    }

    #[test]
    fn n_list_must_match_set() {
        let mut cfg = RunConfig::default();
        cfg.sweep.n_list = vec![8, 10];
        assert!(cfg.sweep_config(&DecouplingSet::pauli()).is_err());
    }

    #[test]
    fn negative_tolerance_rejected() {
        let cfg = RunConfig::parse("[tolerances]\ncptp = -1.0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("cptp"));
    }
}
