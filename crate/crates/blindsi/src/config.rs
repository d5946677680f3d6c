//! Experiment configuration: a TOML file with a flat top level plus `em`,
//! `system`, and `basis` sections. Every field has a default matching the
//! benchmark protocol (6 groups of 100 runs, N = 200, n = 50, noise at a
//! tenth of the signal variance), so an empty file is a valid full-scale
//! configuration. Unknown keys are rejected rather than ignored; a typo in
//! a tolerance should not silently run the default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{
    equally_spaced_frequencies, equally_spaced_instants, piecewise_constant_basis, sinusoid_basis,
    InputBasis,
};
use crate::em::EmSettings;
use crate::error::{Error, Result};
use crate::simulation::RandomSystemSpec;

/// One Monte Carlo group: `runs` independent instances at input dimension
/// `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub p: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmSection {
    pub conv_tol: f64,
    pub max_iters: usize,
    pub beta_grid: usize,
    pub restarts: usize,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = EmSettings::default();
        Self {
            conv_tol: d.conv_tol,
            max_iters: d.max_iters,
            beta_grid: d.beta_grid_size,
            restarts: d.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub n_poles: usize,
    pub n_zeros: usize,
    pub pole_mag_max: f64,
    pub zero_mag_max: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let d = RandomSystemSpec::default();
        Self {
            n_poles: d.n_poles,
            n_zeros: d.n_zeros,
            pole_mag_max: d.pole_mag_max,
            zero_mag_max: d.zero_mag_max,
        }
    }
}

/// Input-subspace description. `kind` selects the family;
/// `switch_instants` (piecewise constant) or `frequencies` (sinusoid) pin
/// its parameters for single-instance commands. The benchmark ignores the
/// explicit lists and derives equally spaced parameters from each group's
/// `p` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch_instants: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            kind: "piecewise_constant".into(),
            switch_instants: None,
            frequencies: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n: usize,
    pub noise_ratio: f64,
    pub groups: Vec<GroupSpec>,
    pub seed: u64,
    pub em: EmSection,
    pub system: SystemSection,
    pub basis: BasisSection,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            big_n: 200,
            n: 50,
            noise_ratio: 10.0,
            groups: [10, 20, 30, 40, 50, 60]
                .into_iter()
                .map(|p| GroupSpec { p, runs: 100 })
                .collect(),
            seed: 0,
            em: EmSection::default(),
            system: SystemSection::default(),
            basis: BasisSection::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Parses a TOML string and validates the result.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.big_n == 0 || self.n == 0 {
            return Err(Error::Input("N and n must be positive".into()));
        }
        if self.n > self.big_n {
            return Err(Error::Input(format!(
                "cannot estimate n = {} impulse-response samples from N = {} outputs",
                self.n, self.big_n
            )));
        }
        if self.noise_ratio.is_nan() || self.noise_ratio <= 0.0 {
            return Err(Error::Input(format!(
                "noise_ratio must be positive, got {}",
                self.noise_ratio
            )));
        }
        if self.groups.is_empty() {
            return Err(Error::Input("at least one group is required".into()));
        }
        for g in &self.groups {
            if g.p == 0 || g.runs == 0 {
                return Err(Error::Input(format!(
                    "group p = {} runs = {}: both must be positive",
                    g.p, g.runs
                )));
            }
            if g.p > self.big_n {
                return Err(Error::Input(format!(
                    "group p = {} exceeds the output length N = {}",
                    g.p, self.big_n
                )));
            }
        }
        if self.em.conv_tol.is_nan() || self.em.conv_tol <= 0.0 {
            return Err(Error::Input(format!(
                "em.conv_tol must be positive, got {}",
                self.em.conv_tol
            )));
        }
        if self.em.max_iters == 0 || self.em.beta_grid < 2 || self.em.restarts == 0 {
            return Err(Error::Input(
                "em.max_iters and em.restarts must be positive and em.beta_grid at least 2".into(),
            ));
        }
        self.system_spec(0).validate()?;
        match self.basis.kind.as_str() {
            "piecewise_constant" | "sinusoid" => {}
            other => {
                return Err(Error::Input(format!(
                    "basis.kind must be \"piecewise_constant\" or \"sinusoid\", got \"{other}\""
                )))
            }
        }
        Ok(())
    }

    /// EM settings for one run; `seed` is the per-run value derived by the
    /// harness, not the master seed.
    pub fn em_settings(&self, seed: u64) -> EmSettings {
        EmSettings {
            conv_tol: self.em.conv_tol,
            max_iters: self.em.max_iters,
            beta_grid_size: self.em.beta_grid,
            n: self.n,
            restarts: self.em.restarts,
            seed,
        }
    }

    pub fn system_spec(&self, seed: u64) -> RandomSystemSpec {
        RandomSystemSpec {
            n_poles: self.system.n_poles,
            n_zeros: self.system.n_zeros,
            pole_mag_max: self.system.pole_mag_max,
            zero_mag_max: self.system.zero_mag_max,
            seed,
        }
    }

    /// Basis for single-instance commands: the explicit parameter list if
    /// one is present, otherwise equally spaced parameters at dimension
    /// `fallback_p`.
    pub fn instance_basis(&self, fallback_p: usize) -> Result<InputBasis> {
        match self.basis.kind.as_str() {
            "piecewise_constant" => match &self.basis.switch_instants {
                Some(instants) => piecewise_constant_basis(instants, self.big_n),
                None => self.group_basis(fallback_p),
            },
            "sinusoid" => match &self.basis.frequencies {
                Some(freqs) => sinusoid_basis(freqs, self.big_n),
                None => self.group_basis(fallback_p),
            },
            other => Err(Error::Input(format!("unknown basis kind \"{other}\""))),
        }
    }

    /// Basis with equally spaced parameters at dimension `p`, as used for
    /// every benchmark group.
    pub fn group_basis(&self, p: usize) -> Result<InputBasis> {
        match self.basis.kind.as_str() {
            "piecewise_constant" => {
                piecewise_constant_basis(&equally_spaced_instants(p, self.big_n)?, self.big_n)
            }
            "sinusoid" => sinusoid_basis(&equally_spaced_frequencies(p), self.big_n),
            other => Err(Error::Input(format!("unknown basis kind \"{other}\""))),
        }
    }
}
