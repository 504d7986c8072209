//! Run configuration: one TOML file with a top-level `seed` and a section
//! per experiment. Every section is optional and unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::AssemblyConfig;
use crate::perturb::PerturbationConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    pub seed: u64,
    pub construction: PerturbationConfig,
    pub lyapunov: LyapunovSection,
    pub prop51: Prop51Section,
    pub drift: DriftSection,
    pub birkhoff: BirkhoffSection,
    pub holonomy: HolonomySection,
    pub assembly: AssemblySection,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            seed: 1,
            construction: PerturbationConfig::default(),
            lyapunov: LyapunovSection::default(),
            prop51: Prop51Section::default(),
            drift: DriftSection::default(),
            birkhoff: BirkhoffSection::default(),
            holonomy: HolonomySection::default(),
            assembly: AssemblySection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSection {
    /// One of `S`, `R`, `Q`, `P`, `f`.
    pub map: String,
    pub n_iters: usize,
    pub qr_every: usize,
    /// Independent runs; run `i` uses seed `seed + i`.
    pub runs: usize,
    /// Starting interval coordinate; negative selects the default for the
    /// map (the twist centre for `S`, `R`, `Q`, the box height for `P`).
    pub z0: f64,
    /// Bands iterated when `map = "f"`.
    pub bands: Vec<usize>,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        LyapunovSection { map: "Q".into(), n_iters: 1_000_000, qr_every: 10, runs: 1, z0: -1.0, bands: vec![1, 2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop51Section {
    pub alpha_grid: Vec<f64>,
    pub n_samples: usize,
}

impl Default for Prop51Section {
    fn default() -> Self {
        Prop51Section { alpha_grid: vec![0.0, 0.02, 0.05, 0.1, 0.2], n_samples: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftSection {
    pub map: String,
    pub z0_grid: Vec<f64>,
}

impl Default for DriftSection {
    fn default() -> Self {
        DriftSection { map: "R".into(), z0_grid: vec![0.25, 0.5, 0.75] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BirkhoffSection {
    pub bands: Vec<usize>,
    /// `z`, `surface` or `product`.
    pub observable: String,
    pub n_starts: usize,
    pub n_iters: usize,
}

impl Default for BirkhoffSection {
    fn default() -> Self {
        BirkhoffSection { bands: vec![1, 2, 3, 4], observable: "surface".into(), n_starts: 10, n_iters: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolonomySection {
    pub k_grid: Vec<usize>,
}

impl Default for HolonomySection {
    fn default() -> Self {
        HolonomySection { k_grid: vec![1, 2, 4, 8] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblySection {
    pub n_max: usize,
    /// Samples used to choose the band strengths.
    pub c1_samples: usize,
    /// Samples of each distance reported by `assemble-report`.
    pub report_samples: usize,
    pub fd_step: f64,
}

impl Default for AssemblySection {
    fn default() -> Self {
        AssemblySection { n_max: 4, c1_samples: 2000, report_samples: 4000, fd_step: 1e-6 }
    }
}

impl LabConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of the resolved configuration in canonical form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn assembly_config(&self) -> AssemblyConfig {
        AssemblyConfig {
            n_max: self.assembly.n_max,
            delta_prime: self.construction.delta_prime,
            c1_samples: self.assembly.c1_samples,
            fd_step: self.assembly.fd_step,
            seed: self.seed,
        }
    }
}
