use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Route, SteadyOptions};
use crate::ensemble::Execution;
use crate::model::{ModelParams, NonHermitianOffset};
use crate::spectra::{ReferenceKind, DEFAULT_DENSE_BUDGET};
use crate::{Error, Result};

/// Version of the configuration and output table layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SpectralScan,
    NhSpectralScan,
    DynamicsScan,
    Transient,
    Tebd,
    References,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SpectralScan => "spectral_scan",
            Self::NhSpectralScan => "nh_spectral_scan",
            Self::DynamicsScan => "dynamics_scan",
            Self::Transient => "transient",
            Self::Tebd => "tebd",
            Self::References => "references",
        }
    }

    /// Largest chain length accepted without and with the heavy switch.
    pub fn site_limits(self) -> (usize, usize) {
        match self {
            Self::SpectralScan => (6, 8),
            Self::NhSpectralScan => (12, 16),
            Self::DynamicsScan | Self::Transient => (8, 10),
            Self::Tebd => (16, 32),
            Self::References => (usize::MAX, usize::MAX),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    /// Disorder strengths `h`.
    pub disorder: Vec<f64>,
    /// Fugacities `zeta`; ignored by the fugacity-independent scans.
    pub zeta: Vec<f64>,
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            disorder: uniform(0.0, 20.0, 5),
            zeta: uniform(0.2, 1.0, 5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub dt: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    pub route: Route,
    pub chi_max: usize,
    pub sv_tol: f64,
    /// Depth of the jump-number hierarchy used by the invariant suite.
    pub n_max: usize,
    pub steady: SteadyOptions,
    /// Largest dense eigenproblem; the heavy switch lifts it.
    pub budget: usize,
    /// Side of the spacing-ratio histogram grid (0 disables it).
    pub density_bins: usize,
    /// Smallest fugacity accepted by the steady-state scan.
    pub min_zeta: f64,
    pub offset: NonHermitianOffset,
    /// Minimum-eigenvalue probe every this many samples of a dense trajectory.
    pub positivity_every: usize,
    pub residue_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_max: 100.0,
            sample_dt: 0.5,
            route: Route::Nonlinear,
            chi_max: 64,
            sv_tol: 1e-16,
            n_max: 40,
            steady: SteadyOptions::default(),
            budget: DEFAULT_DENSE_BUDGET,
            density_bins: 0,
            min_zeta: 0.1,
            offset: NonHermitianOffset::Dropped,
            positivity_every: 0,
            residue_bound: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceOptions {
    pub kinds: Vec<ReferenceKind>,
    /// Matrix size of each Ginibre draw.
    pub dim: usize,
    /// Number of uniform points of the single Poisson draw.
    pub poisson_points: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            kinds: vec![ReferenceKind::Ginibre, ReferenceKind::Poisson2d],
            dim: 200,
            poisson_points: 10_000,
        }
    }
}

/// Fully resolved description of one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub model: ModelParams,
    pub grid: ScanGrid,
    pub n_samples: usize,
    /// Sample `k` uses seed `base_seed ^ k`.
    pub base_seed: u64,
    pub solver: SolverOptions,
    pub reference: ReferenceOptions,
    pub out: PathBuf,
    pub heavy: bool,
    /// Worker threads (0 = library default).
    pub threads: usize,
    pub execution: Execution,
}

impl RunConfig {
    /// Desk-scale defaults of each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            schema_version: SCHEMA_VERSION,
            kind,
            model: ModelParams::default(),
            grid: ScanGrid::default(),
            n_samples: 20,
            base_seed: 1,
            solver: SolverOptions::default(),
            reference: ReferenceOptions::default(),
            out: PathBuf::from("out"),
            heavy: false,
            threads: 0,
            execution: Execution::Parallel,
        };
        match kind {
            ExperimentKind::SpectralScan => {
                cfg.model.sites = 6;
                cfg.grid.zeta = vec![1.0];
                cfg.n_samples = 40;
            }
            ExperimentKind::NhSpectralScan => {
                cfg.model.sites = 12;
                cfg.grid.zeta = vec![1.0];
                cfg.n_samples = 40;
            }
            ExperimentKind::DynamicsScan => {}
            ExperimentKind::Transient => {
                cfg.grid.disorder = vec![2.5, 20.0];
                cfg.grid.zeta = vec![0.2, 1.0];
            }
            ExperimentKind::Tebd => {
                cfg.model.sites = 16;
                cfg.grid.disorder = vec![20.0];
                cfg.grid.zeta = vec![0.2];
                cfg.n_samples = 10;
                cfg.solver.t_max = 20.0;
            }
            ExperimentKind::References => {
                cfg.n_samples = 50;
            }
        }
        cfg
    }

    /// Parses a TOML document; absent fields take the defaults of its `kind`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let kind = value
            .get("kind")
            .ok_or_else(|| Error::Config("missing `kind`".into()))?
            .clone()
            .try_into::<ExperimentKind>()
            .map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml_value(kind, value)
    }

    /// Like [`RunConfig::from_toml`] with the kind fixed by the caller; a
    /// `kind` entry in the document must agree with it.
    pub fn from_toml_as(kind: ExperimentKind, text: &str) -> Result<Self> {
        let value: toml::Value = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_toml_value(kind, value)
    }

    fn from_toml_value(kind: ExperimentKind, value: toml::Value) -> Result<Self> {
        let mut merged = toml::Value::try_from(Self::defaults(kind)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, value);
        let cfg: Self = merged.try_into().map_err(|e| Error::Config(e.to_string()))?;
        if cfg.kind != kind {
            return Err(Error::Config(format!(
                "configuration is for `{}`, not `{}`",
                cfg.kind.as_str(),
                kind.as_str()
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_as(kind, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Compact single-line JSON used in output headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    /// Dense eigenproblem budget after the heavy switch.
    pub fn dense_budget(&self) -> usize {
        if self.heavy {
            usize::MAX
        } else {
            self.solver.budget
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if self.kind != ExperimentKind::References {
            let mut probe = self.model.clone();
            for &h in &self.grid.disorder {
                probe.disorder = h;
                probe.validate()?;
            }
            if self.grid.disorder.is_empty() {
                probe.validate()?;
            }
            let (light, heavy) = self.kind.site_limits();
            let cap = if self.heavy { heavy } else { light };
            if self.model.sites > cap {
                return Err(Error::Budget {
                    dim: self.model.sites,
                    cap,
                });
            }
        }
        for &z in &self.grid.zeta {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::Fugacity(z));
            }
        }
        if self.kind == ExperimentKind::DynamicsScan {
            if let Some(&z) = self.grid.zeta.iter().find(|&&z| z < self.solver.min_zeta) {
                return Err(Error::Config(format!(
                    "fugacity {z} below the steady-state minimum {}",
                    self.solver.min_zeta
                )));
            }
        }
        if matches!(
            self.kind,
            ExperimentKind::DynamicsScan | ExperimentKind::Transient | ExperimentKind::NhSpectralScan
        ) && self.model.sites % 2 == 1
        {
            return Err(Error::OddLength(self.model.sites));
        }
        if self.kind == ExperimentKind::Tebd && self.solver.chi_max == 0 {
            return Err(Error::BondCap);
        }
        if self.kind == ExperimentKind::References && self.reference.dim < 3 {
            return Err(Error::TooFewEigenvalues(self.reference.dim));
        }
        Ok(())
    }

    /// True when a grid the experiment iterates over is empty.
    pub fn grid_is_empty(&self) -> bool {
        match self.kind {
            ExperimentKind::References => self.reference.kinds.is_empty(),
            ExperimentKind::NhSpectralScan => self.grid.disorder.is_empty(),
            _ => self.grid.disorder.is_empty() || self.grid.zeta.is_empty(),
        }
    }
}

/// Overlays `patch` onto `base`, recursing into tables.
fn merge(base: &mut toml::Value, patch: toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_inherits_kind_defaults() {
        let cfg = RunConfig::from_toml("kind = \"spectral_scan\"\nn_samples = 3\n[model]\ndisorder = 0.0\n").unwrap();
        assert_eq!(cfg.model.sites, 6);
        assert_eq!(cfg.n_samples, 3);
        assert_eq!(cfg.solver.dt, 0.01);
        cfg.validate().unwrap();
    }

    #[test]
    fn resolved_config_round_trips() {
        for kind in [
            ExperimentKind::SpectralScan,
            ExperimentKind::NhSpectralScan,
            ExperimentKind::DynamicsScan,
            ExperimentKind::Transient,
            ExperimentKind::Tebd,
            ExperimentKind::References,
        ] {
            let cfg = RunConfig::defaults(kind);
            cfg.validate().unwrap();
            assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(RunConfig::from_toml("kind = \"spectral_scan\"\nbogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("n_samples = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("kind = \"nope\"\n"), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml_as(ExperimentKind::Tebd, "kind = \"transient\"\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_limits() {
        let mut cfg = RunConfig::defaults(ExperimentKind::SpectralScan);
        cfg.model.sites = 8;
        assert!(matches!(cfg.validate(), Err(Error::Budget { .. })));
        cfg.heavy = true;
        cfg.validate().unwrap();

        let mut cfg = RunConfig::defaults(ExperimentKind::DynamicsScan);
        cfg.grid.zeta = vec![0.05];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.grid.zeta = vec![1.5];
        assert!(matches!(cfg.validate(), Err(Error::Fugacity(_))));

        let mut cfg = RunConfig::defaults(ExperimentKind::Transient);
        cfg.n_samples = 0;
        assert!(cfg.validate().is_err());
        cfg.n_samples = 1;
        cfg.model.sites = 7;
        assert!(matches!(cfg.validate(), Err(Error::OddLength(7))));
    }

    #[test]
    fn empty_grids_are_detected() {
        let mut cfg = RunConfig::defaults(ExperimentKind::Transient);
        assert!(!cfg.grid_is_empty());
        cfg.grid.zeta.clear();
        assert!(cfg.grid_is_empty());
        cfg.validate().unwrap();
    }
}
