//! Run configuration: one TOML file, every section optional, unknown keys rejected.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use scar_core::benchmark::BenchmarkConfig;
use scar_core::classical::OrbitSearch;
use scar_core::model::SystemParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for the random initial conditions of the Poincare section.
    pub seed: u64,
    pub system: SystemParams,
    pub orbit: OrbitConfig,
    pub benchmark: BenchmarkConfig,
    pub grid: GridConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20_240_611,
            system: SystemParams::default(),
            orbit: OrbitConfig::default(),
            benchmark: BenchmarkConfig::default(),
            grid: GridConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitConfig {
    pub search: OrbitSearch,
    /// Energy of the standalone `orbit` stage.
    pub reference_energy: f64,
    pub poincare_trajectories: usize,
    pub poincare_bounces: usize,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig { search: OrbitSearch::default(), reference_energy: 92.5, poincare_trajectories: 24, poincare_bounces: 150 }
    }
}

/// Real-space grids for wavefunction output, covering `0 <= x <= d` and
/// `|y| <= y_extent d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub y_extent: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 101, ny: 151, y_extent: 0.75 }
    }
}

impl GridConfig {
    pub fn axes(&self, d: f64) -> (Vec<f64>, Vec<f64>) {
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() };
        (lin(0.0, d, self.nx), lin(-self.y_extent * d, self.y_extent * d, self.ny))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Used when `--out` is not given.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("scar-out") }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate().context("system")?;
        self.benchmark.validate().context("benchmark")?;
        let o = &self.orbit;
        anyhow::ensure!(o.search.angle_lo < o.search.angle_hi, "orbit.search: angle_lo must be below angle_hi");
        anyhow::ensure!(o.search.samples_per_arc >= 16, "orbit.search.samples_per_arc: must be at least 16");
        anyhow::ensure!(o.reference_energy > 0.0, "orbit.reference_energy: must be positive");
        anyhow::ensure!(self.grid.nx >= 2 && self.grid.ny >= 2, "grid: nx and ny must be at least 2");
        anyhow::ensure!(self.grid.y_extent > 0.0, "grid.y_extent: must be positive");
        let ex = &self.benchmark.exact;
        anyhow::ensure!(ex.x_modes > 0 && ex.y_modes > 0, "benchmark.exact: basis sizes must be positive");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_benchmark_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.system.d, c.system.omega0), (10.0, 2.0));
        assert_eq!((c.system.hbar, c.system.mass, c.system.charge, c.system.b), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[system]\nomega_zero = 2.0\n").unwrap_err();
        assert!(format!("{err:#}").contains("omega_zero"), "{err:#}");
    }

    #[test]
    fn validation_names_the_field() {
        let err = RunConfig::from_toml("[system]\nd = -1.0\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("system") && msg.contains('d'), "{msg}");
        let err = RunConfig::from_toml("[benchmark]\nquantum_numbers = [66, 68]\n").unwrap_err();
        assert!(format!("{err:#}").contains("consecutive"));
    }

    #[test]
    fn round_trip_is_canonical() {
        let text = "seed = 7\n[system]\nd = 12.0\n[benchmark]\nquantum_numbers = [40, 41]\n[benchmark.field]\nbranch = \"symmetric\"\n";
        let c = RunConfig::from_toml(text).unwrap();
        let canon = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&canon).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml().unwrap(), canon);
    }
}
