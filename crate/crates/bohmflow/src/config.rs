//! Run configuration: TOML file plus flag overrides, defaults matching the
//! reference two-slit parameter set (m = 1, hbar = 1, sigma0 = 0.5, x0 = 5).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::PacketParams;
use crate::superposition::SuperpositionConfig;
use crate::trajectory::{IntegratorOptions, SamplingMode, SwarmSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SinglePacket,
    TwoSlit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub mass: f64,
    pub hbar: f64,
    pub sigma0: f64,
    /// Half slit separation x0 (two_slit scenario).
    pub x0: f64,
    /// Packet center (single_packet scenario).
    pub center: f64,
    pub drift_momentum: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { mass: 1.0, hbar: 1.0, sigma0: 0.5, x0: 5.0, center: 0.0, drift_momentum: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { x_min: -30.0, x_max: 30.0, n_points: 1201 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwarmConfig {
    pub n_trajectories: usize,
    pub t0: f64,
    pub t1: f64,
    /// "equidistant_quantiles" or "iid_from_rho".
    pub sampling: String,
    pub n_output_times: usize,
    pub min_complete_fraction: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 200,
            t0: 0.0,
            t1: 10.0,
            sampling: "equidistant_quantiles".into(),
            n_output_times: 101,
            min_complete_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_pixels: usize,
    /// Ascending cumulative signal-event totals, one frame each.
    pub counts: Vec<usize>,
    /// Expected background counts per pixel per frame.
    pub noise_rate: f64,
    /// Detection time.
    pub time: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            x_min: -30.0,
            x_max: 30.0,
            n_pixels: 768,
            counts: vec![100, 10_000, 1_000_000],
            noise_rate: 0.0,
            time: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    /// Absolute ODE tolerance as a fraction of sigma0.
    pub atol_rel: f64,
    /// Minimum ODE step as a fraction of tau.
    pub h_min_rel: f64,
    /// Node floor relative to the local density envelope.
    pub rho_floor_rel: f64,
    /// Finite-difference step as a fraction of sigma_t.
    pub fd_step_rel: f64,
    /// Temporal-difference step as a fraction of tau.
    pub dt_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol_rel: 1e-10,
            h_min_rel: 1e-12,
            rho_floor_rel: 1e-12,
            fd_step_rel: 1e-3,
            dt_rel: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub physics: PhysicsConfig,
    pub grid: GridConfig,
    /// Field-evaluation times.
    pub times: Vec<f64>,
    pub swarm: SwarmConfig,
    pub detection: DetectionConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::TwoSlit,
            seed: 42,
            output_dir: PathBuf::from("out"),
            physics: PhysicsConfig::default(),
            grid: GridConfig::default(),
            times: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            swarm: SwarmConfig::default(),
            detection: DetectionConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {v}") })
            }
        };
        positive("physics.mass", self.physics.mass)?;
        positive("physics.hbar", self.physics.hbar)?;
        positive("physics.sigma0", self.physics.sigma0)?;
        if self.scenario == Scenario::TwoSlit {
            positive("physics.x0", self.physics.x0)?;
        }
        if self.grid.n_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grid.n_points",
                reason: format!("need at least 2 points, got {}", self.grid.n_points),
            });
        }
        if self.grid.x_max <= self.grid.x_min {
            return Err(Error::InvalidParameter {
                name: "grid.x_max",
                reason: "x_max must exceed x_min".into(),
            });
        }
        if self.detection.x_max <= self.detection.x_min || self.detection.n_pixels < 1 {
            return Err(Error::InvalidParameter {
                name: "detection",
                reason: "need x_max > x_min and n_pixels >= 1".into(),
            });
        }
        for w in self.detection.counts.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidParameter {
                    name: "detection.counts",
                    reason: "cumulative totals must be ascending".into(),
                });
            }
        }
        match self.swarm.sampling.as_str() {
            "equidistant_quantiles" | "iid_from_rho" => {}
            other => {
                return Err(Error::InvalidParameter {
                    name: "swarm.sampling",
                    reason: format!(
                        "unknown mode {other:?} (expected equidistant_quantiles or iid_from_rho)"
                    ),
                })
            }
        }
        if !(self.swarm.t1 > self.swarm.t0 && self.swarm.t0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "swarm.t0/t1",
                reason: "need t1 > t0 >= 0".into(),
            });
        }
        self.packet()?;
        Ok(())
    }

    pub fn packet(&self) -> Result<PacketParams> {
        let mut p = PacketParams::new(self.physics.mass, self.physics.hbar, self.physics.sigma0)?;
        if self.scenario == Scenario::SinglePacket {
            p.center = self.physics.center;
            p.drift_momentum = self.physics.drift_momentum;
        }
        Ok(p)
    }

    pub fn superposition(&self) -> Result<SuperpositionConfig> {
        let mut s = SuperpositionConfig::new(self.packet()?, self.physics.x0)?;
        s.rho_floor_rel = self.tolerances.rho_floor_rel;
        Ok(s)
    }

    pub fn integrator_options(&self) -> Result<IntegratorOptions> {
        let p = self.packet()?;
        Ok(IntegratorOptions {
            rtol: self.tolerances.rtol,
            atol: self.tolerances.atol_rel * p.sigma0,
            h_min: self.tolerances.h_min_rel * p.tau(),
            max_steps: 10_000_000,
        })
    }

    pub fn swarm_spec(&self) -> SwarmSpec {
        let dt = (self.swarm.t1 - self.swarm.t0) / (self.swarm.n_output_times.max(2) - 1) as f64;
        let output_times: Vec<f64> = (0..self.swarm.n_output_times.max(2))
            .map(|i| self.swarm.t0 + i as f64 * dt)
            .collect();
        SwarmSpec {
            n_trajectories: self.swarm.n_trajectories,
            t0: self.swarm.t0,
            t1: self.swarm.t1,
            sampling: if self.swarm.sampling == "iid_from_rho" {
                SamplingMode::IidFromRho
            } else {
                SamplingMode::EquidistantQuantiles
            },
            seed: self.seed,
            output_times,
            min_complete_fraction: self.swarm.min_complete_fraction,
        }
    }
}
