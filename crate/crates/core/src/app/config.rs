//! Flat TOML run configuration. Physical keys carry their units in the key
//! name (millimetres, seconds, N/mm^2); anything left out takes the
//! scenario default, and [`SimulationConfig::resolve`] produces the fully
//! populated record that is echoed into the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupling::DeltaKernel;
use crate::error::{Error, Result};
use crate::fluid_solver::AdvectionScheme;
use crate::solid_fem::MassKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    StaticRing,
    InflatingRing,
    CompressedBlock,
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::StaticRing => "static_ring",
            Self::InflatingRing => "inflating_ring",
            Self::CompressedBlock => "compressed_block",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLoad {
    #[default]
    Smooth,
    Discontinuous,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum MethodKind {
    Original,
    #[default]
    SharpSteady,
    SharpDiffusion,
}

impl MethodKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::SharpSteady => "sharp_steady",
            Self::SharpDiffusion => "sharp_diffusion",
        }
    }

    pub fn is_sharp(&self) -> bool {
        !matches!(self, Self::Original)
    }
}

/// Diffusion coefficient for `phi`: a number, or `"h"` for the grid spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Symbol(String),
}

impl Default for GammaSpec {
    fn default() -> Self {
        Self::Value(1.0)
    }
}

impl GammaSpec {
    pub fn resolve(&self, h: f64) -> Result<f64> {
        let g = match self {
            Self::Value(v) => *v,
            Self::Symbol(s) if s == "h" => h,
            Self::Symbol(s) => return Err(Error::Config(format!("gamma must be a number or \"h\", got {s:?}"))),
        };
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {g}")));
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Ib4,
    PiecewiseLinear,
    Cosine,
}

/// User-facing configuration. Every `Option` falls back to a scenario
/// default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub scenario: Option<ScenarioKind>,
    #[serde(default)]
    pub method: MethodKind,
    pub gamma: Option<GammaSpec>,
    pub n: Option<usize>,
    pub dt_factor: Option<f64>,
    pub m_fac: Option<f64>,
    pub final_time_s: Option<f64>,
    pub kernel: Option<KernelKind>,
    pub kernel_radius_mm: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mass: Option<MassKind>,
    pub advection: Option<AdvectionScheme>,
    pub rho_kg_per_mm3: Option<f64>,
    pub mu_n_s_per_mm2: Option<f64>,
    pub mu_e: Option<f64>,
    /// Inflating ring: added area and injection window.
    pub a_add_mm2: Option<f64>,
    pub injection_time_s: Option<f64>,
    pub source_radius_mm: Option<f64>,
    pub sample_radius_mm: Option<f64>,
    /// Compressed block.
    pub block_load: Option<BlockLoad>,
    pub nu: Option<f64>,
    pub p_max_n_per_mm2: Option<f64>,
    pub t_load_s: Option<f64>,
    /// Stop once `max|u| < steady_tol * L / T` after the load ramp or the
    /// injection has finished; zero disables the check.
    pub steady_tol: Option<f64>,
    /// Write per-step diagnostics and final fields.
    pub write_fields: Option<bool>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub scenario: ScenarioKind,
    pub method: MethodKind,
    pub gamma: Option<f64>,
    pub n: usize,
    pub cells: [usize; 2],
    pub lower_mm: [f64; 2],
    pub upper_mm: [f64; 2],
    pub h_mm: f64,
    pub dt_factor: f64,
    pub dt_s: f64,
    pub steps: usize,
    pub m_fac: f64,
    pub final_time_s: f64,
    pub kernel: DeltaKernel,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub mass: MassKind,
    pub advection: AdvectionScheme,
    pub rho_kg_per_mm3: f64,
    pub mu_n_s_per_mm2: f64,
    pub mu_e: f64,
    pub a_add_mm2: f64,
    pub injection_time_s: f64,
    pub source_radius_mm: f64,
    pub sample_radius_mm: f64,
    pub block_load: BlockLoad,
    pub nu: f64,
    pub p_max_n_per_mm2: f64,
    pub t_load_s: f64,
    pub steady_tol: f64,
    pub write_fields: bool,
}

struct Defaults {
    lower: f64,
    upper: f64,
    /// Grid spacing is `h_unit / N`.
    h_unit: f64,
    dt_factor: f64,
    m_fac: f64,
    final_time: f64,
    rho: f64,
    mu: f64,
    mu_e: f64,
    steady_tol: f64,
}

fn defaults(s: ScenarioKind) -> Defaults {
    match s {
        ScenarioKind::StaticRing => Defaults {
            lower: 0.0,
            upper: 1.0,
            h_unit: 1.0,
            dt_factor: 0.25,
            m_fac: 2.0,
            final_time: 0.01,
            rho: 1.0,
            mu: 1.0,
            mu_e: 1.0,
            steady_tol: 0.0,
        },
        ScenarioKind::InflatingRing => Defaults {
            lower: -1.0,
            upper: 1.0,
            h_unit: 1.0,
            // half the 0.025 h step: with mu_e / mu = 1e4 the explicit
            // structure update diverges at N = 32 with the larger step
            dt_factor: 0.0125,
            m_fac: 1.0,
            final_time: 0.4,
            rho: 1.0,
            mu: 1.0,
            mu_e: 1e4,
            steady_tol: 0.0,
        },
        ScenarioKind::CompressedBlock => Defaults {
            lower: 0.0,
            upper: 30.0,
            h_unit: 30.0,
            dt_factor: 0.005,
            m_fac: 1.0,
            final_time: 2.0,
            rho: 1.0,
            mu: 0.16,
            mu_e: 80.194,
            steady_tol: 1e-6,
        },
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let scenario = self.scenario.ok_or_else(|| Error::Config("missing key `scenario`".into()))?;
        let d = defaults(scenario);
        let n = self.n.ok_or_else(|| Error::Config("missing key `n`".into()))?;
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(format!("N must be a power of two >= 16, got {n}")));
        }
        let h = d.h_unit / n as f64;
        let cells = ((d.upper - d.lower) / h).round() as usize;
        let dt_factor = positive("dt_factor", self.dt_factor.unwrap_or(d.dt_factor))?;
        let final_time = positive("final_time_s", self.final_time_s.unwrap_or(d.final_time))?;
        // whole number of equal steps no longer than dt_factor * h
        let steps = (final_time / (dt_factor * h) - 1e-9).ceil().max(1.0) as usize;
        let dt = final_time / steps as f64;
        let gamma = match self.method {
            MethodKind::SharpDiffusion => Some(self.gamma.clone().unwrap_or_default().resolve(h)?),
            _ => None,
        };
        let kernel = match self.kernel.unwrap_or_default() {
            KernelKind::Ib4 => DeltaKernel::Ib4,
            KernelKind::PiecewiseLinear => DeltaKernel::PiecewiseLinear,
            KernelKind::Cosine => DeltaKernel::Cosine { radius: positive("kernel_radius_mm", self.kernel_radius_mm.unwrap_or(2.0 * h))? },
        };
        kernel.validate()?;
        let block_load = self.block_load.unwrap_or_default();
        let nu = self.nu.unwrap_or(0.0);
        if !(-1.0..0.5).contains(&nu) {
            return Err(Error::Config(format!("nu must lie in [-1, 0.5), got {nu}")));
        }
        let mu_e = self.mu_e.unwrap_or(d.mu_e);
        if !(mu_e >= 0.0 && mu_e.is_finite()) {
            return Err(Error::Config(format!("mu_e must be non-negative, got {mu_e}")));
        }
        let steady_tol = self.steady_tol.unwrap_or(d.steady_tol);
        if !(steady_tol >= 0.0) {
            return Err(Error::Config("steady_tol must be non-negative".into()));
        }
        let default_dir = PathBuf::from(format!("out/{}_{}_N{}", scenario.label(), self.method.label(), n));
        Ok(ResolvedConfig {
            scenario,
            method: self.method,
            gamma,
            n,
            cells: [cells, cells],
            lower_mm: [d.lower; 2],
            upper_mm: [d.upper; 2],
            h_mm: h,
            dt_factor,
            dt_s: dt,
            steps,
            m_fac: positive("m_fac", self.m_fac.unwrap_or(d.m_fac))?,
            final_time_s: final_time,
            kernel,
            output_dir: self.output_dir.clone().unwrap_or(default_dir),
            seed: self.seed.unwrap_or(0),
            mass: self.mass.unwrap_or_default(),
            advection: self.advection.unwrap_or(AdvectionScheme::Centered),
            rho_kg_per_mm3: positive("rho_kg_per_mm3", self.rho_kg_per_mm3.unwrap_or(d.rho))?,
            mu_n_s_per_mm2: positive("mu_n_s_per_mm2", self.mu_n_s_per_mm2.unwrap_or(d.mu))?,
            mu_e,
            a_add_mm2: positive("a_add_mm2", self.a_add_mm2.unwrap_or(0.05))?,
            injection_time_s: positive("injection_time_s", self.injection_time_s.unwrap_or(0.1))?,
            source_radius_mm: positive("source_radius_mm", self.source_radius_mm.unwrap_or(0.1))?,
            sample_radius_mm: positive("sample_radius_mm", self.sample_radius_mm.unwrap_or(0.1))?,
            block_load,
            nu,
            p_max_n_per_mm2: self.p_max_n_per_mm2.unwrap_or(200.0),
            t_load_s: positive("t_load_s", self.t_load_s.unwrap_or(10.0))?,
            steady_tol,
            write_fields: self.write_fields.unwrap_or(true),
        })
    }

    /// Copy with the resolution replaced.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n: Some(n), ..self.clone() }
    }
}
