//! Geometry, materials, loads and boundary conditions of the three
//! benchmark problems.

use serde::Serialize;

use super::config::{BlockLoad, ResolvedConfig, ScenarioKind};
use crate::error::Result;
use crate::fluid_solver::{BoundaryCondition, FluidProperties};
use crate::mac_grid::GridSpec;
use crate::oracles::{InflatingRingParams, StaticRingParams};
use crate::solid_fem::mesh::{annulus, block, curvilinear_ring, divisions};
use crate::solid_fem::{ConstitutiveModel, SolidMesh, SurfaceLoad};

pub const RING_R: f64 = 0.25;
pub const RING_W: f64 = 0.0625;
pub const STATIC_CENTER: [f64; 2] = [0.5, 0.5];
pub const INFLATE_CENTER: [f64; 2] = [0.0, 0.0];
pub const BLOCK_ORIGIN: [f64; 2] = [5.0, 10.0];
pub const BLOCK_SIZE: [f64; 2] = [20.0, 10.0];

/// Area source at the ring centre, ramped on over a fixed window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SourceSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub area: f64,
    pub duration: f64,
}

impl SourceSpec {
    /// Injection rate (area per unit time) at time `t`.
    pub fn rate(&self, t: f64) -> f64 {
        if (0.0..self.duration).contains(&t) {
            self.area / self.duration
        } else {
            0.0
        }
    }
}

/// Mesh generation record for the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshInfo {
    pub kind: &'static str,
    pub divisions: [usize; 2],
    pub nodes: usize,
    pub elements: usize,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: GridSpec,
    pub bc: BoundaryCondition,
    pub props: FluidProperties,
    pub mesh: SolidMesh,
    pub model: ConstitutiveModel,
    pub loads: Vec<SurfaceLoad>,
    pub source: Option<SourceSpec>,
    pub mesh_info: MeshInfo,
}

/// Element counts for the block: `10 * 2^k` by `5 * 2^k`, with `k` picked
/// so the element width is closest to `M_fac h` on a log scale. Successive
/// grid doublings then give nested meshes.
pub fn block_divisions(h: f64, m_fac: f64) -> [usize; 2] {
    let target = BLOCK_SIZE[0] / (m_fac * h);
    let k = (target / 10.0).log2().round().max(0.0) as u32;
    [10 * 2usize.pow(k), 5 * 2usize.pow(k)]
}

pub fn static_ring_params(cfg: &ResolvedConfig) -> StaticRingParams {
    let area = (cfg.upper_mm[0] - cfg.lower_mm[0]) * (cfg.upper_mm[1] - cfg.lower_mm[1]);
    StaticRingParams { r: RING_R, w: RING_W, mu_e: cfg.mu_e, center: STATIC_CENTER, domain_area: area }
}

pub fn inflating_ring_params(cfg: &ResolvedConfig) -> InflatingRingParams {
    InflatingRingParams { r_in: RING_R, r_out: RING_R + RING_W, mu_e: cfg.mu_e, a_add: cfg.a_add_mm2 }
}

pub fn build(cfg: &ResolvedConfig) -> Result<Scenario> {
    let grid = GridSpec::new(cfg.lower_mm, cfg.upper_mm, cfg.cells)?;
    let props = FluidProperties::new(cfg.rho_kg_per_mm3, cfg.mu_n_s_per_mm2)?;
    let h = cfg.h_mm;
    let s = match cfg.scenario {
        ScenarioKind::StaticRing => {
            let n1 = divisions(2.0 * std::f64::consts::PI * RING_R, h, cfg.m_fac, 8);
            let n2 = divisions(RING_W, h, cfg.m_fac, 1);
            let mesh = curvilinear_ring(STATIC_CENTER, RING_R, RING_W, n1, n2)?;
            Scenario {
                grid,
                bc: BoundaryCondition::no_slip(),
                props,
                mesh_info: MeshInfo { kind: "curvilinear_ring", divisions: [n1, n2], nodes: mesh.num_nodes(), elements: mesh.num_elements() },
                mesh,
                model: ConstitutiveModel::CurvilinearRing { mu_e: cfg.mu_e, w: RING_W },
                loads: Vec::new(),
                source: None,
            }
        }
        ScenarioKind::InflatingRing => {
            let nt = divisions(2.0 * std::f64::consts::PI * RING_R, h, cfg.m_fac, 8);
            let nr = divisions(RING_W, h, cfg.m_fac, 1);
            let mesh = annulus(INFLATE_CENTER, RING_R, RING_R + RING_W, nt, nr)?;
            Scenario {
                grid,
                bc: BoundaryCondition::traction_open(0.0),
                props,
                mesh_info: MeshInfo { kind: "annulus", divisions: [nt, nr], nodes: mesh.num_nodes(), elements: mesh.num_elements() },
                mesh,
                model: ConstitutiveModel::PolarNeoHookeanRing { mu_e: cfg.mu_e, center: INFLATE_CENTER },
                loads: Vec::new(),
                source: Some(SourceSpec {
                    center: INFLATE_CENTER,
                    radius: cfg.source_radius_mm,
                    area: cfg.a_add_mm2,
                    duration: cfg.injection_time_s,
                }),
            }
        }
        ScenarioKind::CompressedBlock => {
            let [nx, ny] = block_divisions(h, cfg.m_fac);
            let mesh = block(BLOCK_ORIGIN, BLOCK_SIZE, nx, ny)?;
            let kappa = 0.1 * h / (cfg.dt_s * cfg.dt_s);
            let (p_max, t_load, origin_x) = (cfg.p_max_n_per_mm2, cfg.t_load_s, BLOCK_ORIGIN[0]);
            let pressure = match cfg.block_load {
                BlockLoad::Smooth => SurfaceLoad::LoadPressureSmooth { p_max, t_load, a: 4.0, b: 16.0, origin_x },
                BlockLoad::Discontinuous => SurfaceLoad::LoadPressureDiscontinuous { p_max, t_load, a: 5.0, b: 15.0, origin_x },
            };
            Scenario {
                grid,
                bc: BoundaryCondition::traction_open(0.0),
                props,
                mesh_info: MeshInfo { kind: "block", divisions: [nx, ny], nodes: mesh.num_nodes(), elements: mesh.num_elements() },
                mesh,
                model: ConstitutiveModel::StabilizedNeoHookeanBlock { mu_e: cfg.mu_e, nu: cfg.nu },
                loads: vec![SurfaceLoad::TetherTop { kappa }, SurfaceLoad::TetherBottom { kappa }, pressure],
                source: None,
            }
        }
    };
    s.model.validate()?;
    for l in &s.loads {
        l.validate()?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::config::SimulationConfig;

    fn resolved(text: &str) -> ResolvedConfig {
        SimulationConfig::from_toml(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn ring_element_counts_follow_mesh_factor() {
        for (n, expect) in [(32, [25, 1]), (64, [50, 2]), (128, [101, 4])] {
            let s = build(&resolved(&format!("scenario = \"static_ring\"\nn = {n}\n"))).unwrap();
            assert_eq!(s.mesh_info.divisions, expect);
        }
        let s = build(&resolved("scenario = \"inflating_ring\"\nn = 32\n")).unwrap();
        assert_eq!(s.mesh_info.divisions, [50, 2]);
    }

    #[test]
    fn block_meshes_nest() {
        let d: Vec<[usize; 2]> = [16, 32, 64].iter().map(|&n| block_divisions(30.0 / n as f64, 1.0)).collect();
        assert_eq!(d, vec![[10, 5], [20, 10], [40, 20]]);
    }

    #[test]
    fn source_rate_integrates_to_added_area() {
        let s = SourceSpec { center: [0.0, 0.0], radius: 0.1, area: 0.05, duration: 0.1 };
        let dt = 1e-3;
        let total: f64 = (0..1000).map(|k| s.rate((k as f64 + 0.5) * dt) * dt).sum();
        assert!((total - 0.05).abs() < 1e-12);
    }
}
