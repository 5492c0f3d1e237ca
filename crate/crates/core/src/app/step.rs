//! Midpoint predictor-corrector coupling of the fluid and the immersed solid.

use std::time::Instant;

use serde::Serialize;

use super::config::{MethodKind, ResolvedConfig};
use super::scenario::{Scenario, SourceSpec};
use crate::coupling::{interaction_order, project_nodal_velocity, InteractionPoints, Transfer};
use crate::error::Result;
use crate::fluid_solver::{DivergenceSource, FluidOptions, FluidSolver, FluidState};
use crate::mac_grid::{CellScalarField, FaceVectorField};
use crate::pressure_split::{modified_stress, phi_boundary_values, PhiField, PhiFormulation, PhiSolver};
use crate::solid_fem::{ConstitutiveModel, ElementQuadrature, FemSpace, MassKind, SolidMesh, SurfaceLoad};
use crate::Vec2;

/// One row of the per-step diagnostics log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub max_velocity: f64,
    pub divergence_residual: f64,
    pub krylov_iterations: usize,
    pub phi_iterations: usize,
    pub wall_ms: f64,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str =
        "step,time,max_velocity,divergence_residual,krylov_iterations,phi_iterations,wall_ms";

    pub fn csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{},{},{:.3}",
            self.step,
            self.time,
            self.max_velocity,
            self.divergence_residual,
            self.krylov_iterations,
            self.phi_iterations,
            self.wall_ms
        )
    }
}

/// Everything that evolves, plus the operators that are fixed for a run.
#[derive(Clone, Debug)]
pub struct CoupledState {
    pub fluid: FluidState,
    pub mesh: SolidMesh,
    /// Most recent `phi`, held at the last midpoint for the sharp methods.
    pub phi: Option<PhiField>,
    pub step: usize,
}

pub struct Stepper {
    pub method: MethodKind,
    pub dt: f64,
    pub mass: MassKind,
    pub model: ConstitutiveModel,
    pub loads: Vec<SurfaceLoad>,
    pub source: Option<SourceSpec>,
    pub fluid: FluidSolver,
    pub transfer: Transfer,
    pub space: FemSpace,
    phi_solver: Option<PhiSolver>,
    /// Interaction quadrature, rebuilt when the required order changes.
    quad: ElementQuadrature,
}

impl Stepper {
    pub fn new(cfg: &ResolvedConfig, scenario: &Scenario) -> Result<Self> {
        let options = FluidOptions { advection: cfg.advection, ..FluidOptions::default() };
        let fluid = FluidSolver::new(scenario.grid, scenario.props, scenario.bc.clone(), options)?;
        let space = FemSpace::new(&scenario.mesh)?;
        let formulation = match (cfg.method, cfg.gamma) {
            (MethodKind::SharpDiffusion, Some(gamma)) => Some(PhiFormulation::Diffusion { gamma }),
            (MethodKind::SharpDiffusion, None) => {
                return Err(crate::Error::Config("sharp_diffusion needs gamma".into()));
            }
            (MethodKind::SharpSteady, _) => Some(PhiFormulation::SteadyHarmonic),
            (MethodKind::Original, _) => None,
        };
        let phi_solver = formulation.map(|f| PhiSolver::new(&space, &scenario.mesh, f, cfg.dt_s)).transpose()?;
        let order = interaction_order(&scenario.mesh, scenario.grid.h());
        Ok(Self {
            method: cfg.method,
            dt: cfg.dt_s,
            mass: cfg.mass,
            model: scenario.model,
            loads: scenario.loads.clone(),
            source: scenario.source,
            fluid,
            transfer: Transfer::new(scenario.grid, cfg.kernel),
            quad: ElementQuadrature::new(&scenario.mesh, order)?,
            space,
            phi_solver,
        })
    }

    pub fn initial_state(&self, scenario: &Scenario) -> CoupledState {
        CoupledState { fluid: FluidState::at_rest(scenario.grid), mesh: scenario.mesh.clone(), phi: None, step: 0 }
    }

    fn refresh_quadrature(&mut self, mesh: &SolidMesh) -> Result<()> {
        let order = interaction_order(mesh, self.fluid.grid.h());
        if order != self.quad.order {
            self.quad = ElementQuadrature::new(mesh, order)?;
        }
        Ok(())
    }

    /// Nodal velocities: `u` interpolated at the interaction points of the
    /// given configuration, then projected onto the nodal space.
    pub fn nodal_velocity(&self, u: &FaceVectorField, mesh: &SolidMesh) -> Result<Vec<Vec2>> {
        let points = InteractionPoints::from_quadrature(mesh, &self.quad);
        let v = self.transfer.interpolate(u, &points)?;
        project_nodal_velocity(&self.space, mesh, &self.quad, &v)
    }

    /// `phi` for the configuration `mesh`, advanced from `previous`.
    pub fn solve_phi(&self, mesh: &SolidMesh, previous: Option<&PhiField>) -> Result<Option<PhiField>> {
        match &self.phi_solver {
            None => Ok(None),
            Some(solver) => {
                let bc = phi_boundary_values(mesh, &self.model)?;
                solver.update(previous, &bc).map(Some)
            }
        }
    }

    /// Nodal force density `G` on `mesh` at time `t`, using the modified
    /// stress when `phi` is given.
    pub fn force_density(&self, mesh: &SolidMesh, t: f64, phi: Option<&PhiField>) -> Result<Vec<Vec2>> {
        let model = self.model;
        match phi {
            None => self.space.internal_force_density(mesh, &model, &self.loads, t, self.mass),
            Some(phi) => {
                let phi_q = self.space.quadrature.interpolate(mesh, &phi.values);
                self.space.force_density_with(mesh, &self.loads, t, self.mass, |i, k| {
                    Ok(modified_stress(&model.first_piola_kirchhoff(k), phi_q[i], k))
                })
            }
        }
    }

    /// Eulerian force on the grid from a nodal force density.
    pub fn spread_force(&self, mesh: &SolidMesh, g: &[Vec2]) -> Result<FaceVectorField> {
        let points = InteractionPoints::from_quadrature(mesh, &self.quad);
        let gq = self.quad.interpolate(mesh, g);
        self.transfer.spread(&points, &gq)
    }

    fn divergence(&self, t: f64) -> CellScalarField {
        match &self.source {
            Some(s) => DivergenceSource::cosine_bump(self.fluid.grid, s.center, s.radius, s.rate(t)).q,
            None => CellScalarField::zeros(self.fluid.grid),
        }
    }

    /// One coupled step of size `dt`.
    pub fn step(&mut self, state: &CoupledState) -> Result<(CoupledState, StepRecord)> {
        let clock = Instant::now();
        let dt = self.dt;
        let t = state.fluid.time;
        self.refresh_quadrature(&state.mesh)?;

        // predictor: move the solid half a step with the current velocity
        let u_n = self.nodal_velocity(&state.fluid.u, &state.mesh)?;
        let mut half = state.mesh.clone();
        for (x, v) in half.current.iter_mut().zip(&u_n) {
            *x += v * (0.5 * dt);
        }
        self.refresh_quadrature(&half)?;

        // forces at the midpoint configuration
        let phi = match self.method {
            MethodKind::Original => None,
            _ => self.solve_phi(&half, state.phi.as_ref())?,
        };
        let g = self.force_density(&half, t + 0.5 * dt, phi.as_ref())?;
        let f = self.spread_force(&half, &g)?;
        let q = self.divergence(t + 0.5 * dt);
        let (fluid, diag) = self.fluid.advance(&state.fluid, &f, &q, dt)?;

        // corrector: move the solid the full step with the midpoint velocity
        let mut u_mid = state.fluid.u.clone();
        u_mid.axpy(1.0, &fluid.u);
        u_mid.scale(0.5);
        let v_mid = self.nodal_velocity(&u_mid, &half)?;
        let mut mesh = state.mesh.clone();
        for (x, v) in mesh.current.iter_mut().zip(&v_mid) {
            *x += v * dt;
        }

        let record = StepRecord {
            step: state.step + 1,
            time: fluid.time,
            max_velocity: diag.max_velocity,
            divergence_residual: diag.divergence_residual,
            krylov_iterations: diag.krylov_iterations,
            phi_iterations: phi.as_ref().map_or(0, |p| p.iterations),
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        };
        Ok((CoupledState { fluid, mesh, phi: phi.or_else(|| state.phi.clone()), step: state.step + 1 }, record))
    }

    /// `phi` on the final configuration: a fresh harmonic solve for the
    /// steady formulation, and a half step of diffusion from the last
    /// midpoint value otherwise.
    pub fn final_phi(&self, state: &CoupledState) -> Result<Option<PhiField>> {
        let Some(solver) = &self.phi_solver else { return Ok(None) };
        let bc = phi_boundary_values(&state.mesh, &self.model)?;
        match (solver.formulation, &state.phi) {
            (PhiFormulation::Diffusion { gamma }, Some(prev)) => {
                let half = PhiSolver::new(&self.space, &state.mesh, PhiFormulation::Diffusion { gamma }, 0.5 * self.dt)?;
                half.diffusion_step(prev, &bc).map(Some)
            }
            _ => solver.harmonic(&bc, None).map(Some),
        }
    }
}
