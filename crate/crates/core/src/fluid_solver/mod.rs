//! Semi-implicit incompressible Navier-Stokes stepping on the MAC grid.
//!
//! One step solves the saddle-point system
//!
//! ```text
//! (rho/dt - mu/2 L) u+ + G p = rho/dt u + mu/2 L u - rho N* + f
//!                      D u+  = q
//! ```
//!
//! with `N*` the Adams-Bashforth extrapolation of the conservative advection
//! term (forward Euler on the first step). The pressure is found by
//! preconditioned CG on the Schur complement `-D A^-1 G`, where every
//! application of `A^-1` is an exact fast-transform solve. The preconditioner
//! `(rho/dt)(-L_p)^-1 + mu/2` is exact when both axes carry traction
//! boundaries, in which case the solve finishes in one iteration.

pub mod advection;
pub mod boundary;
pub mod spectral;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use advection::{advection, AdvectionScheme};
pub use boundary::{
    apply_boundary_conditions, fill_pressure_ghosts, fill_velocity_ghosts, BoundaryCondition, Side, SideKind,
    WallVelocity,
};
use spectral::TensorSolver;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mac_grid::{divergence, gradient, mean_zero_normalize, CellScalarField, FaceVectorField, GridSpec, Padded};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    pub rho: f64,
    pub mu: f64,
}

impl FluidProperties {
    pub fn new(rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0 && mu > 0.0) {
            return Err(Error::Config("density and viscosity must be positive".into()));
        }
        Ok(Self { rho, mu })
    }
}

/// Velocity, pressure-like field and time, plus the previous advection term
/// needed by the two-step extrapolation.
#[derive(Clone, Debug)]
pub struct FluidState {
    pub u: FaceVectorField,
    pub pi: CellScalarField,
    pub time: f64,
    pub(crate) prev_advection: Option<(FaceVectorField, f64)>,
}

impl FluidState {
    pub fn at_rest(grid: GridSpec) -> Self {
        Self::new(FaceVectorField::zeros(grid), CellScalarField::zeros(grid), 0.0)
    }

    pub fn new(u: FaceVectorField, pi: CellScalarField, time: f64) -> Self {
        Self { u, pi, time, prev_advection: None }
    }

    pub fn kinetic_energy(&self, rho: f64) -> f64 {
        let h2 = self.u.grid.cell_area();
        0.5 * rho * h2 * self.u.dot(&self.u)
    }
}

/// Prescribed divergence `q` (a volume source density, 1/s).
#[derive(Clone, Debug)]
pub struct DivergenceSource {
    pub q: CellScalarField,
    /// Running total of injected area.
    pub injected: f64,
}

impl DivergenceSource {
    pub fn zero(grid: GridSpec) -> Self {
        Self { q: CellScalarField::zeros(grid), injected: 0.0 }
    }

    /// Tensor-product cosine bump of the given radius centred at `center`,
    /// scaled so that `h^2 sum q = rate` exactly.
    pub fn cosine_bump(grid: GridSpec, center: [f64; 2], radius: f64, rate: f64) -> Self {
        let shape = cosine_bump_shape(grid, center, radius);
        let mut q = shape;
        q.values.map_interior(|_, _, v| v * rate);
        Self { q, injected: 0.0 }
    }

    /// `h^2 sum q`.
    pub fn rate(&self) -> f64 {
        self.q.grid.cell_area() * self.q.values.interior_iter().map(|t| t.2).sum::<f64>()
    }
}

/// Discretely normalised tensor-product cosine bump, `h^2 sum = 1`.
pub fn cosine_bump_shape(grid: GridSpec, center: [f64; 2], radius: f64) -> CellScalarField {
    let k = |d: f64| {
        if d.abs() < radius {
            0.5 / radius * (1.0 + (std::f64::consts::PI * d / radius).cos())
        } else {
            0.0
        }
    };
    let mut f = CellScalarField::from_fn(grid, |x| k(x[0] - center[0]) * k(x[1] - center[1]));
    let total = grid.cell_area() * f.values.interior_iter().map(|t| t.2).sum::<f64>();
    if total > 0.0 {
        f.values.map_interior(|_, _, v| v / total);
    }
    f
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidOptions {
    pub advection: AdvectionScheme,
    pub rel_tol: f64,
    /// Iteration cap is `cap_factor * max(nx, ny)`.
    pub cap_factor: usize,
    /// Reject steps whose CFL number exceeds this value.
    pub max_cfl: f64,
}

impl Default for FluidOptions {
    fn default() -> Self {
        Self { advection: AdvectionScheme::Centered, rel_tol: 1e-12, cap_factor: 10, max_cfl: 1.0 }
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub time: f64,
    pub max_velocity: f64,
    pub divergence_residual: f64,
    pub krylov_iterations: usize,
    pub wall_ms: f64,
}

/// Fluid integrator bound to a grid, material and boundary conditions.
#[derive(Clone, Debug)]
pub struct FluidSolver {
    pub grid: GridSpec,
    pub props: FluidProperties,
    pub bc: BoundaryCondition,
    pub options: FluidOptions,
    vel: [TensorSolver; 2],
    pres: TensorSolver,
}

fn pack(field: &Padded, s: &TensorSolver) -> Vec<f64> {
    let (mx, my) = s.dims();
    let (ox, oy) = s.offsets();
    let mut out = Vec::with_capacity(mx * my);
    for l in 0..my {
        for k in 0..mx {
            out.push(field.get(ox + k, oy + l));
        }
    }
    out
}

fn unpack(data: &[f64], s: &TensorSolver, field: &mut Padded) {
    let (mx, my) = s.dims();
    let (ox, oy) = s.offsets();
    for l in 0..my {
        for k in 0..mx {
            field.set((ox + k) as isize, (oy + l) as isize, data[k + mx * l]);
        }
    }
}

impl FluidSolver {
    pub fn new(grid: GridSpec, props: FluidProperties, bc: BoundaryCondition, options: FluidOptions) -> Result<Self> {
        bc.validate()?;
        let h = grid.h();
        let (nx, ny) = (grid.nx(), grid.ny());
        let cx = bc.velocity_closures(0)?;
        let cy = bc.velocity_closures(1)?;
        let cp = bc.pressure_closures()?;
        Ok(Self {
            grid,
            props,
            bc,
            options,
            vel: [
                TensorSolver::new(cx[0], cx[1], nx, ny, h),
                TensorSolver::new(cy[0], cy[1], nx, ny, h),
            ],
            pres: TensorSolver::new(cp[0], cp[1], nx, ny, h),
        })
    }

    fn iteration_cap(&self) -> usize {
        self.options.cap_factor * self.grid.nx().max(self.grid.ny())
    }

    /// Applies `(alpha - beta L)^-1` to the unknown faces of `r`; all other
    /// stored values of the result are zero.
    fn momentum_solve(&self, r: &FaceVectorField, alpha: f64, beta: f64) -> FaceVectorField {
        let mut out = FaceVectorField::zeros(self.grid);
        for c in 0..2 {
            let s = &self.vel[c];
            let mut d = pack(r.comp(c), s);
            s.solve(&mut d, alpha, beta);
            unpack(&d, s, out.comp_mut(c));
        }
        out
    }

    /// Pressure gradient with homogeneous closures, restricted to unknown faces.
    fn gradient_homogeneous(&self, p: &CellScalarField) -> FaceVectorField {
        let mut p = p.clone();
        fill_pressure_ghosts(&mut p, &self.bc, true);
        let mut g = gradient(&p);
        self.zero_prescribed_faces(&mut g);
        g
    }

    fn zero_prescribed_faces(&self, f: &mut FaceVectorField) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for c in 0..2 {
            let n = self.grid.cells[c];
            let comp = f.comp_mut(c);
            for k in [0, n] {
                if self.bc.side(c, k != 0).kind == SideKind::NoSlip {
                    let m = if c == 0 { ny } else { nx };
                    for t in 0..m {
                        let (i, j) = if c == 0 { (k, t) } else { (t, k) };
                        comp.set(i as isize, j as isize, 0.0);
                    }
                }
            }
        }
    }

    fn cells_to_field(&self, v: &[f64]) -> CellScalarField {
        let mut p = CellScalarField::zeros(self.grid);
        p.values.set_interior(v);
        p
    }

    /// Advances the state by `dt` under body force `f` and divergence `q`.
    pub fn advance(
        &self,
        state: &FluidState,
        f: &FaceVectorField,
        q: &CellScalarField,
        dt: f64,
    ) -> Result<(FluidState, StepDiagnostics)> {
        let clock = Instant::now();
        if !(dt > 0.0) {
            return Err(Error::Config("time step must be positive".into()));
        }
        let h = self.grid.h();
        let cfl = state.u.max_abs() * dt / h;
        if cfl > self.options.max_cfl {
            return Err(Error::CflViolation { cfl });
        }
        let FluidProperties { rho, mu } = self.props;
        let t = state.time;

        let mut un = state.u.clone();
        fill_velocity_ghosts(&mut un, &self.bc, t);
        let lap_n = crate::mac_grid::face_laplacian(&un);

        // explicit advection with two-step extrapolation
        let n_now = advection(&un, self.options.advection);
        let n_star = match &state.prev_advection {
            Some((prev, dt_prev)) if self.options.advection != AdvectionScheme::Off => {
                let w = dt / dt_prev;
                let mut s = n_now.clone();
                s.scale(1.0 + 0.5 * w);
                s.axpy(-0.5 * w, prev);
                s
            }
            _ => n_now.clone(),
        };

        // boundary data at the new time level, lifted into the right-hand side
        let mut lift = FaceVectorField::zeros(self.grid);
        fill_velocity_ghosts(&mut lift, &self.bc, t + dt);
        let lap_lift = crate::mac_grid::face_laplacian(&lift);
        let mut zero_p = CellScalarField::zeros(self.grid);
        fill_pressure_ghosts(&mut zero_p, &self.bc, false);
        let grad_lift = gradient(&zero_p);
        let mut data_faces = lift.clone();
        data_faces.x.clear_ghosts();
        data_faces.y.clear_ghosts();
        let div_lift = divergence(&data_faces);

        let mut rhs = un.clone();
        rhs.scale(rho / dt);
        rhs.axpy(0.5 * mu, &lap_n);
        rhs.axpy(0.5 * mu, &lap_lift);
        rhs.axpy(-rho, &n_star);
        rhs.axpy(1.0, f);
        rhs.axpy(-1.0, &grad_lift);
        self.zero_prescribed_faces(&mut rhs);

        let alpha = rho / dt;
        let beta = 0.5 * mu;
        let w = self.momentum_solve(&rhs, alpha, beta);
        let mut qp = q.clone();
        qp.values.map_interior(|i, j, v| v - div_lift.get(i, j));
        let dw = divergence(&w);
        let b: Vec<f64> = qp.values.interior_iter().map(|(i, j, v)| v - dw.get(i, j)).collect();

        let null_space = self.bc.all_no_slip();
        let project = |v: &mut [f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        };
        let mut p = state.pi.values.interior();
        let stats = {
            let mut apply = |x: &[f64], out: &mut [f64]| {
                let g = self.gradient_homogeneous(&self.cells_to_field(x));
                let ag = self.momentum_solve(&g, alpha, beta);
                let d = divergence(&ag);
                for (o, (_, _, v)) in out.iter_mut().zip(d.values.interior_iter()) {
                    *o = -v;
                }
            };
            let mut precond = |r: &[f64], z: &mut [f64]| {
                z.copy_from_slice(r);
                self.pres.apply_spectral(z, |lam| if lam == 0.0 { 0.0 } else { alpha / (-lam) + beta });
            };
            linalg::pcg(
                &mut apply,
                &mut precond,
                if null_space { Some(&project) } else { None },
                &b,
                &mut p,
                self.options.rel_tol,
                self.iteration_cap(),
                "stokes_schur_pcg",
            )?
        };
        if null_space {
            project(&mut p);
        }
        let pi = self.cells_to_field(&p);
        let gp = self.gradient_homogeneous(&pi);
        let agp = self.momentum_solve(&gp, alpha, beta);
        let mut u_new = w;
        u_new.axpy(-1.0, &agp);
        // prescribed wall faces carry the boundary data
        u_new.axpy(1.0, &data_faces);
        u_new.x.clear_ghosts();
        u_new.y.clear_ghosts();
        let mut pi = pi;
        if null_space {
            pi = mean_zero_normalize(&pi);
        }
        if !u_new.is_finite() || !pi.is_finite() {
            return Err(Error::SolverDiverged {
                solver: "fluid_advance",
                iterations: stats.iterations,
                residual: f64::NAN,
            });
        }
        let div = divergence(&u_new);
        let div_res = div
            .values
            .interior_iter()
            .map(|(i, j, v)| (v - q.get(i, j)).abs())
            .fold(0.0, f64::max);
        let diag = StepDiagnostics {
            time: t + dt,
            max_velocity: u_new.max_abs(),
            divergence_residual: div_res,
            krylov_iterations: stats.iterations,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        };
        let state = FluidState { u: u_new, pi, time: t + dt, prev_advection: Some((n_now, dt)) };
        Ok((state, diag))
    }
}

/// One-shot convenience wrapper around [`FluidSolver::advance`].
pub fn advance(
    state: &FluidState,
    f: &FaceVectorField,
    q: &DivergenceSource,
    props: FluidProperties,
    bc: &BoundaryCondition,
    dt: f64,
) -> Result<FluidState> {
    let solver = FluidSolver::new(state.u.grid, props, bc.clone(), FluidOptions::default())?;
    Ok(solver.advance(state, f, &q.q, dt)?.0)
}

#[cfg(test)]
mod tests;
