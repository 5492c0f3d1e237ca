//! Running one scenario end to end, and convergence sweeps over `N`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{MethodKind, ResolvedConfig, ScenarioKind, SimulationConfig};
use super::scenario::{self, MeshInfo, Scenario, BLOCK_ORIGIN, BLOCK_SIZE};
use super::step::{CoupledState, StepRecord, Stepper};
use crate::error::{Error, Result};
use crate::io;
use crate::mac_grid::{mean_zero_normalize, CellScalarField, FaceVectorField};
use crate::coupling::InteractionPoints;
use crate::metrics::{
    cell_error_norms, csv_rows, face_error_norms, fit_rate, jacobian_diagnostic, kernel_sample, lumped_node_weights,
    nested_node_map, nodal_difference_norms, radial_jump, ErrorReport, JacobianStats, NormKind, Norms, RadialJump, RateFit,
    RATE_CSV_HEADER,
};
use crate::oracles::static_ring_pressure;
use crate::pressure_split::{phi_on_grid, reconstruct_pressure, PhiField, ReconstructionStats};
use crate::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

/// Record of one run, written before the first step and rewritten at exit.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: ResolvedConfig,
    pub code_version: String,
    pub mesh: MeshInfo,
    pub status: RunStatus,
    pub error: Option<String>,
    pub failure_step: Option<usize>,
    pub steps_taken: usize,
    pub final_time_s: f64,
    pub early_exit: bool,
    pub diagnostics_file: PathBuf,
    pub output_files: Vec<PathBuf>,
    pub phi_iterations: Vec<usize>,
    pub krylov_iterations: Vec<usize>,
    pub errors: Vec<ErrorReport>,
    pub jacobian: Option<JacobianSummary>,
    pub reconstruction: Option<ReconstructionStats>,
    pub center_pressure: Option<CenterPressure>,
    pub interface_jump: Option<InterfaceJump>,
    pub wall_s: f64,
}

impl RunManifest {
    pub fn mean_phi_iterations(&self) -> Option<f64> {
        if self.phi_iterations.is_empty() {
            None
        } else {
            Some(self.phi_iterations.iter().sum::<usize>() as f64 / self.phi_iterations.len() as f64)
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JacobianSummary {
    pub min: f64,
    pub max: f64,
    pub max_deviation: f64,
    pub inverted: usize,
}

impl From<&JacobianStats> for JacobianSummary {
    fn from(s: &JacobianStats) -> Self {
        Self { min: s.min, max: s.max, max_deviation: s.max_deviation, inverted: s.inverted }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CenterPressure {
    pub sampled: f64,
    pub exact: f64,
}

/// Pressure jump across the outer wall of the static ring, outside minus
/// inside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterfaceJump {
    pub measured: RadialJump,
    pub exact: f64,
}

/// Final fields of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub state: CoupledState,
    pub velocity: FaceVectorField,
    /// Physical pressure: `pi` for the original method, `pi + phi` inside
    /// the solid for the sharp methods.
    pub pressure: CellScalarField,
    pub phi: Option<PhiField>,
    /// Velocity interpolated at the solid mesh nodes.
    pub nodal_velocity: Vec<Vec2>,
    /// Pressure at the solid mesh nodes: `pi` interpolated there, plus the
    /// nodal `phi` for the sharp methods.
    pub nodal_pressure: Vec<f64>,
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

/// Builds, integrates and post-processes one scenario.
pub fn run_scenario(config: &SimulationConfig) -> Result<RunOutput> {
    let cfg = config.resolve()?;
    run_resolved(&cfg)
}

pub fn run_resolved(cfg: &ResolvedConfig) -> Result<RunOutput> {
    let clock = Instant::now();
    let scenario = scenario::build(cfg)?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut manifest = RunManifest {
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        mesh: scenario.mesh_info.clone(),
        status: RunStatus::Running,
        error: None,
        failure_step: None,
        steps_taken: 0,
        final_time_s: 0.0,
        early_exit: false,
        diagnostics_file: dir.join("diagnostics.csv"),
        output_files: Vec::new(),
        phi_iterations: Vec::new(),
        krylov_iterations: Vec::new(),
        errors: Vec::new(),
        jacobian: None,
        reconstruction: None,
        center_pressure: None,
        interface_jump: None,
        wall_s: 0.0,
    };
    manifest.write(&manifest_path(&dir))?;

    let mut records = Vec::new();
    let result = integrate(cfg, &scenario, &mut manifest, &mut records)
        .and_then(|(stepper, state)| postprocess(cfg, &scenario, &stepper, state, &mut manifest));
    io::write_lines(&manifest.diagnostics_file, StepRecord::CSV_HEADER, &records.iter().map(StepRecord::csv).collect::<Vec<_>>())?;
    manifest.wall_s = clock.elapsed().as_secs_f64();
    match result {
        Ok(mut out) => {
            manifest.status = RunStatus::Completed;
            manifest.write(&manifest_path(&dir))?;
            out.manifest = manifest;
            Ok(out)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            manifest.failure_step = Some(manifest.steps_taken + 1);
            manifest.write(&manifest_path(&dir))?;
            Err(e)
        }
    }
}

fn integrate(
    cfg: &ResolvedConfig,
    scenario: &Scenario,
    manifest: &mut RunManifest,
    records: &mut Vec<StepRecord>,
) -> Result<(Stepper, CoupledState)> {
    let mut stepper = Stepper::new(cfg, scenario)?;
    let mut state = stepper.initial_state(scenario);
    let length = cfg.upper_mm[0] - cfg.lower_mm[0];
    let steady = cfg.steady_tol * length / cfg.final_time_s;
    // a slow velocity while the forcing is still ramping is not a steady state
    let forcing_ends = match cfg.scenario {
        ScenarioKind::CompressedBlock => cfg.t_load_s,
        ScenarioKind::InflatingRing => cfg.injection_time_s,
        ScenarioKind::StaticRing => 0.0,
    };
    for _ in 0..cfg.steps {
        let (next, rec) = stepper.step(&state)?;
        state = next;
        manifest.steps_taken = rec.step;
        manifest.final_time_s = rec.time;
        manifest.krylov_iterations.push(rec.krylov_iterations);
        if cfg.method.is_sharp() {
            manifest.phi_iterations.push(rec.phi_iterations);
        }
        records.push(rec);
        if steady > 0.0 && rec.time >= forcing_ends && rec.max_velocity < steady {
            manifest.early_exit = true;
            break;
        }
    }
    Ok((stepper, state))
}

fn postprocess(
    cfg: &ResolvedConfig,
    scenario: &Scenario,
    stepper: &Stepper,
    state: CoupledState,
    manifest: &mut RunManifest,
) -> Result<RunOutput> {
    let dir = cfg.output_dir.clone();
    let grid = scenario.grid;
    let phi = stepper.final_phi(&state)?;
    let pi = state.fluid.pi.clone();
    let (mut pressure, stats) = match &phi {
        Some(phi) => {
            let (p, s) = reconstruct_pressure(&pi, &state.mesh, &phi.values);
            (p, Some(s))
        }
        None => (pi.clone(), None),
    };
    if scenario.bc.all_no_slip() {
        pressure = mean_zero_normalize(&pressure);
    }
    manifest.reconstruction = stats;
    let jac = jacobian_diagnostic(&state.mesh);
    manifest.jacobian = Some((&jac).into());
    let u = state.fluid.u.clone();

    let scen = cfg.scenario.label().to_string();
    let method = method_label(cfg);
    let report = |field: &str, norms: Norms| ErrorReport {
        scenario: scen.clone(),
        method: method.clone(),
        field: field.into(),
        n: cfg.n,
        norms,
    };
    match cfg.scenario {
        ScenarioKind::StaticRing => {
            let params = scenario::static_ring_params(cfg);
            let c = params.center;
            manifest.errors.push(report("velocity", face_error_norms(&u, |_| [0.0, 0.0])));
            let exact = |x: [f64; 2]| static_ring_pressure(((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt(), &params);
            manifest.errors.push(report("pressure", cell_error_norms(&pressure, exact, true)));
            let outer = params.r + params.w;
            let measured = radial_jump(&pressure, c, outer)?;
            manifest.interface_jump = Some(InterfaceJump { measured, exact: -params.mu_e / params.w * params.r / outer });
        }
        ScenarioKind::InflatingRing => {
            let params = scenario::inflating_ring_params(cfg);
            manifest.errors.push(report("velocity", face_error_norms(&u, |_| [0.0, 0.0])));
            let exact = |x: [f64; 2]| params.pressure((x[0] * x[0] + x[1] * x[1]).sqrt());
            manifest.errors.push(report("pressure", cell_error_norms(&pressure, exact, false)));
            let sampled = kernel_sample(&pressure, scenario::INFLATE_CENTER, cfg.sample_radius_mm)?;
            let exact = params.inner_pressure();
            manifest.center_pressure = Some(CenterPressure { sampled, exact });
            let e = (sampled - exact).abs();
            manifest.errors.push(report("center_pressure", Norms { l1: e, l2: e, linf: e }));
        }
        ScenarioKind::CompressedBlock => {}
    }

    if !manifest.errors.is_empty() {
        let path = dir.join("errors.csv");
        let rows: Vec<String> = manifest.errors.iter().flat_map(|r| csv_rows(r, None)).collect();
        io::write_lines(&path, RATE_CSV_HEADER, &rows)?;
        manifest.output_files.push(path);
    }
    if cfg.scenario == ScenarioKind::CompressedBlock {
        let phi_grid = phi.as_ref().map(|p| phi_on_grid(grid, &state.mesh, &p.values));
        for (label, x) in [("slice_x15_omega.csv", BLOCK_ORIGIN[0] + 0.5 * BLOCK_SIZE[0]), ("slice_x15_block.csv", BLOCK_ORIGIN[0] + 15.0)] {
            let path = dir.join(label);
            let rows = vertical_slice(&pressure, &pi, phi_grid.as_ref(), x);
            io::write_table(&path, "x,y,p,pi,phi", &rows)?;
            manifest.output_files.push(path);
        }
    }
    if cfg.write_fields {
        let phi_grid = phi.as_ref().map_or_else(|| CellScalarField::zeros(grid), |p| phi_on_grid(grid, &state.mesh, &p.values));
        let fields = dir.join("fields.vtk");
        io::write_structured_vtk(&fields, "fields", &[("p", &pressure), ("pi", &pi), ("phi", &phi_grid)], Some(&u))?;
        manifest.output_files.push(fields);
        for (name, f) in [("p", &pressure), ("pi", &pi), ("phi", &phi_grid)] {
            let path = dir.join(format!("{name}.csv"));
            io::write_cell_csv(&path, f)?;
            manifest.output_files.push(path);
        }
        manifest.output_files.extend(io::write_face_csv(&dir, "u", &u)?);
        let mesh_path = dir.join("mesh.vtk");
        let nodal_phi = phi.as_ref().map_or_else(|| vec![0.0; state.mesh.num_nodes()], |p| p.values.clone());
        io::write_mesh_vtk(&mesh_path, "solid", &state.mesh, &[("phi", &nodal_phi)], &[("J", &jac.per_element)])?;
        manifest.output_files.push(mesh_path);
    }
    let nodes = &state.mesh.current;
    let points = InteractionPoints::new(nodes.clone(), vec![1.0; nodes.len()]);
    let nodal_velocity = stepper.transfer.interpolate(&u, &points)?;
    let mut nodal_pressure = stepper.transfer.interpolate_cells(&pi, nodes)?;
    if let Some(phi) = &phi {
        nodal_pressure.iter_mut().zip(&phi.values).for_each(|(p, f)| *p += f);
    }
    Ok(RunOutput { manifest: manifest.clone(), state, velocity: u, pressure, phi, nodal_velocity, nodal_pressure })
}

/// `sharp_diffusion` runs are labelled with their resolved gamma spec.
pub fn method_label(cfg: &ResolvedConfig) -> String {
    match (cfg.method, cfg.gamma) {
        (MethodKind::SharpDiffusion, Some(g)) if (g - cfg.h_mm).abs() < 1e-15 * cfg.h_mm.max(1.0) => "sharp_diffusion_gamma_h".into(),
        (MethodKind::SharpDiffusion, Some(g)) => format!("sharp_diffusion_gamma_{g}"),
        (m, _) => m.label().into(),
    }
}

/// Column of cell values linearly interpolated in `x` at every grid row.
fn vertical_slice(p: &CellScalarField, pi: &CellScalarField, phi: Option<&CellScalarField>, x: f64) -> Vec<Vec<f64>> {
    let g = p.grid;
    let s = ((x - g.lower[0]) / g.h() - 0.5).clamp(0.0, (g.nx() - 1) as f64);
    let i0 = (s.floor() as usize).min(g.nx().saturating_sub(2));
    let w = s - i0 as f64;
    let at = |f: &CellScalarField, j: usize| (1.0 - w) * f.get(i0, j) + w * f.get(i0 + 1, j);
    (0..g.ny())
        .map(|j| {
            let y = g.cell_center(0, j)[1];
            vec![x, y, at(p, j), at(pi, j), phi.map_or(0.0, |f| at(f, j))]
        })
        .collect()
}

/// One fitted rate per field and norm.
#[derive(Clone, Debug, Serialize)]
pub struct FieldRate {
    pub field: String,
    pub norm: NormKind,
    pub fit: RateFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub scenario: String,
    pub method: String,
    pub reports: Vec<ErrorReport>,
    pub rates: Vec<FieldRate>,
    pub manifests: Vec<RunManifest>,
    pub failures: Vec<(usize, String)>,
}

impl SweepResult {
    pub fn rate(&self, field: &str, norm: NormKind) -> Option<&RateFit> {
        self.rates.iter().find(|r| r.field == field && r.norm == norm).map(|r| &r.fit)
    }

    pub fn error(&self, field: &str, n: usize) -> Option<&Norms> {
        self.reports.iter().find(|r| r.field == field && r.n == n).map(|r| &r.norms)
    }
}

/// Runs the configuration at every resolution, then fits rates. Oracle
/// scenarios are compared with their exact solutions; the block uses the
/// difference between consecutive resolutions at the shared solid mesh
/// nodes, reported at the coarser one.
pub fn run_convergence_sweep(config: &SimulationConfig, resolutions: &[usize], out_dir: &Path) -> Result<SweepResult> {
    if resolutions.len() < 3 {
        return Err(Error::Config("a sweep needs at least three resolutions".into()));
    }
    let mut manifests = Vec::new();
    let mut failures = Vec::new();
    let mut outputs: Vec<(usize, RunOutput)> = Vec::new();
    let mut scen = String::new();
    let mut method = String::new();
    for &n in resolutions {
        let mut c = config.with_n(n);
        let label = config.scenario.map_or("run", |s| s.label());
        c.output_dir = Some(out_dir.join(format!("{label}_{}_N{n}", config.method.label())));
        match run_scenario(&c) {
            Ok(out) => {
                scen = out.manifest.config.scenario.label().into();
                method = method_label(&out.manifest.config);
                manifests.push(out.manifest.clone());
                outputs.push((n, out));
            }
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => failures.push((n, e.to_string())),
        }
    }
    let mut reports = Vec::new();
    let richardson = config.scenario == Some(ScenarioKind::CompressedBlock);
    if richardson {
        for pair in outputs.windows(2) {
            let ((nc, coarse), (nf, fine)) = (&pair[0], &pair[1]);
            if *nf != 2 * nc {
                return Err(Error::Config("Richardson sweeps need resolutions that double".into()));
            }
            let map = nested_node_map(&coarse.state.mesh, &fine.state.mesh)?;
            let w = lumped_node_weights(&coarse.state.mesh);
            let component = |out: &RunOutput, c: usize| out.nodal_velocity.iter().map(|v| v[c]).collect::<Vec<f64>>();
            let velocity = nodal_difference_norms(&w, &component(coarse, 0), &component(fine, 0), &map)
                .max(nodal_difference_norms(&w, &component(coarse, 1), &component(fine, 1), &map));
            let pressure = nodal_difference_norms(&w, &coarse.nodal_pressure, &fine.nodal_pressure, &map);
            for (field, norms) in [("velocity", velocity), ("pressure", pressure)] {
                reports.push(ErrorReport { scenario: scen.clone(), method: method.clone(), field: field.into(), n: *nc, norms });
            }
        }
    } else {
        for (_, out) in &outputs {
            reports.extend(out.manifest.errors.iter().cloned());
        }
    }

    let mut fields: Vec<String> = Vec::new();
    for r in &reports {
        if !fields.contains(&r.field) {
            fields.push(r.field.clone());
        }
    }
    let mut rates = Vec::new();
    let mut rows = Vec::new();
    for field in &fields {
        let series: Vec<&ErrorReport> = reports.iter().filter(|r| &r.field == field).collect();
        for (k, rep) in series.iter().enumerate() {
            let pair = (k > 0).then(|| {
                let prev = series[k - 1];
                let ratio = (rep.n as f64 / prev.n as f64).ln();
                NormKind::ALL.map(|nk| (prev.norms.get(nk) / rep.norms.get(nk)).ln() / ratio)
            });
            rows.extend(csv_rows(rep, pair));
        }
        for norm in NormKind::ALL {
            let pts: Vec<(usize, f64)> = series.iter().map(|r| (r.n, r.norms.get(norm))).collect();
            if let Ok(fit) = fit_rate(&pts) {
                rates.push(FieldRate { field: field.clone(), norm, fit });
            }
        }
    }
    io::write_lines(&out_dir.join("sweep_errors.csv"), RATE_CSV_HEADER, &rows)?;
    let rate_rows: Vec<String> = rates
        .iter()
        .map(|r| format!("{scen},{method},{},{},{:.6},{:.6}", r.field, r.norm.label(), r.fit.rate, r.fit.residual))
        .collect();
    io::write_lines(&out_dir.join("sweep_rates.csv"), "scenario,method,field,norm,rate,residual", &rate_rows)?;
    Ok(SweepResult { scenario: scen, method, reports, rates, manifests, failures })
}
