//! Precomputed quadrature data, mass and stiffness matrices, and the
//! projection of stresses and loads onto nodal force densities.

use super::constitutive::ConstitutiveModel;
use super::loads::{tether_and_load_forces, SurfaceLoad};
use super::mesh::SolidMesh;
use super::quadrature::gauss_square;
use super::shape::{self, Kinematics};
use crate::error::Result;
use crate::linalg::{cg_jacobi, CsrMatrix, TripletBuilder};
use crate::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

/// Relative residual used for every mass-matrix solve.
pub const MASS_TOL: f64 = 1e-12;

/// One element quadrature point with its reference-configuration data.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub element: usize,
    pub xi: [f64; 2],
    pub shape: [f64; 4],
    /// Shape-function gradients with respect to the reference coordinates.
    pub grads: [Vec2; 4],
    /// Gauss weight times the reference Jacobian determinant.
    pub weight: f64,
}

/// Tensor-product Gauss points on every element, stored element by element.
#[derive(Clone, Debug)]
pub struct ElementQuadrature {
    pub order: usize,
    pub points: Vec<QuadPoint>,
}

impl ElementQuadrature {
    pub fn new(mesh: &SolidMesh, order: usize) -> Result<Self> {
        let rule = gauss_square(order);
        let mut points = Vec::with_capacity(rule.len() * mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let xr = mesh.element_reference(e);
            for &(xi, w) in &rule {
                let (grads, det) = shape::reference_gradients(&xr, xi, e)?;
                points.push(QuadPoint { element: e, xi, shape: shape::values(xi), grads, weight: w * det });
            }
        }
        Ok(Self { order, points })
    }

    /// Deformation gradient at one point in the current configuration.
    pub fn kinematics(&self, mesh: &SolidMesh, q: &QuadPoint) -> Result<Kinematics> {
        let nodes = mesh.elements[q.element];
        let xr = mesh.element_reference(q.element);
        let mut f = Mat2::zeros();
        let mut x = Vec2::zeros();
        let mut xref = Vec2::zeros();
        for a in 0..4 {
            let xa = mesh.current[nodes[a]];
            f += xa * q.grads[a].transpose();
            x += xa * q.shape[a];
            xref += xr[a] * q.shape[a];
        }
        Kinematics::from_f(f, xref, x, q.element)
    }

    /// Values of a nodal field at every point.
    pub fn interpolate<T>(&self, mesh: &SolidMesh, nodal: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        self.points
            .iter()
            .map(|q| {
                let nodes = mesh.elements[q.element];
                let mut v = nodal[nodes[0]] * q.shape[0];
                for a in 1..4 {
                    v = v + nodal[nodes[a]] * q.shape[a];
                }
                v
            })
            .collect()
    }

    /// Current positions of the points.
    pub fn positions(&self, mesh: &SolidMesh) -> Vec<Vec2> {
        self.interpolate(mesh, &mesh.current)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|q| q.weight).collect()
    }

    /// `sum_q v(q) N_a(q) w_q` for every node `a`.
    pub fn test_against(&self, mesh: &SolidMesh, values: &[Vec2]) -> Vec<Vec2> {
        let mut out = vec![Vec2::zeros(); mesh.num_nodes()];
        for (q, v) in self.points.iter().zip(values) {
            let nodes = mesh.elements[q.element];
            for a in 0..4 {
                out[nodes[a]] += v * (q.shape[a] * q.weight);
            }
        }
        out
    }
}

/// How the nodal force density is recovered from the weak form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    #[default]
    Consistent,
    Lumped,
}

/// Q1 space over a mesh: assembly quadrature and the scalar mass and
/// stiffness matrices in reference coordinates.
#[derive(Clone, Debug)]
pub struct FemSpace {
    pub quadrature: ElementQuadrature,
    pub mass: CsrMatrix,
    pub lumped: Vec<f64>,
    pub stiffness: CsrMatrix,
}

impl FemSpace {
    pub fn new(mesh: &SolidMesh) -> Result<Self> {
        mesh.validate()?;
        let quadrature = ElementQuadrature::new(mesh, mesh.quadrature_order.max(2))?;
        let n = mesh.num_nodes();
        let mut m = TripletBuilder::new(n);
        let mut k = TripletBuilder::new(n);
        for q in &quadrature.points {
            let nodes = mesh.elements[q.element];
            for a in 0..4 {
                for b in 0..4 {
                    m.add(nodes[a], nodes[b], q.shape[a] * q.shape[b] * q.weight);
                    k.add(nodes[a], nodes[b], q.grads[a].dot(&q.grads[b]) * q.weight);
                }
            }
        }
        let mass = m.build();
        let mut lumped = vec![0.0; n];
        for (i, l) in lumped.iter_mut().enumerate() {
            *l = (mass.row_ptr[i]..mass.row_ptr[i + 1]).map(|p| mass.vals[p]).sum();
        }
        Ok(Self { quadrature, mass, lumped, stiffness: k.build() })
    }

    /// Solves `M g = rhs` componentwise.
    pub fn solve_mass(&self, rhs: &[Vec2], kind: MassKind) -> Result<Vec<Vec2>> {
        let n = rhs.len();
        let mut out = vec![Vec2::zeros(); n];
        for c in 0..2 {
            let b: Vec<f64> = rhs.iter().map(|v| v[c]).collect();
            let x = match kind {
                MassKind::Lumped => b.iter().zip(&self.lumped).map(|(b, m)| b / m).collect(),
                MassKind::Consistent => {
                    let mut x: Vec<f64> = b.iter().zip(&self.lumped).map(|(b, m)| b / m).collect();
                    cg_jacobi(&self.mass, &b, &mut x, MASS_TOL, 10 * n.max(10), "mass matrix")?;
                    x
                }
            };
            for i in 0..n {
                out[i][c] = x[i];
            }
        }
        Ok(out)
    }

    /// Weak-form right-hand side `-int P : grad N_a dX` for a stress given
    /// per quadrature point (by index into `self.quadrature.points`).
    pub fn stress_rhs(
        &self,
        mesh: &SolidMesh,
        mut stress: impl FnMut(usize, &Kinematics) -> Result<Mat2>,
    ) -> Result<Vec<Vec2>> {
        let mut rhs = vec![Vec2::zeros(); mesh.num_nodes()];
        for (i, q) in self.quadrature.points.iter().enumerate() {
            let kin = self.quadrature.kinematics(mesh, q)?;
            let p = stress(i, &kin)?;
            let nodes = mesh.elements[q.element];
            for a in 0..4 {
                rhs[nodes[a]] -= p * q.grads[a] * q.weight;
            }
        }
        Ok(rhs)
    }

    /// Adds the boundary integrals of all surface loads to `rhs`.
    pub fn add_surface_loads(&self, mesh: &SolidMesh, loads: &[SurfaceLoad], t: f64, rhs: &mut [Vec2]) {
        for load in loads {
            let f = tether_and_load_forces(load, mesh, t, self.quadrature.order);
            for (r, v) in rhs.iter_mut().zip(f) {
                *r += v;
            }
        }
    }

    /// Nodal force density `G` with `int G . V = -int P : grad V + loads`,
    /// using a caller-supplied stress.
    pub fn force_density_with(
        &self,
        mesh: &SolidMesh,
        loads: &[SurfaceLoad],
        t: f64,
        kind: MassKind,
        stress: impl FnMut(usize, &Kinematics) -> Result<Mat2>,
    ) -> Result<Vec<Vec2>> {
        let mut rhs = self.stress_rhs(mesh, stress)?;
        self.add_surface_loads(mesh, loads, t, &mut rhs);
        self.solve_mass(&rhs, kind)
    }

    pub fn internal_force_density(
        &self,
        mesh: &SolidMesh,
        model: &ConstitutiveModel,
        loads: &[SurfaceLoad],
        t: f64,
        kind: MassKind,
    ) -> Result<Vec<Vec2>> {
        self.force_density_with(mesh, loads, t, kind, |_, k| Ok(model.first_piola_kirchhoff(k)))
    }
}

/// Convenience wrapper that builds the space, then projects the force
/// density with the consistent mass matrix.
pub fn internal_force_density(
    mesh: &SolidMesh,
    model: &ConstitutiveModel,
    loads: &[SurfaceLoad],
    t: f64,
) -> Result<Vec<Vec2>> {
    FemSpace::new(mesh)?.internal_force_density(mesh, model, loads, t, MassKind::Consistent)
}
