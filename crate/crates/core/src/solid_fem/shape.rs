//! Bilinear shape functions and the deformation gradient.

use super::mesh::{SolidMesh, CORNERS};
use crate::error::{Error, Result};
use crate::{Mat2, Vec2};

pub fn values(xi: [f64; 2]) -> [f64; 4] {
    CORNERS.map(|c| 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]))
}

/// Gradients of the shape functions with respect to the local coordinates.
pub fn local_gradients(xi: [f64; 2]) -> [Vec2; 4] {
    CORNERS.map(|c| {
        Vec2::new(0.25 * c[0] * (1.0 + c[1] * xi[1]), 0.25 * c[1] * (1.0 + c[0] * xi[0]))
    })
}

/// `d x / d xi` for the bilinear map through the four corners `x`.
pub fn jacobian(x: &[Vec2; 4], xi: [f64; 2]) -> Mat2 {
    let g = local_gradients(xi);
    let mut m = Mat2::zeros();
    for a in 0..4 {
        m += x[a] * g[a].transpose();
    }
    m
}

pub fn interpolate(x: &[Vec2; 4], xi: [f64; 2]) -> Vec2 {
    let n = values(xi);
    (0..4).map(|a| x[a] * n[a]).sum()
}

/// Deformation gradient and related quantities at one material point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub f: Mat2,
    pub j: f64,
    pub finv_t: Mat2,
    /// Reference position of the point.
    pub reference: Vec2,
    /// Current position of the point.
    pub current: Vec2,
}

impl Kinematics {
    /// Builds the kinematics from `F`, failing with `InvertedElement` when
    /// `det F <= 0`.
    pub fn from_f(f: Mat2, reference: Vec2, current: Vec2, element: usize) -> Result<Self> {
        let j = f.determinant();
        if j <= 0.0 || !j.is_finite() {
            return Err(Error::InvertedElement { element, jacobian: j });
        }
        let finv_t = Mat2::new(f[(1, 1)], -f[(1, 0)], -f[(0, 1)], f[(0, 0)]) / j;
        Ok(Self { f, j, finv_t, reference, current })
    }

    pub fn identity(at: Vec2) -> Self {
        Self { f: Mat2::identity(), j: 1.0, finv_t: Mat2::identity(), reference: at, current: at }
    }
}

/// Reference gradients of the shape functions and the reference Jacobian
/// determinant at `xi`.
pub fn reference_gradients(xr: &[Vec2; 4], xi: [f64; 2], element: usize) -> Result<([Vec2; 4], f64)> {
    let jac = jacobian(xr, xi);
    let det = jac.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::DegenerateElement { element, det });
    }
    let inv_t = Mat2::new(jac[(1, 1)], -jac[(1, 0)], -jac[(0, 1)], jac[(0, 0)]) / det;
    Ok((local_gradients(xi).map(|g| inv_t * g), det))
}

/// `F = (d chi / d xi)(d X / d xi)^-1` at local coordinates `xi` of
/// `element`.
pub fn deformation_gradient(mesh: &SolidMesh, element: usize, xi: [f64; 2]) -> Result<Kinematics> {
    let xr = mesh.element_reference(element);
    let xc = mesh.element_current(element);
    let (grads, _) = reference_gradients(&xr, xi, element)?;
    let mut f = Mat2::zeros();
    for a in 0..4 {
        f += xc[a] * grads[a].transpose();
    }
    Kinematics::from_f(f, interpolate(&xr, xi), interpolate(&xc, xi), element)
}
