//! Surface force densities acting on the solid boundary: tethers to the
//! reference configuration and ramped loading pressures.

use super::mesh::{BoundaryTag, SolidMesh};
use super::quadrature::gauss_legendre;
use super::shape;
use crate::error::{Error, Result};
use crate::Vec2;
use serde::{Deserialize, Serialize};

/// A surface force density, per unit reference length, on one part of the
/// boundary. Load profiles are evaluated at the horizontal coordinate
/// `X1 - origin_x` so they can be expressed in block-local units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceLoad {
    /// `kappa (X - chi)` with its vertical component removed.
    TetherTop { kappa: f64 },
    /// `kappa (X - chi)` with its horizontal component removed, so the
    /// bottom face can slide.
    TetherBottom { kappa: f64 },
    /// Downward dead load on the top face with a smooth bump profile on
    /// `(a, b)`.
    LoadPressureSmooth { p_max: f64, t_load: f64, a: f64, b: f64, origin_x: f64 },
    /// Downward dead load on the top face, uniform on `(a, b)`.
    LoadPressureDiscontinuous { p_max: f64, t_load: f64, a: f64, b: f64, origin_x: f64 },
}

/// Linear ramp from zero to `p_max` over `[0, t_load]`.
pub fn p_ramp(p_max: f64, t_load: f64, t: f64) -> f64 {
    if t < t_load {
        t / t_load * p_max
    } else {
        p_max
    }
}

/// Mollifier `exp((b-a)^2 / ((2x - a - b)^2 - (b-a)^2) + 1)` on `(a, b)`,
/// zero outside; equals one at the midpoint.
pub fn smooth_profile(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let l2 = (b - a) * (b - a);
    let m = 2.0 * x - a - b;
    (l2 / (m * m - l2) + 1.0).exp()
}

impl SurfaceLoad {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::TetherTop { kappa } | Self::TetherBottom { kappa } => kappa >= 0.0 && kappa.is_finite(),
            Self::LoadPressureSmooth { p_max, t_load, a, b, .. }
            | Self::LoadPressureDiscontinuous { p_max, t_load, a, b, .. } => p_max >= 0.0 && t_load > 0.0 && a < b,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid surface load {self:?}")))
        }
    }

    /// Boundary part the load acts on.
    pub fn tag(&self) -> BoundaryTag {
        match self {
            Self::TetherBottom { .. } => BoundaryTag::Bottom,
            _ => BoundaryTag::Top,
        }
    }

    /// Force per unit reference length at a boundary point.
    pub fn traction(&self, reference: Vec2, current: Vec2, t: f64) -> Vec2 {
        match *self {
            Self::TetherTop { kappa } => {
                let f = kappa * (reference - current);
                Vec2::new(f[0], 0.0)
            }
            Self::TetherBottom { kappa } => {
                let f = kappa * (reference - current);
                Vec2::new(0.0, f[1])
            }
            Self::LoadPressureSmooth { p_max, t_load, a, b, origin_x } => {
                let x1 = reference[0] - origin_x;
                Vec2::new(0.0, -p_ramp(p_max, t_load, t) * smooth_profile(x1, a, b))
            }
            Self::LoadPressureDiscontinuous { p_max, t_load, a, b, origin_x } => {
                let x1 = reference[0] - origin_x;
                let on = if a < x1 && x1 < b { 1.0 } else { 0.0 };
                Vec2::new(0.0, -p_ramp(p_max, t_load, t) * on)
            }
        }
    }
}

/// Nodal load vector `int_{boundary} T . N_a dA` for one load, integrated
/// with `order`-point Gauss rules on each tagged edge.
pub fn tether_and_load_forces(load: &SurfaceLoad, mesh: &SolidMesh, t: f64, order: usize) -> Vec<Vec2> {
    let mut out = vec![Vec2::zeros(); mesh.num_nodes()];
    let (pts, wts) = gauss_legendre(order);
    for edge in mesh.edges_with(load.tag()) {
        let xr = mesh.element_reference(edge.element);
        let xc = mesh.element_current(edge.element);
        let nodes = mesh.elements[edge.element];
        let [la, lb] = edge.local_nodes();
        let half_len = 0.5 * (xr[lb] - xr[la]).norm();
        for (&s, &w) in pts.iter().zip(&wts) {
            let xi = edge.local_point(s);
            let n = shape::values(xi);
            let tr = load.traction(shape::interpolate(&xr, xi), shape::interpolate(&xc, xi), t);
            for a in 0..4 {
                out[nodes[a]] += tr * (n[a] * w * half_len);
            }
        }
    }
    out
}
