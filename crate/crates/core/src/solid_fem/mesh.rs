//! Structured Q1 meshes: the curvilinear ring, the Cartesian annulus and the
//! rectangular block.

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

/// Local corner coordinates of the Q1 reference square, counter-clockwise.
pub const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Which part of the solid boundary an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Inner,
    Outer,
    Bottom,
    Right,
    Top,
    Left,
}

/// An element edge on the solid boundary. Local edge `k` joins local nodes
/// `k` and `(k + 1) % 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub element: usize,
    pub edge: usize,
    pub tag: BoundaryTag,
}

impl BoundaryEdge {
    /// Local coordinates of the edge point with parameter `t` in [-1, 1],
    /// running from local node `edge` to local node `edge + 1`.
    pub fn local_point(&self, t: f64) -> [f64; 2] {
        let a = CORNERS[self.edge];
        let b = CORNERS[(self.edge + 1) % 4];
        let s = 0.5 * (1.0 + t);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    pub fn local_nodes(&self) -> [usize; 2] {
        [self.edge, (self.edge + 1) % 4]
    }
}

/// A quadrilateral mesh of the Lagrangian domain together with the current
/// configuration.
///
/// `reference` holds the coordinates with respect to which the deformation
/// gradient is taken. For the curvilinear ring these are the parameter
/// coordinates `s`; elsewhere they are the initial positions. A periodic
/// direction stores each seam node once; `period[d]` is the period length
/// used to unwrap element coordinates across the seam.
#[derive(Clone, Debug)]
pub struct SolidMesh {
    pub reference: Vec<Vec2>,
    pub current: Vec<Vec2>,
    pub elements: Vec<[usize; 4]>,
    pub period: [Option<f64>; 2],
    pub boundary: Vec<BoundaryEdge>,
    pub quadrature_order: usize,
}

impl SolidMesh {
    pub fn num_nodes(&self) -> usize {
        self.reference.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Reference corner coordinates of element `e`, unwrapped across any
    /// periodic seam so that the element is contiguous.
    pub fn element_reference(&self, e: usize) -> [Vec2; 4] {
        let nodes = self.elements[e];
        let mut out = nodes.map(|n| self.reference[n]);
        for d in 0..2 {
            if let Some(len) = self.period[d] {
                let base = out[0][d];
                for p in out.iter_mut().skip(1) {
                    if p[d] - base < -0.5 * len {
                        p[d] += len;
                    } else if p[d] - base > 0.5 * len {
                        p[d] -= len;
                    }
                }
            }
        }
        out
    }

    pub fn element_current(&self, e: usize) -> [Vec2; 4] {
        self.elements[e].map(|n| self.current[n])
    }

    /// Checks the structural invariants: finite positions, positive reference
    /// Jacobians at the element corners and centre.
    pub fn validate(&self) -> Result<()> {
        if self.current.len() != self.reference.len() {
            return Err(Error::Config("reference and current node counts differ".into()));
        }
        if self.current.iter().any(|x| !x.iter().all(|v| v.is_finite())) {
            return Err(Error::Config("non-finite node position".into()));
        }
        for e in 0..self.elements.len() {
            let xr = self.element_reference(e);
            for xi in CORNERS.iter().chain(std::iter::once(&[0.0, 0.0])) {
                let det = super::shape::jacobian(&xr, *xi).determinant();
                if det <= 0.0 || !det.is_finite() {
                    return Err(Error::DegenerateElement { element: e, det });
                }
            }
        }
        Ok(())
    }

    /// Boundary edges carrying `tag`.
    pub fn edges_with(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(move |b| b.tag == tag)
    }

    /// Sorted, de-duplicated list of nodes lying on the boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary
            .iter()
            .flat_map(|b| b.local_nodes().map(|l| self.elements[b.element][l]))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Replaces the current configuration by `f(X)` at every node.
    pub fn set_current_from(&mut self, f: impl Fn(Vec2) -> Vec2) {
        for (x, xr) in self.current.iter_mut().zip(&self.reference) {
            *x = f(*xr);
        }
    }
}

/// Number of element divisions so that the edge length along `length` is
/// close to `m_fac * h`, never fewer than `min`.
pub fn divisions(length: f64, h: f64, m_fac: f64, min: usize) -> usize {
    ((length / (m_fac * h)).round() as usize).max(min)
}

/// Thin ring parametrised by `s = (s1, s2)` in `[0, 2 pi R) x [0, w]`,
/// periodic in `s1`. The current configuration is the circular map
/// `c + (R + s2)(cos(s1/R), -sin(s1/R))`, which has positive Jacobian
/// `(R + s2)/R` with respect to `s`.
pub fn curvilinear_ring(center: [f64; 2], r: f64, w: f64, n1: usize, n2: usize) -> Result<SolidMesh> {
    if r <= 0.0 || w <= 0.0 || n1 < 3 || n2 < 1 {
        return Err(Error::Config(format!("invalid ring mesh R={r} w={w} n1={n1} n2={n2}")));
    }
    let len = 2.0 * std::f64::consts::PI * r;
    let node = |i: usize, j: usize| j * n1 + (i % n1);
    let mut reference = Vec::with_capacity(n1 * (n2 + 1));
    for j in 0..=n2 {
        for i in 0..n1 {
            reference.push(Vec2::new(len * i as f64 / n1 as f64, w * j as f64 / n2 as f64));
        }
    }
    let mut elements = Vec::with_capacity(n1 * n2);
    let mut boundary = Vec::new();
    for j in 0..n2 {
        for i in 0..n1 {
            let e = elements.len();
            elements.push([node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
            if j == 0 {
                boundary.push(BoundaryEdge { element: e, edge: 0, tag: BoundaryTag::Inner });
            }
            if j + 1 == n2 {
                boundary.push(BoundaryEdge { element: e, edge: 2, tag: BoundaryTag::Outer });
            }
        }
    }
    let mut mesh = SolidMesh {
        current: reference.clone(),
        reference,
        elements,
        period: [Some(len), None],
        boundary,
        quadrature_order: 2,
    };
    mesh.set_current_from(|s| ring_map(center, r, s));
    mesh.validate()?;
    Ok(mesh)
}

/// The circular embedding used by [`curvilinear_ring`].
pub fn ring_map(center: [f64; 2], r: f64, s: Vec2) -> Vec2 {
    let rad = r + s[1];
    let a = s[0] / r;
    Vec2::new(center[0] + rad * a.cos(), center[1] - rad * a.sin())
}

/// Closed-form derivative of [`ring_map`] with respect to `s`.
pub fn ring_map_gradient(r: f64, s: Vec2) -> Mat2 {
    let a = s[0] / r;
    let stretch = (r + s[1]) / r;
    Mat2::new(-stretch * a.sin(), a.cos(), -stretch * a.cos(), -a.sin())
}

/// Annulus `r_in <= |X - c| <= r_out` meshed in Cartesian reference
/// coordinates by a polar product of `n_theta` angular and `n_r` radial
/// divisions. Straight element edges; seam nodes are shared.
pub fn annulus(center: [f64; 2], r_in: f64, r_out: f64, n_theta: usize, n_r: usize) -> Result<SolidMesh> {
    if !(0.0 < r_in && r_in < r_out) || n_theta < 3 || n_r < 1 {
        return Err(Error::Config(format!("invalid annulus {r_in}..{r_out} ({n_theta}x{n_r})")));
    }
    let node = |j: usize, k: usize| j * n_theta + (k % n_theta);
    let mut reference = Vec::with_capacity(n_theta * (n_r + 1));
    for j in 0..=n_r {
        let rad = r_in + (r_out - r_in) * j as f64 / n_r as f64;
        for k in 0..n_theta {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
            reference.push(Vec2::new(center[0] + rad * th.cos(), center[1] + rad * th.sin()));
        }
    }
    let mut elements = Vec::new();
    let mut boundary = Vec::new();
    for j in 0..n_r {
        for k in 0..n_theta {
            let e = elements.len();
            elements.push([node(j, k), node(j + 1, k), node(j + 1, k + 1), node(j, k + 1)]);
            if j + 1 == n_r {
                boundary.push(BoundaryEdge { element: e, edge: 1, tag: BoundaryTag::Outer });
            }
            if j == 0 {
                boundary.push(BoundaryEdge { element: e, edge: 3, tag: BoundaryTag::Inner });
            }
        }
    }
    let mesh = SolidMesh {
        current: reference.clone(),
        reference,
        elements,
        period: [None, None],
        boundary,
        quadrature_order: 2,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Axis-aligned rectangle `[x0, x0 + lx] x [y0, y0 + ly]` with `nx x ny`
/// elements, initially undeformed.
pub fn block(origin: [f64; 2], size: [f64; 2], nx: usize, ny: usize) -> Result<SolidMesh> {
    if size[0] <= 0.0 || size[1] <= 0.0 || nx < 1 || ny < 1 {
        return Err(Error::Config(format!("invalid block {size:?} ({nx}x{ny})")));
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut reference = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            reference.push(Vec2::new(
                origin[0] + size[0] * i as f64 / nx as f64,
                origin[1] + size[1] * j as f64 / ny as f64,
            ));
        }
    }
    let mut elements = Vec::new();
    let mut boundary = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let e = elements.len();
            elements.push([node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
            let mut tag = |edge, tag| boundary.push(BoundaryEdge { element: e, edge, tag });
            if j == 0 {
                tag(0, BoundaryTag::Bottom);
            }
            if i + 1 == nx {
                tag(1, BoundaryTag::Right);
            }
            if j + 1 == ny {
                tag(2, BoundaryTag::Top);
            }
            if i == 0 {
                tag(3, BoundaryTag::Left);
            }
        }
    }
    let mesh = SolidMesh {
        current: reference.clone(),
        reference,
        elements,
        period: [None, None],
        boundary,
        quadrature_order: 2,
    };
    mesh.validate()?;
    Ok(mesh)
}
