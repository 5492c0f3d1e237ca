//! Transfer between the Lagrangian mesh and the Eulerian grid with
//! regularized delta functions. Spreading and interpolation share the same
//! tensor-product weights, so they are discrete adjoints.

use crate::error::{Error, Result};
use crate::mac_grid::{CellScalarField, FaceVectorField, GridSpec};
use crate::solid_fem::{ElementQuadrature, FemSpace, MassKind, SolidMesh};
use crate::Vec2;
use serde::{Deserialize, Serialize};

/// One-dimensional kernel profiles; the 2D kernel is their tensor product
/// scaled by `h^-2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaKernel {
    /// Four-point kernel with unit zeroth moment, zero first moment and
    /// constant sum of squares.
    #[default]
    Ib4,
    PiecewiseLinear,
    /// `(1/(2a))(1 + cos(pi x / a))` on `|x| < a`, physical radius `a`.
    /// The sampled weights are renormalised to sum to one.
    Cosine { radius: f64 },
}

impl DeltaKernel {
    /// Value of the 1D profile at grid-unit offset `r`.
    pub fn phi(&self, r: f64, h: f64) -> f64 {
        let a = r.abs();
        match *self {
            DeltaKernel::Ib4 => {
                if a < 1.0 {
                    (3.0 - 2.0 * a + (1.0 + 4.0 * a - 4.0 * a * a).sqrt()) / 8.0
                } else if a < 2.0 {
                    (5.0 - 2.0 * a - (-7.0 + 12.0 * a - 4.0 * a * a).max(0.0).sqrt()) / 8.0
                } else {
                    0.0
                }
            }
            DeltaKernel::PiecewiseLinear => (1.0 - a).max(0.0),
            DeltaKernel::Cosine { radius } => {
                let x = a * h;
                if x < radius {
                    h / (2.0 * radius) * (1.0 + (std::f64::consts::PI * x / radius).cos())
                } else {
                    0.0
                }
            }
        }
    }

    /// Number of grid points on each side that may carry weight.
    pub fn half_width(&self, h: f64) -> usize {
        match *self {
            DeltaKernel::Ib4 => 2,
            DeltaKernel::PiecewiseLinear => 1,
            DeltaKernel::Cosine { radius } => (radius / h).ceil() as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DeltaKernel::Cosine { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::Config(format!("cosine kernel radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    /// Index/weight pairs of the 1D stencil for a point at grid-unit
    /// coordinate `s` against samples at integer positions `0..count`.
    /// Periodic grids wrap indices modulo `count`.
    fn weights(&self, s: f64, count: usize, h: f64, periodic: bool) -> Option<Vec<(usize, f64)>> {
        let w = self.half_width(h) as isize;
        let base = s.floor() as isize;
        let mut out = Vec::with_capacity(2 * w as usize);
        let mut total = 0.0;
        for k in base - w + 1..=base + w {
            let v = self.phi(s - k as f64, h);
            if v == 0.0 {
                continue;
            }
            let idx = if periodic {
                k.rem_euclid(count as isize) as usize
            } else if k < 0 || k >= count as isize {
                return None;
            } else {
                k as usize
            };
            total += v;
            out.push((idx, v));
        }
        if matches!(self, DeltaKernel::Cosine { .. }) && total > 0.0 {
            out.iter_mut().for_each(|e| e.1 /= total);
        }
        Some(out)
    }
}

/// Lagrangian sample sites with their reference-measure weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InteractionPoints {
    pub positions: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl InteractionPoints {
    pub fn new(positions: Vec<Vec2>, weights: Vec<f64>) -> Self {
        assert_eq!(positions.len(), weights.len(), "one weight per point");
        Self { positions, weights }
    }

    pub fn from_quadrature(mesh: &SolidMesh, quad: &ElementQuadrature) -> Self {
        Self { positions: quad.positions(mesh), weights: quad.weights() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Gauss order per element direction so that interaction points are no
/// further than about half a grid cell apart, and at least 2.
pub fn interaction_order(mesh: &SolidMesh, h: f64) -> usize {
    let mut longest: f64 = 0.0;
    for e in 0..mesh.num_elements() {
        let x = mesh.element_current(e);
        for a in 0..4 {
            longest = longest.max((x[(a + 1) % 4] - x[a]).norm());
        }
    }
    ((2.0 * longest / h).ceil() as usize).max(2)
}

/// Spreading and interpolation on one grid with one kernel.
#[derive(Clone, Copy, Debug)]
pub struct Transfer {
    pub grid: GridSpec,
    pub kernel: DeltaKernel,
    /// Treat both axes as periodic (face index `n` aliases face `0`).
    pub periodic: bool,
}

type Stencil = (Vec<(usize, f64)>, Vec<(usize, f64)>);

impl Transfer {
    pub fn new(grid: GridSpec, kernel: DeltaKernel) -> Self {
        Self { grid, kernel, periodic: false }
    }

    pub fn periodic(grid: GridSpec, kernel: DeltaKernel) -> Self {
        Self { grid, kernel, periodic: true }
    }

    /// Kernel weights for a quantity stored at `lower + (k + shift) h`, with
    /// `dims` entries per axis.
    fn weights_at(&self, x: Vec2, shift: [f64; 2], dims: [usize; 2]) -> Result<Stencil> {
        let g = &self.grid;
        let h = g.h();
        let sx = (x[0] - g.lower[0]) / h - shift[0];
        let sy = (x[1] - g.lower[1]) / h - shift[1];
        let err = || Error::PointOutOfDomain { x: x[0], y: x[1] };
        if !(sx.is_finite() && sy.is_finite()) {
            return Err(err());
        }
        let wx = self.kernel.weights(sx, dims[0], h, self.periodic).ok_or_else(err)?;
        let wy = self.kernel.weights(sy, dims[1], h, self.periodic).ok_or_else(err)?;
        Ok((wx, wy))
    }

    fn stencil(&self, comp: usize, x: Vec2) -> Result<Stencil> {
        let g = &self.grid;
        // component `comp` is stored at integer positions along its own axis
        // and at half-integer positions along the other
        let shift = if comp == 0 { [0.0, 0.5] } else { [0.5, 0.0] };
        let dims = if self.periodic { [g.nx(), g.ny()] } else { g.face_dims(comp) };
        self.weights_at(x, shift, dims)
    }

    /// Cell-centred field sampled at arbitrary points with the same kernel.
    pub fn interpolate_cells(&self, p: &CellScalarField, positions: &[Vec2]) -> Result<Vec<f64>> {
        let dims = [self.grid.nx(), self.grid.ny()];
        positions
            .iter()
            .map(|x| {
                let (wx, wy) = self.weights_at(*x, [0.5, 0.5], dims)?;
                let mut acc = 0.0;
                for &(j, vy) in &wy {
                    for &(i, vx) in &wx {
                        acc += p.get(i, j) * vx * vy;
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// `f(face) = sum_q F_q w_q delta_h(face - X_q)`.
    pub fn spread(&self, points: &InteractionPoints, forces: &[Vec2]) -> Result<FaceVectorField> {
        let mut f = FaceVectorField::zeros(self.grid);
        let inv_h2 = 1.0 / (self.grid.h() * self.grid.h());
        for ((x, w), force) in points.positions.iter().zip(&points.weights).zip(forces) {
            for c in 0..2 {
                let (wx, wy) = self.stencil(c, *x)?;
                let amp = force[c] * w * inv_h2;
                let field = f.comp_mut(c);
                for &(j, vy) in &wy {
                    for &(i, vx) in &wx {
                        field.add(i as isize, j as isize, amp * vx * vy);
                    }
                }
            }
        }
        Ok(f)
    }

    /// `U_q = h^2 sum_faces u delta_h(face - X_q)`.
    pub fn interpolate(&self, u: &FaceVectorField, points: &InteractionPoints) -> Result<Vec<Vec2>> {
        points
            .positions
            .iter()
            .map(|x| {
                let mut out = Vec2::zeros();
                for c in 0..2 {
                    let (wx, wy) = self.stencil(c, *x)?;
                    let field = u.comp(c);
                    let mut acc = 0.0;
                    for &(j, vy) in &wy {
                        for &(i, vx) in &wx {
                            acc += field.at(i as isize, j as isize) * vx * vy;
                        }
                    }
                    out[c] = acc;
                }
                Ok(out)
            })
            .collect()
    }
}

pub fn spread(
    points: &InteractionPoints,
    forces: &[Vec2],
    kernel: DeltaKernel,
    grid: GridSpec,
) -> Result<FaceVectorField> {
    Transfer::new(grid, kernel).spread(points, forces)
}

pub fn interpolate(u: &FaceVectorField, points: &InteractionPoints, kernel: DeltaKernel) -> Result<Vec<Vec2>> {
    Transfer::new(u.grid, kernel).interpolate(u, points)
}

/// L2 projection of point velocities onto the nodal Q1 space, using the
/// quadrature that produced the points.
pub fn project_nodal_velocity(
    space: &FemSpace,
    mesh: &SolidMesh,
    quad: &ElementQuadrature,
    velocities: &[Vec2],
) -> Result<Vec<Vec2>> {
    let rhs = quad.test_against(mesh, velocities);
    space.solve_mass(&rhs, MassKind::Consistent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solid_fem::mesh::{annulus, block};
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};

    const KERNELS: [DeltaKernel; 3] =
        [DeltaKernel::Ib4, DeltaKernel::PiecewiseLinear, DeltaKernel::Cosine { radius: 0.1 }];

    fn grid16() -> GridSpec {
        GridSpec::square(0.0, 1.0, 16).unwrap()
    }

    #[test]
    fn cell_interpolation_is_exact_for_linear_fields() {
        let g = grid16();
        let p = CellScalarField::from_fn(g, |x| 2.0 - 3.0 * x[0] + 0.5 * x[1]);
        let t = Transfer::new(g, DeltaKernel::Ib4);
        let pts = [Vec2::new(0.41, 0.57), Vec2::new(0.5, 0.5), Vec2::new(0.3333, 0.7)];
        for (x, v) in pts.iter().zip(t.interpolate_cells(&p, &pts).unwrap()) {
            assert_relative_eq!(v, 2.0 - 3.0 * x[0] + 0.5 * x[1], epsilon = 1e-12);
        }
        assert!(t.interpolate_cells(&p, &[Vec2::new(0.01, 0.5)]).is_err());
    }

    #[test]
    fn partition_of_unity_and_first_moment() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let h = 1.0 / 16.0;
        for _ in 0..1000 {
            let s = 20.0 + rng.random_range(0.0..1.0);
            for k in KERNELS {
                let w = k.weights(s, 64, h, false).unwrap();
                let sum: f64 = w.iter().map(|e| e.1).sum();
                assert!((sum - 1.0).abs() < 1e-12, "{k:?}");
                if k != (DeltaKernel::Cosine { radius: 0.1 }) {
                    let m1: f64 = w.iter().map(|(i, v)| (*i as f64 - s) * v).sum();
                    assert!(m1.abs() < 1e-12, "{k:?} first moment {m1}");
                }
            }
        }
    }

    #[test]
    fn single_point_force_is_conserved() {
        let g = grid16();
        let h = g.h();
        for k in KERNELS {
            let pts = InteractionPoints::new(vec![Vec2::new(0.431, 0.577)], vec![1.0]);
            let f = spread(&pts, &[Vec2::new(1.0, 0.0)], k, g).unwrap();
            let s = f.component_sums();
            assert!((s[0] * h * h - 1.0).abs() < 1e-13 && s[1].abs() < 1e-13);
        }
    }

    #[test]
    fn opposite_coincident_forces_cancel() {
        let g = grid16();
        let x = Vec2::new(0.3, 0.6);
        let pts = InteractionPoints::new(vec![x, x], vec![0.5, 0.5]);
        let f = spread(&pts, &[Vec2::new(2.0, -1.0), Vec2::new(-2.0, 1.0)], DeltaKernel::Ib4, g).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        let z = spread(&pts, &[Vec2::zeros(), Vec2::zeros()], DeltaKernel::Ib4, g).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn interpolation_reproduces_constants_and_linears() {
        let g = grid16();
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let pts: Vec<Vec2> = (0..50).map(|_| Vec2::new(rng.random_range(0.2..0.8), rng.random_range(0.2..0.8))).collect();
        let pts = InteractionPoints::new(pts, vec![1.0; 50]);
        let u = FaceVectorField::from_fn(g, |_| [3.0, -1.0]);
        for k in KERNELS {
            for v in interpolate(&u, &pts, k).unwrap() {
                assert_relative_eq!(v, Vec2::new(3.0, -1.0), epsilon = 1e-12);
            }
        }
        let lin = FaceVectorField::from_fn(g, |x| [2.0 * x[0] - x[1], 0.5 * x[0] + x[1]]);
        for (v, x) in interpolate(&lin, &pts, DeltaKernel::Ib4).unwrap().iter().zip(&pts.positions) {
            assert_relative_eq!(*v, Vec2::new(2.0 * x[0] - x[1], 0.5 * x[0] + x[1]), epsilon = 1e-12);
        }
    }

    #[test]
    fn spread_and_interpolate_are_adjoint() {
        let g = grid16();
        let h = g.h();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for k in KERNELS {
            let n = 50;
            let pos = (0..n).map(|_| Vec2::new(rng.random_range(0.2..0.8), rng.random_range(0.2..0.8))).collect();
            let w = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let pts = InteractionPoints::new(pos, w);
            let forces: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let mut u = FaceVectorField::zeros(g);
            u.x.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
            u.y.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
            let f = spread(&pts, &forces, k, g).unwrap();
            let lhs = f.dot(&u) * h * h;
            let ui = interpolate(&u, &pts, k).unwrap();
            let rhs: f64 = forces.iter().zip(&ui).zip(&pts.weights).map(|((f, u), w)| f.dot(u) * w).sum();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()), "{k:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn support_outside_grid_is_an_error() {
        let g = grid16();
        let pts = InteractionPoints::new(vec![Vec2::new(0.01, 0.5)], vec![1.0]);
        assert!(matches!(spread(&pts, &[Vec2::new(1.0, 0.0)], DeltaKernel::Ib4, g), Err(Error::PointOutOfDomain { .. })));
    }

    #[test]
    fn periodic_translation_by_one_cell() {
        let g = grid16();
        let h = g.h();
        let t = Transfer::periodic(g, DeltaKernel::Ib4);
        let x = Vec2::new(0.93, 0.04);
        let f0 = t.spread(&InteractionPoints::new(vec![x], vec![1.0]), &[Vec2::new(1.0, 2.0)]).unwrap();
        let f1 = t.spread(&InteractionPoints::new(vec![x + Vec2::new(h, 0.0)], vec![1.0]), &[Vec2::new(1.0, 2.0)]).unwrap();
        for c in 0..2 {
            for j in 0..16 {
                for i in 0..16 {
                    let a = f0.comp(c).get(i, j);
                    let b = f1.comp(c).get((i + 1) % 16, j);
                    assert!((a - b).abs() < 1e-12, "comp {c} at ({i},{j}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn nodal_projection_recovers_q1_fields() {
        let m = annulus([0.5, 0.5], 0.2, 0.3, 24, 2).unwrap();
        let space = FemSpace::new(&m).unwrap();
        let quad = ElementQuadrature::new(&m, 4).unwrap();
        let nodal: Vec<Vec2> = m.reference.iter().map(|x| Vec2::new(x[0].sin(), x[0] * x[1])).collect();
        let at_points = quad.interpolate(&m, &nodal);
        let back = project_nodal_velocity(&space, &m, &quad, &at_points).unwrap();
        for (a, b) in nodal.iter().zip(&back) {
            assert!((a - b).norm() < 1e-10);
        }
        let c = vec![Vec2::new(0.3, -0.2); quad.points.len()];
        for v in project_nodal_velocity(&space, &m, &quad, &c).unwrap() {
            assert_relative_eq!(v, Vec2::new(0.3, -0.2), epsilon = 1e-10);
        }
    }

    #[test]
    fn projection_residual_is_orthogonal_to_test_functions() {
        let m = block([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        let space = FemSpace::new(&m).unwrap();
        let quad = ElementQuadrature::new(&m, 3).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let data: Vec<Vec2> = (0..quad.points.len()).map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let g = project_nodal_velocity(&space, &m, &quad, &data).unwrap();
        let fitted = quad.interpolate(&m, &g);
        let resid: Vec<Vec2> = data.iter().zip(&fitted).map(|(d, f)| d - f).collect();
        for v in quad.test_against(&m, &resid) {
            assert!(v.norm() < 1e-10);
        }
        assert!(interaction_order(&m, 0.1) >= 7);
    }
}
