//! Uniform staggered (MAC) grid: cell-centred scalars, face-centred vectors
//! and the second-order difference operators between them.
//!
//! Every field carries one layer of ghost values around its interior. The
//! operators here only read ghosts; filling them is the job of the boundary
//! closure in [`crate::fluid_solver::boundary`]. Each operator comes in a
//! stencil-only form (`divergence`, `gradient`, `face_laplacian`) that uses
//! whatever ghosts are stored.

use crate::error::{Error, Result};

/// Geometry of a uniform grid with square cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub cells: [usize; 2],
    h: f64,
}

impl GridSpec {
    pub fn new(lower: [f64; 2], upper: [f64; 2], cells: [usize; 2]) -> Result<Self> {
        for d in 0..2 {
            if !(upper[d] > lower[d]) {
                return Err(Error::InvalidGrid(format!(
                    "upper corner must exceed lower corner on axis {d}"
                )));
            }
            if cells[d] < 4 {
                return Err(Error::InvalidGrid(format!("need at least 4 cells on axis {d}")));
            }
        }
        let hx = (upper[0] - lower[0]) / cells[0] as f64;
        let hy = (upper[1] - lower[1]) / cells[1] as f64;
        if ((hx - hy) / hx).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "cells must be square (hx = {hx}, hy = {hy})"
            )));
        }
        Ok(Self { lower, upper, cells, h: hx })
    }

    /// Unit-spaced square `[lo, hi]^2` with `n` cells per side.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new([lo, lo], [hi, hi], [n, n])
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.lower[0] + (i as f64 + 0.5) * self.h,
            self.lower[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    /// Location of x-face `(i, j)`, `i` in `0..=nx`.
    pub fn x_face(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.lower[0] + i as f64 * self.h,
            self.lower[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    /// Location of y-face `(i, j)`, `j` in `0..=ny`.
    pub fn y_face(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.lower[0] + (i as f64 + 0.5) * self.h,
            self.lower[1] + j as f64 * self.h,
        ]
    }

    /// Location of a face of the given component (0 = x-faces, 1 = y-faces).
    pub fn face(&self, comp: usize, i: usize, j: usize) -> [f64; 2] {
        if comp == 0 {
            self.x_face(i, j)
        } else {
            self.y_face(i, j)
        }
    }

    /// Interior extents `(nx, ny)` of the face component `comp`.
    pub fn face_dims(&self, comp: usize) -> [usize; 2] {
        if comp == 0 {
            [self.nx() + 1, self.ny()]
        } else {
            [self.nx(), self.ny() + 1]
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn area(&self) -> f64 {
        (self.upper[0] - self.lower[0]) * (self.upper[1] - self.lower[1])
    }
}

/// Dense 2D array with one ghost layer. Interior indices run over
/// `0..nx` x `0..ny`; ghosts sit at `-1` and `nx` (resp. `ny`).
#[derive(Clone, Debug, PartialEq)]
pub struct Padded {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl Padded {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { nx, ny, data: vec![0.0; (nx + 2) * (ny + 2)] }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    fn idx(&self, i: isize, j: isize) -> usize {
        debug_assert!(i >= -1 && i <= self.nx as isize && j >= -1 && j <= self.ny as isize);
        (i + 1) as usize + (self.nx + 2) * (j + 1) as usize
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: isize, j: isize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.at(i as isize, j as isize)
    }

    /// Interior values, row-major with `i` fastest.
    pub fn interior(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn set_interior(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                self.set(i as isize, j as isize, values[i + self.nx * j]);
            }
        }
    }

    pub fn interior_iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j, self.get(i, j))))
    }

    pub fn map_interior(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = f(i, j, self.get(i, j));
                self.set(i as isize, j as isize, v);
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.interior_iter().fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Padded) -> f64 {
        self.interior_iter().zip(other.interior_iter()).map(|(a, b)| a.2 * b.2).sum()
    }

    pub fn axpy(&mut self, a: f64, x: &Padded) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += a * x;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn clear_ghosts(&mut self) {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        for i in -1..=nx {
            self.set(i, -1, 0.0);
            self.set(i, ny, 0.0);
        }
        for j in -1..=ny {
            self.set(-1, j, 0.0);
            self.set(nx, j, 0.0);
        }
    }
}

/// Scalar stored at cell centres.
#[derive(Clone, Debug, PartialEq)]
pub struct CellScalarField {
    pub grid: GridSpec,
    pub values: Padded,
}

impl CellScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: Padded::zeros(grid.nx(), grid.ny()) }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        out.values.map_interior(|i, j, _| f(grid.cell_center(i, j)));
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values.set(i as isize, j as isize, v);
    }

    pub fn mean(&self) -> f64 {
        let n = (self.grid.nx() * self.grid.ny()) as f64;
        self.values.interior_iter().map(|(_, _, v)| v).sum::<f64>() / n
    }

    pub fn max_abs(&self) -> f64 {
        self.values.max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.values.interior_iter().all(|(_, _, v)| v.is_finite())
    }

    /// Cell inner product, unweighted.
    pub fn dot(&self, other: &Self) -> f64 {
        self.values.dot(&other.values)
    }
}

/// Vector stored component-wise on cell faces: `x` on x-faces (normal to the
/// x axis) and `y` on y-faces.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceVectorField {
    pub grid: GridSpec,
    pub x: Padded,
    pub y: Padded,
}

impl FaceVectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            x: Padded::zeros(grid.nx() + 1, grid.ny()),
            y: Padded::zeros(grid.nx(), grid.ny() + 1),
        }
    }

    /// Samples `f` at face locations, keeping the matching component.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        out.x.map_interior(|i, j, _| f(grid.x_face(i, j))[0]);
        out.y.map_interior(|i, j, _| f(grid.y_face(i, j))[1]);
        out
    }

    pub fn comp(&self, c: usize) -> &Padded {
        if c == 0 {
            &self.x
        } else {
            &self.y
        }
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut Padded {
        if c == 0 {
            &mut self.x
        } else {
            &mut self.y
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.interior_iter().chain(self.y.interior_iter()).all(|(_, _, v)| v.is_finite())
    }

    /// Face inner product over all stored faces, unweighted.
    pub fn dot(&self, other: &Self) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }

    pub fn scale(&mut self, a: f64) {
        self.x.scale(a);
        self.y.scale(a);
    }

    /// Sum of all face values of each component.
    pub fn component_sums(&self) -> [f64; 2] {
        [
            self.x.interior_iter().map(|t| t.2).sum(),
            self.y.interior_iter().map(|t| t.2).sum(),
        ]
    }
}

/// Centred divergence of a face field into cells. Reads no ghosts.
pub fn divergence(u: &FaceVectorField) -> CellScalarField {
    let g = u.grid;
    let inv_h = 1.0 / g.h();
    let mut out = CellScalarField::zeros(g);
    out.values.map_interior(|i, j, _| {
        let (i, j) = (i as isize, j as isize);
        (u.x.at(i + 1, j) - u.x.at(i, j) + u.y.at(i, j + 1) - u.y.at(i, j)) * inv_h
    });
    out
}

/// Two-point gradient of a cell field onto every face, boundary faces
/// included. Boundary faces difference against the stored ghost cells.
pub fn gradient(p: &CellScalarField) -> FaceVectorField {
    let g = p.grid;
    let inv_h = 1.0 / g.h();
    let mut out = FaceVectorField::zeros(g);
    out.x.map_interior(|i, j, _| {
        let (i, j) = (i as isize, j as isize);
        (p.values.at(i, j) - p.values.at(i - 1, j)) * inv_h
    });
    out.y.map_interior(|i, j, _| {
        let (i, j) = (i as isize, j as isize);
        (p.values.at(i, j) - p.values.at(i, j - 1)) * inv_h
    });
    out
}

fn laplacian_padded(a: &Padded, inv_h2: f64) -> Padded {
    let mut out = Padded::zeros(a.nx(), a.ny());
    out.map_interior(|i, j, _| {
        let (i, j) = (i as isize, j as isize);
        (a.at(i + 1, j) + a.at(i - 1, j) + a.at(i, j + 1) + a.at(i, j - 1) - 4.0 * a.at(i, j))
            * inv_h2
    });
    out
}

/// Five-point Laplacian of each component at its own faces, using the
/// stored ghosts for the boundary rows.
pub fn face_laplacian(u: &FaceVectorField) -> FaceVectorField {
    let inv_h2 = 1.0 / (u.grid.h() * u.grid.h());
    FaceVectorField { grid: u.grid, x: laplacian_padded(&u.x, inv_h2), y: laplacian_padded(&u.y, inv_h2) }
}

/// Five-point cell-centred Laplacian using stored ghosts.
pub fn cell_laplacian(p: &CellScalarField) -> CellScalarField {
    let inv_h2 = 1.0 / (p.grid.h() * p.grid.h());
    CellScalarField { grid: p.grid, values: laplacian_padded(&p.values, inv_h2) }
}

/// Subtracts the cell mean.
pub fn mean_zero_normalize(p: &CellScalarField) -> CellScalarField {
    let mean = p.mean();
    let mut out = p.clone();
    out.values.map_interior(|_, _, v| v - mean);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};

    fn unit(n: usize) -> GridSpec {
        GridSpec::square(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new([0.0, 0.0], [1.0, 2.0], [8, 8]).is_err());
        assert!(GridSpec::new([0.0, 0.0], [1.0, 1.0], [3, 3]).is_err());
        assert!(GridSpec::new([1.0, 0.0], [0.0, 1.0], [8, 8]).is_err());
        let g = GridSpec::new([-1.0, -1.0], [1.0, 1.0], [16, 16]).unwrap();
        assert_eq!(g.h(), 0.125);
    }

    #[test]
    fn divergence_of_constant_and_linear_fields() {
        let g = unit(16);
        let c = FaceVectorField::from_fn(g, |_| [1.0, 2.0]);
        assert_eq!(divergence(&c).max_abs(), 0.0);
        let lin = FaceVectorField::from_fn(g, |x| [x[0], -x[1]]);
        assert!(divergence(&lin).max_abs() < 1e-13);
    }

    #[test]
    fn divergence_of_quadratic_is_exact() {
        let g = unit(32);
        let u = FaceVectorField::from_fn(g, |x| [x[0] * x[0], 0.0]);
        let d = divergence(&u);
        let err = d
            .values
            .interior_iter()
            .map(|(i, j, v)| (v - 2.0 * g.cell_center(i, j)[0]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = unit(8);
        let mut p = CellScalarField::from_fn(g, |_| 3.0);
        assert_eq!(gradient(&p).x.get(3, 3), 0.0);
        p = CellScalarField::from_fn(g, |x| x[0]);
        let gp = gradient(&p);
        for j in 0..8 {
            for i in 1..8 {
                assert!((gp.x.get(i, j) - 1.0).abs() < 1e-13);
            }
        }
        for j in 1..8 {
            for i in 0..8 {
                assert!(gp.y.get(i, j).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_is_minus_adjoint_of_divergence() {
        let g = unit(8);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut p = CellScalarField::zeros(g);
        p.values.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
        let mut u = FaceVectorField::zeros(g);
        u.x.map_interior(|i, _, _| if i == 0 || i == 8 { 0.0 } else { rng.random_range(-1.0..1.0) });
        u.y.map_interior(|_, j, _| if j == 0 || j == 8 { 0.0 } else { rng.random_range(-1.0..1.0) });
        let lhs = gradient(&p).dot(&u);
        let rhs = -p.dot(&divergence(&u));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn div_grad_is_five_point_laplacian_in_the_interior() {
        let g = unit(8);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut p = CellScalarField::zeros(g);
        p.values.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
        let dg = divergence(&gradient(&p));
        let lap = cell_laplacian(&p);
        for j in 1..7 {
            for i in 1..7 {
                assert!((dg.get(i, j) - lap.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn face_laplacian_exact_for_quadratics() {
        let g = unit(16);
        let mut u = FaceVectorField::from_fn(g, |x| [x[0] * x[0] + x[1] * x[1], 0.0]);
        // fill ghosts with the exact quadratic so every stored face is interior
        let (nx, ny) = (u.x.nx() as isize, u.x.ny() as isize);
        let h = g.h();
        for j in -1..=ny {
            for i in -1..=nx {
                let x = i as f64 * h;
                let y = (j as f64 + 0.5) * h;
                u.x.set(i, j, x * x + y * y);
            }
        }
        let lap = face_laplacian(&u);
        for (_, _, v) in lap.x.interior_iter() {
            assert!((v - 4.0).abs() < 1e-10, "{v}");
        }
        let c = FaceVectorField::from_fn(g, |_| [0.0, 0.0]);
        assert_eq!(face_laplacian(&c).max_abs(), 0.0);
    }

    #[test]
    fn face_laplacian_symmetric_with_homogeneous_dirichlet_ghosts() {
        // ghosts zero: Dirichlet at the ghost nodes
        let g = unit(8);
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let mut a = FaceVectorField::zeros(g);
        let mut b = FaceVectorField::zeros(g);
        for f in [&mut a, &mut b] {
            f.x.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
            f.y.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
        }
        let l = face_laplacian(&a).dot(&b);
        let r = a.dot(&face_laplacian(&b));
        assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0));
    }

    #[test]
    fn mean_zero_examples() {
        let g = unit(4);
        let p = CellScalarField::from_fn(g, |_| 5.0);
        assert!(mean_zero_normalize(&p).max_abs() == 0.0);

        let mut q = CellScalarField::zeros(GridSpec::square(0.0, 1.0, 4).unwrap());
        let vals = [1.0, 2.0, 3.0, 6.0];
        // only four non-trivial cells on a 4x4 grid; the rest equal the mean
        q.values.map_interior(|_, _, _| 3.0);
        for (k, v) in vals.iter().enumerate() {
            q.set(k, 0, *v);
        }
        let n = mean_zero_normalize(&q);
        let expected = [-2.0, -1.0, 0.0, 3.0];
        for k in 0..4 {
            assert!((n.get(k, 0) - expected[k]).abs() < 1e-15);
        }
        let twice = mean_zero_normalize(&n);
        assert!(twice.values.interior_iter().zip(n.values.interior_iter()).all(|(a, b)| (a.2 - b.2).abs() <= 1e-15));
    }

    #[test]
    fn operators_are_linear() {
        let g = unit(8);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut f = FaceVectorField::zeros(g);
        let mut h = FaceVectorField::zeros(g);
        for fld in [&mut f, &mut h] {
            fld.x.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
            fld.y.map_interior(|_, _, _| rng.random_range(-1.0..1.0));
        }
        let (a, b) = (0.7, -1.3);
        let mut comb = f.clone();
        comb.scale(a);
        comb.axpy(b, &h);
        let lhs = divergence(&comb);
        let (df, dh) = (divergence(&f), divergence(&h));
        for (i, j, v) in lhs.values.interior_iter() {
            assert!((v - (a * df.get(i, j) + b * dh.get(i, j))).abs() < 1e-12);
        }
    }
}
