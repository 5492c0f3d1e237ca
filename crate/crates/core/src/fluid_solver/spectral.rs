//! Fast diagonalisation of the five-point Laplacian on the unknown sets the
//! boundary closures produce. Each axis uses one of four real trigonometric
//! transforms, and a 2D solve is a tensor product of the two axes.

use std::sync::Arc;

use rustdct::{Dct1, DctPlanner, Dst1, TransformType2And3};

/// How the unknowns along one axis close at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisClosure {
    /// Nodes at both ends held fixed; `n - 1` interior unknowns (DST-I).
    NodeDirichlet,
    /// Nodes at both ends free with a mirror ghost; `n + 1` unknowns (DCT-I).
    NodeNeumann,
    /// Cell-centred unknowns, odd reflection about the wall; `n` unknowns (DST-II).
    CellDirichlet,
    /// Cell-centred unknowns, even reflection about the wall; `n` unknowns (DCT-II).
    CellNeumann,
}

impl AxisClosure {
    /// Number of unknowns on an axis of `n` cells.
    pub fn len(self, n: usize) -> usize {
        match self {
            AxisClosure::NodeDirichlet => n - 1,
            AxisClosure::NodeNeumann => n + 1,
            AxisClosure::CellDirichlet | AxisClosure::CellNeumann => n,
        }
    }

    /// Storage index of the first unknown.
    pub fn first(self) -> usize {
        match self {
            AxisClosure::NodeDirichlet => 1,
            _ => 0,
        }
    }

    /// Eigenvalues of the 1D second difference `(a[i-1] - 2a[i] + a[i+1])/h^2`
    /// in transform order.
    pub fn eigenvalues(self, n: usize, h: f64) -> Vec<f64> {
        let nf = n as f64;
        let s = |theta: f64| -4.0 / (h * h) * (0.5 * theta).sin().powi(2);
        let m = self.len(n);
        (0..m)
            .map(|k| {
                let k = k as f64;
                match self {
                    AxisClosure::NodeDirichlet | AxisClosure::CellDirichlet => {
                        s(std::f64::consts::PI * (k + 1.0) / nf)
                    }
                    AxisClosure::NodeNeumann | AxisClosure::CellNeumann => {
                        s(std::f64::consts::PI * k / nf)
                    }
                }
            })
            .collect()
    }
}

#[derive(Clone)]
enum Plan {
    Dst1(Arc<dyn Dst1<f64>>),
    Dct1(Arc<dyn Dct1<f64>>),
    Type23 { forward: Arc<dyn TransformType2And3<f64>>, inverse: Arc<dyn TransformType2And3<f64>>, sine: bool },
}

/// Forward and inverse transform for one axis. `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct AxisTransform {
    closure: AxisClosure,
    len: usize,
    plan: Plan,
    inv_scale: f64,
    scratch_len: usize,
}

impl std::fmt::Debug for AxisTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AxisTransform").field("closure", &self.closure).field("len", &self.len).finish()
    }
}

impl AxisTransform {
    pub fn new(planner: &mut DctPlanner<f64>, closure: AxisClosure, n: usize) -> Self {
        let len = closure.len(n);
        let (plan, inv_scale, scratch_len) = match closure {
            AxisClosure::NodeDirichlet => {
                let p = planner.plan_dst1(len);
                let s = p.get_scratch_len();
                (Plan::Dst1(p), 2.0 / (len as f64 + 1.0), s)
            }
            AxisClosure::NodeNeumann => {
                let p = planner.plan_dct1(len);
                let s = p.get_scratch_len();
                (Plan::Dct1(p), 2.0 / (len as f64 - 1.0), s)
            }
            AxisClosure::CellDirichlet => {
                let f = planner.plan_dst2(len);
                let i = planner.plan_dst3(len);
                let s = f.get_scratch_len().max(i.get_scratch_len());
                (Plan::Type23 { forward: f, inverse: i, sine: true }, 2.0 / len as f64, s)
            }
            AxisClosure::CellNeumann => {
                let f = planner.plan_dct2(len);
                let i = planner.plan_dct3(len);
                let s = f.get_scratch_len().max(i.get_scratch_len());
                (Plan::Type23 { forward: f, inverse: i, sine: false }, 2.0 / len as f64, s)
            }
        };
        Self { closure, len, plan, inv_scale, scratch_len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn closure(&self) -> AxisClosure {
        self.closure
    }

    pub fn forward(&self, buf: &mut [f64], scratch: &mut Vec<f64>) {
        // the FFT-backed type-1 transforms read scratch entries they never write
        scratch.clear();
        scratch.resize(self.scratch_len, 0.0);
        match &self.plan {
            Plan::Dst1(p) => p.process_dst1_with_scratch(buf, scratch),
            Plan::Dct1(p) => p.process_dct1_with_scratch(buf, scratch),
            Plan::Type23 { forward, sine: true, .. } => forward.process_dst2_with_scratch(buf, scratch),
            Plan::Type23 { forward, sine: false, .. } => forward.process_dct2_with_scratch(buf, scratch),
        }
    }

    pub fn inverse(&self, buf: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.resize(self.scratch_len, 0.0);
        match &self.plan {
            Plan::Dst1(p) => p.process_dst1_with_scratch(buf, scratch),
            Plan::Dct1(p) => p.process_dct1_with_scratch(buf, scratch),
            Plan::Type23 { inverse, sine: true, .. } => inverse.process_dst3_with_scratch(buf, scratch),
            Plan::Type23 { inverse, sine: false, .. } => inverse.process_dct3_with_scratch(buf, scratch),
        }
        let s = self.inv_scale;
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

/// Solver for `(alpha - beta * L) x = b` on a tensor-product unknown set,
/// with `L` the five-point Laplacian under the chosen closures.
#[derive(Clone, Debug)]
pub struct TensorSolver {
    tx: AxisTransform,
    ty: AxisTransform,
    lx: Vec<f64>,
    ly: Vec<f64>,
}

impl TensorSolver {
    pub fn new(cx: AxisClosure, cy: AxisClosure, nx: usize, ny: usize, h: f64) -> Self {
        let mut planner = DctPlanner::new();
        Self {
            tx: AxisTransform::new(&mut planner, cx, nx),
            ty: AxisTransform::new(&mut planner, cy, ny),
            lx: cx.eigenvalues(nx, h),
            ly: cy.eigenvalues(ny, h),
        }
    }

    /// Unknown counts `(mx, my)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.tx.len(), self.ty.len())
    }

    /// Storage offsets of the first unknown on each axis.
    pub fn offsets(&self) -> (usize, usize) {
        (self.tx.closure().first(), self.ty.closure().first())
    }

    /// Laplacian eigenvalue of mode `(k, l)`.
    pub fn eigenvalue(&self, k: usize, l: usize) -> f64 {
        self.lx[k] + self.ly[l]
    }

    /// Applies `f(lambda)` in the eigenbasis to `data`, stored row-major with
    /// the x index fastest. `f` receives the Laplacian eigenvalue.
    pub fn apply_spectral(&self, data: &mut [f64], f: impl Fn(f64) -> f64) {
        let (mx, my) = self.dims();
        assert_eq!(data.len(), mx * my);
        let mut scratch = Vec::new();
        for row in data.chunks_mut(mx) {
            self.tx.forward(row, &mut scratch);
        }
        let mut col = vec![0.0; my];
        for k in 0..mx {
            for l in 0..my {
                col[l] = data[k + mx * l];
            }
            self.ty.forward(&mut col, &mut scratch);
            for l in 0..my {
                col[l] *= f(self.lx[k] + self.ly[l]);
            }
            self.ty.inverse(&mut col, &mut scratch);
            for l in 0..my {
                data[k + mx * l] = col[l];
            }
        }
        for row in data.chunks_mut(mx) {
            self.tx.inverse(row, &mut scratch);
        }
    }

    /// Solves `(alpha - beta L) x = b` in place.
    pub fn solve(&self, data: &mut [f64], alpha: f64, beta: f64) {
        self.apply_spectral(data, |lam| {
            let d = alpha - beta * lam;
            if d.abs() < 1e-300 {
                0.0
            } else {
                1.0 / d
            }
        });
    }
}
