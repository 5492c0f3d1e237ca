//! Small sparse linear algebra toolkit: CSR matrices, preconditioned CG,
//! ILU(0) and restarted GMRES.

use crate::error::{Error, Result};

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Accumulates entries, then compresses. Duplicate entries are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, rows: vec![Vec::new(); n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i].push((j, v));
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n: self.n, row_ptr, cols, vals }
    }
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn add_to_diagonal(&mut self, i: usize, v: f64) {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        let k = r.binary_search(&i).expect("diagonal entry must be stored");
        self.vals[self.row_ptr[i] + k] += v;
    }

    /// `a * self + b * other`; both must share the sparsity pattern.
    pub fn combine(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!(self.cols, other.cols);
        let vals = self.vals.iter().zip(&other.vals).map(|(x, y)| a * x + b * y).collect();
        CsrMatrix { n: self.n, row_ptr: self.row_ptr.clone(), cols: self.cols.clone(), vals }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.cols[k]] += self.vals[k];
            }
        }
        d
    }
}

/// Preconditioned conjugate gradients for an operator given as a closure.
/// `project`, when present, is applied to residuals and preconditioned
/// residuals to remove a known null space.
#[allow(clippy::too_many_arguments)]
pub fn pcg(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    precond: &mut dyn FnMut(&[f64], &mut [f64]),
    project: Option<&dyn Fn(&mut [f64])>,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    name: &'static str,
) -> Result<SolveStats> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut rhs = b.to_vec();
    if let Some(p) = project {
        p(&mut rhs);
    }
    let bnorm = norm2(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = rhs[i] - ap[i];
    }
    if let Some(p) = project {
        p(&mut r);
    }
    let mut rel = norm2(&r) / bnorm;
    if rel <= rel_tol {
        return Ok(SolveStats { iterations: 0, residual: rel });
    }
    precond(&r, &mut z);
    if let Some(p) = project {
        p(&mut z);
    }
    let mut p_dir = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        apply(&p_dir, &mut ap);
        let pap = dot(&p_dir, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::SolverDiverged { solver: name, iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p_dir[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(p) = project {
            p(&mut r);
        }
        rel = norm2(&r) / bnorm;
        if rel <= rel_tol {
            return Ok(SolveStats { iterations: it, residual: rel });
        }
        precond(&r, &mut z);
        if let Some(p) = project {
            p(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p_dir[i] = z[i] + beta * p_dir[i];
        }
    }
    Err(Error::SolverDiverged { solver: name, iterations: max_iter, residual: rel })
}

/// CG with a Jacobi preconditioner on a sparse SPD matrix.
pub fn cg_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
    name: &'static str,
) -> Result<SolveStats> {
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    pcg(
        &mut |v, out| a.matvec(v, out),
        &mut |r, z| {
            for i in 0..r.len() {
                z[i] = inv_diag[i] * r[i];
            }
        },
        None,
        b,
        x,
        rel_tol,
        max_iter,
        name,
    )
}

/// Incomplete LU factorisation with the sparsity pattern of `A`.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[k] == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::SolverDiverged { solver: "ilu0", iterations: 0, residual: f64::NAN });
            }
        }
        // position lookup for row i, reused per row
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                pos[lu.cols[k]] = k;
            }
            for kk in start..end {
                let k = lu.cols[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag_pos[k]];
                let factor = lu.vals[kk] / pivot;
                lu.vals[kk] = factor;
                for m in diag_pos[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[m];
                    let p = pos[j];
                    if p != usize::MAX {
                        lu.vals[p] -= factor * lu.vals[m];
                    }
                }
            }
            for k in start..end {
                pos[lu.cols[k]] = usize::MAX;
            }
            if lu.vals[diag_pos[i]] == 0.0 {
                return Err(Error::SolverDiverged { solver: "ilu0", iterations: 0, residual: f64::NAN });
            }
        }
        Ok(Self { lu, diag_pos })
    }

    /// Solves `L U z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        let n = lu.n;
        for i in 0..n {
            let mut s = r[i];
            for k in lu.row_ptr[i]..self.diag_pos[i] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = s / lu.vals[self.diag_pos[i]];
        }
    }
}

/// Restarted GMRES with left preconditioning. Convergence is measured on the
/// preconditioned residual relative to the preconditioned right-hand side.
pub fn gmres(
    a: &CsrMatrix,
    precond: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    rel_tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let mut pb = vec![0.0; n];
    precond.apply(b, &mut pb);
    let bnorm = norm2(&pb);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let mut total = 0;
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut rel;
    loop {
        a.matvec(x, &mut tmp);
        for i in 0..n {
            tmp[i] = b[i] - tmp[i];
        }
        let mut r = vec![0.0; n];
        precond.apply(&tmp, &mut r);
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= rel_tol {
            return Ok(SolveStats { iterations: total, residual: rel });
        }
        if total >= max_iter {
            return Err(Error::SolverDiverged { solver: "gmres", iterations: total, residual: rel });
        }
        let m = restart;
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|x| x / beta).collect());
        let mut hmat = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            a.matvec(&v[k], &mut tmp);
            precond.apply(&tmp, &mut w);
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(&w, vj);
                hmat[j][k] = hj;
                for i in 0..n {
                    w[i] -= hj * vj[i];
                }
            }
            let hn = norm2(&w);
            hmat[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hmat[j][k] + sn[j] * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let denom = (hmat[k][k] * hmat[k][k] + hmat[k + 1][k] * hmat[k + 1][k]).sqrt();
            cs[k] = hmat[k][k] / denom;
            sn[k] = hmat[k + 1][k] / denom;
            hmat[k][k] = denom;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= rel_tol || total >= max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hmat[i][j] * y[j];
            }
            y[i] = s / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * v[j][i];
            }
        }
        if !rel.is_finite() {
            return Err(Error::SolverDiverged { solver: "gmres", iterations: total, residual: rel });
        }
    }
}
