//! Error norms, convergence-rate fits and solid-mesh diagnostics.

use crate::error::{Error, Result};
use crate::fluid_solver::cosine_bump_shape;
use crate::mac_grid::{CellScalarField, FaceVectorField, GridSpec};
use crate::solid_fem::quadrature::gauss_square;
use crate::solid_fem::shape;
use crate::solid_fem::SolidMesh;
use serde::Serialize;
use std::collections::BTreeMap;

/// Fitted rates below this value are reported as non-convergence.
pub const NON_CONVERGENCE_RATE: f64 = 0.2;

/// Discrete L1, L2 and max norms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl Norms {
    pub fn get(&self, norm: NormKind) -> f64 {
        match norm {
            NormKind::L1 => self.l1,
            NormKind::L2 => self.l2,
            NormKind::Linf => self.linf,
        }
    }

    /// Componentwise maximum of two norm triples.
    pub fn max(self, other: Norms) -> Norms {
        Norms { l1: self.l1.max(other.l1), l2: self.l2.max(other.l2), linf: self.linf.max(other.linf) }
    }

    /// Norms of a list of values, each weighted by `area`.
    pub fn from_values(values: impl Iterator<Item = f64>, area: f64) -> Norms {
        let mut n = Norms::default();
        for v in values {
            n.l1 += v.abs() * area;
            n.l2 += v * v * area;
            n.linf = n.linf.max(v.abs());
        }
        n.l2 = n.l2.sqrt();
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L1, NormKind::L2, NormKind::Linf];

    pub fn label(&self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::Linf => "Linf",
        }
    }
}

/// Error norms of one field at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub scenario: String,
    pub method: String,
    pub field: String,
    pub n: usize,
    pub norms: Norms,
}

/// Norms of `approx - exact` at cell centres. When `mean_zero` is set both
/// fields are shifted to zero mean first.
pub fn cell_error_norms(approx: &CellScalarField, exact: impl Fn([f64; 2]) -> f64, mean_zero: bool) -> Norms {
    let g = approx.grid;
    let ex = CellScalarField::from_fn(g, exact);
    let (ma, me) = if mean_zero { (approx.mean(), ex.mean()) } else { (0.0, 0.0) };
    let vals = approx
        .values
        .interior_iter()
        .map(|(i, j, v)| (v - ma) - (ex.get(i, j) - me));
    Norms::from_values(vals, g.cell_area())
}

/// Norms of `approx - exact` at face centres, taken per component and
/// combined by the componentwise maximum.
pub fn face_error_norms(approx: &FaceVectorField, exact: impl Fn([f64; 2]) -> [f64; 2]) -> Norms {
    let g = approx.grid;
    let mut out = Norms::default();
    for c in 0..2 {
        let vals = approx.comp(c).interior_iter().map(|(i, j, v)| v - exact(g.face(c, i, j))[c]);
        out = out.max(Norms::from_values(vals, g.cell_area()));
    }
    out
}

/// Least-squares convergence rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `-log(error)` against `log(N)`.
    pub rate: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// Rates between consecutive resolutions.
    pub pairwise: Vec<f64>,
    pub points: Vec<(usize, f64)>,
}

impl RateFit {
    pub fn converges(&self) -> bool {
        self.rate >= NON_CONVERGENCE_RATE
    }
}

pub fn fit_rate(points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::Config("a rate fit needs at least two resolutions".into()));
    }
    if let Some(&(_, e)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::NonPositiveError { value: e });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n).sqrt();
    let pairwise = points
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 as f64 / w[0].0 as f64).ln())
        .collect();
    Ok(RateFit { rate: -slope, residual, pairwise, points: points.to_vec() })
}

/// Element-mean Jacobians of the current configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianStats {
    pub min: f64,
    pub max: f64,
    pub max_deviation: f64,
    pub inverted: usize,
    pub per_element: Vec<f64>,
}

/// Element means of `J = det F` by 2x2 Gauss quadrature. Inverted points
/// are counted rather than raised.
pub fn jacobian_diagnostic(mesh: &SolidMesh) -> JacobianStats {
    let rule = gauss_square(2);
    let mut per_element = Vec::with_capacity(mesh.num_elements());
    let mut inverted = 0;
    for e in 0..mesh.num_elements() {
        let xr = mesh.element_reference(e);
        let xc = mesh.element_current(e);
        let (mut jsum, mut area) = (0.0, 0.0);
        let mut bad = false;
        for &(xi, w) in &rule {
            let dref = shape::jacobian(&xr, xi).determinant();
            let dcur = shape::jacobian(&xc, xi).determinant();
            let j = dcur / dref;
            bad |= j <= 0.0;
            jsum += j * w * dref;
            area += w * dref;
        }
        if bad {
            inverted += 1;
        }
        per_element.push(jsum / area);
    }
    let min = per_element.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = per_element.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_deviation = per_element.iter().map(|j| (j - 1.0).abs()).fold(0.0, f64::max);
    JacobianStats { min, max, max_deviation, inverted, per_element }
}

/// `h^2 sum p K` with `K` the tensor-product cosine bump of the given
/// radius, renormalised so that `h^2 sum K = 1`.
pub fn kernel_sample(p: &CellScalarField, center: [f64; 2], radius: f64) -> Result<f64> {
    let g = p.grid;
    let inside = (0..2).all(|d| center[d] - radius >= g.lower[d] && center[d] + radius <= g.upper[d]);
    if !inside || radius <= 0.0 {
        return Err(Error::PointOutOfDomain { x: center[0], y: center[1] });
    }
    let k = cosine_bump_shape(g, center, radius);
    Ok(g.cell_area() * p.dot(&k))
}

/// Restriction of a cell field from `2N` to `N` cells per side: each coarse
/// value is the mean of its four children, which is the bilinear
/// interpolant at the coarse centre.
pub fn restrict_cells(fine: &CellScalarField, coarse: GridSpec) -> Result<CellScalarField> {
    check_nested(fine.grid, coarse)?;
    let mut out = CellScalarField::zeros(coarse);
    for j in 0..coarse.ny() {
        for i in 0..coarse.nx() {
            let v = fine.get(2 * i, 2 * j) + fine.get(2 * i + 1, 2 * j) + fine.get(2 * i, 2 * j + 1) + fine.get(2 * i + 1, 2 * j + 1);
            out.set(i, j, 0.25 * v);
        }
    }
    Ok(out)
}

/// Restriction of face data: a coarse face coincides with the line through
/// two fine faces and takes their mean.
pub fn restrict_faces(fine: &FaceVectorField, coarse: GridSpec) -> Result<FaceVectorField> {
    check_nested(fine.grid, coarse)?;
    let mut out = FaceVectorField::zeros(coarse);
    for c in 0..2 {
        let [nx, ny] = coarse.face_dims(c);
        let src = fine.comp(c);
        let dst = out.comp_mut(c);
        for j in 0..ny {
            for i in 0..nx {
                let v = if c == 0 {
                    0.5 * (src.get(2 * i, 2 * j) + src.get(2 * i, 2 * j + 1))
                } else {
                    0.5 * (src.get(2 * i, 2 * j) + src.get(2 * i + 1, 2 * j))
                };
                dst.set(i as isize, j as isize, v);
            }
        }
    }
    Ok(out)
}

/// One-sided estimate of the pressure jump across a circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialJump {
    /// Extrapolated limit from inside the circle.
    pub inside: f64,
    /// Extrapolated limit from outside.
    pub outside: f64,
    /// `outside - inside`.
    pub jump: f64,
}

/// Jump of `p` across the circle `|x - center| = radius`. On each side the
/// cells whose centres lie `2h` and `3h` from the circle (to within `h/2`)
/// are averaged, and the two averages are extrapolated linearly to the
/// circle. Cut cells and their neighbours are never used.
pub fn radial_jump(p: &CellScalarField, center: [f64; 2], radius: f64) -> Result<RadialJump> {
    let h = p.grid.h();
    let mut sums = [[0.0; 2]; 2];
    let mut counts = [[0usize; 2]; 2];
    for j in 0..p.grid.ny() {
        for i in 0..p.grid.nx() {
            let x = p.grid.cell_center(i, j);
            let d = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() - radius;
            let k = (d.abs() / h).round();
            if k == 2.0 || k == 3.0 {
                let (side, band) = (usize::from(d > 0.0), k as usize - 2);
                sums[side][band] += p.get(i, j);
                counts[side][band] += 1;
            }
        }
    }
    if counts.iter().flatten().any(|&c| c == 0) {
        return Err(Error::InvalidGrid("circle too close to the grid edge for a one-sided jump".into()));
    }
    let limit = |s: usize| {
        let a2 = sums[s][0] / counts[s][0] as f64;
        let a3 = sums[s][1] / counts[s][1] as f64;
        3.0 * a2 - 2.0 * a3
    };
    let (inside, outside) = (limit(0), limit(1));
    Ok(RadialJump { inside, outside, jump: outside - inside })
}

/// For every node of `coarse`, the node of `fine` at the same reference
/// position. Fails unless the coarse nodes are a subset of the fine ones.
pub fn nested_node_map(coarse: &SolidMesh, fine: &SolidMesh) -> Result<Vec<usize>> {
    let extent = fine.reference.iter().fold(0.0_f64, |m, x| m.max(x.abs().max()));
    let scale = 1e9 / extent.max(f64::MIN_POSITIVE);
    let key = |x: &crate::Vec2| ((x[0] * scale).round() as i64, (x[1] * scale).round() as i64);
    let index: BTreeMap<(i64, i64), usize> = fine.reference.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
    coarse
        .reference
        .iter()
        .map(|x| index.get(&key(x)).copied())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::InvalidGrid("solid meshes are not nested".into()))
}

/// Lumped nodal weights: a quarter of each adjacent element's reference
/// area.
pub fn lumped_node_weights(mesh: &SolidMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_nodes()];
    for (e, nodes) in mesh.elements.iter().enumerate() {
        let x = mesh.element_reference(e);
        let twice: f64 = (0..4).map(|k| x[k][0] * x[(k + 1) % 4][1] - x[(k + 1) % 4][0] * x[k][1]).sum();
        for &n in nodes {
            w[n] += 0.125 * twice.abs();
        }
    }
    w
}

/// Norms of `coarse - fine` over the coarse nodes, with fine values taken
/// at the coincident nodes given by `map`.
pub fn nodal_difference_norms(weights: &[f64], coarse: &[f64], fine: &[f64], map: &[usize]) -> Norms {
    let mut n = Norms::default();
    for ((&w, &c), &k) in weights.iter().zip(coarse).zip(map) {
        let d = c - fine[k];
        n.l1 += w * d.abs();
        n.l2 += w * d * d;
        n.linf = n.linf.max(d.abs());
    }
    n.l2 = n.l2.sqrt();
    n
}

fn check_nested(fine: GridSpec, coarse: GridSpec) -> Result<()> {
    if fine.nx() != 2 * coarse.nx() || fine.ny() != 2 * coarse.ny() || fine.lower != coarse.lower || fine.upper != coarse.upper {
        return Err(Error::InvalidGrid("restriction needs grids nested by a factor of two".into()));
    }
    Ok(())
}

/// Difference norms of two cell fields on the same grid.
pub fn cell_difference_norms(a: &CellScalarField, b: &CellScalarField, mean_zero: bool) -> Norms {
    let (ma, mb) = if mean_zero { (a.mean(), b.mean()) } else { (0.0, 0.0) };
    let vals = a.values.interior_iter().map(|(i, j, v)| (v - ma) - (b.get(i, j) - mb));
    Norms::from_values(vals, a.grid.cell_area())
}

pub fn face_difference_norms(a: &FaceVectorField, b: &FaceVectorField) -> Norms {
    let mut out = Norms::default();
    for c in 0..2 {
        let other = b.comp(c);
        let vals = a.comp(c).interior_iter().map(|(i, j, v)| v - other.get(i, j));
        out = out.max(Norms::from_values(vals, a.grid.cell_area()));
    }
    out
}

/// CSV header for error and rate rows.
pub const RATE_CSV_HEADER: &str = "scenario,method,field,norm,N,error,rate";

/// One row per norm. `rate` is the pairwise rate from the previous
/// resolution when known.
pub fn csv_rows(report: &ErrorReport, rates: Option<[f64; 3]>) -> Vec<String> {
    NormKind::ALL
        .iter()
        .enumerate()
        .map(|(k, norm)| {
            let rate = rates.map(|r| format!("{:.6}", r[k])).unwrap_or_default();
            format!(
                "{},{},{},{},{},{:.16e},{}",
                report.scenario,
                report.method,
                report.field,
                norm.label(),
                report.n,
                report.norms.get(*norm),
                rate
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solid_fem::mesh::{annulus, block};
    use crate::Vec2;
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};

    fn unit(n: usize) -> GridSpec {
        GridSpec::square(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn norm_examples() {
        let g = unit(8);
        let a = CellScalarField::from_fn(g, |_| 2.5);
        let n = cell_error_norms(&a, |_| 0.0, false);
        assert_relative_eq!(n.l1, 2.5, epsilon = 1e-14);
        assert_relative_eq!(n.l2, 2.5, epsilon = 1e-14);
        assert_eq!(n.linf, 2.5);
        let mut one = CellScalarField::zeros(g);
        one.set(3, 5, -4.0);
        let n = cell_error_norms(&one, |_| 0.0, false);
        assert_relative_eq!(n.l1, 4.0 / 64.0);
        assert_eq!(n.linf, 4.0);
        let f = |x: [f64; 2]| x[0].sin() * x[1];
        let exact = CellScalarField::from_fn(g, f);
        assert_eq!(cell_error_norms(&exact, f, true), Norms::default());
        let u = FaceVectorField::from_fn(g, |x| [x[0], -x[1]]);
        assert_eq!(face_error_norms(&u, |x| [x[0], -x[1]]).linf, 0.0);
    }

    #[test]
    fn norm_ordering_on_unit_square() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let g = unit(16);
            let mut a = CellScalarField::zeros(g);
            a.values.map_interior(|_, _, _| rng.random_range(-3.0..3.0));
            let n = cell_error_norms(&a, |_| 0.0, false);
            assert!(n.l1 <= n.l2 + 1e-14 && n.l2 <= n.linf + 1e-14);
        }
    }

    #[test]
    fn rate_examples() {
        let pts: Vec<(usize, f64)> = [32usize, 64, 128].iter().map(|&n| (n, 3.0 / (n * n) as f64)).collect();
        assert!((fit_rate(&pts).unwrap().rate - 2.0).abs() < 1e-12);
        let halving = [(16, 1.0), (32, 0.5), (64, 0.25)];
        assert!((fit_rate(&halving).unwrap().rate - 1.0).abs() < 1e-12);
        let flat = fit_rate(&[(16, 0.1), (32, 0.1), (64, 0.1)]).unwrap();
        assert!(flat.rate.abs() < 1e-12 && !flat.converges());
        assert!(matches!(fit_rate(&[(16, 0.1), (32, 0.0)]), Err(Error::NonPositiveError { .. })));
        assert!(fit_rate(&[(16, 0.1)]).is_err());
        let scaled: Vec<(usize, f64)> = pts.iter().map(|p| (p.0, 1e3 * p.1)).collect();
        assert!((fit_rate(&scaled).unwrap().rate - fit_rate(&pts).unwrap().rate).abs() < 1e-12);
        assert_eq!(fit_rate(&pts).unwrap().pairwise.len(), 2);
    }

    #[test]
    fn jacobian_examples() {
        let mut m = block([0.0, 0.0], [1.0, 1.0], 3, 3).unwrap();
        let s = jacobian_diagnostic(&m);
        assert!(s.per_element.iter().all(|j| (j - 1.0).abs() < 1e-14));
        m.set_current_from(|x| 2.0 * x);
        let s = jacobian_diagnostic(&m);
        assert!(s.per_element.iter().all(|j| (j - 4.0).abs() < 1e-13));
        m.current[5] = Vec2::new(10.0, 10.0);
        assert!(jacobian_diagnostic(&m).inverted > 0);
    }

    fn inflated_deviation(n_theta: usize, n_r: usize) -> f64 {
        let a_add: f64 = 0.05;
        let mut m = annulus([0.0, 0.0], 0.25, 0.3125, n_theta, n_r).unwrap();
        m.set_current_from(|x| {
            let r = x.norm();
            x * ((r * r + a_add / std::f64::consts::PI).sqrt() / r)
        });
        jacobian_diagnostic(&m).max_deviation
    }

    #[test]
    fn exact_inflation_is_nearly_incompressible() {
        // a quad spanning two rays keeps its area when r^2 shifts uniformly
        for (a, b) in [(32, 2), (64, 4), (128, 8)] {
            assert!(inflated_deviation(a, b) < 1e-12);
        }
    }

    #[test]
    fn kernel_sample_examples() {
        let g = GridSpec::square(-1.0, 1.0, 64).unwrap();
        let c = CellScalarField::from_fn(g, |_| 7.0);
        assert_relative_eq!(kernel_sample(&c, [0.0, 0.0], 0.1).unwrap(), 7.0, epsilon = 1e-12);
        let lin = CellScalarField::from_fn(g, |x| 1.0 + 2.0 * x[0] - x[1]);
        let v = kernel_sample(&lin, [0.1, 0.2], 0.1).unwrap();
        assert!((v - (1.0 + 0.2 - 0.2)).abs() < 1e-3);
        // reflection symmetry about the kernel centre
        let f = |x: [f64; 2]| (3.0 * x[0]).sin() + x[1] * x[1];
        let a = CellScalarField::from_fn(g, f);
        let b = CellScalarField::from_fn(g, |x| f([-x[0], -x[1]]));
        assert_relative_eq!(kernel_sample(&a, [0.0, 0.0], 0.1).unwrap(), kernel_sample(&b, [0.0, 0.0], 0.1).unwrap(), epsilon = 1e-12);
        assert!(kernel_sample(&c, [0.95, 0.0], 0.1).is_err());
    }

    #[test]
    fn restriction_is_exact_for_linear_fields() {
        let (fg, cg) = (unit(16), unit(8));
        let f = |x: [f64; 2]| 2.0 * x[0] - 3.0 * x[1] + 1.0;
        let r = restrict_cells(&CellScalarField::from_fn(fg, f), cg).unwrap();
        assert!(cell_error_norms(&r, f, false).linf < 1e-14);
        let u = |x: [f64; 2]| [x[0] + x[1], 2.0 * x[0] - x[1]];
        let r = restrict_faces(&FaceVectorField::from_fn(fg, u), cg).unwrap();
        assert!(face_error_norms(&r, u).linf < 1e-14);
        assert!(restrict_cells(&CellScalarField::zeros(fg), unit(4)).is_err());
    }

    #[test]
    fn csv_rows_have_seven_columns() {
        let rep = ErrorReport { scenario: "s".into(), method: "m".into(), field: "p".into(), n: 32, norms: Norms { l1: 1.0, l2: 2.0, linf: 3.0 } };
        let rows = csv_rows(&rep, Some([1.0, 2.0, 3.0]));
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.split(',').count() == RATE_CSV_HEADER.split(',').count()));
    }

    #[test]
    fn nested_block_meshes_map_and_weigh_nodes() {
        let coarse = block([5.0, 10.0], [20.0, 10.0], 10, 5).unwrap();
        let fine = block([5.0, 10.0], [20.0, 10.0], 20, 10).unwrap();
        let map = nested_node_map(&coarse, &fine).unwrap();
        for (c, &f) in map.iter().enumerate() {
            assert!((coarse.reference[c] - fine.reference[f]).norm() < 1e-12);
        }
        let w = lumped_node_weights(&coarse);
        assert_relative_eq!(w.iter().sum::<f64>(), 200.0, epsilon = 1e-10);
        assert!(nested_node_map(&fine, &coarse).is_err());

        let f = |x: Vec2| 1.0 + x[0] - 2.0 * x[1];
        let fc: Vec<f64> = coarse.reference.iter().map(|x| f(*x)).collect();
        let ff: Vec<f64> = fine.reference.iter().map(|x| f(*x) + 0.5).collect();
        let n = nodal_difference_norms(&w, &fc, &ff, &map);
        assert_relative_eq!(n.l1, 100.0, epsilon = 1e-10);
        assert_relative_eq!(n.l2, 50.0_f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(n.linf, 0.5, epsilon = 1e-14);
    }


    #[test]
    fn radial_jump_recovers_piecewise_linear_jumps() {
        let g = unit(128);
        let (c, r) = ([0.5, 0.5], 0.3125);
        let p = CellScalarField::from_fn(g, |x| {
            let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
            if d < r {
                5.0 - 64.0 * (d - r)
            } else {
                -2.0 + 3.0 * (d - r)
            }
        });
        let j = radial_jump(&p, c, r).unwrap();
        assert_relative_eq!(j.inside, 5.0, epsilon = 0.05);
        assert_relative_eq!(j.outside, -2.0, epsilon = 0.01);
        assert_relative_eq!(j.jump, -7.0, epsilon = 0.05);
        assert!(radial_jump(&p, c, 0.8).is_err());
    }

}
