//! Physical boundary conditions on the four sides of the box and the ghost
//! fills that realise them.
//!
//! * `NoSlip`: the normal velocity on the wall faces is prescribed (zero by
//!   default) and the tangential component is reflected so that the wall
//!   average equals the prescribed tangential velocity. Pressure gets a
//!   zero-gradient ghost.
//! * `TractionOpen`: the normal velocity on the wall faces is an unknown with
//!   a mirror ghost (zero normal derivative), the tangential velocity is held
//!   at the wall value, and the pressure ghost makes the wall average equal
//!   the imposed normal traction value.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spectral::AxisClosure;
use crate::error::{Error, Result};
use crate::mac_grid::{CellScalarField, FaceVectorField, Padded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideKind {
    NoSlip,
    TractionOpen,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Side {
    pub kind: SideKind,
    /// Imposed normal traction for `TractionOpen` sides.
    pub traction: f64,
}

impl Side {
    pub fn no_slip() -> Self {
        Self { kind: SideKind::NoSlip, traction: 0.0 }
    }

    pub fn traction_open(value: f64) -> Self {
        Self { kind: SideKind::TractionOpen, traction: value }
    }
}

/// Prescribed wall velocity as a function of position and time.
pub type WallVelocity = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

/// Sides are ordered left, right, bottom, top.
#[derive(Clone)]
pub struct BoundaryCondition {
    pub sides: [Side; 4],
    pub wall_velocity: Option<WallVelocity>,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCondition")
            .field("sides", &self.sides)
            .field("wall_velocity", &self.wall_velocity.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const BOTTOM: usize = 2;
pub const TOP: usize = 3;

impl BoundaryCondition {
    pub fn no_slip() -> Self {
        Self { sides: [Side::no_slip(); 4], wall_velocity: None }
    }

    pub fn traction_open(value: f64) -> Self {
        Self { sides: [Side::traction_open(value); 4], wall_velocity: None }
    }

    pub fn with_wall_velocity(mut self, w: WallVelocity) -> Self {
        self.wall_velocity = Some(w);
        self
    }

    pub fn side(&self, axis: usize, high: bool) -> Side {
        self.sides[2 * axis + high as usize]
    }

    /// Boundary kind shared by both sides of `axis`.
    pub fn axis_kind(&self, axis: usize) -> Result<SideKind> {
        let (lo, hi) = (self.side(axis, false).kind, self.side(axis, true).kind);
        if lo != hi {
            return Err(Error::Config(format!(
                "both sides of axis {axis} must use the same boundary kind"
            )));
        }
        Ok(lo)
    }

    pub fn validate(&self) -> Result<()> {
        self.axis_kind(0)?;
        self.axis_kind(1)?;
        Ok(())
    }

    pub fn all_no_slip(&self) -> bool {
        self.sides.iter().all(|s| s.kind == SideKind::NoSlip)
    }

    fn wall_value(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        match &self.wall_velocity {
            Some(w) => w(x, t),
            None => [0.0, 0.0],
        }
    }

    /// Closures of velocity component `c` along (x, y).
    pub fn velocity_closures(&self, c: usize) -> Result<[AxisClosure; 2]> {
        let normal = match self.axis_kind(c)? {
            SideKind::NoSlip => AxisClosure::NodeDirichlet,
            SideKind::TractionOpen => AxisClosure::NodeNeumann,
        };
        let mut out = [AxisClosure::CellDirichlet; 2];
        out[c] = normal;
        Ok(out)
    }

    /// Closures of the cell-centred pressure along (x, y).
    pub fn pressure_closures(&self) -> Result<[AxisClosure; 2]> {
        let mut out = [AxisClosure::CellNeumann; 2];
        for (a, o) in out.iter_mut().enumerate() {
            if self.axis_kind(a)? == SideKind::TractionOpen {
                *o = AxisClosure::CellDirichlet;
            }
        }
        Ok(out)
    }

    /// Whether the stored face `(i, j)` of component `c` is an unknown of the
    /// momentum solve (as opposed to prescribed wall data).
    pub fn is_unknown_face(&self, c: usize, n_cells: usize, i: usize, j: usize) -> bool {
        let k = if c == 0 { i } else { j };
        if k == 0 || k == n_cells {
            self.side(c, k != 0).kind == SideKind::TractionOpen
        } else {
            true
        }
    }
}

#[inline]
fn ij(c: usize, normal: isize, tangential: isize) -> (isize, isize) {
    if c == 0 {
        (normal, tangential)
    } else {
        (tangential, normal)
    }
}

fn fill_component(u: &mut Padded, c: usize, grid: &crate::mac_grid::GridSpec, bc: &BoundaryCondition, t: f64) {
    let h = grid.h();
    let t_axis = 1 - c;
    let n = grid.cells[c] as isize;
    let m = grid.cells[t_axis] as isize;
    let at = |a: &Padded, nn: isize, tt: isize| {
        let (i, j) = ij(c, nn, tt);
        a.at(i, j)
    };
    let pos = |nn: f64, tt: f64| {
        let mut x = [0.0; 2];
        x[c] = grid.lower[c] + nn * h;
        x[t_axis] = grid.lower[t_axis] + (tt + 0.5) * h;
        x
    };
    // normal direction: wall faces and the ghost beyond them
    for tt in 0..m {
        for (high, wall, inner, ghost) in [(false, 0, 1, -1), (true, n, n - 1, n + 1)] {
            let side = bc.side(c, high);
            match side.kind {
                SideKind::NoSlip => {
                    let g = bc.wall_value(pos(wall as f64, tt as f64), t)[c];
                    let (i, j) = ij(c, wall, tt);
                    u.set(i, j, g);
                    let v = 2.0 * g - at(u, inner, tt);
                    let (i, j) = ij(c, ghost, tt);
                    u.set(i, j, v);
                }
                SideKind::TractionOpen => {
                    let v = at(u, inner, tt);
                    let (i, j) = ij(c, ghost, tt);
                    u.set(i, j, v);
                }
            }
        }
    }
    // tangential direction: reflection about the wall to the wall velocity
    for nn in -1..=n + 1 {
        for (high, inner, ghost) in [(false, 0, -1), (true, m - 1, m)] {
            let wall_t = if high { m as f64 - 0.5 } else { -0.5 };
            let g = bc.wall_value(pos(nn as f64, wall_t), t)[c];
            let v = 2.0 * g - at(u, nn, inner);
            let (i, j) = ij(c, nn, ghost);
            u.set(i, j, v);
        }
    }
}

/// Sets ghost values (and prescribed wall faces) of `u` at time `t`.
pub fn fill_velocity_ghosts(u: &mut FaceVectorField, bc: &BoundaryCondition, t: f64) {
    let grid = u.grid;
    fill_component(&mut u.x, 0, &grid, bc, t);
    fill_component(&mut u.y, 1, &grid, bc, t);
}

/// Sets pressure ghosts. With `homogeneous`, imposed traction values are
/// treated as zero.
pub fn fill_pressure_ghosts(p: &mut CellScalarField, bc: &BoundaryCondition, homogeneous: bool) {
    let (nx, ny) = (p.grid.nx() as isize, p.grid.ny() as isize);
    let v = &mut p.values;
    let rule = |side: Side, inner: f64| match side.kind {
        SideKind::NoSlip => inner,
        SideKind::TractionOpen => {
            let g = if homogeneous { 0.0 } else { side.traction };
            2.0 * g - inner
        }
    };
    for j in 0..ny {
        let l = rule(bc.sides[LEFT], v.at(0, j));
        v.set(-1, j, l);
        let r = rule(bc.sides[RIGHT], v.at(nx - 1, j));
        v.set(nx, j, r);
    }
    for i in -1..=nx {
        let b = rule(bc.sides[BOTTOM], v.at(i, 0));
        v.set(i, -1, b);
        let t = rule(bc.sides[TOP], v.at(i, ny - 1));
        v.set(i, ny, t);
    }
}

/// Ghost-filled copy of the state: every stored value a stencil may read is
/// consistent with the boundary conditions at time `t`.
pub fn apply_boundary_conditions(
    u: &FaceVectorField,
    pi: &CellScalarField,
    bc: &BoundaryCondition,
    t: f64,
) -> (FaceVectorField, CellScalarField) {
    let mut u = u.clone();
    let mut pi = pi.clone();
    fill_velocity_ghosts(&mut u, bc, t);
    fill_pressure_ghosts(&mut pi, bc, false);
    (u, pi)
}
