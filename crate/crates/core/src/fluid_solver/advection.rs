//! Conservative advection term `div(u u)` at velocity faces.

use serde::{Deserialize, Serialize};

use crate::mac_grid::{FaceVectorField, Padded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdvectionScheme {
    /// Second-order centred fluxes.
    #[default]
    Centered,
    /// First-order upwinded transported values.
    Upwind,
    /// Stokes flow: no advection term.
    Off,
}

#[inline]
fn transported(scheme: AdvectionScheme, carrier: f64, minus: f64, plus: f64) -> f64 {
    match scheme {
        AdvectionScheme::Upwind => {
            if carrier >= 0.0 {
                minus
            } else {
                plus
            }
        }
        _ => 0.5 * (minus + plus),
    }
}

/// Flux divergence for one component. `a` is the advected component (on its
/// own faces) and `b` the other component, both with filled ghosts. `c`
/// selects the orientation.
fn component(a: &Padded, b: &Padded, c: usize, h: f64, scheme: AdvectionScheme) -> Padded {
    let mut out = Padded::zeros(a.nx(), a.ny());
    // index helpers in (normal, tangential) order for component c
    let ga = |n: isize, t: isize| if c == 0 { a.at(n, t) } else { a.at(t, n) };
    let gb = |t: isize, n: isize| if c == 0 { b.at(n, t) } else { b.at(t, n) };
    let (nn, nt) = if c == 0 { (a.nx(), a.ny()) } else { (a.ny(), a.nx()) };
    let inv_h = 1.0 / h;
    for t in 0..nt as isize {
        for n in 0..nn as isize {
            // normal flux at the two adjacent cell centres
            let cr = 0.5 * (ga(n, t) + ga(n + 1, t));
            let cl = 0.5 * (ga(n - 1, t) + ga(n, t));
            let fr = cr * transported(scheme, cr, ga(n, t), ga(n + 1, t));
            let fl = cl * transported(scheme, cl, ga(n - 1, t), ga(n, t));
            // tangential flux at the two adjacent corners, carried by the
            // other component averaged along the normal direction
            let vt = 0.5 * (gb(t + 1, n - 1) + gb(t + 1, n));
            let vb = 0.5 * (gb(t, n - 1) + gb(t, n));
            let ft = vt * transported(scheme, vt, ga(n, t), ga(n, t + 1));
            let fb = vb * transported(scheme, vb, ga(n, t - 1), ga(n, t));
            let v = ((fr - fl) + (ft - fb)) * inv_h;
            if c == 0 {
                out.set(n, t, v);
            } else {
                out.set(t, n, v);
            }
        }
    }
    out
}

/// `N(u) = div(u u)` at every stored face. Ghosts of `u` must be filled.
pub fn advection(u: &FaceVectorField, scheme: AdvectionScheme) -> FaceVectorField {
    let h = u.grid.h();
    if scheme == AdvectionScheme::Off {
        return FaceVectorField::zeros(u.grid);
    }
    FaceVectorField {
        grid: u.grid,
        x: component(&u.x, &u.y, 0, h, scheme),
        y: component(&u.y, &u.x, 1, h, scheme),
    }
}
