//! Closed-form reference solutions and numerical jump verifiers.

use crate::{Mat2, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Thin ring held at equilibrium by its own curvilinear stress.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticRingParams {
    pub r: f64,
    pub w: f64,
    pub mu_e: f64,
    pub center: [f64; 2],
    /// Area of the fluid domain, used to fix the additive constant so the
    /// pressure has zero mean. The ring must lie inside the domain.
    pub domain_area: f64,
}

impl Default for StaticRingParams {
    fn default() -> Self {
        Self { r: 0.25, w: 0.0625, mu_e: 1.0, center: [0.5, 0.5], domain_area: 1.0 }
    }
}

impl StaticRingParams {
    /// Constant that makes the pressure mean-zero over the domain.
    pub fn p0(&self) -> f64 {
        let (r, w, mu) = (self.r, self.w, self.mu_e);
        let a = r + w;
        let inner = mu * (1.0 / r - 1.0 / a) * PI * r * r;
        let shell_const = mu / w * (r / a) * PI * (a * a - r * r);
        let shell_linear = mu / (w * r) * 2.0 * PI * (a.powi(3) / 6.0 - a * r * r / 2.0 + r.powi(3) / 3.0);
        -(inner + shell_const + shell_linear) / self.domain_area
    }

    /// Radial normal Cauchy stress of the elastic ring at radius `rad`.
    pub fn radial_stress(&self, rad: f64) -> f64 {
        self.mu_e / self.w * self.r / rad
    }
}

/// Exact pressure of the static ring at distance `rad` from its centre.
///
/// Inside the hole the pressure is `p0 + mu_e (1/R - 1/(R+w))`; in the
/// solid it decreases linearly,
/// `p0 + (mu_e/w)((R + w - r)/R + R/(R + w))`; outside it is `p0`.
pub fn static_ring_pressure(rad: f64, params: &StaticRingParams) -> f64 {
    let (r, w, mu) = (params.r, params.w, params.mu_e);
    let p0 = params.p0();
    if rad < r {
        p0 + mu * (1.0 / r - 1.0 / (r + w))
    } else if rad <= r + w {
        p0 + mu / w * ((r + w - rad) / r + r / (r + w))
    } else {
        p0
    }
}

/// Ring inflated by adding fluid area `a_add` inside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflatingRingParams {
    pub r_in: f64,
    pub r_out: f64,
    pub mu_e: f64,
    pub a_add: f64,
}

impl Default for InflatingRingParams {
    fn default() -> Self {
        Self { r_in: 0.25, r_out: 0.3125, mu_e: 1.0e4, a_add: 0.05 }
    }
}

/// Exact inflated state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InflatingRingSolution {
    /// Deformed radius of the queried reference radius.
    pub r: f64,
    pub r_in: f64,
    pub r_out: f64,
    /// Constant pressure in the fluid enclosed by the ring.
    pub inner_pressure: f64,
}

impl InflatingRingParams {
    /// Area-preserving radial map `r(R) = sqrt(R^2 + A/pi)`.
    pub fn deformed_radius(&self, big_r: f64) -> f64 {
        (big_r * big_r + self.a_add / PI).sqrt()
    }

    pub fn inner_pressure(&self) -> f64 {
        let (ri, ro) = (self.deformed_radius(self.r_in), self.deformed_radius(self.r_out));
        self.mu_e * self.a_add / (2.0 * PI) * (1.0 / (ri * ri) - 1.0 / (ro * ro))
    }

    /// Pressure at current radius `r`.
    pub fn pressure(&self, r: f64) -> f64 {
        let (ri, ro) = (self.deformed_radius(self.r_in), self.deformed_radius(self.r_out));
        let c = self.mu_e * self.a_add / (2.0 * PI);
        if r < ri {
            self.inner_pressure()
        } else if r <= ro {
            -c * (1.0 / (r * r) + 1.0 / (ro * ro))
        } else {
            0.0
        }
    }

    /// Polar Cauchy stress `diag(-mu_e A / (pi r^2), 0)` in the solid.
    pub fn polar_stress(&self, r: f64) -> Mat2 {
        Mat2::new(-self.mu_e * self.a_add / (PI * r * r), 0.0, 0.0, 0.0)
    }
}

pub fn inflating_ring_solution(big_r: f64, params: &InflatingRingParams) -> InflatingRingSolution {
    InflatingRingSolution {
        r: params.deformed_radius(big_r),
        r_in: params.deformed_radius(params.r_in),
        r_out: params.deformed_radius(params.r_out),
        inner_pressure: params.inner_pressure(),
    }
}

/// Pressure jump `-n . sigma n` across an interface with unit normal `n`.
pub fn pressure_jump(sigma: &Mat2, n: Vec2) -> f64 {
    -n.dot(&(sigma * n))
}

/// Point on an interface with its unit normal and tangent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceProbe {
    pub point: Vec2,
    pub normal: Vec2,
    pub tangent: Vec2,
}

impl InterfaceProbe {
    pub fn new(point: Vec2, normal: Vec2) -> Self {
        let n = normal.normalize();
        Self { point, normal: n, tangent: Vec2::new(-n[1], n[0]) }
    }
}

/// Jumps (outside minus inside along the normal) of velocity derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEstimates {
    /// Jump of the tangential derivative `(grad u) t`.
    pub tangential: Vec2,
    /// Jump of `n . (grad u) n`.
    pub normal_normal: f64,
    /// Jump of the full normal derivative `(grad u) n`.
    pub normal_derivative: Vec2,
}

/// One-sided derivative estimates at offsets `4 h, 2 h, h` on each side,
/// extrapolated to the interface by quadratic Richardson extrapolation.
/// Central differences use a step of `h/2` so that every sample stays on
/// its side.
pub fn verify_tangential_continuity(u: impl Fn(Vec2) -> Vec2, probe: &InterfaceProbe, h_fd: f64) -> JumpEstimates {
    let (n, t) = (probe.normal, probe.tangent);
    let d = 0.5 * h_fd;
    let derivs = |x: Vec2| {
        let dt = (u(x + t * d) - u(x - t * d)) / (2.0 * d);
        let dn = (u(x + n * d) - u(x - n * d)) / (2.0 * d);
        (dt, dn)
    };
    let side = |s: f64| {
        let at = |k: f64| derivs(probe.point + n * (s * k * h_fd));
        let (t1, n1) = at(1.0);
        let (t2, n2) = at(2.0);
        let (t4, n4) = at(4.0);
        let ex = |a: Vec2, b: Vec2, c: Vec2| (a * 8.0 - b * 6.0 + c) / 3.0;
        (ex(t1, t2, t4), ex(n1, n2, n4))
    };
    let (tp, np) = side(1.0);
    let (tm, nm) = side(-1.0);
    let dn = np - nm;
    JumpEstimates { tangential: tp - tm, normal_normal: n.dot(&dn), normal_derivative: dn }
}
