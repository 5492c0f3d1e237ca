//! First Piola-Kirchhoff stress models.

use super::shape::Kinematics;
use crate::error::{Error, Result};
use crate::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

/// Elastic response of the solid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstitutiveModel {
    /// `P = (mu_e / w) F`, with `F` taken with respect to curvilinear
    /// ring coordinates.
    CurvilinearRing { mu_e: f64, w: f64 },
    /// Neo-Hookean response `mu_e (F_p - F_p^-T)` written in polar
    /// components about `center`, converted to Cartesian form.
    PolarNeoHookeanRing { mu_e: f64, center: [f64; 2] },
    /// Isochoric neo-Hookean with a logarithmic dilatational stabilisation
    /// controlled by the numerical Poisson ratio `nu`.
    StabilizedNeoHookeanBlock { mu_e: f64, nu: f64 },
}

impl ConstitutiveModel {
    /// A zero shear modulus is accepted so that passive tracer solids can be
    /// represented; negative values are not.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::CurvilinearRing { mu_e, w } => mu_e >= 0.0 && w > 0.0,
            Self::PolarNeoHookeanRing { mu_e, .. } => mu_e >= 0.0,
            Self::StabilizedNeoHookeanBlock { mu_e, nu } => mu_e >= 0.0 && nu < 0.5,
        };
        if ok && self.mu_e().is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid constitutive parameters {self:?}")))
        }
    }

    pub fn mu_e(&self) -> f64 {
        match *self {
            Self::CurvilinearRing { mu_e, .. }
            | Self::PolarNeoHookeanRing { mu_e, .. }
            | Self::StabilizedNeoHookeanBlock { mu_e, .. } => mu_e,
        }
    }

    /// Dilatational modulus of the block model, `2 mu_e (1 + nu) / (3 (1 - 2 nu))`.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            Self::StabilizedNeoHookeanBlock { mu_e, nu } => Some(block_lambda(mu_e, nu)),
            _ => None,
        }
    }

    pub fn first_piola_kirchhoff(&self, kin: &Kinematics) -> Mat2 {
        match *self {
            Self::CurvilinearRing { mu_e, w } => kin.f * (mu_e / w),
            Self::PolarNeoHookeanRing { mu_e, center } => {
                let c = Vec2::new(center[0], center[1]);
                let fp = polar_deformation_gradient(kin, c);
                let pp = mu_e * (fp - inverse_transpose(&fp));
                cartesian_from_polar_stress(&pp, &fp, kin, c)
            }
            Self::StabilizedNeoHookeanBlock { mu_e, nu } => {
                let f = kin.f;
                let i1 = (f.transpose() * f).trace();
                mu_e * kin.j.powf(-2.0 / 3.0) * (f - kin.finv_t * (i1 / 3.0))
                    + kin.finv_t * (block_lambda(mu_e, nu) * kin.j.ln())
            }
        }
    }
}

pub fn block_lambda(mu_e: f64, nu: f64) -> f64 {
    2.0 * mu_e * (1.0 + nu) / (3.0 * (1.0 - 2.0 * nu))
}

/// Strain energy of the block model,
/// `(mu_e/2)(J^(-2/3) I1 - 3) + (lambda/2)(log J)^2`.
pub fn block_strain_energy(mu_e: f64, nu: f64, f: &Mat2) -> f64 {
    let j = f.determinant();
    let i1 = (f.transpose() * f).trace();
    0.5 * mu_e * (j.powf(-2.0 / 3.0) * i1 - 3.0) + 0.5 * block_lambda(mu_e, nu) * j.ln().powi(2)
}

pub fn inverse_transpose(m: &Mat2) -> Mat2 {
    let det = m.determinant();
    Mat2::new(m[(1, 1)], -m[(1, 0)], -m[(0, 1)], m[(0, 0)]) / det
}

/// Rotation whose columns are the radial and angular unit vectors at `x`.
fn polar_frame(x: Vec2) -> Mat2 {
    let th = x[1].atan2(x[0]);
    let (s, c) = th.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Polar deformation gradient `(d(r, theta)/dx) F (dX/d(R, Theta))`,
/// measured about `center`.
pub fn polar_deformation_gradient(kin: &Kinematics, center: Vec2) -> Mat2 {
    let x = kin.current - center;
    let xr = kin.reference - center;
    let r = x.norm();
    let (s, c) = x[1].atan2(x[0]).sin_cos();
    let dpdx = Mat2::new(c, s, -s / r, c / r);
    let big_r = xr.norm();
    let (ss, cs) = xr[1].atan2(xr[0]).sin_cos();
    let dxdp = Mat2::new(cs, -big_r * ss, ss, big_r * cs);
    dpdx * kin.f * dxdp
}

/// Converts a polar first Piola-Kirchhoff stress to Cartesian components:
/// the polar Cauchy-like tensor `P_p F_p^T` is rotated to the Cartesian frame
/// at the current point and pulled back with `F^-T`.
pub fn cartesian_from_polar_stress(pp: &Mat2, fp: &Mat2, kin: &Kinematics, center: Vec2) -> Mat2 {
    let q = polar_frame(kin.current - center);
    q * (pp * fp.transpose()) * q.transpose() * kin.finv_t
}

/// Inverse of [`cartesian_from_polar_stress`].
pub fn polar_from_cartesian_stress(p: &Mat2, kin: &Kinematics, center: Vec2) -> Mat2 {
    let q = polar_frame(kin.current - center);
    let fp = polar_deformation_gradient(kin, center);
    q.transpose() * (p * kin.f.transpose()) * q * inverse_transpose(&fp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kin(f: Mat2, x_ref: Vec2, x_cur: Vec2) -> Kinematics {
        Kinematics::from_f(f, x_ref, x_cur, 0).unwrap()
    }

    #[test]
    fn reference_state_values() {
        let k = Kinematics::identity(Vec2::new(0.3, 0.1));
        let ring = ConstitutiveModel::CurvilinearRing { mu_e: 1.0, w: 0.0625 };
        assert_relative_eq!(ring.first_piola_kirchhoff(&k), 16.0 * Mat2::identity(), epsilon = 1e-14);
        let polar = ConstitutiveModel::PolarNeoHookeanRing { mu_e: 3.0, center: [0.0, 0.0] };
        assert!(polar.first_piola_kirchhoff(&k).norm() < 1e-13);
        for nu in [-1.0, 0.0, 0.4] {
            let b = ConstitutiveModel::StabilizedNeoHookeanBlock { mu_e: 80.194, nu };
            // the three-dimensional isochoric split leaves mu_e/3 I at F = I
            assert_relative_eq!(b.first_piola_kirchhoff(&k), 80.194 / 3.0 * Mat2::identity(), epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda_values() {
        let b = |nu| ConstitutiveModel::StabilizedNeoHookeanBlock { mu_e: 3.0, nu }.lambda().unwrap();
        assert_eq!(b(-1.0), 0.0);
        assert_relative_eq!(b(0.0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(b(0.4), 2.0 * 3.0 * 1.4 / (3.0 * 0.2), epsilon = 1e-12);
        assert!(ConstitutiveModel::StabilizedNeoHookeanBlock { mu_e: 1.0, nu: 0.5 }.validate().is_err());
        assert!(ConstitutiveModel::CurvilinearRing { mu_e: -1.0, w: 0.1 }.validate().is_err());
    }

    #[test]
    fn polar_stress_at_exact_inflation() {
        // r(R) = sqrt(R^2 + A/pi): F_p = diag(R/r, 1) and the polar Cauchy
        // stress has the single entry -mu_e A / (pi r^2)
        let (mu, a) = (1.0e4, 0.05);
        let big_r: f64 = 0.3;
        let th: f64 = 0.7;
        let r = (big_r * big_r + a / std::f64::consts::PI).sqrt();
        let er = Vec2::new(th.cos(), th.sin());
        let et = Vec2::new(-th.sin(), th.cos());
        let f = (big_r / r) * er * er.transpose() + (r / big_r) * et * et.transpose();
        let k = kin(f, big_r * er, r * er);
        let fp = polar_deformation_gradient(&k, Vec2::zeros());
        assert_relative_eq!(fp, Mat2::new(big_r / r, 0.0, 0.0, 1.0), epsilon = 1e-12);
        let model = ConstitutiveModel::PolarNeoHookeanRing { mu_e: mu, center: [0.0, 0.0] };
        let p = model.first_piola_kirchhoff(&k);
        let sigma = p * f.transpose() / k.j;
        let srr = er.dot(&(sigma * er));
        assert_relative_eq!(srr, -mu * a / (std::f64::consts::PI * r * r), max_relative = 1e-12);
        assert!(et.dot(&(sigma * et)).abs() < 1e-9);
    }

    fn random_f() -> impl Strategy<Value = Mat2> {
        (0.5f64..2.0, -0.4f64..0.4, -0.4f64..0.4, 0.6f64..1.6).prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn block_stress_is_energy_gradient(f in random_f(), nu in prop::sample::select(vec![-1.0, 0.0, 0.4])) {
            let j = f.determinant();
            prop_assume!((0.5..=2.0).contains(&j));
            let mu = 80.194;
            let p = ConstitutiveModel::StabilizedNeoHookeanBlock { mu_e: mu, nu }
                .first_piola_kirchhoff(&kin(f, Vec2::zeros(), Vec2::zeros()));
            let scale = p.norm().max(mu);
            for a in 0..2 {
                for b in 0..2 {
                    let eps = 1e-6;
                    let mut fp = f;
                    fp[(a, b)] += eps;
                    let mut fm = f;
                    fm[(a, b)] -= eps;
                    let fd = (block_strain_energy(mu, nu, &fp) - block_strain_energy(mu, nu, &fm)) / (2.0 * eps);
                    prop_assert!((fd - p[(a, b)]).abs() <= 1e-6 * scale, "{} vs {}", fd, p[(a, b)]);
                }
            }
        }

        #[test]
        fn polar_conversion_round_trip(
            f in random_f(),
            rr in 0.1f64..0.5, th_r in 0.0f64..6.28, rc in 0.1f64..0.5, th_c in 0.0f64..6.28,
        ) {
            prop_assume!(f.determinant() > 0.1);
            let c = Vec2::new(0.2, -0.1);
            let x_ref = c + rr * Vec2::new(th_r.cos(), th_r.sin());
            let x_cur = c + rc * Vec2::new(th_c.cos(), th_c.sin());
            let k = kin(f, x_ref, x_cur);
            let mu = 2.5;
            let p = ConstitutiveModel::PolarNeoHookeanRing { mu_e: mu, center: [c[0], c[1]] }.first_piola_kirchhoff(&k);
            let fp = polar_deformation_gradient(&k, c);
            let expected = mu * (fp - inverse_transpose(&fp));
            let back = polar_from_cartesian_stress(&p, &k, c);
            prop_assert!((back - expected).norm() <= 1e-12 * expected.norm().max(1.0));
        }
    }
}
