//! Q1 quadrilateral finite elements on the Lagrangian domain: meshes,
//! kinematics, constitutive models, surface loads and the projection of the
//! weak-form force density onto nodal values.

pub mod constitutive;
pub mod loads;
pub mod mesh;
pub mod quadrature;
pub mod shape;
pub mod space;

pub use constitutive::ConstitutiveModel;
pub use loads::{tether_and_load_forces, SurfaceLoad};
pub use mesh::{BoundaryEdge, BoundaryTag, SolidMesh};
pub use shape::{deformation_gradient, Kinematics};
pub use space::{internal_force_density, ElementQuadrature, FemSpace, MassKind, QuadPoint};
