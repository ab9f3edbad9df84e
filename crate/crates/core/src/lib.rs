//! Hydrodynamic (polar) formulation of the Dirac equation.
//!
//! The crate computes spinor bilinears, performs the polar decomposition of
//! Dirac spinors into module, chiral angle, velocity and spin, extracts the
//! gauge and spacetime tensorial connections from spinor derivatives, and
//! mechanically verifies that the first-order Dirac systems and their
//! Madelung re-arrangements (continuity + curl + Hamilton-Jacobi/guidance
//! equations) are equivalent in 1+1, 1+2 and 1+3 dimensions. It also carries
//! the associated conservation laws, a non-relativistic Schrodinger
//! reference, and a Bohmian trajectory integrator for the derived guidance
//! equation.
//!
//! All numerical kernels are generic over the scalar type through
//! [`scalar::Real`]; `f64` aliases for the main types live at the crate root.

pub mod clifford;
pub mod connections;
pub mod conservation;
pub mod dual;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod lorentz;
pub mod madelung;
pub mod report;
pub mod scalar;
pub mod schrodinger;
pub mod spinor;

pub use error::{PolarError, Result};
pub use report::ResidualReport;

/// `f64` instantiations of the core types.
pub type CliffordBasis64 = clifford::CliffordBasis<f64>;
// TEMP-ALIASES-BELOW
pub type Spinor64 = spinor::Spinor<f64>;
pub type BilinearSet64 = spinor::BilinearSet<f64>;
pub type PolarVariables64 = spinor::PolarVariables<f64>;
pub type SpinorTransform64 = spinor::SpinorTransform<f64>;
pub type FieldSample64 = connections::FieldSample<f64>;
pub type ConnectionData64 = connections::ConnectionData<f64>;
pub type PolarPointState64 = madelung::PolarPointState<f64>;
pub type AnalyticField64 = fields::AnalyticField<f64>;
pub type EMField64 = conservation::EMField<f64>;
