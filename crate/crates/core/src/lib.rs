//! Exact influence of uniformly charged flat right-triangular panels, with a
//! quadrature oracle, a fallback-aware evaluator and a collocation solver for
//! the capacitance of a unit square plate.
//!
//! Units drop the `1/(4πε₀)` factor: a unit density on a panel produces the
//! potential `∫ dA / r`, so total charge equals capacitance over `4πε₀`.
//!
//! ```
//! use tripanel::{kernel, EvalPath, EvalPolicy, FlagCode, PanelElement, Vec3};
//!
//! let phi = kernel::potential(&kernel::KernelInputs::at(1.0, Vec3::new(0.3, 0.5, 0.2)))?;
//! assert!(phi > 0.0);
//!
//! let el = PanelElement::from_right_triangle(Vec3::ZERO, Vec3::X * 2.0, Vec3::Z)?;
//! let r = tripanel::robust::influence(&el, Vec3::ZERO, &EvalPolicy::default())?;
//! assert_eq!(r.path, EvalPath::Fallback);
//! assert_eq!(r.flags[0].code, FlagCode::CornerLimit);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod config;
pub mod csvio;
pub mod gauss;
pub mod geometry;
pub mod kernel;
pub mod lu;
pub mod oracle;
pub mod plate;
pub mod quadrature;
pub mod reference;
pub mod robust;
pub mod sweep;
pub mod timing;
pub mod vec3;

pub use geometry::{ElementFrame, GeometryError, PanelElement, TrianglePrimitive};
pub use kernel::{Influence, KernelError, KernelInputs};
pub use robust::{EvalPath, EvalPolicy, FlagCode, InfluenceResult};
pub use vec3::Vec3;
