//! Unit-root analysis for autoregressive operator polynomials on finite
//! truncations of a Hilbert space.
//!
//! Given `x_t = A°_1 x_{t-1} + … + A°_k x_{t-k} + ε_t`, the crate decides
//! whether `z = 1` is an eigenvalue of finite type, computes the integration
//! order `d`, the chains `ζ_h`, `τ_h`, the attractor and cointegrating spaces,
//! the polynomial cointegrating relations and the Laurent expansion of
//! `A(z)^{-1}` around `z = 1`. A simulator produces sample paths both from the
//! AR recursion and from the common-trends representation.
//!
//! ```
//! use hcoint::{fixtures, model::RootPolicy, report::analyze};
//!
//! let report = analyze(&fixtures::i2_band(0.5), &Default::default()).unwrap();
//! assert_eq!(report.d, Some(2));
//! assert_eq!(report.tau_dims, vec![4, 1, 1]);
//! # let _ = RootPolicy::default();
//! ```

pub mod decomp;
mod error;
pub mod fixtures;
pub mod laurent;
pub mod linalg;
pub mod model;
pub mod report;
pub mod roots;
pub mod simulate;
pub mod yield_curve;

pub use error::{Error, Result};
pub use linalg::{Mat, RankPolicy, Subspace};
pub use model::{ArModel, TaylorPencil};

pub use nalgebra::Complex;
pub type CMat = nalgebra::DMatrix<Complex<f64>>;
