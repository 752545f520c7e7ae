//! Minimal null control times, canonical boundary forms and characteristic
//! solvers for one-dimensional linear hyperbolic systems on `(0, 1)`.

pub mod control;
pub mod counterexample;
pub mod error;
pub mod field;
pub mod lcu;
pub mod matrix;
pub mod mintime;
pub mod quadrature;
pub mod scalar;
pub mod simulator;
pub mod speeds;
pub mod transform;

pub use control::{
    feedback_law, least_squares_control, synthesize_null_control, verify_null_control, FeedbackLaw,
    LeastSquaresOptions,
};
pub use error::{Error, Result};
pub use field::MatrixField;
pub use lcu::{canonical_form, CanonicalForm, Pivot};
pub use matrix::Matrix;
pub use mintime::{time_report, TimeReport};
pub use scalar::{Field, Rational, Real};
pub use simulator::{simulate, BoundaryInput, ControlSignal, SimOptions, SystemSpec, Trajectory};
pub use speeds::SpeedProfile;

pub type SpeedProfile64 = SpeedProfile<f64>;
pub type SpeedProfile32 = SpeedProfile<f32>;
pub type MatrixQ = Matrix<Rational>;
pub type Matrix64 = Matrix<f64>;
pub type CanonicalFormQ = CanonicalForm<Rational>;
pub type CanonicalForm64 = CanonicalForm<f64>;
