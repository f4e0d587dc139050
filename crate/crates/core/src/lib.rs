pub mod converse;
pub mod dispersion;
pub mod error;
pub mod instance;
pub mod oracle;
pub mod prob;
pub mod rd;
pub mod scalar;

pub use error::{Error, Result};
pub use instance::{Budget, Model, Problem, ProblemInstance};
pub use prob::{FiniteDist, JointTable, StochKernel};
pub use scalar::Real;

pub type Dist = FiniteDist<f64>;
pub type Dist32 = FiniteDist<f32>;
pub type Kernel = StochKernel<f64>;
pub type Kernel32 = StochKernel<f32>;
pub type Joint = JointTable<f64>;
