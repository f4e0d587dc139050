mod checks;
mod joint;
mod pipeline;
mod report;
mod tilted;

pub use checks::{iid_counterpart_report, iota_split_check, mi_identity_check, IidCounterpart, MiIdentity};
pub use joint::{induced_joint, Atom, InducedJoint};
pub use report::{dispersion_report, DispersionReport, VBetTerms, VInTerms, ZERO_DISPERSION};
pub use tilted::{tilted_information, tilted_information_at, TiltedTable};
pub use pipeline::{analyze_at, PointAnalysis};
