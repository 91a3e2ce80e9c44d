//! Differential-privacy verification for pWHILE programs: exact and sampled
//! semantics over finite-support subdistributions, graded relational
//! liftings, mechanism certificates, an apRHL proof checker and a statistical
//! auditor.

pub mod aprhl;
pub mod audit;
pub mod grade;
pub mod lifting;
pub mod measure;
pub mod mechanisms;
pub mod num;
pub mod semantics;
pub mod syntax;
pub mod value;

pub use grade::{grade_comp, grade_leq, grade_seq, Grade};
pub use measure::{MeasureError, SubDist};
pub use value::{Memory, Value};
