//! Nilpotent Artin-Schreier theory over `K = k((t0))` modulo `p^M`: Witt
//! vector and Laurent series arithmetic, free nilpotent Lie algebras with the
//! Campbell-Hausdorff law, Artin-Hasse exponentials, the Witt pairing, the
//! weight filtration, ramification breaks and the lift recurrence.

pub mod artin_hasse;
pub mod base_arith;
pub mod lift_solver;
pub mod nilpotent_lie;
pub mod ramification;
pub mod series;
pub mod weight_filtration;
pub mod witt_pairing;

pub use artin_hasse::SElementPack;
pub use base_arith::{PrimePower, WittRing, WittVector, W};
pub use lift_solver::{HMap, LiftForm, LiftSolution};
pub use nilpotent_lie::{GeneratorId, GroupElement, LieAlgebra, LieElement, LieSeries, LieVec, SeriesRing};
pub use series::Laurent;
pub use ramification::{F0Table, HerbrandFunction, Ideal, MixedBreak, RamificationReport};
pub use weight_filtration::{DaggerForm, FiltrationContext};
pub use witt_pairing::UnitClass;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("context mismatch: {0}")]
    Mismatch(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("not a unit: {0}")]
    NotUnit(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("integrality failure: {0}")]
    Integrality(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no stabilization: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
