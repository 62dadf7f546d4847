//! First-passage-time distributions of continuous local martingales to
//! constant one- and two-sided boundaries through the quadratic-variation time
//! change, the inverse problem of recovering a clock (or spot variance) from a
//! target crossing distribution, and a Monte Carlo oracle for both.

// negated float comparisons are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clock;
pub mod error;
pub mod inverse;
pub mod mc;
pub mod one_sided;
pub mod roots;
pub mod specfun;
pub mod time_change;
pub mod two_sided;

pub use clock::{ClockFunction, GridClock, QuadraticVariationPath};
pub use error::{FptError, Result};
pub use one_sided::OneSidedBoundary;
pub use time_change::{Boundary, Scenario, ScenarioSet};
pub use two_sided::{SeriesControl, TwoSidedBoundary};
