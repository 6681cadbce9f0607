//! Estimators built on trajectories and renewal blocks.

mod clt;
mod degree;
mod lil;
mod speed;
mod tail;
mod variance;

pub use clt::{clt_samples, CltSample};
pub use degree::{degree_histogram, degree_target, DegreeHistogram, DegreeRow};
pub use lil::{lil_max, lil_statistic};
pub use speed::{
    speed_curve, speed_renewal, speed_trajectory, SpeedCurveRow, SpeedEstimate, SpeedMethod,
};
pub use tail::{kaplan_meier, tail_survival, StretchedExpFit, TailFit, TauSample};
pub use variance::{select_sigma, variance_estimators, SigmaCandidate, SigmaChoice, VariancePair};
