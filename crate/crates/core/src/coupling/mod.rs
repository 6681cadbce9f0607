//! Couplings: maximal (total variation) coupling of leaf laws, the grand coupling
//! of every Bernoulli walk, and the monotone Q-vs-κ coupling.

mod grand;
mod interval;
mod monotone;
mod tv;

pub use grand::{
    coalescence_probability, extract_instance, extract_path, grand_run, vertex_count_formula,
    vertex_count_monotonicity, Ball, CoalescenceStats, ExtractedPath, GrandEvent, GrandRun,
    GrandState, NewNode,
};
pub use interval::{cmp_real, Interval, IntervalSet, Token};
pub use monotone::{monotone_pair_run, MonotonePair, Visibility};
pub use tv::{max_couple, tv_coupled_run, tv_distance, CoupledPair, MaximalCoupling};
