use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::engine::{make_initial, run_with, InitialTree, Retention, Trajectory};
use crate::error::{Error, Result};
use crate::replicas::ReplicaMap;
use crate::rng;
use crate::schedule::LeafSchedule;
use crate::stats;
use crate::stopping::Block;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMethod {
    Trajectory,
    RenewalRatio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Steps for the trajectory method, blocks for the ratio method.
    pub count: usize,
    pub method: SpeedMethod,
}

/// `D_N / N` with a batch-means standard error over `batches` batches
/// (default `⌊√N⌋`).
pub fn speed_trajectory(traj: &Trajectory, batches: Option<usize>) -> SpeedEstimate {
    let depths = traj.depths();
    let n = traj.horizon();
    let value = f64::from(depths[n]) / n as f64;
    let batches = batches
        .unwrap_or_else(|| libm::sqrt(n as f64) as usize)
        .clamp(1, n);
    let size = n / batches;
    let stderr = if batches >= 2 && size >= 1 {
        let means: Vec<f64> = (0..batches)
            .map(|b| {
                let (lo, hi) = (b * size, (b + 1) * size);
                (f64::from(depths[hi]) - f64::from(depths[lo])) / size as f64
            })
            .collect();
        stats::std_error(&means)
    } else {
        0.0
    };
    SpeedEstimate {
        value,
        stderr,
        count: n,
        method: SpeedMethod::Trajectory,
    }
}

/// `Σ Δdepth / Σ Δτ` with a delta-method standard error.
pub fn speed_renewal(blocks: &[Block]) -> Result<SpeedEstimate> {
    if blocks.len() < 2 {
        return Err(Error::InsufficientBlocks {
            needed: 2,
            have: blocks.len(),
        });
    }
    let n = blocks.len() as f64;
    let sum_tau: f64 = blocks.iter().map(|b| b.delta_tau as f64).sum();
    let sum_depth: f64 = blocks.iter().map(|b| b.delta_depth as f64).sum();
    let ratio = sum_depth / sum_tau;
    let mean_tau = sum_tau / n;
    let residuals: Vec<f64> = blocks
        .iter()
        .map(|b| b.delta_depth as f64 - ratio * b.delta_tau as f64)
        .collect();
    let var = stats::variance(&residuals).max(0.0);
    let stderr = libm::sqrt(var / n) / mean_tau;
    Ok(SpeedEstimate {
        value: ratio,
        stderr,
        count: blocks.len(),
        method: SpeedMethod::RenewalRatio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedCurveRow {
    pub p: f64,
    pub v_hat: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub horizon: u64,
}

/// Mean of `D_N / N` over `replicas` Bernoulli(p) runs for every `p` in the grid.
/// Replica `r` of grid point `i` uses seed `replica_seed(seed, i·replicas + r, "speed-curve")`.
pub fn speed_curve<M: ReplicaMap>(
    p_grid: &[f64],
    replicas: usize,
    horizon: u64,
    seed: u64,
    initial: &InitialTree,
    executor: &M,
) -> Result<Vec<SpeedCurveRow>> {
    if replicas == 0 {
        return Err(crate::error::invalid("replicas", "must be at least 1"));
    }
    let start = make_initial(initial)?;
    let mut rows = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        let schedule = LeafSchedule::bernoulli(p)?;
        let speeds = executor.map(replicas, |r| {
            let s = rng::replica_seed(seed, (i * replicas + r) as u64, "speed-curve");
            let traj =
                run_with(&start, &schedule, horizon, s, Retention::Never).expect("horizon checked");
            f64::from(traj.depths()[traj.horizon()]) / horizon as f64
        })?;
        let stderr = if replicas > 1 {
            stats::std_error(&speeds)
        } else {
            0.0
        };
        rows.push(SpeedCurveRow {
            p,
            v_hat: stats::mean(&speeds),
            stderr,
            replicas,
            horizon,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::NodeId;
    use alloc::vec;

    fn line(n: usize) -> Trajectory {
        let depths: Vec<u32> = (1..=n as u32 + 1).collect();
        let positions = (0..=n).map(|i| NodeId(i as u32)).collect();
        let mut xi = vec![1; n + 1];
        xi[0] = 0;
        Trajectory::from_parts(positions, depths, xi, vec![true; n + 1], 2).unwrap()
    }

    #[test]
    fn ratio_arithmetic() {
        let b = [
            Block {
                delta_tau: 2,
                delta_depth: 1,
            },
            Block {
                delta_tau: 4,
                delta_depth: 3,
            },
        ];
        let s = speed_renewal(&b).unwrap();
        assert!((s.value - 2.0 / 3.0).abs() < 1e-15);
        let b = [Block {
            delta_tau: 1,
            delta_depth: 1,
        }; 5];
        let s = speed_renewal(&b).unwrap();
        assert_eq!((s.value, s.stderr), (1.0, 0.0));
        assert!(speed_renewal(&b[..1]).is_err());
    }

    #[test]
    fn descending_trajectory_has_unit_speed() {
        let t = line(100);
        // D_N = N + 1 from the initial depth of 1.
        assert!((speed_trajectory(&t, None).value - 1.01).abs() < 1e-12);
        assert_eq!(speed_trajectory(&t, None).stderr, 0.0);
    }

    #[test]
    fn edge_alternation_has_speed_one_over_n() {
        let depths: Vec<u32> = (0..=100).map(|n| if n % 2 == 0 { 1 } else { 0 }).collect();
        let positions = depths.iter().map(|d| NodeId(*d)).collect();
        let t =
            Trajectory::from_parts(positions, depths, vec![0; 101], vec![true; 101], 2).unwrap();
        assert!((speed_trajectory(&t, None).value - 0.01).abs() < 1e-15);
    }

    #[test]
    fn ratio_estimator_converges_on_synthetic_blocks() {
        // Δτ uniform on {1..5}, Δdepth = 1 or 2 with equal odds: ratio 1.5 / 3.
        use rand::Rng;
        let mut r = rng::stream(3);
        let mut errs = Vec::new();
        for &n in &[400usize, 6400] {
            let mut e = 0.0;
            for _ in 0..50 {
                let blocks: Vec<Block> = (0..n)
                    .map(|_| Block {
                        delta_tau: r.random_range(1..=5),
                        delta_depth: r.random_range(1..=2),
                    })
                    .collect();
                e += (speed_renewal(&blocks).unwrap().value - 0.5).abs();
            }
            errs.push(e / 50.0);
        }
        // 16x the blocks should shrink the error by about 4x.
        assert!(errs[1] < errs[0] / 2.5, "{errs:?}");
    }
}
