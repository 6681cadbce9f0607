use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::tree::{NodeId, RootedTree};

/// Limiting degree law `4 / (d (d+1) (d+2))`.
pub fn degree_target(d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let d = d as f64;
    4.0 / (d * (d + 1.0) * (d + 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub d: usize,
    pub count: usize,
    pub empirical: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub nodes: usize,
    /// Rows for `d = 1..=max degree`.
    pub rows: Vec<DegreeRow>,
}

impl DegreeHistogram {
    pub fn fraction(&self, d: usize) -> f64 {
        self.rows
            .iter()
            .find(|r| r.d == d)
            .map(|r| r.empirical)
            .unwrap_or(0.0)
    }

    /// Pool several histograms into one (counts add).
    pub fn merge(histograms: &[DegreeHistogram]) -> DegreeHistogram {
        let max_d = histograms
            .iter()
            .flat_map(|h| h.rows.iter().map(|r| r.d))
            .max()
            .unwrap_or(0);
        let mut counts = alloc::vec![0usize; max_d + 1];
        for h in histograms {
            for r in &h.rows {
                counts[r.d] += r.count;
            }
        }
        from_counts(&counts)
    }
}

fn from_counts(counts: &[usize]) -> DegreeHistogram {
    let nodes: usize = counts.iter().sum();
    let rows = counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(d, &count)| {
            let empirical = count as f64 / nodes as f64;
            let target = degree_target(d);
            DegreeRow {
                d,
                count,
                empirical,
                target,
                deviation: empirical - target,
            }
        })
        .collect();
    DegreeHistogram { nodes, rows }
}

pub fn degree_histogram(tree: &RootedTree) -> DegreeHistogram {
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..tree.len() {
        let d = tree.degree(NodeId(i as u32));
        if counts.len() <= d {
            counts.resize(d + 1, 0);
        }
        counts[d] += 1;
    }
    from_counts(&counts)
}
