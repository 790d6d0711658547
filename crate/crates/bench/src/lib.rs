//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use splitlab_core::{parse_set, FiniteRelSys, IntervalPartition, OmegaSet};

/// The test family used by the transform benchmarks.
pub fn family() -> Vec<(String, OmegaSet)> {
    ["omega", "evens", "prog(1,3)", "osc(2)", "alt(prog(0,5))"]
        .iter()
        .map(|s| {
            (
                s.to_string(),
                parse_set(s, None).expect("family member parses"),
            )
        })
        .collect()
}

pub fn minimal(intervals: usize) -> Arc<IntervalPartition> {
    Arc::new(IntervalPartition::minimal(intervals))
}

/// `x_i` relates to `y_j` when `j` is `i` or `i + 1` modulo `n`.
pub fn cycle_cover(n: usize) -> FiniteRelSys {
    let rel = (0..n)
        .map(|i| (0..n).map(|j| j == i || j == (i + 1) % n).collect())
        .collect();
    FiniteRelSys::from_matrix(rel).expect("cycle cover is a valid system")
}
