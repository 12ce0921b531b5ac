//! Measurements of a single aggregate.

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use crate::growth::Aggregate;
use crate::lattice::Site;

/// Deviation of an aggregate from the rectangle `R_{n/2}` inside the strip
/// `Z_K`, with `n/2` rounded down.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShapeDeviation {
    pub n: u32,
    pub k: u32,
    /// Largest `n/2 - |x|` over vacant strip sites with `|x| <= n/2`.
    pub delta_in: i64,
    /// Largest `|x| - n/2` over occupied strip sites, at least 0.
    pub delta_out: i64,
}

impl ShapeDeviation {
    pub fn max(&self) -> i64 {
        self.delta_in.max(self.delta_out)
    }
}

pub fn shape_deviation(agg: &Aggregate, n: u32, k: u32) -> ShapeDeviation {
    let half = (n / 2) as i64;
    let k = k as i32;
    let delta_out = agg
        .sites()
        .iter()
        .filter(|s| s.y.abs() <= k)
        .map(|s| s.x.unsigned_abs() as i64 - half)
        .max()
        .unwrap_or(0)
        .max(0);
    let mut delta_in = 0;
    for y in -k..=k {
        // Scanning outward from the axis, the first vacancy on each side is
        // the one that matters.
        for sign in [1i64, -1] {
            if let Some(d) = (0..=half).find(|&d| !agg.contains(Site::new((sign * d) as i32, y))) {
                delta_in = delta_in.max(half - d);
            }
        }
    }
    ShapeDeviation {
        n,
        k: k as u32,
        delta_in,
        delta_out,
    }
}

/// Levels of `[lo, hi]` whose row holds no site.
pub fn empty_levels(agg: &Aggregate, lo: i32, hi: i32) -> Vec<i32> {
    agg.row_widths(lo, hi)
        .into_iter()
        .zip(lo..=hi)
        .filter(|(w, _)| *w == 0)
        .map(|(_, y)| y)
        .collect()
}

/// Number of 4-connected components of the sites with `lo <= y <= hi`.
pub fn components_in_rows(agg: &Aggregate, lo: i32, hi: i32) -> usize {
    let sites: FxHashSet<Site> = agg
        .sites()
        .iter()
        .copied()
        .filter(|s| s.y >= lo && s.y <= hi)
        .collect();
    let mut seen: FxHashSet<Site> = FxHashSet::default();
    let mut count = 0;
    for &s in &sites {
        if !seen.insert(s) {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([s]);
        while let Some(z) = queue.pop_front() {
            for w in z.neighbors() {
                if sites.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

pub fn avoids(agg: &Aggregate, pattern: &[Site]) -> bool {
    pattern.iter().all(|&s| !agg.contains(s))
}

pub fn covers(agg: &Aggregate, pattern: &[Site]) -> bool {
    pattern.iter().all(|&s| agg.contains(s))
}
