//! Directed forests on aggregates.
//!
//! Each site created by a particle that had to walk is joined to the last
//! previously occupied site that particle visited. Sites created by a particle
//! that settled at its own start are roots, so all roots lie on the vertical
//! axis.

use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::growth::{
    grow, grow_coupled_pair, Aggregate, AggregateParams, Chain, GrowthSpec, Variant,
};
use crate::lattice::{Region, Site};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub site: Site,
    pub parent: Option<Site>,
    pub birth_index: u32,
    pub source_level: i32,
    pub birth_time: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Forest {
    pub params: AggregateParams,
    nodes: Vec<Node>,
    index: FxHashMap<Site, usize>,
}

impl Forest {
    /// Builds a forest from explicit nodes; fails on duplicate sites.
    pub fn from_nodes(params: AggregateParams, nodes: Vec<Node>) -> Result<Self> {
        let mut index = FxHashMap::default();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.site, i).is_some() {
                return Err(Error::config(format!("duplicate vertex {}", node.site)));
            }
        }
        Ok(Forest {
            params,
            nodes,
            index,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index.contains_key(&s)
    }

    pub fn node(&self, s: Site) -> Option<&Node> {
        self.index.get(&s).map(|&i| &self.nodes[i])
    }

    pub fn parent(&self, s: Site) -> Option<Site> {
        self.node(s).and_then(|n| n.parent)
    }

    pub fn roots(&self) -> impl Iterator<Item = Site> + '_ {
        self.nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.site)
    }

    /// Directed edges `(child, parent)`.
    pub fn edges(&self) -> impl Iterator<Item = (Site, Site)> + '_ {
        self.nodes
            .iter()
            .filter_map(|n| n.parent.map(|p| (n.site, p)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn vertex_set(&self) -> BTreeSet<Site> {
        self.nodes.iter().map(|n| n.site).collect()
    }

    /// Parent map restricted to the vertices lying in `region`.
    pub fn restrict(&self, region: &Region) -> BTreeMap<Site, Option<Site>> {
        self.nodes
            .iter()
            .filter(|n| region.contains(n.site))
            .map(|n| (n.site, n.parent))
            .collect()
    }

    /// Checks the structural invariants of a directed forest: roots on the
    /// axis, lattice edges between vertices, no cycles, and the edge count.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for n in &self.nodes {
            match n.parent {
                None if n.site.x != 0 => return Err(format!("root {} off the axis", n.site)),
                None => {}
                Some(p) => {
                    if !p.is_adjacent(n.site) {
                        return Err(format!("edge {} -> {p} is not a lattice edge", n.site));
                    }
                    if !self.contains(p) {
                        return Err(format!("parent {p} of {} is not a vertex", n.site));
                    }
                }
            }
        }
        // Walk up from every vertex, memoizing vertices known to reach a root.
        let mut state = vec![0u8; self.nodes.len()];
        for start in 0..self.nodes.len() {
            let mut trail = Vec::new();
            let mut i = start;
            loop {
                match state[i] {
                    2 => break,
                    1 => return Err(format!("cycle through {}", self.nodes[i].site)),
                    _ => {}
                }
                state[i] = 1;
                trail.push(i);
                match self.nodes[i].parent {
                    Some(p) => i = self.index[&p],
                    None => break,
                }
            }
            for j in trail {
                state[j] = 2;
            }
        }
        let roots = self.roots().count();
        if self.edge_count() != self.len() - roots {
            return Err("edge count differs from vertices minus roots".into());
        }
        Ok(())
    }
}

fn forest_of(agg: &Aggregate) -> Forest {
    let nodes = agg
        .iter()
        .map(|(site, p)| Node {
            site,
            parent: p.predecessor,
            birth_index: p.birth_index,
            source_level: p.source_level,
            birth_time: p.birth_time,
        })
        .collect();
    Forest::from_nodes(agg.params, nodes).expect("aggregate sites are distinct")
}

/// The directed forest of a line-source run.
pub fn build_forest(run: &Aggregate) -> Result<Forest> {
    if run.params.variant == Variant::Classical {
        return Err(Error::config("use build_radial_tree for a classical run"));
    }
    Ok(forest_of(run))
}

/// The radial tree of a classical run, rooted at the origin.
pub fn build_radial_tree(run: &Aggregate) -> Result<Forest> {
    if run.params.variant != Variant::Classical {
        return Err(Error::config(format!(
            "radial tree needs a classical run, got {}",
            run.params.variant
        )));
    }
    Ok(forest_of(run))
}

/// Which forest a discrepant vertex belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDiscrepancy {
    pub site: Site,
    pub first: Option<Site>,
    pub second: Option<Site>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForestDiff {
    pub vertex_discrepancies: Vec<(Site, Side)>,
    pub edge_discrepancies: Vec<EdgeDiscrepancy>,
    pub chains: Vec<Chain>,
}

impl ForestDiff {
    pub fn is_empty(&self) -> bool {
        self.vertex_discrepancies.is_empty() && self.edge_discrepancies.is_empty()
    }

    pub fn total(&self) -> usize {
        self.vertex_discrepancies.len() + self.edge_discrepancies.len()
    }
}

/// Differences between two forests on the sites of `region`, sorted by site.
pub fn diff_forests(f1: &Forest, f2: &Forest, region: &Region) -> ForestDiff {
    let a = f1.restrict(region);
    let b = f2.restrict(region);
    let mut diff = ForestDiff::default();
    for (&site, &pa) in &a {
        match b.get(&site) {
            None => diff.vertex_discrepancies.push((site, Side::First)),
            Some(&pb) if pb != pa => diff.edge_discrepancies.push(EdgeDiscrepancy {
                site,
                first: pa,
                second: pb,
            }),
            Some(_) => {}
        }
    }
    for &site in b.keys() {
        if !a.contains_key(&site) {
            diff.vertex_discrepancies.push((site, Side::Second));
        }
    }
    diff.vertex_discrepancies.sort_by_key(|v| v.0);
    diff
}

/// Grows the truncations at `m_small` and `m_large` with shared randomness
/// and diffs their forests on `region`; the chains of the coupling are
/// attached to the diff.
pub fn diff_coupled(
    spec: &GrowthSpec,
    m_small: u32,
    m_large: u32,
    region: &Region,
) -> Result<(Forest, Forest, ForestDiff)> {
    let (small, large, log) = grow_coupled_pair(spec, m_small, m_large)?;
    let (f1, f2) = (build_forest(&small)?, build_forest(&large)?);
    let mut diff = diff_forests(&f1, &f2, region);
    diff.chains = log.chains;
    Ok((f1, f2, diff))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedStabilization {
    pub seed: u64,
    /// Smallest grid value after which the restriction never changed.
    pub m0: u32,
    /// Only the last grid value was left, so nothing was compared.
    pub inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stabilization {
    pub k: u32,
    pub grid: Vec<u32>,
    pub seeds: Vec<SeedStabilization>,
}

impl Stabilization {
    /// Fraction of seeds whose restriction settled at some grid value
    /// `<= bound` that was confirmed by at least one larger grid value.
    pub fn fraction_within(&self, bound: u32) -> f64 {
        if self.seeds.is_empty() {
            return 0.0;
        }
        let ok = self
            .seeds
            .iter()
            .filter(|s| !s.inconclusive && s.m0 <= bound)
            .count();
        ok as f64 / self.seeds.len() as f64
    }

    pub fn median_m0(&self) -> f64 {
        let v: Vec<f64> = self.seeds.iter().map(|s| s.m0 as f64).collect();
        crate::analysis::stats::median(&v)
    }
}

/// Per-seed scan of the clock-variant forest restricted to `Z_K` as the
/// truncation grows along `grid`.
pub fn stabilization_radius_seed(n: u32, k: u32, grid: &[u32], seed: u64) -> Result<SeedStabilization> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("M grid must be nonempty and increasing"));
    }
    let region = Region::Strip(k as i32);
    let mut restrictions = Vec::with_capacity(grid.len());
    for &m in grid {
        let run = grow(&GrowthSpec::new(Variant::PoissonClock, n, m, seed))?;
        restrictions.push(build_forest(&run.aggregate)?.restrict(&region));
    }
    let last = restrictions.len() - 1;
    let mut j = last;
    while j > 0 && restrictions[j - 1] == restrictions[last] {
        j -= 1;
    }
    Ok(SeedStabilization {
        seed,
        m0: grid[j],
        inconclusive: j == last,
    })
}

pub fn stabilization_radius(n: u32, k: u32, grid: &[u32], seeds: &[u64]) -> Result<Stabilization> {
    let per_seed = crate::runner::map_seeds(seeds, None, |seed| {
        stabilization_radius_seed(n, k, grid, seed)
    })?;
    Ok(Stabilization {
        k,
        grid: grid.to_vec(),
        seeds: per_seed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub sites: Vec<Site>,
}

/// Root-to-target branch and the `(max y, min y)` along it.
pub fn branch_deviation(f: &Forest, target: Site) -> Result<(Branch, (i32, i32))> {
    let mut node = f.node(target).ok_or(Error::Lookup(target))?;
    let mut sites = vec![target];
    while let Some(p) = node.parent {
        if sites.len() > f.len() {
            return Err(Error::config("parent relation has a cycle"));
        }
        sites.push(p);
        node = f.node(p).ok_or(Error::Lookup(p))?;
    }
    sites.reverse();
    let max = sites.iter().map(|s| s.y).max().unwrap();
    let min = sites.iter().map(|s| s.y).min().unwrap();
    Ok((Branch { sites }, (max, min)))
}
