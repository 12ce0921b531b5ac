//! Exact exit distributions and small-instance aggregate laws.
//!
//! The walk started at `s` inside a finite set `V` and stopped on leaving it
//! exits at `b` with probability `1/4 * sum g(x)` over the neighbors `x` of
//! `b` in `V`, where `g = (I - P/4)^{-1} e_s` is the Green's function row of
//! `s`. The matrix is symmetric positive definite, so `g` comes from a banded
//! Cholesky factorization with sites ordered row by row.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::lattice::Site;

/// Largest interior accepted by [`exact_exit_distribution`].
pub const MAX_INTERIOR: usize = 10_000;
/// Largest interior accepted in rational mode.
pub const MAX_RATIONAL_INTERIOR: usize = 16;
/// Largest particle count of [`exact_small_aggregate_distribution`].
pub const MAX_SMALL_PARTICLES: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ExitDistribution {
    pub start: Site,
    pub interior: BTreeSet<Site>,
    pub probabilities: BTreeMap<Site, f64>,
}

impl ExitDistribution {
    pub fn get(&self, s: Site) -> f64 {
        self.probabilities.get(&s).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.values().sum()
    }
}

/// Sites of `set` reachable from `start` through `set`.
fn component(set: &FxHashSet<Site>, start: Site) -> Vec<Site> {
    let mut seen = FxHashSet::default();
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(z) = queue.pop_front() {
        out.push(z);
        for w in z.neighbors() {
            if set.contains(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    out.sort();
    out
}

/// `I - P/4` restricted to a site list, stored as a symmetric band.
struct Banded {
    n: usize,
    bw: usize,
    // Row i holds entries (i, i - bw ..= i), diagonal last.
    a: Vec<f64>,
}

impl Banded {
    fn laplacian(sites: &[Site]) -> Self {
        let index: FxHashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut bw = 0;
        for (i, s) in sites.iter().enumerate() {
            for w in s.neighbors() {
                if let Some(&j) = index.get(&w) {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        let n = sites.len();
        let mut m = Banded {
            n,
            bw,
            a: vec![0.0; n * (bw + 1)],
        };
        for (i, s) in sites.iter().enumerate() {
            *m.at(i, i) = 1.0;
            for w in s.neighbors() {
                if let Some(&j) = index.get(&w) {
                    if j < i {
                        *m.at(i, j) = -0.25;
                    }
                }
            }
        }
        m
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (self.bw + 1) + (self.bw + j - i)]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.a[i * (self.bw + 1) + (self.bw + j - i)]
        }
    }

    fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let v = self.get(i, j);
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky `A = L L^T`; the band then holds `L`.
    fn factor(mut self) -> Result<Cholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = self.get(i, j);
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= self.get(i, k) * self.get(j, k);
                }
                if i == j {
                    if sum <= 1e-300 || !sum.is_finite() {
                        return Err(Error::Numerical(format!("non-positive pivot at row {i}")));
                    }
                    *self.at(i, i) = sum.sqrt();
                } else {
                    *self.at(i, j) = sum / self.get(j, j);
                }
            }
        }
        Ok(Cholesky { l: self })
    }
}

struct Cholesky {
    l: Banded,
}

impl Cholesky {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.l.n, self.l.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l.get(k, i) * y[k];
            }
            y[i] = s / self.l.get(i, i);
        }
        y
    }
}

/// Solves `(I - P/4) g = rhs` on `sites` (sorted row by row) with two steps
/// of iterative refinement.
fn green_solve(sites: &[Site], rhs: &[f64]) -> Result<Vec<f64>> {
    let a = Banded::laplacian(sites);
    let residual = |g: &[f64]| -> Vec<f64> {
        let ag = a.multiply(g);
        rhs.iter().zip(ag).map(|(b, v)| b - v).collect()
    };
    let chol = Banded::laplacian(sites).factor()?;
    let mut g = chol.solve(rhs);
    for _ in 0..2 {
        let d = chol.solve(&residual(&g));
        for (gi, di) in g.iter_mut().zip(d) {
            *gi += di;
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Green's function".into()));
    }
    Ok(g)
}

/// Outer boundary sites adjacent to `sites`, with the summed `g` of their
/// interior neighbors.
fn boundary_mass(sites: &[Site], g: &[f64]) -> BTreeMap<Site, f64> {
    let set: FxHashSet<Site> = sites.iter().copied().collect();
    let mut out = BTreeMap::new();
    for (s, &gs) in sites.iter().zip(g) {
        for w in s.neighbors() {
            if !set.contains(&w) {
                *out.entry(w).or_insert(0.0) += 0.25 * gs;
            }
        }
    }
    out
}

/// Exit distribution of the walk from `start` stopped on leaving `interior`.
pub fn exact_exit_distribution(interior: &[Site], start: Site) -> Result<ExitDistribution> {
    let set: FxHashSet<Site> = interior.iter().copied().collect();
    if !set.contains(&start) {
        return Err(Error::config(format!("start {start} is not in the interior")));
    }
    if set.len() > MAX_INTERIOR {
        return Err(Error::Budget(format!(
            "interior of {} sites exceeds {MAX_INTERIOR}",
            set.len()
        )));
    }
    let sites = component(&set, start);
    let rhs: Vec<f64> = sites.iter().map(|&s| if s == start { 1.0 } else { 0.0 }).collect();
    let g = green_solve(&sites, &rhs)?;
    Ok(ExitDistribution {
        start,
        interior: set.into_iter().collect(),
        probabilities: boundary_mass(&sites, &g),
    })
}

/// Rational-arithmetic exit distribution for interiors of at most
/// [`MAX_RATIONAL_INTERIOR`] sites.
pub fn exact_exit_distribution_rational(interior: &[Site], start: Site) -> Result<BTreeMap<Site, BigRational>> {
    let set: FxHashSet<Site> = interior.iter().copied().collect();
    if !set.contains(&start) {
        return Err(Error::config(format!("start {start} is not in the interior")));
    }
    if set.len() > MAX_RATIONAL_INTERIOR {
        return Err(Error::Budget(format!(
            "rational mode is limited to {MAX_RATIONAL_INTERIOR} sites"
        )));
    }
    let sites = component(&set, start);
    let n = sites.len();
    let index: FxHashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let mut m = vec![vec![BigRational::zero(); n + 1]; n];
    for (i, s) in sites.iter().enumerate() {
        m[i][i] = BigRational::one();
        for w in s.neighbors() {
            if let Some(&j) = index.get(&w) {
                m[i][j] -= &quarter;
            }
        }
        if *s == start {
            m[i][n] = BigRational::one();
        }
    }
    for c in 0..n {
        let p = (c..n)
            .find(|&r| !m[r][c].is_zero())
            .ok_or_else(|| Error::Numerical("singular system".into()))?;
        m.swap(c, p);
        let pivot = m[c][c].clone();
        for v in m[c].iter_mut() {
            *v /= &pivot;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in c..=n {
                    let t = &m[c][k] * &f;
                    m[r][k] -= t;
                }
            }
        }
    }
    let mut out: BTreeMap<Site, BigRational> = BTreeMap::new();
    for (i, s) in sites.iter().enumerate() {
        for w in s.neighbors() {
            if !index.contains_key(&w) {
                let e = out.entry(w).or_insert_with(BigRational::zero);
                *e += &m[i][n] * &quarter;
            }
        }
    }
    Ok(out)
}

/// Exact law of the final site set when the emissions are sent in the given
/// order, `(level, count)` meaning `count` particles from `(0, level)`.
/// Site sets are keyed in sorted order.
pub fn exact_small_aggregate_distribution(emissions: &[(i32, u32)]) -> Result<BTreeMap<Vec<Site>, f64>> {
    let total: u32 = emissions.iter().map(|e| e.1).sum();
    if total > MAX_SMALL_PARTICLES {
        return Err(Error::Budget(format!(
            "{total} particles exceed the exact limit of {MAX_SMALL_PARTICLES}"
        )));
    }
    let mut states: BTreeMap<Vec<Site>, f64> = BTreeMap::from([(Vec::new(), 1.0)]);
    for &(level, count) in emissions {
        let start = Site::source(level);
        for _ in 0..count {
            let mut next = BTreeMap::new();
            for (set, p) in states {
                if set.binary_search(&start).is_err() {
                    let mut s = set.clone();
                    s.push(start);
                    s.sort();
                    *next.entry(s).or_insert(0.0) += p;
                    continue;
                }
                let exit = exact_exit_distribution(&set, start)?;
                for (b, q) in exit.probabilities {
                    let mut s = set.clone();
                    s.push(b);
                    s.sort();
                    *next.entry(s).or_insert(0.0) += p * q;
                }
            }
            states = next;
        }
    }
    Ok(states)
}

/// Options of [`expected_exit_count`].
#[derive(Clone, Copy, Debug)]
pub struct ExitCountOptions {
    /// Stop expanding the box once the value moves by less than this.
    pub tolerance: f64,
    /// Hard limit on the box half-height.
    pub max_half_height: i32,
}

impl Default for ExitCountOptions {
    fn default() -> Self {
        ExitCountOptions {
            tolerance: 1e-4,
            max_half_height: 20_000,
        }
    }
}

/// Expected number of walks, one started from each site of
/// `[-r, r] x [-L, L]`, whose first visit to the columns `|x| = r'` lands in
/// `tau`. The vertical extent is cut at a box half-height that is doubled
/// until the value settles.
pub fn expected_exit_count(r: u32, r_prime: u32, tau: &[Site], l: u32, opts: &ExitCountOptions) -> Result<f64> {
    if r > r_prime {
        return Err(Error::config("r must not exceed r'"));
    }
    let rp = r_prime as i32;
    if let Some(t) = tau.iter().find(|t| t.x.abs() != rp) {
        return Err(Error::config(format!("target {t} is not on the columns |x| = {rp}")));
    }
    let tau: BTreeSet<Site> = tau.iter().copied().collect();
    if tau.is_empty() {
        return Ok(0.0);
    }
    let (r, l) = (r as i32, l as i32);
    // Starts on the columns themselves are stopped at once.
    let on_columns = if r == rp {
        tau.iter().filter(|t| t.y.abs() <= l).count() as f64
    } else {
        0.0
    };
    if rp == 0 {
        return Ok(on_columns);
    }
    let reach = tau.iter().map(|t| t.y.abs()).max().unwrap();
    let mut half = l.max(reach) + 4 * rp + 8;
    let mut last: Option<f64> = None;
    loop {
        if half > opts.max_half_height {
            return Err(Error::Budget(format!(
                "box half-height {half} exceeds {} before convergence",
                opts.max_half_height
            )));
        }
        let mut sites = Vec::new();
        for y in -half..=half {
            for x in -(rp - 1)..=(rp - 1) {
                sites.push(Site::new(x, y));
            }
        }
        let rhs: Vec<f64> = sites
            .iter()
            .map(|s| if s.x.abs() <= r && s.y.abs() <= l { 1.0 } else { 0.0 })
            .collect();
        let g = green_solve(&sites, &rhs)?;
        let mass = boundary_mass(&sites, &g);
        let value = on_columns + tau.iter().map(|t| mass.get(t).copied().unwrap_or(0.0)).sum::<f64>();
        if let Some(prev) = last {
            if (value - prev).abs() < opts.tolerance {
                return Ok(value);
            }
        }
        last = Some(value);
        half *= 2;
    }
}
