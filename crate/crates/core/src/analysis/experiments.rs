use std::collections::BTreeMap;
use std::time::Instant;

use super::measures::{avoids, components_in_rows, covers, empty_levels, shape_deviation};
use super::stats::{self, bootstrap, linear_fit, median, proportion, ratio_estimate};
use super::{Estimate, ExperimentReport, SeedRecord, Verdict};
use crate::error::{Error, Result};
use crate::forest::{branch_deviation, build_forest, stabilization_radius_seed};
use crate::growth::{grow, grow_upward, GrowthSpec, UpwardBase, Variant};
use crate::lattice::{Region, Site};
use crate::random::RandomSource;
use crate::oracle::{exact_small_aggregate_distribution, expected_exit_count, ExitCountOptions};
use crate::runner::map_seeds;

/// Seeds of an experiment, the worker count used to run them and the walk
/// randomness of the grown aggregates.
#[derive(Clone, Debug)]
pub struct Replicates {
    pub seeds: Vec<u64>,
    pub jobs: Option<usize>,
    pub source: RandomSource,
}

impl Replicates {
    pub fn new(seeds: Vec<u64>) -> Self {
        Replicates {
            seeds,
            jobs: None,
            source: RandomSource::Stacks,
        }
    }

    pub fn with_jobs(mut self, jobs: Option<usize>) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn with_source(mut self, source: RandomSource) -> Self {
        self.source = source;
        self
    }

    fn spec(&self, variant: Variant, n: u32, m: u32, seed: u64) -> GrowthSpec {
        GrowthSpec::new(variant, n, m, seed).with_source(self.source)
    }

    fn run<F>(&self, f: F) -> Result<Vec<SeedRecord>>
    where
        F: Fn(u64) -> Result<Vec<f64>> + Sync + Send,
    {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        map_seeds(&self.seeds, self.jobs, |seed| {
            Ok(SeedRecord {
                seed,
                values: f(seed)?,
            })
        })
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn sites_param(sites: &[Site]) -> String {
    sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn list_param<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Paired comparison of two indicator columns.
fn paired_verdict(name: &str, a: &[f64], b: &[f64]) -> (Estimate, Verdict) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let e = Estimate::from_samples(format!("difference {name}"), &d);
    let ok = e.within(0.0, 3.0);
    let detail = format!("difference {} vs 3σ = {}", e.value, 3.0 * e.se);
    (e, Verdict::new(format!("{name} within 3σ"), ok, detail))
}

/// Mean number of sites on each of `rows`.
pub fn width_per_level(variant: Variant, n: u32, m: u32, rows: &[i32], reps: &Replicates) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if rows.is_empty() {
        return Err(Error::config("no rows given"));
    }
    if let Some(r) = rows.iter().find(|r| r.unsigned_abs() > m / 4) {
        return Err(Error::config(format!("row {r} is outside |row| <= M/4")));
    }
    let mut rep = ExperimentReport::new("width");
    rep.param("variant", variant);
    rep.param("n", n);
    rep.param("M", m);
    rep.param("rows", list_param(rows));
    rep.param("seeds", reps.seeds.len());
    rep.param("randomness", reps.source.name());
    rep.columns = rows.iter().map(|r| format!("width_row_{r}")).collect();
    rep.records = reps.run(|seed| {
        let agg = grow(&reps.spec(variant, n, m, seed))?.aggregate;
        Ok(rows.iter().map(|&r| agg.row_width(r) as f64).collect())
    })?;
    for (i, r) in rows.iter().enumerate() {
        let col = rep.column(&rep.columns[i]).unwrap();
        let e = Estimate::from_samples(format!("mean width row {r}"), &col);
        if variant != Variant::Classical {
            let rel = (e.value - n as f64).abs() / n as f64;
            rep.verdicts.push(Verdict::new(
                format!("row {r} within 5% of n"),
                rel <= 0.05,
                format!("mean {} vs n = {n}, relative error {rel}", e.value),
            ));
        }
        rep.estimates.push(e);
    }
    if rows.len() >= 2 {
        let (a, b) = (rep.column(&rep.columns[0]).unwrap(), rep.column(rep.columns.last().unwrap()).unwrap());
        let name = format!("rows {} and {}", rows[0], rows[rows.len() - 1]);
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let e = Estimate::from_samples(format!("difference {name}"), &d);
        let ok = e.within(0.0, 3.0);
        rep.verdicts.push(Verdict::new(
            format!("{name} within 3σ"),
            ok,
            format!("difference {} vs 3σ = {}", e.value, 3.0 * e.se),
        ));
        rep.estimates.push(e);
    }
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Shape deviations in the strip `Z_K` for each `n`, the truncation being
/// `m_of(n)`.
pub fn shape_deviation_scan(
    variant: Variant,
    ns: &[u32],
    k: u32,
    m_of: &(dyn Fn(u32) -> u32 + Sync),
    reps: &Replicates,
) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("n list must be nonempty and increasing"));
    }
    let mut rep = ExperimentReport::new("shape");
    rep.param("variant", variant);
    rep.param("n", list_param(ns));
    rep.param("K", k);
    rep.param("M", list_param(&ns.iter().map(|&n| m_of(n)).collect::<Vec<_>>()));
    rep.param("seeds", reps.seeds.len());
    rep.param("randomness", reps.source.name());
    for n in ns {
        rep.columns.push(format!("delta_in_n{n}"));
        rep.columns.push(format!("delta_out_n{n}"));
        rep.columns.push(format!("deviation_n{n}"));
    }
    rep.records = reps.run(|seed| {
        let mut v = Vec::new();
        for &n in ns {
            let agg = grow(&reps.spec(variant, n, m_of(n), seed))?.aggregate;
            let d = shape_deviation(&agg, n, k);
            v.extend([d.delta_in as f64, d.delta_out as f64, d.max() as f64]);
        }
        Ok(v)
    })?;
    let mut medians = Vec::new();
    for &n in ns {
        let col = rep.column(&format!("deviation_n{n}")).unwrap();
        let med = median(&col);
        let boot = bootstrap(col.len(), 200, n as u64, |idx| {
            median(&idx.iter().map(|&i| col[i]).collect::<Vec<_>>())
        });
        rep.estimates.push(Estimate::new(format!("median deviation n={n}"), med, stats::variance(&boot).sqrt(), col.len()));
        rep.estimates.push(Estimate::from_samples(format!("mean deviation n={n}"), &col));
        medians.push(med);
    }
    let (mut xs_lin, mut xs_log, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for &n in ns {
        let col = rep.column(&format!("deviation_n{n}")).unwrap();
        xs_lin.extend(std::iter::repeat(n as f64).take(col.len()));
        xs_log.extend(std::iter::repeat((n as f64).ln()).take(col.len()));
        ys.extend(col);
    }
    if ns.len() >= 2 {
        let fl = linear_fit(&xs_log, &ys);
        let fn_ = linear_fit(&xs_lin, &ys);
        rep.estimates.push(Estimate::new("slope vs log n", fl.slope, fl.slope_se, ys.len()));
        rep.estimates.push(Estimate::new("slope vs n", fn_.slope, fn_.slope_se, ys.len()));
        rep.verdicts.push(Verdict::new(
            "log-fit slope positive",
            fl.slope > 0.0,
            format!("slope {}", fl.slope),
        ));
        let ratios: Vec<f64> = medians.iter().zip(ns).map(|(m, &n)| m / n as f64).collect();
        rep.verdicts.push(Verdict::new(
            "deviation/n decreasing",
            ratios.windows(2).all(|w| w[1] < w[0]),
            format!("ratios {}", list_param(&ratios)),
        ));
        rep.verdicts.push(Verdict::new(
            "median nondecreasing in n",
            medians.windows(2).all(|w| w[1] >= w[0]),
            format!("medians {}", list_param(&medians)),
        ));
    }
    let bound_ok = medians.iter().zip(ns).all(|(m, &n)| *m <= n as f64 / 8.0);
    rep.verdicts.push(Verdict::new(
        "median deviation <= n/8",
        bound_ok,
        format!("medians {}", list_param(&medians)),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Whether any particle from the far levels `floor(M^alpha) < |i| <=
/// floor(M^alpha) + far` visits the strip `Z_M` in the deterministic run.
pub fn far_touch(n: u32, m: u32, alpha: f64, far: u32, seed: u64) -> Result<bool> {
    if far == 0 {
        return Ok(false);
    }
    let near = (m as f64).powf(alpha).floor() as u32;
    let spec = GrowthSpec::new(Variant::Deterministic, n, near + far, seed)
        .with_monitors(vec![Region::Strip(m as i32)]);
    let run = grow(&spec)?;
    Ok(run
        .particles
        .iter()
        .any(|p| p.emission.level.unsigned_abs() > near && p.visited[0]))
}

/// Frequency of far-particle visits to `Z_M` across the `M` grid; `far`
/// levels on each side, `M` of them when `None`.
pub fn far_particle_monitor(
    n: u32,
    alpha: f64,
    m_grid: &[u32],
    far: Option<u32>,
    reps: &Replicates,
) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if alpha <= 1.0 {
        return Err(Error::config("alpha must exceed 1"));
    }
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("M grid must be nonempty and increasing"));
    }
    let mut rep = ExperimentReport::new("far");
    rep.param("n", n);
    rep.param("alpha", alpha);
    rep.param("M", list_param(m_grid));
    rep.param("far_levels", far.map_or("M".to_string(), |f| f.to_string()));
    rep.param("seeds", reps.seeds.len());
    rep.columns = m_grid.iter().map(|m| format!("touch_M{m}")).collect();
    rep.records = reps.run(|seed| {
        m_grid
            .iter()
            .map(|&m| far_touch(n, m, alpha, far.unwrap_or(m), seed).map(flag))
            .collect()
    })?;
    let mut freqs = Vec::new();
    for (i, m) in m_grid.iter().enumerate() {
        let col = rep.column(&rep.columns[i]).unwrap();
        let hits = col.iter().filter(|&&v| v > 0.0).count();
        let (p, se) = proportion(hits, col.len());
        rep.estimates.push(Estimate::new(format!("touch frequency M={m}"), p, se, col.len()));
        freqs.push(p);
    }
    rep.verdicts.push(Verdict::new(
        "strictly decreasing",
        freqs.windows(2).all(|w| w[1] < w[0]),
        format!("frequencies {}", list_param(&freqs)),
    ));
    rep.verdicts.push(Verdict::new(
        "zero at largest M",
        *freqs.last().unwrap() == 0.0,
        format!("frequency {}", freqs.last().unwrap()),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Summary of one height trace against the thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightTrace {
    /// `(t, h_t)` for `t = M, ..., t_max`, `None` while the aggregate is empty.
    pub heights: Vec<(i32, Option<i64>)>,
}

impl HeightTrace {
    /// Sum and count of the increments `h_{t+1} - h_t` taken where `h_t > zeta`.
    pub fn increments_above(&self, zeta: i64) -> (f64, f64) {
        let mut sum = 0.0;
        let mut count = 0.0;
        for w in self.heights.windows(2) {
            if let (Some(a), Some(b)) = (w[0].1, w[1].1) {
                if a > zeta {
                    sum += (b - a) as f64;
                    count += 1.0;
                }
            }
        }
        (sum, count)
    }

    /// Successive times `t > M` with `h_t <= zeta`.
    pub fn hitting_times(&self, zeta: i64) -> Vec<i32> {
        self.heights
            .iter()
            .skip(1)
            .filter(|(_, h)| h.is_some_and(|h| h <= zeta))
            .map(|(t, _)| *t)
            .collect()
    }

    pub fn min_increment(&self) -> Option<i64> {
        self.heights
            .windows(2)
            .filter_map(|w| Some(w[1].1? - w[0].1?))
            .min()
    }
}

pub fn height_trace(variant: Variant, n: u32, m: u32, t_max: i32, seed: u64) -> Result<HeightTrace> {
    let traj = grow_upward(&GrowthSpec::new(variant, n, m, seed), UpwardBase::Truncation, t_max)?;
    Ok(HeightTrace {
        heights: traj.heights(),
    })
}

/// Conditional drift of the excess height above each threshold and the
/// first two hitting times.
pub fn height_drift(
    variant: Variant,
    n: u32,
    m: u32,
    zetas: &[i64],
    t_max: i32,
    reps: &Replicates,
) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if zetas.is_empty() || zetas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("zeta grid must be nonempty and increasing"));
    }
    if t_max <= m as i32 {
        return Err(Error::config("t_max must exceed M"));
    }
    let mut rep = ExperimentReport::new("height");
    rep.param("variant", variant);
    rep.param("n", n);
    rep.param("M", m);
    rep.param("zeta", list_param(zetas));
    rep.param("t_max", t_max);
    rep.param("seeds", reps.seeds.len());
    rep.columns.push("min_increment".into());
    for z in zetas {
        for c in ["sum", "count", "tau1", "tau2"] {
            rep.columns.push(format!("{c}_z{z}"));
        }
    }
    rep.records = reps.run(|seed| {
        let trace = height_trace(variant, n, m, t_max, seed)?;
        let mut v = vec![trace.min_increment().map_or(f64::NAN, |d| d as f64)];
        for &z in zetas {
            let (s, c) = trace.increments_above(z);
            let hits = trace.hitting_times(z);
            let tau = |i: usize| hits.get(i).map_or(-1.0, |&t| t as f64);
            v.extend([s, c, tau(0), tau(1)]);
        }
        Ok(v)
    })?;
    let min_inc = rep.column("min_increment").unwrap();
    rep.verdicts.push(Verdict::new(
        "increments at least -1",
        min_inc.iter().all(|&d| d.is_nan() || d >= -1.0),
        format!("smallest increment {}", min_inc.iter().copied().fold(f64::INFINITY, f64::min)),
    ));
    for &z in zetas {
        let sum = rep.column(&format!("sum_z{z}")).unwrap();
        let count = rep.column(&format!("count_z{z}")).unwrap();
        let (d, se) = ratio_estimate(&sum, &count);
        let total = count.iter().sum::<f64>() as usize;
        rep.estimates.push(Estimate::new(format!("drift above zeta={z}"), d, se, total));
        let tau1 = rep.column(&format!("tau1_z{z}")).unwrap();
        let tau2 = rep.column(&format!("tau2_z{z}")).unwrap();
        let (p1, s1) = proportion(tau1.iter().filter(|&&t| t >= 0.0).count(), tau1.len());
        let (p2, s2) = proportion(tau2.iter().filter(|&&t| t >= 0.0).count(), tau2.len());
        rep.estimates.push(Estimate::new(format!("tau1 realized zeta={z}"), p1, s1, tau1.len()));
        rep.estimates.push(Estimate::new(format!("tau2 realized zeta={z}"), p2, s2, tau2.len()));
    }
    let top = *zetas.last().unwrap();
    let drift = rep.estimate(&format!("drift above zeta={top}")).unwrap().clone();
    rep.verdicts.push(Verdict::new(
        "drift negative at top zeta",
        drift.value + 3.0 * drift.se < 0.0,
        format!("drift {} ± {} over {} increments", drift.value, drift.se, drift.n),
    ));
    let p = rep.estimate(&format!("tau1 realized zeta={top}")).unwrap().value;
    rep.verdicts.push(Verdict::new(
        "tau1 realized in >= 99% of seeds",
        p >= 0.99,
        format!("fraction {p}"),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Empty rows and connected components within the window `[lo, hi]`.
pub fn empty_lines(variant: Variant, n: u32, m: u32, window: (i32, i32), reps: &Replicates) -> Result<ExperimentReport> {
    let clock = Instant::now();
    let (lo, hi) = window;
    let half = (m / 2) as i32;
    if lo > hi || lo < -half || hi > half {
        return Err(Error::config("window must lie inside [-M/2, M/2]"));
    }
    let mut rep = ExperimentReport::new("lines");
    rep.param("variant", variant);
    rep.param("n", n);
    rep.param("M", m);
    rep.param("window", format!("{lo},{hi}"));
    rep.param("seeds", reps.seeds.len());
    rep.param("randomness", reps.source.name());
    rep.columns = vec!["empty_lines".into(), "axis0_empty".into(), "components".into()];
    rep.records = reps.run(|seed| {
        let agg = grow(&reps.spec(variant, n, m, seed))?.aggregate;
        let empty = empty_levels(&agg, lo, hi);
        Ok(vec![
            empty.len() as f64,
            flag(agg.row_width(0) == 0),
            components_in_rows(&agg, lo, hi) as f64,
        ])
    })?;
    let axis = rep.column("axis0_empty").unwrap();
    let hits = axis.iter().filter(|&&v| v > 0.0).count();
    let (p, se) = proportion(hits, axis.len());
    rep.estimates.push(Estimate::new("axis 0 empty frequency", p, se, axis.len()));
    rep.estimates.push(Estimate::from_samples("mean empty lines", &rep.column("empty_lines").unwrap()));
    let comps = rep.column("components").unwrap();
    let (pc, sc) = proportion(comps.iter().filter(|&&c| c >= 2.0).count(), comps.len());
    rep.estimates.push(Estimate::new("components >= 2 frequency", pc, sc, comps.len()));
    if variant.is_poisson() {
        rep.verdicts.push(Verdict::new("axis 0 empty at least once", hits > 0, format!("{hits} seeds")));
    } else {
        let any_empty = rep.column("empty_lines").unwrap().iter().any(|&v| v > 0.0);
        rep.verdicts.push(Verdict::new(
            "no empty line",
            !any_empty && hits == 0,
            format!("{hits} seeds with axis 0 empty"),
        ));
    }
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// `rho_k = P(A avoids C1 and tau_k C2) - P(A avoids C1) P(A avoids C2)`.
pub fn mixing_correlation(
    variant: Variant,
    n: u32,
    m: u32,
    c1: &[Site],
    c2: &[Site],
    k_grid: &[i32],
    reps: &Replicates,
) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if c1.is_empty() || c2.is_empty() || k_grid.is_empty() {
        return Err(Error::config("C1, C2 and the k grid must be nonempty"));
    }
    if k_grid.iter().any(|&k| k < 0) || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("k grid must be nonnegative and increasing"));
    }
    let ys = c2.iter().map(|s| s.y);
    let diam = ys.clone().max().unwrap() - ys.min().unwrap();
    let kmax = *k_grid.last().unwrap();
    if kmax + diam > (m / 2) as i32 {
        return Err(Error::config("largest k plus the diameter of C2 exceeds M/2"));
    }
    let mut rep = ExperimentReport::new("mixing");
    rep.param("variant", variant);
    rep.param("n", n);
    rep.param("M", m);
    rep.param("C1", sites_param(c1));
    rep.param("C2", sites_param(c2));
    rep.param("k", list_param(k_grid));
    rep.param("seeds", reps.seeds.len());
    rep.param("randomness", reps.source.name());
    rep.columns = vec!["avoid_c1".into(), "avoid_c2".into()];
    rep.columns.extend(k_grid.iter().map(|k| format!("avoid_c1_and_shift_k{k}")));
    rep.records = reps.run(|seed| {
        let agg = grow(&reps.spec(variant, n, m, seed))?.aggregate;
        let a = avoids(&agg, c1);
        let mut v = vec![flag(a), flag(avoids(&agg, c2))];
        for &k in k_grid {
            let shifted: Vec<Site> = c2.iter().map(|s| s.translate(k)).collect();
            v.push(flag(a && avoids(&agg, &shifted)));
        }
        Ok(v)
    })?;
    let a = rep.column("avoid_c1").unwrap();
    let c = rep.column("avoid_c2").unwrap();
    let rho_of = |idx: &[usize], ab: &[f64]| {
        let m = |x: &[f64]| idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64;
        m(ab) - m(&a) * m(&c)
    };
    let all: Vec<usize> = (0..a.len()).collect();
    let mut abs_boot = Vec::new();
    for &k in k_grid {
        let ab = rep.column(&format!("avoid_c1_and_shift_k{k}")).unwrap();
        let rho = rho_of(&all, &ab);
        let (ea, ec, eab) = (stats::mean(&a), stats::mean(&c), stats::mean(&ab));
        let psi: Vec<f64> = (0..a.len())
            .map(|i| (ab[i] - eab) - ec * (a[i] - ea) - ea * (c[i] - ec))
            .collect();
        rep.estimates.push(Estimate::new(format!("rho k={k}"), rho, stats::std_error(&psi), a.len()));
        let boot = bootstrap(a.len(), 200, k as u64, |idx| rho_of(idx, &ab).abs());
        abs_boot.push((k, median(&boot)));
    }
    let last = rep.estimate(&format!("rho k={kmax}")).unwrap().clone();
    rep.verdicts.push(Verdict::new(
        format!("|rho| at k={kmax} within 3σ of 0"),
        last.within(0.0, 3.0),
        format!("rho {} ± {}", last.value, last.se),
    ));
    if let Some(&(k1, b1)) = abs_boot.iter().find(|(k, _)| *k > 0) {
        let (_, bl) = *abs_boot.last().unwrap();
        rep.verdicts.push(Verdict::new(
            format!("bootstrap median |rho| at k={kmax} <= at k={k1}"),
            bl <= b1,
            format!("{bl} vs {b1}"),
        ));
    }
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Occupancy probability of a pattern against its translate by `k`, its
/// reflection through `y = k/2` and its mirror image in the vertical axis.
pub fn symmetry_checks(
    variant: Variant,
    n: u32,
    m: u32,
    pattern: &[Site],
    k: i32,
    reps: &Replicates,
) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if pattern.is_empty() {
        return Err(Error::config("pattern must be nonempty"));
    }
    let translated: Vec<Site> = pattern.iter().map(|s| s.translate(k)).collect();
    let reflected: Vec<Site> = pattern.iter().map(|s| s.reflect_horizontal(k)).collect();
    let mirrored: Vec<Site> = pattern.iter().map(|s| s.reflect_vertical_axis()).collect();
    let safe = (m / 2) as i32;
    if [pattern, &translated, &reflected].iter().any(|p| p.iter().any(|s| s.y.abs() > safe)) {
        return Err(Error::config("pattern images must lie within |y| <= M/2"));
    }
    let mut rep = ExperimentReport::new("symmetry");
    rep.param("variant", variant);
    rep.param("n", n);
    rep.param("M", m);
    rep.param("pattern", sites_param(pattern));
    rep.param("k", k);
    rep.param("seeds", reps.seeds.len());
    rep.param("randomness", reps.source.name());
    rep.columns = ["pattern", "translate", "reflect", "mirror"].map(String::from).to_vec();
    rep.records = reps.run(|seed| {
        let agg = grow(&reps.spec(variant, n, m, seed))?.aggregate;
        Ok([pattern, &translated, &reflected, &mirrored]
            .iter()
            .map(|p| flag(covers(&agg, p)))
            .collect())
    })?;
    let cols: Vec<Vec<f64>> = rep.columns.iter().map(|c| rep.column(c).unwrap()).collect();
    for (name, col) in rep.columns.clone().iter().zip(&cols) {
        let hits = col.iter().filter(|&&v| v > 0.0).count();
        let (p, se) = proportion(hits, col.len());
        rep.estimates.push(Estimate::new(format!("occupied {name}"), p, se, col.len()));
    }
    for (i, name) in [(1, "translate"), (2, "reflect"), (3, "mirror")] {
        let (e, v) = paired_verdict(&format!("pattern vs {name}"), &cols[0], &cols[i]);
        rep.estimates.push(e);
        rep.verdicts.push(v);
    }
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Per-seed stabilization of the clock forest on `Z_K` along the `M` grid.
pub fn stabilize_forest(n: u32, k: u32, grid: &[u32], bound: u32, reps: &Replicates) -> Result<ExperimentReport> {
    let clock = Instant::now();
    let mut rep = ExperimentReport::new("stabilize-forest");
    rep.param("n", n);
    rep.param("K", k);
    rep.param("grid", list_param(grid));
    rep.param("bound", bound);
    rep.param("seeds", reps.seeds.len());
    rep.columns = vec!["m0".into(), "inconclusive".into()];
    rep.records = reps.run(|seed| {
        let s = stabilization_radius_seed(n, k, grid, seed)?;
        Ok(vec![s.m0 as f64, flag(s.inconclusive)])
    })?;
    let m0 = rep.column("m0").unwrap();
    let inc = rep.column("inconclusive").unwrap();
    let ok = m0.iter().zip(&inc).filter(|(m, i)| **i == 0.0 && **m <= bound as f64).count();
    let (p, se) = proportion(ok, m0.len());
    rep.estimates.push(Estimate::new(format!("stabilized within M <= {bound}"), p, se, m0.len()));
    rep.estimates.push(Estimate::new("median M0", median(&m0), f64::NAN, m0.len()));
    rep.verdicts.push(Verdict::new(
        format!(">= 99% stabilized within M <= {bound}"),
        p >= 0.99,
        format!("fraction {p}"),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Exit counts of the walks from `[-r, r] x [-L, L]` into `tau` for each `L`
/// of the sweep, against the limit `(2r + 1) / 2 * #tau`.
pub fn exit_counts(r: u32, r_prime: u32, tau: &[Site], l_sweep: &[u32]) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if l_sweep.is_empty() {
        return Err(Error::config("L sweep must be nonempty"));
    }
    let mut rep = ExperimentReport::new("exit-counts");
    rep.param("r", r);
    rep.param("rp", r_prime);
    rep.param("tau", sites_param(tau));
    rep.param("L", list_param(l_sweep));
    let target = (2 * r + 1) as f64 / 2.0 * tau.len() as f64;
    let mut errors = Vec::new();
    for &l in l_sweep {
        let v = expected_exit_count(r, r_prime, tau, l, &ExitCountOptions::default())?;
        rep.estimates.push(Estimate::new(format!("exit count L={l}"), v, 0.0, 1));
        errors.push((v - target).abs());
    }
    let last = rep.estimates.last().unwrap().value;
    let rel = if target == 0.0 { last.abs() } else { (last - target).abs() / target };
    rep.verdicts.push(Verdict::new(
        "within 2% of the limit",
        rel <= 0.02,
        format!("value {last} vs {target}, relative error {rel}"),
    ));
    rep.verdicts.push(Verdict::new(
        "converging along the sweep",
        errors.windows(2).all(|w| w[1] <= w[0] + 1e-9),
        format!("errors {}", list_param(&errors)),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// All distinct orderings of a multiset of levels.
fn orderings(levels: &mut Vec<i32>, current: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
    if levels.is_empty() {
        out.push(current.clone());
        return;
    }
    let mut tried = Vec::new();
    for i in 0..levels.len() {
        let l = levels[i];
        if tried.contains(&l) {
            continue;
        }
        tried.push(l);
        levels.remove(i);
        current.push(l);
        orderings(levels, current, out);
        current.pop();
        levels.insert(i, l);
    }
}

/// Exact comparison of the final-set law across all emission orders of every
/// multiset of at most `max_particles` particles over `levels`.
pub fn abelian_check(max_particles: u32, levels: &[i32]) -> Result<ExperimentReport> {
    let clock = Instant::now();
    if levels.is_empty() {
        return Err(Error::config("no levels given"));
    }
    let mut rep = ExperimentReport::new("abelian");
    rep.param("particles", max_particles);
    rep.param("levels", list_param(levels));
    rep.param("orders", "all");
    // Multisets as nondecreasing index sequences into `levels`.
    let mut multisets: Vec<Vec<i32>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_particles {
        let mut next = Vec::new();
        for seq in &frontier {
            for j in seq.last().copied().unwrap_or(0)..levels.len() {
                let mut s = seq.clone();
                s.push(j);
                multisets.push(s.iter().map(|&i| levels[i]).collect());
                next.push(s);
            }
        }
        frontier = next;
    }
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for ms in &multisets {
        let mut orders = Vec::new();
        orderings(&mut ms.clone(), &mut Vec::new(), &mut orders);
        let laws: Vec<BTreeMap<Vec<Site>, f64>> = orders
            .iter()
            .map(|o| exact_small_aggregate_distribution(&o.iter().map(|&l| (l, 1)).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        for law in &laws[1..] {
            worst = worst.max(stats::total_variation(&laws[0], law));
            compared += 1;
        }
    }
    rep.estimates.push(Estimate::new("max TV distance across orders", worst, 0.0, compared));
    rep.verdicts.push(Verdict::new(
        "max TV distance across orders",
        worst <= 1e-12,
        format!("{worst:e} <= 1e-12 over {} multisets", multisets.len()),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}

/// Maximal deviation of the forest branch ending at `(n, 0)`, measured in
/// the clock forest of `A_{factor * n}[m]`.
pub fn branch_deviation_scan(ns: &[u32], factor: u32, m: u32, reps: &Replicates) -> Result<ExperimentReport> {
    let clock = Instant::now();
    let mut rep = ExperimentReport::new("branch");
    rep.param("n", list_param(ns));
    rep.param("factor", factor);
    rep.param("M", m);
    rep.param("seeds", reps.seeds.len());
    rep.param("randomness", reps.source.name());
    rep.columns = ns.iter().map(|n| format!("delta_over_n_{n}")).collect();
    rep.records = reps.run(|seed| {
        ns.iter()
            .map(|&n| {
                let agg = grow(&reps.spec(Variant::PoissonClock, factor * n, m, seed))?.aggregate;
                let f = build_forest(&agg)?;
                match branch_deviation(&f, Site::new(n as i32, 0)) {
                    Ok((_, (max, _))) => Ok(max as f64 / n as f64),
                    Err(Error::Lookup(_)) => Ok(f64::NAN),
                    Err(e) => Err(e),
                }
            })
            .collect()
    })?;
    let mut medians = Vec::new();
    for (i, n) in ns.iter().enumerate() {
        let col: Vec<f64> = rep.column(&rep.columns[i]).unwrap().into_iter().filter(|v| !v.is_nan()).collect();
        let med = median(&col);
        rep.estimates.push(Estimate::new(format!("median delta/n n={n}"), med, f64::NAN, col.len()));
        medians.push(med);
    }
    rep.verdicts.push(Verdict::new(
        "median delta/n decreasing",
        medians.windows(2).all(|w| w[1] < w[0]),
        format!("medians {}", list_param(&medians)),
    ));
    rep.elapsed = clock.elapsed();
    Ok(rep)
}
