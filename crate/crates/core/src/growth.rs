//! Growth of the line-source aggregates.
//!
//! Every construction reduces to an *emission plan*: an ordered list of
//! particles, each naming its source level. The plan is fed to an [`Engine`]
//! that settles the particles one by one against a shared [`StackField`].
//!
//! * deterministic: `n` particles per level, levels in the usual order
//!   `0, 1, -1, ..., M, -M`;
//! * poisson-usual: `N_i` particles per level in the usual order;
//! * poisson-clock: the same `N_i` particles, sent in the global time order of
//!   independent rate-1 clocks on `[0, n]`;
//! * classical: `n` particles from the origin.
//!
//! The counts `N_i` are the clock counts `#N_i([0, n])`, so the two Poisson
//! variants of one seed always send the same multiset of particles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::lattice::{usual_levels, Region, Site};
use crate::random::{aux_uniform, level_count, LevelClock, RandomSource};
use crate::walk::{settle_particle, Occupancy, ParticleKey, StackField, WalkOptions, DEFAULT_MAX_STEPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Deterministic,
    PoissonUsual,
    PoissonClock,
    Classical,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Deterministic => "det",
            Variant::PoissonUsual => "usual",
            Variant::PoissonClock => "clock",
            Variant::Classical => "classical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "det" | "deterministic" => Some(Variant::Deterministic),
            "usual" | "poisson-usual" => Some(Variant::PoissonUsual),
            "clock" | "poisson-clock" => Some(Variant::PoissonClock),
            "classical" | "classical-origin" => Some(Variant::Classical),
            _ => None,
        }
    }

    pub fn is_poisson(self) -> bool {
        matches!(self, Variant::PoissonUsual | Variant::PoissonClock)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One particle of a plan: the `index`-th (1-based) particle of `level`,
/// optionally stamped with its clock time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Emission {
    pub level: i32,
    pub index: u32,
    pub time: Option<f64>,
}

impl Emission {
    pub fn new(level: i32, index: u32) -> Self {
        Emission {
            level,
            index,
            time: None,
        }
    }

    pub fn key(&self) -> ParticleKey {
        ParticleKey {
            level: self.level,
            index: self.index,
        }
    }
}

/// Clock arrivals of all levels in `[lo, hi]` up to the horizon, merged in
/// time order.
#[derive(Clone, Debug)]
pub struct ClockSchedule {
    pub horizon: f64,
    pub events: Vec<Emission>,
    pub counts: BTreeMap<i32, u32>,
}

impl ClockSchedule {
    pub fn draw(seed: u64, levels: impl IntoIterator<Item = i32>, horizon: f64) -> Self {
        let mut events = Vec::new();
        let mut counts = BTreeMap::new();
        for level in levels {
            let times = LevelClock::arrivals_until(seed, level, horizon);
            counts.insert(level, times.len() as u32);
            events.extend(times.into_iter().enumerate().map(|(j, t)| Emission {
                level,
                index: j as u32 + 1,
                time: Some(t),
            }));
        }
        // Ties have probability zero; (level, index) settles them anyway.
        events.sort_by(|a, b| {
            a.time
                .unwrap()
                .total_cmp(&b.time.unwrap())
                .then(a.level.cmp(&b.level))
                .then(a.index.cmp(&b.index))
        });
        ClockSchedule {
            horizon,
            events,
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.events.len()
    }
}

/// Parameters of one growth run.
#[derive(Clone, Debug)]
pub struct GrowthSpec {
    pub variant: Variant,
    pub n: u32,
    pub m: u32,
    pub seed: u64,
    pub source: RandomSource,
    pub monitors: Vec<Region>,
    pub record_paths: bool,
    pub max_steps: u64,
}

impl GrowthSpec {
    pub fn new(variant: Variant, n: u32, m: u32, seed: u64) -> Self {
        GrowthSpec {
            variant,
            n,
            m: if variant == Variant::Classical { 0 } else { m },
            seed,
            source: RandomSource::Stacks,
            monitors: Vec::new(),
            record_paths: false,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_source(mut self, source: RandomSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_monitors(mut self, monitors: Vec<Region>) -> Self {
        self.monitors = monitors;
        self
    }

    pub fn with_paths(mut self, record: bool) -> Self {
        self.record_paths = record;
        self
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.m > i32::MAX as u32 / 4 {
            return Err(Error::config("M is too large"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max-steps must be positive"));
        }
        Ok(())
    }

    fn params(&self) -> AggregateParams {
        AggregateParams {
            variant: self.variant,
            n: self.n,
            m: self.m,
            seed: self.seed,
            source: self.source,
        }
    }

    /// The emission plan of this spec's variant.
    pub fn plan(&self) -> Vec<Emission> {
        let m = self.m as i32;
        match self.variant {
            Variant::Deterministic => fixed_counts(usual_levels(m), self.n),
            Variant::Classical => fixed_counts([0], self.n),
            Variant::PoissonUsual => usual_levels(m)
                .flat_map(|level| {
                    let count = level_count(self.seed, level, self.n as f64);
                    (1..=count).map(move |j| Emission::new(level, j))
                })
                .collect(),
            Variant::PoissonClock => ClockSchedule::draw(self.seed, -m..=m, self.n as f64).events,
        }
    }
}

fn fixed_counts(levels: impl IntoIterator<Item = i32>, n: u32) -> Vec<Emission> {
    levels
        .into_iter()
        .flat_map(|level| (1..=n).map(move |j| Emission::new(level, j)))
        .collect()
}

/// Plan sending `counts[level]` particles per level, levels in the order given.
pub fn plan_from_counts(counts: &[(i32, u32)]) -> Vec<Emission> {
    counts
        .iter()
        .flat_map(|&(level, c)| (1..=c).map(move |j| Emission::new(level, j)))
        .collect()
}

/// Deterministic pseudo-random permutation of a plan, keyed by `(seed, tag)`.
pub fn shuffle_plan(plan: &[Emission], seed: u64, tag: u64) -> Vec<Emission> {
    let mut out = plan.to_vec();
    for i in (1..out.len()).rev() {
        let u = aux_uniform(seed, tag, i as u64);
        let j = ((u * (i + 1) as f64) as usize).min(i);
        out.swap(i, j);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateParams {
    pub variant: Variant,
    pub n: u32,
    pub m: u32,
    pub seed: u64,
    pub source: RandomSource,
}

/// Where a site came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    /// 1-based position in the insertion order.
    pub birth_index: u32,
    pub source_level: i32,
    /// Index of the creating particle within its level, 1-based.
    pub level_index: u32,
    pub birth_time: Option<f64>,
    /// Last previously occupied site visited by the creating particle; `None`
    /// when it settled at its own start.
    pub predecessor: Option<Site>,
}

/// An occupied site set in insertion order, with provenance.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub params: AggregateParams,
    sites: Vec<Site>,
    provenance: Vec<Provenance>,
    index: FxHashMap<Site, u32>,
}

impl Aggregate {
    pub fn empty(params: AggregateParams) -> Self {
        Aggregate {
            params,
            sites: Vec::new(),
            provenance: Vec::new(),
            index: FxHashMap::default(),
        }
    }

    /// Rebuilds an aggregate from stored rows; rows must be in birth order.
    pub fn from_parts(params: AggregateParams, rows: Vec<(Site, Provenance)>) -> Result<Self> {
        let mut agg = Aggregate::empty(params);
        for (i, (site, prov)) in rows.into_iter().enumerate() {
            if prov.birth_index as usize != i + 1 {
                return Err(Error::config(format!(
                    "birth index {} out of order at row {}",
                    prov.birth_index,
                    i + 1
                )));
            }
            if agg.contains(site) {
                return Err(Error::config(format!("duplicate site {site}")));
            }
            agg.push(site, prov);
        }
        Ok(agg)
    }

    fn push(&mut self, site: Site, prov: Provenance) {
        self.index.insert(site, self.sites.len() as u32);
        self.sites.push(site);
        self.provenance.push(prov);
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index.contains_key(&s)
    }

    /// Sites in birth order.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn provenance(&self, s: Site) -> Option<&Provenance> {
        self.index.get(&s).map(|&i| &self.provenance[i as usize])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, &Provenance)> {
        self.sites.iter().copied().zip(self.provenance.iter())
    }

    pub fn site_set(&self) -> BTreeSet<Site> {
        self.sites.iter().copied().collect()
    }

    /// Number of occupied sites on row `y`.
    pub fn row_width(&self, y: i32) -> usize {
        self.sites.iter().filter(|s| s.y == y).count()
    }

    /// Occupied-site counts for every row in `[lo, hi]`.
    pub fn row_widths(&self, lo: i32, hi: i32) -> Vec<usize> {
        let mut w = vec![0usize; (hi - lo + 1).max(0) as usize];
        for s in &self.sites {
            if s.y >= lo && s.y <= hi {
                w[(s.y - lo) as usize] += 1;
            }
        }
        w
    }

    pub fn top(&self) -> Option<i32> {
        self.sites.iter().map(|s| s.y).max()
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.index.len() != self.sites.len() {
            return Err("duplicate sites".into());
        }
        for (i, (s, p)) in self.iter().enumerate() {
            if p.birth_index as usize != i + 1 {
                return Err(format!("birth index of {s} is {} not {}", p.birth_index, i + 1));
            }
            if let Some(pred) = p.predecessor {
                if !pred.is_adjacent(s) {
                    return Err(format!("predecessor {pred} of {s} is not adjacent"));
                }
                match self.provenance(pred) {
                    Some(q) if q.birth_index < p.birth_index => {}
                    _ => return Err(format!("predecessor {pred} of {s} was not occupied earlier")),
                }
            }
        }
        if self.params.variant == Variant::Deterministic {
            let (n, m) = (self.params.n as usize, self.params.m as i32);
            if self.len() != (2 * m as usize + 1) * n {
                return Err(format!("size {} != (2M+1)n", self.len()));
            }
            if let Some(y) = (-m..=m).find(|&y| !self.contains(Site::source(y))) {
                return Err(format!("source (0,{y}) missing"));
            }
        }
        Ok(())
    }
}

/// Per-particle record of a run.
#[derive(Clone, Debug)]
pub struct ParticleRecord {
    pub emission: Emission,
    pub settled: Site,
    pub path_length: u64,
    pub visited: Vec<bool>,
    pub path: Option<Vec<Site>>,
}

/// A finished run: the aggregate and what each particle did.
#[derive(Clone, Debug)]
pub struct Run {
    pub aggregate: Aggregate,
    pub particles: Vec<ParticleRecord>,
}

/// Sequential settling of particles against one occupied set.
pub struct Engine {
    occupied: Occupancy,
    field: StackField,
    opts: WalkOptions,
    monitors: Vec<Region>,
    aggregate: Aggregate,
    particles: Vec<ParticleRecord>,
}

impl Engine {
    pub fn new(spec: &GrowthSpec) -> Self {
        let half_width = (spec.n as i32).saturating_add(4);
        let m = spec.m as i32 + 4;
        Engine {
            occupied: Occupancy::with_window((-half_width, half_width), (-m, m)),
            field: StackField::with_source(spec.seed, spec.source),
            opts: WalkOptions {
                max_steps: spec.max_steps,
                record_path: spec.record_paths,
            },
            monitors: spec.monitors.clone(),
            aggregate: Aggregate::empty(spec.params()),
            particles: Vec::new(),
        }
    }

    pub fn aggregate(&self) -> &Aggregate {
        &self.aggregate
    }

    pub fn field(&self) -> &StackField {
        &self.field
    }

    /// Sends one particle and returns the site it created.
    pub fn emit(&mut self, e: Emission) -> Result<Site> {
        let start = Site::source(e.level);
        let out = settle_particle(
            &self.occupied,
            start,
            &mut self.field,
            e.key(),
            &self.monitors,
            &self.opts,
        )?;
        let birth_index = self.occupied.occupy(out.settled);
        self.aggregate.push(
            out.settled,
            Provenance {
                birth_index,
                source_level: e.level,
                level_index: e.index,
                birth_time: e.time,
                predecessor: out.penultimate,
            },
        );
        self.particles.push(ParticleRecord {
            emission: e,
            settled: out.settled,
            path_length: out.path_length,
            visited: out.visited,
            path: out.path,
        });
        Ok(out.settled)
    }

    pub fn finish(self) -> Run {
        Run {
            aggregate: self.aggregate,
            particles: self.particles,
        }
    }
}

/// Runs `spec` with an explicit plan (any order, any counts).
pub fn grow_plan(spec: &GrowthSpec, plan: &[Emission]) -> Result<Run> {
    spec.validate()?;
    let mut engine = Engine::new(spec);
    for &e in plan {
        engine.emit(e)?;
    }
    Ok(engine.finish())
}

/// Runs `spec` with its variant's own plan.
pub fn grow(spec: &GrowthSpec) -> Result<Run> {
    grow_plan(spec, &spec.plan())
}

fn expect_variant(spec: &GrowthSpec, v: Variant) -> Result<()> {
    if spec.variant != v {
        return Err(Error::config(format!(
            "expected variant {v}, got {}",
            spec.variant
        )));
    }
    Ok(())
}

/// `A_n[M]`: `n` particles per level of `[-M, M]` in the usual order.
pub fn build_deterministic(spec: &GrowthSpec) -> Result<Aggregate> {
    expect_variant(spec, Variant::Deterministic)?;
    Ok(grow(spec)?.aggregate)
}

/// `A*_n[M]`: Poisson(n) particles per level in the usual order.
pub fn build_poisson_usual(spec: &GrowthSpec) -> Result<Aggregate> {
    expect_variant(spec, Variant::PoissonUsual)?;
    Ok(grow(spec)?.aggregate)
}

/// `A†_n[M]`: particles sent in clock order on `[0, n]`.
pub fn build_poisson_clock(spec: &GrowthSpec) -> Result<Aggregate> {
    expect_variant(spec, Variant::PoissonClock)?;
    Ok(grow(spec)?.aggregate)
}

/// Classical single-source cluster of `n` sites.
pub fn build_classical(n: u32, seed: u64) -> Result<Aggregate> {
    Ok(grow(&GrowthSpec::new(Variant::Classical, n, 0, seed))?.aggregate)
}

/// One change of the discrepancy set `D = large \ small` of a coupled run.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscrepancyEvent {
    /// Position of the particle in the large run's plan.
    pub step: usize,
    pub emission: Emission,
    /// Site that entered `D`.
    pub created: Option<Site>,
    /// Site that left `D` (the small run caught up with it).
    pub resolved: Option<Site>,
    pub size_after: usize,
}

/// Relay sites of one chain of changes, attributed greedily in time order to
/// the particle that only the large run received.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub initiator: Emission,
    pub relays: Vec<Site>,
}

#[derive(Clone, Debug, Default)]
pub struct DiscrepancyLog {
    pub events: Vec<DiscrepancyEvent>,
    pub chains: Vec<Chain>,
    /// `D` after the last particle.
    pub final_set: BTreeSet<Site>,
    /// `small ⊆ large` held after every particle.
    pub inclusion_held: bool,
}

impl DiscrepancyLog {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Two engines driven by one plan; each particle goes to the large engine and,
/// if flagged, to the small one.
struct Coupled {
    small: Engine,
    large: Engine,
    d: FxHashSet<Site>,
    chain_of: FxHashMap<Site, usize>,
    log: DiscrepancyLog,
}

impl Coupled {
    fn new(small: Engine, large: Engine) -> Self {
        Coupled {
            small,
            large,
            d: FxHashSet::default(),
            chain_of: FxHashMap::default(),
            log: DiscrepancyLog {
                inclusion_held: true,
                ..Default::default()
            },
        }
    }

    fn step(&mut self, step: usize, e: Emission, to_small: bool) -> Result<()> {
        let yl = self.large.emit(e)?;
        let ys = if to_small { Some(self.small.emit(e)?) } else { None };
        let (created, resolved) = match ys {
            Some(ys) if ys == yl => (None, None),
            Some(ys) => {
                if !self.d.remove(&ys) {
                    self.log.inclusion_held = false;
                }
                self.d.insert(yl);
                (Some(yl), Some(ys))
            }
            None => {
                self.d.insert(yl);
                (Some(yl), None)
            }
        };
        if created.is_none() && resolved.is_none() {
            return Ok(());
        }
        let chain = match resolved.and_then(|r| self.chain_of.remove(&r)) {
            Some(c) => c,
            None => {
                self.log.chains.push(Chain {
                    initiator: e,
                    relays: Vec::new(),
                });
                self.log.chains.len() - 1
            }
        };
        if let Some(c) = created {
            self.chain_of.insert(c, chain);
            self.log.chains[chain].relays.push(c);
        }
        self.log.events.push(DiscrepancyEvent {
            step,
            emission: e,
            created,
            resolved,
            size_after: self.d.len(),
        });
        Ok(())
    }

    fn finish(mut self) -> (Run, Run, DiscrepancyLog) {
        self.log.final_set = self.d.into_iter().collect();
        (self.small.finish(), self.large.finish(), self.log)
    }
}

/// Grows the truncations at `m_small` and `m_large` with shared randomness
/// and logs how their difference evolves.
pub fn grow_coupled_pair(
    spec: &GrowthSpec,
    m_small: u32,
    m_large: u32,
) -> Result<(Aggregate, Aggregate, DiscrepancyLog)> {
    let (small, large, log) = grow_coupled_runs(spec, m_small, m_large)?;
    Ok((small.aggregate, large.aggregate, log))
}

/// Same as [`grow_coupled_pair`] but keeps the per-particle records.
pub fn grow_coupled_runs(spec: &GrowthSpec, m_small: u32, m_large: u32) -> Result<(Run, Run, DiscrepancyLog)> {
    if m_small > m_large {
        return Err(Error::config("M_small must not exceed M_large"));
    }
    if spec.variant == Variant::Classical {
        return Err(Error::config("coupling needs a line-source variant"));
    }
    spec.validate()?;
    let small_spec = GrowthSpec { m: m_small, ..spec.clone() };
    let large_spec = GrowthSpec { m: m_large, ..spec.clone() };
    let mut c = Coupled::new(Engine::new(&small_spec), Engine::new(&large_spec));
    for (step, e) in large_spec.plan().into_iter().enumerate() {
        c.step(step, e, e.level.unsigned_abs() <= m_small)?;
    }
    Ok(c.finish())
}

/// Level-indexed growth from the top: the base, then levels `M+1, ..., t_max`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub aggregate: Aggregate,
    /// `(t, #sites after level t)` for `t = M, ..., t_max`.
    pub marks: Vec<(i32, usize)>,
}

impl Trajectory {
    /// Sites of the aggregate after level `t` was emitted.
    pub fn at(&self, t: i32) -> Option<&[Site]> {
        self.marks
            .iter()
            .find(|(level, _)| *level == t)
            .map(|&(_, len)| &self.aggregate.sites()[..len])
    }

    /// Highest occupied ordinate after each level, `None` while empty.
    pub fn tops(&self) -> Vec<(i32, Option<i32>)> {
        let sites = self.aggregate.sites();
        let mut top: Option<i32> = None;
        let mut seen = 0;
        self.marks
            .iter()
            .map(|&(t, len)| {
                for s in &sites[seen..len] {
                    top = Some(top.map_or(s.y, |m| m.max(s.y)));
                }
                seen = len;
                (t, top)
            })
            .collect()
    }

    /// Excess heights `h_t = top - t`; `None` while the aggregate is empty.
    pub fn heights(&self) -> Vec<(i32, Option<i64>)> {
        self.tops()
            .into_iter()
            .map(|(t, top)| (t, top.map(|y| y as i64 - t as i64)))
            .collect()
    }
}

/// Which aggregate the upward growth starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpwardBase {
    /// The usual-order aggregate of levels `[-M, M]`.
    Truncation,
    Empty,
}

fn upward_plan(spec: &GrowthSpec, from: i32, to: i32) -> Vec<Emission> {
    (from..=to)
        .flat_map(|level| (1..=upward_count(spec, level)).map(move |j| Emission::new(level, j)))
        .collect()
}

fn upward_base_plan(spec: &GrowthSpec) -> Vec<Emission> {
    let usual = GrowthSpec {
        variant: match spec.variant {
            Variant::PoissonClock => Variant::PoissonUsual,
            Variant::Classical => Variant::Deterministic,
            v => v,
        },
        ..spec.clone()
    };
    usual.plan()
}

/// Particle count of upward level `t` under the spec's variant.
pub fn upward_count(spec: &GrowthSpec, t: i32) -> u32 {
    if spec.variant.is_poisson() {
        level_count(spec.seed, t, spec.n as f64)
    } else {
        spec.n
    }
}

/// Grows upward from the base by sending the particles of levels
/// `M+1, ..., t_max` one level at a time.
pub fn grow_upward(spec: &GrowthSpec, base: UpwardBase, t_max: i32) -> Result<Trajectory> {
    grow_upward_counts(spec, base, t_max, &|t| upward_count(spec, t))
}

/// Same as [`grow_upward`] with the particle count of each upward level
/// given explicitly.
pub fn grow_upward_counts(
    spec: &GrowthSpec,
    base: UpwardBase,
    t_max: i32,
    counts: &dyn Fn(i32) -> u32,
) -> Result<Trajectory> {
    spec.validate()?;
    let m = spec.m as i32;
    if t_max < m {
        return Err(Error::config("t_max must be at least M"));
    }
    let mut engine = Engine::new(spec);
    if base == UpwardBase::Truncation {
        for e in upward_base_plan(spec) {
            engine.emit(e)?;
        }
    }
    let mut marks = vec![(m, engine.aggregate().len())];
    for t in m + 1..=t_max {
        for j in 1..=counts(t) {
            engine.emit(Emission::new(t, j))?;
        }
        marks.push((t, engine.aggregate().len()));
    }
    Ok(Trajectory {
        aggregate: engine.finish().aggregate,
        marks,
    })
}

/// The coupled pair `(A_{n,M}(t), B_{n,M}(t))`: same upward particles, with
/// and without the base. Returns both trajectories and the log of
/// `Δ(t) = A(t) \ B(t)`.
pub fn couple_upward(spec: &GrowthSpec, t_max: i32) -> Result<(Trajectory, Trajectory, DiscrepancyLog)> {
    spec.validate()?;
    let m = spec.m as i32;
    if t_max < m {
        return Err(Error::config("t_max must be at least M"));
    }
    let mut c = Coupled::new(Engine::new(spec), Engine::new(spec));
    let mut step = 0;
    for e in upward_base_plan(spec) {
        c.step(step, e, false)?;
        step += 1;
    }
    let mut marks_a = vec![(m, c.large.aggregate().len())];
    let mut marks_b = vec![(m, c.small.aggregate().len())];
    for t in m + 1..=t_max {
        for e in upward_plan(spec, t, t) {
            c.step(step, e, true)?;
            step += 1;
        }
        marks_a.push((t, c.large.aggregate().len()));
        marks_b.push((t, c.small.aggregate().len()));
    }
    let (b, a, log) = c.finish();
    Ok((
        Trajectory {
            aggregate: a.aggregate,
            marks: marks_a,
        },
        Trajectory {
            aggregate: b.aggregate,
            marks: marks_b,
        },
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle() {
        let a = build_deterministic(&GrowthSpec::new(Variant::Deterministic, 1, 0, 1)).unwrap();
        assert_eq!(a.sites(), &[Site::ORIGIN]);
        assert!(a.provenance(Site::ORIGIN).unwrap().predecessor.is_none());
    }

    #[test]
    fn deterministic_size_and_sources() {
        for seed in 0..10 {
            let a = build_deterministic(&GrowthSpec::new(Variant::Deterministic, 3, 2, seed)).unwrap();
            assert_eq!(a.len(), 15);
            a.check().unwrap();
        }
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let spec = GrowthSpec::new(Variant::PoissonClock, 3, 2, 0);
        assert!(matches!(build_deterministic(&spec), Err(Error::Config(_))));
        assert!(matches!(
            grow(&GrowthSpec::new(Variant::Deterministic, 0, 2, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn empty_plan_gives_empty_aggregate() {
        let spec = GrowthSpec::new(Variant::PoissonUsual, 1, 3, 0);
        let run = grow_plan(&spec, &plan_from_counts(&[(0, 0), (1, 0), (-1, 0)])).unwrap();
        assert!(run.aggregate.is_empty());
        let spec = GrowthSpec::new(Variant::PoissonClock, 1, 3, 0);
        assert!(grow_plan(&spec, &[]).unwrap().aggregate.is_empty());
    }

    #[test]
    fn conditioned_single_poisson_particle() {
        let spec = GrowthSpec::new(Variant::PoissonUsual, 1, 0, 0);
        let run = grow_plan(&spec, &plan_from_counts(&[(0, 1)])).unwrap();
        assert_eq!(run.aggregate.sites(), &[Site::ORIGIN]);
    }

    #[test]
    fn clock_schedule_is_sorted_and_counted() {
        let s = ClockSchedule::draw(9, -5..=5, 6.0);
        assert!(s.events.windows(2).all(|w| w[0].time.unwrap() < w[1].time.unwrap()));
        for (&level, &c) in &s.counts {
            assert_eq!(s.events.iter().filter(|e| e.level == level).count() as u32, c);
        }
        assert!(s.events.iter().all(|e| e.time.unwrap() <= 6.0));
    }

    #[test]
    fn poisson_variants_send_the_same_particles() {
        let u = GrowthSpec::new(Variant::PoissonUsual, 4, 6, 17).plan();
        let c = GrowthSpec::new(Variant::PoissonClock, 4, 6, 17).plan();
        let key = |p: &Vec<Emission>| {
            let mut v: Vec<_> = p.iter().map(|e| (e.level, e.index)).collect();
            v.sort();
            v
        };
        assert_eq!(key(&u), key(&c));
    }

    #[test]
    fn clock_run_records_birth_times() {
        let a = build_poisson_clock(&GrowthSpec::new(Variant::PoissonClock, 3, 4, 5)).unwrap();
        assert!(a.iter().all(|(_, p)| p.birth_time.is_some()));
        let times: Vec<f64> = a.iter().map(|(_, p)| p.birth_time.unwrap()).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        a.check().unwrap();
    }

    #[test]
    fn abelian_under_permutation() {
        for seed in 0..5 {
            let spec = GrowthSpec::new(Variant::Deterministic, 3, 4, seed);
            let plan = spec.plan();
            let base = grow_plan(&spec, &plan).unwrap().aggregate.site_set();
            for tag in 0..3 {
                let shuffled = shuffle_plan(&plan, seed, tag);
                assert_ne!(shuffled, plan);
                assert_eq!(grow_plan(&spec, &shuffled).unwrap().aggregate.site_set(), base);
            }
        }
    }

    #[test]
    fn equal_truncations_have_no_discrepancy() {
        let spec = GrowthSpec::new(Variant::PoissonClock, 3, 0, 4);
        let (a, b, log) = grow_coupled_pair(&spec, 5, 5).unwrap();
        assert!(log.is_empty());
        assert_eq!(a.site_set(), b.site_set());
    }

    #[test]
    fn coupled_inclusion() {
        for variant in [Variant::Deterministic, Variant::PoissonUsual, Variant::PoissonClock] {
            for seed in 0..10 {
                let spec = GrowthSpec::new(variant, 3, 0, seed);
                let (small, large, log) = grow_coupled_pair(&spec, 2, 5).unwrap();
                assert!(log.inclusion_held);
                assert!(small.sites().iter().all(|&s| large.contains(s)));
                let diff: BTreeSet<Site> = large.site_set().difference(&small.site_set()).copied().collect();
                assert_eq!(diff, log.final_set);
                // Chains partition the final discrepancy set.
                let tails: BTreeSet<Site> = log.chains.iter().filter_map(|c| c.relays.last().copied()).collect();
                assert!(log.final_set.is_subset(&tails));
            }
        }
    }

    #[test]
    fn upward_trivial_cases() {
        let spec = GrowthSpec::new(Variant::PoissonUsual, 2, 3, 1);
        let traj = grow_upward(&spec, UpwardBase::Truncation, 3).unwrap();
        assert_eq!(traj.marks.len(), 1);
        assert_eq!(traj.at(3).unwrap().len(), build_poisson_usual(&spec).unwrap().len());
        assert!(grow_upward(&spec, UpwardBase::Empty, 2).is_err());
    }

    #[test]
    fn upward_forced_empty() {
        let spec = GrowthSpec::new(Variant::PoissonUsual, 2, 3, 1);
        let traj = grow_upward_counts(&spec, UpwardBase::Empty, 10, &|_| 0).unwrap();
        assert!(traj.marks.iter().all(|&(_, len)| len == 0));
        assert!(traj.heights().iter().all(|(_, h)| h.is_none()));
        let traj = grow_upward_counts(&spec, UpwardBase::Truncation, 10, &|_| 0).unwrap();
        let hs = traj.heights();
        assert!(hs.windows(2).all(|w| w[1].1.unwrap() - w[0].1.unwrap() == -1));
    }

    #[test]
    fn upward_deterministic_bookkeeping() {
        let spec = GrowthSpec::new(Variant::Deterministic, 3, 2, 8);
        let traj = grow_upward(&spec, UpwardBase::Truncation, 12).unwrap();
        for &(t, len) in &traj.marks {
            assert_eq!(len, 15 + 3 * (t - 2) as usize);
        }
        let hs = traj.heights();
        assert!(hs.windows(2).all(|w| w[1].1.unwrap() - w[0].1.unwrap() >= -1));
    }

    #[test]
    fn upward_coupling_keeps_delta_size() {
        for seed in 0..5 {
            let spec = GrowthSpec::new(Variant::PoissonUsual, 3, 4, seed);
            let base = build_poisson_usual(&spec).unwrap().len();
            let (a, b, log) = couple_upward(&spec, 30).unwrap();
            assert!(log.inclusion_held);
            for (ma, mb) in a.marks.iter().zip(&b.marks) {
                assert_eq!(ma.1 - mb.1, base);
            }
            assert_eq!(log.final_set.len(), base);
            assert!(b.aggregate.sites().iter().all(|&s| a.aggregate.contains(s)));
        }
    }
}
