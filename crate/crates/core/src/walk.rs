//! Single-particle walks against a growing occupied set.

use crate::error::{Error, Result};
use crate::lattice::{Direction, Region, Site};
use crate::random::{stack_block, stack_direction, ParticleStream, RandomSource};

/// Default hard cap on the number of steps of one walk.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000_000;

/// Dense storage over a rectangular window of the lattice that grows on
/// demand. Reads outside the window return `T::default()`.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    x0: i32,
    y0: i32,
    width: usize,
    height: usize,
    cells: Vec<T>,
}

impl<T> Grid<T> {
    fn same_window<U>(&self, other: &Grid<U>) -> bool {
        self.x0 == other.x0
            && self.y0 == other.y0
            && self.width == other.width
            && self.height == other.height
    }

    fn bounds(&self) -> (i32, i32, i32, i32) {
        (
            self.x0,
            self.x0 + self.width as i32 - 1,
            self.y0,
            self.y0 + self.height as i32 - 1,
        )
    }
}

impl<T: Copy + Default> Grid<T> {
    pub fn new(x_range: (i32, i32), y_range: (i32, i32)) -> Self {
        let width = (x_range.1 - x_range.0 + 1).max(1) as usize;
        let height = (y_range.1 - y_range.0 + 1).max(1) as usize;
        Grid {
            x0: x_range.0,
            y0: y_range.0,
            width,
            height,
            cells: vec![T::default(); width * height],
        }
    }

    #[inline]
    pub fn index(&self, s: Site) -> Option<usize> {
        let dx = s.x.wrapping_sub(self.x0) as u32 as usize;
        let dy = s.y.wrapping_sub(self.y0) as u32 as usize;
        (dx < self.width && dy < self.height).then(|| dy * self.width + dx)
    }

    #[inline]
    pub fn get(&self, s: Site) -> T {
        self.index(s).map_or_else(T::default, |i| self.cells[i])
    }

    /// Grows the window so that every site within `margin` of `s` is inside.
    pub fn ensure(&mut self, s: Site, margin: i32) {
        let (xl, xh, yl, yh) = self.bounds();
        if s.x - margin >= xl && s.x + margin <= xh && s.y - margin >= yl && s.y + margin <= yh {
            return;
        }
        let grow_x = (self.width as i32 / 2).max(16);
        let grow_y = (self.height as i32 / 2).max(16);
        let nxl = if s.x - margin < xl { (s.x - margin).min(xl - grow_x) } else { xl };
        let nxh = if s.x + margin > xh { (s.x + margin).max(xh + grow_x) } else { xh };
        let nyl = if s.y - margin < yl { (s.y - margin).min(yl - grow_y) } else { yl };
        let nyh = if s.y + margin > yh { (s.y + margin).max(yh + grow_y) } else { yh };
        self.reshape((nxl, nxh), (nyl, nyh));
    }

    fn reshape(&mut self, x_range: (i32, i32), y_range: (i32, i32)) {
        let mut next = Grid::new(x_range, y_range);
        for row in 0..self.height {
            let y = self.y0 + row as i32;
            let dst = next.index(Site::new(self.x0, y)).expect("window only grows");
            let src = row * self.width;
            next.cells[dst..dst + self.width].copy_from_slice(&self.cells[src..src + self.width]);
        }
        *self = next;
    }

    /// Grows the window to cover `other`'s window.
    fn cover<U>(&mut self, other: &Grid<U>) {
        if !self.same_window(other) {
            let (xl, xh, yl, yh) = other.bounds();
            let (sxl, sxh, syl, syh) = self.bounds();
            self.reshape((xl.min(sxl), xh.max(sxh)), (yl.min(syl), yh.max(syh)));
        }
    }
}

/// The occupied sites of a growing aggregate. Each cell holds the 1-based
/// birth index of its site, 0 when vacant.
#[derive(Clone, Debug)]
pub struct Occupancy {
    grid: Grid<u32>,
    len: u32,
}

impl Occupancy {
    pub fn new() -> Self {
        Self::with_window((-8, 8), (-8, 8))
    }

    /// Pre-sizes the window; it still grows as needed.
    pub fn with_window(x_range: (i32, i32), y_range: (i32, i32)) -> Self {
        Occupancy {
            grid: Grid::new(x_range, y_range),
            len: 0,
        }
    }

    pub fn from_sites<I: IntoIterator<Item = Site>>(sites: I) -> Self {
        let mut occ = Occupancy::new();
        for s in sites {
            if !occ.contains(s) {
                occ.occupy(s);
            }
        }
        occ
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.grid.get(s) != 0
    }

    pub fn birth_index(&self, s: Site) -> Option<u32> {
        match self.grid.get(s) {
            0 => None,
            b => Some(b),
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Marks `s` occupied and returns its birth index.
    pub fn occupy(&mut self, s: Site) -> u32 {
        debug_assert!(!self.contains(s));
        self.grid.ensure(s, 2);
        self.len += 1;
        let i = self.grid.index(s).expect("ensured");
        self.grid.cells[i] = self.len;
        self.len
    }
}

impl Default for Occupancy {
    fn default() -> Self {
        Self::new()
    }
}

/// Randomness substrate of a run: the master seed, the step source and the
/// per-site consumption counters of the direction stacks.
#[derive(Clone, Debug)]
pub struct StackField {
    seed: u64,
    source: RandomSource,
    counters: Grid<StackCursor>,
}

/// Read position in one site's stack, with the 32-entry block it falls in.
#[derive(Clone, Copy, Debug, Default)]
struct StackCursor {
    block: u64,
    next: u32,
}

impl StackField {
    pub fn new(seed: u64) -> Self {
        Self::with_source(seed, RandomSource::Stacks)
    }

    pub fn with_source(seed: u64, source: RandomSource) -> Self {
        StackField {
            seed,
            source,
            counters: Grid::new((0, 0), (0, 0)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> RandomSource {
        self.source
    }

    /// Entry `k` of the stack at `site`; does not consume anything.
    #[inline]
    pub fn direction(&self, site: Site, k: u32) -> Direction {
        stack_direction(self.seed, site, k)
    }

    /// How many entries of the stack at `site` were consumed so far.
    pub fn consumed(&self, site: Site) -> u32 {
        self.counters.get(site).next
    }
}

/// Identity of a particle: the `index`-th (1-based) particle from `level`.
/// Only the stream source uses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParticleKey {
    pub level: i32,
    pub index: u32,
}

#[derive(Clone, Debug)]
pub struct WalkOptions {
    pub max_steps: u64,
    pub record_path: bool,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            max_steps: DEFAULT_MAX_STEPS,
            record_path: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkOutcome {
    pub settled: Site,
    /// Last occupied site visited before settling; `None` iff the particle
    /// settled at its start.
    pub penultimate: Option<Site>,
    pub path_length: u64,
    /// One flag per monitored region: did any visited site lie in it.
    pub visited: Vec<bool>,
    /// Full path including start and settled site, when recorded.
    pub path: Option<Vec<Site>>,
}

/// Runs one walker from `start` until it steps off `occupied`. The settled
/// site is not added to `occupied`; the caller decides that.
pub fn settle_particle(
    occupied: &Occupancy,
    start: Site,
    field: &mut StackField,
    particle: ParticleKey,
    monitors: &[Region],
    opts: &WalkOptions,
) -> Result<WalkOutcome> {
    let mut visited: Vec<bool> = monitors.iter().map(|r| r.contains(start)).collect();
    let mut path = opts.record_path.then(|| vec![start]);
    if !occupied.contains(start) {
        return Ok(WalkOutcome {
            settled: start,
            penultimate: None,
            path_length: 0,
            visited,
            path,
        });
    }

    let grid = &occupied.grid;
    field.counters.cover(grid);
    let width = grid.width as isize;
    let offsets: [isize; 4] = [1, -1, width, -width];
    let cwidth = field.counters.width as isize;
    let coffsets: [isize; 4] = [1, -1, cwidth, -cwidth];
    let mut cidx = field.counters.index(start).expect("counters cover the window") as isize;
    let mut stream = match field.source {
        RandomSource::Streams => Some(ParticleStream::new(field.seed, particle.level, particle.index)),
        RandomSource::Stacks => None,
    };
    let seed = field.seed;
    let counters = &mut field.counters.cells;
    let cells = &grid.cells;

    let mut pos = start;
    let mut idx = grid.index(start).expect("occupied sites lie in the window") as isize;
    let mut steps: u64 = 0;
    let watch = !monitors.is_empty();
    loop {
        let dir = match stream.as_mut() {
            Some(s) => s.next_direction(),
            None => {
                let c = &mut counters[cidx as usize];
                let k = c.next;
                if k & 31 == 0 {
                    c.block = stack_block(seed, pos, k >> 5);
                }
                c.next += 1;
                Direction::from_bits(c.block >> (2 * (k & 31)))
            }
        };
        let prev = pos;
        pos = pos.step(dir);
        idx += offsets[dir.index()];
        cidx += coffsets[dir.index()];
        steps += 1;
        if watch {
            for (flag, region) in visited.iter_mut().zip(monitors) {
                *flag = *flag || region.contains(pos);
            }
        }
        if let Some(p) = path.as_mut() {
            p.push(pos);
        }
        // The window keeps a margin of two around every occupied site, so a
        // neighbor of an occupied site is always addressable.
        if cells[idx as usize] == 0 {
            return Ok(WalkOutcome {
                settled: pos,
                penultimate: Some(prev),
                path_length: steps,
                visited,
                path,
            });
        }
        if steps >= opts.max_steps {
            return Err(Error::StepBudget {
                steps,
                start,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> ParticleKey {
        ParticleKey { level: 0, index: 1 }
    }

    #[test]
    fn empty_start_settles_immediately() {
        let occ = Occupancy::new();
        let mut f = StackField::new(1);
        let out = settle_particle(&occ, Site::ORIGIN, &mut f, key(), &[], &WalkOptions::default()).unwrap();
        assert_eq!(out.settled, Site::ORIGIN);
        assert_eq!(out.path_length, 0);
        assert!(out.penultimate.is_none());
        assert_eq!(f.consumed(Site::ORIGIN), 0);
    }

    #[test]
    fn one_site_exit_is_a_neighbor() {
        let occ = Occupancy::from_sites([Site::ORIGIN]);
        for seed in 0..50 {
            let mut f = StackField::new(seed);
            let out = settle_particle(&occ, Site::ORIGIN, &mut f, key(), &[], &WalkOptions::default()).unwrap();
            assert!(out.settled.is_adjacent(Site::ORIGIN));
            assert_eq!(out.path_length, 1);
            assert_eq!(out.penultimate, Some(Site::ORIGIN));
            assert_eq!(out.settled, Site::ORIGIN.step(f.direction(Site::ORIGIN, 0)));
            assert_eq!(f.consumed(Site::ORIGIN), 1);
        }
    }

    #[test]
    fn consecutive_walkers_read_successive_entries() {
        let occ = Occupancy::from_sites([Site::ORIGIN]);
        let mut f = StackField::new(42);
        let a = settle_particle(&occ, Site::ORIGIN, &mut f, key(), &[], &WalkOptions::default()).unwrap();
        let b = settle_particle(&occ, Site::ORIGIN, &mut f, key(), &[], &WalkOptions::default()).unwrap();
        assert_eq!(a.settled, Site::ORIGIN.step(f.direction(Site::ORIGIN, 0)));
        assert_eq!(b.settled, Site::ORIGIN.step(f.direction(Site::ORIGIN, 1)));
    }

    #[test]
    fn path_is_contained_and_adjacent() {
        let occ = Occupancy::from_sites((-5..=5).flat_map(|x| (-5..=5).map(move |y| Site::new(x, y))));
        for seed in 0..20 {
            let mut f = StackField::new(seed);
            let opts = WalkOptions { record_path: true, ..Default::default() };
            let out = settle_particle(&occ, Site::ORIGIN, &mut f, key(), &[Region::Strip(0)], &opts).unwrap();
            let path = out.path.unwrap();
            assert_eq!(path.len() as u64, out.path_length + 1);
            assert!(path[..path.len() - 1].iter().all(|s| occ.contains(*s)));
            assert!(!occ.contains(out.settled));
            assert!(path.windows(2).all(|w| w[0].is_adjacent(w[1])));
            assert!(out.settled.is_adjacent(out.penultimate.unwrap()));
            assert!(out.visited[0]);
        }
    }

    #[test]
    fn monitors_follow_the_path() {
        let occ = Occupancy::from_sites((0..=30).map(|y| Site::new(0, y)));
        let opts = WalkOptions { record_path: true, ..Default::default() };
        for seed in 0..40 {
            let mut f = StackField::new(seed);
            let regions = [Region::Above(3), Region::Below(-1)];
            let out = settle_particle(&occ, Site::new(0, 0), &mut f, key(), &regions, &opts).unwrap();
            let path = out.path.unwrap();
            assert_eq!(out.visited[0], path.iter().any(|s| s.y >= 3));
            assert_eq!(out.visited[1], path.iter().any(|s| s.y <= -1));
        }
    }

    #[test]
    fn step_budget_aborts() {
        let occ = Occupancy::from_sites((-30..=30).flat_map(|x| (-30..=30).map(move |y| Site::new(x, y))));
        let mut f = StackField::new(3);
        let opts = WalkOptions { max_steps: 10, record_path: false };
        let err = settle_particle(&occ, Site::ORIGIN, &mut f, key(), &[], &opts).unwrap_err();
        assert!(matches!(err, Error::StepBudget { steps: 10, .. }));
    }

    #[test]
    fn deterministic_replay() {
        let occ = Occupancy::from_sites((-4..=4).flat_map(|x| (-2..=2).map(move |y| Site::new(x, y))));
        for source in [RandomSource::Stacks, RandomSource::Streams] {
            let mut f1 = StackField::with_source(11, source);
            let mut f2 = StackField::with_source(11, source);
            let a = settle_particle(&occ, Site::ORIGIN, &mut f1, key(), &[], &WalkOptions::default()).unwrap();
            let b = settle_particle(&occ, Site::ORIGIN, &mut f2, key(), &[], &WalkOptions::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn grid_grows_and_keeps_contents() {
        let mut g: Grid<u32> = Grid::new((0, 1), (0, 1));
        let i = g.index(Site::new(1, 1)).unwrap();
        g.cells[i] = 9;
        g.ensure(Site::new(-40, 70), 2);
        assert_eq!(g.get(Site::new(1, 1)), 9);
        assert!(g.index(Site::new(-42, 72)).is_some());
        assert_eq!(g.get(Site::new(1000, 0)), 0);
    }
}
