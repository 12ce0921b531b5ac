//! Geometry of the square lattice: sites, unit steps and the regions
//! (strips, rectangles, half-planes) that experiments monitor.

use std::cmp::Ordering;
use std::fmt;

use rustc_hash::FxHashSet;

/// A point of the square lattice. `y` is the level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    #[inline]
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    /// The source `(0, level)` on the vertical axis.
    #[inline]
    pub const fn source(level: i32) -> Self {
        Site { x: 0, y: level }
    }

    #[inline]
    pub fn step(self, dir: Direction) -> Site {
        let (dx, dy) = dir.offset();
        Site::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors(self) -> [Site; 4] {
        Direction::ALL.map(|d| self.step(d))
    }

    #[inline]
    pub fn l1_distance(self, other: Site) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    #[inline]
    pub fn is_adjacent(self, other: Site) -> bool {
        self.l1_distance(other) == 1
    }

    /// Vertical translation by `k`.
    #[inline]
    pub fn translate(self, k: i32) -> Site {
        Site::new(self.x, self.y + k)
    }

    /// Reflection through the horizontal line `y = k/2`.
    #[inline]
    pub fn reflect_horizontal(self, k: i32) -> Site {
        Site::new(self.x, k - self.y)
    }

    /// Reflection through the vertical axis.
    #[inline]
    pub fn reflect_vertical_axis(self) -> Site {
        Site::new(-self.x, self.y)
    }
}

impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// One of the four unit steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    East,
    West,
    North,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::West,
        Direction::North,
        Direction::South,
    ];

    #[inline]
    pub fn from_bits(bits: u64) -> Direction {
        Self::ALL[(bits & 3) as usize]
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Direction::East => 0,
            Direction::West => 1,
            Direction::North => 2,
            Direction::South => 3,
        }
    }

    #[inline]
    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
            Direction::North => (0, 1),
            Direction::South => (0, -1),
        }
    }
}

/// A predicate over sites.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Horizontal strip `Z x [-k, k]`.
    Strip(i32),
    /// Horizontal strip `Z x [lo, hi]`.
    Rows { lo: i32, hi: i32 },
    /// Vertical rectangle `[-r, r] x Z`.
    Rectangle(i32),
    /// Half-plane `y >= k`.
    Above(i32),
    /// Half-plane `y <= k`.
    Below(i32),
    /// An explicit finite set.
    Sites(FxHashSet<Site>),
    /// Every site.
    All,
}

impl Region {
    pub fn sites<I: IntoIterator<Item = Site>>(sites: I) -> Self {
        Region::Sites(sites.into_iter().collect())
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        match self {
            Region::Strip(k) => s.y.abs() <= *k,
            Region::Rows { lo, hi } => *lo <= s.y && s.y <= *hi,
            Region::Rectangle(r) => s.x.abs() <= *r,
            Region::Above(k) => s.y >= *k,
            Region::Below(k) => s.y <= *k,
            Region::Sites(set) => set.contains(&s),
            Region::All => true,
        }
    }
}

/// The closed Euclidean ball `B(center, r)` intersected with the lattice.
pub fn ball(center: Site, r: f64) -> Vec<Site> {
    let ri = r.floor() as i32;
    let mut out = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            if ((dx * dx + dy * dy) as f64) <= r * r {
                out.push(Site::new(center.x + dx, center.y + dy));
            }
        }
    }
    out
}

/// Order of emission levels `0, 1, -1, 2, -2, ..., m, -m`.
pub fn usual_levels(m: i32) -> impl Iterator<Item = i32> {
    std::iter::once(0).chain((1..=m).flat_map(|i| [i, -i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_row_major() {
        let mut v = vec![Site::new(3, 1), Site::new(-5, 0), Site::new(0, 1)];
        v.sort();
        assert_eq!(v, vec![Site::new(-5, 0), Site::new(0, 1), Site::new(3, 1)]);
    }

    #[test]
    fn steps_are_unit() {
        for d in Direction::ALL {
            assert!(Site::ORIGIN.step(d).is_adjacent(Site::ORIGIN));
        }
        assert_eq!(Direction::from_bits(6), Direction::North);
    }

    #[test]
    fn regions() {
        assert!(Region::Strip(2).contains(Site::new(100, -2)));
        assert!(!Region::Strip(2).contains(Site::new(0, 3)));
        assert!(Region::Rectangle(1).contains(Site::new(-1, 77)));
        assert!(Region::Above(4).contains(Site::new(0, 4)));
        assert!(!Region::Below(4).contains(Site::new(0, 5)));
    }

    #[test]
    fn reflections() {
        let s = Site::new(2, 3);
        assert_eq!(s.reflect_horizontal(0), Site::new(2, -3));
        assert_eq!(s.reflect_horizontal(4), Site::new(2, 1));
        assert_eq!(s.reflect_vertical_axis(), Site::new(-2, 3));
    }

    #[test]
    fn usual_order() {
        let v: Vec<_> = usual_levels(2).collect();
        assert_eq!(v, vec![0, 1, -1, 2, -2]);
        assert_eq!(ball(Site::ORIGIN, 1.0).len(), 5);
    }
}
