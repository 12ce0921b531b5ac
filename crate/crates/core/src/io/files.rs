use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestDiff, Node, Side};
use crate::growth::{Aggregate, AggregateParams, Provenance, Variant};
use crate::lattice::Site;
use crate::random::RandomSource;

pub const AGGREGATE_TAG: &str = "#idla-aggregate v1";
pub const FOREST_TAG: &str = "#idla-forest v1";

const AGGREGATE_COLUMNS: &str = "# columns: x y birth_index source_level birth_time";
const FOREST_COLUMNS: &str = "# columns: x y parent_x parent_y birth_index source_level birth_time";
const EMPTY: &str = "-";

fn write_header(out: &mut String, tag: &str, p: &AggregateParams, columns: &str) {
    writeln!(out, "{tag}").unwrap();
    writeln!(out, "# variant={}", p.variant).unwrap();
    writeln!(out, "# n={}", p.n).unwrap();
    writeln!(out, "# M={}", p.m).unwrap();
    writeln!(out, "# seed={}", p.seed).unwrap();
    writeln!(out, "# randomness={}", p.source.name()).unwrap();
    writeln!(out, "{columns}").unwrap();
}

fn time_field(t: Option<f64>) -> String {
    t.map_or(EMPTY.to_string(), |t| t.to_string())
}

/// Serializes an aggregate, one row per site in birth order.
pub fn write_aggregate(agg: &Aggregate) -> String {
    let mut out = String::new();
    write_header(&mut out, AGGREGATE_TAG, &agg.params, AGGREGATE_COLUMNS);
    for (s, p) in agg.iter() {
        writeln!(
            out,
            "{} {} {} {} {}",
            s.x,
            s.y,
            p.birth_index,
            p.source_level,
            time_field(p.birth_time)
        )
        .unwrap();
    }
    out
}

/// Serializes a forest, one row per vertex in birth order.
pub fn write_forest(f: &Forest) -> String {
    let mut out = String::new();
    write_header(&mut out, FOREST_TAG, &f.params, FOREST_COLUMNS);
    let mut nodes: Vec<&Node> = f.nodes().iter().collect();
    nodes.sort_by_key(|n| n.birth_index);
    for n in nodes {
        let (px, py) = match n.parent {
            Some(p) => (p.x.to_string(), p.y.to_string()),
            None => (EMPTY.to_string(), EMPTY.to_string()),
        };
        writeln!(
            out,
            "{} {} {px} {py} {} {} {}",
            n.site.x,
            n.site.y,
            n.birth_index,
            n.source_level,
            time_field(n.birth_time)
        )
        .unwrap();
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        self.inner.next().map(|(i, l)| (i + 1, l))
    }
}

fn parse_header<'a>(text: &'a str, tag: &str, columns: &str) -> Result<(AggregateParams, Lines<'a>)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    match lines.next_line() {
        Some((_, l)) if l == tag => {}
        Some((i, l)) => return Err(Error::parse(i, format!("expected {tag:?}, found {l:?}"))),
        None => return Err(Error::parse(1, "empty input")),
    }
    let mut fields: [Option<String>; 5] = Default::default();
    const KEYS: [&str; 5] = ["variant", "n", "M", "seed", "randomness"];
    loop {
        let (i, line) = lines
            .next_line()
            .ok_or_else(|| Error::parse(0, "missing columns line"))?;
        if line == columns {
            break;
        }
        let kv = line
            .strip_prefix("# ")
            .and_then(|r| r.split_once('='))
            .ok_or_else(|| Error::parse(i, format!("expected '# key=value', found {line:?}")))?;
        let slot = KEYS
            .iter()
            .position(|k| *k == kv.0)
            .ok_or_else(|| Error::parse(i, format!("unknown key {:?}", kv.0)))?;
        if fields[slot].replace(kv.1.to_string()).is_some() {
            return Err(Error::parse(i, format!("duplicate key {:?}", kv.0)));
        }
    }
    let get = |j: usize| {
        fields[j]
            .as_deref()
            .ok_or_else(|| Error::parse(0, format!("missing key {}", KEYS[j])))
    };
    let num = |j: usize| -> Result<u64> {
        get(j)?
            .parse::<u64>()
            .map_err(|e| Error::parse(0, format!("bad {}: {e}", KEYS[j])))
    };
    let params = AggregateParams {
        variant: Variant::parse(get(0)?).ok_or_else(|| Error::parse(0, "unknown variant"))?,
        n: u32::try_from(num(1)?).map_err(|_| Error::parse(0, "n out of range"))?,
        m: u32::try_from(num(2)?).map_err(|_| Error::parse(0, "M out of range"))?,
        seed: num(3)?,
        source: RandomSource::parse(get(4)?).ok_or_else(|| Error::parse(0, "unknown randomness"))?,
    };
    Ok((params, lines))
}

fn int<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field
        .parse::<T>()
        .map_err(|e| Error::parse(line, format!("bad {what} {field:?}: {e}")))
}

fn time(line: usize, field: &str) -> Result<Option<f64>> {
    if field == EMPTY {
        return Ok(None);
    }
    let t: f64 = int(line, field, "birth time")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::parse(line, format!("birth time {field} is not a finite nonnegative number")));
    }
    Ok(Some(t))
}

fn rows<'a>(mut lines: Lines<'a>, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut out = Vec::new();
    while let Some((i, line)) = lines.next_line() {
        let f: Vec<&str> = line.split(' ').collect();
        if f.len() != width || f.iter().any(|x| x.is_empty()) {
            return Err(Error::parse(i, format!("expected {width} space-separated fields")));
        }
        out.push((i, f));
    }
    Ok(out)
}

pub fn parse_aggregate(text: &str) -> Result<Aggregate> {
    let (params, lines) = parse_header(text, AGGREGATE_TAG, AGGREGATE_COLUMNS)?;
    let mut parsed = Vec::new();
    for (i, f) in rows(lines, 5)? {
        let site = Site::new(int(i, f[0], "x")?, int(i, f[1], "y")?);
        let prov = Provenance {
            birth_index: int(i, f[2], "birth index")?,
            source_level: int(i, f[3], "source level")?,
            level_index: 0,
            birth_time: time(i, f[4])?,
            predecessor: None,
        };
        if prov.birth_index as usize != parsed.len() + 1 {
            return Err(Error::parse(i, "birth indices must be 1, 2, 3, ... in order"));
        }
        parsed.push((site, prov));
    }
    Aggregate::from_parts(params, parsed)
}

pub fn parse_forest(text: &str) -> Result<Forest> {
    let (params, lines) = parse_header(text, FOREST_TAG, FOREST_COLUMNS)?;
    let mut nodes = Vec::new();
    for (i, f) in rows(lines, 7)? {
        let parent = match (f[2], f[3]) {
            (EMPTY, EMPTY) => None,
            (EMPTY, _) | (_, EMPTY) => return Err(Error::parse(i, "half-empty parent")),
            (px, py) => Some(Site::new(int(i, px, "parent x")?, int(i, py, "parent y")?)),
        };
        let birth_index: u32 = int(i, f[4], "birth index")?;
        if birth_index as usize != nodes.len() + 1 {
            return Err(Error::parse(i, "birth indices must be 1, 2, 3, ... in order"));
        }
        nodes.push(Node {
            site: Site::new(int(i, f[0], "x")?, int(i, f[1], "y")?),
            parent,
            birth_index,
            source_level: int(i, f[5], "source level")?,
            birth_time: time(i, f[6])?,
        });
    }
    let f = Forest::from_nodes(params, nodes).map_err(|e| Error::parse(0, e.to_string()))?;
    f.validate().map_err(|e| Error::parse(0, e))?;
    Ok(f)
}

/// CSV listing of a forest diff with columns
/// `kind,x,y,in_first,in_second,first_parent_x,first_parent_y,second_parent_x,second_parent_y`.
pub fn diff_to_csv(diff: &ForestDiff) -> String {
    let mut out =
        String::from("kind,x,y,in_first,in_second,first_parent_x,first_parent_y,second_parent_x,second_parent_y\n");
    let parent = |p: Option<Site>| p.map_or(",".to_string(), |p| format!("{},{}", p.x, p.y));
    for (s, side) in &diff.vertex_discrepancies {
        let (a, b) = match side {
            Side::First => (1, 0),
            Side::Second => (0, 1),
        };
        writeln!(out, "vertex,{},{},{a},{b},,,,", s.x, s.y).unwrap();
    }
    for e in &diff.edge_discrepancies {
        writeln!(out, "edge,{},{},1,1,{},{}", e.site.x, e.site.y, parent(e.first), parent(e.second)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::build_forest;
    use crate::growth::{build_deterministic, build_poisson_clock, GrowthSpec};

    #[test]
    fn aggregate_round_trip() {
        let a = build_poisson_clock(&GrowthSpec::new(Variant::PoissonClock, 3, 4, 2)).unwrap();
        let text = write_aggregate(&a);
        let b = parse_aggregate(&text).unwrap();
        assert_eq!(a.sites(), b.sites());
        assert_eq!(a.params, b.params);
        assert_eq!(write_aggregate(&b), text);
    }

    #[test]
    fn deterministic_rows_have_no_time() {
        let a = build_deterministic(&GrowthSpec::new(Variant::Deterministic, 1, 0, 1)).unwrap();
        let text = write_aggregate(&a);
        assert!(text.ends_with("\n0 0 1 0 -\n"));
    }

    #[test]
    fn forest_round_trip() {
        let a = build_poisson_clock(&GrowthSpec::new(Variant::PoissonClock, 4, 6, 9)).unwrap();
        let f = build_forest(&a).unwrap();
        let text = write_forest(&f);
        let g = parse_forest(&text).unwrap();
        assert_eq!(f.nodes(), g.nodes());
        assert_eq!(write_forest(&g), text);
    }

    #[test]
    fn strictness() {
        let a = build_deterministic(&GrowthSpec::new(Variant::Deterministic, 2, 1, 1)).unwrap();
        let text = write_aggregate(&a);
        assert!(parse_aggregate(&text.replace("v1", "v2")).is_err());
        assert!(parse_aggregate(&format!("{text}garbage\n")).is_err());
        assert!(parse_aggregate(&format!("{text}\n")).is_err());
        assert!(parse_aggregate(&text.replace("# n=2\n", "")).is_err());
        assert!(parse_aggregate(&text.replace("# seed=1", "# seed=1\n# seed=1")).is_err());
        assert!(parse_forest(&text).is_err());
        assert!(parse_aggregate("").is_err());
        let f = build_forest(&build_poisson_clock(&GrowthSpec::new(Variant::PoissonClock, 3, 4, 2)).unwrap()).unwrap();
        let text = write_forest(&f);
        let (child, parent) = f.edges().next().unwrap();
        let row = format!("\n{} {} {} {} ", child.x, child.y, parent.x, parent.y);
        let far = format!("\n{} {} {} {} ", child.x, child.y, parent.x + 5, parent.y);
        assert!(text.contains(&row));
        assert!(parse_forest(&text.replace(&row, &far)).is_err());
    }
}
