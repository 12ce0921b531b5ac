use crate::error::{Error, Result};
use crate::lattice::Site;

/// Parses `(x,y)`; spaces are allowed around the numbers.
pub fn parse_site(s: &str) -> Result<Site> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::parse(1, format!("expected (x,y), got {s:?}")))?;
    let (x, y) = inner
        .split_once(',')
        .ok_or_else(|| Error::parse(1, format!("expected (x,y), got {s:?}")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<i32>()
            .map_err(|e| Error::parse(1, format!("bad coordinate {t:?}: {e}")))
    };
    Ok(Site::new(num(x)?, num(y)?))
}

/// Parses a list of sites such as `(6,0) (8,1);(-8,5)`. Separators between
/// sites may be whitespace, commas or semicolons.
pub fn parse_sites(s: &str) -> Result<Vec<Site>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if !rest.starts_with('(') {
            return Err(Error::parse(1, format!("unexpected text {rest:?}")));
        }
        let end = rest
            .find(')')
            .ok_or_else(|| Error::parse(1, "unclosed parenthesis"))?;
        out.push(parse_site(&rest[..=end])?);
        rest = rest[end + 1..].trim_start_matches(|c: char| c.is_whitespace() || c == ',' || c == ';');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sites() {
        assert_eq!(parse_site("(6,0)").unwrap(), Site::new(6, 0));
        assert_eq!(parse_site(" ( -3 , 7 ) ").unwrap(), Site::new(-3, 7));
        assert_eq!(
            parse_sites("(6,0) (8,1);(-8,5),(0,0)").unwrap(),
            vec![Site::new(6, 0), Site::new(8, 1), Site::new(-8, 5), Site::new(0, 0)]
        );
        assert!(parse_sites("").unwrap().is_empty());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["6,0", "(6,0", "(6;0)", "(a,0)", "(1,2)x", "(1,2,3)"] {
            assert!(parse_sites(bad).is_err(), "{bad}");
        }
    }
}
