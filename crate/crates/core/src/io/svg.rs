use std::fmt::Write as _;

use crate::lattice::Site;

/// Optional dashed outlines drawn over the picture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Guide {
    /// The strip `|y| <= k`.
    Strip(i32),
    /// The rectangle `|x| <= r`.
    Rectangle(i32),
}

#[derive(Clone, Debug)]
pub struct SvgOptions {
    /// Side of one lattice cell in pixels.
    pub cell: u32,
    pub guides: Vec<Guide>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            cell: 6,
            guides: Vec::new(),
        }
    }
}

/// Renders occupied sites as unit squares and each directed edge
/// `(child, parent)` as one `<line>` from parent to child ending in an
/// arrowhead. Guides are drawn as `<rect>` outlines.
pub fn render_svg(sites: &[Site], edges: &[(Site, Site)], opts: &SvgOptions) -> String {
    let c = opts.cell.max(1) as i64;
    let (mut x0, mut x1, mut y0, mut y1) = (0i64, 0i64, 0i64, 0i64);
    for s in sites.iter().chain(edges.iter().flat_map(|(a, b)| [a, b])) {
        x0 = x0.min(s.x as i64);
        x1 = x1.max(s.x as i64);
        y0 = y0.min(s.y as i64);
        y1 = y1.max(s.y as i64);
    }
    let (x0, x1, y0, y1) = (x0 - 1, x1 + 1, y0 - 1, y1 + 1);
    let w = (x1 - x0 + 1) * c;
    let h = (y1 - y0 + 1) * c;
    // Lattice point (x, y) maps to the center of its cell; y grows upward.
    let px = |x: i64| (x - x0) * c + c / 2;
    let py = |y: i64| (y1 - y) * c + c / 2;

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(
        out,
        r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="4" markerHeight="4" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#333"/></marker></defs>"##
    )
    .unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r##"<g fill="#8fb8de">"##).unwrap();
    for s in sites {
        let (x, y) = (px(s.x as i64) - c / 2, py(s.y as i64) - c / 2);
        writeln!(out, r#"<rect x="{x}" y="{y}" width="{c}" height="{c}"/>"#).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    if !edges.is_empty() {
        let sw = (c as f64 / 6.0).max(0.5);
        writeln!(out, r##"<g stroke="#333" stroke-width="{sw}" marker-end="url(#arrow)">"##).unwrap();
        for (child, parent) in edges {
            writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                px(parent.x as i64),
                py(parent.y as i64),
                px(child.x as i64),
                py(child.y as i64)
            )
            .unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    for g in &opts.guides {
        let (gx0, gx1, gy0, gy1) = match *g {
            Guide::Strip(k) => (x0, x1, -(k as i64), k as i64),
            Guide::Rectangle(r) => (-(r as i64), r as i64, y0, y1),
        };
        let (x, y) = (px(gx0) - c / 2, py(gy1) - c / 2);
        let (gw, gh) = ((gx1 - gx0 + 1) * c, (gy1 - gy0 + 1) * c);
        writeln!(
            out,
            r##"<rect x="{x}" y="{y}" width="{gw}" height="{gh}" fill="none" stroke="#c0392b" stroke-dasharray="4 3"/>"##
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_per_edge() {
        let sites = [Site::new(0, 0), Site::new(1, 0), Site::new(1, 1)];
        let edges = [(Site::new(1, 0), Site::new(0, 0)), (Site::new(1, 1), Site::new(1, 0))];
        let opts = SvgOptions {
            cell: 4,
            guides: vec![Guide::Strip(0), Guide::Rectangle(1)],
        };
        let svg = render_svg(&sites, &edges, &opts);
        assert_eq!(svg.matches("<line").count(), 2);
        assert_eq!(svg.matches("<rect").count(), 1 + 3 + 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn no_edges_no_lines() {
        let svg = render_svg(&[Site::ORIGIN], &[], &SvgOptions::default());
        assert_eq!(svg.matches("<line").count(), 0);
    }
}
