//! Line-oriented text formats, configuration files and SVG output.

mod config;
mod files;
mod sites;
mod svg;

pub use config::parse_config;
pub use files::{
    diff_to_csv, parse_aggregate, parse_forest, write_aggregate, write_forest, AGGREGATE_TAG, FOREST_TAG,
};
pub use sites::{parse_site, parse_sites};
pub use svg::{render_svg, Guide, SvgOptions};
