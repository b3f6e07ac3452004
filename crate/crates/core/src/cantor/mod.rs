//! Finite presentations of the Cantor space `2^ω`: points, clopen sets,
//! closed subspaces given by pruned trees, and level-preserving tree maps.

mod clopen;
mod map;
mod nodeset;
mod point;
mod tree;

pub use clopen::{all_clopens, all_cylinders, Clopen};
pub use map::{BoundaryReport, BoundaryStatus, TreeMap};
pub use nodeset::NodeSet;
pub use point::Point;
pub use tree::PrunedTree;

use crate::error::{Error, Result};

/// Deepest level at which node sets are materialized.
pub const MAX_NODE_DEPTH: u32 = 24;

/// Parses a bit word into `(length, code)`, root bit most significant.
pub fn parse_word(word: &str) -> Result<(u32, u64)> {
    let bits = point::parse_bits(word)?;
    if bits.len() > MAX_NODE_DEPTH as usize {
        return Err(Error::DepthExceeded { requested: bits.len() as u32, limit: MAX_NODE_DEPTH });
    }
    let code = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    Ok((bits.len() as u32, code))
}

pub fn format_word(code: u64, len: u32) -> String {
    (0..len).rev().map(|i| if code >> i & 1 == 1 { '1' } else { '0' }).collect()
}
