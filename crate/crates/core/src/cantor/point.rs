use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An eventually constant branch `prefix ⌢ tail^ω` of the binary tree.
///
/// The representation is canonical: the prefix never ends with the tail bit,
/// so two points are equal exactly when their infinite branches are.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Point {
    prefix: Vec<bool>,
    tail: bool,
}

impl Point {
    pub fn new(prefix: impl IntoIterator<Item = bool>, tail: bool) -> Self {
        let mut prefix: Vec<bool> = prefix.into_iter().collect();
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        Self { prefix, tail }
    }

    /// `bit^ω`.
    pub fn constant(bit: bool) -> Self {
        Self { prefix: Vec::new(), tail: bit }
    }

    pub fn parse(prefix: &str, tail: u8) -> Result<Self> {
        let tail = match tail {
            0 => false,
            1 => true,
            t => return Err(Error::Parse(format!("tail must be 0 or 1, got {t}"))),
        };
        Ok(Self::new(parse_bits(prefix)?, tail))
    }

    /// The branch through the depth-`depth` node `code`, continued with `tail`.
    pub fn from_node(code: u64, depth: u32, tail: bool) -> Self {
        Self::new((0..depth).map(|i| (code >> (depth - 1 - i)) & 1 == 1), tail)
    }

    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    pub fn tail(&self) -> bool {
        self.tail
    }

    pub fn bit(&self, i: usize) -> bool {
        self.prefix.get(i).copied().unwrap_or(self.tail)
    }

    /// First `depth` bits as a node code, root bit most significant.
    pub fn node(&self, depth: u32) -> u64 {
        debug_assert!(depth <= 63);
        (0..depth as usize).fold(0u64, |acc, i| (acc << 1) | self.bit(i) as u64)
    }

    /// Whether the branch passes through the node `code` of depth `depth`.
    pub fn extends(&self, code: u64, depth: u32) -> bool {
        self.node(depth) == code
    }

    pub fn prefix_string(&self) -> String {
        self.prefix.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl Ord for Point {
    /// Lexicographic order of the infinite branches.
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.prefix.len().max(other.prefix.len()) + 1;
        (0..n)
            .map(|i| self.bit(i).cmp(&other.bit(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^w", self.prefix_string(), self.tail as u8)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("invalid bit word {s:?}"))),
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    prefix: String,
    tail: u8,
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointRepr { prefix: self.prefix_string(), tail: self.tail as u8 }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PointRepr::deserialize(d)?;
        Point::parse(&r.prefix, r.tail).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_is_unique() {
        let a = Point::parse("0111", 1).unwrap();
        let b = Point::parse("0", 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.prefix_string(), "0");
        assert_eq!(Point::parse("000", 0).unwrap(), Point::constant(false));
    }

    #[test]
    fn order_is_lexicographic_on_branches() {
        let z = Point::constant(false);
        let o = Point::constant(true);
        let x = Point::parse("01", 0).unwrap(); // 0100..
        let y = Point::parse("0", 1).unwrap(); // 0111..
        assert!(z < x && x < y && y < o);
    }

    #[test]
    fn nodes_and_json() {
        let p = Point::parse("01", 0).unwrap();
        assert_eq!(p.node(3), 0b010);
        assert_eq!(Point::from_node(0b010, 3, false), p);
        let js = serde_json::to_string(&p).unwrap();
        assert_eq!(js, r#"{"prefix":"01","tail":0}"#);
        let back: Point = serde_json::from_str(r#"{"prefix":"0110","tail":0}"#).unwrap();
        assert_eq!(back.prefix_string(), "011");
        assert!(serde_json::from_str::<Point>(r#"{"prefix":"2","tail":0}"#).is_err());
    }
}
