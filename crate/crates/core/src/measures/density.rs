use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cantor::{format_word, parse_word, Clopen, MAX_NODE_DEPTH};
use crate::error::{Error, Result};
use crate::rational::{self, Accumulator, Rational};

/// A signed measure whose density with respect to `λ` is constant on every
/// depth-`d` cylinder. `cells[t]` is the measure of `[t]`.
#[derive(Clone, PartialEq, Eq)]
pub struct DensityMeasure {
    depth: u32,
    cells: Vec<Rational>,
}

impl DensityMeasure {
    pub fn new(depth: u32, cells: Vec<Rational>) -> Result<Self> {
        if depth > MAX_NODE_DEPTH {
            return Err(Error::DepthExceeded { requested: depth, limit: MAX_NODE_DEPTH });
        }
        if cells.len() != 1usize << depth {
            return Err(Error::InvalidArgument(format!(
                "depth {depth} needs {} cells, got {}",
                1usize << depth,
                cells.len()
            )));
        }
        Ok(Self { depth, cells })
    }

    /// The product measure `λ` as a depth-0 density.
    pub fn lambda() -> Self {
        Self { depth: 0, cells: vec![rational::int(1)] }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cell(&self, code: u64) -> &Rational {
        &self.cells[code as usize]
    }

    pub fn cells(&self) -> &[Rational] {
        &self.cells
    }

    pub fn total_variation(&self) -> Rational {
        rational::abs_sum(&self.cells)
    }

    pub fn total_mass(&self) -> Rational {
        rational::sum(&self.cells)
    }

    /// The same measure on depth-`depth` cells, splitting each cell evenly.
    pub fn refine(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidArgument(format!("cannot refine depth {} to {depth}", self.depth)));
        }
        let k = depth - self.depth;
        let share = Rational::new(BigInt::from(1), BigInt::from(1) << k as usize);
        let mut cells = Vec::with_capacity(1usize << depth);
        for c in &self.cells {
            let part = c * &share;
            cells.extend(std::iter::repeat(part).take(1usize << k));
        }
        Self::new(depth, cells)
    }

    pub fn eval(&self, u: &Clopen) -> Rational {
        if u.depth() <= self.depth {
            return rational::sum(u.refined(self.depth).iter().map(|c| &self.cells[c as usize]));
        }
        let k = u.depth() - self.depth;
        let mut per_cell: BTreeMap<u64, u64> = BTreeMap::new();
        for c in u.nodes().iter() {
            *per_cell.entry(c >> k).or_default() += 1;
        }
        let mut acc = Accumulator::new();
        for (cell, count) in per_cell {
            acc.add(&(&self.cells[cell as usize] * Rational::new(BigInt::from(count), BigInt::from(1) << k as usize)));
        }
        acc.finish()
    }

    /// Masses of the nonzero depth-`d` cylinders, keyed by node code.
    pub fn cell_values(&self, d: u32) -> BTreeMap<u64, Rational> {
        if d >= self.depth {
            let k = d - self.depth;
            let share = Rational::new(BigInt::from(1), BigInt::from(1) << k as usize);
            let mut out = BTreeMap::new();
            for (i, c) in self.cells.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let part = c * &share;
                for j in 0..1u64 << k {
                    out.insert(((i as u64) << k) | j, part.clone());
                }
            }
            return out;
        }
        let k = self.depth - d;
        let mut grouped: BTreeMap<u64, Accumulator> = BTreeMap::new();
        for (i, c) in self.cells.iter().enumerate() {
            grouped.entry(i as u64 >> k).or_default().add(c);
        }
        grouped.into_iter().map(|(c, a)| (c, a.finish())).filter(|(_, w)| !w.is_zero()).collect()
    }
}

impl std::fmt::Debug for DensityMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cells: Vec<String> = self.cells.iter().map(rational::format).collect();
        write!(f, "DensityMeasure(d={}, [{}])", self.depth, cells.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    depth: u32,
    cells: BTreeMap<String, String>,
}

impl Serialize for DensityMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| (format_word(i as u64, self.depth), rational::format(c)))
            .collect();
        DensityRepr { depth: self.depth, cells }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMeasure {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = DensityRepr::deserialize(de)?;
        if r.depth > MAX_NODE_DEPTH {
            return Err(D::Error::custom(format!("depth {} too large", r.depth)));
        }
        let mut cells = vec![Rational::zero(); 1usize << r.depth];
        for (w, v) in &r.cells {
            let (d, c) = parse_word(w).map_err(D::Error::custom)?;
            if d != r.depth {
                return Err(D::Error::custom(format!("cell {w:?} is not at depth {}", r.depth)));
            }
            cells[c as usize] = rational::parse(v).map_err(D::Error::custom)?;
        }
        DensityMeasure::new(r.depth, cells).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn lambda_splits_evenly() {
        let l = DensityMeasure::lambda();
        assert_eq!(l.eval(&Clopen::cylinder("01").unwrap()), frac(1, 4));
        assert_eq!(l.eval(&Clopen::full()), frac(1, 1));
        let r = l.refine(3).unwrap();
        assert!(r.cells().iter().all(|c| *c == frac(1, 8)));
    }

    #[test]
    fn coarse_and_fine_cell_values() {
        let m = DensityMeasure::new(1, vec![frac(-1, 2), frac(1, 2)]).unwrap();
        assert!(m.cell_values(0).is_empty());
        assert_eq!(m.cell_values(2)[&3], frac(1, 4));
        assert_eq!(m.total_variation(), frac(1, 1));
    }

    #[test]
    fn json_round_trip() {
        let m = DensityMeasure::new(1, vec![frac(-1, 2), frac(1, 2)]).unwrap();
        let js = serde_json::to_string(&m).unwrap();
        assert_eq!(js, r#"{"depth":1,"cells":{"0":"-1/2","1":"1/2"}}"#);
        assert_eq!(serde_json::from_str::<DensityMeasure>(&js).unwrap(), m);
        assert!(DensityMeasure::new(2, vec![frac(1, 1)]).is_err());
    }
}
