use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cantor::{Clopen, Point};
use crate::error::{Error, Result};
use crate::rational::{self, Accumulator, Rational};

/// A finitely supported signed measure `Σ α_x δ_x` with exact weights.
///
/// Equal points are coalesced on construction and zero weights are dropped,
/// so the key set is exactly the support.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct FsMeasure {
    atoms: BTreeMap<Point, Rational>,
}

impl FsMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(p: Point) -> Self {
        Self::from_atoms([(p, rational::int(1))])
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (Point, Rational)>) -> Self {
        let mut grouped: BTreeMap<Point, Accumulator> = BTreeMap::new();
        for (p, w) in atoms {
            grouped.entry(p).or_default().add(&w);
        }
        let atoms = grouped
            .into_iter()
            .map(|(p, acc)| (p, acc.finish()))
            .filter(|(_, w)| !w.is_zero())
            .collect();
        Self { atoms }
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Point, &Rational)> {
        self.atoms.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.atoms.keys()
    }

    pub fn weight(&self, p: &Point) -> Rational {
        self.atoms.get(p).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `μ(U)`.
    pub fn eval(&self, u: &Clopen) -> Rational {
        rational::sum(self.atoms.iter().filter(|(p, _)| u.contains(p)).map(|(_, w)| w))
    }

    /// Total variation `Σ |α_x|`.
    pub fn norm(&self) -> Rational {
        rational::abs_sum(self.atoms.values())
    }

    pub fn total_mass(&self) -> Rational {
        rational::sum(self.atoms.values())
    }

    pub fn restrict(&self, u: &Clopen) -> FsMeasure {
        self.filter(|p| u.contains(p))
    }

    pub fn restrict_points(&self, points: &BTreeSet<Point>) -> FsMeasure {
        self.filter(|p| points.contains(p))
    }

    pub fn filter(&self, keep: impl Fn(&Point) -> bool) -> FsMeasure {
        Self { atoms: self.atoms.iter().filter(|(p, _)| keep(p)).map(|(p, w)| (p.clone(), w.clone())).collect() }
    }

    pub fn scale(&self, c: &Rational) -> FsMeasure {
        if c.is_zero() {
            return Self::zero();
        }
        Self { atoms: self.atoms.iter().map(|(p, w)| (p.clone(), w * c)).collect() }
    }

    pub fn plus(&self, other: &FsMeasure) -> FsMeasure {
        Self::from_atoms(self.atoms.iter().chain(other.atoms.iter()).map(|(p, w)| (p.clone(), w.clone())))
    }

    pub fn minus(&self, other: &FsMeasure) -> FsMeasure {
        self.plus(&other.scale(&rational::int(-1)))
    }

    /// `μ / ‖μ‖`.
    pub fn normalize(&self) -> Result<FsMeasure> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::ZeroMeasure);
        }
        Ok(self.scale(&n.recip()))
    }

    /// Masses of the nonzero depth-`d` cylinders, keyed by node code.
    pub fn cell_values(&self, d: u32) -> BTreeMap<u64, Rational> {
        let mut cells: HashMap<u64, Accumulator> = HashMap::new();
        for (p, w) in &self.atoms {
            cells.entry(p.node(d)).or_default().add(w);
        }
        cells
            .into_iter()
            .map(|(c, acc)| (c, acc.finish()))
            .filter(|(_, w)| !w.is_zero())
            .collect()
    }

    /// Whether the supports of `self` and `other` are disjoint.
    pub fn disjoint_from(&self, other: &FsMeasure) -> bool {
        self.atoms.keys().all(|p| !other.atoms.contains_key(p))
    }

    pub fn max_abs_weight(&self) -> Rational {
        self.atoms.values().map(|w| w.abs()).max().unwrap_or_else(Rational::zero)
    }
}

impl std::fmt::Debug for FsMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("FsMeasure{")?;
        for (i, (p, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", p, rational::format(w))?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    point: Point,
    #[serde(with = "rational::serde_str")]
    weight: Rational,
}

#[derive(Serialize, Deserialize)]
struct FsRepr {
    atoms: Vec<AtomRepr>,
}

impl Serialize for FsMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FsRepr {
            atoms: self.atoms.iter().map(|(p, w)| AtomRepr { point: p.clone(), weight: w.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FsMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FsRepr::deserialize(d)?;
        Ok(FsMeasure::from_atoms(r.atoms.into_iter().map(|a| (a.point, a.weight))))
    }
}
