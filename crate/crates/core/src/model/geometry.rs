//! Lattice points, unit steps and axis-aligned boxes in the positive orthant.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of `{0, 1, ...}^M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct State {
    coords: Vec<i64>,
}

impl State {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|&&c| c < 0) {
            return Err(Error::InvalidState(format!(
                "coordinate {c} is negative in {coords:?}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0; dim],
        }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `self + step`, or `None` when the result leaves the orthant.
    pub fn shifted(&self, step: &Step) -> Option<State> {
        self.offset(step.as_i64().as_slice())
    }

    /// `self + offset` for an arbitrary integer offset.
    pub fn offset(&self, offset: &[i64]) -> Option<State> {
        debug_assert_eq!(offset.len(), self.coords.len());
        let coords: Vec<i64> = self
            .coords
            .iter()
            .zip(offset)
            .map(|(a, b)| a + b)
            .collect();
        if coords.iter().any(|&c| c < 0) {
            None
        } else {
            Some(State { coords })
        }
    }
}

impl TryFrom<Vec<i64>> for State {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        State::new(v)
    }
}

impl From<State> for Vec<i64> {
    fn from(s: State) -> Self {
        s.coords
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.coords.iter())
    }
}

/// A nearest-neighbour displacement with every entry in `{-1, 0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Step {
    offsets: Vec<i8>,
}

impl Step {
    pub fn new(offsets: Vec<i64>) -> Result<Self> {
        if offsets.iter().any(|o| !(-1..=1).contains(o)) {
            return Err(Error::InvalidStep(format!(
                "{offsets:?} has an entry outside {{-1, 0, 1}}"
            )));
        }
        Ok(Self {
            offsets: offsets.into_iter().map(|o| o as i8).collect(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            offsets: vec![0; dim],
        }
    }

    /// Unit vector `e_i` (0-based `i`) scaled by `sign`.
    pub fn axis(dim: usize, i: usize, sign: i8) -> Self {
        let mut offsets = vec![0; dim];
        offsets[i] = sign.signum();
        Self { offsets }
    }

    /// All `3^M` steps, in lexicographic order of their offsets.
    pub fn all(dim: usize) -> Vec<Step> {
        let total = 3usize.pow(dim as u32);
        (0..total)
            .map(|mut code| {
                let mut offsets = vec![0i8; dim];
                for slot in offsets.iter_mut().rev() {
                    *slot = (code % 3) as i8 - 1;
                    code /= 3;
                }
                Step { offsets }
            })
            .collect()
    }

    pub fn offsets(&self) -> &[i8] {
        &self.offsets
    }

    pub fn get(&self, i: usize) -> i8 {
        self.offsets[i]
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.offsets.iter().map(|&o| o as i64).collect()
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_zero(&self) -> bool {
        self.offsets.iter().all(|&o| o == 0)
    }

    pub fn negated(&self) -> Step {
        Step {
            offsets: self.offsets.iter().map(|o| -o).collect(),
        }
    }
}

impl TryFrom<Vec<i64>> for Step {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        Step::new(v)
    }
}

impl From<Step> for Vec<i64> {
    fn from(s: Step) -> Self {
        s.as_i64()
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, self.offsets.iter())
    }
}

fn write_tuple<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = T>,
) -> fmt::Result {
    write!(f, "(")?;
    for (i, x) in items.enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

/// Upper end of a box side: a finite coordinate or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpperBound {
    Finite(i64),
    Infinite,
}

impl UpperBound {
    pub fn is_finite(self) -> bool {
        matches!(self, UpperBound::Finite(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            UpperBound::Finite(u) => Some(u),
            UpperBound::Infinite => None,
        }
    }

    pub fn admits(self, x: i64) -> bool {
        match self {
            UpperBound::Finite(u) => x <= u,
            UpperBound::Infinite => true,
        }
    }
}

impl PartialOrd for UpperBound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UpperBound {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (UpperBound::Finite(a), UpperBound::Finite(b)) => a.cmp(b),
            (UpperBound::Finite(_), UpperBound::Infinite) => Ordering::Less,
            (UpperBound::Infinite, UpperBound::Finite(_)) => Ordering::Greater,
            (UpperBound::Infinite, UpperBound::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for UpperBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpperBound::Finite(u) => write!(f, "{u}"),
            UpperBound::Infinite => write!(f, "inf"),
        }
    }
}

// Config files spell the sentinel as the string "inf".
impl Serialize for UpperBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            UpperBound::Finite(u) => s.serialize_i64(*u),
            UpperBound::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for UpperBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(u) => Ok(UpperBound::Finite(u)),
            Raw::Str(s) if s == "inf" || s == "+inf" => Ok(UpperBound::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected an integer or \"inf\", got \"{s}\""
            ))),
        }
    }
}

/// Axis-aligned box `prod_i [lower_i, upper_i]` with possibly infinite upper ends.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoxRegion {
    lower: Vec<i64>,
    upper: Vec<UpperBound>,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<i64>,
    upper: Vec<UpperBound>,
}

impl TryFrom<RawBox> for BoxRegion {
    type Error = Error;
    fn try_from(r: RawBox) -> Result<Self> {
        BoxRegion::new(r.lower, r.upper)
    }
}

impl From<BoxRegion> for RawBox {
    fn from(b: BoxRegion) -> Self {
        RawBox {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl BoxRegion {
    pub fn new(lower: Vec<i64>, upper: Vec<UpperBound>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBox(format!(
                "lower has {} entries but upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l < 0 {
                return Err(Error::InvalidBox(format!("negative lower bound {l} in dimension {i}")));
            }
            if let UpperBound::Finite(u) = u {
                if u < l {
                    return Err(Error::InvalidBox(format!(
                        "upper bound {u} below lower bound {l} in dimension {i}"
                    )));
                }
            }
        }
        Ok(Self { lower, upper })
    }

    /// The single-point box `{n}`.
    pub fn point(n: &State) -> Self {
        Self {
            lower: n.coords().to_vec(),
            upper: n.coords().iter().map(|&c| UpperBound::Finite(c)).collect(),
        }
    }

    /// Whole orthant of dimension `dim`.
    pub fn orthant(dim: usize) -> Self {
        Self {
            lower: vec![0; dim],
            upper: vec![UpperBound::Infinite; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[UpperBound] {
        &self.upper
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        n.len() == self.lower.len()
            && n
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&l, &u))| x >= l && u.admits(x))
    }

    /// Dimensions in which the box is unbounded.
    pub fn unbounded_dims(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| !self.upper[i].is_finite())
            .collect()
    }

    pub fn is_bounded(&self) -> bool {
        self.upper.iter().all(|u| u.is_finite())
    }

    /// Number of lattice points, `None` when infinite.
    pub fn cardinality(&self) -> Option<u128> {
        let mut total: u128 = 1;
        for (&l, &u) in self.lower.iter().zip(&self.upper) {
            total *= (u.finite()? - l + 1) as u128;
        }
        Some(total)
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let l = self.lower[i].max(other.lower[i]);
            let u = self.upper[i].min(other.upper[i]);
            if !u.admits(l) {
                return None;
            }
            lower.push(l);
            upper.push(u);
        }
        Some(BoxRegion { lower, upper })
    }

    /// The lexicographically smallest member (all coordinates at their lower bound).
    pub fn corner(&self) -> State {
        State {
            coords: self.lower.clone(),
        }
    }

    /// Every corner of the box with infinite sides pinned at `lower`.
    pub fn finite_corners(&self) -> Vec<State> {
        let mut out = vec![Vec::new()];
        for (&l, &u) in self.lower.iter().zip(&self.upper) {
            let choices: Vec<i64> = match u {
                UpperBound::Finite(u) if u != l => vec![l, u],
                _ => vec![l],
            };
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<i64>| {
                    choices.iter().map(move |&c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(|coords| State { coords }).collect()
    }
}

impl fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, " x ")?;
            }
            match self.upper[i] {
                UpperBound::Finite(u) if u == self.lower[i] => write!(f, "{{{u}}}")?,
                UpperBound::Finite(u) => write!(f, "[{},{}]", self.lower[i], u)?,
                UpperBound::Infinite => write!(f, "[{},inf)", self.lower[i])?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_enumeration_is_complete_and_ordered() {
        let steps = Step::all(2);
        assert_eq!(steps.len(), 9);
        assert_eq!(steps[0].offsets(), &[-1, -1]);
        assert_eq!(steps[4].offsets(), &[0, 0]);
        assert_eq!(steps[8].offsets(), &[1, 1]);
        assert!(Step::new(vec![2, 0]).is_err());
    }

    #[test]
    fn shifted_state_rejects_negative_coordinates() {
        let n = State::new(vec![0, 3]).unwrap();
        assert!(n.shifted(&Step::new(vec![-1, 0]).unwrap()).is_none());
        assert_eq!(
            n.shifted(&Step::new(vec![1, -1]).unwrap()).unwrap().coords(),
            &[1, 2]
        );
        assert!(State::new(vec![-1]).is_err());
    }

    #[test]
    fn box_membership_and_intersection() {
        let a = BoxRegion::new(vec![1, 0], vec![UpperBound::Finite(4), UpperBound::Infinite]).unwrap();
        let b = BoxRegion::new(vec![3, 2], vec![UpperBound::Infinite, UpperBound::Finite(2)]).unwrap();
        assert!(a.contains(&[4, 100]));
        assert!(!a.contains(&[5, 0]));
        let c = a.intersect(&b).unwrap();
        assert_eq!(c.lower(), &[3, 2]);
        assert_eq!(c.upper(), &[UpperBound::Finite(4), UpperBound::Finite(2)]);
        assert_eq!(c.cardinality(), Some(2));
        assert_eq!(c.finite_corners().len(), 2);
        assert!(a.intersect(&BoxRegion::new(vec![5, 0], vec![UpperBound::Infinite; 2]).unwrap()).is_none());
        assert!(BoxRegion::new(vec![3], vec![UpperBound::Finite(2)]).is_err());
    }

    #[test]
    fn upper_bound_parses_inf_sentinel() {
        let b: BoxRegion = toml::from_str("lower = [1, 0]\nupper = [\"inf\", 0]").unwrap();
        assert_eq!(b.upper(), &[UpperBound::Infinite, UpperBound::Finite(0)]);
        assert!(UpperBound::Finite(7) < UpperBound::Infinite);
    }
}
