//! Component-wise polynomial functions of degree at most two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::geometry::State;
use crate::model::walk::RandomWalkModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Degree {
    #[serde(rename = "1")]
    Linear,
    #[serde(rename = "2")]
    Quadratic,
}

impl Degree {
    pub fn from_int(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Degree::Linear),
            2 => Ok(Degree::Quadratic),
            _ => Err(Error::OutOfRange(format!("degree must be 1 or 2, got {d}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Degree::Linear => 1,
            Degree::Quadratic => 2,
        }
    }
}

/// `h_0 + sum_i (h_i n_i + eta_i n_i^2)` on one component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub constant: f64,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub quadratic: Vec<f64>,
}

impl Piece {
    pub fn linear(constant: f64, linear: Vec<f64>) -> Self {
        let dim = linear.len();
        Self {
            constant,
            linear,
            quadratic: vec![0.0; dim],
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::linear(0.0, vec![0.0; dim])
    }

    pub fn value(&self, n: &[i64]) -> f64 {
        let mut v = self.constant;
        for (i, &x) in n.iter().enumerate() {
            let x = x as f64;
            v += self.linear[i] * x + self.quadratic[i] * x * x;
        }
        v
    }
}

/// A function that is polynomial on each component `C_k` of a partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFn {
    degree: Degree,
    pieces: Vec<Piece>,
}

impl PiecewiseFn {
    pub fn new(degree: Degree, mut pieces: Vec<Piece>) -> Result<Self> {
        let dim = pieces
            .first()
            .map(|p| p.linear.len())
            .ok_or_else(|| Error::InvalidFunction("no pieces".into()))?;
        for (k, p) in pieces.iter_mut().enumerate() {
            if p.quadratic.is_empty() {
                p.quadratic = vec![0.0; dim];
            }
            if p.linear.len() != dim || p.quadratic.len() != dim {
                return Err(Error::InvalidFunction(format!(
                    "piece {k} has inconsistent coefficient lengths"
                )));
            }
            if degree == Degree::Linear && p.quadratic.iter().any(|&q| q != 0.0) {
                return Err(Error::InvalidFunction(format!(
                    "piece {k} has quadratic terms in a degree-1 function"
                )));
            }
        }
        Ok(Self { degree, pieces })
    }

    /// C-linear function from `(h_{k,0}, [h_{k,i}])` per component.
    pub fn c_linear(pieces: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        Self::new(
            Degree::Linear,
            pieces.into_iter().map(|(c, l)| Piece::linear(c, l)).collect(),
        )
    }

    /// The same affine function on every one of `num_components` components.
    pub fn uniform_linear(num_components: usize, constant: f64, linear: Vec<f64>) -> Self {
        Self {
            degree: Degree::Linear,
            pieces: vec![Piece::linear(constant, linear); num_components],
        }
    }

    /// Coordinate projection `n -> n_i`.
    pub fn coordinate(num_components: usize, dim: usize, i: usize) -> Self {
        let mut linear = vec![0.0; dim];
        linear[i] = 1.0;
        Self::uniform_linear(num_components, 0.0, linear)
    }

    pub fn constant(num_components: usize, dim: usize, value: f64) -> Self {
        Self::uniform_linear(num_components, value, vec![0.0; dim])
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece(&self, k: usize) -> &Piece {
        &self.pieces[k]
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].linear.len()
    }

    pub fn is_c_linear(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.quadratic.iter().all(|&q| q == 0.0))
    }

    /// `H(n)` with the piece selected by `c(n)`.
    pub fn evaluate(&self, model: &RandomWalkModel, n: &State) -> f64 {
        self.value_at(model.component_of(n.coords()), n.coords())
    }

    /// Value of piece `k` at `n` (no membership check).
    pub fn value_at(&self, k: usize, n: &[i64]) -> f64 {
        self.pieces[k].value(n)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                constant: p.constant * factor,
                linear: p.linear.iter().map(|x| x * factor).collect(),
                quadratic: p.quadratic.iter().map(|x| x * factor).collect(),
            })
            .collect();
        Self {
            degree: self.degree,
            pieces,
        }
    }

    pub fn check_against(&self, model: &RandomWalkModel) -> Result<()> {
        if self.pieces.len() != model.num_components() || self.dim() != model.dim() {
            return Err(Error::InvalidFunction(format!(
                "function has {} pieces of dimension {}, model has {} components of dimension {}",
                self.pieces.len(),
                self.dim(),
                model.num_components(),
                model.dim()
            )));
        }
        Ok(())
    }
}
