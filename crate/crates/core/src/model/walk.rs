//! Random walks that are homogeneous with respect to a box partition.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::geometry::{BoxRegion, State, Step, UpperBound};

/// Tolerance on `sum_u p_{k,u} = 1`.
pub const PROB_TOL: f64 = 1e-12;

/// One component `C_k` of the partition: a finite union of boxes sharing
/// the same neighbour set and the same transition probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    name: String,
    boxes: Vec<BoxRegion>,
    /// `true` in dimension `i` when every member has `n_i = 0`.
    zero_dims: Vec<bool>,
    /// Admissible steps `N_k`, in `Step::all` order (zero step included).
    steps: Vec<Step>,
    /// `p_{k,u}` aligned with `steps`.
    probs: Vec<f64>,
}

impl Component {
    /// Builds a component. The zero-step probability is always recomputed as
    /// the residual `1 - sum_{u != 0} p_{k,u}`; a supplied value is ignored.
    pub fn new(
        name: impl Into<String>,
        boxes: Vec<BoxRegion>,
        probs: impl IntoIterator<Item = (Step, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidComponent {
            component: name.clone(),
            reason,
        };
        let first = boxes
            .first()
            .ok_or_else(|| invalid("component has no boxes".into()))?;
        let dim = first.dim();
        if boxes.iter().any(|b| b.dim() != dim) {
            return Err(invalid("boxes of different dimensions".into()));
        }

        // N(n) is shared by all members iff each coordinate is either
        // identically zero or strictly positive across the component.
        let mut zero_dims = vec![false; dim];
        for (i, zero) in zero_dims.iter_mut().enumerate() {
            let is_zero = |b: &BoxRegion| b.lower()[i] == 0 && b.upper()[i] == UpperBound::Finite(0);
            let is_positive = |b: &BoxRegion| b.lower()[i] >= 1;
            if boxes.iter().all(is_zero) {
                *zero = true;
            } else if !boxes.iter().all(is_positive) {
                return Err(invalid(format!(
                    "members disagree on whether coordinate {i} can decrease"
                )));
            }
        }

        let steps: Vec<Step> = Step::all(dim)
            .into_iter()
            .filter(|u| (0..dim).all(|i| !(zero_dims[i] && u.get(i) < 0)))
            .collect();
        let mut p = vec![0.0; steps.len()];
        for (step, prob) in probs {
            if step.dim() != dim {
                return Err(invalid(format!("step {step} has wrong dimension")));
            }
            if step.is_zero() {
                continue;
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(invalid(format!("probability {prob} for step {step}")));
            }
            let idx = steps
                .iter()
                .position(|s| *s == step)
                .ok_or_else(|| invalid(format!("step {step} leaves the orthant from this component")))?;
            p[idx] += prob;
        }
        let zero_idx = steps.iter().position(Step::is_zero).expect("zero step");
        let moving: f64 = p.iter().sum();
        if moving > 1.0 + PROB_TOL {
            return Err(invalid(format!("outgoing probabilities sum to {moving} > 1")));
        }
        p[zero_idx] = (1.0 - moving).max(0.0);

        Ok(Self {
            name,
            boxes,
            zero_dims,
            steps,
            probs: p,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn boxes(&self) -> &[BoxRegion] {
        &self.boxes
    }

    pub fn dim(&self) -> usize {
        self.zero_dims.len()
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        self.boxes.iter().any(|b| b.contains(n))
    }

    /// Admissible steps `N_k` (geometric: every step keeping members in the orthant).
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn admits(&self, u: &Step) -> bool {
        self.steps.contains(u)
    }

    /// `p_{k,u}`; zero for steps outside `N_k`.
    pub fn prob(&self, u: &Step) -> f64 {
        self.steps
            .iter()
            .position(|s| s == u)
            .map_or(0.0, |idx| self.probs[idx])
    }

    /// Steps with positive probability, zero step included when it has mass.
    pub fn transitions(&self) -> impl Iterator<Item = (&Step, f64)> + '_ {
        self.steps
            .iter()
            .zip(&self.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (s, p))
    }

    /// Whether dimension `i` belongs to `I(n)` for the members.
    pub fn positive_in(&self, i: usize) -> bool {
        !self.zero_dims[i]
    }

    /// `(s+_i, s0_i, s-_i)` for the members of this component.
    pub fn partial_sums(&self, i: usize) -> (f64, f64, f64) {
        let mut sums = (0.0, 0.0, 0.0);
        for (u, p) in self.steps.iter().zip(&self.probs) {
            match u.get(i) {
                1 => sums.0 += p,
                0 => sums.1 += p,
                _ => sums.2 += p,
            }
        }
        sums
    }

    /// Same region and step set, different probabilities.
    pub fn with_probs(&self, probs: impl IntoIterator<Item = (Step, f64)>) -> Result<Self> {
        Component::new(self.name.clone(), self.boxes.clone(), probs)
    }
}

/// Random walk `R` on `{0,1,...}^M`, homogeneous on each partition component.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomWalkModel {
    dim: usize,
    components: Vec<Component>,
}

impl RandomWalkModel {
    pub fn new(dim: usize, components: Vec<Component>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPartition("dimension must be positive".into()));
        }
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        let model = Self { dim, components };
        model.check_partition()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &Component {
        &self.components[k]
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name() == name)
    }

    /// Index function `c(n)`.
    pub fn component_of(&self, n: &[i64]) -> usize {
        self.components
            .iter()
            .position(|c| c.contains(n))
            .unwrap_or_else(|| panic!("state {n:?} is not covered by the partition"))
    }

    /// `p(n, n+u)`.
    pub fn prob(&self, n: &[i64], u: &Step) -> f64 {
        self.components[self.component_of(n)].prob(u)
    }

    /// Sorted coordinates in dimension `i` at which component membership can change.
    pub fn breakpoints(&self, i: usize) -> Vec<i64> {
        let mut set = BTreeSet::from([0]);
        for c in &self.components {
            for b in c.boxes() {
                set.insert(b.lower()[i]);
                if let UpperBound::Finite(u) = b.upper()[i] {
                    set.insert(u + 1);
                }
            }
        }
        set.into_iter().collect()
    }

    /// Exact disjointness/exhaustiveness check on the grid induced by all box
    /// boundaries; membership is constant on each grid cell.
    fn check_partition(&self) -> Result<()> {
        let grids: Vec<Vec<i64>> = (0..self.dim).map(|i| self.breakpoints(i)).collect();
        let mut idx = vec![0usize; self.dim];
        loop {
            let rep: Vec<i64> = idx.iter().zip(&grids).map(|(&j, g)| g[j]).collect();
            let owners: Vec<&str> = self
                .components
                .iter()
                .flat_map(|c| c.boxes().iter().filter(|b| b.contains(&rep)).map(move |_| c.name()))
                .collect();
            match owners.len() {
                1 => {}
                0 => {
                    return Err(Error::InvalidPartition(format!(
                        "state {rep:?} is not covered by any component"
                    )))
                }
                _ => {
                    return Err(Error::InvalidPartition(format!(
                        "state {rep:?} is claimed {} times ({})",
                        owners.len(),
                        owners.join(", ")
                    )))
                }
            }
            let mut d = 0;
            loop {
                if d == self.dim {
                    return Ok(());
                }
                idx[d] += 1;
                if idx[d] < grids[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// `(s+_i(n), s0_i(n), s-_i(n))` for 0-based dimension `i`.
    pub fn partial_sums(&self, n: &State, i: usize) -> Result<(f64, f64, f64)> {
        if n.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: n.dim(),
            });
        }
        if i >= self.dim {
            return Err(Error::DimensionIndex {
                index: i,
                dim: self.dim,
            });
        }
        Ok(self.components[self.component_of(n.coords())].partial_sums(i))
    }

    /// Negative-drift test: per-dimension `sup_{n: i in I(n)} (s+_i - s-_i)`.
    pub fn drift(&self) -> DriftReport {
        let sup = (0..self.dim)
            .map(|i| {
                self.components
                    .iter()
                    .filter(|c| c.positive_in(i))
                    .map(|c| {
                        let (plus, _, minus) = c.partial_sums(i);
                        plus - minus
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        DriftReport { sup }
    }

    pub fn has_negative_drift(&self) -> bool {
        self.drift().is_negative()
    }

    /// Same partition with replaced probabilities for selected components.
    pub fn with_component(&self, k: usize, component: Component) -> Result<Self> {
        let mut components = self.components.clone();
        components[k] = component;
        Self::new(self.dim, components)
    }

    /// Whether `other` has an identical partition (same names and regions).
    pub fn same_partition(&self, other: &RandomWalkModel) -> bool {
        self.dim == other.dim
            && self.components.len() == other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.boxes == b.boxes)
    }
}

/// Drift suprema per dimension; `-inf` for a dimension no component moves in.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub sup: Vec<f64>,
}

impl DriftReport {
    pub fn is_negative(&self) -> bool {
        self.sup.iter().all(|&s| s < 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{tandem2, Tandem2};

    fn step(v: &[i64]) -> Step {
        Step::new(v.to_vec()).unwrap()
    }

    fn state(v: &[i64]) -> State {
        State::new(v.to_vec()).unwrap()
    }

    fn spec_tandem() -> RandomWalkModel {
        tandem2(&Tandem2 {
            lambda: 0.1,
            mu1: 0.2,
            mu1_star: 0.4,
            mu2: 0.4,
        })
        .unwrap()
        .model
    }

    #[test]
    fn partial_sums_interior_and_boundary() {
        let m = spec_tandem();
        let (plus, zero, minus) = m.partial_sums(&state(&[3, 2]), 0).unwrap();
        assert!((plus - 0.1).abs() < 1e-15 && (minus - 0.2).abs() < 1e-15);
        assert!((plus + zero + minus - 1.0).abs() < PROB_TOL);
        let (plus, _, minus) = m.partial_sums(&state(&[3, 0]), 0).unwrap();
        assert!((plus - 0.1).abs() < 1e-15 && (minus - 0.4).abs() < 1e-15);
        let (_, _, minus) = m.partial_sums(&state(&[0, 5]), 0).unwrap();
        assert_eq!(minus, 0.0);
        assert!(matches!(
            m.partial_sums(&state(&[0, 0]), 2),
            Err(Error::DimensionIndex { .. })
        ));
    }

    #[test]
    fn tandem_has_negative_drift() {
        let m = spec_tandem();
        let d = m.drift();
        assert!(d.is_negative());
        assert!((d.sup[0] + 0.1).abs() < 1e-15);
        assert!((d.sup[1] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn symmetric_walk_has_no_negative_drift() {
        let zero = BoxRegion::new(vec![0], vec![UpperBound::Finite(0)]).unwrap();
        let pos = BoxRegion::new(vec![1], vec![UpperBound::Infinite]).unwrap();
        let m = RandomWalkModel::new(
            1,
            vec![
                Component::new("zero", vec![zero], [(step(&[1]), 0.3)]).unwrap(),
                Component::new("pos", vec![pos], [(step(&[1]), 0.3), (step(&[-1]), 0.3)]).unwrap(),
            ],
        )
        .unwrap();
        assert!(!m.has_negative_drift());
        assert_eq!(m.drift().sup, vec![0.0]);
    }

    #[test]
    fn residual_self_loop_overrides_input() {
        let c = Component::new(
            "all",
            vec![BoxRegion::orthant(1)],
            [(step(&[1]), 0.25), (step(&[0]), 0.9)],
        );
        // n_1 = 0 and n_1 > 0 both present: neighbour sets differ
        assert!(c.is_err());
        let pos = BoxRegion::new(vec![1], vec![UpperBound::Infinite]).unwrap();
        let c = Component::new("pos", vec![pos], [(step(&[1]), 0.25), (step(&[0]), 0.9)]).unwrap();
        assert!((c.prob(&step(&[0])) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_overlapping_or_incomplete_partitions() {
        let zero = BoxRegion::new(vec![0], vec![UpperBound::Finite(0)]).unwrap();
        let pos = BoxRegion::new(vec![1], vec![UpperBound::Infinite]).unwrap();
        let tail = BoxRegion::new(vec![3], vec![UpperBound::Infinite]).unwrap();
        let c0 = Component::new("zero", vec![zero], []).unwrap();
        let c1 = Component::new("pos", vec![pos], []).unwrap();
        let c2 = Component::new("tail", vec![tail], []).unwrap();
        assert!(matches!(
            RandomWalkModel::new(1, vec![c0.clone()]),
            Err(Error::InvalidPartition(_))
        ));
        assert!(matches!(
            RandomWalkModel::new(1, vec![c0, c1, c2]),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn probabilities_must_not_exceed_one() {
        let pos = BoxRegion::new(vec![1], vec![UpperBound::Infinite]).unwrap();
        assert!(Component::new("pos", vec![pos.clone()], [(step(&[1]), 0.6), (step(&[-1]), 0.6)]).is_err());
        assert!(Component::new("pos", vec![pos], [(step(&[1]), -0.1)]).is_err());
    }
}
