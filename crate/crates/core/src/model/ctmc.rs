//! Continuous-time rate specifications and their uniformization.

use crate::error::{Error, Result};
use crate::model::geometry::{BoxRegion, Step};
use crate::model::walk::{Component, RandomWalkModel, PROB_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct CtmcComponent {
    pub name: String,
    pub boxes: Vec<BoxRegion>,
    pub rates: Vec<(Step, f64)>,
}

/// Piecewise-homogeneous continuous-time chain with uniformization constant `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct CtmcSpec {
    pub dim: usize,
    pub components: Vec<CtmcComponent>,
    pub gamma: f64,
}

impl CtmcSpec {
    /// Discrete-time walk with `p_{k,u} = rate_{k,u} / gamma` and a residual self-loop.
    pub fn uniformize(&self) -> Result<RandomWalkModel> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "uniformization constant must be positive, got {}",
                self.gamma
            )));
        }
        let mut comps = Vec::with_capacity(self.components.len());
        for c in &self.components {
            if let Some((u, r)) = c.rates.iter().find(|(_, r)| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::InvalidComponent {
                    component: c.name.clone(),
                    reason: format!("rate {r} for step {u}"),
                });
            }
            let sum: f64 = c.rates.iter().filter(|(u, _)| !u.is_zero()).map(|(_, r)| r).sum();
            if sum > self.gamma * (1.0 + PROB_TOL) {
                return Err(Error::RateSumExceeded {
                    component: c.name.clone(),
                    sum,
                    gamma: self.gamma,
                });
            }
            let probs = c.rates.iter().map(|(u, r)| (u.clone(), r / self.gamma));
            comps.push(Component::new(c.name.clone(), c.boxes.clone(), probs)?);
        }
        RandomWalkModel::new(self.dim, comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::tandem2_ctmc;
    use crate::families::Tandem2;
    use crate::model::geometry::{State, UpperBound};

    fn step(v: &[i64]) -> Step {
        Step::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tandem_interior_probabilities() {
        let spec = tandem2_ctmc(&Tandem2 {
            lambda: 0.1,
            mu1: 0.2,
            mu1_star: 0.4,
            mu2: 0.4,
        });
        let m = spec.uniformize().unwrap();
        let n = [3, 2];
        assert!((m.prob(&n, &step(&[1, 0])) - 0.1).abs() < 1e-15);
        assert!((m.prob(&n, &step(&[-1, 1])) - 0.2).abs() < 1e-15);
        assert!((m.prob(&n, &step(&[0, -1])) - 0.4).abs() < 1e-15);
        assert!((m.prob(&n, &step(&[0, 0])) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_rates_give_identity_chain() {
        let face = |l: i64, u: UpperBound| BoxRegion::new(vec![l], vec![u]).unwrap();
        let spec = CtmcSpec {
            dim: 1,
            components: vec![
                CtmcComponent {
                    name: "zero".into(),
                    boxes: vec![face(0, UpperBound::Finite(0))],
                    rates: vec![(step(&[1]), 0.0)],
                },
                CtmcComponent {
                    name: "pos".into(),
                    boxes: vec![face(1, UpperBound::Infinite)],
                    rates: vec![(step(&[1]), 0.0), (step(&[-1]), 0.0)],
                },
            ],
            gamma: 1.0,
        };
        let m = spec.uniformize().unwrap();
        assert_eq!(m.prob(&[7], &step(&[0])), 1.0);
        assert_eq!(m.prob(&[0], &step(&[0])), 1.0);
    }

    #[test]
    fn rate_sum_above_gamma_is_rejected() {
        let mut spec = tandem2_ctmc(&Tandem2 {
            lambda: 0.1,
            mu1: 0.2,
            mu1_star: 0.4,
            mu2: 0.4,
        });
        spec.gamma = 0.5;
        assert!(matches!(spec.uniformize(), Err(Error::RateSumExceeded { .. })));
    }

    #[test]
    fn drift_equals_rate_drift_over_gamma() {
        let mut spec = tandem2_ctmc(&Tandem2 {
            lambda: 0.3,
            mu1: 0.5,
            mu1_star: 0.9,
            mu2: 0.7,
        });
        spec.gamma = 2.5;
        let m = spec.uniformize().unwrap();
        for n in [[3i64, 2], [4, 0], [0, 5], [0, 0]] {
            let s = State::new(n.to_vec()).unwrap();
            let k = m.component_of(&n);
            for i in 0..2 {
                let (plus, _, minus) = m.partial_sums(&s, i).unwrap();
                let rate_drift: f64 = spec.components[k]
                    .rates
                    .iter()
                    .map(|(u, r)| u.get(i) as f64 * r)
                    .sum();
                assert!((plus - minus - rate_drift / 2.5).abs() < 1e-14);
            }
        }
    }
}
