//! Ready-made model families: tandem queues with boundary speed changes,
//! a birth–death chain and a six-component demonstration partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ctmc::{CtmcComponent, CtmcSpec};
use crate::model::geometry::{BoxRegion, Step, UpperBound};
use crate::model::piecewise::PiecewiseFn;
use crate::model::product_form::ProductFormDistribution;
use crate::model::walk::{Component, RandomWalkModel};

/// Original walk, perturbed walk with known stationary law, and reward.
#[derive(Clone, Debug)]
pub struct Instance {
    pub model: RandomWalkModel,
    pub perturbed: RandomWalkModel,
    pub reward: PiecewiseFn,
    pub stationary: ProductFormDistribution,
}

/// Box with each coordinate either `{0}` (`false`) or `{1,2,...}` (`true`).
fn orthant_face(positive: &[bool]) -> BoxRegion {
    let lower = positive.iter().map(|&p| i64::from(p)).collect();
    let upper = positive
        .iter()
        .map(|&p| if p { UpperBound::Infinite } else { UpperBound::Finite(0) })
        .collect();
    BoxRegion::new(lower, upper).expect("valid face box")
}

fn step(v: &[i64]) -> Step {
    Step::new(v.to_vec()).expect("valid step")
}

/// Rates of the two-node tandem: arrivals `lambda`, node 1 serves at `mu1`
/// (or `mu1_star` while node 2 is empty), node 2 at `mu2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tandem2 {
    pub lambda: f64,
    pub mu1: f64,
    pub mu1_star: f64,
    pub mu2: f64,
}

impl Tandem2 {
    /// `mu1 = 0.2`, `mu2 = 2 mu1`, `mu1_star = eta mu1`, `lambda = load mu1`.
    pub fn from_load(load: f64, eta: f64) -> Self {
        let mu1 = 0.2;
        Self {
            lambda: load * mu1,
            mu1,
            mu1_star: eta * mu1,
            mu2: 2.0 * mu1,
        }
    }
}

/// Component order: `{1..}x{0}`, `{0}x{1..}`, `{(0,0)}`, `{1..}x{1..}`.
pub fn tandem2_ctmc(p: &Tandem2) -> CtmcSpec {
    tandem2_rates(p, p.mu1_star)
}

fn tandem2_rates(p: &Tandem2, boundary_mu1: f64) -> CtmcSpec {
    let arrival = (step(&[1, 0]), p.lambda);
    let transfer = step(&[-1, 1]);
    let depart = (step(&[0, -1]), p.mu2);
    let comp = |name: &str, face: [bool; 2], rates: Vec<(Step, f64)>| CtmcComponent {
        name: name.into(),
        boxes: vec![orthant_face(&face)],
        rates,
    };
    CtmcSpec {
        dim: 2,
        components: vec![
            comp("C1", [true, false], vec![arrival.clone(), (transfer.clone(), boundary_mu1)]),
            comp("C2", [false, true], vec![arrival.clone(), depart.clone()]),
            comp("C3", [false, false], vec![arrival.clone()]),
            comp("C4", [true, true], vec![arrival, (transfer, p.mu1), depart]),
        ],
        gamma: 1.0,
    }
}

fn check_stable(ratios: &[f64]) -> Result<()> {
    if let Some(r) = ratios.iter().find(|&&r| !(0.0..1.0).contains(&r)) {
        return Err(Error::OutOfRange(format!("load {r} is not in [0, 1)")));
    }
    Ok(())
}

pub fn tandem2(p: &Tandem2) -> Result<Instance> {
    let ratios = vec![p.lambda / p.mu1, p.lambda / p.mu2];
    check_stable(&ratios)?;
    let model = tandem2_ctmc(p).uniformize()?;
    let perturbed = tandem2_rates(p, p.mu1).uniformize()?;
    Ok(Instance {
        reward: PiecewiseFn::coordinate(model.num_components(), 2, 0),
        model,
        perturbed,
        stationary: ProductFormDistribution::product(ratios)?,
    })
}

/// Three-node tandem: arrivals `lambda`, every node serves at `mu`, node 1
/// switches to `mu_star` while nodes 2 and 3 are both empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tandem3 {
    pub lambda: f64,
    pub mu: f64,
    pub mu_star: f64,
}

impl Tandem3 {
    /// `mu = 0.2`, `mu_star = 1.5 mu`, `lambda = load mu`.
    pub fn from_load(load: f64) -> Self {
        let mu = 0.2;
        Self {
            lambda: load * mu,
            mu,
            mu_star: 1.5 * mu,
        }
    }
}

fn tandem3_rates(p: &Tandem3, boundary_mu1: f64) -> CtmcSpec {
    let mut components = Vec::with_capacity(8);
    for mask in 0..8u8 {
        let face = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
        let mut rates = vec![(step(&[1, 0, 0]), p.lambda)];
        if face[0] {
            let r = if face[1] || face[2] { p.mu } else { boundary_mu1 };
            rates.push((step(&[-1, 1, 0]), r));
        }
        if face[1] {
            rates.push((step(&[0, -1, 1]), p.mu));
        }
        if face[2] {
            rates.push((step(&[0, 0, -1]), p.mu));
        }
        let name: String = face.iter().map(|&b| if b { '+' } else { '0' }).collect();
        components.push(CtmcComponent {
            name,
            boxes: vec![orthant_face(&face)],
            rates,
        });
    }
    CtmcSpec {
        dim: 3,
        components,
        gamma: 1.0,
    }
}

pub fn tandem3_ctmc(p: &Tandem3) -> CtmcSpec {
    tandem3_rates(p, p.mu_star)
}

pub fn tandem3(p: &Tandem3) -> Result<Instance> {
    let rho = p.lambda / p.mu;
    check_stable(&[rho])?;
    let model = tandem3_ctmc(p).uniformize()?;
    let perturbed = tandem3_rates(p, p.mu).uniformize()?;
    Ok(Instance {
        reward: PiecewiseFn::coordinate(model.num_components(), 3, 0),
        model,
        perturbed,
        stationary: ProductFormDistribution::product(vec![rho; 3])?,
    })
}

/// Reflected birth–death walk with up-probability `p` and down-probability `q`;
/// the perturbed walk is the walk itself.
pub fn birth_death(p: f64, q: f64) -> Result<Instance> {
    let rho = p / q;
    check_stable(&[rho])?;
    let zero = Component::new("zero", vec![orthant_face(&[false])], [(step(&[1]), p)])?;
    let pos = Component::new(
        "pos",
        vec![orthant_face(&[true])],
        [(step(&[1]), p), (step(&[-1]), q)],
    )?;
    let model = RandomWalkModel::new(1, vec![zero, pos])?;
    Ok(Instance {
        reward: PiecewiseFn::coordinate(2, 1, 0),
        perturbed: model.clone(),
        model,
        stationary: ProductFormDistribution::product(vec![rho])?,
    })
}

/// Six components: `{0},{1..4},{5..}` in the first coordinate crossed with
/// `{0},{1..}` in the second, row by row (so index 4 is `{1..4}x{1..}`).
pub fn example_partition() -> RandomWalkModel {
    let f = UpperBound::Finite;
    let inf = UpperBound::Infinite;
    let cols = [(0, f(0)), (1, f(4)), (5, inf)];
    let rows = [(0, f(0)), (1, inf)];
    let mut comps = Vec::new();
    for (r, &(l2, u2)) in rows.iter().enumerate() {
        for (c, &(l1, u1)) in cols.iter().enumerate() {
            let b = BoxRegion::new(vec![l1, l2], vec![u1, u2]).expect("valid box");
            let mut probs = vec![(step(&[1, 0]), 0.1), (step(&[0, 1]), 0.05)];
            if l1 > 0 {
                // the middle column serves faster
                probs.push((step(&[-1, 0]), if c == 1 { 0.3 } else { 0.2 }));
            }
            if l2 > 0 {
                probs.push((step(&[0, -1]), 0.2));
            }
            if l1 > 0 && l2 > 0 {
                probs.push((step(&[-1, 1]), 0.05));
            }
            let name = format!("C{}", 3 * r + c + 1);
            comps.push(Component::new(name, vec![b], probs).expect("valid component"));
        }
    }
    RandomWalkModel::new(2, comps).expect("valid partition")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tandem2_perturbation_only_touches_the_boundary() {
        let inst = tandem2(&Tandem2::from_load(0.5, 2.0)).unwrap();
        let u = step(&[-1, 1]);
        assert!((inst.model.component(0).prob(&u) - 0.4).abs() < 1e-15);
        assert!((inst.perturbed.component(0).prob(&u) - 0.2).abs() < 1e-15);
        for k in 1..4 {
            assert_eq!(inst.model.component(k), inst.perturbed.component(k));
        }
    }

    #[test]
    fn tandem3_has_eight_faces_and_boundary_speedup() {
        let inst = tandem3(&Tandem3::from_load(0.5)).unwrap();
        assert_eq!(inst.model.num_components(), 8);
        let d1 = step(&[-1, 1, 0]);
        assert!((inst.model.prob(&[3, 0, 0], &d1) - 0.3).abs() < 1e-15);
        assert!((inst.model.prob(&[3, 0, 1], &d1) - 0.2).abs() < 1e-15);
        assert!((inst.perturbed.prob(&[3, 0, 0], &d1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn tandem3_lacks_negative_drift() {
        let inst = tandem3(&Tandem3::from_load(0.5)).unwrap();
        let d = inst.model.drift();
        assert!(!d.is_negative());
        assert_eq!(d.sup[1], 0.0);
    }

    #[test]
    fn unstable_load_is_rejected() {
        assert!(tandem2(&Tandem2::from_load(1.0, 2.0)).is_err());
    }
}
