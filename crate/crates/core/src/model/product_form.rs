//! Finite mixtures of product-form geometric measures and their exact
//! moments over box regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::geometry::{BoxRegion, State, UpperBound};
use crate::model::piecewise::PiecewiseFn;
use crate::model::walk::RandomWalkModel;

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-9;

/// `weight * prod_i (1 - rho_i) rho_i^{n_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricTerm {
    pub weight: f64,
    pub ratios: Vec<f64>,
}

/// `pi(n) = sum_h c_h prod_i (1 - rho_{h,i}) rho_{h,i}^{n_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GeometricTerm>", into = "Vec<GeometricTerm>")]
pub struct ProductFormDistribution {
    terms: Vec<GeometricTerm>,
}

impl TryFrom<Vec<GeometricTerm>> for ProductFormDistribution {
    type Error = Error;
    fn try_from(terms: Vec<GeometricTerm>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<ProductFormDistribution> for Vec<GeometricTerm> {
    fn from(d: ProductFormDistribution) -> Self {
        d.terms
    }
}

/// Zeroth, first and second moments of a measure restricted to one component.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl ProductFormDistribution {
    pub fn new(terms: Vec<GeometricTerm>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|t| t.ratios.len())
            .ok_or_else(|| Error::InvalidDistribution("no mixture terms".into()))?;
        for t in &terms {
            if t.ratios.len() != dim {
                return Err(Error::InvalidDistribution("terms of different dimensions".into()));
            }
            if let Some(r) = t.ratios.iter().find(|r| !(0.0..1.0).contains(*r)) {
                return Err(Error::InvalidDistribution(format!(
                    "ratio {r} outside [0, 1)"
                )));
            }
        }
        // each term is already normalized, so the mass is the weight sum
        let mass: f64 = terms.iter().map(|t| t.weight).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {mass} != 1")));
        }
        Ok(Self { terms })
    }

    /// Single product-form term with the given ratios.
    pub fn product(ratios: Vec<f64>) -> Result<Self> {
        Self::new(vec![GeometricTerm {
            weight: 1.0,
            ratios,
        }])
    }

    pub fn terms(&self) -> &[GeometricTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].ratios.len()
    }

    pub fn probability(&self, n: &State) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.weight
                    * t.ratios
                        .iter()
                        .zip(n.coords())
                        .map(|(&r, &x)| (1.0 - r) * r.powi(x as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Total mass, evaluated through the closed-form sums.
    pub fn total_mass(&self) -> f64 {
        self.box_moment(&BoxRegion::orthant(self.dim()), None, None)
    }

    /// `sum_{n in box} pi(n) * g(n)` where `g` is `n_i^power` (when `dim_power = Some((i, power))`)
    /// times `r^{n_j}` (when `tilt = Some((j, r))`).
    pub fn box_moment(
        &self,
        region: &BoxRegion,
        dim_power: Option<(usize, u8)>,
        tilt: Option<(usize, f64)>,
    ) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut prod = t.weight;
                for (l, &rho) in t.ratios.iter().enumerate() {
                    let power = match dim_power {
                        Some((i, a)) if i == l => a,
                        _ => 0,
                    };
                    let x = match tilt {
                        Some((j, r)) if j == l => rho * r,
                        _ => rho,
                    };
                    let s = power_sum(power, region.lower()[l], region.upper()[l], x);
                    if s == 0.0 {
                        return 0.0;
                    }
                    prod *= (1.0 - rho) * s;
                }
                prod
            })
            .sum()
    }

    /// Moments of `pi` restricted to each component of `model`.
    pub fn component_moments(&self, model: &RandomWalkModel) -> Result<Vec<Moments>> {
        self.check_dim(model.dim())?;
        let dim = model.dim();
        Ok(model
            .components()
            .iter()
            .map(|c| {
                let mut m = Moments {
                    mass: 0.0,
                    first: vec![0.0; dim],
                    second: vec![0.0; dim],
                };
                for b in c.boxes() {
                    m.mass += self.box_moment(b, None, None);
                    for i in 0..dim {
                        m.first[i] += self.box_moment(b, Some((i, 1)), None);
                        m.second[i] += self.box_moment(b, Some((i, 2)), None);
                    }
                }
                m
            })
            .collect())
    }

    /// `sum_n f(n) pi(n)` for a component-wise polynomial `f`, in closed form.
    pub fn expectation(&self, model: &RandomWalkModel, f: &PiecewiseFn) -> Result<f64> {
        f.check_against(model)?;
        let moments = self.component_moments(model)?;
        Ok(moments
            .iter()
            .zip(f.pieces())
            .map(|(m, p)| {
                p.constant * m.mass
                    + (0..m.first.len())
                        .map(|i| p.linear[i] * m.first[i] + p.quadratic[i] * m.second[i])
                        .sum::<f64>()
            })
            .sum())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// `sum_{n=lower}^{upper} n^a x^n` for `a` in `{0, 1, 2}`; infinite when the
/// series diverges.
pub fn power_sum(a: u8, lower: i64, upper: UpperBound, x: f64) -> f64 {
    debug_assert!(a <= 2 && x >= 0.0);
    match upper {
        UpperBound::Finite(u) if u - lower < 64 => (lower..=u)
            .map(|n| (n as f64).powi(a as i32) * x.powi(n as i32))
            .sum(),
        UpperBound::Finite(u) => tail_sum(a, lower, x) - tail_sum(a, u + 1, x),
        UpperBound::Infinite => {
            if x >= 1.0 {
                f64::INFINITY
            } else {
                tail_sum(a, lower, x)
            }
        }
    }
}

/// `sum_{n >= lower} n^a x^n` for `0 <= x < 1`, from the geometric series and
/// its first two derivatives.
fn tail_sum(a: u8, lower: i64, x: f64) -> f64 {
    let l = lower as f64;
    let q = 1.0 - x;
    let head = x.powi(lower as i32);
    if head == 0.0 {
        return 0.0;
    }
    head * match a {
        0 => 1.0 / q,
        1 => l / q + x / (q * q),
        _ => l * l / q + 2.0 * l * x / (q * q) + x * (1.0 + x) / (q * q * q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{tandem2, Tandem2};
    use proptest::prelude::*;

    fn one_dim_trivial() -> RandomWalkModel {
        use crate::model::geometry::Step;
        use crate::model::walk::Component;
        let zero = BoxRegion::new(vec![0], vec![UpperBound::Finite(0)]).unwrap();
        let pos = BoxRegion::new(vec![1], vec![UpperBound::Infinite]).unwrap();
        let up = Step::new(vec![1]).unwrap();
        let down = Step::new(vec![-1]).unwrap();
        RandomWalkModel::new(
            1,
            vec![
                Component::new("zero", vec![zero], [(up.clone(), 0.2)]).unwrap(),
                Component::new("pos", vec![pos], [(up, 0.2), (down, 0.4)]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn geometric_mean_and_normalization() {
        let m = one_dim_trivial();
        let d = ProductFormDistribution::product(vec![0.5]).unwrap();
        let proj = PiecewiseFn::coordinate(2, 1, 0);
        assert!((d.expectation(&m, &proj).unwrap() - 1.0).abs() < 1e-14);
        let one = PiecewiseFn::constant(2, 1, 1.0);
        assert!((d.expectation(&m, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!((d.total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tandem_product_form_mean() {
        let inst = tandem2(&Tandem2 {
            lambda: 0.1,
            mu1: 0.2,
            mu1_star: 0.4,
            mu2: 0.4,
        })
        .unwrap();
        let f = PiecewiseFn::uniform_linear(inst.model.num_components(), 0.0, vec![1.0, 1.0]);
        let v = inst.stationary.expectation(&inst.model, &f).unwrap();
        assert!((v - (1.0 + 1.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_ratios_and_mass() {
        assert!(ProductFormDistribution::product(vec![1.0]).is_err());
        assert!(ProductFormDistribution::new(vec![GeometricTerm {
            weight: 0.5,
            ratios: vec![0.3]
        }])
        .is_err());
    }

    #[test]
    fn finite_power_sums_match_direct_sums() {
        for a in 0..=2u8 {
            let direct: f64 = (3..=200).map(|n: i64| (n as f64).powi(a as i32) * 0.7f64.powi(n as i32)).sum();
            let closed = power_sum(a, 3, UpperBound::Finite(200), 0.7);
            assert!((direct - closed).abs() < 1e-12 * direct.max(1.0));
        }
        assert!(power_sum(0, 0, UpperBound::Infinite, 1.0).is_infinite());
    }

    proptest! {
        // closed-form moments agree with truncated direct summation
        #[test]
        fn closed_form_matches_direct_summation(
            r1 in 0.0f64..0.9, r2 in 0.0f64..0.9,
            c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0,
            q1 in -1.0f64..1.0, q2 in -1.0f64..1.0,
        ) {
            let m = crate::families::example_partition();
            let d = ProductFormDistribution::product(vec![r1, r2]).unwrap();
            let pieces: Vec<_> = (0..m.num_components())
                .map(|k| crate::model::piecewise::Piece {
                    constant: c0 + k as f64,
                    linear: vec![c1, c2 - k as f64],
                    quadratic: vec![q1, q2],
                })
                .collect();
            let f = PiecewiseFn::new(crate::model::piecewise::Degree::Quadratic, pieces).unwrap();
            let closed = d.expectation(&m, &f).unwrap();
            let mut direct = 0.0;
            for x in 0..=400i64 {
                for y in 0..=400i64 {
                    let p = (1.0 - r1) * r1.powi(x as i32) * (1.0 - r2) * r2.powi(y as i32);
                    if p < 1e-300 { continue; }
                    let n = State::new(vec![x, y]).unwrap();
                    direct += p * f.evaluate(&m, &n);
                }
            }
            prop_assert!((closed - direct).abs() < 1e-8);
        }
    }
}
