//! Separable quadratics `h_0 + sum_i (h_i n_i + eta_i n_i^2)` with coefficients
//! that are either numbers or affine expressions in LP variables, and the
//! corner reduction that turns `H <= 0` on a box into finitely many
//! inequalities.

use crate::error::{Error, Result};
use crate::lp::LinExpr;
use crate::model::geometry::{BoxRegion, UpperBound};
use crate::model::piecewise::Piece;

/// Coefficient type of a [`QuadPoly`].
pub trait Coef: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn axpy(&mut self, other: &Self, factor: f64);
    fn add_number(&mut self, c: f64);
}

impl Coef for f64 {
    fn zero() -> Self {
        0.0
    }
    fn axpy(&mut self, other: &Self, factor: f64) {
        *self += other * factor;
    }
    fn add_number(&mut self, c: f64) {
        *self += c;
    }
}

impl Coef for LinExpr {
    fn zero() -> Self {
        LinExpr::zero()
    }
    fn axpy(&mut self, other: &Self, factor: f64) {
        self.add_scaled(other, factor);
    }
    fn add_number(&mut self, c: f64) {
        self.add_constant(c);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadPoly<T> {
    pub constant: T,
    pub linear: Vec<T>,
    pub quadratic: Vec<T>,
}

impl<T: Coef> QuadPoly<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            constant: T::zero(),
            linear: vec![T::zero(); dim],
            quadratic: vec![T::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, other: &QuadPoly<T>, factor: f64) {
        if factor == 0.0 {
            return;
        }
        self.constant.axpy(&other.constant, factor);
        for i in 0..self.dim() {
            self.linear[i].axpy(&other.linear[i], factor);
            self.quadratic[i].axpy(&other.quadratic[i], factor);
        }
    }

    /// The polynomial `n -> self(n + d)`.
    pub fn shifted(&self, d: &[i64]) -> QuadPoly<T> {
        let mut out = self.clone();
        for (i, &di) in d.iter().enumerate() {
            if di == 0 {
                continue;
            }
            let x = di as f64;
            out.constant.axpy(&self.linear[i], x);
            out.constant.axpy(&self.quadratic[i], x * x);
            out.linear[i].axpy(&self.quadratic[i], 2.0 * x);
        }
        out
    }

    /// Conditions `c <= 0` (one per returned coefficient) that together imply
    /// `self(n) <= 0` for every `n` in `region`.
    ///
    /// For each unbounded coordinate `i` with lower end `L_i`: `eta_i <= 0` and
    /// `2 L_i eta_i + h_i <= 0`; finally the value at the corner. Coordinates
    /// that are bounded must be pinned to a single value.
    pub fn nonpositivity_conditions(&self, region: &BoxRegion) -> Result<Vec<T>> {
        let mut out = Vec::new();
        let mut corner = self.constant.clone();
        for i in 0..self.dim() {
            let l = region.lower()[i];
            match region.upper()[i] {
                UpperBound::Finite(u) if u != l => {
                    return Err(Error::Refinement(format!(
                        "coordinate {} of {region} is bounded but not a single value",
                        i + 1
                    )))
                }
                UpperBound::Finite(_) => {}
                UpperBound::Infinite => {
                    out.push(self.quadratic[i].clone());
                    let mut slope = self.linear[i].clone();
                    slope.axpy(&self.quadratic[i], 2.0 * l as f64);
                    out.push(slope);
                }
            }
            let x = l as f64;
            corner.axpy(&self.linear[i], x);
            corner.axpy(&self.quadratic[i], x * x);
        }
        out.push(corner);
        Ok(out)
    }
}

impl QuadPoly<f64> {
    pub fn value(&self, n: &[i64]) -> f64 {
        let mut v = self.constant;
        for (i, &x) in n.iter().enumerate() {
            let x = x as f64;
            v += self.linear[i] * x + self.quadratic[i] * x * x;
        }
        v
    }

    /// Whether the corner reduction certifies `self <= 0` on `region`.
    pub fn certified_nonpositive(&self, region: &BoxRegion) -> Result<bool> {
        Ok(self
            .nonpositivity_conditions(region)?
            .into_iter()
            .all(|c| c <= 0.0))
    }
}

impl From<&Piece> for QuadPoly<f64> {
    fn from(p: &Piece) -> Self {
        Self {
            constant: p.constant,
            linear: p.linear.clone(),
            quadratic: p.quadratic.clone(),
        }
    }
}

impl From<&Piece> for QuadPoly<LinExpr> {
    fn from(p: &Piece) -> Self {
        Self {
            constant: LinExpr::constant(p.constant),
            linear: p.linear.iter().map(|&c| LinExpr::constant(c)).collect(),
            quadratic: p.quadratic.iter().map(|&c| LinExpr::constant(c)).collect(),
        }
    }
}

/// Splits each box so that every bounded coordinate is a single value.
pub fn pin_bounded_coordinates(region: &BoxRegion) -> Vec<BoxRegion> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for i in 0..region.dim() {
        let l = region.lower()[i];
        let choices: Vec<(i64, UpperBound)> = match region.upper()[i] {
            UpperBound::Finite(u) => (l..=u).map(|x| (x, UpperBound::Finite(x))).collect(),
            UpperBound::Infinite => vec![(l, UpperBound::Infinite)],
        };
        out = out
            .into_iter()
            .flat_map(|(lo, up): (Vec<i64>, Vec<UpperBound>)| {
                choices.iter().map(move |&(a, b)| {
                    let mut lo = lo.clone();
                    let mut up = up.clone();
                    lo.push(a);
                    up.push(b);
                    (lo, up)
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|(l, u)| BoxRegion::new(l, u).expect("sub-box of a valid box"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ray(l: i64) -> BoxRegion {
        BoxRegion::new(vec![l], vec![UpperBound::Infinite]).unwrap()
    }

    fn poly1(c: f64, h: f64, eta: f64) -> QuadPoly<f64> {
        QuadPoly {
            constant: c,
            linear: vec![h],
            quadratic: vec![eta],
        }
    }

    #[test]
    fn negative_linear_is_certified() {
        assert!(poly1(0.0, -1.0, 0.0).certified_nonpositive(&ray(1)).unwrap());
    }

    #[test]
    fn convex_quadratic_is_rejected_even_where_nonpositive() {
        let h = poly1(0.0, -10.0, 1.0);
        assert!(!h.certified_nonpositive(&ray(1)).unwrap());
        assert!((1..=9).all(|n| h.value(&[n]) <= 0.0));
    }

    #[test]
    fn concave_quadratic_is_certified_and_checked() {
        let h = poly1(0.0, 1.0, -1.0);
        assert!(h.certified_nonpositive(&ray(1)).unwrap());
        assert!((1..=100).all(|n| h.value(&[n]) <= 0.0));
    }

    #[test]
    fn multi_state_bounded_box_is_an_error() {
        let b = BoxRegion::new(vec![2], vec![UpperBound::Finite(3)]).unwrap();
        assert!(poly1(0.0, 0.0, 0.0).certified_nonpositive(&b).is_err());
        assert_eq!(pin_bounded_coordinates(&b).len(), 2);
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = QuadPoly {
            constant: 1.5,
            linear: vec![2.0, -1.0],
            quadratic: vec![0.5, -0.25],
        };
        let q = p.shifted(&[-1, 1]);
        for n in [[1i64, 0], [4, 7], [10, 2]] {
            assert!((q.value(&n) - p.value(&[n[0] - 1, n[1] + 1])).abs() < 1e-12);
        }
    }

    proptest! {
        // certified quadratics are non-positive on sampled states of the box
        #[test]
        fn certification_is_sound(
            c in -5.0f64..1.0,
            h in proptest::collection::vec(-3.0f64..1.0, 2),
            eta in proptest::collection::vec(-1.0f64..0.2, 2),
            l in proptest::collection::vec(0i64..4, 2),
            bounded in proptest::bool::ANY,
            pts in proptest::collection::vec((0i64..200, 0i64..200), 200),
        ) {
            let upper = vec![UpperBound::Infinite, if bounded { UpperBound::Finite(l[1]) } else { UpperBound::Infinite }];
            let region = BoxRegion::new(l.clone(), upper).unwrap();
            let p = QuadPoly { constant: c, linear: h, quadratic: eta };
            if p.certified_nonpositive(&region).unwrap() {
                for (a, b) in pts {
                    let n = [l[0] + a, if bounded { l[1] } else { l[1] + b }];
                    prop_assert!(p.value(&n) <= 1e-9);
                }
            }
        }
    }
}
