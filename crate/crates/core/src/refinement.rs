//! Box refinements of a partition on which the component of every nearby
//! state is constant.
//!
//! Each refined component `Z_j` is a single box. Every bounded coordinate of
//! the box is a single value, so the box is determined by its corner and the
//! set `I(Z_j)` of unbounded coordinates. For every offset `d` with entries in
//! `-reach..=reach` the partition component of `n + d` is the same for all
//! `n` in `Z_j`; this is recorded in a shift table.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::geometry::{BoxRegion, State, UpperBound};
use crate::model::walk::RandomWalkModel;

/// Largest supported shift reach.
pub const MAX_REACH: u8 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedComponent {
    index: usize,
    region: BoxRegion,
    parent: usize,
    /// `c(n + d)` per offset in the reach cube; `None` when `n + d` leaves the orthant.
    shifts: Vec<Option<usize>>,
}

impl RefinedComponent {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    /// Index of the partition component containing this box.
    pub fn parent(&self) -> usize {
        self.parent
    }

    /// `L_{j,i}`.
    pub fn lower(&self) -> &[i64] {
        self.region.lower()
    }

    /// `U_{j,i}`.
    pub fn upper(&self) -> &[UpperBound] {
        self.region.upper()
    }

    /// `I(Z_j)`: coordinates in which the box is unbounded.
    pub fn unbounded_dims(&self) -> Vec<usize> {
        self.region.unbounded_dims()
    }

    /// The single state of `∂Z_j`.
    pub fn corner(&self) -> State {
        self.region.corner()
    }

    pub fn is_singleton(&self) -> bool {
        self.region.is_bounded()
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        self.region.contains(n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    dim: usize,
    reach: u8,
    components: Vec<RefinedComponent>,
}

/// Refinement with reach 1 (all unit steps).
pub fn refine(model: &RandomWalkModel) -> Result<Refinement> {
    refine_with_reach(model, 1)
}

/// Refinement whose shift table covers every offset in `{-reach..reach}^M`.
pub fn refine_with_reach(model: &RandomWalkModel, reach: u8) -> Result<Refinement> {
    if reach == 0 || reach > MAX_REACH {
        return Err(Error::Refinement(format!(
            "reach must lie in 1..={MAX_REACH}, got {reach}"
        )));
    }
    let dim = model.dim();
    let r = i64::from(reach);
    // cell boundaries: partition breakpoints translated by every offset
    let cells: Vec<Vec<(i64, UpperBound)>> = (0..dim)
        .map(|i| {
            let starts: BTreeSet<i64> = model
                .breakpoints(i)
                .into_iter()
                .flat_map(|b| (-r..=r).map(move |t| (b + t).max(0)))
                .collect();
            let starts: Vec<i64> = starts.into_iter().collect();
            let mut out = Vec::new();
            for (k, &s) in starts.iter().enumerate() {
                match starts.get(k + 1) {
                    // bounded ranges are cut into single values
                    Some(&next) => out.extend((s..next).map(|x| (x, UpperBound::Finite(x)))),
                    None => out.push((s, UpperBound::Infinite)),
                }
            }
            out
        })
        .collect();

    let mut regions = Vec::new();
    let mut idx = vec![0usize; dim];
    'outer: loop {
        let (lower, upper): (Vec<i64>, Vec<UpperBound>) =
            idx.iter().zip(&cells).map(|(&k, c)| c[k]).unzip();
        regions.push(BoxRegion::new(lower, upper)?);
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < cells[d].len() {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    regions.sort_by(|a, b| a.lower().cmp(b.lower()));

    let offsets = reach_cube(dim, reach);
    let components = regions
        .into_iter()
        .enumerate()
        .map(|(index, region)| {
            let corner = region.corner();
            let parent = model.component_of(corner.coords());
            let shifts = offsets
                .iter()
                .map(|d| corner.offset(d).map(|m| model.component_of(m.coords())))
                .collect();
            RefinedComponent {
                index,
                region,
                parent,
                shifts,
            }
        })
        .collect();
    Ok(Refinement {
        dim,
        reach,
        components,
    })
}

/// All offsets in `{-reach..reach}^dim`, first coordinate varying slowest.
pub fn reach_cube(dim: usize, reach: u8) -> Vec<Vec<i64>> {
    let r = i64::from(reach);
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-r..=r).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

impl Refinement {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reach(&self) -> u8 {
        self.reach
    }

    pub fn components(&self) -> &[RefinedComponent] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &RefinedComponent {
        &self.components[j]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Membership function `z(n)`.
    pub fn z(&self, n: &[i64]) -> usize {
        self.components
            .iter()
            .position(|c| c.contains(n))
            .unwrap_or_else(|| panic!("state {n:?} is not covered by the refinement"))
    }

    /// Position of `d` in the shift table, if within reach.
    pub fn offset_index(&self, d: &[i64]) -> Option<usize> {
        let r = i64::from(self.reach);
        let mut idx = 0usize;
        for &x in d {
            if !(-r..=r).contains(&x) {
                return None;
            }
            idx = idx * (2 * r as usize + 1) + (x + r) as usize;
        }
        Some(idx)
    }

    /// `c(n + d)` for any `n` in `Z_j`, or `None` when `n + d` leaves the orthant.
    pub fn try_shift(&self, j: usize, d: &[i64]) -> Result<Option<usize>> {
        if d.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: d.len(),
            });
        }
        let k = self.offset_index(d).ok_or_else(|| {
            Error::Refinement(format!("offset {d:?} exceeds the refinement reach {}", self.reach))
        })?;
        Ok(self.components[j].shifts[k])
    }

    /// `c(n + d)` for any `n` in `Z_j`.
    pub fn shift_component(&self, j: usize, d: &[i64]) -> Result<usize> {
        self.try_shift(j, d)?.ok_or_else(|| {
            Error::OutOfRange(format!(
                "offset {d:?} leaves the orthant from refined component {j}"
            ))
        })
    }

    /// Text table of the refined components.
    pub fn dump(&self, model: &RandomWalkModel) -> String {
        let mut s = String::from("j\tbox\tI(Z_j)\tcorner\tparent\n");
        for c in &self.components {
            let unb: Vec<String> = c.unbounded_dims().iter().map(|i| (i + 1).to_string()).collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{{{}}}\t{}\t{}",
                c.index,
                c.region,
                unb.join(","),
                c.corner(),
                model.component(c.parent).name()
            );
        }
        s
    }
}
