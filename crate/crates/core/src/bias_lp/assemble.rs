//! Assembly of the restricted bias linear programs.
//!
//! Unknowns are the coefficients of `Fbar` (affine per partition component),
//! `G`, and the bias envelopes `A_u`, `B_u` (polynomial of the chosen degree
//! per component). Every pointwise inequality is reduced to finitely many
//! linear rows with [`QuadPoly::nonpositivity_conditions`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bias_lp::phi::{build_phi_table, PhiTable};
use crate::bias_lp::quadform::{pin_bounded_coordinates, QuadPoly};
use crate::error::{Error, Result};
use crate::families::Instance;
use crate::lp::{ConstraintSense, Direction, LinExpr, LinearProgramSpec};
use crate::model::geometry::{BoxRegion, Step};
use crate::model::piecewise::Degree;
use crate::model::product_form::Moments;
use crate::refinement::{refine_with_reach, Refinement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// Steps `u` for which envelopes `A_u`, `B_u` are introduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSelection {
    /// Steps with positive probability in the original or the perturbed walk.
    Active,
    /// Active steps together with their negations.
    Symmetric,
    /// Every non-zero unit step.
    #[default]
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasLpOptions {
    pub steps: StepSelection,
    /// Reach of the refinement; arcs of the flow decompositions start within it.
    pub reach: u8,
}

impl Default for BiasLpOptions {
    fn default() -> Self {
        Self {
            steps: StepSelection::All,
            reach: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Two-sided error bound `|Fbar - F + sum delta D| <= G`.
    Bias,
    /// One-sided comparison certificate with `G = 0`.
    Comparison,
}

/// Refinement, step set, flow decompositions and moments shared by all
/// programs built for one instance.
#[derive(Clone, Debug)]
pub struct BiasContext<'a> {
    pub instance: &'a Instance,
    pub refinement: Refinement,
    pub steps: Vec<Step>,
    pub phi: PhiTable,
    pub moments: Vec<Moments>,
}

/// An assembled program together with the polynomial blocks that map LP
/// values back to functions.
#[derive(Clone, Debug)]
pub struct AssembledLp {
    pub spec: LinearProgramSpec,
    pub side: Side,
    pub kind: BoundKind,
    pub degree: Degree,
    /// Some generated row had no variables and was violated.
    pub trivially_infeasible: bool,
    pub fbar: Vec<QuadPoly<LinExpr>>,
    pub g: Vec<QuadPoly<LinExpr>>,
    pub a: BTreeMap<(Step, usize), QuadPoly<LinExpr>>,
    pub b: BTreeMap<(Step, usize), QuadPoly<LinExpr>>,
}

fn select_steps(instance: &Instance, selection: StepSelection) -> Vec<Step> {
    let active = |u: &Step| {
        [&instance.model, &instance.perturbed]
            .iter()
            .any(|m| m.components().iter().any(|c| c.prob(u) > 0.0))
    };
    Step::all(instance.model.dim())
        .into_iter()
        .filter(|u| !u.is_zero())
        .filter(|u| match selection {
            StepSelection::All => true,
            StepSelection::Active => active(u),
            StepSelection::Symmetric => active(u) || active(&u.negated()),
        })
        .collect()
}

impl<'a> BiasContext<'a> {
    pub fn new(instance: &'a Instance, options: BiasLpOptions) -> Result<Self> {
        if !instance.model.same_partition(&instance.perturbed) {
            return Err(Error::InvalidPartition(
                "original and perturbed walks must share the partition".into(),
            ));
        }
        instance.reward.check_against(&instance.model)?;
        let refinement = refine_with_reach(&instance.model, options.reach)?;
        let steps = select_steps(instance, options.steps);
        let phi = build_phi_table(&instance.model, &refinement, &steps)?;
        let moments = instance.stationary.component_moments(&instance.model)?;
        Ok(Self {
            instance,
            refinement,
            steps,
            phi,
            moments,
        })
    }

    fn dim(&self) -> usize {
        self.instance.model.dim()
    }

    /// Free coefficients of one polynomial block on component `k`. Coordinates
    /// that vanish on the component get no variables.
    fn block(&self, lp: &mut LinearProgramSpec, name: &str, k: usize, degree: Degree) -> QuadPoly<LinExpr> {
        let comp = self.instance.model.component(k);
        let mut p = QuadPoly::<LinExpr>::zero(self.dim());
        p.constant = LinExpr::var(lp.add_variable(format!("{name}[{}].c", comp.name()), false));
        for i in 0..self.dim() {
            if !comp.positive_in(i) {
                continue;
            }
            p.linear[i] = LinExpr::var(lp.add_variable(format!("{name}[{}].h{}", comp.name(), i + 1), false));
            if degree == Degree::Quadratic {
                p.quadratic[i] =
                    LinExpr::var(lp.add_variable(format!("{name}[{}].q{}", comp.name(), i + 1), false));
            }
        }
        p
    }

    fn reward_poly(&self, k: usize) -> QuadPoly<LinExpr> {
        QuadPoly::from(self.instance.reward.piece(k))
    }

    /// Pieces of component `k` on which the corner reduction applies.
    fn component_regions(&self, k: usize) -> Vec<BoxRegion> {
        self.instance
            .model
            .component(k)
            .boxes()
            .iter()
            .flat_map(pin_bounded_coordinates)
            .collect()
    }

    /// Envelope estimate of `sum_u (p̄ - p) D_u` on component `k`. The upper
    /// estimate uses `delta B_u` where `delta > 0` and `|delta| A_u` elsewhere;
    /// the other estimate swaps the roles (it bounds the negated sum).
    fn perturbation_term(
        &self,
        k: usize,
        upper_estimate: bool,
        a: &BTreeMap<(Step, usize), QuadPoly<LinExpr>>,
        b: &BTreeMap<(Step, usize), QuadPoly<LinExpr>>,
    ) -> Result<QuadPoly<LinExpr>> {
        let orig = self.instance.model.component(k);
        let pert = self.instance.perturbed.component(k);
        let mut out = QuadPoly::zero(self.dim());
        for u in orig.steps() {
            if u.is_zero() {
                continue;
            }
            let delta = pert.prob(u) - orig.prob(u);
            if delta == 0.0 {
                continue;
            }
            let use_b = (delta > 0.0) == upper_estimate;
            let env = if use_b { b } else { a };
            let block = env.get(&(u.clone(), k)).ok_or_else(|| {
                Error::Lp(format!("no envelope for step {u} on component {}", orig.name()))
            })?;
            out.axpy(block, delta.abs());
        }
        Ok(out)
    }

    /// Builds the bias program for `side` with envelopes of `degree`.
    pub fn assemble(&self, side: Side, degree: Degree) -> Result<AssembledLp> {
        self.build(side, BoundKind::Bias, degree, false)
    }

    /// Builds the comparison program for `side`. With `fixed_reward` the
    /// perturbed reward equals the original one and only envelopes are searched.
    pub fn assemble_comparison(&self, side: Side, degree: Degree, fixed_reward: bool) -> Result<AssembledLp> {
        self.build(side, BoundKind::Comparison, degree, fixed_reward)
    }

    fn build(&self, side: Side, kind: BoundKind, degree: Degree, fixed_reward: bool) -> Result<AssembledLp> {
        let model = &self.instance.model;
        let ncomp = model.num_components();
        let direction = match side {
            Side::Upper => Direction::Minimize,
            Side::Lower => Direction::Maximize,
        };
        let mut lp = LinearProgramSpec::new(
            format!("{kind:?} {side:?} degree {}", degree.as_int()).to_lowercase(),
            direction,
        );

        let fbar: Vec<QuadPoly<LinExpr>> = (0..ncomp)
            .map(|k| {
                if fixed_reward {
                    self.reward_poly(k)
                } else {
                    self.block(&mut lp, "Fbar", k, Degree::Linear)
                }
            })
            .collect();
        let g: Vec<QuadPoly<LinExpr>> = (0..ncomp)
            .map(|k| match kind {
                BoundKind::Bias => self.block(&mut lp, "G", k, degree),
                BoundKind::Comparison => QuadPoly::zero(self.dim()),
            })
            .collect();
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for u in &self.steps {
            for k in 0..ncomp {
                if model.component(k).admits(u) {
                    a.insert((u.clone(), k), self.block(&mut lp, &format!("A{u}"), k, degree));
                    b.insert((u.clone(), k), self.block(&mut lp, &format!("B{u}"), k, degree));
                }
            }
        }

        let mut trivially_infeasible = false;
        let mut emit = |lp: &mut LinearProgramSpec, name: String, h: &QuadPoly<LinExpr>, region: &BoxRegion| -> Result<()> {
            for c in h.nonpositivity_conditions(region)? {
                if !lp.add_constraint(name.clone(), &c, ConstraintSense::Le) {
                    trivially_infeasible = true;
                }
            }
            Ok(())
        };

        // per-component rows: error bounds and non-negativity
        for k in 0..ncomp {
            let cname = model.component(k).name().to_string();
            let f = self.reward_poly(k);
            let mut diff = fbar[k].clone();
            diff.axpy(&f, -1.0);
            let mut rows: Vec<(String, QuadPoly<LinExpr>)> = Vec::new();
            // Fbar - F + max-term - G <= 0
            let upper_dev = {
                let mut h = diff.clone();
                h.axpy(&self.perturbation_term(k, true, &a, &b)?, 1.0);
                h.axpy(&g[k], -1.0);
                h
            };
            // F - Fbar + max-term - G <= 0
            let lower_dev = {
                let mut h = diff.clone();
                h.constant = h.constant.scaled(-1.0);
                for i in 0..self.dim() {
                    h.linear[i] = h.linear[i].scaled(-1.0);
                    h.quadratic[i] = h.quadratic[i].scaled(-1.0);
                }
                h.axpy(&self.perturbation_term(k, false, &a, &b)?, 1.0);
                h.axpy(&g[k], -1.0);
                h
            };
            match (kind, side) {
                (BoundKind::Bias, _) => {
                    rows.push((format!("err+ {cname}"), upper_dev));
                    rows.push((format!("err- {cname}"), lower_dev));
                }
                (BoundKind::Comparison, Side::Upper) => rows.push((format!("cmp {cname}"), lower_dev)),
                (BoundKind::Comparison, Side::Lower) => rows.push((format!("cmp {cname}"), upper_dev)),
            }
            let mut negate = |name: &str, p: &QuadPoly<LinExpr>| {
                let mut h = QuadPoly::zero(self.dim());
                h.axpy(p, -1.0);
                rows.push((format!("{name}>=0 {cname}"), h));
            };
            if !fixed_reward {
                negate("Fbar", &fbar[k]);
            }
            if kind == BoundKind::Bias {
                negate("G", &g[k]);
            }
            for u in &self.steps {
                if let Some(p) = a.get(&(u.clone(), k)) {
                    negate(&format!("A{u}"), p);
                }
                if let Some(p) = b.get(&(u.clone(), k)) {
                    negate(&format!("B{u}"), p);
                }
            }
            for region in self.component_regions(k) {
                for (name, h) in &rows {
                    emit(&mut lp, name.clone(), h, &region)?;
                }
            }
        }

        // propagation rows on every refined component
        let z = &self.refinement;
        for rc in z.components() {
            let j = rc.index();
            let k = rc.parent();
            for u in &self.steps {
                if !model.component(k).admits(u) {
                    continue;
                }
                let entry = self.phi.get(j, u).ok_or_else(|| {
                    Error::Lp(format!("missing flow decomposition for component {j}, step {u}"))
                })?;
                let ku = z.shift_component(j, &u.as_i64())?;
                // F(n+u) - F(n)
                let mut df = QuadPoly::<LinExpr>::from(self.instance.reward.piece(ku)).shifted(&u.as_i64());
                df.axpy(&self.reward_poly(k), -1.0);
                let mut hb = df.clone();
                let mut ha = QuadPoly::zero(self.dim());
                ha.axpy(&df, -1.0);
                for arc in &entry.arcs {
                    let kd = z.shift_component(j, &arc.d)?;
                    let key = (arc.v.clone(), kd);
                    let bv = b.get(&key).ok_or_else(|| Error::Lp(format!("no envelope B{} on {kd}", arc.v)))?;
                    let av = a.get(&key).ok_or_else(|| Error::Lp(format!("no envelope A{} on {kd}", arc.v)))?;
                    hb.axpy(&bv.shifted(&arc.d), arc.weight);
                    ha.axpy(&av.shifted(&arc.d), arc.weight);
                }
                hb.axpy(&b[&(u.clone(), k)], -1.0);
                ha.axpy(&a[&(u.clone(), k)], -1.0);
                emit(&mut lp, format!("prop B{u} Z{j}"), &hb, rc.region())?;
                emit(&mut lp, format!("prop A{u} Z{j}"), &ha, rc.region())?;
            }
        }
        lp.dedup_constraints();

        // objective: sum over components of (Fbar +/- G) against the moments
        let mut obj = LinExpr::zero();
        let sign = match side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        };
        for (k, m) in self.moments.iter().enumerate() {
            let mut p = fbar[k].clone();
            p.axpy(&g[k], sign);
            obj.add_scaled(&p.constant, m.mass);
            for i in 0..self.dim() {
                obj.add_scaled(&p.linear[i], m.first[i]);
                obj.add_scaled(&p.quadratic[i], m.second[i]);
            }
        }
        lp.set_objective(&obj);

        Ok(AssembledLp {
            spec: lp,
            side,
            kind,
            degree,
            trivially_infeasible,
            fbar,
            g,
            a,
            b,
        })
    }
}
