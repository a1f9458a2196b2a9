//! TOML model files. The schema is documented in `docs/model_schema.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Instance;
use crate::model::ctmc::{CtmcComponent, CtmcSpec};
use crate::model::geometry::{BoxRegion, Step};
use crate::model::piecewise::{Degree, Piece, PiecewiseFn};
use crate::model::product_form::{GeometricTerm, ProductFormDistribution};
use crate::model::walk::{Component, RandomWalkModel};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dimension: usize,
    /// When present, transitions are given as rates and divided by this constant.
    #[serde(default)]
    pub uniformization: Option<f64>,
    pub components: Vec<ComponentSpec>,
    pub reward: RewardSpec,
    /// Components of the perturbed walk that differ from the original.
    #[serde(default)]
    pub perturbed: Vec<TransitionOverride>,
    pub stationary: Vec<GeometricTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub name: String,
    pub boxes: Vec<BoxRegion>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub step: Step,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionOverride {
    pub name: String,
    pub transitions: Vec<TransitionSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    #[serde(default)]
    pub constant: f64,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub quadratic: Vec<f64>,
    #[serde(default)]
    pub overrides: Vec<RewardOverride>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardOverride {
    pub component: String,
    #[serde(default)]
    pub constant: f64,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub quadratic: Vec<f64>,
}

impl ModelFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn values(&self, component: &str, ts: &[TransitionSpec]) -> Result<Vec<(Step, f64)>> {
        let rated = self.uniformization.is_some();
        ts.iter()
            .map(|t| match (t.rate, t.prob, rated) {
                (Some(r), None, true) => Ok((t.step.clone(), r)),
                (None, Some(p), false) => Ok((t.step.clone(), p)),
                _ => Err(Error::Config(format!(
                    "component `{component}`, step {}: give `{}` (and only that) since uniformization is {}",
                    t.step,
                    if rated { "rate" } else { "prob" },
                    if rated { "set" } else { "absent" }
                ))),
            })
            .collect()
    }

    fn walk(&self, overrides: &[TransitionOverride]) -> Result<RandomWalkModel> {
        for o in overrides {
            if !self.components.iter().any(|c| c.name == o.name) {
                return Err(Error::Config(format!("override for unknown component `{}`", o.name)));
            }
        }
        let mut entries = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let ts = overrides
                .iter()
                .find(|o| o.name == c.name)
                .map_or(&c.transitions, |o| &o.transitions);
            entries.push((c, self.values(&c.name, ts)?));
        }
        match self.uniformization {
            Some(gamma) => CtmcSpec {
                dim: self.dimension,
                components: entries
                    .into_iter()
                    .map(|(c, rates)| CtmcComponent {
                        name: c.name.clone(),
                        boxes: c.boxes.clone(),
                        rates,
                    })
                    .collect(),
                gamma,
            }
            .uniformize(),
            None => {
                let comps = entries
                    .into_iter()
                    .map(|(c, probs)| Component::new(c.name.clone(), c.boxes.clone(), probs))
                    .collect::<Result<Vec<_>>>()?;
                RandomWalkModel::new(self.dimension, comps)
            }
        }
    }

    fn reward(&self, model: &RandomWalkModel) -> Result<PiecewiseFn> {
        let r = &self.reward;
        let base = Piece {
            constant: r.constant,
            linear: r.linear.clone(),
            quadratic: r.quadratic.clone(),
        };
        let mut pieces = vec![base; model.num_components()];
        for o in &r.overrides {
            let k = model.component_index(&o.component).ok_or_else(|| {
                Error::Config(format!("reward override for unknown component `{}`", o.component))
            })?;
            pieces[k] = Piece {
                constant: o.constant,
                linear: o.linear.clone(),
                quadratic: o.quadratic.clone(),
            };
        }
        let quadratic = pieces.iter().any(|p| p.quadratic.iter().any(|&q| q != 0.0));
        let degree = if quadratic { Degree::Quadratic } else { Degree::Linear };
        let f = PiecewiseFn::new(degree, pieces)?;
        f.check_against(model)?;
        Ok(f)
    }

    pub fn instance(&self) -> Result<Instance> {
        let model = self.walk(&[])?;
        let perturbed = self.walk(&self.perturbed)?;
        let stationary = ProductFormDistribution::new(self.stationary.clone())?;
        if stationary.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: stationary.dim(),
            });
        }
        Ok(Instance {
            reward: self.reward(&model)?,
            model,
            perturbed,
            stationary,
        })
    }
}
