//! Potential-function predictors.
//!
//! A predictor maps a partial map to an area potential and a per-category
//! object potential. Three built-in kinds exist: an oracle that computes the
//! exact potentials against the complete map (the upper bound a learned
//! model approximates), and two baselines that only look at the partial map.
//! The [`PotentialPredictor`] trait is the plug point for external models;
//! implementations must be safe to call concurrently from parallel episode
//! workers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TrainingTuple;
use crate::error::{Error, Result};
use crate::grid::{extract_frontiers, CategoryId, SemanticGrid};
use crate::potentials::{
    area_potential, object_potential, pf_loss, PotentialField, PotentialParams,
};
use crate::scalar::Scalar;

/// Built-in predictor selection, also the CLI `--predictor` vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    /// Exact potentials from the complete map.
    Oracle,
    /// Area channel proportional to frontier-cluster size; object channel
    /// zero.
    FrontierAreaHeuristic,
    /// Area channel 1 on every frontier cell; object channel zero.
    UniformFrontier,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 3] = [
        PredictorKind::Oracle,
        PredictorKind::FrontierAreaHeuristic,
        PredictorKind::UniformFrontier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Oracle => "oracle",
            PredictorKind::FrontierAreaHeuristic => "frontier-area-heuristic",
            PredictorKind::UniformFrontier => "uniform-frontier",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PredictorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown predictor '{s}' (expected one of: oracle, \
                     frontier-area-heuristic, uniform-frontier)"
                ))
            })
    }
}

/// Plug point for external potential models. Implementations are read-only
/// and callable from several threads at once.
pub trait PotentialPredictor<F: Scalar = f64>: Send + Sync {
    /// Predicts the area channel and the object channel for `category` on
    /// `partial`.
    fn predict(
        &self,
        partial: &SemanticGrid<F>,
        category: CategoryId,
    ) -> Result<(PotentialField<F>, PotentialField<F>)>;
}

/// Exact potentials computed against the held complete map.
pub struct OraclePredictor<'a, F: Scalar = f64> {
    pub complete: &'a SemanticGrid<F>,
    pub params: PotentialParams<F>,
}

impl<F: Scalar> PotentialPredictor<F> for OraclePredictor<'_, F> {
    fn predict(
        &self,
        partial: &SemanticGrid<F>,
        category: CategoryId,
    ) -> Result<(PotentialField<F>, PotentialField<F>)> {
        Ok((
            area_potential(partial, self.complete, &self.params)?,
            object_potential(partial, self.complete, category, &self.params)?,
        ))
    }
}

fn heuristic_area<F: Scalar>(partial: &SemanticGrid<F>, uniform: bool) -> PotentialField<F> {
    let mut field = PotentialField::zeros(partial.width(), partial.height());
    let frontiers = extract_frontiers(partial);
    let largest = frontiers.iter().map(|f| f.cells.len()).max().unwrap_or(0);
    for f in &frontiers {
        let value = if uniform {
            F::one()
        } else {
            F::from_cells(f.cells.len()) / F::from_cells(largest)
        };
        for &c in &f.cells {
            field.set(c, value);
        }
    }
    field
}

/// Baseline: each frontier cell scores its cluster's size relative to the
/// largest cluster; no object information.
pub struct FrontierAreaPredictor;

impl<F: Scalar> PotentialPredictor<F> for FrontierAreaPredictor {
    fn predict(
        &self,
        partial: &SemanticGrid<F>,
        _category: CategoryId,
    ) -> Result<(PotentialField<F>, PotentialField<F>)> {
        Ok((
            heuristic_area(partial, false),
            PotentialField::zeros(partial.width(), partial.height()),
        ))
    }
}

/// Baseline: every frontier cell scores 1; no object information.
pub struct UniformFrontierPredictor;

impl<F: Scalar> PotentialPredictor<F> for UniformFrontierPredictor {
    fn predict(
        &self,
        partial: &SemanticGrid<F>,
        _category: CategoryId,
    ) -> Result<(PotentialField<F>, PotentialField<F>)> {
        Ok((
            heuristic_area(partial, true),
            PotentialField::zeros(partial.width(), partial.height()),
        ))
    }
}

/// Runs the predictor selected by `kind`. The oracle needs `complete`; the
/// baselines ignore it.
pub fn predict<F: Scalar>(
    kind: PredictorKind,
    partial: &SemanticGrid<F>,
    complete: Option<&SemanticGrid<F>>,
    category: CategoryId,
    params: &PotentialParams<F>,
) -> Result<(PotentialField<F>, PotentialField<F>)> {
    match kind {
        PredictorKind::Oracle => {
            let complete = complete.ok_or_else(|| {
                Error::invalid("the oracle predictor requires the complete map")
            })?;
            OraclePredictor {
                complete,
                params: params.clone(),
            }
            .predict(partial, category)
        }
        PredictorKind::FrontierAreaHeuristic => FrontierAreaPredictor.predict(partial, category),
        PredictorKind::UniformFrontier => UniformFrontierPredictor.predict(partial, category),
    }
}

/// One area channel plus one object channel per category in table order.
pub fn predict_all<F: Scalar>(
    kind: PredictorKind,
    partial: &SemanticGrid<F>,
    complete: Option<&SemanticGrid<F>>,
    params: &PotentialParams<F>,
) -> Result<(PotentialField<F>, Vec<PotentialField<F>>)> {
    let n = partial.categories().len();
    let (area, first_object) = predict(kind, partial, complete, CategoryId(0), params)?;
    let mut objects = Vec::with_capacity(n);
    objects.push(first_object);
    for i in 1..n {
        let (_, object) = predict(kind, partial, complete, CategoryId(i as u16), params)?;
        objects.push(object);
    }
    Ok((area, objects))
}

/// A tuple to score, with the matching complete map when the oracle needs
/// one.
pub struct DatasetItem<F: Scalar = f64> {
    pub tuple: TrainingTuple<F>,
    pub complete: Option<SemanticGrid<F>>,
}

/// Mean frontier losses of a predictor over a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorScore<F: Scalar = f64> {
    /// Mean area-channel loss over evaluated tuples.
    pub area_loss: F,
    /// Mean object-channel loss over evaluated tuples.
    pub object_loss: F,
    /// Tuples that contributed to the means.
    pub evaluated: usize,
    /// Tuples skipped for having no frontier cells.
    pub skipped: usize,
}

/// Scores `kind` against every tuple's stored targets. Tuples without
/// frontier cells are skipped and counted; with nothing evaluated both means
/// are zero.
pub fn evaluate_predictor<F: Scalar>(
    kind: PredictorKind,
    items: &[DatasetItem<F>],
    params: &PotentialParams<F>,
) -> Result<PredictorScore<F>> {
    let mut area_sum = F::zero();
    let mut object_sum = F::zero();
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for item in items {
        let tuple = &item.tuple;
        if tuple.frontier_cells.is_empty() {
            skipped += 1;
            continue;
        }
        let (area, objects) = predict_all(kind, &tuple.partial, item.complete.as_ref(), params)?;
        let (la, lc) = pf_loss(
            &area,
            &objects,
            &tuple.target_area,
            &tuple.target_objects,
            &tuple.frontier_cells,
        )?;
        area_sum += la;
        object_sum += lc;
        evaluated += 1;
    }
    let (area_loss, object_loss) = if evaluated == 0 {
        (F::zero(), F::zero())
    } else {
        let n = F::from_cells(evaluated);
        (area_sum / n, object_sum / n)
    };
    Ok(PredictorScore {
        area_loss,
        object_loss,
        evaluated,
        skipped,
    })
}
