//! Frontier potential functions over semantic grids.
//!
//! Three ingredients, each a scalar field in `[0, 1]` that is non-zero only
//! on frontier cells:
//!
//! * area potential: how much unexplored free space a frontier gates,
//!   normalized by the complete map's free area (or a fixed constant);
//! * object potential: `max(1 - d_g / d_max, 0)` where `d_g` is the geodesic
//!   distance from the frontier cell to the success zone around the nearest
//!   instance of the goal category;
//! * distance potential: `max(1 - d_g(agent, x) / horizon, 0)`, an action
//!   cost proxy that prefers frontiers near the agent.
//!
//! The fields combine affinely (`alpha` blend, or an `alpha/beta/gamma`
//! action-cost variant) and the argmax of the combined field is the long-term
//! navigation goal.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::{distance_field, DistanceField, FieldMode};
use crate::grid::{
    associate_components, extract_frontiers, unexplored_components, CategoryId, GridCell,
    SemanticGrid,
};
use crate::scalar::Scalar;

/// Scalar field over a grid with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField<F: Scalar = f64> {
    width: usize,
    height: usize,
    values: Vec<F>,
}

impl<F: Scalar> PotentialField<F> {
    pub fn zeros(width: usize, height: usize) -> Self {
        PotentialField {
            width,
            height,
            values: vec![F::zero(); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn idx(&self, c: GridCell) -> usize {
        debug_assert!(c.row < self.height && c.col < self.width);
        c.row * self.width + c.col
    }

    #[inline]
    pub fn get(&self, c: GridCell) -> F {
        self.values[self.idx(c)]
    }

    #[inline]
    pub fn set(&mut self, c: GridCell, v: F) {
        let i = self.idx(c);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn same_shape(&self, other: &PotentialField<F>) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                expected_width: self.width,
                expected_height: self.height,
                got_width: other.width,
                got_height: other.height,
            });
        }
        Ok(())
    }

    pub fn max_value(&self) -> F {
        self.values
            .iter()
            .copied()
            .fold(F::zero(), |a, b| if b > a { b } else { a })
    }

    fn check_shape_against<G: Scalar>(&self, grid: &SemanticGrid<G>) -> Result<()> {
        if self.width != grid.width() || self.height != grid.height() {
            return Err(Error::ShapeMismatch {
                expected_width: grid.width(),
                expected_height: grid.height(),
                got_width: self.width,
                got_height: self.height,
            });
        }
        Ok(())
    }
}

/// Normalizer for the area potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaNormalizer<F: Scalar = f64> {
    /// Divide gated area by the complete map's total free area.
    TotalFreeSpace,
    /// Divide gated area (m^2) by a fixed constant (m^2).
    FixedConstant(F),
}

/// Weights and scales for the potential functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialParams<F: Scalar = f64> {
    /// Area/object blend weight in [0, 1].
    pub alpha: F,
    /// Distance saturation for the object potential, meters.
    pub d_max_m: F,
    /// Object weight in the action-cost combination.
    pub beta: F,
    /// Distance-potential weight in the action-cost combination.
    pub gamma: F,
    pub area_norm: AreaNormalizer<F>,
    /// Radius of the success zone around goal objects, meters.
    pub success_radius_m: F,
}

impl<F: Scalar> Default for PotentialParams<F> {
    fn default() -> Self {
        PotentialParams {
            alpha: F::c(0.5),
            d_max_m: F::c(10.0),
            beta: F::c(0.5),
            gamma: F::zero(),
            area_norm: AreaNormalizer::TotalFreeSpace,
            success_radius_m: F::c(1.0),
        }
    }
}

impl<F: Scalar> PotentialParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= F::zero() && self.alpha <= F::one()) {
            return Err(Error::invalid(format!(
                "potential.alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.d_max_m > F::zero()) {
            return Err(Error::invalid(format!(
                "potential.d_max_m must be positive, got {}",
                self.d_max_m
            )));
        }
        if !(self.beta >= F::zero()) || !(self.gamma >= F::zero()) {
            return Err(Error::invalid(
                "potential.beta and potential.gamma must be non-negative",
            ));
        }
        if !(self.success_radius_m >= F::zero()) {
            return Err(Error::invalid(format!(
                "potential.success_radius_m must be non-negative, got {}",
                self.success_radius_m
            )));
        }
        if let AreaNormalizer::FixedConstant(v) = self.area_norm {
            if !(v > F::zero()) {
                return Err(Error::invalid(format!(
                    "potential.area_norm fixed constant must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Checks `alpha + beta + gamma == 1` within 1e-9 for the action-cost
    /// combination.
    pub fn validate_action_cost(&self) -> Result<()> {
        self.validate()?;
        let sum = self.alpha + self.beta + self.gamma;
        if (sum - F::one()).abs() > F::c(1e-9) {
            return Err(Error::invalid(format!(
                "action-cost weights must sum to 1 (alpha + beta + gamma = {sum})"
            )));
        }
        Ok(())
    }
}

/// Area potential: each frontier carries the summed area of the unexplored
/// free-space components it touches, divided by the normalizer, clamped to
/// `[0, 1]`, written on the frontier's cells. Everything else is zero.
pub fn area_potential<F: Scalar>(
    partial: &SemanticGrid<F>,
    complete: &SemanticGrid<F>,
    params: &PotentialParams<F>,
) -> Result<PotentialField<F>> {
    partial.same_shape(complete)?;
    params.validate()?;
    let components = unexplored_components(partial, complete)?;
    let frontiers = extract_frontiers(partial);
    let assoc = associate_components(&frontiers, &components, partial.width(), partial.height());

    let res = complete.resolution();
    let mut field = PotentialField::zeros(partial.width(), partial.height());
    for f in &frontiers {
        let comp_ids = &assoc[&f.id];
        let gated_cells: usize = comp_ids
            .iter()
            .map(|&id| components[id as usize].area_cells())
            .sum();
        let value = match params.area_norm {
            AreaNormalizer::TotalFreeSpace => {
                let total = complete.count_free();
                if total == 0 {
                    return Err(Error::invalid(
                        "area normalizer is zero: complete map has no free space",
                    ));
                }
                F::from_cells(gated_cells) / F::from_cells(total)
            }
            AreaNormalizer::FixedConstant(norm) => {
                let area_m2 = F::from_cells(gated_cells) * res * res;
                (area_m2 / norm).min(F::one())
            }
        };
        for &c in &f.cells {
            field.set(c, value);
        }
    }
    Ok(field)
}

/// Object potential from a precomputed success-zone distance field. Values
/// are written on frontier cells of `partial` only; unreachable frontier
/// cells and distances beyond `d_max_m` read zero.
pub fn object_potential_from_distance<F: Scalar>(
    partial: &SemanticGrid<F>,
    zone: &DistanceField<F>,
    params: &PotentialParams<F>,
) -> Result<PotentialField<F>> {
    if zone.width() != partial.width() || zone.height() != partial.height() {
        return Err(Error::ShapeMismatch {
            expected_width: partial.width(),
            expected_height: partial.height(),
            got_width: zone.width(),
            got_height: zone.height(),
        });
    }
    params.validate()?;
    let mut field = PotentialField::zeros(partial.width(), partial.height());
    for f in extract_frontiers(partial) {
        for &c in &f.cells {
            let d = zone.get(c);
            if d.is_finite() {
                let v = (F::one() - d / params.d_max_m).max(F::zero());
                field.set(c, v);
            }
        }
    }
    Ok(field)
}

/// Object potential for `category`: `max(1 - d_g / d_max, 0)` on frontier
/// cells, with `d_g` the geodesic distance (on the complete map) to the
/// success zone of radius `success_radius_m` around the category's objects.
pub fn object_potential<F: Scalar>(
    partial: &SemanticGrid<F>,
    complete: &SemanticGrid<F>,
    category: CategoryId,
    params: &PotentialParams<F>,
) -> Result<PotentialField<F>> {
    partial.same_shape(complete)?;
    params.validate()?;
    let zone = crate::geodesics::success_zone_distance(complete, category, params.success_radius_m)?;
    object_potential_from_distance(partial, &zone, params)
}

/// `alpha * area + (1 - alpha) * object`.
pub fn combine<F: Scalar>(
    area: &PotentialField<F>,
    object: &PotentialField<F>,
    params: &PotentialParams<F>,
) -> Result<PotentialField<F>> {
    area.same_shape(object)?;
    params.validate()?;
    let mut out = PotentialField::zeros(area.width, area.height);
    for i in 0..out.values.len() {
        out.values[i] = params.alpha * area.values[i] + (F::one() - params.alpha) * object.values[i];
    }
    Ok(out)
}

/// Distance potential: `max(1 - d_g(agent, x) / horizon, 0)` over explored
/// free cells of the partial map, zero elsewhere. Geodesics run on the
/// partial obstacle map (known obstacles block, unexplored cells pass).
pub fn distance_potential<F: Scalar>(
    partial: &SemanticGrid<F>,
    agent: GridCell,
    horizon_m: F,
) -> Result<PotentialField<F>> {
    partial.check_bounds(agent)?;
    if !partial.is_explored(agent) || partial.is_obstacle(agent) {
        return Err(Error::invalid(format!(
            "agent cell ({}, {}) must be explored free space",
            agent.row, agent.col
        )));
    }
    if !(horizon_m > F::zero()) {
        return Err(Error::invalid(format!(
            "horizon must be positive, got {horizon_m}"
        )));
    }
    let sources: BTreeSet<GridCell> = [agent].into_iter().collect();
    let traversable = |c: GridCell| !(partial.is_explored(c) && partial.is_obstacle(c));
    let field = distance_field(partial, &sources, traversable, FieldMode::DijkstraOctile)?;
    let mut out = PotentialField::zeros(partial.width(), partial.height());
    for c in partial.cells() {
        if partial.is_explored(c) && partial.is_free(c) {
            let d = field.get(c);
            if d.is_finite() {
                out.set(c, (F::one() - d / horizon_m).max(F::zero()));
            }
        }
    }
    Ok(out)
}

/// `alpha * area + beta * object + gamma * dist`; the weights must sum to 1.
pub fn combine_with_action_cost<F: Scalar>(
    area: &PotentialField<F>,
    object: &PotentialField<F>,
    dist: &PotentialField<F>,
    params: &PotentialParams<F>,
) -> Result<PotentialField<F>> {
    area.same_shape(object)?;
    area.same_shape(dist)?;
    params.validate_action_cost()?;
    let mut out = PotentialField::zeros(area.width, area.height);
    for i in 0..out.values.len() {
        out.values[i] = params.alpha * area.values[i]
            + params.beta * object.values[i]
            + params.gamma * dist.values[i];
    }
    Ok(out)
}

/// Long-term goal sampling: zero the field at explored non-frontier cells
/// (unexplored values are retained), then take the argmax. Ties prefer the
/// cell geodesically nearest the agent on the partial map (unexplored
/// traversable), then smallest (row, col). Returns `None` when the filtered
/// field is all zero, in which case callers fall back to a frontier.
pub fn sample_long_term_goal<F: Scalar>(
    field: &PotentialField<F>,
    partial: &SemanticGrid<F>,
    agent: GridCell,
) -> Result<Option<GridCell>> {
    field.check_shape_against(partial)?;
    partial.check_bounds(agent)?;
    let frontiers = extract_frontiers(partial);
    let mut frontier_mask = vec![false; partial.len()];
    for f in &frontiers {
        for &c in &f.cells {
            frontier_mask[partial.idx(c)] = true;
        }
    }
    let mut best_val = F::zero();
    let mut candidates: Vec<GridCell> = Vec::new();
    for c in partial.cells() {
        let i = partial.idx(c);
        let retained = !partial.is_explored(c) || frontier_mask[i];
        if !retained {
            continue;
        }
        let v = field.values[i];
        if v > best_val {
            best_val = v;
            candidates.clear();
            candidates.push(c);
        } else if v == best_val && v > F::zero() {
            candidates.push(c);
        }
    }
    if candidates.is_empty() {
        return Ok(None);
    }
    if candidates.len() == 1 {
        return Ok(Some(candidates[0]));
    }
    // Tie-break: octile distance from the agent, planning through unknown.
    let sources: BTreeSet<GridCell> = [agent].into_iter().collect();
    let traversable = |c: GridCell| !(partial.is_explored(c) && partial.is_obstacle(c));
    let dists = distance_field(partial, &sources, traversable, FieldMode::DijkstraOctile)?;
    let mut best = candidates[0];
    let mut best_d = dists.get(best);
    for &c in &candidates[1..] {
        let d = dists.get(c);
        if d < best_d {
            best = c;
            best_d = d;
        }
        // Equal distance keeps the earlier candidate, which is the
        // lexicographically smaller cell thanks to scan order.
    }
    Ok(Some(best))
}

/// Frontier-masked mean squared errors for predicted potentials.
///
/// Area loss averages squared error over the frontier cells; object loss
/// additionally averages over the `N` category channels. Errors on an empty
/// frontier set or mismatched channel counts.
pub fn pf_loss<F: Scalar>(
    predicted_area: &PotentialField<F>,
    predicted_objects: &[PotentialField<F>],
    target_area: &PotentialField<F>,
    target_objects: &[PotentialField<F>],
    frontier_cells: &BTreeSet<GridCell>,
) -> Result<(F, F)> {
    predicted_area.same_shape(target_area)?;
    if predicted_objects.len() != target_objects.len() {
        return Err(Error::invalid(format!(
            "object channel count mismatch: predicted {}, target {}",
            predicted_objects.len(),
            target_objects.len()
        )));
    }
    for (p, t) in predicted_objects.iter().zip(target_objects) {
        predicted_area.same_shape(p)?;
        predicted_area.same_shape(t)?;
    }
    if frontier_cells.is_empty() {
        return Err(Error::invalid("pf_loss requires a non-empty frontier set"));
    }
    for &c in frontier_cells {
        if c.row >= predicted_area.height || c.col >= predicted_area.width {
            return Err(Error::OutOfBounds {
                row: c.row,
                col: c.col,
                width: predicted_area.width,
                height: predicted_area.height,
            });
        }
    }
    let nf = F::from_cells(frontier_cells.len());
    let mut area_sum = F::zero();
    for &c in frontier_cells {
        let e = predicted_area.get(c) - target_area.get(c);
        area_sum += e * e;
    }
    let area_loss = area_sum / nf;

    let n = predicted_objects.len();
    let object_loss = if n == 0 {
        F::zero()
    } else {
        let mut sum = F::zero();
        for (p, t) in predicted_objects.iter().zip(target_objects) {
            for &c in frontier_cells {
                let e = p.get(c) - t.get(c);
                sum += e * e;
            }
        }
        sum / (nf * F::from_cells(n))
    };
    Ok((area_loss, object_loss))
}

const PF_MAGIC: &str = "pfield";
const PF_VERSION: u32 = 1;

/// Text container for potential fields (used by the external predictor file
/// exchange and render dumps): header, then one line of shortest round-trip
/// floats per row.
pub fn write_pf_string<F: Scalar>(field: &PotentialField<F>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{PF_MAGIC} {PF_VERSION}\n"));
    out.push_str(&format!("size {} {}\n", field.width, field.height));
    out.push_str("values\n");
    for row in 0..field.height {
        let mut line = String::new();
        for col in 0..field.width {
            if col > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", field.get(GridCell { row, col })));
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

pub fn parse_pf_str<F: Scalar>(text: &str) -> Result<PotentialField<F>> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(what.to_string(), "unexpected end of file"))
    };
    let (_, header) = next("header")?;
    let mut it = header.split_whitespace();
    if it.next() != Some(PF_MAGIC) {
        return Err(Error::parse("header", "missing pfield magic"));
    }
    if it.next().and_then(|v| v.parse::<u32>().ok()) != Some(PF_VERSION) {
        return Err(Error::parse("header", "unsupported version"));
    }
    let (_, size) = next("size")?;
    let mut it = size.split_whitespace();
    if it.next() != Some("size") {
        return Err(Error::parse("size", "expected size line"));
    }
    let width: usize = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse("size", "bad width"))?;
    let height: usize = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse("size", "bad height"))?;
    let (_, marker) = next("values")?;
    if marker != "values" {
        return Err(Error::parse("values", "expected values line"));
    }
    let mut field = PotentialField::zeros(width, height);
    for row in 0..height {
        let (lineno, line) = next("values")?;
        let mut col = 0usize;
        for tok in line.split_whitespace() {
            if col >= width {
                return Err(Error::parse(
                    format!("line {}", lineno + 1),
                    format!("row {row} has more than {width} values"),
                ));
            }
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(format!("line {}", lineno + 1), format!("bad value {tok:?}"))
            })?;
            field.set(GridCell { row, col }, F::c(v));
            col += 1;
        }
        if col != width {
            return Err(Error::parse(
                format!("line {}", lineno + 1),
                format!("row {row} has {col} values, expected {width}"),
            ));
        }
    }
    Ok(field)
}

pub fn write_pf<F: Scalar>(field: &PotentialField<F>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), write_pf_string(field))?;
    Ok(())
}

pub fn read_pf<F: Scalar>(path: impl AsRef<Path>) -> Result<PotentialField<F>> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_pf_str(&text)
}
