//! Episodic object-goal navigation.
//!
//! An episode drops an agent with an empty map into a complete scene and
//! asks it to reach any instance of a goal category within a step budget.
//! Each step the agent senses (occluded ray sweep revealing cells into its
//! partial map), picks a long-term goal cell with its exploration policy,
//! and executes one discrete action from a local geodesic controller. The
//! episode stops when the agent, seeing the goal category on its map, stands
//! inside the success zone — the set of free cells within the success radius
//! (geodesic) of a goal instance — or when the budget runs out.
//!
//! Policies: `poni` scores frontiers with predicted area/object potentials
//! and walks to the argmax; `fbe` walks to the nearest frontier; `area_only`
//! and `object_only` are the single-channel variants of `poni`. Metrics are
//! in [`metrics`]. [`evaluate`] runs a policy grid over shared episode specs
//! in parallel and emits a deterministic JSON report.

pub mod metrics;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::{
    distance_field, shortest_path, success_zone_distance, DistanceField, FieldMode,
};
use crate::grid::{dilate, extract_frontiers, is_frontier_cell, CategoryId, GridCell, SemanticGrid};
use crate::potentials::{
    area_potential, combine, object_potential_from_distance, sample_long_term_goal,
    PotentialParams,
};
use crate::predictor::{predict, PredictorKind};
use crate::raycast;
use crate::scalar::Scalar;

/// Agent state: occupied cell and a heading that is always a multiple of
/// the turn increment. Heading 0 points along +col (east); angles grow
/// counterclockwise, so 90 points along -row (north).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub cell: GridCell,
    pub heading_deg: i32,
}

/// The closed action set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

/// Why an episode ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The agent issued `stop`.
    Stopped,
    /// The step budget ran out first.
    BudgetExhausted,
}

/// Motion primitives: forward translation and turn increment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionParams<F: Scalar = f64> {
    pub forward_m: F,
    pub turn_deg: i32,
}

impl<F: Scalar> Default for MotionParams<F> {
    fn default() -> Self {
        MotionParams {
            forward_m: F::c(0.25),
            turn_deg: 30,
        }
    }
}

impl<F: Scalar> MotionParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.forward_m > F::zero()) {
            return Err(Error::invalid(format!(
                "motion.forward_m must be positive, got {}",
                self.forward_m
            )));
        }
        if self.turn_deg <= 0 || self.turn_deg > 180 || 360 % self.turn_deg != 0 {
            return Err(Error::invalid(format!(
                "motion.turn_deg must divide 360 and lie in (0, 180], got {}",
                self.turn_deg
            )));
        }
        Ok(())
    }
}

/// Simulated depth-and-segmentation sensor: an occluded ray sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorParams<F: Scalar = f64> {
    pub range_m: F,
    pub fov_deg: f64,
    pub rays: usize,
}

impl<F: Scalar> Default for SensorParams<F> {
    fn default() -> Self {
        SensorParams {
            range_m: F::c(5.0),
            fov_deg: 90.0,
            rays: 240,
        }
    }
}

impl<F: Scalar> SensorParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_m > F::zero()) {
            return Err(Error::invalid(format!(
                "sensor.range_m must be positive, got {}",
                self.range_m
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(Error::invalid(format!(
                "sensor.fov_deg must lie in (0, 360], got {}",
                self.fov_deg
            )));
        }
        if self.rays == 0 {
            return Err(Error::invalid("sensor.rays must be at least 1"));
        }
        Ok(())
    }
}

/// Everything one episode needs. Identical specs given to different
/// policies make their results directly comparable.
#[derive(Clone)]
pub struct EpisodeSpec<F: Scalar = f64> {
    /// Complete scene the agent moves through (shared, read-only).
    pub scene: Arc<SemanticGrid<F>>,
    pub scene_id: String,
    pub start: Pose,
    pub goal: CategoryId,
    pub budget_steps: usize,
    pub success_radius_m: F,
    /// Long-term-goal recompute period while the goal is not yet visible.
    pub resample_every: usize,
    /// Seed for the episode's own randomness (fallback goal draws).
    pub seed: u64,
}

impl<F: Scalar> EpisodeSpec<F> {
    pub fn validate(&self, motion: &MotionParams<F>) -> Result<()> {
        if !self.scene.is_complete() {
            return Err(Error::invalid("episode scene must be a complete map"));
        }
        self.scene.check_bounds(self.start.cell)?;
        if !self.scene.is_free(self.start.cell) {
            return Err(Error::invalid(format!(
                "start cell ({}, {}) is not free",
                self.start.cell.row, self.start.cell.col
            )));
        }
        if !self.scene.categories().contains(self.goal) {
            return Err(Error::UnknownCategory(self.goal.0));
        }
        if self.start.heading_deg < 0
            || self.start.heading_deg >= 360
            || self.start.heading_deg % motion.turn_deg != 0
        {
            return Err(Error::invalid(format!(
                "start heading {} is not a multiple of the turn increment {} in [0, 360)",
                self.start.heading_deg, motion.turn_deg
            )));
        }
        if self.budget_steps == 0 {
            return Err(Error::invalid("budget_steps must be positive"));
        }
        if self.resample_every == 0 {
            return Err(Error::invalid("resample_every must be positive"));
        }
        if !(self.success_radius_m > F::zero()) {
            return Err(Error::invalid("success_radius_m must be positive"));
        }
        Ok(())
    }
}

/// Outcome of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult<F: Scalar = f64> {
    pub success: bool,
    pub spl: F,
    pub softspl: F,
    pub dts_m: F,
    /// Distance actually walked (forward moves only; turns are free).
    pub agent_path_m: F,
    /// Geodesic start-to-success-zone distance on the complete map.
    pub oracle_path_m: F,
    pub steps: usize,
    pub trajectory: Vec<Pose>,
    pub stop_reason: StopReason,
    /// Forward commands blocked by a wall (no-ops).
    pub collisions: usize,
    /// Long-term goals chosen by the fallback chain instead of the policy.
    pub fallbacks: usize,
    /// Local plans rerouted to a nearest-reachable substitute goal.
    pub substitutions: usize,
    /// Distinct long-term goals in the order they were adopted.
    pub long_term_goals: Vec<GridCell>,
}

/// Exploration policies. The single-channel variants force the combination
/// weight: `area_only` plans on the area channel alone (weight 1),
/// `object_only` on the object channel alone (weight 0).
#[derive(Clone, Debug, PartialEq)]
pub enum Policy<F: Scalar = f64> {
    Poni {
        kind: PredictorKind,
        params: PotentialParams<F>,
    },
    Fbe,
    AreaOnly {
        kind: PredictorKind,
        params: PotentialParams<F>,
    },
    ObjectOnly {
        kind: PredictorKind,
        params: PotentialParams<F>,
    },
}

impl<F: Scalar> Policy<F> {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Poni { .. } => "poni",
            Policy::Fbe => "fbe",
            Policy::AreaOnly { .. } => "area_only",
            Policy::ObjectOnly { .. } => "object_only",
        }
    }

    /// Builds a policy from its CLI token.
    pub fn from_name(name: &str, kind: PredictorKind, params: PotentialParams<F>) -> Result<Self> {
        match name {
            "poni" => Ok(Policy::Poni { kind, params }),
            "fbe" => Ok(Policy::Fbe),
            "area_only" => Ok(Policy::AreaOnly { kind, params }),
            "object_only" => Ok(Policy::ObjectOnly { kind, params }),
            other => Err(Error::invalid(format!(
                "unknown policy '{other}' (expected one of: poni, fbe, area_only, object_only)"
            ))),
        }
    }

    /// Goal-recompute period: every step for the potential-driven policies,
    /// every 25 steps for frontier exploration.
    pub fn default_resample_every(&self) -> usize {
        match self {
            Policy::Fbe => 25,
            _ => 1,
        }
    }

    fn kind(&self) -> Option<PredictorKind> {
        match self {
            Policy::Poni { kind, .. }
            | Policy::AreaOnly { kind, .. }
            | Policy::ObjectOnly { kind, .. } => Some(*kind),
            Policy::Fbe => None,
        }
    }

    /// Potential parameters with the combination weight forced by the
    /// policy variant.
    pub fn effective_params(&self) -> Option<PotentialParams<F>> {
        match self {
            Policy::Poni { params, .. } => Some(params.clone()),
            Policy::AreaOnly { params, .. } => Some(PotentialParams {
                alpha: F::one(),
                ..params.clone()
            }),
            Policy::ObjectOnly { params, .. } => Some(PotentialParams {
                alpha: F::zero(),
                ..params.clone()
            }),
            Policy::Fbe => None,
        }
    }
}

/// Reveals everything one ray sweep from `pose` can see into `partial`,
/// including the obstacle cells that block rays, plus the eight cells
/// around the agent (proximity: anything closer than one cell is touchable
/// regardless of facing, and a ray stopped by an axial wall can never land
/// on the pocket diagonally behind it). Returns the revealed cells.
/// Idempotent: repeating at the same pose changes nothing.
pub fn sense<F: Scalar>(
    complete: &SemanticGrid<F>,
    partial: &mut SemanticGrid<F>,
    pose: Pose,
    sensors: &SensorParams<F>,
) -> Result<BTreeSet<GridCell>> {
    sensors.validate()?;
    complete.check_bounds(pose.cell)?;
    if !complete.is_free(pose.cell) {
        return Err(Error::invalid(format!(
            "sensing pose ({}, {}) is not free",
            pose.cell.row, pose.cell.col
        )));
    }
    let mut seen = BTreeSet::new();
    raycast::sweep(
        complete,
        pose.cell,
        (pose.heading_deg as f64).to_radians(),
        sensors.fov_deg.to_radians(),
        sensors.range_m,
        sensors.rays,
        |c| {
            seen.insert(c);
        },
    );
    seen.extend(complete.neighbors8(pose.cell));
    partial.reveal_from(complete, &seen)?;
    Ok(seen)
}

/// Planning traversability on a partial map: only cells known to be
/// obstacles block; unexplored space is optimistically free so frontiers
/// and retained unexplored goals stay reachable.
fn plan_traversable<F: Scalar>(partial: &SemanticGrid<F>) -> impl Fn(GridCell) -> bool + '_ {
    |c| !(partial.is_explored(c) && partial.is_obstacle(c))
}

/// Nearest visible goal-category cell by planning geodesic from `agent`
/// (ties broken lexicographically; unreachable candidates fall back to the
/// scan-order first). `None` when the category is nowhere on the map.
pub fn nearest_goal_cell<F: Scalar>(
    partial: &SemanticGrid<F>,
    category: CategoryId,
    agent: GridCell,
) -> Result<Option<GridCell>> {
    let candidates: Vec<GridCell> = partial
        .cells()
        .filter(|&c| partial.object_at(c) == Some(category))
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let base = plan_traversable(partial);
    let traversable = |c: GridCell| base(c) || partial.object_at(c) == Some(category);
    let sources = BTreeSet::from([agent]);
    let field = distance_field(partial, &sources, traversable, FieldMode::DijkstraOctile)?;
    let reachable = candidates
        .iter()
        .copied()
        .filter(|&c| field.is_reachable(c))
        .min_by(|&a, &b| {
            field
                .get(a)
                .partial_cmp(&field.get(b))
                .expect("finite distances")
                .then(a.cmp(&b))
        });
    Ok(Some(reachable.unwrap_or(candidates[0])))
}

/// Nearest frontier cell by planning geodesic from `agent`, ties broken
/// lexicographically. `None` when the map has no frontier.
pub fn nearest_frontier<F: Scalar>(
    partial: &SemanticGrid<F>,
    agent: GridCell,
) -> Result<Option<GridCell>> {
    let cells: Vec<GridCell> = extract_frontiers(partial)
        .into_iter()
        .flat_map(|f| f.cells)
        .collect();
    if cells.is_empty() {
        return Ok(None);
    }
    let sources = BTreeSet::from([agent]);
    let field = distance_field(
        partial,
        &sources,
        plan_traversable(partial),
        FieldMode::DijkstraOctile,
    )?;
    let best = cells
        .iter()
        .copied()
        .filter(|&c| field.is_reachable(c))
        .min_by(|&a, &b| {
            field
                .get(a)
                .partial_cmp(&field.get(b))
                .expect("finite distances")
                .then(a.cmp(&b))
        });
    Ok(Some(best.unwrap_or_else(|| {
        cells.iter().copied().min().expect("non-empty")
    })))
}

/// A long-term goal pick, flagged when the fallback chain (nearest
/// frontier, then a random explored free cell) chose it instead of the
/// policy itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoalChoice {
    pub cell: GridCell,
    pub fallback: bool,
}

fn random_explored_free<F: Scalar>(
    partial: &SemanticGrid<F>,
    rng: &mut ChaCha8Rng,
) -> Result<GridCell> {
    let free: Vec<GridCell> = partial.cells().filter(|&c| partial.is_free(c)).collect();
    if free.is_empty() {
        return Err(Error::Generation(
            "no explored free cell to fall back to".into(),
        ));
    }
    Ok(free[rng.gen_range(0..free.len())])
}

/// Pure goal selection for one policy on the current partial map. The
/// complete map feeds the oracle predictor only; `rng` is consumed only by
/// the last-resort random fallback.
pub fn select_long_term_goal<F: Scalar>(
    policy: &Policy<F>,
    partial: &SemanticGrid<F>,
    complete: &SemanticGrid<F>,
    goal_category: CategoryId,
    agent: GridCell,
    rng: &mut ChaCha8Rng,
) -> Result<GoalChoice> {
    let policy_pick = match policy {
        Policy::Fbe => nearest_frontier(partial, agent)?,
        _ => {
            let params = policy.effective_params().expect("potential-driven policy");
            let kind = policy.kind().expect("potential-driven policy");
            let (area, object) = predict(kind, partial, Some(complete), goal_category, &params)?;
            let combined = combine(&area, &object, &params)?;
            sample_long_term_goal(&combined, partial, agent)?
        }
    };
    if let Some(cell) = policy_pick {
        return Ok(GoalChoice {
            cell,
            fallback: false,
        });
    }
    let cell = match nearest_frontier(partial, agent)? {
        Some(c) => c,
        None => random_explored_free(partial, rng)?,
    };
    Ok(GoalChoice {
        cell,
        fallback: true,
    })
}

/// Episode-scoped goal selection with the episode-constant work hoisted
/// out: the oracle's object channel depends on the partial map only through
/// its frontier, so the underlying complete-map distance field is computed
/// once. Produces bitwise the same choices as [`select_long_term_goal`].
struct EpisodeGoalSelector<'a, F: Scalar> {
    policy: &'a Policy<F>,
    complete: &'a SemanticGrid<F>,
    goal_category: CategoryId,
    params: Option<PotentialParams<F>>,
    oracle_zone: Option<DistanceField<F>>,
}

impl<'a, F: Scalar> EpisodeGoalSelector<'a, F> {
    fn new(
        policy: &'a Policy<F>,
        complete: &'a SemanticGrid<F>,
        goal_category: CategoryId,
    ) -> Result<Self> {
        let params = policy.effective_params();
        let oracle_zone = match (policy.kind(), &params) {
            (Some(PredictorKind::Oracle), Some(p)) => Some(success_zone_distance(
                complete,
                goal_category,
                p.success_radius_m,
            )?),
            _ => None,
        };
        Ok(EpisodeGoalSelector {
            policy,
            complete,
            goal_category,
            params,
            oracle_zone,
        })
    }

    fn select(
        &self,
        partial: &SemanticGrid<F>,
        agent: GridCell,
        rng: &mut ChaCha8Rng,
    ) -> Result<GoalChoice> {
        let policy_pick = match (self.policy.kind(), &self.oracle_zone) {
            (None, _) => nearest_frontier(partial, agent)?,
            (Some(PredictorKind::Oracle), Some(zone)) => {
                let params = self.params.as_ref().expect("potential-driven policy");
                let area = area_potential(partial, self.complete, params)?;
                let object = object_potential_from_distance(partial, zone, params)?;
                let combined = combine(&area, &object, params)?;
                sample_long_term_goal(&combined, partial, agent)?
            }
            (Some(kind), _) => {
                let params = self.params.as_ref().expect("potential-driven policy");
                let (area, object) =
                    predict(kind, partial, Some(self.complete), self.goal_category, params)?;
                let combined = combine(&area, &object, params)?;
                sample_long_term_goal(&combined, partial, agent)?
            }
        };
        if let Some(cell) = policy_pick {
            return Ok(GoalChoice {
                cell,
                fallback: false,
            });
        }
        let cell = match nearest_frontier(partial, agent)? {
            Some(c) => c,
            None => random_explored_free(partial, rng)?,
        };
        Ok(GoalChoice {
            cell,
            fallback: true,
        })
    }
}

/// One local-controller decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalStep {
    pub action: Action,
    /// True when the goal was unreachable on the current map and the plan
    /// targeted the nearest reachable substitute instead.
    pub substituted: bool,
}

fn heading_toward(from: GridCell, to: GridCell) -> i32 {
    let dr = to.row as f64 - from.row as f64;
    let dc = to.col as f64 - from.col as f64;
    let deg = (-dr).atan2(dc).to_degrees().round() as i32;
    deg.rem_euclid(360)
}

/// Signed angular difference `a - b` normalized to (-180, 180].
fn signed_angle_diff(a: i32, b: i32) -> i32 {
    let d = (a - b).rem_euclid(360);
    if d > 180 {
        d - 360
    } else {
        d
    }
}

/// Physical wall clearance the local planner tries to keep, so the
/// continuous forward motion does not scrape corners the cell-level descent
/// path touches. At coarse resolutions (cell size at or above the
/// clearance) no padding is applied.
pub const PLANNING_CLEARANCE_M: f64 = 0.1;

/// Plans a goal-sourced octile field on the partial map (unknown space
/// traversable) and takes one step of greedy descent: turn toward the
/// descent direction when off by more than half a turn increment, otherwise
/// move forward. Never returns `stop` — stopping is the episode policy's
/// call. Known obstacles are padded by [`PLANNING_CLEARANCE_M`] when the
/// resolution affords it, falling back to the exact map when padding seals
/// the goal off. An unreachable goal is substituted by the reachable cell
/// closest (euclidean, then lexicographic) to it.
pub fn local_policy_step<F: Scalar>(
    partial: &SemanticGrid<F>,
    pose: Pose,
    goal: GridCell,
    motion: &MotionParams<F>,
) -> Result<LocalStep> {
    motion.validate()?;
    partial.check_bounds(goal)?;
    partial.check_bounds(pose.cell)?;
    let (w, h) = (partial.width(), partial.height());
    let mut known = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let c = GridCell { row, col };
            known.push(partial.is_explored(c) && partial.is_obstacle(c));
        }
    }
    let res = partial.resolution().to_f64().expect("finite resolution");
    let clearance = (PLANNING_CLEARANCE_M / res).round() as usize;
    let inflated = dilate(&known, w, h, clearance);
    let cheb = |a: GridCell, b: GridCell| a.row.abs_diff(b.row).max(a.col.abs_diff(b.col));
    let exact = |c: GridCell| !known[c.row * w + c.col] || c == goal || c == pose.cell;
    // The padding would turn wall-adjacent endpoints (the agent sliding along
    // a wall, a frontier goal hugging one) into unreachable islands, so the
    // padding — but never an actual known obstacle — is lifted within the
    // clearance radius of either endpoint.
    let padded = |c: GridCell| {
        if c == goal || c == pose.cell {
            return true;
        }
        if known[c.row * w + c.col] {
            return false;
        }
        !inflated[c.row * w + c.col] || cheb(c, goal) <= clearance || cheb(c, pose.cell) <= clearance
    };
    let sources = BTreeSet::from([goal]);
    let mut substituted = false;
    let mut field = distance_field(partial, &sources, &padded, FieldMode::DijkstraOctile)?;
    if !field.is_reachable(pose.cell) && clearance > 0 {
        field = distance_field(partial, &sources, &exact, FieldMode::DijkstraOctile)?;
    }
    if !field.is_reachable(pose.cell) {
        let from_agent = distance_field(
            partial,
            &BTreeSet::from([pose.cell]),
            &exact,
            FieldMode::DijkstraOctile,
        )?;
        let substitute = partial
            .cells()
            .filter(|&c| from_agent.is_reachable(c))
            .min_by_key(|&c| {
                let dr = c.row as i64 - goal.row as i64;
                let dc = c.col as i64 - goal.col as i64;
                (dr * dr + dc * dc, c)
            })
            .expect("the agent cell itself is reachable");
        field = distance_field(
            partial,
            &BTreeSet::from([substitute]),
            &exact,
            FieldMode::DijkstraOctile,
        )?;
        substituted = true;
    }
    let plan = shortest_path(&field, pose.cell)?;
    let action = if plan.cells.len() < 2 {
        // Already on the goal cell: nothing to descend. Scan in place — the
        // goal management above re-picks once the view changes, and forward
        // could be a wall.
        Action::TurnLeft
    } else {
        let desired = heading_toward(pose.cell, plan.cells[1]);
        let diff = signed_angle_diff(desired, pose.heading_deg);
        if diff.abs() * 2 <= motion.turn_deg {
            Action::MoveForward
        } else if diff > 0 {
            Action::TurnLeft
        } else {
            Action::TurnRight
        }
    };
    Ok(LocalStep {
        action,
        substituted,
    })
}

fn cell_at<F: Scalar>(grid: &SemanticGrid<F>, x_m: f64, y_m: f64) -> GridCell {
    let res = grid.resolution().to_f64().expect("finite resolution");
    let row = ((y_m / res).floor() as i64).clamp(0, grid.height() as i64 - 1) as usize;
    let col = ((x_m / res).floor() as i64).clamp(0, grid.width() as i64 - 1) as usize;
    GridCell { row, col }
}

/// Attempts a forward translation with swept collision checking against the
/// complete map. The agent advances through the longest collision-free
/// prefix of the stride; a move blocked immediately is a no-op. Returns the
/// new position and the distance actually covered in meters.
fn try_move_forward<F: Scalar>(
    complete: &SemanticGrid<F>,
    x_m: f64,
    y_m: f64,
    heading_deg: i32,
    motion: &MotionParams<F>,
) -> (f64, f64, f64) {
    let res = complete.resolution().to_f64().expect("finite resolution");
    let step = motion.forward_m.to_f64().expect("finite step");
    let theta = (heading_deg as f64).to_radians();
    let (dx, dy) = (theta.cos() * step, -theta.sin() * step);
    let substeps = ((step / (0.5 * res)).ceil() as usize).max(1);
    let (w_m, h_m) = (
        complete.width() as f64 * res,
        complete.height() as f64 * res,
    );
    let mut clear = 0usize;
    for k in 1..=substeps {
        let t = k as f64 / substeps as f64;
        let (xx, yy) = (x_m + dx * t, y_m + dy * t);
        if xx < 0.0 || yy < 0.0 || xx >= w_m || yy >= h_m {
            break;
        }
        if complete.is_obstacle(cell_at(complete, xx, yy)) {
            break;
        }
        clear = k;
    }
    if clear == 0 {
        return (x_m, y_m, 0.0);
    }
    let t = clear as f64 / substeps as f64;
    (x_m + dx * t, y_m + dy * t, step * t)
}

/// Runs one episode to completion. See the module docs for the loop; the
/// collision model keeps the agent in free space of the complete map at all
/// times, counting blocked forward moves instead of moving.
pub fn run_episode<F: Scalar>(
    policy: &Policy<F>,
    spec: &EpisodeSpec<F>,
    sensors: &SensorParams<F>,
    motion: &MotionParams<F>,
) -> Result<EpisodeResult<F>> {
    motion.validate()?;
    sensors.validate()?;
    spec.validate(motion)?;
    let complete: &SemanticGrid<F> = &spec.scene;
    let zone = success_zone_distance(complete, spec.goal, spec.success_radius_m)?;
    let d_init = zone.get(spec.start.cell);
    let selector = EpisodeGoalSelector::new(policy, complete, spec.goal)?;

    let mut partial = SemanticGrid::new_unexplored(
        complete.width(),
        complete.height(),
        complete.resolution(),
        complete.categories().clone(),
    )?;
    let res = complete.resolution().to_f64().expect("finite resolution");
    let mut x = (spec.start.cell.col as f64 + 0.5) * res;
    let mut y = (spec.start.cell.row as f64 + 0.5) * res;
    let mut heading = spec.start.heading_deg;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut trajectory = vec![spec.start];
    let mut long_term_goals: Vec<GridCell> = Vec::new();
    let mut current_goal: Option<GridCell> = None;
    let mut goal_seen = false;
    let mut agent_path_m = F::zero();
    let mut steps = 0usize;
    let mut collisions = 0usize;
    let mut fallbacks = 0usize;
    let mut substitutions = 0usize;
    // Set when a forward move is fully blocked; forces an off-cadence goal
    // resample instead of leaving the agent pinned until the next tick.
    let mut stalled = false;
    let mut stop_reason = StopReason::BudgetExhausted;

    while steps < spec.budget_steps {
        let pose = Pose {
            cell: cell_at(complete, x, y),
            heading_deg: heading,
        };
        let swept = sense(complete, &mut partial, pose, sensors)?;
        if !goal_seen {
            goal_seen = swept
                .iter()
                .any(|&c| partial.object_at(c) == Some(spec.goal));
        }
        if goal_seen && zone.get(pose.cell) == F::zero() {
            stop_reason = StopReason::Stopped;
            steps += 1;
            break;
        }
        if goal_seen {
            current_goal = nearest_goal_cell(&partial, spec.goal, pose.cell)?;
        } else {
            // A goal is consumed once sensing shows it to be plain explored
            // interior: it is no longer on the boundary of the unknown and
            // walking the rest of the way teaches nothing.
            let consumed = current_goal
                .is_some_and(|g| partial.is_explored(g) && !is_frontier_cell(&partial, g));
            if current_goal.is_none()
                || consumed
                || steps % spec.resample_every == 0
                || current_goal == Some(pose.cell)
                || stalled
            {
                let choice = selector.select(&partial, pose.cell, &mut rng)?;
                if choice.fallback {
                    fallbacks += 1;
                }
                current_goal = Some(choice.cell);
            }
        }
        let goal_cell = current_goal.expect("goal chosen above");
        if long_term_goals.last() != Some(&goal_cell) {
            long_term_goals.push(goal_cell);
        }

        let step_out = local_policy_step(&partial, pose, goal_cell, motion)?;
        if step_out.substituted {
            substitutions += 1;
        }
        stalled = false;
        match step_out.action {
            Action::MoveForward => {
                let (nx, ny, advanced) = try_move_forward(complete, x, y, heading, motion);
                if advanced < motion.forward_m.to_f64().expect("finite step") {
                    collisions += 1;
                }
                if advanced > 0.0 {
                    x = nx;
                    y = ny;
                    agent_path_m += F::c(advanced);
                } else {
                    stalled = true;
                }
            }
            Action::TurnLeft => heading = (heading + motion.turn_deg).rem_euclid(360),
            Action::TurnRight => heading = (heading - motion.turn_deg).rem_euclid(360),
            Action::Stop => unreachable!("the local controller never stops"),
        }
        steps += 1;
        trajectory.push(Pose {
            cell: cell_at(complete, x, y),
            heading_deg: heading,
        });
    }

    let final_cell = trajectory.last().expect("never empty").cell;
    let d_final = zone.get(final_cell);
    let success = stop_reason == StopReason::Stopped && d_final == F::zero();
    Ok(EpisodeResult {
        success,
        spl: metrics::spl(success, d_init, agent_path_m),
        softspl: metrics::soft_spl(d_init, d_final, d_init, agent_path_m),
        dts_m: metrics::distance_to_success(d_final),
        agent_path_m,
        oracle_path_m: d_init,
        steps,
        trajectory,
        stop_reason,
        collisions,
        fallbacks,
        substitutions,
        long_term_goals,
    })
}

/// Evaluation knobs beyond the policy list and scene set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions<F: Scalar = f64> {
    pub sensors: SensorParams<F>,
    pub motion: MotionParams<F>,
    pub budget_steps: usize,
    pub success_radius_m: F,
    /// Sampled episodes keep the geodesic start-to-zone distance inside
    /// this band.
    pub min_start_dist_m: F,
    pub max_start_dist_m: F,
}

impl<F: Scalar> Default for EvalOptions<F> {
    fn default() -> Self {
        EvalOptions {
            sensors: SensorParams::default(),
            motion: MotionParams::default(),
            budget_steps: 500,
            success_radius_m: F::one(),
            min_start_dist_m: F::c(2.0),
            max_start_dist_m: F::c(30.0),
        }
    }
}

/// One row of the evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow<F: Scalar = f64> {
    pub scene_id: String,
    pub episode: usize,
    pub seed: u64,
    pub goal: String,
    pub start: Pose,
    pub success: bool,
    pub spl: F,
    pub softspl: F,
    pub dts_m: F,
    pub steps: usize,
    pub agent_path_m: F,
    pub oracle_path_m: F,
    pub collisions: usize,
    pub fallbacks: usize,
    pub substitutions: usize,
    pub stop_reason: StopReason,
    pub trajectory: Vec<Pose>,
}

/// Per-policy means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate<F: Scalar = f64> {
    pub episodes: usize,
    pub success_rate: F,
    pub mean_spl: F,
    pub mean_softspl: F,
    pub mean_dts_m: F,
}

/// All episodes of one policy plus their aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport<F: Scalar = f64> {
    pub policy: String,
    pub aggregate: Aggregate<F>,
    pub episodes: Vec<EpisodeRow<F>>,
}

/// Full evaluation output. Serialization is deterministic: no timestamps,
/// fixed field order, per-policy rows in spec order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F: Scalar = f64> {
    pub seed: u64,
    pub episodes_per_scene: usize,
    pub scenes: Vec<String>,
    pub policies: Vec<PolicyReport<F>>,
}

impl<F: Scalar + Serialize> EvalReport<F> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse("eval report", e.to_string()))
    }
}

const SPEC_CATEGORY_TRIES: usize = 64;
const SPEC_START_TRIES: usize = 64;

fn sample_specs<F: Scalar>(
    scenes: &[(String, Arc<SemanticGrid<F>>)],
    episodes_per_scene: usize,
    seed: u64,
    options: &EvalOptions<F>,
) -> Result<Vec<EpisodeSpec<F>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zone_cache: HashMap<(usize, u16), crate::geodesics::DistanceField<F>> = HashMap::new();
    let mut specs = Vec::with_capacity(scenes.len() * episodes_per_scene);
    for (scene_idx, (scene_id, scene)) in scenes.iter().enumerate() {
        if !scene.is_complete() {
            return Err(Error::invalid(format!(
                "scene '{scene_id}' is not a complete map"
            )));
        }
        let goals = scene.categories().goal_ids();
        if goals.is_empty() {
            return Err(Error::invalid(format!(
                "scene '{scene_id}' has no goal categories in its table"
            )));
        }
        let free: Vec<GridCell> = scene.cells().filter(|&c| scene.is_free(c)).collect();
        if free.is_empty() {
            return Err(Error::invalid(format!("scene '{scene_id}' has no free space")));
        }
        for _episode in 0..episodes_per_scene {
            let mut found = None;
            'tries: for _ in 0..SPEC_CATEGORY_TRIES {
                let cat = goals[rng.gen_range(0..goals.len())];
                let present = scene.cells().any(|c| scene.object_at(c) == Some(cat));
                if !present {
                    // A scene may lack instances of a sampled category;
                    // draw another.
                    continue;
                }
                let zone = zone_cache
                    .entry((scene_idx, cat.0))
                    .or_insert_with(|| {
                        success_zone_distance(scene, cat, options.success_radius_m)
                            .expect("complete scene")
                    });
                for _ in 0..SPEC_START_TRIES {
                    let start = free[rng.gen_range(0..free.len())];
                    let d = zone.get(start);
                    if d.is_finite()
                        && d >= options.min_start_dist_m
                        && d <= options.max_start_dist_m
                    {
                        found = Some((cat, start));
                        break 'tries;
                    }
                }
            }
            let Some((cat, start)) = found else {
                return Err(Error::Generation(format!(
                    "scene '{scene_id}': no start/goal pair with start-to-zone distance in \
                     [{}, {}] m after {SPEC_CATEGORY_TRIES} category draws",
                    options.min_start_dist_m, options.max_start_dist_m
                )));
            };
            let headings = 360 / options.motion.turn_deg;
            let heading_deg = options.motion.turn_deg * rng.gen_range(0..headings);
            specs.push(EpisodeSpec {
                scene: Arc::clone(scene),
                scene_id: scene_id.clone(),
                start: Pose {
                    cell: start,
                    heading_deg,
                },
                goal: cat,
                budget_steps: options.budget_steps,
                success_radius_m: options.success_radius_m,
                resample_every: 1,
                seed: rng.gen(),
            });
        }
    }
    Ok(specs)
}

/// Samples `episodes_per_scene` episode specs per scene (deterministic in
/// `seed`), runs every policy on the identical specs in parallel, and
/// aggregates per-policy means. Results do not depend on the order policies
/// are listed in.
pub fn evaluate<F: Scalar>(
    policies: &[Policy<F>],
    scenes: &[(String, Arc<SemanticGrid<F>>)],
    episodes_per_scene: usize,
    seed: u64,
    options: &EvalOptions<F>,
) -> Result<EvalReport<F>> {
    if policies.is_empty() {
        return Err(Error::invalid("evaluate needs at least one policy"));
    }
    if scenes.is_empty() {
        return Err(Error::invalid("evaluate needs at least one scene"));
    }
    if episodes_per_scene == 0 {
        return Err(Error::invalid("episodes_per_scene must be positive"));
    }
    options.sensors.validate()?;
    options.motion.validate()?;
    let specs = sample_specs(scenes, episodes_per_scene, seed, options)?;

    let mut reports = Vec::with_capacity(policies.len());
    for policy in policies {
        let resample = policy.default_resample_every();
        let rows: Vec<EpisodeRow<F>> = specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let mut spec = spec.clone();
                spec.resample_every = resample;
                let r = run_episode(policy, &spec, &options.sensors, &options.motion)?;
                Ok(EpisodeRow {
                    scene_id: spec.scene_id.clone(),
                    episode: i,
                    seed: spec.seed,
                    goal: spec.scene.categories().name(spec.goal)?.to_string(),
                    start: spec.start,
                    success: r.success,
                    spl: r.spl,
                    softspl: r.softspl,
                    dts_m: r.dts_m,
                    steps: r.steps,
                    agent_path_m: r.agent_path_m,
                    oracle_path_m: r.oracle_path_m,
                    collisions: r.collisions,
                    fallbacks: r.fallbacks,
                    substitutions: r.substitutions,
                    stop_reason: r.stop_reason,
                    trajectory: r.trajectory,
                })
            })
            .collect::<Result<_>>()?;
        let n = F::from_cells(rows.len());
        let successes = rows.iter().filter(|r| r.success).count();
        let aggregate = Aggregate {
            episodes: rows.len(),
            success_rate: F::from_cells(successes) / n,
            mean_spl: rows.iter().map(|r| r.spl).sum::<F>() / n,
            mean_softspl: rows.iter().map(|r| r.softspl).sum::<F>() / n,
            mean_dts_m: rows.iter().map(|r| r.dts_m).sum::<F>() / n,
        };
        reports.push(PolicyReport {
            policy: policy.name().to_string(),
            aggregate,
            episodes: rows,
        });
    }
    Ok(EvalReport {
        seed,
        episodes_per_scene,
        scenes: scenes.iter().map(|(id, _)| id.clone()).collect(),
        policies: reports,
    })
}
