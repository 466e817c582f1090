//! Procedural indoor floor plans.
//!
//! A scene is a complete [`SemanticGrid`]: an obstacle margin around a
//! recursive binary partition of the interior into rooms, one-cell interior
//! walls with door gaps, and object blobs placed per room-type priors so that
//! categories correlate with room types (toilets in bathrooms, beds in
//! bedrooms, ...). Free space is guaranteed 4-connected and every goal
//! category carried by the priors appears at least once. Generation is a pure
//! function of [`SceneParams`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CategoryId, CategoryTable, GridCell, SemanticGrid, OFFSETS_4};
use crate::scalar::Scalar;

/// Coarse room function; drives which categories a room attracts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RoomType {
    Bathroom,
    Bedroom,
    Living,
    Kitchen,
    Office,
}

pub const ROOM_TYPES: [RoomType; 5] = [
    RoomType::Bathroom,
    RoomType::Bedroom,
    RoomType::Living,
    RoomType::Kitchen,
    RoomType::Office,
];

/// Placement prior for one category: room-type affinities plus an inclusive
/// instance count range.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryPrior {
    pub category: String,
    pub rooms: Vec<(RoomType, f64)>,
    pub instances: (usize, usize),
}

/// Everything [`generate_scene`] depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams<F: Scalar = f64> {
    pub seed: u64,
    pub width_m: F,
    pub height_m: F,
    pub resolution_m: F,
    /// Obstacle border around the interior; at least one cell. Gives dataset
    /// augmentation room to translate the scene without clipping it.
    pub margin_m: F,
    pub room_count_range: (usize, usize),
    pub door_width_m: F,
    pub categories: CategoryTable,
    pub priors: Vec<CategoryPrior>,
}

/// Door width used by [`SceneParams::default`] and assumed by
/// [`scene_stats`]'s room-count estimate.
pub const DEFAULT_DOOR_WIDTH_M: f64 = 0.6;

impl<F: Scalar> Default for SceneParams<F> {
    fn default() -> Self {
        SceneParams {
            seed: 0,
            width_m: F::c(10.0),
            height_m: F::c(10.0),
            resolution_m: F::c(0.05),
            margin_m: F::c(0.5),
            room_count_range: (4, 7),
            door_width_m: F::c(DEFAULT_DOOR_WIDTH_M),
            categories: CategoryTable::default_indoor(),
            priors: default_priors(),
        }
    }
}

/// Priors for [`CategoryTable::default_indoor`]: each goal category has a
/// home room type; distractors spread wider and may be absent.
pub fn default_priors() -> Vec<CategoryPrior> {
    use RoomType::*;
    let p = |category: &str, rooms: Vec<(RoomType, f64)>, instances: (usize, usize)| CategoryPrior {
        category: category.to_string(),
        rooms,
        instances,
    };
    vec![
        p("chair", vec![(Living, 0.6), (Office, 0.4)], (1, 3)),
        p("couch", vec![(Living, 1.0)], (1, 2)),
        p("plant", vec![(Living, 0.4), (Bedroom, 0.3), (Office, 0.3)], (1, 3)),
        p("bed", vec![(Bedroom, 1.0)], (1, 2)),
        p("toilet", vec![(Bathroom, 1.0)], (1, 1)),
        p("tv", vec![(Living, 1.0)], (1, 2)),
        p("table", vec![(Kitchen, 0.5), (Living, 0.5)], (0, 2)),
        p("sink", vec![(Bathroom, 0.5), (Kitchen, 0.5)], (0, 2)),
        p("shelf", vec![(Office, 0.7), (Living, 0.3)], (0, 2)),
        p("lamp", vec![(Bedroom, 0.5), (Living, 0.5)], (0, 2)),
    ]
}

/// Axis-aligned cell rectangle: rows `row..row + height`, cols
/// `col..col + width`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    fn area(&self) -> usize {
        self.height * self.width
    }

    fn contains(&self, c: GridCell) -> bool {
        c.row >= self.row
            && c.row < self.row + self.height
            && c.col >= self.col
            && c.col < self.col + self.width
    }
}

/// One room: its free-space rectangle (walls excluded) and assigned type.
#[derive(Clone, Debug, PartialEq)]
pub struct Room {
    pub rect: Rect,
    pub room_type: RoomType,
}

/// Geometry the generator committed to; returned for tests and debugging.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneLayout {
    pub rooms: Vec<Room>,
    /// All carved door cells.
    pub doors: Vec<GridCell>,
    pub door_cells: usize,
    pub min_side_cells: usize,
}

struct WallRec {
    horizontal: bool,
    /// Row (horizontal) or column (vertical) the wall occupies.
    line: usize,
    /// Column (horizontal) or row (vertical) range it spans.
    span: (usize, usize),
}

fn cells_of<F: Scalar>(len_m: F, res: F) -> usize {
    (len_m / res).to_f64().unwrap_or(0.0).round() as usize
}

fn min_side_cells(door_cells: usize) -> usize {
    (door_cells + 8).max(16)
}

fn validate<F: Scalar>(params: &SceneParams<F>) -> Result<(usize, usize, usize, usize)> {
    if !(params.width_m > F::zero() && params.height_m > F::zero()) {
        return Err(Error::invalid("scene width_m and height_m must be positive"));
    }
    if !(params.resolution_m > F::zero()) {
        return Err(Error::invalid("scene resolution_m must be positive"));
    }
    if !(params.margin_m >= params.resolution_m) {
        return Err(Error::invalid(
            "scene margin_m must be at least one cell (resolution_m)",
        ));
    }
    let (lo, hi) = params.room_count_range;
    if lo == 0 || lo > hi {
        return Err(Error::invalid(format!(
            "room_count_range ({lo}, {hi}) must satisfy 1 <= min <= max"
        )));
    }
    let door_cells = cells_of(params.door_width_m, params.resolution_m);
    if door_cells < 2 {
        return Err(Error::invalid(format!(
            "door_width_m {} is under two cells at resolution {}",
            params.door_width_m, params.resolution_m
        )));
    }
    for prior in &params.priors {
        if params.categories.id_of(&prior.category).is_none() {
            return Err(Error::invalid(format!(
                "prior category {:?} is not in the category table",
                prior.category
            )));
        }
        if prior.instances.0 > prior.instances.1 {
            return Err(Error::invalid(format!(
                "prior for {:?} has min instances > max",
                prior.category
            )));
        }
        if prior.rooms.iter().any(|&(_, w)| !(w >= 0.0)) {
            return Err(Error::invalid(format!(
                "prior for {:?} has a negative room weight",
                prior.category
            )));
        }
    }
    let width = cells_of(params.width_m, params.resolution_m);
    let height = cells_of(params.height_m, params.resolution_m);
    let margin = cells_of(params.margin_m, params.resolution_m).max(1);
    let min_side = min_side_cells(door_cells);
    if width <= 2 * margin + min_side || height <= 2 * margin + min_side {
        return Err(Error::Generation(format!(
            "interior {}x{} cells cannot hold a {min_side}-cell room",
            width.saturating_sub(2 * margin),
            height.saturating_sub(2 * margin)
        )));
    }
    Ok((width, height, margin, door_cells))
}

/// Generates the scene; see the module docs for the construction.
pub fn generate_scene<F: Scalar>(params: &SceneParams<F>) -> Result<SemanticGrid<F>> {
    generate_scene_with_layout(params).map(|(grid, _)| grid)
}

/// [`generate_scene`] plus the room/door geometry it committed to.
pub fn generate_scene_with_layout<F: Scalar>(
    params: &SceneParams<F>,
) -> Result<(SemanticGrid<F>, SceneLayout)> {
    let dims = validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // Door or object placement can paint itself into a corner on unlucky
    // draws; retry with the same rng stream so the whole function stays a
    // pure function of params.
    let mut last_err = None;
    for _ in 0..8 {
        match try_generate(params, dims, &mut rng) {
            Ok(out) => return Ok(out),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt ran"))
}

fn try_generate<F: Scalar>(
    params: &SceneParams<F>,
    (width, height, margin, door_cells): (usize, usize, usize, usize),
    rng: &mut ChaCha8Rng,
) -> Result<(SemanticGrid<F>, SceneLayout)> {
    let min_side = min_side_cells(door_cells);
    let mut grid = SemanticGrid::new_explored_free(
        width,
        height,
        params.resolution_m,
        params.categories.clone(),
    )?;
    let interior = Rect {
        row: margin,
        col: margin,
        height: height - 2 * margin,
        width: width - 2 * margin,
    };
    for c in grid.cells().collect::<Vec<_>>() {
        if !interior.contains(c) {
            grid.set_obstacle(c, true);
        }
    }

    // Binary partition: repeatedly split the largest splittable leaf.
    let target = rng.gen_range(params.room_count_range.0..=params.room_count_range.1);
    let mut leaves = vec![interior];
    let mut walls: Vec<WallRec> = Vec::new();
    while leaves.len() < target {
        let splittable = |r: &Rect| r.height >= 2 * min_side + 1 || r.width >= 2 * min_side + 1;
        let Some(pick) = leaves
            .iter()
            .enumerate()
            .filter(|(_, r)| splittable(r))
            .max_by_key(|(i, r)| (r.area(), usize::MAX - i))
            .map(|(i, _)| i)
        else {
            break;
        };
        let rect = leaves[pick];
        // Split across the longer side when possible.
        let horizontal = if rect.height >= 2 * min_side + 1 && rect.width >= 2 * min_side + 1 {
            rect.height >= rect.width
        } else {
            rect.height >= 2 * min_side + 1
        };
        if horizontal {
            let off = rng.gen_range(min_side..=rect.height - min_side - 1);
            let line = rect.row + off;
            walls.push(WallRec {
                horizontal: true,
                line,
                span: (rect.col, rect.col + rect.width),
            });
            leaves[pick] = Rect { height: off, ..rect };
            leaves.push(Rect {
                row: line + 1,
                col: rect.col,
                height: rect.height - off - 1,
                width: rect.width,
            });
        } else {
            let off = rng.gen_range(min_side..=rect.width - min_side - 1);
            let line = rect.col + off;
            walls.push(WallRec {
                horizontal: false,
                line,
                span: (rect.row, rect.row + rect.height),
            });
            leaves[pick] = Rect { width: off, ..rect };
            leaves.push(Rect {
                row: rect.row,
                col: line + 1,
                height: rect.height,
                width: rect.width - off - 1,
            });
        }
    }
    if leaves.len() < params.room_count_range.0 {
        return Err(Error::Generation(format!(
            "could only partition {} rooms, wanted at least {}",
            leaves.len(),
            params.room_count_range.0
        )));
    }

    // Draw every wall first, then carve one door per wall. Carving last means
    // a door can never be blocked by a later perpendicular wall.
    for wall in &walls {
        for t in wall.span.0..wall.span.1 {
            let c = if wall.horizontal {
                GridCell { row: wall.line, col: t }
            } else {
                GridCell { row: t, col: wall.line }
            };
            grid.set_obstacle(c, true);
        }
    }
    let mut doors = Vec::new();
    for wall in &walls {
        let run_cell = |t: usize| {
            if wall.horizontal {
                GridCell { row: wall.line, col: t }
            } else {
                GridCell { row: t, col: wall.line }
            }
        };
        let flanks_free = |t: usize| {
            let (a, b) = if wall.horizontal {
                (
                    GridCell { row: wall.line - 1, col: t },
                    GridCell { row: wall.line + 1, col: t },
                )
            } else {
                (
                    GridCell { row: t, col: wall.line - 1 },
                    GridCell { row: t, col: wall.line + 1 },
                )
            };
            grid.is_free(a) && grid.is_free(b)
        };
        // Widest allowed door first, narrowing only if no run fits.
        let mut carved = false;
        for want in (2..=door_cells).rev() {
            let starts: Vec<usize> = (wall.span.0..wall.span.1.saturating_sub(want - 1))
                .filter(|&s| (s..s + want).all(|t| grid.is_obstacle(run_cell(t)) && flanks_free(t)))
                .collect();
            if let Some(&s) = starts.as_slice().choose(rng) {
                for t in s..s + want {
                    grid.set_obstacle(run_cell(t), false);
                    doors.push(run_cell(t));
                }
                carved = true;
                break;
            }
        }
        if !carved {
            return Err(Error::Generation(
                "no valid door position on an interior wall".to_string(),
            ));
        }
    }
    if !free_space_connected(&grid) {
        return Err(Error::Generation(
            "partition left free space disconnected".to_string(),
        ));
    }

    // Room types: first five rooms draw distinct types, extras repeat.
    let mut pool = ROOM_TYPES.to_vec();
    pool.shuffle(rng);
    let rooms: Vec<Room> = leaves
        .iter()
        .enumerate()
        .map(|(i, &rect)| Room {
            rect,
            room_type: if i < pool.len() {
                pool[i]
            } else {
                ROOM_TYPES[rng.gen_range(0..ROOM_TYPES.len())]
            },
        })
        .collect();

    for prior in &params.priors {
        let id = params
            .categories
            .id_of(&prior.category)
            .expect("validated above");
        let count = rng.gen_range(prior.instances.0..=prior.instances.1);
        let mut placed = 0;
        for _ in 0..count {
            if place_instance(&mut grid, &rooms, prior, id, rng) {
                placed += 1;
            }
        }
        // Goal categories must exist for object potentials and episode goals
        // to be well defined; force one instance if the draws all failed.
        if placed == 0 && params.categories.is_goal(id)? && !force_place(&mut grid, &rooms, id) {
            return Err(Error::Generation(format!(
                "could not place any {:?} instance",
                prior.category
            )));
        }
    }

    let layout = SceneLayout {
        rooms,
        doors,
        door_cells,
        min_side_cells: min_side,
    };
    Ok((grid, layout))
}

/// Blob shapes by cell count; every shape fits a 2x2 bounding box.
const SHAPES: [&[(usize, usize)]; 7] = [
    &[(0, 0)],
    &[(0, 0), (0, 1)],
    &[(0, 0), (1, 0)],
    &[(0, 0), (0, 1), (1, 0)],
    &[(0, 0), (0, 1), (1, 1)],
    &[(0, 0), (1, 0), (1, 1)],
    &[(0, 1), (1, 0), (1, 1)],
];

fn shape_bbox(shape: &[(usize, usize)]) -> (usize, usize) {
    let h = shape.iter().map(|&(r, _)| r).max().unwrap_or(0) + 1;
    let w = shape.iter().map(|&(_, c)| c).max().unwrap_or(0) + 1;
    (h, w)
}

fn blob_fits<F: Scalar>(
    grid: &SemanticGrid<F>,
    anchor: GridCell,
    shape: &[(usize, usize)],
) -> bool {
    shape.iter().all(|&(dr, dc)| {
        let c = GridCell {
            row: anchor.row + dr,
            col: anchor.col + dc,
        };
        grid.is_free(c) && grid.neighbors8(c).all(|nb| grid.object_at(nb).is_none())
    })
}

fn stamp_blob<F: Scalar>(
    grid: &mut SemanticGrid<F>,
    anchor: GridCell,
    shape: &[(usize, usize)],
    id: CategoryId,
) -> Result<()> {
    for &(dr, dc) in shape {
        grid.set_object(
            GridCell {
                row: anchor.row + dr,
                col: anchor.col + dc,
            },
            id,
        )?;
    }
    Ok(())
}

fn unstamp_blob<F: Scalar>(grid: &mut SemanticGrid<F>, anchor: GridCell, shape: &[(usize, usize)]) {
    for &(dr, dc) in shape {
        grid.clear_object(GridCell {
            row: anchor.row + dr,
            col: anchor.col + dc,
        });
    }
}

fn anchors_in_room(room: &Rect, bbox: (usize, usize), wall_adjacent: bool) -> Vec<GridCell> {
    let (bh, bw) = bbox;
    if room.height < bh || room.width < bw {
        return Vec::new();
    }
    let mut out = Vec::new();
    for row in room.row..=room.row + room.height - bh {
        for col in room.col..=room.col + room.width - bw {
            let on_edge = row == room.row
                || col == room.col
                || row + bh == room.row + room.height
                || col + bw == room.col + room.width;
            if !wall_adjacent || on_edge {
                out.push(GridCell { row, col });
            }
        }
    }
    out
}

fn place_instance<F: Scalar>(
    grid: &mut SemanticGrid<F>,
    rooms: &[Room],
    prior: &CategoryPrior,
    id: CategoryId,
    rng: &mut ChaCha8Rng,
) -> bool {
    let weight = |room: &Room| -> f64 {
        prior
            .rooms
            .iter()
            .find(|&&(t, _)| t == room.room_type)
            .map(|&(_, w)| w)
            .unwrap_or(0.0)
    };
    let total: f64 = rooms.iter().map(weight).sum();
    let room_idx = if total > 0.0 {
        let x = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut idx = rooms.len() - 1;
        for (i, room) in rooms.iter().enumerate() {
            acc += weight(room);
            if x < acc {
                idx = i;
                break;
            }
        }
        idx
    } else {
        // No room of a preferred type exists; fall back to any room.
        rng.gen_range(0..rooms.len())
    };
    let room = rooms[room_idx].rect;

    let size = rng.gen_range(1..=3usize);
    let shape_pool: &[&[(usize, usize)]] = match size {
        1 => &SHAPES[0..1],
        2 => &SHAPES[1..3],
        _ => &SHAPES[3..7],
    };
    let shape = *shape_pool.choose(rng).expect("non-empty pool");
    let wall_adjacent = rng.gen_bool(0.7);

    let mut anchors = anchors_in_room(&room, shape_bbox(shape), wall_adjacent);
    for _ in 0..16 {
        anchors.retain(|&a| blob_fits(grid, a, shape));
        let Some(&anchor) = anchors.as_slice().choose(rng) else {
            return false;
        };
        stamp_blob(grid, anchor, shape, id).expect("anchor in bounds");
        if free_space_connected(grid) {
            return true;
        }
        // The blob sealed a passage; take it back and try another spot.
        unstamp_blob(grid, anchor, shape);
        anchors.retain(|&a| a != anchor);
    }
    false
}

/// Deterministic last resort: first valid single-cell position in scan order
/// over all rooms.
fn force_place<F: Scalar>(grid: &mut SemanticGrid<F>, rooms: &[Room], id: CategoryId) -> bool {
    let shape = SHAPES[0];
    for room in rooms {
        for anchor in anchors_in_room(&room.rect, (1, 1), false) {
            if !blob_fits(grid, anchor, shape) {
                continue;
            }
            stamp_blob(grid, anchor, shape, id).expect("anchor in bounds");
            if free_space_connected(grid) {
                return true;
            }
            unstamp_blob(grid, anchor, shape);
        }
    }
    false
}

/// True when every free cell reaches every other through 4-connected free
/// moves (stronger than the 8-connected reachability the planners need).
pub fn free_space_connected<F: Scalar>(grid: &SemanticGrid<F>) -> bool {
    let total = grid.count_free();
    let Some(start) = grid.cells().find(|&c| grid.is_free(c)) else {
        return false;
    };
    let mut visited = vec![false; grid.len()];
    let mut stack = vec![start];
    visited[grid.idx(start)] = true;
    let mut seen = 0usize;
    while let Some(c) = stack.pop() {
        seen += 1;
        for &(dr, dc) in &OFFSETS_4 {
            let r = c.row as i64 + dr as i64;
            let k = c.col as i64 + dc as i64;
            if r < 0 || k < 0 || r as usize >= grid.height() || k as usize >= grid.width() {
                continue;
            }
            let nb = GridCell {
                row: r as usize,
                col: k as usize,
            };
            let ni = grid.idx(nb);
            if !visited[ni] && grid.is_free(nb) {
                visited[ni] = true;
                stack.push(nb);
            }
        }
    }
    seen == total
}

/// Exact scan statistics plus a structural room-count estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneStats<F: Scalar = f64> {
    pub free_area_m2: F,
    /// Rooms counted by eroding non-wall space until door gaps break; exact
    /// for grids from [`generate_scene`] with the default door width, an
    /// estimate elsewhere.
    pub room_count: usize,
    /// Object instances (connected same-category blobs) per category id.
    pub instances: Vec<usize>,
}

impl<F: Scalar> SceneStats<F> {
    pub fn instances_of(&self, id: CategoryId) -> usize {
        self.instances.get(id.0 as usize).copied().unwrap_or(0)
    }
}

/// Statistics assuming doors no wider than [`DEFAULT_DOOR_WIDTH_M`].
pub fn scene_stats<F: Scalar>(grid: &SemanticGrid<F>) -> Result<SceneStats<F>> {
    scene_stats_with_door(grid, F::c(DEFAULT_DOOR_WIDTH_M))
}

/// Statistics for scenes generated with a custom door width.
pub fn scene_stats_with_door<F: Scalar>(
    grid: &SemanticGrid<F>,
    door_width_m: F,
) -> Result<SceneStats<F>> {
    if !grid.is_complete() {
        return Err(Error::invalid("scene_stats requires a complete map"));
    }
    let res = grid.resolution();
    let free_area_m2 = F::from_cells(grid.count_free()) * res * res;

    // Instances: 8-connected blobs per category.
    let n_cats = grid.categories().len();
    let mut instances = vec![0usize; n_cats];
    let mut visited = vec![false; grid.len()];
    for c in grid.cells() {
        let i = grid.idx(c);
        let Some(id) = grid.object_at(c) else { continue };
        if visited[i] {
            continue;
        }
        instances[id.0 as usize] += 1;
        let mut stack = vec![c];
        visited[i] = true;
        while let Some(cur) = stack.pop() {
            for nb in grid.neighbors8(cur) {
                let ni = grid.idx(nb);
                if !visited[ni] && grid.object_at(nb) == Some(id) {
                    visited[ni] = true;
                    stack.push(nb);
                }
            }
        }
    }

    // Room count: erode non-wall space (furniture does not count as
    // structure) by a radius that collapses door gaps, then count the
    // surviving 8-connected blobs of meaningful size.
    let door_cells = cells_of(door_width_m, res).max(2);
    let radius = door_cells / 2 + 1;
    let (w, h) = (grid.width(), grid.height());
    let is_wall =
        |c: GridCell| grid.is_obstacle(c) && grid.object_at(c).is_none();
    let mut eroded = vec![false; grid.len()];
    let r = radius as i64;
    'cells: for c in grid.cells() {
        if is_wall(c) {
            continue;
        }
        for dr in -r..=r {
            for dc in -r..=r {
                let (nr, nc) = (c.row as i64 + dr, c.col as i64 + dc);
                if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue 'cells; // outside counts as wall
                }
                if is_wall(GridCell {
                    row: nr as usize,
                    col: nc as usize,
                }) {
                    continue 'cells;
                }
            }
        }
        eroded[grid.idx(c)] = true;
    }
    let mut room_count = 0usize;
    let mut seen = vec![false; grid.len()];
    for c in grid.cells() {
        let i = grid.idx(c);
        if !eroded[i] || seen[i] {
            continue;
        }
        let mut size = 0usize;
        let mut stack = vec![c];
        seen[i] = true;
        while let Some(cur) = stack.pop() {
            size += 1;
            for nb in grid.neighbors8(cur) {
                let ni = grid.idx(nb);
                if eroded[ni] && !seen[ni] {
                    seen[ni] = true;
                    stack.push(nb);
                }
            }
        }
        if size >= 4 {
            room_count += 1;
        }
    }

    Ok(SceneStats {
        free_area_m2,
        room_count,
        instances,
    })
}
