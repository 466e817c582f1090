//! Supervised training tuples.
//!
//! A tuple pairs a partial map — synthesized by walking a random
//! shortest path across a complete scene and revealing cells along it — with
//! the ground-truth area and per-category object potentials of that partial
//! map. Two reveal strategies exist: a square patch stamped on every path
//! cell, and a forward-facing view cone with wall occlusion. Complete maps
//! can be augmented (rigid translation, quarter-turn rotation) before tuple
//! extraction.
//!
//! Datasets persist in a little-endian binary container (`pfds` version 1):
//! a file header (magic `pfds`, u32 version, u32 record count) followed by
//! records. Each record stores provenance (scene id, seed, augmentation),
//! grid dimensions and resolution, the category table, the partial map's
//! three channels (obstacle and explored as bytes, object ids as u16 with 0
//! for none), the dense f64 target channels (area, then one per category),
//! and the frontier cell list. Reads are bit-exact inverses of writes.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::{distance_field, shortest_path, FieldMode};
use crate::grid::{extract_frontiers, CategoryId, CategoryTable, GridCell, SemanticGrid};
use crate::potentials::{area_potential, object_potential, PotentialField, PotentialParams};
use crate::raycast;
use crate::scalar::Scalar;

/// How a trajectory reveals cells when synthesizing a partial map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskStrategy {
    /// Square patch centered on every path cell; no occlusion.
    Square,
    /// Forward-facing circular sector per path cell, occluded by walls.
    ViewCone,
}

/// Reveal-strategy parameters. Lengths in meters, field of view in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskParams<F: Scalar = f64> {
    pub strategy: MaskStrategy,
    pub square_side_m: F,
    pub cone_radius_m: F,
    pub cone_fov_deg: f64,
}

impl<F: Scalar> Default for MaskParams<F> {
    fn default() -> Self {
        MaskParams {
            strategy: MaskStrategy::Square,
            square_side_m: F::c(3.0),
            cone_radius_m: F::c(3.0),
            cone_fov_deg: 90.0,
        }
    }
}

impl<F: Scalar> MaskParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.square_side_m > F::zero()) {
            return Err(Error::invalid(format!(
                "mask.square_side_m must be positive, got {}",
                self.square_side_m
            )));
        }
        if !(self.cone_radius_m > F::zero()) {
            return Err(Error::invalid(format!(
                "mask.cone_radius_m must be positive, got {}",
                self.cone_radius_m
            )));
        }
        if !(self.cone_fov_deg > 0.0 && self.cone_fov_deg <= 360.0) {
            return Err(Error::invalid(format!(
                "mask.cone_fov_deg must lie in (0, 360], got {}",
                self.cone_fov_deg
            )));
        }
        Ok(())
    }
}

/// Boolean per-cell explored indicator produced by a reveal strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplorationMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl ExplorationMask {
    fn new(width: usize, height: usize) -> Self {
        ExplorationMask {
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn is_set(&self, c: GridCell) -> bool {
        self.cells[c.row * self.width + c.col]
    }

    pub fn count_set(&self) -> usize {
        self.cells.iter().filter(|&&v| v).count()
    }

    pub fn values(&self) -> &[bool] {
        &self.cells
    }

    /// Set cells as a sorted set, ready for [`SemanticGrid::reveal_from`].
    pub fn to_cells(&self) -> BTreeSet<GridCell> {
        let w = self.width;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| GridCell {
                row: i / w,
                col: i % w,
            })
            .collect()
    }
}

/// Rigid map transform: counterclockwise quarter turns, then a cell
/// translation. `(0, 0, 0)` is the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub quarter_turns: u8,
    pub d_row: i32,
    pub d_col: i32,
}

impl AugmentRecord {
    pub fn identity() -> Self {
        AugmentRecord::default()
    }

    pub fn is_identity(&self) -> bool {
        *self == AugmentRecord::default()
    }
}

/// Where a tuple came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scene_id: String,
    pub seed: u64,
    pub augment: AugmentRecord,
}

/// One supervised example: the partial map, its target potentials (area plus
/// one object channel per category in table order) and the frontier cells the
/// losses are measured on.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTuple<F: Scalar = f64> {
    pub partial: SemanticGrid<F>,
    pub target_area: PotentialField<F>,
    pub target_objects: Vec<PotentialField<F>>,
    pub frontier_cells: BTreeSet<GridCell>,
    pub provenance: Provenance,
}

/// Rotates the whole canvas by `quarter_turns` counterclockwise. Odd turn
/// counts swap the grid dimensions.
pub fn rotate_grid<F: Scalar>(grid: &SemanticGrid<F>, quarter_turns: u8) -> SemanticGrid<F> {
    let k = quarter_turns % 4;
    let (h, w) = (grid.height(), grid.width());
    let (nh, nw) = if k % 2 == 0 { (h, w) } else { (w, h) };
    let mut out = SemanticGrid::new_unexplored(nw, nh, grid.resolution(), grid.categories().clone())
        .expect("dimensions stay positive");
    let src_of = |r: usize, c: usize| -> GridCell {
        match k {
            0 => GridCell { row: r, col: c },
            1 => GridCell { row: c, col: w - 1 - r },
            2 => GridCell { row: h - 1 - r, col: w - 1 - c },
            _ => GridCell { row: h - 1 - c, col: r },
        }
    };
    {
        let (src_obstacle, src_explored, src_objects) = grid.raw_channels();
        let (obstacle, explored, objects) = out.raw_channels_mut();
        for r in 0..nh {
            for c in 0..nw {
                let s = src_of(r, c);
                let si = s.row * w + s.col;
                let di = r * nw + c;
                obstacle[di] = src_obstacle[si];
                explored[di] = src_explored[si];
                objects[di] = src_objects[si];
            }
        }
    }
    out.force_complete_flag(grid.is_complete());
    out
}

/// Shifts map content by `(d_row, d_col)` cells; vacated cells become
/// explored obstacle (matching the scene margin). Errors if any free or
/// object cell would leave the canvas.
pub fn translate_grid<F: Scalar>(
    grid: &SemanticGrid<F>,
    d_row: i32,
    d_col: i32,
) -> Result<SemanticGrid<F>> {
    let (h, w) = (grid.height(), grid.width());
    for c in grid.cells() {
        if grid.is_free(c) || grid.object_at(c).is_some() {
            let (r, k) = (c.row as i64 + d_row as i64, c.col as i64 + d_col as i64);
            if r < 0 || k < 0 || r as usize >= h || k as usize >= w {
                return Err(Error::invalid(format!(
                    "translation ({d_row}, {d_col}) clips content at ({}, {})",
                    c.row, c.col
                )));
            }
        }
    }
    let mut out = grid.clone();
    {
        let (src_obstacle, src_explored, src_objects) = grid.raw_channels();
        let (obstacle, explored, objects) = out.raw_channels_mut();
        for r in 0..h {
            for c in 0..w {
                let (sr, sc) = (r as i64 - d_row as i64, c as i64 - d_col as i64);
                let di = r * w + c;
                if sr >= 0 && sc >= 0 && (sr as usize) < h && (sc as usize) < w {
                    let si = sr as usize * w + sc as usize;
                    obstacle[di] = src_obstacle[si];
                    explored[di] = src_explored[si];
                    objects[di] = src_objects[si];
                } else {
                    obstacle[di] = true;
                    explored[di] = true;
                    objects[di] = None;
                }
            }
        }
    }
    Ok(out)
}

/// Applies a recorded augmentation: rotation, then translation.
pub fn apply_augment<F: Scalar>(
    complete: &SemanticGrid<F>,
    record: AugmentRecord,
) -> Result<SemanticGrid<F>> {
    translate_grid(
        &rotate_grid(complete, record.quarter_turns),
        record.d_row,
        record.d_col,
    )
}

/// Draws a random augmentation for `complete`: a quarter-turn rotation
/// (restricted to 0/180 on non-square canvases, where 90/270 would change
/// the dimensions) and a translation within the slack the obstacle margin
/// provides. Deterministic in `seed`.
pub fn augment_with_record<F: Scalar>(
    complete: &SemanticGrid<F>,
    seed: u64,
) -> Result<(SemanticGrid<F>, AugmentRecord)> {
    if !complete.is_complete() {
        return Err(Error::invalid("augment requires a complete map"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let square = complete.width() == complete.height();
    let quarter_turns = if square {
        rng.gen_range(0..4u8)
    } else {
        rng.gen_range(0..2u8) * 2
    };
    let rotated = rotate_grid(complete, quarter_turns);

    // Content bounding box decides how far the map may shift.
    let (h, w) = (rotated.height(), rotated.width());
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for c in rotated.cells() {
        if rotated.is_free(c) || rotated.object_at(c).is_some() {
            bbox = Some(match bbox {
                None => (c.row, c.row, c.col, c.col),
                Some((r0, r1, c0, c1)) => {
                    (r0.min(c.row), r1.max(c.row), c0.min(c.col), c1.max(c.col))
                }
            });
        }
    }
    let Some((r0, r1, c0, c1)) = bbox else {
        return Ok((rotated, AugmentRecord { quarter_turns, d_row: 0, d_col: 0 }));
    };
    let d_row = rng.gen_range(-(r0 as i32)..=(h - 1 - r1) as i32);
    let d_col = rng.gen_range(-(c0 as i32)..=(w - 1 - c1) as i32);
    let record = AugmentRecord {
        quarter_turns,
        d_row,
        d_col,
    };
    Ok((translate_grid(&rotated, d_row, d_col)?, record))
}

/// [`augment_with_record`] without the record.
pub fn augment<F: Scalar>(complete: &SemanticGrid<F>, seed: u64) -> Result<SemanticGrid<F>> {
    augment_with_record(complete, seed).map(|(g, _)| g)
}

fn path_heading(path: &[GridCell], i: usize) -> f64 {
    // Direction to the next cell; the final cell keeps its approach heading.
    let (from, to) = if i + 1 < path.len() {
        (path[i], path[i + 1])
    } else if i > 0 {
        (path[i - 1], path[i])
    } else {
        return 0.0;
    };
    let dc = to.col as f64 - from.col as f64;
    let dr = to.row as f64 - from.row as f64;
    (-dr).atan2(dc)
}

/// Reveal mask along `path` on `complete`. Square mode stamps a
/// `side x side` patch (rounded down to an odd cell count) on every path
/// cell; view-cone mode sweeps an occluded sector oriented along the local
/// path heading. Path cells must be free.
pub fn exploration_mask<F: Scalar>(
    complete: &SemanticGrid<F>,
    path: &[GridCell],
    params: &MaskParams<F>,
) -> Result<ExplorationMask> {
    params.validate()?;
    if path.is_empty() {
        return Err(Error::invalid("exploration_mask requires a non-empty path"));
    }
    for &c in path {
        complete.check_bounds(c)?;
        if !complete.is_free(c) {
            return Err(Error::invalid(format!(
                "path cell ({}, {}) is not free",
                c.row, c.col
            )));
        }
    }
    let (w, h) = (complete.width(), complete.height());
    let mut mask = ExplorationMask::new(w, h);
    let res = complete.resolution().to_f64().expect("finite resolution");
    match params.strategy {
        MaskStrategy::Square => {
            let side = (params.square_side_m.to_f64().expect("finite side") / res).round();
            let radius = ((side as i64 - 1) / 2).max(0);
            for &p in path {
                for dr in -radius..=radius {
                    for dc in -radius..=radius {
                        let (r, k) = (p.row as i64 + dr, p.col as i64 + dc);
                        if r >= 0 && k >= 0 && (r as usize) < h && (k as usize) < w {
                            mask.cells[r as usize * w + k as usize] = true;
                        }
                    }
                }
            }
        }
        MaskStrategy::ViewCone => {
            let fov = params.cone_fov_deg.to_radians();
            let radius_cells = params.cone_radius_m.to_f64().expect("finite radius") / res;
            // Three rays per boundary cell keeps the sector gap-free.
            let rays = ((3.0 * fov * radius_cells).ceil() as usize).max(60);
            for (i, &p) in path.iter().enumerate() {
                let heading = path_heading(path, i);
                raycast::sweep(complete, p, heading, fov, params.cone_radius_m, rays, |c| {
                    mask.cells[c.row * w + c.col] = true;
                });
            }
        }
    }
    Ok(mask)
}

const ENDPOINT_RETRIES: usize = 16;

/// Builds one tuple from `complete`: sample two free cells (seeded), walk
/// their octile shortest path, reveal the mask into a fresh partial map, and
/// attach the exact potential targets computed against `complete`.
pub fn make_tuple<F: Scalar>(
    complete: &SemanticGrid<F>,
    seed: u64,
    mask_params: &MaskParams<F>,
    pf_params: &PotentialParams<F>,
) -> Result<TrainingTuple<F>> {
    make_tuple_with_provenance(
        complete,
        Provenance {
            scene_id: String::new(),
            seed,
            augment: AugmentRecord::identity(),
        },
        mask_params,
        pf_params,
    )
}

/// [`make_tuple`] with explicit provenance; the sampling seed is
/// `provenance.seed`.
pub fn make_tuple_with_provenance<F: Scalar>(
    complete: &SemanticGrid<F>,
    provenance: Provenance,
    mask_params: &MaskParams<F>,
    pf_params: &PotentialParams<F>,
) -> Result<TrainingTuple<F>> {
    if !complete.is_complete() {
        return Err(Error::invalid("make_tuple requires a complete map"));
    }
    mask_params.validate()?;
    pf_params.validate()?;
    let free: Vec<GridCell> = complete.cells().filter(|&c| complete.is_free(c)).collect();
    if free.len() < 2 {
        return Err(Error::invalid("make_tuple needs at least two free cells"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(provenance.seed);
    let mut path = None;
    for _ in 0..ENDPOINT_RETRIES {
        let a = free[rng.gen_range(0..free.len())];
        let b = free[rng.gen_range(0..free.len())];
        if a == b {
            continue;
        }
        let sources: BTreeSet<GridCell> = [b].into_iter().collect();
        let field = distance_field(
            complete,
            &sources,
            |c| complete.is_free(c),
            FieldMode::DijkstraOctile,
        )?;
        if let Ok(plan) = shortest_path(&field, a) {
            path = Some(plan);
            break;
        }
    }
    let Some(plan) = path else {
        return Err(Error::Generation(format!(
            "no traversable endpoint pair found in {ENDPOINT_RETRIES} draws"
        )));
    };

    let mask = exploration_mask(complete, &plan.cells, mask_params)?;
    let mut partial = SemanticGrid::new_unexplored(
        complete.width(),
        complete.height(),
        complete.resolution(),
        complete.categories().clone(),
    )?;
    partial.reveal_from(complete, &mask.to_cells())?;

    let frontier_cells: BTreeSet<GridCell> = extract_frontiers(&partial)
        .into_iter()
        .flat_map(|f| f.cells)
        .collect();
    let target_area = area_potential(&partial, complete, pf_params)?;
    let target_objects: Vec<PotentialField<F>> = (0..complete.categories().len())
        .map(|i| object_potential(&partial, complete, CategoryId(i as u16), pf_params))
        .collect::<Result<_>>()?;
    Ok(TrainingTuple {
        partial,
        target_area,
        target_objects,
        frontier_cells,
        provenance,
    })
}

const DATASET_MAGIC: &[u8; 4] = b"pfds";
const DATASET_VERSION: u32 = 1;

fn push_str(out: &mut Vec<u8>, s: &str) {
    let bytes = s.as_bytes();
    out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn encode_tuple<F: Scalar>(out: &mut Vec<u8>, tuple: &TrainingTuple<F>) {
    let p = &tuple.provenance;
    push_str(out, &p.scene_id);
    out.extend_from_slice(&p.seed.to_le_bytes());
    out.push(p.augment.quarter_turns);
    out.extend_from_slice(&p.augment.d_row.to_le_bytes());
    out.extend_from_slice(&p.augment.d_col.to_le_bytes());

    let g = &tuple.partial;
    let (w, h) = (g.width(), g.height());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    let res = g.resolution().to_f64().expect("finite resolution");
    out.extend_from_slice(&res.to_le_bytes());
    out.push(g.is_complete() as u8);
    let table = g.categories();
    out.extend_from_slice(&(table.len() as u16).to_le_bytes());
    for (_, name, goal) in table.iter() {
        push_str(out, name);
        out.push(goal as u8);
    }
    let (obstacle, explored, objects) = g.raw_channels();
    out.extend(obstacle.iter().map(|&b| b as u8));
    out.extend(explored.iter().map(|&b| b as u8));
    for o in objects {
        let v: u16 = o.map(|id| id.0 + 1).unwrap_or(0);
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &v in tuple.target_area.values() {
        out.extend_from_slice(&v.to_f64().expect("finite value").to_le_bytes());
    }
    out.extend_from_slice(&(tuple.target_objects.len() as u16).to_le_bytes());
    for ch in &tuple.target_objects {
        for &v in ch.values() {
            out.extend_from_slice(&v.to_f64().expect("finite value").to_le_bytes());
        }
    }
    out.extend_from_slice(&(tuple.frontier_cells.len() as u32).to_le_bytes());
    for c in &tuple.frontier_cells {
        out.extend_from_slice(&(c.row as u32).to_le_bytes());
        out.extend_from_slice(&(c.col as u32).to_le_bytes());
    }
}

/// Serializes `tuples` to `path` in the container described in the module
/// docs.
pub fn write_dataset<F: Scalar>(path: impl AsRef<Path>, tuples: &[TrainingTuple<F>]) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(tuples.len() as u32).to_le_bytes());
    for tuple in tuples {
        encode_tuple(&mut out, tuple);
    }
    let mut file = fs::File::create(path.as_ref())?;
    file.write_all(&out)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::parse(
                what.to_string(),
                format!(
                    "needs {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.buf.len()
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4, what)?.try_into().unwrap()))
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.bytes(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let bytes = self.bytes(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::parse(what.to_string(), "invalid utf-8"))
    }
}

fn decode_tuple<F: Scalar>(r: &mut Reader<'_>) -> Result<TrainingTuple<F>> {
    let scene_id = r.string("provenance")?;
    let seed = r.u64("provenance")?;
    let augment = AugmentRecord {
        quarter_turns: r.u8("provenance")?,
        d_row: r.i32("provenance")?,
        d_col: r.i32("provenance")?,
    };
    let width = r.u32("dimensions")? as usize;
    let height = r.u32("dimensions")? as usize;
    let resolution = r.f64("dimensions")?;
    let complete = r.u8("dimensions")? != 0;
    let n_cats = r.u16("categories")? as usize;
    let mut entries = Vec::with_capacity(n_cats);
    for _ in 0..n_cats {
        let name = r.string("categories")?;
        let goal = r.u8("categories")? != 0;
        entries.push((name, goal));
    }
    let table = CategoryTable::new(entries)
        .map_err(|e| Error::parse("categories", e.to_string()))?;

    let n = width
        .checked_mul(height)
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::parse("dimensions", "empty or overflowing grid"))?;
    let mut partial = SemanticGrid::new_unexplored(width, height, F::c(resolution), table)
        .map_err(|e| Error::parse("dimensions", e.to_string()))?;
    {
        let obstacle_bytes = r.bytes(n, "obstacle channel")?.to_vec();
        let explored_bytes = r.bytes(n, "explored channel")?.to_vec();
        let (obstacle, explored, objects) = partial.raw_channels_mut();
        for i in 0..n {
            obstacle[i] = obstacle_bytes[i] != 0;
            explored[i] = explored_bytes[i] != 0;
        }
        for slot in objects.iter_mut() {
            let v = r.u16("object channel")?;
            *slot = if v == 0 { None } else { Some(CategoryId(v - 1)) };
        }
    }
    for id in partial.cells().filter_map(|c| partial.object_at(c)) {
        if !partial.categories().contains(id) {
            return Err(Error::parse(
                "object channel",
                format!("category id {} outside the table", id.0),
            ));
        }
    }
    partial.force_complete_flag(complete);

    let mut target_area = PotentialField::zeros(width, height);
    for row in 0..height {
        for col in 0..width {
            target_area.set(GridCell { row, col }, F::c(r.f64("area target")?));
        }
    }
    let n_channels = r.u16("object targets")? as usize;
    let mut target_objects = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let mut ch = PotentialField::zeros(width, height);
        for row in 0..height {
            for col in 0..width {
                ch.set(GridCell { row, col }, F::c(r.f64("object targets")?));
            }
        }
        target_objects.push(ch);
    }
    let n_frontier = r.u32("frontier cells")? as usize;
    let mut frontier_cells = BTreeSet::new();
    for _ in 0..n_frontier {
        let row = r.u32("frontier cells")? as usize;
        let col = r.u32("frontier cells")? as usize;
        if row >= height || col >= width {
            return Err(Error::parse(
                "frontier cells",
                format!("cell ({row}, {col}) out of bounds"),
            ));
        }
        frontier_cells.insert(GridCell { row, col });
    }
    Ok(TrainingTuple {
        partial,
        target_area,
        target_objects,
        frontier_cells,
        provenance: Provenance {
            scene_id,
            seed,
            augment,
        },
    })
}

/// Reads a dataset written by [`write_dataset`]. Parse errors name the
/// failing record.
pub fn read_dataset<F: Scalar>(path: impl AsRef<Path>) -> Result<Vec<TrainingTuple<F>>> {
    let buf = fs::read(path.as_ref())?;
    let mut r = Reader { buf: &buf, pos: 0 };
    if r.bytes(4, "header")? != DATASET_MAGIC {
        return Err(Error::parse("header", "missing pfds magic"));
    }
    let version = r.u32("header")?;
    if version != DATASET_VERSION {
        return Err(Error::parse(
            "header",
            format!("unsupported version {version}"),
        ));
    }
    let count = r.u32("header")? as usize;
    let mut tuples = Vec::with_capacity(count);
    for i in 0..count {
        let tuple = decode_tuple(&mut r).map_err(|e| match e {
            Error::Parse { context, message } => Error::Parse {
                context: format!("record {i}: {context}"),
                message,
            },
            other => other,
        })?;
        tuples.push(tuple);
    }
    if r.pos != buf.len() {
        return Err(Error::parse(
            "trailer",
            format!("{} trailing bytes after the last record", buf.len() - r.pos),
        ));
    }
    Ok(tuples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cell;
    use crate::scenegen::{free_space_connected, generate_scene, scene_stats, SceneParams};

    fn scene() -> SemanticGrid {
        let params = SceneParams {
            seed: 5,
            width_m: 6.0,
            height_m: 6.0,
            resolution_m: 0.1,
            margin_m: 0.3,
            room_count_range: (2, 3),
            ..SceneParams::default()
        };
        generate_scene(&params).unwrap()
    }

    #[test]
    fn identity_augment_is_identity() {
        let g = scene();
        assert_eq!(apply_augment(&g, AugmentRecord::identity()).unwrap(), g);
    }

    #[test]
    fn half_turn_twice_is_identity() {
        let g = scene();
        let half = AugmentRecord {
            quarter_turns: 2,
            ..AugmentRecord::identity()
        };
        let once = apply_augment(&g, half).unwrap();
        assert_ne!(once, g);
        assert_eq!(apply_augment(&once, half).unwrap(), g);
    }

    #[test]
    fn rotation_preserves_object_counts_and_connectivity() {
        let g = scene();
        let before = scene_stats(&g).unwrap();
        for turns in 1..4u8 {
            let rotated = rotate_grid(&g, turns);
            assert!(rotated.is_complete());
            assert!(free_space_connected(&rotated), "turns {turns}");
            let after = scene_stats(&rotated).unwrap();
            assert_eq!(after.instances, before.instances, "turns {turns}");
            assert_eq!(after.free_area_m2, before.free_area_m2);
        }
    }

    #[test]
    fn augment_is_deterministic_and_keeps_content() {
        let g = scene();
        let (a, rec_a) = augment_with_record(&g, 99).unwrap();
        let (b, rec_b) = augment_with_record(&g, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(rec_a, rec_b);
        assert_eq!(a.count_free(), g.count_free());
        assert!(free_space_connected(&a));
        assert_eq!(apply_augment(&g, rec_a).unwrap(), a);
    }

    #[test]
    fn translation_clipping_content_errors() {
        let g = scene();
        assert!(translate_grid(&g, g.height() as i32, 0).is_err());
    }

    #[test]
    fn square_mask_single_cell_interior() {
        let g: SemanticGrid =
            SemanticGrid::new_explored_free(9, 9, 1.0, CategoryTable::default_indoor()).unwrap();
        let params = MaskParams {
            square_side_m: 3.0,
            ..MaskParams::default()
        };
        let mask = exploration_mask(&g, &[cell(4, 4)], &params).unwrap();
        assert_eq!(mask.count_set(), 9);
        assert!(mask.is_set(cell(3, 3)) && mask.is_set(cell(5, 5)));
        assert!(!mask.is_set(cell(2, 4)));
    }

    #[test]
    fn square_mask_clips_at_borders() {
        let g: SemanticGrid =
            SemanticGrid::new_explored_free(9, 9, 1.0, CategoryTable::default_indoor()).unwrap();
        let params = MaskParams {
            square_side_m: 3.0,
            ..MaskParams::default()
        };
        let mask = exploration_mask(&g, &[cell(0, 0)], &params).unwrap();
        assert_eq!(mask.count_set(), 4);
    }

    #[test]
    fn mask_of_path_prefix_is_subset() {
        let g: SemanticGrid =
            SemanticGrid::new_explored_free(20, 20, 0.1, CategoryTable::default_indoor()).unwrap();
        let path: Vec<GridCell> = (2..15).map(|col| cell(10, col)).collect();
        for strategy in [MaskStrategy::Square, MaskStrategy::ViewCone] {
            let params = MaskParams {
                strategy,
                square_side_m: 0.5,
                cone_radius_m: 0.5,
                ..MaskParams::default()
            };
            let full = exploration_mask(&g, &path, &params).unwrap();
            let prefix = exploration_mask(&g, &path[..5], &params).unwrap();
            for (i, (&p, &f)) in prefix.values().iter().zip(full.values()).enumerate() {
                assert!(!p || f, "cell {i} set in prefix but not in full mask");
            }
        }
    }

    #[test]
    fn view_cone_respects_occlusion() {
        // Wall across the map; a path on the left looking right must not
        // reveal anything past the wall.
        let mut g: SemanticGrid =
            SemanticGrid::new_explored_free(15, 15, 0.1, CategoryTable::default_indoor()).unwrap();
        for row in 0..15 {
            g.set_obstacle(cell(row, 8), true);
        }
        let params = MaskParams {
            strategy: MaskStrategy::ViewCone,
            cone_radius_m: 1.4,
            cone_fov_deg: 90.0,
            ..MaskParams::default()
        };
        let path: Vec<GridCell> = (2..7).map(|col| cell(7, col)).collect();
        let mask = exploration_mask(&g, &path, &params).unwrap();
        assert!(mask.is_set(cell(7, 7)), "cell before the wall visible");
        for row in 0..15 {
            for col in 9..15 {
                assert!(!mask.is_set(cell(row, col)), "({row}, {col}) leaked");
            }
        }
    }

    #[test]
    fn mask_argument_errors() {
        let g = scene();
        let params = MaskParams::default();
        assert!(exploration_mask(&g, &[], &params).is_err());
        let wall = g.cells().find(|&c| g.is_obstacle(c)).unwrap();
        assert!(exploration_mask(&g, &[wall], &params).is_err());
        let bad = MaskParams {
            cone_fov_deg: 0.0,
            ..MaskParams::default()
        };
        assert!(exploration_mask(&g, &[cell(0, 0)], &bad).is_err());
    }

    #[test]
    fn make_tuple_is_deterministic() {
        let g = scene();
        let mask = MaskParams::default();
        let pf = PotentialParams::default();
        let a = make_tuple(&g, 7, &mask, &pf).unwrap();
        let b = make_tuple(&g, 7, &mask, &pf).unwrap();
        assert_eq!(a, b);
        let c = make_tuple(&g, 8, &mask, &pf).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tuple_invariants_hold() {
        let g = scene();
        let tuple = make_tuple(&g, 3, &MaskParams::default(), &PotentialParams::default()).unwrap();
        // Frontier set matches a fresh extraction.
        let fresh: BTreeSet<GridCell> = extract_frontiers(&tuple.partial)
            .into_iter()
            .flat_map(|f| f.cells)
            .collect();
        assert_eq!(tuple.frontier_cells, fresh);
        assert_eq!(tuple.target_objects.len(), g.categories().len());
        // Targets vanish off the frontier.
        for c in tuple.partial.cells() {
            if !tuple.frontier_cells.contains(&c) {
                assert_eq!(tuple.target_area.get(c), 0.0);
                for ch in &tuple.target_objects {
                    assert_eq!(ch.get(c), 0.0);
                }
            }
        }
        // Explored cells agree with the complete map.
        for c in tuple.partial.cells() {
            if tuple.partial.is_explored(c) {
                assert_eq!(tuple.partial.is_obstacle(c), g.is_obstacle(c));
                assert_eq!(tuple.partial.object_at(c), g.object_at(c));
            }
        }
    }

    #[test]
    fn tuple_targets_recompute_exactly() {
        let g = scene();
        let pf = PotentialParams::default();
        let tuple = make_tuple(&g, 11, &MaskParams::default(), &pf).unwrap();
        let area = area_potential(&tuple.partial, &g, &pf).unwrap();
        assert_eq!(tuple.target_area, area);
        for (i, ch) in tuple.target_objects.iter().enumerate() {
            let again = object_potential(&tuple.partial, &g, CategoryId(i as u16), &pf).unwrap();
            assert_eq!(*ch, again, "channel {i}");
        }
    }

    #[test]
    fn dataset_round_trips() {
        let g = scene();
        let tuples: Vec<TrainingTuple> = (0..3)
            .map(|s| {
                make_tuple_with_provenance(
                    &g,
                    Provenance {
                        scene_id: format!("scene-{s}"),
                        seed: s,
                        augment: AugmentRecord::identity(),
                    },
                    &MaskParams::default(),
                    &PotentialParams::default(),
                )
                .unwrap()
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tuples.pfds");
        write_dataset(&path, &tuples).unwrap();
        let back: Vec<TrainingTuple> = read_dataset(&path).unwrap();
        assert_eq!(tuples, back);
    }

    #[test]
    fn empty_dataset_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.pfds");
        write_dataset::<f64>(&path, &[]).unwrap();
        assert!(read_dataset::<f64>(&path).unwrap().is_empty());
    }

    #[test]
    fn truncated_dataset_names_the_record() {
        let g = scene();
        let tuples: Vec<TrainingTuple> = (0..2)
            .map(|s| {
                make_tuple(&g, s, &MaskParams::default(), &PotentialParams::default()).unwrap()
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfds");
        write_dataset(&path, &tuples).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 40]).unwrap();
        let err = read_dataset::<f64>(&path).unwrap_err();
        assert!(
            err.to_string().contains("record 1"),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.pfds");
        fs::write(&path, b"nope0000").unwrap();
        assert!(read_dataset::<f64>(&path).is_err());
    }
}
