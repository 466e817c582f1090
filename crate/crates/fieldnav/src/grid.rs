//! Semantic occupancy grids and frontier / component analysis.
//!
//! A [`SemanticGrid`] stores three aligned per-cell channels: obstacle,
//! explored and an optional object category. Partial maps (what an agent has
//! seen so far) and complete maps (ground truth) share the same type; the
//! `complete` flag distinguishes them. Frontiers live on the explored side of
//! the explored/unexplored boundary, and unexplored free-space components are
//! measured against the complete map.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index into a [`CategoryTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryId(pub u16);

#[derive(Clone, Debug, PartialEq, Eq)]
struct CategoryEntry {
    name: String,
    goal: bool,
}

/// Object category names plus a goal/distractor flag per entry.
///
/// Names are unique, non-empty and free of whitespace (they appear as single
/// tokens in the map container format).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryTable {
    entries: Vec<CategoryEntry>,
}

impl CategoryTable {
    /// Builds a table from `(name, is_goal)` pairs.
    pub fn new<S: Into<String>>(entries: Vec<(S, bool)>) -> Result<Self> {
        let entries: Vec<CategoryEntry> = entries
            .into_iter()
            .map(|(name, goal)| CategoryEntry {
                name: name.into(),
                goal,
            })
            .collect();
        let table = CategoryTable { entries };
        table.validate()?;
        Ok(table)
    }

    /// Ten-category household table: six goal categories, four distractors.
    pub fn default_indoor() -> Self {
        CategoryTable::new(vec![
            ("chair", true),
            ("couch", true),
            ("plant", true),
            ("bed", true),
            ("toilet", true),
            ("tv", true),
            ("table", false),
            ("sink", false),
            ("shelf", false),
            ("lamp", false),
        ])
        .expect("built-in table is valid")
    }

    fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid("category table must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.name.is_empty() || e.name.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!(
                    "category name {:?} must be non-empty without whitespace",
                    e.name
                )));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(Error::invalid(format!("duplicate category name {:?}", e.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: CategoryId) -> bool {
        (id.0 as usize) < self.entries.len()
    }

    pub fn name(&self, id: CategoryId) -> Result<&str> {
        self.entries
            .get(id.0 as usize)
            .map(|e| e.name.as_str())
            .ok_or(Error::UnknownCategory(id.0))
    }

    pub fn is_goal(&self, id: CategoryId) -> Result<bool> {
        self.entries
            .get(id.0 as usize)
            .map(|e| e.goal)
            .ok_or(Error::UnknownCategory(id.0))
    }

    pub fn id_of(&self, name: &str) -> Option<CategoryId> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .map(|i| CategoryId(i as u16))
    }

    /// Ids flagged as navigation goals, in table order.
    pub fn goal_ids(&self) -> Vec<CategoryId> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.goal)
            .map(|(i, _)| CategoryId(i as u16))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CategoryId, &str, bool)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (CategoryId(i as u16), e.name.as_str(), e.goal))
    }
}

/// Row/column address of one grid cell. Ordering is (row, col) lexicographic,
/// which every deterministic tie-break in the crate relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
}

pub fn cell(row: usize, col: usize) -> GridCell {
    GridCell { row, col }
}

/// 8-neighborhood offsets in scan order (row-major, NW first).
pub const OFFSETS_8: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// 4-neighborhood offsets (N, W, E, S).
pub const OFFSETS_4: [(i32, i32); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

/// Occupancy + exploration + object category channels over a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticGrid<F: Scalar = f64> {
    width: usize,
    height: usize,
    resolution: F,
    complete: bool,
    obstacle: Vec<bool>,
    explored: Vec<bool>,
    objects: Vec<Option<CategoryId>>,
    categories: CategoryTable,
}

impl<F: Scalar> SemanticGrid<F> {
    /// All-unexplored grid, the starting point for partial maps.
    pub fn new_unexplored(
        width: usize,
        height: usize,
        resolution: F,
        categories: CategoryTable,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if !(resolution > F::zero()) {
            return Err(Error::invalid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let n = width * height;
        Ok(SemanticGrid {
            width,
            height,
            resolution,
            complete: false,
            obstacle: vec![false; n],
            explored: vec![false; n],
            objects: vec![None; n],
            categories,
        })
    }

    /// Fully explored grid with every cell free; scene builders carve into it.
    pub fn new_explored_free(
        width: usize,
        height: usize,
        resolution: F,
        categories: CategoryTable,
    ) -> Result<Self> {
        let mut g = Self::new_unexplored(width, height, resolution, categories)?;
        g.explored.iter_mut().for_each(|e| *e = true);
        g.complete = true;
        Ok(g)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> F {
        self.resolution
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn categories(&self) -> &CategoryTable {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, c: GridCell) -> usize {
        debug_assert!(self.in_bounds(c));
        c.row * self.width + c.col
    }

    #[inline]
    pub fn cell_at(&self, idx: usize) -> GridCell {
        GridCell {
            row: idx / self.width,
            col: idx % self.width,
        }
    }

    #[inline]
    pub fn in_bounds(&self, c: GridCell) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn check_bounds(&self, c: GridCell) -> Result<()> {
        if self.in_bounds(c) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                row: c.row,
                col: c.col,
                width: self.width,
                height: self.height,
            })
        }
    }

    #[inline]
    pub fn is_obstacle(&self, c: GridCell) -> bool {
        self.obstacle[self.idx(c)]
    }

    #[inline]
    pub fn is_free(&self, c: GridCell) -> bool {
        !self.obstacle[self.idx(c)]
    }

    #[inline]
    pub fn is_explored(&self, c: GridCell) -> bool {
        self.explored[self.idx(c)]
    }

    #[inline]
    pub fn object_at(&self, c: GridCell) -> Option<CategoryId> {
        self.objects[self.idx(c)]
    }

    pub fn set_obstacle(&mut self, c: GridCell, v: bool) {
        let i = self.idx(c);
        self.obstacle[i] = v;
    }

    /// Stamps an object; the cell becomes an obstacle as well, since placed
    /// objects block movement.
    pub fn set_object(&mut self, c: GridCell, id: CategoryId) -> Result<()> {
        if !self.categories.contains(id) {
            return Err(Error::UnknownCategory(id.0));
        }
        let i = self.idx(c);
        debug_assert!(self.explored[i], "objects only live on explored cells");
        self.objects[i] = Some(id);
        self.obstacle[i] = true;
        Ok(())
    }

    pub fn clear_object(&mut self, c: GridCell) {
        let i = self.idx(c);
        self.objects[i] = None;
        self.obstacle[i] = false;
    }

    /// In-bounds 8-neighbors in [`OFFSETS_8`] order.
    pub fn neighbors8(&self, c: GridCell) -> impl Iterator<Item = GridCell> + '_ {
        OFFSETS_8.iter().filter_map(move |&(dr, dc)| {
            let r = c.row as i64 + dr as i64;
            let k = c.col as i64 + dc as i64;
            if r >= 0 && k >= 0 && (r as usize) < self.height && (k as usize) < self.width {
                Some(GridCell {
                    row: r as usize,
                    col: k as usize,
                })
            } else {
                None
            }
        })
    }

    pub fn same_shape<G: Scalar>(&self, other: &SemanticGrid<G>) -> Result<()> {
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

    /// Iterator over all cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        let w = self.width;
        (0..self.len()).map(move |i| GridCell {
            row: i / w,
            col: i % w,
        })
    }

    pub fn count_explored(&self) -> usize {
        self.explored.iter().filter(|&&e| e).count()
    }

    pub fn count_free(&self) -> usize {
        self.obstacle.iter().filter(|&&o| !o).count()
    }

    /// Copies obstacle/object truth for `cells` from `complete` and marks them
    /// explored. Updates the `complete` flag when everything is explored.
    pub fn reveal_from(&mut self, complete: &SemanticGrid<F>, cells: &BTreeSet<GridCell>) -> Result<()> {
        self.same_shape(complete)?;
        for &c in cells {
            self.check_bounds(c)?;
            let i = self.idx(c);
            self.explored[i] = true;
            self.obstacle[i] = complete.obstacle[i];
            self.objects[i] = complete.objects[i];
        }
        if !self.complete {
            self.complete = self.explored.iter().all(|&e| e);
        }
        Ok(())
    }

    /// Marks every cell explored from `complete` (a fully known copy).
    pub fn reveal_all(&mut self, complete: &SemanticGrid<F>) -> Result<()> {
        self.same_shape(complete)?;
        self.explored.iter_mut().for_each(|e| *e = true);
        self.obstacle.copy_from_slice(&complete.obstacle);
        self.objects.copy_from_slice(&complete.objects);
        self.complete = true;
        Ok(())
    }

    pub(crate) fn force_complete_flag(&mut self, v: bool) {
        self.complete = v;
    }

    pub(crate) fn raw_channels_mut(&mut self) -> (&mut Vec<bool>, &mut Vec<bool>, &mut Vec<Option<CategoryId>>) {
        (&mut self.obstacle, &mut self.explored, &mut self.objects)
    }

    pub(crate) fn raw_channels(&self) -> (&[bool], &[bool], &[Option<CategoryId>]) {
        (&self.obstacle, &self.explored, &self.objects)
    }
}

/// 8-connected unexplored free-space region, measured on the complete map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub id: u32,
    pub cells: BTreeSet<GridCell>,
}

impl Component {
    pub fn area_cells(&self) -> usize {
        self.cells.len()
    }
}

/// 8-connected cluster of frontier cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frontier {
    pub id: u32,
    pub cells: BTreeSet<GridCell>,
}

/// Connected regions of cells that are free in `complete` but still
/// unexplored in `partial`. Component ids follow row-major discovery order.
pub fn unexplored_components<F: Scalar>(
    partial: &SemanticGrid<F>,
    complete: &SemanticGrid<F>,
) -> Result<Vec<Component>> {
    partial.same_shape(complete)?;
    if !complete.is_complete() {
        return Err(Error::invalid(
            "unexplored_components requires a complete reference map",
        ));
    }
    let in_region = |c: GridCell| !partial.is_explored(c) && complete.is_free(c);
    let n = partial.len();
    let mut visited = vec![false; n];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in partial.cells() {
        let si = partial.idx(start);
        if visited[si] || !in_region(start) {
            continue;
        }
        let id = components.len() as u32;
        let mut cells = BTreeSet::new();
        visited[si] = true;
        stack.push(start);
        while let Some(c) = stack.pop() {
            cells.insert(c);
            for nb in complete.neighbors8(c) {
                let ni = complete.idx(nb);
                if !visited[ni] && in_region(nb) {
                    visited[ni] = true;
                    stack.push(nb);
                }
            }
        }
        components.push(Component { id, cells });
    }
    Ok(components)
}

pub(crate) fn is_frontier_cell<F: Scalar>(g: &SemanticGrid<F>, c: GridCell) -> bool {
    g.is_explored(c)
        && g.is_free(c)
        && g.neighbors8(c).any(|nb| !g.is_explored(nb))
}

/// Frontier clusters of `grid`: explored free cells with at least one
/// 8-connected unexplored neighbor, grouped 8-connected. Returns an empty
/// list when no explored free cell borders unexplored space.
pub fn extract_frontiers<F: Scalar>(grid: &SemanticGrid<F>) -> Vec<Frontier> {
    let n = grid.len();
    let mut frontier_mask = vec![false; n];
    for c in grid.cells() {
        if is_frontier_cell(grid, c) {
            frontier_mask[grid.idx(c)] = true;
        }
    }
    let mut visited = vec![false; n];
    let mut frontiers = Vec::new();
    let mut stack = Vec::new();
    for start in grid.cells() {
        let si = grid.idx(start);
        if visited[si] || !frontier_mask[si] {
            continue;
        }
        let id = frontiers.len() as u32;
        let mut cells = BTreeSet::new();
        visited[si] = true;
        stack.push(start);
        while let Some(c) = stack.pop() {
            cells.insert(c);
            for nb in grid.neighbors8(c) {
                let ni = grid.idx(nb);
                if !visited[ni] && frontier_mask[ni] {
                    visited[ni] = true;
                    stack.push(nb);
                }
            }
        }
        frontiers.push(Frontier { id, cells });
    }
    frontiers
}

/// Maps each frontier id to the ids of components it touches (8-adjacency
/// between any frontier cell and any component cell). Component lists are
/// sorted; frontiers touching nothing map to an empty list.
pub fn associate_components(
    frontiers: &[Frontier],
    components: &[Component],
    width: usize,
    height: usize,
) -> BTreeMap<u32, Vec<u32>> {
    // Label grid for O(1) adjacency lookups.
    let mut label: Vec<Option<u32>> = vec![None; width * height];
    for comp in components {
        for &c in &comp.cells {
            label[c.row * width + c.col] = Some(comp.id);
        }
    }
    let mut assoc = BTreeMap::new();
    for f in frontiers {
        let mut touched = BTreeSet::new();
        for &c in &f.cells {
            for &(dr, dc) in &OFFSETS_8 {
                let r = c.row as i64 + dr as i64;
                let k = c.col as i64 + dc as i64;
                if r < 0 || k < 0 || r as usize >= height || k as usize >= width {
                    continue;
                }
                if let Some(id) = label[r as usize * width + k as usize] {
                    touched.insert(id);
                }
            }
        }
        assoc.insert(f.id, touched.into_iter().collect());
    }
    assoc
}

/// Pure variant of [`SemanticGrid::reveal_from`]: returns the revealed copy.
pub fn reveal<F: Scalar>(
    partial: &SemanticGrid<F>,
    complete: &SemanticGrid<F>,
    cells: &BTreeSet<GridCell>,
) -> Result<SemanticGrid<F>> {
    let mut out = partial.clone();
    out.reveal_from(complete, cells)?;
    Ok(out)
}

/// Chebyshev dilation of a boolean mask by `radius` cells.
pub fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    assert_eq!(mask.len(), width * height);
    if radius == 0 {
        return mask.to_vec();
    }
    let r = radius as i64;
    let mut out = vec![false; mask.len()];
    for row in 0..height as i64 {
        for col in 0..width as i64 {
            if !mask[(row * width as i64 + col) as usize] {
                continue;
            }
            for dr in -r..=r {
                for dc in -r..=r {
                    let (nr, nc) = (row + dr, col + dc);
                    if nr >= 0 && nc >= 0 && (nr as usize) < height && (nc as usize) < width {
                        out[nr as usize * width + nc as usize] = true;
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> CategoryTable {
        CategoryTable::default_indoor()
    }

    /// 8x8 complete map: border walls, interior free.
    fn walled_room() -> SemanticGrid {
        let mut g = SemanticGrid::new_explored_free(8, 8, 0.05, table()).unwrap();
        for c in g.cells().collect::<Vec<_>>() {
            if c.row == 0 || c.col == 0 || c.row == 7 || c.col == 7 {
                g.set_obstacle(c, true);
            }
        }
        g
    }

    #[test]
    fn category_table_rejects_duplicates_and_whitespace() {
        assert!(CategoryTable::new(vec![("a", true), ("a", false)]).is_err());
        assert!(CategoryTable::new(vec![("a b", true)]).is_err());
        assert!(CategoryTable::new(vec![("", true)]).is_err());
        assert!(CategoryTable::new(Vec::<(&str, bool)>::new()).is_err());
    }

    #[test]
    fn default_table_has_six_goals() {
        let t = table();
        assert_eq!(t.len(), 10);
        assert_eq!(t.goal_ids().len(), 6);
        assert_eq!(t.id_of("toilet"), Some(CategoryId(4)));
        assert!(t.is_goal(CategoryId(4)).unwrap());
        assert!(!t.is_goal(CategoryId(6)).unwrap());
        assert!(t.name(CategoryId(11)).is_err());
    }

    #[test]
    fn fully_explored_map_has_no_frontiers() {
        let g = walled_room();
        assert!(extract_frontiers(&g).is_empty());
    }

    #[test]
    fn fully_unexplored_map_has_no_frontiers() {
        let g: SemanticGrid = SemanticGrid::new_unexplored(8, 8, 0.05, table()).unwrap();
        assert!(extract_frontiers(&g).is_empty());
    }

    #[test]
    fn frontier_lives_on_explored_side() {
        // Reveal the left half of an open map; the frontier is the rightmost
        // revealed column, not the first unexplored one.
        let complete: SemanticGrid = SemanticGrid::new_explored_free(6, 4, 0.05, table()).unwrap();
        let mut partial = SemanticGrid::new_unexplored(6, 4, 0.05, table()).unwrap();
        let left: BTreeSet<GridCell> = complete.cells().filter(|c| c.col < 3).collect();
        partial.reveal_from(&complete, &left).unwrap();

        let frontiers = extract_frontiers(&partial);
        assert_eq!(frontiers.len(), 1);
        let f = &frontiers[0];
        assert_eq!(f.cells.len(), 4);
        assert!(f.cells.iter().all(|c| c.col == 2));
        assert!(f.cells.iter().all(|c| partial.is_explored(*c)));
    }

    #[test]
    fn diagonal_only_contact_still_joins_a_frontier_cluster() {
        // Two explored free cells touching only at a corner and both adjacent
        // to unexplored space form one frontier (8-connected grouping).
        let complete: SemanticGrid = SemanticGrid::new_explored_free(4, 4, 0.05, table()).unwrap();
        let mut partial = SemanticGrid::new_unexplored(4, 4, 0.05, table()).unwrap();
        let cells: BTreeSet<GridCell> = [cell(0, 0), cell(1, 1)].into_iter().collect();
        partial.reveal_from(&complete, &cells).unwrap();
        let frontiers = extract_frontiers(&partial);
        assert_eq!(frontiers.len(), 1);
        assert_eq!(frontiers[0].cells.len(), 2);
    }

    #[test]
    fn unexplored_components_split_by_wall() {
        // Vertical wall at col 3 splits the unexplored right side of the map
        // only where the wall blocks 8-connectivity; free cells behind the
        // wall stay one component because the wall has a gap.
        let mut complete: SemanticGrid = SemanticGrid::new_explored_free(7, 7, 0.05, table()).unwrap();
        for row in 0..7 {
            if row != 3 {
                complete.set_obstacle(cell(row, 3), true);
            }
        }
        let partial = SemanticGrid::new_unexplored(7, 7, 0.05, table()).unwrap();
        let comps = unexplored_components(&partial, &complete).unwrap();
        assert_eq!(comps.len(), 1, "gap at (3,3) keeps free space connected");
        let total: usize = comps.iter().map(|c| c.area_cells()).sum();
        assert_eq!(total, complete.count_free());
    }

    #[test]
    fn unexplored_components_exclude_explored_and_obstacle_cells() {
        let mut complete: SemanticGrid = SemanticGrid::new_explored_free(5, 5, 0.05, table()).unwrap();
        complete.set_obstacle(cell(2, 2), true);
        let mut partial = SemanticGrid::new_unexplored(5, 5, 0.05, table()).unwrap();
        let seen: BTreeSet<GridCell> = (0..5).map(|col| cell(0, col)).collect();
        partial.reveal_from(&complete, &seen).unwrap();

        let comps = unexplored_components(&partial, &complete).unwrap();
        assert_eq!(comps.len(), 1);
        // 25 cells - 5 explored - 1 obstacle.
        assert_eq!(comps[0].area_cells(), 19);
        assert!(!comps[0].cells.contains(&cell(2, 2)));
        assert!(!comps[0].cells.contains(&cell(0, 0)));
    }

    #[test]
    fn unexplored_components_require_complete_reference() {
        let partial: SemanticGrid = SemanticGrid::new_unexplored(4, 4, 0.05, table()).unwrap();
        let not_complete: SemanticGrid = SemanticGrid::new_unexplored(4, 4, 0.05, table()).unwrap();
        assert!(matches!(
            unexplored_components(&partial, &not_complete),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn association_uses_eight_adjacency() {
        // Partial: left 2 columns revealed. One frontier at col 1, the rest of
        // the open map is one unexplored component adjacent to it.
        let complete: SemanticGrid = SemanticGrid::new_explored_free(6, 6, 0.05, table()).unwrap();
        let mut partial = SemanticGrid::new_unexplored(6, 6, 0.05, table()).unwrap();
        let seen: BTreeSet<GridCell> = complete.cells().filter(|c| c.col < 2).collect();
        partial.reveal_from(&complete, &seen).unwrap();

        let frontiers = extract_frontiers(&partial);
        let comps = unexplored_components(&partial, &complete).unwrap();
        assert_eq!(frontiers.len(), 1);
        assert_eq!(comps.len(), 1);
        let assoc = associate_components(&frontiers, &comps, 6, 6);
        assert_eq!(assoc[&frontiers[0].id], vec![comps[0].id]);
    }

    #[test]
    fn frontier_with_no_component_maps_to_empty_list() {
        // Explore everything except a single obstacle pocket: the remaining
        // unexplored cell is an obstacle in the complete map, so there is no
        // component even though a frontier-like boundary exists.
        let mut complete: SemanticGrid = SemanticGrid::new_explored_free(4, 4, 0.05, table()).unwrap();
        complete.set_obstacle(cell(1, 1), true);
        let mut partial = SemanticGrid::new_unexplored(4, 4, 0.05, table()).unwrap();
        let seen: BTreeSet<GridCell> = complete.cells().filter(|&c| c != cell(1, 1)).collect();
        partial.reveal_from(&complete, &seen).unwrap();

        let frontiers = extract_frontiers(&partial);
        let comps = unexplored_components(&partial, &complete).unwrap();
        assert!(comps.is_empty());
        assert_eq!(frontiers.len(), 1);
        let assoc = associate_components(&frontiers, &comps, 4, 4);
        assert!(assoc[&frontiers[0].id].is_empty());
    }

    #[test]
    fn reveal_is_monotone_and_idempotent() {
        let complete = walled_room();
        let partial: SemanticGrid = SemanticGrid::new_unexplored(8, 8, 0.05, table()).unwrap();
        let cells: BTreeSet<GridCell> = [cell(1, 1), cell(1, 2), cell(0, 0)].into_iter().collect();
        let once = reveal(&partial, &complete, &cells).unwrap();
        assert_eq!(once.count_explored(), 3);
        assert!(once.is_obstacle(cell(0, 0)));
        assert!(once.is_free(cell(1, 1)));
        let twice = reveal(&once, &complete, &cells).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn reveal_all_cells_sets_complete_flag() {
        let complete = walled_room();
        let partial: SemanticGrid = SemanticGrid::new_unexplored(8, 8, 0.05, table()).unwrap();
        let all: BTreeSet<GridCell> = complete.cells().collect();
        let full = reveal(&partial, &complete, &all).unwrap();
        assert!(full.is_complete());
        assert_eq!(full, {
            let mut c = complete.clone();
            c.force_complete_flag(true);
            c
        });
    }

    #[test]
    fn reveal_out_of_bounds_is_an_error() {
        let complete = walled_room();
        let partial: SemanticGrid = SemanticGrid::new_unexplored(8, 8, 0.05, table()).unwrap();
        let cells: BTreeSet<GridCell> = [cell(9, 0)].into_iter().collect();
        assert!(matches!(
            reveal(&partial, &complete, &cells),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn reveal_shape_mismatch_is_an_error() {
        let complete = walled_room();
        let partial: SemanticGrid = SemanticGrid::new_unexplored(4, 8, 0.05, table()).unwrap();
        assert!(matches!(
            reveal(&partial, &complete, &BTreeSet::new()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn dilate_radius_one_is_eight_neighborhood() {
        let mut mask = vec![false; 25];
        mask[12] = true; // center of 5x5
        let out = dilate(&mask, 5, 5, 1);
        let on: Vec<usize> = out
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(on, vec![6, 7, 8, 11, 12, 13, 16, 17, 18]);
        assert_eq!(dilate(&mask, 5, 5, 0), mask);
    }
}
