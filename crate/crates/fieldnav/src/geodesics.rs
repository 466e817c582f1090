//! Geodesic distance fields over grids, plus greedy path extraction.
//!
//! Two solvers share one interface: an 8-connected Dijkstra with octile step
//! costs (exact on the grid graph, used wherever tests demand bitwise
//! reproducibility) and a first-order upwind fast-marching solver for the
//! unit-speed eikonal equation (smoother fields, 4-neighbor stencil).
//! Distances are in meters; untraversable or unreachable cells carry
//! [`DistanceField::UNREACHABLE`].

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{GridCell, SemanticGrid, OFFSETS_4, OFFSETS_8};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldMode {
    DijkstraOctile,
    FmmUpwind,
}

/// Distances from a source set, aligned with the grid it was computed on.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField<F: Scalar = f64> {
    width: usize,
    height: usize,
    resolution: F,
    dist: Vec<F>,
}

impl<F: Scalar> DistanceField<F> {
    /// Sentinel for cells no path reaches; compares greater than any distance.
    pub fn unreachable() -> F {
        F::infinity()
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

    #[inline]
    pub fn idx(&self, c: GridCell) -> usize {
        debug_assert!(c.row < self.height && c.col < self.width);
        c.row * self.width + c.col
    }

    #[inline]
    pub fn get(&self, c: GridCell) -> F {
        self.dist[self.idx(c)]
    }

    #[inline]
    pub fn is_reachable(&self, c: GridCell) -> bool {
        self.get(c).is_finite()
    }

    pub fn values(&self) -> &[F] {
        &self.dist
    }

    pub fn in_bounds(&self, c: GridCell) -> bool {
        c.row < self.height && c.col < self.width
    }
}

/// Min-heap entry; ties resolved by cell index so pop order is total.
struct HeapEntry<F> {
    dist: F,
    idx: usize,
}

impl<F: Scalar> PartialEq for HeapEntry<F> {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.idx == other.idx
    }
}
impl<F: Scalar> Eq for HeapEntry<F> {}
impl<F: Scalar> Ord for HeapEntry<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want smallest dist first.
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("distances are never NaN")
            .then_with(|| other.idx.cmp(&self.idx))
    }
}
impl<F: Scalar> PartialOrd for HeapEntry<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_sources<F: Scalar>(
    grid: &SemanticGrid<F>,
    sources: &BTreeSet<GridCell>,
    traversable: &impl Fn(GridCell) -> bool,
) -> Result<()> {
    if sources.is_empty() {
        return Err(Error::invalid("distance_field requires at least one source"));
    }
    for &s in sources {
        grid.check_bounds(s)?;
        if !traversable(s) {
            return Err(Error::invalid(format!(
                "source cell ({}, {}) is not traversable",
                s.row, s.col
            )));
        }
    }
    Ok(())
}

/// Multi-source distance field on `grid` restricted to `traversable` cells.
///
/// Octile mode: axial steps cost `resolution`, diagonal steps
/// `resolution * sqrt(2)`, and a diagonal move is forbidden when either of
/// its two adjacent axial cells is untraversable (no corner cutting).
/// FMM mode solves the unit-speed eikonal equation on the 4-neighbor stencil.
pub fn distance_field<F: Scalar>(
    grid: &SemanticGrid<F>,
    sources: &BTreeSet<GridCell>,
    traversable: impl Fn(GridCell) -> bool,
    mode: FieldMode,
) -> Result<DistanceField<F>> {
    check_sources(grid, sources, &traversable)?;
    match mode {
        FieldMode::DijkstraOctile => Ok(dijkstra_octile(grid, sources, traversable)),
        FieldMode::FmmUpwind => Ok(fmm_upwind(grid, sources, traversable)),
    }
}

fn dijkstra_octile<F: Scalar>(
    grid: &SemanticGrid<F>,
    sources: &BTreeSet<GridCell>,
    traversable: impl Fn(GridCell) -> bool,
) -> DistanceField<F> {
    let (w, h) = (grid.width(), grid.height());
    let res = grid.resolution();
    let diag = res * F::sqrt_two();
    let mut dist = vec![F::infinity(); w * h];
    let mut settled = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        let i = grid.idx(s);
        dist[i] = F::zero();
        heap.push(HeapEntry { dist: F::zero(), idx: i });
    }
    while let Some(HeapEntry { dist: d, idx }) = heap.pop() {
        if settled[idx] {
            continue;
        }
        settled[idx] = true;
        let c = GridCell {
            row: idx / w,
            col: idx % w,
        };
        for &(dr, dc) in &OFFSETS_8 {
            let r = c.row as i64 + dr as i64;
            let k = c.col as i64 + dc as i64;
            if r < 0 || k < 0 || r as usize >= h || k as usize >= w {
                continue;
            }
            let nb = GridCell {
                row: r as usize,
                col: k as usize,
            };
            if !traversable(nb) {
                continue;
            }
            let step = if dr != 0 && dc != 0 {
                // Both axial cells flanking the diagonal must be open.
                let a = GridCell { row: c.row, col: nb.col };
                let b = GridCell { row: nb.row, col: c.col };
                if !traversable(a) || !traversable(b) {
                    continue;
                }
                diag
            } else {
                res
            };
            let nd = d + step;
            let ni = grid.idx(nb);
            if nd < dist[ni] {
                dist[ni] = nd;
                heap.push(HeapEntry { dist: nd, idx: ni });
            }
        }
    }
    DistanceField {
        width: w,
        height: h,
        resolution: res,
        dist,
    }
}

fn fmm_upwind<F: Scalar>(
    grid: &SemanticGrid<F>,
    sources: &BTreeSet<GridCell>,
    traversable: impl Fn(GridCell) -> bool,
) -> DistanceField<F> {
    let (w, h) = (grid.width(), grid.height());
    let res = grid.resolution();
    let mut dist = vec![F::infinity(); w * h];
    let mut frozen = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        let i = grid.idx(s);
        dist[i] = F::zero();
        heap.push(HeapEntry { dist: F::zero(), idx: i });
    }
    // Upwind quadratic update from the smaller value on each axis.
    let solve = |a: F, b: F| -> F {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !lo.is_finite() {
            return F::infinity();
        }
        if !hi.is_finite() || hi - lo >= res {
            lo + res
        } else {
            let diff = hi - lo;
            let two = F::c(2.0);
            (lo + hi + (two * res * res - diff * diff).sqrt()) / two
        }
    };
    while let Some(HeapEntry { dist: d, idx }) = heap.pop() {
        if frozen[idx] || d > dist[idx] {
            continue;
        }
        frozen[idx] = true;
        let c = GridCell {
            row: idx / w,
            col: idx % w,
        };
        for &(dr, dc) in &OFFSETS_4 {
            let r = c.row as i64 + dr as i64;
            let k = c.col as i64 + dc as i64;
            if r < 0 || k < 0 || r as usize >= h || k as usize >= w {
                continue;
            }
            let nb = GridCell {
                row: r as usize,
                col: k as usize,
            };
            let ni = grid.idx(nb);
            if frozen[ni] || !traversable(nb) {
                continue;
            }
            let axis = |cell: Option<GridCell>| -> F {
                match cell {
                    Some(cc) if traversable(cc) => dist[grid.idx(cc)],
                    _ => F::infinity(),
                }
            };
            let at = |rr: i64, kk: i64| -> Option<GridCell> {
                if rr >= 0 && kk >= 0 && (rr as usize) < h && (kk as usize) < w {
                    Some(GridCell {
                        row: rr as usize,
                        col: kk as usize,
                    })
                } else {
                    None
                }
            };
            let horiz = axis(at(r, k - 1)).min(axis(at(r, k + 1)));
            let vert = axis(at(r - 1, k)).min(axis(at(r + 1, k)));
            let nd = solve(horiz, vert);
            if nd < dist[ni] {
                dist[ni] = nd;
                heap.push(HeapEntry { dist: nd, idx: ni });
            }
        }
    }
    DistanceField {
        width: w,
        height: h,
        resolution: res,
        dist,
    }
}

/// Path of strictly decreasing distance from `start` down to a zero cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPlan<F: Scalar = f64> {
    pub cells: Vec<GridCell>,
    pub length_m: F,
}

/// Greedy descent on `field` from `start` to a source cell.
///
/// At each cell the successor minimizes `dist[n] + step_cost(c, n)` (the
/// relaxation-tight neighbor; on Dijkstra fields this makes the extracted
/// length equal `field.get(start)` exactly), with remaining ties broken by
/// smaller `dist[n]`, then smallest (row, col). Diagonal steps obey the same
/// corner rule as the solver. Returns a no-path error when `start` is
/// unreachable or out of bounds.
pub fn shortest_path<F: Scalar>(field: &DistanceField<F>, start: GridCell) -> Result<PathPlan<F>> {
    if !field.in_bounds(start) {
        return Err(Error::OutOfBounds {
            row: start.row,
            col: start.col,
            width: field.width,
            height: field.height,
        });
    }
    if !field.is_reachable(start) {
        return Err(Error::NoPath { start });
    }
    let res = field.resolution;
    let diag = res * F::sqrt_two();
    let mut cells = vec![start];
    let mut steps: Vec<F> = Vec::new();
    let mut cur = start;
    let limit = field.width * field.height + 1;
    for _ in 0..limit {
        let d_cur = field.get(cur);
        if d_cur == F::zero() {
            // Sum step costs from the source side; this reproduces the exact
            // association order of the solver's relaxations, so on Dijkstra
            // fields the length equals field.get(start) bitwise.
            let length = steps.iter().rev().fold(F::zero(), |acc, &s| acc + s);
            return Ok(PathPlan { cells, length_m: length });
        }
        // (dist + step, dist, row, col) minimization over admissible moves.
        let mut best: Option<(F, F, GridCell, F)> = None;
        for &(dr, dc) in &OFFSETS_8 {
            let r = cur.row as i64 + dr as i64;
            let k = cur.col as i64 + dc as i64;
            if r < 0 || k < 0 || r as usize >= field.height || k as usize >= field.width {
                continue;
            }
            let nb = GridCell {
                row: r as usize,
                col: k as usize,
            };
            let d_nb = field.get(nb);
            if !(d_nb < d_cur) {
                continue;
            }
            let step = if dr != 0 && dc != 0 {
                let a = GridCell { row: cur.row, col: nb.col };
                let b = GridCell { row: nb.row, col: cur.col };
                if !field.is_reachable(a) || !field.is_reachable(b) {
                    continue;
                }
                diag
            } else {
                res
            };
            let key = d_nb + step;
            let better = match &best {
                None => true,
                Some((bk, bd, bc, _)) => {
                    (key, d_nb, nb.row, nb.col) < (*bk, *bd, bc.row, bc.col)
                }
            };
            if better {
                best = Some((key, d_nb, nb, step));
            }
        }
        match best {
            Some((_, _, nb, step)) => {
                steps.push(step);
                cells.push(nb);
                cur = nb;
            }
            // A reachable non-source cell always has a lower neighbor on
            // fields produced by this module; bail out defensively otherwise.
            None => return Err(Error::NoPath { start }),
        }
    }
    Err(Error::NoPath { start })
}

/// Distance-to-success-zone field for `category` on a complete map.
///
/// Stage one spreads geodesically outward from every cell holding the
/// category (object cells act as zero-distance seeds; free cells carry the
/// spread). Free cells within `d_s` meters form the success zone. Stage two
/// returns the octile distance field whose sources are exactly that zone, so
/// zone members read 0 and every other free cell reads its geodesic distance
/// to the zone. A category absent from the map yields an all-unreachable
/// field.
pub fn success_zone_distance<F: Scalar>(
    complete: &SemanticGrid<F>,
    category: crate::grid::CategoryId,
    d_s: F,
) -> Result<DistanceField<F>> {
    if !complete.is_complete() {
        return Err(Error::invalid(
            "success_zone_distance requires a complete map",
        ));
    }
    if !complete.categories().contains(category) {
        return Err(Error::UnknownCategory(category.0));
    }
    if !(d_s >= F::zero()) {
        return Err(Error::invalid(format!("d_s must be non-negative, got {d_s}")));
    }
    let object_cells: BTreeSet<GridCell> = complete
        .cells()
        .filter(|&c| complete.object_at(c) == Some(category))
        .collect();
    let (w, h) = (complete.width(), complete.height());
    if object_cells.is_empty() {
        return Ok(DistanceField {
            width: w,
            height: h,
            resolution: complete.resolution(),
            dist: vec![F::infinity(); w * h],
        });
    }
    // Stage 1: geodesic spread from the object cells themselves.
    let is_seed = |c: GridCell| complete.object_at(c) == Some(category);
    let spread = dijkstra_octile(complete, &object_cells, |c| {
        complete.is_free(c) || is_seed(c)
    });
    let zone: BTreeSet<GridCell> = complete
        .cells()
        .filter(|&c| complete.is_free(c) && spread.get(c) <= d_s)
        .collect();
    if zone.is_empty() {
        // Category present but sealed off from all free space.
        return Ok(DistanceField {
            width: w,
            height: h,
            resolution: complete.resolution(),
            dist: vec![F::infinity(); w * h],
        });
    }
    // Stage 2: distance to the zone over free space.
    Ok(dijkstra_octile(complete, &zone, |c| complete.is_free(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cell, CategoryTable};

    fn open_grid(w: usize, h: usize) -> SemanticGrid {
        SemanticGrid::new_explored_free(w, h, 0.05, CategoryTable::default_indoor()).unwrap()
    }

    fn field_on(
        g: &SemanticGrid,
        sources: &[GridCell],
        mode: FieldMode,
    ) -> DistanceField {
        let src: BTreeSet<GridCell> = sources.iter().copied().collect();
        distance_field(g, &src, |c| g.is_free(c), mode).unwrap()
    }

    #[test]
    fn source_cell_reads_zero_and_axial_neighbor_one_step() {
        let g = open_grid(10, 10);
        let f = field_on(&g, &[cell(5, 5)], FieldMode::DijkstraOctile);
        assert_eq!(f.get(cell(5, 5)), 0.0);
        assert_eq!(f.get(cell(5, 6)), 0.05);
        assert_eq!(f.get(cell(4, 5)), 0.05);
        assert_eq!(f.get(cell(4, 4)), 0.05 * std::f64::consts::SQRT_2);
    }

    #[test]
    fn octile_distance_formula_on_open_grid() {
        let g = open_grid(20, 20);
        let f = field_on(&g, &[cell(0, 0)], FieldMode::DijkstraOctile);
        // (3, 7): 4 axial + 3 diagonal steps.
        let expect = 4.0 * 0.05 + 3.0 * 0.05 * std::f64::consts::SQRT_2;
        assert!((f.get(cell(3, 7)) - expect).abs() < 1e-12);
    }

    #[test]
    fn wall_with_gap_routes_through_the_gap() {
        // Vertical wall at col 5 except row 8: going from (1,1) to (1,9)
        // must detour through (8,5).
        let mut g = open_grid(12, 12);
        for row in 0..12 {
            if row != 8 {
                g.set_obstacle(cell(row, 5), true);
            }
        }
        let f = field_on(&g, &[cell(1, 1)], FieldMode::DijkstraOctile);
        let direct = f.get(cell(1, 9));
        assert!(f.is_reachable(cell(1, 9)));
        // Must be far longer than the euclidean 8 columns.
        assert!(direct > 0.05 * 14.0, "detour length {direct}");
        let path = shortest_path(&f, cell(1, 9)).unwrap();
        assert!(path.cells.iter().any(|c| c.row == 8));
    }

    #[test]
    fn unreachable_pocket_is_marked() {
        let mut g = open_grid(8, 8);
        // Seal off (0,0) corner with an L of obstacles.
        g.set_obstacle(cell(0, 1), true);
        g.set_obstacle(cell(1, 1), true);
        g.set_obstacle(cell(1, 0), true);
        let f = field_on(&g, &[cell(5, 5)], FieldMode::DijkstraOctile);
        assert!(!f.is_reachable(cell(0, 0)));
        assert!(shortest_path(&f, cell(0, 0)).is_err());
    }

    #[test]
    fn no_corner_cutting_between_diagonal_obstacles() {
        // Two obstacles meeting at a corner: (1,2) and (2,1). Moving from
        // (2,2) to (1,1) diagonally would cut the corner, so the solver must
        // route around and the descent must obey it too.
        let mut g = open_grid(6, 6);
        g.set_obstacle(cell(1, 2), true);
        g.set_obstacle(cell(2, 1), true);
        let f = field_on(&g, &[cell(2, 2)], FieldMode::DijkstraOctile);
        let d = f.get(cell(1, 1));
        // The single diagonal step is illegal, so the route must be longer.
        assert!(d > 0.05 * std::f64::consts::SQRT_2 + 1e-12);
        let p = shortest_path(&f, cell(1, 1)).unwrap();
        for pair in p.cells.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.row != b.row && a.col != b.col {
                assert!(g.is_free(cell(a.row, b.col)));
                assert!(g.is_free(cell(b.row, a.col)));
            }
        }
    }

    #[test]
    fn empty_sources_and_blocked_sources_error() {
        let mut g = open_grid(5, 5);
        g.set_obstacle(cell(2, 2), true);
        let empty = BTreeSet::new();
        assert!(distance_field(&g, &empty, |c| g.is_free(c), FieldMode::DijkstraOctile).is_err());
        let src: BTreeSet<GridCell> = [cell(2, 2)].into_iter().collect();
        assert!(distance_field(&g, &src, |c| g.is_free(c), FieldMode::DijkstraOctile).is_err());
    }

    #[test]
    fn multi_source_takes_pointwise_minimum() {
        let g = open_grid(12, 12);
        let both = field_on(&g, &[cell(0, 0), cell(11, 11)], FieldMode::DijkstraOctile);
        let a = field_on(&g, &[cell(0, 0)], FieldMode::DijkstraOctile);
        let b = field_on(&g, &[cell(11, 11)], FieldMode::DijkstraOctile);
        for c in g.cells() {
            assert_eq!(both.get(c), a.get(c).min(b.get(c)), "at {c:?}");
        }
    }

    #[test]
    fn descent_path_length_matches_field_value_exactly() {
        let mut g = open_grid(16, 16);
        for row in 2..14 {
            g.set_obstacle(cell(row, 7), true);
        }
        let f = field_on(&g, &[cell(8, 2)], FieldMode::DijkstraOctile);
        for target in [cell(8, 12), cell(0, 15), cell(15, 0), cell(1, 8)] {
            let p = shortest_path(&f, target).unwrap();
            assert_eq!(p.length_m, f.get(target), "target {target:?}");
            assert_eq!(p.cells.first(), Some(&target));
            assert_eq!(f.get(*p.cells.last().unwrap()), 0.0);
            // Strictly decreasing distances along the path.
            for pair in p.cells.windows(2) {
                assert!(f.get(pair[1]) < f.get(pair[0]));
            }
        }
    }

    #[test]
    fn path_from_source_is_single_cell() {
        let g = open_grid(6, 6);
        let f = field_on(&g, &[cell(3, 3)], FieldMode::DijkstraOctile);
        let p = shortest_path(&f, cell(3, 3)).unwrap();
        assert_eq!(p.cells, vec![cell(3, 3)]);
        assert_eq!(p.length_m, 0.0);
    }

    #[test]
    fn fmm_matches_euclidean_on_axes_and_approximates_diagonals() {
        let g = open_grid(30, 30);
        let f = field_on(&g, &[cell(15, 15)], FieldMode::FmmUpwind);
        assert_eq!(f.get(cell(15, 15)), 0.0);
        // Along an axis the upwind solution is exact.
        assert!((f.get(cell(15, 25)) - 0.5).abs() < 1e-9);
        // Diagonal: euclidean is 10*sqrt(2)*0.05 = 0.7071; first-order FMM
        // overestimates slightly but stays within a few percent here.
        let d = f.get(cell(25, 25));
        let euclid = 10.0 * std::f64::consts::SQRT_2 * 0.05;
        assert!(d >= euclid - 1e-9, "{d} vs {euclid}");
        assert!((d - euclid) / euclid < 0.08, "{d} vs {euclid}");
    }

    #[test]
    fn fmm_respects_walls() {
        let mut g = open_grid(12, 12);
        for row in 0..11 {
            g.set_obstacle(cell(row, 6), true);
        }
        let f = field_on(&g, &[cell(0, 0)], FieldMode::FmmUpwind);
        // Right of the wall is reachable only around row 11.
        let d = f.get(cell(0, 11));
        assert!(d.is_finite());
        assert!(d > 0.05 * 20.0, "wall detour not respected: {d}");
        for row in 0..11 {
            assert!(!f.is_reachable(cell(row, 6)));
        }
    }

    #[test]
    fn success_zone_zero_inside_zone_and_grows_outside() {
        // Toilet at (4,1) against the wall of a 9-wide corridor map split by
        // a doorway; d_s of 0.1 m = 2 cells.
        let mut g = open_grid(9, 9);
        for row in 0..9 {
            if row != 4 {
                g.set_obstacle(cell(row, 4), true);
            }
        }
        let toilet = g.categories().id_of("toilet").unwrap();
        g.set_object(cell(4, 1), toilet).unwrap();
        let f = success_zone_distance(&g, toilet, 0.1).unwrap();
        // Zone: free cells within 0.1m geodesic of the toilet cell.
        assert_eq!(f.get(cell(4, 2)), 0.0);
        assert_eq!(f.get(cell(4, 3)), 0.0);
        assert_eq!(f.get(cell(3, 1)), 0.0);
        // The object cell itself is an obstacle, not part of the field.
        assert!(!f.is_reachable(cell(4, 1)));
        // Across the doorway the distance matches a Dijkstra from the zone.
        assert!(f.get(cell(4, 8)) > 0.0);
        assert!(f.is_reachable(cell(0, 8)));
    }

    #[test]
    fn success_zone_absent_category_is_all_unreachable() {
        let g = open_grid(6, 6);
        let bed = g.categories().id_of("bed").unwrap();
        let f = success_zone_distance(&g, bed, 1.0).unwrap();
        assert!(g.cells().all(|c| !f.is_reachable(c)));
    }

    #[test]
    fn success_zone_unknown_category_errors() {
        let g = open_grid(6, 6);
        assert!(success_zone_distance(&g, crate::grid::CategoryId(99), 1.0).is_err());
    }

    #[test]
    fn triangle_consistency_octile() {
        let mut g = open_grid(14, 14);
        for col in 3..11 {
            g.set_obstacle(cell(7, col), true);
        }
        let f = field_on(&g, &[cell(2, 2)], FieldMode::DijkstraOctile);
        let res = 0.05;
        let diag = res * std::f64::consts::SQRT_2;
        for c in g.cells() {
            if !f.is_reachable(c) {
                continue;
            }
            for nb in g.neighbors8(c) {
                if !f.is_reachable(nb) {
                    continue;
                }
                let step = if nb.row != c.row && nb.col != c.col {
                    if !g.is_free(cell(c.row, nb.col)) || !g.is_free(cell(nb.row, c.col)) {
                        continue;
                    }
                    diag
                } else {
                    res
                };
                assert!(
                    f.get(c) <= f.get(nb) + step + 1e-12,
                    "triangle violated at {c:?} -> {nb:?}"
                );
            }
        }
    }
}
