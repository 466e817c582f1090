//! Naive reference implementations used to cross-check `fieldnav` in tests.
//!
//! Everything in this crate trades speed for obviousness: definition-level
//! scans, fixpoint relaxation instead of priority queues, brute-force pairwise
//! adjacency. Tests compare these oracles against the optimized
//! implementations in the main crate — several of those comparisons are
//! bitwise, which works because both sides compute the same mathematical
//! quantity with the same elementary float operations (see the notes on
//! [`octile_fixpoint`]).
//!
//! All oracles are `f64` only; the main crate's generic scalar machinery is
//! deliberately not exercised here.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use fieldnav::grid::{CategoryId, GridCell, SemanticGrid};
use fieldnav::potentials::{AreaNormalizer, PotentialParams};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Frontier cells by definition: explored, free, and at least one of the up
/// to eight surrounding cells is unexplored.
pub fn frontier_cells(grid: &SemanticGrid) -> BTreeSet<GridCell> {
    let mut out = BTreeSet::new();
    for c in grid.cells() {
        if !grid.is_explored(c) || grid.is_obstacle(c) {
            continue;
        }
        if grid.neighbors8(c).any(|nb| !grid.is_explored(nb)) {
            out.insert(c);
        }
    }
    out
}

fn chebyshev_adjacent(a: GridCell, b: GridCell) -> bool {
    let dr = a.row.abs_diff(b.row);
    let dc = a.col.abs_diff(b.col);
    dr <= 1 && dc <= 1 && (dr, dc) != (0, 0)
}

/// Groups a cell set into 8-connected clusters via breadth-first search.
/// Clusters come back ordered by their lexicographically smallest member,
/// which coincides with the main crate's row-major discovery order.
pub fn cluster8(cells: &BTreeSet<GridCell>) -> Vec<BTreeSet<GridCell>> {
    let mut remaining = cells.clone();
    let mut clusters = Vec::new();
    while let Some(&seed) = remaining.iter().next() {
        remaining.remove(&seed);
        let mut cluster = BTreeSet::from([seed]);
        let mut queue = VecDeque::from([seed]);
        while let Some(c) = queue.pop_front() {
            let touching: Vec<GridCell> = remaining
                .iter()
                .copied()
                .filter(|&o| chebyshev_adjacent(c, o))
                .collect();
            for o in touching {
                remaining.remove(&o);
                cluster.insert(o);
                queue.push_back(o);
            }
        }
        clusters.push(cluster);
    }
    clusters
}

/// Frontier clusters of `grid`, ordered like the main crate's frontier ids.
pub fn frontier_clusters(grid: &SemanticGrid) -> Vec<BTreeSet<GridCell>> {
    cluster8(&frontier_cells(grid))
}

/// 8-connected regions of cells unexplored in `partial` and free in
/// `complete`, ordered like the main crate's component ids.
pub fn unexplored_regions(
    partial: &SemanticGrid,
    complete: &SemanticGrid,
) -> Vec<BTreeSet<GridCell>> {
    let cells: BTreeSet<GridCell> = partial
        .cells()
        .filter(|&c| !partial.is_explored(c) && complete.is_free(c))
        .collect();
    cluster8(&cells)
}

/// True when any cell of `a` is 8-adjacent to any cell of `b`.
pub fn sets_adjacent(a: &BTreeSet<GridCell>, b: &BTreeSet<GridCell>) -> bool {
    a.iter()
        .any(|&ca| b.iter().any(|&cb| chebyshev_adjacent(ca, cb)))
}

/// For each cluster (by position in `clusters`), the indices of the regions
/// it touches, in ascending order.
pub fn associate(
    clusters: &[BTreeSet<GridCell>],
    regions: &[BTreeSet<GridCell>],
) -> Vec<Vec<usize>> {
    clusters
        .iter()
        .map(|cl| {
            regions
                .iter()
                .enumerate()
                .filter(|(_, rg)| sets_adjacent(cl, rg))
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

/// Octile distances by Gauss–Seidel relaxation to a fixpoint, `f64::INFINITY`
/// where unreachable. Axial steps cost `res`, diagonal steps `res * sqrt(2)`,
/// and a diagonal move is admissible only when both flanking axial cells are
/// traversable.
///
/// Why this can be compared bitwise against a heap-based solver: with
/// non-negative step costs both algorithms converge to the same fixpoint of
/// the relaxation `d(c) = min over admissible neighbors n of d(n) + step`,
/// and every candidate value in that recurrence is a single IEEE addition of
/// the same two operands on both sides. The fixpoint (distances pinned to 0 at
/// the sources, minimized over source-to-cell step sequences with
/// source-side association) is unique, so the computed vectors agree bit for
/// bit.
pub fn octile_fixpoint(
    width: usize,
    height: usize,
    res: f64,
    sources: &BTreeSet<GridCell>,
    traversable: impl Fn(GridCell) -> bool,
) -> Vec<f64> {
    let diag = res * SQRT_2;
    let mut dist = vec![f64::INFINITY; width * height];
    for &s in sources {
        assert!(s.row < height && s.col < width, "source out of bounds");
        assert!(traversable(s), "source must be traversable");
        dist[s.row * width + s.col] = 0.0;
    }
    let order_fwd: Vec<usize> = (0..width * height).collect();
    let order_bwd: Vec<usize> = order_fwd.iter().rev().copied().collect();
    let mut changed = true;
    while changed {
        changed = false;
        for order in [&order_fwd, &order_bwd] {
            for &i in order {
                let c = GridCell {
                    row: i / width,
                    col: i % width,
                };
                if !traversable(c) || sources.contains(&c) {
                    continue;
                }
                let mut best = dist[i];
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (r, k) = (c.row as i64 + dr, c.col as i64 + dc);
                        if r < 0 || k < 0 || r as usize >= height || k as usize >= width {
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
                            let flank_a = GridCell { row: c.row, col: nb.col };
                            let flank_b = GridCell { row: nb.row, col: c.col };
                            if !traversable(flank_a) || !traversable(flank_b) {
                                continue;
                            }
                            diag
                        } else {
                            res
                        };
                        let cand = dist[nb.row * width + nb.col] + step;
                        if cand < best {
                            best = cand;
                        }
                    }
                }
                if best < dist[i] {
                    dist[i] = best;
                    changed = true;
                }
            }
        }
    }
    dist
}

/// Distance-to-success-zone by the same two stages as the main crate, both
/// run through [`octile_fixpoint`]: spread from the category's object cells
/// over free space (object cells themselves passable as seeds), collect free
/// cells within `d_s`, then measure distance to that zone over free space.
pub fn zone_distance_fixpoint(
    complete: &SemanticGrid,
    category: CategoryId,
    d_s: f64,
) -> Vec<f64> {
    let (w, h) = (complete.width(), complete.height());
    let res = complete.resolution();
    let object_cells: BTreeSet<GridCell> = complete
        .cells()
        .filter(|&c| complete.object_at(c) == Some(category))
        .collect();
    if object_cells.is_empty() {
        return vec![f64::INFINITY; w * h];
    }
    let spread = octile_fixpoint(w, h, res, &object_cells, |c| {
        complete.is_free(c) || complete.object_at(c) == Some(category)
    });
    let zone: BTreeSet<GridCell> = complete
        .cells()
        .filter(|&c| complete.is_free(c) && spread[c.row * w + c.col] <= d_s)
        .collect();
    if zone.is_empty() {
        return vec![f64::INFINITY; w * h];
    }
    octile_fixpoint(w, h, res, &zone, |c| complete.is_free(c))
}

/// Area potential values (row-major), computed from the naive cluster /
/// region / association pieces with the same final arithmetic as the main
/// crate: gated cell count over total free cell count, or gated square meters
/// over a fixed constant clamped to 1.
pub fn area_potential_values(
    partial: &SemanticGrid,
    complete: &SemanticGrid,
    params: &PotentialParams,
) -> Vec<f64> {
    let (w, h) = (partial.width(), partial.height());
    let res = complete.resolution();
    let clusters = frontier_clusters(partial);
    let regions = unexplored_regions(partial, complete);
    let assoc = associate(&clusters, &regions);
    let mut out = vec![0.0; w * h];
    for (cluster, region_ids) in clusters.iter().zip(&assoc) {
        let gated: usize = region_ids.iter().map(|&i| regions[i].len()).sum();
        let value = match params.area_norm {
            AreaNormalizer::TotalFreeSpace => gated as f64 / complete.count_free() as f64,
            AreaNormalizer::FixedConstant(norm) => (gated as f64 * res * res / norm).min(1.0),
        };
        for &c in cluster {
            out[c.row * w + c.col] = value;
        }
    }
    out
}

/// Object potential values (row-major) for `category`:
/// `max(1 - d / d_max, 0)` on frontier cells with finite zone distance `d`
/// from [`zone_distance_fixpoint`], zero everywhere else.
pub fn object_potential_values(
    partial: &SemanticGrid,
    complete: &SemanticGrid,
    category: CategoryId,
    params: &PotentialParams,
) -> Vec<f64> {
    let (w, h) = (partial.width(), partial.height());
    let zone = zone_distance_fixpoint(complete, category, params.success_radius_m);
    let mut out = vec![0.0; w * h];
    for c in frontier_cells(partial) {
        let d = zone[c.row * w + c.col];
        if d.is_finite() {
            out[c.row * w + c.col] = (1.0 - d / params.d_max_m).max(0.0);
        }
    }
    out
}

/// Union of in-bounds Chebyshev squares of radius `radius_cells` stamped on
/// every path cell — the reference for square exploration masks.
pub fn square_stamp_mask(
    width: usize,
    height: usize,
    path: &[GridCell],
    radius_cells: usize,
) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    let r = radius_cells as i64;
    for &p in path {
        for dr in -r..=r {
            for dc in -r..=r {
                let (row, col) = (p.row as i64 + dr, p.col as i64 + dc);
                if row >= 0 && col >= 0 && (row as usize) < height && (col as usize) < width {
                    mask[row as usize * width + col as usize] = true;
                }
            }
        }
    }
    mask
}

/// Cheap sampled line-of-sight probe between cell centers: steps along the
/// segment at a tenth of a cell and reports false when any intermediate cell
/// (not `a`, not `b`) is an obstacle. Coarse by construction — use it for
/// "the wall blocks this" assertions, not for exact visibility sets.
pub fn line_of_sight(map: &SemanticGrid, a: GridCell, b: GridCell) -> bool {
    let (ax, ay) = (a.col as f64 + 0.5, a.row as f64 + 0.5);
    let (bx, by) = (b.col as f64 + 0.5, b.row as f64 + 0.5);
    let dist = ((bx - ax).powi(2) + (by - ay).powi(2)).sqrt();
    let steps = (dist * 10.0).ceil() as usize;
    for i in 0..=steps {
        let t = if steps == 0 { 0.0 } else { i as f64 / steps as f64 };
        let (x, y) = (ax + (bx - ax) * t, ay + (by - ay) * t);
        let c = GridCell {
            row: y.floor() as usize,
            col: x.floor() as usize,
        };
        if c != a && c != b && map.in_bounds(c) && map.is_obstacle(c) {
            return false;
        }
    }
    true
}

/// Panics with the first differing index unless `a` and `b` agree bit for
/// bit (infinities included; NaN never compares equal and never appears in
/// the fields under test).
pub fn assert_bits_eq(label: &str, a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len(), "{label}: length mismatch");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!(
            x.to_bits() == y.to_bits(),
            "{label}: index {i} differs: {x:?} ({:#x}) vs {y:?} ({:#x})",
            x.to_bits(),
            y.to_bits()
        );
    }
}
