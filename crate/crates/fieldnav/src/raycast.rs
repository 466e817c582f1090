//! Grid ray traversal (Amanatides-Woo) for visibility sweeps.
//!
//! Rays start at a cell center, walk the exact sequence of cells the segment
//! passes through, and stop at the first obstacle of the reference map (the
//! obstacle itself is still reported: agents see the wall that blocks them).

use crate::grid::{GridCell, SemanticGrid};
use crate::scalar::Scalar;

/// Walks one ray and feeds every touched cell to `visit` (including the
/// terminating obstacle). `heading_rad` follows the map convention: 0 points
/// along +col, angles grow counter-clockwise (towards -row). `range_m` caps
/// the traversal length.
pub fn cast_ray<F: Scalar>(
    map: &SemanticGrid<F>,
    origin: GridCell,
    heading_rad: f64,
    range_m: F,
    mut visit: impl FnMut(GridCell),
) {
    let res = map.resolution().to_f64().expect("finite resolution");
    let range_cells = range_m.to_f64().expect("finite range") / res;
    if range_cells <= 0.0 || !map.in_bounds(origin) {
        return;
    }
    let dx = heading_rad.cos();
    let dy = -heading_rad.sin(); // +row is downwards
    // Position in cell units, origin at the cell center.
    let (x, y) = (origin.col as f64 + 0.5, origin.row as f64 + 0.5);
    let (mut col, mut row) = (origin.col as i64, origin.row as i64);

    let step_c: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_r: i64 = if dy > 0.0 { 1 } else { -1 };
    // Parameter t measured in cell units along the ray.
    let inv_dx = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let inv_dy = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut t_max_c = if dx > 0.0 {
        (col as f64 + 1.0 - x) / dx
    } else if dx < 0.0 {
        (x - col as f64) / -dx
    } else {
        f64::INFINITY
    };
    let mut t_max_r = if dy > 0.0 {
        (row as f64 + 1.0 - y) / dy
    } else if dy < 0.0 {
        (y - row as f64) / -dy
    } else {
        f64::INFINITY
    };

    let mut t;
    loop {
        let cell = GridCell {
            row: row as usize,
            col: col as usize,
        };
        visit(cell);
        if map.is_obstacle(cell) && cell != origin {
            return;
        }
        // Advance to the next cell boundary.
        if t_max_c < t_max_r {
            t = t_max_c;
            t_max_c += inv_dx;
            col += step_c;
        } else {
            t = t_max_r;
            t_max_r += inv_dy;
            row += step_r;
        }
        if t > range_cells {
            return;
        }
        if row < 0 || col < 0 || row as usize >= map.height() || col as usize >= map.width() {
            return;
        }
    }
}

/// Sweeps `rays` rays evenly across `fov_rad` centered on `heading_rad` and
/// collects every visible cell into `visit`. A full-circle sweep spaces rays
/// over the whole period instead of doubling the boundary ray.
pub fn sweep<F: Scalar>(
    map: &SemanticGrid<F>,
    origin: GridCell,
    heading_rad: f64,
    fov_rad: f64,
    range_m: F,
    rays: usize,
    mut visit: impl FnMut(GridCell),
) {
    if rays == 0 {
        return;
    }
    visit(origin);
    let full_circle = fov_rad >= std::f64::consts::TAU - 1e-9;
    for i in 0..rays {
        let frac = if rays == 1 {
            0.5
        } else if full_circle {
            i as f64 / rays as f64
        } else {
            i as f64 / (rays - 1) as f64
        };
        let angle = heading_rad - fov_rad / 2.0 + fov_rad * frac;
        cast_ray(map, origin, angle, range_m, &mut visit);
    }
}
