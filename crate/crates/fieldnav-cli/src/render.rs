//! Top-down map rendering.
//!
//! Maps render with a fixed palette (reproducible images): gray unexplored,
//! near-white free space, near-black walls, yellow frontier cells, and a
//! static per-category color table for objects. Potential overlays blend
//! each cell toward pure red proportionally to its value, so an all-zero
//! field renders identically to no overlay. Trajectory overlays draw the
//! visited cells as a polyline of blue cells with green start and magenta
//! stop markers painted on top.

use std::str::FromStr;

use fieldnav::grid::{extract_frontiers, GridCell, SemanticGrid};
use fieldnav::potentials::PotentialField;
use fieldnav::sim::Pose;
use image::{Rgb, RgbImage};

/// What to draw on top of the base map.
#[derive(Clone, Debug, PartialEq)]
pub enum Overlay {
    None,
    /// Area potential of the map (against a complete reference).
    PfArea,
    /// Object potential for one goal category, by name.
    PfObject(String),
    /// One episode's trajectory out of an evaluation report.
    Trajectory { report: String, episode: usize },
}

impl FromStr for Overlay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(Overlay::None);
        }
        if s == "pf:area" {
            return Ok(Overlay::PfArea);
        }
        if let Some(cat) = s.strip_prefix("pf:object:") {
            if cat.is_empty() {
                return Err("pf:object overlay needs a category name: pf:object:<cat>".into());
            }
            return Ok(Overlay::PfObject(cat.to_string()));
        }
        if let Some(rest) = s.strip_prefix("trajectory:") {
            // The report path may itself contain commas; the episode index
            // is whatever follows the last one.
            let (report, episode) = rest
                .rsplit_once(',')
                .ok_or("trajectory overlay needs an episode id: trajectory:<report>,<episode>")?;
            if report.is_empty() {
                return Err(
                    "trajectory overlay needs a report path: trajectory:<report>,<episode>".into(),
                );
            }
            let episode: usize = episode.parse().map_err(|_| {
                format!("trajectory episode id must be a non-negative integer, got '{episode}'")
            })?;
            return Ok(Overlay::Trajectory {
                report: report.to_string(),
                episode,
            });
        }
        Err(format!(
            "unknown overlay '{s}' (expected none, pf:area, pf:object:<cat> or \
             trajectory:<report>,<episode>)"
        ))
    }
}

pub const UNEXPLORED: Rgb<u8> = Rgb([90, 90, 90]);
pub const FREE: Rgb<u8> = Rgb([236, 236, 236]);
pub const OBSTACLE: Rgb<u8> = Rgb([40, 40, 40]);
pub const FRONTIER: Rgb<u8> = Rgb([255, 214, 0]);
pub const PF_RED: Rgb<u8> = Rgb([220, 0, 0]);
pub const TRAJECTORY: Rgb<u8> = Rgb([30, 80, 220]);
pub const START_MARK: Rgb<u8> = Rgb([0, 170, 0]);
pub const STOP_MARK: Rgb<u8> = Rgb([200, 0, 120]);

/// Static category palette; category id indexes it modulo the length.
pub const CATEGORY_COLORS: [Rgb<u8>; 12] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
    Rgb([148, 103, 189]),
    Rgb([140, 86, 75]),
    Rgb([227, 119, 194]),
    Rgb([127, 127, 127]),
    Rgb([188, 189, 34]),
    Rgb([23, 190, 207]),
    Rgb([174, 199, 232]),
    Rgb([255, 187, 120]),
];

fn lerp(a: Rgb<u8>, b: Rgb<u8>, t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0);
    let mix = |x: u8, y: u8| (f64::from(x) + (f64::from(y) - f64::from(x)) * t).round() as u8;
    Rgb([mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])])
}

fn base_color(map: &SemanticGrid, frontier: &[bool], c: GridCell) -> Rgb<u8> {
    if !map.is_explored(c) {
        return UNEXPLORED;
    }
    if let Some(id) = map.object_at(c) {
        return CATEGORY_COLORS[id.0 as usize % CATEGORY_COLORS.len()];
    }
    if frontier[c.row * map.width() + c.col] {
        return FRONTIER;
    }
    if map.is_obstacle(c) {
        OBSTACLE
    } else {
        FREE
    }
}

fn paint_cell(img: &mut RgbImage, c: GridCell, scale: u32, color: Rgb<u8>) {
    for dy in 0..scale {
        for dx in 0..scale {
            img.put_pixel(c.col as u32 * scale + dx, c.row as u32 * scale + dy, color);
        }
    }
}

/// Marker block: the cell plus its in-bounds 8 neighbors.
fn paint_marker(img: &mut RgbImage, map: &SemanticGrid, c: GridCell, scale: u32, color: Rgb<u8>) {
    paint_cell(img, c, scale, color);
    for nb in map.neighbors8(c) {
        paint_cell(img, nb, scale, color);
    }
}

/// Renders the base map: category colors, frontier cells highlighted.
pub fn render_base(map: &SemanticGrid, scale: u32) -> RgbImage {
    let mut frontier = vec![false; map.len()];
    for f in extract_frontiers(map) {
        for c in f.cells {
            frontier[c.row * map.width() + c.col] = true;
        }
    }
    let mut img = RgbImage::new(map.width() as u32 * scale, map.height() as u32 * scale);
    for c in map.cells() {
        paint_cell(&mut img, c, scale, base_color(map, &frontier, c));
    }
    img
}

/// Blends a potential field over the base image as red intensity.
pub fn overlay_field(img: &mut RgbImage, map: &SemanticGrid, field: &PotentialField, scale: u32) {
    for c in map.cells() {
        let v = field.get(c);
        if v > 0.0 {
            let base = *img.get_pixel(c.col as u32 * scale, c.row as u32 * scale);
            paint_cell(img, c, scale, lerp(base, PF_RED, v));
        }
    }
}

/// Draws a trajectory: every visited cell in blue, then start and stop
/// markers on top.
pub fn overlay_trajectory(img: &mut RgbImage, map: &SemanticGrid, trajectory: &[Pose], scale: u32) {
    for pose in trajectory {
        paint_cell(img, pose.cell, scale, TRAJECTORY);
    }
    if let Some(first) = trajectory.first() {
        paint_marker(img, map, first.cell, scale, START_MARK);
    }
    if let Some(last) = trajectory.last() {
        if trajectory.len() > 1 {
            paint_marker(img, map, last.cell, scale, STOP_MARK);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_tokens_parse() {
        assert_eq!(Overlay::from_str("none").unwrap(), Overlay::None);
        assert_eq!(Overlay::from_str("pf:area").unwrap(), Overlay::PfArea);
        assert_eq!(
            Overlay::from_str("pf:object:chair").unwrap(),
            Overlay::PfObject("chair".into())
        );
        assert_eq!(
            Overlay::from_str("trajectory:out/report.json,3").unwrap(),
            Overlay::Trajectory {
                report: "out/report.json".into(),
                episode: 3
            }
        );
    }

    #[test]
    fn malformed_overlay_tokens_error() {
        assert!(Overlay::from_str("pf:object:").is_err());
        assert!(Overlay::from_str("trajectory:report.json").is_err(), "missing episode id");
        assert!(Overlay::from_str("trajectory:,3").is_err());
        assert!(Overlay::from_str("trajectory:r.json,three").is_err());
        assert!(Overlay::from_str("heatmap").is_err());
    }

    #[test]
    fn zero_blend_is_identity() {
        let navy = Rgb([10, 20, 30]);
        assert_eq!(lerp(navy, PF_RED, 0.0), navy);
        assert_eq!(lerp(navy, PF_RED, 1.0), PF_RED);
    }
}
