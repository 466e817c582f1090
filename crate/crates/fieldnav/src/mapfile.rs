//! Text container for semantic grids.
//!
//! Layout (version 1):
//!
//! ```text
//! semgrid 1
//! size <width> <height>
//! resolution <float>
//! complete <0|1>
//! categories <count>
//! cat <id> <name> <goal|plain>
//! cells
//! <height lines of width space-separated cell tokens>
//! ```
//!
//! Cell tokens: `u` unexplored, `#` explored obstacle, `.` explored free,
//! `#<id>` / `.<id>` with an object of category `<id>`. Floats are written
//! with Rust's shortest round-trip formatting, so `read(write(g)) == g`
//! bit-exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CategoryId, CategoryTable, GridCell, SemanticGrid};
use crate::scalar::Scalar;

const MAGIC: &str = "semgrid";
const VERSION: u32 = 1;

/// Serializes a grid to the text container format.
pub fn write_map_string<F: Scalar>(grid: &SemanticGrid<F>) -> String {
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {VERSION}\n"));
    out.push_str(&format!("size {} {}\n", grid.width(), grid.height()));
    out.push_str(&format!("resolution {}\n", grid.resolution()));
    out.push_str(&format!("complete {}\n", u8::from(grid.is_complete())));
    out.push_str(&format!("categories {}\n", grid.categories().len()));
    for (id, name, goal) in grid.categories().iter() {
        let kind = if goal { "goal" } else { "plain" };
        out.push_str(&format!("cat {} {} {}\n", id.0, name, kind));
    }
    out.push_str("cells\n");
    for row in 0..grid.height() {
        let mut line = String::new();
        for col in 0..grid.width() {
            if col > 0 {
                line.push(' ');
            }
            let c = GridCell { row, col };
            if !grid.is_explored(c) {
                line.push('u');
            } else {
                line.push(if grid.is_obstacle(c) { '#' } else { '.' });
                if let Some(id) = grid.object_at(c) {
                    line.push_str(&id.0.to_string());
                }
            }
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::parse(format!("line {}", self.lineno), "unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(format!("line {}", self.lineno), msg)
    }
}

/// Parses the text container format back into a grid.
pub fn parse_map_str<F: Scalar>(text: &str) -> Result<SemanticGrid<F>> {
    let mut rd = LineReader {
        lines: text.lines(),
        lineno: 0,
    };

    let header = rd.next()?;
    let mut it = header.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(rd.err("missing semgrid magic"));
    }
    let version: u32 = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| rd.err("bad version"))?;
    if version != VERSION {
        return Err(rd.err(format!("unsupported version {version}")));
    }

    let size_line = rd.next()?;
    let (width, height) = {
        let mut it = size_line.split_whitespace();
        if it.next() != Some("size") {
            return Err(rd.err("expected size line"));
        }
        let w: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| rd.err("bad width"))?;
        let h: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| rd.err("bad height"))?;
        (w, h)
    };

    let res_line = rd.next()?;
    let resolution: F = {
        let mut it = res_line.split_whitespace();
        if it.next() != Some("resolution") {
            return Err(rd.err("expected resolution line"));
        }
        let raw = it.next().ok_or_else(|| rd.err("missing resolution"))?;
        // Shortest round-trip decimals survive the f64 detour for f32 too.
        let v: f64 = raw
            .parse()
            .map_err(|_| rd.err(format!("bad resolution {raw:?}")))?;
        F::c(v)
    };

    let complete_line = rd.next()?;
    let complete = {
        let mut it = complete_line.split_whitespace();
        if it.next() != Some("complete") {
            return Err(rd.err("expected complete line"));
        }
        match it.next() {
            Some("0") => false,
            Some("1") => true,
            other => return Err(rd.err(format!("bad complete flag {other:?}"))),
        }
    };

    let ncat_line = rd.next()?;
    let ncat: usize = {
        let mut it = ncat_line.split_whitespace();
        if it.next() != Some("categories") {
            return Err(rd.err("expected categories line"));
        }
        it.next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| rd.err("bad category count"))?
    };

    let mut entries: Vec<(String, bool)> = Vec::with_capacity(ncat);
    for i in 0..ncat {
        let line = rd.next()?;
        let mut it = line.split_whitespace();
        if it.next() != Some("cat") {
            return Err(rd.err("expected cat line"));
        }
        let id: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| rd.err("bad category id"))?;
        if id != i {
            return Err(rd.err(format!("category ids must be dense, got {id} at {i}")));
        }
        let name = it.next().ok_or_else(|| rd.err("missing category name"))?;
        let goal = match it.next() {
            Some("goal") => true,
            Some("plain") => false,
            other => return Err(rd.err(format!("bad category kind {other:?}"))),
        };
        entries.push((name.to_string(), goal));
    }
    let categories = CategoryTable::new(entries)?;

    if rd.next()? != "cells" {
        return Err(rd.err("expected cells line"));
    }

    let mut grid = SemanticGrid::new_unexplored(width, height, resolution, categories)?;
    for row in 0..height {
        let line = rd.next()?;
        let mut col = 0usize;
        for tok in line.split_whitespace() {
            if col >= width {
                return Err(rd.err(format!("row {row} has more than {width} cells")));
            }
            let c = GridCell { row, col };
            let mut chars = tok.chars();
            let head = chars.next().ok_or_else(|| rd.err("empty cell token"))?;
            let rest = chars.as_str();
            match head {
                'u' if rest.is_empty() => {}
                '#' | '.' => {
                    let i = grid.idx(c);
                    let (obstacle, explored, objects) = grid.raw_channels_mut();
                    explored[i] = true;
                    obstacle[i] = head == '#';
                    if !rest.is_empty() {
                        let id: u16 = rest
                            .parse()
                            .map_err(|_| rd.err(format!("bad object id in token {tok:?}")))?;
                        objects[i] = Some(CategoryId(id));
                    }
                }
                _ => return Err(rd.err(format!("bad cell token {tok:?}"))),
            }
            if let Some(id) = grid.object_at(c) {
                if !grid.categories().contains(id) {
                    return Err(rd.err(format!("object id {} outside category table", id.0)));
                }
            }
            col += 1;
        }
        if col != width {
            return Err(rd.err(format!("row {row} has {col} cells, expected {width}")));
        }
    }
    grid.force_complete_flag(complete);
    Ok(grid)
}

pub fn write_map<F: Scalar>(grid: &SemanticGrid<F>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), write_map_string(grid))?;
    Ok(())
}

pub fn read_map<F: Scalar>(path: impl AsRef<Path>) -> Result<SemanticGrid<F>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_map_str(&text).map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{}: {}", path.display(), context),
            message,
        },
        other => other,
    })
}
