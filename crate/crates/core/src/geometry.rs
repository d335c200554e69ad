// SPDX-License-Identifier: Apache-2.0

//! Rectilinear floorplan regions and the shape metrics derived from them.
//!
//! A region is an axis-parallel simple polygon without holes.  Its shape
//! factor compares area and perimeter after normalizing every side by the
//! longest one:
//!
//! ```text
//! SF = 4 * (A / e_max^2) / (P / e_max) = 4A / (e_max * P)
//! ```
//!
//! which is exactly 1 for a square and drops for narrow or notched outlines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for axis-parallel and coincidence checks, relative to
/// the larger bounding-box extent of the input.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("edge starting at vertex {edge} is not axis-parallel")]
    NonRectilinear { edge: usize },
    #[error("edge starting at vertex {edge} intersects edge starting at vertex {other}")]
    SelfIntersecting { edge: usize, other: usize },
    #[error("polygon needs at least 4 distinct corners, found {count}")]
    TooFewVertices { count: usize },
    #[error("polygon encloses zero area")]
    ZeroArea,
    #[error("malformed polygon text at vertex {vertex}: {reason}")]
    Parse { vertex: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Horizontal,
    Vertical,
}

/// A validated axis-parallel simple polygon, stored counter-clockwise with
/// no redundant (collinear or duplicate) vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct RectilinearPolygon {
    vertices: Vec<Point2>,
}

impl RectilinearPolygon {
    pub fn new(vertices: &[Point2]) -> Result<Self, GeometryError> {
        Self::with_tolerance(vertices, DEFAULT_TOLERANCE)
    }

    /// Validates and normalizes `vertices`. `tolerance` is relative to the
    /// larger side of the bounding box.
    pub fn with_tolerance(vertices: &[Point2], tolerance: f64) -> Result<Self, GeometryError> {
        if let Some(vertex) = vertices.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite { vertex });
        }
        let scale = bbox_extent(vertices);
        if scale == 0.0 {
            return if vertices.len() < 4 {
                Err(GeometryError::TooFewVertices { count: vertices.len() })
            } else {
                Err(GeometryError::ZeroArea)
            };
        }
        let eps = tolerance * scale;

        // (original index, point)
        let mut ring: Vec<(usize, Point2)> = Vec::with_capacity(vertices.len());
        for (i, &p) in vertices.iter().enumerate() {
            if ring.last().is_none_or(|&(_, q)| !coincident(p, q, eps)) {
                ring.push((i, p));
            }
        }
        while ring.len() > 1 && coincident(ring[0].1, ring[ring.len() - 1].1, eps) {
            ring.pop();
        }
        if ring.len() < 2 {
            return Err(GeometryError::TooFewVertices { count: ring.len() });
        }

        let n = ring.len();
        for i in 0..n {
            let (a, b) = (ring[i].1, ring[(i + 1) % n].1);
            if (b.x - a.x).abs() > eps && (b.y - a.y).abs() > eps {
                return Err(GeometryError::NonRectilinear { edge: ring[i].0 });
            }
        }

        merge_collinear(&mut ring)?;
        if ring.len() < 4 {
            return Err(GeometryError::TooFewVertices { count: ring.len() });
        }
        check_simple(&ring, eps)?;

        let mut points: Vec<Point2> = ring.into_iter().map(|(_, p)| p).collect();
        let signed = signed_area(&points);
        if signed.abs() <= eps * eps {
            return Err(GeometryError::ZeroArea);
        }
        if signed < 0.0 {
            points[1..].reverse();
        }
        Ok(Self { vertices: points })
    }

    /// Axis-aligned `width × height` rectangle with its lower-left corner at the origin.
    pub fn rectangle(width: f64, height: f64) -> Result<Self, GeometryError> {
        Self::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(width, 0.0),
            Point2::new(width, height),
            Point2::new(0.0, height),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| edge_length(a, b)).sum()
    }

    pub fn longest_edge(&self) -> f64 {
        self.edges().map(|(a, b)| edge_length(a, b)).fold(0.0, f64::max)
    }

    pub fn shape_metrics(&self) -> ShapeMetrics {
        ShapeMetrics::from_measures(self.area(), self.perimeter(), self.longest_edge())
    }

    pub fn shape_factor(&self) -> f64 {
        self.shape_metrics().shape_factor
    }

    /// Polygon text encoding: `"x0 y0;x1 y1;..."`, six decimals per coordinate.
    pub fn to_text(&self) -> String {
        format_vertices(&self.vertices)
    }
}

impl fmt::Display for RectilinearPolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for RectilinearPolygon {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(&parse_vertices(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMetrics {
    pub area: f64,
    pub perimeter: f64,
    pub longest_edge: f64,
    pub normalized_area: f64,
    pub normalized_perimeter: f64,
    pub shape_factor: f64,
}

impl ShapeMetrics {
    fn from_measures(area: f64, perimeter: f64, longest_edge: f64) -> Self {
        let normalized_area = area / (longest_edge * longest_edge);
        let normalized_perimeter = perimeter / longest_edge;
        Self {
            area,
            perimeter,
            longest_edge,
            normalized_area,
            normalized_perimeter,
            shape_factor: 4.0 * normalized_area / normalized_perimeter,
        }
    }
}

pub fn validate_polygon(vertices: &[Point2]) -> Result<RectilinearPolygon, GeometryError> {
    RectilinearPolygon::new(vertices)
}

pub fn area(p: &RectilinearPolygon) -> f64 {
    p.area()
}

pub fn perimeter(p: &RectilinearPolygon) -> f64 {
    p.perimeter()
}

pub fn shape_factor(p: &RectilinearPolygon) -> ShapeMetrics {
    p.shape_metrics()
}

/// Parses the `"x0 y0;x1 y1;..."` encoding without validating the shape.
pub fn parse_vertices(text: &str) -> Result<Vec<Point2>, GeometryError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(GeometryError::Parse {
            vertex: 0,
            reason: "empty polygon".into(),
        });
    }
    text.split(';')
        .enumerate()
        .map(|(vertex, pair)| {
            let mut coords = pair.split_whitespace();
            let mut next = |axis: &str| -> Result<f64, GeometryError> {
                let raw = coords.next().ok_or_else(|| GeometryError::Parse {
                    vertex,
                    reason: format!("missing {axis} coordinate"),
                })?;
                raw.parse::<f64>().map_err(|_| GeometryError::Parse {
                    vertex,
                    reason: format!("invalid {axis} coordinate {raw:?}"),
                })
            };
            let x = next("x")?;
            let y = next("y")?;
            if coords.next().is_some() {
                return Err(GeometryError::Parse {
                    vertex,
                    reason: "expected exactly two coordinates".into(),
                });
            }
            Ok(Point2::new(x, y))
        })
        .collect()
}

pub fn format_vertices(vertices: &[Point2]) -> String {
    vertices
        .iter()
        .map(|p| format!("{:.6} {:.6}", p.x, p.y))
        .collect::<Vec<_>>()
        .join(";")
}

fn bbox_extent(vertices: &[Point2]) -> f64 {
    let mut it = vertices.iter();
    let Some(first) = it.next() else { return 0.0 };
    let (mut x0, mut x1, mut y0, mut y1) = (first.x, first.x, first.y, first.y);
    for p in it {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    (x1 - x0).max(y1 - y0)
}

fn coincident(a: Point2, b: Point2, eps: f64) -> bool {
    (a.x - b.x).abs() <= eps && (a.y - b.y).abs() <= eps
}

fn edge_length(a: Point2, b: Point2) -> f64 {
    (b.x - a.x).abs() + (b.y - a.y).abs()
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

fn axis_of(a: Point2, b: Point2) -> Axis {
    if (b.y - a.y).abs() <= (b.x - a.x).abs() {
        Axis::Horizontal
    } else {
        Axis::Vertical
    }
}

/// Drops every vertex whose incoming and outgoing edges share an axis.
/// An edge that doubles back on its predecessor is a degenerate spike.
fn merge_collinear(ring: &mut Vec<(usize, Point2)>) -> Result<(), GeometryError> {
    loop {
        let n = ring.len();
        if n < 3 {
            return Ok(());
        }
        let mut redundant = None;
        for i in 0..n {
            let prev = ring[(i + n - 1) % n].1;
            let (cur_idx, cur) = ring[i];
            let next = ring[(i + 1) % n].1;
            if axis_of(prev, cur) != axis_of(cur, next) {
                continue;
            }
            let incoming = (cur.x - prev.x) + (cur.y - prev.y);
            let outgoing = (next.x - cur.x) + (next.y - cur.y);
            if incoming * outgoing < 0.0 {
                return Err(GeometryError::SelfIntersecting {
                    edge: ring[(i + n - 1) % n].0,
                    other: cur_idx,
                });
            }
            redundant = Some(i);
            break;
        }
        match redundant {
            Some(i) => {
                ring.remove(i);
            }
            None => return Ok(()),
        }
    }
}

fn check_simple(ring: &[(usize, Point2)], eps: f64) -> Result<(), GeometryError> {
    let n = ring.len();
    let seg = |i: usize| (ring[i].1, ring[(i + 1) % n].1);
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a0, a1) = seg(i);
            let (b0, b1) = seg(j);
            if boxes_touch(a0, a1, b0, b1, eps) {
                return Err(GeometryError::SelfIntersecting {
                    edge: ring[i].0,
                    other: ring[j].0,
                });
            }
        }
    }
    Ok(())
}

/// Two axis-parallel segments meet iff their closed bounding boxes overlap.
fn boxes_touch(a0: Point2, a1: Point2, b0: Point2, b1: Point2, eps: f64) -> bool {
    let overlap = |p0: f64, p1: f64, q0: f64, q1: f64| p0.min(p1) <= q0.max(q1) + eps && q0.min(q1) <= p0.max(p1) + eps;
    overlap(a0.x, a1.x, b0.x, b1.x) && overlap(a0.y, a1.y, b0.y, b1.y)
}
