//! Marching squares over a binary mask.
//!
//! Sample points are cell centers; contour vertices sit on the midpoints between
//! adjacent centers. Segments are oriented with the occupied side on the left,
//! so outer boundaries come out counterclockwise and holes clockwise. Saddle
//! squares are resolved as disconnected, matching 4-connectivity.

use std::collections::HashMap;

use super::{BinaryMask, Contour, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Edge {
    /// Between cells (r, c) and (r, c + 1).
    H(i64, i64),
    /// Between cells (r, c) and (r + 1, c).
    V(i64, i64),
}

impl Edge {
    fn position(self, mask: &BinaryMask) -> Vec2 {
        let res = mask.resolution;
        let (x, y) = match self {
            Edge::H(r, c) => ((c + 1) as f64, r as f64 + 0.5),
            Edge::V(r, c) => (c as f64 + 0.5, (r + 1) as f64),
        };
        Vec2::new(mask.origin.x + x * res, mask.origin.y + y * res)
    }
}

/// All closed boundary loops of the mask, in scan order of their first segment.
pub fn marching_squares(mask: &BinaryMask) -> Vec<Contour> {
    let occ = |r: i64, c: i64| -> bool {
        r >= 0 && c >= 0 && (r as usize) < mask.rows && (c as usize) < mask.cols && mask.get(r as usize, c as usize)
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for r in -1..mask.rows as i64 {
        for c in -1..mask.cols as i64 {
            // Corners counterclockwise: bl, br, tr, tl.
            let corners = [occ(r, c), occ(r, c + 1), occ(r + 1, c + 1), occ(r + 1, c)];
            if corners.iter().all(|&b| b) || corners.iter().all(|&b| !b) {
                continue;
            }
            // Edge k runs from corner k to corner k + 1.
            let edges = [Edge::H(r, c), Edge::V(r, c + 1), Edge::H(r + 1, c), Edge::V(r, c)];
            for k in 0..4 {
                let exits = corners[k] && !corners[(k + 1) % 4];
                if !exits {
                    continue;
                }
                // Pair with the nearest preceding crossing, which is always an entry.
                let entry = (1..4)
                    .map(|back| (k + 4 - back) % 4)
                    .find(|&j| corners[j] != corners[(j + 1) % 4])
                    .expect("a square with an exit edge has an entry edge");
                segments.push((edges[k], edges[entry]));
            }
        }
    }

    let by_start: HashMap<Edge, usize> = segments.iter().enumerate().map(|(i, s)| (s.0, i)).collect();
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for first in 0..segments.len() {
        if used[first] {
            continue;
        }
        let mut points = Vec::new();
        let mut i = first;
        while !used[i] {
            used[i] = true;
            points.push(segments[i].0.position(mask));
            match by_start.get(&segments[i].1) {
                Some(&next) => i = next,
                None => break,
            }
        }
        loops.push(Contour::new(points));
    }
    loops
}

/// Counterclockwise outer boundary of the largest 4-connected component.
pub fn outer_contour(mask: &BinaryMask) -> Option<Contour> {
    let component = mask.largest_component();
    marching_squares(&component)
        .into_iter()
        .filter(|c| c.signed_area() > 0.0)
        .max_by(|a, b| a.signed_area().total_cmp(&b.signed_area()))
}
