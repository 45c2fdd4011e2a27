//! Volume-conserving roll, press and shrink operators on a [`HeightMap`].
//!
//! The pin is a horizontal cylinder whose axis is perpendicular to the motion.
//! It advances in half-cell steps; at every step the dough above the pin surface
//! is cut off and redistributed:
//!
//! * `flow_forward` of it is pushed into the band just ahead of the pin, per strip,
//! * `flow_lateral` is squeezed out at both ends of the contact patch,
//! * the remainder is spread over the ring of cells around the contact patch.
//!
//! No deposit raises a cell above the map's pre-action maximum (or above the pin
//! surface where the pin covers the cell); excess cascades further along the
//! deposit direction. Volume that cascades off the grid is reported as spilled.

use crate::geometry::{label_components, Vec2};

use super::{ActionKind, HeightMap, MaterialParams, RollAction, SimParams};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActionReport {
    /// Volume pushed off the workspace, m³.
    pub spilled: f64,
    /// Volume cut away by the tool and redistributed, m³.
    pub displaced: f64,
}

/// Dispatches on the action kind.
pub fn apply_action(hm: &mut HeightMap, a: &RollAction, m: &MaterialParams, p: &SimParams) -> ActionReport {
    match a.kind {
        ActionKind::Roll => apply_roll(hm, a, m, p),
        ActionKind::ForwardShrink | ActionKind::SideShrink => apply_shrink(hm, a, m, p),
    }
}

/// Rolls the pin from `a.start` to `a.end` at a constant bottom height derived
/// from `a.start.z`, the commanded press and the material response.
pub fn apply_roll(hm: &mut HeightMap, a: &RollAction, m: &MaterialParams, p: &SimParams) -> ActionReport {
    debug_assert_eq!(a.kind, ActionKind::Roll);
    let depth = p.press_ratio * a.start.z * m.achieved_depth_fraction(p.pin_speed);
    let z_pin = (a.start.z - depth).max(p.min_pin_height).max(0.0);
    let split = Split { forward: m.flow_forward, lateral: m.flow_lateral, behind: 0.0 };
    let cap = hm.max_height();
    let report = sweep(hm, a, z_pin, split, p.settle_ratio);
    finish(hm, m, p, cap);
    report
}

/// Forward shrink reuses the roll sweep on the plate but carries only part of the
/// displaced volume; side shrink is a rigid blade that clears its swept band.
pub fn apply_shrink(hm: &mut HeightMap, a: &RollAction, m: &MaterialParams, p: &SimParams) -> ActionReport {
    let cap = hm.max_height();
    let report = match a.kind {
        ActionKind::ForwardShrink => {
            let t = p.forward_shrink_transfer.clamp(0.0, 1.0);
            sweep(hm, a, 0.0, Split { forward: t, lateral: 0.0, behind: 1.0 - t }, p.settle_ratio)
        }
        ActionKind::SideShrink => side_push(hm, a),
        ActionKind::Roll => panic!("apply_shrink called with a roll action"),
    };
    finish(hm, m, p, cap);
    report
}

fn finish(hm: &mut HeightMap, m: &MaterialParams, p: &SimParams, cap: f64) {
    if m.cohesion_threshold > 0.0 {
        crumble(hm, m.cohesion_threshold, cap);
    } else {
        cohere(hm, p.film_height, p.crumb_area, cap);
    }
}

/// Cohesive dough does not shed crumbs: every piece above `film` height that is
/// separate from the largest one and no bigger than `crumb_area` is folded back
/// into the largest piece, in proportion to each cell's room below `cap`.
pub fn cohere(hm: &mut HeightMap, film: f64, crumb_area: f64, cap: f64) {
    let lab = label_components(hm.rows, hm.cols, |i| hm.heights[i] > film);
    if lab.sizes.len() < 2 {
        return;
    }
    let main = lab.sizes.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).unwrap().0 as u32 + 1;
    let max_cells = (crumb_area / hm.cell_area()).floor() as usize;
    let crumb = |l: u32| l != 0 && l != main && lab.sizes[l as usize - 1] <= max_cells;
    let volume: f64 = lab.labels.iter().zip(&hm.heights).filter(|(l, _)| crumb(**l)).map(|(_, h)| h).sum();
    let room: f64 = lab.labels.iter().zip(&hm.heights).filter(|(l, _)| **l == main).map(|(_, h)| (cap - h).max(0.0)).sum();
    if volume <= 0.0 || room < volume {
        return;
    }
    for (l, h) in lab.labels.iter().zip(hm.heights.iter_mut()) {
        if *l == main {
            *h += volume * (cap - *h).max(0.0) / room;
        } else if crumb(*l) {
            *h = 0.0;
        }
    }
}

/// Granular fracture: every column thinner than `threshold` breaks off and its
/// volume is taken up by the thick columns in proportion to their room below
/// `cap`. If there is not enough room, each thin column gives up the same fraction.
pub fn crumble(hm: &mut HeightMap, threshold: f64, cap: f64) {
    let thin: f64 = hm.heights.iter().filter(|&&h| h > 0.0 && h < threshold).sum();
    let room: f64 = hm.heights.iter().filter(|&&h| h >= threshold).map(|&h| (cap - h).max(0.0)).sum();
    if thin <= 0.0 || room <= 0.0 {
        return;
    }
    let keep = (1.0 - room / thin).max(0.0);
    let moved = thin * (1.0 - keep);
    for h in &mut hm.heights {
        if *h > 0.0 && *h < threshold {
            *h *= keep;
        } else if *h >= threshold {
            *h += moved * (cap - *h).max(0.0) / room;
        }
    }
}

/// Width of a deposit strip in cells. Strips one cell wide are not 4-connected
/// on diagonal rolls and leave fringes of isolated cells.
const STRIP_CELLS: f64 = 2.0;


#[derive(Clone, Copy, Debug)]
struct Split {
    forward: f64,
    lateral: f64,
    /// Left directly behind the pin (rolled over).
    behind: f64,
}

#[derive(Clone, Copy)]
struct PinFrame {
    center: Vec2,
    /// Motion direction.
    u: Vec2,
    /// Along the pin axis.
    w: Vec2,
    z: f64,
    radius: f64,
    half_length: f64,
}

impl PinFrame {
    fn local(&self, p: Vec2) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(self.u), d.dot(self.w))
    }

    /// Height of the pin's lower surface above `p`, or `None` if the pin does not cover `p`.
    fn surface(&self, p: Vec2) -> Option<f64> {
        let (s, l) = self.local(p);
        (s.abs() < self.radius && l.abs() <= self.half_length)
            .then(|| self.z + self.radius - (self.radius * self.radius - s * s).sqrt())
    }
}

/// Per-call scratch: generation stamps avoid clearing a full-grid buffer every step.
struct Stamps {
    marks: Vec<u32>,
    generation: u32,
}

impl Stamps {
    fn new(n: usize) -> Self {
        Self { marks: vec![0; n], generation: 0 }
    }

    fn next(&mut self) -> u32 {
        self.generation += 2;
        self.generation
    }
}

fn sweep(hm: &mut HeightMap, a: &RollAction, z_pin: f64, split: Split, settle: f64) -> ActionReport {
    let mut report = ActionReport::default();
    let res = hm.resolution;
    let start = a.start.xy();
    let end = a.end.xy();
    let travel = end - start;
    let length = travel.norm();
    let (u, split) = match travel.normalized() {
        Some(u) if length > 1e-3 * res => (u, split),
        // Pure press: nothing is pushed in a preferred direction.
        _ => (Vec2::new(1.0, 0.0), Split { forward: 0.0, lateral: 0.0, behind: 0.0 }),
    };
    if z_pin >= hm.max_height() {
        return report;
    }
    let cap = hm.max_height();
    // Loose dough outside the pin settles no higher than a little above the pin bottom.
    let lip = (z_pin + settle * a.pin_radius).min(cap);
    let area = hm.cell_area();
    let steps = ((length / (0.5 * res)).ceil() as usize).max(1);
    let sw = STRIP_CELLS * res;
    let max_strip = (0.5 * a.pin_length / sw).ceil() as i64 + 1;
    let n_strips = (2 * max_strip + 1) as usize;
    let mut strips = vec![0.0f64; n_strips];
    // Volume riding in front of the pin, per strip, in height units of one cell.
    let mut carry = vec![0.0f64; n_strips];
    let mut stamps = Stamps::new(hm.heights.len());
    let mut contact: Vec<usize> = Vec::new();
    let mut ring: Vec<usize> = Vec::new();
    let w = u.perp();
    let mut last_center = start;

    for k in 0..=steps {
        let center = start + travel * (k as f64 / steps as f64);
        last_center = center;
        let pin = PinFrame { center, u, w, z: z_pin, radius: a.pin_radius, half_length: 0.5 * a.pin_length };
        let gen = stamps.next();
        contact.clear();
        strips.iter_mut().for_each(|s| *s = 0.0);

        let reach = Vec2::new(
            pin.radius * u.x.abs() + pin.half_length * u.y.abs() + res,
            pin.radius * u.y.abs() + pin.half_length * u.x.abs() + res,
        );
        let Some((r0, c0, r1, c1)) = cell_range(hm, center - reach, center + reach) else { continue };
        let mut removed_total = 0.0;
        for r in r0..=r1 {
            for c in c0..=c1 {
                let i = r * hm.cols + c;
                let h = hm.heights[i];
                if h <= z_pin {
                    continue;
                }
                let p = hm.cell_center(r, c);
                let Some(surf) = pin.surface(p) else { continue };
                if h > surf {
                    hm.heights[i] = surf;
                    let removed = h - surf;
                    removed_total += removed;
                    let (_, l) = pin.local(p);
                    let j = ((l / sw).round() as i64).clamp(-max_strip, max_strip);
                    strips[(j + max_strip) as usize] += removed;
                    contact.push(i);
                    stamps.marks[i] = gen;
                }
            }
        }
        if !contact.is_empty() {
            report.displaced += removed_total * area;
            let mut overflow = 0.0;
            for (c, &amount) in carry.iter_mut().zip(&strips) {
                *c += split.forward * amount;
            }
            if split.behind > 0.0 {
                let mut back: Vec<f64> = strips.iter().map(|s| split.behind * s).collect();
                overflow += fill_band(hm, &Band::strips(center, -u, w, pin.radius, max_strip, sw), &mut back, None, |hm, i, _, _| {
                    (cap - hm.heights[i]).max(0.0)
                });
            }
            if split.lateral > 0.0 {
                let lo = strips.iter().position(|&s| s > 0.0).unwrap() as i64 - max_strip;
                let hi = strips.iter().rposition(|&s| s > 0.0).unwrap() as i64 - max_strip;
                overflow += squeeze_ends(hm, &pin, cap, 0.5 * split.lateral * removed_total, lo, hi);
            }
            let ring_share = (1.0 - split.forward - split.lateral - split.behind).max(0.0) * removed_total;
            if ring_share > 0.0 {
                overflow += spread_ring(hm, &pin, lip, ring_share, &contact, &mut stamps.marks, gen, &mut ring);
            }
            if overflow > 0.0 {
                // Whatever found no room rides along with the pin.
                for (c, &s) in carry.iter_mut().zip(&strips) {
                    *c += overflow * s / removed_total;
                }
            }
        }
        // The carried bow wave settles into the wedge under the front of the pin.
        if carry.iter().any(|&c| c > 0.0) {
            let band = Band::strips(center, u, w, 0.0, max_strip, sw);
            fill_band(hm, &band, &mut carry, Some(pin.radius), |hm, i, s, _| {
                let surf = pin.z + pin.radius - (pin.radius * pin.radius - s * s).max(0.0).sqrt();
                (surf.min(cap) - hm.heights[i]).max(0.0)
            });
        }
    }
    // Leftover bow wave is dropped ahead of the final pin position.
    if carry.iter().any(|&c| c > 0.0) {
        let band = Band::strips(last_center, u, w, a.pin_radius, max_strip, sw);
        report.spilled += fill_band(hm, &band, &mut carry, None, |hm, i, _, _| (lip - hm.heights[i]).max(0.0)) * area;
    }
    report
}

/// An oriented half-strip of cells starting `a_start` along `along` from `origin`,
/// `half_width` either side. Cells are binned by their offset across.
struct Band {
    origin: Vec2,
    along: Vec2,
    across: Vec2,
    a_start: f64,
    half_width: f64,
    bins: i64,
    bin_width: f64,
}

impl Band {
    fn strips(origin: Vec2, along: Vec2, across: Vec2, a_start: f64, max_strip: i64, width: f64) -> Self {
        Self { origin, along, across, a_start, half_width: (max_strip as f64 + 0.5) * width, bins: max_strip, bin_width: width }
    }

    fn bin(&self, b: f64) -> usize {
        (((b / self.bin_width).round() as i64).clamp(-self.bins, self.bins) + self.bins) as usize
    }

    /// Cells with `a` in `[a0, a1)`, nearest first.
    fn cells(&self, hm: &HeightMap, a0: f64, a1: f64) -> Vec<(usize, f64, f64)> {
        let corners = [
            self.origin + self.along * a0 + self.across * self.half_width,
            self.origin + self.along * a0 - self.across * self.half_width,
            self.origin + self.along * a1 + self.across * self.half_width,
            self.origin + self.along * a1 - self.across * self.half_width,
        ];
        let lo = corners.iter().fold(corners[0], |m, p| Vec2::new(m.x.min(p.x), m.y.min(p.y)));
        let hi = corners.iter().fold(corners[0], |m, p| Vec2::new(m.x.max(p.x), m.y.max(p.y)));
        let Some((r0, c0, r1, c1)) = cell_range(hm, lo, hi) else { return Vec::new() };
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                let d = hm.cell_center(r, c) - self.origin;
                let (a, b) = (d.dot(self.along), d.dot(self.across));
                if a >= a0 && a < a1 && b.abs() <= self.half_width {
                    out.push((r * hm.cols + c, a, b));
                }
            }
        }
        out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.2.total_cmp(&y.2)).then(x.0.cmp(&y.0)));
        out
    }
}

/// Deposits each bin's amount into the band's cells, nearest first, until every
/// bin is empty, `a_max` is reached or the band leaves the grid. Returns what is
/// left, summed over bins; `amounts` keeps the per-bin remainder.
fn fill_band(
    hm: &mut HeightMap,
    band: &Band,
    amounts: &mut [f64],
    a_max: Option<f64>,
    room: impl Fn(&HeightMap, usize, f64, f64) -> f64,
) -> f64 {
    const CHUNK: f64 = 0.01;
    let span = (hm.rows + hm.cols) as f64 * hm.resolution * 2.0;
    let stop = a_max.unwrap_or(band.a_start + span);
    let mut a0 = band.a_start;
    while a0 < stop && amounts.iter().any(|&x| x > 0.0) {
        let a1 = (a0 + CHUNK).min(stop);
        let cells = band.cells(hm, a0, a1);
        if cells.is_empty() && a_max.is_none() {
            break;
        }
        for (i, a, b) in cells {
            let j = if amounts.len() == 1 { 0 } else { band.bin(b) };
            if amounts[j] <= 0.0 {
                continue;
            }
            let add = room(hm, i, a, b).min(amounts[j]);
            if add > 0.0 {
                hm.heights[i] += add;
                amounts[j] -= add;
            }
        }
        a0 = a1;
    }
    amounts.iter().map(|x| x.max(0.0)).sum()
}

/// Pushes `amount` out of each end of the contact patch (strips `lo..=hi`),
/// over the central half of the pin's footprint. Cells fill from the middle of
/// the patch outwards, up to the pin surface height continued past the pin's ends.
fn squeeze_ends(hm: &mut HeightMap, pin: &PinFrame, cap: f64, amount: f64, lo: i64, hi: i64) -> f64 {
    let res = hm.resolution;
    let mid = pin.center + pin.w * (0.5 * (lo + hi) as f64 * STRIP_CELLS * res);
    let half = 0.5 * pin.radius;
    let mut left = 0.0;
    for dir in [-1.0, 1.0] {
        let band = Band { origin: mid, along: pin.w * dir, across: pin.u, a_start: 0.0, half_width: half, bins: 0, bin_width: res };
        left += fill_band(hm, &band, &mut [amount], None, |hm, i, _, s| {
            let surface = pin.z + pin.radius - (pin.radius * pin.radius - s * s).max(0.0).sqrt();
            (surface.min(cap) - hm.heights[i]).max(0.0)
        });
    }
    left
}

/// Spreads `amount` evenly over the 4-neighbours of the contact patch.
#[allow(clippy::too_many_arguments)]
fn spread_ring(
    hm: &mut HeightMap,
    pin: &PinFrame,
    cap: f64,
    amount: f64,
    contact: &[usize],
    marks: &mut [u32],
    gen: u32,
    ring: &mut Vec<usize>,
) -> f64 {
    ring.clear();
    for &i in contact {
        let (r, c) = (i / hm.cols, i % hm.cols);
        let mut push = |j: usize| {
            if marks[j] != gen && marks[j] != gen + 1 {
                marks[j] = gen + 1;
                ring.push(j);
            }
        };
        if r > 0 {
            push(i - hm.cols);
        }
        if r + 1 < hm.rows {
            push(i + hm.cols);
        }
        if c > 0 {
            push(i - 1);
        }
        if c + 1 < hm.cols {
            push(i + 1);
        }
    }
    ring.sort_unstable();
    let room = |hm: &HeightMap, i: usize| {
        let lim = pin.surface(hm.center_of_index(i)).map_or(cap, |s| s.min(cap));
        (lim - hm.heights[i]).max(0.0)
    };
    let mut left = amount;
    // Fill evenly; repeat while some cells still have room.
    for _ in 0..4 {
        let open: Vec<(usize, f64)> = ring.iter().map(|&j| (j, room(hm, j))).filter(|&(_, rm)| rm > 0.0).collect();
        if open.is_empty() || left <= 0.0 {
            break;
        }
        let share = left / open.len() as f64;
        for (j, rm) in open {
            let add = share.min(rm);
            hm.heights[j] += add;
            left -= add;
        }
    }
    left.max(0.0)
}

fn cell_range(hm: &HeightMap, lo: Vec2, hi: Vec2) -> Option<(usize, usize, usize, usize)> {
    let res = hm.resolution;
    let c0 = ((lo.x - hm.origin.x) / res).floor().max(0.0);
    let r0 = ((lo.y - hm.origin.y) / res).floor().max(0.0);
    let c1 = ((hi.x - hm.origin.x) / res).floor().min(hm.cols as f64 - 1.0);
    let r1 = ((hi.y - hm.origin.y) / res).floor().min(hm.rows as f64 - 1.0);
    (c0 <= c1 && r0 <= r1).then(|| (r0 as usize, c0 as usize, r1 as usize, c1 as usize))
}

/// Rigid blade across the full pin length: everything in the swept band moves
/// to just past the end line.
fn side_push(hm: &mut HeightMap, a: &RollAction) -> ActionReport {
    let mut report = ActionReport::default();
    let res = hm.resolution;
    let start = a.start.xy();
    let Some(u) = (a.end.xy() - start).normalized() else { return report };
    let length = (a.end.xy() - start).norm();
    let w = u.perp();
    let half = 0.5 * a.pin_length;
    let cap = hm.max_height();
    let in_band = |p: Vec2| {
        let d = p - start;
        let (s, l) = (d.dot(u), d.dot(w));
        (-res..=length).contains(&s) && l.abs() <= half
    };

    let sw = STRIP_CELLS * res;
    let max_strip = (half / sw).ceil() as i64 + 1;
    let mut strips = vec![0.0f64; (2 * max_strip + 1) as usize];
    let corners = [start + w * half, start - w * half, a.end.xy() + w * half, a.end.xy() - w * half];
    let lo = corners.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |m, p| Vec2::new(m.x.min(p.x), m.y.min(p.y)));
    let hi = corners.iter().fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| Vec2::new(m.x.max(p.x), m.y.max(p.y)));
    let margin = Vec2::new(2.0 * res, 2.0 * res);
    let Some((r0, c0, r1, c1)) = cell_range(hm, lo - margin, hi + margin) else { return report };
    for r in r0..=r1 {
        for c in c0..=c1 {
            let i = r * hm.cols + c;
            let h = hm.heights[i];
            let p = hm.cell_center(r, c);
            if h > 0.0 && in_band(p) {
                let l = (p - start).dot(w);
                let j = ((l / sw).round() as i64).clamp(-max_strip, max_strip);
                strips[(j + max_strip) as usize] += h;
                hm.heights[i] = 0.0;
                report.displaced += h * hm.cell_area();
            }
        }
    }
    let room = |hm: &HeightMap, i: usize| {
        if in_band(hm.center_of_index(i)) {
            0.0
        } else {
            (cap - hm.heights[i]).max(0.0)
        }
    };
    if strips.iter().any(|&s| s > 0.0) {
        let band = Band::strips(a.end.xy(), u, w, 0.0, max_strip, sw);
        report.spilled += fill_band(hm, &band, &mut strips, None, |hm, i, _, _| room(hm, i)) * hm.cell_area();
    }
    report
}
