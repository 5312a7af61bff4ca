//! Contour tracing and the continuity score.
//!
//! Borders are extracted with Suzuki–Abe topological border following over
//! 8-connected ink. Each border becomes a closed polyline through the centers
//! of its border pixels, so a pixel at column `x`, row `y` contributes the
//! point `(x, y)`.

use serde::{Deserialize, Serialize};

use crate::raster::BinaryMask;

/// Contours with a smaller Shoelace area are treated as noise.
pub const MIN_CONTOUR_AREA: f64 = 5.0;
/// Contours with a shorter polyline perimeter are treated as noise.
pub const MIN_CONTOUR_PERIMETER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderKind {
    /// Boundary between an ink component and the ground surrounding it.
    Outer,
    /// Boundary between an ink component and a ground region it encloses.
    Hole,
}

/// A border produced by the tracer, before noise filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Border {
    pub kind: BorderKind,
    /// Index of the enclosing border in the traced list; `None` for borders
    /// whose parent is the image frame.
    pub parent: Option<usize>,
    pub points: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub kind: BorderKind,
    pub points: Vec<(i64, i64)>,
    pub area: f64,
    pub perimeter: f64,
}

impl Contour {
    pub fn from_points(kind: BorderKind, points: Vec<(i64, i64)>) -> Self {
        let area = shoelace_area(&points);
        let perimeter = polyline_perimeter(&points);
        Self {
            kind,
            points,
            area,
            perimeter,
        }
    }

    fn passes_noise_filter(&self) -> bool {
        self.area >= MIN_CONTOUR_AREA && self.perimeter >= MIN_CONTOUR_PERIMETER
    }
}

/// Valid contours of one frame and their aggregates.
///
/// `total_area` adds outer areas and subtracts hole areas (filled-region
/// semantics); `total_perimeter` adds every contour's perimeter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub contours: Vec<Contour>,
    pub total_area: f64,
    pub total_perimeter: f64,
}

impl ContourSet {
    pub fn from_contours(contours: Vec<Contour>) -> Self {
        let total_area = contours
            .iter()
            .map(|c| match c.kind {
                BorderKind::Outer => c.area,
                BorderKind::Hole => -c.area,
            })
            .sum();
        let total_perimeter = contours.iter().map(|c| c.perimeter).sum();
        Self {
            contours,
            total_area,
            total_perimeter,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }
}

/// Polyline vertex coordinate.
pub trait Coord: Copy {
    fn to_f64(self) -> f64;
}

macro_rules! impl_coord {
    ($($t:ty),*) => {$(
        impl Coord for $t {
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    )*};
}

impl_coord!(i32, i64, f32, f64);

/// Shoelace area of a closed polyline (the closing edge is implied).
pub fn shoelace_area<T: Coord>(points: &[(T, T)]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, &(x0, y0)) in points.iter().enumerate() {
        let (x1, y1) = points[(i + 1) % points.len()];
        twice += x0.to_f64() * y1.to_f64() - x1.to_f64() * y0.to_f64();
    }
    twice.abs() / 2.0
}

/// Perimeter of a closed polyline, closing edge included.
pub fn polyline_perimeter<T: Coord>(points: &[(T, T)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, &(x0, y0)) in points.iter().enumerate() {
        let (x1, y1) = points[(i + 1) % points.len()];
        total += (x1.to_f64() - x0.to_f64()).hypot(y1.to_f64() - y0.to_f64());
    }
    total
}

// Neighbour offsets (dy, dx) in clockwise order on screen (y grows downward),
// starting east.
const NEIGHBOURS: [(isize, isize); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

fn direction_of(from: (usize, usize), to: (usize, usize)) -> usize {
    let dy = to.0 as isize - from.0 as isize;
    let dx = to.1 as isize - from.1 as isize;
    NEIGHBOURS
        .iter()
        .position(|&d| d == (dy, dx))
        .expect("points are 8-adjacent")
}

fn step(p: (usize, usize), dir: usize) -> (usize, usize) {
    let (dy, dx) = NEIGHBOURS[dir];
    ((p.0 as isize + dy) as usize, (p.1 as isize + dx) as usize)
}

/// Traces every outer and hole border of the mask (no filtering).
///
/// Follows Suzuki & Abe's border following: a raster scan over a
/// zero-padded copy finds border starts, each border is walked and its
/// pixels relabelled with the running border number, and the hierarchy is
/// derived from the last border met on the scan line.
pub fn trace_borders(mask: &BinaryMask) -> Vec<Border> {
    let (w, h) = (mask.width(), mask.height());
    let pw = w + 2;
    let ph = h + 2;
    let mut f = vec![0i32; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                f[(y + 1) * pw + x + 1] = 1;
            }
        }
    }
    let at = |f: &[i32], p: (usize, usize)| f[p.0 * pw + p.1];

    // border number 1 is the frame, a hole border with no parent
    let mut kinds: Vec<BorderKind> = vec![BorderKind::Hole];
    let mut parents: Vec<Option<i32>> = vec![None];
    let mut borders = Vec::new();
    let mut nbd: i32 = 1;

    for i in 1..ph - 1 {
        let mut lnbd: i32 = 1;
        for j in 1..pw - 1 {
            let fij = f[i * pw + j];
            if fij == 0 {
                continue;
            }
            let start = if fij == 1 && f[i * pw + j - 1] == 0 {
                Some((BorderKind::Outer, (i, j - 1)))
            } else if fij >= 1 && f[i * pw + j + 1] == 0 {
                if fij > 1 {
                    lnbd = fij;
                }
                Some((BorderKind::Hole, (i, j + 1)))
            } else {
                None
            };

            if let Some((kind, from)) = start {
                nbd += 1;
                let prev_kind = kinds[(lnbd - 1) as usize];
                let parent = if kind == prev_kind {
                    parents[(lnbd - 1) as usize]
                } else {
                    Some(lnbd)
                };
                kinds.push(kind);
                parents.push(parent);
                let points = follow_border(&mut f, pw, (i, j), from, nbd);
                borders.push(Border {
                    kind,
                    // border numbers 2.. map to output indices 0..
                    parent: parent.filter(|&p| p >= 2).map(|p| (p - 2) as usize),
                    points,
                });
            }

            let fij = at(&f, (i, j));
            if fij != 1 {
                lnbd = fij.abs();
            }
        }
    }
    borders
}

fn follow_border(
    f: &mut [i32],
    pw: usize,
    start: (usize, usize),
    from: (usize, usize),
    nbd: i32,
) -> Vec<(i64, i64)> {
    let idx = |p: (usize, usize)| p.0 * pw + p.1;
    let to_point = |p: (usize, usize)| (p.1 as i64 - 1, p.0 as i64 - 1);

    // clockwise search around the start for the first non-zero neighbour
    let first_dir = direction_of(start, from);
    let first = (0..8)
        .map(|k| step(start, (first_dir + k) % 8))
        .find(|&q| f[idx(q)] != 0);
    let Some(first) = first else {
        f[idx(start)] = -nbd;
        return vec![to_point(start)];
    };

    let mut points = Vec::new();
    let mut prev = first;
    let mut cur = start;
    loop {
        points.push(to_point(cur));
        // counter-clockwise search starting just after `prev`
        let back = direction_of(cur, prev);
        let mut east_zero_examined = false;
        let mut next = prev;
        for k in 1..=8 {
            let dir = (back + 8 - k) % 8;
            let q = step(cur, dir);
            if f[idx(q)] != 0 {
                next = q;
                break;
            }
            if dir == 0 {
                east_zero_examined = true;
            }
        }
        if east_zero_examined {
            f[idx(cur)] = -nbd;
        } else if f[idx(cur)] == 1 {
            f[idx(cur)] = nbd;
        }
        if next == start && cur == first {
            break;
        }
        prev = cur;
        cur = next;
    }
    points
}

/// Traces borders and keeps those passing the area and perimeter filters.
pub fn trace_contours(mask: &BinaryMask) -> ContourSet {
    let contours = trace_borders(mask)
        .into_iter()
        .map(|b| Contour::from_points(b.kind, b.points))
        .filter(Contour::passes_noise_filter)
        .collect();
    ContourSet::from_contours(contours)
}

/// Continuity score `(S * P_max) / (S_max * P)` for a `width` x `height` frame.
///
/// Returns 0 when there is no valid perimeter. The result is floored at 0
/// because hole subtraction can drive the signed area total below zero.
pub fn continuity_score(set: &ContourSet, width: usize, height: usize) -> f64 {
    if set.total_perimeter <= 0.0 {
        return 0.0;
    }
    let s_max = (width * height) as f64;
    let p_max = 2.0 * (width + height) as f64;
    let score = (set.total_area * p_max) / (s_max * set.total_perimeter);
    score.max(0.0)
}
