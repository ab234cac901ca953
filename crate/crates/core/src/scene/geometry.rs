//! Planar polygon helpers for object silhouettes.

use nalgebra::Vector2;

pub type Point = Vector2<f64>;

/// Signed area (positive for counter-clockwise in the x–z plane).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = signed_area(poly);
    let mut c = Point::zeros();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let cross = p.x * q.y - q.x * p.y;
        c += (p + q) * cross;
    }
    c / (6.0 * a)
}

/// Polar second moment of area about `about`, for a counter-clockwise polygon.
pub fn polar_second_moment(poly: &[Point], about: Point) -> f64 {
    let n = poly.len();
    let mut ixx = 0.0;
    let mut iyy = 0.0;
    for i in 0..n {
        let p = poly[i] - about;
        let q = poly[(i + 1) % n] - about;
        let cross = p.x * q.y - q.x * p.y;
        ixx += (p.y * p.y + p.y * q.y + q.y * q.y) * cross;
        iyy += (p.x * p.x + p.x * q.x + q.x * q.x) * cross;
    }
    (ixx + iyy) / 12.0
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q - p).perp(&(r - p));
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// True when no two non-adjacent edges touch and no vertex repeats.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if poly[i] == poly[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even–odd point-in-polygon test; points on the boundary count as inside.
pub fn contains_point(poly: &[Point], p: Point) -> bool {
    if boundary_distance(poly, p) <= 1e-12 {
        return true;
    }
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    };
    (a + ab * t - p).norm()
}

pub fn boundary_distance(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(poly[i], poly[(i + 1) % n], p))
        .fold(f64::INFINITY, f64::min)
}

/// Index of the edge closest to `p`.
pub fn nearest_edge(poly: &[Point], p: Point) -> usize {
    let n = poly.len();
    (0..n)
        .min_by(|&i, &j| {
            let di = segment_distance(poly[i], poly[(i + 1) % n], p);
            let dj = segment_distance(poly[j], poly[(j + 1) % n], p);
            di.total_cmp(&dj)
        })
        .expect("polygon has edges")
}

/// Inward unit normal of edge `i` of a counter-clockwise polygon.
pub fn inward_normal(poly: &[Point], i: usize) -> Point {
    let n = poly.len();
    let e = poly[(i + 1) % n] - poly[i];
    Point::new(-e.y, e.x).normalize()
}

pub fn bounding_box(poly: &[Point]) -> (Point, Point) {
    let mut lo = Point::repeat(f64::INFINITY);
    let mut hi = Point::repeat(f64::NEG_INFINITY);
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}
