//! Convex polygons in the ground plane, as `[x, z]` vertex lists in counter-clockwise order.

pub type Point = [f64; 2];

#[inline]
fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Shoelace area; positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    s * 0.5
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Monotone-chain hull, counter-clockwise, without collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Sutherland–Hodgman clipping of `subject` against the convex, counter-clockwise `clip`.
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % n]);
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let (p, q) = (input[j], input[(j + 1) % m]);
            let (dp, dq) = (cross(&a, &b, &p), cross(&a, &b, &q));
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    out
}

pub fn intersection_area(a: &[Point], b: &[Point]) -> f64 {
    area(&clip_convex(a, b))
}

/// Intersection over union of two convex counter-clockwise polygons.
pub fn convex_iou(a: &[Point], b: &[Point]) -> f64 {
    let (aa, ab) = (area(a), area(b));
    let inter = intersection_area(a, b).min(aa).min(ab);
    let union = aa + ab - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_and_duplicate_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.0]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert_eq!(signed_area(&h), 1.0);
    }

    #[test]
    fn clipping_overlapping_squares() {
        let a = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = [[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        assert_eq!(intersection_area(&a, &b), 1.0);
        assert!((convex_iou(&a, &b) - 1.0 / 7.0).abs() < 1e-15);
        let far = [[10.0, 10.0], [11.0, 10.0], [11.0, 11.0], [10.0, 11.0]];
        assert_eq!(convex_iou(&a, &far), 0.0);
    }
}
