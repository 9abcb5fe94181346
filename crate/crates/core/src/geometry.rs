//! Exact planar geometry on rational points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// A point in the plane with exact rational coordinates. Ordered
/// lexicographically by `(x, y)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[Rational; 2]", into = "[Rational; 2]")]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn ratio(xn: i64, xd: i64, yn: i64, yd: i64) -> Self {
        Point::new(Rational::ratio(xn, xd), Rational::ratio(yn, yd))
    }

    pub fn origin() -> Self {
        Point::new(Rational::zero(), Rational::zero())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::new(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn add(&self, other: &Point) -> Point {
        Point::new(&self.x + &other.x, &self.y + &other.y)
    }

    pub fn scale(&self, s: &Rational) -> Point {
        Point::new(&self.x * s, &self.y * s)
    }

    pub fn dist2(&self, other: &Point) -> Rational {
        let d = self.sub(other);
        &d.x * &d.x + &d.y * &d.y
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }
}

impl From<[Rational; 2]> for Point {
    fn from([x, y]: [Rational; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [Rational; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// z-component of `(a - o) x (b - o)`.
pub fn cross(o: &Point, a: &Point, b: &Point) -> Rational {
    let u = a.sub(o);
    let v = b.sub(o);
    &u.x * &v.y - &u.y * &v.x
}

/// Convex hull (counter-clockwise, no collinear vertices). Degenerate input
/// yields one point or the two endpoints of a segment.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Closed half-plane `a*x + b*y >= c`.
#[derive(Clone, Debug)]
struct HalfPlane {
    a: Rational,
    b: Rational,
    c: Rational,
}

impl HalfPlane {
    fn eval(&self, p: &Point) -> Rational {
        &self.a * &p.x + &self.b * &p.y
    }

    fn contains(&self, p: &Point) -> bool {
        self.eval(p) >= self.c
    }

    /// Left side of the directed line `p -> q` (boundary included).
    fn left_of(p: &Point, q: &Point) -> HalfPlane {
        let d = q.sub(p);
        let a = -&d.y;
        let b = d.x.clone();
        let c = &a * &p.x + &b * &p.y;
        HalfPlane { a, b, c }
    }

    /// `dir . (x - p) >= 0`.
    fn ahead_of(p: &Point, dir: &Point) -> HalfPlane {
        let c = &dir.x * &p.x + &dir.y * &p.y;
        HalfPlane {
            a: dir.x.clone(),
            b: dir.y.clone(),
            c,
        }
    }

    fn intersect(&self, s: &Point, e: &Point) -> Point {
        let fs = self.eval(s);
        let fe = self.eval(e);
        let t = (&self.c - &fs) / (&fe - &fs);
        s.add(&e.sub(s).scale(&t))
    }
}

fn half_planes(hull: &[Point]) -> Vec<HalfPlane> {
    match hull.len() {
        0 => Vec::new(),
        1 => {
            let p = &hull[0];
            let one = Rational::one();
            let zero = Rational::zero();
            vec![
                HalfPlane::ahead_of(p, &Point::new(one.clone(), zero.clone())),
                HalfPlane::ahead_of(p, &Point::new(-&one, zero.clone())),
                HalfPlane::ahead_of(p, &Point::new(zero.clone(), one.clone())),
                HalfPlane::ahead_of(p, &Point::new(zero, -&one)),
            ]
        }
        2 => {
            let (p, q) = (&hull[0], &hull[1]);
            let d = q.sub(p);
            let neg = Point::new(-&d.x, -&d.y);
            vec![
                HalfPlane::left_of(p, q),
                HalfPlane::left_of(q, p),
                HalfPlane::ahead_of(p, &d),
                HalfPlane::ahead_of(q, &neg),
            ]
        }
        n => (0..n)
            .map(|i| HalfPlane::left_of(&hull[i], &hull[(i + 1) % n]))
            .collect(),
    }
}

/// Vertices of the intersection of two convex hulls (each given as the
/// output of [`convex_hull`]). An empty result means disjoint sets.
pub fn convex_intersection(a: &[Point], b: &[Point]) -> Vec<Point> {
    let mut poly: Vec<Point> = a.to_vec();
    for hp in half_planes(b) {
        if poly.is_empty() {
            break;
        }
        let mut out = Vec::new();
        let n = poly.len();
        for i in 0..n {
            let s = &poly[(i + n - 1) % n];
            let e = &poly[i];
            let (s_in, e_in) = (hp.contains(s), hp.contains(e));
            if e_in {
                if !s_in {
                    out.push(hp.intersect(s, e));
                }
                out.push(e.clone());
            } else if s_in {
                out.push(hp.intersect(s, e));
            }
        }
        poly = out;
    }
    convex_hull(&poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: i64, y: i64) -> Point {
        Point::ratio(x, 1, y, 1)
    }

    #[test]
    fn hull_of_triangle_with_interior_point() {
        let h = convex_hull(&[p(0, 0), p(2, 0), p(0, 2), p(1, 0), p(0, 1)]);
        assert_eq!(h, vec![p(0, 0), p(2, 0), p(0, 2)]);
    }

    #[test]
    fn hull_of_collinear_points() {
        let h = convex_hull(&[p(0, 0), p(1, 1), p(2, 2)]);
        assert_eq!(h, vec![p(0, 0), p(2, 2)]);
    }

    #[test]
    fn triangles_touching_at_a_corner() {
        let a = convex_hull(&[p(0, 0), p(1, 0), p(0, 1)]);
        let b = convex_hull(&[p(1, 0), p(2, 0), p(1, 1)]);
        assert_eq!(convex_intersection(&a, &b), vec![p(1, 0)]);
    }

    #[test]
    fn triangles_sharing_an_edge() {
        let a = convex_hull(&[p(0, 0), p(1, 0), p(0, 1)]);
        let b = convex_hull(&[p(1, 0), p(0, 1), p(1, 1)]);
        assert_eq!(convex_intersection(&a, &b).len(), 2);
    }

    #[test]
    fn disjoint_and_segment_cases() {
        let a = convex_hull(&[p(0, 0), p(1, 0), p(0, 1)]);
        let b = convex_hull(&[p(3, 3), p(4, 3), p(3, 4)]);
        assert!(convex_intersection(&a, &b).is_empty());
        let s1 = convex_hull(&[p(0, 0), p(2, 2)]);
        let s2 = convex_hull(&[p(2, 2), p(4, 4)]);
        assert_eq!(convex_intersection(&s1, &s2), vec![p(2, 2)]);
        let s3 = convex_hull(&[p(1, 1), p(3, 3)]);
        assert_eq!(convex_intersection(&s1, &s3), vec![p(1, 1), p(2, 2)]);
        let crossing = convex_hull(&[p(0, 2), p(2, 0)]);
        assert_eq!(convex_intersection(&s1, &crossing), vec![p(1, 1)]);
    }
}
