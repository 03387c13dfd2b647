//! Exact planar predicates and the labeled point configuration.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, format_rational, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    #[serde(with = "rational::serde_str")]
    pub y: Rational,
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(int(x), int(y))
    }

    pub fn sub(&self, other: &Point) -> Vector {
        Vector::new(&self.x - &other.x, &self.y - &other.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_rational(&self.x), format_rational(&self.y))
    }
}

/// A free vector in the plane.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vector {
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    #[serde(with = "rational::serde_str")]
    pub y: Rational,
}

impl Vector {
    pub fn new(x: Rational, y: Rational) -> Self {
        Vector { x, y }
    }

    pub fn zero() -> Self {
        Vector::new(Rational::zero(), Rational::zero())
    }

    pub fn cross(&self, other: &Vector) -> Rational {
        &self.x * &other.y - &self.y * &other.x
    }

    pub fn dot(&self, other: &Vector) -> Rational {
        &self.x * &other.x + &self.y * &other.y
    }

    /// Counterclockwise quarter turn.
    pub fn rot90(&self) -> Vector {
        Vector::new(-&self.y, self.x.clone())
    }

    pub fn scale(&self, s: &Rational) -> Vector {
        Vector::new(&self.x * s, &self.y * s)
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector::new(&self.x + &other.x, &self.y + &other.y)
    }

    pub fn sub_vec(&self, other: &Vector) -> Vector {
        Vector::new(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn neg(&self) -> Vector {
        Vector::new(-&self.x, -&self.y)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

/// Sign of `det(q - p, r - p)`; `+1` is a counterclockwise turn.
pub fn orientation(p: &Point, q: &Point, r: &Point) -> i8 {
    rational::sign(&q.sub(p).cross(&r.sub(p)))
}

/// Labeled planar points, pairwise distinct and with no three collinear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Configuration {
    points: Vec<Point>,
}

impl Configuration {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        validate_configuration(points)
    }

    pub fn from_ints(coords: &[(i64, i64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point::from_ints(x, y)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, label: usize) -> &Point {
        &self.points[label]
    }

    pub fn orient(&self, a: usize, b: usize, c: usize) -> i8 {
        orientation(&self.points[a], &self.points[b], &self.points[c])
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> {
        0..self.points.len()
    }

    /// Counterclockwise hull of all labels.
    pub fn hull(&self) -> Hull {
        convex_hull(self, &self.labels().collect::<Vec<_>>())
    }

    /// Same points under a relabeling: new label `perm[i]` carries old point `i`.
    pub fn relabeled(&self, perm: &[usize]) -> Configuration {
        let mut points = vec![Point::from_ints(0, 0); self.len()];
        for (old, &new) in perm.iter().enumerate() {
            points[new] = self.points[old].clone();
        }
        Configuration { points }
    }
}

pub fn validate_configuration(points: Vec<Point>) -> Result<Configuration> {
    if points.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            if points[i] == points[j] {
                return Err(Error::DuplicatePoint(i, j));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if orientation(&points[i], &points[j], &points[k]) == 0 {
                    return Err(Error::CollinearTriple(i, j, k));
                }
            }
        }
    }
    Ok(Configuration { points })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hull {
    /// Counterclockwise, starting at the smallest label.
    pub cycle: Vec<usize>,
    /// Input labels strictly inside the hull, ascending.
    pub interior: Vec<usize>,
}

/// Monotone-chain hull of a subset of labels (at least three).
pub fn convex_hull(config: &Configuration, indices: &[usize]) -> Hull {
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_by(|&a, &b| config.point(a).cmp(config.point(b)));
    sorted.dedup();
    if sorted.len() < 3 {
        return Hull { cycle: canonical_cycle(&sorted), interior: Vec::new() };
    }
    let mut lower: Vec<usize> = Vec::new();
    for &p in &sorted {
        while lower.len() >= 2 && config.orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in sorted.iter().rev() {
        while upper.len() >= 2 && config.orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let cycle = canonical_cycle(&lower);
    let on_hull: BTreeSet<usize> = cycle.iter().copied().collect();
    let interior = sorted.into_iter().filter(|p| !on_hull.contains(p)).collect::<BTreeSet<_>>();
    Hull { cycle, interior: interior.into_iter().collect() }
}

/// Rotates a cycle so that it starts at its smallest label.
pub fn canonical_cycle(cycle: &[usize]) -> Vec<usize> {
    match cycle.iter().enumerate().min_by_key(|(_, &v)| v) {
        Some((pos, _)) => cycle[pos..].iter().chain(&cycle[..pos]).copied().collect(),
        None => Vec::new(),
    }
}

/// Twice the signed area of a polygon given by labels.
pub fn signed_area2(config: &Configuration, cycle: &[usize]) -> Rational {
    let n = cycle.len();
    let mut acc = Rational::zero();
    for i in 0..n {
        let p = config.point(cycle[i]);
        let q = config.point(cycle[(i + 1) % n]);
        acc += &p.x * &q.y - &q.x * &p.y;
    }
    acc
}

/// `p` strictly inside the convex counterclockwise polygon `poly`.
pub fn strictly_inside_convex(config: &Configuration, poly: &[usize], p: usize) -> bool {
    let n = poly.len();
    (0..n).all(|i| config.orient(poly[i], poly[(i + 1) % n], p) > 0)
}

/// Every vertex lies strictly left of every edge it is not on (this also
/// rules out cycles that wind more than once).
pub fn is_strictly_convex(config: &Configuration, poly: &[usize]) -> bool {
    let n = poly.len();
    n >= 3
        && (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            poly.iter().all(|&q| q == a || q == b || config.orient(a, b, q) > 0)
        })
}

/// Whether two convex counterclockwise polygons have disjoint interiors.
///
/// Either argument may be a two-label segment. Uses separating edge lines:
/// two convex sets with disjoint interiors are weakly separated by a line
/// through an edge of one of them.
pub fn interiors_disjoint(config: &Configuration, a: &[usize], b: &[usize]) -> bool {
    separated_by_edges_of(config, a, b) || separated_by_edges_of(config, b, a)
}

fn separated_by_edges_of(config: &Configuration, a: &[usize], b: &[usize]) -> bool {
    let n = a.len();
    let edges: Vec<(usize, usize)> = if n == 2 {
        vec![(a[0], a[1]), (a[1], a[0])]
    } else {
        (0..n).map(|i| (a[i], a[(i + 1) % n])).collect()
    };
    edges.iter().any(|&(u, v)| b.iter().all(|&q| q == u || q == v || config.orient(u, v, q) <= 0))
}

/// Proper or touching intersection of closed segments `ab` and `cd`.
pub fn segments_intersect(p: &Point, q: &Point, r: &Point, s: &Point) -> bool {
    let o1 = orientation(p, q, r);
    let o2 = orientation(p, q, s);
    let o3 = orientation(r, s, p);
    let o4 = orientation(r, s, q);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    let on = |a: &Point, b: &Point, c: &Point| {
        orientation(a, b, c) == 0
            && c.x >= a.x.clone().min(b.x.clone())
            && c.x <= a.x.clone().max(b.x.clone())
            && c.y >= a.y.clone().min(b.y.clone())
            && c.y <= a.y.clone().max(b.y.clone())
    };
    on(p, q, r) || on(p, q, s) || on(r, s, p) || on(r, s, q)
}

/// Even-odd test for a point known not to lie on the polygon boundary.
pub fn point_in_polygon(config: &Configuration, cycle: &[usize], pt: &Point) -> bool {
    let n = cycle.len();
    let mut inside = false;
    for i in 0..n {
        let a = config.point(cycle[i]);
        let b = config.point(cycle[(i + 1) % n]);
        if (a.y > pt.y) != (b.y > pt.y) {
            // x-coordinate of the crossing compared against pt.x
            let t = (&pt.y - &a.y) / (&b.y - &a.y);
            let x = &a.x + t * (&b.x - &a.x);
            if x > pt.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Simple polygon with counterclockwise orientation and pairwise distinct labels.
pub fn is_simple_ccw(config: &Configuration, cycle: &[usize]) -> bool {
    let n = cycle.len();
    if n < 3 || cycle.iter().collect::<BTreeSet<_>>().len() != n {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (config.point(cycle[i]), config.point(cycle[(i + 1) % n]));
            let (c, d) = (config.point(cycle[j]), config.point(cycle[(j + 1) % n]));
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    signed_area2(config, cycle).is_positive()
}

/// Average of the vertices; strictly inside any convex polygon.
pub fn centroid(config: &Configuration, poly: &[usize]) -> Point {
    let n = Rational::from_integer(poly.len().into());
    let (mut x, mut y) = (Rational::zero(), Rational::zero());
    for &v in poly {
        x += &config.point(v).x;
        y += &config.point(v).y;
    }
    Point::new(x / &n, y / n)
}
