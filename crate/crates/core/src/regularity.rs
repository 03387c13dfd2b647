//! Regularity of subdivisions of the convex hull, decided by exact linear
//! programming, together with normal (affine) fans, secondary cones and
//! recession fans.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Vector};
use crate::linalg;
use crate::lp::{lp_feasible, LinearProgram, Relation};
use crate::rational::{self, Rational};
use crate::subdivision::{plane_through, Region, Subdivision, WeightVector};

/// `g_c(q)` for the cell's affine interpolant, as coefficients on the
/// weights of the cell's first three vertices.
fn interpolation_terms(config: &Configuration, basis: [usize; 3], q: usize) -> [(usize, Rational); 3] {
    let [v0, v1, v2] = basis;
    let p0 = config.point(v0);
    let e1 = config.point(v1).sub(p0);
    let e2 = config.point(v2).sub(p0);
    let dq = config.point(q).sub(p0);
    let det = e1.cross(&e2);
    let b1 = dq.cross(&e2) / &det;
    let b2 = e1.cross(&dq) / &det;
    let b0 = Rational::one() - &b1 - &b2;
    [(v0, b0), (v1, b1), (v2, b2)]
}

fn basis_of(d: &Subdivision, cell: usize) -> [usize; 3] {
    let v = d.cells()[cell].vertices();
    [v[0], v[1], v[2]]
}

/// Linear forms over the weights describing `{w : D(w) = D}`: equalities
/// force every cell to be flat, inequalities (read as `> 0`) force a
/// concave bend across every wall and every unused point strictly below.
struct LiftSystem {
    equalities: Vec<Vec<Rational>>,
    inequalities: Vec<Vec<Rational>>,
}

fn lift_system(config: &Configuration, d: &Subdivision) -> Result<LiftSystem> {
    if d.region() != &Region::hull(config) {
        return Err(Error::WrongRegion);
    }
    let n = config.len();
    let row = |terms: &[(usize, Rational)], minus: usize| {
        let mut r = vec![Rational::zero(); n];
        for (l, c) in terms {
            r[*l] += c;
        }
        r[minus] -= Rational::one();
        r
    };
    let mut equalities = Vec::new();
    for (ci, cell) in d.cells().iter().enumerate() {
        let basis = basis_of(d, ci);
        for &q in &cell.vertices()[3..] {
            equalities.push(row(&interpolation_terms(config, basis, q), q));
        }
    }
    let mut inequalities = Vec::new();
    for &wall in d.walls() {
        let (a, b) = d.wall_cells(wall);
        let q = *d.cells()[b]
            .vertices()
            .iter()
            .find(|&&l| l != wall.0 && l != wall.1)
            .expect("a cell has a vertex off each of its edges");
        inequalities.push(row(&interpolation_terms(config, basis_of(d, a), q), q));
    }
    for &p in d.unused() {
        let c = d.cell_containing(config, p).expect("unused points lie inside a cell");
        inequalities.push(row(&interpolation_terms(config, basis_of(d, c), p), p));
    }
    Ok(LiftSystem { equalities, inequalities })
}

/// Decides whether `d` is induced by some lifting; on success returns a
/// witness `w` with `subdivision_from_weights(w) == d`.
///
/// Strict inequalities are posed as `≥ 1`, which is equivalent because the
/// solution set is a cone.
pub fn is_regular(config: &Configuration, d: &Subdivision) -> Result<Option<WeightVector>> {
    let sys = lift_system(config, d)?;
    let mut lp = LinearProgram::new(config.len());
    for r in sys.equalities {
        lp.add(r, Relation::Eq, Rational::zero());
    }
    for r in sys.inequalities {
        lp.add(r, Relation::Ge, Rational::one());
    }
    Ok(lp_feasible(&lp).map(WeightVector))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FanEdge {
    pub wall: (usize, usize),
    /// Endpoints, as cell indices `a < b`.
    pub cells: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FanRay {
    pub cell: usize,
    /// Region boundary edge the ray is normal to.
    pub edge: (usize, usize),
    pub direction: Vector,
}

/// A polyhedral decomposition of the dual plane: one vertex per cell, a
/// bounded edge per wall and an unbounded ray per region boundary edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineFan {
    pub vertices: Vec<Vector>,
    pub edges: Vec<FanEdge>,
    pub rays: Vec<FanRay>,
}

/// Outward normal of a counterclockwise boundary edge.
pub fn outward_normal(config: &Configuration, (u, v): (usize, usize)) -> Vector {
    config.point(v).sub(config.point(u)).rot90().neg()
}

/// The normal fan of a regular subdivision (gradients of the witness lift on
/// each cell), or `None` if the subdivision is not regular.
pub fn normal_fan(config: &Configuration, d: &Subdivision) -> Result<Option<AffineFan>> {
    let Some(w) = is_regular(config, d)? else {
        return Ok(None);
    };
    Ok(Some(fan_from_weights(config, d, &w)))
}

/// Affine fan of the piecewise-linear lift of `w` over the cells of `d`.
pub fn fan_from_weights(config: &Configuration, d: &Subdivision, w: &WeightVector) -> AffineFan {
    let vertices = (0..d.cells().len())
        .map(|c| {
            let f = plane_through(config, w, basis_of(d, c)).expect("cells are non-degenerate");
            Vector::new(f.a, f.b)
        })
        .collect();
    let edges = d
        .walls()
        .iter()
        .map(|&wall| FanEdge { wall, cells: d.wall_cells(wall) })
        .collect();
    let rays = d
        .region()
        .edges()
        .map(|e| {
            let cell = d
                .cells()
                .iter()
                .position(|c| c.edges().any(|x| x == e))
                .expect("boundary edges are covered");
            FanRay { cell, edge: e, direction: outward_normal(config, e) }
        })
        .collect();
    AffineFan { vertices, edges, rays }
}

/// Closed cone of liftings inducing a subdivision (or a coarsening of it).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SecondaryCone {
    /// Rows `r` with `r·w = 0`.
    pub equalities: Vec<RowJson>,
    /// Rows `r` with `r·w ≥ 0`.
    pub inequalities: Vec<RowJson>,
    /// Dimension, including the three-dimensional space of affine functions.
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RowJson(#[serde(with = "rational::serde_str::vec")] pub Vec<Rational>);

pub fn secondary_cone(config: &Configuration, d: &Subdivision) -> Result<SecondaryCone> {
    let sys = lift_system(config, d)?;
    let n = config.len();
    // inequalities that cannot be made strict are implicit equalities
    let mut binding = sys.equalities.clone();
    for (i, r) in sys.inequalities.iter().enumerate() {
        let mut lp = LinearProgram::new(n);
        for e in &sys.equalities {
            lp.add(e.clone(), Relation::Eq, Rational::zero());
        }
        for (j, s) in sys.inequalities.iter().enumerate() {
            let rhs = if i == j { Rational::one() } else { Rational::zero() };
            lp.add(s.clone(), Relation::Ge, rhs);
        }
        if lp_feasible(&lp).is_none() {
            binding.push(r.clone());
        }
    }
    let dim = n - linalg::rank(&binding);
    Ok(SecondaryCone {
        equalities: sys.equalities.into_iter().map(RowJson).collect(),
        inequalities: sys.inequalities.into_iter().map(RowJson).collect(),
        dim,
    })
}

/// A complete fan with apex at the origin, given by its rays in
/// counterclockwise order (primitive integer directions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConicalFan {
    pub rays: Vec<Vector>,
}

impl ConicalFan {
    fn from_directions(dirs: impl IntoIterator<Item = Vector>) -> Self {
        let mut rays: Vec<(BigInt, BigInt)> = dirs
            .into_iter()
            .map(|v| {
                let p = rational::primitive(&[v.x, v.y]);
                (p[0].clone(), p[1].clone())
            })
            .collect();
        rays.sort_by(angle_cmp);
        rays.dedup();
        let rays = rays
            .into_iter()
            .map(|(x, y)| Vector::new(Rational::from_integer(x), Rational::from_integer(y)))
            .collect();
        ConicalFan { rays }
    }
}

fn half(v: &(BigInt, BigInt)) -> u8 {
    if v.1.is_positive() || (v.1.is_zero() && v.0.is_positive()) {
        0
    } else {
        1
    }
}

fn angle_cmp(a: &(BigInt, BigInt), b: &(BigInt, BigInt)) -> Ordering {
    half(a).cmp(&half(b)).then_with(|| {
        match (&a.0 * &b.1 - &a.1 * &b.0).sign() {
            Sign::Plus => Ordering::Less,
            Sign::Minus => Ordering::Greater,
            Sign::NoSign => Ordering::Equal,
        }
    })
}

/// Limit of the fan under rescaling toward zero: all vertices collapse to
/// the origin, bounded edges vanish and the ray directions remain.
pub fn recession_fan(fan: &AffineFan) -> ConicalFan {
    ConicalFan::from_directions(fan.rays.iter().map(|r| r.direction.clone()))
}

/// Outer normal fan of a region polygon.
pub fn region_normal_fan(config: &Configuration, region: &Region) -> ConicalFan {
    ConicalFan::from_directions(region.edges().map(|e| outward_normal(config, e)))
}
