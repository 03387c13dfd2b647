//! Polygonal subdivisions of a region into convex cells with vertices in the
//! configuration: validation, exhaustive enumeration, refinement, and the
//! subdivision induced by the upper concave envelope of a lifting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{
    canonical_cycle, centroid, convex_hull, interiors_disjoint, is_simple_ccw, is_strictly_convex,
    point_in_polygon, signed_area2, strictly_inside_convex, Configuration,
};
use crate::rational::Rational;

/// Default cap on search nodes for [`enumerate_subdivisions`].
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// A simple polygon, counterclockwise, starting at its smallest label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Region {
    boundary: Vec<usize>,
}

impl Region {
    pub fn new(config: &Configuration, cycle: &[usize]) -> Result<Self> {
        if let Some(&bad) = cycle.iter().find(|&&l| l >= config.len()) {
            return Err(Error::InvalidRegion(format!("label {bad} out of range")));
        }
        if !is_simple_ccw(config, cycle) {
            return Err(Error::InvalidRegion(format!(
                "{cycle:?} is not a simple counterclockwise polygon"
            )));
        }
        Ok(Region { boundary: canonical_cycle(cycle) })
    }

    /// The convex hull of the whole configuration.
    pub fn hull(config: &Configuration) -> Self {
        Region { boundary: config.hull().cycle }
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Directed boundary edges; the region lies to the left of each.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.boundary.len();
        (0..n).map(move |i| (self.boundary[i], self.boundary[(i + 1) % n]))
    }

    pub fn is_convex(&self, config: &Configuration) -> bool {
        is_strictly_convex(config, &self.boundary)
    }

    /// Labels strictly inside the region, ascending.
    pub fn interior_labels(&self, config: &Configuration) -> Vec<usize> {
        let on: BTreeSet<usize> = self.boundary.iter().copied().collect();
        let convex = self.is_convex(config);
        config
            .labels()
            .filter(|l| !on.contains(l))
            .filter(|&l| {
                if convex {
                    strictly_inside_convex(config, &self.boundary, l)
                } else {
                    point_in_polygon(config, &self.boundary, config.point(l))
                }
            })
            .collect()
    }

    /// Whether a convex polygon lies inside the closed region.
    fn contains_convex(&self, config: &Configuration, poly: &[usize], convex: bool) -> bool {
        if convex {
            // all vertices are labels of the closed region
            return true;
        }
        self.edges().all(|(u, v)| interiors_disjoint(config, poly, &[u, v]))
            && point_in_polygon(config, &self.boundary, &centroid(config, poly))
    }

    pub fn as_cell(&self, config: &Configuration) -> Option<Cell> {
        Cell::new(config, &self.boundary).ok()
    }
}

/// A strictly convex polygon, counterclockwise, starting at its smallest label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Cell {
    vertices: Vec<usize>,
}

impl Cell {
    pub fn new(config: &Configuration, cycle: &[usize]) -> Result<Self> {
        if cycle.iter().any(|&l| l >= config.len()) || !is_strictly_convex(config, cycle) {
            return Err(Error::InvalidSubdivision(format!("{cycle:?} is not a strictly convex ccw cell")));
        }
        Ok(Cell { vertices: canonical_cycle(cycle) })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn has_vertex(&self, l: usize) -> bool {
        self.vertices.contains(&l)
    }

    pub fn as_region(&self) -> Region {
        Region { boundary: self.vertices.clone() }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

pub type Wall = (usize, usize);

/// A region partitioned into convex cells. Cells are kept in canonical order
/// and walls (edges shared by two cells) are sorted label pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Subdivision {
    region: Region,
    cells: Vec<Cell>,
    walls: Vec<Wall>,
    /// Labels strictly inside the region that are not cell vertices.
    unused: Vec<usize>,
}

impl Subdivision {
    /// Validates a candidate subdivision: cells inside the region with
    /// disjoint interiors, total area equal to the region's, every boundary
    /// edge covered once and every other cell edge shared by two cells.
    pub fn new(config: &Configuration, region: Region, cells: Vec<Cell>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSubdivision(m));
        if cells.is_empty() {
            return bad("no cells".into());
        }
        let convex = region.is_convex(config);
        let inner: BTreeSet<usize> = region.interior_labels(config).into_iter().collect();
        let closed: BTreeSet<usize> = inner.iter().chain(region.boundary()).copied().collect();
        for c in &cells {
            if let Some(l) = c.vertices().iter().find(|l| !closed.contains(l)) {
                return bad(format!("cell {c} uses label {l} outside the region"));
            }
            if !region.contains_convex(config, c.vertices(), convex) {
                return bad(format!("cell {c} leaves the region"));
            }
        }
        for i in 0..cells.len() {
            for j in i + 1..cells.len() {
                if !interiors_disjoint(config, cells[i].vertices(), cells[j].vertices()) {
                    return bad(format!("cells {} and {} overlap", cells[i], cells[j]));
                }
            }
        }
        let area: Rational = cells.iter().map(|c| signed_area2(config, c.vertices())).sum();
        if area != signed_area2(config, region.boundary()) {
            return bad("cells do not cover the region".into());
        }
        let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for c in &cells {
            for e in c.edges() {
                if !directed.insert(e) {
                    return bad(format!("edge {e:?} used twice"));
                }
            }
        }
        let boundary: BTreeSet<(usize, usize)> = region.edges().collect();
        if !boundary.iter().all(|e| directed.contains(e)) {
            return bad("boundary edge not covered".into());
        }
        for &(a, b) in &directed {
            if !boundary.contains(&(a, b)) && !directed.contains(&(b, a)) {
                return bad(format!("edge {a}-{b} borders only one cell"));
            }
        }
        Ok(Self::assemble(region, cells, &inner))
    }

    fn assemble(region: Region, mut cells: Vec<Cell>, inner: &BTreeSet<usize>) -> Self {
        cells.sort();
        let mut walls = BTreeSet::new();
        let mut used = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for c in &cells {
            used.extend(c.vertices().iter().copied());
            for (a, b) in c.edges() {
                if seen.contains(&(b, a)) {
                    walls.insert((a.min(b), a.max(b)));
                }
                seen.insert((a, b));
            }
        }
        let unused = inner.iter().filter(|l| !used.contains(l)).copied().collect();
        Subdivision { region, cells, walls: walls.into_iter().collect(), unused }
    }

    /// The one-cell subdivision of a convex region.
    pub fn trivial(config: &Configuration, region: &Region) -> Result<Self> {
        let cell = region
            .as_cell(config)
            .ok_or_else(|| Error::InvalidRegion("trivial subdivision needs a convex region".into()))?;
        Subdivision::new(config, region.clone(), vec![cell])
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn unused(&self) -> &[usize] {
        &self.unused
    }

    pub fn is_trivial(&self) -> bool {
        self.cells.len() == 1
    }

    /// `2·cells − walls − 2`.
    pub fn codimension(&self) -> i64 {
        2 * self.cells.len() as i64 - self.walls.len() as i64 - 2
    }

    /// The two cells sharing a wall, in canonical cell order.
    pub fn wall_cells(&self, wall: Wall) -> (usize, usize) {
        let (i, j) = wall;
        let found: Vec<usize> = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.edges().any(|e| e == (i, j) || e == (j, i)))
            .map(|(k, _)| k)
            .collect();
        assert_eq!(found.len(), 2, "{wall:?} is not a wall");
        (found[0], found[1])
    }

    /// Index of the cell containing an unused label.
    pub fn cell_containing(&self, config: &Configuration, label: usize) -> Option<usize> {
        self.cells.iter().position(|c| strictly_inside_convex(config, c.vertices(), label))
    }

    /// Replaces cell `index` by the cells of `split`, a subdivision of that cell.
    pub fn refine(&self, index: usize, split: &Subdivision) -> Subdivision {
        debug_assert_eq!(split.region().boundary(), self.cells[index].vertices());
        let cells: Vec<Cell> = self
            .cells
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != index)
            .map(|(_, c)| c.clone())
            .chain(split.cells.iter().cloned())
            .collect();
        let used: BTreeSet<usize> = split.cells.iter().flat_map(|c| c.vertices().iter().copied()).collect();
        let inner: BTreeSet<usize> = self
            .unused
            .iter()
            .copied()
            .chain(self.cells.iter().flat_map(|c| c.vertices().iter().copied()))
            .chain(used)
            .filter(|l| !self.region.boundary.contains(l))
            .collect();
        Self::assemble(self.region.clone(), cells, &inner)
    }

    /// Canonical textual id: cells separated by `|`, labels by `,`.
    pub fn key(&self) -> String {
        self.cells.iter().map(ToString::to_string).collect::<Vec<_>>().join("|")
    }

    /// Order used for enumeration output: by wall count, then cells.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.walls.len(), &self.cells).cmp(&(other.walls.len(), &other.cells))
    }

    /// Image under `perm[old] = new`; `config` is the relabeled configuration.
    pub fn relabeled(&self, config: &Configuration, perm: &[usize]) -> Subdivision {
        let region = Region { boundary: canonical_cycle(&self.region.boundary.iter().map(|&l| perm[l]).collect::<Vec<_>>()) };
        let cells = self
            .cells
            .iter()
            .map(|c| Cell { vertices: canonical_cycle(&c.vertices.iter().map(|&l| perm[l]).collect::<Vec<_>>()) })
            .collect();
        let inner = region.interior_labels(config).into_iter().collect();
        Self::assemble(region, cells, &inner)
    }
}

impl fmt::Display for Subdivision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// All convex cells inside the region having `u -> v` as a counterclockwise edge.
fn cells_on_edge(
    config: &Configuration,
    region: &Region,
    convex: bool,
    points: &[usize],
    u: usize,
    v: usize,
) -> Vec<Vec<usize>> {
    let left: Vec<usize> = points.iter().copied().filter(|&w| config.orient(u, v, w) > 0).collect();
    let mut out = Vec::new();
    let mut chain = vec![u, v];
    extend_chain(config, &left, &mut chain, &mut out);
    out.retain(|poly| region.contains_convex(config, poly, convex));
    out
}

fn extend_chain(config: &Configuration, left: &[usize], chain: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let u = chain[0];
    let last = chain[chain.len() - 1];
    let prev = chain[chain.len() - 2];
    for &w in left {
        if chain.contains(&w)
            || config.orient(prev, last, w) <= 0
            || (chain.len() > 2 && config.orient(u, last, w) <= 0)
        {
            continue;
        }
        chain.push(w);
        if config.orient(last, w, u) > 0 && config.orient(w, u, chain[1]) > 0 {
            out.push(chain.clone());
        }
        extend_chain(config, left, chain, out);
        chain.pop();
    }
}

struct Search<'a> {
    config: &'a Configuration,
    region: &'a Region,
    convex: bool,
    points: Vec<usize>,
    candidates: BTreeMap<(usize, usize), Vec<Vec<usize>>>,
    budget: u64,
    nodes: &'a AtomicU64,
}

impl Search<'_> {
    fn candidates(&mut self, e: (usize, usize)) -> Vec<Vec<usize>> {
        if let Some(c) = self.candidates.get(&e) {
            return c.clone();
        }
        let c = cells_on_edge(self.config, self.region, self.convex, &self.points, e.0, e.1);
        self.candidates.insert(e, c.clone());
        c
    }

    fn tick(&self) -> Result<()> {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
            return Err(Error::BudgetExceeded(self.budget));
        }
        Ok(())
    }

    /// Cells that can be placed next: all candidates on the smallest
    /// uncovered edge that avoid the placed cells.
    fn moves(&mut self, placed: &[Vec<usize>], frontier: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
        let Some(&e) = frontier.iter().next() else {
            return Vec::new();
        };
        self.candidates(e)
            .into_iter()
            .filter(|c| placed.iter().all(|p| interiors_disjoint(self.config, p, c)))
            .collect()
    }

    fn place(frontier: &BTreeSet<(usize, usize)>, cell: &[usize]) -> BTreeSet<(usize, usize)> {
        let mut next = frontier.clone();
        let n = cell.len();
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            if !next.remove(&(a, b)) {
                next.insert((b, a));
            }
        }
        next
    }

    fn dfs(
        &mut self,
        placed: &mut Vec<Vec<usize>>,
        frontier: &BTreeSet<(usize, usize)>,
        found: &mut BTreeSet<Vec<Vec<usize>>>,
    ) -> Result<()> {
        self.tick()?;
        if frontier.is_empty() {
            let mut cells: Vec<Vec<usize>> = placed.iter().map(|c| canonical_cycle(c)).collect();
            cells.sort();
            found.insert(cells);
            return Ok(());
        }
        for cell in self.moves(placed, frontier) {
            let next = Self::place(frontier, &cell);
            placed.push(cell);
            self.dfs(placed, &next, found)?;
            placed.pop();
        }
        Ok(())
    }
}

/// Every subdivision of `region`, in canonical order, optionally restricted to
/// codimension at most `max_codim`.
///
/// Depth-first search that always covers the smallest uncovered directed
/// edge; the first level of the search is explored in parallel.
pub fn enumerate_subdivisions(
    config: &Configuration,
    region: &Region,
    max_codim: Option<i64>,
    budget: u64,
) -> Result<Vec<Subdivision>> {
    let convex = region.is_convex(config);
    let inner = region.interior_labels(config);
    let points: Vec<usize> = region.boundary().iter().chain(&inner).copied().collect();
    let nodes = AtomicU64::new(0);
    let new_search = || Search {
        config,
        region,
        convex,
        points: points.clone(),
        candidates: BTreeMap::new(),
        budget,
        nodes: &nodes,
    };
    let frontier: BTreeSet<(usize, usize)> = region.edges().collect();
    let mut root = new_search();
    root.tick()?;
    let first = root.moves(&[], &frontier);
    let branches = exec::try_map(&first, |cell| {
        let mut search = new_search();
        let mut found = BTreeSet::new();
        let mut placed = vec![cell.clone()];
        let next = Search::place(&frontier, cell);
        search.dfs(&mut placed, &next, &mut found)?;
        Ok::<_, Error>(found)
    })?;
    let inner: BTreeSet<usize> = inner.into_iter().collect();
    let mut all: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
    for b in branches {
        all.extend(b);
    }
    let mut out: Vec<Subdivision> = all
        .into_iter()
        .map(|cells| {
            let cells = cells.into_iter().map(|vertices| Cell { vertices }).collect();
            Subdivision::assemble(region.clone(), cells, &inner)
        })
        .filter(|d| max_codim.is_none_or(|m| d.codimension() <= m))
        .collect();
    out.sort_by(Subdivision::canonical_cmp);
    Ok(out)
}

/// The non-trivial subdivisions of one cell with codimension at most `max_codim`.
pub fn refinement_splits(
    config: &Configuration,
    cell: &Cell,
    max_codim: i64,
    budget: u64,
) -> Result<Vec<Subdivision>> {
    Ok(enumerate_subdivisions(config, &cell.as_region(), Some(max_codim), budget)?
        .into_iter()
        .filter(|d| !d.is_trivial())
        .collect())
}

/// One height per configuration label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(pub Vec<Rational>);

impl WeightVector {
    pub fn from_ints(w: &[i64]) -> Self {
        WeightVector(w.iter().map(|&v| Rational::from_integer(v.into())).collect())
    }
}

/// Subdivision of the convex hull cut out by the domains of linearity of
/// the smallest concave function lying above every lifted point.
///
/// Each upper supporting plane through three lifted points contributes the
/// cell spanned by all points it touches; coplanar facets merge automatically.
pub fn subdivision_from_weights(config: &Configuration, w: &WeightVector) -> Subdivision {
    assert_eq!(w.0.len(), config.len(), "one weight per label");
    let n = config.len();
    let region = Region::hull(config);
    if n < 3 {
        unreachable!("a configuration with a two-dimensional hull has at least three points");
    }
    let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let Some(plane) = plane_through(config, w, [i, j, k]) else { continue };
                let mut on = Vec::new();
                let mut supporting = true;
                for p in 0..n {
                    let gap = plane.eval(config, p) - &w.0[p];
                    if gap.is_zero() {
                        on.push(p);
                    } else if gap < Rational::zero() {
                        supporting = false;
                        break;
                    }
                }
                if supporting {
                    faces.insert(on);
                }
            }
        }
    }
    let cells = faces
        .into_iter()
        .map(|on| Cell { vertices: convex_hull(config, &on).cycle })
        .collect();
    let inner = region.interior_labels(config).into_iter().collect();
    Subdivision::assemble(region, cells, &inner)
}

/// Affine function `a·x + b·y + c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineFunction {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
}

impl AffineFunction {
    pub fn eval(&self, config: &Configuration, label: usize) -> Rational {
        let p = config.point(label);
        &self.a * &p.x + &self.b * &p.y + &self.c
    }
}

/// The affine function interpolating `w` at three non-collinear labels.
pub fn plane_through(config: &Configuration, w: &WeightVector, [i, j, k]: [usize; 3]) -> Option<AffineFunction> {
    let (p, q, r) = (config.point(i), config.point(j), config.point(k));
    let u = q.sub(p);
    let v = r.sub(p);
    let det = u.cross(&v);
    if det.is_zero() {
        return None;
    }
    let dw1 = &w.0[j] - &w.0[i];
    let dw2 = &w.0[k] - &w.0[i];
    // a·u.x + b·u.y = dw1, a·v.x + b·v.y = dw2
    let a = (&dw1 * &v.y - &dw2 * &u.y) / &det;
    let b = (&u.x * &dw2 - &v.x * &dw1) / &det;
    let c = &w.0[i] - &a * &p.x - &b * &p.y;
    Some(AffineFunction { a, b, c })
}
