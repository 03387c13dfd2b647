//! Signed basis elements, the differential over perturbedly regular
//! codimension-one splits, composition by gluing along an edge, the assembled
//! chain complex and its checks.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{point_in_polygon, segments_intersect, Configuration};
use crate::linalg;
use crate::rational::{self, Rational};
use crate::rigidity::{dual_gwd, prep_feasible, rep_system, Gwd, PerturbationScheme};
use crate::subdivision::{enumerate_subdivisions, refinement_splits, Cell, Region, Subdivision, Wall};

/// A subdivision with an ordering of its walls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisElement {
    pub subdivision: Subdivision,
    pub wall_order: Vec<Wall>,
}

impl BasisElement {
    pub fn canonical(subdivision: Subdivision) -> Self {
        let wall_order = subdivision.walls().to_vec();
        BasisElement { subdivision, wall_order }
    }

    /// Sorts the wall order, returning the sign of the permutation applied.
    pub fn canonicalize(mut self) -> (Subdivision, i64) {
        let sign = permutation_sign(&self.wall_order);
        self.wall_order.sort();
        debug_assert_eq!(self.wall_order, self.subdivision.walls());
        (self.subdivision, sign)
    }
}

/// Sign of the permutation sorting `items` (which must be distinct).
pub fn permutation_sign<T: Ord>(items: &[T]) -> i64 {
    let mut inversions = 0usize;
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            if items[i] > items[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) { 1 } else { -1 }
}

/// Formal integer combination of canonically ordered basis elements.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainElement {
    terms: BTreeMap<Subdivision, i64>,
}

impl ChainElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(d: Subdivision) -> Self {
        let mut c = Self::zero();
        c.add_term(d, 1);
        c
    }

    pub fn from_element(b: BasisElement, coeff: i64) -> Self {
        let mut c = Self::zero();
        c.add_element(b, coeff);
        c
    }

    pub fn add_term(&mut self, d: Subdivision, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let entry = self.terms.entry(d.clone()).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.terms.remove(&d);
        }
    }

    pub fn add_element(&mut self, b: BasisElement, coeff: i64) {
        let (d, sign) = b.canonicalize();
        self.add_term(d, sign * coeff);
    }

    pub fn add(&mut self, other: &ChainElement, factor: i64) {
        for (d, c) in &other.terms {
            self.add_term(d.clone(), c * factor);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, d: &Subdivision) -> i64 {
        self.terms.get(d).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Subdivision, i64)> {
        self.terms.iter().map(|(d, &c)| (d, c))
    }

    /// The region shared by all terms.
    pub fn region(&self) -> Result<Option<&Region>> {
        let mut regions = self.terms.keys().map(Subdivision::region);
        let Some(first) = regions.next() else { return Ok(None) };
        if regions.any(|r| r != first) {
            return Err(Error::MixedRegions);
        }
        Ok(Some(first))
    }

    /// Image under a relabeling (`perm[old] = new`) with the sign of
    /// re-sorting each wall order; `image` is the relabeled configuration.
    pub fn relabeled(&self, image: &Configuration, perm: &[usize]) -> ChainElement {
        let mut out = ChainElement::zero();
        for (d, c) in self.iter() {
            let image = d.relabeled(image, perm);
            let order: Vec<Wall> = d
                .walls()
                .iter()
                .map(|&(i, j)| (perm[i].min(perm[j]), perm[i].max(perm[j])))
                .collect();
            out.add_element(BasisElement { subdivision: image, wall_order: order }, c);
        }
        out
    }
}

impl std::fmt::Display for ChainElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.iter().map(|(d, c)| format!("{c:+}[{d}]")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Data entering the sign of a split: the representation matrix at
/// perturbed directions, a positive kernel ray and right inverses of the
/// standard basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SignData {
    pub matrix: linalg::Matrix,
    pub ray: Vec<Rational>,
    pub inverses: Vec<Vec<Rational>>,
}

impl SignData {
    pub fn new(gwd: &Gwd, scheme: &PerturbationScheme) -> Result<Self> {
        let rep = prep_feasible(gwd, Some(scheme)).ok_or(Error::NotPerturbedlyRegular)?;
        let matrix = rep_system(gwd, Some(scheme)).matrix;
        let e = matrix.len();
        let inverses = (0..e)
            .map(|j| {
                let mut b = vec![Rational::zero(); e];
                b[j] = rational::int(1);
                linalg::solve(&matrix, &b).ok_or(Error::NotPerturbedlyRegular)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SignData { matrix, ray: rep.flat(), inverses })
    }

    /// Sign of `det[t_x, t_y, r, u_1, ..., u_e]`.
    pub fn sign(&self) -> i8 {
        let n = self.ray.len();
        let tx: Vec<Rational> = (0..n).map(|i| rational::int(i64::from(i % 2 == 0))).collect();
        let ty: Vec<Rational> = (0..n).map(|i| rational::int(i64::from(i % 2 == 1))).collect();
        let cols: Vec<&Vec<Rational>> = [&tx, &ty, &self.ray].into_iter().chain(&self.inverses).collect();
        let m: linalg::Matrix = (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        rational::sign(&linalg::determinant(&m))
    }
}

/// Canonical sign of a perturbedly regular codimension-one split, with
/// representation rows in the split's sorted wall order.
pub fn sigma(config: &Configuration, split: &Subdivision, scheme: &PerturbationScheme) -> Result<i8> {
    sigma_with_order(config, split, scheme, split.walls())
}

/// The same sign with rows taken in an arbitrary wall order.
pub fn sigma_with_order(
    config: &Configuration,
    split: &Subdivision,
    scheme: &PerturbationScheme,
    order: &[Wall],
) -> Result<i8> {
    if split.codimension() != 1 {
        return Err(Error::NotCodimOne(split.codimension()));
    }
    let mut gwd = dual_gwd(config, split);
    gwd.edges = order
        .iter()
        .map(|w| gwd.edges.iter().find(|e| e.wall == *w).cloned().ok_or(Error::InvalidSubdivision(format!("{w:?} is not a wall"))))
        .collect::<Result<_>>()?;
    Ok(SignData::new(&gwd, scheme)?.sign())
}

/// One entry of a sign table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedSplit {
    pub split: Subdivision,
    pub sigma: i8,
}

/// The perturbedly regular codimension-one splits of a set of cells with
/// their signs. Entries are numbered in cell order, then split order;
/// `flip` negates one of them (a fault-injection hook).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignTable {
    pub scheme: Option<PerturbationScheme>,
    entries: BTreeMap<Cell, Vec<SignedSplit>>,
}

impl SignTable {
    pub fn build<'a>(
        config: &Configuration,
        cells: impl IntoIterator<Item = &'a Cell>,
        scheme: &PerturbationScheme,
        budget: u64,
    ) -> Result<Self> {
        let cells: Vec<Cell> = cells.into_iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let rows = exec::try_map(&cells, |c| signed_splits(config, c, scheme, budget))?;
        Ok(SignTable { scheme: Some(scheme.clone()), entries: cells.into_iter().zip(rows).collect() })
    }

    pub fn splits(&self, cell: &Cell) -> Option<&[SignedSplit]> {
        self.entries.get(cell).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Cell, &SignedSplit)> {
        self.entries.iter().flat_map(|(c, v)| v.iter().map(move |s| (c, s)))
    }

    /// Negates entry `index`; false when out of range.
    pub fn flip(&mut self, index: usize) -> bool {
        let Some(entry) = self.entries.values_mut().flat_map(|v| v.iter_mut()).nth(index) else {
            return false;
        };
        entry.sigma = -entry.sigma;
        true
    }
}

fn signed_splits(config: &Configuration, cell: &Cell, scheme: &PerturbationScheme, budget: u64) -> Result<Vec<SignedSplit>> {
    let mut out = Vec::new();
    for split in refinement_splits(config, cell, 1, budget)? {
        if split.codimension() != 1 {
            continue;
        }
        let gwd = dual_gwd(config, &split);
        if prep_feasible(&gwd, Some(scheme)).is_none() {
            continue;
        }
        let sigma = SignData::new(&gwd, scheme)?.sign();
        out.push(SignedSplit { split, sigma });
    }
    Ok(out)
}

/// One summand of the differential of a basis element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DifferentialTerm {
    #[serde(skip)]
    pub target: Subdivision,
    pub cell: usize,
    pub sigma: i8,
    /// `(−1)^walls` of the source.
    pub prefactor: i8,
    /// Sign of sorting the appended wall order.
    pub permutation_sign: i8,
}

impl DifferentialTerm {
    pub fn coefficient(&self) -> i64 {
        i64::from(self.sigma) * i64::from(self.prefactor) * i64::from(self.permutation_sign)
    }
}

/// The differential of one canonically ordered basis element, term by term.
pub fn differential_terms(table: &SignTable, d: &Subdivision) -> Result<Vec<DifferentialTerm>> {
    let prefactor: i8 = if d.walls().len().is_multiple_of(2) { 1 } else { -1 };
    let mut out = Vec::new();
    for (index, cell) in d.cells().iter().enumerate() {
        let splits = table.splits(cell).ok_or_else(|| Error::InvalidSubdivision(format!("cell {cell} missing from sign table")))?;
        for s in splits {
            let target = d.refine(index, &s.split);
            let order: Vec<Wall> = d.walls().iter().chain(s.split.walls()).copied().collect();
            let (target, perm) = BasisElement { subdivision: target, wall_order: order }.canonicalize();
            out.push(DifferentialTerm { target, cell: index, sigma: s.sigma, prefactor, permutation_sign: perm as i8 });
        }
    }
    Ok(out)
}

pub fn differential_with(table: &SignTable, element: &ChainElement) -> Result<ChainElement> {
    element.region()?;
    let mut out = ChainElement::zero();
    for (d, c) in element.iter() {
        for t in differential_terms(table, d)? {
            let k = t.coefficient();
            out.add_term(t.target, c * k);
        }
    }
    Ok(out)
}

/// Differential of a chain, building signs for the cells it touches.
pub fn differential(
    config: &Configuration,
    element: &ChainElement,
    scheme: &PerturbationScheme,
    budget: u64,
) -> Result<ChainElement> {
    let table = SignTable::build(config, element.iter().flat_map(|(d, _)| d.cells()), scheme, budget)?;
    differential_with(&table, element)
}

fn regions_overlap(config: &Configuration, q1: &Region, q2: &Region) -> bool {
    let e1: BTreeSet<Wall> = q1.edges().collect();
    let e2: BTreeSet<Wall> = q2.edges().collect();
    if e1.intersection(&e2).next().is_some() {
        return true;
    }
    let crossing = e1.iter().any(|&(a, b)| {
        e2.iter().any(|&(c, d)| {
            ![c, d].contains(&a)
                && ![c, d].contains(&b)
                && segments_intersect(config.point(a), config.point(b), config.point(c), config.point(d))
        })
    });
    let inside = |poly: &[usize], other: &[usize]| {
        other.iter().any(|&l| !poly.contains(&l) && point_in_polygon(config, poly, config.point(l)))
    };
    crossing || inside(q1.boundary(), q2.boundary()) || inside(q2.boundary(), q1.boundary())
}

/// Chains the boundary edges of both regions, minus the shared ones, into a
/// single simple cycle.
fn union_region(config: &Configuration, q1: &Region, q2: &Region, shared: &BTreeSet<Wall>) -> Result<Region> {
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for (a, b) in q1.edges().chain(q2.edges()) {
        if shared.contains(&(a, b)) || shared.contains(&(b, a)) {
            continue;
        }
        if next.insert(a, b).is_some() {
            return Err(Error::UnionNotSimple);
        }
    }
    let start = *next.keys().next().ok_or(Error::UnionNotSimple)?;
    let mut cycle = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if cycle.len() > next.len() {
            return Err(Error::UnionNotSimple);
        }
        cycle.push(cur);
        cur = *next.get(&cur).ok_or(Error::UnionNotSimple)?;
    }
    if cycle.len() != next.len() {
        return Err(Error::UnionNotSimple);
    }
    Region::new(config, &cycle).map_err(|_| Error::UnionNotSimple)
}

/// Boundary of the union of two regions glued along `g`.
pub fn glue_regions(config: &Configuration, q1: &Region, g: Wall, q2: &Region) -> Result<Region> {
    let (u, v) = g;
    let has = |q: &Region| q.edges().any(|e| e == (u, v) || e == (v, u));
    if !has(q1) || !has(q2) {
        return Err(Error::NotSharedEdge(u, v));
    }
    if regions_overlap(config, q1, q2) {
        return Err(Error::RegionsOverlap);
    }
    union_region(config, q1, q2, &BTreeSet::from([(u, v)]))
}

/// Glues two basis elements along `g`, wall order `(ω_a, g, ω_b)`.
pub fn compose_basis(config: &Configuration, a: &Subdivision, g: Wall, b: &Subdivision) -> Result<(Subdivision, i64)> {
    let region = glue_regions(config, a.region(), g, b.region())?;
    let cells: Vec<Cell> = a.cells().iter().chain(b.cells()).cloned().collect();
    let union = Subdivision::new(config, region, cells)?;
    let glued = (g.0.min(g.1), g.0.max(g.1));
    let order: Vec<Wall> = a.walls().iter().copied().chain([glued]).chain(b.walls().iter().copied()).collect();
    Ok(BasisElement { subdivision: union, wall_order: order }.canonicalize())
}

/// Bilinear extension of [`compose_basis`].
pub fn compose(config: &Configuration, a: &ChainElement, g: Wall, b: &ChainElement) -> Result<ChainElement> {
    a.region()?;
    b.region()?;
    let mut out = ChainElement::zero();
    for (da, ca) in a.iter() {
        for (db, cb) in b.iter() {
            let (d, sign) = compose_basis(config, da, g, db)?;
            out.add_term(d, ca * cb * sign);
        }
    }
    Ok(out)
}

/// Unsigned union of two subdivisions whose regions share one or more
/// boundary edges.
pub fn glue_unsigned(config: &Configuration, a: &Subdivision, b: &Subdivision) -> Result<Subdivision> {
    let e2: BTreeSet<Wall> = b.region().edges().collect();
    let shared: BTreeSet<Wall> = a.region().edges().filter(|&(u, v)| e2.contains(&(v, u))).collect();
    if shared.is_empty() {
        return Err(Error::UnionNotSimple);
    }
    if regions_overlap(config, a.region(), b.region()) {
        return Err(Error::RegionsOverlap);
    }
    let region = union_region(config, a.region(), b.region(), &shared)?;
    Subdivision::new(config, region, a.cells().iter().chain(b.cells()).cloned().collect())
}

/// Pairs of distinct convex cells sharing an edge whose union is a simple
/// polygon, with the shared edge oriented as in the first cell.
pub fn composable_cell_pairs<'a>(config: &Configuration, cells: impl IntoIterator<Item = &'a Cell>) -> Vec<(Region, Wall, Region)> {
    let cells: Vec<Region> = cells.into_iter().map(Cell::as_region).collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = Vec::new();
    for q1 in &cells {
        for q2 in &cells {
            for (u, v) in q1.edges() {
                if q2.edges().any(|e| e == (v, u)) && glue_regions(config, q1, (u, v), q2).is_ok() {
                    out.push((q1.clone(), (u, v), q2.clone()));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeibnizFailure {
    pub a: String,
    pub glued: Wall,
    pub b: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeibnizReport {
    pub ok: bool,
    pub checked: usize,
    pub failures: Vec<LeibnizFailure>,
}

/// `∂(a∘b) = ∂a∘b + (−1)^(walls(a)+1)·a∘∂b` for one pair of basis elements.
pub fn leibniz_holds(config: &Configuration, table: &SignTable, a: &Subdivision, g: Wall, b: &Subdivision) -> Result<Option<LeibnizFailure>> {
    let ca = ChainElement::basis(a.clone());
    let cb = ChainElement::basis(b.clone());
    let lhs = differential_with(table, &compose(config, &ca, g, &cb)?)?;
    let mut rhs = compose(config, &differential_with(table, &ca)?, g, &cb)?;
    let parity = if (a.walls().len() + 1).is_multiple_of(2) { 1 } else { -1 };
    rhs.add(&compose(config, &ca, g, &differential_with(table, &cb)?)?, parity);
    Ok((lhs != rhs).then(|| LeibnizFailure { a: a.key(), glued: g, b: b.key(), lhs: lhs.to_string(), rhs: rhs.to_string() }))
}

/// Checks the Leibniz identity on every pair of basis elements over the
/// given region pairs.
pub fn leibniz_check(
    config: &Configuration,
    table: &SignTable,
    pairs: &[(Region, Wall, Region)],
    budget: u64,
) -> Result<LeibnizReport> {
    let regions: BTreeSet<&Region> = pairs.iter().flat_map(|(q1, _, q2)| [q1, q2]).collect();
    let mut subs: BTreeMap<&Region, Vec<Subdivision>> = BTreeMap::new();
    for q in regions {
        subs.insert(q, enumerate_subdivisions(config, q, None, budget)?);
    }
    let results = exec::try_map(pairs, |(q1, g, q2)| {
        let mut fails = Vec::new();
        let mut n = 0;
        for a in &subs[q1] {
            for b in &subs[q2] {
                n += 1;
                fails.extend(leibniz_holds(config, table, a, *g, b)?);
            }
        }
        Ok::<_, Error>((n, fails))
    })?;
    let checked = results.iter().map(|r| r.0).sum();
    let failures: Vec<LeibnizFailure> = results.into_iter().flat_map(|r| r.1).collect();
    Ok(LeibnizReport { ok: failures.is_empty(), checked, failures })
}

/// Every subdivision of a region graded by wall count, with the
/// differential as a sparse integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainComplex {
    pub region: Region,
    /// Canonical order: by wall count, then cells.
    pub basis: Vec<Subdivision>,
    /// `(row = target, col = source, value)`, sorted.
    pub entries: Vec<(usize, usize, i64)>,
    pub terms: Vec<Vec<DifferentialTerm>>,
    pub seed: u64,
    pub t: Rational,
    pub budget: u64,
}

pub fn chain_complex(config: &Configuration, region: &Region, scheme: &PerturbationScheme, budget: u64) -> Result<ChainComplex> {
    let basis = enumerate_subdivisions(config, region, None, budget)?;
    let table = SignTable::build(config, basis.iter().flat_map(|d| d.cells()), scheme, budget)?;
    chain_complex_with(region, basis, &table, budget)
}

pub fn chain_complex_with(region: &Region, basis: Vec<Subdivision>, table: &SignTable, budget: u64) -> Result<ChainComplex> {
    let scheme = table.scheme.as_ref().expect("table built from a scheme");
    let index: BTreeMap<&Subdivision, usize> = basis.iter().enumerate().map(|(i, d)| (d, i)).collect();
    let terms = exec::try_map(&basis, |d| differential_terms(table, d))?;
    let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for (col, ts) in terms.iter().enumerate() {
        for t in ts {
            let row = *index.get(&t.target).ok_or_else(|| Error::InvalidSubdivision(format!("{} not in basis", t.target)))?;
            *acc.entry((row, col)).or_insert(0) += t.coefficient();
        }
    }
    let entries = acc.into_iter().filter(|(_, v)| *v != 0).map(|((r, c), v)| (r, c, v)).collect();
    Ok(ChainComplex {
        region: region.clone(),
        basis,
        entries,
        terms,
        seed: scheme.seed,
        t: scheme.t.clone(),
        budget,
    })
}

impl ChainComplex {
    /// Basis sizes indexed by wall count.
    pub fn sizes(&self) -> Vec<usize> {
        let max = self.basis.iter().map(|d| d.walls().len()).max().unwrap_or(0);
        let mut out = vec![0; max + 1];
        for d in &self.basis {
            out[d.walls().len()] += 1;
        }
        out
    }

    /// Basis indices grouped by wall count.
    pub fn degrees(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, d) in self.basis.iter().enumerate() {
            out.entry(d.walls().len()).or_default().push(i);
        }
        out
    }

    /// The block of the differential from wall count `from` to wall count `to`.
    pub fn block(&self, from: usize, to: usize) -> Vec<(usize, usize, i64)> {
        self.entries
            .iter()
            .filter(|&&(r, c, _)| self.basis[c].walls().len() == from && self.basis[r].walls().len() == to)
            .copied()
            .collect()
    }

    /// Dense matrix from codimension `k` to `k + 1`.
    fn codim_matrix(&self, k: i64) -> linalg::Matrix {
        let src: Vec<usize> = (0..self.basis.len()).filter(|&i| self.basis[i].codimension() == k).collect();
        let dst: Vec<usize> = (0..self.basis.len()).filter(|&i| self.basis[i].codimension() == k + 1).collect();
        let mut m = vec![vec![Rational::zero(); src.len()]; dst.len()];
        for &(r, c, v) in &self.entries {
            if let (Some(i), Some(j)) = (dst.iter().position(|&x| x == r), src.iter().position(|&x| x == c)) {
                m[i][j] = rational::int(v);
            }
        }
        m
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.entries.iter().filter(move |e| e.1 == col).map(|&(r, _, v)| (r, v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub via: String,
    pub first: DifferentialTerm,
    pub second: DifferentialTerm,
    pub sign: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DSquaredFailure {
    pub source: String,
    /// The codimension-two witness.
    pub target: String,
    pub value: i64,
    pub paths: Vec<PathStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DSquaredReport {
    pub ok: bool,
    /// `(source, target)` pairs reached by at least one two-step path.
    pub pairs_checked: usize,
    /// Total number of two-step paths, all of which must cancel in pairs.
    pub paths: usize,
    pub failures: Vec<DSquaredFailure>,
}

pub fn verify_d_squared(complex: &ChainComplex) -> DSquaredReport {
    let index: BTreeMap<&Subdivision, usize> = complex.basis.iter().enumerate().map(|(i, d)| (d, i)).collect();
    let per_source = exec::map_range(complex.basis.len(), |src| {
        let mut by_target: BTreeMap<usize, Vec<PathStep>> = BTreeMap::new();
        for first in &complex.terms[src] {
            let mid = index[&first.target];
            for second in &complex.terms[mid] {
                let sign = first.coefficient() * second.coefficient();
                by_target.entry(index[&second.target]).or_default().push(PathStep {
                    via: first.target.key(),
                    first: first.clone(),
                    second: second.clone(),
                    sign,
                });
            }
        }
        by_target
    });
    let mut report = DSquaredReport { ok: true, pairs_checked: 0, paths: 0, failures: Vec::new() };
    for (src, by_target) in per_source.into_iter().enumerate() {
        for (dst, paths) in by_target {
            report.pairs_checked += 1;
            report.paths += paths.len();
            let plus = paths.iter().filter(|p| p.sign > 0).count();
            let minus = paths.len() - plus;
            if plus != minus {
                report.ok = false;
                report.failures.push(DSquaredFailure {
                    source: complex.basis[src].key(),
                    target: complex.basis[dst].key(),
                    value: plus as i64 - minus as i64,
                    paths,
                });
            }
        }
    }
    report
}

/// Homology ranks over the rationals, graded by codimension (the
/// differential raises codimension by exactly one). Returns
/// `(codimension, rank)` pairs.
pub fn homology_ranks(complex: &ChainComplex) -> Result<Vec<(i64, usize)>> {
    if !verify_d_squared(complex).ok {
        return Err(Error::DSquaredNonzero);
    }
    let codims: BTreeSet<i64> = complex.basis.iter().map(Subdivision::codimension).collect();
    let (Some(&lo), Some(&hi)) = (codims.first(), codims.last()) else { return Ok(Vec::new()) };
    let rank_out: BTreeMap<i64, usize> = (lo..=hi).map(|k| (k, linalg::rank(&complex.codim_matrix(k)))).collect();
    Ok((lo..=hi)
        .map(|k| {
            let dim = complex.basis.iter().filter(|d| d.codimension() == k).count();
            let incoming = if k > lo { rank_out[&(k - 1)] } else { 0 };
            (k, dim - rank_out[&k] - incoming)
        })
        .collect())
}

pub fn total_homology_rank(complex: &ChainComplex) -> Result<usize> {
    Ok(homology_ranks(complex)?.iter().map(|(_, r)| r).sum())
}

/// Serializable summary of a complex: ids per wall count, matrix triples and
/// provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexReport {
    pub region: Vec<usize>,
    pub degrees: BTreeMap<usize, Vec<String>>,
    pub ids: Vec<String>,
    pub entries: Vec<(usize, usize, i64)>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub t: String,
    pub budget: u64,
}

impl ChainComplex {
    pub fn report(&self) -> ComplexReport {
        ComplexReport {
            region: self.region.boundary().to_vec(),
            degrees: self
                .degrees()
                .into_iter()
                .map(|(k, ids)| (k, ids.into_iter().map(|i| self.basis[i].key()).collect()))
                .collect(),
            ids: self.basis.iter().map(Subdivision::key).collect(),
            entries: self.entries.clone(),
            provenance: Provenance { seed: self.seed, t: rational::format_rational(&self.t), budget: self.budget },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::stabilize_t;
    use crate::subdivision::DEFAULT_BUDGET;

    fn setup(pts: &[(i64, i64)]) -> (Configuration, Region, PerturbationScheme) {
        let c = Configuration::from_ints(pts).unwrap();
        let r = Region::hull(&c);
        let s = stabilize_t(&c, &r, 1, DEFAULT_BUDGET).unwrap();
        (c, r, s)
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[1, 2, 3]), 1);
        assert_eq!(permutation_sign(&[2, 1, 3]), -1);
        assert_eq!(permutation_sign(&[3, 1, 2]), 1);
        assert_eq!(permutation_sign::<u8>(&[]), 1);
    }

    #[test]
    fn chain_arithmetic() {
        let (c, r, _) = setup(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let subs = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap();
        let mut x = ChainElement::basis(subs[1].clone());
        x.add_term(subs[1].clone(), -1);
        assert!(x.is_zero());
        x.add_term(subs[2].clone(), 3);
        assert_eq!(x.coefficient(&subs[2]), 3);
        assert_eq!(x.len(), 1);
    }

    #[test]
    fn square_differential() {
        let (c, r, s) = setup(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let subs = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap();
        let d = differential(&c, &ChainElement::basis(subs[0].clone()), &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|(_, k)| k.abs() == 1));
        for t in &subs[1..] {
            let dd = differential(&c, &ChainElement::basis(t.clone()), &s, DEFAULT_BUDGET).unwrap();
            assert!(dd.is_zero());
        }
    }

    #[test]
    fn triangle_interior_differential_hits_star() {
        let (c, r, s) = setup(&[(0, 0), (3, 0), (0, 3), (1, 1)]);
        let subs = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap();
        let d = differential(&c, &ChainElement::basis(subs[0].clone()), &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.coefficient(&subs[1]).abs(), 1);
        let cx = chain_complex(&c, &r, &s, DEFAULT_BUDGET).unwrap();
        assert_eq!(cx.sizes(), vec![1, 0, 0, 1]);
        assert_eq!(cx.block(0, 3).len(), 1);
        assert!(verify_d_squared(&cx).ok);
    }

    #[test]
    fn sigma_requires_codim_one() {
        let (c, r, s) = setup(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let subs = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap();
        assert_eq!(sigma(&c, &subs[0], &s), Err(Error::NotCodimOne(0)));
        assert!(sigma(&c, &subs[1], &s).is_ok());
    }

    #[test]
    fn sigma_choice_invariance() {
        let (c, r, s) = setup(&[(0, 0), (3, 0), (0, 3), (1, 1)]);
        let star = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap().pop().unwrap();
        let gwd = dual_gwd(&c, &star);
        let data = SignData::new(&gwd, &s).unwrap();
        let base = data.sign();
        let kernel = rep_system(&gwd, Some(&s)).kernel;
        let mut shifted = data.clone();
        for (j, u) in shifted.inverses.iter_mut().enumerate() {
            for (x, k) in u.iter_mut().zip(&kernel[j % kernel.len()]) {
                *x += k * rational::int(j as i64 + 2);
            }
        }
        assert_eq!(shifted.sign(), base);
        let mut scaled = data.clone();
        scaled.ray.iter_mut().for_each(|x| *x *= rational::int(5));
        assert_eq!(scaled.sign(), base);
        let mut order = star.walls().to_vec();
        order.swap(0, 1);
        assert_eq!(sigma_with_order(&c, &star, &s, &order).unwrap(), -base);
    }

    #[test]
    fn sigma_ignores_orientation_convention() {
        let (c, r, s) = setup(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let diag = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap()[1].clone();
        let gwd = dual_gwd(&c, &diag);
        let mut flipped = gwd.clone();
        for e in &mut flipped.edges {
            e.cells = (e.cells.1, e.cells.0);
            e.direction = e.direction.neg();
        }
        assert_eq!(SignData::new(&gwd, &s).unwrap().sign(), SignData::new(&flipped, &s).unwrap().sign());
    }

    #[test]
    fn glue_two_triangles() {
        let c = Configuration::from_ints(&[(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap();
        let t1 = Subdivision::trivial(&c, &Region::new(&c, &[0, 1, 3]).unwrap()).unwrap();
        let t2 = Subdivision::trivial(&c, &Region::new(&c, &[0, 3, 2]).unwrap()).unwrap();
        let (d, sign) = compose_basis(&c, &t1, (0, 3), &t2).unwrap();
        assert_eq!(d.walls(), [(0, 3)]);
        assert_eq!(sign, 1);
        assert_eq!(compose_basis(&c, &t1, (0, 1), &t2), Err(Error::NotSharedEdge(0, 1)));
        assert_eq!(compose_basis(&c, &t1, (0, 3), &t1), Err(Error::RegionsOverlap));
        assert_eq!(glue_unsigned(&c, &t1, &t2).unwrap(), d);
    }

    #[test]
    fn glue_rejects_pinched_union() {
        let c = Configuration::from_ints(&[(0, 0), (4, 0), (2, 3), (-1, 2), (-3, 5), (-4, -3), (5, -3)]).unwrap();
        let tri = Region::new(&c, &[0, 1, 2]).unwrap();
        // wraps around the triangle and touches it again at label 2
        let cup = Region::new(&c, &[1, 0, 3, 2, 4, 5, 6]).unwrap();
        assert_eq!(glue_regions(&c, &tri, (0, 1), &cup), Err(Error::UnionNotSimple));
        assert_eq!(glue_regions(&c, &tri, (0, 1), &tri), Err(Error::RegionsOverlap));
    }

    #[test]
    fn mixed_regions_rejected() {
        let c = Configuration::from_ints(&[(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap();
        let t1 = Subdivision::trivial(&c, &Region::new(&c, &[0, 1, 3]).unwrap()).unwrap();
        let t2 = Subdivision::trivial(&c, &Region::new(&c, &[0, 3, 2]).unwrap()).unwrap();
        let mut x = ChainElement::basis(t1);
        x.add_term(t2, 1);
        assert_eq!(x.region(), Err(Error::MixedRegions));
    }

    #[test]
    fn flip_hook_breaks_d_squared() {
        let (c, r, s) = setup(&[(0, 0), (2, 0), (3, 2), (1, 3), (-1, 2)]);
        let basis = enumerate_subdivisions(&c, &r, None, DEFAULT_BUDGET).unwrap();
        let mut table = SignTable::build(&c, basis.iter().flat_map(|d| d.cells()), &s, DEFAULT_BUDGET).unwrap();
        let cx = chain_complex_with(&r, basis.clone(), &table, DEFAULT_BUDGET).unwrap();
        assert!(verify_d_squared(&cx).ok);
        assert_eq!(total_homology_rank(&cx), Ok(1));
        assert!(table.flip(0));
        assert!(!table.flip(table.len()));
        let bad = chain_complex_with(&r, basis, &table, DEFAULT_BUDGET).unwrap();
        let rep = verify_d_squared(&bad);
        assert!(!rep.ok);
        assert_eq!(homology_ranks(&bad), Err(Error::DSquaredNonzero));
        let f = &rep.failures[0];
        assert!(f.paths.len() >= 2);
    }
}
