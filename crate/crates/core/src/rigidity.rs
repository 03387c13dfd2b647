//! Graphs with directions dual to subdivisions, their representation spaces,
//! too-rigid detection, and the generic perturbation of wall directions.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{Configuration, Vector};
use crate::linalg;
use crate::lp::{lp_feasible, lp_minimize, LinearProgram, LpOutcome, Relation};
use crate::rational::{self, Rational};
use crate::regularity::{is_regular, outward_normal};
use crate::subdivision::{enumerate_subdivisions, Region, Subdivision, Wall};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GwdEdge {
    pub wall: Wall,
    /// Cell indices `a < b`.
    pub cells: (usize, usize),
    /// Normal to the wall, pointing into cell `a`.
    pub direction: Vector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutgoingEdge {
    pub cell: usize,
    pub edge: (usize, usize),
    pub direction: Vector,
}

/// Graph with directions: one vertex per cell, one internal edge per wall and
/// one outgoing edge per region boundary edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gwd {
    pub num_vertices: usize,
    pub edges: Vec<GwdEdge>,
    pub outgoing: Vec<OutgoingEdge>,
}

pub fn dual_gwd(config: &Configuration, d: &Subdivision) -> Gwd {
    let edges = d
        .walls()
        .iter()
        .map(|&(i, j)| {
            let (a, b) = d.wall_cells((i, j));
            let left = config.point(j).sub(config.point(i)).rot90();
            let a_on_left = d.cells()[a].edges().any(|e| e == (i, j));
            let direction = if a_on_left { left } else { left.neg() };
            GwdEdge { wall: (i, j), cells: (a, b), direction }
        })
        .collect();
    let outgoing = d
        .region()
        .edges()
        .map(|e| {
            let cell = d.cells().iter().position(|c| c.edges().any(|x| x == e)).expect("covered");
            OutgoingEdge { cell, edge: e, direction: outward_normal(config, e) }
        })
        .collect();
    Gwd { num_vertices: d.cells().len(), edges, outgoing }
}

impl Gwd {
    /// Internal edge directions, perturbed when a scheme is given.
    pub fn directions(&self, scheme: Option<&PerturbationScheme>) -> Vec<Vector> {
        self.edges
            .iter()
            .map(|e| match scheme {
                Some(s) => s.perturb(e.wall, &e.direction),
                None => e.direction.clone(),
            })
            .collect()
    }

    /// Whether outgoing directions at every vertex positively span the plane.
    pub fn outgoing_span_plane(&self) -> bool {
        (0..self.num_vertices).all(|v| {
            let mut dirs: Vec<Vector> = self.outgoing.iter().filter(|o| o.cell == v).map(|o| o.direction.clone()).collect();
            for e in &self.edges {
                if e.cells.0 == v {
                    dirs.push(e.direction.neg());
                } else if e.cells.1 == v {
                    dirs.push(e.direction.clone());
                }
            }
            positively_spanning(&dirs)
        })
    }
}

/// No closed half-plane through the origin contains all the vectors.
fn positively_spanning(dirs: &[Vector]) -> bool {
    let all_in = |n: &Vector| dirs.iter().all(|d| d.dot(n) >= Rational::zero());
    !dirs.iter().any(|d| all_in(&d.rot90()) || all_in(&d.rot90().neg()))
}

/// Linear system whose kernel is the space of representations: positions
/// `(x_0, y_0, x_1, y_1, ...)` with every edge difference parallel to its
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct RepSystem {
    pub matrix: linalg::Matrix,
    pub rank: usize,
    pub kernel: Vec<Vec<Rational>>,
}

pub fn rep_system(gwd: &Gwd, scheme: Option<&PerturbationScheme>) -> RepSystem {
    let cols = 2 * gwd.num_vertices;
    let matrix: linalg::Matrix = gwd
        .edges
        .iter()
        .zip(gwd.directions(scheme))
        .map(|(e, d)| {
            let (a, b) = e.cells;
            let mut row = vec![Rational::zero(); cols];
            // cross(p_b - p_a, d)
            row[2 * b] += &d.y;
            row[2 * a] -= &d.y;
            row[2 * b + 1] -= &d.x;
            row[2 * a + 1] += &d.x;
            row
        })
        .collect();
    let kernel = linalg::kernel_basis(&matrix, cols);
    let rank = cols - kernel.len();
    RepSystem { matrix, rank, kernel }
}

/// `(rank, dimension of Rep modulo translations)`.
pub fn rep_dim(gwd: &Gwd, scheme: Option<&PerturbationScheme>) -> (usize, i64) {
    let cols = 2 * gwd.num_vertices;
    let matrix = rep_system(gwd, scheme).matrix;
    let rank = if matrix.is_empty() { 0 } else { linalg::rank(&matrix) };
    (rank, cols as i64 - rank as i64 - 2)
}

/// `2v − e − 2`.
pub fn expected_rep_dim(gwd: &Gwd) -> i64 {
    2 * gwd.num_vertices as i64 - gwd.edges.len() as i64 - 2
}

pub fn is_too_rigid(gwd: &Gwd) -> bool {
    rep_dim(gwd, None).0 < gwd.edges.len()
}

pub fn is_too_rigid_at(gwd: &Gwd, scheme: &PerturbationScheme) -> bool {
    rep_dim(gwd, Some(scheme)).0 < gwd.edges.len()
}

/// A representation with `p_b − p_a = λ_e·d_e` and every `λ_e ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveRep {
    pub positions: Vec<Vector>,
    pub lambdas: Vec<Rational>,
}

impl PositiveRep {
    /// Positions flattened as `(x_0, y_0, x_1, ...)`.
    pub fn flat(&self) -> Vec<Rational> {
        self.positions.iter().flat_map(|p| [p.x.clone(), p.y.clone()]).collect()
    }
}

/// Edge scalars `λ_k = lower_k + μ_k` with `μ_k ≥ 0` (variables `0..e`), plus
/// `extra` free variables. Positions are eliminated through a spanning
/// forest, so the only equalities are closing conditions of the
/// fundamental cycles.
struct CycleProgram {
    lp: LinearProgram,
    lower: Vec<Rational>,
    /// For each vertex, `p_v − p_root` as signed edge indices.
    paths: Vec<BTreeMap<usize, i64>>,
}

fn cycle_program(gwd: &Gwd, dirs: &[Vector], lower: Vec<Rational>, extra: usize) -> CycleProgram {
    let v = gwd.num_vertices;
    let e = gwd.edges.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (k, edge) in gwd.edges.iter().enumerate() {
        adj[edge.cells.0].push(k);
        adj[edge.cells.1].push(k);
    }
    let mut paths: Vec<Option<BTreeMap<usize, i64>>> = vec![None; v];
    let mut tree = vec![false; e];
    for root in 0..v {
        if paths[root].is_some() {
            continue;
        }
        paths[root] = Some(BTreeMap::new());
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &k in &adj[x] {
                let (a, b) = gwd.edges[k].cells;
                let (y, sign) = if a == x { (b, 1) } else { (a, -1) };
                if paths[y].is_some() {
                    continue;
                }
                let mut p = paths[x].clone().expect("visited");
                *p.entry(k).or_insert(0) += sign;
                paths[y] = Some(p);
                tree[k] = true;
                queue.push_back(y);
            }
        }
    }
    let paths: Vec<BTreeMap<usize, i64>> = paths.into_iter().map(|p| p.expect("visited")).collect();
    let mut lp = LinearProgram::new(e + extra);
    for k in 0..e {
        lp.set_nonnegative(k);
    }
    for k in (0..e).filter(|&k| !tree[k]) {
        let (a, b) = gwd.edges[k].cells;
        let mut coef: BTreeMap<usize, i64> = paths[b].clone();
        for (&j, &c) in &paths[a] {
            *coef.entry(j).or_insert(0) -= c;
        }
        *coef.entry(k).or_insert(0) -= 1;
        for pick in [|d: &Vector| d.x.clone(), |d: &Vector| d.y.clone()] {
            let mut terms = Vec::new();
            let mut rhs = Rational::zero();
            for (&j, &c) in coef.iter().filter(|(_, c)| **c != 0) {
                let a = pick(&dirs[j]) * rational::int(c);
                rhs -= &a * &lower[j];
                terms.push((j, a));
            }
            lp.add_sparse(&terms, Relation::Eq, rhs);
        }
    }
    CycleProgram { lp, lower, paths }
}

impl CycleProgram {
    fn lambdas(&self, x: &[Rational]) -> Vec<Rational> {
        self.lower.iter().zip(x).map(|(l, m)| l + m).collect()
    }

    fn positions(&self, dirs: &[Vector], lambdas: &[Rational]) -> Vec<Vector> {
        self.paths
            .iter()
            .map(|p| {
                p.iter().fold(Vector::zero(), |acc, (&k, &c)| acc.add(&dirs[k].scale(&(&lambdas[k] * rational::int(c)))))
            })
            .collect()
    }
}

/// Exact feasibility of the positive-representation cone.
pub fn prep_feasible(gwd: &Gwd, scheme: Option<&PerturbationScheme>) -> Option<PositiveRep> {
    let dirs = gwd.directions(scheme);
    // Rescaling each direction by a positive factor leaves the cone's
    // feasibility unchanged; integer directions keep the tableau small.
    let scaled: Vec<Vector> = dirs
        .iter()
        .map(|d| {
            let p = rational::primitive(&[d.x.clone(), d.y.clone()]);
            Vector::new(Rational::from_integer(p[0].clone()), Rational::from_integer(p[1].clone()))
        })
        .collect();
    let prog = cycle_program(gwd, &scaled, vec![Rational::one(); gwd.edges.len()], 0);
    let x = lp_feasible(&prog.lp)?;
    let scaled_lambdas = prog.lambdas(&x);
    let positions = prog.positions(&scaled, &scaled_lambdas);
    let mut lambdas: Vec<Rational> = scaled_lambdas
        .iter()
        .zip(scaled.iter().zip(&dirs))
        .map(|(l, (s, d))| l * ratio_of(s, d))
        .collect();
    let mut positions = positions;
    if let Some(min) = lambdas.iter().min().cloned() {
        if min < Rational::one() {
            let f = min.recip();
            lambdas.iter_mut().for_each(|l| *l *= &f);
            positions.iter_mut().for_each(|p| *p = p.scale(&f));
        }
    }
    Some(PositiveRep { positions, lambdas })
}

/// `c` with `s = c·d` for parallel, equally oriented vectors.
fn ratio_of(s: &Vector, d: &Vector) -> Rational {
    if d.x.is_zero() {
        &s.y / &d.y
    } else {
        &s.x / &d.x
    }
}

/// Seeded first-order deformation of every potential wall direction:
/// the wall between labels `i < j` with normal `d` gets `d + t·θ_ij·rot90(d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationScheme {
    pub seed: u64,
    theta: BTreeMap<(usize, usize), Rational>,
    /// `t = 2^-k`.
    pub k: u32,
    pub t: Rational,
}

impl PerturbationScheme {
    /// Pairwise distinct nonzero integer coefficients for every label pair.
    pub fn new(num_labels: usize, seed: u64, k: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used = BTreeSet::new();
        let mut theta = BTreeMap::new();
        for i in 0..num_labels {
            for j in i + 1..num_labels {
                let v = loop {
                    let mag: i64 = rng.random_range(1..=1000);
                    let v = if rng.random_bool(0.5) { mag } else { -mag };
                    if used.insert(v) {
                        break v;
                    }
                };
                theta.insert((i, j), rational::int(v));
            }
        }
        PerturbationScheme { seed, theta, k, t: rational::dyadic(k) }
    }

    pub fn with_k(&self, k: u32) -> Self {
        PerturbationScheme { k, t: rational::dyadic(k), ..self.clone() }
    }

    pub fn theta(&self, wall: Wall) -> &Rational {
        &self.theta[&(wall.0.min(wall.1), wall.0.max(wall.1))]
    }

    pub fn perturb(&self, wall: Wall, d: &Vector) -> Vector {
        d.add(&d.rot90().scale(&(&self.t * self.theta(wall))))
    }

    /// The same deformation seen through a relabeling (`perm[old] = new`).
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let theta = self
            .theta
            .iter()
            .map(|(&(i, j), v)| {
                let (a, b) = (perm[i], perm[j]);
                ((a.min(b), a.max(b)), v.clone())
            })
            .collect();
        PerturbationScheme { theta, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Status {
    Regular,
    IrregularPerturbedlyRegular,
    IrregularNotPerturbedlyRegular,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub status: Status,
    pub perturbedly_regular: bool,
    pub too_rigid: bool,
    pub codim: i64,
    pub rank: usize,
    pub rep_dim_mod_translations: i64,
}

/// Regularity relative to the configuration points inside the region. For
/// the full hull this is the lifting LP; for smaller convex regions it is
/// nonemptiness of the unperturbed positive representations, which is
/// equivalent.
pub fn is_regular_in_region(config: &Configuration, d: &Subdivision) -> bool {
    if d.region() == &Region::hull(config) {
        is_regular(config, d).expect("hull region").is_some()
    } else {
        prep_feasible(&dual_gwd(config, d), None).is_some()
    }
}

pub fn is_perturbedly_regular(config: &Configuration, d: &Subdivision, scheme: &PerturbationScheme) -> bool {
    prep_feasible(&dual_gwd(config, d), Some(scheme)).is_some()
}

pub fn classify(config: &Configuration, d: &Subdivision, scheme: &PerturbationScheme) -> Classification {
    let gwd = dual_gwd(config, d);
    let (rank, dim) = rep_dim(&gwd, None);
    let regular = is_regular_in_region(config, d);
    let perturbedly_regular = prep_feasible(&gwd, Some(scheme)).is_some();
    let status = match (regular, perturbedly_regular) {
        (true, _) => Status::Regular,
        (false, true) => Status::IrregularPerturbedlyRegular,
        (false, false) => Status::IrregularNotPerturbedlyRegular,
    };
    Classification {
        status,
        perturbedly_regular,
        too_rigid: rank < gwd.edges.len(),
        codim: d.codimension(),
        rank,
        rep_dim_mod_translations: dim,
    }
}

/// Every subdivision whose perturbed behaviour matters for a region: the
/// subdivisions of the region itself and of every cell occurring in them.
pub fn stabilization_universe(config: &Configuration, region: &Region, budget: u64) -> Result<Vec<Subdivision>> {
    let top = enumerate_subdivisions(config, region, None, budget)?;
    let cells: BTreeSet<_> = top.iter().flat_map(|d| d.cells().iter().cloned()).collect();
    let mut all: BTreeSet<Subdivision> = top.into_iter().collect();
    for c in cells {
        all.extend(enumerate_subdivisions(config, &c.as_region(), None, budget)?);
    }
    let mut out: Vec<Subdivision> = all.into_iter().collect();
    out.sort_by(Subdivision::canonical_cmp);
    Ok(out)
}

pub const FIRST_K: u32 = 16;
pub const STEP_K: u32 = 8;
pub const LAST_K: u32 = 64;

/// Picks `t = 2^-k` for the first `k` in 16, 24, 32, ... whose perturbed
/// regularity verdicts over the whole universe agree with the next two
/// values of `k`, then checks that no dual graph is too rigid there.
pub fn stabilize_t(config: &Configuration, region: &Region, seed: u64, budget: u64) -> Result<PerturbationScheme> {
    let universe = stabilization_universe(config, region, budget)?;
    let duals: Vec<Gwd> = universe.iter().map(|d| dual_gwd(config, d)).collect();
    stabilize_over(config.len(), &duals, seed)
}

pub fn stabilize_over(num_labels: usize, duals: &[Gwd], seed: u64) -> Result<PerturbationScheme> {
    let base = PerturbationScheme::new(num_labels, seed, FIRST_K);
    let verdicts = |k: u32| {
        let s = base.with_k(k);
        exec::map(duals, |g| prep_feasible(g, Some(&s)).is_some())
    };
    let mut history: Vec<(u32, Vec<bool>)> = Vec::new();
    let mut k = FIRST_K;
    while k <= LAST_K {
        history.push((k, verdicts(k)));
        let n = history.len();
        if n >= 3 && history[n - 3].1 == history[n - 2].1 && history[n - 2].1 == history[n - 1].1 {
            let chosen = base.with_k(history[n - 3].0);
            let stuck = exec::map(duals, |g| is_too_rigid_at(g, &chosen));
            if let Some(pos) = stuck.iter().position(|&b| b) {
                return Err(Error::NonGenericPerturbation {
                    seed,
                    reason: format!("dual graph #{pos} stays too rigid at t = 2^-{}", chosen.k),
                });
            }
            return Ok(chosen);
        }
        k += STEP_K;
    }
    Err(Error::NonGenericPerturbation { seed, reason: format!("verdicts did not settle by t = 2^-{LAST_K}") })
}

/// Smallest achievable `max λ` over the new walls of `refined` (walls not in
/// `coarse`) among perturbed representations with every old wall at `λ ≥ 1`.
pub fn escape_length(
    config: &Configuration,
    coarse: &Subdivision,
    refined: &Subdivision,
    scheme: &PerturbationScheme,
) -> Option<Rational> {
    let gwd = dual_gwd(config, refined);
    let e = gwd.edges.len();
    let old: BTreeSet<Wall> = coarse.walls().iter().copied().collect();
    let is_new: Vec<bool> = gwd.edges.iter().map(|edge| !old.contains(&edge.wall)).collect();
    let lower = is_new.iter().map(|&n| if n { Rational::zero() } else { Rational::one() }).collect();
    let mut prog = cycle_program(&gwd, &gwd.directions(Some(scheme)), lower, 1);
    if !is_new.contains(&true) {
        return lp_feasible(&prog.lp).map(|_| Rational::zero());
    }
    for k in (0..e).filter(|&k| is_new[k]) {
        prog.lp.add_sparse(&[(e, Rational::one()), (k, -Rational::one())], Relation::Ge, Rational::zero());
    }
    let mut obj = vec![Rational::zero(); e + 1];
    obj[e] = Rational::one();
    match lp_minimize(&prog.lp, &obj) {
        LpOutcome::Optimal { value, .. } => Some(value),
        _ => None,
    }
}

/// Does `fine` refine `coarse` (or equal it)? With no three points collinear
/// this is exactly containment of wall sets.
pub fn refines(fine: &Subdivision, coarse: &Subdivision) -> bool {
    fine.region() == coarse.region() && coarse.walls().iter().all(|w| fine.walls().contains(w))
}

/// The codimension-one perturbedly regular subdivisions whose perturbed
/// representations degenerate onto a representation of the too-rigid `d` as
/// `t → 0`: refinements (or `d` itself) for which the new walls' minimal
/// length shrinks at least like `√t` across the samples `k, k+8, k+16`.
pub fn perturbation_set(
    config: &Configuration,
    d: &Subdivision,
    scheme: &PerturbationScheme,
    budget: u64,
) -> Result<Vec<Subdivision>> {
    if !is_too_rigid(&dual_gwd(config, d)) {
        return Err(Error::NotTooRigid);
    }
    let candidates: Vec<Subdivision> = enumerate_subdivisions(config, d.region(), Some(1), budget)?
        .into_iter()
        .filter(|x| x.codimension() == 1 && refines(x, d))
        .collect();
    let samples: Vec<PerturbationScheme> = (0..3).map(|i| scheme.with_k(scheme.k + i * STEP_K)).collect();
    let keep = exec::map(&candidates, |cand| {
        let lens: Option<Vec<Rational>> = samples.iter().map(|s| escape_length(config, d, cand, s)).collect();
        let Some(lens) = lens else { return false };
        // ratio of consecutive samples must be at most (t ratio)^(1/2) = 2^-4
        let factor = rational::dyadic(STEP_K / 2);
        lens.windows(2).all(|w| w[1] <= &w[0] * &factor)
    });
    Ok(candidates.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect())
}

/// The two sides of "perturb too-rigid summands": perturbedly regular
/// codimension-one subdivisions of a region, and the naive regular summands
/// of codimension at most one with every too-rigid one replaced by its
/// perturbation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedSummands {
    pub perturbedly_regular: BTreeSet<Subdivision>,
    pub naive_replaced: BTreeSet<Subdivision>,
    pub too_rigid: Vec<Subdivision>,
}

pub fn perturbed_summands(
    config: &Configuration,
    region: &Region,
    scheme: &PerturbationScheme,
    budget: u64,
) -> Result<PerturbedSummands> {
    let subs = enumerate_subdivisions(config, region, Some(1), budget)?;
    let mut perturbedly_regular = BTreeSet::new();
    let mut naive_replaced = BTreeSet::new();
    let mut too_rigid = Vec::new();
    for d in &subs {
        let c = classify(config, d, scheme);
        if d.codimension() == 1 && c.perturbedly_regular {
            perturbedly_regular.insert(d.clone());
        }
        if c.status != Status::Regular {
            continue;
        }
        if c.too_rigid {
            naive_replaced.extend(perturbation_set(config, d, scheme, budget)?);
            too_rigid.push(d.clone());
        } else if d.codimension() == 1 {
            naive_replaced.insert(d.clone());
        }
    }
    Ok(PerturbedSummands { perturbedly_regular, naive_replaced, too_rigid })
}

/// One row of the classification report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassificationRow {
    pub id: usize,
    pub key: String,
    pub status: Status,
    pub perturbedly_regular: bool,
    pub codim: i64,
    pub rank: usize,
    pub rep_dim: i64,
    pub too_rigid: bool,
    pub t: String,
    pub seed: u64,
}

pub fn classification_table(
    config: &Configuration,
    subs: &[Subdivision],
    scheme: &PerturbationScheme,
) -> Vec<ClassificationRow> {
    let classes = exec::map(subs, |d| classify(config, d, scheme));
    subs.iter()
        .zip(classes)
        .enumerate()
        .map(|(id, (d, c))| ClassificationRow {
            id,
            key: d.key(),
            status: c.status,
            perturbedly_regular: c.perturbedly_regular,
            codim: c.codim,
            rank: c.rank,
            rep_dim: c.rep_dim_mod_translations,
            too_rigid: c.too_rigid,
            t: rational::format_rational(&scheme.t),
            seed: scheme.seed,
        })
        .collect()
}
