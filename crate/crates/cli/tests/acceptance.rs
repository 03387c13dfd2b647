//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secop::geometry::Configuration;
use secop::rational::int;
use secop::operad::{
    chain_complex, composable_cell_pairs, leibniz_check, total_homology_rank, verify_d_squared, SignTable,
};
use secop::regularity::{is_regular, normal_fan};
use secop::rigidity::{
    classification_table, classify, dual_gwd, expected_rep_dim, is_too_rigid, perturbation_set, perturbed_summands,
    prep_feasible, rep_dim, stabilization_universe, stabilize_t, Status,
};
use secop::subdivision::{enumerate_subdivisions, subdivision_from_weights, Region, Subdivision, WeightVector, DEFAULT_BUDGET};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SQUARE: &[(i64, i64)] = &[(0, 0), (1, 0), (0, 1), (1, 1)];
const PENTAGON: &[(i64, i64)] = &[(0, 0), (2, 0), (3, 2), (1, 3), (-1, 2)];
const HEXAGON: &[(i64, i64)] = &[(0, 0), (2, 0), (4, 1), (4, 3), (2, 4), (-1, 2)];
const TRIANGLE_INTERIOR: &[(i64, i64)] = &[(0, 0), (3, 0), (0, 3), (1, 1)];
const HEXAGON_CENTER: &[(i64, i64)] = &[(0, 0), (4, 0), (6, 3), (4, 6), (0, 6), (-2, 3), (2, 2)];

fn config(pts: &[(i64, i64)]) -> Configuration {
    Configuration::from_ints(pts).expect("valid test configuration")
}

fn all(c: &Configuration) -> Vec<Subdivision> {
    enumerate_subdivisions(c, &Region::hull(c), None, DEFAULT_BUDGET).expect("enumeration within budget")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn is_triangulation(d: &Subdivision) -> bool {
    d.unused().is_empty() && d.cells().iter().all(|c| c.vertices().len() == 3)
}

/// Outer triangle with a twisted inner triangle: offsets `2o + k·t` around
/// the centroid, where `t` turns each inner vertex towards the next one.
/// `k = 0` is homothetic.
fn twisted_triangles(k: i64) -> Vec<(i64, i64)> {
    let base = [(-1, -1), (2, -1), (-1, 2)];
    let twist = [(0, 1), (-1, 0), (1, -1)];
    let mut pts = vec![(0, 0), (18, 0), (0, 18)];
    pts.extend(base.iter().zip(twist).map(|(&(x, y), (tx, ty))| (6 + 2 * x + k * tx, 6 + 2 * y + k * ty)));
    pts
}

/// Searches the twisted family for a configuration with a non-regular
/// triangulation.
fn nested_triangles() -> Option<(Configuration, Subdivision)> {
    (1..=4).find_map(|k| {
        let c = Configuration::from_ints(&twisted_triangles(k)).ok()?;
        let d = all(&c).into_iter().find(|d| is_triangulation(d) && is_regular(&c, d).unwrap().is_none())?;
        Some((c, d))
    })
}

/// Searches outer triangles with homothetic inner triangles (three pairs of
/// parallel edges) for a subdivision whose dual graph is too rigid.
fn too_rigid_example() -> Option<(Configuration, Subdivision)> {
    for size in 4..=9i64 {
        for a in 1..size {
            for m in 1..size {
                let pts = [(0, 0), (size, 0), (0, size), (a, a), (a + m, a), (a, a + m)];
                let Ok(c) = Configuration::from_ints(&pts) else { continue };
                if let Some(d) = all(&c).into_iter().find(|d| is_too_rigid(&dual_gwd(&c, d))) {
                    return Some((c, d));
                }
            }
        }
    }
    None
}

fn test_configs() -> Vec<(&'static str, Configuration)> {
    let mut out = vec![
        ("square", config(SQUARE)),
        ("pentagon", config(PENTAGON)),
        ("hexagon", config(HEXAGON)),
        ("triangle+interior", config(TRIANGLE_INTERIOR)),
        ("hexagon+center", config(HEXAGON_CENTER)),
    ];
    if let Some((c, _)) = nested_triangles() {
        out.push(("nested triangles", c));
    }
    if let Some((c, _)) = too_rigid_example() {
        out.push(("homothetic triangles", c));
    }
    out
}

fn timed(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn c1_associahedron() -> Outcome {
    let mut notes = Vec::new();
    for (name, pts, sizes, catalan) in [("pentagon", PENTAGON, vec![1, 5, 5], 5), ("hexagon", HEXAGON, vec![1, 9, 21, 14], 14)] {
        let start = Instant::now();
        let c = config(pts);
        let subs = all(&c);
        let mut by_walls = vec![0; sizes.len()];
        for d in &subs {
            *by_walls.get_mut(d.walls().len()).ok_or("too many walls")? += 1;
        }
        check(by_walls == sizes, || format!("{name}: {by_walls:?}"))?;
        let tri = subs.iter().filter(|d| is_triangulation(d)).count();
        check(tri == catalan, || format!("{name}: {tri} triangulations"))?;
        let t = timed(Duration::from_secs(5), start)?;
        notes.push(format!("{name} {by_walls:?} in {t:.2?}"));
    }
    Ok(notes.join(", "))
}

fn c2_d_squared() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut cases = vec![
        ("square", config(SQUARE)),
        ("pentagon", config(PENTAGON)),
        ("hexagon", config(HEXAGON)),
        ("triangle+interior", config(TRIANGLE_INTERIOR)),
    ];
    let (nested, _) = nested_triangles().ok_or("no nested-triangles configuration found")?;
    cases.push(("nested triangles", nested));
    for (name, c) in cases {
        let r = Region::hull(&c);
        let s = stabilize_t(&c, &r, 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let cx = chain_complex(&c, &r, &s, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let rep = verify_d_squared(&cx);
        check(rep.ok, || format!("{name}: {:?}", rep.failures.first()))?;
        let not_pr = classification_table(&c, &cx.basis, &s).iter().filter(|r| !r.perturbedly_regular).count();
        notes.push(format!("{name} {} basis ({not_pr} not perturbedly regular), {} paths", cx.basis.len(), rep.paths));
    }
    let t = timed(Duration::from_secs(60), start)?;
    Ok(format!("{} in {t:.2?}", notes.join(", ")))
}

fn c3_triple_equivalence() -> Outcome {
    let mut total = 0;
    for (name, c) in test_configs() {
        for d in all(&c) {
            let lp = is_regular(&c, &d).map_err(|e| e.to_string())?.is_some();
            let fan = normal_fan(&c, &d).map_err(|e| e.to_string())?;
            let prep = prep_feasible(&dual_gwd(&c, &d), None).is_some();
            check(lp == fan.is_some() && lp == prep, || format!("{name} {d}: lp {lp} fan {} prep {prep}", fan.is_some()))?;
            if let Some(f) = fan {
                let g = dual_gwd(&c, &d);
                let positive = g.edges.iter().all(|e| {
                    let diff = f.vertices[e.cells.1].sub_vec(&f.vertices[e.cells.0]);
                    diff.cross(&e.direction) == int(0) && diff.dot(&e.direction) > int(0)
                });
                check(positive, || format!("{name} {d}: fan is not a positive representation"))?;
            }
            total += 1;
        }
    }
    Ok(format!("{total} subdivisions, no exceptions"))
}

fn c4_weight_sampling() -> Outcome {
    let mut total = 0;
    for (name, c) in test_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let s = stabilize_t(&c, &Region::hull(&c), 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let mut seen = BTreeSet::new();
        for _ in 0..1000 {
            let w: Vec<i64> = (0..c.len()).map(|_| rng.random_range(-12..=12)).collect();
            let d = subdivision_from_weights(&c, &WeightVector::from_ints(&w));
            Subdivision::new(&c, d.region().clone(), d.cells().to_vec()).map_err(|e| format!("{name} {w:?}: {e}"))?;
            if seen.insert(d.clone()) {
                let status = classify(&c, &d, &s).status;
                check(status == Status::Regular, || format!("{name} {d}: {status:?}"))?;
                let witness = is_regular(&c, &d).map_err(|e| e.to_string())?.ok_or_else(|| format!("{name} {d}: no witness"))?;
                check(subdivision_from_weights(&c, &witness) == d, || format!("{name} {d}: witness does not round-trip"))?;
            }
            total += 1;
        }
    }
    Ok(format!("{total} weight vectors"))
}

fn c5_rank_law() -> Outcome {
    let mut checked = 0;
    let mut rigid = 0;
    for (name, c) in test_configs() {
        for d in stabilization_universe(&c, &Region::hull(&c), DEFAULT_BUDGET).map_err(|e| e.to_string())? {
            let g = dual_gwd(&c, &d);
            if is_too_rigid(&g) {
                rigid += 1;
                continue;
            }
            let (_, dim) = rep_dim(&g, None);
            check(dim == expected_rep_dim(&g), || format!("{name} {d}: dim {dim}, expected {}", expected_rep_dim(&g)))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} dual graphs ({rigid} too rigid skipped)"))
}

fn c6_irregularity() -> Outcome {
    let (c, d) = nested_triangles().ok_or("search found no non-regular triangulation")?;
    let r = Region::hull(&c);
    let mut verdicts = Vec::new();
    let subs = all(&c);
    let mut tables = Vec::new();
    for seed in [1, 2, 3] {
        let s = stabilize_t(&c, &r, seed, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        verdicts.push(classify(&c, &d, &s));
        tables.push(
            classification_table(&c, &subs, &s)
                .into_iter()
                .map(|r| (r.status, r.perturbedly_regular))
                .collect::<Vec<_>>(),
        );
    }
    check(verdicts[0].status != Status::Regular, || "found triangulation classified Regular".into())?;
    check(verdicts.windows(2).all(|w| w[0] == w[1]), || format!("{verdicts:?}"))?;
    check(tables.windows(2).all(|w| w[0] == w[1]), || "classification differs across seeds".into())?;
    let pts: Vec<String> = c.points().iter().map(|p| format!("({}, {})", p.x, p.y)).collect();
    Ok(format!("{}: {d} is {:?} for seeds 1, 2, 3", pts.join(" "), verdicts[0].status))
}

fn c7_too_rigid() -> Outcome {
    let (c, d) = too_rigid_example().ok_or("search found no too-rigid subdivision")?;
    let r = Region::hull(&c);
    let g = dual_gwd(&c, &d);
    let (rank, _) = rep_dim(&g, None);
    let e = g.edges.len();
    check(rank < e, || "not too rigid".into())?;
    let s = stabilize_t(&c, &r, 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let (rank_t, _) = rep_dim(&g, Some(&s));
    check(rank_t == e, || format!("perturbed rank {rank_t} != {e}"))?;
    let pert = perturbation_set(&c, &d, &s, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    check(!pert.is_empty(), || "empty perturbation set".into())?;
    let sums = perturbed_summands(&c, &r, &s, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    check(sums.perturbedly_regular == sums.naive_replaced, || {
        let a: Vec<String> = sums.perturbedly_regular.symmetric_difference(&sums.naive_replaced).map(Subdivision::key).collect();
        format!("summand sets differ on {a:?}")
    })?;
    let ipr = classification_table(&c, &all(&c), &s).iter().filter(|r| r.status == Status::IrregularPerturbedlyRegular).count();
    check(ipr > 0, || "no irregular-but-perturbedly-regular subdivision".into())?;
    Ok(format!(
        "{d}: rank {rank} < {e}, perturbed rank {rank_t}; {} in its perturbation set; {} perturbedly regular codim-1 summands reproduced; {ipr} irregular-but-perturbedly-regular",
        pert.len(),
        sums.perturbedly_regular.len()
    ))
}

fn c8_leibniz() -> Outcome {
    let mut total = 0;
    for (name, c) in test_configs() {
        check(c.len() <= 7, || format!("{name} has more than 7 points"))?;
        let r = Region::hull(&c);
        let s = stabilize_t(&c, &r, 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let cells: BTreeSet<_> = all(&c).iter().flat_map(|d| d.cells().iter().cloned()).collect();
        let table = SignTable::build(&c, &cells, &s, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let pairs = composable_cell_pairs(&c, &cells);
        let rep = leibniz_check(&c, &table, &pairs, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        check(rep.ok, || format!("{name}: {:?}", rep.failures.first()))?;
        total += rep.checked;
    }
    Ok(format!("{total} composable pairs"))
}

fn c9_homology() -> Outcome {
    let mut notes = Vec::new();
    for (name, pts) in [("pentagon", PENTAGON), ("hexagon", HEXAGON)] {
        let c = config(pts);
        let r = Region::hull(&c);
        let s = stabilize_t(&c, &r, 1, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let cx = chain_complex(&c, &r, &s, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let total = total_homology_rank(&cx).map_err(|e| e.to_string())?;
        check(total == 1, || format!("{name}: total rank {total}"))?;
        notes.push(format!("{name} 1"));
    }
    Ok(notes.join(", "))
}

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_secop");
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/");
    let mut notes = Vec::new();
    for file in ["pentagon.json", "nested_triangles.json"] {
        let path = format!("{root}{file}");
        let run = || Command::new(bin).args(["verify", &path, "--seed", "5"]).output().expect("run secop");
        let (a, b) = (run(), run());
        check(a.status.code() == Some(0), || format!("{file}: exit {:?}", a.status.code()))?;
        check(a.stdout == b.stdout, || format!("{file}: outputs differ"))?;
        notes.push(format!("{file} {} bytes", a.stdout.len()));
    }
    let mut agree = Vec::new();
    let mut disagree = Vec::new();
    for (name, c) in test_configs() {
        let r = Region::hull(&c);
        let subs = all(&c);
        let tables: Vec<Vec<(Status, bool)>> = [1, 2, 3]
            .iter()
            .map(|&seed| {
                let s = stabilize_t(&c, &r, seed, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
                Ok(classification_table(&c, &subs, &s).into_iter().map(|r| (r.status, r.perturbedly_regular)).collect())
            })
            .collect::<Result<_, String>>()?;
        let differing = (0..subs.len()).filter(|&i| tables.iter().any(|t| t[i] != tables[0][i])).count();
        if differing == 0 {
            agree.push(name);
        } else {
            let rigid = subs.iter().filter(|d| is_too_rigid(&dual_gwd(&c, d))).count();
            disagree.push(format!("{name}: {differing} of {} rows differ ({rigid} too-rigid duals present)", subs.len()));
        }
    }
    check(disagree.is_empty(), || format!("classification depends on the seed for {}; agrees for {}", disagree.join("; "), agree.join(", ")))?;
    notes.push("classifications agree across seeds 1, 2, 3".into());
    Ok(notes.join(", "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("associahedron counts", c1_associahedron),
        ("d^2 = 0", c2_d_squared),
        ("regularity triple-equivalence", c3_triple_equivalence),
        ("weight-sampling soundness", c4_weight_sampling),
        ("rank law", c5_rank_law),
        ("irregularity exists", c6_irregularity),
        ("too-rigidity exists", c7_too_rigid),
        ("Leibniz identity", c8_leibniz),
        ("homology sanity", c9_homology),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let t = start.elapsed();
        match result {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({t:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why} ({t:.2?})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
