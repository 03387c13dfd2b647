use std::collections::BTreeSet;

use serde::Serialize;

use secop::geometry::Configuration;
use secop::operad::{
    chain_complex_with, composable_cell_pairs, differential_with, homology_ranks, leibniz_check, verify_d_squared,
    ChainElement, ComplexReport, DSquaredReport, LeibnizReport, SignTable,
};
use secop::rational::format_rational;
use secop::regularity::{normal_fan, secondary_cone};
use secop::rigidity::{classification_table, dual_gwd, prep_feasible, stabilize_t, ClassificationRow, PerturbationScheme};
use secop::subdivision::{enumerate_subdivisions, Region, Subdivision};
use secop::geometry::validate_configuration;

use crate::config::{load, ConfigFile, Loaded};
use crate::{svg, CliError, Command, Common, Outcome};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub t: String,
    pub k: u32,
    pub budget: u64,
    pub version: &'static str,
}

fn provenance(scheme: &PerturbationScheme, budget: u64) -> Provenance {
    Provenance {
        seed: scheme.seed,
        t: format_rational(&scheme.t),
        k: scheme.k,
        budget,
        version: env!("CARGO_PKG_VERSION"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubdivisionJson {
    pub id: usize,
    pub key: String,
    pub cells: Vec<Vec<usize>>,
    pub walls: Vec<[usize; 2]>,
    pub unused: Vec<usize>,
    pub codim: i64,
}

impl SubdivisionJson {
    pub fn new(id: usize, d: &Subdivision) -> Self {
        SubdivisionJson {
            id,
            key: d.key(),
            cells: d.cells().iter().map(|c| c.vertices().to_vec()).collect(),
            walls: d.walls().iter().map(|&(a, b)| [a, b]).collect(),
            unused: d.unused().to_vec(),
            codim: d.codimension(),
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn loaded(common: &Common, seed: Option<u64>) -> Result<Loaded, CliError> {
    load(&common.path, common.region.as_deref(), seed, common.budget)
}

fn subdivisions(l: &Loaded) -> Result<Vec<Subdivision>, CliError> {
    Ok(enumerate_subdivisions(&l.config, &l.region, None, l.budget)?)
}

fn pick(subs: &[Subdivision], id: usize) -> Result<&Subdivision, CliError> {
    subs.get(id).ok_or(CliError::UnknownId(id, subs.len()))
}

pub fn run(command: &Command) -> Outcome {
    match dispatch(command) {
        Ok(o) => o,
        Err(e) => Outcome::error(&e),
    }
}

fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Validate { path } => validate(path),
        Command::Enumerate { common, max_codim } => enumerate(common, *max_codim),
        Command::Classify { common, seed, max_codim } => classify(common, *seed, *max_codim),
        Command::Differential { common, seed, subdivision } => differential(common, *seed, *subdivision),
        Command::Verify { common, seed, flip_sign } => verify(common, *seed, *flip_sign),
        Command::SecondaryCone { common, subdivision } => cone(common, *subdivision),
        Command::Render { common, subdivision, fan, output } => render(common, *subdivision, *fan, output.as_deref()),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    points: usize,
    hull: Vec<usize>,
    interior: Vec<usize>,
}

fn validate(path: &std::path::Path) -> Result<Outcome, CliError> {
    let file = ConfigFile::read(path)?;
    let points = file.configuration()?.points().to_vec();
    let config: Configuration = validate_configuration(points)?;
    let hull = config.hull();
    Ok(Outcome::ok(json(&ValidateReport { valid: true, points: config.len(), hull: hull.cycle, interior: hull.interior })))
}

#[derive(Serialize)]
struct EnumerateReport {
    region: Vec<usize>,
    count: usize,
    by_walls: Vec<usize>,
    subdivisions: Vec<SubdivisionJson>,
}

fn enumerate(common: &Common, max_codim: Option<i64>) -> Result<Outcome, CliError> {
    let l = loaded(common, None)?;
    let subs = subdivisions(&l)?;
    let rows: Vec<SubdivisionJson> = subs
        .iter()
        .enumerate()
        .filter(|(_, d)| max_codim.is_none_or(|m| d.codimension() <= m))
        .map(|(i, d)| SubdivisionJson::new(i, d))
        .collect();
    let mut by_walls = vec![0; rows.iter().map(|r| r.walls.len() + 1).max().unwrap_or(0)];
    for r in &rows {
        by_walls[r.walls.len()] += 1;
    }
    Ok(Outcome::ok(json(&EnumerateReport { region: l.region.boundary().to_vec(), count: rows.len(), by_walls, subdivisions: rows })))
}

#[derive(Serialize)]
struct ClassifyReport {
    provenance: Provenance,
    region: Vec<usize>,
    rows: Vec<ClassificationRow>,
}

fn classify(common: &Common, seed: Option<u64>, max_codim: Option<i64>) -> Result<Outcome, CliError> {
    let l = loaded(common, seed)?;
    let scheme = stabilize_t(&l.config, &l.region, l.seed, l.budget)?;
    let subs = subdivisions(&l)?;
    let rows = classification_table(&l.config, &subs, &scheme)
        .into_iter()
        .filter(|r| max_codim.is_none_or(|m| r.codim <= m))
        .collect();
    Ok(Outcome::ok(json(&ClassifyReport { provenance: provenance(&scheme, l.budget), region: l.region.boundary().to_vec(), rows })))
}

#[derive(Serialize)]
struct TermJson {
    id: usize,
    key: String,
    coefficient: i64,
}

#[derive(Serialize)]
struct DifferentialReport {
    provenance: Provenance,
    source: SubdivisionJson,
    terms: Vec<TermJson>,
}

#[derive(Serialize)]
struct ComplexOutput {
    provenance: Provenance,
    complex: ComplexReport,
}

fn sign_table(l: &Loaded, subs: &[Subdivision], scheme: &PerturbationScheme) -> Result<SignTable, CliError> {
    Ok(SignTable::build(&l.config, subs.iter().flat_map(|d| d.cells()), scheme, l.budget)?)
}

fn differential(common: &Common, seed: Option<u64>, id: Option<usize>) -> Result<Outcome, CliError> {
    let l = loaded(common, seed)?;
    let scheme = stabilize_t(&l.config, &l.region, l.seed, l.budget)?;
    let subs = subdivisions(&l)?;
    let table = sign_table(&l, &subs, &scheme)?;
    let prov = provenance(&scheme, l.budget);
    match id {
        Some(id) => {
            let d = pick(&subs, id)?;
            let image = differential_with(&table, &ChainElement::basis(d.clone()))?;
            let terms = image
                .iter()
                .map(|(t, c)| TermJson { id: subs.iter().position(|x| x == t).expect("in basis"), key: t.key(), coefficient: c })
                .collect();
            Ok(Outcome::ok(json(&DifferentialReport { provenance: prov, source: SubdivisionJson::new(id, d), terms })))
        }
        None => {
            let cx = chain_complex_with(&l.region, subs, &table, l.budget)?;
            Ok(Outcome::ok(json(&ComplexOutput { provenance: prov, complex: cx.report() })))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleReport {
    pub ok: bool,
    pub checked: usize,
    /// Set when the region is not the convex hull.
    pub skipped: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub ok: bool,
    pub seeds: Vec<u64>,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexSummary {
    pub sizes: Vec<usize>,
    pub nonzero_entries: usize,
    pub homology: Option<Vec<(i64, usize)>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub provenance: Provenance,
    pub region: Vec<usize>,
    pub classification: Vec<ClassificationRow>,
    pub complex: ComplexSummary,
    pub d_squared: DSquaredReport,
    pub leibniz: LeibnizReport,
    pub triple_equivalence: TripleReport,
    pub seed_cross_check: SeedReport,
}

/// Regularity by lifting LP, by normal fan and by unperturbed positive
/// representations must agree.
pub fn triple_equivalence(config: &Configuration, region: &Region, subs: &[Subdivision]) -> Result<TripleReport, CliError> {
    if region != &Region::hull(config) {
        return Ok(TripleReport { ok: true, checked: 0, skipped: true, failures: Vec::new() });
    }
    let verdicts = secop::exec::try_map(subs, |d| {
        let lp = secop::regularity::is_regular(config, d)?.is_some();
        let fan = normal_fan(config, d)?.is_some();
        let prep = prep_feasible(&dual_gwd(config, d), None).is_some();
        Ok::<_, secop::Error>((lp, fan, prep))
    })?;
    let failures: Vec<String> = subs
        .iter()
        .zip(&verdicts)
        .filter(|(_, (a, b, c))| a != b || b != c)
        .map(|(d, v)| format!("{}: {v:?}", d.key()))
        .collect();
    Ok(TripleReport { ok: failures.is_empty(), checked: subs.len(), skipped: false, failures })
}

pub fn verify_report(l: &Loaded, flip: Option<usize>) -> Result<VerifyReport, CliError> {
    let subs = subdivisions(l)?;
    let scheme = stabilize_t(&l.config, &l.region, l.seed, l.budget)?;
    let mut table = sign_table(l, &subs, &scheme)?;
    if let Some(i) = flip {
        if !table.flip(i) {
            return Err(CliError::Malformed(format!("sign table has {} entries, cannot flip {i}", table.len())));
        }
    }
    let classification = classification_table(&l.config, &subs, &scheme);
    let cx = chain_complex_with(&l.region, subs.clone(), &table, l.budget)?;
    let d_squared = verify_d_squared(&cx);
    let complex = ComplexSummary {
        sizes: cx.sizes(),
        nonzero_entries: cx.entries.len(),
        homology: homology_ranks(&cx).ok(),
    };
    let cells: BTreeSet<_> = subs.iter().flat_map(|d| d.cells().iter().cloned()).collect();
    let pairs = composable_cell_pairs(&l.config, &cells);
    let leibniz = leibniz_check(&l.config, &table, &pairs, l.budget)?;
    let triple = triple_equivalence(&l.config, &l.region, &subs)?;
    let seeds: Vec<u64> = (0..3).map(|i| l.seed.wrapping_add(i)).collect();
    let mut mismatches = BTreeSet::new();
    for &s in &seeds[1..] {
        let other = stabilize_t(&l.config, &l.region, s, l.budget)?;
        let rows = classification_table(&l.config, &subs, &other);
        for (a, b) in classification.iter().zip(&rows) {
            if (a.status, a.perturbedly_regular) != (b.status, b.perturbedly_regular) {
                mismatches.insert(a.key.clone());
            }
        }
    }
    let seed_cross_check = SeedReport { ok: mismatches.is_empty(), seeds, mismatches: mismatches.into_iter().collect() };
    Ok(VerifyReport {
        ok: d_squared.ok && leibniz.ok && triple.ok && seed_cross_check.ok,
        provenance: provenance(&scheme, l.budget),
        region: l.region.boundary().to_vec(),
        classification,
        complex,
        d_squared,
        leibniz,
        triple_equivalence: triple,
        seed_cross_check,
    })
}

fn verify(common: &Common, seed: Option<u64>, flip: Option<usize>) -> Result<Outcome, CliError> {
    let l = loaded(common, seed)?;
    let report = verify_report(&l, flip)?;
    let mut out = Outcome::ok(json(&report));
    if !report.ok {
        out.code = crate::exit::PROPERTY;
        let mut why = Vec::new();
        if let Some(f) = report.d_squared.failures.first() {
            why.push(format!("d^2 != 0 from {} at codimension-2 witness {}", f.source, f.target));
        }
        if !report.leibniz.ok {
            why.push(format!("{} Leibniz failures", report.leibniz.failures.len()));
        }
        if !report.triple_equivalence.ok {
            why.push("regularity tests disagree".into());
        }
        if !report.seed_cross_check.ok {
            why.push("classification depends on the seed".into());
        }
        out.stderr = format!("verification failed: {}\n", why.join("; "));
    }
    Ok(out)
}

fn cone(common: &Common, id: usize) -> Result<Outcome, CliError> {
    let l = loaded(common, None)?;
    let subs = subdivisions(&l)?;
    let d = pick(&subs, id)?;
    Ok(Outcome::ok(json(&secondary_cone(&l.config, d)?)))
}

fn render(common: &Common, subdivision: Option<usize>, fan: Option<usize>, output: Option<&std::path::Path>) -> Result<Outcome, CliError> {
    let l = loaded(common, None)?;
    let subs = subdivisions(&l)?;
    let text = match (subdivision, fan) {
        (Some(id), _) => svg::render_subdivision(&l.config, pick(&subs, id)?),
        (None, Some(id)) => {
            let d = pick(&subs, id)?;
            let f = normal_fan(&l.config, d)?.ok_or_else(|| CliError::Property(format!("subdivision {id} is not regular; it has no normal fan")))?;
            svg::render_fan(&f)
        }
        (None, None) => return Err(CliError::Malformed("need --subdivision or --fan".into())),
    };
    match output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::Io(path.to_path_buf(), e.to_string()))?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}
