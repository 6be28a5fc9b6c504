//! The acceptance suite behind `selftest` and the `acceptance` test target.
//!
//! Every criterion returns one line of exact, deterministic detail, so the
//! rendered report doubles as the determinism witness.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use swanlab_core::{
    break_multiset, fmt_q, hidden_turning_scan, mono, q, qi, rank1_oracle_break, special_points, spectral_estimate,
    subharmonicity_check, sweep_simplex, Block, LaurentElement, NablaModule, Normalization, PreparedModule,
    WeightVector, Q,
};

use crate::error::CliError;
use crate::run::surface_model;
use crate::zoo::{self, Kind, ZooEntry};

const WEIGHT_SEED: u64 = 0x0a11_ce55;
const SWEEP_GRID: u32 = 12;
const RANDOM_POINTS: usize = 20;
const SPECTRAL_NMAX: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("criterion {} {}: {} -- {}", self.id, self.title, if self.pass { "PASS" } else { "FAIL" }, self.detail)
    }
}

fn result(id: u8, title: &'static str, outcome: Result<(bool, String), CliError>) -> CriterionResult {
    match outcome {
        Ok((pass, detail)) => CriterionResult { id, title, pass, detail },
        Err(e) => CriterionResult { id, title, pass: false, detail: format!("error: {e}") },
    }
}

/// Criteria 1 to 7.
pub fn run_core() -> Vec<CriterionResult> {
    vec![
        result(1, "conductor table", conductor_table()),
        result(2, "convex variation", convex_variation()),
        result(3, "engine and oracle", engine_oracle()),
        result(4, "subharmonicity identities", subharmonicity_identities()),
        result(5, "monotonicity", monotonicity()),
        result(6, "turning points", turning_points()),
        result(7, "algebraic laws", algebraic_laws()),
    ]
}

/// All eight criteria; the last reruns 1 to 7 on one thread and on all threads.
pub fn run_all() -> Vec<CriterionResult> {
    let mut out = run_core();
    out.push(result(8, "determinism", determinism(&render(&out))));
    out
}

pub fn render(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(s, "{}", r.line());
    }
    s
}

fn fail_list(fails: &[String]) -> String {
    let shown: Vec<&str> = fails.iter().take(3).map(String::as_str).collect();
    format!("{} failure(s): {}", fails.len(), shown.join("; "))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// ---- 1 ----

fn conductor_table() -> Result<(bool, String), CliError> {
    let m = PreparedModule::new(&NablaModule::dwork(mono(5, &[-1, -1]))?)?;
    let mut fails = Vec::new();
    let mut pairs = 0;
    for a in 1..=10i64 {
        for b in 1..=10i64 {
            if gcd(a, b) != 1 {
                continue;
            }
            pairs += 1;
            // x^-a ~ y^-b puts weight b on x and a on y
            let w = WeightVector::from_ints(&[b, a]);
            let nat = break_multiset(&m, &w, &Normalization::Natural)?.swan;
            let by_y = break_multiset(&m, &w, &Normalization::ByVariable(1))?.swan;
            if nat != qi(a + b) || by_y != qi(1) + q(b, a) {
                fails.push(format!("(a,b)=({a},{b}) natural {} by-y {}", fmt_q(&nat), fmt_q(&by_y)));
            }
        }
    }
    if fails.is_empty() {
        Ok((true, format!("{pairs} coprime pairs: natural swan a+b, y-normalized 1+b/a")))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 2 ----

fn convex_variation() -> Result<(bool, String), CliError> {
    let entries = zoo::entries_of(Kind::Module);
    let mut fails = Vec::new();
    let mut fits = 0;
    let mut points = 0;
    let mut ranks = Vec::new();
    for e in &entries {
        let (_, m) = e.module()?;
        ranks.push(m.rank());
        let s = sweep_simplex(&m, SWEEP_GRID)?;
        points += s.table.len();
        for f in &s.fits {
            fits += 1;
            if !f.passes() {
                fails.push(format!(
                    "{} {}: convex {} integral {} hasse-arf {}",
                    e.name, f.label, f.convex.ok, f.integral_pieces, f.hasse_arf.ok
                ));
            }
        }
        for (k, want, got) in zoo::mismatches(e)? {
            fails.push(format!("{} {k}: expected {want}, got {got}", e.name));
        }
    }
    let rmin = ranks.iter().min().copied().unwrap_or(0);
    let rmax = ranks.iter().max().copied().unwrap_or(0);
    if entries.len() < 6 || rmin < 1 || rmax < 4 {
        fails.push(format!("zoo has {} modules of rank {rmin}..{rmax}", entries.len()));
    }
    if fails.is_empty() {
        Ok((true, format!("{} modules (rank {rmin}..{rmax}), {fits} surfaces, {points} grid points at N={SWEEP_GRID}", entries.len())))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 3 ----

fn random_simplex_weight(rng: &mut ChaCha8Rng, n: usize) -> WeightVector {
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=60)).collect();
    let total: i64 = raw.iter().sum();
    WeightVector::new(raw.iter().map(|&x| q(x, total)).collect())
}

/// Rank-one assembly: one value per Dwork block, zeros for trivial blocks.
fn oracle_multiset(m: &NablaModule, r: &WeightVector) -> Result<Option<Vec<Q>>, CliError> {
    let total = r.total();
    let mut out = Vec::new();
    for b in m.blocks() {
        match b {
            Block::Dwork(f) => out.push(rank1_oracle_break(&f, r)? / &total),
            Block::Explicit(ms) => {
                if ms.iter().flatten().flatten().any(|x| !x.is_zero()) {
                    return Ok(None);
                }
                out.extend(std::iter::repeat(qi(0)).take(ms.first().map_or(0, Vec::len)));
            }
        }
    }
    out.sort_by(|a, b| b.cmp(a));
    Ok(Some(out))
}

fn engine_oracle() -> Result<(bool, String), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(WEIGHT_SEED);
    let c = q(1, 100);
    let mut fails = Vec::new();
    let mut compared = 0;
    let mut spectral = 0;
    for e in zoo::entries_of(Kind::Module) {
        let (_, m) = e.module()?;
        let prep = PreparedModule::new(&m)?;
        for _ in 0..RANDOM_POINTS {
            let r = random_simplex_weight(&mut rng, m.nvars());
            let engine = break_multiset(&prep, &r, &Normalization::Simplex)?.breaks;
            match oracle_multiset(&m, &r)? {
                Some(oracle) if oracle == engine => compared += 1,
                Some(oracle) => fails.push(format!(
                    "{} at {r}: engine {} oracle {}",
                    e.name,
                    swanlab_core::rational::fmt_q_list(&engine),
                    swanlab_core::rational::fmt_q_list(&oracle)
                )),
                None => fails.push(format!("{}: no rank-one assembly", e.name)),
            }
            // the matrix-power estimate bounds the top scale from above
            let top = prep.scale_multiset(&r, &c)?.scales.first().cloned().unwrap_or_else(|| qi(0));
            let mut bound: Option<Q> = None;
            for axis in 0..m.nvars() {
                let est = spectral_estimate(&m, axis, &r, &c, SPECTRAL_NMAX)?;
                let best = est.into_iter().min().unwrap_or_else(|| qi(0));
                bound = Some(bound.map_or(best.clone(), |b: Q| b.max(best)));
            }
            let bound = bound.unwrap_or_else(|| qi(0));
            if top <= bound {
                spectral += 1;
            } else {
                fails.push(format!("{} at {r}: top scale {} above estimate {}", e.name, fmt_q(&top), fmt_q(&bound)));
            }
        }
    }
    if fails.is_empty() {
        Ok((true, format!("{compared} multisets equal; {spectral} spectral brackets hold at c=1/100, nmax={SPECTRAL_NMAX}")))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 4 ----

fn surface_entry(name: &str) -> Result<(ZooEntry, swanlab_core::SurfaceModel), CliError> {
    let e = zoo::find(name)?;
    let (doc, m) = e.module()?;
    let model = surface_model(&doc, &m, None, None)?;
    Ok((e, model))
}

fn subharmonicity_identities() -> Result<(bool, String), CliError> {
    let mut fails = Vec::new();
    let mut parts = Vec::new();
    for (name, lhs, ell) in [("surface-x-over-t", 0, 0), ("surface-x-t-minus-p", 2, 1), ("surface-cubic", 0, 0)] {
        let (_, model) = surface_entry(name)?;
        let s = subharmonicity_check(&model)?;
        if s.lhs != qi(lhs) || s.rhs != qi(lhs) || !s.equality || s.generic.ell != ell {
            fails.push(format!("{name}: lhs {} rhs {} ell {}", fmt_q(&s.lhs), fmt_q(&s.rhs), s.generic.ell));
        }
        parts.push(format!("{name} {}={} ell {}", fmt_q(&s.lhs), fmt_q(&s.rhs), s.generic.ell));
        if name == "surface-cubic" {
            let p = model.prime as u64;
            let exposed: Vec<u64> = s
                .points
                .iter()
                .filter(|pt| pt.exposed)
                .filter_map(|pt| pt.value.strip_suffix("/1").and_then(|v| v.parse().ok()))
                .collect();
            let roots: Vec<u64> = (1..p).filter(|z| (z * z % p * z + 1) % p == 0).collect();
            if exposed != roots || exposed.len() != 3 {
                fails.push(format!("{name}: exposed at {exposed:?}, roots of x^3+1 are {roots:?}"));
            }
            parts.push(format!("exposed at x={exposed:?}"));
        }
    }
    for e in zoo::entries_of(Kind::Surface) {
        for (k, want, got) in zoo::mismatches(&e)? {
            fails.push(format!("{} {k}: expected {want}, got {got}", e.name));
        }
    }
    if fails.is_empty() {
        Ok((true, parts.join("; ")))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 5 ----

fn monotonicity() -> Result<(bool, String), CliError> {
    let mut fails = Vec::new();
    let (mut smooth, mut strict, mut generic) = (0, 0, 0);
    for e in zoo::entries_of(Kind::Surface) {
        let (doc, m) = e.module()?;
        let model = surface_model(&doc, &m, None, None)?;
        let sub = subharmonicity_check(&model)?;
        let specials = special_points(&model)?;
        if specials.len() != sub.points.len() {
            fails.push(format!("{}: special point count changed", e.name));
        }
        for pt in sub.points.iter().filter(|pt| !pt.on_boundary_crossing) {
            smooth += 1;
            for mo in &pt.monotonicity {
                if !mo.holds {
                    fails.push(format!("{} at {} i={}: {}", e.name, pt.label, mo.index, fmt_q(&mo.value)));
                }
                if mo.strict {
                    strict += 1;
                }
            }
        }
        if let Some(g) = &sub.generic_sample {
            generic += 1;
            if g.monotonicity.iter().any(|mo| mo.value != qi(0)) {
                fails.push(format!("{} generic point {} is not an equality", e.name, g.label));
            }
        }
    }
    if fails.is_empty() {
        Ok((true, format!("{smooth} smooth special points hold ({strict} strict); {generic} generic samples with equality")))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 6 ----

fn turning_points() -> Result<(bool, String), CliError> {
    let mut fails = Vec::new();
    let (_, hidden_model) = surface_entry("surface-hidden")?;
    let scan = hidden_turning_scan(&hidden_model, 0, SWEEP_GRID)?;
    let vals: Vec<Q> = scan.functions[0].values.iter().map(|v| swanlab_core::parse_q(v).unwrap_or_else(|| qi(0))).collect();
    let kinks: Vec<usize> = (1..vals.len() - 1).filter(|&k| &vals[k - 1] + &vals[k + 1] != qi(2) * &vals[k]).collect();
    if !scan.hidden || kinks != vec![SWEEP_GRID as usize / 2] {
        fails.push(format!("1/x + 1/t: hidden {} kinks at {kinks:?}", scan.hidden));
    }
    let (_, xtp) = surface_entry("surface-x-t-minus-p")?;
    let edge = hidden_turning_scan(&xtp, 1, SWEEP_GRID)?;
    if edge.hidden {
        fails.push(format!("x t^-p: crossing {} flagged hidden", edge.crossing));
    }
    let mut scanned = 0;
    for e in zoo::entries_of(Kind::Surface) {
        let (doc, m) = e.module()?;
        let model = surface_model(&doc, &m, None, None)?;
        for which in 0..2 {
            let s = hidden_turning_scan(&model, which, SWEEP_GRID)?;
            scanned += 1;
            if !s.slope_test {
                fails.push(format!("{} at {}: slope test fails", e.name, s.crossing));
            }
        }
    }
    if fails.is_empty() {
        Ok((true, format!("hidden at {} with kink s=1/2; x t^-p edge affine; slope test at {scanned} crossings", scan.crossing)))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 7 ----

fn breaks_at(m: &NablaModule, r: &WeightVector) -> Result<Vec<Q>, CliError> {
    Ok(break_multiset(&PreparedModule::new(m)?, r, &Normalization::Simplex)?.breaks)
}

fn algebraic_laws() -> Result<(bool, String), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(WEIGHT_SEED ^ 7);
    let mut fails = Vec::new();
    let modules: Vec<(String, NablaModule)> = zoo::entries_of(Kind::Module)
        .iter()
        .map(|e| e.module().map(|(_, m)| (e.name.clone(), m)))
        .collect::<Result<_, _>>()?;
    let mut counts = [0usize; 4];
    for (name, m) in &modules {
        for f in m.structure().dwork_leaves() {
            let neg: LaurentElement = -&f;
            let t = NablaModule::tensor(&NablaModule::dwork(f.clone())?, &NablaModule::dwork(neg)?)?;
            let r = random_simplex_weight(&mut rng, m.nvars());
            let b = breaks_at(&t, &r)?;
            counts[0] += 1;
            if b != vec![qi(0)] {
                fails.push(format!("{name}: Dwork(f) x Dwork(-f) has breaks {}", swanlab_core::rational::fmt_q_list(&b)));
            }
        }
        let r = random_simplex_weight(&mut rng, m.nvars());
        counts[1] += 1;
        if breaks_at(&NablaModule::dual(m), &r)? != breaks_at(m, &r)? {
            fails.push(format!("{name}: dual changes breaks at {r}"));
        }
    }
    for (i, (na, a)) in modules.iter().enumerate() {
        for (nb, b) in modules.iter().skip(i + 1) {
            if a.nvars() != b.nvars() || a.prime() != b.prime() {
                continue;
            }
            let r = random_simplex_weight(&mut rng, a.nvars());
            let mut union = breaks_at(a, &r)?;
            union.extend(breaks_at(b, &r)?);
            union.sort_by(|x, y| y.cmp(x));
            counts[2] += 1;
            if breaks_at(&NablaModule::direct_sum(a, b)?, &r)? != union {
                fails.push(format!("{na} (+) {nb}: not a multiset union at {r}"));
            }
            for built in [NablaModule::direct_sum(a, b)?, NablaModule::tensor(a, b)?] {
                counts[3] += 1;
                if let Err(e) = built.check_integrable() {
                    fails.push(format!("{na}, {nb}: {e}"));
                }
            }
        }
        counts[3] += 2;
        if let Err(e) = a.check_integrable().and_then(|_| NablaModule::dual(a).check_integrable()) {
            fails.push(format!("{na}: {e}"));
        }
    }
    let lifted = NablaModule::explicit(NablaModule::dwork(mono(5, &[1, -1]))?.matrices().to_vec())?;
    counts[3] += 1;
    if let Err(e) = lifted.check_integrable() {
        fails.push(format!("explicit: {e}"));
    }
    if fails.is_empty() {
        Ok((
            true,
            format!(
                "{} twisted-trivial tensors, {} duals, {} sums, {} integrability checks",
                counts[0], counts[1], counts[2], counts[3]
            ),
        ))
    } else {
        Ok((false, fail_list(&fails)))
    }
}

// ---- 8 ----

fn determinism(reference: &str) -> Result<(bool, String), CliError> {
    let pool = |n: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| CliError::Io(e.to_string()))
    };
    let many = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let one = pool(1)?.install(|| render(&run_core()));
    let all = pool(many)?.install(|| render(&run_core()));
    let pass = one == all && one == reference;
    let detail = if pass {
        format!("criteria 1-7 byte-identical on 1 and {many} threads ({} bytes)", one.len())
    } else {
        "report differs between thread counts".to_string()
    };
    Ok((pass, detail))
}
