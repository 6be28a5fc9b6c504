//! Command implementations. Each returns the text to print, so the binary,
//! the self-test and the tests share one code path.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use swanlab_core::surface::{Ambient, PointReport, PointSpec, SurfaceModel};
use swanlab_core::{
    break_multiset, fmt_q, hidden_turning_scan, parse_component, parse_q, point_breaks, subharmonicity_check,
    swan_divisor_check, sweep_simplex, BreakSurface, NablaModule, Normalization, PreparedModule, WeightVector, Q,
};

use crate::doc::{normalization_text, parse_ambient, parse_spec, ModuleSpecDoc};
use crate::error::CliError;
use crate::zoo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Where the module document comes from.
#[derive(Clone, Debug)]
pub enum Source {
    File(PathBuf),
    Zoo(String),
    Inline(String),
}

pub struct Loaded {
    pub doc: ModuleSpecDoc,
    pub module: NablaModule,
}

pub fn load(src: &Source) -> Result<Loaded, CliError> {
    let (doc, base) = match src {
        Source::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let doc = parse_spec(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            (doc, path.parent().map(Path::to_path_buf))
        }
        Source::Zoo(name) => (zoo::find(name)?.parse()?, None),
        Source::Inline(text) => (parse_spec(text)?, None),
    };
    let module = doc.build(base.as_deref())?;
    Ok(Loaded { doc, module })
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
}

pub fn parse_weights(s: &str) -> Result<Vec<Q>, CliError> {
    s.split(',')
        .map(|x| parse_q(x.trim()).ok_or_else(|| CliError::Usage(format!("bad weight `{}`", x.trim()))))
        .collect()
}

/// `simplex`, `natural`, a variable name, `var(x)`, or `monomial(1,-1)`.
pub fn parse_normalization(s: &str, vars: &[String]) -> Result<Normalization, CliError> {
    let s = s.trim();
    let var = |v: &str| {
        vars.iter()
            .position(|x| x == v)
            .map(Normalization::ByVariable)
            .ok_or_else(|| CliError::Usage(format!("unknown variable `{v}` in normalization")))
    };
    if s == "simplex" {
        return Ok(Normalization::Simplex);
    }
    if s == "natural" {
        return Ok(Normalization::Natural);
    }
    if let Some(v) = s.strip_prefix("var(").and_then(|r| r.strip_suffix(')')) {
        return var(v.trim());
    }
    let mono = s.strip_prefix("monomial(").and_then(|r| r.strip_suffix(')')).or_else(|| s.strip_prefix("monomial:"));
    if let Some(list) = mono {
        let j: Vec<i64> = list
            .split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|_| CliError::Usage(format!("bad exponent `{}`", x.trim()))))
            .collect::<Result<_, _>>()?;
        if j.len() != vars.len() {
            return Err(CliError::Usage(format!("monomial needs {} exponents", vars.len())));
        }
        return Ok(Normalization::ByMonomial(j));
    }
    var(s)
}

// ---- breaks ----

pub fn breaks(l: &Loaded, weights: Option<Vec<Q>>, norm: Option<Normalization>, fmt: Format) -> Result<String, CliError> {
    let w = weights
        .or_else(|| l.doc.params.weights.clone())
        .ok_or_else(|| CliError::Usage("no weights given (use --weights or a `weights` setting)".into()))?;
    if w.len() != l.doc.vars.len() {
        return Err(CliError::Usage(format!("expected {} weights, found {}", l.doc.vars.len(), w.len())));
    }
    let norm = norm.or_else(|| l.doc.params.normalize.clone()).unwrap_or(Normalization::Simplex);
    let b = break_multiset(&PreparedModule::new(&l.module)?, &WeightVector::new(w), &norm)?;
    if fmt == Format::Json {
        return json(&b);
    }
    let mut s = String::new();
    let _ = writeln!(s, "weights {}", b.weights);
    let _ = writeln!(s, "normalization {}", normalization_text(&b.normalization, &l.doc.vars));
    let _ = writeln!(s, "breaks {}", b.breaks.iter().map(fmt_q).collect::<Vec<_>>().join(","));
    let dom: Vec<String> = b
        .dominant
        .iter()
        .map(|axes| axes.iter().map(|&i| l.doc.vars[i].clone()).collect::<Vec<_>>().join("+"))
        .collect();
    let _ = writeln!(s, "dominant {}", dom.join(","));
    let _ = writeln!(s, "swan {}", fmt_q(&b.swan));
    Ok(s)
}

// ---- sweep ----

/// CSV with columns `r_1..r_n, b_1..b_d, swan`.
pub fn surface_csv(s: &BreakSurface) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in s.csv_rows() {
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Structured text: one `[fit ...]` section per fitted function.
pub fn fit_document(s: &BreakSurface, vars: &[String]) -> String {
    let names: Vec<String> = (1..=s.n).map(|i| format!("r{i}")).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# break surface over the simplex, coordinates {} for {}", names.join(","), vars.join(","));
    let _ = writeln!(out, "grid = {}", s.grid);
    let _ = writeln!(out, "nvars = {}", s.n);
    let _ = writeln!(out, "rank = {}", s.rank);
    let _ = writeln!(out, "points = {}", s.table.len());
    let _ = writeln!(out, "resolution_limited = {}", s.resolution_limited);
    for e in &s.excluded {
        let _ = writeln!(out, "excluded = {} # {}", e.r.iter().map(fmt_q).collect::<Vec<_>>().join(","), e.reason);
    }
    for f in &s.fits {
        let _ = writeln!(out);
        let _ = writeln!(out, "[fit {}]", f.label);
        let _ = writeln!(out, "convex = {}", verdict(f.convex.ok));
        let _ = writeln!(out, "integral_pieces = {}", verdict(f.integral_pieces));
        let _ = writeln!(out, "hasse_arf = {}", verdict(f.hasse_arf.ok));
        for (label, v) in [("convex", &f.convex), ("hasse_arf", &f.hasse_arf)] {
            if let Some(w) = &v.witness {
                let _ = writeln!(out, "{label}_witness = {}", w.join(" "));
            }
        }
        if let Some(e) = &f.fit_error {
            let _ = writeln!(out, "fit_error = {e}");
        }
        if let Some(p) = &f.fit {
            for a in &p.pieces {
                let _ = writeln!(out, "piece = {} # {}", a.to_record(), a.display_with(&names));
            }
            for a in &p.region {
                let _ = writeln!(out, "region = {} # {} >= 0", a.to_record(), a.display_with(&names));
            }
        }
        for l in &f.loci {
            let _ = writeln!(out, "locus = {} # pieces {} and {}", l.equation, l.pieces.0 + 1, l.pieces.1 + 1);
        }
    }
    out
}

pub fn sweep(l: &Loaded, grid: Option<u32>, out_dir: Option<&Path>, fmt: Format) -> Result<String, CliError> {
    let n = grid.or(l.doc.params.grid).unwrap_or(12);
    let s = sweep_simplex(&l.module, n)?;
    let csv = surface_csv(&s)?;
    let fit = fit_document(&s, &l.doc.vars);
    let body = if fmt == Format::Json { json(&s)? } else { String::new() };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("surface.csv"), &csv)?;
        std::fs::write(dir.join("fit.txt"), &fit)?;
        if fmt == Format::Json {
            std::fs::write(dir.join("surface.json"), &body)?;
        }
        let mut msg = format!("wrote {} and {}", dir.join("surface.csv").display(), dir.join("fit.txt").display());
        msg.push('\n');
        msg.push_str(&fit_summary(&s));
        return Ok(msg);
    }
    if fmt == Format::Json {
        return Ok(body);
    }
    Ok(format!("{csv}\n{fit}"))
}

fn fit_summary(s: &BreakSurface) -> String {
    s.fits
        .iter()
        .map(|f| format!("{}: {}\n", f.label, if f.passes() { "pass" } else { "fail" }))
        .collect()
}

// ---- surfaces ----

/// Builds the surface model from document settings, with optional overrides.
pub fn surface_model(
    doc: &ModuleSpecDoc,
    module: &NablaModule,
    ambient: Option<&str>,
    divisor: Option<&str>,
) -> Result<SurfaceModel, CliError> {
    if doc.vars.len() != 2 {
        return Err(CliError::Usage(format!("surface commands need two variables, found {}", doc.vars.len())));
    }
    let amb: Ambient = match ambient {
        Some(a) => parse_ambient(a).ok_or_else(|| CliError::Usage(format!("unknown ambient `{a}` (P1xP1 or P2)")))?,
        None => doc.params.ambient.unwrap_or(Ambient::P1xP1),
    };
    let names = [doc.vars[0].clone(), doc.vars[1].clone()];
    let div = divisor
        .map(str::to_string)
        .or_else(|| doc.params.divisor.clone())
        .ok_or_else(|| CliError::Usage("no divisor given (use --divisor or a `divisor` setting)".into()))?;
    let z = parse_component(amb, &div, &names).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut model = SurfaceModel::new(amb, module, z, names.clone())?;
    if let Some(b) = &doc.params.boundary {
        let ids = b
            .iter()
            .map(|c| parse_component(amb, c, &names).map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        model = model.with_boundary(&ids)?;
    }
    Ok(model)
}

fn point_lines(out: &mut String, pt: &PointReport) {
    let br: Vec<String> = pt
        .breaks
        .iter()
        .map(|b| {
            let slope = fmt_q(&b.slope);
            match slope.strip_prefix('-') {
                Some(abs) => format!("{} - {abs}*r", fmt_q(&b.intercept)),
                None => format!("{} + {slope}*r", fmt_q(&b.intercept)),
            }
        })
        .collect();
    let kind = format!("{:?}", pt.kind).to_lowercase();
    let _ = writeln!(
        out,
        "point {} [{}; chart at {}; {}]: breaks {} swan' {}",
        pt.label,
        kind,
        pt.chart,
        if pt.on_boundary_crossing { "boundary crossing" } else { "smooth" },
        br.join(", "),
        fmt_q(&pt.swan_slope)
    );
    for m in &pt.monotonicity {
        let _ = writeln!(
            out,
            "  monotonicity i={}: {} + {} = {} {}",
            m.index,
            fmt_q(&m.slope_sum),
            m.ell,
            fmt_q(&m.value),
            if !m.holds {
                "VIOLATED"
            } else if m.strict {
                "strict (exposed)"
            } else {
                "equality"
            }
        );
    }
}

pub struct CheckOutput {
    pub text: String,
    pub pass: bool,
}

pub fn surface_check(
    l: &Loaded,
    ambient: Option<&str>,
    divisor: Option<&str>,
    point: Option<&str>,
    grid: Option<u32>,
    fmt: Format,
) -> Result<CheckOutput, CliError> {
    let model = surface_model(&l.doc, &l.module, ambient, divisor)?;
    if let Some(pt) = point {
        let spec = PointSpec::parse(pt, model.prime)?;
        let r = point_breaks(&model, &spec)?;
        let pass = r.monotonicity.iter().all(|m| m.holds);
        let text = if fmt == Format::Json {
            json(&r)?
        } else {
            let mut s = String::new();
            point_lines(&mut s, &r);
            s
        };
        return Ok(CheckOutput { text, pass });
    }
    let grid = grid.or(l.doc.params.grid).unwrap_or(12);
    let sub = subharmonicity_check(&model)?;
    let div = swan_divisor_check(&model, grid)?;
    let mono_ok = sub.points.iter().chain(sub.generic_sample.iter()).all(|p| p.monotonicity.iter().all(|m| m.holds));
    let pass = sub.pass && div.pass && mono_ok;
    if fmt == Format::Json {
        #[derive(Serialize)]
        struct Out<'a> {
            subharmonicity: &'a swanlab_core::SubharmonicityReport,
            swan_divisor: &'a swanlab_core::SwanDivisorReport,
            monotonicity: bool,
            pass: bool,
        }
        let text = json(&Out { subharmonicity: &sub, swan_divisor: &div, monotonicity: mono_ok, pass })?;
        return Ok(CheckOutput { text, pass });
    }
    let mut s = String::new();
    let _ = writeln!(s, "ambient {} divisor {} (Z^2 = {}, genus {})", sub.ambient, sub.component, sub.self_intersection, sub.genus);
    let _ = writeln!(s, "boundary {}", sub.boundary.join(", "));
    let g = &sub.generic;
    let gb: Vec<String> = g.leaves.iter().map(|l| fmt_q(&l.break_value)).collect();
    let jumps: Vec<String> = g.ell_by_jump.iter().map(|(i, e)| format!("{i}:{e}")).collect();
    let _ = writeln!(s, "generic breaks {} swan {} ell {} ell_i {}", gb.join(","), fmt_q(&g.swan), g.ell, jumps.join(","));
    for pt in &sub.points {
        point_lines(&mut s, pt);
    }
    match &sub.generic_sample {
        Some(pt) => {
            let _ = writeln!(s, "generic sample (seed {:#x}):", sub.generic_seed);
            point_lines(&mut s, pt);
        }
        None => {
            let _ = writeln!(s, "generic sample: none (every F_p point is special)");
        }
    }
    let _ = writeln!(
        s,
        "subharmonicity: lhs {} rhs {} {}{}",
        fmt_q(&sub.lhs),
        fmt_q(&sub.rhs),
        verdict(sub.pass),
        if sub.equality { " (equality)" } else { "" }
    );
    let sd: Vec<String> = div.swan_divisor.iter().map(|(c, v)| format!("{v}*[{c}]")).collect();
    let _ = writeln!(s, "swan divisor {}", sd.join(" + "));
    for c in &div.components {
        let _ = writeln!(
            s,
            "  {}: Z.(Swan + ell(K+D)) = {} lemma rhs {} clean {} {}",
            c.component,
            fmt_q(&c.intersection),
            fmt_q(&c.lemma_rhs),
            c.clean,
            verdict(c.pass)
        );
        for x in &c.crossings {
            let _ = writeln!(
                s,
                "    crossing {}: Swan {} >= swan' {} {}{}",
                x.other,
                fmt_q(&x.other_swan),
                fmt_q(&x.slope_here),
                verdict(x.holds),
                if x.hidden { " (hidden turning)" } else { "" }
            );
        }
    }
    let _ = writeln!(s, "result {}", verdict(pass));
    Ok(CheckOutput { text: s, pass })
}

pub fn turning_scan(
    l: &Loaded,
    ambient: Option<&str>,
    divisor: Option<&str>,
    crossing: Option<&str>,
    grid: Option<u32>,
    fmt: Format,
) -> Result<CheckOutput, CliError> {
    let model = surface_model(&l.doc, &l.module, ambient, divisor)?;
    let grid = grid.or(l.doc.params.grid).unwrap_or(12);
    let which: Vec<usize> = match crossing {
        None | Some("all") => vec![0, 1],
        Some("0") => vec![0],
        Some("inf") => vec![1],
        Some(other) => return Err(CliError::Usage(format!("crossing must be 0, inf or all, found `{other}`"))),
    };
    let scans = which.iter().map(|&w| hidden_turning_scan(&model, w, grid)).collect::<Result<Vec<_>, _>>()?;
    let pass = scans.iter().all(|s| s.slope_test);
    if fmt == Format::Json {
        return Ok(CheckOutput { text: json(&scans)?, pass });
    }
    let mut s = String::new();
    for sc in &scans {
        let _ = writeln!(s, "crossing {} (grid {}):", sc.crossing, sc.grid);
        for f in &sc.functions {
            let _ = writeln!(s, "  f_{} = {}", f.index, f.values.join(","));
            let _ = writeln!(
                s,
                "  f_{}'(0) = {} chord {} {}",
                f.index,
                fmt_q(&f.right_slope),
                fmt_q(&f.chord),
                if f.affine { "affine" } else { "bent" }
            );
        }
        let _ = writeln!(s, "  hidden {} slope test {}", sc.hidden, verdict(sc.slope_test));
    }
    Ok(CheckOutput { text: s, pass })
}

// ---- zoo ----

pub fn zoo_listing(name: Option<&str>, fmt: Format) -> Result<String, CliError> {
    let entries = match name {
        Some(n) => vec![zoo::find(n)?],
        None => zoo::entries(),
    };
    if fmt == Format::Json {
        return json(&entries);
    }
    let mut s = String::new();
    for e in &entries {
        let _ = writeln!(s, "{} [{}; source: {}]", e.name, format!("{:?}", e.kind).to_lowercase(), e.source);
        let _ = writeln!(s, "  {}", e.summary);
        if name.is_some() {
            for line in e.doc.trim().lines() {
                let _ = writeln!(s, "  | {line}");
            }
        }
        for (k, v) in &e.expect {
            let _ = writeln!(s, "  expect {k} = {v}");
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lxy_breaks_at_two_three() {
        let l = load(&Source::Zoo("lxy-infinity".into())).unwrap();
        let out = breaks(&l, Some(parse_weights("2,3").unwrap()), None, Format::Text).unwrap();
        assert!(out.contains("swan 5/1"), "{out}");
    }

    #[test]
    fn normalization_names() {
        let vars = vec!["x".to_string(), "y".to_string()];
        assert_eq!(parse_normalization("y", &vars).unwrap(), Normalization::ByVariable(1));
        assert_eq!(parse_normalization("var(x)", &vars).unwrap(), Normalization::ByVariable(0));
        assert_eq!(parse_normalization("monomial:1,-1", &vars).unwrap(), Normalization::ByMonomial(vec![1, -1]));
        assert!(parse_normalization("z", &vars).is_err());
    }

    #[test]
    fn two_leaf_sweep_document() {
        let l = load(&Source::Zoo("two-leaf-sum".into())).unwrap();
        let out = sweep(&l, Some(12), None, Format::Text).unwrap();
        assert!(out.starts_with("r_1,r_2,b_1,b_2,swan\n"));
        assert!(out.contains("piece = 2/1,0/1;2/1"));
        assert!(out.contains("[fit B_2]"));
    }
}
