//! Command-line front end.
//!
//! Every command writes plain ASCII (or JSON with `--json`) to the given
//! writer and returns the process exit code: 0 success, 1 negative or
//! unknown verdict, 2 usage or parse error, 3 cap exceeded.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::category::grid::diagram_suite;
use crate::corpus;
use crate::error::{Error, Result};
use crate::galois::{algebraic_closure, algebraic_set_of, definable_set_of, logical_closure, DefinableLattice};
use crate::halmos::{check_halmos_axioms, val, AxiomSampling, DefSet};
use crate::kb::{build_kb, kb_isomorphic, KbBounds, KbResult, KbVerdict, KnowledgeBase};
use crate::model::{same_model, FiniteModel, Limits, ModelRef};
use crate::oracle::RankTypes;
use crate::syntax::{parse_formula, Formula, Sort};
use crate::types::{isotypic, lg_equivalent, IsotypicVerdict, LgResult, LgVerdict, TypeBounds};

/// The `galois` suite runs the brute-force closure oracle only below this
/// many tuples.
const ORACLE_TUPLE_LIMIT: u128 = 1 << 16;

#[derive(Debug, Parser)]
#[command(name = "lgeo", version, about = "Logical geometry over finite models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Emit structured JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Term depth of atoms in EF games; term depth of grids for `check`.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Quantifier-rank bound for EF games.
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    /// Largest point space materialized.
    #[arg(long, global = true)]
    pub cap_points: Option<usize>,
    /// Term depth of the morphism grid used by `kb-iso`.
    #[arg(long, global = true, default_value_t = 1)]
    pub grid_depth: usize,
    /// Report elapsed wall-clock time.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the bundled models.
    Models,
    /// Print Val^X(u).
    Eval {
        model: String,
        #[arg(short = 'X', default_value = "x")]
        sort: String,
        formula: String,
    },
    /// Close a point set or a formula set.
    Closure {
        model: String,
        #[arg(short = 'X', default_value = "x")]
        sort: String,
        /// Points as `;`-separated tuples, e.g. `0,1;1,0`.
        #[arg(long)]
        points: Option<String>,
        /// Formulas; repeat for several.
        #[arg(long = "formulas")]
        formulas: Vec<String>,
        #[arg(long, value_enum, default_value_t = Mode::Logical)]
        mode: Mode,
    },
    /// Isotypy (and optionally LG-equivalence) of two models.
    Compare {
        model1: String,
        model2: String,
        /// Sorts to compare over; repeat for a sweep.
        #[arg(short = 'X')]
        sorts: Vec<String>,
        /// Also run the bounded LG-equivalence check.
        #[arg(long)]
        lg: bool,
    },
    /// Build a knowledge base and list its lattices.
    Kb {
        model: String,
        #[arg(short = 'X')]
        sorts: Vec<String>,
    },
    /// Decide whether two knowledge bases are isomorphic.
    KbIso {
        model1: String,
        model2: String,
        #[arg(short = 'X')]
        sorts: Vec<String>,
    },
    /// Run a property suite on a model.
    Check {
        model: String,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(short = 'X')]
        sorts: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Logical,
    Algebraic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Halmos,
    Diagrams,
    Galois,
    All,
}

/// Loaded models and configured caps.
pub struct Session {
    limits: Limits,
    models: Vec<ModelRef>,
}

impl Session {
    pub fn new(limits: Limits) -> Self {
        Session { limits, models: Vec::new() }
    }

    /// Loads a bundled model by name, or a model file by path. Loading the
    /// same name twice returns the same model.
    pub fn load(&mut self, name: &str) -> Result<ModelRef> {
        if let Some(m) = self.models.iter().find(|m| m.name() == name) {
            return Ok(m.clone());
        }
        let model = match corpus::by_name(name) {
            Some(m) => m.renamed(name, self.limits)?,
            None => FiniteModel::load(Path::new(name), self.limits)?,
        };
        if self.models.iter().any(|m| m.name() == model.name()) {
            return Err(Error::InvalidModel { path: name.into(), message: format!("model name `{}` already loaded", model.name()) });
        }
        let model = Arc::new(model);
        self.models.push(model.clone());
        Ok(model)
    }
}

struct Output {
    code: i32,
    text: String,
    json: serde_json::Value,
}

impl Output {
    fn ok(text: String, json: serde_json::Value) -> Self {
        Output { code: 0, text, json }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let start = Instant::now();
    let result = execute(&cli);
    let code = match result {
        Ok(output) => {
            let text = if cli.global.json {
                serde_json::to_string_pretty(&output.json).expect("json value") + "\n"
            } else {
                output.text
            };
            let _ = out.write_all(text.as_bytes());
            output.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    };
    if cli.global.timing {
        let _ = writeln!(err, "elapsed: {} ms", start.elapsed().as_millis());
    }
    code
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } => 3,
        _ => 2,
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    let mut limits = Limits::default();
    if let Some(cap) = g.cap_points {
        if cap == 0 {
            return Err(Error::InvalidSort("--cap-points must be positive".into()));
        }
        limits.max_points = cap;
    }
    let mut session = Session::new(limits);
    let bounds = TypeBounds { depth: g.depth.unwrap_or(3), rank: g.rank };
    match &cli.command {
        Command::Models => Ok(models()),
        Command::Eval { model, sort, formula } => {
            let m = session.load(model)?;
            eval(&m, &Sort::parse(sort)?, formula)
        }
        Command::Closure { model, sort, points, formulas, mode } => {
            let m = session.load(model)?;
            closure(&m, &Sort::parse(sort)?, points.as_deref(), formulas, *mode)
        }
        Command::Compare { model1, model2, sorts, lg } => {
            let m1 = session.load(model1)?;
            let m2 = session.load(model2)?;
            compare(&m1, &m2, &parse_sorts(sorts)?, bounds, *lg)
        }
        Command::Kb { model, sorts } => {
            let m = session.load(model)?;
            kb(&m, &parse_sorts(sorts)?)
        }
        Command::KbIso { model1, model2, sorts } => {
            let m1 = session.load(model1)?;
            let m2 = session.load(model2)?;
            kb_iso(&m1, &m2, &parse_sorts(sorts)?, KbBounds { term_depth: g.grid_depth })
        }
        Command::Check { model, suite, sorts } => {
            let m = session.load(model)?;
            check(&m, *suite, &parse_sorts(sorts)?, g.depth)
        }
    }
}

fn parse_sorts(sorts: &[String]) -> Result<Vec<Sort>> {
    if sorts.is_empty() {
        return Ok(vec![Sort::parse("x")?]);
    }
    sorts.iter().map(|s| Sort::parse(s)).collect()
}

fn models() -> Output {
    let mut text = String::new();
    let mut list = Vec::new();
    for m in corpus::all() {
        let ops: Vec<String> = m.sig().ops().iter().map(|o| format!("{}/{}", o.name, o.arity)).collect();
        let rels: Vec<String> = m.rels().rels().iter().map(|r| format!("{}/{}", r.name, r.arity)).collect();
        text += &format!("{:<13} |H| = {}  ops: {}", m.name(), m.size(), ops.join(" "));
        if !rels.is_empty() {
            text += &format!("  rels: {}", rels.join(" "));
        }
        text += "\n";
        list.push(json!({ "name": m.name(), "size": m.size(), "ops": ops, "rels": rels }));
    }
    Output::ok(text, json!(list))
}

fn set_json(a: &DefSet) -> serde_json::Value {
    let points: Vec<String> = a.points().map(|p| tuple(&p)).collect();
    json!({ "sort": a.sort().to_string(), "count": a.count(), "total": a.space().len(), "points": points })
}

fn tuple(p: &[usize]) -> String {
    let inner: Vec<String> = p.iter().map(|v| v.to_string()).collect();
    format!("({})", inner.join(","))
}

fn eval(m: &ModelRef, sort: &Sort, text: &str) -> Result<Output> {
    let u = parse_formula(text, m.sig(), m.rels())?;
    let a = val(&u, sort, m)?;
    let mut line = format!("{}/{} points:", a.count(), a.space().len());
    for p in a.points() {
        line += " ";
        line += &tuple(&p);
    }
    let json = json!({ "model": m.name(), "formula": u.to_string(), "value": set_json(&a) });
    Ok(Output::ok(line + "\n", json))
}

fn parse_points(m: &ModelRef, sort: &Sort, text: &str) -> Result<DefSet> {
    let mut tuples = Vec::new();
    for chunk in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let values = chunk
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| Error::InvalidSort(format!("bad point `{chunk}`"))))
            .collect::<Result<Vec<_>>>()?;
        tuples.push(values);
    }
    DefSet::from_points(m, sort, tuples)
}

fn closure(m: &ModelRef, sort: &Sort, points: Option<&str>, formulas: &[String], mode: Mode) -> Result<Output> {
    let mut note = None;
    let result = match (points, formulas.is_empty()) {
        (Some(_), false) => return Err(Error::InvalidSort("give either --points or --formulas, not both".into())),
        (Some(text), true) => {
            let a = parse_points(m, sort, text)?;
            match mode {
                Mode::Logical => logical_closure(&a),
                Mode::Algebraic => algebraic_closure(&a)?,
            }
        }
        (None, _) => {
            let t: Vec<Formula> = formulas.iter().map(|f| parse_formula(f, m.sig(), m.rels())).collect::<Result<_>>()?;
            if t.is_empty() {
                note = Some("empty input: the empty formula set describes the full space");
            }
            match mode {
                Mode::Logical => definable_set_of(&t, sort, m)?,
                Mode::Algebraic => algebraic_set_of(&t, sort, m)?,
            }
        }
    };
    let mut text = format!("{result}\n");
    if let Some(n) = note {
        text += &format!("note: {n}\n");
    }
    let mode_name = match mode {
        Mode::Logical => "logical",
        Mode::Algebraic => "algebraic",
    };
    let json = json!({ "model": m.name(), "mode": mode_name, "closure": set_json(&result), "note": note });
    Ok(Output::ok(text, json))
}

fn isotypic_json(v: &IsotypicVerdict) -> serde_json::Value {
    let witness = v.witness.as_ref().map(|w| {
        json!({ "first_model": w.first, "point": w.point.to_string(), "formula": w.formula.to_string(),
                "rank": w.formula.quantifier_rank() })
    });
    json!({ "result": v.result, "isomorphism": v.isomorphism.as_ref().map(|i| i.to_string()), "witness": witness })
}

fn lg_json(v: &LgVerdict) -> serde_json::Value {
    let witness = v.witness.as_ref().map(|w| {
        json!({ "first_model": w.first, "point": w.point.to_string(),
                "t": w.t.iter().map(|u| u.to_string()).collect::<Vec<_>>(), "u": w.u.to_string(),
                "in_first": w.in_first, "in_second": w.in_second })
    });
    json!({ "result": v.result, "rank": v.rank, "depth": v.depth, "sufficient": v.sufficient, "witness": witness })
}

fn compare(m1: &ModelRef, m2: &ModelRef, sorts: &[Sort], bounds: TypeBounds, lg: bool) -> Result<Output> {
    let mut text = String::new();
    let mut records = Vec::new();
    let mut code = 0;
    for sort in sorts {
        let prefix = if sorts.len() > 1 { format!("{sort}: ") } else { String::new() };
        let v = isotypic(m1, m2, sort, bounds)?;
        if v.result {
            let iso = v.isomorphism.as_ref().expect("positive verdict carries an isomorphism");
            if same_model(m1, m2) || (iso.is_identity() && **m1 == **m2) {
                text += &format!("{prefix}ISOTYPIC (identity)\n");
            } else {
                text += &format!("{prefix}ISOTYPIC, witness: {iso}\n");
            }
        } else {
            code = 1;
            match &v.witness {
                Some(w) => {
                    let (here, there) = if w.first { (m1, m2) } else { (m2, m1) };
                    text += &format!("{prefix}NOT ISOTYPIC, separating: {}\n", w.formula);
                    text += &format!("  point {} of {} satisfies it; no point of {} does\n", w.point, here.name(), there.name());
                }
                None => text += &format!("{prefix}NOT ISOTYPIC\n"),
            }
        }
        let mut record = json!({ "sort": sort.to_string(), "isotypic": isotypic_json(&v) });
        if lg {
            let l = lg_equivalent(m1, m2, sort, bounds)?;
            text += &match (&l.result, &l.witness) {
                (LgResult::Equivalent, _) => format!("  LG-EQUIVALENT at rank {}, depth {}\n", l.rank, l.depth),
                (LgResult::Inconclusive, _) => format!("  INCONCLUSIVE at rank {}, depth {}\n", l.rank, l.depth),
                (LgResult::NotEquivalent, Some(w)) => {
                    let side = if w.in_first { m1.name() } else { m2.name() };
                    format!("  NOT LG-EQUIVALENT: T = {{{}}}, u = {} lies in T^LL over {side} only\n", w.t[0], w.u)
                }
                (LgResult::NotEquivalent, None) => "  NOT LG-EQUIVALENT\n".to_string(),
            };
            if l.sufficient && (l.result == LgResult::Equivalent) != v.result {
                return Err(Error::Infeasible("isotypy and LG-equivalence disagree within sufficient bounds".into()));
            }
            record["lg"] = lg_json(&l);
        }
        records.push(record);
    }
    let json = json!({ "model1": m1.name(), "model2": m2.name(), "bounds": bounds, "sorts": records });
    Ok(Output { code, text, json })
}

fn kb(m: &ModelRef, sorts: &[Sort]) -> Result<Output> {
    let kb = build_kb(m, sorts)?;
    let mut text = format!("knowledge base over {}\n", m.name());
    let mut lattices = Vec::new();
    for (l, report) in kb.lattices().iter().zip(kb.check_anti()?) {
        text += &format!("sort {}: {} definable sets, {} orbits\n", l.sort(), l.len(), l.orbit_count());
        for (i, orbit) in kb.report().sorts.iter().find(|s| s.sort == l.sort().to_string()).expect("sort").orbits.iter().enumerate() {
            text += &format!("  orbit {i}: {}\n", orbit.join(" "));
        }
        for (mask, a) in l.elements().enumerate() {
            text += &format!("  [{mask}] {a}\n");
        }
        let status = if report.passed() { "verified" } else { "FAILED" };
        text += &format!("  description lattice: anti-isomorphic, {status} on {} pairs\n", report.pairs);
        lattices.push(json!({ "lattice": l.export(false)?, "anti": report }));
    }
    let code = if lattices.iter().all(|l| l["anti"]["failures"].as_array().is_some_and(|f| f.is_empty())) { 0 } else { 1 };
    Ok(Output { code, text, json: json!({ "model": m.name(), "sorts": lattices }) })
}

fn kb_iso(m1: &ModelRef, m2: &ModelRef, sorts: &[Sort], bounds: KbBounds) -> Result<Output> {
    let kb1: KnowledgeBase = build_kb(m1, sorts)?;
    let kb2: KnowledgeBase = build_kb(m2, sorts)?;
    let v: KbVerdict = kb_isomorphic(&kb1, &kb2, bounds)?;
    let mut text = match (v.result, v.route) {
        (KbResult::Isomorphic, Some(route)) => format!("ISOMORPHIC ({} route)\n", serde_json::to_value(route)?.as_str().unwrap_or("")),
        (KbResult::Isomorphic, None) => "ISOMORPHIC\n".to_string(),
        (KbResult::NotIsomorphic, _) => format!("NOT ISOMORPHIC: {}\n", v.obstruction.as_deref().unwrap_or("diagram violation")),
        (KbResult::Unknown, _) => "UNKNOWN at bounds\n".to_string(),
    };
    if let Some(iso) = &v.isomorphism {
        text += &format!("  isomorphism: {iso}\n");
    }
    if let Some(alpha) = &v.alpha {
        text += &format!("  alpha: {alpha}\n");
    }
    for map in &v.beta {
        let pairs: Vec<String> = map.orbit_map.iter().enumerate().map(|(i, j)| format!("{i}->{j}")).collect();
        text += &format!("  beta {}: orbits {}\n", map.sort, pairs.join(","));
    }
    for d in &v.details {
        text += &format!("  {d}\n");
    }
    text += &format!(
        "  grid: term depth {}, {} morphisms, {} cells, {} failures\n",
        v.grid.term_depth,
        v.grid.morphisms,
        v.grid.cells,
        v.grid.failures.len()
    );
    let code = if v.result == KbResult::Isomorphic { 0 } else { 1 };
    Ok(Output { code, text, json: serde_json::to_value(&v)? })
}

#[derive(Serialize)]
struct SuiteLine {
    suite: &'static str,
    sort: String,
    passed: bool,
    detail: String,
}

fn check(m: &ModelRef, suite: Suite, sorts: &[Sort], depth: Option<usize>) -> Result<Output> {
    let mut lines = Vec::new();
    let run_all = suite == Suite::All;
    if run_all || suite == Suite::Halmos {
        for sort in sorts {
            let r = check_halmos_axioms(m, sort, AxiomSampling::default())?;
            let failed: Vec<&str> = r.results.iter().filter(|a| a.counterexample.is_some()).map(|a| a.axiom).collect();
            let detail = format!("{} axioms, {} instances, {} failures", r.results.len(), r.instances(), failed.len());
            lines.push(SuiteLine { suite: "halmos", sort: sort.to_string(), passed: r.passed(), detail });
        }
    }
    if run_all || suite == Suite::Diagrams {
        let d = depth.unwrap_or(2);
        let (d1, d2) = diagram_suite(m, d, d)?;
        for (name, r) in [("diagram1", d1), ("diagram2", d2)] {
            let detail = format!(
                "grid depth {d}: {} morphisms, {} formulas or sets, {} cells, {} failures",
                r.morphisms,
                r.formulas,
                r.cells,
                r.failures.len()
            );
            lines.push(SuiteLine { suite: name, sort: "(u),(u,v) -> (x),(x,y)".into(), passed: r.passed(), detail });
        }
    }
    if run_all || suite == Suite::Galois {
        for sort in sorts {
            let lattice = DefinableLattice::new(m, sort)?;
            let anti = lattice.check_anti()?;
            let detail = format!("{} elements, {} pairs, {} failures", anti.elements, anti.pairs, anti.failures.len());
            lines.push(SuiteLine { suite: "anti-isomorphism", sort: sort.to_string(), passed: anti.passed(), detail });
            let space = m.space(sort)?;
            let rank = m.size() + sort.len();
            let tuples = (m.size() as u128).saturating_pow((sort.len() + rank) as u32);
            if space.len() <= 9 && tuples <= ORACLE_TUPLE_LIMIT {
                let types = RankTypes::compute(m, sort, rank)?;
                let mut mismatches = 0;
                for bits in 0..1usize << space.len() {
                    let a = DefSet::from_indices(m, sort, (0..space.len()).filter(|i| bits >> i & 1 == 1))?;
                    if logical_closure(&a) != types.closure(&a)? {
                        mismatches += 1;
                    }
                }
                let detail = format!("{} subsets against the rank-{rank} type oracle, {mismatches} mismatches", 1usize << space.len());
                lines.push(SuiteLine { suite: "closure-oracle", sort: sort.to_string(), passed: mismatches == 0, detail });
            }
        }
    }
    let mut text = String::new();
    for l in &lines {
        let status = if l.passed { "PASS" } else { "FAIL" };
        text += &format!("{status} {} {}: {}\n", l.suite, l.sort, l.detail);
    }
    let code = if lines.iter().all(|l| l.passed) { 0 } else { 1 };
    Ok(Output { code, text, json: json!({ "model": m.name(), "results": lines }) })
}
