//! Command-line surface. The binary only forwards `std::env::args` to [`run`],
//! so every command can be driven in-process from tests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::demand::{demand_closed_form, demand_numeric, demand_quadlog, DemandError, DemandSet, NumericOptions};
use crate::equilibrium::{
    classify_bd, classify_quadlog, conditions, scan_generic, EquilibriumError, ScanGrid,
};
use crate::model::{
    validate_economy, Bundle, Classification, ConditionReport, EconomyAB, Endowment, Outcome,
    RelativePrice, UtilitySpec,
};
use crate::oracle::{brute_force_equilibria, verify_equilibrium, OracleOptions};
use crate::special::{g, x_star};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Relative price tolerance for classifier/oracle agreement.
pub const PRICE_AGREEMENT: f64 = 1e-6;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn precondition(message: impl Into<String>) -> Self {
        Self { code: EXIT_PRECONDITION, message: message.into() }
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("i/o error: {e}"))
    }
}

type CmdResult = Result<i32, CliError>;

#[derive(Debug, Parser)]
#[command(name = "nceq", version, about = "Equilibrium existence for two-good economies with a non-convex agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Agent {
    A,
    B,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify an economy and explain the deciding inequalities.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Sweep one numeric config field and write one CSV row per value.
    Sweep {
        config: PathBuf,
        /// Field path such as `agentB.utility.d` or `agentA.endowment[1]`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Geometric instead of linear spacing.
        #[arg(long)]
        log: bool,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the Edgeworth box as SVG.
    Edgeworth {
        config: PathBuf,
        /// SVG destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the plotted point series as CSV.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Draw demands at this price instead of at the equilibrium.
        #[arg(long)]
        at_price: Option<f64>,
    },
    /// Compare the classifier with the brute-force oracle.
    Verify {
        config: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        grid: usize,
        #[arg(long)]
        p_min: Option<f64>,
        #[arg(long)]
        p_max: Option<f64>,
    },
    /// Print an agent's demand set at a price.
    Demand {
        config: PathBuf,
        #[arg(long, value_enum, ignore_case = true)]
        agent: Agent,
        #[arg(long, allow_negative_numbers = true)]
        price: f64,
    },
    /// Print the root x* of g.
    Xstar {
        #[arg(long, default_value_t = 1e-12, allow_negative_numbers = true)]
        tol: f64,
    },
}

/// Parse `args` (program name first) and run the command. Returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze { config, json } => cmd_analyze(&config, json, out),
        Command::Sweep { config, param, from, to, steps, log, out: path } => {
            cmd_sweep(&config, &SweepSpec { param, from, to, steps, log }, path.as_deref(), out)
        }
        Command::Edgeworth { config, out: path, data, at_price } => {
            cmd_edgeworth(&config, path.as_deref(), data.as_deref(), at_price, out)
        }
        Command::Verify { config, grid, p_min, p_max } => cmd_verify(&config, grid, p_min, p_max, out),
        Command::Demand { config, agent, price } => cmd_demand(&config, agent, price, out),
        Command::Xstar { tol } => cmd_xstar(tol, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// `x` with 12 significant digits, trailing zeros dropped, `.` as separator.
/// Magnitudes outside `[1e-5, 1e12)` use exponent notation.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn read_config_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: invalid JSON: {e}", path.display())))
}

fn economy_from_value(raw: &Value) -> Result<EconomyAB, CliError> {
    validate_economy(raw).map_err(|e| CliError::input(e.to_string()))
}

pub fn load_economy(path: &Path) -> Result<EconomyAB, CliError> {
    economy_from_value(&read_config_value(path)?)
}

/// Write `contents` to `path` through a temporary file in the same
/// directory, so a failed run never leaves a partial file behind.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, contents: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes()),
        None => Ok(out.write_all(contents.as_bytes())?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed-form conditions for log agent A against quad-log agent B.
    ClosedForm,
    /// Closed-form conditions for an agent who only values good 2.
    LinearAgent,
    /// Two-branch scan with agent A's closed-form demand.
    Scanner,
    /// Brute-force search over numeric demands.
    Oracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::LinearAgent => "linear-agent closed form",
            Method::Scanner => "two-branch scan",
            Method::Oracle => "brute-force oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumPoint {
    pub price: RelativePrice,
    pub branch: Outcome,
    pub alloc_a: Bundle,
    pub alloc_b: Bundle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub method: Method,
    pub classification: Classification,
    /// All equilibria found, ascending in price. Empty for `Boundary`
    /// classifications without a face-value equilibrium.
    pub equilibria: Vec<EquilibriumPoint>,
}

/// Log-spaced price window used by the scanner and oracle fallbacks, centred
/// on the aggregate endowment ratio.
pub fn default_window(econ: &EconomyAB, points: usize) -> ScanGrid {
    let (s1, s2) = econ.totals();
    let r = s1 / s2;
    ScanGrid::new(1e-4 * r, 1e4 * r, points).expect("positive window")
}

fn from_points(method: Method, mut points: Vec<EquilibriumPoint>) -> Analysis {
    points.sort_by(|a, b| a.price.value().total_cmp(&b.price.value()));
    let first = points.first().copied();
    Analysis {
        method,
        classification: Classification {
            outcome: first.map_or(Outcome::NoEquilibrium, |p| p.branch),
            price: first.map(|p| p.price),
            alloc_a: first.map(|p| p.alloc_a),
            alloc_b: first.map(|p| p.alloc_b),
            report: ConditionReport::default(),
            nominal: None,
            case: None,
        },
        equilibria: points,
    }
}

fn from_classification(method: Method, c: Classification) -> Analysis {
    let equilibria = match (c.price, c.alloc_a, c.alloc_b) {
        (Some(price), Some(alloc_a), Some(alloc_b)) => vec![EquilibriumPoint {
            price,
            branch: c.nominal.unwrap_or(c.outcome),
            alloc_a,
            alloc_b,
        }],
        _ => Vec::new(),
    };
    Analysis { method, classification: c, equilibria }
}

fn scanner_analysis(econ: &EconomyAB) -> Result<Analysis, EquilibriumError> {
    let scan = scan_generic(econ, default_window(econ, 20_000))?;
    let (s1, _) = econ.totals();
    let mut points = Vec::new();
    for (branch, roots) in [(Outcome::Corner, &scan.roots_corner), (Outcome::Interior, &scan.roots_interior)] {
        for &price in roots {
            let a = demand_closed_form(&econ.utility_a, price, econ.endow_a)?.first();
            let m_b = econ.endow_b.income_at(price);
            let c1_b = match branch {
                Outcome::Corner => 0.0,
                _ => (s1 - a.c1).max(0.0),
            };
            points.push(EquilibriumPoint {
                price,
                branch,
                alloc_a: a,
                alloc_b: Bundle::on_budget(c1_b, m_b, price),
            });
        }
    }
    Ok(from_points(Method::Scanner, points))
}

/// Run the oracle on `grid` and wrap the result as an analysis.
pub fn oracle_analysis(econ: &EconomyAB, grid: ScanGrid) -> Analysis {
    let (s1, _) = econ.totals();
    let points = brute_force_equilibria(econ, grid, OracleOptions::default())
        .into_iter()
        .map(|e| EquilibriumPoint {
            price: e.price,
            branch: if e.alloc_b.c1 <= 1e-9 * s1.max(1.0) { Outcome::Corner } else { Outcome::Interior },
            alloc_a: e.alloc_a,
            alloc_b: e.alloc_b,
        })
        .collect();
    from_points(Method::Oracle, points)
}

/// Classify with the most specific method that applies: closed form for the
/// log / quad-log and linear / quad-log economies, the two-branch scanner for
/// other single-valued agents against quad-log, the oracle otherwise.
pub fn analyze_economy(econ: &EconomyAB) -> Result<Analysis, EquilibriumError> {
    match (econ.utility_a, econ.utility_b) {
        (UtilitySpec::WeightedLog { lambda: 0.5 }, UtilitySpec::QuadLog { .. }) => {
            Ok(from_classification(Method::ClosedForm, classify_quadlog(econ)?))
        }
        (UtilitySpec::LinearGood2, UtilitySpec::QuadLog { d }) if d > 0.0 => Ok(from_classification(
            Method::LinearAgent,
            classify_bd(econ.endow_b, econ.endow_a, d)?,
        )),
        (UtilitySpec::Power { .. }, _) => Ok(oracle_analysis(econ, default_window(econ, 20_000))),
        (_, UtilitySpec::QuadLog { .. }) => match scanner_analysis(econ) {
            Ok(a) => Ok(a),
            Err(EquilibriumError::Demand(_)) | Err(EquilibriumError::MultiValuedAgentA(_)) => {
                Ok(oracle_analysis(econ, default_window(econ, 20_000)))
            }
            Err(e) => Err(e),
        },
        _ => Ok(oracle_analysis(econ, default_window(econ, 20_000))),
    }
}

/// Names for the two sides of each reported condition.
fn condition_sides(name: &str) -> (&'static str, &'static str) {
    match name {
        conditions::CORNER_INCOME => ("m_cor", "x* sqrt(D)"),
        conditions::INTERIOR_WEIGHT => ("Q", "4D"),
        conditions::INTERIOR_ON_BRANCH => ("pi_int", "(eA1+eB1)/(eA2+eB2)"),
        conditions::INTERIOR_INCOME => ("m_int", "x* sqrt(D)"),
        conditions::BD_AGGREGATE => ("(eA1+eB1)^2", "D"),
        _ => ("lhs", "rhs"),
    }
}

pub fn outcome_line(c: &Classification) -> String {
    match c.outcome {
        Outcome::NoEquilibrium => match c.case {
            Some(case) => format!("no equilibrium (case {})", case.label()),
            None => "no equilibrium".into(),
        },
        Outcome::Boundary => format!(
            "boundary (face value: {})",
            c.nominal.map_or("none", Outcome::label)
        ),
        o => o.label().to_string(),
    }
}

fn fmt_bundle(b: Bundle) -> String {
    format!("({}, {})", fmt_num(b.c1), fmt_num(b.c2))
}

fn describe_agent(e: Endowment, u: &UtilitySpec) -> String {
    format!("{} e=({}, {})", u.tag(), fmt_num(e.good1()), fmt_num(e.good2()))
}

pub fn analysis_text(econ: &EconomyAB, a: &Analysis) -> String {
    let c = &a.classification;
    let mut s = String::new();
    let _ = writeln!(s, "agent A: {}", describe_agent(econ.endow_a, &econ.utility_a));
    let _ = writeln!(s, "agent B: {}", describe_agent(econ.endow_b, &econ.utility_b));
    let _ = writeln!(s, "method: {}", a.method.label());
    let _ = writeln!(s, "outcome: {}", outcome_line(c));
    for (i, e) in a.equilibria.iter().enumerate() {
        let tag = if a.equilibria.len() > 1 { format!(" #{}", i + 1) } else { String::new() };
        let _ = writeln!(s, "equilibrium{tag}: {} p = {}", e.branch.label(), fmt_num(e.price.value()));
        let _ = writeln!(s, "  agent A bundle: {}", fmt_bundle(e.alloc_a));
        let _ = writeln!(s, "  agent B bundle: {}", fmt_bundle(e.alloc_b));
    }
    if !c.report.entries.is_empty() {
        let _ = writeln!(s, "conditions:");
        for cond in &c.report.entries {
            let (l, r) = condition_sides(&cond.name);
            let verdict = if cond.satisfied { "holds" } else { "fails" };
            let edge = if cond.boundary { ", at boundary" } else { "" };
            let _ = writeln!(
                s,
                "  {}: {l} = {} {} {r} = {} ({verdict}{edge})",
                cond.name,
                fmt_num(cond.lhs),
                cond.relation.symbol(),
                fmt_num(cond.rhs)
            );
        }
    }
    s
}

pub fn analysis_json(econ: &EconomyAB, a: &Analysis) -> String {
    let doc = json!({
        "config": econ.to_config(),
        "method": a.method,
        "outcome": a.classification.outcome.label(),
        "case": a.classification.case.map(|c| c.label()),
        "nominal": a.classification.nominal.map(Outcome::label),
        "price": a.classification.price,
        "alloc_a": a.classification.alloc_a,
        "alloc_b": a.classification.alloc_b,
        "equilibria": a.equilibria,
        "conditions": a.classification.report.entries,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

fn cmd_analyze(config: &Path, as_json: bool, out: &mut dyn Write) -> CmdResult {
    let econ = load_economy(config)?;
    let analysis = analyze_economy(&econ)?;
    let text = if as_json { analysis_json(&econ, &analysis) } else { analysis_text(&econ, &analysis) };
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub log: bool,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.steps < 2 {
            return Err(CliError::input(format!("--steps must be at least 2, got {}", self.steps)));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::input("--from and --to must be finite"));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(CliError::input("--log needs positive --from and --to"));
        }
        let n = self.steps - 1;
        Ok((0..self.steps)
            .map(|i| {
                let t = i as f64 / n as f64;
                if i == 0 {
                    self.from
                } else if i == n {
                    self.to
                } else if self.log {
                    (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp()
                } else {
                    self.from + t * (self.to - self.from)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PathStep {
    Key(String),
    Index(usize),
}

fn parse_param_path(path: &str) -> Result<Vec<PathStep>, CliError> {
    let bad = || CliError::input(format!("bad parameter path `{path}`"));
    let mut steps = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(bad());
        }
        steps.push(PathStep::Key(key.to_string()));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            if !rest.starts_with('[') {
                return Err(bad());
            }
            let idx = rest[1..close].parse::<usize>().map_err(|_| bad())?;
            steps.push(PathStep::Index(idx));
            rest = &rest[close + 1..];
        }
    }
    Ok(steps)
}

/// Replace the numeric field at `path` in a config document.
pub fn set_param(doc: &mut Value, path: &str, value: f64) -> Result<(), CliError> {
    let steps = parse_param_path(path)?;
    let missing = || CliError::input(format!("parameter path `{path}` does not name a numeric config field"));
    let mut cur = doc;
    for step in &steps {
        cur = match step {
            PathStep::Key(k) => cur.get_mut(k.as_str()),
            PathStep::Index(i) => cur.get_mut(*i),
        }
        .ok_or_else(missing)?;
    }
    if !cur.is_number() {
        return Err(missing());
    }
    *cur = json!(value);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub outcome: Outcome,
    pub price: Option<f64>,
    pub c_a1: Option<f64>,
    pub c_b1: Option<f64>,
    pub boundary: bool,
}

pub const SWEEP_HEADER: &str = "param,value,outcome,price,cA1,cB1,boundary";

impl SweepRow {
    pub fn from_analysis(param: &str, value: f64, a: &Analysis) -> Self {
        let c = &a.classification;
        let shown = matches!(c.outcome, Outcome::Corner | Outcome::Interior);
        Self {
            param: param.to_string(),
            value,
            outcome: c.outcome,
            price: c.price.filter(|_| shown).map(RelativePrice::value),
            c_a1: c.alloc_a.filter(|_| shown).map(|b| b.c1),
            c_b1: c.alloc_b.filter(|_| shown).map(|b| b.c1),
            boundary: c.outcome == Outcome::Boundary,
        }
    }

    pub fn csv_line(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}\n",
            self.param,
            fmt_num(self.value),
            self.outcome.label(),
            opt(self.price),
            opt(self.c_a1),
            opt(self.c_b1),
            self.boundary
        )
    }
}

/// Classify the config at every grid value of the swept field.
pub fn sweep_rows(base: &Value, spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let values = spec.values()?;
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut doc = base.clone();
        set_param(&mut doc, &spec.param, v)?;
        let econ = economy_from_value(&doc)
            .map_err(|e| CliError::input(format!("at {} = {}: {}", spec.param, fmt_num(v), e.message)))?;
        rows.push(SweepRow::from_analysis(&spec.param, v, &analyze_economy(&econ)?));
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
    }
    s
}

fn cmd_sweep(config: &Path, spec: &SweepSpec, path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let base = read_config_value(config)?;
    economy_from_value(&base)?;
    let rows = sweep_rows(&base, spec)?;
    emit(path, &sweep_csv(&rows), out)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Everything drawn in the Edgeworth box, in agent A's coordinates (origin
/// bottom-left). Agent B's quantities are measured from the top-right corner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeworthSeries {
    pub box_width: f64,
    pub box_height: f64,
    pub price: f64,
    pub curves: Vec<Polyline>,
    pub budget_line: Vec<(f64, f64)>,
    pub markers: Vec<Marker>,
    /// Bundles that fall outside the box and are therefore not drawn.
    pub off_box: Vec<Marker>,
}

const CURVE_POINTS: usize = 240;

/// Good-2 quantity on the level set `u = level` at `c1`, restricted to
/// `[0, cap]`.
fn level_c2(u: &UtilitySpec, c1: f64, level: f64, cap: f64) -> Option<f64> {
    let c2 = match *u {
        UtilitySpec::QuadLog { d } if d > 0.0 => ((level - 0.5 * c1 * c1) / d).exp(),
        UtilitySpec::WeightedLog { lambda } if lambda < 1.0 => ((level - lambda * c1.ln()) / (1.0 - lambda)).exp(),
        _ => {
            let f = |c2: f64| u.utility(c1, c2) - level;
            if f(cap) < 0.0 || f(0.0) > 0.0 {
                return None;
            }
            let (mut lo, mut hi) = (0.0, cap);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    (c2.is_finite() && (0.0..=cap).contains(&c2)).then_some(c2)
}

/// Level curve of `u` through `anchor`, in the agent's own coordinates and
/// clipped to `[0, w] x [0, h]`.
fn indifference_curve(u: &UtilitySpec, anchor: Bundle, w: f64, h: f64) -> Vec<(f64, f64)> {
    if let UtilitySpec::QuadLog { d } = *u {
        if d == 0.0 {
            return if (0.0..=w).contains(&anchor.c1) { vec![(anchor.c1, 0.0), (anchor.c1, h)] } else { Vec::new() };
        }
    }
    let level = u.utility_of(anchor);
    let mut xs: Vec<f64> = (1..=CURVE_POINTS).map(|i| w * i as f64 / CURVE_POINTS as f64).collect();
    if anchor.c1 > 0.0 && anchor.c1 <= w {
        xs.push(anchor.c1);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
    }
    xs.into_iter()
        .filter_map(|c1| {
            if c1 == anchor.c1 && (0.0..=h).contains(&anchor.c2) {
                return Some((c1, anchor.c2));
            }
            level_c2(u, c1, level, h).map(|c2| (c1, c2))
        })
        .collect()
}

fn in_box(x: f64, y: f64, w: f64, h: f64) -> bool {
    let slack = 1e-12 * w.max(h);
    (-slack..=w + slack).contains(&x) && (-slack..=h + slack).contains(&y)
}

/// Plot data for the box at `price` with the given bundles.
pub fn edgeworth_series(econ: &EconomyAB, price: RelativePrice, bundles_a: &[Bundle], bundles_b: &[Bundle]) -> EdgeworthSeries {
    let (w, h) = econ.totals();
    let p = price.value();
    let (ea1, ea2) = (econ.endow_a.good1(), econ.endow_a.good2());
    let mut curves = Vec::new();
    if let Some(&a) = bundles_a.first() {
        curves.push(Polyline { label: "A".into(), points: indifference_curve(&econ.utility_a, a, w, h) });
    }
    if let Some(&b) = bundles_b.first() {
        let pts = indifference_curve(&econ.utility_b, b, w, h)
            .into_iter()
            .map(|(x, y)| (w - x, h - y))
            .collect();
        curves.push(Polyline { label: "B".into(), points: pts });
    }
    let budget_line = vec![
        ((ea1 - p * econ.endow_b.good2()).max(0.0), (ea2 + ea1 / p).min(h)),
        ((ea1 + p * ea2).min(w), (ea2 - (w - ea1) / p).max(0.0)),
    ];
    let mut markers = vec![Marker { label: "endowment".into(), x: ea1, y: ea2 }];
    let mut off_box = Vec::new();
    let mut place = |label: String, x: f64, y: f64| {
        let m = Marker { label, x, y };
        if in_box(x, y, w, h) {
            markers.push(m);
        } else {
            off_box.push(m);
        }
    };
    let suffix = |i: usize, n: usize| if n > 1 { format!(" {}", i + 1) } else { String::new() };
    for (i, a) in bundles_a.iter().enumerate() {
        place(format!("A{}", suffix(i, bundles_a.len())), a.c1, a.c2);
    }
    for (i, b) in bundles_b.iter().enumerate() {
        place(format!("B{}", suffix(i, bundles_b.len())), w - b.c1, h - b.c2);
    }
    EdgeworthSeries { box_width: w, box_height: h, price: p, curves, budget_line, markers, off_box }
}

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 60.0;

pub fn render_svg(s: &EdgeworthSeries) -> String {
    let side = CANVAS - 2.0 * MARGIN;
    let sx = |x: f64| fmt_num(MARGIN + side * x / s.box_width);
    let sy = |y: f64| fmt_num(CANVAS - MARGIN - side * y / s.box_height);
    let mut o = String::new();
    o.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        o,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">",
        c = CANVAS
    );
    let _ = writeln!(o, "<title>Edgeworth box at p = {}</title>", fmt_num(s.price));
    let _ = writeln!(
        o,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>",
        fmt_num(MARGIN),
        fmt_num(MARGIN),
        fmt_num(side),
        fmt_num(side)
    );
    for c in &s.curves {
        let colour = if c.label == "A" { "#1f4fd1" } else { "#1a9641" };
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{},{}", sx(x), sy(y))).collect();
        let _ = writeln!(
            o,
            "<polyline id=\"curve-{}\" points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>",
            c.label,
            pts.join(" ")
        );
    }
    let [(x0, y0), (x1, y1)] = [s.budget_line[0], s.budget_line[1]];
    let _ = writeln!(
        o,
        "<line id=\"budget\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-dasharray=\"6 4\"/>",
        sx(x0),
        sy(y0),
        sx(x1),
        sy(y1)
    );
    for m in &s.markers {
        let _ = writeln!(o, "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#d7301f\"/>", sx(m.x), sy(m.y));
        let _ = writeln!(
            o,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            fmt_num(MARGIN + side * m.x / s.box_width + 6.0),
            fmt_num(CANVAS - MARGIN - side * m.y / s.box_height - 6.0),
            m.label
        );
    }
    let label = |o: &mut String, x: f64, y: f64, t: &str| {
        let _ = writeln!(
            o,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">{t}</text>",
            fmt_num(x),
            fmt_num(y)
        );
    };
    label(&mut o, MARGIN - 24.0, CANVAS - MARGIN + 20.0, "O_A");
    label(&mut o, CANVAS - MARGIN + 6.0, MARGIN - 8.0, "O_B");
    label(&mut o, MARGIN, CANVAS - MARGIN + 40.0, &format!("good 1, total {}", fmt_num(s.box_width)));
    label(&mut o, 8.0, MARGIN - 24.0, &format!("good 2, total {}", fmt_num(s.box_height)));
    o.push_str("</svg>\n");
    o
}

pub fn series_csv(s: &EdgeworthSeries) -> String {
    let mut o = String::from("series,label,x,y\n");
    let _ = writeln!(o, "box,box,{},{}", fmt_num(s.box_width), fmt_num(s.box_height));
    for c in &s.curves {
        for &(x, y) in &c.points {
            let _ = writeln!(o, "curve,{},{},{}", c.label, fmt_num(x), fmt_num(y));
        }
    }
    for &(x, y) in &s.budget_line {
        let _ = writeln!(o, "budget,budget,{},{}", fmt_num(x), fmt_num(y));
    }
    for m in &s.markers {
        let _ = writeln!(o, "marker,{},{},{}", m.label, fmt_num(m.x), fmt_num(m.y));
    }
    o
}

/// Closed-form demand where available, the numeric maximizer otherwise.
fn agent_demand(u: &UtilitySpec, price: RelativePrice, e: Endowment) -> DemandSet {
    match demand_closed_form(u, price, e) {
        Ok(set) => set,
        Err(_) => demand_numeric(u, price, e, NumericOptions::with_grid(100_000)),
    }
}

fn cmd_edgeworth(
    config: &Path,
    svg_path: Option<&Path>,
    data_path: Option<&Path>,
    at_price: Option<f64>,
    out: &mut dyn Write,
) -> CmdResult {
    let econ = load_economy(config)?;
    let (price, bundles_a, bundles_b) = match at_price {
        Some(p) => {
            let price = RelativePrice::new(p).map_err(|e| CliError::input(e.to_string()))?;
            let a = agent_demand(&econ.utility_a, price, econ.endow_a);
            let b = agent_demand(&econ.utility_b, price, econ.endow_b);
            (price, a.bundles().to_vec(), b.bundles().to_vec())
        }
        None => {
            let analysis = analyze_economy(&econ)?;
            let e = analysis.equilibria.first().ok_or_else(|| {
                CliError::precondition(format!(
                    "{}: nothing to draw; pass --at-price to show demands at a chosen price",
                    outcome_line(&analysis.classification)
                ))
            })?;
            (e.price, vec![e.alloc_a], vec![e.alloc_b])
        }
    };
    let series = edgeworth_series(&econ, price, &bundles_a, &bundles_b);
    let svg = render_svg(&series);
    let data = data_path.map(|_| series_csv(&series));
    if let (Some(p), Some(d)) = (data_path, data.as_deref()) {
        write_atomic(p, d.as_bytes())?;
    }
    emit(svg_path, &svg, out)?;
    if svg_path.is_some() {
        for m in &series.off_box {
            writeln!(out, "note: bundle {} = ({}, {}) lies outside the box", m.label, fmt_num(m.x), fmt_num(m.y))?;
        }
    }
    Ok(EXIT_OK)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn describe_points(points: &[EquilibriumPoint]) -> String {
    if points.is_empty() {
        return "none".into();
    }
    points
        .iter()
        .map(|e| format!("{} p = {}", e.branch.label(), fmt_num(e.price.value())))
        .collect::<Vec<_>>()
        .join("; ")
}

fn cmd_verify(config: &Path, grid: usize, p_min: Option<f64>, p_max: Option<f64>, out: &mut dyn Write) -> CmdResult {
    let econ = load_economy(config)?;
    let default = default_window(&econ, grid.max(2));
    let window = ScanGrid::new(p_min.unwrap_or(default.p_min), p_max.unwrap_or(default.p_max), grid)
        .map_err(|e| CliError::input(e.to_string()))?;
    let classifier = analyze_economy(&econ)?;
    let oracle = oracle_analysis(&econ, window);
    writeln!(out, "classifier ({}): {}", classifier.method.label(), outcome_line(&classifier.classification))?;
    if !classifier.equilibria.is_empty() {
        writeln!(out, "  {}", describe_points(&classifier.equilibria))?;
    }
    writeln!(
        out,
        "oracle ({} prices on [{}, {}]): {}",
        window.points,
        fmt_num(window.p_min),
        fmt_num(window.p_max),
        describe_points(&oracle.equilibria)
    )?;

    if classifier.classification.outcome == Outcome::Boundary {
        writeln!(out, "boundary: a deciding condition holds with equality; oracle result reported for reference")?;
        return Ok(EXIT_OK);
    }
    let (c, o) = (&classifier.equilibria, &oracle.equilibria);
    if c.is_empty() && o.is_empty() {
        writeln!(out, "agree: none")?;
        return Ok(EXIT_OK);
    }
    let matched = c.len() == o.len()
        && c.iter().zip(o).all(|(x, y)| relative_gap(x.price.value(), y.price.value()) <= PRICE_AGREEMENT);
    if !matched {
        writeln!(out, "disagree: classifier {}, oracle {}", describe_points(c), describe_points(o))?;
        return Ok(EXIT_DISAGREE);
    }
    let worst = c
        .iter()
        .zip(o)
        .map(|(x, y)| relative_gap(x.price.value(), y.price.value()))
        .fold(0.0, f64::max);
    for e in c {
        let r = verify_equilibrium(&econ, e.price, e.alloc_a, e.alloc_b);
        if !r.verdict {
            writeln!(
                out,
                "disagree: classifier equilibrium at p = {} fails the audit (clearing {} / {}, budget {} / {}, optimality {} / {})",
                fmt_num(e.price.value()),
                fmt_num(r.market_clearing1),
                fmt_num(r.market_clearing2),
                fmt_num(r.budget_gap_a),
                fmt_num(r.budget_gap_b),
                fmt_num(r.optimality_gap_a),
                fmt_num(r.optimality_gap_b)
            )?;
            return Ok(EXIT_DISAGREE);
        }
    }
    let branches: Vec<&str> = c.iter().map(|e| e.branch.label()).collect();
    writeln!(out, "agree: {}, Δp < 1e-6 (largest relative Δp {:.1e})", branches.join(", "), worst)?;
    Ok(EXIT_OK)
}

fn cmd_demand(config: &Path, agent: Agent, price: f64, out: &mut dyn Write) -> CmdResult {
    let econ = load_economy(config)?;
    let price = RelativePrice::new(price).map_err(|e| CliError::input(format!("--price: {e}")))?;
    let (name, u, e) = match agent {
        Agent::A => ("A", econ.utility_a, econ.endow_a),
        Agent::B => ("B", econ.utility_b, econ.endow_b),
    };
    writeln!(out, "agent {name} ({}) at p = {}, income {}", u.tag(), fmt_num(price.value()), fmt_num(e.income_at(price)))?;
    let set = match u {
        UtilitySpec::QuadLog { d } => {
            let (set, branch) = demand_quadlog(d, price, e);
            writeln!(out, "branch: {} (switch income {})", branch.tag.label(), fmt_num(branch.threshold))?;
            set
        }
        _ => match demand_closed_form(&u, price, e) {
            Ok(set) => {
                writeln!(out, "branch: closed form")?;
                set
            }
            Err(err @ (DemandError::NoClosedForm(_) | DemandError::InconsistentCase { .. })) => {
                writeln!(out, "branch: numeric ({err})")?;
                demand_numeric(&u, price, e, NumericOptions::with_grid(100_000))
            }
            Err(err) => return Err(CliError::input(err.to_string())),
        },
    };
    for b in set.iter() {
        writeln!(out, "bundle: c1 = {}, c2 = {}, utility = {}", fmt_num(b.c1), fmt_num(b.c2), fmt_num(u.utility_of(*b)))?;
    }
    Ok(EXIT_OK)
}

fn cmd_xstar(tol: f64, out: &mut dyn Write) -> CmdResult {
    let x = x_star(tol).map_err(|e| CliError::input(format!("--tol: {e}")))?;
    let digits = (-tol.log10()).ceil().clamp(1.0, 15.0) as usize;
    writeln!(out, "x* = {x:.digits$}")?;
    writeln!(out, "g(x*) = {:e}", g(x).map_err(|e| CliError::input(e.to_string()))?)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("nceq").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(2.6), "2.6");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-2.0 / 3.0 * 1e-7), "-6.66666666667e-8");
        assert_eq!(fmt_num(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_num(1e6), "1000000");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(9.9999999999996), "10");
    }

    #[test]
    fn param_paths() {
        let mut doc = json!({"agentA": {"endowment": [1.0, 2.0]}, "agentB": {"utility": {"type": "quad_log", "d": 1.0}}});
        set_param(&mut doc, "agentA.endowment[1]", 5.0).unwrap();
        set_param(&mut doc, "agentB.utility.d", 0.5).unwrap();
        assert_eq!(doc["agentA"]["endowment"][1], json!(5.0));
        assert_eq!(doc["agentB"]["utility"]["d"], json!(0.5));
        for bad in ["agentB.utility.type", "agentA.endowment[2]", "agentA..x", "agentA.endowment[x]", "nope"] {
            assert_eq!(set_param(&mut doc, bad, 1.0).unwrap_err().code, EXIT_INPUT, "{bad}");
        }
    }

    #[test]
    fn sweep_values_hit_endpoints() {
        let spec = SweepSpec { param: "x".into(), from: 0.01, to: 100.0, steps: 5, log: true };
        let v = spec.values().unwrap();
        assert_eq!(v.first(), Some(&0.01));
        assert_eq!(v.last(), Some(&100.0));
        assert!((v[2] - 1.0).abs() < 1e-12);
        assert!(SweepSpec { steps: 1, ..spec.clone() }.values().is_err());
        assert!(SweepSpec { from: -1.0, ..spec }.values().is_err());
    }

    #[test]
    fn xstar_prefix() {
        let (code, out, _) = run_args(&["xstar", "--tol", "1e-12"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("x* = 2.2"), "{out}");
        let (code, _, _) = run_args(&["xstar", "--tol", "-1"]);
        assert_eq!(code, EXIT_INPUT);
    }

    #[test]
    fn unknown_subcommand_is_input_error() {
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_INPUT);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn quadlog_curve_passes_through_anchor() {
        let u = UtilitySpec::QuadLog { d: 0.9 };
        let anchor = Bundle::new(0.7, 0.4);
        let pts = indifference_curve(&u, anchor, 1.8, 2.0);
        assert!(pts.iter().any(|&(x, y)| x == 0.7 && (y - 0.4).abs() < 1e-6));
        for &(x, y) in &pts {
            assert!((u.utility(x, y) - u.utility_of(anchor)).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_level_set_by_bisection() {
        let u = UtilitySpec::Crra { a1: 1.0, a2: 2.0, alpha: 0.5 };
        let anchor = Bundle::new(1.0, 1.0);
        let pts = indifference_curve(&u, anchor, 3.0, 3.0);
        assert!(pts.len() > 10);
        for &(x, y) in &pts {
            assert!((u.utility(x, y) - u.utility_of(anchor)).abs() < 1e-9);
        }
    }
}
