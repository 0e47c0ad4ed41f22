use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nceq::special::x_star_value;
use serde_json::{json, Value};
use tempfile::TempDir;

fn nceq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nceq")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn agent(e: [f64; 2], utility: Value) -> Value {
    json!({"endowment": e, "utility": utility})
}

fn log_half() -> Value {
    json!({"type": "weighted_log", "lambda": 0.5})
}

fn quad(d: f64) -> Value {
    json!({"type": "quad_log", "d": d})
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, name: &str, a: Value, b: Value) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, json!({"agentA": a, "agentB": b}).to_string()).unwrap();
        path
    }

    fn fig3(&self) -> PathBuf {
        self.config("fig3.json", agent([1.0, 1.0], log_half()), agent([0.8, 1.0], quad(0.9)))
    }

    fn corner(&self) -> PathBuf {
        self.config("corner.json", agent([1.0, 1.0], log_half()), agent([0.8, 1.0], quad(4.0)))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_reference_non_existence() {
    let f = Fixture::new();
    let o = nceq(&["analyze", s(&f.fig3())]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("outcome: no equilibrium (case 3b)"), "{text}");
    assert!(text.contains("m_cor = 3.4"), "{text}");
    assert!(text.contains("x* sqrt(D) = 2.10231621506"), "{text}");
    assert!(text.contains("m_int = 1.97607340376"), "{text}");
}

#[test]
fn analyze_corner() {
    let f = Fixture::new();
    let text = stdout(&nceq(&["analyze", s(&f.corner())]));
    assert!(text.contains("outcome: corner"), "{text}");
    assert!(text.contains("corner p = 2.6\n"), "{text}");
    assert!(text.contains("agent B bundle: (0, "), "{text}");
}

#[test]
fn analyze_json_document() {
    let f = Fixture::new();
    let o = nceq(&["analyze", s(&f.fig3()), "--json"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["outcome"], "none");
    assert_eq!(doc["case"], "3b");
    assert_eq!(doc["method"], "closed_form");
    assert_eq!(doc["conditions"].as_array().unwrap().len(), 4);
    assert!(doc["price"].is_null());
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let f = Fixture::new();
    let bad = f.config("bad.json", agent([0.0, 1.0], log_half()), agent([0.8, 1.0], quad(0.9)));
    let o = nceq(&["analyze", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("agentA.endowment[0]"), "{}", stderr(&o));

    let tag = f.config("tag.json", agent([1.0, 1.0], json!({"type": "cobb"})), agent([0.8, 1.0], quad(0.9)));
    assert_eq!(nceq(&["analyze", s(&tag)]).status.code(), Some(2));
    assert_eq!(nceq(&["analyze", s(&f.path("missing.json"))]).status.code(), Some(2));
    std::fs::write(f.path("junk.json"), "{not json").unwrap();
    assert_eq!(nceq(&["verify", s(&f.path("junk.json"))]).status.code(), Some(2));
}

fn sweep_outcomes(csv: &str) -> Vec<String> {
    csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().to_string()).collect()
}

#[test]
fn sweep_weight_passes_through_the_none_band() {
    let f = Fixture::new();
    let cfg = f.config("sym.json", agent([1.0, 1.0], log_half()), agent([1.0, 1.0], quad(1.0)));
    let out = f.path("sweep.csv");
    let o = nceq(&["sweep", s(&cfg), "--param", "agentB.utility.d", "--from", "0.01", "--to", "100", "--steps", "81", "--log", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("param,value,outcome,price,cA1,cB1,boundary\n"));
    assert!(!csv.contains('\r'));
    let outcomes = sweep_outcomes(&csv);
    assert_eq!(outcomes.len(), 81);
    let mut runs: Vec<&str> = outcomes.iter().map(String::as_str).collect();
    runs.dedup();
    assert_eq!(runs, ["interior", "none", "corner"]);
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[2] == "none", cols[3].is_empty(), "{line}");
    }
}

#[test]
fn sweep_large_agent_a_good2_ends_with_equilibrium() {
    let f = Fixture::new();
    let o = nceq(&["sweep", s(&f.fig3()), "--param", "agentA.endowment[1]", "--from", "1", "--to", "1e6", "--steps", "13", "--log"]);
    assert_eq!(o.status.code(), Some(0));
    let outcomes = sweep_outcomes(&stdout(&o));
    assert_eq!(outcomes[0], "none");
    // x* sqrt(0.9) > eB1 = 0.8, so the limit is a corner
    assert!(outcomes[8..].iter().all(|x| x == "corner"), "{outcomes:?}");
}

#[test]
fn sweep_footnote_case_stays_none() {
    let f = Fixture::new();
    // eA1 + 2 eB1 = 2 sqrt(D) with D = 1
    let cfg = f.config("fn.json", agent([1.0, 1.0], log_half()), agent([0.5, 1.0], quad(1.0)));
    let o = nceq(&["sweep", s(&cfg), "--param", "agentB.endowment[1]", "--from", "1e3", "--to", "1e6", "--steps", "7", "--log"]);
    assert!(sweep_outcomes(&stdout(&o)).iter().all(|x| x == "none"));
}

#[test]
fn sweep_failures_leave_no_file() {
    let f = Fixture::new();
    let out = f.path("never.csv");
    let o = nceq(&["sweep", s(&f.fig3()), "--param", "agentB.utility.nope", "--from", "0.1", "--to", "1", "--steps", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    // valid at first, invalid once the endowment turns negative
    let o = nceq(&["sweep", s(&f.fig3()), "--param", "agentA.endowment[0]", "--from", "1", "--to", "-1", "--steps", "5", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("agentA.endowment[0]"));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(f.dir.path()).unwrap().count(), 1, "temporary files left behind");

    let o = nceq(&["sweep", s(&f.fig3()), "--param", "agentB.utility.d", "--from", "0.1", "--to", "1", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edgeworth_corner_marker_on_the_edge() {
    let f = Fixture::new();
    let (svg, data) = (f.path("box.svg"), f.path("box.csv"));
    let o = nceq(&["edgeworth", s(&f.corner()), "--out", s(&svg), "--data", s(&data)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("version=\"1.1\""));
    assert!(text.contains("id=\"curve-A\"") && text.contains("id=\"curve-B\"") && text.contains("id=\"budget\""));
    let csv = std::fs::read_to_string(&data).unwrap();
    // agent B's bundle has c1 = 0, i.e. x equal to the box width
    let marker_b = csv.lines().find(|l| l.starts_with("marker,B,")).unwrap();
    assert!(marker_b.starts_with("marker,B,1.8,"), "{marker_b}");
    for line in csv.lines().filter(|l| l.starts_with("curve,")) {
        let cols: Vec<f64> = line.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        assert!((0.0..=1.8 + 1e-12).contains(&cols[0]) && (0.0..=2.0 + 1e-12).contains(&cols[1]), "{line}");
    }
}

#[test]
fn edgeworth_needs_an_equilibrium_or_a_price() {
    let f = Fixture::new();
    let svg = f.path("fig3.svg");
    let o = nceq(&["edgeworth", s(&f.fig3()), "--out", s(&svg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!svg.exists());
    let o = nceq(&["edgeworth", s(&f.fig3()), "--at-price", "2.6", "--out", s(&svg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("outside the box"));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<title>Edgeworth box at p = 2.6</title>"));
}

#[test]
fn verify_reference_economies() {
    let f = Fixture::new();
    let o = nceq(&["verify", s(&f.fig3())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("agree: none"), "{}", stdout(&o));

    let o = nceq(&["verify", s(&f.corner())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("agree: corner, Δp < 1e-6"), "{}", stdout(&o));
}

#[test]
fn verify_flags_boundary() {
    let f = Fixture::new();
    // eB1 chosen so that the corner income equals x* sqrt(D)
    let (a1, a2, b2, d) = (1.0, 1.0, 1.0, 4.0_f64);
    let b1 = (x_star_value() * d.sqrt() - a1 * b2 / a2) / (1.0 + 2.0 * b2 / a2);
    let cfg = f.config("edge.json", agent([a1, a2], log_half()), agent([b1, b2], quad(d)));
    let o = nceq(&["verify", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("boundary"), "{}", stdout(&o));
    assert!(stdout(&nceq(&["analyze", s(&cfg)])).contains("outcome: boundary (face value: corner)"));
}

#[test]
fn verify_disagreement_exits_1() {
    let f = Fixture::new();
    // the oracle window excludes the equilibrium price 2.6
    let o = nceq(&["verify", s(&f.corner()), "--p-min", "0.01", "--p-max", "1", "--grid", "2000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("disagree"));
}

#[test]
fn verify_other_families() {
    let f = Fixture::new();
    let crra = f.config(
        "crra.json",
        agent([1.0, 2.0], json!({"type": "crra", "a1": 1.0, "a2": 1.0, "alpha": 0.5})),
        agent([0.5, 1.0], quad(0.3)),
    );
    let o = nceq(&["verify", s(&crra)]);
    assert!(stdout(&o).contains("classifier (two-branch scan)"), "{}", stdout(&o));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let linear = f.config("bd.json", agent([1.0, 1.0], json!({"type": "linear_good2"})), agent([2.0, 1.0], quad(1.0)));
    let o = nceq(&["verify", s(&linear)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("interior p = 1.33333333333"), "{}", stdout(&o));
}

#[test]
fn demand_queries() {
    let f = Fixture::new();
    let o = nceq(&["demand", s(&f.fig3()), "--agent", "A", "--price", "1"]);
    assert!(stdout(&o).contains("bundle: c1 = 1, c2 = 1,"), "{}", stdout(&o));

    let m = x_star_value();
    let cfg = f.config("double.json", agent([1.0, 1.0], log_half()), agent([m - 1.0, 1.0], quad(1.0)));
    let o = nceq(&["demand", s(&cfg), "--agent", "B", "--price", "1"]);
    let text = stdout(&o);
    assert!(text.contains("branch: double"), "{text}");
    assert_eq!(text.matches("bundle:").count(), 2, "{text}");

    assert_eq!(nceq(&["demand", s(&cfg), "--agent", "C", "--price", "1"]).status.code(), Some(2));
    assert_eq!(nceq(&["demand", s(&cfg), "--agent", "B", "--price", "-1"]).status.code(), Some(2));
}

#[test]
fn xstar_value() {
    let o = nceq(&["xstar", "--tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let x: f64 = text.lines().next().unwrap().trim_start_matches("x* = ").parse().unwrap();
    assert!(x > 2.21 && x < 2.22 && text.starts_with("x* = 2.2"));
    assert_eq!(nceq(&["xstar", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(nceq(&["xstar", "--tol", "abc"]).status.code(), Some(2));
}
