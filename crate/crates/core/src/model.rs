//! Domain types shared by every other module, plus the JSON config schema.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{path}: endowment must be strictly positive, got {value}")]
    NonPositiveEndowment { path: String, value: f64 },
    #[error("{path}: {reason}")]
    InvalidUtilityParam { path: String, reason: String },
    #[error("{path}: unknown utility type `{tag}`")]
    UnknownUtilityTag { path: String, tag: String },
    #[error("{path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("relative price must be positive and finite, got {0}")]
    InvalidPrice(f64),
}

/// Endowment of one agent. Both goods strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endowment {
    good1: f64,
    good2: f64,
}

impl Endowment {
    pub fn new(good1: f64, good2: f64) -> Result<Self, ModelError> {
        for (i, v) in [good1, good2].into_iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::NonPositiveEndowment {
                    path: format!("endowment[{i}]"),
                    value: v,
                });
            }
        }
        Ok(Self { good1, good2 })
    }

    pub fn good1(&self) -> f64 {
        self.good1
    }

    pub fn good2(&self) -> f64 {
        self.good2
    }

    /// Income `e1 + p e2`, measured in units of good 1.
    pub fn income_at(&self, price: RelativePrice) -> f64 {
        self.good1 + price.value() * self.good2
    }
}

/// Price of good 2 in units of good 1 (`p2 / p1`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct RelativePrice(f64);

impl RelativePrice {
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(ModelError::InvalidPrice(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for RelativePrice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bundle {
    pub c1: f64,
    pub c2: f64,
}

impl Bundle {
    pub fn new(c1: f64, c2: f64) -> Self {
        Self { c1, c2 }
    }

    /// Bundle on the budget line of `income` with good-1 quantity `c1`.
    pub fn on_budget(c1: f64, income: f64, price: RelativePrice) -> Self {
        let c1 = c1.clamp(0.0, income);
        Self {
            c1,
            c2: ((income - c1) / price.value()).max(0.0),
        }
    }
}

/// Utility families. Parameter ranges are enforced by [`UtilitySpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    /// `lambda ln c1 + (1 - lambda) ln c2`
    WeightedLog { lambda: f64 },
    /// `c1^2 / 2 + d ln c2`; convex in good 1, concave in good 2.
    QuadLog { d: f64 },
    /// `a1 c1^alpha / alpha + a2 c2^alpha / alpha`
    Crra { a1: f64, a2: f64, alpha: f64 },
    /// `exp(-alpha1 c1) / (-alpha1) + gamma exp(-alpha2 c2) / (-alpha2)`
    CaraA { alpha1: f64, alpha2: f64, gamma: f64 },
    /// `exp(alpha1 c1) / alpha1 + d exp(alpha2 c2) / alpha2`
    CaraB { alpha1: f64, alpha2: f64, d: f64 },
    /// `c1^alpha1 / alpha1 + d c2^alpha2 / alpha2` with `alpha2 > 1 > alpha1`.
    /// No closed-form demand; handled numerically only.
    Power { alpha1: f64, alpha2: f64, d: f64 },
    /// `c2`
    LinearGood2,
}

impl UtilitySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            UtilitySpec::WeightedLog { .. } => "weighted_log",
            UtilitySpec::QuadLog { .. } => "quad_log",
            UtilitySpec::Crra { .. } => "crra",
            UtilitySpec::CaraA { .. } => "cara_a",
            UtilitySpec::CaraB { .. } => "cara_b",
            UtilitySpec::Power { .. } => "power",
            UtilitySpec::LinearGood2 => "linear_good2",
        }
    }

    pub fn validate(self) -> Result<Self, ModelError> {
        let bad = |name: &str, reason: &str| ModelError::InvalidUtilityParam {
            path: name.to_string(),
            reason: reason.to_string(),
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(bad(name, "must be finite"))
            }
        };
        match self {
            UtilitySpec::WeightedLog { lambda } => {
                finite("lambda", lambda)?;
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(bad("lambda", "must lie in (0, 1)"));
                }
            }
            UtilitySpec::QuadLog { d } => {
                finite("d", d)?;
                if d < 0.0 {
                    return Err(bad("d", "must be nonnegative"));
                }
            }
            UtilitySpec::Crra { a1, a2, alpha } => {
                finite("a1", a1)?;
                finite("a2", a2)?;
                finite("alpha", alpha)?;
                if a1 <= 0.0 {
                    return Err(bad("a1", "must be positive"));
                }
                if a2 <= 0.0 {
                    return Err(bad("a2", "must be positive"));
                }
                if !(alpha < 1.0) || alpha == 0.0 {
                    return Err(bad("alpha", "must be < 1 and nonzero"));
                }
            }
            UtilitySpec::CaraA { alpha1, alpha2, gamma } => {
                finite("alpha1", alpha1)?;
                finite("alpha2", alpha2)?;
                finite("gamma", gamma)?;
                if alpha1 == 0.0 {
                    return Err(bad("alpha1", "must be nonzero"));
                }
                if alpha2 == 0.0 {
                    return Err(bad("alpha2", "must be nonzero"));
                }
                if gamma <= 0.0 {
                    return Err(bad("gamma", "must be positive"));
                }
            }
            UtilitySpec::CaraB { alpha1, alpha2, d } => {
                finite("alpha1", alpha1)?;
                finite("alpha2", alpha2)?;
                finite("d", d)?;
                if alpha1 == 0.0 {
                    return Err(bad("alpha1", "must be nonzero"));
                }
                if alpha2 == 0.0 {
                    return Err(bad("alpha2", "must be nonzero"));
                }
                if d <= 0.0 {
                    return Err(bad("d", "must be positive"));
                }
            }
            UtilitySpec::Power { alpha1, alpha2, d } => {
                finite("alpha1", alpha1)?;
                finite("alpha2", alpha2)?;
                finite("d", d)?;
                if !(alpha1 < 1.0) || alpha1 == 0.0 {
                    return Err(bad("alpha1", "must be < 1 and nonzero"));
                }
                if !(alpha2 > 1.0) {
                    return Err(bad("alpha2", "must be > 1"));
                }
                if d <= 0.0 {
                    return Err(bad("d", "must be positive"));
                }
            }
            UtilitySpec::LinearGood2 => {}
        }
        Ok(self)
    }

    /// Utility of a bundle. Logs and negative powers at a zero coordinate
    /// evaluate to `-inf`.
    pub fn utility(&self, c1: f64, c2: f64) -> f64 {
        match *self {
            UtilitySpec::WeightedLog { lambda } => lambda * c1.ln() + (1.0 - lambda) * c2.ln(),
            UtilitySpec::QuadLog { d } => {
                if d == 0.0 {
                    0.5 * c1 * c1
                } else {
                    0.5 * c1 * c1 + d * c2.ln()
                }
            }
            UtilitySpec::Crra { a1, a2, alpha } => {
                a1 * c1.powf(alpha) / alpha + a2 * c2.powf(alpha) / alpha
            }
            UtilitySpec::CaraA { alpha1, alpha2, gamma } => {
                (-alpha1 * c1).exp() / -alpha1 + gamma * (-alpha2 * c2).exp() / -alpha2
            }
            UtilitySpec::CaraB { alpha1, alpha2, d } => {
                (alpha1 * c1).exp() / alpha1 + d * (alpha2 * c2).exp() / alpha2
            }
            UtilitySpec::Power { alpha1, alpha2, d } => {
                c1.powf(alpha1) / alpha1 + d * c2.powf(alpha2) / alpha2
            }
            UtilitySpec::LinearGood2 => c2,
        }
    }

    pub fn utility_of(&self, bundle: Bundle) -> f64 {
        self.utility(bundle.c1, bundle.c2)
    }

    fn parse(raw: &Value, path: &str) -> Result<Self, ModelError> {
        let obj = raw.as_object().ok_or_else(|| ModelError::Malformed {
            path: path.to_string(),
            reason: "expected an object".into(),
        })?;
        let tag = obj
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| ModelError::Malformed {
                path: format!("{path}.type"),
                reason: "missing utility type".into(),
            })?;
        let num = |key: &str| -> Result<f64, ModelError> {
            obj.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| ModelError::Malformed {
                    path: format!("{path}.{key}"),
                    reason: "expected a number".into(),
                })
        };
        let spec = match tag {
            "weighted_log" => UtilitySpec::WeightedLog { lambda: num("lambda")? },
            "quad_log" => UtilitySpec::QuadLog { d: num("d")? },
            "crra" => UtilitySpec::Crra {
                a1: num("a1")?,
                a2: num("a2")?,
                alpha: num("alpha")?,
            },
            "cara_a" => UtilitySpec::CaraA {
                alpha1: num("alpha1")?,
                alpha2: num("alpha2")?,
                gamma: num("gamma")?,
            },
            "cara_b" => UtilitySpec::CaraB {
                alpha1: num("alpha1")?,
                alpha2: num("alpha2")?,
                d: num("d")?,
            },
            "power" => UtilitySpec::Power {
                alpha1: num("alpha1")?,
                alpha2: num("alpha2")?,
                d: num("d")?,
            },
            "linear_good2" => UtilitySpec::LinearGood2,
            other => {
                return Err(ModelError::UnknownUtilityTag {
                    path: format!("{path}.type"),
                    tag: other.to_string(),
                })
            }
        };
        spec.validate().map_err(|e| match e {
            ModelError::InvalidUtilityParam { path: field, reason } => ModelError::InvalidUtilityParam {
                path: format!("{path}.{field}"),
                reason,
            },
            other => other,
        })
    }

    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("type".into(), json!(self.tag()));
        let mut put = |k: &str, v: f64| {
            map.insert(k.into(), json!(v));
        };
        match *self {
            UtilitySpec::WeightedLog { lambda } => put("lambda", lambda),
            UtilitySpec::QuadLog { d } => put("d", d),
            UtilitySpec::Crra { a1, a2, alpha } => {
                put("a1", a1);
                put("a2", a2);
                put("alpha", alpha);
            }
            UtilitySpec::CaraA { alpha1, alpha2, gamma } => {
                put("alpha1", alpha1);
                put("alpha2", alpha2);
                put("gamma", gamma);
            }
            UtilitySpec::CaraB { alpha1, alpha2, d } | UtilitySpec::Power { alpha1, alpha2, d } => {
                put("alpha1", alpha1);
                put("alpha2", alpha2);
                put("d", d);
            }
            UtilitySpec::LinearGood2 => {}
        }
        Value::Object(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomyAB {
    pub endow_a: Endowment,
    pub endow_b: Endowment,
    pub utility_a: UtilitySpec,
    pub utility_b: UtilitySpec,
}

impl EconomyAB {
    pub fn new(
        endow_a: Endowment,
        endow_b: Endowment,
        utility_a: UtilitySpec,
        utility_b: UtilitySpec,
    ) -> Result<Self, ModelError> {
        Ok(Self {
            endow_a,
            endow_b,
            utility_a: utility_a.validate()?,
            utility_b: utility_b.validate()?,
        })
    }

    /// The economy studied in closed form: agent A with `ln c1 + ln c2`
    /// (weighted log at one half), agent B quad-log with weight `d`.
    pub fn log_vs_quadlog(
        endow_a: (f64, f64),
        endow_b: (f64, f64),
        d: f64,
    ) -> Result<Self, ModelError> {
        Self::new(
            Endowment::new(endow_a.0, endow_a.1)?,
            Endowment::new(endow_b.0, endow_b.1)?,
            UtilitySpec::WeightedLog { lambda: 0.5 },
            UtilitySpec::QuadLog { d },
        )
    }

    /// Aggregate endowment of good 1 and good 2.
    pub fn totals(&self) -> (f64, f64) {
        (
            self.endow_a.good1() + self.endow_b.good1(),
            self.endow_a.good2() + self.endow_b.good2(),
        )
    }

    pub fn quadlog_weight(&self) -> Option<f64> {
        match self.utility_b {
            UtilitySpec::QuadLog { d } => Some(d),
            _ => None,
        }
    }

    pub fn to_config(&self) -> Value {
        let agent = |e: &Endowment, u: &UtilitySpec| {
            json!({"endowment": [e.good1(), e.good2()], "utility": u.to_value()})
        };
        json!({
            "agentA": agent(&self.endow_a, &self.utility_a),
            "agentB": agent(&self.endow_b, &self.utility_b),
        })
    }
}

fn parse_agent(raw: &Value, key: &str) -> Result<(Endowment, UtilitySpec), ModelError> {
    let agent = raw.get(key).ok_or_else(|| ModelError::Malformed {
        path: key.to_string(),
        reason: "missing agent".into(),
    })?;
    let endow_path = format!("{key}.endowment");
    let arr = agent
        .get("endowment")
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::Malformed {
            path: endow_path.clone(),
            reason: "expected an array [e1, e2]".into(),
        })?;
    if arr.len() != 2 {
        return Err(ModelError::Malformed {
            path: endow_path,
            reason: format!("expected 2 entries, got {}", arr.len()),
        });
    }
    let mut e = [0.0; 2];
    for (i, v) in arr.iter().enumerate() {
        let path = format!("{endow_path}[{i}]");
        let x = v.as_f64().ok_or_else(|| ModelError::Malformed {
            path: path.clone(),
            reason: "expected a number".into(),
        })?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(ModelError::NonPositiveEndowment { path, value: x });
        }
        e[i] = x;
    }
    let utility_raw = agent.get("utility").ok_or_else(|| ModelError::Malformed {
        path: format!("{key}.utility"),
        reason: "missing utility".into(),
    })?;
    let utility = UtilitySpec::parse(utility_raw, &format!("{key}.utility"))?;
    Ok((Endowment::new(e[0], e[1])?, utility))
}

/// Parse and validate a config document.
pub fn validate_economy(raw: &Value) -> Result<EconomyAB, ModelError> {
    let (endow_a, utility_a) = parse_agent(raw, "agentA")?;
    let (endow_b, utility_b) = parse_agent(raw, "agentB")?;
    Ok(EconomyAB {
        endow_a,
        endow_b,
        utility_a,
        utility_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Gt => ">",
        }
    }
}

/// Relative width of the band around an equality inside which a tested
/// inequality is flagged as boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

pub fn near_boundary(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= BOUNDARY_TOL * lhs.abs().max(rhs.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub satisfied: bool,
    pub boundary: bool,
}

impl Condition {
    pub fn evaluate(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation,
            satisfied: relation.holds(lhs, rhs),
            boundary: near_boundary(lhs, rhs),
        }
    }

    /// Like [`Condition::evaluate`] but with a purely relative band, for
    /// quantities such as prices whose natural scale can be far below 1.
    pub fn evaluate_relative(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Self {
            boundary: (lhs - rhs).abs() <= BOUNDARY_TOL * lhs.abs().max(rhs.abs()),
            ..Self::evaluate(name, lhs, relation, rhs)
        }
    }

    /// Holds, or fails only inside the boundary band.
    pub fn holds_or_boundary(&self) -> bool {
        self.satisfied || self.boundary
    }
}

/// True when some condition in the conjunction `all` sits in its boundary
/// band while every other one holds or is itself at the boundary, so the
/// conjunction's truth depends on the band.
pub fn conjunction_at_boundary(all: &[&Condition]) -> bool {
    all.iter().any(|c| c.boundary) && all.iter().all(|c| c.holds_or_boundary())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConditionReport {
    pub entries: Vec<Condition>,
}

impl ConditionReport {
    pub fn push(&mut self, condition: Condition) -> &Condition {
        self.entries.push(condition);
        self.entries.last().expect("just pushed")
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.entries.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Corner,
    Interior,
    NoEquilibrium,
    Boundary,
}

impl Outcome {
    /// Label used in CSV and text output.
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Corner => "corner",
            Outcome::Interior => "interior",
            Outcome::NoEquilibrium => "none",
            Outcome::Boundary => "boundary",
        }
    }
}

/// Which of the two non-existence configurations applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonExistenceCase {
    /// Corner income too high and the weight too high for any interior root.
    WeightTooHigh,
    /// Corner income too high, interior income too low.
    IncomeGap,
    /// The smaller root of the clearing quadratic lies above the aggregate
    /// endowment ratio, so it only solves the squared clearing equation.
    OffBranchRoot,
}

impl NonExistenceCase {
    pub fn label(self) -> &'static str {
        match self {
            NonExistenceCase::WeightTooHigh => "3a",
            NonExistenceCase::IncomeGap => "3b",
            NonExistenceCase::OffBranchRoot => "off-branch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub outcome: Outcome,
    pub price: Option<RelativePrice>,
    pub alloc_a: Option<Bundle>,
    pub alloc_b: Option<Bundle>,
    pub report: ConditionReport,
    /// For `Boundary`, the outcome obtained by reading every weak inequality
    /// at face value.
    pub nominal: Option<Outcome>,
    pub case: Option<NonExistenceCase>,
}

impl Classification {
    pub fn has_equilibrium(&self) -> bool {
        self.price.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> Value {
        json!({
            "agentA": {"endowment": [1.0, 1.0], "utility": {"type": "weighted_log", "lambda": 0.5}},
            "agentB": {"endowment": [0.8, 1.0], "utility": {"type": "quad_log", "d": 0.9}},
        })
    }

    #[test]
    fn parses_reference_config() {
        let econ = validate_economy(&fig3()).unwrap();
        assert_eq!(econ.endow_b.good1(), 0.8);
        assert_eq!(econ.utility_b, UtilitySpec::QuadLog { d: 0.9 });
        assert_eq!(econ.utility_a, UtilitySpec::WeightedLog { lambda: 0.5 });
    }

    #[test]
    fn zero_endowment_rejected() {
        let mut raw = fig3();
        raw["agentA"]["endowment"][0] = json!(0.0);
        match validate_economy(&raw) {
            Err(ModelError::NonPositiveEndowment { path, .. }) => {
                assert_eq!(path, "agentA.endowment[0]")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_weight_rejected() {
        let mut raw = fig3();
        raw["agentB"]["utility"]["d"] = json!(-1.0);
        assert!(matches!(
            validate_economy(&raw),
            Err(ModelError::InvalidUtilityParam { ref path, .. }) if path == "agentB.utility.d"
        ));
    }

    #[test]
    fn zero_weight_is_the_limiting_case() {
        let mut raw = fig3();
        raw["agentB"]["utility"]["d"] = json!(0.0);
        assert!(validate_economy(&raw).is_ok());
    }

    #[test]
    fn unknown_tag_rejected() {
        let mut raw = fig3();
        raw["agentA"]["utility"]["type"] = json!("leontief");
        assert!(matches!(
            validate_economy(&raw),
            Err(ModelError::UnknownUtilityTag { .. })
        ));
    }

    #[test]
    fn malformed_endowment() {
        let mut raw = fig3();
        raw["agentB"]["endowment"] = json!([1.0]);
        assert!(matches!(validate_economy(&raw), Err(ModelError::Malformed { .. })));
        raw["agentB"]["endowment"] = json!(["a", 1.0]);
        assert!(matches!(validate_economy(&raw), Err(ModelError::Malformed { .. })));
    }

    #[test]
    fn parameter_ranges() {
        let bad = [
            UtilitySpec::WeightedLog { lambda: 1.0 },
            UtilitySpec::Crra { a1: 1.0, a2: 1.0, alpha: 0.0 },
            UtilitySpec::Crra { a1: 1.0, a2: 1.0, alpha: 1.0 },
            UtilitySpec::Crra { a1: 0.0, a2: 1.0, alpha: 0.5 },
            UtilitySpec::CaraA { alpha1: 0.0, alpha2: 1.0, gamma: 1.0 },
            UtilitySpec::CaraA { alpha1: 1.0, alpha2: 1.0, gamma: 0.0 },
            UtilitySpec::CaraB { alpha1: 1.0, alpha2: 1.0, d: 0.0 },
            UtilitySpec::Power { alpha1: 1.5, alpha2: 0.5, d: 1.0 },
            UtilitySpec::QuadLog { d: f64::NAN },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
        assert!(UtilitySpec::Power { alpha1: 0.5, alpha2: 1.5, d: 1.0 }.validate().is_ok());
    }

    #[test]
    fn quadlog_zero_weight_has_no_nan_at_zero_good2() {
        let u = UtilitySpec::QuadLog { d: 0.0 };
        assert_eq!(u.utility(2.0, 0.0), 2.0);
        let u = UtilitySpec::QuadLog { d: 1.0 };
        assert_eq!(u.utility(2.0, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn relation_and_boundary_flag() {
        let c = Condition::evaluate("x", 1.0, Relation::Le, 1.0 + 1e-12);
        assert!(c.satisfied && c.boundary);
        let c = Condition::evaluate("x", 1.0, Relation::Gt, 2.0);
        assert!(!c.satisfied && !c.boundary);
    }

    #[test]
    fn price_must_be_positive() {
        assert!(RelativePrice::new(0.0).is_err());
        assert!(RelativePrice::new(f64::INFINITY).is_err());
        assert_eq!(RelativePrice::new(2.6).unwrap().value(), 2.6);
    }

    proptest::proptest! {
        #[test]
        fn validation_is_idempotent(
            ea1 in 0.01f64..100.0, ea2 in 0.01f64..100.0,
            eb1 in 0.01f64..100.0, eb2 in 0.01f64..100.0,
            lambda in 0.01f64..0.99, d in 0.0f64..50.0,
        ) {
            let econ = EconomyAB::new(
                Endowment::new(ea1, ea2).unwrap(),
                Endowment::new(eb1, eb2).unwrap(),
                UtilitySpec::WeightedLog { lambda },
                UtilitySpec::QuadLog { d },
            ).unwrap();
            let again = validate_economy(&econ.to_config()).unwrap();
            proptest::prop_assert_eq!(econ, again);
            let twice = validate_economy(&again.to_config()).unwrap();
            proptest::prop_assert_eq!(again, twice);
        }
    }
}
