//! Existence classification for the log / quad-log economy, the generic
//! two-branch scanner for arbitrary single-valued agent-A demand, and the
//! economy of a quad-log agent facing an agent who only values good 2.

use serde::Serialize;
use thiserror::Error;

use crate::demand::{demand_closed_form, demand_quadlog, demand_weighted_log, quadlog_interior_c1, DemandError};
use crate::model::{
    conjunction_at_boundary, Bundle, Classification, Condition, ConditionReport, EconomyAB, Endowment, ModelError,
    NonExistenceCase, Outcome, Relation, RelativePrice, UtilitySpec, BOUNDARY_TOL,
};
use crate::special::{candidate_prices, switch_income, ClearingQuadratic};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("agent A demand is multi-valued at p = {0}")]
    MultiValuedAgentA(f64),
    #[error("interior excess demand undefined at p = {0}: income below 2 sqrt(D)")]
    Domain(f64),
    #[error("unsupported economy: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn require_quadlog(econ: &EconomyAB) -> Result<f64, EquilibriumError> {
    econ.quadlog_weight()
        .ok_or_else(|| EquilibriumError::Unsupported(format!("agent B is `{}`, expected quad_log", econ.utility_b.tag())))
}

fn agent_a_c1(econ: &EconomyAB, price: RelativePrice) -> Result<f64, EquilibriumError> {
    let set = demand_closed_form(&econ.utility_a, price, econ.endow_a)?;
    if !set.is_single() {
        return Err(EquilibriumError::MultiValuedAgentA(price.value()));
    }
    Ok(set.first().c1)
}

/// Good-1 excess demand when agent B consumes none of good 1.
pub fn z_cor(econ: &EconomyAB, price: RelativePrice) -> Result<f64, EquilibriumError> {
    let (s1, _) = econ.totals();
    Ok(agent_a_c1(econ, price)? - s1)
}

/// Good-1 excess demand when agent B takes its interior stationary bundle.
pub fn z_int(econ: &EconomyAB, price: RelativePrice) -> Result<f64, EquilibriumError> {
    let d = require_quadlog(econ)?;
    let m = econ.endow_b.income_at(price);
    if m < 2.0 * d.sqrt() * (1.0 - 1e-12) {
        return Err(EquilibriumError::Domain(price.value()));
    }
    let (s1, _) = econ.totals();
    Ok(agent_a_c1(econ, price)? + quadlog_interior_c1(m, d) - s1)
}

/// Closed-form weight bound `Q = [(eA1+eB1) eB2 + (eA2+eB2) eB1]^2 / (eA2 (eA2 + 2 eB2))`;
/// an interior root of `F` exists iff `Q >= 4D`.
pub fn interior_weight_bound(endow_a: Endowment, endow_b: Endowment) -> f64 {
    let (a1, a2) = (endow_a.good1(), endow_a.good2());
    let (b1, b2) = (endow_b.good1(), endow_b.good2());
    let num = (a1 + b1) * b2 + (a2 + b2) * b1;
    num * num / (a2 * (a2 + 2.0 * b2))
}

/// Market-clearing selection from agent B's demand set: the bundle whose good-1
/// quantity leaves the smallest excess.
fn clearing_bundle(candidates: &[Bundle], other_c1: f64, total1: f64) -> Bundle {
    *candidates
        .iter()
        .min_by(|a, b| {
            (other_c1 + a.c1 - total1)
                .abs()
                .total_cmp(&(other_c1 + b.c1 - total1).abs())
        })
        .expect("demand sets are nonempty")
}

pub mod conditions {
    pub const CORNER_INCOME: &str = "corner_income";
    pub const INTERIOR_WEIGHT: &str = "interior_weight";
    pub const INTERIOR_ON_BRANCH: &str = "interior_root_on_branch";
    pub const INTERIOR_INCOME: &str = "interior_income";
    pub const BD_AGGREGATE: &str = "aggregate_good1_squared";
}

fn allocate_log_quadlog(econ: &EconomyAB, d: f64, price: f64) -> (RelativePrice, Bundle, Bundle) {
    let price = RelativePrice::new(price).expect("candidate prices are positive");
    let (s1, _) = econ.totals();
    let a = demand_weighted_log(0.5, price, econ.endow_a).first();
    let (set_b, _) = demand_quadlog(d, price, econ.endow_b);
    let b = clearing_bundle(set_b.bundles(), a.c1, s1);
    (price, a, b)
}

/// Classify the economy with agent A `ln c1 + ln c2` and agent B quad-log.
///
/// Corner iff `eB1 + pi_cor eB2 <= x* sqrt(D)`. Interior iff `Q >= 4D`, the
/// smaller root of `F` lies at or below `(eA1+eB1)/(eA2+eB2)` (otherwise it
/// solves only the squared clearing equation), and
/// `eB1 + pi_int eB2 >= x* sqrt(D)`. Anything else has no equilibrium.
/// A decisive inequality within [`BOUNDARY_TOL`] turns the outcome into
/// `Boundary`, keeping the face-value reading in `nominal`.
pub fn classify_quadlog(econ: &EconomyAB) -> Result<Classification, EquilibriumError> {
    match econ.utility_a {
        UtilitySpec::WeightedLog { lambda: 0.5 } => {}
        other => {
            return Err(EquilibriumError::Unsupported(format!(
                "closed-form classifier needs agent A weighted_log with lambda = 0.5, got `{}`",
                other.tag()
            )))
        }
    }
    let d = require_quadlog(econ)?;
    let (ea, eb) = (econ.endow_a, econ.endow_b);
    let (s1, s2) = econ.totals();
    let threshold = switch_income(d);
    let cands = candidate_prices(ea, eb, d);
    let mut report = ConditionReport::default();
    let mut decisive_boundary = false;

    let corner = report
        .push(Condition::evaluate(
            conditions::CORNER_INCOME,
            eb.good1() + cands.pi_cor * eb.good2(),
            Relation::Le,
            threshold,
        ))
        .clone();
    decisive_boundary |= corner.boundary;

    let q = interior_weight_bound(ea, eb);
    let weight = report
        .push(Condition::evaluate(conditions::INTERIOR_WEIGHT, q, Relation::Ge, 4.0 * d))
        .clone();

    let mut interior_price = None;
    let mut case = None;
    // a weight bound inside its band still gets the rest of the chain
    // evaluated, so the report shows whether the band is decisive
    if weight.holds_or_boundary() {
        let pi_int = if d == 0.0 {
            ea.good1() / (2.0 * eb.good2() + ea.good2())
        } else {
            // Q >= 4D <=> delta >= 0; a rounding-negative delta is a double root
            cands
                .pi_int
                .unwrap_or_else(|| ClearingQuadratic::new(ea, eb, d).vertex())
        };
        let on_branch = report
            .push(Condition::evaluate_relative(conditions::INTERIOR_ON_BRANCH, pi_int, Relation::Le, s1 / s2))
            .clone();
        let income = report
            .push(Condition::evaluate(
                conditions::INTERIOR_INCOME,
                eb.good1() + pi_int * eb.good2(),
                Relation::Ge,
                threshold,
            ))
            .clone();
        if !corner.satisfied {
            decisive_boundary |= conjunction_at_boundary(&[&weight, &on_branch, &income]);
        }
        if !weight.satisfied {
            case = Some(NonExistenceCase::WeightTooHigh);
        } else if on_branch.satisfied && income.satisfied {
            interior_price = Some(pi_int);
        } else if !income.satisfied {
            case = Some(NonExistenceCase::IncomeGap);
        } else {
            case = Some(NonExistenceCase::OffBranchRoot);
        }
    } else {
        case = Some(NonExistenceCase::WeightTooHigh);
    }

    let (nominal, price) = if corner.satisfied {
        (Outcome::Corner, Some(cands.pi_cor))
    } else if let Some(p) = interior_price {
        (Outcome::Interior, Some(p))
    } else {
        (Outcome::NoEquilibrium, None)
    };
    let case = if nominal == Outcome::NoEquilibrium { case } else { None };
    let (price, alloc_a, alloc_b) = match price {
        Some(p) => {
            let (p, a, b) = allocate_log_quadlog(econ, d, p);
            (Some(p), Some(a), Some(b))
        }
        None => (None, None, None),
    };
    Ok(Classification {
        outcome: if decisive_boundary { Outcome::Boundary } else { nominal },
        price,
        alloc_a,
        alloc_b,
        report,
        nominal: decisive_boundary.then_some(nominal),
        case,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub points: usize,
}

impl ScanGrid {
    pub fn new(p_min: f64, p_max: f64, points: usize) -> Result<Self, EquilibriumError> {
        if !(p_min > 0.0 && p_max > p_min && p_max.is_finite()) || points < 2 {
            return Err(EquilibriumError::Unsupported(format!(
                "scan grid needs 0 < p_min < p_max and at least 2 points, got [{p_min}, {p_max}] x {points}"
            )));
        }
        Ok(Self { p_min, p_max, points })
    }

    /// Log-spaced grid, endpoints included.
    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = (self.p_min.ln(), self.p_max.ln());
        let n = self.points - 1;
        (0..self.points).map(move |i| {
            if i == n {
                self.p_max
            } else {
                (lo + (hi - lo) * i as f64 / n as f64).exp()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub roots_corner: Vec<RelativePrice>,
    pub roots_interior: Vec<RelativePrice>,
    pub grid: ScanGrid,
    /// Residual bound every reported root satisfies.
    pub tol: f64,
}

impl ScanResult {
    pub fn is_empty(&self) -> bool {
        self.roots_corner.is_empty() && self.roots_interior.is_empty()
    }
}

/// Bisect a sign change of `f` on `[lo, hi]` down to adjacent floats.
pub(crate) fn bisect_root<F>(mut lo: f64, mut hi: f64, f: F) -> Result<f64, EquilibriumError>
where
    F: Fn(f64) -> Result<f64, EquilibriumError>,
{
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = v;
        } else {
            hi = mid;
        }
    }
    let f_hi = f(hi)?;
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

fn push_unique(roots: &mut Vec<RelativePrice>, p: f64) {
    if roots
        .iter()
        .all(|r| (r.value() - p).abs() > 1e-10 * p.max(r.value()))
    {
        roots.push(RelativePrice::new(p).expect("bisection stays positive"));
    }
}

/// Scan both clearing branches on a log grid.
///
/// The corner branch is `z_cor`, valid where agent B's income is at most the
/// switch income; the interior branch is `z_int`, valid at or above it.
/// Sign changes are bisected and a root is kept only if its branch is valid
/// there. Agent A may be any family with single-valued closed-form demand.
pub fn scan_generic(econ: &EconomyAB, grid: ScanGrid) -> Result<ScanResult, EquilibriumError> {
    let d = require_quadlog(econ)?;
    let threshold = switch_income(d);
    let (s1, _) = econ.totals();
    let tol = 1e-9 * s1.max(1.0);
    let band = BOUNDARY_TOL * threshold.max(1.0);
    let price = |p: f64| RelativePrice::new(p).map_err(EquilibriumError::from);
    let cor = |p: f64| z_cor(econ, price(p)?);
    let int = |p: f64| z_int(econ, price(p)?);
    let income_b = |p: f64| econ.endow_b.good1() + p * econ.endow_b.good2();

    let mut roots_corner = Vec::new();
    let mut roots_interior = Vec::new();
    let mut prev: Option<(f64, f64, Option<f64>)> = None;
    for p in grid.prices() {
        let zc = cor(p)?;
        let zi = match int(p) {
            Ok(v) => Some(v),
            Err(EquilibriumError::Domain(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some((q, qc, qi)) = prev {
            if qc == 0.0 || (qc < 0.0) != (zc < 0.0) {
                let r = bisect_root(q, p, cor)?;
                if cor(r)?.abs() <= tol && income_b(r) <= threshold + band {
                    push_unique(&mut roots_corner, r);
                }
            }
            if let (Some(a), Some(b)) = (qi, zi) {
                if a == 0.0 || (a < 0.0) != (b < 0.0) {
                    let r = bisect_root(q, p, int)?;
                    if int(r)?.abs() <= tol && income_b(r) >= threshold - band {
                        push_unique(&mut roots_interior, r);
                    }
                }
            }
        }
        prev = Some((p, zc, zi));
    }
    if let Some((p, zc, zi)) = prev {
        if zc == 0.0 && income_b(p) <= threshold + band {
            push_unique(&mut roots_corner, p);
        }
        if zi == Some(0.0) && income_b(p) >= threshold - band {
            push_unique(&mut roots_interior, p);
        }
    }
    Ok(ScanResult {
        roots_corner,
        roots_interior,
        grid,
        tol,
    })
}

/// Economy of quad-log agent B facing agent D with utility `c2`.
///
/// An equilibrium exists iff `e1^2 > D` and `e1 + D/e1 >= x* sqrt(D)`, with
/// `e1 = eB1 + eD1`; agent B then consumes all of good 1 at the relative
/// price `X` given by `eB2 X = (eD1 e1 + D) / e1`. Agent D's allocation is
/// reported in the `alloc_a` slot.
pub fn classify_bd(endow_b: Endowment, endow_d: Endowment, d: f64) -> Result<Classification, EquilibriumError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(EquilibriumError::Unsupported(format!("agent B weight must be positive, got {d}")));
    }
    let e1 = endow_b.good1() + endow_d.good1();
    let threshold = switch_income(d);
    let mut report = ConditionReport::default();
    let aggregate = report
        .push(Condition::evaluate(conditions::BD_AGGREGATE, e1 * e1, Relation::Gt, d))
        .clone();
    let income = report
        .push(Condition::evaluate(conditions::INTERIOR_INCOME, e1 + d / e1, Relation::Ge, threshold))
        .clone();
    let boundary = conjunction_at_boundary(&[&aggregate, &income]);
    let exists = aggregate.satisfied && income.satisfied;
    let nominal = if exists { Outcome::Interior } else { Outcome::NoEquilibrium };

    let (price, alloc_a, alloc_b) = if exists {
        let x = (endow_d.good1() * e1 + d) / (e1 * endow_b.good2());
        let price = RelativePrice::new(x)?;
        let m_b = endow_b.income_at(price);
        let m_d = endow_d.income_at(price);
        (
            Some(price),
            Some(Bundle::on_budget(0.0, m_d, price)),
            Some(Bundle::on_budget(e1, m_b, price)),
        )
    } else {
        (None, None, None)
    };
    Ok(Classification {
        outcome: if boundary { Outcome::Boundary } else { nominal },
        price,
        alloc_a,
        alloc_b,
        report,
        nominal: boundary.then_some(nominal),
        case: None,
    })
}

/// Limit of agent B's interior income `eB1 + eB2 pi_int` as `eB2 -> inf`:
/// `(eA1 + 2 eB1)/2 + 2D/(eA1 + 2 eB1)`.
pub fn interior_income_limit(econ: &EconomyAB) -> Result<f64, EquilibriumError> {
    let d = require_quadlog(econ)?;
    let k = econ.endow_a.good1() + 2.0 * econ.endow_b.good1();
    Ok(k / 2.0 + 2.0 * d / k)
}
