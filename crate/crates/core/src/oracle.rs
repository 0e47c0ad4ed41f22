//! Brute-force equilibrium search and per-equilibrium audits.
//!
//! Everything here goes through [`demand_numeric`] only: no closed-form
//! demand and no classifier logic, so the oracle cannot share a bug with the
//! code it checks.

use serde::Serialize;

use crate::demand::{demand_numeric, DemandSet, NumericOptions};
use crate::equilibrium::ScanGrid;
use crate::model::{Bundle, EconomyAB, RelativePrice};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEquilibrium {
    pub price: RelativePrice,
    pub alloc_a: Bundle,
    pub alloc_b: Bundle,
    /// Good-1 excess demand of the selected pair at `price`.
    pub excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Largest good-1 excess accepted at a converged root.
    pub tol: f64,
    pub numeric: NumericOptions,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            numeric: NumericOptions::default(),
        }
    }
}

struct Excess {
    pairs: Vec<(Bundle, Bundle, f64)>,
}

impl Excess {
    fn at(econ: &EconomyAB, p: f64, numeric: NumericOptions) -> Self {
        let price = RelativePrice::new(p).expect("grid prices are positive");
        let (s1, _) = econ.totals();
        let da: DemandSet = demand_numeric(&econ.utility_a, price, econ.endow_a, numeric);
        let db: DemandSet = demand_numeric(&econ.utility_b, price, econ.endow_b, numeric);
        let mut pairs = Vec::with_capacity(da.len() * db.len());
        for a in da.iter() {
            for b in db.iter() {
                pairs.push((*a, *b, a.c1 + b.c1 - s1));
            }
        }
        Self { pairs }
    }

    fn has_neg(&self) -> bool {
        self.pairs.iter().any(|x| x.2 < 0.0)
    }

    fn has_pos(&self) -> bool {
        self.pairs.iter().any(|x| x.2 > 0.0)
    }

    fn best(&self) -> (Bundle, Bundle, f64) {
        *self
            .pairs
            .iter()
            .min_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
            .expect("at least one selection pair")
    }
}

/// Bisect between a price with negative excess and one with positive excess.
/// Returns the endpoint with the smallest residual once the bracket collapses
/// or a point is found that is itself double-valued across zero.
fn refine(
    econ: &EconomyAB,
    mut neg: (f64, Excess),
    mut pos: (f64, Excess),
    opts: &OracleOptions,
) -> (f64, (Bundle, Bundle, f64)) {
    for _ in 0..200 {
        let mid = 0.5 * (neg.0 + pos.0);
        if mid == neg.0 || mid == pos.0 || (neg.0 - pos.0).abs() <= 1e-15 * mid {
            break;
        }
        let e = Excess::at(econ, mid, opts.numeric);
        let best = e.best();
        if best.2.abs() <= opts.tol * 1e-3 {
            return (mid, best);
        }
        match (e.has_neg(), e.has_pos()) {
            (true, false) => neg = (mid, e),
            (false, true) => pos = (mid, e),
            _ => return (mid, best),
        }
    }
    let (bn, bp) = (neg.1.best(), pos.1.best());
    if bn.2.abs() <= bp.2.abs() {
        (neg.0, bn)
    } else {
        (pos.0, bp)
    }
}

/// Every good-1 clearing price on `grid`, found from numeric demands alone.
///
/// All selection pairs from the two (possibly double-valued) demand sets are
/// examined at each grid price. A sign change between neighbours is bisected
/// and kept only if it converges to a genuine zero (`|excess| <= tol`), which
/// discards the jump of a non-convex agent across its switch income. Prices
/// within `1e-6` relative are merged.
pub fn brute_force_equilibria(econ: &EconomyAB, grid: ScanGrid, opts: OracleOptions) -> Vec<OracleEquilibrium> {
    let mut found: Vec<OracleEquilibrium> = Vec::new();
    let accept = |p: f64, (a, b, ex): (Bundle, Bundle, f64), found: &mut Vec<OracleEquilibrium>| {
        if ex.abs() > opts.tol {
            return;
        }
        if found
            .iter()
            .any(|q| (q.price.value() - p).abs() <= 1e-6 * p.max(q.price.value()))
        {
            return;
        }
        found.push(OracleEquilibrium {
            price: RelativePrice::new(p).expect("positive"),
            alloc_a: a,
            alloc_b: b,
            excess: ex,
        });
    };

    let mut prev: Option<(f64, Excess)> = None;
    for p in grid.prices() {
        let cur = Excess::at(econ, p, opts.numeric);
        if cur.pairs.iter().any(|x| x.2 == 0.0) {
            let best = cur.best();
            accept(p, best, &mut found);
        }
        if let Some((q, prev_e)) = prev.take() {
            let down = prev_e.has_pos() && cur.has_neg();
            let up = prev_e.has_neg() && cur.has_pos();
            if up || down {
                let snapshot = |e: &Excess| Excess { pairs: e.pairs.clone() };
                let (neg, pos) = if up {
                    ((q, prev_e), (p, snapshot(&cur)))
                } else {
                    ((p, snapshot(&cur)), (q, prev_e))
                };
                let (r, best) = refine(econ, neg, pos, &opts);
                accept(r, best, &mut found);
            }
        }
        prev = Some((p, cur));
    }
    found.sort_by(|a, b| a.price.value().total_cmp(&b.price.value()));
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationReport {
    pub market_clearing1: f64,
    pub market_clearing2: f64,
    pub budget_gap_a: f64,
    pub budget_gap_b: f64,
    /// Utility shortfall of the allocation below the numeric maximum.
    pub optimality_gap_a: f64,
    pub optimality_gap_b: f64,
    pub verdict: bool,
}

pub const CLEARING_TOL: f64 = 1e-9;
pub const OPTIMALITY_TOL: f64 = 1e-7;
pub const AUDIT_GRID: usize = 100_000;

fn shortfall(econ_utility: &crate::model::UtilitySpec, price: RelativePrice, endow: crate::model::Endowment, alloc: Bundle) -> f64 {
    let best = demand_numeric(econ_utility, price, endow, NumericOptions::with_grid(AUDIT_GRID));
    let max_u = best
        .iter()
        .map(|b| econ_utility.utility_of(*b))
        .fold(f64::NEG_INFINITY, f64::max);
    let u = econ_utility.utility_of(alloc);
    if max_u == f64::NEG_INFINITY {
        return 0.0;
    }
    let gap = max_u - u;
    if gap.is_nan() {
        f64::INFINITY
    } else {
        gap.max(0.0)
    }
}

/// Audit a claimed equilibrium: feasibility, budgets, and optimality of each
/// agent's bundle against a fine numeric argmax.
pub fn verify_equilibrium(econ: &EconomyAB, price: RelativePrice, alloc_a: Bundle, alloc_b: Bundle) -> VerificationReport {
    let (s1, s2) = econ.totals();
    let p = price.value();
    let market_clearing1 = (alloc_a.c1 + alloc_b.c1 - s1).abs();
    let market_clearing2 = (alloc_a.c2 + alloc_b.c2 - s2).abs();
    let budget_gap = |alloc: Bundle, m: f64| (alloc.c1 + p * alloc.c2 - m).abs();
    let (m_a, m_b) = (econ.endow_a.income_at(price), econ.endow_b.income_at(price));
    let budget_gap_a = budget_gap(alloc_a, m_a);
    let budget_gap_b = budget_gap(alloc_b, m_b);
    let optimality_gap_a = shortfall(&econ.utility_a, price, econ.endow_a, alloc_a);
    let optimality_gap_b = shortfall(&econ.utility_b, price, econ.endow_b, alloc_b);

    let feasible = alloc_a.c1 >= 0.0 && alloc_a.c2 >= 0.0 && alloc_b.c1 >= 0.0 && alloc_b.c2 >= 0.0;
    let verdict = feasible
        && market_clearing1 <= CLEARING_TOL * s1.max(1.0)
        && market_clearing2 <= CLEARING_TOL * s2.max(1.0)
        && budget_gap_a <= CLEARING_TOL * m_a.max(1.0)
        && budget_gap_b <= CLEARING_TOL * m_b.max(1.0)
        && optimality_gap_a <= OPTIMALITY_TOL
        && optimality_gap_b <= OPTIMALITY_TOL;
    VerificationReport {
        market_clearing1,
        market_clearing2,
        budget_gap_a,
        budget_gap_b,
        optimality_gap_a,
        optimality_gap_b,
        verdict,
    }
}
