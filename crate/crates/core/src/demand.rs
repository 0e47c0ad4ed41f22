//! Demand correspondences on the budget line `c1 + p c2 = e1 + p e2`.
//!
//! Closed forms exist for every family except [`UtilitySpec::Power`];
//! [`demand_numeric`] is the grid-and-refine argmax used both as an oracle for
//! the closed forms and as the only route for utilities without one.

use serde::Serialize;
use thiserror::Error;

use crate::model::{near_boundary, Bundle, Endowment, RelativePrice, UtilitySpec};
use crate::special::{switch_income, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemandError {
    #[error("demand for `{0}` has no closed form")]
    NoClosedForm(&'static str),
    #[error("cara_a demand at p = {price}: {applicable} of the three cases apply")]
    InconsistentCase { price: f64, applicable: usize },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// One or two optimal bundles, ascending in `c1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DemandSet {
    bundles: Vec<Bundle>,
}

impl DemandSet {
    fn from_vec(mut bundles: Vec<Bundle>) -> Self {
        debug_assert!(!bundles.is_empty());
        bundles.sort_by(|a, b| a.c1.total_cmp(&b.c1));
        Self { bundles }
    }

    pub fn single(bundle: Bundle) -> Self {
        Self {
            bundles: vec![bundle],
        }
    }

    pub fn pair(a: Bundle, b: Bundle) -> Self {
        Self::from_vec(vec![a, b])
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn is_single(&self) -> bool {
        self.bundles.len() == 1
    }

    pub fn first(&self) -> Bundle {
        self.bundles[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Bundle> {
        self.bundles.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchTag {
    ZeroOnly,
    Double,
    InteriorOnly,
}

impl BranchTag {
    pub fn label(self) -> &'static str {
        match self {
            BranchTag::ZeroOnly => "zero",
            BranchTag::Double => "double",
            BranchTag::InteriorOnly => "interior",
        }
    }
}

/// Which side of the switch income a quad-log agent is on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadLogBranch {
    pub tag: BranchTag,
    pub income: f64,
    pub threshold: f64,
}

pub fn demand_weighted_log(lambda: f64, price: RelativePrice, endow: Endowment) -> DemandSet {
    let m = endow.income_at(price);
    DemandSet::single(Bundle::new(lambda * m, (1.0 - lambda) * m / price.value()))
}

/// `(m + sqrt(m^2 - 4D)) / 2`, the larger stationary point of the quad-log
/// objective on the budget line. Requires `m >= 2 sqrt(D)`.
pub fn quadlog_interior_c1(income: f64, d: f64) -> f64 {
    let root_d = d.sqrt();
    let disc = ((income - 2.0 * root_d) * (income + 2.0 * root_d)).max(0.0);
    0.5 * (income + disc.sqrt())
}

pub fn demand_quadlog(d: f64, price: RelativePrice, endow: Endowment) -> (DemandSet, QuadLogBranch) {
    let m = endow.income_at(price);
    if d == 0.0 {
        let branch = QuadLogBranch {
            tag: BranchTag::InteriorOnly,
            income: m,
            threshold: 0.0,
        };
        return (DemandSet::single(Bundle::new(m, 0.0)), branch);
    }
    let threshold = switch_income(d);
    let tag = if near_boundary(m, threshold) {
        BranchTag::Double
    } else if m < threshold {
        BranchTag::ZeroOnly
    } else {
        BranchTag::InteriorOnly
    };
    let corner = Bundle::on_budget(0.0, m, price);
    let interior = || Bundle::on_budget(quadlog_interior_c1(m, d), m, price);
    let set = match tag {
        BranchTag::ZeroOnly => DemandSet::single(corner),
        BranchTag::Double => DemandSet::pair(corner, interior()),
        BranchTag::InteriorOnly => DemandSet::single(interior()),
    };
    (
        set,
        QuadLogBranch {
            tag,
            income: m,
            threshold,
        },
    )
}

/// Utility of the interior stationary bundle minus utility of the zero-good-1
/// bundle, at unit good-1 price and income `w`. Positive iff the interior
/// bundle is strictly preferred.
pub fn v_switch(w: f64, d: f64) -> Result<f64, SpecialError> {
    let root_d = d.sqrt();
    let disc = (w - 2.0 * root_d) * (w + 2.0 * root_d);
    if !(disc > 0.0) {
        return Err(SpecialError::Domain(w / root_d));
    }
    let r = disc.sqrt();
    let c1 = 0.5 * (w + r);
    // (w - r)/2 = 2D / (w + r)
    let c2 = 2.0 * d / (w + r);
    Ok(0.5 * c1 * c1 + d * c2.ln() - d * w.ln())
}

pub fn demand_crra(a1: f64, a2: f64, alpha: f64, price: RelativePrice, endow: Endowment) -> DemandSet {
    let m = endow.income_at(price);
    let r = 1.0 / (1.0 - alpha);
    // share of income on good 1 = k1 / (k1 + k2), k1 = a1^r p^(alpha r), k2 = a2^r
    let s = r * (a1.ln() - a2.ln()) + alpha * r * price.value().ln();
    let share = 1.0 / (1.0 + (-s).exp());
    DemandSet::single(Bundle::on_budget(m * share, m, price))
}

/// CARA agent-A demand by the three printed cases. Reports
/// [`DemandError::InconsistentCase`] when the cases do not pick out exactly one.
pub fn demand_cara_a(
    alpha1: f64,
    alpha2: f64,
    gamma: f64,
    price: RelativePrice,
    endow: Endowment,
) -> Result<DemandSet, DemandError> {
    let p = price.value();
    let w = endow.income_at(price);
    let log_term = gamma.ln() - p.ln();
    let zero = alpha2 * w <= p * log_term;
    let full = alpha1 * w + log_term <= 0.0;
    let denom = alpha2 + p * alpha1;
    let interior = (denom != 0.0)
        .then(|| (alpha2 * w - p * log_term) / denom)
        .filter(|c| *c > 0.0 && *c < w);
    let applicable = zero as usize + full as usize + interior.is_some() as usize;
    if applicable != 1 {
        return Err(DemandError::InconsistentCase {
            price: p,
            applicable,
        });
    }
    let c1 = if zero {
        0.0
    } else if full {
        w
    } else {
        interior.expect("counted above")
    };
    Ok(DemandSet::single(Bundle::on_budget(c1, w, price)))
}

/// CARA agent-B demand, full case tree on the sign of `alpha1 + alpha2 / p`.
/// Interval solutions are reported by their two endpoints.
pub fn demand_cara_b(alpha1: f64, alpha2: f64, d: f64, price: RelativePrice, endow: Endowment) -> DemandSet {
    let p = price.value();
    let w = endow.income_at(price);
    let f = |c1: f64| (alpha1 * c1).exp() / alpha1 + d * (alpha2 * (w - c1) / p).exp() / alpha2;
    let zero = || Bundle::on_budget(0.0, w, price);
    let full = || Bundle::on_budget(w, w, price);
    // f'(c1) >= 0  <=>  slope * c1 >= rhs
    let slope = alpha1 + alpha2 / p;
    let rhs = alpha2 * w / p + (d / p).ln();
    let slope_scale = alpha1.abs() + (alpha2 / p).abs();

    if slope.abs() <= 1e-14 * slope_scale {
        return if near_boundary(rhs, 0.0) {
            DemandSet::pair(zero(), full())
        } else if rhs < 0.0 {
            DemandSet::single(full())
        } else {
            DemandSet::single(zero())
        };
    }
    let crit = rhs / slope;
    if slope > 0.0 {
        // f falls then rises: the maximum is at an endpoint
        if crit <= 0.0 {
            DemandSet::single(full())
        } else if crit >= w {
            DemandSet::single(zero())
        } else {
            let (f0, fw) = (f(0.0), f(w));
            if near_boundary(f0, fw) {
                DemandSet::pair(zero(), full())
            } else if f0 > fw {
                DemandSet::single(zero())
            } else {
                DemandSet::single(full())
            }
        }
    } else if crit <= 0.0 {
        DemandSet::single(zero())
    } else if crit >= w {
        DemandSet::single(full())
    } else {
        DemandSet::single(Bundle::on_budget(crit, w, price))
    }
}

pub fn demand_linear_good2(price: RelativePrice, endow: Endowment) -> DemandSet {
    let m = endow.income_at(price);
    DemandSet::single(Bundle::on_budget(0.0, m, price))
}

/// Closed-form demand for any family that has one.
pub fn demand_closed_form(
    utility: &UtilitySpec,
    price: RelativePrice,
    endow: Endowment,
) -> Result<DemandSet, DemandError> {
    Ok(match *utility {
        UtilitySpec::WeightedLog { lambda } => demand_weighted_log(lambda, price, endow),
        UtilitySpec::QuadLog { d } => demand_quadlog(d, price, endow).0,
        UtilitySpec::Crra { a1, a2, alpha } => demand_crra(a1, a2, alpha, price, endow),
        UtilitySpec::CaraA { alpha1, alpha2, gamma } => demand_cara_a(alpha1, alpha2, gamma, price, endow)?,
        UtilitySpec::CaraB { alpha1, alpha2, d } => demand_cara_b(alpha1, alpha2, d, price, endow),
        UtilitySpec::LinearGood2 => demand_linear_good2(price, endow),
        UtilitySpec::Power { .. } => return Err(DemandError::NoClosedForm("power")),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericOptions {
    /// Grid intervals along the budget line; raised to 1000 if smaller.
    pub grid_n: usize,
    /// Golden-section iterations per candidate; raised to 20 if smaller.
    pub refine_iters: usize,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            grid_n: 1000,
            refine_iters: 40,
        }
    }
}

impl NumericOptions {
    pub fn with_grid(grid_n: usize) -> Self {
        Self {
            grid_n,
            ..Self::default()
        }
    }
}

/// Utility gap below the best value within which a point still counts as a maximizer.
pub const ARGMAX_TOL: f64 = 1e-9;

struct BudgetLine<'a> {
    utility: &'a UtilitySpec,
    income: f64,
    price: f64,
}

impl BudgetLine<'_> {
    fn eval(&self, c1: f64) -> f64 {
        let c1 = c1.clamp(0.0, self.income);
        let c2 = ((self.income - c1) / self.price).max(0.0);
        let u = self.utility.utility(c1, c2);
        if u.is_nan() {
            f64::NEG_INFINITY
        } else {
            u
        }
    }

    /// Golden-section search on `[lo, hi]`, returning the best point seen
    /// (bracket ends included).
    fn golden(&self, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut best = (lo, self.eval(lo));
        let consider = |x: f64, v: f64, best: &mut (f64, f64)| {
            if v > best.1 {
                *best = (x, v);
            }
        };
        let fhi = self.eval(hi);
        consider(hi, fhi, &mut best);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = self.eval(x1);
        let mut f2 = self.eval(x2);
        consider(x1, f1, &mut best);
        consider(x2, f2, &mut best);
        for _ in 0..iters {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = self.eval(x2);
                consider(x2, f2, &mut best);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = self.eval(x1);
                consider(x1, f1, &mut best);
            }
            if hi - lo <= f64::EPSILON * self.income {
                break;
            }
        }
        best
    }

    /// Sharpen an interior maximizer by bisecting on the sign of a central
    /// difference; utility values alone only locate it to ~sqrt(eps).
    fn polish(&self, x: f64, radius: f64) -> Option<f64> {
        let h = 1e-5 * self.income;
        let (lo, hi) = (x - radius, x + radius);
        if lo - h <= 0.0 || hi + h >= self.income {
            return None;
        }
        let slope = |t: f64| self.eval(t + h) - self.eval(t - h);
        let (mut a, mut b) = (lo, hi);
        if !(slope(a) > 0.0 && slope(b) < 0.0) {
            return None;
        }
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if slope(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    }
}

/// Numeric argmax of `utility` along the budget line.
///
/// Evaluates a uniform grid on `c1 in [0, m]`, refines every grid local
/// maximum (plateaus by their ends), keeps everything within [`ARGMAX_TOL`]
/// of the best value and merges maximizers closer than `1e-6 m`. Returns
/// every distinct maximizer, so a double-valued correspondence shows up as
/// two bundles.
pub fn demand_numeric(
    utility: &UtilitySpec,
    price: RelativePrice,
    endow: Endowment,
    opts: NumericOptions,
) -> DemandSet {
    let m = endow.income_at(price);
    let n = opts.grid_n.max(1000);
    let iters = opts.refine_iters.max(20);
    let line = BudgetLine {
        utility,
        income: m,
        price: price.value(),
    };
    let step = m / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| line.eval(i as f64 * step)).collect();

    let is_local_max = |i: usize| {
        let v = grid[i];
        v > f64::NEG_INFINITY
            && (i == 0 || v >= grid[i - 1])
            && (i == n || v >= grid[i + 1])
    };
    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 0;
    while i <= n {
        if is_local_max(i) {
            let start = i;
            while i < n && is_local_max(i + 1) && grid[i + 1] == grid[start] {
                i += 1;
            }
            candidates.push(start);
            if i != start {
                candidates.push(i);
            }
        }
        i += 1;
    }
    if candidates.is_empty() {
        let best = (0..=n).max_by(|&a, &b| grid[a].total_cmp(&grid[b])).unwrap_or(0);
        candidates.push(best);
    }

    let mut refined: Vec<(f64, f64)> = candidates
        .iter()
        .map(|&i| {
            let lo = i.saturating_sub(1) as f64 * step;
            let hi = ((i + 1).min(n) as f64 * step).min(m);
            let (mut x, mut v) = line.golden(lo, hi, iters);
            if x > 0.0 && x < m {
                if let Some(px) = line.polish(x, 1e-3 * step) {
                    let pv = line.eval(px);
                    if pv >= v - 4.0 * f64::EPSILON * v.abs().max(1.0) {
                        x = px;
                        v = pv.max(v);
                    }
                }
            }
            (x, v)
        })
        .collect();

    let best = refined.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let cutoff = best - ARGMAX_TOL * best.abs().max(1.0);
    refined.retain(|r| r.1 >= cutoff);
    refined.sort_by(|a, b| a.0.total_cmp(&b.0));

    let merge_dist = 1e-6 * m;
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for r in refined {
        match kept.last_mut() {
            Some(last) if r.0 - last.0 < merge_dist => {
                if r.1 > last.1 {
                    *last = r;
                }
            }
            _ => kept.push(r),
        }
    }
    DemandSet::from_vec(
        kept.into_iter()
            .map(|(x, _)| Bundle::on_budget(x, m, price))
            .collect(),
    )
}

/// True when the grid profile of `utility` along the budget line has a single
/// local maximum.
pub fn budget_profile_unimodal(
    utility: &UtilitySpec,
    price: RelativePrice,
    endow: Endowment,
    grid_n: usize,
) -> bool {
    let m = endow.income_at(price);
    let line = BudgetLine {
        utility,
        income: m,
        price: price.value(),
    };
    let vals: Vec<f64> = (0..=grid_n).map(|i| line.eval(m * i as f64 / grid_n as f64)).collect();
    let mut direction_changes = 0;
    let mut rising = true;
    for w in vals.windows(2) {
        if rising && w[1] < w[0] {
            rising = false;
        } else if !rising && w[1] > w[0] {
            direction_changes += 1;
        }
    }
    direction_changes == 0
}
