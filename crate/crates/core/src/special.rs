//! Scalar special functions behind the closed-form classifier: the switch
//! function `g`, its root `x*`, and the good-1 clearing quadratic `F`.

use std::sync::OnceLock;

use thiserror::Error;

use crate::model::{Endowment, RelativePrice};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("argument {0} outside the domain [2, inf)")]
    Domain(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
}

/// `g(x) = (x + sqrt(x^2 - 4))^2 / 8 + ln(1 - sqrt(1 - 4/x^2)) - ln 2` on `[2, inf)`.
///
/// Strictly increasing with `g(2) < 0 < g(inf)`. Agent B at income `m` with
/// weight `D` prefers the interior bundle iff `g(m / sqrt(D)) > 0`.
pub fn g(x: f64) -> Result<f64, SpecialError> {
    if !(x >= 2.0) {
        return Err(SpecialError::Domain(x));
    }
    // 1 - sqrt(1 - 4/x^2) = (x - s)/x = 4 / (x (x + s)), s = sqrt(x^2 - 4)
    let s = ((x - 2.0) * (x + 2.0)).sqrt();
    let t = x + s;
    Ok(t * t / 8.0 + std::f64::consts::LN_2 - (x * t).ln())
}

fn bisect_x_star() -> f64 {
    let eval = |x: f64| g(x).expect("bracket lies in the domain");
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if eval(lo).abs() <= eval(hi).abs() {
        lo
    } else {
        hi
    }
}

static X_STAR: OnceLock<f64> = OnceLock::new();

/// Root of `g` on `[2, 3]`, bisected to machine precision once and cached.
pub fn x_star_value() -> f64 {
    *X_STAR.get_or_init(bisect_x_star)
}

/// Root of `g` with `|g(x*)| <= tol`.
///
/// The cached root is bisected until the bracket collapses, so it satisfies
/// every tolerance down to the rounding floor of `g` itself.
pub fn x_star(tol: f64) -> Result<f64, SpecialError> {
    if !(tol > 0.0) {
        return Err(SpecialError::Tolerance(tol));
    }
    Ok(x_star_value())
}

/// Income `x* sqrt(D)` at which a quad-log agent switches from the corner to
/// the interior bundle.
pub fn switch_income(d: f64) -> f64 {
    x_star_value() * d.sqrt()
}

pub fn income_at(price: RelativePrice, endow: Endowment) -> f64 {
    endow.income_at(price)
}

/// The quadratic `F(X) = lead X^2 - 2 half_linear X + constant` whose smaller
/// root is the interior equilibrium price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingQuadratic {
    pub lead: f64,
    pub half_linear: f64,
    pub constant: f64,
}

impl ClearingQuadratic {
    pub fn new(endow_a: Endowment, endow_b: Endowment, d: f64) -> Self {
        let s1 = endow_a.good1() + endow_b.good1();
        let s2 = endow_a.good2() + endow_b.good2();
        let (b1, b2) = (endow_b.good1(), endow_b.good2());
        // (s2^2 - b2^2) and (s1^2 - b1^2) factored to keep them exact-ish for small A shares
        Self {
            lead: (s2 - b2) * (s2 + b2),
            half_linear: s1 * s2 + b1 * b2,
            constant: (s1 - b1) * (s1 + b1) + 4.0 * d,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.lead * x - 2.0 * self.half_linear) * x + self.constant
    }

    pub fn derivative(&self, x: f64) -> f64 {
        2.0 * (self.lead * x - self.half_linear)
    }

    /// Quarter discriminant `half_linear^2 - lead * constant`.
    pub fn delta(&self) -> f64 {
        self.half_linear * self.half_linear - self.lead * self.constant
    }

    /// Stationary point of `F`.
    pub fn vertex(&self) -> f64 {
        self.half_linear / self.lead
    }

    /// Smaller root, evaluated as `constant / (half_linear + sqrt(delta))`
    /// so that no cancellation occurs. `None` when `delta < 0`.
    pub fn smaller_root(&self) -> Option<f64> {
        let delta = self.delta();
        if delta < 0.0 {
            return None;
        }
        Some(self.constant / (self.half_linear + delta.sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePrices {
    /// Price at which agent A alone absorbs the aggregate good-1 endowment.
    pub pi_cor: f64,
    pub delta: f64,
    /// Smaller root of `F`, present iff `delta >= 0`.
    pub pi_int: Option<f64>,
    /// Stationary point of `F`.
    pub x_star_price: f64,
}

pub fn candidate_prices(endow_a: Endowment, endow_b: Endowment, d: f64) -> CandidatePrices {
    let quad = ClearingQuadratic::new(endow_a, endow_b, d);
    CandidatePrices {
        pi_cor: corner_price(endow_a, endow_b),
        delta: quad.delta(),
        pi_int: quad.smaller_root(),
        x_star_price: quad.vertex(),
    }
}

/// `(2 e^B_1 + e^A_1) / e^A_2`
pub fn corner_price(endow_a: Endowment, endow_b: Endowment) -> f64 {
    (2.0 * endow_b.good1() + endow_a.good1()) / endow_a.good2()
}
