//! Stationary and time-dependent moduli of continuity.

mod build;
mod piecewise;
mod scaling;
mod simple;

pub use build::{
    build_thm2_modulus, build_thm3_modulus, build_thm4_modulus, check_strong_modulus, holder_r,
    rescale_for_data, PropertyCheck, Regime, StrongModulusReport,
};
pub use piecewise::{ExpTail, Piece, PieceKind, PiecewiseModulus};
pub use scaling::{DriftEnvelope, Form, GProfile, ScalingKind, ScalingLaw, TimeDependentModulus};
pub use simple::{Power, Scaled, Tabulated};

use crate::error::{Error, Result};
use crate::quad::gl16;

/// Behavior of a modulus as `σ → ∞`, used to pick tail maps and detect
/// divergent integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    Bounded(f64),
    Log,
    Power(f64),
}

impl Growth {
    /// Power-law exponent dominating the growth (0 for bounded and log).
    pub fn exponent(&self) -> f64 {
        match *self {
            Growth::Power(p) => p,
            _ => 0.0,
        }
    }
}

/// Leading behavior `ω″(σ) ≈ coef·σ^exponent` as `σ → 0⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub coef: f64,
    pub exponent: f64,
}

/// A modulus that can be evaluated with up to two derivatives.
///
/// Derivatives at breakpoints are left derivatives; `d1_right` gives the
/// right one so jumps of `ω′` can be accounted for.
pub trait Modulus: Send + Sync {
    fn value(&self, s: f64) -> f64;
    fn d1(&self, s: f64) -> f64;
    fn d2(&self, s: f64) -> f64;

    fn d1_right(&self, s: f64) -> f64 {
        self.d1(s)
    }

    /// Points where `ω′` or `ω″` may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn growth(&self) -> Growth;

    /// Exponent `e` with `ω(σ) ~ c·σ^e` near the origin.
    fn leading_exponent(&self) -> f64 {
        1.0
    }

    fn curvature_at_zero(&self) -> Curvature;

    fn ln_d1(&self, s: f64) -> f64 {
        self.d1(s).ln()
    }

    fn ln_neg_d2(&self, s: f64) -> f64 {
        (-self.d2(s)).ln()
    }

    /// `ω(b) − ω(a)` without cancellation for short intervals.
    fn increment(&self, a: f64, b: f64) -> f64 {
        if b > a && b - a <= 0.5 * a && !self.breakpoints().iter().any(|&p| p > a && p < b) {
            gl16(|x| self.d1(x), a, b)
        } else {
            self.value(b) - self.value(a)
        }
    }

    /// `ω(x+h) + ω(x−h) − 2ω(x)`, via the tent-weighted integral of `ω″`
    /// (plus jump terms of `ω′`) when `h ≤ x/2`.
    fn second_difference(&self, x: f64, h: f64) -> f64 {
        tent_second_difference(self, x, h)
    }

    /// `ω(2η+ξ) − ω(2η−ξ) − 2ω(ξ)` for `2η ≥ ξ`.
    fn fold_difference(&self, xi: f64, eta: f64) -> f64 {
        self.increment(2.0 * eta - xi, 2.0 * eta + xi) - 2.0 * self.value(xi)
    }
}

impl<M: Modulus + ?Sized> Modulus for &M {
    fn value(&self, s: f64) -> f64 {
        (**self).value(s)
    }
    fn d1(&self, s: f64) -> f64 {
        (**self).d1(s)
    }
    fn d2(&self, s: f64) -> f64 {
        (**self).d2(s)
    }
    fn d1_right(&self, s: f64) -> f64 {
        (**self).d1_right(s)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn growth(&self) -> Growth {
        (**self).growth()
    }
    fn leading_exponent(&self) -> f64 {
        (**self).leading_exponent()
    }
    fn curvature_at_zero(&self) -> Curvature {
        (**self).curvature_at_zero()
    }
    fn ln_d1(&self, s: f64) -> f64 {
        (**self).ln_d1(s)
    }
    fn ln_neg_d2(&self, s: f64) -> f64 {
        (**self).ln_neg_d2(s)
    }
    fn increment(&self, a: f64, b: f64) -> f64 {
        (**self).increment(a, b)
    }
    fn second_difference(&self, x: f64, h: f64) -> f64 {
        (**self).second_difference(x, h)
    }
    fn fold_difference(&self, xi: f64, eta: f64) -> f64 {
        (**self).fold_difference(xi, eta)
    }
}

/// Default route for [`Modulus::second_difference`].
pub(crate) fn tent_second_difference<M: Modulus + ?Sized>(m: &M, x: f64, h: f64) -> f64 {
    if h > 0.5 * x {
        return m.value(x + h) + m.value(x - h) - 2.0 * m.value(x);
    }
    let (lo, hi) = (x - h, x + h);
    let mut cuts: Vec<f64> = m
        .breakpoints()
        .into_iter()
        .filter(|&b| b > lo && b < hi)
        .collect();
    let mut total = 0.0;
    for &b in &cuts {
        total += (h - (b - x).abs()) * (m.d1_right(b) - m.d1(b));
    }
    cuts.push(x);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for w in cuts.windows(2) {
        total += gl16(|t| (h - (t - x).abs()) * m.d2(t), w[0], w[1]);
    }
    total
}

/// Checked evaluation of `ω`, `ω′` or `ω″`.
pub fn eval(m: &dyn Modulus, sigma: f64, order: u8) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    match order {
        0 => Ok(m.value(sigma)),
        1 => Ok(m.d1(sigma)),
        2 if sigma == 0.0 => Err(Error::Singularity("second derivative at sigma = 0".into())),
        2 => Ok(m.d2(sigma)),
        _ => Err(Error::Domain(format!(
            "order must be 0, 1 or 2, got {order}"
        ))),
    }
}
