//! Nonlocal functionals of a modulus: fractional dissipation along the
//! breakthrough segment, singular-integral and pressure-gradient moduli.
//!
//! Infinite tails are mapped onto `(0, 1]` by a power substitution matched
//! to the growth class, so no truncation remainder is incurred.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moduli::{Growth, Modulus, Power, Tabulated};
use crate::quad::{integrate, integrate_from_zero, integrate_to_inf, QuadResult, Tol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalResult {
    pub value: f64,
    pub est_error: f64,
    pub tail_truncation: f64,
}

impl FunctionalResult {
    pub fn zero() -> Self {
        FunctionalResult {
            value: 0.0,
            est_error: 0.0,
            tail_truncation: 0.0,
        }
    }

    fn from_quad(q: QuadResult, scale: f64, what: &str) -> Result<Self> {
        let value = q.value * scale;
        let est_error = q.error * scale.abs();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("{what}: non-finite value")));
        }
        if !q.converged && est_error > 1e-6 * value.abs().max(1e-6) {
            return Err(Error::Quadrature(format!(
                "{what}: no convergence (error {est_error:.3e})"
            )));
        }
        Ok(FunctionalResult {
            value,
            est_error,
            tail_truncation: 0.0,
        })
    }
}

fn tol() -> Tol {
    Tol {
        abs: 1e-15,
        rel: 1e-12,
        max_intervals: 6000,
    }
}

fn sorted_cuts(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|&c| c > lo && c < hi && c.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    v
}

/// `∫_0^a f` with the first panel handled by a power substitution for an
/// `η^nu` endpoint and the remainder split at `cuts`.
fn from_zero_split<F: Fn(f64) -> f64>(f: F, a: f64, nu: f64, cuts: &[f64]) -> QuadResult {
    let cuts = sorted_cuts(cuts.to_vec(), 0.0, a);
    let first = cuts.first().copied().unwrap_or(a);
    let mut out = integrate_from_zero(&f, first, nu, tol());
    let mut lo = first;
    for c in cuts.iter().skip(1).copied().chain(std::iter::once(a)) {
        out = out.add(integrate(&f, lo, c, tol()));
        lo = c;
    }
    out
}

/// `∫_a^∞ f` for `f = O(η^{-1-s})`: split at `cuts`, then map the last
/// panel to `(0, 1]`.
fn to_inf_split<F: Fn(f64) -> f64>(f: F, a: f64, s: f64, cuts: &[f64]) -> QuadResult {
    let cuts = sorted_cuts(cuts.to_vec(), a, f64::INFINITY);
    let mut out = QuadResult::zero();
    let mut lo = a;
    for &c in &cuts {
        out = out.add(integrate(&f, lo, c, tol()));
        lo = c;
    }
    out.add(integrate_to_inf(&f, lo, s, tol()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Domain(format!(
            "xi must be positive and finite, got {xi}"
        )));
    }
    Ok(())
}

/// Exponent `q` with `ω(σ) = O(σ^q)` at infinity; log growth is charged a
/// small power so the tail map stays smooth.
fn growth_power(g: Growth, log_charge: f64) -> f64 {
    match g {
        Growth::Bounded(_) => 0.0,
        Growth::Log => log_charge,
        Growth::Power(p) => p,
    }
}

/// Coefficient `K` with `D_α[ω](ξ) ≤ K·ξ^{2−2α}ω″(ξ)` for concave `ω` whose
/// curvature `|ω″|` is nonincreasing: `C_α·2^{2α−2}/(1−α)`, or `4C_α` at `α = 1`.
pub fn dissipation_coefficient(alpha: f64, c_alpha: f64) -> f64 {
    if alpha >= 1.0 {
        4.0 * c_alpha
    } else {
        c_alpha * 2f64.powf(2.0 * alpha - 2.0) / (1.0 - alpha)
    }
}

/// Fractional dissipation
/// `C_α∫_0^{ξ/2}[ω(ξ+2η)+ω(ξ−2η)−2ω(ξ)]η^{−1−2α} + C_α∫_{ξ/2}^∞[ω(2η+ξ)−ω(2η−ξ)−2ω(ξ)]η^{−1−2α}`.
///
/// At `α = 1` this is the local limit `4C·ω″(ξ)`.
pub fn frac_dissipation(
    m: &dyn Modulus,
    alpha: f64,
    xi: f64,
    c_alpha: f64,
) -> Result<FunctionalResult> {
    check_alpha(alpha)?;
    check_xi(xi)?;
    if alpha == 1.0 {
        return Ok(FunctionalResult {
            value: 4.0 * c_alpha * m.d2(xi),
            ..FunctionalResult::zero()
        });
    }
    let bps = m.breakpoints();
    let kink = bps.iter().any(|&b| (b - xi).abs() <= 1e-13 * xi) && m.d1_right(xi) != m.d1(xi);
    let nu = if kink {
        if alpha >= 0.5 {
            return Err(Error::Quadrature(format!(
                "second difference is not o(eta^(2 alpha)) at xi={xi}: kink in the modulus"
            )));
        }
        -2.0 * alpha
    } else {
        1.0 - 2.0 * alpha
    };
    let e = -1.0 - 2.0 * alpha;
    // the second difference switches evaluation route at η = ξ/4
    let mut near_cuts: Vec<f64> = bps.iter().map(|&b| 0.5 * (b - xi).abs()).collect();
    near_cuts.push(0.25 * xi);
    let near = from_zero_split(
        |eta| m.second_difference(xi, 2.0 * eta) * eta.powf(e),
        0.5 * xi,
        nu,
        &near_cuts,
    );

    let q = (growth_power(m.growth(), 0.0) - 1.0).max(0.0);
    let s = 2.0 * alpha - q;
    if s <= 0.0 {
        return Err(Error::Divergence(format!(
            "tail of the dissipation integral diverges: growth exponent {} vs 2 alpha = {}",
            q + 1.0,
            2.0 * alpha
        )));
    }
    let mut far_cuts: Vec<f64> = Vec::new();
    for &b in &bps {
        far_cuts.push(0.5 * (b - xi));
        far_cuts.push(0.5 * (b + xi));
    }
    let far = to_inf_split(
        |eta| m.fold_difference(xi, eta) * eta.powf(e),
        0.5 * xi,
        s,
        &far_cuts,
    );
    FunctionalResult::from_quad(near.add(far), c_alpha, "fractional dissipation")
}

/// `C·ξ^{2−2α}ω″(ξ)` (left second derivative), or `4C·ω″(ξ)` at `α = 1`.
pub fn frac_dissipation_local_bound(m: &dyn Modulus, alpha: f64, xi: f64, c_alpha: f64) -> f64 {
    if alpha >= 1.0 {
        4.0 * c_alpha * m.d2(xi)
    } else {
        c_alpha * xi.powf(2.0 - 2.0 * alpha) * m.d2(xi)
    }
}

/// `C[∫_0^{3ξ}ω(η)/η dη + ξ^ρ∫_{3ξ}^∞ω(η)η^{−1−ρ}dη]`.
pub fn sio_functional(m: &dyn Modulus, rho: f64, xi: f64, c_kd: f64) -> Result<FunctionalResult> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Parameter(format!(
            "rho must lie in (0, 1], got {rho}"
        )));
    }
    check_xi(xi)?;
    let q = growth_power(m.growth(), 0.5 * rho);
    if q >= rho {
        return Err(Error::Divergence(format!(
            "modulus grows like eta^{q}, at least eta^rho with rho={rho}"
        )));
    }
    let bps = m.breakpoints();
    let nu = m.leading_exponent() - 1.0;
    let near = from_zero_split(|eta| m.value(eta) / eta, 3.0 * xi, nu, &bps);
    let far = to_inf_split(
        |eta| m.value(eta) * eta.powf(-1.0 - rho),
        3.0 * xi,
        rho - q,
        &bps,
    );
    FunctionalResult::from_quad(
        near.add(far.scale(xi.powf(rho))),
        c_kd,
        "singular-integral functional",
    )
}

/// `∫_ξ^∞ ω/η²` for a modulus of sublinear growth.
fn inverse_square_tail(m: &dyn Modulus, xi: f64) -> Result<QuadResult> {
    let q = growth_power(m.growth(), 0.5);
    if q >= 1.0 {
        return Err(Error::Divergence(format!(
            "integral of omega/eta^2 diverges for growth eta^{q}"
        )));
    }
    Ok(to_inf_split(
        |eta| m.value(eta) / (eta * eta),
        xi,
        1.0 - q,
        &m.breakpoints(),
    ))
}

/// `C[∫_0^ξω_bω_u/η² + ω_b(ξ)∫_ξ^∞ω_u/η² + ω_u(ξ)∫_ξ^∞ω_b/η²]`.
pub fn pressure_functional(
    mb: &dyn Modulus,
    mu: &dyn Modulus,
    xi: f64,
    c_d: f64,
) -> Result<FunctionalResult> {
    check_xi(xi)?;
    let nu = mb.leading_exponent() + mu.leading_exponent() - 2.0;
    if nu <= -1.0 {
        return Err(Error::Divergence(format!(
            "integral of omega_b*omega_u/eta^2 diverges at 0: product behaves like eta^{}",
            nu + 2.0
        )));
    }
    let mut cuts = mb.breakpoints();
    cuts.extend(mu.breakpoints());
    let near = from_zero_split(
        |eta| mb.value(eta) * mu.value(eta) / (eta * eta),
        xi,
        nu,
        &cuts,
    );
    let tu = inverse_square_tail(mu, xi)?;
    let tb = inverse_square_tail(mb, xi)?;
    let total = near.add(tu.scale(mb.value(xi))).add(tb.scale(mu.value(xi)));
    FunctionalResult::from_quad(total, c_d, "pressure functional")
}

/// Pressure functional for a drift in `C^{0,β}` with seminorm `g`:
/// `pressure_functional(g·η^β, ω)`.
pub fn nse_pressure_functional(
    m: &dyn Modulus,
    beta: f64,
    g: f64,
    xi: f64,
    c_d: f64,
) -> Result<FunctionalResult> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    pressure_functional(&Power::new(g, beta), m, xi, c_d)
}

/// Integrated-by-parts form
/// `C·g[(1/(1−β))∫_0^ξω′η^{β−1} + ξ^β∫_ξ^∞ω/η²]` of [`nse_pressure_functional`].
pub fn nse_pressure_functional_ibp(
    m: &dyn Modulus,
    beta: f64,
    g: f64,
    xi: f64,
    c_d: f64,
) -> Result<FunctionalResult> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    check_xi(xi)?;
    let nu = beta + m.leading_exponent() - 2.0;
    let near = from_zero_split(
        |eta| m.d1(eta) * eta.powf(beta - 1.0),
        xi,
        nu,
        &m.breakpoints(),
    );
    let tail = inverse_square_tail(m, xi)?;
    let total = near
        .scale(1.0 / (1.0 - beta))
        .add(tail.scale(xi.powf(beta)));
    FunctionalResult::from_quad(total, c_d * g, "pressure functional")
}

/// `2C[∫_0^ξΩ²/η² + Ω(ξ)∫_ξ^∞Ω/η²]` by adaptive quadrature.
pub fn hypothesis_functional(omega: &dyn Modulus, xi: f64, c_d: f64) -> Result<FunctionalResult> {
    check_xi(xi)?;
    if omega.value(0.0) != 0.0 {
        return Err(Error::Domain("Omega(0) must vanish".into()));
    }
    let nu = 2.0 * omega.leading_exponent() - 2.0;
    let near = from_zero_split(
        |eta| omega.value(eta).powi(2) / (eta * eta),
        xi,
        nu,
        &omega.breakpoints(),
    );
    let tail = inverse_square_tail(omega, xi)?;
    FunctionalResult::from_quad(
        near.add(tail.scale(omega.value(xi))),
        2.0 * c_d,
        "hypothesis functional",
    )
}

/// [`hypothesis_functional`] at every node of a piecewise-linear `Ω`, from
/// exact per-cell antiderivatives.
pub fn hypothesis_functional_on_nodes(omega: &Tabulated, c_d: f64) -> Vec<f64> {
    let (x, y) = omega.nodes();
    let n = x.len();
    // near[j] = ∫_0^{x_j} Ω²/η², tail[j] = ∫_{x_j}^∞ Ω/η²
    let mut near = vec![0.0; n];
    let mut tail = vec![0.0; n];
    for k in 0..n - 1 {
        let (x0, x1) = (x[k], x[k + 1]);
        let b = (y[k + 1] - y[k]) / (x1 - x0);
        let a = y[k] - b * x0;
        let inc = if k == 0 {
            b * b * x1
        } else {
            let inv = (x1 - x0) / (x0 * x1);
            a * a * inv + 2.0 * a * b * (x1 / x0).ln() + b * b * (x1 - x0)
        };
        near[k + 1] = near[k] + inc;
    }
    tail[n - 1] = y[n - 1] / x[n - 1];
    for k in (0..n - 1).rev() {
        let (x0, x1) = (x[k], x[k + 1]);
        let inc = if k == 0 {
            f64::INFINITY
        } else {
            let b = (y[k + 1] - y[k]) / (x1 - x0);
            let a = y[k] - b * x0;
            a * (x1 - x0) / (x0 * x1) + b * (x1 / x0).ln()
        };
        tail[k] = tail[k + 1] + inc;
    }
    (0..n)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                2.0 * c_d * (near[j] + y[j] * tail[j])
            }
        })
        .collect()
}

/// `A + Bη` through the values of `m` at `x0` and `x1`.
fn affine_piece(m: &Tabulated, x0: f64, x1: f64) -> (f64, f64) {
    let b = (m.value(x1) - m.value(x0)) / (x1 - x0);
    (m.value(x0) - b * x0, b)
}

/// [`pressure_functional`] of two piecewise-linear moduli, from exact
/// per-cell antiderivatives on the merged nodes.
pub fn pressure_functional_tabulated(
    mb: &Tabulated,
    mu: &Tabulated,
    xi: f64,
    c_d: f64,
) -> Result<f64> {
    check_xi(xi)?;
    let mut cuts: Vec<f64> = mb
        .nodes()
        .0
        .iter()
        .chain(mu.nodes().0)
        .copied()
        .chain([0.0, xi])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut near = 0.0;
    for w in cuts.windows(2).filter(|w| w[1] <= xi) {
        let (x0, x1) = (w[0], w[1]);
        let ((a1, b1), (a2, b2)) = (affine_piece(mb, x0, x1), affine_piece(mu, x0, x1));
        near += b1 * b2 * (x1 - x0);
        if x0 > 0.0 {
            near += a1 * a2 * (x1 - x0) / (x0 * x1) + (a1 * b2 + a2 * b1) * (x1 / x0).ln();
        }
    }
    // ∫_ξ^∞ ω/η², constant past the last node
    let tail = |m: &Tabulated| {
        let end = m.last_node().max(xi);
        let mut v = m.value(end) / end;
        for w in cuts.windows(2).filter(|w| w[0] >= xi && w[1] <= end) {
            let (a, b) = affine_piece(m, w[0], w[1]);
            v += a * (w[1] - w[0]) / (w[0] * w[1]) + b * (w[1] / w[0]).ln();
        }
        v
    };
    Ok(c_d * (near + mb.value(xi) * tail(mu) + mu.value(xi) * tail(mb)))
}
