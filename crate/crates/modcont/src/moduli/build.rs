use serde::{Deserialize, Serialize};

use super::scaling::{DriftEnvelope, Form, ScalingKind, ScalingLaw, TimeDependentModulus};
use super::{ExpTail, Growth, Modulus, Piece, PieceKind, PiecewiseModulus};
use crate::error::{Error, Result};
use crate::quad::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Critical,
    Supercritical,
}

/// Midpoint exponent `r = 1/2 + (2 − 2α − β)/2`.
pub fn holder_r(alpha: f64, beta: f64) -> f64 {
    0.5 + (2.0 - 2.0 * alpha - beta) / 2.0
}

fn check_supercritical(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0,1], got {alpha}"
        )));
    }
    if !(beta + 2.0 * alpha - 1.0 > 0.0) {
        return Err(Error::Parameter(format!(
            "beta+2alpha-1 must be positive (got {:.6})",
            beta + 2.0 * alpha - 1.0
        )));
    }
    Ok(())
}

/// `2σ − σ^{3/2}` on `[0, δ]` joined to `tanh((σ − δ) + μ)`, rescaled by the
/// double-exponential law `λ(t) = exp[log(λ₀)·exp(C₀t)]` with `μ(t) = λ(t)`.
pub fn build_thm2_modulus(
    delta: f64,
    mu_shift: Option<f64>,
    lambda0: f64,
    c0: f64,
) -> Result<TimeDependentModulus> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Parameter(format!(
            "delta must lie in (0,1], got {delta}"
        )));
    }
    if !(lambda0 >= std::f64::consts::E) {
        return Err(Error::Parameter(format!(
            "lambda0 must be >= e, got {lambda0}"
        )));
    }
    if !(c0 >= 0.0) {
        return Err(Error::Parameter(format!(
            "C0 must be nonnegative, got {c0}"
        )));
    }
    let target = 2.0 * delta - delta.powf(1.5);
    let solved = bisect(|m| m.tanh() - target, 0.0, 1.0, 1e-15)
        .filter(|m| *m > 0.0)
        .ok_or_else(|| {
            Error::Construction(format!("no mu_shift in (0,1] with tanh(mu) = {target}"))
        })?;
    let mu = match mu_shift {
        None => solved,
        Some(m) => {
            if (m.tanh() - target).abs() > 1e-12 * target.max(1e-300) {
                return Err(Error::Construction(format!(
                    "mu_shift {m} breaks continuity at delta"
                )));
            }
            m
        }
    };
    let sech = 1.0 / mu.cosh();
    if sech * sech > 2.0 - 1.5 * delta.sqrt() {
        return Err(Error::Construction(
            "junction slope increases at delta".into(),
        ));
    }
    let omega = PiecewiseModulus::new(
        vec![
            Piece {
                start: 0.0,
                kind: PieceKind::LinearMinusPower {
                    c1: 2.0,
                    c2: 1.0,
                    e: 1.5,
                },
            },
            Piece {
                start: delta,
                kind: PieceKind::TanhShift {
                    amp: 1.0,
                    rate: 1.0,
                    delta,
                    shift: mu,
                },
            },
        ],
        delta,
        None,
    );
    Ok(TimeDependentModulus {
        omega,
        scaling: ScalingLaw::double_exp(lambda0, c0),
        form: Form::LambdaOmegaMu,
        b: 1.0,
    })
}

/// `σ − σ^{2−r}` on `[0, δ]` joined to the exponential-integral tail with
/// slope `1/2 − (2−r)δ^{1−r}`, in the form `B·ω(B·g^γ·ξ)`.
pub fn build_thm3_modulus(
    alpha: f64,
    beta: f64,
    b: f64,
    g: DriftEnvelope,
    delta: f64,
    c_tail: f64,
) -> Result<TimeDependentModulus> {
    check_supercritical(alpha, beta)?;
    if !(b >= 1.0) {
        return Err(Error::Parameter(format!("B must be >= 1, got {b}")));
    }
    if !(delta > 0.0 && delta <= 1.0) || !(c_tail > 0.0) {
        return Err(Error::Parameter(
            "delta in (0,1] and a positive tail constant are required".into(),
        ));
    }
    g.validate()?;
    let r = holder_r(alpha, beta);
    let p = beta + 2.0 * alpha - 1.0;
    let v0 = delta - delta.powf(2.0 - r);
    let slope0 = 0.5 - (2.0 - r) * delta.powf(1.0 - r);
    if !(slope0 > 0.0) {
        return Err(Error::Construction(format!(
            "tail slope {slope0} at delta={delta} is not positive"
        )));
    }
    let tail = ExpTail::new(delta, v0, slope0, p, c_tail);
    let omega = PiecewiseModulus::new(
        vec![
            Piece {
                start: 0.0,
                kind: PieceKind::LinearMinusPower {
                    c1: 1.0,
                    c2: 1.0,
                    e: 2.0 - r,
                },
            },
            Piece {
                start: delta,
                kind: PieceKind::ExpIntegralTail(tail),
            },
        ],
        delta,
        Some((alpha, beta, r)),
    );
    let gamma = 1.0 / p;
    let scaling = ScalingLaw {
        gamma,
        beta,
        drift: g,
        ..ScalingLaw::constant(1.0)
    };
    Ok(TimeDependentModulus {
        omega,
        scaling,
        form: Form::BOmegaBg,
        b,
    })
}

/// `2σ − σ^{2−r}` on `[0, δ]` joined to `δ·log(σ/δ) + 2δ − δ^{2−r}`, in the
/// form `λ(t)·ω(B·μ(t)·ξ)` with the critical or supercritical time laws.
pub fn build_thm4_modulus(
    alpha: f64,
    beta: f64,
    b: f64,
    g: DriftEnvelope,
    regime: Regime,
    delta: f64,
    c: f64,
) -> Result<TimeDependentModulus> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Parameter(format!(
            "beta must lie in (0,1), got {beta}"
        )));
    }
    check_supercritical(alpha, beta)?;
    if !(b >= 1.0) {
        return Err(Error::Parameter(format!("B must be >= 1, got {b}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    g.validate()?;
    let r = holder_r(alpha, beta);
    if (2.0 - r) * delta.powf(1.0 - r) > 1.0 {
        return Err(Error::Construction(
            "junction slope increases at delta".into(),
        ));
    }
    let c0 = 2.0 * delta - delta.powf(2.0 - r);
    let omega = PiecewiseModulus::new(
        vec![
            Piece {
                start: 0.0,
                kind: PieceKind::LinearMinusPower {
                    c1: 2.0,
                    c2: 1.0,
                    e: 2.0 - r,
                },
            },
            Piece {
                start: delta,
                kind: PieceKind::LogTail { delta, c0 },
            },
        ],
        delta,
        Some((alpha, beta, r)),
    );
    let gamma = 1.0 / (beta + 2.0 * alpha - 1.0);
    let base = ScalingLaw {
        c,
        b,
        beta,
        gamma,
        drift: g,
        ..ScalingLaw::constant(1.0)
    };
    let scaling = match regime {
        Regime::Critical => ScalingLaw {
            kind: ScalingKind::ExpIntegral,
            q: 2.0 * alpha * gamma,
            ..base
        },
        Regime::Supercritical if alpha >= 0.5 => ScalingLaw {
            kind: ScalingKind::LogPowerMu,
            q: 1.0 - gamma * beta,
            g_exp: gamma,
            kappa: 1.0,
            ..base
        },
        Regime::Supercritical => ScalingLaw {
            kind: ScalingKind::LogPowerMu,
            q: 1.0,
            g_exp: gamma * (1.0 - beta),
            kappa: 1.0 / (1.0 - beta),
            ..base
        },
    };
    Ok(TimeDependentModulus {
        omega,
        scaling,
        form: Form::LambdaOmegaBmu,
        b,
    })
}

/// Smallest admissible rescaling `B₀` for data with the given sup and
/// Lipschitz norms.
pub fn rescale_for_data(m: &PiecewiseModulus, sup_norm: f64, lip_norm: f64) -> Result<f64> {
    if !(sup_norm >= 0.0 && lip_norm >= 0.0) {
        return Err(Error::Parameter("norms must be nonnegative".into()));
    }
    if sup_norm == 0.0 && lip_norm == 0.0 {
        return Ok(0.0);
    }
    match m.growth() {
        Growth::Bounded(_) => {
            let wd = m.value(m.delta);
            if !(wd > 0.0) {
                return Err(Error::Degenerate(format!("omega(delta) = {wd}")));
            }
            Ok(2.0 * sup_norm / wd + (m.delta * lip_norm / wd).sqrt())
        }
        _ => {
            let target = (lip_norm + 1.0).max(2.0 * sup_norm + 1.0);
            let mut hi = 1.0;
            while m.value(hi) < target {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::Degenerate("modulus never reaches the target".into()));
                }
            }
            bisect(|x| m.value(x) - target, hi / 2.0, hi, 1e-13 * hi)
                .ok_or_else(|| Error::Degenerate("root solve failed".into()))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StrongModulusReport {
    pub checks: Vec<PropertyCheck>,
}

impl StrongModulusReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.passed)
            .unwrap_or(false)
    }
}

/// Evaluates every strong-modulus property on a log grid in `[1e−8, 1e4]`
/// plus the breakpoints.
pub fn check_strong_modulus(m: &dyn Modulus) -> StrongModulusReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, witness: Option<f64>, detail: String| {
        checks.push(PropertyCheck {
            name: name.into(),
            passed,
            witness,
            detail,
        });
    };
    let v0 = m.value(0.0);
    push(
        "zero_at_origin",
        v0.abs() <= 1e-14,
        None,
        format!("omega(0) = {v0:e}"),
    );

    let bps = m.breakpoints();
    let mut worst: Option<(f64, f64)> = None;
    for &b in &bps {
        let left = m.value(b * (1.0 - 1e-15));
        let gap = (m.value(b) - left).abs() - 4.0 * m.d1(b).abs() * b * 1e-15;
        let rel = gap.max(0.0) / m.value(b).abs().max(1e-300);
        if worst.is_none_or(|(_, w)| rel > w) {
            worst = Some((b, rel));
        }
    }
    let ok = worst.is_none_or(|(_, r)| r <= 1e-12);
    push(
        "continuity",
        ok,
        worst.filter(|_| !ok).map(|w| w.0),
        format!("max relative jump {:e}", worst.map_or(0.0, |w| w.1)),
    );

    let mut grid: Vec<f64> = (0..=1200)
        .map(|i| 10f64.powf(-8.0 + 12.0 * i as f64 / 1200.0))
        .collect();
    for &b in &bps {
        grid.extend([b - 1e-12, b + 1e-12]);
    }
    let bad = grid.iter().copied().find(|&s| !(m.d1(s) >= 0.0));
    push(
        "nondecreasing",
        bad.is_none(),
        bad,
        "omega' >= 0 on the sample grid".into(),
    );

    let bad = bps
        .iter()
        .copied()
        .find(|&b| m.d1_right(b) > m.d1(b) * (1.0 + 1e-14));
    push(
        "junction_slopes",
        bad.is_none(),
        bad,
        "omega'(b+) <= omega'(b-) at breakpoints".into(),
    );

    let s0 = m.d1(0.0);
    push(
        "finite_positive_slope",
        s0 > 0.0 && s0.is_finite(),
        None,
        format!("omega'(0) = {s0}"),
    );

    let curv = m.curvature_at_zero();
    let structural = curv.coef < 0.0 && curv.exponent < 0.0;
    let seq: Vec<f64> = (4..12).map(|k| m.d2(10f64.powi(-k))).collect();
    let numeric = seq.windows(2).all(|w| w[1] < w[0]);
    push(
        "singular_curvature",
        structural && numeric,
        None,
        format!("omega'' ~ {:.4}*s^{:.4} near 0", curv.coef, curv.exponent),
    );
    StrongModulusReport { checks }
}
