//! Gradient bounds as functions of time, armed from named constants.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::{
    build_thm2_modulus, build_thm4_modulus, DriftEnvelope, Regime, ScalingLaw, TimeDependentModulus,
};
use crate::verifier::feasible_delta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundKind {
    /// `B²∂ξΩ(t, 0)`
    Thm1,
    /// `2exp[2 log(λ₀) exp(C₀t)]`
    Thm2,
    /// `λ₀²`
    Burgers,
    /// `C_{0,α}g^γ(t)`
    Thm3,
    /// `P·B·g^γ(t)·exp(C B^{1−β}∫₀ᵗg^{2αγ})`
    Thm4Crit,
    /// `λ(t)·log λ(t)`
    Thm4Super,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Thm1 => "THM1",
            BoundKind::Thm2 => "THM2",
            BoundKind::Burgers => "BURGERS",
            BoundKind::Thm3 => "THM3",
            BoundKind::Thm4Crit => "THM4_CRIT",
            BoundKind::Thm4Super => "THM4_SUPER",
        }
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "THM1" => BoundKind::Thm1,
            "THM2" => BoundKind::Thm2,
            "BURGERS" => BoundKind::Burgers,
            "THM3" => BoundKind::Thm3,
            "THM4_CRIT" => BoundKind::Thm4Crit,
            "THM4_SUPER" => BoundKind::Thm4Super,
            other => return Err(Error::Config(format!("unknown bound kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone)]
enum Formula {
    Slope {
        b: f64,
        modulus: Box<TimeDependentModulus>,
    },
    DoubleExp {
        lambda0: f64,
        c0: f64,
    },
    Constant(f64),
    Power {
        c: f64,
        gamma: f64,
        drift: DriftEnvelope,
    },
    ExpIntegral {
        prefactor: f64,
        b: f64,
        c: f64,
        beta: f64,
        gamma: f64,
        q: f64,
        drift: DriftEnvelope,
    },
    LambdaLogLambda(ScalingLaw),
}

/// Evaluable bound `‖∇u(t)‖ ≤ F(t)`.
#[derive(Debug, Clone)]
pub struct BoundFormula {
    pub kind: BoundKind,
    pub constants: BTreeMap<String, f64>,
    formula: Formula,
}

impl BoundFormula {
    /// Bound value at `t`; `+∞` once it overflows.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.formula {
            Formula::Slope { b, modulus } => b * b * modulus.slope_at_zero(t),
            Formula::DoubleExp { lambda0, c0 } => 2.0 * (2.0 * lambda0.ln() * (c0 * t).exp()).exp(),
            Formula::Constant(v) => *v,
            Formula::Power { c, gamma, drift } => c * drift.g(t).powf(*gamma),
            Formula::ExpIntegral {
                prefactor,
                b,
                c,
                beta,
                gamma,
                q,
                drift,
            } => {
                let ln = (prefactor * b).ln()
                    + gamma * drift.g(t).ln()
                    + c * b.powf(1.0 - beta) * drift.integral_pow(*q, t);
                ln.exp()
            }
            Formula::LambdaLogLambda(law) => (law.ln_lambda(t) + law.ln_ln_lambda(t)).exp(),
        }
    }

    /// CSV column name, `bound_<KIND>`.
    pub fn column(&self) -> String {
        format!("bound_{}", self.kind.name())
    }
}

fn take(c: &BTreeMap<String, f64>, kind: BoundKind, name: &str) -> Result<f64> {
    let v = *c
        .get(name)
        .ok_or_else(|| Error::Config(format!("{} bound needs the constant {name}", kind.name())))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!(
            "{} bound constant {name} must be positive, got {v}",
            kind.name()
        )));
    }
    Ok(v)
}

fn take_nonneg(c: &BTreeMap<String, f64>, kind: BoundKind, name: &str) -> Result<f64> {
    match c.get(name) {
        Some(&v) if v >= 0.0 && v.is_finite() => Ok(v),
        Some(&v) => Err(Error::Config(format!(
            "{} bound constant {name} must be nonnegative, got {v}",
            kind.name()
        ))),
        None => Err(Error::Config(format!(
            "{} bound needs the constant {name}",
            kind.name()
        ))),
    }
}

fn need_drift(drift: Option<&DriftEnvelope>, kind: BoundKind) -> Result<DriftEnvelope> {
    let d = drift
        .cloned()
        .ok_or_else(|| Error::Config(format!("{} bound needs a drift envelope g", kind.name())))?;
    d.validate()?;
    Ok(d)
}

fn gamma_of(alpha: f64, beta: f64) -> Result<f64> {
    let p = beta + 2.0 * alpha - 1.0;
    if !(p > 0.0) {
        return Err(Error::Parameter(format!(
            "beta+2alpha-1 must be positive (got {p:.6})"
        )));
    }
    Ok(1.0 / p)
}

/// Builds a bound from named constants.
///
/// `THM1`: `B`, `lambda0`, `C0` (optional `delta`), with the Burgers–Hilbert
/// modulus. `THM2`: `lambda0`, `C0`. `BURGERS`: `lambda0`. `THM3`: `C_0alpha`,
/// `alpha`, `beta`. `THM4_CRIT` and `THM4_SUPER`: `B`, `C_dab`, `alpha`, `beta`,
/// optional `prefactor` (default 1) and `delta`. The `THM3`/`THM4` kinds need `g`.
/// Certified rate constants `C0` and `C_dab` may be zero; every other
/// constant must be positive.
pub fn arm_bound(
    kind: BoundKind,
    constants: &BTreeMap<String, f64>,
    drift: Option<&DriftEnvelope>,
) -> Result<BoundFormula> {
    let c = constants;
    let get = |name: &str| take(c, kind, name);
    let formula = match kind {
        BoundKind::Thm1 => {
            let lambda0 = get("lambda0")?;
            let delta = match c.get("delta") {
                Some(&d) => d,
                None => feasible_delta(1.0, 0.5, 1.0, "THM2")?.1,
            };
            let c0 = take_nonneg(c, kind, "C0")?;
            let modulus = build_thm2_modulus(delta, None, lambda0, c0)?;
            Formula::Slope {
                b: get("B")?,
                modulus: Box::new(modulus),
            }
        }
        BoundKind::Thm2 => Formula::DoubleExp {
            lambda0: get("lambda0")?,
            c0: take_nonneg(c, kind, "C0")?,
        },
        BoundKind::Burgers => {
            let l0 = get("lambda0")?;
            Formula::Constant(l0 * l0)
        }
        BoundKind::Thm3 => {
            let gamma = gamma_of(get("alpha")?, get("beta")?)?;
            Formula::Power {
                c: get("C_0alpha")?,
                gamma,
                drift: need_drift(drift, kind)?,
            }
        }
        BoundKind::Thm4Crit => {
            let (alpha, beta) = (get("alpha")?, get("beta")?);
            let gamma = gamma_of(alpha, beta)?;
            Formula::ExpIntegral {
                prefactor: c.get("prefactor").copied().unwrap_or(1.0),
                b: get("B")?,
                c: take_nonneg(c, kind, "C_dab")?,
                beta,
                gamma,
                q: 2.0 * alpha * gamma,
                drift: need_drift(drift, kind)?,
            }
        }
        BoundKind::Thm4Super => {
            let (alpha, beta) = (get("alpha")?, get("beta")?);
            let delta = match c.get("delta") {
                Some(&d) => d,
                None => feasible_delta(alpha, beta, 1.0, "THM4_SUPER")?.1,
            };
            let tdm = build_thm4_modulus(
                alpha,
                beta,
                get("B")?,
                need_drift(drift, kind)?,
                Regime::Supercritical,
                delta,
                take_nonneg(c, kind, "C_dab")?,
            )?;
            Formula::LambdaLogLambda(tdm.scaling)
        }
    };
    Ok(BoundFormula {
        kind,
        constants: constants.clone(),
        formula,
    })
}
