use serde::{Deserialize, Serialize};

use super::{Modulus, PiecewiseModulus};
use crate::error::{Error, Result};

/// Nondecreasing drift bound `g(t) ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GProfile {
    Constant {
        value: f64,
    },
    /// `a + b·t`
    Affine {
        a: f64,
        b: f64,
    },
    /// `c·(t_blow − t)^{−κ}`, evaluated only for `t < t_blow`
    Singular {
        c: f64,
        t_blow: f64,
        kappa: f64,
    },
    /// Monotone samples with linear interpolation, constant past the end.
    Table {
        t: Vec<f64>,
        g: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEnvelope {
    pub beta: f64,
    pub profile: GProfile,
}

impl DriftEnvelope {
    pub fn constant(beta: f64, value: f64) -> Self {
        DriftEnvelope {
            beta,
            profile: GProfile::Constant { value },
        }
    }

    pub fn validated(beta: f64, profile: GProfile) -> Result<Self> {
        let d = DriftEnvelope { beta, profile };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Parameter(format!(
                "drift beta must lie in [0,1), got {}",
                self.beta
            )));
        }
        match &self.profile {
            GProfile::Constant { value } if *value < 1.0 => {
                Err(Error::Parameter("g must be >= 1".into()))
            }
            GProfile::Affine { a, b } if *a < 1.0 || *b < 0.0 => {
                Err(Error::Parameter("affine g needs a >= 1 and b >= 0".into()))
            }
            GProfile::Singular { c, t_blow, kappa }
                if *t_blow <= 0.0 || *kappa < 0.0 || c * t_blow.powf(-kappa) < 1.0 =>
            {
                Err(Error::Parameter(
                    "singular g needs t_blow > 0, kappa >= 0 and g(0) >= 1".into(),
                ))
            }
            GProfile::Table { t, g } => {
                if t.len() != g.len() || t.is_empty() {
                    return Err(Error::Parameter(
                        "g table needs matching nonempty columns".into(),
                    ));
                }
                for i in 0..t.len() {
                    if g[i] < 1.0 {
                        return Err(Error::Parameter(format!("g table below 1 at t={}", t[i])));
                    }
                    if i > 0 && (t[i] <= t[i - 1] || g[i] < g[i - 1]) {
                        return Err(Error::Parameter(format!(
                            "g table not monotone at t={}",
                            t[i]
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        match &self.profile {
            GProfile::Constant { value } => *value,
            GProfile::Affine { a, b } => a + b * t,
            GProfile::Singular { c, t_blow, kappa } => {
                if t >= *t_blow {
                    f64::INFINITY
                } else {
                    c * (t_blow - t).powf(-kappa)
                }
            }
            GProfile::Table { t: ts, g } => {
                if t <= ts[0] {
                    return g[0];
                }
                let k = ts.partition_point(|&x| x <= t);
                if k >= ts.len() {
                    return *g.last().unwrap();
                }
                let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
                g[k - 1] + w * (g[k] - g[k - 1])
            }
        }
    }

    pub fn g_dot(&self, t: f64) -> f64 {
        match &self.profile {
            GProfile::Constant { .. } => 0.0,
            GProfile::Affine { b, .. } => *b,
            GProfile::Singular { c, t_blow, kappa } => c * kappa * (t_blow - t).powf(-kappa - 1.0),
            GProfile::Table { t: ts, g } => {
                let k = ts.partition_point(|&x| x <= t);
                if k == 0 || k >= ts.len() {
                    0.0
                } else {
                    (g[k] - g[k - 1]) / (ts[k] - ts[k - 1])
                }
            }
        }
    }

    /// `∫_0^t g(s)^q ds` in closed form for every profile.
    pub fn integral_pow(&self, q: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let seg = |g0: f64, g1: f64, dt: f64| {
            if g1 == g0 {
                g0.powf(q) * dt
            } else if (q + 1.0).abs() < 1e-300 {
                (g1 / g0).ln() * dt / (g1 - g0)
            } else {
                (g1.powf(q + 1.0) - g0.powf(q + 1.0)) / ((q + 1.0) * (g1 - g0)) * dt
            }
        };
        match &self.profile {
            GProfile::Constant { value } => value.powf(q) * t,
            GProfile::Affine { a, b } => seg(*a, a + b * t, t),
            GProfile::Singular { c, t_blow, kappa } => {
                if t >= *t_blow {
                    return f64::INFINITY;
                }
                let e = 1.0 - kappa * q;
                if e.abs() < 1e-14 {
                    c.powf(q) * (t_blow / (t_blow - t)).ln()
                } else {
                    c.powf(q) * (t_blow.powf(e) - (t_blow - t).powf(e)) / e
                }
            }
            GProfile::Table { t: ts, g } => {
                let mut acc = 0.0;
                let mut lo = 0.0;
                if ts[0] > 0.0 {
                    let hi = t.min(ts[0]);
                    acc += g[0].powf(q) * hi;
                    lo = hi;
                }
                for k in 1..ts.len() {
                    if lo >= t {
                        break;
                    }
                    let (a, b) = (ts[k - 1].max(0.0), ts[k]);
                    if b <= lo {
                        continue;
                    }
                    let hi = b.min(t);
                    let start = a.max(lo);
                    acc += seg(self.g(start), self.g(hi), hi - start);
                    lo = hi;
                }
                if t > lo {
                    acc += g.last().unwrap().powf(q) * (t - lo);
                }
                acc
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScalingKind {
    Constant,
    DoubleExp,
    ExpIntegral,
    LogPowerMu,
}

/// Time laws `λ(t)`, `μ(t)`, kept in log form since both overflow quickly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingLaw {
    pub kind: ScalingKind,
    pub lambda0: f64,
    /// `C₀` for the double exponential, `C_{d,α,β}` for the integral laws.
    pub c: f64,
    pub b: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Exponent of `g` inside the time integral.
    pub q: f64,
    /// Exponent of the `g` prefactor of `log λ` (LOG_POWER_MU).
    pub g_exp: f64,
    pub kappa: f64,
    pub drift: DriftEnvelope,
}

impl ScalingLaw {
    pub fn constant(lambda0: f64) -> Self {
        ScalingLaw {
            kind: ScalingKind::Constant,
            lambda0,
            c: 0.0,
            b: 1.0,
            beta: 0.0,
            gamma: 0.0,
            q: 0.0,
            g_exp: 0.0,
            kappa: 1.0,
            drift: DriftEnvelope::constant(0.0, 1.0),
        }
    }

    pub fn double_exp(lambda0: f64, c0: f64) -> Self {
        ScalingLaw {
            kind: ScalingKind::DoubleExp,
            c: c0,
            ..Self::constant(lambda0)
        }
    }

    fn integral_rate(&self, t: f64) -> f64 {
        self.c * self.b.powf(1.0 - self.beta) * self.drift.integral_pow(self.q, t)
    }

    pub fn ln_lambda(&self, t: f64) -> f64 {
        match self.kind {
            ScalingKind::Constant => self.lambda0.ln(),
            ScalingKind::DoubleExp => self.lambda0.ln() * (self.c * t).exp(),
            ScalingKind::ExpIntegral => self.integral_rate(t),
            ScalingKind::LogPowerMu => self.ln_ln_lambda(t).exp(),
        }
    }

    /// `ln ln λ`; finite even when `ln λ` overflows.
    pub fn ln_ln_lambda(&self, t: f64) -> f64 {
        match self.kind {
            ScalingKind::LogPowerMu => self.g_exp * self.drift.g(t).ln() + self.integral_rate(t),
            ScalingKind::DoubleExp => self.lambda0.ln().ln() + self.c * t,
            _ => self.ln_lambda(t).ln(),
        }
    }

    pub fn lambda(&self, t: f64) -> f64 {
        self.ln_lambda(t).exp()
    }

    pub fn ln_mu(&self, t: f64) -> f64 {
        match self.kind {
            ScalingKind::Constant | ScalingKind::DoubleExp => self.ln_lambda(t),
            ScalingKind::ExpIntegral => self.gamma * self.drift.g(t).ln(),
            ScalingKind::LogPowerMu => self.kappa * self.ln_ln_lambda(t),
        }
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.ln_mu(t).exp()
    }

    /// `λ′/λ`.
    pub fn lambda_rate(&self, t: f64) -> f64 {
        let drift_rate = || self.c * self.b.powf(1.0 - self.beta) * self.drift.g(t).powf(self.q);
        match self.kind {
            ScalingKind::Constant => 0.0,
            ScalingKind::DoubleExp => self.c * self.ln_lambda(t),
            ScalingKind::ExpIntegral => drift_rate(),
            ScalingKind::LogPowerMu => {
                let g = self.drift.g(t);
                self.ln_lambda(t) * (self.g_exp * self.drift.g_dot(t) / g + drift_rate())
            }
        }
    }

    /// `μ′/μ`.
    pub fn mu_rate(&self, t: f64) -> f64 {
        match self.kind {
            ScalingKind::Constant | ScalingKind::DoubleExp => self.lambda_rate(t),
            ScalingKind::ExpIntegral => self.gamma * self.drift.g_dot(t) / self.drift.g(t),
            ScalingKind::LogPowerMu => {
                let g = self.drift.g(t);
                let drift_rate = self.c * self.b.powf(1.0 - self.beta) * g.powf(self.q);
                self.kappa * (self.g_exp * self.drift.g_dot(t) / g + drift_rate)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Form {
    /// `λ(t)·ω(μ(t)ξ)`
    LambdaOmegaMu,
    /// `B·ω(B·g^γ·ξ)`
    BOmegaBg,
    /// `λ(t)·ω(B·μ(t)·ξ)`
    LambdaOmegaBmu,
}

/// `Ω(t, ξ) = P(t)·ω(R(t)·ξ)` with prefactor `P` and rate `R` set by the form.
#[derive(Debug, Clone)]
pub struct TimeDependentModulus {
    pub omega: PiecewiseModulus,
    pub scaling: ScalingLaw,
    pub form: Form,
    pub b: f64,
}

impl TimeDependentModulus {
    pub fn ln_prefactor(&self, t: f64) -> f64 {
        match self.form {
            Form::LambdaOmegaMu | Form::LambdaOmegaBmu => self.scaling.ln_lambda(t),
            Form::BOmegaBg => self.b.ln(),
        }
    }

    pub fn ln_rate(&self, t: f64) -> f64 {
        match self.form {
            Form::LambdaOmegaMu => self.scaling.ln_mu(t),
            Form::BOmegaBg => self.b.ln() + self.scaling.gamma * self.scaling.drift.g(t).ln(),
            Form::LambdaOmegaBmu => self.b.ln() + self.scaling.ln_mu(t),
        }
    }

    pub fn prefactor(&self, t: f64) -> f64 {
        self.ln_prefactor(t).exp()
    }

    pub fn rate(&self, t: f64) -> f64 {
        self.ln_rate(t).exp()
    }

    pub fn value(&self, t: f64, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        let inner = self.omega.value(self.rate(t) * xi);
        self.prefactor(t) * inner
    }

    pub fn d_xi(&self, t: f64, xi: f64) -> f64 {
        let r = self.rate(t);
        self.prefactor(t) * r * self.omega.d1(r * xi)
    }

    /// `ln ∂ξΩ(t, 0)`.
    pub fn ln_slope_at_zero(&self, t: f64) -> f64 {
        self.ln_prefactor(t) + self.ln_rate(t) + self.omega.d1(0.0).ln()
    }

    pub fn slope_at_zero(&self, t: f64) -> f64 {
        self.ln_slope_at_zero(t).exp()
    }
}
