//! Integrating-factor time steppers for the periodic model equations.
//!
//! Every equation is written `∂tû = Λ(m)û + N̂(u)` with the linear symbol
//! `Λ = −ν|k|² − κ|k|^{2α} + c·K̂` integrated exactly per mode and the quadratic
//! term `N` evaluated pseudo-spectrally.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{leray_project, FftNd, Field, MultiplierSpec, ZERO};
use crate::error::{Error, Result};
use crate::moduli::DriftEnvelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EquationKind {
    /// `∂tu = νΔu + (u·∇)u + cNu`
    #[default]
    Burgers,
    /// `∂tu + κ(−Δ)^αu = (b·∇)u` for a scalar `u`
    DriftDiffusion,
    /// `∂tu + κ(−Δ)^αu = P[(b·∇)u]` with a prescribed solenoidal `b`
    LinearNse,
    /// `∂tu + κ(−Δ)^αu = P[(u·∇)u]`
    Nse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dealias {
    #[default]
    TwoThirds,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Integrator {
    /// First-order integrating-factor Euler.
    #[default]
    Euler,
    /// Second-order integrating-factor midpoint rule.
    Midpoint,
}

/// Zero-order term `c·N` of the generalized Burgers equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SioTerm {
    pub multiplier: MultiplierSpec,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub equation: EquationKind,
    /// Coefficient of `Δ`.
    pub nu: f64,
    /// Order and coefficient of `(−Δ)^α`.
    pub alpha: f64,
    pub kappa: f64,
    pub sio: Option<SioTerm>,
    /// Turns the quadratic term off (linear tests).
    pub nonlinear: bool,
    pub dt: f64,
    pub t_max: f64,
    pub dealias: Dealias,
    pub integrator: Integrator,
    /// Coefficient-norm growth over the first state that counts as blowup.
    pub growth_limit: f64,
    /// Resolution-loss threshold on the coefficient-norm fraction carried by the
    /// upper half of the retained band.
    pub tail_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            equation: EquationKind::Burgers,
            nu: 1.0,
            alpha: 1.0,
            kappa: 0.0,
            sio: None,
            nonlinear: true,
            dt: 1e-3,
            t_max: 1.0,
            dealias: Dealias::TwoThirds,
            integrator: Integrator::Euler,
            growth_limit: 1e12,
            tail_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::Parameter(format!(
                "T must be nonnegative, got {}",
                self.t_max
            )));
        }
        if !(self.nu >= 0.0 && self.kappa >= 0.0) {
            return Err(Error::Parameter("nu and kappa must be nonnegative".into()));
        }
        if self.kappa > 0.0 && !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if !(self.growth_limit > 1.0) {
            return Err(Error::Parameter("growth_limit must exceed 1".into()));
        }
        Ok(())
    }
}

/// Supplier of the drift `b(t, ·)` on the grid of the evolving field.
pub trait DriftSource: Send + Sync {
    fn name(&self) -> &str;
    /// Grid samples of `b`, one vector per component.
    fn sample(&self, t: f64, u: &Field) -> Result<Vec<Vec<f64>>>;
    /// Declared Hölder exponent and envelope `g(t)`, when known.
    fn envelope(&self) -> Option<&DriftEnvelope> {
        None
    }
    /// `b = u`, which only the nonlinear mode accepts.
    fn is_self_advection(&self) -> bool {
        false
    }
}

pub type DriftFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Closed-form drift `b(t, x)`.
#[derive(Clone)]
pub struct ClosedFormDrift {
    pub name: String,
    pub f: DriftFn,
    pub envelope: Option<DriftEnvelope>,
}

impl fmt::Debug for ClosedFormDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedFormDrift({})", self.name)
    }
}

impl ClosedFormDrift {
    pub fn new(name: impl Into<String>, f: DriftFn) -> Self {
        ClosedFormDrift {
            name: name.into(),
            f,
            envelope: None,
        }
    }

    pub fn with_envelope(mut self, env: DriftEnvelope) -> Self {
        self.envelope = Some(env);
        self
    }
}

impl DriftSource for ClosedFormDrift {
    fn name(&self) -> &str {
        &self.name
    }

    fn sample(&self, t: f64, u: &Field) -> Result<Vec<Vec<f64>>> {
        let (dim, n, l) = (u.dim(), u.n(), u.period());
        let mut out = vec![vec![0.0; u.len()]; dim];
        for idx in 0..u.len() {
            let x = super::grid_point(idx, dim, n, l);
            let b = (self.f)(t, &x[..dim]);
            if b.len() != dim {
                return Err(Error::Input(format!(
                    "drift {} returned {} components, expected {dim}",
                    self.name,
                    b.len()
                )));
            }
            for a in 0..dim {
                out[a][idx] = b[a];
            }
        }
        Ok(out)
    }

    fn envelope(&self) -> Option<&DriftEnvelope> {
        self.envelope.as_ref()
    }
}

/// Surface quasi-geostrophic drift `b = (−R₂θ, R₁θ)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SqgDrift;

impl DriftSource for SqgDrift {
    fn name(&self) -> &str {
        "sqg"
    }

    fn sample(&self, _t: f64, u: &Field) -> Result<Vec<Vec<f64>>> {
        if u.dim() != 2 || u.comps() != 1 {
            return Err(Error::Input(
                "SQG drift needs a scalar field in two dimensions".into(),
            ));
        }
        let mut b1 = u.clone();
        let mut b2 = u.clone();
        for idx in 0..u.len() {
            let m = u.lattice_vector(idx);
            let norm = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            let v = u.coefficients(0)[idx];
            let (r1, r2) = if norm == 0.0 {
                (ZERO, ZERO)
            } else {
                (
                    v * Complex64::new(0.0, -(m[0] as f64) / norm),
                    v * Complex64::new(0.0, -(m[1] as f64) / norm),
                )
            };
            b1.coefficients_mut(0)[idx] = -r2;
            b2.coefficients_mut(0)[idx] = r1;
        }
        Ok(vec![b1.to_physical().remove(0), b2.to_physical().remove(0)])
    }
}

/// `b = u` for the nonlinear mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelfAdvection;

impl DriftSource for SelfAdvection {
    fn name(&self) -> &str {
        "self"
    }

    fn sample(&self, _t: f64, u: &Field) -> Result<Vec<Vec<f64>>> {
        Ok(u.to_physical())
    }

    fn is_self_advection(&self) -> bool {
        true
    }
}

/// Largest `|m·b̂(m)|` accepted for a prescribed solenoidal drift.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

/// Precomputed integrating factors and masks for one lattice and configuration.
pub struct Stepper {
    cfg: SolverConfig,
    dim: usize,
    n: usize,
    l: f64,
    linear: Vec<Complex64>,
    e_full: Vec<Complex64>,
    e_half: Vec<Complex64>,
    keep: Vec<bool>,
    tail: Vec<bool>,
    drift: Option<Arc<dyn DriftSource>>,
    norm_ref: Option<f64>,
    fft: FftNd,
}

impl fmt::Debug for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stepper")
            .field("cfg", &self.cfg)
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl Stepper {
    pub fn new(
        cfg: &SolverConfig,
        dim: usize,
        n: usize,
        l: f64,
        drift: Option<Arc<dyn DriftSource>>,
    ) -> Result<Self> {
        cfg.validate()?;
        let probe = Field::zeros(dim, n, l, 1)?;
        match cfg.equation {
            EquationKind::DriftDiffusion | EquationKind::LinearNse if drift.is_none() => {
                return Err(Error::Config(format!(
                    "{:?} needs a drift source",
                    cfg.equation
                )));
            }
            EquationKind::LinearNse if drift.as_ref().is_some_and(|d| d.is_self_advection()) => {
                return Err(Error::Input(
                    "the linear solver does not take b = u; use the NSE mode".into(),
                ));
            }
            _ => {}
        }
        let sio = match &cfg.sio {
            Some(term) => Some((term.multiplier.build(dim)?.table(dim, n, l)?, term.coupling)),
            None => None,
        };
        let len = probe.len();
        let s = 2.0 * PI / l;
        let cut = match cfg.dealias {
            Dealias::TwoThirds => (n as i64 - 1) / 3,
            Dealias::None => n as i64 / 2 - 1,
        };
        let mut linear = vec![ZERO; len];
        let mut keep = vec![false; len];
        let mut tail = vec![false; len];
        for idx in 0..len {
            let m = probe.lattice_vector(idx);
            let k2: f64 = m[..dim].iter().map(|&k| (s * k as f64).powi(2)).sum();
            let mut lam = Complex64::new(-cfg.nu * k2, 0.0);
            if cfg.kappa > 0.0 {
                lam -= cfg.kappa * k2.powf(cfg.alpha);
            }
            if let Some((table, c)) = &sio {
                lam += table.values[idx] * *c;
            }
            linear[idx] = lam;
            let top = m[..dim].iter().map(|k| k.abs()).max().unwrap_or(0);
            keep[idx] = top <= cut;
            tail[idx] = keep[idx] && 2 * top > cut;
        }
        let e_full = linear.iter().map(|&z| (z * cfg.dt).exp()).collect();
        let e_half = linear.iter().map(|&z| (z * (0.5 * cfg.dt)).exp()).collect();
        Ok(Stepper {
            cfg: cfg.clone(),
            dim,
            n,
            l,
            linear,
            e_full,
            e_half,
            keep,
            tail,
            drift,
            norm_ref: None,
            fft: FftNd::new(dim, n),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `Λ(m)` in storage order.
    pub fn linear_symbol(&self) -> &[Complex64] {
        &self.linear
    }

    /// Coefficient-norm fraction in the upper half of the retained band.
    pub fn tail_fraction(&self, u: &Field) -> f64 {
        let (mut top, mut all) = (0.0, 0.0);
        for c in 0..u.comps() {
            for (idx, v) in u.coefficients(c).iter().enumerate() {
                let e = v.norm_sqr();
                all += e;
                if self.tail[idx] {
                    top += e;
                }
            }
        }
        if all == 0.0 {
            0.0
        } else {
            (top / all).sqrt()
        }
    }

    fn check_field(&self, u: &Field) -> Result<()> {
        if u.dim() != self.dim || u.n() != self.n || u.period() != self.l {
            return Err(Error::Input(
                "field and stepper live on different lattices".into(),
            ));
        }
        let want = match self.cfg.equation {
            EquationKind::DriftDiffusion => 1,
            EquationKind::Burgers if u.comps() == 1 && self.dim == 1 => 1,
            _ => self.dim,
        };
        if u.comps() != want {
            return Err(Error::Input(format!(
                "{:?} expects {want} components, got {}",
                self.cfg.equation,
                u.comps()
            )));
        }
        Ok(())
    }

    fn physical(&self, coef: &[Complex64]) -> Vec<f64> {
        let mut buf = coef.to_vec();
        self.fft.process(&mut buf, true);
        buf.into_iter().map(|v| v.re).collect()
    }

    fn spectral(&self, values: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / values.len() as f64;
        let mut buf: Vec<Complex64> = values
            .iter()
            .map(|&v| Complex64::new(v * scale, 0.0))
            .collect();
        self.fft.process(&mut buf, false);
        buf
    }

    fn masked(&self, coef: &[Complex64]) -> Vec<Complex64> {
        coef.iter()
            .zip(&self.keep)
            .map(|(&v, &k)| if k { v } else { ZERO })
            .collect()
    }

    /// `Σ_j b_j ∂_j u_i` for every component, dealiased.
    fn transport(&self, u: &Field, b: &[Vec<f64>]) -> Result<Field> {
        let dim = self.dim;
        let mut out = Field::zeros(dim, self.n, self.l, u.comps())?;
        for i in 0..u.comps() {
            let ui = self.masked(u.coefficients(i));
            let mut acc = vec![0.0; u.len()];
            for (j, bj) in b.iter().enumerate() {
                let d: Vec<Complex64> = ui
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| v * Complex64::new(0.0, u.wave_vector(idx)[j]))
                    .collect();
                for (a, (x, y)) in acc.iter_mut().zip(self.physical(&d).iter().zip(bj)) {
                    *a += x * y;
                }
            }
            let r = self.spectral(&acc);
            let dst = out.coefficients_mut(i);
            for (idx, v) in r.into_iter().enumerate() {
                dst[idx] = if self.keep[idx] { v } else { ZERO };
            }
        }
        out.clear_nyquist();
        Ok(out)
    }

    fn masked_physical(&self, u: &Field) -> Vec<Vec<f64>> {
        (0..u.comps())
            .map(|c| self.physical(&self.masked(u.coefficients(c))))
            .collect()
    }

    /// `N̂(u)` at time `t`.
    pub fn nonlinear_term(&self, u: &Field, t: f64) -> Result<Field> {
        self.check_field(u)?;
        match self.cfg.equation {
            EquationKind::Burgers => {
                if !self.cfg.nonlinear {
                    return Field::zeros(self.dim, self.n, self.l, u.comps());
                }
                let b = self.masked_physical(u);
                self.transport(u, &b)
            }
            EquationKind::DriftDiffusion => {
                let b = self.drift_samples(u, t)?;
                self.transport(u, &b)
            }
            EquationKind::LinearNse => {
                let b = self.drift_samples(u, t)?;
                let bhat = Field::from_physical(self.dim, self.n, self.l, &b)?;
                let div = bhat.divergence_max()?;
                if div > SOLENOIDAL_TOL {
                    return Err(Error::Input(format!(
                        "drift is not solenoidal: max |m.b(m)| = {div:.3e}"
                    )));
                }
                leray_project(&self.transport(u, &b)?)
            }
            EquationKind::Nse => {
                let b = self.masked_physical(u);
                leray_project(&self.transport(u, &b)?)
            }
        }
    }

    fn drift_samples(&self, u: &Field, t: f64) -> Result<Vec<Vec<f64>>> {
        let src = self
            .drift
            .as_ref()
            .ok_or_else(|| Error::Config("no drift source".into()))?;
        let masked = Field::from_parts(
            u.dim(),
            u.n(),
            u.period(),
            (0..u.comps())
                .map(|c| self.masked(u.coefficients(c)))
                .collect(),
        );
        let b = src.sample(t, &masked)?;
        if b.len() != self.dim || b.iter().any(|c| c.len() != u.len()) {
            return Err(Error::Input(format!(
                "drift {} has the wrong shape",
                src.name()
            )));
        }
        Ok(b)
    }

    fn apply_factor(&self, u: &mut Field, e: &[Complex64]) {
        for c in 0..u.comps() {
            for (v, f) in u.coefficients_mut(c).iter_mut().zip(e) {
                *v *= f;
            }
        }
    }

    /// Advances `u` from `t` by one step; on blowup the input is the last good state.
    pub fn step(&mut self, u: &Field, t: f64) -> Result<Field> {
        self.check_field(u)?;
        let dt = self.cfg.dt;
        let norm_ref = *self
            .norm_ref
            .get_or_insert(u.coefficient_norm().max(f64::MIN_POSITIVE));
        let mut next = match self.cfg.integrator {
            Integrator::Euler => {
                let mut v = u.clone();
                v.axpy(dt, &self.nonlinear_term(u, t)?)?;
                self.apply_factor(&mut v, &self.e_full);
                v
            }
            Integrator::Midpoint => {
                let mut half = u.clone();
                half.axpy(0.5 * dt, &self.nonlinear_term(u, t)?)?;
                self.apply_factor(&mut half, &self.e_half);
                let mut nh = self.nonlinear_term(&half, t + 0.5 * dt)?;
                self.apply_factor(&mut nh, &self.e_half);
                let mut v = u.clone();
                self.apply_factor(&mut v, &self.e_full);
                v.axpy(dt, &nh)?;
                v
            }
        };
        next.remove_mean();
        next.clear_nyquist();
        let t_next = t + dt;
        if !next.is_finite() {
            return Err(Error::Blowup {
                t: t_next,
                reason: "non-finite Fourier coefficients".into(),
            });
        }
        let norm = next.coefficient_norm();
        if norm > self.cfg.growth_limit * norm_ref {
            return Err(Error::Blowup {
                t: t_next,
                reason: format!("coefficient norm grew by {:.3e}", norm / norm_ref),
            });
        }
        if let Some(tol) = self.cfg.tail_tol {
            let frac = self.tail_fraction(&next);
            if frac > tol {
                return Err(Error::Blowup {
                    t: t_next,
                    reason: format!(
                        "resolution lost: upper-band fraction {frac:.3e} exceeds {tol:.1e}"
                    ),
                });
            }
        }
        debug_assert!(next.hermitian_defect() <= 1e-9 * norm.max(1e-300));
        Ok(next)
    }
}

/// One Burgers step from a freshly built [`Stepper`].
pub fn step_burgers(u: &Field, cfg: &SolverConfig) -> Result<Field> {
    let cfg = SolverConfig {
        equation: EquationKind::Burgers,
        ..cfg.clone()
    };
    Stepper::new(&cfg, u.dim(), u.n(), u.period(), None)?.step(u, 0.0)
}

pub fn step_drift_diffusion(
    u: &Field,
    b: Arc<dyn DriftSource>,
    cfg: &SolverConfig,
    t: f64,
) -> Result<Field> {
    let cfg = SolverConfig {
        equation: EquationKind::DriftDiffusion,
        ..cfg.clone()
    };
    Stepper::new(&cfg, u.dim(), u.n(), u.period(), Some(b))?.step(u, t)
}

pub fn step_linear_nse(
    u: &Field,
    b: Arc<dyn DriftSource>,
    cfg: &SolverConfig,
    t: f64,
) -> Result<Field> {
    let cfg = SolverConfig {
        equation: EquationKind::LinearNse,
        ..cfg.clone()
    };
    Stepper::new(&cfg, u.dim(), u.n(), u.period(), Some(b))?.step(u, t)
}
