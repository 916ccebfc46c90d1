//! Grid certification of the modulus evolution inequalities.
//!
//! Every inequality is assembled as `P − N ≥ 0` from nonnegative terms kept
//! in log form, and reported through the normalized margin
//! `m = (P − N)/(P + N) ∈ [−1, 1]`, which survives the enormous dynamic range
//! of `λ(t)`. A point is certified when `m` exceeds the normalized quadrature
//! error plus a slack equal to the largest change of `m` to a grid neighbor.

mod hyp1;
mod march;
mod thm2;
mod thm3;
mod thm4;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::{holder_r, DriftEnvelope, Regime};
use crate::nonlocal::dissipation_coefficient;
use crate::quad::log_add;

pub use hyp1::hypothesis_profile;
pub use march::{hypothesis_march, MarchConfig, MarchSample, MarchTrace, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// Nonlocal terms by quadrature.
    #[default]
    Exact,
    /// The displayed sufficient bounds (local dissipation, closed-form tails).
    Conservative,
}

/// Stationary profile used by the drift-hypothesis checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HypProfile {
    /// `amp·tanh(rate·σ)`; stationary for the march when `amp = 8·rate`.
    Tanh { amp: f64, rate: f64 },
    /// The two-piece Burgers modulus with junction at `delta`.
    Thm2 { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InequalityParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    #[serde(rename = "C_alpha")]
    pub c_alpha: f64,
    #[serde(rename = "C_d")]
    pub c_d: f64,
    #[serde(rename = "C_K")]
    pub c_k: f64,
    pub rho: f64,
    pub lambda0: f64,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
    #[serde(rename = "C_dab")]
    pub c_dab: Option<f64>,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub dim: usize,
    /// Tail ODE constant as a fraction of the local dissipation coefficient.
    pub tail_ratio: f64,
    pub regime: Regime,
    pub mode: Mode,
    pub drift: Option<DriftEnvelope>,
    pub profile: HypProfile,
}

impl Default for InequalityParams {
    fn default() -> Self {
        InequalityParams {
            alpha: 1.0,
            beta: 0.5,
            delta: None,
            r: None,
            c_alpha: 1.0,
            c_d: 1.0,
            c_k: 1.0,
            rho: 1.0,
            lambda0: std::f64::consts::E,
            c0: None,
            c_dab: None,
            b: 1.0,
            l: 2.0 * std::f64::consts::PI,
            dim: 1,
            tail_ratio: 0.5,
            regime: Regime::Critical,
            mode: Mode::Exact,
            drift: None,
            profile: HypProfile::Tanh {
                amp: 1.0,
                rate: 1.0,
            },
        }
    }
}

impl InequalityParams {
    /// Exponent `r`; an explicit value must agree with the midpoint rule.
    pub(crate) fn resolved_r(&self) -> Result<f64> {
        let r = holder_r(self.alpha, self.beta);
        match self.r {
            Some(v) if (v - r).abs() > 1e-12 => Err(Error::Parameter(format!(
                "r is fixed by alpha and beta to {r}, got {v}"
            ))),
            _ => Ok(r),
        }
    }

    /// Tail ODE constant `tail_ratio·K_α`.
    pub(crate) fn tail_constant(&self) -> f64 {
        self.tail_ratio * dissipation_coefficient(self.alpha, self.c_alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub n_sigma: usize,
    pub t_max: f64,
    pub n_t: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            sigma_min: 1e-6,
            sigma_max: 1e3,
            n_sigma: 600,
            t_max: 1.0,
            n_t: 20,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_max > self.sigma_min && self.n_sigma >= 2) {
            return Err(Error::Parameter(
                "sigma grid needs 0 < sigma_min < sigma_max and n_sigma >= 2".into(),
            ));
        }
        if !(self.t_max >= 0.0) || self.n_t == 0 {
            return Err(Error::Parameter(
                "time grid needs t_max >= 0 and n_t >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// A sampled grid point; `sigma` may overflow for far-field samples, so
/// `ln_sigma` is authoritative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginPoint {
    pub t: f64,
    pub sigma: f64,
    pub ln_sigma: f64,
    pub margin: f64,
    /// Normalized quadrature error plus neighbor slack.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub sigma_min: f64,
    pub ln_sigma_max: f64,
    pub n_sigma: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: String,
    pub mode: Mode,
    pub params: serde_json::Value,
    pub grid: GridReport,
    pub min_margin: f64,
    pub argmin: MarginPoint,
    /// `min(margin − budget)` over the grid.
    pub min_certificate: f64,
    pub worst_certificate_at: MarginPoint,
    pub certified: bool,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Every sampled point when the grid is small enough to keep.
    #[serde(skip)]
    pub margins: Vec<MarginPoint>,
}

/// Nonnegative terms of `P` and `N`, and an absolute error, all in log form.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Terms {
    pos: f64,
    neg: f64,
    err: f64,
}

impl Terms {
    pub fn new() -> Self {
        Terms {
            pos: f64::NEG_INFINITY,
            neg: f64::NEG_INFINITY,
            err: f64::NEG_INFINITY,
        }
    }

    pub fn pos_ln(&mut self, x: f64) {
        if !x.is_nan() {
            self.pos = log_add(self.pos, x);
        }
    }

    pub fn neg_ln(&mut self, x: f64) {
        if !x.is_nan() {
            self.neg = log_add(self.neg, x);
        }
    }

    /// Adds `ln|v| + shift` to the side given by the sign of `v`.
    pub fn signed(&mut self, v: f64, shift: f64) {
        if v > 0.0 {
            self.pos_ln(v.ln() + shift);
        } else if v < 0.0 {
            self.neg_ln((-v).ln() + shift);
        }
    }

    pub fn err_ln(&mut self, x: f64) {
        if !x.is_nan() {
            self.err = log_add(self.err, x);
        }
    }

    pub fn margin(&self) -> f64 {
        if self.pos == f64::NEG_INFINITY && self.neg == f64::NEG_INFINITY {
            return 0.0;
        }
        if self.pos == f64::INFINITY || self.neg == f64::INFINITY {
            return if self.pos == self.neg {
                0.0
            } else if self.pos > self.neg {
                1.0
            } else {
                -1.0
            };
        }
        (0.5 * (self.pos - self.neg)).tanh()
    }

    /// Error in `m`: `|∂m/∂N| ≤ 2/(P+N)` per unit of absolute error.
    pub fn normalized_error(&self) -> f64 {
        if self.err == f64::NEG_INFINITY {
            return 0.0;
        }
        let total = log_add(self.pos, self.neg);
        if total == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        2.0 * (self.err - total).exp()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub ln_sigma: f64,
    pub segment: u32,
    pub margin: f64,
    pub err: f64,
}

impl Sample {
    pub fn new(ln_sigma: f64, segment: u32, terms: &Terms) -> Self {
        Sample {
            ln_sigma,
            segment,
            margin: terms.margin(),
            err: terms.normalized_error(),
        }
    }
}

pub(crate) struct SliceSummary {
    worst: MarginPoint,
    worst_cert: MarginPoint,
    points: usize,
    kept: Vec<MarginPoint>,
}

/// Reduces one time slice; samples must be ordered by `σ`, and samples in
/// the same segment are neighbors for the slack.
pub(crate) fn reduce_slice(t: f64, samples: &[Sample], keep: bool) -> SliceSummary {
    let mut worst: Option<MarginPoint> = None;
    let mut worst_cert: Option<MarginPoint> = None;
    let mut kept = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let mut slack: f64 = 0.0;
        if i > 0 && samples[i - 1].segment == s.segment {
            slack = slack.max((s.margin - samples[i - 1].margin).abs());
        }
        if i + 1 < samples.len() && samples[i + 1].segment == s.segment {
            slack = slack.max((s.margin - samples[i + 1].margin).abs());
        }
        let p = MarginPoint {
            t,
            sigma: s.ln_sigma.exp(),
            ln_sigma: s.ln_sigma,
            margin: s.margin,
            budget: s.err + slack,
        };
        let cert = p.margin - p.budget;
        if worst.is_none_or(|w| p.margin < w.margin || p.margin.is_nan()) {
            worst = Some(p);
        }
        if worst_cert.is_none_or(|w| cert < w.margin - w.budget || cert.is_nan()) {
            worst_cert = Some(p);
        }
        if keep {
            kept.push(p);
        }
    }
    let empty = MarginPoint {
        t,
        sigma: f64::NAN,
        ln_sigma: f64::NAN,
        margin: f64::NAN,
        budget: 0.0,
    };
    SliceSummary {
        worst: worst.unwrap_or(empty),
        worst_cert: worst_cert.unwrap_or(empty),
        points: samples.len(),
        kept,
    }
}

pub(crate) struct ReportHeader {
    pub kind: &'static str,
    pub mode: Mode,
    pub params: serde_json::Value,
    pub grid: GridReport,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

pub(crate) fn finalize(header: ReportHeader, slices: Vec<SliceSummary>) -> VerificationReport {
    let mut grid = header.grid;
    grid.points = slices.iter().map(|s| s.points).sum();
    let mut argmin = slices[0].worst;
    let mut cert_at = slices[0].worst_cert;
    let mut margins = Vec::new();
    for s in &slices {
        if s.worst.margin < argmin.margin || s.worst.margin.is_nan() {
            argmin = s.worst;
        }
        if s.worst_cert.margin - s.worst_cert.budget < cert_at.margin - cert_at.budget
            || s.worst_cert.margin.is_nan()
        {
            cert_at = s.worst_cert;
        }
        margins.extend_from_slice(&s.kept);
    }
    let min_certificate = cert_at.margin - cert_at.budget;
    VerificationReport {
        kind: header.kind.to_string(),
        mode: header.mode,
        params: header.params,
        grid,
        min_margin: argmin.margin,
        argmin,
        min_certificate,
        worst_certificate_at: cert_at,
        certified: min_certificate > 0.0,
        constants: header.constants,
        notes: header.notes,
        margins,
    }
}

/// Log-spaced `σ` grid on `[lo, hi]` with points placed just beside each
/// breakpoint, never on it; the second field is the smooth segment index.
pub(crate) fn sigma_grid(lo: f64, hi: f64, n: usize, breakpoints: &[f64]) -> Vec<(f64, u32)> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut pts: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    for &bp in breakpoints {
        if bp > lo && bp < hi {
            pts.push(bp * (1.0 - 1e-7));
            pts.push(bp * (1.0 + 1e-7));
        }
    }
    pts.retain(|&s| breakpoints.iter().all(|&bp| (s - bp).abs() > 1e-9 * bp));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.into_iter()
        .map(|s| (s, breakpoints.iter().filter(|&&bp| bp < s).count() as u32))
        .collect()
}

/// Only grids up to this many points keep per-point margins.
pub(crate) const KEEP_LIMIT: usize = 200_000;

/// An inequality prepared for a fixed parameter set; only the searched
/// constant may vary between checks.
pub trait Prepared: Send + Sync {
    /// Constant taken from the parameters (or the kind's default).
    fn default_constant(&self) -> f64;
    fn check(&self, constant: f64) -> VerificationReport;
}

pub trait Inequality: Send + Sync {
    fn name(&self) -> &'static str;
    /// Name of the constant searched by [`certify_constant`], if any.
    fn constant_name(&self) -> Option<&'static str>;
    fn prepare(&self, params: &InequalityParams, grid: &GridSpec) -> Result<Box<dyn Prepared>>;
}

/// Inequality kinds keyed by name.
pub struct Registry {
    kinds: BTreeMap<String, Box<dyn Inequality>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            kinds: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, kind: Box<dyn Inequality>) {
        self.kinds.insert(kind.name().to_string(), kind);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Inequality> {
        self.kinds
            .get(&name.to_ascii_uppercase())
            .map(|k| k.as_ref())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown inequality kind {name:?}; known: {:?}",
                    self.names()
                ))
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.kinds.keys().map(|k| k.as_str()).collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(thm2::Thm2));
        r.register(Box::new(thm3::Thm3));
        r.register(Box::new(thm4::Thm4 {
            regime: Regime::Critical,
        }));
        r.register(Box::new(thm4::Thm4 {
            regime: Regime::Supercritical,
        }));
        r.register(Box::new(hyp1::Hyp1));
        r
    }
}

pub fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(Registry::default)
}

pub fn check_inequality(
    kind: &str,
    params: &InequalityParams,
    grid: &GridSpec,
) -> Result<VerificationReport> {
    grid.validate()?;
    let prepared = registry().get(kind)?.prepare(params, grid)?;
    Ok(prepared.check(prepared.default_constant()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantSearch {
    pub kind: String,
    pub constant_name: String,
    /// Smallest certifying constant, or `None` when nothing up to the cap works.
    pub constant: Option<f64>,
    pub checks: usize,
    pub report: VerificationReport,
}

/// Largest constant tried by [`certify_constant`].
pub const CONSTANT_CAP: f64 = 1e6;

/// Smallest constant certifying the inequality: doubling from 1 up to
/// [`CONSTANT_CAP`], then 40 bisection steps.
pub fn certify_constant(
    kind: &str,
    params: &InequalityParams,
    grid: &GridSpec,
) -> Result<ConstantSearch> {
    grid.validate()?;
    let ineq = registry().get(kind)?;
    let name = ineq
        .constant_name()
        .ok_or_else(|| Error::Parameter(format!("{} has no constant to certify", ineq.name())))?;
    let prepared = ineq.prepare(params, grid)?;
    let mut checks = 1;
    let zero = prepared.check(0.0);
    let done = |constant, checks, report| ConstantSearch {
        kind: ineq.name().to_string(),
        constant_name: name.to_string(),
        constant,
        checks,
        report,
    };
    if zero.certified {
        return Ok(done(Some(0.0), checks, zero));
    }
    let mut hi = 1.0;
    let mut hi_report = loop {
        let rep = prepared.check(hi);
        checks += 1;
        if rep.certified {
            break rep;
        }
        if hi >= CONSTANT_CAP {
            return Ok(done(None, checks, rep));
        }
        hi = (hi * 2.0).min(CONSTANT_CAP);
    };
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let rep = prepared.check(mid);
        checks += 1;
        if rep.certified {
            hi = mid;
            hi_report = rep;
        } else {
            lo = mid;
        }
    }
    Ok(done(Some(hi), checks, hi_report))
}

/// Smallest-distance condition of each kind, checked on a fine log grid in
/// `(0, δ)` with the displayed bounds.
fn small_distance_ok(kind: &str, p: &InequalityParams, r: f64, delta: f64) -> bool {
    let (a, b) = (p.alpha, p.beta);
    let k = dissipation_coefficient(a, p.c_alpha);
    let n = 400;
    (0..n).all(|i| {
        let s = (1e-10f64.ln() + (delta.ln() - 1e-10f64.ln()) * i as f64 / (n - 1) as f64).exp()
            * (1.0 - 1e-9);
        match kind {
            "THM2" => {
                let rho = p.rho;
                let sio = 6.0 * s - 2.0 * s.powf(rho) * (3.0 * s).ln() + s.powf(rho) / rho;
                3.0 / s.sqrt() - 4.0 * s > p.c_k * sio
            }
            "THM3" => {
                let diss = k * (2.0 - r) * (1.0 - r) * s.powf(2.0 - 2.0 * a - r);
                diss > s.powf(b) * (1.0 - (2.0 - r) * s.powf(1.0 - r))
            }
            _ => {
                let diss = k * (2.0 - r) * (1.0 - r) * s.powf(2.0 - 2.0 * a - r);
                diss > p.c_d * thm4::pressure_bound_small(b, delta, s)
            }
        }
    })
}

/// `(r, δ)` for a kind: `r` from the midpoint rule (`1/2` for the Burgers
/// modulus) and the largest `δ ∈ {1/4, 1/8, …}` meeting the construction and
/// small-distance conditions.
pub fn feasible_delta(alpha: f64, beta: f64, c_alpha: f64, kind: &str) -> Result<(f64, f64)> {
    let params = InequalityParams {
        alpha,
        beta,
        c_alpha,
        ..Default::default()
    };
    feasible_delta_with(kind, &params)
}

pub fn feasible_delta_with(kind: &str, p: &InequalityParams) -> Result<(f64, f64)> {
    let kind = kind.to_ascii_uppercase();
    let (alpha, beta) = (p.alpha, p.beta);
    let (r, thm2_like) = match kind.as_str() {
        "THM2" | "HYP1" => (0.5, true),
        "THM3" | "THM4_CRIT" | "THM4_SUPER" => {
            if !(beta + 2.0 * alpha - 1.0 > 0.0) {
                return Err(Error::Parameter(format!(
                    "beta+2alpha-1 must be positive (got {:.6}): (0,1)∩(2-2alpha-beta,1) is empty",
                    beta + 2.0 * alpha - 1.0
                )));
            }
            (p.resolved_r()?, false)
        }
        other => return Err(Error::Config(format!("no delta rule for kind {other:?}"))),
    };
    let k = dissipation_coefficient(alpha, p.c_alpha);
    for j in 2..=40 {
        let delta = 0.5f64.powi(j);
        let ok = if thm2_like {
            let target = 2.0 * delta - delta.powf(1.5);
            target < 1.0 && small_distance_ok("THM2", p, r, delta)
        } else if kind == "THM3" {
            let closed = delta.powf(beta + 2.0 * alpha + r - 2.0) <= (2.0 - r) * (1.0 - r) * k;
            let slope = 0.5 - (2.0 - r) * delta.powf(1.0 - r) > 0.0;
            closed && slope && small_distance_ok("THM3", p, r, delta)
        } else {
            let junction = (2.0 - r) * delta.powf(1.0 - r) <= 1.0;
            junction && small_distance_ok("THM4", p, r, delta)
        };
        if ok {
            return Ok((r, delta));
        }
    }
    Err(Error::Construction(format!(
        "no delta >= 2^-40 satisfies the {kind} conditions"
    )))
}

pub(crate) fn resolve_delta(kind: &str, p: &InequalityParams) -> Result<(f64, f64)> {
    match p.delta {
        Some(d) => {
            let r = match kind {
                "THM2" | "HYP1" => 0.5,
                _ => p.resolved_r()?,
            };
            Ok((r, d))
        }
        None => feasible_delta_with(kind, p),
    }
}

pub(crate) fn base_constants(p: &InequalityParams, r: f64, delta: f64) -> BTreeMap<String, f64> {
    let mut c = BTreeMap::new();
    c.insert("r".into(), r);
    c.insert("delta".into(), delta);
    c.insert("C_alpha".into(), p.c_alpha);
    c
}

pub(crate) fn params_json(p: &InequalityParams, r: f64, delta: f64) -> serde_json::Value {
    let mut v = serde_json::to_value(p).unwrap_or(serde_json::Value::Null);
    if let Some(o) = v.as_object_mut() {
        o.insert("delta".into(), delta.into());
        o.insert("r".into(), r.into());
    }
    v
}
