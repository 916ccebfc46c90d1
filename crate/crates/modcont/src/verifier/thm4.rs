//! Linear NSE family: `Ω = λω(Bμξ)` with the logarithmic-tail modulus.
//!
//! Critical: `λ′ = C·B^{1−β}g^{p*}λ`, `μ = g^γ`; after dividing by
//! `λB^{1−β}g^{p*}` the inequality is `Cω + B^{2α+β−1}(−D_α) ≥ C_d·J`.
//! Supercritical: `log λ = g^{γ_g}·exp(C·B^{1−β}∫g^q)`, `μ = (log λ)^κ`, checked
//! on the time grid with `λ` divided out.

use rayon::prelude::*;

use super::*;
use crate::moduli::{build_thm4_modulus, DriftEnvelope, Modulus, PiecewiseModulus, ScalingLaw};
use crate::nonlocal::{frac_dissipation, nse_pressure_functional_ibp};

pub(crate) struct Thm4 {
    pub regime: Regime,
}

/// `C_β` of the small-distance pressure bound `J ≤ C_βσ^β(−log σ)` on `(0, δ)`.
pub(crate) fn small_distance_c_beta(beta: f64, delta: f64) -> f64 {
    let k = 5.0 + delta.ln() + 2.0 / (beta * (1.0 - beta));
    1.0 + k.max(0.0) / (1.0 / delta).ln()
}

pub(crate) fn pressure_bound_small(beta: f64, delta: f64, s: f64) -> f64 {
    small_distance_c_beta(beta, delta) * s.powf(beta) * (-s.ln())
}

/// `C_β` of the large-distance bound `J ≤ C_βδ^{β−1}ω(σ)` on `(δ, ∞)`.
pub(crate) fn large_distance_c_beta(beta: f64) -> f64 {
    3.0 + (2.0 / beta + 1.0 / (1.0 - beta)) / (1.0 - beta)
}

struct Point {
    sigma: f64,
    segment: u32,
    ln_omega: f64,
    ln_sigma_d1: f64,
    /// `ln(−D_α[ω](σ))` and its error.
    ln_diss: f64,
    ln_diss_err: f64,
    /// `ln J(σ)` and its error.
    ln_j: f64,
    ln_j_err: f64,
}

struct Prep {
    p: InequalityParams,
    grid: GridSpec,
    regime: Regime,
    r: f64,
    delta: f64,
    law: ScalingLaw,
    points: Vec<Point>,
}

fn assemble(
    omega: &PiecewiseModulus,
    p: &InequalityParams,
    delta: f64,
    s: f64,
    segment: u32,
) -> Result<Point> {
    let (alpha, beta) = (p.alpha, p.beta);
    let k = dissipation_coefficient(alpha, p.c_alpha);
    let (ln_diss, ln_diss_err) = match p.mode {
        Mode::Exact if alpha < 1.0 => {
            let d = frac_dissipation(omega, alpha, s, p.c_alpha)?;
            ((-d.value).ln(), d.est_error.ln())
        }
        _ => (
            k.ln() + (2.0 - 2.0 * alpha) * s.ln() + omega.ln_neg_d2(s),
            f64::NEG_INFINITY,
        ),
    };
    let (ln_j, ln_j_err) = match p.mode {
        Mode::Exact => {
            let f = nse_pressure_functional_ibp(omega, beta, 1.0, s, 1.0)?;
            (
                (f.value + s.powf(beta) * omega.d1(s)).ln(),
                f.est_error.ln(),
            )
        }
        Mode::Conservative if s < delta => {
            (pressure_bound_small(beta, delta, s).ln(), f64::NEG_INFINITY)
        }
        Mode::Conservative => (
            (beta - 1.0) * delta.ln() + omega.value(s).ln() + large_distance_c_beta(beta).ln(),
            f64::NEG_INFINITY,
        ),
    };
    Ok(Point {
        sigma: s,
        segment,
        ln_omega: omega.value(s).ln(),
        ln_sigma_d1: s.ln() + omega.ln_d1(s),
        ln_diss,
        ln_diss_err,
        ln_j,
        ln_j_err,
    })
}

impl Inequality for Thm4 {
    fn name(&self) -> &'static str {
        match self.regime {
            Regime::Critical => "THM4_CRIT",
            Regime::Supercritical => "THM4_SUPER",
        }
    }

    fn constant_name(&self) -> Option<&'static str> {
        Some("C_dab")
    }

    fn prepare(&self, params: &InequalityParams, grid: &GridSpec) -> Result<Box<dyn Prepared>> {
        let p = params.clone();
        let (r, delta) = resolve_delta(self.name(), &p)?;
        let drift = p
            .drift
            .clone()
            .unwrap_or_else(|| DriftEnvelope::constant(p.beta, 1.0));
        let tdm = build_thm4_modulus(
            p.alpha,
            p.beta,
            p.b,
            drift,
            self.regime,
            delta,
            p.c_dab.unwrap_or(1.0),
        )?;
        let omega = tdm.omega;
        let pts = sigma_grid(grid.sigma_min, grid.sigma_max, grid.n_sigma, &[delta]);
        let points = pts
            .par_iter()
            .map(|&(s, seg)| assemble(&omega, &p, delta, s, seg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(Prep {
            p,
            grid: *grid,
            regime: self.regime,
            r,
            delta,
            law: tdm.scaling,
            points,
        }))
    }
}

impl Prep {
    fn critical_slice(&self, c: f64, keep: bool) -> SliceSummary {
        let p = &self.p;
        let ln_b_diss = (2.0 * p.alpha + p.beta - 1.0) * p.b.ln();
        let samples: Vec<Sample> = self
            .points
            .iter()
            .map(|pt| {
                let mut terms = Terms::new();
                terms.pos_ln(c.ln() + pt.ln_omega);
                terms.pos_ln(ln_b_diss + pt.ln_diss);
                terms.err_ln(ln_b_diss + pt.ln_diss_err);
                terms.neg_ln(p.c_d.ln() + pt.ln_j);
                terms.err_ln(p.c_d.ln() + pt.ln_j_err);
                Sample::new(pt.sigma.ln(), pt.segment, &terms)
            })
            .collect();
        reduce_slice(0.0, &samples, keep)
    }

    fn supercritical_slice(&self, law: &ScalingLaw, t: f64, keep: bool) -> SliceSummary {
        let p = &self.p;
        let g = law.drift.g(t);
        let ln_b = p.b.ln();
        // λ′/λ = log λ·(γ_g ġ/g + rate) and μ′/μ = κ·(γ_g ġ/g + rate)
        let growth =
            law.g_exp * law.drift.g_dot(t) / g + law.c * p.b.powf(1.0 - p.beta) * g.powf(law.q);
        let ln_ln_lambda = law.ln_ln_lambda(t);
        let ln_mu = law.ln_mu(t);
        let ln_lambda_rate = ln_ln_lambda + growth.ln();
        let ln_mu_rate = law.kappa.ln() + growth.ln();
        let ln_diss_scale = 2.0 * p.alpha * (ln_b + ln_mu);
        let ln_pressure_scale = p.c_d.ln() + (1.0 - p.beta) * (ln_b + ln_mu) + g.ln();
        let samples: Vec<Sample> = self
            .points
            .iter()
            .map(|pt| {
                let mut terms = Terms::new();
                terms.pos_ln(ln_lambda_rate + pt.ln_omega);
                if p.mode == Mode::Exact {
                    terms.pos_ln(ln_mu_rate + pt.ln_sigma_d1);
                }
                terms.pos_ln(ln_diss_scale + pt.ln_diss);
                terms.err_ln(ln_diss_scale + pt.ln_diss_err);
                terms.neg_ln(ln_pressure_scale + pt.ln_j);
                terms.err_ln(ln_pressure_scale + pt.ln_j_err);
                Sample::new(pt.sigma.ln(), pt.segment, &terms)
            })
            .collect();
        reduce_slice(t, &samples, keep)
    }
}

impl Prepared for Prep {
    fn default_constant(&self) -> f64 {
        self.p.c_dab.unwrap_or(1.0)
    }

    fn check(&self, c: f64) -> VerificationReport {
        let p = &self.p;
        let g = &self.grid;
        let (slices, n_t, t_max, notes) = match self.regime {
            Regime::Critical => {
                let keep = self.points.len() <= KEEP_LIMIT;
                let notes =
                    vec!["time-independent after dividing by lambda*B^(1-beta)*g^(p*)".to_string()];
                (vec![self.critical_slice(c, keep)], 1, 0.0, notes)
            }
            Regime::Supercritical => {
                let law = ScalingLaw {
                    c,
                    ..self.law.clone()
                };
                let nt = g.n_t.max(2);
                let keep = self.points.len() * nt <= KEEP_LIMIT;
                let slices = (0..nt)
                    .into_par_iter()
                    .map(|k| {
                        self.supercritical_slice(&law, g.t_max * k as f64 / (nt - 1) as f64, keep)
                    })
                    .collect();
                let notes = vec!["inequality sampled at the time grid points".to_string()];
                (slices, nt, g.t_max, notes)
            }
        };
        let mut constants = base_constants(p, self.r, self.delta);
        constants.insert("C_dab".into(), c);
        constants.insert("C_d".into(), p.c_d);
        constants.insert("B".into(), p.b);
        let header = ReportHeader {
            kind: match self.regime {
                Regime::Critical => "THM4_CRIT",
                Regime::Supercritical => "THM4_SUPER",
            },
            mode: p.mode,
            params: params_json(p, self.r, self.delta),
            grid: GridReport {
                sigma_min: g.sigma_min,
                ln_sigma_max: g.sigma_max.ln(),
                n_sigma: self.points.len(),
                t_min: 0.0,
                t_max,
                n_t,
                points: 0,
            },
            constants,
            notes,
        };
        finalize(header, slices)
    }
}
