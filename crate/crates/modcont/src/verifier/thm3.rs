//! Drift-diffusion family: `Ω = Bω(Bg^γξ)`.
//!
//! With `σ = Bg^γξ` the drift factor `g` cancels and the inequality reads
//! `−D_α[ω](σ) ≥ B^{1−β−2α}σ^βω′(σ)`; the nonnegative `∂tΩ` term is dropped.

use rayon::prelude::*;

use super::*;
use crate::moduli::{build_thm3_modulus, DriftEnvelope, Modulus};
use crate::nonlocal::frac_dissipation;

pub(crate) struct Thm3;

struct Prep {
    report: VerificationReport,
}

impl Inequality for Thm3 {
    fn name(&self) -> &'static str {
        "THM3"
    }

    fn constant_name(&self) -> Option<&'static str> {
        None
    }

    fn prepare(&self, params: &InequalityParams, grid: &GridSpec) -> Result<Box<dyn Prepared>> {
        let p = params.clone();
        let (r, delta) = resolve_delta("THM3", &p)?;
        let drift = p
            .drift
            .clone()
            .unwrap_or_else(|| DriftEnvelope::constant(p.beta.clamp(0.0, 0.999), 1.0));
        let tdm = build_thm3_modulus(p.alpha, p.beta, p.b, drift, delta, p.tail_constant())?;
        let omega = tdm.omega;
        let (alpha, beta) = (p.alpha, p.beta);
        let k = dissipation_coefficient(alpha, p.c_alpha);
        let ln_b_factor = (1.0 - beta - 2.0 * alpha) * p.b.ln();
        let pts = sigma_grid(grid.sigma_min, grid.sigma_max, grid.n_sigma, &[delta]);
        let samples = pts
            .par_iter()
            .map(|&(s, segment)| {
                let mut terms = Terms::new();
                match p.mode {
                    Mode::Exact if alpha < 1.0 => {
                        let d = frac_dissipation(&omega, alpha, s, p.c_alpha)?;
                        terms.signed(-d.value, 0.0);
                        terms.err_ln(d.est_error.ln());
                    }
                    _ => terms.pos_ln(k.ln() + (2.0 - 2.0 * alpha) * s.ln() + omega.ln_neg_d2(s)),
                }
                terms.neg_ln(ln_b_factor + beta * s.ln() + omega.ln_d1(s));
                Ok(Sample::new(s.ln(), segment, &terms))
            })
            .collect::<Result<Vec<_>>>()?;
        let keep = samples.len() <= KEEP_LIMIT;
        let slice = reduce_slice(0.0, &samples, keep);
        let mut constants = base_constants(&p, r, delta);
        constants.insert("B".into(), p.b);
        constants.insert("K_alpha".into(), k);
        constants.insert("tail_constant".into(), p.tail_constant());
        let header = ReportHeader {
            kind: "THM3",
            mode: p.mode,
            params: params_json(&p, r, delta),
            grid: GridReport {
                sigma_min: grid.sigma_min,
                ln_sigma_max: grid.sigma_max.ln(),
                n_sigma: samples.len(),
                t_min: 0.0,
                t_max: 0.0,
                n_t: 1,
                points: 0,
            },
            constants,
            notes: vec!["time-independent after rescaling; g cancels exactly".into()],
        };
        Ok(Box::new(Prep {
            report: finalize(header, vec![slice]),
        }))
    }
}

impl Prepared for Prep {
    fn default_constant(&self) -> f64 {
        0.0
    }

    fn check(&self, _constant: f64) -> VerificationReport {
        self.report.clone()
    }
}
