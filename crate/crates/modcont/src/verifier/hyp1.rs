//! Drift-hypothesis inequality for `Ω = λω(λξ)` with the double-exponential `λ`.
//!
//! Divided by `λ³`: `C₀ℓλ^{−2}(ω + σω′) − 4ω″ ≥ ωω′ + H(σ)` with `H` the
//! hypothesis functional. `ℓλ^{−2}` decreases in `t`, so the last time slice
//! is the binding one.

use rayon::prelude::*;

use super::*;
use crate::moduli::{build_thm2_modulus, Modulus, PiecewiseModulus};
use crate::nonlocal::hypothesis_functional;

pub(crate) struct Hyp1;

/// Initial profile of a drift-hypothesis check or march.
pub fn hypothesis_profile(profile: &HypProfile, lambda0: f64) -> Result<PiecewiseModulus> {
    match *profile {
        HypProfile::Tanh { amp, rate } => {
            if !(amp > 0.0 && rate > 0.0) {
                return Err(Error::Parameter(
                    "tanh profile needs amp > 0 and rate > 0".into(),
                ));
            }
            Ok(PiecewiseModulus::tanh_profile(amp, rate))
        }
        HypProfile::Thm2 { delta } => {
            Ok(build_thm2_modulus(delta, None, lambda0.max(std::f64::consts::E), 0.0)?.omega)
        }
    }
}

struct Point {
    sigma: f64,
    segment: u32,
    ln_drift: f64,
    ln_diss: f64,
    ln_burgers: f64,
    ln_h: f64,
    ln_h_err: f64,
}

struct Prep {
    p: InequalityParams,
    grid: GridSpec,
    points: Vec<Point>,
}

impl Inequality for Hyp1 {
    fn name(&self) -> &'static str {
        "HYP1"
    }

    fn constant_name(&self) -> Option<&'static str> {
        Some("C0")
    }

    fn prepare(&self, params: &InequalityParams, grid: &GridSpec) -> Result<Box<dyn Prepared>> {
        let p = params.clone();
        if !(p.lambda0 >= std::f64::consts::E) {
            return Err(Error::Parameter(format!(
                "lambda0 must be >= e, got {}",
                p.lambda0
            )));
        }
        if !(p.c_d >= 0.0) {
            return Err(Error::Parameter("C_d must be nonnegative".into()));
        }
        let omega = hypothesis_profile(&p.profile, p.lambda0)?;
        let pts = sigma_grid(
            grid.sigma_min,
            grid.sigma_max,
            grid.n_sigma,
            &omega.breakpoints(),
        );
        let points = pts
            .par_iter()
            .map(|&(s, segment)| {
                let (ln_h, ln_h_err) = if p.c_d > 0.0 {
                    let h = hypothesis_functional(&omega, s, p.c_d)?;
                    (h.value.ln(), h.est_error.ln())
                } else {
                    (f64::NEG_INFINITY, f64::NEG_INFINITY)
                };
                Ok(Point {
                    sigma: s,
                    segment,
                    ln_drift: (omega.value(s) + s * omega.d1(s)).ln(),
                    ln_diss: 4f64.ln() + omega.ln_neg_d2(s),
                    ln_burgers: omega.value(s).ln() + omega.ln_d1(s),
                    ln_h,
                    ln_h_err,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(Prep {
            p,
            grid: *grid,
            points,
        }))
    }
}

impl Prepared for Prep {
    fn default_constant(&self) -> f64 {
        self.p.c0.unwrap_or(0.0)
    }

    fn check(&self, c0: f64) -> VerificationReport {
        let p = &self.p;
        let g = &self.grid;
        let nt = g.n_t.max(2);
        let ln_ln_l0 = p.lambda0.ln().ln();
        let keep = self.points.len() * nt <= KEEP_LIMIT;
        let slices = (0..nt)
            .into_par_iter()
            .map(|k| {
                let t = g.t_max * k as f64 / (nt - 1) as f64;
                let ln_ell = ln_ln_l0 + c0 * t;
                let ln_rate = c0.ln() + ln_ell - 2.0 * ln_ell.exp();
                let samples: Vec<Sample> = self
                    .points
                    .iter()
                    .map(|pt| {
                        let mut terms = Terms::new();
                        terms.pos_ln(ln_rate + pt.ln_drift);
                        terms.pos_ln(pt.ln_diss);
                        terms.neg_ln(pt.ln_burgers);
                        terms.neg_ln(pt.ln_h);
                        terms.err_ln(pt.ln_h_err);
                        Sample::new(pt.sigma.ln(), pt.segment, &terms)
                    })
                    .collect();
                reduce_slice(t, &samples, keep)
            })
            .collect();
        let mut constants = BTreeMap::new();
        constants.insert("C0".into(), c0);
        constants.insert("C_d".into(), p.c_d);
        constants.insert("lambda0".into(), p.lambda0);
        let mut notes = vec!["margins divided by lambda^3".to_string()];
        if p.mode == Mode::Conservative {
            notes.push("no displayed bounds exist for this kind; exact terms used".into());
        }
        let header = ReportHeader {
            kind: "HYP1",
            mode: p.mode,
            params: serde_json::to_value(p).unwrap_or(serde_json::Value::Null),
            grid: GridReport {
                sigma_min: g.sigma_min,
                ln_sigma_max: g.sigma_max.ln(),
                n_sigma: self.points.len(),
                t_min: 0.0,
                t_max: g.t_max,
                n_t: nt,
                points: 0,
            },
            constants,
            notes,
        };
        finalize(header, slices)
    }
}
