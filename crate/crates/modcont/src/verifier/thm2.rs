//! Burgers–Hilbert family: `Ω = λω(λξ)` with the double-exponential `λ`.
//!
//! Divided by `λ³`, the inequality at `σ = λξ` is
//! `C₀ℓλ^{−2}(ω + σω′) − 4ω″ ≥ ωω′ + C_Kλ^{−2}I(σ)` with `ℓ = log λ`; the
//! far-field bound is kept divided by `λ` only.

use rayon::prelude::*;

use super::*;
use crate::moduli::{build_thm2_modulus, Modulus, PieceKind, PiecewiseModulus};
use crate::nonlocal::sio_functional;
use crate::quad::{integrate_split, Tol};

pub(crate) struct Thm2;

/// Beyond `δ − μ + 20` the tanh piece equals 1 to double precision.
const SATURATION: f64 = 20.0;

struct Point {
    sigma: f64,
    segment: u32,
    /// `ln(ω + σω′)`
    ln_drift: f64,
    /// `ln(−4ω″)`
    ln_diss: f64,
    /// `ln(ωω′)`
    ln_burgers: f64,
    /// `ln I(σ)` (or its bound) and the log of its quadrature error.
    ln_sio: f64,
    ln_sio_err: f64,
}

struct Prep {
    p: InequalityParams,
    grid: GridSpec,
    r: f64,
    delta: f64,
    sigma_sat: f64,
    points: Vec<Point>,
    /// `ln(ω)` used by the far-field bound.
    ln_omega_far: f64,
    /// Far-field `I` bound without the `ln σ_max` part, and its error.
    far_sio: f64,
    far_sio_err: f64,
}

fn tanh_shift(omega: &PiecewiseModulus) -> f64 {
    match omega.pieces()[1].kind {
        PieceKind::TanhShift { shift, .. } => shift,
        _ => unreachable!("second piece of the Burgers modulus is a tanh"),
    }
}

impl Inequality for Thm2 {
    fn name(&self) -> &'static str {
        "THM2"
    }

    fn constant_name(&self) -> Option<&'static str> {
        Some("C0")
    }

    fn prepare(&self, params: &InequalityParams, grid: &GridSpec) -> Result<Box<dyn Prepared>> {
        let p = params.clone();
        if !(p.rho > 0.0 && p.rho <= 1.0) {
            return Err(Error::Parameter(format!(
                "rho must lie in (0,1], got {}",
                p.rho
            )));
        }
        if !(p.c_k >= 0.0) || !(p.l > 0.0) || p.dim == 0 {
            return Err(Error::Parameter(
                "C_K >= 0, L > 0 and dim >= 1 are required".into(),
            ));
        }
        let (r, delta) = resolve_delta("THM2", &p)?;
        if p.mode == Mode::Conservative && 3.0 * delta > 1.0 {
            return Err(Error::Parameter(
                "the conservative bounds need 3*delta <= 1".into(),
            ));
        }
        let omega = build_thm2_modulus(delta, None, p.lambda0, 0.0)?.omega;
        let sigma_sat = delta - tanh_shift(&omega) + SATURATION;
        let rho = p.rho;
        let pts = sigma_grid(grid.sigma_min, sigma_sat, grid.n_sigma, &[delta]);
        let points = pts
            .par_iter()
            .map(|&(s, segment)| {
                let (ln_sio, ln_sio_err) = match p.mode {
                    Mode::Exact => {
                        let f = sio_functional(&omega, rho, s, 1.0)?;
                        (f.value.ln(), f.est_error.ln())
                    }
                    Mode::Conservative => {
                        let bound = if s < delta {
                            6.0 * s - 2.0 * s.powf(rho) * (3.0 * s).ln() + s.powf(rho) / rho
                        } else {
                            2.0 * delta + (3.0 * s / delta).ln() + 1.0 / rho
                        };
                        (bound.ln(), f64::NEG_INFINITY)
                    }
                };
                let (ln_drift, ln_diss, ln_burgers) = match (p.mode, s < delta) {
                    (Mode::Exact, _) => (
                        (omega.value(s) + s * omega.d1(s)).ln(),
                        4f64.ln() + omega.ln_neg_d2(s),
                        omega.value(s).ln() + omega.ln_d1(s),
                    ),
                    (Mode::Conservative, true) => {
                        (f64::NEG_INFINITY, (3.0 / s.sqrt()).ln(), (4.0 * s).ln())
                    }
                    (Mode::Conservative, false) => (
                        omega.value(delta).ln(),
                        4f64.ln() + omega.ln_neg_d2(s),
                        omega.value(s).ln() + omega.ln_d1(s),
                    ),
                };
                Ok(Point {
                    sigma: s,
                    segment,
                    ln_drift,
                    ln_diss,
                    ln_burgers,
                    ln_sio,
                    ln_sio_err,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (ln_omega_far, far_sio, far_sio_err) = match p.mode {
            Mode::Exact => {
                let tol = Tol {
                    abs: 1e-15,
                    rel: 1e-12,
                    max_intervals: 6000,
                };
                let a = integrate_split(
                    |eta| omega.value(eta) / eta,
                    0.0,
                    3.0 * sigma_sat,
                    &[delta],
                    tol,
                );
                (
                    omega.value(sigma_sat).ln(),
                    a.value - sigma_sat.ln() + 3f64.powf(-rho) / rho,
                    a.error,
                )
            }
            Mode::Conservative => (
                omega.value(delta).ln(),
                2.0 * delta + 3f64.ln() - delta.ln() + 1.0 / rho,
                0.0,
            ),
        };
        Ok(Box::new(Prep {
            p,
            grid: *grid,
            r,
            delta,
            sigma_sat,
            points,
            ln_omega_far,
            far_sio,
            far_sio_err,
        }))
    }
}

impl Prepared for Prep {
    fn default_constant(&self) -> f64 {
        self.p.c0.unwrap_or(1.0)
    }

    fn check(&self, c0: f64) -> VerificationReport {
        let p = &self.p;
        let g = &self.grid;
        let ln_ln_l0 = p.lambda0.ln().ln();
        let ln_box = (2.0 * p.l * (p.dim as f64).sqrt()).ln();
        let ln_ck = p.c_k.ln();
        let ln_c0 = c0.ln();
        let nt = g.n_t.max(2);
        let times: Vec<f64> = (0..nt)
            .map(|k| g.t_max * k as f64 / (nt - 1) as f64)
            .collect();
        let mut notes = vec![
            "margins divided by lambda^3 (far field by lambda); sigma ranges over (0, 2L*sqrt(d)*lambda(t)] at each sampled t".to_string(),
            "the lower bound of P-N is monotone or concave in log(lambda), so slices at t=0 and t=T bound every t"
                .to_string(),
        ];
        let overflow = c0 * g.t_max > 700.0;
        if overflow {
            notes.push(format!(
                "C0*T = {:.3e} overflows log(lambda); not certifiable in double precision",
                c0 * g.t_max
            ));
        }
        let keep = self.points.len() * nt <= KEEP_LIMIT;
        let slices: Vec<SliceSummary> = times
            .par_iter()
            .map(|&t| {
                let ln_ell = ln_ln_l0 + c0 * t;
                let ell = ln_ell.exp();
                let ln_sigma_max = ln_box + ell;
                let mut samples = Vec::with_capacity(self.points.len() + 1);
                for pt in self
                    .points
                    .iter()
                    .filter(|pt| pt.sigma.ln() <= ln_sigma_max)
                {
                    // divided by λ² so the dominant terms stay O(1) in log form
                    let mut terms = Terms::new();
                    terms.pos_ln(ln_c0 + ln_ell - 2.0 * ell + pt.ln_drift);
                    terms.pos_ln(pt.ln_diss);
                    terms.neg_ln(pt.ln_burgers);
                    terms.neg_ln(ln_ck - 2.0 * ell + pt.ln_sio);
                    terms.err_ln(ln_ck - 2.0 * ell + pt.ln_sio_err);
                    samples.push(Sample::new(pt.sigma.ln(), pt.segment, &terms));
                }
                if ln_sigma_max > self.sigma_sat.ln() {
                    // P ≥ C₀ℓω(σ_sat) and I(σ) ≤ I-bound(σ_max) on [σ_sat, σ_max]
                    let mut terms = Terms::new();
                    terms.pos_ln(ln_c0 + ln_ell + self.ln_omega_far);
                    terms.neg_ln(ln_ck + (self.far_sio + ln_sigma_max).ln());
                    terms.err_ln(ln_ck + self.far_sio_err.ln());
                    samples.push(Sample::new(ln_sigma_max, u32::MAX, &terms));
                }
                if overflow {
                    for s in &mut samples {
                        s.margin = f64::NAN;
                    }
                }
                reduce_slice(t, &samples, keep)
            })
            .collect();
        let mut constants = base_constants(p, self.r, self.delta);
        constants.insert("C0".into(), c0);
        constants.insert("C_K".into(), p.c_k);
        constants.insert("lambda0".into(), p.lambda0);
        let header = ReportHeader {
            kind: "THM2",
            mode: p.mode,
            params: params_json(p, self.r, self.delta),
            grid: GridReport {
                sigma_min: g.sigma_min,
                ln_sigma_max: ln_box + (ln_ln_l0 + c0 * g.t_max).exp(),
                n_sigma: self.points.len(),
                t_min: 0.0,
                t_max: g.t_max,
                n_t: nt,
                points: 0,
            },
            constants,
            notes,
        };
        let mut report = finalize(header, slices);
        if overflow {
            report.certified = false;
        }
        report
    }
}
