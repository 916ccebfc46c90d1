//! Time march of the drift-hypothesis inequality run as an equality,
//! `∂tΩ = 4∂²Ω + Ω∂Ω + H[Ω]`, on a mesh graded towards `ξ = 0`.
//!
//! Diffusion is backward Euler; the Burgers and nonlocal terms are explicit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::{Modulus, Tabulated};
use crate::nonlocal::hypothesis_functional_on_nodes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarchConfig {
    #[serde(rename = "C_d")]
    pub c_d: f64,
    pub xi_max: f64,
    /// Number of mesh cells.
    pub m: usize,
    /// Grading strength; 0 gives a uniform mesh.
    pub kappa: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Steps between recorded samples.
    pub record_every: usize,
    pub max_halvings: u32,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            c_d: 0.0,
            xi_max: 40.0,
            m: 4000,
            kappa: 3.0,
            dt: 1e-3,
            t_max: 1.0,
            record_every: 10,
            max_halvings: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchSample {
    pub t: f64,
    /// `∂ξΩ(t, 0)`
    pub slope0: f64,
    /// `max_ξ |Ω(t, ξ) − Ω(0, ξ)|`
    pub max_change: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub property: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarchTrace {
    pub samples: Vec<MarchSample>,
    /// Reached `t_max` with every modulus property intact.
    pub completed: bool,
    pub violation: Option<Violation>,
    pub steps: usize,
    /// `Ω(t, 0)` was exactly zero after every step.
    pub boundary_exact: bool,
    #[serde(skip)]
    pub xi: Vec<f64>,
    #[serde(skip)]
    pub omega: Vec<f64>,
}

fn graded_mesh(xi_max: f64, m: usize, kappa: f64) -> Vec<f64> {
    (0..=m)
        .map(|j| {
            let q = j as f64 / m as f64;
            if kappa.abs() < 1e-12 {
                xi_max * q
            } else {
                xi_max * (kappa * q).exp_m1() / kappa.exp_m1()
            }
        })
        .collect()
}

/// Second-order one-sided `f′(0)` from `f(0) = 0`, `f(a)`, `f(b)`.
fn slope_at_zero(x: &[f64], f: &[f64]) -> f64 {
    let (a, b) = (x[1], x[2]);
    (f[1] * b * b - f[2] * a * a) / (a * b * (b - a))
}

/// Solves the tridiagonal system `lo_i u_{i−1} + di_i u_i + up_i u_{i+1} = rhs_i`.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &mut [f64]) {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut beta = di[0];
    c[0] = up[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = di[i] - lo[i] * c[i - 1];
        c[i] = up[i] / beta;
        rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

fn monotone_violation(f: &[f64]) -> Option<String> {
    let scale = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = -1e-12 * scale;
    f.windows(2)
        .enumerate()
        .find(|(_, w)| !(w[1] - w[0] >= tol))
        .map(|(i, w)| format!("Omega decreases by {:.3e} at node {}", w[0] - w[1], i + 1))
}

/// Marches `Ω₀` forward, stopping at the first loss of a modulus property.
pub fn hypothesis_march(omega0: &dyn Modulus, cfg: &MarchConfig) -> Result<MarchTrace> {
    if !(cfg.xi_max > 0.0 && cfg.m >= 4 && cfg.dt > 0.0 && cfg.t_max >= 0.0 && cfg.c_d >= 0.0) {
        return Err(Error::Parameter(
            "march needs xi_max > 0, m >= 4, dt > 0, t_max >= 0, C_d >= 0".into(),
        ));
    }
    let x = graded_mesh(cfg.xi_max, cfg.m, cfg.kappa);
    let n = x.len();
    let mut f: Vec<f64> = x
        .iter()
        .map(|&s| if s == 0.0 { 0.0 } else { omega0.value(s) })
        .collect();
    if omega0.value(0.0) != 0.0 {
        return Err(Error::Domain("Omega0(0) must vanish".into()));
    }
    if let Some(d) = monotone_violation(&f) {
        return Err(Error::Domain(format!(
            "initial profile is not a modulus: {d}"
        )));
    }
    let f0 = f.clone();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let record_every = cfg.record_every.max(1);
    let mut dt = cfg.dt;
    let mut halvings = 0;
    let mut t = 0.0;
    let mut steps = 0;
    let mut samples = vec![MarchSample {
        t,
        slope0: slope_at_zero(&x, &f),
        max_change: 0.0,
        dt,
    }];
    let mut violation = None;
    let mut boundary_exact = true;
    let tol_end = 1e-12 * cfg.t_max.max(1.0);

    while t < cfg.t_max - tol_end {
        let step = dt.min(cfg.t_max - t);
        let cfl = (1..n)
            .map(|i| step * f[i].abs() / h[i - 1].min(*h.get(i).unwrap_or(&h[i - 1])))
            .fold(0.0, f64::max);
        if cfl > 0.9 {
            if halvings >= cfg.max_halvings {
                violation = Some(Violation {
                    t,
                    property: "cfl".into(),
                    detail: format!("CFL number {cfl:.3} after {halvings} halvings (dt={dt:.3e})"),
                });
                break;
            }
            dt *= 0.5;
            halvings += 1;
            continue;
        }
        let nonlocal = if cfg.c_d > 0.0 {
            let mut y = f.clone();
            for i in 1..n {
                y[i] = y[i].max(y[i - 1]);
            }
            hypothesis_functional_on_nodes(&Tabulated::new(x.clone(), y)?, cfg.c_d)
        } else {
            vec![0.0; n]
        };
        // unknowns f[1..=m]; Neumann ghost f[m+1] = f[m−1]
        let m = n - 1;
        let mut lo = vec![0.0; m];
        let mut di = vec![0.0; m];
        let mut up = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 1..=m {
            let hm = h[i - 1];
            let hp = if i < m { h[i] } else { hm };
            let (a, c) = (2.0 / (hm * (hm + hp)), 2.0 / (hp * (hm + hp)));
            let adv = if i < m {
                (hm * hm * f[i + 1] - hp * hp * f[i - 1] + (hp * hp - hm * hm) * f[i])
                    / (hm * hp * (hm + hp))
            } else {
                0.0
            };
            let k = i - 1;
            let diff = 4.0 * step;
            di[k] = 1.0 + diff * (a + c);
            if i > 1 {
                lo[k] = -diff * a;
            }
            if i < m {
                up[k] = -diff * c;
            } else {
                lo[k] = -diff * (a + c);
            }
            rhs[k] = f[i] + step * (f[i] * adv + nonlocal[i]);
        }
        if m == 1 {
            lo[0] = 0.0;
        }
        thomas(&lo, &di, &up, &mut rhs);
        f[0] = 0.0;
        f[1..].copy_from_slice(&rhs);
        t += step;
        steps += 1;
        boundary_exact &= f[0] == 0.0;
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            violation = Some(Violation {
                t,
                property: "finite".into(),
                detail: format!("non-finite value at node {i}"),
            });
            break;
        }
        if let Some(d) = monotone_violation(&f) {
            violation = Some(Violation {
                t,
                property: "monotonicity".into(),
                detail: d,
            });
            break;
        }
        if steps % record_every == 0 || t >= cfg.t_max - tol_end {
            let max_change = f
                .iter()
                .zip(&f0)
                .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            samples.push(MarchSample {
                t,
                slope0: slope_at_zero(&x, &f),
                max_change,
                dt,
            });
        }
    }
    if violation.is_some() {
        let max_change = f
            .iter()
            .zip(&f0)
            .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        if samples.last().map(|s| s.t) != Some(t) {
            samples.push(MarchSample {
                t,
                slope0: slope_at_zero(&x, &f),
                max_change,
                dt,
            });
        }
    }
    Ok(MarchTrace {
        samples,
        completed: violation.is_none(),
        violation,
        steps,
        boundary_exact,
        xi: x,
        omega: f,
    })
}
